use std::collections::BTreeMap;

use super::report::{Benchmark, Score, ScoreGroup, ScoreReport};
use super::MetricsError;

/// Per-task success rate over seeds, then the unweighted mean over tasks.
/// Tasks with no recorded seeds are flagged and left out of the mean.
pub fn miniwob_score(results: &BTreeMap<String, Vec<bool>>) -> Result<ScoreReport, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyInput("MiniWob tasks"));
    }
    let mut report = ScoreReport::new(Benchmark::Miniwob);
    let mut rates = Vec::new();
    for (task, seeds) in results {
        let score = Score::ratio(seeds.iter().filter(|s| **s).count(), seeds.len());
        match score {
            Some(s) => rates.push(s.value),
            None => report.flags.push(format!("task {task} has no episodes")),
        }
        let mut g = ScoreGroup::new(task.as_str(), seeds.len());
        g.push("success_rate", score);
        report.groups.push(g);
    }
    report.push_overall("mean", Score::mean(rates));
    Ok(report)
}
