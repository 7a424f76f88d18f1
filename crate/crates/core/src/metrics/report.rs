use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Screenspot,
    Aitw,
    Mind2web,
    Miniwob,
}

impl Benchmark {
    pub fn as_str(&self) -> &'static str {
        match self {
            Benchmark::Screenspot => "screenspot",
            Benchmark::Aitw => "aitw",
            Benchmark::Mind2web => "mind2web",
            Benchmark::Miniwob => "miniwob",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "screenspot" => Ok(Benchmark::Screenspot),
            "aitw" => Ok(Benchmark::Aitw),
            "mind2web" => Ok(Benchmark::Mind2web),
            "miniwob" => Ok(Benchmark::Miniwob),
            _ => Err(format!("unknown benchmark {s:?}")),
        }
    }
}

/// A ratio with its parts recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub numerator: f64,
    pub denominator: usize,
}

impl Score {
    /// `None` when there is nothing to divide by.
    pub fn ratio(numerator: usize, denominator: usize) -> Option<Score> {
        (denominator > 0).then(|| Score {
            value: numerator as f64 / denominator as f64,
            numerator: numerator as f64,
            denominator,
        })
    }

    /// Mean of `values`, summed in sorted order so the result does not
    /// depend on input order.
    pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<Score> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let sum: f64 = v.iter().sum();
        Some(Score {
            value: sum / v.len() as f64,
            numerator: sum,
            denominator: v.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedScore {
    pub metric: String,
    #[serde(flatten)]
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreGroup {
    pub name: String,
    /// Items in the group.
    pub count: usize,
    pub scores: Vec<NamedScore>,
}

impl ScoreGroup {
    pub fn new(name: impl Into<String>, count: usize) -> Self {
        Self {
            name: name.into(),
            count,
            scores: Vec::new(),
        }
    }

    pub fn push(&mut self, metric: &str, score: Option<Score>) {
        if let Some(score) = score {
            self.scores.push(NamedScore {
                metric: metric.to_string(),
                score,
            });
        }
    }

    pub fn score(&self, metric: &str) -> Option<&Score> {
        self.scores
            .iter()
            .find(|s| s.metric == metric)
            .map(|s| &s.score)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub hits: usize,
    pub misses: usize,
}

/// Distances from predicted points to target centers, split by hit/miss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub bin_width: f64,
    pub bins: Vec<HistogramBin>,
    /// Cases without a usable prediction, which have no distance.
    pub missing: usize,
}

impl DistanceHistogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.hits + b.misses).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,hits,misses\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{:.2},{:.2},{},{}\n",
                b.lo, b.hi, b.hits, b.misses
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub benchmark: Benchmark,
    pub groups: Vec<ScoreGroup>,
    pub overall: Vec<NamedScore>,
    /// Scoring parameters and run bookkeeping.
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    /// Conditions worth a reader's attention, such as empty groups.
    #[serde(default)]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<DistanceHistogram>,
}

impl ScoreReport {
    pub fn new(benchmark: Benchmark) -> Self {
        Self {
            benchmark,
            groups: Vec::new(),
            overall: Vec::new(),
            params: BTreeMap::new(),
            flags: Vec::new(),
            histogram: None,
        }
    }

    pub fn push_overall(&mut self, metric: &str, score: Option<Score>) {
        if let Some(score) = score {
            self.overall.push(NamedScore {
                metric: metric.to_string(),
                score,
            });
        }
    }

    pub fn overall(&self, metric: &str) -> Option<f64> {
        self.overall
            .iter()
            .find(|s| s.metric == metric)
            .map(|s| s.score.value)
    }

    pub fn group(&self, name: &str) -> Option<&ScoreGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Every score in the report, groups first.
    pub fn all_scores(&self) -> impl Iterator<Item = &NamedScore> {
        self.groups
            .iter()
            .flat_map(|g| g.scores.iter())
            .chain(self.overall.iter())
    }
}
