//! Runs scripted MiniWob-style episodes with an oracle mock model, then one
//! task that needs more actions than the step limit allows.
//!
//! `cargo run --example miniwob_episode`

use ggb::runner::{
    run_miniwob, scripted_answer_key, EnvAdapter, EnvError, EpisodeConfig, MockBehavior,
    MockPredictor, ScriptedEnv, ScriptedTask,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut tasks = ScriptedTask::builtin();
    tasks.push(ScriptedTask::clicks("click-40-times", 40));
    let names: Vec<String> = tasks.iter().map(|t| t.name.clone()).collect();
    let seeds: Vec<u64> = (0..5).collect();
    let cfg = EpisodeConfig::default();

    let key = scripted_answer_key(&tasks, &seeds, &cfg)?;
    let factory = |_: &str| -> Result<Box<dyn EnvAdapter>, EnvError> {
        Ok(Box::new(ScriptedEnv::new(tasks.clone())))
    };
    let (report, episodes) = run_miniwob(
        &names,
        &seeds,
        &factory,
        &MockPredictor(MockBehavior::Oracle(key)),
        &cfg,
        4,
    )?;

    for e in episodes.iter().filter(|e| e.seed == 0) {
        println!("{:<16} {:?} after {} steps", e.task, e.outcome, e.steps);
    }
    let first = &episodes[0];
    println!(
        "--- first prompt of {}\n{}",
        first.task, first.transcript[0].prompt
    );
    println!("--- answer: {}", first.transcript[0].raw_output);
    println!("mean success: {:?}", report.overall("mean"));
    Ok(())
}
