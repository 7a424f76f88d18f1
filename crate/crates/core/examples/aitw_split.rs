//! Instruction-wise train/test split of Android episodes, plus the held-out
//! validation draw.
//!
//! `cargo run --example aitw_split`

use std::collections::BTreeSet;

use ggb::dataprep::{
    select_validation, split_aitw, train_size, EpisodeManifest, DEFAULT_SUBSET_COUNTS,
    DEFAULT_TRAIN_FRAC,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Several trajectories per instruction; only one survives.
    let mut episodes = Vec::new();
    for (subset, n) in DEFAULT_SUBSET_COUNTS {
        for i in 0..n + 150 {
            for copy in 0..1 + i % 3 {
                episodes.push(EpisodeManifest {
                    episode_id: format!("{}-{i}-{copy}", subset.as_str()),
                    instruction: format!("{} instruction {i}", subset.as_str()),
                    subset,
                    step_count: 2 + copy,
                    source: String::new(),
                });
            }
        }
    }
    println!("{} trajectories", episodes.len());

    let mut split = split_aitw(&episodes, &DEFAULT_SUBSET_COUNTS, DEFAULT_TRAIN_FRAC, 42)?;
    // Validation comes from episodes whose instructions are in neither split.
    split.validation_ids = select_validation(&episodes, 100, 42, &split)?;
    for (subset, s) in &split.subsets {
        println!(
            "{:<12} train {:>3} test {:>3}",
            subset.as_str(),
            s.train_ids.len(),
            s.test_ids.len()
        );
    }
    println!("train_size(545, 0.8) = {}", train_size(545, 0.8));
    println!("validation: {} episodes", split.validation_ids.len());

    let instruction = |id: &String| {
        episodes
            .iter()
            .find(|e| &e.episode_id == id)
            .unwrap()
            .instruction
            .clone()
    };
    let train: BTreeSet<_> = split.train_ids().map(instruction).collect();
    let test: BTreeSet<_> = split.test_ids().map(instruction).collect();
    println!("shared instructions: {}", train.intersection(&test).count());
    Ok(())
}
