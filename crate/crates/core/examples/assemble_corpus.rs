//! Apportions the default mixture to a smaller budget and assembles a
//! sharded corpus from synthetic per-cell pools.
//!
//! `cargo run --example assemble_corpus [-- BUDGET]`

use ggb::harvest::{allocate, assemble_corpus, MixSpec, SamplePools};
use ggb::sample::{GroundingSample, SampleMeta};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let budget: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(5_000);

    // Largest-remainder apportionment keeps the total exact.
    println!(
        "allocate([1, 1, 1], 100) = {:?}",
        allocate(&[1.0, 1.0, 1.0], 100)
    );

    let mix = MixSpec::default().with_budget(budget).with_seed(3);
    let counts = mix.cell_counts()?;
    for (cell, n) in mix.cells.iter().zip(&counts) {
        println!(
            "{:<8} {:<20} {n:>5}",
            cell.domain.to_string(),
            cell.task.as_str()
        );
    }

    let mut pools = SamplePools::new();
    for cell in &mix.cells {
        for i in 0..budget {
            pools.push(GroundingSample {
                image: format!("{}/{i}.png", cell.domain),
                task: cell.task,
                prompt: format!("prompt {i}"),
                target: format!("({:.2}, 0.50)", (i % 100) as f64 / 100.0),
                meta: SampleMeta {
                    domain: cell.domain,
                    source: "synthetic".into(),
                },
            });
        }
    }

    let out = tempfile::tempdir()?;
    let manifest = assemble_corpus(&pools, &mix, out.path(), 2_000)?;
    for s in &manifest.shards {
        println!("{} {} {}", s.file, s.count, &s.sha256[..16]);
    }
    Ok(())
}
