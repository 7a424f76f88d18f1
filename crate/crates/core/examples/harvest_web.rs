//! Harvests grounding elements and samples from the bundled page fixtures.
//!
//! `cargo run --example harvest_web [-- OUT_DIR]`

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ggb::harvest::{harvest_fixtures, read_jsonl, ElementRecord};
use ggb::prompt::PromptPools;
use ggb::sample::GroundingSample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/web");
    let tmp = tempfile::tempdir()?;
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| tmp.path().to_path_buf());

    let summary = harvest_fixtures(&fixtures, &out, 4, &PromptPools::default(), 0)?;
    println!("{summary:?}");

    let elements: Vec<ElementRecord> = read_jsonl(&out.join("elements.jsonl"))?;
    let mut by_source = BTreeMap::new();
    for e in &elements {
        *by_source
            .entry(format!("{:?}", e.element.source))
            .or_insert(0) += 1;
    }
    println!("elements by source: {by_source:?}");

    let samples: Vec<GroundingSample> = read_jsonl(&out.join("samples.jsonl"))?;
    for s in samples.iter().take(4) {
        println!("[{}] {} -> {}", s.task, s.prompt, s.target);
    }
    Ok(())
}
