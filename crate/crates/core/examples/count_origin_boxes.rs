//! Expected click accuracy of a model that always answers (0.00, 0.00): the
//! share of ground-truth boxes containing the origin. Reads the raw JSON, so
//! it is independent of the crate's geometry code.
//!
//! `cargo run --example count_origin_boxes [-- CASES.jsonl]`

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/screenspot/cases.jsonl")
        });
    let text = std::fs::read_to_string(&path)?;
    let (mut hits, mut total) = (0u64, 0u64);
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line)?;
        let b: Vec<f64> = v["bbox"]
            .as_array()
            .ok_or("case without bbox")?
            .iter()
            .filter_map(|x| x.as_f64())
            .collect();
        total += 1;
        if b[0] <= 0.0 && b[1] <= 0.0 {
            hits += 1;
        }
    }
    println!("{hits}/{total} = {:.6}", hits as f64 / total as f64);
    Ok(())
}
