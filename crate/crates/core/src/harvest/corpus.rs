//! Mixing per-cell sample pools into a sharded training corpus.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarvestError;
use crate::rng::derive_rng;
use crate::sample::{Domain, GroundingSample, GroundingTask};

pub const DEFAULT_SHARD_SIZE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixForm {
    /// Weights are fractions summing to one.
    Ratio,
    /// Weights are absolute sample counts.
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub domain: Domain,
    pub task: GroundingTask,
    pub weight: f64,
}

/// Corpus composition: one weight per (domain, task) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub form: MixForm,
    pub cells: Vec<CellSpec>,
    /// Total samples to draw. Defaults to the sum of counts for count form.
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MixSpec {
    /// The full default mixture, 998K samples.
    fn default() -> Self {
        use Domain::*;
        use GroundingTask::*;
        let cells = [
            (Web, TextToPoint, 271_000.0),
            (Web, TextToBBox, 54_000.0),
            (Web, PointToText, 54_000.0),
            (Web, BBoxToText, 54_000.0),
            (Mobile, TextToPoint, 274_000.0),
            (Mobile, TextToBBox, 56_000.0),
            (Mobile, UiSummarization, 48_000.0),
            (Mobile, WidgetCaptioning, 42_000.0),
            (General, GeneralPassthrough, 145_000.0),
        ]
        .into_iter()
        .map(|(domain, task, weight)| CellSpec {
            domain,
            task,
            weight,
        })
        .collect();
        MixSpec {
            form: MixForm::Count,
            cells,
            budget: Some(998_000),
            seed: 0,
        }
    }
}

impl MixSpec {
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), HarvestError> {
        if self.cells.is_empty() {
            return Err(HarvestError::Mix("no cells".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.cells {
            if !c.weight.is_finite() || c.weight < 0.0 {
                return Err(HarvestError::Mix(format!(
                    "cell {}/{} has weight {}",
                    c.domain, c.task, c.weight
                )));
            }
            if !seen.insert((c.domain, c.task)) {
                return Err(HarvestError::Mix(format!(
                    "cell {}/{} listed twice",
                    c.domain, c.task
                )));
            }
        }
        let total: f64 = self.cells.iter().map(|c| c.weight).sum();
        match self.form {
            MixForm::Ratio if (total - 1.0).abs() > 1e-9 => Err(HarvestError::Mix(format!(
                "ratios sum to {total}, expected 1"
            ))),
            MixForm::Ratio if self.budget.is_none() => {
                Err(HarvestError::Mix("ratio form needs a budget".into()))
            }
            MixForm::Count if self.cells.iter().any(|c| c.weight.fract() != 0.0) => Err(
                HarvestError::Mix("count form needs whole-number weights".into()),
            ),
            _ if total <= 0.0 => Err(HarvestError::Mix("weights sum to zero".into())),
            _ => Ok(()),
        }
    }

    /// Per-cell sample counts, in cell order, summing to the budget.
    pub fn cell_counts(&self) -> Result<Vec<u64>, HarvestError> {
        self.validate()?;
        let weights: Vec<f64> = self.cells.iter().map(|c| c.weight).collect();
        let budget = match (self.form, self.budget) {
            (_, Some(b)) => b,
            (MixForm::Count, None) => weights.iter().map(|w| *w as u64).sum(),
            (MixForm::Ratio, None) => unreachable!("validated"),
        };
        Ok(allocate(&weights, budget))
    }
}

/// Largest-remainder apportionment of `budget` in proportion to `weights`.
///
/// Each cell gets the floor of its quota; the leftover units go to the cells
/// with the largest fractional parts, earlier cells winning ties. Whole-number
/// weights are handled in exact integer arithmetic.
pub fn allocate(weights: &[f64], budget: u64) -> Vec<u64> {
    let integral = weights
        .iter()
        .all(|w| w.fract() == 0.0 && *w < 2f64.powi(53));
    // (floor, remainder numerator) with a common remainder denominator.
    let parts: Vec<(u64, f64)> = if integral {
        let ws: Vec<u128> = weights.iter().map(|w| *w as u128).collect();
        let total: u128 = ws.iter().sum();
        ws.iter()
            .map(|w| {
                let q = u128::from(budget) * w;
                ((q / total) as u64, (q % total) as f64)
            })
            .collect()
    } else {
        let total: f64 = weights.iter().sum();
        weights
            .iter()
            .map(|w| {
                let q = budget as f64 * w / total;
                (q.floor() as u64, q - q.floor())
            })
            .collect()
    };
    let mut counts: Vec<u64> = parts.iter().map(|p| p.0).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| parts[b].1.total_cmp(&parts[a].1).then(a.cmp(&b)));
    for &i in order.iter().take(budget.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Samples grouped by (domain, task), each pool in a stable order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SamplePools {
    pools: BTreeMap<(Domain, GroundingTask), Vec<GroundingSample>>,
}

impl SamplePools {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: GroundingSample) {
        self.pools.entry(s.cell()).or_default().push(s);
    }

    pub fn get(&self, domain: Domain, task: GroundingTask) -> &[GroundingSample] {
        self.pools
            .get(&(domain, task))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.pools.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromIterator<GroundingSample> for SamplePools {
    fn from_iter<I: IntoIterator<Item = GroundingSample>>(iter: I) -> Self {
        let mut p = SamplePools::new();
        for s in iter {
            p.push(s);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub domain: Domain,
    pub task: GroundingTask,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardInfo {
    pub file: String,
    pub count: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: String,
    pub seed: u64,
    pub budget: u64,
    pub cells: Vec<CellCount>,
    pub shards: Vec<ShardInfo>,
}

/// Draws each cell's count without replacement, shuffles the union, and
/// returns the corpus in final order.
pub fn draw_corpus(
    pools: &SamplePools,
    mix: &MixSpec,
) -> Result<(Vec<GroundingSample>, Vec<CellCount>), HarvestError> {
    let counts = mix.cell_counts()?;
    let mut cells = Vec::with_capacity(counts.len());
    let mut corpus = Vec::with_capacity(counts.iter().sum::<u64>() as usize);
    for (cell, &n) in mix.cells.iter().zip(&counts) {
        let pool = pools.get(cell.domain, cell.task);
        let n = n as usize;
        if pool.len() < n {
            return Err(HarvestError::Underflow {
                domain: cell.domain,
                task: cell.task,
                requested: n,
                available: pool.len(),
            });
        }
        let mut rng = derive_rng(mix.seed, &format!("cell/{}/{}", cell.domain, cell.task));
        corpus.extend(
            index::sample(&mut rng, pool.len(), n)
                .into_iter()
                .map(|i| pool[i].clone()),
        );
        cells.push(CellCount {
            domain: cell.domain,
            task: cell.task,
            count: n as u64,
        });
    }
    corpus.shuffle(&mut derive_rng(mix.seed, "corpus/shuffle"));
    Ok((corpus, cells))
}

/// Draws the corpus and writes `shard-NNNNN.jsonl` files plus `manifest.json`
/// into `out`.
pub fn assemble_corpus(
    pools: &SamplePools,
    mix: &MixSpec,
    out: &Path,
    shard_size: usize,
) -> Result<CorpusManifest, HarvestError> {
    let (corpus, cells) = draw_corpus(pools, mix)?;
    fs::create_dir_all(out).map_err(|e| HarvestError::io(out, e))?;
    let mut shards = Vec::new();
    for (i, chunk) in corpus.chunks(shard_size.max(1)).enumerate() {
        let file = format!("shard-{i:05}.jsonl");
        let mut buf = Vec::new();
        for s in chunk {
            serde_json::to_writer(&mut buf, s).expect("sample serializes");
            buf.push(b'\n');
        }
        let path = out.join(&file);
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(|e| HarvestError::io(&path, e))?;
        shards.push(ShardInfo {
            file,
            count: chunk.len(),
            sha256: hex::encode(Sha256::digest(&buf)),
        });
    }
    let manifest = CorpusManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: mix.seed,
        budget: cells.iter().map(|c| c.count).sum(),
        cells,
        shards,
    };
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| HarvestError::io(&path, e))?;
    Ok(manifest)
}
