//! Instruction-wise train/test splitting of Android episodes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::AitwSubset;
use crate::rng::derive_rng;

pub const DEFAULT_TRAIN_FRAC: f64 = 0.8;
pub const DEFAULT_VALIDATION_PER_SUBSET: usize = 100;

/// Instructions requested per subset, in [`AitwSubset::ALL`] order.
pub const DEFAULT_SUBSET_COUNTS: [(AitwSubset, usize); 5] = [
    (AitwSubset::General, 545),
    (AitwSubset::Install, 688),
    (AitwSubset::GoogleApps, 306),
    (AitwSubset::Single, 700),
    (AitwSubset::WebShopping, 700),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("subset {subset} has {available} usable instructions, {requested} requested (short by {})", requested - available)]
    Underflow {
        subset: AitwSubset,
        requested: usize,
        available: usize,
    },
    #[error("train fraction {0} is outside [0, 1]")]
    BadFraction(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeManifest {
    pub episode_id: String,
    pub instruction: String,
    pub subset: AitwSubset,
    #[serde(default)]
    pub step_count: usize,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSplit {
    pub requested: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// The split manifest written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub seed: u64,
    /// Rounding rule for the train size.
    pub rule: String,
    pub train_frac: f64,
    pub subsets: BTreeMap<AitwSubset, SubsetSplit>,
    #[serde(default)]
    pub validation_ids: Vec<String>,
}

impl SplitResult {
    pub fn train_ids(&self) -> impl Iterator<Item = &String> {
        self.subsets.values().flat_map(|s| s.train_ids.iter())
    }

    pub fn test_ids(&self) -> impl Iterator<Item = &String> {
        self.subsets.values().flat_map(|s| s.test_ids.iter())
    }
}

fn group_key(e: &EpisodeManifest) -> String {
    format!("{}\u{0}{}", e.subset, e.instruction)
}

/// Keeps one episode per (subset, instruction), picked by a seeded draw.
/// Output is sorted by episode id.
pub fn dedupe_trajectories(episodes: &[EpisodeManifest], seed: u64) -> Vec<EpisodeManifest> {
    let mut groups: BTreeMap<String, Vec<&EpisodeManifest>> = BTreeMap::new();
    for e in episodes {
        groups.entry(group_key(e)).or_default().push(e);
    }
    let mut out: Vec<EpisodeManifest> = groups
        .into_iter()
        .map(|(key, mut members)| {
            members.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
            let pick = derive_rng(seed, &key).gen_range(0..members.len());
            members[pick].clone()
        })
        .collect();
    out.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    out
}

/// Train size under the floor rule, robust to `0.8 * n` landing a hair
/// below an integer in floating point.
pub fn train_size(n: usize, train_frac: f64) -> usize {
    ((train_frac * n as f64) + 1e-9).floor() as usize
}

/// Samples the requested number of instructions per subset and splits each
/// sample into train and test.
///
/// Subsets are processed in the order given; an instruction already taken by
/// an earlier subset is not eligible in a later one, so no instruction string
/// can land on both sides of the split.
pub fn split_aitw(
    episodes: &[EpisodeManifest],
    counts: &[(AitwSubset, usize)],
    train_frac: f64,
    seed: u64,
) -> Result<SplitResult, SplitError> {
    if !(0.0..=1.0).contains(&train_frac) {
        return Err(SplitError::BadFraction(train_frac.to_string()));
    }
    let deduped = dedupe_trajectories(episodes, seed);
    let mut taken: BTreeSet<&str> = BTreeSet::new();
    let mut subsets = BTreeMap::new();
    for &(subset, requested) in counts {
        let pool: Vec<&EpisodeManifest> = deduped
            .iter()
            .filter(|e| e.subset == subset && !taken.contains(e.instruction.as_str()))
            .collect();
        if pool.len() < requested {
            return Err(SplitError::Underflow {
                subset,
                requested,
                available: pool.len(),
            });
        }
        let mut rng = derive_rng(seed, &format!("split/{subset}"));
        let mut chosen: Vec<&EpisodeManifest> = index::sample(&mut rng, pool.len(), requested)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        chosen.shuffle(&mut rng);
        for e in &chosen {
            taken.insert(e.instruction.as_str());
        }
        let n_train = train_size(requested, train_frac);
        let ids =
            |s: &[&EpisodeManifest]| s.iter().map(|e| e.episode_id.clone()).collect::<Vec<_>>();
        subsets.insert(
            subset,
            SubsetSplit {
                requested,
                train_ids: ids(&chosen[..n_train]),
                test_ids: ids(&chosen[n_train..]),
            },
        );
    }
    Ok(SplitResult {
        seed,
        rule: "floor".to_string(),
        train_frac,
        subsets,
        validation_ids: Vec::new(),
    })
}

/// Draws `per_subset` validation episodes per subset from the original
/// (non-deduplicated) pool, using only instructions absent from train and
/// test and at most one episode per instruction.
pub fn select_validation(
    origin: &[EpisodeManifest],
    per_subset: usize,
    seed: u64,
    exclude: &SplitResult,
) -> Result<Vec<String>, SplitError> {
    let by_id: HashMap<&str, &EpisodeManifest> =
        origin.iter().map(|e| (e.episode_id.as_str(), e)).collect();
    let used: BTreeSet<&str> = exclude
        .train_ids()
        .chain(exclude.test_ids())
        .filter_map(|id| by_id.get(id.as_str()).map(|e| e.instruction.as_str()))
        .collect();
    let mut out = Vec::new();
    let mut taken: BTreeSet<&str> = BTreeSet::new();
    for subset in AitwSubset::ALL {
        let eligible: Vec<EpisodeManifest> = origin
            .iter()
            .filter(|e| {
                e.subset == subset
                    && !used.contains(e.instruction.as_str())
                    && !taken.contains(e.instruction.as_str())
            })
            .cloned()
            .collect();
        let pool = dedupe_trajectories(&eligible, seed);
        if pool.len() < per_subset {
            return Err(SplitError::Underflow {
                subset,
                requested: per_subset,
                available: pool.len(),
            });
        }
        let mut rng = derive_rng(seed, &format!("validation/{subset}"));
        let mut picked: Vec<&EpisodeManifest> = index::sample(&mut rng, pool.len(), per_subset)
            .into_iter()
            .map(|i| &pool[i])
            .collect();
        picked.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
        for e in picked {
            let instr = by_id[e.episode_id.as_str()].instruction.as_str();
            taken.insert(instr);
            out.push(e.episode_id.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(id: &str, instr: &str, subset: AitwSubset) -> EpisodeManifest {
        EpisodeManifest {
            episode_id: id.to_string(),
            instruction: instr.to_string(),
            subset,
            step_count: 3,
            source: String::new(),
        }
    }

    #[test]
    fn twenty_duplicates_collapse_to_one() {
        let eps: Vec<_> = (0..20)
            .map(|i| ep(&format!("e{i:02}"), "open settings", AitwSubset::General))
            .collect();
        let out = dedupe_trajectories(&eps, 1);
        assert_eq!(out.len(), 1);
        assert_eq!(out, dedupe_trajectories(&eps, 1));
        let mut reversed = eps.clone();
        reversed.reverse();
        assert_eq!(out, dedupe_trajectories(&reversed, 1));
        let picks: BTreeSet<String> = (0..40)
            .map(|s| dedupe_trajectories(&eps, s)[0].episode_id.clone())
            .collect();
        assert!(picks.len() > 1);
    }

    #[test]
    fn unique_instructions_pass_through() {
        let eps: Vec<_> = (0..10)
            .map(|i| ep(&format!("e{i}"), &format!("task {i}"), AitwSubset::Single))
            .collect();
        assert_eq!(dedupe_trajectories(&eps, 9), eps);
    }

    #[test]
    fn same_instruction_in_two_subsets_is_kept_once_per_subset() {
        let eps = vec![
            ep("a", "x", AitwSubset::General),
            ep("b", "x", AitwSubset::Install),
        ];
        assert_eq!(dedupe_trajectories(&eps, 0).len(), 2);
    }

    #[test]
    fn floor_rule_matches_integer_oracle() {
        for n in 0..5000usize {
            assert_eq!(train_size(n, 0.8), n * 4 / 5, "n = {n}");
        }
        assert_eq!(train_size(545, 0.8), 436);
        assert_eq!(train_size(306, 0.8), 244);
    }

    #[test]
    fn underflow_names_subset() {
        let eps: Vec<_> = (0..5)
            .map(|i| ep(&format!("e{i}"), &format!("t{i}"), AitwSubset::GoogleApps))
            .collect();
        let e = split_aitw(&eps, &[(AitwSubset::GoogleApps, 8)], 0.8, 0).unwrap_err();
        assert_eq!(
            e,
            SplitError::Underflow {
                subset: AitwSubset::GoogleApps,
                requested: 8,
                available: 5
            }
        );
        assert!(e.to_string().contains("short by 3"));
    }

    #[test]
    fn cross_subset_instruction_lands_on_one_side() {
        let mut eps = Vec::new();
        for i in 0..10 {
            eps.push(ep(
                &format!("g{i}"),
                &format!("shared {i}"),
                AitwSubset::General,
            ));
            eps.push(ep(
                &format!("i{i}"),
                &format!("shared {i}"),
                AitwSubset::Install,
            ));
            eps.push(ep(
                &format!("j{i}"),
                &format!("own {i}"),
                AitwSubset::Install,
            ));
        }
        let r = split_aitw(
            &eps,
            &[(AitwSubset::General, 10), (AitwSubset::Install, 10)],
            0.8,
            3,
        )
        .unwrap();
        let install = &r.subsets[&AitwSubset::Install];
        assert!(install
            .train_ids
            .iter()
            .chain(&install.test_ids)
            .all(|id| id.starts_with('j')));
    }
}
