//! Benchmark and prediction file schemas (JSONL, one record per line).

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::RunError;
use crate::action::{parse_action, parse_web_action, Action, AgentOutput};
use crate::geometry::NormBBox;
use crate::metrics::{AitwSubset, Mind2WebSplit, Platform};
use crate::sample::ElementKind;

/// One ScreenSpot-style grounding case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenspotCase {
    pub id: String,
    /// Screenshot path relative to the benchmark file.
    pub image: String,
    pub instruction: String,
    pub platform: Platform,
    pub kind: ElementKind,
    pub bbox: NormBBox,
}

/// One Android episode step. Actions are stored in their text encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AitwStepRecord {
    pub id: String,
    pub episode_id: String,
    pub step: usize,
    pub subset: AitwSubset,
    pub instruction: String,
    pub image: String,
    /// Reference actions of the earlier steps, oldest first.
    #[serde(default)]
    pub history: Vec<String>,
    pub ref_action: String,
    #[serde(default)]
    pub ref_bbox: Option<NormBBox>,
}

impl AitwStepRecord {
    pub fn reference(&self) -> Result<AgentOutput, String> {
        parse_action(&self.ref_action).map_err(|e| format!("ref_action: {e}"))
    }

    pub fn history_actions(&self) -> Result<Vec<Action>, String> {
        parse_history(&self.history)
    }
}

/// One web-navigation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mind2WebStepRecord {
    pub id: String,
    pub episode_id: String,
    pub step: usize,
    pub split: Mind2WebSplit,
    pub instruction: String,
    pub image: String,
    #[serde(default)]
    pub history: Vec<String>,
    pub ref_action: String,
    pub ref_bbox: NormBBox,
}

impl Mind2WebStepRecord {
    pub fn reference(&self) -> Result<Action, String> {
        match parse_web_action(&self.ref_action)
            .map_err(|e| format!("ref_action: {e}"))?
            .output
        {
            AgentOutput::Action(a) => Ok(a),
            AgentOutput::Status(s) => Err(format!("ref_action is the status {}", s.token())),
        }
    }

    pub fn history_actions(&self) -> Result<Vec<Action>, String> {
        parse_history(&self.history)
    }
}

fn parse_history(items: &[String]) -> Result<Vec<Action>, String> {
    items
        .iter()
        .enumerate()
        .filter_map(|(i, h)| match parse_action(h) {
            Ok(AgentOutput::Action(a)) => Some(Ok(a)),
            Ok(AgentOutput::Status(_)) => None,
            Err(e) => Some(Err(format!("history[{i}]: {e}"))),
        })
        .collect()
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub prompt: String,
    pub raw_output: String,
    /// The parsed form of `raw_output`, or null when it did not parse.
    pub parsed: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A benchmark file with the lines that failed to load.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub errors: Vec<String>,
}

/// Reads a JSONL file, collecting per-line schema errors instead of
/// stopping at the first. `check` applies record-level validation.
pub fn load_records<T: DeserializeOwned>(
    path: &Path,
    check: impl Fn(&T) -> Result<(), String>,
) -> Result<Loaded<T>, RunError> {
    let file = fs::File::open(path).map_err(|e| RunError::io(path, e))?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| RunError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(&line);
        match serde_path_to_error::deserialize::<_, T>(de) {
            Ok(r) => match check(&r) {
                Ok(()) => records.push(r),
                Err(msg) => errors.push(format!("line {}: {msg}", i + 1)),
            },
            Err(e) => errors.push(format!("line {}: at {}: {}", i + 1, e.path(), e.inner())),
        }
    }
    Ok(Loaded { records, errors })
}

pub fn load_screenspot(path: &Path) -> Result<Loaded<ScreenspotCase>, RunError> {
    load_records(path, |c: &ScreenspotCase| {
        if c.bbox.area() > 0.0 {
            Ok(())
        } else {
            Err(format!("case {} has a zero-area box", c.id))
        }
    })
}

pub fn load_aitw(path: &Path) -> Result<Loaded<AitwStepRecord>, RunError> {
    load_records(path, |r: &AitwStepRecord| {
        r.reference()?;
        r.history_actions().map(|_| ())
    })
}

pub fn load_mind2web(path: &Path) -> Result<Loaded<Mind2WebStepRecord>, RunError> {
    load_records(path, |r: &Mind2WebStepRecord| {
        r.reference()?;
        r.history_actions().map(|_| ())
    })
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, RunError> {
    let loaded = load_records(path, |_: &PredictionRecord| Ok(()))?;
    match loaded.errors.first() {
        Some(e) => Err(RunError::Schema(format!("{}: {e}", path.display()))),
        None => Ok(loaded.records),
    }
}
