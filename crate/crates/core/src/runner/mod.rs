//! Evaluation orchestration: the model client, mock model servers, offline
//! benchmark runs, interactive episodes and report files.

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::metrics::MetricsError;
use crate::prompt::PromptError;

pub mod client;
pub mod data;
pub mod episode;
pub mod eval;
pub mod mock;
pub mod report;

pub use client::{HttpPredictor, ModelEndpoint, PredictError, Predictor};
pub use data::{
    load_aitw, load_mind2web, load_predictions, load_screenspot, AitwStepRecord, Loaded,
    Mind2WebStepRecord, PredictionRecord, ScreenspotCase,
};
pub use episode::{
    run_episode, run_miniwob, scripted_answer_key, Demand, EnvAdapter, EnvError, EnvStatus,
    EpisodeConfig, EpisodeOutcome, EpisodeResult, Observation, ScriptedEnv, ScriptedTask,
};
pub use eval::{
    aitw_answer_key, infer_aitw, infer_mind2web, infer_screenspot, mind2web_answer_key,
    run_grounding_eval, score_aitw, score_mind2web, score_screenspot, screenspot_answer_key,
    EvalOptions, HistoryMode,
};
pub use mock::{AnswerKey, MockBehavior, MockError, MockPredictor, MockServer};
pub use report::{emit_report, load_report, markdown_table, report_json};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Mock(#[from] MockError),
}

impl RunError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Writes predictions as JSONL, one record per line.
pub fn write_predictions(path: &Path, preds: &[PredictionRecord]) -> Result<(), RunError> {
    let mut buf = String::new();
    for p in preds {
        buf.push_str(&serde_json::to_string(p).expect("prediction serializes"));
        buf.push('\n');
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| RunError::io(parent, e))?;
    }
    std::fs::write(path, buf).map_err(|e| RunError::io(path, e))
}
