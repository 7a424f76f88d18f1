//! Benchmark scoring protocols.
//!
//! Every scorer returns a [`ScoreReport`]: named groups of scores plus
//! overall scores, each carrying the numerator and denominator it was
//! computed from. Scorers are pure functions of their inputs and do not
//! depend on input order.

mod aitw;
mod mind2web;
mod miniwob;
mod report;
mod screenspot;
mod text;

pub use aitw::{
    aitw_scores, match_step_aitw, AgentStep, AitwConfig, AitwSubset, StepMatch, DEFAULT_CLICK_TAU,
};
pub use mind2web::{
    mind2web_scores, mind2web_step, Mind2WebConfig, Mind2WebSplit, Mind2WebStep, WebStepOutcome,
};
pub use miniwob::miniwob_score;
pub use report::{
    Benchmark, DistanceHistogram, HistogramBin, NamedScore, Score, ScoreGroup, ScoreReport,
};
pub use screenspot::{
    cell_name, click_accuracy, distance_histogram, ElementKind, GroundingCase, Platform,
    HISTOGRAM_BIN_WIDTH,
};
pub use text::{normalize_text, token_f1};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no {0} to score")]
    EmptyInput(&'static str),
}
