//! Grounding corpus construction.
//!
//! Pages are captured as [`RenderedPageSnapshot`]s (from a live browser via
//! [`render`] or from fixture directories), reduced to [`Element`]s, turned
//! into [`GroundingSample`](crate::sample::GroundingSample)s, and finally
//! mixed into a sharded corpus by [`assemble_corpus`].

use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{NormBBox, PixelDims};
use crate::prompt::PromptError;
use crate::sample::{Domain, ElementKind, GroundingTask};

pub mod corpus;
pub mod extract;
pub mod pipeline;
pub mod render;
pub mod samples;
pub mod snapshot;

pub use corpus::{
    allocate, assemble_corpus, draw_corpus, CellCount, CellSpec, CorpusManifest, MixForm, MixSpec,
    SamplePools, ShardInfo, DEFAULT_SHARD_SIZE,
};
pub use extract::{
    extract_web_elements, is_displayed, sanitize_instruction, MAX_INSTRUCTION_CHARS,
};
pub use pipeline::{
    fixture_dirs, harvest_fixtures, read_jsonl, write_jsonl, ElementRecord, HarvestSummary,
};
pub use render::{render_page, RenderError, RendererConfig};
pub use samples::{
    convert_rico, element_samples, ingest_passthrough, invert_captions, make_grounding_sample,
    widget_caption_samples, CaptionRecord, CaptionTaskMix, RicoElement, RicoRecord, SkipReport,
    WEB_ELEMENT_TASKS,
};
pub use snapshot::{load_fixture_snapshot, LayoutNode, PageLayout, RenderedPageSnapshot};

/// Where an element's description came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementSource {
    WebVisibleText,
    WebTitleAttr,
    MobileWidget,
    MobileRico,
}

impl ElementSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ElementSource::WebVisibleText => "web_visible_text",
            ElementSource::WebTitleAttr => "web_title_attr",
            ElementSource::MobileWidget => "mobile_widget",
            ElementSource::MobileRico => "mobile_rico",
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            ElementSource::WebVisibleText | ElementSource::WebTitleAttr => Domain::Web,
            ElementSource::MobileWidget | ElementSource::MobileRico => Domain::Mobile,
        }
    }
}

impl fmt::Display for ElementSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A screen element paired with the text that describes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub instruction: String,
    pub bbox: NormBBox,
    pub kind: ElementKind,
    pub source: ElementSource,
    pub dom_order: u64,
}

impl Element {
    pub fn is_valid(&self) -> bool {
        !self.instruction.trim().is_empty() && self.bbox.area() > 0.0
    }
}

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("{path}: cannot read image: {message}")]
    Image { path: String, message: String },
    #[error("{path}: screenshot is {}x{}, layout says {expected}", actual.0, actual.1)]
    ScreenshotMismatch {
        path: String,
        expected: PixelDims,
        actual: (u32, u32),
    },
    #[error("{path}:{line}: {message}")]
    Record {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("task {0} cannot be built from an element")]
    UnsupportedTask(GroundingTask),
    #[error("element {0:?} is too small to hold a two-decimal point")]
    Ungroundable(String),
    #[error("invalid mix: {0}")]
    Mix(String),
    #[error("cell {domain}/{task} has {available} samples, {requested} requested (short by {})", requested - available)]
    Underflow {
        domain: Domain,
        task: GroundingTask,
        requested: usize,
        available: usize,
    },
    #[error(transparent)]
    Render(#[from] RenderError),
}

impl HarvestError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        HarvestError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
