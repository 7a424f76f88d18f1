//! Grounding sample records and their task/domain tags.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::parse_location;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundingTask {
    #[serde(rename = "text_2_point")]
    TextToPoint,
    #[serde(rename = "text_2_bbox")]
    TextToBBox,
    #[serde(rename = "point_2_text")]
    PointToText,
    #[serde(rename = "bbox_2_text")]
    BBoxToText,
    WidgetCaptioning,
    UiSummarization,
    GeneralPassthrough,
}

impl GroundingTask {
    pub const ALL: [GroundingTask; 7] = [
        GroundingTask::TextToPoint,
        GroundingTask::TextToBBox,
        GroundingTask::PointToText,
        GroundingTask::BBoxToText,
        GroundingTask::WidgetCaptioning,
        GroundingTask::UiSummarization,
        GroundingTask::GeneralPassthrough,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GroundingTask::TextToPoint => "text_2_point",
            GroundingTask::TextToBBox => "text_2_bbox",
            GroundingTask::PointToText => "point_2_text",
            GroundingTask::BBoxToText => "bbox_2_text",
            GroundingTask::WidgetCaptioning => "widget_captioning",
            GroundingTask::UiSummarization => "ui_summarization",
            GroundingTask::GeneralPassthrough => "general_passthrough",
        }
    }

    /// Tasks whose target is a location.
    pub fn targets_location(&self) -> bool {
        matches!(self, GroundingTask::TextToPoint | GroundingTask::TextToBBox)
    }

    /// Tasks whose prompt embeds a location and whose target is text.
    pub fn prompts_with_location(&self) -> bool {
        matches!(
            self,
            GroundingTask::PointToText
                | GroundingTask::BBoxToText
                | GroundingTask::WidgetCaptioning
        )
    }
}

impl fmt::Display for GroundingTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroundingTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroundingTask::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Web,
    Mobile,
    General,
}

impl Domain {
    pub fn as_str(&self) -> &'static str {
        match self {
            Domain::Web => "web",
            Domain::Mobile => "mobile",
            Domain::General => "general",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "web" => Ok(Domain::Web),
            "mobile" => Ok(Domain::Mobile),
            "general" => Ok(Domain::General),
            _ => Err(format!("unknown domain {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleMeta {
    pub domain: Domain,
    pub source: String,
}

/// One training or evaluation record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundingSample {
    pub image: String,
    pub task: GroundingTask,
    pub prompt: String,
    pub target: String,
    pub meta: SampleMeta,
}

impl GroundingSample {
    /// Checks the task-specific invariant: location targets parse, and
    /// location prompts embed a parseable location.
    pub fn is_well_formed(&self) -> bool {
        if self.task.targets_location() {
            parse_location(&self.target).is_ok()
        } else if self.task.prompts_with_location() {
            parse_location(&self.prompt).is_ok()
        } else {
            true
        }
    }

    pub fn cell(&self) -> (Domain, GroundingTask) {
        (self.meta.domain, self.task)
    }
}

/// Whether a target element renders text or is an icon/widget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Text,
    #[serde(alias = "widget")]
    Icon,
}

impl ElementKind {
    pub const ALL: [ElementKind; 2] = [ElementKind::Text, ElementKind::Icon];

    pub fn as_str(&self) -> &'static str {
        match self {
            ElementKind::Text => "text",
            ElementKind::Icon => "icon",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
