use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Element, ElementSource, HarvestError};
use crate::geometry::{format_bbox, format_point, PixelBBox, PixelDims};
use crate::prompt::PromptPools;
use crate::rng::derive_rng;
use crate::sample::{Domain, ElementKind, GroundingSample, GroundingTask, SampleMeta};

/// Records that were dropped during ingestion, with the reason.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub skipped: Vec<(usize, String)>,
}

impl SkipReport {
    pub fn push(&mut self, index: usize, reason: impl Into<String>) {
        self.skipped.push((index, reason.into()));
    }

    pub fn len(&self) -> usize {
        self.skipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skipped.is_empty()
    }
}

/// Builds one sample for `task` from an element.
///
/// Point targets use the two-decimal grid point nearest the box center that
/// still lies inside the box, so the emitted text always parses back into
/// the element.
pub fn make_grounding_sample<R: Rng + ?Sized>(
    e: &Element,
    image: &str,
    task: GroundingTask,
    pools: &PromptPools,
    rng: &mut R,
) -> Result<GroundingSample, HarvestError> {
    let anchor = || {
        e.bbox
            .grid_anchor()
            .ok_or_else(|| HarvestError::Ungroundable(e.instruction.clone()))
    };
    let (slot_value, target) = match task {
        GroundingTask::TextToPoint => {
            (e.instruction.clone(), format_point(anchor()?).into_string())
        }
        GroundingTask::TextToBBox => (e.instruction.clone(), format_bbox(e.bbox).into_string()),
        GroundingTask::PointToText => {
            (format_point(anchor()?).into_string(), e.instruction.clone())
        }
        GroundingTask::BBoxToText | GroundingTask::WidgetCaptioning => {
            (format_bbox(e.bbox).into_string(), e.instruction.clone())
        }
        GroundingTask::UiSummarization | GroundingTask::GeneralPassthrough => {
            return Err(HarvestError::UnsupportedTask(task))
        }
    };
    let prompt = pools.get(task)?.draw(&slot_value, rng)?;
    Ok(GroundingSample {
        image: image.to_string(),
        task,
        prompt,
        target,
        meta: SampleMeta {
            domain: e.source.domain(),
            source: e.source.as_str().to_string(),
        },
    })
}

/// The four web tasks built from every harvested element.
pub const WEB_ELEMENT_TASKS: [GroundingTask; 4] = [
    GroundingTask::TextToPoint,
    GroundingTask::TextToBBox,
    GroundingTask::PointToText,
    GroundingTask::BBoxToText,
];

/// One sample per (element, task), each with its own generator keyed by
/// image, element position and task. Elements that cannot be grounded for a
/// task are skipped for that task only.
pub fn element_samples(
    elements: &[Element],
    image: &str,
    tasks: &[GroundingTask],
    pools: &PromptPools,
    seed: u64,
) -> Result<Vec<GroundingSample>, HarvestError> {
    let mut out = Vec::with_capacity(elements.len() * tasks.len());
    for (i, e) in elements.iter().enumerate() {
        for &task in tasks {
            let mut rng = derive_rng(seed, &format!("element/{image}/{i}/{task}"));
            match make_grounding_sample(e, image, task, pools, &mut rng) {
                Ok(s) => out.push(s),
                Err(HarvestError::Ungroundable(_)) => {}
                Err(other) => return Err(other),
            }
        }
    }
    Ok(out)
}

/// A widget with its human-written descriptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image: String,
    pub width: u32,
    pub height: u32,
    /// Widget box in pixels.
    pub bbox: PixelBBox,
    #[serde(default)]
    pub captions: Vec<String>,
}

/// Relative weights of point and box targets for inverted captions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptionTaskMix {
    pub point: f64,
    pub bbox: f64,
}

impl Default for CaptionTaskMix {
    /// Mobile point and box cells of the default mix, 274 : 56.
    fn default() -> Self {
        Self {
            point: 274.0,
            bbox: 56.0,
        }
    }
}

impl CaptionTaskMix {
    pub fn point_only() -> Self {
        Self {
            point: 1.0,
            bbox: 0.0,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GroundingTask {
        let total = self.point + self.bbox;
        if total <= 0.0 || rng.gen::<f64>() * total < self.point {
            GroundingTask::TextToPoint
        } else {
            GroundingTask::TextToBBox
        }
    }
}

fn caption_element(rec: &CaptionRecord, caption: &str, order: u64) -> Result<Element, String> {
    let dims = PixelDims::new(rec.width, rec.height).map_err(|e| e.to_string())?;
    if !rec.bbox.is_ordered() || !rec.bbox.fits_in(dims) || rec.bbox.area() <= 0.0 {
        return Err(format!(
            "widget box {:?} is not inside the {dims} screenshot",
            <[f64; 4]>::from(rec.bbox)
        ));
    }
    let bbox = rec.bbox.normalize(dims).map_err(|e| e.to_string())?;
    Ok(Element {
        instruction: super::sanitize_instruction(caption),
        bbox,
        kind: ElementKind::Icon,
        source: ElementSource::MobileWidget,
        dom_order: order,
    })
}

/// Turns widget captions into instruction-to-location samples: each caption
/// becomes an instruction whose target is the widget's location, as a point
/// or a box per `mix`.
pub fn invert_captions(
    records: &[CaptionRecord],
    mix: CaptionTaskMix,
    pools: &PromptPools,
    seed: u64,
) -> Result<(Vec<GroundingSample>, SkipReport), HarvestError> {
    caption_samples(records, pools, seed, |rng| mix.draw(rng))
}

/// Keeps the captioning direction: the prompt holds the widget box and the
/// target is the caption.
pub fn widget_caption_samples(
    records: &[CaptionRecord],
    pools: &PromptPools,
    seed: u64,
) -> Result<(Vec<GroundingSample>, SkipReport), HarvestError> {
    caption_samples(records, pools, seed, |_| GroundingTask::WidgetCaptioning)
}

fn caption_samples(
    records: &[CaptionRecord],
    pools: &PromptPools,
    seed: u64,
    mut pick: impl FnMut(&mut crate::rng::ItemRng) -> GroundingTask,
) -> Result<(Vec<GroundingSample>, SkipReport), HarvestError> {
    let mut out = Vec::new();
    let mut report = SkipReport::default();
    for (i, rec) in records.iter().enumerate() {
        for (j, caption) in rec.captions.iter().enumerate() {
            let e = match caption_element(rec, caption, j as u64) {
                Ok(e) => e,
                Err(reason) => {
                    report.push(i, reason);
                    break;
                }
            };
            if e.instruction.is_empty() {
                continue;
            }
            let mut rng = derive_rng(seed, &format!("caption/{}/{i}/{j}", rec.image));
            let task = pick(&mut rng);
            match make_grounding_sample(&e, &rec.image, task, pools, &mut rng) {
                Ok(s) => out.push(s),
                Err(HarvestError::Ungroundable(_)) => {
                    report.push(i, "widget too small for a two-decimal point")
                }
                Err(other) => return Err(other),
            }
        }
    }
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PassthroughRecord {
    image: String,
    prompt: String,
    target: String,
}

/// Wraps prompt/target records from an external source as samples.
/// Records missing a field are skipped and reported.
pub fn ingest_passthrough(
    task: GroundingTask,
    records: &[serde_json::Value],
) -> Result<(Vec<GroundingSample>, SkipReport), HarvestError> {
    let (domain, source) = match task {
        GroundingTask::UiSummarization => (Domain::Mobile, "ui_summarization"),
        GroundingTask::GeneralPassthrough => (Domain::General, "general_passthrough"),
        other => return Err(HarvestError::UnsupportedTask(other)),
    };
    let mut out = Vec::with_capacity(records.len());
    let mut report = SkipReport::default();
    for (i, v) in records.iter().enumerate() {
        match serde_json::from_value::<PassthroughRecord>(v.clone()) {
            Ok(r) => out.push(GroundingSample {
                image: r.image,
                task,
                prompt: r.prompt,
                target: r.target,
                meta: SampleMeta {
                    domain,
                    source: source.to_string(),
                },
            }),
            Err(e) => report.push(i, e.to_string()),
        }
    }
    Ok((out, report))
}

/// A RICO screen with its automatically collected element descriptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicoRecord {
    pub image: String,
    pub width: u32,
    pub height: u32,
    pub elements: Vec<RicoElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicoElement {
    pub bbox: PixelBBox,
    pub instruction: String,
    #[serde(default)]
    pub is_text: bool,
}

/// Maps RICO elements onto [`Element`] unchanged apart from normalization
/// and text cleanup. Elements with an empty description or an invalid box
/// are dropped.
pub fn convert_rico(record: &RicoRecord) -> Vec<Element> {
    let Ok(dims) = PixelDims::new(record.width, record.height) else {
        return Vec::new();
    };
    record
        .elements
        .iter()
        .enumerate()
        .filter_map(|(i, re)| {
            if !re.bbox.fits_in(dims) || re.bbox.area() <= 0.0 {
                return None;
            }
            let e = Element {
                instruction: super::sanitize_instruction(&re.instruction),
                bbox: re.bbox.normalize(dims).ok()?,
                kind: if re.is_text {
                    ElementKind::Text
                } else {
                    ElementKind::Icon
                },
                source: ElementSource::MobileRico,
                dom_order: i as u64,
            };
            e.is_valid().then_some(e)
        })
        .collect()
}
