//! Rendered page snapshots and the on-disk fixture format.
//!
//! A fixture directory holds `screenshot.png` and `layout.json`:
//!
//! ```json
//! {"url": "...", "width": 1920, "height": 1080,
//!  "nodes": [{"id": 0, "bbox": [l, t, r, d], "text": "Home", "title": "", "visible": true}]}
//! ```

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarvestError;
use crate::geometry::{PixelBBox, PixelDims};

/// One DOM node as laid out on the captured screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode {
    /// Position in document order.
    pub id: u64,
    pub bbox: PixelBBox,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub title: String,
    #[serde(default = "default_true")]
    pub visible: bool,
}

fn default_true() -> bool {
    true
}

/// Page layout as stored in `layout.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLayout {
    pub url: String,
    pub width: u32,
    pub height: u32,
    pub nodes: Vec<LayoutNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPageSnapshot {
    pub url: String,
    /// Path of the PNG screenshot.
    pub screenshot: PathBuf,
    pub dims: PixelDims,
    pub layout: Vec<LayoutNode>,
}

impl RenderedPageSnapshot {
    /// Builds a snapshot after checking the layout against the screenshot size.
    pub fn from_layout(layout: PageLayout, screenshot: PathBuf) -> Result<Self, HarvestError> {
        let dims = validate_layout(&layout)?;
        let (w, h) = png_dims(&screenshot)?;
        if (w, h) != (dims.width, dims.height) {
            return Err(HarvestError::ScreenshotMismatch {
                path: screenshot.display().to_string(),
                expected: dims,
                actual: (w, h),
            });
        }
        Ok(Self {
            url: layout.url,
            screenshot,
            dims,
            layout: layout.nodes,
        })
    }
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> HarvestError {
    HarvestError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// Checks dimensions and that every node box lies within the image.
pub fn validate_layout(layout: &PageLayout) -> Result<PixelDims, HarvestError> {
    if layout.width == 0 {
        return Err(schema("/width", "must be positive"));
    }
    if layout.height == 0 {
        return Err(schema("/height", "must be positive"));
    }
    let dims = PixelDims::new(layout.width, layout.height).expect("checked above");
    for (i, node) in layout.nodes.iter().enumerate() {
        let b = node.bbox;
        if ![b.left, b.top, b.right, b.down]
            .iter()
            .all(|v| v.is_finite())
            || !b.fits_in(dims)
        {
            return Err(schema(
                format!("/nodes/{i}/bbox"),
                format!(
                    "box {:?} is not inside the {dims} image",
                    <[f64; 4]>::from(b)
                ),
            ));
        }
    }
    Ok(dims)
}

/// Reads width and height from a PNG header.
pub fn png_dims(path: &Path) -> Result<(u32, u32), HarvestError> {
    let file = File::open(path).map_err(|e| HarvestError::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let reader = decoder.read_info().map_err(|e| HarvestError::Image {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let info = reader.info();
    Ok((info.width, info.height))
}

/// Turns a serde path like `nodes[3].bbox` into a JSON pointer `/nodes/3/bbox`.
fn path_to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

pub fn parse_layout(text: &str) -> Result<PageLayout, HarvestError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = path_to_pointer(e.path());
        schema(pointer, e.into_inner().to_string())
    })
}

/// Loads a fixture directory (`screenshot.png` + `layout.json`).
pub fn load_fixture_snapshot(dir: &Path) -> Result<RenderedPageSnapshot, HarvestError> {
    let layout_path = dir.join("layout.json");
    let screenshot = dir.join("screenshot.png");
    for p in [&layout_path, &screenshot] {
        if !p.is_file() {
            return Err(HarvestError::MissingFile(p.display().to_string()));
        }
    }
    let text = fs::read_to_string(&layout_path).map_err(|e| HarvestError::io(&layout_path, e))?;
    let layout = parse_layout(&text)?;
    RenderedPageSnapshot::from_layout(layout, screenshot)
}
