//! Fixed-size crops of long web page captures.
//!
//! Full-page captures can be many thousands of rows tall. Each step's
//! observation is cut down to a 1920x1080 window that contains the target
//! element; targets already inside the first 1080 rows keep the top window.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{NormBBox, PixelDims};
use crate::rng::derive_rng;

pub const CROP_WIDTH: u32 = 1920;
pub const CROP_HEIGHT: u32 = 1080;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CropError {
    #[error("page width is {0}, crops require exactly {CROP_WIDTH}")]
    PageWidth(u32),
    #[error("page height {0} is shorter than the {CROP_HEIGHT}-row crop")]
    PageTooShort(u32),
    #[error("target is {0} rows tall, taller than the {CROP_HEIGHT}-row crop")]
    TargetTooTall(u32),
    #[error("target {0:?} is not inside the page")]
    TargetOutsidePage(PixelRect),
}

/// An integer pixel box `(left, top, right, down)`, right/down exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct PixelRect {
    pub left: u32,
    pub top: u32,
    pub right: u32,
    pub down: u32,
}

impl PixelRect {
    pub fn new(left: u32, top: u32, right: u32, down: u32) -> Self {
        Self {
            left,
            top,
            right,
            down,
        }
    }

    pub fn height(&self) -> u32 {
        self.down.saturating_sub(self.top)
    }
}

impl From<[u32; 4]> for PixelRect {
    fn from(v: [u32; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<PixelRect> for [u32; 4] {
    fn from(r: PixelRect) -> Self {
        [r.left, r.top, r.right, r.down]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropSpec {
    pub page: PixelDims,
    /// First page row included in the crop.
    pub offset_y: u32,
    pub crop: PixelDims,
    pub source_bbox: PixelRect,
    /// The target relative to the crop, as fractions of the crop size.
    pub target_bbox: NormBBox,
}

impl CropSpec {
    /// Maps the remapped box back to page pixels.
    pub fn source_from_target(&self) -> PixelRect {
        let w = f64::from(self.crop.width);
        let h = f64::from(self.crop.height);
        let px = |v: f64, scale: f64| (v * scale).round() as u32;
        PixelRect {
            left: px(self.target_bbox.left(), w),
            top: px(self.target_bbox.top(), h) + self.offset_y,
            right: px(self.target_bbox.right(), w),
            down: px(self.target_bbox.down(), h) + self.offset_y,
        }
    }
}

/// Range of valid crop offsets for a target, inclusive on both ends.
pub fn offset_range(page: PixelDims, target: PixelRect) -> (u32, u32) {
    let lo = target.down.saturating_sub(CROP_HEIGHT);
    let hi = target.top.min(page.height - CROP_HEIGHT);
    (lo, hi)
}

/// Chooses a 1920x1080 window containing `target` and remaps the target into it.
pub fn crop_mind2web<R: Rng + ?Sized>(
    page: PixelDims,
    target: PixelRect,
    rng: &mut R,
) -> Result<CropSpec, CropError> {
    if page.width != CROP_WIDTH {
        return Err(CropError::PageWidth(page.width));
    }
    if page.height < CROP_HEIGHT {
        return Err(CropError::PageTooShort(page.height));
    }
    if target.left > target.right
        || target.top > target.down
        || target.right > page.width
        || target.down > page.height
    {
        return Err(CropError::TargetOutsidePage(target));
    }
    if target.height() > CROP_HEIGHT {
        return Err(CropError::TargetTooTall(target.height()));
    }
    let offset_y = if target.down <= CROP_HEIGHT {
        0
    } else {
        let (lo, hi) = offset_range(page, target);
        rng.gen_range(lo..=hi)
    };
    let w = f64::from(CROP_WIDTH);
    let h = f64::from(CROP_HEIGHT);
    let target_bbox = NormBBox::new(
        f64::from(target.left) / w,
        f64::from(target.top - offset_y) / h,
        f64::from(target.right) / w,
        f64::from(target.down - offset_y) / h,
    )
    .expect("target fits in the crop by construction");
    Ok(CropSpec {
        page,
        offset_y,
        crop: PixelDims {
            width: CROP_WIDTH,
            height: CROP_HEIGHT,
        },
        source_bbox: target,
        target_bbox,
    })
}

/// Crops a step with a generator derived from `(seed, step_id)`.
pub fn crop_step(
    page: PixelDims,
    target: PixelRect,
    seed: u64,
    step_id: &str,
) -> Result<CropSpec, CropError> {
    crop_mind2web(page, target, &mut derive_rng(seed, step_id))
}
