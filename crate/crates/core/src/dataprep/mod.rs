//! Dataset preparation: instruction-wise Android splits and web page crops.

mod crop;
mod split;

pub use crop::{
    crop_mind2web, crop_step, offset_range, CropError, CropSpec, PixelRect, CROP_HEIGHT, CROP_WIDTH,
};
pub use split::{
    dedupe_trajectories, select_validation, split_aitw, train_size, EpisodeManifest, SplitError,
    SplitResult, SubsetSplit, DEFAULT_SUBSET_COUNTS, DEFAULT_TRAIN_FRAC,
    DEFAULT_VALIDATION_PER_SUBSET,
};
