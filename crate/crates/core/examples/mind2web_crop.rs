//! Crops tall web screenshots to a 1920x1080 window that contains the target.
//!
//! `cargo run --example mind2web_crop`

use ggb::dataprep::{crop_step, offset_range, PixelRect};
use ggb::geometry::{format_bbox, PixelDims};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let page = PixelDims::new(1920, 6400)?;
    let targets = [
        PixelRect::new(100, 40, 300, 90),
        PixelRect::new(800, 3000, 1100, 3060),
        PixelRect::new(10, 6300, 200, 6400),
    ];
    for (i, t) in targets.into_iter().enumerate() {
        let spec = crop_step(page, t, 9, &format!("step-{i}"))?;
        println!(
            "target {t:?}: offsets {:?}, chose {}, crop box {}",
            offset_range(page, t),
            spec.offset_y,
            format_bbox(spec.target_bbox)
        );
        assert_eq!(spec.source_from_target(), t);
    }
    Ok(())
}
