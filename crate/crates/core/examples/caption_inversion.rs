//! Turns widget captions into instruction-to-location samples, and keeps the
//! captioning direction for comparison.
//!
//! `cargo run --example caption_inversion`

use ggb::geometry::PixelBBox;
use ggb::harvest::{invert_captions, widget_caption_samples, CaptionRecord, CaptionTaskMix};
use ggb::prompt::PromptPools;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = vec![
        CaptionRecord {
            image: "rico/101.png".into(),
            width: 1440,
            height: 2560,
            bbox: PixelBBox::new(1240.0, 96.0, 1400.0, 256.0),
            captions: vec!["open settings".into(), "settings gear".into()],
        },
        CaptionRecord {
            image: "rico/102.png".into(),
            width: 1440,
            height: 2560,
            bbox: PixelBBox::new(40.0, 2300.0, 700.0, 2480.0),
            captions: vec!["add to cart".into()],
        },
        // Box runs off the screen, so the record is skipped.
        CaptionRecord {
            image: "rico/103.png".into(),
            width: 1440,
            height: 2560,
            bbox: PixelBBox::new(1300.0, 10.0, 1600.0, 80.0),
            captions: vec!["share".into()],
        },
    ];
    let pools = PromptPools::default();

    let (samples, skipped) = invert_captions(&records, CaptionTaskMix::default(), &pools, 1)?;
    for s in &samples {
        println!("[{}] {} -> {}", s.task, s.prompt, s.target);
    }
    println!("skipped: {skipped:?}");

    let (samples, _) = widget_caption_samples(&records, &pools, 1)?;
    for s in &samples {
        println!("[{}] {} -> {}", s.task, s.prompt, s.target);
    }
    Ok(())
}
