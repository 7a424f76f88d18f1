//! Coordinate strings, the action text format and prompt construction.
//!
//! `cargo run --example codec`

use ggb::action::{encode_action, encode_web_action, parse_action, parse_web_action, Action};
use ggb::geometry::{
    format_bbox, format_point, parse_location, NormBBox, NormPoint, PixelBBox, PixelDims,
};
use ggb::prompt::{build_agent_prompt, build_grounding_prompt, PromptPools, PromptSpec};
use ggb::rng::derive_rng;
use ggb::sample::GroundingTask;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Pixel boxes normalize against the screenshot size.
    let dims = PixelDims::new(1280, 800)?;
    let px = PixelBBox::new(320.0, 96.0, 512.0, 136.0);
    let b = px.normalize(dims)?;
    println!("pixel {px:?} -> {}", format_bbox(b));
    println!("center {}", format_point(b.center()));
    println!("grid anchor {:?}", b.grid_anchor().map(format_point));

    let odd = NormBBox::new(0.123, 0.456, 0.789, 0.999)?;
    println!("rounded box {}", format_bbox(odd));
    println!(
        "parsed back {:?}",
        parse_location(format_bbox(odd).as_str())?
    );

    // Agent actions.
    let actions = [
        Action::click(NormPoint::new(0.25, 0.5)?),
        Action::Type {
            text: r#"say "hi" \ bye"#.into(),
        },
        Action::PressEnter,
        Action::SwipeUp,
    ];
    for a in &actions {
        let text = encode_action(a);
        println!("{text}  =>  {:?}", parse_action(&text)?);
    }

    // Web actions carry the element they act on.
    let sel = Action::Select {
        value: "New York".into(),
    };
    let web = encode_web_action(&sel, Some(NormPoint::new(0.4, 0.62)?));
    println!("{web}  =>  {:?}", parse_web_action(&web)?);

    // Prompts.
    let pools = PromptPools::default();
    let mut rng = derive_rng(7, "example");
    for task in [GroundingTask::TextToPoint, GroundingTask::TextToBBox] {
        println!(
            "{task}: {}",
            build_grounding_prompt("Sign in", pools.get(task)?, &mut rng)?
        );
    }
    let spec = PromptSpec::new("Open the settings app", actions.to_vec()).with_k(2);
    println!("---\n{}", build_agent_prompt(&spec));
    Ok(())
}
