//! Scores hand-built predictions with each benchmark metric.
//!
//! `cargo run --example metrics`

use std::collections::BTreeMap;

use ggb::action::{parse_action, parse_web_action, Action};
use ggb::geometry::{NormBBox, NormPoint};
use ggb::metrics::{
    aitw_scores, click_accuracy, match_step_aitw, mind2web_scores, mind2web_step, miniwob_score,
    token_f1, AgentStep, AitwConfig, AitwSubset, ElementKind, GroundingCase, Mind2WebConfig,
    Mind2WebSplit, Mind2WebStep, Platform,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "token_f1 = {:.4}",
        token_f1("type hello world", "type hello there")
    );

    // Click accuracy: a hit needs the point inside the box.
    let button = NormBBox::new(0.40, 0.40, 0.60, 0.50)?;
    let cases = [
        (
            Platform::Mobile,
            ElementKind::Text,
            Some(NormPoint::new(0.5, 0.45)?),
        ),
        (
            Platform::Mobile,
            ElementKind::Icon,
            Some(NormPoint::new(0.9, 0.9)?),
        ),
        (Platform::Web, ElementKind::Text, None),
    ]
    .map(|(platform, kind, prediction)| GroundingCase {
        platform,
        kind,
        gt_bbox: button,
        prediction,
    });
    let r = click_accuracy(&cases)?;
    println!(
        "click accuracy micro {:?} macro {:?}",
        r.overall("average_micro"),
        r.overall("average_macro")
    );

    // Android steps: clicks within the distance threshold match.
    let cfg = AitwConfig::default();
    let steps = [
        (
            "action_type: 4, click_point: (0.50, 0.45)",
            "action_type: 4, click_point: (0.52, 0.47)",
        ),
        (
            "action_type: 4, click_point: (0.50, 0.45)",
            "action_type: 4, click_point: (0.90, 0.10)",
        ),
        ("action_type: 1", "action_type: 1"),
        ("TASK COMPLETE", "TASK IMPOSSIBLE"),
    ];
    let mut matches = Vec::new();
    for (reference, pred) in steps {
        let step = AgentStep {
            ref_action: parse_action(reference)?,
            ref_bbox: Some(button),
            pred_action: parse_action(pred).ok(),
        };
        let m = match_step_aitw(&step, &cfg);
        println!("{reference:<44} vs {pred:<44} {m:?}");
        matches.push((AitwSubset::General, m));
    }
    println!(
        "aitw overall {:?}",
        aitw_scores(&matches, &cfg).overall("overall")
    );

    // Web steps: element choice and operation F1 both count.
    let m2w = Mind2WebConfig::default();
    let step = Mind2WebStep {
        ref_action: Action::Type {
            text: "new york".into(),
        },
        ref_bbox: button,
        pred: Some(parse_web_action(
            r#"action_type: 3, typed_text: "New York City", click_point: (0.45, 0.42)"#,
        )?),
    };
    let outcome = mind2web_step(&step, &m2w);
    println!("{outcome:?}");
    let r = mind2web_scores(&[(Mind2WebSplit::CrossTask, outcome)], &m2w)?;
    println!("step_sr {:?}", r.overall("step_sr"));

    let mut runs = BTreeMap::new();
    runs.insert("click-button".to_string(), vec![true, true, false, true]);
    runs.insert("enter-text".to_string(), vec![true, false]);
    println!("miniwob mean {:?}", miniwob_score(&runs)?.overall("mean"));

    Ok(())
}
