//! Runs the click-accuracy evaluation on the bundled fixture against two
//! local mock models: one that answers from an oracle key and one that
//! always clicks the top-left corner.
//!
//! `cargo run --example screenspot_mock`

use std::path::Path;

use ggb::runner::{
    load_screenspot, markdown_table, run_grounding_eval, screenspot_answer_key, EvalOptions,
    HttpPredictor, MockBehavior, MockServer, ModelEndpoint,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/screenspot/cases.jsonl");
    let root = data.parent().unwrap();
    let cases = load_screenspot(&data)?.records;
    let opts = EvalOptions::default();

    let key = screenspot_answer_key(&cases, root, &opts)?;
    for behavior in [
        MockBehavior::Oracle(key),
        MockBehavior::Constant("(0.00, 0.00)".into()),
    ] {
        let server = MockServer::start(behavior, 4)?;
        let model = HttpPredictor::new(ModelEndpoint::new(server.url()))?;
        let (preds, report) = run_grounding_eval(&cases, root, &model, &opts)?;
        println!(
            "{} predictions, first: {:?}",
            preds.len(),
            preds[0].raw_output
        );
        println!("{}", markdown_table(&report));
    }
    Ok(())
}
