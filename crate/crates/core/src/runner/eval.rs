//! Offline evaluations, split into an inference pass that produces
//! [`PredictionRecord`]s and a pure scoring pass over them.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::client::Predictor;
use super::data::{AitwStepRecord, Mind2WebStepRecord, PredictionRecord, ScreenspotCase};
use super::mock::AnswerKey;
use super::RunError;
use crate::action::{
    encode_action, encode_output, encode_web_action, parse_action, parse_web_action, Action,
    AgentOutput,
};
use crate::geometry::{format_point, parse_location, NormBBox, NormPoint};
use crate::metrics::{
    aitw_scores, click_accuracy, distance_histogram, match_step_aitw, mind2web_scores,
    mind2web_step, AgentStep, AitwConfig, GroundingCase, Mind2WebConfig, Mind2WebStep, ScoreReport,
};
use crate::prompt::{
    build_grounding_prompt, AgentTemplate, PromptPool, PromptSpec, DEFAULT_HISTORY_LEN,
};
use crate::rng::derive_rng;
use crate::sample::GroundingTask;

/// Which action trail the agent prompt shows for earlier steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryMode {
    /// The reference actions (teacher forcing).
    #[default]
    Reference,
    /// The model's own parsed predictions for earlier steps of the episode.
    Predicted,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub parallel: usize,
    pub seed: u64,
    pub history: HistoryMode,
    pub k: usize,
    pub grounding_pool: PromptPool,
    pub agent_template: AgentTemplate,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            parallel: 4,
            seed: 0,
            history: HistoryMode::Reference,
            k: DEFAULT_HISTORY_LEN,
            grounding_pool: PromptPool::for_task(GroundingTask::TextToPoint),
            agent_template: AgentTemplate::default(),
        }
    }
}

/// Loads screenshots once and shares them across cases.
struct ImageCache {
    root: PathBuf,
    images: HashMap<String, Vec<u8>>,
}

impl ImageCache {
    fn load<'a>(root: &Path, names: impl Iterator<Item = &'a str>) -> Result<Self, RunError> {
        let mut images = HashMap::new();
        for name in names {
            if images.contains_key(name) {
                continue;
            }
            let path = root.join(name);
            let bytes = fs::read(&path).map_err(|e| RunError::io(&path, e))?;
            images.insert(name.to_string(), bytes);
        }
        Ok(Self {
            root: root.to_path_buf(),
            images,
        })
    }

    fn get(&self, name: &str) -> &[u8] {
        self.images
            .get(name)
            .unwrap_or_else(|| panic!("image {name} not loaded from {}", self.root.display()))
    }
}

fn pool(parallel: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .expect("thread pool")
}

fn call(
    predictor: &dyn Predictor,
    image: &[u8],
    id: &str,
    prompt: String,
    parse: impl Fn(&str) -> Value,
) -> PredictionRecord {
    match predictor.predict(image, &prompt) {
        Ok(raw) => PredictionRecord {
            id: id.to_string(),
            parsed: parse(&raw),
            prompt,
            raw_output: raw,
            error: None,
        },
        Err(e) => PredictionRecord {
            id: id.to_string(),
            prompt,
            raw_output: String::new(),
            parsed: Value::Null,
            error: Some(format!("{}: {e}", e.kind())),
        },
    }
}

fn sort_by_id(mut preds: Vec<PredictionRecord>) -> Vec<PredictionRecord> {
    preds.sort_by(|a, b| a.id.cmp(&b.id));
    preds
}

fn by_id(preds: &[PredictionRecord]) -> HashMap<&str, &PredictionRecord> {
    preds.iter().map(|p| (p.id.as_str(), p)).collect()
}

fn error_count(preds: &[PredictionRecord]) -> usize {
    preds.iter().filter(|p| p.error.is_some()).count()
}

// ---------------------------------------------------------------- grounding

pub fn grounding_prompt(case: &ScreenspotCase, opts: &EvalOptions) -> Result<String, RunError> {
    let mut rng = derive_rng(opts.seed, &format!("screenspot/{}", case.id));
    Ok(build_grounding_prompt(
        &case.instruction,
        &opts.grounding_pool,
        &mut rng,
    )?)
}

/// The click point in a grounding answer. A box answer counts as its center.
pub fn parse_grounding_output(raw: &str) -> Option<NormPoint> {
    parse_location(raw).ok().map(|l| l.click_point())
}

fn point_json(p: Option<NormPoint>) -> Value {
    p.map_or(Value::Null, |p| json!([p.x(), p.y()]))
}

pub fn infer_screenspot(
    cases: &[ScreenspotCase],
    root: &Path,
    predictor: &dyn Predictor,
    opts: &EvalOptions,
) -> Result<Vec<PredictionRecord>, RunError> {
    let images = ImageCache::load(root, cases.iter().map(|c| c.image.as_str()))?;
    let prompts = cases
        .iter()
        .map(|c| grounding_prompt(c, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let preds = pool(opts.parallel).install(|| {
        cases
            .par_iter()
            .zip(prompts)
            .map(|(c, prompt)| {
                call(predictor, images.get(&c.image), &c.id, prompt, |raw| {
                    point_json(parse_grounding_output(raw))
                })
            })
            .collect()
    });
    Ok(sort_by_id(preds))
}

/// Scores saved predictions; re-parses `raw_output` rather than trusting
/// `parsed`. Cases without a prediction count as misses.
pub fn score_screenspot(
    cases: &[ScreenspotCase],
    preds: &[PredictionRecord],
) -> Result<ScoreReport, RunError> {
    let map = by_id(preds);
    let gcases: Vec<GroundingCase> = cases
        .iter()
        .map(|c| GroundingCase {
            platform: c.platform,
            kind: c.kind,
            gt_bbox: c.bbox,
            prediction: map
                .get(c.id.as_str())
                .and_then(|p| parse_grounding_output(&p.raw_output)),
        })
        .collect();
    let mut report = click_accuracy(&gcases)?;
    report.histogram = Some(distance_histogram(&gcases));
    report.params.insert("cases".into(), cases.len().into());
    report
        .params
        .insert("endpoint_errors".into(), error_count(preds).into());
    Ok(report)
}

pub fn run_grounding_eval(
    cases: &[ScreenspotCase],
    root: &Path,
    predictor: &dyn Predictor,
    opts: &EvalOptions,
) -> Result<(Vec<PredictionRecord>, ScoreReport), RunError> {
    let preds = infer_screenspot(cases, root, predictor, opts)?;
    let report = score_screenspot(cases, &preds)?;
    Ok((preds, report))
}

/// The answer an ideal model gives: a two-decimal point inside the box.
pub fn grounding_oracle_answer(b: NormBBox) -> String {
    format_point(b.grid_anchor().unwrap_or_else(|| b.center())).into_string()
}

pub fn screenspot_answer_key(
    cases: &[ScreenspotCase],
    root: &Path,
    opts: &EvalOptions,
) -> Result<AnswerKey, RunError> {
    let images = ImageCache::load(root, cases.iter().map(|c| c.image.as_str()))?;
    let mut key = AnswerKey::default();
    for c in cases {
        key.insert(
            images.get(&c.image),
            &grounding_prompt(c, opts)?,
            grounding_oracle_answer(c.bbox),
        )?;
    }
    Ok(key)
}

// ---------------------------------------------------------------- agents

/// Steps of one episode in order.
fn episodes<T>(steps: &[T], key: impl Fn(&T) -> (&str, usize)) -> Vec<Vec<&T>> {
    let mut map: BTreeMap<&str, Vec<&T>> = BTreeMap::new();
    for s in steps {
        map.entry(key(s).0).or_default().push(s);
    }
    map.into_values()
        .map(|mut v| {
            v.sort_by_key(|s| key(s).1);
            v
        })
        .collect()
}

fn agent_prompt(instruction: &str, history: Vec<Action>, opts: &EvalOptions) -> String {
    opts.agent_template
        .render(&PromptSpec::new(instruction, history).with_k(opts.k))
}

/// Shared inference driver for step datasets.
fn infer_steps<T: Sync>(
    steps: &[T],
    root: &Path,
    predictor: &dyn Predictor,
    opts: &EvalOptions,
    fields: impl Fn(&T) -> (&str, &str, usize, &str, &str) + Sync,
    reference_history: impl Fn(&T) -> Vec<Action> + Sync,
    parse: impl Fn(&str) -> (Value, Option<Action>) + Sync,
) -> Result<Vec<PredictionRecord>, RunError> {
    let images = ImageCache::load(root, steps.iter().map(|s| fields(s).4))?;
    let eps = episodes(steps, |s| {
        let f = fields(s);
        (f.1, f.2)
    });
    let preds: Vec<Vec<PredictionRecord>> = pool(opts.parallel).install(|| {
        eps.par_iter()
            .map(|ep| {
                let mut predicted: Vec<Action> = Vec::new();
                let mut out = Vec::with_capacity(ep.len());
                for s in ep {
                    let (id, _, _, instruction, image) = fields(s);
                    let history = match opts.history {
                        HistoryMode::Reference => reference_history(s),
                        HistoryMode::Predicted => predicted.clone(),
                    };
                    let prompt = agent_prompt(instruction, history, opts);
                    let rec = call(predictor, images.get(image), id, prompt, |raw| parse(raw).0);
                    if let Some(a) = parse(&rec.raw_output).1 {
                        predicted.push(a);
                    }
                    out.push(rec);
                }
                out
            })
            .collect()
    });
    Ok(sort_by_id(preds.into_iter().flatten().collect()))
}

fn aitw_parse(raw: &str) -> (Value, Option<Action>) {
    match parse_action(raw) {
        Ok(o) => (Value::String(encode_output(&o)), o.action().cloned()),
        Err(_) => (Value::Null, None),
    }
}

fn web_parse(raw: &str) -> (Value, Option<Action>) {
    match parse_web_action(raw) {
        Ok(w) => {
            let text = match &w.output {
                AgentOutput::Action(a) => {
                    encode_web_action(a, w.element_point.filter(|_| !a.is_click()))
                }
                other => encode_output(other),
            };
            (Value::String(text), w.output.action().cloned())
        }
        Err(_) => (Value::Null, None),
    }
}

pub fn infer_aitw(
    steps: &[AitwStepRecord],
    root: &Path,
    predictor: &dyn Predictor,
    opts: &EvalOptions,
) -> Result<Vec<PredictionRecord>, RunError> {
    infer_steps(
        steps,
        root,
        predictor,
        opts,
        |s| {
            (
                s.id.as_str(),
                s.episode_id.as_str(),
                s.step,
                s.instruction.as_str(),
                s.image.as_str(),
            )
        },
        |s| s.history_actions().unwrap_or_default(),
        aitw_parse,
    )
}

pub fn score_aitw(
    steps: &[AitwStepRecord],
    preds: &[PredictionRecord],
    cfg: &AitwConfig,
) -> Result<ScoreReport, RunError> {
    let map = by_id(preds);
    let mut scored = Vec::with_capacity(steps.len());
    for s in steps {
        let step = AgentStep {
            ref_action: s.reference().map_err(RunError::Schema)?,
            ref_bbox: s.ref_bbox,
            pred_action: map
                .get(s.id.as_str())
                .and_then(|p| parse_action(&p.raw_output).ok()),
        };
        scored.push((s.subset, match_step_aitw(&step, cfg)));
    }
    let mut report = aitw_scores(&scored, cfg);
    report.params.insert("steps".into(), steps.len().into());
    report
        .params
        .insert("endpoint_errors".into(), error_count(preds).into());
    report.params.insert(
        "unparsed_predictions".into(),
        steps
            .iter()
            .filter(|s| {
                map.get(s.id.as_str())
                    .is_none_or(|p| parse_action(&p.raw_output).is_err())
            })
            .count()
            .into(),
    );
    Ok(report)
}

pub fn infer_mind2web(
    steps: &[Mind2WebStepRecord],
    root: &Path,
    predictor: &dyn Predictor,
    opts: &EvalOptions,
) -> Result<Vec<PredictionRecord>, RunError> {
    infer_steps(
        steps,
        root,
        predictor,
        opts,
        |s| {
            (
                s.id.as_str(),
                s.episode_id.as_str(),
                s.step,
                s.instruction.as_str(),
                s.image.as_str(),
            )
        },
        |s| s.history_actions().unwrap_or_default(),
        web_parse,
    )
}

pub fn score_mind2web(
    steps: &[Mind2WebStepRecord],
    preds: &[PredictionRecord],
    cfg: &Mind2WebConfig,
) -> Result<ScoreReport, RunError> {
    let map = by_id(preds);
    let mut scored = Vec::with_capacity(steps.len());
    for s in steps {
        let step = Mind2WebStep {
            ref_action: s.reference().map_err(RunError::Schema)?,
            ref_bbox: s.ref_bbox,
            pred: map
                .get(s.id.as_str())
                .and_then(|p| parse_web_action(&p.raw_output).ok()),
        };
        scored.push((s.split, mind2web_step(&step, cfg)));
    }
    let mut report = mind2web_scores(&scored, cfg)?;
    report.params.insert("steps".into(), steps.len().into());
    report
        .params
        .insert("endpoint_errors".into(), error_count(preds).into());
    Ok(report)
}

/// Prompt used for a step under reference history.
pub fn aitw_prompt(s: &AitwStepRecord, opts: &EvalOptions) -> String {
    agent_prompt(
        &s.instruction,
        s.history_actions().unwrap_or_default(),
        opts,
    )
}

pub fn mind2web_prompt(s: &Mind2WebStepRecord, opts: &EvalOptions) -> String {
    agent_prompt(
        &s.instruction,
        s.history_actions().unwrap_or_default(),
        opts,
    )
}

/// Reference output with clicks snapped inside the reference box.
pub fn aitw_oracle_answer(s: &AitwStepRecord) -> Result<String, RunError> {
    let r = s.reference().map_err(RunError::Schema)?;
    let r = match (r, s.ref_bbox) {
        (AgentOutput::Action(Action::Click { point }), b) => {
            let p = b.and_then(|b| b.grid_anchor()).unwrap_or(point);
            AgentOutput::Action(Action::click(p))
        }
        (other, _) => other,
    };
    Ok(encode_output(&r))
}

pub fn mind2web_oracle_answer(s: &Mind2WebStepRecord) -> Result<String, RunError> {
    let r = s.reference().map_err(RunError::Schema)?;
    let anchor = s
        .ref_bbox
        .grid_anchor()
        .unwrap_or_else(|| s.ref_bbox.center());
    Ok(match r {
        Action::Click { .. } => encode_action(&Action::click(anchor)),
        other => encode_web_action(&other, Some(anchor)),
    })
}

/// Answer key for teacher-forced runs over AITW steps.
pub fn aitw_answer_key(
    steps: &[AitwStepRecord],
    root: &Path,
    opts: &EvalOptions,
) -> Result<AnswerKey, RunError> {
    let images = ImageCache::load(root, steps.iter().map(|s| s.image.as_str()))?;
    let mut key = AnswerKey::default();
    for s in steps {
        key.insert(
            images.get(&s.image),
            &aitw_prompt(s, opts),
            aitw_oracle_answer(s)?,
        )?;
    }
    Ok(key)
}

pub fn mind2web_answer_key(
    steps: &[Mind2WebStepRecord],
    root: &Path,
    opts: &EvalOptions,
) -> Result<AnswerKey, RunError> {
    let images = ImageCache::load(root, steps.iter().map(|s| s.image.as_str()))?;
    let mut key = AnswerKey::default();
    for s in steps {
        key.insert(
            images.get(&s.image),
            &mind2web_prompt(s, opts),
            mind2web_oracle_answer(s)?,
        )?;
    }
    Ok(key)
}
