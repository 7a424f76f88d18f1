//! Interactive episodes against an environment adapter, and the MiniWob-style
//! multi-seed runner.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::client::Predictor;
use super::mock::AnswerKey;
use super::RunError;
use crate::action::{encode_action, encode_output, parse_action, Action, AgentOutput};
use crate::geometry::{point_in_bbox, NormBBox, PixelDims};
use crate::metrics::{miniwob_score, normalize_text, ScoreReport};
use crate::prompt::{AgentTemplate, PromptSpec, DEFAULT_HISTORY_LEN};
use crate::rng::derive_rng;

pub const DEFAULT_MAX_STEPS: usize = 30;
pub const DEFAULT_SEEDS: u64 = 50;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("environment fault: {0}")]
    Fault(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub screenshot_png: Vec<u8>,
    pub dims: PixelDims,
    /// The task utterance for this episode.
    pub instruction: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvStatus {
    Running,
    Success,
    Failure,
}

/// The contract an interactive environment fulfils. Resetting with the same
/// task and seed must give the same initial observation.
pub trait EnvAdapter {
    fn reset(&mut self, task: &str, seed: u64) -> Result<Observation, EnvError>;
    fn apply(&mut self, action: &Action) -> Result<(Observation, EnvStatus), EnvError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeOutcome {
    Success,
    Failure,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub prompt: String,
    pub raw_output: String,
    /// Encoded parsed output, absent when the output did not parse.
    pub parsed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task: String,
    pub seed: u64,
    pub steps: usize,
    pub outcome: EpisodeOutcome,
    /// Why a failed episode ended.
    pub cause: Option<String>,
    pub transcript: Vec<TranscriptStep>,
}

impl EpisodeResult {
    pub fn succeeded(&self) -> bool {
        self.outcome == EpisodeOutcome::Success
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    pub k: usize,
    pub template: AgentTemplate,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            k: DEFAULT_HISTORY_LEN,
            template: AgentTemplate::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn prompt(&self, instruction: &str, history: &[Action]) -> String {
        self.template
            .render(&PromptSpec::new(instruction, history.to_vec()).with_k(self.k))
    }
}

/// Runs one episode: prompt with the last `k` actions, predict, parse,
/// apply, until the environment ends the episode, the model gives up or
/// misbehaves, or `max_steps` actions have been taken.
pub fn run_episode(
    env: &mut dyn EnvAdapter,
    predictor: &dyn Predictor,
    task: &str,
    seed: u64,
    cfg: &EpisodeConfig,
) -> EpisodeResult {
    let mut result = EpisodeResult {
        task: task.to_string(),
        seed,
        steps: 0,
        outcome: EpisodeOutcome::Failure,
        cause: None,
        transcript: Vec::new(),
    };
    let fail = |mut r: EpisodeResult, cause: String| {
        r.outcome = EpisodeOutcome::Failure;
        r.cause = Some(cause);
        r
    };
    let mut obs = match env.reset(task, seed) {
        Ok(o) => o,
        Err(e) => return fail(result, format!("env: {e}")),
    };
    let mut history: Vec<Action> = Vec::new();
    while result.steps < cfg.max_steps {
        let prompt = cfg.prompt(&obs.instruction, &history);
        result.steps += 1;
        let raw = match predictor.predict(&obs.screenshot_png, &prompt) {
            Ok(raw) => raw,
            Err(e) => {
                result.transcript.push(TranscriptStep {
                    prompt,
                    raw_output: String::new(),
                    parsed: None,
                });
                return fail(result, format!("model: {e}"));
            }
        };
        let parsed = parse_action(&raw);
        result.transcript.push(TranscriptStep {
            prompt,
            raw_output: raw,
            parsed: parsed.as_ref().ok().map(encode_output),
        });
        let action = match parsed {
            Ok(AgentOutput::Action(a)) => a,
            Ok(AgentOutput::Status(s)) => return fail(result, format!("status: {}", s.token())),
            Err(_) => return fail(result, "parse".into()),
        };
        match env.apply(&action) {
            Ok((next, EnvStatus::Running)) => {
                obs = next;
                history.push(action);
            }
            Ok((_, EnvStatus::Success)) => {
                result.outcome = EpisodeOutcome::Success;
                return result;
            }
            Ok((_, EnvStatus::Failure)) => return fail(result, "env: task failed".into()),
            Err(e) => return fail(result, format!("env: {e}")),
        }
    }
    result.outcome = EpisodeOutcome::StepLimit;
    result.cause = Some("step-limit".into());
    result
}

/// Builds a fresh environment for a task.
pub type EnvFactory<'a> = dyn Fn(&str) -> Result<Box<dyn EnvAdapter>, EnvError> + Sync + 'a;

/// Runs every (task, seed) episode and scores per-task success rates.
/// Tasks whose environment cannot be created are flagged and left out.
pub fn run_miniwob(
    tasks: &[String],
    seeds: &[u64],
    factory: &EnvFactory<'_>,
    predictor: &dyn Predictor,
    cfg: &EpisodeConfig,
    parallel: usize,
) -> Result<(ScoreReport, Vec<EpisodeResult>), RunError> {
    let mut flags = Vec::new();
    let mut runnable = Vec::new();
    for t in tasks {
        match factory(t) {
            Ok(_) => runnable.push(t.clone()),
            Err(e) => flags.push(format!("task {t} skipped: {e}")),
        }
    }
    let jobs: Vec<(String, u64)> = runnable
        .iter()
        .flat_map(|t| seeds.iter().map(move |s| (t.clone(), *s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .expect("thread pool");
    let mut results: Vec<EpisodeResult> = pool.install(|| {
        jobs.par_iter()
            .map(|(task, seed)| match factory(task) {
                Ok(mut env) => run_episode(env.as_mut(), predictor, task, *seed, cfg),
                Err(e) => EpisodeResult {
                    task: task.clone(),
                    seed: *seed,
                    steps: 0,
                    outcome: EpisodeOutcome::Failure,
                    cause: Some(format!("env: {e}")),
                    transcript: Vec::new(),
                },
            })
            .collect()
    });
    results.sort_by(|a, b| (a.task.as_str(), a.seed).cmp(&(b.task.as_str(), b.seed)));
    let mut per_task: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for r in &results {
        per_task
            .entry(r.task.clone())
            .or_default()
            .push(r.succeeded());
    }
    let mut report = miniwob_score(&per_task)?;
    report.flags.extend(flags);
    report
        .params
        .insert("max_steps".into(), cfg.max_steps.into());
    report.params.insert("history_k".into(), cfg.k.into());
    report.params.insert("seeds".into(), json!(seeds.len()));
    report.params.insert(
        "step_limit_episodes".into(),
        results
            .iter()
            .filter(|r| r.outcome == EpisodeOutcome::StepLimit)
            .count()
            .into(),
    );
    Ok((report, results))
}

// ------------------------------------------------------------ scripted env

/// What a scripted task asks for at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Demand {
    Click,
    Type,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedTask {
    pub name: String,
    pub demands: Vec<Demand>,
}

impl ScriptedTask {
    pub fn new(name: &str, demands: &[Demand]) -> Self {
        Self {
            name: name.to_string(),
            demands: demands.to_vec(),
        }
    }

    /// Five small tasks modelled on common MiniWob tasks.
    pub fn builtin() -> Vec<ScriptedTask> {
        use Demand::*;
        vec![
            ScriptedTask::new("click-button", &[Click]),
            ScriptedTask::new("click-button-sequence", &[Click, Click]),
            ScriptedTask::new("click-checkboxes", &[Click, Click, Click]),
            ScriptedTask::new("enter-text", &[Click, Type, Click]),
            ScriptedTask::new("login-user", &[Click, Type, Click, Type, Click]),
        ]
    }

    /// A task that needs `n` clicks.
    pub fn clicks(name: &str, n: usize) -> Self {
        Self {
            name: name.to_string(),
            demands: vec![Demand::Click; n],
        }
    }
}

const WORDS: [&str; 10] = [
    "alpha", "delta", "kiwi", "lemon", "nova", "pixel", "quartz", "river", "sable", "tango",
];

#[derive(Debug, Clone, PartialEq)]
struct Expected {
    target: NormBBox,
    text: Option<String>,
}

#[derive(Debug, Clone)]
struct Episode {
    task: String,
    seed: u64,
    instruction: String,
    expected: Vec<Expected>,
    done: usize,
}

/// A deterministic fake environment. Each (task, seed) yields a fixed list
/// of required actions: clicks inside generated boxes and exact text entry.
/// Wrong actions leave the state unchanged.
#[derive(Debug, Clone)]
pub struct ScriptedEnv {
    tasks: BTreeMap<String, ScriptedTask>,
    episode: Option<Episode>,
}

pub const SCRIPTED_DIMS: PixelDims = PixelDims {
    width: 160,
    height: 210,
};

impl ScriptedEnv {
    pub fn new(tasks: impl IntoIterator<Item = ScriptedTask>) -> Self {
        Self {
            tasks: tasks.into_iter().map(|t| (t.name.clone(), t)).collect(),
            episode: None,
        }
    }

    pub fn has_task(&self, name: &str) -> bool {
        self.tasks.contains_key(name)
    }

    /// The action an ideal agent takes next, if an episode is running.
    pub fn oracle_action(&self) -> Option<Action> {
        let ep = self.episode.as_ref()?;
        let e = ep.expected.get(ep.done)?;
        Some(match &e.text {
            Some(t) => Action::type_text(t.clone()),
            None => Action::click(
                e.target
                    .grid_anchor()
                    .expect("generated boxes hold a grid point"),
            ),
        })
    }

    fn observe(&self) -> Observation {
        let ep = self.episode.as_ref().expect("episode running");
        Observation {
            screenshot_png: render_state(&ep.task, ep.seed, ep.done),
            dims: SCRIPTED_DIMS,
            instruction: ep.instruction.clone(),
        }
    }
}

/// A tiny PNG whose pixels encode (task, seed, step), so every state has
/// distinct bytes.
fn render_state(task: &str, seed: u64, step: usize) -> Vec<u8> {
    let digest = Sha256::digest(format!("{task}/{seed}/{step}").as_bytes());
    let (w, h) = (8u32, 8u32);
    let mut pixels = Vec::with_capacity((w * h * 3) as usize);
    for i in 0..(w * h) as usize {
        pixels.extend_from_slice(&[digest[i % 32], digest[(i + 11) % 32], digest[(i + 23) % 32]]);
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("png header");
        writer.write_image_data(&pixels).expect("png data");
    }
    out
}

fn generate(task: &ScriptedTask, seed: u64) -> Episode {
    let mut rng = derive_rng(seed, &format!("scripted/{}", task.name));
    let mut expected = Vec::with_capacity(task.demands.len());
    let mut words = Vec::new();
    for d in &task.demands {
        let l = f64::from(rng.gen_range(0..80u32)) / 100.0;
        let t = f64::from(rng.gen_range(0..80u32)) / 100.0;
        let target = NormBBox::new(
            l,
            t,
            l + 0.1 + f64::from(rng.gen_range(0..10u32)) / 100.0,
            t + 0.05,
        )
        .expect("generated box is in range");
        let text = match d {
            Demand::Click => None,
            Demand::Type => {
                let w = WORDS.choose(&mut rng).expect("non-empty").to_string();
                words.push(w.clone());
                Some(w)
            }
        };
        expected.push(Expected { target, text });
    }
    let instruction = if words.is_empty() {
        format!("{} (episode {seed})", task.name)
    } else {
        format!("{} (episode {seed}) with {}", task.name, words.join(", "))
    };
    Episode {
        task: task.name.clone(),
        seed,
        instruction,
        expected,
        done: 0,
    }
}

impl EnvAdapter for ScriptedEnv {
    fn reset(&mut self, task: &str, seed: u64) -> Result<Observation, EnvError> {
        let spec = self
            .tasks
            .get(task)
            .ok_or_else(|| EnvError::UnknownTask(task.to_string()))?;
        self.episode = Some(generate(spec, seed));
        Ok(self.observe())
    }

    fn apply(&mut self, action: &Action) -> Result<(Observation, EnvStatus), EnvError> {
        let ep = self
            .episode
            .as_mut()
            .ok_or_else(|| EnvError::Fault("apply before reset".into()))?;
        let e = &ep.expected[ep.done];
        let ok = match (&e.text, action) {
            (None, Action::Click { point }) => point_in_bbox(*point, e.target),
            (Some(want), Action::Type { text }) => normalize_text(text) == normalize_text(want),
            _ => false,
        };
        if ok {
            ep.done += 1;
        }
        let status = if ep.done == ep.expected.len() {
            EnvStatus::Success
        } else {
            EnvStatus::Running
        };
        Ok((self.observe(), status))
    }
}

/// Answer key that lets the oracle mock server solve every scripted episode.
pub fn scripted_answer_key(
    tasks: &[ScriptedTask],
    seeds: &[u64],
    cfg: &EpisodeConfig,
) -> Result<AnswerKey, RunError> {
    let mut key = AnswerKey::default();
    for task in tasks {
        for &seed in seeds {
            let mut env = ScriptedEnv::new([task.clone()]);
            let mut obs = env
                .reset(&task.name, seed)
                .map_err(|e| RunError::Schema(e.to_string()))?;
            let mut history = Vec::new();
            for _ in 0..cfg.max_steps {
                let Some(a) = env.oracle_action() else { break };
                key.insert(
                    &obs.screenshot_png,
                    &cfg.prompt(&obs.instruction, &history),
                    encode_action(&a),
                )?;
                let (next, status) = env.apply(&a).map_err(|e| RunError::Schema(e.to_string()))?;
                if status != EnvStatus::Running {
                    break;
                }
                history.push(a);
                obs = next;
            }
        }
    }
    Ok(key)
}
