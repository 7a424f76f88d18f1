//! The `ggb` command line. The binary only forwards to [`run`], so every
//! subcommand can also be driven in-process.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataprep::{
    crop_step, select_validation, split_aitw, EpisodeManifest, PixelRect, DEFAULT_SUBSET_COUNTS,
};
use crate::geometry::PixelDims;
use crate::harvest::{
    assemble_corpus, harvest_fixtures, invert_captions, read_jsonl, render_page, write_jsonl,
    CaptionRecord, CaptionTaskMix, MixSpec, PageLayout, RendererConfig, SamplePools,
    DEFAULT_SHARD_SIZE,
};
use crate::metrics::{AitwConfig, Mind2WebConfig, ScoreReport};
use crate::prompt::{AgentTemplate, PromptPool, PromptPools, DEFAULT_HISTORY_LEN};
use crate::runner::{
    aitw_answer_key, emit_report, infer_aitw, infer_mind2web, infer_screenspot, load_aitw,
    load_mind2web, load_predictions, load_report, load_screenspot, mind2web_answer_key,
    run_miniwob, score_aitw, score_mind2web, score_screenspot, screenspot_answer_key,
    scripted_answer_key, write_predictions, AnswerKey, EnvAdapter, EpisodeConfig, EvalOptions,
    HistoryMode, HttpPredictor, Loaded, MockBehavior, MockServer, ModelEndpoint, ScriptedEnv,
    ScriptedTask,
};
use crate::sample::{GroundingSample, GroundingTask};

pub const ENDPOINT_ENV: &str = "GGB_ENDPOINT";
pub const TIMEOUT_ENV: &str = "GGB_TIMEOUT";

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(
    name = "ggb",
    version,
    about = "GUI grounding data curation and agent evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect grounding samples from web pages or caption data.
    #[command(subcommand)]
    Harvest(HarvestCmd),
    /// Draw a mixed training corpus from sample files.
    Assemble(AssembleArgs),
    /// Prepare benchmark splits and crops.
    #[command(subcommand)]
    Prep(PrepCmd),
    /// Run a benchmark against a model endpoint.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Re-score a saved predictions file without calling the model.
    Score(ScoreArgs),
    /// Re-emit the tables of a saved report.
    Report(ReportArgs),
    /// Serve a mock model on /predict.
    ServeMock(ServeMockArgs),
    /// Build the answer key an oracle mock server needs for a benchmark.
    OracleKey(OracleKeyArgs),
}

#[derive(Debug, Subcommand)]
pub enum HarvestCmd {
    /// Render a URL list in a remote-debugging browser and harvest it.
    Web(HarvestWebArgs),
    /// Harvest saved page snapshots (screenshot.png + layout.json per dir).
    Fixtures(HarvestFixturesArgs),
    /// Turn widget captions into instruction-to-location samples.
    InvertCaptions(InvertArgs),
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    /// Directory of `<task>.txt` prompt pools overriding the built-in ones.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PromptArgs {
    fn pools(&self) -> Result<PromptPools, crate::prompt::PromptError> {
        match &self.prompts {
            Some(dir) => PromptPools::load_dir(dir),
            None => Ok(PromptPools::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct HarvestWebArgs {
    /// Text file with one URL per line.
    #[arg(long)]
    pub urls: PathBuf,
    /// Browser remote-debugging address, `host:port` or a `ws://` page URL.
    #[arg(long)]
    pub renderer: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Extra attempts for connection, timeout and navigation failures.
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    /// Per-page timeout in seconds.
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[command(flatten)]
    pub prompt: PromptArgs,
}

#[derive(Debug, Args)]
pub struct HarvestFixturesArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[command(flatten)]
    pub prompt: PromptArgs,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// JSONL of caption records.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Emit point targets only instead of the default point/box mix.
    #[arg(long)]
    pub point_only: bool,
    #[command(flatten)]
    pub prompt: PromptArgs,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Mix specification JSON. The built-in mixture is used when omitted.
    #[arg(long)]
    pub mix: Option<PathBuf>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample JSONL files to draw from. Repeatable.
    #[arg(long = "samples", required = true)]
    pub samples: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SHARD_SIZE)]
    pub shard_size: usize,
}

#[derive(Debug, Subcommand)]
pub enum PrepCmd {
    /// Instruction-wise train/test split of an episode manifest.
    SplitAitw(SplitArgs),
    /// Choose 1920x1080 crops for long page captures.
    CropMind2web(CropArgs),
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// JSONL of episodes: {episode_id, instruction, subset}.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::dataprep::DEFAULT_TRAIN_FRAC)]
    pub train_frac: f64,
    /// Validation episodes per subset, disjoint from train and test. 0 disables.
    #[arg(long, default_value_t = crate::dataprep::DEFAULT_VALIDATION_PER_SUBSET)]
    pub validation: usize,
}

#[derive(Debug, Args)]
pub struct CropArgs {
    /// JSONL of {id, page: {width, height}, bbox: [l, t, r, d]}.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EndpointArgs {
    /// Model server base URL. GGB_ENDPOINT takes precedence when set.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Request timeout in seconds. GGB_TIMEOUT takes precedence when set.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = crate::runner::client::DEFAULT_MAX_RETRIES)]
    pub retries: u32,
    /// Bearer token sent with each request.
    #[arg(long)]
    pub token: Option<String>,
}

impl EndpointArgs {
    pub fn resolve(&self) -> Result<ModelEndpoint, String> {
        let url = std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|v| !v.is_empty())
            .or_else(|| self.endpoint.clone())
            .ok_or_else(|| format!("no endpoint: pass --endpoint or set {ENDPOINT_ENV}"))?;
        let timeout = match std::env::var(TIMEOUT_ENV).ok().filter(|v| !v.is_empty()) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| format!("{TIMEOUT_ENV}={v} is not a number of seconds"))?,
            None => self.timeout,
        };
        if !(timeout.is_finite() && timeout > 0.0) {
            return Err(format!("timeout must be positive, got {timeout}"));
        }
        let mut ep = ModelEndpoint::new(url)
            .with_timeout(Duration::from_secs_f64(timeout))
            .with_max_retries(self.retries);
        ep.auth_token = self.token.clone();
        Ok(ep)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub parallel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HistoryArg {
    Reference,
    Predicted,
}

#[derive(Debug, Args)]
pub struct AgentArgs {
    /// Previous actions shown in the prompt.
    #[arg(long, default_value_t = DEFAULT_HISTORY_LEN)]
    pub k: usize,
    /// Agent prompt template file with {instruction} and {history}.
    #[arg(long)]
    pub template: Option<PathBuf>,
}

impl AgentArgs {
    fn template(&self) -> Result<AgentTemplate, crate::prompt::PromptError> {
        match &self.template {
            Some(p) => AgentTemplate::load(p),
            None => Ok(AgentTemplate::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Benchmark JSONL.
    #[arg(long)]
    pub data: PathBuf,
    /// Image directory. Defaults to the data file's directory.
    #[arg(long)]
    pub images: Option<PathBuf>,
}

impl DataArgs {
    fn image_root(&self) -> PathBuf {
        self.images.clone().unwrap_or_else(|| {
            self.data
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default()
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    Screenspot {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Grounding prompt pool file, one template per line with {instruction}.
        #[arg(long)]
        prompts: Option<PathBuf>,
    },
    Aitw {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        agent: AgentArgs,
        #[arg(long, value_enum, default_value_t = HistoryArg::Reference)]
        history: HistoryArg,
    },
    Mind2web {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        agent: AgentArgs,
        #[arg(long, value_enum, default_value_t = HistoryArg::Reference)]
        history: HistoryArg,
    },
    /// Episodes in the scripted environment.
    Miniwob {
        /// JSON list of scripted tasks. The built-in five are used when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        agent: AgentArgs,
        /// Restrict to these task names (comma separated).
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<String>,
        #[arg(long, default_value_t = crate::runner::episode::DEFAULT_SEEDS)]
        seeds: u64,
        #[arg(long, default_value_t = crate::runner::episode::DEFAULT_MAX_STEPS)]
        max_steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OfflineBenchmark {
    Screenspot,
    Aitw,
    Mind2web,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_enum)]
    pub benchmark: OfflineBenchmark,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A saved report.json.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MockMode {
    Oracle,
    Constant,
    Gibberish,
}

#[derive(Debug, Args)]
pub struct ServeMockArgs {
    #[arg(long, value_enum)]
    pub mode: MockMode,
    /// Answer key for oracle mode. Repeatable; keys are merged.
    #[arg(long)]
    pub key: Vec<PathBuf>,
    /// Reply for constant mode.
    #[arg(long, default_value = "(0.00, 0.00)")]
    pub text: String,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KeyBenchmark {
    Screenspot,
    Aitw,
    Mind2web,
    Miniwob,
}

#[derive(Debug, Args)]
pub struct OracleKeyArgs {
    #[arg(value_enum)]
    pub benchmark: KeyBenchmark,
    /// Benchmark JSONL (task list JSON for miniwob, optional).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Must match the seed later passed to `eval`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub agent: AgentArgs,
    #[arg(long, default_value_t = crate::runner::episode::DEFAULT_SEEDS)]
    pub seeds: u64,
    #[arg(long, default_value_t = crate::runner::episode::DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

/// One page to crop, as read by `prep crop-mind2web`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CropRequest {
    pub id: String,
    pub page: PixelDims,
    pub bbox: PixelRect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CropRecord {
    id: String,
    #[serde(flatten)]
    spec: crate::dataprep::CropSpec,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cmd: Command) -> CliResult {
    match cmd {
        Command::Harvest(h) => harvest(h),
        Command::Assemble(a) => assemble(a),
        Command::Prep(p) => prep(p),
        Command::Eval(e) => eval(e),
        Command::Score(s) => score(s),
        Command::Report(r) => {
            let report = load_report(&r.input)?;
            emit(&report, &r.out)
        }
        Command::ServeMock(s) => serve_mock(s),
        Command::OracleKey(k) => oracle_key(k),
    }
}

fn emit(report: &ScoreReport, out: &Path) -> CliResult {
    for p in emit_report(report, out)? {
        log::info!("wrote {}", p.display());
    }
    print!("{}", crate::runner::markdown_table(report));
    Ok(())
}

fn harvest(cmd: HarvestCmd) -> CliResult {
    match cmd {
        HarvestCmd::Fixtures(a) => {
            let s = harvest_fixtures(&a.dir, &a.out, a.workers, &a.prompt.pools()?, a.prompt.seed)?;
            println!(
                "{} pages, {} elements, {} samples",
                s.pages, s.elements, s.samples
            );
        }
        HarvestCmd::Web(a) => harvest_web(a)?,
        HarvestCmd::InvertCaptions(a) => {
            let records: Vec<CaptionRecord> = read_jsonl(&a.input)?;
            let mix = if a.point_only {
                CaptionTaskMix::point_only()
            } else {
                CaptionTaskMix::default()
            };
            let (samples, skipped) =
                invert_captions(&records, mix, &a.prompt.pools()?, a.prompt.seed)?;
            fs::create_dir_all(&a.out)?;
            write_jsonl(&a.out.join("samples.jsonl"), &samples)?;
            let skipped: Vec<_> = skipped
                .skipped
                .iter()
                .map(|(line, reason)| serde_json::json!({"record": line, "reason": reason}))
                .collect();
            write_jsonl(&a.out.join("skipped.jsonl"), &skipped)?;
            println!(
                "{} samples, {} records skipped",
                samples.len(),
                skipped.len()
            );
        }
    }
    Ok(())
}

fn harvest_web(a: HarvestWebArgs) -> CliResult {
    let urls: Vec<String> = fs::read_to_string(&a.urls)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect();
    let mut cfg = RendererConfig::new(a.renderer.clone());
    cfg.timeout = Duration::from_secs(a.timeout.max(1));
    let pages = a.out.join("pages");
    let mut failures = Vec::new();
    for (i, url) in urls.iter().enumerate() {
        let dir = pages.join(format!("{i:05}"));
        let mut attempt = 0;
        let result = loop {
            match render_page(url, &cfg, &dir.join("screenshot.png")) {
                Err(e) if e.is_retryable() && attempt < a.retries => {
                    attempt += 1;
                    log::warn!("{url}: {e}, retrying ({attempt}/{})", a.retries);
                }
                other => break other,
            }
        };
        match result {
            Ok(snap) => {
                let layout = PageLayout {
                    url: snap.url.clone(),
                    width: snap.dims.width,
                    height: snap.dims.height,
                    nodes: snap.layout,
                };
                fs::write(
                    dir.join("layout.json"),
                    serde_json::to_string_pretty(&layout)? + "\n",
                )?;
            }
            Err(e) => {
                log::warn!("{url}: {e}");
                let _ = fs::remove_dir_all(&dir);
                failures.push(serde_json::json!({"url": url, "error": e.to_string()}));
            }
        }
    }
    fs::create_dir_all(&pages)?;
    write_jsonl(&a.out.join("failures.jsonl"), &failures)?;
    let s = harvest_fixtures(&pages, &a.out, a.workers, &a.prompt.pools()?, a.prompt.seed)?;
    println!(
        "{} of {} pages rendered, {} elements, {} samples",
        s.pages,
        urls.len(),
        s.elements,
        s.samples
    );
    Ok(())
}

fn assemble(a: AssembleArgs) -> CliResult {
    let mut mix = match &a.mix {
        Some(p) => serde_json::from_str::<MixSpec>(&fs::read_to_string(p)?)?,
        None => MixSpec::default(),
    };
    if let Some(b) = a.budget {
        mix = mix.with_budget(b);
    }
    if let Some(s) = a.seed {
        mix = mix.with_seed(s);
    }
    let mut pools = SamplePools::new();
    for path in &a.samples {
        for s in read_jsonl::<GroundingSample>(path)? {
            pools.push(s);
        }
    }
    let m = assemble_corpus(&pools, &mix, &a.out, a.shard_size)?;
    for c in &m.cells {
        println!("{} {} {}", c.domain, c.task, c.count);
    }
    println!("{} shards", m.shards.len());
    Ok(())
}

fn prep(cmd: PrepCmd) -> CliResult {
    match cmd {
        PrepCmd::SplitAitw(a) => {
            let episodes: Vec<EpisodeManifest> = read_jsonl(&a.manifest)?;
            let mut split = split_aitw(&episodes, &DEFAULT_SUBSET_COUNTS, a.train_frac, a.seed)?;
            if a.validation > 0 {
                split.validation_ids = select_validation(&episodes, a.validation, a.seed, &split)?;
            }
            write_file(&a.out, serde_json::to_string_pretty(&split)? + "\n")?;
            for (subset, s) in &split.subsets {
                println!(
                    "{subset}: train {} test {}",
                    s.train_ids.len(),
                    s.test_ids.len()
                );
            }
            println!("validation {}", split.validation_ids.len());
        }
        PrepCmd::CropMind2web(a) => {
            let reqs: Vec<CropRequest> = read_jsonl(&a.input)?;
            let mut out = Vec::with_capacity(reqs.len());
            for r in reqs {
                let spec = crop_step(r.page, r.bbox, a.seed, &r.id)
                    .map_err(|e| format!("{}: {e}", r.id))?;
                out.push(CropRecord { id: r.id, spec });
            }
            write_jsonl(&a.out, &out)?;
            println!("{} crops", out.len());
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: String) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn history_mode(h: HistoryArg) -> HistoryMode {
    match h {
        HistoryArg::Reference => HistoryMode::Reference,
        HistoryArg::Predicted => HistoryMode::Predicted,
    }
}

fn checked<T>(loaded: Loaded<T>, path: &Path) -> Result<Vec<T>, String> {
    if loaded.errors.is_empty() {
        return Ok(loaded.records);
    }
    for e in &loaded.errors {
        log::error!("{}: {e}", path.display());
    }
    Err(format!(
        "{}: {} invalid records",
        path.display(),
        loaded.errors.len()
    ))
}

fn grounding_pool(path: Option<&Path>) -> CliResult<PromptPool> {
    Ok(match path {
        Some(p) => PromptPool::from_text("instruction", &fs::read_to_string(p)?)?,
        None => PromptPool::for_task(GroundingTask::TextToPoint),
    })
}

fn scripted_tasks(data: Option<&Path>, filter: &[String]) -> CliResult<Vec<ScriptedTask>> {
    let mut tasks = match data {
        Some(p) => serde_json::from_str::<Vec<ScriptedTask>>(&fs::read_to_string(p)?)?,
        None => ScriptedTask::builtin(),
    };
    if !filter.is_empty() {
        tasks.retain(|t| filter.contains(&t.name));
    }
    Ok(tasks)
}

fn eval(cmd: EvalCmd) -> CliResult {
    match cmd {
        EvalCmd::Screenspot { data, run, prompts } => {
            let cases = checked(load_screenspot(&data.data)?, &data.data)?;
            let opts = EvalOptions {
                parallel: run.parallel,
                seed: run.seed,
                grounding_pool: grounding_pool(prompts.as_deref())?,
                ..EvalOptions::default()
            };
            let predictor = HttpPredictor::new(run.endpoint.resolve()?)?;
            let preds = infer_screenspot(&cases, &data.image_root(), &predictor, &opts)?;
            write_predictions(&run.out.join("predictions.jsonl"), &preds)?;
            emit(&score_screenspot(&cases, &preds)?, &run.out)
        }
        EvalCmd::Aitw {
            data,
            run,
            agent,
            history,
        } => {
            let steps = checked(load_aitw(&data.data)?, &data.data)?;
            let opts = agent_options(&run, &agent, history)?;
            let predictor = HttpPredictor::new(run.endpoint.resolve()?)?;
            let preds = infer_aitw(&steps, &data.image_root(), &predictor, &opts)?;
            write_predictions(&run.out.join("predictions.jsonl"), &preds)?;
            emit(
                &score_aitw(&steps, &preds, &AitwConfig::default())?,
                &run.out,
            )
        }
        EvalCmd::Mind2web {
            data,
            run,
            agent,
            history,
        } => {
            let steps = checked(load_mind2web(&data.data)?, &data.data)?;
            let opts = agent_options(&run, &agent, history)?;
            let predictor = HttpPredictor::new(run.endpoint.resolve()?)?;
            let preds = infer_mind2web(&steps, &data.image_root(), &predictor, &opts)?;
            write_predictions(&run.out.join("predictions.jsonl"), &preds)?;
            emit(
                &score_mind2web(&steps, &preds, &Mind2WebConfig::default())?,
                &run.out,
            )
        }
        EvalCmd::Miniwob {
            data,
            run,
            agent,
            tasks,
            seeds,
            max_steps,
        } => {
            let catalog = scripted_tasks(data.as_deref(), &[])?;
            let names: Vec<String> = if tasks.is_empty() {
                catalog.iter().map(|t| t.name.clone()).collect()
            } else {
                tasks
            };
            let cfg = EpisodeConfig {
                max_steps,
                k: agent.k,
                template: agent.template()?,
            };
            let seeds: Vec<u64> = (0..seeds).collect();
            let predictor = HttpPredictor::new(run.endpoint.resolve()?)?;
            let factory = |name: &str| -> Result<Box<dyn EnvAdapter>, crate::runner::EnvError> {
                let env = ScriptedEnv::new(catalog.clone());
                if env.has_task(name) {
                    Ok(Box::new(env))
                } else {
                    Err(crate::runner::EnvError::UnknownTask(name.to_string()))
                }
            };
            let (report, episodes) =
                run_miniwob(&names, &seeds, &factory, &predictor, &cfg, run.parallel)?;
            fs::create_dir_all(&run.out)?;
            write_jsonl(&run.out.join("episodes.jsonl"), &episodes)?;
            emit(&report, &run.out)
        }
    }
}

fn agent_options(run: &RunArgs, agent: &AgentArgs, history: HistoryArg) -> CliResult<EvalOptions> {
    Ok(EvalOptions {
        parallel: run.parallel,
        seed: run.seed,
        history: history_mode(history),
        k: agent.k,
        agent_template: agent.template()?,
        ..EvalOptions::default()
    })
}

fn score(a: ScoreArgs) -> CliResult {
    let preds = load_predictions(&a.predictions)?;
    let report = match a.benchmark {
        OfflineBenchmark::Screenspot => {
            score_screenspot(&checked(load_screenspot(&a.data)?, &a.data)?, &preds)?
        }
        OfflineBenchmark::Aitw => score_aitw(
            &checked(load_aitw(&a.data)?, &a.data)?,
            &preds,
            &AitwConfig::default(),
        )?,
        OfflineBenchmark::Mind2web => score_mind2web(
            &checked(load_mind2web(&a.data)?, &a.data)?,
            &preds,
            &Mind2WebConfig::default(),
        )?,
    };
    emit(&report, &a.out)
}

fn serve_mock(a: ServeMockArgs) -> CliResult {
    let behavior = match a.mode {
        MockMode::Oracle => {
            let mut key = AnswerKey::default();
            for p in &a.key {
                key.merge(AnswerKey::load(p)?)?;
            }
            if key.is_empty() {
                return Err("oracle mode needs at least one non-empty --key".into());
            }
            MockBehavior::Oracle(key)
        }
        MockMode::Constant => MockBehavior::Constant(a.text.clone()),
        MockMode::Gibberish => MockBehavior::Gibberish,
    };
    let server = MockServer::bind(&a.addr, behavior, a.workers)?;
    println!("serving {:?} mock on {}", a.mode, server.url());
    server.wait();
    Ok(())
}

fn oracle_key(a: OracleKeyArgs) -> CliResult {
    let data = || {
        a.data
            .clone()
            .ok_or("--data is required for this benchmark")
    };
    let root = |d: &Path| {
        a.images
            .clone()
            .unwrap_or_else(|| d.parent().map(Path::to_path_buf).unwrap_or_default())
    };
    let opts = EvalOptions {
        seed: a.seed,
        k: a.agent.k,
        agent_template: a.agent.template()?,
        grounding_pool: grounding_pool(a.prompts.as_deref())?,
        ..EvalOptions::default()
    };
    let key = match a.benchmark {
        KeyBenchmark::Screenspot => {
            let d = data()?;
            screenspot_answer_key(&checked(load_screenspot(&d)?, &d)?, &root(&d), &opts)?
        }
        KeyBenchmark::Aitw => {
            let d = data()?;
            aitw_answer_key(&checked(load_aitw(&d)?, &d)?, &root(&d), &opts)?
        }
        KeyBenchmark::Mind2web => {
            let d = data()?;
            mind2web_answer_key(&checked(load_mind2web(&d)?, &d)?, &root(&d), &opts)?
        }
        KeyBenchmark::Miniwob => {
            let cfg = EpisodeConfig {
                max_steps: a.max_steps,
                k: a.agent.k,
                template: opts.agent_template.clone(),
            };
            let seeds: Vec<u64> = (0..a.seeds).collect();
            scripted_answer_key(&scripted_tasks(a.data.as_deref(), &[])?, &seeds, &cfg)?
        }
    };
    key.save(&a.out)?;
    println!("{} answers", key.len());
    Ok(())
}
