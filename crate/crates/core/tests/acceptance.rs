//! Acceptance suite. Runs each criterion, prints one PASS/FAIL line per
//! criterion, and exits non-zero if any fail.
//!
//! ```text
//! cargo test --test acceptance            # all criteria
//! cargo test --test acceptance -- crop    # criteria whose name contains "crop"
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ggb::action::{
    encode_action, encode_output, encode_web_action, parse_action, parse_web_action, Action,
    AgentOutput, EpisodeStatus, WebOutput,
};
use ggb::dataprep::{crop_step, EpisodeManifest, PixelRect, SplitResult, CROP_HEIGHT, CROP_WIDTH};
use ggb::geometry::{
    format_bbox, format_point, parse_location, Location, NormBBox, NormPoint, PixelDims,
};
use ggb::harvest::{read_jsonl, write_jsonl, CorpusManifest, MixSpec};
use ggb::metrics::{
    aitw_scores, click_accuracy, match_step_aitw, mind2web_scores, mind2web_step, token_f1,
    AgentStep, AitwConfig, AitwSubset, GroundingCase, Mind2WebConfig, Mind2WebSplit, Mind2WebStep,
    Platform, ScoreReport, StepMatch,
};
use ggb::rng::{derive_rng, ItemRng};
use ggb::runner::{
    load_aitw, load_predictions, report_json, run_miniwob, score_aitw, scripted_answer_key,
    write_predictions, AnswerKey, EnvAdapter, EnvError, EpisodeConfig, EpisodeOutcome,
    MockBehavior, MockPredictor, MockServer, PredictionRecord, ScriptedEnv, ScriptedTask,
};
use ggb::sample::{Domain, ElementKind, GroundingSample, GroundingTask, SampleMeta};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::Value;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(rel: &str) -> PathBuf {
    Path::new(FIXTURES).join(rel)
}

fn scratch() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| tempfile::tempdir().unwrap()).path()
}

/// Runs the `ggb` binary, panicking with its stderr on failure.
fn ggb(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_ggb"))
        .args(args)
        .env_remove("GGB_ENDPOINT")
        .env_remove("GGB_TIMEOUT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn ggb");
    assert!(
        out.status.success(),
        "ggb {} failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(dir: &Path) -> ScoreReport {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn overall(r: &ScoreReport, metric: &str) -> f64 {
    r.overall(metric)
        .unwrap_or_else(|| panic!("report has no overall {metric}"))
}

// -------------------------------------------------------- oracle end-to-end

struct OracleRuns {
    screenspot: PathBuf,
    aitw: PathBuf,
    mind2web: PathBuf,
    elapsed: Duration,
}

/// Builds the answer keys, serves them from one oracle mock server, and runs
/// the three offline evaluations through the CLI.
fn oracle_runs() -> &'static OracleRuns {
    static RUNS: OnceLock<OracleRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let root = scratch().join("oracle");
        let benches = [
            ("screenspot", fixture("screenspot/cases.jsonl")),
            ("aitw", fixture("aitw/steps.jsonl")),
            ("mind2web", fixture("mind2web/steps.jsonl")),
        ];
        let mut key = AnswerKey::default();
        for (name, data) in &benches {
            let path = root.join(format!("{name}.key.json"));
            fs::create_dir_all(&root).unwrap();
            ggb(&["oracle-key", name, "--data", s(data), "--out", s(&path)]);
            key.merge(AnswerKey::load(&path).unwrap()).unwrap();
        }
        let server = MockServer::start(MockBehavior::Oracle(key), 8).unwrap();
        let url = server.url();
        for (name, data) in &benches {
            let out = root.join(name);
            ggb(&[
                "eval",
                name,
                "--endpoint",
                &url,
                "--data",
                s(data),
                "--out",
                s(&out),
                "--parallel",
                "8",
            ]);
        }
        OracleRuns {
            screenspot: root.join("screenspot"),
            aitw: root.join("aitw"),
            mind2web: root.join("mind2web"),
            elapsed: start.elapsed(),
        }
    })
}

fn oracle_end_to_end() {
    let runs = oracle_runs();
    let ss = report(&runs.screenspot);
    assert_eq!(ss.params["cases"], 1200);
    assert_eq!(overall(&ss, "average_micro"), 1.0);
    assert_eq!(overall(&ss, "average_macro"), 1.0);
    assert_eq!(ss.groups.len(), 6);
    for g in &ss.groups {
        assert_eq!(g.score("click_acc").unwrap().value, 1.0, "cell {}", g.name);
    }
    let m2w = report(&runs.mind2web);
    for metric in ["ele_acc", "op_f1", "step_sr"] {
        assert_eq!(overall(&m2w, metric), 1.0, "{metric}");
        for g in &m2w.groups {
            assert_eq!(g.score(metric).unwrap().value, 1.0, "{} {metric}", g.name);
        }
    }
    let aitw = report(&runs.aitw);
    assert_eq!(overall(&aitw, "overall"), 1.0);
    assert_eq!(overall(&aitw, "click_acc"), 1.0);
    assert!(
        runs.elapsed < Duration::from_secs(120),
        "took {:?}",
        runs.elapsed
    );
}

// -------------------------------------------------------- degenerate model

/// Counts boxes containing (0, 0) straight from the JSON, without the
/// crate's geometry types.
fn origin_box_fraction(cases: &Path) -> (usize, usize) {
    let text = fs::read_to_string(cases).unwrap();
    let mut hits = 0;
    let mut n = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line).unwrap();
        let b: Vec<f64> = v["bbox"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        n += 1;
        if b[0] <= 0.0 && 0.0 <= b[2] && b[1] <= 0.0 && 0.0 <= b[3] {
            hits += 1;
        }
    }
    (hits, n)
}

fn constant_origin_model() -> &'static PathBuf {
    static RUN: OnceLock<PathBuf> = OnceLock::new();
    RUN.get_or_init(|| {
        let out = scratch().join("constant");
        let server = MockServer::start(MockBehavior::Constant("(0.00, 0.00)".into()), 8).unwrap();
        let data = fixture("screenspot/cases.jsonl");
        ggb(&[
            "eval",
            "screenspot",
            "--endpoint",
            &server.url(),
            "--data",
            s(&data),
            "--out",
            s(&out),
            "--parallel",
            "8",
        ]);
        out
    })
}

fn degenerate_model() {
    let (hits, n) = origin_box_fraction(&fixture("screenspot/cases.jsonl"));
    assert!(hits > 0, "fixture must contain boxes at the origin");
    let r = report(constant_origin_model());
    let micro = r
        .overall
        .iter()
        .find(|s| s.metric == "average_micro")
        .unwrap();
    assert_eq!(micro.score.numerator, hits as f64);
    assert_eq!(micro.score.denominator, n);
    assert_eq!(micro.score.value, hits as f64 / n as f64);
}

// -------------------------------------------------------- codec round trips

fn unit(rng: &mut ItemRng) -> f64 {
    match rng.gen_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen::<f64>(),
    }
}

const ALPHABET: [char; 20] = [
    'a', 'Z', '7', ' ', '"', '\\', ',', ':', '(', ')', 'é', 'ß', '中', '文', '🙂', '\'', '\t', '.',
    '-', '_',
];

fn payload(rng: &mut ItemRng) -> String {
    let n = rng.gen_range(0..24);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

fn grid_point(rng: &mut ItemRng) -> NormPoint {
    NormPoint::new(
        rng.gen_range(0..=100) as f64 / 100.0,
        rng.gen_range(0..=100) as f64 / 100.0,
    )
    .unwrap()
}

fn random_action(id: u8, rng: &mut ItemRng) -> AgentOutput {
    match id {
        0 => Action::SwipeUp.into(),
        1 => Action::SwipeDown.into(),
        2 => Action::Select {
            value: payload(rng),
        }
        .into(),
        3 => Action::Type { text: payload(rng) }.into(),
        4 => Action::click(grid_point(rng)).into(),
        5 => Action::PressBack.into(),
        6 => Action::PressHome.into(),
        7 => Action::PressEnter.into(),
        8 => Action::SwipeLeft.into(),
        9 => Action::SwipeRight.into(),
        10 => EpisodeStatus::TaskComplete.into(),
        _ => EpisodeStatus::TaskImpossible.into(),
    }
}

fn codec_round_trips() {
    let mut rng = derive_rng(3, "codec/coords");
    for _ in 0..10_000 {
        let p = NormPoint::new(unit(&mut rng), unit(&mut rng)).unwrap();
        match parse_location(format_point(p).as_str()).unwrap() {
            Location::Point(q) => {
                assert!(
                    (p.x() - q.x()).abs() <= 0.005 + 1e-12
                        && (p.y() - q.y()).abs() <= 0.005 + 1e-12,
                    "{p:?} {q:?}"
                )
            }
            other => panic!("point parsed as {other:?}"),
        }
        let mut v = [
            unit(&mut rng),
            unit(&mut rng),
            unit(&mut rng),
            unit(&mut rng),
        ];
        if v[0] > v[2] {
            v.swap(0, 2);
        }
        if v[1] > v[3] {
            v.swap(1, 3);
        }
        let b = NormBBox::new(v[0], v[1], v[2], v[3]).unwrap();
        match parse_location(format_bbox(b).as_str()).unwrap() {
            Location::BBox(c) => {
                for (a, z) in [
                    (b.left(), c.left()),
                    (b.top(), c.top()),
                    (b.right(), c.right()),
                    (b.down(), c.down()),
                ] {
                    assert!((a - z).abs() <= 0.005 + 1e-12, "{b:?} {c:?}");
                }
            }
            other => panic!("box parsed as {other:?}"),
        }
    }
    let mut failures = Vec::new();
    let mut total = 0;
    for id in 0u8..12 {
        let mut rng = derive_rng(3, &format!("codec/action/{id}"));
        for _ in 0..500 {
            total += 1;
            let out = random_action(id, &mut rng);
            let text = encode_output(&out);
            if parse_action(&text).as_ref() != Ok(&out) {
                failures.push(text.clone());
            }
            if let AgentOutput::Action(a) = &out {
                let element = (!a.is_click()).then(|| grid_point(&mut rng));
                let web = encode_web_action(a, element);
                let expected = WebOutput {
                    output: out.clone(),
                    element_point: a.click_point().or(element),
                };
                if parse_web_action(&web).as_ref() != Ok(&expected) {
                    failures.push(web);
                }
            }
        }
    }
    let quoted = Action::Type {
        text: "say \"hi\" to 山田 \\ 🙂".into(),
    };
    assert_eq!(
        parse_action(&encode_action(&quoted)).unwrap(),
        AgentOutput::Action(quoted)
    );
    assert!(
        failures.is_empty(),
        "{} of {total} failed, first: {}",
        failures.len(),
        failures[0]
    );
}

// -------------------------------------------------------- token F1

/// Multiset F1 by explicit bag intersection and precision/recall.
fn brute_force_f1(a: &[&str], b: &[&str]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut bag: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for t in a {
        bag.entry(t).or_default().0 += 1;
    }
    for t in b {
        bag.entry(t).or_default().1 += 1;
    }
    let common: usize = bag.values().map(|(x, y)| (*x).min(*y)).sum();
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / a.len() as f64;
    let recall = common as f64 / b.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

fn token_f1_oracle() {
    let vocab = [
        "type", "click", "select", "hello", "world", "there", "a", "b", "new", "york", "2",
    ];
    let mut rng = derive_rng(4, "f1");
    for _ in 0..1000 {
        let seq = |rng: &mut ItemRng| -> Vec<&str> {
            let n = rng.gen_range(0..8);
            (0..n).map(|_| *vocab.choose(rng).unwrap()).collect()
        };
        let a = seq(&mut rng);
        let b = seq(&mut rng);
        let got = token_f1(&a.join(" "), &b.join(" "));
        let want = brute_force_f1(&a, &b);
        assert!(
            (got - want).abs() <= 1e-12,
            "{a:?} vs {b:?}: {got} != {want}"
        );
    }
    assert!((token_f1("type hello world", "type hello there") - 2.0 / 3.0).abs() <= 1e-12);
}

// -------------------------------------------------------- AITW split

const SUBSET_SIZES: [(AitwSubset, usize); 5] = [
    (AitwSubset::General, 545),
    (AitwSubset::Install, 688),
    (AitwSubset::GoogleApps, 306),
    (AitwSubset::Single, 700),
    (AitwSubset::WebShopping, 700),
];

fn synthetic_manifest(path: &Path) -> Vec<EpisodeManifest> {
    let mut episodes = Vec::new();
    for (subset, n) in SUBSET_SIZES {
        for i in 0..n + 160 {
            let instruction = if subset == AitwSubset::WebShopping && i < 20 {
                // Shared with General: may only land in one of them.
                format!("general task {i}")
            } else {
                format!("{} task {i}", subset.as_str().to_lowercase())
            };
            let copies = if i % 5 == 0 { 2 } else { 1 };
            for c in 0..copies {
                episodes.push(EpisodeManifest {
                    episode_id: format!("{}-{i}-{c}", subset.as_str()),
                    instruction: instruction.clone(),
                    subset,
                    step_count: 3 + (i % 7),
                    source: String::new(),
                });
            }
        }
    }
    let mut rng = derive_rng(5, "manifest order");
    episodes.shuffle(&mut rng);
    write_jsonl(path, &episodes).unwrap();
    episodes
}

fn aitw_split() {
    let dir = scratch().join("split");
    fs::create_dir_all(&dir).unwrap();
    let manifest = dir.join("episodes.jsonl");
    let episodes = synthetic_manifest(&manifest);
    let (a, b) = (dir.join("a.json"), dir.join("b.json"));
    ggb(&[
        "prep",
        "split-aitw",
        "--manifest",
        s(&manifest),
        "--out",
        s(&a),
        "--seed",
        "11",
    ]);
    ggb(&[
        "prep",
        "split-aitw",
        "--manifest",
        s(&manifest),
        "--out",
        s(&b),
        "--seed",
        "11",
    ]);
    assert_eq!(
        fs::read(&a).unwrap(),
        fs::read(&b).unwrap(),
        "manifests differ across runs"
    );
    let split: SplitResult = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(split.rule, "floor");

    let expected = [(436, 109), (550, 138), (244, 62), (560, 140), (560, 140)];
    let by_id: HashMap<&str, &EpisodeManifest> = episodes
        .iter()
        .map(|e| (e.episode_id.as_str(), e))
        .collect();
    for ((subset, n), want) in SUBSET_SIZES.iter().zip(expected) {
        let floor_rule = (n * 8 / 10, n - n * 8 / 10);
        assert_eq!(floor_rule, want);
        let got = &split.subsets[subset];
        assert_eq!((got.train_ids.len(), got.test_ids.len()), want, "{subset}");
        for id in got.train_ids.iter().chain(&got.test_ids) {
            assert_eq!(by_id[id.as_str()].subset, *subset);
        }
    }
    let instr = |ids: &mut dyn Iterator<Item = &String>| -> BTreeSet<String> {
        ids.map(|id| by_id[id.as_str()].instruction.clone())
            .collect()
    };
    let train = instr(&mut split.train_ids());
    let test = instr(&mut split.test_ids());
    let valid = instr(&mut split.validation_ids.iter());
    assert_eq!(
        train.len(),
        split.train_ids().count(),
        "one trajectory per instruction"
    );
    assert!(train.is_disjoint(&test));
    assert!(valid.is_disjoint(&train) && valid.is_disjoint(&test));
    assert_eq!(split.validation_ids.len(), 500);
    assert_eq!(valid.len(), 500);
    for subset in AitwSubset::ALL {
        let n = split
            .validation_ids
            .iter()
            .filter(|id| by_id[id.as_str()].subset == subset)
            .count();
        assert_eq!(n, 100, "validation {subset}");
    }
}

// -------------------------------------------------------- Mind2Web crop

fn mind2web_crop() {
    let mut rng = derive_rng(6, "crops");
    let mut top_row = 0;
    for i in 0..1000 {
        let height = rng.gen_range(1080..=12000u32);
        let page = PixelDims::new(1920, height).unwrap();
        let h = rng.gen_range(1..=400u32);
        let w = rng.gen_range(1..=600u32);
        let top = if i % 4 == 0 {
            rng.gen_range(0..=1080 - h)
        } else {
            rng.gen_range(0..=height - h)
        };
        let left = rng.gen_range(0..=1920 - w);
        let target = PixelRect::new(left, top, left + w, top + h);
        let spec = crop_step(page, target, 6, &format!("step-{i}")).unwrap();
        assert_eq!((spec.crop.width, spec.crop.height), (1920, 1080));
        assert_eq!((CROP_WIDTH, CROP_HEIGHT), (1920, 1080));
        assert!(spec.offset_y + 1080 <= height);
        let local_top = target.top - spec.offset_y;
        assert!(
            target.top >= spec.offset_y && target.down - spec.offset_y <= 1080,
            "{target:?} at {}",
            spec.offset_y
        );
        assert!(local_top as f64 / 1080.0 - spec.target_bbox.top() == 0.0);
        for v in [
            spec.target_bbox.left(),
            spec.target_bbox.top(),
            spec.target_bbox.right(),
            spec.target_bbox.down(),
        ] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert_eq!(spec.source_from_target(), target);
        if target.down <= 1080 {
            top_row += 1;
            assert_eq!(spec.offset_y, 0, "top-row target {target:?}");
        }
    }
    assert!(top_row >= 250);
}

// -------------------------------------------------------- harvest + assemble

const MIX_CELLS: [(Domain, GroundingTask, u64); 9] = [
    (Domain::Web, GroundingTask::TextToPoint, 271_000),
    (Domain::Web, GroundingTask::TextToBBox, 54_000),
    (Domain::Web, GroundingTask::PointToText, 54_000),
    (Domain::Web, GroundingTask::BBoxToText, 54_000),
    (Domain::Mobile, GroundingTask::TextToPoint, 274_000),
    (Domain::Mobile, GroundingTask::TextToBBox, 56_000),
    (Domain::Mobile, GroundingTask::UiSummarization, 48_000),
    (Domain::Mobile, GroundingTask::WidgetCaptioning, 42_000),
    (Domain::General, GroundingTask::GeneralPassthrough, 145_000),
];

/// Largest-remainder shares of `budget`, in exact rationals.
fn hamilton_oracle(budget: u64) -> Vec<u64> {
    let total: u64 = MIX_CELLS.iter().map(|c| c.2).sum();
    let quotas: Vec<BigRational> = MIX_CELLS
        .iter()
        .map(|c| {
            BigRational::new(
                BigInt::from(budget) * BigInt::from(c.2),
                BigInt::from(total),
            )
        })
        .collect();
    let mut counts: Vec<u64> = quotas
        .iter()
        .map(|q| q.floor().to_integer().to_u64().unwrap())
        .collect();
    let left = budget - counts.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| (quotas[b].fract()).cmp(&quotas[a].fract()).then(a.cmp(&b)));
    for &i in order.iter().take(left as usize) {
        counts[i] += 1;
    }
    assert!(quotas.iter().all(|q| !q.is_zero()));
    counts
}

fn synthetic_pool(path: &Path) {
    let mut samples = Vec::new();
    for (domain, task, _) in MIX_CELLS {
        for i in 0..3000 {
            let loc = format!(
                "({:.2}, {:.2})",
                (i % 97) as f64 / 100.0,
                (i % 89) as f64 / 100.0
            );
            let (prompt, target) = if task.targets_location() {
                (format!("where is item {i}?"), loc)
            } else if task.prompts_with_location() {
                (format!("what is at {loc}?"), format!("item {i}"))
            } else {
                (format!("describe screen {i}"), format!("summary {i}"))
            };
            samples.push(GroundingSample {
                image: format!("{}/{}/{i}.png", domain, task.as_str()),
                task,
                prompt,
                target,
                meta: SampleMeta {
                    domain,
                    source: "synthetic".into(),
                },
            });
        }
    }
    write_jsonl(path, &samples).unwrap();
}

fn harvest_and_assemble() {
    let golden = fs::read(fixture("web-golden/elements.jsonl")).unwrap();
    let golden_text = String::from_utf8(golden.clone()).unwrap();
    assert!(golden_text.contains("\"source\":\"web_visible_text\""));
    assert!(golden_text.contains("\"source\":\"web_title_attr\""));
    for workers in ["1", "3", "8"] {
        let out = scratch().join(format!("harvest-{workers}"));
        ggb(&[
            "harvest",
            "fixtures",
            "--dir",
            s(&fixture("web")),
            "--out",
            s(&out),
            "--workers",
            workers,
        ]);
        assert!(
            fs::read(out.join("elements.jsonl")).unwrap() == golden,
            "workers={workers} differs from golden"
        );
    }

    let dir = scratch().join("assemble");
    fs::create_dir_all(&dir).unwrap();
    let pool = dir.join("pool.jsonl");
    synthetic_pool(&pool);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        ggb(&[
            "assemble",
            "--samples",
            s(&pool),
            "--budget",
            "10000",
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
    }
    let manifest: CorpusManifest =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let oracle = hamilton_oracle(10_000);
    let got: Vec<u64> = MIX_CELLS
        .iter()
        .map(|(d, t, _)| {
            manifest
                .cells
                .iter()
                .find(|c| c.domain == *d && c.task == *t)
                .unwrap()
                .count
        })
        .collect();
    assert_eq!(got, oracle);
    assert_eq!(got[0], 2715);
    assert_eq!(got.iter().sum::<u64>(), 10_000);
    assert_eq!(
        MixSpec::default()
            .with_budget(10_000)
            .cell_counts()
            .unwrap(),
        oracle
    );
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
    let mut per_cell: BTreeMap<(Domain, GroundingTask), u64> = BTreeMap::new();
    for shard in &manifest.shards {
        let bytes = fs::read(a.join(&shard.file)).unwrap();
        assert_eq!(
            bytes,
            fs::read(b.join(&shard.file)).unwrap(),
            "{}",
            shard.file
        );
        for smp in read_jsonl::<GroundingSample>(&a.join(&shard.file)).unwrap() {
            *per_cell.entry(smp.cell()).or_default() += 1;
        }
    }
    for c in &manifest.cells {
        assert_eq!(
            per_cell.get(&(c.domain, c.task)).copied().unwrap_or(0),
            c.count
        );
    }
}

// -------------------------------------------------------- MiniWob

fn miniwob_harness() {
    let dir = scratch().join("miniwob");
    fs::create_dir_all(&dir).unwrap();
    let key_path = dir.join("key.json");
    ggb(&["oracle-key", "miniwob", "--out", s(&key_path)]);
    let server =
        MockServer::start(MockBehavior::Oracle(AnswerKey::load(&key_path).unwrap()), 8).unwrap();
    let out = dir.join("run");
    ggb(&[
        "eval",
        "miniwob",
        "--endpoint",
        &server.url(),
        "--out",
        s(&out),
        "--parallel",
        "8",
    ]);
    let r = report(&out);
    assert_eq!(r.groups.len(), 5);
    for g in &r.groups {
        let sr = g.score("success_rate").unwrap();
        assert_eq!((sr.value, sr.denominator), (1.0, 50), "{}", g.name);
    }
    assert_eq!(overall(&r, "mean"), 1.0);
    let episodes = fs::read_to_string(out.join("episodes.jsonl")).unwrap();
    assert_eq!(episodes.lines().count(), 250);
    assert!(fs::read_to_string(out.join("report.md"))
        .unwrap()
        .contains("| Average | 1.000 (5) |"));

    // A task that needs 31 actions cannot finish within 30.
    let long = ScriptedTask::clicks("click-31-times", 31);
    let seeds = [0, 1, 2];
    let cfg = EpisodeConfig::default();
    let key = scripted_answer_key(std::slice::from_ref(&long), &seeds, &cfg).unwrap();
    let factory = |_: &str| -> Result<Box<dyn EnvAdapter>, EnvError> {
        Ok(Box::new(ScriptedEnv::new([long.clone()])))
    };
    let (r, results) = run_miniwob(
        std::slice::from_ref(&long.name),
        &seeds,
        &factory,
        &MockPredictor(MockBehavior::Oracle(key)),
        &cfg,
        2,
    )
    .unwrap();
    for e in &results {
        assert_eq!(e.outcome, EpisodeOutcome::StepLimit);
        assert_eq!(e.steps, 30);
        assert_eq!(e.transcript.len(), 30);
        assert!(!e.succeeded());
    }
    assert_eq!(overall(&r, "mean"), 0.0);
}

// -------------------------------------------------------- metric algebra

fn random_box(rng: &mut ItemRng) -> NormBBox {
    let l = rng.gen_range(0.0..0.9);
    let t = rng.gen_range(0.0..0.9);
    NormBBox::new(
        l,
        t,
        l + rng.gen_range(0.0..0.1),
        t + rng.gen_range(0.0..0.1),
    )
    .unwrap()
}

fn random_point_near(rng: &mut ItemRng, b: NormBBox) -> NormPoint {
    if rng.gen_bool(0.5) {
        b.center()
    } else {
        NormPoint::new(rng.gen(), rng.gen()).unwrap()
    }
}

fn random_web_action(rng: &mut ItemRng) -> Action {
    let words = ["new", "york", "red", "2", "shoes"];
    let text: String = (0..rng.gen_range(0..3))
        .map(|_| *words.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ");
    match rng.gen_range(0..3) {
        0 => Action::click(NormPoint::new(rng.gen(), rng.gen()).unwrap()),
        1 => Action::Type { text },
        _ => Action::Select { value: text },
    }
}

fn in_unit(r: &ScoreReport) {
    for s in r.all_scores() {
        assert!(
            (0.0..=1.0).contains(&s.score.value),
            "{} = {}",
            s.metric,
            s.score.value
        );
    }
}

fn metric_algebra() {
    let platforms = Platform::ALL;
    let subsets = AitwSubset::ALL;
    let splits = Mind2WebSplit::ALL;
    for i in 0..10_000 {
        let mut rng = derive_rng(9, &format!("algebra/{i}"));
        let n = rng.gen_range(1..=24);

        let cases: Vec<GroundingCase> = (0..n)
            .map(|_| {
                let gt = random_box(&mut rng);
                GroundingCase {
                    platform: *platforms.choose(&mut rng).unwrap(),
                    kind: if rng.gen() {
                        ElementKind::Text
                    } else {
                        ElementKind::Icon
                    },
                    gt_bbox: gt,
                    prediction: rng.gen_bool(0.9).then(|| random_point_near(&mut rng, gt)),
                }
            })
            .collect();
        in_unit(&click_accuracy(&cases).unwrap());

        let steps: Vec<(Mind2WebSplit, _)> = (0..n)
            .map(|_| {
                let b = random_box(&mut rng);
                let ref_action = random_web_action(&mut rng);
                let pred = rng.gen_bool(0.9).then(|| {
                    let a = random_web_action(&mut rng);
                    let p = random_point_near(&mut rng, b);
                    WebOutput {
                        element_point: rng.gen_bool(0.9).then_some(p),
                        output: a.into(),
                    }
                });
                let step = Mind2WebStep {
                    ref_action,
                    ref_bbox: b,
                    pred,
                };
                (
                    *splits.choose(&mut rng).unwrap(),
                    mind2web_step(&step, &Mind2WebConfig::default()),
                )
            })
            .collect();
        let r = mind2web_scores(&steps, &Mind2WebConfig::default()).unwrap();
        in_unit(&r);
        let sr_le_acc = |scores: &dyn Fn(&str) -> Option<f64>| {
            if let (Some(sr), Some(acc)) = (scores("step_sr"), scores("ele_acc")) {
                assert!(sr <= acc, "step_sr {sr} > ele_acc {acc}");
            }
        };
        sr_le_acc(&|m| r.overall(m));
        for g in &r.groups {
            sr_le_acc(&|m| g.score(m).map(|s| s.value));
        }

        let matches: Vec<(AitwSubset, StepMatch)> = (0..n)
            .map(|_| {
                let b = random_box(&mut rng);
                let ref_action = random_action(rng.gen_range(0..12), &mut rng);
                let pred = rng.gen_bool(0.9).then(|| match rng.gen_range(0..3) {
                    0 => ref_action.clone(),
                    1 => Action::click(random_point_near(&mut rng, b)).into(),
                    _ => random_action(rng.gen_range(0..12), &mut rng),
                });
                let step = AgentStep {
                    ref_action,
                    ref_bbox: rng.gen_bool(0.7).then_some(b),
                    pred_action: pred,
                };
                (
                    *subsets.choose(&mut rng).unwrap(),
                    match_step_aitw(&step, &AitwConfig::default()),
                )
            })
            .collect();
        let r = aitw_scores(&matches, &AitwConfig::default());
        in_unit(&r);
        let subset_means: Vec<f64> = subsets
            .iter()
            .filter_map(|s| {
                let ms: Vec<_> = matches.iter().filter(|(t, _)| t == s).collect();
                (!ms.is_empty()).then(|| {
                    ms.iter()
                        .filter(|(_, m)| m.type_match && m.value_match)
                        .count() as f64
                        / ms.len() as f64
                })
            })
            .collect();
        let mean = subset_means.iter().sum::<f64>() / subset_means.len() as f64;
        assert!((overall(&r, "overall") - mean).abs() <= 1e-12);
    }

    rescoring_is_byte_identical();
}

fn rescore(bench: &str, data: &Path, run: &Path) {
    let out = run.with_extension("rescored");
    ggb(&[
        "score",
        "--benchmark",
        bench,
        "--data",
        s(data),
        "--predictions",
        s(&run.join("predictions.jsonl")),
        "--out",
        s(&out),
    ]);
    for f in ["report.json", "report.md"] {
        assert!(
            fs::read(run.join(f)).unwrap() == fs::read(out.join(f)).unwrap(),
            "{bench} {f} differs after re-scoring"
        );
    }
}

fn rescoring_is_byte_identical() {
    let runs = oracle_runs();
    rescore(
        "screenspot",
        &fixture("screenspot/cases.jsonl"),
        &runs.screenspot,
    );
    rescore("aitw", &fixture("aitw/steps.jsonl"), &runs.aitw);
    rescore("mind2web", &fixture("mind2web/steps.jsonl"), &runs.mind2web);
    rescore(
        "screenspot",
        &fixture("screenspot/cases.jsonl"),
        constant_origin_model(),
    );

    // Random model outputs, saved and reloaded.
    let steps = load_aitw(&fixture("aitw/steps.jsonl")).unwrap().records;
    let path = scratch().join("random-preds.jsonl");
    for i in 0..200 {
        let mut rng = derive_rng(9, &format!("rescore/{i}"));
        let preds: Vec<PredictionRecord> = steps
            .iter()
            .map(|st| {
                let raw = match rng.gen_range(0..3) {
                    0 => encode_output(&random_action(rng.gen_range(0..12), &mut rng)),
                    1 => st.ref_action.clone(),
                    _ => "no idea".to_string(),
                };
                PredictionRecord {
                    id: st.id.clone(),
                    prompt: String::new(),
                    raw_output: raw,
                    parsed: Value::Null,
                    error: None,
                }
            })
            .collect();
        let before = report_json(&score_aitw(&steps, &preds, &AitwConfig::default()).unwrap());
        write_predictions(&path, &preds).unwrap();
        let after = report_json(
            &score_aitw(
                &steps,
                &load_predictions(&path).unwrap(),
                &AitwConfig::default(),
            )
            .unwrap(),
        );
        assert_eq!(before, after);
    }
}

// -------------------------------------------------------- driver

fn main() {
    let criteria: [(&str, fn()); 9] = [
        (
            "oracle end-to-end: screenspot/mind2web/aitw score 1.0 in under 2 min",
            oracle_end_to_end,
        ),
        (
            "degenerate model: constant (0,0) equals origin-box fraction",
            degenerate_model,
        ),
        (
            "codec round trips: coordinates and actions",
            codec_round_trips,
        ),
        ("token_f1 matches brute-force multiset F1", token_f1_oracle),
        (
            "aitw split: floor sizes, disjoint instructions, stable manifest",
            aitw_split,
        ),
        ("mind2web crop: 1000 seeded crops", mind2web_crop),
        (
            "harvest golden file and assemble at budget 10000",
            harvest_and_assemble,
        ),
        (
            "miniwob harness: 5 tasks x 50 seeds, 30-step limit",
            miniwob_harness,
        ),
        (
            "metric algebra on 10^4 sets, byte-identical re-scoring",
            metric_algebra,
        ),
    ];
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut ran = 0;
    for (name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|flt| name.contains(flt.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        match catch_unwind(AssertUnwindSafe(f)) {
            Ok(()) => println!("PASS  {name}  ({:.1}s)", start.elapsed().as_secs_f64()),
            Err(p) => {
                failed += 1;
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    std::panic::set_hook(default_hook);
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
