//! Report files: canonical JSON, a markdown table per benchmark, and the
//! distance histogram as CSV.

use std::fs;
use std::path::{Path, PathBuf};

use super::RunError;
use crate::metrics::{
    cell_name, AitwSubset, Benchmark, ElementKind, Mind2WebSplit, Platform, ScoreReport,
};

/// Pretty JSON with a trailing newline. Field order is fixed by the types
/// and maps are ordered, so equal reports give equal bytes.
pub fn report_json(report: &ScoreReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.1}", v * 100.0))
}

fn pct_sign(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.1}%", v * 100.0))
}

fn group_metric(r: &ScoreReport, group: &str, metric: &str) -> Option<f64> {
    r.group(group)
        .and_then(|g| g.score(metric))
        .map(|s| s.value)
}

fn row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn rule(n: usize) -> String {
    row(&vec!["---".to_string(); n])
}

fn title_case(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

pub fn markdown_table(r: &ScoreReport) -> String {
    let mut out = String::new();
    match r.benchmark {
        Benchmark::Screenspot => {
            let mut head = Vec::new();
            let mut vals = Vec::new();
            for p in Platform::ALL {
                for k in ElementKind::ALL {
                    let kind = match k {
                        ElementKind::Text => "Text",
                        ElementKind::Icon => "Icon/Widget",
                    };
                    head.push(format!("{} {kind}", title_case(p.as_str())));
                    vals.push(pct_sign(group_metric(r, &cell_name(p, k), "click_acc")));
                }
            }
            head.push("Average (macro)".into());
            head.push("Average (micro)".into());
            vals.push(pct_sign(r.overall("average_macro")));
            vals.push(pct_sign(r.overall("average_micro")));
            out += &row(&head);
            out += &rule(head.len());
            out += &row(&vals);
        }
        Benchmark::Aitw => {
            let mut head: Vec<String> = AitwSubset::ALL
                .iter()
                .map(|s| s.as_str().to_string())
                .collect();
            let mut vals: Vec<String> = AitwSubset::ALL
                .iter()
                .map(|s| pct(group_metric(r, s.as_str(), "score")))
                .collect();
            head.extend(["Overall".into(), "ClickAcc".into()]);
            vals.extend([pct(r.overall("overall")), pct(r.overall("click_acc"))]);
            out += &row(&head);
            out += &rule(head.len());
            out += &row(&vals);
        }
        Benchmark::Mind2web => {
            let mut head = Vec::new();
            let mut vals = Vec::new();
            for split in Mind2WebSplit::ALL {
                let label = match split {
                    Mind2WebSplit::CrossTask => "Cross-Task",
                    Mind2WebSplit::CrossWebsite => "Cross-Website",
                    Mind2WebSplit::CrossDomain => "Cross-Domain",
                };
                for (metric, name) in [
                    ("ele_acc", "Ele.Acc"),
                    ("op_f1", "Op.F1"),
                    ("step_sr", "Step SR"),
                ] {
                    head.push(format!("{label} {name}"));
                    vals.push(pct(group_metric(r, split.as_str(), metric)));
                }
            }
            out += &row(&head);
            out += &rule(head.len());
            out += &row(&vals);
        }
        Benchmark::Miniwob => {
            out += &row(&["Task".into(), "Score".into()]);
            out += &rule(2);
            for g in &r.groups {
                let v = g
                    .score("success_rate")
                    .map_or_else(|| "-".into(), |s| format!("{:.2}", s.value));
                out += &row(&[title_case(&g.name), v]);
            }
            let n = r
                .overall
                .iter()
                .find(|s| s.metric == "mean")
                .map_or(0, |s| s.score.denominator);
            let mean = r
                .overall("mean")
                .map_or_else(|| "-".into(), |v| format!("{v:.3} ({n})"));
            out += &row(&["Average".into(), mean]);
        }
    }
    if !r.flags.is_empty() {
        out.push('\n');
        for f in &r.flags {
            out += &format!("- {f}\n");
        }
    }
    out
}

/// Writes `report.json`, `report.md` and, when present, `histogram.csv`
/// into `dir`. Returns the written paths.
pub fn emit_report(report: &ScoreReport, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let mut files = vec![
        (dir.join("report.json"), report_json(report)),
        (dir.join("report.md"), markdown_table(report)),
    ];
    if let Some(h) = &report.histogram {
        files.push((dir.join("histogram.csv"), h.to_csv()));
    }
    let mut written = Vec::new();
    for (path, text) in files {
        fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

pub fn load_report(path: &Path) -> Result<ScoreReport, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| RunError::Schema(format!("{}: {e}", path.display())))
}
