//! Parallel harvesting over fixture directories and JSONL helpers.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::samples::{element_samples, WEB_ELEMENT_TASKS};
use super::{extract_web_elements, load_fixture_snapshot, Element, HarvestError};
use crate::prompt::PromptPools;
use crate::sample::GroundingSample;

/// A harvested element with the page it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub url: String,
    /// Screenshot path relative to the harvested root.
    pub image: String,
    #[serde(flatten)]
    pub element: Element,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestSummary {
    pub pages: usize,
    pub elements: usize,
    pub samples: usize,
}

/// Reads one JSON value per non-empty line; errors carry the line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarvestError> {
    let file = fs::File::open(path).map_err(|e| HarvestError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarvestError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| HarvestError::Record {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarvestError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("record serializes");
        buf.push(b'\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarvestError::io(parent, e))?;
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| HarvestError::io(path, e))
}

/// Subdirectories of `root` that hold a `layout.json`, sorted by name.
pub fn fixture_dirs(root: &Path) -> Result<Vec<PathBuf>, HarvestError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| HarvestError::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("layout.json").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Harvests every fixture page under `root` with `workers` threads and
/// writes `elements.jsonl` and `samples.jsonl` into `out`.
///
/// Pages are processed independently; the element list is sorted by
/// (url, dom_order) afterwards and every sample's generator is keyed by its
/// image and element position, so output bytes do not depend on `workers`.
pub fn harvest_fixtures(
    root: &Path,
    out: &Path,
    workers: usize,
    pools: &PromptPools,
    seed: u64,
) -> Result<HarvestSummary, HarvestError> {
    let dirs = fixture_dirs(root)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let pages: Vec<(Vec<ElementRecord>, Vec<GroundingSample>)> = pool.install(|| {
        dirs.par_iter()
            .map(|dir| {
                let snap = load_fixture_snapshot(dir)?;
                let image = relative_image(root, &snap.screenshot);
                let elements = extract_web_elements(&snap);
                let samples = element_samples(&elements, &image, &WEB_ELEMENT_TASKS, pools, seed)?;
                let records = elements
                    .into_iter()
                    .map(|element| ElementRecord {
                        url: snap.url.clone(),
                        image: image.clone(),
                        element,
                    })
                    .collect();
                Ok((records, samples))
            })
            .collect::<Result<_, HarvestError>>()
    })?;
    let n_pages = pages.len();
    let (mut records, mut samples): (Vec<_>, Vec<_>) = (Vec::new(), Vec::new());
    for (r, s) in pages {
        records.extend(r);
        samples.extend(s);
    }
    records.sort_by(|a, b| {
        (a.url.as_str(), a.element.dom_order).cmp(&(b.url.as_str(), b.element.dom_order))
    });
    write_jsonl(&out.join("elements.jsonl"), &records)?;
    write_jsonl(&out.join("samples.jsonl"), &samples)?;
    Ok(HarvestSummary {
        pages: n_pages,
        elements: records.len(),
        samples: samples.len(),
    })
}

fn relative_image(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}
