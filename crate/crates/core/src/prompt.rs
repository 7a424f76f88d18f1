//! Prompt templates for grounding samples and agent steps.
//!
//! Templates are plain UTF-8 text with named placeholders in braces, e.g.
//! `{instruction}`. Substitution is single pass, so values that happen to
//! contain braces are inserted verbatim.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::action::{encode_action, Action};
use crate::sample::GroundingTask;

pub const DEFAULT_HISTORY_LEN: usize = 4;

pub const DEFAULT_AGENT_TEMPLATE: &str = "\
Decide the next action on the screen shown for the task below.

Task: {instruction}

Previous actions:
{history}

Answer with the next action.";

/// The grounding query used for instruction-to-point samples.
pub const CLICK_QUERY: &str = "In the UI, where should I click if I want to {instruction}?";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("prompt pool for {0} is empty")]
    EmptyPool(String),
    #[error("template {template:?} is missing placeholder {{{name}}}")]
    MissingPlaceholder {
        template: String,
        name: &'static str,
    },
    #[error("template {template:?} uses unknown placeholder {{{name}}}")]
    UnknownPlaceholder { template: String, name: String },
    #[error("unclosed placeholder in template {0:?}")]
    Unclosed(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    segments: Vec<Segment>,
}

impl Template {
    /// Parses a template, accepting only the given placeholder names and
    /// requiring every name in `required`.
    pub fn parse(
        text: &str,
        allowed: &[&str],
        required: &[&'static str],
    ) -> Result<Self, PromptError> {
        let mut segments = Vec::new();
        let mut rest = text;
        while let Some(open) = rest.find('{') {
            let Some(close_rel) = rest[open..].find('}') else {
                return Err(PromptError::Unclosed(text.to_string()));
            };
            let name = &rest[open + 1..open + close_rel];
            if !allowed.contains(&name) {
                return Err(PromptError::UnknownPlaceholder {
                    template: text.to_string(),
                    name: name.to_string(),
                });
            }
            if open > 0 {
                segments.push(Segment::Text(rest[..open].to_string()));
            }
            segments.push(Segment::Slot(name.to_string()));
            rest = &rest[open + close_rel + 1..];
        }
        if !rest.is_empty() {
            segments.push(Segment::Text(rest.to_string()));
        }
        for name in required {
            if !segments
                .iter()
                .any(|s| matches!(s, Segment::Slot(n) if n == name))
            {
                return Err(PromptError::MissingPlaceholder {
                    template: text.to_string(),
                    name,
                });
            }
        }
        Ok(Self {
            source: text.to_string(),
            segments,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    pub fn render(&self, values: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.source.len() + 64);
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(name) => {
                    let v = values
                        .iter()
                        .find(|(k, _)| k == name)
                        .map_or("", |(_, v)| v);
                    out.push_str(v);
                }
            }
        }
        out
    }
}

/// Alternative phrasings for one task, drawn uniformly per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPool {
    slot: &'static str,
    templates: Vec<Template>,
}

impl PromptPool {
    /// Builds a pool whose templates all fill `slot`.
    pub fn new<S: AsRef<str>>(slot: &'static str, templates: &[S]) -> Result<Self, PromptError> {
        let templates = templates
            .iter()
            .map(|t| Template::parse(t.as_ref(), &[slot], &[slot]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { slot, templates })
    }

    /// Parses a pool file: one template per line, blank lines and lines
    /// starting with `#` ignored.
    pub fn from_text(slot: &'static str, text: &str) -> Result<Self, PromptError> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect();
        Self::new(slot, &lines)
    }

    pub fn for_task(task: GroundingTask) -> Self {
        let (slot, template) = match task {
            GroundingTask::TextToPoint => ("instruction", CLICK_QUERY),
            GroundingTask::TextToBBox => (
                "instruction",
                "In the UI, what is the bounding box of the element I should use to {instruction}?",
            ),
            GroundingTask::PointToText => (
                "location",
                "In the UI, what is the text of the element at {location}?",
            ),
            GroundingTask::BBoxToText => (
                "location",
                "In the UI, what is the text of the element inside {location}?",
            ),
            GroundingTask::WidgetCaptioning => (
                "location",
                "In the UI, what does the widget inside {location} do?",
            ),
            GroundingTask::UiSummarization | GroundingTask::GeneralPassthrough => {
                return Self {
                    slot: "instruction",
                    templates: Vec::new(),
                }
            }
        };
        Self::new(slot, &[template]).expect("built-in template")
    }

    pub fn slot(&self) -> &'static str {
        self.slot
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Draws one template uniformly and fills its slot.
    pub fn draw<R: Rng + ?Sized>(&self, value: &str, rng: &mut R) -> Result<String, PromptError> {
        if self.templates.is_empty() {
            return Err(PromptError::EmptyPool(self.slot.to_string()));
        }
        let t = &self.templates[rng.gen_range(0..self.templates.len())];
        Ok(t.render(&[(self.slot, value)]))
    }
}

/// Prompt pools keyed by task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPools {
    pools: BTreeMap<GroundingTask, PromptPool>,
}

impl Default for PromptPools {
    fn default() -> Self {
        let pools = GroundingTask::ALL
            .into_iter()
            .map(|t| (t, PromptPool::for_task(t)))
            .filter(|(_, p)| !p.is_empty())
            .collect();
        Self { pools }
    }
}

impl PromptPools {
    /// Starts from the built-in pools and replaces any task that has a
    /// `<task>.txt` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut pools = Self::default();
        for task in GroundingTask::ALL {
            let path = dir.join(format!("{}.txt", task.as_str()));
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let slot = if task.prompts_with_location() {
                "location"
            } else {
                "instruction"
            };
            pools
                .pools
                .insert(task, PromptPool::from_text(slot, &text)?);
        }
        Ok(pools)
    }

    pub fn insert(&mut self, task: GroundingTask, pool: PromptPool) {
        self.pools.insert(task, pool);
    }

    pub fn get(&self, task: GroundingTask) -> Result<&PromptPool, PromptError> {
        self.pools
            .get(&task)
            .filter(|p| !p.is_empty())
            .ok_or_else(|| PromptError::EmptyPool(task.to_string()))
    }
}

/// Fills a grounding query with an instruction, drawing the phrasing from
/// `pool`.
pub fn build_grounding_prompt<R: Rng + ?Sized>(
    instruction: &str,
    pool: &PromptPool,
    rng: &mut R,
) -> Result<String, PromptError> {
    pool.draw(instruction, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub instruction: String,
    pub history: Vec<Action>,
    pub k: usize,
}

impl PromptSpec {
    pub fn new(instruction: impl Into<String>, history: Vec<Action>) -> Self {
        Self {
            instruction: instruction.into(),
            history,
            k: DEFAULT_HISTORY_LEN,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// The most recent `k` actions, oldest first.
    pub fn recent_history(&self) -> &[Action] {
        let start = self.history.len().saturating_sub(self.k);
        &self.history[start..]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentTemplate(Template);

impl Default for AgentTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_AGENT_TEMPLATE).expect("built-in template")
    }
}

impl AgentTemplate {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        Template::parse(
            text,
            &["instruction", "history"],
            &["instruction", "history"],
        )
        .map(Self)
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = fs::read_to_string(path).map_err(|source| PromptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn render(&self, spec: &PromptSpec) -> String {
        let recent = spec.recent_history();
        let history = if recent.is_empty() {
            "None".to_string()
        } else {
            recent
                .iter()
                .map(encode_action)
                .collect::<Vec<_>>()
                .join("\n")
        };
        self.0
            .render(&[("instruction", &spec.instruction), ("history", &history)])
    }
}

/// Renders an agent step prompt with the default template.
pub fn build_agent_prompt(spec: &PromptSpec) -> String {
    AgentTemplate::default().render(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NormPoint;
    use crate::rng::derive_rng;

    #[test]
    fn click_query_matches_example() {
        let pool = PromptPool::for_task(GroundingTask::TextToPoint);
        for seed in [0, 1, 99] {
            let p = build_grounding_prompt(
                "View the new album of Jony J",
                &pool,
                &mut derive_rng(seed, "x"),
            )
            .unwrap();
            assert_eq!(
                p,
                "In the UI, where should I click if I want to View the new album of Jony J?"
            );
        }
    }

    #[test]
    fn empty_pool_is_an_error() {
        let pool = PromptPool::new::<&str>("instruction", &[]).unwrap();
        assert!(matches!(
            build_grounding_prompt("x", &pool, &mut derive_rng(0, "x")),
            Err(PromptError::EmptyPool(_))
        ));
        assert!(PromptPools::default()
            .get(GroundingTask::UiSummarization)
            .is_err());
    }

    #[test]
    fn draws_are_seeded() {
        let pool = PromptPool::from_text(
            "instruction",
            "# comment\nA {instruction}\nB {instruction}\n\nC {instruction}\nD {instruction}\n",
        )
        .unwrap();
        assert_eq!(pool.len(), 4);
        let draw =
            |seed| build_grounding_prompt("go", &pool, &mut derive_rng(seed, "case-1")).unwrap();
        assert_eq!(draw(3), draw(3));
        let seen: std::collections::BTreeSet<String> = (0..64).map(draw).collect();
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn templates_validate_placeholders() {
        assert!(matches!(
            Template::parse("hi {who}", &["instruction"], &[]),
            Err(PromptError::UnknownPlaceholder { .. })
        ));
        assert!(matches!(
            AgentTemplate::parse("{instruction} only"),
            Err(PromptError::MissingPlaceholder {
                name: "history",
                ..
            })
        ));
        assert!(matches!(
            Template::parse("{oops", &[], &[]),
            Err(PromptError::Unclosed(_))
        ));
    }

    #[test]
    fn substitution_is_single_pass() {
        let spec = PromptSpec::new("type {history} literally", vec![]);
        let p = build_agent_prompt(&spec);
        assert!(p.contains("Task: type {history} literally"));
        assert!(p.contains("Previous actions:\nNone\n"));
    }

    #[test]
    fn history_keeps_last_k_in_order() {
        let history: Vec<Action> = (1..=6)
            .map(|i| Action::click(NormPoint::new(f64::from(i) / 10.0, 0.5).unwrap()))
            .collect();
        let spec = PromptSpec::new("book a flight", history.clone());
        assert_eq!(spec.recent_history(), &history[2..]);
        let p = build_agent_prompt(&spec);
        assert_eq!(p.matches("book a flight").count(), 1);
        assert_eq!(p.matches("action_type").count(), 4);
        for (i, a) in history.iter().enumerate() {
            assert_eq!(p.contains(&encode_action(a)), i >= 2, "action {}", i + 1);
        }
        let order: Vec<usize> = history[2..]
            .iter()
            .map(|a| p.find(&encode_action(a)).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));

        let short = PromptSpec::new("x", history[..2].to_vec());
        assert_eq!(short.recent_history().len(), 2);
        assert_eq!(
            PromptSpec::new("x", history)
                .with_k(0)
                .recent_history()
                .len(),
            0
        );
    }
}
