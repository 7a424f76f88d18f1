use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{Benchmark, Score, ScoreGroup, ScoreReport};
use super::text::normalize_text;
use crate::action::{Action, AgentOutput};
use crate::geometry::{point_distance, point_in_bbox, NormBBox};

/// Click distance tolerance used when a reference click has no box.
pub const DEFAULT_CLICK_TAU: f64 = 0.14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AitwSubset {
    General,
    Install,
    GoogleApps,
    Single,
    WebShopping,
}

impl AitwSubset {
    pub const ALL: [AitwSubset; 5] = [
        AitwSubset::General,
        AitwSubset::Install,
        AitwSubset::GoogleApps,
        AitwSubset::Single,
        AitwSubset::WebShopping,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AitwSubset::General => "General",
            AitwSubset::Install => "Install",
            AitwSubset::GoogleApps => "GoogleApps",
            AitwSubset::Single => "Single",
            AitwSubset::WebShopping => "WebShopping",
        }
    }
}

impl fmt::Display for AitwSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AitwSubset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AitwSubset::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown AITW subset {s:?}"))
    }
}

/// One reference step paired with a model prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    pub ref_action: AgentOutput,
    pub ref_bbox: Option<NormBBox>,
    pub pred_action: Option<AgentOutput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepMatch {
    pub type_match: bool,
    pub value_match: bool,
    pub both_click: bool,
}

impl StepMatch {
    pub fn is_match(&self) -> bool {
        self.type_match && self.value_match
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AitwConfig {
    pub click_tau: f64,
}

impl Default for AitwConfig {
    fn default() -> Self {
        Self {
            click_tau: DEFAULT_CLICK_TAU,
        }
    }
}

fn type_key(o: &AgentOutput) -> (u8, Option<u8>) {
    match o {
        AgentOutput::Action(a) => (a.type_id(), None),
        AgentOutput::Status(s) => (u8::MAX, Some(*s as u8)),
    }
}

/// Screen-wise action matching for one step.
pub fn match_step_aitw(step: &AgentStep, cfg: &AitwConfig) -> StepMatch {
    let Some(pred) = &step.pred_action else {
        return StepMatch::default();
    };
    let type_match = type_key(pred) == type_key(&step.ref_action);
    let both_click = matches!(
        (pred, &step.ref_action),
        (
            AgentOutput::Action(Action::Click { .. }),
            AgentOutput::Action(Action::Click { .. })
        )
    );
    let value_match = if !type_match {
        false
    } else {
        match (pred, &step.ref_action) {
            (
                AgentOutput::Action(Action::Click { point: p }),
                AgentOutput::Action(Action::Click { point: r }),
            ) => match step.ref_bbox {
                Some(b) => point_in_bbox(*p, b),
                None => point_distance(*p, *r) <= cfg.click_tau,
            },
            (AgentOutput::Action(p), AgentOutput::Action(r)) => {
                match (p.text_payload(), r.text_payload()) {
                    (Some(pt), Some(rt)) => normalize_text(pt) == normalize_text(rt),
                    _ => true,
                }
            }
            _ => true,
        }
    };
    StepMatch {
        type_match,
        value_match,
        both_click,
    }
}

/// Per-subset matching scores, their unweighted mean, and click accuracy.
pub fn aitw_scores(steps: &[(AitwSubset, StepMatch)], cfg: &AitwConfig) -> ScoreReport {
    let mut report = ScoreReport::new(Benchmark::Aitw);
    let mut subset_scores = Vec::new();
    for subset in AitwSubset::ALL {
        let in_subset: Vec<&StepMatch> = steps
            .iter()
            .filter(|(s, _)| *s == subset)
            .map(|(_, m)| m)
            .collect();
        let matched = in_subset.iter().filter(|m| m.is_match()).count();
        let score = Score::ratio(matched, in_subset.len());
        match score {
            Some(s) => subset_scores.push(s.value),
            None => report.flags.push(format!("empty subset {subset}")),
        }
        let mut g = ScoreGroup::new(subset.as_str(), in_subset.len());
        g.push("score", score);
        report.groups.push(g);
    }
    report.push_overall("overall", Score::mean(subset_scores));
    let clicks: Vec<&StepMatch> = steps
        .iter()
        .map(|(_, m)| m)
        .filter(|m| m.both_click)
        .collect();
    let click_acc = Score::ratio(
        clicks.iter().filter(|m| m.value_match).count(),
        clicks.len(),
    );
    if click_acc.is_none() {
        report
            .flags
            .push("no steps where both reference and prediction click".into());
    }
    report.push_overall("click_acc", click_acc);
    report
        .params
        .insert("click_tau".into(), cfg.click_tau.into());
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::EpisodeStatus;
    use crate::geometry::NormPoint;

    fn click(x: f64, y: f64) -> AgentOutput {
        Action::click(NormPoint::new(x, y).unwrap()).into()
    }

    fn step(r: AgentOutput, b: Option<NormBBox>, p: Option<AgentOutput>) -> AgentStep {
        AgentStep {
            ref_action: r,
            ref_bbox: b,
            pred_action: p,
        }
    }

    fn m(s: &AgentStep) -> StepMatch {
        match_step_aitw(s, &AitwConfig::default())
    }

    #[test]
    fn click_inside_reference_box() {
        let b = NormBBox::new(0.45, 0.45, 0.55, 0.55).unwrap();
        let r = m(&step(click(0.5, 0.5), Some(b), Some(click(0.50, 0.51))));
        assert_eq!(
            r,
            StepMatch {
                type_match: true,
                value_match: true,
                both_click: true
            }
        );
        let r = m(&step(click(0.5, 0.5), Some(b), Some(click(0.56, 0.5))));
        assert_eq!(
            r,
            StepMatch {
                type_match: true,
                value_match: false,
                both_click: true
            }
        );
    }

    #[test]
    fn click_distance_fallback() {
        let r = m(&step(click(0.5, 0.5), None, Some(click(0.6, 0.55))));
        assert!(r.value_match);
        let r = m(&step(click(0.5, 0.5), None, Some(click(0.6, 0.62))));
        assert!(!r.value_match);
        let loose = match_step_aitw(
            &step(click(0.5, 0.5), None, Some(click(0.6, 0.62))),
            &AitwConfig { click_tau: 0.2 },
        );
        assert!(loose.value_match);
    }

    #[test]
    fn typed_text_is_normalized() {
        let r = m(&step(
            Action::type_text("hello").into(),
            None,
            Some(Action::type_text("Hello ").into()),
        ));
        assert!(r.type_match && r.value_match && !r.both_click);
        let r = m(&step(
            Action::type_text("hello").into(),
            None,
            Some(Action::type_text("help").into()),
        ));
        assert!(r.type_match && !r.value_match);
    }

    #[test]
    fn type_mismatches() {
        let r = m(&step(Action::PressHome.into(), None, Some(click(0.1, 0.1))));
        assert_eq!(r, StepMatch::default());
        let r = m(&step(
            Action::SwipeUp.into(),
            None,
            Some(Action::SwipeDown.into()),
        ));
        assert!(!r.type_match);
        let r = m(&step(
            Action::SwipeLeft.into(),
            None,
            Some(Action::SwipeLeft.into()),
        ));
        assert!(r.is_match());
        let r = m(&step(
            EpisodeStatus::TaskComplete.into(),
            None,
            Some(EpisodeStatus::TaskImpossible.into()),
        ));
        assert!(!r.type_match);
        let r = m(&step(
            EpisodeStatus::TaskComplete.into(),
            None,
            Some(EpisodeStatus::TaskComplete.into()),
        ));
        assert!(r.is_match());
        assert_eq!(m(&step(click(0.1, 0.1), None, None)), StepMatch::default());
    }

    #[test]
    fn three_step_hand_count() {
        let s = |t, v, c| StepMatch {
            type_match: t,
            value_match: v,
            both_click: c,
        };
        let steps = vec![
            (AitwSubset::General, s(true, true, true)),
            (AitwSubset::General, s(true, false, true)),
            (AitwSubset::General, s(true, true, false)),
        ];
        let r = aitw_scores(&steps, &AitwConfig::default());
        let g = r.group("General").unwrap().score("score").unwrap();
        assert!((g.value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.denominator, 3);
        assert_eq!(r.overall("click_acc"), Some(0.5));
        assert!((r.overall("overall").unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.flags.len(), 4);
    }
}
