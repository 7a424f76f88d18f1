use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{Benchmark, Score, ScoreGroup, ScoreReport};
use super::text::token_f1;
use super::MetricsError;
use crate::action::{Action, AgentOutput, WebOutput};
use crate::geometry::{point_in_bbox, NormBBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mind2WebSplit {
    CrossTask,
    CrossWebsite,
    CrossDomain,
}

impl Mind2WebSplit {
    pub const ALL: [Mind2WebSplit; 3] = [
        Mind2WebSplit::CrossTask,
        Mind2WebSplit::CrossWebsite,
        Mind2WebSplit::CrossDomain,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mind2WebSplit::CrossTask => "cross_task",
            Mind2WebSplit::CrossWebsite => "cross_website",
            Mind2WebSplit::CrossDomain => "cross_domain",
        }
    }
}

impl fmt::Display for Mind2WebSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mind2WebSplit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mind2WebSplit::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown Mind2Web split {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mind2WebStep {
    pub ref_action: Action,
    pub ref_bbox: NormBBox,
    pub pred: Option<WebOutput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WebStepOutcome {
    pub ele_correct: bool,
    pub op_f1: f64,
    pub step_success: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mind2WebConfig {
    /// Minimum operation F1 for a step to count as successful.
    pub op_success_f1: f64,
}

impl Default for Mind2WebConfig {
    fn default() -> Self {
        Self { op_success_f1: 1.0 }
    }
}

fn output_operation(o: &AgentOutput) -> String {
    match o {
        AgentOutput::Action(a) => a.operation_string(),
        AgentOutput::Status(s) => s.token().to_lowercase(),
    }
}

/// Scores one web-navigation step: element hit, operation F1, step success.
pub fn mind2web_step(step: &Mind2WebStep, cfg: &Mind2WebConfig) -> WebStepOutcome {
    let Some(pred) = &step.pred else {
        return WebStepOutcome {
            ele_correct: false,
            op_f1: 0.0,
            step_success: false,
        };
    };
    let ele_correct = pred
        .element_point
        .is_some_and(|p| point_in_bbox(p, step.ref_bbox));
    let op_f1 = token_f1(
        &output_operation(&pred.output),
        &step.ref_action.operation_string(),
    );
    WebStepOutcome {
        ele_correct,
        op_f1,
        step_success: ele_correct && op_f1 >= cfg.op_success_f1,
    }
}

/// Element accuracy, operation F1 and step success rate per split, plus the
/// same three over all steps.
pub fn mind2web_scores(
    steps: &[(Mind2WebSplit, WebStepOutcome)],
    cfg: &Mind2WebConfig,
) -> Result<ScoreReport, MetricsError> {
    if steps.is_empty() {
        return Err(MetricsError::EmptyInput("Mind2Web steps"));
    }
    let mut report = ScoreReport::new(Benchmark::Mind2web);
    let fill = |g: &mut ScoreGroup, outcomes: &[&WebStepOutcome]| {
        let n = outcomes.len();
        g.push(
            "ele_acc",
            Score::ratio(outcomes.iter().filter(|o| o.ele_correct).count(), n),
        );
        g.push("op_f1", Score::mean(outcomes.iter().map(|o| o.op_f1)));
        g.push(
            "step_sr",
            Score::ratio(outcomes.iter().filter(|o| o.step_success).count(), n),
        );
    };
    for split in Mind2WebSplit::ALL {
        let outcomes: Vec<&WebStepOutcome> = steps
            .iter()
            .filter(|(s, _)| *s == split)
            .map(|(_, o)| o)
            .collect();
        if outcomes.is_empty() {
            report.flags.push(format!("empty split {split}"));
        }
        let mut g = ScoreGroup::new(split.as_str(), outcomes.len());
        fill(&mut g, &outcomes);
        report.groups.push(g);
    }
    let all: Vec<&WebStepOutcome> = steps.iter().map(|(_, o)| o).collect();
    let mut overall = ScoreGroup::new("all", all.len());
    fill(&mut overall, &all);
    report.overall = overall.scores;
    report
        .params
        .insert("op_success_f1".into(), cfg.op_success_f1.into());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NormPoint;

    fn pt(x: f64, y: f64) -> NormPoint {
        NormPoint::new(x, y).unwrap()
    }

    fn web(a: Action, p: Option<NormPoint>) -> Option<WebOutput> {
        Some(WebOutput {
            output: a.into(),
            element_point: p,
        })
    }

    fn score(s: &Mind2WebStep) -> WebStepOutcome {
        mind2web_step(s, &Mind2WebConfig::default())
    }

    #[test]
    fn step_examples() {
        let b = NormBBox::new(0.2, 0.2, 0.4, 0.4).unwrap();
        let oracle = Mind2WebStep {
            ref_action: Action::click(pt(0.3, 0.3)),
            ref_bbox: b,
            pred: web(Action::click(pt(0.3, 0.3)), Some(pt(0.3, 0.3))),
        };
        assert_eq!(
            score(&oracle),
            WebStepOutcome {
                ele_correct: true,
                op_f1: 1.0,
                step_success: true
            }
        );

        let typed = Mind2WebStep {
            ref_action: Action::type_text("hello world"),
            ref_bbox: b,
            pred: web(Action::type_text("hello there"), Some(pt(0.3, 0.3))),
        };
        let o = score(&typed);
        assert!(o.ele_correct && !o.step_success);
        assert!((o.op_f1 - 2.0 / 3.0).abs() < 1e-12);

        let outside = Mind2WebStep {
            ref_action: Action::click(pt(0.3, 0.3)),
            ref_bbox: b,
            pred: web(Action::click(pt(0.9, 0.9)), Some(pt(0.9, 0.9))),
        };
        assert_eq!(
            score(&outside),
            WebStepOutcome {
                ele_correct: false,
                op_f1: 1.0,
                step_success: false
            }
        );

        let no_point = Mind2WebStep {
            ref_action: Action::select("Red"),
            ref_bbox: b,
            pred: web(Action::select("Red"), None),
        };
        assert!(!score(&no_point).ele_correct);

        let missing = Mind2WebStep {
            pred: None,
            ..no_point
        };
        assert_eq!(score(&missing).op_f1, 0.0);
    }

    #[test]
    fn aggregate_hand_count() {
        let ok = WebStepOutcome {
            ele_correct: true,
            op_f1: 1.0,
            step_success: true,
        };
        let miss = WebStepOutcome {
            ele_correct: false,
            op_f1: 1.0,
            step_success: false,
        };
        let r = mind2web_scores(
            &[
                (Mind2WebSplit::CrossTask, ok),
                (Mind2WebSplit::CrossTask, miss),
            ],
            &Mind2WebConfig::default(),
        )
        .unwrap();
        let g = r.group("cross_task").unwrap();
        assert_eq!(g.score("ele_acc").unwrap().value, 0.5);
        assert_eq!(g.score("op_f1").unwrap().value, 1.0);
        assert_eq!(g.score("step_sr").unwrap().value, 0.5);
        assert_eq!(r.overall("step_sr"), Some(0.5));
        assert_eq!(
            r.flags,
            vec!["empty split cross_website", "empty split cross_domain"]
        );
        assert!(mind2web_scores(&[], &Mind2WebConfig::default()).is_err());
    }
}
