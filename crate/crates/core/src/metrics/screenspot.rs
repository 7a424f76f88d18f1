use std::fmt;

use serde::{Deserialize, Serialize};

use super::report::{Benchmark, DistanceHistogram, HistogramBin, Score, ScoreGroup, ScoreReport};
use super::MetricsError;
use crate::geometry::{bbox_center, point_distance, point_in_bbox, NormBBox, NormPoint};
pub use crate::sample::ElementKind;

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Mobile,
    Desktop,
    Web,
}

impl Platform {
    pub const ALL: [Platform; 3] = [Platform::Mobile, Platform::Desktop, Platform::Web];

    pub fn as_str(&self) -> &'static str {
        match self {
            Platform::Mobile => "mobile",
            Platform::Desktop => "desktop",
            Platform::Web => "web",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingCase {
    pub platform: Platform,
    pub kind: ElementKind,
    pub gt_bbox: NormBBox,
    /// `None` when the model output had no usable point.
    pub prediction: Option<NormPoint>,
}

impl GroundingCase {
    pub fn is_hit(&self) -> bool {
        self.prediction
            .is_some_and(|p| point_in_bbox(p, self.gt_bbox))
    }
}

/// Cell name used in reports, e.g. `mobile/text`.
pub fn cell_name(platform: Platform, kind: ElementKind) -> String {
    format!("{platform}/{kind}")
}

/// Click accuracy per (platform, kind) cell plus macro and micro averages.
///
/// Cases without a prediction count as misses. The macro average is over
/// non-empty cells; the micro average is over all cases.
pub fn click_accuracy(cases: &[GroundingCase]) -> Result<ScoreReport, MetricsError> {
    if cases.is_empty() {
        return Err(MetricsError::EmptyInput("grounding cases"));
    }
    let mut report = ScoreReport::new(Benchmark::Screenspot);
    let mut cell_scores = Vec::new();
    let mut hits_total = 0;
    for platform in Platform::ALL {
        for kind in ElementKind::ALL {
            let in_cell: Vec<&GroundingCase> = cases
                .iter()
                .filter(|c| c.platform == platform && c.kind == kind)
                .collect();
            let hits = in_cell.iter().filter(|c| c.is_hit()).count();
            hits_total += hits;
            let name = cell_name(platform, kind);
            let mut group = ScoreGroup::new(&name, in_cell.len());
            let score = Score::ratio(hits, in_cell.len());
            if let Some(s) = score {
                cell_scores.push(s.value);
            } else {
                report.flags.push(format!("empty cell {name}"));
            }
            group.push("click_acc", score);
            report.groups.push(group);
        }
    }
    report.push_overall("average_macro", Score::mean(cell_scores));
    report.push_overall("average_micro", Score::ratio(hits_total, cases.len()));
    report.params.insert(
        "unparsed_predictions".into(),
        cases
            .iter()
            .filter(|c| c.prediction.is_none())
            .count()
            .into(),
    );
    Ok(report)
}

/// Bins prediction-to-center distances into `0.05`-wide bins over `[0, sqrt 2]`.
pub fn distance_histogram(cases: &[GroundingCase]) -> DistanceHistogram {
    let max = std::f64::consts::SQRT_2;
    let n_bins = (max / HISTOGRAM_BIN_WIDTH).ceil() as usize;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lo: i as f64 * HISTOGRAM_BIN_WIDTH,
            hi: ((i + 1) as f64 * HISTOGRAM_BIN_WIDTH).min(max),
            hits: 0,
            misses: 0,
        })
        .collect();
    let mut missing = 0;
    for case in cases {
        let Some(p) = case.prediction else {
            missing += 1;
            continue;
        };
        let d = point_distance(p, bbox_center(case.gt_bbox));
        let idx = ((d / HISTOGRAM_BIN_WIDTH).floor() as usize).min(n_bins - 1);
        if case.is_hit() {
            bins[idx].hits += 1;
        } else {
            bins[idx].misses += 1;
        }
    }
    DistanceHistogram {
        bin_width: HISTOGRAM_BIN_WIDTH,
        bins,
        missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(l: f64, t: f64, r: f64, d: f64) -> NormBBox {
        NormBBox::new(l, t, r, d).unwrap()
    }

    fn pt(x: f64, y: f64) -> NormPoint {
        NormPoint::new(x, y).unwrap()
    }

    fn case(
        platform: Platform,
        kind: ElementKind,
        b: NormBBox,
        p: Option<NormPoint>,
    ) -> GroundingCase {
        GroundingCase {
            platform,
            kind,
            gt_bbox: b,
            prediction: p,
        }
    }

    #[test]
    fn one_hit_one_miss() {
        let b = bb(0.4, 0.4, 0.6, 0.6);
        let cases = vec![
            case(Platform::Web, ElementKind::Text, b, Some(pt(0.5, 0.5))),
            case(Platform::Web, ElementKind::Text, b, Some(pt(0.1, 0.1))),
        ];
        let r = click_accuracy(&cases).unwrap();
        assert_eq!(r.overall("average_micro"), Some(0.5));
        assert_eq!(r.overall("average_macro"), Some(0.5));
        assert_eq!(r.flags.len(), 5);
    }

    #[test]
    fn report_layout_has_six_cells() {
        let b = bb(0.1, 0.1, 0.2, 0.2);
        let cases: Vec<_> = Platform::ALL
            .iter()
            .flat_map(|&p| ElementKind::ALL.map(|k| case(p, k, b, Some(b.center()))))
            .collect();
        let r = click_accuracy(&cases).unwrap();
        let names: Vec<&str> = r.groups.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "mobile/text",
                "mobile/icon",
                "desktop/text",
                "desktop/icon",
                "web/text",
                "web/icon"
            ]
        );
        assert!(r
            .groups
            .iter()
            .all(|g| g.score("click_acc").unwrap().value == 1.0));
        assert!(r.flags.is_empty());
    }

    #[test]
    fn missing_prediction_is_a_miss() {
        let b = bb(0.0, 0.0, 1.0, 1.0);
        let cases = vec![
            case(Platform::Mobile, ElementKind::Icon, b, None),
            case(Platform::Mobile, ElementKind::Text, b, Some(pt(0.3, 0.3))),
        ];
        let r = click_accuracy(&cases).unwrap();
        assert_eq!(r.overall("average_micro"), Some(0.5));
        assert_eq!(r.overall("average_macro"), Some(0.5));
        assert_eq!(r.params["unparsed_predictions"], 1);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(
            click_accuracy(&[]),
            Err(MetricsError::EmptyInput("grounding cases"))
        );
    }

    #[test]
    fn histogram_bins() {
        let h = distance_histogram(&[]);
        assert_eq!(h.bins.len(), 29);
        assert_eq!(h.total(), 0);
        assert!((h.bins[28].hi - std::f64::consts::SQRT_2).abs() < 1e-15);

        let far = case(
            Platform::Web,
            ElementKind::Icon,
            bb(0.0, 0.0, 0.01, 0.01),
            Some(pt(1.0, 1.0)),
        );
        let h = distance_histogram(&[far]);
        assert_eq!(h.bins[28].misses, 1);

        let b = bb(0.2, 0.2, 0.4, 0.4);
        let h = distance_histogram(&[case(Platform::Web, ElementKind::Icon, b, Some(b.center()))]);
        assert_eq!(h.bins[0].hits, 1);
        assert_eq!(h.total(), 1);
    }

    proptest! {
        #[test]
        fn oracle_predictions_score_one(boxes in prop::collection::vec(
            (0.0..0.9f64, 0.0..0.9f64, 0.001..0.1f64, 0.001..0.1f64, 0usize..3, any::<bool>()), 1..60)
        ) {
            let cases: Vec<_> = boxes.iter().map(|&(l, t, w, h, p, k)| {
                let b = bb(l, t, l + w, t + h);
                let kind = if k { ElementKind::Text } else { ElementKind::Icon };
                case(Platform::ALL[p], kind, b, Some(b.center()))
            }).collect();
            let r = click_accuracy(&cases).unwrap();
            prop_assert_eq!(r.overall("average_micro"), Some(1.0));
            prop_assert_eq!(r.overall("average_macro"), Some(1.0));
            let h = distance_histogram(&cases);
            prop_assert_eq!(h.bins[0].hits, cases.len());
        }
    }
}
