//! Pose-error metrics and mean average precision over combined
//! rotation/translation tolerances.
//!
//! A prediction counts as a true positive only when an unmatched same-class
//! ground truth exists within both the angular and the translational
//! threshold. Matching runs greedily in descending confidence; AP uses
//! all-point (continuous) interpolation of the precision-recall curve.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::acf::{Acf, PartClass, PartInstance};
use crate::error::AcfError;

/// Angular plus translational error of one matched prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    pub angular_deg: f64,
    pub translational: f64,
}

/// Combined tolerance, e.g. 10 degrees / 2 cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub max_angle_deg: f64,
    pub max_translation: f64,
}

impl ThresholdSpec {
    pub fn new(max_angle_deg: f64, max_translation: f64) -> Result<Self, AcfError> {
        if max_angle_deg <= 0.0 || max_translation <= 0.0 {
            return Err(AcfError::InvalidSpec("thresholds must be positive".into()));
        }
        Ok(Self { max_angle_deg, max_translation })
    }
}

/// Per-class AP values (scale 0..100) with the sampled precision-recall
/// points and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<(PartClass, f64)>,
    pub pr_curves: Vec<(PartClass, Vec<(f64, f64)>)>,
    pub mean_ap: f64,
}

/// Angular distance `180/pi * arccos(n1 . n2)` between two directions, in
/// degrees. Inputs are re-normalized; the dot product is clamped to [-1, 1].
pub fn angular_error(n1: Vector3<f64>, n2: Vector3<f64>) -> Result<f64, AcfError> {
    let (a, b) = (n1.norm(), n2.norm());
    if a < 1e-9 || b < 1e-9 {
        return Err(AcfError::ZeroVector);
    }
    let dot = (n1.dot(&n2) / (a * b)).clamp(-1.0, 1.0);
    Ok(dot.acos().to_degrees())
}

/// Euclidean keypoint distance.
pub fn translation_error(k1: Vector3<f64>, k2: Vector3<f64>) -> f64 {
    (k1 - k2).norm()
}

/// One ground-truth part for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthPart {
    pub part_class: PartClass,
    pub acf: Acf,
}

/// Greedy confidence-ordered matching followed by all-point AP per part
/// class. The mean averages the classes present in the ground truth.
pub fn match_and_score(
    predictions: &[PartInstance],
    ground_truth: &[GroundTruthPart],
    spec: ThresholdSpec,
) -> EvalReport {
    let mut per_class = Vec::new();
    let mut pr_curves = Vec::new();
    let mut sum = 0.0;
    let mut classes = 0usize;
    for class in PartClass::ALL {
        let gt_count = ground_truth.iter().filter(|g| g.part_class == class).count();
        if gt_count == 0 {
            continue;
        }
        let (ap, curve) = class_ap(predictions, ground_truth, class, gt_count, spec);
        per_class.push((class, ap));
        pr_curves.push((class, curve));
        sum += ap;
        classes += 1;
    }
    let mean_ap = if classes > 0 { sum / classes as f64 } else { 0.0 };
    EvalReport { per_class, pr_curves, mean_ap }
}

fn class_ap(
    predictions: &[PartInstance],
    ground_truth: &[GroundTruthPart],
    class: PartClass,
    gt_count: usize,
    spec: ThresholdSpec,
) -> (f64, Vec<(f64, f64)>) {
    let mut preds: Vec<&PartInstance> =
        predictions.iter().filter(|p| p.part_class == class).collect();
    preds.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    let gts: Vec<&GroundTruthPart> =
        ground_truth.iter().filter(|g| g.part_class == class).collect();
    let mut taken = vec![false; gts.len()];
    // True/false-positive flags in confidence order.
    let mut tp_flags = Vec::with_capacity(preds.len());
    for p in &preds {
        // Among unmatched ground truths within both tolerances, take the one
        // with the smallest translation error.
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gts.iter().enumerate() {
            if taken[j] {
                continue;
            }
            let ang = angular_error(p.acf.axis(), g.acf.axis()).unwrap_or(180.0);
            let trans = translation_error(p.acf.keypoint(), g.acf.keypoint());
            if ang <= spec.max_angle_deg && trans <= spec.max_translation {
                if best.map_or(true, |(_, d)| trans < d) {
                    best = Some((j, trans));
                }
            }
        }
        match best {
            Some((j, _)) => {
                taken[j] = true;
                tp_flags.push(true);
            }
            None => tp_flags.push(false),
        }
    }
    let mut curve = Vec::with_capacity(tp_flags.len());
    let mut tp = 0usize;
    for (rank, &is_tp) in tp_flags.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        let precision = tp as f64 / (rank + 1) as f64;
        let recall = tp as f64 / gt_count as f64;
        curve.push((recall, precision));
    }
    (all_point_ap(&curve) * 100.0, curve)
}

/// All-point interpolated AP: the area under the precision envelope
/// `p(r) = max {precision at recall >= r}`.
fn all_point_ap(curve: &[(f64, f64)]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    // Precision envelope from the right.
    let mut envelope: Vec<(f64, f64)> = curve.to_vec();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i].1 = envelope[i].1.max(envelope[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &(recall, precision) in &envelope {
        if recall > prev_recall {
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
    }
    ap
}

/// Sweeps the angular threshold at a fixed translation tolerance, emitting
/// `(threshold_deg, mean_ap)` samples.
pub fn map_curve(
    predictions: &[PartInstance],
    ground_truth: &[GroundTruthPart],
    angle_range_deg: &[f64],
    translation_fixed: f64,
) -> Vec<(f64, f64)> {
    angle_range_deg
        .iter()
        .map(|&deg| {
            let spec = ThresholdSpec { max_angle_deg: deg, max_translation: translation_fixed };
            (deg, match_and_score(predictions, ground_truth, spec).mean_ap)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn angular_error_examples() {
        let z = Vector3::z();
        assert_relative_eq!(angular_error(z, z).unwrap(), 0.0);
        assert_relative_eq!(angular_error(z, Vector3::x()).unwrap(), 90.0, epsilon = 1e-12);
        assert_relative_eq!(angular_error(z, -z).unwrap(), 180.0, epsilon = 1e-12);
        assert!(matches!(angular_error(z, Vector3::zeros()), Err(AcfError::ZeroVector)));
    }

    #[test]
    fn translation_error_examples() {
        let o = Vector3::zeros();
        assert_relative_eq!(translation_error(o, o), 0.0);
        assert_relative_eq!(translation_error(o, Vector3::x()), 1.0);
        assert_relative_eq!(translation_error(o, Vector3::new(3.0, 4.0, 0.0)), 5.0);
    }

    fn gt(class: PartClass, kp: [f64; 3], axis: [f64; 3]) -> GroundTruthPart {
        GroundTruthPart {
            part_class: class,
            acf: Acf::from_direction(Vector3::from(kp), Vector3::from(axis)).unwrap(),
        }
    }

    fn pred(class: PartClass, kp: [f64; 3], axis: [f64; 3], score: f64) -> PartInstance {
        PartInstance::new(
            class,
            Acf::from_direction(Vector3::from(kp), Vector3::from(axis)).unwrap(),
            score,
        )
        .unwrap()
    }

    #[test]
    fn perfect_predictions_score_100() {
        let gts = vec![
            gt(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]),
            gt(PartClass::Handle, [0.1, 0.0, 1.0], [1.0, 0.0, 0.0]),
        ];
        let preds = vec![
            pred(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 0.9),
            pred(PartClass::Handle, [0.1, 0.0, 1.0], [1.0, 0.0, 0.0], 0.8),
        ];
        let spec = ThresholdSpec::new(10.0, 0.02).unwrap();
        let report = match_and_score(&preds, &gts, spec);
        for (_, ap) in &report.per_class {
            assert_relative_eq!(*ap, 100.0);
        }
        assert_relative_eq!(report.mean_ap, 100.0);
    }

    #[test]
    fn threshold_gating_mirrors_column_semantics() {
        // A 12 degree axis error at 1 cm fails 10deg|2cm and passes 15deg|2cm.
        let gts = vec![gt(PartClass::Stir, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0])];
        let tilted = [12f64.to_radians().sin(), 0.0, 12f64.to_radians().cos()];
        let preds = vec![pred(PartClass::Stir, [0.01, 0.0, 1.0], tilted, 0.9)];
        let strict = match_and_score(&preds, &gts, ThresholdSpec::new(10.0, 0.02).unwrap());
        assert_relative_eq!(strict.mean_ap, 0.0);
        let relaxed = match_and_score(&preds, &gts, ThresholdSpec::new(15.0, 0.02).unwrap());
        assert_relative_eq!(relaxed.mean_ap, 100.0);
    }

    #[test]
    fn interleaved_confidences_match_hand_computed_ap() {
        // Ranked [TP, FP, TP] over 2 ground truths:
        // PR points (0.5, 1.0), (0.5, 0.5), (1.0, 2/3);
        // all-point AP = 0.5 * 1.0 + 0.5 * 2/3 = 5/6.
        let gts = vec![
            gt(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]),
            gt(PartClass::Container, [0.5, 0.0, 1.0], [0.0, 0.0, 1.0]),
        ];
        let preds = vec![
            pred(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 0.9),
            pred(PartClass::Container, [0.2, 0.0, 2.0], [0.0, 0.0, 1.0], 0.8),
            pred(PartClass::Container, [0.5, 0.0, 1.0], [0.0, 0.0, 1.0], 0.7),
        ];
        let report = match_and_score(&preds, &gts, ThresholdSpec::new(10.0, 0.02).unwrap());
        assert_relative_eq!(report.mean_ap, 500.0 / 6.0, epsilon = 1e-9);
    }

    #[test]
    fn ap_invariant_to_confidence_rescaling() {
        let gts = vec![
            gt(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]),
            gt(PartClass::Container, [0.5, 0.0, 1.0], [0.0, 0.0, 1.0]),
        ];
        let make = |scale: f64| {
            vec![
                pred(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 0.9 * scale),
                pred(PartClass::Container, [0.2, 0.0, 2.0], [0.0, 0.0, 1.0], 0.8 * scale),
                pred(PartClass::Container, [0.5, 0.0, 1.0], [0.0, 0.0, 1.0], 0.7 * scale),
            ]
        };
        let spec = ThresholdSpec::new(10.0, 0.02).unwrap();
        let a = match_and_score(&make(1.0), &gts, spec);
        let b = match_and_score(&make(0.5), &gts, spec);
        assert_eq!(a.mean_ap, b.mean_ap);
    }

    #[test]
    fn curve_monotone_and_matches_point_eval() {
        let gts = vec![
            gt(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]),
            gt(PartClass::Handle, [0.1, 0.0, 1.0], [1.0, 0.0, 0.0]),
        ];
        let tilted = [8f64.to_radians().sin(), 0.0, 8f64.to_radians().cos()];
        let preds = vec![
            pred(PartClass::Container, [0.0, 0.0, 1.005], tilted, 0.9),
            pred(PartClass::Handle, [0.1, 0.0, 1.0], [1.0, 0.1, 0.0], 0.8),
        ];
        let range: Vec<f64> = (1..=30).map(|d| d as f64).collect();
        let curve = map_curve(&preds, &gts, &range, 0.02);
        for w in curve.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-12, "curve not monotone at {:?}", w);
        }
        let endpoint = match_and_score(&preds, &gts, ThresholdSpec::new(30.0, 0.02).unwrap());
        assert_relative_eq!(curve.last().unwrap().1, endpoint.mean_ap);
    }

    #[test]
    fn zero_predictions_give_zero_curve() {
        let gts = vec![gt(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0])];
        let curve = map_curve(&[], &gts, &[5.0, 10.0, 15.0], 0.02);
        assert!(curve.iter().all(|&(_, m)| m == 0.0));
    }

    #[test]
    fn matching_is_one_to_one() {
        // Two predictions near one ground truth: only one can match.
        let gts = vec![gt(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0])];
        let preds = vec![
            pred(PartClass::Container, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 0.9),
            pred(PartClass::Container, [0.001, 0.0, 1.0], [0.0, 0.0, 1.0], 0.8),
        ];
        let report = match_and_score(&preds, &gts, ThresholdSpec::new(10.0, 0.02).unwrap());
        // One TP at rank 1 (precision 1, recall 1), the duplicate is a FP.
        assert_relative_eq!(report.mean_ap, 100.0);
        let curve = &report.pr_curves[0].1;
        assert_eq!(curve.len(), 2);
        assert_relative_eq!(curve[1].1, 0.5);
    }
}
