//! The voting loss family, as pure scalar functions with analytic gradients.
//!
//! Every loss is the mask-weighted voting average `f_vote` of a per-seed
//! scalar. Seeds with zero mask weight are skipped outright, so perturbing
//! them can never change a result, and summation always runs in ascending
//! seed order for reproducibility.

use nalgebra::{Vector2, Vector3};

use crate::error::AcfError;

const UNIT_TOL: f64 = 1e-9;

/// Per-seed mask confidence weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskWeights(pub Vec<f64>);

impl MaskWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, AcfError> {
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(AcfError::InvalidSpec("mask weights must lie in [0,1]".into()));
        }
        Ok(Self(weights))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-seed 3D offsets toward a single target point.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetField(pub Vec<Vector3<f64>>);

/// Per-seed offset pairs toward the two axis endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointOffsetField(pub Vec<[Vector3<f64>; 2]>);

/// Ground truth for the axis losses: the normalized axis and the per-seed
/// ground-truth offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGroundTruth {
    pub n_star: Vector3<f64>,
    pub endpoint_offsets_star: Vec<[Vector3<f64>; 2]>,
    pub keypoint_offsets_star: Vec<Vector3<f64>>,
}

/// Per-seed 2D affinity vectors and the unit ground-truth direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PafPrediction {
    pub vectors: Vec<Vector2<f64>>,
    pub target_star: Vector2<f64>,
}

/// Per-seed closer-endpoint logits and binary ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPrediction {
    pub logits: Vec<f64>,
    pub labels_star: Vec<u8>,
}

/// Whether the inner-product loss uses the raw signed dot product (as printed)
/// or its absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerLossMode {
    #[default]
    Signed,
    Absolute,
}

fn check_len(name: &str, got: usize, want: usize) -> Result<(), AcfError> {
    if got != want {
        return Err(AcfError::ShapeMismatch(format!("{name}: {got} entries, expected {want}")));
    }
    Ok(())
}

fn check_unit(name: &str, v_norm: f64) -> Result<(), AcfError> {
    if (v_norm - 1.0).abs() > UNIT_TOL {
        return Err(AcfError::DegenerateAxis(format!("{name} has norm {v_norm}, expected 1")));
    }
    Ok(())
}

/// Voting average: the mask-weighted mean of per-seed loss values.
pub fn f_vote(per_seed: &[f64], mask: &MaskWeights) -> Result<f64, AcfError> {
    check_len("per_seed", per_seed.len(), mask.len())?;
    let total: f64 = mask.0.iter().sum();
    if total <= 0.0 {
        return Err(AcfError::EmptyMask);
    }
    let mut acc = 0.0;
    for (loss, &w) in per_seed.iter().zip(&mask.0) {
        if w > 0.0 {
            acc += loss * w;
        }
    }
    Ok(acc / total)
}

/// Per-seed voting weights `w_i / sum(w)`; the gradient of `f_vote` with
/// respect to each per-seed loss value.
fn vote_weights(mask: &MaskWeights) -> Result<Vec<f64>, AcfError> {
    let total: f64 = mask.0.iter().sum();
    if total <= 0.0 {
        return Err(AcfError::EmptyMask);
    }
    Ok(mask.0.iter().map(|&w| if w > 0.0 { w / total } else { 0.0 }).collect())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// L1 keypoint-offset loss: voting average of `sum_k |t_i^k - t_i^k*|`.
pub fn loss_keypoint(
    pred: &OffsetField,
    truth: &[Vector3<f64>],
    mask: &MaskWeights,
) -> Result<f64, AcfError> {
    check_len("truth", truth.len(), pred.0.len())?;
    let per_seed: Vec<f64> = pred
        .0
        .iter()
        .zip(truth)
        .map(|(t, t_star)| (t - t_star).abs().sum())
        .collect();
    f_vote(&per_seed, mask)
}

/// Gradient of [`loss_keypoint`] with respect to the predicted offsets.
pub fn loss_keypoint_grad(
    pred: &OffsetField,
    truth: &[Vector3<f64>],
    mask: &MaskWeights,
) -> Result<Vec<Vector3<f64>>, AcfError> {
    check_len("truth", truth.len(), pred.0.len())?;
    check_len("pred", pred.0.len(), mask.len())?;
    let w = vote_weights(mask)?;
    Ok(pred
        .0
        .iter()
        .zip(truth)
        .zip(&w)
        .map(|((t, t_star), &wi)| (t - t_star).map(sign) * wi)
        .collect())
}

/// Endpoint loss: the keypoint loss summed over both endpoint channels.
pub fn loss_endpoint(
    pred: &EndpointOffsetField,
    truth: &[[Vector3<f64>; 2]],
    mask: &MaskWeights,
) -> Result<f64, AcfError> {
    check_len("truth", truth.len(), pred.0.len())?;
    let mut total = 0.0;
    for m in 0..2 {
        let channel = OffsetField(pred.0.iter().map(|t| t[m]).collect());
        let channel_truth: Vec<_> = truth.iter().map(|t| t[m]).collect();
        total += loss_keypoint(&channel, &channel_truth, mask)?;
    }
    Ok(total)
}

/// Gradient of [`loss_endpoint`] with respect to the predicted offsets.
pub fn loss_endpoint_grad(
    pred: &EndpointOffsetField,
    truth: &[[Vector3<f64>; 2]],
    mask: &MaskWeights,
) -> Result<Vec<[Vector3<f64>; 2]>, AcfError> {
    check_len("truth", truth.len(), pred.0.len())?;
    check_len("pred", pred.0.len(), mask.len())?;
    let w = vote_weights(mask)?;
    Ok(pred
        .0
        .iter()
        .zip(truth)
        .zip(&w)
        .map(|((t, t_star), &wi)| {
            [(t[0] - t_star[0]).map(sign) * wi, (t[1] - t_star[1]).map(sign) * wi]
        })
        .collect())
}

/// Axis loss: voting average of the voter-to-axis distance
/// `||(t_{i,m} - t*_{i,m}) x n*||` summed over both endpoint channels.
pub fn loss_axis(
    pred: &EndpointOffsetField,
    truth: &AxisGroundTruth,
    mask: &MaskWeights,
) -> Result<f64, AcfError> {
    check_len("truth", truth.endpoint_offsets_star.len(), pred.0.len())?;
    check_unit("n_star", truth.n_star.norm())?;
    let per_seed: Vec<f64> = pred
        .0
        .iter()
        .zip(&truth.endpoint_offsets_star)
        .map(|(t, t_star)| {
            (0..2)
                .map(|m| (t[m] - t_star[m]).cross(&truth.n_star).norm())
                .sum()
        })
        .collect();
    f_vote(&per_seed, mask)
}

/// Gradient of [`loss_axis`] with respect to the predicted offsets.
pub fn loss_axis_grad(
    pred: &EndpointOffsetField,
    truth: &AxisGroundTruth,
    mask: &MaskWeights,
) -> Result<Vec<[Vector3<f64>; 2]>, AcfError> {
    check_len("truth", truth.endpoint_offsets_star.len(), pred.0.len())?;
    check_len("pred", pred.0.len(), mask.len())?;
    check_unit("n_star", truth.n_star.norm())?;
    let w = vote_weights(mask)?;
    let n = truth.n_star;
    Ok(pred
        .0
        .iter()
        .zip(&truth.endpoint_offsets_star)
        .zip(&w)
        .map(|((t, t_star), &wi)| {
            let mut g = [Vector3::zeros(), Vector3::zeros()];
            for m in 0..2 {
                let c = (t[m] - t_star[m]).cross(&n);
                let norm = c.norm();
                if norm > 0.0 {
                    // d||d x n||/dd = n x (d x n)/||d x n||
                    g[m] = n.cross(&(c / norm)) * wi;
                }
            }
            g
        })
        .collect())
}

/// Direction loss: voting average of `1 - (t_{i,2} - t_{i,1}) . n*`.
pub fn loss_direction(
    pred: &EndpointOffsetField,
    truth: &AxisGroundTruth,
    mask: &MaskWeights,
) -> Result<f64, AcfError> {
    check_unit("n_star", truth.n_star.norm())?;
    let per_seed: Vec<f64> = pred
        .0
        .iter()
        .map(|t| 1.0 - (t[1] - t[0]).dot(&truth.n_star))
        .collect();
    f_vote(&per_seed, mask)
}

/// Gradient of [`loss_direction`] with respect to the predicted offsets.
pub fn loss_direction_grad(
    pred: &EndpointOffsetField,
    truth: &AxisGroundTruth,
    mask: &MaskWeights,
) -> Result<Vec<[Vector3<f64>; 2]>, AcfError> {
    check_len("pred", pred.0.len(), mask.len())?;
    check_unit("n_star", truth.n_star.norm())?;
    let w = vote_weights(mask)?;
    Ok(w.iter().map(|&wi| [truth.n_star * wi, -truth.n_star * wi]).collect())
}

/// Affinity loss: voting average of `||p_i - p*||`.
pub fn loss_paf(pred: &PafPrediction, mask: &MaskWeights) -> Result<f64, AcfError> {
    check_unit("p_star", pred.target_star.norm())?;
    let per_seed: Vec<f64> = pred.vectors.iter().map(|p| (p - pred.target_star).norm()).collect();
    f_vote(&per_seed, mask)
}

/// Gradient of [`loss_paf`] with respect to the predicted 2D vectors.
pub fn loss_paf_grad(
    pred: &PafPrediction,
    mask: &MaskWeights,
) -> Result<Vec<Vector2<f64>>, AcfError> {
    check_len("pred", pred.vectors.len(), mask.len())?;
    check_unit("p_star", pred.target_star.norm())?;
    let w = vote_weights(mask)?;
    Ok(pred
        .vectors
        .iter()
        .zip(&w)
        .map(|(p, &wi)| {
            let d = p - pred.target_star;
            let norm = d.norm();
            if norm > 0.0 {
                d / norm * wi
            } else {
                Vector2::zeros()
            }
        })
        .collect())
}

/// Vector loss: voting average of `||n_i - n*||`.
pub fn loss_vector(
    pred: &[Vector3<f64>],
    n_star: Vector3<f64>,
    mask: &MaskWeights,
) -> Result<f64, AcfError> {
    check_unit("n_star", n_star.norm())?;
    let per_seed: Vec<f64> = pred.iter().map(|n| (n - n_star).norm()).collect();
    f_vote(&per_seed, mask)
}

/// Gradient of [`loss_vector`] with respect to the predicted vectors.
pub fn loss_vector_grad(
    pred: &[Vector3<f64>],
    n_star: Vector3<f64>,
    mask: &MaskWeights,
) -> Result<Vec<Vector3<f64>>, AcfError> {
    check_len("pred", pred.len(), mask.len())?;
    check_unit("n_star", n_star.norm())?;
    let w = vote_weights(mask)?;
    Ok(pred
        .iter()
        .zip(&w)
        .map(|(n, &wi)| {
            let d = n - n_star;
            let norm = d.norm();
            if norm > 0.0 {
                d / norm * wi
            } else {
                Vector3::zeros()
            }
        })
        .collect())
}

/// Inner-product loss: voting average of `t_i . n*` (signed, as printed) or
/// `|t_i . n*|` when `mode` is [`InnerLossMode::Absolute`].
pub fn loss_inner(
    pred: &OffsetField,
    n_star: Vector3<f64>,
    mask: &MaskWeights,
    mode: InnerLossMode,
) -> Result<f64, AcfError> {
    check_unit("n_star", n_star.norm())?;
    let per_seed: Vec<f64> = pred
        .0
        .iter()
        .map(|t| {
            let d = t.dot(&n_star);
            match mode {
                InnerLossMode::Signed => d,
                InnerLossMode::Absolute => d.abs(),
            }
        })
        .collect();
    f_vote(&per_seed, mask)
}

/// Gradient of [`loss_inner`] with respect to the predicted offsets.
pub fn loss_inner_grad(
    pred: &OffsetField,
    n_star: Vector3<f64>,
    mask: &MaskWeights,
    mode: InnerLossMode,
) -> Result<Vec<Vector3<f64>>, AcfError> {
    check_len("pred", pred.0.len(), mask.len())?;
    check_unit("n_star", n_star.norm())?;
    let w = vote_weights(mask)?;
    Ok(pred
        .0
        .iter()
        .zip(&w)
        .map(|(t, &wi)| match mode {
            InnerLossMode::Signed => n_star * wi,
            InnerLossMode::Absolute => n_star * sign(t.dot(&n_star)) * wi,
        })
        .collect())
}

/// Numerically stable binary cross entropy with logits for one seed:
/// `max(l, 0) - l*l_star + log(1 + exp(-|l|))`.
pub fn bce_with_logits(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (-logit.abs()).exp().ln_1p()
}

/// Label loss: voting average of per-seed BCE-with-logits.
pub fn loss_label(pred: &LabelPrediction, mask: &MaskWeights) -> Result<f64, AcfError> {
    check_len("labels", pred.labels_star.len(), pred.logits.len())?;
    if pred.labels_star.iter().any(|&l| l > 1) {
        return Err(AcfError::InvalidSpec("labels must be binary".into()));
    }
    let per_seed: Vec<f64> = pred
        .logits
        .iter()
        .zip(&pred.labels_star)
        .map(|(&l, &l_star)| bce_with_logits(l, l_star as f64))
        .collect();
    f_vote(&per_seed, mask)
}

/// Gradient of [`loss_label`] with respect to the logits:
/// `(sigmoid(l) - l*) * w_i / sum(w)`.
pub fn loss_label_grad(pred: &LabelPrediction, mask: &MaskWeights) -> Result<Vec<f64>, AcfError> {
    check_len("pred", pred.logits.len(), mask.len())?;
    check_len("labels", pred.labels_star.len(), pred.logits.len())?;
    let w = vote_weights(mask)?;
    Ok(pred
        .logits
        .iter()
        .zip(&pred.labels_star)
        .zip(&w)
        .map(|((&l, &l_star), &wi)| {
            let sigmoid = 1.0 / (1.0 + (-l).exp());
            (sigmoid - l_star as f64) * wi
        })
        .collect())
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn numeric_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>, AcfError>
where
    F: Fn(&[f64]) -> f64,
{
    if h <= 0.0 {
        return Err(AcfError::InvalidSpec("finite-difference step must be positive".into()));
    }
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe);
        probe[i] = x[i] - h;
        let minus = f(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}
