//! End-to-end wiring: per-ROI ACF estimation over a prediction bundle and
//! part-to-object grouping on the results.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::acf::{Acf, PartClass, PartInstance};
use crate::association::{assemble_objects, mean_paf_direction, ObjectHypothesis, PafField};
use crate::error::AcfError;
use crate::estimation::{
    estimate_axis_endpoints, estimate_axis_scatterline, estimate_axis_vector, estimate_keypoint,
    MeanShiftConfig, RansacConfig,
};
use crate::synthetic::PredictionBundle;

/// Which of the three axis estimators to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisMethod {
    Endpoints,
    Vector,
    ScatterLine,
}

/// Estimator settings shared by every ROI of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub axis_method: AxisMethod,
    pub mean_shift: MeanShiftConfig,
    pub ransac: RansacConfig,
    pub mask_threshold: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            axis_method: AxisMethod::Endpoints,
            mean_shift: MeanShiftConfig::default(),
            ransac: RansacConfig::default(),
            mask_threshold: 0.5,
        }
    }
}

/// One successfully estimated part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedPart {
    pub roi_index: usize,
    pub part_class: PartClass,
    pub acf: Acf,
    pub score: f64,
}

/// One ROI whose estimation failed, with the error that stopped it.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationFailure {
    pub roi_index: usize,
    pub error: String,
}

/// Runs keypoint voting and the configured axis estimator on every ROI.
/// Failures are collected per ROI rather than aborting the scene.
pub fn estimate_bundle(
    bundle: &PredictionBundle,
    config: &EstimationConfig,
) -> (Vec<EstimatedPart>, Vec<EstimationFailure>) {
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for (roi_index, roi) in bundle.rois.iter().enumerate() {
        match estimate_roi(bundle, roi_index, config) {
            Ok(acf) => parts.push(EstimatedPart {
                roi_index,
                part_class: roi.part_class,
                acf,
                score: roi.score,
            }),
            Err(e) => failures.push(EstimationFailure { roi_index, error: e.to_string() }),
        }
    }
    (parts, failures)
}

fn estimate_roi(
    bundle: &PredictionBundle,
    roi_index: usize,
    config: &EstimationConfig,
) -> Result<Acf, AcfError> {
    let roi = &bundle.rois[roi_index];
    let keypoint = estimate_keypoint(
        &roi.seeds,
        &roi.keypoint_offsets,
        &roi.mask,
        config.mask_threshold,
        &config.mean_shift,
    )?;
    let direction = match config.axis_method {
        AxisMethod::Endpoints => {
            estimate_axis_endpoints(
                &roi.seeds,
                &roi.endpoint_offsets,
                &roi.mask,
                config.mask_threshold,
                &config.mean_shift,
            )?
            .direction
        }
        AxisMethod::Vector => {
            estimate_axis_vector(&roi.axis_vectors, &roi.mask, keypoint)?.direction
        }
        AxisMethod::ScatterLine => {
            // Decorrelate the RANSAC draws between ROIs of one scene.
            let ransac = RansacConfig {
                rng_seed: config.ransac.rng_seed.wrapping_add(roi_index as u64),
                ..config.ransac
            };
            estimate_axis_scatterline(
                &roi.seeds,
                &roi.scatter_offsets,
                &roi.labels,
                &roi.mask,
                config.mask_threshold,
                &ransac,
                Some(keypoint),
            )?
            .direction
        }
    };
    Acf::new(keypoint, direction)
}

/// Mean affinity direction per estimated part; parts without a directed link
/// (or with a cancelled mean) get `None`.
pub fn bundle_paf_directions(
    bundle: &PredictionBundle,
    estimates: &[EstimatedPart],
    mask_threshold: f64,
) -> Result<Vec<Option<Vector2<f64>>>, AcfError> {
    let mut dirs = Vec::with_capacity(estimates.len());
    for part in estimates {
        let roi = &bundle.rois[part.roi_index];
        if roi.paf_target.is_none() {
            dirs.push(None);
            continue;
        }
        let field = PafField { vectors: roi.paf_vectors.clone(), mask: roi.mask.clone() };
        match mean_paf_direction(&field, mask_threshold) {
            Ok(d) => dirs.push(Some(d)),
            Err(AcfError::EmptyMask) | Err(AcfError::DegenerateDirection(_)) => dirs.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(dirs)
}

/// Groups estimated parts into object hypotheses using their affinity
/// directions from the bundle.
pub fn associate_bundle(
    bundle: &PredictionBundle,
    estimates: &[EstimatedPart],
    mask_threshold: f64,
    min_score: f64,
) -> Result<Vec<ObjectHypothesis>, AcfError> {
    let paf_dirs = bundle_paf_directions(bundle, estimates, mask_threshold)?;
    let instances: Vec<PartInstance> = estimates
        .iter()
        .map(|p| PartInstance::new(p.part_class, p.acf, p.score))
        .collect::<Result<_, _>>()?;
    assemble_objects(&instances, &paf_dirs, &bundle.intrinsics, min_score)
}
