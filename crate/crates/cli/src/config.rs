//! JSON config files for the synth and estimate subcommands. All fields are
//! optional with sensible defaults; unknown fields are rejected.

use std::path::Path;

use serde::Deserialize;

use acf_core::estimation::{MeanShiftConfig, RansacConfig};
use acf_core::pipeline::EstimationConfig;
use acf_core::synthetic::NoiseModel;

use crate::CliError;

fn default_scenes() -> usize {
    20
}
fn default_min_objects() -> usize {
    1
}
fn default_max_objects() -> usize {
    4
}
fn default_seed_grid_n() -> usize {
    14
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub offset_sigma: f64,
    pub outlier_fraction: f64,
    pub outlier_box: f64,
    pub paf_angle_sigma_deg: f64,
    pub mask_flip_prob: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let z = NoiseModel::zero();
        Self {
            offset_sigma: z.offset_sigma,
            outlier_fraction: z.outlier_fraction,
            outlier_box: z.outlier_box,
            paf_angle_sigma_deg: z.paf_angle_sigma_deg,
            mask_flip_prob: z.mask_flip_prob,
        }
    }
}

impl NoiseConfig {
    pub fn to_model(&self) -> NoiseModel {
        NoiseModel {
            offset_sigma: self.offset_sigma,
            outlier_fraction: self.outlier_fraction,
            outlier_box: self.outlier_box,
            paf_angle_sigma_deg: self.paf_angle_sigma_deg,
            mask_flip_prob: self.mask_flip_prob,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    #[serde(rename = "scenes")]
    pub scene_count: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    pub seed_grid_n: usize,
    pub noise: NoiseConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            scene_count: default_scenes(),
            min_objects: default_min_objects(),
            max_objects: default_max_objects(),
            seed_grid_n: default_seed_grid_n(),
            noise: NoiseConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RansacSection {
    pub iterations: usize,
    pub inlier_threshold: f64,
    pub min_inlier_fraction: f64,
}

impl Default for RansacSection {
    fn default() -> Self {
        let d = RansacConfig::default();
        Self {
            iterations: d.iterations,
            inlier_threshold: d.inlier_threshold,
            min_inlier_fraction: d.min_inlier_fraction,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateFileConfig {
    pub bandwidth: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub merge_radius: Option<f64>,
    pub mask_threshold: f64,
    pub ransac: RansacSection,
}

impl Default for EstimateFileConfig {
    fn default() -> Self {
        let ms = MeanShiftConfig::default();
        Self {
            bandwidth: ms.bandwidth,
            max_iterations: ms.max_iterations,
            convergence_tol: ms.convergence_tol,
            merge_radius: None,
            mask_threshold: 0.5,
            ransac: RansacSection::default(),
        }
    }
}

impl EstimateFileConfig {
    pub fn to_estimation_config(
        &self,
        axis_method: acf_core::pipeline::AxisMethod,
        seed: u64,
    ) -> Result<EstimationConfig, CliError> {
        if self.bandwidth <= 0.0 || self.convergence_tol <= 0.0 || self.mask_threshold < 0.0 {
            return Err(CliError::InvalidConfig(
                "bandwidth, convergence_tol must be positive; mask_threshold >= 0".into(),
            ));
        }
        Ok(EstimationConfig {
            axis_method,
            mean_shift: MeanShiftConfig {
                bandwidth: self.bandwidth,
                max_iterations: self.max_iterations,
                convergence_tol: self.convergence_tol,
                merge_radius: self.merge_radius.unwrap_or(self.bandwidth / 2.0),
            },
            ransac: RansacConfig {
                iterations: self.ransac.iterations,
                inlier_threshold: self.ransac.inlier_threshold,
                min_inlier_fraction: self.ransac.min_inlier_fraction,
                rng_seed: seed,
            },
            mask_threshold: self.mask_threshold,
        })
    }
}

/// Loads an optional config file, falling back to defaults when absent.
pub fn load_config<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            if !p.exists() {
                return Err(CliError::MissingInput(format!("config file {}", p.display())));
            }
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::InvalidConfig(format!("{}: {e}", p.display())))
        }
    }
}
