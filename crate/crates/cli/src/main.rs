//! Command line front end for the ACF pipeline: synthetic scene generation,
//! per-ROI estimation, part association, manipulation planning, evaluation
//! and loss/gradient checking.
//!
//! Exit codes: 0 success, 1 missing input or runtime failure, 2 invalid
//! configuration or malformed input file.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use acf_core::pipeline::AxisMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisMethodArg {
    Endpoints,
    Vector,
    ScatterLine,
}

impl From<AxisMethodArg> for AxisMethod {
    fn from(a: AxisMethodArg) -> Self {
        match a {
            AxisMethodArg::Endpoints => AxisMethod::Endpoints,
            AxisMethodArg::Vector => AxisMethod::Vector,
            AxisMethodArg::ScatterLine => AxisMethod::ScatterLine,
        }
    }
}

#[derive(Parser)]
#[command(name = "acf", about = "Affordance coordinate frame estimation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenes with emulated network predictions.
    Synth {
        /// Output directory for scene_NNNN.json and predictions_NNNN.json.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON config overriding scene count, clutter and noise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base RNG seed; scene i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Number of scenes, overriding the config value.
        #[arg(long)]
        scenes: Option<usize>,
    },
    /// Estimate per-ROI ACFs from a predictions file or directory.
    Estimate {
        /// A predictions JSON file or a directory of predictions_*.json.
        #[arg(long)]
        input: PathBuf,
        /// Output estimates file (file input) or directory (directory input).
        #[arg(long)]
        out: PathBuf,
        /// Axis estimator to use.
        #[arg(long, value_enum, default_value_t = AxisMethodArg::Endpoints)]
        axis_method: AxisMethodArg,
        /// Optional JSON config for mode finding and RANSAC parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// RANSAC seed for the scatter-line estimator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Group estimated parts into object hypotheses.
    Associate {
        /// Predictions file carrying the affinity fields.
        #[arg(long)]
        predictions: PathBuf,
        /// Estimates file from the estimate step.
        #[arg(long)]
        estimates: PathBuf,
        /// Output hypotheses JSON.
        #[arg(long)]
        out: PathBuf,
        /// Minimum link score (cosine similarity) to keep a candidate.
        #[arg(long, default_value_t = 0.2)]
        min_score: f64,
        /// Mask weight threshold for the affinity average.
        #[arg(long, default_value_t = 0.5)]
        mask_threshold: f64,
    },
    /// Compose grasp poses and pour/stir trajectories from hypotheses.
    Manip {
        /// Hypotheses JSON from the associate step.
        #[arg(long)]
        input: PathBuf,
        /// Output manipulation plan JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score estimates against scene ground truth (mAP).
    Evaluate {
        /// Directory of scene_*.json files.
        #[arg(long)]
        scenes: PathBuf,
        /// Directory of estimates_*.json files with matching indices.
        #[arg(long)]
        estimates: PathBuf,
        /// Output report JSON.
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV with the AP sweep over angular thresholds.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Angular tolerance in degrees.
        #[arg(long, default_value_t = 10.0)]
        max_angle: f64,
        /// Translation tolerance in meters.
        #[arg(long, default_value_t = 0.02)]
        max_translation: f64,
    },
    /// Print loss values and analytic-vs-numeric gradient residuals.
    Losscheck {
        /// Predictions file to check.
        #[arg(long)]
        input: PathBuf,
        /// Relative gradient residual tolerance.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

/// Errors mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 1: an input path does not exist.
    MissingInput(String),
    /// Exit code 2: unparseable or invalid configuration/input content.
    InvalidConfig(String),
    /// Exit code 1: a runtime failure after inputs were read.
    Failure(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::MissingInput(m) => write!(f, "missing input: {m}"),
            CliError::InvalidConfig(m) => write!(f, "invalid config: {m}"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { out, config, seed, jobs, scenes } => {
            commands::synth(&out, config.as_deref(), seed, jobs, scenes)
        }
        Command::Estimate { input, out, axis_method, config, seed, jobs } => {
            commands::estimate(&input, &out, axis_method.into(), config.as_deref(), seed, jobs)
        }
        Command::Associate { predictions, estimates, out, min_score, mask_threshold } => {
            commands::associate(&predictions, &estimates, &out, min_score, mask_threshold)
        }
        Command::Manip { input, out } => commands::manip(&input, &out),
        Command::Evaluate { scenes, estimates, out, csv, max_angle, max_translation } => {
            commands::evaluate(&scenes, &estimates, &out, csv.as_deref(), max_angle, max_translation)
        }
        Command::Losscheck { input, tol } => commands::losscheck(&input, tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::MissingInput(_) | CliError::Failure(_) => ExitCode::from(1),
                CliError::InvalidConfig(_) => ExitCode::from(2),
            }
        }
    }
}
