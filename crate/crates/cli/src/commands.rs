//! Subcommand implementations.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use acf_core::acf::{Acf, PartClass, PartInstance};
use acf_core::error::AcfError;
use acf_core::eval::{match_and_score, GroundTruthPart, ThresholdSpec};
use acf_core::io::{
    self, EstimatedPartDto, EstimatesFile, EvalReportFile, FailureDto, GraspDto,
    HypothesesFile, HypothesisDto, ManipFile, PredictionsFile, SceneFile, TrajectoryDto,
    FORMAT_VERSION,
};
use acf_core::losses::{
    loss_axis, loss_axis_grad, loss_direction, loss_direction_grad, loss_endpoint,
    loss_endpoint_grad, loss_inner, loss_inner_grad, loss_keypoint, loss_keypoint_grad,
    loss_label, loss_label_grad, loss_paf, loss_paf_grad, loss_vector, loss_vector_grad,
    numeric_gradient, AxisGroundTruth, EndpointOffsetField, InnerLossMode, MaskWeights,
    OffsetField, PafPrediction,
};
use acf_core::manipulation::{grasp_bottle, grasp_mug, grasp_spoon, pour_trajectory, stir_trajectory, PourParams};
use acf_core::pipeline::{associate_bundle, estimate_bundle, AxisMethod, EstimatedPart};
use acf_core::synthetic::{emulate_predictions, generate_scene, random_scene_spec};
use nalgebra::{Vector2, Vector3};

use crate::config::{load_config, EstimateFileConfig, SynthConfig};
use crate::CliError;

fn require_exists(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.exists() {
        return Err(CliError::MissingInput(format!("{what} {}", path.display())));
    }
    Ok(())
}

fn read_input<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    require_exists(path, what)?;
    io::read_json(path).map_err(|e| CliError::InvalidConfig(e.to_string()))
}

fn write_output<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    io::write_json(path, value).map_err(|e| CliError::Failure(e.to_string()))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Failure(format!("cannot build thread pool: {e}")))
}

/// Distinct seed stream for prediction emulation so it never aliases the
/// scene-layout stream.
fn emulation_seed(scene_seed: u64) -> u64 {
    scene_seed ^ 0x9E37_79B9_7F4A_7C15
}

pub fn synth(
    out: &Path,
    config: Option<&Path>,
    seed: u64,
    jobs: usize,
    scenes_override: Option<usize>,
) -> Result<(), CliError> {
    let mut cfg: SynthConfig = load_config(config)?;
    if let Some(n) = scenes_override {
        cfg.scene_count = n;
    }
    if cfg.scene_count == 0 || cfg.min_objects == 0 || cfg.max_objects < cfg.min_objects {
        return Err(CliError::InvalidConfig(
            "need scenes >= 1 and 1 <= min_objects <= max_objects".into(),
        ));
    }
    let noise = cfg.noise.to_model();
    noise.validate().map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", out.display())))?;
    let pool = thread_pool(jobs)?;
    pool.install(|| {
        (0..cfg.scene_count).into_par_iter().try_for_each(|i| -> Result<(), CliError> {
            let scene_seed = seed.wrapping_add(i as u64);
            let spec = random_scene_spec(scene_seed, cfg.min_objects, cfg.max_objects);
            let scene =
                generate_scene(&spec).map_err(|e| CliError::Failure(e.to_string()))?;
            let bundle =
                emulate_predictions(&scene, &noise, emulation_seed(scene_seed), cfg.seed_grid_n)
                    .map_err(|e| CliError::Failure(e.to_string()))?;
            write_output(&out.join(format!("scene_{i:04}.json")), &io::scene_to_file(&scene))?;
            write_output(
                &out.join(format!("predictions_{i:04}.json")),
                &io::predictions_to_file(&bundle),
            )
        })
    })?;
    println!("wrote {} scenes to {}", cfg.scene_count, out.display());
    Ok(())
}

fn estimates_from_bundle_file(
    file: &PredictionsFile,
    config: &acf_core::pipeline::EstimationConfig,
) -> Result<EstimatesFile, CliError> {
    let bundle =
        io::predictions_from_file(file).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let (parts, failures) = estimate_bundle(&bundle, config);
    Ok(EstimatesFile {
        format_version: FORMAT_VERSION,
        parts: parts
            .iter()
            .map(|p| EstimatedPartDto {
                roi_index: p.roi_index,
                part_class: p.part_class,
                acf: (&p.acf).into(),
                score: p.score,
            })
            .collect(),
        failures: failures
            .into_iter()
            .map(|f| FailureDto { roi_index: f.roi_index, error: f.error })
            .collect(),
    })
}

pub fn estimate(
    input: &Path,
    out: &Path,
    axis_method: AxisMethod,
    config: Option<&Path>,
    seed: u64,
    jobs: usize,
) -> Result<(), CliError> {
    require_exists(input, "predictions")?;
    let cfg: EstimateFileConfig = load_config(config)?;
    let est_config = cfg.to_estimation_config(axis_method, seed)?;
    if input.is_file() {
        let file: PredictionsFile = read_input(input, "predictions")?;
        let estimates = estimates_from_bundle_file(&file, &est_config)?;
        return write_output(out, &estimates);
    }
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| CliError::Failure(format!("cannot list {}: {e}", input.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("predictions_") && n.ends_with(".json"))
        })
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(CliError::MissingInput(format!(
            "no predictions_*.json in {}",
            input.display()
        )));
    }
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", out.display())))?;
    let pool = thread_pool(jobs)?;
    pool.install(|| {
        inputs.par_iter().try_for_each(|path| -> Result<(), CliError> {
            let file: PredictionsFile = read_input(path, "predictions")?;
            let estimates = estimates_from_bundle_file(&file, &est_config)?;
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap()
                .replacen("predictions_", "estimates_", 1);
            write_output(&out.join(name), &estimates)
        })
    })?;
    println!("estimated {} scenes into {}", inputs.len(), out.display());
    Ok(())
}

fn estimated_parts_from_file(file: &EstimatesFile) -> Result<Vec<EstimatedPart>, CliError> {
    file.parts
        .iter()
        .map(|p| {
            Ok(EstimatedPart {
                roi_index: p.roi_index,
                part_class: p.part_class,
                acf: p.acf.to_acf().map_err(|e| CliError::InvalidConfig(e.to_string()))?,
                score: p.score,
            })
        })
        .collect()
}

pub fn associate(
    predictions: &Path,
    estimates: &Path,
    out: &Path,
    min_score: f64,
    mask_threshold: f64,
) -> Result<(), CliError> {
    let pred_file: PredictionsFile = read_input(predictions, "predictions")?;
    let est_file: EstimatesFile = read_input(estimates, "estimates")?;
    let bundle = io::predictions_from_file(&pred_file)
        .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let parts = estimated_parts_from_file(&est_file)?;
    for p in &parts {
        if p.roi_index >= bundle.rois.len() {
            return Err(CliError::InvalidConfig(format!(
                "estimate references ROI {} but predictions has {}",
                p.roi_index,
                bundle.rois.len()
            )));
        }
    }
    let hypotheses = associate_bundle(&bundle, &parts, mask_threshold, min_score)
        .map_err(|e| CliError::Failure(e.to_string()))?;
    write_output(
        out,
        &HypothesesFile {
            format_version: FORMAT_VERSION,
            parts: est_file.parts.clone(),
            hypotheses: hypotheses
                .into_iter()
                .map(|h| HypothesisDto { parts: h.parts, object_class: h.object_class })
                .collect(),
        },
    )
}

struct HypothesisParts {
    container: Option<Acf>,
    handle: Option<Acf>,
    stir: Option<Acf>,
    scoop: Option<Acf>,
}

fn collect_parts(
    hypothesis: &HypothesisDto,
    parts: &[EstimatedPartDto],
) -> Result<HypothesisParts, CliError> {
    let mut h = HypothesisParts { container: None, handle: None, stir: None, scoop: None };
    for &idx in &hypothesis.parts {
        let part = parts
            .get(idx)
            .ok_or_else(|| CliError::InvalidConfig(format!("hypothesis references part {idx}")))?;
        let acf = part.acf.to_acf().map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        let slot = match part.part_class {
            PartClass::Container => &mut h.container,
            PartClass::Handle => &mut h.handle,
            PartClass::Stir => &mut h.stir,
            PartClass::Scoop => &mut h.scoop,
        };
        *slot = Some(acf);
    }
    Ok(h)
}

/// A horizontal approach direction: the first camera-frame basis vector not
/// parallel to the part axis, projected orthogonal to it.
fn default_approach(axis: &Vector3<f64>) -> Vector3<f64> {
    for candidate in [Vector3::x(), Vector3::y(), Vector3::z()] {
        let projected = candidate - candidate.dot(axis) * axis;
        if projected.norm() > 0.1 {
            return projected.normalize();
        }
    }
    unreachable!("axis cannot be parallel to all three basis vectors")
}

pub fn manip(input: &Path, out: &Path) -> Result<(), CliError> {
    let file: HypothesesFile = read_input(input, "hypotheses")?;
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::InvalidConfig(format!(
            "hypotheses format_version {}",
            file.format_version
        )));
    }
    let mut grasps = Vec::new();
    let mut trajectories = Vec::new();
    let mut containers: Vec<(usize, Acf)> = Vec::new();
    let mut stirrers: Vec<(usize, Acf, Acf)> = Vec::new();

    for (index, hypothesis) in file.hypotheses.iter().enumerate() {
        let parts = collect_parts(hypothesis, &file.parts)?;
        match (&parts.container, &parts.handle, &parts.stir) {
            (Some(container), Some(handle), _) => {
                match grasp_mug(handle, container) {
                    Ok(pose) => grasps.push(GraspDto::new(index, "handle_container", &pose)),
                    Err(e) => eprintln!("hypothesis {index}: no mug grasp: {e}"),
                }
                containers.push((index, *container));
            }
            (Some(container), None, _) => {
                let approach = default_approach(&container.axis());
                match grasp_bottle(container, approach) {
                    Ok(pose) => grasps.push(GraspDto::new(index, "container", &pose)),
                    Err(e) => eprintln!("hypothesis {index}: no container grasp: {e}"),
                }
                containers.push((index, *container));
            }
            (None, _, Some(stir)) => {
                let approach = default_approach(&stir.axis());
                match grasp_spoon(stir, approach) {
                    Ok(pose) => grasps.push(GraspDto::new(index, "stir", &pose)),
                    Err(e) => eprintln!("hypothesis {index}: no stir grasp: {e}"),
                }
                if let Some(scoop) = &parts.scoop {
                    stirrers.push((index, *stir, *scoop));
                }
            }
            _ => {}
        }
    }

    // Pour between the first two containers; the target's own axis serves as
    // the up reference since containers rest upright.
    if containers.len() >= 2 {
        let (src_idx, source) = containers[0];
        let (tgt_idx, target) = containers[1];
        match pour_trajectory(&source, &target, &PourParams::default(), target.axis()) {
            Ok(t) => trajectories.push(TrajectoryDto::new("pour", src_idx, tgt_idx, &t)),
            Err(e) => eprintln!("pour {src_idx} -> {tgt_idx} skipped: {e}"),
        }
    }
    if let (Some(&(stir_idx, ref stir, ref scoop)), Some(&(tgt_idx, ref container))) =
        (stirrers.first(), containers.first())
    {
        match stir_trajectory(stir, scoop, container, 0.02, 10) {
            Ok(t) => trajectories.push(TrajectoryDto::new("stir", stir_idx, tgt_idx, &t)),
            Err(e) => eprintln!("stir {stir_idx} in {tgt_idx} skipped: {e}"),
        }
    }

    write_output(out, &ManipFile { format_version: FORMAT_VERSION, grasps, trajectories })
}

fn indexed_files(dir: &Path, prefix: &str) -> Result<Vec<(String, PathBuf)>, CliError> {
    require_exists(dir, "directory")?;
    let mut files: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Failure(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?;
            let index = name.strip_prefix(prefix)?.strip_suffix(".json")?;
            Some((index.to_string(), p.clone()))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn evaluate(
    scenes: &Path,
    estimates: &Path,
    out: &Path,
    csv: Option<&Path>,
    max_angle: f64,
    max_translation: f64,
) -> Result<(), CliError> {
    let spec = ThresholdSpec::new(max_angle, max_translation)
        .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let scene_files = indexed_files(scenes, "scene_")?;
    if scene_files.is_empty() {
        return Err(CliError::MissingInput(format!("no scene_*.json in {}", scenes.display())));
    }

    // Per-scene prediction/ground-truth pairs, matched by file index.
    let mut pairs: Vec<(Vec<PartInstance>, Vec<GroundTruthPart>)> = Vec::new();
    for (index, scene_path) in &scene_files {
        let est_path = estimates.join(format!("estimates_{index}.json"));
        require_exists(&est_path, "estimates")?;
        let scene_file: SceneFile = read_input(scene_path, "scene")?;
        let est_file: EstimatesFile = read_input(&est_path, "estimates")?;
        let scene = acf_core::io::scene_from_file(&scene_file)
            .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        let gt: Vec<GroundTruthPart> = scene
            .parts
            .iter()
            .map(|p| GroundTruthPart { part_class: p.part_class, acf: p.acf })
            .collect();
        let preds: Vec<PartInstance> = est_file
            .parts
            .iter()
            .map(|p| {
                let acf = p.acf.to_acf().map_err(|e| CliError::InvalidConfig(e.to_string()))?;
                PartInstance::new(p.part_class, acf, p.score)
                    .map_err(|e| CliError::InvalidConfig(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        pairs.push((preds, gt));
    }

    let (per_class, mean_ap) = averaged_ap(&pairs, spec);
    write_output(
        out,
        &EvalReportFile {
            format_version: FORMAT_VERSION,
            thresholds: spec,
            scene_count: pairs.len(),
            per_class,
            mean_ap,
        },
    )?;

    if let Some(csv_path) = csv {
        let mut text = String::from("threshold_deg,threshold_cm,part_class,AP\n");
        for angle in [5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
            let spec = ThresholdSpec::new(angle, max_translation).unwrap();
            let (per_class, mean_ap) = averaged_ap(&pairs, spec);
            for (class, ap) in &per_class {
                text.push_str(&format!(
                    "{angle},{},{},{ap:.4}\n",
                    max_translation * 100.0,
                    format!("{class:?}").to_lowercase()
                ));
            }
            text.push_str(&format!("{angle},{},mean,{mean_ap:.4}\n", max_translation * 100.0));
        }
        if let Some(parent) = csv_path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::Failure(e.to_string()))?;
            }
        }
        std::fs::write(csv_path, text)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", csv_path.display())))?;
    }
    println!("mean AP {mean_ap:.2} over {} scenes", pairs.len());
    Ok(())
}

/// Macro-average of per-scene AP values per class, then over classes.
fn averaged_ap(
    pairs: &[(Vec<PartInstance>, Vec<GroundTruthPart>)],
    spec: ThresholdSpec,
) -> (Vec<(PartClass, f64)>, f64) {
    let mut sums: Vec<(PartClass, f64, usize)> =
        PartClass::ALL.iter().map(|&c| (c, 0.0, 0usize)).collect();
    for (preds, gt) in pairs {
        let report = match_and_score(preds, gt, spec);
        for (class, ap) in &report.per_class {
            let slot = sums.iter_mut().find(|(c, _, _)| c == class).unwrap();
            slot.1 += ap;
            slot.2 += 1;
        }
    }
    let per_class: Vec<(PartClass, f64)> = sums
        .into_iter()
        .filter(|(_, _, n)| *n > 0)
        .map(|(c, sum, n)| (c, sum / n as f64))
        .collect();
    let mean_ap = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|(_, ap)| ap).sum::<f64>() / per_class.len() as f64
    };
    (per_class, mean_ap)
}

struct LossRow {
    name: &'static str,
    value_sum: f64,
    count: usize,
    max_residual: f64,
}

impl LossRow {
    fn new(name: &'static str) -> Self {
        Self { name, value_sum: 0.0, count: 0, max_residual: 0.0 }
    }

    fn record(&mut self, value: f64, analytic: &[f64], numeric: &[f64]) {
        self.value_sum += value;
        self.count += 1;
        for (&a, &n) in analytic.iter().zip(numeric) {
            let residual = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            self.max_residual = self.max_residual.max(residual);
        }
    }
}

fn flat3(v: &[Vector3<f64>]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn unflat3(x: &[f64]) -> Vec<Vector3<f64>> {
    x.chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect()
}

fn flat_pairs(v: &[[Vector3<f64>; 2]]) -> Vec<f64> {
    v.iter().flat_map(|[a, b]| [a.x, a.y, a.z, b.x, b.y, b.z]).collect()
}

fn unflat_pairs(x: &[f64]) -> Vec<[Vector3<f64>; 2]> {
    x.chunks(6)
        .map(|c| [Vector3::new(c[0], c[1], c[2]), Vector3::new(c[3], c[4], c[5])])
        .collect()
}

const FD_STEP: f64 = 1e-5;

pub fn losscheck(input: &Path, tol: f64) -> Result<(), CliError> {
    let file: PredictionsFile = read_input(input, "predictions")?;
    let bundle = io::predictions_from_file(&file)
        .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let fail = |e: AcfError| CliError::Failure(e.to_string());

    let mut rows = [
        LossRow::new("keypoint"),
        LossRow::new("endpoint"),
        LossRow::new("axis"),
        LossRow::new("direction"),
        LossRow::new("paf"),
        LossRow::new("vector"),
        LossRow::new("inner"),
        LossRow::new("label"),
    ];

    for roi in &bundle.rois {
        let mask: &MaskWeights = &roi.mask;
        if mask.0.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let kp = roi.gt_acf.keypoint();
        let axis = roi.gt_acf.axis();
        let half = roi.axis_half_length;
        let endpoints = [kp - half * axis, kp + half * axis];
        let mut kp_star = Vec::new();
        let mut ep_star = Vec::new();
        for seed in &roi.seeds.seeds {
            let p = seed.point3d.unwrap_or(kp);
            kp_star.push(kp - p);
            ep_star.push([endpoints[0] - p, endpoints[1] - p]);
        }
        let axis_truth = AxisGroundTruth {
            n_star: axis,
            endpoint_offsets_star: ep_star.clone(),
            keypoint_offsets_star: kp_star.clone(),
        };

        let value = loss_keypoint(&roi.keypoint_offsets, &kp_star, mask).map_err(fail)?;
        let analytic =
            flat3(&loss_keypoint_grad(&roi.keypoint_offsets, &kp_star, mask).map_err(fail)?);
        let numeric = numeric_gradient(
            |x| loss_keypoint(&OffsetField(unflat3(x)), &kp_star, mask).unwrap(),
            &flat3(&roi.keypoint_offsets.0),
            FD_STEP,
        )
        .map_err(fail)?;
        rows[0].record(value, &analytic, &numeric);

        let pred_ep = EndpointOffsetField(roi.endpoint_offsets.clone());
        let value = loss_endpoint(&pred_ep, &ep_star, mask).map_err(fail)?;
        let analytic = flat_pairs(&loss_endpoint_grad(&pred_ep, &ep_star, mask).map_err(fail)?);
        let numeric = numeric_gradient(
            |x| loss_endpoint(&EndpointOffsetField(unflat_pairs(x)), &ep_star, mask).unwrap(),
            &flat_pairs(&pred_ep.0),
            FD_STEP,
        )
        .map_err(fail)?;
        rows[1].record(value, &analytic, &numeric);

        let value = loss_axis(&pred_ep, &axis_truth, mask).map_err(fail)?;
        let analytic = flat_pairs(&loss_axis_grad(&pred_ep, &axis_truth, mask).map_err(fail)?);
        let numeric = numeric_gradient(
            |x| loss_axis(&EndpointOffsetField(unflat_pairs(x)), &axis_truth, mask).unwrap(),
            &flat_pairs(&pred_ep.0),
            FD_STEP,
        )
        .map_err(fail)?;
        rows[2].record(value, &analytic, &numeric);

        let value = loss_direction(&pred_ep, &axis_truth, mask).map_err(fail)?;
        let analytic =
            flat_pairs(&loss_direction_grad(&pred_ep, &axis_truth, mask).map_err(fail)?);
        let numeric = numeric_gradient(
            |x| loss_direction(&EndpointOffsetField(unflat_pairs(x)), &axis_truth, mask).unwrap(),
            &flat_pairs(&pred_ep.0),
            FD_STEP,
        )
        .map_err(fail)?;
        rows[3].record(value, &analytic, &numeric);

        if let Some(target_star) = roi.paf_target {
            let pred = PafPrediction { vectors: roi.paf_vectors.clone(), target_star };
            let value = loss_paf(&pred, mask).map_err(fail)?;
            let analytic: Vec<f64> = loss_paf_grad(&pred, mask)
                .map_err(fail)?
                .iter()
                .flat_map(|v| [v.x, v.y])
                .collect();
            let x: Vec<f64> = pred.vectors.iter().flat_map(|v| [v.x, v.y]).collect();
            let numeric = numeric_gradient(
                |x| {
                    let vectors = x.chunks(2).map(|c| Vector2::new(c[0], c[1])).collect();
                    loss_paf(&PafPrediction { vectors, target_star }, mask).unwrap()
                },
                &x,
                FD_STEP,
            )
            .map_err(fail)?;
            rows[4].record(value, &analytic, &numeric);
        }

        let value = loss_vector(&roi.axis_vectors, axis, mask).map_err(fail)?;
        let analytic = flat3(&loss_vector_grad(&roi.axis_vectors, axis, mask).map_err(fail)?);
        let numeric = numeric_gradient(
            |x| loss_vector(&unflat3(x), axis, mask).unwrap(),
            &flat3(&roi.axis_vectors),
            FD_STEP,
        )
        .map_err(fail)?;
        rows[5].record(value, &analytic, &numeric);

        let mode = InnerLossMode::Signed;
        let value = loss_inner(&roi.scatter_offsets, axis, mask, mode).map_err(fail)?;
        let analytic =
            flat3(&loss_inner_grad(&roi.scatter_offsets, axis, mask, mode).map_err(fail)?);
        let numeric = numeric_gradient(
            |x| loss_inner(&OffsetField(unflat3(x)), axis, mask, mode).unwrap(),
            &flat3(&roi.scatter_offsets.0),
            FD_STEP,
        )
        .map_err(fail)?;
        rows[6].record(value, &analytic, &numeric);

        let value = loss_label(&roi.labels, mask).map_err(fail)?;
        let analytic = loss_label_grad(&roi.labels, mask).map_err(fail)?;
        let numeric = numeric_gradient(
            |x| {
                let probe = acf_core::losses::LabelPrediction {
                    logits: x.to_vec(),
                    labels_star: roi.labels.labels_star.clone(),
                };
                loss_label(&probe, mask).unwrap()
            },
            &roi.labels.logits,
            FD_STEP,
        )
        .map_err(fail)?;
        rows[7].record(value, &analytic, &numeric);
    }

    println!("{:<12} {:>6} {:>16} {:>16}  status", "loss", "rois", "mean_value", "max_grad_resid");
    let mut ok = true;
    for row in &rows {
        let mean = if row.count > 0 { row.value_sum / row.count as f64 } else { 0.0 };
        let pass = row.max_residual <= tol;
        ok &= pass;
        println!(
            "{:<12} {:>6} {:>16.6e} {:>16.6e}  {}",
            row.name,
            row.count,
            mean,
            row.max_residual,
            if pass { "ok" } else { "FAIL" }
        );
    }
    if !ok {
        return Err(CliError::Failure(format!("gradient residual exceeded {tol}")));
    }
    Ok(())
}
