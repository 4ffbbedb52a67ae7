//! Python bindings for the ACF estimation library.
//!
//! The module mirrors the Rust pipeline: generate a synthetic scene, emulate
//! per-seed network predictions, estimate per-ROI ACFs, group parts into
//! objects, compose grasps and trajectories, and score estimates against
//! ground truth. Vectors cross the boundary as plain `[x, y, z]` lists and
//! frames as row-major 3x3 nested lists.

use nalgebra::{Matrix3, Vector3};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use acf_core::acf::{actions_of, compatible_pairs, parts_of, ObjectClass, PartClass, PartInstance};
use acf_core::estimation::{mean_shift_mode, MeanShiftConfig, RansacConfig, VoterSet};
use acf_core::eval::{match_and_score, GroundTruthPart, ThresholdSpec};
use acf_core::losses::{
    loss_keypoint, loss_keypoint_grad, loss_label, loss_label_grad, loss_vector,
    loss_vector_grad, LabelPrediction, MaskWeights, OffsetField,
};
use acf_core::manipulation::{self, PourParams};
use acf_core::pipeline::{associate_bundle, estimate_bundle, AxisMethod, EstimationConfig};
use acf_core::synthetic::{
    emulate_predictions, generate_scene, random_scene_spec, NoiseModel, PredictionBundle, Scene,
};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn list3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

fn part_class_from_str(name: &str) -> PyResult<PartClass> {
    match name {
        "container" => Ok(PartClass::Container),
        "handle" => Ok(PartClass::Handle),
        "stir" => Ok(PartClass::Stir),
        "scoop" => Ok(PartClass::Scoop),
        other => Err(PyValueError::new_err(format!("unknown part class {other:?}"))),
    }
}

fn part_class_name(class: PartClass) -> &'static str {
    match class {
        PartClass::Container => "container",
        PartClass::Handle => "handle",
        PartClass::Stir => "stir",
        PartClass::Scoop => "scoop",
    }
}

fn object_class_from_str(name: &str) -> PyResult<ObjectClass> {
    match name {
        "bottle" => Ok(ObjectClass::Bottle),
        "mug" => Ok(ObjectClass::Mug),
        "bowl" => Ok(ObjectClass::Bowl),
        "spoon" => Ok(ObjectClass::Spoon),
        "spatula" => Ok(ObjectClass::Spatula),
        "hammer" => Ok(ObjectClass::Hammer),
        other => Err(PyValueError::new_err(format!("unknown object class {other:?}"))),
    }
}

fn object_class_name(class: ObjectClass) -> &'static str {
    match class {
        ObjectClass::Bottle => "bottle",
        ObjectClass::Mug => "mug",
        ObjectClass::Bowl => "bowl",
        ObjectClass::Spoon => "spoon",
        ObjectClass::Spatula => "spatula",
        ObjectClass::Hammer => "hammer",
    }
}

fn axis_method_from_str(name: &str) -> PyResult<AxisMethod> {
    match name {
        "endpoints" => Ok(AxisMethod::Endpoints),
        "vector" => Ok(AxisMethod::Vector),
        "scatter_line" => Ok(AxisMethod::ScatterLine),
        other => Err(PyValueError::new_err(format!(
            "unknown axis method {other:?} (expected endpoints, vector or scatter_line)"
        ))),
    }
}

/// A 3D keypoint with a directed unit axis in the camera frame.
#[pyclass(name = "Acf", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAcf {
    inner: acf_core::Acf,
}

#[pymethods]
impl PyAcf {
    #[new]
    fn new(keypoint: [f64; 3], axis: [f64; 3]) -> PyResult<Self> {
        Ok(Self { inner: acf_core::Acf::new(vec3(keypoint), vec3(axis)).map_err(err)? })
    }

    /// Builds an ACF from an arbitrary nonzero direction, normalizing it.
    #[staticmethod]
    fn from_direction(keypoint: [f64; 3], direction: [f64; 3]) -> PyResult<Self> {
        Ok(Self {
            inner: acf_core::Acf::from_direction(vec3(keypoint), vec3(direction)).map_err(err)?,
        })
    }

    #[getter]
    fn keypoint(&self) -> [f64; 3] {
        list3(&self.inner.keypoint())
    }

    #[getter]
    fn axis(&self) -> [f64; 3] {
        list3(&self.inner.axis())
    }

    /// Angular distance to another ACF's axis, in degrees.
    fn angular_error_deg(&self, other: &PyAcf) -> PyResult<f64> {
        acf_core::eval::angular_error(self.inner.axis(), other.inner.axis()).map_err(err)
    }

    /// Euclidean distance to another ACF's keypoint, in meters.
    fn translation_error(&self, other: &PyAcf) -> f64 {
        acf_core::eval::translation_error(self.inner.keypoint(), other.inner.keypoint())
    }

    fn __repr__(&self) -> String {
        let k = self.inner.keypoint();
        let a = self.inner.axis();
        format!(
            "Acf(keypoint=[{:.6}, {:.6}, {:.6}], axis=[{:.6}, {:.6}, {:.6}])",
            k.x, k.y, k.z, a.x, a.y, a.z
        )
    }
}

/// One ground-truth part of a synthetic scene.
#[pyclass(name = "ScenePart", frozen)]
struct PyScenePart {
    #[pyo3(get)]
    object_index: usize,
    #[pyo3(get)]
    part_class: String,
    acf: PyAcf,
    #[pyo3(get)]
    assoc_target: Option<usize>,
}

#[pymethods]
impl PyScenePart {
    #[getter]
    fn acf(&self) -> PyAcf {
        self.acf.clone()
    }

    fn __repr__(&self) -> String {
        format!("ScenePart(object_index={}, part_class={:?})", self.object_index, self.part_class)
    }
}

/// A rendered synthetic scene with per-part ground truth.
#[pyclass(name = "Scene", frozen)]
struct PyScene {
    inner: Scene,
}

#[pymethods]
impl PyScene {
    /// Object class names in scene order.
    #[getter]
    fn object_classes(&self) -> Vec<String> {
        self.inner.spec.objects.iter().map(|o| object_class_name(o.class).to_string()).collect()
    }

    /// Ground-truth parts with camera-frame ACFs.
    #[getter]
    fn parts(&self) -> Vec<PyScenePart> {
        self.inner
            .parts
            .iter()
            .map(|p| PyScenePart {
                object_index: p.object_index,
                part_class: part_class_name(p.part_class).to_string(),
                acf: PyAcf { inner: p.acf },
                assoc_target: p.assoc_target,
            })
            .collect()
    }

    /// Depth image as (height, width, row-major pixel list).
    fn depth(&self) -> (usize, usize, Vec<f64>) {
        let d = &self.inner.depth;
        (d.height, d.width, d.values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Scene(objects={}, parts={})",
            self.inner.spec.objects.len(),
            self.inner.parts.len()
        )
    }
}

/// Emulated per-ROI network predictions for one scene.
#[pyclass(name = "Bundle", frozen)]
struct PyBundle {
    inner: PredictionBundle,
}

#[pymethods]
impl PyBundle {
    #[getter]
    fn roi_count(&self) -> usize {
        self.inner.rois.len()
    }

    /// Part class name of each ROI.
    #[getter]
    fn roi_classes(&self) -> Vec<String> {
        self.inner.rois.iter().map(|r| part_class_name(r.part_class).to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Bundle(rois={})", self.inner.rois.len())
    }
}

/// One successfully estimated part.
#[pyclass(name = "EstimatedPart", frozen)]
struct PyEstimatedPart {
    #[pyo3(get)]
    roi_index: usize,
    #[pyo3(get)]
    part_class: String,
    acf: PyAcf,
    #[pyo3(get)]
    score: f64,
}

#[pymethods]
impl PyEstimatedPart {
    #[getter]
    fn acf(&self) -> PyAcf {
        self.acf.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "EstimatedPart(roi_index={}, part_class={:?}, score={:.3})",
            self.roi_index, self.part_class, self.score
        )
    }
}

/// A grouped set of estimated parts, labeled with an object class when the
/// part set pins down exactly one taxonomy row.
#[pyclass(name = "ObjectHypothesis", frozen)]
struct PyObjectHypothesis {
    #[pyo3(get)]
    parts: Vec<usize>,
    #[pyo3(get)]
    object_class: Option<String>,
}

#[pymethods]
impl PyObjectHypothesis {
    fn __repr__(&self) -> String {
        format!(
            "ObjectHypothesis(parts={:?}, object_class={:?})",
            self.parts, self.object_class
        )
    }
}

/// An end-effector pose: position plus a right-handed orthonormal frame with
/// columns red/green/blue.
#[pyclass(name = "GraspPose", frozen)]
struct PyGraspPose {
    inner: manipulation::GraspPose,
}

#[pymethods]
impl PyGraspPose {
    #[getter]
    fn position(&self) -> [f64; 3] {
        list3(&self.inner.position)
    }

    #[getter]
    fn red(&self) -> [f64; 3] {
        list3(&self.inner.red())
    }

    #[getter]
    fn green(&self) -> [f64; 3] {
        list3(&self.inner.green())
    }

    #[getter]
    fn blue(&self) -> [f64; 3] {
        list3(&self.inner.blue())
    }

    /// Row-major 3x3 frame matrix, columns ordered red/green/blue.
    #[getter]
    fn axes(&self) -> [[f64; 3]; 3] {
        rows(&self.inner.axes)
    }
}

/// An ordered waypoint sequence; `phase_boundary` indexes the first waypoint
/// of the second motion phase.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    inner: manipulation::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn phase_boundary(&self) -> usize {
        self.inner.phase_boundary
    }

    /// Waypoints as (position, row-major 3x3 frame) tuples.
    #[getter]
    fn waypoints(&self) -> Vec<([f64; 3], [[f64; 3]; 3])> {
        self.inner
            .waypoints
            .iter()
            .map(|w| (list3(&w.position), rows(&w.frame)))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(waypoints={}, phase_boundary={})",
            self.inner.waypoints.len(),
            self.inner.phase_boundary
        )
    }
}

/// Generates a random tabletop scene: `count in [min_objects, max_objects]`
/// objects on a jittered 3x3 grid of slots, seen by the standard camera.
#[pyfunction]
#[pyo3(signature = (seed, min_objects=1, max_objects=4))]
fn random_scene(seed: u64, min_objects: usize, max_objects: usize) -> PyResult<PyScene> {
    if min_objects < 1 || max_objects < min_objects {
        return Err(PyValueError::new_err("need 1 <= min_objects <= max_objects"));
    }
    let spec = random_scene_spec(seed, min_objects, max_objects);
    Ok(PyScene { inner: generate_scene(&spec).map_err(err)? })
}

/// Emulates per-seed network predictions for a scene. All-zero noise
/// reproduces the ground truth exactly.
#[pyfunction]
#[pyo3(signature = (scene, seed=0, grid_n=10, offset_sigma=0.0, outlier_fraction=0.0,
                    outlier_box=0.0, paf_angle_sigma_deg=0.0, mask_flip_prob=0.0))]
#[allow(clippy::too_many_arguments)]
fn emulate(
    scene: &PyScene,
    seed: u64,
    grid_n: usize,
    offset_sigma: f64,
    outlier_fraction: f64,
    outlier_box: f64,
    paf_angle_sigma_deg: f64,
    mask_flip_prob: f64,
) -> PyResult<PyBundle> {
    let noise = NoiseModel {
        offset_sigma,
        outlier_fraction,
        outlier_box,
        paf_angle_sigma_deg,
        mask_flip_prob,
    };
    Ok(PyBundle { inner: emulate_predictions(&scene.inner, &noise, seed, grid_n).map_err(err)? })
}

/// Runs keypoint voting and the chosen axis estimator on every ROI. Returns
/// (estimated parts, failures) where failures are (roi_index, message) pairs.
#[pyfunction]
#[pyo3(signature = (bundle, axis_method="endpoints", seed=0, bandwidth=0.03,
                    mask_threshold=0.5))]
fn estimate(
    bundle: &PyBundle,
    axis_method: &str,
    seed: u64,
    bandwidth: f64,
    mask_threshold: f64,
) -> PyResult<(Vec<PyEstimatedPart>, Vec<(usize, String)>)> {
    if bandwidth <= 0.0 {
        return Err(PyValueError::new_err("bandwidth must be positive"));
    }
    let config = EstimationConfig {
        axis_method: axis_method_from_str(axis_method)?,
        mean_shift: MeanShiftConfig::with_bandwidth(bandwidth),
        ransac: RansacConfig { rng_seed: seed, ..RansacConfig::default() },
        mask_threshold,
    };
    let (parts, failures) = estimate_bundle(&bundle.inner, &config);
    let parts = parts
        .into_iter()
        .map(|p| PyEstimatedPart {
            roi_index: p.roi_index,
            part_class: part_class_name(p.part_class).to_string(),
            acf: PyAcf { inner: p.acf },
            score: p.score,
        })
        .collect();
    let failures = failures.into_iter().map(|f| (f.roi_index, f.error)).collect();
    Ok((parts, failures))
}

/// Groups estimated parts into object hypotheses using the bundle's affinity
/// fields. `parts` must come from `estimate` on the same bundle.
#[pyfunction]
#[pyo3(signature = (bundle, parts, mask_threshold=0.5, min_score=0.2))]
fn associate(
    bundle: &PyBundle,
    parts: Vec<PyRef<PyEstimatedPart>>,
    mask_threshold: f64,
    min_score: f64,
) -> PyResult<Vec<PyObjectHypothesis>> {
    let estimates: Vec<acf_core::pipeline::EstimatedPart> = parts
        .iter()
        .map(|p| {
            Ok(acf_core::pipeline::EstimatedPart {
                roi_index: p.roi_index,
                part_class: part_class_from_str(&p.part_class)?,
                acf: p.acf.inner,
                score: p.score,
            })
        })
        .collect::<PyResult<_>>()?;
    let hypotheses =
        associate_bundle(&bundle.inner, &estimates, mask_threshold, min_score).map_err(err)?;
    Ok(hypotheses
        .into_iter()
        .map(|h| PyObjectHypothesis {
            parts: h.parts,
            object_class: h.object_class.map(|c| object_class_name(c).to_string()),
        })
        .collect())
}

/// Scores estimated parts against a scene's ground truth. Returns a dict with
/// `mean_ap` (0..100) and `per_class` name -> AP.
#[pyfunction]
#[pyo3(signature = (scene, parts, max_angle_deg=10.0, max_translation=0.02))]
fn evaluate_scene(
    py: Python<'_>,
    scene: &PyScene,
    parts: Vec<PyRef<PyEstimatedPart>>,
    max_angle_deg: f64,
    max_translation: f64,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let spec = ThresholdSpec::new(max_angle_deg, max_translation).map_err(err)?;
    let predictions: Vec<PartInstance> = parts
        .iter()
        .map(|p| {
            PartInstance::new(part_class_from_str(&p.part_class)?, p.acf.inner, p.score)
                .map_err(err)
        })
        .collect::<PyResult<_>>()?;
    let ground_truth: Vec<GroundTruthPart> = scene
        .inner
        .parts
        .iter()
        .map(|p| GroundTruthPart { part_class: p.part_class, acf: p.acf })
        .collect();
    let report = match_and_score(&predictions, &ground_truth, spec);
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("mean_ap", report.mean_ap)?;
    let per_class = pyo3::types::PyDict::new(py);
    for (class, ap) in report.per_class {
        per_class.set_item(part_class_name(class), ap)?;
    }
    dict.set_item("per_class", per_class)?;
    Ok(dict.unbind())
}

/// Mug grasp from handle and container ACFs.
#[pyfunction]
fn grasp_mug(handle: &PyAcf, container: &PyAcf) -> PyResult<PyGraspPose> {
    Ok(PyGraspPose { inner: manipulation::grasp_mug(&handle.inner, &container.inner).map_err(err)? })
}

/// Bottle grasp at the container keypoint along an approach direction.
#[pyfunction]
fn grasp_bottle(container: &PyAcf, approach: [f64; 3]) -> PyResult<PyGraspPose> {
    Ok(PyGraspPose {
        inner: manipulation::grasp_bottle(&container.inner, vec3(approach)).map_err(err)?,
    })
}

/// Spoon grasp at the stir keypoint along an approach direction.
#[pyfunction]
fn grasp_spoon(stir: &PyAcf, approach: [f64; 3]) -> PyResult<PyGraspPose> {
    Ok(PyGraspPose { inner: manipulation::grasp_spoon(&stir.inner, vec3(approach)).map_err(err)? })
}

/// Pour motion: upright transport to the pre-pour point, then the tilt arc.
#[pyfunction]
#[pyo3(signature = (source, target, up=[0.0, 0.0, 1.0], height=0.15, radius=0.05, steps=10))]
fn pour_trajectory(
    source: &PyAcf,
    target: &PyAcf,
    up: [f64; 3],
    height: f64,
    radius: f64,
    steps: usize,
) -> PyResult<PyTrajectory> {
    let params = PourParams { height, radius, steps, ..PourParams::default() };
    Ok(PyTrajectory {
        inner: manipulation::pour_trajectory(&source.inner, &target.inner, &params, vec3(up))
            .map_err(err)?,
    })
}

/// Stir motion: descent to the container keypoint, then an oscillation of
/// amplitude `stroke`.
#[pyfunction]
#[pyo3(signature = (stir, scoop, container, stroke=0.02, steps=10))]
fn stir_trajectory(
    stir: &PyAcf,
    scoop: &PyAcf,
    container: &PyAcf,
    stroke: f64,
    steps: usize,
) -> PyResult<PyTrajectory> {
    Ok(PyTrajectory {
        inner: manipulation::stir_trajectory(
            &stir.inner,
            &scoop.inner,
            &container.inner,
            stroke,
            steps,
        )
        .map_err(err)?,
    })
}

/// Pour ratio `|delta_c1| / |delta_c2|` and whether it reaches 0.7.
#[pyfunction]
fn pour_success(delta_c1: f64, delta_c2: f64) -> PyResult<(f64, bool)> {
    manipulation::pour_success(delta_c1, delta_c2).map_err(err)
}

/// Stir success: positional error strictly below 2 cm.
#[pyfunction]
fn stir_success(positional_error: f64) -> bool {
    manipulation::stir_success(positional_error)
}

/// Angular distance between two directions, in degrees.
#[pyfunction]
fn angular_error_deg(n1: [f64; 3], n2: [f64; 3]) -> PyResult<f64> {
    acf_core::eval::angular_error(vec3(n1), vec3(n2)).map_err(err)
}

/// Gaussian-kernel Mean Shift over a raw point set: the mode whose basin
/// captured the most starting points.
#[pyfunction]
#[pyo3(signature = (points, bandwidth=0.03))]
fn mean_shift(points: Vec<[f64; 3]>, bandwidth: f64) -> PyResult<[f64; 3]> {
    let voters = VoterSet {
        points: points.iter().map(|&p| vec3(p)).collect(),
        source_seed: (0..points.len()).collect(),
    };
    let mode =
        mean_shift_mode(&voters, &MeanShiftConfig::with_bandwidth(bandwidth)).map_err(err)?;
    Ok(list3(&mode))
}

/// Keypoint voting loss: mask-weighted smooth-L1 between predicted and
/// ground-truth seed offsets. Returns (value, per-seed gradient).
#[pyfunction]
fn keypoint_loss(
    offsets: Vec<[f64; 3]>,
    offsets_star: Vec<[f64; 3]>,
    mask: Vec<f64>,
) -> PyResult<(f64, Vec<[f64; 3]>)> {
    let pred = OffsetField(offsets.iter().map(|&o| vec3(o)).collect());
    let star: Vec<Vector3<f64>> = offsets_star.iter().map(|&o| vec3(o)).collect();
    let weights = MaskWeights::new(mask).map_err(err)?;
    let value = loss_keypoint(&pred, &star, &weights).map_err(err)?;
    let grad = loss_keypoint_grad(&pred, &star, &weights).map_err(err)?;
    Ok((value, grad.iter().map(list3).collect()))
}

/// Direct axis-vector regression loss. Returns (value, per-seed gradient).
#[pyfunction]
fn vector_loss(
    vectors: Vec<[f64; 3]>,
    axis_star: [f64; 3],
    mask: Vec<f64>,
) -> PyResult<(f64, Vec<[f64; 3]>)> {
    let pred: Vec<Vector3<f64>> = vectors.iter().map(|&v| vec3(v)).collect();
    let weights = MaskWeights::new(mask).map_err(err)?;
    let value = loss_vector(&pred, vec3(axis_star), &weights).map_err(err)?;
    let grad = loss_vector_grad(&pred, vec3(axis_star), &weights).map_err(err)?;
    Ok((value, grad.iter().map(list3).collect()))
}

/// Binary cross-entropy endpoint-label loss. Returns (value, logit gradient).
#[pyfunction]
fn label_loss(
    logits: Vec<f64>,
    labels_star: Vec<u8>,
    mask: Vec<f64>,
) -> PyResult<(f64, Vec<f64>)> {
    let pred = LabelPrediction { logits, labels_star };
    let weights = MaskWeights::new(mask).map_err(err)?;
    let value = loss_label(&pred, &weights).map_err(err)?;
    let grad = loss_label_grad(&pred, &weights).map_err(err)?;
    Ok((value, grad))
}

/// Part classes supported by an object class.
#[pyfunction]
#[pyo3(name = "parts_of")]
fn py_parts_of(object_class: &str) -> PyResult<Vec<String>> {
    Ok(parts_of(object_class_from_str(object_class)?)
        .into_iter()
        .map(|p| part_class_name(p).to_string())
        .collect())
}

/// Actions supported by a part class.
#[pyfunction]
#[pyo3(name = "actions_of")]
fn py_actions_of(part_class: &str) -> PyResult<Vec<String>> {
    Ok(actions_of(part_class_from_str(part_class)?)
        .into_iter()
        .map(|a| {
            match a {
                acf_core::ActionClass::Grasp => "grasp",
                acf_core::ActionClass::Stir => "stir",
                acf_core::ActionClass::Scoop => "scoop",
                acf_core::ActionClass::Contain => "contain",
                acf_core::ActionClass::Pour => "pour",
            }
            .to_string()
        })
        .collect())
}

/// Ordered (dependent, anchor) part pairs that can compose into one object.
#[pyfunction]
#[pyo3(name = "compatible_pairs")]
fn py_compatible_pairs() -> Vec<(String, String)> {
    compatible_pairs()
        .into_iter()
        .map(|(a, b)| (part_class_name(a).to_string(), part_class_name(b).to_string()))
        .collect()
}

#[pymodule]
fn acf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAcf>()?;
    m.add_class::<PyScene>()?;
    m.add_class::<PyScenePart>()?;
    m.add_class::<PyBundle>()?;
    m.add_class::<PyEstimatedPart>()?;
    m.add_class::<PyObjectHypothesis>()?;
    m.add_class::<PyGraspPose>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(random_scene, m)?)?;
    m.add_function(wrap_pyfunction!(emulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(associate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_scene, m)?)?;
    m.add_function(wrap_pyfunction!(grasp_mug, m)?)?;
    m.add_function(wrap_pyfunction!(grasp_bottle, m)?)?;
    m.add_function(wrap_pyfunction!(grasp_spoon, m)?)?;
    m.add_function(wrap_pyfunction!(pour_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(stir_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(pour_success, m)?)?;
    m.add_function(wrap_pyfunction!(stir_success, m)?)?;
    m.add_function(wrap_pyfunction!(angular_error_deg, m)?)?;
    m.add_function(wrap_pyfunction!(mean_shift, m)?)?;
    m.add_function(wrap_pyfunction!(keypoint_loss, m)?)?;
    m.add_function(wrap_pyfunction!(vector_loss, m)?)?;
    m.add_function(wrap_pyfunction!(label_loss, m)?)?;
    m.add_function(wrap_pyfunction!(py_parts_of, m)?)?;
    m.add_function(wrap_pyfunction!(py_actions_of, m)?)?;
    m.add_function(wrap_pyfunction!(py_compatible_pairs, m)?)?;
    Ok(())
}
