//! Versioned JSON file formats for scenes, predictions, estimates, object
//! hypotheses, manipulation plans and evaluation reports, plus read/write
//! helpers. Vectors serialize as plain arrays, rotations as row-major 3x3
//! arrays.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::acf::{Acf, ObjectClass, PartClass};
use crate::camera::{CameraIntrinsics, DepthImage, Roi, Seed, SeedGrid};
use crate::error::AcfError;
use crate::eval::ThresholdSpec;
use crate::losses::{LabelPrediction, MaskWeights, OffsetField};
use crate::manipulation::{GraspPose, Trajectory, Waypoint};
use crate::synthetic::{
    CameraConfig, Dims, ObjectSpec, Pose, PredictionBundle, RoiPrediction, Scene, ScenePart,
    SceneSpec,
};

pub const FORMAT_VERSION: u32 = 1;

pub type V3 = [f64; 3];
pub type M3 = [[f64; 3]; 3];

fn v3(v: &Vector3<f64>) -> V3 {
    [v.x, v.y, v.z]
}

fn to_vec3(a: &V3) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn v2(v: &Vector2<f64>) -> [f64; 2] {
    [v.x, v.y]
}

fn to_vec2(a: &[f64; 2]) -> Vector2<f64> {
    Vector2::new(a[0], a[1])
}

fn m3(m: &Matrix3<f64>) -> M3 {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

fn to_mat3(a: &M3) -> Matrix3<f64> {
    Matrix3::new(
        a[0][0], a[0][1], a[0][2], a[1][0], a[1][1], a[1][2], a[2][0], a[2][1], a[2][2],
    )
}

fn check_version(found: u32, what: &str) -> Result<(), AcfError> {
    if found != FORMAT_VERSION {
        return Err(AcfError::InvalidSpec(format!(
            "{what}: format_version {found} unsupported, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseDto {
    pub rotation: M3,
    pub translation: V3,
}

impl From<&Pose> for PoseDto {
    fn from(p: &Pose) -> Self {
        Self { rotation: m3(&p.rotation), translation: v3(&p.translation) }
    }
}

impl PoseDto {
    pub fn to_pose(&self) -> Result<Pose, AcfError> {
        let pose =
            Pose { rotation: to_mat3(&self.rotation), translation: to_vec3(&self.translation) };
        pose.validate()?;
        Ok(pose)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsDto {
    pub container_radius: f64,
    pub container_height: f64,
    pub handle_arc_radius: f64,
    pub handle_tube_radius: f64,
    pub stir_length: f64,
    pub stir_width: f64,
    pub scoop_half_axes: V3,
}

impl From<&Dims> for DimsDto {
    fn from(d: &Dims) -> Self {
        Self {
            container_radius: d.container_radius,
            container_height: d.container_height,
            handle_arc_radius: d.handle_arc_radius,
            handle_tube_radius: d.handle_tube_radius,
            stir_length: d.stir_length,
            stir_width: d.stir_width,
            scoop_half_axes: d.scoop_half_axes,
        }
    }
}

impl DimsDto {
    pub fn to_dims(&self) -> Dims {
        Dims {
            container_radius: self.container_radius,
            container_height: self.container_height,
            handle_arc_radius: self.handle_arc_radius,
            handle_tube_radius: self.handle_tube_radius,
            stir_length: self.stir_length,
            stir_width: self.stir_width,
            scoop_half_axes: self.scoop_half_axes,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDto {
    pub class: ObjectClass,
    pub pose: PoseDto,
    pub dims: DimsDto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDto {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub pose: PoseDto,
}

impl From<&CameraConfig> for CameraDto {
    fn from(c: &CameraConfig) -> Self {
        Self {
            fx: c.intrinsics.fx,
            fy: c.intrinsics.fy,
            cx: c.intrinsics.cx,
            cy: c.intrinsics.cy,
            width: c.width,
            height: c.height,
            pose: (&c.pose).into(),
        }
    }
}

impl CameraDto {
    pub fn to_camera(&self) -> Result<CameraConfig, AcfError> {
        Ok(CameraConfig {
            intrinsics: CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy)?,
            width: self.width,
            height: self.height,
            pose: self.pose.to_pose()?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcfDto {
    pub keypoint: V3,
    pub axis: V3,
}

impl From<&Acf> for AcfDto {
    fn from(a: &Acf) -> Self {
        Self { keypoint: v3(&a.keypoint()), axis: v3(&a.axis()) }
    }
}

impl AcfDto {
    pub fn to_acf(&self) -> Result<Acf, AcfError> {
        Acf::new(to_vec3(&self.keypoint), to_vec3(&self.axis))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenePartDto {
    pub object_index: usize,
    pub part_class: PartClass,
    pub acf: AcfDto,
    pub roi: [f64; 4],
    pub axis_half_length: f64,
    pub assoc_target: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub format_version: u32,
    pub camera: CameraDto,
    pub gravity: V3,
    pub rng_seed: u64,
    pub objects: Vec<ObjectDto>,
    pub parts: Vec<ScenePartDto>,
    pub depth: Vec<f64>,
    pub part_ids: Vec<i32>,
}

pub fn scene_to_file(scene: &Scene) -> SceneFile {
    SceneFile {
        format_version: FORMAT_VERSION,
        camera: (&scene.spec.camera).into(),
        gravity: v3(&scene.spec.gravity),
        rng_seed: scene.spec.rng_seed,
        objects: scene
            .spec
            .objects
            .iter()
            .map(|o| ObjectDto { class: o.class, pose: (&o.pose).into(), dims: (&o.dims).into() })
            .collect(),
        parts: scene
            .parts
            .iter()
            .map(|p| ScenePartDto {
                object_index: p.object_index,
                part_class: p.part_class,
                acf: (&p.acf).into(),
                roi: [p.roi.x_min, p.roi.y_min, p.roi.x_max, p.roi.y_max],
                axis_half_length: p.axis_half_length,
                assoc_target: p.assoc_target,
            })
            .collect(),
        depth: scene.depth.values().to_vec(),
        part_ids: scene.part_ids.clone(),
    }
}

pub fn scene_from_file(file: &SceneFile) -> Result<Scene, AcfError> {
    check_version(file.format_version, "scene")?;
    let camera = file.camera.to_camera()?;
    let objects = file
        .objects
        .iter()
        .map(|o| {
            Ok(ObjectSpec { class: o.class, pose: o.pose.to_pose()?, dims: o.dims.to_dims() })
        })
        .collect::<Result<Vec<_>, AcfError>>()?;
    let parts = file
        .parts
        .iter()
        .map(|p| {
            Ok(ScenePart {
                object_index: p.object_index,
                part_class: p.part_class,
                acf: p.acf.to_acf()?,
                roi: Roi::new(p.roi[0], p.roi[1], p.roi[2], p.roi[3])?,
                axis_half_length: p.axis_half_length,
                assoc_target: p.assoc_target,
            })
        })
        .collect::<Result<Vec<_>, AcfError>>()?;
    let depth = DepthImage::new(camera.width, camera.height, file.depth.clone())?;
    if file.part_ids.len() != camera.width * camera.height {
        return Err(AcfError::ShapeMismatch(format!(
            "part id buffer has {} entries for {}x{}",
            file.part_ids.len(),
            camera.width,
            camera.height
        )));
    }
    Ok(Scene {
        spec: SceneSpec {
            objects,
            camera,
            gravity: to_vec3(&file.gravity),
            rng_seed: file.rng_seed,
        },
        parts,
        depth,
        part_ids: file.part_ids.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedDto {
    pub uv: [f64; 2],
    pub depth: f64,
    pub point3d: Option<V3>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiPredictionDto {
    pub part_class: PartClass,
    pub object_index: usize,
    pub score: f64,
    pub roi: [f64; 4],
    pub grid_n: usize,
    pub seeds: Vec<SeedDto>,
    pub mask: Vec<f64>,
    pub keypoint_offsets: Vec<V3>,
    pub endpoint_offsets: Vec<[V3; 2]>,
    pub scatter_offsets: Vec<V3>,
    pub axis_vectors: Vec<V3>,
    pub logits: Vec<f64>,
    pub labels_star: Vec<u8>,
    pub paf_vectors: Vec<[f64; 2]>,
    pub paf_target: Option<[f64; 2]>,
    pub assoc_target: Option<usize>,
    pub gt_acf: AcfDto,
    pub axis_half_length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionsFile {
    pub format_version: u32,
    pub intrinsics: CameraIntrinsics,
    pub rois: Vec<RoiPredictionDto>,
}

pub fn predictions_to_file(bundle: &PredictionBundle) -> PredictionsFile {
    PredictionsFile {
        format_version: FORMAT_VERSION,
        intrinsics: bundle.intrinsics,
        rois: bundle
            .rois
            .iter()
            .map(|r| RoiPredictionDto {
                part_class: r.part_class,
                object_index: r.object_index,
                score: r.score,
                roi: [r.roi.x_min, r.roi.y_min, r.roi.x_max, r.roi.y_max],
                grid_n: r.seeds.n,
                seeds: r
                    .seeds
                    .seeds
                    .iter()
                    .map(|s| SeedDto {
                        uv: v2(&s.uv),
                        depth: s.depth,
                        point3d: s.point3d.as_ref().map(v3),
                    })
                    .collect(),
                mask: r.mask.0.clone(),
                keypoint_offsets: r.keypoint_offsets.0.iter().map(v3).collect(),
                endpoint_offsets: r
                    .endpoint_offsets
                    .iter()
                    .map(|[a, b]| [v3(a), v3(b)])
                    .collect(),
                scatter_offsets: r.scatter_offsets.0.iter().map(v3).collect(),
                axis_vectors: r.axis_vectors.iter().map(v3).collect(),
                logits: r.labels.logits.clone(),
                labels_star: r.labels.labels_star.clone(),
                paf_vectors: r.paf_vectors.iter().map(v2).collect(),
                paf_target: r.paf_target.as_ref().map(v2),
                assoc_target: r.assoc_target,
                gt_acf: (&r.gt_acf).into(),
                axis_half_length: r.axis_half_length,
            })
            .collect(),
    }
}

pub fn predictions_from_file(file: &PredictionsFile) -> Result<PredictionBundle, AcfError> {
    check_version(file.format_version, "predictions")?;
    let rois = file
        .rois
        .iter()
        .map(|r| {
            let lengths = [
                r.seeds.len(),
                r.mask.len(),
                r.keypoint_offsets.len(),
                r.endpoint_offsets.len(),
                r.scatter_offsets.len(),
                r.axis_vectors.len(),
                r.logits.len(),
                r.labels_star.len(),
                r.paf_vectors.len(),
            ];
            if lengths.iter().any(|&l| l != r.grid_n * r.grid_n) {
                return Err(AcfError::ShapeMismatch(format!(
                    "ROI arrays {lengths:?} do not all match grid {0}x{0}",
                    r.grid_n
                )));
            }
            Ok(RoiPrediction {
                part_class: r.part_class,
                object_index: r.object_index,
                score: r.score,
                roi: Roi::new(r.roi[0], r.roi[1], r.roi[2], r.roi[3])?,
                seeds: SeedGrid {
                    n: r.grid_n,
                    seeds: r
                        .seeds
                        .iter()
                        .map(|s| Seed {
                            uv: to_vec2(&s.uv),
                            depth: s.depth,
                            point3d: s.point3d.as_ref().map(to_vec3),
                        })
                        .collect(),
                },
                mask: MaskWeights::new(r.mask.clone())?,
                keypoint_offsets: OffsetField(r.keypoint_offsets.iter().map(to_vec3).collect()),
                endpoint_offsets: r
                    .endpoint_offsets
                    .iter()
                    .map(|[a, b]| [to_vec3(a), to_vec3(b)])
                    .collect(),
                scatter_offsets: OffsetField(r.scatter_offsets.iter().map(to_vec3).collect()),
                axis_vectors: r.axis_vectors.iter().map(to_vec3).collect(),
                labels: LabelPrediction {
                    logits: r.logits.clone(),
                    labels_star: r.labels_star.clone(),
                },
                paf_vectors: r.paf_vectors.iter().map(to_vec2).collect(),
                paf_target: r.paf_target.as_ref().map(to_vec2),
                assoc_target: r.assoc_target,
                gt_acf: r.gt_acf.to_acf()?,
                axis_half_length: r.axis_half_length,
            })
        })
        .collect::<Result<Vec<_>, AcfError>>()?;
    Ok(PredictionBundle { intrinsics: file.intrinsics, rois })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatedPartDto {
    pub roi_index: usize,
    pub part_class: PartClass,
    pub acf: AcfDto,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureDto {
    pub roi_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatesFile {
    pub format_version: u32,
    pub parts: Vec<EstimatedPartDto>,
    pub failures: Vec<FailureDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisDto {
    pub parts: Vec<usize>,
    pub object_class: Option<ObjectClass>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesesFile {
    pub format_version: u32,
    pub parts: Vec<EstimatedPartDto>,
    pub hypotheses: Vec<HypothesisDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspDto {
    pub hypothesis_index: usize,
    pub rule: String,
    pub position: V3,
    pub axes: M3,
}

impl GraspDto {
    pub fn new(hypothesis_index: usize, rule: &str, pose: &GraspPose) -> Self {
        Self {
            hypothesis_index,
            rule: rule.to_string(),
            position: v3(&pose.position),
            axes: m3(&pose.axes),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointDto {
    pub position: V3,
    pub frame: M3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDto {
    pub kind: String,
    pub source_hypothesis: usize,
    pub target_hypothesis: usize,
    pub phase_boundary: usize,
    pub waypoints: Vec<WaypointDto>,
}

impl TrajectoryDto {
    pub fn new(kind: &str, source: usize, target: usize, trajectory: &Trajectory) -> Self {
        Self {
            kind: kind.to_string(),
            source_hypothesis: source,
            target_hypothesis: target,
            phase_boundary: trajectory.phase_boundary,
            waypoints: trajectory
                .waypoints
                .iter()
                .map(|w| WaypointDto { position: v3(&w.position), frame: m3(&w.frame) })
                .collect(),
        }
    }

    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory {
            waypoints: self
                .waypoints
                .iter()
                .map(|w| Waypoint { position: to_vec3(&w.position), frame: to_mat3(&w.frame) })
                .collect(),
            phase_boundary: self.phase_boundary,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipFile {
    pub format_version: u32,
    pub grasps: Vec<GraspDto>,
    pub trajectories: Vec<TrajectoryDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReportFile {
    pub format_version: u32,
    pub thresholds: ThresholdSpec,
    pub scene_count: usize,
    pub per_class: Vec<(PartClass, f64)>,
    pub mean_ap: f64,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, AcfError> {
    let file = File::open(path).map_err(|e| {
        AcfError::InvalidSpec(format!("cannot open {}: {e}", path.display()))
    })?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| AcfError::InvalidSpec(format!("cannot parse {}: {e}", path.display())))
}

/// Writes JSON atomically: to a sibling temp file first, then a rename.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AcfError> {
    let tmp = path.with_extension("tmp");
    let io_err =
        |e: std::io::Error| AcfError::InvalidSpec(format!("cannot write {}: {e}", path.display()));
    {
        let file = File::create(&tmp).map_err(io_err)?;
        let mut writer = BufWriter::new(file);
        serde_json::to_writer(&mut writer, value)
            .map_err(|e| AcfError::InvalidSpec(format!("cannot encode {}: {e}", path.display())))?;
        writer.write_all(b"\n").map_err(io_err)?;
        writer.flush().map_err(io_err)?;
    }
    std::fs::rename(&tmp, path).map_err(io_err)
}
