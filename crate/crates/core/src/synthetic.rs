//! Synthetic oracle scenes: parametric object primitives, analytic depth
//! rendering, ground-truth ACFs and emulated per-seed network outputs under
//! a parameterized noise model.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acf::{parts_of, Acf, ObjectClass, PartClass};
use crate::camera::{sample_seeds, CameraIntrinsics, DepthImage, Roi, SeedGrid};
use crate::error::AcfError;
use crate::losses::{LabelPrediction, MaskWeights, OffsetField};

/// A rigid pose: `p_out = rotation * p_in + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn yaw_translation(yaw: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        let rotation = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        Self { rotation, translation }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse_apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    pub fn inverse_rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * v
    }

    pub fn validate(&self) -> Result<(), AcfError> {
        let gram = self.rotation.transpose() * self.rotation;
        if (gram - Matrix3::identity()).abs().max() > 1e-6
            || (self.rotation.determinant() - 1.0).abs() > 1e-6
        {
            return Err(AcfError::InvalidSpec("pose rotation is not orthonormal".into()));
        }
        Ok(())
    }
}

/// Part dimension parameters; each object class reads the fields relevant to
/// its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dims {
    pub container_radius: f64,
    pub container_height: f64,
    pub handle_arc_radius: f64,
    pub handle_tube_radius: f64,
    pub stir_length: f64,
    pub stir_width: f64,
    pub scoop_half_axes: [f64; 3],
}

impl Dims {
    pub fn default_for(class: ObjectClass) -> Self {
        let mut d = Dims {
            container_radius: 0.0,
            container_height: 0.0,
            handle_arc_radius: 0.0,
            handle_tube_radius: 0.0,
            stir_length: 0.0,
            stir_width: 0.0,
            scoop_half_axes: [0.0; 3],
        };
        match class {
            ObjectClass::Bottle => {
                d.container_radius = 0.03;
                d.container_height = 0.2;
            }
            ObjectClass::Mug => {
                d.container_radius = 0.04;
                d.container_height = 0.1;
                d.handle_arc_radius = 0.03;
                d.handle_tube_radius = 0.008;
            }
            ObjectClass::Bowl => {
                d.container_radius = 0.08;
                d.container_height = 0.05;
            }
            ObjectClass::Spoon => {
                d.stir_length = 0.15;
                d.stir_width = 0.012;
                d.scoop_half_axes = [0.03, 0.02, 0.012];
            }
            ObjectClass::Spatula => {
                d.stir_length = 0.18;
                d.stir_width = 0.012;
                d.scoop_half_axes = [0.035, 0.025, 0.009];
            }
            ObjectClass::Hammer => {
                d.stir_length = 0.22;
                d.stir_width = 0.016;
            }
        }
        d
    }
}

/// One object to render: its class, world pose and dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSpec {
    pub class: ObjectClass,
    pub pose: Pose,
    pub dims: Dims,
}

/// Camera intrinsics, image size and camera-to-world pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
    pub pose: Pose,
}

impl CameraConfig {
    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.pose.inverse_apply(p)
    }

    pub fn world_dir_to_camera(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.pose.inverse_rotate(v)
    }

    pub fn camera_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.pose.apply(p)
    }

    pub fn camera_dir_to_world(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.pose.rotate(v)
    }
}

/// A full scene description: objects, camera and the world gravity direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub objects: Vec<ObjectSpec>,
    pub camera: CameraConfig,
    pub gravity: Vector3<f64>,
    pub rng_seed: u64,
}

/// Ground truth for one rendered part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePart {
    pub object_index: usize,
    pub part_class: PartClass,
    /// ACF in the camera frame.
    pub acf: Acf,
    pub roi: Roi,
    /// Distance from the keypoint to each axis endpoint.
    pub axis_half_length: f64,
    /// Index of the associated part (handle -> container, stir -> scoop).
    pub assoc_target: Option<usize>,
}

/// A generated scene: ground-truth parts, the rendered depth image and the
/// per-pixel part index (-1 for background).
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    pub parts: Vec<ScenePart>,
    pub depth: DepthImage,
    pub part_ids: Vec<i32>,
}

enum Shape {
    /// Capped cylinder around +z.
    Cylinder { center: Vector3<f64>, radius: f64, half_height: f64 },
    /// Axis-aligned box.
    Box { center: Vector3<f64>, half_extents: Vector3<f64> },
    Ellipsoid { center: Vector3<f64>, radii: Vector3<f64> },
    Sphere { center: Vector3<f64>, radius: f64 },
}

const RAY_EPS: f64 = 1e-9;

impl Shape {
    /// Nearest positive ray parameter, for a ray `o + t d` in the shape's
    /// local frame. `d` need not be normalized.
    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        match *self {
            Shape::Sphere { center, radius } => quadratic_hit(&(o - center), d, radius),
            Shape::Ellipsoid { center, radii } => {
                let os = (o - center).component_div(&radii);
                let ds = d.component_div(&radii);
                quadratic_hit(&os, &ds, 1.0)
            }
            Shape::Cylinder { center, radius, half_height } => {
                let oc = o - center;
                let mut best: Option<f64> = None;
                // Lateral surface.
                let a = d.x * d.x + d.y * d.y;
                if a > RAY_EPS {
                    let b = 2.0 * (oc.x * d.x + oc.y * d.y);
                    let c = oc.x * oc.x + oc.y * oc.y - radius * radius;
                    for t in quadratic_roots(a, b, c) {
                        if t > RAY_EPS && (oc.z + t * d.z).abs() <= half_height {
                            best = Some(best.map_or(t, |b: f64| b.min(t)));
                        }
                    }
                }
                // End caps.
                if d.z.abs() > RAY_EPS {
                    for zcap in [-half_height, half_height] {
                        let t = (zcap - oc.z) / d.z;
                        if t > RAY_EPS {
                            let x = oc.x + t * d.x;
                            let y = oc.y + t * d.y;
                            if x * x + y * y <= radius * radius {
                                best = Some(best.map_or(t, |b: f64| b.min(t)));
                            }
                        }
                    }
                }
                best
            }
            Shape::Box { center, half_extents } => {
                let oc = o - center;
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                for k in 0..3 {
                    if d[k].abs() < RAY_EPS {
                        if oc[k].abs() > half_extents[k] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (-half_extents[k] - oc[k]) / d[k];
                    let t2 = (half_extents[k] - oc[k]) / d[k];
                    t_near = t_near.max(t1.min(t2));
                    t_far = t_far.min(t1.max(t2));
                }
                if t_near > t_far || t_far <= RAY_EPS {
                    return None;
                }
                Some(if t_near > RAY_EPS { t_near } else { t_far })
            }
        }
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
}

fn quadratic_hit(oc: &Vector3<f64>, d: &Vector3<f64>, radius: f64) -> Option<f64> {
    let a = d.norm_squared();
    let b = 2.0 * oc.dot(d);
    let c = oc.norm_squared() - radius * radius;
    quadratic_roots(a, b, c).into_iter().filter(|&t| t > RAY_EPS).fold(None, |acc, t| {
        Some(acc.map_or(t, |b: f64| b.min(t)))
    })
}

struct PartModel {
    part_class: PartClass,
    shapes: Vec<Shape>,
    keypoint: Vector3<f64>,
    axis: Vector3<f64>,
    axis_half_length: f64,
    /// Conservative local bounding box for ROI projection.
    bbox_lo: Vector3<f64>,
    bbox_hi: Vector3<f64>,
}

fn positive(name: &str, v: f64) -> Result<(), AcfError> {
    if v <= 0.0 {
        return Err(AcfError::InvalidSpec(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Parametric part models in the object frame. Containers rest on z = 0 with
/// their axis from bottom to top; spoons lie along +x with the scoop at the
/// head and its concave normal pointing up.
fn part_models(class: ObjectClass, dims: &Dims) -> Result<Vec<PartModel>, AcfError> {
    let mut models = Vec::new();
    let parts = parts_of(class);
    if parts.contains(&PartClass::Container) {
        positive("container_radius", dims.container_radius)?;
        positive("container_height", dims.container_height)?;
        let r = dims.container_radius;
        let h = dims.container_height;
        let center = Vector3::new(0.0, 0.0, h / 2.0);
        models.push(PartModel {
            part_class: PartClass::Container,
            shapes: vec![Shape::Cylinder { center, radius: r, half_height: h / 2.0 }],
            keypoint: center,
            axis: Vector3::z(),
            axis_half_length: h / 2.0,
            bbox_lo: Vector3::new(-r, -r, 0.0),
            bbox_hi: Vector3::new(r, r, h),
        });
    }
    if parts.contains(&PartClass::Handle) {
        positive("handle_arc_radius", dims.handle_arc_radius)?;
        positive("handle_tube_radius", dims.handle_tube_radius)?;
        let rc = dims.container_radius;
        let a = dims.handle_arc_radius;
        let tube = dims.handle_tube_radius;
        let zc = dims.container_height / 2.0;
        // Torus arc approximated by a sphere chain in the x-z plane.
        let shapes: Vec<Shape> = (0..16)
            .map(|k| {
                let theta = (-75.0 + 150.0 * k as f64 / 15.0).to_radians();
                Shape::Sphere {
                    center: Vector3::new(rc + a * theta.cos(), 0.0, zc + a * theta.sin()),
                    radius: tube,
                }
            })
            .collect();
        models.push(PartModel {
            part_class: PartClass::Handle,
            // External tangent point, the one farthest from the container
            // axis, with the axis pointing toward the container.
            keypoint: Vector3::new(rc + a, 0.0, zc),
            axis: -Vector3::x(),
            axis_half_length: a,
            bbox_lo: Vector3::new(rc - tube, -tube, zc - a - tube),
            bbox_hi: Vector3::new(rc + a + tube, tube, zc + a + tube),
            shapes,
        });
    }
    if parts.contains(&PartClass::Stir) {
        positive("stir_length", dims.stir_length)?;
        positive("stir_width", dims.stir_width)?;
        let l = dims.stir_length;
        let w = dims.stir_width;
        let center = Vector3::new(0.0, 0.0, w / 2.0);
        models.push(PartModel {
            part_class: PartClass::Stir,
            shapes: vec![Shape::Box {
                center,
                half_extents: Vector3::new(l / 2.0, w / 2.0, w / 2.0),
            }],
            keypoint: center,
            // Tail to head: the scoop sits at the +x end.
            axis: Vector3::x(),
            axis_half_length: l / 2.0,
            bbox_lo: Vector3::new(-l / 2.0, -w / 2.0, 0.0),
            bbox_hi: Vector3::new(l / 2.0, w / 2.0, w),
        });
    }
    if parts.contains(&PartClass::Scoop) {
        let [ax, ay, az] = dims.scoop_half_axes;
        positive("scoop_half_axes", ax.min(ay).min(az))?;
        let center = Vector3::new(dims.stir_length / 2.0 + ax, 0.0, az);
        models.push(PartModel {
            part_class: PartClass::Scoop,
            shapes: vec![Shape::Ellipsoid { center, radii: Vector3::new(ax, ay, az) }],
            keypoint: center,
            // Upward normal at the concave surface center.
            axis: Vector3::z(),
            axis_half_length: az,
            bbox_lo: center - Vector3::new(ax, ay, az),
            bbox_hi: center + Vector3::new(ax, ay, az),
        });
    }
    Ok(models)
}

/// Renders the scene and computes ground-truth ACFs and per-part ROIs in the
/// camera frame.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, AcfError> {
    spec.camera.pose.validate()?;
    if (spec.gravity.norm() - 1.0).abs() > 1e-6 {
        return Err(AcfError::InvalidSpec("gravity must be a unit vector".into()));
    }
    let mut parts = Vec::new();
    let mut models = Vec::new();
    for (object_index, object) in spec.objects.iter().enumerate() {
        object.pose.validate()?;
        for model in part_models(object.class, &object.dims)? {
            let kp_world = object.pose.apply(&model.keypoint);
            let axis_world = object.pose.rotate(&model.axis);
            let kp_cam = spec.camera.world_to_camera(&kp_world);
            let axis_cam = spec.camera.world_dir_to_camera(&axis_world);
            if kp_cam.z <= 0.0 {
                return Err(AcfError::InvalidSpec(format!(
                    "part {:?} of object {object_index} is behind the camera",
                    model.part_class
                )));
            }
            let roi = project_bbox_roi(&model, &object.pose, &spec.camera)?;
            parts.push(ScenePart {
                object_index,
                part_class: model.part_class,
                acf: Acf::new(kp_cam, axis_cam)?,
                roi,
                axis_half_length: model.axis_half_length,
                assoc_target: None,
            });
            models.push((object_index, model));
        }
    }
    // Association targets within each object: handle -> container,
    // stir -> scoop.
    for i in 0..parts.len() {
        let target_class = match parts[i].part_class {
            PartClass::Handle => PartClass::Container,
            PartClass::Stir => PartClass::Scoop,
            _ => continue,
        };
        parts[i].assoc_target = parts
            .iter()
            .position(|p| p.object_index == parts[i].object_index && p.part_class == target_class);
    }

    let (depth, part_ids) = render_depth(spec, &models)?;

    // Drop parts that are (almost) fully occluded: no detector can report a
    // part with essentially no visible pixels, so keeping them would only
    // create unmatchable ground truth.
    const MIN_VISIBLE_PIXELS: usize = 25;
    let mut visible = vec![0usize; parts.len()];
    for &id in &part_ids {
        if id >= 0 {
            visible[id as usize] += 1;
        }
    }
    let mut remap = vec![-1i32; parts.len()];
    let mut kept = Vec::with_capacity(parts.len());
    for (i, part) in parts.into_iter().enumerate() {
        if visible[i] >= MIN_VISIBLE_PIXELS {
            remap[i] = kept.len() as i32;
            kept.push(part);
        }
    }
    for part in &mut kept {
        part.assoc_target = part
            .assoc_target
            .and_then(|t| (remap[t] >= 0).then_some(remap[t] as usize));
    }
    let part_ids: Vec<i32> =
        part_ids.iter().map(|&id| if id >= 0 { remap[id as usize] } else { -1 }).collect();
    Ok(Scene { spec: clone_spec(spec), parts: kept, depth, part_ids })
}

fn clone_spec(spec: &SceneSpec) -> SceneSpec {
    SceneSpec {
        objects: spec.objects.clone(),
        camera: spec.camera,
        gravity: spec.gravity,
        rng_seed: spec.rng_seed,
    }
}

fn project_bbox_roi(
    model: &PartModel,
    pose: &Pose,
    camera: &CameraConfig,
) -> Result<Roi, AcfError> {
    let (lo, hi) = (model.bbox_lo, model.bbox_hi);
    let mut min_uv = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut max_uv = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for corner in 0..8 {
        let p = Vector3::new(
            if corner & 1 == 0 { lo.x } else { hi.x },
            if corner & 2 == 0 { lo.y } else { hi.y },
            if corner & 4 == 0 { lo.z } else { hi.z },
        );
        let cam = camera.world_to_camera(&pose.apply(&p));
        let uv = camera.intrinsics.project(cam)?;
        min_uv = min_uv.inf(&uv);
        max_uv = max_uv.sup(&uv);
    }
    let (w, h) = (camera.width as f64, camera.height as f64);
    let roi = Roi::new(
        (min_uv.x - 2.0).max(0.0),
        (min_uv.y - 2.0).max(0.0),
        (max_uv.x + 2.0).min(w),
        (max_uv.y + 2.0).min(h),
    )
    .map_err(|_| AcfError::InvalidSpec("part projects outside the image".into()))?;
    if roi.x_min >= w || roi.y_min >= h || roi.x_max <= 0.0 || roi.y_max <= 0.0 {
        return Err(AcfError::InvalidSpec("part projects outside the image".into()));
    }
    Ok(roi)
}

fn render_depth(
    spec: &SceneSpec,
    models: &[(usize, PartModel)],
) -> Result<(DepthImage, Vec<i32>), AcfError> {
    let (width, height) = (spec.camera.width, spec.camera.height);
    let k = spec.camera.intrinsics;
    let origin_world = spec.camera.pose.translation;
    // Precompute ray origins in each object frame.
    let origins: Vec<Vector3<f64>> = spec
        .objects
        .iter()
        .map(|o| o.pose.inverse_apply(&origin_world))
        .collect();
    let mut depth = vec![0.0f64; width * height];
    let mut ids = vec![-1i32; width * height];
    for row in 0..height {
        for col in 0..width {
            let dir_cam = Vector3::new(
                (col as f64 + 0.5 - k.cx) / k.fx,
                (row as f64 + 0.5 - k.cy) / k.fy,
                1.0,
            );
            let dir_world = spec.camera.camera_dir_to_world(&dir_cam);
            let mut best_t = f64::INFINITY;
            let mut best_part = -1i32;
            for (part_index, (object_index, model)) in models.iter().enumerate() {
                let o = origins[*object_index];
                let d = spec.objects[*object_index].pose.inverse_rotate(&dir_world);
                for shape in &model.shapes {
                    if let Some(t) = shape.intersect(&o, &d) {
                        if t < best_t {
                            best_t = t;
                            best_part = part_index as i32;
                        }
                    }
                }
            }
            if best_part >= 0 {
                // With the unnormalized direction, t is exactly the z-depth.
                depth[row * width + col] = best_t;
                ids[row * width + col] = best_part;
            }
        }
    }
    Ok((DepthImage::new(width, height, depth)?, ids))
}

/// Noise applied to the emulated network outputs. All-zero reproduces ground
/// truth exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub offset_sigma: f64,
    pub outlier_fraction: f64,
    pub outlier_box: f64,
    pub paf_angle_sigma_deg: f64,
    pub mask_flip_prob: f64,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            offset_sigma: 0.0,
            outlier_fraction: 0.0,
            outlier_box: 0.0,
            paf_angle_sigma_deg: 0.0,
            mask_flip_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AcfError> {
        let fractions_ok = (0.0..=1.0).contains(&self.outlier_fraction)
            && (0.0..=1.0).contains(&self.mask_flip_prob);
        if !fractions_ok || self.offset_sigma < 0.0 || self.outlier_box < 0.0 {
            return Err(AcfError::InvalidSpec("noise parameters out of range".into()));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::zero()
    }
}

/// Emulated network outputs for one ROI.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiPrediction {
    pub part_class: PartClass,
    pub object_index: usize,
    pub score: f64,
    pub roi: Roi,
    pub seeds: SeedGrid,
    pub mask: MaskWeights,
    pub keypoint_offsets: OffsetField,
    pub endpoint_offsets: Vec<[Vector3<f64>; 2]>,
    pub scatter_offsets: OffsetField,
    pub axis_vectors: Vec<Vector3<f64>>,
    pub labels: LabelPrediction,
    pub paf_vectors: Vec<Vector2<f64>>,
    pub paf_target: Option<Vector2<f64>>,
    pub assoc_target: Option<usize>,
    pub gt_acf: Acf,
    pub axis_half_length: f64,
}

/// Per-scene bundle of all ROI predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBundle {
    pub intrinsics: CameraIntrinsics,
    pub rois: Vec<RoiPrediction>,
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one draw per call keeps consumption order simple.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn noise_vec3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    Vector3::new(standard_normal(rng), standard_normal(rng), standard_normal(rng)) * sigma
}

/// Computes ground-truth per-seed outputs for every part ROI and perturbs
/// them per the noise model.
pub fn emulate_predictions(
    scene: &Scene,
    noise: &NoiseModel,
    rng_seed: u64,
    seed_grid_n: usize,
) -> Result<PredictionBundle, AcfError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let k = scene.spec.camera.intrinsics;
    let mut rois = Vec::with_capacity(scene.parts.len());
    for (part_index, part) in scene.parts.iter().enumerate() {
        let seeds = sample_seeds(part.roi, &scene.depth, &k, seed_grid_n)?;
        let kp = part.acf.keypoint();
        let axis = part.acf.axis();
        let half = part.axis_half_length;
        let endpoints = [kp - half * axis, kp + half * axis];

        let count = seeds.len();
        let mut mask = Vec::with_capacity(count);
        let mut keypoint_offsets = Vec::with_capacity(count);
        let mut endpoint_offsets = Vec::with_capacity(count);
        let mut scatter_offsets = Vec::with_capacity(count);
        let mut axis_vectors = Vec::with_capacity(count);
        let mut logits = Vec::with_capacity(count);
        let mut labels_star = Vec::with_capacity(count);

        let paf_target = match part.assoc_target {
            Some(t) => {
                let from = k.project(kp)?;
                let to = k.project(scene.parts[t].acf.keypoint())?;
                let link = to - from;
                (link.norm() > 1e-9).then(|| link.normalize())
            }
            None => None,
        };
        let mut paf_vectors = Vec::with_capacity(count);

        for seed in &seeds.seeds {
            // Mask: does the nearest rendered pixel belong to this part?
            let in_mask = seed.point3d.is_some() && {
                let col = (seed.uv.x.floor() as isize)
                    .clamp(0, scene.depth.width as isize - 1) as usize;
                let row = (seed.uv.y.floor() as isize)
                    .clamp(0, scene.depth.height as isize - 1) as usize;
                scene.part_ids[row * scene.depth.width + col] == part_index as i32
            };
            let mut w = if in_mask { 1.0 } else { 0.0 };
            if noise.mask_flip_prob > 0.0 && rng.random::<f64>() < noise.mask_flip_prob {
                w = 1.0 - w;
            }
            mask.push(w);

            let p = seed.point3d.unwrap_or(kp);
            let along = ((p - kp).dot(&axis)).clamp(-half, half);
            let line_point = kp + along * axis;
            let label = (along >= 0.0) as u8;
            labels_star.push(label);
            logits.push(if label == 1 { 10.0 } else { -10.0 });

            let mut kp_off = kp - p;
            let mut ep_off = [endpoints[0] - p, endpoints[1] - p];
            let mut sc_off = line_point - p;
            let mut vec_pred = axis;
            if noise.offset_sigma > 0.0 {
                kp_off += noise_vec3(&mut rng, noise.offset_sigma);
                ep_off[0] += noise_vec3(&mut rng, noise.offset_sigma);
                ep_off[1] += noise_vec3(&mut rng, noise.offset_sigma);
                sc_off += noise_vec3(&mut rng, noise.offset_sigma);
                vec_pred += noise_vec3(&mut rng, noise.offset_sigma);
            }
            if noise.outlier_fraction > 0.0 && rng.random::<f64>() < noise.outlier_fraction {
                let uniform_box = |rng: &mut ChaCha8Rng| {
                    Vector3::new(
                        (rng.random::<f64>() - 0.5) * noise.outlier_box,
                        (rng.random::<f64>() - 0.5) * noise.outlier_box,
                        (rng.random::<f64>() - 0.5) * noise.outlier_box,
                    )
                };
                kp_off = uniform_box(&mut rng);
                ep_off = [uniform_box(&mut rng), uniform_box(&mut rng)];
                sc_off = uniform_box(&mut rng);
            }
            keypoint_offsets.push(kp_off);
            endpoint_offsets.push(ep_off);
            scatter_offsets.push(sc_off);
            axis_vectors.push(vec_pred);

            let paf = match paf_target {
                Some(target) => {
                    if noise.paf_angle_sigma_deg > 0.0 {
                        let angle =
                            standard_normal(&mut rng) * noise.paf_angle_sigma_deg.to_radians();
                        let (s, c) = angle.sin_cos();
                        Vector2::new(c * target.x - s * target.y, s * target.x + c * target.y)
                    } else {
                        target
                    }
                }
                None => Vector2::zeros(),
            };
            paf_vectors.push(paf);
        }

        rois.push(RoiPrediction {
            part_class: part.part_class,
            object_index: part.object_index,
            score: 1.0,
            roi: part.roi,
            seeds,
            mask: MaskWeights::new(mask)?,
            keypoint_offsets: OffsetField(keypoint_offsets),
            endpoint_offsets,
            scatter_offsets: OffsetField(scatter_offsets),
            axis_vectors,
            labels: LabelPrediction { logits, labels_star },
            paf_vectors,
            paf_target,
            assoc_target: part.assoc_target,
            gt_acf: part.acf,
            axis_half_length: part.axis_half_length,
        });
    }
    Ok(PredictionBundle { intrinsics: k, rois })
}

/// The default scene camera: slightly elevated, looking down at the tabletop
/// around the world origin.
pub fn standard_camera() -> CameraConfig {
    let eye = Vector3::new(0.0, -0.7, 0.65);
    let target = Vector3::new(0.0, 0.0, 0.0);
    let up = Vector3::z();
    let forward = (target - eye).normalize();
    let right = forward.cross(&up).normalize();
    let down = forward.cross(&right);
    CameraConfig {
        intrinsics: CameraIntrinsics::new(300.0, 300.0, 160.0, 120.0).unwrap(),
        width: 320,
        height: 240,
        pose: Pose { rotation: Matrix3::from_columns(&[right, down, forward]), translation: eye },
    }
}

/// Random tabletop clutter: 1..=max_objects upright objects on a jittered
/// grid with random yaw.
pub fn random_scene_spec(rng_seed: u64, min_objects: usize, max_objects: usize) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let count = rng.random_range(min_objects..=max_objects);
    // Shuffled 3x3 grid of table slots keeps objects disjoint.
    let mut slots: Vec<(f64, f64)> = (0..9)
        .map(|i| (((i % 3) as f64 - 1.0) * 0.15, ((i / 3) as f64 - 1.0) * 0.15))
        .collect();
    for i in (1..slots.len()).rev() {
        let j = rng.random_range(0..=i);
        slots.swap(i, j);
    }
    let objects = (0..count)
        .map(|i| {
            let class = ObjectClass::ALL[rng.random_range(0..ObjectClass::ALL.len())];
            let (x, y) = slots[i % slots.len()];
            let jitter = |rng: &mut ChaCha8Rng| (rng.random::<f64>() - 0.5) * 0.03;
            // Keep mug handles on the camera-facing side; otherwise the body
            // can hide the handle entirely and no detector could recover it.
            let yaw = if class == ObjectClass::Mug {
                (rng.random::<f64>() - 0.5) * 2.4
            } else {
                rng.random::<f64>() * std::f64::consts::TAU
            };
            ObjectSpec {
                class,
                pose: Pose::yaw_translation(
                    yaw,
                    Vector3::new(x + jitter(&mut rng), y + jitter(&mut rng), 0.0),
                ),
                dims: Dims::default_for(class),
            }
        })
        .collect();
    SceneSpec {
        objects,
        camera: standard_camera(),
        gravity: -Vector3::z(),
        rng_seed,
    }
}
