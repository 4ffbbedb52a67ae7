//! Grasp poses and pour/stir trajectory waypoints composed from ACFs, plus
//! the task success predicates.
//!
//! Gripper frames follow the red/green/blue column convention: `green` is the
//! finger-sliding axis held parallel to a part axis, `blue` the approach axis,
//! and `red = green x blue` completes a right-handed frame.

use nalgebra::{Matrix3, Vector3};

use crate::acf::Acf;
use crate::error::AcfError;

const PARALLEL_TOL: f64 = 0.017452406437283513; // sin(1 degree)

/// An end-effector pose: position plus an orthonormal frame with determinant
/// +1, columns ordered red/green/blue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspPose {
    pub position: Vector3<f64>,
    pub axes: Matrix3<f64>,
}

impl GraspPose {
    pub fn red(&self) -> Vector3<f64> {
        self.axes.column(0).into_owned()
    }

    pub fn green(&self) -> Vector3<f64> {
        self.axes.column(1).into_owned()
    }

    pub fn blue(&self) -> Vector3<f64> {
        self.axes.column(2).into_owned()
    }
}

/// Pour motion parameters: hold height `H` above the target keypoint, pour
/// rotation radius `R`, the tilt schedule in degrees and the number of
/// transport waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PourParams {
    pub height: f64,
    pub radius: f64,
    pub tilt_profile_deg: Vec<f64>,
    pub steps: usize,
}

impl Default for PourParams {
    fn default() -> Self {
        Self {
            height: 0.15,
            radius: 0.05,
            tilt_profile_deg: (0..10).map(|k| k as f64 * 120.0 / 9.0).collect(),
            steps: 10,
        }
    }
}

/// One trajectory waypoint: a position and an orthonormal frame whose green
/// column carries the manipulated part's axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Vector3<f64>,
    pub frame: Matrix3<f64>,
}

/// An ordered waypoint sequence. `phase_boundary` indexes the first waypoint
/// of the second phase (pour tilt, or stir oscillation).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub phase_boundary: usize,
}

fn frame_from(red: Vector3<f64>, green: Vector3<f64>, blue: Vector3<f64>) -> Matrix3<f64> {
    Matrix3::from_columns(&[red, green, blue])
}

fn horizontal_part(v: Vector3<f64>, up: Vector3<f64>) -> Vector3<f64> {
    v - v.dot(&up) * up
}

/// Mug grasp: at the handle keypoint, blue orthogonal to both axes pointing
/// away from the container, green parallel to the container axis.
pub fn grasp_mug(handle: &Acf, container: &Acf) -> Result<GraspPose, AcfError> {
    let cross = handle.axis().cross(&container.axis());
    let norm = cross.norm();
    if norm < PARALLEL_TOL {
        return Err(AcfError::DegenerateFrame(
            "handle and container axes are parallel within 1 degree".into(),
        ));
    }
    let mut blue = cross / norm;
    // Approach from the side opposite the container body.
    let away = handle.keypoint() - container.keypoint();
    if blue.dot(&away) < 0.0 {
        blue = -blue;
    }
    let green = container.axis();
    let red = green.cross(&blue);
    Ok(GraspPose { position: handle.keypoint(), axes: frame_from(red, green, blue) })
}

/// Bottle grasp: at the container keypoint, green parallel to the container
/// axis, blue along the approach direction (projected orthogonal to green).
pub fn grasp_bottle(container: &Acf, approach: Vector3<f64>) -> Result<GraspPose, AcfError> {
    grasp_along_axis(container.keypoint(), container.axis(), approach)
}

/// Spoon grasp: at the stir keypoint, green parallel to the stir axis, blue
/// along the approach direction (projected orthogonal to green).
pub fn grasp_spoon(stir: &Acf, approach: Vector3<f64>) -> Result<GraspPose, AcfError> {
    grasp_along_axis(stir.keypoint(), stir.axis(), approach)
}

fn grasp_along_axis(
    position: Vector3<f64>,
    green: Vector3<f64>,
    approach: Vector3<f64>,
) -> Result<GraspPose, AcfError> {
    let approach_norm = approach.norm();
    if approach_norm < 1e-9 {
        return Err(AcfError::ZeroVector);
    }
    let projected = horizontal_part(approach / approach_norm, green);
    let norm = projected.norm();
    if norm < PARALLEL_TOL {
        return Err(AcfError::DegenerateFrame(
            "approach direction is parallel to the part axis".into(),
        ));
    }
    let blue = projected / norm;
    let red = green.cross(&blue);
    Ok(GraspPose { position, axes: frame_from(red, green, blue) })
}

/// Pour motion: an upright transport to the pre-pour point at height `H` and
/// radius `R` from the target keypoint, then a tilt rotating the container
/// axis in the vertical plane through both keypoints while the container
/// keypoint stays on the radius-`R` circle around the hold point.
pub fn pour_trajectory(
    source: &Acf,
    target: &Acf,
    params: &PourParams,
    up: Vector3<f64>,
) -> Result<Trajectory, AcfError> {
    if params.height <= 0.0 || params.radius < 0.0 || params.steps < 2 {
        return Err(AcfError::InvalidSpec("pour params: need H > 0, R >= 0, steps >= 2".into()));
    }
    let up = up.try_normalize(1e-9).ok_or(AcfError::ZeroVector)?;
    if target.axis().dot(&up) < 30f64.to_radians().cos() {
        return Err(AcfError::PreconditionViolation(
            "pour target axis tilted more than 30 degrees from up".into(),
        ));
    }
    // Vertical plane through the two keypoints.
    let h_dir = match horizontal_part(source.keypoint() - target.keypoint(), up).try_normalize(1e-9)
    {
        Some(d) => d,
        // Source directly above the target: any vertical plane works.
        None => horizontal_part(Vector3::x(), up)
            .try_normalize(1e-9)
            .unwrap_or_else(|| horizontal_part(Vector3::y(), up).normalize()),
    };
    let hold = target.keypoint() + params.height * up;
    let pre_pour = hold + params.radius * h_dir;
    let red = up.cross(&h_dir);
    let base_frame = frame_from(red, up, h_dir);

    let mut waypoints = Vec::with_capacity(params.steps + params.tilt_profile_deg.len());
    for k in 0..params.steps {
        let t = k as f64 / (params.steps - 1) as f64;
        waypoints.push(Waypoint {
            position: source.keypoint() * (1.0 - t) + pre_pour * t,
            frame: base_frame,
        });
    }
    let phase_boundary = waypoints.len();
    for &tilt_deg in &params.tilt_profile_deg {
        let theta = tilt_deg.to_radians();
        let (s, c) = theta.sin_cos();
        let green = c * up - s * h_dir;
        let blue = c * h_dir + s * up;
        waypoints.push(Waypoint {
            position: hold + params.radius * (c * h_dir + s * up),
            frame: frame_from(red, green, blue),
        });
    }
    Ok(Trajectory { waypoints, phase_boundary })
}

/// Stir motion: a descent with the stir axis aligned to the container axis
/// until the scoop keypoint reaches the container keypoint, then a horizontal
/// oscillation of amplitude `stroke` along the scoop axis. Waypoint positions
/// track the scoop keypoint.
pub fn stir_trajectory(
    stir: &Acf,
    scoop: &Acf,
    container: &Acf,
    stroke: f64,
    steps: usize,
) -> Result<Trajectory, AcfError> {
    if steps < 2 {
        return Err(AcfError::InvalidSpec("stir needs steps >= 2".into()));
    }
    let axis = container.axis();
    let stir_dir = match horizontal_part(scoop.axis(), axis).try_normalize(1e-9) {
        Some(d) => d,
        None => {
            return Err(AcfError::DegenerateFrame(
                "scoop axis is vertical: no horizontal stir direction".into(),
            ))
        }
    };
    let _ = stir; // descent orientation is fully fixed by the container axis
    let start = container.keypoint()
        + (scoop.keypoint() - container.keypoint()).norm() * axis;
    let red = axis.cross(&stir_dir).normalize();
    let blue = red.cross(&axis);
    let frame = frame_from(red, axis, blue);

    let mut waypoints = Vec::with_capacity(2 * steps);
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        waypoints.push(Waypoint {
            position: start * (1.0 - t) + container.keypoint() * t,
            frame,
        });
    }
    let phase_boundary = waypoints.len();
    for k in 0..steps {
        let phase = std::f64::consts::TAU * (k + 1) as f64 / steps as f64;
        waypoints.push(Waypoint {
            position: container.keypoint() + stroke * phase.sin() * stir_dir,
            frame,
        });
    }
    Ok(Trajectory { waypoints, phase_boundary })
}

/// Pour ratio `r = |dC1| / |dC2|` with success at `r >= 0.7`.
pub fn pour_success(delta_c1: f64, delta_c2: f64) -> Result<(f64, bool), AcfError> {
    if delta_c2 == 0.0 {
        return Err(AcfError::DivisionByZero("no mass was dispensed".into()));
    }
    let r = delta_c1.abs() / delta_c2.abs();
    Ok((r, r >= 0.7))
}

/// Stir success: positional error strictly below 2 cm.
pub fn stir_success(positional_error: f64) -> bool {
    debug_assert!(positional_error >= 0.0);
    positional_error < 0.02
}

/// Frame orthonormality residual: max deviation of `F^T F` from identity plus
/// the determinant defect. Used by tests and the acceptance audit.
pub fn frame_residual(frame: &Matrix3<f64>) -> f64 {
    let gram = frame.transpose() * frame;
    let mut residual = (frame.determinant() - 1.0).abs();
    for r in 0..3 {
        for c in 0..3 {
            let target = if r == c { 1.0 } else { 0.0 };
            residual = residual.max((gram[(r, c)] - target).abs());
        }
    }
    residual
}
