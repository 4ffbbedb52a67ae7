//! Pinhole camera model, depth images and per-ROI seed sampling.
//!
//! Seeds are placed at the centers of an n-by-n regular subdivision of the ROI
//! (the RoIAlign convention), their depth is bilinearly interpolated from the
//! four neighboring pixels, and valid seeds are back-projected to 3D camera
//! coordinates.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::AcfError;

/// Pinhole intrinsics. Pixel coordinates are continuous, with the value of
/// pixel `(row, col)` located at `(col + 0.5, row + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, AcfError> {
        if fx <= 0.0 || fy <= 0.0 {
            return Err(AcfError::InvalidSpec("focal lengths must be positive".into()));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// Back-projects pixel `uv` at depth `d` through the inverted intrinsics.
    pub fn backproject(&self, uv: Vector2<f64>, d: f64) -> Result<Vector3<f64>, AcfError> {
        if d <= 0.0 {
            return Err(AcfError::NonPositiveDepth(d));
        }
        Ok(Vector3::new(
            (uv.x - self.cx) * d / self.fx,
            (uv.y - self.cy) * d / self.fy,
            d,
        ))
    }

    /// Forward pinhole projection of a camera-frame point with positive depth.
    pub fn project(&self, p: Vector3<f64>) -> Result<Vector2<f64>, AcfError> {
        if p.z <= 0.0 {
            return Err(AcfError::NonPositiveDepth(p.z));
        }
        Ok(Vector2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }
}

/// Axis-aligned region of interest in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Roi {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, AcfError> {
        if !(x_max > x_min && y_max > y_min) {
            return Err(AcfError::InvalidSpec("ROI must have positive extent".into()));
        }
        Ok(Self { x_min, y_min, x_max, y_max })
    }
}

/// Dense row-major depth image in meters. A value of 0 encodes missing depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    values: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, AcfError> {
        if values.len() != width * height {
            return Err(AcfError::ShapeMismatch(format!(
                "depth buffer has {} values for {}x{}",
                values.len(),
                width,
                height
            )));
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(AcfError::InvalidSpec("depth values must be finite and >= 0".into()));
        }
        Ok(Self { width, height, values })
    }

    pub fn constant(width: usize, height: usize, depth: f64) -> Self {
        Self::new(width, height, vec![depth; width * height]).unwrap()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bilinear interpolation at a continuous pixel coordinate. Returns `None`
    /// if any of the four neighboring pixels is out of bounds or has missing
    /// depth (value 0).
    pub fn sample_bilinear(&self, uv: Vector2<f64>) -> Option<f64> {
        // Shift into the grid of pixel centers.
        let x = uv.x - 0.5;
        let y = uv.y - 0.5;
        let x0 = x.floor();
        let y0 = y.floor();
        let (ix0, iy0) = (x0 as isize, y0 as isize);
        let mut value = 0.0;
        for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let (r, c) = (iy0 + dy, ix0 + dx);
            if r < 0 || c < 0 || r as usize >= self.height || c as usize >= self.width {
                return None;
            }
            let d = self.at(r as usize, c as usize);
            if d <= 0.0 {
                return None;
            }
            let wx = if dx == 0 { 1.0 - (x - x0) } else { x - x0 };
            let wy = if dy == 0 { 1.0 - (y - y0) } else { y - y0 };
            value += wx * wy * d;
        }
        Some(value)
    }
}

/// One sampled seed: its pixel location, interpolated depth and back-projected
/// camera-frame position. Invalid seeds carry no 3D point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub uv: Vector2<f64>,
    pub depth: f64,
    pub point3d: Option<Vector3<f64>>,
}

/// The n-by-n seed grid of one ROI. Always holds exactly n^2 entries; the
/// validity flags track which seeds back-projected successfully.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedGrid {
    pub n: usize,
    pub seeds: Vec<Seed>,
}

impl SeedGrid {
    pub fn is_valid(&self, i: usize) -> bool {
        self.seeds[i].point3d.is_some()
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }
}

/// Samples an n-by-n seed grid over `roi`, interpolating depth bilinearly and
/// back-projecting valid seeds.
pub fn sample_seeds(
    roi: Roi,
    depth: &DepthImage,
    intrinsics: &CameraIntrinsics,
    n: usize,
) -> Result<SeedGrid, AcfError> {
    if n < 1 {
        return Err(AcfError::InvalidSpec("seed grid side must be >= 1".into()));
    }
    let (w, h) = (depth.width as f64, depth.height as f64);
    if roi.x_max <= 0.0 || roi.y_max <= 0.0 || roi.x_min >= w || roi.y_min >= h {
        return Err(AcfError::RoiOutOfImage);
    }
    let du = (roi.x_max - roi.x_min) / n as f64;
    let dv = (roi.y_max - roi.y_min) / n as f64;
    let mut seeds = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let uv = Vector2::new(
                roi.x_min + (col as f64 + 0.5) * du,
                roi.y_min + (row as f64 + 0.5) * dv,
            );
            let seed = match depth.sample_bilinear(uv) {
                Some(d) if d > 0.0 => Seed {
                    uv,
                    depth: d,
                    point3d: Some(intrinsics.backproject(uv, d)?),
                },
                _ => Seed { uv, depth: 0.0, point3d: None },
            };
            seeds.push(seed);
        }
    }
    Ok(SeedGrid { n, seeds })
}
