//! The ACF representation and the part/object/action taxonomy.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::AcfError;

const UNIT_TOL: f64 = 1e-9;

/// Affordance Coordinate Frame: a 3D keypoint plus a directed unit axis with
/// its origin at the keypoint, expressed in the camera frame (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acf {
    keypoint: Vector3<f64>,
    axis: Vector3<f64>,
}

impl Acf {
    /// Builds an ACF, checking that the keypoint is finite and the axis is a
    /// unit vector within `1e-9`.
    pub fn new(keypoint: Vector3<f64>, axis: Vector3<f64>) -> Result<Self, AcfError> {
        if !keypoint.iter().all(|c| c.is_finite()) {
            return Err(AcfError::InvalidSpec("non-finite keypoint".into()));
        }
        if (axis.norm() - 1.0).abs() > UNIT_TOL {
            return Err(AcfError::DegenerateAxis(format!(
                "axis norm {} is not 1 within 1e-9",
                axis.norm()
            )));
        }
        Ok(Self { keypoint, axis })
    }

    /// Builds an ACF from an arbitrary nonzero direction, normalizing it.
    pub fn from_direction(keypoint: Vector3<f64>, direction: Vector3<f64>) -> Result<Self, AcfError> {
        let norm = direction.norm();
        if norm < UNIT_TOL {
            return Err(AcfError::ZeroVector);
        }
        Self::new(keypoint, direction / norm)
    }

    pub fn keypoint(&self) -> Vector3<f64> {
        self.keypoint
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }
}

/// The four predefined affordance parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartClass {
    Container,
    Handle,
    Stir,
    Scoop,
}

impl PartClass {
    pub const ALL: [PartClass; 4] = [
        PartClass::Container,
        PartClass::Handle,
        PartClass::Stir,
        PartClass::Scoop,
    ];
}

/// The six object categories of the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Bottle,
    Mug,
    Bowl,
    Spoon,
    Spatula,
    Hammer,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 6] = [
        ObjectClass::Bottle,
        ObjectClass::Mug,
        ObjectClass::Bowl,
        ObjectClass::Spoon,
        ObjectClass::Spatula,
        ObjectClass::Hammer,
    ];
}

/// The five supported actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    Grasp,
    Stir,
    Scoop,
    Contain,
    Pour,
}

/// Object-to-part rows of the object/part/action relation table.
pub fn parts_of(object: ObjectClass) -> Vec<PartClass> {
    match object {
        ObjectClass::Bottle | ObjectClass::Bowl => vec![PartClass::Container],
        ObjectClass::Mug => vec![PartClass::Container, PartClass::Handle],
        ObjectClass::Spoon | ObjectClass::Spatula => vec![PartClass::Stir, PartClass::Scoop],
        ObjectClass::Hammer => vec![PartClass::Stir],
    }
}

/// Part-to-action rows of the object/part/action relation table.
pub fn actions_of(part: PartClass) -> Vec<ActionClass> {
    match part {
        PartClass::Container => vec![ActionClass::Grasp, ActionClass::Contain, ActionClass::Pour],
        PartClass::Handle => vec![ActionClass::Grasp],
        PartClass::Stir => vec![ActionClass::Grasp, ActionClass::Stir, ActionClass::Scoop],
        PartClass::Scoop => vec![ActionClass::Scoop],
    }
}

/// Ordered (dependent, anchor) part pairs that can compose into one object.
/// These are the only multi-part compositions the taxonomy implies.
pub fn compatible_pairs() -> Vec<(PartClass, PartClass)> {
    vec![
        (PartClass::Handle, PartClass::Container),
        (PartClass::Stir, PartClass::Scoop),
    ]
}

/// A detected part: its class, estimated ACF and detection confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct PartInstance {
    pub part_class: PartClass,
    pub acf: Acf,
    pub score: f64,
}

impl PartInstance {
    pub fn new(part_class: PartClass, acf: Acf, score: f64) -> Result<Self, AcfError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(AcfError::InvalidSpec(format!("score {score} outside [0,1]")));
        }
        Ok(Self { part_class, acf, score })
    }
}
