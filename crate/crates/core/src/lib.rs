//! Affordance Coordinate Frame (ACF) estimation library.
//!
//! An ACF is a 3D keypoint with a directed unit axis attached to a functional
//! object part (container, handle, stir, scoop). This crate implements the
//! geometric pipeline around ACFs:
//!
//! - seed sampling from depth ROIs and pinhole back-projection ([`camera`])
//! - the voting loss family with analytic gradients ([`losses`])
//! - voter formation, Mean Shift mode finding and the three axis estimators
//!   ([`estimation`])
//! - part-to-object association via affinity field directions ([`association`])
//! - grasp pose and pour/stir trajectory composition ([`manipulation`])
//! - combined angle/translation mAP evaluation ([`eval`])
//! - a synthetic scene generator and emulated per-seed predictions standing in
//!   for a trained network ([`synthetic`]), plus brute-force oracles ([`oracle`])
//!
//! Everything is pure and deterministic: randomized procedures take explicit
//! seeds and identical inputs give bit-identical outputs.

pub mod acf;
pub mod association;
pub mod camera;
pub mod error;
pub mod estimation;
pub mod eval;
pub mod io;
pub mod losses;
pub mod manipulation;
pub mod oracle;
pub mod pipeline;
pub mod synthetic;

pub use acf::{actions_of, compatible_pairs, parts_of, Acf, ActionClass, ObjectClass, PartClass, PartInstance};
pub use error::AcfError;
