//! Collective emission of atom chains coupled to a chiral nanofiber mode.

pub mod couplings;
pub mod error;
pub mod fiber;
pub mod geometry;
pub mod linalg;
pub mod lindblad;
pub mod sparse;
pub mod spectral;
pub mod tomography;
pub mod weak_drive;

pub use error::{Error, Result};
