//! Localized orthogonal decomposition for the nonlinear Schrödinger
//! equation with wave operator.

pub mod coefficient;
pub mod conservation;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod linalg;
pub mod lod;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod sparse;
pub mod time;

pub use error::{Error, Result};
