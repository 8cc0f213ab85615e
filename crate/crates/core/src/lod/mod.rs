//! Localized orthogonal decomposition: shifted form, patch correctors, the
//! corrected basis and its cache.

pub mod basis;
pub mod cache;
pub mod corrector;
pub mod form;

pub use basis::{build_from_setup, build_lod_basis, localization_decay_study, DecayRow, Layers, LodBasis};
pub use cache::{basis_key, BasisCache, CacheEntry};
pub use corrector::{compute_corrector, CorrectorSetup, PatchSolver, PatchVector};
pub use form::{auto_shift, AssembledForm, BilinearFormSpec, Shift};
