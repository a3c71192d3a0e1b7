//! Linearized two-cavity optomechanics: exact and rotating-wave scattering,
//! Gaussian output moments, and the CHSH violation functional `F = C² + D²`.
//!
//! Units: all rates in units of the mechanical frequency, ħ = 1.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod moments;
pub mod numeric;
pub mod pipeline;
pub mod sensitivity;

pub use bell::{BellCd, BellMetrics, DetectionConfig};
pub use dynamics::{CoefficientSet, ScatteringMatrix};
pub use error::{Error, Result};
pub use model::{InputState, RawDriveSpec, StabilityReport, SystemParams};
pub use moments::{CorrelatorSet, OutputGaussianState, OutputMap};
pub use pipeline::Solver;
pub use sensitivity::{Bath, SensitivityCoefficients};

pub use num_complex::Complex64;
