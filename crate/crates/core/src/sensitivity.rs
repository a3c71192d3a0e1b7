//! First-order noise sensitivity of `F`, the small-drive violation boundary
//! and the noise-optimal squeezing ratio.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{check_stability, InputState, SystemParams};
use crate::numeric::{bisect, maximize};
use crate::pipeline::{output_map, violation_of_map, Solver};

/// Finite-difference step in the bath occupation.
pub const FD_STEP: f64 = 1e-4;

/// Analytic lowest-order slopes, in their reference form (signs included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityCoefficients {
    pub f0: f64,
    pub fm: f64,
    pub fe: f64,
    pub fi: f64,
    pub r: f64,
    pub r_e: f64,
    pub r_i: f64,
    pub c_minus: f64,
}

impl SensitivityCoefficients {
    /// `F = F0 − Fm n_m − Fe n_e − Fi n_i` with the reference signs.
    pub fn literal_composition(&self, n_m: f64, n_e: f64, n_i: f64) -> f64 {
        self.f0 - self.fm * n_m - self.fe * n_e - self.fi * n_i
    }

    /// Same expansion with every slope taken as a loss, `F0 − |F_x| n_x`.
    pub fn physical_composition(&self, n_m: f64, n_e: f64, n_i: f64) -> f64 {
        self.f0 - self.fm.abs() * n_m - self.fe.abs() * n_e - self.fi.abs() * n_i
    }

    /// Analytic slope for a bath.
    pub fn slope(&self, bath: Bath) -> Option<f64> {
        match bath {
            Bath::Mechanical => Some(self.fm),
            Bath::External => Some(self.fe),
            Bath::Internal => Some(self.fi),
            _ => None,
        }
    }
}

/// `F0 = (2r − 1)² + 4r²`.
pub fn f0(r: f64) -> f64 {
    (2.0 * r - 1.0).powi(2) + 4.0 * r * r
}

/// Common bracket `[(2r−1)² + r²(16r−1)]/r` of the cavity slopes.
fn cavity_bracket(r: f64) -> f64 {
    ((2.0 * r - 1.0).powi(2) + r * r * (16.0 * r - 1.0)) / r
}

pub fn sensitivity_coefficients(r: f64, r_e: f64, c_minus: f64) -> Result<SensitivityCoefficients> {
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid("r", "need 0 < r < 1"));
    }
    if !(r_e > 0.0 && r_e <= 1.0) {
        return Err(invalid("r_e", "need 0 < r_e ≤ 1"));
    }
    if !(c_minus > 0.0 && c_minus.is_finite()) {
        return Err(invalid("c_minus", "must be positive"));
    }
    let r_i = 1.0 - r_e;
    let fm = -2.0 * ((2.0 * r - 1.0).powi(2) + 2.0 * r * r * (10.0 * r - 1.0)) / c_minus;
    let fe = -cavity_bracket(r) * (r_e * r_e + r_i * r_i) / r_e;
    let fi = -cavity_bracket(r) * r_i;
    Ok(SensitivityCoefficients {
        f0: f0(r),
        fm,
        fe,
        fi,
        r,
        r_e,
        r_i,
        c_minus,
    })
}

/// Thermal baths that can be perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bath {
    Mechanical,
    /// Both external ports together.
    External,
    /// Both internal-loss ports together.
    Internal,
    ExternalA,
    ExternalC,
    InternalA,
    InternalC,
}

impl Bath {
    pub const PRIMARY: [Bath; 3] = [Bath::Mechanical, Bath::Internal, Bath::External];

    pub fn name(self) -> &'static str {
        match self {
            Bath::Mechanical => "mechanical",
            Bath::External => "external",
            Bath::Internal => "internal",
            Bath::ExternalA => "external_a",
            Bath::ExternalC => "external_c",
            Bath::InternalA => "internal_a",
            Bath::InternalC => "internal_c",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Bath::Mechanical,
            Bath::External,
            Bath::Internal,
            Bath::ExternalA,
            Bath::ExternalC,
            Bath::InternalA,
            Bath::InternalC,
        ]
        .into_iter()
        .find(|b| b.name() == s)
    }

    /// Inputs with this bath's occupations shifted by `dn`.
    pub fn shifted(self, inputs: &InputState, dn: f64) -> InputState {
        let mut out = *inputs;
        match self {
            Bath::Mechanical => out.n_m += dn,
            Bath::External => {
                out.n_e_a += dn;
                out.n_e_c += dn;
            }
            Bath::Internal => {
                out.n_i_a += dn;
                out.n_i_c += dn;
            }
            Bath::ExternalA => out.n_e_a += dn,
            Bath::ExternalC => out.n_e_c += dn,
            Bath::InternalA => out.n_i_a += dn,
            Bath::InternalC => out.n_i_c += dn,
        }
        out
    }

    /// Inputs with this bath set to `n` (others untouched).
    pub fn with_occupation(self, inputs: &InputState, n: f64) -> InputState {
        let mut out = *inputs;
        match self {
            Bath::Mechanical => out.n_m = n,
            Bath::External => {
                out.n_e_a = n;
                out.n_e_c = n;
            }
            Bath::Internal => {
                out.n_i_a = n;
                out.n_i_c = n;
            }
            Bath::ExternalA => out.n_e_a = n,
            Bath::ExternalC => out.n_e_c = n,
            Bath::InternalA => out.n_i_a = n,
            Bath::InternalC => out.n_i_c = n,
        }
        out
    }
}

/// Central difference `dF/dn` through the full solve. The moments are affine
/// in the occupations, so the stencil may extend below zero.
pub fn finite_difference_sensitivity(p: &SystemParams, inputs: &InputState, bath: Bath) -> Result<f64> {
    finite_difference_with(p, inputs, bath, Solver::Full, FD_STEP)
}

pub fn finite_difference_with(
    p: &SystemParams,
    inputs: &InputState,
    bath: Bath,
    solver: Solver,
    step: f64,
) -> Result<f64> {
    inputs.validate()?;
    let report = check_stability(p);
    if !report.stable {
        return Err(invalid(
            "params",
            format!("unstable configuration (max Re λ = {:e})", report.max_real_part),
        ));
    }
    let map = output_map(p, 0.0, solver)?;
    let up = violation_of_map(&map, &bath.shifted(inputs, step))?;
    let down = violation_of_map(&map, &bath.shifted(inputs, -step))?;
    Ok((up - down) / (2.0 * step))
}

/// Small-drive violation boundary `α_i(r̄)`.
pub fn alpha_boundary(r_bar: f64, r_e: f64) -> Result<f64> {
    if !(r_bar > 0.0 && r_bar < 1.0) {
        return Err(invalid("r_bar", "need 0 < r̄ < 1"));
    }
    if !(r_e > 0.0 && r_e <= 1.0) {
        return Err(invalid("r_e", "need 0 < r_e ≤ 1"));
    }
    let num = r_e * r_bar * boundary_polynomial(r_bar);
    let k0 = 28.0 * r_e * r_e;
    let k1 = 2.0 * (1.0 - 2.0 * r_e + 4.0 * r_e * r_e);
    let k2 = 2.0 * (1.0 - r_e).powi(2);
    let radicand = num / (k0 * r_bar * r_bar + k1 * r_bar + k2);
    if !(radicand >= 0.0) {
        return Err(Error::NoBoundary { r: r_bar, radicand });
    }
    Ok(radicand.sqrt())
}

/// `1 − 4r − 6r² − 12r³`.
pub fn boundary_polynomial(r: f64) -> f64 {
    1.0 - 4.0 * r - 6.0 * r * r - 12.0 * r * r * r
}

/// Positive root of [`boundary_polynomial`], where the boundary meets `α_i = 0`.
pub fn boundary_polynomial_root() -> f64 {
    bisect(boundary_polynomial, 0.0, 0.5, 1e-15).expect("polynomial changes sign on (0, 1/2)")
}

/// Largest violating `r` of the noiseless large-cooperativity limit,
/// `(15 + 4√14)^(−1/2) = 2√2 − √7`.
pub fn large_cooperativity_threshold() -> f64 {
    (15.0 + 4.0 * 14f64.sqrt()).powf(-0.5)
}

/// Tolerable equal internal occupation `n_T = (1/2 − F0)/F_T` with
/// `F_T = F_i / r_i`.
pub fn max_tolerable_noise(r: f64) -> f64 {
    (0.5 - f0(r)) / (-cavity_bracket(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPoint {
    pub r_opt: f64,
    pub n_t: f64,
}

/// Searched interval for [`optimal_r`].
pub const R_SEARCH: (f64, f64) = (1e-4, 0.25 - 1e-4);

/// `r` maximizing [`max_tolerable_noise`] on `(0, 1/4)`.
pub fn optimal_r(r_e: f64) -> Result<OptimalPoint> {
    if !(r_e > 0.0 && r_e < 1.0) {
        return Err(invalid("r_e", "need 0 < r_e < 1"));
    }
    let (lo, hi) = R_SEARCH;
    if !(lo < hi) {
        return Err(Error::EmptyInterval);
    }
    let (r_opt, n_t) = maximize(max_tolerable_noise, lo, hi, 241, 1e-12);
    Ok(OptimalPoint { r_opt, n_t })
}
