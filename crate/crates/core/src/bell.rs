//! Balanced-homodyne style detection chain and the CHSH functional.
//!
//! Each output is mixed with a local oscillator `β e^{iθ}` on a beam splitter
//! of transmissivity `η`:
//! `d = √η a + i√(1−η) β e^{iθ}` and `e = √η β e^{iθ} + i√(1−η) a`.
//! Normally ordered intensity correlations of the four detectors give the
//! correlation coefficient `E(θ, φ)`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::moments::{wick_fourth_moment, CorrelatorSet, OutputGaussianState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionConfig {
    pub eta_1: f64,
    pub eta_2: f64,
    pub beta_1: f64,
    pub beta_2: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            eta_1: 0.5,
            eta_2: 0.5,
            beta_1: 1.0,
            beta_2: 1.0,
            theta: 0.0,
            phi: 0.0,
        }
    }
}

impl DetectionConfig {
    /// Balanced splitters with equal LO amplitude `beta`.
    pub fn balanced(beta: f64, theta: f64, phi: f64) -> Self {
        Self {
            beta_1: beta,
            beta_2: beta,
            theta,
            phi,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [("eta_1", self.eta_1), ("eta_2", self.eta_2)] {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(invalid(name, "transmissivity must lie in (0, 1)"));
            }
        }
        for (name, beta) in [("beta_1", self.beta_1), ("beta_2", self.beta_2)] {
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(invalid(name, "LO amplitude must be finite and nonnegative"));
            }
        }
        if !(self.theta.is_finite() && self.phi.is_finite()) {
            return Err(invalid("theta/phi", "LO phases must be finite"));
        }
        Ok(())
    }
}

/// `(x, y)` of a detected field `x · signal + y`.
fn port_fields(eta: f64, beta: f64, phase: f64) -> [(Complex64, Complex64); 2] {
    let t = eta.sqrt();
    let s = (1.0 - eta).sqrt();
    let lo = Complex64::from_polar(beta, phase);
    let i = Complex64::new(0.0, 1.0);
    [(Complex64::new(t, 0.0), i * s * lo), (i * s, lo * t)]
}

/// Quadrature `X^θ = −i(a e^{−iθ} − a† e^{iθ})` of a mean amplitude.
pub fn quadrature_mean(mean: Complex64, theta: f64) -> f64 {
    2.0 * (mean * Complex64::from_polar(1.0, -theta)).im
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorIntensities {
    pub d1: f64,
    pub e1: f64,
    pub d2: f64,
    pub e2: f64,
}

pub fn detector_intensities(state: &OutputGaussianState, cfg: &DetectionConfig) -> DetectorIntensities {
    let one = |mean: Complex64, n: f64, (x, y): (Complex64, Complex64)| (x * mean + y).norm_sqr() + x.norm_sqr() * n;
    let [d1, e1] = port_fields(cfg.eta_1, cfg.beta_1, cfg.theta);
    let [d2, e2] = port_fields(cfg.eta_2, cfg.beta_2, cfg.phi);
    DetectorIntensities {
        d1: one(state.mean_a, state.n_aa, d1),
        e1: one(state.mean_a, state.n_aa, e1),
        d2: one(state.mean_c, state.n_cc, d2),
        e2: one(state.mean_c, state.n_cc, e2),
    }
}

/// Normally ordered joint intensities `R_{s1 s2}`; `+` is the `d` detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensityCorrelations {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

pub fn intensity_correlations(state: &OutputGaussianState, cfg: &DetectionConfig) -> IntensityCorrelations {
    let first = port_fields(cfg.eta_1, cfg.beta_1, cfg.theta);
    let second = port_fields(cfg.eta_2, cfg.beta_2, cfg.phi);
    let r = |i: usize, j: usize| {
        let (xa, ya) = first[i];
        let (xc, yc) = second[j];
        wick_fourth_moment(&state.affine(xa, ya, xc, yc))
    };
    IntensityCorrelations {
        pp: r(0, 0),
        pm: r(0, 1),
        mp: r(1, 0),
        mm: r(1, 1),
    }
}

pub fn correlation_coefficient(pp: f64, pm: f64, mp: f64, mm: f64) -> Result<f64> {
    let den = pp + mm + mp + pm;
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok((pp + mm - mp - pm) / den)
}

/// `E(θ, φ)` through the detection chain.
pub fn chain_correlation(state: &OutputGaussianState, cfg: &DetectionConfig) -> Result<f64> {
    let r = intensity_correlations(state, cfg);
    correlation_coefficient(r.pp, r.pm, r.mp, r.mm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellCd {
    pub c: f64,
    pub d: f64,
    pub z: f64,
    pub beta_opt: f64,
}

impl BellCd {
    pub fn f(&self) -> f64 {
        self.c * self.c + self.d * self.d
    }
}

pub fn bell_cd(corr: &CorrelatorSet) -> Result<BellCd> {
    let fourth = corr.fourth.max(0.0);
    let z = 2.0 * fourth.sqrt() + corr.n_a + corr.n_c;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NoSignal { z });
    }
    Ok(BellCd {
        c: 2.0 * corr.cross_phase.norm() / z,
        d: 2.0 * corr.cross_squeeze.norm() / z,
        z,
        beta_opt: fourth.powf(0.25),
    })
}

/// Two LO phase settings per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleSet {
    pub theta_1: f64,
    pub phi_1: f64,
    pub theta_2: f64,
    pub phi_2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshOptimum {
    pub s_max: f64,
    pub zeta_0: f64,
    pub zeta: f64,
    /// Optimal settings in the phase-absorbed angles.
    pub angles: AngleSet,
}

/// `S_max = 2√2 √(C² + D²)` at `ζ = ζ₀ + π/2`, `tan ζ₀ = (C+D)/(C−D)`.
pub fn chsh_s_max(c: f64, d: f64) -> Result<ChshOptimum> {
    if !(c >= 0.0 && d >= 0.0) {
        return Err(invalid("C/D", "must be nonnegative"));
    }
    if c == 0.0 && d == 0.0 {
        return Err(Error::NoSignal { z: 0.0 });
    }
    let zeta_0 = (c + d).atan2(c - d);
    let zeta = zeta_0 + FRAC_PI_2;
    Ok(ChshOptimum {
        s_max: 2.0 * SQRT_2 * (c * c + d * d).sqrt(),
        zeta_0,
        zeta,
        angles: AngleSet {
            theta_1: 0.0,
            phi_1: -zeta,
            theta_2: -FRAC_PI_2,
            phi_2: zeta,
        },
    })
}

/// Offsets with `θ̄ = θ + shift_theta` and `φ̄ = φ + shift_phi`, chosen so that
/// `E = C cos(θ̄ − φ̄) + D cos(θ̄ + φ̄)` at balanced detection and optimal LO.
pub fn phase_shifts(corr: &CorrelatorSet) -> (f64, f64) {
    let p = corr.cross_phase.arg();
    let q = corr.cross_squeeze.arg();
    (0.5 * (p - q + PI), 0.5 * (-p - q + PI))
}

/// Raw LO phases for a phase-absorbed angle set.
pub fn raw_angles(barred: &AngleSet, corr: &CorrelatorSet) -> AngleSet {
    let (st, sp) = phase_shifts(corr);
    AngleSet {
        theta_1: barred.theta_1 - st,
        phi_1: barred.phi_1 - sp,
        theta_2: barred.theta_2 - st,
        phi_2: barred.phi_2 - sp,
    }
}

/// `C cos(θ̄ − φ̄) + D cos(θ̄ + φ̄)` evaluated at raw LO phases.
pub fn closed_form_correlation(corr: &CorrelatorSet, cd: &BellCd, theta: f64, phi: f64) -> f64 {
    let (st, sp) = phase_shifts(corr);
    let (tb, pb) = (theta + st, phi + sp);
    cd.c * (tb - pb).cos() + cd.d * (tb + pb).cos()
}

/// `S = E(θ₁,φ₁) + E(θ₂,φ₂) + E(θ₁,φ₂) − E(θ₂,φ₁)` through the detection
/// chain at the given raw angles. `base` fixes transmissivities and LO
/// amplitudes.
pub fn chsh_from_chain(state: &OutputGaussianState, base: &DetectionConfig, raw: &AngleSet) -> Result<f64> {
    let e = |theta: f64, phi: f64| chain_correlation(state, &DetectionConfig { theta, phi, ..*base });
    Ok(
        e(raw.theta_1, raw.phi_1)? + e(raw.theta_2, raw.phi_2)? + e(raw.theta_1, raw.phi_2)?
            - e(raw.theta_2, raw.phi_1)?,
    )
}

/// `|S|` from the chain at the optimal settings with balanced splitters and
/// `β = beta_opt`.
pub fn verify_chsh_from_angles(state: &OutputGaussianState) -> Result<f64> {
    let corr = state.correlators();
    let cd = bell_cd(&corr)?;
    let opt = chsh_s_max(cd.c, cd.d)?;
    let raw = raw_angles(&opt.angles, &corr);
    Ok(chsh_from_chain(state, &DetectionConfig::balanced(cd.beta_opt, 0.0, 0.0), &raw)?.abs())
}

/// Everything derived from one correlator set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellMetrics {
    pub c: f64,
    pub d: f64,
    pub z: f64,
    pub f: f64,
    pub beta_opt: f64,
    pub s_max: f64,
    pub zeta_0: f64,
    pub barred: AngleSet,
    pub raw: AngleSet,
    pub violation: bool,
}

impl BellMetrics {
    pub fn from_correlators(corr: &CorrelatorSet) -> Result<Self> {
        let cd = bell_cd(corr)?;
        let f = cd.f();
        let (s_max, zeta_0, barred) = match chsh_s_max(cd.c, cd.d) {
            Ok(opt) => (opt.s_max, opt.zeta_0, opt.angles),
            Err(_) => (
                0.0,
                0.0,
                AngleSet {
                    theta_1: 0.0,
                    phi_1: 0.0,
                    theta_2: -FRAC_PI_2,
                    phi_2: 0.0,
                },
            ),
        };
        Ok(Self {
            c: cd.c,
            d: cd.d,
            z: cd.z,
            f,
            beta_opt: cd.beta_opt,
            s_max,
            zeta_0,
            barred,
            raw: raw_angles(&barred, corr),
            violation: f > 0.5,
        })
    }
}
