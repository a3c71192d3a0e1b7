//! Device parameters, probe/bath state, drive linearization and stability.
//!
//! Rates and frequencies are in units of the mechanical frequency, with ħ = 1.
//! Only [`bose_occupancy`] works in SI units.

use nalgebra::{Matrix6, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::drift_matrix;
use crate::error::{invalid, Error, Result};

/// Planck constant in J·s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant in J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Linearized two-cavity / one-resonator device.
///
/// `delta_x = ω_d,x − ω_x` is the pump detuning. The blue pump on cavity A
/// sits at `+omega_m`, the red pump on cavity C at `−omega_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_m: f64,
    pub kappa_a: f64,
    pub kappa_c: f64,
    pub kappa_e_a: f64,
    pub kappa_e_c: f64,
    pub gamma: f64,
    pub g_plus: f64,
    pub g_minus: f64,
    pub delta_a: f64,
    pub delta_c: f64,
}

impl SystemParams {
    /// Symmetric cavities (`κ_a = κ_c = kappa`, shared `r_e`) on the sideband
    /// pumps, with `G_plus = r · G_minus`.
    pub fn symmetric(kappa: f64, r_e: f64, gamma: f64, g_minus: f64, r: f64) -> Self {
        Self {
            omega_m: 1.0,
            kappa_a: kappa,
            kappa_c: kappa,
            kappa_e_a: r_e * kappa,
            kappa_e_c: r_e * kappa,
            gamma,
            g_plus: r * g_minus,
            g_minus,
            delta_a: 1.0,
            delta_c: -1.0,
        }
    }

    /// Same device with the blue coupling set to `r · G_minus`.
    pub fn with_r(mut self, r: f64) -> Self {
        self.g_plus = r * self.g_minus;
        self
    }

    pub fn kappa_i_a(&self) -> f64 {
        self.kappa_a - self.kappa_e_a
    }

    pub fn kappa_i_c(&self) -> f64 {
        self.kappa_c - self.kappa_e_c
    }

    /// `G_plus / G_minus`.
    pub fn r(&self) -> f64 {
        self.g_plus / self.g_minus
    }

    /// External coupling ratio of cavity A.
    pub fn r_e(&self) -> f64 {
        self.kappa_e_a / self.kappa_a
    }

    /// `4 G_minus² / (κ γ)`.
    pub fn cooperativity(&self) -> f64 {
        4.0 * self.g_minus * self.g_minus / (self.kappa_c * self.gamma)
    }

    pub fn is_symmetric(&self) -> bool {
        let tol = 1e-12 * self.kappa_a.abs().max(self.kappa_c.abs());
        (self.kappa_a - self.kappa_c).abs() <= tol && (self.kappa_e_a - self.kappa_e_c).abs() <= tol
    }

    /// Checks rates and couplings, but not the ordering `G_plus < G_minus`
    /// (so decoupled or unstable devices can still be solved).
    pub fn validate_rates(&self) -> Result<()> {
        let finite = [
            self.omega_m,
            self.kappa_a,
            self.kappa_c,
            self.kappa_e_a,
            self.kappa_e_c,
            self.gamma,
            self.g_plus,
            self.g_minus,
            self.delta_a,
            self.delta_c,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("params", "all entries must be finite"));
        }
        if self.omega_m <= 0.0 {
            return Err(invalid("omega_m", "must be positive"));
        }
        for (name, kappa, kappa_e) in [
            ("kappa_e_a", self.kappa_a, self.kappa_e_a),
            ("kappa_e_c", self.kappa_c, self.kappa_e_c),
        ] {
            if kappa <= 0.0 {
                return Err(invalid(name, "cavity linewidth must be positive"));
            }
            if kappa_e <= 0.0 || kappa_e > kappa {
                return Err(invalid(name, format!("need 0 < {kappa_e} ≤ {kappa}")));
            }
        }
        if self.gamma <= 0.0 {
            return Err(invalid("gamma", "must be positive"));
        }
        if self.g_plus < 0.0 {
            return Err(invalid("g_plus", "must be nonnegative"));
        }
        if self.g_minus < 0.0 {
            return Err(invalid("g_minus", "must be nonnegative"));
        }
        Ok(())
    }

    /// Full invariant check including `G_plus < G_minus`.
    pub fn validate(&self) -> Result<()> {
        self.validate_rates()?;
        if self.g_plus >= self.g_minus {
            return Err(Error::CouplingOrder {
                g_plus: self.g_plus,
                g_minus: self.g_minus,
            });
        }
        Ok(())
    }
}

/// Weak coherent probes plus the occupations of the five independent baths.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InputState {
    pub alpha_i: Complex64,
    pub chi_i: Complex64,
    pub n_e_a: f64,
    pub n_e_c: f64,
    pub n_i_a: f64,
    pub n_i_c: f64,
    pub n_m: f64,
}

impl InputState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Equal real probes `α_i = χ_i = alpha` on both external ports.
    pub fn probe(alpha: f64) -> Self {
        Self {
            alpha_i: Complex64::new(alpha, 0.0),
            chi_i: Complex64::new(alpha, 0.0),
            ..Self::default()
        }
    }

    /// Sets both external occupations.
    pub fn with_external(mut self, n: f64) -> Self {
        self.n_e_a = n;
        self.n_e_c = n;
        self
    }

    /// Sets both internal-loss occupations.
    pub fn with_internal(mut self, n: f64) -> Self {
        self.n_i_a = n;
        self.n_i_c = n;
        self
    }

    pub fn with_mechanical(mut self, n: f64) -> Self {
        self.n_m = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let amps = [self.alpha_i.re, self.alpha_i.im, self.chi_i.re, self.chi_i.im];
        if amps.iter().any(|v| !v.is_finite()) {
            return Err(invalid("alpha_i/chi_i", "probe amplitudes must be finite"));
        }
        for (name, n) in [
            ("n_e_a", self.n_e_a),
            ("n_e_c", self.n_e_c),
            ("n_i_a", self.n_i_a),
            ("n_i_c", self.n_i_c),
            ("n_m", self.n_m),
        ] {
            if !(n.is_finite() && n >= 0.0) {
                return Err(invalid(name, "occupation must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// Un-linearized drive description: single-photon couplings, pump rates and
/// frequencies. `alpha_in_x` is the pump rate entering the intracavity
/// equation, so an on-resonance pump gives `α_x = 2 α_in,x / κ_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawDriveSpec {
    pub g_a: f64,
    pub g_c: f64,
    pub alpha_in_a: Complex64,
    pub alpha_in_c: Complex64,
    pub omega_a: f64,
    pub omega_c: f64,
    pub omega_d_a: f64,
    pub omega_d_c: f64,
    pub omega_m: f64,
    pub kappa_a: f64,
    pub kappa_c: f64,
    pub kappa_e_a: f64,
    pub kappa_e_c: f64,
    pub gamma: f64,
    /// Require `ω_d,a − ω_a = +ω_m` and `ω_d,c − ω_c = −ω_m`.
    pub require_sideband: bool,
}

/// Linearized couplings together with the steady state they came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub params: SystemParams,
    pub alpha_a: Complex64,
    pub alpha_c: Complex64,
    pub b_s: Complex64,
    pub iterations: usize,
}

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 1000;
const FIXED_POINT_DAMPING: f64 = 0.5;
const SIDEBAND_TOL: f64 = 1e-9;

/// Intracavity amplitudes for a given real displacement `x = b_s + b_s*`.
fn cavity_amplitudes(spec: &RawDriveSpec, x: f64) -> Result<(Complex64, Complex64)> {
    let amp = |alpha_in: Complex64, kappa: f64, omega: f64, omega_d: f64, g: f64| {
        let den = Complex64::new(0.5 * kappa, omega - omega_d + g * x);
        if den.norm() == 0.0 {
            Err(invalid("kappa", "steady-state denominator vanishes"))
        } else {
            Ok(alpha_in / den)
        }
    };
    Ok((
        amp(spec.alpha_in_a, spec.kappa_a, spec.omega_a, spec.omega_d_a, spec.g_a)?,
        amp(spec.alpha_in_c, spec.kappa_c, spec.omega_c, spec.omega_d_c, spec.g_c)?,
    ))
}

fn mechanical_displacement(spec: &RawDriveSpec, alpha_a: Complex64, alpha_c: Complex64) -> Complex64 {
    let force = spec.g_a * alpha_a.norm_sqr() + spec.g_c * alpha_c.norm_sqr();
    Complex64::new(0.0, -force) / Complex64::new(0.5 * spec.gamma, spec.omega_m)
}

/// Solves the classical steady state and returns the linearized device.
///
/// Pump phases are absorbed into the fluctuation operators, so the returned
/// couplings are the real magnitudes `|g_a α_A|` and `|g_c α_C|`. Detunings
/// include the radiation-pressure shift `g_x (b_s + b_s*)`.
pub fn linearize_drives(spec: &RawDriveSpec) -> Result<Linearization> {
    for (name, v) in [
        ("kappa_a", spec.kappa_a),
        ("kappa_c", spec.kappa_c),
        ("gamma", spec.gamma),
        ("omega_m", spec.omega_m),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(name, "must be positive"));
        }
    }
    if spec.require_sideband {
        for (cavity, detuning, expected) in [
            ('a', spec.omega_d_a - spec.omega_a, spec.omega_m),
            ('c', spec.omega_d_c - spec.omega_c, -spec.omega_m),
        ] {
            if (detuning - expected).abs() > SIDEBAND_TOL * spec.omega_m {
                return Err(Error::SidebandMismatch {
                    cavity,
                    detuning,
                    expected,
                });
            }
        }
    }

    let mut x = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < FIXED_POINT_MAX_ITER {
        iterations += 1;
        let (alpha_a, alpha_c) = cavity_amplitudes(spec, x)?;
        let x_new = 2.0 * mechanical_displacement(spec, alpha_a, alpha_c).re;
        residual = (x_new - x).abs();
        x += FIXED_POINT_DAMPING * (x_new - x);
        if residual <= FIXED_POINT_TOL * x.abs().max(1.0) {
            break;
        }
    }
    if residual > FIXED_POINT_TOL * x.abs().max(1.0) || !x.is_finite() {
        return Err(Error::NoConvergence { iterations, residual });
    }

    let (alpha_a, alpha_c) = cavity_amplitudes(spec, x)?;
    let b_s = mechanical_displacement(spec, alpha_a, alpha_c);
    let params = SystemParams {
        omega_m: spec.omega_m,
        kappa_a: spec.kappa_a,
        kappa_c: spec.kappa_c,
        kappa_e_a: spec.kappa_e_a,
        kappa_e_c: spec.kappa_e_c,
        gamma: spec.gamma,
        g_plus: (spec.g_a * alpha_a).norm(),
        g_minus: (spec.g_c * alpha_c).norm(),
        delta_a: spec.omega_d_a - spec.omega_a - spec.g_a * x,
        delta_c: spec.omega_d_c - spec.omega_c - spec.g_c * x,
    };
    params.validate()?;
    Ok(Linearization {
        params,
        alpha_a,
        alpha_c,
        b_s,
        iterations,
    })
}

/// Drift-matrix spectrum summary.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub max_real_part: f64,
    pub stable: bool,
    pub eigenvalues: Vec<Complex64>,
}

/// Eigenvalues of the drift matrix, computed in the real quadrature basis
/// `x = (a + a†)/√2`, `p = −i(a − a†)/√2` where the matrix is real.
pub fn check_stability(params: &SystemParams) -> StabilityReport {
    let m = drift_matrix(params);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = Matrix6::<Complex64>::zeros();
    for k in 0..3 {
        u[(2 * k, 2 * k)] = Complex64::new(s, 0.0);
        u[(2 * k, 2 * k + 1)] = Complex64::new(s, 0.0);
        u[(2 * k + 1, 2 * k)] = Complex64::new(0.0, -s);
        u[(2 * k + 1, 2 * k + 1)] = Complex64::new(0.0, s);
    }
    let real_basis = u * m * u.adjoint();
    let real: SMatrix<f64, 6, 6> = real_basis.map(|z| z.re);
    let eigenvalues: Vec<Complex64> = real.complex_eigenvalues().iter().copied().collect();
    let max_real_part = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    StabilityReport {
        max_real_part,
        stable: max_real_part < 0.0,
        eigenvalues,
    }
}

/// Bose–Einstein occupation `1/(exp(h f / k_B T) − 1)` for SI inputs.
pub fn bose_occupancy(temperature: f64, frequency: f64) -> Result<f64> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(invalid("temperature", "must be positive"));
    }
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(invalid("frequency", "must be positive"));
    }
    let x = PLANCK * frequency / (BOLTZMANN * temperature);
    Ok(1.0 / x.exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(g: f64, alpha_in_a: f64, alpha_in_c: f64) -> RawDriveSpec {
        RawDriveSpec {
            g_a: g,
            g_c: g,
            alpha_in_a: Complex64::new(alpha_in_a, 0.0),
            alpha_in_c: Complex64::new(alpha_in_c, 0.0),
            omega_a: 100.0,
            omega_c: 120.0,
            omega_d_a: 101.0,
            omega_d_c: 119.0,
            omega_m: 1.0,
            kappa_a: 0.01,
            kappa_c: 0.01,
            kappa_e_a: 0.009,
            kappa_e_c: 0.009,
            gamma: 1e-5,
            require_sideband: true,
        }
    }

    #[test]
    fn zero_coupling_is_degenerate() {
        let err = linearize_drives(&spec(0.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::CouplingOrder { g_plus, g_minus } if g_plus == 0.0 && g_minus == 0.0));
        assert!(err.to_string().contains("G_plus ≥ G_minus violated"));
    }

    #[test]
    fn single_red_drive_is_valid() {
        let lin = linearize_drives(&spec(1e-4, 0.0, 1.0)).unwrap();
        assert_eq!(lin.params.g_plus, 0.0);
        assert!(lin.params.g_minus > 0.0);
    }

    #[test]
    fn resonant_pump_matches_linewidth_limit() {
        let mut s = spec(1e-6, 1e-3, 2e-3);
        s.omega_d_a = s.omega_a;
        s.omega_d_c = s.omega_c;
        s.require_sideband = false;
        let lin = linearize_drives(&s).unwrap();
        let expected = 2.0 * 1e-3 / s.kappa_a;
        assert!((lin.alpha_a.norm() - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn fixed_point_agrees_with_plain_iteration() {
        let mut s = spec(2e-3, 0.02, 0.03);
        s.require_sideband = false;
        let lin = linearize_drives(&s).unwrap();
        // undamped iteration of the steady-state pair
        let mut bs = Complex64::new(0.0, 0.0);
        for _ in 0..200 {
            let x = 2.0 * bs.re;
            let aa = s.alpha_in_a / Complex64::new(0.5 * s.kappa_a, s.omega_a - s.omega_d_a + s.g_a * x);
            let ac = s.alpha_in_c / Complex64::new(0.5 * s.kappa_c, s.omega_c - s.omega_d_c + s.g_c * x);
            bs = Complex64::new(0.0, -(s.g_a * aa.norm_sqr() + s.g_c * ac.norm_sqr()))
                / Complex64::new(0.5 * s.gamma, s.omega_m);
        }
        assert!((lin.b_s - bs).norm() < 1e-10 * bs.norm().max(1.0));
    }

    #[test]
    fn pump_phases_are_absorbed() {
        let mut s = spec(1e-4, 0.0, 0.0);
        s.alpha_in_a = Complex64::from_polar(0.5, 1.3);
        s.alpha_in_c = Complex64::from_polar(1.0, -2.1);
        let lin = linearize_drives(&s).unwrap();
        let mut t = s;
        t.alpha_in_a = Complex64::new(0.5, 0.0);
        t.alpha_in_c = Complex64::new(1.0, 0.0);
        let lin0 = linearize_drives(&t).unwrap();
        assert!((lin.params.g_plus - lin0.params.g_plus).abs() < 1e-15);
        assert!((lin.params.g_minus - lin0.params.g_minus).abs() < 1e-15);
    }

    #[test]
    fn off_sideband_pump_rejected_when_required() {
        let mut s = spec(1e-4, 0.5, 1.0);
        s.omega_d_a = 100.5;
        assert!(matches!(
            linearize_drives(&s),
            Err(Error::SidebandMismatch { cavity: 'a', .. })
        ));
    }

    #[test]
    fn homogeneous_in_pump_amplitude() {
        let base = linearize_drives(&spec(1e-6, 0.3, 0.5)).unwrap().params;
        let scaled = {
            let mut s = spec(1e-6, 0.3, 0.5);
            s.alpha_in_a *= 3.0;
            s.alpha_in_c *= 3.0;
            linearize_drives(&s).unwrap().params
        };
        assert!((scaled.g_plus / base.g_plus - 3.0).abs() < 1e-9);
        assert!((scaled.g_minus / base.g_minus - 3.0).abs() < 1e-9);
    }

    #[test]
    fn stability_examples() {
        let p = SystemParams::symmetric(0.01, 0.9, 1e-5, 0.2, 0.0);
        assert!(check_stability(&p).stable);
        let p = SystemParams::symmetric(0.01, 0.9, 1e-7, 0.2, 0.999);
        assert!(p.cooperativity() > 1e6);
        assert!(check_stability(&p).stable);
        let p = SystemParams::symmetric(0.01, 0.9, 1e-5, 0.2, 1.05);
        assert!(!check_stability(&p).stable);
    }

    #[test]
    fn drift_spectrum_has_six_values_with_expected_trace() {
        let p = SystemParams::symmetric(0.02, 0.8, 1e-4, 0.15, 0.4);
        let rep = check_stability(&p);
        assert_eq!(rep.eigenvalues.len(), 6);
        let tr: f64 = rep.eigenvalues.iter().map(|z| z.re).sum();
        assert!((tr + 0.04 + 1e-4).abs() < 1e-12);
    }

    #[test]
    fn bose_limits_and_errors() {
        assert_eq!(bose_occupancy(1e-6, 10e9).unwrap(), 0.0);
        let hot = bose_occupancy(1e4, 1e6).unwrap();
        let classical = BOLTZMANN * 1e4 / (PLANCK * 1e6);
        assert!((hot - (classical - 0.5)).abs() / classical < 1e-6);
        assert!(bose_occupancy(0.0, 1e9).is_err());
        assert!(bose_occupancy(1.0, -1.0).is_err());
    }

    #[test]
    fn bose_monotone_on_grid() {
        let temps = [0.01, 0.1, 1.0, 10.0, 300.0];
        let freqs = [1e6, 1e8, 1e10, 1e12];
        for &t in &temps {
            for w in freqs.windows(2) {
                assert!(bose_occupancy(t, w[0]).unwrap() > bose_occupancy(t, w[1]).unwrap());
            }
        }
        for &f in &freqs {
            for w in temps.windows(2) {
                assert!(bose_occupancy(w[0], f).unwrap() < bose_occupancy(w[1], f).unwrap());
            }
        }
    }

    #[test]
    fn validation_rejects_bad_rates() {
        let mut p = SystemParams::symmetric(0.01, 0.9, 1e-5, 0.2, 0.1);
        assert!(p.validate().is_ok());
        p.kappa_e_a = 0.02;
        assert!(p.validate().is_err());
        let p = SystemParams::symmetric(0.01, 0.9, 1e-5, 0.2, 1.0);
        assert!(matches!(p.validate(), Err(Error::CouplingOrder { .. })));
        assert!(InputState::vacuum().with_internal(-1.0).validate().is_err());
    }
}
