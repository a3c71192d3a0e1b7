//! Linearized Langevin dynamics in the drive rotating frames.
//!
//! The state vector is `v = (a, a†, c, c†, b, b†)` and a component at
//! drive-frame frequency `ν` follows `x(t) ∝ e^{−iνt}`, with the convention
//! `x†(ν) ≡ (x(−ν))†`. Cavity A is pumped on its blue sideband and cavity C on
//! its red sideband. Output `a_o(ν)` therefore pairs with `c_o(−ν)`.

use nalgebra::{Matrix6, SMatrix};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{check_stability, SystemParams};

/// Condition number beyond which the frequency-domain system counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Number of input columns (five ports, each with its conjugate).
pub const N_INPUTS: usize = 10;

/// Physical input ports, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Port {
    ExternalA,
    ExternalC,
    InternalA,
    InternalC,
    Mechanical,
}

impl Port {
    pub const ALL: [Port; 5] = [
        Port::ExternalA,
        Port::ExternalC,
        Port::InternalA,
        Port::InternalC,
        Port::Mechanical,
    ];

    /// Column of the port operator; the conjugate sits at `column() + 1`.
    pub fn column(self) -> usize {
        2 * self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Port::ExternalA => "a_i",
            Port::ExternalC => "c_i",
            Port::InternalA => "a_I",
            Port::InternalC => "c_I",
            Port::Mechanical => "b_i",
        }
    }
}

/// Human-readable labels of the ten input columns.
pub const INPUT_LABELS: [&str; N_INPUTS] = [
    "a_i", "a_i+", "c_i", "c_i+", "a_I", "a_I+", "c_I", "c_I+", "b_i", "b_i+",
];

/// Labels of the four output rows.
pub const OUTPUT_LABELS: [&str; 4] = ["a_o", "a_o+", "c_o", "c_o+"];

/// Output rows.
pub const ROW_A: usize = 0;
pub const ROW_A_DAG: usize = 1;
pub const ROW_C: usize = 2;
pub const ROW_C_DAG: usize = 3;

/// Drift matrix `M` with `dv/dt = M v + inputs`.
///
/// A cavity with pump detuning `Δ = ω_d − ω` oscillates at `+Δ` in its drive
/// frame, so its diagonal entry is `iΔ − κ/2`; the resonator keeps
/// `−iω_m − γ/2`. Conjugate rows are exact conjugates.
pub fn drift_matrix(p: &SystemParams) -> Matrix6<Complex64> {
    let mut m = Matrix6::<Complex64>::zeros();
    m[(0, 0)] = Complex64::new(-0.5 * p.kappa_a, p.delta_a);
    m[(1, 1)] = m[(0, 0)].conj();
    m[(2, 2)] = Complex64::new(-0.5 * p.kappa_c, p.delta_c);
    m[(3, 3)] = m[(2, 2)].conj();
    m[(4, 4)] = Complex64::new(-0.5 * p.gamma, -p.omega_m);
    m[(5, 5)] = m[(4, 4)].conj();
    let gp = -I * p.g_plus;
    let gm = -I * p.g_minus;
    for col in [4, 5] {
        m[(0, col)] = gp;
        m[(1, col)] = gp.conj();
        m[(2, col)] = gm;
        m[(3, col)] = gm.conj();
    }
    for col in [0, 1] {
        m[(4, col)] = gp;
        m[(5, col)] = gp.conj();
    }
    for col in [2, 3] {
        m[(4, col)] = gm;
        m[(5, col)] = gm.conj();
    }
    m
}

fn input_matrix(p: &SystemParams) -> SMatrix<Complex64, 6, N_INPUTS> {
    let mut l = SMatrix::<Complex64, 6, N_INPUTS>::zeros();
    let ea = re(p.kappa_e_a.sqrt());
    let ia = re(p.kappa_i_a().max(0.0).sqrt());
    let ec = re(p.kappa_e_c.sqrt());
    let ic = re(p.kappa_i_c().max(0.0).sqrt());
    let g = re(p.gamma.sqrt());
    for d in 0..2 {
        l[(d, Port::ExternalA.column() + d)] = ea;
        l[(d, Port::InternalA.column() + d)] = ia;
        l[(2 + d, Port::ExternalC.column() + d)] = ec;
        l[(2 + d, Port::InternalC.column() + d)] = ic;
        l[(4 + d, Port::Mechanical.column() + d)] = g;
    }
    l
}

fn norm1(m: &Matrix6<Complex64>) -> f64 {
    (0..6)
        .map(|j| (0..6).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frequency-resolved map from the ten inputs to `(a_o, a_o†, c_o, c_o†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    /// Signal offset from the cavity-A resonance.
    pub omega: f64,
    /// Drive-frame frequency of the solve, `ν = ω − Δ_a`.
    pub nu: f64,
    pub entries: SMatrix<Complex64, 4, N_INPUTS>,
}

impl ScatteringMatrix {
    /// Solves `S(ν) = K(−iνI − M)⁻¹L − P` at drive-frame frequency `nu`.
    pub fn at_drive_frequency(p: &SystemParams, nu: f64) -> Result<Self> {
        let a = Matrix6::<Complex64>::identity() * Complex64::new(0.0, -nu) - drift_matrix(p);
        let omega = nu + p.delta_a;
        let inv = a.lu().try_inverse().ok_or(Error::Singular {
            omega,
            condition: f64::INFINITY,
        })?;
        let condition = norm1(&a) * norm1(&inv);
        if !condition.is_finite() || condition > SINGULAR_CONDITION {
            return Err(Error::Singular { omega, condition });
        }
        let x = inv * input_matrix(p);
        let mut entries = SMatrix::<Complex64, 4, N_INPUTS>::zeros();
        let ke = [p.kappa_e_a.sqrt(), p.kappa_e_c.sqrt()];
        for row in 0..4 {
            let k = ke[row / 2];
            for col in 0..N_INPUTS {
                entries[(row, col)] = x[(row, col)] * k;
            }
            entries[(row, row)] -= 1.0;
        }
        Ok(Self { omega, nu, entries })
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// Copy with one input column zeroed (used to show that the commutator
    /// check detects a missing port).
    pub fn without_column(&self, col: usize) -> Self {
        let mut out = self.clone();
        for row in 0..4 {
            out.entries[(row, col)] = Complex64::new(0.0, 0.0);
        }
        out
    }

    /// Largest entry that the RWA view discards: the co-rotating couplings
    /// `a_o ← {a_i†, c_i, a_I†, c_I, b_i}` and the matching `c_o` entries.
    pub fn co_rotating_leakage(&self) -> f64 {
        [1usize, 2, 5, 6, 8]
            .iter()
            .flat_map(|&c| [self.entries[(ROW_A, c)].norm(), self.entries[(ROW_C_DAG, c)].norm()])
            .fold(0.0, f64::max)
    }
}

/// Full scattering matrix at offset `omega` from the cavity-A resonance.
///
/// Unstable parameters are solved anyway and logged as a warning.
pub fn solve_full_scattering(p: &SystemParams, omega: f64) -> Result<ScatteringMatrix> {
    p.validate_rates()?;
    let report = check_stability(p);
    if !report.stable {
        log::warn!(
            "solving an unstable configuration (max Re λ = {:e})",
            report.max_real_part
        );
    }
    ScatteringMatrix::at_drive_frequency(p, omega - p.delta_a)
}

/// Largest deviation of `[out_i, out_j†]` from the bosonic values
/// `diag(1, −1, 1, −1)`, using `+1` for operator columns and `−1` for
/// conjugate columns.
pub fn commutator_residual(s: &ScatteringMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..N_INPUTS {
                let sigma = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += s.entries[(i, k)] * s.entries[(j, k)].conj() * sigma;
            }
            if i == j {
                acc -= if i % 2 == 0 { 1.0 } else { -1.0 };
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// Named coefficients of the resonant (RWA) input-output relations
///
/// `a_o = A_d a_i + A_x c_i† + A_dI a_I + A_xI c_I† + A_m b_i†`,
/// `c_o = C_d c_i + C_x a_i† + C_dI c_I + C_xI a_I† + C_m b_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub a_d: Complex64,
    pub a_x: Complex64,
    pub a_d_int: Complex64,
    pub a_x_int: Complex64,
    pub a_m: Complex64,
    pub c_d: Complex64,
    pub c_x: Complex64,
    pub c_d_int: Complex64,
    pub c_x_int: Complex64,
    pub c_m: Complex64,
}

impl CoefficientSet {
    /// Field names in a fixed order, matching [`CoefficientSet::values`].
    pub const NAMES: [&'static str; 10] = ["A_d", "A_x", "A_dI", "A_xI", "A_m", "C_d", "C_x", "C_dI", "C_xI", "C_m"];

    pub fn values(&self) -> [Complex64; 10] {
        [
            self.a_d,
            self.a_x,
            self.a_d_int,
            self.a_x_int,
            self.a_m,
            self.c_d,
            self.c_x,
            self.c_d_int,
            self.c_x_int,
            self.c_m,
        ]
    }

    /// Resonant entries of a full solve: `a_o(ν)` and `c_o(−ν) = (c_o†(ν))†`.
    pub fn from_scattering(s: &ScatteringMatrix) -> Self {
        let a = |c: usize| s.entries[(ROW_A, c)];
        let c = |c: usize| s.entries[(ROW_C_DAG, c)].conj();
        Self {
            a_d: a(0),
            a_x: a(3),
            a_d_int: a(4),
            a_x_int: a(7),
            a_m: a(9),
            c_d: c(3),
            c_x: c(0),
            c_d_int: c(7),
            c_x_int: c(4),
            c_m: c(9),
        }
    }

    /// Largest entry-wise relative deviation `|x − y| / max(|y|, floor)`.
    pub fn max_relative_deviation(&self, reference: &Self, floor: f64) -> f64 {
        self.values()
            .iter()
            .zip(reference.values().iter())
            .map(|(x, y)| (x - y).norm() / y.norm().max(floor))
            .fold(0.0, f64::max)
    }

    /// Commutators `[a_o, a_o†]`, `[c_o, c_o†]` and `[a_o, c_o]` implied by
    /// the coefficients.
    pub fn commutators(&self) -> (f64, f64, Complex64) {
        let aa = self.a_d.norm_sqr() - self.a_x.norm_sqr() + self.a_d_int.norm_sqr()
            - self.a_x_int.norm_sqr()
            - self.a_m.norm_sqr();
        let cc = self.c_d.norm_sqr() - self.c_x.norm_sqr() + self.c_d_int.norm_sqr() - self.c_x_int.norm_sqr()
            + self.c_m.norm_sqr();
        let ac = self.a_d * self.c_x - self.a_x * self.c_d + self.a_d_int * self.c_x_int
            - self.a_x_int * self.c_d_int
            - self.a_m * self.c_m;
        (aa, cc, ac)
    }
}

/// Two-mode squeezing parameters of the Bogolyubov modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bogolyubov {
    pub cosh_xi: f64,
    pub sinh_xi: f64,
    /// `𝒢 = √(G_−² − G_+²)`.
    pub g_script: f64,
}

pub fn bogolyubov(g_plus: f64, g_minus: f64) -> Result<Bogolyubov> {
    if !(g_plus >= 0.0 && g_plus.is_finite()) {
        return Err(invalid("g_plus", "must be finite and nonnegative"));
    }
    if !(g_plus < g_minus) {
        return Err(Error::CouplingOrder { g_plus, g_minus });
    }
    let g_script = ((g_minus - g_plus) * (g_minus + g_plus)).sqrt();
    Ok(Bogolyubov {
        cosh_xi: g_minus / g_script,
        sinh_xi: g_plus / g_script,
        g_script,
    })
}

/// Closed-form RWA coefficients at offset `omega` from resonance.
///
/// Requires symmetric cavities.
pub fn rwa_coefficients(p: &SystemParams, omega: f64) -> Result<CoefficientSet> {
    p.validate()?;
    if !p.is_symmetric() {
        return Err(invalid("kappa", "closed-form RWA needs symmetric cavities"));
    }
    let bg = bogolyubov(p.g_plus, p.g_minus)?;
    let kappa = p.kappa_a;
    let ke = p.kappa_e_a;
    let ki = p.kappa_i_a().max(0.0);
    let chi_m = Complex64::new(0.5 * p.gamma, -omega).inv();
    let chi_a = Complex64::new(0.5 * kappa, -omega).inv();
    let chi_e = chi_a / (1.0 + bg.g_script * bg.g_script * chi_a * chi_m);
    let ch2 = bg.cosh_xi * bg.cosh_xi;
    let sh2 = bg.sinh_xi * bg.sinh_xi;
    let chsh = bg.cosh_xi * bg.sinh_xi;
    let a_aa = chi_a * ch2 - chi_e * sh2;
    let a_cc = chi_e * ch2 - chi_a * sh2;
    let a_ac = (chi_a - chi_e) * chsh;
    let a_ca = -a_ac;
    let mix = (ke * ki).sqrt();
    let mech = -I * (p.gamma * ke).sqrt() * chi_m * chi_e;
    Ok(CoefficientSet {
        a_d: ke * a_aa - 1.0,
        a_x: ke * a_ac,
        a_d_int: mix * a_aa,
        a_x_int: mix * a_ac,
        a_m: mech * p.g_plus,
        c_d: ke * a_cc - 1.0,
        c_x: ke * a_ca,
        c_d_int: mix * a_cc,
        c_x_int: mix * a_ca,
        c_m: mech * p.g_minus,
    })
}

/// RWA counterpart of [`CoefficientSet::from_scattering`]: the `A` entries
/// at `omega` and the `C` entries at `−omega`, matching the output pair
/// `a_o(ω)`, `c_o(−ω)`. Identical to [`rwa_coefficients`] at resonance.
pub fn rwa_signal_pair(p: &SystemParams, omega: f64) -> Result<CoefficientSet> {
    let a = rwa_coefficients(p, omega)?;
    if omega == 0.0 {
        return Ok(a);
    }
    let c = rwa_coefficients(p, -omega)?;
    Ok(CoefficientSet {
        c_d: c.c_d,
        c_x: c.c_x,
        c_d_int: c.c_d_int,
        c_x_int: c.c_x_int,
        c_m: c.c_m,
        ..a
    })
}

/// Resonant RWA coefficients in the limit `C_minus ≫ 1`.
pub fn rwa_large_cooperativity(r: f64, r_e: f64, c_minus: f64) -> Result<CoefficientSet> {
    if !(0.0..1.0).contains(&r) {
        return Err(invalid("r", "need 0 ≤ r < 1"));
    }
    if !(r_e > 0.0 && r_e <= 1.0) {
        return Err(invalid("r_e", "need 0 < r_e ≤ 1"));
    }
    if !(c_minus > 0.0 && c_minus.is_finite()) {
        return Err(invalid("c_minus", "must be positive"));
    }
    let q = 1.0 - r * r;
    let r_i = 1.0 - r_e;
    let mix = (r_e * r_i).sqrt();
    let c_m = Complex64::new(0.0, -2.0 * r_e.sqrt() / (c_minus.sqrt() * q));
    let a_x = 2.0 * r * r_e / q;
    let a_d_int = 2.0 * mix / q;
    let a_x_int = 2.0 * r * mix / q;
    Ok(CoefficientSet {
        a_d: re(2.0 * r_e / q - 1.0),
        a_x: re(a_x),
        a_d_int: re(a_d_int),
        a_x_int: re(a_x_int),
        a_m: c_m * r,
        c_d: re(-2.0 * r_e * r * r / q - 1.0),
        c_x: re(-a_x),
        c_d_int: re(-r * r * a_d_int),
        c_x_int: re(-a_x_int),
        c_m,
    })
}
