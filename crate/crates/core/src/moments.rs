//! Gaussian output moments.
//!
//! Every output field is written as `y = Σ_k (u_k O_k + v_k O_k†) + mean`
//! over independent thermal input modes `O_k`. Second moments are quadratic
//! forms in `(u, v)`; the fourth moment follows from Wick factorization.
//! A closed-form term-by-term evaluation for the resonant coefficient set
//! serves as a cross-check.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{CoefficientSet, Port, ScatteringMatrix, ROW_A, ROW_C_DAG};
use crate::error::Result;
use crate::model::InputState;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Which of the two frequency components of a port a mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Band {
    /// The component resonant with the signal pair `a_o(ν)`, `c_o(−ν)`.
    Signal,
    /// Its mirror image, reached only through counter-rotating terms.
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Mode {
    pub port: Port,
    pub band: Band,
}

/// Bath occupation of a port.
pub fn occupation(inputs: &InputState, port: Port) -> f64 {
    match port {
        Port::ExternalA => inputs.n_e_a,
        Port::ExternalC => inputs.n_e_c,
        Port::InternalA => inputs.n_i_a,
        Port::InternalC => inputs.n_i_c,
        Port::Mechanical => inputs.n_m,
    }
}

/// Coherent amplitude carried by a mode.
fn coherent_amplitude(inputs: &InputState, mode: Mode) -> Complex64 {
    match (mode.port, mode.band) {
        (Port::ExternalA, Band::Signal) => inputs.alpha_i,
        (Port::ExternalC, Band::Signal) => inputs.chi_i,
        _ => ZERO,
    }
}

/// Linear map from independent input modes to the output pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    pub modes: Vec<Mode>,
    pub a_u: Vec<Complex64>,
    pub a_v: Vec<Complex64>,
    pub c_u: Vec<Complex64>,
    pub c_v: Vec<Complex64>,
}

impl OutputMap {
    fn empty(modes: Vec<Mode>) -> Self {
        let n = modes.len();
        Self {
            modes,
            a_u: vec![ZERO; n],
            a_v: vec![ZERO; n],
            c_u: vec![ZERO; n],
            c_v: vec![ZERO; n],
        }
    }

    /// All ten modes of a full solve: `a_o(ν)` and `c_o(−ν)`.
    ///
    /// For cavity A ports the signal component sits at `+ν`; for cavity C and
    /// the resonator it sits at `−ν`.
    pub fn from_scattering(s: &ScatteringMatrix) -> Self {
        let mut modes = Vec::with_capacity(10);
        for port in Port::ALL {
            let plus_is_signal = matches!(port, Port::ExternalA | Port::InternalA);
            let (plus, minus) = if plus_is_signal {
                (Band::Signal, Band::Image)
            } else {
                (Band::Image, Band::Signal)
            };
            modes.push(Mode { port, band: plus });
            modes.push(Mode { port, band: minus });
        }
        let mut map = Self::empty(modes);
        for (p, port) in Port::ALL.iter().enumerate() {
            let col = port.column();
            let (k_plus, k_minus) = (2 * p, 2 * p + 1);
            // column `col` is O(+ν); column `col + 1` is O(−ν)†
            map.a_u[k_plus] = s.entry(ROW_A, col);
            map.a_v[k_minus] = s.entry(ROW_A, col + 1);
            // c_o(−ν) = (c_o†(ν))†
            map.c_v[k_plus] = s.entry(ROW_C_DAG, col).conj();
            map.c_u[k_minus] = s.entry(ROW_C_DAG, col + 1).conj();
        }
        map
    }

    /// The five resonant modes of the RWA relations.
    pub fn from_coefficients(c: &CoefficientSet) -> Self {
        let modes = Port::ALL
            .iter()
            .map(|&port| Mode {
                port,
                band: Band::Signal,
            })
            .collect();
        let mut map = Self::empty(modes);
        map.a_u[0] = c.a_d;
        map.a_v[1] = c.a_x;
        map.a_u[2] = c.a_d_int;
        map.a_v[3] = c.a_x_int;
        map.a_v[4] = c.a_m;
        map.c_u[1] = c.c_d;
        map.c_v[0] = c.c_x;
        map.c_u[3] = c.c_d_int;
        map.c_v[2] = c.c_x_int;
        map.c_u[4] = c.c_m;
        map
    }

    /// Moments for the given probes and baths. Occupations are used as given,
    /// so finite differences may step below zero.
    pub fn propagate(&self, inputs: &InputState) -> OutputGaussianState {
        let mut st = OutputGaussianState::default();
        for (k, &mode) in self.modes.iter().enumerate() {
            let n = occupation(inputs, mode.port);
            let n1 = n + 1.0;
            let (au, av, cu, cv) = (self.a_u[k], self.a_v[k], self.c_u[k], self.c_v[k]);
            let mu = coherent_amplitude(inputs, mode);
            st.mean_a += au * mu + av * mu.conj();
            st.mean_c += cu * mu + cv * mu.conj();
            st.n_aa += au.norm_sqr() * n + av.norm_sqr() * n1;
            st.n_cc += cu.norm_sqr() * n + cv.norm_sqr() * n1;
            st.n_ac += au.conj() * cu * n + av.conj() * cv * n1;
            st.m_aa += au * av * (n1 + n);
            st.m_cc += cu * cv * (n1 + n);
            st.m_ac += au * cv * n1 + av * cu * n;
        }
        st
    }

    /// Bosonic commutators `[a, a†]`, `[c, c†]` and `[a, c]` implied by the map.
    pub fn commutators(&self) -> (f64, f64, Complex64) {
        let mut aa = 0.0;
        let mut cc = 0.0;
        let mut ac = ZERO;
        for k in 0..self.modes.len() {
            aa += self.a_u[k].norm_sqr() - self.a_v[k].norm_sqr();
            cc += self.c_u[k].norm_sqr() - self.c_v[k].norm_sqr();
            ac += self.a_u[k] * self.c_v[k] - self.a_v[k] * self.c_u[k];
        }
        (aa, cc, ac)
    }
}

/// Means and all second moments of the output fluctuations `δa`, `δc`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct OutputGaussianState {
    pub mean_a: Complex64,
    pub mean_c: Complex64,
    /// `⟨δa†δa⟩`
    pub n_aa: f64,
    /// `⟨δc†δc⟩`
    pub n_cc: f64,
    /// `⟨δa†δc⟩`
    pub n_ac: Complex64,
    /// `⟨δa δa⟩`
    pub m_aa: Complex64,
    /// `⟨δc δc⟩`
    pub m_cc: Complex64,
    /// `⟨δa δc⟩`
    pub m_ac: Complex64,
}

impl OutputGaussianState {
    /// Output state with the outputs mapped to `x_a a + y_a` and `x_c c + y_c`.
    pub fn affine(&self, x_a: Complex64, y_a: Complex64, x_c: Complex64, y_c: Complex64) -> Self {
        Self {
            mean_a: x_a * self.mean_a + y_a,
            mean_c: x_c * self.mean_c + y_c,
            n_aa: x_a.norm_sqr() * self.n_aa,
            n_cc: x_c.norm_sqr() * self.n_cc,
            n_ac: x_a.conj() * x_c * self.n_ac,
            m_aa: x_a * x_a * self.m_aa,
            m_cc: x_c * x_c * self.m_cc,
            m_ac: x_a * x_c * self.m_ac,
        }
    }

    /// `K_ij = ⟨ξ_i ξ_j†⟩` for `ξ = (δa, δc, δa†, δc†)`, including the vacuum
    /// commutator terms. Positive semidefinite for physical states.
    pub fn covariance(&self) -> Matrix4<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let (naa, ncc) = (Complex64::new(self.n_aa, 0.0), Complex64::new(self.n_cc, 0.0));
        let (nac, maa, mcc, mac) = (self.n_ac, self.m_aa, self.m_cc, self.m_ac);
        #[rustfmt::skip]
        let k = Matrix4::new(
            naa + one, nac.conj(), maa, mac,
            nac, ncc + one, mac, mcc,
            maa.conj(), mac.conj(), naa, nac,
            mac.conj(), mcc.conj(), nac.conj(), ncc,
        );
        k
    }

    /// Smallest eigenvalue of [`Self::covariance`].
    pub fn min_covariance_eigenvalue(&self) -> f64 {
        self.covariance()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn correlators(&self) -> CorrelatorSet {
        CorrelatorSet {
            n_a: self.mean_a.norm_sqr() + self.n_aa,
            n_c: self.mean_c.norm_sqr() + self.n_cc,
            cross_phase: self.mean_a.conj() * self.mean_c + self.n_ac,
            cross_squeeze: self.mean_a * self.mean_c + self.m_ac,
            fourth: wick_fourth_moment(self),
        }
    }
}

/// `⟨a†c†c a⟩` of a displaced Gaussian state.
pub fn wick_fourth_moment(s: &OutputGaussianState) -> f64 {
    let (ma, mc) = (s.mean_a, s.mean_c);
    let (pa, pc) = (ma.norm_sqr(), mc.norm_sqr());
    let two_mean = (ma.conj() * mc.conj() * s.m_ac).re * 2.0
        + (ma.conj() * mc * s.n_ac.conj()).re * 2.0
        + pa * s.n_cc
        + pc * s.n_aa;
    let pairings = s.m_ac.norm_sqr() + s.n_ac.norm_sqr() + s.n_aa * s.n_cc;
    pa * pc + two_mean + pairings
}

/// The five output correlators that enter the violation functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorSet {
    /// `⟨a_o† a_o⟩`
    pub n_a: f64,
    /// `⟨c_o† c_o⟩`
    pub n_c: f64,
    /// `⟨a_o† c_o⟩`
    pub cross_phase: Complex64,
    /// `⟨a_o c_o⟩`
    pub cross_squeeze: Complex64,
    /// `⟨a_o† c_o† c_o a_o⟩`
    pub fourth: f64,
}

impl CorrelatorSet {
    /// Largest relative difference over the five entries.
    pub fn max_relative_difference(&self, other: &Self, floor: f64) -> f64 {
        let rel = |x: Complex64, y: Complex64| (x - y).norm() / y.norm().max(floor);
        let re = |x: f64| Complex64::new(x, 0.0);
        [
            rel(re(self.n_a), re(other.n_a)),
            rel(re(self.n_c), re(other.n_c)),
            rel(self.cross_phase, other.cross_phase),
            rel(self.cross_squeeze, other.cross_squeeze),
            rel(re(self.fourth), re(other.fourth)),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Moments of the full scattering solution.
pub fn propagate_moments(s: &ScatteringMatrix, inputs: &InputState) -> Result<OutputGaussianState> {
    inputs.validate()?;
    Ok(OutputMap::from_scattering(s).propagate(inputs))
}

/// Moments of the resonant coefficient set.
pub fn propagate_coefficients(c: &CoefficientSet, inputs: &InputState) -> Result<OutputGaussianState> {
    inputs.validate()?;
    Ok(OutputMap::from_coefficients(c).propagate(inputs))
}

struct Terms {
    ad: Complex64,
    ax: Complex64,
    adi: Complex64,
    axi: Complex64,
    am: Complex64,
    cd: Complex64,
    cx: Complex64,
    cdi: Complex64,
    cxi: Complex64,
    cm: Complex64,
    al: Complex64,
    ch: Complex64,
    nea: f64,
    nec: f64,
    nia: f64,
    nic: f64,
    nm: f64,
}

impl Terms {
    fn new(c: &CoefficientSet, i: &InputState) -> Self {
        Self {
            ad: c.a_d,
            ax: c.a_x,
            adi: c.a_d_int,
            axi: c.a_x_int,
            am: c.a_m,
            cd: c.c_d,
            cx: c.c_x,
            cdi: c.c_d_int,
            cxi: c.c_x_int,
            cm: c.c_m,
            al: i.alpha_i,
            ch: i.chi_i,
            nea: i.n_e_a,
            nec: i.n_e_c,
            nia: i.n_i_a,
            nic: i.n_i_c,
            nm: i.n_m,
        }
    }
}

fn sq(z: Complex64) -> f64 {
    z.norm_sqr()
}

/// Closed-form correlators of the resonant relations, written term by
/// term in their reference form, including the unsquared `|α_i|`, `|χ_i|` prefactors and
/// the bath factors of the fourth-order expression. Kept unchanged on purpose;
/// see [`fourth_order_errata`] for the differences from the Wick result.
pub fn closed_form_correlators(c: &CoefficientSet, inputs: &InputState) -> CorrelatorSet {
    let t = Terms::new(c, inputs);
    let (a2, c2) = (sq(t.al), sq(t.ch));
    let (als, chs) = (t.al.conj(), t.ch.conj());

    let n_a = sq(t.ad) * (a2 + t.nea)
        + sq(t.ax) * (c2 + t.nec + 1.0)
        + (t.ad.conj() * t.ax * als * chs).re
        + (t.ax.conj() * t.ad * t.al * t.ch).re
        + sq(t.adi) * t.nia
        + sq(t.axi) * (t.nic + 1.0)
        + sq(t.am) * (t.nm + 1.0);
    let n_c = sq(t.cd) * (c2 + t.nec)
        + sq(t.cx) * (a2 + t.nea + 1.0)
        + (t.cd.conj() * t.cx * als * chs).re
        + (t.cx.conj() * t.cd * t.al * t.ch).re
        + sq(t.cdi) * t.nic
        + sq(t.cxi) * (t.nia + 1.0)
        + sq(t.cm) * t.nm;
    let cross_phase = t.ad.conj() * t.cx * als * als
        + (t.ad.conj() * t.cd + t.ax.conj() * t.cx) * als * t.ch
        + t.ax.conj() * t.cd * t.ch * t.ch;
    let cross_squeeze = t.ad * t.cx * (a2 + t.nea + 1.0)
        + t.ax * t.cd * (c2 + t.nec)
        + t.ad * t.cd * t.al * t.ch
        + t.ax * t.cx * als * chs
        + t.adi * t.cxi * (t.nia + 1.0)
        + t.axi * t.cdi * t.nic
        + t.am * t.cm * t.nm;

    CorrelatorSet {
        n_a,
        n_c,
        cross_phase,
        cross_squeeze,
        fourth: closed_form_fourth_literal(&t),
    }
}

fn closed_form_fourth_literal(t: &Terms) -> f64 {
    let (a2, c2) = (sq(t.al), sq(t.ch));
    let (aa, ca) = (t.al.norm(), t.ch.norm());
    let (al, ch, als, chs) = (t.al, t.ch, t.al.conj(), t.ch.conj());
    let (nea, nec, nia, nic, nm) = (t.nea, t.nec, t.nia, t.nic, t.nm);

    let b_cd = sq(t.cd) * (c2 + nec);
    let b_cx = sq(t.cx) * (a2 + nea + 1.0);
    let b_cdi = sq(t.cdi) * nic;
    let b_cxi = sq(t.cxi) * (nia + 1.0);
    let b_cm = sq(t.cm) * nm;

    let p_dx = t.ad * t.cx;
    let p_xd = t.ax * t.cd;
    let p_dd = t.ad * t.cd;
    let p_xx = t.ax * t.cx;
    let p_i1 = t.adi * t.cxi;
    let p_i2 = t.axi * t.cdi;
    let p_m = t.am * t.cm;

    let mut v = Complex64::new(
        sq(p_dx) * (a2 * a2 + a2 + 4.0 * a2 * nea + nea * nea)
            + sq(p_xd) * (c2 * c2 + 3.0 * c2 + 4.0 * c2 * nec + nec * nec + 2.0 * nec + 1.0)
            + sq(t.ad) * (aa + nea) * (b_cd + b_cdi + b_cxi + b_cm)
            + sq(t.ax) * (ca + nec + 1.0) * (b_cx + b_cdi + b_cxi + b_cm)
            + sq(t.adi) * nia * (b_cd + b_cx + b_cdi + b_cm)
            + sq(t.axi) * (nic + 1.0) * (b_cd + b_cx + b_cxi + b_cm)
            + sq(t.am) * (nm + 1.0) * (b_cd + b_cx + b_cdi + b_cxi)
            + sq(p_i1) * nia * nia
            + sq(p_i2) * (nic * nic + 1.0)
            + sq(p_m) * (nm * nm + 2.0 * nm + 1.0),
        0.0,
    );

    let noise_pairs = p_i1 * nia + p_i2 * (nic + 1.0) + p_m * (nm + 1.0);
    v += p_dd.conj() * als * chs * (p_xx * als * chs + noise_pairs);
    v += p_dx.conj() * (a2 + nea) * (p_xd * (c2 + nec + 1.0) + noise_pairs);
    v += p_xd.conj() * (c2 + nec + 1.0) * (p_dx * (a2 + nea) + noise_pairs);
    v += p_xx.conj() * al * ch * (p_dd * al * ch + noise_pairs);

    let drive_pairs = p_dd * al * ch + p_dx * (a2 + nea) + p_xd * (c2 + nec + 1.0) + p_xx * als * chs;
    v += p_i1.conj() * nia * (drive_pairs + p_i2 * (nic + 1.0) + p_m * (nm + 1.0));
    v += p_i2.conj() * (nic + 1.0) * (drive_pairs + p_i1 * nia + p_m * (nm + 1.0));
    v += p_m.conj() * (nm + 1.0) * (drive_pairs + p_i1 * nia + p_i2 * (nic + 1.0));

    v += sq(t.ad) * t.cd.conj() * t.cx * chs * (als * a2 + 2.0 * als * nea);
    v += sq(t.ad) * t.cd * t.cx.conj() * ch * (al * a2 + 2.0 * al * nea);
    v += sq(t.ax) * t.cd.conj() * t.cx * als * (chs * c2 + 2.0 * chs * nec + 2.0 * chs);
    v += sq(t.ax) * t.cd * t.cx.conj() * al * (ch * c2 + 2.0 * ch * nec + 2.0 * ch);
    v += t.ad.conj() * t.ax * sq(t.cd) * als * (chs * c2 + 2.0 * chs * nec + chs);
    v += t.ad * t.ax.conj() * sq(t.cd) * al * (ch * c2 + 2.0 * ch * nec + ch);
    v += t.ad.conj() * t.ax * sq(t.cx) * chs * (als * a2 + 2.0 * als * nea + als);
    v += t.ad * t.ax.conj() * sq(t.cx) * ch * (al * a2 + 2.0 * al * nea + al);
    v.re
}

/// One identified difference between the reference fourth-order expression
/// and the Wick factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Erratum {
    pub id: &'static str,
    pub description: &'static str,
}

/// All identified fourth-order errata, in report order.
pub const FOURTH_ORDER_ERRATA: [Erratum; 9] = [
    Erratum {
        id: "abs-alpha",
        description: "|A_d|² group: prefactor (|α_i| + n_e,a) should read (|α_i|² + n_e,a)",
    },
    Erratum {
        id: "abs-chi",
        description: "|A_x|² group: prefactor (|χ_i| + n_e,c + 1) should read (|χ_i|² + n_e,c + 1)",
    },
    Erratum {
        id: "dx-bath",
        description: "|A_d C_x|² group: n_e,a² should read 2n_e,a² + n_e,a",
    },
    Erratum {
        id: "xd-bath",
        description: "|A_x C_d|² group: n_e,c² + 2n_e,c + 1 should read 2n_e,c² + 3n_e,c + 1",
    },
    Erratum {
        id: "int-a",
        description: "|A_dI C_xI|² term: the symbol n^{I2}_a should read 2n_i,a² + n_i,a",
    },
    Erratum {
        id: "int-c",
        description: "|A_xI C_dI|² term: (n^{I2}_c + 1) should read 2n_i,c² + 3n_i,c + 1",
    },
    Erratum {
        id: "mech",
        description: "|A_m C_m|² term: n_m² + 2n_m + 1 should read 2n_m² + 3n_m + 1",
    },
    Erratum {
        id: "cross-a",
        description: "missing A_d A_x* α_i χ_i [|C_dI|² n_i,c + |C_xI|² (n_i,a + 1) + |C_m|² n_m] + c.c.",
    },
    Erratum {
        id: "cross-c",
        description: "missing C_d C_x* α_i χ_i [|A_dI|² n_i,a + |A_xI|² (n_i,c + 1) + |A_m|² (n_m + 1)] + c.c.",
    },
];

/// Contribution `corrected − reference` of each erratum, in the order of
/// [`FOURTH_ORDER_ERRATA`].
pub fn fourth_order_errata(c: &CoefficientSet, inputs: &InputState) -> [f64; 9] {
    let t = Terms::new(c, inputs);
    let (a2, c2) = (sq(t.al), sq(t.ch));
    let (nea, nec, nia, nic, nm) = (t.nea, t.nec, t.nia, t.nic, t.nm);
    let bracket_d = sq(t.cd) * (c2 + nec) + sq(t.cdi) * nic + sq(t.cxi) * (nia + 1.0) + sq(t.cm) * nm;
    let bracket_x = sq(t.cx) * (a2 + nea + 1.0) + sq(t.cdi) * nic + sq(t.cxi) * (nia + 1.0) + sq(t.cm) * nm;
    let drive = t.al * t.ch;
    let cross_a = 2.0 * (t.ad * t.ax.conj() * drive).re * (sq(t.cdi) * nic + sq(t.cxi) * (nia + 1.0) + sq(t.cm) * nm);
    let cross_c =
        2.0 * (t.cd * t.cx.conj() * drive).re * (sq(t.adi) * nia + sq(t.axi) * (nic + 1.0) + sq(t.am) * (nm + 1.0));
    [
        sq(t.ad) * (a2 - t.al.norm()) * bracket_d,
        sq(t.ax) * (c2 - t.ch.norm()) * bracket_x,
        sq(t.ad * t.cx) * nea * (nea + 1.0),
        sq(t.ax * t.cd) * nec * (nec + 1.0),
        sq(t.adi * t.cxi) * nia * (nia + 1.0),
        sq(t.axi * t.cdi) * nic * (nic + 3.0),
        sq(t.am * t.cm) * nm * (nm + 1.0),
        cross_a,
        cross_c,
    ]
}

/// Reference fourth-order expression with every erratum applied.
pub fn closed_form_fourth_corrected(c: &CoefficientSet, inputs: &InputState) -> f64 {
    closed_form_fourth_literal(&Terms::new(c, inputs)) + fourth_order_errata(c, inputs).iter().sum::<f64>()
}
