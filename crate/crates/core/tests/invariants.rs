use optobell_core::bell::{
    bell_cd, chain_correlation, chsh_s_max, closed_form_correlation, verify_chsh_from_angles, DetectionConfig,
};
use optobell_core::dynamics::{bogolyubov, commutator_residual, rwa_coefficients, solve_full_scattering};
use optobell_core::model::check_stability;
use optobell_core::moments::{closed_form_correlators, closed_form_fourth_corrected, propagate_coefficients};
use optobell_core::pipeline::{output_state, Solver};
use optobell_core::{Complex64, InputState, SystemParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SystemParams> {
    (1e-3..0.1f64, 0.5..1.0f64, 1e-7..1e-4f64, 0.02..0.2f64, 0.0..0.9f64)
        .prop_map(|(k, re, g, gm, r)| SystemParams::symmetric(k, re, g, gm, r))
}

fn inputs() -> impl Strategy<Value = InputState> {
    (
        (-1e-2..1e-2f64, -1e-2..1e-2f64, -1e-2..1e-2f64, -1e-2..1e-2f64),
        (0.0..0.2f64, 0.0..0.2f64, 0.0..0.2f64, 0.0..0.2f64, 0.0..20.0f64),
    )
        .prop_map(|((ar, ai, cr, ci), (nea, nec, nia, nic, nm))| InputState {
            alpha_i: Complex64::new(ar, ai),
            chi_i: Complex64::new(cr, ci),
            n_e_a: nea,
            n_e_c: nec,
            n_i_a: nia,
            n_i_c: nic,
            n_m: nm,
        })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bogolyubov_identity(gp in 0.0..1.0f64, gap in 1e-6..1.0f64) {
        let b = bogolyubov(gp, gp + gap).unwrap();
        prop_assert!((b.cosh_xi * b.cosh_xi - b.sinh_xi * b.sinh_xi - 1.0).abs() < 1e-9 * b.cosh_xi * b.cosh_xi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn full_solve_preserves_commutators(p in params(), omega in -0.05..0.05f64) {
        prop_assume!(check_stability(&p).stable);
        let s = solve_full_scattering(&p, omega).unwrap();
        prop_assert!(commutator_residual(&s) < 1e-9);
    }

    #[test]
    fn corrected_closed_form_matches_wick(p in params(), i in inputs()) {
        let k = rwa_coefficients(&p, 0.0).unwrap();
        let wick = propagate_coefficients(&k, &i).unwrap().correlators();
        let closed = closed_form_correlators(&k, &i);
        prop_assert!(rel(closed_form_fourth_corrected(&k, &i), wick.fourth) < 1e-9);
        prop_assert!(rel(closed.n_a, wick.n_a) < 1e-9);
        prop_assert!(rel(closed.n_c, wick.n_c) < 1e-9);
        prop_assert!((closed.cross_phase - wick.cross_phase).norm() <= 1e-9 * wick.cross_phase.norm().max(1e-300));
        prop_assert!((closed.cross_squeeze - wick.cross_squeeze).norm() <= 1e-9 * wick.cross_squeeze.norm());
    }

    #[test]
    fn physical_states_are_positive(p in params(), i in inputs(), rwa in any::<bool>()) {
        prop_assume!(check_stability(&p).stable);
        let solver = if rwa { Solver::Rwa } else { Solver::Full };
        let st = output_state(&p, &i, 0.0, solver).unwrap();
        let scale = 1.0 + st.n_aa + st.n_cc;
        prop_assert!(st.min_covariance_eigenvalue() > -1e-9 * scale);
        let corr = st.correlators();
        prop_assert!(corr.n_a >= 0.0 && corr.n_c >= 0.0 && corr.fourth >= 0.0);
        prop_assert!(corr.cross_phase.norm_sqr() <= corr.n_a * corr.n_c * (1.0 + 1e-9));
        prop_assert!(corr.fourth <= (corr.n_a * corr.n_c + corr.cross_squeeze.norm_sqr() + corr.cross_phase.norm_sqr()) * 3.0 + 1e-300);
        let cd = bell_cd(&corr).unwrap();
        prop_assert!(cd.c >= 0.0 && cd.d >= 0.0 && cd.c <= 1.0 + 1e-9);
    }

    #[test]
    fn chain_matches_closed_form(p in params(), i in inputs(), theta in -3.2..3.2f64, phi in -3.2..3.2f64) {
        let st = output_state(&p, &i, 0.0, Solver::Rwa).unwrap();
        let corr = st.correlators();
        let cd = bell_cd(&corr).unwrap();
        let chain = chain_correlation(&st, &DetectionConfig::balanced(cd.beta_opt, theta, phi)).unwrap();
        let closed = closed_form_correlation(&corr, &cd, theta, phi);
        prop_assert!((chain - closed).abs() < 1e-9, "{} vs {}", chain, closed);
    }

    #[test]
    fn optimal_settings_reach_s_max(p in params(), i in inputs()) {
        let st = output_state(&p, &i, 0.0, Solver::Rwa).unwrap();
        let cd = bell_cd(&st.correlators()).unwrap();
        let s = verify_chsh_from_angles(&st).unwrap();
        let opt = chsh_s_max(cd.c, cd.d).unwrap();
        prop_assert!((s - opt.s_max).abs() < 1e-9 * opt.s_max.max(1.0));
    }

    #[test]
    fn moments_are_affine_in_occupations(p in params(), i in inputs(), n1 in 0.0..5.0f64, n2 in 0.0..5.0f64) {
        let at = |n: f64| output_state(&p, &InputState { n_m: n, ..i }, 0.0, Solver::Full).unwrap();
        let (a, b, m) = (at(n1), at(n2), at(0.5 * (n1 + n2)));
        let tol = 1e-9 * (1.0 + a.n_aa.abs() + b.n_aa.abs());
        prop_assert!((a.n_aa + b.n_aa - 2.0 * m.n_aa).abs() < tol);
        prop_assert!((a.n_cc + b.n_cc - 2.0 * m.n_cc).abs() < tol);
        prop_assert!((a.m_ac + b.m_ac - 2.0 * m.m_ac).norm() < tol);
    }
}

#[test]
fn vacuum_probe_scales_quadratically() {
    let p = SystemParams::symmetric(0.01, 0.9, 1e-5, 0.2, 0.1);
    let f = |a: f64| {
        output_state(&p, &InputState::probe(a), 0.0, Solver::Full)
            .unwrap()
            .mean_a
            .norm_sqr()
    };
    assert!(rel(f(2e-3), 4.0 * f(1e-3)) < 1e-12);
}
