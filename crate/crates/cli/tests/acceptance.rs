//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::f64::consts::SQRT_2;
use std::path::Path;
use std::process::Command as Process;

use optobell_cli::commands::{compare_rwa, contour_family};
use optobell_cli::contour::intersections;
use optobell_cli::presets::{self, Command, PRESETS};
use optobell_cli::sweep::Value;
use optobell_core::bell::{bell_cd, chain_correlation, chsh_from_chain, chsh_s_max, closed_form_correlation, AngleSet};
use optobell_core::dynamics::{commutator_residual, rwa_coefficients, solve_full_scattering};
use optobell_core::model::{bose_occupancy, check_stability};
use optobell_core::moments::{
    closed_form_correlators, fourth_order_errata, propagate_coefficients, FOURTH_ORDER_ERRATA,
};
use optobell_core::numeric::bisect;
use optobell_core::pipeline::{output_state, violation, Solver};
use optobell_core::sensitivity::{
    finite_difference_with, large_cooperativity_threshold, sensitivity_coefficients, FD_STEP,
};
use optobell_core::{Bath, BellMetrics, Complex64, InputState, OutputGaussianState, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    SystemParams::symmetric(
        rng.gen_range(1e-3..0.1),
        rng.gen_range(0.5..1.0),
        rng.gen_range(1e-7..1e-4),
        rng.gen_range(0.02..0.2),
        rng.gen_range(0.0..0.9),
    )
}

fn random_stable_params(rng: &mut ChaCha8Rng) -> SystemParams {
    loop {
        let p = random_params(rng);
        if check_stability(&p).stable {
            return p;
        }
    }
}

fn random_inputs(rng: &mut ChaCha8Rng) -> InputState {
    let mut z = || Complex64::new(rng.gen_range(-1e-2..1e-2), rng.gen_range(-1e-2..1e-2));
    let (alpha_i, chi_i) = (z(), z());
    InputState {
        alpha_i,
        chi_i,
        n_e_a: rng.gen_range(0.0..0.2),
        n_e_c: rng.gen_range(0.0..0.2),
        n_i_a: rng.gen_range(0.0..0.2),
        n_i_c: rng.gen_range(0.0..0.2),
        n_m: rng.gen_range(0.0..20.0),
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> OutputGaussianState {
    let p = random_stable_params(rng);
    let i = random_inputs(rng);
    output_state(&p, &i, 0.0, Solver::Full).expect("stable parameters solve")
}

fn pushed_params(kappa: f64, r: f64) -> SystemParams {
    SystemParams::symmetric(kappa, 0.99, 1e-7, 0.2, r)
}

fn violation_threshold() -> Outcome {
    let target = large_cooperativity_threshold();
    let probe = InputState::probe(1e-4);
    let f = |r: f64| violation(&pushed_params(0.01, r), &probe, Solver::Full).map_or(f64::NAN, |f| f - 0.5);
    match bisect(f, 0.1, 0.3, 1e-10) {
        Some(r) => outcome(
            (r - target).abs() <= 5e-3,
            format!(
                "F = 1/2 at r = {r:.6}, closed form {target:.6}, |Δr| = {:.2e} (tol 5e-3)",
                (r - target).abs()
            ),
        ),
        None => outcome(false, "no sign change of F − 1/2 on r ∈ [0.1, 0.3]"),
    }
}

fn maximal_violation() -> Outcome {
    let probe = InputState::probe(1e-4);
    let full = SystemParams::symmetric(1e-3, 0.99, 1e-5, 0.2, 1e-3);
    let f_full = violation(&full, &probe, Solver::Full).unwrap_or(f64::NAN);
    let rwa = SystemParams::symmetric(0.01, 0.99, 1e-5, 0.2, 1e-3);
    let f_rwa = violation(&rwa, &probe, Solver::Rwa).unwrap_or(f64::NAN);
    let f_full_wide = violation(&rwa, &probe, Solver::Full).unwrap_or(f64::NAN);
    let pass = (1.0 - f_full).abs() <= 1e-2 && (1.0 - f_rwa).abs() <= 1e-2;
    outcome(
        pass,
        format!(
            "r = 1e-3, α_i = 1e-4: full F = {f_full:.5} (κ = 1e-3, C = {:.2e}), RWA F = {f_rwa:.5} (κ = 0.01, C = {:.2e}); \
             full at κ = 0.01 gives {f_full_wide:.5} (info)",
            full.cooperativity(),
            rwa.cooperativity()
        ),
    )
}

fn preset_f(name: &str) -> Vec<(f64, f64)> {
    let preset = presets::load(name, &[]).expect("preset loads");
    let report = presets::run(&preset).expect("preset runs");
    let r_e = report.table.numbers("r_e").expect("r_e column");
    let f = report.table.numbers("f").expect("f column");
    r_e.into_iter().zip(f).collect()
}

fn presets_values() -> Outcome {
    let expected = [
        ("microwave", [(0.9, 0.56), (0.99, 0.58)]),
        ("optical", [(0.9, 0.59), (0.99, 0.60)]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, targets) in expected {
        let values = preset_f(name);
        for (r_e, want) in targets {
            let got = values.iter().find(|(x, _)| *x == r_e).map_or(f64::NAN, |v| v.1);
            let ok = (got - want).abs() <= 0.02;
            pass &= ok;
            parts.push(format!(
                "{name} r_e={r_e}: F = {got:.4} (want {want} ± 0.02){}",
                if ok { "" } else { " ✗" }
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn occupancy_constants() -> Outcome {
    let micro = bose_occupancy(7e-3, 10e9).unwrap();
    let optical = bose_occupancy(300.0, 500e12).unwrap();
    let pass = (micro - 0.015).abs() <= 0.002 && (optical - 0.02).abs() <= 0.005;
    outcome(
        pass,
        format!("bose(7 mK, 10 GHz) = {micro:.3e} (want 0.015 ± 0.002); bose(300 K, 500 THz) = {optical:.3e} (want 0.02 ± 0.005)"),
    )
}

fn rwa_convergence() -> Outcome {
    let preset = presets::load("fig5", &[]).unwrap();
    let Command::CompareRwa { x, y, kappas } = &preset.command else {
        return outcome(false, "fig5 is not a compare-rwa preset");
    };
    let report = compare_rwa(&preset.config, kappas, x, y, false).unwrap();
    let t = &report.table;
    let column = |name: &str| t.column(name).expect("column");
    let (solver, kappa, area, disp) = (
        column("solver"),
        column("kappa"),
        column("area"),
        column("displacement_cells"),
    );
    let hausdorff = column("hausdorff_cells");
    let full = |k: f64, c: usize| {
        t.rows
            .iter()
            .find(|row| row[solver] == Value::Text("full".into()) && row[kappa] == Value::Num(k))
            .and_then(|row| match row[c] {
                Value::Num(v) => Some(v),
                _ => None,
            })
            .unwrap_or(f64::NAN)
    };
    let (a1, a2, a10) = (full(0.01, area), full(0.02, area), full(0.1, area));
    let d = full(0.01, disp);
    let pass = a10 < a2 && a2 < a1 && d <= 2.0;
    outcome(
        pass,
        format!(
            "areas κ=0.1: {a10:.5} < κ=0.02: {a2:.5} < κ=0.01: {a1:.5}; κ=0.01 boundary within {d:.3} cells of RWA \
             (tol 2, {}×{} grid; Hausdorff {:.3})",
            x.count,
            y.count,
            full(0.01, hausdorff)
        ),
    )
}

fn boundary_crossing() -> Outcome {
    let preset = presets::load("fig2b", &[]).unwrap();
    let Command::Contour { x, y, .. } = &preset.command else {
        return outcome(false, "fig2b is not a contour preset");
    };
    let (exact, _, _) = contour_family(&preset.config, x, y, Some(("r_e", &[0.9, 0.99])), false).unwrap();
    let hits = intersections(&exact[0].contour, &exact[1].contour);
    let inside: Vec<_> = hits.iter().filter(|p| (0.1..=0.3).contains(&p.0)).collect();
    let listed: Vec<String> = hits.iter().map(|p| format!("(α_i {:.4}, r {:.4})", p.0, p.1)).collect();
    outcome(
        !inside.is_empty(),
        format!("r_e 0.9 vs 0.99 crossings: [{}]", listed.join(", ")),
    )
}

fn commutators() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let p = random_stable_params(&mut rng);
        for k in 0..11 {
            let omega = -0.2 + 0.04 * k as f64;
            let s = solve_full_scattering(&p, omega).expect("stable parameters solve");
            worst = worst.max(commutator_residual(&s));
        }
    }
    outcome(
        worst < 1e-9,
        format!("500 stable sets × 11 frequencies in [-0.2, 0.2]: max residual {worst:.2e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_terms: f64 = 0.0;
    let mut worst_corrected: f64 = 0.0;
    let mut worst_literal: f64 = 0.0;
    let mut worst_reproduced: f64 = 0.0;
    let mut active = [false; 9];
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let inputs = random_inputs(&mut rng);
        let k = rwa_coefficients(&p, 0.0).expect("coefficients");
        let wick = propagate_coefficients(&k, &inputs).expect("moments").correlators();
        let closed = closed_form_correlators(&k, &inputs);
        let errata = fourth_order_errata(&k, &inputs);
        let scale = wick.cross_phase.norm().max(1e-300);
        worst_terms = worst_terms
            .max(rel(closed.n_a, wick.n_a))
            .max(rel(closed.n_c, wick.n_c))
            .max((closed.cross_phase - wick.cross_phase).norm() / scale)
            .max((closed.cross_squeeze - wick.cross_squeeze).norm() / wick.cross_squeeze.norm().max(1e-300));
        let corrected = closed.fourth + errata.iter().sum::<f64>();
        worst_corrected = worst_corrected.max(rel(corrected, wick.fourth));
        worst_literal = worst_literal.max(rel(closed.fourth, wick.fourth));
        worst_reproduced = worst_reproduced.max(rel(wick.fourth - closed.fourth, errata.iter().sum::<f64>()));
        for (flag, e) in active.iter_mut().zip(errata) {
            *flag |= e.abs() > 1e-12 * wick.fourth;
        }
    }
    println!("      erratum report (fourth-order moment, closed form vs Wick):");
    for (e, on) in FOURTH_ORDER_ERRATA.iter().zip(active) {
        println!(
            "        {:<9} {} {}",
            e.id,
            if on { "[active]" } else { "[silent]" },
            e.description
        );
    }
    let pass = worst_terms < 1e-9 && worst_corrected < 1e-9;
    outcome(
        pass,
        format!(
            "200 draws: second-order terms {worst_terms:.2e}, corrected fourth {worst_corrected:.2e} (tol 1e-9); \
             literal fourth off by up to {worst_literal:.2e}, reproduced by the erratum sum to {worst_reproduced:.2e}"
        ),
    )
}

fn chain_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let st = random_state(&mut rng);
        let corr = st.correlators();
        let cd = bell_cd(&corr).expect("signal");
        for _ in 0..20 {
            let (theta, phi) = (rng.gen_range(-3.2..3.2), rng.gen_range(-3.2..3.2));
            let cfg = optobell_core::DetectionConfig::balanced(cd.beta_opt, theta, phi);
            let chain = chain_correlation(&st, &cfg).expect("chain");
            worst = worst.max((chain - closed_form_correlation(&corr, &cd, theta, phi)).abs());
        }
    }
    outcome(
        worst < 1e-9,
        format!("100 states × 20 angle pairs at β = beta_opt: max |ΔE| {worst:.2e}"),
    )
}

fn bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut max_e, mut max_s): (f64, f64) = (0.0, 0.0);
    let mut mismatches = 0;
    let mut states = 0;
    let mut check = |st: &OutputGaussianState, rng: &mut ChaCha8Rng| {
        let corr = st.correlators();
        let Ok(cd) = bell_cd(&corr) else { return };
        states += 1;
        let base = optobell_core::DetectionConfig::balanced(cd.beta_opt, 0.0, 0.0);
        for _ in 0..8 {
            let (theta, phi) = (rng.gen_range(-3.2..3.2), rng.gen_range(-3.2..3.2));
            let cfg = optobell_core::DetectionConfig { theta, phi, ..base };
            max_e = max_e.max(chain_correlation(st, &cfg).expect("chain").abs());
        }
        let mut angle = || rng.gen_range(-3.2..3.2);
        let raw = AngleSet {
            theta_1: angle(),
            phi_1: angle(),
            theta_2: angle(),
            phi_2: angle(),
        };
        max_s = max_s.max(chsh_from_chain(st, &base, &raw).expect("chsh").abs());
        if let Ok(opt) = chsh_s_max(cd.c, cd.d) {
            max_s = max_s.max(opt.s_max);
            let m = BellMetrics::from_correlators(&corr).expect("metrics");
            if (m.f > 0.5) != (opt.s_max.abs() > 2.0) || m.violation != (m.s_max.abs() > 2.0) {
                mismatches += 1;
            }
        }
    };
    for _ in 0..300 {
        let st = random_state(&mut rng);
        check(&st, &mut rng);
    }
    // states straddling the violation boundary
    let probe = InputState::probe(1e-4);
    for k in 0..200 {
        let r = 0.17 + 0.025 * k as f64 / 200.0;
        let st = output_state(&pushed_params(0.01, r), &probe, 0.0, Solver::Full).expect("solve");
        check(&st, &mut rng);
    }
    let pass = max_e <= 1.0 && max_s <= 2.0 * SQRT_2 + 1e-9 && mismatches == 0;
    outcome(
        pass,
        format!("{states} states: max |E| {max_e:.6}, max |S| {max_s:.9} (2√2 = {:.9}), F>1/2 vs S_max>2 mismatches {mismatches}", 2.0 * SQRT_2),
    )
}

fn sensitivity_slopes() -> Outcome {
    let r_e = 0.9;
    let probe = InputState::probe(1e-4);
    let mut worst: Vec<(f64, String)> = vec![(0.0, String::new()); Bath::PRIMARY.len()];
    let mut mech = Vec::new();
    for c_minus in [1e4, 1e5, 1e6] {
        let gamma = 4.0 * 0.2 * 0.2 / (0.01 * c_minus);
        let mut mech_row = Vec::new();
        for r in [0.05, 0.1, 0.15, 0.2, 0.25] {
            let p = SystemParams::symmetric(0.01, r_e, gamma, 0.2, r);
            let analytic = sensitivity_coefficients(r, r_e, p.cooperativity()).expect("coefficients");
            for (b, bath) in Bath::PRIMARY.into_iter().enumerate() {
                let fd = finite_difference_with(&p, &probe, bath, Solver::Full, FD_STEP).expect("finite difference");
                let a = analytic.slope(bath).expect("primary bath");
                let err = rel(fd.abs(), a.abs());
                if err > worst[b].0 {
                    worst[b] = (
                        err,
                        format!(
                            "{} {:.1}% at r={r}, C={c_minus:.0e}",
                            bath.name(),
                            100.0 * err,
                            c_minus = c_minus
                        ),
                    );
                }
                if bath == Bath::Mechanical {
                    mech_row.push(fd.abs());
                }
            }
        }
        mech.push(mech_row);
    }
    let shrink = mech
        .windows(2)
        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a / b).collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min);
    let pass = worst.iter().all(|w| w.0 <= 0.1) && shrink >= 5.0;
    let listed: Vec<&str> = worst.iter().map(|w| w.1.as_str()).collect();
    outcome(
        pass,
        format!(
            "worst |FD| vs |analytic| mismatch per bath (tol 10%): {}; min mechanical shrink per ×10 in C = {shrink:.2} (need ≥ 5)",
            listed.join(", ")
        ),
    )
}

fn run_preset(name: &str, workers: usize, out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let status = Process::new(env!("CARGO_BIN_EXE_optobell"))
        .args(["--workers", &workers.to_string(), "presets", "run", name, "--out"])
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("{name} with {workers} workers exited with {status}"));
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("readable output"),
            )
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut differing = Vec::new();
    let mut files = 0;
    for (name, _) in PRESETS {
        let runs: Result<Vec<_>, String> = [(1, "a"), (8, "b"), (8, "c")]
            .iter()
            .map(|&(w, tag)| run_preset(name, w, &dir.path().join(format!("{name}-{tag}"))))
            .collect();
        match runs {
            Ok(r) => {
                files += r[0].len();
                if r[0] != r[1] || r[1] != r[2] || r[0].is_empty() {
                    differing.push(name.to_string());
                }
            }
            Err(e) => differing.push(e),
        }
    }
    outcome(
        differing.is_empty(),
        format!(
            "{} presets, {files} files, workers 1/8/8: differing [{}]",
            PRESETS.len(),
            differing.join(", ")
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("violation threshold", violation_threshold),
        ("maximal violation", maximal_violation),
        ("microwave and optical presets", presets_values),
        ("occupancy constants", occupancy_constants),
        ("RWA convergence", rwa_convergence),
        ("boundary crossing", boundary_crossing),
        ("commutator preservation", commutators),
        ("oracle equivalence", oracle_equivalence),
        ("detection-chain equivalence", chain_equivalence),
        ("bounds", bounds),
        ("sensitivity slopes", sensitivity_slopes),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "[{}] {:>2}. {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
