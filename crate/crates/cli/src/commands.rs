//! Subcommand implementations. Each returns a [`Report`] that the binary
//! renders as CSV, JSON and optionally SVG.

use optobell_core::bell::{chain_correlation, closed_form_correlation, verify_chsh_from_angles};
use optobell_core::dynamics::{commutator_residual, solve_full_scattering, INPUT_LABELS, OUTPUT_LABELS};
use optobell_core::model::check_stability;
use optobell_core::pipeline::{coefficients, correlators, output_map, violation};
use optobell_core::sensitivity::{
    alpha_boundary, finite_difference_with, optimal_r as optimal_point, sensitivity_coefficients, FD_STEP,
};
use optobell_core::{Bath, BellMetrics, InputState, Solver};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::contour::{directed_displacement, extract_contour, hausdorff_displacement, ContourResult, Grid};
use crate::emit::{self, Meta, Overlay};
use crate::error::{CliError, CliResult};
use crate::sweep::{is_stable, run_sweep, with_workers, Axis, Output, SweepSpec, Table, Value};

/// Violation threshold `F = 1/2`.
pub const LEVEL: f64 = 0.5;

pub struct Report {
    pub config: RunConfig,
    pub table: Table,
    pub meta: Meta,
    pub svg: Option<String>,
}

impl Report {
    pub fn csv(&self) -> CliResult<String> {
        emit::to_csv(&self.table)
    }

    pub fn json(&self) -> CliResult<String> {
        emit::to_json(&self.config, &self.table, &self.meta)
    }
}

fn num(x: f64) -> Value {
    Value::Num(x)
}

fn text(s: &str) -> Value {
    Value::Text(s.to_string())
}

/// Builds a table from named columns; key columns keep their order, the rest
/// are sorted.
fn keyed_table(keys: &[&str], rows: Vec<Vec<(&str, Value)>>) -> Table {
    let mut outputs: Vec<String> = rows
        .first()
        .map(|r| {
            r.iter()
                .map(|(n, _)| n.to_string())
                .filter(|n| !keys.contains(&n.as_str()))
                .collect()
        })
        .unwrap_or_default();
    outputs.sort();
    let mut columns: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
    columns.extend(outputs);
    let rows = rows
        .into_iter()
        .map(|r| {
            columns
                .iter()
                .map(|c| {
                    r.iter()
                        .find(|(n, _)| n == c)
                        .map(|(_, v)| v.clone())
                        .unwrap_or(num(f64::NAN))
                })
                .collect()
        })
        .collect();
    Table { columns, rows }
}

/// Scattering matrix (full solver) or resonant coefficients (RWA) at a point.
pub fn scatter(cfg: &RunConfig) -> CliResult<Report> {
    let p = cfg.system_params();
    let stability = check_stability(&p);
    let k = coefficients(&p, cfg.omega, cfg.solver)?;
    let (kaa, kcc, kac) = k.commutators();
    let mut meta = Meta::new("scatter")
        .with("stable", stability.stable)
        .with("max_real_eigenvalue", stability.max_real_part)
        .with("solver", cfg.solver.name())
        .with("coefficient_commutators", [kaa, kcc, kac.re, kac.im]);
    let table = match cfg.solver {
        Solver::Full => {
            let s = solve_full_scattering(&p, cfg.omega)?;
            meta = meta
                .with("nu", s.nu)
                .with("commutator_residual", commutator_residual(&s))
                .with("co_rotating_leakage", s.co_rotating_leakage());
            let mut rows = Vec::new();
            for (r, out) in OUTPUT_LABELS.iter().enumerate() {
                for (c, inp) in INPUT_LABELS.iter().enumerate() {
                    let z = s.entry(r, c);
                    rows.push(vec![
                        ("output", text(out)),
                        ("input", text(inp)),
                        ("re", num(z.re)),
                        ("im", num(z.im)),
                    ]);
                }
            }
            keyed_table(&["output", "input"], rows)
        }
        Solver::Rwa => {
            let rows = optobell_core::CoefficientSet::NAMES
                .iter()
                .zip(k.values())
                .map(|(n, z)| vec![("coefficient", text(n)), ("re", num(z.re)), ("im", num(z.im))])
                .collect();
            keyed_table(&["coefficient"], rows)
        }
    };
    let named: Vec<(String, [f64; 2])> = optobell_core::CoefficientSet::NAMES
        .iter()
        .zip(k.values())
        .map(|(n, z)| (n.to_string(), [z.re, z.im]))
        .collect();
    Ok(Report {
        config: cfg.clone(),
        table,
        meta: meta.with("coefficients", named),
        svg: None,
    })
}

/// Single-point Bell metrics, with the configured LO angles evaluated through
/// the detection chain and the closed form.
pub fn bell(cfg: &RunConfig) -> CliResult<Report> {
    if !is_stable(cfg) {
        return Err(CliError::Numerical("configuration is unstable".into()));
    }
    let p = cfg.system_params();
    let inputs = cfg.inputs();
    let state = optobell_core::pipeline::output_state(&p, &inputs, cfg.omega, cfg.solver)?;
    let corr = state.correlators();
    let m = BellMetrics::from_correlators(&corr)?;
    let det = cfg.detection(m.beta_opt);
    det.validate()?;
    let e_chain = chain_correlation(&state, &det)?;
    let cd = optobell_core::bell::bell_cd(&corr)?;
    let e_closed = closed_form_correlation(&corr, &cd, cfg.theta, cfg.phi);
    let s_chain = verify_chsh_from_angles(&state)?;
    let row = vec![
        ("c", num(m.c)),
        ("d", num(m.d)),
        ("f", num(m.f)),
        ("z", num(m.z)),
        ("beta_opt", num(m.beta_opt)),
        ("s_max", num(m.s_max)),
        ("s_chain", num(s_chain)),
        ("zeta_0", num(m.zeta_0)),
        ("e_chain", num(e_chain)),
        ("e_closed_form", num(e_closed)),
        ("violation", Value::Bool(m.violation)),
        ("theta_1", num(m.raw.theta_1)),
        ("phi_1", num(m.raw.phi_1)),
        ("theta_2", num(m.raw.theta_2)),
        ("phi_2", num(m.raw.phi_2)),
    ];
    Ok(Report {
        config: cfg.clone(),
        table: keyed_table(&[], vec![row]),
        meta: Meta::new("bell")
            .with("barred_angles", m.barred)
            .with("correlators", corr),
        svg: None,
    })
}

fn grid_of(table: &Table, x: &Axis, y: &Axis, column: &str) -> CliResult<Grid> {
    let values = table
        .numbers(column)
        .ok_or_else(|| CliError::Config(format!("sweep has no `{column}` column")))?;
    Grid::new(x.values(), y.values(), values)
}

/// `F` on an `x × y` grid.
pub fn f_grid(cfg: &RunConfig, x: &Axis, y: &Axis) -> CliResult<(Table, Grid)> {
    let spec = SweepSpec {
        axes: vec![x.clone(), y.clone()],
        base: cfg.clone(),
        outputs: vec![Output::F],
        workers: cfg.workers,
    };
    let table = run_sweep(&spec)?;
    let grid = grid_of(&table, x, y, "f")?;
    Ok((table, grid))
}

fn bounds(x: &Axis, y: &Axis) -> (f64, f64, f64, f64) {
    (x.min, x.max, y.min, y.max)
}

pub fn sweep(cfg: &RunConfig, axes: Vec<Axis>, outputs: Vec<Output>, svg: bool) -> CliResult<Report> {
    let spec = SweepSpec {
        axes: axes.clone(),
        base: cfg.clone(),
        outputs,
        workers: cfg.workers,
    };
    let table = run_sweep(&spec)?;
    let mut meta = Meta::new("sweep").with("axes", &axes);
    let mut image = None;
    if axes.len() == 2 && table.column("f").is_some() {
        let grid = grid_of(&table, &axes[0], &axes[1], "f")?;
        let contour = extract_contour(&grid, LEVEL);
        meta = meta
            .with("violation_area", contour.area)
            .with("contour_polylines", contour.polylines.len());
        if svg {
            image = Some(emit::to_svg(
                bounds(&axes[0], &axes[1]),
                Some((&grid, 0.0, 1.0)),
                &[Overlay {
                    label: "F = 1/2".into(),
                    contour: &contour,
                }],
                (&axes[0].name, &axes[1].name),
            ));
        }
    } else if svg {
        return Err(CliError::Config("SVG output needs a two-axis sweep with `f`".into()));
    }
    Ok(Report {
        config: cfg.clone(),
        table,
        meta,
        svg: image,
    })
}

/// One member of a contour family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyContour {
    pub label: String,
    pub value: Option<f64>,
    pub contour: ContourResult,
}

/// Small-drive boundary `α_i(r)` sampled on the `r` axis.
pub fn small_drive_boundary(r_axis: &Axis, r_e: f64) -> ContourResult {
    let mut polylines = Vec::new();
    let mut current = Vec::new();
    for r in r_axis.values() {
        match alpha_boundary(r, r_e) {
            Ok(a) => current.push((a, r)),
            Err(_) => {
                if current.len() > 1 {
                    polylines.push(std::mem::take(&mut current));
                }
                current.clear();
            }
        }
    }
    if current.len() > 1 {
        polylines.push(current);
    }
    ContourResult {
        level: LEVEL,
        polylines,
        area: f64::NAN,
    }
}

/// `F = 1/2` boundaries over `(x, y)`, optionally for a family of values of
/// one key, plus the small-drive boundary when `x = alpha_i`, `y = r`.
pub fn contour_family(
    cfg: &RunConfig,
    x: &Axis,
    y: &Axis,
    family: Option<(&str, &[f64])>,
    analytic: bool,
) -> CliResult<(Vec<FamilyContour>, Vec<FamilyContour>, Option<Grid>)> {
    let members: Vec<(String, Option<f64>, RunConfig)> = match family {
        None => vec![("base".to_string(), None, cfg.clone())],
        Some((key, values)) => {
            if values.is_empty() {
                return Err(CliError::Config("empty family".into()));
            }
            values
                .iter()
                .map(|&v| {
                    let mut c = cfg.clone();
                    set_family(&mut c, key, v)?;
                    Ok((format!("{key}={}", emit::format_float(v)), Some(v), c))
                })
                .collect::<CliResult<_>>()?
        }
    };
    let mut exact = Vec::new();
    let mut first_grid = None;
    for (label, value, c) in members.iter() {
        let (_, grid) = f_grid(c, x, y)?;
        exact.push(FamilyContour {
            label: label.clone(),
            value: *value,
            contour: extract_contour(&grid, LEVEL),
        });
        first_grid.get_or_insert(grid);
    }
    let mut small = Vec::new();
    if analytic {
        if x.name != "alpha_i" || y.name != "r" {
            return Err(CliError::Config(
                "the small-drive boundary needs x = alpha_i and y = r".into(),
            ));
        }
        for (label, value, c) in members.iter() {
            small.push(FamilyContour {
                label: label.clone(),
                value: *value,
                contour: small_drive_boundary(y, c.r_e),
            });
        }
    }
    Ok((exact, small, first_grid))
}

fn set_family(cfg: &mut RunConfig, key: &str, v: f64) -> CliResult<()> {
    cfg.set(key, v)
}

pub fn contour(
    cfg: &RunConfig,
    x: &Axis,
    y: &Axis,
    family: Option<(&str, &[f64])>,
    analytic: bool,
    svg: bool,
) -> CliResult<Report> {
    let (exact, small, grid) = contour_family(cfg, x, y, family, analytic)?;
    let family_key = family.map(|(k, _)| k).unwrap_or("family");
    let mut rows = Vec::new();
    for (curve, set) in [("exact", &exact), ("small_drive", &small)] {
        for m in set.iter() {
            for (k, pl) in m.contour.polylines.iter().enumerate() {
                for (n, &(px, py)) in pl.iter().enumerate() {
                    rows.push(vec![
                        ("member", text(&m.label)),
                        ("curve", text(curve)),
                        ("polyline", num(k as f64)),
                        ("point", num(n as f64)),
                        (x.name.as_str(), num(px)),
                        (y.name.as_str(), num(py)),
                    ]);
                }
            }
        }
    }
    let mut table = keyed_table(&["member", "curve", "polyline", "point"], rows);
    if table.rows.is_empty() {
        table.columns = ["member", "curve", "polyline", "point", x.name.as_str(), y.name.as_str()]
            .iter()
            .map(|s| s.to_string())
            .collect();
    }
    let areas: Vec<(String, f64)> = exact.iter().map(|m| (m.label.clone(), m.contour.area)).collect();
    let meta = Meta::new("contour")
        .with("family_key", family_key)
        .with("axes", [x, y])
        .with("areas", areas);
    let image = if svg {
        let mut overlays: Vec<Overlay<'_>> = exact
            .iter()
            .map(|m| Overlay {
                label: format!("{} (exact)", m.label),
                contour: &m.contour,
            })
            .collect();
        overlays.extend(small.iter().map(|m| Overlay {
            label: format!("{} (small drive)", m.label),
            contour: &m.contour,
        }));
        let heat = if family.is_none() {
            grid.as_ref().map(|g| (g, 0.0, 1.0))
        } else {
            None
        };
        Some(emit::to_svg(bounds(x, y), heat, &overlays, (&x.name, &y.name)))
    } else {
        None
    };
    Ok(Report {
        config: cfg.clone(),
        table,
        meta,
        svg: image,
    })
}

/// Per-bath noise curves at zero occupation elsewhere.
pub fn noise_table(cfg: &RunConfig, baths: &[Bath], n_max: f64, count: usize, use_r_opt: bool) -> CliResult<Report> {
    if count < 2 || !(n_max > 0.0 && n_max.is_finite()) {
        return Err(CliError::Config("noise curves need count ≥ 2 and n_max > 0".into()));
    }
    if baths.is_empty() {
        return Err(CliError::Config("no baths selected".into()));
    }
    let mut cfg = cfg.clone();
    let r_opt = optimal_point(cfg.r_e)?.r_opt;
    if use_r_opt {
        cfg.r = r_opt;
    }
    let p = cfg.system_params();
    if !is_stable(&cfg) {
        return Err(CliError::Numerical("configuration is unstable".into()));
    }
    let coeffs = sensitivity_coefficients(cfg.r, cfg.r_e, p.cooperativity())?;
    let base = InputState {
        n_e_a: 0.0,
        n_e_c: 0.0,
        n_i_a: 0.0,
        n_i_c: 0.0,
        n_m: 0.0,
        ..cfg.inputs()
    };
    let map = output_map(&p, cfg.omega, cfg.solver)?;
    let f0_exact = map.propagate(&base).correlators();
    let f0_exact = optobell_core::bell::bell_cd(&f0_exact)?.f();
    let ns: Vec<f64> = Axis::linear("n_e", 0.0, n_max, count)?.values();
    let jobs: Vec<(Bath, f64)> = baths.iter().flat_map(|&b| ns.iter().map(move |&n| (b, n))).collect();
    let rows = with_workers(cfg.workers, || {
        jobs.par_iter()
            .map(|&(bath, n)| {
                let corr = map.propagate(&bath.with_occupation(&base, n)).correlators();
                let f = optobell_core::bell::bell_cd(&corr).map(|cd| cd.f()).unwrap_or(f64::NAN);
                let slope = coeffs.slope(bath).unwrap_or(f64::NAN);
                vec![
                    ("bath", text(bath.name())),
                    ("n", num(n)),
                    ("f", num(f)),
                    ("f_linear_literal", num(coeffs.f0 - slope * n)),
                    ("f_linear_physical", num(coeffs.f0 - slope.abs() * n)),
                ]
            })
            .collect::<Vec<_>>()
    })?;
    let mut slopes = Vec::new();
    for &b in baths {
        let fd = finite_difference_with(&p, &base, b, cfg.solver, FD_STEP)?;
        slopes.push((b.name().to_string(), fd, coeffs.slope(b)));
    }
    let meta = Meta::new("noise")
        .with("r", cfg.r)
        .with("r_opt", r_opt)
        .with("c_minus", p.cooperativity())
        .with("f0_analytic", coeffs.f0)
        .with("f0_exact", f0_exact)
        .with("slopes_finite_difference_vs_analytic", slopes)
        .with("analytic", coeffs);
    Ok(Report {
        config: cfg,
        table: keyed_table(&["bath", "n"], rows),
        meta,
        svg: None,
    })
}

/// Full-solve boundaries for several linewidths against one RWA boundary,
/// computed at the smallest linewidth.
pub fn compare_rwa(cfg: &RunConfig, kappas: &[f64], x: &Axis, y: &Axis, svg: bool) -> CliResult<Report> {
    if kappas.is_empty() {
        return Err(CliError::Config("no kappa values".into()));
    }
    let reference = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rwa_cfg = cfg.clone();
    rwa_cfg.kappa = reference;
    rwa_cfg.solver = Solver::Rwa;
    let (_, rwa_grid) = f_grid(&rwa_cfg, x, y)?;
    let rwa = extract_contour(&rwa_grid, LEVEL);
    let mut fulls = Vec::new();
    for &k in kappas {
        let mut c = cfg.clone();
        c.kappa = k;
        c.solver = Solver::Full;
        let (_, grid) = f_grid(&c, x, y)?;
        fulls.push((k, extract_contour(&grid, LEVEL)));
    }
    let mut rows = vec![vec![
        ("solver", text("rwa")),
        ("kappa", num(reference)),
        ("area", num(rwa.area)),
        ("displacement_cells", num(0.0)),
        ("hausdorff_cells", num(0.0)),
    ]];
    for (k, c) in &fulls {
        rows.push(vec![
            ("solver", text("full")),
            ("kappa", num(*k)),
            ("area", num(c.area)),
            (
                "displacement_cells",
                num(directed_displacement(&rwa_grid, c, &rwa).unwrap_or(f64::NAN)),
            ),
            (
                "hausdorff_cells",
                num(hausdorff_displacement(&rwa_grid, c, &rwa).unwrap_or(f64::NAN)),
            ),
        ]);
    }
    let image = svg.then(|| {
        let mut overlays = vec![Overlay {
            label: format!("RWA, kappa={}", emit::format_float(reference)),
            contour: &rwa,
        }];
        overlays.extend(fulls.iter().map(|(k, c)| Overlay {
            label: format!("full, kappa={}", emit::format_float(*k)),
            contour: c,
        }));
        emit::to_svg(bounds(x, y), None, &overlays, (&x.name, &y.name))
    });
    Ok(Report {
        config: cfg.clone(),
        table: keyed_table(&["solver", "kappa"], rows),
        meta: Meta::new("compare-rwa")
            .with("axes", [x, y])
            .with("rwa_reference_kappa", reference),
        svg: image,
    })
}

/// Noise-optimal squeezing ratio and the exact `F` there, per `r_e`.
pub fn optimal_r(cfg: &RunConfig, r_es: &[f64]) -> CliResult<Report> {
    let values: Vec<f64> = if r_es.is_empty() { vec![cfg.r_e] } else { r_es.to_vec() };
    let mut rows = Vec::new();
    for &r_e in &values {
        let opt = optimal_point(r_e)?;
        let mut c = cfg.clone();
        c.r_e = r_e;
        c.r = opt.r_opt;
        let f = if is_stable(&c) {
            violation(&c.system_params(), &c.inputs(), c.solver)?
        } else {
            f64::NAN
        };
        rows.push(vec![
            ("r_e", num(r_e)),
            ("r_opt", num(opt.r_opt)),
            ("n_t", num(opt.n_t)),
            ("f0", num(optobell_core::sensitivity::f0(opt.r_opt))),
            ("f", num(f)),
        ]);
    }
    let corr_n = cfg.inputs();
    Ok(Report {
        config: cfg.clone(),
        table: keyed_table(&["r_e"], rows),
        meta: Meta::new("optimal-r").with("occupations", [corr_n.n_e_a, corr_n.n_i_a, corr_n.n_m]),
        svg: None,
    })
}

/// `F` at one point, for quick checks.
pub fn point_f(cfg: &RunConfig) -> CliResult<f64> {
    let corr = correlators(&cfg.system_params(), &cfg.inputs(), cfg.omega, cfg.solver)?;
    Ok(optobell_core::bell::bell_cd(&corr)?.f())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> RunConfig {
        RunConfig {
            kappa: 0.1,
            r_e: 0.9,
            gamma: 1e-5,
            g_minus: 0.2,
            alpha_i: 1e-3,
            chi_i: 1e-3,
            workers: 2,
            ..RunConfig::default()
        }
    }

    #[test]
    fn scatter_lists_all_entries() {
        let r = scatter(&fig2()).unwrap();
        assert_eq!(r.table.rows.len(), 40);
        assert_eq!(r.table.columns, vec!["output", "input", "im", "re"]);
        let rwa = scatter(&RunConfig {
            solver: Solver::Rwa,
            ..fig2()
        })
        .unwrap();
        assert_eq!(rwa.table.rows.len(), 10);
    }

    #[test]
    fn bell_point_is_consistent() {
        let r = bell(&fig2()).unwrap();
        let get = |c: &str| r.table.rows[0][r.table.column(c).unwrap()].as_f64().unwrap();
        assert!((get("s_chain") - get("s_max")).abs() < 1e-9);
        assert!((get("e_chain") - get("e_closed_form")).abs() < 1e-9);
        assert!(get("f") > 0.5);
    }

    #[test]
    fn unstable_point_is_numerical_error() {
        let err = bell(&RunConfig { r: 1.2, ..fig2() }).err().unwrap();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn contour_rows_use_axis_names() {
        let x: Axis = "alpha_i:0:0.5:21".parse().unwrap();
        let y: Axis = "r:0.001:0.3:21".parse().unwrap();
        let r = contour(&fig2(), &x, &y, None, true, true).unwrap();
        assert_eq!(
            r.table.columns,
            vec!["member", "curve", "polyline", "point", "alpha_i", "r"]
        );
        assert!(!r.table.rows.is_empty());
        let svg = r.svg.unwrap();
        assert!(svg.matches("<path").count() >= 1);
    }

    #[test]
    fn noise_curves_share_intercept() {
        let cfg = RunConfig {
            kappa: 0.01,
            alpha_i: 1e-4,
            ..fig2()
        };
        let r = noise_table(&cfg, &Bath::PRIMARY, 0.05, 6, true).unwrap();
        let f = r.table.numbers("f").unwrap();
        assert_eq!(f.len(), 18);
        assert_eq!(f[0], f[6]);
        assert_eq!(f[0], f[12]);
        assert!(f[5] > f[11] && f[11] > f[17], "{f:?}");
    }
}
