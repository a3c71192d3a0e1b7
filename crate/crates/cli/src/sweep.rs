//! Grid sweeps over whitelisted configuration keys.

use std::str::FromStr;

use optobell_core::model::check_stability;
use optobell_core::pipeline::{coefficients, correlators};
use optobell_core::{BellMetrics, CoefficientSet, Solver};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, VARIABLE_KEYS};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn linear(name: &str, min: f64, max: f64, count: usize) -> CliResult<Self> {
        let axis = Self {
            name: name.to_string(),
            min,
            max,
            count,
            scale: Scale::Linear,
        };
        axis.check()?;
        Ok(axis)
    }

    fn check(&self) -> CliResult<()> {
        if !VARIABLE_KEYS.contains(&self.name.as_str()) {
            return Err(CliError::Config(format!(
                "axis `{}` is not sweepable (allowed: {})",
                self.name,
                VARIABLE_KEYS.join(", ")
            )));
        }
        if self.count < 2 {
            return Err(CliError::Config(format!(
                "axis `{}` needs at least 2 points",
                self.name
            )));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(CliError::Config(format!("axis `{}` needs finite min < max", self.name)));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(CliError::Config(format!("log axis `{}` needs min > 0", self.name)));
        }
        Ok(())
    }

    /// Grid values; both endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    return self.max;
                }
                let t = k as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * t,
                    Scale::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

/// `name:min:max:count[:log]`.
impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Config(format!("axis `{s}` is not name:min:max:count[:lin|log]"));
        if parts.len() != 4 && parts.len() != 5 {
            return Err(bad());
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let scale = match parts.get(4).map(|t| t.trim()) {
            None | Some("lin") | Some("linear") => Scale::Linear,
            Some("log") => Scale::Log,
            Some(_) => return Err(bad()),
        };
        let axis = Self {
            name: parts[0].trim().to_string(),
            min: num(parts[1])?,
            max: num(parts[2])?,
            count: parts[3].trim().parse().map_err(|_| bad())?,
            scale,
        };
        axis.check()?;
        Ok(axis)
    }
}

/// Requested per-point quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Output {
    C,
    D,
    F,
    SMax,
    Z,
    BetaOpt,
    NA,
    NC,
    Coefficients,
}

impl FromStr for Output {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s.trim() {
            "c" => Output::C,
            "d" => Output::D,
            "f" => Output::F,
            "s_max" => Output::SMax,
            "z" => Output::Z,
            "beta_opt" => Output::BetaOpt,
            "n_a" => Output::NA,
            "n_c" => Output::NC,
            "coefficients" => Output::Coefficients,
            other => {
                return Err(CliError::Config(format!(
                    "unknown output `{other}` (allowed: c, d, f, s_max, z, beta_opt, n_a, n_c, coefficients)"
                )))
            }
        })
    }
}

/// One emitted cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub base: RunConfig,
    pub outputs: Vec<Output>,
    pub workers: usize,
}

/// Columns and rows of a sweep; rows follow the grid with the first axis
/// varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column, with `NaN` for non-numeric cells.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        Some(self.rows.iter().map(|r| r[k].as_f64().unwrap_or(f64::NAN)).collect())
    }
}

/// Output column names, sorted, always including `stable`.
pub fn output_columns(outputs: &[Output]) -> Vec<String> {
    let mut cols: Vec<String> = vec!["stable".to_string()];
    for o in outputs {
        match o {
            Output::Coefficients => {
                for name in CoefficientSet::NAMES {
                    cols.push(format!("{name}_re"));
                    cols.push(format!("{name}_im"));
                }
            }
            other => cols.push(
                match other {
                    Output::C => "c",
                    Output::D => "d",
                    Output::F => "f",
                    Output::SMax => "s_max",
                    Output::Z => "z",
                    Output::BetaOpt => "beta_opt",
                    Output::NA => "n_a",
                    Output::NC => "n_c",
                    Output::Coefficients => unreachable!(),
                }
                .to_string(),
            ),
        }
    }
    cols.sort();
    cols.dedup();
    cols
}

/// Whether `cfg` describes a stable device for its solver.
pub fn is_stable(cfg: &RunConfig) -> bool {
    let p = cfg.system_params();
    if p.validate().is_err() {
        return false;
    }
    match cfg.solver {
        Solver::Full => check_stability(&p).stable,
        Solver::Rwa => true,
    }
}

/// Evaluates the sorted `columns` at one configuration. Unstable points and
/// failed evaluations give `NaN`.
pub fn evaluate(cfg: &RunConfig, columns: &[String]) -> Vec<Value> {
    let stable = is_stable(cfg);
    let mut named: Vec<(String, f64)> = Vec::new();
    if stable {
        let p = cfg.system_params();
        let inputs = cfg.inputs();
        if let Ok(corr) = correlators(&p, &inputs, cfg.omega, cfg.solver) {
            named.push(("n_a".to_string(), corr.n_a));
            named.push(("n_c".to_string(), corr.n_c));
            if let Ok(m) = BellMetrics::from_correlators(&corr) {
                named.extend([
                    ("c".to_string(), m.c),
                    ("d".to_string(), m.d),
                    ("f".to_string(), m.f),
                    ("s_max".to_string(), m.s_max),
                    ("z".to_string(), m.z),
                    ("beta_opt".to_string(), m.beta_opt),
                ]);
            }
        }
        if columns.iter().any(|c| c.ends_with("_re")) {
            if let Ok(k) = coefficients(&p, cfg.omega, cfg.solver) {
                for (name, v) in CoefficientSet::NAMES.iter().zip(k.values()) {
                    named.push((format!("{name}_re"), v.re));
                    named.push((format!("{name}_im"), v.im));
                }
            }
        }
    }
    columns
        .iter()
        .map(|col| {
            if col == "stable" {
                return Value::Bool(stable);
            }
            let v = named
                .iter()
                .find(|(n, _)| n == col)
                .map(|(_, v)| *v)
                .unwrap_or(f64::NAN);
            Value::Num(v)
        })
        .collect()
}

/// Runs `f` on a pool of `workers` threads (0: rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Grid points as configurations, first axis slowest.
pub fn grid_points(spec: &SweepSpec) -> CliResult<Vec<(Vec<f64>, RunConfig)>> {
    let values: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect();
    let total: usize = values.iter().map(Vec::len).product();
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut coords = vec![0.0; values.len()];
        for (k, vals) in values.iter().enumerate().rev() {
            coords[k] = vals[rem % vals.len()];
            rem /= vals.len();
        }
        let mut cfg = spec.base.clone();
        for (axis, &v) in spec.axes.iter().zip(&coords) {
            cfg.set(&axis.name, v)?;
        }
        points.push((coords, cfg));
    }
    Ok(points)
}

pub fn run_sweep(spec: &SweepSpec) -> CliResult<Table> {
    if spec.axes.is_empty() {
        return Err(CliError::Config("a sweep needs at least one axis".into()));
    }
    let mut names: Vec<&str> = spec.axes.iter().map(|a| a.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config("duplicate sweep axis".into()));
    }
    let outputs = output_columns(&spec.outputs);
    let points = grid_points(spec)?;
    log::info!("sweep over {} points with {} workers", points.len(), spec.workers);
    let rows = with_workers(spec.workers, || {
        points
            .par_iter()
            .map(|(coords, cfg)| {
                let mut row: Vec<Value> = coords.iter().map(|&x| Value::Num(x)).collect();
                row.extend(evaluate(cfg, &outputs));
                row
            })
            .collect::<Vec<_>>()
    })?;
    let flag = spec.axes.len() + outputs.iter().position(|c| c == "stable").expect("stable column");
    let unstable = rows.iter().filter(|r| r[flag] == Value::Bool(false)).count();
    if unstable > 0 {
        log::warn!("{unstable} of {} grid points are unstable", rows.len());
    }
    let mut columns: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    columns.extend(outputs);
    Ok(Table { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2(r_e: f64) -> RunConfig {
        RunConfig {
            kappa: 0.1,
            r_e,
            gamma: 1e-5,
            g_minus: 0.2,
            ..RunConfig::default()
        }
    }

    #[test]
    fn axis_parsing_and_values() {
        let a: Axis = "r:0.05:0.1:2".parse().unwrap();
        assert_eq!(a.values(), vec![0.05, 0.1]);
        let l: Axis = "gamma:1e-7:1e-5:3:log".parse().unwrap();
        let v = l.values();
        assert_eq!(v[2], 1e-5);
        assert!((v[1] - 1e-6).abs() < 1e-18);
        for bad in [
            "r:0:1",
            "r:1:0:3",
            "eta_1:0:1:3",
            "r:0:1:1",
            "gamma:0:1:3:log",
            "r:0:1:3:cubic",
        ] {
            assert!(bad.parse::<Axis>().is_err(), "{bad}");
        }
    }

    #[test]
    fn columns_sorted_with_stable_flag() {
        let cols = output_columns(&[Output::SMax, Output::F, Output::C]);
        assert_eq!(cols, vec!["c", "f", "s_max", "stable"]);
    }

    #[test]
    fn two_by_two_grid() {
        let spec = SweepSpec {
            axes: vec!["alpha_i:0:0.1:2".parse().unwrap(), "r:0.05:0.1:2".parse().unwrap()],
            base: fig2(0.9),
            outputs: vec![Output::C, Output::F],
            workers: 1,
        };
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.columns, vec!["alpha_i", "r", "c", "f", "stable"]);
        // first axis slowest
        assert_eq!(t.rows[1][0], Value::Num(0.0));
        assert_eq!(t.rows[1][1], Value::Num(0.1));
        let c = t.numbers("c").unwrap();
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!(c[2] > 1e-3 && c[3] > 1e-3);
    }

    #[test]
    fn unstable_cells_are_flagged() {
        let spec = SweepSpec {
            axes: vec!["r:0.5:1.5:3".parse().unwrap()],
            base: fig2(0.9),
            outputs: vec![Output::F],
            workers: 2,
        };
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.rows[2][2], Value::Bool(false));
        assert!(t.numbers("f").unwrap()[2].is_nan());
        assert_eq!(t.rows[0][2], Value::Bool(true));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mk = |w| SweepSpec {
            axes: vec!["alpha_i:0:0.3:7".parse().unwrap(), "r:0.01:0.3:9".parse().unwrap()],
            base: fig2(0.9),
            outputs: vec![Output::F, Output::Coefficients],
            workers: w,
        };
        let a = run_sweep(&mk(1)).unwrap();
        let b = run_sweep(&mk(8)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
