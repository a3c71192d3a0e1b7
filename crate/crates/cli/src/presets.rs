//! Shipped figure presets.
//!
//! A preset is a flat TOML document: run keys of [`RunConfig`] plus the
//! preset keys `description`, `command`, `x`, `y`, `outputs`, `family_key`,
//! `family`, `analytic`, `baths`, `n_max`, `count` and `kappas`.

use optobell_core::Bath;

use crate::commands::{self, Report};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::sweep::{Axis, Output};

pub const PRESETS: [(&str, &str); 8] = [
    ("fig2a", include_str!("../presets/fig2a.toml")),
    ("fig2b", include_str!("../presets/fig2b.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("microwave", include_str!("../presets/microwave.toml")),
    ("optical", include_str!("../presets/optical.toml")),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Sweep {
        axes: Vec<Axis>,
        outputs: Vec<Output>,
    },
    Contour {
        x: Axis,
        y: Axis,
        family: Option<(String, Vec<f64>)>,
        analytic: bool,
    },
    Noise {
        baths: Vec<Bath>,
        n_max: f64,
        count: usize,
    },
    CompareRwa {
        x: Axis,
        y: Axis,
        kappas: Vec<f64>,
    },
    OptimalR {
        r_es: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub command: Command,
    pub config: RunConfig,
}

pub fn source(name: &str) -> CliResult<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))
}

fn take_str(t: &mut toml::Table, key: &str) -> CliResult<Option<String>> {
    match t.remove(key) {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(CliError::Config(format!("preset key `{key}` must be a string"))),
    }
}

fn take_numbers(t: &mut toml::Table, key: &str) -> CliResult<Option<Vec<f64>>> {
    match t.remove(key) {
        None => Ok(None),
        Some(toml::Value::Array(a)) => a
            .iter()
            .map(|v| match v {
                toml::Value::Float(x) => Ok(*x),
                toml::Value::Integer(i) => Ok(*i as f64),
                _ => Err(CliError::Config(format!("preset key `{key}` must hold numbers"))),
            })
            .collect::<CliResult<Vec<_>>>()
            .map(Some),
        Some(_) => Err(CliError::Config(format!("preset key `{key}` must be an array"))),
    }
}

fn take_strings(t: &mut toml::Table, key: &str) -> CliResult<Option<Vec<String>>> {
    match t.remove(key) {
        None => Ok(None),
        Some(toml::Value::Array(a)) => a
            .into_iter()
            .map(|v| match v {
                toml::Value::String(s) => Ok(s),
                _ => Err(CliError::Config(format!("preset key `{key}` must hold strings"))),
            })
            .collect::<CliResult<Vec<_>>>()
            .map(Some),
        Some(_) => Err(CliError::Config(format!("preset key `{key}` must be an array"))),
    }
}

fn take_f64(t: &mut toml::Table, key: &str) -> CliResult<Option<f64>> {
    match t.remove(key) {
        None => Ok(None),
        Some(toml::Value::Float(x)) => Ok(Some(x)),
        Some(toml::Value::Integer(i)) => Ok(Some(i as f64)),
        Some(_) => Err(CliError::Config(format!("preset key `{key}` must be a number"))),
    }
}

fn required<T>(v: Option<T>, key: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("preset needs `{key}`")))
}

/// Parses preset text; `overrides` apply to the run keys only.
pub fn parse(name: &str, text: &str, overrides: &[String]) -> CliResult<Preset> {
    let mut t: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("preset `{name}`: {e}")))?;
    let description = take_str(&mut t, "description")?.unwrap_or_default();
    let command_name = required(take_str(&mut t, "command")?, "command")?;
    let x = take_str(&mut t, "x")?.map(|s| s.parse::<Axis>()).transpose()?;
    let y = take_str(&mut t, "y")?.map(|s| s.parse::<Axis>()).transpose()?;
    let outputs = take_strings(&mut t, "outputs")?;
    let family_key = take_str(&mut t, "family_key")?;
    let family = take_numbers(&mut t, "family")?;
    let analytic = match t.remove("analytic") {
        None => false,
        Some(toml::Value::Boolean(b)) => b,
        Some(_) => return Err(CliError::Config("preset key `analytic` must be a boolean".into())),
    };
    let baths = take_strings(&mut t, "baths")?;
    let n_max = take_f64(&mut t, "n_max")?;
    let count = take_f64(&mut t, "count")?;
    let kappas = take_numbers(&mut t, "kappas")?;
    let command = match command_name.as_str() {
        "sweep" => {
            let mut axes = vec![required(x, "x")?];
            axes.extend(y);
            let outputs = required(outputs, "outputs")?
                .iter()
                .map(|s| s.parse())
                .collect::<CliResult<Vec<Output>>>()?;
            Command::Sweep { axes, outputs }
        }
        "contour" => Command::Contour {
            x: required(x, "x")?,
            y: required(y, "y")?,
            family: match (family_key, family) {
                (Some(k), Some(v)) => Some((k, v)),
                (None, None) => None,
                _ => return Err(CliError::Config("`family_key` and `family` go together".into())),
            },
            analytic,
        },
        "noise" => Command::Noise {
            baths: required(baths, "baths")?
                .iter()
                .map(|b| Bath::parse(b).ok_or_else(|| CliError::Config(format!("unknown bath `{b}`"))))
                .collect::<CliResult<_>>()?,
            n_max: required(n_max, "n_max")?,
            count: required(count, "count")? as usize,
        },
        "compare-rwa" => Command::CompareRwa {
            x: required(x, "x")?,
            y: required(y, "y")?,
            kappas: required(kappas, "kappas")?,
        },
        "optimal-r" => Command::OptimalR {
            r_es: family.unwrap_or_default(),
        },
        other => return Err(CliError::Config(format!("preset command `{other}` is not supported"))),
    };
    let config = RunConfig::from_table(t, overrides)?;
    Ok(Preset {
        name: name.to_string(),
        description,
        command,
        config,
    })
}

pub fn load(name: &str, overrides: &[String]) -> CliResult<Preset> {
    parse(name, source(name)?, overrides)
}

pub fn run(preset: &Preset) -> CliResult<Report> {
    let cfg = &preset.config;
    let mut report = match &preset.command {
        Command::Sweep { axes, outputs } => commands::sweep(cfg, axes.clone(), outputs.clone(), axes.len() == 2)?,
        Command::Contour { x, y, family, analytic } => commands::contour(
            cfg,
            x,
            y,
            family.as_ref().map(|(k, v)| (k.as_str(), v.as_slice())),
            *analytic,
            true,
        )?,
        Command::Noise { baths, n_max, count } => commands::noise_table(cfg, baths, *n_max, *count, true)?,
        Command::CompareRwa { x, y, kappas } => commands::compare_rwa(cfg, kappas, x, y, true)?,
        Command::OptimalR { r_es } => commands::optimal_r(cfg, r_es)?,
    };
    report.meta = report
        .meta
        .with("preset", &preset.name)
        .with("description", &preset.description);
    Ok(report)
}

/// Rendered outputs of a preset: `(file name, contents)`.
pub fn render(preset: &Preset, report: &Report) -> CliResult<Vec<(String, String)>> {
    let mut files = vec![
        (format!("{}.csv", preset.name), report.csv()?),
        (format!("{}.json", preset.name), report.json()?),
    ];
    if let Some(svg) = &report.svg {
        files.push((format!("{}.svg", preset.name), svg.clone()));
    }
    Ok(files)
}
