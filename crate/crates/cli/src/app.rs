//! Argument parsing and dispatch for the `optobell` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use optobell_core::Bath;

use crate::commands::{self, Report};
use crate::emit::write_file;
use crate::presets::{self, PRESETS};
use crate::sweep::{Axis, Output};
use crate::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "optobell", version, about = "Two-cavity optomechanical CHSH simulator")]
pub struct Cli {
    /// Flat TOML run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable), e.g. `--set kappa=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads (0: all CPUs). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Record the wall-clock time in JSON `meta`.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct Sinks {
    /// CSV output file (stdout when no sink is given).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON output file.
    #[arg(long)]
    json: Option<PathBuf>,
    /// SVG output file.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scattering matrix and resonant coefficients at one point.
    Scatter(#[command(flatten)] Sinks),
    /// Bell metrics at one point.
    Bell(#[command(flatten)] Sinks),
    /// Grid sweep over one or two keys.
    Sweep {
        /// `name:min:max:count[:log]`
        #[arg(long)]
        x: Axis,
        #[arg(long)]
        y: Option<Axis>,
        /// Comma-separated outputs: c, d, f, s_max, z, beta_opt, n_a, n_c, coefficients.
        #[arg(long, value_delimiter = ',', default_value = "f")]
        outputs: Vec<Output>,
        #[command(flatten)]
        sinks: Sinks,
    },
    /// F = 1/2 boundaries.
    Contour {
        #[arg(long)]
        x: Axis,
        #[arg(long)]
        y: Axis,
        /// One boundary per value, `KEY=v1,v2,...`.
        #[arg(long)]
        family: Option<String>,
        /// Add the small-drive boundary (needs x = alpha_i, y = r).
        #[arg(long)]
        analytic: bool,
        #[command(flatten)]
        sinks: Sinks,
    },
    /// F against each bath occupation.
    Noise {
        #[arg(long, value_delimiter = ',', default_value = "mechanical,internal,external")]
        baths: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        n_max: f64,
        #[arg(long, default_value_t = 101)]
        count: usize,
        /// Use the configured r instead of r_opt.
        #[arg(long)]
        keep_r: bool,
        #[command(flatten)]
        sinks: Sinks,
    },
    /// Full-solve boundaries against the RWA boundary.
    CompareRwa {
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.1")]
        kappas: Vec<f64>,
        #[arg(long)]
        x: Axis,
        #[arg(long)]
        y: Axis,
        #[command(flatten)]
        sinks: Sinks,
    },
    /// Noise-optimal r and the exact F there.
    OptimalR {
        #[arg(long = "r-e", value_delimiter = ',')]
        r_es: Vec<f64>,
        #[command(flatten)]
        sinks: Sinks,
    },
    /// Figure presets.
    Presets {
        #[command(subcommand)]
        action: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    /// List preset names and descriptions.
    List,
    /// Print a preset file.
    Show { name: String },
    /// Run a preset and write `<name>.csv`, `<name>.json` and `<name>.svg`.
    Run {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn deliver(report: &Report, sinks: &Sinks, out: &mut dyn Write) -> CliResult<()> {
    let mut any = false;
    if let Some(p) = &sinks.csv {
        write_file(p, &report.csv()?)?;
        any = true;
    }
    if let Some(p) = &sinks.json {
        write_file(p, &report.json()?)?;
        any = true;
    }
    if let Some(p) = &sinks.svg {
        let svg = report
            .svg
            .as_ref()
            .ok_or_else(|| CliError::Config("this command has no SVG rendering".into()))?;
        write_file(p, svg)?;
        any = true;
    }
    if !any {
        emit_stdout(out, &report.csv()?)?;
    }
    Ok(())
}

fn parse_family(spec: &str) -> CliResult<(String, Vec<f64>)> {
    let bad = || CliError::Config(format!("family `{spec}` is not KEY=v1,v2,..."));
    let (key, list) = spec.split_once('=').ok_or_else(bad)?;
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<Vec<_>>>()?;
    Ok((key.trim().to_string(), values))
}

fn overrides(cli: &Cli) -> Vec<String> {
    let mut o = cli.overrides.clone();
    if let Some(w) = cli.workers {
        o.push(format!("workers={w}"));
    }
    o
}

fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let overrides = overrides(&cli);
    if let Cmd::Presets { action } = &cli.command {
        return run_presets(action, &overrides, cli.print_config, cli.timestamp, out);
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    if cli.print_config {
        return emit_stdout(out, &cfg.to_toml());
    }
    let (mut report, sinks) = match &cli.command {
        Cmd::Scatter(s) => (commands::scatter(&cfg)?, s),
        Cmd::Bell(s) => (commands::bell(&cfg)?, s),
        Cmd::Sweep { x, y, outputs, sinks } => {
            let mut axes = vec![x.clone()];
            axes.extend(y.clone());
            (
                commands::sweep(&cfg, axes, outputs.clone(), sinks.svg.is_some())?,
                sinks,
            )
        }
        Cmd::Contour {
            x,
            y,
            family,
            analytic,
            sinks,
        } => {
            let family = family.as_deref().map(parse_family).transpose()?;
            let r = commands::contour(
                &cfg,
                x,
                y,
                family.as_ref().map(|(k, v)| (k.as_str(), v.as_slice())),
                *analytic,
                sinks.svg.is_some(),
            )?;
            (r, sinks)
        }
        Cmd::Noise {
            baths,
            n_max,
            count,
            keep_r,
            sinks,
        } => {
            let baths = baths
                .iter()
                .map(|b| Bath::parse(b.trim()).ok_or_else(|| CliError::Config(format!("unknown bath `{b}`"))))
                .collect::<CliResult<Vec<_>>>()?;
            (commands::noise_table(&cfg, &baths, *n_max, *count, !keep_r)?, sinks)
        }
        Cmd::CompareRwa { kappas, x, y, sinks } => {
            (commands::compare_rwa(&cfg, kappas, x, y, sinks.svg.is_some())?, sinks)
        }
        Cmd::OptimalR { r_es, sinks } => (commands::optimal_r(&cfg, r_es)?, sinks),
        Cmd::Presets { .. } => unreachable!("handled above"),
    };
    report.meta = std::mem::take(&mut report.meta).stamped(cli.timestamp);
    deliver(&report, sinks, out)
}

fn run_presets(
    action: &PresetCmd,
    overrides: &[String],
    print_config: bool,
    stamp: bool,
    out: &mut dyn Write,
) -> CliResult<()> {
    match action {
        PresetCmd::List => {
            for (name, _) in PRESETS {
                let p = presets::load(name, &[])?;
                emit_stdout(out, &format!("{name}\t{}\n", p.description))?;
            }
        }
        PresetCmd::Show { name } => emit_stdout(out, presets::source(name)?)?,
        PresetCmd::Run { name, out: dir } => {
            let preset = presets::load(name, overrides)?;
            if print_config {
                return emit_stdout(out, &preset.config.to_toml());
            }
            let mut report = presets::run(&preset)?;
            report.meta = std::mem::take(&mut report.meta).stamped(stamp);
            for (file, text) in presets::render(&preset, &report)? {
                write_file(&Path::new(dir).join(file), &text)?;
            }
        }
    }
    Ok(())
}

fn emit_stdout(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors go to stderr.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                let _ = out.write_all(e.render().to_string().as_bytes());
            } else {
                eprintln!("{e}");
            }
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
