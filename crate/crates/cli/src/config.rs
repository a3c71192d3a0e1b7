//! Flat key-value run configuration.
//!
//! A run is described by one TOML document whose top-level keys are the
//! fields of [`RunConfig`]. `key=value` overrides from the command line are
//! applied on top of the file. Derived values (locked probes, thermal
//! occupation from a temperature) are resolved once at load time, so the
//! printed configuration reproduces the run.

use std::path::Path;

use num_complex::Complex64;
use optobell_core::bell::DetectionConfig;
use optobell_core::model::bose_occupancy;
use optobell_core::{InputState, Solver, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega_m: f64,
    /// Total linewidth of both cavities.
    pub kappa: f64,
    /// External coupling ratio `κ_e / κ` of both cavities.
    pub r_e: f64,
    pub gamma: f64,
    pub g_minus: f64,
    /// `G_plus / G_minus`.
    pub r: f64,
    pub delta_a: f64,
    pub delta_c: f64,
    pub alpha_i: f64,
    pub chi_i: f64,
    /// Forces `chi_i = alpha_i`.
    pub lock_probes: bool,
    /// Both external baths.
    pub n_e: f64,
    /// Both internal-loss baths.
    pub n_i: f64,
    pub n_m: f64,
    /// With `mechanical_frequency_hz`, derives `n_m` when it is not given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mechanical_frequency_hz: Option<f64>,
    pub eta_1: f64,
    pub eta_2: f64,
    /// LO amplitudes; the optimal `β` is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_2: Option<f64>,
    pub theta: f64,
    pub phi: f64,
    pub solver: Solver,
    /// Analysis frequency offset from resonance.
    pub omega: f64,
    /// Worker threads; 0 picks the number of CPUs. Not serialized, since it
    /// never changes results.
    #[serde(skip_serializing)]
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega_m: 1.0,
            kappa: 0.1,
            r_e: 0.9,
            gamma: 1e-5,
            g_minus: 0.2,
            r: 0.1,
            delta_a: 1.0,
            delta_c: -1.0,
            alpha_i: 0.0,
            chi_i: 0.0,
            lock_probes: true,
            n_e: 0.0,
            n_i: 0.0,
            n_m: 0.0,
            temperature_k: None,
            mechanical_frequency_hz: None,
            eta_1: 0.5,
            eta_2: 0.5,
            beta_1: None,
            beta_2: None,
            theta: 0.0,
            phi: 0.0,
            solver: Solver::Full,
            omega: 0.0,
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn system_params(&self) -> SystemParams {
        let mut p = SystemParams::symmetric(self.kappa, self.r_e, self.gamma, self.g_minus, self.r);
        p.omega_m = self.omega_m;
        p.delta_a = self.delta_a;
        p.delta_c = self.delta_c;
        p
    }

    pub fn inputs(&self) -> InputState {
        let chi = if self.lock_probes { self.alpha_i } else { self.chi_i };
        InputState {
            alpha_i: Complex64::new(self.alpha_i, 0.0),
            chi_i: Complex64::new(chi, 0.0),
            ..InputState::vacuum()
        }
        .with_external(self.n_e)
        .with_internal(self.n_i)
        .with_mechanical(self.n_m)
    }

    /// Detection settings, with `beta_opt` standing in for unset LO amplitudes.
    pub fn detection(&self, beta_opt: f64) -> DetectionConfig {
        DetectionConfig {
            eta_1: self.eta_1,
            eta_2: self.eta_2,
            beta_1: self.beta_1.unwrap_or(beta_opt),
            beta_2: self.beta_2.unwrap_or(beta_opt),
            theta: self.theta,
            phi: self.phi,
        }
    }

    /// Parses a TOML document and applies `key=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> CliResult<Self> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        Self::from_table(table, overrides)
    }

    /// Reads an optional config file, then applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn from_table(mut table: toml::Table, overrides: &[String]) -> CliResult<Self> {
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        let explicit_n_m = table.contains_key("n_m");
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.resolve(explicit_n_m)?;
        Ok(cfg)
    }

    fn resolve(&mut self, explicit_n_m: bool) -> CliResult<()> {
        if self.lock_probes {
            self.chi_i = self.alpha_i;
        }
        match (self.temperature_k, self.mechanical_frequency_hz) {
            (Some(t), Some(f)) => {
                if explicit_n_m {
                    return Err(CliError::Config(
                        "n_m is given together with temperature_k/mechanical_frequency_hz".into(),
                    ));
                }
                self.n_m = bose_occupancy(t, f)?;
            }
            (None, None) => {}
            _ => {
                return Err(CliError::Config(
                    "temperature_k and mechanical_frequency_hz must be given together".into(),
                ))
            }
        }
        self.check()
    }

    fn check(&self) -> CliResult<()> {
        let finite = [
            ("omega_m", self.omega_m),
            ("kappa", self.kappa),
            ("r_e", self.r_e),
            ("gamma", self.gamma),
            ("g_minus", self.g_minus),
            ("r", self.r),
            ("delta_a", self.delta_a),
            ("delta_c", self.delta_c),
            ("alpha_i", self.alpha_i),
            ("chi_i", self.chi_i),
            ("n_e", self.n_e),
            ("n_i", self.n_i),
            ("n_m", self.n_m),
            ("theta", self.theta),
            ("phi", self.phi),
            ("omega", self.omega),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(CliError::Config(format!("`{name}` must be finite")));
        }
        self.system_params().validate_rates()?;
        self.inputs().validate()?;
        self.detection(1.0).validate()?;
        if self.r < 0.0 {
            return Err(CliError::Config("`r` must be nonnegative".into()));
        }
        Ok(())
    }

    /// Resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Sets a whitelisted numeric key.
    pub fn set(&mut self, key: &str, value: f64) -> CliResult<()> {
        match key {
            "alpha_i" => {
                self.alpha_i = value;
                if self.lock_probes {
                    self.chi_i = value;
                }
            }
            "chi_i" => {
                if self.lock_probes {
                    return Err(CliError::Config(
                        "chi_i is locked to alpha_i (set lock_probes = false)".into(),
                    ));
                }
                self.chi_i = value;
            }
            "r" => self.r = value,
            "r_e" => self.r_e = value,
            "kappa" => self.kappa = value,
            "gamma" => self.gamma = value,
            "g_minus" => self.g_minus = value,
            "n_e" => self.n_e = value,
            "n_i" => self.n_i = value,
            "n_m" => self.n_m = value,
            "omega" => self.omega = value,
            other => return Err(CliError::Config(format!("`{other}` cannot be varied"))),
        }
        Ok(())
    }
}

/// Keys accepted by [`RunConfig::set`].
pub const VARIABLE_KEYS: [&str; 11] = [
    "alpha_i", "chi_i", "r", "r_e", "kappa", "gamma", "g_minus", "n_e", "n_i", "n_m", "omega",
];

/// Splits `key=value`; values that are not valid TOML are taken as strings.
fn parse_override(item: &str) -> CliResult<(String, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{item}` has an empty key")));
    }
    let doc = format!("v = {raw}");
    let value = match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml_str(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn overrides_win_over_file() {
        let cfg = RunConfig::from_toml_str(
            "kappa = 0.02\nsolver = \"full\"",
            &["kappa=0.05".into(), "solver=rwa".into()],
        )
        .unwrap();
        assert_eq!(cfg.kappa, 0.05);
        assert_eq!(cfg.solver, Solver::Rwa);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = RunConfig::from_toml_str("kapa = 0.1", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(RunConfig::from_toml_str("", &["novalue".into()]).is_err());
    }

    #[test]
    fn temperature_sets_mechanical_occupation() {
        let cfg = RunConfig::from_toml_str("temperature_k = 0.007\nmechanical_frequency_hz = 1e7", &[]).unwrap();
        assert!((cfg.n_m - 14.09).abs() < 0.05, "{}", cfg.n_m);
        assert!(
            RunConfig::from_toml_str("temperature_k = 0.007\nmechanical_frequency_hz = 1e7\nn_m = 1", &[]).is_err()
        );
        assert!(RunConfig::from_toml_str("temperature_k = 0.007", &[]).is_err());
    }

    #[test]
    fn locked_probes_follow_alpha() {
        let mut cfg = RunConfig::from_toml_str("alpha_i = 0.2\nchi_i = 0.5", &[]).unwrap();
        assert_eq!(cfg.chi_i, 0.2);
        cfg.set("alpha_i", 0.3).unwrap();
        assert_eq!(cfg.inputs().chi_i.re, 0.3);
        assert!(cfg.set("chi_i", 0.1).is_err());
        assert!(cfg.set("eta_1", 0.1).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_toml_str("r_e = 1.5", &[]).is_err());
        assert!(RunConfig::from_toml_str("n_e = -1.0", &[]).is_err());
        assert!(RunConfig::from_toml_str("eta_1 = 1.0", &[]).is_err());
        assert!(RunConfig::from_toml_str("kappa = nan", &[]).is_err());
    }
}
