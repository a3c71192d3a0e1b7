//! Parameters → scattering → moments → Bell metrics.

use serde::{Deserialize, Serialize};

use crate::bell::{bell_cd, BellMetrics};
use crate::dynamics::{rwa_signal_pair, solve_full_scattering, CoefficientSet};
use crate::error::Result;
use crate::model::{InputState, SystemParams};
use crate::moments::{CorrelatorSet, OutputGaussianState, OutputMap};

/// Which input-output relations to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Exact linear solve including counter-rotating terms.
    #[default]
    Full,
    /// Closed-form resonant coefficients.
    Rwa,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Full => "full",
            Solver::Rwa => "rwa",
        }
    }
}

/// Output map at offset `omega` from resonance.
pub fn output_map(p: &SystemParams, omega: f64, solver: Solver) -> Result<OutputMap> {
    Ok(match solver {
        Solver::Full => OutputMap::from_scattering(&solve_full_scattering(p, omega)?),
        Solver::Rwa => OutputMap::from_coefficients(&rwa_signal_pair(p, omega)?),
    })
}

/// Resonant coefficients, either read off the full solve or in closed form.
pub fn coefficients(p: &SystemParams, omega: f64, solver: Solver) -> Result<CoefficientSet> {
    match solver {
        Solver::Full => Ok(CoefficientSet::from_scattering(&solve_full_scattering(p, omega)?)),
        Solver::Rwa => rwa_signal_pair(p, omega),
    }
}

pub fn output_state(p: &SystemParams, inputs: &InputState, omega: f64, solver: Solver) -> Result<OutputGaussianState> {
    inputs.validate()?;
    Ok(output_map(p, omega, solver)?.propagate(inputs))
}

pub fn correlators(p: &SystemParams, inputs: &InputState, omega: f64, solver: Solver) -> Result<CorrelatorSet> {
    Ok(output_state(p, inputs, omega, solver)?.correlators())
}

pub fn bell_metrics(p: &SystemParams, inputs: &InputState, omega: f64, solver: Solver) -> Result<BellMetrics> {
    BellMetrics::from_correlators(&correlators(p, inputs, omega, solver)?)
}

/// `F = C² + D²` at resonance.
pub fn violation(p: &SystemParams, inputs: &InputState, solver: Solver) -> Result<f64> {
    Ok(bell_cd(&correlators(p, inputs, 0.0, solver)?)?.f())
}

/// `F` of an already-built map without validating the occupations.
pub(crate) fn violation_of_map(map: &OutputMap, inputs: &InputState) -> Result<f64> {
    Ok(bell_cd(&map.propagate(inputs).correlators())?.f())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solvers_agree_in_the_resolved_sideband_regime() {
        let p = SystemParams::symmetric(1e-3, 0.9, 1e-7, 0.2, 0.1);
        let inputs = InputState::probe(1e-3);
        let full = violation(&p, &inputs, Solver::Full).unwrap();
        let rwa = violation(&p, &inputs, Solver::Rwa).unwrap();
        assert!((full - rwa).abs() < 5e-3, "{full} vs {rwa}");
    }

    #[test]
    fn weak_squeezing_violates() {
        let p = SystemParams::symmetric(0.01, 0.99, 1e-7, 0.2, 0.05);
        let m = bell_metrics(&p, &InputState::probe(1e-4), 0.0, Solver::Full).unwrap();
        assert!(m.violation && m.f > 0.7);
        assert!(m.s_max > 2.0);
    }
}
