//! Shared fixtures for the benchmarks.

use optobell_cli::sweep::{Axis, Output, SweepSpec};
use optobell_cli::RunConfig;
use optobell_core::{InputState, SystemParams};

/// Working point of the violation maps: κ = 0.01, r_e = 0.9, γ = 1e-5.
pub fn working_point() -> SystemParams {
    SystemParams::symmetric(0.01, 0.9, 1e-5, 0.2, 0.1)
}

pub fn noisy_probe() -> InputState {
    InputState::probe(1e-3)
        .with_external(0.015)
        .with_internal(0.015)
        .with_mechanical(14.0)
}

/// Square `F` sweep over `(alpha_i, r)` with `n` points per axis.
pub fn square_sweep(n: usize, workers: usize) -> SweepSpec {
    SweepSpec {
        axes: vec![
            Axis::linear("alpha_i", 0.0, 0.5, n).expect("valid axis"),
            Axis::linear("r", 0.001, 0.3, n).expect("valid axis"),
        ],
        base: RunConfig::default(),
        outputs: vec![Output::F],
        workers,
    }
}
