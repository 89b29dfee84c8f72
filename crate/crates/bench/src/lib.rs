//! Shared fixtures for the criterion benchmarks.

use coopetition_core::{
    build_laplacian, cascading_benchmark, influence_power, Costs, GameParameters, InfluencePower, Laplacian,
    OpinionVector, RhoMode,
};
use coopetition_core::experiment::ramp_opinions;
use ndarray::Array2;

pub struct Fixture {
    pub laplacian: Laplacian,
    pub params: GameParameters,
    pub x0: OpinionVector,
    pub rho: InfluencePower,
}

/// Cascading benchmark with generous budgets over `stages` unit campaigns.
pub fn cascading_fixture(n: usize, stages: usize) -> Fixture {
    let laplacian = build_laplacian(&cascading_benchmark(n).expect("multiple of 5")).expect("valid graph");
    let rho = influence_power(&laplacian, 1.0, RhoMode::Final).expect("rho");
    let params = GameParameters::new(
        Costs::new(1.0, 0.5).expect("costs"),
        10.0 * n as f64,
        10.0 * n as f64,
        coopetition_core::uniform_schedule(stages, 1.0),
        RhoMode::Final,
    )
    .expect("params");
    Fixture {
        laplacian,
        params,
        x0: ramp_opinions(n).expect("ramp"),
        rho,
    }
}

/// `-L` for the cascading benchmark, the matrix exponentiated on every run.
pub fn negated_laplacian(n: usize) -> Array2<f64> {
    let l = build_laplacian(&cascading_benchmark(n).expect("multiple of 5")).expect("valid graph");
    -l.matrix().clone()
}
