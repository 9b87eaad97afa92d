//! Shared fixtures for the benchmarks in `benches/`.

use mgpd::{GpParams, Matrix, ModelSpec, StdfModel};

/// Logistic GP model in dimension `d` with mixed shapes.
pub fn logistic_model(d: usize, theta: f64) -> GpParams {
    let sigma = (0..d).map(|j| 1.0 + 0.5 * j as f64).collect();
    let gamma = (0..d).map(|j| [-0.2, 0.0, 0.3][j % 3]).collect();
    GpParams::from_tau(sigma, gamma, vec![1.0; d], StdfModel::logistic(d, theta).expect("valid theta"))
        .expect("valid model")
}

pub fn logistic_batch(d: usize, theta: f64, n: usize, seed: u64) -> Matrix {
    ModelSpec::PiEll(logistic_model(d, theta)).simulate(n, seed).expect("simulates").data
}
