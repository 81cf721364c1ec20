//! Fixtures shared by the benchmarks.

use memf_core::{generate_grid_instance, EnergyModel, Regularizer};

/// Quadratic grid with unaries drawn from `0..20`.
pub fn quadratic_grid(side: usize, num_labels: usize, seed: u64) -> EnergyModel {
    generate_grid_instance(side, side, num_labels, Regularizer::Quadratic, 1, 20, seed).expect("valid grid")
}
