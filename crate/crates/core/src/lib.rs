//! Memory-efficient max-flow for multi-label submodular MRFs.
//!
//! The Ishikawa graph of an energy with `ℓ` labels has `O(ℓ²)` cross edges
//! per MRF edge. The solvers here keep only `O(ℓ)` exit-flows per edge and
//! reconstruct the cross residuals of one edge at a time when needed.

pub mod energy;
pub mod error;
pub mod flowcodec;
pub mod instance;
pub mod ishikawa;
pub mod memf_block;
pub mod memf_poly;
pub mod repar;
pub mod report;
pub mod solver;

pub use energy::{
    brute_force_minimize, check_submodular, evaluate_energy, generate_grid_instance, Adjacency, Dir,
    DirectedEdge, EnergyModel, Labeling, PairwiseSpec, Regularizer, BRUTE_FORCE_CAP,
};
pub use error::{Error, Result};
pub use flowcodec::{full_residual_from_store, reconstruct_edge, FlowDelta, FlowStore, Reconstructor};
pub use ishikawa::{
    cut_cost, get_labelling_from_reachability, has_augmenting_path, phi_from_theta, reference_maxflow,
    theta_from_phi, InitialCapacities, IshikawaCapacities, LazyCapacities, PairCaps, ResidualState,
};
pub use instance::{parse_instance, scale_model, write_instance};
pub use memf_block::solve_block;
pub use memf_poly::solve_poly;
pub use repar::{MessageField, MultiLabelParams};
pub use report::{Diagnostics, SolveOptions, SolveReport};
pub use solver::{solve, solve_bruteforce, solve_reference, SolverKind};
