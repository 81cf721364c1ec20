//! Uniform entry point over the four solvers.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::energy::{brute_force_minimize, EnergyModel, BRUTE_FORCE_CAP};
use crate::error::{Error, Result};
use crate::ishikawa::{phi_from_theta, reference_maxflow};
use crate::memf_block::solve_block;
use crate::memf_poly::solve_poly;
use crate::report::{SolveOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    BruteForce,
    Reference,
    Poly,
    Block,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::BruteForce,
        SolverKind::Reference,
        SolverKind::Poly,
        SolverKind::Block,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::BruteForce => "bruteforce",
            SolverKind::Reference => "reference",
            SolverKind::Poly => "poly",
            SolverKind::Block => "block",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver {s:?}")))
    }
}

/// Brute-force minimization wrapped as a report. Refuses instances with more
/// than [`BRUTE_FORCE_CAP`] labelings.
pub fn solve_bruteforce(model: &EnergyModel) -> Result<SolveReport> {
    let start = Instant::now();
    let (labeling, energy) = brute_force_minimize(model, BRUTE_FORCE_CAP)?;
    let mut report = SolveReport::new("bruteforce");
    report.energy = energy;
    report.constant = energy;
    report.stored_values_peak = 2 * model.num_vertices() as u64;
    report.labeling = Some(labeling);
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Dense max-flow on the full Ishikawa graph.
pub fn solve_reference(model: &EnergyModel) -> Result<SolveReport> {
    let start = Instant::now();
    let caps = phi_from_theta(model)?;
    let constant = caps.constant();
    let stored = caps.stored_values() as u64;
    let nodes = (model.num_vertices() * (model.num_labels() - 1) + 2) as u64;
    let outcome = reference_maxflow(caps)?;
    let mut report = SolveReport::new("reference");
    report.flow_total = outcome.flow_total;
    report.constant = constant;
    report.energy = outcome.flow_total + constant;
    report.augmentations = outcome.augmentations;
    report.stored_values_peak = stored + 1;
    report.transient_values_peak = 3 * nodes;
    report.labeling = Some(outcome.labeling);
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Runs `kind` on `model`. Diagnostics apply to the poly and block solvers only.
pub fn solve(model: &EnergyModel, kind: SolverKind, options: SolveOptions) -> Result<SolveReport> {
    match kind {
        SolverKind::BruteForce => solve_bruteforce(model),
        SolverKind::Reference => solve_reference(model),
        SolverKind::Poly => solve_poly(model, options),
        SolverKind::Block => solve_block(model, options),
    }
}
