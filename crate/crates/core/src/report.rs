use std::fmt::Write as _;

use crate::energy::Labeling;

/// Switches shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Collect distance traces and cross-check path existence against a
    /// fully reconstructed residual graph.
    pub diagnostics: bool,
    /// With diagnostics on, run the existence check every `sample_every`
    /// iterations (and always at termination).
    pub sample_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            diagnostics: false,
            sample_every: 1,
        }
    }
}

impl SolveOptions {
    pub fn diagnostics() -> Self {
        SolveOptions {
            diagnostics: true,
            sample_every: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Shortest distances from the source after each augmentation, one row
    /// per search; `u32::MAX` marks unreachable nodes.
    pub distance_trace: Vec<Vec<u32>>,
    /// Node distances that decreased between consecutive searches.
    pub monotonicity_violations: u64,
    /// Augmenting paths longer than a fresh shortest-path search would find.
    pub non_shortest_paths: u64,
    pub existence_checks: u64,
    pub existence_mismatches: u64,
    /// Columns whose in-memory residual differs from the one implied by the
    /// flow store.
    pub bookkeeping_mismatches: u64,
    /// Number of arcs on each augmenting path found.
    pub path_lengths: Vec<usize>,
}

impl Diagnostics {
    pub fn median_path_length(&self) -> Option<f64> {
        median(&self.path_lengths)
    }

    /// `(length, count)` pairs in ascending length.
    pub fn path_length_histogram(&self) -> Vec<(usize, usize)> {
        let mut hist = std::collections::BTreeMap::new();
        for &len in &self.path_lengths {
            *hist.entry(len).or_insert(0) += 1;
        }
        hist.into_iter().collect()
    }
}

pub fn median(values: &[usize]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] + v[m]) as f64 / 2.0
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solver: String,
    pub energy: i64,
    pub flow_total: i64,
    pub constant: i64,
    pub labeling: Option<Labeling>,
    pub augmentations: u64,
    pub reconstructions: u64,
    pub reconstruction_fallbacks: u64,
    pub stale_aborts: u64,
    pub stored_values_peak: u64,
    pub transient_values_peak: u64,
    pub wall_time_ms: f64,
    pub diagnostics: Option<Diagnostics>,
}

impl SolveReport {
    pub fn new(solver: &str) -> Self {
        SolveReport {
            solver: solver.to_string(),
            energy: 0,
            flow_total: 0,
            constant: 0,
            labeling: None,
            augmentations: 0,
            reconstructions: 0,
            reconstruction_fallbacks: 0,
            stale_aborts: 0,
            stored_values_peak: 0,
            transient_values_peak: 0,
            wall_time_ms: 0.0,
            diagnostics: None,
        }
    }

    /// `key=value` lines. `wall_time_ms` is the only nondeterministic key.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("solver", &self.solver);
        kv("energy", &self.energy);
        kv("flow_total", &self.flow_total);
        kv("constant", &self.constant);
        kv("augmentations", &self.augmentations);
        kv("reconstructions", &self.reconstructions);
        kv("reconstruction_fallbacks", &self.reconstruction_fallbacks);
        kv("stale_aborts", &self.stale_aborts);
        kv("stored_values_peak", &self.stored_values_peak);
        kv("transient_values_peak", &self.transient_values_peak);
        kv("wall_time_ms", &format!("{:.3}", self.wall_time_ms));
        if let Some(d) = &self.diagnostics {
            kv("monotonicity_violations", &d.monotonicity_violations);
            kv("non_shortest_paths", &d.non_shortest_paths);
            kv("existence_checks", &d.existence_checks);
            kv("existence_mismatches", &d.existence_mismatches);
            kv("bookkeeping_mismatches", &d.bookkeeping_mismatches);
            if let Some(m) = d.median_path_length() {
                kv("path_length_median", &m);
            }
        }
        if let Some(x) = &self.labeling {
            let labels: Vec<String> = x.as_slice().iter().map(usize::to_string).collect();
            kv("labeling", &labels.join(","));
        }
        s
    }
}
