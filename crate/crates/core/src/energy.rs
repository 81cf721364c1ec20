//! Pairwise multi-label energies over an ordered label set.
//!
//! All potentials are integers. The pairwise term of an edge is either an
//! explicit `ℓ×ℓ` table or a weighted regularizer of the label difference,
//! which is kept symbolic and evaluated on demand.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default cap on `ℓ^n` for exhaustive minimization.
pub const BRUTE_FORCE_CAP: u128 = 10_000_000;

/// Convex function of the label difference `d = |λ − μ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regularizer {
    Linear,
    Quadratic,
    /// Doubled Huber: `d²` for `d ≤ δ`, else `2δd − δ²`. Twice the usual
    /// Huber penalty so that every value is an integer.
    Huber { delta: i64 },
}

impl Regularizer {
    pub fn value(&self, d: i64) -> i64 {
        let d = d.abs();
        match *self {
            Regularizer::Linear => d,
            Regularizer::Quadratic => d * d,
            Regularizer::Huber { delta } => {
                if d <= delta {
                    d * d
                } else {
                    2 * delta * d - delta * delta
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Linear => "linear",
            Regularizer::Quadratic => "quadratic",
            Regularizer::Huber { .. } => "huber",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairwiseSpec {
    /// Row-major `ℓ×ℓ` table; rows are indexed by the label of the first
    /// endpoint of the edge.
    Table(Vec<i64>),
    /// `weight · regularizer(|λ − μ|)`.
    Function { weight: i64, regularizer: Regularizer },
}

impl PairwiseSpec {
    pub fn value(&self, num_labels: usize, lambda: usize, mu: usize) -> i64 {
        match self {
            PairwiseSpec::Table(values) => values[lambda * num_labels + mu],
            PairwiseSpec::Function {
                weight,
                regularizer,
            } => weight * regularizer.value(lambda as i64 - mu as i64),
        }
    }

    fn validate(&self, num_labels: usize) -> Result<()> {
        match self {
            PairwiseSpec::Table(values) if values.len() != num_labels * num_labels => {
                Err(Error::InvalidArgument(format!(
                    "pairwise table has {} entries, expected {}",
                    values.len(),
                    num_labels * num_labels
                )))
            }
            PairwiseSpec::Function { weight, .. } if *weight < 0 => Err(Error::InvalidArgument(
                format!("negative regularizer weight {weight}"),
            )),
            PairwiseSpec::Function {
                regularizer: Regularizer::Huber { delta },
                ..
            } if *delta < 1 => Err(Error::InvalidArgument(format!(
                "huber delta must be at least 1, got {delta}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Orientation of a directed edge relative to the stored `(i, j)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    /// `i → j`
    Forward,
    /// `j → i`
    Backward,
}

impl Dir {
    pub fn reverse(self) -> Dir {
        match self {
            Dir::Forward => Dir::Backward,
            Dir::Backward => Dir::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub edge: usize,
    pub dir: Dir,
}

impl DirectedEdge {
    pub fn new(edge: usize, dir: Dir) -> Self {
        DirectedEdge { edge, dir }
    }

    pub fn reverse(self) -> Self {
        DirectedEdge {
            edge: self.edge,
            dir: self.dir.reverse(),
        }
    }
}

/// One entry of a vertex's adjacency list: the directed edge leaving the
/// vertex toward `neighbor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub neighbor: usize,
    pub out: DirectedEdge,
}

/// Neighbour lists in CSR form, sorted by neighbour index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<Incidence>,
}

impl Adjacency {
    pub fn from_edges(num_vertices: usize, edges: &[(usize, usize)]) -> Self {
        let mut lists: Vec<Vec<Incidence>> = vec![Vec::new(); num_vertices];
        for (e, &(i, j)) in edges.iter().enumerate() {
            lists[i].push(Incidence {
                neighbor: j,
                out: DirectedEdge::new(e, Dir::Forward),
            });
            lists[j].push(Incidence {
                neighbor: i,
                out: DirectedEdge::new(e, Dir::Backward),
            });
        }
        let mut offsets = Vec::with_capacity(num_vertices + 1);
        let mut entries = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for mut list in lists {
            list.sort_by_key(|inc| inc.neighbor);
            entries.extend(list);
            offsets.push(entries.len());
        }
        Adjacency { offsets, entries }
    }

    pub fn neighbors(&self, i: usize) -> &[Incidence] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Directed edge `i → j`, if `(i, j)` is an edge.
    pub fn find(&self, i: usize, j: usize) -> Option<DirectedEdge> {
        let list = self.neighbors(i);
        list.binary_search_by_key(&j, |inc| inc.neighbor)
            .ok()
            .map(|k| list[k].out)
    }
}

/// A vertex labeling `x`, one label per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn zeros(n: usize) -> Self {
        Labeling(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl std::ops::Index<usize> for Labeling {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

/// `E(x) = Σ_i θ_i(x_i) + Σ_(i,j) θ_ij(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyModel {
    num_vertices: usize,
    num_labels: usize,
    edges: Vec<(usize, usize)>,
    unary: Vec<i64>,
    pairwise: Vec<PairwiseSpec>,
    adjacency: Adjacency,
}

impl EnergyModel {
    /// `unary` holds one row of `num_labels` values per vertex.
    pub fn new(
        num_vertices: usize,
        num_labels: usize,
        edges: Vec<(usize, usize)>,
        unary: Vec<Vec<i64>>,
        pairwise: Vec<PairwiseSpec>,
    ) -> Result<Self> {
        if num_labels < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 labels, got {num_labels}"
            )));
        }
        if unary.len() != num_vertices {
            return Err(Error::InvalidArgument(format!(
                "{} unary rows for {num_vertices} vertices",
                unary.len()
            )));
        }
        if let Some((i, row)) = unary
            .iter()
            .enumerate()
            .find(|(_, row)| row.len() != num_labels)
        {
            return Err(Error::InvalidArgument(format!(
                "unary row {i} has {} values, expected {num_labels}",
                row.len()
            )));
        }
        if pairwise.len() != edges.len() {
            return Err(Error::InvalidArgument(format!(
                "{} pairwise terms for {} edges",
                pairwise.len(),
                edges.len()
            )));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for &(i, j) in &edges {
            if i >= num_vertices || j >= num_vertices {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i},{j}) has an endpoint outside 0..{num_vertices}"
                )));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self loop on vertex {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidArgument(format!("duplicate edge ({i},{j})")));
            }
        }
        for spec in &pairwise {
            spec.validate(num_labels)?;
        }
        let adjacency = Adjacency::from_edges(num_vertices, &edges);
        Ok(EnergyModel {
            num_vertices,
            num_labels,
            edges,
            unary: unary.into_iter().flatten().collect(),
            pairwise,
            adjacency,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn unary(&self, i: usize) -> &[i64] {
        &self.unary[i * self.num_labels..(i + 1) * self.num_labels]
    }

    pub fn pairwise(&self, e: usize) -> &PairwiseSpec {
        &self.pairwise[e]
    }

    pub fn pairwise_value(&self, e: usize, lambda: usize, mu: usize) -> i64 {
        self.pairwise[e].value(self.num_labels, lambda, mu)
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    /// Fails on the first edge whose pairwise term is not submodular.
    pub fn check_submodular(&self) -> Result<()> {
        for (e, spec) in self.pairwise.iter().enumerate() {
            if let Some((lambda, mu)) = submodularity_violation(spec, self.num_labels) {
                let (i, j) = self.edges[e];
                return Err(Error::NotSubmodular { i, j, lambda, mu });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &Labeling) -> Result<i64> {
        evaluate_energy(self, x)
    }

    fn energy_unchecked(&self, x: &[usize]) -> i64 {
        let unary: i64 = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| self.unary[i * self.num_labels + xi])
            .sum();
        let pairwise: i64 = self
            .edges
            .iter()
            .zip(&self.pairwise)
            .map(|(&(i, j), spec)| spec.value(self.num_labels, x[i], x[j]))
            .sum();
        unary + pairwise
    }
}

pub fn evaluate_energy(model: &EnergyModel, x: &Labeling) -> Result<i64> {
    if x.len() != model.num_vertices {
        return Err(Error::InvalidArgument(format!(
            "labeling has {} entries for {} vertices",
            x.len(),
            model.num_vertices
        )));
    }
    if let Some(&bad) = x.0.iter().find(|&&xi| xi >= model.num_labels) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside 0..{}",
            model.num_labels
        )));
    }
    Ok(model.energy_unchecked(&x.0))
}

/// Multi-label submodularity of one pairwise term.
///
/// Only consecutive second differences are checked: the general condition
/// for `λ < λ'`, `μ < μ'` is a telescoping sum of consecutive ones, so
/// non-negativity of the latter implies the former.
pub fn check_submodular(spec: &PairwiseSpec, num_labels: usize) -> bool {
    submodularity_violation(spec, num_labels).is_none()
}

/// First `(λ, μ)` (both ≥ 1) with a negative consecutive second difference.
fn submodularity_violation(spec: &PairwiseSpec, num_labels: usize) -> Option<(usize, usize)> {
    let v = |a: usize, b: usize| spec.value(num_labels, a, b);
    for lambda in 1..num_labels {
        for mu in 1..num_labels {
            let d = v(lambda - 1, mu) + v(lambda, mu - 1) - v(lambda, mu) - v(lambda - 1, mu - 1);
            if d < 0 {
                return Some((lambda, mu));
            }
        }
    }
    None
}

/// Exhaustive minimization. Ties go to the lexicographically smallest labeling.
pub fn brute_force_minimize(model: &EnergyModel, cap: u128) -> Result<(Labeling, i64)> {
    let n = model.num_vertices;
    let l = model.num_labels;
    let mut configurations: u128 = 1;
    for _ in 0..n {
        configurations = configurations.saturating_mul(l as u128);
        if configurations > cap {
            return Err(Error::Capacity {
                configurations,
                cap,
            });
        }
    }
    let mut x = vec![0usize; n];
    let mut best = x.clone();
    let mut best_energy = model.energy_unchecked(&x);
    // odometer with the last vertex fastest enumerates in lexicographic order
    loop {
        let mut k = n;
        loop {
            if k == 0 {
                return Ok((Labeling(best), best_energy));
            }
            k -= 1;
            x[k] += 1;
            if x[k] < l {
                break;
            }
            x[k] = 0;
        }
        let e = model.energy_unchecked(&x);
        if e < best_energy {
            best_energy = e;
            best.copy_from_slice(&x);
        }
    }
}

/// 4-connected `width × height` grid, vertices row-major, unaries drawn
/// uniformly from `0..unary_max` with a seeded ChaCha8 stream.
pub fn generate_grid_instance(
    width: usize,
    height: usize,
    num_labels: usize,
    regularizer: Regularizer,
    weight: i64,
    unary_max: i64,
    seed: u64,
) -> Result<EnergyModel> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid must be at least 1x1, got {width}x{height}"
        )));
    }
    let n = width * height;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unary: Vec<Vec<i64>> = (0..n)
        .map(|_| {
            (0..num_labels)
                .map(|_| {
                    if unary_max > 0 {
                        rng.gen_range(0..unary_max)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let mut edges = Vec::with_capacity(2 * n);
    for y in 0..height {
        for x in 0..width {
            let v = y * width + x;
            if x + 1 < width {
                edges.push((v, v + 1));
            }
            if y + 1 < height {
                edges.push((v, v + width));
            }
        }
    }
    let pairwise = vec![
        PairwiseSpec::Function {
            weight,
            regularizer
        };
        edges.len()
    ];
    EnergyModel::new(n, num_labels, edges, unary, pairwise)
}
