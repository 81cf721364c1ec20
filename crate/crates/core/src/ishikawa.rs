//! Ishikawa graph parameterization.
//!
//! Column `i` holds internal nodes `U_{i:1} … U_{i:ℓ-1}`; `U_{i:ℓ}` is the
//! source (node 0) and `U_{i:0}` the terminal (node 1). The downward edge
//! `e_{i:λ} = (U_{i:λ+1} → U_{i:λ})` has capacity `φ_{i:λ}`, the upward
//! edge of the same pair is infinite and never stored. A labeling `x` is
//! the cut with `U_{i:λ}` on the source side iff `λ > x_i`.

use std::collections::VecDeque;

use crate::energy::{Adjacency, Dir, DirectedEdge, EnergyModel, Labeling};
use crate::error::{Error, Result};
use crate::repar::MultiLabelParams;

/// Cross capacities of one undirected MRF edge `(i, j)`, both orientations.
///
/// Levels run over `1..ℓ`. `get(Forward, λ, μ)` is `φ_{ij:λμ}` and
/// `get(Backward, μ, λ)` is `φ_{ji:μλ}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCaps {
    levels: usize,
    fwd: Vec<i64>,
    bwd: Vec<i64>,
}

impl PairCaps {
    pub fn zeros(num_labels: usize) -> Self {
        let levels = num_labels - 1;
        PairCaps {
            levels,
            fwd: vec![0; levels * levels],
            bwd: vec![0; levels * levels],
        }
    }

    /// Number of internal levels, `ℓ − 1`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    fn idx(&self, from: usize, to: usize) -> usize {
        debug_assert!(from >= 1 && from <= self.levels && to >= 1 && to <= self.levels);
        (from - 1) * self.levels + (to - 1)
    }

    #[inline]
    pub fn get(&self, dir: Dir, from: usize, to: usize) -> i64 {
        let k = self.idx(from, to);
        match dir {
            Dir::Forward => self.fwd[k],
            Dir::Backward => self.bwd[k],
        }
    }

    #[inline]
    pub fn set(&mut self, dir: Dir, from: usize, to: usize, value: i64) {
        let k = self.idx(from, to);
        match dir {
            Dir::Forward => self.fwd[k] = value,
            Dir::Backward => self.bwd[k] = value,
        }
    }

    /// Push `amount` along `from → to` in orientation `dir`; the reverse
    /// edge gains the same amount.
    #[inline]
    pub fn push(&mut self, dir: Dir, from: usize, to: usize, amount: i64) {
        let k = self.idx(from, to);
        let r = self.idx(to, from);
        match dir {
            Dir::Forward => {
                self.fwd[k] -= amount;
                self.bwd[r] += amount;
            }
            Dir::Backward => {
                self.bwd[k] -= amount;
                self.fwd[r] += amount;
            }
        }
    }

    pub fn copy_from(&mut self, other: &PairCaps) {
        self.levels = other.levels;
        self.fwd.clone_from(&other.fwd);
        self.bwd.clone_from(&other.bwd);
    }

    pub fn is_nonnegative(&self) -> bool {
        self.fwd.iter().chain(&self.bwd).all(|&c| c >= 0)
    }

    /// Values held: `2(ℓ−1)²`.
    pub fn stored_values(&self) -> usize {
        self.fwd.len() + self.bwd.len()
    }
}

/// Read access to the initial capacities `φ⁰` of an Ishikawa graph.
///
/// The memory-efficient solvers only ever need one column or one edge at a
/// time, so implementations are free to compute these on demand.
pub trait InitialCapacities {
    fn num_labels(&self) -> usize;
    fn num_vertices(&self) -> usize;
    fn edges(&self) -> &[(usize, usize)];
    /// Additive offset: `E(x) = cut_cost(x) + constant`.
    fn constant(&self) -> i64;
    /// Writes `φ⁰_{i:λ}` for `λ ∈ 0..ℓ` into `out`.
    fn column_into(&self, i: usize, out: &mut [i64]);
    fn cross_into(&self, e: usize, out: &mut PairCaps);
}

/// Fully materialized capacities, both orientations stored densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IshikawaCapacities {
    num_labels: usize,
    edges: Vec<(usize, usize)>,
    column: Vec<i64>,
    cross: Vec<PairCaps>,
    constant: i64,
}

impl IshikawaCapacities {
    pub fn zeros(num_vertices: usize, num_labels: usize, edges: Vec<(usize, usize)>) -> Self {
        let cross = vec![PairCaps::zeros(num_labels); edges.len()];
        IshikawaCapacities {
            num_labels,
            edges,
            column: vec![0; num_vertices * num_labels],
            cross,
            constant: 0,
        }
    }

    pub fn from_source<C: InitialCapacities + ?Sized>(source: &C) -> Self {
        let l = source.num_labels();
        let mut caps = IshikawaCapacities::zeros(source.num_vertices(), l, source.edges().to_vec());
        for i in 0..source.num_vertices() {
            source.column_into(i, &mut caps.column[i * l..(i + 1) * l]);
        }
        for (e, pair) in caps.cross.iter_mut().enumerate() {
            source.cross_into(e, pair);
        }
        caps.constant = source.constant();
        caps
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_vertices(&self) -> usize {
        self.column.len() / self.num_labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn column(&self, i: usize) -> &[i64] {
        &self.column[i * self.num_labels..(i + 1) * self.num_labels]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [i64] {
        &mut self.column[i * self.num_labels..(i + 1) * self.num_labels]
    }

    pub fn cross(&self, e: usize) -> &PairCaps {
        &self.cross[e]
    }

    pub fn cross_mut(&mut self, e: usize) -> &mut PairCaps {
        &mut self.cross[e]
    }

    pub fn constant(&self) -> i64 {
        self.constant
    }

    pub fn set_constant(&mut self, constant: i64) {
        self.constant = constant;
    }

    pub fn is_nonnegative(&self) -> bool {
        self.column.iter().all(|&c| c >= 0) && self.cross.iter().all(PairCaps::is_nonnegative)
    }

    /// Values held by the dense representation: `|V|ℓ + 2(ℓ−1)²|E|`.
    pub fn stored_values(&self) -> usize {
        self.column.len() + self.cross.iter().map(PairCaps::stored_values).sum::<usize>()
    }
}

impl InitialCapacities for IshikawaCapacities {
    fn num_labels(&self) -> usize {
        self.num_labels
    }
    fn num_vertices(&self) -> usize {
        IshikawaCapacities::num_vertices(self)
    }
    fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    fn constant(&self) -> i64 {
        self.constant
    }
    fn column_into(&self, i: usize, out: &mut [i64]) {
        out.copy_from_slice(self.column(i));
    }
    fn cross_into(&self, e: usize, out: &mut PairCaps) {
        out.copy_from(&self.cross[e]);
    }
}

/// Second differences of `θ_ij`, placed in the forward orientation:
/// `φ_{ij:λμ} = θ(λ−1,μ) + θ(λ,μ−1) − θ(λ,μ) − θ(λ−1,μ−1)`.
fn cross_from_pairwise(model: &EnergyModel, e: usize, out: &mut PairCaps) -> Result<()> {
    let l = model.num_labels();
    let spec = model.pairwise(e);
    let v = |a: usize, b: usize| spec.value(l, a, b);
    for lambda in 1..l {
        for mu in 1..l {
            let c = v(lambda - 1, mu) + v(lambda, mu - 1) - v(lambda, mu) - v(lambda - 1, mu - 1);
            if c < 0 {
                let (i, j) = model.edges()[e];
                return Err(Error::NotSubmodular { i, j, lambda, mu });
            }
            out.set(Dir::Forward, lambda, mu, c);
            out.set(Dir::Backward, mu, lambda, 0);
        }
    }
    Ok(())
}

/// Unary row of vertex `i` with the row/column residues of its pairwise
/// terms absorbed: `θ_ij(λ,0)` for edges where `i` is first, and
/// `θ_ij(ℓ−1,μ) − θ_ij(ℓ−1,0)` where `i` is second. Returns the minimum.
fn absorbed_unary(model: &EnergyModel, i: usize, out: &mut [i64]) -> i64 {
    let l = model.num_labels();
    out.copy_from_slice(model.unary(i));
    for inc in model.adjacency().neighbors(i) {
        let e = inc.out.edge;
        match inc.out.dir {
            Dir::Forward => {
                for (lambda, o) in out.iter_mut().enumerate() {
                    *o += model.pairwise_value(e, lambda, 0);
                }
            }
            Dir::Backward => {
                let base = model.pairwise_value(e, l - 1, 0);
                for (mu, o) in out.iter_mut().enumerate() {
                    *o += model.pairwise_value(e, l - 1, mu) - base;
                }
            }
        }
    }
    out.iter().copied().min().unwrap_or(0)
}

/// Initial capacities computed from the model on demand. Holds nothing but
/// the normalization constant.
#[derive(Debug, Clone)]
pub struct LazyCapacities<'m> {
    model: &'m EnergyModel,
    constant: i64,
}

impl<'m> LazyCapacities<'m> {
    pub fn new(model: &'m EnergyModel) -> Result<Self> {
        model.check_submodular()?;
        let mut row = vec![0; model.num_labels()];
        let constant = (0..model.num_vertices())
            .map(|i| absorbed_unary(model, i, &mut row))
            .sum();
        Ok(LazyCapacities { model, constant })
    }

    pub fn model(&self) -> &'m EnergyModel {
        self.model
    }
}

impl InitialCapacities for LazyCapacities<'_> {
    fn num_labels(&self) -> usize {
        self.model.num_labels()
    }
    fn num_vertices(&self) -> usize {
        self.model.num_vertices()
    }
    fn edges(&self) -> &[(usize, usize)] {
        self.model.edges()
    }
    fn constant(&self) -> i64 {
        self.constant
    }
    fn column_into(&self, i: usize, out: &mut [i64]) {
        let min = absorbed_unary(self.model, i, out);
        out.iter_mut().for_each(|c| *c -= min);
    }
    fn cross_into(&self, e: usize, out: &mut PairCaps) {
        // submodularity was checked at construction
        cross_from_pairwise(self.model, e, out).expect("submodular model");
    }
}

/// Canonical capacities of a submodular model: cross mass in the stored
/// orientation only, columns shifted to minimum 0, shifts in `constant`.
pub fn phi_from_theta(model: &EnergyModel) -> Result<IshikawaCapacities> {
    let l = model.num_labels();
    let mut caps = IshikawaCapacities::zeros(model.num_vertices(), l, model.edges().to_vec());
    for e in 0..model.edges().len() {
        cross_from_pairwise(model, e, &mut caps.cross[e])?;
    }
    let mut constant = 0;
    for i in 0..model.num_vertices() {
        let col = caps.column_mut(i);
        let min = absorbed_unary(model, i, col);
        col.iter_mut().for_each(|c| *c -= min);
        constant += min;
    }
    caps.constant = constant;
    Ok(caps)
}

/// `θ_i(λ) = φ_{i:λ}` and
/// `θ_ij(λ,μ) = Σ_{λ'>λ, μ'≤μ} φ_{ij:λ'μ'} + Σ_{λ'≤λ, μ'>μ} φ_{ji:μ'λ'}`.
pub fn theta_from_phi(caps: &IshikawaCapacities) -> MultiLabelParams {
    let l = caps.num_labels;
    let pairwise = caps
        .cross
        .iter()
        .map(|pair| {
            let mut table = vec![0i64; l * l];
            for a in 0..l {
                for b in 0..l {
                    let mut s = 0;
                    for lp in a + 1..l {
                        for mp in 1..=b {
                            s += pair.get(Dir::Forward, lp, mp);
                        }
                    }
                    for lp in 1..=a {
                        for mp in b + 1..l {
                            s += pair.get(Dir::Backward, mp, lp);
                        }
                    }
                    table[a * l + b] = s;
                }
            }
            table
        })
        .collect();
    MultiLabelParams::new(l, caps.edges.clone(), caps.column.clone(), pairwise)
}

/// Capacity of the cut induced by `x` (the constant is not included).
pub fn cut_cost(caps: &IshikawaCapacities, x: &Labeling) -> i64 {
    let l = caps.num_labels;
    let mut total: i64 = (0..caps.num_vertices()).map(|i| caps.column(i)[x[i]]).sum();
    for (e, &(i, j)) in caps.edges.iter().enumerate() {
        let pair = &caps.cross[e];
        let (xi, xj) = (x[i], x[j]);
        for lambda in xi + 1..l {
            for mu in 1..=xj {
                total += pair.get(Dir::Forward, lambda, mu);
            }
        }
        for mu in xj + 1..l {
            for lambda in 1..=xi {
                total += pair.get(Dir::Backward, mu, lambda);
            }
        }
    }
    total
}

/// One residual edge of the Ishikawa graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arc {
    /// Downward `e_{i:k}`: `U_{i:k+1} → U_{i:k}`. `k = ℓ−1` leaves the
    /// source, `k = 0` enters the terminal.
    Down { vertex: usize, level: usize },
    /// Infinite upward edge `U_{i:k} → U_{i:k+1}`, the reverse of `e_{i:k}`.
    Up { vertex: usize, level: usize },
    /// `U_{i:from} → U_{j:to}` along the directed MRF edge.
    Cross {
        edge: DirectedEdge,
        from: usize,
        to: usize,
    },
}

impl Arc {
    pub fn is_finite(&self) -> bool {
        !matches!(self, Arc::Up { .. })
    }
}

/// `(|𝒱̂|, |ℰ̂|)` of the Ishikawa graph including source and terminal:
/// `ℓ` downward and `ℓ−2` upward edges per column, `2(ℓ−1)²` cross edges
/// per MRF edge.
pub fn graph_size(num_vertices: usize, num_edges: usize, num_labels: usize) -> (u64, u64) {
    let (v, e, l) = (num_vertices as u64, num_edges as u64, num_labels as u64);
    let nodes = v * (l - 1) + 2;
    let edges = v * l + v * (l - 2) + 2 * (l - 1) * (l - 1) * e;
    (nodes, edges)
}

/// Node numbering shared by the full-graph searches.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeIndex {
    levels: usize,
    internal: usize,
}

impl NodeIndex {
    pub(crate) fn new(num_vertices: usize, num_labels: usize) -> Self {
        let levels = num_labels - 1;
        NodeIndex {
            levels,
            internal: num_vertices * levels,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.internal + 2
    }

    pub(crate) fn source(&self) -> usize {
        self.internal
    }

    pub(crate) fn sink(&self) -> usize {
        self.internal + 1
    }

    /// Node id of `U_{i:λ}`; level `ℓ` maps to the source, level 0 to the sink.
    #[inline]
    pub(crate) fn node(&self, vertex: usize, level: usize) -> usize {
        if level == 0 {
            self.sink()
        } else if level > self.levels {
            self.source()
        } else {
            vertex * self.levels + level - 1
        }
    }

    #[inline]
    pub(crate) fn split(&self, node: usize) -> (usize, usize) {
        (node / self.levels, node % self.levels + 1)
    }
}

/// Calls `f(target, arc, capacity)` for every positive residual edge
/// leaving `node`, in ascending (vertex, label) order. Infinite edges
/// report `i64::MAX`.
fn for_each_residual_arc(
    caps: &IshikawaCapacities,
    adj: &Adjacency,
    nodes: NodeIndex,
    node: usize,
    mut f: impl FnMut(usize, Arc, i64),
) {
    let l = caps.num_labels;
    if node == nodes.source() {
        for i in 0..caps.num_vertices() {
            let c = caps.column(i)[l - 1];
            if c > 0 {
                f(nodes.node(i, l - 1), Arc::Down { vertex: i, level: l - 1 }, c);
            }
        }
        return;
    }
    if node == nodes.sink() {
        return;
    }
    let (i, lambda) = nodes.split(node);
    let neighbors = adj.neighbors(i);
    let split = neighbors.partition_point(|inc| inc.neighbor < i);
    let cross = |inc: &crate::energy::Incidence, f: &mut dyn FnMut(usize, Arc, i64)| {
        let pair = &caps.cross[inc.out.edge];
        for mu in 1..l {
            let c = pair.get(inc.out.dir, lambda, mu);
            if c > 0 {
                f(
                    nodes.node(inc.neighbor, mu),
                    Arc::Cross {
                        edge: inc.out,
                        from: lambda,
                        to: mu,
                    },
                    c,
                );
            }
        }
    };
    for inc in &neighbors[..split] {
        cross(inc, &mut f);
    }
    let down = caps.column(i)[lambda - 1];
    if down > 0 {
        f(
            nodes.node(i, lambda - 1),
            Arc::Down {
                vertex: i,
                level: lambda - 1,
            },
            down,
        );
    }
    if lambda + 1 < l {
        f(
            nodes.node(i, lambda + 1),
            Arc::Up {
                vertex: i,
                level: lambda,
            },
            i64::MAX,
        );
    }
    for inc in &neighbors[split..] {
        cross(inc, &mut f);
    }
}

/// Breadth-first search from the source over positive residual edges.
/// Returns the predecessor table; stops early once the sink is labelled
/// when `stop_at_sink` is set.
fn residual_bfs(
    caps: &IshikawaCapacities,
    adj: &Adjacency,
    nodes: NodeIndex,
    pred: &mut Vec<Option<(usize, Arc)>>,
    visited: &mut Vec<bool>,
    stop_at_sink: bool,
) -> bool {
    pred.clear();
    pred.resize(nodes.len(), None);
    visited.clear();
    visited.resize(nodes.len(), false);
    let mut queue = VecDeque::new();
    visited[nodes.source()] = true;
    queue.push_back(nodes.source());
    let sink = nodes.sink();
    while let Some(u) = queue.pop_front() {
        let mut found = false;
        for_each_residual_arc(caps, adj, nodes, u, |v, arc, _| {
            if !visited[v] {
                visited[v] = true;
                pred[v] = Some((u, arc));
                if v == sink {
                    found = true;
                }
                queue.push_back(v);
            }
        });
        if found && stop_at_sink {
            return true;
        }
    }
    visited[sink]
}

/// Whether the residual graph `caps` still has a source-to-terminal path.
pub fn has_augmenting_path(caps: &IshikawaCapacities) -> bool {
    let adj = Adjacency::from_edges(caps.num_vertices(), &caps.edges);
    let nodes = NodeIndex::new(caps.num_vertices(), caps.num_labels);
    residual_bfs(caps, &adj, nodes, &mut Vec::new(), &mut Vec::new(), true)
}

/// Apply `amount` of flow along one residual arc.
pub(crate) fn apply_arc(caps: &mut IshikawaCapacities, arc: Arc, amount: i64) {
    match arc {
        Arc::Down { vertex, level } => caps.column_mut(vertex)[level] -= amount,
        Arc::Up { vertex, level } => caps.column_mut(vertex)[level] += amount,
        Arc::Cross { edge, from, to } => caps.cross[edge.edge].push(edge.dir, from, to, amount),
    }
}

/// Residual capacities after some flow, with the flow's bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualState {
    pub caps: IshikawaCapacities,
    pub augmentations: u64,
    pub total_flow: i64,
}

impl ResidualState {
    pub fn new(caps: IshikawaCapacities) -> Self {
        ResidualState {
            caps,
            augmentations: 0,
            total_flow: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceOutcome {
    pub residual: ResidualState,
    pub labeling: Labeling,
    pub flow_total: i64,
    pub augmentations: u64,
}

/// The `k`-th outgoing edge of `node` in the fixed (vertex, label) order,
/// with its residual capacity (`i64::MAX` for infinite edges). Returns
/// `None` past the last edge; zero-capacity edges are reported too.
fn arc_at(caps: &IshikawaCapacities, adj: &Adjacency, nodes: NodeIndex, node: usize, k: usize) -> Option<(usize, Arc, i64)> {
    let l = caps.num_labels;
    let n = l - 1;
    if node == nodes.source() {
        let i = k;
        return (i < caps.num_vertices()).then(|| {
            (nodes.node(i, n), Arc::Down { vertex: i, level: n }, caps.column(i)[n])
        });
    }
    if node == nodes.sink() {
        return None;
    }
    let (i, lambda) = nodes.split(node);
    let neighbors = adj.neighbors(i);
    let split = neighbors.partition_point(|inc| inc.neighbor < i);
    let cross = |slot: usize, mu: usize| {
        let inc = neighbors[slot];
        let arc = Arc::Cross {
            edge: inc.out,
            from: lambda,
            to: mu,
        };
        (nodes.node(inc.neighbor, mu), arc, caps.cross[inc.out.edge].get(inc.out.dir, lambda, mu))
    };
    if k < split * n {
        return Some(cross(k / n, k % n + 1));
    }
    match k - split * n {
        0 => Some((
            nodes.node(i, lambda - 1),
            Arc::Down {
                vertex: i,
                level: lambda - 1,
            },
            caps.column(i)[lambda - 1],
        )),
        1 => Some((
            nodes.node(i, lambda + 1),
            Arc::Up { vertex: i, level: lambda },
            if lambda + 1 < l { i64::MAX } else { 0 },
        )),
        r => {
            let r = r - 2;
            let slot = split + r / n;
            (slot < neighbors.len()).then(|| cross(slot, r % n + 1))
        }
    }
}

/// Shortest augmenting paths on the full residual Ishikawa graph. Paths of
/// equal length are taken in phases over the BFS level graph (Dinic), each
/// path counting as one augmentation.
pub fn reference_maxflow(caps: IshikawaCapacities) -> Result<ReferenceOutcome> {
    if !caps.is_nonnegative() {
        return Err(Error::InvalidArgument(
            "reference max-flow needs nonnegative capacities".into(),
        ));
    }
    let adj = Adjacency::from_edges(caps.num_vertices(), &caps.edges);
    let nodes = NodeIndex::new(caps.num_vertices(), caps.num_labels);
    let mut state = ResidualState::new(caps);
    let mut level = vec![u32::MAX; nodes.len()];
    let mut next = vec![0usize; nodes.len()];
    let mut queue = VecDeque::new();
    let mut path: Vec<(usize, Arc)> = Vec::new();
    loop {
        level.fill(u32::MAX);
        level[nodes.source()] = 0;
        queue.clear();
        queue.push_back(nodes.source());
        while let Some(u) = queue.pop_front() {
            for_each_residual_arc(&state.caps, &adj, nodes, u, |v, _, _| {
                if level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            });
        }
        let sink_level = level[nodes.sink()];
        if sink_level == u32::MAX {
            break;
        }
        next.fill(0);
        path.clear();
        let mut u = nodes.source();
        loop {
            if u == nodes.sink() {
                let bottleneck = path
                    .iter()
                    .map(|&(_, arc)| residual_cap(&state.caps, arc))
                    .min()
                    .unwrap_or(0);
                if bottleneck <= 0 || bottleneck == i64::MAX {
                    return Err(Error::Internal(format!("bad bottleneck {bottleneck}")));
                }
                for &(_, arc) in &path {
                    apply_arc(&mut state.caps, arc, bottleneck);
                }
                state.total_flow += bottleneck;
                state.augmentations += 1;
                // resume from the tail of the first saturated edge
                let cut = path
                    .iter()
                    .position(|&(_, arc)| residual_cap(&state.caps, arc) == 0)
                    .unwrap_or(0);
                u = path[cut].0;
                path.truncate(cut);
                continue;
            }
            let mut advanced = false;
            while let Some((v, arc, cap)) = arc_at(&state.caps, &adj, nodes, u, next[u]) {
                if cap > 0 && level[v] == level[u] + 1 && level[v] <= sink_level {
                    path.push((u, arc));
                    u = v;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if advanced {
                continue;
            }
            level[u] = u32::MAX;
            match path.pop() {
                Some((p, _)) => {
                    next[p] += 1;
                    u = p;
                }
                None => break,
            }
        }
    }
    let labeling = get_labelling_from_reachability(&state)?;
    Ok(ReferenceOutcome {
        flow_total: state.total_flow,
        augmentations: state.augmentations,
        labeling,
        residual: state,
    })
}

fn residual_cap(caps: &IshikawaCapacities, arc: Arc) -> i64 {
    match arc {
        Arc::Down { vertex, level } => caps.column(vertex)[level],
        Arc::Up { .. } => i64::MAX,
        Arc::Cross { edge, from, to } => caps.cross[edge.edge].get(edge.dir, from, to),
    }
}

/// Labeling from the source-reachable set `R` of a maximal residual:
/// `x_i` is the `λ` with `U_{i:λ+1} ∈ R` and `U_{i:λ} ∉ R`.
pub fn get_labelling_from_reachability(residual: &ResidualState) -> Result<Labeling> {
    let caps = &residual.caps;
    let adj = Adjacency::from_edges(caps.num_vertices(), &caps.edges);
    let nodes = NodeIndex::new(caps.num_vertices(), caps.num_labels);
    let mut visited = Vec::new();
    if residual_bfs(caps, &adj, nodes, &mut Vec::new(), &mut visited, false) {
        return Err(Error::Internal("terminal reachable from source".into()));
    }
    labeling_from_reachable(caps.num_vertices(), caps.num_labels, |i, lambda| {
        visited[nodes.node(i, lambda)]
    })
}

/// Reads the per-column boundary of an upward-closed reachable set.
pub(crate) fn labeling_from_reachable(
    num_vertices: usize,
    num_labels: usize,
    reachable: impl Fn(usize, usize) -> bool,
) -> Result<Labeling> {
    let mut x = Vec::with_capacity(num_vertices);
    for i in 0..num_vertices {
        // lowest reachable level; ℓ stands for the source itself
        let lowest = (1..num_labels)
            .find(|&lambda| reachable(i, lambda))
            .unwrap_or(num_labels);
        if (lowest..num_labels).any(|lambda| !reachable(i, lambda)) {
            return Err(Error::Internal(format!(
                "reachable set of column {i} is not upward closed"
            )));
        }
        x.push(lowest - 1);
    }
    Ok(Labeling(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{brute_force_minimize, PairwiseSpec, Regularizer, BRUTE_FORCE_CAP};

    fn single(col: Vec<i64>) -> IshikawaCapacities {
        let l = col.len();
        let mut caps = IshikawaCapacities::zeros(1, l, vec![]);
        caps.column_mut(0).copy_from_slice(&col);
        caps
    }

    fn potts_model(u1: Vec<i64>, u2: Vec<i64>) -> EnergyModel {
        EnergyModel::new(
            2,
            2,
            vec![(0, 1)],
            vec![u1, u2],
            vec![PairwiseSpec::Table(vec![0, 1, 1, 0])],
        )
        .unwrap()
    }

    #[test]
    fn phi_from_theta_examples() {
        let zero = EnergyModel::new(
            2,
            3,
            vec![(0, 1)],
            vec![vec![0; 3]; 2],
            vec![PairwiseSpec::Table(vec![0; 9])],
        )
        .unwrap();
        let caps = phi_from_theta(&zero).unwrap();
        assert!(caps.column.iter().all(|&c| c == 0));
        assert_eq!(caps.cross(0), &PairCaps::zeros(3));
        assert_eq!(caps.constant(), 0);

        let potts = potts_model(vec![0, 0], vec![0, 0]);
        let caps = phi_from_theta(&potts).unwrap();
        assert_eq!(caps.cross(0).get(Dir::Forward, 1, 1), 2);
        assert_eq!(caps.cross(0).get(Dir::Backward, 1, 1), 0);

        let one = EnergyModel::new(1, 3, vec![], vec![vec![5, 2, 7]], vec![]).unwrap();
        let caps = phi_from_theta(&one).unwrap();
        assert_eq!(caps.column(0), &[3, 0, 5]);
        assert_eq!(caps.constant(), 2);
    }

    #[test]
    fn phi_from_theta_rejects_potts_three_labels() {
        let mut t = vec![1; 9];
        for a in 0..3 {
            t[a * 3 + a] = 0;
        }
        let m = EnergyModel::new(
            2,
            3,
            vec![(0, 1)],
            vec![vec![0; 3]; 2],
            vec![PairwiseSpec::Table(t)],
        )
        .unwrap();
        assert!(matches!(
            phi_from_theta(&m),
            Err(Error::NotSubmodular { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn theta_from_phi_examples() {
        let caps = IshikawaCapacities::zeros(2, 3, vec![(0, 1)]);
        let theta = theta_from_phi(&caps);
        assert!(theta.pairwise_table(0).iter().all(|&v| v == 0));

        let mut caps = IshikawaCapacities::zeros(2, 3, vec![(0, 1)]);
        caps.cross_mut(0).set(Dir::Forward, 2, 1, 4);
        let theta = theta_from_phi(&caps);
        for a in 0..3 {
            for b in 0..3 {
                let want = if a < 2 && b >= 1 { 4 } else { 0 };
                assert_eq!(theta.pairwise(0, a, b), want, "({a},{b})");
            }
        }

        let mut caps = IshikawaCapacities::zeros(2, 3, vec![(0, 1)]);
        caps.cross_mut(0).set(Dir::Backward, 2, 1, 4);
        let theta = theta_from_phi(&caps);
        for a in 0..3 {
            for b in 0..3 {
                let want = if b < 2 && a >= 1 { 4 } else { 0 };
                assert_eq!(theta.pairwise(0, a, b), want, "({a},{b})");
            }
        }
    }

    #[test]
    fn cut_cost_examples() {
        assert_eq!(cut_cost(&IshikawaCapacities::zeros(2, 3, vec![(0, 1)]), &Labeling(vec![1, 2])), 0);
        let caps = single(vec![3, 0, 5]);
        let costs: Vec<i64> = (0..3).map(|x| cut_cost(&caps, &Labeling(vec![x]))).collect();
        assert_eq!(costs, vec![3, 0, 5]);

        let mut caps = IshikawaCapacities::zeros(2, 3, vec![(0, 1)]);
        caps.cross_mut(0).set(Dir::Forward, 2, 1, 4);
        assert_eq!(cut_cost(&caps, &Labeling(vec![1, 1])), 4);
        assert_eq!(cut_cost(&caps, &Labeling(vec![2, 1])), 0);
    }

    #[test]
    fn reference_examples() {
        let out = reference_maxflow(single(vec![3, 0, 5])).unwrap();
        assert_eq!((out.flow_total, out.labeling.clone()), (0, Labeling(vec![1])));
        let out = reference_maxflow(single(vec![3, 1, 5])).unwrap();
        assert_eq!((out.flow_total, out.labeling.clone()), (1, Labeling(vec![1])));

        let m = potts_model(vec![0, 3], vec![3, 0]);
        let caps = phi_from_theta(&m).unwrap();
        let constant = caps.constant();
        let out = reference_maxflow(caps).unwrap();
        let (_, best) = brute_force_minimize(&m, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(best, 1);
        assert_eq!(out.flow_total + constant, best);
        assert_eq!(m.evaluate(&out.labeling).unwrap(), best);
    }

    #[test]
    fn reachability_examples() {
        let state = ResidualState::new(single(vec![3, 0, 5]));
        assert_eq!(get_labelling_from_reachability(&state).unwrap(), Labeling(vec![1]));
        let state = ResidualState::new(single(vec![0, 0, 0, 0]));
        assert_eq!(get_labelling_from_reachability(&state).unwrap(), Labeling(vec![3]));

        let mut caps = IshikawaCapacities::zeros(2, 3, vec![]);
        caps.column_mut(0).copy_from_slice(&[0, 2, 2]);
        caps.column_mut(1).copy_from_slice(&[2, 0, 1]);
        let x = get_labelling_from_reachability(&ResidualState::new(caps)).unwrap();
        assert_eq!(x, Labeling(vec![0, 1]));

        let state = ResidualState::new(single(vec![1, 1]));
        assert!(get_labelling_from_reachability(&state).is_err());
    }

    #[test]
    fn reference_matches_brute_force_on_small_grids() {
        for seed in 0..20 {
            let reg = [Regularizer::Linear, Regularizer::Quadratic, Regularizer::Huber { delta: 1 }]
                [seed as usize % 3];
            let m = crate::energy::generate_grid_instance(3, 2, 3, reg, 2, 15, seed).unwrap();
            let caps = phi_from_theta(&m).unwrap();
            let constant = caps.constant();
            let out = reference_maxflow(caps).unwrap();
            let (_, best) = brute_force_minimize(&m, BRUTE_FORCE_CAP).unwrap();
            assert_eq!(out.flow_total + constant, best);
            assert_eq!(m.evaluate(&out.labeling).unwrap(), best);
            assert!(out.residual.caps.is_nonnegative());
        }
    }

    #[test]
    fn lazy_matches_materialized() {
        let m = crate::energy::generate_grid_instance(3, 3, 5, Regularizer::Huber { delta: 2 }, 3, 9, 4)
            .unwrap();
        let lazy = LazyCapacities::new(&m).unwrap();
        assert_eq!(IshikawaCapacities::from_source(&lazy), phi_from_theta(&m).unwrap());
    }
}
