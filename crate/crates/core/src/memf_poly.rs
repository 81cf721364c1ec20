//! Polynomial-time memory-efficient max-flow.
//!
//! The search runs on the lower-graph: residual columns plus, for every node
//! and neighbouring column, only the lowest positive cross edge. Flow on
//! cross edges is booked as exit-flows; when a lowest edge saturates its
//! pair is reconstructed from the exit-flows and the records rebuilt.

use std::collections::VecDeque;
use std::time::Instant;

use crate::energy::{Adjacency, Dir, DirectedEdge, EnergyModel, Labeling};
use crate::error::{Error, Result};
use crate::flowcodec::{full_residual_counted, FlowStore, Reconstructor};
use crate::ishikawa::{
    has_augmenting_path, labeling_from_reachable, Arc, InitialCapacities, LazyCapacities, NodeIndex, PairCaps,
};
use crate::report::{Diagnostics, SolveOptions, SolveReport};

const NO_RECORD: u32 = 0;

#[derive(Debug, Clone)]
pub struct LowerGraph {
    num_labels: usize,
    adj: Adjacency,
    columns: Vec<i64>,
    rec_target: Vec<u32>,
    rec_cap: Vec<i64>,
}

impl LowerGraph {
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_vertices(&self) -> usize {
        self.columns.len() / self.num_labels
    }

    pub fn column(&self, i: usize) -> &[i64] {
        &self.columns[i * self.num_labels..(i + 1) * self.num_labels]
    }

    fn column_mut(&mut self, i: usize) -> &mut [i64] {
        let l = self.num_labels;
        &mut self.columns[i * l..(i + 1) * l]
    }

    #[inline]
    fn slot(&self, de: DirectedEdge, lambda: usize) -> usize {
        let d = match de.dir {
            Dir::Forward => 0,
            Dir::Backward => 1,
        };
        (2 * de.edge + d) * (self.num_labels - 1) + lambda - 1
    }

    /// Lowest positive cross edge leaving `U_{i:λ}` along `de`, as
    /// `(target level, residual capacity)`.
    pub fn record(&self, de: DirectedEdge, lambda: usize) -> Option<(usize, i64)> {
        let s = self.slot(de, lambda);
        match self.rec_target[s] {
            NO_RECORD => None,
            mu => Some((mu as usize, self.rec_cap[s])),
        }
    }

    fn set_record(&mut self, de: DirectedEdge, lambda: usize, rec: Option<(usize, i64)>) {
        let s = self.slot(de, lambda);
        match rec {
            Some((mu, cap)) => {
                self.rec_target[s] = mu as u32;
                self.rec_cap[s] = cap;
            }
            None => {
                self.rec_target[s] = NO_RECORD;
                self.rec_cap[s] = 0;
            }
        }
    }

    pub fn num_records(&self) -> usize {
        self.rec_target.iter().filter(|&&t| t != NO_RECORD).count()
    }

    /// Rebuilds the records of both orientations of edge `e` from its
    /// residual cross capacities.
    fn rebuild_records(&mut self, e: usize, pair: &PairCaps) {
        let n = self.num_labels - 1;
        for dir in [Dir::Forward, Dir::Backward] {
            let de = DirectedEdge::new(e, dir);
            for lambda in 1..=n {
                let rec = (1..=n)
                    .find(|&mu| pair.get(dir, lambda, mu) > 0)
                    .map(|mu| (mu, pair.get(dir, lambda, mu)));
                self.set_record(de, lambda, rec);
            }
        }
    }

    /// Persistent values: residual columns and two values per record slot.
    pub fn stored_values(&self) -> usize {
        self.columns.len() + self.rec_target.len() + self.rec_cap.len()
    }

    /// Calls `f(target, cost)` for each lower-graph edge leaving `node`,
    /// ascending by (vertex, label). Infinite edges cost 0.
    #[inline]
    fn for_each_neighbor(&self, nodes: NodeIndex, node: usize, mut f: impl FnMut(usize, u32)) {
        let l = self.num_labels;
        if node == nodes.source() {
            for i in 0..self.num_vertices() {
                if self.columns[i * l + l - 1] > 0 {
                    f(nodes.node(i, l - 1), 1);
                }
            }
            return;
        }
        if node == nodes.sink() {
            return;
        }
        let (i, lambda) = nodes.split(node);
        let mut own_column_done = false;
        for inc in self.adj.neighbors(i) {
            if !own_column_done && inc.neighbor > i {
                self.column_neighbors(nodes, i, lambda, &mut f);
                own_column_done = true;
            }
            let t = self.rec_target[self.slot(inc.out, lambda)];
            if t != NO_RECORD {
                f(nodes.node(inc.neighbor, t as usize), 1);
            }
        }
        if !own_column_done {
            self.column_neighbors(nodes, i, lambda, &mut f);
        }
    }

    #[inline]
    fn column_neighbors(&self, nodes: NodeIndex, i: usize, lambda: usize, f: &mut impl FnMut(usize, u32)) {
        let l = self.num_labels;
        if self.columns[i * l + lambda - 1] > 0 {
            f(nodes.node(i, lambda - 1), 1);
        }
        if lambda + 1 < l {
            f(nodes.node(i, lambda + 1), 0);
        }
    }

    /// The `k`-th edge slot of `node` in the order of `for_each_neighbor`.
    fn neighbor_at(&self, nodes: NodeIndex, node: usize, k: usize) -> Slot {
        let l = self.num_labels;
        if node == nodes.source() {
            if k >= self.num_vertices() {
                return Slot::End;
            }
            return if self.columns[k * l + l - 1] > 0 {
                Slot::Edge(nodes.node(k, l - 1), 1)
            } else {
                Slot::Empty
            };
        }
        if node == nodes.sink() {
            return Slot::End;
        }
        let (i, lambda) = nodes.split(node);
        let neighbors = self.adj.neighbors(i);
        let split = neighbors.partition_point(|inc| inc.neighbor < i);
        let slot = if k < split {
            k
        } else if k == split {
            return if self.columns[i * l + lambda - 1] > 0 {
                Slot::Edge(nodes.node(i, lambda - 1), 1)
            } else {
                Slot::Empty
            };
        } else if k == split + 1 {
            return if lambda + 1 < l {
                Slot::Edge(nodes.node(i, lambda + 1), 0)
            } else {
                Slot::Empty
            };
        } else if k - 2 < neighbors.len() {
            k - 2
        } else {
            return Slot::End;
        };
        let inc = neighbors[slot];
        match self.rec_target[self.slot(inc.out, lambda)] {
            NO_RECORD => Slot::Empty,
            t => Slot::Edge(nodes.node(inc.neighbor, t as usize), 1),
        }
    }

    /// The lower-graph edge `u → v`.
    fn arc_between(&self, nodes: NodeIndex, u: usize, v: usize) -> Arc {
        let l = self.num_labels;
        if u == nodes.source() {
            return Arc::Down {
                vertex: nodes.split(v).0,
                level: l - 1,
            };
        }
        let (i, lambda) = nodes.split(u);
        if v == nodes.sink() {
            return Arc::Down { vertex: i, level: 0 };
        }
        let (j, mu) = nodes.split(v);
        if i == j {
            return if mu + 1 == lambda {
                Arc::Down { vertex: i, level: mu }
            } else {
                Arc::Up { vertex: i, level: lambda }
            };
        }
        let edge = self.adj.find(i, j).expect("adjacent columns");
        Arc::Cross { edge, from: lambda, to: mu }
    }
}

enum Slot {
    Edge(usize, u32),
    Empty,
    End,
}

/// Lower-graph of the initial capacities; all exit-flows are zero.
pub fn build_lower_graph<C: InitialCapacities + ?Sized>(caps: &C) -> LowerGraph {
    let l = caps.num_labels();
    let v = caps.num_vertices();
    let slots = 2 * caps.edges().len() * (l - 1);
    let mut lg = LowerGraph {
        num_labels: l,
        adj: Adjacency::from_edges(v, caps.edges()),
        columns: vec![0; v * l],
        rec_target: vec![NO_RECORD; slots],
        rec_cap: vec![0; slots],
    };
    for i in 0..v {
        caps.column_into(i, lg.column_mut(i));
    }
    let mut pair = PairCaps::zeros(l);
    for e in 0..caps.edges().len() {
        caps.cross_into(e, &mut pair);
        lg.rebuild_records(e, &pair);
    }
    lg
}

/// Source-to-terminal path in the lower-graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugPath {
    pub arcs: Vec<Arc>,
}

impl AugPath {
    /// Number of finite edges.
    pub fn length(&self) -> usize {
        self.arcs.iter().filter(|a| a.is_finite()).count()
    }
}

/// Reusable 0-1 BFS buffers. Entries are valid only when stamped with the
/// current epoch, so nothing is cleared between searches.
#[derive(Debug, Default, Clone)]
pub struct PathSearch {
    dist: Vec<u32>,
    pred: Vec<u32>,
    stamp: Vec<u32>,
    settled: Vec<u32>,
    epoch: u32,
    deque: VecDeque<u32>,
    next: Vec<usize>,
    dead: Vec<bool>,
    stack: Vec<usize>,
}

impl PathSearch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Values held by the search over a graph with `nodes` nodes.
    pub fn transient_values(nodes: usize) -> usize {
        8 * nodes
    }

    #[inline]
    fn dist_of(&self, v: usize) -> u32 {
        if self.stamp[v] == self.epoch {
            self.dist[v]
        } else {
            u32::MAX
        }
    }

    /// Runs the 0-1 BFS; returns whether the terminal is reachable. With
    /// `full` unset the search stops once the terminal is settled.
    fn run(&mut self, lg: &LowerGraph, full: bool) -> bool {
        let nodes = NodeIndex::new(lg.num_vertices(), lg.num_labels);
        if self.stamp.len() != nodes.len() || self.epoch == u32::MAX {
            self.dist = vec![0; nodes.len()];
            self.pred = vec![0; nodes.len()];
            self.stamp = vec![0; nodes.len()];
            self.settled = vec![0; nodes.len()];
            self.epoch = 0;
        }
        self.epoch += 1;
        let epoch = self.epoch;
        self.deque.clear();
        let source = nodes.source();
        self.stamp[source] = epoch;
        self.dist[source] = 0;
        self.deque.push_back(source as u32);
        while let Some(u) = self.deque.pop_front() {
            let u = u as usize;
            if self.settled[u] == epoch {
                continue;
            }
            self.settled[u] = epoch;
            if u == nodes.sink() && !full {
                return true;
            }
            let du = self.dist[u];
            let PathSearch {
                dist,
                pred,
                stamp,
                deque,
                ..
            } = self;
            lg.for_each_neighbor(nodes, u, |v, w| {
                let nd = du + w;
                if stamp[v] != epoch || nd < dist[v] {
                    stamp[v] = epoch;
                    dist[v] = nd;
                    pred[v] = u as u32;
                    if w == 0 {
                        deque.push_front(v as u32);
                    } else {
                        deque.push_back(v as u32);
                    }
                }
            });
        }
        self.dist_of(nodes.sink()) != u32::MAX
    }

    fn path(&self, lg: &LowerGraph) -> Option<AugPath> {
        let nodes = NodeIndex::new(lg.num_vertices(), lg.num_labels);
        if self.dist_of(nodes.sink()) == u32::MAX {
            return None;
        }
        let mut arcs = Vec::new();
        let mut v = nodes.sink();
        while v != nodes.source() {
            let u = self.pred[v] as usize;
            arcs.push(lg.arc_between(nodes, u, v));
            v = u;
        }
        arcs.reverse();
        Some(AugPath { arcs })
    }

    /// Starts a phase: a full search whose distances then admit several
    /// shortest paths. Returns whether the terminal is reachable.
    pub fn start_phase(&mut self, lg: &LowerGraph) -> bool {
        let reached = self.run(lg, false);
        self.next.clear();
        self.next.resize(self.dist.len(), 0);
        self.dead.clear();
        self.dead.resize(self.dist.len(), false);
        reached
    }

    /// Next source-to-terminal path whose every edge `u → v` of cost `w`
    /// satisfies `d(v) = d(u) + w` for the distances of the current phase.
    /// Such a path has the phase's shortest length, which no augmentation
    /// can undercut. `None` ends the phase.
    pub fn next_in_phase(&mut self, lg: &LowerGraph) -> Option<AugPath> {
        let nodes = NodeIndex::new(lg.num_vertices(), lg.num_labels);
        let limit = self.dist_of(nodes.sink());
        if limit == u32::MAX {
            return None;
        }
        self.stack.clear();
        self.stack.push(nodes.source());
        while let Some(&u) = self.stack.last() {
            if u == nodes.sink() {
                let arcs = self
                    .stack
                    .windows(2)
                    .map(|w| lg.arc_between(nodes, w[0], w[1]))
                    .collect();
                return Some(AugPath { arcs });
            }
            let du = self.dist_of(u);
            let mut advanced = false;
            loop {
                match lg.neighbor_at(nodes, u, self.next[u]) {
                    Slot::End => break,
                    Slot::Edge(v, w) if !self.dead[v] && self.dist_of(v) == du + w && du + w <= limit => {
                        self.stack.push(v);
                        advanced = true;
                        break;
                    }
                    _ => self.next[u] += 1,
                }
            }
            if !advanced {
                self.dead[u] = true;
                self.stack.pop();
                if let Some(&p) = self.stack.last() {
                    self.next[p] += 1;
                }
            }
        }
        None
    }

    pub fn shortest_path(&mut self, lg: &LowerGraph) -> Option<AugPath> {
        self.run(lg, false);
        self.path(lg)
    }

    /// Distances of every node from the source (`u32::MAX` if unreachable)
    /// and the shortest path, if any.
    pub fn distances(&mut self, lg: &LowerGraph) -> (Vec<u32>, Option<AugPath>) {
        self.run(lg, true);
        let dist = (0..self.dist.len()).map(|v| self.dist_of(v)).collect();
        (dist, self.path(lg))
    }
}

pub fn shortest_augmenting_path(lg: &LowerGraph) -> Option<AugPath> {
    PathSearch::new().shortest_path(lg)
}

/// Pushes the bottleneck amount along `path`, books it in `store` and
/// repairs the lower-graph. Returns the amount pushed.
pub fn augment<C: InitialCapacities + ?Sized>(
    lg: &mut LowerGraph,
    path: &AugPath,
    store: &mut FlowStore,
    initial: &C,
    rec: &mut Reconstructor,
) -> Result<i64> {
    let l = lg.num_labels;
    let mut alpha = i64::MAX;
    for &arc in &path.arcs {
        let cap = match arc {
            Arc::Down { vertex, level } => lg.column(vertex)[level],
            Arc::Up { .. } => continue,
            Arc::Cross { edge, from, to } => match lg.record(edge, from) {
                Some((mu, cap)) if mu == to => cap,
                _ => return Err(Error::Internal("path uses a missing cross record".into())),
            },
        };
        alpha = alpha.min(cap);
    }
    if alpha <= 0 || alpha == i64::MAX {
        return Err(Error::Internal(format!("non-positive bottleneck {alpha}")));
    }

    let mut dirty: Vec<usize> = Vec::new();
    for &arc in &path.arcs {
        match arc {
            Arc::Down { vertex, level } => {
                lg.column_mut(vertex)[level] -= alpha;
                if level == l - 1 {
                    store.add_source_flow(vertex, alpha);
                }
            }
            Arc::Up { vertex, level } => lg.column_mut(vertex)[level] += alpha,
            Arc::Cross { edge, from, to } => {
                match lg.record(edge, from) {
                    Some((mu, cap)) if mu == to => {
                        lg.set_record(edge, from, Some((mu, cap - alpha)));
                        if cap == alpha {
                            dirty.push(edge.edge);
                        }
                    }
                    _ => dirty.push(edge.edge),
                }
                store.record_cross_flow(edge, from, to, alpha)?;
                let back = edge.reverse();
                match lg.record(back, to) {
                    None => lg.set_record(back, to, Some((from, alpha))),
                    Some((lambda, _)) if lambda > from => lg.set_record(back, to, Some((from, alpha))),
                    Some((lambda, cap)) if lambda == from => lg.set_record(back, to, Some((from, cap + alpha))),
                    Some(_) => {}
                }
            }
        }
    }
    store.add_total_flow(alpha);

    dirty.sort_unstable();
    dirty.dedup();
    let mut initial_pair = PairCaps::zeros(l);
    let mut residual = PairCaps::zeros(l);
    for e in dirty {
        initial.cross_into(e, &mut initial_pair);
        let fwd = DirectedEdge::new(e, Dir::Forward);
        rec.reconstruct(e, &initial_pair, store.exit(fwd), store.exit(fwd.reverse()), &mut residual)?;
        lg.rebuild_records(e, &residual);
    }
    Ok(alpha)
}

/// Labeling read from the source-reachable part of the lower-graph.
pub fn lower_graph_labeling(lg: &LowerGraph) -> Result<Labeling> {
    let mut search = PathSearch::new();
    if search.run(lg, true) {
        return Err(Error::Internal("terminal reachable in the lower-graph".into()));
    }
    let nodes = NodeIndex::new(lg.num_vertices(), lg.num_labels);
    labeling_from_reachable(lg.num_vertices(), lg.num_labels, |i, lambda| {
        search.dist_of(nodes.node(i, lambda)) != u32::MAX
    })
}

pub fn solve_poly(model: &EnergyModel, options: SolveOptions) -> Result<SolveReport> {
    let initial = LazyCapacities::new(model)?;
    solve_poly_with(&initial, options)
}

pub fn solve_poly_with<C: InitialCapacities + ?Sized>(initial: &C, options: SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let l = initial.num_labels();
    let v = initial.num_vertices();
    let num_edges = initial.edges().len();
    let mut lg = build_lower_graph(initial);
    let mut store = FlowStore::new(v, num_edges, l);
    let mut rec = Reconstructor::new();
    let mut search = PathSearch::new();
    let mut diag = options.diagnostics.then(Diagnostics::default);
    let mut check_rec = Reconstructor::new();
    let mut previous: Option<Vec<u32>> = None;
    let nodes = NodeIndex::new(v, l);
    let mut augmentations = 0u64;
    let mut iteration = 0usize;

    let mut trace = PathSearch::new();
    let mut in_phase = false;
    loop {
        let mut path = None;
        if in_phase {
            path = search.next_in_phase(&lg);
        }
        if path.is_none() && search.start_phase(&lg) {
            in_phase = true;
            path = search.next_in_phase(&lg);
        }
        if let Some(d) = diag.as_mut() {
            let (dist, shortest) = trace.distances(&lg);
            if let Some(prev) = &previous {
                d.monotonicity_violations += prev.iter().zip(&dist).filter(|(p, q)| q < p).count() as u64;
            }
            if shortest.as_ref().map(AugPath::length) != path.as_ref().map(AugPath::length) {
                d.non_shortest_paths += 1;
            }
            d.distance_trace.push(dist.clone());
            previous = Some(dist);
            if iteration.is_multiple_of(options.sample_every.max(1)) || path.is_none() {
                let full = full_residual_counted(initial, &store, &mut check_rec)?;
                d.existence_checks += 1;
                if has_augmenting_path(&full) != path.is_some() {
                    d.existence_mismatches += 1;
                }
                d.bookkeeping_mismatches += (0..v).filter(|&i| full.column(i) != lg.column(i)).count() as u64;
            }
        }
        let Some(path) = path else { break };
        if let Some(d) = diag.as_mut() {
            d.path_lengths.push(path.length());
        }
        augment(&mut lg, &path, &mut store, initial, &mut rec)?;
        augmentations += 1;
        iteration += 1;
    }

    let labeling = lower_graph_labeling(&lg)?;
    let mut report = SolveReport::new("poly");
    report.flow_total = store.total_flow();
    report.constant = initial.constant();
    report.energy = report.flow_total + report.constant;
    report.labeling = Some(labeling);
    report.augmentations = augmentations;
    report.reconstructions = rec.calls;
    report.reconstruction_fallbacks = rec.fallbacks;
    report.stored_values_peak = (lg.stored_values() + store.stored_values()) as u64;
    report.transient_values_peak = (PathSearch::transient_values(nodes.len())
        + Reconstructor::transient_values(l)
        + 2 * (l - 1) * (l - 1)) as u64;
    report.diagnostics = diag;
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}
