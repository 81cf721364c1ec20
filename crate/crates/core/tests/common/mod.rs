#![allow(dead_code)]

use memf_core::{Dir, DirectedEdge, EnergyModel, FlowDelta, FlowStore, IshikawaCapacities, Labeling, PairCaps, PairwiseSpec};
use rand::seq::SliceRandom;
use rand::Rng;

/// Every labeling of `n` vertices with `l` labels, lexicographic.
pub fn all_labelings(n: usize, l: usize) -> Vec<Labeling> {
    let total = l.pow(n as u32);
    (0..total)
        .map(|mut k| {
            let mut x = vec![0; n];
            for slot in x.iter_mut().rev() {
                *slot = k % l;
                k /= l;
            }
            Labeling(x)
        })
        .collect()
}

/// Random submodular table: a nonnegative combination of cut indicators
/// `[λ ≥ a][μ < b]` and `[λ < a][μ ≥ b]` plus separable row and column terms.
pub fn random_submodular_table<R: Rng>(rng: &mut R, l: usize, max_weight: i64) -> Vec<i64> {
    let mut t = vec![0i64; l * l];
    let row: Vec<i64> = (0..l).map(|_| rng.gen_range(-max_weight..=max_weight)).collect();
    let col: Vec<i64> = (0..l).map(|_| rng.gen_range(-max_weight..=max_weight)).collect();
    for a in 1..l {
        for b in 1..l {
            let w1 = if rng.gen_bool(0.5) { rng.gen_range(0..=max_weight) } else { 0 };
            let w2 = if rng.gen_bool(0.5) { rng.gen_range(0..=max_weight) } else { 0 };
            for lambda in 0..l {
                for mu in 0..l {
                    if lambda >= a && mu < b {
                        t[lambda * l + mu] += w1;
                    }
                    if lambda < a && mu >= b {
                        t[lambda * l + mu] += w2;
                    }
                }
            }
        }
    }
    for lambda in 0..l {
        for mu in 0..l {
            t[lambda * l + mu] += row[lambda] + col[mu];
        }
    }
    t
}

/// Random submodular model on the given edges with explicit tables.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, edges: Vec<(usize, usize)>, l: usize, max_weight: i64) -> EnergyModel {
    let unary = (0..n)
        .map(|_| (0..l).map(|_| rng.gen_range(-max_weight..=max_weight)).collect())
        .collect();
    let pairwise = edges
        .iter()
        .map(|_| PairwiseSpec::Table(random_submodular_table(rng, l, max_weight)))
        .collect();
    EnergyModel::new(n, l, edges, unary, pairwise).unwrap()
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push(if rng.gen_bool(0.5) { (u, v) } else { (v, u) });
    }
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            edges.push((a, b));
        }
    }
    edges
}

/// Node of the explicit Ishikawa graph used by the test oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Source,
    Sink,
    Inner(usize, usize),
}

/// Residual arcs leaving `u`, as `(target, capacity, kind)` where the kind
/// says how to push flow along the arc.
#[derive(Debug, Clone, Copy)]
pub enum ArcKind {
    Down(usize, usize),
    Up(usize, usize),
    Cross(usize, Dir, usize, usize),
}

pub fn residual_arcs(caps: &IshikawaCapacities, u: Node) -> Vec<(Node, i64, ArcKind)> {
    let l = caps.num_labels();
    let inner = |i: usize, lambda: usize| match lambda {
        0 => Node::Sink,
        x if x == l => Node::Source,
        x => Node::Inner(i, x),
    };
    let mut out = Vec::new();
    match u {
        Node::Source => {
            for i in 0..caps.num_vertices() {
                out.push((inner(i, l - 1), caps.column(i)[l - 1], ArcKind::Down(i, l - 1)));
            }
        }
        Node::Sink => {}
        Node::Inner(i, lambda) => {
            out.push((inner(i, lambda - 1), caps.column(i)[lambda - 1], ArcKind::Down(i, lambda - 1)));
            if lambda + 1 < l {
                out.push((inner(i, lambda + 1), i64::MAX, ArcKind::Up(i, lambda)));
            }
            for (e, &(a, b)) in caps.edges().iter().enumerate() {
                let (dir, j) = if a == i {
                    (Dir::Forward, b)
                } else if b == i {
                    (Dir::Backward, a)
                } else {
                    continue;
                };
                for mu in 1..l {
                    let c = caps.cross(e).get(dir, lambda, mu);
                    out.push((Node::Inner(j, mu), c, ArcKind::Cross(e, dir, lambda, mu)));
                }
            }
        }
    }
    out.retain(|&(_, c, _)| c > 0);
    out
}

pub fn push_arc(caps: &mut IshikawaCapacities, kind: ArcKind, amount: i64) {
    match kind {
        ArcKind::Down(i, k) => caps.column_mut(i)[k] -= amount,
        ArcKind::Up(i, k) => caps.column_mut(i)[k] += amount,
        ArcKind::Cross(e, dir, lambda, mu) => caps.cross_mut(e).push(dir, lambda, mu, amount),
    }
}

/// Randomized DFS for an augmenting path; pushes a random fraction of its
/// bottleneck. Returns the amount pushed, or `None` if no path exists.
pub fn random_augmentation<R: Rng>(rng: &mut R, caps: &mut IshikawaCapacities) -> Option<i64> {
    let mut path: Vec<(Node, i64, ArcKind)> = Vec::new();
    let mut visited: Vec<Node> = vec![Node::Source];
    let mut stack: Vec<Vec<(Node, i64, ArcKind)>> = Vec::new();
    let mut arcs = residual_arcs(caps, Node::Source);
    arcs.shuffle(rng);
    stack.push(arcs);
    loop {
        let top = stack.last_mut()?;
        match top.pop() {
            None => {
                stack.pop();
                path.pop();
                if stack.is_empty() {
                    return None;
                }
            }
            Some((v, c, kind)) => {
                if visited.contains(&v) {
                    continue;
                }
                visited.push(v);
                path.push((v, c, kind));
                if v == Node::Sink {
                    let bottleneck = path.iter().map(|p| p.1).min().unwrap();
                    let amount = rng.gen_range(1..=bottleneck);
                    for &(_, _, kind) in &path {
                        push_arc(caps, kind, amount);
                    }
                    return Some(amount);
                }
                let mut arcs = residual_arcs(caps, v);
                arcs.shuffle(rng);
                stack.push(arcs);
            }
        }
    }
}

/// Exit-flows and source-flows of the flow taking `initial` to `residual`.
pub fn encode(initial: &IshikawaCapacities, residual: &IshikawaCapacities) -> FlowStore {
    let l = initial.num_labels();
    let mut store = FlowStore::new(initial.num_vertices(), initial.edges().len(), l);
    for i in 0..initial.num_vertices() {
        store.add_source_flow(i, initial.column(i)[l - 1] - residual.column(i)[l - 1]);
    }
    for e in 0..initial.edges().len() {
        let delta = FlowDelta::between(initial.cross(e), residual.cross(e)).unwrap();
        store
            .exit_mut(DirectedEdge::new(e, Dir::Forward))
            .copy_from_slice(&delta.exit_ij());
        store
            .exit_mut(DirectedEdge::new(e, Dir::Backward))
            .copy_from_slice(&delta.exit_ji());
    }
    store
}

/// Pushes `δ` around the cross cycle `λ→μ, μ'→λ, λ'→μ', μ→λ'`, which keeps
/// every exit-flow. Skips the push if it would overdraw a capacity.
pub fn push_null_cycle<R: Rng>(rng: &mut R, caps: &mut IshikawaCapacities, e: usize) -> bool {
    let n = caps.num_labels() - 1;
    let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
    let (c, d) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
    if a == c || b == d {
        return false;
    }
    let pair = caps.cross(e);
    let room = pair
        .get(Dir::Forward, a, b)
        .min(pair.get(Dir::Forward, c, d));
    if room <= 0 {
        return false;
    }
    let delta = rng.gen_range(1..=room);
    let pair = caps.cross_mut(e);
    pair.push(Dir::Forward, a, b, delta);
    pair.push(Dir::Forward, c, d, delta);
    pair.push(Dir::Forward, a, d, -delta);
    pair.push(Dir::Forward, c, b, -delta);
    caps.cross(e).is_nonnegative()
}

/// Random nonnegative capacities on two columns joined by one edge.
pub fn random_pair_caps<R: Rng>(rng: &mut R, l: usize) -> IshikawaCapacities {
    let mut caps = IshikawaCapacities::zeros(2, l, vec![(0, 1)]);
    for i in 0..2 {
        for c in caps.column_mut(i) {
            *c = rng.gen_range(0..8);
        }
    }
    let mut pair = PairCaps::zeros(l);
    for lambda in 1..l {
        for mu in 1..l {
            for dir in [Dir::Forward, Dir::Backward] {
                if rng.gen_bool(0.4) {
                    pair.set(dir, lambda, mu, rng.gen_range(0..6));
                }
            }
        }
    }
    caps.cross_mut(0).copy_from(&pair);
    caps
}
