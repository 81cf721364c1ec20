//! Flow encoding by exit-flows and source-flows.
//!
//! Instead of one value per cross edge, the store keeps for each directed
//! MRF edge `(i, j)` and level `λ` the exit-flow `Σ_{ij:λ}`: the net flow
//! leaving `U_{i:λ}` towards column `j`. Together with the per-column
//! source-flow this determines every column flow exactly, and the cross
//! residuals up to a null flow.

use std::collections::VecDeque;

use crate::energy::{Adjacency, Dir, DirectedEdge};
use crate::error::{Error, Result};
use crate::ishikawa::{InitialCapacities, IshikawaCapacities, PairCaps};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowStore {
    num_labels: usize,
    source_flow: Vec<i64>,
    exit: Vec<i64>,
    total_flow: i64,
}

impl FlowStore {
    pub fn new(num_vertices: usize, num_edges: usize, num_labels: usize) -> Self {
        FlowStore {
            num_labels,
            source_flow: vec![0; num_vertices],
            exit: vec![0; 2 * num_edges * (num_labels - 1)],
            total_flow: 0,
        }
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_vertices(&self) -> usize {
        self.source_flow.len()
    }

    pub fn num_edges(&self) -> usize {
        self.exit.len() / (2 * (self.num_labels - 1))
    }

    #[inline]
    fn offset(&self, de: DirectedEdge) -> usize {
        let d = match de.dir {
            Dir::Forward => 0,
            Dir::Backward => 1,
        };
        (2 * de.edge + d) * (self.num_labels - 1)
    }

    /// `Σ_{ij:λ}` for `λ ∈ 1..ℓ`, stored at index `λ − 1`.
    pub fn exit(&self, de: DirectedEdge) -> &[i64] {
        let o = self.offset(de);
        &self.exit[o..o + self.num_labels - 1]
    }

    pub fn exit_mut(&mut self, de: DirectedEdge) -> &mut [i64] {
        let o = self.offset(de);
        let n = self.num_labels - 1;
        &mut self.exit[o..o + n]
    }

    pub fn source_flow(&self, i: usize) -> i64 {
        self.source_flow[i]
    }

    pub fn add_source_flow(&mut self, i: usize, amount: i64) {
        self.source_flow[i] += amount;
    }

    pub fn total_flow(&self) -> i64 {
        self.total_flow
    }

    pub fn add_total_flow(&mut self, amount: i64) {
        self.total_flow += amount;
    }

    /// Books `amount` units along `U_{i:λ} → U_{j:μ}`.
    pub fn record_cross_flow(&mut self, de: DirectedEdge, lambda: usize, mu: usize, amount: i64) -> Result<()> {
        let n = self.num_labels - 1;
        if lambda == 0 || lambda > n || mu == 0 || mu > n {
            return Err(Error::InvalidArgument(format!(
                "cross level ({lambda},{mu}) outside 1..={n}"
            )));
        }
        if de.edge >= self.num_edges() {
            return Err(Error::InvalidArgument(format!("edge {} out of range", de.edge)));
        }
        self.exit_mut(de)[lambda - 1] += amount;
        self.exit_mut(de.reverse())[mu - 1] -= amount;
        Ok(())
    }

    /// Column flows `ψ_{i:λ}`, `λ ∈ 0..ℓ`, by the top-down recursion
    /// `ψ_{i:λ−1} = ψ_{i:λ} − Σ_j Σ_{ij:λ}`.
    pub fn column_flows(&self, adj: &Adjacency, i: usize, out: &mut [i64]) {
        let l = self.num_labels;
        out[l - 1] = self.source_flow[i];
        for lambda in (1..l).rev() {
            let leaving: i64 = adj
                .neighbors(i)
                .iter()
                .map(|inc| self.exit(inc.out)[lambda - 1])
                .sum();
            out[lambda - 1] = out[lambda] - leaving;
        }
    }

    /// Persistent values: one source-flow per vertex, `2(ℓ−1)` exit-flows
    /// per undirected edge and the total.
    pub fn stored_values(&self) -> usize {
        self.source_flow.len() + self.exit.len() + 1
    }
}

/// Net cross flow `ψ_{ij:λμ}` on one undirected edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowDelta {
    levels: usize,
    net: Vec<i64>,
}

impl FlowDelta {
    /// Flow that turns `initial` into `residual`. Fails if the difference
    /// is not anti-symmetric, i.e. not a flow.
    pub fn between(initial: &PairCaps, residual: &PairCaps) -> Result<Self> {
        let n = initial.levels();
        let mut net = vec![0; n * n];
        for lambda in 1..=n {
            for mu in 1..=n {
                let f = initial.get(Dir::Forward, lambda, mu) - residual.get(Dir::Forward, lambda, mu);
                let g = initial.get(Dir::Backward, mu, lambda) - residual.get(Dir::Backward, mu, lambda);
                if f != -g {
                    return Err(Error::Internal(format!(
                        "cross difference at ({lambda},{mu}) is not anti-symmetric: {f} vs {g}"
                    )));
                }
                net[(lambda - 1) * n + mu - 1] = f;
            }
        }
        Ok(FlowDelta { levels: n, net })
    }

    /// `ψ_{ij:λμ}`.
    pub fn ij(&self, lambda: usize, mu: usize) -> i64 {
        self.net[(lambda - 1) * self.levels + mu - 1]
    }

    /// `ψ_{ji:μλ} = −ψ_{ij:λμ}`.
    pub fn ji(&self, mu: usize, lambda: usize) -> i64 {
        -self.ij(lambda, mu)
    }

    pub fn exit_ij(&self) -> Vec<i64> {
        (1..=self.levels)
            .map(|lambda| (1..=self.levels).map(|mu| self.ij(lambda, mu)).sum())
            .collect()
    }

    pub fn exit_ji(&self) -> Vec<i64> {
        (1..=self.levels)
            .map(|mu| (1..=self.levels).map(|lambda| self.ji(mu, lambda)).sum())
            .collect()
    }
}

/// Scratch space for per-edge reconstruction, reused across calls.
#[derive(Debug, Default, Clone)]
pub struct Reconstructor {
    remaining: Vec<i64>,
    pred: Vec<Option<usize>>,
    queue: VecDeque<usize>,
    /// Calls that needed augmenting paths beyond the greedy pairing.
    pub fallbacks: u64,
    pub calls: u64,
}

impl Reconstructor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Values held while reconstructing one edge with `ℓ` labels: the
    /// output pair, the supplies and the search arrays.
    pub fn transient_values(num_labels: usize) -> usize {
        let n = num_labels - 1;
        2 * n * n + 2 * n + 2 * (2 * n)
    }

    /// Writes into `out` residual cross capacities of edge `edge` that carry
    /// a net flow with row sums `sigma_ij` and `sigma_ji`.
    pub fn reconstruct(
        &mut self,
        edge: usize,
        initial: &PairCaps,
        sigma_ij: &[i64],
        sigma_ji: &[i64],
        out: &mut PairCaps,
    ) -> Result<()> {
        let n = initial.levels();
        if sigma_ij.len() != n || sigma_ji.len() != n {
            return Err(Error::InvalidArgument(format!(
                "exit-flow vectors must have {n} entries"
            )));
        }
        self.calls += 1;
        out.copy_from(initial);
        // nodes 0..n are U_{i:1..}, n..2n are U_{j:1..}
        self.remaining.clear();
        self.remaining.extend_from_slice(sigma_ij);
        self.remaining.extend_from_slice(sigma_ji);
        if self.remaining.iter().sum::<i64>() != 0 {
            return Err(Error::CorruptedStore {
                edge,
                reason: "supply and demand differ".into(),
            });
        }
        let rem = &mut self.remaining;

        for lambda in (1..=n).rev() {
            for mu in (1..=n).rev() {
                if rem[lambda - 1] <= 0 {
                    break;
                }
                if rem[n + mu - 1] >= 0 {
                    continue;
                }
                let amt = rem[lambda - 1]
                    .min(-rem[n + mu - 1])
                    .min(out.get(Dir::Forward, lambda, mu));
                if amt > 0 {
                    out.push(Dir::Forward, lambda, mu, amt);
                    rem[lambda - 1] -= amt;
                    rem[n + mu - 1] += amt;
                }
            }
        }
        for mu in (1..=n).rev() {
            for lambda in (1..=n).rev() {
                if rem[n + mu - 1] <= 0 {
                    break;
                }
                if rem[lambda - 1] >= 0 {
                    continue;
                }
                let amt = rem[n + mu - 1]
                    .min(-rem[lambda - 1])
                    .min(out.get(Dir::Backward, mu, lambda));
                if amt > 0 {
                    out.push(Dir::Backward, mu, lambda, amt);
                    rem[n + mu - 1] -= amt;
                    rem[lambda - 1] += amt;
                }
            }
        }
        if rem.iter().all(|&r| r <= 0) {
            return Ok(());
        }

        self.fallbacks += 1;
        loop {
            if self.remaining.iter().all(|&r| r <= 0) {
                return Ok(());
            }
            let Some((start, end, amt)) = self.find_path(n, out) else {
                return Err(Error::CorruptedStore {
                    edge,
                    reason: "exit-flows cannot be routed through the initial capacities".into(),
                });
            };
            let mut v = end;
            while v != start {
                let u = self.pred[v].expect("path node");
                push_bipartite(out, n, u, v, amt);
                v = u;
            }
            self.remaining[start] -= amt;
            self.remaining[end] += amt;
        }
    }

    /// Breadth-first search from every supply node to the nearest demand
    /// node. Returns (start, end, bottleneck).
    fn find_path(&mut self, n: usize, caps: &PairCaps) -> Option<(usize, usize, i64)> {
        self.pred.clear();
        self.pred.resize(2 * n, None);
        self.queue.clear();
        let mut seen = vec![false; 2 * n];
        for v in 0..2 * n {
            if self.remaining[v] > 0 {
                seen[v] = true;
                self.queue.push_back(v);
            }
        }
        while let Some(u) = self.queue.pop_front() {
            if self.remaining[u] < 0 {
                let mut amt = -self.remaining[u];
                let mut v = u;
                while let Some(p) = self.pred[v] {
                    amt = amt.min(bipartite_cap(caps, n, p, v));
                    v = p;
                }
                amt = amt.min(self.remaining[v]);
                return Some((v, u, amt));
            }
            let targets = if u < n { n..2 * n } else { 0..n };
            for v in targets {
                if !seen[v] && bipartite_cap(caps, n, u, v) > 0 {
                    seen[v] = true;
                    self.pred[v] = Some(u);
                    self.queue.push_back(v);
                }
            }
        }
        None
    }
}

fn bipartite_cap(caps: &PairCaps, n: usize, u: usize, v: usize) -> i64 {
    if u < n {
        caps.get(Dir::Forward, u + 1, v - n + 1)
    } else {
        caps.get(Dir::Backward, u - n + 1, v + 1)
    }
}

fn push_bipartite(caps: &mut PairCaps, n: usize, u: usize, v: usize, amount: i64) {
    if u < n {
        caps.push(Dir::Forward, u + 1, v - n + 1, amount);
    } else {
        caps.push(Dir::Backward, u - n + 1, v + 1, amount);
    }
}

/// Residual cross capacities of one edge compatible with the exit-flows.
pub fn reconstruct_edge(initial: &PairCaps, sigma_ij: &[i64], sigma_ji: &[i64]) -> Result<PairCaps> {
    let mut out = initial.clone();
    Reconstructor::new().reconstruct(0, initial, sigma_ij, sigma_ji, &mut out)?;
    Ok(out)
}

/// Materializes a full residual graph from the initial capacities and the
/// encoded flow.
pub fn full_residual_from_store<C: InitialCapacities + ?Sized>(
    initial: &C,
    store: &FlowStore,
) -> Result<IshikawaCapacities> {
    full_residual_counted(initial, store, &mut Reconstructor::new())
}

pub(crate) fn full_residual_counted<C: InitialCapacities + ?Sized>(
    initial: &C,
    store: &FlowStore,
    rec: &mut Reconstructor,
) -> Result<IshikawaCapacities> {
    let l = initial.num_labels();
    let mut caps = IshikawaCapacities::from_source(initial);
    let adj = Adjacency::from_edges(initial.num_vertices(), initial.edges());
    let mut psi = vec![0; l];
    for i in 0..initial.num_vertices() {
        store.column_flows(&adj, i, &mut psi);
        for (lambda, (c, f)) in caps.column_mut(i).iter_mut().zip(&psi).enumerate() {
            *c -= f;
            if *c < 0 {
                return Err(Error::CorruptedStore {
                    edge: usize::MAX,
                    reason: format!("negative column residual at U_{{{i}:{lambda}}}"),
                });
            }
        }
    }
    let mut pair = PairCaps::zeros(l);
    for e in 0..initial.edges().len() {
        let fwd = DirectedEdge::new(e, Dir::Forward);
        rec.reconstruct(e, caps.cross(e), store.exit(fwd), store.exit(fwd.reverse()), &mut pair)?;
        caps.cross_mut(e).copy_from(&pair);
    }
    Ok(caps)
}
