//! Multi-label view of the energy and the message-passing dictionary for
//! flows: reparametrizations, flow-loop messages and exit-flows.

use crate::energy::{Dir, DirectedEdge, Labeling};
use crate::error::{Error, Result};

/// Explicit unary and pairwise tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiLabelParams {
    num_labels: usize,
    edges: Vec<(usize, usize)>,
    unary: Vec<i64>,
    pairwise: Vec<Vec<i64>>,
}

impl MultiLabelParams {
    /// `unary` is row-major `V × ℓ`; each pairwise table is row-major `ℓ × ℓ`
    /// indexed by the labels of the first and second endpoint.
    pub fn new(num_labels: usize, edges: Vec<(usize, usize)>, unary: Vec<i64>, pairwise: Vec<Vec<i64>>) -> Self {
        assert_eq!(unary.len() % num_labels, 0);
        assert_eq!(edges.len(), pairwise.len());
        assert!(pairwise.iter().all(|t| t.len() == num_labels * num_labels));
        MultiLabelParams {
            num_labels,
            edges,
            unary,
            pairwise,
        }
    }

    pub fn from_model(model: &crate::energy::EnergyModel) -> Self {
        let l = model.num_labels();
        let unary = (0..model.num_vertices()).flat_map(|i| model.unary(i).to_vec()).collect();
        let pairwise = (0..model.edges().len())
            .map(|e| {
                (0..l * l)
                    .map(|k| model.pairwise_value(e, k / l, k % l))
                    .collect()
            })
            .collect();
        MultiLabelParams::new(l, model.edges().to_vec(), unary, pairwise)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_vertices(&self) -> usize {
        self.unary.len() / self.num_labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn unary(&self, i: usize) -> &[i64] {
        &self.unary[i * self.num_labels..(i + 1) * self.num_labels]
    }

    pub fn unary_mut(&mut self, i: usize) -> &mut [i64] {
        let l = self.num_labels;
        &mut self.unary[i * l..(i + 1) * l]
    }

    pub fn pairwise(&self, e: usize, lambda: usize, mu: usize) -> i64 {
        self.pairwise[e][lambda * self.num_labels + mu]
    }

    pub fn pairwise_table(&self, e: usize) -> &[i64] {
        &self.pairwise[e]
    }

    pub fn energy(&self, x: &Labeling) -> i64 {
        let unary: i64 = (0..self.num_vertices()).map(|i| self.unary(i)[x[i]]).sum();
        let pair: i64 = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &(i, j))| self.pairwise(e, x[i], x[j]))
            .sum();
        unary + pair
    }
}

/// One message vector `m_{ij:λ}`, `λ ∈ 0..ℓ`, per directed edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageField {
    num_labels: usize,
    values: Vec<i64>,
}

impl MessageField {
    pub fn zeros(num_edges: usize, num_labels: usize) -> Self {
        MessageField {
            num_labels,
            values: vec![0; 2 * num_edges * num_labels],
        }
    }

    fn offset(&self, de: DirectedEdge) -> usize {
        let d = match de.dir {
            Dir::Forward => 0,
            Dir::Backward => 1,
        };
        (2 * de.edge + d) * self.num_labels
    }

    pub fn get(&self, de: DirectedEdge) -> &[i64] {
        let o = self.offset(de);
        &self.values[o..o + self.num_labels]
    }

    pub fn get_mut(&mut self, de: DirectedEdge) -> &mut [i64] {
        let o = self.offset(de);
        let l = self.num_labels;
        &mut self.values[o..o + l]
    }
}

/// `θ_c = Σ_i min_λ θ_{i:λ}`.
pub fn constant_term(theta: &MultiLabelParams) -> i64 {
    (0..theta.num_vertices())
        .map(|i| theta.unary(i).iter().copied().min().unwrap_or(0))
        .sum()
}

/// `θ'_{ij:λμ} = θ_{ij:λμ} − m_{ij:λ} − m_{ji:μ}` and
/// `θ'_{i:λ} = θ_{i:λ} + Σ_j m_{ij:λ}`.
pub fn reparametrize(theta: &MultiLabelParams, messages: &MessageField) -> MultiLabelParams {
    let l = theta.num_labels;
    let mut out = theta.clone();
    for (e, &(i, j)) in theta.edges.iter().enumerate() {
        let m_ij = messages.get(DirectedEdge::new(e, Dir::Forward));
        let m_ji = messages.get(DirectedEdge::new(e, Dir::Backward));
        for lambda in 0..l {
            for mu in 0..l {
                out.pairwise[e][lambda * l + mu] -= m_ij[lambda] + m_ji[mu];
            }
        }
        for (u, m) in out.unary_mut(i).iter_mut().zip(m_ij) {
            *u += m;
        }
        for (u, m) in out.unary_mut(j).iter_mut().zip(m_ji) {
            *u += m;
        }
    }
    out
}

/// Messages equivalent to the flow-loop `m(λ, μ, α)` on `(i, j)`:
/// `m_{ij:λ'} = −α` for `λ' ≥ λ` and `m_{ji:μ'} = α` for `μ' ≥ μ`.
pub fn flow_loop_messages(lambda: usize, mu: usize, alpha: i64, num_labels: usize) -> (Vec<i64>, Vec<i64>) {
    let m_ij = (0..num_labels).map(|k| if k >= lambda { -alpha } else { 0 }).collect();
    let m_ji = (0..num_labels).map(|k| if k >= mu { alpha } else { 0 }).collect();
    (m_ij, m_ji)
}

/// `Σ_{ij:λ} = m_{ij:λ−1} − m_{ij:λ}` for `λ ∈ 1..ℓ`.
pub fn sigma_from_messages(m: &[i64]) -> Vec<i64> {
    m.windows(2).map(|w| w[0] - w[1]).collect()
}

/// Inverse of [`sigma_from_messages`] in the gauge `m_{ij:0} = 0`.
pub fn messages_from_sigma(sigma: &[i64]) -> Vec<i64> {
    let mut m = Vec::with_capacity(sigma.len() + 1);
    m.push(0);
    for s in sigma {
        let last = *m.last().unwrap();
        m.push(last - s);
    }
    m
}

/// Exhaustive check that `a` and `b` assign every labeling the same energy.
pub fn check_equivalence(a: &MultiLabelParams, b: &MultiLabelParams, cap: u128) -> Result<bool> {
    if a.num_labels != b.num_labels || a.num_vertices() != b.num_vertices() || a.edges != b.edges {
        return Err(Error::InvalidArgument("parameters describe different graphs".into()));
    }
    let n = a.num_vertices();
    let l = a.num_labels;
    let configurations = (l as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if configurations > cap {
        return Err(Error::Capacity { configurations, cap });
    }
    let mut x = Labeling::zeros(n);
    loop {
        if a.energy(&x) != b.energy(&x) {
            return Ok(false);
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(true);
            }
            x.0[k] += 1;
            if x.0[k] < l {
                break;
            }
            x.0[k] = 0;
            k += 1;
        }
    }
}
