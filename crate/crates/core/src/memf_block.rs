//! Block-graph memory-efficient max-flow.
//!
//! Each column is split into blocks: maximal runs of internal nodes joined
//! by positive downward capacities. A block reaches every level at or above
//! its lowest one, so a block arc only records the lowest block reachable in
//! the neighbouring column. Augmentation along a block path is a sequence of
//! flow-loops followed by a trivial column flush at the last column.

use std::collections::VecDeque;
use std::time::Instant;

use crate::energy::{Adjacency, Dir, DirectedEdge, EnergyModel, Labeling};
use crate::error::{Error, Result};
use crate::flowcodec::{full_residual_counted, FlowStore, Reconstructor};
use crate::ishikawa::{has_augmenting_path, InitialCapacities, IshikawaCapacities, LazyCapacities, PairCaps};
use crate::report::{Diagnostics, SolveOptions, SolveReport};

const NONE: u32 = u32::MAX;

/// Levels `lo..=hi` of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub lo: usize,
    pub hi: usize,
}

/// Splits a column into blocks, bottom-up. The column must contain a zero.
pub fn build_blocks(column: &[i64]) -> Result<Vec<Block>> {
    if column.iter().all(|&c| c > 0) {
        return Err(Error::Contract("column has a trivial augmenting path".into()));
    }
    let lo = block_starts(column);
    let n = column.len() - 1;
    Ok(lo
        .iter()
        .enumerate()
        .map(|(g, &start)| Block {
            lo: start,
            hi: lo.get(g + 1).map_or(n, |next| next - 1),
        })
        .collect())
}

/// Lowest level of every block.
fn block_starts(column: &[i64]) -> Vec<usize> {
    let n = column.len() - 1;
    let mut lo = vec![1];
    for lambda in 1..n {
        if column[lambda] == 0 {
            lo.push(lambda + 1);
        }
    }
    lo
}

#[inline]
fn block_of(lo: &[usize], level: usize) -> usize {
    lo.partition_point(|&l| l <= level) - 1
}

/// Target block in column `j` for every block of column `i` along `dir`:
/// the lowest block holding the head of a positive cross edge that leaves
/// at or above the block's lowest level.
fn block_targets(pair: &PairCaps, dir: Dir, lo_i: &[usize], lo_j: &[usize], out: &mut Vec<u32>) {
    let n = pair.levels();
    out.clear();
    out.resize(lo_i.len(), NONE);
    let mut best = NONE;
    let mut g = lo_i.len() - 1;
    for lambda in (1..=n).rev() {
        if let Some(mu) = (1..=n).find(|&mu| pair.get(dir, lambda, mu) > 0) {
            best = best.min(block_of(lo_j, mu) as u32);
        }
        if lambda == lo_i[g] {
            out[g] = best;
            g = g.saturating_sub(1);
        }
    }
}

/// Block arcs of `(i, j)` in orientation `dir`, `None` where absent.
pub fn build_block_edges(pair: &PairCaps, dir: Dir, blocks_i: &[Block], blocks_j: &[Block]) -> Vec<Option<usize>> {
    let lo_i: Vec<usize> = blocks_i.iter().map(|b| b.lo).collect();
    let lo_j: Vec<usize> = blocks_j.iter().map(|b| b.lo).collect();
    let mut out = Vec::new();
    block_targets(pair, dir, &lo_i, &lo_j, &mut out);
    out.into_iter().map(|t| (t != NONE).then_some(t as usize)).collect()
}

/// Subtracts each column's minimum and books it as source-to-terminal flow.
/// Returns the total amount.
pub fn flush_trivial(caps: &mut IshikawaCapacities, store: &mut FlowStore) -> i64 {
    (0..caps.num_vertices())
        .map(|i| flush_column(caps.column_mut(i), i, store))
        .sum()
}

fn flush_column(col: &mut [i64], i: usize, store: &mut FlowStore) -> i64 {
    let m = col.iter().copied().min().unwrap_or(0);
    if m > 0 {
        col.iter_mut().for_each(|c| *c -= m);
        store.add_source_flow(i, m);
        store.add_total_flow(m);
    }
    m.max(0)
}

/// Applies the flow-loop `m(λ, μ, α)` along `de = (i, j)`: down column `i`
/// to `λ`, across to `U_{j:μ}` and back up column `j`.
pub fn apply_flow_loop(
    caps: &mut IshikawaCapacities,
    de: DirectedEdge,
    lambda: usize,
    mu: usize,
    alpha: i64,
    store: &mut FlowStore,
) -> Result<()> {
    let (a, b) = caps.edges()[de.edge];
    let (i, j) = match de.dir {
        Dir::Forward => (a, b),
        Dir::Backward => (b, a),
    };
    let l = caps.num_labels();
    let available = caps.column(i)[lambda..l].iter().copied().min().unwrap_or(0);
    if alpha < 0 || alpha > available || alpha > caps.cross(de.edge).get(de.dir, lambda, mu) {
        return Err(Error::Contract(format!(
            "flow-loop ({lambda},{mu},{alpha}) is not permissible"
        )));
    }
    caps.column_mut(i)[lambda..].iter_mut().for_each(|c| *c -= alpha);
    caps.cross_mut(de.edge).push(de.dir, lambda, mu, alpha);
    caps.column_mut(j)[mu..].iter_mut().for_each(|c| *c += alpha);
    store.record_cross_flow(de, lambda, mu, alpha)?;
    store.add_source_flow(i, alpha);
    store.add_source_flow(j, -alpha);
    Ok(())
}

/// Parent of a block in the source tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeLink {
    Free,
    Source,
    Block { col: u32, idx: u32 },
    Orphan,
}

impl TreeLink {
    fn attached(self) -> bool {
        matches!(self, TreeLink::Source | TreeLink::Block { .. })
    }
}

/// Blocks from the source side to the terminal side; the first block is the
/// top block of its column, the last one is a bottom block with a terminal arc.
pub type BlockPath = Vec<(usize, usize)>;

pub struct BlockSolver<'a, C: InitialCapacities + ?Sized> {
    initial: &'a C,
    num_labels: usize,
    adj: Adjacency,
    /// `back[i][k]`: position of `i` among the neighbours of its `k`-th neighbour.
    back: Vec<Vec<usize>>,
    /// Positions of each edge's endpoints in each other's neighbour lists.
    edge_slots: Vec<(usize, usize)>,
    cols: Vec<i64>,
    store: FlowStore,
    lo: Vec<Vec<usize>>,
    link: Vec<Vec<TreeLink>>,
    arcs: Vec<Vec<Vec<u32>>>,
    active: VecDeque<(usize, usize)>,
    rec: Reconstructor,
    pair0: PairCaps,
    pair: PairCaps,
    augmentations: u64,
    stale_aborts: u64,
    column_cost: Vec<usize>,
    stored: usize,
    stored_peak: usize,
    queue_peak: usize,
    path_lengths: Vec<usize>,
}

impl<'a, C: InitialCapacities + ?Sized> BlockSolver<'a, C> {
    pub fn new(initial: &'a C) -> Result<Self> {
        let l = initial.num_labels();
        let v = initial.num_vertices();
        let edges = initial.edges();
        let adj = Adjacency::from_edges(v, edges);
        let back = (0..v)
            .map(|i| {
                adj.neighbors(i)
                    .iter()
                    .map(|inc| position(&adj, inc.neighbor, i))
                    .collect()
            })
            .collect();
        let edge_slots = edges
            .iter()
            .map(|&(a, b)| (position(&adj, a, b), position(&adj, b, a)))
            .collect();
        let mut cols = vec![0; v * l];
        for i in 0..v {
            initial.column_into(i, &mut cols[i * l..(i + 1) * l]);
        }
        if cols.iter().any(|&c| c < 0) {
            return Err(Error::InvalidArgument("negative initial capacity".into()));
        }
        let mut solver = BlockSolver {
            initial,
            num_labels: l,
            back,
            edge_slots,
            cols,
            store: FlowStore::new(v, edges.len(), l),
            lo: vec![Vec::new(); v],
            link: vec![Vec::new(); v],
            arcs: (0..v).map(|i| vec![Vec::new(); adj.neighbors(i).len()]).collect(),
            adj,
            active: VecDeque::new(),
            rec: Reconstructor::new(),
            pair0: PairCaps::zeros(l),
            pair: PairCaps::zeros(l),
            augmentations: 0,
            stale_aborts: 0,
            column_cost: vec![0; v],
            stored: 0,
            stored_peak: 0,
            queue_peak: 0,
            path_lengths: Vec::new(),
        };
        for i in 0..v {
            if solver.flush(i) > 0 {
                solver.augmentations += 1;
            }
            solver.lo[i] = block_starts(solver.column(i));
            solver.link[i] = vec![TreeLink::Free; solver.lo[i].len()];
        }
        for e in 0..edges.len() {
            solver.rebuild_arcs(e)?;
        }
        for i in 0..v {
            solver.attach_top(i);
            solver.update_cost(i);
        }
        solver.stored_peak = solver.stored;
        Ok(solver)
    }

    pub fn num_vertices(&self) -> usize {
        self.lo.len()
    }

    pub fn column(&self, i: usize) -> &[i64] {
        &self.cols[i * self.num_labels..(i + 1) * self.num_labels]
    }

    fn column_mut(&mut self, i: usize) -> &mut [i64] {
        let l = self.num_labels;
        &mut self.cols[i * l..(i + 1) * l]
    }

    pub fn store(&self) -> &FlowStore {
        &self.store
    }

    /// Lowest level of each block of column `i`.
    pub fn block_starts(&self, i: usize) -> &[usize] {
        &self.lo[i]
    }

    pub fn tree_link(&self, i: usize, g: usize) -> TreeLink {
        self.link[i][g]
    }

    /// Arc target from block `g` of column `i` towards its `k`-th neighbour.
    pub fn arc(&self, i: usize, k: usize, g: usize) -> Option<usize> {
        let t = self.arcs[i][k][g];
        (t != NONE).then_some(t as usize)
    }

    fn flush(&mut self, i: usize) -> i64 {
        let l = self.num_labels;
        let col = &mut self.cols[i * l..(i + 1) * l];
        flush_column(col, i, &mut self.store)
    }

    fn has_source_arc(&self, i: usize) -> bool {
        self.column(i)[self.num_labels - 1] > 0
    }

    fn attach_top(&mut self, i: usize) {
        let top = self.lo[i].len() - 1;
        if self.link[i][top] == TreeLink::Free && self.has_source_arc(i) {
            self.link[i][top] = TreeLink::Source;
            self.push_active(i, top, false);
        }
    }

    fn push_active(&mut self, i: usize, g: usize, front: bool) {
        if front {
            self.active.push_front((i, g));
        } else {
            self.active.push_back((i, g));
        }
        self.queue_peak = self.queue_peak.max(self.active.len());
    }

    /// Values held for column `i`: a lowest level and a tree link per block
    /// and one arc slot per block and neighbour.
    fn update_cost(&mut self, i: usize) {
        let nb = self.lo[i].len();
        let cost = 2 * nb + nb * self.arcs[i].len();
        self.stored = self.stored + cost - self.column_cost[i];
        self.column_cost[i] = cost;
    }

    fn persistent_values(&self) -> usize {
        self.cols.len() + self.store.stored_values() + self.stored
    }

    /// Residual cross capacities of edge `e` reconstructed into `self.pair`.
    fn reconstruct(&mut self, e: usize) -> Result<()> {
        self.initial.cross_into(e, &mut self.pair0);
        let fwd = DirectedEdge::new(e, Dir::Forward);
        self.rec.reconstruct(
            e,
            &self.pair0,
            self.store.exit(fwd),
            self.store.exit(fwd.reverse()),
            &mut self.pair,
        )
    }

    fn rebuild_arcs(&mut self, e: usize) -> Result<()> {
        self.reconstruct(e)?;
        let (a, b) = self.initial.edges()[e];
        let (ka, kb) = self.edge_slots[e];
        let mut out = std::mem::take(&mut self.arcs[a][ka]);
        block_targets(&self.pair, Dir::Forward, &self.lo[a], &self.lo[b], &mut out);
        self.arcs[a][ka] = out;
        let mut out = std::mem::take(&mut self.arcs[b][kb]);
        block_targets(&self.pair, Dir::Backward, &self.lo[b], &self.lo[a], &mut out);
        self.arcs[b][kb] = out;
        Ok(())
    }

    fn in_tree(&self, mut i: usize, mut g: usize) -> bool {
        // links form a forest, so the walk is bounded by the number of blocks
        loop {
            match self.link[i][g] {
                TreeLink::Source => return true,
                TreeLink::Block { col, idx } => {
                    i = col as usize;
                    g = idx as usize;
                }
                TreeLink::Free | TreeLink::Orphan => return false,
            }
        }
    }

    /// Grows the source tree breadth-first until a block with a terminal
    /// arc is reached.
    pub fn find_augmenting_path(&mut self) -> Option<BlockPath> {
        while let Some((i, g)) = self.active.pop_front() {
            if g >= self.lo[i].len() || !self.link[i][g].attached() {
                continue;
            }
            if g == 0 && self.column(i)[0] > 0 {
                self.push_active(i, g, true);
                let mut path = vec![(i, g)];
                let (mut c, mut b) = (i, g);
                while let TreeLink::Block { col, idx } = self.link[c][b] {
                    c = col as usize;
                    b = idx as usize;
                    path.push((c, b));
                }
                path.reverse();
                return Some(path);
            }
            for k in 0..self.arcs[i].len() {
                let t = self.arcs[i][k][g];
                if t == NONE {
                    continue;
                }
                let j = self.adj.neighbors(i)[k].neighbor;
                if self.link[j][t as usize] == TreeLink::Free {
                    self.link[j][t as usize] = TreeLink::Block {
                        col: i as u32,
                        idx: g as u32,
                    };
                    self.push_active(j, t as usize, false);
                }
            }
        }
        None
    }

    /// Pushes flow along `path` as flow-loops and flushes the last column.
    /// Returns the flow gained, or `None` if the path went stale midway.
    /// Columns touched are appended to `dirty`.
    pub fn augment_block_path(&mut self, path: &[(usize, usize)], dirty: &mut Vec<usize>) -> Result<Option<i64>> {
        let n = self.num_labels - 1;
        dirty.extend(path.iter().map(|&(i, _)| i));
        for w in path.windows(2) {
            let ((i, g), (j, d)) = (w[0], w[1]);
            let de = self
                .adj
                .find(i, j)
                .ok_or_else(|| Error::Internal(format!("no edge between {i} and {j}")))?;
            self.reconstruct(de.edge)?;
            let (lam0, mu0) = (self.lo[i][g], self.lo[j][d]);
            let mut delivered = 0;
            for mu in mu0..=n {
                for lambda in lam0..=n {
                    let cap = self.pair.get(de.dir, lambda, mu);
                    if cap == 0 {
                        continue;
                    }
                    let avail = self.column(i)[lambda..].iter().copied().min().unwrap_or(0);
                    let alpha = avail.min(cap);
                    if alpha <= 0 {
                        continue;
                    }
                    self.column_mut(i)[lambda..].iter_mut().for_each(|c| *c -= alpha);
                    self.pair.push(de.dir, lambda, mu, alpha);
                    self.column_mut(j)[mu..].iter_mut().for_each(|c| *c += alpha);
                    self.store.record_cross_flow(de, lambda, mu, alpha)?;
                    self.store.add_source_flow(i, alpha);
                    self.store.add_source_flow(j, -alpha);
                    delivered += alpha;
                }
            }
            if delivered == 0 {
                return Ok(None);
            }
        }
        let &(k, _) = path.last().expect("non-empty path");
        if self.column(k).iter().any(|&c| c <= 0) {
            return Ok(None);
        }
        Ok(Some(self.flush(k)))
    }

    /// Restores blocks, arcs and the source tree after the columns in
    /// `dirty` changed.
    pub fn repair(&mut self, dirty: &mut Vec<usize>) -> Result<()> {
        dirty.sort_unstable();
        dirty.dedup();
        if dirty.is_empty() {
            return Ok(());
        }
        let mut orphans = VecDeque::new();
        let mut remap: Vec<(usize, Vec<Option<usize>>)> = Vec::with_capacity(dirty.len());
        for &i in dirty.iter() {
            if self.flush(i) > 0 {
                self.augmentations += 1;
            }
            let new_lo = block_starts(self.column(i));
            let old_lo = std::mem::take(&mut self.lo[i]);
            let old_link = std::mem::take(&mut self.link[i]);
            let mut new_link = vec![TreeLink::Free; new_lo.len()];
            let mut map = vec![None; old_lo.len()];
            for (g, lo) in old_lo.iter().enumerate() {
                if let Ok(h) = new_lo.binary_search(lo) {
                    map[g] = Some(h);
                    new_link[h] = old_link[g];
                }
            }
            self.lo[i] = new_lo;
            self.link[i] = new_link;
            remap.push((i, map));
        }

        let mut region: Vec<usize> = dirty.clone();
        for &i in dirty.iter() {
            region.extend(self.adj.neighbors(i).iter().map(|inc| inc.neighbor));
        }
        region.sort_unstable();
        region.dedup();

        for &c in &region {
            for g in 0..self.link[c].len() {
                if let TreeLink::Block { col, idx } = self.link[c][g] {
                    if let Ok(r) = remap.binary_search_by_key(&(col as usize), |(i, _)| *i) {
                        self.link[c][g] = match remap[r].1[idx as usize] {
                            Some(h) => TreeLink::Block { col, idx: h as u32 },
                            None => TreeLink::Orphan,
                        };
                    }
                }
            }
        }

        let mut edges: Vec<usize> = dirty
            .iter()
            .flat_map(|&i| self.adj.neighbors(i).iter().map(|inc| inc.out.edge))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        for e in edges {
            self.rebuild_arcs(e)?;
        }

        for &c in &region {
            let top = self.lo[c].len() - 1;
            for g in 0..self.link[c].len() {
                let valid = match self.link[c][g] {
                    TreeLink::Source => g == top && self.has_source_arc(c),
                    TreeLink::Block { col, idx } => {
                        let p = col as usize;
                        let k = position(&self.adj, p, c);
                        self.arcs[p][k][idx as usize] == g as u32
                    }
                    TreeLink::Orphan => false,
                    TreeLink::Free => continue,
                };
                if !valid {
                    self.link[c][g] = TreeLink::Orphan;
                    orphans.push_back((c, g));
                }
            }
        }

        while let Some((i, g)) = orphans.pop_front() {
            if self.link[i][g] != TreeLink::Orphan {
                continue;
            }
            if let Some(parent) = self.find_parent(i, g) {
                self.link[i][g] = parent;
                self.push_active(i, g, false);
                continue;
            }
            self.link[i][g] = TreeLink::Free;
            for (k, inc) in self.adj.neighbors(i).iter().enumerate() {
                let c = inc.neighbor;
                let kb = self.back[i][k];
                for b in 0..self.lo[c].len() {
                    let child = self.link[c][b] == TreeLink::Block {
                        col: i as u32,
                        idx: g as u32,
                    };
                    if child {
                        self.link[c][b] = TreeLink::Orphan;
                        orphans.push_back((c, b));
                    } else if self.arcs[c][kb][b] == g as u32 && self.link[c][b].attached() {
                        self.active.push_back((c, b));
                    }
                }
            }
            self.queue_peak = self.queue_peak.max(self.active.len());
        }

        for &c in &region {
            for g in 0..self.link[c].len() {
                if self.link[c][g].attached() {
                    self.push_active(c, g, false);
                }
            }
            self.attach_top(c);
            self.update_cost(c);
        }
        self.stored_peak = self.stored_peak.max(self.stored);
        Ok(())
    }

    fn find_parent(&self, i: usize, g: usize) -> Option<TreeLink> {
        if g == self.lo[i].len() - 1 && self.has_source_arc(i) {
            return Some(TreeLink::Source);
        }
        for (k, inc) in self.adj.neighbors(i).iter().enumerate() {
            let c = inc.neighbor;
            let kb = self.back[i][k];
            for b in 0..self.lo[c].len() {
                if self.arcs[c][kb][b] == g as u32 && self.in_tree(c, b) {
                    return Some(TreeLink::Block {
                        col: c as u32,
                        idx: b as u32,
                    });
                }
            }
        }
        None
    }

    /// Checks block partitions, arc monotonicity and tree links.
    pub fn check_structure(&self) -> Result<()> {
        for i in 0..self.num_vertices() {
            let col = self.column(i);
            if col.iter().all(|&c| c > 0) {
                return Err(Error::Internal(format!("column {i} has a trivial path")));
            }
            if self.lo[i] != block_starts(col) {
                return Err(Error::Internal(format!("stale blocks in column {i}")));
            }
            for (k, targets) in self.arcs[i].iter().enumerate() {
                if targets.len() != self.lo[i].len() {
                    return Err(Error::Internal(format!("arc table of column {i} has wrong size")));
                }
                if targets.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::Internal(format!("non-monotone arcs from column {i} slot {k}")));
                }
            }
            for (g, link) in self.link[i].iter().enumerate() {
                match *link {
                    TreeLink::Orphan => return Err(Error::Internal(format!("orphan ({i},{g}) after repair"))),
                    TreeLink::Source if g + 1 != self.lo[i].len() || !self.has_source_arc(i) => {
                        return Err(Error::Internal(format!("bad source link at ({i},{g})")));
                    }
                    TreeLink::Block { col, idx } => {
                        let p = col as usize;
                        if self.arcs[p][position(&self.adj, p, i)][idx as usize] != g as u32 || !self.in_tree(i, g) {
                            return Err(Error::Internal(format!("bad parent link at ({i},{g})")));
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Labeling from blocks reachable from the source in the block graph.
    pub fn labeling(&self) -> Result<Labeling> {
        let v = self.num_vertices();
        let mut seen: Vec<Vec<bool>> = self.lo.iter().map(|lo| vec![false; lo.len()]).collect();
        let mut queue = VecDeque::new();
        for i in 0..v {
            if self.has_source_arc(i) {
                let top = self.lo[i].len() - 1;
                seen[i][top] = true;
                queue.push_back((i, top));
            }
        }
        while let Some((i, g)) = queue.pop_front() {
            if g == 0 && self.column(i)[0] > 0 {
                return Err(Error::Internal("terminal reachable in the block graph".into()));
            }
            for (k, inc) in self.adj.neighbors(i).iter().enumerate() {
                let t = self.arcs[i][k][g];
                if t != NONE && !seen[inc.neighbor][t as usize] {
                    seen[inc.neighbor][t as usize] = true;
                    queue.push_back((inc.neighbor, t as usize));
                }
            }
        }
        let x = (0..v)
            .map(|i| match seen[i].iter().position(|&s| s) {
                Some(g) => self.lo[i][g] - 1,
                None => self.num_labels - 1,
            })
            .collect();
        Ok(Labeling(x))
    }

    pub fn run(mut self, options: SolveOptions) -> Result<SolveReport> {
        let start = Instant::now();
        let v = self.num_vertices();
        let mut diag = options.diagnostics.then(Diagnostics::default);
        let mut check_rec = Reconstructor::new();
        let stall_cap = 10 * v * self.num_labels + 100;
        let mut stalled = 0usize;
        let mut iteration = 0usize;
        let mut dirty = Vec::new();
        loop {
            let path = self.find_augmenting_path();
            if let Some(d) = diag.as_mut() {
                self.check_structure()?;
                if iteration.is_multiple_of(options.sample_every.max(1)) || path.is_none() {
                    let full = full_residual_counted(self.initial, &self.store, &mut check_rec)?;
                    d.existence_checks += 1;
                    if has_augmenting_path(&full) != path.is_some() {
                        d.existence_mismatches += 1;
                    }
                    d.bookkeeping_mismatches +=
                        (0..v).filter(|&i| full.column(i) != self.column(i)).count() as u64;
                }
            }
            let Some(path) = path else { break };
            iteration += 1;
            self.path_lengths.push(path.len() + 1);
            dirty.clear();
            match self.augment_block_path(&path, &mut dirty)? {
                Some(flow) if flow > 0 => {
                    self.augmentations += 1;
                    stalled = 0;
                }
                _ => {
                    self.stale_aborts += 1;
                    stalled += 1;
                    if stalled > stall_cap {
                        return Err(Error::Internal("block augmentation makes no progress".into()));
                    }
                }
            }
            self.repair(&mut dirty)?;
        }

        let labeling = self.labeling()?;
        let l = self.num_labels;
        let mut report = SolveReport::new("block");
        report.flow_total = self.store.total_flow();
        report.constant = self.initial.constant();
        report.energy = report.flow_total + report.constant;
        report.labeling = Some(labeling);
        report.augmentations = self.augmentations;
        report.reconstructions = self.rec.calls;
        report.reconstruction_fallbacks = self.rec.fallbacks;
        report.stale_aborts = self.stale_aborts;
        report.stored_values_peak = (self.cols.len() + self.store.stored_values() + self.stored_peak) as u64;
        report.transient_values_peak =
            (self.queue_peak + Reconstructor::transient_values(l) + 2 * (l - 1) * (l - 1)) as u64;
        if let Some(d) = diag.as_mut() {
            d.path_lengths = std::mem::take(&mut self.path_lengths);
        }
        report.diagnostics = diag;
        report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        debug_assert!(report.stored_values_peak as usize >= self.persistent_values());
        Ok(report)
    }
}

fn position(adj: &Adjacency, i: usize, j: usize) -> usize {
    adj.neighbors(i)
        .binary_search_by_key(&j, |inc| inc.neighbor)
        .expect("adjacent vertices")
}

pub fn solve_block(model: &EnergyModel, options: SolveOptions) -> Result<SolveReport> {
    let initial = LazyCapacities::new(model)?;
    BlockSolver::new(&initial)?.run(options)
}

pub fn solve_block_with<C: InitialCapacities + ?Sized>(initial: &C, options: SolveOptions) -> Result<SolveReport> {
    BlockSolver::new(initial)?.run(options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{brute_force_minimize, generate_grid_instance, PairwiseSpec, Regularizer, BRUTE_FORCE_CAP};

    fn los(blocks: &[Block]) -> Vec<(usize, usize)> {
        blocks.iter().map(|b| (b.lo, b.hi)).collect()
    }

    #[test]
    fn block_examples() {
        assert_eq!(los(&build_blocks(&[2, 0, 3, 1, 0]).unwrap()), vec![(1, 1), (2, 4)]);
        assert_eq!(
            los(&build_blocks(&[1, 0, 0, 0, 2]).unwrap()),
            vec![(1, 1), (2, 2), (3, 3), (4, 4)]
        );
        assert_eq!(los(&build_blocks(&[0, 5]).unwrap()), vec![(1, 1)]);
        assert!(matches!(build_blocks(&[1, 2, 3]), Err(Error::Contract(_))));
    }

    #[test]
    fn block_edge_examples() {
        let bi = build_blocks(&[2, 0, 3, 1, 0]).unwrap();
        let bj = build_blocks(&[0, 4, 0, 1, 0]).unwrap();
        assert_eq!(los(&bj), vec![(1, 2), (3, 4)]);
        let pair = PairCaps::zeros(5);
        assert_eq!(build_block_edges(&pair, Dir::Forward, &bi, &bj), vec![None, None]);

        let mut pair = PairCaps::zeros(5);
        pair.set(Dir::Forward, 2, 3, 1);
        pair.set(Dir::Forward, 4, 1, 1);
        assert_eq!(build_block_edges(&pair, Dir::Forward, &bi, &bj), vec![Some(0), Some(0)]);

        let mut pair = PairCaps::zeros(5);
        pair.set(Dir::Forward, 4, 4, 1);
        assert_eq!(build_block_edges(&pair, Dir::Forward, &bi, &bj), vec![Some(1), Some(1)]);
    }

    #[test]
    fn flush_examples() {
        let mut caps = IshikawaCapacities::zeros(2, 3, vec![]);
        caps.column_mut(0).copy_from_slice(&[3, 1, 5]);
        caps.column_mut(1).copy_from_slice(&[3, 0, 5]);
        let mut store = FlowStore::new(2, 0, 3);
        assert_eq!(flush_trivial(&mut caps, &mut store), 1);
        assert_eq!(caps.column(0), &[2, 0, 4]);
        assert_eq!(caps.column(1), &[3, 0, 5]);
        assert_eq!(store.total_flow(), 1);

        let mut caps = IshikawaCapacities::zeros(2, 3, vec![]);
        caps.column_mut(0).copy_from_slice(&[3, 2, 5]);
        caps.column_mut(1).copy_from_slice(&[4, 4, 4]);
        let mut store = FlowStore::new(2, 0, 3);
        assert_eq!(flush_trivial(&mut caps, &mut store), 6);
    }

    #[test]
    fn flow_loop_example() {
        let mut caps = IshikawaCapacities::zeros(2, 3, vec![(0, 1)]);
        caps.column_mut(0).copy_from_slice(&[0, 5, 3]);
        caps.column_mut(1).copy_from_slice(&[1, 0, 0]);
        caps.cross_mut(0).set(Dir::Forward, 1, 2, 2);
        let mut store = FlowStore::new(2, 1, 3);
        let de = DirectedEdge::new(0, Dir::Forward);
        apply_flow_loop(&mut caps, de, 1, 2, 2, &mut store).unwrap();
        assert_eq!(caps.column(0), &[0, 3, 1]);
        assert_eq!(caps.cross(0).get(Dir::Forward, 1, 2), 0);
        assert_eq!(caps.cross(0).get(Dir::Backward, 2, 1), 2);
        assert_eq!(caps.column(1), &[1, 0, 2]);
        assert_eq!((store.source_flow(0), store.source_flow(1)), (2, -2));
        assert_eq!(store.total_flow(), 0);

        assert!(matches!(
            apply_flow_loop(&mut caps, de, 2, 2, 1, &mut store),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn solve_examples() {
        let zero = EnergyModel::new(
            2,
            3,
            vec![(0, 1)],
            vec![vec![0; 3]; 2],
            vec![PairwiseSpec::Table(vec![0; 9])],
        )
        .unwrap();
        let r = solve_block(&zero, SolveOptions::default()).unwrap();
        assert_eq!((r.energy, r.augmentations), (0, 0));

        for seed in 0..40 {
            let reg = [Regularizer::Linear, Regularizer::Quadratic, Regularizer::Huber { delta: 1 }][seed % 3];
            let m = generate_grid_instance(3, 3, 3, reg, 3, 20, seed as u64).unwrap();
            let r = solve_block(&m, SolveOptions::diagnostics()).unwrap();
            let (_, best) = brute_force_minimize(&m, BRUTE_FORCE_CAP).unwrap();
            assert_eq!(r.energy, best, "seed {seed}");
            assert_eq!(m.evaluate(r.labeling.as_ref().unwrap()).unwrap(), best);
            let d = r.diagnostics.unwrap();
            assert_eq!(d.existence_mismatches, 0);
            assert_eq!(d.bookkeeping_mismatches, 0);
        }
    }
}
