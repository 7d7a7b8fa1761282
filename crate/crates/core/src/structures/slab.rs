use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::ball::{CayleyBall, EdgeId, VertexId, WordGeodesic};
use crate::error::{Error, Result};
use crate::fpp::{FppEngine, OmegaSample};

/// Region between two spheres near an axis geodesic from the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabSpec {
    pub axis: WordGeodesic,
    pub inner: u32,
    pub outer: u32,
    pub cone_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisjointStrategy {
    Exact,
    GreedySwap,
}

/// Largest candidate count the exact search accepts.
pub const EXACT_LIMIT: usize = 64;

impl SlabSpec {
    /// Slab along the tie-broken word geodesic from the root to `target`.
    pub fn along(ball: &CayleyBall, target: VertexId, inner: u32, outer: u32, cone_eps: f64) -> Self {
        Self {
            axis: ball.root_geodesic(target),
            inner,
            outer,
            cone_eps,
        }
    }

    fn validate(&self, ball: &CayleyBall) -> Result<()> {
        if self.axis.start() != ball.root() {
            return Err(Error::Precondition("slab axis must start at the root".into()));
        }
        if !(self.inner < self.outer && self.outer as usize <= self.axis.len()) {
            return Err(Error::Precondition(format!(
                "slab needs inner < outer <= axis length, got {} / {} / {}",
                self.inner,
                self.outer,
                self.axis.len()
            )));
        }
        if !(self.cone_eps >= 0.0) {
            return Err(Error::Precondition("cone width must be nonnegative".into()));
        }
        Ok(())
    }

    /// Inner and outer boundary sets: vertices of levels `inner` and
    /// `outer` inside the cone `U_i B_{eps i}(axis[i])`.
    pub fn boundary_sets(&self, ball: &CayleyBall) -> Result<(Vec<VertexId>, Vec<VertexId>)> {
        self.validate(ball)?;
        let mut cone = HashSet::new();
        for (i, &v) in self.axis.vertices().iter().enumerate() {
            let r = (self.cone_eps * i as f64).floor() as u32;
            cone.extend(ball.ball_around(v, r));
        }
        let pick = |level: u32| -> BTreeSet<VertexId> {
            cone.iter().copied().filter(|&u| ball.level(u) == level).collect()
        };
        let inner: Vec<VertexId> = pick(self.inner).into_iter().collect();
        let outer: Vec<VertexId> = pick(self.outer).into_iter().collect();
        if inner.is_empty() || outer.is_empty() {
            return Err(Error::Precondition("slab boundary set is empty".into()));
        }
        Ok((inner, outer))
    }
}

/// Maximum number of edge-disjoint paths between two disjoint vertex sets
/// (unit edge capacities), i.e. the minimum edge cut.
pub fn min_edge_cut(ball: &CayleyBall, sources: &[VertexId], sinks: &[VertexId]) -> usize {
    let n = ball.vertex_count();
    let mut is_sink = vec![false; n];
    for &t in sinks {
        is_sink[t as usize] = true;
    }
    // flow[e] in {-1, 0, 1}, positive along (edge[0] -> edge[1])
    let mut flow = vec![0i8; ball.edge_count()];
    let residual = |flow: &[i8], u: VertexId, e: EdgeId| -> bool {
        let f = flow[e as usize];
        if ball.edge(e)[0] == u {
            f < 1
        } else {
            f > -1
        }
    };
    let mut total = 0;
    let mut pred: Vec<(VertexId, EdgeId)> = vec![(VertexId::MAX, EdgeId::MAX); n];
    let mut seen = vec![false; n];
    let mut touched: Vec<VertexId> = Vec::new();
    loop {
        for &v in &touched {
            seen[v as usize] = false;
        }
        touched.clear();
        let mut queue = VecDeque::new();
        for &s in sources {
            seen[s as usize] = true;
            touched.push(s);
            pred[s as usize] = (VertexId::MAX, EdgeId::MAX);
            queue.push_back(s);
        }
        let mut reached = None;
        'bfs: while let Some(v) = queue.pop_front() {
            for &(u, e) in ball.neighbors(v) {
                if seen[u as usize] || !residual(&flow, v, e) {
                    continue;
                }
                seen[u as usize] = true;
                touched.push(u);
                pred[u as usize] = (v, e);
                if is_sink[u as usize] {
                    reached = Some(u);
                    break 'bfs;
                }
                queue.push_back(u);
            }
        }
        let Some(mut cur) = reached else {
            return total;
        };
        loop {
            let (p, e) = pred[cur as usize];
            if p == VertexId::MAX {
                break;
            }
            if ball.edge(e)[0] == p {
                flow[e as usize] += 1;
            } else {
                flow[e as usize] -= 1;
            }
            cur = p;
        }
        total += 1;
    }
}

/// Edge sets of the omega-geodesics from every inner to every outer vertex.
pub fn crossing_candidates(
    engine: &FppEngine<'_, CayleyBall>,
    omega: &OmegaSample,
    inner: &[VertexId],
    outer: &[VertexId],
) -> Vec<(f64, Vec<EdgeId>)> {
    let ball = engine.graph();
    let mut out = Vec::with_capacity(inner.len() * outer.len());
    for &u in inner {
        for g in engine.paths_from(omega, u, outer) {
            let mut edges = g.edges(ball);
            edges.sort_unstable();
            out.push((g.total_weight, edges));
        }
    }
    out
}

fn disjoint(a: &[EdgeId], b: &[EdgeId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

fn conflicts(paths: &[Vec<EdgeId>]) -> Vec<Vec<bool>> {
    let k = paths.len();
    let mut c = vec![vec![false; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let clash = !disjoint(&paths[i], &paths[j]);
            c[i][j] = clash;
            c[j][i] = clash;
        }
    }
    c
}

/// Greedy selection in increasing weight, then 1-for-2 swaps until none
/// applies.
pub fn greedy_swap(candidates: &[(f64, Vec<EdgeId>)], k_max: usize) -> usize {
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| candidates[a].0.total_cmp(&candidates[b].0).then(a.cmp(&b)));
    let fits = |i: usize, used: &HashSet<EdgeId>| candidates[i].1.iter().all(|e| !used.contains(e));
    let mut chosen: Vec<usize> = Vec::new();
    let mut used: HashSet<EdgeId> = HashSet::new();
    for &i in &idx {
        if chosen.len() < k_max && fits(i, &used) {
            used.extend(candidates[i].1.iter().copied());
            chosen.push(i);
        }
    }
    let mut improved = true;
    while improved && chosen.len() < k_max {
        improved = false;
        'swap: for pos in 0..chosen.len() {
            let out = chosen[pos];
            let rest_used: HashSet<EdgeId> = used
                .iter()
                .copied()
                .filter(|e| candidates[out].1.binary_search(e).is_err())
                .collect();
            let free: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| i != out && !chosen.contains(&i) && fits(i, &rest_used))
                .collect();
            for a in 0..free.len() {
                for b in a + 1..free.len() {
                    if disjoint(&candidates[free[a]].1, &candidates[free[b]].1) {
                        chosen.remove(pos);
                        chosen.push(free[a]);
                        chosen.push(free[b]);
                        used = rest_used;
                        used.extend(candidates[free[a]].1.iter().copied());
                        used.extend(candidates[free[b]].1.iter().copied());
                        improved = true;
                        break 'swap;
                    }
                }
            }
        }
    }
    chosen.len().min(k_max)
}

/// Maximum pairwise edge-disjoint subfamily by branch and bound over the
/// conflict graph, capped at `k_max`.
pub fn exact_disjoint(candidates: &[(f64, Vec<EdgeId>)], k_max: usize) -> Result<usize> {
    let k = candidates.len();
    if k > EXACT_LIMIT {
        return Err(Error::SearchTooLarge(format!(
            "{k} candidate geodesics exceed the exact-search limit {EXACT_LIMIT}"
        )));
    }
    let paths: Vec<Vec<EdgeId>> = candidates.iter().map(|(_, e)| e.clone()).collect();
    let clash = conflicts(&paths);
    let masks: Vec<u64> = (0..k)
        .map(|i| (0..k).filter(|&j| clash[i][j]).fold(0u64, |m, j| m | (1 << j)))
        .collect();
    fn best(masks: &[u64], open: u64, size: usize, record: &mut usize, cap: usize) {
        if *record >= cap {
            return;
        }
        if open == 0 {
            *record = (*record).max(size);
            return;
        }
        if size + open.count_ones() as usize <= *record {
            return;
        }
        let v = open.trailing_zeros() as usize;
        best(masks, open & !(1 << v) & !masks[v], size + 1, record, cap);
        // excluding v only helps if one of its open neighbours gets taken
        if open & masks[v] != 0 {
            best(masks, open & !(1 << v), size, record, cap);
        }
    }
    let all = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut record = 0;
    best(&masks, all, 0, &mut record, k_max);
    Ok(record.min(k_max))
}

/// Size of the largest edge-disjoint family of omega-geodesic segments from
/// the inner to the outer boundary set, capped at `k_max`.
pub fn disjoint_geodesic_count(
    engine: &FppEngine<'_, CayleyBall>,
    omega: &OmegaSample,
    slab: &SlabSpec,
    k_max: usize,
    strategy: DisjointStrategy,
) -> Result<usize> {
    let (inner, outer) = slab.boundary_sets(engine.graph())?;
    disjoint_count_between(engine, omega, &inner, &outer, k_max, strategy)
}

/// As [`disjoint_geodesic_count`], for boundary sets computed once.
pub fn disjoint_count_between(
    engine: &FppEngine<'_, CayleyBall>,
    omega: &OmegaSample,
    inner: &[VertexId],
    outer: &[VertexId],
    k_max: usize,
    strategy: DisjointStrategy,
) -> Result<usize> {
    let candidates = crossing_candidates(engine, omega, inner, outer);
    match strategy {
        DisjointStrategy::Exact => exact_disjoint(&candidates, k_max),
        DisjointStrategy::GreedySwap => Ok(greedy_swap(&candidates, k_max)),
    }
}
