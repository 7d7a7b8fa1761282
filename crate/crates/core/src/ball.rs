//! Finite balls of hyperbolic graphs and word-metric queries on them.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cayley::{build_group_ball, word_of};
use crate::delta::padding_delta;
use crate::error::{Error, Result};
use crate::model::GraphModel;
use crate::tiling::build_tiling_ball;
use crate::words::{format_word, Letter, Presentation};

pub type VertexId = u32;
pub type EdgeId = u32;

/// Default cap on the number of vertices in a ball.
pub const DEFAULT_VERTEX_CAP: usize = 5_000_000;

const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexLabel {
    /// Shortlex-least geodesic word.
    Word(String),
    /// Breadth-first position within a sphere of the tiling.
    Tile { level: u32, index: u32 },
}

#[derive(Debug, Clone)]
enum Labels {
    Words { parent: Vec<u32>, letter: Vec<Letter> },
    Tiles,
}

/// A word geodesic: consecutive vertices adjacent, length equal to the
/// distance between the endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordGeodesic(pub Vec<VertexId>);

impl WordGeodesic {
    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }
    pub fn len(&self) -> usize {
        self.0.len().saturating_sub(1)
    }
    pub fn is_empty(&self) -> bool {
        self.0.len() <= 1
    }
    pub fn start(&self) -> VertexId {
        self.0[0]
    }
    pub fn end(&self) -> VertexId {
        *self.0.last().unwrap()
    }
}

/// The radius-`n` ball around the identity (or a tiling vertex).
///
/// Vertex ids are sorted by level, and within a level by discovery order,
/// so the ball of radius `r < n` is a prefix of the ball of radius `n`.
/// Edge ids are sorted by `(larger endpoint, smaller endpoint)` for the
/// same reason: edges inside `B_r` form a prefix of the edge list.
#[derive(Debug, Clone)]
pub struct CayleyBall {
    model: GraphModel,
    radius: u32,
    levels: Vec<u32>,
    sphere_starts: Vec<u32>,
    edges: Vec<[VertexId; 2]>,
    adj_start: Vec<u32>,
    adj: Vec<(VertexId, EdgeId)>,
    labels: Labels,
    padding: u32,
    padding_delta: f64,
}

impl CayleyBall {
    pub fn build(model: GraphModel, radius: u32) -> Result<Self> {
        build_ball(model, radius, DEFAULT_VERTEX_CAP)
    }

    pub fn model(&self) -> GraphModel {
        self.model
    }
    pub fn radius(&self) -> u32 {
        self.radius
    }
    pub fn root(&self) -> VertexId {
        0
    }
    pub fn vertex_count(&self) -> usize {
        self.levels.len()
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    pub fn level(&self, v: VertexId) -> u32 {
        self.levels[v as usize]
    }
    pub fn levels(&self) -> &[u32] {
        &self.levels
    }
    pub fn edges(&self) -> &[[VertexId; 2]] {
        &self.edges
    }
    pub fn edge(&self, e: EdgeId) -> [VertexId; 2] {
        self.edges[e as usize]
    }
    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.levels.len()
    }

    /// Neighbours sorted by vertex id, each with the connecting edge id.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        let s = self.adj_start[v as usize] as usize;
        let e = self.adj_start[v as usize + 1] as usize;
        &self.adj[s..e]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.neighbors(v).len()
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.neighbors(u).iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    /// Vertices at exactly level `l` (empty beyond the radius).
    pub fn sphere(&self, l: u32) -> std::ops::Range<VertexId> {
        if l > self.radius {
            return 0..0;
        }
        self.sphere_starts[l as usize]..self.sphere_starts[l as usize + 1]
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        (0..=self.radius).map(|l| self.sphere(l).len()).collect()
    }

    /// Number of vertices with level `<= l`.
    pub fn ball_size(&self, l: u32) -> usize {
        self.sphere_starts[(l.min(self.radius) + 1) as usize] as usize
    }

    /// Number of edges with both endpoints at level `<= l`.
    pub fn edge_prefix(&self, l: u32) -> usize {
        let bound = self.ball_size(l) as u32;
        self.edges.partition_point(|&[_, hi]| hi < bound)
    }

    pub fn label(&self, v: VertexId) -> VertexLabel {
        match &self.labels {
            Labels::Words { parent, letter } => {
                let mut w = Vec::new();
                word_of(parent, letter, v, &mut w);
                VertexLabel::Word(format_word(&w))
            }
            Labels::Tiles => {
                let level = self.level(v);
                VertexLabel::Tile {
                    level,
                    index: v - self.sphere_starts[level as usize],
                }
            }
        }
    }

    /// Shortlex word of a group vertex.
    pub fn word(&self, v: VertexId) -> Option<Vec<Letter>> {
        match &self.labels {
            Labels::Words { parent, letter } => {
                let mut w = Vec::new();
                word_of(parent, letter, v, &mut w);
                Some(w)
            }
            Labels::Tiles => None,
        }
    }

    /// Follows a word from `start` through the ball; `None` if it leaves.
    pub fn follow_word(&self, start: VertexId, word: &[Letter]) -> Option<VertexId> {
        let Labels::Words { parent, letter } = &self.labels else {
            return None;
        };
        let mut cur = start;
        for &g in word {
            // the neighbour reached by g is the one whose shortlex word, or
            // ours, ends with the matching letter; search the neighbours
            let mut next = None;
            for &(u, _) in self.neighbors(cur) {
                if (parent[u as usize] == cur && letter[u as usize] == g)
                    || (parent[cur as usize] == u && cur != 0 && letter[cur as usize] == g ^ 1)
                {
                    next = Some(u);
                    break;
                }
            }
            cur = match next {
                Some(u) => u,
                None => self.step_by_generator(cur, g)?,
            };
        }
        Some(cur)
    }

    /// Slow path of `follow_word`: compare full words with the solver.
    fn step_by_generator(&self, v: VertexId, g: Letter) -> Option<VertexId> {
        let presentation = presentation_of(self.model)?;
        let mut target = self.word(v)?;
        target.push(g);
        for &(u, _) in self.neighbors(v) {
            let mut probe = target.clone();
            probe.extend(crate::words::invert_word(&self.word(u)?));
            if presentation.is_trivial(&probe) {
                return Some(u);
            }
        }
        None
    }

    /// Validity padding: pairwise queries are exact for vertices of level
    /// `<= radius - padding`.
    pub fn padding(&self) -> u32 {
        self.padding
    }
    pub fn padding_delta(&self) -> f64 {
        self.padding_delta
    }
    pub fn max_valid_level(&self) -> u32 {
        self.radius.saturating_sub(self.padding)
    }
    pub fn is_valid(&self, v: VertexId) -> bool {
        self.contains(v) && self.level(v) <= self.max_valid_level()
    }

    fn check_contains(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// Geodesics from the root never leave the level range of their
    /// endpoint, so root pairs are always valid.
    fn check_pair(&self, x: VertexId, y: VertexId) -> Result<()> {
        self.check_contains(x)?;
        self.check_contains(y)?;
        if x == self.root() || y == self.root() {
            return Ok(());
        }
        for v in [x, y] {
            if !self.is_valid(v) {
                return Err(Error::Validity {
                    vertex: v,
                    level: self.level(v),
                    max_level: self.max_valid_level(),
                });
            }
        }
        Ok(())
    }

    /// Breadth-first distances from `x` inside the ball, up to `max_depth`.
    pub fn bfs_distances(&self, x: VertexId, max_depth: u32) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[x as usize] = 0;
        queue.push_back(x);
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            if d >= max_depth {
                continue;
            }
            for &(u, _) in self.neighbors(v) {
                if dist[u as usize] == UNREACHED {
                    dist[u as usize] = d + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Vertices within word distance `r` of `v`, in breadth-first order.
    pub fn ball_around(&self, v: VertexId, r: u32) -> Vec<VertexId> {
        let mut seen = HashSet::new();
        let mut out = vec![v];
        let mut frontier = vec![v];
        seen.insert(v);
        for _ in 0..r {
            let mut next = Vec::new();
            for &w in &frontier {
                for &(u, _) in self.neighbors(w) {
                    if seen.insert(u) {
                        next.push(u);
                    }
                }
            }
            out.extend_from_slice(&next);
            frontier = next;
        }
        out
    }

    fn raw_distance(&self, x: VertexId, y: VertexId) -> u32 {
        if x == y {
            return 0;
        }
        if x == self.root() {
            return self.level(y);
        }
        if y == self.root() {
            return self.level(x);
        }
        // bidirectional breadth-first search
        let mut dx = std::collections::HashMap::new();
        let mut dy = std::collections::HashMap::new();
        dx.insert(x, 0u32);
        dy.insert(y, 0u32);
        let mut fx = vec![x];
        let mut fy = vec![y];
        let (mut rx, mut ry) = (0u32, 0u32);
        loop {
            let expand_x = fx.len() <= fy.len();
            let (front, seen, other, depth) = if expand_x {
                (&mut fx, &mut dx, &dy, &mut rx)
            } else {
                (&mut fy, &mut dy, &dx, &mut ry)
            };
            *depth += 1;
            let mut next = Vec::new();
            let mut best = u32::MAX;
            for &w in front.iter() {
                for &(u, _) in self.neighbors(w) {
                    if let Some(&o) = other.get(&u) {
                        best = best.min(*depth + o);
                    }
                    if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(u) {
                        e.insert(*depth);
                        next.push(u);
                    }
                }
            }
            if best != u32::MAX {
                return best;
            }
            if next.is_empty() {
                return UNREACHED;
            }
            *front = next;
        }
    }

    pub fn word_distance(&self, x: VertexId, y: VertexId) -> Result<u32> {
        self.check_pair(x, y)?;
        Ok(self.raw_distance(x, y))
    }

    /// The geodesic from `x` to `y` that steps to the smallest-id vertex
    /// closer to `y` at every step.
    pub fn word_geodesic(&self, x: VertexId, y: VertexId) -> Result<WordGeodesic> {
        self.check_pair(x, y)?;
        if x == self.root() {
            return Ok(self.root_geodesic(y));
        }
        let d = self.raw_distance(x, y);
        let to_y = self.bfs_distances(y, d);
        let mut path = vec![x];
        let mut cur = x;
        while cur != y {
            let want = to_y[cur as usize] - 1;
            cur = self
                .neighbors(cur)
                .iter()
                .map(|&(u, _)| u)
                .find(|&u| to_y[u as usize] == want)
                .expect("breadth-first layers are connected");
            path.push(cur);
        }
        Ok(WordGeodesic(path))
    }

    /// All vertices on some word geodesic from the root to `z`.
    pub fn geodesic_interval(&self, z: VertexId) -> HashSet<VertexId> {
        let mut set = HashSet::new();
        set.insert(z);
        let mut frontier = vec![z];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &w in &frontier {
                let lw = self.level(w);
                for &(u, _) in self.neighbors(w) {
                    if self.level(u) + 1 == lw && set.insert(u) {
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        set
    }

    /// Tie-broken word geodesic from the root; valid for every vertex.
    pub fn root_geodesic(&self, z: VertexId) -> WordGeodesic {
        let interval = self.geodesic_interval(z);
        let mut path = vec![self.root()];
        let mut cur = self.root();
        while cur != z {
            let lc = self.level(cur);
            cur = self
                .neighbors(cur)
                .iter()
                .map(|&(u, _)| u)
                .find(|u| self.level(*u) == lc + 1 && interval.contains(u))
                .expect("interval is connected");
            path.push(cur);
        }
        WordGeodesic(path)
    }

    /// `(d(b,x) + d(b,y) - d(x,y)) / 2`.
    pub fn gromov_product(&self, x: VertexId, y: VertexId, base: VertexId) -> Result<f64> {
        let dx = self.word_distance(base, x)?;
        let dy = self.word_distance(base, y)?;
        let dxy = self.word_distance(x, y)?;
        Ok((f64::from(dx) + f64::from(dy) - f64::from(dxy)) / 2.0)
    }

    /// Vertices of `g` at minimal word distance from `w`.
    pub fn nearest_point_projection(&self, w: VertexId, g: &WordGeodesic) -> Result<BTreeSet<VertexId>> {
        for &v in g.vertices() {
            self.check_pair(w, v)?;
        }
        let dist = self.bfs_distances(w, u32::MAX);
        let best = g
            .vertices()
            .iter()
            .map(|&v| dist[v as usize])
            .min()
            .ok_or_else(|| Error::Precondition("empty geodesic".into()))?;
        Ok(g.vertices()
            .iter()
            .copied()
            .filter(|&v| dist[v as usize] == best)
            .collect())
    }

    /// Level-`m` vertices `z` such that some word geodesic from the root to
    /// `z` passes within distance `r` of `v`.
    pub fn shadow(&self, v: VertexId, r: u32, m: u32) -> Result<BTreeSet<VertexId>> {
        self.check_contains(v)?;
        if self.level(v) + r > m || m > self.radius {
            return Err(Error::Precondition(format!(
                "shadow needs level(v) + R <= m <= radius, got {} + {r} vs {m} (radius {})",
                self.level(v),
                self.radius
            )));
        }
        // descendants of the r-neighbourhood along level-increasing edges
        let near = self.ball_around(v, r);
        let lo = near.iter().map(|&u| self.level(u)).min().unwrap_or(0);
        let mut by_level: Vec<Vec<VertexId>> = vec![Vec::new(); (m + 1) as usize];
        for &u in &near {
            by_level[self.level(u) as usize].push(u);
        }
        let mut active: HashSet<VertexId> = by_level[lo as usize].iter().copied().collect();
        for l in lo..m {
            let mut next: HashSet<VertexId> = by_level[l as usize + 1].iter().copied().collect();
            for &w in &active {
                for &(u, _) in self.neighbors(w) {
                    if self.level(u) == l + 1 {
                        next.insert(u);
                    }
                }
            }
            active = next;
        }
        Ok(active.into_iter().collect())
    }

    /// True iff `d(w, ray[i]) <= eps * i` for some index `i`.
    pub fn cone_membership(&self, ray: &WordGeodesic, eps: f64, w: VertexId) -> Result<bool> {
        self.check_contains(w)?;
        if ray.start() != self.root() {
            return Err(Error::Precondition("cone ray must start at the root".into()));
        }
        let reach = (eps * ray.len() as f64).floor() as u32;
        let dist = self.bfs_distances(w, reach);
        Ok(ray
            .vertices()
            .iter()
            .enumerate()
            .any(|(i, &v)| dist[v as usize] != UNREACHED && f64::from(dist[v as usize]) <= eps * i as f64))
    }
}

pub(crate) fn presentation_of(model: GraphModel) -> Option<Presentation> {
    match model {
        GraphModel::FreeGroup { rank } => Some(Presentation::Free { rank }),
        GraphModel::SurfaceGenus2 => Some(Presentation::surface_genus2()),
        GraphModel::Tessellation { .. } => None,
    }
}

/// Neighbour lists stored back to back.
#[derive(Debug, Clone, Default)]
pub(crate) struct Adjacency {
    start: Vec<usize>,
    flat: Vec<u32>,
}

impl Adjacency {
    pub(crate) fn with_capacity(vertices: usize, entries: usize) -> Self {
        let mut start = Vec::with_capacity(vertices + 1);
        start.push(0);
        Self {
            start,
            flat: Vec::with_capacity(entries),
        }
    }

    pub(crate) fn from_lists(lists: Vec<Vec<u32>>) -> Self {
        let total = lists.iter().map(Vec::len).sum();
        let mut adj = Self::with_capacity(lists.len(), total);
        for ns in &lists {
            adj.push(ns);
        }
        adj
    }

    pub(crate) fn push(&mut self, neighbors: &[u32]) {
        self.flat.extend_from_slice(neighbors);
        self.start.push(self.flat.len());
    }

    pub(crate) fn len(&self) -> usize {
        self.start.len() - 1
    }

    pub(crate) fn get(&self, v: usize) -> &[u32] {
        &self.flat[self.start[v]..self.start[v + 1]]
    }
}

/// Builds the ball without computing the validity padding.
pub(crate) fn build_raw(model: GraphModel, radius: u32, cap: usize) -> Result<CayleyBall> {
    model.validate()?;
    let (levels, neighbors, labels) = match presentation_of(model) {
        Some(p) => {
            let g = build_group_ball(&p, radius, cap)?;
            (
                g.levels,
                Adjacency::from_lists(g.neighbors),
                Labels::Words {
                    parent: g.parent,
                    letter: g.letter,
                },
            )
        }
        None => {
            let GraphModel::Tessellation { p, q } = model else {
                unreachable!()
            };
            let t = build_tiling_ball(p, q, radius, cap)?;
            (t.levels, t.neighbors, Labels::Tiles)
        }
    };
    if levels.len() > cap {
        return Err(Error::ResourceLimit { radius, cap });
    }
    Ok(assemble(model, radius, levels, neighbors, labels))
}

fn assemble(
    model: GraphModel,
    radius: u32,
    levels: Vec<u32>,
    neighbors: Adjacency,
    labels: Labels,
) -> CayleyBall {
    let n = levels.len();
    let mut sphere_starts = vec![0u32; radius as usize + 2];
    for &l in &levels {
        sphere_starts[l as usize + 1] += 1;
    }
    for i in 1..sphere_starts.len() {
        sphere_starts[i] += sphere_starts[i - 1];
    }
    debug_assert!(levels.windows(2).all(|w| w[0] <= w[1]));

    let mut edges: Vec<[u32; 2]> = Vec::new();
    for v in 0..neighbors.len() {
        for &u in neighbors.get(v) {
            if u < v as u32 {
                edges.push([u, v as u32]);
            }
        }
    }
    drop(neighbors);
    // (hi, lo) order; vertices are visited in increasing hi already
    edges.sort_unstable_by_key(|&[lo, hi]| (hi, lo));

    let mut adj_start = vec![0u32; n + 1];
    for &[a, b] in &edges {
        adj_start[a as usize + 1] += 1;
        adj_start[b as usize + 1] += 1;
    }
    for i in 1..=n {
        adj_start[i] += adj_start[i - 1];
    }
    let mut fill = adj_start.clone();
    let mut adj = vec![(0u32, 0u32); 2 * edges.len()];
    for (e, &[a, b]) in edges.iter().enumerate() {
        adj[fill[a as usize] as usize] = (b, e as u32);
        fill[a as usize] += 1;
        adj[fill[b as usize] as usize] = (a, e as u32);
        fill[b as usize] += 1;
    }
    for v in 0..n {
        adj[adj_start[v] as usize..adj_start[v + 1] as usize].sort_unstable();
    }
    CayleyBall {
        model,
        radius,
        levels,
        sphere_starts,
        edges,
        adj_start,
        adj,
        labels,
        padding: 0,
        padding_delta: 0.0,
    }
}

/// Builds the full radius-`n` ball of `model`, failing if it would hold
/// more than `cap` vertices.
pub fn build_ball(model: GraphModel, radius: u32, cap: usize) -> Result<CayleyBall> {
    let mut ball = build_raw(model, radius, cap)?;
    let delta = padding_delta(model)?;
    ball.padding_delta = delta;
    ball.padding = 2 * delta.ceil() as u32 + 2;
    Ok(ball)
}

/// Rebuilds a ball from serialized parts (levels and edge list). Group
/// balls carry word labels that files do not store, so they are rebuilt
/// and checked against the stored graph instead.
pub(crate) fn from_parts(
    model: GraphModel,
    radius: u32,
    levels: Vec<u32>,
    edges: &[[u32; 2]],
    padding_delta: f64,
) -> Result<CayleyBall> {
    let n = levels.len();
    let mut ball = if presentation_of(model).is_some() {
        let fresh = build_raw(model, radius, n.max(1))?;
        if fresh.levels != levels || fresh.edges != edges {
            return Err(Error::Format(format!(
                "stored graph does not match a fresh {model} ball of radius {radius}"
            )));
        }
        fresh
    } else {
        let mut lists = vec![Vec::new(); n];
        for &[a, b] in edges {
            if a as usize >= n || b as usize >= n || a == b {
                return Err(Error::Format(format!("bad edge ({a}, {b})")));
            }
            lists[a as usize].push(b);
            lists[b as usize].push(a);
        }
        let ball = assemble(model, radius, levels, Adjacency::from_lists(lists), Labels::Tiles);
        if ball.edges != edges {
            return Err(Error::Format("edge list is not in canonical order".into()));
        }
        ball
    };
    ball.padding_delta = padding_delta;
    ball.padding = 2 * padding_delta.ceil() as u32 + 2;
    Ok(ball)
}
