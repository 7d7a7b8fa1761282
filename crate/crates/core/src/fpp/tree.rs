use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ball::{EdgeId, VertexId};
use crate::error::{Error, Result};
use crate::fpp::forest::PendantForest;
use crate::fpp::weights::OmegaSample;
use crate::graph::Graph;

pub const NO_EDGE: EdgeId = EdgeId::MAX;

/// Which metric a tree's distances are exact for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// The first-passage metric of the infinite graph: a vertex counts only
    /// when the truncation certificate proves its geodesic stays inside.
    #[default]
    Infinite,
    /// The first-passage metric of the finite ball itself; every vertex is
    /// exact by construction.
    Ball,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: VertexId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, vertex)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-vertex search labels.
trait Labels {
    fn dist(&self, v: VertexId) -> f64;
    fn parent(&self, v: VertexId) -> EdgeId;
    fn is_done(&self, v: VertexId) -> bool;
    fn set(&mut self, v: VertexId, dist: f64, parent: EdgeId);
    fn set_parent(&mut self, v: VertexId, parent: EdgeId);
    fn finish(&mut self, v: VertexId);
}

struct Search {
    dist: Vec<f64>,
    parent: Vec<EdgeId>,
    /// Settled vertices; every vertex appears after its parent.
    order: Vec<VertexId>,
    done: Vec<bool>,
}

impl Search {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            parent: vec![NO_EDGE; n],
            order: Vec::with_capacity(n),
            done: vec![false; n],
        }
    }
}

impl Labels for Search {
    fn dist(&self, v: VertexId) -> f64 {
        self.dist[v as usize]
    }
    fn parent(&self, v: VertexId) -> EdgeId {
        self.parent[v as usize]
    }
    fn is_done(&self, v: VertexId) -> bool {
        self.done[v as usize]
    }
    fn set(&mut self, v: VertexId, dist: f64, parent: EdgeId) {
        self.dist[v as usize] = dist;
        self.parent[v as usize] = parent;
    }
    fn set_parent(&mut self, v: VertexId, parent: EdgeId) {
        self.parent[v as usize] = parent;
    }
    fn finish(&mut self, v: VertexId) {
        self.done[v as usize] = true;
        self.order.push(v);
    }
}

/// Labels for searches that stop early: dense over the core, hashed for
/// the few hanging vertices on the source's chain.
struct CoreSearch<'f> {
    forest: &'f PendantForest,
    core: Vec<(f64, EdgeId, bool)>,
    hanging: HashMap<VertexId, (f64, EdgeId, bool)>,
}

impl<'f> CoreSearch<'f> {
    fn new(forest: &'f PendantForest) -> Self {
        Self {
            forest,
            core: vec![(f64::INFINITY, NO_EDGE, false); forest.core_size()],
            hanging: HashMap::new(),
        }
    }

    fn get(&self, v: VertexId) -> Option<&(f64, EdgeId, bool)> {
        match self.forest.core_index(v) {
            Some(i) => Some(&self.core[i]),
            None => self.hanging.get(&v),
        }
    }

    fn slot(&mut self, v: VertexId) -> &mut (f64, EdgeId, bool) {
        match self.forest.core_index(v) {
            Some(i) => &mut self.core[i],
            None => self.hanging.entry(v).or_insert((f64::INFINITY, NO_EDGE, false)),
        }
    }
}

impl Labels for CoreSearch<'_> {
    fn dist(&self, v: VertexId) -> f64 {
        self.get(v).map_or(f64::INFINITY, |l| l.0)
    }
    fn parent(&self, v: VertexId) -> EdgeId {
        self.get(v).map_or(NO_EDGE, |l| l.1)
    }
    fn is_done(&self, v: VertexId) -> bool {
        self.get(v).is_some_and(|l| l.2)
    }
    fn set(&mut self, v: VertexId, dist: f64, parent: EdgeId) {
        let l = self.slot(v);
        l.0 = dist;
        l.1 = parent;
    }
    fn set_parent(&mut self, v: VertexId, parent: EdgeId) {
        self.slot(v).1 = parent;
    }
    fn finish(&mut self, v: VertexId) {
        self.slot(v).2 = true;
    }
}

/// Multi-source Dijkstra. Among equal-distance predecessors the smallest
/// edge id wins. `rank`, when given, is the order in which incident edges
/// are relaxed; the output does not depend on it. With a forest, the heap
/// only holds core vertices; hanging trees are filled in afterwards unless
/// the search stops once every vertex of `until` is settled.
fn run_search<G: Graph + ?Sized, L: Labels>(
    labels: &mut L,
    graph: &G,
    omega: &OmegaSample,
    sources: &[VertexId],
    rank: Option<&[u32]>,
    forest: Option<&PendantForest>,
    until: Option<&[VertexId]>,
) {
    let mut heap = BinaryHeap::new();
    match (forest, sources) {
        (Some(forest), &[source]) => {
            // walk the hanging chain from the source down to the core
            let chain = forest.chain_to_core(source);
            labels.set(source, 0.0, NO_EDGE);
            for w in chain.windows(2) {
                let (u, e) = forest.up(w[0]).expect("chain vertices are peeled");
                debug_assert_eq!(u, w[1]);
                labels.set(u, labels.dist(w[0]) + omega.weight(e), e);
                labels.finish(w[0]);
            }
            let anchor = *chain.last().unwrap();
            heap.push(HeapEntry {
                dist: labels.dist(anchor),
                vertex: anchor,
            });
        }
        _ => {
            for &s in sources {
                labels.set(s, 0.0, NO_EDGE);
                heap.push(HeapEntry { dist: 0.0, vertex: s });
            }
        }
    }
    let in_core = |u: VertexId| forest.is_none_or(|f| f.in_core(u));
    let mut pending = until.map(|targets| {
        let mut wanted: Vec<VertexId> = targets.iter().copied().filter(|&t| !labels.is_done(t)).collect();
        wanted.sort_unstable();
        wanted.dedup();
        wanted
    });
    if pending.as_ref().is_some_and(|w| w.is_empty()) {
        return;
    }
    let mut scratch: Vec<(VertexId, EdgeId)> = Vec::new();
    while let Some(HeapEntry { dist: d, vertex: v }) = heap.pop() {
        if labels.is_done(v) {
            continue;
        }
        labels.finish(v);
        if let Some(wanted) = pending.as_mut() {
            if let Ok(i) = wanted.binary_search(&v) {
                wanted.remove(i);
            }
            if wanted.is_empty() {
                return;
            }
        }
        let incident: &[(VertexId, EdgeId)] = match rank {
            None => graph.neighbors(v),
            Some(r) => {
                scratch.clear();
                scratch.extend_from_slice(graph.neighbors(v));
                scratch.sort_unstable_by_key(|&(_, e)| r[e as usize]);
                &scratch
            }
        };
        for &(u, e) in incident {
            if labels.is_done(u) || !in_core(u) {
                continue;
            }
            let nd = d + omega.weight(e);
            let cur = labels.dist(u);
            if nd < cur {
                labels.set(u, nd, e);
                heap.push(HeapEntry { dist: nd, vertex: u });
            } else if nd == cur && e < labels.parent(u) {
                labels.set_parent(u, e);
            }
        }
    }
    if let (Some(forest), None) = (forest, until) {
        for v in forest.attach_order() {
            if labels.is_done(v) {
                continue;
            }
            let (u, e) = forest.up(v).expect("attach order lists peeled vertices");
            labels.set(v, labels.dist(u) + omega.weight(e), e);
            labels.finish(v);
        }
    }
}

fn search<G: Graph + ?Sized>(
    graph: &G,
    omega: &OmegaSample,
    sources: &[VertexId],
    rank: Option<&[u32]>,
    forest: Option<&PendantForest>,
    until: Option<&[VertexId]>,
) -> Search {
    let mut found = Search::new(graph.vertex_count());
    run_search(&mut found, graph, omega, sources, rank, forest, until);
    found
}

/// First-passage distance from every vertex to the outer sphere.
#[derive(Debug, Clone)]
pub struct EscapeMap {
    to_boundary: Vec<f64>,
}

impl EscapeMap {
    pub fn new<G: Graph + ?Sized>(graph: &G, omega: &OmegaSample) -> Self {
        let outer = graph.outer_sphere();
        let to_boundary = search(graph, omega, &outer, None, None, None).dist;
        Self { to_boundary }
    }

    pub fn escape(&self, v: VertexId) -> f64 {
        self.to_boundary[v as usize]
    }

    /// Any path between `x` and `y` that leaves the ball visits the outer
    /// sphere, so it costs at least `escape(x) + escape(y)`.
    pub fn bound(&self, x: VertexId, y: VertexId) -> f64 {
        self.escape(x) + self.escape(y)
    }
}

/// A shortest-path tree with per-vertex distances and certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicTree {
    root: VertexId,
    parent_edge: Vec<EdgeId>,
    parent: Vec<VertexId>,
    dist: Vec<f64>,
    certified: Vec<bool>,
    order: Vec<VertexId>,
    scope: Scope,
}

impl GeodesicTree {
    pub fn root(&self) -> VertexId {
        self.root
    }
    pub fn scope(&self) -> Scope {
        self.scope
    }
    pub fn dist(&self, v: VertexId) -> f64 {
        self.dist[v as usize]
    }
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }
    pub fn parent_edge(&self, v: VertexId) -> Option<EdgeId> {
        let e = self.parent_edge[v as usize];
        (e != NO_EDGE).then_some(e)
    }
    pub fn parent_edges(&self) -> &[EdgeId] {
        &self.parent_edge
    }
    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent_edge(v).map(|_| self.parent[v as usize])
    }
    pub fn is_certified(&self, v: VertexId) -> bool {
        self.certified[v as usize]
    }
    pub fn certified(&self) -> &[bool] {
        &self.certified
    }
    pub fn vertex_count(&self) -> usize {
        self.dist.len()
    }
    /// Reached vertices, each listed after its parent.
    pub fn order(&self) -> &[VertexId] {
        &self.order
    }

    /// First edge on the tree path from the root to each vertex; `NO_EDGE`
    /// for the root and unreached vertices.
    pub fn root_branches(&self) -> Vec<EdgeId> {
        let mut branch = vec![NO_EDGE; self.vertex_count()];
        for &v in &self.order {
            if let Some(p) = self.parent(v) {
                branch[v as usize] = if p == self.root {
                    self.parent_edge[v as usize]
                } else {
                    branch[p as usize]
                };
            }
        }
        branch
    }

    pub fn require_certified(&self, v: VertexId) -> Result<()> {
        if self.is_certified(v) {
            Ok(())
        } else {
            Err(Error::Uncertified(v))
        }
    }

    /// Tree path from `v` to the root, starting at `v`.
    pub fn path_to_root(&self, v: VertexId) -> Vec<VertexId> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Tree path from the root to `v`.
    pub fn path_from_root(&self, v: VertexId) -> Vec<VertexId> {
        let mut p = self.path_to_root(v);
        p.reverse();
        p
    }

    /// Debug dump: `vertex,level,parent,dist,certified`.
    pub fn write_csv<G: Graph + ?Sized, W: Write>(&self, graph: &G, mut out: W) -> Result<()> {
        writeln!(out, "vertex,level,parent,dist,certified")?;
        for v in 0..self.vertex_count() as VertexId {
            let parent = self.parent(v).map(|p| p.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{v},{},{parent},{:.17e},{}",
                graph.level(v),
                self.dist(v),
                self.is_certified(v)
            )?;
        }
        Ok(())
    }
}

fn assemble_tree<G: Graph + ?Sized>(
    graph: &G,
    root: VertexId,
    found: Search,
    escape: Option<&EscapeMap>,
) -> GeodesicTree {
    let Search {
        dist,
        parent: parent_edge,
        order,
        ..
    } = found;
    let parent = parent_edge
        .iter()
        .enumerate()
        .map(|(v, &e)| {
            if e == NO_EDGE {
                v as VertexId
            } else {
                let [a, b] = graph.edge(e);
                if a == v as VertexId {
                    b
                } else {
                    a
                }
            }
        })
        .collect();
    let (certified, scope) = match escape {
        Some(map) => (
            (0..dist.len())
                .map(|v| dist[v] < map.bound(root, v as VertexId))
                .collect(),
            Scope::Infinite,
        ),
        None => (dist.iter().map(|d| d.is_finite()).collect(), Scope::Ball),
    };
    GeodesicTree {
        root,
        parent_edge,
        parent,
        dist,
        certified,
        order,
        scope,
    }
}

fn build_tree<G: Graph + ?Sized>(
    graph: &G,
    forest: Option<&PendantForest>,
    omega: &OmegaSample,
    root: VertexId,
    scope: Scope,
    escape: Option<&EscapeMap>,
) -> GeodesicTree {
    let found = search(graph, omega, &[root], None, forest, None);
    match scope {
        Scope::Ball => assemble_tree(graph, root, found, None),
        Scope::Infinite => match escape {
            Some(map) => assemble_tree(graph, root, found, Some(map)),
            None => {
                let map = EscapeMap::new(graph, omega);
                assemble_tree(graph, root, found, Some(&map))
            }
        },
    }
}

/// Shortest-path tree from `root`, certified against the infinite graph.
pub fn dijkstra_tree<G: Graph + ?Sized>(graph: &G, omega: &OmegaSample, root: VertexId) -> GeodesicTree {
    build_tree(graph, None, omega, root, Scope::Infinite, None)
}

/// Shortest-path tree in the requested scope. `escape` is reused when
/// given; otherwise it is computed for `Scope::Infinite`.
pub fn tree_in_scope<G: Graph + ?Sized>(
    graph: &G,
    omega: &OmegaSample,
    root: VertexId,
    scope: Scope,
    escape: Option<&EscapeMap>,
) -> GeodesicTree {
    build_tree(graph, None, omega, root, scope, escape)
}

/// Same tree, relaxing incident edges in the order given by `rank`
/// (a permutation of edge ids). Used to check order independence.
pub fn dijkstra_tree_with_order<G: Graph + ?Sized>(
    graph: &G,
    omega: &OmegaSample,
    root: VertexId,
    rank: &[u32],
) -> GeodesicTree {
    let found = search(graph, omega, &[root], Some(rank), None, None);
    assemble_tree(graph, root, found, None)
}

/// The forward random geodesic tree `F(1, omega)`.
pub fn forward_tree<G: Graph + ?Sized>(graph: &G, omega: &OmegaSample) -> GeodesicTree {
    dijkstra_tree(graph, omega, graph.root())
}

/// In-tree toward a far `target`, standing in for the backward tree of a
/// boundary direction. Parent pointers lead toward `target`.
pub fn backward_tree_approx<G: Graph + ?Sized>(
    graph: &G,
    omega: &OmegaSample,
    target: VertexId,
) -> Result<GeodesicTree> {
    if target as usize >= graph.vertex_count() {
        return Err(Error::UnknownVertex(target));
    }
    let tree = dijkstra_tree(graph, omega, target);
    check_acyclic(&tree)?;
    Ok(tree)
}

/// Every reached vertex must appear after its parent in the settle order,
/// which rules out cycles.
fn check_acyclic(tree: &GeodesicTree) -> Result<()> {
    let mut seen = vec![false; tree.vertex_count()];
    for &v in tree.order() {
        if let Some(p) = tree.parent(v) {
            if !seen[p as usize] {
                return Err(Error::Precondition(format!(
                    "tree parent of {v} is not settled first"
                )));
            }
        } else if v != tree.root() {
            return Err(Error::Precondition(format!("vertex {v} has no parent")));
        }
        seen[v as usize] = true;
    }
    Ok(())
}

/// Shortest-path computations sharing one pendant-forest decomposition of
/// the graph. Results are identical to the plain functions.
#[derive(Debug, Clone)]
pub struct FppEngine<'g, G: Graph + ?Sized> {
    graph: &'g G,
    forest: PendantForest,
}

impl<'g, G: Graph + ?Sized> FppEngine<'g, G> {
    pub fn new(graph: &'g G) -> Self {
        Self {
            graph,
            forest: PendantForest::new(graph),
        }
    }

    pub fn graph(&self) -> &'g G {
        self.graph
    }

    pub fn forest(&self) -> &PendantForest {
        &self.forest
    }

    pub fn tree(
        &self,
        omega: &OmegaSample,
        root: VertexId,
        scope: Scope,
        escape: Option<&EscapeMap>,
    ) -> GeodesicTree {
        build_tree(self.graph, Some(&self.forest), omega, root, scope, escape)
    }

    pub fn forward_tree(&self, omega: &OmegaSample, scope: Scope) -> GeodesicTree {
        self.tree(omega, self.graph.root(), scope, None)
    }

    pub fn geodesic(
        &self,
        omega: &OmegaSample,
        x: VertexId,
        y: VertexId,
        scope: Scope,
        escape: Option<&EscapeMap>,
    ) -> Result<OmegaGeodesic> {
        geodesic_impl(self.graph, Some(&self.forest), omega, x, y, scope, escape)
    }

    /// Ball-scope omega-geodesics from `root` to each of `targets`, taken
    /// from the tree rooted at `root`. Stops as soon as every target is
    /// settled, so far fewer vertices are touched than by a full tree.
    pub fn paths_from(
        &self,
        omega: &OmegaSample,
        root: VertexId,
        targets: &[VertexId],
    ) -> Vec<OmegaGeodesic> {
        let root_chain = self.forest.chain_to_core(root);
        let mut on_root_chain = std::collections::HashSet::new();
        on_root_chain.extend(root_chain.iter().copied());
        // a target's path enters its hanging chain at the first vertex that
        // is in the core or on the root's own chain
        let meets: Vec<(VertexId, Vec<VertexId>)> = targets
            .iter()
            .map(|&t| {
                let mut down = vec![t];
                let mut cur = t;
                while !self.forest.in_core(cur) && !on_root_chain.contains(&cur) {
                    cur = self.forest.up(cur).expect("peeled").0;
                    down.push(cur);
                }
                let meet = down.pop().unwrap();
                down.reverse();
                (meet, down)
            })
            .collect();
        let wanted: Vec<VertexId> = meets.iter().map(|(m, _)| *m).collect();
        let mut found = CoreSearch::new(&self.forest);
        run_search(
            &mut found,
            self.graph,
            omega,
            &[root],
            None,
            Some(&self.forest),
            Some(&wanted),
        );
        debug_assert!(wanted.iter().all(|&m| found.is_done(m)));
        let walk_up = |mut v: VertexId| {
            let mut path = vec![v];
            while v != root {
                let [a, b] = self.graph.edge(found.parent(v));
                v = if a == v { b } else { a };
                path.push(v);
            }
            path.reverse();
            path
        };
        meets
            .into_iter()
            .map(|(meet, down)| {
                let mut path = walk_up(meet);
                let mut total = found.dist(meet);
                let mut prev = meet;
                for v in down {
                    let (u, e) = self.forest.up(v).expect("peeled");
                    debug_assert_eq!(u, prev);
                    total += omega.weight(e);
                    path.push(v);
                    prev = v;
                }
                OmegaGeodesic {
                    path,
                    total_weight: total,
                }
            })
            .collect()
    }
}

/// An omega-geodesic between two vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaGeodesic {
    pub path: Vec<VertexId>,
    pub total_weight: f64,
}

impl OmegaGeodesic {
    pub fn start(&self) -> VertexId {
        self.path[0]
    }
    pub fn end(&self) -> VertexId {
        *self.path.last().unwrap()
    }
    pub fn edges<G: Graph + ?Sized>(&self, graph: &G) -> Vec<EdgeId> {
        self.path
            .windows(2)
            .map(|w| graph.edge_between(w[0], w[1]).expect("geodesic steps are edges"))
            .collect()
    }
}

/// The omega-geodesic from `x` to `y`, with the tree tie-break. In
/// `Scope::Infinite` it must beat the escape bound `escape(x) + escape(y)`.
pub fn omega_geodesic_in_scope<G: Graph + ?Sized>(
    graph: &G,
    omega: &OmegaSample,
    x: VertexId,
    y: VertexId,
    scope: Scope,
    escape: Option<&EscapeMap>,
) -> Result<OmegaGeodesic> {
    geodesic_impl(graph, None, omega, x, y, scope, escape)
}

fn geodesic_impl<G: Graph + ?Sized>(
    graph: &G,
    forest: Option<&PendantForest>,
    omega: &OmegaSample,
    x: VertexId,
    y: VertexId,
    scope: Scope,
    escape: Option<&EscapeMap>,
) -> Result<OmegaGeodesic> {
    for v in [x, y] {
        if v as usize >= graph.vertex_count() {
            return Err(Error::UnknownVertex(v));
        }
    }
    let tree = build_tree(graph, forest, omega, x, Scope::Ball, None);
    let d = tree.dist(y);
    if scope == Scope::Infinite {
        let owned;
        let map = match escape {
            Some(m) => m,
            None => {
                owned = EscapeMap::new(graph, omega);
                &owned
            }
        };
        if x != y && d >= map.bound(x, y) {
            return Err(Error::UncertifiedPair { from: x, to: y });
        }
    }
    Ok(OmegaGeodesic {
        path: tree.path_from_root(y),
        total_weight: d,
    })
}

/// Certified omega-geodesic in the infinite graph.
pub fn omega_geodesic<G: Graph + ?Sized>(
    graph: &G,
    omega: &OmegaSample,
    x: VertexId,
    y: VertexId,
) -> Result<OmegaGeodesic> {
    omega_geodesic_in_scope(graph, omega, x, y, Scope::Infinite, None)
}

/// Sum of edge weights along a vertex path.
pub fn path_weight<G: Graph + ?Sized>(graph: &G, omega: &OmegaSample, path: &[VertexId]) -> Result<f64> {
    let mut total = 0.0;
    for w in path.windows(2) {
        let e = graph
            .edge_between(w[0], w[1])
            .ok_or(Error::NotAdjacent { from: w[0], to: w[1] })?;
        total += omega.weight(e);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::CayleyBall;
    use crate::fpp::weights::{sample_weights, WeightDistribution};
    use crate::graph::PlainGraph;
    use crate::model::GraphModel;

    // root=0, x=1, y=2, z=3
    fn diamond() -> (PlainGraph, OmegaSample) {
        let g = PlainGraph::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let w = OmegaSample::from_weights(vec![0.5, 0.4, 0.2, 0.4]).unwrap();
        (g, w)
    }

    #[test]
    fn single_edge() {
        let g = PlainGraph::new(2, &[(0, 1)]).unwrap();
        let w = OmegaSample::from_weights(vec![0.75]).unwrap();
        let t = tree_in_scope(&g, &w, 0, Scope::Ball, None);
        assert_eq!(t.distances(), &[0.0, 0.75]);
    }

    #[test]
    fn diamond_prefers_the_lighter_side() {
        let (g, w) = diamond();
        let t = tree_in_scope(&g, &w, 0, Scope::Ball, None);
        assert!((t.dist(3) - 0.7).abs() < 1e-15);
        assert_eq!(t.parent(3), Some(1));
        let geo = omega_geodesic_in_scope(&g, &w, 0, 3, Scope::Ball, None).unwrap();
        assert_eq!(geo.path, vec![0, 1, 3]);
        assert!((geo.total_weight - 0.7).abs() < 1e-15);
        let back = tree_in_scope(&g, &w, 3, Scope::Ball, None);
        assert_eq!(back.parent(0), Some(1));
    }

    #[test]
    fn trivial_geodesic() {
        let (g, w) = diamond();
        let geo = omega_geodesic_in_scope(&g, &w, 2, 2, Scope::Ball, None).unwrap();
        assert_eq!(geo.path, vec![2]);
        assert_eq!(geo.total_weight, 0.0);
    }

    #[test]
    fn path_weight_rules() {
        let (g, w) = diamond();
        assert_eq!(path_weight(&g, &w, &[]).unwrap(), 0.0);
        assert_eq!(path_weight(&g, &w, &[0, 1]).unwrap(), 0.5);
        let whole = path_weight(&g, &w, &[0, 1, 3, 2]).unwrap();
        let parts = path_weight(&g, &w, &[0, 1, 3]).unwrap() + path_weight(&g, &w, &[3, 2]).unwrap();
        assert_eq!(whole, parts);
        assert!(matches!(
            path_weight(&g, &w, &[0, 3]),
            Err(Error::NotAdjacent { from: 0, to: 3 })
        ));
    }

    #[test]
    fn free_group_tree_is_the_graph() {
        let ball = CayleyBall::build(GraphModel::FreeGroup { rank: 2 }, 5).unwrap();
        let omega = sample_weights(&ball, WeightDistribution::default(), 3, 0);
        let t = tree_in_scope(&ball, &omega, 0, Scope::Ball, None);
        for v in 1..ball.vertex_count() as VertexId {
            let word_parent = ball.root_geodesic(v).0[ball.level(v) as usize - 1];
            assert_eq!(t.parent(v), Some(word_parent));
            let expected = path_weight(&ball, &omega, &ball.root_geodesic(v).0).unwrap();
            assert_eq!(t.dist(v), expected);
        }
    }

    #[test]
    fn forest_search_matches_plain_search() {
        for model in ["tess:8,8", "tess:4,5", "surface:2", "free:2"] {
            let model: GraphModel = model.parse().unwrap();
            let ball = CayleyBall::build(model, 4).unwrap();
            let engine = FppEngine::new(&ball);
            for seed in 0..3 {
                let omega = sample_weights(&ball, WeightDistribution::default(), seed, 0);
                for source in [0, 1, ball.vertex_count() as VertexId - 1] {
                    let a = engine.tree(&omega, source, Scope::Infinite, None);
                    let b = tree_in_scope(&ball, &omega, source, Scope::Infinite, None);
                    assert_eq!(a.distances(), b.distances(), "{model} seed {seed}");
                    assert_eq!(a.parent_edges(), b.parent_edges());
                    assert_eq!(a.certified(), b.certified());
                    check_acyclic(&a).unwrap();
                }
            }
        }
    }

    #[test]
    fn early_stopping_paths_match_full_trees() {
        for model in ["tess:8,8", "tess:4,5", "free:2"] {
            let model: GraphModel = model.parse().unwrap();
            let ball = CayleyBall::build(model, 4).unwrap();
            let engine = FppEngine::new(&ball);
            let omega = sample_weights(&ball, WeightDistribution::default(), 5, 0);
            let last = ball.vertex_count() as VertexId - 1;
            for root in [0, 3, last] {
                let targets = [0, 1, 2, last, last - 1, 7];
                let full = tree_in_scope(&ball, &omega, root, Scope::Ball, None);
                for (t, geo) in targets.iter().zip(engine.paths_from(&omega, root, &targets)) {
                    assert_eq!(geo.path, full.path_from_root(*t), "{model} {root}->{t}");
                    assert_eq!(geo.total_weight, full.dist(*t));
                }
            }
        }
    }

    #[test]
    fn certificate_covers_the_root() {
        let ball = CayleyBall::build(GraphModel::Tessellation { p: 8, q: 8 }, 3).unwrap();
        let omega = sample_weights(&ball, WeightDistribution::default(), 1, 0);
        let t = forward_tree(&ball, &omega);
        assert!(t.is_certified(0));
        assert_eq!(t.scope(), Scope::Infinite);
        for b in ball.sphere(3) {
            assert!(!t.is_certified(b));
        }
    }

    #[test]
    fn backward_tree_toward_root_is_forward_tree() {
        let ball = CayleyBall::build(GraphModel::SurfaceGenus2, 3).unwrap();
        let omega = sample_weights(&ball, WeightDistribution::default(), 9, 0);
        assert_eq!(
            backward_tree_approx(&ball, &omega, 0).unwrap(),
            forward_tree(&ball, &omega)
        );
    }

    #[test]
    fn root_branches_follow_first_edge() {
        let (g, w) = diamond();
        let t = tree_in_scope(&g, &w, 0, Scope::Ball, None);
        let branch = t.root_branches();
        assert_eq!(branch, vec![NO_EDGE, 0, 1, 0]);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let (g, w) = diamond();
        let t = tree_in_scope(&g, &w, 0, Scope::Ball, None);
        let mut out = Vec::new();
        t.write_csv(&g, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("vertex,level,parent,dist,certified\n0,0,,"));
    }
}
