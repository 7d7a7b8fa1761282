use std::collections::VecDeque;

use crate::ball::{EdgeId, VertexId};
use crate::graph::Graph;

const NONE: VertexId = VertexId::MAX;

/// Splits a graph into its 2-core (with the root pinned) and the trees
/// hanging off it. Paths between core vertices never enter a hanging tree,
/// and every hanging vertex is reached through the unique edge toward the
/// core, so shortest paths only need a search over the core.
#[derive(Debug, Clone)]
pub struct PendantForest {
    /// For peeled vertices, the neighbour toward the core and that edge.
    up: Vec<(VertexId, EdgeId)>,
    /// Peeling order; each vertex's `up` neighbour is peeled later or is in
    /// the core.
    peeled: Vec<VertexId>,
    in_core: Vec<bool>,
    /// Dense index of each core vertex, `NONE` for peeled ones.
    core_index: Vec<VertexId>,
    core_size: usize,
}

impl PendantForest {
    pub fn new<G: Graph + ?Sized>(graph: &G) -> Self {
        let n = graph.vertex_count();
        let root = graph.root();
        let mut degree: Vec<u32> = (0..n as VertexId)
            .map(|v| graph.neighbors(v).len() as u32)
            .collect();
        let mut in_core = vec![true; n];
        let mut up = vec![(NONE, EdgeId::MAX); n];
        let mut peeled = Vec::new();
        let mut queue: VecDeque<VertexId> = (0..n as VertexId)
            .filter(|&v| v != root && degree[v as usize] == 1)
            .collect();
        while let Some(v) = queue.pop_front() {
            in_core[v as usize] = false;
            peeled.push(v);
            let &(u, e) = graph
                .neighbors(v)
                .iter()
                .find(|&&(u, _)| in_core[u as usize])
                .expect("a degree-one vertex keeps one neighbour");
            up[v as usize] = (u, e);
            degree[u as usize] -= 1;
            if u != root && degree[u as usize] == 1 {
                queue.push_back(u);
            }
        }
        let core_size = n - peeled.len();
        let mut next = 0;
        let core_index = in_core
            .iter()
            .map(|&c| {
                if c {
                    next += 1;
                    next - 1
                } else {
                    NONE
                }
            })
            .collect();
        Self {
            up,
            peeled,
            in_core,
            core_index,
            core_size,
        }
    }

    pub fn in_core(&self, v: VertexId) -> bool {
        self.in_core[v as usize]
    }

    /// Position of a core vertex among the core vertices.
    pub fn core_index(&self, v: VertexId) -> Option<usize> {
        let i = self.core_index[v as usize];
        (i != NONE).then_some(i as usize)
    }

    pub fn core_size(&self) -> usize {
        self.core_size
    }

    /// The neighbour of a peeled vertex toward the core.
    pub fn up(&self, v: VertexId) -> Option<(VertexId, EdgeId)> {
        (!self.in_core(v)).then(|| self.up[v as usize])
    }

    /// Peeled vertices, core-most first.
    pub fn attach_order(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.peeled.iter().rev().copied()
    }

    /// Walks from `v` toward the core; returns the chain ending at the
    /// first core vertex.
    pub fn chain_to_core(&self, v: VertexId) -> Vec<VertexId> {
        let mut chain = vec![v];
        let mut cur = v;
        while let Some((u, _)) = self.up(cur) {
            chain.push(u);
            cur = u;
        }
        chain
    }
}
