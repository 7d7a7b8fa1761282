//! Rooted, levelled graphs: the interface shared by balls and small
//! hand-built graphs used in worked examples.

use std::collections::VecDeque;

use crate::ball::{CayleyBall, EdgeId, VertexId};
use crate::error::{Error, Result};

/// A finite graph with a root at vertex 0, breadth-first levels, and the
/// outer sphere at level `radius()`. Paths leaving the graph's infinite
/// ambient space must cross the outer sphere.
pub trait Graph: Sync {
    fn vertex_count(&self) -> usize;
    fn edge_count(&self) -> usize;
    fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)];
    fn level(&self, v: VertexId) -> u32;
    fn radius(&self) -> u32;
    fn edge(&self, e: EdgeId) -> [VertexId; 2];

    fn root(&self) -> VertexId {
        0
    }

    fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.neighbors(u).iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    fn outer_sphere(&self) -> Vec<VertexId> {
        (0..self.vertex_count() as u32)
            .filter(|&v| self.level(v) == self.radius())
            .collect()
    }
}

impl Graph for CayleyBall {
    fn vertex_count(&self) -> usize {
        CayleyBall::vertex_count(self)
    }
    fn edge_count(&self) -> usize {
        CayleyBall::edge_count(self)
    }
    fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        CayleyBall::neighbors(self, v)
    }
    fn level(&self, v: VertexId) -> u32 {
        CayleyBall::level(self, v)
    }
    fn radius(&self) -> u32 {
        CayleyBall::radius(self)
    }
    fn edge(&self, e: EdgeId) -> [VertexId; 2] {
        CayleyBall::edge(self, e)
    }
    fn outer_sphere(&self) -> Vec<VertexId> {
        self.sphere(self.radius()).collect()
    }
}

/// A small explicit graph, rooted at vertex 0, with edge ids in the order
/// given.
#[derive(Debug, Clone)]
pub struct PlainGraph {
    edges: Vec<[VertexId; 2]>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
    levels: Vec<u32>,
}

impl PlainGraph {
    pub fn new(vertex_count: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); vertex_count];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a as usize >= vertex_count || b as usize >= vertex_count || a == b {
                return Err(Error::Precondition(format!("bad edge ({a}, {b})")));
            }
            adj[a as usize].push((b, e as EdgeId));
            adj[b as usize].push((a, e as EdgeId));
        }
        for ns in &mut adj {
            ns.sort_unstable();
        }
        let mut levels = vec![u32::MAX; vertex_count];
        let mut queue = VecDeque::from([0u32]);
        levels[0] = 0;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &adj[v as usize] {
                if levels[u as usize] == u32::MAX {
                    levels[u as usize] = levels[v as usize] + 1;
                    queue.push_back(u);
                }
            }
        }
        if levels.contains(&u32::MAX) {
            return Err(Error::Precondition("graph is not connected".into()));
        }
        Ok(Self {
            edges: edges.iter().map(|&(a, b)| [a, b]).collect(),
            adj,
            levels,
        })
    }
}

impl Graph for PlainGraph {
    fn vertex_count(&self) -> usize {
        self.levels.len()
    }
    fn edge_count(&self) -> usize {
        self.edges.len()
    }
    fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v as usize]
    }
    fn level(&self, v: VertexId) -> u32 {
        self.levels[v as usize]
    }
    fn radius(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }
    fn edge(&self, e: EdgeId) -> [VertexId; 2] {
        self.edges[e as usize]
    }
}
