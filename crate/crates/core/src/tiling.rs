//! Layered combinatorial construction of `{p,q}` tilings.
//!
//! The built region is always a topological disc bounded by a simple
//! cycle. Each boundary vertex carries the number of tiles already placed
//! around it; a boundary vertex is "full" when it already has `q` edges,
//! i.e. exactly one tile is still missing there. Attaching a tile to a
//! boundary edge walks through full vertices on both sides (the new tile
//! must contain every edge at such a vertex), closes the tile with
//! `p - contact` fresh edges, and splices the boundary.
//!
//! Vertices are completed in breadth-first order from the centre, so when
//! a vertex of level `l` is popped every vertex of level `< l` already has
//! its full star and the discovered levels are true graph distances.

use std::collections::VecDeque;

use crate::ball::Adjacency;
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Output of the construction, restricted to levels `<= radius` and
/// relabelled in breadth-first discovery order.
#[derive(Debug, Clone)]
pub(crate) struct TilingBall {
    pub levels: Vec<u32>,
    /// Neighbour lists in breadth-first ids; only neighbours inside the ball.
    pub neighbors: Adjacency,
}

struct Builder {
    p: u32,
    q: u32,
    /// `q` neighbour slots per vertex, `deg` of them used.
    slots: Vec<u32>,
    deg: Vec<u8>,
    tiles: Vec<u32>,
    next: Vec<u32>,
    prev: Vec<u32>,
    cap: usize,
}

impl Builder {
    fn new(p: u32, q: u32, cap: usize) -> Self {
        let mut b = Builder {
            p,
            q,
            slots: Vec::new(),
            deg: Vec::new(),
            tiles: Vec::new(),
            next: Vec::new(),
            prev: Vec::new(),
            cap,
        };
        // seed: one tile, vertex 0 is the centre
        let first: Vec<u32> = (0..p).map(|_| b.fresh(1)).collect();
        for i in 0..p as usize {
            let (u, v) = (first[i], first[(i + 1) % p as usize]);
            b.link(u, v).expect("seed tile fits");
            b.next[u as usize] = v;
            b.prev[v as usize] = u;
        }
        b
    }

    fn fresh(&mut self, tiles: u32) -> u32 {
        let id = self.deg.len() as u32;
        self.slots.extend(std::iter::repeat_n(NONE, self.q as usize));
        self.deg.push(0);
        self.tiles.push(tiles);
        self.next.push(NONE);
        self.prev.push(NONE);
        id
    }

    fn vertex_count(&self) -> usize {
        self.deg.len()
    }

    fn star(&self, v: u32) -> &[u32] {
        let start = v as usize * self.q as usize;
        &self.slots[start..start + self.deg[v as usize] as usize]
    }

    fn push_neighbor(&mut self, u: u32, v: u32) -> Result<()> {
        let d = self.deg[u as usize] as usize;
        if d == self.q as usize {
            return Err(construction_error(self.p, self.q, "vertex overfull"));
        }
        self.slots[u as usize * self.q as usize + d] = v;
        self.deg[u as usize] += 1;
        Ok(())
    }

    fn link(&mut self, u: u32, v: u32) -> Result<()> {
        self.push_neighbor(u, v)?;
        self.push_neighbor(v, u)
    }

    fn on_boundary(&self, v: u32) -> bool {
        self.next[v as usize] != NONE
    }

    fn full(&self, v: u32) -> bool {
        u32::from(self.deg[v as usize]) == self.q
    }

    /// Attaches the tile lying outside the boundary edge `(a, next[a])`.
    fn attach(&mut self, a: u32) -> Result<()> {
        let mut l = a;
        let mut r = self.next[a as usize];
        let mut contact = 1u32;
        while self.full(l) {
            l = self.prev[l as usize];
            contact += 1;
            if l == r {
                return Err(construction_error(self.p, self.q, "boundary closed up"));
            }
        }
        while self.full(r) {
            r = self.next[r as usize];
            contact += 1;
            if l == r {
                return Err(construction_error(self.p, self.q, "boundary closed up"));
            }
        }
        if contact >= self.p {
            return Err(construction_error(self.p, self.q, "tile contact exceeds p - 1"));
        }
        if self.vertex_count() + self.p as usize > self.cap {
            return Err(Error::ResourceLimit {
                radius: 0,
                cap: self.cap,
            });
        }
        // path l -> ... -> r along the old boundary gets one more tile;
        // strictly interior contact vertices leave the boundary
        let mut v = l;
        loop {
            self.tiles[v as usize] += 1;
            if v == r {
                break;
            }
            let n = self.next[v as usize];
            if v != l {
                self.next[v as usize] = NONE;
                self.prev[v as usize] = NONE;
            }
            v = n;
        }
        // new outer path r -> x_1 -> ... -> x_{k} -> l, with p - contact edges
        let fresh_count = self.p - contact - 1;
        let mut last = r;
        let mut outer = Vec::with_capacity(fresh_count as usize);
        for _ in 0..fresh_count {
            let x = self.fresh(1);
            self.link(last, x)?;
            outer.push(x);
            last = x;
        }
        if self.star(last).contains(&l) {
            return Err(construction_error(self.p, self.q, "closing edge already present"));
        }
        self.link(last, l)?;
        // boundary now runs l -> x_k -> ... -> x_1 -> r
        let mut cur = l;
        for &x in outer.iter().rev() {
            self.next[cur as usize] = x;
            self.prev[x as usize] = cur;
            cur = x;
        }
        self.next[cur as usize] = r;
        self.prev[r as usize] = cur;
        for &x in [l, r].iter() {
            if self.tiles[x as usize] > self.q {
                return Err(construction_error(self.p, self.q, "vertex overfull"));
            }
        }
        Ok(())
    }

    /// Adds tiles around `v` until it is interior.
    fn complete(&mut self, v: u32) -> Result<()> {
        let mut guard = 0;
        while self.on_boundary(v) {
            self.attach(v)?;
            guard += 1;
            if guard > 2 * self.q {
                return Err(construction_error(self.p, self.q, "vertex did not close"));
            }
        }
        if !self.full(v) || self.tiles[v as usize] != self.q {
            return Err(construction_error(
                self.p,
                self.q,
                "interior vertex with wrong star",
            ));
        }
        Ok(())
    }
}

fn construction_error(p: u32, q: u32, what: &str) -> Error {
    Error::InvalidModel(format!("{{{p},{q}}} construction failed: {what}"))
}

/// Builds the radius-`radius` ball around a vertex of the `{p,q}` tiling.
pub(crate) fn build_tiling_ball(p: u32, q: u32, radius: u32, cap: usize) -> Result<TilingBall> {
    let mut b = Builder::new(p, q, cap.saturating_mul(4).max(64));
    // odd p has same-level edges, so the outer sphere must be completed too
    let complete_through = if p.is_multiple_of(2) {
        radius.checked_sub(1)
    } else {
        Some(radius)
    };

    let mut level: Vec<u32> = vec![NONE; b.vertex_count()];
    let mut order: Vec<u32> = Vec::new();
    let mut queue = VecDeque::new();
    level[0] = 0;
    queue.push_back(0u32);
    while let Some(v) = queue.pop_front() {
        let lv = level[v as usize];
        order.push(v);
        if order.len() > cap {
            return Err(Error::ResourceLimit { radius, cap });
        }
        if complete_through.is_none_or(|c| lv > c) {
            continue;
        }
        b.complete(v).map_err(|e| match e {
            Error::ResourceLimit { .. } => Error::ResourceLimit { radius, cap },
            other => other,
        })?;
        if level.len() < b.vertex_count() {
            level.resize(b.vertex_count(), NONE);
        }
        // discovery order: neighbours in creation order
        let mut nbrs = b.star(v).to_vec();
        nbrs.sort_unstable();
        for u in nbrs {
            if level[u as usize] == NONE {
                level[u as usize] = lv + 1;
                queue.push_back(u);
            }
        }
    }

    let mut new_id = vec![NONE; b.vertex_count()];
    let mut kept = Vec::new();
    for &v in &order {
        if level[v as usize] <= radius {
            new_id[v as usize] = kept.len() as u32;
            kept.push(v);
        }
    }
    let levels = kept.iter().map(|&v| level[v as usize]).collect();
    let mut neighbors = Adjacency::with_capacity(kept.len(), kept.len() * q as usize);
    let mut ns = Vec::with_capacity(q as usize);
    for &v in &kept {
        ns.clear();
        ns.extend(
            b.star(v)
                .iter()
                .map(|&u| new_id[u as usize])
                .filter(|&u| u != NONE),
        );
        ns.sort_unstable();
        neighbors.push(&ns);
    }
    Ok(TilingBall { levels, neighbors })
}
