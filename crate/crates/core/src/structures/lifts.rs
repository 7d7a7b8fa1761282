use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::ball::{CayleyBall, EdgeId, VertexId};
use crate::error::{Error, Result};
use crate::fpp::{GeodesicTree, OmegaGeodesic, NO_EDGE};

/// Radius of the window `B_{eps n}(v)`.
pub fn window_radius(eps: f64, n: u32) -> u32 {
    (eps * f64::from(n)).floor().max(0.0) as u32
}

/// First edge on the tree path from the root to `v`.
pub fn root_branch(tree: &GeodesicTree, v: VertexId) -> Result<EdgeId> {
    tree.require_certified(v)?;
    if v == tree.root() {
        return Err(Error::Precondition("the root has no branch".into()));
    }
    let mut cur = v;
    let mut edge = NO_EDGE;
    while let Some(p) = tree.parent(cur) {
        edge = tree.parent_edge(cur).unwrap();
        cur = p;
    }
    Ok(edge)
}

/// True iff the window of radius `k` around `v` holds two vertices with
/// different root branches. `branches` comes from `GeodesicTree::root_branches`;
/// the root itself carries no branch and is skipped.
pub fn window_splits(ball: &CayleyBall, branches: &[EdgeId], v: VertexId, k: u32) -> bool {
    let mut seen = NO_EDGE;
    let mut check = |u: VertexId| {
        let b = branches[u as usize];
        if b == NO_EDGE {
            return false;
        }
        if seen == NO_EDGE {
            seen = b;
            false
        } else {
            b != seen
        }
    };
    match k {
        0 => false,
        1 => check(v) || ball.neighbors(v).iter().any(|&(u, _)| check(u)),
        _ => ball.ball_around(v, k).into_iter().any(check),
    }
}

fn require_window_certified(tree: &GeodesicTree, ball: &CayleyBall, v: VertexId, k: u32) -> Result<()> {
    match k {
        0 => tree.require_certified(v),
        _ => ball
            .ball_around(v, k)
            .into_iter()
            .try_for_each(|u| tree.require_certified(u)),
    }
}

/// `X_v`: whether `B_{eps n}(v)`, with `n = level(v)`, contains two
/// vertices whose omega-geodesics from the root are edge-disjoint.
pub fn exceptional_lift_indicator(
    tree: &GeodesicTree,
    ball: &CayleyBall,
    v: VertexId,
    eps: f64,
) -> Result<bool> {
    let k = window_radius(eps, ball.level(v));
    require_window_certified(tree, ball, v, k)?;
    let branches = tree.root_branches();
    Ok(window_splits(ball, &branches, v, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalLiftReport {
    pub n: u32,
    pub eps: f64,
    pub window: u32,
    #[serde(skip)]
    pub indicators: Vec<bool>,
    pub count: usize,
    pub fraction: f64,
}

/// Aggregates `X_v` over the sphere of radius `n`, with window radius
/// `window` (normally `window_radius(eps, n)`).
pub fn lift_fraction_with_window(
    tree: &GeodesicTree,
    ball: &CayleyBall,
    n: u32,
    eps: f64,
    window: u32,
) -> Result<ExceptionalLiftReport> {
    if n > ball.radius() || n == 0 {
        return Err(Error::Precondition(format!(
            "sphere {n} is empty or outside the radius-{} ball",
            ball.radius()
        )));
    }
    let reach = n + window;
    if let Some(v) =
        (0..ball.ball_size(reach.min(ball.radius())) as VertexId).find(|&v| !tree.is_certified(v))
    {
        return Err(Error::Uncertified(v));
    }
    let branches = tree.root_branches();
    let indicators: Vec<bool> = ball
        .sphere(n)
        .map(|v| window_splits(ball, &branches, v, window))
        .collect();
    let count = indicators.iter().filter(|&&x| x).count();
    Ok(ExceptionalLiftReport {
        n,
        eps,
        window,
        fraction: count as f64 / indicators.len() as f64,
        indicators,
        count,
    })
}

pub fn lift_fraction(
    tree: &GeodesicTree,
    ball: &CayleyBall,
    n: u32,
    eps: f64,
) -> Result<ExceptionalLiftReport> {
    lift_fraction_with_window(tree, ball, n, eps, window_radius(eps, n))
}

/// Number of sphere-`n` vertices with `X_v = 1`, from precomputed branches.
pub fn lift_count(ball: &CayleyBall, branches: &[EdgeId], n: u32, window: u32) -> usize {
    ball.sphere(n)
        .filter(|&v| window_splits(ball, branches, v, window))
        .count()
}

/// Whether the tree path from the root to `z` (level `2m`) misses the
/// window of radius `window` around the level-`m` vertex of the tie-broken
/// word geodesic from the root to `z`.
pub fn wandering_with_window(
    tree: &GeodesicTree,
    ball: &CayleyBall,
    z: VertexId,
    window: u32,
) -> Result<bool> {
    tree.require_certified(z)?;
    let level = ball.level(z);
    if !level.is_multiple_of(2) || level == 0 {
        return Err(Error::Precondition(format!(
            "wandering target must sit at a positive even level, got {level}"
        )));
    }
    let marker = ball.root_geodesic(z).vertices()[(level / 2) as usize];
    let near: HashSet<VertexId> = ball.ball_around(marker, window).into_iter().collect();
    let mut cur = z;
    loop {
        if near.contains(&cur) {
            return Ok(false);
        }
        match tree.parent(cur) {
            Some(p) => cur = p,
            None => return Ok(true),
        }
    }
}

/// Epsilon-wandering at scale `n = level(z) / 2`; true means atypical.
pub fn wandering_check(tree: &GeodesicTree, ball: &CayleyBall, z: VertexId, eps: f64) -> Result<bool> {
    let k = window_radius(eps, ball.level(z) / 2);
    wandering_with_window(tree, ball, z, k)
}

/// Where two geodesics first meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coalescence {
    pub vertex: VertexId,
    /// The two paths coincide from `vertex` to their ends.
    pub suffix_agrees: bool,
}

/// The earliest vertex of `g1` that also lies on `g2`.
pub fn coalescence_point(g1: &OmegaGeodesic, g2: &OmegaGeodesic) -> Option<Coalescence> {
    let on_second: std::collections::HashMap<VertexId, usize> =
        g2.path.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    g1.path.iter().enumerate().find_map(|(i, v)| {
        on_second.get(v).map(|&j| Coalescence {
            vertex: *v,
            suffix_agrees: g1.path[i..] == g2.path[j..],
        })
    })
}

/// For every reached vertex, the first vertex of level `r` on its tree path
/// from the root, or `VertexId::MAX` if the path never reaches level `r`.
pub fn first_hits(tree: &GeodesicTree, ball: &CayleyBall, r: u32) -> Vec<VertexId> {
    let mut hit = vec![VertexId::MAX; tree.vertex_count()];
    for &v in tree.order() {
        let inherited = tree.parent(v).map_or(VertexId::MAX, |p| hit[p as usize]);
        hit[v as usize] = if inherited == VertexId::MAX && ball.level(v) == r {
            v
        } else {
            inherited
        };
    }
    hit
}

/// Omega-shadows: fibres of the first-hit map from the certified part of
/// the sphere of radius `m` to the sphere of radius `r`.
pub fn omega_shadow(
    tree: &GeodesicTree,
    ball: &CayleyBall,
    r: u32,
    m: u32,
) -> Result<BTreeMap<VertexId, Vec<VertexId>>> {
    if r >= m || m > ball.radius() {
        return Err(Error::Precondition(format!(
            "omega shadows need r < m <= radius, got r={r}, m={m}, radius={}",
            ball.radius()
        )));
    }
    let hit = first_hits(tree, ball, r);
    let mut fibres: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for z in ball.sphere(m) {
        if !tree.is_certified(z) {
            continue;
        }
        let h = hit[z as usize];
        if h == VertexId::MAX {
            return Err(Error::Precondition(format!(
                "tree path to {z} never reaches level {r}"
            )));
        }
        fibres.entry(h).or_default().push(z);
    }
    Ok(fibres)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpp::{sample_weights, tree_in_scope, OmegaSample, Scope, WeightDistribution};
    use crate::model::GraphModel;
    use crate::words::parse_word;

    fn free_tree(radius: u32, seed: u64) -> (CayleyBall, GeodesicTree) {
        let ball = CayleyBall::build(GraphModel::FreeGroup { rank: 2 }, radius).unwrap();
        let omega = sample_weights(&ball, WeightDistribution::default(), seed, 0);
        let tree = tree_in_scope(&ball, &omega, 0, Scope::Ball, None);
        (ball, tree)
    }

    fn vertex(ball: &CayleyBall, word: &str) -> VertexId {
        ball.follow_word(0, &parse_word(word, 4).unwrap()).unwrap()
    }

    #[test]
    fn root_branch_in_free_group() {
        let (ball, tree) = free_tree(4, 1);
        let a = vertex(&ball, "a");
        let aab = vertex(&ball, "aab");
        let first = ball.edge_between(0, a).unwrap();
        assert_eq!(root_branch(&tree, a).unwrap(), first);
        assert_eq!(root_branch(&tree, aab).unwrap(), first);
        assert!(root_branch(&tree, 0).is_err());
    }

    #[test]
    fn free_group_has_no_lifts_or_wandering() {
        let (ball, tree) = free_tree(6, 2);
        for n in 1..=6 {
            let report = lift_fraction(&tree, &ball, n, 0.5).unwrap();
            assert_eq!(report.count, 0);
            assert_eq!(report.fraction, 0.0);
        }
        for z in ball.sphere(6) {
            assert!(!wandering_check(&tree, &ball, z, 0.25).unwrap());
            assert!(!wandering_check(&tree, &ball, z, 0.0).unwrap());
        }
    }

    #[test]
    fn zero_window_never_splits() {
        let ball = CayleyBall::build(GraphModel::Tessellation { p: 8, q: 8 }, 3).unwrap();
        let omega = sample_weights(&ball, WeightDistribution::default(), 4, 0);
        let tree = tree_in_scope(&ball, &omega, 0, Scope::Ball, None);
        for v in ball.sphere(3) {
            assert!(!exceptional_lift_indicator(&tree, &ball, v, 0.0).unwrap());
        }
    }

    #[test]
    fn hand_made_split_on_the_octagon_tiling() {
        // a root octagon closes at a level-4 vertex t with neighbours a3, b3
        // on different root edges; a cheap b-side makes a3 hang off t
        let ball = CayleyBall::build(GraphModel::Tessellation { p: 8, q: 8 }, 4).unwrap();
        let (t, a3, b3) = ball
            .sphere(4)
            .find_map(|t| {
                let down: Vec<VertexId> = ball
                    .neighbors(t)
                    .iter()
                    .map(|&(u, _)| u)
                    .filter(|&u| ball.level(u) == 3)
                    .collect();
                (down.len() == 2
                    && ball.root_geodesic(down[0]).vertices()[1] != ball.root_geodesic(down[1]).vertices()[1])
                    .then(|| (t, down[0], down[1]))
            })
            .unwrap();
        let mut weights = vec![1.0; ball.edge_count()];
        let mut cheap = ball.root_geodesic(b3).vertices().to_vec();
        cheap.push(t);
        for w in cheap.windows(2) {
            weights[ball.edge_between(w[0], w[1]).unwrap() as usize] = 0.01;
        }
        let omega = OmegaSample::from_weights(weights).unwrap();
        let tree = tree_in_scope(&ball, &omega, 0, Scope::Ball, None);
        assert_eq!(tree.parent(a3), Some(t));
        let a2 = ball.root_geodesic(a3).vertices()[2];
        assert!(exceptional_lift_indicator(&tree, &ball, a2, 0.5).unwrap());
        assert!(!exceptional_lift_indicator(&tree, &ball, a2, 0.0).unwrap());
    }

    #[test]
    fn coalescence_examples() {
        // diamond root=0, x=1, y=2, z=3
        let g1 = OmegaGeodesic {
            path: vec![0, 1, 3],
            total_weight: 0.7,
        };
        let g2 = OmegaGeodesic {
            path: vec![2, 3],
            total_weight: 0.4,
        };
        assert_eq!(
            coalescence_point(&g1, &g2),
            Some(Coalescence {
                vertex: 3,
                suffix_agrees: true
            })
        );
        assert_eq!(
            coalescence_point(&g1, &g1),
            Some(Coalescence {
                vertex: 0,
                suffix_agrees: true
            })
        );
        let g3 = OmegaGeodesic {
            path: vec![0, 2, 3],
            total_weight: 0.8,
        };
        assert_eq!(
            coalescence_point(&g1, &g3),
            Some(Coalescence {
                vertex: 0,
                suffix_agrees: false
            })
        );
    }

    #[test]
    fn free_group_omega_shadows_are_subtrees() {
        let (ball, tree) = free_tree(4, 3);
        let fibres = omega_shadow(&tree, &ball, 1, 3).unwrap();
        assert_eq!(fibres.len(), 4);
        assert!(fibres.values().all(|f| f.len() == 9));
        let fibres = omega_shadow(&tree, &ball, 1, 4).unwrap();
        assert!(fibres.values().all(|f| f.len() == 27));
    }

    #[test]
    fn omega_shadows_partition_the_sphere() {
        let ball = CayleyBall::build(GraphModel::Tessellation { p: 8, q: 8 }, 5).unwrap();
        let omega = sample_weights(&ball, WeightDistribution::default(), 11, 0);
        let tree = tree_in_scope(&ball, &omega, 0, Scope::Ball, None);
        let fibres = omega_shadow(&tree, &ball, 2, 5).unwrap();
        let mut all: Vec<VertexId> = fibres.values().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, ball.sphere(5).collect::<Vec<_>>());
        assert!(fibres.keys().all(|&h| ball.level(h) == 2));
        assert!(omega_shadow(&tree, &ball, 3, 3).is_err());
    }
}
