use std::collections::{BTreeMap, VecDeque};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::{CayleyBall, VertexId};
use crate::error::{Error, Result};
use crate::fpp::{EscapeMap, FppEngine, OmegaGeodesic, OmegaSample, Scope};

/// Breadth-first distances inside the ball, saturating at 255.
fn bfs_u8(ball: &CayleyBall, x: VertexId) -> Vec<u8> {
    let mut dist = vec![u8::MAX; ball.vertex_count()];
    let mut queue = VecDeque::from([x]);
    dist[x as usize] = 0;
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize].saturating_add(1);
        for &(u, _) in ball.neighbors(v) {
            if dist[u as usize] == u8::MAX {
                dist[u as usize] = d;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// One candidate pair with its word-metric data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairInfo {
    pub x: VertexId,
    pub y: VertexId,
    pub distance: u32,
    /// Smallest level of a vertex on some word geodesic from `x` to `y`;
    /// the pair is eligible for window `C` iff `reach <= C`.
    pub reach: u32,
}

/// A fixed, omega-independent family of sphere pairs. Distances are
/// measured inside the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFamily {
    pub level: u32,
    pub candidates: Vec<VertexId>,
    pub pairs: Vec<PairInfo>,
}

impl PairFamily {
    /// All pairs among `count` vertices drawn without replacement from the
    /// sphere of radius `level`.
    pub fn sample(ball: &CayleyBall, level: u32, count: usize, seed: u64) -> Result<Self> {
        if level > ball.radius() {
            return Err(Error::Precondition(format!(
                "pair level {level} exceeds radius {}",
                ball.radius()
            )));
        }
        let sphere = ball.sphere(level);
        let size = sphere.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let candidates: Vec<VertexId> = sample(&mut rng, size, count.min(size))
            .into_iter()
            .map(|i| sphere.start + i as VertexId)
            .collect();
        Ok(Self::from_candidates(ball, level, candidates))
    }

    pub fn from_candidates(ball: &CayleyBall, level: u32, candidates: Vec<VertexId>) -> Self {
        let dists: Vec<Vec<u8>> = candidates.iter().map(|&x| bfs_u8(ball, x)).collect();
        let mut pairs = Vec::new();
        for i in 0..candidates.len() {
            for j in i + 1..candidates.len() {
                let (dx, dy) = (&dists[i], &dists[j]);
                let y = candidates[j];
                let distance = u32::from(dx[y as usize]);
                // vertices are sorted by level, so the first hit is the lowest
                let reach = (0..ball.vertex_count())
                    .find(|&c| u32::from(dx[c]) + u32::from(dy[c]) == distance)
                    .map(|c| ball.level(c as VertexId))
                    .expect("endpoints lie on their own geodesic");
                pairs.push(PairInfo {
                    x: candidates[i],
                    y,
                    distance,
                    reach,
                });
            }
        }
        Self {
            level,
            candidates,
            pairs,
        }
    }

    /// Pairs eligible for window `c`, at most `budget`, largest reach
    /// first (ties in family order). Low-reach pairs rarely set the
    /// maximum, so they are the first to go.
    pub fn eligible(&self, c: u32, budget: usize) -> Vec<PairInfo> {
        let mut pairs: Vec<PairInfo> = self.pairs.iter().filter(|p| p.reach <= c).copied().collect();
        pairs.sort_by_key(|p| std::cmp::Reverse(p.reach));
        pairs.truncate(budget);
        pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusStatistic {
    pub c: u32,
    pub r_value: u32,
    pub pairs_tested: usize,
}

/// Smallest level on the omega-geodesic of each pair, grouped by first
/// endpoint so one search serves several pairs.
pub fn geodesic_depths(
    engine: &FppEngine<'_, CayleyBall>,
    omega: &OmegaSample,
    pairs: &[PairInfo],
    scope: Scope,
    escape: Option<&EscapeMap>,
) -> Result<Vec<u32>> {
    let ball = engine.graph();
    let depth = |g: &OmegaGeodesic| g.path.iter().map(|&v| ball.level(v)).min().unwrap();
    let mut out = vec![0; pairs.len()];
    let mut by_source: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_source.entry(p.x).or_default().push(i);
    }
    for (x, idx) in by_source {
        match scope {
            Scope::Ball => {
                let targets: Vec<VertexId> = idx.iter().map(|&i| pairs[i].y).collect();
                for (&i, g) in idx.iter().zip(engine.paths_from(omega, x, &targets)) {
                    out[i] = depth(&g);
                }
            }
            Scope::Infinite => {
                for &i in &idx {
                    let g = engine.geodesic(omega, x, pairs[i].y, Scope::Infinite, escape)?;
                    out[i] = depth(&g);
                }
            }
        }
    }
    Ok(out)
}

/// Lower bound for `R(omega)` at window `c`: the largest distance from the
/// root to the omega-geodesic of an eligible pair.
pub fn r_omega_on_family(
    engine: &FppEngine<'_, CayleyBall>,
    omega: &OmegaSample,
    family: &PairFamily,
    c: u32,
    pair_budget: usize,
    scope: Scope,
) -> Result<RadiusStatistic> {
    let pairs = family.eligible(c, pair_budget);
    if pairs.is_empty() {
        return Err(Error::NoEligiblePair(c));
    }
    let escape = (scope == Scope::Infinite).then(|| EscapeMap::new(engine.graph(), omega));
    let depths = geodesic_depths(engine, omega, &pairs, scope, escape.as_ref())?;
    Ok(RadiusStatistic {
        c,
        r_value: depths.into_iter().max().unwrap(),
        pairs_tested: pairs.len(),
    })
}

/// Convenience form drawing its own pair family from the outer sphere.
pub fn r_omega_estimate(
    engine: &FppEngine<'_, CayleyBall>,
    omega: &OmegaSample,
    c: u32,
    pair_budget: usize,
    seed: u64,
) -> Result<RadiusStatistic> {
    let ball = engine.graph();
    let count = ((2 * pair_budget) as f64).sqrt().ceil() as usize + 2;
    let family = PairFamily::sample(ball, ball.radius(), count, seed)?;
    r_omega_on_family(engine, omega, &family, c, pair_budget, Scope::Ball)
}

/// `M(C)` for each requested window, using every pair of the family; the
/// families are nested in `C`, so the profile is nondecreasing.
pub fn properness_profile(
    engine: &FppEngine<'_, CayleyBall>,
    omega: &OmegaSample,
    family: &PairFamily,
    c_values: &[u32],
) -> Result<BTreeMap<u32, u32>> {
    let depths = geodesic_depths(engine, omega, &family.pairs, Scope::Ball, None)?;
    c_values
        .iter()
        .map(|&c| {
            family
                .pairs
                .iter()
                .zip(&depths)
                .filter(|(p, _)| p.reach <= c)
                .map(|(_, &d)| d)
                .max()
                .map(|m| (c, m))
                .ok_or(Error::NoEligiblePair(c))
        })
        .collect()
}
