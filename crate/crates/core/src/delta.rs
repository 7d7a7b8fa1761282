//! Four-point hyperbolicity constant of a ball.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::{build_raw, CayleyBall, VertexId};
use crate::error::Result;
use crate::model::GraphModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DeltaMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub sample_size: u64,
    pub exhaustive: bool,
}

/// Half the gap between the two largest of the three pair sums.
#[inline]
pub fn four_point_defect(dxy: u32, dzw: u32, dxz: u32, dyw: u32, dxw: u32, dyz: u32) -> u32 {
    let mut s = [dxy + dzw, dxz + dyw, dxw + dyz];
    s.sort_unstable();
    s[2] - s[1]
}

/// Estimates delta over the valid vertices of the ball.
pub fn estimate_delta(ball: &CayleyBall, mode: DeltaMode) -> DeltaEstimate {
    let pool: Vec<VertexId> = (0..ball.vertex_count() as u32)
        .filter(|&v| ball.is_valid(v))
        .collect();
    estimate_delta_on(ball, &pool, mode)
}

/// Estimates delta over quadruples drawn from `pool`. Distances are taken
/// inside the ball, so the pool should consist of valid vertices.
pub fn estimate_delta_on(ball: &CayleyBall, pool: &[VertexId], mode: DeltaMode) -> DeltaEstimate {
    let n = pool.len();
    if n < 4 {
        return DeltaEstimate {
            delta: 0.0,
            sample_size: 0,
            exhaustive: matches!(mode, DeltaMode::Exhaustive),
        };
    }
    let dist: Vec<Vec<u32>> = pool
        .iter()
        .map(|&x| {
            let d = ball.bfs_distances(x, u32::MAX);
            pool.iter().map(|&y| d[y as usize]).collect()
        })
        .collect();
    let defect = |i: usize, j: usize, k: usize, l: usize| {
        four_point_defect(
            dist[i][j], dist[k][l], dist[i][k], dist[j][l], dist[i][l], dist[j][k],
        )
    };
    match mode {
        DeltaMode::Exhaustive => {
            let mut worst = 0;
            let mut count = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        for l in k + 1..n {
                            worst = worst.max(defect(i, j, k, l));
                            count += 1;
                        }
                    }
                }
            }
            DeltaEstimate {
                delta: f64::from(worst) / 2.0,
                sample_size: count,
                exhaustive: true,
            }
        }
        DeltaMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0;
            for _ in 0..count {
                let q: [usize; 4] = std::array::from_fn(|_| rng.gen_range(0..n));
                worst = worst.max(defect(q[0], q[1], q[2], q[3]));
            }
            DeltaEstimate {
                delta: f64::from(worst) / 2.0,
                sample_size: count as u64,
                exhaustive: false,
            }
        }
    }
}

/// Radius of the reference ball whose inner half feeds the padding estimate.
const PADDING_REFERENCE_RADIUS: u32 = 6;
const PADDING_SAMPLES: usize = 200_000;
const PADDING_SEED: u64 = 0x64_656c_7461;

/// Delta used for the validity padding: sampled four-point constant of the
/// vertices of level `<= 3`, with distances measured in the radius-6 ball
/// (geodesics between such vertices never leave it). Cached per model.
pub fn padding_delta(model: GraphModel) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<GraphModel, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&d) = cache.lock().unwrap().get(&model) {
        return Ok(d);
    }
    let d = if model.is_free() {
        0.0
    } else {
        let reference = build_raw(model, PADDING_REFERENCE_RADIUS, usize::MAX)?;
        let pool: Vec<VertexId> = (0..reference.ball_size(PADDING_REFERENCE_RADIUS / 2) as u32).collect();
        let mode = DeltaMode::Sampled {
            count: PADDING_SAMPLES,
            seed: PADDING_SEED,
        };
        estimate_delta_on(&reference, &pool, mode).delta
    };
    cache.lock().unwrap().insert(model, d);
    Ok(d)
}
