use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::EdgeId;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Atomless, exponentially tailed edge-weight laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDistribution {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
}

impl Default for WeightDistribution {
    fn default() -> Self {
        WeightDistribution::Exponential { rate: 1.0 }
    }
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightDistribution::Exponential { rate } if rate > 0.0 && rate.is_finite() => Ok(()),
            WeightDistribution::Uniform { a, b } if 0.0 <= a && a < b && b.is_finite() => Ok(()),
            other => Err(Error::Config(format!("invalid weight distribution {other:?}"))),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            WeightDistribution::Exponential { rate } => 1.0 / rate,
            WeightDistribution::Uniform { a, b } => (a + b) / 2.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            WeightDistribution::Exponential { rate } => 1.0 / (rate * rate),
            WeightDistribution::Uniform { a, b } => (b - a) * (b - a) / 12.0,
        }
    }

    /// Quantile transform of a uniform draw in the open interval (0, 1).
    #[inline]
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            WeightDistribution::Exponential { rate } => -(1.0 - u).ln() / rate,
            WeightDistribution::Uniform { a, b } => a + (b - a) * u,
        }
    }
}

/// Counter-based stream: the draw for edge `e` is word `e` of the ChaCha8
/// stream selected by `replication_index`, under a key derived from the
/// master seed. Sequential and random-access generation agree exactly.
#[derive(Debug, Clone)]
pub struct EdgeStream {
    rng: ChaCha8Rng,
}

impl EdgeStream {
    pub fn new(master_seed: u64, replication_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(replication_index);
        rng.set_word_pos(0);
        Self { rng }
    }

    /// Uniform draw in (0, 1) for `edge`, independent of call order.
    pub fn uniform_at(&mut self, edge: EdgeId) -> f64 {
        self.rng.set_word_pos(2 * u128::from(edge));
        to_open_unit(self.rng.next_u64())
    }

    /// Uniform draws for edges `0..n` in order.
    pub fn uniforms(&mut self, n: usize) -> Vec<f64> {
        self.rng.set_word_pos(0);
        (0..n).map(|_| to_open_unit(self.rng.next_u64())).collect()
    }
}

#[inline]
fn to_open_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// One realization of i.i.d. edge weights on a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSample {
    weights: Vec<f64>,
    pub master_seed: u64,
    pub replication_index: u64,
    pub distribution: WeightDistribution,
}

impl OmegaSample {
    pub fn weight(&self, e: EdgeId) -> f64 {
        self.weights[e as usize]
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    /// Weights chosen by hand, for small worked examples and tests.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some((e, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            return Err(Error::Precondition(format!(
                "edge {e} has non-positive weight {w}"
            )));
        }
        Ok(Self {
            weights,
            master_seed: 0,
            replication_index: 0,
            distribution: WeightDistribution::default(),
        })
    }
}

/// Draws per-edge weights keyed on `(master_seed, replication_index, edge id)`.
pub fn sample_weights<G: Graph + ?Sized>(
    ball: &G,
    distribution: WeightDistribution,
    master_seed: u64,
    replication_index: u64,
) -> OmegaSample {
    let mut stream = EdgeStream::new(master_seed, replication_index);
    let weights = stream
        .uniforms(ball.edge_count())
        .into_iter()
        .map(|u| distribution.quantile(u))
        .collect();
    OmegaSample {
        weights,
        master_seed,
        replication_index,
        distribution,
    }
}
