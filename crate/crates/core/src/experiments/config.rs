use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpp::{Scope, WeightDistribution};
use crate::model::GraphModel;
use crate::structures::DisjointStrategy;

/// One experiment run, mapped one-to-one from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(with = "model_spec")]
    pub model: GraphModel,
    pub radius: u32,
    #[serde(default)]
    pub distribution: WeightDistribution,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub replications: u32,
    pub master_seed: u64,
    #[serde(default = "default_scope")]
    pub scope: Scope,
    #[serde(default = "default_draws")]
    pub bootstrap_draws: usize,
    #[serde(flatten)]
    pub params: ExperimentParams,
}

fn default_eps() -> f64 {
    0.2
}

fn default_scope() -> Scope {
    Scope::Ball
}

fn default_draws() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "params", rename_all = "kebab-case")]
pub enum ExperimentParams {
    RTail(RTailParams),
    ExceptionalFraction(ExceptionalParams),
    Wandering(WanderingParams),
    Coalescence(CoalescenceParams),
    Multiplicity(MultiplicityParams),
    DensityProbe(DensityParams),
}

impl ExperimentParams {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentParams::RTail(_) => "r-tail",
            ExperimentParams::ExceptionalFraction(_) => "exceptional-fraction",
            ExperimentParams::Wandering(_) => "wandering",
            ExperimentParams::Coalescence(_) => "coalescence",
            ExperimentParams::Multiplicity(_) => "multiplicity",
            ExperimentParams::DensityProbe(_) => "density-probe",
        }
    }
}

pub const EXPERIMENT_NAMES: [&str; 6] = [
    "r-tail",
    "exceptional-fraction",
    "wandering",
    "coalescence",
    "multiplicity",
    "density-probe",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RTailParams {
    pub c: u32,
    /// Number of sphere vertices drawn; all pairs among them are candidates.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default = "default_pair_budget")]
    pub pair_budget: usize,
    /// Sphere the pairs are drawn from; defaults to the outer sphere.
    #[serde(default)]
    pub level: Option<u32>,
}

fn default_candidates() -> usize {
    5
}

fn default_pair_budget() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExceptionalParams {
    pub n_values: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WanderingParams {
    pub m_values: Vec<u32>,
    #[serde(default = "default_targets")]
    pub targets: usize,
}

fn default_targets() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoalescenceParams {
    /// Vertex ids of the two sources.
    #[serde(default = "default_sources")]
    pub sources: [u32; 2],
    pub levels: Vec<u32>,
    #[serde(default = "default_targets_per_level")]
    pub targets_per_level: usize,
}

fn default_sources() -> [u32; 2] {
    [1, 2]
}

fn default_targets_per_level() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplicityParams {
    /// Position of the axis endpoint within the outer sphere of the ball.
    pub axis_offset: u32,
    pub inner: u32,
    pub outer: u32,
    pub cone_eps: f64,
    pub k_max: usize,
    #[serde(default = "default_strategy")]
    pub strategy: DisjointStrategy,
}

fn default_strategy() -> DisjointStrategy {
    DisjointStrategy::GreedySwap
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub coarse: u32,
    pub fine: u32,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let config: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn experiment(&self) -> &'static str {
        self.params.name()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.model.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.distribution.validate()?;
        if self.radius == 0 {
            return bad("radius must be positive".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        let within = |what: &str, l: u32| {
            if l == 0 || l > self.radius {
                Err(Error::Config(format!(
                    "{what} {l} must lie in 1..={}",
                    self.radius
                )))
            } else {
                Ok(())
            }
        };
        match &self.params {
            ExperimentParams::RTail(p) => {
                within("pair level", p.level.unwrap_or(self.radius))?;
                if p.candidates < 2 || p.pair_budget == 0 {
                    return bad("r-tail needs at least 2 candidates and a positive pair budget".into());
                }
            }
            ExperimentParams::ExceptionalFraction(p) => {
                if p.n_values.is_empty() {
                    return bad("n_values is empty".into());
                }
                for &n in &p.n_values {
                    within("n", n)?;
                }
            }
            ExperimentParams::Wandering(p) => {
                if p.m_values.is_empty() || p.targets == 0 {
                    return bad("wandering needs m_values and targets".into());
                }
                for &m in &p.m_values {
                    within("2m", 2 * m)?;
                }
            }
            ExperimentParams::Coalescence(p) => {
                if p.levels.is_empty() || p.targets_per_level == 0 {
                    return bad("coalescence needs levels and targets".into());
                }
                for &m in &p.levels {
                    within("target level", m)?;
                }
            }
            ExperimentParams::Multiplicity(p) => {
                if !(p.inner < p.outer && p.outer <= self.radius) {
                    return bad(format!(
                        "slab needs inner < outer <= radius, got {} / {}",
                        p.inner, p.outer
                    ));
                }
                if p.k_max == 0 || !(p.cone_eps >= 0.0) {
                    return bad("k_max must be positive and cone_eps nonnegative".into());
                }
            }
            ExperimentParams::DensityProbe(p) => {
                within("fine radius", p.fine)?;
                if p.coarse == 0 || p.coarse >= p.fine {
                    return bad(format!(
                        "density probe needs 0 < coarse < fine, got {} / {}",
                        p.coarse, p.fine
                    ));
                }
            }
        }
        Ok(())
    }
}

mod model_spec {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::model::GraphModel;

    pub fn serialize<S: Serializer>(m: &GraphModel, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(m)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GraphModel, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R_TAIL: &str = r#"
model = "tess:8,8"
radius = 6
replications = 20
master_seed = 42
experiment = "r-tail"

[distribution]
kind = "exponential"
rate = 1.0

[params]
c = 2
"#;

    #[test]
    fn parses_and_round_trips() {
        let config = ExperimentConfig::from_toml_str(R_TAIL).unwrap();
        assert_eq!(config.model, GraphModel::Tessellation { p: 8, q: 8 });
        assert_eq!(config.scope, Scope::Ball);
        assert_eq!(config.bootstrap_draws, 1000);
        let ExperimentParams::RTail(p) = &config.params else {
            panic!("wrong experiment")
        };
        assert_eq!((p.c, p.candidates, p.pair_budget), (2, 5, 10));
        let again = ExperimentConfig::from_toml_str(&config.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn master_seed_is_mandatory() {
        let text = R_TAIL.replace("master_seed = 42\n", "");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("replications = 20", "replications = 0"),
            ("radius = 6", "radius = 0"),
            ("tess:8,8", "tess:3,3"),
            ("experiment = \"r-tail\"", "experiment = \"nope\""),
            ("c = 2", "c = 2\nlevel = 9"),
        ] {
            let text = R_TAIL.replace(from, to);
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn density_probe_needs_coarse_below_fine() {
        let text = r#"
model = "free:2"
radius = 5
replications = 1
master_seed = 1
experiment = "density-probe"
[params]
coarse = 3
fine = 3
"#;
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }
}
