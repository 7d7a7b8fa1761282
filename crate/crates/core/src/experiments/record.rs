use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ball::CayleyBall;
use crate::error::Result;
use crate::experiments::config::ExperimentConfig;
use crate::experiments::fit::{fit_exponential_rate, BootstrapCi, RateFit, TailEstimate};

pub const RECORD_SCHEMA: &str = "hypfpp-record/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A run fails when more than this fraction of replications fail.
pub const FAILURE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSummary {
    pub model: String,
    pub radius: u32,
    pub vertices: usize,
    pub edges: usize,
    pub sphere_sizes: Vec<usize>,
    /// Slope of `ln |S_l|` against `l` over the nonempty spheres past the
    /// root; the measured volume entropy.
    pub growth_rate: Option<f64>,
    pub padding: u32,
}

impl BallSummary {
    pub fn of(ball: &CayleyBall) -> Self {
        let sphere_sizes = ball.sphere_sizes();
        let points: Vec<(f64, f64)> = sphere_sizes
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, &s)| (l as f64, 1.0 / s as f64))
            .collect();
        Self {
            model: ball.model().to_string(),
            radius: ball.radius(),
            vertices: ball.vertex_count(),
            edges: ball.edge_count(),
            growth_rate: fit_exponential_rate(&points).ok().map(|f| f.rate),
            sphere_sizes,
            padding: ball.padding(),
        }
    }
}

/// What one replication measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    Radius {
        r_value: u32,
        pairs_tested: usize,
    },
    /// One value per scale of the experiment.
    Fractions {
        values: Vec<f64>,
    },
    Coalescence {
        /// Per target level: how many target pairs met before the target.
        coalesced: Vec<usize>,
        targets: usize,
        /// Per target level: level of each meeting point.
        depths: Vec<Vec<u32>>,
    },
    Count {
        count: usize,
    },
    Density {
        cells: usize,
        hit_cells: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok(Statistic),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: u32,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub scale: u32,
    pub window: u32,
    pub mean: f64,
    pub std_err: f64,
    pub population: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: u32,
    pub probability: f64,
    pub std_err: f64,
    pub trials: usize,
    pub mean_depth: f64,
    /// `(level, count)` pairs in increasing level.
    pub depth_histogram: Vec<(u32, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Aggregate {
    RTail {
        c: u32,
        pairs: usize,
        /// `(R, count)` pairs in increasing `R`.
        histogram: Vec<(u32, usize)>,
        tail: TailEstimate,
    },
    Scales {
        /// `n` for lift fractions, `m` for wandering.
        scale: String,
        rows: Vec<ScaleRow>,
        fit: Option<RateFit>,
        ci: Option<BootstrapCi>,
    },
    Coalescence {
        sources: [u32; 2],
        source_distance: u32,
        rows: Vec<LevelRow>,
    },
    Multiplicity {
        min_cut: usize,
        inner_size: usize,
        outer_size: usize,
        k_max: usize,
        /// `P(count >= k)` for `k = 1..=k_max`.
        at_least: Vec<f64>,
    },
    Density {
        coarse: u32,
        fine: u32,
        mean_cells: f64,
        mean: f64,
        std_err: f64,
        ci: [f64; 2],
    },
}

/// Run metadata kept out of the content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub master_seed: u64,
    pub workers: usize,
    pub wall_time_secs: f64,
    pub started_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub ball: BallSummary,
    pub replications: Vec<Replication>,
    pub failed: usize,
    pub failure_limit_exceeded: bool,
    pub flags: Vec<String>,
    pub aggregate: Option<Aggregate>,
    pub provenance: Provenance,
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Format(e.to_string())
}

/// One plotted curve: data columns of a table and an optional fitted
/// exponential `exp(-(intercept + rate x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotCurve {
    pub table: String,
    pub x: String,
    pub y: String,
    pub fit: Option<RateFit>,
}

impl ExperimentRecord {
    pub fn successes(&self) -> impl Iterator<Item = (u32, &Statistic)> {
        self.replications.iter().filter_map(|r| match &r.outcome {
            Outcome::Ok(s) => Some((r.index, s)),
            Outcome::Failed(_) => None,
        })
    }

    /// The record as JSON without the provenance block.
    pub fn content_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("provenance");
        }
        Ok(serde_json::to_string(&value)?)
    }

    /// SHA-256 of the content JSON, hex encoded.
    pub fn content_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.content_json()?.as_bytes())))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn tables(&self) -> Vec<Table> {
        let Some(aggregate) = &self.aggregate else {
            return Vec::new();
        };
        match aggregate {
            Aggregate::RTail { histogram, tail, .. } => {
                let mut surv = Table::new("survival", &["x", "survival"]);
                for (x, s) in tail.support.iter().zip(&tail.survival) {
                    surv.push(vec![x.to_string(), s.to_string()]);
                }
                let mut hist = Table::new("histogram", &["r_value", "count"]);
                for (r, c) in histogram {
                    hist.push(vec![r.to_string(), c.to_string()]);
                }
                vec![surv, hist]
            }
            Aggregate::Scales { scale, rows, .. } => {
                let name = format!("per_{scale}");
                let mut t = Table::new(
                    &name,
                    &[scale.as_str(), "window", "population", "mean", "std_err"],
                );
                for r in rows {
                    t.push(vec![
                        r.scale.to_string(),
                        r.window.to_string(),
                        r.population.to_string(),
                        r.mean.to_string(),
                        r.std_err.to_string(),
                    ]);
                }
                vec![t]
            }
            Aggregate::Coalescence { rows, .. } => {
                let mut t = Table::new(
                    "per_level",
                    &["level", "probability", "std_err", "trials", "mean_depth"],
                );
                for r in rows {
                    t.push(vec![
                        r.level.to_string(),
                        r.probability.to_string(),
                        r.std_err.to_string(),
                        r.trials.to_string(),
                        r.mean_depth.to_string(),
                    ]);
                }
                vec![t]
            }
            Aggregate::Multiplicity {
                at_least, min_cut, ..
            } => {
                let mut t = Table::new("per_k", &["k", "p_at_least", "exceeds_min_cut"]);
                for (i, p) in at_least.iter().enumerate() {
                    let k = i + 1;
                    t.push(vec![k.to_string(), p.to_string(), (k > *min_cut).to_string()]);
                }
                vec![t]
            }
            Aggregate::Density {
                coarse,
                fine,
                mean_cells,
                mean,
                std_err,
                ci,
            } => {
                let mut t = Table::new(
                    "summary",
                    &[
                        "coarse",
                        "fine",
                        "mean_cells",
                        "mean_hit_fraction",
                        "std_err",
                        "ci_lower",
                        "ci_upper",
                    ],
                );
                t.push(vec![
                    coarse.to_string(),
                    fine.to_string(),
                    mean_cells.to_string(),
                    mean.to_string(),
                    std_err.to_string(),
                    ci[0].to_string(),
                    ci[1].to_string(),
                ]);
                vec![t]
            }
        }
    }

    /// Curves worth plotting, with their fits where one exists.
    pub fn plot_curves(&self) -> Vec<PlotCurve> {
        match &self.aggregate {
            Some(Aggregate::RTail { tail, .. }) => vec![PlotCurve {
                table: "survival".into(),
                x: "x".into(),
                y: "survival".into(),
                fit: tail.fit,
            }],
            Some(Aggregate::Scales { scale, fit, .. }) => vec![PlotCurve {
                table: format!("per_{scale}"),
                x: scale.clone(),
                y: "mean".into(),
                fit: *fit,
            }],
            Some(Aggregate::Coalescence { .. }) => vec![PlotCurve {
                table: "per_level".into(),
                x: "level".into(),
                y: "probability".into(),
                fit: None,
            }],
            Some(Aggregate::Multiplicity { .. }) => vec![PlotCurve {
                table: "per_k".into(),
                x: "k".into(),
                y: "p_at_least".into(),
                fit: None,
            }],
            _ => Vec::new(),
        }
    }

    /// Record-internal invariants; returns one message per violation.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.schema != RECORD_SCHEMA {
            bad.push(format!("schema: expected {RECORD_SCHEMA}, found {}", self.schema));
        }
        if self.experiment != self.config.experiment() {
            bad.push(format!(
                "experiment name {} does not match config ({})",
                self.experiment,
                self.config.experiment()
            ));
        }
        let failed = self
            .replications
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::Failed(_)))
            .count();
        if failed != self.failed {
            bad.push(format!(
                "failed count {} disagrees with replications ({failed})",
                self.failed
            ));
        }
        let exceeded = failed as f64 > FAILURE_LIMIT * self.replications.len() as f64;
        if exceeded != self.failure_limit_exceeded {
            bad.push("failure threshold flag is inconsistent".into());
        }
        let free = self.config.model.is_free();
        match &self.aggregate {
            Some(Aggregate::RTail { c, tail, .. }) => {
                if !tail.is_monotone() {
                    bad.push("survival monotonicity: R survival is not nonincreasing".into());
                }
                if free {
                    for (_, s) in self.successes() {
                        if let Statistic::Radius { r_value, .. } = s {
                            if r_value > c {
                                bad.push(format!("free-group nullity: R = {r_value} exceeds C = {c}"));
                            }
                        }
                    }
                }
            }
            Some(Aggregate::Scales { rows, scale, .. }) => {
                if free && rows.iter().any(|r| r.mean != 0.0) {
                    bad.push(format!("free-group nullity: nonzero mean at some {scale}"));
                }
            }
            Some(Aggregate::Multiplicity {
                min_cut, at_least, ..
            }) => {
                if at_least.windows(2).any(|w| w[1] > w[0]) {
                    bad.push("survival monotonicity: P(count >= k) increases in k".into());
                }
                for (i, &p) in at_least.iter().enumerate() {
                    if i + 1 > *min_cut && p != 0.0 {
                        bad.push(format!(
                            "Menger cap: P(count >= {}) = {p} above min cut {min_cut}",
                            i + 1
                        ));
                    }
                }
                for (_, s) in self.successes() {
                    if let Statistic::Count { count } = s {
                        if count > min_cut {
                            bad.push(format!("Menger cap: count {count} exceeds min cut {min_cut}"));
                        }
                    }
                }
            }
            Some(Aggregate::Density { mean, .. }) => {
                if free && *mean != 0.0 {
                    bad.push("free-group nullity: nonzero density hit fraction".into());
                }
            }
            Some(Aggregate::Coalescence { rows, .. }) => {
                if rows.iter().any(|r| !(0.0..=1.0).contains(&r.probability)) {
                    bad.push("coalescence probability outside [0, 1]".into());
                }
            }
            None => {
                if failed < self.replications.len() {
                    bad.push("aggregate missing despite successful replications".into());
                }
            }
        }
        bad
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
