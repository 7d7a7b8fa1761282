use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ball::{build_ball, CayleyBall, VertexId};
use crate::error::{Error, Result};
use crate::experiments::config::{
    CoalescenceParams, DensityParams, ExceptionalParams, ExperimentConfig, ExperimentParams,
    MultiplicityParams, RTailParams, WanderingParams,
};
use crate::experiments::fit::{bootstrap_rate_ci, fit_exponential_rate, TailEstimate};
use crate::experiments::record::{
    mean_and_std_err, Aggregate, BallSummary, ExperimentRecord, LevelRow, Outcome, Provenance, Replication,
    ScaleRow, Statistic, FAILURE_LIMIT, RECORD_SCHEMA, TOOL_VERSION,
};
use crate::fpp::{sample_weights, EscapeMap, FppEngine, OmegaGeodesic, OmegaSample, Scope};
use crate::structures::{
    coalescence_point, disjoint_count_between, lift_fraction_with_window, min_edge_cut, omega_shadow,
    r_omega_on_family, wandering_with_window, PairFamily, SlabSpec,
};

const TARGET_SALT: u64 = 0x7461_7267_6574;
const BOOTSTRAP_SALT: u64 = 0x626f_6f74;

/// Window radius `floor(eps n)`, raised to 1 when it would be 0. The flag
/// reports the clamp.
pub fn effective_window(eps: f64, n: u32) -> (u32, bool) {
    let w = (eps * n as f64).floor() as u32;
    if w == 0 {
        (1, true)
    } else {
        (w, false)
    }
}

fn replication_rng(master_seed: u64, index: u32, salt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ salt);
    rng.set_stream(u64::from(index));
    rng
}

fn draw(sphere: std::ops::Range<VertexId>, count: usize, rng: &mut ChaCha8Rng) -> Vec<VertexId> {
    let size = sphere.len();
    let mut picked: Vec<VertexId> = sample(rng, size, count.min(size))
        .into_iter()
        .map(|i| sphere.start + i as VertexId)
        .collect();
    picked.sort_unstable();
    picked
}

/// Runs experiments on one ball, replications spread over a worker pool.
pub struct Harness<'b> {
    ball: &'b CayleyBall,
    engine: FppEngine<'b, CayleyBall>,
    workers: usize,
}

struct Partial {
    replications: Vec<Replication>,
    flags: Vec<String>,
}

impl<'b> Harness<'b> {
    pub fn new(ball: &'b CayleyBall) -> Self {
        Self {
            ball,
            engine: FppEngine::new(ball),
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn engine(&self) -> &FppEngine<'b, CayleyBall> {
        &self.engine
    }

    pub fn run(&self, config: &ExperimentConfig) -> Result<ExperimentRecord> {
        config.validate()?;
        if config.model != self.ball.model() || config.radius != self.ball.radius() {
            return Err(Error::Precondition(format!(
                "config asks for {} radius {}, ball is {} radius {}",
                config.model,
                config.radius,
                self.ball.model(),
                self.ball.radius()
            )));
        }
        let started = Instant::now();
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let (partial, aggregate) = match &config.params {
            ExperimentParams::RTail(p) => self.r_tail(config, p)?,
            ExperimentParams::ExceptionalFraction(p) => self.exceptional(config, p)?,
            ExperimentParams::Wandering(p) => self.wandering(config, p)?,
            ExperimentParams::Coalescence(p) => self.coalescence(config, p)?,
            ExperimentParams::Multiplicity(p) => self.multiplicity(config, p)?,
            ExperimentParams::DensityProbe(p) => self.density(config, p)?,
        };
        let failed = partial
            .replications
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::Failed(_)))
            .count();
        let total = partial.replications.len();
        if failed > 0 {
            log::warn!("{failed} of {total} replications failed");
        }
        Ok(ExperimentRecord {
            schema: RECORD_SCHEMA.into(),
            experiment: config.experiment().into(),
            config: config.clone(),
            ball: BallSummary::of(self.ball),
            failure_limit_exceeded: failed as f64 > FAILURE_LIMIT * total as f64,
            failed,
            flags: partial.flags,
            aggregate: (failed < total).then_some(aggregate).flatten(),
            replications: partial.replications,
            provenance: Provenance {
                tool_version: TOOL_VERSION.into(),
                master_seed: config.master_seed,
                workers: self.workers,
                wall_time_secs: started.elapsed().as_secs_f64(),
                started_unix,
            },
        })
    }

    /// Runs `f` on each replication's weights, in parallel, returning the
    /// outcomes in replication order. Certification failures are recorded;
    /// any other error aborts the run.
    fn replicate<F>(&self, config: &ExperimentConfig, f: F) -> Result<Vec<Replication>>
    where
        F: Fn(u32, &OmegaSample) -> Result<Statistic> + Sync,
    {
        let body = || {
            (0..config.replications)
                .into_par_iter()
                .map(|i| {
                    let omega =
                        sample_weights(self.ball, config.distribution, config.master_seed, u64::from(i));
                    let outcome = match f(i, &omega) {
                        Ok(s) => Outcome::Ok(s),
                        Err(e) if e.is_certification() => Outcome::Failed(e.to_string()),
                        Err(e) => return Err(e),
                    };
                    Ok(Replication { index: i, outcome })
                })
                .collect::<Result<Vec<_>>>()
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
        pool.install(body)
    }

    fn escape(&self, config: &ExperimentConfig, omega: &OmegaSample) -> Option<EscapeMap> {
        (config.scope == Scope::Infinite).then(|| EscapeMap::new(self.ball, omega))
    }

    /// Geodesics from `source` to each target, certified when the scope
    /// asks for it.
    fn geodesics(
        &self,
        config: &ExperimentConfig,
        omega: &OmegaSample,
        escape: Option<&EscapeMap>,
        source: VertexId,
        targets: &[VertexId],
    ) -> Result<Vec<OmegaGeodesic>> {
        let paths = self.engine.paths_from(omega, source, targets);
        if config.scope == Scope::Infinite {
            let escape = escape.expect("escape map for infinite scope");
            for g in &paths {
                if g.total_weight >= escape.bound(g.start(), g.end()) {
                    return Err(Error::UncertifiedPair {
                        from: g.start(),
                        to: g.end(),
                    });
                }
            }
        }
        Ok(paths)
    }

    fn r_tail(&self, config: &ExperimentConfig, p: &RTailParams) -> Result<(Partial, Option<Aggregate>)> {
        let level = p.level.unwrap_or(config.radius);
        let family = PairFamily::sample(self.ball, level, p.candidates, config.master_seed)?;
        let pairs = family.eligible(p.c, p.pair_budget).len();
        if pairs == 0 {
            return Err(Error::NoEligiblePair(p.c));
        }
        let replications = self.replicate(config, |_, omega| {
            let stat = r_omega_on_family(&self.engine, omega, &family, p.c, p.pair_budget, config.scope)?;
            Ok(Statistic::Radius {
                r_value: stat.r_value,
                pairs_tested: stat.pairs_tested,
            })
        })?;
        let values: Vec<u32> = ok_stats(&replications)
            .filter_map(|s| match s {
                Statistic::Radius { r_value, .. } => Some(*r_value),
                _ => None,
            })
            .collect();
        let mut histogram = BTreeMap::new();
        for &r in &values {
            *histogram.entry(r).or_insert(0) += 1;
        }
        let as_f64: Vec<f64> = values.iter().map(|&r| f64::from(r)).collect();
        let support: Vec<f64> = (0..=level).map(f64::from).collect();
        let tail = TailEstimate::from_values(
            &as_f64,
            support,
            config.bootstrap_draws,
            config.master_seed ^ BOOTSTRAP_SALT,
        );
        let mut flags = Vec::new();
        if tail.insufficient {
            flags.push("tail_fit_insufficient".into());
        }
        Ok((
            Partial { replications, flags },
            Some(Aggregate::RTail {
                c: p.c,
                pairs,
                histogram: histogram.into_iter().collect(),
                tail,
            }),
        ))
    }

    fn scale_aggregate(
        &self,
        config: &ExperimentConfig,
        scale: &str,
        scales: &[u32],
        windows: &[u32],
        populations: &[usize],
        replications: &[Replication],
    ) -> Aggregate {
        let per_rep: Vec<&Vec<f64>> = ok_stats(replications)
            .filter_map(|s| match s {
                Statistic::Fractions { values } => Some(values),
                _ => None,
            })
            .collect();
        let rows: Vec<ScaleRow> = scales
            .iter()
            .enumerate()
            .map(|(j, &s)| {
                let column: Vec<f64> = per_rep.iter().map(|v| v[j]).collect();
                let (mean, std_err) = mean_and_std_err(&column);
                ScaleRow {
                    scale: s,
                    window: windows[j],
                    mean,
                    std_err,
                    population: populations[j],
                }
            })
            .collect();
        let points = |reps: &[usize]| -> Vec<(f64, f64)> {
            scales
                .iter()
                .enumerate()
                .map(|(j, &s)| {
                    let m = reps.iter().map(|&i| per_rep[i][j]).sum::<f64>() / reps.len() as f64;
                    (f64::from(s), m)
                })
                .collect()
        };
        let all: Vec<usize> = (0..per_rep.len()).collect();
        let fit = fit_exponential_rate(&points(&all)).ok();
        let ci = fit.and_then(|_| {
            bootstrap_rate_ci(
                per_rep.len(),
                config.bootstrap_draws,
                config.master_seed ^ BOOTSTRAP_SALT,
                points,
            )
        });
        Aggregate::Scales {
            scale: scale.into(),
            rows,
            fit,
            ci,
        }
    }

    fn exceptional(
        &self,
        config: &ExperimentConfig,
        p: &ExceptionalParams,
    ) -> Result<(Partial, Option<Aggregate>)> {
        let mut flags = Vec::new();
        let windows: Vec<u32> = p
            .n_values
            .iter()
            .map(|&n| {
                let (w, clamped) = effective_window(config.eps, n);
                if clamped {
                    flags.push(format!("eps_clamped: n={n} window=1"));
                }
                if n + w > config.radius {
                    flags.push(format!("window_truncated: n={n} window={w}"));
                }
                w
            })
            .collect();
        if config.eps >= 1.0 {
            flags.push("eps_degenerate".into());
        }
        let replications = self.replicate(config, |_, omega| {
            let tree = self.engine.forward_tree(omega, config.scope);
            let values = p
                .n_values
                .iter()
                .zip(&windows)
                .map(|(&n, &w)| {
                    lift_fraction_with_window(&tree, self.ball, n, config.eps, w).map(|r| r.fraction)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(Statistic::Fractions { values })
        })?;
        let populations: Vec<usize> = p.n_values.iter().map(|&n| self.ball.sphere(n).len()).collect();
        let aggregate = self.scale_aggregate(config, "n", &p.n_values, &windows, &populations, &replications);
        Ok((Partial { replications, flags }, Some(aggregate)))
    }

    fn wandering(
        &self,
        config: &ExperimentConfig,
        p: &WanderingParams,
    ) -> Result<(Partial, Option<Aggregate>)> {
        let mut flags = Vec::new();
        if config.eps >= 1.0 {
            flags.push("eps_degenerate".into());
        }
        let mut rng = replication_rng(config.master_seed, u32::MAX, TARGET_SALT);
        let targets: Vec<Vec<VertexId>> = p
            .m_values
            .iter()
            .map(|&m| draw(self.ball.sphere(2 * m), p.targets, &mut rng))
            .collect();
        let windows: Vec<u32> = p
            .m_values
            .iter()
            .map(|&m| {
                let (w, clamped) = effective_window(config.eps, m);
                if clamped {
                    flags.push(format!("eps_clamped: m={m} window=1"));
                }
                w
            })
            .collect();
        let replications = self.replicate(config, |_, omega| {
            let tree = self.engine.forward_tree(omega, config.scope);
            let values = targets
                .iter()
                .zip(&windows)
                .map(|(zs, &w)| {
                    let mut hits = 0;
                    for &z in zs {
                        if wandering_with_window(&tree, self.ball, z, w)? {
                            hits += 1;
                        }
                    }
                    Ok(hits as f64 / zs.len() as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(Statistic::Fractions { values })
        })?;
        let populations: Vec<usize> = targets.iter().map(Vec::len).collect();
        let aggregate = self.scale_aggregate(config, "m", &p.m_values, &windows, &populations, &replications);
        Ok((Partial { replications, flags }, Some(aggregate)))
    }

    fn coalescence(
        &self,
        config: &ExperimentConfig,
        p: &CoalescenceParams,
    ) -> Result<(Partial, Option<Aggregate>)> {
        let [o1, o2] = p.sources;
        for o in p.sources {
            if !self.ball.contains(o) {
                return Err(Error::UnknownVertex(o));
            }
        }
        let source_distance = self.ball.bfs_distances(o1, 2 * config.radius)[o2 as usize];
        let replications = self.replicate(config, |i, omega| {
            let mut rng = replication_rng(config.master_seed, i, TARGET_SALT);
            let per_level: Vec<Vec<VertexId>> = p
                .levels
                .iter()
                .map(|&m| draw(self.ball.sphere(m), p.targets_per_level, &mut rng))
                .collect();
            let all: Vec<VertexId> = per_level.iter().flatten().copied().collect();
            let escape = self.escape(config, omega);
            let g1 = self.geodesics(config, omega, escape.as_ref(), o1, &all)?;
            let g2 = self.geodesics(config, omega, escape.as_ref(), o2, &all)?;
            let mut coalesced = Vec::with_capacity(per_level.len());
            let mut depths = Vec::with_capacity(per_level.len());
            let mut k = 0;
            for zs in &per_level {
                let mut met = 0;
                let mut ds = Vec::with_capacity(zs.len());
                for &z in zs {
                    let c = coalescence_point(&g1[k], &g2[k]).expect("both paths end at the target");
                    if c.vertex != z {
                        met += 1;
                    }
                    ds.push(self.ball.level(c.vertex));
                    k += 1;
                }
                coalesced.push(met);
                depths.push(ds);
            }
            Ok(Statistic::Coalescence {
                coalesced,
                targets: p.targets_per_level,
                depths,
            })
        })?;
        let stats: Vec<(&Vec<usize>, &Vec<Vec<u32>>)> = ok_stats(&replications)
            .filter_map(|s| match s {
                Statistic::Coalescence {
                    coalesced, depths, ..
                } => Some((coalesced, depths)),
                _ => None,
            })
            .collect();
        let rows = p
            .levels
            .iter()
            .enumerate()
            .map(|(j, &level)| {
                let trials: usize = stats.iter().map(|(_, d)| d[j].len()).sum();
                let met: usize = stats.iter().map(|(c, _)| c[j]).sum();
                let probability = met as f64 / trials as f64;
                let mut depth_histogram = BTreeMap::new();
                let mut depth_sum = 0u64;
                for (_, d) in &stats {
                    for &x in &d[j] {
                        *depth_histogram.entry(x).or_insert(0) += 1;
                        depth_sum += u64::from(x);
                    }
                }
                LevelRow {
                    level,
                    probability,
                    std_err: (probability * (1.0 - probability) / trials as f64).sqrt(),
                    trials,
                    mean_depth: depth_sum as f64 / trials as f64,
                    depth_histogram: depth_histogram.into_iter().collect(),
                }
            })
            .collect();
        Ok((
            Partial {
                replications,
                flags: Vec::new(),
            },
            Some(Aggregate::Coalescence {
                sources: p.sources,
                source_distance,
                rows,
            }),
        ))
    }

    fn multiplicity(
        &self,
        config: &ExperimentConfig,
        p: &MultiplicityParams,
    ) -> Result<(Partial, Option<Aggregate>)> {
        let sphere = self.ball.sphere(config.radius);
        if p.axis_offset as usize >= sphere.len() {
            return Err(Error::Config(format!(
                "axis_offset {} exceeds the outer sphere size {}",
                p.axis_offset,
                sphere.len()
            )));
        }
        let slab = SlabSpec::along(
            self.ball,
            sphere.start + p.axis_offset,
            p.inner,
            p.outer,
            p.cone_eps,
        );
        let (inner, outer) = slab.boundary_sets(self.ball)?;
        let min_cut = min_edge_cut(self.ball, &inner, &outer);
        let replications = self.replicate(config, |_, omega| {
            if config.scope == Scope::Infinite {
                let escape = self.escape(config, omega);
                for &u in &inner {
                    self.geodesics(config, omega, escape.as_ref(), u, &outer)?;
                }
            }
            let count = disjoint_count_between(&self.engine, omega, &inner, &outer, p.k_max, p.strategy)?;
            Ok(Statistic::Count { count })
        })?;
        let counts: Vec<usize> = ok_stats(&replications)
            .filter_map(|s| match s {
                Statistic::Count { count } => Some(*count),
                _ => None,
            })
            .collect();
        let at_least = (1..=p.k_max)
            .map(|k| counts.iter().filter(|&&c| c >= k).count() as f64 / counts.len() as f64)
            .collect();
        Ok((
            Partial {
                replications,
                flags: Vec::new(),
            },
            Some(Aggregate::Multiplicity {
                min_cut,
                inner_size: inner.len(),
                outer_size: outer.len(),
                k_max: p.k_max,
                at_least,
            }),
        ))
    }

    fn density(&self, config: &ExperimentConfig, p: &DensityParams) -> Result<(Partial, Option<Aggregate>)> {
        let mut flags = Vec::new();
        let (window, clamped) = effective_window(config.eps, p.fine);
        if clamped {
            flags.push(format!("eps_clamped: n={} window=1", p.fine));
        }
        if p.fine + window > config.radius {
            flags.push(format!("window_truncated: n={} window={window}", p.fine));
        }
        let start = self.ball.sphere(p.fine).start;
        let replications = self.replicate(config, |_, omega| {
            let tree = self.engine.forward_tree(omega, config.scope);
            let fibres = omega_shadow(&tree, self.ball, p.coarse, p.fine)?;
            let report = lift_fraction_with_window(&tree, self.ball, p.fine, config.eps, window)?;
            let hit_cells = fibres
                .values()
                .filter(|cell| cell.iter().any(|&v| report.indicators[(v - start) as usize]))
                .count();
            Ok(Statistic::Density {
                cells: fibres.len(),
                hit_cells,
            })
        })?;
        let (fractions, cells): (Vec<f64>, Vec<f64>) = ok_stats(&replications)
            .filter_map(|s| match s {
                Statistic::Density { cells, hit_cells } => {
                    Some((*hit_cells as f64 / *cells as f64, *cells as f64))
                }
                _ => None,
            })
            .unzip();
        let (mean, std_err) = mean_and_std_err(&fractions);
        let (mean_cells, _) = mean_and_std_err(&cells);
        Ok((
            Partial { replications, flags },
            Some(Aggregate::Density {
                coarse: p.coarse,
                fine: p.fine,
                mean_cells,
                mean,
                std_err,
                ci: [mean - 1.96 * std_err, mean + 1.96 * std_err],
            }),
        ))
    }
}

fn ok_stats(replications: &[Replication]) -> impl Iterator<Item = &Statistic> {
    replications.iter().filter_map(|r| match &r.outcome {
        Outcome::Ok(s) => Some(s),
        Outcome::Failed(_) => None,
    })
}

/// Builds the configured ball and runs the experiment on it.
pub fn run_experiment(
    config: &ExperimentConfig,
    workers: usize,
    vertex_cap: usize,
) -> Result<ExperimentRecord> {
    config.validate()?;
    let ball = build_ball(config.model, config.radius, vertex_cap)?;
    Harness::new(&ball).with_workers(workers).run(config)
}
