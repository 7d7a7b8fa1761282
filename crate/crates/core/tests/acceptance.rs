//! End-to-end acceptance run: one line per criterion, nonzero exit if any
//! criterion fails. Heavy criteria share one radius-8 octagon ball and run
//! one after another to bound memory.

use std::collections::BTreeMap;
use std::time::Instant;

use hypfpp_core::experiments::{
    calibration_study, fit_exponential_rate, Aggregate, ExperimentConfig, ExperimentRecord, Harness,
};
use hypfpp_core::fpp::{dijkstra_tree_with_order, tree_in_scope, FppEngine};
use hypfpp_core::structures::{lift_fraction, r_omega_on_family, wandering_check, PairFamily};
use hypfpp_core::{
    build_ball, dijkstra_tree, sample_weights, CayleyBall, Graph, GraphModel, OmegaSample, Scope, VertexId,
    WeightDistribution,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BIG_BALL_CAP: usize = 20_000_000;
const ORACLE_REL_TOL: f64 = 1e-12;
const ORACLE_SEEDS: u64 = 100;
const ORACLE_MAX_SECS: f64 = 60.0;
const NULLITY_SEEDS: u64 = 100;
const PERMUTATIONS: u64 = 10;
const PERMUTATION_SEEDS: u64 = 50;
const GROWTH_SEEDS: u64 = 20;
const DECAY_MAX_SECS: f64 = 900.0;
const MIN_REPLICATIONS: usize = 200;
const FINAL_COALESCENCE: f64 = 0.9;
const INVERSION_STD_ERRS: f64 = 2.0;
const FIT_REL_TOL: f64 = 1e-9;
const COVERAGE: f64 = 0.9;
const META_TRIALS: usize = 100;

const CONFIGS: [(&str, &str); 6] = [
    ("r-tail", include_str!("../../../configs/acceptance/r-tail.toml")),
    (
        "exceptional-fraction",
        include_str!("../../../configs/acceptance/exceptional-fraction.toml"),
    ),
    (
        "coalescence",
        include_str!("../../../configs/acceptance/coalescence.toml"),
    ),
    (
        "multiplicity",
        include_str!("../../../configs/acceptance/multiplicity.toml"),
    ),
    (
        "wandering",
        include_str!("../../../configs/acceptance/wandering.toml"),
    ),
    (
        "density-probe",
        include_str!("../../../configs/acceptance/density-probe.toml"),
    ),
];

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, n: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {n:>2} [{}] {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
}

fn omega(graph: &(impl Graph + ?Sized), seed: u64) -> OmegaSample {
    sample_weights(graph, WeightDistribution::default(), seed, 0)
}

/// Minimum weight over all simple paths from `root`, by exhaustive DFS.
fn enumerate_minima(g: &CayleyBall, omega: &OmegaSample, root: VertexId) -> Vec<f64> {
    fn dfs(g: &CayleyBall, omega: &OmegaSample, v: VertexId, d: f64, on: &mut [bool], best: &mut [f64]) {
        best[v as usize] = best[v as usize].min(d);
        for &(u, e) in g.neighbors(v) {
            if !on[u as usize] {
                on[u as usize] = true;
                dfs(g, omega, u, d + omega.weight(e), on, best);
                on[u as usize] = false;
            }
        }
    }
    let mut best = vec![f64::INFINITY; g.vertex_count()];
    let mut on = vec![false; g.vertex_count()];
    on[root as usize] = true;
    dfs(g, omega, root, 0.0, &mut on, &mut best);
    best
}

fn oracle_equivalence(report: &mut Report) {
    let start = Instant::now();
    let mut balls = Vec::new();
    for r in 0..=3 {
        balls.push(CayleyBall::build(GraphModel::FreeGroup { rank: 2 }, r).unwrap());
    }
    for r in 0..=2 {
        balls.push(CayleyBall::build(GraphModel::Tessellation { p: 8, q: 8 }, r).unwrap());
    }
    // a ball with cycles, so the enumeration has real alternatives
    balls.push(CayleyBall::build(GraphModel::Tessellation { p: 4, q: 5 }, 2).unwrap());
    assert!(balls.iter().all(|b| b.vertex_count() <= 500));
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for ball in &balls {
        for seed in 0..ORACLE_SEEDS {
            let w = omega(ball, seed);
            let tree = dijkstra_tree(ball, &w, 0);
            let best = enumerate_minima(ball, &w, 0);
            for (v, &b) in best.iter().enumerate() {
                let a = tree.dist(v as VertexId);
                worst = worst.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
                checked += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report.line(
        1,
        "oracle equivalence",
        worst <= ORACLE_REL_TOL && secs <= ORACLE_MAX_SECS,
        format!(
            "{} balls x {ORACLE_SEEDS} seeds, {checked} distances, max rel err {worst:.1e} (tol {ORACLE_REL_TOL:.0e}), {secs:.1}s (limit {ORACLE_MAX_SECS}s)",
            balls.len()
        ),
    );
}

fn free_group_nullity(report: &mut Report) {
    let ball = CayleyBall::build(GraphModel::FreeGroup { rank: 2 }, 8).unwrap();
    let engine = FppEngine::new(&ball);
    let eps_grid = [0.05, 0.1, 0.2, 0.25, 0.5, 0.75, 1.0];
    let family = PairFamily::sample(&ball, 8, 12, 1).unwrap();
    let (mut lifts, mut wanders, mut r_excess, mut checks) = (0usize, 0usize, 0usize, 0usize);
    for seed in 0..NULLITY_SEEDS {
        let w = omega(&ball, seed);
        let tree = engine.forward_tree(&w, Scope::Ball);
        for &eps in &eps_grid {
            for n in 1..=8 {
                lifts += lift_fraction(&tree, &ball, n, eps).unwrap().count;
                checks += 1;
            }
            for m in 1..=4 {
                for z in ball.sphere(2 * m).step_by(7) {
                    wanders += usize::from(wandering_check(&tree, &ball, z, eps).unwrap());
                    checks += 1;
                }
            }
        }
        for c in 0..=4 {
            if let Ok(stat) = r_omega_on_family(&engine, &w, &family, c, 66, Scope::Ball) {
                r_excess += usize::from(stat.r_value > c);
                checks += 1;
            }
        }
    }
    report.line(
        2,
        "free-group nullity",
        lifts == 0 && wanders == 0 && r_excess == 0,
        format!(
            "{NULLITY_SEEDS} seeds, {checks} checks: lifts {lifts}, wandering {wanders}, R > C {r_excess}"
        ),
    );
}

fn uniqueness(report: &mut Report) {
    let mut mismatches = 0;
    let mut trees = 0;
    for (model, radius) in [
        (GraphModel::FreeGroup { rank: 2 }, 6),
        (GraphModel::Tessellation { p: 8, q: 8 }, 5),
    ] {
        let ball = CayleyBall::build(model, radius).unwrap();
        for seed in 0..PERMUTATION_SEEDS {
            let w = omega(&ball, seed);
            let base = dijkstra_tree(&ball, &w, 0);
            for p in 0..PERMUTATIONS {
                let mut order: Vec<u32> = (0..ball.edge_count() as u32).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed * 1000 + p);
                order.shuffle(&mut rng);
                let mut rank = vec![0u32; order.len()];
                for (i, &e) in order.iter().enumerate() {
                    rank[e as usize] = i as u32;
                }
                let permuted = dijkstra_tree_with_order(&ball, &w, 0, &rank);
                mismatches += usize::from(permuted.parent_edges() != base.parent_edges());
                trees += 1;
            }
        }
    }
    report.line(
        3,
        "uniqueness surrogate",
        mismatches == 0,
        format!("{trees} permuted trees over 2 models x {PERMUTATION_SEEDS} seeds, {mismatches} parent-map mismatches"),
    );
}

fn certification(report: &mut Report, big: &CayleyBall, engine: &FppEngine<'_, CayleyBall>) {
    let small = CayleyBall::build(GraphModel::Tessellation { p: 8, q: 8 }, 6).unwrap();
    let (mut certified, mut changed) = (0usize, 0usize);
    for seed in 0..GROWTH_SEEDS {
        let t6 = tree_in_scope(&small, &omega(&small, seed), 0, Scope::Infinite, None);
        let t8 = engine.forward_tree(&omega(big, seed), Scope::Ball);
        for v in 0..small.vertex_count() as VertexId {
            if t6.is_certified(v) {
                certified += 1;
                changed += usize::from(t6.dist(v) != t8.dist(v));
            }
        }
    }
    report.line(
        4,
        "certification soundness",
        changed == 0 && certified > 0,
        format!(
            "radius 6 -> 8, {GROWTH_SEEDS} seeds: {certified} certified distances ({:.1} per seed of {}), {changed} changed",
            certified as f64 / GROWTH_SEEDS as f64,
            small.vertex_count()
        ),
    );
}

fn ci_text(ci: &Option<hypfpp_core::experiments::BootstrapCi>) -> String {
    ci.map_or("none".into(), |c| format!("[{:.4}, {:.4}]", c.lower, c.upper))
}

fn decay(report: &mut Report, record: &ExperimentRecord) {
    let Some(Aggregate::Scales { rows, fit, ci, .. }) = &record.aggregate else {
        report.line(5, "exceptional-fraction decay", false, "no aggregate".into());
        return;
    };
    let means: Vec<String> = rows
        .iter()
        .map(|r| format!("n={}:{:.3e}", r.scale, r.mean))
        .collect();
    let secs = record.provenance.wall_time_secs;
    let pass = record.replications.len() >= MIN_REPLICATIONS
        && record.failed == 0
        && fit.is_some_and(|f| f.rate > 0.0)
        && ci.is_some_and(|c| c.lower > 0.0)
        && secs <= DECAY_MAX_SECS;
    report.line(
        5,
        "exceptional-fraction decay",
        pass,
        format!(
            "{} reps, means {}; log-mean slope {:.4}, 95% CI of rate {}; {secs:.0}s (limit {DECAY_MAX_SECS}s)",
            record.replications.len(),
            means.join(" "),
            fit.map_or(f64::NAN, |f| -f.rate),
            ci_text(ci)
        ),
    );
}

fn r_tail(report: &mut Report, record: &ExperimentRecord) {
    let Some(Aggregate::RTail { tail, histogram, .. }) = &record.aggregate else {
        report.line(6, "R tail", false, "no aggregate".into());
        return;
    };
    let pass = record.replications.len() >= MIN_REPLICATIONS
        && tail.is_monotone()
        && tail.fit.is_some_and(|f| f.rate > 0.0)
        && tail.ci.is_some_and(|c| c.lower > 0.0);
    report.line(
        6,
        "R tail",
        pass,
        format!(
            "{} reps, histogram {:?}, survival {:?}; log-survival slope {:.4}, 95% CI of rate {}",
            record.replications.len(),
            histogram,
            tail.survival,
            tail.fit.map_or(f64::NAN, |f| -f.rate),
            ci_text(&tail.ci)
        ),
    );
}

fn coalescence(report: &mut Report, record: &ExperimentRecord) {
    let Some(Aggregate::Coalescence {
        rows,
        source_distance,
        ..
    }) = &record.aggregate
    else {
        report.line(7, "coalescence trend", false, "no aggregate".into());
        return;
    };
    let mut inversions = 0;
    let mut large_inversion = false;
    for w in rows.windows(2) {
        if w[1].probability < w[0].probability {
            inversions += 1;
            let se = (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
            large_inversion |= w[0].probability - w[1].probability > INVERSION_STD_ERRS * se;
        }
    }
    let last = rows.last().map_or(0.0, |r| r.probability);
    let probs: Vec<String> = rows
        .iter()
        .map(|r| format!("m={}:{:.3}", r.level, r.probability))
        .collect();
    report.line(
        7,
        "coalescence trend",
        record.replications.len() >= MIN_REPLICATIONS
            && *source_distance == 2
            && inversions <= 1
            && !large_inversion
            && last >= FINAL_COALESCENCE,
        format!(
            "{} reps, source distance {source_distance}, {}; {inversions} inversions; final {last:.3} (min {FINAL_COALESCENCE})",
            record.replications.len(),
            probs.join(" ")
        ),
    );
}

fn multiplicity(report: &mut Report, record: &ExperimentRecord) {
    let Some(Aggregate::Multiplicity {
        min_cut,
        at_least,
        inner_size,
        outer_size,
        ..
    }) = &record.aggregate
    else {
        report.line(8, "multiplicity cap", false, "no aggregate".into());
        return;
    };
    let monotone = at_least.windows(2).all(|w| w[1] <= w[0]);
    let capped = at_least
        .iter()
        .enumerate()
        .all(|(i, &p)| i < *min_cut || p == 0.0);
    report.line(
        8,
        "multiplicity cap",
        record.replications.len() >= MIN_REPLICATIONS && at_least.len() >= 6 && monotone && capped,
        format!(
            "{} reps, slab {inner_size} -> {outer_size} vertices, min cut {min_cut}, P(count >= k) for k=1..{}: {:?}",
            record.replications.len(),
            at_least.len(),
            at_least
        ),
    );
}

fn calibration(report: &mut Report) {
    let pts: Vec<(f64, f64)> = (0..8)
        .map(|i| (i as f64 * 0.5, (-1.7 * i as f64 * 0.5).exp()))
        .collect();
    let exact = fit_exponential_rate(&pts).unwrap();
    let rel = (exact.rate - 1.7).abs() / 1.7;
    let study = calibration_study(1.0, 400, &[0.0, 0.5, 1.0, 1.5, 2.0], META_TRIALS, 1000, 2024);
    report.line(
        9,
        "rate-fitter calibration",
        rel <= FIT_REL_TOL && study.coverage() >= COVERAGE && study.skipped == 0,
        format!(
            "exact rate rel err {rel:.1e} (tol {FIT_REL_TOL:.0e}); bootstrap coverage {}/{} = {:.2} (min {COVERAGE})",
            study.covered,
            study.trials,
            study.coverage()
        ),
    );
}

fn main() {
    let mut report = Report { failures: 0 };
    println!("acceptance: building tess:8,8 radius 8");
    let big = build_ball(GraphModel::Tessellation { p: 8, q: 8 }, 8, BIG_BALL_CAP).unwrap();

    oracle_equivalence(&mut report);
    free_group_nullity(&mut report);
    uniqueness(&mut report);
    let harness = Harness::new(&big);
    certification(&mut report, &big, harness.engine());

    let configs: Vec<(&str, ExperimentConfig)> = CONFIGS
        .iter()
        .map(|(name, text)| (*name, ExperimentConfig::from_toml_str(text).unwrap()))
        .collect();
    let mut first: BTreeMap<&str, ExperimentRecord> = BTreeMap::new();
    for (name, config) in &configs {
        let record = harness.run(config).unwrap();
        println!(
            "  ran {name} with 1 worker: {} reps in {:.1}s",
            record.replications.len(),
            record.provenance.wall_time_secs
        );
        first.insert(name, record);
    }
    if let Ok(dir) = std::env::var("HYPFPP_ACCEPTANCE_OUT") {
        std::fs::create_dir_all(&dir).unwrap();
        for (name, record) in &first {
            std::fs::write(
                format!("{dir}/{name}.record.json"),
                record.to_json_pretty().unwrap(),
            )
            .unwrap();
        }
    }
    decay(&mut report, &first["exceptional-fraction"]);
    r_tail(&mut report, &first["r-tail"]);
    coalescence(&mut report, &first["coalescence"]);
    multiplicity(&mut report, &first["multiplicity"]);
    calibration(&mut report);

    let parallel = Harness::new(&big).with_workers(4);
    let mut differing = Vec::new();
    for (name, config) in &configs {
        let again = parallel.run(config).unwrap();
        println!(
            "  ran {name} with 4 workers in {:.1}s",
            again.provenance.wall_time_secs
        );
        if again.content_hash().unwrap() != first[name].content_hash().unwrap() {
            differing.push(*name);
        }
    }
    report.line(
        10,
        "reproducibility",
        differing.is_empty(),
        format!(
            "{} records, workers 1 vs 4, content hashes differ for {:?}",
            configs.len(),
            differing
        ),
    );

    if report.failures > 0 {
        println!("acceptance: {} criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
