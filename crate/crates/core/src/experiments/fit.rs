use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `-ln S(x) = a + c x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits the decay rate of `S` over the points with `S > 0`.
pub fn fit_exponential_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|&(x, s)| (x, -s.ln()))
        .collect();
    let n = used.len();
    if n < 3 {
        return Err(Error::InsufficientPoints(n));
    }
    let nf = n as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = used.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints(1));
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let ss_tot: f64 = used.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = used
        .iter()
        .map(|p| {
            let r = p.1 - intercept - rate * p.0;
            r * r
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit {
        rate,
        intercept,
        r_squared,
        points: n,
    })
}

/// Empirical `P(X >= x)` at each support point.
pub fn survival(values: &[f64], support: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    support
        .iter()
        .map(|&x| values.iter().filter(|&&v| v >= x).count() as f64 / n)
        .collect()
}

/// Percentile bootstrap over replications. `points` maps a resample (a list
/// of replication positions) to fit points; resamples whose fit fails are
/// skipped and counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lower: f64,
    pub upper: f64,
    pub draws: usize,
    pub failed_draws: usize,
}

pub fn bootstrap_rate_ci<F>(n: usize, draws: usize, seed: u64, points: F) -> Option<BootstrapCi>
where
    F: Fn(&[usize]) -> Vec<(f64, f64)>,
{
    if n < 2 || draws == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rates = Vec::with_capacity(draws);
    let mut sample = vec![0; n];
    for _ in 0..draws {
        for s in sample.iter_mut() {
            *s = rng.gen_range(0..n);
        }
        if let Ok(fit) = fit_exponential_rate(&points(&sample)) {
            rates.push(fit.rate);
        }
    }
    let failed_draws = draws - rates.len();
    if rates.len() * 2 < draws {
        return None;
    }
    rates.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (rates.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        rates[lo] + (rates[hi] - rates[lo]) * (pos - lo as f64)
    };
    Some(BootstrapCi {
        lower: at(0.025),
        upper: at(0.975),
        draws,
        failed_draws,
    })
}

/// Survival curve with its fitted rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub support: Vec<f64>,
    pub survival: Vec<f64>,
    pub fit: Option<RateFit>,
    pub ci: Option<BootstrapCi>,
    /// Set when fewer than three support points carry positive mass.
    pub insufficient: bool,
}

impl TailEstimate {
    /// Survival of `values` on `support`, fitted, with a bootstrap over
    /// the values.
    pub fn from_values(values: &[f64], support: Vec<f64>, draws: usize, seed: u64) -> Self {
        let surv = survival(values, &support);
        let points: Vec<(f64, f64)> = support.iter().copied().zip(surv.iter().copied()).collect();
        let fit = fit_exponential_rate(&points).ok();
        let ci = fit.and_then(|_| {
            bootstrap_rate_ci(values.len(), draws, seed, |idx| {
                let resampled: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
                support
                    .iter()
                    .copied()
                    .zip(survival(&resampled, &support))
                    .collect()
            })
        });
        Self {
            support,
            survival: surv,
            insufficient: fit.is_none(),
            fit,
            ci,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.survival.windows(2).all(|w| w[1] <= w[0]) && self.survival.first().is_none_or(|&s| s <= 1.0)
    }
}

/// Outcome of repeated fits on synthetic exponential samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub trials: usize,
    pub covered: usize,
    pub skipped: usize,
}

impl Calibration {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / (self.trials - self.skipped).max(1) as f64
    }
}

/// Draws `samples` Exponential(`rate`) values per trial, fits the survival
/// on `support` and checks whether the bootstrap interval covers `rate`.
pub fn calibration_study(
    rate: f64,
    samples: usize,
    support: &[f64],
    trials: usize,
    draws: usize,
    seed: u64,
) -> Calibration {
    let mut covered = 0;
    let mut skipped = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let values: Vec<f64> = (0..samples)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln() / rate)
            .collect();
        let est = TailEstimate::from_values(&values, support.to_vec(), draws, seed ^ t as u64);
        match est.ci {
            Some(ci) if ci.lower <= rate && rate <= ci.upper => covered += 1,
            Some(_) => {}
            None => skipped += 1,
        }
    }
    Calibration {
        trials,
        covered,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_exponential() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, (-2.0 * i as f64).exp())).collect();
        let fit = fit_exponential_rate(&pts).unwrap();
        assert_relative_eq!(fit.rate, 2.0, max_relative = 1e-9);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_survival_has_zero_rate() {
        let pts = [(0.0, 0.5), (1.0, 0.5), (2.0, 0.5)];
        let fit = fit_exponential_rate(&pts).unwrap();
        assert_eq!(fit.rate, 0.0);
    }

    #[test]
    fn two_points_are_insufficient() {
        let pts = [(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)];
        assert!(matches!(
            fit_exponential_rate(&pts),
            Err(Error::InsufficientPoints(2))
        ));
    }

    #[test]
    fn survival_is_a_tail_count() {
        let s = survival(&[1.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s, vec![1.0, 1.0, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn single_value_has_no_interval() {
        let est = TailEstimate::from_values(&[2.0], vec![0.0, 1.0, 2.0], 100, 0);
        assert!(est.ci.is_none());
        assert!(est.is_monotone());
    }
}
