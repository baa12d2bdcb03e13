use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ExperimentError;

pub const DEFAULT_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignificanceResult {
    pub statistic: f64,
    pub p_value: f64,
    pub resamples: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Welch's t for the difference in means. Both samples need two or more
/// values. Zero spread gives 0 for equal means and ±inf otherwise.
pub fn t_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let se = (variance(a, ma) / a.len() as f64 + variance(b, mb) / b.len() as f64).sqrt();
    let diff = ma - mb;
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn canonical_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        sorted(a)
            .iter()
            .zip(sorted(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Two-sided bootstrapped t-test for a difference in means.
///
/// Each sample is centred on its own mean and the two are pooled, which
/// makes the null hypothesis true for the pool. Under `seed`, `resamples`
/// pairs of samples with the original sizes are drawn with replacement and
/// their t statistics compared with the observed one:
/// `p = (#{|t*| >= |t|} + 1) / (resamples + 1)`.
///
/// The samples are put into a canonical order before resampling, so
/// swapping `a` and `b` gives the same p-value and a negated statistic.
pub fn bootstrap_test(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<SignificanceResult, ExperimentError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(ExperimentError::InsufficientData(format!(
            "both samples need at least 2 values (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    if resamples == 0 {
        return Err(ExperimentError::InsufficientData("resamples must be at least 1".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(ExperimentError::InvalidParam("samples must be finite".into()));
    }
    let statistic = t_statistic(a, b);
    let (first, second) = if canonical_cmp(a, b).is_le() { (a, b) } else { (b, a) };

    let (m1, m2) = (mean(first), mean(second));
    let mut pool: Vec<f64> = first.iter().map(|x| x - m1).chain(second.iter().map(|x| x - m2)).collect();
    pool.sort_by(f64::total_cmp);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect() };
    let observed = statistic.abs();
    let mut extreme = 0usize;
    for _ in 0..resamples {
        let s1 = draw(first.len());
        let s2 = draw(second.len());
        if t_statistic(&s1, &s2).abs() >= observed {
            extreme += 1;
        }
    }
    Ok(SignificanceResult {
        statistic,
        p_value: (extreme + 1) as f64 / (resamples + 1) as f64,
        resamples,
    })
}
