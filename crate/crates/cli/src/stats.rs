//! Resampling helpers for Monte Carlo trend checks.

use caf_core::seed;
use rand::Rng;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Percentile bootstrap interval for `mean(b) − mean(a)` at the given level,
/// resampling each sample independently.
pub fn bootstrap_mean_diff(a: &[f64], b: &[f64], reps: usize, level: f64, seed: u64) -> (f64, f64) {
    assert!(!a.is_empty() && !b.is_empty() && reps > 0);
    let mut rng = seed::rng(seed);
    let mut diffs: Vec<f64> = (0..reps)
        .map(|_| {
            let ma = (0..a.len()).map(|_| a[rng.random_range(0..a.len())]).sum::<f64>() / a.len() as f64;
            let mb = (0..b.len()).map(|_| b[rng.random_range(0..b.len())]).sum::<f64>() / b.len() as f64;
            mb - ma
        })
        .collect();
    diffs.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| diffs[((q * reps as f64) as usize).min(reps - 1)];
    (at(tail), at(1.0 - tail))
}

/// One-sided check that `b` does not exceed `a`: fails only when the lower
/// end of the one-sided `level` interval of `mean(b) − mean(a)` is positive.
pub fn not_increasing(a: &[f64], b: &[f64], reps: usize, level: f64, seed: u64) -> bool {
    let (lo, _) = bootstrap_mean_diff(a, b, reps, 2.0 * level - 1.0, seed);
    lo <= 0.0
}

/// Sample mean and standard error.
pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let n = v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}
