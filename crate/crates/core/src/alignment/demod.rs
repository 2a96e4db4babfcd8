//! Nearest-point (maximum likelihood) detection of receiver equations.

use crate::alignment::Group;
use crate::error::{invalid, Error, Result};

/// Default candidate budget for demodulation.
pub const DEFAULT_DEMOD_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemodStrategy {
    Exhaustive,
    MeetInTheMiddle,
    /// No detection: callers inject the true equations instead.
    Oracle,
}

/// Number of candidate tuples, with group `g` ranging over `[0, n_g (p−1)]`.
pub fn candidate_space(groups: &[Group], p: u64) -> f64 {
    groups
        .iter()
        .map(|g| (g.contributors.len() as u64 * (p - 1) + 1) as f64)
        .product()
}

fn ranges(groups: &[Group], p: u64) -> Vec<u64> {
    groups
        .iter()
        .map(|g| g.contributors.len() as u64 * (p - 1))
        .collect()
}

// Every tuple of one half, in lexicographic order, with its left-to-right sum.
fn half_sums(values: &[f64], hi: &[u64]) -> Vec<(f64, Vec<u64>)> {
    let mut out = Vec::new();
    let mut c = vec![0u64; values.len()];
    loop {
        let s = c.iter().zip(values).fold(0.0, |acc, (&c, &v)| acc + c as f64 * v);
        out.push((s, c.clone()));
        let mut i = c.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] < hi[i] {
                c[i] += 1;
                break;
            }
            c[i] = 0;
        }
    }
}

/// The tuple `û` minimizing `|y/B − Σ_g û_g g̃|` with `û_g ∈ [0, n_g (p−1)]`,
/// ties broken towards the lexicographically smallest tuple.
///
/// Both search strategies evaluate `fl(s_A + s_B)` from the same half sums
/// and return identical results.
pub fn ml_demodulate(
    y: f64,
    groups: &[Group],
    p: u64,
    scaling: f64,
    strategy: DemodStrategy,
    budget: f64,
) -> Result<Vec<u64>> {
    if groups.is_empty() {
        return Ok(vec![]);
    }
    if !(scaling > 0.0 && scaling.is_finite() && y.is_finite()) {
        return Err(invalid("demodulation needs a finite positive scaling and finite y"));
    }
    let target = y / scaling;
    let values: Vec<f64> = groups.iter().map(|g| g.value).collect();
    let hi = ranges(groups, p);
    let split = groups.len() / 2;
    match strategy {
        DemodStrategy::Oracle => Err(invalid(
            "the oracle strategy performs no detection; inject the true equations",
        )),
        DemodStrategy::Exhaustive => {
            let needed = candidate_space(groups, p);
            if needed > budget {
                return Err(Error::ResourceLimit {
                    what: "exhaustive demodulation",
                    needed,
                    budget,
                    hint: Some("use meet-in-the-middle or oracle injection".into()),
                });
            }
            let a = half_sums(&values[..split], &hi[..split]);
            let b = half_sums(&values[split..], &hi[split..]);
            let mut best = (f64::INFINITY, 0, 0);
            for (ia, (sa, _)) in a.iter().enumerate() {
                for (ib, (sb, _)) in b.iter().enumerate() {
                    let d = (target - (sa + sb)).abs();
                    if d < best.0 {
                        best = (d, ia, ib);
                    }
                }
            }
            Ok([a[best.1].1.clone(), b[best.2].1.clone()].concat())
        }
        DemodStrategy::MeetInTheMiddle => {
            let size = |h: &[u64]| h.iter().map(|&v| (v + 1) as f64).product::<f64>();
            let needed = size(&hi[..split]) + size(&hi[split..]);
            if needed > budget {
                return Err(Error::ResourceLimit {
                    what: "meet-in-the-middle demodulation",
                    needed,
                    budget,
                    hint: Some("use oracle injection".into()),
                });
            }
            let a = half_sums(&values[..split], &hi[..split]);
            let mut b = half_sums(&values[split..], &hi[split..]);
            b.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
            let mut best: (f64, usize, usize) = (f64::INFINITY, 0, 0);
            let better = |d: f64, ia: usize, ib: usize, best: &(f64, usize, usize)| {
                d < best.0
                    || (d == best.0 && (ia, &b[ib].1) < (best.1, &b[best.2].1))
            };
            for (ia, (sa, _)) in a.iter().enumerate() {
                let j = b.partition_point(|(sb, _)| sa + sb < target);
                // fl(sa + ·) is monotone: the nearest sums sit on either side
                // of j; scan every entry sharing those sums for tie-breaks.
                if j > 0 {
                    let s = sa + b[j - 1].0;
                    let mut i = j;
                    while i > 0 && sa + b[i - 1].0 == s {
                        i -= 1;
                        let d = (target - s).abs();
                        if better(d, ia, i, &best) {
                            best = (d, ia, i);
                        }
                    }
                }
                if j < b.len() {
                    let s = sa + b[j].0;
                    let mut i = j;
                    while i < b.len() && sa + b[i].0 == s {
                        let d = (target - s).abs();
                        if better(d, ia, i, &best) {
                            best = (d, ia, i);
                        }
                        i += 1;
                    }
                }
            }
            Ok([a[best.1].1.clone(), b[best.2].1.clone()].concat())
        }
    }
}
