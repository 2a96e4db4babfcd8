//! Lattice computation rates and the baselines they are compared against.
//!
//! All logarithms are base 2 and powers are linear (use
//! [`crate::channel::db_to_linear`] for dB inputs).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channel::{db_to_linear, ChannelMatrix};
use crate::error::{invalid, Error, Result};

/// Integer equation coefficients `a_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoefficientVector(pub Vec<i64>);

impl CoefficientVector {
    pub fn squared_norm(&self) -> i64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Flips the sign so that the first nonzero entry is positive.
    pub fn canonicalize_sign(mut self) -> Self {
        if let Some(&first) = self.0.iter().find(|&&a| a != 0) {
            if first < 0 {
                self.0.iter_mut().for_each(|a| *a = -*a);
            }
        }
        self
    }
}

/// Square integer coefficient matrix `A`, one equation per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientMatrix {
    k: usize,
    entries: Vec<i64>,
}

impl CoefficientMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(invalid("coefficient matrix must be square and nonempty"));
        }
        Ok(Self {
            k,
            entries: rows.concat(),
        })
    }

    pub fn identity(k: usize) -> Self {
        let mut entries = vec![0; k * k];
        for i in 0..k {
            entries[i * k + i] = 1;
        }
        Self { k, entries }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, m: usize) -> &[i64] {
        &self.entries[m * self.k..(m + 1) * self.k]
    }

    pub fn get(&self, m: usize, k: usize) -> i64 {
        self.entries[m * self.k + k]
    }

    /// Rank over the rationals, computed exactly by fraction-free elimination.
    pub fn rank(&self) -> usize {
        let k = self.k;
        let mut a: Vec<i128> = self.entries.iter().map(|&v| v as i128).collect();
        let mut rank = 0;
        let mut prev = 1i128;
        for col in 0..k {
            let Some(piv) = (rank..k).find(|&r| a[r * k + col] != 0) else {
                continue;
            };
            if piv != rank {
                for c in 0..k {
                    a.swap(piv * k + c, rank * k + c);
                }
            }
            let pv = a[rank * k + col];
            for r in rank + 1..k {
                for c in col + 1..k {
                    // Bareiss step; the division is exact.
                    a[r * k + c] = (pv * a[r * k + c] - a[r * k + col] * a[rank * k + c]) / prev;
                }
                a[r * k + col] = 0;
            }
            prev = pv;
            rank += 1;
        }
        rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.k
    }
}

/// A rate evaluated at one power, optionally with the coefficients achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub power: f64,
    pub rate_bits: f64,
    pub coefficients: Option<CoefficientMatrix>,
}

fn check_inputs(h: &[f64], power: f64, a: &[i64]) -> Result<()> {
    if h.len() != a.len() {
        return Err(invalid(format!(
            "channel row has {} entries but coefficient vector has {}",
            h.len(),
            a.len()
        )));
    }
    if !(power.is_finite() && power > 0.0) {
        return Err(invalid(format!("power must be positive and finite, got {power}")));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(invalid("channel gains must be finite"));
    }
    if a.iter().all(|&v| v == 0) {
        return Err(invalid("coefficient vector must be nonzero"));
    }
    Ok(())
}

fn squared(h: &[f64]) -> f64 {
    h.iter().map(|v| v * v).sum()
}

/// `||h||² ||a||² − (h·a)²`, evaluated through Lagrange's identity so the
/// result is never negative and vanishes exactly for collinear inputs.
fn cauchy_schwarz_gap(h: &[f64], a: &[i64]) -> f64 {
    let mut gap = 0.0;
    for i in 0..h.len() {
        for j in i + 1..h.len() {
            let t = h[i] * a[j] as f64 - h[j] * a[i] as f64;
            gap += t * t;
        }
    }
    gap
}

fn loss_unchecked(h: &[f64], power: f64, a: &[i64]) -> f64 {
    let norm: i64 = a.iter().map(|v| v * v).sum();
    norm as f64 + power * cauchy_schwarz_gap(h, a)
}

fn rate_from_loss(h_norm2: f64, power: f64, loss: f64) -> f64 {
    (0.5 * (1.0 + power * h_norm2).log2() - 0.5 * loss.log2()).max(0.0)
}

/// The rate-loss term `||a||² + P(||h||²||a||² − (h·a)²)`.
pub fn loss_term(h: &[f64], power: f64, a: &[i64]) -> Result<f64> {
    check_inputs(h, power, a)?;
    Ok(loss_unchecked(h, power, a))
}

/// Lattice computation rate for decoding equation `a` over channel row `h`,
/// clamped at zero.
pub fn lattice_rate_single(h: &[f64], power: f64, a: &[i64]) -> Result<f64> {
    check_inputs(h, power, a)?;
    Ok(rate_from_loss(squared(h), power, loss_unchecked(h, power, a)))
}

/// Tuning for the integer coefficient search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Candidates retained per receiver for the full-rank matrix search.
    pub top_n: usize,
    /// Largest number of coefficient prefixes the ball enumeration may visit.
    pub max_prefixes: f64,
    /// Largest K for the matrix search.
    pub max_k: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            top_n: 16,
            max_prefixes: 5e7,
            max_k: 3,
        }
    }
}

/// A coefficient vector together with its loss and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub a: CoefficientVector,
    pub loss: f64,
    pub rate_bits: f64,
}

// Heap entry ordered by (loss, squared norm, lexicographic).
#[derive(Debug, Clone)]
struct Ranked {
    loss: f64,
    norm: i64,
    a: Vec<i64>,
}

impl Ranked {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.loss
            .total_cmp(&other.loss)
            .then(self.norm.cmp(&other.norm))
            .then_with(|| self.a.cmp(&other.a))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

struct TopN {
    n: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopN {
    fn threshold(&self) -> f64 {
        if self.heap.len() < self.n {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |r| r.loss)
        }
    }

    fn offer(&mut self, cand: Ranked) {
        if self.heap.len() < self.n {
            self.heap.push(cand);
        } else if let Some(worst) = self.heap.peek() {
            if cand < *worst {
                self.heap.pop();
                self.heap.push(cand);
            }
        }
    }
}

fn isqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn unit_ball_volume(dim: usize) -> f64 {
    // V_d = π^{d/2} / Γ(d/2 + 1), via the two-step recurrence.
    match dim {
        0 => 1.0,
        1 => 2.0,
        d => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Search radius `⌈||h||² P⌉` (at least 1) for the coefficient ball.
pub fn search_bound(h: &[f64], power: f64) -> Result<i64> {
    let raw = (squared(h) * power).ceil();
    if !(raw < 2f64.powi(52)) {
        return Err(Error::ResourceLimit {
            what: "coefficient search bound",
            needed: raw,
            budget: 2f64.powi(52),
            hint: None,
        });
    }
    Ok((raw as i64).max(1))
}

/// The `n` best coefficient vectors over the ball `||a||² ≤ ⌈||h||² P⌉`, best
/// first. Ordering is by rate, then squared norm, then lexicographic, with
/// every vector sign-canonicalized.
///
/// The first `K − 1` coordinates are enumerated exhaustively. For each such
/// prefix the loss is a convex quadratic in the last coordinate, so the last
/// coordinate is walked outward from the real minimizer until the loss exceeds
/// the current n-th best. The result equals a full enumeration of the ball.
pub fn top_coefficient_vectors(
    h: &[f64],
    power: f64,
    n: usize,
    cfg: &SearchConfig,
) -> Result<Vec<Candidate>> {
    let k = h.len();
    if k == 0 {
        return Err(invalid("channel row must be nonempty"));
    }
    let mut probe = vec![0i64; k];
    probe[0] = 1;
    check_inputs(h, power, &probe)?;
    if n == 0 {
        return Ok(vec![]);
    }
    let bound = search_bound(h, power)?;
    let radius = (bound as f64).sqrt();
    let prefixes = unit_ball_volume(k - 1) * radius.powi(k as i32 - 1);
    if prefixes > cfg.max_prefixes {
        return Err(Error::ResourceLimit {
            what: "coefficient search",
            needed: prefixes,
            budget: cfg.max_prefixes,
            hint: Some(format!("search bound ||a||² ≤ {bound}")),
        });
    }
    let mut top = TopN {
        n,
        heap: BinaryHeap::with_capacity(n + 1),
    };
    let mut prefix = vec![0i64; k];
    enumerate_prefix(h, power, bound, 0, 0, false, &mut prefix, &mut top);

    let h_norm2 = squared(h);
    let mut out: Vec<Ranked> = top.heap.into_vec();
    out.sort();
    Ok(out
        .into_iter()
        .map(|r| Candidate {
            rate_bits: rate_from_loss(h_norm2, power, r.loss),
            loss: r.loss,
            a: CoefficientVector(r.a),
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn enumerate_prefix(
    h: &[f64],
    power: f64,
    bound: i64,
    depth: usize,
    used: i64,
    nonzero: bool,
    a: &mut [i64],
    top: &mut TopN,
) {
    let k = h.len();
    let r = isqrt(bound - used);
    if depth + 1 == k {
        let (lo, hi) = if nonzero { (-r, r) } else { (1, r) };
        if lo <= hi {
            scan_last(h, power, lo, hi, a, top);
        }
        return;
    }
    let lo = if nonzero { -r } else { 0 };
    for v in lo..=r {
        a[depth] = v;
        enumerate_prefix(h, power, bound, depth + 1, used + v * v, nonzero || v != 0, a, top);
    }
    a[depth] = 0;
}

fn scan_last(h: &[f64], power: f64, lo: i64, hi: i64, a: &mut [i64], top: &mut TopN) {
    let last = h.len() - 1;
    // loss(t) = α t² + β t + γ; only the minimizer is needed.
    let hk = h[last];
    let mut lead = 0.0;
    let mut dot = 0.0;
    for i in 0..last {
        lead += h[i] * h[i];
        dot += h[i] * a[i] as f64;
    }
    let t_star = power * hk * dot / (1.0 + power * lead);
    let start = if t_star.is_finite() {
        (t_star.round() as i64).clamp(lo, hi)
    } else {
        lo
    };
    let mut visit = |t: i64, top: &mut TopN| -> bool {
        a[last] = t;
        let loss = loss_unchecked(h, power, a);
        let thr = top.threshold();
        if loss > thr * (1.0 + 1e-12) {
            return false;
        }
        let norm = a.iter().map(|v| v * v).sum();
        top.offer(Ranked {
            loss,
            norm,
            a: a.to_vec(),
        });
        true
    };
    let mut t = start;
    while t <= hi && visit(t, top) {
        t += 1;
    }
    let mut t = start - 1;
    while t >= lo && visit(t, top) {
        t -= 1;
    }
    a[last] = 0;
}

/// The rate-maximizing integer coefficient vector for channel row `h`.
pub fn best_coefficient_vector(
    h: &[f64],
    power: f64,
    cfg: &SearchConfig,
) -> Result<(CoefficientVector, f64)> {
    let best = top_coefficient_vectors(h, power, 1, cfg)?
        .into_iter()
        .next()
        .ok_or_else(|| invalid("empty coefficient search region"))?;
    Ok((best.a, best.rate_bits))
}

/// Sum rate `Σ_k min_{m: a_{m,k} ≠ 0} R(h_m, P, a_m)` of a coefficient matrix.
pub fn lattice_rate_matrix(h: &ChannelMatrix, power: f64, a: &CoefficientMatrix) -> Result<f64> {
    if h.k() != a.k() {
        return Err(invalid("channel and coefficient matrix dimensions differ"));
    }
    let rates = (0..h.k())
        .map(|m| lattice_rate_single(h.row(m), power, a.row(m)))
        .collect::<Result<Vec<_>>>()?;
    Ok(column_min_sum(h.k(), |m, k| a.get(m, k), &rates))
}

fn column_min_sum(k: usize, entry: impl Fn(usize, usize) -> i64, rates: &[f64]) -> f64 {
    (0..k)
        .map(|col| {
            (0..k)
                .filter(|&m| entry(m, col) != 0)
                .map(|m| rates[m])
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|v| v.is_finite())
        .sum()
}

/// Result of the full-rank coefficient matrix search.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRate {
    pub a: CoefficientMatrix,
    pub rate_bits: f64,
    /// Set when no candidate combination was full rank and the identity was used.
    pub fallback: bool,
}

/// Best full-rank coefficient matrix among combinations of each receiver's
/// top-N coefficient vectors.
pub fn lattice_sum_rate(h: &ChannelMatrix, power: f64, cfg: &SearchConfig) -> Result<SumRate> {
    let k = h.k();
    if k > cfg.max_k {
        return Err(Error::ResourceLimit {
            what: "full-rank coefficient matrix search",
            needed: k as f64,
            budget: cfg.max_k as f64,
            hint: Some("K exceeds the exhaustive limit".into()),
        });
    }
    let lists = (0..k)
        .map(|m| top_coefficient_vectors(h.row(m), power, cfg.top_n, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut idx = vec![0usize; k];
    let mut rates = vec![0.0; k];
    let mut rows: Vec<Vec<i64>> = vec![vec![]; k];
    if lists.iter().all(|l| !l.is_empty()) {
        'odometer: loop {
            for m in 0..k {
                rows[m].clone_from(&lists[m][idx[m]].a.0);
                rates[m] = lists[m][idx[m]].rate_bits;
            }
            let mat = CoefficientMatrix::from_rows(&rows)?;
            if mat.is_full_rank() {
                let r = column_min_sum(k, |m, c| mat.get(m, c), &rates);
                if best.as_ref().is_none_or(|(_, b)| r > *b) {
                    best = Some((idx.clone(), r));
                }
            }
            for m in (0..k).rev() {
                idx[m] += 1;
                if idx[m] < lists[m].len() {
                    continue 'odometer;
                }
                idx[m] = 0;
            }
            break;
        }
    }
    match best {
        Some((idx, rate_bits)) => {
            let rows: Vec<Vec<i64>> = (0..k).map(|m| lists[m][idx[m]].a.0.clone()).collect();
            Ok(SumRate {
                a: CoefficientMatrix::from_rows(&rows)?,
                rate_bits,
                fallback: false,
            })
        }
        None => {
            let a = CoefficientMatrix::identity(k);
            Ok(SumRate {
                rate_bits: lattice_rate_matrix(h, power, &a)?,
                a,
                fallback: true,
            })
        }
    }
}

fn check_power(power: f64) -> Result<()> {
    if power.is_finite() && power > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("power must be positive and finite, got {power}")))
    }
}

/// Time sharing between the direct links: `Σ_k (1/2K) log(1 + K P |h_kk|²)`.
pub fn time_sharing_rate(h: &ChannelMatrix, power: f64) -> Result<f64> {
    check_power(power)?;
    let k = h.k() as f64;
    Ok((0..h.k())
        .map(|i| (1.0 + k * power * h.get(i, i).powi(2)).log2() / (2.0 * k))
        .sum())
}

/// Reference line `(K/4) log P` for interference alignment.
pub fn ia_baseline(k: usize, power: f64) -> Result<f64> {
    if !(power.is_finite() && power > 1.0) {
        return Err(invalid(format!("power must exceed 1, got {power}")));
    }
    Ok(k as f64 / 4.0 * power.log2())
}

/// Sum-power MIMO capacity with its water-filling allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoBound {
    pub rate_bits: f64,
    /// Squared singular values of `H`, descending.
    pub gains: Vec<f64>,
    /// Power on each mode, aligned with `gains`.
    pub allocation: Vec<f64>,
}

/// Water-filling of `total` power over parallel modes with gains `gains`.
/// The water level is found by bisection to 1e-10 relative tolerance.
pub fn water_fill(gains: &[f64], total: f64) -> Vec<f64> {
    let active: Vec<f64> = gains.iter().filter(|&&g| g > 0.0).map(|g| 1.0 / g).collect();
    if active.is_empty() || total <= 0.0 {
        return vec![0.0; gains.len()];
    }
    let filled = |level: f64| -> f64 { active.iter().map(|inv| (level - inv).max(0.0)).sum() };
    let mut lo = 0.0;
    let mut hi = total + active.iter().cloned().fold(0.0, f64::max);
    for _ in 0..500 {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if filled(mid) > total {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let level = 0.5 * (lo + hi);
    gains
        .iter()
        .map(|&g| if g > 0.0 { (level - 1.0 / g).max(0.0) } else { 0.0 })
        .collect()
}

/// MIMO upper bound `max ½ log det(I + H Q Hᵀ)` over `trace(Q) ≤ K P`.
pub fn mimo_upper_bound(h: &ChannelMatrix, power: f64) -> Result<MimoBound> {
    check_power(power)?;
    let k = h.k();
    let mat = DMatrix::from_row_slice(k, k, h.entries());
    let svd = mat
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("singular value decomposition did not converge".into()))?;
    let mut gains: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    let allocation = water_fill(&gains, k as f64 * power);
    let rate_bits = gains
        .iter()
        .zip(&allocation)
        .map(|(g, q)| 0.5 * (1.0 + g * q).log2())
        .sum();
    Ok(MimoBound {
        rate_bits,
        gains,
        allocation,
    })
}

/// Both sides of the loss lower bound `loss ≥ q + (4/π²) P ||h||² q ψ²(q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffReport {
    pub loss: f64,
    pub bound: f64,
    pub q: i64,
    pub psi: f64,
    pub holds: bool,
}

/// Relative slack for comparing the two sides; they coincide for collinear `a`.
pub const TRADEOFF_REL_TOL: f64 = 1e-12;

/// Evaluates the loss lower bound for `a`, with `a` sign-aligned to `h`
/// (the loss is invariant under `a → −a`, the bound is not).
pub fn loss_tradeoff_check(h: &[f64], power: f64, a: &[i64]) -> Result<TradeoffReport> {
    check_inputs(h, power, a)?;
    let k = h.len();
    let dot: f64 = h.iter().zip(a).map(|(h, &a)| h * a as f64).sum();
    let sign = if dot < 0.0 { -1 } else { 1 };
    let a: Vec<i64> = a.iter().map(|v| sign * v).collect();
    let h_norm2 = squared(h);
    let h_norm = h_norm2.sqrt();
    let q: i64 = a.iter().map(|v| v * v).sum();
    let sq = (q as f64).sqrt();
    let psi = (0..k.saturating_sub(1))
        .map(|i| (h[i] / h_norm - a[i] as f64 / sq).abs())
        .fold(0.0, f64::max);
    let loss = loss_unchecked(h, power, &a);
    let bound = q as f64 + 4.0 / (PI * PI) * power * h_norm2 * q as f64 * psi * psi;
    Ok(TradeoffReport {
        loss,
        bound,
        q,
        psi,
        holds: loss >= bound * (1.0 - TRADEOFF_REL_TOL),
    })
}

/// One point of the normalized-rate sweep for `h = (1, h2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRateRow {
    pub h2: f64,
    pub snr_db: f64,
    pub a: CoefficientVector,
    pub normalized_rate: f64,
}

/// `max_a R(h, P, a) / ½ log(1 + ||h||² P)` for `h = (1, h2)`, for every SNR
/// (outer) and grid value (inner).
pub fn normalized_rate_sweep(
    h2_grid: &[f64],
    snr_db_list: &[f64],
    cfg: &SearchConfig,
) -> Result<Vec<NormalizedRateRow>> {
    if h2_grid.is_empty() || snr_db_list.is_empty() {
        return Err(invalid("sweep grid and SNR list must be nonempty"));
    }
    let points: Vec<(f64, f64)> = snr_db_list
        .iter()
        .flat_map(|&s| h2_grid.iter().map(move |&h2| (s, h2)))
        .collect();
    points
        .par_iter()
        .map(|&(snr_db, h2)| {
            let power = db_to_linear(snr_db);
            let h = [1.0, h2];
            let (a, rate) = best_coefficient_vector(&h, power, cfg)?;
            let full = 0.5 * (1.0 + (1.0 + h2 * h2) * power).log2();
            Ok(NormalizedRateRow {
                h2,
                snr_db,
                a,
                normalized_rate: rate / full,
            })
        })
        .collect()
}

/// Least-squares slope of `rates` against `½ log P`: the DoF estimate of a
/// sampled rate curve.
pub fn dof_slope(rates: &[f64], powers_db: &[f64]) -> Result<f64> {
    if rates.len() != powers_db.len() {
        return Err(invalid("rates and powers must have equal length"));
    }
    if rates.len() < 3 {
        return Err(invalid("a slope fit needs at least three points"));
    }
    if powers_db.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("powers must be strictly increasing"));
    }
    let xs: Vec<f64> = powers_db
        .iter()
        .map(|&db| 0.5 * db_to_linear(db).log2())
        .collect();
    least_squares_slope(&xs, rates)
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(invalid("degenerate regression: constant abscissa"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
