//! Monomials in the channel gains, unique factorization, and Diophantine
//! approximation diagnostics.

use std::fmt;

use crate::channel::ChannelMatrix;
use crate::error::{invalid, Error, Result};
use crate::rates::least_squares_slope;

/// Default relative tolerance of the unique factorization check.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Largest monomial set that will be enumerated.
pub const MAX_MONOMIALS: u64 = 1 << 22;

/// Exponents `s_{m,k}` of a monomial `Π h_{m,k}^{s_{m,k}}`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentMatrix {
    k: usize,
    s: Vec<u32>,
}

impl ExponentMatrix {
    pub fn zero(k: usize) -> Self {
        Self { k, s: vec![0; k * k] }
    }

    pub fn new(k: usize, s: Vec<u32>) -> Result<Self> {
        if s.len() != k * k {
            return Err(invalid(format!("expected {} exponents, got {}", k * k, s.len())));
        }
        Ok(Self { k, s })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, m: usize, k: usize) -> u32 {
        self.s[m * self.k + k]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.s
    }

    pub fn total_degree(&self) -> u32 {
        self.s.iter().sum()
    }

    pub fn max_exponent(&self) -> u32 {
        self.s.iter().copied().max().unwrap_or(0)
    }

    /// Exponents of this monomial times `h_{m,k}`. Structural unit gains
    /// leave the exponents unchanged.
    pub fn times_gain(&self, h: &ChannelMatrix, m: usize, k: usize) -> Self {
        let mut out = self.clone();
        if !h.is_unit(m, k) {
            out.s[m * self.k + k] += 1;
        }
        out
    }

    /// Exponents of this monomial divided by `h_{m,k}`, if that is a monomial.
    pub fn divided_by_gain(&self, h: &ChannelMatrix, m: usize, k: usize) -> Option<Self> {
        let mut out = self.clone();
        if !h.is_unit(m, k) {
            let e = &mut out.s[m * self.k + k];
            *e = e.checked_sub(1)?;
        }
        Some(out)
    }

    /// Evaluates the monomial at `h` in double-double precision, rounded once.
    pub fn evaluate(&self, h: &ChannelMatrix) -> Result<f64> {
        if h.k() != self.k {
            return Err(invalid("exponent matrix and channel dimensions differ"));
        }
        let mut acc = Dd::ONE;
        let mut nonzero_base = true;
        for (i, &e) in self.s.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let base = h.entries()[i];
            nonzero_base &= base != 0.0;
            acc = acc.mul(Dd::from(base).powu(e));
        }
        let v = acc.to_f64();
        if !v.is_finite() {
            return Err(Error::Numeric(format!("monomial {self} overflows")));
        }
        if nonzero_base && (v == 0.0 || v.is_subnormal()) {
            return Err(Error::Numeric(format!("monomial {self} underflows")));
        }
        Ok(v)
    }
}

impl fmt::Display for ExponentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (m, row) in self.s.chunks(self.k).enumerate() {
            if m > 0 {
                write!(f, "; ")?;
            }
            let parts: Vec<String> = row.iter().map(u32::to_string).collect();
            write!(f, "{}", parts.join(" "))?;
        }
        write!(f, "]")
    }
}

// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        let hi = p + e;
        Dd { hi, lo: e - (hi - p) }
    }

    fn powu(self, mut e: u32) -> Dd {
        let mut base = self;
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(base);
            }
        }
        acc
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

/// A monomial `g` with its exponent matrix and value at the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub exponent: ExponentMatrix,
    pub value: f64,
}

/// All monomials with exponents in `[0, L−1]`, sorted by value.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialSet {
    pub k: usize,
    pub l: usize,
    pub monomials: Vec<Monomial>,
}

impl MonomialSet {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.monomials.iter().map(|m| m.value).collect()
    }
}

/// Number of exponent matrices with `K²` entries in `[0, L−1]`.
pub fn monomial_count(k: usize, l: usize) -> Result<u64> {
    let n = (l as f64).powi((k * k) as i32);
    if n > MAX_MONOMIALS as f64 {
        return Err(Error::ResourceLimit {
            what: "monomial enumeration",
            needed: n,
            budget: MAX_MONOMIALS as f64,
            hint: None,
        });
    }
    Ok(n as u64)
}

/// Every exponent matrix of `G_L` in lexicographic order of the row-major
/// exponent vector. This order defines canonical submessage indices.
pub fn exponents_lex(k: usize, l: usize) -> Result<Vec<ExponentMatrix>> {
    if l == 0 {
        return Err(invalid("degree bound L must be at least 1"));
    }
    let n = monomial_count(k, l)? as usize;
    let mut out = Vec::with_capacity(n);
    let mut s = vec![0u32; k * k];
    for _ in 0..n {
        out.push(ExponentMatrix { k, s: s.clone() });
        for e in s.iter_mut().rev() {
            *e += 1;
            if (*e as usize) < l {
                break;
            }
            *e = 0;
        }
    }
    Ok(out)
}

/// Builds `G_L` evaluated at `h`.
pub fn build_monomial_set(h: &ChannelMatrix, l: usize) -> Result<MonomialSet> {
    let mut monomials = exponents_lex(h.k(), l)?
        .into_iter()
        .map(|e| {
            let value = e.evaluate(h)?;
            Ok(Monomial { exponent: e, value })
        })
        .collect::<Result<Vec<_>>>()?;
    monomials.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.exponent.cmp(&b.exponent)));
    Ok(MonomialSet { k: h.k(), l, monomials })
}

/// Smallest gap between sorted values, relative to the largest magnitude.
fn min_relative_gap(sorted: &[f64]) -> f64 {
    let scale = sorted.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    sorted
        .windows(2)
        .map(|w| (w[1] - w[0]) / scale)
        .fold(f64::INFINITY, f64::min)
}

/// True iff every pair of values differs by more than `rel_tol · max|value|`.
pub fn check_unique_factorization(set: &MonomialSet, rel_tol: f64) -> bool {
    let values = set.values();
    values.len() < 2 || min_relative_gap(&values) > rel_tol
}

/// Distinct receive monomials `h_{m,k} g` for `g ∈ G_L` at receiver `m`,
/// ordered by total degree then exponents.
pub fn receive_monomials(h: &ChannelMatrix, l: usize, m: usize) -> Result<Vec<Monomial>> {
    let mut ex: Vec<ExponentMatrix> = exponents_lex(h.k(), l)?
        .iter()
        .flat_map(|e| (0..h.k()).map(move |k| e.times_gain(h, m, k)))
        .collect();
    ex.sort_by(|a, b| a.total_degree().cmp(&b.total_degree()).then_with(|| a.cmp(b)));
    ex.dedup();
    ex.into_iter()
        .map(|e| {
            let value = e.evaluate(h)?;
            Ok(Monomial { exponent: e, value })
        })
        .collect()
}

/// `max_k min_{a ∈ ℤ} |h_k − a/√q|`.
pub fn khinchin_error(h: &[f64], q: u64) -> Result<f64> {
    if q == 0 {
        return Err(invalid("q must be at least 1"));
    }
    let sq = (q as f64).sqrt();
    Ok(h.iter()
        .map(|&x| {
            let t = x * sq;
            let lo = (x - t.floor() / sq).abs();
            let hi = (x - t.ceil() / sq).abs();
            lo.min(hi)
        })
        .fold(0.0, f64::max))
}

/// Power-law fit of the Khinchin error over its record minima.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Slope of `log error` against `log q` over the records.
    pub slope: Option<f64>,
    /// Set when some error is exactly zero or fewer than three records exist.
    pub degenerate: bool,
    /// `(q, error)` at every strict new minimum.
    pub records: Vec<(u64, f64)>,
}

/// Fits the decay of [`khinchin_error`] over `q = 1..=q_max` on its lower
/// envelope (strict record minima).
pub fn khinchin_decay_fit(h: &[f64], q_max: u64) -> Result<DecayFit> {
    if q_max < 16 {
        return Err(invalid("q_max must be at least 16"));
    }
    if h.is_empty() || h.iter().any(|v| !v.is_finite()) {
        return Err(invalid("h must be a nonempty finite vector"));
    }
    let mut records = Vec::new();
    let mut best = f64::INFINITY;
    for q in 1..=q_max {
        let e = khinchin_error(h, q)?;
        if e < best {
            best = e;
            records.push((q, e));
            if e == 0.0 {
                break;
            }
        }
    }
    let degenerate = best == 0.0 || records.len() < 3;
    let slope = if degenerate {
        None
    } else {
        let xs: Vec<f64> = records.iter().map(|&(q, _)| (q as f64).ln()).collect();
        let ys: Vec<f64> = records.iter().map(|&(_, e)| e.ln()).collect();
        Some(least_squares_slope(&xs, &ys)?)
    };
    Ok(DecayFit {
        slope,
        degenerate,
        records,
    })
}

/// Which distance the separation oracle minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offset {
    /// `|Σ q_g g − a|` minimized over `a ∈ ℤ` as well.
    Integer,
    /// `|Σ q_g g|`, the distance between signal points.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationAlgorithm {
    Exhaustive,
    MeetInTheMiddle,
}

/// Default candidate budget for the separation oracles.
pub const DEFAULT_SEPARATION_BUDGET: f64 = 1e8;

/// `min |Σ q_g g (− a)|` over `q ∈ {−q_max…q_max}^n \ {0}`.
pub fn monomial_separation(
    values: &[f64],
    q_max: i64,
    offset: Offset,
    algorithm: SeparationAlgorithm,
    budget: f64,
) -> Result<f64> {
    separation_bounded(values, &vec![q_max; values.len()], offset, algorithm, budget)
}

/// As [`monomial_separation`] with a separate bound `|q_i| ≤ bounds[i]` per value.
///
/// Both algorithms evaluate the same floating-point expression
/// `fl(s_A + s_B)`, where `s_A` and `s_B` are left-to-right sums over the
/// first `n/2` and the remaining values, and therefore agree bit for bit.
pub fn separation_bounded(
    values: &[f64],
    bounds: &[i64],
    offset: Offset,
    algorithm: SeparationAlgorithm,
    budget: f64,
) -> Result<f64> {
    if values.len() != bounds.len() {
        return Err(invalid("values and bounds must have equal length"));
    }
    if values.is_empty() || bounds.iter().any(|&b| b < 0) || bounds.iter().all(|&b| b == 0) {
        return Err(invalid("need at least one value with a positive coefficient bound"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("values must be finite"));
    }
    let split = values.len() / 2;
    let (va, vb) = values.split_at(split);
    let (ba, bb) = bounds.split_at(split);
    let size = |bs: &[i64]| bs.iter().map(|&b| (2 * b + 1) as f64).product::<f64>();
    match algorithm {
        SeparationAlgorithm::Exhaustive => {
            let needed = size(bounds);
            if needed > budget {
                return Err(Error::ResourceLimit {
                    what: "exhaustive separation",
                    needed,
                    budget,
                    hint: Some("use the meet-in-the-middle algorithm".into()),
                });
            }
            Ok(separation_exhaustive(va, ba, vb, bb, offset))
        }
        SeparationAlgorithm::MeetInTheMiddle => {
            let needed = size(ba) + size(bb);
            if needed > budget {
                return Err(Error::ResourceLimit {
                    what: "meet-in-the-middle separation",
                    needed,
                    budget,
                    hint: None,
                });
            }
            Ok(separation_mitm(va, ba, vb, bb, offset))
        }
    }
}

fn dist(s: f64, offset: Offset) -> f64 {
    match offset {
        Offset::Integer => (s - s.round()).abs(),
        Offset::None => s.abs(),
    }
}

// Calls `f(sum, nonzero)` for every coefficient vector in the box.
fn for_each_sum(values: &[f64], bounds: &[i64], mut f: impl FnMut(f64, bool)) {
    let n = values.len();
    let mut q: Vec<i64> = bounds.iter().map(|&b| -b).collect();
    loop {
        let s = q.iter().zip(values).fold(0.0, |acc, (&q, &v)| acc + q as f64 * v);
        f(s, q.iter().any(|&v| v != 0));
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if q[i] < bounds[i] {
                q[i] += 1;
                break;
            }
            q[i] = -bounds[i];
        }
    }
}

fn partial_sums(values: &[f64], bounds: &[i64]) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    for_each_sum(values, bounds, |s, nz| out.push((s, nz)));
    out
}

fn separation_exhaustive(va: &[f64], ba: &[i64], vb: &[f64], bb: &[i64], offset: Offset) -> f64 {
    let sums_b = partial_sums(vb, bb);
    let mut best = f64::INFINITY;
    for_each_sum(va, ba, |sa, nza| {
        for &(sb, nzb) in &sums_b {
            if nza || nzb {
                best = best.min(dist(sa + sb, offset));
            }
        }
    });
    best
}

fn separation_mitm(va: &[f64], ba: &[i64], vb: &[f64], bb: &[i64], offset: Offset) -> f64 {
    let all_b = partial_sums(vb, bb);
    let mut sorted: Vec<f64> = all_b.iter().map(|&(s, _)| s).collect();
    sorted.sort_by(f64::total_cmp);
    let lo_b = sorted[0];
    let hi_b = sorted[sorted.len() - 1];
    let mut best = f64::INFINITY;
    for (sa, nza) in partial_sums(va, ba) {
        if !nza {
            // Only nonzero second-half coefficients are admissible here.
            for &(sb, nzb) in &all_b {
                if nzb {
                    best = best.min(dist(sa + sb, offset));
                }
            }
            continue;
        }
        let (a_lo, a_hi) = match offset {
            Offset::None => (0.0, 0.0),
            Offset::Integer => ((sa + lo_b).floor(), (sa + hi_b).ceil()),
        };
        if a_hi - a_lo + 1.0 > sorted.len() as f64 {
            for &sb in &sorted {
                best = best.min(dist(sa + sb, offset));
            }
            continue;
        }
        let mut a = a_lo;
        while a <= a_hi {
            // fl(sa + ·) is monotone, so |fl(sa + sb) − a| is minimized next
            // to the first sb whose sum reaches a.
            let j = sorted.partition_point(|&sb| sa + sb < a);
            for idx in [j.wrapping_sub(1), j] {
                if let Some(&sb) = sorted.get(idx) {
                    let s = sa + sb;
                    best = best.min(match offset {
                        Offset::Integer => (s - a).abs(),
                        Offset::None => s.abs(),
                    });
                }
            }
            a += 1.0;
        }
    }
    best
}

/// One row of [`separation_scaling_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub p: u64,
    /// Minimum `|Σ q_g g|` over `|q_g| ≤ K(p−1)`, not all zero.
    pub separation: f64,
    /// `log₂` of the paper-mode scaling `(Kp)^{(L+1)^{K²}}`.
    pub log2_scaling: f64,
    /// `log₂(B · separation / √p)`; `−∞` when the separation vanishes.
    pub log2_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// False when some separation is zero, i.e. receive monomials collide.
    pub generic: bool,
}

/// `log₂ B` for the paper-mode scaling `B = (Kp)^{(L+1)^{K²}}`.
pub fn log2_paper_scaling(k: usize, l: usize, p: u64) -> f64 {
    ((l + 1) as f64).powi((k * k) as i32) * ((k as u64 * p) as f64).log2()
}

/// Scaled minimum signal distance against `√p` for each prime in `p_list`,
/// over the given receive monomial values (the monomial `1` excluded).
pub fn separation_scaling_probe(
    values: &[f64],
    k: usize,
    l: usize,
    p_list: &[u64],
    budget: f64,
) -> Result<ProbeReport> {
    let mut rows = Vec::with_capacity(p_list.len());
    for &p in p_list {
        if p < 2 {
            return Err(invalid("p must be at least 2"));
        }
        let bound = (k as i64) * (p as i64 - 1);
        let separation = monomial_separation(
            values,
            bound,
            Offset::None,
            SeparationAlgorithm::MeetInTheMiddle,
            budget,
        )?;
        let log2_scaling = log2_paper_scaling(k, l, p);
        let log2_ratio = separation.log2() + log2_scaling - 0.5 * (p as f64).log2();
        rows.push(ProbeRow {
            p,
            separation,
            log2_scaling,
            log2_ratio,
        });
    }
    Ok(ProbeReport {
        generic: rows.iter().all(|r| r.separation > 0.0),
        rows,
    })
}

/// [`separation_scaling_probe`] over the receive monomials of receiver `m`.
pub fn channel_scaling_probe(
    h: &ChannelMatrix,
    l: usize,
    m: usize,
    p_list: &[u64],
    budget: f64,
) -> Result<ProbeReport> {
    let values: Vec<f64> = receive_monomials(h, l, m)?
        .into_iter()
        .filter(|g| g.exponent.total_degree() > 0)
        .map(|g| g.value)
        .collect();
    separation_scaling_probe(&values, h.k(), l, p_list, budget)
}
