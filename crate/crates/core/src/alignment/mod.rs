//! Signal alignment: each transmitter sends submessages on monomial
//! signatures so that submessages meeting the same receive monomial fuse into
//! one integer equation.

mod demod;
pub mod pipeline;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelMatrix;
use crate::diophantine::{
    self, build_monomial_set, check_unique_factorization, exponents_lex, ExponentMatrix, Monomial,
    Offset, SeparationAlgorithm, DEFAULT_REL_TOL,
};
use crate::error::{invalid, Error, Result};
use crate::fpcode::{is_prime, p_ary_entropy};

pub use demod::{candidate_space, ml_demodulate, DemodStrategy, DEFAULT_DEMOD_BUDGET};

/// How the modulation scaling `B` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingMode {
    /// `B = (Kp)^{(L+1)^{K²}}`.
    Paper,
    /// `B = 2 c5 √p / separation`, so that half the minimum distance between
    /// noiseless receive points is the margin `c5 √p`.
    Tight { c5: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationConfig {
    pub k: usize,
    pub l: usize,
    pub p: u64,
    pub scaling_mode: ScalingMode,
    /// Zero switches the noise off.
    pub noise_variance: f64,
}

impl ModulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(invalid(format!("{} is not prime", self.p)));
        }
        if self.l == 0 || self.k == 0 {
            return Err(invalid("K and L must be at least 1"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(invalid("noise variance must be finite and nonnegative"));
        }
        if let ScalingMode::Tight { c5 } = self.scaling_mode {
            if !(c5 > 0.0 && c5.is_finite()) {
                return Err(invalid("c5 must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub submessage_id: usize,
    pub monomial: Monomial,
}

/// Per transmitter, the signature monomial of every submessage, plus the
/// common scaling `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMap {
    pub per_tx: Vec<Vec<Signature>>,
    /// `B`; infinite when it exceeds the floating-point range.
    pub scaling: f64,
    pub log2_scaling: f64,
    /// `Some(L)` when every transmitter carries exactly `G_L`.
    pub canonical_l: Option<usize>,
}

impl SignatureMap {
    pub fn k(&self) -> usize {
        self.per_tx.len()
    }

    /// `B`, or a numeric error when it is not representable.
    pub fn scaling(&self) -> Result<f64> {
        let b = self.scaling;
        if b.is_finite() && b > 0.0 {
            Ok(b)
        } else {
            Err(Error::Numeric(format!(
                "scaling 2^{:.1} is not representable; use tight scaling",
                self.log2_scaling
            )))
        }
    }

    pub fn submessage_count(&self) -> usize {
        self.per_tx.iter().map(Vec::len).sum()
    }

    /// One more than the largest signature exponent.
    pub fn degree_bound(&self) -> usize {
        self.per_tx
            .iter()
            .flatten()
            .map(|s| s.monomial.exponent.max_exponent() as usize + 1)
            .max()
            .unwrap_or(1)
    }
}

/// One fused equation at a receiver: the receive monomial and the
/// `(transmitter, submessage)` pairs observed with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub exponent: ExponentMatrix,
    pub value: f64,
    pub contributors: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationSystem {
    pub k: usize,
    /// Groups per receiver, ordered by total degree then exponents.
    pub receivers: Vec<Vec<Group>>,
    /// `position[m][k][i]` is the group of submessage `(k, i)` at receiver `m`.
    pub position: Vec<Vec<Vec<usize>>>,
    /// Signature exponents per transmitter.
    pub signatures: Vec<Vec<ExponentMatrix>>,
    pub canonical_l: Option<usize>,
}

impl EquationSystem {
    pub fn equation_count(&self) -> usize {
        self.receivers.iter().map(Vec::len).sum()
    }

    pub fn submessage_count(&self) -> usize {
        self.signatures.iter().map(Vec::len).sum()
    }
}

/// Every transmitter sends one submessage per `g ∈ G_L`, indexed in the
/// lexicographic exponent order. The scaling is left at 1.
pub fn canonical_signatures(h: &ChannelMatrix, l: usize) -> Result<SignatureMap> {
    if h.has_zero_entry() {
        return Err(Error::NonGeneric("channel has a zero gain".into()));
    }
    let set = build_monomial_set(h, l)?;
    if !check_unique_factorization(&set, DEFAULT_REL_TOL) {
        return Err(Error::NonGeneric(format!("monomials of degree below {l} collide")));
    }
    let mut by_exponent: BTreeMap<ExponentMatrix, f64> = BTreeMap::new();
    for m in set.monomials {
        by_exponent.insert(m.exponent, m.value);
    }
    let row: Vec<Signature> = exponents_lex(h.k(), l)?
        .into_iter()
        .enumerate()
        .map(|(id, e)| Signature {
            submessage_id: id,
            monomial: Monomial {
                value: by_exponent[&e],
                exponent: e,
            },
        })
        .collect();
    Ok(SignatureMap {
        per_tx: vec![row; h.k()],
        scaling: 1.0,
        log2_scaling: 0.0,
        canonical_l: Some(l),
    })
}

/// [`canonical_signatures`] with the scaling chosen for prime `p`.
pub fn canonical_signature(
    h: &ChannelMatrix,
    l: usize,
    p: u64,
    mode: ScalingMode,
) -> Result<(SignatureMap, EquationSystem)> {
    let sig = canonical_signatures(h, l)?;
    let eq = derive_equation_system(&sig, h, DEFAULT_REL_TOL)?;
    let sig = apply_scaling(sig, &eq, p, mode)?;
    Ok((sig, eq))
}

/// The two-user signatures `x₁ = w₁₁ + h₁h₂ w₁₂`, `x₂ = h₁ w₂₁ + h₁²h₂ w₂₂`
/// for the channel `[[1, h₂], [h₁, 1]]` (see
/// [`ChannelMatrix::two_user_example`]).
pub fn example_signature(h: &ChannelMatrix) -> Result<SignatureMap> {
    if h.k() != 2 {
        return Err(invalid("the example signature needs K = 2"));
    }
    if !(h.is_unit(0, 0) && h.is_unit(1, 1)) {
        return Err(invalid(
            "the example signature needs unit direct links; build the channel with two_user_example",
        ));
    }
    let (h1, h2) = (h.get(1, 0), h.get(0, 1));
    let mut vals = Vec::with_capacity(9);
    for i in 0..=2 {
        for j in 0..=2 {
            vals.push(h1.powi(i) * h2.powi(j));
        }
    }
    vals.sort_by(f64::total_cmp);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if h1 == 0.0 || h2 == 0.0 || vals.windows(2).any(|w| w[1] - w[0] <= DEFAULT_REL_TOL * scale) {
        return Err(Error::NonGeneric("example gains h1, h2 are not generic".into()));
    }
    let mono = |s: [u32; 4]| -> Result<Monomial> {
        let exponent = ExponentMatrix::new(2, s.to_vec())?;
        Ok(Monomial {
            value: exponent.evaluate(h)?,
            exponent,
        })
    };
    // Exponent layout is row-major: index 1 is h₂ = h[0][1], index 2 is h₁ = h[1][0].
    let tx1 = vec![mono([0, 0, 0, 0])?, mono([0, 1, 1, 0])?];
    let tx2 = vec![mono([0, 0, 1, 0])?, mono([0, 1, 2, 0])?];
    let wrap = |v: Vec<Monomial>| {
        v.into_iter()
            .enumerate()
            .map(|(submessage_id, monomial)| Signature {
                submessage_id,
                monomial,
            })
            .collect()
    };
    Ok(SignatureMap {
        per_tx: vec![wrap(tx1), wrap(tx2)],
        scaling: 1.0,
        log2_scaling: 0.0,
        canonical_l: None,
    })
}

/// Groups submessages by receive monomial using exponent arithmetic; float
/// values are attached afterwards and only checked for collisions.
pub fn derive_equation_system(
    sig: &SignatureMap,
    h: &ChannelMatrix,
    rel_tol: f64,
) -> Result<EquationSystem> {
    let k = h.k();
    if sig.k() != k {
        return Err(invalid("signature map and channel dimensions differ"));
    }
    for (tx, row) in sig.per_tx.iter().enumerate() {
        let mut ex: Vec<&ExponentMatrix> = row.iter().map(|s| &s.monomial.exponent).collect();
        ex.sort();
        if ex.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(format!("transmitter {tx} repeats a signature")));
        }
    }
    let mut receivers = Vec::with_capacity(k);
    let mut position = Vec::with_capacity(k);
    for m in 0..k {
        let mut groups: BTreeMap<(u32, ExponentMatrix), Vec<(usize, usize)>> = BTreeMap::new();
        for (tx, row) in sig.per_tx.iter().enumerate() {
            for (i, s) in row.iter().enumerate() {
                let e = s.monomial.exponent.times_gain(h, m, tx);
                groups.entry((e.total_degree(), e)).or_default().push((tx, i));
            }
        }
        let mut pos: Vec<Vec<usize>> = sig.per_tx.iter().map(|r| vec![0; r.len()]).collect();
        let mut list = Vec::with_capacity(groups.len());
        for (gi, ((_, exponent), contributors)) in groups.into_iter().enumerate() {
            for &(tx, i) in &contributors {
                pos[tx][i] = gi;
            }
            list.push(Group {
                value: exponent.evaluate(h)?,
                exponent,
                contributors,
            });
        }
        let mut vals: Vec<f64> = list.iter().map(|g| g.value).collect();
        vals.sort_by(f64::total_cmp);
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if vals.windows(2).any(|w| w[1] - w[0] <= rel_tol * scale) {
            return Err(Error::NonGeneric(format!(
                "distinct receive monomials collide at receiver {m}"
            )));
        }
        receivers.push(list);
        position.push(pos);
    }
    Ok(EquationSystem {
        k,
        receivers,
        position,
        signatures: sig
            .per_tx
            .iter()
            .map(|r| r.iter().map(|s| s.monomial.exponent.clone()).collect())
            .collect(),
        canonical_l: sig.canonical_l,
    })
}

/// Minimum distance between noiseless receive points at receiver `m`, in
/// units of `B`: `min |Σ c_g g̃|` over `|c_g| ≤ n_g (p−1)`, not all zero,
/// where `n_g` counts the contributors of group `g`.
pub fn receiver_separation(eq: &EquationSystem, m: usize, p: u64, budget: f64) -> Result<f64> {
    let groups = &eq.receivers[m];
    let values: Vec<f64> = groups.iter().map(|g| g.value).collect();
    let bounds: Vec<i64> = groups
        .iter()
        .map(|g| g.contributors.len() as i64 * (p as i64 - 1))
        .collect();
    diophantine::separation_bounded(
        &values,
        &bounds,
        Offset::None,
        SeparationAlgorithm::MeetInTheMiddle,
        budget,
    )
}

/// Sets the scaling of `sig` for prime `p`.
pub fn apply_scaling(
    mut sig: SignatureMap,
    eq: &EquationSystem,
    p: u64,
    mode: ScalingMode,
) -> Result<SignatureMap> {
    if !is_prime(p) {
        return Err(invalid(format!("{p} is not prime")));
    }
    sig.scaling = match mode {
        ScalingMode::Paper => {
            let l = sig.canonical_l.unwrap_or(sig.degree_bound());
            let n = ((l + 1) as f64).powi((sig.k() * sig.k()) as i32);
            let base = (sig.k() as u64 * p) as f64;
            if n < i32::MAX as f64 {
                base.powi(n as i32)
            } else {
                f64::INFINITY
            }
        }
        ScalingMode::Tight { c5 } => {
            if !(c5 > 0.0 && c5.is_finite()) {
                return Err(invalid("c5 must be positive"));
            }
            let mut sep = f64::INFINITY;
            for m in 0..eq.k {
                sep = sep.min(receiver_separation(eq, m, p, DEFAULT_DEMOD_BUDGET)?);
            }
            if sep <= 0.0 {
                return Err(Error::NonGeneric("receive points coincide".into()));
            }
            2.0 * c5 * (p as f64).sqrt() / sep
        }
    };
    sig.log2_scaling = match mode {
        ScalingMode::Paper => diophantine::log2_paper_scaling(
            sig.k(),
            sig.canonical_l.unwrap_or(sig.degree_bound()),
            p,
        ),
        ScalingMode::Tight { .. } => sig.scaling.log2(),
    };
    Ok(sig)
}

fn check_submessages(w: &[Vec<u64>], shape: impl Iterator<Item = usize>, p: u64) -> Result<()> {
    let shape: Vec<usize> = shape.collect();
    if w.len() != shape.len() || w.iter().zip(&shape).any(|(r, &n)| r.len() != n) {
        return Err(invalid("submessage shape does not match the signature map"));
    }
    if w.iter().flatten().any(|&v| v >= p) {
        return Err(invalid(format!("submessage value outside [0, {}]", p - 1)));
    }
    Ok(())
}

/// `x_k = B Σ_i w̄_{k,i} g_{k,i}` for one channel use.
pub fn modulate(w: &[Vec<u64>], sig: &SignatureMap, p: u64) -> Result<Vec<f64>> {
    check_submessages(w, sig.per_tx.iter().map(Vec::len), p)?;
    let b = sig.scaling()?;
    Ok(sig
        .per_tx
        .iter()
        .zip(w)
        .map(|(row, w)| b * row.iter().zip(w).fold(0.0, |acc, (s, &v)| acc + v as f64 * s.monomial.value))
        .collect())
}

/// `y = H x + z` with `z` i.i.d. `N(0, variance)`; no draws when the variance
/// is zero.
pub fn awgn_channel<R: Rng + ?Sized>(x: &[f64], h: &ChannelMatrix, variance: f64, rng: &mut R) -> Vec<f64> {
    let mut y = h.apply(x);
    if variance > 0.0 {
        let sd = variance.sqrt();
        for v in &mut y {
            let z: f64 = rng.sample(StandardNormal);
            *v += sd * z;
        }
    }
    y
}

/// [`awgn_channel`] with a generator seeded from `seed`.
pub fn awgn_channel_seeded(x: &[f64], h: &ChannelMatrix, variance: f64, seed: u64) -> Vec<f64> {
    awgn_channel(x, h, variance, &mut crate::seed::rng(seed))
}

/// Integer equation values `ū_{m,g} = Σ_{(k,i) in g} w̄_{k,i}`, unreduced.
pub fn true_equations(w: &[Vec<u64>], eq: &EquationSystem) -> Result<Vec<Vec<u64>>> {
    check_submessages(w, eq.signatures.iter().map(Vec::len), u64::MAX)?;
    Ok(eq
        .receivers
        .iter()
        .map(|groups| {
            groups
                .iter()
                .map(|g| g.contributors.iter().map(|&(k, i)| w[k][i]).sum())
                .collect()
        })
        .collect())
}

/// `log₂ c4 = 2K² log₂ max(1, max|h|)`.
pub fn log2_c4(h: &ChannelMatrix) -> f64 {
    2.0 * (h.k() * h.k()) as f64 * h.max_abs().max(1.0).log2()
}

/// `log₂` of `c4^L (Kp)^{2(L+1)^{K²}} L^{2K²} p²`.
pub fn log2_power_bound(k: usize, l: usize, p: u64, h: &ChannelMatrix) -> f64 {
    let k2 = (k * k) as f64;
    l as f64 * log2_c4(h)
        + 2.0 * ((l + 1) as f64).powf(k2) * ((k as u64 * p) as f64).log2()
        + 2.0 * k2 * (l as f64).log2()
        + 2.0 * (p as f64).log2()
}

/// Transmit power bound of paper-mode modulation.
pub fn power_bound(k: usize, l: usize, p: u64, h: &ChannelMatrix) -> Result<f64> {
    if k != h.k() || l == 0 || p < 2 {
        return Err(invalid("need K = dim H, L ≥ 1 and p ≥ 2"));
    }
    let v = log2_power_bound(k, l, p, h).exp2();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric("power bound overflows; use log2_power_bound".into()))
    }
}

/// Demodulation error bound `exp(−c5² p / 2)`.
pub fn error_bound(p: u64, c5: f64) -> Result<f64> {
    if !(c5 > 0.0) {
        return Err(invalid("c5 must be positive"));
    }
    Ok((-c5 * c5 * p as f64 / 2.0).exp())
}

/// `L = round((log₂ P̃)^{1/(1+K²)})` and the largest prime `p` with
/// `P(L, p) ≤ P̃`. The target is given as `log₂ P̃`.
pub fn select_parameters(log2_target: f64, h: &ChannelMatrix) -> Result<(usize, u64)> {
    let k = h.k();
    if !(log2_target > 0.0) {
        return Err(invalid("target power must exceed 1"));
    }
    let l = (log2_target.powf(1.0 / (1.0 + (k * k) as f64)).round() as usize).max(1);
    let fits = |p: u64| log2_power_bound(k, l, p, h) <= log2_target;
    if !fits(2) {
        return Err(Error::Infeasible(format!(
            "no prime p satisfies P(L={l}, p) ≤ 2^{log2_target}"
        )));
    }
    let (mut lo, mut hi) = (2u64, 4u64);
    while fits(hi) {
        lo = hi;
        hi = hi.checked_mul(2).ok_or_else(|| Error::Infeasible("prime search overflows".into()))?;
        if hi > 1 << 40 {
            return Err(Error::ResourceLimit {
                what: "prime selection",
                needed: hi as f64,
                budget: (1u64 << 40) as f64,
                hint: None,
            });
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = (2..=lo).rev().find(|&n| is_prime(n)).expect("2 is prime and fits");
    debug_assert!(fits(p) && !fits(2 * p));
    if log2_power_bound(k, l, 2 * p, h) < log2_target {
        return Err(Error::Numeric("prime gap exceeds the Bertrand bound".into()));
    }
    Ok((l, p))
}

/// `K L^{K²} (1 − H_p(2ε)) log₂ p` bits per channel use.
pub fn achievable_rate(k: usize, l: usize, p: u64, epsilon: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&epsilon) {
        return Err(Error::Infeasible(format!(
            "demodulation error {epsilon} must be below 1/4"
        )));
    }
    let g = (l as f64).powi((k * k) as i32);
    Ok(k as f64 * g * (1.0 - p_ary_entropy(p, 2.0 * epsilon)?) * (p as f64).log2())
}
