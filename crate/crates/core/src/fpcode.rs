//! Prime-field arithmetic and the shared linear outer code.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::seed;

/// Default enumeration budget for [`min_distance`] and [`md_decode`].
pub const DEFAULT_DECODE_BUDGET: f64 = (1u64 << 20) as f64;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The field `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(invalid(format!("{p} is not prime")));
        }
        if p > u32::MAX as u64 {
            return Err(invalid("field size must fit in 32 bits"));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b % self.p) % self.p
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a % self.p) % self.p
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a % self.p) * (b % self.p) % self.p
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: u64) -> Result<u64> {
        let a = a % self.p;
        if a == 0 {
            return Err(invalid("zero has no inverse"));
        }
        let (mut r0, mut r1) = (self.p as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        Ok(t0.rem_euclid(self.p as i64) as u64)
    }
}

/// `T × message_len` generator matrix `S` over `F_p`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    field: PrimeField,
    t: usize,
    message_len: usize,
    entries: Vec<u64>,
}

impl GeneratorMatrix {
    pub fn new(p: u64, t: usize, message_len: usize, entries: Vec<u64>) -> Result<Self> {
        let field = PrimeField::new(p)?;
        if message_len == 0 || message_len > t {
            return Err(invalid(format!(
                "message length {message_len} must lie in [1, T={t}]"
            )));
        }
        if entries.len() != t * message_len {
            return Err(invalid(format!(
                "expected {} generator entries, got {}",
                t * message_len,
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|&&e| e >= p) {
            return Err(invalid(format!("generator entry {e} is not in F_{p}")));
        }
        Ok(Self {
            field,
            t,
            message_len,
            entries,
        })
    }

    /// Identity on the first `message_len` symbols, zero padding below.
    pub fn identity_extension(p: u64, t: usize, message_len: usize) -> Result<Self> {
        let mut e = vec![0; t * message_len];
        for i in 0..message_len.min(t) {
            e[i * message_len + i] = 1;
        }
        Self::new(p, t, message_len, e)
    }

    pub fn repetition(p: u64, t: usize) -> Result<Self> {
        Self::new(p, t, 1, vec![1; t])
    }

    /// The binary Hamming(7,4) code in systematic form.
    pub fn hamming_7_4() -> Self {
        #[rustfmt::skip]
        let e = vec![
            1, 0, 0, 0,
            0, 1, 0, 0,
            0, 0, 1, 0,
            0, 0, 0, 1,
            1, 1, 0, 1,
            1, 0, 1, 1,
            0, 1, 1, 1,
        ];
        Self::new(2, 7, 4, e).expect("valid Hamming generator")
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> u64 {
        self.field.p
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn message_len(&self) -> usize {
        self.message_len
    }

    pub fn entry(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.message_len + col]
    }

    fn column(&self, col: usize) -> impl Iterator<Item = u64> + '_ {
        (0..self.t).map(move |r| self.entry(r, col))
    }

    /// `S w` over `F_p`.
    pub fn encode(&self, w: &[u64]) -> Result<Vec<u64>> {
        if w.len() != self.message_len {
            return Err(invalid(format!(
                "message has {} symbols, generator expects {}",
                w.len(),
                self.message_len
            )));
        }
        let p = self.field.p;
        Ok(self
            .entries
            .chunks(self.message_len)
            .map(|row| row.iter().zip(w).fold(0, |acc, (&s, &x)| (acc + s * (x % p)) % p))
            .collect())
    }

    /// Text form: a `p T message_len` header line, then one line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.field.p, self.t, self.message_len);
        for row in self.entries.chunks(self.message_len) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace().map(|t| {
            t.parse::<u64>()
                .map_err(|_| invalid(format!("bad generator token {t:?}")))
        });
        let mut next = || tokens.next().unwrap_or_else(|| Err(invalid("truncated generator text")));
        let p = next()?;
        let t = next()? as usize;
        let message_len = next()? as usize;
        let entries = (0..t * message_len).map(|_| next()).collect::<Result<Vec<_>>>()?;
        if tokens.next().is_some() {
            return Err(invalid("trailing data after generator entries"));
        }
        Self::new(p, t, message_len, entries)
    }
}

fn check_budget(g: &GeneratorMatrix, budget: f64, what: &'static str) -> Result<()> {
    let needed = (g.p() as f64).powi(g.message_len as i32);
    if needed > budget {
        return Err(Error::ResourceLimit {
            what,
            needed,
            budget,
            hint: None,
        });
    }
    Ok(())
}

/// Enumerates every message in lexicographic order together with its
/// codeword, updated incrementally one column at a time.
fn for_each_codeword(g: &GeneratorMatrix, mut f: impl FnMut(&[u64], &[u64])) {
    let p = g.p();
    let k = g.message_len;
    let mut msg = vec![0u64; k];
    let mut cw = vec![0u64; g.t];
    loop {
        f(&msg, &cw);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            // Both the increment and the wrap p−1 → 0 add column i once.
            for (c, s) in cw.iter_mut().zip(g.column(i)) {
                *c = (*c + s) % p;
            }
            msg[i] += 1;
            if msg[i] < p {
                break;
            }
            msg[i] = 0;
        }
    }
}

fn weight(c: &[u64]) -> usize {
    c.iter().filter(|&&s| s != 0).count()
}

/// Minimum Hamming weight over nonzero messages. A message mapped to the zero
/// codeword yields distance 0.
pub fn min_distance(g: &GeneratorMatrix, budget: f64) -> Result<usize> {
    check_budget(g, budget, "minimum distance enumeration")?;
    let mut best = usize::MAX;
    for_each_codeword(g, |m, c| {
        if m.iter().any(|&x| x != 0) {
            best = best.min(weight(c));
        }
    });
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub message: Vec<u64>,
    /// Hamming distance between the chosen codeword and the received word.
    pub corrections: usize,
    /// Another message achieves the same distance.
    pub ambiguous: bool,
}

/// Minimum Hamming distance decoding by exhaustive search; ties resolve to the
/// lexicographically smallest message and are flagged.
pub fn md_decode(g: &GeneratorMatrix, received: &[u64], budget: f64) -> Result<Decoded> {
    if received.len() != g.t {
        return Err(invalid(format!(
            "received word has {} symbols, code length is {}",
            received.len(),
            g.t
        )));
    }
    check_budget(g, budget, "minimum distance decoding")?;
    let p = g.p();
    let received: Vec<u64> = received.iter().map(|&s| s % p).collect();
    let mut best = usize::MAX;
    let mut message = vec![0; g.message_len];
    let mut ambiguous = false;
    for_each_codeword(g, |m, c| {
        let d = c.iter().zip(&received).filter(|(a, b)| a != b).count();
        if d < best {
            best = d;
            message.copy_from_slice(m);
            ambiguous = false;
        } else if d == best {
            ambiguous = true;
        }
    });
    Ok(Decoded {
        message,
        corrections: best,
        ambiguous,
    })
}

/// `H_p(x) = (x log(p−1) − x log x − (1−x) log(1−x)) / log p`.
pub fn p_ary_entropy(p: u64, x: f64) -> Result<f64> {
    if p < 2 {
        return Err(invalid("alphabet size must be at least 2"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("entropy argument {x} is outside [0, 1]")));
    }
    let xlogx = |v: f64| if v == 0.0 { 0.0 } else { v * v.log2() };
    Ok((x * ((p - 1) as f64).log2() - xlogx(x) - xlogx(1.0 - x)) / (p as f64).log2())
}

fn check_gv(p: u64, t: usize, d: usize) -> Result<()> {
    if d < 2 || 2 * d > t {
        return Err(invalid(format!("need 2 ≤ d ≤ T/2, got d={d}, T={t}")));
    }
    PrimeField::new(p).map(|_| ())
}

/// `(1 − H_p((d−1)/T)) log p` bits per symbol.
pub fn gv_rate_bound(p: u64, t: usize, d: usize) -> Result<f64> {
    check_gv(p, t, d)?;
    Ok((1.0 - p_ary_entropy(p, (d - 1) as f64 / t as f64)?) * (p as f64).log2())
}

/// `⌈T (1 − H_p((d−1)/T))⌉`, the message length `gv_search` aims for.
pub fn gv_message_len(p: u64, t: usize, d: usize) -> Result<usize> {
    check_gv(p, t, d)?;
    let frac = 1.0 - p_ary_entropy(p, (d - 1) as f64 / t as f64)?;
    // Guard against 2.0000000000000004 rounding up to 3.
    Ok(((t as f64 * frac) - 1e-9).ceil().max(1.0) as usize)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GvResult {
    pub generator: GeneratorMatrix,
    /// Number of attempts used, including the successful one.
    pub attempts: usize,
    pub seed: u64,
}

/// Random generator with i.i.d. uniform entries from the given seed.
pub fn random_generator(p: u64, t: usize, message_len: usize, seed: u64) -> Result<GeneratorMatrix> {
    let mut rng = seed::rng(seed);
    let entries = (0..t * message_len).map(|_| rng.random_range(0..p)).collect();
    GeneratorMatrix::new(p, t, message_len, entries)
}

/// Samples generator matrices at the GV message length until one has minimum
/// distance at least `d`. Attempt `i` uses seed `derive(seed, i)`.
pub fn gv_search(p: u64, t: usize, d: usize, max_attempts: usize, seed: u64) -> Result<GvResult> {
    let message_len = gv_message_len(p, t, d)?;
    gv_search_with_len(p, t, d, message_len, max_attempts, seed)
}

/// [`gv_search`] at an explicit message length.
pub fn gv_search_with_len(
    p: u64,
    t: usize,
    d: usize,
    message_len: usize,
    max_attempts: usize,
    seed: u64,
) -> Result<GvResult> {
    check_gv(p, t, d)?;
    let probe = GeneratorMatrix::identity_extension(p, t, message_len)?;
    check_budget(&probe, DEFAULT_DECODE_BUDGET, "code search verification")?;
    const CHUNK: usize = 64;
    let mut start = 0;
    while start < max_attempts {
        let end = (start + CHUNK).min(max_attempts);
        let found = (start..end).into_par_iter().find_map_first(|i| {
            let g = random_generator(p, t, message_len, seed::derive(seed, i as u64)).ok()?;
            let dist = min_distance(&g, DEFAULT_DECODE_BUDGET).ok()?;
            (dist >= d).then_some((i, g))
        });
        if let Some((i, generator)) = found {
            return Ok(GvResult {
                generator,
                attempts: i + 1,
                seed,
            });
        }
        start = end;
    }
    Err(Error::SearchFailure {
        attempts: max_attempts,
        p,
        t,
        d,
        message_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_ops() {
        let f = PrimeField::new(5).unwrap();
        assert_eq!(f.add(3, 4), 2);
        assert_eq!(f.inv(2).unwrap(), 3);
        assert_eq!(f.sub(1, 3), 3);
        assert_eq!(f.neg(0), 0);
        assert!(f.inv(0).is_err());
        let f7 = PrimeField::new(7).unwrap();
        for a in 1..7 {
            assert_eq!(f7.mul(a, f7.inv(a).unwrap()), 1);
        }
        assert!(PrimeField::new(9).is_err());
        assert!(PrimeField::new(1).is_err());
    }

    #[test]
    fn encode_basics() {
        let g = GeneratorMatrix::identity_extension(5, 6, 3).unwrap();
        assert_eq!(g.encode(&[0, 0, 0]).unwrap(), vec![0; 6]);
        assert_eq!(g.encode(&[4, 1, 2]).unwrap(), vec![4, 1, 2, 0, 0, 0]);
        assert!(g.encode(&[1, 2]).is_err());
    }

    #[test]
    fn classical_distances() {
        let b = DEFAULT_DECODE_BUDGET;
        assert_eq!(min_distance(&GeneratorMatrix::identity_extension(3, 4, 4).unwrap(), b).unwrap(), 1);
        assert_eq!(min_distance(&GeneratorMatrix::hamming_7_4(), b).unwrap(), 3);
        assert_eq!(min_distance(&GeneratorMatrix::repetition(3, 9).unwrap(), b).unwrap(), 9);
        let big = GeneratorMatrix::identity_extension(7, 12, 12).unwrap();
        assert!(matches!(min_distance(&big, b), Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn hamming_corrects_single_errors() {
        let g = GeneratorMatrix::hamming_7_4();
        for m in 0..16u64 {
            let msg: Vec<u64> = (0..4).map(|i| (m >> (3 - i)) & 1).collect();
            let cw = g.encode(&msg).unwrap();
            let d = md_decode(&g, &cw, DEFAULT_DECODE_BUDGET).unwrap();
            assert_eq!((d.message.clone(), d.corrections, d.ambiguous), (msg.clone(), 0, false));
            for pos in 0..7 {
                let mut r = cw.clone();
                r[pos] ^= 1;
                let d = md_decode(&g, &r, DEFAULT_DECODE_BUDGET).unwrap();
                assert_eq!(d.message, msg);
                assert_eq!(d.corrections, 1);
            }
        }
    }

    #[test]
    fn ties_are_flagged() {
        let g = GeneratorMatrix::repetition(2, 4).unwrap();
        let d = md_decode(&g, &[1, 1, 0, 0], DEFAULT_DECODE_BUDGET).unwrap();
        assert!(d.ambiguous);
        assert_eq!(d.message, vec![0]);
    }

    #[test]
    fn text_round_trip() {
        let g = GeneratorMatrix::hamming_7_4();
        let text = g.to_text();
        assert!(text.starts_with("2 7 4\n"));
        assert_eq!(GeneratorMatrix::from_text(&text).unwrap(), g);
        assert!(GeneratorMatrix::from_text("2 7 4\n1 0").is_err());
        assert!(GeneratorMatrix::from_text("2 1 1\n3").is_err());
    }

    #[test]
    fn entropy_values() {
        assert!((p_ary_entropy(2, 0.5).unwrap() - 1.0).abs() < 1e-15);
        for p in [2u64, 3, 5, 7] {
            let x = (p - 1) as f64 / p as f64;
            assert!((p_ary_entropy(p, x).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((p_ary_entropy(2, 2.0 / 7.0).unwrap() - 0.8631).abs() < 1e-4);
        assert_eq!(p_ary_entropy(5, 0.0).unwrap(), 0.0);
        assert!((p_ary_entropy(5, 1.0).unwrap() - 4f64.log2() / 5f64.log2()).abs() < 1e-15);
        assert!(p_ary_entropy(2, 1.5).is_err());
    }

    #[test]
    fn gv_bounds() {
        assert!((gv_rate_bound(2, 7, 3).unwrap() - 0.1369).abs() < 1e-3);
        assert!(gv_rate_bound(3, 1000, 2).unwrap() > 0.98 * 3f64.log2());
        assert!(gv_rate_bound(2, 7, 4).is_err());
        assert_eq!(gv_message_len(2, 7, 3).unwrap(), 1);
        assert_eq!(gv_message_len(3, 8, 3).unwrap(), 3);
        assert_eq!(gv_message_len(5, 6, 3).unwrap(), 2);
    }

    #[test]
    fn gv_search_is_deterministic() {
        let a = gv_search(3, 8, 3, 500, 11).unwrap();
        let b = gv_search(3, 8, 3, 500, 11).unwrap();
        assert_eq!(a, b);
        assert!(min_distance(&a.generator, DEFAULT_DECODE_BUDGET).unwrap() >= 3);
    }

    #[test]
    fn gv_search_failure_is_reported() {
        // Singleton bound: a [6,5] code has distance at most 2.
        let err = gv_search_with_len(2, 6, 3, 5, 20, 1).unwrap_err();
        assert!(matches!(err, Error::SearchFailure { attempts: 20, .. }));
    }
}
