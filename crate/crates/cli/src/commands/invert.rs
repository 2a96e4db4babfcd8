//! Injectivity audit of the canonical equation systems and a cross-check of
//! peeling against linear solving.

use anyhow::{bail, Result};
use caf_core::alignment::{canonical_signatures, derive_equation_system};
use caf_core::diophantine::DEFAULT_REL_TOL;
use caf_core::fpcode::{is_prime, PrimeField};
use caf_core::inversion::{apply_incidence, injectivity_check, peel_invert, solve_system};
use caf_core::{seed, ChannelMatrix, Error};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{at_least, RunConfig};
use crate::output::SweepResult;

pub const COLUMNS: &[&str] = &[
    "p", "sample", "h", "class", "injective", "rank", "columns", "peel_equals_solve", "recovered", "rounds",
];

const KEYS: &[&str] = &["k", "l", "p", "samples", "nongeneric", "h_range"];

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub k: usize,
    pub l: usize,
    pub p: Vec<u64>,
    pub samples: usize,
    /// Extra samples forced to have `h[0][0] = h[0][1]`.
    pub nongeneric: usize,
    pub h_range: [f64; 2],
}

pub fn params(cfg: &RunConfig) -> Result<Params> {
    cfg.only("invert", KEYS)?;
    let p = cfg.p.clone().unwrap_or_else(|| vec![5]);
    if p.is_empty() || p.iter().any(|&v| !is_prime(v)) {
        bail!("p must be a nonempty list of primes");
    }
    let h_range = cfg.h_range.unwrap_or([0.5, 2.0]);
    if !(h_range[0] < h_range[1] && h_range[0].is_finite() && h_range[1].is_finite()) {
        bail!("h_range must be an increasing pair");
    }
    Ok(Params {
        k: at_least("k", cfg.k.unwrap_or(2), 1)?,
        l: at_least("l", cfg.l.unwrap_or(2), 1)?,
        p,
        samples: cfg.samples.unwrap_or(100),
        nongeneric: cfg.nongeneric.unwrap_or(0),
        h_range,
    })
}

/// Outcome of one sampled channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    pub h: ChannelMatrix,
    /// `pass`, `fail` or `rejected` (non-generic channel).
    pub class: &'static str,
    pub injective: Option<bool>,
    pub rank: Option<usize>,
    pub columns: Option<usize>,
    pub peel_equals_solve: Option<bool>,
    pub recovered: Option<bool>,
    pub rounds: Option<usize>,
}

pub fn sample_channel(p: &Params, sample_seed: u64, force_collision: bool) -> ChannelMatrix {
    let mut rng = seed::rng(sample_seed);
    let mut e: Vec<f64> = (0..p.k * p.k).map(|_| rng.random_range(p.h_range[0]..p.h_range[1])).collect();
    if force_collision && e.len() > 1 {
        e[1] = e[0];
    }
    ChannelMatrix::new(p.k, e).expect("finite entries")
}

/// Audits one channel at prime `prime`, drawing the test messages from `sample_seed`.
pub fn audit(h: ChannelMatrix, l: usize, prime: u64, sample_seed: u64) -> Result<Audit> {
    let rejected = |h| Audit {
        h,
        class: "rejected",
        injective: None,
        rank: None,
        columns: None,
        peel_equals_solve: None,
        recovered: None,
        rounds: None,
    };
    let sig = match canonical_signatures(&h, l) {
        Ok(s) => s,
        Err(Error::NonGeneric(_)) => return Ok(rejected(h)),
        Err(e) => return Err(e.into()),
    };
    let eq = match derive_equation_system(&sig, &h, DEFAULT_REL_TOL) {
        Ok(eq) => eq,
        Err(Error::NonGeneric(_)) => return Ok(rejected(h)),
        Err(e) => return Err(e.into()),
    };
    let f = PrimeField::new(prime)?;
    let inj = injectivity_check(&h, l, prime)?;
    let mut rng = seed::rng(seed::derive(sample_seed, 1));
    let w: Vec<Vec<u64>> = eq.signatures.iter().map(|r| r.iter().map(|_| rng.random_range(0..prime)).collect()).collect();
    let u = apply_incidence(&eq, &w, &f);
    let peel = peel_invert(&eq, &u, &f);
    let solve = solve_system(&eq, &u, &f);
    let (agree, recovered, rounds) = match (&peel, &solve) {
        (Ok(pk), Ok(s)) => (pk.w == *s, pk.w == w, Some(pk.rounds)),
        (Ok(pk), Err(_)) => (false, pk.w == w, Some(pk.rounds)),
        (Err(_), Ok(s)) => (false, *s == w, None),
        (Err(_), Err(_)) => (true, false, None),
    };
    let pass = inj.injective && agree && recovered;
    Ok(Audit {
        h,
        class: if pass { "pass" } else { "fail" },
        injective: Some(inj.injective),
        rank: Some(inj.rank),
        columns: Some(inj.columns),
        peel_equals_solve: Some(agree),
        recovered: Some(recovered),
        rounds,
    })
}

pub fn run(p: &Params, seed: u64, res: &mut SweepResult) -> Result<Vec<String>> {
    let mut summary = Vec::new();
    let n = p.samples + p.nongeneric;
    for &prime in &p.p {
        let audits = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = seed::derive(seed, i as u64);
                let h = sample_channel(p, s, i >= p.samples);
                audit(h, p.l, prime, s).map(|a| (s, a))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut counts = [0usize; 3];
        for (i, (s, a)) in audits.iter().enumerate() {
            counts[match a.class {
                "pass" => 0,
                "fail" => 1,
                _ => 2,
            }] += 1;
            res.push(
                *s,
                vec![
                    prime.into(),
                    i.into(),
                    super::format_entries(a.h.entries()).into(),
                    a.class.into(),
                    a.injective.into(),
                    a.rank.into(),
                    a.columns.into(),
                    a.peel_equals_solve.into(),
                    a.recovered.into(),
                    a.rounds.into(),
                ],
            );
        }
        summary.push(format!(
            "K={} L={} p={prime}: {} passed, {} failed, {} rejected as non-generic",
            p.k, p.l, counts[0], counts[1], counts[2]
        ));
    }
    Ok(summary)
}
