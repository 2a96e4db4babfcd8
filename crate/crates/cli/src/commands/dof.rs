//! Sum-rate curves against SNR and their degrees-of-freedom slopes.

use anyhow::{bail, Result};
use caf_core::channel::db_to_linear;
use caf_core::rates::{dof_slope, ia_baseline, lattice_sum_rate, mimo_upper_bound, time_sharing_rate, SearchConfig};
use caf_core::{seed, ChannelMatrix};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::format_entries;
use crate::config::{at_least, RunConfig};
use crate::output::{Cell, SweepResult};
use crate::svg::ChartSpec;

pub const COLUMNS: &[&str] = &["row", "h_index", "h_kind", "h", "curve", "snr_db", "rate_bits", "slope", "fallback"];

pub const CURVES: [&str; 4] = ["lattice", "time_sharing", "ia", "mimo"];

const KEYS: &[&str] = &["snr_db", "k", "h", "rational_h", "random_h", "rational_entry_max", "h_range", "top_n", "max_prefixes"];

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub snr_db: Vec<f64>,
    pub k: usize,
    pub h: Option<Vec<f64>>,
    pub rational_h: usize,
    pub random_h: usize,
    pub rational_entry_max: i64,
    pub h_range: [f64; 2],
    pub top_n: usize,
    pub max_prefixes: f64,
    #[serde(skip)]
    pub search: SearchConfig,
}

pub fn params(cfg: &RunConfig) -> Result<Params> {
    cfg.only("dof", KEYS)?;
    let search = super::search_config(cfg)?;
    let snr_db = cfg
        .snr_db
        .clone()
        .unwrap_or_else(|| (0..9).map(|i| 40.0 + 5.0 * i as f64).collect());
    if snr_db.len() < 3 || snr_db.windows(2).any(|w| !(w[1] > w[0])) {
        bail!("snr_db needs at least three strictly increasing values");
    }
    let k = at_least("k", cfg.k.unwrap_or(2), 1)?;
    if let Some(h) = &cfg.h {
        ChannelMatrix::new(k, h.clone())?;
    }
    let rational_entry_max = cfg.rational_entry_max.unwrap_or(3);
    if rational_entry_max < 1 {
        bail!("rational_entry_max must be at least 1");
    }
    let h_range = cfg.h_range.unwrap_or([0.5, 2.0]);
    if !(h_range[0] < h_range[1] && h_range[0].is_finite() && h_range[1].is_finite()) {
        bail!("h_range must be an increasing pair");
    }
    Ok(Params {
        snr_db,
        k,
        h: cfg.h.clone(),
        rational_h: cfg.rational_h.unwrap_or(5),
        random_h: cfg.random_h.unwrap_or(5),
        rational_entry_max,
        h_range,
        top_n: search.top_n,
        max_prefixes: search.max_prefixes,
        search,
    })
}

fn det(k: usize, e: &[f64]) -> f64 {
    let mut a = e.to_vec();
    let mut d = 1.0;
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i * k + c].abs().total_cmp(&a[j * k + c].abs())).unwrap();
        if a[piv * k + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for j in 0..k {
                a.swap(piv * k + j, c * k + j);
            }
            d = -d;
        }
        d *= a[c * k + c];
        for r in c + 1..k {
            let f = a[r * k + c] / a[c * k + c];
            for j in c..k {
                a[r * k + j] -= f * a[c * k + j];
            }
        }
    }
    d
}

/// Invertible integer channel `i`, entries uniform on `[−max, max] \ {0}`.
pub fn rational_channel(seed: u64, i: usize, k: usize, max: i64) -> ChannelMatrix {
    let mut rng = seed::rng(seed::derive(seed, i as u64));
    loop {
        let e: Vec<f64> = (0..k * k)
            .map(|_| {
                let v = rng.random_range(1..=max) as f64;
                if rng.random_bool(0.5) { v } else { -v }
            })
            .collect();
        if det(k, &e).abs() >= 0.5 {
            return ChannelMatrix::new(k, e).expect("finite entries");
        }
    }
}

/// Real channel `i` with i.i.d. entries uniform on `range`.
pub fn random_channel(seed: u64, i: usize, k: usize, range: [f64; 2]) -> ChannelMatrix {
    let mut rng = seed::rng(seed::derive(seed, (1 << 32) + i as u64));
    ChannelMatrix::new(k, (0..k * k).map(|_| rng.random_range(range[0]..range[1])).collect()).expect("finite entries")
}

/// Channels in output order, with their kind labels.
pub fn channels(p: &Params, seed: u64) -> Result<Vec<(&'static str, ChannelMatrix)>> {
    let mut out = Vec::new();
    if let Some(h) = &p.h {
        out.push(("given", ChannelMatrix::new(p.k, h.clone())?));
    }
    for i in 0..p.rational_h {
        out.push(("rational", rational_channel(seed, i, p.k, p.rational_entry_max)));
    }
    for i in 0..p.random_h {
        out.push(("random", random_channel(seed, i, p.k, p.h_range)));
    }
    Ok(out)
}

/// Rate curves of one channel, in [`CURVES`] order, plus the lattice
/// fallback flags.
pub fn curves(h: &ChannelMatrix, snr_db: &[f64], search: &SearchConfig) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    let lattice = snr_db
        .par_iter()
        .map(|&db| lattice_sum_rate(h, db_to_linear(db), search))
        .collect::<caf_core::Result<Vec<_>>>()?;
    let mut c = vec![lattice.iter().map(|s| s.rate_bits).collect::<Vec<_>>()];
    c.push(snr_db.iter().map(|&db| time_sharing_rate(h, db_to_linear(db))).collect::<caf_core::Result<_>>()?);
    c.push(snr_db.iter().map(|&db| ia_baseline(h.k(), db_to_linear(db))).collect::<caf_core::Result<_>>()?);
    c.push(
        snr_db
            .iter()
            .map(|&db| mimo_upper_bound(h, db_to_linear(db)).map(|b| b.rate_bits))
            .collect::<caf_core::Result<_>>()?,
    );
    Ok((c, lattice.iter().map(|s| s.fallback).collect()))
}

pub fn chart() -> ChartSpec<'static> {
    ChartSpec {
        title: "sum rate against SNR",
        x: "snr_db",
        y: "rate_bits",
        series: "curve",
        filter: Some(("h_index", "0")),
    }
}

pub fn run(p: &Params, seed: u64, res: &mut SweepResult) -> Result<Vec<String>> {
    let mut summary = Vec::new();
    for (hi, (kind, h)) in channels(p, seed)?.into_iter().enumerate() {
        let row_seed = seed::derive(seed, hi as u64);
        let label = format_entries(h.entries());
        let (rates, fallback) = curves(&h, &p.snr_db, &p.search)?;
        let mut slopes = Vec::new();
        for (ci, curve) in CURVES.iter().enumerate() {
            for (si, &db) in p.snr_db.iter().enumerate() {
                let fb = if ci == 0 { Cell::Bool(fallback[si]) } else { Cell::Empty };
                res.push(
                    row_seed,
                    vec![
                        "rate".into(),
                        hi.into(),
                        kind.into(),
                        label.clone().into(),
                        (*curve).into(),
                        db.into(),
                        rates[ci][si].into(),
                        Cell::Empty,
                        fb,
                    ],
                );
            }
            let slope = dof_slope(&rates[ci], &p.snr_db)?;
            slopes.push(format!("{curve} {slope:.3}"));
            res.push(
                row_seed,
                vec![
                    "slope".into(),
                    hi.into(),
                    kind.into(),
                    label.clone().into(),
                    (*curve).into(),
                    Cell::Empty,
                    Cell::Empty,
                    slope.into(),
                    Cell::Empty,
                ],
            );
        }
        summary.push(format!("H{hi} ({kind}) [{label}]: {}", slopes.join(", ")));
    }
    Ok(summary)
}
