//! Khinchin error envelopes and receive-monomial separation probes.

use anyhow::{bail, Result};
use caf_core::alignment::canonical_signatures;
use caf_core::diophantine::{channel_scaling_probe, khinchin_decay_fit, DecayFit, DEFAULT_SEPARATION_BUDGET};
use caf_core::{seed, ChannelMatrix, Error};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::format_entries;
use crate::config::{at_least, positive, RunConfig};
use crate::output::{Cell, SweepResult};
use crate::svg::ChartSpec;

pub const COLUMNS: &[&str] = &[
    "kind",
    "dim",
    "sample",
    "h",
    "q",
    "error",
    "slope",
    "degenerate",
    "records",
    "p",
    "separation",
    "log2_scaling",
    "log2_ratio",
    "generic",
];

const KEYS: &[&str] = &["dims", "samples", "q_max", "k", "l", "p", "h", "h_range", "separation_budget"];

/// Fractional part of the golden ratio.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub dims: Vec<usize>,
    pub samples: usize,
    pub q_max: u64,
    pub k: usize,
    pub l: usize,
    pub p: Vec<u64>,
    pub h: Option<Vec<f64>>,
    pub h_range: [f64; 2],
    pub separation_budget: f64,
}

pub fn params(cfg: &RunConfig) -> Result<Params> {
    cfg.only("dioph", KEYS)?;
    let dims = cfg.dims.clone().unwrap_or_else(|| vec![1, 2]);
    if dims.iter().any(|&d| d == 0) {
        bail!("dims must be positive");
    }
    let q_max = cfg.q_max.unwrap_or(10_000);
    if q_max < 16 {
        bail!("q_max must be at least 16");
    }
    let p = cfg.p.clone().unwrap_or_else(|| vec![2, 3, 5]);
    if p.iter().any(|&v| v < 2) {
        bail!("p must be at least 2");
    }
    let h_range = cfg.h_range.unwrap_or([0.5, 2.0]);
    if !(h_range[0] < h_range[1] && h_range[0].is_finite() && h_range[1].is_finite()) {
        bail!("h_range must be an increasing pair");
    }
    Ok(Params {
        dims,
        samples: cfg.samples.unwrap_or(5),
        q_max,
        k: at_least("k", cfg.k.unwrap_or(2), 1)?,
        l: at_least("l", cfg.l.unwrap_or(1), 1)?,
        p,
        h: cfg.h.clone(),
        h_range,
        separation_budget: positive("separation_budget", cfg.separation_budget.unwrap_or(DEFAULT_SEPARATION_BUDGET))?,
    })
}

/// The vectors whose envelopes are fitted: the golden ratio, a rational
/// control, and `samples` uniform vectors per dimension.
pub fn fit_inputs(p: &Params, seed: u64) -> Vec<(&'static str, usize, Vec<f64>)> {
    let mut v = vec![("golden", 0, vec![GOLDEN]), ("rational", 0, vec![0.25, 0.5])];
    for &d in &p.dims {
        for s in 0..p.samples {
            let mut rng = seed::rng(seed::derive(seed, ((d as u64) << 32) + s as u64));
            v.push(("random", s, (0..d).map(|_| rng.random_range(0.0..1.0)).collect()));
        }
    }
    v
}

fn probe_channel(p: &Params, seed: u64) -> Result<ChannelMatrix> {
    if let Some(e) = &p.h {
        return Ok(ChannelMatrix::new(p.k, e.clone())?);
    }
    let mut rng = seed::rng(seed::derive(seed, 1 << 40));
    for _ in 0..100 {
        let e = (0..p.k * p.k).map(|_| rng.random_range(p.h_range[0]..p.h_range[1])).collect();
        let h = ChannelMatrix::new(p.k, e)?;
        match canonical_signatures(&h, p.l) {
            Ok(_) => return Ok(h),
            Err(Error::NonGeneric(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    bail!("no generic channel found in 100 draws")
}

pub fn chart() -> ChartSpec<'static> {
    ChartSpec {
        title: "Khinchin error record minima",
        x: "q",
        y: "error",
        series: "h",
        filter: Some(("kind", "record")),
    }
}

pub fn run(p: &Params, seed: u64, res: &mut SweepResult) -> Result<Vec<String>> {
    let inputs = fit_inputs(p, seed);
    let fits = inputs
        .par_iter()
        .map(|(_, _, h)| khinchin_decay_fit(h, p.q_max))
        .collect::<caf_core::Result<Vec<DecayFit>>>()?;
    let mut summary = Vec::new();
    let blank = || vec![Cell::Empty; COLUMNS.len()];
    for (i, ((kind, sample, h), fit)) in inputs.iter().zip(&fits).enumerate() {
        let row_seed = seed::derive(seed, i as u64);
        let label = format_entries(h);
        let mut cells = blank();
        cells[0] = format!("fit_{kind}").into();
        cells[1] = h.len().into();
        cells[2] = (*sample).into();
        cells[3] = label.clone().into();
        cells[6] = fit.slope.into();
        cells[7] = fit.degenerate.into();
        cells[8] = fit.records.len().into();
        res.push(row_seed, cells);
        for &(q, e) in &fit.records {
            let mut cells = blank();
            cells[0] = "record".into();
            cells[1] = h.len().into();
            cells[2] = (*sample).into();
            cells[3] = label.clone().into();
            cells[4] = q.into();
            cells[5] = e.into();
            res.push(row_seed, cells);
        }
        summary.push(match fit.slope {
            Some(s) => format!("{kind} h=[{label}]: envelope slope {s:.3} over {} records", fit.records.len()),
            None => format!("{kind} h=[{label}]: degenerate fit"),
        });
    }
    let h = probe_channel(p, seed)?;
    let label = format_entries(h.entries());
    let probe = channel_scaling_probe(&h, p.l, 0, &p.p, p.separation_budget)?;
    for row in &probe.rows {
        let mut cells = blank();
        cells[0] = "probe".into();
        cells[3] = label.clone().into();
        cells[9] = row.p.into();
        cells[10] = row.separation.into();
        cells[11] = row.log2_scaling.into();
        cells[12] = row.log2_ratio.into();
        cells[13] = probe.generic.into();
        res.push(seed::derive(seed, row.p), cells);
    }
    summary.push(format!(
        "probe H=[{label}] L={}: log2 ratios [{}], generic {}",
        p.l,
        probe.rows.iter().map(|r| format!("{:.2}", r.log2_ratio)).collect::<Vec<_>>().join(", "),
        probe.generic
    ));
    Ok(summary)
}
