//! Normalized computation rate of `h = (1, h2)` against `h2` at several SNRs.

use anyhow::{bail, Result};
use caf_core::rates::{normalized_rate_sweep, SearchConfig};
use caf_core::seed;
use rand::Rng;
use serde::Serialize;

use crate::config::{at_least, RunConfig};
use crate::output::{Cell, SweepResult};
use crate::svg::ChartSpec;

pub const COLUMNS: &[&str] = &["kind", "h2", "snr_db", "a1", "a2", "normalized_rate"];

const KEYS: &[&str] = &["snr_db", "grid_points", "random_h2", "top_n", "max_prefixes"];

/// Rational spot checks.
pub const SPOTS: [f64; 3] = [1.0 / 2.0, 1.0 / 3.0, 2.0 / 3.0];

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub snr_db: Vec<f64>,
    pub grid_points: usize,
    pub random_h2: usize,
    pub top_n: usize,
    pub max_prefixes: f64,
    #[serde(skip)]
    pub search: SearchConfig,
}

pub fn params(cfg: &RunConfig) -> Result<Params> {
    cfg.only("fig2", KEYS)?;
    let search = super::search_config(cfg)?;
    let snr_db = cfg.snr_db.clone().unwrap_or_else(|| vec![20.0, 30.0, 40.0, 50.0]);
    if snr_db.is_empty() || snr_db.iter().any(|v| !v.is_finite()) {
        bail!("snr_db must be a nonempty list of finite values");
    }
    Ok(Params {
        snr_db,
        grid_points: at_least("grid_points", cfg.grid_points.unwrap_or(1000), 2)?,
        random_h2: cfg.random_h2.unwrap_or(20),
        top_n: search.top_n,
        max_prefixes: search.max_prefixes,
        search,
    })
}

/// Random `h2` sample `j`, uniform on `(0, 1)`.
pub fn random_h2(seed: u64, j: usize) -> f64 {
    seed::rng(seed::derive(seed, j as u64)).random_range(0.0..1.0)
}

pub fn chart() -> ChartSpec<'static> {
    ChartSpec {
        title: "normalized computation rate",
        x: "h2",
        y: "normalized_rate",
        series: "snr_db",
        filter: Some(("kind", "grid")),
    }
}

pub fn run(p: &Params, seed: u64, res: &mut SweepResult) -> Result<Vec<String>> {
    let n = p.grid_points;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let random: Vec<f64> = (0..p.random_h2).map(|j| random_h2(seed, j)).collect();
    let kinds: Vec<(&str, &[f64])> = vec![("grid", &grid), ("spot", &SPOTS), ("random", &random)];
    let mut summary = Vec::new();
    let mut idx = 0u64;
    for &snr in &p.snr_db {
        let mut grid_sum = 0.0;
        let mut spot_min = f64::INFINITY;
        let mut random_max = f64::NEG_INFINITY;
        for (kind, values) in &kinds {
            if values.is_empty() {
                continue;
            }
            for row in normalized_rate_sweep(values, &[snr], &p.search)? {
                let a = &row.a.0;
                res.push(
                    seed::derive(seed, idx),
                    vec![
                        (*kind).into(),
                        row.h2.into(),
                        row.snr_db.into(),
                        Cell::Int(a[0]),
                        Cell::Int(a[1]),
                        row.normalized_rate.into(),
                    ],
                );
                idx += 1;
                match *kind {
                    "grid" => grid_sum += row.normalized_rate,
                    "spot" => spot_min = spot_min.min(row.normalized_rate),
                    _ => random_max = random_max.max(row.normalized_rate),
                }
            }
        }
        summary.push(format!(
            "snr {snr} dB: grid mean {:.4}, rational spot min {:.4}, random max {:.4}",
            grid_sum / n as f64,
            spot_min,
            random_max
        ));
    }
    Ok(summary)
}
