//! The experiments behind each subcommand.

pub mod align;
pub mod dioph;
pub mod dof;
pub mod fig2;
pub mod invert;

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{write_run_json, SweepResult};
use crate::svg::{self, ChartSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Fig2,
    Dof,
    Align,
    Invert,
    Dioph,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig2 => "fig2",
            Experiment::Dof => "dof",
            Experiment::Align => "align",
            Experiment::Invert => "invert",
            Experiment::Dioph => "dioph",
        }
    }
}

/// A finished (or partially finished) run.
#[derive(Debug)]
pub struct Report {
    pub result: SweepResult,
    pub summary: Vec<String>,
    pub params: serde_json::Value,
    pub chart: Option<ChartSpec<'static>>,
    /// Set when the experiment stopped early; `result` then ends with a marker row.
    pub error: Option<anyhow::Error>,
}

fn finish<P: Serialize>(
    exp: Experiment,
    seed: u64,
    columns: &[&str],
    params: P,
    chart: Option<ChartSpec<'static>>,
    body: impl FnOnce(&P, &mut SweepResult) -> Result<Vec<String>>,
) -> Result<Report> {
    let mut result = SweepResult::new(exp.name(), seed, columns);
    let (summary, error) = match body(&params, &mut result) {
        Ok(s) => (s, None),
        Err(e) => {
            result.push_failure(&format!("{e:#}"));
            (vec![], Some(e))
        }
    };
    Ok(Report {
        result,
        summary,
        params: serde_json::to_value(&params)?,
        chart,
        error,
    })
}

/// Validates the configuration and runs `exp` in memory. Configuration
/// errors are returned directly; failures during the run are recorded in
/// the report.
pub fn execute(exp: Experiment, cfg: &RunConfig) -> Result<Report> {
    let seed = cfg.seed();
    match exp {
        Experiment::Fig2 => finish(exp, seed, fig2::COLUMNS, fig2::params(cfg)?, Some(fig2::chart()), |p, r| {
            fig2::run(p, seed, r)
        }),
        Experiment::Dof => finish(exp, seed, dof::COLUMNS, dof::params(cfg)?, Some(dof::chart()), |p, r| {
            dof::run(p, seed, r)
        }),
        Experiment::Align => finish(exp, seed, align::COLUMNS, align::params(cfg)?, None, |p, r| {
            align::run(p, seed, r)
        }),
        Experiment::Invert => finish(exp, seed, invert::COLUMNS, invert::params(cfg)?, None, |p, r| {
            invert::run(p, seed, r)
        }),
        Experiment::Dioph => finish(exp, seed, dioph::COLUMNS, dioph::params(cfg)?, Some(dioph::chart()), |p, r| {
            dioph::run(p, seed, r)
        }),
    }
}

/// Writes `<exp>.csv`, the optional `<exp>.svg` and `run.json` into `dir`.
pub fn write(report: &Report, dir: &Path, svg_enabled: bool) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = &report.result.experiment;
    let csv = report.result.to_csv()?;
    std::fs::write(dir.join(format!("{name}.csv")), &csv)?;
    if let (true, Some(spec)) = (svg_enabled, &report.chart) {
        std::fs::write(dir.join(format!("{name}.svg")), svg::render(&csv, spec)?)?;
    }
    write_run_json(dir, &report.result, &report.params)
}

pub(crate) fn search_config(cfg: &RunConfig) -> Result<caf_core::rates::SearchConfig> {
    let mut s = caf_core::rates::SearchConfig::default();
    if let Some(n) = cfg.top_n {
        s.top_n = crate::config::at_least("top_n", n, 1)?;
    }
    if let Some(m) = cfg.max_prefixes {
        s.max_prefixes = crate::config::positive("max_prefixes", m)?;
    }
    Ok(s)
}

pub(crate) fn format_entries(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}
