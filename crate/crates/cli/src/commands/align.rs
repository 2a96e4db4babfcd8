//! End-to-end alignment Monte Carlo over a list of primes.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use caf_core::alignment::pipeline::{run_pipeline, PipelineConfig, PipelineReport};
use caf_core::alignment::{
    achievable_rate, apply_scaling, canonical_signatures, derive_equation_system, error_bound, example_signature,
    receiver_separation, DemodStrategy, EquationSystem, ScalingMode, SignatureMap, DEFAULT_DEMOD_BUDGET,
};
use caf_core::diophantine::DEFAULT_REL_TOL;
use caf_core::fpcode::{gv_search, is_prime, GeneratorMatrix, DEFAULT_DECODE_BUDGET};
use caf_core::{seed, ChannelMatrix};
use rand::Rng;
use serde::Serialize;

use crate::config::{at_least, positive, RunConfig};
use crate::output::{Cell, SweepResult};

pub const COLUMNS: &[&str] = &[
    "kind",
    "p",
    "batch",
    "t",
    "message_len",
    "trials",
    "symbols",
    "symbol_errors",
    "symbol_error_rate",
    "tail_bound",
    "block_errors",
    "block_error_rate",
    "equation_errors",
    "ambiguous_decodes",
    "mean_power",
    "max_power",
    "log2_scaling",
    "epsilon",
    "achievable_rate",
];

const KEYS: &[&str] = &[
    "signature",
    "k",
    "l",
    "p",
    "h",
    "h_range",
    "code_length",
    "code_distance",
    "code_file",
    "gv_attempts",
    "strategy",
    "scaling",
    "c5",
    "noise_variance",
    "trials",
    "samples",
    "oracle_corruptions",
    "demod_budget",
    "decode_budget",
];

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub signature: String,
    pub k: usize,
    pub l: usize,
    pub p: Vec<u64>,
    pub h: Option<Vec<f64>>,
    pub h_range: [f64; 2],
    pub code_length: usize,
    pub code_distance: usize,
    pub code_file: Option<PathBuf>,
    pub gv_attempts: usize,
    pub strategy: String,
    pub scaling: String,
    pub c5: f64,
    pub noise_variance: f64,
    pub trials: usize,
    /// Number of batches the trials are split into, for resampling.
    pub samples: usize,
    pub oracle_corruptions: usize,
    pub demod_budget: f64,
    pub decode_budget: f64,
}

impl Params {
    pub fn strategy(&self) -> DemodStrategy {
        match self.strategy.as_str() {
            "exhaustive" => DemodStrategy::Exhaustive,
            "oracle" => DemodStrategy::Oracle,
            _ => DemodStrategy::MeetInTheMiddle,
        }
    }

    pub fn scaling_mode(&self) -> ScalingMode {
        match self.scaling.as_str() {
            "paper" => ScalingMode::Paper,
            _ => ScalingMode::Tight { c5: self.c5 },
        }
    }
}

pub fn params(cfg: &RunConfig) -> Result<Params> {
    cfg.only("align", KEYS)?;
    let signature = cfg.signature.clone().unwrap_or_else(|| "example".into());
    let default_p = match signature.as_str() {
        "example" => vec![5],
        "canonical" => vec![3, 5, 7],
        other => bail!("signature must be example or canonical, got {other}"),
    };
    let strategy = cfg.strategy.clone().unwrap_or_else(|| "mitm".into());
    if !["mitm", "exhaustive", "oracle"].contains(&strategy.as_str()) {
        bail!("strategy must be mitm, exhaustive or oracle, got {strategy}");
    }
    let scaling = cfg.scaling.clone().unwrap_or_else(|| "tight".into());
    if !["tight", "paper"].contains(&scaling.as_str()) {
        bail!("scaling must be tight or paper, got {scaling}");
    }
    let p = cfg.p.clone().unwrap_or(default_p);
    if p.is_empty() || p.iter().any(|&v| !is_prime(v)) {
        bail!("p must be a nonempty list of primes");
    }
    let noise_variance = cfg.noise_variance.unwrap_or(1.0);
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        bail!("noise_variance must be finite and nonnegative");
    }
    let h_range = cfg.h_range.unwrap_or([0.5, 2.0]);
    if !(h_range[0] < h_range[1] && h_range[0].is_finite() && h_range[1].is_finite()) {
        bail!("h_range must be an increasing pair");
    }
    let k = if signature == "example" { 2 } else { at_least("k", cfg.k.unwrap_or(2), 1)? };
    if signature == "example" && cfg.k.is_some_and(|v| v != 2) {
        bail!("the example signature has K = 2");
    }
    let trials = at_least("trials", cfg.trials.unwrap_or(1000), 1)?;
    Ok(Params {
        signature,
        k,
        l: at_least("l", cfg.l.unwrap_or(1), 1)?,
        p,
        h: cfg.h.clone(),
        h_range,
        code_length: at_least("code_length", cfg.code_length.unwrap_or(15), 1)?,
        code_distance: at_least("code_distance", cfg.code_distance.unwrap_or(7), 1)?,
        code_file: cfg.code_file.clone(),
        gv_attempts: at_least("gv_attempts", cfg.gv_attempts.unwrap_or(10_000), 1)?,
        strategy,
        scaling,
        c5: positive("c5", cfg.c5.unwrap_or(1.0))?,
        noise_variance,
        trials,
        samples: at_least("samples", cfg.samples.unwrap_or(10), 1)?.min(trials),
        oracle_corruptions: cfg.oracle_corruptions.unwrap_or(0),
        demod_budget: positive("demod_budget", cfg.demod_budget.unwrap_or(DEFAULT_DEMOD_BUDGET))?,
        decode_budget: positive("decode_budget", cfg.decode_budget.unwrap_or(DEFAULT_DECODE_BUDGET))?,
    })
}

/// Channel, unscaled signatures and equation system of the configured geometry.
pub fn geometry(p: &Params, seed: u64) -> Result<(ChannelMatrix, SignatureMap, EquationSystem)> {
    let (h, sig) = if p.signature == "example" {
        let g = p.h.clone().unwrap_or_else(|| vec![0.7, 1.3]);
        if g.len() != 2 {
            bail!("the example channel takes h = [h1, h2]");
        }
        let h = ChannelMatrix::two_user_example(g[0], g[1])?;
        let sig = example_signature(&h)?;
        (h, sig)
    } else if let Some(e) = &p.h {
        let h = ChannelMatrix::new(p.k, e.clone())?;
        let sig = canonical_signatures(&h, p.l)?;
        (h, sig)
    } else {
        let mut rng = seed::rng(seed::derive(seed, 1 << 40));
        let mut attempt = 0;
        loop {
            let e = (0..p.k * p.k).map(|_| rng.random_range(p.h_range[0]..p.h_range[1])).collect();
            let h = ChannelMatrix::new(p.k, e)?;
            match canonical_signatures(&h, p.l) {
                Ok(sig) => break (h, sig),
                Err(caf_core::Error::NonGeneric(_)) if attempt < 100 => attempt += 1,
                Err(e) => return Err(e.into()),
            }
        }
    };
    let eq = derive_equation_system(&sig, &h, DEFAULT_REL_TOL)?;
    Ok((h, sig, eq))
}

pub fn code_for(p: &Params, prime: u64, seed: u64) -> Result<GeneratorMatrix> {
    if let Some(path) = &p.code_file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let g = GeneratorMatrix::from_text(&text)?;
        if g.p() != prime {
            bail!("code file is over F_{} but p = {prime}", g.p());
        }
        return Ok(g);
    }
    Ok(gv_search(prime, p.code_length, p.code_distance, p.gv_attempts, seed::derive(seed, prime))?.generator)
}

/// Trials of batch `b` out of `n` batches.
fn batch_trials(total: usize, n: usize, b: usize) -> usize {
    total / n + usize::from(b < total % n)
}

fn report_cells(kind: &str, prime: u64, batch: Cell, code: &GeneratorMatrix, r: &PipelineReport) -> Vec<Cell> {
    let powered = r.symbols > 0 && r.max_power > 0.0;
    vec![
        kind.into(),
        prime.into(),
        batch,
        code.t().into(),
        code.message_len().into(),
        r.trials.into(),
        r.symbols.into(),
        r.symbol_errors.into(),
        r.symbol_error_rate().into(),
        Cell::Empty,
        r.block_errors.into(),
        r.block_error_rate().into(),
        r.equation_errors.into(),
        r.ambiguous_decodes.into(),
        if powered { r.mean_power.into() } else { Cell::Empty },
        if powered { r.max_power.into() } else { Cell::Empty },
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
    ]
}

/// Per-batch symbol error rates and the merged report for prime `prime`.
pub struct PrimeRun {
    pub batch_symbol_error_rates: Vec<f64>,
    pub total: PipelineReport,
    pub tail_bound: Option<f64>,
}

pub fn run_prime(
    p: &Params,
    prime: u64,
    row_seed: u64,
    geometry: &(ChannelMatrix, SignatureMap, EquationSystem),
    code: &GeneratorMatrix,
    res: Option<&mut SweepResult>,
) -> Result<PrimeRun> {
    let (h, sig, eq) = geometry;
    let strategy = p.strategy();
    let sig = if strategy == DemodStrategy::Oracle {
        sig.clone()
    } else {
        apply_scaling(sig.clone(), eq, prime, p.scaling_mode())?
    };
    let tail_bound = match (strategy, p.scaling_mode()) {
        (DemodStrategy::Oracle, _) => None,
        _ if p.noise_variance == 0.0 => Some(0.0),
        (_, ScalingMode::Tight { c5 }) => Some((-(c5 * c5 * prime as f64) / (2.0 * p.noise_variance)).exp()),
        (_, ScalingMode::Paper) => {
            let mut sep = f64::INFINITY;
            for m in 0..eq.k {
                sep = sep.min(receiver_separation(eq, m, prime, p.demod_budget)?);
            }
            let margin = sig.scaling * sep / 2.0;
            Some((-(margin * margin) / (2.0 * p.noise_variance)).exp())
        }
    };
    let mut rates = Vec::with_capacity(p.samples);
    let mut total = PipelineReport::default();
    let mut rows = Vec::new();
    for b in 0..p.samples {
        let cfg = PipelineConfig {
            strategy,
            noise_variance: p.noise_variance,
            trials: batch_trials(p.trials, p.samples, b),
            seed: seed::derive(row_seed, b as u64),
            demod_budget: p.demod_budget,
            decode_budget: p.decode_budget,
            oracle_corruptions: p.oracle_corruptions,
        };
        let r = run_pipeline(h, &sig, eq, code, &cfg)?;
        rates.push(r.symbol_error_rate());
        rows.push((cfg.seed, report_cells("batch", prime, b.into(), code, &r)));
        total = total.merge(r);
    }
    if let Some(res) = res {
        for (s, cells) in rows {
            res.push(s, cells);
        }
        let mut cells = report_cells("total", prime, Cell::Empty, code, &total);
        cells[res.index("tail_bound")] = tail_bound.into();
        if strategy != DemodStrategy::Oracle {
            cells[res.index("log2_scaling")] = sig.log2_scaling.into();
        }
        if let (Some(l), ScalingMode::Tight { c5 }) = (eq.canonical_l, p.scaling_mode()) {
            let eps = error_bound(prime, c5)?;
            cells[res.index("epsilon")] = eps.into();
            cells[res.index("achievable_rate")] = achievable_rate(eq.k, l, prime, eps).ok().into();
        }
        res.push(row_seed, cells);
    }
    Ok(PrimeRun {
        batch_symbol_error_rates: rates,
        total,
        tail_bound,
    })
}

pub fn run(p: &Params, seed: u64, res: &mut SweepResult) -> Result<Vec<String>> {
    let geo = geometry(p, seed)?;
    let mut summary = vec![format!(
        "{} signature, H = [{}], {} equations over {} submessages",
        p.signature,
        super::format_entries(geo.0.entries()),
        geo.2.equation_count(),
        geo.2.submessage_count()
    )];
    for (i, &prime) in p.p.iter().enumerate() {
        let code = code_for(p, prime, seed)?;
        let run = run_prime(p, prime, seed::derive(seed, i as u64), &geo, &code, Some(res))?;
        let t = &run.total;
        summary.push(format!(
            "p={prime}: code [{}, {}], symbol error rate {:.3e}, block errors {}/{}, equation errors {}",
            code.t(),
            code.message_len(),
            t.symbol_error_rate(),
            t.block_errors,
            t.trials,
            t.equation_errors
        ));
    }
    Ok(summary)
}
