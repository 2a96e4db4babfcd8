//! Run configuration: a TOML key-value file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

/// Every key a configuration file may set. Which keys an experiment accepts
/// is checked by [`RunConfig::only`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,

    pub snr_db: Option<Vec<f64>>,
    pub grid_points: Option<usize>,
    pub random_h2: Option<usize>,
    pub top_n: Option<usize>,
    pub max_prefixes: Option<f64>,

    pub k: Option<usize>,
    pub l: Option<usize>,
    pub p: Option<Vec<u64>>,
    /// Channel entries, row-major; for the example signature `[h1, h2]`.
    pub h: Option<Vec<f64>>,
    pub h_range: Option<[f64; 2]>,

    pub rational_h: Option<usize>,
    pub random_h: Option<usize>,
    pub rational_entry_max: Option<i64>,

    pub signature: Option<String>,
    pub code_length: Option<usize>,
    pub code_distance: Option<usize>,
    pub code_file: Option<PathBuf>,
    pub gv_attempts: Option<usize>,
    pub strategy: Option<String>,
    pub scaling: Option<String>,
    pub c5: Option<f64>,
    pub noise_variance: Option<f64>,
    pub trials: Option<usize>,
    pub oracle_corruptions: Option<usize>,
    pub demod_budget: Option<f64>,
    pub decode_budget: Option<f64>,

    pub samples: Option<usize>,
    pub nongeneric: Option<usize>,

    pub dims: Option<Vec<usize>>,
    pub q_max: Option<u64>,
    pub separation_budget: Option<f64>,
}

/// Flags shared by every subcommand; they win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated SNR list in dB.
    #[arg(long = "snr-db", value_delimiter = ',', allow_negative_numbers = true)]
    pub snr_db: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    /// Comma-separated list of primes.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<u64>>,
    #[arg(long)]
    pub trials: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid configuration")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Loads the file named by `--config`, if any, and applies the flags.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if o.seed.is_some() {
            c.seed = o.seed;
        }
        if o.out.is_some() {
            c.out = o.out.clone();
        }
        if o.snr_db.is_some() {
            c.snr_db = o.snr_db.clone();
        }
        if o.k.is_some() {
            c.k = o.k;
        }
        if o.l.is_some() {
            c.l = o.l;
        }
        if o.p.is_some() {
            c.p = o.p.clone();
        }
        if o.trials.is_some() {
            c.trials = o.trials;
        }
        Ok(c)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Names of the keys that are set.
    pub fn set_keys(&self) -> Vec<String> {
        match serde_json::to_value(self).expect("config serializes") {
            serde_json::Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, _)| k).collect(),
            _ => unreachable!(),
        }
    }

    /// Fails when a key outside `allowed` (or the global keys) is set.
    pub fn only(&self, experiment: &str, allowed: &[&str]) -> Result<()> {
        let bad: Vec<String> = self
            .set_keys()
            .into_iter()
            .filter(|k| !["seed", "out", "svg"].contains(&k.as_str()) && !allowed.contains(&k.as_str()))
            .collect();
        if !bad.is_empty() {
            bail!("{experiment} does not accept: {}", bad.join(", "));
        }
        Ok(())
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive and finite, got {v}");
    }
    Ok(v)
}

pub(crate) fn at_least(name: &str, v: usize, min: usize) -> Result<usize> {
    if v < min {
        bail!("{name} must be at least {min}, got {v}");
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 4\ntrials = 10\np = [3, 5]\n").unwrap();
        let o = Overrides {
            config: Some(path),
            trials: Some(99),
            ..Default::default()
        };
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!((c.seed, c.trials, c.p), (Some(4), Some(99), Some(vec![3, 5])));
    }

    #[test]
    fn unknown_and_foreign_keys_rejected() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        let c = RunConfig::from_toml("q_max = 100\ntrials = 3").unwrap();
        assert!(c.only("dioph", &["q_max"]).is_err());
        assert!(c.only("dioph", &["q_max", "trials"]).is_ok());
    }
}
