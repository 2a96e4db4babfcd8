//! End-to-end Monte Carlo: outer encoding, modulation, channel, detection,
//! reduction mod p, minimum distance decoding and inversion.

use rand::Rng;
use rayon::prelude::*;

use crate::alignment::{awgn_channel, ml_demodulate, modulate, DemodStrategy, EquationSystem, SignatureMap};
use crate::channel::ChannelMatrix;
use crate::error::{invalid, Error, Result};
use crate::fpcode::{md_decode, GeneratorMatrix};
use crate::inversion::invert;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub strategy: DemodStrategy,
    /// Zero switches the noise off.
    pub noise_variance: f64,
    pub trials: usize,
    pub seed: u64,
    pub demod_budget: f64,
    pub decode_budget: f64,
    /// With the oracle strategy, the number of symbols of every received
    /// equation word that are replaced by a different random value.
    pub oracle_corruptions: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strategy: DemodStrategy::MeetInTheMiddle,
            noise_variance: 1.0,
            trials: 1000,
            seed: 0,
            demod_budget: super::DEFAULT_DEMOD_BUDGET,
            decode_budget: crate::fpcode::DEFAULT_DECODE_BUDGET,
            oracle_corruptions: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineReport {
    pub trials: usize,
    /// Trials where some recovered submessage differs from the sent one.
    pub block_errors: usize,
    /// Receiver channel uses whose detected tuple differs from the truth.
    pub symbol_errors: usize,
    pub symbols: usize,
    /// Equation words decoded to the wrong message.
    pub equation_errors: usize,
    pub equations: usize,
    pub ambiguous_decodes: usize,
    pub mean_power: f64,
    pub max_power: f64,
}

impl PipelineReport {
    pub fn symbol_error_rate(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols.max(1) as f64
    }

    pub fn block_error_rate(&self) -> f64 {
        self.block_errors as f64 / self.trials.max(1) as f64
    }

    /// Combines the counts of two disjoint runs.
    pub fn merge(mut self, o: Self) -> Self {
        let n = (self.symbols + o.symbols).max(1) as f64;
        self.mean_power = (self.mean_power * self.symbols as f64 + o.mean_power * o.symbols as f64) / n;
        self.trials += o.trials;
        self.block_errors += o.block_errors;
        self.symbol_errors += o.symbol_errors;
        self.symbols += o.symbols;
        self.equation_errors += o.equation_errors;
        self.equations += o.equations;
        self.ambiguous_decodes += o.ambiguous_decodes;
        self.max_power = self.max_power.max(o.max_power);
        self
    }
}

/// Runs `cfg.trials` independent blocks; trial `i` draws everything from
/// `derive(cfg.seed, i)`.
pub fn run_pipeline(
    h: &ChannelMatrix,
    sig: &SignatureMap,
    eq: &EquationSystem,
    code: &GeneratorMatrix,
    cfg: &PipelineConfig,
) -> Result<PipelineReport> {
    if h.k() != sig.k() || h.k() != eq.k {
        return Err(invalid("channel, signatures and equation system disagree on K"));
    }
    let reports = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(h, sig, eq, code, cfg, seed::derive(cfg.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(reports.into_iter().fold(PipelineReport::default(), PipelineReport::merge))
}

fn run_trial(
    h: &ChannelMatrix,
    sig: &SignatureMap,
    eq: &EquationSystem,
    code: &GeneratorMatrix,
    cfg: &PipelineConfig,
    trial_seed: u64,
) -> Result<PipelineReport> {
    let f = code.field();
    let p = f.p();
    let t = code.t();
    let k = h.k();
    let mut rng = seed::rng(trial_seed);
    let messages: Vec<Vec<Vec<u64>>> = sig
        .per_tx
        .iter()
        .map(|row| {
            row.iter()
                .map(|_| (0..code.message_len()).map(|_| rng.random_range(0..p)).collect())
                .collect()
        })
        .collect();
    let words: Vec<Vec<Vec<u64>>> = messages
        .iter()
        .map(|row| row.iter().map(|m| code.encode(m)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut rep = PipelineReport {
        trials: 1,
        ..Default::default()
    };
    // received[m][g][time]: detected equation symbols reduced mod p.
    let mut received: Vec<Vec<Vec<u64>>> = eq.receivers.iter().map(|g| vec![vec![0; t]; g.len()]).collect();
    let scaling = match cfg.strategy {
        DemodStrategy::Oracle => 1.0,
        _ => sig.scaling()?,
    };
    let mut power_sum = 0.0;
    for time in 0..t {
        let w: Vec<Vec<u64>> = words.iter().map(|row| row.iter().map(|c| c[time]).collect()).collect();
        let truth: Vec<Vec<u64>> = eq
            .receivers
            .iter()
            .map(|groups| {
                groups
                    .iter()
                    .map(|g| g.contributors.iter().map(|&(k, i)| w[k][i]).sum())
                    .collect()
            })
            .collect();
        let detected = if cfg.strategy == DemodStrategy::Oracle {
            truth.clone()
        } else {
            let x = modulate(&w, sig, p)?;
            for v in &x {
                power_sum += v * v;
                rep.max_power = rep.max_power.max(v * v);
            }
            let y = awgn_channel(&x, h, cfg.noise_variance, &mut rng);
            (0..k)
                .map(|m| ml_demodulate(y[m], &eq.receivers[m], p, scaling, cfg.strategy, cfg.demod_budget))
                .collect::<Result<Vec<_>>>()?
        };
        for m in 0..k {
            rep.symbols += 1;
            if detected[m] != truth[m] {
                rep.symbol_errors += 1;
            }
            for (g, &v) in detected[m].iter().enumerate() {
                received[m][g][time] = v % p;
            }
        }
    }
    rep.mean_power = power_sum / (t * k) as f64;

    if cfg.strategy == DemodStrategy::Oracle && cfg.oracle_corruptions > 0 {
        for word in received.iter_mut().flatten() {
            let n = cfg.oracle_corruptions.min(t);
            let mut positions: Vec<usize> = (0..t).collect();
            for j in 0..n {
                let pick = rng.random_range(j..t);
                positions.swap(j, pick);
                let pos = positions[j];
                word[pos] = f.add(word[pos], rng.random_range(1..p));
            }
        }
    }

    // Equation (m, g) carries the codeword of the message sum mod p.
    let mut decoded: Vec<Vec<Vec<u64>>> = Vec::with_capacity(k);
    for (m, groups) in eq.receivers.iter().enumerate() {
        let mut row = Vec::with_capacity(groups.len());
        for (gi, g) in groups.iter().enumerate() {
            let d = md_decode(code, &received[m][gi], cfg.decode_budget)?;
            let expect: Vec<u64> = (0..code.message_len())
                .map(|j| g.contributors.iter().fold(0, |acc, &(k, i)| f.add(acc, messages[k][i][j])))
                .collect();
            rep.equations += 1;
            rep.equation_errors += (d.message != expect) as usize;
            rep.ambiguous_decodes += d.ambiguous as usize;
            row.push(d.message);
        }
        decoded.push(row);
    }

    let mut wrong = false;
    for j in 0..code.message_len() {
        let u: Vec<Vec<u64>> = decoded.iter().map(|r| r.iter().map(|m| m[j]).collect()).collect();
        match invert(eq, &u, &f) {
            Ok(w) => {
                wrong |= w
                    .iter()
                    .zip(&messages)
                    .any(|(wr, mr)| wr.iter().zip(mr).any(|(&a, m)| a != m[j]));
            }
            Err(Error::Inconsistent { .. }) => wrong = true,
            Err(e) => return Err(e),
        }
    }
    rep.block_errors = wrong as usize;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{derive_equation_system, example_signature, apply_scaling, ScalingMode};
    use crate::diophantine::DEFAULT_REL_TOL;
    use crate::fpcode::gv_search;

    #[test]
    fn noiseless_example_round_trip() {
        let h = ChannelMatrix::two_user_example(0.7, 1.3).unwrap();
        let sig = example_signature(&h).unwrap();
        let eq = derive_equation_system(&sig, &h, DEFAULT_REL_TOL).unwrap();
        let sig = apply_scaling(sig, &eq, 5, ScalingMode::Tight { c5: 1.0 }).unwrap();
        let code = gv_search(5, 15, 7, 2000, 3).unwrap().generator;
        let cfg = PipelineConfig {
            noise_variance: 0.0,
            trials: 20,
            ..Default::default()
        };
        let rep = run_pipeline(&h, &sig, &eq, &code, &cfg).unwrap();
        assert_eq!((rep.block_errors, rep.symbol_errors, rep.equation_errors), (0, 0, 0));
        assert_eq!(rep.trials, 20);
        assert_eq!(run_pipeline(&h, &sig, &eq, &code, &cfg).unwrap(), rep);
    }

    #[test]
    fn oracle_with_correctable_corruption() {
        let h = ChannelMatrix::two_user_example(0.7, 1.3).unwrap();
        let sig = example_signature(&h).unwrap();
        let eq = derive_equation_system(&sig, &h, DEFAULT_REL_TOL).unwrap();
        let code = GeneratorMatrix::hamming_7_4();
        let cfg = PipelineConfig {
            strategy: DemodStrategy::Oracle,
            trials: 50,
            oracle_corruptions: 1,
            ..Default::default()
        };
        let rep = run_pipeline(&h, &sig, &eq, &code, &cfg).unwrap();
        assert_eq!((rep.equation_errors, rep.block_errors), (0, 0));
    }
}
