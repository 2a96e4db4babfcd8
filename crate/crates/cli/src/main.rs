use anyhow::Result;
use caf::{execute, write, Experiment, Overrides, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "caf", version, about = "Compute-and-forward experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalized computation rate against h2 at several SNRs.
    Fig2(Overrides),
    /// Sum-rate curves and degrees-of-freedom slopes.
    Dof(Overrides),
    /// End-to-end alignment Monte Carlo.
    Align(Overrides),
    /// Injectivity and peeling audit.
    Invert(Overrides),
    /// Khinchin envelopes and separation probes.
    Dioph(Overrides),
}

fn main() -> Result<()> {
    let (exp, o) = match Cli::parse().cmd {
        Cmd::Fig2(o) => (Experiment::Fig2, o),
        Cmd::Dof(o) => (Experiment::Dof, o),
        Cmd::Align(o) => (Experiment::Align, o),
        Cmd::Invert(o) => (Experiment::Invert, o),
        Cmd::Dioph(o) => (Experiment::Dioph, o),
    };
    let cfg = RunConfig::resolve(&o)?;
    let report = execute(exp, &cfg)?;
    let dir = cfg.out_dir();
    write(&report, &dir, cfg.svg.unwrap_or(true))?;
    for line in &report.summary {
        println!("{line}");
    }
    println!("wrote {}", dir.display());
    match report.error {
        Some(e) => Err(e.context(format!("{} stopped early; partial results were written", exp.name()))),
        None => Ok(()),
    }
}
