use std::process::Command;

use caf::commands::{align, dioph, fig2, invert};
use caf::output::Cell;
use caf::{execute, write, Experiment, RunConfig};
use caf_core::fpcode::GeneratorMatrix;

fn cfg(text: &str) -> RunConfig {
    RunConfig::from_toml(text).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_caf"))
}

#[test]
fn every_command_is_deterministic() {
    let configs = [
        (Experiment::Fig2, "grid_points = 21\nrandom_h2 = 3\nsnr_db = [10.0, 20.0]"),
        (Experiment::Dof, "rational_h = 1\nrandom_h = 1\nsnr_db = [20.0, 30.0, 40.0]"),
        (Experiment::Align, "trials = 40\nsamples = 4"),
        (Experiment::Invert, "samples = 10"),
        (Experiment::Dioph, "q_max = 500\nsamples = 2"),
    ];
    for (exp, text) in configs {
        let c = cfg(&format!("seed = 5\n{text}"));
        let a = execute(exp, &c).unwrap();
        let b = execute(exp, &c).unwrap();
        assert!(a.error.is_none(), "{:?}", a.error);
        assert!(a.result.is_complete());
        assert_eq!(a.result.to_csv().unwrap(), b.result.to_csv().unwrap(), "{}", exp.name());
        let other = execute(exp, &cfg(&format!("seed = 6\n{text}"))).unwrap();
        assert_ne!(a.result.to_csv().unwrap(), other.result.to_csv().unwrap(), "{}", exp.name());
    }
}

#[test]
fn binary_writes_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("fig2.toml");
    std::fs::write(&conf, "grid_points = 11\nrandom_h2 = 2\n").unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let st = bin()
            .args(["fig2", "--config"])
            .arg(&conf)
            .args(["--seed", "3", "--snr-db", "20,30", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        let read = |f: &str| std::fs::read(out.join(f)).unwrap();
        outputs.push((read("fig2.csv"), read("fig2.svg"), read("run.json")));
    }
    assert_eq!(outputs[0], outputs[1]);
    let run: serde_json::Value = serde_json::from_slice(&outputs[0].2).unwrap();
    assert_eq!(run["seed"], 3);
    assert_eq!(run["params"]["snr_db"], serde_json::json!([20.0, 30.0]));
    assert_eq!(run["params"]["grid_points"], 11);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.starts_with("schema_version,experiment,seed,row_seed,status,kind,h2,snr_db,a1,a2,normalized_rate\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * (11 + 3 + 2));
    assert!(!csv.contains("NaN"));
}

#[test]
fn svg_is_a_function_of_the_csv() {
    let r = execute(Experiment::Fig2, &cfg("grid_points = 5\nrandom_h2 = 0")).unwrap();
    let csv = r.result.to_csv().unwrap();
    let svg = caf::svg::render(&csv, &fig2::chart()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write(&r, dir.path(), true).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("fig2.svg")).unwrap(), svg);
    assert_eq!(svg.matches("<polyline").count(), 4);
}

#[test]
fn fig2_endpoints() {
    let r = execute(Experiment::Fig2, &cfg("grid_points = 3\nrandom_h2 = 0\nsnr_db = [50.0]")).unwrap();
    let res = &r.result;
    let first = &res.rows[0];
    assert_eq!(res.get(first, "h2").as_f64(), Some(0.0));
    assert_eq!(res.get(first, "normalized_rate").as_f64(), Some(1.0));
    assert_eq!(res.filter("kind", "spot").count(), 3);
}

#[test]
fn failures_leave_a_marker_row_and_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("big.toml");
    std::fs::write(&conf, "signature = \"canonical\"\nl = 2\ntrials = 2\n").unwrap();
    let out = dir.path().join("out");
    let o = bin().args(["align", "--config"]).arg(&conf).arg("--out").arg(&out).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
    let csv = std::fs::read_to_string(out.join("align.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.contains("failed: "), "{last}");
    let run: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["complete"], false);
}

#[test]
fn configuration_errors_are_reported_before_running() {
    assert!(execute(Experiment::Fig2, &cfg("trials = 4")).is_err());
    assert!(execute(Experiment::Align, &cfg("p = [4]")).is_err());
    assert!(execute(Experiment::Align, &cfg("strategy = \"guess\"")).is_err());
    assert!(execute(Experiment::Dof, &cfg("snr_db = [10.0, 5.0, 20.0]")).is_err());
    assert!(RunConfig::from_toml("not_a_key = 1").is_err());
    let st = bin().args(["dioph", "--config", "/nonexistent.toml"]).output().unwrap();
    assert!(!st.status.success());
}

#[test]
fn align_noiseless_example() {
    let c = cfg("noise_variance = 0.0\ntrials = 100");
    let p = align::params(&c).unwrap();
    assert_eq!(p.p, vec![5]);
    let r = execute(Experiment::Align, &c).unwrap();
    let total = r.result.filter("kind", "total").next().unwrap();
    for col in ["block_errors", "symbol_errors", "equation_errors"] {
        assert_eq!(r.result.get(total, col), &Cell::Int(0), "{col}");
    }
    assert_eq!(r.result.get(total, "trials"), &Cell::Int(100));
    assert_eq!(r.result.get(total, "tail_bound"), &Cell::Float(0.0));
}

#[test]
fn align_oracle_with_loaded_code() {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("hamming.txt");
    std::fs::write(&code, GeneratorMatrix::hamming_7_4().to_text()).unwrap();
    let text = format!(
        "strategy = \"oracle\"\np = [2]\ncode_file = {:?}\noracle_corruptions = 1\ntrials = 200\n",
        code.to_str().unwrap()
    );
    let r = execute(Experiment::Align, &cfg(&text)).unwrap();
    assert!(r.error.is_none(), "{:?}", r.error);
    let total = r.result.filter("kind", "total").next().unwrap();
    assert_eq!(r.result.get(total, "equation_errors"), &Cell::Int(0));
    assert_eq!(r.result.get(total, "block_errors"), &Cell::Int(0));
    assert_eq!(r.result.get(total, "message_len"), &Cell::Int(4));
    let bad = execute(Experiment::Align, &cfg(&text.replace("p = [2]", "p = [3]"))).unwrap();
    assert!(bad.error.is_some());
}

#[test]
fn invert_counts_nongeneric_as_rejected() {
    let r = execute(Experiment::Invert, &cfg("samples = 8\nnongeneric = 3")).unwrap();
    let res = &r.result;
    assert_eq!(res.filter("class", "pass").count(), 8);
    assert_eq!(res.filter("class", "rejected").count(), 3);
    assert_eq!(res.filter("class", "fail").count(), 0);
    let p = invert::params(&cfg("")).unwrap();
    assert_eq!((p.k, p.l, p.p.clone(), p.samples), (2, 2, vec![5], 100));
}

#[test]
fn dioph_flags_rational_inputs() {
    let r = execute(Experiment::Dioph, &cfg("q_max = 200\nsamples = 1\ndims = [2]")).unwrap();
    let res = &r.result;
    let rational = res.filter("kind", "fit_rational").next().unwrap();
    assert_eq!(res.get(rational, "degenerate").as_bool(), Some(true));
    assert_eq!(res.get(rational, "slope"), &Cell::Empty);
    let probes: Vec<_> = res.filter("kind", "probe").collect();
    assert_eq!(probes.len(), 3);
    assert!(probes.iter().all(|row| res.get(row, "separation").as_f64().unwrap() > 0.0));
    assert_eq!(dioph::params(&cfg("")).unwrap().q_max, 10_000);
}
