// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::Command as Process;

use edp_core::config::parse_config;
use edp_core::run::{read_summary, run_command, run_from_text, Command, LOCK_FILE};
use serde_json::Value;

const SMALL: &str = "[grid]\ndim = 2\nn = 16\nhalf_length = 10pi\n[time]\nnodes = 16\nhorizon_periods = 2\n\
                     [forcing.1]\namplitude = 1e-3\ndirection = 1, 0\nenvelope = gaussian:6\n";

fn run(cmd: Command, text: &str, dir: &Path) -> (i32, Value) {
    let code = run_from_text(cmd, text, Some(dir), true);
    (code, read_summary(dir).unwrap())
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn spectrum_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (code, summary) = run(Command::Spectrum, "", dir.path());
    assert_eq!(code, 0);
    let rows = csv_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(rows[0], ["xi", "re_lambda_plus", "im_lambda_plus", "re_lambda_minus", "im_lambda_minus"]);
    assert_eq!(rows.len(), 513);
    assert_eq!(rows[1][0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[1][3].parse::<f64>().unwrap(), -1.0);
    for row in &rows[1..] {
        let (xi, re_plus): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        if xi > 0.5 {
            assert_eq!(re_plus, -0.5);
        }
    }
    assert_eq!(summary["config"]["n"], 64);
    assert_eq!(summary["error"], Value::Null);
    assert!(!dir.path().join(LOCK_FILE).exists());
}

#[test]
fn zero_forcing_gives_zero_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("amplitude = 1e-3", "amplitude = 0");
    let (code, summary) = run(Command::SolvePeriodic, &text, dir.path());
    assert_eq!(code, 0);
    let r = &summary["results"];
    assert_eq!(r["periodicity_defect"].as_f64(), Some(0.0));
    assert_eq!(r["orbit_norms"]["l2"].as_f64(), Some(0.0));
    assert!(dir.path().join("orbit_u0.edpf").exists());
}

#[test]
fn small_forcing_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, summary) = run(Command::SolvePeriodic, SMALL, dir.path());
    assert_eq!(code, 0);
    let ratios = summary["results"]["ratios"].as_array().unwrap();
    assert!(!ratios.is_empty());
    assert!(ratios.iter().all(|r| r.as_f64().unwrap() < 1.0));
    assert!(summary["warnings"][0].as_str().unwrap().starts_with("outside theory"));
    let log = csv_rows(&dir.path().join("convergence.csv"));
    assert_eq!(log.len(), summary["results"]["iterations"].as_u64().unwrap() as usize + 1);
    let orbit = csv_rows(&dir.path().join("orbit.csv"));
    assert_eq!(orbit.len(), 16 + 2);
}

#[test]
fn configuration_errors_exit_3_with_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (code, summary) = run(Command::Spectrum, "[cutoff]\nr1 = 0.5\n", dir.path());
    assert_eq!(code, 3);
    assert_eq!(summary["error"]["kind"], "validation");
    assert!(summary["error"]["message"].as_str().unwrap().contains("r1 < r_inf < 0.5 required"));
    assert_eq!(summary["config"], Value::Null);

    let (code, summary) = run(Command::Norms, "[grid]\nsize = 3\n", dir.path());
    assert_eq!(code, 3);
    assert_eq!(summary["error"]["kind"], "parse");
}

#[test]
fn non_convergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[tolerances]\nmax_outer = 1\n");
    let (code, summary) = run(Command::SolvePeriodic, &text, dir.path());
    assert_eq!(code, 2, "{summary}");
    assert_eq!(summary["error"]["kind"], "non_convergence");
    assert_eq!(summary["exit_code"], 2);
    assert_eq!(csv_rows(&dir.path().join("convergence.csv")).len(), 3);
}

#[test]
fn blow_up_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("amplitude = 1e-3", "amplitude = 2000").replace("horizon_periods = 2", "horizon_periods = 3");
    let (code, summary) = run(Command::Evolve, &text, dir.path());
    assert_eq!(code, 4, "{summary}");
    let kind = summary["error"]["kind"].as_str().unwrap();
    assert!(["cfl", "vacuum", "blow_up", "overflow"].contains(&kind), "{kind}");
}

#[test]
fn busy_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(LOCK_FILE), "").unwrap();
    let cfg = parse_config(SMALL).unwrap();
    assert_eq!(run_command(Command::Spectrum, &cfg, dir.path(), true), 3);
    assert!(!dir.path().join("summary.json").exists());
    assert!(dir.path().join(LOCK_FILE).exists());
}

#[test]
fn evolve_stability_norms_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let sub = |name: &str| dir.path().join(name);

    let (code, summary) = run(Command::Evolve, SMALL, &sub("evolve"));
    assert_eq!(code, 0);
    assert_eq!(summary["results"]["period_defects"].as_array().unwrap().len(), 2);
    assert_eq!(csv_rows(&sub("evolve").join("evolve.csv")).len(), 2 * 16 + 2);

    let (code, summary) = run(Command::Stability, SMALL, &sub("stability"));
    assert_eq!(code, 0, "{summary}");
    assert_eq!(csv_rows(&sub("stability").join("stability.csv")).len(), 2 * 16 + 2);
    assert!(summary["results"]["zero_perturbation_deviation"].as_f64().unwrap() < 1e-6);

    let (code, summary) = run(Command::Norms, SMALL, &sub("norms"));
    assert_eq!(code, 0);
    assert!(summary["results"]["g_bracket"]["total"].as_f64().unwrap() > 0.0);
    let table = csv_rows(&sub("norms").join("norms.csv"));
    assert_eq!(table[0], ["field", "k", "l", "value"]);

    let text = "[grid]\nn = 32\nhalf_length = 10pi\n";
    let (code, summary) = run(Command::Kernels, text, &sub("kernels"));
    assert_eq!(code, 0);
    assert_eq!(summary["results"]["fits"].as_array().unwrap().len(), 5);
    assert_eq!(csv_rows(&sub("kernels").join("kernels.csv")).len(), 6);
}

#[test]
fn identical_runs_write_identical_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&format!("{SMALL}[output]\nseed = 3\n")).unwrap();
    let read = |k: usize| {
        let out = dir.path().join(format!("r{k}"));
        assert_eq!(run_command(Command::Norms, &cfg, &out, true), 0);
        fs::read(out.join("summary.json")).unwrap()
    };
    assert_eq!(read(0), read(1));
}

#[test]
fn binary_honours_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(&config, SMALL).unwrap();
    let out = dir.path().join("out");
    let output = Process::new(env!("CARGO_BIN_EXE_edp"))
        .args(["spectrum", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"])
        .env("EDP_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(output.stdout.is_empty());
    assert!(out.join("summary.json").exists());

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[cutoff]\nr_inf = 0.6\n").unwrap();
    let status = Process::new(env!("CARGO_BIN_EXE_edp"))
        .args(["norms", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
