// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command orchestration and file output.
//!
//! Every command writes `summary.json` (also on failure, with an error record) and
//! `timings.json` into the output directory, plus the CSV series listed below. Wall
//! times live only in `timings.json`, so summaries of identical runs are byte-equal.
//!
//! | command          | CSV files and columns                                                         |
//! |------------------|-------------------------------------------------------------------------------|
//! | `spectrum`       | `spectrum.csv`: xi, re_lambda_plus, im_lambda_plus, re_lambda_minus, im_lambda_minus |
//! | `kernels`        | `kernels.csv`: label, slope, intercept, residual, r_lo, r_hi, bins; `kernel_profiles.csv`: label, log_r, log_max_abs |
//! | `solve-periodic` | `convergence.csv` (see [`CONVERGENCE_COLUMNS`]); `orbit.csv`: t, l2, hs, phi_max; snapshot `orbit_u0.edpf` |
//! | `evolve`         | `evolve.csv`: t, l2, hs, phi_max; `period_defect.csv`: period, defect; snapshot `final.edpf` |
//! | `stability`      | `convergence.csv`; `stability.csv` (see [`STABILITY_COLUMNS`])                |
//! | `norms`          | `norms.csv`: field, k, l, value                                               |

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_config, SolverConfig};
use crate::diagnostics::{
    default_perturbation, g_bracket_norm, kernel_decay_report, random_state, stability_experiment, StabilityReport,
};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::forcing::ForcingSpectrum;
use crate::integrators::{NonlinearStepper, Trajectory};
use crate::kernels::{Branch, KernelFamily, KernelSelector};
use crate::modes::acoustic_eigenvalues;
use crate::norms::weighted_norms_spectral;
use crate::periodic::{iterate_periodic, ConvergenceLog, PeriodicOrbit};
use crate::snapshot::{write_snapshot, VERSION};
use crate::state::SpectralState;

/// Summary layout version; bumped together with the snapshot format.
pub const SCHEMA_VERSION: u32 = VERSION;
pub const SPECTRUM_SAMPLES: usize = 512;
pub const LOCK_FILE: &str = ".edp.lock";

pub const CONVERGENCE_COLUMNS: &[&str] = &[
    "iteration",
    "increment_l2",
    "increment_hs",
    "increment_xs",
    "ratio",
    "mass_defect",
    "neumann_iterations",
    "neumann_last_increment",
    "neumann_max_ratio",
];

pub const STABILITY_COLUMNS: &[&str] =
    &["t", "psi_l2", "w_l2", "psi_hs", "w_hs", "psi_linf", "w_linf", "dissipation", "energy_ratio"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Kernels,
    SolvePeriodic,
    Evolve,
    Stability,
    Norms,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Self::Spectrum, Self::Kernels, Self::SolvePeriodic, Self::Evolve, Self::Stability, Self::Norms];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Kernels => "kernels",
            Self::SolvePeriodic => "solve-periodic",
            Self::Evolve => "evolve",
            Self::Stability => "stability",
            Self::Norms => "norms",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub version: String,
    pub command: String,
    pub exit_code: i32,
    pub config: Option<SolverConfig>,
    pub warnings: Vec<String>,
    pub error: Option<ErrorRecord>,
    pub outputs: Vec<OutputFile>,
    pub results: Value,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub command: String,
    pub total_seconds: f64,
    pub outer_iteration_seconds: Vec<f64>,
}

/// Exit code for an error: 2 solver non-convergence, 3 invalid input, 4 numerical blow-up, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonContraction { .. } | Error::Divergence { .. } | Error::NonConvergence { .. } | Error::Compatibility(_) => 2,
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::InvalidField(_)
        | Error::ShapeMismatch(_)
        | Error::CorruptSnapshot(_)
        | Error::ZeroWavevector
        | Error::DegenerateBand { .. } => 3,
        Error::Vacuum { .. } | Error::Overflow(_) | Error::Cfl(_) | Error::BlowUp(_) => 4,
        Error::NonPositive { .. } | Error::Io(_) => 1,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::InvalidField(_) => "invalid_field",
        Error::Vacuum { .. } => "vacuum",
        Error::Overflow(_) => "overflow",
        Error::ZeroWavevector => "zero_wavevector",
        Error::DegenerateBand { .. } => "degenerate_band",
        Error::Cfl(_) => "cfl",
        Error::Compatibility(_) => "compatibility",
        Error::NonContraction { .. } => "non_contraction",
        Error::Divergence { .. } => "divergence",
        Error::NonConvergence { .. } => "non_convergence",
        Error::BlowUp(_) => "blow_up",
        Error::Parse { .. } => "parse",
        Error::Validation(_) => "validation",
        Error::CorruptSnapshot(_) => "corrupt_snapshot",
        Error::ShapeMismatch(_) => "shape_mismatch",
        Error::NonPositive { .. } => "non_positive",
        Error::Io(_) => "io",
    }
}

/// Accumulates the files and results of one command.
struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<OutputFile>,
    results: serde_json::Map<String, Value>,
    timings: Timings,
    quiet: bool,
}

impl Outputs<'_> {
    fn csv(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut text = columns.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        fs::write(self.dir.join(name), text)?;
        self.files.push(OutputFile { file: name.into(), columns: columns.iter().map(|c| c.to_string()).collect() });
        Ok(())
    }

    fn snapshot(&mut self, name: &str, domain: &Domain, u: &SpectralState) -> Result<()> {
        write_snapshot(&self.dir.join(name), &domain.grid, &domain.to_physical(u))?;
        let mut columns = vec!["a".to_string()];
        columns.extend((1..=domain.dim()).map(|k| format!("v{k}")));
        self.files.push(OutputFile { file: name.into(), columns });
        Ok(())
    }

    fn put(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.into(), serde_json::to_value(value).expect("plain data serializes"));
    }

    fn note(&self, message: &str) {
        if !self.quiet {
            println!("{message}");
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Validation(format!(
                "output directory {} is in use (remove {} if no run is active)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Runs `cmd` with `cfg`, writing into `out_dir`, and returns the process exit code.
pub fn run_command(cmd: Command, cfg: &SolverConfig, out_dir: &Path, quiet: bool) -> i32 {
    execute(cmd, Ok(cfg), out_dir, quiet)
}

/// Parses `text` first, so that configuration errors also produce a summary.
pub fn run_from_text(cmd: Command, text: &str, out_dir: Option<&Path>, quiet: bool) -> i32 {
    match parse_config(text) {
        Ok(cfg) => {
            let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
            execute(cmd, Ok(&cfg), &dir, quiet)
        }
        Err(err) => {
            let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(SolverConfig::default().output_dir));
            execute(cmd, Err(err), &dir, quiet)
        }
    }
}

fn execute(cmd: Command, cfg: std::result::Result<&SolverConfig, Error>, out_dir: &Path, quiet: bool) -> i32 {
    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("edp: cannot create {}: {e}", out_dir.display());
        return 1;
    }
    let _lock = match Lock::acquire(out_dir) {
        Ok(lock) => lock,
        Err(e) => {
            eprintln!("edp: {e}");
            return exit_code(&e);
        }
    };
    let start = Instant::now();
    let mut out = Outputs {
        dir: out_dir,
        files: Vec::new(),
        results: Default::default(),
        timings: Timings { command: cmd.name().into(), ..Default::default() },
        quiet,
    };
    let (config, warnings, outcome) = match cfg {
        Ok(cfg) => {
            let warnings = cfg.warnings();
            for w in &warnings {
                out.note(&format!("warning: {w}"));
            }
            let outcome = dispatch(cmd, cfg, &mut out);
            (Some(cfg.clone()), warnings, outcome)
        }
        Err(e) => (None, Vec::new(), Err(e)),
    };
    let mut warnings = warnings;
    if let Some(Value::Array(extra)) = out.results.remove("solver_warnings") {
        warnings.extend(extra.into_iter().filter_map(|w| w.as_str().map(String::from)));
    }
    let (exit, error) = match &outcome {
        Ok(()) => (0, None),
        Err(e) => {
            eprintln!("edp {}: {e}", cmd.name());
            (exit_code(e), Some(ErrorRecord { kind: error_kind(e).into(), message: e.to_string() }))
        }
    };
    out.timings.total_seconds = start.elapsed().as_secs_f64();
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.name().into(),
        exit_code: exit,
        config,
        warnings,
        error,
        outputs: out.files,
        results: Value::Object(out.results),
    };
    let written = serde_json::to_string_pretty(&summary)
        .map_err(std::io::Error::other)
        .and_then(|s| fs::write(out_dir.join("summary.json"), s + "\n"))
        .and_then(|_| {
            let t = serde_json::to_string_pretty(&out.timings).expect("plain data serializes");
            fs::write(out_dir.join("timings.json"), t + "\n")
        });
    if let Err(e) = written {
        eprintln!("edp: cannot write summary: {e}");
        return 1;
    }
    if !quiet {
        println!("{}: exit {exit}, outputs in {}", cmd.name(), out_dir.display());
    }
    exit
}

fn dispatch(cmd: Command, cfg: &SolverConfig, out: &mut Outputs) -> Result<()> {
    match cmd {
        Command::Spectrum => spectrum(cfg, out),
        Command::Kernels => kernels(cfg, out),
        Command::SolvePeriodic => solve_periodic(cfg, out).map(|_| ()),
        Command::Evolve => evolve(cfg, out),
        Command::Stability => stability(cfg, out),
        Command::Norms => norms(cfg, out),
    }
}

fn spectrum(cfg: &SolverConfig, out: &mut Outputs) -> Result<()> {
    let grid = cfg.grid()?;
    let xi_max = (grid.n / 2) as f64 * std::f64::consts::PI / grid.half_length * (grid.dim as f64).sqrt();
    let rows: Vec<Vec<String>> = (0..SPECTRUM_SAMPLES)
        .map(|k| {
            let xi = xi_max * k as f64 / (SPECTRUM_SAMPLES - 1) as f64;
            let (plus, minus) = acoustic_eigenvalues(xi);
            vec![num(xi), num(plus.re), num(plus.im), num(minus.re), num(minus.im)]
        })
        .collect();
    out.csv("spectrum.csv", &["xi", "re_lambda_plus", "im_lambda_plus", "re_lambda_minus", "im_lambda_minus"], rows)?;
    out.put("samples", SPECTRUM_SAMPLES);
    out.put("xi_max", xi_max);
    out.put("degenerate_radius", 0.5);
    Ok(())
}

/// Kernel entries reported by the `kernels` command.
pub fn default_kernel_selectors(period: f64) -> Vec<KernelSelector> {
    let e1 = |branch, i, j| KernelSelector { family: KernelFamily::E1k { branch }, i, j };
    vec![
        e1(Branch::Plus, 0, 0),
        e1(Branch::Plus, 0, 1),
        e1(Branch::Zero, 1, 1),
        e1(Branch::Minus, 0, 0),
        KernelSelector { family: KernelFamily::E2 { t: 0.5 * period, tau: 0.0 }, i: 0, j: 0 },
    ]
}

fn kernels(cfg: &SolverConfig, out: &mut Outputs) -> Result<()> {
    let domain = cfg.domain()?;
    let selectors = default_kernel_selectors(cfg.period);
    out.note(&format!("kernels: {} entries on n = {}", selectors.len(), cfg.n));
    let fits = kernel_decay_report(&domain, cfg.period, &selectors);
    out.csv(
        "kernels.csv",
        &["label", "slope", "intercept", "residual", "r_lo", "r_hi", "bins"],
        fits.iter().map(|k| {
            vec![
                k.label.clone(),
                num(k.fit.slope),
                num(k.fit.intercept),
                num(k.fit.residual),
                num(k.fit.window.0),
                num(k.fit.window.1),
                k.fit.abscissa.len().to_string(),
            ]
        }),
    )?;
    out.csv(
        "kernel_profiles.csv",
        &["label", "log_r", "log_max_abs"],
        fits.iter().flat_map(|k| {
            k.fit.abscissa.iter().zip(&k.fit.ordinate).map(|(x, y)| vec![k.label.clone(), num(*x), num(*y)])
        }),
    )?;
    let table: Vec<Value> = fits
        .iter()
        .map(|k| json!({ "label": k.label, "selector": k.selector, "slope": k.fit.slope, "residual": k.fit.residual }))
        .collect();
    out.put("fits", table);
    out.put("fit_label", "empirical power-law slope of log max|K| against log r");
    Ok(())
}

fn log_rows(log: &ConvergenceLog) -> Vec<Vec<String>> {
    log.records
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                num(r.increment_l2),
                num(r.increment_hs),
                num(r.increment_xs),
                num(r.ratio),
                num(r.mass_defect),
                r.neumann_iterations.to_string(),
                num(r.neumann_last_increment),
                num(r.neumann_max_ratio),
            ]
        })
        .collect()
}

fn trajectory_rows(domain: &Domain, traj: &Trajectory, s: usize, t0: f64) -> Vec<Vec<String>> {
    traj.nodes
        .iter()
        .enumerate()
        .map(|(m, u)| {
            let a = domain.backward(&u.comps[0]);
            let phi_max = a.iter().fold(0.0f64, |acc, x| acc.max(x.exp_m1().abs()));
            vec![num(t0 + traj.time(m)), num(domain.state_l2(u)), num(domain.state_hk(u, s)), num(phi_max)]
        })
        .collect()
}

fn solve_periodic(cfg: &SolverConfig, out: &mut Outputs) -> Result<(Domain, PeriodicOrbit)> {
    let domain = cfg.domain()?;
    let spec = cfg.forcing_spec();
    out.note(&format!("solve-periodic: d = {} n = {} M = {}", cfg.dim, cfg.n, cfg.nodes));
    let solved = iterate_periodic(&domain, &spec, &cfg.settings(), cfg.pressure);
    let log = match &solved {
        Ok((_, log)) => log,
        Err(failure) => &failure.log,
    };
    out.csv("convergence.csv", CONVERGENCE_COLUMNS, log_rows(log))?;
    out.timings.outer_iteration_seconds = log.records.iter().map(|r| r.wall_seconds).collect();
    out.put("g_bracket", log.g_bracket);
    out.put("iterations", log.records.len());
    out.put("ratios", log.ratios());
    out.put("convergence", log);
    out.put("solver_warnings", &log.warnings);
    let (orbit, log) = solved.map_err(|f| f.error)?;
    let ratios = log.ratios();
    out.put("max_ratio", ratios.iter().copied().fold(0.0, f64::max));
    out.put("contracting", ratios.iter().all(|&r| r < 1.0));
    out.put("periodicity_defect", orbit.defect);
    out.put("zero_mode_defect", orbit.zero_mode_defect);
    out.put("mass_defect", orbit.mass_defect);
    out.put("pde_residual", orbit.residual);
    out.put("orbit_norms", orbit.norms);
    out.csv("orbit.csv", &["t", "l2", "hs", "phi_max"], trajectory_rows(&domain, &orbit.trajectory, cfg.s, 0.0))?;
    out.snapshot("orbit_u0.edpf", &domain, &orbit.trajectory.nodes[0])?;
    out.note(&format!(
        "solve-periodic: {} iterations, defect {:.3e}, residual {:.3e}",
        log.records.len(),
        orbit.defect,
        orbit.residual
    ));
    Ok((domain, orbit))
}

fn evolve(cfg: &SolverConfig, out: &mut Outputs) -> Result<()> {
    let domain = cfg.domain()?;
    let spectrum = ForcingSpectrum::new(&domain, &cfg.forcing_spec());
    let dt = cfg.period / cfg.nodes as f64;
    let stepper = NonlinearStepper::new(&domain, cfg.pressure, Some(&spectrum), None, dt);
    let mut u = SpectralState::zeros(domain.dim(), domain.len());
    let mut rows = Vec::new();
    let mut defects = Vec::new();
    out.note(&format!("evolve: {} periods from rest", cfg.horizon_periods));
    for p in 0..cfg.horizon_periods {
        let mut traj = Trajectory::zeros(domain.dim(), domain.len(), cfg.period, cfg.nodes);
        traj.nodes[0] = u.clone();
        for m in 0..cfg.nodes {
            stepper.step(&mut u, (p * cfg.nodes + m) as f64 * dt)?;
            if !u.max_norm().is_finite() {
                return Err(Error::BlowUp(format!("non-finite state at t = {:.3}", (p * cfg.nodes + m + 1) as f64 * dt)));
            }
            traj.nodes[m + 1] = u.clone();
        }
        let mut all = trajectory_rows(&domain, &traj, cfg.s, p as f64 * cfg.period);
        if p + 1 < cfg.horizon_periods {
            all.pop();
        }
        rows.extend(all);
        let mut diff = u.clone();
        diff.sub(&traj.nodes[0]);
        let scale = traj.nodes.iter().map(|v| domain.state_l2(v)).fold(0.0, f64::max);
        defects.push(if scale > 0.0 { domain.state_l2(&diff) / scale } else { 0.0 });
    }
    out.csv("evolve.csv", &["t", "l2", "hs", "phi_max"], rows)?;
    out.csv(
        "period_defect.csv",
        &["period", "defect"],
        defects.iter().enumerate().map(|(p, d)| vec![(p + 1).to_string(), num(*d)]),
    )?;
    out.snapshot("final.edpf", &domain, &u)?;
    out.put("period_defects", &defects);
    out.put("final_l2", domain.state_l2(&u));
    out.put("final_hs", domain.state_hk(&u, cfg.s));
    Ok(())
}

fn stability_rows(report: &StabilityReport) -> Vec<Vec<String>> {
    (0..report.times.len())
        .map(|i| {
            [
                report.times[i],
                report.psi_l2[i],
                report.w_l2[i],
                report.psi_hs[i],
                report.w_hs[i],
                report.psi_linf[i],
                report.w_linf[i],
                report.dissipation[i],
                report.energy_ratio[i],
            ]
            .iter()
            .map(|x| num(*x))
            .collect()
        })
        .collect()
}

fn stability(cfg: &SolverConfig, out: &mut Outputs) -> Result<()> {
    let (domain, orbit) = solve_periodic(cfg, out)?;
    let spectrum = ForcingSpectrum::new(&domain, &cfg.forcing_spec());
    let forcing = (!spectrum.is_empty()).then_some(&spectrum);
    let perturbation = default_perturbation(&domain, cfg.perturbation_amplitude);
    out.note(&format!("stability: {} periods", cfg.horizon_periods));
    let report =
        stability_experiment(&domain, &orbit, &perturbation, cfg.horizon_periods, forcing, cfg.pressure, cfg.s, cfg.delta0)?;
    out.csv("stability.csv", STABILITY_COLUMNS, stability_rows(&report))?;
    let zero = SpectralState::zeros(domain.dim(), domain.len());
    let floor =
        stability_experiment(&domain, &orbit, &zero, cfg.horizon_periods, forcing, cfg.pressure, cfg.s, cfg.delta0)?;
    out.put("linf_ratio", report.linf_ratio);
    out.put("linf_trend", report.linf_trend);
    out.put("energy_ratio_slope", report.energy_ratio_slope);
    out.put("max_relative_deviation", report.max_relative_deviation);
    out.put("zero_perturbation_deviation", floor.max_relative_deviation);
    out.put("decaying", report.decaying);
    Ok(())
}

fn norms(cfg: &SolverConfig, out: &mut Outputs) -> Result<()> {
    let domain = cfg.domain()?;
    let spec = cfg.forcing_spec();
    let bracket = g_bracket_norm(&domain, &spec, cfg.s, cfg.nodes);
    let spectrum = ForcingSpectrum::new(&domain, &spec);
    let g0 = spectrum.at(domain.dim(), domain.len(), 0.0);
    let forcing_norms = weighted_norms_spectral(&domain, &g0, cfg.s, cfg.dim);
    let sample = random_state(&domain, cfg.seed, cfg.s, |_| true);
    let sample_norms = weighted_norms_spectral(&domain, &sample, cfg.s, cfg.dim);
    let mut rows = Vec::new();
    for (name, table) in [("forcing_t0", &forcing_norms), ("random_state", &sample_norms)] {
        for (k, row) in table.hkl.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                rows.push(vec![name.to_string(), k.to_string(), l.to_string(), num(*v)]);
            }
        }
        rows.push(vec![name.to_string(), "x1".into(), String::new(), num(table.x1)]);
        rows.push(vec![name.to_string(), "y1".into(), String::new(), num(table.y1)]);
    }
    out.csv("norms.csv", &["field", "k", "l", "value"], rows)?;
    out.put("g_bracket", bracket);
    out.put("forcing_t0", &forcing_norms);
    out.put("random_state", &sample_norms);
    Ok(())
}

/// Reads an output directory's summary back as JSON.
pub fn read_summary(dir: &Path) -> Result<Value> {
    let text = fs::read_to_string(dir.join("summary.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::CorruptSnapshot(format!("summary.json: {e}")))
}
