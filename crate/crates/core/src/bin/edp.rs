// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edp_core::run::{run_from_text, Command};

#[derive(Parser)]
#[command(name = "edp", version, about = "Time-periodic solutions of damped compressible Euler")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues of the linear symbol against |ξ|.
    Spectrum(Common),
    /// Real-space kernels and their radial decay fits.
    Kernels(Common),
    /// Solve for the time-periodic orbit.
    SolvePeriodic(Common),
    /// Evolve the forced system from rest.
    Evolve(Common),
    /// Perturb the periodic orbit and track the deviation.
    Stability(Common),
    /// Weighted Sobolev norms and the forcing size.
    Norms(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Spectrum(c) => (Command::Spectrum, c),
        Cmd::Kernels(c) => (Command::Kernels, c),
        Cmd::SolvePeriodic(c) => (Command::SolvePeriodic, c),
        Cmd::Evolve(c) => (Command::Evolve, c),
        Cmd::Stability(c) => (Command::Stability, c),
        Cmd::Norms(c) => (Command::Norms, c),
    };
    if let Some(threads) = std::env::var("EDP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("edp: cannot size thread pool: {e}");
        }
    }
    let text = match &common.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("edp: cannot read {}: {e}", path.display());
                return ExitCode::from(3);
            }
        },
        None => String::new(),
    };
    let code = run_from_text(command, &text, common.out.as_deref(), common.quiet);
    ExitCode::from(code as u8)
}
