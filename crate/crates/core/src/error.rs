// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("vacuum state: 1 + phi = {value:e} <= 0 at sample {index}")]
    Vacuum { index: usize, value: f64 },
    #[error("overflow evaluating pressure law (|a| = {0:e})")]
    Overflow(f64),
    #[error("zero wavevector has no projection decomposition")]
    ZeroWavevector,
    #[error("wavevector inside the degenerate band (|1 - 4|xi|^2| = {gap:e})")]
    DegenerateBand { gap: f64 },
    #[error("CFL violation: dt*|xi_max|*(|v|_inf + |g3|_inf) = {0:.3} > 1")]
    Cfl(f64),
    #[error("zero-mode compatibility violated: mean a-forcing {0:e} not removed")]
    Compatibility(f64),
    #[error("monodromy iteration is not contracting (ratios {ratios:?})")]
    NonContraction { ratios: Vec<f64> },
    #[error("outer iteration diverged at N = {iteration}")]
    Divergence { iteration: usize },
    #[error("no convergence after {iterations} outer iterations (last relative increment {last:e})")]
    NonConvergence { iterations: usize, last: f64 },
    #[error("numerical blow-up: {0}")]
    BlowUp(String),
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-positive value {value:e} at sample {index} inside the fit window")]
    NonPositive { index: usize, value: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
