// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time-periodic solutions of the damped compressible Euler equations on a large torus.
//!
//! The solver works with the symmetrized unknown `u = (a, v)`, `a = log(1 + φ)`:
//!
//! ```text
//! ∂_t u + A u = -B[u] u + G(g),   A = (0 div; ∇ I),   G(g) = (0; g)
//! ```
//!
//! split into low and high frequencies by smooth Fourier cutoffs. The low part is
//! solved exactly per mode through the resolvent of the time-T map; the high part
//! through a fixed-point iteration of a Strang-split exponential integrator.

// Index loops mirror the component formulas; `!(x > 0.0)` is used on purpose to reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod expm;
pub mod fft;
pub mod forcing;
pub mod grid;
pub mod integrators;
pub mod kernels;
pub mod modes;
pub mod nonlinear;
pub mod norms;
pub mod periodic;
pub mod pressure;
pub mod run;
pub mod snapshot;
pub mod state;

pub use domain::Domain;
pub use error::{Error, Result};
pub use grid::{CutoffPair, Grid};
pub use state::{ScalarField, SpectralState, State, VectorField};
