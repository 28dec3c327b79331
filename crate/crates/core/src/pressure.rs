// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Barotropic pressure laws normalized by `P'(1) = 1`, and the nonlinear
//! coefficients `g₃`, `g₄`, `g₅` built from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::ScalarField;

/// Nodes of the midpoint rule used by the integral auxiliaries.
pub const AUX_NODES: usize = 64;

/// `P(ρ) = ρ²/2` or `P(ρ) = ρ^γ/γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PressureLaw {
    Quadratic,
    Gamma(f64),
}

impl PressureLaw {
    /// Validates `P'(1) = 1` and the admissible exponent range `γ ∈ (1, 3]`.
    pub fn new_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 3.0) {
            return Err(Error::Validation(format!("gamma must lie in (1, 3] (got {gamma})")));
        }
        let law = Self::Gamma(gamma);
        law.check_normalized()?;
        Ok(law)
    }

    pub fn check_normalized(&self) -> Result<()> {
        let err = (self.dp(1.0) - 1.0).abs();
        if err > 1e-12 {
            return Err(Error::Validation(format!("P'(1) = 1 violated by {err:e}")));
        }
        Ok(())
    }

    /// `P' > 0` on `[1 - φ_max, 1 + φ_max]`.
    pub fn check_admissible(&self, phi_max: f64) -> Result<()> {
        if !(0.0..1.0).contains(&phi_max) {
            return Err(Error::Validation(format!("phi_max must lie in [0, 1) (got {phi_max})")));
        }
        for rho in [1.0 - phi_max, 1.0, 1.0 + phi_max] {
            if self.dp(rho) <= 0.0 {
                return Err(Error::Validation(format!("P'({rho}) <= 0")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match self {
            Self::Quadratic => "quadratic".into(),
            Self::Gamma(g) => format!("gamma:{g}"),
        }
    }

    pub fn p(&self, rho: f64) -> f64 {
        match *self {
            Self::Quadratic => 0.5 * rho * rho,
            Self::Gamma(g) => rho.powf(g) / g,
        }
    }

    pub fn dp(&self, rho: f64) -> f64 {
        match *self {
            Self::Quadratic => rho,
            Self::Gamma(g) => rho.powf(g - 1.0),
        }
    }

    pub fn ddp(&self, rho: f64) -> f64 {
        match *self {
            Self::Quadratic => 1.0,
            Self::Gamma(g) => (g - 1.0) * rho.powf(g - 2.0),
        }
    }

    /// `g₃(φ) = P'(1 + φ) - 1`, written to avoid cancellation for small `φ`.
    pub fn g3_from_phi(&self, phi: f64) -> f64 {
        match *self {
            Self::Quadratic => phi,
            Self::Gamma(g) => ((g - 1.0) * phi.ln_1p()).exp_m1(),
        }
    }

    /// `g₃ = P'(e^a) - 1` evaluated from `a` (no vacuum is possible).
    pub fn g3_from_a(&self, a: f64) -> f64 {
        match *self {
            Self::Quadratic => a.exp_m1(),
            Self::Gamma(g) => ((g - 1.0) * a).exp_m1(),
        }
    }
}

/// `g₃(φ) = P'(1 + φ) - 1` pointwise.
pub fn g3_eval(phi: &[f64], law: PressureLaw) -> Result<ScalarField> {
    phi.iter()
        .enumerate()
        .map(|(index, &p)| {
            if 1.0 + p > 0.0 {
                Ok(law.g3_from_phi(p))
            } else {
                Err(Error::Vacuum { index, value: 1.0 + p })
            }
        })
        .collect()
}

/// `g₄ = P'(e^{a_per + ψ}) - 1` and `g₅ = P'(e^{ψ + a_per}) - P'(e^{a_per})`.
pub fn g45_eval(a_per: &[f64], psi: &[f64], law: PressureLaw) -> Result<(ScalarField, ScalarField)> {
    let mut g4 = Vec::with_capacity(psi.len());
    let mut g5 = Vec::with_capacity(psi.len());
    for (&a, &s) in a_per.iter().zip(psi) {
        let total = (a + s).exp();
        let base = a.exp();
        if !total.is_finite() || !base.is_finite() {
            return Err(Error::Overflow((a + s).abs().max(a.abs())));
        }
        g4.push(law.dp(total) - 1.0);
        g5.push(law.dp(total) - law.dp(base));
    }
    Ok((g4, g5))
}

/// `g^{(2)}(φ) = ∫₀¹ dθ / (1 + θφ)` by the midpoint rule.
pub fn g2_aux(phi: f64) -> f64 {
    midpoint(|theta| 1.0 / (1.0 + theta * phi))
}

/// `P^{(2)}(φ) = ∫₀¹ P''(1 + θφ) dθ` by the midpoint rule.
pub fn p2_aux(phi: f64, law: PressureLaw) -> f64 {
    midpoint(|theta| law.ddp(1.0 + theta * phi))
}

fn midpoint(f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / AUX_NODES as f64;
    (0..AUX_NODES).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>() * h
}
