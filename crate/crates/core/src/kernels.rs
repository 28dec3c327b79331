// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Real-space kernels of the low-frequency solution operators.
//!
//! * `E_{1,k} = F^{-1}(χ̂₀ (1 - e^{λ_k T})^{-1} Π_k)`
//! * `E₁(t, σ) = F^{-1}(χ̂₀ e^{-tÂ} (I - e^{-TÂ})^{-1} e^{-(T-σ)Â})`
//! * `E₂(t, τ) = F^{-1}(χ̂₀ e^{-(t-τ)Â})`
//!
//! Fields are sampled with the origin at grid index `n/2` on every axis. The
//! `1/|ξ|²` singularity of the `(+, 00)` entry is resolved at `ξ = 0` by matching the
//! torus Green's function of `-Δ` to its free-space limit (cubic lattice constant).

use num_complex::Complex64;
use serde::Serialize;

use crate::domain::Domain;
use crate::grid::radial_cutoff;
use crate::modes::{decompose_mode, ModeCalculus, ModeMatrix};
use crate::state::ScalarField;

/// `Σ' 1/|m|²` regularization constant of the simple cubic lattice.
const CUBIC_LATTICE_CONSTANT: f64 = 2.837_297_479_480_6;

/// Margin kept between the `Π±` cutoff and the degenerate radius `1/2`.
const BRANCH_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Zero,
    Plus,
    Minus,
}

impl Branch {
    pub fn symbol(&self) -> &'static str {
        match self {
            Self::Zero => "0",
            Self::Plus => "+",
            Self::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelFamily {
    E1k { branch: Branch },
    E1sigma { t: f64, sigma: f64 },
    E2 { t: f64, tau: f64 },
}

/// One matrix entry `(i, j)` (0-based, `0` is the density row/column) of a kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSelector {
    pub family: KernelFamily,
    pub i: usize,
    pub j: usize,
}

impl KernelSelector {
    pub fn label(&self) -> String {
        match self.family {
            KernelFamily::E1k { branch } => format!("E1{}_{}{}", branch.symbol(), self.i + 1, self.j + 1),
            KernelFamily::E1sigma { t, sigma } => format!("E1(t={t},sigma={sigma})_{}{}", self.i + 1, self.j + 1),
            KernelFamily::E2 { t, tau } => format!("E2(t={t},tau={tau})_{}{}", self.i + 1, self.j + 1),
        }
    }

    /// Upper edge of the `χ̂₀` transition used for this family.
    pub fn cutoff_edge(&self, r_inf: f64) -> f64 {
        match self.family {
            KernelFamily::E1k { branch: Branch::Plus | Branch::Minus } => (2.0 * r_inf).min(0.5 - BRANCH_MARGIN),
            _ => 2.0 * r_inf,
        }
    }

    /// Coefficient `c` of the `c/|ξ|²` singularity at the origin.
    fn singular_coefficient(&self, period: f64) -> f64 {
        match (self.family, self.i, self.j) {
            (KernelFamily::E1k { branch: Branch::Plus }, 0, 0) | (KernelFamily::E1sigma { .. }, 0, 0) => 1.0 / period,
            _ => 0.0,
        }
    }

    /// Symbol entry at a nonzero wavevector.
    pub fn symbol(&self, xi: &[f64], period: f64, eps_deg: f64) -> Complex64 {
        let matrix = match self.family {
            KernelFamily::E1k { branch: Branch::Zero } => {
                let sq: f64 = xi.iter().map(|x| x * x).sum();
                let mut pi0 = ModeMatrix::zeros(xi.len() + 1);
                for a in 0..xi.len() {
                    for b in 0..xi.len() {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        pi0.m[a + 1][b + 1] = Complex64::new(delta - xi[a] * xi[b] / sq, 0.0);
                    }
                }
                pi0.scale(Complex64::new(1.0 / (1.0 - (-period).exp()), 0.0))
            }
            KernelFamily::E1k { branch } => {
                let d = decompose_mode(xi, eps_deg).expect("Π± are only sampled away from the degenerate band");
                let (lambda, pi) =
                    if branch == Branch::Plus { (d.lambda_plus, d.pi_plus) } else { (d.lambda_minus, d.pi_minus) };
                pi.scale(1.0 / (1.0 - (lambda * period).exp()))
            }
            KernelFamily::E1sigma { t, sigma } => {
                let calc = ModeCalculus::new(xi, eps_deg);
                calc.propagator(t) * calc.resolvent(period) * calc.propagator(period - sigma)
            }
            KernelFamily::E2 { t, tau } => ModeCalculus::new(xi, eps_deg).propagator(t - tau),
        };
        matrix.m[self.i][self.j]
    }
}

/// Real-space kernel entry on the grid of `domain`.
pub fn kernel_field(domain: &Domain, period: f64, selector: &KernelSelector) -> ScalarField {
    let grid = &domain.grid;
    let dim = grid.dim;
    let r_inf = domain.cutoffs.r_inf;
    let edge = selector.cutoff_edge(r_inf);
    let origin = grid.index_of([0, 0, 0]);
    let mut hat = vec![Complex64::default(); grid.len()];
    for (idx, slot) in hat.iter_mut().enumerate() {
        if idx == origin || !grid.is_active(idx) {
            continue;
        }
        let chi = radial_cutoff(grid.xi_abs(idx), r_inf, edge);
        if chi == 0.0 {
            continue;
        }
        let xi = grid.symbol_wavevector(idx);
        *slot = selector.symbol(&xi[..dim], period, domain.eps_deg) * chi;
    }
    // The origin: average of the regular part over the nearest neighbours, plus the
    // lattice-matched value of the singular part.
    let c = selector.singular_coefficient(period);
    let mut regular = Complex64::default();
    for k in 0..dim {
        for sign in [-1i64, 1] {
            let mut m = [0i64; 3];
            m[k] = sign;
            let idx = grid.index_of(m);
            regular += hat[idx] - c / grid.xi_abs(idx).powi(2);
        }
    }
    regular /= (2 * dim) as f64;
    let box_len = 2.0 * grid.half_length;
    let singular = if dim == 3 { c * CUBIC_LATTICE_CONSTANT * box_len * box_len / (4.0 * std::f64::consts::PI) } else { 0.0 };
    hat[origin] = regular + singular;
    // Shift the origin to index n/2: multiply by (-1)^{Σm}.
    for (idx, slot) in hat.iter_mut().enumerate() {
        let m = grid.frequency(idx);
        if (m[0] + m[1] + m[2]).rem_euclid(2) == 1 {
            *slot = -*slot;
        }
    }
    let scale = grid.len() as f64 / box_len.powi(dim as i32);
    domain.backward(&hat).into_iter().map(|x| x * scale).collect()
}
