// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Separable, exactly T-periodic external forces `g(x, t) = Σ_k A_k d_k e_k(x̃) τ_k(t)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::{SpectralState, VectorField};

/// Radial envelope, bounded by 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Envelope {
    /// `e^{-|x̃|²/(2σ²)}`.
    Gaussian { sigma: f64 },
    /// `(1 + |x̃|²)^{-p/2}`.
    Rational { power: f64 },
}

impl Envelope {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Self::Gaussian { sigma } => (-r * r / (2.0 * sigma * sigma)).exp(),
            Self::Rational { power } => (1.0 + r * r).powf(-power / 2.0),
        }
    }
}

/// Time profile with period `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Profile {
    /// `cos(2π q t / T + phase)`.
    Cosine { q: u32, phase: f64 },
    Constant,
}

impl Profile {
    pub fn value(&self, t: f64, period: f64) -> f64 {
        match *self {
            Self::Cosine { q, phase } => {
                // Reduce t modulo T first so that large times keep full accuracy.
                let t = t.rem_euclid(period);
                (2.0 * PI * q as f64 * t / period + phase).cos()
            }
            Self::Constant => 1.0,
        }
    }

    /// Exponential representation `τ(t) = Σ c e^{μt}` as `(c, μ)` pairs.
    pub fn exponentials(&self, period: f64) -> Vec<(Complex64, Complex64)> {
        match *self {
            Self::Cosine { q, phase } => {
                let omega = 2.0 * PI * q as f64 / period;
                vec![
                    (0.5 * Complex64::from_polar(1.0, phase), Complex64::new(0.0, omega)),
                    (0.5 * Complex64::from_polar(1.0, -phase), Complex64::new(0.0, -omega)),
                ]
            }
            Self::Constant => vec![(Complex64::new(1.0, 0.0), Complex64::default())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcingTerm {
    pub amplitude: f64,
    pub direction: Vec<f64>,
    pub envelope: Envelope,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcingSpec {
    pub period: f64,
    pub terms: Vec<ForcingTerm>,
}

impl ForcingSpec {
    pub fn zero(period: f64) -> Self {
        Self { period, terms: Vec::new() }
    }

    /// Single Gaussian-envelope term `A e₁ e^{-|x̃|²/(2σ²)} cos(2πt/T)`.
    pub fn gaussian(dim: usize, period: f64, amplitude: f64, sigma: f64) -> Self {
        let mut direction = vec![0.0; dim];
        direction[0] = 1.0;
        Self {
            period,
            terms: vec![ForcingTerm {
                amplitude,
                direction,
                envelope: Envelope::Gaussian { sigma },
                profile: Profile::Cosine { q: 1, phase: 0.0 },
            }],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::Validation(format!("forcing period must be positive (got {})", self.period)));
        }
        for (k, term) in self.terms.iter().enumerate() {
            if term.direction.len() != dim {
                return Err(Error::Validation(format!("forcing term {k}: direction needs {dim} components")));
            }
            if !term.amplitude.is_finite() || term.direction.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("forcing term {k}: non-finite amplitude or direction")));
            }
            match term.envelope {
                Envelope::Gaussian { sigma } if !(sigma > 0.0) => {
                    return Err(Error::Validation(format!("forcing term {k}: sigma must be positive")))
                }
                Envelope::Rational { power } if !(power > 0.0) => {
                    return Err(Error::Validation(format!("forcing term {k}: power must be positive")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.amplitude *= c);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0 || t.direction.iter().all(|&x| x == 0.0))
    }

    /// Largest `|A_k| |d_k|`.
    pub fn amplitude_scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude.abs() * t.direction.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Spatial part `A_k d_k e_k(x̃)` of one term.
    pub fn term_field(&self, k: usize, grid: &Grid) -> VectorField {
        let term = &self.terms[k];
        let env: Vec<f64> = (0..grid.len()).map(|i| term.amplitude * term.envelope.value(grid.radius(i))).collect();
        term.direction.iter().map(|&d| env.iter().map(|e| d * e).collect()).collect()
    }

    /// `g(·, t)` sampled on the grid.
    pub fn eval(&self, grid: &Grid, t: f64) -> VectorField {
        let mut g = vec![vec![0.0; grid.len()]; grid.dim];
        for k in 0..self.terms.len() {
            let tau = self.terms[k].profile.value(t, self.period);
            for (gc, fc) in g.iter_mut().zip(self.term_field(k, grid)) {
                gc.iter_mut().zip(&fc).for_each(|(x, y)| *x += tau * y);
            }
        }
        g
    }
}

/// Coefficients of `G(A_k d_k e_k) = (0; A_k d_k e_k)` per term, Nyquist slots removed.
#[derive(Debug, Clone)]
pub struct ForcingSpectrum {
    pub period: f64,
    pub terms: Vec<(SpectralState, Profile)>,
}

impl ForcingSpectrum {
    pub fn new(domain: &Domain, spec: &ForcingSpec) -> Self {
        let grid = &domain.grid;
        let terms = (0..spec.terms.len())
            .map(|k| {
                let field = spec.term_field(k, grid);
                let mut hat = SpectralState::zeros(grid.dim, grid.len());
                let refs: Vec<&[f64]> = field.iter().map(|c| c.as_slice()).collect();
                for (c, coeffs) in domain.forward_many(&refs).into_iter().enumerate() {
                    hat.comps[c + 1] = coeffs;
                }
                domain.band_limit(&mut hat);
                (hat, spec.terms[k].profile)
            })
            .collect();
        Self { period: spec.period, terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Ĝ(g(t))`.
    pub fn at(&self, dim: usize, len: usize, t: f64) -> SpectralState {
        let mut out = SpectralState::zeros(dim, len);
        for (hat, profile) in &self.terms {
            out.axpy(profile.value(t, self.period), hat);
        }
        out
    }
}
