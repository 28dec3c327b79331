// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Physical and spectral representations of `u = (a, v)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ScalarField = Vec<f64>;
pub type VectorField = Vec<ScalarField>;

/// Real samples of `u = (a, v_1, .., v_dim)`; `a = log(1 + φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub comps: Vec<ScalarField>,
}

impl State {
    pub fn zeros(dim: usize, len: usize) -> Self {
        Self { comps: vec![vec![0.0; len]; dim + 1] }
    }

    pub fn from_parts(a: ScalarField, v: VectorField) -> Self {
        let mut comps = vec![a];
        comps.extend(v);
        Self { comps }
    }

    pub fn dim(&self) -> usize {
        self.comps.len() - 1
    }

    pub fn a(&self) -> &[f64] {
        &self.comps[0]
    }

    pub fn v(&self, k: usize) -> &[f64] {
        &self.comps[k + 1]
    }

    /// `φ = e^a - 1`.
    pub fn phi(&self) -> ScalarField {
        self.comps[0].iter().map(|a| a.exp_m1()).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (c, comp) in self.comps.iter().enumerate() {
            if let Some(i) = comp.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidField(format!("component {c} sample {i} is not finite")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { comps: self.comps.iter().map(|f| f.iter().map(|x| c * x).collect()).collect() }
    }

    pub fn axpy(&mut self, c: f64, other: &State) {
        for (f, g) in self.comps.iter_mut().zip(&other.comps) {
            f.iter_mut().zip(g).for_each(|(x, y)| *x += c * y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Coefficients of every component, laid out like the grid samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub comps: Vec<Vec<Complex64>>,
}

impl SpectralState {
    pub fn zeros(dim: usize, len: usize) -> Self {
        Self { comps: vec![vec![Complex64::default(); len]; dim + 1] }
    }

    pub fn dim(&self) -> usize {
        self.comps.len() - 1
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `dim + 1` coefficients of one wavevector slot.
    pub fn mode(&self, idx: usize) -> [Complex64; 4] {
        let mut out = [Complex64::default(); 4];
        for (c, comp) in self.comps.iter().enumerate() {
            out[c] = comp[idx];
        }
        out
    }

    pub fn set_mode(&mut self, idx: usize, value: &[Complex64; 4]) {
        for (c, comp) in self.comps.iter_mut().enumerate() {
            comp[idx] = value[c];
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.comps.iter_mut().flatten().for_each(|z| *z *= c);
    }

    pub fn axpy(&mut self, c: f64, other: &SpectralState) {
        for (f, g) in self.comps.iter_mut().zip(&other.comps) {
            f.iter_mut().zip(g).for_each(|(x, y)| *x += c * y);
        }
    }

    pub fn add(&mut self, other: &SpectralState) {
        self.axpy(1.0, other);
    }

    pub fn sub(&mut self, other: &SpectralState) {
        self.axpy(-1.0, other);
    }

    /// Multiply slot `i` of every component by `weights[i]`.
    pub fn apply_weights(&mut self, weights: &[f64]) {
        for comp in &mut self.comps {
            comp.iter_mut().zip(weights).for_each(|(z, w)| *z *= w);
        }
    }

    /// Largest coefficient modulus.
    pub fn max_norm(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
    }
}
