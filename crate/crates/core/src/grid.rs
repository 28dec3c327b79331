// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Torus geometry `[-L, L)^dim`, the wavevector table and the smooth frequency cutoffs.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform grid on the torus `[-L, L)^dim` with `n` points per axis.
///
/// Samples and coefficients share the row-major layout with axis 0 slowest.
/// Coefficient index `i` along an axis carries the integer frequency
/// `m = i` for `i < n/2` and `m = i - n` otherwise, so `m ∈ [-n/2, n/2)`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub half_length: f64,
    len: usize,
    table: Vec<[f64; 3]>,
    symbol: Vec<[f64; 3]>,
    table_abs: Vec<f64>,
    active: Vec<bool>,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Validation(format!("dim must be 1, 2 or 3 (got {dim})")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Validation(format!("n must be a power of two >= 8 (got {n})")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::Validation(format!("L must be positive (got {half_length})")));
        }
        let len = n.pow(dim as u32);
        let k0 = PI / half_length;
        let half = (n / 2) as i64;
        let mut table = Vec::with_capacity(len);
        let mut symbol = Vec::with_capacity(len);
        let mut table_abs = Vec::with_capacity(len);
        let mut active = Vec::with_capacity(len);
        for idx in 0..len {
            let m = Self::frequency_of(dim, n, idx);
            let mut xi = [0.0; 3];
            let mut sym = [0.0; 3];
            let mut is_active = true;
            for k in 0..dim {
                xi[k] = k0 * m[k] as f64;
                if m[k] == -half {
                    is_active = false;
                } else {
                    sym[k] = xi[k];
                }
            }
            table_abs.push(xi.iter().map(|x| x * x).sum::<f64>().sqrt());
            table.push(xi);
            symbol.push(sym);
            active.push(is_active);
        }
        Ok(Self { dim, n, half_length, len, table, symbol, table_abs, active })
    }

    fn frequency_of(dim: usize, n: usize, mut idx: usize) -> [i64; 3] {
        let mut m = [0i64; 3];
        for k in (0..dim).rev() {
            let i = idx % n;
            idx /= n;
            m[k] = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
        }
        m
    }

    /// Number of samples (and of coefficients).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Physical cell volume `(2L/n)^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Torus volume `(2L)^dim`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Integer multi-index of a coefficient slot (unused axes are zero).
    pub fn frequency(&self, idx: usize) -> [i64; 3] {
        Self::frequency_of(self.dim, self.n, idx)
    }

    /// Slot of the integer multi-index `m`, taken modulo `n` per axis.
    pub fn index_of(&self, m: [i64; 3]) -> usize {
        let n = self.n as i64;
        (0..self.dim).fold(0usize, |acc, k| acc * self.n + m[k].rem_euclid(n) as usize)
    }

    /// Slot holding the frequency `-m`.
    pub fn negate(&self, idx: usize) -> usize {
        let m = self.frequency(idx);
        self.index_of([-m[0], -m[1], -m[2]])
    }

    /// Table wavevector `(π/L) m`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        self.table[idx]
    }

    /// Table modulus `|ξ_m|`, used for every cutoff.
    pub fn xi_abs(&self, idx: usize) -> f64 {
        self.table_abs[idx]
    }

    /// Wavevector used by differential operators: the Nyquist component, whose
    /// negative is not on the table, is dropped so that real fields stay real.
    pub fn symbol_wavevector(&self, idx: usize) -> [f64; 3] {
        self.symbol[idx]
    }

    /// A slot is active when no component sits at the unpaired Nyquist frequency.
    /// Inactive slots are removed by every dynamical operator.
    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    /// Largest symbol modulus on the table.
    pub fn xi_max(&self) -> f64 {
        (PI / self.half_length) * (self.n / 2 - 1) as f64 * (self.dim as f64).sqrt()
    }

    /// Sample position with every coordinate in `[-L, L)`.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rest = idx;
        let h = self.spacing();
        for k in (0..self.dim).rev() {
            x[k] = -self.half_length + (rest % self.n) as f64 * h;
            rest /= self.n;
        }
        x
    }

    /// Distance `|x̃|` from the sample to the periodic image of the origin.
    pub fn radius(&self, idx: usize) -> f64 {
        self.position(idx).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// The weight `w(x) = 1 + |x̃|`.
    pub fn weight_function(&self) -> Vec<f64> {
        (0..self.len).map(|idx| 1.0 + self.radius(idx)).collect()
    }

    /// 2/3-rule mask: true when every `|m_i| <= n/3`.
    pub fn keeps_after_dealias(&self, idx: usize) -> bool {
        let cap = (self.n / 3) as i64;
        self.frequency(idx)[..self.dim].iter().all(|m| m.abs() <= cap)
    }
}

/// The C^∞ step: 1 for `s <= 0`, 0 for `s >= 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let q = |x: f64| (-1.0 / x).exp();
    q(1.0 - s) / (q(s) + q(1.0 - s))
}

/// Smooth cutoff equal to 1 on `[0, lo]` and vanishing beyond `hi`.
pub fn radial_cutoff(r: f64, lo: f64, hi: f64) -> f64 {
    smooth_step((r - lo) / (hi - lo))
}

/// Low/high cutoffs sampled on the wavevector table.
#[derive(Debug, Clone)]
pub struct CutoffPair {
    pub r1: f64,
    pub r_inf: f64,
    pub chi1: Vec<f64>,
    pub chi_inf: Vec<f64>,
    pub chi0: Vec<f64>,
}

impl CutoffPair {
    pub fn new(grid: &Grid, r1: f64, r_inf: f64) -> Result<Self> {
        if !(r1 > 0.0 && r1 < r_inf && r_inf < 0.5) {
            return Err(Error::Validation(format!(
                "r1 < r_inf < 0.5 required (got r1 = {r1}, r_inf = {r_inf})"
            )));
        }
        let chi1: Vec<f64> = (0..grid.len()).map(|i| radial_cutoff(grid.xi_abs(i), r1, r_inf)).collect();
        let chi_inf = chi1.iter().map(|c| 1.0 - c).collect();
        let chi0 = (0..grid.len()).map(|i| radial_cutoff(grid.xi_abs(i), r_inf, 2.0 * r_inf)).collect();
        Ok(Self { r1, r_inf, chi1, chi_inf, chi0 })
    }
}
