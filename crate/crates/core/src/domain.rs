// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Transforms, spectral derivatives and projectors bound to one grid.

use num_complex::Complex64;

use crate::error::Result;
use crate::fft::CubeFft;
use crate::grid::{CutoffPair, Grid};
use crate::state::{ScalarField, SpectralState, State};

/// Default half-width of the degenerate band around `|ξ| = 1/2`.
pub const DEFAULT_EPS_DEG: f64 = 1e-4;

/// A grid together with its FFT plans, cutoffs and degenerate-band policy.
#[derive(Debug)]
pub struct Domain {
    pub grid: Grid,
    pub cutoffs: CutoffPair,
    pub eps_deg: f64,
    fft: CubeFft,
    neg: Vec<u32>,
}

impl Domain {
    pub fn new(grid: Grid, r1: f64, r_inf: f64) -> Result<Self> {
        let cutoffs = CutoffPair::new(&grid, r1, r_inf)?;
        let fft = CubeFft::new(grid.dim, grid.n);
        let neg = (0..grid.len()).map(|i| grid.negate(i) as u32).collect();
        Ok(Self { grid, cutoffs, eps_deg: DEFAULT_EPS_DEG, fft, neg })
    }

    pub fn with_eps_deg(mut self, eps_deg: f64) -> Self {
        self.eps_deg = eps_deg;
        self
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn negate(&self, idx: usize) -> usize {
        self.neg[idx] as usize
    }

    pub fn forward(&self, field: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.forward(&mut data);
        data
    }

    /// Transforms two real fields with a single complex FFT.
    pub fn forward_pair(&self, f: &[f64], g: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut z: Vec<Complex64> = f.iter().zip(g).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.fft.forward(&mut z);
        let mut a = vec![Complex64::default(); z.len()];
        let mut b = vec![Complex64::default(); z.len()];
        for i in 0..z.len() {
            let zc = z[self.negate(i)].conj();
            a[i] = 0.5 * (z[i] + zc);
            b[i] = Complex64::new(0.0, -0.5) * (z[i] - zc);
        }
        (a, b)
    }

    /// Inverse transform of a Hermitian spectrum; the imaginary residue is dropped.
    pub fn backward(&self, coeffs: &[Complex64]) -> ScalarField {
        let mut data = coeffs.to_vec();
        self.fft.inverse(&mut data);
        data.iter().map(|z| z.re).collect()
    }

    /// Inverts two Hermitian spectra with a single complex FFT.
    pub fn backward_pair(&self, f: &[Complex64], g: &[Complex64]) -> (ScalarField, ScalarField) {
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = f.iter().zip(g).map(|(&x, &y)| x + i * y).collect();
        self.fft.inverse(&mut z);
        (z.iter().map(|w| w.re).collect(), z.iter().map(|w| w.im).collect())
    }

    /// Inverts any number of Hermitian spectra, pairing them up.
    pub fn backward_many(&self, spectra: &[&[Complex64]]) -> Vec<ScalarField> {
        let mut out = Vec::with_capacity(spectra.len());
        for chunk in spectra.chunks(2) {
            if chunk.len() == 2 {
                let (f, g) = self.backward_pair(chunk[0], chunk[1]);
                out.push(f);
                out.push(g);
            } else {
                out.push(self.backward(chunk[0]));
            }
        }
        out
    }

    /// Transforms any number of real fields, pairing them up.
    pub fn forward_many(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(fields.len());
        for chunk in fields.chunks(2) {
            if chunk.len() == 2 {
                let (f, g) = self.forward_pair(chunk[0], chunk[1]);
                out.push(f);
                out.push(g);
            } else {
                out.push(self.forward(chunk[0]));
            }
        }
        out
    }

    /// Forward transform of every component; rejects non-finite samples.
    pub fn to_spectral(&self, u: &State) -> Result<SpectralState> {
        u.check_finite()?;
        let refs: Vec<&[f64]> = u.comps.iter().map(|c| c.as_slice()).collect();
        Ok(SpectralState { comps: self.forward_many(&refs) })
    }

    pub fn to_physical(&self, u: &SpectralState) -> State {
        let refs: Vec<&[Complex64]> = u.comps.iter().map(|c| c.as_slice()).collect();
        State { comps: self.backward_many(&refs) }
    }

    /// `∂_k` in spectral space, using the symbol wavevector.
    pub fn derivative(&self, coeffs: &[Complex64], axis: usize) -> Vec<Complex64> {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, z)| Complex64::new(0.0, self.grid.symbol_wavevector(i)[axis]) * z)
            .collect()
    }

    /// Removes the unpaired Nyquist slots.
    pub fn band_limit(&self, u: &mut SpectralState) {
        for comp in &mut u.comps {
            for (i, z) in comp.iter_mut().enumerate() {
                if !self.grid.is_active(i) {
                    *z = Complex64::default();
                }
            }
        }
    }

    /// 2/3 rule: zeroes every slot with some `|m_i| > n/3`. Idempotent.
    pub fn dealias(&self, u: &mut SpectralState) {
        for comp in &mut u.comps {
            self.dealias_field(comp);
        }
    }

    pub fn dealias_field(&self, coeffs: &mut [Complex64]) {
        for (i, z) in coeffs.iter_mut().enumerate() {
            if !self.grid.keeps_after_dealias(i) {
                *z = Complex64::default();
            }
        }
    }

    pub fn project_low_spectral(&self, u: &mut SpectralState) {
        u.apply_weights(&self.cutoffs.chi1);
    }

    pub fn project_high_spectral(&self, u: &mut SpectralState) {
        u.apply_weights(&self.cutoffs.chi_inf);
    }

    /// `P_1 u`: multiplication by χ̂₁.
    pub fn project_low(&self, u: &State) -> Result<State> {
        let mut s = self.to_spectral(u)?;
        self.project_low_spectral(&mut s);
        Ok(self.to_physical(&s))
    }

    /// `P_∞ u`: multiplication by χ̂∞.
    pub fn project_high(&self, u: &State) -> Result<State> {
        let mut s = self.to_spectral(u)?;
        self.project_high_spectral(&mut s);
        Ok(self.to_physical(&s))
    }

    /// `‖f‖_{L²}` with the physical cell volume.
    pub fn l2_norm(&self, field: &[f64]) -> f64 {
        (field.iter().map(|x| x * x).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `‖f‖²_{L²}` from the coefficients (Parseval).
    pub fn l2_sq_spectral(&self, coeffs: &[Complex64]) -> f64 {
        coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume() / self.len() as f64
    }

    /// `‖u‖_{L²}` of a whole state from its coefficients.
    pub fn state_l2(&self, u: &SpectralState) -> f64 {
        u.comps.iter().map(|c| self.l2_sq_spectral(c)).sum::<f64>().sqrt()
    }

    /// `Σ_{|α|≤k} ξ^{2α}` for the symbol wavevector of a slot.
    pub fn sobolev_symbol(&self, idx: usize, k: usize) -> f64 {
        let xi = self.grid.symbol_wavevector(idx);
        let sq: Vec<f64> = xi[..self.dim()].iter().map(|x| x * x).collect();
        sobolev_weight(&sq, k)
    }

    /// `‖f‖²_{H^k}` from the coefficients.
    pub fn hk_sq_spectral(&self, coeffs: &[Complex64], k: usize) -> f64 {
        let sum: f64 = coeffs.iter().enumerate().map(|(i, z)| z.norm_sqr() * self.sobolev_symbol(i, k)).sum();
        sum * self.grid.cell_volume() / self.len() as f64
    }

    /// `‖u‖_{H^k}` of a whole state from its coefficients.
    pub fn state_hk(&self, u: &SpectralState, k: usize) -> f64 {
        u.comps.iter().map(|c| self.hk_sq_spectral(c, k)).sum::<f64>().sqrt()
    }
}

/// `Σ_{|α|≤k} Π_i s_i^{α_i}` for `s_i = ξ_i²`, via the complete homogeneous polynomials.
pub fn sobolev_weight(sq: &[f64], k: usize) -> f64 {
    // h[j] = complete homogeneous symmetric polynomial of degree j in sq.
    let mut h = vec![0.0; k + 1];
    h[0] = 1.0;
    for &s in sq {
        for j in 1..=k {
            h[j] += s * h[j - 1];
        }
    }
    h.iter().sum()
}
