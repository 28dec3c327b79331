// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use edp_core::integrators::{CoefficientTrack, Source};
use edp_core::nonlinear::{apply_a_spectral, apply_b_spectral, self_advection};
use edp_core::pressure::{g3_eval, PressureLaw};
use edp_core::{Domain, Grid, SpectralState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn domain(dim: usize, n: usize, half_length: f64) -> Domain {
    Domain::new(Grid::new(dim, n, half_length).unwrap(), 0.1, 0.4).unwrap()
}

/// Integer frequency of every slot, recomputed from the FFT ordering.
pub fn frequencies(grid: &Grid) -> Vec<[i64; 3]> {
    let n = grid.n as i64;
    (0..grid.len())
        .map(|idx| {
            let mut m = [0i64; 3];
            let mut rest = idx as i64;
            for k in (0..grid.dim).rev() {
                let j = rest % n;
                m[k] = if j < n / 2 { j } else { j - n };
                rest /= n;
            }
            m
        })
        .collect()
}

/// Kept by the 2/3 rule: every component in `[-n/3, n/3]`.
pub fn in_band(grid: &Grid, m: &[i64; 3]) -> bool {
    m[..grid.dim].iter().all(|x| x.abs() <= (grid.n / 3) as i64)
}

/// Random Hermitian spectrum of the requested size on the slots where `keep` holds.
pub fn random_hermitian(d: &Domain, seed: u64, amplitude: f64, keep: impl Fn(usize) -> bool) -> SpectralState {
    let grid = &d.grid;
    let freqs = frequencies(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hat = SpectralState::zeros(grid.dim, grid.len());
    let nyquist = |m: &[i64; 3]| m[..grid.dim].iter().any(|&x| x == -(grid.n as i64) / 2);
    for comp in hat.comps.iter_mut() {
        let raw: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                if keep(i) && !nyquist(&freqs[i]) {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::default()
                }
            })
            .collect();
        for i in 0..grid.len() {
            comp[i] = 0.5 * (raw[i] + raw[d.negate(i)].conj());
        }
    }
    // The physical sup norm is at most N⁻¹ Σ|û|.
    let bound = hat.comps.iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max) / grid.len() as f64;
    if bound > 0.0 {
        hat.scale(amplitude / bound);
    }
    hat
}

/// Naive inverse DFT, `f(x_j) = N⁻¹ Σ_m f̂(m) e^{iξ·x_j}` with `x_j` measured from the grid corner.
pub fn naive_backward(grid: &Grid, hat: &[Complex64]) -> Vec<f64> {
    let freqs = frequencies(grid);
    let n = grid.n as f64;
    let coords: Vec<[f64; 3]> = frequencies_as_coords(grid);
    coords
        .iter()
        .map(|x| {
            let mut acc = Complex64::default();
            for (m, z) in freqs.iter().zip(hat) {
                let phase: f64 = (0..grid.dim).map(|k| 2.0 * PI * m[k] as f64 * x[k] / n).sum();
                acc += z * Complex64::from_polar(1.0, phase);
            }
            acc.re / grid.len() as f64
        })
        .collect()
}

/// Naive forward DFT, unnormalized.
pub fn naive_forward(grid: &Grid, f: &[f64]) -> Vec<Complex64> {
    let freqs = frequencies(grid);
    let n = grid.n as f64;
    let coords = frequencies_as_coords(grid);
    freqs
        .iter()
        .map(|m| {
            let mut acc = Complex64::default();
            for (x, v) in coords.iter().zip(f) {
                let phase: f64 = (0..grid.dim).map(|k| 2.0 * PI * m[k] as f64 * x[k] / n).sum();
                acc += v * Complex64::from_polar(1.0, -phase);
            }
            acc
        })
        .collect()
}

/// Integer sample coordinates `j ∈ [0, n)^d` in row-major order.
fn frequencies_as_coords(grid: &Grid) -> Vec<[f64; 3]> {
    (0..grid.len())
        .map(|idx| {
            let mut x = [0.0; 3];
            let mut rest = idx;
            for k in (0..grid.dim).rev() {
                x[k] = (rest % grid.n) as f64;
                rest /= grid.n;
            }
            x
        })
        .collect()
}

fn truncate(grid: &Grid, hat: &mut [Complex64]) {
    let freqs = frequencies(grid);
    for (z, m) in hat.iter_mut().zip(&freqs) {
        if !in_band(grid, m) {
            *z = Complex64::default();
        }
    }
}

/// `B[ũ]u` as the truncated Fourier convolution
/// `N⁻¹ Σ_{p+q=m} (v̂_k(p) iξ_k(q) û_c(q) + ĝ₃(p) iξ_{c-1}(q) â(q))`,
/// with `ĝ₃` from naive transforms of `g₃(e^ã - 1)`.
pub fn convolution_b(d: &Domain, u_tilde: &SpectralState, u: &SpectralState, law: PressureLaw) -> SpectralState {
    let grid = &d.grid;
    let dim = grid.dim;
    let freqs = frequencies(grid);
    let a = naive_backward(grid, &u_tilde.comps[0]);
    let phi: Vec<f64> = a.iter().map(|x| x.exp() - 1.0).collect();
    let mut g3 = naive_forward(grid, &g3_eval(&phi, law).unwrap());
    truncate(grid, &mut g3);
    let mut v: Vec<Vec<Complex64>> = u_tilde.comps[1..].to_vec();
    v.iter_mut().for_each(|c| truncate(grid, c));
    let mut w = u.clone();
    w.comps.iter_mut().for_each(|c| truncate(grid, c));
    let band: Vec<usize> = (0..grid.len()).filter(|&i| in_band(grid, &freqs[i])).collect();
    let slot = |m: [i64; 3]| grid.index_of(m);
    let dxi = PI / grid.half_length;
    let mut out = SpectralState::zeros(dim, grid.len());
    for &i in &band {
        let m = freqs[i];
        for &p_idx in &band {
            let p = freqs[p_idx];
            let mut q = [0i64; 3];
            for k in 0..dim {
                q[k] = m[k] - p[k];
            }
            if !in_band(grid, &q) {
                continue;
            }
            let q_idx = slot(q);
            let iq: Vec<Complex64> = (0..dim).map(|k| I * (dxi * q[k] as f64)).collect();
            for c in 0..=dim {
                let mut acc = Complex64::default();
                for k in 0..dim {
                    acc += v[k][p_idx] * iq[k] * w.comps[c][q_idx];
                }
                if c > 0 {
                    acc += g3[p_idx] * iq[c - 1] * w.comps[0][q_idx];
                }
                out.comps[c][i] += acc / grid.len() as f64;
            }
        }
    }
    out
}

pub fn max_abs(hat: &SpectralState) -> f64 {
    hat.comps.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_diff(x: &SpectralState, y: &SpectralState) -> f64 {
    x.comps.iter().flatten().zip(y.comps.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

/// `ŝ(t)` for the manufactured solution `u*(t) = cos(ωt) U + sin(ωt) V`, `ω = 2π/T`,
/// of the full system `∂_t u + Au + B[u]u = S`.
pub struct NonlinearManufactured<'a> {
    pub domain: &'a Domain,
    pub u: SpectralState,
    pub v: SpectralState,
    pub omega: f64,
    pub law: PressureLaw,
}

impl NonlinearManufactured<'_> {
    pub fn exact(&self, t: f64) -> SpectralState {
        let mut out = self.u.clone();
        out.scale((self.omega * t).cos());
        out.axpy((self.omega * t).sin(), &self.v);
        out
    }

    fn rate(&self, t: f64) -> SpectralState {
        let mut out = self.u.clone();
        out.scale(-self.omega * (self.omega * t).sin());
        out.axpy(self.omega * (self.omega * t).cos(), &self.v);
        out
    }
}

impl Source for NonlinearManufactured<'_> {
    fn at(&self, t: f64) -> SpectralState {
        let y = self.exact(t);
        let mut s = self.rate(t);
        s.add(&apply_a_spectral(self.domain, &y));
        s.add(&self_advection(self.domain, &y, self.law).unwrap());
        s
    }
}

/// The same for the high system `∂_t y + Ay + P∞B[ũ(t)]y = P∞S` with a frozen coefficient track.
pub struct HighManufactured<'a> {
    pub base: NonlinearManufactured<'a>,
    pub track: &'a CoefficientTrack,
}

impl Source for HighManufactured<'_> {
    fn at(&self, t: f64) -> SpectralState {
        let d = self.base.domain;
        let y = self.base.exact(t);
        let mut s = self.base.rate(t);
        s.add(&apply_a_spectral(d, &y));
        s.add(&apply_b_spectral(d, &self.track.lerp_at(t), &y));
        s
    }
}

/// Relative L² distance.
pub fn relative_error(d: &Domain, x: &SpectralState, reference: &SpectralState) -> f64 {
    let mut diff = x.clone();
    diff.sub(reference);
    d.state_l2(&diff) / d.state_l2(reference)
}

/// Relative deviations of the pseudo-spectral assembly from the convolution oracle.
#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyErrors {
    pub b: f64,
    pub f1: f64,
    pub finf: f64,
    pub recombination: f64,
}

impl AssemblyErrors {
    pub fn max(&self, other: &Self) -> Self {
        Self {
            b: self.b.max(other.b),
            f1: self.f1.max(other.f1),
            finf: self.finf.max(other.finf),
            recombination: self.recombination.max(other.recombination),
        }
    }
}

/// `B`, `F₁ = χ₁(G - B[u]u)`, `F∞ = χ∞(G - B[u]u₁)` and the recombination
/// `F₁ + F∞ - P∞B[u]u∞ = G - B[u]u` on an 8³ grid with random data.
pub fn assembly_errors(seed: u64, law: PressureLaw) -> AssemblyErrors {
    use edp_core::nonlinear::{assemble_f1, assemble_finfty, forcing_spectral, Coefficients};

    let d = domain(3, 8, 10.0 * PI);
    let grid = d.grid.clone();
    let freqs = frequencies(&grid);
    let active = |i: usize| freqs[i][..3].iter().all(|&m| m != -4);
    let u_tilde = random_hermitian(&d, seed, 0.3, |_| true);
    let u = random_hermitian(&d, seed + 100, 0.3, |_| true);
    let coef = Coefficients::from_spectral(&d, &u_tilde, law).unwrap();
    let oracle = convolution_b(&d, &u_tilde, &u, law);
    let b = max_diff(&apply_b_spectral(&d, &coef, &u), &oracle) / max_abs(&oracle);

    let phys = d.to_physical(&u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 200);
    let g: Vec<Vec<f64>> = (0..3).map(|_| (0..grid.len()).map(|_| rng.gen_range(-1e-2..1e-2)).collect()).collect();
    let g_hat: Vec<Vec<Complex64>> = g.iter().map(|f| naive_forward(&grid, f)).collect();
    let self_b = convolution_b(&d, &u, &u, law);
    let mut u1 = u.clone();
    for comp in u1.comps.iter_mut() {
        for (i, z) in comp.iter_mut().enumerate() {
            *z *= d.cutoffs.chi1[i];
        }
    }
    let low_b = convolution_b(&d, &u, &u1, law);
    let mut f1_oracle = SpectralState::zeros(3, grid.len());
    let mut finf_oracle = SpectralState::zeros(3, grid.len());
    for c in 0..=3 {
        for i in (0..grid.len()).filter(|&i| active(i)) {
            let gi = if c > 0 { g_hat[c - 1][i] } else { Complex64::default() };
            f1_oracle.comps[c][i] = d.cutoffs.chi1[i] * (gi - self_b.comps[c][i]);
            finf_oracle.comps[c][i] = d.cutoffs.chi_inf[i] * (gi - low_b.comps[c][i]);
        }
    }
    let f1 = d.to_spectral(&assemble_f1(&d, &phys, &g, law).unwrap()).unwrap();
    let finf = d.to_spectral(&assemble_finfty(&d, &phys, &g, law).unwrap()).unwrap();

    let coef_u = Coefficients::from_spectral(&d, &u, law).unwrap();
    let mut u_inf = u.clone();
    d.project_high_spectral(&mut u_inf);
    let mut high_b = apply_b_spectral(&d, &coef_u, &u_inf);
    d.project_high_spectral(&mut high_b);
    let mut lhs = f1.clone();
    lhs.add(&finf);
    lhs.sub(&high_b);
    let mut rhs = forcing_spectral(&d, &g);
    rhs.sub(&apply_b_spectral(&d, &coef_u, &u));
    for comp in rhs.comps.iter_mut() {
        for (i, z) in comp.iter_mut().enumerate() {
            if !active(i) {
                *z = Complex64::default();
            }
        }
    }
    AssemblyErrors {
        b,
        f1: max_diff(&f1, &f1_oracle) / max_abs(&f1_oracle),
        finf: max_diff(&finf, &finf_oracle) / max_abs(&finf_oracle),
        recombination: max_diff(&lhs, &rhs) / max_abs(&rhs),
    }
}
