// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pseudo-spectral assembly of `B[ũ]u`, `A u`, `F₁`, `F∞` and the full right-hand side.
//!
//! Products are formed pointwise from 2/3-rule dealiased factors and the product
//! is dealiased again, so on band-limited inputs they equal the exact Fourier
//! convolution truncated to `|m_i| <= n/3`.

use num_complex::Complex64;

use crate::domain::Domain;
use crate::error::Result;
use crate::pressure::{g3_eval, PressureLaw};
use crate::state::{ScalarField, SpectralState, State, VectorField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Dealiased coefficient fields of `B[ũ]`: the velocity `ṽ` and `g₃(φ̃)`.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub v: VectorField,
    pub g3: ScalarField,
}

impl Coefficients {
    pub fn zeros(dim: usize, len: usize) -> Self {
        Self { v: vec![vec![0.0; len]; dim], g3: vec![0.0; len] }
    }

    pub fn from_spectral(domain: &Domain, u_tilde: &SpectralState, law: PressureLaw) -> Result<Self> {
        let a = domain.backward(&u_tilde.comps[0]);
        let phi: Vec<f64> = a.iter().map(|x| x.exp_m1()).collect();
        let mut g3_hat = domain.forward(&g3_eval(&phi, law)?);
        domain.dealias_field(&mut g3_hat);
        let mut v_hat = u_tilde.comps[1..].to_vec();
        v_hat.iter_mut().for_each(|c| domain.dealias_field(c));
        let mut spectra: Vec<&[Complex64]> = v_hat.iter().map(|c| c.as_slice()).collect();
        spectra.push(&g3_hat);
        let mut fields = domain.backward_many(&spectra);
        let g3 = fields.pop().unwrap();
        Ok(Self { v: fields, g3 })
    }

    /// `(1 - θ) self + θ other`.
    pub fn lerp(&self, other: &Self, theta: f64) -> Self {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a + theta * (b - a)).collect::<Vec<_>>();
        Self { v: self.v.iter().zip(&other.v).map(|(x, y)| mix(x, y)).collect(), g3: mix(&self.g3, &other.g3) }
    }

    /// `‖ṽ‖_∞ + ‖g₃‖_∞`, the speed entering the CFL bound.
    pub fn speed(&self) -> f64 {
        let len = self.g3.len();
        let v = (0..len).map(|i| self.v.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).fold(0.0, f64::max);
        v + self.g3.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.g3.iter().chain(self.v.iter().flatten()).all(|&x| x == 0.0)
    }
}

/// `B[ũ]u = (ṽ·∇a; ṽ·∇v + g₃(φ̃)∇a)` in spectral space; the output is dealiased.
pub fn apply_b_spectral(domain: &Domain, coef: &Coefficients, u: &SpectralState) -> SpectralState {
    let dim = domain.dim();
    let len = domain.len();
    let mut ud = u.clone();
    domain.dealias(&mut ud);
    // Gradients of every component: grads[c * dim + k] = ∂_k u_c.
    let spectra: Vec<Vec<Complex64>> =
        (0..=dim).flat_map(|c| (0..dim).map(move |k| (c, k))).map(|(c, k)| domain.derivative(&ud.comps[c], k)).collect();
    let refs: Vec<&[Complex64]> = spectra.iter().map(|c| c.as_slice()).collect();
    let grads = domain.backward_many(&refs);
    let mut out = vec![vec![0.0; len]; dim + 1];
    for c in 0..=dim {
        let target = &mut out[c];
        for k in 0..dim {
            let g = &grads[c * dim + k];
            target.iter_mut().zip(&coef.v[k]).zip(g).for_each(|((o, v), d)| *o += v * d);
        }
        if c > 0 {
            let g = &grads[c - 1];
            target.iter_mut().zip(&coef.g3).zip(g).for_each(|((o, w), d)| *o += w * d);
        }
    }
    let refs: Vec<&[f64]> = out.iter().map(|c| c.as_slice()).collect();
    let mut hat = SpectralState { comps: domain.forward_many(&refs) };
    domain.dealias(&mut hat);
    hat
}

/// `B[ũ]u` on physical states.
pub fn apply_b(domain: &Domain, u_tilde: &State, u: &State, law: PressureLaw) -> Result<State> {
    let coef = Coefficients::from_spectral(domain, &domain.to_spectral(u_tilde)?, law)?;
    Ok(domain.to_physical(&apply_b_spectral(domain, &coef, &domain.to_spectral(u)?)))
}

/// `B[u]u`.
pub fn self_advection(domain: &Domain, u: &SpectralState, law: PressureLaw) -> Result<SpectralState> {
    let coef = Coefficients::from_spectral(domain, u, law)?;
    Ok(apply_b_spectral(domain, &coef, u))
}

/// `Â û = (iξ·v̂; iξâ + v̂)` per mode; Nyquist slots map to zero.
pub fn apply_a_spectral(domain: &Domain, u: &SpectralState) -> SpectralState {
    let dim = domain.dim();
    let mut out = SpectralState::zeros(dim, domain.len());
    for i in 0..domain.len() {
        if !domain.grid.is_active(i) {
            continue;
        }
        let xi = domain.grid.symbol_wavevector(i);
        let a = u.comps[0][i];
        let mut div = Complex64::default();
        for k in 0..dim {
            let v = u.comps[k + 1][i];
            div += I * xi[k] * v;
            out.comps[k + 1][i] = I * xi[k] * a + v;
        }
        out.comps[0][i] = div;
    }
    out
}

/// `Ĝ(g) = (0; ĝ)`.
pub fn forcing_spectral(domain: &Domain, g: &[Vec<f64>]) -> SpectralState {
    let mut out = SpectralState::zeros(domain.dim(), domain.len());
    let refs: Vec<&[f64]> = g.iter().map(|c| c.as_slice()).collect();
    for (k, coeffs) in domain.forward_many(&refs).into_iter().enumerate() {
        out.comps[k + 1] = coeffs;
    }
    out
}

/// `F₁(u, g) = P₁[-B[u]u + G(g)]`.
pub fn assemble_f1(domain: &Domain, u: &State, g_at_t: &[Vec<f64>], law: PressureLaw) -> Result<State> {
    let hat = domain.to_spectral(u)?;
    let mut f = forcing_spectral(domain, g_at_t);
    f.sub(&self_advection(domain, &hat, law)?);
    domain.project_low_spectral(&mut f);
    domain.band_limit(&mut f);
    Ok(domain.to_physical(&f))
}

/// `F∞(u, g) = P∞[-B[u]u₁ + G(g)]` with `u₁ = P₁u`.
pub fn assemble_finfty(domain: &Domain, u: &State, g_at_t: &[Vec<f64>], law: PressureLaw) -> Result<State> {
    let hat = domain.to_spectral(u)?;
    let coef = Coefficients::from_spectral(domain, &hat, law)?;
    let mut low = hat;
    domain.project_low_spectral(&mut low);
    let mut f = forcing_spectral(domain, g_at_t);
    f.sub(&apply_b_spectral(domain, &coef, &low));
    domain.project_high_spectral(&mut f);
    domain.band_limit(&mut f);
    Ok(domain.to_physical(&f))
}

/// `-Au - B[u]u + G(g)` with `Au = (div v; ∇a + v)`.
pub fn full_rhs(domain: &Domain, u: &State, g_at_t: &[Vec<f64>], law: PressureLaw) -> Result<State> {
    let hat = domain.to_spectral(u)?;
    let mut f = forcing_spectral(domain, g_at_t);
    f.sub(&apply_a_spectral(domain, &hat));
    f.sub(&self_advection(domain, &hat, law)?);
    domain.band_limit(&mut f);
    Ok(domain.to_physical(&f))
}
