// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Plain, Sobolev and spatially weighted norms.
//!
//! Weights use `w(x) = 1 + |x̃|` from [`Grid::weight_function`](crate::grid::Grid::weight_function).
//! On the torus these are surrogates of the whole-space norms: the supremum of a
//! weighted quantity is attained near `|x̃| ≈ L`.

use num_complex::Complex64;
use serde::Serialize;

use crate::domain::Domain;
use crate::state::{SpectralState, State};

/// Largest derivative order accepted by [`sobolev_norm`].
pub const MAX_SOBOLEV_ORDER: usize = 6;

/// All multi-indices `α ∈ N^dim` with `|α| <= k`, padded to three entries.
pub fn multi_indices(dim: usize, k: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a0 in 0..=k {
        for a1 in 0..=if dim > 1 { k - a0 } else { 0 } {
            for a2 in 0..=if dim > 2 { k - a0 - a1 } else { 0 } {
                out.push([a0, a1, a2]);
            }
        }
    }
    out
}

/// Coefficients of `∂^α f`.
pub fn derivative_coeffs(domain: &Domain, coeffs: &[Complex64], alpha: [usize; 3]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let xi = domain.grid.symbol_wavevector(i);
            let mut factor = Complex64::new(1.0, 0.0);
            for k in 0..3 {
                for _ in 0..alpha[k] {
                    factor *= Complex64::new(0.0, xi[k]);
                }
            }
            factor * z
        })
        .collect()
}

/// `(Σ_{|α|≤k} ‖∂^α f‖²_{L²})^{1/2}` with spectral derivatives.
pub fn sobolev_norm(domain: &Domain, field: &[f64], k: usize) -> f64 {
    assert!(k <= MAX_SOBOLEV_ORDER, "Sobolev order {k} exceeds {MAX_SOBOLEV_ORDER}");
    domain.hk_sq_spectral(&domain.forward(field), k).sqrt()
}

/// Result of [`weighted_norms`].
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WeightedNorms {
    /// `hkl[k][l] = ‖u‖_{H^k_l} = (Σ_{j≤l} |u|²_{H^k_j})^{1/2}`.
    pub hkl: Vec<Vec<f64>>,
    pub x1: f64,
    pub y1: f64,
}

/// Weighted Sobolev table for `k <= s`, `ℓ <= l_max`, plus the `X1(a)` and `Y1(v)` norms.
pub fn weighted_norms(domain: &Domain, u: &State, s: usize, l_max: usize) -> crate::Result<WeightedNorms> {
    let hat = domain.to_spectral(u)?;
    Ok(weighted_norms_spectral(domain, &hat, s, l_max))
}

pub fn weighted_norms_spectral(domain: &Domain, hat: &SpectralState, s: usize, l_max: usize) -> WeightedNorms {
    WeightedNorms {
        hkl: hkl_table(domain, &hat.comps, s, l_max),
        x1: x1_norm(domain, &hat.comps[0]),
        y1: y1_norm(domain, &hat.comps[1..]),
    }
}

/// `‖f‖_{H^k_ℓ}` of a list of components for every `k <= s`, `ℓ <= l_max`.
pub fn hkl_table(domain: &Domain, comps: &[Vec<Complex64>], s: usize, l_max: usize) -> Vec<Vec<f64>> {
    let grid = &domain.grid;
    let r2: Vec<f64> = (0..grid.len()).map(|i| grid.radius(i).powi(2)).collect();
    let dv = grid.cell_volume();
    // acc[order][j] = Σ_{|α|=order} ‖|x̃|^j ∂^α u‖².
    let mut acc = vec![vec![0.0; l_max + 1]; s + 1];
    let alphas = multi_indices(domain.dim(), s);
    for comp in comps {
        let spectra: Vec<Vec<Complex64>> = alphas.iter().map(|&a| derivative_coeffs(domain, comp, a)).collect();
        let refs: Vec<&[Complex64]> = spectra.iter().map(|c| c.as_slice()).collect();
        let fields = domain.backward_many(&refs);
        for (alpha, f) in alphas.iter().zip(&fields) {
            let order = alpha.iter().sum::<usize>();
            for (x, r) in f.iter().zip(&r2) {
                let mut weight = x * x * dv;
                for slot in acc[order].iter_mut() {
                    *slot += weight;
                    weight *= r;
                }
            }
        }
    }
    (0..=s)
        .map(|k| {
            (0..=l_max)
                .map(|l| (0..=k).map(|o| (0..=l).map(|j| acc[o][j]).sum::<f64>()).sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

fn sup_weighted(values: &[f64], weight: &[f64], power: f64) -> f64 {
    values.iter().zip(weight).fold(0.0, |m, (v, w)| m.max(w.powf(power) * v))
}

fn l2_weighted(domain: &Domain, values: &[f64], weight: &[f64], power: f64) -> f64 {
    let sum: f64 = values.iter().zip(weight).map(|(v, w)| (w.powf(power) * v).powi(2)).sum();
    (sum * domain.grid.cell_volume()).sqrt()
}

/// Pointwise Euclidean modulus of a list of fields.
pub(crate) fn pointwise_modulus(fields: &[Vec<f64>], len: usize) -> Vec<f64> {
    (0..len).map(|i| fields.iter().map(|f| f[i] * f[i]).sum::<f64>().sqrt()).collect()
}

/// Real fields of `∂_k f` for every axis.
fn gradient_fields(domain: &Domain, coeffs: &[Complex64]) -> Vec<Vec<f64>> {
    let spectra: Vec<Vec<Complex64>> = (0..domain.dim()).map(|k| domain.derivative(coeffs, k)).collect();
    let refs: Vec<&[Complex64]> = spectra.iter().map(|c| c.as_slice()).collect();
    domain.backward_many(&refs)
}

/// `X1(a) = Σ_{j=0,1} ‖w^{d-2+j} ∇^j a‖_∞ + Σ_{j=1,2} ‖w^{j-1} ∇^j a‖_{L²}`.
pub fn x1_norm(domain: &Domain, a_hat: &[Complex64]) -> f64 {
    let d = domain.dim();
    let len = domain.len();
    let w = domain.grid.weight_function();
    let a = domain.backward(a_hat);
    let grad = gradient_fields(domain, a_hat);
    let mut hess_spectra = Vec::new();
    for i in 0..d {
        for j in i..d {
            let mut alpha = [0usize; 3];
            alpha[i] += 1;
            alpha[j] += 1;
            hess_spectra.push((i != j, derivative_coeffs(domain, a_hat, alpha)));
        }
    }
    let refs: Vec<&[Complex64]> = hess_spectra.iter().map(|(_, c)| c.as_slice()).collect();
    let hess = domain.backward_many(&refs);
    let hess_mod: Vec<f64> = (0..len)
        .map(|p| {
            hess.iter()
                .zip(&hess_spectra)
                .map(|(f, (off, _))| if *off { 2.0 * f[p] * f[p] } else { f[p] * f[p] })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let grad_mod = pointwise_modulus(&grad, len);
    let abs_a: Vec<f64> = a.iter().map(|x| x.abs()).collect();
    sup_weighted(&abs_a, &w, d as f64 - 2.0)
        + sup_weighted(&grad_mod, &w, d as f64 - 1.0)
        + l2_weighted(domain, &grad_mod, &w, 0.0)
        + l2_weighted(domain, &hess_mod, &w, 1.0)
}

/// `Y1(v) = ‖w^{d-1} v‖_∞ + ‖v‖_{L²} + ‖w ∇v‖_{L²}`.
pub fn y1_norm(domain: &Domain, v_hat: &[Vec<Complex64>]) -> f64 {
    let d = domain.dim();
    let len = domain.len();
    let w = domain.grid.weight_function();
    let refs: Vec<&[Complex64]> = v_hat.iter().map(|c| c.as_slice()).collect();
    let v = domain.backward_many(&refs);
    let mut grads = Vec::new();
    for comp in v_hat {
        grads.extend(gradient_fields(domain, comp));
    }
    let v_mod = pointwise_modulus(&v, len);
    let grad_mod = pointwise_modulus(&grads, len);
    sup_weighted(&v_mod, &w, d as f64 - 1.0) + l2_weighted(domain, &v_mod, &w, 0.0) + l2_weighted(domain, &grad_mod, &w, 1.0)
}

/// Weighted sup norms of a periodic state,
/// `Σ_{j=0,1} ‖(1+|x|^{d-2+j}) ∇^j φ‖_∞ + ‖(1+|x|^{d-1}) v‖_∞`.
pub fn orbit_sup_norm(domain: &Domain, hat: &SpectralState) -> f64 {
    let d = domain.dim() as i32;
    let len = domain.len();
    let grid = &domain.grid;
    let a = domain.backward(&hat.comps[0]);
    let grad_a = gradient_fields(domain, &hat.comps[0]);
    let refs: Vec<&[Complex64]> = hat.comps[1..].iter().map(|c| c.as_slice()).collect();
    let v = domain.backward_many(&refs);
    let grad_mod = pointwise_modulus(&grad_a, len);
    let v_mod = pointwise_modulus(&v, len);
    let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..len {
        let r = grid.radius(i);
        // ∇φ = e^a ∇a.
        s0 = s0.max((1.0 + r.powi(d - 2)) * a[i].exp_m1().abs());
        s1 = s1.max((1.0 + r.powi(d - 1)) * a[i].exp() * grad_mod[i]);
        s2 = s2.max((1.0 + r.powi(d - 1)) * v_mod[i]);
    }
    s0 + s1 + s2
}
