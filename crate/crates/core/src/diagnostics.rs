// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Measurements: the forcing norm `[g]_s`, energy and dissipation functionals,
//! exponential and power-law decay fits, and the perturbation experiment around a
//! periodic orbit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::forcing::{ForcingSpec, ForcingSpectrum};
use crate::integrators::{CoefficientTrack, HighStepper, HighSystem, NonlinearStepper};
use crate::kernels::{kernel_field, KernelSelector};
use crate::norms::{derivative_coeffs, hkl_table, multi_indices, pointwise_modulus};
use crate::periodic::PeriodicOrbit;
use crate::pressure::{g3_eval, PressureLaw};
use crate::state::SpectralState;

/// Components of the `[g]_s` surrogate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GBracket {
    /// `max_t (‖g‖_{L¹} + ‖(1+|x|)^d g‖_∞)`.
    pub sup_part: f64,
    /// `(∫₀^T ‖g‖²_{H^{s-1}_{d-1}} dt)^{1/2}`.
    pub l2_part: f64,
    /// `max_t ‖g‖_{L¹}`.
    pub l1_max: f64,
    pub total: f64,
}

/// `[g]_s` sampled at `nodes` uniform times with the periodic trapezoidal rule.
///
/// The weighted Sobolev part uses the Gram matrix of the separable terms, so only
/// the time profiles are evaluated per node.
pub fn g_bracket_norm(domain: &Domain, g: &ForcingSpec, s: usize, nodes: usize) -> GBracket {
    if g.is_zero() {
        return GBracket::default();
    }
    let grid = &domain.grid;
    let dim = grid.dim;
    let k = s.saturating_sub(1);
    let l = dim.saturating_sub(1);
    let spectrum = ForcingSpectrum::new(domain, g);
    let norm_sq = |hat: &SpectralState| hkl_table(domain, &hat.comps[1..], k, l)[k][l].powi(2);
    let terms = &spectrum.terms;
    let mut gram = vec![vec![0.0; terms.len()]; terms.len()];
    for a in 0..terms.len() {
        gram[a][a] = norm_sq(&terms[a].0);
        for b in 0..a {
            let mut plus = terms[a].0.clone();
            plus.add(&terms[b].0);
            let mut minus = terms[a].0.clone();
            minus.sub(&terms[b].0);
            gram[a][b] = 0.25 * (norm_sq(&plus) - norm_sq(&minus));
            gram[b][a] = gram[a][b];
        }
    }
    let weight: Vec<f64> = (0..grid.len()).map(|i| (1.0 + grid.radius(i)).powi(dim as i32)).collect();
    let h = g.period / nodes as f64;
    let per_node: Vec<(f64, f64, f64)> = (0..nodes)
        .into_par_iter()
        .map(|m| {
            let t = m as f64 * h;
            let field = g.eval(grid, t);
            let modulus = pointwise_modulus(&field, grid.len());
            let l1 = modulus.iter().sum::<f64>() * grid.cell_volume();
            let sup = modulus.iter().zip(&weight).fold(0.0f64, |acc, (x, w)| acc.max(x * w));
            let p: Vec<f64> = terms.iter().map(|(_, profile)| profile.value(t, g.period)).collect();
            let q: f64 = (0..p.len()).flat_map(|a| (0..p.len()).map(move |b| (a, b))).map(|(a, b)| p[a] * gram[a][b] * p[b]).sum();
            (l1, l1 + sup, q)
        })
        .collect();
    let l1_max = per_node.iter().map(|x| x.0).fold(0.0, f64::max);
    let sup_part = per_node.iter().map(|x| x.1).fold(0.0, f64::max);
    let l2_part = (h * per_node.iter().map(|x| x.2).sum::<f64>()).max(0.0).sqrt();
    GBracket { sup_part, l2_part, l1_max, total: sup_part + l2_part }
}

/// `(E, D)` of a high-frequency state with weight `|x̃|^ℓ`:
/// `E = Σ_{|α|≤k} ‖|x|^ℓ∂^α(a, v)‖² + ½ Σ_{|α|≤k} ∫ g₃(φ̃) ||x|^ℓ ∂^α a|²`,
/// `D = Σ_i Σ_{|β|≤k-1} ‖|x|^ℓ ∂^β ∂_i a‖² + Σ_{|α|≤k} ‖|x|^ℓ ∂^α v‖²`.
pub fn energy_functionals(
    domain: &Domain,
    u: &SpectralState,
    phi_tilde: &[f64],
    k: usize,
    l: usize,
    law: PressureLaw,
) -> Result<(f64, f64)> {
    let grid = &domain.grid;
    let dim = domain.dim();
    let dv = grid.cell_volume();
    let weight: Vec<f64> = (0..grid.len()).map(|i| grid.radius(i).powi(2 * l as i32)).collect();
    let g3 = g3_eval(phi_tilde, law)?;
    let alphas = multi_indices(dim, k);
    let fields = |coeffs: &[Complex64]| {
        let spectra: Vec<Vec<Complex64>> = alphas.iter().map(|&a| derivative_coeffs(domain, coeffs, a)).collect();
        let refs: Vec<&[Complex64]> = spectra.iter().map(|c| c.as_slice()).collect();
        domain.backward_many(&refs)
    };
    let weighted = |f: &[f64], extra: Option<&[f64]>| -> f64 {
        match extra {
            Some(c) => f.iter().zip(&weight).zip(c).map(|((x, w), c)| c * w * x * x).sum::<f64>() * dv,
            None => f.iter().zip(&weight).map(|(x, w)| w * x * x).sum::<f64>() * dv,
        }
    };
    let a_fields = fields(&u.comps[0]);
    let mut energy = 0.0;
    let mut dissipation = 0.0;
    for (alpha, f) in alphas.iter().zip(&a_fields) {
        energy += weighted(f, None) + 0.5 * weighted(f, Some(&g3));
        // Each α with |α| >= 1 appears once per axis i with α_i >= 1 in Σ_i Σ_β ∂^β ∂_i.
        let multiplicity = alpha[..dim].iter().filter(|&&x| x > 0).count();
        if multiplicity > 0 {
            dissipation += multiplicity as f64 * weighted(f, None);
        }
    }
    for comp in &u.comps[1..] {
        let v = fields(comp).iter().map(|f| weighted(f, None)).sum::<f64>();
        energy += v;
        dissipation += v;
    }
    Ok((energy, dissipation))
}

/// Least-squares line through `(x, y)` samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub abscissa: Vec<f64>,
    pub ordinate: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// Root-mean-square deviation of the fitted line in log space.
    pub residual: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

/// Slope of `log(value)` against `t` over samples with `t` in `window`.
pub fn decay_rate_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (index, &(t, value)) in series.iter().enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(value > 0.0) {
            return Err(Error::NonPositive { index, value });
        }
        xs.push(t);
        ys.push(value.ln());
    }
    if xs.len() < 2 {
        return Err(Error::Validation(format!("fit window {window:?} holds fewer than two samples")));
    }
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Ok(DecayFit { abscissa: xs, ordinate: ys, slope, intercept, window, residual })
}

/// Power-law fit of a field: 64 logarithmic radial bins on `[r_lo, r_hi]`, bin value
/// `max |f|`, slope of `log max|f|` against `log r` at the geometric bin centres.
pub fn radial_decay_fit(domain: &Domain, field: &[f64], r_lo: f64, r_hi: f64) -> DecayFit {
    const BINS: usize = 64;
    let (lo, hi) = (r_lo.ln(), r_hi.ln());
    let width = (hi - lo) / BINS as f64;
    let mut best = [0.0f64; BINS];
    for (i, x) in field.iter().enumerate() {
        let r = domain.grid.radius(i);
        if r < r_lo || r > r_hi {
            continue;
        }
        let b = (((r.ln() - lo) / width) as usize).min(BINS - 1);
        best[b] = best[b].max(x.abs());
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (b, &v) in best.iter().enumerate() {
        if v > 0.0 {
            xs.push(lo + (b as f64 + 0.5) * width);
            ys.push(v.ln());
        }
    }
    let (slope, intercept, residual) = if xs.len() >= 2 { least_squares(&xs, &ys) } else { (0.0, 0.0, 0.0) };
    DecayFit { abscissa: xs, ordinate: ys, slope, intercept, window: (r_lo, r_hi), residual }
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelFit {
    pub label: String,
    pub selector: KernelSelector,
    pub fit: DecayFit,
}

/// Radial decay fits of kernel entries on `|x̃| ∈ [5, L/2]`.
pub fn kernel_decay_report(domain: &Domain, period: f64, selectors: &[KernelSelector]) -> Vec<KernelFit> {
    let r_hi = 0.5 * domain.grid.half_length;
    selectors
        .iter()
        .map(|sel| KernelFit {
            label: sel.label(),
            selector: *sel,
            fit: radial_decay_fit(domain, &kernel_field(domain, period, sel), 5.0, r_hi),
        })
        .collect()
}

/// Random real state on the active slots where `keep` holds, scaled to unit `H^s` norm.
pub fn random_state(domain: &Domain, seed: u64, s: usize, keep: impl Fn(usize) -> bool) -> SpectralState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hat = SpectralState::zeros(domain.dim(), domain.len());
    for c in 0..=domain.dim() {
        for i in 0..domain.len() {
            if domain.grid.is_active(i) && keep(i) {
                hat.comps[c][i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let src = hat.comps[c].clone();
        for i in 0..domain.len() {
            hat.comps[c][i] = 0.5 * (src[i] + src[domain.negate(i)].conj());
        }
    }
    let norm = domain.state_hk(&hat, s);
    if norm > 0.0 {
        hat.scale(1.0 / norm);
    }
    hat
}

/// Random state supported where `χ∞ > 0`, unit `H^s` norm.
pub fn random_high_state(domain: &Domain, seed: u64, s: usize) -> SpectralState {
    random_state(domain, seed, s, |i| domain.cutoffs.chi_inf[i] > 0.0)
}

/// Exponential rate of `‖u∞(t)‖²_{H^s}` under the unforced high system with frozen
/// coefficients, fitted over `[0, periods·T]`.
pub fn high_frequency_decay(
    domain: &Domain,
    coefficients: Option<&CoefficientTrack>,
    u0: &SpectralState,
    period: f64,
    steps: usize,
    periods: usize,
    s: usize,
) -> Result<DecayFit> {
    let system = HighSystem { coefficients, ..Default::default() };
    let dt = period / steps as f64;
    let stepper = HighStepper::new(domain, system, dt);
    let mut y = u0.clone();
    let mut series = vec![(0.0, domain.state_hk(&y, s).powi(2))];
    for m in 0..steps * periods {
        stepper.step(&mut y, m as f64 * dt)?;
        series.push(((m + 1) as f64 * dt, domain.state_hk(&y, s).powi(2)));
    }
    decay_rate_fit(&series, (0.0, period * periods as f64))
}

/// Mass-neutral velocity pulse `A e^{-|x|²/(2w²)} e₁` with `w` two grid spacings, band-limited.
pub fn default_perturbation(domain: &Domain, amplitude: f64) -> SpectralState {
    let grid = &domain.grid;
    let width = 2.0 * grid.spacing();
    let pulse: Vec<f64> =
        (0..grid.len()).map(|i| amplitude * (-grid.radius(i).powi(2) / (2.0 * width * width)).exp()).collect();
    let mut hat = SpectralState::zeros(domain.dim(), domain.len());
    hat.comps[1] = domain.forward(&pulse);
    domain.band_limit(&mut hat);
    hat
}

/// Time series of the perturbation experiment.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    pub psi_l2: Vec<f64>,
    pub w_l2: Vec<f64>,
    pub psi_hs: Vec<f64>,
    pub w_hs: Vec<f64>,
    pub psi_linf: Vec<f64>,
    pub w_linf: Vec<f64>,
    /// `∫₀^t (‖∇ψ‖²_{H^{s-1}} + ‖w‖²_{H^s})`, trapezoidal.
    pub dissipation: Vec<f64>,
    /// `(‖(ψ, w)‖²_{H^s} + dissipation) / ‖(ψ₀, w₀)‖²_{H^s}`.
    pub energy_ratio: Vec<f64>,
    /// Least-squares slope of `energy_ratio` per period.
    pub energy_ratio_slope: f64,
    /// `max(‖ψ‖_∞, ‖w‖_∞)` at the horizon over its initial value.
    pub linf_ratio: f64,
    /// Slope of `log max(‖ψ‖_∞, ‖w‖_∞)` per unit time.
    pub linf_trend: f64,
    /// `max_t ‖(ψ, w)‖_{L²}` over the orbit's `max_t ‖u‖_{L²}`.
    pub max_relative_deviation: f64,
    pub decaying: bool,
}

struct Sample {
    psi_l2: f64,
    w_l2: f64,
    psi_hs: f64,
    w_hs: f64,
    psi_linf: f64,
    w_linf: f64,
    dissipation_rate: f64,
}

fn sample(domain: &Domain, diff: &SpectralState, s: usize) -> Sample {
    let dim = domain.dim();
    let psi = &diff.comps[0];
    let w_l2 = diff.comps[1..].iter().map(|c| domain.l2_sq_spectral(c)).sum::<f64>().sqrt();
    let w_hs_sq = diff.comps[1..].iter().map(|c| domain.hk_sq_spectral(c, s)).sum::<f64>();
    let grad_sq: f64 = (0..dim).map(|k| domain.hk_sq_spectral(&domain.derivative(psi, k), s.saturating_sub(1))).sum();
    let refs: Vec<&[Complex64]> = diff.comps.iter().map(|c| c.as_slice()).collect();
    let fields = domain.backward_many(&refs);
    let psi_linf = fields[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let w_linf = pointwise_modulus(&fields[1..], domain.len()).into_iter().fold(0.0, f64::max);
    Sample {
        psi_l2: domain.l2_sq_spectral(psi).sqrt(),
        w_l2,
        psi_hs: domain.hk_sq_spectral(psi, s).sqrt(),
        w_hs: w_hs_sq.sqrt(),
        psi_linf,
        w_linf,
        dissipation_rate: grad_sq + w_hs_sq,
    }
}

/// Evolves `u_per(0) + perturbation` with the full nonlinear stepper for `periods`
/// periods and compares against the stored orbit, extended periodically.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    domain: &Domain,
    orbit: &PeriodicOrbit,
    perturbation: &SpectralState,
    periods: usize,
    forcing: Option<&ForcingSpectrum>,
    law: PressureLaw,
    s: usize,
    delta0: f64,
) -> Result<StabilityReport> {
    let size0 = domain.state_hk(perturbation, s);
    if size0 > delta0 {
        return Err(Error::Validation(format!("perturbation H^s norm {size0:.3e} exceeds delta0 = {delta0:.3e}")));
    }
    let steps = orbit.steps();
    let period = orbit.period();
    let dt = period / steps as f64;
    let stepper = NonlinearStepper::new(domain, law, forcing, None, dt);
    let mut u = orbit.trajectory.nodes[0].clone();
    u.add(perturbation);
    let mut report = StabilityReport::default();
    let mut first: Option<Sample> = None;
    let mut integral = 0.0;
    let mut last_rate = 0.0;
    let mut max_dev = 0.0f64;
    for m in 0..=steps * periods {
        if m > 0 {
            stepper.step(&mut u, (m - 1) as f64 * dt)?;
        }
        let mut diff = u.clone();
        diff.sub(&orbit.trajectory.nodes[m % steps]);
        let smp = sample(domain, &diff, s);
        if m > 0 {
            integral += 0.5 * dt * (last_rate + smp.dissipation_rate);
        }
        last_rate = smp.dissipation_rate;
        if let Some(f) = &first {
            let blown = [(smp.psi_l2 + smp.w_l2, f.psi_l2 + f.w_l2), (smp.psi_linf.max(smp.w_linf), f.psi_linf.max(f.w_linf))]
                .iter()
                .any(|&(now, start)| start > 0.0 && now > 1e3 * start);
            if blown || !smp.psi_l2.is_finite() {
                return Err(Error::BlowUp(format!("perturbation grew past 1e3 times its initial size at t = {:.3}", m as f64 * dt)));
            }
        }
        let hs_sq = smp.psi_hs.powi(2) + smp.w_hs.powi(2);
        report.times.push(m as f64 * dt);
        report.psi_l2.push(smp.psi_l2);
        report.w_l2.push(smp.w_l2);
        report.psi_hs.push(smp.psi_hs);
        report.w_hs.push(smp.w_hs);
        report.psi_linf.push(smp.psi_linf);
        report.w_linf.push(smp.w_linf);
        report.dissipation.push(integral);
        report.energy_ratio.push(if size0 > 0.0 { (hs_sq + integral) / (size0 * size0) } else { 0.0 });
        max_dev = max_dev.max(smp.psi_l2.hypot(smp.w_l2));
        if first.is_none() {
            first = Some(smp);
        }
    }
    let linf: Vec<f64> = report.psi_linf.iter().zip(&report.w_linf).map(|(a, b)| a.max(*b)).collect();
    let start = linf[0];
    let end = *linf.last().unwrap();
    report.linf_ratio = if start > 0.0 { end / start } else { 0.0 };
    let positive: Vec<(f64, f64)> = report.times.iter().copied().zip(linf.iter().copied()).filter(|x| x.1 > 0.0).collect();
    report.linf_trend = if positive.len() >= 2 {
        let t_end = positive.last().unwrap().0;
        decay_rate_fit(&positive, (0.0, t_end))?.slope
    } else {
        0.0
    };
    let per_period: Vec<f64> = report.times.iter().map(|t| t / period).collect();
    report.energy_ratio_slope = least_squares(&per_period, &report.energy_ratio).0;
    report.max_relative_deviation = if orbit.norms.l2 > 0.0 { max_dev / orbit.norms.l2 } else { max_dev };
    report.decaying = start > 0.0 && report.linf_ratio <= 0.2 && report.linf_trend < 0.0;
    Ok(report)
}
