// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time-periodic solutions.
//!
//! The orbit is split as `u = u₁ + u∞`. The low part solves a constant-coefficient
//! system, so its periodic initial value comes from the per-mode resolvent
//! `(I - e^{-TÂ})^{-1}`. The high part carries the frozen coefficients of the
//! previous iterate, and its periodic initial value is the fixed point of the forced
//! time-`T` map. The outer iteration refreshes both forcings from the last iterate.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::g_bracket_norm;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::forcing::{ForcingSpec, ForcingSpectrum};
use crate::integrators::{mode_calculus, CoefficientTrack, HighStepper, HighSystem, Source, Trajectory};
use crate::modes::ModeMatrix;
use crate::nonlinear::{apply_a_spectral, apply_b_spectral, self_advection, Coefficients};
use crate::norms::{orbit_sup_norm, x1_norm, y1_norm};
use crate::pressure::PressureLaw;
use crate::state::SpectralState;

type Mode = [Complex64; 4];
const ZERO_MODE: Mode = [Complex64 { re: 0.0, im: 0.0 }; 4];

/// How `(I - S∞(T))^{-1}` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NeumannMode {
    /// `x ← x + R(Φ(x) - x)` with `R` the constant-coefficient resolvent.
    Preconditioned,
    /// `x ← Φ(x)`, the plain geometric series.
    Plain,
}

impl NeumannMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Preconditioned => "preconditioned",
            Self::Plain => "plain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSettings {
    pub steps: usize,
    pub s: usize,
    pub tol_outer: f64,
    pub tol_neumann: f64,
    pub max_outer: usize,
    pub max_monodromy_iters: usize,
    pub neumann: NeumannMode,
    pub delta: f64,
}

impl Default for PeriodicSettings {
    fn default() -> Self {
        Self {
            steps: 128,
            s: 3,
            tol_outer: 1e-8,
            tol_neumann: 1e-9,
            max_outer: 50,
            max_monodromy_iters: 200,
            neumann: NeumannMode::Preconditioned,
            delta: 50.0,
        }
    }
}

/// Active slots where `χ₁ > 0`.
pub fn low_band(domain: &Domain) -> Vec<usize> {
    (0..domain.len()).filter(|&i| domain.grid.is_active(i) && domain.cutoffs.chi1[i] > 0.0).collect()
}

/// A trajectory restricted to the slots of [`low_band`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandTrajectory {
    pub period: f64,
    pub indices: Vec<usize>,
    pub nodes: Vec<Vec<Mode>>,
}

impl BandTrajectory {
    pub fn zeros(indices: Vec<usize>, period: f64, steps: usize) -> Self {
        let nodes = vec![vec![ZERO_MODE; indices.len()]; steps + 1];
        Self { period, indices, nodes }
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.period / self.steps() as f64
    }

    pub fn scatter(&self, m: usize, dim: usize, len: usize) -> SpectralState {
        scatter(&self.indices, &self.nodes[m], dim, len)
    }

    pub fn from_trajectory(indices: Vec<usize>, traj: &Trajectory) -> Self {
        let nodes = traj.nodes.iter().map(|u| gather(&indices, u)).collect();
        Self { period: traj.period, indices, nodes }
    }

    pub fn to_trajectory(&self, dim: usize, len: usize) -> Trajectory {
        Trajectory { period: self.period, nodes: (0..=self.steps()).map(|m| self.scatter(m, dim, len)).collect() }
    }
}

fn scatter(indices: &[usize], values: &[Mode], dim: usize, len: usize) -> SpectralState {
    let mut out = SpectralState::zeros(dim, len);
    for (&i, v) in indices.iter().zip(values) {
        out.set_mode(i, v);
    }
    out
}

fn gather(indices: &[usize], u: &SpectralState) -> Vec<Mode> {
    indices.iter().map(|&i| u.mode(i)).collect()
}

fn mode_axpy(y: &mut Mode, c: Complex64, x: &Mode) {
    for k in 0..4 {
        y[k] += c * x[k];
    }
}

/// Per-mode periodic solve of `∂_t u + Au = F` on the low band, with `F` the sum of a
/// nodal part (linear in time between nodes) and the separable forcing `χ₁G(g)`.
fn solve_low(
    domain: &Domain,
    indices: &[usize],
    period: f64,
    steps: usize,
    nodal: Option<&[Vec<Mode>]>,
    forcing: Option<&ForcingSpectrum>,
) -> Result<BandTrajectory> {
    let h = period / steps as f64;
    let origin = domain.grid.index_of([0, 0, 0]);
    if let (Some(f), Some(j)) = (nodal, indices.iter().position(|&i| i == origin)) {
        let integral: f64 = (0..steps).map(|m| 0.5 * h * (f[m][j][0] + f[m + 1][j][0]).re).sum();
        let scale = f.iter().flatten().flat_map(|m| m.iter()).fold(0.0f64, |a, z| a.max(z.norm())) * period;
        if integral.abs() > 1e-10 * scale + 1e-300 {
            return Err(Error::Compatibility(integral.abs()));
        }
    }
    let exponentials: Vec<(Complex64, Complex64, &SpectralState)> = forcing
        .map(|f| {
            f.terms
                .iter()
                .flat_map(|(hat, profile)| profile.exponentials(f.period).into_iter().map(move |(c, mu)| (c, mu, hat)))
                .collect()
        })
        .unwrap_or_default();
    let columns: Vec<Vec<Mode>> = indices
        .par_iter()
        .enumerate()
        .map(|(j, &idx)| {
            let calc = mode_calculus(domain, idx);
            let flow = calc.propagator(h);
            let (w0, w1) = calc.linear_weights(h);
            let chi = domain.cutoffs.chi1[idx];
            let analytic: Vec<(Complex64, Complex64, Mode)> = exponentials
                .iter()
                .map(|(c, mu, hat)| {
                    let mut coeff = hat.mode(idx);
                    coeff.iter_mut().for_each(|z| *z *= chi);
                    (*c, *mu, calc.exp_integral(h, *mu).apply(&coeff))
                })
                .collect();
            let drive = |m: usize| {
                let mut out = ZERO_MODE;
                if let Some(f) = nodal {
                    out = w0.apply(&f[m][j]);
                    mode_axpy(&mut out, Complex64::new(1.0, 0.0), &w1.apply(&f[m + 1][j]));
                }
                for (c, mu, q) in &analytic {
                    mode_axpy(&mut out, c * (mu * (m as f64 * h)).exp(), q);
                }
                out
            };
            let run = |y0: Mode| {
                let mut out = Vec::with_capacity(steps + 1);
                let mut y = y0;
                out.push(y);
                for m in 0..steps {
                    y = flow.apply(&y);
                    mode_axpy(&mut y, Complex64::new(1.0, 0.0), &drive(m));
                    out.push(y);
                }
                out
            };
            let end = run(ZERO_MODE)[steps];
            run(calc.resolvent(period).apply(&end))
        })
        .collect();
    let nodes = (0..=steps).map(|m| columns.iter().map(|c| c[m]).collect()).collect();
    Ok(BandTrajectory { period, indices: indices.to_vec(), nodes })
}

/// Periodic solution of `∂_t u₁ + Au₁ = F₁` for nodal `F₁`, restricted to the low band.
///
/// The `ξ = 0` density forcing must have zero time integral; the density mean of the
/// result is fixed to zero.
pub fn periodic_from_forcing_low(domain: &Domain, f1: &Trajectory) -> Result<Trajectory> {
    let indices = low_band(domain);
    let band = BandTrajectory::from_trajectory(indices.clone(), f1);
    let out = solve_low(domain, &indices, f1.period, f1.steps(), Some(&band.nodes), None)?;
    Ok(out.to_trajectory(domain.dim(), domain.len()))
}

/// `S∞,ũ(T) u₀∞`: one unforced period of the high system.
pub fn monodromy_apply(
    domain: &Domain,
    u0: &SpectralState,
    coefficients: Option<&CoefficientTrack>,
    period: f64,
    steps: usize,
) -> Result<SpectralState> {
    let system = HighSystem { coefficients, ..Default::default() };
    HighStepper::new(domain, system, period / steps as f64).integrate_end(u0, steps)
}

/// Result of [`periodic_init_high`].
#[derive(Debug, Clone)]
pub struct HighSolve {
    pub initial: SpectralState,
    pub trajectory: Trajectory,
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
    pub converged: bool,
}

/// Periodic initial value of the forced high system, as the fixed point of its time-`T` map.
pub fn periodic_init_high(
    domain: &Domain,
    system: HighSystem<'_>,
    period: f64,
    settings: &PeriodicSettings,
    warm: Option<&SpectralState>,
) -> Result<HighSolve> {
    let steps = settings.steps;
    let stepper = HighStepper::new(domain, system, period / steps as f64);
    let resolvents: Vec<Option<ModeMatrix>> = (0..domain.len())
        .map(|i| {
            (domain.grid.is_active(i) && domain.cutoffs.chi_inf[i] > 0.0)
                .then(|| mode_calculus(domain, i).resolvent(period))
        })
        .collect();
    let mut x = match warm {
        Some(w) => w.clone(),
        None => SpectralState::zeros(domain.dim(), domain.len()),
    };
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    let mut streak = 0;
    for _ in 0..settings.max_monodromy_iters.max(1) {
        let trajectory = stepper.integrate(&x, steps)?;
        let mut delta = trajectory.nodes[steps].clone();
        delta.sub(&x);
        if settings.neumann == NeumannMode::Preconditioned {
            for (i, r) in resolvents.iter().enumerate() {
                let y = r.as_ref().map_or(ZERO_MODE, |r| r.apply(&delta.mode(i)));
                delta.set_mode(i, &y);
            }
        }
        let inc = domain.state_hk(&delta, settings.s);
        if let Some(&last) = increments.last() {
            let ratio = if last > 0.0 { inc / last } else { 0.0 };
            ratios.push(ratio);
            streak = if ratio >= 1.0 { streak + 1 } else { 0 };
        }
        increments.push(inc);
        let mut next = x.clone();
        next.add(&delta);
        if inc <= settings.tol_neumann * domain.state_hk(&next, settings.s) {
            return Ok(HighSolve { initial: x, trajectory, increments, ratios, converged: true });
        }
        if streak >= 3 {
            return Err(Error::NonContraction { ratios });
        }
        if increments.len() == settings.max_monodromy_iters.max(1) {
            return Ok(HighSolve { initial: x, trajectory, increments, ratios, converged: false });
        }
        x = next;
    }
    unreachable!("the loop returns on its last iteration")
}

/// One outer iteration of [`iterate_periodic`].
#[derive(Debug, Clone, Serialize)]
pub struct OuterRecord {
    pub iteration: usize,
    pub increment_l2: f64,
    pub increment_hs: f64,
    /// Max over nodes of `‖δu∞‖_{H^s} + X1(δa₁) + Y1(δv₁) + ‖∂_t δφ‖_{L²}`.
    pub increment_xs: f64,
    pub ratio: f64,
    pub mass_defect: f64,
    pub neumann_iterations: usize,
    pub neumann_last_increment: f64,
    pub neumann_max_ratio: f64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ConvergenceLog {
    pub g_bracket: f64,
    pub records: Vec<OuterRecord>,
    pub warnings: Vec<String>,
}

impl ConvergenceLog {
    /// Outer increment ratios from `N = 1` on.
    pub fn ratios(&self) -> Vec<f64> {
        self.records.iter().skip(1).map(|r| r.ratio).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OrbitNorms {
    pub l2: f64,
    pub hs: f64,
    /// Max over nodes of [`orbit_sup_norm`].
    pub weighted_sup: f64,
}

/// A converged periodic orbit at `M + 1` nodes.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub trajectory: Trajectory,
    pub low: BandTrajectory,
    /// `‖u(T) - u(0)‖_{L²} / max_t ‖u‖_{L²}` on the nonzero modes.
    pub defect: f64,
    /// The same for the `ξ = 0` density mode alone.
    pub zero_mode_defect: f64,
    /// Time-averaged `ξ = 0` density forcing removed in the last iteration, relative to `max_t ‖g‖_{L¹}`.
    pub mass_defect: f64,
    pub residual: f64,
    pub norms: OrbitNorms,
}

impl PeriodicOrbit {
    pub fn period(&self) -> f64 {
        self.trajectory.period
    }

    pub fn steps(&self) -> usize {
        self.trajectory.steps()
    }

    /// High part at node `m`.
    pub fn high(&self, domain: &Domain, m: usize) -> SpectralState {
        let mut u = self.trajectory.nodes[m].clone();
        u.sub(&self.low.scatter(m, domain.dim(), domain.len()));
        u
    }
}

/// [`iterate_periodic`] failure, carrying the log gathered so far.
#[derive(Debug)]
pub struct PeriodicFailure {
    pub error: Error,
    pub log: ConvergenceLog,
}

impl std::fmt::Display for PeriodicFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} after {} outer iterations", self.error, self.log.records.len())
    }
}

impl std::error::Error for PeriodicFailure {}

/// Nodal forcings of one outer iteration.
struct Assembled {
    f1: Vec<Vec<Mode>>,
    f_inf: Trajectory,
    coefficients: CoefficientTrack,
    mass_defect: f64,
}

fn assemble(
    domain: &Domain,
    low: &BandTrajectory,
    high: &Trajectory,
    law: PressureLaw,
    g_l1: f64,
) -> Result<Assembled> {
    let (dim, len) = (domain.dim(), domain.len());
    let per_node: Vec<(Vec<Mode>, SpectralState, Coefficients)> = (0..=high.steps())
        .into_par_iter()
        .map(|m| {
            let u1 = low.scatter(m, dim, len);
            let mut full = u1.clone();
            full.add(&high.nodes[m]);
            let coef = Coefficients::from_spectral(domain, &full, law)?;
            let mut f1 = apply_b_spectral(domain, &coef, &full);
            f1.scale(-1.0);
            domain.project_low_spectral(&mut f1);
            let mut f_inf = apply_b_spectral(domain, &coef, &u1);
            f_inf.scale(-1.0);
            domain.project_high_spectral(&mut f_inf);
            Ok((gather(&low.indices, &f1), f_inf, coef))
        })
        .collect::<Result<_>>()?;
    let mut f1 = Vec::with_capacity(per_node.len());
    let mut f_inf = Vec::with_capacity(per_node.len());
    let mut coefs = Vec::with_capacity(per_node.len());
    for (a, b, c) in per_node {
        f1.push(a);
        f_inf.push(b);
        coefs.push(c);
    }
    // Remove the time average of the ξ = 0 density forcing (trapezoidal, matching the solve).
    let origin = domain.grid.index_of([0, 0, 0]);
    let mut mass_defect = 0.0;
    if let Some(j) = low.indices.iter().position(|&i| i == origin) {
        let steps = f1.len() - 1;
        let mean = (0..steps).map(|m| 0.5 * (f1[m][j][0] + f1[m + 1][j][0])).sum::<Complex64>() / steps as f64;
        f1.iter_mut().for_each(|node| node[j][0] -= mean);
        let integral = mean.norm() * domain.grid.cell_volume();
        mass_defect = if g_l1 > 0.0 { integral / g_l1 } else { integral };
    }
    Ok(Assembled {
        f1,
        f_inf: Trajectory { period: high.period, nodes: f_inf },
        coefficients: CoefficientTrack { period: high.period, nodes: coefs },
        mass_defect,
    })
}

struct Increments {
    l2: f64,
    hs: f64,
    xs: f64,
}

fn increments(
    domain: &Domain,
    old: (&BandTrajectory, &Trajectory),
    new: (&BandTrajectory, &Trajectory),
    s: usize,
) -> Increments {
    let (dim, len) = (domain.dim(), domain.len());
    let steps = new.1.steps();
    let h = new.1.dt();
    let density = |low: &BandTrajectory, high: &Trajectory, m: usize| {
        let mut a = high.nodes[m].comps[0].clone();
        for (&i, v) in low.indices.iter().zip(&low.nodes[m]) {
            a[i] += v[0];
        }
        domain.backward(&a).into_iter().map(f64::exp_m1).collect::<Vec<_>>()
    };
    let per_node: Vec<(f64, f64, f64, Vec<f64>)> = (0..=steps)
        .into_par_iter()
        .map(|m| {
            let mut d_low = new.0.scatter(m, dim, len);
            d_low.sub(&old.0.scatter(m, dim, len));
            let mut d_high = new.1.nodes[m].clone();
            d_high.sub(&old.1.nodes[m]);
            let weighted = domain.state_hk(&d_high, s) + x1_norm(domain, &d_low.comps[0]) + y1_norm(domain, &d_low.comps[1..]);
            let mut total = d_low;
            total.add(&d_high);
            let mut d_phi = density(new.0, new.1, m);
            d_phi.iter_mut().zip(density(old.0, old.1, m)).for_each(|(x, y)| *x -= y);
            (domain.state_l2(&total), domain.state_hk(&total, s), weighted, d_phi)
        })
        .collect();
    let mut out = Increments { l2: 0.0, hs: 0.0, xs: 0.0 };
    for m in 0..=steps {
        let prev = &per_node[(m + steps - 1) % steps].3;
        let next = &per_node[(m + 1) % steps].3;
        let dt_phi: Vec<f64> = next.iter().zip(prev).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let (l2, hs, weighted, _) = &per_node[m];
        out.l2 = out.l2.max(*l2);
        out.hs = out.hs.max(*hs);
        out.xs = out.xs.max(weighted + domain.l2_norm(&dt_phi));
    }
    out
}

/// The low/high fixed-point iteration for a time-periodic solution with forcing `g`.
pub fn iterate_periodic(
    domain: &Domain,
    g: &ForcingSpec,
    settings: &PeriodicSettings,
    law: PressureLaw,
) -> std::result::Result<(PeriodicOrbit, ConvergenceLog), PeriodicFailure> {
    let mut log = ConvergenceLog::default();
    let fail = |error: Error, log: ConvergenceLog| PeriodicFailure { error, log };
    let period = g.period;
    let steps = settings.steps;
    let bracket = g_bracket_norm(domain, g, settings.s, steps);
    log.g_bracket = bracket.total;
    if bracket.total > settings.delta {
        log.warnings.push(format!("forcing norm {:.3e} exceeds delta = {:.3e}", bracket.total, settings.delta));
    }
    let spectrum = ForcingSpectrum::new(domain, g);
    let forcing = (!g.is_zero()).then_some(&spectrum);
    let indices = low_band(domain);
    let mut low = BandTrajectory::zeros(indices.clone(), period, steps);
    let mut high = Trajectory::zeros(domain.dim(), domain.len(), period, steps);
    let mut scale = 0.0;
    let mut growth = 0;
    let mut converged = false;
    for n in 0..=settings.max_outer {
        let start = Instant::now();
        let assembled = if n == 0 {
            None
        } else {
            match assemble(domain, &low, &high, law, bracket.l1_max) {
                Ok(a) => Some(a),
                Err(e) => return Err(fail(e, log)),
            }
        };
        let new_low = match solve_low(domain, &indices, period, steps, assembled.as_ref().map(|a| a.f1.as_slice()), forcing) {
            Ok(l) => l,
            Err(e) => return Err(fail(e, log)),
        };
        let system = HighSystem {
            coefficients: assembled.as_ref().map(|a| &a.coefficients),
            nodal: assembled.as_ref().map(|a| &a.f_inf),
            forcing,
            source: None,
        };
        let solve = match periodic_init_high(domain, system, period, settings, Some(&high.nodes[0])) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, log)),
        };
        let inc = increments(domain, (&low, &high), (&new_low, &solve.trajectory), settings.s);
        let ratio = match log.records.last() {
            Some(prev) if prev.increment_xs > 0.0 => inc.xs / prev.increment_xs,
            _ => 0.0,
        };
        if n == 0 {
            scale = inc.xs;
        }
        log.records.push(OuterRecord {
            iteration: n,
            increment_l2: inc.l2,
            increment_hs: inc.hs,
            increment_xs: inc.xs,
            ratio,
            mass_defect: assembled.as_ref().map_or(0.0, |a| a.mass_defect),
            neumann_iterations: solve.increments.len(),
            neumann_last_increment: solve.increments.last().copied().unwrap_or(0.0),
            neumann_max_ratio: solve.ratios.iter().copied().fold(0.0, f64::max),
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        if !solve.converged {
            log.warnings.push(format!("monodromy iteration hit its cap at outer iteration {n}"));
        }
        drop(assembled);
        low = new_low;
        high = solve.trajectory;
        if n >= 1 && inc.xs <= settings.tol_outer * scale {
            converged = true;
            break;
        }
        growth = if n >= 1 && ratio > 1.0 { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(fail(Error::Divergence { iteration: n }, log));
        }
    }
    if !converged {
        let last = log.records.last().map_or(0.0, |r| r.increment_xs);
        return Err(fail(Error::NonConvergence { iterations: settings.max_outer, last }, log));
    }
    let tail = log.ratios().iter().rev().take(3).copied().fold(0.0, f64::max);
    if tail >= 1.0 {
        let last = log.records.last().map_or(0.0, |r| r.increment_xs);
        return Err(fail(Error::NonConvergence { iterations: log.records.len(), last }, log));
    }
    let mass_defect = log.records.last().map_or(0.0, |r| r.mass_defect);
    let (dim, len) = (domain.dim(), domain.len());
    for (m, node) in high.nodes.iter_mut().enumerate() {
        node.add(&low.scatter(m, dim, len));
    }
    let trajectory = high;
    let residual = match pde_residual(domain, &trajectory, forcing, None, law) {
        Ok(r) => r,
        Err(e) => return Err(fail(e, log)),
    };
    let norms = orbit_norms(domain, &trajectory, settings.s);
    let (defect, zero_mode_defect) = periodicity_defect(domain, &trajectory);
    let orbit = PeriodicOrbit { trajectory, low, defect, zero_mode_defect, mass_defect, residual, norms };
    Ok((orbit, log))
}

/// Maxima over nodes of the L², `H^s` and weighted sup norms.
pub fn orbit_norms(domain: &Domain, traj: &Trajectory, s: usize) -> OrbitNorms {
    traj.nodes
        .par_iter()
        .map(|u| OrbitNorms { l2: domain.state_l2(u), hs: domain.state_hk(u, s), weighted_sup: orbit_sup_norm(domain, u) })
        .reduce(OrbitNorms::default, |a, b| OrbitNorms {
            l2: a.l2.max(b.l2),
            hs: a.hs.max(b.hs),
            weighted_sup: a.weighted_sup.max(b.weighted_sup),
        })
}

/// `(‖u(T) - u(0)‖ on ξ ≠ 0, |Δâ(0)|)`, both in L² and relative to `max_t ‖u‖_{L²}`.
pub fn periodicity_defect(domain: &Domain, traj: &Trajectory) -> (f64, f64) {
    let scale = traj.nodes.iter().map(|u| domain.state_l2(u)).fold(0.0, f64::max);
    let mut diff = traj.nodes[traj.steps()].clone();
    diff.sub(&traj.nodes[0]);
    let origin = domain.grid.index_of([0, 0, 0]);
    let zero = diff.comps[0][origin];
    diff.comps[0][origin] = Complex64::default();
    let mut zero_field = vec![Complex64::default(); domain.len()];
    zero_field[origin] = zero;
    let (a, b) = (domain.state_l2(&diff), domain.l2_sq_spectral(&zero_field).sqrt());
    if scale > 0.0 {
        (a / scale, b / scale)
    } else {
        (a, b)
    }
}

/// Max over nodes of `‖D_t u + Au + B[u]u - G(g) - S‖_{L²}`, relative to `max_t ‖u‖_{L²}`.
///
/// `D_t` is the fourth-order central difference on the periodic node sequence `0..M`.
pub fn pde_residual(
    domain: &Domain,
    traj: &Trajectory,
    forcing: Option<&ForcingSpectrum>,
    source: Option<&dyn Source>,
    law: PressureLaw,
) -> Result<f64> {
    let steps = traj.steps();
    let h = traj.dt();
    let (dim, len) = (domain.dim(), domain.len());
    let at = |k: isize| &traj.nodes[k.rem_euclid(steps as isize) as usize];
    let residuals: Vec<f64> = (0..steps)
        .into_par_iter()
        .map(|m| {
            let k = m as isize;
            let u = &traj.nodes[m];
            let mut r = at(k - 2).clone();
            r.axpy(-8.0, at(k - 1));
            r.axpy(8.0, at(k + 1));
            r.axpy(-1.0, at(k + 2));
            r.scale(1.0 / (12.0 * h));
            r.add(&apply_a_spectral(domain, u));
            r.add(&self_advection(domain, u, law)?);
            let t = m as f64 * h;
            if let Some(f) = forcing {
                r.sub(&f.at(dim, len, t));
            }
            if let Some(s) = source {
                r.sub(&s.at(t));
            }
            Ok(domain.state_l2(&r))
        })
        .collect::<Result<_>>()?;
    let worst = residuals.into_iter().fold(0.0, f64::max);
    let scale = traj.nodes.iter().map(|u| domain.state_l2(u)).fold(0.0, f64::max);
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::integrators::linear_flow_spectral;
    use crate::modes::symbol_matrix;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn domain(dim: usize, n: usize) -> Domain {
        Domain::new(Grid::new(dim, n, 16.0 * PI).unwrap(), 0.1, 0.4).unwrap()
    }

    fn random_hermitian(d: &Domain, seed: u64, keep: impl Fn(usize) -> bool) -> SpectralState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut hat = SpectralState::zeros(d.dim(), d.len());
        for c in 0..=d.dim() {
            for i in 0..d.len() {
                if d.grid.is_active(i) && keep(i) {
                    hat.comps[c][i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let src = hat.comps[c].clone();
            for i in 0..d.len() {
                hat.comps[c][i] = 0.5 * (src[i] + src[d.negate(i)].conj());
            }
        }
        hat
    }

    fn max_diff(a: &SpectralState, b: &SpectralState) -> f64 {
        let mut d = a.clone();
        d.sub(b);
        d.max_norm()
    }

    #[test]
    fn low_solve_zero_and_steady_state() {
        let d = domain(2, 16);
        let zero = Trajectory::zeros(2, d.len(), 1.0, 16);
        let out = periodic_from_forcing_low(&d, &zero).unwrap();
        assert!(out.nodes.iter().all(|u| u.max_norm() == 0.0));
        let idx = d.grid.index_of([2, 1, 0]);
        let c = [Complex64::new(0.2, -0.1), Complex64::new(0.3, 0.0), Complex64::new(-0.1, 0.4), Complex64::default()];
        let mut f = SpectralState::zeros(2, d.len());
        f.set_mode(idx, &c);
        let traj = Trajectory { period: 1.0, nodes: vec![f; 17] };
        let out = periodic_from_forcing_low(&d, &traj).unwrap();
        let xi = d.grid.symbol_wavevector(idx);
        let mut rhs = crate::expm::DenseMatrix::zeros(3);
        for k in 0..3 {
            rhs[(k, 0)] = c[k];
        }
        let steady = symbol_matrix(&xi[..2]).to_dense().solve(&rhs);
        for u in &out.nodes {
            for k in 0..3 {
                assert!((u.mode(idx)[k] - steady[(k, 0)]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn low_solve_is_periodic() {
        let d = domain(2, 16);
        let steps = 32;
        let origin = d.grid.index_of([0, 0, 0]);
        let nodes: Vec<SpectralState> = (0..=steps)
            .map(|m| {
                let mut f = random_hermitian(&d, m as u64 % steps as u64, |i| d.cutoffs.chi1[i] > 0.0);
                f.comps[0][origin] = Complex64::default();
                f
            })
            .collect();
        let out = periodic_from_forcing_low(&d, &Trajectory { period: 1.0, nodes }).unwrap();
        let scale = out.nodes.iter().map(|u| d.state_l2(u)).fold(0.0, f64::max);
        let mut diff = out.nodes[steps].clone();
        diff.sub(&out.nodes[0]);
        assert!(d.state_l2(&diff) <= 1e-9 * scale);
        // Support stays inside the low band.
        for u in &out.nodes {
            for i in 0..d.len() {
                if d.cutoffs.chi1[i] == 0.0 {
                    assert_eq!(u.mode(i), [Complex64::default(); 4]);
                }
            }
        }
    }

    #[test]
    fn low_solve_rejects_mass_forcing() {
        let d = domain(2, 16);
        let mut f = SpectralState::zeros(2, d.len());
        f.comps[0][d.grid.index_of([0, 0, 0])] = Complex64::new(1.0, 0.0);
        let err = periodic_from_forcing_low(&d, &Trajectory { period: 1.0, nodes: vec![f; 9] }).unwrap_err();
        assert!(matches!(err, Error::Compatibility(_)));
    }

    #[test]
    fn monodromy_examples() {
        let d = domain(2, 16);
        let high = |i: usize| d.cutoffs.chi_inf[i] > 0.0;
        let zero = SpectralState::zeros(2, d.len());
        assert_eq!(monodromy_apply(&d, &zero, None, 1.0, 16).unwrap().max_norm(), 0.0);
        let u = random_hermitian(&d, 7, high);
        let got = monodromy_apply(&d, &u, None, 1.0, 16).unwrap();
        assert!(max_diff(&got, &linear_flow_spectral(&d, &u, 1.0)) < 1e-10 * u.max_norm());
        // Small frozen coefficients: the map still contracts in H^s.
        let mut tilde = random_hermitian(&d, 8, |_| true);
        d.band_limit(&mut tilde);
        let amp = d.to_physical(&tilde).max_abs();
        tilde.scale(1e-2 / amp);
        let coef = Coefficients::from_spectral(&d, &tilde, PressureLaw::Quadratic).unwrap();
        let track = CoefficientTrack { period: 1.0, nodes: vec![coef; 17] };
        let out = monodromy_apply(&d, &u, Some(&track), 1.0, 16).unwrap();
        assert!(d.state_hk(&out, 3) < d.state_hk(&u, 3));
    }

    #[test]
    fn high_solve_zero_forcing_and_resolvent_oracle() {
        let d = domain(2, 16);
        let settings = PeriodicSettings { steps: 16, ..Default::default() };
        let zero = periodic_init_high(&d, HighSystem::default(), 1.0, &settings, None).unwrap();
        assert_eq!(zero.increments.len(), 1);
        assert_eq!(zero.initial.max_norm(), 0.0);
        // ũ = 0 and constant nodal forcing: the periodic solution is the steady state Â^{-1}F.
        let mut f = random_hermitian(&d, 9, |i| d.cutoffs.chi_inf[i] > 0.0);
        d.project_high_spectral(&mut f);
        let mut steady = SpectralState::zeros(2, d.len());
        for i in 0..d.len() {
            if d.grid.is_active(i) && d.cutoffs.chi_inf[i] > 0.0 {
                let xi = d.grid.symbol_wavevector(i);
                let mut rhs = crate::expm::DenseMatrix::zeros(3);
                for k in 0..3 {
                    rhs[(k, 0)] = f.mode(i)[k];
                }
                let sol = symbol_matrix(&xi[..2]).to_dense().solve(&rhs);
                steady.set_mode(i, &[sol[(0, 0)], sol[(1, 0)], sol[(2, 0)], Complex64::default()]);
            }
        }
        let error = |steps: usize| {
            let nodal = Trajectory { period: 1.0, nodes: vec![f.clone(); steps + 1] };
            let sys = HighSystem { nodal: Some(&nodal), ..Default::default() };
            let settings = PeriodicSettings { steps, ..Default::default() };
            let solve = periodic_init_high(&d, sys, 1.0, &settings, None).unwrap();
            assert!(solve.converged);
            max_diff(&solve.initial, &steady) / steady.max_norm()
        };
        let (e1, e2) = (error(16), error(32));
        assert!(e1 < 1e-2 && (e1 / e2 - 4.0).abs() < 0.5, "{e1} {e2}");
    }

    #[test]
    fn plain_neumann_converges_geometrically() {
        let d = domain(2, 16);
        let mut f = random_hermitian(&d, 11, |i| d.grid.xi_abs(i) > 0.5 + 1e-3);
        d.project_high_spectral(&mut f);
        let nodal = Trajectory { period: 1.0, nodes: vec![f; 17] };
        let sys = HighSystem { nodal: Some(&nodal), ..Default::default() };
        let settings = PeriodicSettings { steps: 16, neumann: NeumannMode::Plain, ..Default::default() };
        let solve = periodic_init_high(&d, sys, 1.0, &settings, None).unwrap();
        assert!(solve.converged);
        // Modes with |ξ| > 1/2 have Re λ = -1/2: after a transient the ratio settles at e^{-1/2}.
        assert!(solve.ratios.iter().all(|&r| r < 1.0), "{:?}", solve.ratios);
        let tail = &solve.ratios[solve.ratios.len() / 2..];
        let mean = (tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp();
        assert!((mean - (-0.5f64).exp()).abs() < 0.05, "{mean}");
    }

    #[test]
    fn zero_forcing_gives_zero_orbit() {
        let d = domain(2, 16);
        let g = ForcingSpec::zero(1.0);
        let settings = PeriodicSettings { steps: 16, ..Default::default() };
        let (orbit, log) = iterate_periodic(&d, &g, &settings, PressureLaw::Quadratic).unwrap();
        assert_eq!(log.records.len(), 2);
        assert_eq!(orbit.defect, 0.0);
        assert!(orbit.trajectory.nodes.iter().all(|u| u.max_norm() == 0.0));
    }

    #[test]
    fn small_forcing_converges() {
        let d = domain(2, 16);
        let g = ForcingSpec::gaussian(2, 1.0, 1e-3, 6.0);
        let settings = PeriodicSettings { steps: 32, ..Default::default() };
        let (orbit, log) = iterate_periodic(&d, &g, &settings, PressureLaw::Quadratic).unwrap();
        assert!(log.records.len() <= 15);
        assert!(log.ratios().iter().all(|&r| r < 0.5), "{:?}", log.ratios());
        assert!(orbit.defect < 1e-6, "{}", orbit.defect);
        assert!(orbit.residual < 1e-2, "{}", orbit.residual);
        // Frequency separation of the stored parts.
        for m in [0, 7, 32] {
            let high = orbit.high(&d, m);
            let low = orbit.low.scatter(m, 2, d.len());
            for i in 0..d.len() {
                if d.cutoffs.chi_inf[i] == 0.0 {
                    assert_eq!(high.mode(i), [Complex64::default(); 4]);
                }
                if d.cutoffs.chi1[i] == 0.0 {
                    assert_eq!(low.mode(i), [Complex64::default(); 4]);
                }
            }
        }
    }

    struct Manufactured<'a> {
        domain: &'a Domain,
        u1: SpectralState,
        u2: SpectralState,
        omega: f64,
    }

    impl Manufactured<'_> {
        fn state(&self, t: f64) -> SpectralState {
            let mut u = self.u1.clone();
            u.scale((self.omega * t).cos());
            u.axpy((self.omega * t).sin(), &self.u2);
            u
        }
    }

    impl Source for Manufactured<'_> {
        fn at(&self, t: f64) -> SpectralState {
            let u = self.state(t);
            let mut s = self.u1.clone();
            s.scale(-self.omega * (self.omega * t).sin());
            s.axpy(self.omega * (self.omega * t).cos(), &self.u2);
            s.add(&apply_a_spectral(self.domain, &u));
            s.add(&self_advection(self.domain, &u, PressureLaw::Quadratic).unwrap());
            s
        }
    }

    #[test]
    fn residual_of_manufactured_orbit_is_fourth_order() {
        let d = domain(2, 16);
        let mut u1 = random_hermitian(&d, 12, |_| true);
        let mut u2 = random_hermitian(&d, 13, |_| true);
        d.band_limit(&mut u1);
        d.band_limit(&mut u2);
        let amp = d.to_physical(&u1).max_abs();
        u1.scale(1e-2 / amp);
        u2.scale(1e-2 / amp);
        let man = Manufactured { domain: &d, u1, u2, omega: 2.0 * PI };
        let residual = |steps: usize| {
            let nodes = (0..=steps).map(|m| man.state(m as f64 / steps as f64)).collect();
            pde_residual(&d, &Trajectory { period: 1.0, nodes }, None, Some(&man), PressureLaw::Quadratic).unwrap()
        };
        let (r1, r2) = (residual(32), residual(64));
        assert!((r1 / r2 - 16.0).abs() < 1.0, "{r1} {r2}");
        let zero = Trajectory::zeros(2, d.len(), 1.0, 16);
        assert_eq!(pde_residual(&d, &zero, None, None, PressureLaw::Quadratic).unwrap(), 0.0);
    }
}
