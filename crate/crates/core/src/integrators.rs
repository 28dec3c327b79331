// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time propagation.
//!
//! * [`linear_flow`] and [`duhamel`]: exact per-mode solutions of the
//!   constant-coefficient system, the latter for forcing that is linear in time
//!   between nodes.
//! * [`HighStepper`]: Strang splitting for `∂_t u + Au + P∞B[ũ]u = F∞` with exact
//!   half-step flows and an explicit midpoint middle stage.
//! * [`NonlinearStepper`]: the same splitting with `-B[u]u` in the middle stage.
//!
//! Separable analytic forcing is integrated exactly inside the linear half steps
//! (it is a sum of exponentials in time), so only genuinely nodal forcing is
//! subject to the splitting error.

use num_complex::Complex64;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::forcing::ForcingSpectrum;
use crate::modes::{ModeCalculus, ModeMatrix};
use crate::nonlinear::{apply_b_spectral, Coefficients};
use crate::pressure::PressureLaw;
use crate::state::{SpectralState, State};

/// Symbol calculus of one table slot.
pub fn mode_calculus(domain: &Domain, idx: usize) -> ModeCalculus {
    let xi = domain.grid.symbol_wavevector(idx);
    ModeCalculus::new(&xi[..domain.dim()], domain.eps_deg)
}

/// `M + 1` states at `t_m = mT/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub period: f64,
    pub nodes: Vec<SpectralState>,
}

impl Trajectory {
    pub fn zeros(dim: usize, len: usize, period: f64, steps: usize) -> Self {
        Self { period, nodes: vec![SpectralState::zeros(dim, len); steps + 1] }
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.period / self.steps() as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }

    /// Linear interpolation in time, extended periodically beyond `T`.
    pub fn lerp_at(&self, t: f64) -> SpectralState {
        let (m, theta) = bracket(t, self.dt(), self.steps());
        let mut out = self.nodes[m].clone();
        if theta > 0.0 {
            out.scale(1.0 - theta);
            out.axpy(theta, &self.nodes[m + 1]);
        }
        out
    }
}

/// Node index and fraction for linear interpolation on a uniform periodic grid.
/// Times past the period wrap around; `t = T` itself maps to the last node.
fn bracket(t: f64, dt: f64, steps: usize) -> (usize, f64) {
    let period = dt * steps as f64;
    let t = if t > period * (1.0 + 1e-12) { t.rem_euclid(period) } else { t };
    let x = (t / dt).clamp(0.0, steps as f64);
    let m = (x.floor() as usize).min(steps - 1);
    (m, x - m as f64)
}

/// Coefficient fields of `B[ũ]` at every node.
#[derive(Debug, Clone)]
pub struct CoefficientTrack {
    pub period: f64,
    pub nodes: Vec<Coefficients>,
}

impl CoefficientTrack {
    pub fn from_trajectory(domain: &Domain, u_tilde: &Trajectory, law: PressureLaw) -> Result<Self> {
        let nodes = u_tilde.nodes.iter().map(|u| Coefficients::from_spectral(domain, u, law)).collect::<Result<_>>()?;
        Ok(Self { period: u_tilde.period, nodes })
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn lerp_at(&self, t: f64) -> Coefficients {
        let (m, theta) = bracket(t, self.period / self.steps() as f64, self.steps());
        self.nodes[m].lerp(&self.nodes[m + 1], theta)
    }

    fn speed_near(&self, t: f64) -> f64 {
        let (m, _) = bracket(t, self.period / self.steps() as f64, self.steps());
        self.nodes[m].speed().max(self.nodes[m + 1].speed())
    }
}

/// Arbitrary state-valued source, added to the middle stage of the steppers.
pub trait Source: Sync {
    fn at(&self, t: f64) -> SpectralState;
}

fn apply_per_mode(domain: &Domain, u: &SpectralState, f: impl Fn(usize) -> Option<ModeMatrix>) -> SpectralState {
    let mut out = SpectralState::zeros(domain.dim(), domain.len());
    for i in 0..domain.len() {
        if let Some(m) = f(i) {
            out.set_mode(i, &m.apply(&u.mode(i)));
        }
    }
    out
}

/// `e^{-tA} u₀` per mode.
pub fn linear_flow_spectral(domain: &Domain, u0: &SpectralState, t: f64) -> SpectralState {
    apply_per_mode(domain, u0, |i| domain.grid.is_active(i).then(|| mode_calculus(domain, i).propagator(t)))
}

/// `e^{-tA} u₀` on physical states.
pub fn linear_flow(domain: &Domain, u0: &State, t: f64) -> Result<State> {
    Ok(domain.to_physical(&linear_flow_spectral(domain, &domain.to_spectral(u0)?, t)))
}

/// `∫₀^t e^{-(t-τ)A} F(τ) dτ` for `F` linear in time between the nodes of `f`.
pub fn duhamel(domain: &Domain, f: &Trajectory, t: f64) -> SpectralState {
    let h = f.dt();
    let full = ((t / h) + 1e-9).floor() as usize;
    let full = full.min(f.steps());
    let rest = t - full as f64 * h;
    let tail = (rest > 1e-12 * h).then(|| f.lerp_at(t));
    let mut out = SpectralState::zeros(domain.dim(), domain.len());
    for i in 0..domain.len() {
        if !domain.grid.is_active(i) {
            continue;
        }
        let calc = mode_calculus(domain, i);
        let flow = calc.propagator(h);
        let (w0, w1) = calc.linear_weights(h);
        let mut y = [Complex64::default(); 4];
        for m in 0..full {
            let a = flow.apply(&y);
            let b = w0.apply(&f.nodes[m].mode(i));
            let c = w1.apply(&f.nodes[m + 1].mode(i));
            for k in 0..4 {
                y[k] = a[k] + b[k] + c[k];
            }
        }
        if let Some(end) = &tail {
            let (w0, w1) = calc.linear_weights(rest);
            let a = calc.propagator(rest).apply(&y);
            let b = w0.apply(&f.nodes[full].mode(i));
            let c = w1.apply(&end.mode(i));
            for k in 0..4 {
                y[k] = a[k] + b[k] + c[k];
            }
        }
        out.set_mode(i, &y);
    }
    out
}

/// Exact integrals `∫₀^h e^{-(h-s)A} χ Ĝ(g(t₀ + s)) ds` of separable forcing for a fixed `h`.
#[derive(Debug, Clone)]
pub struct ForcingIntegrals {
    parts: Vec<(Complex64, Complex64, SpectralState)>,
}

impl ForcingIntegrals {
    /// `weights` is the cutoff applied to the forcing (`None` for the identity).
    pub fn new(domain: &Domain, spectrum: &ForcingSpectrum, weights: Option<&[f64]>, h: f64) -> Self {
        let mut parts = Vec::new();
        for (hat, profile) in &spectrum.terms {
            for (c, mu) in profile.exponentials(spectrum.period) {
                let q = apply_per_mode(domain, hat, |i| {
                    let w = weights.map_or(1.0, |w| w[i]);
                    (domain.grid.is_active(i) && w != 0.0)
                        .then(|| mode_calculus(domain, i).exp_integral(h, mu).scale(Complex64::new(w, 0.0)))
                });
                parts.push((c, mu, q));
            }
        }
        Self { parts }
    }

    /// Adds the integral over `[t₀, t₀ + h]`.
    pub fn add_to(&self, out: &mut SpectralState, t0: f64) {
        for (c, mu, q) in &self.parts {
            let w = c * (mu * t0).exp();
            for (o, src) in out.comps.iter_mut().zip(&q.comps) {
                o.iter_mut().zip(src).for_each(|(x, y)| *x += w * y);
            }
        }
        // The two halves of each cosine are conjugate partners; drop the rounding residue
        // of the imaginary part on self-conjugate slots implicitly via the Hermitian sum.
    }
}

fn half_flow_matrices(domain: &Domain, h: f64) -> Vec<Option<ModeMatrix>> {
    (0..domain.len()).map(|i| domain.grid.is_active(i).then(|| mode_calculus(domain, i).propagator(0.5 * h))).collect()
}

fn apply_matrices(mats: &[Option<ModeMatrix>], u: &mut SpectralState) {
    for (i, m) in mats.iter().enumerate() {
        match m {
            Some(m) => {
                let y = m.apply(&u.mode(i));
                u.set_mode(i, &y);
            }
            None => u.set_mode(i, &[Complex64::default(); 4]),
        }
    }
}

/// Inputs of the high-frequency linear system
/// `∂_t u∞ + A u∞ + P∞B[ũ]u∞ = F∞`, with `F∞` split into a nodal part,
/// the projected analytic forcing `P∞G(g)` and an optional extra source.
#[derive(Clone, Copy, Default)]
pub struct HighSystem<'a> {
    pub coefficients: Option<&'a CoefficientTrack>,
    pub nodal: Option<&'a Trajectory>,
    pub forcing: Option<&'a ForcingSpectrum>,
    pub source: Option<&'a dyn Source>,
}

/// Strang-split exponential integrator for [`HighSystem`].
pub struct HighStepper<'a> {
    domain: &'a Domain,
    system: HighSystem<'a>,
    dt: f64,
    half: Vec<Option<ModeMatrix>>,
    integrals: Option<ForcingIntegrals>,
    support: Vec<f64>,
}

impl<'a> HighStepper<'a> {
    pub fn new(domain: &'a Domain, system: HighSystem<'a>, dt: f64) -> Self {
        let integrals = system
            .forcing
            .filter(|f| !f.is_empty())
            .map(|f| ForcingIntegrals::new(domain, f, Some(&domain.cutoffs.chi_inf), 0.5 * dt));
        let support = (0..domain.len()).map(|i| if domain.cutoffs.chi_inf[i] > 0.0 { 1.0 } else { 0.0 }).collect();
        Self { domain, system, dt, half: half_flow_matrices(domain, dt), integrals, support }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn middle(&self, t: f64, y: &SpectralState, coef: Option<&Coefficients>) -> SpectralState {
        let mut f = match coef {
            Some(c) => {
                let mut b = apply_b_spectral(self.domain, c, y);
                self.domain.project_high_spectral(&mut b);
                b.scale(-1.0);
                b
            }
            None => SpectralState::zeros(self.domain.dim(), self.domain.len()),
        };
        if let Some(nodal) = self.system.nodal {
            f.add(&nodal.lerp_at(t));
        }
        if let Some(src) = self.system.source {
            let mut s = src.at(t);
            self.domain.project_high_spectral(&mut s);
            f.add(&s);
        }
        f
    }

    fn half_step(&self, y: &mut SpectralState, t0: f64) {
        apply_matrices(&self.half, y);
        if let Some(ints) = &self.integrals {
            ints.add_to(y, t0);
        }
    }

    /// Advances `y` from `t` to `t + dt`.
    pub fn step(&self, y: &mut SpectralState, t: f64) -> Result<()> {
        let h = self.dt;
        let coefs = match self.system.coefficients {
            Some(track) => {
                let cfl = h * self.domain.grid.xi_max() * track.speed_near(t + 0.5 * h);
                if cfl > 1.0 {
                    return Err(Error::Cfl(cfl));
                }
                let c0 = track.lerp_at(t);
                let c1 = track.lerp_at(t + 0.5 * h);
                if c0.is_zero() && c1.is_zero() {
                    None
                } else {
                    Some((c0, c1))
                }
            }
            None => None,
        };
        self.half_step(y, t);
        let k1 = self.middle(t, y, coefs.as_ref().map(|c| &c.0));
        let mut mid = y.clone();
        mid.axpy(0.5 * h, &k1);
        let k2 = self.middle(t + 0.5 * h, &mid, coefs.as_ref().map(|c| &c.1));
        y.axpy(h, &k2);
        self.half_step(y, t + 0.5 * h);
        y.apply_weights(&self.support);
        Ok(())
    }

    /// Integrates `steps` steps from `t = 0`, returning every node.
    pub fn integrate(&self, y0: &SpectralState, steps: usize) -> Result<Trajectory> {
        let mut nodes = Vec::with_capacity(steps + 1);
        let mut y = y0.clone();
        nodes.push(y.clone());
        for m in 0..steps {
            self.step(&mut y, m as f64 * self.dt)?;
            nodes.push(y.clone());
        }
        Ok(Trajectory { period: steps as f64 * self.dt, nodes })
    }

    /// Integrates `steps` steps from `t = 0`, returning only the end state.
    pub fn integrate_end(&self, y0: &SpectralState, steps: usize) -> Result<SpectralState> {
        let mut y = y0.clone();
        for m in 0..steps {
            self.step(&mut y, m as f64 * self.dt)?;
        }
        Ok(y)
    }
}

/// One step of [`HighStepper`] from `u∞` at `t`.
pub fn step_high_linear(
    domain: &Domain,
    u_inf: &SpectralState,
    system: HighSystem<'_>,
    t: f64,
    dt: f64,
) -> Result<SpectralState> {
    let mut y = u_inf.clone();
    HighStepper::new(domain, system, dt).step(&mut y, t)?;
    Ok(y)
}

/// Strang splitting for `∂_t u + Au = -B[u]u + G(g)`.
pub struct NonlinearStepper<'a> {
    domain: &'a Domain,
    law: PressureLaw,
    source: Option<&'a dyn Source>,
    dt: f64,
    half: Vec<Option<ModeMatrix>>,
    integrals: Option<ForcingIntegrals>,
}

impl<'a> NonlinearStepper<'a> {
    pub fn new(
        domain: &'a Domain,
        law: PressureLaw,
        forcing: Option<&ForcingSpectrum>,
        source: Option<&'a dyn Source>,
        dt: f64,
    ) -> Self {
        let integrals = forcing.filter(|f| !f.is_empty()).map(|f| ForcingIntegrals::new(domain, f, None, 0.5 * dt));
        Self { domain, law, source, dt, half: half_flow_matrices(domain, dt), integrals }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn middle(&self, t: f64, y: &SpectralState) -> Result<SpectralState> {
        let coef = Coefficients::from_spectral(self.domain, y, self.law)?;
        let cfl = self.dt * self.domain.grid.xi_max() * coef.speed();
        if cfl > 1.0 {
            return Err(Error::Cfl(cfl));
        }
        let mut f = apply_b_spectral(self.domain, &coef, y);
        f.scale(-1.0);
        if let Some(src) = self.source {
            f.add(&src.at(t));
        }
        Ok(f)
    }

    fn half_step(&self, y: &mut SpectralState, t0: f64) {
        apply_matrices(&self.half, y);
        if let Some(ints) = &self.integrals {
            ints.add_to(y, t0);
        }
    }

    /// Advances `y` from `t` to `t + dt`.
    pub fn step(&self, y: &mut SpectralState, t: f64) -> Result<()> {
        let h = self.dt;
        self.half_step(y, t);
        let k1 = self.middle(t, y)?;
        let mut mid = y.clone();
        mid.axpy(0.5 * h, &k1);
        let k2 = self.middle(t + 0.5 * h, &mid)?;
        y.axpy(h, &k2);
        self.half_step(y, t + 0.5 * h);
        Ok(())
    }
}

/// One step of [`NonlinearStepper`] on a physical state.
pub fn step_nonlinear(
    domain: &Domain,
    u: &State,
    forcing: Option<&ForcingSpectrum>,
    t: f64,
    dt: f64,
    law: PressureLaw,
) -> Result<State> {
    let mut y = domain.to_spectral(u)?;
    domain.band_limit(&mut y);
    NonlinearStepper::new(domain, law, forcing, None, dt).step(&mut y, t)?;
    Ok(domain.to_physical(&y))
}
