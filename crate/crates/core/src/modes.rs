// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Per-wavevector linear algebra of the symbol `Â_ξ = (0 iξᵀ; iξ I)`.
//!
//! The eigenvalues of `-Â_ξ` are `λ₀ = -1` (multiplicity `d - 1`, solenoidal
//! velocity) and `λ± = (-1 ± √(1 - 4|ξ|²))/2`, so
//! `e^{-tÂ} = e^{-t} Π₀ + e^{tλ₊} Π₊ + e^{tλ₋} Π₋`. The projections lose a factor
//! `1/(λ₊ - λ₋)` near `|ξ| = 1/2`; inside `|1 - 4|ξ|²| < ε_deg` every quantity is
//! computed from dense matrix exponentials instead.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expm::{expm, phi_blocks, DenseMatrix};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex square matrix of size `dim + 1 <= 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatrix {
    pub size: usize,
    pub m: [[Complex64; 4]; 4],
}

impl ModeMatrix {
    pub fn zeros(size: usize) -> Self {
        Self { size, m: [[ZERO; 4]; 4] }
    }

    pub fn identity(size: usize) -> Self {
        let mut out = Self::zeros(size);
        for i in 0..size {
            out.m[i][i] = ONE;
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for z in row.iter_mut() {
                *z *= c;
            }
        }
        out
    }

    pub fn apply(&self, x: &[Complex64; 4]) -> [Complex64; 4] {
        let mut y = [ZERO; 4];
        for i in 0..self.size {
            let mut acc = ZERO;
            for j in 0..self.size {
                acc += self.m[i][j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.size).map(|i| self.m[i][i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.size);
        for i in 0..self.size {
            for j in 0..self.size {
                d[(i, j)] = self.m[i][j];
            }
        }
        d
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut out = Self::zeros(d.size);
        for i in 0..d.size {
            for j in 0..d.size {
                out.m[i][j] = d[(i, j)];
            }
        }
        out
    }
}

impl Add for ModeMatrix {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] += rhs.m[i][j];
            }
        }
        self
    }
}

impl Sub for ModeMatrix {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] -= rhs.m[i][j];
            }
        }
        self
    }
}

impl Mul for ModeMatrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros(self.size);
        for i in 0..self.size {
            for j in 0..self.size {
                out.m[i][j] = (0..self.size).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        out
    }
}

/// `Â_ξ`; the size is `xi.len() + 1`.
pub fn symbol_matrix(xi: &[f64]) -> ModeMatrix {
    let mut a = ModeMatrix::zeros(xi.len() + 1);
    for (k, &x) in xi.iter().enumerate() {
        a.m[0][k + 1] = I * x;
        a.m[k + 1][0] = I * x;
        a.m[k + 1][k + 1] = ONE;
    }
    a
}

/// Eigenvalues of `-Â_ξ`, principal square root: `λ± = (-1 ± √(1 - 4|ξ|²))/2`.
pub fn acoustic_eigenvalues(xi_abs: f64) -> (Complex64, Complex64) {
    let disc = 1.0 - 4.0 * xi_abs * xi_abs;
    let root = if disc >= 0.0 { Complex64::new(disc.sqrt(), 0.0) } else { Complex64::new(0.0, (-disc).sqrt()) };
    (0.5 * (-ONE + root), 0.5 * (-ONE - root))
}

/// Distance `|1 - 4|ξ|²|` to the double eigenvalue.
pub fn band_gap(xi_abs: f64) -> f64 {
    (1.0 - 4.0 * xi_abs * xi_abs).abs()
}

/// Eigenvalues and spectral projections of `-Â_ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDecomposition {
    pub lambda0: Complex64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub pi0: ModeMatrix,
    pub pi_plus: ModeMatrix,
    pub pi_minus: ModeMatrix,
}

/// Closed-form decomposition; refuses `ξ = 0` and the degenerate band.
pub fn decompose_mode(xi: &[f64], eps_deg: f64) -> Result<ModeDecomposition> {
    let size = xi.len() + 1;
    let r2: f64 = xi.iter().map(|x| x * x).sum();
    if r2 == 0.0 {
        return Err(Error::ZeroWavevector);
    }
    let gap = band_gap(r2.sqrt());
    if gap < eps_deg {
        return Err(Error::DegenerateBand { gap });
    }
    let (lp, lm) = acoustic_eigenvalues(r2.sqrt());
    let delta = lp - lm;
    let mut pi0 = ModeMatrix::zeros(size);
    let mut pi_plus = ModeMatrix::zeros(size);
    let mut pi_minus = ModeMatrix::zeros(size);
    pi_plus.m[0][0] = -lm / delta;
    pi_minus.m[0][0] = lp / delta;
    for k in 0..xi.len() {
        let off = -I * xi[k] / delta;
        pi_plus.m[0][k + 1] = off;
        pi_plus.m[k + 1][0] = off;
        pi_minus.m[0][k + 1] = -off;
        pi_minus.m[k + 1][0] = -off;
        for l in 0..xi.len() {
            let p = xi[k] * xi[l] / r2;
            pi0.m[k + 1][l + 1] = Complex64::new(if k == l { 1.0 - p } else { -p }, 0.0);
            pi_plus.m[k + 1][l + 1] = lp * p / delta;
            pi_minus.m[k + 1][l + 1] = -lm * p / delta;
        }
    }
    Ok(ModeDecomposition { lambda0: -ONE, lambda_plus: lp, lambda_minus: lm, pi0, pi_plus, pi_minus })
}

/// `φ₁(z) = (e^z - 1)/z` and `φ₂(z) = (e^z - 1 - z)/z²`, series near zero.
pub fn phi12(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.5 {
        // φ_k(z) = Σ_j z^j / (j + k)!
        let mut p1 = ZERO;
        let mut p2 = ZERO;
        let mut term1 = ONE; // z^j/(j+1)!
        let mut term2 = Complex64::new(0.5, 0.0); // z^j/(j+2)!
        for j in 0..30 {
            p1 += term1;
            p2 += term2;
            term1 *= z / (j as f64 + 2.0);
            term2 *= z / (j as f64 + 3.0);
        }
        (p1, p2)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e - 1.0 - z) / (z * z))
    }
}

/// Functional calculus of `-Â_ξ` on one wavevector.
#[derive(Debug, Clone, Copy)]
#[allow(clippy::large_enum_variant)] // one per mode, built in a hot loop; boxing would cost more than it saves
pub enum ModeCalculus {
    /// Diagonalizable: `f(-Â) = Σ f(λ_j) Π_j`. At `ξ = 0` the branches are
    /// `(0, diag(1, 0))` and `(-1, diag(0, I))`.
    Spectral { count: usize, branches: [(Complex64, ModeMatrix); 3] },
    /// Degenerate band: dense exponentials of `Â` itself.
    Dense { symbol: ModeMatrix },
}

impl ModeCalculus {
    pub fn new(xi: &[f64], eps_deg: f64) -> Self {
        let size = xi.len() + 1;
        match decompose_mode(xi, eps_deg) {
            Ok(d) => Self::Spectral {
                count: 3,
                branches: [(d.lambda0, d.pi0), (d.lambda_plus, d.pi_plus), (d.lambda_minus, d.pi_minus)],
            },
            Err(Error::ZeroWavevector) => {
                let mut pa = ModeMatrix::zeros(size);
                pa.m[0][0] = ONE;
                let pv = ModeMatrix::identity(size) - pa;
                Self::Spectral { count: 2, branches: [(ZERO, pa), (-ONE, pv), (ZERO, ModeMatrix::zeros(size))] }
            }
            Err(_) => Self::Dense { symbol: symbol_matrix(xi) },
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Self::Spectral { branches, .. } => branches[0].1.size,
            Self::Dense { symbol } => symbol.size,
        }
    }

    fn combine(&self, f: impl Fn(Complex64) -> Complex64) -> ModeMatrix {
        match self {
            Self::Spectral { count, branches } => branches[..*count]
                .iter()
                .fold(ModeMatrix::zeros(self.size()), |acc, (lambda, pi)| acc + pi.scale(f(*lambda))),
            Self::Dense { .. } => unreachable!("dense modes have no branch decomposition"),
        }
    }

    /// `e^{-tÂ}`.
    pub fn propagator(&self, t: f64) -> ModeMatrix {
        match self {
            Self::Spectral { .. } => self.combine(|l| (l * t).exp()),
            Self::Dense { symbol } => {
                ModeMatrix::from_dense(&expm(&symbol.to_dense().scaled(Complex64::new(-t, 0.0))))
            }
        }
    }

    /// `(I - e^{-TÂ})^{-1}`; at `ξ = 0` the pseudo-inverse with zero a-block.
    pub fn resolvent(&self, period: f64) -> ModeMatrix {
        match self {
            Self::Spectral { count, branches } => branches[..*count]
                .iter()
                .filter(|(l, _)| *l != ZERO)
                .fold(ModeMatrix::zeros(self.size()), |acc, (l, pi)| acc + pi.scale(ONE / (ONE - (l * period).exp()))),
            Self::Dense { .. } => {
                let n = self.size();
                let lhs = ModeMatrix::identity(n) - self.propagator(period);
                ModeMatrix::from_dense(&lhs.to_dense().solve(&DenseMatrix::identity(n)))
            }
        }
    }

    /// `∫₀^h e^{-(h-s)Â} e^{μs} ds`.
    pub fn exp_integral(&self, h: f64, mu: Complex64) -> ModeMatrix {
        let scale = (mu * h).exp() * h;
        match self {
            Self::Spectral { .. } => self.combine(|l| scale * phi12((l - mu) * h).0),
            Self::Dense { symbol } => {
                let n = symbol.size;
                let z = (*symbol + ModeMatrix::identity(n).scale(mu)).scale(Complex64::new(-h, 0.0));
                let [_, p1, _] = phi_blocks(&z.to_dense());
                ModeMatrix::from_dense(&p1).scale(scale)
            }
        }
    }

    /// Weights `(W₀, W₁)` with `∫₀^h e^{-(h-s)Â} F(s) ds = W₀F(0) + W₁F(h)` for `F` linear on `[0, h]`.
    pub fn linear_weights(&self, h: f64) -> (ModeMatrix, ModeMatrix) {
        let hc = Complex64::new(h, 0.0);
        match self {
            Self::Spectral { .. } => (
                self.combine(|l| {
                    let (p1, p2) = phi12(l * h);
                    hc * (p1 - p2)
                }),
                self.combine(|l| hc * phi12(l * h).1),
            ),
            Self::Dense { symbol } => {
                let [_, p1, p2] = phi_blocks(&symbol.scale(Complex64::new(-h, 0.0)).to_dense());
                let (p1, p2) = (ModeMatrix::from_dense(&p1), ModeMatrix::from_dense(&p2));
                ((p1 - p2).scale(hc), p2.scale(hc))
            }
        }
    }
}
