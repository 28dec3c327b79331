// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small dense complex matrices: Padé-13 scaling-and-squaring exponential and
//! LU solves. Used for modes in the degenerate band and for φ-function blocks.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub size: usize,
    pub data: Vec<Complex64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.size + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.size + j]
    }
}

impl DenseMatrix {
    pub fn zeros(size: usize) -> Self {
        Self { size, data: vec![Complex64::default(); size * size] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { size: self.size, data: self.data.iter().map(|z| c * z).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { size: self.size, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { size: self.size, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.size;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::default() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Induced 1-norm (max column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.size).map(|j| (0..self.size).map(|i| self[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Solves `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Self {
        let n = self.size;
        let mut a = self.clone();
        let mut x = rhs.clone();
        for col in 0..n {
            let pivot = (col..n).max_by(|&p, &q| a[(p, col)].norm().total_cmp(&a[(q, col)].norm())).unwrap();
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                    x.data.swap(col * n + j, pivot * n + j);
                }
            }
            let inv = 1.0 / a[(col, col)];
            for row in col + 1..n {
                let factor = a[(row, col)] * inv;
                if factor == Complex64::default() {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(row, j)] -= factor * v;
                }
                for j in 0..n {
                    let v = x[(col, j)];
                    x[(row, j)] -= factor * v;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = 1.0 / a[(col, col)];
            for j in 0..n {
                x[(col, j)] *= inv;
            }
            for row in 0..col {
                let factor = a[(row, col)];
                if factor == Complex64::default() {
                    continue;
                }
                for j in 0..n {
                    let v = x[(col, j)];
                    x[(row, j)] -= factor * v;
                }
            }
        }
        x
    }
}

/// Padé(13,13) numerator coefficients (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which Padé-13 reaches double precision unscaled.
const THETA13: f64 = 5.371920351148152;

/// `exp(A)` by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &DenseMatrix) -> DenseMatrix {
    let n = a.size;
    let norm = a.norm1();
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scaled(Complex64::new(0.5f64.powi(squarings), 0.0));
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let id = DenseMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let comb = |m6: Complex64, m4: Complex64, m2: Complex64, m0: Complex64| {
        a6.scaled(m6).add(&a4.scaled(m4)).add(&a2.scaled(m2)).add(&id.scaled(m0))
    };
    let u_inner = a6.matmul(&a6.scaled(c(13)).add(&a4.scaled(c(11))).add(&a2.scaled(c(9))));
    let u = a.matmul(&u_inner.add(&comb(c(7), c(5), c(3), c(1))));
    let v_inner = a6.matmul(&a6.scaled(c(12)).add(&a4.scaled(c(10))).add(&a2.scaled(c(8))));
    let v = v_inner.add(&comb(c(6), c(4), c(2), c(0)));
    let mut r = v.sub(&u).solve(&v.add(&u));
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r
}

/// `[exp(Z), φ₁(Z), φ₂(Z)]` from the exponential of `[[Z, I, 0], [0, 0, I], [0, 0, 0]]`,
/// where `φ₁(z) = (e^z - 1)/z` and `φ₂(z) = (e^z - 1 - z)/z²`.
pub fn phi_blocks(z: &DenseMatrix) -> [DenseMatrix; 3] {
    let n = z.size;
    let mut big = DenseMatrix::zeros(3 * n);
    for i in 0..n {
        for j in 0..n {
            big[(i, j)] = z[(i, j)];
        }
        big[(i, n + i)] = Complex64::new(1.0, 0.0);
        big[(n + i, 2 * n + i)] = Complex64::new(1.0, 0.0);
    }
    let e = expm(&big);
    let block = |col: usize| {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = e[(i, col * n + j)];
            }
        }
        m
    };
    [block(0), block(1), block(2)]
}
