// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Multi-dimensional complex FFT over a cube of side `n`, built from 1-D rustfft plans.
//!
//! The forward transform is the unnormalized DFT; the inverse divides by the
//! total number of points, so `inverse(forward(f)) == f`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Lines handed to one rayon task when transforming along the last axis.
const LINES_PER_TASK: usize = 64;

pub struct CubeFft {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CubeFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CubeFft").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl CubeFft {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { dim, n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer does not match the grid");
        let n = self.n;
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                data.par_chunks_mut(n * LINES_PER_TASK).for_each(|chunk| {
                    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
                    plan.process_with_scratch(chunk, &mut scratch);
                });
                continue;
            }
            // Each block of n*stride values holds `stride` interleaved lines.
            data.par_chunks_mut(n * stride).for_each(|block| {
                let mut lines = vec![Complex64::default(); n * stride];
                let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
                for j in 0..n {
                    let row = &block[j * stride..(j + 1) * stride];
                    for (i, &z) in row.iter().enumerate() {
                        lines[i * n + j] = z;
                    }
                }
                plan.process_with_scratch(&mut lines, &mut scratch);
                for j in 0..n {
                    let row = &mut block[j * stride..(j + 1) * stride];
                    for (i, z) in row.iter_mut().enumerate() {
                        *z = lines[i * n + j];
                    }
                }
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(dim: usize, n: usize, input: &[Complex64]) -> Vec<Complex64> {
        let len = n.pow(dim as u32);
        let digits = |mut idx: usize| {
            let mut d = [0usize; 3];
            for k in (0..dim).rev() {
                d[k] = idx % n;
                idx /= n;
            }
            d
        };
        (0..len)
            .map(|out| {
                let m = digits(out);
                input.iter().enumerate().fold(Complex64::default(), |acc, (j, &z)| {
                    let x = digits(j);
                    let phase: usize = (0..dim).map(|k| m[k] * x[k]).sum();
                    let angle = -2.0 * std::f64::consts::PI * (phase % n) as f64 / n as f64;
                    acc + z * Complex64::from_polar(1.0, angle)
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_in_every_dimension() {
        for dim in 1..=3 {
            let n = 8;
            let fft = CubeFft::new(dim, n);
            let input: Vec<Complex64> = (0..fft.len())
                .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
                .collect();
            let mut data = input.clone();
            fft.forward(&mut data);
            let expected = naive_dft(dim, n, &input);
            for (a, b) in data.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-11, "dim {dim}: {a} vs {b}");
            }
            fft.inverse(&mut data);
            for (a, b) in data.iter().zip(&input) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }
}
