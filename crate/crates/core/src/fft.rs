//! Discrete Fourier transforms on square grids and on general product grids.
//!
//! Normalization: the forward transform carries the factor `1/n^2`, so a
//! sampled field `f(x_j)` maps to coefficients
//! `c_k = n^{-2} sum_j f(x_j) exp(-2 pi i j.m / n)`, which approximate the
//! continuum Fourier-series coefficients `L^{-2} int f exp(-i k.x) dx` up to
//! the unimodular factor `(-1)^{m1 + m2}` coming from the box origin at
//! `-L/2`. The inverse transform is unnormalized. With this convention
//! `||f||_{L^2}^2 = (L/n)^2 sum |f(x_j)|^2 = L^2 sum |c_k|^2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Planned 2D complex FFT for an `n x n` row-major buffer.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

const ROWS_PER_TASK: usize = 16;

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Forward transform in place, including the `1/n^2` factor.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.process(data, Direction::Forward);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|c| *c *= scale);
    }

    /// Unnormalized inverse transform in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.process(data, Direction::Inverse);
    }

    fn process(&self, data: &mut [Complex64], dir: Direction) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "buffer does not match FFT size");
        let fft = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let rows = |data: &mut [Complex64]| {
            data.par_chunks_mut(n * ROWS_PER_TASK).for_each_init(
                || vec![Complex64::default(); fft.get_inplace_scratch_len()],
                |scratch, chunk| fft.process_with_scratch(chunk, scratch),
            );
        };
        rows(data);
        transpose_square(data, n);
        rows(data);
        transpose_square(data, n);
    }
}

/// Shared plan for grids with `n` points per axis.
pub fn plan(n: usize) -> Arc<Fft2> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n).or_insert_with(|| Arc::new(Fft2::new(n))).clone()
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Inverse DFT over an arbitrary row-major shape, normalized by the total
/// number of samples (so a constant input maps to a discrete delta).
pub fn inverse_nd_normalized(data: &mut [Complex64], shape: &[usize]) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total, "buffer does not match shape");
    let mut planner = FftPlanner::new();
    for (axis, &len) in shape.iter().enumerate() {
        if len <= 1 {
            continue;
        }
        let fft = planner.plan_fft_inverse(len);
        let stride: usize = shape[axis + 1..].iter().product();
        let block = len * stride;
        let mut line = vec![Complex64::default(); len];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for outer in data.chunks_mut(block) {
            for inner in 0..stride {
                for (r, slot) in line.iter_mut().enumerate() {
                    *slot = outer[r * stride + inner];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (r, v) in line.iter().enumerate() {
                    outer[r * stride + inner] = *v;
                }
            }
        }
    }
    let scale = 1.0 / total as f64;
    data.iter_mut().for_each(|c| *c *= scale);
}
