//! Grid estimates of Coifman-Meyer norms.
//!
//! A multiplier is sampled on a product of 2D frequency grids (one per slot).
//! The kernel is its inverse DFT normalized by the sample count, and the
//! estimate is the sum of kernel magnitudes. This approximates
//! `(2pi)^{-d}` times the `L^1` norm of the continuous kernel, so `m = 1`
//! gives exactly 1.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirac::projection_symbol;
use crate::error::{Error, Result};
use crate::fft::inverse_nd_normalized;
use crate::grid::bracket;
use crate::spectral::DyadicIndex;

/// Upper bound on samples for any product grid.
pub const SAMPLE_LIMIT: u128 = 64u128.pow(6);

/// Default points per axis when three slots are sampled.
pub const THREE_SLOT_POINTS: usize = 16;

/// One 2D frequency slot: `points` per axis, frequencies `spacing * m` with
/// `m` in `[-points/2, points/2)` in FFT order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub points: usize,
    pub spacing: f64,
}

impl Slot {
    /// Slot covering `[-half_width, half_width)` per axis.
    pub fn covering(half_width: f64, points: usize) -> Self {
        Self { points, spacing: 2.0 * half_width / points as f64 }
    }

    fn frequency(&self, i: usize) -> f64 {
        let m = if i < self.points.div_ceil(2) { i as f64 } else { i as f64 - self.points as f64 };
        m * self.spacing
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductGrid {
    pub slots: Vec<Slot>,
}

impl ProductGrid {
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        if slots.is_empty() || slots.len() > 3 {
            return Err(Error::Parameter(format!("need 1 to 3 slots, got {}", slots.len())));
        }
        if let Some(s) = slots.iter().find(|s| s.points < 2 || !(s.spacing.is_finite() && s.spacing > 0.0)) {
            return Err(Error::Parameter(format!("bad slot {s:?}")));
        }
        let g = Self { slots };
        let samples = g.samples();
        if samples > SAMPLE_LIMIT {
            return Err(Error::MemoryGuard { samples, limit: SAMPLE_LIMIT });
        }
        Ok(g)
    }

    pub fn samples(&self) -> u128 {
        self.slots.iter().map(|s| (s.points as u128).pow(2)).product()
    }

    fn shape(&self) -> Vec<usize> {
        self.slots.iter().flat_map(|s| [s.points, s.points]).collect()
    }

    /// Slot frequencies at a flat row-major index.
    fn frequencies(&self, mut idx: usize) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.slots.len()];
        for (s, slot) in self.slots.iter().enumerate().rev() {
            let b = idx % slot.points;
            idx /= slot.points;
            let a = idx % slot.points;
            idx /= slot.points;
            out[s] = [slot.frequency(a), slot.frequency(b)];
        }
        out
    }

    /// Samples a scalar multiplier.
    pub fn sample<F>(&self, m: F) -> Vec<Complex64>
    where
        F: Fn(&[[f64; 2]]) -> Complex64 + Sync,
    {
        (0..self.samples() as usize)
            .into_par_iter()
            .map(|i| m(&self.frequencies(i)))
            .collect()
    }

    /// Samples a multiplier with `K` scalar entries into `K` buffers.
    pub fn sample_entries<const K: usize, F>(&self, m: F) -> [Vec<Complex64>; K]
    where
        F: Fn(&[[f64; 2]]) -> [Complex64; K] + Sync,
    {
        let vals: Vec<[Complex64; K]> = (0..self.samples() as usize)
            .into_par_iter()
            .map(|i| m(&self.frequencies(i)))
            .collect();
        std::array::from_fn(|k| vals.iter().map(|v| v[k]).collect())
    }
}

/// `l^1` norm of the normalized inverse DFT of the sampled multiplier.
pub fn cm_norm_estimate(grid: &ProductGrid, values: &[Complex64]) -> Result<f64> {
    if values.len() as u128 != grid.samples() {
        return Err(Error::Shape(format!(
            "{} samples for a grid of {}",
            values.len(),
            grid.samples()
        )));
    }
    let mut k = values.to_vec();
    inverse_nd_normalized(&mut k, &grid.shape());
    Ok(k.par_iter().map(|z| z.norm()).sum())
}

/// Samples and estimates in one call.
pub fn cm_norm_of<F>(grid: &ProductGrid, m: F) -> Result<f64>
where
    F: Fn(&[[f64; 2]]) -> Complex64 + Sync,
{
    cm_norm_estimate(grid, &grid.sample(m))
}

/// Case-(i) cutoff multiplier
/// `Pi_t0(xi) <xi>^5 <eta>^-1 (t0 v(xi) - t1 v(xi - eta)) rho_N0(xi) rho_N1(xi - eta) rho_N2(eta)`,
/// flattened to eight scalar entries `(row, col, vector component)`.
pub fn case_one_multiplier(
    theta0: i8,
    theta1: i8,
    cell: [DyadicIndex; 3],
) -> impl Fn(&[[f64; 2]]) -> [Complex64; 8] + Sync {
    let (t0, t1) = (f64::from(theta0.signum()), f64::from(theta1.signum()));
    move |k: &[[f64; 2]]| {
        let (xi, eta) = (k[0], k[1]);
        let d = [xi[0] - eta[0], xi[1] - eta[1]];
        let (bx, bd, be) = (bracket(xi[0], xi[1]), bracket(d[0], d[1]), bracket(eta[0], eta[1]));
        let cut = cell[0].weight(xi[0].hypot(xi[1]))
            * cell[1].weight(d[0].hypot(d[1]))
            * cell[2].weight(eta[0].hypot(eta[1]));
        if cut == 0.0 {
            return [Complex64::default(); 8];
        }
        let scalar = cut * bx.powi(5) / be;
        let vec = [t0 * xi[0] / bx - t1 * d[0] / bd, t0 * xi[1] / bx - t1 * d[1] / bd];
        let p = projection_symbol(xi, theta0);
        std::array::from_fn(|e| p.0[e / 4][(e / 2) % 2] * (scalar * vec[e % 2]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseOneReport {
    pub theta: [i8; 2],
    /// `(N0, N1, N2)`.
    pub cell: [f64; 3],
    pub points: usize,
    /// Largest estimate over the eight scalar entries.
    pub estimate: f64,
    /// `<N0>^5 N1 / <N1>^2`.
    pub prediction: f64,
    pub ratio: f64,
}

/// Estimates the case-(i) multiplier on a two-slot grid sized to the cell:
/// the `xi` slot covers `|xi| <= 2.5 N0`, the `eta` slot `|eta| <= 2.5 max(N1, N2)`.
pub fn case_one_estimate(theta0: i8, theta1: i8, cell: [f64; 3], points: usize) -> Result<CaseOneReport> {
    let idx = [
        DyadicIndex::from_value(cell[0])?,
        DyadicIndex::from_value(cell[1])?,
        DyadicIndex::from_value(cell[2])?,
    ];
    let grid = ProductGrid::new(vec![
        Slot::covering(2.5 * cell[0], points),
        Slot::covering(2.5 * cell[1].max(cell[2]), points),
    ])?;
    let entries = grid.sample_entries(case_one_multiplier(theta0, theta1, idx));
    let mut estimate = 0.0f64;
    for e in entries.iter() {
        estimate = estimate.max(cm_norm_estimate(&grid, e)?);
    }
    let prediction = bracket(cell[0], 0.0).powi(5) * cell[1] / bracket(cell[1], 0.0).powi(2);
    Ok(CaseOneReport {
        theta: [theta0, theta1],
        cell,
        points,
        estimate,
        prediction,
        ratio: estimate / prediction,
    })
}
