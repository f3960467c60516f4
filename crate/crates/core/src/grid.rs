use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square periodic box `[-L/2, L/2)^2` sampled on `n x n` points.
///
/// Data on the grid is stored row-major: flat index `i * n + j` holds the
/// sample at `(x1, x2) = (x_i, x_j)`, so axis 0 is `x1` and axis 1 is `x2`.
/// In Fourier space the same layout holds the mode `(k_i, k_j)` in FFT order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "points per axis must be an even integer >= 4, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Parameter(format!(
                "box length must be finite and positive, got {length}"
            )));
        }
        Ok(Self { n, length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points, `n^2`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical grid spacing `L / n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Mode spacing `2 pi / L`.
    #[inline]
    pub fn mode_spacing(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Nyquist wavenumber `n pi / L`.
    #[inline]
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Resolvable radial frequency band `[2 * 2pi/L, n pi/L]`.
    pub fn band(&self) -> (f64, f64) {
        (2.0 * self.mode_spacing(), self.nyquist())
    }

    /// Coordinate of sample `i` along either axis.
    #[inline]
    pub fn position(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    /// Signed integer mode number of FFT slot `i`, in `{-n/2, ..., n/2 - 1}`.
    #[inline]
    pub fn mode_number(&self, i: usize) -> i64 {
        let half = (self.n / 2) as i64;
        let i = i as i64;
        if i < half {
            i
        } else {
            i - self.n as i64
        }
    }

    /// Wavenumber of FFT slot `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.mode_number(i) as f64 * self.mode_spacing()
    }

    /// FFT slot holding the signed mode number `m` (taken modulo `n`).
    #[inline]
    pub fn slot(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    /// True for the slot carrying mode `-n/2`, which has no partner of
    /// opposite sign on the grid.
    #[inline]
    pub fn is_nyquist_slot(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Area element `(L/n)^2` used by physical-space quadrature.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Earliest time at which a disturbance initially supported in a disc of
    /// the given radius can reach the box edge, given group speed below one.
    pub fn wraparound_horizon(&self, support_radius: f64) -> f64 {
        (0.5 * self.length - support_radius).max(0.0)
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n: 1024,
            length: 200.0,
        }
    }
}

/// Japanese bracket `<xi> = sqrt(1 + |xi|^2)` (unit mass).
#[inline]
pub fn bracket(k1: f64, k2: f64) -> f64 {
    (1.0 + k1 * k1 + k2 * k2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(7, 1.0).is_err());
        assert!(Grid::new(2, 1.0).is_err());
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::new(8, f64::NAN).is_err());
    }

    #[test]
    fn mode_set_is_symmetric_fft_order() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode_number(i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.mode_spacing(), 1.0);
        for m in -4..4 {
            assert_eq!(g.mode_number(g.slot(m)), m);
        }
        assert!(g.is_nyquist_slot(4));
        assert_eq!(g.position(0), -PI);
    }

    #[test]
    fn horizon() {
        let g = Grid::new(512, 100.0).unwrap();
        assert_eq!(g.wraparound_horizon(10.0), 40.0);
        assert_eq!(g.wraparound_horizon(80.0), 0.0);
    }
}
