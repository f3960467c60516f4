use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Physical,
    Fourier,
}

/// `C` complex components sampled on a grid, tagged with the space they live in.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<const C: usize> {
    grid: Grid,
    repr: Representation,
    comps: [Vec<Complex64>; C],
}

pub type ScalarField = Field<1>;
pub type SpinorField = Field<2>;

impl<const C: usize> Field<C> {
    pub fn zeros(grid: Grid, repr: Representation) -> Self {
        Self {
            grid,
            repr,
            comps: std::array::from_fn(|_| vec![Complex64::default(); grid.len()]),
        }
    }

    pub fn from_components(
        grid: Grid,
        repr: Representation,
        comps: [Vec<Complex64>; C],
    ) -> Result<Self> {
        for (c, v) in comps.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::Shape(format!(
                    "component {c} has {} values, grid needs {}",
                    v.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, repr, comps })
    }

    /// Samples `f(x1, x2)` at the grid points.
    pub fn from_fn_physical(grid: Grid, f: impl Fn(f64, f64) -> [Complex64; C] + Sync) -> Self {
        Self::sample(grid, Representation::Physical, |i, j| {
            f(grid.position(i), grid.position(j))
        })
    }

    /// Fills each mode with `f(k1, k2)`.
    pub fn from_fn_fourier(grid: Grid, f: impl Fn(f64, f64) -> [Complex64; C] + Sync) -> Self {
        Self::sample(grid, Representation::Fourier, |i, j| {
            f(grid.wavenumber(i), grid.wavenumber(j))
        })
    }

    fn sample(
        grid: Grid,
        repr: Representation,
        f: impl Fn(usize, usize) -> [Complex64; C] + Sync,
    ) -> Self {
        let n = grid.n();
        let values: Vec<[Complex64; C]> = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(idx / n, idx % n))
            .collect();
        let comps = std::array::from_fn(|c| values.iter().map(|v| v[c]).collect());
        Self { grid, repr, comps }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn repr(&self) -> Representation {
        self.repr
    }

    pub fn components(&self) -> &[Vec<Complex64>; C] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>; C] {
        &mut self.comps
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn into_components(self) -> [Vec<Complex64>; C] {
        self.comps
    }

    pub fn expect(&self, repr: Representation) -> Result<()> {
        if self.repr == repr {
            Ok(())
        } else {
            Err(Error::Representation {
                expected: repr,
                found: self.repr,
            })
        }
    }

    pub fn same_grid<const D: usize>(&self, other: &Field<D>) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    pub fn into_fourier(mut self) -> Self {
        if self.repr == Representation::Physical {
            let plan = fft::plan(self.grid.n());
            for c in self.comps.iter_mut() {
                plan.forward(c);
            }
            self.repr = Representation::Fourier;
        }
        self
    }

    pub fn into_physical(mut self) -> Self {
        if self.repr == Representation::Fourier {
            let plan = fft::plan(self.grid.n());
            for c in self.comps.iter_mut() {
                plan.inverse(c);
            }
            self.repr = Representation::Physical;
        }
        self
    }

    pub fn to_fourier(&self) -> Self {
        self.clone().into_fourier()
    }

    pub fn to_physical(&self) -> Self {
        self.clone().into_physical()
    }

    /// Weight turning `sum |c|^2` into the continuum `L^2` norm squared.
    fn quadrature(&self) -> f64 {
        match self.repr {
            Representation::Physical => self.grid.cell_area(),
            Representation::Fourier => self.grid.length().powi(2),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self
            .comps
            .iter()
            .map(|c| c.par_iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        (self.quadrature() * sum).sqrt()
    }

    /// `int conj(self) . other dx`, evaluated in the shared representation.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.same_grid(other)?;
        other.expect(self.repr)?;
        let mut acc = Complex64::default();
        for (a, b) in self.comps.iter().zip(other.comps.iter()) {
            acc += a
                .par_iter()
                .zip(b.par_iter())
                .map(|(x, y)| x.conj() * y)
                .sum::<Complex64>();
        }
        Ok(acc * self.quadrature())
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn scale(&mut self, a: Complex64) {
        for c in self.comps.iter_mut() {
            c.par_iter_mut().for_each(|z| *z *= a);
        }
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &Self) -> Result<()> {
        self.same_grid(other)?;
        other.expect(self.repr)?;
        for (x, y) in self.comps.iter_mut().zip(other.comps.iter()) {
            x.par_iter_mut().zip(y.par_iter()).for_each(|(u, v)| *u += a * v);
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

impl ScalarField {
    pub fn data(&self) -> &[Complex64] {
        &self.comps[0]
    }

    pub fn data_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.comps[0]
    }

    pub fn from_real(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let data = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::from_components(grid, Representation::Physical, [data])
    }

    pub fn from_scalar_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        Self::from_fn_physical(grid, |x1, x2| [Complex64::new(f(x1, x2), 0.0)])
    }
}
