use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirac::Mat2;
use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use crate::grid::{bracket, Grid};

/// Fourier symbol, evaluated at each grid wavenumber `(k1, k2)`.
pub enum Symbol<'a> {
    Scalar(&'a (dyn Fn([f64; 2]) -> Complex64 + Sync)),
    Matrix(&'a (dyn Fn([f64; 2]) -> Mat2 + Sync)),
}

pub(crate) fn wavenumbers(grid: Grid) -> Vec<f64> {
    (0..grid.n()).map(|i| grid.wavenumber(i)).collect()
}

/// Multiplies every mode by `symbol(k)`. Matrix symbols need two components.
pub fn apply_multiplier<const C: usize>(field: &Field<C>, symbol: &Symbol) -> Result<Field<C>> {
    field.expect(Representation::Fourier)?;
    let grid = field.grid();
    let n = grid.n();
    let ks = wavenumbers(grid);
    let mut out = field.clone();
    match symbol {
        Symbol::Scalar(s) => {
            for c in out.components_mut().iter_mut() {
                c.par_iter_mut().enumerate().for_each(|(idx, z)| {
                    *z *= s([ks[idx / n], ks[idx % n]]);
                });
            }
        }
        Symbol::Matrix(m) => {
            if C != 2 {
                return Err(Error::Shape(format!(
                    "matrix-valued symbol needs a 2-component field, got {C}"
                )));
            }
            let comps = out.components_mut();
            let (a, b) = comps.split_at_mut(1);
            a[0].par_iter_mut()
                .zip(b[0].par_iter_mut())
                .enumerate()
                .for_each(|(idx, (u, v))| {
                    [*u, *v] = m([ks[idx / n], ks[idx % n]]).apply([*u, *v]);
                });
        }
    }
    Ok(out)
}

/// Radial multiplier `g(|k|)` applied in place; cheaper than a general symbol.
pub(crate) fn apply_radial_in_place<const C: usize>(field: &mut Field<C>, g: impl Fn(f64) -> f64 + Sync) {
    let grid = field.grid();
    let n = grid.n();
    let ks = wavenumbers(grid);
    let weights: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| g(ks[idx / n].hypot(ks[idx % n])))
        .collect();
    for c in field.components_mut().iter_mut() {
        c.par_iter_mut().zip(weights.par_iter()).for_each(|(z, w)| *z *= w);
    }
}

/// Smooth step `s(x) = exp(-1/x)` for `x > 0`, zero otherwise.
fn smooth_step(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Mother cutoff: 1 on `r <= 1`, 0 on `r >= 2`, smooth in between.
pub fn cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = smooth_step(2.0 - r);
        a / (a + smooth_step(r - 1.0))
    }
}

/// Dyadic frequency `N = 2^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    exponent: i32,
}

impl DyadicIndex {
    pub fn new(exponent: i32) -> Self {
        Self { exponent }
    }

    /// Parses a positive power of two such as `0.25` or `4`.
    pub fn from_value(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Domain(format!("dyadic value must be positive, got {value}")));
        }
        let e = value.log2().round();
        if (2f64.powf(e) - value).abs() > 1e-12 * value {
            return Err(Error::Domain(format!("{value} is not a power of two")));
        }
        Ok(Self::new(e as i32))
    }

    pub fn exponent(self) -> i32 {
        self.exponent
    }

    pub fn value(self) -> f64 {
        2f64.powi(self.exponent)
    }

    /// Annulus cutoff `rho_N(r) = rho(r/N) - rho(2r/N)`, supported on `[N/2, 2N]`.
    pub fn weight(self, r: f64) -> f64 {
        let nv = self.value();
        cutoff(r / nv) - cutoff(2.0 * r / nv)
    }

    /// Dyadic levels whose cutoffs cover the resolvable band of the grid:
    /// from the largest power of two not above `2 * 2pi/L` to the smallest
    /// not below the Nyquist wavenumber.
    pub fn resolvable(grid: Grid) -> Vec<DyadicIndex> {
        let (lo, hi) = grid.band();
        let e_lo = lo.log2().floor() as i32;
        let e_hi = hi.log2().ceil() as i32;
        (e_lo..=e_hi).map(Self::new).collect()
    }

    pub fn check(self, grid: Grid) -> Result<()> {
        let levels = Self::resolvable(grid);
        let (first, last) = (levels[0], levels[levels.len() - 1]);
        if self < first || self > last {
            let (lo, hi) = grid.band();
            return Err(Error::Domain(format!(
                "dyadic N = {} outside the resolvable band [{lo:.4}, {hi:.4}] (levels {} to {})",
                self.value(),
                first.value(),
                last.value()
            )));
        }
        Ok(())
    }
}

/// Littlewood-Paley projection `P_N`.
pub fn lp_project<const C: usize>(field: &Field<C>, big_n: DyadicIndex) -> Result<Field<C>> {
    field.expect(Representation::Fourier)?;
    big_n.check(field.grid())?;
    let mut out = field.clone();
    apply_radial_in_place(&mut out, |r| big_n.weight(r));
    Ok(out)
}

/// Free half-Klein-Gordon flow: multiplies mode `k` by `exp(-theta i t <k>)`.
pub fn free_evolve<const C: usize>(field: &Field<C>, t: f64, theta: i8) -> Result<Field<C>> {
    field.expect(Representation::Fourier)?;
    let mut out = field.clone();
    free_evolve_in_place(&mut out, t, theta);
    Ok(out)
}

pub(crate) fn propagator_phases(grid: Grid, t: f64, theta: i8) -> Vec<Complex64> {
    let n = grid.n();
    let ks = wavenumbers(grid);
    let s = -f64::from(theta.signum()) * t;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| Complex64::from_polar(1.0, s * bracket(ks[idx / n], ks[idx % n])))
        .collect()
}

pub(crate) fn free_evolve_in_place<const C: usize>(field: &mut Field<C>, t: f64, theta: i8) {
    if t == 0.0 {
        return;
    }
    let phases = propagator_phases(field.grid(), t, theta);
    for c in field.components_mut().iter_mut() {
        c.par_iter_mut().zip(phases.par_iter()).for_each(|(z, p)| *z *= p);
    }
}

/// True when the FFT slot survives the 1/2-rule truncation.
#[inline]
pub(crate) fn kept_slot(grid: Grid, i: usize) -> bool {
    grid.mode_number(i).unsigned_abs() < (grid.n() / 4) as u64
}

/// Zeroes every mode with `max(|m1|, |m2|) >= n/4`.
pub fn dealias<const C: usize>(field: &Field<C>) -> Result<Field<C>> {
    field.expect(Representation::Fourier)?;
    let mut out = field.clone();
    dealias_in_place(&mut out);
    Ok(out)
}

pub(crate) fn dealias_in_place<const C: usize>(field: &mut Field<C>) {
    let grid = field.grid();
    let n = grid.n();
    let keep: Vec<bool> = (0..n).map(|i| kept_slot(grid, i)).collect();
    for c in field.components_mut().iter_mut() {
        c.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            if !keep[i] {
                row.fill(Complex64::default());
            } else {
                for (j, z) in row.iter_mut().enumerate() {
                    if !keep[j] {
                        *z = Complex64::default();
                    }
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ScalarField, SpinorField};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_mode(grid: Grid, m1: i64, m2: i64, amp: Complex64) -> ScalarField {
        let mut f = ScalarField::zeros(grid, Representation::Fourier);
        f.data_mut()[grid.slot(m1) * grid.n() + grid.slot(m2)] = amp;
        f
    }

    #[test]
    fn identity_symbol() {
        let grid = Grid::new(16, 5.0).unwrap();
        let f = SpinorField::from_fn_physical(grid, |x, y| [c(x.sin(), y), c(0.0, x * y)]).into_fourier();
        let one = |_: [f64; 2]| c(1.0, 0.0);
        assert_eq!(apply_multiplier(&f, &Symbol::Scalar(&one)).unwrap(), f);
    }

    #[test]
    fn bracket_symbol_on_plane_wave() {
        let grid = Grid::new(16, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn_physical(grid, |x, _| [Complex64::from_polar(1.0, x)]).into_fourier();
        let sym = |k: [f64; 2]| c(bracket(k[0], k[1]), 0.0);
        let g = apply_multiplier(&f, &Symbol::Scalar(&sym)).unwrap().into_physical();
        let f = f.into_physical();
        for (a, b) in g.data().iter().zip(f.data()) {
            assert!((a - b * 2f64.sqrt()).norm() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_cosine() {
        let grid = Grid::new(32, 2.0 * PI).unwrap();
        let f = ScalarField::from_scalar_fn(grid, |x, _| x.cos()).into_fourier();
        let sym = |k: [f64; 2]| c(0.0, k[0]);
        let g = apply_multiplier(&f, &Symbol::Scalar(&sym)).unwrap().into_physical();
        for i in 0..grid.n() {
            let x = grid.position(i);
            for j in 0..grid.n() {
                assert_abs_diff_eq!(g.data()[i * grid.n() + j].re, -x.sin(), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn matrix_symbol_needs_spinor() {
        let grid = Grid::new(8, 1.0).unwrap();
        let f = ScalarField::zeros(grid, Representation::Fourier);
        let m = |_: [f64; 2]| Mat2::IDENTITY;
        assert!(matches!(apply_multiplier(&f, &Symbol::Matrix(&m)), Err(Error::Shape(_))));
        let phys = ScalarField::zeros(grid, Representation::Physical);
        let one = |_: [f64; 2]| c(1.0, 0.0);
        assert!(matches!(
            apply_multiplier(&phys, &Symbol::Scalar(&one)),
            Err(Error::Representation { .. })
        ));
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert_eq!(cutoff(2.0), 0.0);
        assert_abs_diff_eq!(cutoff(1.5), 0.5, epsilon = 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = cutoff(1.0 + i as f64 / 100.0);
            assert!(v <= prev);
            prev = v;
        }
        let nn = DyadicIndex::new(0);
        assert_eq!(nn.weight(0.49), 0.0);
        assert_eq!(nn.weight(1.0), 1.0);
        assert_eq!(nn.weight(2.01), 0.0);
    }

    #[test]
    fn dyadic_parse_and_band() {
        assert_eq!(DyadicIndex::from_value(0.25).unwrap().exponent(), -2);
        assert!(DyadicIndex::from_value(3.0).is_err());
        assert!(DyadicIndex::from_value(-1.0).is_err());
        let grid = Grid::new(512, 100.0).unwrap();
        let levels = DyadicIndex::resolvable(grid);
        assert_eq!(levels.first().unwrap().value(), 0.125);
        assert_eq!(levels.last().unwrap().value(), 32.0);
        assert!(DyadicIndex::new(6).check(grid).is_err());
        assert!(DyadicIndex::new(-4).check(grid).is_err());
        let f = ScalarField::zeros(grid, Representation::Fourier);
        assert!(matches!(lp_project(&f, DyadicIndex::new(9)), Err(Error::Domain(_))));
    }

    #[test]
    fn partition_of_unity_on_band() {
        let grid = Grid::new(128, 40.0).unwrap();
        let levels = DyadicIndex::resolvable(grid);
        let (lo, hi) = grid.band();
        for i in 0..=2000 {
            let r = lo + (hi - lo) * i as f64 / 2000.0;
            let s: f64 = levels.iter().map(|l| l.weight(r)).sum();
            assert!((s - 1.0).abs() < 1e-12, "sum {s} at r = {r}");
        }
    }

    #[test]
    fn lp_examples() {
        let grid = Grid::new(64, 2.0 * PI).unwrap();
        let nn = DyadicIndex::new(2);
        let f = single_mode(grid, 4, 0, c(1.0, 0.0));
        assert_eq!(lp_project(&f, nn).unwrap(), f);
        let far = single_mode(grid, 16, 3, c(1.0, 0.0));
        assert_eq!(lp_project(&far, nn).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn lp_sum_reproduces_band_limited() {
        let grid = Grid::new(64, 20.0).unwrap();
        let f = ScalarField::from_scalar_fn(grid, |x, y| (-(x * x + 2.0 * y * y) / 4.0).exp() * (x + 0.5).cos())
            .into_fourier();
        let (lo, _) = grid.band();
        // keep modes with |k| >= 2 * 2pi/L and inside the dealiased square
        let mut banded = dealias(&f).unwrap();
        apply_radial_in_place(&mut banded, |r| if r >= lo { 1.0 } else { 0.0 });
        let mut total = ScalarField::zeros(grid, Representation::Fourier);
        for l in DyadicIndex::resolvable(grid) {
            total.axpy(c(1.0, 0.0), &lp_project(&banded, l).unwrap()).unwrap();
        }
        let err = total.sub(&banded).unwrap().l2_norm() / banded.l2_norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn lp_twice_is_squared_cutoff() {
        let grid = Grid::new(64, 20.0).unwrap();
        let f = ScalarField::from_scalar_fn(grid, |x, y| (-(x * x + y * y) / 3.0).exp()).into_fourier();
        let nn = DyadicIndex::new(0);
        let twice = lp_project(&lp_project(&f, nn).unwrap(), nn).unwrap();
        let mut sq = f.clone();
        apply_radial_in_place(&mut sq, |r| nn.weight(r).powi(2));
        assert!(twice.sub(&sq).unwrap().l2_norm() <= 1e-14 * f.l2_norm());
        // rho_N equals one only on |k| = N
        let plateau = single_mode(Grid::new(64, 8.0 * PI).unwrap(), 0, -4, c(0.3, -0.1));
        assert_eq!(lp_project(&lp_project(&plateau, nn).unwrap(), nn).unwrap(), plateau);
    }

    #[test]
    fn lp_separated_annuli_orthogonal() {
        let grid = Grid::new(64, 20.0).unwrap();
        let f = ScalarField::from_scalar_fn(grid, |x, y| (-(x * x + y * y) / 2.0).exp() * (1.0 + x)).into_fourier();
        let a = lp_project(&f, DyadicIndex::new(-1)).unwrap();
        let b = lp_project(&f, DyadicIndex::new(1)).unwrap();
        assert!(a.inner(&b).unwrap().norm() <= 1e-12 * f.l2_norm().powi(2));
    }

    #[test]
    fn free_evolve_examples() {
        let grid = Grid::new(32, 10.0).unwrap();
        let f = SpinorField::from_fn_physical(grid, |x, y| {
            [c((-(x * x + y * y)).exp(), 0.0), c(0.0, x * (-(x * x + y * y)).exp())]
        })
        .into_fourier();
        assert_eq!(free_evolve(&f, 0.0, 1).unwrap(), f);
        let g = free_evolve(&f, 3.7, -1).unwrap();
        assert!((g.l2_norm() - f.l2_norm()).abs() <= 1e-13 * f.l2_norm());
        let back = free_evolve(&g, -3.7, -1).unwrap();
        assert!(back.sub(&f).unwrap().l2_norm() <= 1e-12 * f.l2_norm());

        let (m1, m2) = (3, -2);
        let w = single_mode(grid, m1, m2, c(1.0, 0.0));
        let t = 42.5;
        let out = free_evolve(&w, t, 1).unwrap();
        let k = grid.mode_spacing();
        let expect = Complex64::from_polar(1.0, -t * bracket(m1 as f64 * k, m2 as f64 * k));
        let got = out.data()[grid.slot(m1) * grid.n() + grid.slot(m2)];
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn dealias_examples() {
        let grid = Grid::new(32, 2.0 * PI).unwrap();
        let inside = single_mode(grid, 7, -7, c(1.0, 2.0));
        assert_eq!(dealias(&inside).unwrap(), inside);
        let outside = single_mode(grid, 8, 0, c(1.0, 0.0));
        assert_eq!(dealias(&outside).unwrap().max_abs(), 0.0);
        let nyq = single_mode(grid, -16, 2, c(1.0, 0.0));
        assert_eq!(dealias(&nyq).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dealiased_cubic_product_is_exact_convolution() {
        // three waves at the edge of the kept band; their product's
        // out-of-band part must not fold back into kept modes
        let grid = Grid::new(32, 2.0 * PI).unwrap();
        let modes = [(7i64, 7i64), (7, -7), (7, 7)];
        let waves: Vec<ScalarField> = modes
            .iter()
            .map(|&(a, b)| single_mode(grid, a, b, c(1.0, 0.0)).into_physical())
            .collect();
        let mut prod = waves[0].clone();
        for w in &waves[1..] {
            prod.data_mut().iter_mut().zip(w.data()).for_each(|(p, q)| *p *= q);
        }
        let out = dealias(&prod.into_fourier()).unwrap();
        // the product sits at (21, 7), which aliases to (-11, 7): cut
        assert!(out.max_abs() < 1e-14);
        let modes = [(3i64, -2i64), (2, 4), (-7, 1)];
        let mut prod = ScalarField::from_scalar_fn(grid, |_, _| 1.0);
        for &(a, b) in &modes {
            let w = single_mode(grid, a, b, c(1.0, 0.0)).into_physical();
            prod.data_mut().iter_mut().zip(w.data()).for_each(|(p, q)| *p *= q);
        }
        let out = dealias(&prod.into_fourier()).unwrap();
        let target = single_mode(grid, -2, 3, c(1.0, 0.0));
        assert!(out.sub(&target).unwrap().max_abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn evolve_commutes_with_radial_symbol(t in -50.0f64..50.0, s in 0.0f64..3.0) {
            let grid = Grid::new(32, 12.0).unwrap();
            let f = ScalarField::from_fn_physical(grid, |x, y| {
                [Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.1 * x)]
            }).into_fourier();
            let sym = move |k: [f64; 2]| c(bracket(k[0], k[1]).powf(s), 0.0);
            let a = apply_multiplier(&free_evolve(&f, t, 1).unwrap(), &Symbol::Scalar(&sym)).unwrap();
            let b = free_evolve(&apply_multiplier(&f, &Symbol::Scalar(&sym)).unwrap(), t, 1).unwrap();
            prop_assert!(a.sub(&b).unwrap().l2_norm() <= 1e-13 * a.l2_norm());
        }
    }
}
