//! Static Chern-Simons-Proca gauge fields reconstructed from the currents.
//!
//! Spectral derivatives use the symbol `i k` with the unpaired Nyquist
//! wavenumber set to zero, and `lambda^2 - Laplacian` uses the same
//! wavenumbers. Real currents then give exactly real gauge fields, and the
//! charge equation `F12 + lambda A0 = -J0` holds as an algebraic identity.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Representation, ScalarField};
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeFields {
    pub a0: ScalarField,
    pub a1: ScalarField,
    pub a2: ScalarField,
    pub lambda: f64,
}

/// Residual `L^2` norms of the static field equations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaugeResidual {
    /// `d1 A0 + lambda A2 - J2`
    pub curl1: f64,
    /// `d2 A0 - lambda A1 + J1`
    pub curl2: f64,
    /// `F12 + lambda A0 + J0`
    pub charge: f64,
    /// `d1 A1 + d2 A2`, logged only.
    pub divergence: f64,
}

/// Per-axis derivative wavenumbers with the Nyquist slot zeroed.
pub(crate) fn derivative_wavenumbers(grid: Grid) -> Vec<f64> {
    (0..grid.n())
        .map(|i| if grid.is_nyquist_slot(i) { 0.0 } else { grid.wavenumber(i) })
        .collect()
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "Proca coupling must be positive and finite, got {lambda}"
        )))
    }
}

/// Fourier-space solve: `[J0, J1, J2]` hats in, `[A0, A1, A2]` hats out.
pub(crate) fn solve_fourier(grid: Grid, lambda: f64, j: [&[Complex64]; 3]) -> [Vec<Complex64>; 3] {
    let n = grid.n();
    let kd = derivative_wavenumbers(grid);
    let l2 = lambda * lambda;
    let out: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (k1, k2) = (kd[idx / n], kd[idx % n]);
            let g = 1.0 / (l2 + k1 * k1 + k2 * k2);
            let (j0, j1, j2) = (j[0][idx], j[1][idx], j[2][idx]);
            let d1 = Complex64::new(0.0, k1);
            let d2 = Complex64::new(0.0, k2);
            [
                (-lambda * j0 + d2 * j1 - d1 * j2) * g,
                (lambda * j1 - d2 * j0) * g,
                (lambda * j2 + d1 * j0) * g,
            ]
        })
        .collect();
    std::array::from_fn(|c| out.iter().map(|v| v[c]).collect())
}

fn check_currents(j0: &ScalarField, j1: &ScalarField, j2: &ScalarField) -> Result<()> {
    for j in [j0, j1, j2] {
        j.expect(Representation::Physical)?;
        j0.same_grid(j)?;
    }
    Ok(())
}

/// Solves `(lambda^2 - Laplacian) A = (...)` for the three gauge components.
pub fn solve_static_gauge(
    j0: &ScalarField,
    j1: &ScalarField,
    j2: &ScalarField,
    lambda: f64,
) -> Result<GaugeFields> {
    check_lambda(lambda)?;
    check_currents(j0, j1, j2)?;
    let grid = j0.grid();
    let hats = [j0.to_fourier(), j1.to_fourier(), j2.to_fourier()];
    let [a0, a1, a2] = solve_fourier(grid, lambda, [hats[0].data(), hats[1].data(), hats[2].data()]);
    let phys = |v: Vec<Complex64>| -> Result<ScalarField> {
        Ok(ScalarField::from_components(grid, Representation::Fourier, [v])?.into_physical())
    };
    Ok(GaugeFields {
        a0: phys(a0)?,
        a1: phys(a1)?,
        a2: phys(a2)?,
        lambda,
    })
}

/// Evaluates the residuals of the static system for a reconstructed field.
pub fn gauge_residual(
    a: &GaugeFields,
    j0: &ScalarField,
    j1: &ScalarField,
    j2: &ScalarField,
) -> Result<GaugeResidual> {
    check_currents(j0, j1, j2)?;
    for f in [&a.a0, &a.a1, &a.a2] {
        f.expect(Representation::Physical)?;
        j0.same_grid(f)?;
    }
    let grid = j0.grid();
    let n = grid.n();
    let kd = derivative_wavenumbers(grid);
    let lambda = a.lambda;
    let [a0, a1, a2] = [a.a0.to_fourier(), a.a1.to_fourier(), a.a2.to_fourier()];
    let [c0, c1, c2] = [j0.to_fourier(), j1.to_fourier(), j2.to_fourier()];
    let sums = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let d1 = Complex64::new(0.0, kd[idx / n]);
            let d2 = Complex64::new(0.0, kd[idx % n]);
            let (x0, x1, x2) = (a0.data()[idx], a1.data()[idx], a2.data()[idx]);
            let r = [
                d1 * x0 + lambda * x2 - c2.data()[idx],
                d2 * x0 - lambda * x1 + c1.data()[idx],
                d1 * x2 - d2 * x1 + lambda * x0 + c0.data()[idx],
                d1 * x1 + d2 * x2,
            ];
            r.map(|z| z.norm_sqr())
        })
        .reduce(|| [0.0; 4], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    let norm = |s: f64| grid.length() * s.sqrt();
    Ok(GaugeResidual {
        curl1: norm(sums[0]),
        curl2: norm(sums[1]),
        charge: norm(sums[2]),
        divergence: norm(sums[3]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(32, 2.0 * PI).unwrap()
    }

    fn zero() -> ScalarField {
        ScalarField::zeros(grid(), Representation::Physical)
    }

    fn max_diff(a: &ScalarField, f: impl Fn(f64, f64) -> f64) -> f64 {
        let g = a.grid();
        let n = g.n();
        (0..g.len())
            .map(|idx| (a.data()[idx] - f(g.position(idx / n), g.position(idx % n))).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_current() {
        let a = solve_static_gauge(&zero(), &zero(), &zero(), 1.0).unwrap();
        for f in [&a.a0, &a.a1, &a.a2] {
            assert_eq!(f.max_abs(), 0.0);
        }
        let r = gauge_residual(&a, &zero(), &zero(), &zero()).unwrap();
        assert_eq!(r, GaugeResidual::default());
    }

    #[test]
    fn cosine_charge() {
        let j0 = ScalarField::from_scalar_fn(grid(), |x, _| x.cos());
        let a = solve_static_gauge(&j0, &zero(), &zero(), 1.0).unwrap();
        assert!(max_diff(&a.a0, |x, _| -x.cos() / 2.0) < 1e-13);
        assert!(max_diff(&a.a1, |_, _| 0.0) < 1e-13);
        assert!(max_diff(&a.a2, |x, _| -x.sin() / 2.0) < 1e-13);
        let r = gauge_residual(&a, &j0, &zero(), &zero()).unwrap();
        let scale = j0.l2_norm();
        assert!(r.curl1 <= 1e-11 * scale && r.curl2 <= 1e-11 * scale && r.charge <= 1e-11 * scale);
    }

    #[test]
    fn constant_spatial_current() {
        let c = 0.7;
        let j1 = ScalarField::from_scalar_fn(grid(), |_, _| c);
        for lambda in [1.0, 2.5] {
            let a = solve_static_gauge(&zero(), &j1, &zero(), lambda).unwrap();
            assert!(max_diff(&a.a1, |_, _| c / lambda) < 1e-14);
            assert!(a.a0.max_abs() < 1e-14 && a.a2.max_abs() < 1e-14);
        }
    }

    #[test]
    fn divergent_current_violates_curl_equations() {
        // div J = cos(x1) only varies along x1, so only the second curl
        // equation picks it up
        let j1 = ScalarField::from_scalar_fn(grid(), |x, _| x.sin());
        let a = solve_static_gauge(&zero(), &j1, &zero(), 1.0).unwrap();
        let r = gauge_residual(&a, &zero(), &j1, &zero()).unwrap();
        assert!(r.curl1 < 1e-12);
        assert!(r.curl2 > 1e-3);
        assert!(r.charge < 1e-12);

        let j1 = ScalarField::from_scalar_fn(grid(), |x, y| (x + y).sin());
        let a = solve_static_gauge(&zero(), &j1, &zero(), 1.0).unwrap();
        let r = gauge_residual(&a, &zero(), &j1, &zero()).unwrap();
        assert!(r.curl1 > 1e-3 && r.curl2 > 1e-3);
        assert!(r.charge < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        for l in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                solve_static_gauge(&zero(), &zero(), &zero(), l),
                Err(Error::Parameter(_))
            ));
        }
        let other = ScalarField::zeros(Grid::new(16, 1.0).unwrap(), Representation::Physical);
        assert!(solve_static_gauge(&zero(), &other, &zero(), 1.0).is_err());
    }

    #[test]
    fn linearity_and_reality() {
        let g = Grid::new(32, 9.0).unwrap();
        let f = |s: f64| ScalarField::from_scalar_fn(g, move |x, y| ((x - s) * (x - s) + y * y).sin().exp() - 1.0);
        let (ja, jb) = ([f(0.0), f(1.0), f(2.0)], [f(3.0), f(-1.0), f(0.5)]);
        let (a, b) = (2.0, -0.3);
        let mix: Vec<ScalarField> = (0..3)
            .map(|i| {
                let mut m = ja[i].scaled(Complex64::new(a, 0.0));
                m.axpy(Complex64::new(b, 0.0), &jb[i]).unwrap();
                m
            })
            .collect();
        let ga = solve_static_gauge(&ja[0], &ja[1], &ja[2], 1.3).unwrap();
        let gb = solve_static_gauge(&jb[0], &jb[1], &jb[2], 1.3).unwrap();
        let gm = solve_static_gauge(&mix[0], &mix[1], &mix[2], 1.3).unwrap();
        for (x, y, z) in [(&ga.a0, &gb.a0, &gm.a0), (&ga.a1, &gb.a1, &gm.a1), (&ga.a2, &gb.a2, &gm.a2)] {
            let mut combo = x.scaled(Complex64::new(a, 0.0));
            combo.axpy(Complex64::new(b, 0.0), y).unwrap();
            assert!(combo.sub(z).unwrap().l2_norm() <= 1e-12 * z.l2_norm());
            assert!(z.max_abs_imag() <= 1e-12 * z.max_abs());
        }
        assert_abs_diff_eq!(gm.lambda, 1.3);
    }
}
