use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::field::{Representation, ScalarField, SpinorField};
use crate::grid::bracket;

const O: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[O, O], [O, O]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, O], [O, ONE]]);

    pub fn scale(self, a: Complex64) -> Mat2 {
        let m = self.0;
        Mat2([[a * m[0][0], a * m[0][1]], [a * m[1][0], a * m[1][1]]])
    }

    pub fn adjoint(self) -> Mat2 {
        let m = self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn apply(self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Largest entry magnitude.
    pub fn max_abs(self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, r: Mat2) -> Mat2 {
        let (a, b) = (self.0, r.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, r: Mat2) -> Mat2 {
        self + r.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        let (a, b) = (self.0, r.0);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Mat2([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }
}

pub const GAMMA0: Mat2 = Mat2([[ONE, O], [O, Complex64::new(-1.0, 0.0)]]);
pub const GAMMA1: Mat2 = Mat2([[O, ONE], [Complex64::new(-1.0, 0.0), O]]);
pub const GAMMA2: Mat2 = Mat2([[O, Complex64::new(0.0, -1.0)], [Complex64::new(0.0, -1.0), O]]);

pub const BETA: Mat2 = GAMMA0;
/// `gamma0 gamma1`.
pub const ALPHA1: Mat2 = Mat2([[O, ONE], [ONE, O]]);
/// `gamma0 gamma2`.
pub const ALPHA2: Mat2 = Mat2([[O, Complex64::new(0.0, -1.0)], [I, O]]);

/// `alpha^mu` for `mu = 0, 1, 2`, with `alpha^0 = I`.
pub fn alpha(mu: usize) -> Mat2 {
    match mu {
        0 => Mat2::IDENTITY,
        1 => ALPHA1,
        2 => ALPHA2,
        _ => panic!("alpha index {mu} out of range"),
    }
}

/// Free Dirac symbol `alpha . xi + beta`.
pub fn dirac_symbol(xi: [f64; 2]) -> Mat2 {
    let xi1 = Complex64::new(xi[0], 0.0);
    let xi2 = Complex64::new(xi[1], 0.0);
    ALPHA1.scale(xi1) + ALPHA2.scale(xi2) + BETA
}

/// `Pi_theta(xi) = (I + theta <xi>^{-1} (alpha . xi + beta)) / 2`.
pub fn projection_symbol(xi: [f64; 2], theta: i8) -> Mat2 {
    let s = f64::from(theta.signum()) / bracket(xi[0], xi[1]);
    let x = xi[0] * s;
    let y = xi[1] * s;
    Mat2([
        [Complex64::new(0.5 * (1.0 + s), 0.0), Complex64::new(0.5 * x, -0.5 * y)],
        [Complex64::new(0.5 * x, 0.5 * y), Complex64::new(0.5 * (1.0 - s), 0.0)],
    ])
}

/// Applies `Pi_theta(D)` modewise.
pub fn project(psi: &SpinorField, theta: i8) -> Result<SpinorField> {
    psi.expect(Representation::Fourier)?;
    let mut out = psi.clone();
    project_in_place(&mut out, theta);
    Ok(out)
}

pub(crate) fn project_in_place(psi: &mut SpinorField, theta: i8) {
    let grid = psi.grid();
    let n = grid.n();
    let ks: Vec<f64> = (0..n).map(|i| grid.wavenumber(i)).collect();
    let [a, b] = psi.components_mut();
    a.par_iter_mut()
        .zip(b.par_iter_mut())
        .enumerate()
        .for_each(|(idx, (u, v))| {
            let p = projection_symbol([ks[idx / n], ks[idx % n]], theta);
            [*u, *v] = p.apply([*u, *v]);
        });
}

/// Pointwise `<phi, alpha^mu chi>` for two spinor samples.
#[inline]
pub fn density(phi: [Complex64; 2], chi: [Complex64; 2], mu: usize) -> Complex64 {
    let (a, b) = (phi[0].conj(), phi[1].conj());
    match mu {
        0 => a * chi[0] + b * chi[1],
        1 => a * chi[1] + b * chi[0],
        2 => -I * a * chi[1] + I * b * chi[0],
        _ => panic!("density index {mu} out of range"),
    }
}

/// Sesquilinear density `<phi, alpha^mu chi>` of two physical-space spinors.
pub fn sesquilinear(phi: &SpinorField, chi: &SpinorField, mu: usize) -> Result<ScalarField> {
    phi.expect(Representation::Physical)?;
    chi.expect(Representation::Physical)?;
    phi.same_grid(chi)?;
    let [p0, p1] = phi.components();
    let [c0, c1] = chi.components();
    let data: Vec<Complex64> = (0..p0.len())
        .into_par_iter()
        .map(|i| density([p0[i], p1[i]], [c0[i], c1[i]], mu))
        .collect();
    ScalarField::from_components(phi.grid(), Representation::Physical, [data])
}

/// Current `J^mu = <psi, alpha^mu psi>`, stored as a real field.
pub fn current(psi: &SpinorField, mu: usize) -> Result<ScalarField> {
    let mut j = sesquilinear(psi, psi, mu)?;
    j.data_mut().iter_mut().for_each(|z| z.im = 0.0);
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn alphas_are_gamma_products() {
        assert_eq!(GAMMA0 * GAMMA1, ALPHA1);
        assert_eq!(GAMMA0 * GAMMA2, ALPHA2);
        for m in [ALPHA1, ALPHA2] {
            assert_eq!(m.adjoint(), m);
            assert_eq!(m * m, Mat2::IDENTITY);
        }
    }

    #[test]
    fn projection_at_origin_and_unit_xi() {
        assert_eq!(projection_symbol([0.0, 0.0], 1), Mat2([[c(1.0, 0.0), O], [O, O]]));
        assert_eq!(projection_symbol([0.0, 0.0], -1), Mat2([[O, O], [O, c(1.0, 0.0)]]));
        let p = projection_symbol([1.0, 0.0], 1);
        let r = 0.5 / 2f64.sqrt();
        let expect = [[0.5 + r, r], [r, 0.5 - r]];
        for (row, want) in p.0.iter().zip(expect) {
            for (z, w) in row.iter().zip(want) {
                assert_abs_diff_eq!(z.re, w, epsilon = 1e-15);
                assert_abs_diff_eq!(z.im, 0.0);
            }
        }
        // det 0 and trace 1 give eigenvalues {0, 1}.
        let det = p.0[0][0] * p.0[1][1] - p.0[0][1] * p.0[1][0];
        assert!(det.norm() < 1e-15);
    }

    #[test]
    fn project_constant_spinor() {
        let grid = Grid::new(8, 6.0).unwrap();
        let mut f = SpinorField::zeros(grid, Representation::Fourier);
        f.components_mut()[0][0] = ONE;
        assert_eq!(project(&f, 1).unwrap(), f);
        assert_eq!(project(&f, -1).unwrap().max_abs(), 0.0);
        let phys = f.to_physical();
        assert!(project(&phys, 1).is_err());
    }

    #[test]
    fn current_examples() {
        let up = [ONE, O];
        assert_eq!(density(up, up, 0), ONE);
        assert_eq!(density(up, up, 1), O);
        assert_eq!(density(up, up, 2), O);
        let s = 1.0 / 2f64.sqrt();
        let v = [c(s, 0.0), c(s, 0.0)];
        assert_abs_diff_eq!(density(v, v, 1).re, 1.0, epsilon = 1e-15);
        for mu in 0..3 {
            assert_eq!(density([O, O], [O, O], mu), O);
        }
    }

    #[test]
    fn density_matches_matrix_form() {
        let phi = [c(0.3, -1.2), c(0.7, 0.4)];
        let chi = [c(-0.5, 0.9), c(1.1, -0.2)];
        for mu in 0..3 {
            let a = alpha(mu).apply(chi);
            let expect = phi[0].conj() * a[0] + phi[1].conj() * a[1];
            assert!((density(phi, chi, mu) - expect).norm() < 1e-15);
        }
    }

    fn xi() -> impl Strategy<Value = [f64; 2]> {
        (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(a, b)| [a, b])
    }

    proptest! {
        #[test]
        fn projector_algebra(k in xi()) {
            for th in [1i8, -1] {
                let p = projection_symbol(k, th);
                let q = projection_symbol(k, -th);
                prop_assert!((p * p - p).max_abs() < 1e-13);
                prop_assert!((p * q).max_abs() < 1e-13);
                prop_assert!((p + q - Mat2::IDENTITY).max_abs() < 1e-13);
                prop_assert!((p.adjoint() - p).max_abs() < 1e-13);
                prop_assert!((p.trace() - ONE).norm() < 1e-13);
                let lhs = p * dirac_symbol(k) * p;
                let rhs = p.scale(c(f64::from(th) * bracket(k[0], k[1]), 0.0));
                prop_assert!((lhs - rhs).max_abs() < 1e-12 * bracket(k[0], k[1]));
            }
        }

        #[test]
        fn current_bounded_by_charge(a in -2.0f64..2.0, b in -2.0f64..2.0, p in -2.0f64..2.0, q in -2.0f64..2.0) {
            let v = [c(a, b), c(p, q)];
            let j0 = density(v, v, 0);
            let j1 = density(v, v, 1);
            let j2 = density(v, v, 2);
            prop_assert!(j0.re >= 0.0);
            prop_assert!(j1.im.abs() < 1e-14 && j2.im.abs() < 1e-14);
            prop_assert!(j1.re.powi(2) + j2.re.powi(2) <= j0.re.powi(2) * (1.0 + 1e-12) + 1e-14);
        }
    }
}
