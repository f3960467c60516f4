//! Profile dynamics for `(-i d_t + alpha . D + beta) psi = N(psi)`.
//!
//! The unknowns are the profiles `f_theta = exp(theta i t <D>) Pi_theta psi`,
//! so that `psi = sum_theta exp(-theta i t <D>) f_theta` and
//! `d_t f_theta = exp(theta i t <D>) i Pi_theta N(psi)`.
//!
//! The cubic term is `N = -(A0 + A1 alpha^1 + A2 alpha^2) psi` with the
//! gauge fields of the static solve; expanding the gauge fields gives the
//! two trilinear forms `N1 + N2`, which are also implemented directly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirac::{density, ALPHA1, ALPHA2};
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Representation, ScalarField, SpinorField};
use crate::gauge::{check_lambda, derivative_wavenumbers, solve_static_gauge};
use crate::grid::{bracket, Grid};
use crate::spectral::{dealias_in_place, kept_slot, wavenumbers};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// How the cubic term is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// Through the static gauge fields.
    #[default]
    Gauge,
    /// Through the two trilinear forms `N1 + N2`.
    Direct,
    /// Free flow.
    Off,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileState {
    pub f_plus: SpinorField,
    pub f_minus: SpinorField,
    pub t: f64,
    pub lambda: f64,
}

/// Modulated Gaussian `eps exp(-|x|^2 / 2w^2) exp(i k0 . x) v` with `|v| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub epsilon: f64,
    pub width: f64,
    pub carrier: [f64; 2],
    pub direction: [Complex64; 2],
}

impl InitialData {
    pub fn sample(&self, grid: Grid) -> Result<SpinorField> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::Parameter(format!("width must be positive, got {}", self.width)));
        }
        let norm = (self.direction[0].norm_sqr() + self.direction[1].norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Parameter("spinor direction must be nonzero".into()));
        }
        let v = self.direction.map(|z| z / norm);
        let (eps, w2, k0) = (self.epsilon, 2.0 * self.width * self.width, self.carrier);
        Ok(SpinorField::from_fn_physical(grid, |x, y| {
            let a = eps * (-(x * x + y * y) / w2).exp();
            let z = Complex64::from_polar(a, k0[0] * x + k0[1] * y);
            [z * v[0], z * v[1]]
        }))
    }
}

impl ProfileState {
    /// Splits dealiased initial data into its two projected profiles at `t = 0`.
    pub fn from_initial(grid: Grid, data: &InitialData, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let mut psi = data.sample(grid)?.into_fourier();
        dealias_in_place(&mut psi);
        Self::from_spinor(&psi, 0.0, lambda)
    }

    /// Profiles of a Fourier-space spinor observed at time `t`.
    pub fn from_spinor(psi_hat: &SpinorField, t: f64, lambda: f64) -> Result<Self> {
        psi_hat.expect(Representation::Fourier)?;
        let f_plus = crate::spectral::free_evolve(&crate::dirac::project(psi_hat, 1)?, -t, 1)?;
        let f_minus = crate::spectral::free_evolve(&crate::dirac::project(psi_hat, -1)?, -t, -1)?;
        Ok(Self { f_plus, f_minus, t, lambda })
    }

    pub fn grid(&self) -> Grid {
        self.f_plus.grid()
    }

    pub fn profile(&self, theta: i8) -> &SpinorField {
        if theta > 0 {
            &self.f_plus
        } else {
            &self.f_minus
        }
    }

    /// `psi_hat(t) = sum_theta exp(-theta i t <xi>) f_theta`.
    pub fn psi_hat(&self) -> SpinorField {
        let phases = crate::spectral::propagator_phases(self.grid(), self.t, 1);
        let mut out = self.f_plus.clone();
        for (c, o) in out.components_mut().iter_mut().enumerate() {
            let m = &self.f_minus.components()[c];
            o.par_iter_mut()
                .zip(m.par_iter())
                .zip(phases.par_iter())
                .for_each(|((a, b), p)| *a = *a * p + *b * p.conj());
        }
        out
    }

    /// Physical-space `psi(t)`.
    pub fn psi(&self) -> SpinorField {
        self.psi_hat().into_physical()
    }

    /// `psi_theta(t) = exp(-theta i t <D>) f_theta`, in Fourier space.
    pub fn psi_theta_hat(&self, theta: i8) -> SpinorField {
        let mut out = self.profile(theta).clone();
        crate::spectral::free_evolve_in_place(&mut out, self.t, theta);
        out
    }

    /// `L^2` mass, evaluated from the synthesized field.
    pub fn mass(&self) -> f64 {
        self.psi().l2_norm().powi(2)
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    Plain,
    D1,
    D2,
}

/// `(lambda^2 - Laplacian)^{-1}`, optionally composed with one derivative,
/// applied to a physical-space density.
fn screened(grid: Grid, lambda: f64, data: &[Complex64], kernel: Kernel) -> Vec<Complex64> {
    let n = grid.n();
    let kd = derivative_wavenumbers(grid);
    let l2 = lambda * lambda;
    let plan = fft::plan(n);
    let mut buf = data.to_vec();
    plan.forward(&mut buf);
    buf.par_iter_mut().enumerate().for_each(|(idx, z)| {
        let (k1, k2) = (kd[idx / n], kd[idx % n]);
        let g = 1.0 / (l2 + k1 * k1 + k2 * k2);
        *z *= match kernel {
            Kernel::Plain => Complex64::new(g, 0.0),
            Kernel::D1 => Complex64::new(0.0, g * k1),
            Kernel::D2 => Complex64::new(0.0, g * k2),
        };
    });
    plan.inverse(&mut buf);
    buf
}

fn check_triple(psi: &SpinorField, phi: &SpinorField, chi: &SpinorField) -> Result<()> {
    for f in [psi, phi, chi] {
        f.expect(Representation::Physical)?;
        psi.same_grid(f)?;
    }
    Ok(())
}

fn densities(phi: &SpinorField, chi: &SpinorField) -> [Vec<Complex64>; 3] {
    let [p0, p1] = phi.components();
    let [c0, c1] = chi.components();
    std::array::from_fn(|mu| {
        (0..p0.len())
            .into_par_iter()
            .map(|i| density([p0[i], p1[i]], [c0[i], c1[i]], mu))
            .collect()
    })
}

/// `c0 psi + c1 alpha^1 psi + c2 alpha^2 psi` pointwise, then dealiased.
fn combine(psi: &SpinorField, coef: [&[Complex64]; 3]) -> Result<SpinorField> {
    let [s0, s1] = psi.components();
    let out: Vec<[Complex64; 2]> = (0..s0.len())
        .into_par_iter()
        .map(|i| {
            let v = [s0[i], s1[i]];
            let a = ALPHA1.apply(v);
            let b = ALPHA2.apply(v);
            std::array::from_fn(|c| coef[0][i] * v[c] + coef[1][i] * a[c] + coef[2][i] * b[c])
        })
        .collect();
    let comps = std::array::from_fn(|c| out.iter().map(|v| v[c]).collect());
    let mut f = SpinorField::from_components(psi.grid(), Representation::Physical, comps)?.into_fourier();
    dealias_in_place(&mut f);
    Ok(f.into_physical())
}

/// `N1(psi, phi, chi) = lambda G<phi,chi> psi - lambda G<phi,a1 chi> a1 psi
/// - lambda G<phi,a2 chi> a2 psi` with `G = (lambda^2 - Laplacian)^{-1}`.
pub fn nonlinearity_n1(
    psi: &SpinorField,
    phi: &SpinorField,
    chi: &SpinorField,
    lambda: f64,
) -> Result<SpinorField> {
    check_lambda(lambda)?;
    check_triple(psi, phi, chi)?;
    let grid = psi.grid();
    let d = densities(phi, chi);
    let g: Vec<Vec<Complex64>> = d
        .iter()
        .enumerate()
        .map(|(mu, v)| {
            let sign = if mu == 0 { lambda } else { -lambda };
            screened(grid, lambda, v, Kernel::Plain).into_iter().map(|z| z * sign).collect()
        })
        .collect();
    combine(psi, [&g[0], &g[1], &g[2]])
}

/// `N2(psi, phi, chi) = G(d1<phi,a2 chi> - d2<phi,a1 chi>) psi
/// + G d2<phi,chi> a1 psi - G d1<phi,chi> a2 psi`.
pub fn nonlinearity_n2(
    psi: &SpinorField,
    phi: &SpinorField,
    chi: &SpinorField,
    lambda: f64,
) -> Result<SpinorField> {
    check_lambda(lambda)?;
    check_triple(psi, phi, chi)?;
    let grid = psi.grid();
    let [d0, d1, d2] = densities(phi, chi);
    let a = screened(grid, lambda, &d2, Kernel::D1);
    let b = screened(grid, lambda, &d1, Kernel::D2);
    let scalar: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let c1 = screened(grid, lambda, &d0, Kernel::D2);
    let c2: Vec<Complex64> = screened(grid, lambda, &d0, Kernel::D1).into_iter().map(|z| -z).collect();
    combine(psi, [&scalar, &c1, &c2])
}

/// Gauge-coupled form `-(A0 + A1 alpha^1 + A2 alpha^2) psi`.
pub fn nonlinearity_gauge(psi: &SpinorField, lambda: f64) -> Result<SpinorField> {
    check_lambda(lambda)?;
    psi.expect(Representation::Physical)?;
    let j: Vec<ScalarField> = (0..3)
        .map(|mu| crate::dirac::current(psi, mu))
        .collect::<Result<_>>()?;
    let a = solve_static_gauge(&j[0], &j[1], &j[2], lambda)?;
    let neg = |f: &ScalarField| -> Vec<Complex64> { f.data().iter().map(|z| -z.re).map(Into::into).collect() };
    let (c0, c1, c2) = (neg(&a.a0), neg(&a.a1), neg(&a.a2));
    combine(psi, [&c0, &c1, &c2])
}

/// Full cubic term `N1(psi,psi,psi) + N2(psi,psi,psi)`.
pub fn nonlinearity_direct(psi: &SpinorField, lambda: f64) -> Result<SpinorField> {
    let mut out = nonlinearity_n1(psi, psi, psi, lambda)?;
    out.axpy(Complex64::new(1.0, 0.0), &nonlinearity_n2(psi, psi, psi, lambda)?)?;
    Ok(out)
}

/// Per-mode constants used by the right-hand side.
#[derive(Clone, Copy, Debug, Default)]
struct Mode {
    /// `<xi>`
    bracket: f64,
    /// `xi / <xi>` and `1 / <xi>` for the projections.
    unit: [f64; 3],
    /// Derivative wavenumbers with the Nyquist slot zeroed.
    kd: [f64; 2],
    /// `(lambda^2 + |kd|^2)^{-1}`
    green: f64,
    /// Slot of `-xi`.
    neg: usize,
    keep: bool,
}

type Pair = [Vec<Complex64>; 2];

/// Profile right-hand side and RK4 stepper with per-grid tables cached.
#[derive(Clone, Debug)]
pub struct Evolver {
    grid: Grid,
    lambda: f64,
    mode: Nonlinearity,
    modes: Vec<Mode>,
}

impl Evolver {
    pub fn new(grid: Grid, lambda: f64, mode: Nonlinearity) -> Result<Self> {
        check_lambda(lambda)?;
        let n = grid.n();
        let ks = wavenumbers(grid);
        let kd = derivative_wavenumbers(grid);
        let modes = (0..grid.len())
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let b = bracket(ks[i], ks[j]);
                let d = [kd[i], kd[j]];
                Mode {
                    bracket: b,
                    unit: [ks[i] / b, ks[j] / b, 1.0 / b],
                    kd: d,
                    green: 1.0 / (lambda * lambda + d[0] * d[0] + d[1] * d[1]),
                    neg: ((n - i) % n) * n + (n - j) % n,
                    keep: kept_slot(grid, i) && kept_slot(grid, j),
                }
            })
            .collect();
        Ok(Self { grid, lambda, mode, modes })
    }

    pub fn for_state(state: &ProfileState, mode: Nonlinearity) -> Result<Self> {
        Self::new(state.grid(), state.lambda, mode)
    }

    pub fn mode(&self) -> Nonlinearity {
        self.mode
    }

    /// `exp(-i t <xi>)` per mode.
    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.modes
            .par_iter()
            .map(|m| Complex64::from_polar(1.0, -t * m.bracket))
            .collect()
    }

    /// `N(psi)` in Fourier space, dealiased, through the gauge fields.
    /// Real densities are paired into single complex transforms.
    fn cubic_gauge(&self, psi: &Pair) -> Pair {
        let plan = fft::plan(self.grid.n());
        let len = self.grid.len();
        let (s0, s1) = (&psi[0], &psi[1]);
        let mut z01 = vec![Complex64::default(); len];
        let mut z2 = vec![Complex64::default(); len];
        z01.par_iter_mut()
            .zip(z2.par_iter_mut())
            .zip(s0.par_iter().zip(s1.par_iter()))
            .for_each(|((p, q), (a, b))| {
                let cross = a.conj() * b;
                *p = Complex64::new(a.norm_sqr() + b.norm_sqr(), 2.0 * cross.re);
                *q = Complex64::new(2.0 * cross.im, 0.0);
            });
        plan.forward(&mut z01);
        plan.forward(&mut z2);
        let lambda = self.lambda;
        let mut a01 = vec![Complex64::default(); len];
        let mut a2 = vec![Complex64::default(); len];
        a01.par_iter_mut()
            .zip(a2.par_iter_mut())
            .enumerate()
            .for_each(|(idx, (p, q))| {
                let m = &self.modes[idx];
                let (u, w) = (z01[idx], z01[m.neg].conj());
                let j0 = (u + w) * 0.5;
                let j1 = (u - w) * Complex64::new(0.0, -0.5);
                let j2 = z2[idx];
                let d1 = Complex64::new(0.0, m.kd[0]);
                let d2 = Complex64::new(0.0, m.kd[1]);
                let x0 = (-lambda * j0 + d2 * j1 - d1 * j2) * m.green;
                let x1 = (lambda * j1 - d2 * j0) * m.green;
                *p = x0 + I * x1;
                *q = (lambda * j2 + d1 * j0) * m.green;
            });
        plan.inverse(&mut a01);
        plan.inverse(&mut a2);
        // reuse the density buffers for -(A0 + A1 alpha^1 + A2 alpha^2) psi
        let (mut n0, mut n1) = (z01, z2);
        n0.par_iter_mut()
            .zip(n1.par_iter_mut())
            .zip(s0.par_iter().zip(s1.par_iter()))
            .zip(a01.par_iter().zip(a2.par_iter()))
            .for_each(|(((p, q), (u, v)), (x01, x2))| {
                let (p0, p1, p2) = (x01.re, x01.im, x2.re);
                let w = Complex64::new(p1, -p2);
                *p = -(p0 * u + w * v);
                *q = -(w.conj() * u + p0 * v);
            });
        plan.forward(&mut n0);
        plan.forward(&mut n1);
        [n0, n1]
    }

    fn cubic_direct(&self, psi: Pair) -> Result<Pair> {
        let field = SpinorField::from_components(self.grid, Representation::Physical, psi)?;
        Ok(nonlinearity_direct(&field, self.lambda)?.into_fourier().into_components())
    }

    /// Time derivatives `[d f_plus, d f_minus]` given `exp(-i t <xi>)`.
    fn rhs_raw(&self, phases: &[Complex64], fp: &Pair, fm: &Pair) -> Result<[Pair; 2]> {
        let len = self.grid.len();
        let zeros = || [vec![Complex64::default(); len], vec![Complex64::default(); len]];
        if self.mode == Nonlinearity::Off {
            return Ok([zeros(), zeros()]);
        }
        let plan = fft::plan(self.grid.n());
        let psi: Pair = std::array::from_fn(|c| {
            let mut v: Vec<Complex64> = fp[c]
                .par_iter()
                .zip(fm[c].par_iter())
                .zip(phases.par_iter())
                .map(|((a, b), p)| a * p + b * p.conj())
                .collect();
            plan.inverse(&mut v);
            v
        });
        let nh = match self.mode {
            Nonlinearity::Gauge => self.cubic_gauge(&psi),
            Nonlinearity::Direct => self.cubic_direct(psi)?,
            Nonlinearity::Off => unreachable!(),
        };
        let [mut p0, mut p1] = zeros();
        let [mut m0, mut m1] = zeros();
        p0.par_iter_mut()
            .zip(p1.par_iter_mut())
            .zip(m0.par_iter_mut().zip(m1.par_iter_mut()))
            .enumerate()
            .for_each(|(idx, ((a0, a1), (b0, b1)))| {
                let m = &self.modes[idx];
                if !m.keep {
                    return;
                }
                let (u, v) = (nh[0][idx], nh[1][idx]);
                // (alpha . xi + beta) / <xi> applied to (u, v)
                let [e1, e2, e0] = m.unit;
                let off = Complex64::new(e1, -e2);
                let w0 = e0 * u + off * v;
                let w1 = off.conj() * u - e0 * v;
                let (q0, q1) = ((u + w0) * 0.5, (v + w1) * 0.5);
                let ep = I * phases[idx].conj();
                let em = I * phases[idx];
                *a0 = ep * q0;
                *a1 = ep * q1;
                *b0 = em * (u - q0);
                *b1 = em * (v - q1);
            });
        Ok([[p0, p1], [m0, m1]])
    }

    pub fn rhs(&self, state: &ProfileState) -> Result<(SpinorField, SpinorField)> {
        self.check_state(state)?;
        let phases = self.phases(state.t);
        let [a, b] = self.rhs_raw(&phases, state.f_plus.components(), state.f_minus.components())?;
        Ok((
            SpinorField::from_components(self.grid, Representation::Fourier, a)?,
            SpinorField::from_components(self.grid, Representation::Fourier, b)?,
        ))
    }

    fn check_state(&self, state: &ProfileState) -> Result<()> {
        state.f_plus.expect(Representation::Fourier)?;
        state.f_minus.expect(Representation::Fourier)?;
        if state.grid() != self.grid || state.f_minus.grid() != self.grid {
            return Err(Error::GridMismatch("state and evolver grids differ".into()));
        }
        if state.lambda != self.lambda {
            return Err(Error::Parameter(format!(
                "state coupling {} differs from evolver coupling {}",
                state.lambda, self.lambda
            )));
        }
        Ok(())
    }

    /// One classical RK4 step. `dt` may be negative to integrate backwards.
    pub fn step(&self, state: &ProfileState, dt: f64) -> Result<ProfileState> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::Parameter(format!("time step must be finite and nonzero, got {dt}")));
        }
        self.check_state(state)?;
        let t = state.t;
        let y0 = [state.f_plus.components(), state.f_minus.components()];
        if self.mode == Nonlinearity::Off {
            return Ok(ProfileState { t: t + dt, ..state.clone() });
        }
        let shifted = |k: &[Pair; 2], h: f64| -> [Pair; 2] {
            std::array::from_fn(|th| {
                std::array::from_fn(|c| {
                    y0[th][c]
                        .par_iter()
                        .zip(k[th][c].par_iter())
                        .map(|(y, d)| y + d * h)
                        .collect()
                })
            })
        };
        let stage = |s: usize, tt: f64, ph: &[Complex64], y: [&Pair; 2]| -> Result<[Pair; 2]> {
            let k = self.rhs_raw(ph, y[0], y[1])?;
            let finite = k
                .iter()
                .flatten()
                .all(|c| c.par_iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            if finite {
                Ok(k)
            } else {
                Err(Error::Divergence { stage: s, t: tt })
            }
        };
        let (th, te) = (t + 0.5 * dt, t + dt);
        let (ph0, ph1, ph2) = (self.phases(t), self.phases(th), self.phases(te));
        let k1 = stage(1, t, &ph0, y0)?;
        let y = shifted(&k1, 0.5 * dt);
        let k2 = stage(2, th, &ph1, [&y[0], &y[1]])?;
        let y = shifted(&k2, 0.5 * dt);
        let k3 = stage(3, th, &ph1, [&y[0], &y[1]])?;
        let y = shifted(&k3, dt);
        let k4 = stage(4, te, &ph2, [&y[0], &y[1]])?;
        let w = dt / 6.0;
        let next: [Pair; 2] = std::array::from_fn(|th| {
            std::array::from_fn(|c| {
                y0[th][c]
                    .par_iter()
                    .zip(k1[th][c].par_iter().zip(k2[th][c].par_iter()))
                    .zip(k3[th][c].par_iter().zip(k4[th][c].par_iter()))
                    .map(|((y, (a, b)), (c3, d))| y + (a + 2.0 * (b + c3) + d) * w)
                    .collect()
            })
        });
        let [a, b] = next;
        Ok(ProfileState {
            f_plus: SpinorField::from_components(self.grid, Representation::Fourier, a)?,
            f_minus: SpinorField::from_components(self.grid, Representation::Fourier, b)?,
            t: te,
            lambda: self.lambda,
        })
    }
}

/// Time derivative of both profiles.
pub fn rhs_profile(state: &ProfileState, mode: Nonlinearity) -> Result<(SpinorField, SpinorField)> {
    Evolver::for_state(state, mode)?.rhs(state)
}

/// One RK4 step of the profile system.
pub fn step_rk4(state: &ProfileState, dt: f64, mode: Nonlinearity) -> Result<ProfileState> {
    Evolver::for_state(state, mode)?.step(state, dt)
}
