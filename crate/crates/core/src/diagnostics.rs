use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirac::density;
use crate::dynamics::{Evolver, ProfileState};
use crate::error::{Error, Result};
use crate::field::{Field, Representation, SpinorField};
use crate::gauge::{gauge_residual, solve_static_gauge, GaugeResidual};
use crate::grid::{bracket, Grid};
use crate::spectral::{wavenumbers, DyadicIndex};

/// Japanese bracket of a time.
#[inline]
pub fn time_bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

fn mode_weights(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
    let n = grid.n();
    let ks = wavenumbers(grid);
    (0..grid.len())
        .into_par_iter()
        .map(|idx| f(ks[idx / n], ks[idx % n]))
        .collect()
}

/// `sqrt(sum_k w(k)^2 |c_k|^2)` scaled to the continuum `L^2` norm.
fn weighted_l2<const C: usize>(field: &Field<C>, w: &[f64]) -> f64 {
    let s: f64 = field
        .components()
        .iter()
        .map(|c| c.par_iter().zip(w.par_iter()).map(|(z, w)| w * w * z.norm_sqr()).sum::<f64>())
        .sum();
    field.grid().length() * s.sqrt()
}

/// `||<D>^s f||_{L^2}`.
pub fn sobolev_norm<const C: usize>(f: &Field<C>, s: f64) -> Result<f64> {
    f.expect(Representation::Fourier)?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Parameter(format!("Sobolev index must be >= 0, got {s}")));
    }
    let w = mode_weights(f.grid(), |a, b| bracket(a, b).powf(s));
    Ok(weighted_l2(f, &w))
}

/// `sqrt(||f||_{H^s}^2 + sum_j ||x_j f||_{H^s}^2)` with the centered
/// coordinate of the periodic box (a sawtooth across the box edge).
pub fn weighted_profile_norm(f: &SpinorField, s: f64) -> Result<f64> {
    f.expect(Representation::Fourier)?;
    let grid = f.grid();
    let n = grid.n();
    let base = sobolev_norm(f, s)?;
    let phys = f.to_physical();
    let mut total = base * base;
    for axis in 0..2 {
        let mut xf = phys.clone();
        for c in xf.components_mut().iter_mut() {
            c.par_iter_mut().enumerate().for_each(|(idx, z)| {
                let i = if axis == 0 { idx / n } else { idx % n };
                *z *= grid.position(i);
            });
        }
        total += sobolev_norm(&xf.into_fourier(), s)?.powi(2);
    }
    Ok(total.sqrt())
}

/// `max_x |<D>^k psi(x)|` over the grid.
pub fn sup_norm_w(psi: &SpinorField, k: u32) -> Result<f64> {
    psi.expect(Representation::Fourier)?;
    let mut g = psi.clone();
    if k > 0 {
        crate::spectral::apply_radial_in_place(&mut g, |r| (1.0 + r * r).powf(0.5 * k as f64));
    }
    let g = g.into_physical();
    let [a, b] = g.components();
    Ok(a.par_iter()
        .zip(b.par_iter())
        .map(|(u, v)| (u.norm_sqr() + v.norm_sqr()).sqrt())
        .reduce(|| 0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: [f64; 2],
    pub exponent: f64,
    pub amplitude: f64,
    /// Root-mean-square residual of the fit in `ln(value)`.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares fit of `value = C t^p` on the samples inside `window`.
pub fn fit_decay_exponent(series: &[(f64, f64)], window: [f64; 2]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window[0] && t <= window[1])
        .collect();
    if pts.len() < 8 {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} samples, need at least 8",
            window[0],
            window[1],
            pts.len()
        )));
    }
    if let Some(&(t, v)) = pts.iter().find(|&&(t, v)| !(t > 0.0 && v > 0.0 && v.is_finite())) {
        return Err(Error::Fit(format!("nonpositive sample {v} at t = {t}")));
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("window holds a single distinct time".into()));
    }
    let p = sxy / sxx;
    let c = my - p * mx;
    let residual = (xy.iter().map(|q| (q.1 - c - p * q.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(DecayFit {
        window,
        exponent: p,
        amplitude: c.exp(),
        residual,
        samples: pts.len(),
    })
}

/// Densities `<psi, alpha^mu psi>` for `mu = 0, 1, 2`, in Fourier space.
fn current_hats(psi_hat: &SpinorField) -> [Field<1>; 3] {
    let phys = psi_hat.to_physical();
    let [a, b] = phys.components();
    let grid = psi_hat.grid();
    std::array::from_fn(|mu| {
        let d: Vec<Complex64> = a
            .par_iter()
            .zip(b.par_iter())
            .map(|(u, v)| density([*u, *v], [*u, *v], mu))
            .collect();
        Field::from_components(grid, Representation::Physical, [d])
            .expect("grid-sized density")
            .into_fourier()
    })
}

/// `||P_N <psi_theta, alpha^mu psi_theta>||_{L^2}` for a Fourier-space `psi_theta`.
pub fn bilinear_dyadic_norm(psi_theta: &SpinorField, mu: usize, big_n: DyadicIndex) -> Result<f64> {
    psi_theta.expect(Representation::Fourier)?;
    if mu > 2 {
        return Err(Error::Parameter(format!("current index must be 0, 1 or 2, got {mu}")));
    }
    big_n.check(psi_theta.grid())?;
    let d = current_hats(psi_theta);
    let w = mode_weights(psi_theta.grid(), |a, b| big_n.weight(a.hypot(b)));
    Ok(weighted_l2(&d[mu], &w))
}

/// `||P_N d_t f_theta||_{L^2}`.
pub fn profile_time_derivative_norm(
    state: &ProfileState,
    evolver: &Evolver,
    theta: i8,
    big_n: DyadicIndex,
) -> Result<f64> {
    big_n.check(state.grid())?;
    let (dp, dm) = evolver.rhs(state)?;
    let d = if theta > 0 { dp } else { dm };
    let w = mode_weights(state.grid(), |a, b| big_n.weight(a.hypot(b)));
    Ok(weighted_l2(&d, &w))
}

/// A measured value with an optional stale-measurement warning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    pub warning: Option<String>,
}

/// `||<x>(f(t2) - f(t1))||_{H^5}` for two profile samples of the same sign.
pub fn scattering_increment(
    f1: &SpinorField,
    t1: f64,
    f2: &SpinorField,
    t2: f64,
    horizon: f64,
) -> Result<Measurement> {
    if t2 < t1 {
        return Err(Error::Parameter(format!("increment needs t2 >= t1, got [{t1}, {t2}]")));
    }
    let diff = f2.sub(f1)?;
    let value = weighted_profile_norm(&diff, 5.0)?;
    let warning = (t2 > horizon).then(|| {
        format!("t = {t2} lies past the wrap-around horizon {horizon}; increment is stale")
    });
    Ok(Measurement { value, warning })
}

/// What to measure at each sample time.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsPlan {
    pub sobolev: Vec<f64>,
    pub sup_orders: Vec<u32>,
    pub dyadic: Vec<DyadicIndex>,
    pub horizon: f64,
    pub residuals: bool,
}

/// One time sample of every tracked quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    /// `(s, ||psi||_{H^s})`
    pub sobolev: Vec<(f64, f64)>,
    /// `||<x> f_theta||_{H^5}` for `theta = +, -`.
    pub weighted: [f64; 2],
    /// `(k, ||psi||_{W^{k,inf}})`
    pub sup: Vec<(u32, f64)>,
    /// `(N, max over theta, mu of ||P_N <psi_theta, alpha^mu psi_theta>||)`
    pub bilinear: Vec<(f64, f64)>,
    /// `(N, max over theta of ||P_N d_t f_theta||)`
    pub time_derivative: Vec<(f64, f64)>,
    pub residual: GaugeResidual,
    pub past_horizon: bool,
}

impl DiagnosticsRecord {
    pub fn measure(state: &ProfileState, evolver: &Evolver, plan: &DiagnosticsPlan) -> Result<Self> {
        let grid = state.grid();
        let psi_hat = state.psi_hat();
        let mass = psi_hat.l2_norm().powi(2);
        let sobolev = plan
            .sobolev
            .iter()
            .map(|&s| Ok((s, sobolev_norm(&psi_hat, s)?)))
            .collect::<Result<_>>()?;
        let weighted = [
            weighted_profile_norm(&state.f_plus, 5.0)?,
            weighted_profile_norm(&state.f_minus, 5.0)?,
        ];
        let sup = plan
            .sup_orders
            .iter()
            .map(|&k| Ok((k, sup_norm_w(&psi_hat, k)?)))
            .collect::<Result<_>>()?;

        for n in &plan.dyadic {
            n.check(grid)?;
        }
        let weights: Vec<Vec<f64>> = plan
            .dyadic
            .iter()
            .map(|n| mode_weights(grid, |a, b| n.weight(a.hypot(b))))
            .collect();
        let mut bilinear: Vec<(f64, f64)> = plan.dyadic.iter().map(|n| (n.value(), 0.0)).collect();
        for theta in [1i8, -1] {
            let d = current_hats(&state.psi_theta_hat(theta));
            for (slot, w) in bilinear.iter_mut().zip(&weights) {
                for dm in &d {
                    slot.1 = slot.1.max(weighted_l2(dm, w));
                }
            }
        }
        let (dp, dm) = evolver.rhs(state)?;
        let time_derivative = plan
            .dyadic
            .iter()
            .zip(&weights)
            .map(|(n, w)| (n.value(), weighted_l2(&dp, w).max(weighted_l2(&dm, w))))
            .collect();

        let residual = if plan.residuals {
            let psi = psi_hat.to_physical();
            let j: Vec<_> = (0..3)
                .map(|mu| crate::dirac::current(&psi, mu))
                .collect::<Result<_>>()?;
            let a = solve_static_gauge(&j[0], &j[1], &j[2], state.lambda)?;
            gauge_residual(&a, &j[0], &j[1], &j[2])?
        } else {
            GaugeResidual::default()
        };
        Ok(Self {
            t: state.t,
            mass,
            sobolev,
            weighted,
            sup,
            bilinear,
            time_derivative,
            residual,
            past_horizon: state.t > plan.horizon,
        })
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string(), "mass".to_string()];
        h.extend(self.sobolev.iter().map(|(s, _)| format!("h_s{s}")));
        h.push("weighted_plus".into());
        h.push("weighted_minus".into());
        h.extend(self.sup.iter().map(|(k, _)| format!("sup_k{k}")));
        h.extend(self.bilinear.iter().map(|(n, _)| format!("bilinear_N{n}")));
        h.extend(self.time_derivative.iter().map(|(n, _)| format!("dtf_N{n}")));
        for r in ["res_curl1", "res_curl2", "res_charge", "res_divergence", "past_horizon"] {
            h.push(r.into());
        }
        h
    }

    pub fn values(&self) -> Vec<String> {
        let mut v = vec![self.t.to_string(), self.mass.to_string()];
        v.extend(self.sobolev.iter().map(|x| x.1.to_string()));
        v.extend(self.weighted.iter().map(|x| x.to_string()));
        v.extend(self.sup.iter().map(|x| x.1.to_string()));
        v.extend(self.bilinear.iter().map(|x| x.1.to_string()));
        v.extend(self.time_derivative.iter().map(|x| x.1.to_string()));
        let r = &self.residual;
        for x in [r.curl1, r.curl2, r.charge, r.divergence] {
            v.push(x.to_string());
        }
        v.push(u8::from(self.past_horizon).to_string());
        v
    }

    pub fn is_finite(&self) -> bool {
        let r = &self.residual;
        [self.t, self.mass, self.weighted[0], self.weighted[1], r.curl1, r.curl2, r.charge, r.divergence]
            .iter()
            .chain(self.sobolev.iter().map(|x| &x.1))
            .chain(self.sup.iter().map(|x| &x.1))
            .chain(self.bilinear.iter().map(|x| &x.1))
            .chain(self.time_derivative.iter().map(|x| &x.1))
            .all(|x| x.is_finite())
    }
}

/// Writes records as CSV with a header row of field names.
pub fn write_csv<W: Write>(out: W, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = records.first() {
        w.write_record(first.header())?;
    }
    for r in records {
        w.write_record(r.values())?;
    }
    w.flush()?;
    Ok(())
}

/// Run-relative envelope check: the constant is the weighted value at the
/// start of the window, and the series passes when its maximum over the
/// window stays within `factor` times that constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub name: String,
    pub window: [f64; 2],
    pub constant: f64,
    pub max: f64,
    pub min: f64,
    pub ratio: f64,
    pub factor: f64,
    pub pass: bool,
}

pub fn envelope(name: &str, series: &[(f64, f64)], window: [f64; 2], factor: f64) -> Result<Envelope> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window[0] && t <= window[1])
        .collect();
    let Some(&(_, constant)) = pts.first() else {
        return Err(Error::Fit(format!("envelope {name}: window has no samples")));
    };
    let max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ratio = if constant > 0.0 { max / constant } else { f64::INFINITY };
    Ok(Envelope {
        name: name.into(),
        window,
        constant,
        max,
        min,
        ratio,
        factor,
        pass: constant > 0.0 && max.is_finite() && max <= factor * constant,
    })
}
