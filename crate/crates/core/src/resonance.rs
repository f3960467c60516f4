//! Phase functions of the cubic interaction, their gradients, and sampled
//! resonance classification over dyadic frequency cells.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::bracket;

pub type Vec2 = [f64; 2];

#[inline]
fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
fn br(a: Vec2) -> f64 {
    bracket(a[0], a[1])
}

/// Group velocity `a / <a>`.
#[inline]
pub fn velocity(a: Vec2) -> Vec2 {
    let b = br(a);
    [a[0] / b, a[1] / b]
}

/// Sign tuple `(theta0, theta1, theta2, theta3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhaseSignature(pub [i8; 4]);

impl PhaseSignature {
    pub fn new(signs: [i8; 4]) -> Result<Self> {
        if signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::Parameter(format!("signature entries must be +-1, got {signs:?}")));
        }
        Ok(Self(signs))
    }

    /// All sixteen signatures, `++++` first.
    pub fn all() -> Vec<Self> {
        (0..16u8)
            .map(|b| Self(std::array::from_fn(|i| if b >> (3 - i) & 1 == 0 { 1 } else { -1 })))
            .collect()
    }

    pub fn theta(self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn negated(self) -> Self {
        Self(self.0.map(|s| -s))
    }

    /// `theta0 = theta1`: the gradient in `xi` vanishes at `eta = 0`.
    pub fn null_structure(self) -> bool {
        self.0[0] == self.0[1]
    }

    /// `theta2 != theta3`.
    pub fn resonant_case(self) -> bool {
        self.0[2] != self.0[3]
    }
}

impl fmt::Display for PhaseSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for PhaseSignature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 4 {
            return Err(Error::Parameter(format!("signature {s:?} must have four signs")));
        }
        let mut out = [0i8; 4];
        for (o, c) in out.iter_mut().zip(chars) {
            *o = match c {
                '+' => 1,
                '-' => -1,
                other => return Err(Error::Parameter(format!("bad sign {other:?} in {s:?}"))),
            };
        }
        Ok(Self(out))
    }
}

impl Serialize for PhaseSignature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PhaseSignature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which variables the trilinear phase is written in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// `t0<xi> - t1<xi - eta> - t2<eta + sigma> + t3<sigma>`
    #[default]
    Duhamel,
    /// `t0<xi> - t1<xi + eta> + t2<xi + eta + sigma> - t3<xi + sigma>`
    Shifted,
}

pub fn phase_value(sig: PhaseSignature, conv: PhaseConvention, xi: Vec2, eta: Vec2, sigma: Vec2) -> f64 {
    let t = |i| sig.theta(i);
    match conv {
        PhaseConvention::Duhamel => {
            t(0) * br(xi) - t(1) * br(sub(xi, eta)) - t(2) * br(add(eta, sigma)) + t(3) * br(sigma)
        }
        PhaseConvention::Shifted => {
            let xe = add(xi, eta);
            t(0) * br(xi) - t(1) * br(xe) + t(2) * br(add(xe, sigma)) - t(3) * br(add(xi, sigma))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGradients {
    pub xi: Vec2,
    pub eta: Vec2,
    pub sigma: Vec2,
}

pub fn phase_gradients(
    sig: PhaseSignature,
    conv: PhaseConvention,
    xi: Vec2,
    eta: Vec2,
    sigma: Vec2,
) -> PhaseGradients {
    let t = |i| sig.theta(i);
    let lin = |terms: &[(f64, Vec2)]| -> Vec2 {
        terms.iter().fold([0.0, 0.0], |acc, &(c, v)| [acc[0] + c * v[0], acc[1] + c * v[1]])
    };
    match conv {
        PhaseConvention::Duhamel => {
            let (v0, v1, v2, v3) = (
                velocity(xi),
                velocity(sub(xi, eta)),
                velocity(add(eta, sigma)),
                velocity(sigma),
            );
            PhaseGradients {
                xi: lin(&[(t(0), v0), (-t(1), v1)]),
                eta: lin(&[(t(1), v1), (-t(2), v2)]),
                sigma: lin(&[(-t(2), v2), (t(3), v3)]),
            }
        }
        PhaseConvention::Shifted => {
            let xe = add(xi, eta);
            let (v0, v1, v2, v3) = (
                velocity(xi),
                velocity(xe),
                velocity(add(xe, sigma)),
                velocity(add(xi, sigma)),
            );
            PhaseGradients {
                xi: lin(&[(t(0), v0), (-t(1), v1), (t(2), v2), (-t(3), v3)]),
                eta: lin(&[(-t(1), v1), (t(2), v2)]),
                sigma: lin(&[(t(2), v2), (-t(3), v3)]),
            }
        }
    }
}

/// Bilinear phase `phi_01 = t0<xi> - t1<xi - eta>`.
pub fn phase01(theta0: f64, theta1: f64, xi: Vec2, eta: Vec2) -> f64 {
    theta0 * br(xi) - theta1 * br(sub(xi, eta))
}

/// Bilinear phase `phi_theta(xi, eta) = theta(<eta> - <xi + eta>)`.
pub fn bilinear_phase(theta: f64, xi: Vec2, eta: Vec2) -> f64 {
    theta * (br(eta) - br(add(xi, eta)))
}

/// `grad_eta phi_theta(xi, eta)`.
pub fn bilinear_phase_gradient(theta: f64, xi: Vec2, eta: Vec2) -> Vec2 {
    let (a, b) = (velocity(eta), velocity(add(xi, eta)));
    [theta * (a[0] - b[0]), theta * (a[1] - b[1])]
}

/// Radial range `[lo, hi]` of one frequency variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
    /// Dyadic size used for predicted scalings.
    pub scale: f64,
}

impl Region {
    /// Dyadic annulus `N/2 <= |k| <= 2N`.
    pub fn annulus(n: f64) -> Self {
        Self { lo: 0.5 * n, hi: 2.0 * n, scale: n }
    }

    pub fn ball(r: f64) -> Self {
        Self { lo: 0.0, hi: r, scale: r }
    }

    pub fn origin() -> Self {
        Self { lo: 0.0, hi: 0.0, scale: 0.0 }
    }

    pub fn contains(&self, k: Vec2) -> bool {
        let r = norm(k);
        r >= self.lo * (1.0 - 1e-12) && r <= self.hi * (1.0 + 1e-12)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec2 {
        let r = if self.hi > self.lo { rng.gen_range(self.lo..=self.hi) } else { self.lo };
        let a = rng.gen_range(0.0..2.0 * PI);
        [r * a.cos(), r * a.sin()]
    }
}

/// Frequency cell: one radial region per variable `xi`, `eta`, `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub xi: Region,
    pub eta: Region,
    pub sigma: Region,
}

impl Cell {
    pub fn dyadic(n_xi: f64, n_eta: f64, n_sigma: f64) -> Self {
        Self {
            xi: Region::annulus(n_xi),
            eta: Region::annulus(n_eta),
            sigma: Region::annulus(n_sigma),
        }
    }

    pub fn origin() -> Self {
        Self { xi: Region::origin(), eta: Region::origin(), sigma: Region::origin() }
    }

    /// Intersects every region with `|k| <= limit`.
    pub fn clipped(mut self, limit: f64) -> Result<Self> {
        for (name, r) in [("xi", &mut self.xi), ("eta", &mut self.eta), ("sigma", &mut self.sigma)] {
            r.hi = r.hi.min(limit);
            if r.lo > r.hi {
                return Err(Error::EmptyCell(format!(
                    "{name} range starts at {} beyond the band limit {limit}",
                    r.lo
                )));
            }
        }
        Ok(self)
    }

    /// Largest dyadic size among the three variables.
    pub fn scale(&self) -> f64 {
        self.xi.scale.max(self.eta.scale).max(self.sigma.scale)
    }

    pub fn contains(&self, s: &Sample) -> bool {
        self.xi.contains(s.xi) && self.eta.contains(s.eta) && self.sigma.contains(s.sigma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub xi: Vec2,
    pub eta: Vec2,
    pub sigma: Vec2,
}

/// Uniform polar samples of a cell from a seeded stream.
pub fn sample_cell(cell: &Cell, n_samples: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| Sample {
            xi: cell.xi.sample(&mut rng),
            eta: cell.eta.sample(&mut rng),
            sigma: cell.sigma.sample(&mut rng),
        })
        .collect()
}

/// Threshold on `min |phi|` for the time-nonresonant flag.
pub const TIME_NONRESONANT_THRESHOLD: f64 = 0.5;
/// Fraction of the predicted scaling required for the space-nonresonant flags.
pub const SPACE_NONRESONANT_FRACTION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub signature: PhaseSignature,
    pub convention: PhaseConvention,
    pub cell: Cell,
    pub samples: usize,
    pub seed: Option<u64>,
    pub min_phase: f64,
    pub min_phase01: f64,
    pub min_grad_xi: f64,
    pub min_grad_eta: f64,
    pub min_grad_sigma: f64,
    /// `<N>` for the largest cell size `N`.
    pub predicted_phase: f64,
    /// `N / <N>^3` for the largest cell size `N`.
    pub predicted_gradient: f64,
    pub phase_ratio: f64,
    pub grad_eta_ratio: f64,
    pub grad_sigma_ratio: f64,
    pub time_nonresonant: bool,
    pub phase01_nonresonant: bool,
    pub space_nonresonant_eta: bool,
    pub space_nonresonant_sigma: bool,
    pub null_structure: bool,
    pub resonant_case: bool,
}

/// Sampled minima over a cell.
pub fn classify_resonance(
    sig: PhaseSignature,
    conv: PhaseConvention,
    cell: &Cell,
    n_samples: usize,
    seed: u64,
) -> Result<ResonanceReport> {
    if n_samples < 1000 {
        return Err(Error::Parameter(format!("need at least 1000 samples, got {n_samples}")));
    }
    let samples = sample_cell(cell, n_samples, seed);
    let mut r = classify_samples(sig, conv, cell, &samples)?;
    r.seed = Some(seed);
    Ok(r)
}

/// Classification over an explicit sample set. Samples outside the cell are ignored.
pub fn classify_samples(
    sig: PhaseSignature,
    conv: PhaseConvention,
    cell: &Cell,
    samples: &[Sample],
) -> Result<ResonanceReport> {
    let inside: Vec<&Sample> = samples.iter().filter(|s| cell.contains(s)).collect();
    if inside.is_empty() {
        return Err(Error::EmptyCell("no samples fall inside the cell".into()));
    }
    let mut m = [f64::INFINITY; 5];
    for s in inside.iter() {
        let g = phase_gradients(sig, conv, s.xi, s.eta, s.sigma);
        let vals = [
            phase_value(sig, conv, s.xi, s.eta, s.sigma).abs(),
            phase01(sig.theta(0), sig.theta(1), s.xi, s.eta).abs(),
            norm(g.xi),
            norm(g.eta),
            norm(g.sigma),
        ];
        for (a, b) in m.iter_mut().zip(vals) {
            *a = a.min(b);
        }
    }
    let n = cell.scale();
    let predicted_phase = bracket(n, 0.0);
    let predicted_gradient = n / predicted_phase.powi(3);
    let ratio = |v: f64, p: f64| if p > 0.0 { v / p } else { f64::INFINITY };
    let space_flag = |v: f64| v > 0.0 && v >= SPACE_NONRESONANT_FRACTION * predicted_gradient;
    Ok(ResonanceReport {
        signature: sig,
        convention: conv,
        cell: *cell,
        samples: inside.len(),
        seed: None,
        min_phase: m[0],
        min_phase01: m[1],
        min_grad_xi: m[2],
        min_grad_eta: m[3],
        min_grad_sigma: m[4],
        predicted_phase,
        predicted_gradient,
        phase_ratio: ratio(m[0], predicted_phase),
        grad_eta_ratio: ratio(m[3], predicted_gradient),
        grad_sigma_ratio: ratio(m[4], predicted_gradient),
        time_nonresonant: m[0] >= TIME_NONRESONANT_THRESHOLD,
        phase01_nonresonant: m[1] >= TIME_NONRESONANT_THRESHOLD,
        space_nonresonant_eta: space_flag(m[3]),
        space_nonresonant_sigma: space_flag(m[4]),
        null_structure: sig.null_structure(),
        resonant_case: sig.resonant_case(),
    })
}

/// Sampled lower bound of `|grad_eta phi_theta(xi, eta)|` with
/// `|xi| ~ N`, `|eta| ~ N1`, `|xi + eta| ~ N2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearSpaceReport {
    pub theta: i8,
    pub n: f64,
    pub n1: f64,
    pub n2: f64,
    pub samples: usize,
    pub min_gradient: f64,
    /// `N/<N1>^3` when `N1 ~ N2`, else `max(N1,N2)/<max(N1,N2)>`.
    pub predicted: f64,
    pub constant: f64,
}

pub fn bilinear_space_resonance(
    theta: i8,
    n: f64,
    n1: f64,
    n2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<BilinearSpaceReport> {
    let (rx, re, rs) = (Region::annulus(n), Region::annulus(n1), Region::annulus(n2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0usize;
    let mut min_gradient = f64::INFINITY;
    let max_draws = n_samples.saturating_mul(1000).max(1);
    let th = f64::from(theta.signum());
    for _ in 0..max_draws {
        if accepted == n_samples {
            break;
        }
        let xi = rx.sample(&mut rng);
        let eta = re.sample(&mut rng);
        if !rs.contains(add(xi, eta)) {
            continue;
        }
        accepted += 1;
        min_gradient = min_gradient.min(norm(bilinear_phase_gradient(th, xi, eta)));
    }
    if accepted == 0 {
        return Err(Error::EmptyCell(format!(
            "no (xi, eta) with |xi| ~ {n}, |eta| ~ {n1}, |xi + eta| ~ {n2}"
        )));
    }
    let (hi, lo) = (n1.max(n2), n1.min(n2));
    let predicted = if hi <= 4.0 * lo {
        n / bracket(n1, 0.0).powi(3)
    } else {
        hi / bracket(hi, 0.0)
    };
    Ok(BilinearSpaceReport {
        theta,
        n,
        n1,
        n2,
        samples: accepted,
        min_gradient,
        predicted,
        constant: min_gradient / predicted,
    })
}

/// One row of the sixteen-signature table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureRow {
    pub signature: PhaseSignature,
    pub phase_at_origin: f64,
    pub null_structure: bool,
    pub resonant_case: bool,
    /// `theta0 != theta1`, so `|phi_01| >= 2` everywhere.
    pub phase01_nonresonant: bool,
}

pub fn signature_table() -> Vec<SignatureRow> {
    PhaseSignature::all()
        .into_iter()
        .map(|s| SignatureRow {
            signature: s,
            phase_at_origin: phase_value(s, PhaseConvention::Duhamel, [0.0; 2], [0.0; 2], [0.0; 2]),
            null_structure: s.null_structure(),
            resonant_case: s.resonant_case(),
            phase01_nonresonant: !s.null_structure(),
        })
        .collect()
}

/// `|phi|` over the `(eta1, eta2)` square `[-extent, extent]^2` at fixed `xi`, `sigma`.
pub fn phase_heatmap(
    sig: PhaseSignature,
    conv: PhaseConvention,
    xi: Vec2,
    sigma: Vec2,
    extent: f64,
    points: usize,
) -> Result<Vec<[f64; 3]>> {
    if points < 2 || !(extent.is_finite() && extent > 0.0) {
        return Err(Error::Parameter(format!(
            "heatmap needs >= 2 points and positive extent, got {points} and {extent}"
        )));
    }
    let step = 2.0 * extent / (points - 1) as f64;
    let mut out = Vec::with_capacity(points * points);
    for i in 0..points {
        for j in 0..points {
            let eta = [-extent + i as f64 * step, -extent + j as f64 * step];
            out.push([eta[0], eta[1], phase_value(sig, conv, xi, eta, sigma)]);
        }
    }
    Ok(out)
}

pub fn write_heatmap_csv<W: Write>(out: W, rows: &[[f64; 3]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta1", "eta2", "phase"])?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(s: &str) -> PhaseSignature {
        s.parse().unwrap()
    }

    const O: Vec2 = [0.0, 0.0];

    #[test]
    fn signatures() {
        let all = PhaseSignature::all();
        assert_eq!(all.len(), 16);
        assert_eq!(all[0].to_string(), "++++");
        assert_eq!(all[15].to_string(), "----");
        let mut names: Vec<String> = all.iter().map(|s| s.to_string()).collect();
        names.dedup();
        assert_eq!(names.len(), 16);
        assert!("+-+".parse::<PhaseSignature>().is_err());
        assert!("+-x+".parse::<PhaseSignature>().is_err());
        assert!(PhaseSignature::new([1, 0, 1, 1]).is_err());
        assert!(sig("++-+").resonant_case());
        assert!(sig("++++").null_structure());
        let json = serde_json::to_string(&sig("+--+")).unwrap();
        assert_eq!(json, "\"+--+\"");
    }

    #[test]
    fn phase_at_origin() {
        let d = PhaseConvention::Duhamel;
        assert_eq!(phase_value(sig("++++"), d, O, O, O), 0.0);
        assert_eq!(phase_value(sig("+--+"), d, O, O, O), 4.0);
        assert_eq!(phase_value(sig("++-+"), d, O, O, O), 2.0);
        for row in signature_table() {
            let t = row.signature.0.map(f64::from);
            assert_eq!(row.phase_at_origin, t[0] - t[1] - t[2] + t[3]);
            assert!([-4.0, -2.0, 0.0, 2.0, 4.0].contains(&row.phase_at_origin));
        }
    }

    #[test]
    fn gradients_vanish_at_origin() {
        for s in PhaseSignature::all() {
            for conv in [PhaseConvention::Duhamel, PhaseConvention::Shifted] {
                let g = phase_gradients(s, conv, O, O, O);
                assert_eq!([g.xi, g.eta, g.sigma], [O, O, O]);
            }
        }
    }

    #[test]
    fn origin_cell_is_resonant() {
        let r = classify_resonance(sig("++++"), PhaseConvention::Duhamel, &Cell::origin(), 1000, 1).unwrap();
        assert!(r.min_phase.abs() < 1e-15);
        assert!(!r.time_nonresonant);
        assert!(r.null_structure);
    }

    #[test]
    fn phase01_bound_over_cells() {
        for s in PhaseSignature::all().into_iter().filter(|s| !s.null_structure()) {
            for cell in [Cell::dyadic(0.25, 1.0, 4.0), Cell::dyadic(8.0, 8.0, 0.5), Cell::origin()] {
                let r = classify_resonance(s, PhaseConvention::Duhamel, &cell, 2000, 7).unwrap();
                assert!(r.min_phase01 >= 2.0);
                assert!(r.phase01_nonresonant);
            }
        }
    }

    #[test]
    fn empty_cell_and_sample_count() {
        let cell = Cell::dyadic(1.0, 64.0, 1.0);
        assert!(matches!(cell.clipped(16.0), Err(Error::EmptyCell(_))));
        let ok = Cell::dyadic(1.0, 8.0, 1.0).clipped(10.0).unwrap();
        assert_eq!(ok.eta.hi, 10.0);
        assert!(classify_resonance(sig("++++"), PhaseConvention::Duhamel, &ok, 10, 0).is_err());
    }

    #[test]
    fn refinement_is_monotone() {
        let parent = Cell::dyadic(1.0, 1.0, 1.0);
        let mut child = parent;
        child.eta = Region { lo: 0.75, hi: 1.25, scale: 1.0 };
        let mut pool = sample_cell(&parent, 3000, 5);
        pool.extend(sample_cell(&child, 1000, 6));
        for s in PhaseSignature::all() {
            let p = classify_samples(s, PhaseConvention::Duhamel, &parent, &pool).unwrap();
            let c = classify_samples(s, PhaseConvention::Duhamel, &child, &pool).unwrap();
            assert!(c.min_phase >= p.min_phase);
            assert!(c.min_grad_eta >= p.min_grad_eta);
            assert!(c.min_grad_sigma >= p.min_grad_sigma);
            assert!(c.samples <= p.samples);
        }
    }

    #[test]
    fn bilinear_space_resonance_bound() {
        for &(n, n1, n2) in &[(0.25, 1.0, 1.0), (1.0, 2.0, 2.0), (0.5, 4.0, 4.0), (2.0, 4.0, 0.25)] {
            let r = bilinear_space_resonance(1, n, n1, n2, 2000, 3).unwrap();
            assert!(r.samples == 2000);
            assert!(r.constant > 0.0, "{r:?}");
        }
        assert!(bilinear_space_resonance(1, 0.25, 8.0, 0.25, 100, 1).is_err());
    }

    #[test]
    fn heatmap_grid() {
        let rows = phase_heatmap(sig("++++"), PhaseConvention::Duhamel, O, O, 2.0, 5).unwrap();
        assert_eq!(rows.len(), 25);
        assert_eq!(rows[12], [0.0, 0.0, 0.0]);
        let mut buf = Vec::new();
        write_heatmap_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("eta1,eta2,phase\n"));
        assert!(phase_heatmap(sig("++++"), PhaseConvention::Duhamel, O, O, 0.0, 5).is_err());
    }

    fn point() -> impl Strategy<Value = Vec2> {
        (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| [a, b])
    }

    fn signature() -> impl Strategy<Value = PhaseSignature> {
        (0usize..16).prop_map(|i| PhaseSignature::all()[i])
    }

    proptest! {
        #[test]
        fn sign_symmetry(s in signature(), xi in point(), eta in point(), sigma in point()) {
            for conv in [PhaseConvention::Duhamel, PhaseConvention::Shifted] {
                let a = phase_value(s, conv, xi, eta, sigma);
                let b = phase_value(s.negated(), conv, xi, eta, sigma);
                prop_assert!((a + b).abs() <= 1e-13);
            }
        }

        #[test]
        fn null_structure(s in signature(), xi in point(), sigma in point()) {
            let s = PhaseSignature([s.0[0], s.0[0], s.0[2], s.0[3]]);
            let g = phase_gradients(s, PhaseConvention::Duhamel, xi, O, sigma);
            prop_assert!(norm(g.xi) <= 1e-13);
        }

        #[test]
        fn gradients_match_finite_differences(s in signature(), xi in point(), eta in point(), sigma in point()) {
            let h = 1e-5;
            for conv in [PhaseConvention::Duhamel, PhaseConvention::Shifted] {
                let g = phase_gradients(s, conv, xi, eta, sigma);
                let f = |x: Vec2, e: Vec2, w: Vec2| phase_value(s, conv, x, e, w);
                for k in 0..2 {
                    let mut d = [0.0; 2];
                    d[k] = h;
                    let fd = [
                        (f(add(xi, d), eta, sigma) - f(sub(xi, d), eta, sigma)) / (2.0 * h),
                        (f(xi, add(eta, d), sigma) - f(xi, sub(eta, d), sigma)) / (2.0 * h),
                        (f(xi, eta, add(sigma, d)) - f(xi, eta, sub(sigma, d))) / (2.0 * h),
                    ];
                    let an = [g.xi[k], g.eta[k], g.sigma[k]];
                    for (a, b) in fd.iter().zip(an) {
                        prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
                    }
                }
            }
        }

        #[test]
        fn case_four_identity(s in signature(), xi in point(), eta in point(), sigma in point()) {
            let g = phase_gradients(s, PhaseConvention::Shifted, xi, eta, sigma);
            let (v0, v1) = (velocity(xi), velocity(add(xi, eta)));
            for k in 0..2 {
                let lhs = s.theta(0) * v0[k] - s.theta(1) * v1[k];
                prop_assert!((lhs - (g.xi[k] - g.sigma[k])).abs() <= 1e-12);
            }
        }

        #[test]
        fn bilinear_gradient_lower_bound(a in point(), b in point()) {
            // |v(a) - v(b)| >= |a - b| / <max(|a|, |b|)>^3
            let d = norm(sub(velocity(a), velocity(b)));
            let m = norm(a).max(norm(b));
            prop_assert!(d >= norm(sub(a, b)) / bracket(m, 0.0).powi(3) * (1.0 - 1e-12));
        }
    }
}
