//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! n = 512
//! length = 100.0
//!
//! [physics]
//! lambda = 1.0
//! epsilon = 0.01
//! width = 2.0
//! carrier = [0.0, 0.0]
//! direction = [[1.0, 0.0], [0.0, 0.0]]   # (re, im) per spinor component
//! nonlinearity = "gauge"                  # gauge | direct | off
//!
//! [time]
//! dt = 0.02
//! t_end = 40.0
//! sample_interval = 0.5
//! allow_past_horizon = false
//!
//! [diagnostics]
//! dyadic = [0.25, 1.0, 4.0]
//! sup_orders = [0, 1, 2, 3, 4, 5, 6, 7]
//! sobolev = [0.0, 5.0, 10.0]
//! fit_window = [10.0, 35.0]     # default [10, 0.8 * horizon]
//! gamma = 0.05
//! delta = 0.05
//! scattering_times = [5.0, 10.0, 20.0]
//! residuals = true
//!
//! [output]
//! directory = "output"          # CSPD_OUTPUT_DIR overrides
//! formats = ["csv", "json", "snapshot"]
//! checkpoint_interval = 10.0
//!
//! [resonance]
//! signatures = ["all"]
//! cells = [[0.25, 1.0, 1.0]]
//! include_origin = true
//! samples = 4000
//! convention = "duhamel"
//! ```
//!
//! Every section and key is optional; omitted values take the small-data
//! defaults above.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{InitialData, Nonlinearity};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::resonance::{Cell, PhaseConvention, PhaseSignature};
use crate::spectral::DyadicIndex;

/// Environment variable that replaces `output.directory`.
pub const OUTPUT_DIR_ENV: &str = "CSPD_OUTPUT_DIR";

/// Initial data is treated as supported within this many widths of the origin.
pub const SUPPORT_WIDTHS: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub width: f64,
    pub carrier: [f64; 2],
    pub direction: [[f64; 2]; 2],
    pub nonlinearity: Nonlinearity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    pub allow_past_horizon: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub dyadic: Vec<f64>,
    pub sup_orders: Vec<u32>,
    pub sobolev: Vec<f64>,
    pub fit_window: Option<[f64; 2]>,
    pub gamma: f64,
    pub delta: f64,
    pub scattering_times: Vec<f64>,
    pub residuals: bool,
    /// Allowed growth of the decay envelope over the fit window.
    pub decay_factor: f64,
    /// Allowed growth of the bilinear and time-derivative envelopes.
    pub envelope_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<String>,
    pub checkpoint_interval: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    pub signature: String,
    pub xi: [f64; 2],
    pub sigma: [f64; 2],
    pub extent: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceConfig {
    /// Sign strings such as `"+-+-"`, or `"all"`.
    pub signatures: Vec<String>,
    /// `[N_xi, N_eta, N_sigma]` dyadic annuli.
    pub cells: Vec<[f64; 3]>,
    pub include_origin: bool,
    pub samples: usize,
    pub convention: PhaseConvention,
    /// `[N, N1, N2]` for the bilinear space-resonance bound.
    pub bilinear_cells: Vec<[f64; 3]>,
    /// `[N0, N1, N2]` case-(i) cells for the multiplier norm.
    pub cm_cells: Vec<[f64; 3]>,
    pub cm_points: usize,
    pub heatmaps: Vec<HeatmapConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub time: TimeConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
    pub resonance: ResonanceConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 512, length: 100.0 }
    }
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            epsilon: 0.01,
            width: 2.0,
            carrier: [0.0, 0.0],
            direction: [[1.0, 0.0], [0.0, 0.0]],
            nonlinearity: Nonlinearity::Gauge,
        }
    }
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { dt: 0.02, t_end: 40.0, sample_interval: 0.5, allow_past_horizon: false }
    }
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            dyadic: vec![0.25, 1.0, 4.0],
            sup_orders: (0..=7).collect(),
            sobolev: vec![0.0, 5.0, 10.0],
            fit_window: None,
            gamma: 0.05,
            delta: 0.05,
            scattering_times: vec![5.0, 10.0, 20.0],
            residuals: true,
            decay_factor: 2.0,
            envelope_factor: 3.0,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            formats: vec!["csv".into(), "json".into(), "snapshot".into()],
            checkpoint_interval: Some(10.0),
        }
    }
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self { signature: "++++".into(), xi: [0.0, 0.0], sigma: [0.0, 0.0], extent: 4.0, points: 101 }
    }
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        Self {
            signatures: vec!["all".into()],
            cells: vec![[0.25, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 4.0, 4.0]],
            include_origin: true,
            samples: 4000,
            convention: PhaseConvention::Duhamel,
            bilinear_cells: vec![[0.25, 1.0, 1.0], [1.0, 2.0, 2.0], [0.5, 4.0, 4.0]],
            cm_cells: vec![[0.125, 1.0, 1.0], [0.25, 4.0, 4.0], [0.25, 8.0, 8.0]],
            cm_points: 32,
            heatmaps: vec![HeatmapConfig::default()],
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::small_data()
    }
}

const FORMATS: [&str; 3] = ["csv", "json", "snapshot"];

/// `x / dt` as a step count when it is an integer multiple.
pub fn steps_for(x: f64, dt: f64) -> Option<u64> {
    let r = x / dt;
    let k = r.round();
    (r.is_finite() && k >= 0.0 && (r - k).abs() <= 1e-9 * r.abs().max(1.0)).then_some(k as u64)
}

impl RunConfig {
    /// `eps = 0.01`, `w = 2`, `n = 512`, `L = 100`, `dt = 0.02`, `t_end = 40`.
    pub fn small_data() -> Self {
        Self {
            seed: 0,
            grid: GridConfig::default(),
            physics: PhysicsConfig::default(),
            time: TimeConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            output: OutputConfig::default(),
            resonance: ResonanceConfig::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(vec![e.message().to_string()]))
    }

    /// Reads and validates a file; applies the output directory override.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output.directory = PathBuf::from(dir);
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.length)
    }

    pub fn initial_data(&self) -> InitialData {
        let d = self.physics.direction;
        InitialData {
            epsilon: self.physics.epsilon,
            width: self.physics.width,
            carrier: self.physics.carrier,
            direction: [Complex64::new(d[0][0], d[0][1]), Complex64::new(d[1][0], d[1][1])],
        }
    }

    /// Time before the initial bump, taken as supported in `|x| <= 5w`, can wrap around the box.
    pub fn horizon(&self) -> f64 {
        (0.5 * self.grid.length - SUPPORT_WIDTHS * self.physics.width).max(0.0)
    }

    pub fn fit_window(&self) -> [f64; 2] {
        self.diagnostics.fit_window.unwrap_or([10.0, 0.8 * self.horizon()])
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    pub fn dyadic(&self) -> Result<Vec<DyadicIndex>> {
        self.diagnostics.dyadic.iter().map(|&n| DyadicIndex::from_value(n)).collect()
    }

    pub fn signatures(&self) -> Result<Vec<PhaseSignature>> {
        let mut out = Vec::new();
        for s in &self.resonance.signatures {
            if s.eq_ignore_ascii_case("all") {
                out.extend(PhaseSignature::all());
            } else {
                out.push(s.parse()?);
            }
        }
        Ok(out)
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells: Vec<Cell> = self.resonance.cells.iter().map(|c| Cell::dyadic(c[0], c[1], c[2])).collect();
        if self.resonance.include_origin {
            cells.push(Cell::origin());
        }
        cells
    }

    /// Checks every field and reports all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut e: Vec<String> = Vec::new();
        let pos = |x: f64| x.is_finite() && x > 0.0;

        let grid = match self.grid() {
            Ok(g) => Some(g),
            Err(err) => {
                e.push(format!("grid: {err}"));
                None
            }
        };
        if !pos(self.grid.length) {
            e.push(format!("grid.length: must be positive, got {}", self.grid.length));
        }

        let p = &self.physics;
        if !pos(p.lambda) {
            e.push(format!("physics.lambda: must be positive, got {}", p.lambda));
        }
        if !(p.epsilon.is_finite() && p.epsilon >= 0.0) {
            e.push(format!("physics.epsilon: must be >= 0, got {}", p.epsilon));
        }
        if !pos(p.width) {
            e.push(format!("physics.width: must be positive, got {}", p.width));
        }
        if p.carrier.iter().any(|c| !c.is_finite()) {
            e.push("physics.carrier: must be finite".into());
        }
        let dn: f64 = p.direction.iter().flatten().map(|x| x * x).sum();
        if !(dn.is_finite() && dn > 0.0) {
            e.push("physics.direction: must be a finite nonzero spinor".into());
        }

        let t = &self.time;
        if !pos(t.dt) {
            e.push(format!("time.dt: must be positive, got {}", t.dt));
        } else {
            if !pos(t.t_end) || steps_for(t.t_end, t.dt).is_none() {
                e.push(format!("time.t_end: must be a positive multiple of dt, got {}", t.t_end));
            }
            if !pos(t.sample_interval) || steps_for(t.sample_interval, t.dt).is_none() {
                e.push(format!(
                    "time.sample_interval: must be a positive multiple of dt, got {}",
                    t.sample_interval
                ));
            }
            if let Some(c) = self.output.checkpoint_interval {
                if !pos(c) || steps_for(c, t.dt).is_none() {
                    e.push(format!("output.checkpoint_interval: must be a positive multiple of dt, got {c}"));
                }
            }
            for &s in &self.diagnostics.scattering_times {
                if !pos(s) || steps_for(s, t.dt).is_none() || 2.0 * s > t.t_end + 1e-9 {
                    e.push(format!(
                        "diagnostics.scattering_times: {s} must be a positive multiple of dt with 2t <= t_end"
                    ));
                }
            }
        }
        let horizon = self.horizon();
        if horizon <= 0.0 {
            e.push(format!(
                "physics.width: support radius {} does not fit in the box",
                SUPPORT_WIDTHS * p.width
            ));
        }
        if t.t_end > horizon && !t.allow_past_horizon {
            e.push(format!(
                "time.t_end: {} exceeds the wrap-around horizon {horizon}; set time.allow_past_horizon to override",
                t.t_end
            ));
        }

        let d = &self.diagnostics;
        for &n in &d.dyadic {
            match (DyadicIndex::from_value(n), grid) {
                (Err(err), _) => e.push(format!("diagnostics.dyadic: {err}")),
                (Ok(idx), Some(g)) => {
                    if let Err(err) = idx.check(g) {
                        e.push(format!("diagnostics.dyadic: {err}"));
                    }
                }
                _ => {}
            }
        }
        if let Some(k) = d.sup_orders.iter().find(|&&k| k > 16) {
            e.push(format!("diagnostics.sup_orders: order {k} above 16"));
        }
        if d.sobolev.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            e.push("diagnostics.sobolev: indices must be >= 0".into());
        }
        let w = self.fit_window();
        if !(w[0].is_finite() && w[1].is_finite() && w[0] >= 0.0 && w[0] < w[1]) {
            e.push(format!("diagnostics.fit_window: need 0 <= start < end, got {w:?}"));
        }
        for (name, v) in [("gamma", d.gamma), ("delta", d.delta)] {
            if !(v.is_finite() && (0.0..1.0).contains(&v)) {
                e.push(format!("diagnostics.{name}: must lie in [0, 1), got {v}"));
            }
        }
        for (name, v) in [("decay_factor", d.decay_factor), ("envelope_factor", d.envelope_factor)] {
            if !(v.is_finite() && v >= 1.0) {
                e.push(format!("diagnostics.{name}: must be >= 1, got {v}"));
            }
        }

        for f in &self.output.formats {
            if !FORMATS.contains(&f.as_str()) {
                e.push(format!("output.formats: unknown format {f:?}, expected one of {FORMATS:?}"));
            }
        }
        if self.output.directory.as_os_str().is_empty() {
            e.push("output.directory: must not be empty".into());
        }

        let r = &self.resonance;
        for s in &r.signatures {
            if !s.eq_ignore_ascii_case("all") {
                if let Err(err) = s.parse::<PhaseSignature>() {
                    e.push(format!("resonance.signatures: {err}"));
                }
            }
        }
        if r.signatures.is_empty() {
            e.push("resonance.signatures: must not be empty".into());
        }
        if r.cells.is_empty() && !r.include_origin {
            e.push("resonance.cells: must not be empty".into());
        }
        for (name, list) in [("cells", &r.cells), ("bilinear_cells", &r.bilinear_cells), ("cm_cells", &r.cm_cells)] {
            for c in list.iter() {
                if let Some(bad) = c.iter().find(|&&v| DyadicIndex::from_value(v).is_err()) {
                    e.push(format!("resonance.{name}: {bad} in {c:?} is not a positive power of two"));
                }
            }
        }
        if r.samples < 1000 {
            e.push(format!("resonance.samples: need at least 1000, got {}", r.samples));
        }
        if r.cm_points < 4 || r.cm_points > 64 {
            e.push(format!("resonance.cm_points: must lie in [4, 64], got {}", r.cm_points));
        }
        for h in &r.heatmaps {
            if let Err(err) = h.signature.parse::<PhaseSignature>() {
                e.push(format!("resonance.heatmaps.signature: {err}"));
            }
            if !pos(h.extent) || h.points < 2 {
                e.push(format!(
                    "resonance.heatmaps: need positive extent and >= 2 points, got {} and {}",
                    h.extent, h.points
                ));
            }
        }

        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(e))
        }
    }
}
