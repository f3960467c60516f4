//! Scenario orchestration and output sinks.
//!
//! Files written by `run_simulation` into the output directory:
//! `diagnostics.csv`, `summary.json`, and with snapshots enabled
//! `checkpoint_{plus,minus}.cspd` + `checkpoint.json` (latest checkpoint)
//! and `final_{plus,minus}.cspd` + `final.json`.
//! `run_resonance_report` writes `resonance_reports.json` (one object per
//! signature and cell), `resonance_summary.json`, and `heatmap_<sig>.csv`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cm::{case_one_estimate, CaseOneReport};
use crate::config::{steps_for, RunConfig};
use crate::diagnostics::{
    envelope, fit_decay_exponent, scattering_increment, time_bracket, write_csv, DecayFit,
    DiagnosticsPlan, DiagnosticsRecord, Envelope,
};
use crate::dynamics::{Evolver, ProfileState};
use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::gauge::GaugeResidual;
use crate::grid::bracket;
use crate::resonance::{
    bilinear_space_resonance, classify_resonance, phase_heatmap, signature_table, write_heatmap_csv,
    BilinearSpaceReport, ResonanceReport, SignatureRow,
};
use crate::snapshot::Snapshot;

/// Largest number of consecutive halvings tried on a divergent step.
pub const MAX_HALVINGS: u32 = 4;

/// Checkpoint metadata stored next to the two profile snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub t: f64,
    pub dt: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub width: f64,
    pub carrier: [f64; 2],
    pub length: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub k: u32,
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringEntry {
    pub theta: i8,
    pub t1: f64,
    pub t2: f64,
    pub increment: f64,
    /// `<t1>^delta` times the increment.
    pub weighted: f64,
    /// Set when `t2` exceeds half the wrap-around horizon.
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSummary {
    pub initial: f64,
    pub final_value: f64,
    pub max_relative_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub horizon: f64,
    pub steps: u64,
    pub halved_steps: u64,
    pub records: usize,
    pub fit_window: [f64; 2],
    pub fits: Vec<FitEntry>,
    /// Keyed `decay_k{k}`, `bilinear_N{N}`, `dtf_N{N}`.
    pub envelopes: std::collections::BTreeMap<String, Envelope>,
    pub scattering: Vec<ScatteringEntry>,
    /// Largest weighted profile norm at `t = 0`.
    pub initial_weighted_norm: f64,
    pub residual_maxima: GaugeResidual,
    pub mass: MassSummary,
    pub wall_time_seconds: f64,
    pub files: Vec<PathBuf>,
}

/// Everything a run produced, kept in memory for callers and tests.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: ProfileState,
}

fn meta(cfg: &RunConfig, state: &ProfileState, dt: f64) -> CheckpointMeta {
    CheckpointMeta {
        t: state.t,
        dt,
        lambda: state.lambda,
        epsilon: cfg.physics.epsilon,
        width: cfg.physics.width,
        carrier: cfg.physics.carrier,
        length: cfg.grid.length,
        n: cfg.grid.n,
    }
}

/// Writes `<prefix>_plus.cspd`, `<prefix>_minus.cspd` and `<prefix>.json`.
pub fn write_checkpoint(dir: &Path, prefix: &str, state: &ProfileState, meta: &CheckpointMeta) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (tag, f) in [("plus", &state.f_plus), ("minus", &state.f_minus)] {
        let path = dir.join(format!("{prefix}_{tag}.cspd"));
        Snapshot::from(f).write(BufWriter::new(File::create(&path)?))?;
        files.push(path);
    }
    let path = dir.join(format!("{prefix}.json"));
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), meta)?;
    files.push(path);
    Ok(files)
}

/// Reads a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint(dir: &Path, prefix: &str) -> Result<(ProfileState, CheckpointMeta)> {
    let meta: CheckpointMeta = serde_json::from_reader(File::open(dir.join(format!("{prefix}.json")))?)?;
    let load = |tag: &str| -> Result<SpinorField> {
        let f = File::open(dir.join(format!("{prefix}_{tag}.cspd")))?;
        Snapshot::read(std::io::BufReader::new(f))?.try_into()
    };
    let state = ProfileState { f_plus: load("plus")?, f_minus: load("minus")?, t: meta.t, lambda: meta.lambda };
    Ok((state, meta))
}

/// One step of size `dt`, retried as `2^h` substeps after a divergence.
fn robust_step(evolver: &Evolver, state: &ProfileState, dt: f64, halved: &mut u64) -> Result<ProfileState> {
    let mut last = None;
    for h in 0..=MAX_HALVINGS {
        let parts = 1u32 << h;
        let sub = dt / f64::from(parts);
        let mut s = state.clone();
        let mut ok = true;
        for _ in 0..parts {
            match evolver.step(&s, sub) {
                Ok(next) => s = next,
                Err(e @ Error::Divergence { .. }) => {
                    last = Some(e);
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok {
            if h > 0 {
                *halved += 1;
            }
            // keep the time grid exact
            s.t = state.t + dt;
            return Ok(s);
        }
    }
    Err(last.expect("loop records the divergence"))
}

fn series(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> Option<f64>) -> Vec<(f64, f64)> {
    records.iter().filter_map(|r| f(r).map(|v| (r.t, v))).collect()
}

/// Steps the configured scenario to `t_end` and writes all outputs.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let grid = cfg.grid()?;
    let dt = cfg.time.dt;
    let total = steps_for(cfg.time.t_end, dt).expect("validated");
    let every = steps_for(cfg.time.sample_interval, dt).expect("validated").max(1);
    let checkpoint_every = cfg.output.checkpoint_interval.and_then(|c| steps_for(c, dt)).filter(|&c| c > 0);
    let horizon = cfg.horizon();
    let dir = cfg.output.directory.clone();
    std::fs::create_dir_all(&dir)?;
    let snapshots = cfg.wants("snapshot");

    let plan = DiagnosticsPlan {
        sobolev: cfg.diagnostics.sobolev.clone(),
        sup_orders: cfg.diagnostics.sup_orders.clone(),
        dyadic: cfg.dyadic()?,
        horizon,
        residuals: cfg.diagnostics.residuals,
    };
    let evolver = Evolver::new(grid, cfg.physics.lambda, cfg.physics.nonlinearity)?;
    let mut state = ProfileState::from_initial(grid, &cfg.initial_data(), cfg.physics.lambda)?;

    // profiles kept for the scattering increments, by step index
    let mut keep: Vec<u64> = cfg
        .diagnostics
        .scattering_times
        .iter()
        .flat_map(|&t| [steps_for(t, dt).unwrap(), 2 * steps_for(t, dt).unwrap()])
        .collect();
    keep.sort_unstable();
    keep.dedup();
    let mut kept: Vec<(u64, ProfileState)> = Vec::new();

    let mut records = Vec::new();
    let mut files = Vec::new();
    let mut halved = 0u64;
    let initial_mass = state.psi_hat().l2_norm().powi(2);
    let initial_weighted = crate::diagnostics::weighted_profile_norm(&state.f_plus, 5.0)?
        .max(crate::diagnostics::weighted_profile_norm(&state.f_minus, 5.0)?);

    for step in 0..=total {
        if keep.binary_search(&step).is_ok() {
            kept.push((step, state.clone()));
        }
        if step % every == 0 || step == total {
            records.push(DiagnosticsRecord::measure(&state, &evolver, &plan)?);
        }
        if snapshots && step > 0 && checkpoint_every.is_some_and(|c| step % c == 0) {
            files.extend(write_checkpoint(&dir, "checkpoint", &state, &meta(cfg, &state, dt))?);
        }
        if step == total {
            break;
        }
        let next = match robust_step(&evolver, &state, dt, &mut halved) {
            Ok(s) => s,
            Err(e) => {
                if snapshots {
                    write_checkpoint(&dir, "checkpoint", &state, &meta(cfg, &state, dt))?;
                }
                if cfg.wants("csv") {
                    write_csv(BufWriter::new(File::create(dir.join("diagnostics.csv"))?), &records)?;
                }
                return Err(e);
            }
        };
        state = next;
        state.t = (step + 1) as f64 * dt;
    }

    let window = cfg.fit_window();
    let fits = cfg
        .diagnostics
        .sup_orders
        .iter()
        .enumerate()
        .map(|(i, &k)| match fit_decay_exponent(&series(&records, |r| Some(r.sup[i].1)), window) {
            Ok(f) => FitEntry { k, fit: Some(f), error: None },
            Err(e) => FitEntry { k, fit: None, error: Some(e.to_string()) },
        })
        .collect();

    let mut envelopes = std::collections::BTreeMap::new();
    let d = &cfg.diagnostics;
    let mut add = |name: String, s: Vec<(f64, f64)>, factor: f64| {
        if let Ok(env) = envelope(&name, &s, window, factor) {
            envelopes.insert(name, env);
        }
    };
    for (i, &k) in d.sup_orders.iter().enumerate() {
        let s = series(&records, |r| Some(time_bracket(r.t).powf(0.75) * r.sup[i].1));
        add(format!("decay_k{k}"), s, d.decay_factor);
    }
    for (i, &n) in d.dyadic.iter().enumerate() {
        let s = series(&records, |r| Some(n * time_bracket(r.t).powf(1.75 - d.gamma) * r.bilinear[i].1));
        add(format!("bilinear_N{n}"), s, d.envelope_factor);
        let s = series(&records, |r| {
            Some(bracket(n, 0.0).powi(5) * time_bracket(r.t).powf(1.5) * r.time_derivative[i].1)
        });
        add(format!("dtf_N{n}"), s, d.envelope_factor);
    }

    let find = |step: u64| kept.iter().find(|(s, _)| *s == step).map(|(_, st)| st);
    // the part of an increment that mixes the two branches separates at up
    // to twice the group speed, so it wraps around at half the horizon
    let increment_horizon = 0.5 * horizon;
    let mut scattering = Vec::new();
    for &t1 in &d.scattering_times {
        let s1 = steps_for(t1, dt).unwrap();
        let (Some(a), Some(b)) = (find(s1), find(2 * s1)) else { continue };
        for theta in [1i8, -1] {
            let m = scattering_increment(a.profile(theta), a.t, b.profile(theta), b.t, increment_horizon)?;
            scattering.push(ScatteringEntry {
                theta,
                t1: a.t,
                t2: b.t,
                increment: m.value,
                weighted: time_bracket(a.t).powf(d.delta) * m.value,
                warning: m.warning,
            });
        }
    }

    let mut residual_maxima = GaugeResidual::default();
    let mut drift = 0.0f64;
    for r in &records {
        residual_maxima.curl1 = residual_maxima.curl1.max(r.residual.curl1);
        residual_maxima.curl2 = residual_maxima.curl2.max(r.residual.curl2);
        residual_maxima.charge = residual_maxima.charge.max(r.residual.charge);
        residual_maxima.divergence = residual_maxima.divergence.max(r.residual.divergence);
        if initial_mass > 0.0 {
            drift = drift.max((r.mass - initial_mass).abs() / initial_mass);
        }
    }

    if cfg.wants("csv") {
        let path = dir.join("diagnostics.csv");
        write_csv(BufWriter::new(File::create(&path)?), &records)?;
        files.push(path);
    }
    if snapshots {
        files.extend(write_checkpoint(&dir, "final", &state, &meta(cfg, &state, dt))?);
    }
    let summary_path = dir.join("summary.json");
    if cfg.wants("json") {
        files.push(summary_path.clone());
    }
    files.sort();
    files.dedup();
    let summary = RunSummary {
        config: cfg.clone(),
        horizon,
        steps: total,
        halved_steps: halved,
        records: records.len(),
        fit_window: window,
        fits,
        envelopes,
        scattering,
        initial_weighted_norm: initial_weighted,
        residual_maxima,
        mass: MassSummary {
            initial: initial_mass,
            final_value: records.last().map_or(initial_mass, |r| r.mass),
            max_relative_drift: drift,
        },
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files,
    };
    if cfg.wants("json") {
        serde_json::to_writer_pretty(BufWriter::new(File::create(&summary_path)?), &summary)?;
    }
    Ok(RunOutput { summary, records, final_state: state })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSummary {
    pub seed: u64,
    pub samples: usize,
    pub band_limit: f64,
    pub reports: usize,
    pub table: Vec<SignatureRow>,
    pub bilinear: Vec<BilinearSpaceReport>,
    pub coifman_meyer: Vec<CaseOneReport>,
    /// Largest ratio of estimate to predicted scaling over the multiplier cells.
    pub coifman_meyer_constant: Option<f64>,
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct ResonanceOutput {
    pub reports: Vec<ResonanceReport>,
    pub summary: ResonanceSummary,
}

/// Classifies every configured (signature, cell) pair and writes the report files.
pub fn run_resonance_report(cfg: &RunConfig) -> Result<ResonanceOutput> {
    cfg.validate()?;
    let r = &cfg.resonance;
    let grid = cfg.grid()?;
    let band_limit = grid.nyquist();
    let signatures = cfg.signatures()?;
    let cells = cfg
        .cells()
        .into_iter()
        .map(|c| c.clipped(band_limit))
        .collect::<Result<Vec<_>>>()?;
    let dir = cfg.output.directory.clone();
    std::fs::create_dir_all(&dir)?;

    let mut reports = Vec::with_capacity(signatures.len() * cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        for sig in &signatures {
            // one sample set per cell, shared across signatures
            reports.push(classify_resonance(*sig, r.convention, cell, r.samples, cfg.seed.wrapping_add(ci as u64))?);
        }
    }
    let bilinear = r
        .bilinear_cells
        .iter()
        .map(|c| bilinear_space_resonance(1, c[0], c[1], c[2], r.samples, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    let coifman_meyer = r
        .cm_cells
        .iter()
        .map(|c| case_one_estimate(1, -1, *c, r.cm_points))
        .collect::<Result<Vec<_>>>()?;
    let coifman_meyer_constant = coifman_meyer.iter().map(|c| c.ratio).reduce(f64::max);

    let mut files = Vec::new();
    let path = dir.join("resonance_reports.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &reports)?;
    files.push(path);
    for h in &r.heatmaps {
        let sig = h.signature.parse()?;
        let rows = phase_heatmap(sig, r.convention, h.xi, h.sigma, h.extent, h.points)?;
        let path = dir.join(format!("heatmap_{}.csv", h.signature.replace('+', "p").replace('-', "m")));
        write_heatmap_csv(BufWriter::new(File::create(&path)?), &rows)?;
        files.push(path);
    }
    let summary_path = dir.join("resonance_summary.json");
    files.push(summary_path.clone());
    let summary = ResonanceSummary {
        seed: cfg.seed,
        samples: r.samples,
        band_limit,
        reports: reports.len(),
        table: signature_table(),
        bilinear,
        coifman_meyer,
        coifman_meyer_constant,
        files,
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(&summary_path)?), &summary)?;
    Ok(ResonanceOutput { reports, summary })
}
