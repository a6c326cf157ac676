//! Invariant battery run over one preset.
//!
//! A single closed-loop run is probed at evenly spaced times over the active
//! part of the transient (15 time constants, capped at the horizon). Late
//! samples carry values near roundoff and say nothing about the identities.
//!
//! Residual samples taken within `SETTLE_SPACINGS` snapshot spacings of a
//! time where the applied flux is non-smooth (the start, where the initial
//! profile need not match the flux, and every marked command break shifted
//! by the plant delay) are skipped. Differences across those times measure
//! the break, not the target system.

use super::report::{run_preset_with, ExperimentRun};
use super::ScenarioPreset;
use crate::control::predictor_oracle;
use crate::diagnostics::mismatch::f_from_line;
use crate::diagnostics::{f_bounds, f_identity, lyapunov, round_trip_error, target_residuals, TransformedState};
use crate::error::{Result, StefanError};
use crate::simulation::RunOptions;
use crate::tolerances;

/// Sampled probe times per run.
pub const PROBES: usize = 40;
/// Of those, how many also run the predictor re-simulation.
pub const PREDICTOR_PROBES: usize = 20;
/// Residual exclusion around applied-flux breaks, in snapshot spacings.
pub const SETTLE_SPACINGS: f64 = 10.0;
/// Grid size the default tolerances refer to.
const REFERENCE_CELLS: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyCheck {
    pub name: String,
    /// Worst observed value
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub run: ExperimentRun,
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&VerifyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Fixed-width table, one check per line.
    pub fn table(&self) -> String {
        let mut out = format!("{:<28} {:>12} {:>12}  result\n", "check", "worst", "tolerance");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<28} {:>12.4e} {:>12.4e}  {}\n",
                c.name,
                c.value,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

#[derive(Default)]
struct Worst {
    round_trip: f64,
    transport: f64,
    heat: f64,
    controller_boundary: f64,
    flux_boundary: f64,
    ode: f64,
    predictor: f64,
    f_rel: f64,
    f_bounds_ok: bool,
    f_samples: usize,
    residual_samples: usize,
    error: Option<StefanError>,
}

/// No applied-flux break lies within `SETTLE_SPACINGS` spacings of `mid`.
fn smooth_at(line: &crate::delay_line::DelayLine, mid: f64, spacing: f64, plant_delay: f64) -> bool {
    let settle = SETTLE_SPACINGS * spacing;
    mid > settle && line.breaks_in(mid - plant_delay - settle, mid - plant_delay + settle).is_empty()
}

/// Tolerance multiplier for grids coarser than the reference (errors are O(1/N²)).
pub fn resolution_scale(n: usize) -> f64 {
    (REFERENCE_CELLS / n as f64).powi(2).max(1.0)
}

pub fn verify(preset: &ScenarioPreset) -> Result<VerifyReport> {
    let sc = &preset.scenario;
    let cfg = &sc.config;
    let p = sc.params;
    let scale = resolution_scale(cfg.n);
    let window = cfg.horizon.min(15.0 / cfg.c);
    let every_rows = ((window / PROBES as f64 / cfg.sample_interval).round() as u64).max(1);
    let mismatch = cfg.delta_d != 0.0;

    let mut worst = Worst { f_bounds_ok: true, ..Worst::default() };
    let mut recent: Vec<TransformedState> = Vec::with_capacity(3);
    let mut row_index = 0u64;
    let mut probe_index = 0usize;
    let mut q0 = None;
    let options = RunOptions::default();
    let run = run_preset_with(preset, options, |sim, row| {
        let t = row.t;
        let q_ref = *q0.get_or_insert(row.qc_cmd.abs().max(f64::MIN_POSITIVE));
        if worst.error.is_some() || t > window + 1e-9 {
            row_index += 1;
            return;
        }
        let mut probe = || -> Result<()> {
            let tr = sim.transformed()?;
            if recent.len() == 3 {
                recent.remove(0);
            }
            recent.push(tr.clone());
            if row_index % every_rows != 0 {
                return Ok(());
            }
            let (eu, ev) = round_trip_error(&tr, &p);
            worst.round_trip = worst.round_trip.max(eu.max(ev));
            if recent.len() == 3 && t > 0.0 && smooth_at(&sim.line, recent[1].t, t - recent[1].t, cfg.plant_delay()) {
                let mid = recent[1].t;
                let f_mid = if mismatch { f_from_line(&sim.line, p.k, cfg.d, cfg.delta_d, mid)? } else { 0.0 };
                if let Ok(r) = target_residuals(&recent, &p, f_mid) {
                    worst.transport = worst.transport.max(r.transport);
                    worst.heat = worst.heat.max(r.heat);
                    worst.controller_boundary = worst.controller_boundary.max(r.controller_boundary);
                    worst.flux_boundary = worst.flux_boundary.max(r.flux_boundary);
                    worst.ode = worst.ode.max(r.ode / r.ode_rate.max(f64::MIN_POSITIVE));
                    worst.residual_samples += 1;
                }
            }
            if probe_index % (PROBES / PREDICTOR_PROBES) == 0 {
                let oracle = predictor_oracle(&sim.state, &sim.line, &p, cfg.c, cfg.s_r, cfg.d, sim.dt)?;
                worst.predictor = worst.predictor.max((sim.q_cmd - oracle).abs() / q_ref);
            }
            if mismatch && t > 0.0 {
                let ident = f_identity(&sim.line, &tr, &p, sim.dt)?;
                worst.f_rel = worst.f_rel.max(ident.f_rel_error());
                let b = f_bounds(&tr, &ident, &p, cfg.s_r);
                worst.f_bounds_ok &= b.f_holds() && b.f_prime_holds();
                worst.f_samples += 1;
            }
            probe_index += 1;
            Ok(())
        };
        if let Err(e) = probe() {
            worst.error = Some(e);
        }
        row_index += 1;
    })?;
    if let Some(e) = worst.error {
        return Err(e);
    }

    let mut checks = Vec::new();
    let mut add = |name: &str, value: f64, tolerance: f64| {
        checks.push(VerifyCheck {
            name: name.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    };
    add("transform_round_trip", worst.round_trip, tolerances::ROUND_TRIP * scale);
    let residual = tolerances::F_IDENTITY * scale;
    add("residual_transport", worst.transport, residual);
    add("residual_heat", worst.heat, residual);
    add("residual_ode", worst.ode, residual);
    add("residual_flux_boundary", worst.flux_boundary, residual);
    add("residual_controller_boundary", worst.controller_boundary, residual);
    add("predictor_identity", worst.predictor, tolerances::PREDICTOR * scale);
    add("energy_balance", run.energy_drift_max, tolerances::ENERGY_DRIFT * scale);
    if !mismatch {
        let (step, envelope) = lyapunov_checks(&run);
        add("lyapunov_W_step", step, tolerances::LYAPUNOV_STEP);
        add("lyapunov_V_envelope", envelope, 1.0);
    } else {
        add("f_identity", worst.f_rel, tolerances::F_IDENTITY * scale);
        let ok = worst.f_bounds_ok && worst.f_samples > 0;
        add("f_bounds", if ok { 0.0 } else { 1.0 }, 0.0);
    }
    for c in &run.checks {
        if let Some(ok) = c.expect.judge(c.holds) {
            add(&format!("constraint_{}", c.name), if ok { 0.0 } else { 1.0 }, 0.0);
        }
    }
    if worst.residual_samples == 0 {
        return Err(StefanError::InsufficientHistory("no residual samples were taken".into()));
    }
    Ok(VerifyReport { run, checks })
}

/// Worst relative per-row increase of W, and max V(t) / (V(0) e^{a s_r}).
pub fn lyapunov_checks(run: &ExperimentRun) -> (f64, f64) {
    let samples: Vec<_> = run.result.trace.rows.iter().filter_map(|r| r.lyapunov).collect();
    let Some(first) = samples.first() else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let bound = first.v * (first.weights.a * run.preset.scenario.config.s_r).exp();
    let step = samples
        .windows(2)
        .map(|w| (w[1].w - w[0].w) / w[0].w.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let envelope = samples.iter().map(|l| l.v / bound).fold(0.0, f64::max);
    (step, envelope)
}

/// Lyapunov sample of a bare snapshot (convenience for callers outside a run).
pub fn lyapunov_of(tr: &TransformedState, preset: &ScenarioPreset) -> crate::diagnostics::LyapunovSample {
    let cfg = &preset.scenario.config;
    let w = crate::diagnostics::LyapunovWeights::new(&preset.scenario.params, cfg.c, cfg.s_r, cfg.d, cfg.lyapunov_weight());
    lyapunov(tr, cfg.s_r, &w)
}
