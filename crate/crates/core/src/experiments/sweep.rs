//! Gain sweeps: the full closed loop and the controller DDE, side by side.

use std::thread;

use super::report::{run_preset, ExperimentRun};
use super::ScenarioPreset;
use crate::control::{positivity_probe, ProbeResult};
use crate::diagnostics::FirstViolations;
use crate::error::Result;
use crate::simulation::{ClosedLoop, RunOptions};

/// DDE step (s).
pub const PROBE_DT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct GainEntry {
    pub c: f64,
    pub first: FirstViolations,
    /// All four constraints held and the solver finished
    pub loop_passes: bool,
    /// q_c(0) issued by the loop, the probe's initial value
    pub q0: f64,
    pub s_final: f64,
    /// Time of the last recorded row
    pub t_final: Option<f64>,
    /// The solver reached the horizon
    pub solver_ok: bool,
    pub probe: ProbeResult,
}

impl GainEntry {
    /// The loop's positivity verdict matches the probe's.
    pub fn agrees(&self) -> bool {
        self.first.qc_pos.is_none() == self.probe.positive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub entries: Vec<GainEntry>,
}

impl SweepReport {
    /// Largest gain whose full loop passed, if any.
    pub fn largest_passing_loop(&self) -> Option<f64> {
        self.entries.iter().filter(|e| e.loop_passes).map(|e| e.c).reduce(f64::max)
    }

    pub fn largest_positive_probe(&self) -> Option<f64> {
        self.entries.iter().filter(|e| e.probe.positive).map(|e| e.c).reduce(f64::max)
    }

    pub fn entry(&self, c: f64) -> Option<&GainEntry> {
        self.entries.iter().find(|e| e.c == c)
    }
}

fn one_gain<S: Fn(&ExperimentRun) + Sync>(base: &ScenarioPreset, c: f64, options: RunOptions, sink: &S) -> Result<GainEntry> {
    let mut p = base.clone();
    p.scenario.config.c = c;
    p.refresh_expectations();
    let cfg = &p.scenario.config;
    let q0 = ClosedLoop::new(&p.scenario)?.q_cmd;
    let run: ExperimentRun = run_preset(&p, options)?;
    sink(&run);
    let span = 10.0 * (cfg.d + cfg.delta_d.abs());
    let q_past = cfg.q_past;
    let probe = positivity_probe(cfg.d, cfg.delta_d, &[c], |_| q_past, |_| q0, cfg.horizon.max(span), PROBE_DT)?
        .remove(0);
    Ok(GainEntry {
        c,
        loop_passes: run.monitor.first.none() && run.result.error.is_none(),
        first: run.monitor.first,
        q0,
        s_final: run.s_final(),
        t_final: run.result.trace.last().map(|r| r.t),
        solver_ok: run.result.error.is_none(),
        probe,
    })
}

/// Runs every gain on its own thread.
pub fn gain_sweep(base: &ScenarioPreset, gains: &[f64], options: RunOptions) -> Result<SweepReport> {
    gain_sweep_with(base, gains, options, &|_: &ExperimentRun| {})
}

/// `gain_sweep` handing each finished run to `sink` on its worker thread.
pub fn gain_sweep_with<S: Fn(&ExperimentRun) + Sync>(
    base: &ScenarioPreset,
    gains: &[f64],
    options: RunOptions,
    sink: &S,
) -> Result<SweepReport> {
    let results: Vec<Result<GainEntry>> = thread::scope(|scope| {
        let handles: Vec<_> = gains
            .iter()
            .map(|&c| scope.spawn(move || one_gain(base, c, options, sink)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    Ok(SweepReport {
        entries: results.into_iter().collect::<Result<_>>()?,
    })
}
