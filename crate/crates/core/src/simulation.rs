//! Closed-loop driver: plant, delay line and feedback advanced in lock step.
//!
//! Commands are issued on the grid `t_n = n·dt`. The pre-start flux is held up
//! to `−dt`; the first command is issued at `t = 0`, so the history has a
//! one-step ramp that is marked as a break for the diagnostics grids.

use crate::control::{compensated_law, nominal_law, total_energy};
use crate::delay_line::DelayLine;
use crate::diagnostics::{
    direct_transform, lyapunov, norm_xi, LyapunovWeights, TransformSpec, TransformedState,
};
use crate::error::{Result, StefanError};
use crate::model::{init_state, ControlLaw, PlantState, Scenario, Trace, TraceRow};
use crate::solver::{applied_flux, StepReport, Stepper};

/// Closed-loop state between steps.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub scenario: Scenario,
    pub state: PlantState,
    pub line: DelayLine,
    pub dt: f64,
    /// Index of the current time on the command grid
    pub step_index: u64,
    /// Command issued at the current time
    pub q_cmd: f64,
    /// Mean flux the plant sees over the current step
    pub q_applied: f64,
    /// ∫₀ᵗ q_c dt (trapezoid over the command grid)
    pub injected: f64,
    pub last_report: Option<StepReport>,
    stepper: Stepper,
}

impl ClosedLoop {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let cfg = &scenario.config;
        cfg.validate()?;
        let params = scenario.params;
        let dt = cfg.time_step(&params);
        if cfg.sample_interval < dt {
            return Err(StefanError::domain("sample_interval", "must be at least one solver step"));
        }
        let state = init_state(cfg, &params)?;
        // extra room for the time differences taken by the diagnostics
        let span = cfg.history_span() + 4.0 * dt + 1.0;
        let mut line = DelayLine::constant(span, cfg.q_past, -dt)?;
        line.mark_break(-dt);
        line.mark_break(0.0);
        for tb in kink_times(cfg) {
            line.mark_break(tb);
        }
        let mut sim = Self {
            scenario: scenario.clone(),
            state,
            line,
            dt,
            step_index: 0,
            q_cmd: 0.0,
            q_applied: 0.0,
            injected: 0.0,
            last_report: None,
            stepper: Stepper::new(params),
        };
        sim.q_cmd = sim.command()?;
        sim.line.push(0.0, sim.q_cmd)?;
        sim.q_applied = applied_flux(&sim.line, 0.0, dt, cfg.plant_delay())?;
        Ok(sim)
    }

    pub fn t(&self) -> f64 {
        self.state.t
    }

    fn command(&self) -> Result<f64> {
        let cfg = &self.scenario.config;
        let p = &self.scenario.params;
        Ok(match cfg.law {
            ControlLaw::Compensated => compensated_law(&self.state, &self.line, p, cfg.c, cfg.s_r, cfg.d)?.q_c,
            ControlLaw::Nominal => nominal_law(&self.state, p, cfg.c, cfg.s_r).q_c,
        })
    }

    /// Advances one command interval.
    pub fn step(&mut self) -> Result<StepReport> {
        let delay = self.scenario.config.plant_delay();
        let flux = applied_flux(&self.line, self.state.t, self.dt, delay)?;
        let report = self.stepper.advance(&mut self.state, flux, self.dt)?;
        self.step_index += 1;
        self.state.t = self.step_index as f64 * self.dt;
        let q_prev = self.q_cmd;
        self.q_cmd = self.command()?;
        if !self.q_cmd.is_finite() {
            return Err(StefanError::NumericalBlowUp { t: self.state.t });
        }
        self.line.push(self.state.t, self.q_cmd)?;
        self.injected += 0.5 * self.dt * (q_prev + self.q_cmd);
        self.q_applied = flux;
        self.last_report = Some(report);
        Ok(report)
    }

    /// Energy including the input still in transit to the plant.
    pub fn energy(&self) -> Result<f64> {
        total_energy(&self.state, &self.line, &self.scenario.params, self.scenario.config.plant_delay())
    }

    pub fn transform_spec(&self) -> TransformSpec {
        let cfg = &self.scenario.config;
        TransformSpec {
            c: cfg.c,
            s_r: cfg.s_r,
            d: cfg.d,
            delta_d: cfg.delta_d,
            delay_cells: cfg.delay_cells,
        }
    }

    pub fn transformed(&self) -> Result<TransformedState> {
        direct_transform(&self.state, &self.line, &self.scenario.params, &self.transform_spec())
    }

    pub fn lyapunov_weights(&self) -> LyapunovWeights {
        let cfg = &self.scenario.config;
        LyapunovWeights::new(&self.scenario.params, cfg.c, cfg.s_r, cfg.d, cfg.lyapunov_weight())
    }
}

/// Times where the command acquires a kink: the jump at t = 0 re-enters the
/// law's derivative once it reaches the end of the stored window (t = D) and
/// once it reaches the plant (t = D + ΔD). Under exact compensation the two
/// cancel.
fn kink_times(cfg: &crate::model::ScenarioConfig) -> Vec<f64> {
    let plant = cfg.plant_delay();
    let mut times = match cfg.law {
        ControlLaw::Compensated if cfg.delta_d != 0.0 => vec![cfg.d, plant],
        ControlLaw::Compensated => vec![],
        ControlLaw::Nominal => vec![plant],
    };
    times.retain(|&t| t > 0.0);
    times.sort_by(f64::total_cmp);
    times
}

/// What to record while running.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Overrides the configured horizon
    pub horizon: Option<f64>,
    /// Evaluate Lyapunov functionals and Ξ on recorded rows
    pub diagnostics: bool,
    /// Attach diagnostics to every this-many recorded rows (and the last one)
    pub diagnostics_stride: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            horizon: None,
            diagnostics: true,
            diagnostics_stride: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: Trace,
    /// Fatal solver error, with the trace kept up to the failure
    pub error: Option<StefanError>,
    pub steps: u64,
    /// Energy at t = 0 (J/m)
    pub e0: f64,
}

#[derive(Debug, Clone, Copy)]
struct Extremes {
    qc: f64,
    superheat: f64,
    sdot: f64,
    s_min: f64,
    x_err_max: f64,
}

impl Extremes {
    fn at(sim: &ClosedLoop, sdot: f64) -> Self {
        Self {
            qc: sim.q_cmd,
            superheat: sim.state.min_superheat(),
            sdot,
            s_min: sim.state.s,
            x_err_max: sim.state.x_err(sim.scenario.config.s_r),
        }
    }

    fn absorb(&mut self, other: Extremes) {
        self.qc = self.qc.min(other.qc);
        self.superheat = self.superheat.min(other.superheat);
        self.sdot = self.sdot.min(other.sdot);
        self.s_min = self.s_min.min(other.s_min);
        self.x_err_max = self.x_err_max.max(other.x_err_max);
    }
}

fn record(sim: &ClosedLoop, ext: Extremes, sdot: f64, diagnostics: bool) -> Result<TraceRow> {
    let cfg = &sim.scenario.config;
    let p = &sim.scenario.params;
    let (lyap, xi) = if diagnostics {
        let tr = sim.transformed()?;
        let l = lyapunov(&tr, cfg.s_r, &sim.lyapunov_weights());
        let xi = norm_xi(&sim.state, &sim.line, cfg.s_r, cfg.d, cfg.delay_cells)?;
        (Some(l), Some(xi))
    } else {
        (None, None)
    };
    Ok(TraceRow {
        t: sim.state.t,
        s: sim.state.s,
        sdot,
        qc_cmd: sim.q_cmd,
        qc_applied: sim.q_applied,
        t0: sim.state.boundary_temperature(p.tm),
        energy: sim.energy()?,
        injected: sim.injected,
        lyapunov: lyap,
        xi,
        qc_min: ext.qc,
        superheat_min: ext.superheat,
        sdot_min: ext.sdot,
        s_min: ext.s_min,
        x_err_max: ext.x_err_max,
    })
}

/// Runs to the horizon, recording a row every `sample_interval` seconds and at
/// the final time. `on_sample` sees the loop after each recorded row.
pub fn run_closed_loop<F: FnMut(&ClosedLoop, &TraceRow)>(
    scenario: &Scenario,
    options: RunOptions,
    mut on_sample: F,
) -> Result<RunResult> {
    let mut sim = ClosedLoop::new(scenario)?;
    let horizon = options.horizon.unwrap_or(scenario.config.horizon);
    let every = ((scenario.config.sample_interval / sim.dt).round() as u64).max(1);
    let total = (horizon / sim.dt).round() as u64;
    let mut trace = Trace::default();
    let e0 = sim.energy()?;
    let sdot0 = crate::solver::interface_velocity(&sim.state, &scenario.params);
    let row = record(&sim, Extremes::at(&sim, sdot0), sdot0, options.diagnostics)?;
    on_sample(&sim, &row);
    trace.push(row);
    let mut ext: Option<Extremes> = None;
    let mut error = None;
    let stride = options.diagnostics_stride.max(1);
    let mut rows = 1u64;
    while sim.step_index < total {
        let report = match sim.step() {
            Ok(r) => r,
            Err(e) if e.is_numerical_fatal() => {
                error = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        let here = Extremes::at(&sim, report.sdot_min);
        match ext.as_mut() {
            Some(x) => x.absorb(here),
            None => ext = Some(here),
        }
        if sim.step_index % every == 0 || sim.step_index == total {
            let sdot = crate::solver::interface_velocity(&sim.state, &scenario.params);
            let diag = options.diagnostics && (rows % stride == 0 || sim.step_index == total);
            let row = record(&sim, ext.take().unwrap_or(here), sdot, diag)?;
            on_sample(&sim, &row);
            trace.push(row);
            rows += 1;
        }
    }
    Ok(RunResult {
        steps: sim.step_index,
        trace,
        error,
        e0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PhysicalParams, ScenarioConfig};
    use approx::assert_relative_eq;

    fn short() -> Scenario {
        Scenario::new(
            PhysicalParams::zinc(),
            ScenarioConfig {
                n: 40,
                horizon: 20.0,
                sample_interval: 1.0,
                delay_cells: 40,
                ..ScenarioConfig::reference()
            },
        )
    }

    #[test]
    fn first_command_and_row_layout() {
        let sc = short();
        let sim = ClosedLoop::new(&sc).unwrap();
        assert_relative_eq!(sim.q_cmd, 3.03e5, max_relative = 3e-3);
        let res = run_closed_loop(&sc, RunOptions::default(), |_, _| {}).unwrap();
        assert!(res.error.is_none());
        assert_eq!(res.trace.len(), 21);
        assert_relative_eq!(res.trace.last().unwrap().t, 20.0, epsilon = 1e-9);
        assert!(res.trace.rows.iter().all(|r| r.lyapunov.is_some() && r.xi.is_some()));
        assert!(res.trace.rows.windows(2).all(|w| w[1].t > w[0].t));
        let sparse = RunOptions { diagnostics_stride: 4, ..RunOptions::default() };
        let res = run_closed_loop(&sc, sparse, |_, _| {}).unwrap();
        let with: Vec<f64> = res.trace.rows.iter().filter(|r| r.xi.is_some()).map(|r| r.t).collect();
        assert_eq!(with.len(), 6);
        assert_relative_eq!(with[1], 4.0, epsilon = 1e-9);
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let sc = short();
        let a = run_closed_loop(&sc, RunOptions::default(), |_, _| {}).unwrap();
        let b = run_closed_loop(&sc, RunOptions::default(), |_, _| {}).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn mismatch_kinks_are_marked() {
        let mut sc = short();
        sc.config.d = 8.0;
        sc.config.delta_d = 4.0;
        let sim = ClosedLoop::new(&sc).unwrap();
        assert_eq!(sim.line.breaks_in(-1.0, 100.0), vec![-sim.dt, 0.0, 8.0, 12.0]);
        let exact = ClosedLoop::new(&short()).unwrap();
        assert_eq!(exact.line.breaks_in(-1.0, 100.0), vec![-exact.dt, 0.0]);
    }

    #[test]
    fn matched_loop_applies_the_past_flux_during_warm_up() {
        let sc = short();
        let mut sim = ClosedLoop::new(&sc).unwrap();
        for _ in 0..10 {
            sim.step().unwrap();
            assert_relative_eq!(sim.q_applied, 500.0, max_relative = 1e-12);
        }
    }
}
