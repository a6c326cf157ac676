//! Explicit finite-difference stepper for the boundary-immobilized Stefan problem.
//!
//! With `ξ = x/s(t)` and `u(ξ, t) = T(ξ s, t) − Tm` the plant reads
//!
//! ```text
//! u_t = (α/s²) u_ξξ + ξ (ṡ/s) u_ξ,   0 < ξ < 1
//! −(k/s) u_ξ(0, t) = q(t),   u(1, t) = 0,   ṡ = −(β/s) u_ξ(1, t)
//! ```
//!
//! Interior nodes use central differences and the flux boundary a ghost node.
//! The Stefan condition is discretized as
//!
//! ```text
//! ṡ = β u_{N−1} / (s Δξ (1 + β u_{N−1} / (2α)))
//! ```
//!
//! which is second-order consistent and makes the semi-discrete trapezoid
//! energy `(k/α) s Δξ Σ' u_i + (k/β) s` change at exactly the boundary input
//! rate. What remains of the energy error comes from the forward-Euler time
//! step and is first order in `dt`. `ṡ` is taken from the profile at the start
//! of each sub-step (lagged coupling).

use crate::delay_line::DelayLine;
use crate::error::{Result, StefanError};
use crate::model::{PhysicalParams, PlantState, ScenarioConfig};

/// Largest accepted value of α h N²/s².
pub const STABILITY_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Interface velocity at the start of the step (m/s)
    pub sdot: f64,
    /// Most negative velocity over the sub-steps (m/s)
    pub sdot_min: f64,
    /// Flux held on the boundary during the step (W/m)
    pub applied_flux: f64,
    pub dt_used: f64,
    /// Largest α h N²/s² over the sub-steps
    pub stability_margin: f64,
    pub substeps: usize,
}

/// Interface velocity from the energy-consistent stencil at the interface cell.
/// NaN when the interface cell is undercooled past `−2α/β`, where the stencil
/// has no meaning.
pub fn interface_velocity(state: &PlantState, params: &PhysicalParams) -> f64 {
    let n = state.cells();
    let u = state.u[n - 1] - state.u[n];
    let factor = 1.0 + params.beta * u / (2.0 * params.alpha);
    if !(factor > 0.0) {
        return f64::NAN;
    }
    params.beta * u / (state.s * state.dxi() * factor)
}

/// Mean of the delayed flux over `[t − delay, t + dt − delay]`. When the end of
/// that window is not yet in the line (delay shorter than a step) the flux at
/// `t − delay` is held instead.
pub fn applied_flux(line: &DelayLine, t: f64, dt: f64, delay: f64) -> Result<f64> {
    let a = t - delay;
    let b = a + dt;
    match line.last_time() {
        Some(last) if b <= last => Ok(line.integral(a, b)? / dt),
        _ => line.lookup(a),
    }
}

/// Reusable stepper holding a scratch buffer for the update.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: PhysicalParams,
    rate: Vec<f64>,
}

impl Stepper {
    pub fn new(params: PhysicalParams) -> Self {
        Self {
            params,
            rate: Vec::new(),
        }
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Largest sub-step allowed by the explicit stability bound at the current `s`.
    pub fn max_substep(&self, state: &PlantState) -> f64 {
        let n = state.cells() as f64;
        STABILITY_LIMIT * state.s * state.s / (self.params.alpha * n * n)
    }

    /// Advances `state` by `dt` with the boundary flux held at `flux`,
    /// splitting into equal sub-steps whenever the stability bound requires it.
    pub fn advance(&mut self, state: &mut PlantState, flux: f64, dt: f64) -> Result<StepReport> {
        if !(dt > 0.0) {
            return Err(StefanError::domain("dt", format!("must be positive, got {dt}")));
        }
        let t_start = state.t;
        let sdot = interface_velocity(state, &self.params);
        let mut report = StepReport {
            sdot,
            sdot_min: sdot,
            applied_flux: flux,
            dt_used: dt,
            stability_margin: 0.0,
            substeps: 0,
        };
        let mut remaining = dt;
        while remaining > 0.0 {
            let h_max = self.max_substep(state);
            let pieces = (remaining / h_max).ceil().max(1.0);
            let h = if pieces <= 1.0 { remaining } else { remaining / pieces };
            let n = state.cells() as f64;
            let margin = self.params.alpha * h * n * n / (state.s * state.s);
            let v = self.substep(state, flux, h)?;
            report.sdot_min = report.sdot_min.min(v);
            report.stability_margin = report.stability_margin.max(margin);
            report.substeps += 1;
            remaining = if pieces <= 1.0 { 0.0 } else { remaining - h };
        }
        state.t = t_start + dt;
        Ok(report)
    }

    /// One forward-Euler step of size `h`; returns the velocity used.
    fn substep(&mut self, state: &mut PlantState, flux: f64, h: f64) -> Result<f64> {
        let p = self.params;
        let n = state.cells();
        let s = state.s;
        let dxi = 1.0 / n as f64;
        let sdot = interface_velocity(state, &p);
        let diff = p.alpha / (s * s * dxi * dxi);
        let adv = sdot / (s * 2.0 * dxi);
        let u = &state.u;
        self.rate.resize(n + 1, 0.0);
        let rate = &mut self.rate;
        // ghost node u_{-1} = u_1 + 2 Δξ s q / k
        rate[0] = diff * (2.0 * (u[1] - u[0]) + 2.0 * dxi * s * flux / p.k);
        for i in 1..n {
            let xi = i as f64 * dxi;
            rate[i] = diff * ((u[i + 1] - u[i]) - (u[i] - u[i - 1])) + xi * adv * (u[i + 1] - u[i - 1]);
        }
        for i in 0..n {
            state.u[i] += h * rate[i];
        }
        state.u[n] = 0.0;
        let t_here = state.t + h;
        let s_new = s + h * sdot;
        if !sdot.is_finite() || state.u.iter().any(|v| !v.is_finite()) {
            return Err(StefanError::NumericalBlowUp { t: t_here });
        }
        if s_new <= 0.0 {
            return Err(StefanError::DomainCollapse { s: s_new, t: t_here });
        }
        state.shift_interface(h * sdot);
        Ok(sdot)
    }
}

/// One solver step of the configured size, driven by the mean of the delayed
/// flux `q(· − (D + ΔD))` over the step.
pub fn step(
    state: &PlantState,
    line: &DelayLine,
    params: &PhysicalParams,
    config: &ScenarioConfig,
) -> Result<(PlantState, StepReport)> {
    let dt = config.time_step(params);
    let flux = applied_flux(line, state.t, dt, config.plant_delay())?;
    let mut next = state.clone();
    let report = Stepper::new(*params).advance(&mut next, flux, dt)?;
    Ok((next, report))
}

/// Plant energy `(k/α)∫(T − Tm)dx + (k/β)(s − s_ref)` on the discrete grid (J/m).
pub fn plant_energy(state: &PlantState, params: &PhysicalParams, s_ref: f64) -> f64 {
    params.heat_capacity_per_volume() * state.superheat_integral()
        + params.latent_per_volume() * state.x_err(s_ref)
}
