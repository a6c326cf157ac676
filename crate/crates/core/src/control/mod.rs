//! Boundary feedback laws and the quantities derived from them.
//!
//! The compensated law is
//!
//! ```text
//! q_c(t) = −c [ ∫_{t−D}^{t} q_c + (k/α) ∫₀^s (T − Tm) dx + (k/β)(s − s_r) ]
//! ```
//!
//! and the nominal law drops the first integral.

pub mod dde;

use crate::delay_line::DelayLine;
use crate::error::{Result, StefanError};
use crate::model::{init_state, PhysicalParams, PlantState, ScenarioConfig};
use crate::solver::{applied_flux, plant_energy, Stepper};

pub use dde::{halanay_rate, positivity_probe, solve_controller_dde, DdeSolution, HalanayCheck, ProbeResult};

/// A command and its three summands (all J/m before the gain is applied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub q_c: f64,
    /// ∫ q_c over the compensated window
    pub stored: f64,
    /// (k/α) ∫₀^s (T − Tm) dx
    pub thermal: f64,
    /// (k/β)(s − s_r)
    pub interface: f64,
}

impl ControlOutput {
    pub fn bracket(&self) -> f64 {
        self.stored + self.thermal + self.interface
    }
}

fn plant_terms(state: &PlantState, params: &PhysicalParams, s_r: f64) -> (f64, f64) {
    (
        params.heat_capacity_per_volume() * state.superheat_integral(),
        params.latent_per_volume() * state.x_err(s_r),
    )
}

/// Delay-free design.
pub fn nominal_law(state: &PlantState, params: &PhysicalParams, c: f64, s_r: f64) -> ControlOutput {
    let (thermal, interface) = plant_terms(state, params, s_r);
    ControlOutput {
        q_c: -c * (thermal + interface),
        stored: 0.0,
        thermal,
        interface,
    }
}

/// Delay-compensated law at `state.t`.
///
/// When the newest stored sample is older than `state.t`, the command being
/// computed is itself part of the window; the trapezoid over the gap is then
/// closed implicitly, so the returned `q_c` satisfies the law exactly once it
/// is pushed onto the line.
pub fn compensated_law(
    state: &PlantState,
    line: &DelayLine,
    params: &PhysicalParams,
    c: f64,
    s_r: f64,
    d: f64,
) -> Result<ControlOutput> {
    let t = state.t;
    let (thermal, interface) = plant_terms(state, params, s_r);
    let last = line
        .last_time()
        .ok_or_else(|| StefanError::InsufficientHistory("empty delay line".into()))?;
    if last >= t {
        let stored = line.integral(t - d, t)?;
        return Ok(ControlOutput {
            q_c: -c * (stored + thermal + interface),
            stored,
            thermal,
            interface,
        });
    }
    let q_last = line.last_flux().unwrap_or(0.0);
    let gap = t - last;
    let known = if t - d <= last {
        line.integral(t - d, last)?
    } else {
        // whole window lies in the gap; the command is constant on it
        return Err(StefanError::InsufficientHistory(format!(
            "window [{}, {t}] starts after the newest sample at {last}",
            t - d
        )));
    };
    let q = -c * (known + 0.5 * gap * q_last + thermal + interface) / (1.0 + 0.5 * c * gap);
    Ok(ControlOutput {
        q_c: q,
        stored: known + 0.5 * gap * (q_last + q),
        thermal,
        interface,
    })
}

/// Smallest admissible setpoint, s0 + β(∫_{−D}^0 q/k + (1/α)∫₀^{s0}(T0 − Tm)).
pub fn setpoint_min(config: &ScenarioConfig, params: &PhysicalParams) -> Result<f64> {
    let state = init_state(config, params)?;
    if config.q_past < 0.0 {
        return Err(StefanError::domain("q_past", "past input must be non-negative"));
    }
    let history = config.q_past * config.d / params.k;
    let heat = state.superheat_integral() / params.alpha;
    Ok(config.s0 + params.beta * (history + heat))
}

/// Plant energy plus the input stored over the last `d` seconds (J/m). With
/// `d` the plant delay this is conserved up to the injected input.
pub fn total_energy(state: &PlantState, line: &DelayLine, params: &PhysicalParams, d: f64) -> Result<f64> {
    Ok(plant_energy(state, params, 0.0) + line.integral(state.t - d, state.t)?)
}

/// Nominal law evaluated on the state predicted `d` seconds ahead.
///
/// The plant is re-simulated from `state` with the same grid and step
/// (`dt`) as the closed loop, driven by the inputs already committed to
/// `line`, which must cover `[t − d, t]`. Steps are aligned to multiples of
/// `dt` so the prediction reproduces the closed-loop discretization.
pub fn predictor_oracle(
    state: &PlantState,
    line: &DelayLine,
    params: &PhysicalParams,
    c: f64,
    s_r: f64,
    d: f64,
    dt: f64,
) -> Result<f64> {
    if d == 0.0 {
        return Ok(nominal_law(state, params, c, s_r).q_c);
    }
    let t = state.t;
    match line.window() {
        Some((start, end)) if start <= t - d + 1e-9 * (1.0 + t.abs()) && end >= t => {}
        _ => {
            return Err(StefanError::InsufficientHistory(format!(
                "inputs over [{}, {t}] are not all committed",
                t - d
            )))
        }
    }
    let steps = (d / dt).round() as u64;
    if (steps as f64 * dt - d).abs() > 1e-9 * d {
        return Err(StefanError::domain("dt", "prediction horizon must be a whole number of steps"));
    }
    let n0 = (t / dt).round() as i64;
    let mut predicted = state.clone();
    let mut stepper = Stepper::new(*params);
    for i in 0..steps {
        let t_i = (n0 + i as i64) as f64 * dt;
        let flux = applied_flux(line, t_i, dt, d)?;
        stepper.advance(&mut predicted, flux, dt)?;
        predicted.t = (n0 + i as i64 + 1) as f64 * dt;
    }
    Ok(nominal_law(&predicted, params, c, s_r).q_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn equilibrium(_p: &PhysicalParams, s: f64) -> PlantState {
        PlantState::melted(10, s)
    }

    #[test]
    fn nominal_law_signs() {
        let p = PhysicalParams::zinc();
        assert_eq!(nominal_law(&equilibrium(&p, 0.15), &p, 0.01, 0.15).q_c, 0.0);
        let out = nominal_law(&equilibrium(&p, 0.1), &p, 0.01, 0.15);
        assert_relative_eq!(out.q_c, 0.01 * p.latent_per_volume() * 0.05, max_relative = 1e-12);
        assert!(out.q_c > 0.0);
    }

    #[test]
    fn reference_initial_commands() {
        // hand evaluation of the three summands for the zinc strip
        let p = PhysicalParams::zinc();
        let cfg = ScenarioConfig::reference();
        let st = init_state(&cfg, &p).unwrap();
        let thermal = p.rho * p.cp * 50.0 * 0.1 / 2.0;
        let interface = p.rho * p.dh * (0.1 - 0.15);
        let nominal = nominal_law(&st, &p, 0.01, 0.15);
        assert_relative_eq!(nominal.thermal, thermal, max_relative = 1e-12);
        assert_relative_eq!(nominal.interface, interface, max_relative = 1e-12);
        assert_relative_eq!(nominal.thermal, 6.40e6, max_relative = 1e-3);
        assert_relative_eq!(nominal.interface, -3.678e7, max_relative = 1e-3);
        assert_relative_eq!(nominal.q_c, 3.03e5, max_relative = 5e-3);

        let line = DelayLine::constant(120.0, 500.0, 0.0).unwrap();
        let out = compensated_law(&st, &line, &p, 0.01, 0.15, 120.0).unwrap();
        assert_relative_eq!(out.stored, 6.0e4, max_relative = 1e-12);
        assert_relative_eq!(out.q_c, -0.01 * (6.0e4 + thermal + interface), max_relative = 1e-12);
        assert_relative_eq!(out.q_c, 3.03e5, max_relative = 2e-3);
    }

    #[test]
    fn implicit_closure_satisfies_the_law_after_push() {
        let p = PhysicalParams::zinc();
        let cfg = ScenarioConfig::reference();
        let st = init_state(&cfg, &p).unwrap();
        let dt = 0.003;
        let mut line = DelayLine::constant(121.0, 500.0, -dt).unwrap();
        let out = compensated_law(&st, &line, &p, 0.01, 0.15, 120.0).unwrap();
        assert_relative_eq!(out.q_c, -0.01 * out.bracket(), max_relative = 1e-14);
        line.push(0.0, out.q_c).unwrap();
        let again = compensated_law(&st, &line, &p, 0.01, 0.15, 120.0).unwrap();
        assert_relative_eq!(again.q_c, out.q_c, max_relative = 1e-12);
    }

    #[test]
    fn compensated_law_at_equilibrium_and_errors() {
        let p = PhysicalParams::zinc();
        let line = DelayLine::constant(10.0, 0.0, 0.0).unwrap();
        let out = compensated_law(&equilibrium(&p, 0.15), &line, &p, 0.01, 0.15, 10.0).unwrap();
        assert_eq!(out.q_c, 0.0);
        let short = DelayLine::constant(5.0, 0.0, 0.0).unwrap();
        assert!(compensated_law(&equilibrium(&p, 0.15), &short, &p, 0.01, 0.15, 10.0).is_err());
        let empty = DelayLine::new(5.0).unwrap();
        assert!(matches!(
            compensated_law(&equilibrium(&p, 0.15), &empty, &p, 0.01, 0.15, 1.0),
            Err(StefanError::InsufficientHistory(_))
        ));
    }

    #[test]
    fn setpoint_restriction() {
        let p = PhysicalParams::zinc();
        let cfg = ScenarioConfig::reference();
        let smin = setpoint_min(&cfg, &p).unwrap();
        // β q_past D / k + β T̄ s0 / (2α) by hand
        let oracle = 0.1 + p.beta * 500.0 * 120.0 / 116.0 + p.beta * 50.0 * 0.1 / (2.0 * p.alpha);
        assert_relative_eq!(smin, oracle, max_relative = 1e-12);
        assert!((0.107..=0.111).contains(&smin));
        let zero = ScenarioConfig { q_past: 0.0, t_bar: 0.0, ..cfg.clone() };
        assert_eq!(setpoint_min(&zero, &p).unwrap(), 0.1);
        let hist = |q| setpoint_min(&ScenarioConfig { q_past: q, t_bar: 0.0, ..cfg.clone() }, &p).unwrap() - 0.1;
        assert_relative_eq!(hist(1000.0), 2.0 * hist(500.0), max_relative = 1e-12);
    }

    #[test]
    fn energy_of_the_target() {
        let p = PhysicalParams::zinc();
        let line = DelayLine::constant(10.0, 0.0, 0.0).unwrap();
        let e = total_energy(&equilibrium(&p, 0.15), &line, &p, 10.0).unwrap();
        assert_relative_eq!(e, p.rho * p.dh * 0.15, max_relative = 1e-12);
        assert_relative_eq!(e, 1.103e8, max_relative = 1e-3);
    }

    #[test]
    fn predictor_trivial_cases() {
        let p = PhysicalParams::zinc();
        let cfg = ScenarioConfig { n: 20, ..ScenarioConfig::reference() };
        let st = init_state(&cfg, &p).unwrap();
        let line = DelayLine::constant(10.0, 500.0, 0.0).unwrap();
        let nominal = nominal_law(&st, &p, 0.01, 0.15).q_c;
        assert_eq!(predictor_oracle(&st, &line, &p, 0.01, 0.15, 0.0, 0.01).unwrap(), nominal);
        let eq = equilibrium(&p, 0.15);
        let idle = DelayLine::constant(10.0, 0.0, 0.0).unwrap();
        assert_eq!(predictor_oracle(&eq, &idle, &p, 0.01, 0.15, 5.0, 0.01).unwrap(), 0.0);
        assert!(matches!(
            predictor_oracle(&st, &line, &p, 0.01, 0.15, 20.0, 0.01),
            Err(StefanError::InsufficientHistory(_))
        ));
    }
}
