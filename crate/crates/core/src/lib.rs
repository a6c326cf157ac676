//! Delay-compensated boundary control of the one-phase Stefan problem.
//!
//! A liquid strip on `[0, s(t)]` is heated through its fixed boundary by a flux
//! that reaches the plant after an actuator delay. The crate provides the
//! finite-difference plant, the nominal and delay-compensated feedback laws,
//! numerical versions of the backstepping transforms and Lyapunov functionals,
//! and the scenario presets used by the `stefan` command-line tool.

pub mod control;
pub mod delay_line;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod quad;
pub mod simulation;
pub mod solver;
pub mod tolerances;

pub use delay_line::DelayLine;
pub use error::{Result, StefanError};
pub use model::{ControlLaw, PhysicalParams, PlantState, Scenario, ScenarioConfig, Trace, TraceRow};
pub use simulation::{run_closed_loop, ClosedLoop, RunOptions, RunResult};
pub use solver::{interface_velocity, step, StepReport, Stepper};
