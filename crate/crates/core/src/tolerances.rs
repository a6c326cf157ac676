//! Pinned numerical tolerances.
//!
//! Everything that decides pass/fail lives here so the acceptance suite, the
//! `verify` command and the unit tests agree on one set of numbers.

/// Undershoot below the melting point tolerated by the monitor (K).
pub const TEMPERATURE_FLOOR: f64 = 1e-6;

/// Negative interface velocity tolerated by the monitor (m/s).
pub const VELOCITY_FLOOR: f64 = 1e-9;

/// Terminal interface error for the exact-compensation run (m).
pub const SETPOINT_REACH: f64 = 1e-3;

/// Terminal interface error for the over-estimated mismatch runs (m).
pub const SETPOINT_REACH_MISMATCH: f64 = 2e-3;

/// Decay law error at the default resolution, relative to q_c(0).
pub const CLOSED_FORM_DEFAULT: f64 = 0.02;

/// Decay law error at N = 400 and half the default step.
pub const CLOSED_FORM_FINE: f64 = 0.005;

/// Energy drift relative to E(0).
pub const ENERGY_DRIFT: f64 = 0.01;

/// Predictor identity error relative to q_c(0).
pub const PREDICTOR: f64 = 1e-2;

/// Transform round trip, sup-norm relative error at N = 200.
pub const ROUND_TRIP: f64 = 1e-3;

/// Minimum error ratio when the grids are doubled (second order gives 4).
pub const ROUND_TRIP_RATIO: f64 = 3.5;

/// Relative growth of the weighted functional W allowed between samples.
pub const LYAPUNOV_STEP: f64 = 1e-3;

/// Closed-form versus direct evaluation of the f identity.
pub const F_IDENTITY: f64 = 1e-2;

/// Slack on the Halanay envelope.
pub const HALANAY_SLACK: f64 = 1.01;

/// Bisection tolerance on the Halanay rate.
pub const HALANAY_BISECTION: f64 = 1e-10;

/// Kernel identities.
pub const KERNEL: f64 = 1e-12;

/// Relative size of z(−D) against the scale of z.
pub const Z_BOUNDARY: f64 = 1e-10;

/// Smallest observed order accepted on a spatial ladder (dt ∝ 1/N²).
pub const SPATIAL_ORDER: f64 = 1.8;

/// Smallest observed order accepted on a temporal ladder.
pub const TEMPORAL_ORDER: f64 = 0.9;
