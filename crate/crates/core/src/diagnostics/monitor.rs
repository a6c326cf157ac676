//! Physical-constraint monitor over a recorded trace.
//!
//! Each row already carries the extremes over the solver steps it covers, so a
//! violation between two recorded rows is still caught.

use crate::model::{Trace, TraceRow};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowFlags {
    /// q_c > 0
    pub qc_pos: bool,
    /// T ≥ Tm − tol
    pub t_valid: bool,
    /// ṡ ≥ −tol
    pub s_mono: bool,
    /// s0 < s < s_r (checked for t > 0)
    pub s_window: bool,
}

impl RowFlags {
    pub fn all(&self) -> bool {
        self.qc_pos && self.t_valid && self.s_mono && self.s_window
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FirstViolations {
    pub qc_pos: Option<f64>,
    pub t_valid: Option<f64>,
    pub s_mono: Option<f64>,
    pub s_window: Option<f64>,
}

impl FirstViolations {
    pub fn none(&self) -> bool {
        self.qc_pos.is_none() && self.t_valid.is_none() && self.s_mono.is_none() && self.s_window.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub flags: Vec<RowFlags>,
    pub first: FirstViolations,
    pub violations: usize,
}

/// Flags for one row; the setpoint enters through the recorded `s − s_r`.
pub fn row_flags(row: &TraceRow, s0: f64) -> RowFlags {
    RowFlags {
        qc_pos: row.qc_min > 0.0,
        t_valid: row.superheat_min >= -tolerances::TEMPERATURE_FLOOR,
        s_mono: row.sdot_min >= -tolerances::VELOCITY_FLOOR,
        s_window: row.t <= 0.0 || (row.s_min > s0 && row.x_err_max < 0.0),
    }
}

pub fn constraint_monitor(trace: &Trace, s0: f64) -> MonitorReport {
    let mut first = FirstViolations::default();
    let mut violations = 0;
    let flags = trace
        .rows
        .iter()
        .map(|row| {
            let f = row_flags(row, s0);
            let mark = |ok: bool, slot: &mut Option<f64>| {
                if !ok && slot.is_none() {
                    *slot = Some(row.t);
                }
            };
            mark(f.qc_pos, &mut first.qc_pos);
            mark(f.t_valid, &mut first.t_valid);
            mark(f.s_mono, &mut first.s_mono);
            mark(f.s_window, &mut first.s_window);
            if !f.all() {
                violations += 1;
            }
            f
        })
        .collect();
    MonitorReport { flags, first, violations }
}
