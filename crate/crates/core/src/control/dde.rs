//! Scalar delay differential equation obeyed by the compensated command under
//! a plant-delay mismatch ΔD:
//!
//! ```text
//! q̇(t) = −c q(t) + c ( q(t − D) − q(t − D − ΔD) )
//! ```
//!
//! Integrated with Heun's method on a uniform grid; delayed values come from
//! linear interpolation of the computed solution or from the supplied history.

use crate::error::{Result, StefanError};
use crate::tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct DdeSolution {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    /// First grid time at which the solution is ≤ 0
    pub first_negative_time: Option<f64>,
}

impl DdeSolution {
    pub fn min(&self) -> f64 {
        self.q.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Linear interpolation on the solution grid (t ≥ 0).
    pub fn at(&self, t: f64) -> f64 {
        let dt = self.t[1] - self.t[0];
        let x = (t / dt).clamp(0.0, (self.t.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.t.len() - 2);
        let w = x - i as f64;
        self.q[i] + w * (self.q[i + 1] - self.q[i])
    }
}

/// Integrates the controller DDE from `q(0) = q0` over `[0, horizon]`.
/// `history` supplies `q` on negative times.
pub fn solve_controller_dde<H: Fn(f64) -> f64>(
    c: f64,
    d: f64,
    delta_d: f64,
    history: H,
    q0: f64,
    horizon: f64,
    dt: f64,
) -> Result<DdeSolution> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(StefanError::domain("dt", "step and horizon must be positive"));
    }
    if !(d > 0.0) || d + delta_d < 0.0 {
        return Err(StefanError::domain("D", "need D > 0 and D + deltaD ≥ 0"));
    }
    if delta_d != 0.0 && dt > d.min(delta_d.abs()) {
        return Err(StefanError::UnderResolved { dt, delay: d.min(delta_d.abs()) });
    }
    let steps = (horizon / dt).ceil() as usize;
    let mut t = Vec::with_capacity(steps + 1);
    let mut q = Vec::with_capacity(steps + 1);
    t.push(0.0);
    q.push(q0);
    let lag_plant = d + delta_d;

    // value at time `s` using computed values, the history, or the provisional
    // end-of-step value when `s` falls inside the current step
    let delayed = |q: &[f64], s: f64, pending: Option<f64>| -> f64 {
        if s < 0.0 {
            return history(s);
        }
        let x = s / dt;
        let i = x.floor() as usize;
        let last = q.len() - 1;
        if i >= last {
            let w = x - last as f64;
            let end = pending.unwrap_or(q[last]);
            return q[last] + w * (end - q[last]);
        }
        let w = x - i as f64;
        q[i] + w * (q[i + 1] - q[i])
    };

    let mut first_negative = if q0 <= 0.0 { Some(0.0) } else { None };
    for n in 0..steps {
        let tn = n as f64 * dt;
        let tn1 = (n + 1) as f64 * dt;
        let qn = q[n];
        let rhs = |qv: f64, a: f64, b: f64| -c * qv + c * (a - b);
        let k1 = rhs(qn, delayed(&q, tn - d, None), delayed(&q, tn - lag_plant, None));
        let pred = qn + dt * k1;
        let k2 = rhs(
            pred,
            delayed(&q, tn1 - d, Some(pred)),
            delayed(&q, tn1 - lag_plant, Some(pred)),
        );
        let next = qn + 0.5 * dt * (k1 + k2);
        if !next.is_finite() {
            return Err(StefanError::NumericalBlowUp { t: tn1 });
        }
        t.push(tn1);
        q.push(next);
        if first_negative.is_none() && next <= 0.0 {
            first_negative = Some(tn1);
        }
    }
    Ok(DdeSolution {
        t,
        q,
        first_negative_time: first_negative,
    })
}

/// Root of `γ + 3|Δ̄| e^{γ T̄₂} − 1 = 0` on [0, 1] in rescaled time, or `None`
/// when `|Δ̄| ≥ 1/3` and the comparison argument does not apply.
pub fn halanay_rate(delta_bar: f64, t2_bar: f64) -> Option<f64> {
    let a = 3.0 * delta_bar.abs();
    if a >= 1.0 {
        return None;
    }
    let g = |gamma: f64| gamma + a * (gamma * t2_bar).exp() - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    if g(hi) <= 0.0 {
        return Some(1.0);
    }
    while hi - lo > tolerances::HALANAY_BISECTION {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Outcome of the Halanay envelope test for one gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalanayCheck {
    /// |cΔD| ≥ 1/3
    NotApplicable,
    Checked {
        /// Decay rate in rescaled time (multiply by c for 1/s)
        gamma: f64,
        /// sup |q| over the history window including q(0)
        m_p: f64,
        /// max over the grid of |q(t)| / (M_p e^{−γ c t})
        worst_ratio: f64,
        holds: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub c: f64,
    pub positive: bool,
    pub first_negative_time: Option<f64>,
    pub halanay: HalanayCheck,
}

/// Solves the controller DDE for every gain in `gains` and tests positivity and
/// the Halanay envelope. `q0` maps a gain to its initial command.
#[allow(clippy::too_many_arguments)]
pub fn positivity_probe<H: Fn(f64) -> f64, Q: Fn(f64) -> f64>(
    d: f64,
    delta_d: f64,
    gains: &[f64],
    history: H,
    q0: Q,
    horizon: f64,
    dt: f64,
) -> Result<Vec<ProbeResult>> {
    let lookback = d + delta_d.max(0.0);
    if horizon < 10.0 * (d + delta_d.abs()) {
        return Err(StefanError::domain(
            "horizon",
            format!("need at least 10 (D + |deltaD|) = {} s", 10.0 * (d + delta_d.abs())),
        ));
    }
    let mut out = Vec::with_capacity(gains.len());
    for &c in gains {
        let init = q0(c);
        let sol = solve_controller_dde(c, d, delta_d, &history, init, horizon, dt)?;
        let halanay = match halanay_rate(c * delta_d, c * lookback) {
            None => HalanayCheck::NotApplicable,
            Some(gamma) => {
                let samples = (lookback / dt).ceil() as usize;
                let m_hist = (1..=samples)
                    .map(|i| history(-(i as f64 * dt).min(lookback)).abs())
                    .fold(0.0, f64::max);
                let m_p = m_hist.max(init.abs());
                let worst_ratio = sol
                    .t
                    .iter()
                    .zip(&sol.q)
                    .map(|(t, q)| q.abs() / (m_p * (-gamma * c * t).exp()))
                    .fold(0.0, f64::max);
                HalanayCheck::Checked {
                    gamma,
                    m_p,
                    worst_ratio,
                    holds: worst_ratio <= tolerances::HALANAY_SLACK,
                }
            }
        };
        out.push(ProbeResult {
            c,
            positive: sol.first_negative_time.is_none(),
            first_negative_time: sol.first_negative_time,
            halanay,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn matched_delay_is_exponential() {
        let sol = solve_controller_dde(0.01, 120.0, 0.0, |_| 500.0, 3.0e5, 1000.0, 0.05).unwrap();
        for (t, q) in sol.t.iter().zip(&sol.q) {
            assert_relative_eq!(*q, 3.0e5 * (-0.01 * t).exp(), max_relative = 1e-6);
        }
        assert!(sol.first_negative_time.is_none());
        assert_eq!(sol.q[0], 3.0e5);
    }

    #[test]
    fn zero_gain_is_constant() {
        let sol = solve_controller_dde(0.0, 30.0, 30.0, |_| 500.0, 7.0, 300.0, 0.1).unwrap();
        assert!(sol.q.iter().all(|&q| q == 7.0));
    }

    #[test]
    fn under_resolved_steps_are_rejected() {
        let err = solve_controller_dde(0.01, 30.0, 0.5, |_| 1.0, 1.0, 10.0, 1.0).unwrap_err();
        assert!(matches!(err, StefanError::UnderResolved { .. }));
    }

    #[test]
    fn under_mismatch_positivity_threshold() {
        let sol = solve_controller_dde(0.1, 30.0, 30.0, |_| 500.0, 3.0e6, 2000.0, 0.01).unwrap();
        assert!(sol.first_negative_time.is_some());
        // reference values from an independent forward-Euler run at dt = 2e-3
        let edge = solve_controller_dde(0.01, 30.0, 30.0, |_| 500.0, 3.0e5, 2000.0, 0.01).unwrap();
        let t_neg = edge.first_negative_time.unwrap();
        assert!((t_neg - 287.63).abs() < 0.5, "{t_neg}");
        assert_relative_eq!(edge.min(), -1666.0, max_relative = 1e-2);
        let small = solve_controller_dde(0.008, 30.0, 30.0, |_| 500.0, 3.0e5, 3000.0, 0.01).unwrap();
        assert!(small.first_negative_time.is_none());
    }

    #[test]
    fn halanay_root() {
        assert_eq!(halanay_rate(0.0, 1.2).map(|g| (g - 1.0).abs() < 1e-9), Some(true));
        assert_eq!(halanay_rate(1.0 / 3.0, 1.0), None);
        assert_eq!(halanay_rate(-0.5, 1.0), None);
        let g = halanay_rate(0.3, 0.6).unwrap();
        assert!(g > 0.0 && g < 1.0);
        assert!((g + 0.9 * (0.6 * g).exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn probe_reports_every_gain() {
        let res = positivity_probe(30.0, 0.0, &[0.01, 0.1], |_| 500.0, |c| c * 3.0e7, 600.0, 0.05).unwrap();
        assert_eq!(res.len(), 2);
        assert!(res.iter().all(|r| r.positive));
        assert!(positivity_probe(30.0, 30.0, &[0.01], |_| 500.0, |_| 1.0, 100.0, 0.05).is_err());
    }

    proptest! {
        #[test]
        fn halanay_root_solves_its_equation(delta in -0.33f64..0.33, t2 in 0.01f64..5.0) {
            let g = halanay_rate(delta, t2).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            if delta != 0.0 {
                let resid = g + 3.0 * delta.abs() * (g * t2).exp() - 1.0;
                prop_assert!(resid.abs() < 1e-8 * (1.0 + 3.0 * (t2).exp()));
            }
        }
    }
}
