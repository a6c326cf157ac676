//! Discrete residuals of the target system along a simulated trajectory.
//!
//! ```text
//! z_t + z_x = 0                         transport
//! w_t − α w_xx − (c/β) ṡ X = 0          heat
//! Ẋ + cX + β w_x(s) = 0                 interface
//! z(left) = c f,  w_x(0) + z(0) = 0,  w(s) = 0
//! ```
//!
//! Time derivatives use central differences over three equally spaced
//! snapshots. On the moving grid `w_t|_x = w_t|_ξ − x (ṡ/s) w_x`. Transport
//! is checked along characteristics, `z(y + h, t + h) − z(y − h, t − h)`,
//! with each outer snapshot interpolated on its own delay grid; this stays
//! second order across kinks in the input history and lets the break nodes
//! move between snapshots.

use super::transform::TransformedState;
use crate::error::{Result, StefanError};
use crate::model::PhysicalParams;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetResiduals {
    /// max |z_t + z_x| along characteristics over the larger of max |v_x| + c max |v| and max |z_x|
    pub transport: f64,
    /// max interior |w_t − α w_xx − (c/β)ṡX| over max |α w_xx| + |(c/β)ṡX|
    pub heat: f64,
    /// |Ẋ + cX + β w_x(s)| (m/s)
    pub ode: f64,
    /// |Ẋ| (m/s)
    pub ode_rate: f64,
    /// |z(left) − c f| over the sum of magnitudes of its summands
    pub controller_boundary: f64,
    /// |w_x(0) + z(0)| over the largest of |v(0)|, |z(0)| and the plant part of z
    pub flux_boundary: f64,
    /// |w(s)|
    pub interface_boundary: f64,
}

impl TargetResiduals {
    pub fn zero() -> Self {
        Self {
            transport: 0.0,
            heat: 0.0,
            ode: 0.0,
            ode_rate: 0.0,
            controller_boundary: 0.0,
            flux_boundary: 0.0,
            interface_boundary: 0.0,
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Residuals at the middle of three equally spaced snapshots. `f_mid` is the
/// in-transit input integral at the middle time (0 for matched delays).
pub fn target_residuals(
    snaps: &[TransformedState],
    params: &PhysicalParams,
    f_mid: f64,
) -> Result<TargetResiduals> {
    if snaps.len() < 3 {
        return Err(StefanError::InsufficientHistory(format!(
            "need three snapshots, got {}",
            snaps.len()
        )));
    }
    let (a, m, b) = (&snaps[snaps.len() - 3], &snaps[snaps.len() - 2], &snaps[snaps.len() - 1]);
    let h = 0.5 * (b.t - a.t);
    if !(h > 0.0) || ((m.t - a.t) - (b.t - m.t)).abs() > 1e-9 * h.max(1e-12) {
        return Err(StefanError::InsufficientHistory("snapshots must be equally spaced".into()));
    }
    if a.x.len() != m.x.len() || b.x.len() != m.x.len() {
        return Err(StefanError::InsufficientHistory(
            "snapshots must share their plant grid".into(),
        ));
    }
    let c = m.c;

    let z_x = m.y.derivative(&m.z);
    let v_x = m.y.derivative(&m.v);
    let mut transport = 0.0f64;
    for &yj in &m.y.x {
        if let (Some(za), Some(zb)) = (a.y.interpolate(&a.z, yj - h), b.y.interpolate(&b.z, yj + h)) {
            transport = transport.max((zb - za).abs() / (2.0 * h));
        }
    }
    let sup = |a: &[f64]| a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    // z carries plant terms that outlast the input, so its own slope is part of the scale
    let v_scale = (sup(&v_x) + c * sup(&m.v)).max(sup(&z_x));

    let n = m.x.len() - 1;
    let dx = m.dx();
    let sdot = (b.s - a.s) / (2.0 * h);
    let w_x = quad::derivative(&m.x, &m.w);
    let source = c / params.beta * sdot * m.x_err;
    let mut heat = 0.0f64;
    let mut diffusion = 0.0f64;
    for i in 1..n {
        let w_xx = (m.w[i + 1] - 2.0 * m.w[i] + m.w[i - 1]) / (dx * dx);
        let w_t = (b.w[i] - a.w[i]) / (2.0 * h) - m.x[i] * sdot / m.s * w_x[i];
        heat = heat.max((w_t - params.alpha * w_xx - source).abs());
        diffusion = diffusion.max((params.alpha * w_xx).abs());
    }

    let ode = (sdot + c * m.x_err + params.beta * w_x[n]).abs();

    let tail = m.y.integrate(&m.v, 0, m.i0);
    let g = m.z[0] - m.v[0] - c * tail;
    let left_scale = m.v[0].abs() + (c * tail).abs() + g.abs();
    let controller_boundary = ratio((m.z[0] - c * f_mid).abs(), left_scale);

    Ok(TargetResiduals {
        transport: ratio(transport, v_scale),
        heat: ratio(heat, diffusion + source.abs()),
        ode,
        ode_rate: sdot.abs(),
        controller_boundary,
        flux_boundary: ratio((w_x[0] + m.z0()).abs(), m.v[m.i0].abs().max(m.z0().abs()).max(m.plant_scale(params))),
        interface_boundary: m.w[n].abs(),
    })
}
