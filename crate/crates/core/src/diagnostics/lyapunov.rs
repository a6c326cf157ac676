//! Lyapunov functionals of the target system.
//!
//! ```text
//! V1 = ∫_{−D}^0 e^{−mx} z_x² dx
//! V2 = ½ ∫_0^s (ω²/s_r² + ω_x²) dx
//! V3 = ½ X²
//! V  = q V1 + V2 + p V3,   W = V e^{−a s}
//! ```

use super::transform::TransformedState;
use crate::model::PhysicalParams;
use crate::quad;

/// Weights of the composite functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights {
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub a: f64,
}

impl LyapunovWeights {
    pub fn new(params: &PhysicalParams, c: f64, s_r: f64, d: f64, m: f64) -> Self {
        let (alpha, beta) = (params.alpha, params.beta);
        let p = c * alpha / (16.0 * beta * beta * s_r);
        let q = (16.0 * s_r.powi(3) / (3.0 * alpha)).max(d * alpha / (2.0 * m * s_r));
        let a = (8.0 * d / q).max(1.0 / s_r).max(4.0 * c * c / (p * beta * beta));
        Self { m, p, q, a }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSample {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v: f64,
    pub w: f64,
    pub weights: LyapunovWeights,
}

impl LyapunovSample {
    pub fn zero(weights: LyapunovWeights) -> Self {
        Self {
            v1: 0.0,
            v2: 0.0,
            v3: 0.0,
            v: 0.0,
            w: 0.0,
            weights,
        }
    }
}

/// Evaluates the functionals on a transformed snapshot. V1 integrates over the
/// part of the delay grid left of zero.
pub fn lyapunov(tr: &TransformedState, s_r: f64, weights: &LyapunovWeights) -> LyapunovSample {
    let m = weights.m;
    let v1 = tr.y.integrate_slope_sq(&tr.z, 0, tr.i0, |x| (-m * x).exp());
    let h = tr.dx();
    let omega_x = quad::derivative(&tr.x, &tr.omega);
    let integrand: Vec<f64> = tr
        .omega
        .iter()
        .zip(&omega_x)
        .map(|(o, ox)| o * o / (s_r * s_r) + ox * ox)
        .collect();
    let v2 = 0.5 * quad::trapezoid_uniform(&integrand, h);
    let v3 = 0.5 * tr.x_err * tr.x_err;
    let v = weights.q * v1 + v2 + weights.p * v3;
    LyapunovSample {
        v1,
        v2,
        v3,
        v,
        w: v * (-weights.a * tr.s).exp(),
        weights: *weights,
    }
}
