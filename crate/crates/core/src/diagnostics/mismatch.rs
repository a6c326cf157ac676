//! The in-transit input `f(t) = ∫_{−ΔD}^0 v dx` that appears at the controller
//! boundary of the target system under a delay mismatch, its closed form in
//! the target variables, and the quadratic bounds on f² and f′².
//!
//! Closed forms (e = e^{−cΔD}, Z = ∫_0^s ζ w dx):
//!
//! ```text
//! f  =  ∫_{−ΔD}^0 e^{−c(x+ΔD)} z dx − (1 − e)((β/α) Z + ζ(s) X)
//! f′ = −z(0) + z(−ΔD) − c ∫_{−ΔD}^0 e^{−c(x+ΔD)} z dx + (1 − e)((cβ/α) Z + c ζ(s) X)
//! ```

use super::kernels::Kernels;
use super::transform::TransformedState;
use crate::delay_line::DelayLine;
use crate::error::Result;
use crate::model::PhysicalParams;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FIdentity {
    /// ∫ of the stored flux over the mismatch window, divided by k
    pub f_direct: f64,
    pub f_closed: f64,
    /// Central difference of `f_direct` in time
    pub f_prime_direct: f64,
    pub f_prime_closed: f64,
    /// Sum of the magnitudes of the closed-form terms for f, and for f′
    pub f_scale: f64,
    pub f_prime_scale: f64,
}

impl FIdentity {
    /// Error relative to the larger of |f| and the terms that cancel in the
    /// closed form (f changes sign while those terms stay finite).
    pub fn f_rel_error(&self) -> f64 {
        let scale = self.f_direct.abs().max(self.f_scale).max(f64::MIN_POSITIVE);
        (self.f_direct - self.f_closed).abs() / scale
    }

    pub fn f_prime_rel_error(&self) -> f64 {
        let scale = self.f_prime_direct.abs().max(self.f_prime_scale).max(f64::MIN_POSITIVE);
        (self.f_prime_direct - self.f_prime_closed).abs() / scale
    }
}

/// f evaluated from the delay line at time `t`.
pub fn f_from_line(line: &DelayLine, k: f64, d: f64, delta_d: f64, t: f64) -> Result<f64> {
    Ok(line.integral(t - d - delta_d, t - d)? / k)
}

/// Direct and closed-form values of f and f′ for the snapshot `tr`; the time
/// derivative of the direct value uses a central difference of width `2h`.
pub fn f_identity(
    line: &DelayLine,
    tr: &TransformedState,
    params: &PhysicalParams,
    h: f64,
) -> Result<FIdentity> {
    let dd = tr.delta_d;
    if dd == 0.0 {
        return Ok(FIdentity {
            f_direct: 0.0,
            f_closed: 0.0,
            f_prime_direct: 0.0,
            f_prime_closed: 0.0,
            f_scale: 0.0,
            f_prime_scale: 0.0,
        });
    }
    let (c, k, t) = (tr.c, params.k, tr.t);
    let f_direct = f_from_line(line, k, tr.d, dd, t)?;
    let f_prime_direct =
        (f_from_line(line, k, tr.d, dd, t + h)? - f_from_line(line, k, tr.d, dd, t - h)?) / (2.0 * h);

    let ker = Kernels::new(c, params.alpha, params.beta);
    let e = (-c * dd).exp();
    let zw = zeta_w(tr, &ker);
    let weighted: Vec<f64> = tr.y.x.iter().zip(&tr.z).map(|(&x, &z)| (-c * (x + dd)).exp() * z).collect();
    let ez = tr.y.integrate(&weighted, tr.i_mismatch, tr.i0);
    let ratio = params.beta / params.alpha;
    let zs = ker.zeta(tr.s);
    let (heat, interface) = ((1.0 - e) * ratio * zw, (1.0 - e) * zs * tr.x_err);
    let f_closed = ez - (heat + interface);
    let f_prime_closed = -tr.z0() + tr.z[tr.i_mismatch] - c * ez + c * (heat + interface);
    let f_scale = ez.abs() + heat.abs() + interface.abs();
    Ok(FIdentity {
        f_direct,
        f_closed,
        f_prime_direct,
        f_prime_closed,
        f_scale,
        f_prime_scale: tr.z0().abs() + tr.z[tr.i_mismatch].abs() + c * f_scale,
    })
}

fn zeta_w(tr: &TransformedState, ker: &Kernels) -> f64 {
    let f: Vec<f64> = tr.x.iter().zip(&tr.w).map(|(&x, &w)| ker.zeta(x) * w).collect();
    quad::trapezoid_uniform(&f, tr.dx())
}

/// The constants M̄₁..M̄₄.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl BoundConstants {
    pub fn new(params: &PhysicalParams, c: f64, delta_d: f64, s_r: f64) -> Self {
        let (alpha, beta) = (params.alpha, params.beta);
        let g = 1.0 - (-c * delta_d).exp();
        let g2 = g * g;
        let sign = if delta_d > 0.0 {
            1.0
        } else if delta_d < 0.0 {
            -1.0
        } else {
            0.0
        };
        Self {
            m1: sign * (1.0 - (-2.0 * c * delta_d).exp()) / (2.0 * c),
            m2: 8.0 * s_r * g2 / (alpha * alpha),
            m3: 8.0 * g2 / (alpha * c),
            m4: 4.0 * g2 / (beta * beta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub constants: BoundConstants,
    pub f_sq: f64,
    pub f_sq_bound: f64,
    pub f_prime_sq: f64,
    /// Bound with the coefficient 2c²M̄₁ on ‖z‖²
    pub f_prime_sq_bound: f64,
    /// Bound with the coefficient 4c²M̄₁ that Young's inequality on four terms yields
    pub f_prime_sq_bound_young: f64,
}

impl BoundReport {
    pub fn f_holds(&self) -> bool {
        self.f_sq < self.f_sq_bound || (self.f_sq == 0.0 && self.f_sq_bound == 0.0)
    }

    pub fn f_prime_holds(&self) -> bool {
        self.f_prime_sq < self.f_prime_sq_bound || (self.f_prime_sq == 0.0 && self.f_prime_sq_bound == 0.0)
    }
}

/// Evaluates both sides of
///
/// ```text
/// f²  ≤ 2M̄₁‖z‖² + M̄₂‖ω‖² + M̄₃ z(0)² + M̄₄ X²
/// f′² ≤ 4|ΔD|‖z_x‖² + 2c²M̄₁‖z‖² + c²(M̄₂‖ω‖² + M̄₃ z(0)² + M̄₄ X²)
/// ```
///
/// with ‖z‖ over the window between 0 and −ΔD and ‖ω‖ the L² norm on [0, s].
pub fn f_bounds(
    tr: &TransformedState,
    ident: &FIdentity,
    params: &PhysicalParams,
    s_r: f64,
) -> BoundReport {
    let c = tr.c;
    let dd = tr.delta_d;
    let constants = BoundConstants::new(params, c, dd, s_r);
    let (a, b) = (tr.i_mismatch.min(tr.i0), tr.i_mismatch.max(tr.i0));
    let z_sq: Vec<f64> = tr.z.iter().map(|z| z * z).collect();
    let z_norm = tr.y.integrate(&z_sq, a, b);
    let zx_norm = tr.y.integrate_slope_sq(&tr.z, a, b, |_| 1.0);
    let om_sq: Vec<f64> = tr.omega.iter().map(|o| o * o).collect();
    let om_norm = quad::trapezoid_uniform(&om_sq, tr.dx());
    let z0 = tr.z0();
    let BoundConstants { m1, m2, m3, m4 } = constants;
    let rest = m2 * om_norm + m3 * z0 * z0 + m4 * tr.x_err * tr.x_err;
    let c2 = c * c;
    BoundReport {
        constants,
        f_sq: ident.f_direct * ident.f_direct,
        f_sq_bound: 2.0 * m1 * z_norm + rest,
        f_prime_sq: ident.f_prime_direct * ident.f_prime_direct,
        f_prime_sq_bound: 4.0 * dd.abs() * zx_norm + 2.0 * c2 * m1 * z_norm + c2 * rest,
        f_prime_sq_bound_young: 4.0 * dd.abs() * zx_norm + 4.0 * c2 * m1 * z_norm + c2 * rest,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_vanish_with_the_mismatch() {
        let p = PhysicalParams::zinc();
        let z = BoundConstants::new(&p, 0.01, 0.0, 0.15);
        assert_eq!((z.m1, z.m2, z.m3, z.m4), (0.0, 0.0, 0.0, 0.0));
        for dd in [1e-3, -1e-3] {
            let small = BoundConstants::new(&p, 0.01, dd, 0.15);
            assert_relative_eq!(small.m1, dd.abs(), max_relative = 1e-4);
            assert!(small.m1 > 0.0);
        }
        let b = BoundConstants::new(&p, 0.01, 30.0, 0.15);
        let g = 1.0 - (-0.3f64).exp();
        assert_relative_eq!(b.m4, 4.0 * g * g / (p.beta * p.beta), max_relative = 1e-14);
        assert_relative_eq!(b.m1, (1.0 - (-0.6f64).exp()) / 0.02, max_relative = 1e-14);
    }
}
