//! Direct and inverse backstepping transformations.
//!
//! With `u = T − Tm`, `X = s − s_r` and `v(x) = q_c(t − x − (D + ΔD))/k` on
//! `[−(D + ΔD), max(0, −ΔD)]`:
//!
//! ```text
//! w(x) = u(x) − (c/α) ∫_x^s (x − y) u(y) dy − (c/β)(x − s) X
//! z(x) = v(x) + c ∫_x^0 v(y) dy + (c/α) ∫_0^s u dy + (c/β) X
//! ω(x) = w(x) + (x − s) z(0)
//! ```
//!
//! Integrals of `v` are read from the delay line, which is exact for its
//! piecewise-linear content; everything else uses the trapezoid rule.

use super::grid::PiecewiseGrid;
use super::kernels::Kernels;
use crate::delay_line::DelayLine;
use crate::error::Result;
use crate::model::{PhysicalParams, PlantState};
use crate::quad;

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedState {
    pub t: f64,
    pub s: f64,
    /// X = s − s_r
    pub x_err: f64,
    /// Physical abscissae on [0, s]
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub omega: Vec<f64>,
    /// Delay abscissae on [−(D + ΔD), max(0, −ΔD)]
    pub y: PiecewiseGrid,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    /// Node of `y` at 0
    pub i0: usize,
    /// Node of `y` at −ΔD
    pub i_mismatch: usize,
    pub c: f64,
    pub d: f64,
    pub delta_d: f64,
}

impl TransformedState {
    pub fn z0(&self) -> f64 {
        self.z[self.i0]
    }

    /// z at the left end, the controller boundary.
    pub fn z_left(&self) -> f64 {
        self.z[0]
    }

    /// |(c/α)∫u| + |(c/β)X|, the plant part of z that cancels against the
    /// kernel terms of the inverse.
    pub fn plant_scale(&self, params: &PhysicalParams) -> f64 {
        let heat = crate::quad::trapezoid_uniform(&self.u, self.dx());
        (self.c / params.alpha * heat).abs() + (self.c / params.beta * self.x_err).abs()
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

/// Parameters of a transform evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    pub c: f64,
    pub s_r: f64,
    pub d: f64,
    pub delta_d: f64,
    pub delay_cells: usize,
}

/// Evaluates (w, z, ω, X) for the snapshot `state` and the flux history `line`.
pub fn direct_transform(
    state: &PlantState,
    line: &DelayLine,
    params: &PhysicalParams,
    spec: &TransformSpec,
) -> Result<TransformedState> {
    let TransformSpec { c, s_r, d, delta_d, delay_cells } = *spec;
    let t = state.t;
    let s = state.s;
    let n = state.cells();
    let dxi = 1.0 / n as f64;
    let x: Vec<f64> = (0..=n).map(|i| s * i as f64 * dxi).collect();
    let u = state.u.clone();
    let x_err = state.x_err(s_r);

    // suffix trapezoid sums A_i = ∫_{x_i}^s u, B_i = ∫_{x_i}^s y u
    let h = s * dxi;
    let mut a = vec![0.0; n + 1];
    let mut b = vec![0.0; n + 1];
    for i in (0..n).rev() {
        a[i] = a[i + 1] + 0.5 * h * (u[i] + u[i + 1]);
        b[i] = b[i + 1] + 0.5 * h * (x[i] * u[i] + x[i + 1] * u[i + 1]);
    }
    let w: Vec<f64> = (0..=n)
        .map(|i| u[i] - c / params.alpha * (x[i] * a[i] - b[i]) - c / params.beta * (x[i] - s) * x_err)
        .collect();
    let heat = a[0];

    let plant_delay = d + delta_d;
    let lo = -plant_delay;
    let hi = (-delta_d).max(0.0);
    let time_of = |yv: f64| t - yv - plant_delay;
    let mut breaks: Vec<f64> = line
        .breaks_in(time_of(hi), time_of(lo))
        .into_iter()
        .map(|tb| t - tb - plant_delay)
        .collect();
    breaks.push(0.0);
    breaks.push(-delta_d);
    let y = PiecewiseGrid::new(lo, hi, &breaks, delay_cells);
    let k = params.k;
    let g = c / params.alpha * heat + c / params.beta * x_err;
    let mut v = Vec::with_capacity(y.len());
    let mut z = Vec::with_capacity(y.len());
    for &yv in &y.x {
        let vv = line.lookup(time_of(yv))? / k;
        // ∫_y^0 v dy' = (1/k) ∫_{t−Dp}^{t−y−Dp} q
        let tail = line.integral(time_of(0.0), time_of(yv))? / k;
        v.push(vv);
        z.push(vv + c * tail + g);
    }
    let i0 = y.index_of(0.0);
    let i_mismatch = y.index_of(-delta_d);
    let z0 = z[i0];
    let omega = (0..=n).map(|i| w[i] + (x[i] - s) * z0).collect();
    Ok(TransformedState {
        t,
        s,
        x_err,
        x,
        u,
        w,
        omega,
        y,
        v,
        z,
        i0,
        i_mismatch,
        c,
        d,
        delta_d,
    })
}

/// Reconstructed plant variables.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseResult {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub x_err: f64,
}

/// Inverse transformation
///
/// ```text
/// u(x) = w(x) + (β/α) ∫_x^s ψ(x − y) w(y) dy + ψ(x − s) X
/// v(x) = z(x) − ∫_x^0 μ(x − y) z(y) dy − (β/α) μ(x) ∫_0^s ζ w dy − ζ(s) μ(x) X
/// ```
///
/// Both kernels are separable (`sin`/`cos` addition, `e^{c(x−y)}`), so each
/// integral is a suffix or prefix trapezoid sum.
pub fn inverse_transform(tr: &TransformedState, params: &PhysicalParams) -> InverseResult {
    let ker = Kernels::new(tr.c, params.alpha, params.beta);
    let n = tr.x.len() - 1;
    let h = tr.dx();
    let kap = ker.kappa;
    let amp = (tr.c * params.alpha).sqrt() / params.beta;
    let mut cs = vec![0.0; n + 1];
    let mut sn = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let f = |j: usize| ((kap * tr.x[j]).cos() * tr.w[j], (kap * tr.x[j]).sin() * tr.w[j]);
        let (c0, s0) = f(i);
        let (c1, s1) = f(i + 1);
        cs[i] = cs[i + 1] + 0.5 * h * (c0 + c1);
        sn[i] = sn[i + 1] + 0.5 * h * (s0 + s1);
    }
    let ratio = params.beta / params.alpha;
    let u = (0..=n)
        .map(|i| {
            let xi = tr.x[i];
            let conv = amp * ((kap * xi).sin() * cs[i] - (kap * xi).cos() * sn[i]);
            tr.w[i] + ratio * conv + ker.psi(xi - tr.s) * tr.x_err
        })
        .collect();

    let zeta_w: Vec<f64> = tr.x.iter().zip(&tr.w).map(|(&xv, &wv)| ker.zeta(xv) * wv).collect();
    let zw = quad::trapezoid_uniform(&zeta_w, h);
    let weighted: Vec<f64> = tr.y.x.iter().zip(&tr.z).map(|(&yv, &zv)| (-tr.c * yv).exp() * zv).collect();
    let run = quad::cumulative_trapezoid(&tr.y.x, &weighted);
    let v = tr
        .y
        .x
        .iter()
        .enumerate()
        .map(|(j, &yv)| {
            // ∫_y^0 c e^{c(y−y')} z dy' for either orientation
            let conv = ker.mu(yv) * (run[tr.i0] - run[j]);
            tr.z[j] - conv - ratio * ker.mu(yv) * zw - ker.zeta(tr.s) * ker.mu(yv) * tr.x_err
        })
        .collect();
    InverseResult { u, v, x_err: tr.x_err }
}

/// Sup-norm round-trip errors for (u, v), each relative to the scale of the
/// terms that cancel in the inverse: the original and transformed sup norms,
/// and for v also the plant part of z. Late in a run the input decays faster
/// than the plant terms, so ‖v‖ alone no longer measures the quadrature error.
pub fn round_trip_error(tr: &TransformedState, params: &PhysicalParams) -> (f64, f64) {
    let inv = inverse_transform(tr, params);
    let sup = |a: &[f64]| a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rel = |a: &[f64], b: &[f64], image: &[f64], extra: f64| {
        let scale = sup(a).max(sup(image)).max(extra);
        let err = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    };
    (rel(&tr.u, &inv.u, &tr.w, 0.0), rel(&tr.v, &inv.v, &tr.z, tr.plant_scale(params)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_state, ScenarioConfig};

    fn spec(delta_d: f64) -> TransformSpec {
        TransformSpec {
            c: 0.01,
            s_r: 0.15,
            d: 120.0,
            delta_d,
            delay_cells: 100,
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let p = PhysicalParams::zinc();
        let st = PlantState::melted(20, 0.15);
        let line = DelayLine::constant(130.0, 0.0, 0.0).unwrap();
        let tr = direct_transform(&st, &line, &p, &spec(0.0)).unwrap();
        assert!(tr.w.iter().chain(&tr.z).chain(&tr.omega).all(|&v| v == 0.0));
        let inv = inverse_transform(&tr, &p);
        assert!(inv.u.iter().chain(&inv.v).all(|&v| v == 0.0));
        assert_eq!(inv.x_err, 0.0);
    }

    #[test]
    fn target_boundary_and_x_passthrough() {
        let p = PhysicalParams::zinc();
        let cfg = ScenarioConfig { n: 50, ..ScenarioConfig::reference() };
        let st = init_state(&cfg, &p).unwrap();
        // held past flux followed by the first command
        let mut line = DelayLine::constant(130.0, 500.0, -0.01).unwrap();
        line.push(0.0, 3.03e5).unwrap();
        line.mark_break(-0.01);
        line.mark_break(0.0);
        let tr = direct_transform(&st, &line, &p, &spec(0.0)).unwrap();
        assert_eq!(*tr.w.last().unwrap(), 0.0);
        assert_eq!(tr.x_err, st.x_err(0.15));
        assert_eq!(inverse_transform(&tr, &p).x_err, tr.x_err);
        let (eu, ev) = round_trip_error(&tr, &p);
        assert!(eu < 1e-3 && ev < 1e-3, "{eu} {ev}");
    }

    #[test]
    fn mismatch_domain_extends_past_zero() {
        let p = PhysicalParams::zinc();
        let cfg = ScenarioConfig { n: 20, ..ScenarioConfig::reference() };
        let st = init_state(&cfg, &p).unwrap();
        let line = DelayLine::constant(130.0, 500.0, 0.0).unwrap();
        let tr = direct_transform(&st, &line, &p, &TransformSpec { d: 90.0, delta_d: -30.0, ..spec(0.0) }).unwrap();
        assert_eq!(tr.y.x[0], -60.0);
        assert_eq!(*tr.y.x.last().unwrap(), 30.0);
        assert_eq!(tr.y.x[tr.i0], 0.0);
        assert_eq!(tr.y.x[tr.i_mismatch], 30.0);
    }
}
