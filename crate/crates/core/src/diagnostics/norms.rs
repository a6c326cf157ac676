//! The state norm
//!
//! ```text
//! Ξ = ‖T − Tm‖²_{H1(0,s)} + (s − s_r)² + ‖q_c(t − x)‖²_{H1(0,D)}
//! ```
//!
//! reported in raw (mixed) units.

use super::grid::PiecewiseGrid;
use crate::delay_line::DelayLine;
use crate::error::Result;
use crate::model::PlantState;
use crate::quad;

pub fn norm_xi(
    state: &PlantState,
    line: &DelayLine,
    s_r: f64,
    d: f64,
    cells: usize,
) -> Result<f64> {
    let x = state.positions();
    let u = &state.u;
    let u_x = quad::derivative(&x, u);
    let h1: Vec<f64> = u.iter().zip(&u_x).map(|(a, b)| a * a + b * b).collect();
    let plant = quad::trapezoid_uniform(&h1, x[1] - x[0]);

    let t = state.t;
    let breaks: Vec<f64> = line.breaks_in(t - d, t).into_iter().map(|tb| t - tb).collect();
    let grid = PiecewiseGrid::new(0.0, d, &breaks, cells);
    let q = grid
        .x
        .iter()
        .map(|&xv| line.lookup(t - xv))
        .collect::<Result<Vec<f64>>>()?;
    let q_sq: Vec<f64> = q.iter().map(|v| v * v).collect();
    let last = grid.len() - 1;
    let input = grid.integrate(&q_sq, 0, last) + grid.integrate_slope_sq(&q, 0, last, |_| 1.0);
    let x_err = state.x_err(s_r);
    Ok(plant + x_err * x_err + input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_zero_and_interface_term_is_a_floor() {
        let line = DelayLine::constant(130.0, 0.0, 0.0).unwrap();
        let mut st = PlantState::melted(10, 0.15);
        assert_eq!(norm_xi(&st, &line, 0.15, 120.0, 50).unwrap(), 0.0);
        st.s = 0.11;
        st.u[0] += 1.0;
        let busy = DelayLine::constant(130.0, 100.0, 0.0).unwrap();
        let xi = norm_xi(&st, &busy, 0.15, 120.0, 50).unwrap();
        assert!(xi >= (0.11f64 - 0.15).powi(2));
    }
}
