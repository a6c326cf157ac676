//! Trapezoid quadrature and finite-difference helpers on possibly nonuniform grids.

/// ∫ y dx over a uniform grid with spacing `h`.
pub fn trapezoid_uniform(y: &[f64], h: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (y[0] + y[n - 1]) + y[1..n - 1].iter().sum::<f64>()),
    }
}

/// ∫ y dx over the abscissae `x` (any spacing, increasing).
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Running integral `out[i] = ∫_{x_0}^{x_i} y dx`.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// First derivative by the three-point Lagrange formula: centred in the
/// interior, one-sided second order at the ends. Exact for quadratics.
pub fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 3, "need at least three points");
    let mut d = vec![0.0; n];
    for i in 0..n {
        let j = i.clamp(1, n - 2);
        d[i] = lagrange_slope(&x[j - 1..=j + 1], &y[j - 1..=j + 1], x[i]);
    }
    d
}

/// Derivative of the quadratic through three points, evaluated at `at`.
fn lagrange_slope(x: &[f64], y: &[f64], at: f64) -> f64 {
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    y[0] * ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2))
        + y[1] * ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2))
        + y[2] * ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1))
}

/// Derivative on a grid made of uniform pieces joined at break indices. Each
/// piece is differenced on its own so kinks in the data do not leak across.
/// Pieces shorter than three points fall back to a two-point slope.
pub fn piecewise_derivative(x: &[f64], y: &[f64], breaks: &[usize]) -> Vec<f64> {
    let mut d = vec![0.0; x.len()];
    let mut bounds = Vec::with_capacity(breaks.len() + 2);
    bounds.push(0);
    bounds.extend(breaks.iter().copied().filter(|&b| b > 0 && b < x.len() - 1));
    bounds.push(x.len() - 1);
    bounds.dedup();
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let piece = if b - a >= 2 {
            derivative(&x[a..=b], &y[a..=b])
        } else {
            let slope = (y[b] - y[a]) / (x[b] - x[a]);
            vec![slope; b - a + 1]
        };
        // an interior break takes the average of its one-sided slopes
        if a > 0 {
            d[a] = 0.5 * (d[a] + piece[0]);
        } else {
            d[a] = piece[0];
        }
        d[a + 1..=b].copy_from_slice(&piece[1..]);
    }
    d
}

/// Refinement order estimate from errors at two consecutive resolutions.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse.abs() / fine.abs()).ln() / ratio.ln()
}
