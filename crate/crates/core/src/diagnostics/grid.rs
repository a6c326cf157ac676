//! Piecewise-uniform abscissae for the delay interval.
//!
//! The input history can have kinks (the jump from the pre-start flux to the
//! first command, the ends of the compensated window). Placing nodes on them
//! and differencing each piece separately keeps quadrature second order.

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseGrid {
    pub x: Vec<f64>,
    /// Inclusive node ranges of the uniform pieces, in order
    pub pieces: Vec<(usize, usize)>,
}

impl PiecewiseGrid {
    /// Grid on `[lo, hi]` with nodes at every break and about `cells` cells in
    /// total; every piece gets at least two cells.
    pub fn new(lo: f64, hi: f64, breaks: &[f64], cells: usize) -> Self {
        assert!(hi > lo, "empty interval [{lo}, {hi}]");
        let total = hi - lo;
        let merge = 1e-9 * total.max(1e-300);
        let mut knots = vec![lo];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for b in inner {
            if b - knots[knots.len() - 1] > merge && hi - b > merge {
                knots.push(b);
            }
        }
        knots.push(hi);
        let mut x = vec![lo];
        let mut pieces = Vec::with_capacity(knots.len() - 1);
        for w in knots.windows(2) {
            let len = w[1] - w[0];
            let m = ((cells as f64 * len / total).round() as usize).max(2);
            let start = x.len() - 1;
            for j in 1..=m {
                x.push(if j == m { w[1] } else { w[0] + len * j as f64 / m as f64 });
            }
            pieces.push((start, x.len() - 1));
        }
        Self { x, pieces }
    }

    /// Index of the node closest to `at` (exact for breaks and ends).
    pub fn index_of(&self, at: f64) -> usize {
        let j = self.x.partition_point(|&v| v < at);
        if j == 0 {
            return 0;
        }
        if j >= self.x.len() {
            return self.x.len() - 1;
        }
        if (self.x[j] - at).abs() <= (at - self.x[j - 1]).abs() {
            j
        } else {
            j - 1
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// ∫ f over node range `[a, b]` (signed: b < a flips the sign) by the trapezoid rule.
    pub fn integrate(&self, y: &[f64], a: usize, b: usize) -> f64 {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        sign * (lo..hi)
            .map(|i| 0.5 * (self.x[i + 1] - self.x[i]) * (y[i] + y[i + 1]))
            .sum::<f64>()
    }

    /// ∫ weight·(dy/dx)² over node range `[a, b]`, differencing each piece on its own.
    pub fn integrate_slope_sq(&self, y: &[f64], a: usize, b: usize, weight: impl Fn(f64) -> f64) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let mut acc = 0.0;
        for &(p0, p1) in &self.pieces {
            let (lo, hi) = (p0.max(a), p1.min(b));
            if hi <= lo {
                continue;
            }
            let xs = &self.x[p0..=p1];
            let slope = piece_slope(xs, &y[p0..=p1]);
            for i in lo..hi {
                let (l, r) = (i - p0, i + 1 - p0);
                let fl = weight(xs[l]) * slope[l] * slope[l];
                let fr = weight(xs[r]) * slope[r] * slope[r];
                acc += 0.5 * (xs[r] - xs[l]) * (fl + fr);
            }
        }
        acc
    }

    /// Value at `at` by the quadratic through the three nearest nodes of the
    /// piece containing it (linear on two-node pieces). None outside the grid.
    pub fn interpolate(&self, y: &[f64], at: f64) -> Option<f64> {
        let (lo, hi) = (self.x[0], self.x[self.x.len() - 1]);
        if !(at >= lo && at <= hi) {
            return None;
        }
        let &(p0, p1) = self.pieces.iter().find(|&&(_, p1)| at <= self.x[p1])?;
        if p1 - p0 < 2 {
            let (x0, x1) = (self.x[p0], self.x[p1]);
            return Some(y[p0] + (y[p1] - y[p0]) * (at - x0) / (x1 - x0));
        }
        let j = self.x[p0..=p1].partition_point(|&v| v < at) + p0;
        let nearest = if j > p0 && (at - self.x[j - 1]) < (self.x[j] - at) { j - 1 } else { j };
        let mid = nearest.clamp(p0 + 1, p1 - 1);
        let (x0, x1, x2) = (self.x[mid - 1], self.x[mid], self.x[mid + 1]);
        let (y0, y1, y2) = (y[mid - 1], y[mid], y[mid + 1]);
        Some(
            y0 * (at - x1) * (at - x2) / ((x0 - x1) * (x0 - x2))
                + y1 * (at - x0) * (at - x2) / ((x1 - x0) * (x1 - x2))
                + y2 * (at - x0) * (at - x1) / ((x2 - x0) * (x2 - x1)),
        )
    }

    /// Nodal derivative; breaks take the mean of the one-sided values.
    pub fn derivative(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        for (k, &(p0, p1)) in self.pieces.iter().enumerate() {
            let slope = piece_slope(&self.x[p0..=p1], &y[p0..=p1]);
            for (j, s) in slope.iter().enumerate() {
                if j == 0 && k > 0 {
                    out[p0] = 0.5 * (out[p0] + s);
                } else {
                    out[p0 + j] = *s;
                }
            }
        }
        out
    }
}

fn piece_slope(x: &[f64], y: &[f64]) -> Vec<f64> {
    if x.len() >= 3 {
        crate::quad::derivative(x, y)
    } else {
        vec![(y[1] - y[0]) / (x[1] - x[0]); 2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolation_is_exact_for_piecewise_quadratics() {
        let g = PiecewiseGrid::new(-2.0, 1.0, &[-0.5], 12);
        let f = |x: f64| if x < -0.5 { 3.0 * x * x - x } else { 1.25 - 2.0 * (x + 0.5) + 4.0 * (x + 0.5) * (x + 0.5) };
        let y: Vec<f64> = g.x.iter().map(|&x| f(x)).collect();
        for k in 0..=300 {
            let at = -2.0 + 3.0 * k as f64 / 300.0;
            let exact = f(at);
            assert_relative_eq!(g.interpolate(&y, at).unwrap(), exact, epsilon = 1e-12, max_relative = 1e-12);
        }
        assert_eq!(g.interpolate(&y, 1.5), None);
        assert_eq!(g.interpolate(&y, -2.5), None);
    }

    #[test]
    fn nodes_on_breaks() {
        let g = PiecewiseGrid::new(-120.0, 0.0, &[-60.0, -0.003, 5.0], 200);
        assert_eq!(g.x[0], -120.0);
        assert_eq!(*g.x.last().unwrap(), 0.0);
        assert_eq!(g.x[g.index_of(-60.0)], -60.0);
        assert_eq!(g.x[g.index_of(-0.003)], -0.003);
        assert_eq!(g.pieces.len(), 3);
        assert!(g.x.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn kinked_function_integrates_exactly() {
        let g = PiecewiseGrid::new(-2.0, 1.0, &[-0.5], 9);
        let y: Vec<f64> = g.x.iter().map(|&v| (v + 0.5).abs()).collect();
        assert_relative_eq!(g.integrate(&y, 0, g.len() - 1), 1.125 + 0.5 * 1.5 * 1.5, epsilon = 1e-12);
        assert_relative_eq!(g.integrate(&y, g.len() - 1, 0), -(1.125 + 1.125), epsilon = 1e-12);
        let sq = g.integrate_slope_sq(&y, 0, g.len() - 1, |_| 1.0);
        assert_relative_eq!(sq, 3.0, epsilon = 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn interpolation_reproduces_quadratics_on_every_piece(
            a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0,
            brk in -1.5f64..0.5, cells in 6usize..80, at in -2.0f64..1.0,
        ) {
            let g = PiecewiseGrid::new(-2.0, 1.0, &[brk], cells);
            proptest::prop_assert!(g.x.windows(2).all(|w| w[1] > w[0]));
            // continuous, with a different quadratic on each side of the break
            let left = |x: f64| a + b * x + c * x * x;
            let f = |x: f64| if x < brk { left(x) } else { left(brk) - a * (x - brk) + b * (x - brk) * (x - brk) };
            let y: Vec<f64> = g.x.iter().map(|&x| f(x)).collect();
            let got = g.interpolate(&y, at).unwrap();
            let scale = 1.0 + a.abs() + b.abs() + c.abs();
            proptest::prop_assert!((got - f(at)).abs() <= 1e-10 * scale, "{} vs {}", got, f(at));
        }
    }
}
