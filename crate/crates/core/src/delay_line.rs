//! Timestamped flux history with O(log n) lookup and O(1) window integrals.
//!
//! Each sample carries the running trapezoid integral up to its own time, so
//! `integral(a, b)` is a difference of two interpolated cumulative values.

use std::collections::VecDeque;

use crate::error::{Result, StefanError};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    t: f64,
    q: f64,
    /// ∫ q from the first sample ever pushed up to `t`, as an unevaluated sum
    /// `cum + cum_lo` so long histories keep small window integrals exact
    cum: f64,
    cum_lo: f64,
}

/// Piecewise-linear record of the commanded boundary flux.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    samples: VecDeque<Sample>,
    span: f64,
    /// Times where the history has a kink or a steep ramp standing in for a jump.
    breaks: VecDeque<f64>,
}

impl DelayLine {
    /// Empty line that retains at least `span` seconds behind the newest sample.
    pub fn new(span: f64) -> Result<Self> {
        if !(span >= 0.0) || !span.is_finite() {
            return Err(StefanError::domain("span", format!("must be non-negative, got {span}")));
        }
        Ok(Self {
            samples: VecDeque::new(),
            span,
            breaks: VecDeque::new(),
        })
    }

    /// Line holding the constant `q` on `[t_end − span, t_end]`.
    pub fn constant(span: f64, q: f64, t_end: f64) -> Result<Self> {
        let mut line = Self::new(span)?;
        // a little extra room so queries at exactly t_end − span are covered
        let start = t_end - span - span.max(1.0) * 1e-9 - 1e-9;
        line.push(start, q)?;
        line.push(t_end, q)?;
        Ok(line)
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// First and last covered instants.
    pub fn window(&self) -> Option<(f64, f64)> {
        Some((self.samples.front()?.t, self.samples.back()?.t))
    }

    pub fn last_time(&self) -> Option<f64> {
        self.samples.back().map(|s| s.t)
    }

    pub fn last_flux(&self) -> Option<f64> {
        self.samples.back().map(|s| s.q)
    }

    /// Appends a sample; times must be strictly increasing. Samples older than
    /// `span` behind the new one are dropped, keeping one bracketing sample.
    pub fn push(&mut self, t: f64, q: f64) -> Result<()> {
        if !t.is_finite() || !q.is_finite() {
            return Err(StefanError::domain("flux sample", format!("non-finite sample ({t}, {q})")));
        }
        let (cum, cum_lo) = match self.samples.back() {
            Some(last) if t <= last.t => {
                return Err(StefanError::NonMonotonicSample { last: last.t, next: t })
            }
            Some(last) => {
                let (hi, err) = two_sum(last.cum, 0.5 * (t - last.t) * (q + last.q));
                (hi, last.cum_lo + err)
            }
            None => (0.0, 0.0),
        };
        self.samples.push_back(Sample { t, q, cum, cum_lo });
        let horizon = t - self.span;
        while self.samples.len() > 2 && self.samples[1].t <= horizon {
            self.samples.pop_front();
        }
        let front = self.samples[0].t;
        while self.breaks.front().is_some_and(|&b| b < front) {
            self.breaks.pop_front();
        }
        Ok(())
    }

    /// Records a kink of the history at time `t` (used to align quadrature grids).
    pub fn mark_break(&mut self, t: f64) {
        if self.breaks.back().map_or(true, |&b| t > b) {
            self.breaks.push_back(t);
        }
    }

    /// Break times inside `[a, b]`.
    pub fn breaks_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.breaks.iter().copied().filter(|&t| t >= a && t <= b).collect()
    }

    fn covered(&self, t: f64) -> Result<usize> {
        let (start, end) = self.window().ok_or(StefanError::OutOfRange {
            query: t,
            start: f64::NAN,
            end: f64::NAN,
        })?;
        let slack = 1e-12 * (1.0 + start.abs().max(end.abs()));
        if !(t >= start - slack && t <= end + slack) {
            return Err(StefanError::OutOfRange { query: t, start, end });
        }
        // index of the first sample strictly after t, clamped to a valid bracket
        let j = self.samples.partition_point(|s| s.t <= t);
        Ok(j.clamp(1, self.samples.len().max(2) - 1))
    }

    /// Linearly interpolated flux at `t`; exact at stored timestamps.
    pub fn lookup(&self, t: f64) -> Result<f64> {
        if self.samples.len() == 1 {
            let s = self.samples[0];
            return if (t - s.t).abs() <= 1e-12 * (1.0 + s.t.abs()) {
                Ok(s.q)
            } else {
                Err(StefanError::OutOfRange { query: t, start: s.t, end: s.t })
            };
        }
        let j = self.covered(t)?;
        let (a, b) = (self.samples[j - 1], self.samples[j]);
        if t == b.t {
            return Ok(b.q);
        }
        let w = (t - a.t) / (b.t - a.t);
        Ok(a.q + w * (b.q - a.q))
    }

    /// Cumulative integral at `t` as a (large, small) pair.
    fn cumulative(&self, t: f64) -> Result<(f64, f64)> {
        if self.samples.len() == 1 {
            self.lookup(t)?;
            let s = self.samples[0];
            return Ok((s.cum, s.cum_lo));
        }
        let j = self.covered(t)?;
        let (a, b) = (self.samples[j - 1], self.samples[j]);
        if t == b.t {
            return Ok((b.cum, b.cum_lo));
        }
        let q_t = a.q + (t - a.t) / (b.t - a.t) * (b.q - a.q);
        Ok((a.cum, a.cum_lo + 0.5 * (t - a.t) * (a.q + q_t)))
    }

    /// ∫_a^b q dt of the piecewise-linear history (signed).
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let (hb, lb) = self.cumulative(b)?;
        let (ha, la) = self.cumulative(a)?;
        Ok((hb - ha) + (lb - la))
    }

    /// Stored samples inside `[a, b]` as `(t, q)` pairs.
    pub fn samples_in(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.t >= a && s.t <= b)
            .map(|s| (s.t, s.q))
            .collect()
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}
