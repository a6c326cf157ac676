//! Refinement studies on a preset.
//!
//! Each level reruns the preset over a shortened horizon. Orders come from
//! successive differences (terminal s) or successive ratios (energy drift,
//! which is itself an error).

use super::report::{run_preset, ExperimentRun};
use super::ScenarioPreset;
use crate::error::{Result, StefanError};
use crate::quad::observed_order;
use crate::simulation::RunOptions;

/// Resolutions to run; each entry refines the previous one by a factor 2.
#[derive(Debug, Clone, PartialEq)]
pub enum Ladder {
    /// Grid sizes; the step is the default at the first size divided by 4
    /// per level, so dt ∝ 1/N² exactly
    Spatial(Vec<usize>),
    /// Divisors of the default step at the preset's N
    Temporal(Vec<u32>),
}

impl Ladder {
    fn len(&self) -> usize {
        match self {
            Ladder::Spatial(v) => v.len(),
            Ladder::Temporal(v) => v.len(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.len() < 3 {
            return Err(StefanError::domain("ladder", "need at least three resolutions"));
        }
        let doubling = match self {
            Ladder::Spatial(v) => v.windows(2).all(|w| w[1] == 2 * w[0]),
            Ladder::Temporal(v) => v.windows(2).all(|w| w[1] == 2 * w[0]),
        };
        if !doubling {
            return Err(StefanError::domain("ladder", "each level must double the previous one"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub n: usize,
    pub dt: f64,
    pub s_final: f64,
    pub energy_drift: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<Level>,
    /// Richardson order of s(t_f) from each consecutive triple
    pub s_orders: Vec<f64>,
    /// log₂ of successive drift ratios
    pub drift_orders: Vec<f64>,
    /// The first level rerun reproduced its trace bit for bit
    pub deterministic: bool,
}

impl ConvergenceReport {
    pub fn min_s_order(&self) -> f64 {
        self.s_orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_drift_order(&self) -> f64 {
        self.drift_orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn level_preset(base: &ScenarioPreset, ladder: &Ladder, i: usize, horizon: f64) -> ScenarioPreset {
    let mut p = base.clone();
    let cfg = &mut p.scenario.config;
    cfg.horizon = horizon;
    match ladder {
        Ladder::Spatial(ns) => {
            let coarse = crate::model::ScenarioConfig { n: ns[0], dt: None, ..cfg.clone() };
            let h = coarse.time_step(&base.scenario.params);
            cfg.n = ns[i];
            cfg.dt = Some(h / 4f64.powi(i as i32));
        }
        Ladder::Temporal(div) => {
            let h = base.scenario.config.time_step(&base.scenario.params);
            cfg.dt = Some(h / div[i] as f64);
        }
    }
    p
}

fn run_level(p: &ScenarioPreset) -> Result<ExperimentRun> {
    let run = run_preset(p, RunOptions { diagnostics: false, ..RunOptions::default() })?;
    match &run.result.error {
        Some(e) => Err(e.clone()),
        None => Ok(run),
    }
}

pub fn convergence_study(base: &ScenarioPreset, ladder: &Ladder, horizon: f64) -> Result<ConvergenceReport> {
    ladder.check()?;
    let mut levels = Vec::new();
    let mut first_trace = None;
    for i in 0..ladder.len() {
        let p = level_preset(base, ladder, i, horizon);
        let run = run_level(&p)?;
        let cfg = &p.scenario.config;
        levels.push(Level {
            n: cfg.n,
            dt: cfg.time_step(&p.scenario.params),
            s_final: run.s_final(),
            energy_drift: run.energy_drift_max,
            closed_form: run.closed_form_max_rel,
        });
        if i == 0 {
            first_trace = Some(run.result.trace);
        }
    }
    let again = run_level(&level_preset(base, ladder, 0, horizon))?;
    let s_orders = levels
        .windows(3)
        .map(|w| observed_order(w[0].s_final - w[1].s_final, w[1].s_final - w[2].s_final, 2.0))
        .collect();
    let drift_orders = levels
        .windows(2)
        .map(|w| observed_order(w[0].energy_drift, w[1].energy_drift, 2.0))
        .collect();
    Ok(ConvergenceReport {
        levels,
        s_orders,
        drift_orders,
        deterministic: first_trace.as_ref() == Some(&again.result.trace),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::preset;

    #[test]
    fn ladders_must_double() {
        let p = preset("exact").unwrap();
        assert!(convergence_study(&p, &Ladder::Spatial(vec![10, 20]), 1.0).is_err());
        assert!(convergence_study(&p, &Ladder::Temporal(vec![1, 3, 9]), 1.0).is_err());
    }

    #[test]
    fn coarse_spatial_ladder_is_second_order() {
        let mut p = preset("exact").unwrap();
        p.scenario.config.delay_cells = 20;
        p.scenario.config.sample_interval = 1.0;
        let r = convergence_study(&p, &Ladder::Spatial(vec![10, 20, 40]), 60.0).unwrap();
        assert!(r.deterministic);
        assert!(r.min_s_order() > 1.8, "{r:?}");
        assert!(r.min_drift_order() > 1.8, "{r:?}");
    }
}
