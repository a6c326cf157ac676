//! Scenario presets, overrides, and the runners built on them.

pub mod convergence;
pub mod report;
pub mod sweep;
pub mod verify;

use crate::control::setpoint_min;
use crate::error::{Result, StefanError};
use crate::model::{ControlLaw, PhysicalParams, Scenario, ScenarioConfig};
use crate::tolerances;
pub use convergence::{convergence_study, ConvergenceReport, Ladder, Level};
pub use report::{run_preset, run_preset_with, summary_text, write_trace_csv, ExperimentRun, CSV_COLUMNS};

pub use sweep::{gain_sweep, gain_sweep_with, GainEntry, SweepReport};
pub use verify::{verify, VerifyCheck, VerifyReport};

pub const PRESET_NAMES: [&str; 4] = ["exact", "exact-uncompensated", "under-mismatch", "over-mismatch"];

/// What a run is expected to show for one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Holds,
    Violated,
    /// Recorded only
    Free,
}

impl Expect {
    pub fn as_str(&self) -> &'static str {
        match self {
            Expect::Holds => "holds",
            Expect::Violated => "violated",
            Expect::Free => "recorded",
        }
    }

    /// None when nothing is asserted.
    pub fn judge(&self, holds: bool) -> Option<bool> {
        match self {
            Expect::Holds => Some(holds),
            Expect::Violated => Some(!holds),
            Expect::Free => None,
        }
    }
}

/// Names of the checks a run is judged on.
pub const CHECKS: [&str; 6] = ["qc_pos", "T_valid", "s_mono", "s_window", "setpoint", "solver"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPreset {
    pub name: String,
    pub scenario: Scenario,
    /// Gains the preset is meant to be run at; the config carries the first
    pub gains: Vec<f64>,
    pub expected: Vec<(String, Expect)>,
    /// Whether the preset claims s_r above the admissible minimum
    pub claims_setpoint: bool,
}

impl ScenarioPreset {
    /// Expectations for the configuration as it now stands (after overrides).
    pub fn refresh_expectations(&mut self) {
        self.expected = expectations(&self.name, &self.scenario.config);
    }

    pub fn expectation(&self, check: &str) -> Expect {
        self.expected
            .iter()
            .find(|(n, _)| n == check)
            .map(|(_, e)| *e)
            .unwrap_or(Expect::Free)
    }

    /// Terminal interface tolerance for the setpoint check.
    pub fn setpoint_tolerance(&self) -> f64 {
        match self.name.as_str() {
            "exact" => tolerances::SETPOINT_REACH,
            _ => tolerances::SETPOINT_REACH_MISMATCH,
        }
    }

    pub fn ensure_setpoint(&self) -> Result<()> {
        if !self.claims_setpoint {
            return Ok(());
        }
        let cfg = &self.scenario.config;
        let smin = setpoint_min(cfg, &self.scenario.params)?;
        if !(cfg.s_r > smin) {
            return Err(StefanError::domain(
                "s_r",
                format!("setpoint {} is below the admissible minimum {smin}", cfg.s_r),
            ));
        }
        Ok(())
    }
}

fn on_gain(c: f64, target: f64) -> bool {
    (c - target).abs() <= 1e-12 * target
}

/// Per-check expectations of a named preset at the configured gain.
pub fn expectations(name: &str, cfg: &ScenarioConfig) -> Vec<(String, Expect)> {
    use Expect::*;
    let all = |e: Expect, setpoint: Expect| {
        CHECKS
            .iter()
            .map(|&n| (n.to_string(), if n == "setpoint" { setpoint } else { e }))
            .collect::<Vec<_>>()
    };
    match name {
        "exact" if cfg.law == ControlLaw::Compensated => all(Holds, Holds),
        "under-mismatch" if on_gain(cfg.c, 0.01) => all(Holds, Free),
        "under-mismatch" if on_gain(cfg.c, 0.1) => CHECKS
            .iter()
            .map(|&n| {
                let e = match n {
                    "qc_pos" | "T_valid" => Violated,
                    "solver" => Holds,
                    _ => Free,
                };
                (n.to_string(), e)
            })
            .collect(),
        "over-mismatch" if on_gain(cfg.c, 0.01) || on_gain(cfg.c, 0.1) => all(Holds, Holds),
        _ => all(Free, Free),
    }
}

/// Built-in scenario by name.
pub fn preset(name: &str) -> Result<ScenarioPreset> {
    let reference = ScenarioConfig::reference();
    let (config, gains) = match name {
        "exact" => (reference, vec![0.01]),
        "exact-uncompensated" => (ScenarioConfig { law: ControlLaw::Nominal, ..reference }, vec![0.01]),
        "under-mismatch" => (
            ScenarioConfig { d: 30.0, delta_d: 30.0, horizon: 2000.0, ..reference },
            vec![0.01, 0.1],
        ),
        "over-mismatch" => (
            ScenarioConfig { d: 90.0, delta_d: -30.0, horizon: 2000.0, ..reference },
            vec![0.01, 0.1],
        ),
        other => return Err(StefanError::UnknownPreset(other.to_string())),
    };
    let expected = expectations(name, &config);
    Ok(ScenarioPreset {
        name: name.to_string(),
        scenario: Scenario::new(PhysicalParams::zinc(), config),
        gains,
        expected,
        claims_setpoint: name != "exact-uncompensated",
    })
}

/// Override keys grouped by config-file section.
pub const SECTIONS: [(&str, &[&str]); 3] = [
    ("scenario", &["D", "deltaD", "c", "s_r", "s0", "Tbar", "q_past", "law", "profile"]),
    ("numerics", &["N", "dt", "horizon", "delay_cells"]),
    ("diagnostics", &["sample_interval", "lyapunov_m"]),
];

/// Canonical spelling of an override key, or None when unknown.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let alias = match key {
        "d" => "D",
        "delta_d" | "dD" => "deltaD",
        "n" => "N",
        "t_bar" => "Tbar",
        other => other,
    };
    SECTIONS.iter().flat_map(|(_, keys)| keys.iter()).copied().find(|k| *k == alias)
}

/// Section a canonical key belongs to.
pub fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS.iter().find(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s)
}

fn bad(key: &str, value: &str, why: &str) -> StefanError {
    StefanError::Config(format!("`{key}` = `{value}`: {why}"))
}

fn number(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.trim().parse().map_err(|_| bad(key, value, "not a number"))?;
    if !v.is_finite() {
        return Err(bad(key, value, "must be finite"));
    }
    Ok(v)
}

/// Duration in seconds; a trailing `s` or `min` is accepted.
pub fn parse_seconds(key: &str, value: &str) -> Result<f64> {
    let v = value.trim();
    if let Some(m) = v.strip_suffix("min") {
        return Ok(number(key, m)? * 60.0);
    }
    number(key, v.strip_suffix('s').unwrap_or(v))
}

fn count(key: &str, value: &str) -> Result<usize> {
    value.trim().parse().map_err(|_| bad(key, value, "not a whole number"))
}

fn profile(key: &str, value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(',')
        .map(|pair| {
            let (x, t) = pair.split_once(':').ok_or_else(|| bad(key, value, "expected x:T pairs"))?;
            Ok((number(key, x)?, number(key, t)?))
        })
        .collect()
}

/// Applies one `key = value` override. Validation of the whole config is left
/// to the run.
pub fn apply_override(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<()> {
    let k = canonical_key(key).ok_or_else(|| StefanError::Config(format!("unknown key `{key}`")))?;
    match k {
        "D" => cfg.d = parse_seconds(k, value)?,
        "deltaD" => cfg.delta_d = parse_seconds(k, value)?,
        "c" => cfg.c = number(k, value)?,
        "s_r" => cfg.s_r = number(k, value)?,
        "s0" => cfg.s0 = number(k, value)?,
        "Tbar" => cfg.t_bar = number(k, value)?,
        "q_past" => cfg.q_past = number(k, value)?,
        "law" => cfg.law = value.trim().parse()?,
        "profile" => cfg.profile = Some(profile(k, value)?),
        "N" => cfg.n = count(k, value)?,
        "dt" => cfg.dt = Some(parse_seconds(k, value)?),
        "horizon" => cfg.horizon = parse_seconds(k, value)?,
        "delay_cells" => cfg.delay_cells = count(k, value)?,
        "sample_interval" => cfg.sample_interval = parse_seconds(k, value)?,
        "lyapunov_m" => cfg.lyapunov_m = Some(number(k, value)?),
        _ => unreachable!("key table and match disagree on `{k}`"),
    }
    Ok(())
}

/// Inverse of `apply_override` for every key, in section order.
pub fn config_entries(cfg: &ScenarioConfig) -> Vec<(&'static str, &'static str, String)> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string());
    let mut out = Vec::new();
    for (section, keys) in SECTIONS {
        for &k in keys {
            let v = match k {
                "D" => Some(cfg.d.to_string()),
                "deltaD" => Some(cfg.delta_d.to_string()),
                "c" => Some(cfg.c.to_string()),
                "s_r" => Some(cfg.s_r.to_string()),
                "s0" => Some(cfg.s0.to_string()),
                "Tbar" => Some(cfg.t_bar.to_string()),
                "q_past" => Some(cfg.q_past.to_string()),
                "law" => Some(cfg.law.as_str().to_string()),
                "profile" => cfg.profile.as_ref().map(|p| {
                    p.iter().map(|(x, t)| format!("{x}:{t}")).collect::<Vec<_>>().join(",")
                }),
                "N" => Some(cfg.n.to_string()),
                "dt" => opt(cfg.dt),
                "horizon" => Some(cfg.horizon.to_string()),
                "delay_cells" => Some(cfg.delay_cells.to_string()),
                "sample_interval" => Some(cfg.sample_interval.to_string()),
                "lyapunov_m" => opt(cfg.lyapunov_m),
                _ => None,
            };
            if let Some(v) = v {
                out.push((section, k, v));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_the_stated_delays() {
        let exact = preset("exact").unwrap();
        assert_eq!((exact.scenario.config.c, exact.scenario.config.d), (0.01, 120.0));
        assert_eq!(exact.scenario.config.horizon, 100.0 / 0.01);
        let under = preset("under-mismatch").unwrap();
        assert_eq!(under.scenario.config.plant_delay(), 60.0);
        assert_eq!(under.gains, vec![0.01, 0.1]);
        let over = preset("over-mismatch").unwrap();
        assert_eq!((over.scenario.config.d, over.scenario.config.plant_delay()), (90.0, 60.0));
        let nominal = preset("exact-uncompensated").unwrap();
        assert_eq!(nominal.scenario.config.law, ControlLaw::Nominal);
        assert!(matches!(preset("fig5"), Err(StefanError::UnknownPreset(_))));
    }

    #[test]
    fn presets_satisfy_the_setpoint_restriction() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            p.ensure_setpoint().unwrap();
            p.scenario.config.validate().unwrap();
        }
    }

    #[test]
    fn expectations_follow_the_gain() {
        let mut under = preset("under-mismatch").unwrap();
        assert_eq!(under.expectation("qc_pos"), Expect::Holds);
        under.scenario.config.c = 0.1;
        under.refresh_expectations();
        assert_eq!(under.expectation("qc_pos"), Expect::Violated);
        assert_eq!(under.expectation("s_window"), Expect::Free);
        under.scenario.config.c = 0.05;
        under.refresh_expectations();
        assert_eq!(under.expectation("T_valid"), Expect::Free);
    }

    #[test]
    fn overrides_with_units() {
        let mut cfg = ScenarioConfig::reference();
        apply_override(&mut cfg, "D", "2min").unwrap();
        assert_eq!(cfg.d, 120.0);
        apply_override(&mut cfg, "horizon", "5000s").unwrap();
        assert_eq!(cfg.horizon, 5000.0);
        apply_override(&mut cfg, "c", "0.02").unwrap();
        assert_eq!(cfg.c, 0.02);
        apply_override(&mut cfg, "N", "50").unwrap();
        assert_eq!(cfg.n, 50);
        apply_override(&mut cfg, "law", "nominal").unwrap();
        assert_eq!(cfg.law, ControlLaw::Nominal);
        apply_override(&mut cfg, "profile", "0:742.68,0.1:692.68").unwrap();
        assert_eq!(cfg.profile.as_deref(), Some(&[(0.0, 742.68), (0.1, 692.68)][..]));
        assert!(apply_override(&mut cfg, "gain", "1").is_err());
        let err = apply_override(&mut cfg, "c", "fast").unwrap_err().to_string();
        assert!(err.contains("`c`"), "{err}");
        assert!(apply_override(&mut cfg, "N", "2.5").is_err());
    }

    #[test]
    fn entries_round_trip() {
        let mut cfg = preset("over-mismatch").unwrap().scenario.config;
        cfg.dt = Some(0.002);
        cfg.profile = Some(vec![(0.0, 700.0), (0.1, 692.68)]);
        let mut back = ScenarioConfig::reference();
        for (section, k, v) in config_entries(&cfg) {
            assert_eq!(section_of(k), Some(section));
            apply_override(&mut back, k, &v).unwrap();
        }
        assert_eq!(back, cfg);
    }
}
