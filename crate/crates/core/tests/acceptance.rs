//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each. Exits nonzero when
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use stefan_core::control::{positivity_probe, setpoint_min, HalanayCheck};
use stefan_core::diagnostics::{round_trip_error, FirstViolations, target_residuals, TargetResiduals, TransformedState};
use stefan_core::experiments::{
    convergence_study, gain_sweep, preset, run_preset, verify, Ladder, ScenarioPreset, VerifyReport,
};
use stefan_core::model::{PhysicalParams, ScenarioConfig};
use stefan_core::tolerances as tol;
use stefan_core::{run_closed_loop, RunOptions};

type Outcome = Result<(bool, String), String>;

fn when(t: Option<f64>) -> String {
    t.map_or_else(|| "never".into(), |t| format!("{t} s"))
}

fn violations(f: &FirstViolations) -> String {
    if f.none() {
        return "no violations".into();
    }
    format!(
        "first q_c<=0 {}, T<Tm {}, sdot<0 {}, s outside [s0, s_r] {}",
        when(f.qc_pos),
        when(f.t_valid),
        when(f.s_mono),
        when(f.s_window)
    )
}

fn quiet() -> RunOptions {
    RunOptions { diagnostics: false, ..RunOptions::default() }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

struct Shared {
    exact: VerifyReport,
    exact_secs: f64,
    under: VerifyReport,
}

fn value(r: &VerifyReport, name: &str) -> Result<f64, String> {
    r.check(name).map(|c| c.value).ok_or_else(|| format!("verify has no `{name}`"))
}

fn c1(sh: &Shared) -> Outcome {
    let run = &sh.exact.run;
    let ds = (run.s_final() - 0.15).abs();
    let first = &run.monitor.first;
    let clean = first.none() && run.result.error.is_none();
    let ok = ds <= tol::SETPOINT_REACH && clean && sh.exact_secs <= 60.0;
    Ok((ok, format!("|s(tf) - s_r| = {ds:.2e} m, {}, run with diagnostics {:.1} s", violations(first), sh.exact_secs)))
}

fn c2(sh: &Shared) -> Outcome {
    let default = sh.exact.run.closed_form_max_rel;
    let mut fine = preset("exact").map_err(err)?;
    let cfg = &mut fine.scenario.config;
    cfg.n = 400;
    let h = cfg.time_step(&fine.scenario.params);
    fine.scenario.config.dt = Some(h / 2.0);
    // 15 time constants; q_c(t)/q_c(0) is below 3e-7 afterwards
    fine.scenario.config.horizon = 1500.0;
    let fine = run_preset(&fine, quiet()).map_err(err)?.closed_form_max_rel;
    let ok = default <= tol::CLOSED_FORM_DEFAULT && fine <= tol::CLOSED_FORM_FINE;
    Ok((ok, format!("max |q_c - q_c(0)e^-ct|/q_c(0): N=200 {default:.2e}, N=400 dt/2 {fine:.2e}")))
}

fn c3(sh: &Shared) -> Outcome {
    let drift = sh.exact.run.energy_drift_max;
    let base = preset("exact").map_err(err)?;
    let ladder = convergence_study(&base, &Ladder::Spatial(vec![100, 200, 400]), 600.0).map_err(err)?;
    let d: Vec<f64> = ladder.levels.iter().map(|l| l.energy_drift).collect();
    let halving = d.windows(2).all(|w| w[1] <= 0.5 * w[0]);
    Ok((
        drift <= tol::ENERGY_DRIFT && halving,
        format!("drift {drift:.2e} over 10000 s; ladder N=100/200/400 drifts {:.2e} {:.2e} {:.2e}", d[0], d[1], d[2]),
    ))
}

fn c4(_: &Shared) -> Outcome {
    let p = PhysicalParams::zinc();
    let cfg = ScenarioConfig::reference();
    let smin = setpoint_min(&cfg, &p).map_err(err)?;
    // midpoint sums of the stored input and of the initial superheat
    let m = 100_000;
    let hq = cfg.d / m as f64;
    let input: f64 = (0..m).map(|_| cfg.q_past * hq).sum();
    let hx = cfg.s0 / m as f64;
    let heat: f64 = (0..m).map(|i| cfg.t_bar * (1.0 - (i as f64 + 0.5) * hx / cfg.s0) * hx).sum();
    let oracle = cfg.s0 + p.beta * (input / p.k + heat / p.alpha);
    let ok = (0.107..=0.111).contains(&smin) && 0.15 > smin && (smin - oracle).abs() <= 1e-9 * oracle;
    Ok((ok, format!("s_r_min = {smin:.6} m, oracle {oracle:.6} m")))
}

fn c5(sh: &Shared) -> Outcome {
    let v = value(&sh.exact, "predictor_identity")?;
    Ok((v <= tol::PREDICTOR, format!("max |q_c(t) - oracle|/q_c(0) = {v:.2e}")))
}

fn snapshot_errors(n: usize) -> Result<((f64, f64), TargetResiduals), String> {
    let mut p = preset("exact").map_err(err)?;
    let cfg = &mut p.scenario.config;
    cfg.n = n;
    cfg.delay_cells = n;
    cfg.horizon = 201.0;
    cfg.sample_interval = 0.05;
    let sc = p.scenario.clone();
    let mut snaps: Vec<TransformedState> = Vec::new();
    let mut first = None;
    let mut failure = None;
    run_closed_loop(&sc, quiet(), |sim, row| {
        if row.t < 199.99 || snaps.len() >= 3 {
            return;
        }
        match sim.transformed() {
            Ok(tr) => {
                first.get_or_insert_with(|| round_trip_error(&tr, &sc.params));
                snaps.push(tr);
            }
            Err(e) => failure = Some(e),
        }
    })
    .map_err(err)?;
    if let Some(e) = failure {
        return Err(err(e));
    }
    let res = target_residuals(&snaps, &sc.params, 0.0).map_err(err)?;
    Ok((first.ok_or("no snapshot")?, res))
}

fn c6(sh: &Shared) -> Outcome {
    let run_worst = value(&sh.exact, "transform_round_trip")?;
    let levels = [100, 200, 400].map(snapshot_errors);
    let mut rt = Vec::new();
    let mut res = Vec::new();
    for l in levels {
        let ((eu, ev), r) = l?;
        rt.push(eu.max(ev));
        res.push([r.transport, r.heat, r.ode / r.ode_rate, r.flux_boundary]);
    }
    let ratios: Vec<f64> = rt.windows(2).map(|w| w[0] / w[1]).collect();
    let shrink = res.windows(2).all(|w| w[1].iter().zip(&w[0]).all(|(f, c)| f < c));
    let ok = run_worst <= tol::ROUND_TRIP && ratios.iter().all(|&r| r >= tol::ROUND_TRIP_RATIO) && shrink;
    Ok((
        ok,
        format!(
            "round trip worst over run {run_worst:.2e}; at t=200 s N=100/200/400 {:.2e} {:.2e} {:.2e} (ratios {:.2} {:.2}); residuals shrink: {shrink}",
            rt[0], rt[1], rt[2], ratios[0], ratios[1]
        ),
    ))
}

fn c7(sh: &Shared) -> Outcome {
    let step = value(&sh.exact, "lyapunov_W_step")?;
    let env = value(&sh.exact, "lyapunov_V_envelope")?;
    Ok((
        step <= tol::LYAPUNOV_STEP && env <= 1.0,
        format!("largest relative W increase per row {step:.2e}; max V/(V(0)e^(a s_r)) = {env:.2e}"),
    ))
}

fn sweep_preset(name: &str) -> Result<ScenarioPreset, String> {
    preset(name).map_err(err)
}

fn c8(_: &Shared) -> Outcome {
    let p = sweep_preset("under-mismatch")?;
    let r = gain_sweep(&p, &[0.01, 0.1], quiet()).map_err(err)?;
    let small = r.entry(0.01).ok_or("missing gain")?;
    let big = r.entry(0.1).ok_or("missing gain")?;
    let big_violates = big.first.qc_pos.is_some() && big.first.t_valid.is_some();
    let probe_split = small.probe.positive && !big.probe.positive;
    let ok = small.loop_passes && big_violates && probe_split && small.agrees() && big.agrees();
    Ok((
        ok,
        format!(
            "c=0.01: loop q_c<=0 {}, probe q<=0 {}; c=0.1: loop q_c<=0 {}, T<Tm {}, probe q<=0 {}",
            when(small.first.qc_pos),
            when(small.probe.first_negative_time),
            when(big.first.qc_pos),
            when(big.first.t_valid),
            when(big.probe.first_negative_time)
        ),
    ))
}

fn c9(_: &Shared) -> Outcome {
    let p = sweep_preset("over-mismatch")?;
    let r = gain_sweep(&p, &[0.01, 0.1], quiet()).map_err(err)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for e in &r.entries {
        let reach = (e.s_final - 0.15).abs();
        ok &= e.loop_passes && reach <= tol::SETPOINT_REACH_MISMATCH;
        let stop = if e.solver_ok { String::new() } else { format!(", solver stopped at {}", when(e.t_final)) };
        detail.push(format!("c={}: {}, |s(tf) - s_r| = {reach:.2e} m{stop}", e.c, violations(&e.first)));
    }
    Ok((ok, detail.join("; ")))
}

fn c10(sh: &Shared) -> Outcome {
    let f = value(&sh.under, "f_identity")?;
    let bounds = sh.under.check("f_bounds").map(|c| c.pass).unwrap_or(false);
    Ok((
        f <= tol::F_IDENTITY && bounds,
        format!("max |f_direct - f_closed| / scale = {f:.2e}; bounds hold strictly at every sample: {bounds}"),
    ))
}

fn c11(_: &Shared) -> Outcome {
    let cases = [(0.01, 30.0, 30.0), (0.01, 90.0, -30.0), (0.005, 30.0, 30.0), (0.008, 30.0, 15.0), (0.1, 30.0, 3.0)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (c, d, dd) in cases {
        let r = positivity_probe(d, dd, &[c], |_| 500.0, |c| 3.03e7 * c, 3000.0, 0.01).map_err(err)?;
        match r[0].halanay {
            HalanayCheck::Checked { gamma, worst_ratio, holds, .. } => {
                ok &= holds && gamma > 0.0 && gamma < 1.0;
                detail.push(format!("c={c} dD={dd}: gamma={gamma:.4} worst |p|/env={worst_ratio:.3}"));
            }
            HalanayCheck::NotApplicable => {
                ok = false;
                detail.push(format!("c={c} dD={dd}: not applicable"));
            }
        }
    }
    Ok((ok, detail.join("; ")))
}

fn main() -> ExitCode {
    let clock = Instant::now();
    let shared = (|| -> Result<Shared, String> {
        let t = Instant::now();
        let exact = verify(&preset("exact").map_err(err)?).map_err(err)?;
        let exact_secs = t.elapsed().as_secs_f64();
        let mut under = preset("under-mismatch").map_err(err)?;
        under.scenario.config.c = 0.01;
        under.refresh_expectations();
        let under = verify(&under).map_err(err)?;
        Ok(Shared { exact, exact_secs, under })
    })();
    let shared = match shared {
        Ok(s) => s,
        Err(e) => {
            println!("[FAIL] setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: [(&str, fn(&Shared) -> Outcome); 11] = [
        ("exact compensation reaches the setpoint with no violations", c1),
        ("controller follows its closed-form decay", c2),
        ("energy balance drift small and halving under refinement", c3),
        ("setpoint restriction", c4),
        ("predictor equivalence", c5),
        ("transform consistency", c6),
        ("Lyapunov monotonicity", c7),
        ("robustness to an under-estimated delay", c8),
        ("robustness to an over-estimated delay", c9),
        ("in-transit input identity and bounds", c10),
        ("Halanay envelope", c11),
    ];
    let mut failed = Vec::new();
    for (i, (title, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let (pass, detail) = match f(&shared) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("[{}] {n}. {title}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(n);
        }
    }
    println!("acceptance: {} of 11 passed in {:.1} s", 11 - failed.len(), clock.elapsed().as_secs_f64());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
