//! `stefan`: runs, sweeps, verifies and refines the delay-compensated Stefan
//! control presets.

mod config;
mod output;

use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use stefan_core::experiments::{
    convergence_study, gain_sweep_with, preset, run_preset, verify, ExperimentRun, Ladder, ScenarioPreset,
    PRESET_NAMES,
};
use stefan_core::{tolerances, RunOptions, StefanError};

use config::Parsed;
use output::{create_dir, out_root, short_hash, write_file, write_run};

const OVERRIDE_HELP: &str = "\
Overrides follow the preset as `--key value` or `--key=value`:
  [scenario]     D deltaD c s_r s0 Tbar q_past law profile
  [numerics]     N dt horizon delay_cells
  [diagnostics]  sample_interval lyapunov_m
Durations take an `s` or `min` suffix. Flags accepted in the same place:
  --config FILE  config file with the sections above
  --out DIR      output root (default $STEFAN_OUT, else ./runs)
  --stride N     diagnostics on every N-th recorded row (run, sweep)
  --gains LIST   comma-separated gains (sweep)
  --ladder KIND  spatial or temporal (converge)
  --levels LIST  grid sizes or step divisors (converge)
Precedence: preset < config file < command line.
Exit codes: 0 pass, 1 check failure, 2 usage error, 3 numerical fatal.";

#[derive(Parser)]
#[command(name = "stefan", version, about = "Delay-compensated Stefan problem control experiments", after_help = OVERRIDE_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset and write config, trace and summary
    Run(Target),
    /// Run a preset at several gains in parallel, next to the controller DDE
    Sweep(Target),
    /// Run the invariant battery and print a per-check table
    Verify(Target),
    /// Refine the grid or the step and report observed orders
    Converge(Target),
    /// List the built-in presets
    ListPresets,
}

#[derive(Args)]
#[command(after_help = OVERRIDE_HELP)]
struct Target {
    preset: String,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    rest: Vec<String>,
}

/// Why a command did not pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Usage(String),
    Fatal(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Fatal(_) | Failure::Io(_) => 3,
        }
    }
}

impl From<StefanError> for Failure {
    fn from(e: StefanError) -> Self {
        match e {
            StefanError::Domain { .. }
            | StefanError::Config(_)
            | StefanError::UnknownPreset(_)
            | StefanError::UnderResolved { .. } => Failure::Usage(e.to_string()),
            other => Failure::Fatal(other.to_string()),
        }
    }
}

enum Status {
    Pass,
    ChecksFailed,
}

fn status(pass: bool) -> Status {
    if pass {
        Status::Pass
    } else {
        Status::ChecksFailed
    }
}

struct Loaded {
    preset: ScenarioPreset,
    parsed: Parsed,
    horizon_set: bool,
}

fn load(t: &Target, allowed: &[&str]) -> Result<Loaded, Failure> {
    let parsed = config::parse_args(&t.rest, allowed)?;
    let mut preset = preset(&t.preset)
        .map_err(|_| Failure::Usage(format!("unknown preset `{}`; known: {}", t.preset, PRESET_NAMES.join(", "))))?;
    let file = match &parsed.flags.config {
        Some(path) => config::read_config(path)?,
        None => Vec::new(),
    };
    let horizon_set = config::merge(&mut preset.scenario.config, &file, &parsed.overrides)?;
    preset.refresh_expectations();
    Ok(Loaded { preset, parsed, horizon_set })
}

fn fatal_of(run: &ExperimentRun) -> Option<Failure> {
    run.result.error.as_ref().filter(|e| e.is_numerical_fatal()).map(|e| Failure::Fatal(e.to_string()))
}

fn options(parsed: &Parsed) -> RunOptions {
    RunOptions { diagnostics_stride: parsed.flags.stride.unwrap_or(1), ..RunOptions::default() }
}

fn cmd_run(t: &Target) -> Result<Status, Failure> {
    let l = load(t, &["config", "out", "stride"])?;
    let run = run_preset(&l.preset, options(&l.parsed))?;
    let snapshot = config::render(&l.preset.name, &l.preset.scenario.config);
    let dir = out_root(l.parsed.flags.out.as_deref()).join(format!("{}-{}", l.preset.name, short_hash(&snapshot)));
    write_run(&dir, &snapshot, &run, "")?;
    print!("{}", stefan_core::experiments::summary_text(&run));
    println!("output = {}", dir.display());
    match fatal_of(&run) {
        Some(f) => Err(f),
        None => Ok(status(run.passed())),
    }
}

fn cmd_verify(t: &Target) -> Result<Status, Failure> {
    let l = load(t, &["config", "out"])?;
    let report = verify(&l.preset)?;
    let snapshot = config::render(&l.preset.name, &l.preset.scenario.config);
    let dir = out_root(l.parsed.flags.out.as_deref()).join(format!("{}-{}", l.preset.name, short_hash(&snapshot)));
    let mut extra = String::new();
    for c in &report.checks {
        extra.push_str(&format!(
            "verify.{} = {} (worst {:e}, tolerance {:e})\n",
            c.name,
            if c.pass { "pass" } else { "fail" },
            c.value,
            c.tolerance
        ));
    }
    extra.push_str(&format!("verify_result = {}\n", if report.passed() { "pass" } else { "fail" }));
    write_run(&dir, &snapshot, &report.run, &extra)?;
    print!("{}", report.table());
    println!("verify_result = {}", if report.passed() { "pass" } else { "fail" });
    println!("output = {}", dir.display());
    match fatal_of(&report.run) {
        Some(f) => Err(f),
        None => Ok(status(report.passed())),
    }
}

fn time_or_none(t: Option<f64>) -> String {
    t.map_or_else(|| "none".into(), |t| t.to_string())
}

fn cmd_sweep(t: &Target) -> Result<Status, Failure> {
    let l = load(t, &["config", "out", "stride", "gains"])?;
    let gains = l.parsed.flags.gains.clone().unwrap_or_else(|| l.preset.gains.clone());
    if gains.is_empty() || gains.iter().any(|c| !(*c > 0.0)) {
        return Err(Failure::Usage("`--gains` must list positive gains".into()));
    }
    let base = config::render(&l.preset.name, &l.preset.scenario.config);
    let gain_list = gains.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
    let tag = short_hash(&format!("{base}# gains = {gain_list}\n"));
    let dir = out_root(l.parsed.flags.out.as_deref()).join(format!("{}-sweep-{tag}", l.preset.name));
    create_dir(&dir)?;
    let written: Mutex<Vec<Result<(f64, bool, bool), Failure>>> = Mutex::new(Vec::new());
    let sink = |run: &ExperimentRun| {
        let cfg = &run.preset.scenario.config;
        let snapshot = config::render(&run.preset.name, cfg);
        let r = write_run(&dir.join(format!("c-{}", cfg.c)), &snapshot, run, "")
            .map(|_| (cfg.c, run.passed(), fatal_of(run).is_some()));
        written.lock().expect("sweep sink poisoned").push(r);
    };
    let report = gain_sweep_with(&l.preset, &gains, options(&l.parsed), &sink)?;
    let written = written.into_inner().expect("sweep sink poisoned").into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut text = format!("preset = {}\ngains = {gain_list}\n", l.preset.name);
    let mut pass = true;
    let mut fatal = false;
    for e in &report.entries {
        let (_, passed, f) = written.iter().find(|w| w.0 == e.c).copied().unwrap_or((e.c, false, false));
        pass &= passed && e.agrees();
        fatal |= f;
        text.push_str(&format!(
            "c = {} loop = {} constraints = {} first_qc_pos = {} first_T_valid = {} s_final = {} probe_positive = {} probe_first_negative = {} agrees = {}\n",
            e.c,
            if passed { "pass" } else { "fail" },
            if e.loop_passes { "held" } else { "violated" },
            time_or_none(e.first.qc_pos),
            time_or_none(e.first.t_valid),
            e.s_final,
            e.probe.positive,
            time_or_none(e.probe.first_negative_time),
            e.agrees(),
        ));
    }
    text.push_str(&format!("result = {}\n", if pass { "pass" } else { "fail" }));
    write_file(&dir.join("sweep.txt"), &text)?;
    print!("{text}");
    println!("output = {}", dir.display());
    if fatal {
        return Err(Failure::Fatal("a sweep run stopped on a numerical failure".into()));
    }
    Ok(status(pass))
}

fn cmd_converge(t: &Target) -> Result<Status, Failure> {
    let l = load(t, &["config", "out", "ladder", "levels"])?;
    let kind = l.parsed.flags.ladder.as_deref().unwrap_or("spatial");
    let (ladder, order) = match kind {
        "spatial" => {
            let n = l.parsed.flags.levels.clone().unwrap_or_else(|| vec![100, 200, 400]);
            (Ladder::Spatial(n.into_iter().map(|v| v as usize).collect()), tolerances::SPATIAL_ORDER)
        }
        "temporal" => (
            Ladder::Temporal(l.parsed.flags.levels.clone().unwrap_or_else(|| vec![1, 2, 4])),
            tolerances::TEMPORAL_ORDER,
        ),
        other => return Err(Failure::Usage(format!("`--ladder` must be spatial or temporal, got `{other}`"))),
    };
    // refinement needs a resolved transient, not the full settling horizon
    let horizon = if l.horizon_set { l.preset.scenario.config.horizon } else { 600.0 };
    let report = convergence_study(&l.preset, &ladder, horizon)?;
    let snapshot = config::render(&l.preset.name, &l.preset.scenario.config);
    let tag = short_hash(&format!("{snapshot}# ladder = {ladder:?} horizon = {horizon}\n"));
    let dir = out_root(l.parsed.flags.out.as_deref()).join(format!("{}-converge-{tag}", l.preset.name));
    let mut text = format!("preset = {}\nladder = {kind}\nhorizon = {horizon}\n", l.preset.name);
    for (i, v) in report.levels.iter().enumerate() {
        text.push_str(&format!(
            "level.{i} = N {} dt {} s_final {} energy_drift {:e} closed_form {:e}\n",
            v.n, v.dt, v.s_final, v.energy_drift, v.closed_form
        ));
    }
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    let pass = report.deterministic && report.min_s_order() >= order && report.min_drift_order() >= order;
    text.push_str(&format!(
        "s_orders = {}\ndrift_orders = {}\ndeterministic = {}\nrequired_order = {order}\nresult = {}\n",
        join(&report.s_orders),
        join(&report.drift_orders),
        report.deterministic,
        if pass { "pass" } else { "fail" }
    ));
    create_dir(&dir)?;
    write_file(&dir.join("config.ini"), &snapshot)?;
    write_file(&dir.join("convergence.txt"), &text)?;
    print!("{text}");
    println!("output = {}", dir.display());
    Ok(status(pass))
}

fn cmd_list() -> Result<Status, Failure> {
    for name in PRESET_NAMES {
        let p = preset(name)?;
        let c = &p.scenario.config;
        let gains = p.gains.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",");
        println!(
            "{name:<20} law {} D {} s deltaD {} s gains {gains} s_r {} m horizon {} s",
            c.law.as_str(),
            c.d,
            c.delta_d,
            c.s_r,
            c.horizon
        );
    }
    Ok(Status::Pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(t) => cmd_run(t),
        Command::Sweep(t) => cmd_sweep(t),
        Command::Verify(t) => cmd_verify(t),
        Command::Converge(t) => cmd_converge(t),
        Command::ListPresets => cmd_list(),
    };
    match outcome {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::ChecksFailed) => ExitCode::from(1),
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Usage(m) => ("usage error", m),
                Failure::Fatal(m) => ("numerical failure", m),
                Failure::Io(m) => ("i/o error", m),
            };
            eprintln!("stefan: {kind}: {msg}");
            ExitCode::from(f.code())
        }
    }
}
