//! Run configuration: built-in preset, then a config file, then command-line
//! overrides.
//!
//! Config files are flat `key = value` lines grouped under `[scenario]`,
//! `[numerics]` and `[diagnostics]`. `#` and `;` start comments.

use std::fs;
use std::path::{Path, PathBuf};

use stefan_core::experiments::{apply_override, canonical_key, config_entries, section_of, SECTIONS};
use stefan_core::ScenarioConfig;

use crate::Failure;

/// Command-line flags that are not config keys.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Flags {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub stride: Option<u64>,
    pub gains: Option<Vec<f64>>,
    pub ladder: Option<String>,
    pub levels: Option<Vec<u32>>,
}

/// Parsed trailing arguments.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Parsed {
    pub flags: Flags,
    /// Canonical key and raw value, in the order given
    pub overrides: Vec<(&'static str, String)>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, Failure> {
    value
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| usage(format!("`--{key}`: cannot parse `{v}`"))))
        .collect()
}

/// Whether two spellings set the key to the same value (`30` and `0.5min`).
fn same_value(key: &str, a: &str, b: &str) -> bool {
    let set = |v: &str| {
        let mut cfg = ScenarioConfig::reference();
        apply_override(&mut cfg, key, v).ok().map(|_| cfg)
    };
    matches!((set(a), set(b)), (Some(x), Some(y)) if x == y)
}

/// Adds a pair, rejecting a key given twice with different values.
fn push(pairs: &mut Vec<(&'static str, String)>, key: &'static str, value: &str, origin: &str) -> Result<(), Failure> {
    let value = value.trim().to_string();
    if let Some((_, old)) = pairs.iter().find(|(k, _)| *k == key) {
        if *old != value && !same_value(key, old, &value) {
            return Err(usage(format!("conflicting values for `{key}` in {origin}: `{old}` and `{value}`")));
        }
        return Ok(());
    }
    pairs.push((key, value));
    Ok(())
}

/// Parses `--key value` and `--key=value` tokens. `allowed` lists the
/// non-config flags the subcommand accepts.
pub fn parse_args(args: &[String], allowed: &[&str]) -> Result<Parsed, Failure> {
    let mut parsed = Parsed::default();
    let mut seen_flags: Vec<&str> = Vec::new();
    let mut it = args.iter();
    while let Some(tok) = it.next() {
        let body = tok
            .strip_prefix("--")
            .ok_or_else(|| usage(format!("unexpected argument `{tok}`; overrides are `--key value`")))?;
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k, v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| usage(format!("`--{body}` needs a value")))?;
                (body, v.clone())
            }
        };
        if let Some(&flag) = allowed.iter().find(|f| **f == key) {
            if seen_flags.contains(&flag) {
                return Err(usage(format!("`--{flag}` given more than once")));
            }
            seen_flags.push(flag);
            let f = &mut parsed.flags;
            match flag {
                "config" => f.config = Some(PathBuf::from(value)),
                "out" => f.out = Some(PathBuf::from(value)),
                "stride" => {
                    let n: u64 = value.parse().map_err(|_| usage(format!("`--stride`: cannot parse `{value}`")))?;
                    if n == 0 {
                        return Err(usage("`--stride` must be at least 1"));
                    }
                    f.stride = Some(n);
                }
                "gains" => f.gains = Some(list(flag, &value)?),
                "ladder" => f.ladder = Some(value),
                "levels" => f.levels = Some(list(flag, &value)?),
                _ => unreachable!("flag table and match disagree on `{flag}`"),
            }
            continue;
        }
        let canon = canonical_key(key).ok_or_else(|| usage(format!("unknown key `{key}`")))?;
        push(&mut parsed.overrides, canon, &value, "the command line")?;
    }
    Ok(parsed)
}

/// Reads a config file into canonical pairs. Unknown keys and keys under the
/// wrong section are rejected.
pub fn parse_config_text(text: &str, origin: &str) -> Result<Vec<(&'static str, String)>, Failure> {
    let mut pairs = Vec::new();
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        let at = |msg: String| usage(format!("{origin}:{}: {msg}", i + 1));
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| at(format!("malformed section header `{line}`")))?.trim();
            let known = SECTIONS.iter().find(|(s, _)| *s == name).ok_or_else(|| at(format!("unknown section `{name}`")))?;
            section = Some(known.0);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let canon = canonical_key(key).ok_or_else(|| at(format!("unknown key `{key}`")))?;
        let home = section_of(canon).expect("canonical keys have a section");
        match section {
            Some(s) if s == home => {}
            Some(s) => return Err(at(format!("key `{key}` belongs in [{home}], not [{s}]"))),
            None => return Err(at(format!("key `{key}` appears before any section; it belongs in [{home}]"))),
        }
        push(&mut pairs, canon, value, origin)?;
    }
    Ok(pairs)
}

pub fn read_config(path: &Path) -> Result<Vec<(&'static str, String)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text, &path.display().to_string())
}

/// Applies file pairs, then command-line pairs. Returns whether `horizon` was
/// set by either.
pub fn merge(
    cfg: &mut ScenarioConfig,
    file: &[(&'static str, String)],
    cli: &[(&'static str, String)],
) -> Result<bool, Failure> {
    for (k, v) in file.iter().chain(cli) {
        apply_override(cfg, k, v).map_err(|e| usage(e.to_string()))?;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(file.iter().chain(cli).any(|(k, _)| *k == "horizon"))
}

/// Config snapshot in the file format. Feeding it back with `--config`
/// reproduces the run.
pub fn render(preset: &str, cfg: &ScenarioConfig) -> String {
    let mut out = format!("# preset = {preset}\n");
    let mut current = "";
    for (section, key, value) in config_entries(cfg) {
        if section != current {
            out.push_str(&format!("\n[{section}]\n"));
            current = section;
        }
        out.push_str(&format!("{key} = {value}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn overrides_take_both_spellings() {
        let p = parse_args(&args("--c 0.02 --horizon=5000s --dD 10"), &[]).unwrap();
        assert_eq!(p.overrides, vec![("c", "0.02".into()), ("horizon", "5000s".into()), ("deltaD", "10".into())]);
    }

    #[test]
    fn conflicting_duplicates_are_usage_errors() {
        assert!(parse_args(&args("--c 0.02 --c 0.02"), &[]).is_ok());
        let p = parse_args(&args("--horizon 30 --horizon 0.5min"), &[]).unwrap();
        assert_eq!(p.overrides, vec![("horizon", "30".into())]);
        let Err(Failure::Usage(msg)) = parse_args(&args("--c 0.02 --c 0.03"), &[]) else { panic!() };
        assert!(msg.contains("`c`"), "{msg}");
        assert!(matches!(parse_args(&args("--D 1 --d 2"), &[]), Err(Failure::Usage(_))));
    }

    #[test]
    fn unknown_keys_and_missing_values_are_rejected() {
        let Err(Failure::Usage(msg)) = parse_args(&args("--gain 0.1"), &[]) else { panic!() };
        assert!(msg.contains("`gain`"));
        assert!(parse_args(&args("--c"), &[]).is_err());
        assert!(parse_args(&args("c 0.1"), &[]).is_err());
        assert!(parse_args(&args("--stride 2"), &[]).is_err());
        assert_eq!(parse_args(&args("--stride 2"), &["stride"]).unwrap().flags.stride, Some(2));
    }

    #[test]
    fn config_sections_are_enforced() {
        let ok = "[scenario]\nc = 0.02 # gain\n\n[numerics]\nN = 100\n";
        assert_eq!(parse_config_text(ok, "f").unwrap(), vec![("c", "0.02".into()), ("N", "100".into())]);
        for bad in ["[numerics]\nc = 0.02\n", "c = 0.02\n", "[scenario]\ngian = 1\n", "[solver]\n", "[scenario]\nc 1\n"] {
            assert!(matches!(parse_config_text(bad, "f"), Err(Failure::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn snapshot_round_trips() {
        let mut cfg = ScenarioConfig::reference();
        cfg.c = 0.02;
        cfg.dt = Some(0.25);
        cfg.profile = Some(vec![(0.0, 50.0), (0.1, 0.0)]);
        let text = render("exact", &cfg);
        let pairs = parse_config_text(&text, "snap").unwrap();
        let mut back = ScenarioConfig::reference();
        merge(&mut back, &pairs, &[]).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn command_line_wins_over_file() {
        let mut cfg = ScenarioConfig::reference();
        let file = parse_config_text("[scenario]\nc = 0.02\nD = 1min\n", "f").unwrap();
        let cli = parse_args(&args("--c 0.03"), &[]).unwrap().overrides;
        merge(&mut cfg, &file, &cli).unwrap();
        assert_eq!((cfg.c, cfg.d), (0.03, 60.0));
    }

    proptest::proptest! {
        #[test]
        fn any_valid_snapshot_round_trips(c in 1e-4f64..1.0, d in 1.0f64..600.0, frac in -0.99f64..2.0, n in 2usize..500, horizon in 1.0f64..1e5) {
            let mut cfg = ScenarioConfig::reference();
            cfg.c = c;
            cfg.d = d;
            cfg.delta_d = frac * d;
            cfg.n = n;
            cfg.horizon = horizon;
            proptest::prop_assume!(cfg.validate().is_ok());
            let text = render("exact", &cfg);
            let mut back = ScenarioConfig::reference();
            merge(&mut back, &parse_config_text(&text, "snap").unwrap(), &[]).unwrap();
            proptest::prop_assert_eq!(back, cfg);
        }
    }
}
