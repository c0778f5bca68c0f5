//! Scenario files.
//!
//! A scenario is a TOML document with four sections:
//!
//! ```toml
//! [scenario]
//! name = "r2_ellipse"
//! a = 1.5
//! b = 0.5
//! n = 128
//!
//! [params]
//! p = 2.0
//! lambda = 1.0
//!
//! [flow]
//! t_max = 50.0
//! stepper = "chebyshev"
//! stages = 64
//!
//! [output]
//! snapshot_every = 20
//! ```
//!
//! Only `scenario.name` and the preset's own keys are required.

use std::path::{Path, PathBuf};

use pelastic::flow::{EscapePredicate, FlowConfig, Stepper};
use pelastic::{ElasticParams, Error as CoreError};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_N: usize = 128;
pub const MIN_N: usize = 16;
pub const DEFAULT_T_MIN: f64 = 0.1;

/// The raw document, as written by the user.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_safety: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reparam_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mono_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    /// `"rk4"` or `"chebyshev"`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stepper: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_coordinate: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_bound: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Subdirectory of `dir`; defaults to the config file stem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Write a snapshot every this many samples; 0 keeps only the first and last.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    /// `"final"`, `"extrapolated"`, or a number.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_limit: Option<EnergyLimitSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergyLimitSetting {
    Value(f64),
    Mode(String),
}

/// Initial curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    R2Ellipse { a: f64, b: f64 },
    R2Circle { r: f64 },
    SphereEquator { amplitude: f64, mode: u32 },
    HyperbolicCircle { rho: f64 },
    RevolutionLatitude { t0: f64, t_min: f64 },
    Custom { snapshot: PathBuf, t_min: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum EnergyLimitSpec {
    Final,
    Extrapolated,
    Analytic(f64),
}

/// Fully validated scenario with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub preset: Preset,
    /// Node count; a custom scenario takes it from its snapshot.
    pub n: Option<usize>,
    pub seed: u64,
    pub params: ElasticParams,
    pub flow: FlowConfig,
    pub output_dir: PathBuf,
    pub run_name: String,
    pub snapshot_every: usize,
    pub energy_limit: EnergyLimitSpec,
    pub fit_window: f64,
}

fn invalid(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_path_buf(), message: msg.into() }
}

pub fn parse_config(path: &Path) -> Result<ScenarioSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
    let base = path.parent().unwrap_or(Path::new("."));
    parse_str(&text, &stem, base).map_err(|message| invalid(path, message))
}

/// Parses a document; `stem` names the run and relative snapshot paths resolve against `base`.
pub fn parse_str(text: &str, stem: &str, base: &Path) -> Result<ScenarioSpec, String> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
    resolve(file, stem, base)
}

fn core(e: CoreError) -> String {
    e.to_string()
}

/// Keys of `[scenario]` that are set but not used by `preset`.
fn stray_keys(s: &ScenarioSection, allowed: &[&str]) -> Vec<&'static str> {
    let set = [
        ("a", s.a.is_some()),
        ("b", s.b.is_some()),
        ("r", s.r.is_some()),
        ("amplitude", s.amplitude.is_some()),
        ("mode", s.mode.is_some()),
        ("rho", s.rho.is_some()),
        ("t0", s.t0.is_some()),
        ("t_min", s.t_min.is_some()),
        ("snapshot", s.snapshot.is_some()),
    ];
    set.iter().filter(|(k, on)| *on && !allowed.contains(k)).map(|(k, _)| *k).collect()
}

fn need<T: Copy>(v: Option<T>, key: &str, preset: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("scenario.{key} is required for {preset}"))
}

fn positive(v: f64, key: &str) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{key} must be positive, got {v}"))
    }
}

fn preset(s: &ScenarioSection, base: &Path) -> Result<Preset, String> {
    let name = s.name.as_str();
    let (preset, allowed): (Preset, &[&str]) = match name {
        "r2_ellipse" => (
            Preset::R2Ellipse {
                a: positive(need(s.a, "a", name)?, "scenario.a")?,
                b: positive(need(s.b, "b", name)?, "scenario.b")?,
            },
            &["a", "b"],
        ),
        "r2_circle" => (Preset::R2Circle { r: positive(need(s.r, "r", name)?, "scenario.r")? }, &["r"]),
        "sphere_equator" => {
            let amplitude = s.amplitude.unwrap_or(0.0);
            if !(amplitude.abs() < 1.0) {
                return Err(format!("scenario.amplitude must lie in (−1, 1), got {amplitude}"));
            }
            (Preset::SphereEquator { amplitude, mode: s.mode.unwrap_or(3) }, &["amplitude", "mode"])
        }
        "hyperbolic_circle" => {
            (Preset::HyperbolicCircle { rho: positive(need(s.rho, "rho", name)?, "scenario.rho")? }, &["rho"])
        }
        "revolution_latitude" => {
            let t_min = positive(s.t_min.unwrap_or(DEFAULT_T_MIN), "scenario.t_min")?;
            let t0 = need(s.t0, "t0", name)?;
            if !(t0 >= t_min) {
                return Err(format!("scenario.t0 = {t0} lies outside the profile domain t ≥ t_min = {t_min}"));
            }
            (Preset::RevolutionLatitude { t0, t_min }, &["t0", "t_min"])
        }
        "custom" => {
            let snapshot = s.snapshot.clone().ok_or("scenario.snapshot is required for custom")?;
            let snapshot = if snapshot.is_absolute() { snapshot } else { base.join(snapshot) };
            let t_min = positive(s.t_min.unwrap_or(DEFAULT_T_MIN), "scenario.t_min")?;
            (Preset::Custom { snapshot, t_min }, &["snapshot", "t_min"])
        }
        other => {
            return Err(format!(
                "unknown scenario {other:?}; expected r2_ellipse, r2_circle, sphere_equator, hyperbolic_circle, revolution_latitude or custom"
            ))
        }
    };
    let stray = stray_keys(s, allowed);
    if !stray.is_empty() {
        return Err(format!("{name} does not take scenario.{}", stray.join(", scenario.")));
    }
    Ok(preset)
}

fn flow_config(f: &FlowSection) -> Result<FlowConfig, String> {
    let d = FlowConfig::default();
    let stepper = match (f.stepper.as_deref(), f.stages) {
        (None | Some("rk4"), None) => Stepper::Rk4,
        (Some("rk4") | None, Some(_)) => return Err("flow.stages needs flow.stepper = \"chebyshev\"".into()),
        (Some("chebyshev"), stages) => Stepper::Chebyshev { stages: stages.unwrap_or(32) },
        (Some(other), _) => return Err(format!("unknown flow.stepper {other:?}; expected \"rk4\" or \"chebyshev\"")),
    };
    let escape = match (f.escape_coordinate, f.escape_bound) {
        (None, None) => None,
        (c, Some(bound)) => Some(EscapePredicate { coordinate: c.unwrap_or(2), bound }),
        (Some(_), None) => return Err("flow.escape_coordinate needs flow.escape_bound".into()),
    };
    let config = FlowConfig {
        dt_safety: f.dt_safety.unwrap_or(d.dt_safety),
        t_max: f.t_max.unwrap_or(d.t_max),
        reparam_every: f.reparam_every.unwrap_or(d.reparam_every),
        tol_residual: f.tol_residual.unwrap_or(d.tol_residual),
        escape,
        mono_tol: f.mono_tol.unwrap_or(d.mono_tol),
        sample_every: f.sample_every.unwrap_or(d.sample_every),
        stepper,
    };
    config.validate().map_err(core)?;
    Ok(config)
}

fn energy_limit(setting: &Option<EnergyLimitSetting>) -> Result<EnergyLimitSpec, String> {
    match setting {
        None => Ok(EnergyLimitSpec::Extrapolated),
        Some(EnergyLimitSetting::Value(v)) if v.is_finite() => Ok(EnergyLimitSpec::Analytic(*v)),
        Some(EnergyLimitSetting::Value(v)) => Err(format!("output.energy_limit must be finite, got {v}")),
        Some(EnergyLimitSetting::Mode(m)) => match m.as_str() {
            "final" => Ok(EnergyLimitSpec::Final),
            "extrapolated" => Ok(EnergyLimitSpec::Extrapolated),
            other => Err(format!("unknown output.energy_limit {other:?}; expected \"final\", \"extrapolated\" or a number")),
        },
    }
}

fn resolve(file: ConfigFile, stem: &str, base: &Path) -> Result<ScenarioSpec, String> {
    let preset = preset(&file.scenario, base)?;
    let n = match (&preset, file.scenario.n) {
        (Preset::Custom { .. }, Some(_)) => return Err("custom takes its node count from the snapshot; drop scenario.n".into()),
        (Preset::Custom { .. }, None) => None,
        (_, n) => Some(n.unwrap_or(DEFAULT_N)),
    };
    if let Some(n) = n.filter(|&n| n < MIN_N) {
        return Err(format!("scenario.n must be ≥ {MIN_N}, got {n}"));
    }
    let d = ElasticParams::default();
    let params = ElasticParams::new(file.params.p.unwrap_or(d.p), file.params.lambda.unwrap_or(d.lambda)).map_err(core)?;
    let flow = flow_config(&file.flow)?;
    let o = &file.output;
    let fit_window = o.fit_window.unwrap_or(0.5);
    if !(fit_window > 0.0 && fit_window <= 1.0) {
        return Err(format!("output.fit_window must lie in (0, 1], got {fit_window}"));
    }
    let run_name = o.name.clone().unwrap_or_else(|| stem.to_string());
    if run_name.is_empty() || run_name.contains(['/', '\\']) {
        return Err(format!("output.name must be a plain directory name, got {run_name:?}"));
    }
    Ok(ScenarioSpec {
        name: file.scenario.name.clone(),
        preset,
        n,
        seed: file.scenario.seed.unwrap_or(0),
        params,
        flow,
        output_dir: o.dir.clone().unwrap_or_else(|| PathBuf::from("output")),
        run_name,
        snapshot_every: o.snapshot_every.unwrap_or(0),
        energy_limit: energy_limit(&o.energy_limit)?,
        fit_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioSpec, String> {
        parse_str(text, "case", Path::new("."))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let spec = parse("[scenario]\nname = \"r2_ellipse\"\na = 1.5\nb = 0.5\n").unwrap();
        assert_eq!(spec.n, Some(128));
        assert_eq!(spec.params, ElasticParams { p: 2.0, lambda: 1.0 });
        assert_eq!(spec.flow, FlowConfig::default());
        assert_eq!(spec.preset, Preset::R2Ellipse { a: 1.5, b: 0.5 });
        assert_eq!(spec.run_name, "case");
    }

    #[test]
    fn rejections() {
        let bad_p = parse("[scenario]\nname = \"r2_circle\"\nr = 1.0\n[params]\np = 1.5\n").unwrap_err();
        assert!(bad_p.contains("p must be ≥ 2"), "{bad_p}");
        let domain = parse("[scenario]\nname = \"revolution_latitude\"\nt0 = 0.5\nt_min = 1.0\n").unwrap_err();
        assert!(domain.contains("outside the profile domain"), "{domain}");
        let unknown = parse("[scenario]\nname = \"r2_circle\"\nr = 1.0\n[flow]\ndt = 0.1\n").unwrap_err();
        assert!(unknown.contains("unknown field"), "{unknown}");
        let stray = parse("[scenario]\nname = \"r2_circle\"\nr = 1.0\nrho = 2.0\n").unwrap_err();
        assert!(stray.contains("does not take scenario.rho"), "{stray}");
        assert!(parse("[scenario]\nname = \"r2_circle\"\nr = 1.0\nn = 8\n").is_err());
        assert!(parse("[scenario]\nname = \"torus\"\n").is_err());
    }

    #[test]
    fn syntax_errors_report_the_line() {
        let err = parse("[scenario]\nname = \"r2_circle\"\nr = = 1.0\n").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn stepper_and_escape() {
        let spec = parse(
            "[scenario]\nname = \"revolution_latitude\"\nt0 = 10.0\n[flow]\nstepper = \"chebyshev\"\nstages = 64\nescape_bound = 10.5\n",
        )
        .unwrap();
        assert_eq!(spec.flow.stepper, Stepper::Chebyshev { stages: 64 });
        assert_eq!(spec.flow.escape, Some(EscapePredicate { coordinate: 2, bound: 10.5 }));
        assert!(parse("[scenario]\nname = \"r2_circle\"\nr = 1.0\n[flow]\nstages = 8\n").is_err());
    }

    #[test]
    fn energy_limit_settings() {
        let with = |v: &str| parse(&format!("[scenario]\nname = \"r2_circle\"\nr = 1.0\n[output]\nenergy_limit = {v}\n"));
        assert_eq!(with("\"final\"").unwrap().energy_limit, EnergyLimitSpec::Final);
        assert_eq!(with("8.8857").unwrap().energy_limit, EnergyLimitSpec::Analytic(8.8857));
        assert!(with("\"median\"").is_err());
    }
}
