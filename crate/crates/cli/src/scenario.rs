use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pelastic::curve::presets;
use pelastic::diagnostics::{lojasiewicz_fit, EnergyLimit};
use pelastic::flow::{self, FlowSample, FlowTrajectory, Outcome};
use pelastic::snapshot::Snapshot;
use pelastic::{AmbientModel, DiscreteCurve, ProfileFunction};
use serde::{Deserialize, Serialize};

use crate::config::{EnergyLimitSpec, Preset, ScenarioSpec};
use crate::error::CliError;

pub const CSV_HEADER: &str = "step,time,energy,residual,length,max_k,min_k,dt";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub outcome: Outcome,
    pub message: Option<String>,
    pub steps: usize,
    pub final_time: f64,
    pub final_energy: f64,
    pub final_residual: f64,
    pub theta_hat: Option<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub e_inf: Option<f64>,
    /// Why the exponent fit is missing, if it is.
    pub fit_note: Option<String>,
    pub wall_time_s: f64,
    pub config: ScenarioSpec,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub summary: Summary,
}

fn io_err(path: &Path, e: impl ToString) -> CliError {
    CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn ambient_named(name: &str, t_min: f64) -> Option<AmbientModel> {
    match name {
        "sphere2" => Some(AmbientModel::sphere()),
        "hyperbolic2" => Some(AmbientModel::hyperbolic()),
        "revolution" => ProfileFunction::inverse(t_min).ok().map(AmbientModel::revolution),
        _ => name.strip_prefix("euclidean")?.parse().ok().and_then(|d| AmbientModel::euclidean(d).ok()),
    }
}

pub fn initial_curve(spec: &ScenarioSpec) -> Result<DiscreteCurve, CliError> {
    let n = spec.n.unwrap_or_default();
    let curve = match &spec.preset {
        Preset::R2Ellipse { a, b } => presets::euclidean_ellipse(n, *a, *b),
        Preset::R2Circle { r } => presets::euclidean_circle(n, *r),
        Preset::SphereEquator { amplitude, mode } => {
            presets::sphere_equator(n).and_then(|c| c.perturb_normal(*amplitude, *mode, spec.seed))
        }
        Preset::HyperbolicCircle { rho } => presets::hyperbolic_circle(n, *rho),
        Preset::RevolutionLatitude { t0, t_min } => {
            ProfileFunction::inverse(*t_min).and_then(|prof| presets::revolution_latitude(n, prof, *t0))
        }
        Preset::Custom { snapshot, t_min } => {
            let snap = Snapshot::read(snapshot).map_err(|e| io_err(snapshot, e))?;
            let ambient = ambient_named(&snap.ambient, *t_min)
                .ok_or_else(|| io_err(snapshot, format!("unknown ambient {:?}", snap.ambient)))?;
            return snap.to_curve(ambient).map_err(|e| io_err(snapshot, e));
        }
    };
    curve.map_err(CliError::Numerical)
}

fn csv_row(s: &FlowSample) -> String {
    format!("{},{},{},{},{},{},{},{}", s.step, s.time, s.energy, s.residual, s.length, s.max_k, s.min_k, s.dt)
}

pub fn write_csv(path: &Path, samples: &[FlowSample]) -> Result<(), CliError> {
    let mut out = String::with_capacity(64 * (samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&csv_row(s));
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(SNAPSHOT_DIR).join(format!("step_{step:09}.json"))
}

struct Fit {
    theta_hat: Option<f64>,
    slope: Option<f64>,
    r_squared: Option<f64>,
    e_inf: Option<f64>,
    note: Option<String>,
}

fn fit(spec: &ScenarioSpec, traj: &FlowTrajectory) -> Fit {
    if !matches!(traj.outcome, Outcome::Converged | Outcome::MaxTimeReached) {
        return Fit { theta_hat: None, slope: None, r_squared: None, e_inf: None, note: Some(format!("no fit for outcome {:?}", traj.outcome)) };
    }
    let limit = match spec.energy_limit {
        EnergyLimitSpec::Final => EnergyLimit::Final,
        EnergyLimitSpec::Extrapolated => EnergyLimit::Extrapolated,
        EnergyLimitSpec::Analytic(e) => EnergyLimit::Analytic(e),
    };
    let e_inf = limit.resolve(&traj.samples);
    match e_inf.and_then(|e| lojasiewicz_fit(&traj.samples, e, spec.fit_window)) {
        Ok(f) => Fit { theta_hat: f.theta_hat, slope: Some(f.slope), r_squared: Some(f.r_squared), e_inf: Some(f.e_inf), note: None },
        Err(e) => Fit { theta_hat: None, slope: None, r_squared: None, e_inf: None, note: Some(e.to_string()) },
    }
}

/// Runs one scenario and writes its trajectory, snapshots and summary under
/// `root/<run name>`.
pub fn run_scenario(spec: &ScenarioSpec, root: &Path) -> Result<RunReport, CliError> {
    let dir = root.join(&spec.run_name);
    let snapshots = dir.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snapshots).map_err(|e| io_err(&snapshots, e))?;
    let curve = initial_curve(spec)?;
    if let Some(esc) = spec.flow.escape {
        let dim = curve.ambient().embedding_dim();
        if esc.coordinate >= dim {
            return Err(CliError::Config {
                path: dir,
                message: format!("flow.escape_coordinate {} exceeds the {dim} embedding coordinates", esc.coordinate),
            });
        }
    }

    let cadence = spec.snapshot_every.saturating_mul(spec.flow.sample_every);
    let mut write_error = None;
    let clock = Instant::now();
    let traj = flow::run_observed(curve, &spec.params, &spec.flow, |s| {
        let due = s.step == 0 || (cadence > 0 && s.step % cadence == 0);
        if due && write_error.is_none() {
            let path = snapshot_path(&dir, s.step);
            write_error = Snapshot::of(&s.curve, s.time).write(&path).err().map(|e| io_err(&path, e));
        }
    })
    .map_err(CliError::Numerical)?;
    let wall_time_s = clock.elapsed().as_secs_f64();
    if let Some(e) = write_error {
        return Err(e);
    }
    let last = &traj.final_state;
    let final_path = snapshot_path(&dir, last.step);
    Snapshot::of(&last.curve, last.time).write(&final_path).map_err(|e| io_err(&final_path, e))?;
    write_csv(&dir.join(TRAJECTORY_FILE), &traj.samples)?;

    let fit = fit(spec, &traj);
    let summary = Summary {
        outcome: traj.outcome,
        message: traj.message.clone(),
        steps: last.step,
        final_time: last.time,
        final_energy: last.energy,
        final_residual: last.residual,
        theta_hat: fit.theta_hat,
        slope: fit.slope,
        r_squared: fit.r_squared,
        e_inf: fit.e_inf,
        fit_note: fit.note,
        wall_time_s,
        config: spec.clone(),
    };
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| io_err(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(RunReport { dir, summary })
}
