//! Explicit time integration of `∂tγ = −grad E(γ)` for the discrete energy.

use serde::{Deserialize, Serialize};

use crate::ambient::Point;
use crate::curve::{weighted_pairing, DiscreteCurve};
use crate::discrete::{self, Evaluation};
use crate::energy::{ElasticParams, CURVATURE_FLOOR};
use crate::error::{Error, Result};
use crate::vector::Vector;

pub const MIN_DT: f64 = 1e-12;
pub const MAX_HALVINGS: u32 = 20;
/// Magnitude of the real stability boundary of classical RK4.
pub const RK4_REAL_BOUND: f64 = 2.785;
/// Damping of the Chebyshev stepper.
const CHEBYSHEV_DAMPING: f64 = 2.0 / 13.0;

/// Stops the flow once the node average of one embedding coordinate reaches `bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapePredicate {
    pub coordinate: usize,
    pub bound: f64,
}

impl EscapePredicate {
    pub fn fires(&self, curve: &DiscreteCurve) -> bool {
        mean_coordinate(curve, self.coordinate) >= self.bound
    }
}

pub fn mean_coordinate(curve: &DiscreteCurve, axis: usize) -> f64 {
    curve.points().iter().map(|p| p[axis]).sum::<f64>() / curve.len() as f64
}

/// Time integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stepper {
    /// Classical RK4 at the stable step.
    #[default]
    Rk4,
    /// Second-order Runge–Kutta–Chebyshev with `stages` stages. Its step is
    /// the RK4 step stretched by the ratio of the real stability boundaries.
    Chebyshev { stages: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dt_safety: f64,
    pub t_max: f64,
    pub reparam_every: usize,
    pub tol_residual: f64,
    pub escape: Option<EscapePredicate>,
    pub mono_tol: f64,
    pub sample_every: usize,
    pub stepper: Stepper,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt_safety: 0.4,
            t_max: 10.0,
            reparam_every: 10,
            tol_residual: 1e-4,
            escape: None,
            mono_tol: 1e-10,
            sample_every: 100,
            stepper: Stepper::Rk4,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt_safety", self.dt_safety)?;
        if self.dt_safety > 1.0 {
            return Err(Error::InvalidArgument(format!("dt_safety must be ≤ 1, got {}", self.dt_safety)));
        }
        positive("t_max", self.t_max)?;
        positive("tol_residual", self.tol_residual)?;
        positive("mono_tol", self.mono_tol)?;
        if self.reparam_every == 0 || self.sample_every == 0 {
            return Err(Error::InvalidArgument("reparam_every and sample_every must be ≥ 1".into()));
        }
        if let Stepper::Chebyshev { stages } = self.stepper {
            if !(2..=512).contains(&stages) {
                return Err(Error::InvalidArgument(format!("Chebyshev stages must be in 2..=512, got {stages}")));
            }
        }
        Ok(())
    }
}

/// A curve together with its discrete energy and gradient.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub step: usize,
    pub time: f64,
    pub curve: DiscreteCurve,
    pub energy: f64,
    pub residual: f64,
    pub dt_used: f64,
    /// Incremented by every reparametrization.
    pub reparam_epoch: u64,
    eval: Evaluation,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve, params: &ElasticParams) -> Result<Self> {
        params.validate()?;
        let (eval, residual) = evaluate_checked(&curve, params)?;
        Ok(FlowState {
            step: 0,
            time: 0.0,
            curve,
            energy: eval.energy,
            residual,
            dt_used: 0.0,
            reparam_epoch: 0,
            eval,
        })
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.eval
    }

    /// Gradient of the discrete energy; the velocity is its negative.
    pub fn gradient(&self) -> &[Vector] {
        &self.eval.gradient
    }

    /// Node weights `dsᵢ`.
    pub fn ds(&self) -> &[f64] {
        &self.eval.ds
    }

    /// `‖grad‖²_{L²(ds)}`
    pub fn velocity_sq(&self) -> f64 {
        weighted_pairing(self.curve.ambient(), &self.eval.gradient, &self.eval.gradient, &self.eval.ds)
    }

    pub fn sample(&self) -> FlowSample {
        FlowSample {
            step: self.step,
            time: self.time,
            energy: self.energy,
            residual: self.residual,
            length: self.eval.length,
            max_k: self.eval.max_k,
            min_k: self.eval.min_k,
            dt: self.dt_used,
            velocity_sq: self.velocity_sq(),
            reparam_epoch: self.reparam_epoch,
            constraint_residual: self.curve.constraint_residual(),
        }
    }

    fn successor(&self, curve: DiscreteCurve, params: &ElasticParams, dt: f64, reparam: bool) -> Result<FlowState> {
        let (curve, epoch) = if reparam {
            (curve.reparametrize_uniform()?, self.reparam_epoch + 1)
        } else {
            (curve, self.reparam_epoch)
        };
        let (eval, residual) = evaluate_checked(&curve, params)?;
        Ok(FlowState {
            step: self.step + 1,
            time: self.time + dt,
            curve,
            energy: eval.energy,
            residual,
            dt_used: dt,
            reparam_epoch: epoch,
            eval,
        })
    }
}

fn evaluate_checked(curve: &DiscreteCurve, params: &ElasticParams) -> Result<(Evaluation, f64)> {
    let eval = discrete::evaluate(curve, params)?;
    if params.p > 2.0 && eval.flat_nodes > 0 {
        return Err(Error::VanishingCurvature { nodes: eval.flat_nodes });
    }
    let residual = eval.residual(curve.ambient(), params);
    if !eval.energy.is_finite() || !residual.is_finite() {
        return Err(Error::StepFailure("non-finite energy or residual".into()));
    }
    Ok((eval, residual))
}

/// Scalar record of a flow state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub residual: f64,
    pub length: f64,
    pub max_k: f64,
    pub min_k: f64,
    pub dt: f64,
    pub velocity_sq: f64,
    pub reparam_epoch: u64,
    pub constraint_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Converged,
    Escaped,
    MaxTimeReached,
    StepFailure,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
    pub outcome: Outcome,
    pub message: Option<String>,
    pub final_state: FlowState,
}

/// `dt_safety · h⁴ / (1 + max|k|^{p−2})` with `h` the smallest node weight.
pub fn stable_dt(state: &FlowState, config: &FlowConfig, params: &ElasticParams) -> Result<f64> {
    let h = state.eval.ds.iter().cloned().fold(f64::INFINITY, f64::min);
    let kmax = state.eval.max_k;
    // a geodesic has no curvature stiffness, even for p = 2
    let stiff = if kmax < CURVATURE_FLOOR { 0.0 } else { kmax.powf(params.p - 2.0) };
    let dt = config.dt_safety * h.powi(4) / (1.0 + stiff);
    if !(dt >= MIN_DT) {
        return Err(Error::StepFailure(format!("stable time step {dt:.3e} below {MIN_DT:e}")));
    }
    Ok(dt)
}

/// Step the configured integrator takes before any halving.
pub fn macro_dt(state: &FlowState, config: &FlowConfig, params: &ElasticParams) -> Result<f64> {
    let dt = stable_dt(state, config, params)?;
    Ok(match config.stepper {
        Stepper::Rk4 => dt,
        Stepper::Chebyshev { stages } => dt * Chebyshev::new(stages).bound / RK4_REAL_BOUND,
    })
}

/// `retract(base + a · v)` nodewise.
fn advance(curve: &DiscreteCurve, base: &[Point], a: f64, v: &[Vector]) -> Result<DiscreteCurve> {
    let m = curve.ambient();
    let pts = base
        .iter()
        .zip(v)
        .map(|(p, d)| m.retract(&p.axpy(a, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteCurve::from_points_unchecked(m.clone(), pts))
}

fn gradient_at(curve: &DiscreteCurve, params: &ElasticParams) -> Result<Vec<Vector>> {
    Ok(discrete::evaluate(curve, params)?.gradient)
}

/// One classical Runge–Kutta step of size `dt`, retracting after every stage.
fn rk4(state: &FlowState, params: &ElasticParams, dt: f64) -> Result<DiscreteCurve> {
    let base = state.curve.points();
    let k1 = &state.eval.gradient;
    let y1 = advance(&state.curve, base, -0.5 * dt, k1)?;
    let k2 = gradient_at(&y1, params)?;
    let y2 = advance(&state.curve, base, -0.5 * dt, &k2)?;
    let k3 = gradient_at(&y2, params)?;
    let y3 = advance(&state.curve, base, -dt, &k3)?;
    let k4 = gradient_at(&y3, params)?;
    let combined: Vec<Vector> = (0..base.len())
        .map(|i| (k1[i] + k4[i] + (k2[i] + k3[i]).scale(2.0)).scale(1.0 / 6.0))
        .collect();
    advance(&state.curve, base, -dt, &combined)
}

/// Coefficients of the damped second-order Runge–Kutta–Chebyshev method.
#[derive(Clone, Debug)]
pub(crate) struct Chebyshev {
    /// `μ̃₁`
    first: f64,
    /// `(μⱼ, νⱼ, μ̃ⱼ, γ̃ⱼ)` for `j = 2..=s`
    rows: Vec<(f64, f64, f64, f64)>,
    /// length of the real stability interval
    pub bound: f64,
}

impl Chebyshev {
    pub(crate) fn new(s: usize) -> Self {
        let w0 = 1.0 + CHEBYSHEV_DAMPING / (s * s) as f64;
        let (mut t, mut t1, mut t2) = (vec![0.0; s + 1], vec![0.0; s + 1], vec![0.0; s + 1]);
        t[0] = 1.0;
        t[1] = w0;
        t1[1] = 1.0;
        for j in 2..=s {
            t[j] = 2.0 * w0 * t[j - 1] - t[j - 2];
            t1[j] = 2.0 * t[j - 1] + 2.0 * w0 * t1[j - 1] - t1[j - 2];
            t2[j] = 4.0 * t1[j - 1] + 2.0 * w0 * t2[j - 1] - t2[j - 2];
        }
        let w1 = t1[s] / t2[s];
        let mut b = vec![0.0; s + 1];
        for j in 2..=s {
            b[j] = t2[j] / (t1[j] * t1[j]);
        }
        b[0] = b[2];
        b[1] = b[2];
        let rows = (2..=s)
            .map(|j| {
                let mu = 2.0 * w0 * b[j] / b[j - 1];
                let nu = -b[j] / b[j - 2];
                let mu_t = 2.0 * w1 * b[j] / b[j - 1];
                let gamma_t = -(1.0 - b[j - 1] * t[j - 1]) * mu_t;
                (mu, nu, mu_t, gamma_t)
            })
            .collect();
        Chebyshev { first: b[1] * w1, rows, bound: (1.0 + w0) / w1 }
    }

    /// Applies the scheme to `y' = f(y)` on a vector space; used by tests
    /// and mirrored by [`chebyshev`].
    #[cfg(test)]
    fn apply_scalar(&self, y0: f64, dt: f64, f: impl Fn(f64) -> f64) -> f64 {
        let f0 = f(y0);
        let (mut prev, mut cur) = (y0, y0 + self.first * dt * f0);
        for &(mu, nu, mu_t, gamma_t) in &self.rows {
            let next = (1.0 - mu - nu) * y0 + mu * cur + nu * prev + mu_t * dt * f(cur) + gamma_t * dt * f0;
            prev = cur;
            cur = next;
        }
        cur
    }
}

/// One Chebyshev step of size `dt`, retracting after every stage.
fn chebyshev(state: &FlowState, params: &ElasticParams, dt: f64, coeffs: &Chebyshev) -> Result<DiscreteCurve> {
    let m = state.curve.ambient();
    let y0 = state.curve.points();
    let f0 = &state.eval.gradient;
    let mut prev = state.curve.clone();
    let mut cur = advance(&state.curve, y0, -coeffs.first * dt, f0)?;
    for &(mu, nu, mu_t, gamma_t) in &coeffs.rows {
        let f = gradient_at(&cur, params)?;
        let pts = (0..y0.len())
            .map(|i| {
                let q = y0[i].scale(1.0 - mu - nu).axpy(mu, &cur.points()[i]).axpy(nu, &prev.points()[i]);
                m.retract(&q.axpy(-mu_t * dt, &f[i]).axpy(-gamma_t * dt, &f0[i]))
            })
            .collect::<Result<Vec<_>>>()?;
        prev = std::mem::replace(&mut cur, DiscreteCurve::from_points_unchecked(m.clone(), pts));
    }
    Ok(cur)
}

fn rk4_state(state: &FlowState, params: &ElasticParams, dt: f64, reparam: bool) -> Result<FlowState> {
    state.successor(rk4(state, params, dt)?, params, dt, reparam)
}

/// Advances by one accepted step: the step is halved until the energy does
/// not rise by more than `mono_tol`.
pub fn step(state: &FlowState, params: &ElasticParams, config: &FlowConfig) -> Result<FlowState> {
    let mut dt = macro_dt(state, config, params)?;
    let remaining = config.t_max - state.time;
    if remaining > 0.0 && remaining < dt {
        dt = remaining;
    }
    let coeffs = match config.stepper {
        Stepper::Chebyshev { stages } => Some(Chebyshev::new(stages)),
        Stepper::Rk4 => None,
    };
    let reparam_due = (state.step + 1) % config.reparam_every == 0;
    let mut last_err = None;
    for _ in 0..=MAX_HALVINGS {
        let attempt = match &coeffs {
            None => rk4(state, params, dt),
            Some(c) => chebyshev(state, params, dt, c),
        }
        .and_then(|curve| state.successor(curve, params, dt, reparam_due));
        match attempt {
            Ok(next) if next.energy <= state.energy + config.mono_tol => return Ok(next),
            Ok(next) => {
                last_err = Some(Error::StepFailure(format!(
                    "energy rose by {:.3e} at dt = {dt:.3e}",
                    next.energy - state.energy
                )))
            }
            Err(e @ (Error::VanishingCurvature { .. } | Error::DomainExit { .. })) => return Err(e),
            Err(e) => last_err = Some(e),
        }
        dt *= 0.5;
    }
    let reason = last_err.map(|e| e.to_string()).unwrap_or_default();
    Err(Error::StepFailure(format!("no acceptable step after {MAX_HALVINGS} halvings: {reason}")))
}

/// Integrates until convergence, escape, the time horizon, or failure.
pub fn run(initial: DiscreteCurve, params: &ElasticParams, config: &FlowConfig) -> Result<FlowTrajectory> {
    run_observed(initial, params, config, |_| {})
}

/// As [`run`], calling `observer` on every accepted state (including the first).
pub fn run_observed(
    initial: DiscreteCurve,
    params: &ElasticParams,
    config: &FlowConfig,
    mut observer: impl FnMut(&FlowState),
) -> Result<FlowTrajectory> {
    config.validate()?;
    let mut state = FlowState::new(initial, params)?;
    observer(&state);
    let mut samples = vec![state.sample()];
    let terminal = |s: &FlowState| -> Option<Outcome> {
        if s.residual < config.tol_residual {
            Some(Outcome::Converged)
        } else if config.escape.map_or(false, |e| e.fires(&s.curve)) {
            Some(Outcome::Escaped)
        } else if s.time >= config.t_max {
            Some(Outcome::MaxTimeReached)
        } else {
            None
        }
    };
    let mut message = None;
    let outcome = loop {
        if let Some(o) = terminal(&state) {
            break o;
        }
        match step(&state, params, config) {
            Ok(next) => {
                state = next;
                observer(&state);
                if state.step % config.sample_every == 0 {
                    samples.push(state.sample());
                }
            }
            Err(e) => {
                message = Some(e.to_string());
                break Outcome::StepFailure;
            }
        }
    };
    if samples.last().map(|s| s.step) != Some(state.step) {
        samples.push(state.sample());
    }
    Ok(FlowTrajectory { samples, outcome, message, final_state: state })
}

/// `count` states spaced `stride` RK4 steps of size `dt` apart, without
/// reparametrization or monotonicity retries, starting with `start` itself.
pub fn dense_segment(
    start: &FlowState,
    params: &ElasticParams,
    dt: f64,
    stride: usize,
    count: usize,
) -> Result<Vec<FlowState>> {
    if !(dt > 0.0) || stride == 0 {
        return Err(Error::InvalidArgument(format!("need dt > 0 and stride ≥ 1, got {dt}, {stride}")));
    }
    let mut out = Vec::with_capacity(count);
    out.push(start.clone());
    let mut cur = start.clone();
    while out.len() < count {
        for _ in 0..stride {
            cur = rk4_state(&cur, params, dt, false)?;
        }
        out.push(cur.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::presets::*;
    use std::f64::consts::PI;

    fn mean_radius(c: &DiscreteCurve) -> f64 {
        c.points().iter().map(|p| p.norm()).sum::<f64>() / c.len() as f64
    }

    #[test]
    fn stable_dt_examples() {
        let p2 = ElasticParams::default();
        let cfg = FlowConfig::default();
        let s64 = FlowState::new(euclidean_circle(64, 1.0).unwrap(), &p2).unwrap();
        let dt64 = stable_dt(&s64, &cfg, &p2).unwrap();
        // ds from the wide chord of the unit circle
        let h = (2.0 * PI / 64.0).sin();
        assert!((dt64 - 0.4 * h.powi(4) / 2.0).abs() < 1e-15);
        assert!((dt64 - 1.86e-5).abs() < 0.02e-5);
        let s128 = FlowState::new(euclidean_circle(128, 1.0).unwrap(), &p2).unwrap();
        let ratio = dt64 / stable_dt(&s128, &cfg, &p2).unwrap();
        // h⁴ scaling: exactly 16 up to the O(N⁻²) chord defect of h
        let exact = ((2.0 * PI / 64.0).sin() / (2.0 * PI / 128.0).sin()).powi(4);
        assert!((ratio - exact).abs() < 1e-9);
        assert!((ratio - 16.0).abs() < 0.1);
        let eq = FlowState::new(sphere_equator(64).unwrap(), &p2).unwrap();
        let h = eq.ds().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((stable_dt(&eq, &cfg, &p2).unwrap() - 0.4 * h.powi(4)).abs() < 1e-18);
    }

    #[test]
    fn circles_move_toward_the_critical_radius() {
        let p2 = ElasticParams::default();
        let cfg = FlowConfig::default();
        let s = FlowState::new(euclidean_circle(64, 1.0).unwrap(), &p2).unwrap();
        let next = step(&s, &p2, &cfg).unwrap();
        assert!(mean_radius(&next.curve) < 1.0);
        assert!(next.energy < s.energy);
        let s = FlowState::new(euclidean_circle(64, 0.5).unwrap(), &p2).unwrap();
        let next = step(&s, &p2, &cfg).unwrap();
        assert!(mean_radius(&next.curve) > 0.5);
    }

    #[test]
    fn critical_circle_barely_moves() {
        let p2 = ElasticParams::default();
        let cfg = FlowConfig::default();
        let c = euclidean_circle(128, 0.5f64.sqrt()).unwrap();
        let s = FlowState::new(c.clone(), &p2).unwrap();
        let next = step(&s, &p2, &cfg).unwrap();
        let disp = c.points().iter().zip(next.curve.points()).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
        assert!(disp <= 20.0 / (128.0 * 128.0) * next.dt_used, "{disp}");
    }

    #[test]
    fn equator_converges_immediately() {
        let traj = run(sphere_equator(128).unwrap(), &ElasticParams::default(), &FlowConfig::default()).unwrap();
        assert_eq!(traj.outcome, Outcome::Converged);
        assert_eq!(traj.final_state.step, 0);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = FlowConfig::default();
        cfg.dt_safety = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = FlowConfig::default();
        cfg.reparam_every = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dense_segment_keeps_epoch() {
        let p2 = ElasticParams::default();
        let s = FlowState::new(euclidean_ellipse(32, 1.2, 0.8).unwrap(), &p2).unwrap();
        let seg = dense_segment(&s, &p2, 1e-6, 1, 3).unwrap();
        assert_eq!(seg.len(), 3);
        assert!(seg.iter().all(|x| x.reparam_epoch == 0));
        assert!((seg[2].time - 2e-6).abs() < 1e-18);
        let strided = dense_segment(&s, &p2, 1e-6, 2, 2).unwrap();
        assert_eq!(strided[1].curve.points(), seg[2].curve.points());
    }

    #[test]
    fn chebyshev_is_second_order_and_stable() {
        let c = Chebyshev::new(10);
        assert!((c.bound / 100.0 - 0.65).abs() < 0.02, "{}", c.bound);
        // accuracy on y' = −y
        let err = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut y = 1.0;
            for _ in 0..steps {
                y = c.apply_scalar(y, dt, |v| -v);
            }
            (y - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
        // damping across the whole real interval
        for frac in [0.1, 0.5, 0.9, 0.99] {
            let z = -frac * c.bound;
            assert!(c.apply_scalar(1.0, 1.0, |v| z * v).abs() <= 1.0, "{frac}");
        }
        assert!(c.apply_scalar(1.0, 1.0, |v| -1.1 * c.bound * v).abs() > 1.0);
    }

    #[test]
    fn chebyshev_flow_descends() {
        let p2 = ElasticParams::default();
        let cfg = FlowConfig { stepper: Stepper::Chebyshev { stages: 16 }, ..FlowConfig::default() };
        let mut s = FlowState::new(euclidean_ellipse(64, 1.5, 0.5).unwrap(), &p2).unwrap();
        let rk_dt = stable_dt(&s, &cfg, &p2).unwrap();
        for _ in 0..20 {
            let next = step(&s, &p2, &cfg).unwrap();
            assert!(next.energy < s.energy);
            assert!(next.dt_used > 30.0 * rk_dt);
            s = next;
        }
    }
}
