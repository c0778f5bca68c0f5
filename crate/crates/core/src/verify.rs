//! Finite-difference oracles and invariant checks, shared by the `verify`
//! command and the acceptance tests.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ambient::{AmbientKind, AmbientModel, ProfileFunction};
use crate::curve::{presets, weighted_norm, weighted_pairing, DiscreteCurve, Field};
use crate::diagnostics;
use crate::energy::{self, ElasticParams};
use crate::flow::{self, FlowConfig, FlowSample, Outcome};
use crate::error::Result;
use crate::vector::Vector;

/// Central-difference step for `ε ↦ E(exp(εψ))`.
pub const FD_STEP: f64 = 1e-4;
pub const FIELDS_PER_CURVE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    Euclidean,
    Sphere,
    Hyperbolic,
    Revolution,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Euclidean, Family::Sphere, Family::Hyperbolic, Family::Revolution];
}

/// A smooth closed curve that can be sampled at any resolution.
#[derive(Clone, Copy)]
pub struct OracleCurve {
    pub label: &'static str,
    pub build: fn(usize) -> Result<DiscreteCurve>,
}

fn inverse_profile() -> ProfileFunction {
    ProfileFunction::inverse(0.1).expect("valid profile")
}

fn planar(n: usize, radius: impl Fn(f64) -> f64) -> Result<DiscreteCurve> {
    DiscreteCurve::from_fn(AmbientModel::euclidean(2)?, n, |t| {
        let r = radius(t);
        Vector::new2(r * t.cos(), r * t.sin())
    })
}

/// Five analytic test curves per ambient family.
pub fn oracle_curves(family: Family) -> Vec<OracleCurve> {
    match family {
        Family::Euclidean => vec![
            OracleCurve { label: "ellipse 1.2/0.8", build: |n| presets::euclidean_ellipse(n, 1.2, 0.8) },
            OracleCurve { label: "circle 1 + mode 2", build: |n| presets::euclidean_circle(n, 1.0)?.perturb_normal(0.1, 2, 0) },
            OracleCurve { label: "limacon 1 + 0.2 cos", build: |n| planar(n, |t| 1.0 + 0.2 * t.cos()) },
            OracleCurve {
                label: "space curve in R3",
                build: |n| {
                    DiscreteCurve::from_fn(AmbientModel::euclidean(3)?, n, |t| {
                        Vector::new3(t.cos(), t.sin(), 0.2 * (2.0 * t).sin())
                    })
                },
            },
            OracleCurve { label: "circle 0.7 + mode 2", build: |n| presets::euclidean_circle(n, 0.7)?.perturb_normal(0.03, 2, 5) },
        ],
        Family::Sphere => vec![
            OracleCurve { label: "latitude 1.0", build: |n| presets::sphere_latitude(n, 1.0) },
            OracleCurve { label: "latitude 1.0 + mode 2", build: |n| presets::sphere_latitude(n, 1.0)?.perturb_normal(0.05, 2, 0) },
            OracleCurve { label: "latitude 0.8 + mode 2", build: |n| presets::sphere_latitude(n, 0.8)?.perturb_normal(0.05, 2, 1) },
            OracleCurve { label: "latitude 1.2 + mode 2", build: |n| presets::sphere_latitude(n, 1.2)?.perturb_normal(0.04, 2, 3) },
            OracleCurve { label: "latitude 0.5 + mode 2", build: |n| presets::sphere_latitude(n, 0.5)?.perturb_normal(0.04, 2, 2) },
        ],
        Family::Hyperbolic => vec![
            OracleCurve { label: "circle 0.8", build: |n| presets::hyperbolic_circle(n, 0.8) },
            OracleCurve { label: "circle 0.5 + mode 3", build: |n| presets::hyperbolic_circle(n, 0.5)?.perturb_normal(0.03, 3, 0) },
            OracleCurve { label: "circle 1.0 + mode 2", build: |n| presets::hyperbolic_circle(n, 1.0)?.perturb_normal(0.05, 2, 0) },
            OracleCurve { label: "circle 1.2", build: |n| presets::hyperbolic_circle(n, 1.2) },
            OracleCurve { label: "circle 0.6 + mode 2", build: |n| presets::hyperbolic_circle(n, 0.6)?.perturb_normal(0.03, 2, 0) },
        ],
        Family::Revolution => vec![
            OracleCurve { label: "latitude z=1", build: |n| presets::revolution_latitude(n, inverse_profile(), 1.0) },
            OracleCurve {
                label: "latitude z=2 + mode 2",
                build: |n| presets::revolution_latitude(n, inverse_profile(), 2.0)?.perturb_normal(0.05, 2, 0),
            },
            OracleCurve {
                label: "latitude z=0.5 + mode 3",
                build: |n| presets::revolution_latitude(n, inverse_profile(), 0.5)?.perturb_normal(0.02, 3, 0),
            },
            OracleCurve {
                label: "latitude z=1.5 + mode 2",
                build: |n| presets::revolution_latitude(n, inverse_profile(), 1.5)?.perturb_normal(0.08, 2, 4),
            },
            OracleCurve { label: "latitude z=10", build: |n| presets::revolution_latitude(n, inverse_profile(), 10.0) },
        ],
    }
}

/// Smooth random curve-normal field: along each normal direction a
/// trigonometric polynomial of degree 2 with coefficients uniform in (−1, 1).
/// The coefficients depend only on `seed`, so the same continuous field is
/// sampled at every resolution.
pub fn random_normal_field(curve: &DiscreteCurve, seed: u64) -> Result<Field> {
    let nu = curve.normal_frame()?;
    let mut frames = vec![nu.clone()];
    if curve.ambient().manifold_dim() == 3 {
        let tau = curve.unit_tangent()?;
        frames.push(tau.values.iter().zip(&nu).map(|(t, v)| t.cross(v)).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<[(f64, f64); 3]> = frames
        .iter()
        .map(|_| std::array::from_fn(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let n = curve.len();
    let dim = curve.ambient().embedding_dim();
    let values = (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            frames.iter().zip(&coeffs).fold(Vector::zeros(dim), |acc, (frame, c)| {
                let f: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(m, (a, b))| a * (TAU * m as f64 * x).cos() + b * (TAU * m as f64 * x).sin())
                    .sum();
                acc.axpy(f, &frame[i])
            })
        })
        .collect();
    Ok(Field::new(values))
}

/// `(E(exp(εψ)) − E(exp(−εψ)))/(2ε)`.
pub fn energy_derivative(curve: &DiscreteCurve, params: &ElasticParams, psi: &Field, eps: f64) -> Result<f64> {
    let plus = energy::energy(&curve.exp_field(&psi.scaled(eps))?, params)?;
    let minus = energy::energy(&curve.exp_field(&psi.scaled(-eps))?, params)?;
    Ok((plus - minus) / (2.0 * eps))
}

/// `|fd − δE[ψ]| / (‖grad‖ ‖ψ‖)` with both norms in L²(ds). The
/// Cauchy–Schwarz scale keeps the error meaningful when `δE[ψ]` happens
/// to be small.
pub fn variation_error(curve: &DiscreteCurve, params: &ElasticParams, psi: &Field) -> Result<f64> {
    let fd = energy_derivative(curve, params, psi, FD_STEP)?;
    let fv = energy::first_variation(curve, params, psi)?;
    let geom = curve.geometry()?;
    let m = curve.ambient();
    let grad = energy::gradient_field(curve, params)?;
    let scale = weighted_norm(m, &grad.values, &geom.ds, 2.0) * weighted_norm(m, &psi.values, &geom.ds, 2.0);
    Ok((fd - fv).abs() / scale)
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleCase {
    pub family: Family,
    pub p: f64,
    pub curve: &'static str,
    pub resolutions: Vec<usize>,
    /// `errors[r][f]`: field `f` at resolution `r`
    pub errors: Vec<Vec<f64>>,
}

impl OracleCase {
    pub fn max_error_at_finest(&self) -> f64 {
        self.errors.last().map_or(f64::NAN, |e| e.iter().cloned().fold(0.0, f64::max))
    }

    /// Ratio of root-mean-square errors between the two finest resolutions.
    pub fn convergence_ratio(&self) -> f64 {
        let rms = |e: &[f64]| (e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sqrt();
        let r = self.errors.len();
        if r < 2 {
            return f64::NAN;
        }
        rms(&self.errors[r - 2]) / rms(&self.errors[r - 1])
    }
}

pub fn variation_case(family: Family, p: f64, curve: OracleCurve, resolutions: &[usize]) -> Result<OracleCase> {
    let params = ElasticParams::new(p, 1.0)?;
    let errors = resolutions
        .iter()
        .map(|&n| {
            let c = (curve.build)(n)?;
            (0..FIELDS_PER_CURVE as u64)
                .map(|seed| variation_error(&c, &params, &random_normal_field(&c, 1000 + seed)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleCase { family, p, curve: curve.label, resolutions: resolutions.to_vec(), errors })
}

/// Every family, `p ∈ {2, 3}`, five curves, five fields.
pub fn variation_suite(resolutions: &[usize]) -> Result<Vec<OracleCase>> {
    let mut cases = Vec::new();
    for family in Family::ALL {
        for p in [2.0, 3.0] {
            for curve in oracle_curves(family) {
                cases.push(variation_case(family, p, curve, resolutions)?);
            }
        }
    }
    Ok(cases)
}

/// Second difference `(E(exp(εφ)) − 2E + E(exp(−εφ)))/ε²`.
pub fn energy_second_derivative(curve: &DiscreteCurve, params: &ElasticParams, phi: &Field, eps: f64) -> Result<f64> {
    let plus = energy::energy(&curve.exp_field(&phi.scaled(eps))?, params)?;
    let mid = energy::energy(curve, params)?;
    let minus = energy::energy(&curve.exp_field(&phi.scaled(-eps))?, params)?;
    Ok((plus - 2.0 * mid + minus) / (eps * eps))
}

/// `cos(2π mode x) ν`, a smooth normal field on a planar or surface curve.
pub fn harmonic_normal_field(curve: &DiscreteCurve, mode: u32) -> Result<Field> {
    let n = curve.len();
    let nu = curve.normal_frame()?;
    Ok(Field::new(
        nu.iter()
            .enumerate()
            .map(|(i, v)| v.scale((2.0 * PI * mode as f64 * i as f64 / n as f64).cos()))
            .collect(),
    ))
}

/// One named pass/fail result of the property suite.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check { name: name.into(), passed: value <= limit, detail: format!("{value:.3e} (limit {limit:.3e})") }
    }

    fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Check {
        Check {
            name: name.into(),
            passed: (value - target).abs() <= tol,
            detail: format!("{value:.4} (target {target} ± {tol})"),
        }
    }

    fn holds(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    /// `err(N) ≤ C·N⁻²` at `N = 2·CHECK_N` and `err(N/2)/err(N) = 4 ± 0.5`.
    fn second_order(name: impl Into<String>, err: impl Fn(usize) -> Result<f64>) -> Result<Check> {
        let n = 2 * CHECK_N;
        let (coarse, fine) = (err(CHECK_N)?, err(n)?);
        let scaled = fine * (n * n) as f64;
        let ratio = coarse / fine;
        Ok(Check {
            name: name.into(),
            passed: scaled <= SECOND_ORDER_CONSTANT && (ratio - 4.0).abs() <= 0.5,
            detail: format!("N²·err {scaled:.2} (limit {SECOND_ORDER_CONSTANT}), ratio {ratio:.3}"),
        })
    }
}

/// Random points per ambient in the ambient checks.
pub const AMBIENT_SAMPLES: usize = 32;
/// Node count of the curve-level checks.
pub const CHECK_N: usize = 128;
/// Pinned `C` in the `C·N⁻²` bounds below.
pub const SECOND_ORDER_CONSTANT: f64 = 500.0;

fn random_point(m: &AmbientModel, rng: &mut ChaCha8Rng) -> Vector {
    let a = rng.gen_range(0.0..TAU);
    match m.kind() {
        AmbientKind::Euclidean { .. } => {
            Vector::new3(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
        }
        AmbientKind::Sphere2 => {
            let b: f64 = rng.gen_range(0.0..PI);
            Vector::new3(a.cos() * b.sin(), a.sin() * b.sin(), b.cos())
        }
        AmbientKind::Hyperbolic2 => {
            let rho: f64 = rng.gen_range(0.0..1.5);
            Vector::new3(rho.sinh() * a.cos(), rho.sinh() * a.sin(), rho.cosh())
        }
        AmbientKind::Revolution(prof) => {
            let z = rng.gen_range(1.0..10.0);
            let f = prof.value(z);
            Vector::new3(f * a.cos(), f * a.sin(), z)
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vector {
    Vector::new3(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Projection, curvature-tensor symmetries and exp landing on every ambient.
pub fn ambient_checks() -> Result<Vec<Check>> {
    let models = [AmbientModel::euclidean(3)?, AmbientModel::sphere(), AmbientModel::hyperbolic(), AmbientModel::revolution(inverse_profile())];
    let mut out = Vec::new();
    for m in &models {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut idem, mut normal, mut anti, mut bianchi, mut pair, mut landing) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..AMBIENT_SAMPLES {
            let p = random_point(m, &mut rng);
            let v = random_vector(&mut rng);
            let pv = m.project(&p, &v);
            idem = idem.max((m.project(&p, &pv) - pv).norm());
            if let Some(nu) = m.unit_normal(&p) {
                normal = normal.max(m.form(&pv, &nu).abs());
            }
            let [x, y, z, w] = std::array::from_fn(|_| m.project(&p, &random_vector(&mut rng)));
            let r = |a: &Vector, b: &Vector, c: &Vector| m.riemann_unchecked(&p, a, b, c);
            anti = anti.max((r(&x, &y, &z) + r(&y, &x, &z)).norm());
            bianchi = bianchi.max((r(&x, &y, &z) + r(&y, &z, &x) + r(&z, &x, &y)).norm());
            pair = pair.max((m.form(&r(&z, &w, &y), &x) - m.form(&r(&x, &y, &w), &z)).abs());
            let q = m.exp_map(&p, &pv.scale(0.5))?;
            landing = landing.max(m.constraint_residual(&q).abs());
        }
        let name = m.name();
        let landing_limit = if matches!(m.kind(), AmbientKind::Revolution(_)) { 1e-8 } else { 1e-10 };
        out.push(Check::at_most(format!("{name}: projection idempotent"), idem, 1e-12));
        out.push(Check::at_most(format!("{name}: projection normal to the surface"), normal, 1e-12));
        out.push(Check::at_most(format!("{name}: R(X,Y)Z = −R(Y,X)Z"), anti, 0.0));
        out.push(Check::at_most(format!("{name}: first Bianchi identity"), bianchi, 1e-12));
        out.push(Check::at_most(format!("{name}: pair symmetry"), pair, 1e-12));
        out.push(Check::at_most(format!("{name}: exp lands on the manifold"), landing, landing_limit));
    }
    Ok(out)
}

fn uneven_ellipse(n: usize) -> Result<DiscreteCurve> {
    DiscreteCurve::from_fn(AmbientModel::euclidean(2)?, n, |x| {
        let t = x + 0.3 * x.sin();
        Vector::new2(1.2 * t.cos(), 0.8 * t.sin())
    })
}

/// Nodewise `| |kᵢ| − |k(tᵢ)| |` on the ellipse `(a cos t, b sin t)`.
fn ellipse_curvature_error(n: usize) -> Result<f64> {
    let (a, b) = (1.5, 0.5);
    let c = presets::euclidean_ellipse(n, a, b)?;
    let k = c.curvature()?;
    Ok(k.values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let t = TAU * i as f64 / n as f64;
            let exact = a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5);
            (v.norm() - exact).abs()
        })
        .fold(0.0, f64::max))
}

/// Integration by parts, stencil order and norm invariances.
pub fn curve_checks() -> Result<Vec<Check>> {
    let n = CHECK_N;
    let h2 = SECOND_ORDER_CONSTANT / (n * n) as f64;
    let mut out = Vec::new();
    for (label, curve) in [
        ("ellipse", presets::euclidean_ellipse(n, 1.5, 0.5)?),
        ("sphere", presets::sphere_latitude(n, 1.0)?.perturb_normal(0.05, 2, 0)?),
        ("hyperbolic", presets::hyperbolic_circle(n, 0.8)?.perturb_normal(0.05, 3, 0)?),
    ] {
        let geom = curve.geometry()?;
        let m = curve.ambient();
        let phi = random_normal_field(&curve, 11)?.values;
        let psi = random_normal_field(&curve, 12)?.values;
        let lhs = weighted_pairing(m, &curve.nabla_once(&geom, &phi), &psi, &geom.ds)
            + weighted_pairing(m, &phi, &curve.nabla_once(&geom, &psi), &geom.ds);
        let scale = weighted_norm(m, &phi, &geom.ds, 2.0) * weighted_norm(m, &psi, &geom.ds, 2.0);
        out.push(Check::at_most(format!("integration by parts on {label}"), lhs.abs() / scale, 1.0 / n as f64));
    }
    let ratio = ellipse_curvature_error(n / 2)? / ellipse_curvature_error(n)?;
    out.push(Check::within("curvature converges at order 2", ratio, 4.0, 0.5));
    out.push(Check::second_order("sum norm invariant under reparametrization", |n| {
        let uneven = uneven_ellipse(n)?;
        let (a, b) = (uneven.sum_norm(2, 2.0)?, uneven.reparametrize_uniform()?.sum_norm(2, 2.0)?);
        Ok((a - b).abs() / a)
    })?);
    let mut dilation = 0.0f64;
    for c in [2.0, 5.0] {
        for j in 0..3 {
            let a = presets::euclidean_circle(n, 1.0)?.scale_invariant_norm(j, 2.0)?;
            let b = presets::euclidean_circle(n, c)?.scale_invariant_norm(j, 2.0)?;
            dilation = dilation.max((a - b).abs());
        }
    }
    out.push(Check::at_most("scale-invariant norms under dilation", dilation, h2));
    Ok(out)
}

fn critical_circle(n: usize) -> Result<DiscreteCurve> {
    presets::euclidean_circle(n, std::f64::consts::FRAC_1_SQRT_2)
}

/// Gradient, first and second variation identities.
pub fn energy_checks() -> Result<Vec<Check>> {
    let n = CHECK_N;
    let h2 = SECOND_ORDER_CONSTANT / (n * n) as f64;
    let p2 = ElasticParams::default();
    let mut out = Vec::new();

    let mut gap = 0.0f64;
    for curve in [
        presets::euclidean_ellipse(n, 1.5, 0.5)?,
        presets::sphere_latitude(n, 1.0)?,
        presets::hyperbolic_circle(n, 0.8)?.perturb_normal(0.05, 3, 0)?,
        presets::revolution_latitude(n, inverse_profile(), 2.0)?.perturb_normal(0.05, 2, 0)?,
    ] {
        let a = energy::gradient_field(&curve, &ElasticParams::new(2.0, 0.7)?)?;
        let b = energy::gradient_field_p2(&curve, 0.7)?;
        let scale = b.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        gap = gap.max(a.values.iter().zip(&b.values).map(|(x, y)| (*x - *y).norm()).fold(0.0, f64::max) / scale);
    }
    out.push(Check::at_most("p = 2 gradient matches the p = 2 code path", gap, 1e-12));

    let ellipse = presets::euclidean_ellipse(n, 1.5, 0.5)?;
    let geom = ellipse.geometry()?;
    let mut weak = 0.0f64;
    for seed in 0..3 {
        let psi = random_normal_field(&ellipse, 20 + seed)?;
        let fv = energy::first_variation(&ellipse, &p2, &psi)?;
        let sp = energy::strong_pairing(&ellipse, &p2, &psi)?;
        weak = weak.max((fv - sp).abs() / weighted_norm(ellipse.ambient(), &psi.values, &geom.ds, 2.0));
    }
    out.push(Check::at_most("weak and strong first variation agree", weak, 10.0 / n as f64));

    out.push(Check::second_order("energy invariant under reparametrization", |n| {
        let uneven = uneven_ellipse(n)?;
        let (e0, e1) = (energy::energy(&uneven, &p2)?, energy::energy(&uneven.reparametrize_uniform()?, &p2)?);
        Ok((e0 - e1).abs() / e0)
    })?);

    let circle = critical_circle(n)?;
    for mode in [1, 2] {
        let phi = harmonic_normal_field(&circle, mode)?;
        let sv = energy::second_variation(&circle, &p2, &phi, &phi)?;
        let fd = energy_second_derivative(&circle, &p2, &phi, 1e-3)?;
        let limit = (1e-3 * sv.abs()).max(h2);
        out.push(Check::at_most(format!("second variation matches finite differences, mode {mode}"), (sv - fd).abs(), limit));
    }

    out.push(Check::second_order("translations lie in the kernel at the critical circle", |n| {
        let circle = critical_circle(n)?;
        let geom = circle.geometry()?;
        let mut kernel = 0.0f64;
        for v in [Vector::new2(1.0, 0.0), Vector::new2(0.0, 1.0)] {
            let phi = Field::new((0..n).map(|i| circle.normal_part(&geom, i, &v)).collect());
            for mode in 0..4 {
                let psi = harmonic_normal_field(&circle, mode)?;
                let l = energy::second_variation(&circle, &p2, &phi, &psi)?;
                kernel = kernel.max(l.abs() / weighted_norm(circle.ambient(), &psi.values, &geom.ds, 2.0));
            }
        }
        Ok(kernel)
    })?);

    let equator = presets::sphere_equator(n)?;
    let mut asym = 0.0f64;
    for seed in 0..3 {
        let phi = random_normal_field(&equator, 30 + 2 * seed)?;
        let psi = random_normal_field(&equator, 31 + 2 * seed)?;
        let ab = energy::second_variation(&equator, &p2, &phi, &psi)?;
        let ba = energy::second_variation(&equator, &p2, &psi, &phi)?;
        let scale = (energy::second_variation(&equator, &p2, &phi, &phi)?.abs()
            * energy::second_variation(&equator, &p2, &psi, &psi)?.abs())
        .sqrt()
        .max(1.0);
        asym = asym.max((ab - ba).abs() / scale);
    }
    out.push(Check::at_most("second variation is symmetric on the equator", asym, 1e-8));
    Ok(out)
}

/// Short flows on coarse curves.
pub fn flow_checks() -> Result<Vec<Check>> {
    let p2 = ElasticParams::default();
    let mut out = Vec::new();

    let ellipse = presets::euclidean_ellipse(32, 1.2, 0.8)?;
    let dense = FlowConfig { t_max: 0.05, sample_every: 1, reparam_every: 1_000_000, ..FlowConfig::default() };
    let traj = flow::run(ellipse.clone(), &p2, &dense)?;
    let rise = traj.samples.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max);
    out.push(Check::at_most("energy is monotone", rise, dense.mono_tol));
    let dissipation = traj
        .samples
        .windows(2)
        .map(|w| {
            let rate = (w[1].energy - w[0].energy) / (w[1].time - w[0].time);
            let v2 = 0.5 * (w[0].velocity_sq + w[1].velocity_sq);
            (rate + v2).abs() / v2
        })
        .fold(0.0, f64::max);
    out.push(Check::at_most("dissipation identity", dissipation, 0.1));

    let mut drift = 0.0f64;
    for curve in [
        presets::sphere_latitude(32, 1.0)?.perturb_normal(0.05, 2, 0)?,
        presets::hyperbolic_circle(32, 0.8)?.perturb_normal(0.05, 3, 0)?,
        presets::revolution_latitude(32, inverse_profile(), 2.0)?.perturb_normal(0.05, 2, 0)?,
    ] {
        let cfg = FlowConfig { t_max: 0.05, sample_every: 10, reparam_every: 5, ..FlowConfig::default() };
        let t = flow::run(curve, &p2, &cfg)?;
        drift = drift.max(t.samples.iter().map(|s| s.constraint_residual.abs()).fold(0.0, f64::max));
    }
    out.push(Check::at_most("manifold constraint preserved", drift, 1e-8));

    let converge = |reparam_every| {
        let cfg = FlowConfig { t_max: 20.0, reparam_every, tol_residual: 1e-4, ..FlowConfig::default() };
        flow::run(ellipse.clone(), &p2, &cfg)
    };
    let (a, b) = (converge(5)?, converge(10)?);
    let both = a.outcome == Outcome::Converged && b.outcome == Outcome::Converged;
    let gap = (a.final_state.energy - b.final_state.energy).abs();
    out.push(Check::holds(
        "reparametrization transparency",
        both && gap <= 1e-3,
        format!("{:?}/{:?}, energy gap {gap:.3e} (limit 1.000e-3)", a.outcome, b.outcome),
    ));

    let again = flow::run(ellipse, &p2, &dense)?;
    let identical = again.samples == traj.samples && again.final_state.curve.points() == traj.final_state.curve.points();
    out.push(Check::holds("determinism", identical, format!("{} samples compared", traj.samples.len())));
    Ok(out)
}

fn synthetic_power_law(power: f64) -> Vec<FlowSample> {
    (0..40)
        .map(|j| {
            let r = (-0.2 * j as f64).exp();
            FlowSample {
                step: j,
                time: j as f64,
                energy: r.powf(power),
                residual: r,
                length: 1.0,
                max_k: 1.0,
                min_k: 1.0,
                dt: 1.0,
                velocity_sq: r * r,
                reparam_epoch: 0,
                constraint_residual: 0.0,
            }
        })
        .collect()
}

/// Exponent fits on planted data and norm-report invariance.
pub fn diagnostics_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for power in [1.5, 2.0, 3.0] {
        let fit = diagnostics::lojasiewicz_fit(&synthetic_power_law(power), 0.0, 0.5)?;
        out.push(Check::holds(
            format!("fit recovers planted slope {power}"),
            (fit.slope - power).abs() <= 1e-9 && fit.r_squared >= 1.0 - 1e-12,
            format!("slope {:.12}, r² {:.12}", fit.slope, fit.r_squared),
        ));
    }
    out.push(Check::second_order("norm report invariant under reparametrization", |n| {
        let uneven = uneven_ellipse(n)?;
        let a = diagnostics::norm_report(&uneven, 2, &[2.0, 4.0])?;
        let b = diagnostics::norm_report(&uneven.reparametrize_uniform()?, 2, &[2.0, 4.0])?;
        Ok(a.values
            .iter()
            .flatten()
            .zip(b.values.iter().flatten())
            .map(|(x, y)| (x - y).abs() / x.abs())
            .fold(0.0, f64::max))
    })?);
    Ok(out)
}

/// Every invariant check, in module order.
pub fn property_suite() -> Result<Vec<Check>> {
    let mut out = ambient_checks()?;
    out.extend(curve_checks()?);
    out.extend(energy_checks()?);
    out.extend(flow_checks()?);
    out.extend(diagnostics_checks()?);
    Ok(out)
}
