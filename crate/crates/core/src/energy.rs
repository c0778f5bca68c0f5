//! The p-elastic energy `E(γ) = ∫ λ + |k|^p/p ds`, its gradient, and its
//! first and second variations.

use serde::{Deserialize, Serialize};

use crate::ambient::AmbientModel;
use crate::curve::{weighted_norm, CurveGeometry, DiscreteCurve, Field};
use crate::error::{Error, Result};
use crate::vector::Vector;

/// Lower clamp for `|k|` inside `|k|^{p−2}` and `|k|^{p−4}` when `p > 2`.
pub const CURVATURE_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    pub p: f64,
    pub lambda: f64,
}

impl Default for ElasticParams {
    fn default() -> Self {
        ElasticParams { p: 2.0, lambda: 1.0 }
    }
}

impl ElasticParams {
    pub fn new(p: f64, lambda: f64) -> Result<Self> {
        let params = ElasticParams { p, lambda };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return Err(Error::InvalidArgument(format!("p must be ≥ 2, got {}", self.p)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be > 0, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Conjugate exponent `p′ = p/(p−1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `1/p′ = 1 − 1/p`.
    pub fn inv_p_conj(&self) -> f64 {
        1.0 - 1.0 / self.p
    }
}

/// Per-node curvature quantities shared by the variations.
pub(crate) struct CurvatureTerms {
    /// `|k|` (unclamped)
    pub norm: Vec<f64>,
    /// `|k|^{p−2}`
    pub w: Vec<f64>,
    /// `|k|^{p−4}`, only meaningful for `p ≠ 2`
    pub w4: Vec<f64>,
    /// `|k|^{p−2} k`
    pub a: Vec<Vector>,
}

impl CurvatureTerms {
    pub fn new(m: &AmbientModel, geom: &CurveGeometry, params: &ElasticParams) -> Result<Self> {
        let n = geom.curvature.len();
        let mut norm = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        let mut w4 = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        let exact_square = params.p == 2.0;
        let mut clamped = 0;
        for k in &geom.curvature {
            let kn = m.form_norm(k);
            norm.push(kn);
            if exact_square {
                w.push(1.0);
                w4.push(0.0);
                a.push(*k);
            } else {
                if kn < CURVATURE_FLOOR {
                    clamped += 1;
                }
                let kc = kn.max(CURVATURE_FLOOR);
                let wi = kc.powf(params.p - 2.0);
                w.push(wi);
                w4.push(wi / (kc * kc));
                a.push(k.scale(wi));
            }
        }
        if clamped > 0 {
            return Err(Error::VanishingCurvature { nodes: clamped });
        }
        Ok(CurvatureTerms { norm, w, w4, a })
    }

    /// `|k|^p`
    #[inline]
    pub fn kp(&self, i: usize) -> f64 {
        self.w[i] * self.norm[i] * self.norm[i]
    }
}

/// `Σ (λ + |kᵢ|^p/p) dsᵢ` from cached geometry.
pub(crate) fn energy_with(m: &AmbientModel, geom: &CurveGeometry, params: &ElasticParams) -> f64 {
    geom.curvature
        .iter()
        .zip(&geom.ds)
        .map(|(k, ds)| {
            let kn = m.form_norm(k);
            let bend = if params.p == 2.0 { 0.5 * kn * kn } else { kn.powf(params.p) / params.p };
            (params.lambda + bend) * ds
        })
        .sum()
}

pub fn energy(curve: &DiscreteCurve, params: &ElasticParams) -> Result<f64> {
    params.validate()?;
    let geom = curve.geometry()?;
    Ok(energy_with(curve.ambient(), &geom, params))
}

/// `(1/p′)|k|^p k − λk + R(|k|^{p−2}k, τ)τ`, the zeroth-order part of the gradient.
fn lower_order(
    curve: &DiscreteCurve,
    geom: &CurveGeometry,
    terms: &CurvatureTerms,
    params: &ElasticParams,
    i: usize,
) -> Vector {
    let m = curve.ambient();
    let (p, k, t) = (&curve.points()[i], &geom.curvature[i], &geom.tangent[i]);
    k.scale(params.inv_p_conj() * terms.kp(i) - params.lambda)
        + m.riemann_unchecked(p, &terms.a[i], t, t)
}

pub(crate) fn gradient_with(
    curve: &DiscreteCurve,
    geom: &CurveGeometry,
    params: &ElasticParams,
) -> Result<Vec<Vector>> {
    let terms = CurvatureTerms::new(curve.ambient(), geom, params)?;
    let lap = curve.nabla_twice(geom, &terms.a);
    Ok((0..curve.len()).map(|i| lap[i] + lower_order(curve, geom, &terms, params, i)).collect())
}

/// `∇²(|k|^{p−2}k) + (1/p′)|k|^p k − λk + R(|k|^{p−2}k, τ)τ`.
/// The flow velocity is its negative.
pub fn gradient_field(curve: &DiscreteCurve, params: &ElasticParams) -> Result<Field> {
    params.validate()?;
    let geom = curve.geometry()?;
    Ok(Field::normal(gradient_with(curve, &geom, params)?))
}

/// `∇²k + ½|k|²k − λk + R(k,τ)τ`, coded without the general-`p` machinery.
pub fn gradient_field_p2(curve: &DiscreteCurve, lambda: f64) -> Result<Field> {
    let geom = curve.geometry()?;
    let m = curve.ambient();
    let lap = curve.nabla_twice(&geom, &geom.curvature);
    let values = (0..curve.len())
        .map(|i| {
            let (p, k, t) = (&curve.points()[i], &geom.curvature[i], &geom.tangent[i]);
            let k2 = m.form(k, k);
            lap[i] + k.scale(0.5 * k2 - lambda) + m.riemann_unchecked(p, k, t, t)
        })
        .collect();
    Ok(Field::normal(values))
}

/// `‖grad‖_{L^{p′}(ds)}`.
pub fn residual(curve: &DiscreteCurve, params: &ElasticParams) -> Result<f64> {
    params.validate()?;
    let geom = curve.geometry()?;
    let grad = gradient_with(curve, &geom, params)?;
    Ok(residual_with(curve.ambient(), &geom, &grad, params))
}

pub(crate) fn residual_with(m: &AmbientModel, geom: &CurveGeometry, grad: &[Vector], params: &ElasticParams) -> f64 {
    weighted_norm(m, grad, &geom.ds, params.p_conj())
}

fn check_len(curve: &DiscreteCurve, field: &Field) -> Result<()> {
    if field.len() != curve.len() {
        return Err(Error::InvalidField(format!(
            "field has {} values, curve has {} nodes",
            field.len(),
            curve.len()
        )));
    }
    Ok(())
}

/// Weak form `∫ −⟨∇(|k|^{p−2}k), ∇ψ^⊥⟩ + ⟨(1/p′)|k|^p k − λk + R(|k|^{p−2}k,τ)τ, ψ^⊥⟩ ds`.
pub fn first_variation(curve: &DiscreteCurve, params: &ElasticParams, psi: &Field) -> Result<f64> {
    params.validate()?;
    check_len(curve, psi)?;
    if !curve.check_ambient_tangent(psi) {
        return Err(Error::InvalidField("variation field must be tangent to the ambient".into()));
    }
    let geom = curve.geometry()?;
    let m = curve.ambient();
    let terms = CurvatureTerms::new(m, &geom, params)?;
    let psi_n: Vec<Vector> = (0..curve.len()).map(|i| curve.normal_part(&geom, i, &psi.values[i])).collect();
    let lower: f64 = (0..curve.len())
        .map(|i| m.form(&lower_order(curve, &geom, &terms, params, i), &psi_n[i]) * geom.ds[i])
        .sum();
    Ok(lower - curve.dirichlet_pairing(&geom, &terms.a, &psi_n))
}

/// `∫ ⟨grad, ψ^⊥⟩ ds`.
pub fn strong_pairing(curve: &DiscreteCurve, params: &ElasticParams, psi: &Field) -> Result<f64> {
    check_len(curve, psi)?;
    let geom = curve.geometry()?;
    let grad = gradient_with(curve, &geom, params)?;
    let m = curve.ambient();
    Ok((0..curve.len())
        .map(|i| m.form(&grad[i], &curve.normal_part(&geom, i, &psi.values[i])) * geom.ds[i])
        .sum())
}

/// Second variation `𝓛(φ)[ψ]` for curve-normal fields.
///
/// Every integral term is transcribed literally. The block coming from the
/// variation of `|k|^p k` carries the `1/p′` of the gradient it differentiates.
pub fn second_variation(curve: &DiscreteCurve, params: &ElasticParams, phi: &Field, psi: &Field) -> Result<f64> {
    second_variation_with_factor(curve, params, phi, psi, params.inv_p_conj())
}

/// As [`second_variation`] with an explicit coefficient `c` on the
/// `|k|^p ∇²φ + p|k|^{p−2}⟨∇²φ,k⟩k + … + (p+1)|k|^p⟨φ,k⟩k` block.
pub fn second_variation_with_factor(
    curve: &DiscreteCurve,
    params: &ElasticParams,
    phi: &Field,
    psi: &Field,
    c: f64,
) -> Result<f64> {
    params.validate()?;
    check_len(curve, phi)?;
    check_len(curve, psi)?;
    let geom = curve.geometry()?;
    if !curve.check_curve_normal(&geom, phi) || !curve.check_curve_normal(&geom, psi) {
        return Err(Error::InvalidField("second variation expects curve-normal fields".into()));
    }
    let m = curve.ambient();
    let n = curve.len();
    let p = params.p;
    let lambda = params.lambda;
    let t = CurvatureTerms::new(m, &geom, params)?;
    let (phi, psi) = (&phi.values, &psi.values);
    let k = &geom.curvature;
    let tau = &geom.tangent;
    let pts = curve.points();

    let d1 = |f: &[Vector]| curve.nabla_once(&geom, f);
    let d2 = |f: &[Vector]| curve.nabla_twice(&geom, f);
    let dphi = d1(phi);
    let dpsi = d1(psi);
    let d2phi = d2(phi);
    let d2psi = d2(psi);
    let da = d1(&t.a);
    let kphi: Vec<f64> = (0..n).map(|i| m.form(&k[i], &phi[i])).collect();
    // ∇(⟨φ,k⟩|k|^{p−2}k)
    let d_kphi_a = d1(&(0..n).map(|i| t.a[i].scale(kphi[i])).collect::<Vec<_>>());
    // ∇(|k|^p ∇φ)
    let d_kp_dphi = d1(&(0..n).map(|i| dphi[i].scale(t.kp(i))).collect::<Vec<_>>());
    // ∇(⟨|k|^{p−2}k, ∇φ⟩k)
    let d_adphi_k = d1(&(0..n).map(|i| k[i].scale(m.form(&t.a[i], &dphi[i]))).collect::<Vec<_>>());

    let mut total = 0.0;
    for i in 0..n {
        let (x, ki, ti) = (&pts[i], &k[i], &tau[i]);
        let g = |u: &Vector, v: &Vector| m.form(u, v);
        let r = |a: &Vector, b: &Vector, c: &Vector| m.riemann_unchecked(x, a, b, c);
        let (w, w4, kp) = (t.w[i], t.w4[i], t.kp(i));
        let r_phi = r(&phi[i], ti, ti);
        let r_psi = r(&psi[i], ti, ti);
        // |k|^{p−2}∇²φ + (p−2)|k|^{p−4}⟨k,∇²φ⟩k + |k|^{p−2}R(φ,τ)τ + (p−2)|k|^{p−4}⟨k,R(φ,τ)τ⟩k
        let b_phi = d2phi[i].scale(w)
            + ki.scale((p - 2.0) * w4 * g(ki, &d2phi[i]))
            + r_phi.scale(w)
            + ki.scale((p - 2.0) * w4 * g(ki, &r_phi));

        let first = kphi[i] * g(&t.a[i], &d2psi[i]) + g(&b_phi, &d2psi[i]);

        let second = -g(&da[i], &dpsi[i].scale(kphi[i])) - (p - 1.0) * g(&d_kphi_a[i], &dpsi[i]);

        let third = -g(&da[i], &r(&phi[i], ti, &psi[i]))
            + g(&t.a[i], &r(&phi[i], ti, &dpsi[i]))
            + g(
                &(m.riemann_derivative_unchecked(x, &phi[i], &psi[i], ti, ti)
                    + r(&psi[i], &dphi[i], ti)
                    + r(&psi[i], ti, &dphi[i])),
                &t.a[i],
            )
            + g(&r_psi, &(b_phi + ki.scale((p - 1.0) * w * kphi[i])));

        let var_kpk = d2phi[i].scale(kp)
            + ki.scale(p * w * g(&d2phi[i], ki))
            + ki.scale(p * w * g(&r_phi, ki))
            + r_phi.scale(kp)
            + ki.scale((p + 1.0) * kp * kphi[i]);
        let var_k = d2phi[i] + ki.scale(kphi[i]) + r_phi;
        let fourth = g(&da[i], &(ki.scale(g(&psi[i], &dphi[i])) - dphi[i].scale(g(&psi[i], ki))))
            + g(
                &(d_kp_dphi[i] - d_adphi_k[i] + var_kpk.scale(c) - var_k.scale(lambda)),
                &psi[i],
            );

        let lo = ki.scale(params.inv_p_conj() * kp - lambda) + r(&t.a[i], ti, ti);
        let fifth = -(g(&t.a[i], &d2psi[i]) + g(&lo, &psi[i])) * kphi[i];

        total += (first + second + third + fourth + fifth) * geom.ds[i];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::presets::*;
    use std::f64::consts::PI;

    const P2: ElasticParams = ElasticParams { p: 2.0, lambda: 1.0 };

    fn circle_energy(r: f64, params: &ElasticParams) -> f64 {
        2.0 * PI * params.lambda * r + 2.0 * PI * r.powf(1.0 - params.p) / params.p
    }

    #[test]
    fn params_validation() {
        assert!(ElasticParams::new(1.5, 1.0).unwrap_err().to_string().contains("p must be ≥ 2"));
        assert!(ElasticParams::new(2.0, 0.0).is_err());
        assert!((ElasticParams::new(3.0, 1.0).unwrap().p_conj() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn circle_energies() {
        let n = 128;
        let tol = 20.0 / (n * n) as f64;
        let e = energy(&euclidean_circle(n, 1.0).unwrap(), &P2).unwrap();
        assert!((e - 3.0 * PI).abs() < tol * 3.0 * PI);
        let r = 0.5f64.sqrt();
        let e = energy(&euclidean_circle(n, r).unwrap(), &P2).unwrap();
        assert!((e - circle_energy(r, &P2)).abs() < tol * 9.0);
        assert!((circle_energy(r, &P2) - 8.88577).abs() < 1e-5);
        let eq = sphere_equator(n).unwrap();
        let e = energy(&eq, &ElasticParams::new(3.0, 1.0).unwrap());
        // geodesic: p > 2 needs nonvanishing curvature
        assert!(matches!(e, Ok(_)));
        assert!((energy(&eq, &P2).unwrap() - 2.0 * PI).abs() < tol * 2.0 * PI);
    }

    #[test]
    fn gradient_on_circles() {
        let n = 128;
        let c = euclidean_circle(n, 1.0).unwrap();
        let g = gradient_field(&c, &P2).unwrap();
        for (p, v) in c.points().iter().zip(&g.values) {
            assert!((v.norm() - 0.5).abs() < 10.0 / (n * n) as f64);
            assert!(v.dot(p) > 0.0);
        }
        let res = residual(&c, &P2).unwrap();
        assert!((res - (PI / 2.0).sqrt()).abs() < 10.0 / (n * n) as f64);
        let crit = euclidean_circle(n, 0.5f64.sqrt()).unwrap();
        assert!(residual(&crit, &P2).unwrap() < 20.0 / (n * n) as f64);
        assert!(residual(&sphere_equator(n).unwrap(), &P2).unwrap() < 1e-10);
    }

    #[test]
    fn p_greater_than_two_requires_curvature() {
        let eq = sphere_equator(64).unwrap();
        let err = gradient_field(&eq, &ElasticParams::new(3.0, 1.0).unwrap());
        assert!(matches!(err, Err(Error::VanishingCurvature { nodes: 64 })));
    }

    #[test]
    fn p3_critical_circle() {
        // r* = ((p−1)/p)^{1/p}
        let p3 = ElasticParams::new(3.0, 1.0).unwrap();
        let r = (2.0f64 / 3.0).powf(1.0 / 3.0);
        let c = euclidean_circle(128, r).unwrap();
        assert!(residual(&c, &p3).unwrap() < 30.0 / (128.0 * 128.0));
        assert!(residual(&euclidean_circle(128, 1.0).unwrap(), &p3).unwrap() > 0.1);
    }

    #[test]
    fn appendix_latitude_gradient() {
        use crate::ambient::ProfileFunction;
        let c = revolution_latitude(256, ProfileFunction::inverse(0.1).unwrap(), 10.0).unwrap();
        let g = gradient_field(&c, &P2).unwrap();
        let k = c.curvature().unwrap();
        for (gv, kv) in g.values.iter().zip(&k.values) {
            assert!((kv[2] - 9.0900e-3).abs() < 1e-6);
            assert!((-gv[2] - 9.1062e-3).abs() < 1e-6, "{}", -gv[2]);
        }
    }

    #[test]
    fn p2_gradient_matches_independent_code() {
        for curve in [
            euclidean_ellipse(128, 1.5, 0.5).unwrap(),
            sphere_latitude(64, 1.0).unwrap(),
            hyperbolic_circle(64, 0.8).unwrap().perturb_normal(0.05, 3, 0).unwrap(),
        ] {
            let a = gradient_field(&curve, &ElasticParams::new(2.0, 0.7).unwrap()).unwrap();
            let b = gradient_field_p2(&curve, 0.7).unwrap();
            let scale = b.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((*x - *y).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn first_variation_on_unit_circle() {
        let n = 256;
        let c = euclidean_circle(n, 1.0).unwrap();
        let outward = Field::new(c.points().to_vec());
        let dv = first_variation(&c, &P2, &outward).unwrap();
        assert!((dv - PI).abs() < 40.0 / (n * n) as f64, "{dv}");
        let tau = c.unit_tangent().unwrap();
        assert!(first_variation(&c, &P2, &tau).unwrap().abs() < 1e-12);
        let strong = strong_pairing(&c, &P2, &outward).unwrap();
        assert!((strong - dv).abs() < 60.0 / (n * n) as f64);
    }
}
