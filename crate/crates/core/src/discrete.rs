//! Exact gradient of the discrete energy with respect to the node positions.
//!
//! The flow moves along the normal part of this gradient, so it is a true
//! descent direction for the discrete energy. The strong-form
//! [`crate::energy::gradient_field`] agrees with it to second order.

use crate::ambient::AmbientModel;
use crate::curve::{weighted_norm, DiscreteCurve, Field, DEGENERATE_SPEED};
use crate::energy::{ElasticParams, CURVATURE_FLOOR};
use crate::error::{Error, Result};
use crate::vector::Vector;

/// One forward/backward pass over a curve.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub energy: f64,
    /// `Π(G ∂E/∂γᵢ)/dsᵢ`, the L²(ds) gradient restricted to normal fields
    pub gradient: Vec<Vector>,
    /// raw coordinate partials `∂E/∂γᵢ`
    pub partials: Vec<Vector>,
    pub ds: Vec<f64>,
    pub length: f64,
    pub max_k: f64,
    pub min_k: f64,
    /// nodes with `|k|` below [`CURVATURE_FLOOR`]
    pub flat_nodes: usize,
}

impl Evaluation {
    /// `‖gradient‖` in `L^{p′}(ds)`.
    pub fn residual(&self, ambient: &AmbientModel, params: &ElasticParams) -> f64 {
        weighted_norm(ambient, &self.gradient, &self.ds, params.p_conj())
    }

    pub fn gradient_field(&self) -> Field {
        Field::normal(self.gradient.clone())
    }
}

pub fn evaluate(curve: &DiscreteCurve, params: &ElasticParams) -> Result<Evaluation> {
    let m = curve.ambient();
    let pts = curve.points();
    let n = pts.len();
    let nx = |i: usize| if i + 1 == n { 0 } else { i + 1 };
    let pv = |i: usize| if i == 0 { n - 1 } else { i - 1 };
    let (p, lambda) = (params.p, params.lambda);

    let mut chord = Vec::with_capacity(n);
    let mut ell = Vec::with_capacity(n);
    for j in 0..n {
        let d = pts[nx(j)] - pts[j];
        let l = m.form_norm(&d);
        if !(l > DEGENERATE_SPEED) {
            return Err(Error::DegenerateCurve { node: j, speed: l });
        }
        chord.push(d.scale(1.0 / l));
        ell.push(l);
    }

    let mut wide = Vec::with_capacity(n);
    let mut ds = Vec::with_capacity(n);
    let mut tnorm = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    for i in 0..n {
        let w = pts[nx(i)] - pts[pv(i)];
        let half = 0.5 * m.form_norm(&w);
        if !(half > DEGENERATE_SPEED) {
            return Err(Error::DegenerateCurve { node: i, speed: half });
        }
        let t = m.project(&pts[i], &w);
        let tn = m.form_norm(&t);
        if !(tn > 0.0) {
            return Err(Error::DegenerateCurve { node: i, speed: 0.0 });
        }
        tau.push(t.scale(1.0 / tn));
        tnorm.push(tn);
        wide.push(w);
        ds.push(half);
    }

    let dim = m.embedding_dim();
    let zero = Vector::zeros(dim);
    let mut energy = 0.0;
    let (mut max_k, mut min_k) = (0.0f64, f64::INFINITY);
    let mut flat_nodes = 0;
    let mut ds_bar = vec![0.0; n];
    let mut tau_bar = vec![zero; n];
    let mut chord_bar = vec![zero; n];
    let mut pts_bar = vec![zero; n];

    for i in 0..n {
        let (ip, im) = (nx(i), pv(i));
        let a = (tau[ip] - tau[im]).scale(0.25 / ds[i]);
        let b = (chord[i] - chord[im]).scale(0.5 / ds[i]);
        let u = a + b;
        let q = m.project(&pts[i], &u);
        let alpha = m.form(&q, &tau[i]);
        let k = q.axpy(-alpha, &tau[i]);
        let kk = m.form(&k, &k).max(0.0);
        let kn = kk.sqrt();
        max_k = max_k.max(kn);
        min_k = min_k.min(kn);
        if kn < CURVATURE_FLOOR {
            flat_nodes += 1;
        }
        // |k|^{p−2}
        let w = if p == 2.0 { 1.0 } else { kk.powf(0.5 * p - 1.0) };
        let density = lambda + w * kk / p;
        energy += density * ds[i];

        ds_bar[i] += density;
        let kk_bar = 0.5 * ds[i] * w;
        let k_bar = m.lower(&k).scale(2.0 * kk_bar);
        let alpha_bar = -k_bar.dot(&tau[i]);
        let q_bar = k_bar.axpy(alpha_bar, &m.lower(&tau[i]));
        tau_bar[i] = tau_bar[i].axpy(-alpha, &k_bar).axpy(alpha_bar, &m.lower(&q));
        let (p_bar, u_bar) = m.project_vjp(&pts[i], &u, &q_bar);
        pts_bar[i] = pts_bar[i] + p_bar;
        let sw = 0.25 / ds[i];
        tau_bar[ip] = tau_bar[ip].axpy(sw, &u_bar);
        tau_bar[im] = tau_bar[im].axpy(-sw, &u_bar);
        let sc = 0.5 / ds[i];
        chord_bar[i] = chord_bar[i].axpy(sc, &u_bar);
        chord_bar[im] = chord_bar[im].axpy(-sc, &u_bar);
        ds_bar[i] -= u_bar.dot(&u) / ds[i];
    }

    for i in 0..n {
        let t = &tau[i];
        let t_bar = tau_bar[i].axpy(-t.dot(&tau_bar[i]), &m.lower(t)).scale(1.0 / tnorm[i]);
        let (p_bar, mut w_bar) = m.project_vjp(&pts[i], &wide[i], &t_bar);
        pts_bar[i] = pts_bar[i] + p_bar;
        // dsᵢ = ½|w|
        w_bar = w_bar.axpy(ds_bar[i] * 0.25 / ds[i], &m.lower(&wide[i]));
        let (ip, im) = (nx(i), pv(i));
        pts_bar[ip] = pts_bar[ip] + w_bar;
        pts_bar[im] = pts_bar[im] - w_bar;
    }

    for j in 0..n {
        let c = &chord[j];
        let d_bar = chord_bar[j].axpy(-c.dot(&chord_bar[j]), &m.lower(c)).scale(1.0 / ell[j]);
        let jp = nx(j);
        pts_bar[jp] = pts_bar[jp] + d_bar;
        pts_bar[j] = pts_bar[j] - d_bar;
    }

    let gradient = (0..n)
        .map(|i| {
            let v = m.project(&pts[i], &m.lower(&pts_bar[i]));
            v.axpy(-m.form(&v, &tau[i]), &tau[i]).scale(1.0 / ds[i])
        })
        .collect();
    let length = ds.iter().sum();
    Ok(Evaluation { energy, gradient, partials: pts_bar, ds, length, max_k, min_k, flat_nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::ProfileFunction;
    use crate::curve::presets;
    use crate::energy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shifted(curve: &DiscreteCurve, dir: &[Vector], eps: f64) -> DiscreteCurve {
        let pts = curve.points().iter().zip(dir).map(|(p, d)| p.axpy(eps, d)).collect();
        DiscreteCurve::from_points_unchecked(curve.ambient().clone(), pts)
    }

    fn check_partials(curve: &DiscreteCurve, params: &ElasticParams, seed: u64) {
        let ev = evaluate(curve, params).unwrap();
        assert!((ev.energy - energy::energy(curve, params).unwrap()).abs() < 1e-12 * ev.energy.abs());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = curve.ambient().embedding_dim();
        let dir: Vec<Vector> = (0..curve.len())
            .map(|_| Vector::from_slice(&(0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()))
            .collect();
        let eps = 1e-6;
        let fd = (evaluate(&shifted(curve, &dir, eps), params).unwrap().energy
            - evaluate(&shifted(curve, &dir, -eps), params).unwrap().energy)
            / (2.0 * eps);
        let an: f64 = ev.partials.iter().zip(&dir).map(|(g, d)| g.dot(d)).sum();
        let scale: f64 = ev.partials.iter().map(|g| g.norm()).sum::<f64>();
        assert!((fd - an).abs() < 1e-7 * scale, "fd {fd} vs {an} (scale {scale})");
    }

    #[test]
    fn partials_match_finite_differences() {
        let p2 = ElasticParams::default();
        let p3 = ElasticParams::new(3.0, 0.7).unwrap();
        let ellipse = presets::euclidean_ellipse(40, 1.3, 0.7).unwrap();
        let space = DiscreteCurve::from_fn(AmbientModel::euclidean(3).unwrap(), 40, |t| {
            Vector::new3(t.cos(), t.sin(), 0.3 * (2.0 * t).sin())
        })
        .unwrap();
        let sphere = presets::sphere_latitude(40, 0.9).unwrap().perturb_normal(0.05, 2, 0).unwrap();
        let hyper = presets::hyperbolic_circle(40, 0.8).unwrap().perturb_normal(0.05, 3, 0).unwrap();
        let prof = ProfileFunction::inverse(0.1).unwrap();
        let rev = presets::revolution_latitude(40, prof, 1.0).unwrap().perturb_normal(0.05, 2, 0).unwrap();
        for (i, c) in [ellipse, space, sphere, hyper, rev].iter().enumerate() {
            check_partials(c, &p2, i as u64);
            check_partials(c, &p3, 10 + i as u64);
        }
    }

    #[test]
    fn agrees_with_strong_gradient_at_second_order() {
        let params = ElasticParams::default();
        let mut errs = Vec::new();
        for n in [64, 128, 256] {
            let c = presets::euclidean_ellipse(n, 1.2, 0.8).unwrap();
            let ev = evaluate(&c, &params).unwrap();
            let strong = energy::gradient_field(&c, &params).unwrap();
            let diff: Vec<Vector> = ev.gradient.iter().zip(&strong.values).map(|(a, b)| *a - *b).collect();
            errs.push(weighted_norm(c.ambient(), &diff, &ev.ds, 2.0) / weighted_norm(c.ambient(), &strong.values, &ev.ds, 2.0));
        }
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
        assert!(errs[2] < 1e-2, "{errs:?}");
    }

    #[test]
    fn critical_circle_is_nearly_stationary() {
        let params = ElasticParams::default();
        let c = presets::euclidean_circle(128, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let ev = evaluate(&c, &params).unwrap();
        assert!(ev.residual(c.ambient(), &params) < 20.0 / (128.0 * 128.0));
    }
}
