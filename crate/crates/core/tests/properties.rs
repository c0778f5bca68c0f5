use std::f64::consts::{PI, TAU};

use pelastic::ambient::AmbientKind;
use pelastic::curve::presets;
use pelastic::diagnostics::lojasiewicz_fit;
use pelastic::energy::{self, ElasticParams};
use pelastic::snapshot::Snapshot;
use pelastic::*;
use proptest::prelude::*;

fn ambient(which: u8) -> AmbientModel {
    match which % 4 {
        0 => AmbientModel::euclidean(3).unwrap(),
        1 => AmbientModel::sphere(),
        2 => AmbientModel::hyperbolic(),
        _ => AmbientModel::revolution(ProfileFunction::inverse(0.1).unwrap()),
    }
}

fn point(m: &AmbientModel, a: f64, b: f64) -> Point {
    match m.kind() {
        AmbientKind::Euclidean { .. } => Vector::new3(a, b, a * b),
        AmbientKind::Sphere2 => {
            let c = 0.5 * (b + 2.0) * PI / 2.0;
            Vector::new3(a.cos() * c.sin(), a.sin() * c.sin(), c.cos())
        }
        AmbientKind::Hyperbolic2 => {
            let rho = 0.7 * b.abs();
            Vector::new3(rho.sinh() * a.cos(), rho.sinh() * a.sin(), rho.cosh())
        }
        AmbientKind::Revolution(prof) => {
            let z = 1.0 + 4.0 * b.abs();
            let f = prof.value(z);
            Vector::new3(f * a.cos(), f * a.sin(), z)
        }
    }
}

fn vec3() -> impl Strategy<Value = Vector> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vector::new3(x, y, z))
}

/// Ellipse with a smooth radial bump.
fn bumpy(n: usize, a: f64, b: f64, eps: f64, mode: f64) -> DiscreteCurve {
    DiscreteCurve::from_fn(AmbientModel::euclidean(2).unwrap(), n, |t| {
        let r = 1.0 + eps * (mode * t).cos();
        Vector::new2(a * r * t.cos(), b * r * t.sin())
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_tangent(which in 0u8..4, a in 0.0..TAU, b in -2.0..2.0f64, v in vec3()) {
        let m = ambient(which);
        let p = point(&m, a, b);
        let pv = m.project(&p, &v);
        prop_assert!((m.project(&p, &pv) - pv).norm() <= 1e-12);
        prop_assert!(m.is_tangent(&p, &pv));
    }

    #[test]
    fn riemann_symmetries(which in 0u8..4, a in 0.0..TAU, b in -2.0..2.0f64, x in vec3(), y in vec3(), z in vec3(), w in vec3()) {
        let m = ambient(which);
        let p = point(&m, a, b);
        let [x, y, z, w] = [x, y, z, w].map(|v| m.project(&p, &v));
        let r = |a: &Vector, b: &Vector, c: &Vector| m.riemann_apply(&p, a, b, c).unwrap();
        prop_assert_eq!((r(&x, &y, &z) + r(&y, &x, &z)).norm(), 0.0);
        prop_assert!((r(&x, &y, &z) + r(&y, &z, &x) + r(&z, &x, &y)).norm() <= 1e-12);
        prop_assert!((m.form(&r(&z, &w, &y), &x) - m.form(&r(&x, &y, &w), &z)).abs() <= 1e-12);
    }

    #[test]
    fn exp_stays_on_the_manifold(which in 0u8..4, a in 0.0..TAU, b in -2.0..2.0f64, v in vec3(), s in 0.0..0.8f64) {
        let m = ambient(which);
        let p = point(&m, a, b);
        let q = m.exp_map(&p, &m.project(&p, &v).scale(s)).unwrap();
        let limit = if matches!(m.kind(), AmbientKind::Revolution(_)) { 1e-8 } else { 1e-10 };
        prop_assert!(m.constraint_residual(&q).abs() <= limit);
    }

    #[test]
    fn energy_is_invariant_under_rigid_motions_and_shifts(
        a in 0.8..1.5f64, b in 0.5..1.0f64, eps in 0.0..0.1f64, angle in 0.0..TAU,
        dx in -3.0..3.0f64, dy in -3.0..3.0f64, shift in 0usize..48,
    ) {
        let params = ElasticParams::default();
        let c = bumpy(48, a, b, eps, 3.0);
        let e = energy::energy(&c, &params).unwrap();
        let (s, co) = angle.sin_cos();
        let moved: Vec<Point> = c.points().iter().map(|p| Vector::new2(co * p[0] - s * p[1] + dx, s * p[0] + co * p[1] + dy)).collect();
        let mut rolled = c.points().to_vec();
        rolled.rotate_left(shift);
        let em = energy::energy(&DiscreteCurve::new(c.ambient().clone(), moved).unwrap(), &params).unwrap();
        let er = energy::energy(&DiscreteCurve::new(c.ambient().clone(), rolled).unwrap(), &params).unwrap();
        prop_assert!((em - e).abs() <= 1e-10 * e);
        prop_assert!((er - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn tangential_variations_do_not_change_the_energy(a in 0.8..1.5f64, b in 0.5..1.0f64, eps in 0.0..0.1f64, p in 2.0..4.0f64) {
        let c = bumpy(48, a, b, eps, 2.0);
        let params = ElasticParams::new(p, 1.0).unwrap();
        let tau = c.unit_tangent().unwrap();
        prop_assert!(energy::first_variation(&c, &params, &tau).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn gradient_is_curve_normal(a in 0.8..1.5f64, b in 0.5..1.0f64, eps in 0.0..0.1f64, p in 2.0..4.0f64) {
        let c = bumpy(48, a, b, eps, 2.0);
        let params = ElasticParams::new(p, 1.0).unwrap();
        let grad = energy::gradient_field(&c, &params).unwrap();
        let tau = c.unit_tangent().unwrap();
        let scale = grad.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for (g, t) in grad.values.iter().zip(&tau.values) {
            prop_assert!(g.dot(t).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn snapshots_round_trip_exactly(n in 16usize..64, a in 0.1..10.0f64, t in 0.0..1e3f64, seed in any::<u64>()) {
        let c = presets::sphere_latitude(n, 1.0).unwrap().perturb_normal(0.05 * (a / 10.0), 3, seed).unwrap();
        let snap = Snapshot::of(&c, t);
        let back = Snapshot::from_json(&snap.to_json()).unwrap();
        prop_assert_eq!(&back, &snap);
        let rebuilt = back.to_curve(AmbientModel::sphere()).unwrap();
        prop_assert_eq!(rebuilt.points(), c.points());
    }

    #[test]
    fn fits_recover_planted_slopes(slope in 1.1..4.0f64, rate in 0.02..0.06f64, offset in -1.0..1.0f64) {
        let samples: Vec<FlowSample> = (0..40)
            .map(|j| {
                let r = (-rate * j as f64).exp();
                FlowSample {
                    step: j,
                    time: j as f64,
                    energy: offset + r.powf(slope),
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
            .collect();
        let fit = lojasiewicz_fit(&samples, offset, 0.5).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-6 * slope, "{:?}", fit);
        prop_assert!(fit.r_squared >= 1.0 - 1e-9);
        prop_assert!((fit.theta_hat.unwrap() - (1.0 - 1.0 / slope)).abs() <= 1e-6);
    }
}
