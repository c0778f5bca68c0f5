//! Post-hoc analysis of flows: Łojasiewicz exponent fits, the curvature
//! evolution check, and interpolation and norm probes.

use serde::{Deserialize, Serialize};

use crate::curve::{weighted_norm, DiscreteCurve};
use crate::error::{Error, Result};
use crate::flow::{FlowSample, FlowState};
use crate::vector::Vector;

/// Samples with `E − E∞` at or below this are dropped from fits.
pub const FIT_GAP: f64 = 1e-12;
pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares fit of `log(E − E∞)` against `log(residual)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LojaFit {
    /// `1 − 1/slope`; `None` when the slope is at most 1.
    pub theta_hat: Option<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples_used: usize,
    pub e_inf: f64,
}

/// Where the limiting energy of a fit comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum EnergyLimit {
    /// energy of the last sample
    Final,
    /// a known closed-form value
    Analytic(f64),
    /// Aitken extrapolation of the tail
    Extrapolated,
}

impl EnergyLimit {
    pub fn resolve(&self, samples: &[FlowSample]) -> Result<f64> {
        match *self {
            EnergyLimit::Analytic(e) => Ok(e),
            EnergyLimit::Final => {
                samples.last().map(|s| s.energy).ok_or_else(|| Error::InsufficientData("empty trajectory".into()))
            }
            EnergyLimit::Extrapolated => aitken_limit(samples),
        }
    }
}

/// Aitken's Δ² on the last sample and two earlier ones at equal time
/// spacing, assuming an exponential tail.
pub fn aitken_limit(samples: &[FlowSample]) -> Result<f64> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} samples, need 3")));
    }
    let last = &samples[n - 1];
    let span = last.time - samples[0].time;
    let at = |t: f64| -> &FlowSample {
        samples
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("nonempty")
    };
    let (e0, e1, e2) = (at(last.time - span / 4.0).energy, at(last.time - span / 8.0).energy, last.energy);
    let (d1, d2) = (e1 - e0, e2 - e1);
    let denom = d2 - d1;
    if denom == 0.0 || d2 * d1 <= 0.0 {
        return Ok(e2);
    }
    Ok(e2 - d2 * d2 / denom)
}

/// Fits the last `window_fraction` of the samples with `E − E∞ > FIT_GAP`.
pub fn lojasiewicz_fit(samples: &[FlowSample], e_inf: f64, window_fraction: f64) -> Result<LojaFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("window fraction must be in (0, 1], got {window_fraction}")));
    }
    let usable: Vec<&FlowSample> =
        samples.iter().filter(|s| s.energy - e_inf > FIT_GAP && s.residual > 0.0).collect();
    let take = ((usable.len() as f64) * window_fraction).ceil() as usize;
    let window = &usable[usable.len() - take..];
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} usable samples, need {MIN_FIT_SAMPLES}",
            window.len()
        )));
    }
    let xs: Vec<f64> = window.iter().map(|s| s.residual.ln()).collect();
    let ys: Vec<f64> = window.iter().map(|s| (s.energy - e_inf).ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys)?;
    Ok(LojaFit {
        theta_hat: (slope > 1.0).then(|| 1.0 - 1.0 / slope),
        slope,
        intercept,
        r_squared,
        window: (window[0].time, window[window.len() - 1].time),
        samples_used: window.len(),
        e_inf,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("residuals do not vary over the window".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok((slope, my - slope * mx, r_squared))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    /// `‖∂t^⊥k − P(V)‖ / ‖P(V)‖` in L²(ds)
    pub relative_error: f64,
    /// `‖∂t^⊥k‖`
    pub observed_norm: f64,
    /// `‖P(V)‖` with `P(V) = ∇²V + ⟨V,k⟩k + R(V,τ)τ`
    pub predicted_norm: f64,
}

/// Compares the time difference of curvature between the first and last
/// state with `∇²V + ⟨V,k⟩k + R(V,τ)τ` at the middle state, `V` being the
/// flow velocity there. The segment must have an odd number of states at
/// uniform time spacing and no reparametrization.
pub fn evolution_consistency(segment: &[FlowState]) -> Result<Consistency> {
    let n = segment.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidSegment(format!("need an odd number ≥ 3 of states, got {n}")));
    }
    let epoch = segment[0].reparam_epoch;
    if segment.iter().any(|s| s.reparam_epoch != epoch) {
        return Err(Error::InvalidSegment("reparametrization inside the segment".into()));
    }
    let spacing = segment[1].time - segment[0].time;
    if !(spacing > 0.0) {
        return Err(Error::InvalidSegment("times must increase".into()));
    }
    for w in segment.windows(2) {
        if ((w[1].time - w[0].time) - spacing).abs() > 1e-9 * spacing {
            return Err(Error::InvalidSegment("time spacing is not uniform".into()));
        }
    }
    let (first, mid, last) = (&segment[0], &segment[n / 2], &segment[n - 1]);
    let curve = &mid.curve;
    let m = curve.ambient();
    let geom = curve.geometry()?;
    let k0 = first.curve.geometry()?.curvature;
    let k1 = last.curve.geometry()?.curvature;
    let span = last.time - first.time;
    let observed: Vec<Vector> = (0..curve.len())
        .map(|i| curve.normal_part(&geom, i, &(k1[i] - k0[i]).scale(1.0 / span)))
        .collect();
    let v: Vec<Vector> = mid.gradient().iter().map(|g| g.scale(-1.0)).collect();
    let lap = curve.nabla_twice(&geom, &v);
    let predicted: Vec<Vector> = (0..curve.len())
        .map(|i| {
            let (k, t, p) = (&geom.curvature[i], &geom.tangent[i], &curve.points()[i]);
            lap[i].axpy(m.form(&v[i], k), k) + m.riemann_unchecked(p, &v[i], t, t)
        })
        .collect();
    let diff: Vec<Vector> = observed.iter().zip(&predicted).map(|(a, b)| *a - *b).collect();
    let predicted_norm = weighted_norm(m, &predicted, &geom.ds, 2.0);
    let observed_norm = weighted_norm(m, &observed, &geom.ds, 2.0);
    let diff_norm = weighted_norm(m, &diff, &geom.ds, 2.0);
    let relative_error = if predicted_norm > 0.0 { diff_norm / predicted_norm } else { diff_norm };
    Ok(Consistency { relative_error, observed_norm, predicted_norm })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationProbe {
    pub ratio: f64,
    /// set when `k` vanishes and the ratio is reported as 0
    pub degenerate: bool,
}

/// `‖∇ⁱk‖_q / (‖k‖₂^{1−α} ‖k‖_{n,2}^α)` with `α = (i + ½ − 1/q)/n`, all norms scale invariant.
pub fn interpolation_probe(curve: &DiscreteCurve, i: usize, n: usize, q: f64) -> Result<InterpolationProbe> {
    if i >= n {
        return Err(Error::InvalidArgument(format!("need i < n, got i = {i}, n = {n}")));
    }
    if !(q >= 2.0) {
        return Err(Error::InvalidArgument(format!("need q ≥ 2, got {q}")));
    }
    let geom = curve.geometry()?;
    let alpha = (i as f64 + 0.5 - 1.0 / q) / n as f64;
    let top = curve.scale_invariant_norm_with(&geom, i, q);
    let k2 = curve.scale_invariant_norm_with(&geom, 0, 2.0);
    let kn2: f64 = (0..=n).map(|j| curve.scale_invariant_norm_with(&geom, j, 2.0)).sum();
    let denom = k2.powf(1.0 - alpha) * kn2.powf(alpha);
    if !(denom > f64::MIN_POSITIVE) || !(k2 > 1e-12) {
        return Ok(InterpolationProbe { ratio: 0.0, degenerate: true });
    }
    Ok(InterpolationProbe { ratio: top / denom, degenerate: false })
}

/// `values[j][c]` is the scale-invariant norm of `∇ʲk` in `L^{q_c}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub q_list: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub fn norm_report(curve: &DiscreteCurve, n_max: usize, q_list: &[f64]) -> Result<NormReport> {
    if let Some(q) = q_list.iter().find(|q| !(**q >= 1.0)) {
        return Err(Error::InvalidArgument(format!("norm exponents must be ≥ 1, got {q}")));
    }
    let geom = curve.geometry()?;
    let values = (0..=n_max)
        .map(|j| q_list.iter().map(|&q| curve.scale_invariant_norm_with(&geom, j, q)).collect())
        .collect();
    Ok(NormReport { q_list: q_list.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::presets;
    use crate::energy::ElasticParams;
    use crate::flow::dense_segment;
    use std::f64::consts::PI;

    fn synthetic(power: f64) -> Vec<FlowSample> {
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

    #[test]
    fn recovers_planted_exponents() {
        for (power, theta) in [(2.0, 0.5), (4.0 / 3.0, 0.25), (1.5, 1.0 / 3.0), (3.0, 2.0 / 3.0)] {
            let fit = lojasiewicz_fit(&synthetic(power), 0.0, 0.5).unwrap();
            assert!((fit.slope - power).abs() < 1e-10, "{fit:?}");
            assert!((fit.theta_hat.unwrap() - theta).abs() < 1e-10);
            assert!((fit.r_squared - 1.0).abs() < 1e-12);
            assert_eq!(fit.samples_used, 20);
        }
    }

    #[test]
    fn fit_needs_enough_samples() {
        let s = synthetic(2.0);
        assert!(matches!(lojasiewicz_fit(&s[..15], 0.0, 0.5), Err(Error::InsufficientData(_))));
        // E∞ above every sample leaves nothing to fit
        assert!(lojasiewicz_fit(&s, 2.0, 0.5).is_err());
    }

    #[test]
    fn aitken_recovers_exponential_limit() {
        let s = synthetic(2.0);
        assert!(aitken_limit(&s).unwrap().abs() < 1e-12);
        assert_eq!(EnergyLimit::Final.resolve(&s).unwrap(), s[39].energy);
        assert_eq!(EnergyLimit::Analytic(2.5).resolve(&s).unwrap(), 2.5);
    }

    #[test]
    fn segment_validation() {
        let p = ElasticParams::default();
        let s = FlowState::new(presets::euclidean_ellipse(32, 1.2, 0.8).unwrap(), &p).unwrap();
        let seg = dense_segment(&s, &p, 1e-6, 1, 4).unwrap();
        assert!(matches!(evolution_consistency(&seg), Err(Error::InvalidSegment(_))));
        let mut seg = dense_segment(&s, &p, 1e-6, 1, 3).unwrap();
        seg[2].reparam_epoch = 1;
        assert!(matches!(evolution_consistency(&seg), Err(Error::InvalidSegment(_))));
    }

    #[test]
    fn stationary_segments_have_small_sides() {
        let p = ElasticParams::default();
        let n = 128;
        for c in [presets::euclidean_circle(n, 0.5f64.sqrt()).unwrap(), presets::sphere_equator(n).unwrap()] {
            let s = FlowState::new(c, &p).unwrap();
            let seg = dense_segment(&s, &p, 1e-7, 1, 3).unwrap();
            let r = evolution_consistency(&seg).unwrap();
            let bound = 50.0 / (n * n) as f64;
            assert!(r.observed_norm < bound && r.predicted_norm < bound, "{r:?}");
        }
    }

    #[test]
    fn interpolation_examples() {
        let circle = presets::euclidean_circle(128, 1.0).unwrap();
        let r = interpolation_probe(&circle, 0, 1, 2.0).unwrap();
        assert!(!r.degenerate && (r.ratio - 1.0).abs() < 1e-3, "{r:?}");
        let eq = presets::sphere_equator(64).unwrap();
        assert!(interpolation_probe(&eq, 0, 1, 2.0).unwrap().degenerate);
        assert!(interpolation_probe(&circle, 1, 1, 2.0).is_err());
        let ratios: Vec<f64> = [0.01, 0.02, 0.04]
            .iter()
            .map(|a| {
                let c = circle.perturb_normal(*a, 3, 0).unwrap();
                interpolation_probe(&c, 1, 2, 2.0).unwrap().ratio
            })
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(ratios.iter().all(|r| *r <= 10.0 * lo && r.is_finite()), "{ratios:?}");
    }

    #[test]
    fn norm_report_examples() {
        let n = 128;
        let c = presets::euclidean_circle(n, 1.0).unwrap();
        let rep = norm_report(&c, 2, &[2.0]).unwrap();
        assert!((rep.values[0][0] - 2.0 * PI).abs() < 2.0 * PI * 40.0 / (n * n) as f64);
        let bound = 2000.0 / (n * n) as f64;
        assert!(rep.values[1][0] < bound && rep.values[2][0] < bound, "{:?}", rep.values);
        let fine = norm_report(&presets::euclidean_circle(2 * n, 1.0).unwrap(), 2, &[2.0]).unwrap();
        assert!((rep.values[2][0] / fine.values[2][0] - 4.0).abs() < 0.5);
        for (j, row) in rep.values.iter().enumerate() {
            assert_eq!(row[0], c.scale_invariant_norm(j, 2.0).unwrap());
        }
        let big = norm_report(&presets::euclidean_circle(n, 2.0).unwrap(), 2, &[2.0]).unwrap();
        assert!((big.values[0][0] - rep.values[0][0]).abs() < 1e-10);
        let eq = norm_report(&presets::sphere_equator(n).unwrap(), 2, &[2.0, 4.0]).unwrap();
        assert!(eq.values.iter().flatten().all(|v| *v < bound));
    }
}
