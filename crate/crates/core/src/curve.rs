//! Discrete closed curves on an ambient manifold.
//!
//! A curve is `N` points on a uniform parameter grid `xᵢ = i/N` of the circle.
//! Arclength derivatives use centered differences in embedding coordinates,
//! followed by projection onto the curve-normal space
//! `γ^⊥ = M^⊤ − γ^⊤` (tangent to the ambient, orthogonal to the curve).
//!
//! The curvature is the projected difference of unit chords. The normal
//! `∇²` averages the iterated wide stencil with a compact midpoint-flux
//! stencil: the iterated wide stencil alone annihilates the alternating
//! (odd/even) grid mode, while the average damps every grid mode with half
//! the spectral radius of the compact stencil.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ambient::{AmbientKind, AmbientModel, Point};
use crate::error::{Error, Result};
use crate::vector::Vector;

pub const MIN_NODES: usize = 16;
/// Largest admissible ratio between the longest and shortest chord.
pub const MAX_CHORD_RATIO: f64 = 10.0;
pub(crate) const DEGENERATE_SPEED: f64 = 1e-12;
/// Relative tolerance for the tangent/normal field flags.
pub const FIELD_TOL: f64 = 1e-8;

/// A closed curve sampled at `N` nodes of a uniform parameter grid.
#[derive(Clone, Debug)]
pub struct DiscreteCurve {
    ambient: AmbientModel,
    points: Vec<Point>,
}

/// A vector per node of a curve.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub values: Vec<Vector>,
    pub is_ambient_tangent: bool,
    pub is_curve_normal: bool,
}

impl Field {
    pub fn new(values: Vec<Vector>) -> Self {
        Field { values, is_ambient_tangent: false, is_curve_normal: false }
    }

    pub(crate) fn normal(values: Vec<Vector>) -> Self {
        Field { values, is_ambient_tangent: true, is_curve_normal: true }
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Field::normal(vec![Vector::zeros(dim); n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field { values: self.values.iter().map(|v| v.scale(a)).collect(), ..*self }
    }
}

/// Which weights a discrete integral uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// Arclength `ds`.
    Arclength,
    /// Parameter `dx` with total mass one.
    Parameter,
}

/// Cached first- and second-order geometry of a curve.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    /// `|γᵢ₊₁ − γᵢ₋₁| / (2Δx)`
    pub speeds: Vec<f64>,
    /// Arclength weights `speedᵢ Δx`.
    pub ds: Vec<f64>,
    pub length: f64,
    /// Chord lengths `|γᵢ₊₁ − γᵢ|`, indexed by the left node.
    pub chords: Vec<f64>,
    pub tangent: Vec<Vector>,
    pub curvature: Vec<Vector>,
}

impl DiscreteCurve {
    /// Validates and wraps a point sequence.
    pub fn new(ambient: AmbientModel, points: Vec<Point>) -> Result<Self> {
        if points.len() < MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "a curve needs at least {MIN_NODES} nodes, got {}",
                points.len()
            )));
        }
        for p in &points {
            ambient.check_point(p)?;
        }
        let curve = DiscreteCurve { ambient, points };
        let chords = curve.chord_lengths();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for (i, &c) in chords.iter().enumerate() {
            if !(c > DEGENERATE_SPEED) {
                return Err(Error::DegenerateCurve { node: i, speed: c * curve.len() as f64 });
            }
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if hi / lo > MAX_CHORD_RATIO {
            return Err(Error::InvalidArgument(format!(
                "chord ratio {:.3} exceeds {MAX_CHORD_RATIO}",
                hi / lo
            )));
        }
        Ok(curve)
    }

    pub(crate) fn from_points_unchecked(ambient: AmbientModel, points: Vec<Point>) -> Self {
        DiscreteCurve { ambient, points }
    }

    /// Samples `param(θ)` at `θᵢ = 2π i/N`.
    pub fn from_fn(ambient: AmbientModel, n: usize, param: impl Fn(f64) -> Point) -> Result<Self> {
        let points = (0..n).map(|i| param(2.0 * PI * i as f64 / n as f64)).collect();
        Self::new(ambient, points)
    }

    pub fn ambient(&self) -> &AmbientModel {
        &self.ambient
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    /// Largest constraint residual over the nodes.
    pub fn constraint_residual(&self) -> f64 {
        self.points
            .iter()
            .map(|p| self.ambient.constraint_residual(p).abs())
            .fold(0.0, f64::max)
    }

    #[inline]
    fn next(&self, i: usize) -> usize {
        if i + 1 == self.points.len() {
            0
        } else {
            i + 1
        }
    }

    #[inline]
    fn prev(&self, i: usize) -> usize {
        if i == 0 {
            self.points.len() - 1
        } else {
            i - 1
        }
    }

    fn chord_lengths(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.ambient.form_norm(&(self.points[self.next(i)] - self.points[i])))
            .collect()
    }

    /// Node speeds, arclength weights and total length.
    pub fn node_speeds(&self) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let n = self.len();
        let dx = self.dx();
        let mut speeds = Vec::with_capacity(n);
        for i in 0..n {
            let chord = self.points[self.next(i)] - self.points[self.prev(i)];
            let s = self.ambient.form_norm(&chord) / (2.0 * dx);
            if !(s >= DEGENERATE_SPEED) {
                return Err(Error::DegenerateCurve { node: i, speed: s });
            }
            speeds.push(s);
        }
        let ds: Vec<f64> = speeds.iter().map(|s| s * dx).collect();
        let length = ds.iter().sum();
        Ok((speeds, ds, length))
    }

    /// Speeds, tangent and curvature in one pass.
    pub fn geometry(&self) -> Result<CurveGeometry> {
        let (speeds, ds, length) = self.node_speeds()?;
        let n = self.len();
        let m = &self.ambient;
        let mut tangent = Vec::with_capacity(n);
        for i in 0..n {
            let p = &self.points[i];
            let t = m.project(p, &(self.points[self.next(i)] - self.points[self.prev(i)]));
            let norm = m.form_norm(&t);
            if !(norm > 0.0) {
                return Err(Error::DegenerateCurve { node: i, speed: 0.0 });
            }
            tangent.push(t.scale(1.0 / norm));
        }
        let chords = self.chord_lengths();
        let mut geom = CurveGeometry { speeds, ds, length, chords, tangent, curvature: Vec::new() };
        let mut unit_chord = Vec::with_capacity(n);
        for i in 0..n {
            unit_chord.push((self.points[self.next(i)] - self.points[i]).scale(1.0 / geom.chords[i]));
        }
        let mut curvature = Vec::with_capacity(n);
        for i in 0..n {
            let (ip, im) = (self.next(i), self.prev(i));
            let wide = (geom.tangent[ip] - geom.tangent[im]).scale(0.25 / geom.ds[i]);
            let compact = (unit_chord[i] - unit_chord[im]).scale(0.5 / geom.ds[i]);
            curvature.push(self.normal_part(&geom, i, &(wide + compact)));
        }
        geom.curvature = curvature;
        Ok(geom)
    }

    /// `(M^⊤ − γ^⊤) v` at node `i`.
    #[inline]
    pub(crate) fn normal_part(&self, geom: &CurveGeometry, i: usize, v: &Vector) -> Vector {
        let t = &geom.tangent[i];
        let pv = self.ambient.project(&self.points[i], v);
        pv.axpy(-self.ambient.form(&pv, t), t)
    }

    /// Wide centered `∇φ` on raw values (assumed curve-normal).
    pub(crate) fn nabla_once(&self, geom: &CurveGeometry, phi: &[Vector]) -> Vec<Vector> {
        (0..self.len())
            .map(|i| {
                let d = (phi[self.next(i)] - phi[self.prev(i)]).scale(0.5 / geom.ds[i]);
                self.normal_part(geom, i, &d)
            })
            .collect()
    }

    /// Midpoint fluxes `g_{i+½} = ½(Πᵢ + Πᵢ₊₁)(φᵢ₊₁ − φᵢ)/ℓ_{i+½}`.
    pub(crate) fn midpoint_flux(&self, geom: &CurveGeometry, phi: &[Vector]) -> Vec<Vector> {
        (0..self.len())
            .map(|i| {
                let ip = self.next(i);
                let d = (phi[ip] - phi[i]).scale(1.0 / geom.chords[i]);
                (self.normal_part(geom, i, &d) + self.normal_part(geom, ip, &d)).scale(0.5)
            })
            .collect()
    }

    /// `∇²φ` with the averaged wide/compact stencil.
    pub(crate) fn nabla_twice(&self, geom: &CurveGeometry, phi: &[Vector]) -> Vec<Vector> {
        let first = self.nabla_once(geom, phi);
        let flux = self.midpoint_flux(geom, phi);
        (0..self.len())
            .map(|i| {
                let (ip, im) = (self.next(i), self.prev(i));
                let wide = (first[ip] - first[im]).scale(0.25 / geom.ds[i]);
                // dividing by dsᵢ keeps ∇² self-adjoint for the ds pairing
                let compact = (flux[i] - flux[im]).scale(0.5 / geom.ds[i]);
                self.normal_part(geom, i, &(wide + compact))
            })
            .collect()
    }

    /// `∫⟨∇φ, ∇ψ⟩ ds` with the same wide/compact average as [`Self::nabla_twice`],
    /// so that it matches `−∫⟨∇²φ, ψ⟩ ds` up to projection error.
    pub(crate) fn dirichlet_pairing(&self, geom: &CurveGeometry, phi: &[Vector], psi: &[Vector]) -> f64 {
        let m = &self.ambient;
        let wide = weighted_pairing(m, &self.nabla_once(geom, phi), &self.nabla_once(geom, psi), &geom.ds);
        let compact = weighted_pairing(m, &self.midpoint_flux(geom, phi), &self.midpoint_flux(geom, psi), &geom.chords);
        0.5 * (wide + compact)
    }

    /// `∇ʲφ`: pairs of derivatives use the averaged second-order stencil,
    /// a leftover odd derivative uses the wide first-order stencil.
    pub(crate) fn nabla_power(&self, geom: &CurveGeometry, phi: &[Vector], order: usize) -> Vec<Vector> {
        let mut cur = phi.to_vec();
        for _ in 0..order / 2 {
            cur = self.nabla_twice(geom, &cur);
        }
        if order % 2 == 1 {
            cur = self.nabla_once(geom, &cur);
        }
        cur
    }

    fn check_field_len(&self, field: &Field) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::InvalidField(format!(
                "field has {} values, curve has {} nodes",
                field.len(),
                self.len()
            )));
        }
        if let Some(v) = field.values.iter().find(|v| v.dim() != self.ambient.embedding_dim()) {
            return Err(Error::InvalidArgument(format!(
                "field value has {} coordinates, expected {}",
                v.dim(),
                self.ambient.embedding_dim()
            )));
        }
        Ok(())
    }

    /// Whether every value is tangent to the ambient.
    pub fn check_ambient_tangent(&self, field: &Field) -> bool {
        field.len() == self.len()
            && field.values.iter().zip(&self.points).all(|(v, p)| {
                self.ambient.normal_defect(p, v) <= FIELD_TOL * self.ambient.form_norm(v).max(1e-300)
                    || self.ambient.form_norm(v) == 0.0
            })
    }

    /// Whether every value is tangent to the ambient and orthogonal to the curve.
    pub fn check_curve_normal(&self, geom: &CurveGeometry, field: &Field) -> bool {
        self.check_ambient_tangent(field)
            && field.values.iter().zip(&geom.tangent).all(|(v, t)| {
                self.ambient.form(v, t).abs() <= FIELD_TOL * self.ambient.form_norm(v)
            })
    }

    pub fn unit_tangent(&self) -> Result<Field> {
        let geom = self.geometry()?;
        Ok(Field { values: geom.tangent, is_ambient_tangent: true, is_curve_normal: false })
    }

    /// Geodesic curvature `k = (M^⊤ − γ^⊤) ∂_s τ`.
    pub fn curvature(&self) -> Result<Field> {
        Ok(Field::normal(self.geometry()?.curvature))
    }

    /// `∇ʲφ` for a curve-normal field.
    pub fn nabla(&self, field: &Field, order: usize) -> Result<Field> {
        self.check_field_len(field)?;
        let geom = self.geometry()?;
        if !self.check_curve_normal(&geom, field) {
            return Err(Error::InvalidField("nabla expects a curve-normal field".into()));
        }
        Ok(Field::normal(self.nabla_power(&geom, &field.values, order)))
    }

    /// Pointwise projection onto `TM ∩ (Tγ)^⊥`.
    pub fn project_normal(&self, field: &Field) -> Result<Field> {
        self.check_field_len(field)?;
        let geom = self.geometry()?;
        Ok(Field::normal(
            (0..self.len()).map(|i| self.normal_part(&geom, i, &field.values[i])).collect(),
        ))
    }

    /// Pointwise projection onto `TM`.
    pub fn project_tangent(&self, field: &Field) -> Result<Field> {
        self.check_field_len(field)?;
        Ok(Field {
            values: field.values.iter().zip(&self.points).map(|(v, p)| self.ambient.project(p, v)).collect(),
            is_ambient_tangent: true,
            is_curve_normal: false,
        })
    }

    /// `(Σ wᵢ |vᵢ|^q)^{1/q}`.
    pub fn field_norm(&self, field: &Field, q: f64, measure: Measure) -> Result<f64> {
        self.check_field_len(field)?;
        if !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!("norm exponent must be ≥ 1, got {q}")));
        }
        let weights = match measure {
            Measure::Arclength => self.node_speeds()?.1,
            Measure::Parameter => vec![self.dx(); self.len()],
        };
        Ok(weighted_norm(&self.ambient, &field.values, &weights, q))
    }

    /// `L^{j+1−1/q} ‖∇ʲk‖_{L^q(ds)}`, invariant under dilations of `R^n`.
    pub fn scale_invariant_norm(&self, order: usize, q: f64) -> Result<f64> {
        let geom = self.geometry()?;
        Ok(self.scale_invariant_norm_with(&geom, order, q))
    }

    pub(crate) fn scale_invariant_norm_with(&self, geom: &CurveGeometry, order: usize, q: f64) -> f64 {
        let d = self.nabla_power(geom, &geom.curvature, order);
        geom.length.powf(order as f64 + 1.0 - 1.0 / q) * weighted_norm(&self.ambient, &d, &geom.ds, q)
    }

    /// `‖k‖_{n,q} = Σ_{j≤n} ‖∇ʲk‖_q`.
    pub fn sum_norm(&self, n: usize, q: f64) -> Result<f64> {
        let geom = self.geometry()?;
        Ok((0..=n).map(|j| self.scale_invariant_norm_with(&geom, j, q)).sum())
    }

    /// Pointwise exponential map along a tangent field.
    pub fn exp_field(&self, field: &Field) -> Result<DiscreteCurve> {
        self.check_field_len(field)?;
        let points = self
            .points
            .iter()
            .zip(&field.values)
            .map(|(p, v)| self.ambient.exp_map(p, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteCurve::from_points_unchecked(self.ambient.clone(), points))
    }

    /// Resamples the nodes at equal chord-arclength with a periodic cubic
    /// spline of the embedding coordinates, then retracts onto `M`.
    pub fn reparametrize_uniform(&self) -> Result<DiscreteCurve> {
        let n = self.len();
        let chords = self.chord_lengths();
        if let Some(i) = chords.iter().position(|c| !(*c > DEGENERATE_SPEED)) {
            return Err(Error::DegenerateCurve { node: i, speed: chords[i] * n as f64 });
        }
        let total: f64 = chords.iter().sum();
        let spline = PeriodicSpline::new(&self.points, &chords);
        let mut points = Vec::with_capacity(n);
        let mut seg = 0;
        let mut seg_start = 0.0;
        for j in 0..n {
            let t = total * j as f64 / n as f64;
            while seg + 1 < n && t >= seg_start + chords[seg] {
                seg_start += chords[seg];
                seg += 1;
            }
            let q = spline.eval(seg, t - seg_start);
            points.push(self.ambient.retract(&q)?);
        }
        Ok(DiscreteCurve::from_points_unchecked(self.ambient.clone(), points))
    }

    /// A smooth unit curve-normal frame, or `None` if the curve has no
    /// well-defined one (Euclidean `R^n`, n ≥ 3, with a degenerate reference).
    pub fn normal_frame(&self) -> Result<Vec<Vector>> {
        let geom = self.geometry()?;
        let m = &self.ambient;
        if m.manifold_dim() == 2 {
            return Ok((0..self.len())
                .map(|i| m.surface_conormal(&self.points[i], &geom.tangent[i]).expect("2-d ambient"))
                .collect());
        }
        // R^n: Gram–Schmidt a coordinate axis against τ, choosing the axis
        // that stays farthest from the tangent over all nodes.
        let dim = m.embedding_dim();
        let best_axis = (0..dim)
            .min_by(|&a, &b| {
                let worst = |axis: usize| geom.tangent.iter().map(|t| t[axis].abs()).fold(0.0, f64::max);
                worst(a).total_cmp(&worst(b))
            })
            .expect("dim ≥ 2");
        Ok(geom
            .tangent
            .iter()
            .map(|t| {
                let e = Vector::basis(dim, best_axis);
                let v = e.axpy(-t[best_axis], t);
                v.scale(1.0 / v.norm())
            })
            .collect())
    }

    /// Displaces each node along the normal frame by
    /// `amplitude · cos(2π mode xᵢ + φ)` through the exponential map, where
    /// the phase `φ` is zero for `seed == 0` and drawn from the seed otherwise.
    pub fn perturb_normal(&self, amplitude: f64, mode: u32, seed: u64) -> Result<DiscreteCurve> {
        let frame = self.normal_frame()?;
        let phase = if seed == 0 { 0.0 } else { ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..2.0 * PI) };
        let n = self.len();
        let values = frame
            .iter()
            .enumerate()
            .map(|(i, nu)| nu.scale(amplitude * (2.0 * PI * mode as f64 * i as f64 / n as f64 + phase).cos()))
            .collect();
        let moved = self.exp_field(&Field::new(values))?;
        DiscreteCurve::new(self.ambient.clone(), moved.points)
    }
}

pub(crate) fn weighted_norm(m: &AmbientModel, values: &[Vector], weights: &[f64], q: f64) -> f64 {
    let s: f64 = values.iter().zip(weights).map(|(v, w)| w * m.form_norm(v).powf(q)).sum();
    s.powf(1.0 / q)
}

/// `Σ ⟨aᵢ, bᵢ⟩ wᵢ` with the ambient form.
pub(crate) fn weighted_pairing(m: &AmbientModel, a: &[Vector], b: &[Vector], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| m.form(x, y) * w).sum()
}

/// Periodic cubic spline through the nodes, parametrized by cumulative chord.
struct PeriodicSpline<'a> {
    points: &'a [Point],
    h: &'a [f64],
    second: Vec<Vector>,
}

impl<'a> PeriodicSpline<'a> {
    fn new(points: &'a [Point], h: &'a [f64]) -> Self {
        let n = points.len();
        let prev = |i: usize| if i == 0 { n - 1 } else { i - 1 };
        let next = |i: usize| if i + 1 == n { 0 } else { i + 1 };
        // hᵢ₋₁ Mᵢ₋₁ + 2(hᵢ₋₁ + hᵢ) Mᵢ + hᵢ Mᵢ₊₁ = 6 (Δᵢ − Δᵢ₋₁)
        let lower: Vec<f64> = (0..n).map(|i| h[prev(i)]).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * (h[prev(i)] + h[i])).collect();
        let upper: Vec<f64> = h.to_vec();
        let rhs: Vec<Vector> = (0..n)
            .map(|i| {
                let fwd = (points[next(i)] - points[i]).scale(1.0 / h[i]);
                let bwd = (points[i] - points[prev(i)]).scale(1.0 / h[prev(i)]);
                (fwd - bwd).scale(6.0)
            })
            .collect();
        let second = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs);
        PeriodicSpline { points, h, second }
    }

    /// Value on segment `seg` at local offset `u ∈ [0, h_seg]`.
    fn eval(&self, seg: usize, u: f64) -> Vector {
        let n = self.points.len();
        let nx = if seg + 1 == n { 0 } else { seg + 1 };
        let h = self.h[seg];
        let (a, b) = (h - u, u);
        let (ma, mb) = (self.second[seg], self.second[nx]);
        ma.scale(a * a * a / (6.0 * h))
            + mb.scale(b * b * b / (6.0 * h))
            + (self.points[seg].scale(1.0 / h) - ma.scale(h / 6.0)).scale(a)
            + (self.points[nx].scale(1.0 / h) - mb.scale(h / 6.0)).scale(b)
    }
}

/// Solves a cyclic tridiagonal system (row i: `lᵢ xᵢ₋₁ + dᵢ xᵢ + uᵢ xᵢ₊₁`)
/// by Sherman–Morrison on top of the Thomas algorithm.
fn solve_cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[Vector]) -> Vec<Vector> {
    let n = diag.len();
    let alpha = upper[n - 1]; // corner (n-1, 0)
    let beta = lower[0]; // corner (0, n-1)
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;

    let thomas = |b: &[f64], r: &[Vector]| -> Vec<Vector> {
        let mut c = vec![0.0; n];
        let mut x = r.to_vec();
        let mut denom = b[0];
        c[0] = upper[0] / denom;
        x[0] = x[0].scale(1.0 / denom);
        for i in 1..n {
            denom = b[i] - lower[i] * c[i - 1];
            if i + 1 < n {
                c[i] = upper[i] / denom;
            }
            x[i] = (x[i] - x[i - 1].scale(lower[i])).scale(1.0 / denom);
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - x[i + 1].scale(c[i]);
        }
        x
    };

    let dim = rhs[0].dim();
    let y = thomas(&d, rhs);
    let mut u = vec![Vector::zeros(1); n];
    u[0] = Vector::from_slice(&[gamma]);
    u[n - 1] = Vector::from_slice(&[alpha]);
    let z = thomas(&d, &u);
    let (z0, zn) = (z[0][0], z[n - 1][0]);
    let denom = 1.0 + z0 + beta * zn / gamma;
    (0..n)
        .map(|i| {
            let mut factor = Vector::zeros(dim);
            for k in 0..dim {
                factor[k] = (y[0][k] + beta * y[n - 1][k] / gamma) / denom;
            }
            let mut out = y[i];
            for k in 0..dim {
                out[k] -= factor[k] * z[i][0];
            }
            out
        })
        .collect()
}

/// Standard test and scenario curves.
pub mod presets {
    use super::*;
    use crate::ambient::ProfileFunction;

    pub fn euclidean_circle(n: usize, radius: f64) -> Result<DiscreteCurve> {
        DiscreteCurve::from_fn(AmbientModel::euclidean(2)?, n, |t| Vector::new2(radius * t.cos(), radius * t.sin()))
    }

    pub fn euclidean_ellipse(n: usize, a: f64, b: f64) -> Result<DiscreteCurve> {
        DiscreteCurve::from_fn(AmbientModel::euclidean(2)?, n, |t| Vector::new2(a * t.cos(), b * t.sin()))
    }

    pub fn sphere_equator(n: usize) -> Result<DiscreteCurve> {
        DiscreteCurve::from_fn(AmbientModel::sphere(), n, |t| Vector::new3(t.cos(), t.sin(), 0.0))
    }

    /// Latitude circle at colatitude `theta`.
    pub fn sphere_latitude(n: usize, theta: f64) -> Result<DiscreteCurve> {
        let (s, c) = theta.sin_cos();
        DiscreteCurve::from_fn(AmbientModel::sphere(), n, |t| Vector::new3(s * t.cos(), s * t.sin(), c))
    }

    /// Geodesic circle of radius `rho` about the apex of the hyperboloid.
    pub fn hyperbolic_circle(n: usize, rho: f64) -> Result<DiscreteCurve> {
        let (s, c) = (rho.sinh(), rho.cosh());
        DiscreteCurve::from_fn(AmbientModel::hyperbolic(), n, |t| Vector::new3(s * t.cos(), s * t.sin(), c))
    }

    /// Latitude `{z = t0}` of a surface of revolution.
    pub fn revolution_latitude(n: usize, profile: ProfileFunction, t0: f64) -> Result<DiscreteCurve> {
        if t0 < profile.t_min() {
            return Err(Error::DomainExit { z: t0, t_min: profile.t_min() });
        }
        let r = profile.value(t0);
        DiscreteCurve::from_fn(AmbientModel::revolution(profile), n, |t| Vector::new3(r * t.cos(), r * t.sin(), t0))
    }

    /// Whether the ambient of a curve is the flat plane.
    pub fn is_planar(curve: &DiscreteCurve) -> bool {
        matches!(curve.ambient().kind(), AmbientKind::Euclidean { dim: 2 })
    }
}
