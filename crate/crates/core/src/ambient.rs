//! Ambient Riemannian geometries realized as constraint sets in a
//! (pseudo-)Euclidean embedding space.
//!
//! Four models share one interface: flat `R^n`, the unit sphere `S^2 ⊂ R^3`,
//! the hyperbolic plane as the upper sheet of `{x² + y² − w² = −1}` in
//! `R^{2,1}`, and an analytic surface of revolution
//! `{x² + y² = f(z)²}` around the `z`-axis.
//!
//! The Levi-Civita connection of each model is the ambient flat derivative
//! followed by [`AmbientModel::tangent_project`]; all inner products are taken
//! with the model's bilinear form, so the hyperboloid reuses the same formulas
//! as the Riemannian hypersurfaces.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::{Vector, MAX_DIM};

pub type Point = Vector;

/// Constraint residual beyond which a point is rejected.
pub const POINT_TOL: f64 = 1e-8;
/// Relative tolerance for tangency checks.
pub const TANGENT_TOL: f64 = 1e-8;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Profile `z ↦ f(z)` of a surface of revolution, with its first three
/// derivatives supplied analytically.
#[derive(Clone)]
pub struct ProfileFunction {
    label: String,
    f: ScalarFn,
    df: ScalarFn,
    d2f: ScalarFn,
    d3f: ScalarFn,
    t_min: f64,
}

impl ProfileFunction {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d3f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t_min: f64,
    ) -> Result<Self> {
        if !(t_min > 0.0) {
            return Err(Error::InvalidArgument(format!("t_min must be positive, got {t_min}")));
        }
        let profile = ProfileFunction {
            label: label.into(),
            f: Arc::new(f),
            df: Arc::new(df),
            d2f: Arc::new(d2f),
            d3f: Arc::new(d3f),
            t_min,
        };
        if !(profile.value(t_min) > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile must be positive on [t_min, ∞), f({t_min}) = {}",
                profile.value(t_min)
            )));
        }
        Ok(profile)
    }

    /// `f(t) = 1 + 1/t`, the escaping-flow example.
    pub fn inverse(t_min: f64) -> Result<Self> {
        Self::new(
            "1+1/t",
            |t| 1.0 + 1.0 / t,
            |t| -1.0 / (t * t),
            |t| 2.0 / (t * t * t),
            |t| -6.0 / (t * t * t * t),
            t_min,
        )
    }

    /// Constant profile: a round cylinder of the given radius (flat).
    pub fn constant(radius: f64, t_min: f64) -> Result<Self> {
        Self::new("const", move |_| radius, |_| 0.0, |_| 0.0, |_| 0.0, t_min)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    #[inline]
    pub fn d1(&self, t: f64) -> f64 {
        (self.df)(t)
    }

    #[inline]
    pub fn d2(&self, t: f64) -> f64 {
        (self.d2f)(t)
    }

    #[inline]
    pub fn d3(&self, t: f64) -> f64 {
        (self.d3f)(t)
    }

    /// Gaussian curvature `K(z) = −f''/(f (1 + f'²)²)` of the surface.
    pub fn gaussian_curvature(&self, z: f64) -> f64 {
        let (f, f1, f2) = (self.value(z), self.d1(z), self.d2(z));
        let a = 1.0 + f1 * f1;
        -f2 / (f * a * a)
    }

    /// Analytic `dK/dz`.
    pub fn gaussian_curvature_dz(&self, z: f64) -> f64 {
        let (f, f1, f2, f3) = (self.value(z), self.d1(z), self.d2(z), self.d3(z));
        let a = 1.0 + f1 * f1;
        let d = f * a * a;
        let dd = f1 * a * a + 4.0 * f * a * f1 * f2;
        -f3 / d + f2 * dd / (d * d)
    }
}

impl fmt::Debug for ProfileFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileFunction")
            .field("label", &self.label)
            .field("t_min", &self.t_min)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum AmbientKind {
    Euclidean { dim: usize },
    Sphere2,
    Hyperbolic2,
    Revolution(ProfileFunction),
}

/// An ambient manifold with its embedding and bilinear form.
#[derive(Clone, Debug)]
pub struct AmbientModel {
    kind: AmbientKind,
}

impl AmbientModel {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidArgument(format!(
                "Euclidean dimension must lie in 2..={MAX_DIM}, got {dim}"
            )));
        }
        Ok(AmbientModel { kind: AmbientKind::Euclidean { dim } })
    }

    pub fn sphere() -> Self {
        AmbientModel { kind: AmbientKind::Sphere2 }
    }

    pub fn hyperbolic() -> Self {
        AmbientModel { kind: AmbientKind::Hyperbolic2 }
    }

    pub fn revolution(profile: ProfileFunction) -> Self {
        AmbientModel { kind: AmbientKind::Revolution(profile) }
    }

    pub fn kind(&self) -> &AmbientKind {
        &self.kind
    }

    pub fn embedding_dim(&self) -> usize {
        match self.kind {
            AmbientKind::Euclidean { dim } => dim,
            _ => 3,
        }
    }

    /// Intrinsic dimension of the manifold.
    pub fn manifold_dim(&self) -> usize {
        match self.kind {
            AmbientKind::Euclidean { dim } => dim,
            _ => 2,
        }
    }

    /// Signs of the diagonal bilinear form, one per embedding coordinate.
    pub fn form_signature(&self) -> Vec<f64> {
        let mut s = vec![1.0; self.embedding_dim()];
        if let AmbientKind::Hyperbolic2 = self.kind {
            s[2] = -1.0;
        }
        s
    }

    /// Short identifier used in snapshot files.
    pub fn name(&self) -> String {
        match &self.kind {
            AmbientKind::Euclidean { dim } => format!("euclidean{dim}"),
            AmbientKind::Sphere2 => "sphere2".to_string(),
            AmbientKind::Hyperbolic2 => "hyperbolic2".to_string(),
            AmbientKind::Revolution(_) => "revolution".to_string(),
        }
    }

    pub fn profile(&self) -> Option<&ProfileFunction> {
        match &self.kind {
            AmbientKind::Revolution(p) => Some(p),
            _ => None,
        }
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.dim() != self.embedding_dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.embedding_dim(),
                v.dim()
            )));
        }
        Ok(())
    }

    /// The ambient bilinear form `Σ sᵢ uᵢ vᵢ`.
    pub fn inner(&self, u: &Vector, v: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        Ok(self.form(u, v))
    }

    /// Unchecked bilinear form for inner loops.
    #[inline]
    pub fn form(&self, u: &Vector, v: &Vector) -> f64 {
        match self.kind {
            AmbientKind::Hyperbolic2 => u[0] * v[0] + u[1] * v[1] - u[2] * v[2],
            _ => u.dot(v),
        }
    }

    /// `sqrt(|⟨v, v⟩|)`; tangent and chord vectors of the hyperboloid are
    /// spacelike, so this is their length.
    #[inline]
    pub fn form_norm(&self, v: &Vector) -> f64 {
        self.form(v, v).abs().sqrt()
    }

    /// Signed residual of the defining constraint; zero on the manifold.
    pub fn constraint_residual(&self, p: &Point) -> f64 {
        match &self.kind {
            AmbientKind::Euclidean { .. } => 0.0,
            AmbientKind::Sphere2 => p.dot(p) - 1.0,
            AmbientKind::Hyperbolic2 => {
                if p[2] <= 0.0 {
                    f64::INFINITY
                } else {
                    self.form(p, p) + 1.0
                }
            }
            AmbientKind::Revolution(prof) => {
                if p[2] < prof.t_min() {
                    f64::INFINITY
                } else {
                    let r = prof.value(p[2]);
                    p[0] * p[0] + p[1] * p[1] - r * r
                }
            }
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        self.check_dim(p)?;
        if let AmbientKind::Revolution(prof) = &self.kind {
            if p[2] < prof.t_min() {
                return Err(Error::DomainExit { z: p[2], t_min: prof.t_min() });
            }
        }
        let residual = self.constraint_residual(p);
        if !(residual.abs() <= POINT_TOL) {
            return Err(Error::InvalidPoint { residual });
        }
        Ok(())
    }

    /// Unit normal of a hypersurface model (form-normal to `T_pM`).
    /// `None` for flat space, which has no normal direction.
    #[inline]
    pub fn unit_normal(&self, p: &Point) -> Option<Vector> {
        match &self.kind {
            AmbientKind::Euclidean { .. } => None,
            AmbientKind::Sphere2 | AmbientKind::Hyperbolic2 => Some(*p),
            AmbientKind::Revolution(prof) => {
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let f1 = prof.d1(p[2]);
                let c = 1.0 / (1.0 + f1 * f1).sqrt();
                Some(Vector::new3(-p[0] / rho * c, -p[1] / rho * c, f1 * c))
            }
        }
    }

    /// Form-orthogonal projection of `v` onto `T_pM`, no validation.
    #[inline]
    pub fn project(&self, p: &Point, v: &Vector) -> Vector {
        match &self.kind {
            AmbientKind::Euclidean { .. } => *v,
            AmbientKind::Sphere2 => v.axpy(-v.dot(p), p),
            // ⟨p, p⟩ = −1 so the normal component is −⟨v, p⟩ p.
            AmbientKind::Hyperbolic2 => v.axpy(self.form(v, p), p),
            AmbientKind::Revolution(_) => {
                let n = self.unit_normal(p).expect("surface normal");
                v.axpy(-v.dot(&n), &n)
            }
        }
    }

    /// Applies the metric `G`, turning a coordinate gradient into a vector
    /// (and back, since `G² = I`).
    #[inline]
    pub(crate) fn lower(&self, v: &Vector) -> Vector {
        match self.kind {
            AmbientKind::Hyperbolic2 => {
                let mut w = *v;
                w[2] = -w[2];
                w
            }
            _ => *v,
        }
    }

    /// Pullback of a covector `g` through `(p, v) ↦ project(p, v)`.
    /// Returns `(∂/∂p, ∂/∂v)` in coordinates.
    pub(crate) fn project_vjp(&self, p: &Point, v: &Vector, g: &Vector) -> (Vector, Vector) {
        match &self.kind {
            AmbientKind::Euclidean { .. } => (Vector::zeros(v.dim()), *g),
            AmbientKind::Sphere2 => {
                let (pv, pg) = (p.dot(v), p.dot(g));
                (g.scale(-pv).axpy(-pg, v), g.axpy(-pg, p))
            }
            AmbientKind::Hyperbolic2 => {
                let (pv, pg) = (self.form(p, v), p.dot(g));
                (g.scale(pv).axpy(pg, &self.lower(v)), g.axpy(pg, &self.lower(p)))
            }
            AmbientKind::Revolution(prof) => {
                let nu = self.unit_normal(p).expect("surface normal");
                let (nv, ng) = (nu.dot(v), nu.dot(g));
                let nu_bar = g.scale(-nv).axpy(-ng, v);
                let f1 = prof.d1(p[2]);
                let m_bar = nu_bar.axpy(-nu.dot(&nu_bar), &nu).scale(1.0 / (1.0 + f1 * f1).sqrt());
                let (x, y) = (p[0], p[1]);
                let rho = (x * x + y * y).sqrt();
                let r3 = rho * rho * rho;
                let pb = Vector::new3(
                    (-m_bar[0] * y * y + m_bar[1] * x * y) / r3,
                    (m_bar[0] * x * y - m_bar[1] * x * x) / r3,
                    m_bar[2] * prof.d2(p[2]),
                );
                (pb, g.axpy(-ng, &nu))
            }
        }
    }

    pub fn tangent_project(&self, p: &Point, v: &Vector) -> Result<Vector> {
        self.check_point(p)?;
        self.check_dim(v)?;
        Ok(self.project(p, v))
    }

    /// Size of the normal component of `v` at `p`.
    pub fn normal_defect(&self, p: &Point, v: &Vector) -> f64 {
        match &self.kind {
            AmbientKind::Euclidean { .. } => 0.0,
            _ => self.form_norm(&(*v - self.project(p, v))),
        }
    }

    pub fn is_tangent(&self, p: &Point, v: &Vector) -> bool {
        self.normal_defect(p, v) <= TANGENT_TOL * (1.0 + self.form_norm(v))
    }

    fn check_tangent(&self, p: &Point, v: &Vector, what: &str) -> Result<()> {
        self.check_dim(v)?;
        if !self.is_tangent(p, v) {
            return Err(Error::InvalidArgument(format!(
                "{what} is not tangent (normal component {:.3e})",
                self.normal_defect(p, v)
            )));
        }
        Ok(())
    }

    /// Maps an ambient point near `M` back onto `M`.
    pub fn retract(&self, q: &Vector) -> Result<Point> {
        self.check_dim(q)?;
        match &self.kind {
            AmbientKind::Euclidean { .. } => Ok(*q),
            AmbientKind::Sphere2 => {
                let n = q.norm();
                if !(n > 0.0) || !n.is_finite() {
                    return Err(Error::RetractionFailure("zero vector cannot be normalized".into()));
                }
                Ok(q.scale(1.0 / n))
            }
            AmbientKind::Hyperbolic2 => {
                let n2 = self.form(q, q);
                if !(n2 < 0.0) || q[2] <= 0.0 {
                    return Err(Error::RetractionFailure(format!(
                        "point is not timelike on the upper sheet (⟨q,q⟩ = {n2:.3e})"
                    )));
                }
                Ok(q.scale(1.0 / (-n2).sqrt()))
            }
            AmbientKind::Revolution(prof) => {
                let z = q[2];
                if !(z >= prof.t_min()) {
                    return Err(Error::RetractionFailure(format!(
                        "z = {z} below the profile domain t_min = {}",
                        prof.t_min()
                    )));
                }
                let rho = (q[0] * q[0] + q[1] * q[1]).sqrt();
                if !(rho > 0.0) {
                    return Err(Error::RetractionFailure("point on the axis of revolution".into()));
                }
                let s = prof.value(z) / rho;
                Ok(Vector::new3(q[0] * s, q[1] * s, z))
            }
        }
    }

    /// Riemannian exponential map `exp_p(v)`.
    pub fn exp_map(&self, p: &Point, v: &Vector) -> Result<Point> {
        self.check_point(p)?;
        self.check_tangent(p, v, "exp_map direction")?;
        let len = self.form_norm(v);
        if len == 0.0 {
            return Ok(*p);
        }
        match &self.kind {
            AmbientKind::Euclidean { .. } => Ok(*p + *v),
            AmbientKind::Sphere2 => Ok(p.scale(len.cos()).axpy(len.sin() / len, v)),
            AmbientKind::Hyperbolic2 => Ok(p.scale(len.cosh()).axpy(len.sinh() / len, v)),
            AmbientKind::Revolution(prof) => self.revolution_geodesic(prof, p, v, len),
        }
    }

    /// Integrates the constrained geodesic equation `x'' = λ ∇F` for the
    /// level set `F = x² + y² − f(z)² = 0` over unit time with RK4.
    fn revolution_geodesic(&self, prof: &ProfileFunction, p: &Point, v: &Vector, len: f64) -> Result<Point> {
        let accel = |x: &Vector, u: &Vector| -> Result<Vector> {
            let z = x[2];
            if !(z >= prof.t_min()) {
                return Err(Error::DomainExit { z, t_min: prof.t_min() });
            }
            let (f, f1, f2) = (prof.value(z), prof.d1(z), prof.d2(z));
            let grad = Vector::new3(2.0 * x[0], 2.0 * x[1], -2.0 * f * f1);
            let hess = 2.0 * u[0] * u[0] + 2.0 * u[1] * u[1] - 2.0 * (f1 * f1 + f * f2) * u[2] * u[2];
            Ok(grad.scale(-hess / grad.dot(&grad)))
        };
        let steps = (32.0 * len.max(1.0)).ceil() as usize;
        let h = 1.0 / steps as f64;
        let (mut x, mut u) = (*p, *v);
        for _ in 0..steps {
            let a1 = accel(&x, &u)?;
            let (x2, u2) = (x.axpy(0.5 * h, &u), u.axpy(0.5 * h, &a1));
            let a2 = accel(&x2, &u2)?;
            let (x3, u3) = (x.axpy(0.5 * h, &u2), u.axpy(0.5 * h, &a2));
            let a3 = accel(&x3, &u3)?;
            let (x4, u4) = (x.axpy(h, &u3), u.axpy(h, &a3));
            let a4 = accel(&x4, &u4)?;
            let xn = x + (u + u2 * 2.0 + u3 * 2.0 + u4) * (h / 6.0);
            let un = u + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
            if xn[2] < prof.t_min() {
                return Err(Error::DomainExit { z: xn[2], t_min: prof.t_min() });
            }
            x = self.retract(&xn)?;
            u = self.project(&x, &un);
        }
        Ok(x)
    }

    /// Sectional curvature at `p` (constant for the space forms).
    #[inline]
    pub fn curvature_at(&self, p: &Point) -> f64 {
        match &self.kind {
            AmbientKind::Euclidean { .. } => 0.0,
            AmbientKind::Sphere2 => 1.0,
            AmbientKind::Hyperbolic2 => -1.0,
            AmbientKind::Revolution(prof) => prof.gaussian_curvature(p[2]),
        }
    }

    /// Gaussian curvature `K(p)`; for the surface of revolution this is
    /// `−f''(z)/(f(z)(1 + f'(z)²)²)`.
    pub fn gaussian_curvature(&self, p: &Point) -> Result<f64> {
        self.check_point(p)?;
        Ok(self.curvature_at(p))
    }

    /// `dK(W)` at `p`.
    #[inline]
    pub fn curvature_derivative_at(&self, p: &Point, w: &Vector) -> f64 {
        match &self.kind {
            AmbientKind::Revolution(prof) => prof.gaussian_curvature_dz(p[2]) * w[2],
            _ => 0.0,
        }
    }

    /// `K (⟨Y,Z⟩X − ⟨X,Z⟩Y)` without validation.
    #[inline]
    pub fn riemann_unchecked(&self, p: &Point, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let k = self.curvature_at(p);
        if k == 0.0 {
            return Vector::zeros(x.dim());
        }
        x.scale(k * self.form(y, z)).axpy(-k * self.form(x, z), y)
    }

    /// Riemann tensor action `R(X,Y)Z = K (⟨Y,Z⟩X − ⟨X,Z⟩Y)`, with the
    /// four-tensor convention `R(X,Y,Z,W) = ⟨R(Z,W)Y, X⟩`.
    pub fn riemann_apply(&self, p: &Point, x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
        self.check_point(p)?;
        self.check_tangent(p, x, "X")?;
        self.check_tangent(p, y, "Y")?;
        self.check_tangent(p, z, "Z")?;
        Ok(self.riemann_unchecked(p, x, y, z))
    }

    #[inline]
    pub fn riemann_derivative_unchecked(&self, p: &Point, w: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let dk = self.curvature_derivative_at(p, w);
        if dk == 0.0 {
            return Vector::zeros(x.dim());
        }
        x.scale(dk * self.form(y, z)).axpy(-dk * self.form(x, z), y)
    }

    /// Covariant derivative `(D_W R)(X,Y)Z = dK(W) (⟨Y,Z⟩X − ⟨X,Z⟩Y)`; zero on
    /// the space forms.
    pub fn riemann_derivative_apply(
        &self,
        p: &Point,
        w: &Vector,
        x: &Vector,
        y: &Vector,
        z: &Vector,
    ) -> Result<Vector> {
        self.check_point(p)?;
        self.check_tangent(p, w, "W")?;
        self.check_tangent(p, x, "X")?;
        self.check_tangent(p, y, "Y")?;
        self.check_tangent(p, z, "Z")?;
        Ok(self.riemann_derivative_unchecked(p, w, x, y, z))
    }

    /// Unit vector in `T_pM` that is form-orthogonal to the unit tangent
    /// `tau`. Only defined for two-dimensional ambients.
    pub(crate) fn surface_conormal(&self, p: &Point, tau: &Vector) -> Option<Vector> {
        let raw = match &self.kind {
            AmbientKind::Euclidean { dim: 2 } => Vector::new2(-tau[1], tau[0]),
            AmbientKind::Euclidean { .. } => return None,
            AmbientKind::Sphere2 => p.cross(tau),
            AmbientKind::Hyperbolic2 => {
                let c = p.cross(tau);
                Vector::new3(c[0], c[1], -c[2])
            }
            AmbientKind::Revolution(_) => self.unit_normal(p)?.cross(tau),
        };
        let n = self.form_norm(&raw);
        Some(raw.scale(1.0 / n))
    }
}
