//! Fixed-capacity coordinate vectors in the embedding space.
//!
//! Every ambient model lives in a low-dimensional embedding space, so points
//! and vectors are stored inline (`Copy`) instead of on the heap. The hot
//! loops of the flow touch millions of them per run.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Largest supported embedding dimension.
pub const MAX_DIM: usize = 8;

/// A vector (or point) in the embedding space `R^dim`. Coordinates past
/// `dim` are kept at zero so arithmetic can run over the whole array.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    c: [f64; MAX_DIM],
    dim: usize,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "embedding dimension {dim} exceeds {MAX_DIM}");
        Vector { c: [0.0; MAX_DIM], dim }
    }

    /// Builds a vector from a coordinate slice. Panics if the slice is longer
    /// than [`MAX_DIM`]; use [`Vector::try_from_slice`] for untrusted input.
    pub fn from_slice(coords: &[f64]) -> Self {
        Self::try_from_slice(coords).expect("embedding dimension too large")
    }

    pub fn try_from_slice(coords: &[f64]) -> Option<Self> {
        if coords.len() > MAX_DIM {
            return None;
        }
        let mut v = Vector::zeros(coords.len());
        v.c[..coords.len()].copy_from_slice(coords);
        Some(v)
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Self::from_slice(&[x, y])
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Self::from_slice(&[x, y, z])
    }

    /// Unit coordinate vector `e_axis`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = Vector::zeros(dim);
        v.c[axis] = 1.0;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    /// Euclidean dot product of the raw coordinates (ignores any ambient form).
    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        let mut s = 0.0;
        for i in 0..MAX_DIM {
            s += self.c[i] * other.c[i];
        }
        s
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn scale(&self, a: f64) -> Vector {
        let mut out = *self;
        for i in 0..MAX_DIM {
            out.c[i] *= a;
        }
        out
    }

    /// `self + a * other`
    #[inline]
    pub fn axpy(&self, a: f64, other: &Vector) -> Vector {
        let mut out = *self;
        for i in 0..MAX_DIM {
            out.c[i] += a * other.c[i];
        }
        out
    }

    /// Cross product; both operands must be three-dimensional.
    pub fn cross(&self, other: &Vector) -> Vector {
        debug_assert!(self.dim == 3 && other.dim == 3);
        let (a, b) = (&self.c, &other.c);
        Vector::new3(
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )
    }

    pub fn max_abs_diff(&self, other: &Vector) -> f64 {
        (*self - *other)
            .as_slice()
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        debug_assert!(i < self.dim);
        &self.c[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        assert!(i < self.dim, "coordinate {i} out of range for dimension {}", self.dim);
        &mut self.c[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(self, rhs: Vector) -> Vector {
        let mut out = self;
        for i in 0..MAX_DIM {
            out.c[i] += rhs.c[i];
        }
        out
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, rhs: Vector) {
        for i in 0..MAX_DIM {
            self.c[i] += rhs.c[i];
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(self, rhs: Vector) -> Vector {
        let mut out = self;
        for i in 0..MAX_DIM {
            out.c[i] -= rhs.c[i];
        }
        out
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, rhs: Vector) {
        for i in 0..MAX_DIM {
            self.c[i] -= rhs.c[i];
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(self, a: f64) -> Vector {
        self.scale(a)
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    #[inline]
    fn mul(self, v: Vector) -> Vector {
        v.scale(self)
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}
