//! Flat-torus geometry: points, tangent vectors and 2x2 matrices.

use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Tangent vector (or lifted displacement) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

impl<T: Num + Copy> Vec2<T> {
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Real> Vec2<T> {
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise rotation by 90 degrees.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// Unsigned angle between the lines spanned by `self` and `o`, in `[0, pi/2]`.
    pub fn line_angle(self, o: Self) -> T {
        let c = self.cross(o).abs();
        let d = self.dot(o).abs();
        c.atan2(d)
    }

    /// Angle between the vectors, in `[0, pi]`.
    pub fn angle(self, o: Self) -> T {
        self.cross(o).abs().atan2(self.dot(o))
    }

    /// Distance between unit vectors up to sign.
    pub fn projective_dist(self, o: Self) -> T {
        let a = (self - o).norm();
        let b = (self + o).norm();
        a.min(b)
    }
}

impl<T: Num> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Num> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Num + Neg<Output = T>> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
///
/// Ring operations only need `Num`, so exact rational products work too.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T> Mat2<T> {
    pub const fn new(a: T, b: T, c: T, d: T) -> Self {
        Self { a, b, c, d }
    }
}

impl<T: Num + Clone> Mat2<T> {
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    /// Matrix with the given columns.
    pub fn from_cols(c0: Vec2<T>, c1: Vec2<T>) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn det(&self) -> T {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn trace(&self) -> T {
        self.a.clone() + self.d.clone()
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a.clone(), self.c.clone(), self.b.clone(), self.d.clone())
    }

    pub fn mul_vec(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.a.clone() * v.x.clone() + self.b.clone() * v.y.clone(),
            self.c.clone() * v.x + self.d.clone() * v.y,
        )
    }

    pub fn col0(&self) -> Vec2<T> {
        Vec2::new(self.a.clone(), self.c.clone())
    }

    pub fn col1(&self) -> Vec2<T> {
        Vec2::new(self.b.clone(), self.d.clone())
    }
}

impl<T: Num + Clone> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let Mat2 { a, b, c, d } = self;
        Self::new(
            a.clone() * o.a.clone() + b.clone() * o.c.clone(),
            a * o.b.clone() + b * o.d.clone(),
            c.clone() * o.a + d.clone() * o.c,
            c * o.b + d * o.d,
        )
    }
}

impl<T: Real> Mat2<T> {
    pub fn scale(&self, s: T) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn frobenius(&self) -> T {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    /// Both singular values, largest first.
    pub fn singular_values(&self) -> (T, T) {
        let det = self.det().abs();
        let p = (self.a - self.d).hypot(self.b + self.c);
        let q = (self.a + self.d).hypot(self.b - self.c);
        let smax = (p + q) * T::lit(0.5);
        let smin = if smax > T::zero() { det / smax } else { T::zero() };
        (smax, smin)
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> T {
        self.singular_values().0
    }

    /// Unit right singular vector for the largest singular value.
    pub fn top_right_singular(&self) -> Vec2<T> {
        // eigenvector of M^T M for its larger eigenvalue
        let g = self.transpose() * *self;
        let two = T::lit(2.0);
        let theta = (two * g.b).atan2(g.a - g.d) / two;
        Vec2::new(theta.cos(), theta.sin())
    }

    /// Real eigenvalues, larger modulus first, if the spectrum is real.
    pub fn real_eigenvalues(&self) -> Option<(T, T)> {
        self.real_eigenvalues_with_det(self.det())
    }

    /// [`Self::real_eigenvalues`] with a determinant known more accurately
    /// than `ad - bc`, e.g. for long products of unimodular matrices.
    pub fn real_eigenvalues_with_det(&self, det: T) -> Option<(T, T)> {
        let tr = self.trace();
        let disc = tr * tr - T::lit(4.0) * det;
        if disc < T::zero() {
            return None;
        }
        let s = disc.sqrt();
        // numerically stable root pair
        let big = if tr >= T::zero() { (tr + s) / T::lit(2.0) } else { (tr - s) / T::lit(2.0) };
        let small = if big != T::zero() { det / big } else { T::zero() };
        Some((big, small))
    }

    /// Unit eigenvector for eigenvalue `lambda`, choosing the better conditioned row.
    pub fn eigenvector(&self, lambda: T) -> Vec2<T> {
        let r0 = Vec2::new(self.b, lambda - self.a);
        let r1 = Vec2::new(lambda - self.d, self.c);
        let v = if r0.norm() >= r1.norm() { r0 } else { r1 };
        if v.norm() == T::zero() {
            return Vec2::new(T::one(), T::zero());
        }
        v.normalized()
    }
}

/// Point of the flat torus `R^2 / Z^2`, coordinates kept in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TorusPoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> TorusPoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x: x.wrap_unit(), y: y.wrap_unit() }
    }

    /// Shortest lifted displacement `other - self`, each coordinate in `[-1/2, 1/2]`.
    ///
    /// Coordinates live in `[0, 1)`, so the raw difference is in `(-1, 1)` and
    /// the shifts by one are exact; `p.displacement_to(q) == -q.displacement_to(p)`
    /// away from the antipodal tie.
    pub fn displacement_to(&self, other: &Self) -> Vec2<T> {
        Vec2::new(centered_diff(other.x, self.x), centered_diff(other.y, self.y))
    }

    /// Flat distance between nearest lifts.
    pub fn dist(&self, other: &Self) -> T {
        self.displacement_to(other).norm()
    }

    pub fn translate(&self, v: Vec2<T>) -> Self {
        Self::new(self.x + v.x, self.y + v.y)
    }

    pub fn as_vec(&self) -> Vec2<T> {
        Vec2::new(self.x, self.y)
    }
}

fn centered_diff<T: Real>(a: T, b: T) -> T {
    let d = a - b;
    let half = T::lit(0.5);
    if d > half {
        d - T::one()
    } else if d < -half {
        d + T::one()
    } else {
        d
    }
}

impl<T: Real> From<(T, T)> for TorusPoint<T> {
    fn from((x, y): (T, T)) -> Self {
        Self::new(x, y)
    }
}

/// Distance from `p` to the segment `[a, b]` given in a common lift.
pub fn point_segment_dist<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == T::zero() {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len2).max(T::zero()).min(T::one());
    (p - (a + ab.scale(t))).norm()
}
