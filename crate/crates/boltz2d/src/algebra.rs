//! Plain 2-vector and 2x2 matrix arithmetic.
//!
//! Everything downstream (collision geometry, tangent flows, covariance
//! matrices) is two-dimensional, so a hand-rolled pair of types beats a
//! general linear-algebra dependency here.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        sqrt(self.norm_sq())
    }

    /// Outer product self * other^T.
    pub fn outer(self, other: Vec2) -> Mat2 {
        Mat2 {
            a: self.x * other.x,
            b: self.x * other.y,
            c: self.y * other.x,
            d: self.y * other.y,
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix [[a, b], [c, d]].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };
    pub const ZERO: Mat2 = Mat2 { a: 0.0, b: 0.0, c: 0.0, d: 0.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn transpose(self) -> Mat2 {
        Mat2 { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(self) -> f64 {
        self.a + self.d
    }

    pub fn scale(self, s: f64) -> Mat2 {
        Mat2 { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }

    pub fn inverse(self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2 { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det })
    }

    /// Frobenius norm squared.
    pub fn frob_sq(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// Operator (spectral) norm: the largest singular value, via the
    /// cancellation-free 2x2 formula sigma_max = (h1 + h2)/2 with
    /// h1 = |(a+d, b-c)| and h2 = |(a-d, b+c)|. Exact to round-off even for
    /// scaled rotations, where the naive characteristic-polynomial route
    /// loses half the digits.
    pub fn op_norm(self) -> f64 {
        let h1 = crate::math::sqrt(
            (self.a + self.d) * (self.a + self.d) + (self.b - self.c) * (self.b - self.c),
        );
        let h2 = crate::math::sqrt(
            (self.a - self.d) * (self.a - self.d) + (self.b + self.c) * (self.b + self.c),
        );
        0.5 * (h1 + h2)
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn sym_eigenvalues(self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let diff = 0.5 * (self.a - self.d);
        let off = 0.5 * (self.b + self.c);
        let r = sqrt(diff * diff + off * off);
        (half_tr - r, half_tr + r)
    }

    pub fn is_symmetric(self, tol: f64) -> bool {
        (self.b - self.c).abs() <= tol
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.mul_vec(v)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2 { a: self.a + rhs.a, b: self.b + rhs.b, c: self.c + rhs.c, d: self.d + rhs.d }
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2 { a: self.a - rhs.a, b: self.b - rhs.b, c: self.c - rhs.c, d: self.d - rhs.d }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let m = Mat2::new(2.0, 1.0, -0.5, 3.0);
        let inv = m.inverse().unwrap();
        let id = m * inv;
        assert!((id.a - 1.0).abs() < 1e-14 && (id.d - 1.0).abs() < 1e-14);
        assert!(id.b.abs() < 1e-14 && id.c.abs() < 1e-14);
    }

    #[test]
    fn op_norm_of_scaled_rotation() {
        // [[a, -b], [b, a]] has both singular values equal to sqrt(a^2+b^2).
        let (a, b) = (0.6, 0.8);
        let m = Mat2::new(a, -b, b, a);
        assert!((m.op_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sym_eigenvalues_diagonal() {
        let m = Mat2::new(2.0, 0.0, 0.0, 5.0);
        let (lo, hi) = m.sym_eigenvalues();
        assert_eq!((lo, hi), (2.0, 5.0));
    }

    #[test]
    fn outer_product_is_rank_one() {
        let v = Vec2::new(3.0, -1.0);
        let m = v.outer(v);
        assert!(m.det().abs() < 1e-14);
        assert!((m.trace() - v.norm_sq()).abs() < 1e-14);
    }
}
