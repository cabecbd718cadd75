//! Power-law angular collision kernel in closed form.
//!
//! The cross section is B(|v - v*|, theta) = |v - v*|^gamma * b(theta) with
//! b(theta) = |theta|^(-1-nu) on [-pi/2, pi/2] \ {0}. Fixing the power law
//! exactly gives closed forms for the tail integral G, its inverse
//! (the angle substitution), and their derivatives, which in turn make the
//! jump-chain sampler quadrature-free. The deviation matrix
//! A(theta) = (R_theta - I)/2 encodes the post-collision jump
//! v' = v + A(theta)(v - v*).

use alloc::format;
use alloc::string::String;

use crate::algebra::{Mat2, Vec2};
use crate::error::{Error, Result};
use crate::math::{cos, exp, fabs, pow, sin, sqrt};
use crate::quad::{adaptive_integrate, integrate_endpoint_singular};

pub const HALF_PI: f64 = core::f64::consts::FRAC_PI_2;

/// The kernel parameter triple (gamma, nu, eta0) with the exponential-moment
/// exponent delta and, when the configuration came from an inverse-power-law
/// potential, the index s it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    gamma: f64,
    nu: f64,
    delta: f64,
    eta0: f64,
    s: Option<f64>,
    /// Cached (pi/2)^(-nu); on the event loop's hot path.
    tail_offset: f64,
}

impl KernelParams {
    /// Validates the admissibility chain
    /// 0 < gamma < 1, 0 < nu < 1/2, gamma v nu < delta < 1,
    /// 1/delta < eta0 < 1/(gamma v nu).
    pub fn new(gamma: f64, nu: f64, delta: f64, eta0: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::config(format!("gamma = {gamma} violates 0 < gamma < 1")));
        }
        if !(nu > 0.0 && nu < 0.5) {
            return Err(Error::config(format!("nu = {nu} violates 0 < nu < 1/2")));
        }
        let base = gamma.max(nu);
        if !(delta > base && delta < 1.0) {
            return Err(Error::config(format!(
                "delta = {delta} violates gamma v nu < delta < 1 (gamma v nu = {base})"
            )));
        }
        if !(eta0 > 1.0 / delta && eta0 < 1.0 / base) {
            return Err(Error::config(format!(
                "eta0 = {eta0} violates 1/delta < eta0 < 1/(gamma v nu) = ({}, {})",
                1.0 / delta,
                1.0 / base
            )));
        }
        Ok(KernelParams {
            gamma,
            nu,
            delta,
            eta0,
            s: None,
            tail_offset: pow(HALF_PI, -nu),
        })
    }

    /// Derives gamma = (s-5)/(s-1), nu = 2/(s-1) from an inverse-power-law
    /// index s > 5, with delta and eta0 at the midpoints of their admissible
    /// ranges.
    pub fn from_s(s: f64) -> Result<Self> {
        if !(s > 5.0) {
            return Err(Error::config(format!("s = {s} violates s > 5 (hard potentials)")));
        }
        let gamma = (s - 5.0) / (s - 1.0);
        let nu = 2.0 / (s - 1.0);
        let base = gamma.max(nu);
        let delta = 0.5 * (base + 1.0);
        let eta0 = 0.5 * (1.0 / delta + 1.0 / base);
        let mut params = Self::new(gamma, nu, delta, eta0)?;
        params.s = Some(s);
        Ok(params)
    }

    /// As [`Self::new`] but keeping the derived-from-s tag.
    pub fn with_overrides(s: f64, delta: Option<f64>, eta0: Option<f64>) -> Result<Self> {
        let defaults = Self::from_s(s)?;
        let delta = delta.unwrap_or(defaults.delta);
        let eta0 = eta0.unwrap_or(defaults.eta0);
        let mut params = Self::new(defaults.gamma, defaults.nu, delta, eta0)?;
        params.s = Some(s);
        Ok(params)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn s(&self) -> Option<f64> {
        self.s
    }

    /// (pi/2)^(-nu), the additive constant in the closed-form tail integral.
    pub fn tail_offset(&self) -> f64 {
        self.tail_offset
    }

    /// b(theta) = |theta|^(-1-nu). Errors at the non-integrable point
    /// theta = 0 and outside [-pi/2, pi/2].
    pub fn eval_b(&self, theta: f64) -> Result<f64> {
        if theta == 0.0 {
            return Err(Error::domain(String::from(
                "b(0) is a non-integrable singularity",
            )));
        }
        if fabs(theta) > HALF_PI {
            return Err(Error::domain(format!("theta = {theta} outside [-pi/2, pi/2]")));
        }
        Ok(pow(fabs(theta), -1.0 - self.nu))
    }

    /// Tail integral G(x) = (x^(-nu) - (pi/2)^(-nu)) / nu on (0, pi/2].
    pub fn eval_g(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= HALF_PI) {
            return Err(Error::domain(format!("G requires x in (0, pi/2], got {x}")));
        }
        Ok((pow(x, -self.nu) - self.tail_offset()) / self.nu)
    }

    /// Inverse of the tail integral, extended oddly and by continuity:
    /// vartheta(z) = sign(z) (nu |z| + (pi/2)^(-nu))^(-1/nu), vartheta(0) = pi/2.
    pub fn vartheta(&self, z: f64) -> f64 {
        if z == 0.0 {
            return HALF_PI;
        }
        let mag = pow(self.nu * fabs(z) + self.tail_offset(), -1.0 / self.nu);
        if z > 0.0 {
            mag
        } else {
            -mag
        }
    }

    /// First or second derivative of vartheta for z > 0.
    pub fn vartheta_deriv(&self, z: f64, order: u32) -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::domain(format!("vartheta derivatives need z > 0, got {z}")));
        }
        let base = self.nu * z + self.tail_offset();
        match order {
            1 => Ok(-pow(base, -1.0 / self.nu - 1.0)),
            2 => Ok((1.0 + self.nu) * pow(base, -1.0 / self.nu - 2.0)),
            _ => Err(Error::domain(format!(
                "vartheta derivative order {order} unsupported (orders 1 and 2 only)"
            ))),
        }
    }

    /// Collision drift integral
    /// Delta(V, v) = int (exp(|V + A(theta)(V-v)|^kappa) - exp(|V|^kappa)) b(theta) dtheta
    /// over [-pi/2, pi/2], split at the angular singularity: the outer pieces
    /// go to the adaptive rule, the inner piece pairs +/-theta so the odd
    /// first-order term cancels and the remaining even part (order
    /// theta^kappa or better) feeds the dyadic endpoint integrator.
    pub fn drift_integral(&self, big_v: Vec2, v: Vec2, kappa: f64, abs_tol: f64) -> Result<f64> {
        if !(kappa > self.nu && kappa < 1.0) {
            return Err(Error::domain(format!(
                "kappa = {kappa} violates nu < kappa < 1 (nu = {})",
                self.nu
            )));
        }
        let w = big_v - v;
        if w.norm_sq() == 0.0 {
            // A(theta) * 0 = 0: the jump vanishes identically.
            return Ok(0.0);
        }
        let base = exp(pow(big_v.norm(), kappa));
        let jump = |theta: f64| -> f64 {
            let shifted = big_v + DeviationMatrix::new(theta).matrix().mul_vec(w);
            exp(pow(shifted.norm(), kappa)) - base
        };
        let h = 0.05_f64.min(HALF_PI / 4.0);
        let nu = self.nu;
        let outer = adaptive_integrate(
            |theta| jump(theta) * pow(fabs(theta), -1.0 - nu),
            h,
            HALF_PI,
            abs_tol / 4.0,
            60,
        )?;
        let outer_neg = adaptive_integrate(
            |theta| jump(theta) * pow(fabs(theta), -1.0 - nu),
            -HALF_PI,
            -h,
            abs_tol / 4.0,
            60,
        )?;
        let inner = integrate_endpoint_singular(
            |theta| jump(theta) + jump(-theta),
            h,
            nu,
            abs_tol / 2.0,
        )?;
        Ok(outer.value + outer_neg.value + inner.value)
    }
}

/// Deviation matrix A(theta) = (R_theta - I)/2 for theta in [-pi/2, pi/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationMatrix {
    theta: f64,
    matrix: Mat2,
}

impl DeviationMatrix {
    pub fn new(theta: f64) -> Self {
        let (s, c) = (sin(theta), cos(theta));
        DeviationMatrix {
            theta,
            matrix: Mat2::new(0.5 * (c - 1.0), -0.5 * s, 0.5 * s, 0.5 * (c - 1.0)),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> Mat2 {
        self.matrix
    }

    /// I + A(theta); always invertible on [-pi/2, pi/2] since
    /// det = (1 + cos theta)/2 > 0.
    pub fn one_plus(&self) -> Mat2 {
        self.matrix + Mat2::IDENTITY
    }

    /// Closed-form inverse of I + A(theta): the matrix is a scaled rotation
    /// [[a, -b], [b, a]], so the inverse is its transpose over a^2 + b^2.
    pub fn one_plus_inverse(&self) -> Mat2 {
        let m = self.one_plus();
        let scale = m.a * m.a + m.c * m.c;
        Mat2::new(m.a / scale, m.c / scale, -m.c / scale, m.a / scale)
    }
}

/// Entrywise derivative A'(theta) = R'_theta / 2.
pub fn deviation_matrix_deriv(theta: f64) -> Mat2 {
    let (s, c) = (sin(theta), cos(theta));
    Mat2::new(-0.5 * s, -0.5 * c, 0.5 * c, -0.5 * s)
}

/// Post-collision velocity v' = v + A(theta)(v - v*).
pub fn post_collision(v: Vec2, v_star: Vec2, theta: f64) -> Vec2 {
    v + DeviationMatrix::new(theta).matrix().mul_vec(v - v_star)
}

/// The same velocity via the rotation form (v + v*)/2 + R_theta (v - v*)/2.
pub fn post_collision_rotation_form(v: Vec2, v_star: Vec2, theta: f64) -> Vec2 {
    let center = (v + v_star) * 0.5;
    let half_rel = (v - v_star) * 0.5;
    let (s, c) = (sin(theta), cos(theta));
    center + Vec2::new(c * half_rel.x - s * half_rel.y, s * half_rel.x + c * half_rel.y)
}

/// sqrt((1 - cos theta)/2), the contraction factor in |A(theta)X| = factor * |X|.
pub fn deviation_factor(theta: f64) -> f64 {
    sqrt(0.5 * (1.0 - cos(theta)))
}
