//! Smooth cutoff and localization functions.
//!
//! `phi` is the convolution of the clamp x -> (x v 2eps) ^ Gamma_eps with the
//! normalized bump chi(x) = c exp(-1/(1-x^2)) on (-1,1), scaled to width eps.
//! It is flat at 2eps near zero, the identity on [3eps, Gamma_eps - 1], and
//! capped at Gamma_eps = [log(1/eps)]^eta0 beyond Gamma_eps + 1; this is what
//! bounds the jump rate of the truncated dynamics. The angular indicators
//! I_zeta, U_zeta and the localization pair Phi_eps, Psi are quintic
//! smoothsteps with the plateau/support layout required by the tangent-flow
//! calculus; C^2 regularity is enough for every first-order object computed
//! in this crate.

use alloc::format;

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::math::{exp, fabs, ln, pow, smooth_down, smooth_up};
use crate::quad::GaussLegendre;

/// Truncation scale eps with the derived ceiling Gamma_eps and the cached
/// quadrature state for evaluating the convolution.
#[derive(Debug, Clone)]
pub struct MollifierParams {
    epsilon: f64,
    eta0: f64,
    gamma_eps: f64,
    chi_norm: f64,
    rule: GaussLegendre,
}

impl MollifierParams {
    /// Requires eps in (0,1) with 3 eps < 1 < Gamma_eps - 1. The quadrature
    /// rule and the bump normalization are built eagerly so evaluation is a
    /// pure function afterwards.
    pub fn new(epsilon: f64, eta0: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::config(format!("epsilon = {epsilon} outside (0, 1)")));
        }
        let gamma_eps = pow(ln(1.0 / epsilon), eta0);
        if !(3.0 * epsilon < 1.0 && gamma_eps - 1.0 > 1.0) {
            return Err(Error::config(format!(
                "epsilon = {epsilon}, eta0 = {eta0} violate 3 eps < 1 < Gamma_eps - 1 \
                 (Gamma_eps = {gamma_eps})"
            )));
        }
        let rule = GaussLegendre::new(64);
        // Normalize chi with the same rule used for evaluation, so the
        // plateau values 2eps and Gamma_eps are exact to round-off.
        let chi_norm = rule.integrate(-1.0, 1.0, bump_unnormalized);
        Ok(MollifierParams { epsilon, eta0, gamma_eps, chi_norm, rule })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    /// Gamma_eps = [log(1/eps)]^eta0.
    pub fn gamma_eps(&self) -> f64 {
        self.gamma_eps
    }

    /// phi_eps(x) for x >= 0; lands in [2 eps, Gamma_eps].
    pub fn phi(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::domain(format!("phi_eps needs x >= 0, got {x}")));
        }
        Ok(self.phi_unchecked(x))
    }

    /// phi_eps without the domain check; used in the event loop where the
    /// argument is a norm by construction.
    pub fn phi_unchecked(&self, x: f64) -> f64 {
        let eps = self.epsilon;
        let cap = self.gamma_eps;
        // Off the two transition bands the convolution is exact.
        if x <= eps {
            return 2.0 * eps;
        }
        if x >= 3.0 * eps && x <= cap - 1.0 {
            return x;
        }
        if x >= cap + 1.0 {
            return cap;
        }
        // Convolution over the support of chi((x-y)/eps): substitute
        // y = x - eps t with t in (-1, 1).
        let integral = self.rule.integrate(-1.0, 1.0, |t| {
            let clamped = (x - eps * t).max(2.0 * eps).min(cap);
            clamped * bump_unnormalized(t)
        });
        integral / self.chi_norm
    }

    /// phi_eps(x)^gamma, the thinning acceptance weight.
    pub fn phi_pow(&self, x: f64, gamma: f64) -> f64 {
        pow(self.phi_unchecked(x), gamma)
    }

    /// The normalized bump chi evaluated at x; integrates to 1 under the
    /// cached rule, supported in (-1, 1).
    pub fn chi(&self, x: f64) -> f64 {
        bump_unnormalized(x) / self.chi_norm
    }

    /// Localization cap Phi_eps: 0 for x <= Gamma_eps - 1, 1 for x >= Gamma_eps.
    pub fn phi_cap(&self, x: f64) -> f64 {
        smooth_up(x, self.gamma_eps - 1.0, self.gamma_eps)
    }
}

fn bump_unnormalized(x: f64) -> f64 {
    if fabs(x) >= 1.0 {
        0.0
    } else {
        exp(-1.0 / (1.0 - x * x))
    }
}

/// Smooth even indicator I_zeta in the substituted coordinate: 1 for
/// |z| <= G(zeta), 0 for |z| >= G(zeta) + 1, quintic in between.
pub fn indicator_i_zeta(z: f64, zeta: f64, kernel: &KernelParams) -> Result<f64> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::config(format!("zeta = {zeta} outside (0, 1)")));
    }
    let g = kernel.eval_g(zeta)?;
    Ok(smooth_down(fabs(z), g, g + 1.0))
}

/// Smooth even weight U_zeta: 1 on |z| in (1, G(zeta) - 1), 0 for
/// |z| <= 1/2 and |z| >= G(zeta) - 1/2. Degenerate unless G(zeta) > 2.
pub fn indicator_u_zeta(z: f64, zeta: f64, kernel: &KernelParams) -> Result<f64> {
    let g = kernel.eval_g(zeta)?;
    if g <= 2.0 {
        return Err(Error::config(format!(
            "U_zeta degenerate: G(zeta) = {g} <= 2 leaves no plateau"
        )));
    }
    let a = fabs(z);
    Ok(smooth_up(a, 0.5, 1.0) * smooth_down(a, g - 1.0, g - 0.5))
}

/// Localization tail cutoff Psi: 1 for x <= 1/4, 0 for x >= 3/4.
pub fn cutoff_psi(x: f64) -> f64 {
    smooth_down(x, 0.25, 0.75)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, unit_f64, StreamRole};

    fn moll() -> MollifierParams {
        MollifierParams::new(0.01, 2.0).unwrap()
    }

    fn kern() -> KernelParams {
        KernelParams::new(0.75, 0.25, 0.9, 1.2).unwrap()
    }

    #[test]
    fn admissibility_of_epsilon() {
        assert!(MollifierParams::new(0.4, 2.0).is_err()); // 3 eps >= 1
        assert!(MollifierParams::new(0.2, 0.5).is_err()); // Gamma too small
        assert!(MollifierParams::new(0.0, 2.0).is_err());
        assert!(MollifierParams::new(0.01, 2.0).is_ok());
    }

    #[test]
    fn gamma_eps_closed_form() {
        let m = moll();
        assert!((m.gamma_eps() - 21.207592441913592).abs() < 1e-12);
    }

    #[test]
    fn phi_plateau_identity_cap_regions() {
        let m = moll();
        // Flat region: phi = 2 eps on [0, eps].
        assert!((m.phi(0.005).unwrap() - 0.02).abs() < 1e-13);
        assert!((m.phi(0.0).unwrap() - 0.02).abs() < 1e-13);
        // Identity region.
        assert!((m.phi(0.5).unwrap() - 0.5).abs() < 1e-13);
        assert!((m.phi(3.0 * 0.01).unwrap() - 0.03).abs() < 1e-13);
        // Cap region.
        let cap = m.gamma_eps();
        assert!((m.phi(cap + 2.0).unwrap() - cap).abs() < 1e-12);
        assert!(m.phi(-0.1).is_err());
    }

    #[test]
    fn phi_bounds_and_monotonicity_on_dense_grid() {
        let m = moll();
        let cap = m.gamma_eps();
        let mut prev = 0.0;
        let mut boundary_points = vec![
            0.0,
            m.epsilon(),
            2.0 * m.epsilon(),
            3.0 * m.epsilon(),
            cap - 1.0,
            cap,
            cap + 1.0,
            cap + 5.0,
        ];
        for k in 0..=4000 {
            boundary_points.push(k as f64 * (cap + 2.0) / 4000.0);
        }
        boundary_points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &x in &boundary_points {
            let v = m.phi(x).unwrap();
            assert!(v >= 2.0 * m.epsilon() - 1e-13 && v <= cap + 1e-12, "x={x} v={v}");
            assert!(v >= prev - 1e-12, "not monotone at x={x}");
            prev = v;
        }
    }

    #[test]
    fn phi_is_one_lipschitz() {
        let m = moll();
        let mut rng = stream_rng(3, 0, StreamRole::Diagnostics);
        for _ in 0..2000 {
            let x = unit_f64(&mut rng) * 25.0;
            let y = unit_f64(&mut rng) * 25.0;
            let dphi = (m.phi(x).unwrap() - m.phi(y).unwrap()).abs();
            assert!(dphi <= (x - y).abs() + 1e-12);
        }
    }

    #[test]
    fn phi_holder_product_bound_stable_across_eps() {
        // x^beta |phi^g(x) - phi^g(y)| <= C_beta Gamma^g |x-y|^beta; the
        // fitted C_beta must be stable (within a factor 2) across eps.
        let gamma = 0.75;
        for &beta in &[0.3, 0.6, 1.0] {
            let mut fitted = Vec::new();
            for &eps in &[1e-1, 1e-2, 1e-3] {
                let m = MollifierParams::new(eps, 2.0).unwrap();
                let cap_g = pow(m.gamma_eps(), gamma);
                let mut rng = stream_rng(17, 0, StreamRole::Diagnostics);
                let mut worst: f64 = 0.0;
                for _ in 0..4000 {
                    let x = unit_f64(&mut rng) * (m.gamma_eps() + 2.0);
                    let y = unit_f64(&mut rng) * (m.gamma_eps() + 2.0);
                    if x == y {
                        continue;
                    }
                    let num = pow(x, beta)
                        * (m.phi_pow(x, gamma) - m.phi_pow(y, gamma)).abs();
                    let den = cap_g * pow((x - y).abs(), beta);
                    worst = worst.max(num / den);
                }
                fitted.push(worst);
            }
            let lo = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = fitted.iter().cloned().fold(0.0_f64, f64::max);
            assert!(hi.is_finite() && lo > 0.0);
            assert!(hi / lo < 2.0, "beta={beta}: fitted constants {fitted:?}");
        }
    }

    #[test]
    fn phi_pow_derivative_envelopes() {
        // Finite-difference derivatives of phi^g against the support regions:
        // order l in {1,2} bounded by C (x^(g-l) inside (eps, Gamma-1] and
        // Gamma^(g-1) on the cap band), zero outside [eps, Gamma+1].
        let m = moll();
        let gamma = 0.75;
        let cap = m.gamma_eps();
        let h = 1e-5;
        let fd1 = |x: f64| (m.phi_pow(x + h, gamma) - m.phi_pow(x - h, gamma)) / (2.0 * h);
        let fd2 = |x: f64| {
            (m.phi_pow(x + h, gamma) - 2.0 * m.phi_pow(x, gamma) + m.phi_pow(x - h, gamma))
                / (h * h)
        };
        // Flat and capped regions: derivatives vanish.
        assert!(fd1(0.004).abs() < 1e-8);
        assert!(fd1(cap + 1.5).abs() < 1e-8);
        assert!(fd2(cap + 1.5).abs() < 1e-4);
        // Identity region: (x^g)' and (x^g)'' exactly.
        for &x in &[0.1, 1.0, 5.0] {
            let d1 = gamma * pow(x, gamma - 1.0);
            let d2 = gamma * (gamma - 1.0) * pow(x, gamma - 2.0);
            assert!((fd1(x) - d1).abs() < 1e-6 * (1.0 + d1.abs()));
            assert!((fd2(x) - d2).abs() < 1e-3 * (1.0 + d2.abs()));
        }
        // Transition bands: bounded by the stated envelopes with a fitted
        // constant of moderate size.
        let mut c1: f64 = 0.0;
        let mut c2: f64 = 0.0;
        for k in 1..200 {
            let x = m.epsilon() * (1.0 + 2.0 * k as f64 / 200.0); // (eps, 3eps)
            c1 = c1.max(fd1(x).abs() / pow(x, gamma - 1.0));
            c2 = c2.max(fd2(x).abs() / pow(x, gamma - 2.0));
            let y = cap - 1.0 + 2.0 * k as f64 / 200.0; // (Gamma-1, Gamma+1)
            c1 = c1.max(fd1(y).abs() / pow(cap, gamma - 1.0));
            c2 = c2.max(fd2(y).abs() / pow(cap, gamma - 1.0));
        }
        assert!(c1.is_finite() && c2.is_finite());
        assert!(c1 < 50.0 && c2 < 50.0, "fitted envelope constants {c1} {c2}");
    }

    #[test]
    fn indicator_i_zeta_plateaus_and_midpoint() {
        let k = kern();
        let zeta = 0.05;
        let g = k.eval_g(zeta).unwrap();
        assert_eq!(indicator_i_zeta(0.0, zeta, &k).unwrap(), 1.0);
        assert_eq!(indicator_i_zeta(g, zeta, &k).unwrap(), 1.0);
        assert_eq!(indicator_i_zeta(g + 1.5, zeta, &k).unwrap(), 0.0);
        assert_eq!(indicator_i_zeta(-(g + 1.5), zeta, &k).unwrap(), 0.0);
        let mid = indicator_i_zeta(g + 0.5, zeta, &k).unwrap();
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(indicator_i_zeta(0.0, 1.5, &k).is_err());
    }

    #[test]
    fn indicator_u_zeta_layout() {
        let k = kern();
        // Pick zeta with G(zeta) = 10 by inverting: G(theta(z)) = z.
        let zeta = k.vartheta(10.0);
        let g = k.eval_g(zeta).unwrap();
        assert!((g - 10.0).abs() < 1e-10);
        assert_eq!(indicator_u_zeta(0.4, zeta, &k).unwrap(), 0.0);
        assert_eq!(indicator_u_zeta(2.0, zeta, &k).unwrap(), 1.0);
        assert_eq!(indicator_u_zeta(g - 0.4, zeta, &k).unwrap(), 0.0);
        for k_i in 0..60 {
            let z = -12.0 + 24.0 * k_i as f64 / 60.0;
            let u = indicator_u_zeta(z, zeta, &k).unwrap();
            assert_eq!(u, indicator_u_zeta(-z, zeta, &k).unwrap());
            assert!((0.0..=1.0).contains(&u));
        }
        // Degenerate configuration rejected.
        let wide = k.vartheta(1.5);
        assert!(indicator_u_zeta(0.7, wide, &k).is_err());
    }

    #[test]
    fn localization_pair_layout() {
        let m = moll();
        let cap = m.gamma_eps();
        assert_eq!(m.phi_cap(cap - 2.0), 0.0);
        assert_eq!(m.phi_cap(cap + 1.0), 1.0);
        assert_eq!(cutoff_psi(0.0), 1.0);
        assert_eq!(cutoff_psi(1.0), 0.0);
        let mut prev = 2.0;
        for k in 0..=100 {
            let v = cutoff_psi(k as f64 / 100.0);
            assert!(v <= prev);
            prev = v;
        }
    }
}
