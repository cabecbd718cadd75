//! Per-path tangent and covariance diagnostics for the jump chain.
//!
//! For a tagged particle's chain, the tangent flow is the ordered product
//! Y_t = prod_k [I + A(vartheta(Z_k)) I_zeta(Z_k)] over accepted events,
//! each jump contributes H_k = vartheta'(Z_k) A'(vartheta(Z_k)) (V_- - v_k),
//! and the covariance core accumulates
//! S_t = sum_k pi_k^2 (Y_{T_k}^{-1} H_k)(Y_{T_k}^{-1} H_k)^* with
//! pi_k = U_zeta(Z_k). The full covariance is sigma = Y_t S_t Y_t^*; adding
//! the Gaussian regularization floor u_zeta(t) = t zeta^(4+nu) on the
//! diagonal removes the degeneracy of short chains.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::algebra::{Mat2, Vec2};
use crate::error::{Error, Result};
use crate::kernel::{deviation_matrix_deriv, DeviationMatrix, KernelParams};
use crate::math::{exp, fabs, ln, pow};
use crate::mollifier::{cutoff_psi, indicator_i_zeta, indicator_u_zeta, MollifierParams};
use crate::rng::index;

/// One event of a tagged particle's chain. `v_before` is the tagged state
/// just before the event, `partner` the sampled collision partner velocity.
/// Rejected thinning events are kept: they advance the Poisson clock and
/// enter the localization sum, but contribute the identity to the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainEvent {
    pub time: f64,
    pub v_before: Vec2,
    pub partner: Vec2,
    pub z: f64,
    pub u: f64,
    pub accepted: bool,
}

/// Event log of one tagged particle.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChain {
    pub v0: Vec2,
    pub events: Vec<ChainEvent>,
}

impl JumpChain {
    /// Checks strictly increasing times and that each stored pre-state
    /// matches the deterministic replay of the chain map.
    pub fn validate(&self, zeta: f64, kernel: &KernelParams) -> Result<()> {
        let mut state = self.v0;
        let mut prev_t = f64::NEG_INFINITY;
        for (k, ev) in self.events.iter().enumerate() {
            if !(ev.time > prev_t) {
                return Err(Error::domain(format!(
                    "chain event {k}: time {} not strictly increasing",
                    ev.time
                )));
            }
            prev_t = ev.time;
            if (ev.v_before - state).norm() > 1e-9 * (1.0 + state.norm()) {
                return Err(Error::domain(format!(
                    "chain event {k}: stored pre-state disagrees with replay"
                )));
            }
            state = apply_event(state, ev, zeta, kernel, None)?;
        }
        Ok(())
    }

    /// State of the tagged particle at time t (cadlag, piecewise constant).
    pub fn state_at(&self, t: f64, zeta: f64, kernel: &KernelParams) -> Result<Vec2> {
        self.replay(t, zeta, kernel, None)
    }

    /// Replay with an optional perturbation (event index, z-offset); this is
    /// the deterministic chain recursion with all other randomness fixed.
    pub fn replay(
        &self,
        t: f64,
        zeta: f64,
        kernel: &KernelParams,
        perturb: Option<(usize, f64)>,
    ) -> Result<Vec2> {
        let mut state = self.v0;
        for (k, ev) in self.events.iter().enumerate() {
            if ev.time > t {
                break;
            }
            let dz = match perturb {
                Some((idx, dz)) if idx == k => Some(dz),
                _ => None,
            };
            state = apply_event(state, ev, zeta, kernel, dz)?;
        }
        Ok(state)
    }
}

fn apply_event(
    state: Vec2,
    ev: &ChainEvent,
    zeta: f64,
    kernel: &KernelParams,
    dz: Option<f64>,
) -> Result<Vec2> {
    if !ev.accepted {
        return Ok(state);
    }
    let z = ev.z + dz.unwrap_or(0.0);
    let amp = indicator_i_zeta(z, zeta, kernel)?;
    if amp == 0.0 {
        return Ok(state);
    }
    let theta = kernel.vartheta(z);
    let jump = DeviationMatrix::new(theta).matrix().mul_vec(state - ev.partner) * amp;
    Ok(state + jump)
}

/// Flow matrix, its inverse, the accumulated covariance core S, and the
/// covariance sigma = Y S Y^*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentState {
    pub y: Mat2,
    pub y_inv: Mat2,
    pub s: Mat2,
    pub sigma: Mat2,
}

/// Computes the tangent flow and covariance of a chain at time t.
pub fn tangent_flow(
    chain: &JumpChain,
    t: f64,
    zeta: f64,
    kernel: &KernelParams,
) -> Result<TangentState> {
    let mut y = Mat2::IDENTITY;
    let mut y_inv = Mat2::IDENTITY;
    let mut s = Mat2::ZERO;
    let mut state = chain.v0;
    let mut prev_t = f64::NEG_INFINITY;
    for ev in &chain.events {
        if ev.time > t {
            break;
        }
        if !(ev.time > prev_t) {
            return Err(Error::domain(String::from("chain times not strictly increasing")));
        }
        prev_t = ev.time;
        if !ev.accepted {
            continue;
        }
        let amp = indicator_i_zeta(ev.z, zeta, kernel)?;
        let theta = kernel.vartheta(ev.z);
        let dev = DeviationMatrix::new(theta);
        let pi = indicator_u_zeta(ev.z, zeta, kernel)?;
        // Update the flow first: S uses Y at T_k (post-event).
        y = (Mat2::IDENTITY + dev.matrix().scale(amp)) * y;
        y_inv = y_inv * scaled_rotation_inverse(&dev, amp);
        if pi > 0.0 {
            // On the support of U_zeta the indicator I_zeta is identically 1,
            // so H_k needs no I_zeta' term. vartheta is odd, hence its
            // derivative is even in z.
            let h = deviation_matrix_deriv(theta).mul_vec(state - ev.partner)
                * kernel.vartheta_deriv(fabs(ev.z), 1)?;
            let m = y_inv.mul_vec(h);
            s = s + m.outer(m).scale(pi * pi);
        }
        state = state + dev.matrix().mul_vec(state - ev.partner) * amp;
    }
    let sigma = y * s * y.transpose();
    Ok(TangentState { y, y_inv, s, sigma })
}

/// Rebuilds per-particle jump chains from an initial ensemble and the full
/// event log, replaying the one-sided dynamics deterministically. This is
/// the bridge from the simulator's event-log artifact to the tangent
/// diagnostics: partner velocities are recovered exactly because the replay
/// applies the same update arithmetic as the simulation.
pub fn chains_from_event_log(
    initial: &[Vec2],
    events: &[crate::particles::EventRecord],
    zeta: f64,
    kernel: &KernelParams,
) -> Result<Vec<JumpChain>> {
    let mut state: Vec<Vec2> = initial.to_vec();
    let mut chains: Vec<JumpChain> = initial
        .iter()
        .map(|&v0| JumpChain { v0, events: Vec::new() })
        .collect();
    let mut prev_t = f64::NEG_INFINITY;
    for ev in events {
        if !(ev.time > prev_t) {
            return Err(Error::domain(String::from("event log times not strictly increasing")));
        }
        prev_t = ev.time;
        let (i, j) = (ev.i as usize, ev.j as usize);
        if i >= state.len() || j >= state.len() || i == j {
            return Err(Error::domain(format!(
                "event at t = {} references invalid particles ({i}, {j})",
                ev.time
            )));
        }
        let vi = state[i];
        let vj = state[j];
        chains[i].events.push(ChainEvent {
            time: ev.time,
            v_before: vi,
            partner: vj,
            z: ev.z,
            u: ev.u,
            accepted: ev.accepted,
        });
        if ev.accepted {
            let amp = indicator_i_zeta(ev.z, zeta, kernel)?;
            let theta = kernel.vartheta(ev.z);
            state[i] = vi + DeviationMatrix::new(theta).matrix().mul_vec(vi - vj) * amp;
        }
    }
    Ok(chains)
}

/// Inverse of I + A(theta) * amp in closed form: the matrix is a scaled
/// rotation [[a, -b], [b, a]], so the inverse is its transpose over a^2+b^2.
fn scaled_rotation_inverse(dev: &DeviationMatrix, amp: f64) -> Mat2 {
    let a = 1.0 + amp * dev.matrix().a;
    let b = amp * dev.matrix().c;
    let scale = a * a + b * b;
    Mat2::new(a / scale, b / scale, -b / scale, a / scale)
}

/// Analytic derivative of the chain state at time t with respect to the
/// z-coordinate of (accepted) event k: Y_t Y_{T_k}^{-1} H_k. Requires the
/// event to sit strictly inside the flat region of I_zeta (which holds
/// wherever the weight U_zeta is positive).
pub fn chain_derivative(
    chain: &JumpChain,
    k: usize,
    t: f64,
    zeta: f64,
    kernel: &KernelParams,
) -> Result<Vec2> {
    let ev = chain
        .events
        .get(k)
        .ok_or_else(|| Error::domain(format!("event index {k} out of range")))?;
    if !ev.accepted {
        return Err(Error::domain(format!("event {k} was rejected; no derivative")));
    }
    if ev.time > t {
        return Ok(Vec2::ZERO);
    }
    let g = kernel.eval_g(zeta)?;
    if fabs(ev.z) >= g - 1e-3 {
        return Err(Error::domain(format!(
            "event {k} has |z| = {} outside the flat indicator region (G = {g})",
            fabs(ev.z)
        )));
    }
    // Walk the chain once, capturing Y_{T_k}^{-1} H_k at event k and then
    // pushing it forward through the remaining flow.
    let mut y = Mat2::IDENTITY;
    let mut y_inv = Mat2::IDENTITY;
    let mut state = chain.v0;
    let mut core: Option<Vec2> = None;
    for (idx, ev2) in chain.events.iter().enumerate() {
        if ev2.time > t {
            break;
        }
        if !ev2.accepted {
            continue;
        }
        let amp = indicator_i_zeta(ev2.z, zeta, kernel)?;
        let theta = kernel.vartheta(ev2.z);
        let dev = DeviationMatrix::new(theta);
        y = (Mat2::IDENTITY + dev.matrix().scale(amp)) * y;
        y_inv = y_inv * scaled_rotation_inverse(&dev, amp);
        if idx == k {
            let h = deviation_matrix_deriv(theta).mul_vec(state - ev2.partner)
                * kernel.vartheta_deriv(fabs(ev2.z), 1)?;
            core = Some(y_inv.mul_vec(h));
        }
        state = state + dev.matrix().mul_vec(state - ev2.partner) * amp;
    }
    let core = core.ok_or_else(|| Error::domain(format!("event {k} beyond time {t}")))?;
    Ok(y.mul_vec(core))
}

/// Forward finite difference of the chain state with respect to Z_k.
pub fn chain_derivative_fd(
    chain: &JumpChain,
    k: usize,
    h: f64,
    t: f64,
    zeta: f64,
    kernel: &KernelParams,
) -> Result<Vec2> {
    let base = chain.replay(t, zeta, kernel, None)?;
    let bumped = chain.replay(t, zeta, kernel, Some((k, h)))?;
    Ok((bumped - base) * (1.0 / h))
}

/// Regularization floor u_zeta(t) = t zeta^(4+nu).
pub fn u_floor(t: f64, zeta: f64, nu: f64) -> f64 {
    t * pow(zeta, 4.0 + nu)
}

/// det(u_zeta(t) I + sigma); strictly positive for t > 0 and PSD sigma.
///
/// Expanded as u^2 + u tr(sigma) + det(sigma) so the floor u^2 survives even
/// when it sits below the rounding noise of sigma's entries; det(sigma) is
/// clamped at zero, which is exact for the PSD covariance up to round-off.
pub fn regularized_det(sigma: &Mat2, t: f64, zeta: f64, nu: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("regularized determinant needs t > 0, got {t}")));
    }
    let u = u_floor(t, zeta, nu);
    Ok(u * u + u * sigma.trace() + sigma.det().max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicas: usize,
}

/// Monte Carlo mean of det^(-p) over replicas with a percentile bootstrap
/// confidence interval (200 resamples).
pub fn inverse_det_moment<R: RngCore>(
    dets: &[f64],
    p: f64,
    rng: &mut R,
) -> Result<MomentEstimate> {
    if dets.is_empty() {
        return Err(Error::domain(String::from("no replicas given")));
    }
    if !(p >= 1.0) {
        return Err(Error::domain(format!("moment order p = {p} must be >= 1")));
    }
    let xs: Vec<f64> = dets.iter().map(|&d| pow(d, -p)).collect();
    let mean = crate::math::mean(&xs);
    const RESAMPLES: usize = 200;
    let mut means = Vec::with_capacity(RESAMPLES);
    for _ in 0..RESAMPLES {
        let mut acc = 0.0;
        for _ in 0..xs.len() {
            acc += xs[index(rng, xs.len())];
        }
        means.push(acc / xs.len() as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = means[(RESAMPLES as f64 * 0.025) as usize];
    let hi = means[(RESAMPLES as f64 * 0.975) as usize];
    Ok(MomentEstimate { mean, ci_low: lo, ci_high: hi, replicas: dets.len() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePoint {
    pub radius: f64,
    pub mean: f64,
}

/// Empirical Laplace transform of the covariance core: per radius, the mean
/// over replicas and directions of exp(-xi^T S xi).
pub fn laplace_table(cores: &[Mat2], radii: &[f64], directions: usize) -> Vec<LaplacePoint> {
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut acc = 0.0;
        for d in 0..directions {
            let phi = core::f64::consts::PI * d as f64 / directions as f64;
            let xi = Vec2::new(r * crate::math::cos(phi), r * crate::math::sin(phi));
            for s in cores {
                let q = xi.dot(s.mul_vec(xi));
                acc += exp(-q);
            }
        }
        out.push(LaplacePoint { radius: r, mean: acc / (directions * cores.len()) as f64 });
    }
    out
}

/// Fits the pre-saturation decay exponent: regress ln(-ln mean) on ln radius
/// over the points whose -ln mean lies in [level_lo, level_hi].
pub fn laplace_decay_fit(
    points: &[LaplacePoint],
    level_lo: f64,
    level_hi: f64,
) -> Option<crate::math::LinearFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.mean > 0.0 && p.mean < 1.0)
        .map(|p| (p.radius, -ln(p.mean)))
        .filter(|&(_, nl)| nl >= level_lo && nl <= level_hi)
        .map(|(r, nl)| (ln(r), ln(nl)))
        .collect();
    crate::math::linear_fit(&pts)
}

/// Localization weight G_t = Psi(Phi_eps(|V_0|) + sum_k Phi_eps(|V_{T_k}|));
/// all Poisson events enter the sum, each with the post-event state.
pub fn localization_weight(
    chain: &JumpChain,
    t: f64,
    zeta: f64,
    kernel: &KernelParams,
    moll: &MollifierParams,
) -> Result<f64> {
    let mut sum = moll.phi_cap(chain.v0.norm());
    let mut state = chain.v0;
    for ev in &chain.events {
        if ev.time > t {
            break;
        }
        state = apply_event(state, ev, zeta, kernel, None)?;
        sum += moll.phi_cap(state.norm());
    }
    Ok(cutoff_psi(sum))
}

/// Running sup of |V_s| over [0, t] along the chain (for the sandwich check).
pub fn path_sup(chain: &JumpChain, t: f64, zeta: f64, kernel: &KernelParams) -> Result<f64> {
    let mut state = chain.v0;
    let mut sup = state.norm();
    for ev in &chain.events {
        if ev.time > t {
            break;
        }
        state = apply_event(state, ev, zeta, kernel, None)?;
        sup = sup.max(state.norm());
    }
    Ok(sup)
}

/// Rejection weight g(w) = 1 - (1/(2 Gamma^gamma)) mean_j phi^gamma(|w - V_j|),
/// always in [1/2, 1].
pub fn rejection_weight(
    w: Vec2,
    velocities: &[Vec2],
    moll: &MollifierParams,
    gamma: f64,
) -> f64 {
    let cap = 2.0 * pow(moll.gamma_eps(), gamma);
    let mean: f64 = velocities
        .iter()
        .map(|v| pow(moll.phi_unchecked((w - *v).norm()), gamma))
        .sum::<f64>()
        / velocities.len() as f64;
    1.0 - mean / cap
}

/// Jump-chain transition density
/// q(w, rho, z) = g(w) chi(z - G - 3) + phi^gamma(|w - v(rho)|)/lambda 1{|z| <= G+1},
/// a probability density on [0,1] x R in (rho, z).
pub fn eval_q_density(
    w: Vec2,
    partner: Vec2,
    z: f64,
    velocities: &[Vec2],
    moll: &MollifierParams,
    kernel: &KernelParams,
    zeta: f64,
) -> Result<f64> {
    let g_zeta = kernel.eval_g(zeta)?;
    let gamma = kernel.gamma();
    let lambda = 4.0 * (g_zeta + 1.0) * pow(moll.gamma_eps(), gamma);
    let g_w = rejection_weight(w, velocities, moll, gamma);
    let bump = moll.chi(z - g_zeta - 3.0);
    let window = if fabs(z) <= g_zeta + 1.0 {
        pow(moll.phi_unchecked((w - partner).norm()), gamma) / lambda
    } else {
        0.0
    };
    Ok(g_w * bump + window)
}

/// Total mass of the transition density: the rho-average over the ensemble
/// and z-quadrature (closed form on the window, fixed rule on the bump).
pub fn q_density_total_mass(
    w: Vec2,
    velocities: &[Vec2],
    moll: &MollifierParams,
    kernel: &KernelParams,
    zeta: f64,
) -> Result<f64> {
    let g_zeta = kernel.eval_g(zeta)?;
    let gamma = kernel.gamma();
    let g_w = rejection_weight(w, velocities, moll, gamma);
    let rule = crate::quad::GaussLegendre::new(64);
    let bump_mass = rule.integrate(g_zeta + 2.0, g_zeta + 4.0, |z| moll.chi(z - g_zeta - 3.0));
    // The window term integrates to (1 - g) exactly:
    // mean_j phi^gamma / lambda * 2 (G + 1) = mean phi^gamma / (2 Gamma^gamma).
    let window_mass = 1.0 - g_w;
    Ok(g_w * bump_mass + window_mass)
}
