//! Event-driven mean-field particle simulation of the doubly-truncated
//! velocity jump process.
//!
//! The nonlinear law in the jump intensity is replaced by the ensemble's
//! empirical measure: at each event of a global Poisson clock with rate
//! N * lambda, a particle i and a partner j != i are drawn uniformly, the
//! substituted angle coordinate z uniformly on [-(G(zeta)+1), G(zeta)+1],
//! and the thinning coordinate u uniformly on [0, 2 Gamma_eps^gamma]. The
//! jump V_i <- V_i + A(vartheta(z)) (V_i - V_j) I_zeta(z) fires when
//! u <= phi_eps^gamma(|V_i - V_j|). One-sided updates match the SDE;
//! the symmetric mode applies the paired rotation update to both particles,
//! which conserves momentum and energy exactly per event.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::algebra::Vec2;
use crate::error::{Error, Result};
use crate::kernel::{DeviationMatrix, KernelParams};
use crate::malliavin::{ChainEvent, JumpChain};
use crate::math::{fabs, pow, sqrt};
use crate::mollifier::{indicator_i_zeta, MollifierParams};
use crate::rng::{exponential, index, normal_pair, range_f64, stream_rng, unit_f64, StreamRole};

/// Named initial distributions; all have every exponential moment
/// exp(|v|^delta) finite for delta < 1 and none is a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw {
    /// Isotropic centered Gaussian with energy e0 (component variance e0/2).
    Gaussian { e0: f64 },
    /// Atoms at +w and -w, exactly balanced (requires even N).
    TwoPoint { w: Vec2 },
    /// Uniform on the centered disk of the given radius.
    UniformDisk { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionStyle {
    /// Nanbu: one particle updated per event; matches the SDE in law.
    OneSided,
    /// Bird: paired update (v', v'_*); exactly conservative per event.
    Symmetric,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub kernel: KernelParams,
    pub mollifier: MollifierParams,
    pub zeta: f64,
    pub n_particles: usize,
    pub horizon: f64,
    pub collision_style: CollisionStyle,
    pub initial_law: InitialLaw,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::config(format!(
                "n_particles = {} violates N >= 2",
                self.n_particles
            )));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::config(format!("zeta = {} outside (0, 1)", self.zeta)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config(format!("horizon = {} must be finite and >= 0", self.horizon)));
        }
        match self.initial_law {
            InitialLaw::Gaussian { e0 } => {
                if !(e0 > 0.0) {
                    return Err(Error::config(String::from(
                        "gaussian initial law needs e0 > 0 (a point mass is excluded)",
                    )));
                }
            }
            InitialLaw::TwoPoint { w } => {
                if w.norm_sq() == 0.0 {
                    return Err(Error::config(String::from(
                        "two-point initial law with w = 0 is a point mass",
                    )));
                }
                if !self.n_particles.is_multiple_of(2) {
                    return Err(Error::config(String::from(
                        "two-point initial law needs an even particle count for exact balance",
                    )));
                }
            }
            InitialLaw::UniformDisk { radius } => {
                if !(radius > 0.0) {
                    return Err(Error::config(String::from(
                        "uniform-disk initial law needs radius > 0",
                    )));
                }
            }
        }
        let rate = self.jump_rate()?;
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::config(format!(
                "per-particle jump rate {rate} is not finite and positive"
            )));
        }
        Ok(())
    }

    /// Per-particle jump rate lambda = 4 (G(zeta) + 1) Gamma_eps^gamma.
    pub fn jump_rate(&self) -> Result<f64> {
        let g = self.kernel.eval_g(self.zeta)?;
        Ok(4.0 * (g + 1.0) * pow(self.mollifier.gamma_eps(), self.kernel.gamma()))
    }
}

/// N velocities with the simulation clock.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub velocities: Vec<Vec2>,
    pub time: f64,
}

impl Ensemble {
    /// Sample mean velocity.
    pub fn momentum(&self) -> Vec2 {
        let mut acc = Vec2::ZERO;
        for v in &self.velocities {
            acc += *v;
        }
        acc * (1.0 / self.velocities.len() as f64)
    }

    /// Sample energy (mean squared speed).
    pub fn energy(&self) -> f64 {
        self.velocities.iter().map(|v| v.norm_sq()).sum::<f64>() / self.velocities.len() as f64
    }
}

/// Draws N i.i.d. velocities from the configured law, then recenters to an
/// exactly zero sample mean. The two-point law is realized as a balanced
/// random interleaving so the atoms stay exactly at +w and -w.
pub fn init_ensemble(config: &SimulationConfig, replica: u64) -> Result<Ensemble> {
    config.validate()?;
    let n = config.n_particles;
    let mut rng = stream_rng(config.seed, replica, StreamRole::Init);
    let mut velocities = Vec::with_capacity(n);
    match config.initial_law {
        InitialLaw::Gaussian { e0 } => {
            let sigma = sqrt(e0 / 2.0);
            for _ in 0..n {
                let (gx, gy) = normal_pair(&mut rng);
                velocities.push(Vec2::new(sigma * gx, sigma * gy));
            }
        }
        InitialLaw::TwoPoint { w } => {
            // Fisher-Yates over an exactly balanced sign multiset.
            let mut signs: Vec<f64> = (0..n).map(|k| if k < n / 2 { 1.0 } else { -1.0 }).collect();
            for k in (1..n).rev() {
                let j = index(&mut rng, k + 1);
                signs.swap(k, j);
            }
            for s in signs {
                velocities.push(w * s);
            }
        }
        InitialLaw::UniformDisk { radius } => {
            for _ in 0..n {
                let r = radius * sqrt(unit_f64(&mut rng));
                let phi = 2.0 * core::f64::consts::PI * unit_f64(&mut rng);
                velocities.push(Vec2::new(r * crate::math::cos(phi), r * crate::math::sin(phi)));
            }
        }
    }
    let mean = velocities.iter().fold(Vec2::ZERO, |acc, v| acc + *v) * (1.0 / n as f64);
    for v in &mut velocities {
        *v = *v - mean;
    }
    Ok(Ensemble { velocities, time: 0.0 })
}

/// One thinning event: particle i, partner j, substituted coordinate z,
/// thinning coordinate u, and whether the event changed the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub i: u32,
    pub j: u32,
    pub z: f64,
    pub u: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub velocities: Vec<Vec2>,
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Snapshot times; values beyond the horizon are clamped to it.
    pub output_times: Vec<f64>,
    pub record_events: bool,
    /// Record per-particle jump chains (one-sided mode only).
    pub record_chains: bool,
    /// Replica index for RNG stream derivation.
    pub replica: u64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<EventRecord>,
    pub chains: Vec<JumpChain>,
    pub events_total: u64,
    pub events_accepted: u64,
    /// Largest per-event relative momentum deviation (symmetric mode).
    pub max_momentum_dev: f64,
    /// Largest per-event relative energy deviation (symmetric mode).
    pub max_energy_dev: f64,
    pub final_state: Ensemble,
}

impl SimOutput {
    pub fn acceptance_fraction(&self) -> f64 {
        if self.events_total == 0 {
            0.0
        } else {
            self.events_accepted as f64 / self.events_total as f64
        }
    }
}

/// Runs the event-driven simulation. Exact exponential event gaps, no time
/// discretization; deterministic for a fixed (config, seed, replica).
pub fn simulate(config: &SimulationConfig, opts: &SimOptions) -> Result<SimOutput> {
    config.validate()?;
    if opts.record_chains && config.collision_style == CollisionStyle::Symmetric {
        return Err(Error::config(String::from(
            "jump chains are defined for the one-sided (SDE) mode only",
        )));
    }
    let n = config.n_particles;
    let gamma = config.kernel.gamma();
    let g_zeta = config.kernel.eval_g(config.zeta)?;
    let z_max = g_zeta + 1.0;
    let u_max = 2.0 * pow(config.mollifier.gamma_eps(), gamma);
    let lambda = config.jump_rate()?;
    let global_rate = match config.collision_style {
        CollisionStyle::OneSided => n as f64 * lambda,
        // Paired updates touch two particles, so half the event rate gives
        // each particle the same marginal jump rate as the one-sided mode.
        CollisionStyle::Symmetric => n as f64 * lambda / 2.0,
    };

    let mut ensemble = init_ensemble(config, opts.replica)?;
    let mut rng = stream_rng(config.seed, opts.replica, StreamRole::Events);

    let mut output_times: Vec<f64> = opts
        .output_times
        .iter()
        .map(|&t| t.min(config.horizon).max(0.0))
        .collect();
    output_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    output_times.dedup();

    let mut snapshots = Vec::with_capacity(output_times.len());
    let mut next_output = 0usize;
    let mut events = Vec::new();
    let mut chains: Vec<JumpChain> = if opts.record_chains {
        ensemble
            .velocities
            .iter()
            .map(|&v0| JumpChain { v0, events: Vec::new() })
            .collect()
    } else {
        Vec::new()
    };

    let mut events_total = 0u64;
    let mut events_accepted = 0u64;
    let mut max_p_dev = 0.0f64;
    let mut max_e_dev = 0.0f64;

    let mut t = 0.0f64;
    loop {
        let gap = exponential(&mut rng, global_rate);
        let t_next = t + gap;
        while next_output < output_times.len() && output_times[next_output] <= t_next.min(config.horizon)
        {
            snapshots.push(Snapshot {
                time: output_times[next_output],
                velocities: ensemble.velocities.clone(),
            });
            next_output += 1;
        }
        if t_next > config.horizon {
            break;
        }
        t = t_next;
        events_total += 1;

        let i = index(&mut rng, n);
        let j_raw = index(&mut rng, n - 1);
        let j = if j_raw >= i { j_raw + 1 } else { j_raw };
        let z = range_f64(&mut rng, -z_max, z_max);
        let u = range_f64(&mut rng, 0.0, u_max);

        let vi = ensemble.velocities[i];
        let vj = ensemble.velocities[j];
        let w = vi - vj;
        let thinning_ok = u <= pow(config.mollifier.phi_unchecked(w.norm()), gamma);

        let accepted = match config.collision_style {
            CollisionStyle::OneSided => {
                if thinning_ok {
                    let amp = indicator_i_zeta(z, config.zeta, &config.kernel)?;
                    if amp > 0.0 {
                        let theta = config.kernel.vartheta(z);
                        let jump = DeviationMatrix::new(theta).matrix().mul_vec(w) * amp;
                        ensemble.velocities[i] = vi + jump;
                        true
                    } else {
                        false
                    }
                } else {
                    false
                }
            }
            CollisionStyle::Symmetric => {
                // Sharp angular window: a partial-amplitude paired update
                // would break exact pairwise conservation.
                if thinning_ok && fabs(z) <= g_zeta {
                    let theta = config.kernel.vartheta(z);
                    let jump = DeviationMatrix::new(theta).matrix().mul_vec(w);
                    let vi_new = vi + jump;
                    let vj_new = vj - jump;
                    let p_before = vi + vj;
                    let p_after = vi_new + vj_new;
                    let e_before = vi.norm_sq() + vj.norm_sq();
                    let e_after = vi_new.norm_sq() + vj_new.norm_sq();
                    let p_scale = p_before.norm().max(vi.norm() + vj.norm()).max(1e-300);
                    max_p_dev = max_p_dev.max((p_after - p_before).norm() / p_scale);
                    max_e_dev = max_e_dev.max(fabs(e_after - e_before) / e_before.max(1e-300));
                    ensemble.velocities[i] = vi_new;
                    ensemble.velocities[j] = vj_new;
                    true
                } else {
                    false
                }
            }
        };
        if accepted {
            events_accepted += 1;
        }
        if opts.record_events {
            events.push(EventRecord { time: t, i: i as u32, j: j as u32, z, u, accepted });
        }
        if opts.record_chains {
            chains[i].events.push(ChainEvent {
                time: t,
                v_before: vi,
                partner: vj,
                z,
                u,
                accepted,
            });
        }
    }

    ensemble.time = config.horizon;
    Ok(SimOutput {
        snapshots,
        events,
        chains,
        events_total,
        events_accepted,
        max_momentum_dev: max_p_dev,
        max_energy_dev: max_e_dev,
        final_state: ensemble,
    })
}

/// Monte Carlo estimate of the acceptance probability
/// (1 / (2 Gamma^gamma)) mean phi^gamma(|V_i - V_j|) from the current state.
pub fn expected_acceptance_fraction<R: RngCore>(
    velocities: &[Vec2],
    config: &SimulationConfig,
    pairs: usize,
    rng: &mut R,
) -> f64 {
    let n = velocities.len();
    let gamma = config.kernel.gamma();
    let u_max = 2.0 * pow(config.mollifier.gamma_eps(), gamma);
    let mut acc = 0.0;
    for _ in 0..pairs {
        let i = index(rng, n);
        let j_raw = index(rng, n - 1);
        let j = if j_raw >= i { j_raw + 1 } else { j_raw };
        let d = (velocities[i] - velocities[j]).norm();
        acc += pow(config.mollifier.phi_unchecked(d), gamma) / u_max;
    }
    acc / pairs as f64
}

/// (1/N) sum exp(|V_i|^kappa), evaluated in log-sum-exp form. Requires
/// kappa in (nu, delta), the range where the truncated dynamics has a
/// uniformly bounded exponential moment.
pub fn estimate_exponential_moment(
    velocities: &[Vec2],
    kappa: f64,
    kernel: &KernelParams,
) -> Result<f64> {
    if !(kappa > kernel.nu() && kappa < kernel.delta()) {
        return Err(Error::domain(format!(
            "kappa = {kappa} violates nu < kappa < delta = ({}, {})",
            kernel.nu(),
            kernel.delta()
        )));
    }
    Ok(crate::math::exp(log_exponential_moment(velocities, kappa)))
}

/// log of (1/N) sum exp(|V_i|^kappa); finite even when the plain estimate
/// overflows.
pub fn log_exponential_moment(velocities: &[Vec2], kappa: f64) -> f64 {
    let xs: Vec<f64> = velocities.iter().map(|v| pow(v.norm(), kappa)).collect();
    crate::math::log_mean_exp(&xs)
}

/// Lower-bound certificate for the mass outside balls: the best (r0, q0)
/// with min over centers of the fraction of particles at distance >= r0
/// being at least q0.
#[derive(Debug, Clone)]
pub struct MassLowerBound {
    pub r0: f64,
    pub q0: f64,
    /// (r, worst-case fraction) per probed radius.
    pub table: Vec<(f64, f64)>,
}

/// Scans centers over a grid covering the ball of radius sqrt(2 e0) + 1;
/// beyond that radius the Chebyshev certificate
/// f({|v - w| >= 1}) >= 1 - e0/(|w|-1)^2 >= 1/2 applies, so reported
/// fractions are capped at 1/2 and radii restricted to (0, 1].
pub fn mass_lower_bound(
    velocities: &[Vec2],
    r_grid: &[f64],
    center_step: f64,
) -> Result<MassLowerBound> {
    if velocities.is_empty() {
        return Err(Error::domain(String::from("empty ensemble")));
    }
    if r_grid.is_empty() || r_grid.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::domain(String::from("radius grid must lie in (0, 1]")));
    }
    if !(center_step > 0.0) {
        return Err(Error::domain(String::from("center grid step must be positive")));
    }
    let n = velocities.len() as f64;
    let e0 = velocities.iter().map(|v| v.norm_sq()).sum::<f64>() / n;
    let a = sqrt(2.0 * e0) + 1.0;
    let steps = (2.0 * a / center_step) as i64 + 1;
    let mut table = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let mut worst = 0.5f64; // far-field certificate
        let r_sq = r * r;
        for ix in 0..=steps {
            let wx = -a + ix as f64 * center_step;
            for iy in 0..=steps {
                let wy = -a + iy as f64 * center_step;
                if wx * wx + wy * wy > a * a + 1e-12 {
                    continue;
                }
                let w = Vec2::new(wx, wy);
                let count = velocities
                    .iter()
                    .filter(|v| (**v - w).norm_sq() >= r_sq)
                    .count();
                worst = worst.min(count as f64 / n);
                if worst == 0.0 {
                    break;
                }
            }
        }
        table.push((r, worst));
    }
    // Best pair: maximal worst-case fraction, largest radius on ties.
    let mut best = (table[0].0, table[0].1);
    for &(r, q) in &table {
        if q > best.1 + 1e-15 || (fabs(q - best.1) <= 1e-15 && r > best.0) {
            best = (r, q);
        }
    }
    Ok(MassLowerBound { r0: best.0, q0: best.1, table })
}

/// Which parameter the coupled-level study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingParameter {
    Zeta,
    Epsilon,
}

/// One leg of a coupled run: its angular cutoff and mollifier.
#[derive(Debug, Clone)]
pub struct CouplingLeg {
    pub zeta: f64,
    pub mollifier: MollifierParams,
}

#[derive(Debug, Clone)]
pub struct CouplingGaps {
    pub levels: Vec<f64>,
    pub reference: f64,
    pub times: Vec<f64>,
    /// gap_means[level][time] = mean over particles of |V^level - V^ref|^beta.
    pub gap_means: Vec<Vec<f64>>,
}

/// Advances several legs under one shared event stream (same event times,
/// particle indices, z and u draws); jumps present only in a finer leg are
/// applied only there because the coarser leg's indicator or thinning bound
/// vanishes on them. Legs with identical parameters stay identical pathwise.
///
/// Returns, per sorted output time, the mean over particles of
/// |V^leg - V^last|^beta for every leg except the last (the reference).
pub fn run_coupled_legs(
    config: &SimulationConfig,
    legs: &[CouplingLeg],
    beta: f64,
    output_times: &[f64],
    replica: u64,
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    if legs.len() < 2 {
        return Err(Error::config(String::from("coupling needs at least two legs")));
    }
    if !(beta > config.kernel.nu() && beta <= 1.0) {
        return Err(Error::domain(format!(
            "beta = {beta} violates nu < beta <= 1 (nu = {})",
            config.kernel.nu()
        )));
    }
    let gamma = config.kernel.gamma();
    let n = config.n_particles;

    // Event stream sized by the widest leg in each coordinate.
    let mut g_max = 0.0f64;
    let mut cap_max = 0.0f64;
    let mut g_leg = Vec::with_capacity(legs.len());
    for leg in legs {
        let g = config.kernel.eval_g(leg.zeta)?;
        g_leg.push(g);
        g_max = g_max.max(g);
        cap_max = cap_max.max(leg.mollifier.gamma_eps());
    }
    let z_max = g_max + 1.0;
    let u_max = 2.0 * pow(cap_max, gamma);
    let global_rate = n as f64 * 4.0 * (g_max + 1.0) * pow(cap_max, gamma);

    let base = init_ensemble(config, replica)?;
    let mut states: Vec<Vec<Vec2>> = legs.iter().map(|_| base.velocities.clone()).collect();

    let mut rng = stream_rng(config.seed, replica, StreamRole::Events);
    let mut times: Vec<f64> = output_times
        .iter()
        .map(|&t| t.min(config.horizon).max(0.0))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let reference = legs.len() - 1;
    let gap_row = |states: &[Vec<Vec2>]| -> Vec<f64> {
        (0..reference)
            .map(|leg_idx| {
                let acc: f64 = states[leg_idx]
                    .iter()
                    .zip(&states[reference])
                    .map(|(a, b)| pow((*a - *b).norm(), beta))
                    .sum();
                acc / n as f64
            })
            .collect()
    };

    let mut per_time: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    let mut next_output = 0usize;
    let mut t = 0.0f64;
    loop {
        let t_next = t + exponential(&mut rng, global_rate);
        while next_output < times.len() && times[next_output] <= t_next.min(config.horizon) {
            per_time.push(gap_row(&states));
            next_output += 1;
        }
        if t_next > config.horizon {
            break;
        }
        t = t_next;
        let i = index(&mut rng, n);
        let j_raw = index(&mut rng, n - 1);
        let j = if j_raw >= i { j_raw + 1 } else { j_raw };
        let z = range_f64(&mut rng, -z_max, z_max);
        let u = range_f64(&mut rng, 0.0, u_max);
        let theta = config.kernel.vartheta(z);
        let dev = DeviationMatrix::new(theta).matrix();
        for (leg_idx, leg) in legs.iter().enumerate() {
            if fabs(z) >= g_leg[leg_idx] + 1.0 {
                continue; // indicator vanishes for this leg
            }
            let vi = states[leg_idx][i];
            let vj = states[leg_idx][j];
            let w = vi - vj;
            if u <= pow(leg.mollifier.phi_unchecked(w.norm()), gamma) {
                let amp = indicator_i_zeta(z, leg.zeta, &config.kernel)?;
                if amp > 0.0 {
                    states[leg_idx][i] = vi + dev.mul_vec(w) * amp;
                }
            }
        }
    }

    Ok(per_time)
}

/// Coupled-level convergence study: each requested level runs against a
/// fine reference level (min(levels)/4) under shared event randomness.
/// Levels must be strictly decreasing.
pub fn run_coupling(
    config: &SimulationConfig,
    parameter: CouplingParameter,
    levels: &[f64],
    beta: f64,
    output_times: &[f64],
    replica: u64,
) -> Result<CouplingGaps> {
    if levels.len() < 2 {
        return Err(Error::config(String::from("need at least two levels")));
    }
    for pair in levels.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::config(String::from(
                "levels must be strictly decreasing (coarse to fine)",
            )));
        }
    }
    let reference = levels[levels.len() - 1] / 4.0;
    let mut legs = Vec::with_capacity(levels.len() + 1);
    for &level in levels.iter().chain(core::iter::once(&reference)) {
        let leg = match parameter {
            CouplingParameter::Zeta => CouplingLeg {
                zeta: level,
                mollifier: config.mollifier.clone(),
            },
            CouplingParameter::Epsilon => CouplingLeg {
                zeta: config.zeta,
                mollifier: MollifierParams::new(level, config.mollifier.eta0())?,
            },
        };
        legs.push(leg);
    }
    let raw = run_coupled_legs(config, &legs, beta, output_times, replica)?;
    let mut times: Vec<f64> = output_times
        .iter()
        .map(|&t| t.min(config.horizon).max(0.0))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let mut gap_means = alloc::vec![Vec::with_capacity(times.len()); levels.len()];
    for gaps_at_t in &raw {
        for (level_idx, &gap) in gaps_at_t.iter().enumerate() {
            gap_means[level_idx].push(gap);
        }
    }
    Ok(CouplingGaps { levels: levels.to_vec(), reference, times, gap_means })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(style: CollisionStyle, law: InitialLaw, n: usize) -> SimulationConfig {
        SimulationConfig {
            kernel: KernelParams::new(0.75, 0.25, 0.9, 1.2).unwrap(),
            mollifier: MollifierParams::new(0.01, 1.2).unwrap(),
            zeta: 0.05,
            n_particles: n,
            horizon: 1.0,
            collision_style: style,
            initial_law: law,
            seed: 20260810,
        }
    }

    #[test]
    fn config_validation_catches_degenerate_laws() {
        let mut c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 0.0 }, 100);
        assert!(c.validate().is_err());
        c.initial_law = InitialLaw::TwoPoint { w: Vec2::ZERO };
        assert!(c.validate().is_err());
        c.initial_law = InitialLaw::TwoPoint { w: Vec2::new(1.0, 0.0) };
        c.n_particles = 101;
        assert!(c.validate().is_err());
        c.n_particles = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn jump_rate_closed_form() {
        let c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 2.0 }, 10);
        let g = c.kernel.eval_g(0.05).unwrap();
        let expected = 4.0 * (g + 1.0) * pow(c.mollifier.gamma_eps(), 0.75);
        assert_eq!(c.jump_rate().unwrap(), expected);
    }

    #[test]
    fn two_point_init_is_exactly_balanced() {
        let c = config(
            CollisionStyle::OneSided,
            InitialLaw::TwoPoint { w: Vec2::new(1.0, 0.0) },
            1000,
        );
        let ens = init_ensemble(&c, 0).unwrap();
        let m = ens.momentum();
        assert_eq!(m, Vec2::ZERO);
        assert!((ens.energy() - 1.0).abs() < 1e-15);
        for v in &ens.velocities {
            assert!(v.x.abs() == 1.0 && v.y == 0.0);
        }
    }

    #[test]
    fn gaussian_init_energy_within_clt_band() {
        let n = 100_000;
        let c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 2.0 }, n);
        let ens = init_ensemble(&c, 0).unwrap();
        assert!(ens.momentum().norm() < 1e-12);
        // |v|^2 has variance e0^2 = 4 for the isotropic Gaussian; 5 sigma band.
        let tol = 5.0 * 2.0 / (n as f64).sqrt();
        assert!((ens.energy() - 2.0).abs() < tol, "energy {}", ens.energy());
    }

    #[test]
    fn determinism_same_seed_same_output() {
        let c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 2.0 }, 200);
        let opts = SimOptions {
            output_times: alloc::vec![0.5, 1.0],
            record_events: true,
            ..Default::default()
        };
        let a = simulate(&c, &opts).unwrap();
        let b = simulate(&c, &opts).unwrap();
        assert_eq!(a.events.len(), b.events.len());
        for (x, y) in a.events.iter().zip(b.events.iter()) {
            assert_eq!(x, y);
        }
        for (sa, sb) in a.snapshots.iter().zip(b.snapshots.iter()) {
            assert_eq!(sa.velocities, sb.velocities);
        }
    }

    #[test]
    fn rejected_events_leave_the_state_unchanged() {
        // Replay the event log applying accepted events only; the result
        // must match the simulated final state exactly, so rejected events
        // are pure clock ticks.
        let mut c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 2.0 }, 200);
        c.horizon = 0.3;
        let opts = SimOptions {
            output_times: alloc::vec![0.3],
            record_events: true,
            ..Default::default()
        };
        let out = simulate(&c, &opts).unwrap();
        assert!(out.events_total > out.events_accepted);
        let mut state = init_ensemble(&c, 0).unwrap().velocities;
        for ev in &out.events {
            if !ev.accepted {
                continue;
            }
            let (i, j) = (ev.i as usize, ev.j as usize);
            let w = state[i] - state[j];
            let amp = indicator_i_zeta(ev.z, c.zeta, &c.kernel).unwrap();
            let theta = c.kernel.vartheta(ev.z);
            state[i] += DeviationMatrix::new(theta).matrix().mul_vec(w) * amp;
        }
        assert_eq!(state, out.final_state.velocities);
        // Degenerate horizon: no events at all.
        c.horizon = 0.0;
        let out0 = simulate(&c, &SimOptions::default()).unwrap();
        assert_eq!(out0.events_total, 0);
        assert_eq!(out0.final_state.velocities, init_ensemble(&c, 0).unwrap().velocities);
    }

    #[test]
    fn symmetric_mode_conserves_per_event() {
        let c = config(CollisionStyle::Symmetric, InitialLaw::Gaussian { e0: 2.0 }, 500);
        let opts = SimOptions { output_times: alloc::vec![1.0], ..Default::default() };
        let out = simulate(&c, &opts).unwrap();
        assert!(out.events_accepted > 0);
        assert!(out.max_momentum_dev <= 1e-12, "momentum dev {}", out.max_momentum_dev);
        assert!(out.max_energy_dev <= 1e-12, "energy dev {}", out.max_energy_dev);
        // Whole-run conservation follows.
        assert!(out.final_state.momentum().norm() < 1e-9);
        assert!((out.final_state.energy() - init_ensemble(&c, 0).unwrap().energy()).abs() < 1e-9);
    }

    #[test]
    fn acceptance_fraction_matches_pair_estimate_and_is_below_half() {
        let c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 2.0 }, 2000);
        let opts = SimOptions { output_times: alloc::vec![1.0], ..Default::default() };
        let out = simulate(&c, &opts).unwrap();
        let frac = out.acceptance_fraction();
        assert!(frac > 0.0 && frac <= 0.5);
        let mut rng = stream_rng(5, 9, StreamRole::Diagnostics);
        let predicted =
            expected_acceptance_fraction(&out.final_state.velocities, &c, 200_000, &mut rng);
        // Three sigma of the binomial with ~lambda*N*T trials.
        let trials = out.events_total as f64;
        let band = 3.0 * sqrt(predicted * (1.0 - predicted) / trials) + 0.01;
        assert!((frac - predicted).abs() < band, "{frac} vs {predicted}");
    }

    #[test]
    fn exponential_moment_examples() {
        let kern = KernelParams::new(0.75, 0.25, 0.9, 1.2).unwrap();
        let zeros = alloc::vec![Vec2::ZERO; 10];
        assert!((estimate_exponential_moment(&zeros, 0.5, &kern).unwrap() - 1.0).abs() < 1e-15);
        let atoms = alloc::vec![Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)];
        let m = estimate_exponential_moment(&atoms, 0.5, &kern).unwrap();
        assert!((m - core::f64::consts::E).abs() < 1e-12);
        assert!(estimate_exponential_moment(&atoms, 0.2, &kern).is_err());
        assert!(estimate_exponential_moment(&atoms, 0.95, &kern).is_err());
    }

    #[test]
    fn mass_lower_bound_two_point() {
        let atoms: Vec<Vec2> = (0..100)
            .map(|k| if k % 2 == 0 { Vec2::new(1.0, 0.0) } else { Vec2::new(-1.0, 0.0) })
            .collect();
        let grid = [0.25, 0.5, 0.75, 1.0];
        let mb = mass_lower_bound(&atoms, &grid, 0.05).unwrap();
        assert!((mb.q0 - 0.5).abs() < 1e-12, "q0 = {}", mb.q0);
        assert!((mb.r0 - 1.0).abs() < 1e-12, "r0 = {}", mb.r0);
    }

    #[test]
    fn mass_lower_bound_single_atom_degenerates() {
        let atoms = alloc::vec![Vec2::ZERO; 64];
        let mb = mass_lower_bound(&atoms, &[0.5, 1.0], 0.25).unwrap();
        assert_eq!(mb.q0, 0.0);
    }

    #[test]
    fn coupled_identical_legs_have_zero_gap() {
        let c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 2.0 }, 300);
        let legs = alloc::vec![
            CouplingLeg { zeta: 0.05, mollifier: c.mollifier.clone() },
            CouplingLeg { zeta: 0.05, mollifier: c.mollifier.clone() },
        ];
        let gaps = run_coupled_legs(&c, &legs, 1.0, &[0.5, 1.0], 0).unwrap();
        for at_t in gaps {
            assert_eq!(at_t[0], 0.0);
        }
    }

    #[test]
    fn coupling_levels_must_decrease() {
        let c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 2.0 }, 100);
        assert!(run_coupling(&c, CouplingParameter::Zeta, &[0.1, 0.2], 1.0, &[1.0], 0).is_err());
        assert!(run_coupling(&c, CouplingParameter::Zeta, &[0.1, 0.1], 1.0, &[1.0], 0).is_err());
        assert!(run_coupling(&c, CouplingParameter::Zeta, &[0.1], 1.0, &[1.0], 0).is_err());
    }

    #[test]
    fn epsilon_coupling_gap_shrinks_with_level() {
        let mut c = config(CollisionStyle::OneSided, InitialLaw::Gaussian { e0: 2.0 }, 400);
        c.horizon = 0.5;
        let gaps = run_coupling(
            &c,
            CouplingParameter::Epsilon,
            &[0.08, 0.02],
            1.0,
            &[0.5],
            0,
        )
        .unwrap();
        let coarse = gaps.gap_means[0][0];
        let fine = gaps.gap_means[1][0];
        assert!(fine <= coarse + 1e-12, "fine {fine} coarse {coarse}");
    }
}
