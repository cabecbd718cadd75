//! Experiment drivers behind the CLI subcommands. Replicas run in parallel
//! with RNG streams derived from (seed, replica, role) and are collected in
//! replica order, so artifacts are byte-identical across reruns.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use boltz2d::kernel::KernelParams;
use boltz2d::malliavin::{
    self, inverse_det_moment, laplace_table, localization_weight, regularized_det, tangent_flow,
    LaplacePoint,
};
use boltz2d::math::{exp, linear_fit, ln, pow, sqrt};
use boltz2d::particles::{
    run_coupling, simulate, CollisionStyle, CouplingParameter, SimOptions, SimulationConfig,
};
use boltz2d::regularity::{
    self, admissibility_gap, bootstrap_schedule, decay_fit, exponent_a, exponent_q, p_alpha,
};
use boltz2d::rng::{stream_rng, StreamRole};
use boltz2d::Vec2;

use crate::artifacts::{format_float, write_json, CsvArtifact};
use crate::config::RunConfig;
use crate::report::*;
use crate::{CliError, CliResult};

pub fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    Path::new(&cfg.run.output_dir).join(name)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    (boltz2d::math::mean(xs), boltz2d::math::standard_error(xs))
}

// ---------------------------------------------------------------- analyze

/// Locates the flip of a predicate over the potential index s by bisection.
fn bisect_s_flip(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    debug_assert!(!pred(lo) && pred(hi));
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn s_admissible(s: f64) -> bool {
    KernelParams::from_s(s)
        .map(|k| admissibility_gap(&k) > 0.0)
        .unwrap_or(false)
}

fn s_exponent_flag(s: f64, threshold: f64) -> bool {
    KernelParams::from_s(s)
        .ok()
        .and_then(|k| exponent_q(&k).ok())
        .map(|e| e.q > threshold)
        .unwrap_or(false)
}

pub fn s_family_thresholds() -> SThresholds {
    SThresholds {
        admissible: bisect_s_flip(5.5, 40.0, s_admissible),
        q_gt_1: bisect_s_flip(7.5, 40.0, |s| s_exponent_flag(s, 1.0)),
        q_gt_2: bisect_s_flip(13.8, 80.0, |s| s_exponent_flag(s, 2.0)),
    }
}

fn envelope_fits(kernel: &KernelParams) -> EnvelopeFits {
    let inv_nu = 1.0 / kernel.nu();
    let mut r0 = [f64::INFINITY, 0.0];
    let mut r1 = [f64::INFINITY, 0.0];
    let mut r2 = [f64::INFINITY, 0.0];
    let mut z = 1e-3;
    while z <= 1e6 {
        let e0 = kernel.vartheta(z) / pow(1.0 + z, -inv_nu);
        let e1 = kernel.vartheta_deriv(z, 1).unwrap().abs() / pow(1.0 + z, -inv_nu - 1.0);
        let e2 = kernel.vartheta_deriv(z, 2).unwrap().abs() / pow(1.0 + z, -inv_nu - 1.0);
        for (r, e) in [(&mut r0, e0), (&mut r1, e1), (&mut r2, e2)] {
            r[0] = r[0].min(e);
            r[1] = r[1].max(e);
        }
        z *= 1.7;
    }
    EnvelopeFits { vartheta_ratio: r0, vartheta_d1_ratio: r1, vartheta_d2_ratio: r2 }
}

pub fn run_analyze(cfg: &RunConfig, target_q: Option<f64>) -> CliResult<AnalyzeReport> {
    let kernel = cfg.kernel_params()?;
    let a = exponent_a(&kernel)?; // rejects inadmissible pairs
    let exps = exponent_q(&kernel)?;
    let schedule = match target_q {
        Some(t) => Some(bootstrap_schedule(t, &kernel)?),
        None => None,
    };
    // Exact rational path for integer s.
    let (mut a_exact, mut q_exact, mut sob_exact) = (None, None, None);
    if let Some(s) = kernel.s() {
        if s.fract() == 0.0 && s > 5.0 {
            use boltz2d::regularity::exact::{
                exponent_a_exact, exponent_q_exact, ratio, s_family, ExactValue,
            };
            let (g, n) = s_family(s as i64)?;
            if let ExactValue::Rational(r) = exponent_a_exact(&g, &n)? {
                a_exact = Some(r.to_string());
            }
            if let ExactValue::Rational(r) = exponent_q_exact(&g, &n)? {
                sob_exact = Some((r.clone() - ratio(1, 1)).to_string());
                q_exact = Some(r.to_string());
            }
        }
    }
    Ok(AnalyzeReport {
        config: cfg.resolved()?,
        gamma: kernel.gamma(),
        nu: kernel.nu(),
        s: kernel.s(),
        admissible: true,
        a,
        q: exps.q,
        a_exact,
        q_exact,
        q_gt_1: exps.q_gt_1,
        q_gt_2: exps.q_gt_2,
        sobolev_sup: exps.sobolev_sup,
        sobolev_sup_exact: sob_exact,
        fixed_point_residual: p_alpha(a, &kernel)? / a - 1.0,
        schedule_target: target_q,
        schedule,
        s_thresholds: s_family_thresholds(),
        envelopes: envelope_fits(&kernel),
    })
}

pub fn write_analyze(cfg: &RunConfig, target_q: Option<f64>) -> CliResult<PathBuf> {
    let report = run_analyze(cfg, target_q)?;
    let path = out_path(cfg, "analyze.json");
    write_json(&path, &report)?;
    Ok(path)
}

// --------------------------------------------------------------- simulate

pub struct SimulateArtifacts {
    pub snapshots_csv: PathBuf,
    pub conservation_json: PathBuf,
    pub events_csv: Option<PathBuf>,
    pub report: ConservationReport,
}

/// Per-replica summaries at the output times (with t = 0 prepended as the
/// conservation reference).
struct ReplicaSummary {
    momentum: Vec<[f64; 2]>,
    energy: Vec<f64>,
    events_total: u64,
    events_accepted: u64,
    max_p_dev: f64,
    max_e_dev: f64,
}

pub fn run_simulate(cfg: &RunConfig, event_log: bool) -> CliResult<SimulateArtifacts> {
    cfg.validate()?;
    let sim_config = cfg.simulation_config()?;
    let replicas = cfg.run.replicas;
    let mut times = cfg.run.output_times.clone();
    times.push(0.0);
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let opts_base = SimOptions { output_times: times.clone(), ..Default::default() };
    let summaries: Vec<CliResult<ReplicaSummary>> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let opts = SimOptions { replica, ..opts_base.clone() };
            let out = simulate(&sim_config, &opts)?;
            let momentum = out
                .snapshots
                .iter()
                .map(|s| {
                    let m = mean_vec(&s.velocities);
                    [m.x, m.y]
                })
                .collect();
            let energy = out
                .snapshots
                .iter()
                .map(|s| s.velocities.iter().map(|v| v.norm_sq()).sum::<f64>()
                    / s.velocities.len() as f64)
                .collect();
            Ok(ReplicaSummary {
                momentum,
                energy,
                events_total: out.events_total,
                events_accepted: out.events_accepted,
                max_p_dev: out.max_momentum_dev,
                max_e_dev: out.max_energy_dev,
            })
        })
        .collect();
    let summaries: Vec<ReplicaSummary> = summaries.into_iter().collect::<CliResult<_>>()?;

    // Replica 0 artifacts (snapshots and optional event log).
    let opts0 = SimOptions { replica: 0, record_events: event_log, ..opts_base };
    let out0 = simulate(&sim_config, &opts0)?;
    let mut snap_csv = CsvArtifact::new(&cfg.resolved()?, &["t", "particle_id", "vx", "vy"]);
    for snap in &out0.snapshots {
        for (pid, v) in snap.velocities.iter().enumerate() {
            snap_csv.push_row(&[
                format_float(snap.time),
                pid.to_string(),
                format_float(v.x),
                format_float(v.y),
            ]);
        }
    }
    let snapshots_csv = out_path(cfg, "snapshots.csv");
    snap_csv.write(&snapshots_csv)?;

    let events_csv = if event_log {
        let mut csv = CsvArtifact::new(&cfg.resolved()?, &["t_k", "i", "j", "z", "u", "accepted"]);
        for ev in &out0.events {
            csv.push_row(&[
                format_float(ev.time),
                ev.i.to_string(),
                ev.j.to_string(),
                format_float(ev.z),
                format_float(ev.u),
                (ev.accepted as u8).to_string(),
            ]);
        }
        let path = out_path(cfg, "events.csv");
        csv.write(&path)?;
        Some(path)
    } else {
        None
    };

    // Cross-replica conservation statistics.
    let mut rows = Vec::with_capacity(times.len());
    let mut all_within = true;
    for (ti, &t) in times.iter().enumerate() {
        let px: Vec<f64> = summaries.iter().map(|s| s.momentum[ti][0]).collect();
        let py: Vec<f64> = summaries.iter().map(|s| s.momentum[ti][1]).collect();
        let de: Vec<f64> = summaries.iter().map(|s| s.energy[ti] - s.energy[0]).collect();
        let (mx, sx) = mean_and_se(&px);
        let (my, sy) = mean_and_se(&py);
        let (me, se) = mean_and_se(&de);
        let ok = within_band(mx, sx) && within_band(my, sy) && within_band(me, se);
        all_within &= ok;
        rows.push(ConservationRow {
            time: t,
            momentum_mean: [mx, my],
            momentum_se: [sx, sy],
            energy_drift_mean: me,
            energy_drift_se: se,
            within_5se: ok,
        });
    }
    let events_total: u64 = summaries.iter().map(|s| s.events_total).sum();
    let events_accepted: u64 = summaries.iter().map(|s| s.events_accepted).sum();
    let report = ConservationReport {
        config: cfg.resolved()?,
        collision_style: cfg.simulation.collision_style.clone(),
        replicas,
        events_total,
        acceptance_fraction: if events_total > 0 {
            events_accepted as f64 / events_total as f64
        } else {
            0.0
        },
        max_momentum_dev_per_event: summaries.iter().map(|s| s.max_p_dev).fold(0.0, f64::max),
        max_energy_dev_per_event: summaries.iter().map(|s| s.max_e_dev).fold(0.0, f64::max),
        rows,
        within_5se: all_within,
    };
    let conservation_json = out_path(cfg, "conservation.json");
    write_json(&conservation_json, &report)?;
    Ok(SimulateArtifacts { snapshots_csv, conservation_json, events_csv, report })
}

fn within_band(mean: f64, se: f64) -> bool {
    if se == 0.0 {
        mean.abs() <= 1e-9
    } else {
        mean.abs() <= 5.0 * se
    }
}

fn mean_vec(vs: &[Vec2]) -> Vec2 {
    let mut acc = Vec2::ZERO;
    for v in vs {
        acc += *v;
    }
    acc * (1.0 / vs.len() as f64)
}

// ----------------------------------------------------------------- couple

pub struct CoupleArtifacts {
    pub rates_csv: PathBuf,
    pub fit_json: PathBuf,
    pub report: CouplingReport,
}

pub fn run_couple(
    cfg: &RunConfig,
    parameter: CouplingParameter,
    levels: &[f64],
    beta: f64,
) -> CliResult<CoupleArtifacts> {
    cfg.validate()?;
    let sim_config = cfg.simulation_config()?;
    let replicas = cfg.run.replicas;
    let times = {
        let mut t = cfg.run.output_times.clone();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t.dedup();
        t
    };
    let per_replica: Vec<CliResult<Vec<Vec<f64>>>> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let gaps = run_coupling(&sim_config, parameter, levels, beta, &times, replica)?;
            Ok(gaps.gap_means)
        })
        .collect();
    let per_replica: Vec<Vec<Vec<f64>>> = per_replica.into_iter().collect::<CliResult<_>>()?;

    let mut rows = Vec::new();
    let mut final_points = Vec::new();
    for (li, &level) in levels.iter().enumerate() {
        for (ti, &t) in times.iter().enumerate() {
            let gaps: Vec<f64> = per_replica.iter().map(|r| r[li][ti]).collect();
            let (m, se) = mean_and_se(&gaps);
            rows.push(CouplingRow { level, time: t, mean_gap: m, stderr: se });
            if ti + 1 == times.len() {
                final_points.push((ln(level), ln(m.max(1e-300))));
            }
        }
    }
    let fit = linear_fit(&final_points)
        .ok_or_else(|| CliError::Numeric("coupling slope fit degenerate".into()))?;

    let parameter_name = match parameter {
        CouplingParameter::Zeta => "zeta",
        CouplingParameter::Epsilon => "epsilon",
    };
    let report = CouplingReport {
        config: cfg.resolved()?,
        parameter: parameter_name.into(),
        beta,
        levels: levels.to_vec(),
        reference_level: levels[levels.len() - 1] / 4.0,
        replicas,
        rows,
        slope: fit.slope,
        slope_intercept: fit.intercept,
    };

    let mut csv = CsvArtifact::new(&cfg.resolved()?, &["parameter", "level", "time", "mean_gap", "stderr"]);
    for row in &report.rows {
        csv.push_row(&[
            parameter_name.into(),
            format_float(row.level),
            format_float(row.time),
            format_float(row.mean_gap),
            format_float(row.stderr),
        ]);
    }
    let rates_csv = out_path(cfg, "couple_rates.csv");
    csv.write(&rates_csv)?;
    let fit_json = out_path(cfg, "couple_fit.json");
    write_json(&fit_json, &report)?;
    Ok(CoupleArtifacts { rates_csv, fit_json, report })
}

// -------------------------------------------------------------- malliavin

pub struct MalliavinArtifacts {
    pub diagnostics_json: PathBuf,
    pub report: MalliavinReport,
}

struct ReplicaMalliavin {
    diagnostics: ReplicaDiagnostics,
    cores: Vec<boltz2d::Mat2>,
    dets_final: Vec<f64>,
    flow_norm_max: f64,
    sigma_min_eig: f64,
    localized: usize,
    chains: usize,
}

/// Rebuilds the jump chains of a recorded run from its artifacts: the t = 0
/// rows of the snapshot CSV give the initial ensemble, the event-log CSV the
/// replayable event stream.
pub fn chains_from_artifacts(
    snapshots_csv: &Path,
    events_csv: &Path,
    zeta: f64,
    kernel: &KernelParams,
) -> CliResult<Vec<boltz2d::malliavin::JumpChain>> {
    let snap_text = std::fs::read_to_string(snapshots_csv)?;
    let mut initial: Vec<(usize, Vec2)> = Vec::new();
    for line in data_rows(&snap_text) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::Config(format!("malformed snapshot row: {line}")));
        }
        let t: f64 = parse_field(fields[0])?;
        if t != 0.0 {
            continue;
        }
        initial.push((
            parse_field::<usize>(fields[1])?,
            Vec2::new(parse_field(fields[2])?, parse_field(fields[3])?),
        ));
    }
    if initial.is_empty() {
        return Err(CliError::Config(
            "snapshot CSV has no t = 0 rows; rerun with 0 among the output times".into(),
        ));
    }
    initial.sort_by_key(|(pid, _)| *pid);
    let velocities: Vec<Vec2> = initial.into_iter().map(|(_, v)| v).collect();

    let ev_text = std::fs::read_to_string(events_csv)?;
    let mut events = Vec::new();
    for line in data_rows(&ev_text) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CliError::Config(format!("malformed event row: {line}")));
        }
        events.push(boltz2d::particles::EventRecord {
            time: parse_field(fields[0])?,
            i: parse_field(fields[1])?,
            j: parse_field(fields[2])?,
            z: parse_field(fields[3])?,
            u: parse_field(fields[4])?,
            accepted: parse_field::<u8>(fields[5])? != 0,
        });
    }
    Ok(boltz2d::malliavin::chains_from_event_log(&velocities, &events, zeta, kernel)?)
}

fn data_rows(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1) // header row
}

fn parse_field<T: std::str::FromStr>(s: &str) -> CliResult<T> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("unparseable CSV field '{s}'")))
}

/// Tangent, covariance, localization, and determinant diagnostics for one
/// set of chains: the first chain supplies the per-time rows, all chains
/// the aggregate statistics at the horizon.
fn analyze_chain_set(
    chains: &[boltz2d::malliavin::JumpChain],
    replica: u64,
    times: &[f64],
    zeta: f64,
    kernel: &KernelParams,
    moll: &boltz2d::mollifier::MollifierParams,
    t_final: f64,
) -> CliResult<ReplicaMalliavin> {
    let nu = kernel.nu();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let ts = tangent_flow(&chains[0], t, zeta, kernel)?;
        rows.push(DiagnosticsRow {
            time: t,
            det_y: ts.y.det(),
            opnorm_y_inv: ts.y_inv.op_norm(),
            trace_sigma: ts.sigma.trace(),
            det_reg: regularized_det(&ts.sigma, t.max(1e-12), zeta, nu)?,
            g_weight: localization_weight(&chains[0], t, zeta, kernel, moll)?,
        });
    }
    let mut cores = Vec::with_capacity(chains.len());
    let mut dets = Vec::with_capacity(chains.len());
    let mut flow_max = 0.0f64;
    let mut sig_min = f64::INFINITY;
    let mut localized = 0usize;
    for chain in chains {
        let ts = tangent_flow(chain, t_final, zeta, kernel)?;
        flow_max = flow_max.max(ts.y.op_norm());
        sig_min = sig_min.min(ts.sigma.sym_eigenvalues().0);
        cores.push(ts.s);
        dets.push(regularized_det(&ts.sigma, t_final, zeta, nu)?);
        if localization_weight(chain, t_final, zeta, kernel, moll)? == 1.0 {
            localized += 1;
        }
    }
    Ok(ReplicaMalliavin {
        diagnostics: ReplicaDiagnostics { replica, rows },
        cores,
        dets_final: dets,
        flow_norm_max: flow_max,
        sigma_min_eig: sig_min,
        localized,
        chains: chains.len(),
    })
}

pub fn run_malliavin(cfg: &RunConfig) -> CliResult<MalliavinArtifacts> {
    cfg.validate()?;
    let sim_config = cfg.simulation_config()?;
    if sim_config.collision_style == CollisionStyle::Symmetric {
        return Err(CliError::Config(
            "tangent diagnostics require the one-sided collision style".into(),
        ));
    }
    // Keep the weight U_zeta non-degenerate: need G(zeta) comfortably > 2.
    let g = sim_config.kernel.eval_g(sim_config.zeta)?;
    if g < 4.0 {
        return Err(CliError::Config(format!(
            "zeta = {} gives G(zeta) = {g} < 4; tangent weights degenerate",
            sim_config.zeta
        )));
    }
    let zeta = sim_config.zeta;
    let kernel = sim_config.kernel;
    let nu = kernel.nu();
    let t_final = sim_config.horizon;
    let times = {
        let mut t: Vec<f64> = cfg.run.output_times.iter().map(|&t| t.min(t_final)).collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t.dedup();
        t
    };
    let replicas = cfg.run.replicas;

    let per_replica: Vec<CliResult<ReplicaMalliavin>> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let opts = SimOptions {
                output_times: vec![t_final],
                record_chains: true,
                replica,
                ..Default::default()
            };
            let out = simulate(&sim_config, &opts)?;
            analyze_chain_set(
                &out.chains,
                replica,
                &times,
                zeta,
                &kernel,
                &sim_config.mollifier,
                t_final,
            )
        })
        .collect();
    let per_replica: Vec<ReplicaMalliavin> = per_replica.into_iter().collect::<CliResult<_>>()?;

    let all_cores: Vec<boltz2d::Mat2> =
        per_replica.iter().flat_map(|r| r.cores.iter().copied()).collect();
    let all_dets: Vec<f64> =
        per_replica.iter().flat_map(|r| r.dets_final.iter().copied()).collect();
    let chains_total: usize = per_replica.iter().map(|r| r.chains).sum();
    let localized: usize = per_replica.iter().map(|r| r.localized).sum();

    let mut moments = Vec::new();
    let mut rng = stream_rng(cfg.simulation.seed, 0, StreamRole::Bootstrap);
    for p in [1.0, 2.0] {
        let est = inverse_det_moment(&all_dets, p, &mut rng)?;
        moments.push(InverseDetRow {
            p,
            time: t_final,
            mean: est.mean,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
        });
    }

    let laplace = laplace_section(&all_cores, nu, t_final, chains_total);
    let report = MalliavinReport {
        config: cfg.resolved()?,
        chains: chains_total,
        flow_norm_max: per_replica.iter().map(|r| r.flow_norm_max).fold(0.0, f64::max),
        sigma_min_eigenvalue: per_replica
            .iter()
            .map(|r| r.sigma_min_eig)
            .fold(f64::INFINITY, f64::min),
        localized_fraction: localized as f64 / chains_total as f64,
        per_replica: per_replica.into_iter().map(|r| r.diagnostics).collect(),
        inverse_det_moments: moments,
        laplace,
    };
    let diagnostics_json = out_path(cfg, "malliavin.json");
    write_json(&diagnostics_json, &report)?;
    Ok(MalliavinArtifacts { diagnostics_json, report })
}

/// Diagnostics for a previously recorded run: consumes the simulator's
/// snapshot and event-log CSV artifacts instead of re-simulating.
pub fn run_malliavin_from_artifacts(
    cfg: &RunConfig,
    snapshots_csv: &Path,
    events_csv: &Path,
) -> CliResult<MalliavinArtifacts> {
    let sim_config = cfg.simulation_config()?;
    if sim_config.collision_style == CollisionStyle::Symmetric {
        return Err(CliError::Config(
            "event-log replay assumes the one-sided collision style".into(),
        ));
    }
    let zeta = sim_config.zeta;
    let kernel = sim_config.kernel;
    let t_final = sim_config.horizon;
    let times = {
        let mut t: Vec<f64> = cfg.run.output_times.iter().map(|&t| t.min(t_final)).collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t.dedup();
        t
    };
    let chains = chains_from_artifacts(snapshots_csv, events_csv, zeta, &kernel)?;
    let analyzed = analyze_chain_set(
        &chains,
        0,
        &times,
        zeta,
        &kernel,
        &sim_config.mollifier,
        t_final,
    )?;
    let mut moments = Vec::new();
    let mut rng = stream_rng(cfg.simulation.seed, 0, StreamRole::Bootstrap);
    for p in [1.0, 2.0] {
        let est = inverse_det_moment(&analyzed.dets_final, p, &mut rng)?;
        moments.push(InverseDetRow {
            p,
            time: t_final,
            mean: est.mean,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
        });
    }
    let laplace = laplace_section(&analyzed.cores, kernel.nu(), t_final, analyzed.chains);
    let report = MalliavinReport {
        config: cfg.resolved()?,
        chains: analyzed.chains,
        flow_norm_max: analyzed.flow_norm_max,
        sigma_min_eigenvalue: analyzed.sigma_min_eig,
        localized_fraction: analyzed.localized as f64 / analyzed.chains as f64,
        per_replica: vec![analyzed.diagnostics],
        inverse_det_moments: moments,
        laplace,
    };
    let diagnostics_json = out_path(cfg, "malliavin.json");
    write_json(&diagnostics_json, &report)?;
    Ok(MalliavinArtifacts { diagnostics_json, report })
}

/// Builds the Laplace-transform table on a log radius grid scaled to the
/// ensemble (the unit radius makes the typical quadratic form order one)
/// and wide enough to reach the angular-cutoff saturation plateau; fits
/// the pre-saturation decay exponent over the window between level one and
/// ninety percent of the observed plateau.
pub fn laplace_section(
    cores: &[boltz2d::Mat2],
    nu: f64,
    t: f64,
    n_chains: usize,
) -> LaplaceSection {
    let mean_tr =
        cores.iter().map(|s| s.trace()).sum::<f64>() / cores.len().max(1) as f64;
    let r_base = if mean_tr > 0.0 { 1.0 / sqrt(0.5 * mean_tr) } else { 1.0 };
    let n_radii = 49usize;
    let radii: Vec<f64> = (0..n_radii)
        .map(|k| r_base * pow(10.0, -1.0 + 12.0 * k as f64 / (n_radii - 1) as f64))
        .collect();
    let directions = 8;
    let points = laplace_table(cores, &radii, directions);
    let monotone = points.windows(2).all(|w| w[1].mean <= w[0].mean + 1e-12);
    // Saturation plateau: the level reached at the top of the grid, capped
    // by what the replica count can resolve.
    let last_mean = points.last().map(|p| p.mean).unwrap_or(1.0);
    let plateau = if last_mean > 0.0 {
        (-ln(last_mean)).min(0.8 * ln(n_chains as f64))
    } else {
        0.8 * ln(n_chains as f64)
    };
    // The power branch of the predicted decay min(|xi|^(nu/(2+nu)), cap)
    // is read off between 30 and 90 percent of the saturation level: below
    // that sits the linear-response regime, above it the cutoff cap.
    let fit = malliavin::laplace_decay_fit(&points, (0.3 * plateau).max(1.0), 0.9 * plateau);
    LaplaceSection {
        time: t,
        directions,
        radii: points.iter().map(|p: &LaplacePoint| p.radius).collect(),
        means: points.iter().map(|p| p.mean).collect(),
        fitted_exponent: fit.map(|f| f.slope),
        fit_points: fit.map(|f| f.n_points).unwrap_or(0),
        predicted_exponent: nu / (2.0 + nu),
        monotone,
    }
}

// ---------------------------------------------------------------- spectrum

pub struct SpectrumArtifacts {
    pub spectrum_csv: PathBuf,
    pub summary: SpectrumSummary,
}

pub fn run_spectrum(cfg: &RunConfig, n_radii: usize, xi_max: Option<f64>) -> CliResult<SpectrumArtifacts> {
    cfg.validate()?;
    let sim_config = cfg.simulation_config()?;
    let kernel = sim_config.kernel;
    let n = sim_config.n_particles as f64;
    let noise_floor = 3.0 / sqrt(n);
    let predicted_q = exponent_q(&kernel).ok().map(|e| e.q);
    // Radius window sized so the predicted decay stays above the noise
    // floor: (1 + xi)^(-q) >= 3/sqrt(N).
    let xi_max = xi_max.unwrap_or_else(|| match predicted_q {
        Some(q) => pow(1.0 / noise_floor, 1.0 / q) - 1.0,
        None => 20.0,
    })
    .max(2.0);
    if n_radii < 2 {
        return Err(CliError::Config("spectrum needs at least two radii".into()));
    }
    let r_min = 1.0f64.min(xi_max / 2.0);
    let radii: Vec<f64> = (0..n_radii)
        .map(|k| {
            exp(ln(r_min) + (ln(xi_max) - ln(r_min)) * k as f64 / (n_radii - 1) as f64)
        })
        .collect();

    let opts = SimOptions {
        output_times: vec![sim_config.horizon],
        ..Default::default()
    };
    let out = simulate(&sim_config, &opts)?;
    let velocities = &out.snapshots.last().unwrap().velocities;
    let profile = regularity::char_fn_radial_profile(velocities, &radii, 16);
    let fit = decay_fit(&profile, noise_floor);
    let slope = fit.map(|f| f.slope);

    let mut csv = CsvArtifact::new(&cfg.resolved()?, &["|xi|", "mean_abs_fhat", "fit_slope"]);
    for p in &profile {
        csv.push_row(&[
            format_float(p.radius),
            format_float(p.mean_abs),
            slope.map(format_float).unwrap_or_else(|| "nan".into()),
        ]);
    }
    let spectrum_csv = out_path(cfg, "spectrum.csv");
    csv.write(&spectrum_csv)?;
    let summary = SpectrumSummary {
        config: cfg.resolved()?,
        predicted_q,
        fitted_slope: slope,
        noise_floor,
    };
    write_json(&out_path(cfg, "spectrum_summary.json"), &summary)?;
    Ok(SpectrumArtifacts { spectrum_csv, summary })
}

// -------------------------------------------------------------- drift-check

pub struct DriftCheckArtifacts {
    pub table_csv: PathBuf,
    pub fitted_c_kappa: f64,
    pub sign_violations: usize,
}

/// Sign-structure table for the collision drift integral: on the grid the
/// negative-drift regime is |V| >= 1 and |V| >= 130 |v| (the proof's
/// constant), where the integral must be negative.
pub fn run_drift_check(cfg: &RunConfig, kappa: f64) -> CliResult<DriftCheckArtifacts> {
    let kernel = cfg.kernel_params()?;
    if !(kappa > kernel.nu() && kappa < 1.0) {
        return Err(CliError::Config(format!(
            "kappa = {kappa} outside (nu, 1) with nu = {}",
            kernel.nu()
        )));
    }
    let v_mags = [0.0, 0.005, 0.02, 0.25, 1.0];
    let big_v_mags = [0.5, 1.0, 2.0, 5.0, 15.0, 50.0];
    let mut rows = Vec::new();
    for &vm in &v_mags {
        for &bm in &big_v_mags {
            let big_v = Vec2::new(bm, 0.0);
            let v = Vec2::new(vm, 0.0);
            let delta = kernel.drift_integral(big_v, v, kappa, 1e-9)?;
            let in_regime = bm >= 1.0 && bm >= 130.0 * vm;
            rows.push((bm, vm, delta, in_regime));
        }
    }
    let sign_violations = rows.iter().filter(|r| r.3 && r.2 >= 0.0).count();

    // Fit the smallest C with |Delta| <= C exp(C |v|^k) exp(C |V|^k) over
    // random pairs, by bisection in C (the bound is monotone in C).
    let mut rng = stream_rng(cfg.simulation.seed, 0, StreamRole::Diagnostics);
    let mut pairs = Vec::new();
    for _ in 0..40 {
        let big_v = Vec2::new(
            boltz2d::rng::range_f64(&mut rng, -3.0, 3.0),
            boltz2d::rng::range_f64(&mut rng, -3.0, 3.0),
        );
        let v = Vec2::new(
            boltz2d::rng::range_f64(&mut rng, -3.0, 3.0),
            boltz2d::rng::range_f64(&mut rng, -3.0, 3.0),
        );
        let delta = kernel.drift_integral(big_v, v, kappa, 1e-9)?;
        pairs.push((big_v, v, delta));
    }
    let bound_holds = |c: f64| {
        pairs.iter().all(|(big_v, v, delta)| {
            delta.abs() <= c * exp(c * (pow(v.norm(), kappa) + pow(big_v.norm(), kappa)))
        })
    };
    let (mut lo, mut hi) = (1e-9, 1e4);
    if !bound_holds(hi) {
        return Err(CliError::Numeric("drift bound constant fit diverged".into()));
    }
    for _ in 0..200 {
        let mid = sqrt(lo * hi);
        if bound_holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let fitted_c_kappa = hi;

    let mut csv = CsvArtifact::new(
        cfg,
        &["V_norm", "v_norm", "kappa", "delta", "negative_regime", "sign_ok"],
    );
    for (bm, vm, delta, in_regime) in &rows {
        csv.push_row(&[
            format_float(*bm),
            format_float(*vm),
            format_float(kappa),
            format_float(*delta),
            (*in_regime as u8).to_string(),
            ((!*in_regime || *delta < 0.0) as u8).to_string(),
        ]);
    }
    let table_csv = out_path(cfg, "drift_check.csv");
    csv.write(&table_csv)?;
    Ok(DriftCheckArtifacts { table_csv, fitted_c_kappa, sign_violations })
}

// ----------------------------------------------------- shared helpers

/// Collects the final-time covariance cores and determinants over replicas
/// for standalone studies (used by the acceptance suite).
pub struct ChainStudy {
    pub cores: Vec<boltz2d::Mat2>,
    pub dets: Vec<f64>,
    pub flow_norm_max: f64,
    pub sigma_min_eigenvalue: f64,
    pub chains: usize,
}

pub fn chain_study(sim_config: &SimulationConfig, replicas: u64, t: f64) -> CliResult<ChainStudy> {
    let zeta = sim_config.zeta;
    let kernel = sim_config.kernel;
    let nu = kernel.nu();
    let per: Vec<CliResult<ChainStudy>> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let opts = SimOptions {
                output_times: vec![t],
                record_chains: true,
                replica,
                ..Default::default()
            };
            let out = simulate(sim_config, &opts)?;
            let mut part = ChainStudy {
                cores: Vec::with_capacity(out.chains.len()),
                dets: Vec::with_capacity(out.chains.len()),
                flow_norm_max: 0.0,
                sigma_min_eigenvalue: f64::INFINITY,
                chains: out.chains.len(),
            };
            for chain in &out.chains {
                let ts = tangent_flow(chain, t, zeta, &kernel)?;
                part.flow_norm_max = part.flow_norm_max.max(ts.y.op_norm());
                part.sigma_min_eigenvalue =
                    part.sigma_min_eigenvalue.min(ts.sigma.sym_eigenvalues().0);
                part.cores.push(ts.s);
                part.dets.push(regularized_det(&ts.sigma, t, zeta, nu)?);
            }
            Ok(part)
        })
        .collect();
    let mut total = ChainStudy {
        cores: Vec::new(),
        dets: Vec::new(),
        flow_norm_max: 0.0,
        sigma_min_eigenvalue: f64::INFINITY,
        chains: 0,
    };
    for r in per {
        let part = r?;
        total.cores.extend(part.cores);
        total.dets.extend(part.dets);
        total.flow_norm_max = total.flow_norm_max.max(part.flow_norm_max);
        total.sigma_min_eigenvalue = total.sigma_min_eigenvalue.min(part.sigma_min_eigenvalue);
        total.chains += part.chains;
    }
    Ok(total)
}
