//! Serializable report types embedded in every JSON artifact. Field order
//! is declaration order, which keeps serialized output stable.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub config: RunConfig,
    pub gamma: f64,
    pub nu: f64,
    pub s: Option<f64>,
    pub admissible: bool,
    pub a: f64,
    pub q: f64,
    /// Exact rational rendering (e.g. "8/7") when the inputs are rational
    /// and the value is exactly rational.
    pub a_exact: Option<String>,
    pub q_exact: Option<String>,
    pub q_gt_1: bool,
    pub q_gt_2: bool,
    pub sobolev_sup: f64,
    pub sobolev_sup_exact: Option<String>,
    /// p(a)/a - 1; zero at the fixed point.
    pub fixed_point_residual: f64,
    pub schedule_target: Option<f64>,
    pub schedule: Option<Vec<f64>>,
    /// Potential-index thresholds of the realistic family located by
    /// bisection: admissibility, q > 1, q > 2.
    pub s_thresholds: SThresholds,
    /// Fitted sandwich constants for the angle substitution and its
    /// derivatives over a log grid.
    pub envelopes: EnvelopeFits,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SThresholds {
    pub admissible: f64,
    pub q_gt_1: f64,
    pub q_gt_2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeFits {
    pub vartheta_ratio: [f64; 2],
    pub vartheta_d1_ratio: [f64; 2],
    pub vartheta_d2_ratio: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationReport {
    pub config: RunConfig,
    pub collision_style: String,
    pub replicas: u64,
    pub events_total: u64,
    pub acceptance_fraction: f64,
    /// Largest per-event relative deviation across replicas (symmetric mode).
    pub max_momentum_dev_per_event: f64,
    pub max_energy_dev_per_event: f64,
    pub rows: Vec<ConservationRow>,
    /// All rows within their 5-standard-error bands.
    pub within_5se: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationRow {
    pub time: f64,
    pub momentum_mean: [f64; 2],
    pub momentum_se: [f64; 2],
    /// Replicate mean and standard error of energy(t) - energy(0).
    pub energy_drift_mean: f64,
    pub energy_drift_se: f64,
    pub within_5se: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingReport {
    pub config: RunConfig,
    pub parameter: String,
    pub beta: f64,
    pub levels: Vec<f64>,
    pub reference_level: f64,
    pub replicas: u64,
    pub rows: Vec<CouplingRow>,
    /// Least-squares slope of log mean-gap against log level at the final
    /// output time.
    pub slope: f64,
    pub slope_intercept: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingRow {
    pub level: f64,
    pub time: f64,
    pub mean_gap: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MalliavinReport {
    pub config: RunConfig,
    pub chains: usize,
    /// Max operator norm of the flow over all chains and event times.
    pub flow_norm_max: f64,
    /// Smallest covariance eigenvalue seen (PSD check).
    pub sigma_min_eigenvalue: f64,
    /// Fraction of chains with localization weight 1 at the horizon.
    pub localized_fraction: f64,
    pub per_replica: Vec<ReplicaDiagnostics>,
    pub inverse_det_moments: Vec<InverseDetRow>,
    pub laplace: LaplaceSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaDiagnostics {
    pub replica: u64,
    pub rows: Vec<DiagnosticsRow>,
}

/// Tagged-particle diagnostics at one output time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub time: f64,
    pub det_y: f64,
    pub opnorm_y_inv: f64,
    pub trace_sigma: f64,
    pub det_reg: f64,
    pub g_weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseDetRow {
    pub p: f64,
    pub time: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaplaceSection {
    pub time: f64,
    pub directions: usize,
    pub radii: Vec<f64>,
    pub means: Vec<f64>,
    /// Fitted pre-saturation decay exponent of -log E[exp(-xi S xi)] in
    /// log |xi|, with the window actually used.
    pub fitted_exponent: Option<f64>,
    pub fit_points: usize,
    /// Theory predicts nu / (2 + nu).
    pub predicted_exponent: f64,
    pub monotone: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub config: RunConfig,
    pub predicted_q: Option<f64>,
    pub fitted_slope: Option<f64>,
    pub noise_floor: f64,
}
