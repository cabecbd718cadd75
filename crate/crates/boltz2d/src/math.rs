//! Small numeric helpers shared across modules: `libm` re-exports for
//! `no_std` float math, the quintic smoothstep used by every cutoff
//! function, and least-squares / summary-statistics utilities.

pub use libm::{atan2, cos, exp, expm1, fabs, log as ln, pow, sin, sqrt};

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` clamped to [0,1].
///
/// C^2 at both ends, exactly 0 at t<=0, 1 at t>=1, and 1/2 at t=1/2.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
    }
}

/// Smooth descent from 1 to 0 as x runs over [lo, hi].
pub fn smooth_down(x: f64, lo: f64, hi: f64) -> f64 {
    1.0 - smoothstep((x - lo) / (hi - lo))
}

/// Smooth ascent from 0 to 1 as x runs over [lo, hi].
pub fn smooth_up(x: f64, lo: f64, hi: f64) -> f64 {
    smoothstep((x - lo) / (hi - lo))
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n-1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    sqrt(sample_variance(xs) / xs.len() as f64)
}

/// Ordinary least squares fit y = slope*x + intercept.
///
/// Returns `None` for fewer than two points or degenerate abscissae.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(LinearFit { slope, intercept: my - slope * mx, n_points: n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
}

/// Mean of exp(x_i) computed in log-sum-exp form; returns the log of the mean.
///
/// Keeps the estimator finite for arguments far beyond the naive exp overflow
/// threshold.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| exp(x - m)).sum();
    m + ln(s / xs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_midpoint() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn smoothstep_monotone() {
        let mut prev = -1.0;
        for k in 0..=1000 {
            let v = smoothstep(k as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn linear_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..20).map(|k| (k as f64, 3.0 * k as f64 - 2.0)).collect();
        let fit = linear_fit(&pts).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept + 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_mean_exp_handles_large_arguments() {
        let xs = [1000.0, 1000.0, 1000.0];
        assert!((log_mean_exp(&xs) - 1000.0).abs() < 1e-12);
        let ys = [0.0, 0.0];
        assert!(log_mean_exp(&ys).abs() < 1e-15);
    }
}
