//! Effective sample size, thinning, the radial uniformity test and the
//! steps-per-ESS mixing table.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crhmc_core::PolytopeModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("sample {index} is infeasible: {reason}")]
    InfeasibleSample { index: usize, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssReport {
    pub ess: Vec<f64>,
    /// Minimum over coordinates with nonzero variance (`N` if there are none).
    pub min_ess: f64,
    /// Last autocorrelation lag included for each coordinate.
    pub lags: Vec<usize>,
    /// Coordinates with zero variance.
    pub constant: Vec<bool>,
    pub n_samples: usize,
}

/// Biased (`1/N`) autocovariance at every lag, by zero-padded FFT.
pub fn autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in &mut buf {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.iter().take(n).map(|c| c.re / (len as f64 * n as f64)).collect()
}

/// Initial-monotone-sequence ESS of one series. Returns `(ess, last lag)`,
/// or `None` for a constant series.
fn ess_1d(x: &[f64]) -> Option<(f64, usize)> {
    let n = x.len();
    let acov = autocovariance(x);
    let var = acov[0];
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if !(var > (1e-14 * scale) * (1e-14 * scale)) {
        return None;
    }
    let rho = |k: usize| if k < n { acov[k] / var } else { 0.0 };
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut last = 0;
    let mut t = 0;
    while 2 * t < n {
        let mut pair = rho(2 * t) + rho(2 * t + 1);
        if pair <= 0.0 {
            break;
        }
        pair = pair.min(prev);
        prev = pair;
        sum += pair;
        last = (2 * t + 1).min(n - 1);
        t += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / n as f64);
    Some(((n as f64 / tau).min(n as f64), last))
}

/// Per-coordinate ESS of an `N x d` sample matrix (rows are samples).
pub fn ess(samples: &[Vec<f64>]) -> Result<EssReport, DiagError> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(DiagError::InsufficientData {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    let d = samples[0].len();
    if let Some(row) = samples.iter().find(|r| r.len() != d) {
        return Err(DiagError::DimensionMismatch {
            expected: d,
            found: row.len(),
        });
    }
    let mut report = EssReport {
        ess: Vec::with_capacity(d),
        min_ess: n as f64,
        lags: Vec::with_capacity(d),
        constant: Vec::with_capacity(d),
        n_samples: n,
    };
    let mut column = vec![0.0; n];
    for j in 0..d {
        for (c, row) in column.iter_mut().zip(samples) {
            *c = row[j];
        }
        match ess_1d(&column) {
            Some((e, lag)) => {
                report.ess.push(e);
                report.lags.push(lag);
                report.constant.push(false);
                report.min_ess = report.min_ess.min(e);
            }
            None => {
                report.ess.push(n as f64);
                report.lags.push(0);
                report.constant.push(true);
            }
        }
    }
    Ok(report)
}

fn keep_evenly(samples: &[Vec<f64>], keep: usize) -> Vec<Vec<f64>> {
    let n = samples.len();
    let keep = keep.clamp(1, n);
    (0..keep).map(|i| samples[i * n / keep].clone()).collect()
}

/// Two rounds of: compute the minimum ESS, keep that many evenly spaced
/// samples. A second round with fewer than ten samples is skipped.
pub fn thin_twice(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, DiagError> {
    let first = ess(samples)?;
    let once = keep_evenly(samples, first.min_ess.floor() as usize);
    if once.len() < MIN_SAMPLES {
        return Ok(once);
    }
    let second = ess(&once)?;
    Ok(keep_evenly(&once, second.min_ess.floor() as usize))
}

/// Slack allowed when checking samples against the model.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Gauge of each sample with respect to `center`: the smallest `r` with
/// `s ∈ center + r (P - center)`, found by a ratio test against the box faces.
pub fn uniformity_radii(
    samples: &[Vec<f64>],
    model: &PolytopeModel,
    center: &[f64],
) -> Result<Vec<f64>, DiagError> {
    let n = model.n();
    if center.len() != n {
        return Err(DiagError::DimensionMismatch {
            expected: n,
            found: center.len(),
        });
    }
    let eq_tol = 1e-6 * (1.0 + model.b.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            if s.len() != n {
                return Err(DiagError::DimensionMismatch {
                    expected: n,
                    found: s.len(),
                });
            }
            let viol = model.max_violation(s).unwrap_or(f64::INFINITY);
            let bound_viol = s
                .iter()
                .zip(model.lower.iter().zip(&model.upper))
                .map(|(&x, (&l, &u))| (l - x).max(x - u))
                .fold(f64::NEG_INFINITY, f64::max);
            if bound_viol > FEASIBILITY_SLACK || viol > eq_tol.max(FEASIBILITY_SLACK) {
                return Err(DiagError::InfeasibleSample {
                    index,
                    reason: format!("violation {viol:e}"),
                });
            }
            let mut r = 0.0f64;
            for i in 0..n {
                let d = s[i] - center[i];
                let room = if d > 0.0 {
                    model.upper[i] - center[i]
                } else if d < 0.0 {
                    model.lower[i] - center[i]
                } else {
                    continue;
                };
                if room != 0.0 {
                    r = r.max(d / room);
                }
            }
            Ok(r.min(1.0))
        })
        .collect()
}

/// `r^dim` for each radius; uniform on `[0, 1]` when the samples are.
pub fn radial_statistic(radii: &[f64], dim: usize) -> Vec<f64> {
    radii.iter().map(|r| r.powi(dim as i32)).collect()
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
/// the uniform CDF on `[0, 1]`.
pub fn ks_statistic(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Empirical CDF points `(value, fraction <= value)` for plotting.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingRow {
    pub model: String,
    pub n: usize,
    pub nnz: usize,
    pub min_ess: f64,
    pub steps_per_ess: f64,
    pub seconds_per_ess: f64,
    /// False when the minimum ESS is below ten.
    pub reliable: bool,
}

impl MixingRow {
    pub fn new(model: &str, n: usize, nnz: usize, steps: usize, seconds: f64, min_ess: f64) -> Self {
        Self {
            model: model.to_string(),
            n,
            nnz,
            min_ess,
            steps_per_ess: steps as f64 / min_ess,
            seconds_per_ess: seconds / min_ess,
            reliable: min_ess >= MIN_SAMPLES as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingReport {
    pub rows: Vec<MixingRow>,
    /// Least-squares slope of `log steps_per_ess` on `log n` over reliable
    /// rows; `None` with fewer than two distinct dimensions.
    pub slope: Option<f64>,
}

pub fn mixing_report(rows: Vec<MixingRow>) -> MixingReport {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.reliable && r.n > 0 && r.steps_per_ess > 0.0)
        .map(|r| ((r.n as f64).ln(), r.steps_per_ess.ln()))
        .collect();
    let slope = loglog_slope(&pts);
    MixingReport { rows, slope }
}

fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if pts.len() < 2 || sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

impl MixingReport {
    /// Plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<20} {:>8} {:>10} {:>10} {:>14} {:>14}\n",
            "model", "n", "nnz", "min_ess", "steps/ess", "sec/ess"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<20} {:>8} {:>10} {:>10.1} {:>14.3} {:>14.3e}{}\n",
                r.model,
                r.n,
                r.nnz,
                r.min_ess,
                r.steps_per_ess,
                r.seconds_per_ess,
                if r.reliable { "" } else { " *" }
            ));
        }
        if let Some(s) = self.slope {
            out.push_str(&format!("log-log slope of steps/ess vs n: {s:.3}\n"));
        }
        out
    }
}
