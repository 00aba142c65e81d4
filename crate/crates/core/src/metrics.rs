//! Error metrics, run traces, and convergence-rate fits.

use alloc::vec::Vec;
use core::fmt;

/// Per-player snapshot inside a trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSnapshot {
    /// 0-based node id.
    pub player: usize,
    pub x: Vec<f64>,
    pub sigma_est: Vec<f64>,
    /// Own coordinate of the player's weight estimate.
    pub v_self: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 1-based iteration; the row holds the state at the start of it.
    pub k: u32,
    pub players: Vec<PlayerSnapshot>,
    /// Squared distance of the stacked strategies from the oracle profile.
    pub err_sq: f64,
    /// Gradient evaluations per player completed before this row.
    pub grad_evals_cum: u64,
    /// Communication rounds per player completed before this row.
    pub comms_cum: u64,
    /// Reset events (over all players) completed before this row.
    pub resets_cum: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    /// Error series indexed by iteration (element `k - 1` is row `k`).
    pub fn err_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.err_sq).collect()
    }

    /// First row whose cumulative communication count reaches `comms`.
    pub fn row_at_comms(&self, comms: u64) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.comms_cum >= comms)
    }

    pub fn row(&self, k: u32) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateModel {
    /// `err ~ c · a^k`.
    Geometric { a: f64 },
    /// `err ~ c / (k+1)^q`.
    Power { c: f64, q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub model: RateModel,
    pub r_squared: f64,
    /// Inclusive iteration window the fit used.
    pub window: (usize, usize),
    /// Set when the series is flat and the fit is degenerate.
    pub flat: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    DimensionMismatch { expected: usize, got: usize },
    NonPositiveValue { k: usize },
    WindowTooSmall,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            MetricsError::NonPositiveValue { k } => {
                write!(f, "nonpositive error value at iteration {k}; cannot fit logs")
            }
            MetricsError::WindowTooSmall => write!(f, "fit window needs at least two points"),
        }
    }
}

impl core::error::Error for MetricsError {}

/// Squared Euclidean distance between two stacked profiles.
pub fn squared_error(x: &[f64], x_star: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != x_star.len() {
        return Err(MetricsError::DimensionMismatch { expected: x_star.len(), got: x.len() });
    }
    Ok(x.iter().zip(x_star).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Least squares of `y` on `x` returning (slope, intercept, r_squared, flat).
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, bool) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if syy <= 1e-30 {
        // flat series: slope zero, degenerate correlation
        return (0.0, my, 0.0, true);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    (slope, intercept, 1.0 - ss_res / syy, false)
}

fn window_slice(errs: &[f64], window: (usize, usize)) -> Result<Vec<(f64, f64)>, MetricsError> {
    let (lo, hi) = window;
    if lo < 1 || hi > errs.len() || hi - lo < 1 {
        return Err(MetricsError::WindowTooSmall);
    }
    let mut out = Vec::with_capacity(hi - lo + 1);
    for k in lo..=hi {
        let e = errs[k - 1];
        if e <= 0.0 {
            return Err(MetricsError::NonPositiveValue { k });
        }
        out.push((k as f64, e));
    }
    Ok(out)
}

/// Fit `log err = log c + k log a` over the inclusive iteration window.
pub fn fit_geometric(errs: &[f64], window: (usize, usize)) -> Result<RateFit, MetricsError> {
    let pts = window_slice(errs, window)?;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| libm::log(p.1)).collect();
    let (slope, _, r2, flat) = line_fit(&xs, &ys);
    let a = if flat { 1.0 } else { libm::exp(slope) };
    Ok(RateFit { model: RateModel::Geometric { a }, r_squared: r2, window, flat })
}

/// Fit `log err = log c − q log(k+1)` over the inclusive iteration window.
pub fn fit_power(errs: &[f64], window: (usize, usize)) -> Result<RateFit, MetricsError> {
    let pts = window_slice(errs, window)?;
    let xs: Vec<f64> = pts.iter().map(|p| libm::log(p.0 + 1.0)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| libm::log(p.1)).collect();
    let (slope, intercept, r2, flat) = line_fit(&xs, &ys);
    let q = if flat { 0.0 } else { -slope };
    Ok(RateFit {
        model: RateModel::Power { c: libm::exp(intercept), q },
        r_squared: r2,
        window,
        flat,
    })
}

/// Window from iteration 3 until the error first drops below ten times the
/// final plateau (the mean of the last five values); excludes both the
/// start-up transient and the plateau itself.
pub fn pre_plateau_window(errs: &[f64]) -> (usize, usize) {
    let n = errs.len();
    if n < 5 {
        return (1, n.max(2));
    }
    let tail = &errs[n - 5..];
    let plateau = tail.iter().sum::<f64>() / tail.len() as f64;
    let mut hi = n;
    for (idx, &e) in errs.iter().enumerate() {
        if idx + 1 >= 3 && e < 10.0 * plateau {
            hi = idx + 1;
            break;
        }
    }
    (3.min(n), hi.max(4))
}

/// The last half of the iterations.
pub fn tail_window(len: usize) -> (usize, usize) {
    ((len / 2).max(1), len)
}
