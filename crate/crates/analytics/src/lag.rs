//! Lag registration by maximizing the normalized cross-correlation.

use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};
use crate::metrics::pearson;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagResult {
    /// Displacement in samples: `y[t + lag]` lines up with `x[t]`.
    pub lag: i64,
    /// Pearson correlation of the overlapping samples at `lag`.
    pub score: f64,
}

/// The overlapping slices of `x` and `y` when `y` is displaced by `lag`.
pub fn overlap<'a>(x: &'a [f64], y: &'a [f64], lag: i64) -> (&'a [f64], &'a [f64]) {
    let start = 0i64.max(-lag);
    let end = (x.len() as i64).min(y.len() as i64 - lag);
    if end <= start {
        return (&[], &[]);
    }
    let (s, e) = (start as usize, end as usize);
    (&x[s..e], &y[(start + lag) as usize..(end + lag) as usize])
}

/// Finds the lag in `[-max_lag, max_lag]` with the highest correlation.
/// Ties go to the smaller `|lag|`, then to the negative lag. Lags whose
/// overlap has zero variance are skipped.
pub fn lag_register(x: &[f64], y: &[f64], max_lag: usize) -> Result<LagResult> {
    if max_lag >= x.len().min(y.len()) {
        return Err(AnalyticsError::InvalidArgument(format!(
            "max lag {max_lag} must be below the shorter length {}",
            x.len().min(y.len())
        )));
    }
    let max_lag = max_lag as i64;
    let candidates =
        std::iter::once(0).chain((1..=max_lag).flat_map(|k| [-k, k]));
    let mut best: Option<LagResult> = None;
    for lag in candidates {
        let (a, b) = overlap(x, y, lag);
        if a.len() < 3 {
            return Err(AnalyticsError::InvalidArgument(format!(
                "overlap at lag {lag} has {} samples, need at least 3",
                a.len()
            )));
        }
        let score = match pearson(a, b) {
            Ok(s) => s,
            Err(AnalyticsError::DegenerateInput(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|b| score > b.score) {
            best = Some(LagResult { lag, score });
        }
    }
    best.ok_or_else(|| AnalyticsError::DegenerateInput("every tested lag has zero variance".into()))
}
