//! Pairwise distance, error and similarity measures between two aligned
//! value sequences.
//!
//! Every symmetric measure is written so that swapping its arguments performs
//! the same floating-point operations on the same operands, which makes
//! `m(x, y) == m(y, x)` hold bit-for-bit, and self-application reproduces the
//! documented self-value exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{AnalyticsError, Result};

pub const SSIM_WINDOW: usize = 9;
pub const MI_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MetricId {
    Mse,
    Rmse,
    Mae,
    Pearson,
    Spearman,
    KendallTauB,
    Psnr,
    Ssim,
    MutualInformation,
    FTest,
}

impl MetricId {
    pub const ALL: [MetricId; 10] = [
        MetricId::Mse,
        MetricId::Rmse,
        MetricId::Mae,
        MetricId::Pearson,
        MetricId::Spearman,
        MetricId::KendallTauB,
        MetricId::Psnr,
        MetricId::Ssim,
        MetricId::MutualInformation,
        MetricId::FTest,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::Mse => "mse",
            MetricId::Rmse => "rmse",
            MetricId::Mae => "mae",
            MetricId::Pearson => "pearson",
            MetricId::Spearman => "spearman",
            MetricId::KendallTauB => "kendallTauB",
            MetricId::Psnr => "psnr",
            MetricId::Ssim => "ssim",
            MetricId::MutualInformation => "mutualInformation",
            MetricId::FTest => "fTest",
        }
    }

    /// Value attained on `(x, x)`. `None` when it depends on `x`
    /// (mutual information of a series with itself is its entropy).
    pub fn self_value(&self) -> Option<f64> {
        match self {
            MetricId::Mse | MetricId::Rmse | MetricId::Mae => Some(0.0),
            MetricId::Pearson | MetricId::Spearman | MetricId::KendallTauB | MetricId::Ssim => {
                Some(1.0)
            }
            MetricId::FTest => Some(1.0),
            MetricId::Psnr => Some(f64::INFINITY),
            MetricId::MutualInformation => None,
        }
    }

    /// All measures are symmetric; the F statistic is made symmetric by
    /// always dividing the larger variance by the smaller.
    pub fn is_symmetric(&self) -> bool {
        true
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AnalyticsError::InvalidArgument(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FTestResult {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricValue {
    Scalar(f64),
    FTest(FTestResult),
}

impl MetricValue {
    /// The number shown in a heatmap cell (the statistic for the F-test).
    pub fn score(&self) -> f64 {
        match self {
            MetricValue::Scalar(v) => *v,
            MetricValue::FTest(f) => f.statistic,
        }
    }
}

pub fn pair_metric(x: &[f64], y: &[f64], metric: MetricId) -> Result<MetricValue> {
    check_pair(x, y)?;
    let value = match metric {
        MetricId::Mse => mse(x, y),
        MetricId::Rmse => mse(x, y).sqrt(),
        MetricId::Mae => mae(x, y),
        MetricId::Pearson => pearson(x, y)?,
        MetricId::Spearman => spearman(x, y)?,
        MetricId::KendallTauB => kendall_tau_b(x, y)?,
        MetricId::Psnr => psnr(x, y),
        MetricId::Ssim => ssim(x, y, SSIM_WINDOW),
        MetricId::MutualInformation => mutual_information(x, y, MI_BINS),
        MetricId::FTest => return f_test(x, y).map(MetricValue::FTest),
    };
    Ok(MetricValue::Scalar(value))
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(AnalyticsError::InvalidArgument(format!(
            "sequences differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(AnalyticsError::InsufficientData(format!(
            "need at least 2 aligned points, got {}",
            x.len()
        )));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn mse(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

pub fn mae(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64
}

/// Pearson correlation with population moments.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::DegenerateInput(
            "zero variance in a correlated sequence".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties receiving the average of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall's tau-b, with the tie correction in the denominator.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    let pairs = (n * (n - 1) / 2) as i64;
    let (mut s, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = sign(x[i] - x[j]);
            let dy = sign(y[i] - y[j]);
            if dx == 0 {
                ties_x += 1;
            }
            if dy == 0 {
                ties_y += 1;
            }
            s += dx * dy;
        }
    }
    let denom = ((pairs - ties_x) as f64) * ((pairs - ties_y) as f64);
    if denom == 0.0 {
        return Err(AnalyticsError::DegenerateInput(
            "every pair is tied in one sequence".into(),
        ));
    }
    Ok((s as f64 / denom.sqrt()).clamp(-1.0, 1.0))
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Joint dynamic range of both sequences.
fn joint_range(x: &[f64], y: &[f64]) -> f64 {
    let hi = x.iter().chain(y).copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = x.iter().chain(y).copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Peak signal-to-noise ratio in dB; `+inf` when the sequences are identical.
pub fn psnr(x: &[f64], y: &[f64]) -> f64 {
    let err = mse(x, y);
    if err == 0.0 {
        return f64::INFINITY;
    }
    let range = joint_range(x, y);
    10.0 * (range * range / err).log10()
}

/// One-dimensional SSIM: the mean of the windowed index over every window of
/// `width` consecutive samples (a single window when the sequences are
/// shorter than that).
pub fn ssim(x: &[f64], y: &[f64], width: usize) -> f64 {
    let range = joint_range(x, y);
    if range == 0.0 {
        return 1.0;
    }
    let c1 = (0.01 * range) * (0.01 * range);
    let c2 = (0.03 * range) * (0.03 * range);
    let w = width.clamp(1, x.len());
    let windows = x.len() - w + 1;
    let mut total = 0.0;
    for start in 0..windows {
        let (xs, ys) = (&x[start..start + w], &y[start..start + w]);
        let (mx, my) = (mean(xs), mean(ys));
        let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
        for (a, b) in xs.iter().zip(ys) {
            let (dx, dy) = (a - mx, b - my);
            vx += dx * dx;
            vy += dy * dy;
            cxy += dx * dy;
        }
        let n = w as f64;
        let (vx, vy, cxy) = (vx / n, vy / n, cxy / n);
        let num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
        let den = (mx * mx + my * my + c1) * (vx + vy + c2);
        total += num / den;
    }
    (total / windows as f64).clamp(-1.0, 1.0)
}

fn bin_indices(x: &[f64], bins: usize) -> Vec<usize> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    x.iter()
        .map(|v| {
            if range == 0.0 {
                0
            } else {
                (((v - lo) / range * bins as f64) as usize).min(bins - 1)
            }
        })
        .collect()
}

/// Mutual information (natural log) from a joint equal-width histogram with
/// `bins` bins per axis, each axis spanning its own sequence's range.
pub fn mutual_information(x: &[f64], y: &[f64], bins: usize) -> f64 {
    let bins = bins.max(1);
    let bx = bin_indices(x, bins);
    let by = bin_indices(y, bins);
    let mut joint = vec![0usize; bins * bins];
    let mut px = vec![0usize; bins];
    let mut py = vec![0usize; bins];
    for (&a, &b) in bx.iter().zip(&by) {
        joint[a * bins + b] += 1;
        px[a] += 1;
        py[b] += 1;
    }
    let n = x.len() as f64;
    let mut terms = Vec::new();
    for a in 0..bins {
        for b in 0..bins {
            let c = joint[a * bins + b];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            let marg = (px[a] as f64 / n) * (py[b] as f64 / n);
            terms.push(pxy * (pxy / marg).ln());
        }
    }
    // summing in sorted order makes the result independent of argument order
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>().max(0.0)
}

fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Variance-ratio F-test. The larger sample variance is always the
/// numerator; the p-value is two-tailed.
pub fn f_test(x: &[f64], y: &[f64]) -> Result<FTestResult> {
    check_pair(x, y)?;
    let (vx, vy) = (sample_variance(x), sample_variance(y));
    let ((num, df_num), (den, df_den)) = if vx >= vy {
        ((vx, x.len() - 1), (vy, y.len() - 1))
    } else {
        ((vy, y.len() - 1), (vx, x.len() - 1))
    };
    if den == 0.0 {
        return Err(AnalyticsError::DegenerateInput(
            "zero variance in the F-test denominator".into(),
        ));
    }
    let statistic = num / den;
    let (d1, d2) = (df_num as f64, df_den as f64);
    // upper tail of F(d1, d2) at the statistic
    let survival = beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * statistic));
    Ok(FTestResult {
        statistic,
        p_value: (2.0 * survival).min(1.0),
    })
}
