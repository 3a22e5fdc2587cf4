//! Dynamic time warping with an optional Sakoe-Chiba band.

use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtwCost {
    #[default]
    Abs,
    Squared,
}

impl DtwCost {
    #[inline]
    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            DtwCost::Abs => (a - b).abs(),
            DtwCost::Squared => (a - b) * (a - b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwResult {
    pub distance: f64,
    /// Aligned index pairs `(i, j)` from `(0, 0)` to `(len x - 1, len y - 1)`.
    pub path: Vec<(usize, usize)>,
}

fn check(x: &[f64], y: &[f64], band: Option<usize>) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(AnalyticsError::InsufficientData(
            "dtw needs non-empty sequences".into(),
        ));
    }
    if let Some(band) = band {
        let diff = x.len().abs_diff(y.len());
        if band < diff {
            return Err(AnalyticsError::InfeasibleBand { band, diff });
        }
    }
    Ok(())
}

#[inline]
fn in_band(i: usize, j: usize, band: Option<usize>) -> bool {
    band.is_none_or(|r| i.abs_diff(j) <= r)
}

/// Accumulated cost of the optimal monotone alignment, together with the
/// alignment itself. For squared cost the distance is the accumulated
/// squared differences (no final square root).
pub fn dtw(x: &[f64], y: &[f64], cost: DtwCost, band: Option<usize>) -> Result<DtwResult> {
    check(x, y, band)?;
    let (n, m) = (x.len(), y.len());
    let cols = m + 1;
    // acc[(i + 1) * cols + (j + 1)] = best cost ending at (i, j)
    let mut acc = vec![f64::INFINITY; (n + 1) * cols];
    acc[0] = 0.0;
    for i in 0..n {
        for j in 0..m {
            if !in_band(i, j, band) {
                continue;
            }
            let best = acc[i * cols + j]
                .min(acc[i * cols + j + 1])
                .min(acc[(i + 1) * cols + j]);
            acc[(i + 1) * cols + j + 1] = cost.eval(x[i], y[j]) + best;
        }
    }
    let distance = acc[n * cols + m];

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    path.push((i - 1, j - 1));
    while (i, j) != (1, 1) {
        let diag = acc[(i - 1) * cols + j - 1];
        let up = acc[(i - 1) * cols + j];
        let left = acc[i * cols + j - 1];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i - 1, j - 1));
    }
    path.reverse();
    Ok(DtwResult { distance, path })
}

/// Distance only, in O(len y) memory. Performs the same arithmetic as [`dtw`]
/// so the two agree exactly.
pub fn dtw_distance(x: &[f64], y: &[f64], cost: DtwCost, band: Option<usize>) -> Result<f64> {
    check(x, y, band)?;
    let m = y.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        curr.fill(f64::INFINITY);
        for j in 0..m {
            if !in_band(i, j, band) {
                continue;
            }
            let best = prev[j].min(prev[j + 1]).min(curr[j]);
            curr[j + 1] = cost.eval(xi, y[j]) + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m])
}
