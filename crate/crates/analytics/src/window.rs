//! Window-based smoothing filters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Flat,
    Hanning,
    Hamming,
    Bartlett,
    Blackman,
}

/// A smoothing window of odd width, so that it has a center sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    kind: WindowKind,
    width: usize,
}

impl WindowSpec {
    pub fn new(kind: WindowKind, width: usize) -> Result<Self> {
        if width == 0 || width.is_multiple_of(2) {
            return Err(AnalyticsError::InvalidArgument(format!(
                "window width must be odd and >= 1, got {width}"
            )));
        }
        Ok(WindowSpec { kind, width })
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Window weights `w[0..M]`, clamped to be non-negative.
    pub fn weights(&self) -> Vec<f64> {
        let m = self.width;
        if m == 1 {
            return vec![1.0];
        }
        let denom = (m - 1) as f64;
        (0..m)
            .map(|n| {
                let n = n as f64;
                let w = match self.kind {
                    WindowKind::Flat => 1.0,
                    WindowKind::Hanning => 0.5 - 0.5 * (2.0 * PI * n / denom).cos(),
                    WindowKind::Hamming => 0.54 - 0.46 * (2.0 * PI * n / denom).cos(),
                    WindowKind::Bartlett => 1.0 - (2.0 * n / denom - 1.0).abs(),
                    WindowKind::Blackman => {
                        0.42 - 0.5 * (2.0 * PI * n / denom).cos()
                            + 0.08 * (4.0 * PI * n / denom).cos()
                    }
                };
                // blackman endpoints evaluate to about -1e-17
                w.max(0.0)
            })
            .collect()
    }
}

/// Index into a reflect-padded sequence of length `len` (edge sample not repeated).
fn reflect(index: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut i = index.rem_euclid(period);
    if i >= len as isize {
        i = period - i;
    }
    i as usize
}

/// Weighted moving average with reflect padding at both ends.
///
/// Each output is written as the center sample plus the normalized weighted
/// sum of deviations from it, which is algebraically the plain weighted mean
/// but maps constant runs back to exactly the same constant.
pub fn smooth_values(values: &[f64], window: &WindowSpec) -> Vec<f64> {
    let weights = window.weights();
    let total: f64 = weights.iter().sum();
    let half = (window.width / 2) as isize;
    let len = values.len();
    (0..len)
        .map(|i| {
            let center = values[i];
            let deviation: f64 = weights
                .iter()
                .enumerate()
                .map(|(j, w)| {
                    let k = reflect(i as isize + j as isize - half, len);
                    w * (values[k] - center)
                })
                .sum();
            center + deviation / total
        })
        .collect()
}

pub fn smooth(series: &TimeSeries, window: &WindowSpec) -> TimeSeries {
    TimeSeries {
        stream_id: series.stream_id.clone(),
        timestamps: series.timestamps.clone(),
        values: smooth_values(&series.values, window),
        unit: series.unit.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [WindowKind; 5] = [
        WindowKind::Flat,
        WindowKind::Hanning,
        WindowKind::Hamming,
        WindowKind::Bartlett,
        WindowKind::Blackman,
    ];

    #[test]
    fn width_must_be_odd() {
        assert!(WindowSpec::new(WindowKind::Flat, 0).is_err());
        assert!(WindowSpec::new(WindowKind::Flat, 4).is_err());
        assert!(WindowSpec::new(WindowKind::Flat, 5).is_ok());
    }

    #[test]
    fn hanning_three_is_a_unit_impulse() {
        let w = WindowSpec::new(WindowKind::Hanning, 3).unwrap().weights();
        assert_eq!(w.len(), 3);
        assert!(w[0].abs() < 1e-15 && w[2].abs() < 1e-15);
        assert!((w[1] - 1.0).abs() < 1e-15);
        let x = [3.0, -1.0, 4.0, 1.5, 9.0];
        let y = smooth_values(&x, &WindowSpec::new(WindowKind::Hanning, 3).unwrap());
        assert_eq!(y, x);
    }

    #[test]
    fn width_one_is_identity_for_every_kind() {
        let x = [0.3, 0.1, 0.4, 0.1, 0.5];
        for kind in KINDS {
            assert_eq!(smooth_values(&x, &WindowSpec::new(kind, 1).unwrap()), x);
        }
    }

    #[test]
    fn constants_are_preserved_exactly() {
        let x = vec![0.1; 17];
        for kind in KINDS {
            for width in [3, 5, 7, 11, 41] {
                let y = smooth_values(&x, &WindowSpec::new(kind, width).unwrap());
                assert_eq!(y, x, "{kind:?} width {width}");
            }
        }
    }

    #[test]
    fn weights_non_negative_and_flat_is_ones() {
        for kind in KINDS {
            for width in [1, 3, 5, 9, 21] {
                let w = WindowSpec::new(kind, width).unwrap().weights();
                assert!(w.iter().all(|&v| v >= 0.0));
            }
        }
        assert!(WindowSpec::new(WindowKind::Flat, 7)
            .unwrap()
            .weights()
            .iter()
            .all(|&v| v == 1.0));
    }

    #[test]
    fn flat_window_over_one_period_yields_the_period_mean() {
        let period = [1.0, 4.0, -2.0, 3.0, 0.5];
        let mean = period.iter().sum::<f64>() / 5.0;
        let x: Vec<f64> = period.iter().cycle().take(40).copied().collect();
        let y = smooth_values(&x, &WindowSpec::new(WindowKind::Flat, 5).unwrap());
        for v in &y[2..38] {
            assert!((v - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn reflect_padding_matches_hand_computed_edges() {
        // padded: [2, 1, 2, 3, 2]
        let y = smooth_values(&[1.0, 2.0, 3.0], &WindowSpec::new(WindowKind::Flat, 3).unwrap());
        assert!((y[0] - 5.0 / 3.0).abs() < 1e-14);
        assert!((y[1] - 2.0).abs() < 1e-15);
        assert!((y[2] - 7.0 / 3.0).abs() < 1e-14);
        // window wider than the series reflects repeatedly
        let y = smooth_values(&[1.0, 2.0], &WindowSpec::new(WindowKind::Flat, 7).unwrap());
        assert_eq!(y.len(), 2);
        assert!(y.iter().all(|v| v.is_finite()));
        assert_eq!(smooth_values(&[5.0], &WindowSpec::new(WindowKind::Blackman, 9).unwrap()), [5.0]);
    }
}
