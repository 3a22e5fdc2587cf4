//! Pairwise products over a set of series: similarity matrices and lag tables,
//! plus their JSON forms.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dtw::{dtw_distance, DtwCost};
use crate::error::{AnalyticsError, Result};
use crate::exec::Execution;
use crate::lag::lag_register;
use crate::metrics::{pair_metric, MetricId};
use crate::series::{align_pair, TimeSeries};

/// What a similarity matrix cell measures: a pair metric or DTW (abs cost).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Metric(MetricId),
    Dtw,
}

impl Measure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::Metric(m) => m.as_str(),
            Measure::Dtw => "dtw",
        }
    }

    /// Diagonal value when it does not depend on the series.
    pub fn self_value(&self) -> Option<f64> {
        match self {
            Measure::Metric(m) => m.self_value(),
            Measure::Dtw => Some(0.0),
        }
    }

    /// Computes one cell. Pair metrics run on the timestamp inner join; DTW
    /// runs on the full value sequences.
    pub fn evaluate(&self, a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
        match self {
            Measure::Dtw => dtw_distance(&a.values, &b.values, DtwCost::Abs, None),
            Measure::Metric(m) => {
                let (x, y) = align_pair(a, b)?;
                pair_metric(&x, &y, *m).map(|v| v.score())
            }
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("dtw") {
            Ok(Measure::Dtw)
        } else {
            s.parse().map(Measure::Metric)
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimilarityMatrix {
    pub metric: Measure,
    pub stream_ids: Vec<String>,
    #[serde(with = "extended_floats")]
    pub values: Vec<Vec<f64>>,
    #[serde(default)]
    pub input_versions: BTreeMap<String, u64>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.stream_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream_ids.is_empty()
    }

    pub fn with_input_versions(mut self, versions: BTreeMap<String, u64>) -> Self {
        self.input_versions = versions;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.values.len();
        (0..n).all(|i| (0..n).all(|j| self.values[i][j].to_bits() == self.values[j][i].to_bits()))
    }
}

/// All `i <= j` index pairs of an `n`-set, row by row.
fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Evaluates the measure on every pair (diagonal included) and mirrors the
/// upper triangle.
pub fn pairwise_matrix(set: &[TimeSeries], measure: Measure) -> Result<SimilarityMatrix> {
    pairwise_matrix_with(set, measure, Execution::default())
}

pub fn pairwise_matrix_with(
    set: &[TimeSeries],
    measure: Measure,
    exec: Execution,
) -> Result<SimilarityMatrix> {
    let n = set.len();
    if n < 2 {
        return Err(AnalyticsError::InsufficientData(format!(
            "a similarity matrix needs at least 2 series, got {n}"
        )));
    }
    let pairs = upper_pairs(n);
    let cells = exec.map(&pairs, |&(i, j)| {
        measure
            .evaluate(&set[i], &set[j])
            .map_err(|e| e.for_pair(&set[i].stream_id, &set[j].stream_id))
    });
    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), cell) in pairs.iter().zip(cells) {
        let v = cell?;
        values[i][j] = v;
        values[j][i] = v;
    }
    Ok(SimilarityMatrix {
        metric: measure,
        stream_ids: set.iter().map(|s| s.stream_id.clone()).collect(),
        values,
        input_versions: BTreeMap::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagPair {
    pub a: String,
    pub b: String,
    pub lag: i64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagTable {
    pub pairs: Vec<LagPair>,
}

/// Lag registration for every unordered pair `(a, b)`, `a` before `b` in
/// input order, on the timestamp inner join. The tested range is capped so
/// every overlap keeps at least 3 samples.
pub fn lag_table_with(set: &[TimeSeries], max_lag: usize, exec: Execution) -> Result<LagTable> {
    if set.len() < 2 {
        return Err(AnalyticsError::InsufficientData(format!(
            "a lag table needs at least 2 series, got {}",
            set.len()
        )));
    }
    let pairs: Vec<(usize, usize)> = upper_pairs(set.len())
        .into_iter()
        .filter(|(i, j)| i != j)
        .collect();
    let rows = exec.map(&pairs, |&(i, j)| {
        let (a, b) = (&set[i], &set[j]);
        let run = || {
            let (x, y) = align_pair(a, b)?;
            let cap = x.len().saturating_sub(3);
            let r = lag_register(&x, &y, max_lag.min(cap))?;
            Ok(LagPair {
                a: a.stream_id.clone(),
                b: b.stream_id.clone(),
                lag: r.lag,
                score: r.score,
            })
        };
        run().map_err(|e: AnalyticsError| e.for_pair(&a.stream_id, &b.stream_id))
    });
    Ok(LagTable {
        pairs: rows.into_iter().collect::<Result<_>>()?,
    })
}

pub fn lag_table(set: &[TimeSeries], max_lag: usize) -> Result<LagTable> {
    lag_table_with(set, max_lag, Execution::default())
}

/// Matrix cells as JSON numbers, with non-finite values written as the
/// strings `"Infinity"`, `"-Infinity"` and `"NaN"`.
mod extended_floats {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Number(f64),
        Text(String),
    }

    fn encode(v: f64) -> Cell {
        if v.is_finite() {
            Cell::Number(v)
        } else if v.is_nan() {
            Cell::Text("NaN".into())
        } else if v > 0.0 {
            Cell::Text("Infinity".into())
        } else {
            Cell::Text("-Infinity".into())
        }
    }

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let cells: Vec<Vec<Cell>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| encode(v)).collect())
            .collect();
        cells.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Vec::<Vec<Cell>>::deserialize(d)?
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| match c {
                        Cell::Number(v) => Ok(v),
                        Cell::Text(t) => match t.as_str() {
                            "Infinity" => Ok(f64::INFINITY),
                            "-Infinity" => Ok(f64::NEG_INFINITY),
                            "NaN" => Ok(f64::NAN),
                            other => Err(D::Error::custom(format!("bad matrix cell {other:?}"))),
                        },
                    })
                    .collect()
            })
            .collect()
    }
}
