//! The timestamped numeric sequence every analytic operates on.
//!
//! Timestamps are held as epoch seconds (UTC). On the wire they are written as
//! ISO-8601 strings and accepted either as ISO-8601 dates/date-times or as
//! epoch integers.

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimeSeries {
    pub stream_id: String,
    #[serde(with = "iso_timestamps")]
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl TimeSeries {
    /// Builds a series, enforcing strictly increasing timestamps, equal lengths,
    /// at least one point and finite values.
    pub fn new(
        stream_id: impl Into<String>,
        timestamps: Vec<i64>,
        values: Vec<f64>,
        unit: Option<String>,
    ) -> Result<Self> {
        let series = TimeSeries {
            stream_id: stream_id.into(),
            timestamps,
            values,
            unit,
        };
        series.validate()?;
        Ok(series)
    }

    /// Convenience constructor with timestamps `0, 1, 2, ...` (seconds).
    pub fn from_values(stream_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let timestamps = (0..values.len() as i64).collect();
        Self::new(stream_id, timestamps, values, None)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timestamps.is_empty() {
            return Err(AnalyticsError::InvalidSeries("series has no points".into()));
        }
        if self.timestamps.len() != self.values.len() {
            return Err(AnalyticsError::InvalidSeries(format!(
                "{} timestamps but {} values",
                self.timestamps.len(),
                self.values.len()
            )));
        }
        if let Some(w) = self.timestamps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(AnalyticsError::InvalidSeries(format!(
                "timestamps not strictly increasing at index {}",
                w + 1
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(AnalyticsError::InvalidSeries(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Inner join of two series on their timestamps. Fails when fewer than two
/// common timestamps remain.
pub fn align_pair(a: &TimeSeries, b: &TimeSeries) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut i, mut j) = (0, 0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    while i < a.timestamps.len() && j < b.timestamps.len() {
        match a.timestamps[i].cmp(&b.timestamps[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                xs.push(a.values[i]);
                ys.push(b.values[j]);
                i += 1;
                j += 1;
            }
        }
    }
    if xs.len() < 2 {
        return Err(AnalyticsError::InsufficientData(format!(
            "{} and {} share {} timestamps, need at least 2",
            a.stream_id,
            b.stream_id,
            xs.len()
        )));
    }
    Ok((xs, ys))
}

/// Inner join of many series: the timestamps common to all of them, and each
/// series' values at those timestamps (one row per input series).
pub fn align_all(set: &[TimeSeries]) -> (Vec<i64>, Vec<Vec<f64>>) {
    let Some(first) = set.first() else {
        return (Vec::new(), Vec::new());
    };
    let mut common: Vec<i64> = first.timestamps.clone();
    for s in &set[1..] {
        let mut keep = Vec::with_capacity(common.len());
        let (mut i, mut j) = (0, 0);
        while i < common.len() && j < s.timestamps.len() {
            match common[i].cmp(&s.timestamps[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    keep.push(common[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        common = keep;
    }
    let rows = set
        .iter()
        .map(|s| {
            let index: BTreeMap<i64, f64> = s
                .timestamps
                .iter()
                .copied()
                .zip(s.values.iter().copied())
                .collect();
            common.iter().map(|t| index[t]).collect()
        })
        .collect();
    (common, rows)
}

/// Parses an ISO-8601 date (`2020-05-01`), an RFC 3339 date-time, a naive
/// date-time (`2020-05-01T12:00:00`, assumed UTC), or an epoch-seconds integer.
pub fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Ok(secs) = text.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(d) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    None
}

pub fn format_timestamp(secs: i64) -> String {
    match DateTime::<Utc>::from_timestamp(secs, 0) {
        Some(dt) => dt.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        None => secs.to_string(),
    }
}

mod iso_timestamps {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(ts: &[i64], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<String> = ts.iter().map(|&t| super::format_timestamp(t)).collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<i64>, D::Error> {
        Vec::<Raw>::deserialize(d)?
            .into_iter()
            .map(|raw| match raw {
                Raw::Int(i) => Ok(i),
                Raw::Text(t) => super::parse_timestamp(&t)
                    .ok_or_else(|| D::Error::custom(format!("bad timestamp {t:?}"))),
            })
            .collect()
    }
}
