//! The downloader: source configuration, payload parsing, and change-detecting
//! polls that version stream content in the store.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tsvis_analytics::series::parse_timestamp;
use tsvis_analytics::{Execution, TimeSeries};

use crate::error::{Error, Result};
use crate::ontology::{content_hash, Store, StreamContent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceConfig {
    pub stream_id: String,
    /// `http(s)://` URL, `file://` URL or plain filesystem path.
    pub location: String,
    pub format: SourceFormat,
    pub poll_interval_secs: u64,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.poll_interval_secs == 0 {
            return Err(Error::InvalidRecord(format!(
                "source {} has a zero poll interval",
                self.stream_id
            )));
        }
        Ok(())
    }

    pub fn poll_interval(&self) -> Duration {
        Duration::seconds(self.poll_interval_secs as i64)
    }
}

fn parse_failure(line: usize, message: impl Into<String>) -> Error {
    Error::ParseFailure {
        line,
        message: message.into(),
    }
}

/// Sorts `(line, timestamp, value)` rows by timestamp, rejects duplicate
/// timestamps and builds the series.
fn build_series(stream_id: &str, mut rows: Vec<(usize, i64, f64)>) -> Result<TimeSeries> {
    if rows.is_empty() {
        return Err(parse_failure(1, "no data rows"));
    }
    rows.sort_by_key(|r| r.1);
    if let Some(w) = rows.windows(2).find(|w| w[0].1 == w[1].1) {
        let line = w[0].0.max(w[1].0);
        return Err(parse_failure(line, format!("duplicate date (first seen on line {})", w[0].0.min(w[1].0))));
    }
    let (timestamps, values) = rows.into_iter().map(|(_, t, v)| (t, v)).unzip();
    TimeSeries::new(stream_id, timestamps, values, None).map_err(|e| parse_failure(0, e.to_string()))
}

fn parse_value(line: usize, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_failure(line, format!("value {text:?} is not a number")))?;
    if !v.is_finite() {
        return Err(parse_failure(line, format!("value {text:?} is not finite")));
    }
    Ok(v)
}

/// Parses a `date,value` CSV. Rows may arrive in any order; the result is
/// sorted by date and duplicate dates are rejected.
pub fn parse_csv_series(stream_id: &str, text: &str) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| parse_failure(1, "empty payload"))?
        .map_err(|e| parse_failure(1, e.to_string()))?;
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    if header != ["date", "value"] {
        return Err(parse_failure(1, format!("expected header `date,value`, got {:?}", header.join(","))));
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_failure(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(parse_failure(line, format!("expected 2 fields, got {}", record.len())));
        }
        let t = parse_timestamp(&record[0])
            .ok_or_else(|| parse_failure(line, format!("invalid date {:?}", &record[0])))?;
        rows.push((line, t, parse_value(line, &record[1])?));
    }
    build_series(stream_id, rows)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonTime {
    Epoch(i64),
    Text(String),
}

#[derive(Deserialize)]
struct JsonPoint {
    t: JsonTime,
    v: f64,
}

/// Parses a `[{"t": ..., "v": ...}]` payload under the same rules as CSV.
/// Line numbers refer to the JSON text.
pub fn parse_json_series(stream_id: &str, text: &str) -> Result<TimeSeries> {
    let points: Vec<JsonPoint> =
        serde_json::from_str(text).map_err(|e| parse_failure(e.line(), e.to_string()))?;
    let mut rows = Vec::with_capacity(points.len());
    for (i, p) in points.into_iter().enumerate() {
        // report the element index (1-based) where JSON gives no useful line
        let at = i + 1;
        let t = match p.t {
            JsonTime::Epoch(t) => t,
            JsonTime::Text(s) => {
                parse_timestamp(&s).ok_or_else(|| parse_failure(at, format!("invalid date {s:?}")))?
            }
        };
        if !p.v.is_finite() {
            return Err(parse_failure(at, "value is not finite"));
        }
        rows.push((at, t, p.v));
    }
    build_series(stream_id, rows)
}

pub fn parse_series(stream_id: &str, format: SourceFormat, bytes: &[u8]) -> Result<TimeSeries> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_failure(0, format!("payload is not UTF-8: {e}")))?;
    match format {
        SourceFormat::Csv => parse_csv_series(stream_id, text),
        SourceFormat::Json => parse_json_series(stream_id, text),
    }
}

pub trait Fetcher: Send + Sync {
    fn fetch(&self, location: &str) -> Result<Vec<u8>>;
}

/// Reads local files; `file://` prefixes are stripped and relative paths are
/// resolved against `root` when one is set.
#[derive(Debug, Default, Clone)]
pub struct FileFetcher {
    pub root: Option<PathBuf>,
}

impl Fetcher for FileFetcher {
    fn fetch(&self, location: &str) -> Result<Vec<u8>> {
        let path = PathBuf::from(location.strip_prefix("file://").unwrap_or(location));
        let path = match &self.root {
            Some(root) if path.is_relative() => root.join(path),
            _ => path,
        };
        std::fs::read(&path).map_err(|e| Error::FetchFailure(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum PollOutcome {
    Unchanged,
    Updated { version: u64 },
}

/// Polls one source: fetch, hash, and on a changed hash parse and store the
/// new series. Failures leave the stream as it was.
pub fn poll_source(store: &Store, fetcher: &dyn Fetcher, config: &SourceConfig) -> Result<PollOutcome> {
    let stream_id = &config.stream_id;
    if store.read().stream(stream_id).is_none() {
        return Err(Error::NotFound(format!("stream {stream_id}")));
    }
    let bytes = fetcher.fetch(&config.location)?;
    let hash = content_hash(&bytes);
    let unchanged = |store: &Store| {
        store
            .read()
            .stored_content(stream_id)
            .is_some_and(|c| c.hash == hash)
    };
    if unchanged(store) {
        return Ok(PollOutcome::Unchanged);
    }
    let series = parse_series(stream_id, config.format, &bytes)?;
    store.write(|state, now| {
        if state.stored_content(stream_id).is_some_and(|c| c.hash == hash) {
            return Ok(PollOutcome::Unchanged);
        }
        let version = state.set_content(stream_id, StreamContent::Timeseries(series), hash.clone(), now)?;
        Ok(PollOutcome::Updated { version })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PollReport {
    pub stream_id: String,
    pub at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<PollOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct SourceSlot {
    config: SourceConfig,
    lock: Mutex<()>,
    last_poll: Mutex<Option<DateTime<Utc>>>,
}

/// Runs polls for a set of sources. Distinct sources poll concurrently; polls
/// of the same source are serialized. The last error per source is kept.
pub struct Downloader {
    sources: Vec<SourceSlot>,
    fetcher: Arc<dyn Fetcher>,
    exec: Execution,
    errors: Mutex<BTreeMap<String, String>>,
}

impl Downloader {
    pub fn new(sources: Vec<SourceConfig>, fetcher: Arc<dyn Fetcher>) -> Result<Self> {
        for s in &sources {
            s.validate()?;
        }
        Ok(Downloader {
            sources: sources
                .into_iter()
                .map(|config| SourceSlot {
                    config,
                    lock: Mutex::new(()),
                    last_poll: Mutex::new(None),
                })
                .collect(),
            fetcher,
            exec: Execution::default(),
            errors: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn sources(&self) -> impl Iterator<Item = &SourceConfig> {
        self.sources.iter().map(|s| &s.config)
    }

    /// Last recorded failure per stream id; cleared by a successful poll.
    pub fn errors(&self) -> BTreeMap<String, String> {
        self.errors.lock().clone()
    }

    fn poll_slot(&self, store: &Store, slot: &SourceSlot, now: DateTime<Utc>) -> PollReport {
        let _guard = slot.lock.lock();
        *slot.last_poll.lock() = Some(now);
        let stream_id = slot.config.stream_id.clone();
        match poll_source(store, self.fetcher.as_ref(), &slot.config) {
            Ok(outcome) => {
                self.errors.lock().remove(&stream_id);
                PollReport { stream_id, at: now, outcome: Some(outcome), error: None }
            }
            Err(e) => {
                tracing::warn!(stream = %stream_id, error = %e, "poll failed");
                self.errors.lock().insert(stream_id.clone(), e.to_string());
                PollReport { stream_id, at: now, outcome: None, error: Some(e.to_string()) }
            }
        }
    }

    /// Polls every source whose interval has elapsed since its last poll.
    pub fn poll_due(&self, store: &Store, now: DateTime<Utc>) -> Vec<PollReport> {
        let due: Vec<&SourceSlot> = self
            .sources
            .iter()
            .filter(|s| s.last_poll.lock().is_none_or(|last| now - last >= s.config.poll_interval()))
            .collect();
        self.exec.map(&due, |slot| self.poll_slot(store, slot, now))
    }

    /// Polls every source regardless of schedule.
    pub fn poll_all(&self, store: &Store, now: DateTime<Utc>) -> Vec<PollReport> {
        let all: Vec<&SourceSlot> = self.sources.iter().collect();
        self.exec.map(&all, |slot| self.poll_slot(store, slot, now))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_basic() {
        let s = parse_csv_series("s", "date,value\n2020-05-01,3\n2020-05-02,5").unwrap();
        assert_eq!(s.values, vec![3.0, 5.0]);
        assert_eq!(s.timestamps[1] - s.timestamps[0], 86_400);
    }

    #[test]
    fn csv_out_of_order_rows_match_sorted_input() {
        let sorted = parse_csv_series("s", "date,value\n2020-05-01,1\n2020-05-02,2\n2020-05-03,3\n").unwrap();
        let shuffled = parse_csv_series("s", "date,value\n2020-05-03,3\n2020-05-01,1\n2020-05-02,2\n").unwrap();
        assert_eq!(sorted, shuffled);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dup = parse_csv_series("s", "date,value\n2020-05-01,3\n2020-05-02,4\n2020-05-01,5\n");
        assert!(matches!(dup, Err(Error::ParseFailure { line: 4, .. })), "{dup:?}");
        let bad = parse_csv_series("s", "date,value\n2020-05-01,3\n2020-05-02,abc\n");
        assert!(matches!(bad, Err(Error::ParseFailure { line: 3, .. })));
        let header = parse_csv_series("s", "day,value\n2020-05-01,3\n");
        assert!(matches!(header, Err(Error::ParseFailure { line: 1, .. })));
        assert!(parse_csv_series("s", "date,value\n").is_err());
        assert!(parse_csv_series("s", "date,value\n2020-05-01,NaN\n").is_err());
        assert!(parse_csv_series("s", "date,value\n2020-05-01,1,2\n").is_err());
    }

    #[test]
    fn json_payload() {
        let s = parse_json_series("s", r#"[{"t":"2020-05-02","v":2},{"t":"2020-05-01","v":1}]"#).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0]);
        let epoch = parse_json_series("s", r#"[{"t":10,"v":2},{"t":20,"v":1}]"#).unwrap();
        assert_eq!(epoch.timestamps, vec![10, 20]);
        assert!(parse_json_series("s", r#"[{"t":1,"v":1},{"t":1,"v":2}]"#).is_err());
        assert!(parse_json_series("s", "[{\"t\":1}]").is_err());
    }
}
