#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Duration};
use tsvis_analytics::TimeSeries;
use tsvis_core::ontology::{
    Cardinality, DataKind, Descriptor, DescriptorField, PlotType, SlotSpec, Store, StreamContent, StreamDraft,
    VisFunctionRecord,
};
use tsvis_core::ManualClock;

pub fn clock() -> Arc<ManualClock> {
    Arc::new(ManualClock::new(DateTime::from_timestamp(1_600_000_000, 0).unwrap()))
}

pub fn store_with(clock: &Arc<ManualClock>) -> Store {
    Store::in_memory(clock.clone())
}

pub fn store() -> Store {
    store_with(&clock())
}

pub fn tick(clock: &ManualClock, secs: i64) {
    clock.advance(Duration::seconds(secs));
}

pub fn line_fn(id: &str, required: &[&str]) -> VisFunctionRecord {
    let mut slot = SlotSpec::single(DataKind::Timeseries);
    slot.required_keywords = required.iter().map(|k| k.to_string()).collect();
    VisFunctionRecord {
        id: id.into(),
        name: "Line chart".into(),
        plot_type: PlotType::Line,
        data_signature: vec![slot],
        description: String::new(),
        keywords: BTreeSet::new(),
    }
}

/// One multi-stream slot grouped by region, at least `min` streams.
pub fn comparison_fn(id: &str, min: usize) -> VisFunctionRecord {
    VisFunctionRecord {
        id: id.into(),
        name: "Regional comparison".into(),
        plot_type: PlotType::Line,
        data_signature: vec![SlotSpec {
            kind: DataKind::Timeseries,
            cardinality: Cardinality::AtLeast(min),
            required_keywords: BTreeSet::new(),
            shared_fields: [DescriptorField::Region].into(),
        }],
        description: String::new(),
        keywords: BTreeSet::new(),
    }
}

pub fn series_draft(id: &str, region: &str, indicator: &str) -> StreamDraft {
    StreamDraft {
        id: id.into(),
        locator: format!("{id}.csv"),
        kind: "timeseries".into(),
        descriptor: Descriptor {
            region: Some(region.into()),
            indicator: Some(indicator.into()),
            ..Default::default()
        },
        keywords: BTreeSet::new(),
        provenance: Default::default(),
    }
}

pub fn set_values(store: &Store, id: &str, values: Vec<f64>) -> u64 {
    let series = TimeSeries::from_values(id, values).unwrap();
    store
        .write(|s, now| s.set_content(id, StreamContent::Timeseries(series), format!("{id}-{now}"), now))
        .unwrap()
}

/// Noise-free but distinct daily series.
pub fn wave(seed: u64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| {
            let t = t as f64;
            100.0 + 10.0 * (t / (3.0 + seed as f64)).sin() + (seed as f64) * 0.5 * (t / 7.0).cos()
        })
        .collect()
}
