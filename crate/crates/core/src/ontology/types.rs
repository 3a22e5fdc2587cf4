use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tsvis_analytics::{FeatureProjection, LagTable, SimilarityMatrix, TimeSeries};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotType {
    Line,
    LineUncertainty,
    Timelag,
    HeatmapMatrix,
    Chord,
    ScatterProjection,
    ForceGraph,
    Dashboard,
}

impl PlotType {
    pub const ALL: [PlotType; 8] = [
        PlotType::Line,
        PlotType::LineUncertainty,
        PlotType::Timelag,
        PlotType::HeatmapMatrix,
        PlotType::Chord,
        PlotType::ScatterProjection,
        PlotType::ForceGraph,
        PlotType::Dashboard,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlotType::Line => "line",
            PlotType::LineUncertainty => "line-uncertainty",
            PlotType::Timelag => "timelag",
            PlotType::HeatmapMatrix => "heatmap-matrix",
            PlotType::Chord => "chord",
            PlotType::ScatterProjection => "scatter-projection",
            PlotType::ForceGraph => "force-graph",
            PlotType::Dashboard => "dashboard",
        }
    }
}

impl fmt::Display for PlotType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotType::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownKind(format!("plot type {s:?}")))
    }
}

/// What a stream holds, and what a slot accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Timeseries,
    Matrix,
    Projection,
    Lagtable,
    Table,
    Scalar,
}

impl DataKind {
    pub const ALL: [DataKind; 6] = [
        DataKind::Timeseries,
        DataKind::Matrix,
        DataKind::Projection,
        DataKind::Lagtable,
        DataKind::Table,
        DataKind::Scalar,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DataKind::Timeseries => "timeseries",
            DataKind::Matrix => "matrix",
            DataKind::Projection => "projection",
            DataKind::Lagtable => "lagtable",
            DataKind::Table => "table",
            DataKind::Scalar => "scalar",
        }
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DataKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DataKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Cardinality {
    Exactly(usize),
    AtLeast(usize),
}

impl Cardinality {
    pub fn admits(&self, count: usize) -> bool {
        match *self {
            Cardinality::Exactly(n) => count == n,
            Cardinality::AtLeast(n) => count >= n,
        }
    }

    pub fn admits_many(&self) -> bool {
        match *self {
            Cardinality::Exactly(n) => n > 1,
            Cardinality::AtLeast(_) => true,
        }
    }

    fn minimum(&self) -> usize {
        match *self {
            Cardinality::Exactly(n) | Cardinality::AtLeast(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DescriptorField {
    Product,
    Component,
    Region,
    Indicator,
    AgeGroup,
    Unit,
    Cadence,
}

impl DescriptorField {
    pub const ALL: [DescriptorField; 7] = [
        DescriptorField::Product,
        DescriptorField::Component,
        DescriptorField::Region,
        DescriptorField::Indicator,
        DescriptorField::AgeGroup,
        DescriptorField::Unit,
        DescriptorField::Cadence,
    ];
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Descriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cadence: Option<String>,
}

impl Descriptor {
    pub fn get(&self, field: DescriptorField) -> Option<&str> {
        match field {
            DescriptorField::Product => self.product.as_deref(),
            DescriptorField::Component => self.component.as_deref(),
            DescriptorField::Region => self.region.as_deref(),
            DescriptorField::Indicator => self.indicator.as_deref(),
            DescriptorField::AgeGroup => self.age_group.as_deref(),
            DescriptorField::Unit => self.unit.as_deref(),
            DescriptorField::Cadence => self.cadence.as_deref(),
        }
    }

    pub fn set(&mut self, field: DescriptorField, value: Option<String>) {
        let slot = match field {
            DescriptorField::Product => &mut self.product,
            DescriptorField::Component => &mut self.component,
            DescriptorField::Region => &mut self.region,
            DescriptorField::Indicator => &mut self.indicator,
            DescriptorField::AgeGroup => &mut self.age_group,
            DescriptorField::Unit => &mut self.unit,
            DescriptorField::Cadence => &mut self.cadence,
        };
        *slot = value;
    }

    /// Present values in field order.
    pub fn values(&self) -> impl Iterator<Item = &str> {
        DescriptorField::ALL.into_iter().filter_map(|f| self.get(f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SlotSpec {
    pub kind: DataKind,
    pub cardinality: Cardinality,
    #[serde(default)]
    pub required_keywords: BTreeSet<String>,
    #[serde(default)]
    pub shared_fields: BTreeSet<DescriptorField>,
}

impl SlotSpec {
    pub fn single(kind: DataKind) -> Self {
        SlotSpec {
            kind,
            cardinality: Cardinality::Exactly(1),
            required_keywords: BTreeSet::new(),
            shared_fields: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cardinality.minimum() == 0 {
            return Err(Error::InvalidSignature(
                "slot cardinality must be at least 1".into(),
            ));
        }
        if !self.shared_fields.is_empty() && !self.cardinality.admits_many() {
            return Err(Error::InvalidSignature(
                "shared fields need a slot that admits more than one stream".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VisFunctionRecord {
    pub id: String,
    pub name: String,
    pub plot_type: PlotType,
    pub data_signature: Vec<SlotSpec>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub keywords: BTreeSet<String>,
}

impl VisFunctionRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::InvalidRecord("empty id".into()));
        }
        if self.data_signature.is_empty() {
            return Err(Error::InvalidSignature(format!(
                "{} has an empty data signature",
                self.id
            )));
        }
        self.data_signature.iter().try_for_each(SlotSpec::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InputVersion {
    pub stream_id: String,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    External,
    #[serde(rename_all = "camelCase")]
    Derived {
        agent_id: String,
        inputs: Vec<InputVersion>,
    },
}

impl Provenance {
    pub fn input_versions(&self) -> BTreeMap<String, u64> {
        match self {
            Provenance::External => BTreeMap::new(),
            Provenance::Derived { inputs, .. } => inputs
                .iter()
                .map(|i| (i.stream_id.clone(), i.version))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataStreamRecord {
    pub id: String,
    pub locator: String,
    pub kind: DataKind,
    #[serde(default)]
    pub descriptor: Descriptor,
    #[serde(default)]
    pub keywords: BTreeSet<String>,
    pub version: u64,
    pub updated_at: DateTime<Utc>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl DataStreamRecord {
    /// Lowercased keywords plus lowercased descriptor values: the vocabulary
    /// that slot keywords and filters are matched against.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.keywords
            .iter()
            .map(|k| k.to_lowercase())
            .chain(self.descriptor.values().map(str::to_lowercase))
            .collect()
    }
}

/// Stream registration input as it arrives from configuration or the API;
/// `kind` stays textual until validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StreamDraft {
    pub id: String,
    #[serde(default)]
    pub locator: String,
    pub kind: String,
    #[serde(default)]
    pub descriptor: Descriptor,
    #[serde(default)]
    pub keywords: BTreeSet<String>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl StreamDraft {
    pub fn into_record(self, now: DateTime<Utc>) -> Result<DataStreamRecord> {
        Ok(DataStreamRecord {
            kind: self.kind.parse()?,
            id: self.id,
            locator: self.locator,
            descriptor: self.descriptor,
            keywords: self.keywords,
            version: 1,
            updated_at: now,
            provenance: self.provenance,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CreatedBy {
    Manual,
    Propagation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PageRecord {
    pub id: String,
    pub vis_function_id: String,
    pub bindings: Vec<Vec<String>>,
    pub url_slug: String,
    pub title: String,
    pub description_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail_ref: Option<String>,
    pub created_by: CreatedBy,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl PageRecord {
    pub fn stream_ids(&self) -> impl Iterator<Item = &String> {
        self.bindings.iter().flatten()
    }

    pub fn binds(&self, stream_id: &str) -> bool {
        self.stream_ids().any(|s| s == stream_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entity {
    Stream,
    Page,
    Visfunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Created,
    Updated,
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangeLogEntry {
    pub seq: u64,
    pub entity: Entity,
    pub entity_id: String,
    pub action: Action,
    pub at: DateTime<Utc>,
}

/// Stream content: a raw series or one of the derived products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum StreamContent {
    Timeseries(TimeSeries),
    Matrix(SimilarityMatrix),
    Projection(FeatureProjection),
    Lagtable(LagTable),
    Table(serde_json::Value),
    Scalar(f64),
}

impl StreamContent {
    pub fn kind(&self) -> DataKind {
        match self {
            StreamContent::Timeseries(_) => DataKind::Timeseries,
            StreamContent::Matrix(_) => DataKind::Matrix,
            StreamContent::Projection(_) => DataKind::Projection,
            StreamContent::Lagtable(_) => DataKind::Lagtable,
            StreamContent::Table(_) => DataKind::Table,
            StreamContent::Scalar(_) => DataKind::Scalar,
        }
    }

    /// The bare product, as served by the data endpoints.
    pub fn to_json(&self) -> serde_json::Value {
        let value = match self {
            StreamContent::Timeseries(s) => serde_json::to_value(s),
            StreamContent::Matrix(m) => serde_json::to_value(m),
            StreamContent::Projection(p) => serde_json::to_value(p),
            StreamContent::Lagtable(t) => serde_json::to_value(t),
            StreamContent::Table(v) => Ok(v.clone()),
            StreamContent::Scalar(v) => serde_json::to_value(v),
        };
        value.unwrap_or(serde_json::Value::Null)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoredContent {
    pub content: StreamContent,
    /// Hex SHA-256 of the payload the content was produced from.
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bookmark {
    pub username: String,
    pub page_id: String,
    pub added_at: DateTime<Utc>,
}
