use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tsvis_analytics::{
    classical_mds_matrix, lag_table_with, pairwise_matrix_with, pca, Execution, Measure, ProjectionMethod, TimeSeries,
};

use crate::error::{Error, Result};
use crate::filter::StreamFilter;
use crate::ontology::{
    DataKind, DerivedOutput, Descriptor, InputVersion, Store, StoreState, StreamContent,
};

fn default_mds_measure() -> Measure {
    Measure::Dtw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum ProductSpec {
    Matrix {
        metric: Measure,
    },
    /// `measure` supplies the distances for MDS and is ignored by PCA.
    Projection {
        method: ProjectionMethod,
        #[serde(default = "default_mds_measure")]
        measure: Measure,
    },
    #[serde(rename_all = "camelCase")]
    LagTable {
        max_lag: usize,
    },
}

impl ProductSpec {
    pub fn output_kind(&self) -> DataKind {
        match self {
            ProductSpec::Matrix { .. } => DataKind::Matrix,
            ProductSpec::Projection { .. } => DataKind::Projection,
            ProductSpec::LagTable { .. } => DataKind::Lagtable,
        }
    }

    pub fn min_inputs(&self) -> usize {
        match self {
            ProductSpec::Projection {
                method: ProjectionMethod::Pca,
                ..
            } => 3,
            _ => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if let ProductSpec::Projection {
            method: ProjectionMethod::Mds,
            measure,
        } = self
        {
            if measure.self_value() != Some(0.0) {
                return Err(Error::InvalidRecord(format!(
                    "mds needs a distance measure, {measure} is a similarity"
                )));
            }
        }
        Ok(())
    }

    fn compute(&self, set: &[TimeSeries], exec: Execution) -> Result<StreamContent> {
        Ok(match self {
            ProductSpec::Matrix { metric } => StreamContent::Matrix(pairwise_matrix_with(set, *metric, exec)?),
            ProductSpec::Projection {
                method: ProjectionMethod::Pca,
                ..
            } => StreamContent::Projection(pca(set)?),
            ProductSpec::Projection {
                method: ProjectionMethod::Mds,
                measure,
            } => StreamContent::Projection(classical_mds_matrix(&pairwise_matrix_with(set, *measure, exec)?)?),
            ProductSpec::LagTable { max_lag } => StreamContent::Lagtable(lag_table_with(set, *max_lag, exec)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalyticalAgentSpec {
    pub agent_id: String,
    /// Selects the input streams; only time series with content are used.
    pub input: StreamFilter,
    pub product: ProductSpec,
    pub output_stream_id: String,
    pub interval_secs: u64,
    #[serde(default)]
    pub output_descriptor: Descriptor,
    #[serde(default)]
    pub output_keywords: BTreeSet<String>,
}

impl AnalyticalAgentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.interval_secs == 0 {
            return Err(Error::InvalidRecord(format!("agent {} has a zero interval", self.agent_id)));
        }
        if self.agent_id.trim().is_empty() || self.output_stream_id.trim().is_empty() {
            return Err(Error::InvalidRecord("agent and output ids must be non-empty".into()));
        }
        self.product.validate()
    }

    fn output(&self) -> DerivedOutput {
        DerivedOutput {
            agent_id: self.agent_id.clone(),
            stream_id: self.output_stream_id.clone(),
            descriptor: self.output_descriptor.clone(),
            keywords: self.output_keywords.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum RunOutcome {
    SkippedUnchanged,
    Produced { version: u64 },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentRunRecord {
    pub agent_id: String,
    pub started_at: DateTime<Utc>,
    pub input_versions: BTreeMap<String, u64>,
    pub outcome: RunOutcome,
}

/// Input series and their versions, selected under one read lock so the
/// snapshot is consistent.
fn select_inputs(state: &StoreState, spec: &AnalyticalAgentSpec) -> (Vec<TimeSeries>, BTreeMap<String, u64>) {
    let mut set = Vec::new();
    let mut versions = BTreeMap::new();
    for stream in state.streams() {
        if stream.id == spec.output_stream_id || stream.kind != DataKind::Timeseries || !spec.input.matches(stream) {
            continue;
        }
        if let Ok((StreamContent::Timeseries(series), version)) = state.content(&stream.id, None) {
            let mut series = series.clone();
            series.stream_id = stream.id.clone();
            set.push(series);
            versions.insert(stream.id.clone(), version);
        }
    }
    (set, versions)
}

/// One scheduled run of an analytical agent.
pub fn run_analytical(store: &Store, spec: &AnalyticalAgentSpec, exec: Execution, now: DateTime<Utc>) -> AgentRunRecord {
    let (set, input_versions, previous) = {
        let state = store.read();
        let (set, versions) = select_inputs(&state, spec);
        let previous = state
            .stream(&spec.output_stream_id)
            .map(|s| s.provenance.input_versions());
        (set, versions, previous)
    };
    let record = |outcome| AgentRunRecord {
        agent_id: spec.agent_id.clone(),
        started_at: now,
        input_versions: input_versions.clone(),
        outcome,
    };
    if previous.as_ref() == Some(&input_versions) {
        return record(RunOutcome::SkippedUnchanged);
    }
    if set.len() < spec.product.min_inputs() {
        return record(RunOutcome::Failed {
            reason: format!(
                "insufficient inputs: {} matched, {} needed",
                set.len(),
                spec.product.min_inputs()
            ),
        });
    }
    let content = match spec.product.compute(&set, exec) {
        Ok(StreamContent::Matrix(m)) => StreamContent::Matrix(m.with_input_versions(input_versions.clone())),
        Ok(other) => other,
        Err(e) => return record(RunOutcome::Failed { reason: e.to_string() }),
    };
    let inputs = input_versions
        .iter()
        .map(|(id, v)| InputVersion {
            stream_id: id.clone(),
            version: *v,
        })
        .collect();
    match store.write(|state, at| state.publish_derived(spec.output(), content, inputs, at)) {
        Ok(version) => record(RunOutcome::Produced { version }),
        Err(e) => record(RunOutcome::Failed { reason: e.to_string() }),
    }
}

struct AgentSlot {
    spec: AnalyticalAgentSpec,
    in_flight: Mutex<()>,
    last_run: Mutex<Option<DateTime<Utc>>>,
    history: Mutex<Vec<AgentRunRecord>>,
}

/// Hosts the analytical agents. Each tick runs the agents whose interval has
/// elapsed, concurrently; one agent never has two runs in flight.
/// Run records kept per agent.
pub const HISTORY_LIMIT: usize = 256;

pub struct Scheduler {
    agents: Vec<AgentSlot>,
    exec: Execution,
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

impl Scheduler {
    pub fn new(specs: Vec<AnalyticalAgentSpec>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        let mut outputs = BTreeSet::new();
        for spec in &specs {
            spec.validate()?;
            if !ids.insert(spec.agent_id.clone()) {
                return Err(Error::DuplicateId(format!("agent {}", spec.agent_id)));
            }
            if !outputs.insert(spec.output_stream_id.clone()) {
                return Err(Error::DuplicateId(format!("output stream {}", spec.output_stream_id)));
            }
        }
        Ok(Scheduler {
            agents: specs
                .into_iter()
                .map(|spec| AgentSlot {
                    spec,
                    in_flight: Mutex::new(()),
                    last_run: Mutex::new(None),
                    history: Mutex::new(Vec::new()),
                })
                .collect(),
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn specs(&self) -> impl Iterator<Item = &AnalyticalAgentSpec> {
        self.agents.iter().map(|a| &a.spec)
    }

    /// Audit trail of one agent, oldest first.
    pub fn history(&self, agent_id: &str) -> Vec<AgentRunRecord> {
        self.agents
            .iter()
            .find(|a| a.spec.agent_id == agent_id)
            .map(|a| a.history.lock().clone())
            .unwrap_or_default()
    }

    fn run_slot(&self, store: &Store, slot: &AgentSlot, now: DateTime<Utc>) -> Option<AgentRunRecord> {
        let _guard = slot.in_flight.try_lock()?;
        *slot.last_run.lock() = Some(now);
        let record = catch_unwind(AssertUnwindSafe(|| run_analytical(store, &slot.spec, self.exec, now)))
            .unwrap_or_else(|payload| AgentRunRecord {
                agent_id: slot.spec.agent_id.clone(),
                started_at: now,
                input_versions: BTreeMap::new(),
                outcome: RunOutcome::Failed {
                    reason: format!("panicked: {}", panic_message(payload.as_ref())),
                },
            });
        if let RunOutcome::Failed { reason } = &record.outcome {
            tracing::warn!(agent = %slot.spec.agent_id, %reason, "agent run failed");
        }
        let mut history = slot.history.lock();
        if history.len() == HISTORY_LIMIT {
            history.remove(0);
        }
        history.push(record.clone());
        Some(record)
    }

    fn run_where(&self, store: &Store, now: DateTime<Utc>, due: impl Fn(&AgentSlot) -> bool) -> Vec<AgentRunRecord> {
        let slots: Vec<&AgentSlot> = self.agents.iter().filter(|a| due(a)).collect();
        self.exec
            .map(&slots, |slot| self.run_slot(store, slot, now))
            .into_iter()
            .flatten()
            .collect()
    }

    /// Runs every agent whose interval has elapsed since its last run.
    pub fn run_due_agents(&self, store: &Store, now: DateTime<Utc>) -> Vec<AgentRunRecord> {
        self.run_where(store, now, |slot| {
            slot.last_run
                .lock()
                .is_none_or(|last| now - last >= Duration::seconds(slot.spec.interval_secs as i64))
        })
    }

    /// Runs every agent regardless of schedule.
    pub fn run_all(&self, store: &Store, now: DateTime<Utc>) -> Vec<AgentRunRecord> {
        self.run_where(store, now, |_| true)
    }
}
