//! Discovering every binding of a visualisation function over compatible
//! streams (preview), and creating the operator-selected ones (commit).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{compatible, StreamFilter};
use crate::ontology::{CreatedBy, DataStreamRecord, SlotSpec, Store, StoreState, VisFunctionRecord};

pub type Binding = Vec<Vec<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CandidateStatus {
    New,
    AlreadyBound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidate {
    pub bindings: Binding,
    pub status: CandidateStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropagationPlan {
    pub vis_function_id: String,
    #[serde(default)]
    pub filter: StreamFilter,
    /// Change-log head when the preview was taken.
    pub registry_seq: u64,
    pub candidates: Vec<Candidate>,
    #[serde(default)]
    pub selected: Vec<Binding>,
}

impl PropagationPlan {
    pub fn new_candidates(&self) -> impl Iterator<Item = &Binding> {
        self.candidates
            .iter()
            .filter(|c| c.status == CandidateStatus::New)
            .map(|c| &c.bindings)
    }

    /// Selects every new candidate.
    pub fn select_all_new(mut self) -> Self {
        self.selected = self.new_candidates().cloned().collect();
        self
    }
}

/// The ways one slot can be filled from `streams` (already filtered): single
/// streams for `exactly(1)` slots, otherwise the groups of compatible
/// streams that agree on the slot's shared fields, kept when the group size
/// satisfies the cardinality.
pub fn slot_options(slot: &SlotSpec, streams: &[&DataStreamRecord]) -> Vec<Vec<String>> {
    let eligible = streams.iter().filter(|s| compatible(slot, s));
    if slot.cardinality == crate::ontology::Cardinality::Exactly(1) {
        return eligible.map(|s| vec![s.id.clone()]).collect();
    }
    let mut groups: BTreeMap<Vec<Option<&str>>, Vec<String>> = BTreeMap::new();
    for s in eligible {
        let key = slot.shared_fields.iter().map(|f| s.descriptor.get(*f)).collect();
        groups.entry(key).or_default().push(s.id.clone());
    }
    groups
        .into_values()
        .filter(|ids| slot.cardinality.admits(ids.len()))
        .map(|mut ids| {
            ids.sort();
            ids
        })
        .collect()
}

/// Every valid binding of `vf` over the streams passing `filter`, sorted.
pub fn enumerate_bindings(state: &StoreState, vf: &VisFunctionRecord, filter: &StreamFilter) -> Vec<Binding> {
    let streams: Vec<&DataStreamRecord> = state.streams().filter(|s| filter.matches(s)).collect();
    let options: Vec<Vec<Vec<String>>> = vf.data_signature.iter().map(|slot| slot_options(slot, &streams)).collect();
    let mut out: Vec<Binding> = vec![Vec::new()];
    for slot_opts in &options {
        let mut next = Vec::with_capacity(out.len() * slot_opts.len());
        for partial in &out {
            for opt in slot_opts {
                let used: BTreeSet<&String> = partial.iter().flatten().collect();
                if opt.iter().any(|id| used.contains(id)) {
                    continue;
                }
                let mut b = partial.clone();
                b.push(opt.clone());
                next.push(b);
            }
        }
        out = next;
    }
    out.sort();
    out
}

fn candidates(state: &StoreState, vf: &VisFunctionRecord, filter: &StreamFilter) -> Vec<Candidate> {
    enumerate_bindings(state, vf, filter)
        .into_iter()
        .map(|bindings| {
            let page_id = state.page_for_binding(&vf.id, &bindings).map(|p| p.id.clone());
            Candidate {
                status: if page_id.is_some() {
                    CandidateStatus::AlreadyBound
                } else {
                    CandidateStatus::New
                },
                bindings,
                page_id,
            }
        })
        .collect()
}

pub fn preview(store: &Store, vis_function_id: &str, filter: StreamFilter) -> Result<PropagationPlan> {
    let state = store.read();
    let vf = state
        .visfunction(vis_function_id)
        .ok_or_else(|| Error::NotFound(format!("visfunction {vis_function_id}")))?;
    Ok(PropagationPlan {
        vis_function_id: vis_function_id.to_string(),
        candidates: candidates(&state, vf, &filter),
        filter,
        registry_seq: state.head_seq(),
        selected: Vec::new(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommitResult {
    pub created: Vec<String>,
    pub skipped: usize,
}

/// Creates one page per selected binding, all under a single write lock.
/// The selection must come from the plan's new candidates. It is then
/// re-validated against the current registry: if any selected binding is no
/// longer a candidate the commit is rejected as stale and nothing is written;
/// bindings that have meanwhile been bound are skipped.
pub fn commit(store: &Store, plan: &PropagationPlan) -> Result<CommitResult> {
    let offered: BTreeSet<&Binding> = plan.new_candidates().collect();
    let mut selected: Vec<&Binding> = Vec::new();
    let mut seen = BTreeSet::new();
    for b in &plan.selected {
        if !offered.contains(b) {
            return Err(Error::InvalidSelection(format!("{b:?} is not a new candidate of this plan")));
        }
        if seen.insert(b) {
            selected.push(b);
        }
    }
    store.write(|state, now| {
        let vf = state
            .visfunction(&plan.vis_function_id)
            .ok_or_else(|| Error::StalePlan(format!("visfunction {} no longer exists", plan.vis_function_id)))?;
        let current: BTreeMap<Binding, CandidateStatus> = candidates(state, vf, &plan.filter)
            .into_iter()
            .map(|c| (c.bindings, c.status))
            .collect();
        let mut todo = Vec::new();
        let mut skipped = 0;
        for b in &selected {
            match current.get(*b) {
                None => {
                    return Err(Error::StalePlan(format!(
                        "{b:?} is no longer a valid binding (registry changed since seq {})",
                        plan.registry_seq
                    )))
                }
                Some(CandidateStatus::AlreadyBound) => skipped += 1,
                Some(CandidateStatus::New) => todo.push(*b),
            }
        }
        for b in &todo {
            state.check_binding(&plan.vis_function_id, b)?;
        }
        let mut created = Vec::with_capacity(todo.len());
        for b in todo {
            let page = state.create_page(&plan.vis_function_id, b.clone(), CreatedBy::Propagation, now)?;
            created.push(page.id);
        }
        Ok(CommitResult { created, skipped })
    })
}
