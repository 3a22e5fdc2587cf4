mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use tsvis_core::filter::StreamFilter;
use tsvis_core::ontology::{
    Cardinality, DataKind, DataStreamRecord, DescriptorField, Entity, PlotType, SlotSpec, Store, StreamDraft,
    VisFunctionRecord,
};
use tsvis_core::propagation::{commit, preview, CandidateStatus, PropagationPlan};
use tsvis_core::Error;

use common::*;

const REGIONS: [&str; 3] = ["glasgow", "lothian", "fife"];
const INDICATORS: [&str; 3] = ["cases", "deaths", "tests"];
const KINDS: [&str; 2] = ["timeseries", "matrix"];

#[derive(Debug, Clone)]
struct StreamSpec {
    region: usize,
    indicator: usize,
    kind: usize,
    tagged: bool,
}

fn stream_spec() -> impl Strategy<Value = StreamSpec> {
    (0..3usize, 0..3usize, prop_oneof![4 => Just(0usize), 1 => Just(1usize)], any::<bool>())
        .prop_map(|(region, indicator, kind, tagged)| StreamSpec { region, indicator, kind, tagged })
}

fn populate(store: &Store, specs: &[StreamSpec]) {
    for (i, s) in specs.iter().enumerate() {
        let mut draft = StreamDraft {
            kind: KINDS[s.kind].into(),
            ..series_draft(&format!("s{i:02}"), REGIONS[s.region], INDICATORS[s.indicator])
        };
        if s.tagged {
            draft.keywords.insert("weekly".into());
        }
        store.register_stream(draft).unwrap();
    }
}

/// Slot predicate written out from the definition, independent of the
/// library's filter code.
fn fits(slot: &SlotSpec, s: &DataStreamRecord) -> bool {
    let mut vocabulary: BTreeSet<String> = s.keywords.clone();
    for field in DescriptorField::ALL {
        if let Some(v) = s.descriptor.get(field) {
            vocabulary.insert(v.to_lowercase());
        }
    }
    s.kind == slot.kind && slot.required_keywords.iter().all(|k| vocabulary.contains(k))
}

fn passes(filter: &Option<String>, s: &DataStreamRecord) -> bool {
    filter.as_ref().is_none_or(|want| s.descriptor.indicator.as_deref() == Some(want.as_str()))
}

fn to_filter(indicator: &Option<String>) -> StreamFilter {
    StreamFilter {
        descriptor: indicator.iter().map(|v| (DescriptorField::Indicator, v.clone())).collect(),
        ..Default::default()
    }
}

fn candidate_set(plan: &PropagationPlan) -> BTreeMap<Vec<Vec<String>>, CandidateStatus> {
    plan.candidates.iter().map(|c| (c.bindings.clone(), c.status)).collect()
}

fn two_single_slots(required: &[&str]) -> VisFunctionRecord {
    let mut slot = SlotSpec::single(DataKind::Timeseries);
    slot.required_keywords = required.iter().map(|k| k.to_string()).collect();
    VisFunctionRecord {
        id: "pair".into(),
        name: "Time lag".into(),
        plot_type: PlotType::Timelag,
        data_signature: vec![slot.clone(), SlotSpec::single(DataKind::Timeseries)],
        description: String::new(),
        keywords: BTreeSet::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Preview of single-stream slots equals exhaustive enumeration of every
    /// stream tuple, and the alreadyBound tag matches exactly one page.
    #[test]
    fn preview_matches_exhaustive_enumeration_for_single_slots(
        specs in prop::collection::vec(stream_spec(), 1..=50),
        indicator in prop::option::of(prop::sample::select(INDICATORS.to_vec()).prop_map(String::from)),
        required in prop::sample::select(vec![vec![], vec!["weekly"], vec!["glasgow"]]),
        prebound in prop::collection::vec((0usize..50, 0usize..50), 0..5),
    ) {
        let store = store();
        populate(&store, &specs);
        let vf = two_single_slots(&required);
        let slots = vf.data_signature.clone();
        store.register_visfunction(vf).unwrap();
        for (a, b) in prebound {
            let _ = store.create_page("pair", vec![vec![format!("s{a:02}")], vec![format!("s{b:02}")]]);
        }

        let plan = preview(&store, "pair", to_filter(&indicator)).unwrap();
        let state = store.read();
        let streams: Vec<&DataStreamRecord> = state.streams().collect();
        let mut expected = BTreeSet::new();
        for a in &streams {
            for b in &streams {
                let ok = a.id != b.id
                    && passes(&indicator, a) && passes(&indicator, b)
                    && fits(&slots[0], a) && fits(&slots[1], b);
                if ok {
                    expected.insert(vec![vec![a.id.clone()], vec![b.id.clone()]]);
                }
            }
        }
        let got = candidate_set(&plan);
        prop_assert_eq!(got.keys().cloned().collect::<BTreeSet<_>>(), expected);
        let ordered: Vec<_> = plan.candidates.iter().map(|c| c.bindings.clone()).collect();
        let mut sorted = ordered.clone();
        sorted.sort();
        prop_assert_eq!(ordered, sorted);
        for c in &plan.candidates {
            let pages: Vec<_> = state.pages().filter(|p| p.vis_function_id == "pair" && p.bindings == c.bindings).collect();
            match c.status {
                CandidateStatus::AlreadyBound => {
                    prop_assert_eq!(pages.len(), 1);
                    prop_assert_eq!(c.page_id.as_ref(), Some(&pages[0].id));
                }
                CandidateStatus::New => prop_assert!(pages.is_empty()),
            }
        }
    }

    /// Group slots: every subset of the registry is tried; a subset is a
    /// candidate when it fits, agrees on the shared fields, admits the
    /// cardinality and contains every fitting stream that agrees with it.
    #[test]
    fn preview_matches_exhaustive_subsets_for_group_slots(
        specs in prop::collection::vec(stream_spec(), 1..=12),
        min in 1usize..4,
        exact in any::<bool>(),
        shared_indicator in any::<bool>(),
        indicator in prop::option::of(prop::sample::select(INDICATORS.to_vec()).prop_map(String::from)),
    ) {
        let store = store();
        populate(&store, &specs);
        let mut shared = BTreeSet::from([DescriptorField::Region]);
        if shared_indicator {
            shared.insert(DescriptorField::Indicator);
        }
        let cardinality = if exact { Cardinality::Exactly(min + 1) } else { Cardinality::AtLeast(min) };
        let slot = SlotSpec { kind: DataKind::Timeseries, cardinality, required_keywords: BTreeSet::new(), shared_fields: shared.clone() };
        store.register_visfunction(VisFunctionRecord {
            id: "grp".into(),
            name: "Group".into(),
            plot_type: PlotType::Line,
            data_signature: vec![slot.clone()],
            description: String::new(),
            keywords: BTreeSet::new(),
        }).unwrap();

        let plan = preview(&store, "grp", to_filter(&indicator)).unwrap();
        let state = store.read();
        let eligible: Vec<&DataStreamRecord> = state.streams().filter(|s| passes(&indicator, s) && fits(&slot, s)).collect();
        let key = |s: &DataStreamRecord| shared.iter().map(|f| s.descriptor.get(*f).map(str::to_string)).collect::<Vec<_>>();
        let all: Vec<&DataStreamRecord> = state.streams().collect();
        let mut expected = BTreeSet::new();
        for mask in 1u32..(1 << all.len()) {
            let subset: Vec<&DataStreamRecord> = (0..all.len()).filter(|i| mask & (1 << i) != 0).map(|i| all[i]).collect();
            if !subset.iter().all(|s| passes(&indicator, s) && fits(&slot, s)) {
                continue;
            }
            let k = key(subset[0]);
            if subset.iter().any(|s| key(s) != k) {
                continue;
            }
            let admitted = match cardinality {
                Cardinality::Exactly(n) => subset.len() == n,
                Cardinality::AtLeast(n) => subset.len() >= n,
            };
            let maximal = eligible.iter().filter(|s| key(s) == k).count() == subset.len();
            if admitted && maximal {
                expected.insert(vec![subset.iter().map(|s| s.id.clone()).collect::<Vec<_>>()]);
            }
        }
        prop_assert_eq!(candidate_set(&plan).keys().cloned().collect::<BTreeSet<_>>(), expected);
        drop(state);

        // soundness: every committed candidate passes full page validation
        let created = commit(&store, &plan.clone().select_all_new())
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(created.created.len(), plan.candidates.len());
        store.read().check_integrity().map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
}

#[test]
fn line_function_over_keywords() {
    let store = store();
    store.register_visfunction(line_fn("line", &["cases"])).unwrap();
    store.register_stream(series_draft("gla", "glasgow", "cases")).unwrap();
    store.register_stream(series_draft("lot", "lothian", "cases")).unwrap();
    store.register_stream(series_draft("fif", "fife", "deaths")).unwrap();
    let plan = preview(&store, "line", StreamFilter::default()).unwrap();
    assert_eq!(plan.candidates.len(), 2);
    assert!(plan.candidates.iter().all(|c| c.status == CandidateStatus::New));

    let result = commit(&store, &plan.clone().select_all_new()).unwrap();
    assert_eq!(result.created.len(), 2);
    let slugs: BTreeSet<_> = store.read().pages().map(|p| p.url_slug.clone()).collect();
    assert_eq!(slugs.len(), 2);
    assert!(store.read().pages().all(|p| p.created_by == tsvis_core::ontology::CreatedBy::Propagation));

    let again = commit(&store, &plan.clone().select_all_new()).unwrap();
    assert!(again.created.is_empty());
    assert_eq!(again.skipped, 2);
    let fresh = preview(&store, "line", StreamFilter::default()).unwrap();
    assert!(fresh.candidates.iter().all(|c| c.status == CandidateStatus::AlreadyBound));

    store.register_visfunction(line_fn("nothing", &["hospitalised"])).unwrap();
    assert!(preview(&store, "nothing", StreamFilter::default()).unwrap().candidates.is_empty());
    assert!(matches!(preview(&store, "missing", StreamFilter::default()), Err(Error::NotFound(_))));
}

#[test]
fn stale_plan_writes_nothing() {
    let store = store();
    store.register_visfunction(line_fn("line", &[])).unwrap();
    for id in ["a", "b", "c"] {
        store.register_stream(series_draft(id, id, "cases")).unwrap();
    }
    let plan = preview(&store, "line", StreamFilter::default()).unwrap().select_all_new();
    store.delete(Entity::Stream, "b").unwrap();

    let mut before = Vec::new();
    store.export_snapshot(&mut before).unwrap();
    assert!(matches!(commit(&store, &plan), Err(Error::StalePlan(_))));
    let mut after = Vec::new();
    store.export_snapshot(&mut after).unwrap();
    assert_eq!(before, after);
    assert_eq!(store.read().pages().count(), 0);

    // a selection outside the plan's new candidates is refused outright
    let mut forged = preview(&store, "line", StreamFilter::default()).unwrap();
    forged.selected = vec![vec![vec!["zzz".into()]]];
    assert!(matches!(commit(&store, &forged), Err(Error::InvalidSelection(_))));
}

#[test]
fn partial_selection_commits_only_the_selection() {
    let store = store();
    store.register_visfunction(line_fn("line", &[])).unwrap();
    for id in ["a", "b", "c"] {
        store.register_stream(series_draft(id, id, "cases")).unwrap();
    }
    let mut plan = preview(&store, "line", StreamFilter::default()).unwrap();
    plan.selected = vec![plan.candidates[0].bindings.clone(), plan.candidates[2].bindings.clone()];
    let result = commit(&store, &plan).unwrap();
    assert_eq!(result.created.len(), 2);
    let bound: BTreeSet<_> = store.read().pages().map(|p| p.bindings[0][0].clone()).collect();
    assert_eq!(bound, BTreeSet::from(["a".to_string(), "c".to_string()]));
}
