use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ontology::{DataKind, DataStreamRecord, DescriptorField, SlotSpec};

/// Descriptor/keyword predicate over streams. Empty fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StreamFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<DataKind>,
    /// Exact (case-insensitive) descriptor values.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub descriptor: BTreeMap<DescriptorField, String>,
    /// Each keyword must appear among the stream's keywords or descriptor values.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub keywords: BTreeSet<String>,
}

impl StreamFilter {
    pub fn matches(&self, stream: &DataStreamRecord) -> bool {
        if self.kind.is_some_and(|k| k != stream.kind) {
            return false;
        }
        let descriptor_ok = self.descriptor.iter().all(|(field, want)| {
            stream
                .descriptor
                .get(*field)
                .is_some_and(|have| have.eq_ignore_ascii_case(want))
        });
        descriptor_ok && covers(&stream.vocabulary(), &self.keywords)
    }
}

fn covers(vocabulary: &BTreeSet<String>, keywords: &BTreeSet<String>) -> bool {
    keywords.iter().all(|k| vocabulary.contains(&k.to_lowercase()))
}

/// Whether a stream may fill a slot: kinds agree and the slot's required
/// keywords are all present. Shared-field agreement is a property of the
/// whole group and is checked separately.
pub fn compatible(slot: &SlotSpec, stream: &DataStreamRecord) -> bool {
    slot.kind == stream.kind && covers(&stream.vocabulary(), &slot.required_keywords)
}

#[cfg(test)]
mod tests {
    use chrono::DateTime;

    use super::*;
    use crate::ontology::{Descriptor, Provenance};

    fn stream(region: &str, keywords: &[&str]) -> DataStreamRecord {
        DataStreamRecord {
            id: region.into(),
            locator: String::new(),
            kind: DataKind::Timeseries,
            descriptor: Descriptor {
                region: Some(region.into()),
                indicator: Some("Cases".into()),
                ..Default::default()
            },
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
            version: 1,
            updated_at: DateTime::UNIX_EPOCH,
            provenance: Provenance::External,
        }
    }

    #[test]
    fn descriptor_and_keywords() {
        let s = stream("glasgow", &["covid"]);
        let mut f = StreamFilter::default();
        assert!(f.matches(&s));
        f.descriptor.insert(DescriptorField::Indicator, "cases".into());
        assert!(f.matches(&s));
        f.keywords.insert("glasgow".into());
        f.keywords.insert("covid".into());
        assert!(f.matches(&s));
        f.kind = Some(DataKind::Matrix);
        assert!(!f.matches(&s));
    }

    #[test]
    fn slot_keywords_search_descriptor_values() {
        let mut slot = SlotSpec::single(DataKind::Timeseries);
        slot.required_keywords.insert("cases".into());
        assert!(compatible(&slot, &stream("glasgow", &[])));
        slot.required_keywords.insert("deaths".into());
        assert!(!compatible(&slot, &stream("glasgow", &[])));
    }
}
