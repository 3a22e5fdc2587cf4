//! In-memory inverted index over pages and streams, and the ranked
//! multi-keyword search on top of it.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{DataStreamRecord, PageRecord, StoreState};

/// Weight of a term found in a descriptor value.
pub const DESCRIPTOR_WEIGHT: u32 = 2;
/// Weight of a term found only in free text.
pub const TEXT_WEIGHT: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    #[default]
    Pages,
    Streams,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Pages => "pages",
            Scope::Streams => "streams",
        })
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pages" => Ok(Scope::Pages),
            "streams" => Ok(Scope::Streams),
            other => Err(Error::InvalidQuery(format!("unknown scope {other:?}"))),
        }
    }
}

/// Lowercase alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub terms: Vec<String>,
    pub scope: Scope,
}

impl SearchQuery {
    /// Tokenizes `text` into distinct terms, keeping first-seen order.
    pub fn parse(text: &str, scope: Scope) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let terms: Vec<String> = tokenize(text).filter(|t| seen.insert(t.clone())).collect();
        if terms.is_empty() {
            return Err(Error::InvalidQuery("query has no terms".into()));
        }
        Ok(SearchQuery { terms, scope })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Doc {
    updated_at: DateTime<Utc>,
    terms: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchHit {
    pub id: String,
    pub score: u32,
    pub matched: usize,
    pub all_terms: bool,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchIndex {
    checkpoint: u64,
    docs: BTreeMap<Scope, BTreeMap<String, Doc>>,
    postings: BTreeMap<Scope, BTreeMap<String, BTreeSet<String>>>,
}

fn weigh(descriptor: impl Iterator<Item = String>, text: impl Iterator<Item = String>) -> BTreeMap<String, u32> {
    let mut terms = BTreeMap::new();
    for t in text {
        terms.entry(t).or_insert(TEXT_WEIGHT);
    }
    for t in descriptor {
        terms.insert(t, DESCRIPTOR_WEIGHT);
    }
    terms
}

fn page_doc(state: &StoreState, page: &PageRecord) -> Doc {
    let descriptor: Vec<String> = page
        .stream_ids()
        .filter_map(|id| state.stream(id))
        .flat_map(|s| s.descriptor.values().flat_map(tokenize).collect::<Vec<_>>())
        .collect();
    let text = tokenize(&page.description_text).chain(tokenize(&page.title)).collect::<Vec<_>>();
    Doc {
        updated_at: page.updated_at,
        terms: weigh(descriptor.into_iter(), text.into_iter()),
    }
}

fn stream_doc(stream: &DataStreamRecord) -> Doc {
    let descriptor: Vec<String> = stream.descriptor.values().flat_map(tokenize).collect();
    let text: Vec<String> = tokenize(&stream.id)
        .chain(stream.keywords.iter().flat_map(|k| tokenize(k).collect::<Vec<_>>()))
        .chain(tokenize(stream.kind.as_str()))
        .collect();
    Doc {
        updated_at: stream.updated_at,
        terms: weigh(descriptor.into_iter(), text.into_iter()),
    }
}

impl SearchIndex {
    /// Change-log sequence up to which the index is current.
    pub fn checkpoint(&self) -> u64 {
        self.checkpoint
    }

    pub fn len(&self, scope: Scope) -> usize {
        self.docs.get(&scope).map_or(0, BTreeMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.docs.values().all(BTreeMap::is_empty)
    }

    fn remove(&mut self, scope: Scope, id: &str) {
        let Some(docs) = self.docs.get_mut(&scope) else { return };
        let Some(old) = docs.remove(id) else { return };
        if docs.is_empty() {
            self.docs.remove(&scope);
        }
        if let Some(postings) = self.postings.get_mut(&scope) {
            for term in old.terms.keys() {
                if let Some(ids) = postings.get_mut(term) {
                    ids.remove(id);
                    if ids.is_empty() {
                        postings.remove(term);
                    }
                }
            }
            if postings.is_empty() {
                self.postings.remove(&scope);
            }
        }
    }

    fn put(&mut self, scope: Scope, id: &str, doc: Doc) {
        self.remove(scope, id);
        let postings = self.postings.entry(scope).or_default();
        for term in doc.terms.keys() {
            postings.entry(term.clone()).or_default().insert(id.to_string());
        }
        self.docs.entry(scope).or_default().insert(id.to_string(), doc);
    }

    /// Re-reads one page from the state (or drops it if gone).
    pub fn refresh_page(&mut self, state: &StoreState, id: &str) {
        match state.page(id) {
            Some(page) => self.put(Scope::Pages, id, page_doc(state, page)),
            None => self.remove(Scope::Pages, id),
        }
    }

    pub fn refresh_stream(&mut self, state: &StoreState, id: &str) {
        match state.stream(id) {
            Some(stream) => self.put(Scope::Streams, id, stream_doc(stream)),
            None => self.remove(Scope::Streams, id),
        }
    }

    /// Index built from scratch over the whole state.
    pub fn build(state: &StoreState) -> Self {
        let mut index = SearchIndex::default();
        for page in state.pages() {
            index.put(Scope::Pages, &page.id, page_doc(state, page));
        }
        for stream in state.streams() {
            index.put(Scope::Streams, &stream.id, stream_doc(stream));
        }
        index.checkpoint = state.head_seq();
        index
    }

    pub(crate) fn set_checkpoint(&mut self, seq: u64) {
        self.checkpoint = seq;
    }

    /// Documents matching all terms come first; within a tier, higher
    /// weighted score, then more recently updated, then id.
    pub fn search(&self, query: &SearchQuery) -> Vec<SearchHit> {
        let (Some(docs), Some(postings)) = (self.docs.get(&query.scope), self.postings.get(&query.scope)) else {
            return Vec::new();
        };
        let candidates: BTreeSet<&String> = query
            .terms
            .iter()
            .filter_map(|t| postings.get(t))
            .flatten()
            .collect();
        let mut hits: Vec<SearchHit> = candidates
            .into_iter()
            .map(|id| {
                let doc = &docs[id];
                let weights: Vec<u32> = query.terms.iter().filter_map(|t| doc.terms.get(t).copied()).collect();
                SearchHit {
                    id: id.clone(),
                    score: weights.iter().sum(),
                    matched: weights.len(),
                    all_terms: weights.len() == query.terms.len(),
                    updated_at: doc.updated_at,
                }
            })
            .collect();
        hits.sort_by(|a, b| {
            (Reverse(a.all_terms), Reverse(a.score), Reverse(a.updated_at), &a.id).cmp(&(
                Reverse(b.all_terms),
                Reverse(b.score),
                Reverse(b.updated_at),
                &b.id,
            ))
        });
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_and_query() {
        assert_eq!(tokenize("Line-Uncertainty, NHS Glasgow").collect::<Vec<_>>(), ["line", "uncertainty", "nhs", "glasgow"]);
        let q = SearchQuery::parse("Glasgow  cases glasgow", Scope::Pages).unwrap();
        assert_eq!(q.terms, ["glasgow", "cases"]);
        assert!(SearchQuery::parse("  ,; ", Scope::Pages).is_err());
        assert_eq!("streams".parse::<Scope>().unwrap(), Scope::Streams);
        assert!("people".parse::<Scope>().is_err());
    }

    #[test]
    fn descriptor_terms_outweigh_text() {
        let w = weigh(["glasgow".to_string()].into_iter(), ["glasgow".to_string(), "line".to_string()].into_iter());
        assert_eq!(w["glasgow"], DESCRIPTOR_WEIGHT);
        assert_eq!(w["line"], TEXT_WEIGHT);
    }
}
