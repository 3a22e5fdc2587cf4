use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{RwLock, RwLockReadGuard};
use sha2::{Digest, Sha256};

use super::persist::{self, Collection};
use super::types::*;
use crate::clock::{Clock, SystemClock};
use crate::error::{Error, Result};

const SLUG_HEX: usize = 8;
const PAGE_ID_HEX: usize = 16;

/// Everything the registry holds. Readers get `&StoreState` through
/// [`Store::read`]; writers go through [`Store::write`].
#[derive(Debug, Default, Clone)]
pub struct StoreState {
    pub(crate) visfunctions: BTreeMap<String, VisFunctionRecord>,
    pub(crate) streams: BTreeMap<String, DataStreamRecord>,
    pub(crate) pages: BTreeMap<String, PageRecord>,
    pub(crate) content: BTreeMap<String, StoredContent>,
    /// username -> page id -> bookmark
    pub(crate) bookmarks: BTreeMap<String, BTreeMap<String, Bookmark>>,
    pub(crate) changelog: Vec<ChangeLogEntry>,
    slugs: HashMap<String, String>,
    bound: HashMap<(String, Vec<Vec<String>>), String>,
    dirty: BTreeSet<Collection>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn content_hash(bytes: &[u8]) -> String {
    sha256_hex(bytes)
}

/// Lowercased, space-delimited search text for a page.
pub fn describe_page(vf: &VisFunctionRecord, streams: &[&DataStreamRecord]) -> String {
    let mut words = vec![vf.name.clone(), vf.plot_type.to_string()];
    for s in streams {
        words.extend(s.descriptor.values().map(str::to_string));
        words.extend(s.keywords.iter().cloned());
    }
    words.join(" ").to_lowercase()
}

impl StoreState {
    pub fn visfunction(&self, id: &str) -> Option<&VisFunctionRecord> {
        self.visfunctions.get(id)
    }

    pub fn stream(&self, id: &str) -> Option<&DataStreamRecord> {
        self.streams.get(id)
    }

    pub fn page(&self, id: &str) -> Option<&PageRecord> {
        self.pages.get(id)
    }

    pub fn page_by_slug(&self, slug: &str) -> Option<&PageRecord> {
        self.slugs.get(slug).and_then(|id| self.pages.get(id))
    }

    pub fn page_for_binding(&self, vf_id: &str, bindings: &[Vec<String>]) -> Option<&PageRecord> {
        self.bound
            .get(&(vf_id.to_string(), bindings.to_vec()))
            .and_then(|id| self.pages.get(id))
    }

    pub fn visfunctions(&self) -> impl Iterator<Item = &VisFunctionRecord> {
        self.visfunctions.values()
    }

    pub fn streams(&self) -> impl Iterator<Item = &DataStreamRecord> {
        self.streams.values()
    }

    pub fn pages(&self) -> impl Iterator<Item = &PageRecord> {
        self.pages.values()
    }

    pub fn changelog(&self) -> &[ChangeLogEntry] {
        &self.changelog
    }

    /// Sequence number of the latest change-log entry, 0 when empty.
    pub fn head_seq(&self) -> u64 {
        self.changelog.last().map_or(0, |e| e.seq)
    }

    pub fn entries_since(&self, seq: u64) -> &[ChangeLogEntry] {
        // seq is gapless from 1, so entry n lives at index n - 1
        let start = (seq as usize).min(self.changelog.len());
        &self.changelog[start..]
    }

    pub fn stored_content(&self, stream_id: &str) -> Option<&StoredContent> {
        self.content.get(stream_id)
    }

    /// Current content of a stream; `version`, when given, must be current.
    pub fn content(&self, stream_id: &str, version: Option<u64>) -> Result<(&StreamContent, u64)> {
        let stream = self
            .streams
            .get(stream_id)
            .ok_or_else(|| Error::NotFound(format!("stream {stream_id}")))?;
        if let Some(requested) = version {
            if requested != stream.version {
                return Err(Error::StaleVersion {
                    requested,
                    current: stream.version,
                });
            }
        }
        let stored = self
            .content
            .get(stream_id)
            .ok_or_else(|| Error::NotFound(format!("stream {stream_id} has no content yet")))?;
        Ok((&stored.content, stream.version))
    }

    pub fn bookmarks(&self, username: &str) -> Vec<&Bookmark> {
        self.bookmarks
            .get(username)
            .map(|m| m.values().collect())
            .unwrap_or_default()
    }

    pub fn pages_binding(&self, stream_id: &str) -> impl Iterator<Item = &PageRecord> + '_ {
        let stream_id = stream_id.to_string();
        self.pages.values().filter(move |p| p.binds(&stream_id))
    }

    fn log(&mut self, entity: Entity, entity_id: &str, action: Action, at: DateTime<Utc>) {
        let seq = self.head_seq() + 1;
        self.changelog.push(ChangeLogEntry {
            seq,
            entity,
            entity_id: entity_id.to_string(),
            action,
            at,
        });
        self.dirty.insert(Collection::Changelog);
    }

    pub fn register_visfunction(&mut self, record: VisFunctionRecord, now: DateTime<Utc>) -> Result<String> {
        record.validate()?;
        if self.visfunctions.contains_key(&record.id) {
            return Err(Error::DuplicateId(record.id));
        }
        let id = record.id.clone();
        let mut record = record;
        record.keywords = record.keywords.iter().map(|k| k.to_lowercase()).collect();
        self.visfunctions.insert(id.clone(), record);
        self.dirty.insert(Collection::Visfunctions);
        self.log(Entity::Visfunction, &id, Action::Created, now);
        Ok(id)
    }

    pub fn register_stream(&mut self, draft: StreamDraft, now: DateTime<Utc>) -> Result<String> {
        let mut record = draft.into_record(now)?;
        if record.id.trim().is_empty() {
            return Err(Error::InvalidRecord("empty stream id".into()));
        }
        if self.streams.contains_key(&record.id) {
            return Err(Error::DuplicateId(record.id));
        }
        if let Provenance::Derived { inputs, .. } = &record.provenance {
            if inputs.is_empty() {
                return Err(Error::InvalidRecord(format!(
                    "derived stream {} has no provenance inputs",
                    record.id
                )));
            }
        }
        record.keywords = record.keywords.iter().map(|k| k.to_lowercase()).collect();
        let id = record.id.clone();
        self.streams.insert(id.clone(), record);
        self.dirty.insert(Collection::Streams);
        self.log(Entity::Stream, &id, Action::Created, now);
        Ok(id)
    }

    /// Full validation of a proposed binding; returns the function and the
    /// resolved streams slot by slot.
    pub fn check_binding(&self, vf_id: &str, bindings: &[Vec<String>]) -> Result<&VisFunctionRecord> {
        let vf = self
            .visfunctions
            .get(vf_id)
            .ok_or_else(|| Error::UnresolvedReference(format!("visfunction {vf_id}")))?;
        if bindings.len() != vf.data_signature.len() {
            return Err(Error::SlotMismatch(format!(
                "{} has {} slots, got {} bindings",
                vf.id,
                vf.data_signature.len(),
                bindings.len()
            )));
        }
        for (index, (slot, ids)) in vf.data_signature.iter().zip(bindings).enumerate() {
            let mut streams = Vec::with_capacity(ids.len());
            for id in ids {
                let stream = self
                    .streams
                    .get(id)
                    .ok_or_else(|| Error::UnresolvedReference(format!("stream {id}")))?;
                streams.push(stream);
            }
            check_slot(slot, index, &streams)?;
        }
        check_distinct(bindings)?;
        if let Some(existing) = self.bound.get(&(vf_id.to_string(), bindings.to_vec())) {
            return Err(Error::DuplicateBinding(existing.clone()));
        }
        Ok(vf)
    }

    pub fn create_page(
        &mut self,
        vf_id: &str,
        bindings: Vec<Vec<String>>,
        created_by: CreatedBy,
        now: DateTime<Utc>,
    ) -> Result<PageRecord> {
        let vf = self.check_binding(vf_id, &bindings)?;
        let streams: Vec<&DataStreamRecord> = bindings.iter().flatten().map(|id| &self.streams[id]).collect();
        let description_text = describe_page(vf, &streams);
        let title = format!(
            "{}: {}",
            vf.name,
            streams.iter().map(|s| s.id.as_str()).collect::<Vec<_>>().join(", ")
        );
        let canonical = serde_json::to_vec(&(vf_id, &bindings))?;
        let digest = sha256_hex(&canonical);
        let prefix = format!("/page/{}/", vf.plot_type);
        let url_slug = (SLUG_HEX..=digest.len())
            .map(|n| format!("{prefix}{}", &digest[..n]))
            .find(|s| !self.slugs.contains_key(s))
            .ok_or_else(|| Error::InvalidRecord("no free url slug".into()))?;
        let id = (PAGE_ID_HEX..=digest.len())
            .map(|n| format!("pg-{}", &digest[..n]))
            .find(|id| !self.pages.contains_key(id))
            .ok_or_else(|| Error::InvalidRecord("no free page id".into()))?;
        let page = PageRecord {
            id: id.clone(),
            vis_function_id: vf_id.to_string(),
            bindings,
            url_slug,
            title,
            description_text,
            thumbnail_ref: None,
            created_by,
            created_at: now,
            updated_at: now,
        };
        self.index_page(&page);
        self.pages.insert(id.clone(), page.clone());
        self.dirty.insert(Collection::Pages);
        self.log(Entity::Page, &id, Action::Created, now);
        Ok(page)
    }

    fn index_page(&mut self, page: &PageRecord) {
        self.slugs.insert(page.url_slug.clone(), page.id.clone());
        self.bound.insert(
            (page.vis_function_id.clone(), page.bindings.clone()),
            page.id.clone(),
        );
    }

    /// Restricting delete: anything still referenced stays put.
    pub fn delete(&mut self, entity: Entity, id: &str, now: DateTime<Utc>) -> Result<()> {
        match entity {
            Entity::Stream => {
                if !self.streams.contains_key(id) {
                    return Err(Error::NotFound(format!("stream {id}")));
                }
                if let Some(page) = self.pages.values().find(|p| p.binds(id)) {
                    return Err(Error::ReferenceHeld(format!("stream {id} is bound by page {}", page.id)));
                }
                if let Some(derived) = self
                    .streams
                    .values()
                    .find(|s| s.provenance.input_versions().contains_key(id))
                {
                    return Err(Error::ReferenceHeld(format!(
                        "stream {id} is an input of derived stream {}",
                        derived.id
                    )));
                }
                self.streams.remove(id);
                self.dirty.insert(Collection::Streams);
                if self.content.remove(id).is_some() {
                    self.dirty.insert(Collection::Content);
                }
            }
            Entity::Visfunction => {
                if !self.visfunctions.contains_key(id) {
                    return Err(Error::NotFound(format!("visfunction {id}")));
                }
                if let Some(page) = self.pages.values().find(|p| p.vis_function_id == id) {
                    return Err(Error::ReferenceHeld(format!("visfunction {id} has page {}", page.id)));
                }
                self.visfunctions.remove(id);
                self.dirty.insert(Collection::Visfunctions);
            }
            Entity::Page => {
                let page = self
                    .pages
                    .remove(id)
                    .ok_or_else(|| Error::NotFound(format!("page {id}")))?;
                self.slugs.remove(&page.url_slug);
                self.bound.remove(&(page.vis_function_id, page.bindings));
                self.dirty.insert(Collection::Pages);
                let mut dropped = false;
                for marks in self.bookmarks.values_mut() {
                    dropped |= marks.remove(id).is_some();
                }
                if dropped {
                    self.bookmarks.retain(|_, m| !m.is_empty());
                    self.dirty.insert(Collection::Bookmarks);
                }
            }
        }
        self.log(entity, id, Action::Deleted, now);
        Ok(())
    }

    /// Replaces descriptor and keywords of a stream. Metadata is not content,
    /// so the version is unchanged.
    pub fn update_stream_metadata(
        &mut self,
        id: &str,
        descriptor: Descriptor,
        keywords: BTreeSet<String>,
        now: DateTime<Utc>,
    ) -> Result<()> {
        let stream = self
            .streams
            .get_mut(id)
            .ok_or_else(|| Error::NotFound(format!("stream {id}")))?;
        stream.descriptor = descriptor;
        stream.keywords = keywords.iter().map(|k| k.to_lowercase()).collect();
        stream.updated_at = now;
        self.dirty.insert(Collection::Streams);
        self.log(Entity::Stream, id, Action::Updated, now);
        Ok(())
    }

    /// Stores new content and bumps the stream version. Returns the new version.
    pub fn set_content(
        &mut self,
        id: &str,
        content: StreamContent,
        hash: String,
        now: DateTime<Utc>,
    ) -> Result<u64> {
        let stream = self
            .streams
            .get_mut(id)
            .ok_or_else(|| Error::NotFound(format!("stream {id}")))?;
        if content.kind() != stream.kind {
            return Err(Error::SlotMismatch(format!(
                "stream {id} is {} but content is {}",
                stream.kind,
                content.kind()
            )));
        }
        // a freshly registered stream sits at version 1 with no content; its
        // first payload is a content change too
        stream.version += 1;
        stream.updated_at = now;
        let version = stream.version;
        self.content.insert(id.to_string(), StoredContent { content, hash });
        self.dirty.insert(Collection::Streams);
        self.dirty.insert(Collection::Content);
        self.log(Entity::Stream, id, Action::Updated, now);
        Ok(version)
    }

    /// Creates or updates an agent-owned derived stream. A new stream starts
    /// at version 1; an existing one is bumped.
    pub fn publish_derived(
        &mut self,
        output: DerivedOutput,
        content: StreamContent,
        inputs: Vec<InputVersion>,
        now: DateTime<Utc>,
    ) -> Result<u64> {
        if inputs.is_empty() {
            return Err(Error::InvalidRecord(format!(
                "derived stream {} has no provenance inputs",
                output.stream_id
            )));
        }
        let hash = sha256_hex(&serde_json::to_vec(&content)?);
        let provenance = Provenance::Derived {
            agent_id: output.agent_id.clone(),
            inputs,
        };
        let kind = content.kind();
        let id = output.stream_id.clone();
        let (version, action) = match self.streams.get_mut(&id) {
            Some(stream) => {
                match &stream.provenance {
                    Provenance::Derived { agent_id, .. } if *agent_id == output.agent_id => {}
                    _ => {
                        return Err(Error::DuplicateId(format!(
                            "{id} is not owned by agent {}",
                            output.agent_id
                        )))
                    }
                }
                if stream.kind != kind {
                    return Err(Error::SlotMismatch(format!("stream {id} is {} but content is {kind}", stream.kind)));
                }
                stream.version += 1;
                stream.updated_at = now;
                stream.provenance = provenance;
                (stream.version, Action::Updated)
            }
            None => {
                self.streams.insert(
                    id.clone(),
                    DataStreamRecord {
                        id: id.clone(),
                        locator: format!("agent:{}", output.agent_id),
                        kind,
                        descriptor: output.descriptor,
                        keywords: output.keywords.iter().map(|k| k.to_lowercase()).collect(),
                        version: 1,
                        updated_at: now,
                        provenance,
                    },
                );
                (1, Action::Created)
            }
        };
        self.content.insert(id.clone(), StoredContent { content, hash });
        self.dirty.insert(Collection::Streams);
        self.dirty.insert(Collection::Content);
        self.log(Entity::Stream, &id, action, now);
        Ok(version)
    }

    /// Rewrites a page's generated description; no-op (and no log entry)
    /// when the text is unchanged.
    pub fn set_description(&mut self, page_id: &str, text: String, now: DateTime<Utc>) -> Result<bool> {
        let page = self
            .pages
            .get_mut(page_id)
            .ok_or_else(|| Error::NotFound(format!("page {page_id}")))?;
        if page.description_text == text {
            return Ok(false);
        }
        page.description_text = text;
        page.updated_at = now;
        self.dirty.insert(Collection::Pages);
        self.log(Entity::Page, page_id, Action::Updated, now);
        Ok(true)
    }

    /// Records a page's thumbnail file; no-op when already set to `reference`.
    pub fn set_thumbnail(&mut self, page_id: &str, reference: String, now: DateTime<Utc>) -> Result<bool> {
        let page = self
            .pages
            .get_mut(page_id)
            .ok_or_else(|| Error::NotFound(format!("page {page_id}")))?;
        if page.thumbnail_ref.as_deref() == Some(reference.as_str()) {
            return Ok(false);
        }
        page.thumbnail_ref = Some(reference);
        page.updated_at = now;
        self.dirty.insert(Collection::Pages);
        self.log(Entity::Page, page_id, Action::Updated, now);
        Ok(true)
    }

    pub fn add_bookmark(&mut self, username: &str, page_id: &str, now: DateTime<Utc>) -> Result<()> {
        if !self.pages.contains_key(page_id) {
            return Err(Error::NotFound(format!("page {page_id}")));
        }
        let marks = self.bookmarks.entry(username.to_string()).or_default();
        if !marks.contains_key(page_id) {
            marks.insert(
                page_id.to_string(),
                Bookmark {
                    username: username.to_string(),
                    page_id: page_id.to_string(),
                    added_at: now,
                },
            );
            self.dirty.insert(Collection::Bookmarks);
        }
        Ok(())
    }

    pub fn remove_bookmark(&mut self, username: &str, page_id: &str) {
        if let Some(marks) = self.bookmarks.get_mut(username) {
            if marks.remove(page_id).is_some() {
                if marks.is_empty() {
                    self.bookmarks.remove(username);
                }
                self.dirty.insert(Collection::Bookmarks);
            }
        }
    }

    /// Full scan: every page reference resolves, every page passes slot
    /// validation, slugs and bindings are unique, the change log is gapless.
    pub fn check_integrity(&self) -> Result<()> {
        let mut slugs = BTreeSet::new();
        let mut tuples = BTreeSet::new();
        for page in self.pages.values() {
            let vf = self.visfunctions.get(&page.vis_function_id).ok_or_else(|| {
                Error::UnresolvedReference(format!("page {} -> visfunction {}", page.id, page.vis_function_id))
            })?;
            if page.bindings.len() != vf.data_signature.len() {
                return Err(Error::SlotMismatch(format!("page {}", page.id)));
            }
            for (index, (slot, ids)) in vf.data_signature.iter().zip(&page.bindings).enumerate() {
                let streams = ids
                    .iter()
                    .map(|id| {
                        self.streams.get(id).ok_or_else(|| {
                            Error::UnresolvedReference(format!("page {} -> stream {id}", page.id))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                check_slot(slot, index, &streams)?;
            }
            check_distinct(&page.bindings)?;
            if !slugs.insert(page.url_slug.as_str()) {
                return Err(Error::InvalidRecord(format!("duplicate slug {}", page.url_slug)));
            }
            if !tuples.insert((&page.vis_function_id, &page.bindings)) {
                return Err(Error::DuplicateBinding(page.id.clone()));
            }
        }
        for (user, marks) in &self.bookmarks {
            for page_id in marks.keys() {
                if !self.pages.contains_key(page_id) {
                    return Err(Error::UnresolvedReference(format!("bookmark {user} -> page {page_id}")));
                }
            }
        }
        for id in self.content.keys() {
            if !self.streams.contains_key(id) {
                return Err(Error::UnresolvedReference(format!("content for stream {id}")));
            }
        }
        for (i, entry) in self.changelog.iter().enumerate() {
            if entry.seq != i as u64 + 1 {
                return Err(Error::InvalidRecord(format!("change log gap at seq {}", entry.seq)));
            }
        }
        Ok(())
    }

    pub(crate) fn rebuild_indexes(&mut self) {
        self.slugs.clear();
        self.bound.clear();
        let pages: Vec<PageRecord> = self.pages.values().cloned().collect();
        for page in &pages {
            self.index_page(page);
        }
    }

    pub(crate) fn take_dirty(&mut self) -> BTreeSet<Collection> {
        std::mem::take(&mut self.dirty)
    }
}

/// Naming and metadata for an agent's output stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedOutput {
    pub agent_id: String,
    pub stream_id: String,
    pub descriptor: Descriptor,
    pub keywords: BTreeSet<String>,
}

/// Kind, cardinality, duplicate and shared-field checks for one slot.
/// Required keywords are a propagation filter, not a binding constraint.
pub fn check_slot(slot: &SlotSpec, index: usize, streams: &[&DataStreamRecord]) -> Result<()> {
    if !slot.cardinality.admits(streams.len()) {
        return Err(Error::SlotMismatch(format!(
            "slot {index} takes {:?} streams, got {}",
            slot.cardinality,
            streams.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for s in streams {
        if s.kind != slot.kind {
            return Err(Error::SlotMismatch(format!(
                "slot {index} takes {} but stream {} is {}",
                slot.kind, s.id, s.kind
            )));
        }
        if !seen.insert(s.id.as_str()) {
            return Err(Error::SlotMismatch(format!("stream {} bound twice in slot {index}", s.id)));
        }
    }
    for field in &slot.shared_fields {
        let first = streams.first().map(|s| s.descriptor.get(*field));
        if streams.iter().any(|s| Some(s.descriptor.get(*field)) != first) {
            return Err(Error::SlotMismatch(format!(
                "slot {index} streams disagree on {field:?}"
            )));
        }
    }
    Ok(())
}

/// A stream fills at most one position in a page.
pub fn check_distinct(bindings: &[Vec<String>]) -> Result<()> {
    let mut seen = BTreeSet::new();
    match bindings.iter().flatten().find(|id| !seen.insert(id.as_str())) {
        Some(id) => Err(Error::SlotMismatch(format!("stream {id} is bound more than once"))),
        None => Ok(()),
    }
}

/// The shared registry: one reader/writer lock over the whole state, with an
/// optional backing directory that is rewritten after every successful write.
pub struct Store {
    state: RwLock<StoreState>,
    clock: Arc<dyn Clock>,
    dir: Option<PathBuf>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("dir", &self.dir).finish_non_exhaustive()
    }
}

impl Default for Store {
    fn default() -> Self {
        Store::in_memory(Arc::new(SystemClock))
    }
}

impl Store {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Store {
            state: RwLock::new(StoreState::default()),
            clock,
            dir: None,
        }
    }

    /// Opens (or creates) a store backed by `dir`.
    pub fn open(dir: impl AsRef<Path>, clock: Arc<dyn Clock>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let state = persist::load_dir(&dir)?;
        Ok(Store {
            state: RwLock::new(state),
            clock,
            dir: Some(dir),
        })
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn read(&self) -> RwLockReadGuard<'_, StoreState> {
        self.state.read()
    }

    /// Runs `f` under the write lock. Each mutating `StoreState` method
    /// validates before touching anything, so an error leaves state as it was.
    pub fn write<R>(&self, f: impl FnOnce(&mut StoreState, DateTime<Utc>) -> Result<R>) -> Result<R> {
        let mut state = self.state.write();
        let now = self.clock.now();
        let out = f(&mut state, now);
        let dirty = state.take_dirty();
        if let Some(dir) = &self.dir {
            if !dirty.is_empty() {
                persist::save_collections(dir, &state, &dirty)?;
            }
        }
        out
    }

    pub fn register_visfunction(&self, record: VisFunctionRecord) -> Result<String> {
        self.write(|s, now| s.register_visfunction(record, now))
    }

    pub fn register_stream(&self, draft: StreamDraft) -> Result<String> {
        self.write(|s, now| s.register_stream(draft, now))
    }

    pub fn create_page(&self, vf_id: &str, bindings: Vec<Vec<String>>) -> Result<PageRecord> {
        self.write(|s, now| s.create_page(vf_id, bindings, CreatedBy::Manual, now))
    }

    pub fn delete(&self, entity: Entity, id: &str) -> Result<()> {
        self.write(|s, now| s.delete(entity, id, now))
    }

    pub fn get_series(&self, stream_id: &str, version: Option<u64>) -> Result<(tsvis_analytics::TimeSeries, u64)> {
        let state = self.read();
        let (content, v) = state.content(stream_id, version)?;
        match content {
            StreamContent::Timeseries(series) => Ok((series.clone(), v)),
            other => Err(Error::SlotMismatch(format!(
                "stream {stream_id} holds {}, not a time series",
                other.kind()
            ))),
        }
    }

    /// Writes every collection to `dir` (used for backups of in-memory stores).
    pub fn save_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        std::fs::create_dir_all(dir.as_ref())?;
        persist::save_collections(dir.as_ref(), &self.read(), &Collection::ALL.into_iter().collect())
    }

    pub fn export_snapshot(&self, out: &mut impl std::io::Write) -> Result<()> {
        persist::export_snapshot(&self.read(), out)
    }

    /// Replaces the whole state with a snapshot. The snapshot must pass the
    /// integrity scan.
    pub fn import_snapshot(&self, input: impl std::io::BufRead) -> Result<()> {
        let fresh = persist::import_snapshot(input)?;
        fresh.check_integrity()?;
        let mut state = self.state.write();
        *state = fresh;
        if let Some(dir) = &self.dir {
            persist::save_collections(dir, &state, &Collection::ALL.into_iter().collect())?;
        }
        state.take_dirty();
        Ok(())
    }
}
