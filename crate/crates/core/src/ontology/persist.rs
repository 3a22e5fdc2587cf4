//! Line-delimited JSON persistence: one `{collection}.jsonl` file per
//! collection, and a single-stream snapshot format for export/import.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::store::StoreState;
use super::types::{Bookmark, ChangeLogEntry, DataStreamRecord, PageRecord, StoredContent, VisFunctionRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Collection {
    Visfunctions,
    Streams,
    Pages,
    Content,
    Bookmarks,
    Changelog,
}

impl Collection {
    pub const ALL: [Collection; 6] = [
        Collection::Visfunctions,
        Collection::Streams,
        Collection::Pages,
        Collection::Content,
        Collection::Bookmarks,
        Collection::Changelog,
    ];

    pub fn file_name(&self) -> &'static str {
        match self {
            Collection::Visfunctions => "visfunctions.jsonl",
            Collection::Streams => "streams.jsonl",
            Collection::Pages => "pages.jsonl",
            Collection::Content => "content.jsonl",
            Collection::Bookmarks => "bookmarks.jsonl",
            Collection::Changelog => "changelog.jsonl",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ContentRow {
    stream_id: String,
    #[serde(flatten)]
    stored: StoredContent,
}

#[derive(Serialize, Deserialize)]
struct SnapshotLine {
    collection: Collection,
    record: Value,
}

fn rows(state: &StoreState, collection: Collection) -> Result<Vec<Value>> {
    fn all<T: Serialize>(items: impl Iterator<Item = T>) -> Result<Vec<Value>> {
        items.map(|r| serde_json::to_value(r).map_err(Error::from)).collect()
    }
    match collection {
        Collection::Visfunctions => all(state.visfunctions.values()),
        Collection::Streams => all(state.streams.values()),
        Collection::Pages => all(state.pages.values()),
        Collection::Content => all(state.content.iter().map(|(id, stored)| ContentRow {
            stream_id: id.clone(),
            stored: stored.clone(),
        })),
        Collection::Bookmarks => all(state.bookmarks.values().flat_map(|m| m.values())),
        Collection::Changelog => all(state.changelog.iter()),
    }
}

fn insert(state: &mut StoreState, collection: Collection, record: Value) -> Result<()> {
    fn parse<T: DeserializeOwned>(v: Value) -> Result<T> {
        Ok(serde_json::from_value(v)?)
    }
    let duplicate = |id: &str| Err(Error::DuplicateId(id.to_string()));
    match collection {
        Collection::Visfunctions => {
            let r: VisFunctionRecord = parse(record)?;
            r.validate()?;
            if let Some(old) = state.visfunctions.insert(r.id.clone(), r) {
                return duplicate(&old.id);
            }
        }
        Collection::Streams => {
            let r: DataStreamRecord = parse(record)?;
            if let Some(old) = state.streams.insert(r.id.clone(), r) {
                return duplicate(&old.id);
            }
        }
        Collection::Pages => {
            let r: PageRecord = parse(record)?;
            if let Some(old) = state.pages.insert(r.id.clone(), r) {
                return duplicate(&old.id);
            }
        }
        Collection::Content => {
            let r: ContentRow = parse(record)?;
            if state.content.insert(r.stream_id.clone(), r.stored).is_some() {
                return duplicate(&r.stream_id);
            }
        }
        Collection::Bookmarks => {
            let r: Bookmark = parse(record)?;
            state
                .bookmarks
                .entry(r.username.clone())
                .or_default()
                .insert(r.page_id.clone(), r);
        }
        Collection::Changelog => {
            let r: ChangeLogEntry = parse(record)?;
            state.changelog.push(r);
        }
    }
    Ok(())
}

fn write_atomic(path: &Path, lines: &[Value]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
        for line in lines {
            serde_json::to_writer(&mut out, line)?;
            out.write_all(b"\n")?;
        }
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) fn save_collections(dir: &Path, state: &StoreState, which: &BTreeSet<Collection>) -> Result<()> {
    for &collection in which {
        write_atomic(&dir.join(collection.file_name()), &rows(state, collection)?)?;
    }
    Ok(())
}

fn read_lines(input: impl BufRead, mut each: impl FnMut(usize, &str) -> Result<()>) -> Result<()> {
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        each(i + 1, &line)?;
    }
    Ok(())
}

fn annotate(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Serde(inner) => Error::ParseFailure {
            line,
            message: inner.to_string(),
        },
        other => other,
    }
}

pub(crate) fn load_dir(dir: &Path) -> Result<StoreState> {
    let mut state = StoreState::default();
    for collection in Collection::ALL {
        let path = dir.join(collection.file_name());
        if !path.exists() {
            continue;
        }
        let file = BufReader::new(fs::File::open(&path)?);
        read_lines(file, |n, line| {
            let value: Value = serde_json::from_str(line).map_err(|e| annotate(n)(e.into()))?;
            insert(&mut state, collection, value).map_err(annotate(n))
        })?;
    }
    state.rebuild_indexes();
    state.check_integrity()?;
    Ok(state)
}

pub(crate) fn export_snapshot(state: &StoreState, out: &mut impl Write) -> Result<()> {
    for collection in Collection::ALL {
        for record in rows(state, collection)? {
            serde_json::to_writer(&mut *out, &SnapshotLine { collection, record })?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub(crate) fn import_snapshot(input: impl BufRead) -> Result<StoreState> {
    let mut state = StoreState::default();
    read_lines(input, |n, line| {
        let parsed: SnapshotLine = serde_json::from_str(line).map_err(|e| annotate(n)(e.into()))?;
        insert(&mut state, parsed.collection, parsed.record).map_err(annotate(n))
    })?;
    state.rebuild_indexes();
    Ok(state)
}
