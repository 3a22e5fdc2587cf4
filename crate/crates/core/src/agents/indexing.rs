use std::collections::BTreeSet;

use crate::error::Result;
use crate::ontology::{describe_page, Entity, Store};
use crate::search::SearchIndex;

/// Catches the index up with the change log from `since_seq`: regenerates the
/// descriptions of every touched page (and of pages bound to touched streams),
/// then refreshes their index entries. Returns the new checkpoint.
pub fn run_indexing_agent(store: &Store, index: &mut SearchIndex, since_seq: u64) -> Result<u64> {
    store.write(|state, now| {
        let since = since_seq.min(state.head_seq());
        let mut pages = BTreeSet::new();
        let mut streams = BTreeSet::new();
        for entry in state.entries_since(since) {
            match entry.entity {
                Entity::Page => {
                    pages.insert(entry.entity_id.clone());
                }
                Entity::Stream => {
                    streams.insert(entry.entity_id.clone());
                }
                Entity::Visfunction => {}
            }
        }
        for stream in &streams {
            pages.extend(state.pages_binding(stream).map(|p| p.id.clone()));
        }
        for id in &pages {
            let Some(page) = state.page(id) else { continue };
            let Some(vf) = state.visfunction(&page.vis_function_id) else { continue };
            let bound: Vec<_> = page.stream_ids().filter_map(|s| state.stream(s)).collect();
            let text = describe_page(vf, &bound);
            state.set_description(id, text, now)?;
        }
        // description rewrites above are logged; they are covered by this pass
        for id in &pages {
            index.refresh_page(state, id);
        }
        for id in &streams {
            index.refresh_stream(state, id);
        }
        let head = state.head_seq();
        index.set_checkpoint(head);
        Ok(head)
    })
}
