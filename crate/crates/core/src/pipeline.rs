use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::Serialize;

use crate::agents::{run_indexing_agent, AgentRunRecord, Scheduler, ThumbnailAgent, ThumbnailRun};
use crate::error::Result;
use crate::ingest::{Downloader, PollReport};
use crate::ontology::Store;
use crate::search::{SearchHit, SearchIndex, SearchQuery};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TickReport {
    pub polls: Vec<PollReport>,
    pub runs: Vec<AgentRunRecord>,
    pub thumbnails: ThumbnailRun,
    pub index_seq: u64,
}

/// The store plus every background agent. One tick polls due sources, runs
/// due analytical agents, re-renders stale thumbnails and catches the search
/// index up with the change log, in that order.
pub struct Engine {
    pub store: Arc<Store>,
    pub downloader: Downloader,
    pub scheduler: Scheduler,
    pub thumbnails: ThumbnailAgent,
    index: RwLock<SearchIndex>,
    tick_lock: Mutex<()>,
}

impl Engine {
    pub fn new(store: Arc<Store>, downloader: Downloader, scheduler: Scheduler, thumbnails: ThumbnailAgent) -> Self {
        let index = SearchIndex::build(&store.read());
        Engine {
            store,
            downloader,
            scheduler,
            thumbnails,
            index: RwLock::new(index),
            tick_lock: Mutex::new(()),
        }
    }

    /// A scheduled tick; only sources and agents whose interval elapsed run.
    pub fn tick(&self) -> Result<TickReport> {
        self.tick_with(false)
    }

    /// Polls every source and runs every agent regardless of schedule.
    pub fn tick_all(&self) -> Result<TickReport> {
        self.tick_with(true)
    }

    fn tick_with(&self, everything: bool) -> Result<TickReport> {
        let _guard = self.tick_lock.lock();
        let now = self.store.now();
        let polls = if everything {
            self.downloader.poll_all(&self.store, now)
        } else {
            self.downloader.poll_due(&self.store, now)
        };
        let runs = if everything {
            self.scheduler.run_all(&self.store, now)
        } else {
            self.scheduler.run_due_agents(&self.store, now)
        };
        let thumbnails = self.thumbnails.run(&self.store)?;
        let index_seq = self.reindex()?;
        Ok(TickReport {
            polls,
            runs,
            thumbnails,
            index_seq,
        })
    }

    /// Runs the indexing agent from the index's checkpoint.
    pub fn reindex(&self) -> Result<u64> {
        let mut index = self.index.write();
        let since = index.checkpoint();
        run_indexing_agent(&self.store, &mut index, since)
    }

    pub fn search(&self, query: &SearchQuery) -> Vec<SearchHit> {
        self.index.read().search(query)
    }

    pub fn index_snapshot(&self) -> SearchIndex {
        self.index.read().clone()
    }
}
