//! Registry, ingestion, background agents, search and propagation for the
//! time-series visualisation service.
//!
//! The [`ontology::Store`] holds every record behind one reader/writer lock
//! and appends to a change log on each mutation. Agents read from and write to
//! it; [`pipeline::Engine`] runs them on a tick.

pub mod agents;
pub mod clock;
pub mod error;
pub mod filter;
pub mod ingest;
pub mod ontology;
pub mod payload;
pub mod pipeline;
pub mod propagation;
pub mod search;

pub use clock::{Clock, ManualClock, SystemClock};
pub use error::{Error, Result};
