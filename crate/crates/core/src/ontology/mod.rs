//! The registry: visualisation functions, data streams, pages, stream
//! content and bookmarks, plus the change log every mutation appends to.

mod persist;
mod store;
mod types;

pub use persist::Collection;
pub use store::{check_distinct, check_slot, content_hash, describe_page, DerivedOutput, Store, StoreState};
pub use types::*;
