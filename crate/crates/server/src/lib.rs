//! HTTP gateway over the registry: public reads, per-user bookmarks and
//! admin-only registration and propagation, plus the background tick.

pub mod api;
pub mod auth;
pub mod config;
pub mod error;
pub mod fetch;
pub mod service;

pub use api::{router, AppState};
pub use config::Config;
