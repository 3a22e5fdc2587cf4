//! Wiring: builds the engine and auth service from a config and runs the
//! HTTP server alongside the background tick.

use std::sync::Arc;
use std::time::Duration;

use tsvis_core::agents::{Scheduler, ThumbnailAgent};
use tsvis_core::ingest::{Downloader, FileFetcher};
use tsvis_core::ontology::Store;
use tsvis_core::pipeline::Engine;
use tsvis_core::Clock;

use crate::api::{router, AppState};
use crate::auth::Auth;
use crate::config::Config;
use crate::fetch::SourceFetcher;

const FETCH_TIMEOUT: Duration = Duration::from_secs(30);

pub fn build_engine(config: &Config, clock: Arc<dyn Clock>) -> anyhow::Result<Engine> {
    let store = Arc::new(Store::open(&config.data_dir, clock)?);
    let fetcher = SourceFetcher::new(
        FileFetcher {
            root: config.source_root.clone(),
        },
        FETCH_TIMEOUT,
    );
    let downloader = Downloader::new(config.sources.clone(), Arc::new(fetcher))?;
    let scheduler = Scheduler::new(config.agents.clone())?;
    let thumbnails = ThumbnailAgent::new(&config.thumbnail_dir)?;
    Ok(Engine::new(store, downloader, scheduler, thumbnails))
}

pub fn build_state(config: &Config, clock: Arc<dyn Clock>) -> anyhow::Result<AppState> {
    let engine = build_engine(config, clock.clone())?;
    let ttl = chrono::Duration::seconds(i64::try_from(config.session_ttl_secs)?);
    let auth = Auth::new(config.users.clone(), ttl, clock)?;
    Ok(AppState {
        engine: Arc::new(engine),
        auth: Arc::new(auth),
    })
}

/// Ticks the engine every `period` on a blocking thread; a tick still
/// running when the next is due is not doubled up.
pub fn spawn_ticker(state: AppState, period: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
        loop {
            interval.tick().await;
            let engine = state.engine.clone();
            match tokio::task::spawn_blocking(move || engine.tick()).await {
                Ok(Ok(report)) => tracing::debug!(
                    polls = report.polls.len(),
                    runs = report.runs.len(),
                    thumbnails = report.thumbnails.updated.len(),
                    index_seq = report.index_seq,
                    "tick"
                ),
                Ok(Err(e)) => tracing::error!(error = %e, "tick failed"),
                Err(e) => tracing::error!(error = %e, "tick panicked"),
            }
            state.auth.purge_expired();
        }
    })
}

pub async fn serve(config: Config, clock: Arc<dyn Clock>) -> anyhow::Result<()> {
    let state = build_state(&config, clock)?;
    let ticker = spawn_ticker(state.clone(), Duration::from_secs(config.tick_secs));
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    ticker.abort();
    Ok(())
}
