#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::{to_bytes, Body, Bytes};
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration};
use serde_json::Value;
use tower::ServiceExt;
use tsvis_core::agents::AnalyticalAgentSpec;
use tsvis_core::ingest::{SourceConfig, SourceFormat};
use tsvis_core::ManualClock;
use tsvis_server::auth::{PasswordHash, Role, UserAccount};
use tsvis_server::service::build_state;
use tsvis_server::{router, AppState, Config};

pub const ADMIN: (&str, &str) = ("root", "correct horse");
pub const ORDINARY: (&str, &str) = ("ann", "battery staple");
pub const TTL_SECS: u64 = 1800;

pub struct Harness {
    pub clock: Arc<ManualClock>,
    pub state: AppState,
    pub app: Router,
    pub sources: tempfile::TempDir,
    pub data: tempfile::TempDir,
    pub thumbs: tempfile::TempDir,
}

pub fn users() -> Vec<UserAccount> {
    vec![
        UserAccount {
            username: ADMIN.0.into(),
            password_hash: PasswordHash::new(ADMIN.1, 2000),
            role: Role::Admin,
        },
        UserAccount {
            username: ORDINARY.0.into(),
            password_hash: PasswordHash::new(ORDINARY.1, 2000),
            role: Role::Ordinary,
        },
    ]
}

pub fn csv_source(id: &str, interval: u64) -> SourceConfig {
    SourceConfig {
        stream_id: id.into(),
        location: format!("{id}.csv"),
        format: SourceFormat::Csv,
        poll_interval_secs: interval,
    }
}

pub fn write_csv(dir: &Path, id: &str, values: &[f64]) {
    let mut text = String::from("date,value\n");
    let start = chrono::NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
    for (d, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{v}\n", start + chrono::Days::new(d as u64)));
    }
    std::fs::write(dir.join(format!("{id}.csv")), text).unwrap();
}

/// A server over fresh temp directories. `prepare` may write source files
/// before the engine is built.
pub fn harness_with(
    sources: Vec<SourceConfig>,
    agents: Vec<AnalyticalAgentSpec>,
    prepare: impl FnOnce(&Path),
) -> Harness {
    let clock = Arc::new(ManualClock::new(DateTime::from_timestamp(1_600_000_000, 0).unwrap()));
    let source_dir = tempfile::tempdir().unwrap();
    let data = tempfile::tempdir().unwrap();
    let thumbs = tempfile::tempdir().unwrap();
    prepare(source_dir.path());
    let config = Config {
        listen: "127.0.0.1:0".parse().unwrap(),
        data_dir: data.path().into(),
        thumbnail_dir: thumbs.path().into(),
        source_root: Some(source_dir.path().into()),
        session_ttl_secs: TTL_SECS,
        tick_secs: 60,
        users: users(),
        sources,
        agents,
    };
    let state = build_state(&config, clock.clone()).unwrap();
    Harness {
        clock,
        app: router(state.clone()),
        state,
        sources: source_dir,
        data,
        thumbs,
    }
}

pub fn harness() -> Harness {
    harness_with(Vec::new(), Vec::new(), |_| {})
}

impl Harness {
    pub fn advance(&self, secs: i64) {
        self.clock.advance(Duration::seconds(secs));
    }

    pub async fn call(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        call(&self.app, method, uri, token, body).await
    }

    pub async fn login(&self, who: (&str, &str)) -> String {
        let r = self
            .call("POST", "/api/auth/login", None, Some(serde_json::json!({"username": who.0, "password": who.1})))
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text());
        r.json()["token"].as_str().unwrap().to_string()
    }
}

#[derive(Debug)]
pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Bytes,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.text()))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&v).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    Reply { status, headers, body }
}
