//! Self-contained render payloads for pages.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tsvis_analytics::{align_pair, lag_register, LagResult};

use crate::error::{Error, Result};
use crate::ontology::{CreatedBy, DataKind, Descriptor, PageRecord, PlotType, Store, StoreState, StreamContent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PageSummary {
    pub id: String,
    pub url_slug: String,
    pub title: String,
    pub plot_type: PlotType,
    pub vis_function_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail_ref: Option<String>,
    pub created_by: CreatedBy,
    pub updated_at: DateTime<Utc>,
}

impl PageSummary {
    pub fn of(state: &StoreState, page: &PageRecord) -> PageSummary {
        PageSummary {
            id: page.id.clone(),
            url_slug: page.url_slug.clone(),
            title: page.title.clone(),
            plot_type: state
                .visfunction(&page.vis_function_id)
                .map_or(PlotType::Dashboard, |v| v.plot_type),
            vis_function_id: page.vis_function_id.clone(),
            thumbnail_ref: page.thumbnail_ref.clone(),
            created_by: page.created_by,
            updated_at: page.updated_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StreamData {
    pub id: String,
    pub kind: DataKind,
    pub version: u64,
    pub descriptor: Descriptor,
    /// The stream's content; `null` before its first successful fetch.
    pub data: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlotOptions {
    /// Best lag between the two series of a time-lag page.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<LagResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlotPayload {
    pub page: PageSummary,
    pub plot_type: PlotType,
    /// One entry per slot, in signature order.
    pub slots: Vec<Vec<StreamData>>,
    /// Clickable links of a dashboard; empty for other plot types.
    pub children: Vec<PageSummary>,
    pub options: PlotOptions,
}

/// Largest lag tested for time-lag pages: a quarter of the overlap, leaving
/// at least 3 samples at every shift.
pub fn default_max_lag(len: usize) -> usize {
    (len / 4).max(1).min(len.saturating_sub(3))
}

fn timelag_option(state: &StoreState, page: &PageRecord) -> Option<LagResult> {
    let ids: Vec<&String> = page.stream_ids().collect();
    let [a, b] = ids[..] else { return None };
    let series = |id: &str| match state.content(id, None) {
        Ok((StreamContent::Timeseries(s), _)) => Some(s),
        _ => None,
    };
    let (x, y) = align_pair(series(a)?, series(b)?).ok()?;
    let max_lag = default_max_lag(x.len());
    if max_lag == 0 {
        return None;
    }
    lag_register(&x, &y, max_lag).ok()
}

/// Builds the payload of a page under one read lock, so every version stamp
/// in it reflects the same store state.
pub fn plot_payload(store: &Store, url_slug: &str) -> Result<PlotPayload> {
    let state = store.read();
    let page = state
        .page_by_slug(url_slug)
        .ok_or_else(|| Error::NotFound(format!("page {url_slug}")))?;
    let summary = PageSummary::of(&state, page);
    let slots = page
        .bindings
        .iter()
        .map(|ids| {
            ids.iter()
                .map(|id| {
                    let stream = state
                        .stream(id)
                        .ok_or_else(|| Error::UnresolvedReference(format!("stream {id}")))?;
                    Ok(StreamData {
                        id: id.clone(),
                        kind: stream.kind,
                        version: stream.version,
                        descriptor: stream.descriptor.clone(),
                        data: state
                            .stored_content(id)
                            .map_or(Value::Null, |c| c.content.to_json()),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let children = if summary.plot_type == PlotType::Dashboard {
        let mut links: Vec<PageSummary> = state
            .pages()
            .filter(|p| p.id != page.id && p.stream_ids().any(|s| page.binds(s)))
            .map(|p| PageSummary::of(&state, p))
            .filter(|p| p.plot_type != PlotType::Dashboard)
            .collect();
        links.sort_by(|a, b| a.url_slug.cmp(&b.url_slug));
        links
    } else {
        Vec::new()
    };
    let options = PlotOptions {
        lag: (summary.plot_type == PlotType::Timelag)
            .then(|| timelag_option(&state, page))
            .flatten(),
    };
    Ok(PlotPayload {
        plot_type: summary.plot_type,
        page: summary,
        slots,
        children,
        options,
    })
}
