use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tsvis_analytics::Execution;

use crate::error::{Error, Result};
use crate::ontology::{Store, StreamContent};

pub const WIDTH: f64 = 200.0;
pub const HEIGHT: f64 = 120.0;
const PAD: f64 = 4.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];
const RENDERED_FILE: &str = "rendered.json";

fn open_svg() -> String {
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}"><rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    )
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn scale(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi > lo {
        out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
    } else {
        (out_lo + out_hi) / 2.0
    }
}

/// Blue (low) through white to red (high).
fn diverging(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 1.0 };
    let (r, g, b) = if t < 0.5 {
        let k = t * 2.0;
        (k, k, 1.0)
    } else {
        let k = (1.0 - t) * 2.0;
        (1.0, k, k)
    };
    let byte = |c: f64| (c * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", byte(r), byte(g), byte(b))
}

fn lines(svg: &mut String, series: &[&tsvis_analytics::TimeSeries]) {
    let Some((t0, t1)) = finite_range(series.iter().flat_map(|s| s.timestamps.iter().map(|&t| t as f64))) else {
        return;
    };
    let Some((v0, v1)) = finite_range(series.iter().flat_map(|s| s.values.iter().copied())) else {
        return;
    };
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .timestamps
            .iter()
            .zip(&s.values)
            .map(|(&t, &v)| {
                let x = scale(t as f64, t0, t1, PAD, WIDTH - PAD);
                let y = scale(v, v0, v1, HEIGHT - PAD, PAD);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = write!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[k % PALETTE.len()],
            points.join(" ")
        );
    }
}

fn grid(svg: &mut String, values: &[Vec<f64>]) {
    let n = values.len();
    if n == 0 {
        return;
    }
    let (lo, hi) = finite_range(values.iter().flatten().copied()).unwrap_or((0.0, 1.0));
    let side = (HEIGHT - 2.0 * PAD) / n as f64;
    let x0 = (WIDTH - side * n as f64) / 2.0;
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let _ = write!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{side:.2}" height="{side:.2}" fill="{}"/>"#,
                x0 + j as f64 * side,
                PAD + i as f64 * side,
                diverging(scale(*v, lo, hi, 0.0, 1.0))
            );
        }
    }
}

fn dots(svg: &mut String, coords: &[[f64; 2]]) {
    let (x0, x1) = finite_range(coords.iter().map(|c| c[0])).unwrap_or((0.0, 1.0));
    let (y0, y1) = finite_range(coords.iter().map(|c| c[1])).unwrap_or((0.0, 1.0));
    for (k, c) in coords.iter().enumerate() {
        let _ = write!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
            scale(c[0], x0, x1, 2.0 * PAD, WIDTH - 2.0 * PAD),
            scale(c[1], y0, y1, HEIGHT - 2.0 * PAD, 2.0 * PAD),
            PALETTE[k % PALETTE.len()]
        );
    }
}

fn bars(svg: &mut String, heights: &[f64]) {
    if heights.is_empty() {
        return;
    }
    let top = heights.iter().map(|h| h.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let w = (WIDTH - 2.0 * PAD) / heights.len() as f64;
    let mid = HEIGHT / 2.0;
    for (k, h) in heights.iter().enumerate() {
        let len = h.abs() / top * (mid - PAD);
        let y = if *h >= 0.0 { mid - len } else { mid };
        let _ = write!(
            svg,
            r#"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{len:.2}" fill="{}"/>"#,
            PAD + k as f64 * w,
            (w - 1.0).max(0.5),
            PALETTE[k % PALETTE.len()]
        );
    }
}

/// Miniature, text-free SVG of a page's data: polylines for series, a colour
/// grid for matrices, dots for projections, bars for lag tables and scalars.
/// Pages that mix kinds are drawn from the first non-series content.
pub fn render_svg(contents: &[&StreamContent]) -> Result<String> {
    if contents.is_empty() {
        return Err(Error::InvalidRecord("page has no content to draw".into()));
    }
    let mut svg = open_svg();
    let series: Vec<_> = contents
        .iter()
        .filter_map(|c| match c {
            StreamContent::Timeseries(s) => Some(s),
            _ => None,
        })
        .collect();
    match contents.iter().find(|c| !matches!(c, StreamContent::Timeseries(_))) {
        None => lines(&mut svg, &series),
        Some(StreamContent::Matrix(m)) => grid(&mut svg, &m.values),
        Some(StreamContent::Projection(p)) => dots(&mut svg, &p.coords),
        Some(StreamContent::Lagtable(t)) => bars(&mut svg, &t.pairs.iter().map(|p| p.lag as f64).collect::<Vec<_>>()),
        Some(StreamContent::Scalar(v)) => bars(&mut svg, &[*v]),
        Some(StreamContent::Table(_)) => {
            let _ = write!(svg, r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#7f7f7f"/>"##, WIDTH - 2.0 * PAD, HEIGHT - 2.0 * PAD);
        }
        Some(StreamContent::Timeseries(_)) => unreachable!(),
    }
    svg.push_str("</svg>");
    Ok(svg)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThumbnailRun {
    pub updated: Vec<String>,
    pub failed: BTreeMap<String, String>,
}

type Versions = BTreeMap<String, u64>;

/// Renders `{dir}/{pageId}.svg` for pages whose bound stream versions changed
/// since their last render. The record of rendered versions is kept next to
/// the images so restarts do not re-render everything.
pub struct ThumbnailAgent {
    dir: PathBuf,
    rendered: Mutex<BTreeMap<String, Versions>>,
    exec: Execution,
}

impl ThumbnailAgent {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let record = dir.join(RENDERED_FILE);
        let rendered = if record.exists() {
            serde_json::from_slice(&std::fs::read(&record)?)?
        } else {
            BTreeMap::new()
        };
        Ok(ThumbnailAgent {
            dir,
            rendered: Mutex::new(rendered),
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, page_id: &str) -> PathBuf {
        self.dir.join(format!("{page_id}.svg"))
    }

    pub fn run(&self, store: &Store) -> Result<ThumbnailRun> {
        let mut rendered = self.rendered.lock();
        // (page id, versions, drawing) for stale pages, under one read lock
        let jobs: Vec<(String, Versions, Result<String>)> = {
            let state = store.read();
            rendered.retain(|id, _| state.page(id).is_some());
            let stale: Vec<(String, Versions)> = state
                .pages()
                .filter_map(|page| {
                    let versions: Versions = page
                        .stream_ids()
                        .map(|id| (id.clone(), state.stream(id).map_or(0, |s| s.version)))
                        .collect();
                    (rendered.get(&page.id) != Some(&versions)).then(|| (page.id.clone(), versions))
                })
                .collect();
            let state = &*state;
            self.exec.map(&stale, |(id, versions)| {
                let page = state.page(id).expect("page present under lock");
                let drawing = page
                    .stream_ids()
                    .map(|s| state.content(s, None).map(|(c, _)| c))
                    .collect::<Result<Vec<_>>>()
                    .and_then(|contents| render_svg(&contents));
                (id.clone(), versions.clone(), drawing)
            })
        };
        let mut run = ThumbnailRun::default();
        for (id, versions, drawing) in jobs {
            let written = drawing.and_then(|svg| {
                std::fs::write(self.path_for(&id), svg)?;
                store.write(|state, now| state.set_thumbnail(&id, format!("{id}.svg"), now))
            });
            match written {
                Ok(_) => {
                    rendered.insert(id.clone(), versions);
                    run.updated.push(id);
                }
                Err(e) => {
                    tracing::warn!(page = %id, error = %e, "thumbnail render failed");
                    run.failed.insert(id, e.to_string());
                }
            }
        }
        std::fs::write(self.dir.join(RENDERED_FILE), serde_json::to_vec(&*rendered)?)?;
        Ok(run)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tsvis_analytics::{pairwise_matrix, Measure, MetricId, TimeSeries};

    #[test]
    fn svg_is_deterministic_and_text_free() {
        let a = TimeSeries::from_values("a", vec![1.0, 3.0, 2.0]).unwrap();
        let b = TimeSeries::from_values("b", vec![2.0, 1.0, 0.0]).unwrap();
        let c1 = StreamContent::Timeseries(a.clone());
        let c2 = StreamContent::Timeseries(b.clone());
        let svg = render_svg(&[&c1, &c2]).unwrap();
        assert_eq!(svg, render_svg(&[&c1, &c2]).unwrap());
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(!svg.contains("<text"));

        let m = StreamContent::Matrix(pairwise_matrix(&[a, b], Measure::Metric(MetricId::Mse)).unwrap());
        let grid = render_svg(&[&m]).unwrap();
        assert_eq!(grid.matches("<rect").count(), 1 + 4);
        assert!(render_svg(&[]).is_err());
    }
}
