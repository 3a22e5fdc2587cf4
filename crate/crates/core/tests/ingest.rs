mod common;

use std::sync::Arc;

use proptest::prelude::*;
use tsvis_core::ingest::{
    parse_csv_series, poll_source, Downloader, FileFetcher, PollOutcome, SourceConfig, SourceFormat,
};
use tsvis_core::Error;

use common::*;

fn csv(days: usize) -> String {
    let mut text = String::from("date,value\n");
    for d in 0..days {
        text.push_str(&format!("2020-05-{:02},{}\n", d + 1, d * 3));
    }
    text
}

fn config(dir: &std::path::Path, id: &str) -> SourceConfig {
    SourceConfig {
        stream_id: id.into(),
        location: dir.join(format!("{id}.csv")).display().to_string(),
        format: SourceFormat::Csv,
        poll_interval_secs: 60,
    }
}

#[test]
fn poll_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let store = store();
    store.register_stream(series_draft("gla", "glasgow", "cases")).unwrap();
    let cfg = config(dir.path(), "gla");
    let fetcher = FileFetcher::default();

    assert!(matches!(poll_source(&store, &fetcher, &cfg), Err(Error::FetchFailure(_))));
    assert_eq!(store.read().stream("gla").unwrap().version, 1);

    std::fs::write(dir.path().join("gla.csv"), csv(5)).unwrap();
    assert_eq!(poll_source(&store, &fetcher, &cfg).unwrap(), PollOutcome::Updated { version: 2 });
    assert_eq!(poll_source(&store, &fetcher, &cfg).unwrap(), PollOutcome::Unchanged);
    assert_eq!(store.get_series("gla", None).unwrap().1, 2);

    // one appended day
    std::fs::write(dir.path().join("gla.csv"), csv(6)).unwrap();
    assert_eq!(poll_source(&store, &fetcher, &cfg).unwrap(), PollOutcome::Updated { version: 3 });
    assert_eq!(store.get_series("gla", None).unwrap().0.len(), 6);

    // duplicate date: rejected, previous version still served
    std::fs::write(dir.path().join("gla.csv"), format!("{}2020-05-01,9\n", csv(6))).unwrap();
    assert!(matches!(poll_source(&store, &fetcher, &cfg), Err(Error::ParseFailure { line: 8, .. })));
    let (series, version) = store.get_series("gla", None).unwrap();
    assert_eq!((series.len(), version), (6, 3));

    let unknown = SourceConfig { stream_id: "nope".into(), ..cfg };
    assert!(matches!(poll_source(&store, &fetcher, &unknown), Err(Error::NotFound(_))));
}

#[test]
fn downloader_schedules_and_records_errors() {
    let dir = tempfile::tempdir().unwrap();
    let clock = clock();
    let store = store_with(&clock);
    for id in ["a", "b"] {
        store.register_stream(series_draft(id, id, "cases")).unwrap();
    }
    std::fs::write(dir.path().join("a.csv"), csv(4)).unwrap();
    let downloader = Downloader::new(
        vec![config(dir.path(), "a"), config(dir.path(), "b")],
        Arc::new(FileFetcher::default()),
    )
    .unwrap();
    let first = downloader.poll_due(&store, store.now());
    assert_eq!(first.len(), 2);
    assert!(downloader.errors().contains_key("b"));
    assert!(!downloader.errors().contains_key("a"));
    // interval not elapsed
    tick(&clock, 30);
    assert!(downloader.poll_due(&store, store.now()).is_empty());
    tick(&clock, 30);
    std::fs::write(dir.path().join("b.csv"), csv(4)).unwrap();
    let second = downloader.poll_due(&store, store.now());
    assert_eq!(second.len(), 2);
    assert!(downloader.errors().is_empty());
    assert_eq!(store.read().stream("b").unwrap().version, 2);

    let zero = SourceConfig { poll_interval_secs: 0, ..config(dir.path(), "a") };
    assert!(Downloader::new(vec![zero], Arc::new(FileFetcher::default())).is_err());
}

fn csv_line() -> impl Strategy<Value = String> {
    prop_oneof![
        (2019i32..2022, 1u32..13, 1u32..29, -1e6f64..1e6).prop_map(|(y, m, d, v)| format!("{y}-{m:02}-{d:02},{v}")),
        Just("2020-02-30,1".to_string()),
        Just("2020-05-01,".to_string()),
        Just("2020-05-01,inf".to_string()),
        Just("2020-05-01,NaN".to_string()),
        Just("2020-05-01".to_string()),
        Just("not-a-date,4".to_string()),
        Just("\"2020-05-01\",5".to_string()),
        Just("2020-05-01,1,2".to_string()),
        "[ -~]{0,20}",
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// Whatever the input, the parser either fails or yields a valid series.
    #[test]
    fn no_invalid_series_escapes_the_parser(
        header in prop_oneof![Just("date,value".to_string()), "[a-z,]{0,12}"],
        lines in prop::collection::vec(csv_line(), 0..20),
    ) {
        let text = format!("{header}\n{}", lines.join("\n"));
        if let Ok(series) = parse_csv_series("s", &text) {
            prop_assert!(series.validate().is_ok());
            prop_assert!(series.timestamps.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(series.values.iter().all(|v| v.is_finite()));
            prop_assert!(!series.is_empty());
        }
    }

    #[test]
    fn row_order_does_not_matter(days in prop::collection::btree_set(1u32..29, 1..20), seed in any::<u64>()) {
        let rows: Vec<String> = days.iter().map(|d| format!("2020-05-{d:02},{d}")).collect();
        let sorted = parse_csv_series("s", &format!("date,value\n{}", rows.join("\n"))).unwrap();
        let mut shuffled = rows.clone();
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let parsed = parse_csv_series("s", &format!("date,value\n{}", shuffled.join("\n"))).unwrap();
        prop_assert_eq!(parsed, sorted);
    }

    /// Versions never decrease, and a poll is a no-op exactly when the bytes
    /// are unchanged.
    #[test]
    fn polls_version_monotonically(payloads in prop::collection::vec(1usize..6, 1..10)) {
        let dir = tempfile::tempdir().unwrap();
        let store = store();
        store.register_stream(series_draft("s", "r", "cases")).unwrap();
        let cfg = config(dir.path(), "s");
        let fetcher = FileFetcher::default();
        let mut last_bytes: Option<String> = None;
        let mut last_version = 1;
        for days in payloads {
            let text = csv(days);
            std::fs::write(dir.path().join("s.csv"), &text).unwrap();
            let outcome = poll_source(&store, &fetcher, &cfg).unwrap();
            let version = store.read().stream("s").unwrap().version;
            prop_assert!(version >= last_version);
            prop_assert_eq!(outcome == PollOutcome::Unchanged, last_bytes.as_deref() == Some(text.as_str()));
            last_version = version;
            last_bytes = Some(text);
        }
    }
}
