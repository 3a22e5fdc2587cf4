use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;

use chrono::DateTime;
use serde_json::Value;
use tsvis_core::ontology::{Store, StreamDraft};
use tsvis_core::ManualClock;
use tsvis_server::auth::PasswordHash;

fn tsvis(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tsvis"))
        .args(args)
        .env("RUST_LOG", "warn")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "tsvis {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn memory_store() -> Store {
    Store::in_memory(Arc::new(ManualClock::new(DateTime::from_timestamp(1_600_000_000, 0).unwrap())))
}

fn write_config(dir: &Path, hash: &str) {
    let config = format!(
        "dataDir = \"data\"\nthumbnailDir = \"thumbs\"\nsourceRoot = \"feeds\"\n\n\
         [[users]]\nusername = \"root\"\npasswordHash = \"{hash}\"\nrole = \"admin\"\n\n\
         [[sources]]\nstreamId = \"fife-cases\"\nlocation = \"fife-cases.csv\"\nformat = \"csv\"\npollIntervalSecs = 60\n"
    );
    std::fs::write(dir.join("tsvis.toml"), config).unwrap();
}

#[test]
fn hash_password_reads_stdin() {
    let out = tsvis(&["hash-password", "--iterations", "1000"], "hunter2\n");
    let hash: PasswordHash = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert_eq!(hash.iterations(), 1000);
    assert!(hash.verify("hunter2"));
    assert!(!hash.verify("hunter2\n"));
}

#[test]
fn import_tick_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let hash = String::from_utf8(tsvis(&["hash-password", "--iterations", "1000"], "pw").stdout).unwrap();
    write_config(dir.path(), hash.trim());
    std::fs::create_dir(dir.path().join("feeds")).unwrap();
    std::fs::write(dir.path().join("feeds/fife-cases.csv"), "date,value\n2020-03-01,3\n2020-03-02,5.25\n").unwrap();

    let seed = memory_store();
    seed.register_stream(StreamDraft {
        id: "fife-cases".into(),
        locator: "fife-cases.csv".into(),
        kind: "timeseries".into(),
        descriptor: Default::default(),
        keywords: Default::default(),
        provenance: Default::default(),
    })
    .unwrap();
    let mut snapshot = Vec::new();
    seed.export_snapshot(&mut snapshot).unwrap();
    std::fs::write(dir.path().join("seed.jsonl"), &snapshot).unwrap();

    let config = dir.path().join("tsvis.toml");
    let config = config.to_str().unwrap();
    let seed_path = dir.path().join("seed.jsonl");
    tsvis(&["import", "--config", config, seed_path.to_str().unwrap()], "");

    let report: Value = serde_json::from_slice(&tsvis(&["tick", "--config", config], "").stdout).unwrap();
    assert_eq!(report["polls"][0]["streamId"], "fife-cases");
    assert_eq!(report["polls"][0]["outcome"]["status"], "updated");

    let out_path = dir.path().join("out.jsonl");
    tsvis(&["export", "--config", config, "--out", out_path.to_str().unwrap()], "");
    let restored = memory_store();
    restored.import_snapshot(std::io::BufReader::new(std::fs::File::open(&out_path).unwrap())).unwrap();
    let (series, version) = restored.get_series("fife-cases", None).unwrap();
    assert_eq!(version, 2);
    assert_eq!(series.values, vec![3.0, 5.25]);

    let stdout = tsvis(&["export", "--config", config], "").stdout;
    assert_eq!(stdout, std::fs::read(&out_path).unwrap());
}
