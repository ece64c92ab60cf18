//! The `bikeroute` binary end to end.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use bikeroute::ingest::{load_store, parse_road_geojson};
use bikeroute::service::{parse_route_request, route_doc};
use common::*;
use serde_json::{json, Value};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bikeroute")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn config_path() -> String {
    fixtures_dir().join("engine.toml").display().to_string()
}

/// A config in `dir` pointing at the fixtures, with outputs inside `dir`.
fn writable_config(dir: &Path) -> String {
    let f = fixtures_dir();
    let text = format!(
        "station_info = {:?}\nstatus_archive = {:?}\ncrime_csv = {:?}\nroad_network = {:?}\n\
         snapshot_store = \"out.store\"\nannotated_network = \"annotated.geojson\"\nnow = \"2017-05-22T18:25:00Z\"\n",
        f.join("station_information.json"),
        f.join("status_archive.jsonl"),
        f.join("crimes.csv"),
        f.join("roads.geojson"),
    );
    let path = dir.join("engine.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn ingest_reports_fixture_counts_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = writable_config(tmp.path());
    let doc = stdout_json(&bin(&["--config", &cfg, "ingest"]));
    let reports = &doc["reports"];
    // 7 stations; 663 archive lines x 6 reporting stations; 60 crimes; 40
    // streets + 4 avenue segments over 25 intersections.
    assert_eq!(reports["station_info"]["records_kept"], 7);
    assert_eq!(reports["status_archive"]["records_read"], 663 * 6);
    assert_eq!(reports["status_archive"]["records_rejected"], 0);
    assert_eq!(reports["crime_csv"]["records_kept"], 60);
    assert_eq!(reports["road_network"]["records_kept"], 44);
    assert_eq!(doc["road_nodes"], 25);
    assert_eq!(doc["stored_snapshots"], 663 * 6);

    let store = load_store(tmp.path().join("out.store")).unwrap();
    assert_eq!(store.station_count(), 6);
    let (net, _) = parse_road_geojson(&std::fs::read(tmp.path().join("annotated.geojson")).unwrap()).unwrap();
    assert!(net.edges().iter().any(|e| e.crime_count > 0));

    // Serving from the store alone gives the same answers.
    let text = std::fs::read_to_string(&cfg).unwrap().replace("status_archive", "# status_archive");
    std::fs::write(&cfg, text).unwrap();
    let a = stdout_json(&bin(&["--config", &cfg, "predict", "--station", "101"]));
    let b = stdout_json(&bin(&["--config", &config_path(), "predict", "--station", "101"]));
    assert_eq!(a, b);

    // Re-ingesting is idempotent: the archive overwrites identical buckets.
    let text = std::fs::read_to_string(&cfg).unwrap().replace("# status_archive", "status_archive");
    std::fs::write(&cfg, text).unwrap();
    let again = stdout_json(&bin(&["--config", &cfg, "ingest"]));
    assert_eq!(again["stored_snapshots"], 663 * 6);
    assert_eq!(again["reports"]["snapshots"]["flagged"]["bucket overwritten"], 663 * 6);
}

#[test]
fn predict_flat_station_is_constant() {
    let doc = stdout_json(&bin(&["--config", &config_path(), "predict", "--station", "203", "--horizon", "6"]));
    let points = doc["points"].as_array().unwrap();
    assert_eq!(points.len(), 6);
    assert!(points.iter().all(|p| p["bikes"] == 7.0 && p["docks"] == 13.0));
}

#[test]
fn route_cli_matches_library_document() {
    let origin = format!("{},{}", FIXTURE_ORIGIN.0, FIXTURE_ORIGIN.1);
    let destination = format!("{},{}", FIXTURE_DESTINATION.0, FIXTURE_DESTINATION.1);
    let out = bin(&[
        "--config", &config_path(), "route", "--origin", &origin, "--destination", &destination,
        "--weights", "3,3,4",
    ]);
    let doc = stdout_json(&out);
    let engine = fixture_engine();
    let body = json!({
        "origin": { "lat": FIXTURE_ORIGIN.0, "lon": FIXTURE_ORIGIN.1 },
        "destination": { "lat": FIXTURE_DESTINATION.0, "lon": FIXTURE_DESTINATION.1 },
        "weights": { "alpha": 0.3, "beta": 0.3, "gamma": 0.4 },
    });
    let want = route_doc(&engine, &parse_route_request(&body, engine.now()).unwrap()).unwrap();
    assert_eq!(doc, want);
}

#[test]
fn malformed_weights_name_the_field() {
    let out = bin(&["--config", &config_path(), "route", "--origin", "40.73,-74", "--destination", "40.738,-73.99", "--weights", "a,b"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("weights"), "{err}");

    let out = bin(&["--config", &config_path(), "route", "--origin", "40.73,-74", "--destination", "40.738,-73.99", "--weights", "0,0,0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("weights"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = bin(&["predict", "--station", "101"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));

    let out = bin(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));
}

#[test]
fn missing_input_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = writable_config(tmp.path());
    let text = std::fs::read_to_string(&cfg).unwrap().replace("crimes.csv", "no-such.csv");
    std::fs::write(&cfg, text).unwrap();
    let out = bin(&["--config", &cfg, "predict", "--station", "101"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("crime_csv") && err.contains("no-such.csv"), "{err}");
    // serve fails the same way, before binding.
    let out = bin(&["--config", &cfg, "serve", "--listen", "127.0.0.1:1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("crime_csv"));
}

#[test]
fn unknown_station_fails() {
    let out = bin(&["--config", &config_path(), "predict", "--station", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_station"));
}

#[test]
fn serve_answers_over_tcp() {
    use std::io::{Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::time::{Duration, Instant};

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = Command::new(env!("CARGO_BIN_EXE_bikeroute"))
        .args(["--config", &config_path(), "serve", "--listen", &addr])
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let response = loop {
        if let Ok(mut s) = TcpStream::connect(&addr) {
            s.write_all(b"GET /stations HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
            let mut buf = String::new();
            s.read_to_string(&mut buf).unwrap();
            break buf;
        }
        assert!(Instant::now() < deadline, "server never came up");
        std::thread::sleep(Duration::from_millis(50));
    };
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    let body = &response[response.find("\r\n\r\n").unwrap() + 4..];
    let doc: Value = serde_json::from_str(body).unwrap();
    assert_eq!(doc["stations"].as_array().unwrap().len(), 7);
}
