//! Writes the demo dataset under `fixtures/` (or the directory given as the
//! first argument).
//!
//! A 5x5 street grid in lower Manhattan with a diagonal avenue from the
//! south-west to the north-east corner. A cluster of incidents sits on the
//! avenue's midpoint, so the shortest trip and the safest trip disagree.
//! Three stations near each end of the avenue, one station with no status
//! history, and 10-minute status snapshots from Thursday 2017-05-18 00:00 to
//! Monday 2017-05-22 14:20 local time.
//!
//! ```text
//! cargo run --example generate_fixtures
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use chrono::{Duration, NaiveDate, TimeZone};
use chrono_tz::America::New_York;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const BASE_LAT: f64 = 40.730;
const BASE_LON: f64 = -74.000;
const DLAT: f64 = 0.002;
const DLON: f64 = 0.0026;
const N: usize = 5;

struct StationSpec {
    id: &'static str,
    name: &'static str,
    /// Grid node the station sits next to.
    near: (usize, usize),
    capacity: u32,
    /// Mean fill, swing amplitude and phase (buckets) on weekdays; weekends
    /// use half the swing and shift the phase.
    mean: f64,
    swing: f64,
    phase: f64,
    /// Skip status history entirely.
    silent: bool,
}

const STATIONS: [StationSpec; 7] = [
    StationSpec { id: "101", name: "W Houston & Varick", near: (0, 0), capacity: 30, mean: 6.0, swing: 5.0, phase: 0.0, silent: false },
    StationSpec { id: "102", name: "Bleecker & 7 Av S", near: (0, 1), capacity: 30, mean: 22.0, swing: 6.0, phase: 20.0, silent: false },
    StationSpec { id: "103", name: "Bedford & Downing", near: (1, 0), capacity: 25, mean: 12.0, swing: 8.0, phase: 40.0, silent: false },
    StationSpec { id: "201", name: "E 10 St & Broadway", near: (4, 4), capacity: 30, mean: 25.0, swing: 4.0, phase: 10.0, silent: false },
    StationSpec { id: "202", name: "University Pl & E 8 St", near: (4, 3), capacity: 30, mean: 8.0, swing: 6.0, phase: 70.0, silent: false },
    // Constant readings: forecasts for this station are flat.
    StationSpec { id: "203", name: "Lafayette & E 8 St", near: (3, 4), capacity: 20, mean: 7.0, swing: 0.0, phase: 0.0, silent: false },
    StationSpec { id: "301", name: "Spring & Mercer", near: (0, 4), capacity: 24, mean: 0.0, swing: 0.0, phase: 0.0, silent: true },
];

fn node(r: usize, c: usize, jitter: &[(f64, f64)]) -> (f64, f64) {
    let (jl, jo) = jitter[r * N + c];
    (BASE_LAT + r as f64 * DLAT + jl, BASE_LON + c as f64 * DLON + jo)
}

fn bikes_at(s: &StationSpec, weekend: bool, bucket: usize) -> u32 {
    let (swing, phase) = if weekend { (s.swing / 2.0, s.phase + 36.0) } else { (s.swing, s.phase) };
    let x = s.mean + swing * (2.0 * PI * (bucket as f64 + phase) / 144.0).sin();
    (x.round().max(0.0) as u32).min(s.capacity)
}

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20170522);

    // Corners stay exact; interior nodes wobble by up to ~10 m.
    let jitter: Vec<(f64, f64)> = (0..N * N)
        .map(|i| {
            let (r, c) = (i / N, i % N);
            if ((r == 0 || r == N - 1) && (c == 0 || c == N - 1)) || r == c {
                (0.0, 0.0)
            } else {
                (rng.gen_range(-0.00008..0.00008), rng.gen_range(-0.0001..0.0001))
            }
        })
        .collect();

    // Roads: grid streets, some with a mid-block bend, plus the avenue.
    let mut features = Vec::new();
    let mut line = |id: String, pts: Vec<(f64, f64)>| {
        let coords: Vec<[f64; 2]> = pts.iter().map(|&(lat, lon)| [lon, lat]).collect();
        features.push(json!({
            "type": "Feature",
            "properties": { "edge_id": id, "highway": "residential" },
            "geometry": { "type": "LineString", "coordinates": coords },
        }));
    };
    for r in 0..N {
        for c in 0..N {
            let a = node(r, c, &jitter);
            if c + 1 < N {
                let b = node(r, c + 1, &jitter);
                let mut pts = vec![a];
                if (r + c) % 3 == 1 {
                    pts.push(((a.0 + b.0) / 2.0 + 0.00006, (a.1 + b.1) / 2.0));
                }
                pts.push(b);
                line(format!("st-{r}-{c}"), pts);
            }
            if r + 1 < N {
                line(format!("av-{r}-{c}"), vec![a, node(r + 1, c, &jitter)]);
            }
        }
    }
    for i in 0..N - 1 {
        line(format!("diag-{i}"), vec![node(i, i, &jitter), node(i + 1, i + 1, &jitter)]);
    }
    let roads = json!({ "type": "FeatureCollection", "features": features });
    std::fs::write(out.join("roads.geojson"), serde_json::to_string_pretty(&roads)? + "\n")?;

    // Stations sit ~25 m off their node.
    let stations: Vec<_> = STATIONS
        .iter()
        .map(|s| {
            let (lat, lon) = node(s.near.0, s.near.1, &jitter);
            json!({
                "station_id": s.id,
                "name": s.name,
                "lat": lat - 0.0002,
                "lon": lon + 0.0001,
                "capacity": s.capacity,
                "rental_methods": ["KEY", "CREDITCARD"],
            })
        })
        .collect();
    let info = json!({ "last_updated": 1495206000, "ttl": 10, "data": { "stations": stations } });
    std::fs::write(out.join("station_information.json"), serde_json::to_string_pretty(&info)? + "\n")?;

    // Status archive: one feed document per line, posted 37 s into each bucket.
    let mut archive = String::new();
    let start = NaiveDate::from_ymd_opt(2017, 5, 18).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let end = NaiveDate::from_ymd_opt(2017, 5, 22).unwrap().and_hms_opt(14, 20, 0).unwrap();
    let mut t = start;
    while t <= end {
        let utc = New_York.from_local_datetime(&t).single().expect("no DST change in range");
        let weekend = matches!(t.format("%a").to_string().as_str(), "Sat" | "Sun");
        let bucket = (t.time().signed_duration_since(chrono::NaiveTime::MIN).num_minutes() / 10) as usize;
        let rows: Vec<_> = STATIONS
            .iter()
            .filter(|s| !s.silent)
            .map(|s| {
                let bikes = bikes_at(s, weekend, bucket);
                json!({
                    "station_id": s.id,
                    "num_bikes_available": bikes,
                    "num_docks_available": s.capacity - bikes,
                    "is_renting": 1,
                })
            })
            .collect();
        let doc = json!({ "last_updated": utc.timestamp() + 37, "ttl": 10, "data": { "stations": rows } });
        writeln!(archive, "{doc}").unwrap();
        t += Duration::minutes(10);
    }
    std::fs::write(out.join("status_archive.jsonl"), archive)?;

    // Crimes: a tight cluster on the avenue's middle node plus background
    // incidents spread over the grid.
    let (clat, clon) = node(2, 2, &jitter);
    let categories = ["PETIT LARCENY", "ASSAULT 3", "ROBBERY", "HARRASSMENT 2", "FELONY ASSAULT"];
    let mut csv = String::from("id,date,category,latitude,longitude,borough\n");
    for i in 0..60 {
        let (lat, lon, date) = if i < 40 {
            (clat + rng.gen_range(-0.0002..0.0002), clon + rng.gen_range(-0.00025..0.00025), "2017-03-")
        } else {
            (
                BASE_LAT + rng.gen_range(0.0..DLAT * 4.0),
                BASE_LON + rng.gen_range(0.0..DLON * 4.0),
                "2017-04-",
            )
        };
        let day = 1 + i % 28;
        // Mix the two date spellings open-data exports use.
        let date = if i % 2 == 0 {
            format!("{date}{day:02}")
        } else {
            format!("{}/{day:02}/2017 11:{:02}:00 PM", &date[5..7], i % 60)
        };
        let cat = categories[i % categories.len()];
        writeln!(csv, "{},{date},{cat},{lat:.6},{lon:.6},MANHATTAN", 500_000 + i).unwrap();
    }
    std::fs::write(out.join("crimes.csv"), csv)?;

    let toml = "\
# Demo engine config. Paths are relative to this file.
station_info = \"station_information.json\"
status_archive = \"status_archive.jsonl\"
crime_csv = \"crimes.csv\"
road_network = \"roads.geojson\"
timezone = \"America/New_York\"
horizon = 6
listen = \"127.0.0.1:8080\"
# Pinned so default departures are reproducible: Monday 14:25 local.
now = \"2017-05-22T18:25:00Z\"

[buffers]
crime_buffer_m = 50.0
station_buffer_m = 500.0
max_candidate_stations = 5

[speeds]
walk_kmh = 5.0
bike_kmh = 15.0
";
    std::fs::write(out.join("engine.toml"), toml)?;
    println!("wrote fixtures to {}", out.display());
    Ok(())
}
