//! Parse the demo inputs, print per-input reports and persist the snapshot
//! store.
//!
//! ```text
//! cargo run --example ingest_feeds
//! ```

use std::path::PathBuf;

use bikeroute::ingest::{
    append_snapshots, load_store, parse_crime_csv, parse_road_geojson, parse_station_info, parse_status_archive,
    reconcile_statuses, save_store,
};
use bikeroute::model::SnapshotStore;
use chrono_tz::America::New_York;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");

    let (registry, report) = parse_station_info(&std::fs::read(dir.join("station_information.json"))?)?;
    println!("stations: {} kept of {}", report.records_kept, report.records_read);

    let (statuses, report) = parse_status_archive(&std::fs::read(dir.join("status_archive.jsonl"))?)?;
    println!("status readings: {} kept, {} rejected", report.records_kept, report.records_rejected);
    let (statuses, report) = reconcile_statuses(statuses, &registry);
    println!("after capacity check: {} kept, flagged {:?}", report.records_kept, report.flagged);

    let mut store = SnapshotStore::new();
    append_snapshots(&mut store, &statuses, New_York);
    for series in store.iter() {
        let (date, bucket, slot) = series.latest().unwrap();
        println!(
            "  {:>4}: {} buckets, latest {date} bucket {bucket}: {} bikes / {} docks",
            series.station_id, series.filled(), slot.bikes, slot.docks
        );
    }

    let (crimes, report) = parse_crime_csv(&std::fs::read(dir.join("crimes.csv"))?)?;
    println!("crimes: {} kept, reasons {:?}", crimes.len(), report.rejection_reasons);
    let (network, report) = parse_road_geojson(&std::fs::read(dir.join("roads.geojson"))?)?;
    println!("roads: {} edges over {} nodes ({} rejected)", network.edge_count(), network.node_count(), report.records_rejected);

    // Malformed records are counted, not fatal.
    let dirty = b"id,latitude,longitude,date,category\n1,40.7,-73.9,2017-01-01,X\n2,,-73.9,2017-01-01,X\n3,40.7,-73.9,someday,X\n";
    let (_, report) = parse_crime_csv(dirty)?;
    println!("dirty CSV: {}", serde_json::to_string(&report)?);

    let tmp = std::env::temp_dir().join("bikeroute-example.store");
    save_store(&store, &tmp)?;
    assert_eq!(load_store(&tmp)?, store);
    println!("store round trip OK ({} bytes at {})", std::fs::metadata(&tmp)?.len(), tmp.display());
    std::fs::remove_file(tmp)?;
    Ok(())
}
