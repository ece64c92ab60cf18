//! Count incidents near each road edge and list the worst edges.
//!
//! ```text
//! cargo run --example crime_annotation [buffer_m]
//! ```

use std::path::PathBuf;

use bikeroute::ingest::{parse_crime_csv, parse_road_geojson};
use bikeroute::spatial::{annotate_crime, BufferConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let buffer: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50.0);
    let (network, _) = parse_road_geojson(&std::fs::read(dir.join("roads.geojson"))?)?;
    let (crimes, _) = parse_crime_csv(&std::fs::read(dir.join("crimes.csv"))?)?;

    let cfg = BufferConfig { crime_buffer_m: buffer, ..Default::default() };
    cfg.validate()?;
    let annotated = annotate_crime(&network, &crimes, &cfg);

    let mut edges: Vec<_> = annotated.edges().iter().collect();
    edges.sort_by(|a, b| b.crime_count.cmp(&a.crime_count).then(a.id.cmp(&b.id)));
    println!("{} incidents, {} edges, buffer {buffer} m", crimes.len(), annotated.edge_count());
    for e in edges.iter().take(8) {
        println!("  {:<8} {:>6.1} m  {:>3} incidents", e.id, e.length, e.crime_count);
    }
    let quiet = edges.iter().filter(|e| e.crime_count == 0).count();
    println!("{quiet} edges with no incidents nearby");
    Ok(())
}
