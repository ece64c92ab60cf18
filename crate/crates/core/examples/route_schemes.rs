//! Shortest, safest and optimal trips across the demo grid.
//!
//! ```text
//! cargo run --example route_schemes [alpha beta gamma]
//! ```

use std::path::PathBuf;

use bikeroute::geo::GeoPoint;
use bikeroute::model::FactorWeights;
use bikeroute::routing::{RouteQuery, Scheme};
use bikeroute::service::{Engine, EngineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let weights = match args.as_slice() {
        [a, b, g] => FactorWeights::new(*a, *b, *g)?,
        _ => FactorWeights::default(),
    };
    let config = EngineConfig::from_file(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/engine.toml"))?;
    let engine = Engine::load(config)?;

    for scheme in [Scheme::Shortest, Scheme::Safest, Scheme::Optimal] {
        let query = RouteQuery {
            origin: GeoPoint::new(40.7297, -74.0004)?,
            destination: GeoPoint::new(40.7383, -73.9893)?,
            departure_time: engine.now(),
            weights,
            scheme,
        };
        let r = engine.route(&query)?;
        let c = &r.chosen;
        println!(
            "{scheme:?}: {} -> {}  {:.0} m, {} incidents, {:.1} min, AVL {:.0} ({:.0} bikes x {:.0} docks), score {:.3}",
            c.origin_station_id,
            c.destination_station_id,
            c.total_length,
            c.total_crime,
            c.legs.iter().map(|l| l.duration).sum::<f64>() / 60.0,
            c.avl,
            c.pb_out,
            c.pd_in,
            c.score,
        );
        for leg in &c.legs {
            let edges: Vec<&str> = leg.edge_path.iter().map(|&e| engine.network().edge(e).id.as_str()).collect();
            println!("    {:<4} {:>6.0} m  {}", leg.mode, leg.length, edges.join(" "));
        }
    }
    Ok(())
}
