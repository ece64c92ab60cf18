//! Weekday/weekend profiles and the one-hour forecast for a station.
//!
//! ```text
//! cargo run --example forecast_station [station_id]
//! ```

use std::path::PathBuf;

use bikeroute::model::{local_slot, weekday_flag};
use bikeroute::predict::{display_count, predict_at, profile_value, Series};
use bikeroute::service::{Engine, EngineConfig};
use chrono::Duration;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "102".into());
    let config = EngineConfig::from_file(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/engine.toml"))?;
    let engine = Engine::load(config)?;
    let station = engine.registry().get(&id).ok_or("unknown station")?;
    let current = engine.current_status(&id).ok_or("station has no readings")?;
    let profile = engine.profile(&id).unwrap();

    let (date, bucket) = local_slot(current.timestamp, engine.tz());
    let kind = weekday_flag(date);
    println!("{} ({}), capacity {}", station.name, id, station.capacity);
    println!("now {} ({kind:?}, bucket {bucket}): {} bikes, {} docks", current.timestamp, current.bikes, current.docks);
    println!("profile average here: {:.2} bikes", profile_value(profile, kind, bucket, Series::Bikes)?);

    let pv = engine.predict(&id, engine.config().horizon).unwrap()?;
    println!("next hour{}:", if pv.degraded { " (degraded)" } else { "" });
    for ((t, b), d) in pv.times.iter().zip(&pv.predicted_bikes).zip(&pv.predicted_docks) {
        let local = t.with_timezone(&engine.tz());
        println!("  {}  bikes {:>5.2} (~{:>2})  docks {:>5.2}", local.format("%a %H:%M"), b, display_count(*b), d);
    }

    // Arbitrary instants round to the nearest bucket.
    for minutes in [5, 61, 180] {
        let target = current.timestamp + Duration::minutes(minutes);
        let (b, d) = predict_at(profile, current, target, station.capacity, engine.tz())?;
        println!("+{minutes:>3} min: {b:.2} bikes, {d:.2} docks");
    }
    Ok(())
}
