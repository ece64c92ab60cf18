use chrono::{DateTime, TimeZone, Utc};
use chrono_tz::Tz;
use serde_json::{json, Map, Value};

use super::{id_field, json_error, parse_json, IngestError, IngestReport};
use crate::geo::{GeoError, GeoPoint};
use crate::model::{local_slot, Slot, SnapshotStore, Station, StationRegistry, StationStatus};

/// Finds `stations`, either at the top level or under a `data` wrapper.
fn stations_array<'a>(doc: &'a Value, what: &str) -> Result<&'a Vec<Value>, IngestError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| IngestError::Structure(format!("{what}: top level is not an object")))?;
    let stations = obj
        .get("stations")
        .or_else(|| obj.get("data").and_then(|d| d.get("stations")));
    stations
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Structure(format!("{what}: missing \"stations\" array")))
}

fn parse_station(rec: &Value) -> Result<Station, String> {
    let obj = rec.as_object().ok_or("not an object")?;
    let id = id_field(obj, "station_id").ok_or("missing station_id")?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or("missing name")?
        .to_string();
    let lat = obj.get("lat").and_then(Value::as_f64).ok_or("missing lat")?;
    let lon = obj.get("lon").and_then(Value::as_f64).ok_or("missing lon")?;
    let location = GeoPoint::new(lat, lon).map_err(|e| match e {
        GeoError::LatOutOfRange(_) => "lat out of range".to_string(),
        _ => "lon out of range".to_string(),
    })?;
    let capacity = obj
        .get("capacity")
        .ok_or("missing capacity")
        .and_then(|v| count_value(v).ok_or("invalid capacity"))?;
    Ok(Station { id, name, location, capacity })
}

/// Non-negative integer; integral floats such as `31.0` are accepted.
fn count_value(v: &Value) -> Option<u32> {
    if let Some(n) = v.as_u64() {
        return u32::try_from(n).ok();
    }
    let f = v.as_f64()?;
    (f >= 0.0 && f.fract() == 0.0 && f <= u32::MAX as f64).then_some(f as u32)
}

/// Parses a station-information document. Duplicate ids keep the last record;
/// the superseded one is counted as rejected.
pub fn parse_station_info(bytes: &[u8]) -> Result<(StationRegistry, IngestReport), IngestError> {
    let doc = parse_json(bytes)?;
    let records = stations_array(&doc, "station info")?;
    let mut report = IngestReport::default();
    let mut registry = StationRegistry::new();
    let mut seen_at = std::collections::HashMap::new();
    for (i, rec) in records.iter().enumerate() {
        match parse_station(rec) {
            Ok(station) => {
                if let Some(prev) = seen_at.insert(station.id.clone(), i) {
                    report.demote(prev, "duplicate station_id");
                }
                registry.insert(station);
                report.keep();
            }
            Err(reason) => report.reject(i, reason),
        }
    }
    Ok((registry, report))
}

pub fn serialize_station_info(registry: &StationRegistry) -> String {
    let stations: Vec<Value> = registry
        .iter()
        .map(|s| {
            json!({
                "station_id": s.id,
                "name": s.name,
                "lat": s.location.lat(),
                "lon": s.location.lon(),
                "capacity": s.capacity,
            })
        })
        .collect();
    json!({ "stations": stations }).to_string()
}

fn signed_count(obj: &Map<String, Value>, key: &str) -> Result<u32, String> {
    let v = obj.get(key).ok_or_else(|| format!("missing {key}"))?;
    if let Some(i) = v.as_i64() {
        if i < 0 {
            return Err("negative count".into());
        }
    } else if v.as_f64().is_some_and(|f| f < 0.0) {
        return Err("negative count".into());
    }
    count_value(v).ok_or_else(|| format!("invalid {key}"))
}

fn status_from_doc(doc: &Value, report: &mut IngestReport, index_base: Option<usize>) -> Result<Vec<StationStatus>, IngestError> {
    let last_updated = doc
        .get("last_updated")
        .and_then(Value::as_i64)
        .ok_or_else(|| IngestError::Structure("status snapshot: missing integer \"last_updated\"".into()))?;
    let timestamp: DateTime<Utc> = Utc
        .timestamp_opt(last_updated, 0)
        .single()
        .ok_or_else(|| IngestError::Structure(format!("status snapshot: bad last_updated {last_updated}")))?;
    let records = stations_array(doc, "status snapshot")?;
    let mut out = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let index = index_base.unwrap_or(i);
        let parsed = (|| {
            let obj = rec.as_object().ok_or("not an object")?;
            let station_id = id_field(obj, "station_id").ok_or("missing station_id")?;
            let bikes = signed_count(obj, "num_bikes_available")?;
            let docks = signed_count(obj, "num_docks_available")?;
            Ok::<_, String>(StationStatus { station_id, bikes, docks, timestamp })
        })();
        match parsed {
            Ok(s) => {
                report.keep();
                out.push(s);
            }
            Err(reason) => report.reject(index, reason),
        }
    }
    Ok(out)
}

/// Parses one status document; every entry is stamped with `last_updated`.
pub fn parse_status_snapshot(bytes: &[u8]) -> Result<(Vec<StationStatus>, IngestReport), IngestError> {
    let doc = parse_json(bytes)?;
    let mut report = IngestReport::default();
    let out = status_from_doc(&doc, &mut report, None)?;
    Ok((out, report))
}

/// Parses a JSON Lines archive with one status document per line. Blank lines
/// are skipped; rejections carry the 1-based line number.
pub fn parse_status_archive(bytes: &[u8]) -> Result<(Vec<StationStatus>, IngestReport), IngestError> {
    let mut report = IngestReport::default();
    let mut out = Vec::new();
    let mut start = 0usize;
    for (lineno, line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line_start = start;
        start += line.len() + 1;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let doc: Value = serde_json::from_slice(line).map_err(|e| match json_error(line, &e) {
            IngestError::MalformedJson { offset, message } => IngestError::MalformedJson {
                offset: line_start + offset,
                message: format!("line {}: {message}", lineno + 1),
            },
            other => other,
        })?;
        out.extend(status_from_doc(&doc, &mut report, Some(lineno + 1))?);
    }
    Ok((out, report))
}

pub fn serialize_status_snapshot(last_updated: DateTime<Utc>, statuses: &[StationStatus]) -> String {
    let stations: Vec<Value> = statuses
        .iter()
        .map(|s| {
            json!({
                "station_id": s.station_id,
                "num_bikes_available": s.bikes,
                "num_docks_available": s.docks,
            })
        })
        .collect();
    json!({ "last_updated": last_updated.timestamp(), "stations": stations }).to_string()
}

/// Joins statuses with the registry: readings over capacity are rejected,
/// unknown station ids are kept and flagged.
pub fn reconcile_statuses(
    statuses: Vec<StationStatus>,
    registry: &StationRegistry,
) -> (Vec<StationStatus>, IngestReport) {
    let mut report = IngestReport::default();
    let mut out = Vec::with_capacity(statuses.len());
    for (i, s) in statuses.into_iter().enumerate() {
        match registry.get(&s.station_id) {
            Some(station) if !s.fits_capacity(station.capacity) => {
                report.reject(i, "exceeds capacity");
            }
            Some(_) => {
                report.keep();
                out.push(s);
            }
            None => {
                report.keep();
                report.flag("unknown station_id");
                out.push(s);
            }
        }
    }
    (out, report)
}

/// Files each status into its local (date, bucket) slot; later writes win.
pub fn append_snapshots(store: &mut SnapshotStore, statuses: &[StationStatus], tz: Tz) -> IngestReport {
    let mut report = IngestReport::default();
    for s in statuses {
        let (date, bucket) = local_slot(s.timestamp, tz);
        let prev = store
            .series_mut(&s.station_id)
            .insert(date, bucket, Slot { bikes: s.bikes, docks: s.docks });
        if prev.is_some() {
            report.flag("bucket overwritten");
        }
        report.keep();
    }
    report
}
