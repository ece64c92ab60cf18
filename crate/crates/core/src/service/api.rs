//! Response documents shared by the HTTP server and the command line.
//!
//! Every document is a JSON object with `"api_version": 1`. Errors are
//! `{"api_version": 1, "error": {"code": .., "message": .., ..}}` with an HTTP
//! status attached.

use chrono::{DateTime, Duration, Utc};
use serde_json::{json, Map, Value};

use super::Engine;
use crate::geo::GeoPoint;
use crate::model::{bucket_start_utc, CandidateRoute, FactorWeights, RouteLeg};
use crate::predict::PredictError;
use crate::routing::{Endpoint, RouteQuery, RouteResult, RoutingError, Scheme};

pub const API_VERSION: u32 = 1;

/// Longest forecast or history window served, in buckets or hours.
const MAX_HORIZON: usize = 144;
const MAX_HISTORY_HOURS: i64 = 24 * 31;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    /// Field or endpoint the error is about, when there is one.
    pub field: Option<String>,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), field: None }
    }

    fn bad_field(code: &'static str, field: &str, message: impl std::fmt::Display) -> Self {
        ApiError { status: 400, code, message: format!("{field}: {message}"), field: Some(field.into()) }
    }

    pub fn unknown_station(id: &str) -> Self {
        ApiError::new(404, "unknown_station", format!("no station with id {id:?}"))
    }

    pub fn to_json(&self) -> Value {
        let mut err = json!({ "code": self.code, "message": self.message });
        if let Some(f) = &self.field {
            err["field"] = json!(f);
        }
        json!({ "api_version": API_VERSION, "error": err })
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<RoutingError> for ApiError {
    fn from(e: RoutingError) -> Self {
        match e {
            RoutingError::NoStationInRange(which) => ApiError {
                status: 422,
                code: "no_station_in_range",
                message: e.to_string(),
                field: Some(match which {
                    Endpoint::Origin => "origin".into(),
                    Endpoint::Destination => "destination".into(),
                }),
            },
            RoutingError::NoRoute | RoutingError::NoCandidates | RoutingError::Unreachable(..) => {
                ApiError::new(422, "no_route", e.to_string())
            }
            RoutingError::EmptyNetwork => ApiError::new(422, "empty_network", e.to_string()),
            RoutingError::UnknownNode(_) | RoutingError::InvalidCost(_) => ApiError::new(500, "internal", e.to_string()),
        }
    }
}

fn ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// `GET /stations`: every registry station with its latest reading.
pub fn stations_doc(engine: &Engine) -> Value {
    let stations: Vec<Value> = engine
        .registry()
        .iter()
        .map(|s| {
            let mut doc = json!({
                "id": s.id,
                "name": s.name,
                "lat": s.location.lat(),
                "lon": s.location.lon(),
                "capacity": s.capacity,
            });
            match engine.current_status(&s.id) {
                Some(st) => {
                    doc["status"] = json!("ok");
                    doc["bikes"] = json!(st.bikes);
                    doc["docks"] = json!(st.docks);
                    doc["timestamp"] = json!(ts(st.timestamp));
                    let ratio = if s.capacity > 0 { st.bikes as f64 / s.capacity as f64 } else { 0.0 };
                    doc["ratio"] = json!(ratio);
                }
                None => {
                    doc["status"] = json!("unknown");
                    for k in ["bikes", "docks", "timestamp", "ratio"] {
                        doc[k] = Value::Null;
                    }
                }
            }
            doc
        })
        .collect();
    json!({ "api_version": API_VERSION, "stations": stations })
}

/// `GET /stations/{id}/history`: stored readings in the `hours` before the
/// station's latest reading, inclusive at both ends, oldest first.
pub fn history_doc(engine: &Engine, station_id: &str, hours: i64) -> Result<Value, ApiError> {
    if engine.registry().get(station_id).is_none() {
        return Err(ApiError::unknown_station(station_id));
    }
    if !(1..=MAX_HISTORY_HOURS).contains(&hours) {
        return Err(ApiError::bad_field("invalid_argument", "hours", format!("must be in 1..={MAX_HISTORY_HOURS}")));
    }
    let mut points = Vec::new();
    let mut end = Value::Null;
    if let (Some(series), Some(current)) = (engine.store().series(station_id), engine.current_status(station_id)) {
        let end_t = current.timestamp;
        let start_t = end_t - Duration::hours(hours);
        // Two calendar days of slack either side covers any zone offset.
        let (lo, hi) = ((start_t - Duration::days(2)).date_naive(), (end_t + Duration::days(2)).date_naive());
        let mut rows: Vec<(DateTime<Utc>, u32, u32)> = series
            .entries()
            .filter(|(d, _, _)| (lo..=hi).contains(d))
            .map(|(d, b, slot)| (bucket_start_utc(d, b, engine.tz()), slot.bikes, slot.docks))
            .filter(|(t, _, _)| (start_t..=end_t).contains(t))
            .collect();
        rows.sort_by_key(|r| r.0);
        points = rows
            .into_iter()
            .map(|(t, bikes, docks)| json!({ "timestamp": ts(t), "bikes": bikes, "docks": docks }))
            .collect();
        end = json!(ts(end_t));
    }
    Ok(json!({
        "api_version": API_VERSION,
        "station_id": station_id,
        "hours": hours,
        "end": end,
        "points": points,
    }))
}

/// `GET /stations/{id}/prediction`.
pub fn prediction_doc(engine: &Engine, station_id: &str, horizon: usize) -> Result<Value, ApiError> {
    if engine.registry().get(station_id).is_none() {
        return Err(ApiError::unknown_station(station_id));
    }
    if !(1..=MAX_HORIZON).contains(&horizon) {
        return Err(ApiError::bad_field("invalid_horizon", "horizon", format!("must be in 1..={MAX_HORIZON}")));
    }
    let current = engine.current_status(station_id).ok_or_else(|| {
        ApiError::new(422, "no_current_status", format!("station {station_id:?} has no status readings"))
    })?;
    let pv = match engine.predict(station_id, horizon) {
        Some(Ok(pv)) => pv,
        Some(Err(PredictError::ZeroHorizon)) => {
            return Err(ApiError::bad_field("invalid_horizon", "horizon", "must be at least 1"))
        }
        Some(Err(e)) => return Err(ApiError::new(500, "internal", e.to_string())),
        None => return Err(ApiError::new(422, "no_current_status", format!("station {station_id:?} has no profile"))),
    };
    let points: Vec<Value> = pv
        .times
        .iter()
        .zip(pv.predicted_bikes.iter().zip(&pv.predicted_docks))
        .map(|(t, (b, d))| json!({ "timestamp": ts(*t), "bikes": b, "docks": d }))
        .collect();
    Ok(json!({
        "api_version": API_VERSION,
        "station_id": station_id,
        "anchor_time": ts(pv.anchor_time),
        "horizon": pv.horizon,
        "degraded": pv.degraded,
        "current": { "bikes": current.bikes, "docks": current.docks },
        "points": points,
    }))
}

/// Body of `POST /route`, already validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteRequest {
    pub query: RouteQuery,
}

fn number(v: &Value, field: &str) -> Result<f64, ApiError> {
    v.as_f64().ok_or_else(|| ApiError::bad_field("invalid_request", field, "expected a number"))
}

fn point(body: &Value, field: &str) -> Result<GeoPoint, ApiError> {
    let v = body.get(field).ok_or_else(|| ApiError::bad_field("invalid_request", field, "missing"))?;
    if !v.is_object() {
        return Err(ApiError::bad_field("invalid_request", field, "expected {\"lat\": .., \"lon\": ..}"));
    }
    let coord = |k: &str| {
        let name = format!("{field}.{k}");
        let raw = v.get(k).ok_or_else(|| ApiError::bad_field("invalid_request", &name, "missing"))?;
        number(raw, &name)
    };
    let (lat, lon) = (coord("lat")?, coord("lon")?);
    GeoPoint::new(lat, lon).map_err(|e| ApiError::bad_field("invalid_coordinate", field, e))
}

fn weights(body: &Value) -> Result<FactorWeights, ApiError> {
    let Some(v) = body.get("weights").filter(|v| !v.is_null()) else {
        return Ok(FactorWeights::default());
    };
    let parts: Vec<f64> = match v {
        Value::Object(_) => ["alpha", "beta", "gamma"]
            .iter()
            .map(|k| {
                let name = format!("weights.{k}");
                let raw = v.get(*k).ok_or_else(|| ApiError::bad_field("invalid_weights", &name, "missing"))?;
                raw.as_f64().ok_or_else(|| ApiError::bad_field("invalid_weights", &name, "expected a number"))
            })
            .collect::<Result<_, _>>()?,
        Value::Array(items) if items.len() == 3 => items
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| ApiError::bad_field("invalid_weights", "weights", "expected numbers")))
            .collect::<Result<_, _>>()?,
        _ => return Err(ApiError::bad_field("invalid_weights", "weights", "expected {alpha, beta, gamma}")),
    };
    FactorWeights::new(parts[0], parts[1], parts[2]).map_err(|e| ApiError::bad_field("invalid_weights", "weights", e))
}

/// Validates a route request body. `departure_time` defaults to `now`,
/// `scheme` to optimal and `weights` to (0.3, 0.3, 0.4).
pub fn parse_route_request(body: &Value, now: DateTime<Utc>) -> Result<RouteRequest, ApiError> {
    if !body.is_object() {
        return Err(ApiError::new(400, "invalid_request", "request body must be a JSON object"));
    }
    let origin = point(body, "origin")?;
    let destination = point(body, "destination")?;
    let departure_time = match body.get("departure_time").filter(|v| !v.is_null()) {
        None => now,
        Some(Value::String(s)) => DateTime::parse_from_rfc3339(s)
            .map_err(|e| ApiError::bad_field("invalid_request", "departure_time", e))?
            .with_timezone(&Utc),
        Some(_) => return Err(ApiError::bad_field("invalid_request", "departure_time", "expected an RFC 3339 string")),
    };
    let scheme = match body.get("scheme").filter(|v| !v.is_null()) {
        None => Scheme::Optimal,
        Some(Value::String(s)) => s.parse().map_err(|e: String| ApiError::bad_field("invalid_request", "scheme", e))?,
        Some(_) => return Err(ApiError::bad_field("invalid_request", "scheme", "expected a string")),
    };
    let weights = weights(body)?;
    Ok(RouteRequest { query: RouteQuery { origin, destination, departure_time, weights, scheme } })
}

fn leg_feature(engine: &Engine, index: usize, leg: &RouteLeg) -> Value {
    let coords: Vec<[f64; 2]> = leg.geometry.points().iter().map(|p| [p.lon(), p.lat()]).collect();
    let edge_ids: Vec<&str> = leg.edge_path.iter().map(|&e| engine.network().edge(e).id.as_str()).collect();
    json!({
        "type": "Feature",
        "geometry": { "type": "LineString", "coordinates": coords },
        "properties": {
            "kind": "leg",
            "leg": index,
            "mode": leg.mode,
            "length": leg.length,
            "crime_total": leg.crime_total,
            "duration": leg.duration,
            "edge_ids": edge_ids,
        },
    })
}

fn station_feature(engine: &Engine, c: &CandidateRoute, pickup: bool) -> Value {
    let id = if pickup { &c.origin_station_id } else { &c.destination_station_id };
    let station = engine.registry().get(id).expect("routed stations come from the registry");
    let mut props = Map::new();
    props.insert("kind".into(), json!("station"));
    props.insert("role".into(), json!(if pickup { "pickup" } else { "dropoff" }));
    props.insert("station_id".into(), json!(id));
    props.insert("name".into(), json!(station.name));
    props.insert("capacity".into(), json!(station.capacity));
    if pickup {
        props.insert("time".into(), json!(ts(c.t_out)));
        props.insert("predicted_bikes".into(), json!(c.pb_out));
    } else {
        props.insert("time".into(), json!(ts(c.t_in)));
        props.insert("predicted_docks".into(), json!(c.pd_in));
    }
    json!({
        "type": "Feature",
        "geometry": { "type": "Point", "coordinates": [station.location.lon(), station.location.lat()] },
        "properties": props,
    })
}

fn weights_json(w: &FactorWeights) -> Value {
    json!({ "alpha": w.alpha, "beta": w.beta, "gamma": w.gamma })
}

fn route_result_doc(engine: &Engine, query: &RouteQuery, r: &RouteResult) -> Value {
    let c = &r.chosen;
    let mut features: Vec<Value> = c.legs.iter().enumerate().map(|(i, l)| leg_feature(engine, i, l)).collect();
    features.push(station_feature(engine, c, true));
    features.push(station_feature(engine, c, false));
    let alternatives: Vec<Value> = r
        .alternatives
        .iter()
        .enumerate()
        .map(|(i, a)| {
            json!({
                "origin_station_id": a.origin_station_id,
                "destination_station_id": a.destination_station_id,
                "total_length": a.total_length,
                "total_crime": a.total_crime,
                "avl": a.avl,
                "score": a.score,
                "chosen": i == r.chosen_index,
            })
        })
        .collect();
    json!({
        "api_version": API_VERSION,
        "scheme": query.scheme,
        "weights": weights_json(&r.weights),
        "departure_time": ts(query.departure_time),
        "route": { "type": "FeatureCollection", "features": features },
        "summary": {
            "origin_station_id": c.origin_station_id,
            "destination_station_id": c.destination_station_id,
            "total_length": c.total_length,
            "total_crime": c.total_crime,
            "total_duration": c.legs.iter().map(|l| l.duration).sum::<f64>(),
            "t_out": ts(c.t_out),
            "t_in": ts(c.t_in),
            "pb_out": c.pb_out,
            "pd_in": c.pd_in,
            "avl": c.avl,
        },
        "score": {
            "value": c.score,
            "nlength": c.breakdown.nlength,
            "ncrime": c.breakdown.ncrime,
            "navl": c.breakdown.navl,
        },
        "normalization": {
            "max_length": r.max_length,
            "max_crime": r.max_crime,
            "max_avl": r.max_avl,
        },
        "alternatives": alternatives,
    })
}

/// `POST /route`.
pub fn route_doc(engine: &Engine, request: &RouteRequest) -> Result<Value, ApiError> {
    let result = engine.route(&request.query)?;
    Ok(route_result_doc(engine, &request.query, &result))
}
