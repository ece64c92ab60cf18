use std::collections::{HashMap, HashSet};

use serde_json::{json, Value};

use super::{parse_json, IngestError, IngestReport};
use crate::geo::{haversine, GeoPoint, Polyline};
use crate::model::{EdgeInput, NodeId, RoadNetwork, SNAP_TOLERANCE_M};

/// Snap cells are 1e-4 degrees; neighbouring cells cover the tolerance
/// wherever a cell is at least 1 m wide in longitude.
const SNAP_CELL_DEG: f64 = 1e-4;
const SNAP_GRID_MAX_LAT: f64 = 84.0;

#[derive(Default)]
struct NodeSnapper {
    nodes: Vec<GeoPoint>,
    cells: HashMap<(i64, i64), Vec<NodeId>>,
}

impl NodeSnapper {
    fn key(p: GeoPoint) -> (i64, i64) {
        (
            (p.lat() / SNAP_CELL_DEG).floor() as i64,
            (p.lon() / SNAP_CELL_DEG).floor() as i64,
        )
    }

    /// Nearest existing node within tolerance (lowest id on ties), or a new one.
    fn snap(&mut self, p: GeoPoint) -> NodeId {
        let mut best: Option<(f64, NodeId)> = None;
        let mut consider = |id: NodeId, nodes: &[GeoPoint]| {
            let d = haversine(p, nodes[id]);
            if d <= SNAP_TOLERANCE_M && best.is_none_or(|(bd, bi)| d < bd || (d == bd && id < bi)) {
                best = Some((d, id));
            }
        };
        if p.lat().abs() <= SNAP_GRID_MAX_LAT {
            let (ky, kx) = Self::key(p);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(ids) = self.cells.get(&(ky + dy, kx + dx)) {
                        for &id in ids {
                            consider(id, &self.nodes);
                        }
                    }
                }
            }
        } else {
            for id in 0..self.nodes.len() {
                consider(id, &self.nodes);
            }
        }
        if let Some((_, id)) = best {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(p);
        self.cells.entry(Self::key(p)).or_default().push(id);
        id
    }
}

fn parse_feature(f: &Value) -> Result<(String, Polyline, u32), &'static str> {
    let obj = f.as_object().ok_or("not an object")?;
    let geometry = match obj.get("geometry") {
        None | Some(Value::Null) => return Err("missing geometry"),
        Some(g) => g,
    };
    if geometry.get("type").and_then(Value::as_str) != Some("LineString") {
        return Err("unsupported geometry");
    }
    let coords = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or("missing coordinates")?;
    if coords.len() < 2 {
        return Err("too few coordinates");
    }
    let mut points = Vec::with_capacity(coords.len());
    for c in coords {
        let pair = c.as_array().ok_or("invalid coordinate")?;
        let (Some(lon), Some(lat)) = (
            pair.first().and_then(Value::as_f64),
            pair.get(1).and_then(Value::as_f64),
        ) else {
            return Err("invalid coordinate");
        };
        points.push(GeoPoint::new(lat, lon).map_err(|_| "invalid coordinate")?);
    }
    let props = obj.get("properties").and_then(Value::as_object);
    let edge_id = props
        .and_then(|p| super::id_field(p, "edge_id"))
        .ok_or("missing edge_id")?;
    let crime_count = match props.and_then(|p| p.get("crime_count")) {
        None | Some(Value::Null) => 0,
        Some(v) => v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or("invalid crime_count")?,
    };
    let polyline = Polyline::new(points).map_err(|_| "too few coordinates")?;
    Ok((edge_id, polyline, crime_count))
}

/// Builds an undirected road graph from a FeatureCollection of LineStrings.
///
/// Nodes are synthesized from edge endpoints, merging endpoints that lie
/// within 1 m of an existing node. Edge lengths are recomputed from geometry.
/// A `crime_count` property, when present, is carried over (annotated
/// networks written by [`serialize_road_geojson`] round-trip); otherwise
/// counts start at zero.
pub fn parse_road_geojson(bytes: &[u8]) -> Result<(RoadNetwork, IngestReport), IngestError> {
    let doc = parse_json(bytes)?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::Structure("road network: expected a FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Structure("road network: missing \"features\" array".into()))?;
    let mut report = IngestReport::default();
    let mut snapper = NodeSnapper::default();
    let mut edges = Vec::new();
    let mut ids = HashSet::new();
    for (i, f) in features.iter().enumerate() {
        let (id, geometry, crime_count) = match parse_feature(f) {
            Ok(parsed) => parsed,
            Err(reason) => {
                report.reject(i, reason);
                continue;
            }
        };
        if !ids.insert(id.clone()) {
            report.reject(i, "duplicate edge_id");
            continue;
        }
        let from = snapper.snap(geometry.first());
        let to = snapper.snap(geometry.last());
        edges.push(EdgeInput { id, from, to, geometry, crime_count });
        report.keep();
    }
    let network = RoadNetwork::new(snapper.nodes, edges)
        .map_err(|e| IngestError::Structure(format!("road network: {e}")))?;
    Ok((network, report))
}

pub fn serialize_road_geojson(network: &RoadNetwork) -> String {
    let features: Vec<Value> = network
        .edges()
        .iter()
        .map(|e| {
            let coords: Vec<[f64; 2]> = e.geometry.points().iter().map(GeoPoint::lon_lat).collect();
            json!({
                "type": "Feature",
                "properties": {
                    "edge_id": e.id,
                    "length": e.length,
                    "crime_count": e.crime_count,
                },
                "geometry": { "type": "LineString", "coordinates": coords },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features }).to_string()
}
