//! Domain types shared across the engine.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveTime, TimeZone, Timelike, Utc, Weekday};
use chrono_tz::Tz;
use serde::Serialize;
use thiserror::Error;

use crate::geo::{haversine, polyline_length, GeoPoint, Polyline};

/// Ten-minute buckets per local day.
pub const BUCKETS_PER_DAY: usize = 144;
pub const BUCKET_MINUTES: u32 = 10;

/// Endpoint/node coincidence tolerance for road geometry, meters.
pub const SNAP_TOLERANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("edge {edge_id}: references missing node {node}")]
    MissingNode { edge_id: String, node: usize },
    #[error("edge {edge_id}: geometry endpoint is {distance:.3} m from node {node}")]
    DetachedEndpoint { edge_id: String, node: usize, distance: f64 },
    #[error("weights must be finite and non-negative: ({0}, {1}, {2})")]
    NegativeWeight(f64, f64, f64),
    #[error("weights are all zero")]
    ZeroWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Station {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub capacity: u32,
}

/// Stations keyed by id, iterated in id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StationRegistry {
    stations: BTreeMap<String, Station>,
}

impl StationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces; returns the replaced station.
    pub fn insert(&mut self, station: Station) -> Option<Station> {
        self.stations.insert(station.id.clone(), station)
    }

    pub fn get(&self, id: &str) -> Option<&Station> {
        self.stations.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.stations.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Station> {
        self.stations.values()
    }
}

impl FromIterator<Station> for StationRegistry {
    fn from_iter<I: IntoIterator<Item = Station>>(iter: I) -> Self {
        let mut reg = StationRegistry::new();
        for s in iter {
            reg.insert(s);
        }
        reg
    }
}

/// One station reading at an instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationStatus {
    pub station_id: String,
    pub bikes: u32,
    pub docks: u32,
    pub timestamp: DateTime<Utc>,
}

impl StationStatus {
    /// Disabled units may leave `bikes + docks` short of capacity, never over.
    pub fn fits_capacity(&self, capacity: u32) -> bool {
        self.bikes as u64 + self.docks as u64 <= capacity as u64
    }
}

/// Bike/dock counts held in one bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub bikes: u32,
    pub docks: u32,
}

pub type DaySlots = Box<[Option<Slot>; BUCKETS_PER_DAY]>;

fn empty_day() -> DaySlots {
    Box::new([None; BUCKETS_PER_DAY])
}

/// Per-date bucket arrays for one station.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSeries {
    pub station_id: String,
    days: BTreeMap<NaiveDate, DaySlots>,
}

impl SnapshotSeries {
    pub fn new(station_id: impl Into<String>) -> Self {
        SnapshotSeries {
            station_id: station_id.into(),
            days: BTreeMap::new(),
        }
    }

    /// Writes a bucket; the previous value, if any, is returned and replaced.
    pub fn insert(&mut self, date: NaiveDate, bucket: usize, slot: Slot) -> Option<Slot> {
        assert!(bucket < BUCKETS_PER_DAY, "bucket {bucket} out of range");
        let day = self.days.entry(date).or_insert_with(empty_day);
        day[bucket].replace(slot)
    }

    pub fn get(&self, date: NaiveDate, bucket: usize) -> Option<Slot> {
        self.days.get(&date).and_then(|d| d.get(bucket).copied().flatten())
    }

    pub fn day(&self, date: NaiveDate) -> Option<&[Option<Slot>; BUCKETS_PER_DAY]> {
        self.days.get(&date).map(|d| &**d)
    }

    pub fn days(&self) -> impl Iterator<Item = (NaiveDate, &[Option<Slot>; BUCKETS_PER_DAY])> {
        self.days.iter().map(|(d, s)| (*d, &**s))
    }

    /// Filled buckets in (date, bucket) order.
    pub fn entries(&self) -> impl Iterator<Item = (NaiveDate, usize, Slot)> + '_ {
        self.days.iter().flat_map(|(d, slots)| {
            slots
                .iter()
                .enumerate()
                .filter_map(move |(b, s)| s.map(|s| (*d, b, s)))
        })
    }

    pub fn latest(&self) -> Option<(NaiveDate, usize, Slot)> {
        self.days.iter().rev().find_map(|(d, slots)| {
            slots
                .iter()
                .enumerate()
                .rev()
                .find_map(|(b, s)| s.map(|s| (*d, b, s)))
        })
    }

    pub fn filled(&self) -> usize {
        self.days.values().map(|d| d.iter().filter(|s| s.is_some()).count()).sum()
    }
}

/// Historical snapshots for every station seen in the feeds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotStore {
    series: BTreeMap<String, SnapshotSeries>,
}

impl SnapshotStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn series(&self, station_id: &str) -> Option<&SnapshotSeries> {
        self.series.get(station_id)
    }

    pub fn series_mut(&mut self, station_id: &str) -> &mut SnapshotSeries {
        self.series
            .entry(station_id.to_string())
            .or_insert_with(|| SnapshotSeries::new(station_id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &SnapshotSeries> {
        self.series.values()
    }

    pub fn station_count(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrimeRecord {
    pub id: String,
    pub location: GeoPoint,
    pub occurred_at: NaiveDate,
    pub category: String,
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: NodeId,
    pub to: NodeId,
    pub geometry: Polyline,
    pub length: f64,
    pub crime_count: u32,
}

impl Edge {
    pub fn other_end(&self, node: NodeId) -> NodeId {
        if node == self.from {
            self.to
        } else {
            self.from
        }
    }
}

/// Edge description handed to [`RoadNetwork::new`]; length is derived.
#[derive(Debug, Clone)]
pub struct EdgeInput {
    pub id: String,
    pub from: NodeId,
    pub to: NodeId,
    pub geometry: Polyline,
    pub crime_count: u32,
}

/// Undirected road graph with per-edge length and crime counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    nodes: Vec<GeoPoint>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<GeoPoint>, edges: Vec<EdgeInput>) -> Result<Self, ModelError> {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut built = Vec::with_capacity(edges.len());
        for (idx, e) in edges.into_iter().enumerate() {
            for (node, end) in [(e.from, e.geometry.first()), (e.to, e.geometry.last())] {
                let Some(&pos) = nodes.get(node) else {
                    return Err(ModelError::MissingNode { edge_id: e.id, node });
                };
                let distance = haversine(pos, end);
                if distance > SNAP_TOLERANCE_M {
                    return Err(ModelError::DetachedEndpoint { edge_id: e.id, node, distance });
                }
            }
            adjacency[e.from].push(idx);
            if e.to != e.from {
                adjacency[e.to].push(idx);
            }
            let length = polyline_length(&e.geometry);
            built.push(Edge {
                id: e.id,
                from: e.from,
                to: e.to,
                geometry: e.geometry,
                length,
                crime_count: e.crime_count,
            });
        }
        Ok(RoadNetwork { nodes, edges: built, adjacency })
    }

    pub fn empty() -> Self {
        RoadNetwork { nodes: Vec::new(), edges: Vec::new(), adjacency: Vec::new() }
    }

    pub fn nodes(&self) -> &[GeoPoint] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> GeoPoint {
        self.nodes[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    /// Indices of edges incident to `node`.
    pub fn incident(&self, node: NodeId) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Copy with replaced crime counts, one per edge in edge order.
    pub fn with_crime_counts(&self, counts: &[u32]) -> RoadNetwork {
        assert_eq!(counts.len(), self.edges.len());
        let mut out = self.clone();
        for (e, &c) in out.edges.iter_mut().zip(counts) {
            e.crime_count = c;
        }
        out
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn max_edge_crime(&self) -> u32 {
        self.edges.iter().map(|e| e.crime_count).max().unwrap_or(0)
    }
}

/// Normalized factor distribution over length, crime and availability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl FactorWeights {
    pub const SHORTEST: FactorWeights = FactorWeights { alpha: 1.0, beta: 0.0, gamma: 0.0 };
    pub const SAFEST: FactorWeights = FactorWeights { alpha: 0.0, beta: 1.0, gamma: 0.0 };

    /// Scales any non-negative triple onto the unit-sum plane.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, ModelError> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !(ok(alpha) && ok(beta) && ok(gamma)) {
            return Err(ModelError::NegativeWeight(alpha, beta, gamma));
        }
        let sum = alpha + beta + gamma;
        if sum <= 0.0 {
            return Err(ModelError::ZeroWeights);
        }
        Ok(FactorWeights { alpha: alpha / sum, beta: beta / sum, gamma: gamma / sum })
    }

    pub fn sum(&self) -> f64 {
        self.alpha + self.beta + self.gamma
    }
}

impl Default for FactorWeights {
    fn default() -> Self {
        FactorWeights { alpha: 0.3, beta: 0.3, gamma: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TravelMode {
    Walk,
    Bike,
}

impl fmt::Display for TravelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TravelMode::Walk => f.write_str("walk"),
            TravelMode::Bike => f.write_str("bike"),
        }
    }
}

/// One sub-route of a trip.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteLeg {
    pub mode: TravelMode,
    pub node_path: Vec<NodeId>,
    /// Edge indices traversed, in order.
    pub edge_path: Vec<usize>,
    pub geometry: Polyline,
    pub length: f64,
    pub crime_total: u64,
    /// Seconds.
    pub duration: f64,
}

impl RouteLeg {
    /// Assembles a leg from a node path and the edges joining it.
    pub fn from_path(
        network: &RoadNetwork,
        mode: TravelMode,
        node_path: Vec<NodeId>,
        edge_path: Vec<usize>,
        speed_mps: f64,
    ) -> RouteLeg {
        debug_assert_eq!(node_path.len(), edge_path.len() + 1);
        let mut points: Vec<GeoPoint> = vec![network.node(node_path[0])];
        let mut length = 0.0;
        let mut crime_total = 0u64;
        for (i, &ei) in edge_path.iter().enumerate() {
            let e = network.edge(ei);
            length += e.length;
            crime_total += e.crime_count as u64;
            let forward = e.from == node_path[i] && e.to == node_path[i + 1];
            let pts = e.geometry.points();
            if forward {
                points.extend_from_slice(&pts[1..]);
            } else {
                points.extend(pts[..pts.len() - 1].iter().rev());
            }
        }
        if points.len() == 1 {
            points.push(points[0]);
        }
        RouteLeg {
            mode,
            geometry: Polyline::new(points).expect("at least two points"),
            node_path,
            edge_path,
            length,
            crime_total,
            duration: length / speed_mps,
        }
    }
}

/// Normalized terms of a candidate's score.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ScoreBreakdown {
    pub nlength: f64,
    pub ncrime: f64,
    pub navl: f64,
}

/// A walk/bike/walk route through one (origin, destination) station pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRoute {
    pub origin_station_id: String,
    pub destination_station_id: String,
    pub legs: [RouteLeg; 3],
    pub total_length: f64,
    pub total_crime: u64,
    pub t_out: DateTime<Utc>,
    pub t_in: DateTime<Utc>,
    /// Predicted bikes at the origin station at `t_out`.
    pub pb_out: f64,
    /// Predicted docks at the destination station at `t_in`.
    pub pd_in: f64,
    pub avl: f64,
    pub score: f64,
    pub breakdown: ScoreBreakdown,
}

/// Weekday flag W(d).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DayKind {
    Weekday = 0,
    Weekend = 1,
}

impl DayKind {
    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn weekday_flag(d: NaiveDate) -> DayKind {
    match d.weekday() {
        Weekday::Sat | Weekday::Sun => DayKind::Weekend,
        _ => DayKind::Weekday,
    }
}

pub fn bucket_of<T: Timelike>(t: &T) -> usize {
    ((t.hour() * 60 + t.minute()) / BUCKET_MINUTES) as usize
}

pub fn bucket_start_time(bucket: usize) -> NaiveTime {
    let minutes = bucket as u32 * BUCKET_MINUTES;
    NaiveTime::from_hms_opt(minutes / 60, minutes % 60, 0).expect("bucket in range")
}

/// Local (date, bucket) slot of a UTC instant.
pub fn local_slot(ts: DateTime<Utc>, tz: Tz) -> (NaiveDate, usize) {
    let local = ts.with_timezone(&tz);
    (local.date_naive(), bucket_of(&local))
}

/// UTC instant at which a local bucket begins. Buckets inside a DST gap
/// start at the first valid instant after it.
pub fn bucket_start_utc(date: NaiveDate, bucket: usize, tz: Tz) -> DateTime<Utc> {
    let naive = date.and_time(bucket_start_time(bucket));
    let mut probe = naive;
    for _ in 0..=12 {
        if let Some(t) = tz.from_local_datetime(&probe).earliest() {
            return t.with_timezone(&Utc);
        }
        probe += Duration::minutes(10);
    }
    Utc.from_utc_datetime(&naive)
}

/// Step `offset` buckets forward from (date, bucket), crossing midnight as needed.
pub fn advance_slot(date: NaiveDate, bucket: usize, offset: usize) -> (NaiveDate, usize) {
    let total = bucket + offset;
    let days = (total / BUCKETS_PER_DAY) as i64;
    (date + Duration::days(days), total % BUCKETS_PER_DAY)
}
