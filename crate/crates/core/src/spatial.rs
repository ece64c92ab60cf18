//! Buffer queries: per-edge crime counts and nearby-station selection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine, point_to_segment_distance, GeoPoint, GridIndex, DEFAULT_CELL_SIZE_M};
use crate::model::{CrimeRecord, RoadNetwork, StationRegistry};

/// Segments longer than this are checked against every crime instead of
/// through the grid; the search-radius margin below assumes short segments.
const LONG_SEGMENT_M: f64 = 5_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BufferError {
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("max_candidate_stations must be at least 1")]
    NoCandidates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BufferConfig {
    /// Radius around each road edge within which crimes are counted, meters.
    pub crime_buffer_m: f64,
    /// Radius around trip endpoints searched for stations, meters.
    pub station_buffer_m: f64,
    pub max_candidate_stations: usize,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            crime_buffer_m: 50.0,
            station_buffer_m: 500.0,
            max_candidate_stations: 5,
        }
    }
}

impl BufferConfig {
    pub fn validate(&self) -> Result<(), BufferError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.crime_buffer_m) {
            return Err(BufferError::NonPositive("crime_buffer_m"));
        }
        if !positive(self.station_buffer_m) {
            return Err(BufferError::NonPositive("station_buffer_m"));
        }
        if self.max_candidate_stations < 1 {
            return Err(BufferError::NoCandidates);
        }
        Ok(())
    }
}

/// Crimes within `d` meters of each edge's geometry, in edge order. One crime
/// may count toward several edges.
pub fn crime_counts(network: &RoadNetwork, crimes: &[CrimeRecord], d: f64) -> Vec<u32> {
    let index: GridIndex<usize> = GridIndex::build(
        crimes.iter().enumerate().map(|(i, c)| (c.location, i)).collect(),
        DEFAULT_CELL_SIZE_M,
    )
    .expect("default cell size is positive");
    let mut seen = vec![false; crimes.len()];
    network
        .edges()
        .iter()
        .map(|edge| {
            let mut candidates = Vec::new();
            for (a, b) in edge.geometry.segments() {
                let seg = haversine(a, b);
                if seg > LONG_SEGMENT_M {
                    candidates.extend(0..crimes.len());
                } else {
                    candidates.extend(index.query_radius(a, (d + seg) * 1.01 + 1.0));
                }
            }
            let mut count = 0u32;
            for &ci in &candidates {
                if seen[ci] {
                    continue;
                }
                seen[ci] = true;
                let p = crimes[ci].location;
                if edge.geometry.segments().any(|(a, b)| point_to_segment_distance(p, a, b) <= d) {
                    count += 1;
                }
            }
            for &ci in &candidates {
                seen[ci] = false;
            }
            count
        })
        .collect()
}

/// Returns a copy of `network` with every edge's crime count set from `crimes`.
pub fn annotate_crime(network: &RoadNetwork, crimes: &[CrimeRecord], cfg: &BufferConfig) -> RoadNetwork {
    network.with_crime_counts(&crime_counts(network, crimes, cfg.crime_buffer_m))
}

/// Grid index over registry stations.
#[derive(Debug, Clone)]
pub struct StationIndex {
    index: GridIndex<String>,
}

impl StationIndex {
    pub fn new(registry: &StationRegistry) -> Self {
        let points = registry.iter().map(|s| (s.location, s.id.clone())).collect();
        StationIndex {
            index: GridIndex::build(points, DEFAULT_CELL_SIZE_M).expect("default cell size is positive"),
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Stations within the station buffer of `p`, nearest first (ties by id),
/// at most `max_candidate_stations` of them. May be empty.
pub fn candidate_stations(p: GeoPoint, stations: &StationIndex, cfg: &BufferConfig) -> Vec<String> {
    let mut hits = stations.index.query_radius_with_distance(p, cfg.station_buffer_m);
    hits.sort_by(|(ia, da), (ib, db)| da.total_cmp(db).then_with(|| ia.cmp(ib)));
    hits.truncate(cfg.max_candidate_stations);
    hits.into_iter().map(|(id, _)| id).collect()
}
