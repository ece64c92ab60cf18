use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use chrono_tz::Tz;
use serde::Serialize;

use super::{EngineConfig, EngineError};
use crate::ingest::{
    append_snapshots, load_store, parse_crime_csv, parse_road_geojson, parse_station_info, parse_status_archive,
    reconcile_statuses, IngestError, IngestReport,
};
use crate::model::{bucket_start_utc, CrimeRecord, RoadNetwork, SnapshotStore, StationRegistry, StationStatus};
use crate::predict::{build_profile, predict, predict_at, AvgProfile, PredictError, PredictionVector};
use crate::routing::{route, RouteQuery, RouteResult, RoutingContext, RoutingError};
use crate::spatial::{annotate_crime, StationIndex};

/// Reports from one ingestion pass, by input.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadReports {
    pub station_info: IngestReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status_archive: Option<IngestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status_reconcile: Option<IngestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<IngestReport>,
    pub crime_csv: IngestReport,
    pub road_network: IngestReport,
}

/// Parsed and joined inputs, before profiles are built.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub registry: StationRegistry,
    pub store: SnapshotStore,
    pub crimes: Vec<CrimeRecord>,
    /// Crime counts already applied.
    pub network: RoadNetwork,
    pub reports: LoadReports,
}

fn read_input(key: &'static str, path: &Path) -> Result<Vec<u8>, EngineError> {
    if !path.exists() {
        return Err(EngineError::MissingInput { key, path: path.to_path_buf() });
    }
    fs::read(path).map_err(|e| EngineError::Input { key, source: IngestError::Io(e) })
}

fn tag<T>(key: &'static str, r: Result<T, IngestError>) -> Result<T, EngineError> {
    r.map_err(|source| EngineError::Input { key, source })
}

/// Reads every configured input. The snapshot store, when present, is loaded
/// first and the status archive is replayed on top of it.
pub fn ingest_inputs(cfg: &EngineConfig) -> Result<Ingested, EngineError> {
    let tz = cfg.tz()?;
    // Read everything up front so a missing file is reported before parsing.
    let station_bytes = read_input("station_info", &cfg.station_info)?;
    let crime_bytes = read_input("crime_csv", &cfg.crime_csv)?;
    let road_bytes = read_input("road_network", &cfg.road_network)?;
    let archive_bytes = cfg
        .status_archive
        .as_deref()
        .map(|p| read_input("status_archive", p))
        .transpose()?;
    let store_exists = cfg.snapshot_store.as_deref().is_some_and(Path::exists);
    if archive_bytes.is_none() && !store_exists {
        let path = cfg.snapshot_store.clone().unwrap_or_default();
        return Err(EngineError::MissingInput { key: "snapshot_store", path });
    }

    let (registry, station_report) = tag("station_info", parse_station_info(&station_bytes))?;
    let mut store = match cfg.snapshot_store.as_deref() {
        Some(p) if store_exists => tag("snapshot_store", load_store(p))?,
        _ => SnapshotStore::new(),
    };
    let mut reports = LoadReports { station_info: station_report, ..Default::default() };
    if let Some(bytes) = archive_bytes {
        let (statuses, archive_report) = tag("status_archive", parse_status_archive(&bytes))?;
        let (statuses, reconcile_report) = reconcile_statuses(statuses, &registry);
        reports.snapshots = Some(append_snapshots(&mut store, &statuses, tz));
        reports.status_archive = Some(archive_report);
        reports.status_reconcile = Some(reconcile_report);
    }
    let (crimes, crime_report) = tag("crime_csv", parse_crime_csv(&crime_bytes))?;
    let (network, road_report) = tag("road_network", parse_road_geojson(&road_bytes))?;
    reports.crime_csv = crime_report;
    reports.road_network = road_report;
    let network = annotate_crime(&network, &crimes, &cfg.buffers);
    Ok(Ingested { registry, store, crimes, network, reports })
}

/// Immutable engine state: everything a query needs.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    tz: Tz,
    registry: StationRegistry,
    store: SnapshotStore,
    network: RoadNetwork,
    stations: StationIndex,
    profiles: BTreeMap<String, AvgProfile>,
    current: BTreeMap<String, StationStatus>,
    reports: LoadReports,
}

impl Engine {
    pub fn load(config: EngineConfig) -> Result<Engine, EngineError> {
        let ingested = ingest_inputs(&config)?;
        Engine::from_ingested(config, ingested)
    }

    pub fn from_ingested(config: EngineConfig, ingested: Ingested) -> Result<Engine, EngineError> {
        let tz = config.tz()?;
        let Ingested { registry, store, network, reports, .. } = ingested;
        let window = config.date_window();
        let mut profiles = BTreeMap::new();
        let mut current = BTreeMap::new();
        for station in registry.iter() {
            profiles.insert(station.id.clone(), build_profile(&store, &station.id, window));
            if let Some((date, bucket, slot)) = store.series(&station.id).and_then(|s| s.latest()) {
                current.insert(
                    station.id.clone(),
                    StationStatus {
                        station_id: station.id.clone(),
                        bikes: slot.bikes,
                        docks: slot.docks,
                        timestamp: bucket_start_utc(date, bucket, tz),
                    },
                );
            }
        }
        Ok(Engine {
            stations: StationIndex::new(&registry),
            config,
            tz,
            registry,
            store,
            network,
            profiles,
            current,
            reports,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn tz(&self) -> Tz {
        self.tz
    }

    pub fn registry(&self) -> &StationRegistry {
        &self.registry
    }

    pub fn store(&self) -> &SnapshotStore {
        &self.store
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    pub fn reports(&self) -> &LoadReports {
        &self.reports
    }

    pub fn profile(&self, station_id: &str) -> Option<&AvgProfile> {
        self.profiles.get(station_id)
    }

    /// Latest stored reading, stamped at the start of its bucket.
    pub fn current_status(&self, station_id: &str) -> Option<&StationStatus> {
        self.current.get(station_id)
    }

    /// Configured fixed "now", or the wall clock.
    pub fn now(&self) -> DateTime<Utc> {
        self.config.now.unwrap_or_else(Utc::now)
    }

    pub fn predict(&self, station_id: &str, horizon: usize) -> Option<Result<PredictionVector, PredictError>> {
        let station = self.registry.get(station_id)?;
        let current = self.current_status(station_id)?;
        let profile = self.profiles.get(station_id)?;
        Some(predict(profile, current, horizon, station.capacity, self.tz))
    }

    /// Predicted (bikes, docks) at `when`. Instants before the latest reading
    /// use that reading; instants more than a day past it are unknown.
    pub fn availability_at(&self, station_id: &str, when: DateTime<Utc>) -> Option<(f64, f64)> {
        let station = self.registry.get(station_id)?;
        let current = self.current_status(station_id)?;
        let profile = self.profiles.get(station_id)?;
        let when = when.max(current.timestamp);
        predict_at(profile, current, when, station.capacity, self.tz).ok()
    }

    pub fn route(&self, query: &RouteQuery) -> Result<RouteResult, RoutingError> {
        let availability = |id: &str, t: DateTime<Utc>| self.availability_at(id, t);
        let ctx = RoutingContext {
            network: &self.network,
            registry: &self.registry,
            stations: &self.stations,
            buffers: &self.config.buffers,
            speeds: &self.config.speeds,
            availability: &availability,
        };
        route(query, &ctx)
    }
}
