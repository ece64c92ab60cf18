//! Engine configuration file.
//!
//! TOML key/value text. Relative paths resolve against the directory holding
//! the config file.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `station_info` | station information JSON | required |
//! | `status_archive` | JSON Lines of status snapshots | optional |
//! | `crime_csv` | crime incidents CSV | required |
//! | `road_network` | GeoJSON LineStrings | required |
//! | `snapshot_store` | snapshot store file (written by `ingest`) | optional |
//! | `annotated_network` | output GeoJSON with crime counts (`ingest`) | optional |
//! | `timezone` | IANA zone used for buckets and weekdays | `America/New_York` |
//! | `horizon` | default forecast buckets | `6` |
//! | `listen` | HTTP listen address | `127.0.0.1:8080` |
//! | `now` | fixed RFC 3339 "now" for default departures | wall clock |
//! | `history_start`, `history_end` | inclusive profile date window | all history |
//! | `poll_interval_secs` | reload inputs while serving; 0 disables | `0` |
//! | `[buffers]` | `crime_buffer_m`, `station_buffer_m`, `max_candidate_stations` | 50, 500, 5 |
//! | `[speeds]` | `walk_kmh`, `bike_kmh` | 5, 15 |

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use chrono_tz::Tz;
use serde::Deserialize;

use super::EngineError;
use crate::predict::{DateWindow, DEFAULT_HORIZON};
use crate::routing::Speeds;
use crate::spatial::BufferConfig;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub station_info: PathBuf,
    #[serde(default)]
    pub status_archive: Option<PathBuf>,
    pub crime_csv: PathBuf,
    pub road_network: PathBuf,
    #[serde(default)]
    pub snapshot_store: Option<PathBuf>,
    #[serde(default)]
    pub annotated_network: Option<PathBuf>,
    #[serde(default = "default_timezone")]
    pub timezone: String,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default)]
    pub now: Option<DateTime<Utc>>,
    #[serde(default)]
    pub history_start: Option<NaiveDate>,
    #[serde(default)]
    pub history_end: Option<NaiveDate>,
    #[serde(default)]
    pub poll_interval_secs: u64,
    #[serde(default)]
    pub buffers: BufferConfig,
    #[serde(default)]
    pub speeds: Speeds,
}

fn default_timezone() -> String {
    "America/New_York".into()
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

impl EngineConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, EngineError> {
        let mut cfg: EngineConfig = toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.station_info);
        fix(&mut self.crime_csv);
        fix(&mut self.road_network);
        for p in [&mut self.status_archive, &mut self.snapshot_store, &mut self.annotated_network]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        self.tz()?;
        if self.horizon < 1 {
            return Err(EngineError::Config("horizon must be at least 1".into()));
        }
        self.buffers.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        for (name, v) in [("walk_kmh", self.speeds.walk_kmh), ("bike_kmh", self.speeds.bike_kmh)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EngineError::Config(format!("speeds.{name} must be positive")));
            }
        }
        if self.status_archive.is_none() && self.snapshot_store.is_none() {
            return Err(EngineError::Config(
                "one of status_archive or snapshot_store must be configured".into(),
            ));
        }
        Ok(())
    }

    pub fn tz(&self) -> Result<Tz, EngineError> {
        self.timezone
            .parse()
            .map_err(|_| EngineError::Config(format!("unknown timezone {:?}", self.timezone)))
    }

    pub fn date_window(&self) -> DateWindow {
        DateWindow { start: self.history_start, end: self.history_end }
    }
}
