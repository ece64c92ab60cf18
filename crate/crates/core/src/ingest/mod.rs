//! Parsers for the station, status, crime and road inputs, plus the
//! snapshot store file.
//!
//! Structural problems with a whole document (bad JSON, missing top-level
//! keys, absent CSV columns) are hard errors. Problems with individual records
//! are counted in an [`IngestReport`] and the record is skipped.

mod crime;
mod feeds;
mod roads;
mod store;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use crime::{parse_crime_csv, serialize_crime_csv};
pub use feeds::{
    append_snapshots, parse_station_info, parse_status_archive, parse_status_snapshot,
    reconcile_statuses, serialize_station_info, serialize_status_snapshot,
};
pub use roads::{parse_road_geojson, serialize_road_geojson};
pub use store::{load_store, read_store, save_store, write_store, STORE_HEADER};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed JSON at byte {offset}: {message}")]
    MalformedJson { offset: usize, message: String },
    #[error("{0}")]
    Structure(String),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unsupported store version: {0:?}")]
    StoreVersion(String),
    #[error("store truncated: {0}")]
    StoreTruncated(String),
    #[error("store corrupt at line {line}: {message}")]
    StoreCorrupt { line: usize, message: String },
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// One skipped record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    /// Position of the record: array index for JSON inputs, 1-based data row
    /// for CSV, 1-based line for archives.
    pub index: usize,
    pub reason: String,
}

/// Per-input accounting. `records_read == records_kept + records_rejected`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub records_read: usize,
    pub records_kept: usize,
    pub records_rejected: usize,
    pub rejection_reasons: BTreeMap<String, usize>,
    /// Kept records that carry a warning, by reason.
    pub flagged: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rejections: Vec<Rejection>,
}

impl IngestReport {
    pub(crate) fn keep(&mut self) {
        self.records_read += 1;
        self.records_kept += 1;
    }

    pub(crate) fn reject(&mut self, index: usize, reason: impl Into<String>) {
        let reason = reason.into();
        self.records_read += 1;
        self.records_rejected += 1;
        *self.rejection_reasons.entry(reason.clone()).or_default() += 1;
        self.rejections.push(Rejection { index, reason });
    }

    pub(crate) fn flag(&mut self, reason: &str) {
        *self.flagged.entry(reason.to_string()).or_default() += 1;
    }

    /// Turns a kept record into a rejected one (used when a later record
    /// supersedes it).
    pub(crate) fn demote(&mut self, index: usize, reason: &str) {
        self.records_kept -= 1;
        self.records_read -= 1;
        self.reject(index, reason);
    }

    pub fn merge(&mut self, other: IngestReport) {
        self.records_read += other.records_read;
        self.records_kept += other.records_kept;
        self.records_rejected += other.records_rejected;
        for (k, v) in other.rejection_reasons {
            *self.rejection_reasons.entry(k).or_default() += v;
        }
        for (k, v) in other.flagged {
            *self.flagged.entry(k).or_default() += v;
        }
        self.rejections.extend(other.rejections);
    }

    pub fn is_balanced(&self) -> bool {
        self.records_read == self.records_kept + self.records_rejected
    }
}

pub(crate) fn parse_json(bytes: &[u8]) -> Result<serde_json::Value, IngestError> {
    serde_json::from_slice(bytes).map_err(|e| json_error(bytes, &e))
}

/// Converts serde_json's line/column into a byte offset.
pub(crate) fn json_error(bytes: &[u8], e: &serde_json::Error) -> IngestError {
    let mut offset = 0usize;
    let mut line = 1usize;
    if e.line() > 0 {
        for (i, &b) in bytes.iter().enumerate() {
            if line == e.line() {
                offset = i + e.column().saturating_sub(1);
                break;
            }
            if b == b'\n' {
                line += 1;
            }
            offset = i + 1;
        }
    }
    IngestError::MalformedJson {
        offset: offset.min(bytes.len()),
        message: e.to_string(),
    }
}

/// Accepts string or integer ids, as feeds publish both.
pub(crate) fn id_field(obj: &serde_json::Map<String, serde_json::Value>, key: &str) -> Option<String> {
    match obj.get(key)? {
        serde_json::Value::String(s) if !s.is_empty() => Some(s.clone()),
        serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => Some(n.to_string()),
        _ => None,
    }
}
