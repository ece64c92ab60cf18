//! Line-oriented text persistence for [`SnapshotStore`].
//!
//! ```text
//! SAFEBIKE-STORE v1
//! <station_id>\t<YYYY-MM-DD>\t<bucket>\t<bikes>\t<docks>
//! ...
//! END\t<record count>\t<crc32 of all record lines, hex>
//! ```
//!
//! Records are sorted by (station id, date, bucket). Tabs, newlines and
//! backslashes in station ids are backslash-escaped.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use super::IngestError;
use crate::model::{Slot, SnapshotStore, BUCKETS_PER_DAY};

pub const STORE_HEADER: &str = "SAFEBIKE-STORE v1";
const STORE_MAGIC: &str = "SAFEBIKE-STORE";

fn escape(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for c in id.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(raw: &str) -> Option<String> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

/// Renders the store file contents.
pub fn write_store(store: &SnapshotStore) -> String {
    let mut body = String::new();
    let mut count = 0usize;
    for series in store.iter() {
        let id = escape(&series.station_id);
        for (date, bucket, slot) in series.entries() {
            body.push_str(&format!(
                "{id}\t{}\t{bucket}\t{}\t{}\n",
                date.format("%Y-%m-%d"),
                slot.bikes,
                slot.docks
            ));
            count += 1;
        }
    }
    let crc = crc32fast::hash(body.as_bytes());
    format!("{STORE_HEADER}\n{body}END\t{count}\t{crc:08x}\n")
}

/// Parses store file contents.
pub fn read_store(text: &[u8]) -> Result<SnapshotStore, IngestError> {
    let corrupt = |line: usize, message: &str| IngestError::StoreCorrupt { line, message: message.to_string() };
    let text = std::str::from_utf8(text).map_err(|e| {
        let line = text[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        corrupt(line, "invalid UTF-8")
    })?;
    let mut lines = text.split_inclusive('\n');
    let header = lines
        .next()
        .ok_or_else(|| IngestError::StoreTruncated("empty file".into()))?;
    let header = header.trim_end_matches('\n');
    if header != STORE_HEADER {
        return Err(if header.starts_with(STORE_MAGIC) {
            IngestError::StoreVersion(header.to_string())
        } else {
            corrupt(1, "missing store header")
        });
    }

    let mut store = SnapshotStore::new();
    let mut hasher = crc32fast::Hasher::new();
    let mut count = 0usize;
    let mut last_key: Option<(String, NaiveDate, usize)> = None;
    for (i, raw) in lines.by_ref().enumerate() {
        let lineno = i + 2;
        let Some(line) = raw.strip_suffix('\n') else {
            return Err(IngestError::StoreTruncated(format!("line {lineno} has no terminator")));
        };
        if let Some(trailer) = line.strip_prefix("END\t") {
            let (n, crc) = trailer
                .split_once('\t')
                .ok_or_else(|| corrupt(lineno, "malformed trailer"))?;
            if n != count.to_string() {
                return Err(corrupt(lineno, &format!("trailer says {n:?} records, found {count}")));
            }
            if crc != format!("{:08x}", hasher.finalize()) {
                return Err(corrupt(lineno, "checksum mismatch"));
            }
            if lines.next().is_some() {
                return Err(corrupt(lineno + 1, "data after trailer"));
            }
            return Ok(store);
        }
        hasher.update(raw.as_bytes());
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, date, bucket, bikes, docks] = fields[..] else {
            return Err(corrupt(lineno, "expected 5 fields"));
        };
        let id = unescape(id).ok_or_else(|| corrupt(lineno, "bad escape in station id"))?;
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| corrupt(lineno, "bad date"))?;
        let bucket: usize = bucket.parse().map_err(|_| corrupt(lineno, "bad bucket"))?;
        if bucket >= BUCKETS_PER_DAY {
            return Err(corrupt(lineno, "bucket out of range"));
        }
        let bikes: u32 = bikes.parse().map_err(|_| corrupt(lineno, "bad bikes count"))?;
        let docks: u32 = docks.parse().map_err(|_| corrupt(lineno, "bad docks count"))?;
        let key = (id, date, bucket);
        if last_key.as_ref().is_some_and(|prev| *prev >= key) {
            return Err(corrupt(lineno, "records out of order"));
        }
        store.series_mut(&key.0).insert(date, bucket, Slot { bikes, docks });
        last_key = Some(key);
        count += 1;
    }
    Err(IngestError::StoreTruncated("missing END trailer".into()))
}

pub fn save_store(store: &SnapshotStore, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(write_store(store).as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_store(path: impl AsRef<Path>) -> Result<SnapshotStore, IngestError> {
    read_store(&fs::read(path)?)
}
