use chrono::NaiveDate;

use super::{IngestError, IngestReport};
use crate::geo::{GeoError, GeoPoint};
use crate::model::CrimeRecord;

const COLUMNS: [&str; 5] = ["id", "latitude", "longitude", "date", "category"];

/// Accepts ISO dates, ISO date-times, and `MM/DD/YYYY` (optionally followed by
/// a time, as open-data exports do).
fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let head = raw.split(['T', ' ']).next()?;
    NaiveDate::parse_from_str(head, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(head, "%m/%d/%Y"))
        .ok()
}

fn parse_row(fields: &[&str]) -> Result<CrimeRecord, &'static str> {
    let [id, lat, lon, date, category] = fields else {
        return Err("unparseable row");
    };
    let id = id.trim();
    if id.is_empty() {
        return Err("missing id");
    }
    let (lat, lon) = (lat.trim(), lon.trim());
    if lat.is_empty() || lon.is_empty() {
        return Err("missing coordinate");
    }
    let lat: f64 = lat.parse().map_err(|_| "invalid coordinate")?;
    let lon: f64 = lon.parse().map_err(|_| "invalid coordinate")?;
    let location = GeoPoint::new(lat, lon).map_err(|e| match e {
        GeoError::LatOutOfRange(_) => "lat out of range",
        _ => "lon out of range",
    })?;
    let occurred_at = parse_date(date).ok_or("invalid date")?;
    Ok(CrimeRecord {
        id: id.to_string(),
        location,
        occurred_at,
        category: category.trim().to_string(),
    })
}

/// Parses a crime CSV. Column order is free and extra columns are ignored.
/// Rejections carry the 1-based data-row number.
pub fn parse_crime_csv(bytes: &[u8]) -> Result<(Vec<CrimeRecord>, IngestReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(bytes);
    let headers = reader.headers()?.clone();
    let mut positions = [0usize; 5];
    for (slot, name) in positions.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| IngestError::Structure(format!("crime CSV: missing column {name:?}")))?;
    }
    let mut report = IngestReport::default();
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let parsed = match row {
            Ok(rec) => {
                let fields: Option<Vec<&str>> = positions.iter().map(|&p| rec.get(p)).collect();
                match fields {
                    Some(f) => parse_row(&f),
                    None => Err("unparseable row"),
                }
            }
            Err(_) => Err("unparseable row"),
        };
        match parsed {
            Ok(c) => {
                report.keep();
                out.push(c);
            }
            Err(reason) => report.reject(row_no, reason),
        }
    }
    Ok((out, report))
}

pub fn serialize_crime_csv(crimes: &[CrimeRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for c in crimes {
        w.write_record([
            c.id.clone(),
            c.location.lat().to_string(),
            c.location.lon().to_string(),
            c.occurred_at.format("%Y-%m-%d").to_string(),
            c.category.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only() {
        let (c, r) = parse_crime_csv(b"id,latitude,longitude,date,category\n").unwrap();
        assert!(c.is_empty());
        assert_eq!(r.records_read, 0);
    }

    #[test]
    fn missing_column_is_hard_error() {
        assert!(matches!(
            parse_crime_csv(b"id,latitude,date,category\n1,40,2017-01-01,x\n").unwrap_err(),
            IngestError::Structure(_)
        ));
    }

    #[test]
    fn rejections() {
        let csv = "\
CMPLNT_NUM,id,latitude,longitude,date,category
x,1,,-73.99,2017-05-01,ROBBERY
x,2,40.73,-73.99,not-a-date,ROBBERY
x,3,40.73
x,4,abc,-73.99,2017-05-01,ROBBERY
x,5,40.73,-73.99,05/21/2017 14:00:00,\"FELONY, ASSAULT\"
";
        let (c, r) = parse_crime_csv(csv.as_bytes()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].category, "FELONY, ASSAULT");
        assert_eq!(c[0].occurred_at, NaiveDate::from_ymd_opt(2017, 5, 21).unwrap());
        assert_eq!(r.rejection_reasons["missing coordinate"], 1);
        assert_eq!(r.rejection_reasons["invalid date"], 1);
        assert_eq!(r.rejection_reasons["unparseable row"], 1);
        assert_eq!(r.rejection_reasons["invalid coordinate"], 1);
        assert_eq!(r.rejections[2].index, 3);
        assert!(r.is_balanced());
    }
}
