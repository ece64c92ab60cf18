//! Weekday/weekend average profiles and delta forecasting.
//!
//! A station's forecast for `i` buckets ahead is its current count plus the
//! change the average profile shows between the current bucket and the
//! future one:
//!
//! ```text
//! PB[t+i] = B[t] + (avg_bikes[w(t+i)][t+i] - avg_bikes[w(t)][t])
//! ```
//!
//! Averages are kept separately for weekdays and weekends. Each bucket's mean
//! is taken over the dates that actually contributed a value to that bucket.

use chrono::{DateTime, NaiveDate, Utc};
use chrono_tz::Tz;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    advance_slot, bucket_start_utc, local_slot, weekday_flag, DayKind, SnapshotStore, StationStatus,
    BUCKETS_PER_DAY,
};

/// Default forecast horizon: six buckets, one hour.
pub const DEFAULT_HORIZON: usize = 6;

/// Longest look-ahead accepted by [`predict_at`], in seconds.
const MAX_LOOKAHEAD_SECS: i64 = 24 * 3600;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("target time precedes the current status")]
    TargetInPast,
    #[error("target time is more than 24 h after the current status")]
    TargetTooFar,
}

/// The requested day kind has no data in any bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no profile data for {0:?}")]
pub struct NoProfile(pub DayKind);

/// Inclusive date range; open ends are unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DateWindow {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl DateWindow {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start.is_none_or(|s| d >= s) && self.end.is_none_or(|e| d <= e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    Bikes,
    Docks,
}

/// Per-bucket averages for one day kind.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagProfile {
    pub avg_bikes: [Option<f64>; BUCKETS_PER_DAY],
    pub avg_docks: [Option<f64>; BUCKETS_PER_DAY],
    /// Dates contributing to each bucket.
    pub counts: [u32; BUCKETS_PER_DAY],
}

impl FlagProfile {
    fn empty() -> Self {
        FlagProfile {
            avg_bikes: [None; BUCKETS_PER_DAY],
            avg_docks: [None; BUCKETS_PER_DAY],
            counts: [0; BUCKETS_PER_DAY],
        }
    }

    fn values(&self, series: Series) -> &[Option<f64>; BUCKETS_PER_DAY] {
        match series {
            Series::Bikes => &self.avg_bikes,
            Series::Docks => &self.avg_docks,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvgProfile {
    pub station_id: String,
    flags: [FlagProfile; 2],
}

impl AvgProfile {
    pub fn empty(station_id: impl Into<String>) -> Self {
        AvgProfile {
            station_id: station_id.into(),
            flags: [FlagProfile::empty(), FlagProfile::empty()],
        }
    }

    pub fn flag(&self, w: DayKind) -> &FlagProfile {
        &self.flags[w.index()]
    }
}

/// Averages a station's history per day kind and bucket over `window`.
/// A station absent from the store yields an empty profile.
pub fn build_profile(store: &SnapshotStore, station_id: &str, window: DateWindow) -> AvgProfile {
    let mut profile = AvgProfile::empty(station_id);
    let Some(series) = store.series(station_id) else {
        return profile;
    };
    let mut sums = [[(0.0f64, 0.0f64); BUCKETS_PER_DAY]; 2];
    for (date, slots) in series.days().filter(|(d, _)| window.contains(*d)) {
        let w = weekday_flag(date).index();
        for (b, slot) in slots.iter().enumerate() {
            if let Some(s) = slot {
                sums[w][b].0 += s.bikes as f64;
                sums[w][b].1 += s.docks as f64;
                profile.flags[w].counts[b] += 1;
            }
        }
    }
    for (flag, sums) in profile.flags.iter_mut().zip(&sums) {
        for (b, &(bikes, docks)) in sums.iter().enumerate() {
            let n = flag.counts[b];
            if n > 0 {
                flag.avg_bikes[b] = Some(bikes / n as f64);
                flag.avg_docks[b] = Some(docks / n as f64);
            }
        }
    }
    profile
}

/// Profile lookup. Undefined buckets are linearly interpolated between the
/// nearest defined neighbours, wrapping around midnight.
pub fn profile_value(p: &AvgProfile, w: DayKind, bucket: usize, series: Series) -> Result<f64, NoProfile> {
    let values = p.flag(w).values(series);
    let bucket = bucket % BUCKETS_PER_DAY;
    if let Some(v) = values[bucket] {
        return Ok(v);
    }
    let n = BUCKETS_PER_DAY;
    let prev = (1..n).find_map(|k| values[(bucket + n - k) % n].map(|v| (k, v)));
    let next = (1..n).find_map(|k| values[(bucket + k) % n].map(|v| (k, v)));
    match (prev, next) {
        (Some((dp, vp)), Some((dn, vn))) => Ok(vp + (vn - vp) * dp as f64 / (dp + dn) as f64),
        _ => Err(NoProfile(w)),
    }
}

/// Unclamped changes relative to the anchor bucket, one per step ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct Deltas {
    pub bikes: Vec<f64>,
    pub docks: Vec<f64>,
    /// Local (date, bucket) of each step.
    pub slots: Vec<(NaiveDate, usize)>,
    /// Some step fell back to a zero delta for lack of profile data.
    pub degraded: bool,
}

pub fn forecast_deltas(p: &AvgProfile, anchor_date: NaiveDate, anchor_bucket: usize, n: usize) -> Deltas {
    let w_c = weekday_flag(anchor_date);
    let base_b = profile_value(p, w_c, anchor_bucket, Series::Bikes);
    let base_d = profile_value(p, w_c, anchor_bucket, Series::Docks);
    let mut out = Deltas {
        bikes: Vec::with_capacity(n),
        docks: Vec::with_capacity(n),
        slots: Vec::with_capacity(n),
        degraded: false,
    };
    for i in 1..=n {
        let (date, bucket) = advance_slot(anchor_date, anchor_bucket, i);
        let w = weekday_flag(date);
        let fb = profile_value(p, w, bucket, Series::Bikes);
        let fd = profile_value(p, w, bucket, Series::Docks);
        match (base_b, fb, base_d, fd) {
            (Ok(b0), Ok(b1), Ok(d0), Ok(d1)) => {
                out.bikes.push(b1 - b0);
                out.docks.push(d1 - d0);
            }
            _ => {
                out.bikes.push(0.0);
                out.docks.push(0.0);
                out.degraded = true;
            }
        }
        out.slots.push((date, bucket));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionVector {
    pub station_id: String,
    pub anchor_time: DateTime<Utc>,
    pub horizon: usize,
    /// Start instant of each predicted bucket.
    pub times: Vec<DateTime<Utc>>,
    pub predicted_bikes: Vec<f64>,
    pub predicted_docks: Vec<f64>,
    pub degraded: bool,
}

/// Forecasts the next `n` buckets after `current`, clamped to `[0, capacity]`.
pub fn predict(
    p: &AvgProfile,
    current: &StationStatus,
    n: usize,
    capacity: u32,
    tz: Tz,
) -> Result<PredictionVector, PredictError> {
    if n < 1 {
        return Err(PredictError::ZeroHorizon);
    }
    let (date, bucket) = local_slot(current.timestamp, tz);
    let deltas = forecast_deltas(p, date, bucket, n);
    let cap = capacity as f64;
    let clamp = |base: u32, d: f64| (base as f64 + d).clamp(0.0, cap);
    Ok(PredictionVector {
        station_id: current.station_id.clone(),
        anchor_time: current.timestamp,
        horizon: n,
        times: deltas.slots.iter().map(|&(d, b)| bucket_start_utc(d, b, tz)).collect(),
        predicted_bikes: deltas.bikes.iter().map(|&d| clamp(current.bikes, d)).collect(),
        predicted_docks: deltas.docks.iter().map(|&d| clamp(current.docks, d)).collect(),
        degraded: deltas.degraded,
    })
}

/// Number of buckets between the anchor bucket's start and `target`, rounded
/// to the nearest bucket with ties going up.
pub fn steps_until(current: &StationStatus, target: DateTime<Utc>, tz: Tz) -> Result<usize, PredictError> {
    if target < current.timestamp {
        return Err(PredictError::TargetInPast);
    }
    if (target - current.timestamp).num_seconds() > MAX_LOOKAHEAD_SECS {
        return Err(PredictError::TargetTooFar);
    }
    let (date, bucket) = local_slot(current.timestamp, tz);
    let start = bucket_start_utc(date, bucket, tz);
    let secs = (target - start).num_seconds();
    Ok(((secs + 300) / 600).max(0) as usize)
}

/// Predicted (bikes, docks) at `target`.
pub fn predict_at(
    p: &AvgProfile,
    current: &StationStatus,
    target: DateTime<Utc>,
    capacity: u32,
    tz: Tz,
) -> Result<(f64, f64), PredictError> {
    let i = steps_until(current, target, tz)?;
    if i == 0 {
        return Ok((current.bikes as f64, current.docks as f64));
    }
    let v = predict(p, current, i, capacity, tz)?;
    Ok((v.predicted_bikes[i - 1], v.predicted_docks[i - 1]))
}

/// Half-up rounding for display.
pub fn display_count(x: f64) -> u32 {
    (x + 0.5).floor().max(0.0) as u32
}
