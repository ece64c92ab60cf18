//! Coordinate primitives, great-circle measurement and a uniform grid index.
//!
//! All distances are in meters on a spherical Earth of radius
//! [`EARTH_RADIUS_M`]. Segment distances use a local equirectangular plane,
//! which is accurate to well under a meter for city-scale segments.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Default grid cell edge, in meters.
pub const DEFAULT_CELL_SIZE_M: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("lat out of range: {0}")]
    LatOutOfRange(f64),
    #[error("lon out of range: {0}")]
    LonOutOfRange(f64),
    #[error("polyline needs at least 2 points, got {0}")]
    ShortPolyline(usize),
    #[error("cell size must be positive and finite, got {0}")]
    BadCellSize(f64),
}

/// A WGS84-style latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;
    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        // NaN fails both range checks.
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatOutOfRange(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::LonOutOfRange(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// GeoJSON order.
    pub fn lon_lat(&self) -> [f64; 2] {
        [self.lon, self.lat]
    }
}

/// Great-circle distance in meters.
pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let s1 = (dphi / 2.0).sin();
    let s2 = (dlambda / 2.0).sin();
    let h = s1 * s1 + phi1.cos() * phi2.cos() * s2 * s2;
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Local tangent-plane projection centered on `origin`, in meters.
#[derive(Debug, Clone, Copy)]
struct LocalPlane {
    lat0: f64,
    lon0: f64,
    cos_lat0: f64,
}

impl LocalPlane {
    fn at(origin: GeoPoint) -> Self {
        LocalPlane {
            lat0: origin.lat,
            lon0: origin.lon,
            cos_lat0: origin.lat.to_radians().cos(),
        }
    }

    fn project(&self, p: GeoPoint) -> (f64, f64) {
        let x = (p.lon - self.lon0).to_radians() * self.cos_lat0 * EARTH_RADIUS_M;
        let y = (p.lat - self.lat0).to_radians() * EARTH_RADIUS_M;
        (x, y)
    }
}

/// Distance from `p` to the segment `a`–`b`.
///
/// The perpendicular distance is measured in an equirectangular plane centered
/// at `a`. The result never exceeds the great-circle distance to either
/// endpoint, and a degenerate segment (`a == b`) yields `haversine(p, a)`.
pub fn point_to_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let to_a = haversine(p, a);
    if a == b {
        return to_a;
    }
    let to_b = haversine(p, b);
    let plane = LocalPlane::at(a);
    let (bx, by) = plane.project(b);
    let (px, py) = plane.project(p);
    let len2 = bx * bx + by * by;
    let t = if len2 > 0.0 {
        ((px * bx + py * by) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = px - t * bx;
    let dy = py - t * by;
    let planar = (dx * dx + dy * dy).sqrt();
    planar.min(to_a).min(to_b)
}

/// An ordered chain of at least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<GeoPoint>,
}

impl Polyline {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self, GeoError> {
        if points.len() < 2 {
            return Err(GeoError::ShortPolyline(points.len()));
        }
        Ok(Polyline { points })
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn first(&self) -> GeoPoint {
        self.points[0]
    }

    pub fn last(&self) -> GeoPoint {
        self.points[self.points.len() - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn reversed(&self) -> Polyline {
        let mut points = self.points.clone();
        points.reverse();
        Polyline { points }
    }

    pub fn length(&self) -> f64 {
        polyline_length(self)
    }
}

/// Sum of consecutive great-circle distances.
pub fn polyline_length(pl: &Polyline) -> f64 {
    pl.segments().map(|(a, b)| haversine(a, b)).sum()
}

/// Uniform grid over an equirectangular projection of the indexed points.
///
/// Queries expand to every cell that can hold a point within the radius and
/// then filter by exact haversine distance, so there are no false negatives.
/// Results come back in insertion order.
#[derive(Debug, Clone)]
pub struct GridIndex<T> {
    cell_size: f64,
    plane: LocalPlane,
    cells: HashMap<(i64, i64), Vec<usize>>,
    entries: Vec<(GeoPoint, T)>,
}

impl<T: Clone> GridIndex<T> {
    pub fn build(points: Vec<(GeoPoint, T)>, cell_size: f64) -> Result<Self, GeoError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(GeoError::BadCellSize(cell_size));
        }
        let origin = centroid(points.iter().map(|(p, _)| *p));
        let plane = LocalPlane::at(origin);
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, (p, _)) in points.iter().enumerate() {
            let key = cell_of(&plane, cell_size, *p);
            cells.entry(key).or_default().push(i);
        }
        Ok(GridIndex {
            cell_size,
            plane,
            cells,
            entries: points,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Payloads of every point whose haversine distance to `center` is `<= r`.
    pub fn query_radius(&self, center: GeoPoint, r: f64) -> Vec<T> {
        self.query_radius_with_distance(center, r)
            .into_iter()
            .map(|(t, _)| t)
            .collect()
    }

    /// Like [`GridIndex::query_radius`], paired with each distance.
    pub fn query_radius_with_distance(&self, center: GeoPoint, r: f64) -> Vec<(T, f64)> {
        if self.entries.is_empty() || r.is_nan() || r < 0.0 {
            return Vec::new();
        }
        let mut hits: Vec<usize> = match self.covering_cells(center, r) {
            Some((x0, x1, y0, y1)) => {
                let span = (x1 - x0 + 1).saturating_mul(y1 - y0 + 1);
                let mut ids = Vec::new();
                if span as usize <= self.cells.len() {
                    for x in x0..=x1 {
                        for y in y0..=y1 {
                            if let Some(bucket) = self.cells.get(&(x, y)) {
                                ids.extend_from_slice(bucket);
                            }
                        }
                    }
                } else {
                    for (&(x, y), bucket) in &self.cells {
                        if (x0..=x1).contains(&x) && (y0..=y1).contains(&y) {
                            ids.extend_from_slice(bucket);
                        }
                    }
                }
                ids
            }
            None => (0..self.entries.len()).collect(),
        };
        hits.sort_unstable();
        hits.into_iter()
            .filter_map(|i| {
                let (p, t) = &self.entries[i];
                let d = haversine(center, *p);
                (d <= r).then(|| (t.clone(), d))
            })
            .collect()
    }

    /// Cell rectangle covering the lat/lon bounding box of the query circle,
    /// or `None` when the box wraps a pole or the antimeridian.
    fn covering_cells(&self, center: GeoPoint, r: f64) -> Option<(i64, i64, i64, i64)> {
        let ang = r / EARTH_RADIUS_M;
        let dlat = ang.to_degrees();
        let lat_min = center.lat - dlat;
        let lat_max = center.lat + dlat;
        if lat_min <= -90.0 || lat_max >= 90.0 || ang >= std::f64::consts::FRAC_PI_2 {
            return None;
        }
        let cos_lat = center.lat.to_radians().cos();
        let ratio = ang.sin() / cos_lat;
        if ratio.is_nan() || ratio >= 1.0 {
            return None;
        }
        // Small margin absorbs rounding in the asin bound.
        let dlon = ratio.asin().to_degrees() * (1.0 + 1e-9) + 1e-12;
        let lon_min = center.lon - dlon;
        let lon_max = center.lon + dlon;
        if lon_min < -180.0 || lon_max > 180.0 {
            return None;
        }
        let to_cell = |lat: f64, lon: f64| {
            let x = (lon - self.plane.lon0).to_radians() * self.plane.cos_lat0 * EARTH_RADIUS_M;
            let y = (lat - self.plane.lat0).to_radians() * EARTH_RADIUS_M;
            (
                (x / self.cell_size).floor() as i64,
                (y / self.cell_size).floor() as i64,
            )
        };
        let (x0, y0) = to_cell(lat_min - 1e-12, lon_min);
        let (x1, y1) = to_cell(lat_max + 1e-12, lon_max);
        Some((x0.min(x1), x0.max(x1), y0.min(y1), y0.max(y1)))
    }
}

fn cell_of(plane: &LocalPlane, cell_size: f64, p: GeoPoint) -> (i64, i64) {
    let (x, y) = plane.project(p);
    ((x / cell_size).floor() as i64, (y / cell_size).floor() as i64)
}

fn centroid(points: impl Iterator<Item = GeoPoint>) -> GeoPoint {
    let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        lat += p.lat;
        lon += p.lon;
        n += 1;
    }
    if n == 0 {
        return GeoPoint { lat: 0.0, lon: 0.0 };
    }
    GeoPoint {
        lat: lat / n as f64,
        lon: lon / n as f64,
    }
}

/// Builds an index with the default cell size.
pub fn build_index<T: Clone>(points: Vec<(GeoPoint, T)>) -> GridIndex<T> {
    GridIndex::build(points, DEFAULT_CELL_SIZE_M).expect("default cell size is positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    // Arc length of one degree on the equator, R * pi / 180.
    const EQ_DEGREE_M: f64 = 111_194.926_644_558_73;

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(GeoPoint::new(95.0, 0.0), Err(GeoError::LatOutOfRange(95.0)));
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(-90.0, 180.0).is_ok());
    }

    #[test]
    fn haversine_examples() {
        assert_eq!(haversine(pt(40.0, -74.0), pt(40.0, -74.0)), 0.0);
        assert!((haversine(pt(0.0, 0.0), pt(0.0, 1.0)) - EQ_DEGREE_M).abs() < 1e-6);
        // WGS84 geodesic distance from an independent ellipsoidal solver.
        let d = haversine(pt(40.7300, -73.9950), pt(40.7320, -73.9900));
        let reference = 477.214;
        assert!((d - reference).abs() / reference < 0.005, "{d}");
    }

    #[test]
    fn segment_distance_examples() {
        let a = pt(40.73, -73.995);
        let b = pt(40.73, -73.985);
        let mid = pt(40.73, -73.990);
        assert!(point_to_segment_distance(mid, a, b) < 1e-6);
        let p = pt(40.74, -73.99);
        assert_eq!(point_to_segment_distance(p, a, a), haversine(p, a));

        // 1 km east-west segment on the equator; offset the midpoint 100 m north.
        let half = 500.0 / EQ_DEGREE_M;
        let a = pt(0.0, -half);
        let b = pt(0.0, half);
        let p = pt(100.0 / EQ_DEGREE_M, 0.0);
        let d = point_to_segment_distance(p, a, b);
        assert!((d - 100.0).abs() / 100.0 < 0.01, "{d}");
    }

    #[test]
    fn polyline_examples() {
        assert!(Polyline::new(vec![pt(0.0, 0.0)]).is_err());
        let same = Polyline::new(vec![pt(1.0, 1.0), pt(1.0, 1.0)]).unwrap();
        assert_eq!(polyline_length(&same), 0.0);
        let eq = Polyline::new(vec![pt(0.0, 0.0), pt(0.0, 1.0), pt(0.0, 2.0)]).unwrap();
        assert!((polyline_length(&eq) - 2.0 * EQ_DEGREE_M).abs() < 1e-6);
        let pl = Polyline::new(vec![pt(40.7, -74.0), pt(40.71, -73.99), pt(40.72, -74.01)]).unwrap();
        let manual = haversine(pl.points()[0], pl.points()[1]) + haversine(pl.points()[1], pl.points()[2]);
        assert_eq!(polyline_length(&pl), manual);
    }

    #[test]
    fn empty_index_returns_nothing() {
        let idx: GridIndex<usize> = build_index(vec![]);
        assert!(idx.query_radius(pt(40.0, -74.0), 1e6).is_empty());
    }

    #[test]
    fn zero_radius_hits_stored_point() {
        let p = pt(40.73, -73.99);
        let idx = build_index(vec![(p, 7usize)]);
        assert_eq!(idx.query_radius(p, 0.0), vec![7]);
    }

    #[test]
    fn bad_cell_size_rejected() {
        assert!(GridIndex::<usize>::build(vec![], 0.0).is_err());
        assert!(GridIndex::<usize>::build(vec![], f64::NAN).is_err());
    }

    #[test]
    fn random_square_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = pt(40.72, -73.99);
        let dlat = 2000.0 / EQ_DEGREE_M;
        let dlon = dlat / base.lat().to_radians().cos();
        let gen = |rng: &mut ChaCha8Rng| {
            pt(
                base.lat() + rng.gen::<f64>() * dlat,
                base.lon() + rng.gen::<f64>() * dlon,
            )
        };
        let points: Vec<(GeoPoint, usize)> = (0..1000).map(|i| (gen(&mut rng), i)).collect();
        let idx = build_index(points.clone());
        for _ in 0..50 {
            let c = gen(&mut rng);
            let got = idx.query_radius(c, 200.0);
            let want: Vec<usize> = points
                .iter()
                .filter(|(p, _)| haversine(c, *p) <= 200.0)
                .map(|(_, i)| *i)
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn large_radius_and_polar_queries_fall_back() {
        let points = vec![(pt(89.9, 10.0), 0usize), (pt(-10.0, 179.9), 1), (pt(0.0, 0.0), 2)];
        let idx = build_index(points);
        let all = idx.query_radius(pt(0.0, 0.0), 3.0e7);
        assert_eq!(all, vec![0, 1, 2]);
        assert_eq!(idx.query_radius(pt(89.95, -170.0), 20_000.0), vec![0]);
        assert_eq!(idx.query_radius(pt(-10.0, -179.95), 20_000.0), vec![1]);
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(a, b)| pt(a, b))
    }

    fn arb_city_point() -> impl Strategy<Value = GeoPoint> {
        (40.70f64..40.76, -74.02f64..-73.96).prop_map(|(a, b)| pt(a, b))
    }

    proptest! {
        #[test]
        fn haversine_is_symmetric(a in arb_point(), b in arb_point()) {
            prop_assert_eq!(haversine(a, b), haversine(b, a));
            prop_assert!(haversine(a, b) >= 0.0);
        }

        #[test]
        fn haversine_triangle(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ab = haversine(a, b);
            let bc = haversine(b, c);
            let ac = haversine(a, c);
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-9) + 1e-9);
        }

        #[test]
        fn segment_distance_bounded(p in arb_city_point(), a in arb_city_point(), b in arb_city_point()) {
            let d = point_to_segment_distance(p, a, b);
            prop_assert!(d >= 0.0);
            prop_assert!(d <= haversine(p, a));
            prop_assert!(d <= haversine(p, b));
        }

        #[test]
        fn index_matches_filter(
            pts in proptest::collection::vec(arb_city_point(), 0..80),
            c in arb_city_point(),
            r in 0.0f64..3000.0,
            cell in 10.0f64..500.0,
        ) {
            let items: Vec<(GeoPoint, usize)> = pts.iter().copied().zip(0..).collect();
            let idx = GridIndex::build(items.clone(), cell).unwrap();
            let want: Vec<usize> = items.iter().filter(|(p, _)| haversine(c, *p) <= r).map(|(_, i)| *i).collect();
            prop_assert_eq!(idx.query_radius(c, r), want);
        }
    }
}
