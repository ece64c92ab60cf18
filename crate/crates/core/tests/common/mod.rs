//! Shared helpers for the integration tests: the checked-in demo fixtures, a
//! random small-grid generator and a brute-force route oracle.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use bikeroute::geo::{haversine, GeoPoint, Polyline};
use bikeroute::model::{CrimeRecord, EdgeInput, FactorWeights, NodeId, RoadNetwork, Station, StationRegistry};
use bikeroute::service::{Engine, EngineConfig};
use bikeroute::spatial::{annotate_crime, BufferConfig};
use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_config() -> EngineConfig {
    EngineConfig::from_file(fixtures_dir().join("engine.toml")).expect("fixture config loads")
}

pub fn fixture_engine() -> Engine {
    Engine::load(fixture_config()).expect("fixture engine loads")
}

/// Just south-west of the grid's first corner.
pub const FIXTURE_ORIGIN: (f64, f64) = (40.7297, -74.0004);
/// Just north-east of the far corner.
pub const FIXTURE_DESTINATION: (f64, f64) = (40.7383, -73.9893);

pub fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

pub fn departure() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2017, 5, 22, 18, 25, 0).unwrap()
}

/// A small random routing problem.
pub struct GridFixture {
    pub network: RoadNetwork,
    pub registry: StationRegistry,
    pub crimes: Vec<CrimeRecord>,
    /// Constant (bikes, docks) per station; absent stations are unknown.
    pub availability: BTreeMap<String, (f64, f64)>,
    pub origin: GeoPoint,
    pub destination: GeoPoint,
}

/// `rows x cols` jittered grid (at most 12 nodes), every street present plus
/// a random subset of diagonals, `stations` stations near random nodes and up
/// to 200 crimes. Spacing is ~150 m so most stations fall inside a 500 m
/// buffer.
pub fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize, stations: usize, crimes: usize) -> GridFixture {
    assert!(rows * cols <= 12 && stations <= 4 && crimes <= 200);
    let (lat0, lon0, dlat, dlon) = (40.72, -73.99, 0.00135, 0.0018);
    let nodes: Vec<GeoPoint> = (0..rows * cols)
        .map(|i| {
            let (r, c) = ((i / cols) as f64, (i % cols) as f64);
            pt(
                lat0 + r * dlat + rng.gen_range(-0.0002..0.0002),
                lon0 + c * dlon + rng.gen_range(-0.0002..0.0002),
            )
        })
        .collect();
    let mut edges = Vec::new();
    let mut link = |a: usize, b: usize, bend: bool, rng: &mut ChaCha8Rng| {
        let mut pts = vec![nodes[a]];
        if bend {
            let (p, q) = (nodes[a], nodes[b]);
            pts.push(pt(
                (p.lat() + q.lat()) / 2.0 + rng.gen_range(-0.0002..0.0002),
                (p.lon() + q.lon()) / 2.0 + rng.gen_range(-0.0002..0.0002),
            ));
        }
        pts.push(nodes[b]);
        edges.push(EdgeInput {
            id: format!("e{}", edges.len()),
            from: a,
            to: b,
            geometry: Polyline::new(pts).unwrap(),
            crime_count: 0,
        });
    };
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                let bend = rng.gen_bool(0.3);
                link(i, i + 1, bend, rng);
            }
            if r + 1 < rows {
                let bend = rng.gen_bool(0.3);
                link(i, i + cols, bend, rng);
            }
            if r + 1 < rows && c + 1 < cols && rng.gen_bool(0.35) {
                link(i, i + cols + 1, false, rng);
            }
        }
    }
    let network = RoadNetwork::new(nodes.clone(), edges).unwrap();

    let (lat_hi, lon_hi) = (lat0 + (rows - 1) as f64 * dlat, lon0 + (cols - 1) as f64 * dlon);
    let random_point = |rng: &mut ChaCha8Rng| pt(rng.gen_range(lat0..=lat_hi), rng.gen_range(lon0..=lon_hi));

    let crimes: Vec<CrimeRecord> = (0..crimes)
        .map(|i| {
            // Half the incidents cluster around one random node.
            let p = if i % 2 == 0 {
                let hub = nodes[rng.gen_range(0..nodes.len())];
                pt(hub.lat() + rng.gen_range(-0.0004..0.0004), hub.lon() + rng.gen_range(-0.0004..0.0004))
            } else {
                random_point(rng)
            };
            CrimeRecord {
                id: i.to_string(),
                location: p,
                occurred_at: NaiveDate::from_ymd_opt(2017, 4, 1).unwrap(),
                category: "LARCENY".into(),
            }
        })
        .collect();
    let network = annotate_crime(&network, &crimes, &BufferConfig::default());

    let mut registry = StationRegistry::new();
    let mut availability = BTreeMap::new();
    for s in 0..stations {
        let near = nodes[rng.gen_range(0..nodes.len())];
        let id = format!("s{s}");
        let capacity = rng.gen_range(10..=30);
        registry.insert(Station {
            id: id.clone(),
            name: id.clone(),
            location: pt(near.lat() + rng.gen_range(-0.0002..0.0002), near.lon() + rng.gen_range(-0.0002..0.0002)),
            capacity,
        });
        if rng.gen_bool(0.9) {
            let bikes = rng.gen_range(0..=capacity);
            availability.insert(id, (bikes as f64, (capacity - bikes) as f64));
        }
    }
    let origin = random_point(rng);
    let destination = random_point(rng);
    GridFixture { network, registry, crimes, availability, origin, destination }
}

/// One simple path with the totals the oracle needs.
#[derive(Debug, Clone)]
pub struct SimplePath {
    pub nodes: Vec<NodeId>,
    pub length: f64,
    pub crime: u64,
}

/// Every simple path from `src` to `dst` (just `[src]` when equal). Lengths
/// accumulate from `src` outward.
pub fn all_simple_paths(net: &RoadNetwork, src: NodeId, dst: NodeId) -> Vec<SimplePath> {
    fn walk(net: &RoadNetwork, at: NodeId, dst: NodeId, path: &mut SimplePath, on: &mut [bool], out: &mut Vec<SimplePath>) {
        if at == dst {
            out.push(path.clone());
            return;
        }
        for &ei in net.incident(at) {
            let e = net.edge(ei);
            let next = e.other_end(at);
            if on[next] {
                continue;
            }
            let saved = (path.length, path.crime);
            on[next] = true;
            path.nodes.push(next);
            path.length += e.length;
            path.crime += e.crime_count as u64;
            walk(net, next, dst, path, on, out);
            path.nodes.pop();
            (path.length, path.crime) = saved;
            on[next] = false;
        }
    }
    let mut out = Vec::new();
    let mut on = vec![false; net.node_count()];
    on[src] = true;
    let mut path = SimplePath { nodes: vec![src], length: 0.0, crime: 0 };
    walk(net, src, dst, &mut path, &mut on, &mut out);
    out
}

/// Best simple path under `a*L/Lmax + b*C/Cmax` (edge blend of `w`), ties by length.
pub fn oracle_leg(net: &RoadNetwork, paths: &[SimplePath], w: &FactorWeights) -> Option<SimplePath> {
    let ab = w.alpha + w.beta;
    let (a, b) = if ab > 0.0 { (w.alpha / ab, w.beta / ab) } else { (1.0, 0.0) };
    let lmax = net.edges().iter().map(|e| e.length).fold(0.0, f64::max);
    let cmax = net.edges().iter().map(|e| e.crime_count).max().unwrap_or(0);
    let (lmax, cmax) = (if lmax > 0.0 { lmax } else { 1.0 }, if cmax > 0 { cmax as f64 } else { 1.0 });
    let key = |p: &SimplePath| (a * p.length / lmax + b * p.crime as f64 / cmax, p.length);
    paths
        .iter()
        .min_by(|x, y| {
            let (kx, ky) = (key(x), key(y));
            kx.0.total_cmp(&ky.0).then(kx.1.total_cmp(&ky.1))
        })
        .cloned()
}

pub fn nearest_node(net: &RoadNetwork, p: GeoPoint) -> NodeId {
    let mut best = 0;
    for i in 1..net.node_count() {
        let (d, db) = (haversine(p, net.node(i)), haversine(p, net.node(best)));
        if d < db {
            best = i;
        }
    }
    best
}

/// Station ids within `k` meters, nearest first, ties by id, at most `m`.
pub fn nearby_stations(reg: &StationRegistry, p: GeoPoint, k: f64, m: usize) -> Vec<String> {
    let mut v: Vec<(f64, String)> = reg
        .iter()
        .map(|s| (haversine(p, s.location), s.id.clone()))
        .filter(|(d, _)| *d <= k)
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    v.into_iter().take(m).map(|(_, id)| id).collect()
}

/// What the oracle decided for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleChoice {
    pub origin_station: String,
    pub destination_station: String,
    pub legs: [Vec<NodeId>; 3],
    pub total_length: f64,
    pub total_crime: u64,
    pub navl: f64,
    pub score: f64,
}

/// Exhaustive argmin over station pairs and simple paths. Availability is
/// constant in time in these fixtures, so check-out/in times drop out.
pub fn oracle_route(fx: &GridFixture, w: &FactorWeights) -> Option<OracleChoice> {
    let cfg = BufferConfig::default();
    let net = &fx.network;
    let origins = nearby_stations(&fx.registry, fx.origin, cfg.station_buffer_m, cfg.max_candidate_stations);
    let dests = nearby_stations(&fx.registry, fx.destination, cfg.station_buffer_m, cfg.max_candidate_stations);
    let o = nearest_node(net, fx.origin);
    let d = nearest_node(net, fx.destination);
    let node_of = |id: &str| nearest_node(net, fx.registry.get(id).unwrap().location);
    let best = |a: NodeId, b: NodeId| oracle_leg(net, &all_simple_paths(net, a, b), w);

    struct Cand {
        o: String,
        d: String,
        legs: [SimplePath; 3],
        length: f64,
        crime: u64,
        avl: f64,
    }
    let mut cands = Vec::new();
    for i in &origins {
        for j in &dests {
            if i == j {
                continue;
            }
            let (Some(l1), Some(l2), Some(l3)) = (best(o, node_of(i)), best(node_of(i), node_of(j)), best(node_of(j), d))
            else {
                continue;
            };
            let pb = fx.availability.get(i).map_or(0.0, |a| a.0);
            let pd = fx.availability.get(j).map_or(0.0, |a| a.1);
            let length = l1.length + l2.length + l3.length;
            let crime = l1.crime + l2.crime + l3.crime;
            cands.push(Cand { o: i.clone(), d: j.clone(), legs: [l1, l2, l3], length, crime, avl: pb * pd });
        }
    }
    let lmax = cands.iter().map(|c| c.length).fold(0.0, f64::max);
    let cmax = cands.iter().map(|c| c.crime).max()? as f64;
    let amax = cands.iter().map(|c| c.avl).fold(0.0, f64::max);
    let norm = |x: f64, m: f64| if m > 0.0 { x / m } else { 0.0 };
    let scored: Vec<(f64, f64, &Cand)> = cands
        .iter()
        .map(|c| {
            let navl = norm(c.avl, amax);
            let s = w.alpha * norm(c.length, lmax) + w.beta * norm(c.crime as f64, cmax) + w.gamma * (1.0 - navl);
            (s, navl, c)
        })
        .collect();
    let (score, navl, c) = scored.into_iter().min_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.2.length.total_cmp(&y.2.length))
            .then(x.2.o.cmp(&y.2.o))
            .then(x.2.d.cmp(&y.2.d))
    })?;
    Some(OracleChoice {
        origin_station: c.o.clone(),
        destination_station: c.d.clone(),
        legs: [c.legs[0].nodes.clone(), c.legs[1].nodes.clone(), c.legs[2].nodes.clone()],
        total_length: c.length,
        total_crime: c.crime,
        navl,
        score,
    })
}

/// Runs the library pipeline on a grid fixture.
pub fn route_fixture(
    fx: &GridFixture,
    weights: FactorWeights,
    scheme: bikeroute::routing::Scheme,
) -> Result<bikeroute::routing::RouteResult, bikeroute::routing::RoutingError> {
    use bikeroute::routing::{route, RouteQuery, RoutingContext, Speeds};
    use bikeroute::spatial::StationIndex;
    let stations = StationIndex::new(&fx.registry);
    let availability = |id: &str, _t: DateTime<Utc>| fx.availability.get(id).copied();
    let ctx = RoutingContext {
        network: &fx.network,
        registry: &fx.registry,
        stations: &stations,
        buffers: &BufferConfig::default(),
        speeds: &Speeds::default(),
        availability: &availability,
    };
    let query = RouteQuery { origin: fx.origin, destination: fx.destination, departure_time: departure(), weights, scheme };
    route(&query, &ctx)
}
