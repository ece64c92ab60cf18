//! Walk/bike/walk route recommendation.
//!
//! A trip is three legs: walk from the origin to a pick-up station, ride to a
//! drop-off station, walk to the destination. For every admissible
//! (pick-up, drop-off) pair each leg is routed with Dijkstra under a blend of
//! normalized edge length and edge crime count. The resulting candidates are
//! then scored against each other:
//!
//! ```text
//! score = alpha * L/maxL + beta * C/maxC + gamma * (1 - AVL/maxAVL)
//! ```
//!
//! where the maxima run over the candidate set and `AVL` is predicted bikes at
//! the pick-up station times predicted docks at the drop-off station.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine, GeoPoint};
use crate::model::{
    CandidateRoute, Edge, FactorWeights, NodeId, RoadNetwork, RouteLeg, ScoreBreakdown, StationRegistry,
    TravelMode,
};
use crate::spatial::{candidate_stations, BufferConfig, StationIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("road network is empty")]
    EmptyNetwork,
    #[error("node {0} is not in the network")]
    UnknownNode(NodeId),
    #[error("edge {0} has a negative or undefined cost")]
    InvalidCost(String),
    #[error("no path between nodes {0} and {1}")]
    Unreachable(NodeId, NodeId),
    #[error("no station in range of the {0}")]
    NoStationInRange(Endpoint),
    #[error("no route through any station pair")]
    NoRoute,
    #[error("no candidates to score")]
    NoCandidates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Origin,
    Destination,
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Endpoint::Origin => "origin",
            Endpoint::Destination => "destination",
        })
    }
}

/// Non-negative per-edge cost.
pub trait EdgeCost {
    fn cost(&self, edge: &Edge) -> f64;

    /// Cost of a whole path, given the running sum of `cost`, the path length
    /// and its crime total. Implementations whose cost is linear in length and
    /// crime can recompute it here so paths with equal crime totals tie
    /// exactly, whatever order the float terms were added in.
    fn path_cost(&self, summed: f64, _length: f64, _crime: u64) -> f64 {
        summed
    }
}

impl<F: Fn(&Edge) -> f64> EdgeCost for F {
    fn cost(&self, edge: &Edge) -> f64 {
        self(edge)
    }
}

/// `a * length/Lmax + b * crime/Cmax` with graph-wide maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendedCost {
    pub length_weight: f64,
    pub crime_weight: f64,
    pub max_length: f64,
    pub max_crime: f64,
}

impl BlendedCost {
    /// Splits `alpha : beta` into unit-sum edge weights. With
    /// `alpha + beta == 0` the cost falls back to normalized length.
    pub fn new(network: &RoadNetwork, weights: &FactorWeights) -> Self {
        let ab = weights.alpha + weights.beta;
        let (length_weight, crime_weight) = if ab > 0.0 {
            (weights.alpha / ab, weights.beta / ab)
        } else {
            (1.0, 0.0)
        };
        let max_length = network.max_edge_length();
        let max_crime = network.max_edge_crime();
        BlendedCost {
            length_weight,
            crime_weight,
            max_length: if max_length > 0.0 { max_length } else { 1.0 },
            max_crime: if max_crime > 0 { max_crime as f64 } else { 1.0 },
        }
    }
}

impl EdgeCost for BlendedCost {
    fn cost(&self, edge: &Edge) -> f64 {
        self.path_cost(0.0, edge.length, edge.crime_count as u64)
    }

    fn path_cost(&self, _summed: f64, length: f64, crime: u64) -> f64 {
        self.length_weight * length / self.max_length + self.crime_weight * crime as f64 / self.max_crime
    }
}

/// A node path with its accumulated cost and length.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<usize>,
    pub cost: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    cost: f64,
    length: f64,
    summed: f64,
    crime: u64,
}

impl Key {
    const ZERO: Key = Key { cost: 0.0, length: 0.0, summed: 0.0, crime: 0 };
}

impl Key {
    fn cmp(&self, other: &Key) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.length.total_cmp(&other.length))
    }
}

#[derive(Debug, PartialEq)]
struct QueueItem {
    key: Key,
    node: NodeId,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    // Reversed for a min-heap; lower node id first on equal keys.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.cmp(&self.key).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Least-cost path from `src` to `dst`. Equal costs are broken by total
/// length; remaining ties resolve deterministically by exploration order.
pub fn dijkstra(network: &RoadNetwork, src: NodeId, dst: NodeId, cost: &impl EdgeCost) -> Result<Path, RoutingError> {
    let n = network.node_count();
    for node in [src, dst] {
        if node >= n {
            return Err(RoutingError::UnknownNode(node));
        }
    }
    let mut best: Vec<Option<Key>> = vec![None; n];
    let mut prev: Vec<Option<(NodeId, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    best[src] = Some(Key::ZERO);
    heap.push(QueueItem { key: Key::ZERO, node: src });

    while let Some(QueueItem { key, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == dst {
            break;
        }
        for &ei in network.incident(node) {
            let edge = network.edge(ei);
            let next = edge.other_end(node);
            if done[next] {
                continue;
            }
            let c = cost.cost(edge);
            if !c.is_finite() || c < 0.0 {
                return Err(RoutingError::InvalidCost(edge.id.clone()));
            }
            let (summed, length, crime) = (key.summed + c, key.length + edge.length, key.crime + edge.crime_count as u64);
            let cand = Key { cost: cost.path_cost(summed, length, crime), length, summed, crime };
            if best[next].is_none_or(|b| cand.cmp(&b) == Ordering::Less) {
                best[next] = Some(cand);
                prev[next] = Some((node, ei));
                heap.push(QueueItem { key: cand, node: next });
            }
        }
    }

    let Some(end) = best[dst].filter(|_| done[dst]) else {
        return Err(RoutingError::Unreachable(src, dst));
    };
    let mut nodes = vec![dst];
    let mut edges = Vec::new();
    let mut at = dst;
    while let Some((p, e)) = prev[at] {
        nodes.push(p);
        edges.push(e);
        at = p;
    }
    nodes.reverse();
    edges.reverse();
    Ok(Path { nodes, edges, cost: end.cost, length: end.length })
}

/// Nearest node by great-circle distance; ties go to the lower id.
pub fn snap_to_node(network: &RoadNetwork, p: GeoPoint) -> Result<NodeId, RoutingError> {
    network
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &n)| (haversine(p, n), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
        .ok_or(RoutingError::EmptyNetwork)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Speeds {
    pub walk_kmh: f64,
    pub bike_kmh: f64,
}

impl Default for Speeds {
    fn default() -> Self {
        Speeds { walk_kmh: 5.0, bike_kmh: 15.0 }
    }
}

impl Speeds {
    /// Meters per second.
    pub fn of(&self, mode: TravelMode) -> f64 {
        let kmh = match mode {
            TravelMode::Walk => self.walk_kmh,
            TravelMode::Bike => self.bike_kmh,
        };
        kmh / 3.6
    }
}

/// Routes one leg under the (alpha, beta) edge blend of `weights`.
pub fn leg_route(
    network: &RoadNetwork,
    src: NodeId,
    dst: NodeId,
    weights: &FactorWeights,
    mode: TravelMode,
    speeds: &Speeds,
) -> Result<RouteLeg, RoutingError> {
    let cost = BlendedCost::new(network, weights);
    leg_with_cost(network, src, dst, &cost, mode, speeds)
}

fn leg_with_cost(
    network: &RoadNetwork,
    src: NodeId,
    dst: NodeId,
    cost: &BlendedCost,
    mode: TravelMode,
    speeds: &Speeds,
) -> Result<RouteLeg, RoutingError> {
    let path = dijkstra(network, src, dst, cost)?;
    Ok(RouteLeg::from_path(network, mode, path.nodes, path.edges, speeds.of(mode)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Shortest,
    Safest,
    Optimal,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shortest" => Ok(Scheme::Shortest),
            "safest" => Ok(Scheme::Safest),
            "optimal" => Ok(Scheme::Optimal),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteQuery {
    pub origin: GeoPoint,
    pub destination: GeoPoint,
    pub departure_time: DateTime<Utc>,
    pub weights: FactorWeights,
    pub scheme: Scheme,
}

impl RouteQuery {
    /// Shortest and safest are the `(1,0,0)` and `(0,1,0)` special cases.
    pub fn effective_weights(&self) -> FactorWeights {
        match self.scheme {
            Scheme::Shortest => FactorWeights::SHORTEST,
            Scheme::Safest => FactorWeights::SAFEST,
            Scheme::Optimal => self.weights,
        }
    }
}

/// Predicted (bikes, docks) for a station at an instant; `None` when unknown.
pub trait Availability {
    fn at(&self, station_id: &str, when: DateTime<Utc>) -> Option<(f64, f64)>;
}

impl<F: Fn(&str, DateTime<Utc>) -> Option<(f64, f64)>> Availability for F {
    fn at(&self, station_id: &str, when: DateTime<Utc>) -> Option<(f64, f64)> {
        self(station_id, when)
    }
}

/// Static inputs for route evaluation.
#[derive(Clone, Copy)]
pub struct RoutingContext<'a> {
    pub network: &'a RoadNetwork,
    pub registry: &'a StationRegistry,
    pub stations: &'a StationIndex,
    pub buffers: &'a BufferConfig,
    pub speeds: &'a Speeds,
    pub availability: &'a dyn Availability,
}

fn seconds(d: f64) -> Duration {
    Duration::milliseconds((d * 1000.0).round() as i64)
}

/// One candidate per admissible (pick-up, drop-off) station pair, in
/// (pick-up, drop-off) candidate order.
pub fn generate_candidates(query: &RouteQuery, ctx: &RoutingContext<'_>) -> Result<Vec<CandidateRoute>, RoutingError> {
    let net = ctx.network;
    let origins = candidate_stations(query.origin, ctx.stations, ctx.buffers);
    if origins.is_empty() {
        return Err(RoutingError::NoStationInRange(Endpoint::Origin));
    }
    let dests = candidate_stations(query.destination, ctx.stations, ctx.buffers);
    if dests.is_empty() {
        return Err(RoutingError::NoStationInRange(Endpoint::Destination));
    }
    let cost = BlendedCost::new(net, &query.effective_weights());
    let o_node = snap_to_node(net, query.origin)?;
    let d_node = snap_to_node(net, query.destination)?;
    let station_node = |id: &str| -> Result<NodeId, RoutingError> {
        let s = ctx.registry.get(id).expect("candidates come from the registry");
        snap_to_node(net, s.location)
    };

    let mut first = Vec::with_capacity(origins.len());
    for id in &origins {
        let node = station_node(id)?;
        let leg = leg_with_cost(net, o_node, node, &cost, TravelMode::Walk, ctx.speeds).ok();
        first.push((node, leg));
    }
    let mut last = Vec::with_capacity(dests.len());
    for id in &dests {
        let node = station_node(id)?;
        let leg = leg_with_cost(net, node, d_node, &cost, TravelMode::Walk, ctx.speeds).ok();
        last.push((node, leg));
    }

    let mut out = Vec::new();
    for (oid, (onode, walk_in)) in origins.iter().zip(&first) {
        let Some(walk_in) = walk_in else { continue };
        for (did, (dnode, walk_out)) in dests.iter().zip(&last) {
            if oid == did {
                continue;
            }
            let Some(walk_out) = walk_out else { continue };
            let Ok(ride) = leg_with_cost(net, *onode, *dnode, &cost, TravelMode::Bike, ctx.speeds) else {
                continue;
            };
            let t_out = query.departure_time + seconds(walk_in.duration);
            let t_in = t_out + seconds(ride.duration);
            let pb_out = ctx.availability.at(oid, t_out).map_or(0.0, |(b, _)| b);
            let pd_in = ctx.availability.at(did, t_in).map_or(0.0, |(_, d)| d);
            let legs = [walk_in.clone(), ride, walk_out.clone()];
            let total_length = legs.iter().map(|l| l.length).sum();
            let total_crime = legs.iter().map(|l| l.crime_total).sum();
            out.push(CandidateRoute {
                origin_station_id: oid.clone(),
                destination_station_id: did.clone(),
                legs,
                total_length,
                total_crime,
                t_out,
                t_in,
                pb_out,
                pd_in,
                avl: pb_out * pd_in,
                score: 0.0,
                breakdown: ScoreBreakdown::default(),
            });
        }
    }
    if out.is_empty() {
        return Err(RoutingError::NoRoute);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteResult {
    pub chosen: CandidateRoute,
    pub chosen_index: usize,
    /// Every scored candidate, the chosen one included.
    pub alternatives: Vec<CandidateRoute>,
    pub max_length: f64,
    pub max_crime: u64,
    pub max_avl: f64,
    pub weights: FactorWeights,
}

fn ratio(x: f64, max: f64) -> f64 {
    if max > 0.0 {
        x / max
    } else {
        0.0
    }
}

/// Ordering used to pick the winner: score, then length, then station ids.
pub fn candidate_order(a: &CandidateRoute, b: &CandidateRoute) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then_with(|| a.total_length.total_cmp(&b.total_length))
        .then_with(|| a.origin_station_id.cmp(&b.origin_station_id))
        .then_with(|| a.destination_station_id.cmp(&b.destination_station_id))
}

/// Normalizes over the candidate set, scores every candidate and picks the minimum.
pub fn score_candidates(mut cands: Vec<CandidateRoute>, weights: &FactorWeights) -> Result<RouteResult, RoutingError> {
    if cands.is_empty() {
        return Err(RoutingError::NoCandidates);
    }
    let max_length = cands.iter().map(|c| c.total_length).fold(0.0, f64::max);
    let max_crime = cands.iter().map(|c| c.total_crime).max().unwrap_or(0);
    let max_avl = cands.iter().map(|c| c.avl).fold(0.0, f64::max);
    for c in &mut cands {
        let b = ScoreBreakdown {
            nlength: ratio(c.total_length, max_length),
            ncrime: ratio(c.total_crime as f64, max_crime as f64),
            navl: ratio(c.avl, max_avl),
        };
        c.score = weights.alpha * b.nlength + weights.beta * b.ncrime + weights.gamma * (1.0 - b.navl);
        c.breakdown = b;
    }
    let chosen_index = (0..cands.len())
        .min_by(|&i, &j| candidate_order(&cands[i], &cands[j]))
        .expect("non-empty");
    Ok(RouteResult {
        chosen: cands[chosen_index].clone(),
        chosen_index,
        alternatives: cands,
        max_length,
        max_crime,
        max_avl,
        weights: *weights,
    })
}

/// Full pipeline for one query.
pub fn route(query: &RouteQuery, ctx: &RoutingContext<'_>) -> Result<RouteResult, RoutingError> {
    let cands = generate_candidates(query, ctx)?;
    score_candidates(cands, &query.effective_weights())
}
