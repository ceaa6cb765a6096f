//! Route preselection, generalized route costs, the binary logit split and
//! capacity-constrained flow assignment.
//!
//! Routes are fixed once on the full candidate topology. When a rail edge on
//! a train-prioritized route is not connected, travelers use that edge's
//! detour: the shortest alternative-layer path between its endpoints.

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Ordering;
use std::ops::Range;

use crate::demand::TravelRequest;
use crate::error::{Error, Result};
use crate::net_model::{EdgeId, EdgeLayer, MobilityGraph, NetworkState, NodeId};
use crate::params::ServiceParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RoutePair {
    /// Transfer, rail edges, transfer; falls back to the alternative route
    /// when the endpoints have no rail connection at all.
    pub rail_route: Vec<EdgeId>,
    pub alt_route: Vec<EdgeId>,
    /// Detour for every rail edge on `rail_route`.
    pub detours: BTreeMap<EdgeId, Vec<EdgeId>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64, NodeId);

impl Eq for Dist {}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Shortest path by length over edges accepted by `allowed`. Among equal
/// lengths the lexicographically smallest edge-id sequence wins.
pub fn shortest_path(
    graph: &MobilityGraph,
    from: NodeId,
    to: NodeId,
    allowed: impl Fn(EdgeId) -> bool,
) -> Option<Vec<EdgeId>> {
    let n = graph.nodes().len();
    let mut incoming: Vec<Vec<EdgeId>> = vec![Vec::new(); n];
    for e in graph.edges() {
        if allowed(e.id) {
            incoming[e.head.0].push(e.id);
        }
    }
    // distances to `to`
    let mut dist = vec![f64::INFINITY; n];
    dist[to.0] = 0.0;
    let mut heap = BinaryHeap::from([Dist(0.0, to)]);
    while let Some(Dist(d, v)) = heap.pop() {
        if d > dist[v.0] {
            continue;
        }
        for &e in &incoming[v.0] {
            let edge = graph.edge(e);
            let nd = d + edge.length;
            if nd < dist[edge.tail.0] {
                dist[edge.tail.0] = nd;
                heap.push(Dist(nd, edge.tail));
            }
        }
    }
    if !dist[from.0].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut visited = vec![false; n];
    let mut at = from;
    while at != to {
        visited[at.0] = true;
        let next = graph
            .out_edges(at)
            .iter()
            .copied()
            .filter(|&e| allowed(e))
            .filter(|&e| {
                let edge = graph.edge(e);
                !visited[edge.head.0] && near(dist[at.0], edge.length + dist[edge.head.0])
            })
            .min()?;
        path.push(next);
        at = graph.edge(next).head;
    }
    Some(path)
}

fn alt_path(graph: &MobilityGraph, from: NodeId, to: NodeId) -> Result<Vec<EdgeId>> {
    shortest_path(graph, from, to, |e| graph.edge(e).layer == EdgeLayer::Alt).ok_or(
        Error::Unreachable { from: graph.node(from).site, to: graph.node(to).site },
    )
}

/// Detour of a rail edge: shortest alternative path between its sites.
pub fn detour_of(graph: &MobilityGraph, rail_edge: EdgeId) -> Result<Vec<EdgeId>> {
    let edge = graph.edge(rail_edge);
    let site = |n: NodeId| graph.node(n).site;
    let from = graph.alt_node(site(edge.tail)).ok_or(Error::UnknownNode(site(edge.tail)))?;
    let to = graph.alt_node(site(edge.head)).ok_or(Error::UnknownNode(site(edge.head)))?;
    alt_path(graph, from, to)
}

fn rail_path(graph: &MobilityGraph, origin: u32, destination: u32) -> Option<Vec<EdgeId>> {
    let (o_alt, d_alt) = (graph.alt_node(origin)?, graph.alt_node(destination)?);
    let (o_rail, d_rail) = (graph.rail_node(origin)?, graph.rail_node(destination)?);
    let transfer = |a: NodeId, b: NodeId| {
        graph
            .out_edges(a)
            .iter()
            .copied()
            .find(|&e| graph.edge(e).layer == EdgeLayer::Transfer && graph.edge(e).head == b)
    };
    let access = transfer(o_alt, o_rail)?;
    let egress = transfer(d_rail, d_alt)?;
    let mut route = vec![access];
    route.extend(shortest_path(graph, o_rail, d_rail, |e| graph.is_rail(e))?);
    route.push(egress);
    Some(route)
}

pub fn preselect_routes(graph: &MobilityGraph, request: &TravelRequest) -> Result<RoutePair> {
    let o = graph.alt_node(request.origin).ok_or(Error::UnknownNode(request.origin))?;
    let d = graph.alt_node(request.destination).ok_or(Error::UnknownNode(request.destination))?;
    let alt_route = alt_path(graph, o, d)?;
    let rail_route = rail_path(graph, request.origin, request.destination)
        .unwrap_or_else(|| alt_route.clone());
    let mut detours = BTreeMap::new();
    for &e in rail_route.iter().filter(|&&e| graph.is_rail(e)) {
        detours.insert(e, detour_of(graph, e)?);
    }
    Ok(RoutePair { rail_route, alt_route, detours })
}

fn path_alt_cost(graph: &MobilityGraph, path: &[EdgeId], params: &ServiceParams) -> f64 {
    path.iter().map(|&e| graph.edge(e).length).sum::<f64>() * params.alt_cost_per_km()
}

/// Generalized costs `(u_R, u_A)` in CHF of the two preselected routes.
pub fn route_costs(
    graph: &MobilityGraph,
    pair: &RoutePair,
    state: &NetworkState,
    params: &ServiceParams,
) -> (f64, f64) {
    let u_alt = path_alt_cost(graph, &pair.alt_route, params);
    let mut u_rail = 0.0;
    for &e in &pair.rail_route {
        let edge = graph.edge(e);
        u_rail += match edge.layer {
            EdgeLayer::Rail if state.is_connected(e) => edge.length * params.rail_cost_per_km(),
            EdgeLayer::Rail => path_alt_cost(graph, &pair.detours[&e], params),
            EdgeLayer::Alt => edge.length * params.alt_cost_per_km(),
            EdgeLayer::Transfer => 0.0,
        };
    }
    (u_rail, u_alt)
}

/// Share of travelers choosing the train-prioritized route,
/// `exp(-μ u_R) / (exp(-μ u_A) + exp(-μ u_R))`, evaluated without overflow.
pub fn logit_split(u_rail: f64, u_alt: f64, scale: f64) -> f64 {
    let d = scale * (u_rail - u_alt);
    if d > 0.0 {
        let z = (-d).exp();
        z / (1.0 + z)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

/// Edge flows (pax/day) and unserved rail demand, both indexed by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub flow: Vec<f64>,
    /// Nonzero only on rail edges.
    pub unserved: Vec<f64>,
    /// Demand routed onto each rail edge before capping.
    pub rail_demand: Vec<f64>,
}

impl FlowField {
    pub fn zeros(edges: usize) -> Self {
        Self { flow: vec![0.0; edges], unserved: vec![0.0; edges], rail_demand: vec![0.0; edges] }
    }

    pub fn flow(&self, e: EdgeId) -> f64 {
        self.flow[e.0]
    }

    pub fn unserved(&self, e: EdgeId) -> f64 {
        self.unserved[e.0]
    }
}

#[derive(Debug, Clone)]
struct CompiledRequest {
    trips: f64,
    u_alt: f64,
    rail_legs: Range<usize>,
    access: Range<usize>,
    alt_route: Range<usize>,
}

/// Routes and costs compiled for one demand vector, so that flows can be
/// re-evaluated cheaply for many candidate layouts.
#[derive(Debug, Clone)]
pub struct Assigner {
    edges: usize,
    scale: f64,
    requests: Vec<CompiledRequest>,
    rail_legs: Vec<EdgeId>,
    access: Vec<EdgeId>,
    alt_routes: Vec<EdgeId>,
    rail_leg_cost: Vec<f64>,
    detour_cost: Vec<f64>,
    detours: Vec<Vec<EdgeId>>,
    rail_edges: Vec<EdgeId>,
}

/// Route pairs for every origin-destination pair of a demand set, with the
/// shared per-edge detours.
#[derive(Debug, Clone)]
pub struct RoutePlan {
    pub pairs: BTreeMap<(u32, u32), RoutePair>,
}

impl RoutePlan {
    pub fn new(graph: &MobilityGraph, requests: &[TravelRequest]) -> Result<Self> {
        let mut detours: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
        let mut pairs = BTreeMap::new();
        for r in requests {
            if pairs.contains_key(&(r.origin, r.destination)) {
                continue;
            }
            let o = graph.alt_node(r.origin).ok_or(Error::UnknownNode(r.origin))?;
            let d = graph.alt_node(r.destination).ok_or(Error::UnknownNode(r.destination))?;
            let alt_route = alt_path(graph, o, d)?;
            let rail_route = rail_path(graph, r.origin, r.destination)
                .unwrap_or_else(|| alt_route.clone());
            let mut own = BTreeMap::new();
            for &e in rail_route.iter().filter(|&&e| graph.is_rail(e)) {
                let path = match detours.entry(e) {
                    std::collections::btree_map::Entry::Occupied(o) => o.into_mut(),
                    std::collections::btree_map::Entry::Vacant(v) => v.insert(detour_of(graph, e)?),
                };
                own.insert(e, path.clone());
            }
            pairs.insert((r.origin, r.destination), RoutePair { rail_route, alt_route, detours: own });
        }
        Ok(Self { pairs })
    }
}

impl Assigner {
    pub fn new(
        graph: &MobilityGraph,
        requests: &[TravelRequest],
        params: &ServiceParams,
        scale: f64,
    ) -> Result<Self> {
        let plan = RoutePlan::new(graph, requests)?;
        Ok(Self::from_plan(graph, &plan, requests, params, scale))
    }

    /// `plan` must cover every OD pair of `requests`.
    pub fn from_plan(
        graph: &MobilityGraph,
        plan: &RoutePlan,
        requests: &[TravelRequest],
        params: &ServiceParams,
        scale: f64,
    ) -> Self {
        let n = graph.edge_count();
        let mut me = Assigner {
            edges: n,
            scale,
            requests: Vec::with_capacity(requests.len()),
            rail_legs: Vec::new(),
            access: Vec::new(),
            alt_routes: Vec::new(),
            rail_leg_cost: vec![0.0; n],
            detour_cost: vec![0.0; n],
            detours: vec![Vec::new(); n],
            rail_edges: graph.rail_edges().to_vec(),
        };
        for &e in graph.rail_edges() {
            me.rail_leg_cost[e.0] = graph.edge(e).length * params.rail_cost_per_km();
        }
        for pair in plan.pairs.values() {
            for (&e, path) in &pair.detours {
                if me.detours[e.0].is_empty() {
                    me.detour_cost[e.0] = path_alt_cost(graph, path, params);
                    me.detours[e.0] = path.clone();
                }
            }
        }
        for r in requests {
            let pair = &plan.pairs[&(r.origin, r.destination)];
            let start = me.rail_legs.len();
            let astart = me.access.len();
            for &e in &pair.rail_route {
                match graph.edge(e).layer {
                    EdgeLayer::Rail => me.rail_legs.push(e),
                    EdgeLayer::Alt => me.access.push(e),
                    EdgeLayer::Transfer => {}
                }
            }
            let rstart = me.alt_routes.len();
            me.alt_routes.extend_from_slice(&pair.alt_route);
            me.requests.push(CompiledRequest {
                trips: r.trips as f64,
                u_alt: path_alt_cost(graph, &pair.alt_route, params),
                rail_legs: start..me.rail_legs.len(),
                access: astart..me.access.len(),
                alt_route: rstart..me.alt_routes.len(),
            });
        }
        // alt edges on a fallback rail route are costed at alternative rates
        for &e in &me.access {
            me.detour_cost[e.0] = graph.edge(e).length * params.alt_cost_per_km();
        }
        me
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn request_count(&self) -> usize {
        self.requests.len()
    }

    /// `(u_R, u_A)` of request `m` under `state`.
    pub fn costs(&self, m: usize, state: &NetworkState) -> (f64, f64) {
        let r = &self.requests[m];
        (self.rail_cost(r, state), r.u_alt)
    }

    fn rail_cost(&self, r: &CompiledRequest, state: &NetworkState) -> f64 {
        let mut u = 0.0;
        for &e in &self.rail_legs[r.rail_legs.clone()] {
            u += if state.is_connected(e) { self.rail_leg_cost[e.0] } else { self.detour_cost[e.0] };
        }
        for &e in &self.access[r.access.clone()] {
            u += self.detour_cost[e.0];
        }
        u
    }

    /// Train-route share of every request under `state`.
    pub fn shares(&self, state: &NetworkState) -> Vec<f64> {
        self.requests
            .iter()
            .map(|r| logit_split(self.rail_cost(r, state), r.u_alt, self.scale))
            .collect()
    }

    pub fn assign(&self, state: &NetworkState) -> FlowField {
        let mut out = FlowField::zeros(self.edges);
        for r in &self.requests {
            let p = logit_split(self.rail_cost(r, state), r.u_alt, self.scale);
            let rail = r.trips * p;
            let alt = r.trips - rail;
            for &e in &self.rail_legs[r.rail_legs.clone()] {
                out.rail_demand[e.0] += rail;
            }
            for &e in &self.access[r.access.clone()] {
                out.flow[e.0] += rail;
            }
            for &e in &self.alt_routes[r.alt_route.clone()] {
                out.flow[e.0] += alt;
            }
        }
        for &a in &self.rail_edges {
            let demand = out.rail_demand[a.0];
            let cap = state.capacity(a) as f64;
            out.flow[a.0] = demand.min(cap);
            let spill = (demand - cap).max(0.0);
            out.unserved[a.0] = spill;
            if spill > 0.0 {
                for &e in &self.detours[a.0] {
                    out.flow[e.0] += spill;
                }
            }
        }
        out
    }
}

/// One-shot assignment of `requests` on `state`.
pub fn assign_flows(
    graph: &MobilityGraph,
    state: &NetworkState,
    requests: &[TravelRequest],
    params: &ServiceParams,
    scale: f64,
) -> Result<FlowField> {
    Ok(Assigner::new(graph, requests, params, scale)?.assign(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::TripType;
    use crate::net_model::{build_sioux_falls, DesignAction};

    fn req(o: u32, d: u32, trips: u32) -> TravelRequest {
        TravelRequest { origin: o, destination: d, trips, trip_type: TripType::Intra1 }
    }

    /// Two sites joined by one 10 km link in each direction.
    fn line() -> MobilityGraph {
        MobilityGraph::parse("[nodes]\n1 1 1 0 0\n2 1 1 1 0\n[edges]\n1 1 2 10 1\n2 2 1 10 1\n")
            .unwrap()
    }

    #[test]
    fn logit_examples() {
        assert_eq!(logit_split(3.0, 3.0, 0.1), 0.5);
        let p = logit_split(1.0, 2.0, 1.0);
        assert!((p - 0.731_058_578_630_004_9).abs() < 1e-12);
        let tiny = logit_split(2.0 + 1e6, 2.0, 1.0);
        assert_eq!(tiny, 0.0);
        assert_eq!(logit_split(2.0, 2.0 + 1e6, 1.0), 1.0);
    }

    #[test]
    fn single_leg_costs() {
        let g = line();
        let p = ServiceParams::default();
        let pair = preselect_routes(&g, &req(1, 2, 1)).unwrap();
        assert_eq!(pair.alt_route, vec![EdgeId(0)]);
        let rail = g.rail_edges()[0];
        let built = NetworkState::empty(&g, &p)
            .apply_action(&g, &DesignAction::new().with(rail, true, 1))
            .unwrap();
        let (u_r, u_a) = route_costs(&g, &pair, &built, &p);
        assert!((u_r - 4.5).abs() < 1e-12);
        assert!((u_a - 19.5).abs() < 1e-12);
        let (u_r, u_a) = route_costs(&g, &pair, &NetworkState::empty(&g, &p), &p);
        assert!((u_r - u_a).abs() < 1e-12);
    }

    #[test]
    fn capacity_spillover_example() {
        // α = 100 with p = 0.6 on a rail leg of capacity 50
        let g = line();
        let params = ServiceParams { seat_capacity: 50, ..ServiceParams::default() };
        let rail = g.rail_edges()[0];
        let state = NetworkState::empty(&g, &params)
            .apply_action(&g, &DesignAction::new().with(rail, true, 1))
            .unwrap();
        let assigner = Assigner::new(&g, &[req(1, 2, 100)], &params, 1.0).unwrap();
        let (u_r, u_a) = assigner.costs(0, &state);
        // pick μ so that p = 0.6 exactly: μ = ln(1.5) / (u_A - u_R)
        let mu = (1.5f64).ln() / (u_a - u_r);
        let assigner = Assigner::new(&g, &[req(1, 2, 100)], &params, mu).unwrap();
        assert!((assigner.shares(&state)[0] - 0.6).abs() < 1e-12);
        let f = assigner.assign(&state);
        let alt = g.alt_edges()[0];
        assert!((f.flow(rail) - 50.0).abs() < 1e-9);
        assert!((f.unserved(rail) - 10.0).abs() < 1e-9);
        // the detour of the rail edge is the alternative edge itself:
        // 40 alternative-route travelers plus 10 spilled
        assert!((f.flow(alt) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn zero_demand_zero_flow() {
        let g = build_sioux_falls();
        let p = ServiceParams::default();
        let reqs: Vec<_> = [(1, 24), (3, 20)].iter().map(|&(o, d)| req(o, d, 0)).collect();
        let f = assign_flows(&g, &NetworkState::empty(&g, &p), &reqs, &p, 0.1).unwrap();
        assert!(f.flow.iter().chain(&f.unserved).all(|&x| x == 0.0));
    }

    #[test]
    fn uncapacitated_rail_carries_all_train_demand() {
        let g = build_sioux_falls();
        let p = ServiceParams { seat_capacity: 1_000_000, ..ServiceParams::default() };
        let mut action = DesignAction::new();
        for &e in g.rail_edges() {
            action.set(e, true, 1);
        }
        let state = NetworkState::empty(&g, &p).apply_action(&g, &action).unwrap();
        let reqs = vec![req(1, 24, 150), req(20, 3, 80)];
        let assigner = Assigner::new(&g, &reqs, &p, 0.1).unwrap();
        let shares = assigner.shares(&state);
        let f = assigner.assign(&state);
        assert!(f.unserved.iter().all(|&d| d == 0.0));
        for &e in g.rail_edges() {
            assert!((f.flow(e) - f.rail_demand[e.0]).abs() < 1e-12);
        }
        let first_leg = preselect_routes(&g, &reqs[0]).unwrap().rail_route[1];
        assert!((f.flow(first_leg) - 150.0 * shares[0]).abs() < 1e-9);
    }

    #[test]
    fn diamond_tie_break_is_lexicographic() {
        // 1 -> 2 -> 4 and 1 -> 3 -> 4, all 1 km
        let g = MobilityGraph::parse(
            "[nodes]\n1 1 1 0 0\n2 1 1 0 0\n3 1 1 0 0\n4 1 1 0 0\n[edges]\n\
             1 1 3 1 1\n2 1 2 1 1\n3 3 4 1 1\n4 2 4 1 1\n5 4 1 2 1\n",
        )
        .unwrap();
        let pair = preselect_routes(&g, &req(1, 4, 1)).unwrap();
        assert_eq!(pair.alt_route, vec![EdgeId(0), EdgeId(2)]);
        for _ in 0..3 {
            assert_eq!(preselect_routes(&g, &req(1, 4, 1)).unwrap(), pair);
        }
    }
}
