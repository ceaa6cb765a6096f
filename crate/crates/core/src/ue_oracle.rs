//! Small-instance user equilibrium with congestible roads and capacitated
//! rail, used to sanity-check the logit assignment.
//!
//! Paths are enumerated up to a hop bound. The Beckmann program is solved
//! by projected gradient on each request's path simplex, with rail
//! capacities handled by an augmented Lagrangian.

use crate::demand::TravelRequest;
use crate::error::{Error, Result};
use crate::net_model::{DesignAction, EdgeId, EdgeLayer, MobilityGraph, NetworkState, NodeId};
use crate::params::ServiceParams;

pub const MAX_NODES: usize = 10;
pub const MAX_PATHS: usize = 6;

/// Candidate paths per request, as edge-id sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Vec<Vec<EdgeId>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeResult {
    pub paths: PathSet,
    pub path_flows: Vec<Vec<f64>>,
    /// Indexed by [`EdgeId`].
    pub edge_flows: Vec<f64>,
    /// Capacity multipliers on rail edges, CHF/pax; zero elsewhere.
    pub multipliers: Vec<f64>,
    /// Relative equilibrium gap under multiplier-inclusive path costs.
    pub gap: f64,
    /// Augmented objective after every inner step, in solve order.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Generalized cost of traversing `e` with flow `y`, CHF/pax.
pub fn edge_cost(y: f64, graph: &MobilityGraph, e: EdgeId, state: &NetworkState, params: &ServiceParams) -> Result<f64> {
    let edge = graph.edge(e);
    match edge.layer {
        EdgeLayer::Alt => {
            if edge.road_capacity == 0 {
                return Err(Error::ZeroRoadCapacity(e));
            }
            let free = params.value_of_time * edge.length / params.alt_speed;
            let ratio = y.max(0.0) / edge.road_capacity as f64;
            Ok(free * (1.0 + params.bpr_coefficient * ratio.powf(params.bpr_exponent))
                + edge.length * params.alt_fare)
        }
        EdgeLayer::Rail if state.is_connected(e) => Ok(edge.length * params.rail_cost_per_km()),
        EdgeLayer::Rail | EdgeLayer::Transfer => Ok(0.0),
    }
}

/// `∫_0^y edge_cost`, the edge's Beckmann term.
fn edge_integral(y: f64, graph: &MobilityGraph, e: EdgeId, params: &ServiceParams) -> f64 {
    let edge = graph.edge(e);
    match edge.layer {
        EdgeLayer::Alt => {
            let free = params.value_of_time * edge.length / params.alt_speed;
            let c = edge.road_capacity as f64;
            let b = params.bpr_exponent;
            (free + edge.length * params.alt_fare) * y
                + free * params.bpr_coefficient * c / (b + 1.0) * (y / c).powf(b + 1.0)
        }
        EdgeLayer::Rail => edge.length * params.rail_cost_per_km() * y,
        EdgeLayer::Transfer => 0.0,
    }
}

fn usable(graph: &MobilityGraph, state: &NetworkState, e: EdgeId) -> bool {
    graph.edge(e).layer != EdgeLayer::Rail || state.is_connected(e)
}

/// Simple paths between the road nodes of each request, at most `hops`
/// edges long.
pub fn enumerate_paths(
    graph: &MobilityGraph,
    state: &NetworkState,
    requests: &[TravelRequest],
    hops: usize,
) -> Result<PathSet> {
    if graph.nodes().len() > MAX_NODES {
        return Err(Error::TooLarge(format!("{} nodes (limit {MAX_NODES})", graph.nodes().len())));
    }
    let mut paths = Vec::with_capacity(requests.len());
    for r in requests {
        let from = graph.alt_node(r.origin).ok_or(Error::UnknownNode(r.origin))?;
        let to = graph.alt_node(r.destination).ok_or(Error::UnknownNode(r.destination))?;
        let mut found = Vec::new();
        let mut on_path = vec![false; graph.nodes().len()];
        on_path[from.0] = true;
        dfs(graph, state, from, to, hops, &mut on_path, &mut Vec::new(), &mut found);
        if found.is_empty() {
            return Err(Error::Unreachable { from: r.origin, to: r.destination });
        }
        if found.len() > MAX_PATHS {
            return Err(Error::TooLarge(format!(
                "{} paths for {}->{} (limit {MAX_PATHS})",
                found.len(),
                r.origin,
                r.destination
            )));
        }
        paths.push(found);
    }
    Ok(PathSet { paths })
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    graph: &MobilityGraph,
    state: &NetworkState,
    at: NodeId,
    to: NodeId,
    hops: usize,
    on_path: &mut [bool],
    path: &mut Vec<EdgeId>,
    out: &mut Vec<Vec<EdgeId>>,
) {
    if at == to {
        out.push(path.clone());
        return;
    }
    if path.len() == hops {
        return;
    }
    for &e in graph.out_edges(at) {
        let head = graph.edge(e).head;
        if on_path[head.0] || !usable(graph, state, e) {
            continue;
        }
        on_path[head.0] = true;
        path.push(e);
        dfs(graph, state, head, to, hops, on_path, path, out);
        path.pop();
        on_path[head.0] = false;
    }
}

/// Euclidean projection onto `{x >= 0, Σx = total}`.
fn project_simplex(v: &mut [f64], total: f64) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - total) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

struct Program<'a> {
    graph: &'a MobilityGraph,
    state: &'a NetworkState,
    params: &'a ServiceParams,
    paths: &'a PathSet,
    demand: Vec<f64>,
    rail: Vec<EdgeId>,
    rho: f64,
}

impl Program<'_> {
    fn edge_flows(&self, f: &[Vec<f64>]) -> Vec<f64> {
        let mut y = vec![0.0; self.graph.edge_count()];
        for (ps, fs) in self.paths.paths.iter().zip(f) {
            for (p, &x) in ps.iter().zip(fs) {
                for e in p {
                    y[e.0] += x;
                }
            }
        }
        y
    }

    fn capacity(&self, e: EdgeId) -> f64 {
        self.state.capacity(e) as f64
    }

    fn augmented(&self, y: &[f64], lambda: &[f64]) -> f64 {
        let mut v: f64 = (0..y.len()).map(|i| edge_integral(y[i], self.graph, EdgeId(i), self.params)).sum();
        for &e in &self.rail {
            let g = lambda[e.0] / self.rho + y[e.0] - self.capacity(e);
            v += self.rho / 2.0 * g.max(0.0).powi(2) - lambda[e.0].powi(2) / (2.0 * self.rho);
        }
        v
    }

    /// Edge costs including the capacity penalty gradient.
    fn costs(&self, y: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
        let mut c = Vec::with_capacity(y.len());
        for (i, &v) in y.iter().enumerate() {
            c.push(edge_cost(v, self.graph, EdgeId(i), self.state, self.params)?);
        }
        for &e in &self.rail {
            c[e.0] += (lambda[e.0] + self.rho * (y[e.0] - self.capacity(e))).max(0.0);
        }
        Ok(c)
    }

    fn path_costs(&self, c: &[f64]) -> Vec<Vec<f64>> {
        self.paths
            .paths
            .iter()
            .map(|ps| ps.iter().map(|p| p.iter().map(|e| c[e.0]).sum()).collect())
            .collect()
    }

    fn gap(&self, f: &[Vec<f64>], pc: &[Vec<f64>]) -> f64 {
        let mut gap: f64 = 0.0;
        for ((fs, cs), &d) in f.iter().zip(pc).zip(&self.demand) {
            let min = cs.iter().copied().fold(f64::INFINITY, f64::min);
            let used = fs
                .iter()
                .zip(cs)
                .filter(|(x, _)| **x > 1e-9 * d.max(1.0))
                .map(|(_, c)| *c)
                .fold(min, f64::max);
            gap = gap.max((used - min) / min.abs().max(1e-12));
        }
        gap
    }
}

/// Settings of the equilibrium solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeSettings {
    pub hops: usize,
    pub tolerance: f64,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl Default for UeSettings {
    fn default() -> Self {
        Self { hops: 8, tolerance: 1e-7, max_inner: 20_000, max_outer: 200 }
    }
}

/// Wardrop equilibrium of `requests` on `state` over all simple paths
/// within the hop bound.
pub fn solve_ue(
    graph: &MobilityGraph,
    state: &NetworkState,
    requests: &[TravelRequest],
    params: &ServiceParams,
    settings: &UeSettings,
) -> Result<UeResult> {
    let paths = enumerate_paths(graph, state, requests, settings.hops)?;
    solve_on_paths(graph, state, requests, params, paths, settings)
}

/// Equilibrium restricted to a given path set (one entry per request).
pub fn solve_on_paths(
    graph: &MobilityGraph,
    state: &NetworkState,
    requests: &[TravelRequest],
    params: &ServiceParams,
    paths: PathSet,
    settings: &UeSettings,
) -> Result<UeResult> {
    let demand: Vec<f64> = requests.iter().map(|r| r.trips as f64).collect();
    let rail: Vec<EdgeId> =
        graph.rail_edges().iter().copied().filter(|&e| state.is_connected(e)).collect();
    let total: f64 = demand.iter().sum::<f64>().max(1.0);
    let cost_scale = graph.edges().iter().map(|e| e.length).fold(1.0, f64::max)
        * params.alt_cost_per_km().max(params.rail_cost_per_km());
    let program = Program { graph, state, params, paths: &paths, demand, rail, rho: 10.0 * cost_scale / total };

    let mut f: Vec<Vec<f64>> = paths
        .paths
        .iter()
        .zip(&program.demand)
        .map(|(ps, &d)| vec![d / ps.len() as f64; ps.len()])
        .collect();
    let mut lambda = vec![0.0; graph.edge_count()];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut step = total / cost_scale;
    let mut gap = f64::INFINITY;

    for _ in 0..settings.max_outer {
        for _ in 0..settings.max_inner {
            iterations += 1;
            let y = program.edge_flows(&f);
            let value = program.augmented(&y, &lambda);
            let pc = program.path_costs(&program.costs(&y, &lambda)?);
            gap = program.gap(&f, &pc);
            if gap < settings.tolerance {
                break;
            }
            // Armijo backtracking along the projected direction
            loop {
                let mut trial = f.clone();
                let mut decrease = 0.0;
                for ((t, cs), &d) in trial.iter_mut().zip(&pc).zip(&program.demand) {
                    let old = t.clone();
                    for (x, c) in t.iter_mut().zip(cs) {
                        *x -= step * c;
                    }
                    project_simplex(t, d);
                    decrease += old.iter().zip(t.iter()).zip(cs).map(|((o, n), c)| c * (o - n)).sum::<f64>();
                }
                let tv = program.augmented(&program.edge_flows(&trial), &lambda);
                if tv <= value - 1e-4 * decrease || step < 1e-300 {
                    history.push(tv.min(value));
                    if tv <= value {
                        f = trial;
                    }
                    step *= 2.0;
                    break;
                }
                step /= 2.0;
            }
        }
        let y = program.edge_flows(&f);
        let mut violation: f64 = 0.0;
        for &e in &program.rail {
            let over = y[e.0] - program.capacity(e);
            lambda[e.0] = (lambda[e.0] + program.rho * over).max(0.0);
            violation = violation.max(over / program.capacity(e).max(1.0));
        }
        let pc = program.path_costs(&program.costs(&y, &lambda)?);
        gap = program.gap(&f, &pc);
        if violation <= 1e-7 && gap < settings.tolerance {
            break;
        }
    }

    let edge_flows = program.edge_flows(&f);
    for &e in &program.rail {
        let cap = program.capacity(e);
        if edge_flows[e.0] > cap * (1.0 + 1e-6) + 1e-6 {
            return Err(Error::Infeasible(format!(
                "rail edge {e} carries {:.3} over capacity {cap}",
                edge_flows[e.0]
            )));
        }
    }
    let multipliers = lambda;
    Ok(UeResult { paths, path_flows: f, edge_flows, multipliers, gap, history, iterations })
}

/// A bundled toy instance.
pub struct UeInstance {
    pub name: &'static str,
    pub graph: MobilityGraph,
    pub state: NetworkState,
    pub params: ServiceParams,
    pub requests: Vec<TravelRequest>,
}

impl UeInstance {
    pub fn solve(&self) -> Result<UeResult> {
        solve_ue(&self.graph, &self.state, &self.requests, &self.params, &UeSettings::default())
    }
}

fn request(graph: &MobilityGraph, origin: u32, destination: u32, trips: u32) -> TravelRequest {
    let trip_type = crate::demand::classify(origin, destination, graph).expect("toy sites exist");
    TravelRequest { origin, destination, trips, trip_type }
}

fn with_rail(graph: &MobilityGraph, params: &ServiceParams, frequency: u32) -> NetworkState {
    let mut action = DesignAction::new();
    for &e in graph.rail_edges() {
        action.set(e, true, frequency);
    }
    NetworkState::empty(graph, params).apply_action(graph, &action).expect("toy layout is valid")
}

/// One rail line and one congestible road between two sites. Rail is
/// priced so that the equilibrium splits demand between both.
pub fn pigou() -> UeInstance {
    let graph = MobilityGraph::parse(
        "[nodes]\n1 1 1 0 0\n2 1 1 1 0\n[edges]\n1 1 2 10 1 50\n2 2 1 10 0 50\n",
    )
    .expect("toy network parses");
    let params = ServiceParams { rail_fare: 2.0, seat_capacity: 1000, ..ServiceParams::default() };
    let state = with_rail(&graph, &params, 1);
    let requests = vec![request(&graph, 1, 2, 100)];
    UeInstance { name: "pigou", graph, state, params, requests }
}

/// Road flow of [`pigou`] at equilibrium, from equal path costs.
pub fn pigou_closed_form(instance: &UeInstance) -> f64 {
    let p = &instance.params;
    let road = instance.graph.alt_edges()[0];
    let edge = instance.graph.edge(road);
    let rail = edge.length * p.rail_cost_per_km();
    let free = p.value_of_time * edge.length / p.alt_speed;
    let excess = (rail - free - edge.length * p.alt_fare) / (free * p.bpr_coefficient);
    let demand = instance.requests[0].trips as f64;
    if excess <= 0.0 {
        return demand;
    }
    (edge.road_capacity as f64 * excess.powf(1.0 / p.bpr_exponent)).min(demand)
}

/// Two identical road routes through different middle sites.
pub fn symmetric() -> UeInstance {
    let graph = MobilityGraph::parse(
        "[nodes]\n1 1 0 0 0\n2 1 0 1 1\n3 1 0 1 -1\n4 1 0 2 0\n[edges]\n\
         1 1 2 5 0 40\n2 2 4 5 0 40\n3 1 3 5 0 40\n4 3 4 5 0 40\n\
         5 2 1 5 0 40\n6 4 2 5 0 40\n7 3 1 5 0 40\n8 4 3 5 0 40\n",
    )
    .expect("toy network parses");
    let params = ServiceParams::default();
    let state = NetworkState::empty(&graph, &params);
    let requests = vec![request(&graph, 1, 4, 100)];
    UeInstance { name: "symmetric", graph, state, params, requests }
}

/// Rail cheaper than the road but limited to 50 seats.
pub fn capacitated() -> UeInstance {
    let graph = MobilityGraph::parse(
        "[nodes]\n1 1 1 0 0\n2 2 1 1 0\n[edges]\n1 1 2 10 1 50\n2 2 1 10 0 50\n",
    )
    .expect("toy network parses");
    let params = ServiceParams { seat_capacity: 50, ..ServiceParams::default() };
    let state = with_rail(&graph, &params, 1);
    let requests = vec![request(&graph, 1, 2, 100)];
    UeInstance { name: "capacitated", graph, state, params, requests }
}

pub fn toy_instances() -> Vec<UeInstance> {
    vec![pigou(), symmetric(), capacitated()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpr_branches() {
        let inst = pigou();
        let (g, s, p) = (&inst.graph, &inst.state, &inst.params);
        let road = g.alt_edges()[0];
        let free = edge_cost(0.0, g, road, s, p).unwrap();
        assert!((free - (3.0 + 16.5)).abs() < 1e-12);
        let at_cap = edge_cost(50.0, g, road, s, p).unwrap();
        assert!((at_cap - (3.0 * 1.15 + 16.5)).abs() < 1e-12);
        let rail = g.rail_edges()[0];
        assert_eq!(edge_cost(0.0, g, rail, s, p).unwrap(), edge_cost(1e4, g, rail, s, p).unwrap());
    }

    #[test]
    fn zero_road_capacity() {
        let g = MobilityGraph::parse("[nodes]\n1 1 0 0 0\n2 1 0 1 0\n[edges]\n1 1 2 1 0\n2 2 1 1 0\n").unwrap();
        let p = ServiceParams::default();
        let s = NetworkState::empty(&g, &p);
        assert!(matches!(edge_cost(1.0, &g, g.alt_edges()[0], &s, &p), Err(Error::ZeroRoadCapacity(_))));
    }

    #[test]
    fn simplex_projection() {
        let mut v = vec![3.0, 1.0, -2.0];
        project_simplex(&mut v, 2.0);
        assert!((v.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(v.iter().all(|x| *x >= 0.0));
        assert_eq!(v, vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn pigou_matches_closed_form() {
        let inst = pigou();
        let r = inst.solve().unwrap();
        let road = r.edge_flows[inst.graph.alt_edges()[0].0];
        let expected = pigou_closed_form(&inst);
        assert!(expected > 0.0 && expected < 100.0);
        assert!((road - expected).abs() <= 1e-4 * expected, "{road} vs {expected}");
        assert!(r.gap < 1e-3);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs()));
    }

    #[test]
    fn symmetric_split() {
        let inst = symmetric();
        let r = inst.solve().unwrap();
        assert_eq!(r.path_flows[0].len(), 2);
        assert!((r.path_flows[0][0] - 50.0).abs() < 1e-6);
        assert!(r.gap < 1e-3);
    }

    #[test]
    fn capacity_binds() {
        let inst = capacitated();
        let r = inst.solve().unwrap();
        let rail = r.edge_flows[inst.graph.rail_edges()[0].0];
        let road = r.edge_flows[inst.graph.alt_edges()[0].0];
        assert!((rail - 50.0).abs() < 1e-3, "{rail}");
        assert!((road - 50.0).abs() < 1e-3, "{road}");
        assert!(r.multipliers[inst.graph.rail_edges()[0].0] > 0.0);
        assert!(r.gap < 1e-3);
    }

    #[test]
    fn rail_only_paths_over_capacity() {
        let inst = capacitated();
        let rail_path: Vec<EdgeId> = enumerate_paths(&inst.graph, &inst.state, &inst.requests, 8)
            .unwrap()
            .paths[0]
            .iter()
            .find(|p| p.iter().any(|e| inst.graph.is_rail(*e)))
            .unwrap()
            .clone();
        let settings = UeSettings { max_outer: 20, max_inner: 500, ..UeSettings::default() };
        let only_rail = PathSet { paths: vec![vec![rail_path]] };
        let r = solve_on_paths(&inst.graph, &inst.state, &inst.requests, &inst.params, only_rail, &settings);
        assert!(matches!(r, Err(Error::Infeasible(_))), "{r:?}");
    }
}
