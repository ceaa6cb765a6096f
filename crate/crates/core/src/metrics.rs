//! Per-region emissions, travel cost and profitability, and the weighted
//! stage objective. Crossing edges count half toward each region.

use crate::assign::FlowField;
use crate::net_model::{DesignAction, EdgeId, EdgeLayer, MobilityGraph, Region};
use crate::params::{ServiceParams, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegionMetrics {
    /// kg CO2/day.
    pub emissions: f64,
    /// CHF/day.
    pub travel_cost: f64,
    /// Fare revenue minus this year's construction, CHF/day.
    pub profit: f64,
}

impl RegionMetrics {
    pub fn objective(&self, w: &Weights) -> f64 {
        stage_objective(self, w)
    }
}

impl std::ops::Add for RegionMetrics {
    type Output = RegionMetrics;

    fn add(self, o: RegionMetrics) -> RegionMetrics {
        RegionMetrics {
            emissions: self.emissions + o.emissions,
            travel_cost: self.travel_cost + o.travel_cost,
            profit: self.profit + o.profit,
        }
    }
}

fn weighted_sum(
    flows: &FlowField,
    graph: &MobilityGraph,
    region: Option<Region>,
    per_km: impl Fn(EdgeLayer) -> f64,
) -> f64 {
    let mut total = 0.0;
    for &e in graph.rail_edges().iter().chain(graph.alt_edges()) {
        let share = region.map_or(1.0, |r| graph.region_share(e, r));
        if share == 0.0 {
            continue;
        }
        let edge = graph.edge(e);
        total += share * per_km(edge.layer) * edge.length * flows.flow(e);
    }
    total
}

/// kg CO2/day on region edges; `None` covers the whole network.
pub fn emissions(
    flows: &FlowField,
    graph: &MobilityGraph,
    params: &ServiceParams,
    region: Option<Region>,
) -> f64 {
    weighted_sum(flows, graph, region, |layer| match layer {
        EdgeLayer::Rail => params.rail_emission,
        _ => params.alt_emission,
    })
}

/// Generalized travel cost (time plus fares), CHF/day.
pub fn travel_cost(
    flows: &FlowField,
    graph: &MobilityGraph,
    params: &ServiceParams,
    region: Option<Region>,
) -> f64 {
    weighted_sum(flows, graph, region, |layer| match layer {
        EdgeLayer::Rail => params.rail_cost_per_km(),
        _ => params.alt_cost_per_km(),
    })
}

/// Rail fare revenue, CHF/day.
pub fn revenue(
    flows: &FlowField,
    graph: &MobilityGraph,
    params: &ServiceParams,
    region: Option<Region>,
) -> f64 {
    weighted_sum(flows, graph, region, |layer| match layer {
        EdgeLayer::Rail => params.rail_fare,
        _ => 0.0,
    })
}

/// Construction cost of one edge step, CHF/day.
pub fn edge_step_cost(graph: &MobilityGraph, params: &ServiceParams, e: EdgeId, build: bool, upgrade: u32) -> f64 {
    let l = graph.edge(e).length;
    let base = if build { params.base_cost * l } else { 0.0 };
    base + params.capacity_cost * l * upgrade as f64
}

/// Construction cost attributed to `region` (`None` for the full cost).
pub fn construction_cost(
    action: &DesignAction,
    graph: &MobilityGraph,
    params: &ServiceParams,
    region: Option<Region>,
) -> f64 {
    action
        .iter()
        .map(|(e, a)| {
            let share = region.map_or(1.0, |r| graph.region_share(e, r));
            share * edge_step_cost(graph, params, e, a.build, a.upgrade)
        })
        .sum()
}

pub fn profit(
    flows: &FlowField,
    graph: &MobilityGraph,
    params: &ServiceParams,
    region: Option<Region>,
    action: &DesignAction,
) -> f64 {
    revenue(flows, graph, params, region) - construction_cost(action, graph, params, region)
}

pub fn region_metrics(
    flows: &FlowField,
    graph: &MobilityGraph,
    params: &ServiceParams,
    region: Option<Region>,
    action: &DesignAction,
) -> RegionMetrics {
    RegionMetrics {
        emissions: emissions(flows, graph, params, region),
        travel_cost: travel_cost(flows, graph, params, region),
        profit: profit(flows, graph, params, region, action),
    }
}

/// `-ω0·J^e - ω1·J^c + ω2·J^p`, CHF/day.
pub fn stage_objective(m: &RegionMetrics, w: &Weights) -> f64 {
    -w.emissions * m.emissions - w.travel_cost * m.travel_cost + w.profit * m.profit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::EdgeId;

    /// Sites 1 (region 1) and 2, 3 (region 2); 10 km links.
    fn graph() -> MobilityGraph {
        MobilityGraph::parse(
            "[nodes]\n1 1 1 0 0\n2 1 1 0 0\n3 2 1 0 0\n[edges]\n\
             1 1 2 10 1\n2 2 1 10 1\n3 2 3 10 1\n4 3 2 10 1\n5 1 3 2 1\n6 3 1 2 1\n",
        )
        .unwrap()
    }

    fn flows_on(g: &MobilityGraph, e: EdgeId, y: f64) -> FlowField {
        let mut f = FlowField::zeros(g.edge_count());
        f.flow[e.0] = y;
        f
    }

    #[test]
    fn rail_edge_metrics() {
        let g = graph();
        let p = ServiceParams::default();
        let rail = g.rail_edges()[0];
        let f = flows_on(&g, rail, 100.0);
        let r1 = Some(Region::One);
        assert!((emissions(&f, &g, &p, r1) - 19.0).abs() < 1e-9);
        assert!((travel_cost(&f, &g, &p, r1) - 450.0).abs() < 1e-9);
        let none = DesignAction::new();
        assert!((profit(&f, &g, &p, r1, &none) - 250.0).abs() < 1e-9);
        assert_eq!(emissions(&f, &g, &p, Some(Region::Two)), 0.0);
    }

    #[test]
    fn alt_edge_metrics() {
        let g = graph();
        let p = ServiceParams::default();
        let f = flows_on(&g, g.alt_edges()[0], 100.0);
        assert!((emissions(&f, &g, &p, Some(Region::One)) - 148.0).abs() < 1e-9);
        assert!((travel_cost(&f, &g, &p, Some(Region::One)) - 1950.0).abs() < 1e-9);
    }

    #[test]
    fn construction_of_two_km_edge() {
        let g = graph();
        let p = ServiceParams::default();
        // link 5 is the 2 km crossing edge
        let cross = g.rail_edges()[4];
        assert_eq!(g.edge(cross).length, 2.0);
        let a = DesignAction::new().with(cross, true, 2);
        assert!((construction_cost(&a, &g, &p, None) - 1273.6).abs() < 1e-9);
        let half = construction_cost(&a, &g, &p, Some(Region::One));
        assert!((half - 636.8).abs() < 1e-9);
        let zero = FlowField::zeros(g.edge_count());
        assert_eq!(profit(&zero, &g, &p, None, &DesignAction::new()), 0.0);
    }

    #[test]
    fn objective_examples() {
        let m = RegionMetrics { emissions: 19.0, travel_cost: 450.0, profit: 250.0 };
        let w = Weights::new(0.1, 1.0, 1.0).unwrap();
        assert!((stage_objective(&m, &w) + 201.9).abs() < 1e-9);
        assert_eq!(stage_objective(&RegionMetrics::default(), &w), 0.0);
        assert!((stage_objective(&m, &w.scaled(2.0)) - 2.0 * stage_objective(&m, &w)).abs() < 1e-9);
    }

    #[test]
    fn regions_sum_to_network() {
        let g = graph();
        let p = ServiceParams::default();
        let mut f = FlowField::zeros(g.edge_count());
        for (i, v) in f.flow.iter_mut().enumerate() {
            *v = 10.0 + i as f64;
        }
        let action = DesignAction::new().with(g.rail_edges()[4], true, 3).with(g.rail_edges()[0], true, 1);
        let whole = region_metrics(&f, &g, &p, None, &action);
        let split = region_metrics(&f, &g, &p, Some(Region::One), &action)
            + region_metrics(&f, &g, &p, Some(Region::Two), &action);
        assert!((whole.emissions - split.emissions).abs() < 1e-9);
        assert!((whole.travel_cost - split.travel_cost).abs() < 1e-9);
        assert!((whole.profit - split.profit).abs() < 1e-9);
    }
}
