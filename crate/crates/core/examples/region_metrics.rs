//! Emissions, travel cost, profit and the weighted objective per region.

use netcoop::assign::assign_flows;
use netcoop::demand::{generate, DemandBounds};
use netcoop::metrics::region_metrics;
use netcoop::net_model::RegionClass;
use netcoop::{build_sioux_falls, DesignAction, NetworkState, Region, ServiceParams, Weights};

fn main() -> netcoop::Result<()> {
    let g = build_sioux_falls();
    let params = ServiceParams::default();
    let weights = Weights::default();
    let requests = generate(&g, DemandBounds::default(), 0.015, 42)?.demand_at_year(1);

    let mut action = DesignAction::new();
    for e in g.rail_edges_in(RegionClass::Crossing) {
        action.set(e, true, 2);
    }
    let before = NetworkState::empty(&g, &params);
    let after = before.apply_action(&g, &action)?;
    for (label, state, built) in [("empty", &before, DesignAction::new()), ("crossing lines", &after, action)] {
        let flows = assign_flows(&g, state, &requests, &params, 0.1)?;
        for r in Region::BOTH {
            let m = region_metrics(&flows, &g, &params, Some(r), &built);
            println!(
                "{label:>14} {r}: emissions {:>9.0} kg, travel {:>9.0} CHF, profit {:>9.0} CHF, objective {:>10.0}",
                m.emissions,
                m.travel_cost,
                m.profit,
                m.objective(&weights)
            );
        }
    }
    Ok(())
}
