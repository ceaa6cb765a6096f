//! Rail versus road mode split and edge flows for a partially built network.

use netcoop::assign::{logit_split, Assigner};
use netcoop::demand::{generate, DemandBounds};
use netcoop::net_model::RegionClass;
use netcoop::params::DEFAULT_LOGIT_SCALE;
use netcoop::{build_sioux_falls, DesignAction, NetworkState, Region, ServiceParams};

fn main() -> netcoop::Result<()> {
    println!("p(10, 10) = {}, p(10, 30) = {:.4}", logit_split(10.0, 10.0, 0.1), logit_split(10.0, 30.0, 0.1));

    let g = build_sioux_falls();
    let params = ServiceParams::default();
    let requests = generate(&g, DemandBounds::default(), 0.015, 7)?.demand_at_year(1);
    let assigner = Assigner::new(&g, &requests, &params, DEFAULT_LOGIT_SCALE)?;

    let mut action = DesignAction::new();
    for e in g.rail_edges_in(RegionClass::Within(Region::One)) {
        action.set(e, true, 3);
    }
    let empty = NetworkState::empty(&g, &params);
    let state = empty.apply_action(&g, &action)?;

    for (label, s) in [("no rail", &empty), ("region 1 rail", &state)] {
        let shares = assigner.shares(s);
        let mean = shares.iter().sum::<f64>() / shares.len() as f64;
        let flows = assigner.assign(s);
        let rail: f64 = g.rail_edges().iter().map(|&e| flows.flow(e)).sum();
        let spill: f64 = g.rail_edges().iter().map(|&e| flows.unserved(e)).sum();
        println!("{label}: mean rail share {mean:.3}, summed rail edge flow {rail:.0}, spilled {spill:.0}");
    }
    Ok(())
}
