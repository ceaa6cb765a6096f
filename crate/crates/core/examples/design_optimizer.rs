//! Budget-constrained build/upgrade search: exhaustive versus local.

use netcoop::assign::Assigner;
use netcoop::demand::{generate, DemandBounds};
use netcoop::fixtures::{toy_graph, toy_params};
use netcoop::metrics::region_metrics;
use netcoop::optimizer::{solve_exact, solve_local, DesignProblem, LocalSearchParams};
use netcoop::{DesignAction, NetworkState, Weights};

fn main() -> netcoop::Result<()> {
    let g = toy_graph(3);
    let params = toy_params();
    let requests = generate(&g, DemandBounds::uniform(100, 600), 0.0, 3)?.requests;
    let assigner = Assigner::new(&g, &requests, &params, 0.1)?;
    let base = NetworkState::empty(&g, &params);
    let weights = Weights::default();

    let objective = |a: &DesignAction| {
        let state = base.apply_action(&g, a).expect("search stays feasible");
        region_metrics(&assigner.assign(&state), &g, &params, None, a).objective(&weights)
    };
    let problem = DesignProblem {
        graph: &g,
        params: &params,
        edge_set: g.rail_edges().to_vec(),
        budget: 8000.0,
        base_state: &base,
        objective: &objective,
    };
    let nothing = objective(&DesignAction::new());
    let (exact, best) = solve_exact(&problem)?;
    let (local, found) = solve_local(&problem, 11, &LocalSearchParams::default())?;
    println!("do nothing {nothing:.1}");
    println!("exact      {best:.1} with {} edge actions", exact.len());
    println!("local      {found:.1} with {} edge actions", local.len());
    println!("local reaches {:.1}% of the exact gain", 100.0 * (found - nothing) / (best - nothing).max(1e-12));
    Ok(())
}
