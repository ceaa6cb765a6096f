//! One design year of the two-stage game on a small instance.

use netcoop::bargain::{nbs_allocate, PayoffTriple};
use netcoop::fixtures::toy_config;
use netcoop::game::{stage1_equilibrium, stage2_coinvest, verify_equilibrium};
use netcoop::scenario::Scenario;
use netcoop::NetworkState;

fn main() -> netcoop::Result<()> {
    let cfg = toy_config(2);
    let scenario = Scenario::with_graph(&cfg, netcoop::fixtures::toy_graph(2))?;
    let base = NetworkState::empty(&scenario.graph, &cfg.params);

    let no_mech = stage1_equilibrium(&scenario.context(1, [0.0, 0.0]), &base)?;
    let ctx = scenario.context(1, [0.5, 0.5]);
    let s1 = stage1_equilibrium(&ctx, &base)?;
    println!("budgets {:?}", ctx.budgets);
    println!("stage 1: {} rounds, converged {}, payoffs {:?}", s1.rounds, s1.converged, s1.payoffs);
    println!("no profitable deviation: {}", verify_equilibrium(&ctx, &base, &s1.actions)?);

    let s2 = stage2_coinvest(&ctx, &s1)?;
    println!("stage 2: {} joint edge actions, surplus {:.2}, CIR {:.2}", s2.action.len(), s2.surplus, s2.cir);

    let triple = PayoffTriple { no_mech: no_mech.payoffs, stage1: s1.payoffs, pool: s2.surplus };
    match nbs_allocate(&triple) {
        Ok(a) => println!("agreement: payoffs {:?} vs disagreement {:?}", a.payoffs, no_mech.payoffs),
        Err(e) => println!("declined: {e}"),
    }
    Ok(())
}
