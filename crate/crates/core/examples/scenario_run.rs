//! A three-year Sioux Falls run at a fixed co-investment schedule against
//! the no-mechanism baseline.

use netcoop::config::ScenarioConfig;
use netcoop::scenario::Scenario;

fn main() -> netcoop::Result<()> {
    let cfg = ScenarioConfig::default().with_shared_betas(&[0.5, 0.5, 0.5]);
    let scenario = Scenario::new(&cfg)?;
    let baseline = scenario.baseline()?;
    let run = scenario.run(&cfg.betas, &baseline)?;
    for y in &run.years {
        println!(
            "year {}: accepted {}, F {:?} -> v [{:.0}, {:.0}], pool {:.0}",
            y.year, y.accepted, y.no_mech.map(|f| f.round()), y.payoffs[0], y.payoffs[1], y.pool
        );
    }
    println!("delta F {:.0}, CIR {:.3}, ROC {:?}", run.delta_f, run.cir, run.roc);
    println!(
        "final-year change: emissions {:.0} kg, travel cost {:.0} CHF, profit {:.0} CHF",
        run.delta.emissions, run.delta.travel_cost, run.delta.profit
    );
    println!("{} build/upgrade steps", run.schedule().len());
    Ok(())
}
