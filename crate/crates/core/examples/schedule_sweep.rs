//! Sweep of shared co-investment schedules, written as CSV and SVG.

use netcoop::config::ScenarioConfig;
use netcoop::report::{results_csv, scatter_svg, schedule_csv, write_file};
use netcoop::scenario::{highlights, Scenario};

fn main() -> netcoop::Result<()> {
    // Two years over three ratios keeps this quick; the CLI sweep runs the
    // full default grid.
    let cfg = ScenarioConfig::default().with_horizon(2);
    let scenario = Scenario::new(&cfg)?;
    let records = scenario.sweep(&[0.0, 0.3, 0.5])?;

    let h = highlights(&records);
    for r in &records {
        let betas: Vec<f64> = r.years.iter().map(|y| y.betas[0]).collect();
        println!("{betas:?}: delta F {:>9.0}, CIR {:.3}, cooperated {}", r.delta_f, r.cir, r.years_cooperated());
    }
    println!("highest return #{:?}, most efficient #{:?}", h.highest_return, h.most_efficient);

    let dir = std::env::temp_dir().join("netcoop-sweep");
    std::fs::create_dir_all(&dir).map_err(|e| netcoop::Error::Config(e.to_string()))?;
    write_file(&dir.join("results.csv"), &results_csv(&records, cfg.logit_scale)?)?;
    write_file(&dir.join("schedules.csv"), &schedule_csv(&records, &scenario.graph)?)?;
    write_file(&dir.join("scatter.svg"), scatter_svg(&records).as_bytes())?;
    println!("wrote {}", dir.display());
    Ok(())
}
