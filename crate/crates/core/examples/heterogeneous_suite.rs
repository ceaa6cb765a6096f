//! Return on co-investment under unequal budgets and populations.

use netcoop::config::ScenarioConfig;
use netcoop::scenario::heterogeneous_suite;

fn main() -> netcoop::Result<()> {
    // Reduced horizon and grid; `netcoop hetero` runs the full suite.
    let base = ScenarioConfig { grid: vec![0.0, 0.3, 0.7], ..ScenarioConfig::default().with_horizon(2) };
    for row in heterogeneous_suite(&base)? {
        let roc = row.roc.map(|d| format!("median {:.3} [{:.3}, {:.3}]", d.median, d.q1, d.q3));
        println!(
            "{:<24} budget {:?} demand {:?}: ROC {}",
            row.name,
            row.budget_ratio,
            row.intra_ratio,
            roc.unwrap_or_else(|| "n/a".into())
        );
    }
    Ok(())
}
