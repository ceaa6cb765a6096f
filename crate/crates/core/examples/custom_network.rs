//! Reading a network file and a scenario config, and what validation
//! reports for a broken one.

use netcoop::config::ScenarioConfig;
use netcoop::net_model::MobilityGraph;
use netcoop::netfile::NetworkSpec;

const NETWORK: &str = "\
[nodes]
# id region rail x y
1 1 1 0 0
2 1 1 1 0
3 2 1 2 0
[edges]
# id tail head km rail road_capacity
1 1 2 4 1 300
2 2 1 4 1 300
3 2 3 6 1 300
4 3 2 6 1 300
";

fn main() -> netcoop::Result<()> {
    let g = MobilityGraph::parse(NETWORK)?;
    println!("{} nodes, {} rail candidates, invariants {:?}", g.nodes().len(), g.rail_edges().len(), g.check_invariants());

    let broken = NETWORK.replace("3 2 1 2 0", "3 5 1 2 0").replace("1 1 2 4 1 300", "1 1 2 -4 1 300");
    match NetworkSpec::parse(&broken).and_then(|s| MobilityGraph::from_spec(&s)) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("rejected: {e}"),
    }

    let cfg = ScenarioConfig::parse("name = demo\nhorizon = 2\nbudget.region1 = 5e4, 8e4\nbeta.region1 = 0.3\n")?;
    cfg.validate()?;
    println!("{}", cfg.to_text());
    Ok(())
}
