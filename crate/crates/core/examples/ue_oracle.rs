//! Wardrop user equilibrium on the bundled toy instances.

use netcoop::ue_oracle::{pigou, pigou_closed_form, toy_instances};

fn main() -> netcoop::Result<()> {
    for inst in toy_instances() {
        let r = inst.solve()?;
        println!(
            "{:<12} gap {:.2e} after {} iterations, edge flows {:?}",
            inst.name,
            r.gap,
            r.iterations,
            r.edge_flows.iter().map(|f| (f * 1e3).round() / 1e3).collect::<Vec<_>>()
        );
    }
    let p = pigou();
    let road = p.graph.alt_edges()[0];
    println!("pigou road flow {:.4} (closed form {:.4})", p.solve()?.edge_flows[road.0], pigou_closed_form(&p));
    Ok(())
}
