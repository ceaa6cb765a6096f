//! The bundled two-region Sioux Falls network and its edge classes.

use netcoop::net_model::{RegionClass, EdgeLayer};
use netcoop::{build_sioux_falls, Region};

fn main() {
    let g = build_sioux_falls();
    println!("{} nodes, {} edges", g.nodes().len(), g.edge_count());
    let transfers = g.edges().iter().filter(|e| e.layer == EdgeLayer::Transfer).count();
    println!("road {}, rail {}, transfer {}", g.alt_edges().len(), g.rail_edges().len(), transfers);
    for r in Region::BOTH {
        let sites: Vec<u32> = g.sites().filter(|&s| g.site_region(s) == Some(r)).collect();
        let rail = g.rail_edges_in(RegionClass::Within(r)).len();
        println!("{r}: sites {:?}..{:?}, {rail} internal rail candidates", sites.first(), sites.last());
    }
    let crossing = g.rail_edges_in(RegionClass::Crossing);
    let e = crossing[0];
    println!(
        "{} crossing candidates; {e} counts {} toward region 1",
        crossing.len(),
        g.region_share(e, Region::One)
    );
    assert!(g.check_invariants().is_empty());
}
