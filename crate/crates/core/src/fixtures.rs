//! Small random two-region instances, small enough for exhaustive checks.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ScenarioConfig;
use crate::demand::DemandBounds;
use crate::net_model::MobilityGraph;
use crate::optimizer::LocalSearchParams;
use crate::params::ServiceParams;

/// Rail candidates never exceed this many directed edges.
pub const TOY_RAIL_EDGES: usize = 6;
/// Frequency cap of toy instances.
pub const TOY_MAX_FREQUENCY: u32 = 2;

/// Four sites, two per region, on a ring with one diagonal. Road links run
/// both ways; a random subset of at most six directed links also carries
/// a rail candidate, with at least one inside each region and one crossing.
pub fn toy_graph(seed: u64) -> MobilityGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // sites 1, 2 in region 1 and 3, 4 in region 2
    let pairs = [(1, 2), (3, 4), (2, 4), (1, 3), (1, 4)];
    let mut links = Vec::new();
    for (a, b) in pairs {
        let len = rng.gen_range(2..=10) as f64;
        links.push((a, b, len));
        links.push((b, a, len));
    }
    let mut rail = vec![false; links.len()];
    // one guaranteed candidate per class, then random extras
    for forced in [0, 2, 4] {
        rail[forced + rng.gen_range(0..2)] = true;
    }
    let extra = rng.gen_range(0..=TOY_RAIL_EDGES - 3);
    for _ in 0..extra {
        rail[rng.gen_range(0..links.len())] = true;
    }
    let mut text = String::from("[nodes]\n1 1 1 0 0\n2 1 1 0 1\n3 2 1 1 0\n4 2 1 1 1\n[edges]\n");
    for (i, ((a, b, len), r)) in links.iter().zip(&rail).enumerate() {
        let _ = writeln!(text, "{} {a} {b} {len} {} 400", i + 1, u8::from(*r));
    }
    MobilityGraph::parse(&text).expect("toy network is well formed")
}

pub fn toy_params() -> ServiceParams {
    ServiceParams { max_frequency: TOY_MAX_FREQUENCY, ..ServiceParams::default() }
}

/// Scenario config for [`toy_graph`] with random budgets.
pub fn toy_config(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let horizon = 1;
    let budgets = vec![[rng.gen_range(0.0..12_000.0), rng.gen_range(0.0..12_000.0)]; horizon as usize];
    ScenarioConfig {
        name: format!("toy-{seed}"),
        horizon,
        budgets,
        betas: vec![[0.0, 0.0]; horizon as usize],
        demand_bounds: DemandBounds::uniform(100, 600),
        params: toy_params(),
        seed,
        search: LocalSearchParams::default(),
        ..ScenarioConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::RegionClass;
    use crate::net_model::Region;

    #[test]
    fn toy_graphs_are_valid_and_small() {
        for seed in 0..50 {
            let g = toy_graph(seed);
            assert!(g.check_invariants().is_empty(), "{:?}", g.check_invariants());
            let n = g.rail_edges().len();
            assert!((3..=TOY_RAIL_EDGES).contains(&n), "{n}");
            assert!(!g.rail_edges_in(RegionClass::Crossing).is_empty());
            for r in Region::BOTH {
                assert!(!g.rail_edges_in(RegionClass::Within(r)).is_empty());
            }
        }
    }
}
