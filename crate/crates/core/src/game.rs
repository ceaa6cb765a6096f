//! One design year as a two-stage game. In the first stage each authority
//! spends its own budget on its own rail edges by best response; in the
//! second, a pooled budget buys a joint action on any rail edge, crossing
//! edges included.

use crate::assign::Assigner;
use crate::error::{Error, Result};
use crate::metrics::region_metrics;
use crate::net_model::{DesignAction, EdgeId, MobilityGraph, NetworkState, Region, RegionClass};
use crate::optimizer::{
    self, feasible_actions, tie_tolerance, DesignProblem, LocalSearchParams, EXACT_EDGE_LIMIT,
    EXACT_FREQUENCY_LIMIT,
};
use crate::params::{ServiceParams, Weights};

/// Best-response rounds before the dynamics are declared cycling.
pub const MAX_ROUNDS: usize = 50;

/// Everything fixed within one design year.
#[derive(Clone, Copy)]
pub struct YearContext<'a> {
    pub graph: &'a MobilityGraph,
    pub params: &'a ServiceParams,
    pub weights: Weights,
    /// Compiled demand of this year.
    pub assigner: &'a Assigner,
    pub search: LocalSearchParams,
    pub seed: u64,
    /// 1-based design year.
    pub year: u32,
    /// Annual budgets `B_i`, CHF/day.
    pub budgets: [f64; 2],
    /// Co-investment fractions `β_i`.
    pub betas: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOneResult {
    pub actions: [DesignAction; 2],
    /// `F1_i`, CHF/day.
    pub payoffs: [f64; 2],
    /// Layout after both actions, one year on from the base.
    pub state: NetworkState,
    pub rounds: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTwoResult {
    pub action: DesignAction,
    /// Joint gain over the stage-one payoffs; 0 for the empty action.
    pub surplus: f64,
    /// Region payoffs with the joint action included, before transfers.
    pub payoffs: [f64; 2],
    pub state: NetworkState,
    /// Committed share of this year's budgets.
    pub cir: f64,
    /// Surplus per CHF committed; `None` without a pooled budget.
    pub roc: Option<f64>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one solve, a function of the scenario seed and its position in
/// the year only, so cached prefixes replay identically.
fn solve_seed(seed: u64, year: u32, role: u64, round: usize) -> u64 {
    mix(mix(mix(seed ^ year as u64) ^ role) ^ round as u64)
}

impl YearContext<'_> {
    /// Rail edges lying entirely inside `region`.
    pub fn own_edges(&self, region: Region) -> Vec<EdgeId> {
        self.graph.rail_edges_in(RegionClass::Within(region))
    }

    /// Region objectives on `state`, charging each region its share of
    /// `built` (the construction undertaken this year).
    pub fn payoffs(&self, state: &NetworkState, built: &DesignAction) -> [f64; 2] {
        let flows = self.assigner.assign(state);
        Region::BOTH.map(|r| {
            region_metrics(&flows, self.graph, self.params, Some(r), built).objective(&self.weights)
        })
    }

    pub fn stage1_budget(&self, region: Region) -> f64 {
        let i = region.index();
        (1.0 - self.betas[i]) * self.budgets[i]
    }

    pub fn pooled_budget(&self) -> f64 {
        self.betas[0] * self.budgets[0] + self.betas[1] * self.budgets[1]
    }

    fn own_payoff(&self, region: Region, base: &NetworkState, own: &DesignAction, other: &DesignAction) -> f64 {
        let mut state = base.clone();
        state.overlay(other);
        state.overlay(own);
        self.payoffs(&state, &own.merged(other))[region.index()]
    }
}

/// Payoff-maximizing action of `region` given the opponent's action.
pub fn best_response(
    ctx: &YearContext,
    region: Region,
    base: &NetworkState,
    opponent: &DesignAction,
    round: usize,
) -> Result<(DesignAction, f64)> {
    let mut with_opponent = base.clone();
    with_opponent.overlay(opponent);
    let objective = |a: &DesignAction| ctx.own_payoff(region, base, a, opponent);
    let problem = DesignProblem {
        graph: ctx.graph,
        params: ctx.params,
        edge_set: ctx.own_edges(region),
        budget: ctx.stage1_budget(region),
        base_state: &with_opponent,
        objective: &objective,
    };
    let seed = solve_seed(ctx.seed, ctx.year, region.number() as u64, round);
    optimizer::solve(&problem, seed, &ctx.search)
}

/// Gauss-Seidel best-response dynamics from empty actions, authority 1
/// moving first. Stops at the first round in which neither action changes.
pub fn stage1_equilibrium(ctx: &YearContext, base: &NetworkState) -> Result<StageOneResult> {
    let mut actions = [DesignAction::new(), DesignAction::new()];
    let mut rounds = 0;
    let mut converged = false;
    while rounds < MAX_ROUNDS {
        rounds += 1;
        let mut changed = false;
        for region in Region::BOTH {
            let i = region.index();
            let (reply, value) = best_response(ctx, region, base, &actions[1 - i], rounds)?;
            // an equally good reply is no reason to move
            let current = ctx.own_payoff(region, base, &actions[i], &actions[1 - i]);
            if reply != actions[i] && value > current + tie_tolerance(current) {
                actions[i] = reply;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    let joint = actions[0].merged(&actions[1]);
    let state = base.apply_action(ctx.graph, &joint)?;
    let payoffs = ctx.payoffs(&state, &joint);
    Ok(StageOneResult { actions, payoffs, state, rounds, converged })
}

/// Checks by enumeration that no authority gains from a unilateral
/// deviation. Only small instances are accepted.
pub fn verify_equilibrium(ctx: &YearContext, base: &NetworkState, profile: &[DesignAction; 2]) -> Result<bool> {
    for region in Region::BOTH {
        let i = region.index();
        let edges = ctx.own_edges(region);
        if edges.len() > EXACT_EDGE_LIMIT || base.max_frequency() > EXACT_FREQUENCY_LIMIT {
            return Err(Error::TooLarge(format!(
                "region {region} has {} own edges with frequency cap {}",
                edges.len(),
                base.max_frequency()
            )));
        }
        let other = &profile[1 - i];
        let mut with_other = base.clone();
        with_other.overlay(other);
        let objective = |a: &DesignAction| ctx.own_payoff(region, base, a, other);
        let problem = DesignProblem {
            graph: ctx.graph,
            params: ctx.params,
            edge_set: edges,
            budget: ctx.stage1_budget(region),
            base_state: &with_other,
            objective: &objective,
        };
        let current = objective(&profile[i]);
        for deviation in feasible_actions(&problem)? {
            if objective(&deviation) > current + tie_tolerance(current) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Joint action of the pooled budget maximizing the summed region payoffs
/// over their stage-one values. Returns the empty action when nothing beats
/// the stage-one outcome.
pub fn stage2_coinvest(ctx: &YearContext, stage1: &StageOneResult) -> Result<StageTwoResult> {
    let stage1_built = stage1.actions[0].merged(&stage1.actions[1]);
    let baseline = stage1.payoffs[0] + stage1.payoffs[1];
    let value = |a: &DesignAction| {
        let mut state = stage1.state.clone();
        state.overlay(a);
        let p = ctx.payoffs(&state, &stage1_built.merged(a));
        p[0] + p[1] - baseline
    };
    let problem = DesignProblem {
        graph: ctx.graph,
        params: ctx.params,
        edge_set: ctx.graph.rail_edges().to_vec(),
        budget: ctx.pooled_budget(),
        base_state: &stage1.state,
        objective: &value,
    };
    let seed = solve_seed(ctx.seed, ctx.year, 3, 0);
    let (mut action, mut surplus) = optimizer::solve(&problem, seed, &ctx.search)?;
    if surplus <= tie_tolerance(baseline) {
        action = DesignAction::new();
        surplus = 0.0;
    }
    let mut state = stage1.state.clone();
    state.overlay(&action);
    let payoffs = if action.is_empty() {
        stage1.payoffs
    } else {
        ctx.payoffs(&state, &stage1_built.merged(&action))
    };
    let pooled = ctx.pooled_budget();
    let total = ctx.budgets[0] + ctx.budgets[1];
    let cir = if total > 0.0 { pooled / total } else { 0.0 };
    let roc = (pooled > 0.0).then(|| surplus / pooled);
    Ok(StageTwoResult { action, surplus, payoffs, state, cir, roc })
}

/// One year of the cooperative process as seen by the indicators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearLedger {
    pub budgets: [f64; 2],
    pub betas: [f64; 2],
    /// `F1_i`.
    pub stage1: [f64; 2],
    /// Accepted co-investment surplus (0 when declined).
    pub pool: f64,
    /// `F_i`, the payoffs of the no-mechanism trajectory in the same year.
    pub no_mech: [f64; 2],
}

/// `(CIR, ROC)` over a horizon. CIR is the committed share of the total
/// budget; ROC is the cooperative payoff gain per CHF committed and is
/// undefined when nothing was committed.
pub fn roc_cir(history: &[YearLedger]) -> (f64, Result<f64>) {
    let mut committed = 0.0;
    let mut total = 0.0;
    let mut gain = 0.0;
    for y in history {
        committed += y.betas[0] * y.budgets[0] + y.betas[1] * y.budgets[1];
        total += y.budgets[0] + y.budgets[1];
        gain += (y.stage1[0] - y.no_mech[0]) + (y.stage1[1] - y.no_mech[1]) + y.pool;
    }
    let cir = if total > 0.0 { committed / total } else { 0.0 };
    let roc = if committed > 0.0 { Ok(gain / committed) } else { Err(Error::ZeroCoinvestment) };
    (cir, roc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{TravelRequest, TripType};

    /// Two sites per region on a square; each region has one rail link pair
    /// and two crossing pairs.
    fn graph() -> MobilityGraph {
        MobilityGraph::parse(
            "[nodes]\n1 1 1 0 0\n2 1 1 0 1\n3 2 1 1 0\n4 2 1 1 1\n[edges]\n\
             1 1 2 3 1\n2 2 1 3 1\n3 3 4 3 1\n4 4 3 3 1\n\
             5 1 3 4 1\n6 3 1 4 1\n7 2 4 4 1\n8 4 2 4 1\n",
        )
        .unwrap()
    }

    fn requests(g: &MobilityGraph, trips: u32) -> Vec<TravelRequest> {
        let mut out = Vec::new();
        for o in 1..=4 {
            for d in 1..=4 {
                if o != d {
                    let trip_type = crate::demand::classify(o, d, g).unwrap();
                    out.push(TravelRequest { origin: o, destination: d, trips, trip_type });
                }
            }
        }
        out
    }

    struct Fixture {
        g: MobilityGraph,
        p: ServiceParams,
        a: Assigner,
    }

    fn fixture() -> Fixture {
        let g = graph();
        let p = ServiceParams { max_frequency: 2, ..ServiceParams::default() };
        let a = Assigner::new(&g, &requests(&g, 800), &p, 0.1).unwrap();
        Fixture { g, p, a }
    }

    fn ctx<'a>(f: &'a Fixture, budgets: [f64; 2], betas: [f64; 2]) -> YearContext<'a> {
        YearContext {
            graph: &f.g,
            params: &f.p,
            weights: Weights::default(),
            assigner: &f.a,
            search: LocalSearchParams::default(),
            seed: 1,
            year: 1,
            budgets,
            betas,
        }
    }

    #[test]
    fn zero_budgets_do_nothing() {
        let f = fixture();
        let c = ctx(&f, [0.0, 0.0], [0.0, 0.0]);
        let base = NetworkState::empty(&f.g, &f.p);
        let s1 = stage1_equilibrium(&c, &base).unwrap();
        assert!(s1.converged);
        assert_eq!(s1.rounds, 1);
        assert!(s1.actions.iter().all(DesignAction::is_empty));
        let s2 = stage2_coinvest(&c, &s1).unwrap();
        assert!(s2.action.is_empty());
        assert_eq!(s2.surplus, 0.0);
    }

    #[test]
    fn equilibrium_is_verified() {
        let f = fixture();
        let c = ctx(&f, [8000.0, 8000.0], [0.0, 0.0]);
        let base = NetworkState::empty(&f.g, &f.p);
        let s1 = stage1_equilibrium(&c, &base).unwrap();
        assert!(s1.converged);
        assert!(verify_equilibrium(&c, &base, &s1.actions).unwrap());
        for (r, a) in Region::BOTH.iter().zip(&s1.actions) {
            for (e, _) in a.iter() {
                assert_eq!(f.g.edge(e).class, RegionClass::Within(*r));
            }
        }
    }

    #[test]
    fn pooled_budget_reaches_crossing_edges() {
        let f = fixture();
        let c = ctx(&f, [8000.0, 8000.0], [0.5, 0.5]);
        let base = NetworkState::empty(&f.g, &f.p);
        let s1 = stage1_equilibrium(&c, &base).unwrap();
        let s2 = stage2_coinvest(&c, &s1).unwrap();
        assert!(s2.surplus >= 0.0);
        let crossing: Vec<_> = f.g.rail_edges_in(RegionClass::Crossing);
        if !s2.action.is_empty() {
            assert!(s2.action.iter().any(|(e, _)| crossing.contains(&e)));
            let sum = s2.payoffs[0] + s2.payoffs[1] - s1.payoffs[0] - s1.payoffs[1];
            assert!((sum - s2.surplus).abs() < 1e-6 * (1.0 + sum.abs()));
        }
    }

    #[test]
    fn own_edges_follow_partition() {
        let f = fixture();
        let c = ctx(&f, [1.0, 1.0], [0.0, 0.0]);
        assert_eq!(c.own_edges(Region::One).len(), 2);
        assert_eq!(c.own_edges(Region::Two).len(), 2);
    }

    #[test]
    fn too_large_for_verification() {
        let g = crate::net_model::build_sioux_falls();
        let p = ServiceParams::default();
        let r = vec![TravelRequest { origin: 1, destination: 2, trips: 10, trip_type: TripType::Intra1 }];
        let a = Assigner::new(&g, &r, &p, 0.1).unwrap();
        let c = YearContext {
            graph: &g,
            params: &p,
            weights: Weights::default(),
            assigner: &a,
            search: LocalSearchParams::default(),
            seed: 0,
            year: 1,
            budgets: [1.0, 1.0],
            betas: [0.0, 0.0],
        };
        let base = NetworkState::empty(&g, &p);
        let empty = [DesignAction::new(), DesignAction::new()];
        assert!(matches!(verify_equilibrium(&c, &base, &empty), Err(Error::TooLarge(_))));
    }

    #[test]
    fn indicators() {
        let y = YearLedger {
            budgets: [100.0, 100.0],
            betas: [0.1, 0.3],
            stage1: [5.0, 5.0],
            pool: 10.0,
            no_mech: [6.0, 6.0],
        };
        let (cir, roc) = roc_cir(&[y, y]);
        assert!((cir - 0.2).abs() < 1e-12);
        assert!((roc.unwrap() - 16.0 / 80.0).abs() < 1e-12);
        let none = YearLedger { betas: [0.0, 0.0], ..y };
        let (cir, roc) = roc_cir(&[none]);
        assert_eq!(cir, 0.0);
        assert!(matches!(roc, Err(Error::ZeroCoinvestment)));
    }
}
