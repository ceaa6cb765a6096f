//! Budgeted build/upgrade selection over a set of rail edges.
//!
//! Each edge is searched as a "level": for an edge that is not yet connected,
//! level 0 leaves it alone and level `k >= 1` builds it with `k - 1`
//! frequency units; for a connected edge, level `k` adds `k` units. Cost is
//! strictly increasing in the level, which makes budget pruning a simple
//! break in the enumeration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
pub use crate::net_model::{DesignAction, EdgeAction};
use crate::metrics::{construction_cost, edge_step_cost};
use crate::net_model::{EdgeId, MobilityGraph, NetworkState};
use crate::params::ServiceParams;

/// Largest edge set `solve_exact` accepts.
pub const EXACT_EDGE_LIMIT: usize = 12;
/// Largest frequency cap `solve_exact` accepts.
pub const EXACT_FREQUENCY_LIMIT: u32 = 3;
/// Levels tried per slot when greedy scores a raise.
const JUMP_LEVELS: usize = 2;

/// Full construction cost of an action, CHF/day.
pub fn action_cost(action: &DesignAction, graph: &MobilityGraph, params: &ServiceParams) -> f64 {
    construction_cost(action, graph, params, None)
}

/// Objective values closer than this (relative) count as ties.
pub fn tie_tolerance(value: f64) -> f64 {
    1e-9 * (1.0 + value.abs())
}

pub struct DesignProblem<'a> {
    pub graph: &'a MobilityGraph,
    pub params: &'a ServiceParams,
    /// Rail edges open to this decision maker.
    pub edge_set: Vec<EdgeId>,
    /// CHF/day.
    pub budget: f64,
    pub base_state: &'a NetworkState,
    pub objective: &'a dyn Fn(&DesignAction) -> f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalSearchParams {
    pub restarts: usize,
    /// Restarting stops after this many consecutive restarts without
    /// improvement.
    pub patience: usize,
    /// Objective evaluations allowed per solve, across all restarts.
    pub max_evals: usize,
}

impl Default for LocalSearchParams {
    fn default() -> Self {
        Self { restarts: 5, patience: 2, max_evals: 4000 }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    edge: EdgeId,
    connected: bool,
    max_level: u32,
    /// cost[k] of reaching level k.
    cost: Vec<f64>,
}

impl Slot {
    fn step(&self, level: u32) -> (bool, u32) {
        match (self.connected, level) {
            (true, k) => (false, k),
            (false, 0) => (false, 0),
            (false, k) => (true, k - 1),
        }
    }

    /// Smallest level above `level` that adds service.
    fn next_up(&self, level: u32) -> Option<u32> {
        let next = if !self.connected && level == 0 { 2 } else { level + 1 };
        (next <= self.max_level).then_some(next)
    }

    fn next_down(&self, level: u32) -> Option<u32> {
        match level {
            0 => None,
            2 if !self.connected => Some(0),
            k => Some(k - 1),
        }
    }
}

struct Space<'p, 'a> {
    problem: &'p DesignProblem<'a>,
    slots: Vec<Slot>,
}

impl<'p, 'a> Space<'p, 'a> {
    fn new(problem: &'p DesignProblem<'a>) -> Result<Self> {
        let mut edges = problem.edge_set.clone();
        edges.sort();
        edges.dedup();
        let cap = problem.base_state.max_frequency();
        let mut slots = Vec::with_capacity(edges.len());
        for e in edges {
            if !problem.graph.is_rail(e) {
                return Err(Error::UnknownEdge(e));
            }
            let connected = problem.base_state.is_connected(e);
            let room = cap.saturating_sub(problem.base_state.frequency(e));
            let max_level = if connected { room } else { room + 1 };
            let mut slot = Slot { edge: e, connected, max_level, cost: Vec::new() };
            slot.cost = (0..=max_level)
                .map(|k| {
                    let (b, u) = slot.step(k);
                    edge_step_cost(problem.graph, problem.params, e, b, u)
                })
                .collect();
            slots.push(slot);
        }
        Ok(Self { problem, slots })
    }

    fn action(&self, levels: &[u32]) -> DesignAction {
        let mut a = DesignAction::new();
        for (slot, &k) in self.slots.iter().zip(levels) {
            let (b, u) = slot.step(k);
            a.set(slot.edge, b, u);
        }
        a
    }

    fn cost(&self, levels: &[u32]) -> f64 {
        self.slots.iter().zip(levels).map(|(s, &k)| s.cost[k as usize]).sum()
    }

    fn fits(&self, cost: f64) -> bool {
        cost <= self.problem.budget + 1e-9 * (1.0 + self.problem.budget.abs())
    }

    fn eval(&self, levels: &[u32]) -> f64 {
        (self.problem.objective)(&self.action(levels))
    }

    fn adjacent(&self, i: usize, j: usize) -> bool {
        let g = self.problem.graph;
        let (a, b) = (g.edge(self.slots[i].edge), g.edge(self.slots[j].edge));
        a.tail == b.tail || a.tail == b.head || a.head == b.tail || a.head == b.head
    }

    /// Random affordable levels, filled in random slot order.
    fn random_levels(&self, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let n = self.slots.len();
        let mut levels = vec![0u32; n];
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for i in order {
            if rng.gen_bool(0.5) {
                let k = rng.gen_range(0..=self.slots[i].max_level);
                let k = if k == 1 && !self.slots[i].connected { 2.min(self.slots[i].max_level) } else { k };
                levels[i] = k;
                if !self.fits(self.cost(&levels)) {
                    levels[i] = 0;
                }
            }
        }
        levels
    }
}

/// Globally optimal action by depth-first enumeration with budget pruning.
/// Ties go to the lexicographically smallest level vector.
pub fn solve_exact(problem: &DesignProblem) -> Result<(DesignAction, f64)> {
    let cap = problem.base_state.max_frequency();
    if problem.edge_set.len() > EXACT_EDGE_LIMIT || cap > EXACT_FREQUENCY_LIMIT {
        return Err(Error::TooLarge(format!(
            "{} edges with frequency cap {cap} (limits {EXACT_EDGE_LIMIT} and {EXACT_FREQUENCY_LIMIT})",
            problem.edge_set.len()
        )));
    }
    let space = Space::new(problem)?;
    let mut levels = vec![0u32; space.slots.len()];
    let mut best = (levels.clone(), space.eval(&levels));
    enumerate(&space, 0, 0.0, &mut levels, &mut |lv| {
        let v = space.eval(lv);
        if v > best.1 + tie_tolerance(best.1) {
            best = (lv.to_vec(), v);
        }
    });
    Ok((space.action(&best.0), best.1))
}

fn enumerate(space: &Space, i: usize, spent: f64, levels: &mut [u32], visit: &mut dyn FnMut(&[u32])) {
    if i == space.slots.len() {
        visit(levels);
        return;
    }
    let slot = &space.slots[i];
    for k in 0..=slot.max_level {
        let c = spent + slot.cost[k as usize];
        if !space.fits(c) {
            break;
        }
        levels[i] = k;
        enumerate(space, i + 1, c, levels, visit);
    }
    levels[i] = 0;
}

/// Every budget-feasible action of the problem, in lexicographic level order.
pub fn feasible_actions(problem: &DesignProblem) -> Result<Vec<DesignAction>> {
    let space = Space::new(problem)?;
    let mut levels = vec![0u32; space.slots.len()];
    let mut out = Vec::new();
    enumerate(&space, 0, 0.0, &mut levels, &mut |lv| out.push(space.action(lv)));
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    ratio: f64,
    slot: usize,
    from: u32,
    to: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio.total_cmp(&other.ratio).then_with(|| other.slot.cmp(&self.slot))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy)]
enum Move {
    Up(usize),
    /// Builds an unbuilt edge straight to its second frequency level.
    Jump(usize),
    /// Builds two unbuilt edges together.
    Pair(usize, usize),
    Down(usize),
    Drop(usize),
    Swap(usize, usize),
}

struct Search<'s, 'p, 'a> {
    space: &'s Space<'p, 'a>,
    evals: usize,
    max_evals: usize,
}

impl Search<'_, '_, '_> {
    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    fn eval(&mut self, levels: &[u32]) -> f64 {
        self.evals += 1;
        self.space.eval(levels)
    }

    /// Lazy greedy on gain per CHF: keeps raising the level with the best
    /// marginal return while it is positive and affordable.
    fn greedy_fill(&mut self, levels: &mut [u32], value: &mut f64) {
        let space = self.space;
        let mut spent = space.cost(levels);
        let mut heap = BinaryHeap::new();
        for i in 0..space.slots.len() {
            if let Some(c) = self.score(levels, *value, spent, i) {
                heap.push(c);
            }
        }
        while let Some(top) = heap.pop() {
            if self.exhausted() {
                break;
            }
            if levels[top.slot] != top.from {
                continue;
            }
            let Some(fresh) = self.score(levels, *value, spent, top.slot) else { continue };
            let beats_next = heap.peek().is_none_or(|n| fresh.ratio >= n.ratio);
            if !beats_next {
                heap.push(fresh);
                continue;
            }
            let slot = &space.slots[top.slot];
            spent += slot.cost[fresh.to as usize] - slot.cost[levels[top.slot] as usize];
            levels[top.slot] = fresh.to;
            *value = self.eval(levels);
            if let Some(c) = self.score(levels, *value, spent, top.slot) {
                heap.push(c);
            }
        }
    }

    /// Best gain per CHF of raising slot `i` by up to [`JUMP_LEVELS`]
    /// levels, if positive and affordable. Service often pays only from a
    /// few trains a day upward, so single steps alone can stall.
    fn score(&mut self, levels: &mut [u32], value: f64, spent: f64, i: usize) -> Option<Candidate> {
        let slot = &self.space.slots[i];
        let from = levels[i];
        let mut to = slot.next_up(from)?;
        let mut best: Option<Candidate> = None;
        for _ in 0..JUMP_LEVELS {
            let extra = slot.cost[to as usize] - slot.cost[from as usize];
            if !self.space.fits(spent + extra) || self.exhausted() {
                break;
            }
            levels[i] = to;
            let v = self.eval(levels);
            levels[i] = from;
            let gain = v - value;
            if gain > tie_tolerance(value) && best.is_none_or(|b| gain / extra > b.ratio) {
                best = Some(Candidate { ratio: gain / extra, slot: i, from, to });
            }
            match slot.next_up(to) {
                Some(k) => to = k,
                None => break,
            }
        }
        best
    }

    fn apply(&self, levels: &mut [u32], mv: Move) -> bool {
        let slots = &self.space.slots;
        match mv {
            Move::Up(i) => match slots[i].next_up(levels[i]) {
                Some(k) => levels[i] = k,
                None => return false,
            },
            Move::Jump(i) => match slots[i].next_up(0).and_then(|k| slots[i].next_up(k)) {
                Some(k) if levels[i] == 0 => levels[i] = k,
                _ => return false,
            },
            Move::Pair(i, j) => match (slots[i].next_up(0), slots[j].next_up(0)) {
                (Some(a), Some(b)) if levels[i] == 0 && levels[j] == 0 => (levels[i], levels[j]) = (a, b),
                _ => return false,
            },
            Move::Down(i) => match slots[i].next_down(levels[i]) {
                Some(k) => levels[i] = k,
                None => return false,
            },
            Move::Drop(i) => {
                if levels[i] == 0 {
                    return false;
                }
                levels[i] = 0;
            }
            Move::Swap(i, j) => {
                if levels[i] == 0 || levels[j] != 0 {
                    return false;
                }
                levels[j] = levels[i].min(slots[j].max_level);
                levels[i] = 0;
            }
        }
        self.space.fits(self.space.cost(levels))
    }

    /// First-improvement hill climbing over single-edge moves; at each local
    /// optimum, joint builds are tried once and any improvement restarts the
    /// single-edge phase.
    fn climb(&mut self, levels: &mut Vec<u32>, value: &mut f64, rng: &mut ChaCha8Rng) {
        let n = self.space.slots.len();
        let mut single: Vec<Move> = (0..n).flat_map(|i| [Move::Up(i), Move::Down(i), Move::Drop(i)]).collect();
        if n > 1 {
            if n <= 8 {
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            single.push(Move::Swap(i, j));
                        }
                    }
                }
            } else {
                for _ in 0..2 * n {
                    let i = rng.gen_range(0..n);
                    let j = (i + rng.gen_range(1..n)) % n;
                    single.push(Move::Swap(i, j));
                }
            }
        }
        single.shuffle(rng);
        // builds that may only pay off together with a second train or edge
        let mut joint: Vec<Move> = (0..n).map(Move::Jump).collect();
        for i in 0..n {
            for j in i + 1..n {
                if self.space.adjacent(i, j) {
                    joint.push(Move::Pair(i, j));
                }
            }
        }
        joint.shuffle(rng);
        loop {
            self.descend(&single, levels, value);
            if self.exhausted() || !self.descend_once(&joint, levels, value) {
                break;
            }
        }
    }

    /// Cycles through `moves` until a full pass brings no improvement.
    fn descend(&mut self, moves: &[Move], levels: &mut Vec<u32>, value: &mut f64) {
        let mut since_improvement = 0;
        let mut at = 0;
        while since_improvement < moves.len() && !self.exhausted() {
            let mv = moves[at];
            at = (at + 1) % moves.len();
            since_improvement += 1;
            if self.try_move(mv, levels, value) {
                since_improvement = 0;
            }
        }
    }

    /// Applies the first improving move of `moves`, if any.
    fn descend_once(&mut self, moves: &[Move], levels: &mut Vec<u32>, value: &mut f64) -> bool {
        for &mv in moves {
            if self.exhausted() {
                return false;
            }
            if self.try_move(mv, levels, value) {
                return true;
            }
        }
        false
    }

    fn try_move(&mut self, mv: Move, levels: &mut Vec<u32>, value: &mut f64) -> bool {
        let mut trial = levels.clone();
        if !self.apply(&mut trial, mv) {
            return false;
        }
        let v = self.eval(&trial);
        if v > *value + tie_tolerance(*value) {
            *levels = trial;
            *value = v;
            true
        } else {
            false
        }
    }
}

/// Seeded hill climbing from a greedy start with perturbation restarts.
/// Never returns less than the do-nothing value.
pub fn solve_local(
    problem: &DesignProblem,
    seed: u64,
    params: &LocalSearchParams,
) -> Result<(DesignAction, f64)> {
    let space = Space::new(problem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut search = Search { space: &space, evals: 0, max_evals: params.max_evals.max(1) };
    let n = space.slots.len();
    let empty = vec![0u32; n];
    let nothing = search.eval(&empty);

    let mut levels = empty.clone();
    let mut value = nothing;
    search.greedy_fill(&mut levels, &mut value);
    search.climb(&mut levels, &mut value, &mut rng);
    let mut best = (levels.clone(), value);

    let mut stale = 0;
    for restart in 0..params.restarts {
        if search.exhausted() || n == 0 || stale >= params.patience.max(1) {
            break;
        }
        // alternate between perturbing the incumbent and a fresh random start
        let mut levels = if restart % 2 == 1 {
            space.random_levels(&mut rng)
        } else {
            perturbed(&space, &best.0, &mut rng)
        };
        stale += 1;
        if !space.fits(space.cost(&levels)) {
            continue;
        }
        let mut value = search.eval(&levels);
        search.greedy_fill(&mut levels, &mut value);
        search.climb(&mut levels, &mut value, &mut rng);
        if value > best.1 + tie_tolerance(best.1) {
            best = (levels, value);
            stale = 0;
        }
    }
    if nothing >= best.1 {
        best = (empty, nothing);
    }
    Ok((space.action(&best.0), best.1))
}

/// Drops a quarter of the active slots to random lower levels, or builds one
/// random edge when nothing is active.
fn perturbed(space: &Space, levels: &[u32], rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut levels = levels.to_vec();
    let n = levels.len();
    let active: Vec<usize> = (0..n).filter(|&i| levels[i] > 0).collect();
    if active.is_empty() {
        let i = rng.gen_range(0..n);
        if let Some(k) = space.slots[i].next_up(0) {
            levels[i] = k;
        }
    } else {
        let drops = (active.len() / 4).max(1);
        for &i in active.choose_multiple(rng, drops) {
            levels[i] = rng.gen_range(0..levels[i]);
            if levels[i] == 1 && !space.slots[i].connected {
                levels[i] = 0;
            }
        }
    }
    levels
}

/// Exact search when the instance is small enough, local search otherwise.
pub fn solve(
    problem: &DesignProblem,
    seed: u64,
    params: &LocalSearchParams,
) -> Result<(DesignAction, f64)> {
    if problem.edge_set.len() <= EXACT_EDGE_LIMIT
        && problem.base_state.max_frequency() <= EXACT_FREQUENCY_LIMIT
    {
        solve_exact(problem)
    } else {
        solve_local(problem, seed, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three sites on a line, region 1 only; links of 1 and 2 km.
    fn graph() -> MobilityGraph {
        MobilityGraph::parse(
            "[nodes]\n1 1 1 0 0\n2 1 1 0 0\n3 1 1 0 0\n[edges]\n\
             1 1 2 1 1\n2 2 1 1 1\n3 2 3 2 1\n4 3 2 2 1\n",
        )
        .unwrap()
    }

    fn params(cap: u32) -> ServiceParams {
        ServiceParams { max_frequency: cap, ..ServiceParams::default() }
    }

    #[test]
    fn action_cost_examples() {
        let g = graph();
        let p = params(15);
        assert_eq!(action_cost(&DesignAction::new(), &g, &p), 0.0);
        let two_km = g.rail_edges()[2];
        let a = DesignAction::new().with(two_km, true, 2);
        assert!((action_cost(&a, &g, &p) - 1273.6).abs() < 1e-9);
        let b = DesignAction::new().with(g.rail_edges()[0], true, 0).with(g.rail_edges()[1], true, 0);
        assert!((action_cost(&b, &g, &p) - 1148.0).abs() < 1e-9);
    }

    /// Separable toy objective: per-edge concave value of the level.
    fn separable(g: &MobilityGraph, gains: &[f64]) -> impl Fn(&DesignAction) -> f64 {
        let rails = g.rail_edges().to_vec();
        let gains = gains.to_vec();
        move |a: &DesignAction| {
            rails
                .iter()
                .zip(&gains)
                .map(|(&e, &g)| {
                    let s = a.get(e);
                    if s.build {
                        g * (s.upgrade as f64).sqrt() - 600.0
                    } else {
                        0.0
                    }
                })
                .sum()
        }
    }

    #[test]
    fn zero_budget_gives_empty_action() {
        let g = graph();
        let p = params(3);
        let base = NetworkState::empty(&g, &p);
        let f = separable(&g, &[5000.0; 4]);
        let problem = DesignProblem {
            graph: &g,
            params: &p,
            edge_set: g.rail_edges().to_vec(),
            budget: 0.0,
            base_state: &base,
            objective: &f,
        };
        let (a, v) = solve_exact(&problem).unwrap();
        assert!(a.is_empty());
        assert_eq!(v, 0.0);
        let (a, _) = solve_local(&problem, 1, &LocalSearchParams::default()).unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn exact_matches_enumeration() {
        let g = graph();
        let p = params(3);
        let base = NetworkState::empty(&g, &p);
        let f = separable(&g, &[900.0, 50.0, 3000.0, 10.0]);
        for budget in [0.0, 600.0, 1200.0, 2000.0, 5000.0] {
            let problem = DesignProblem {
                graph: &g,
                params: &p,
                edge_set: g.rail_edges().to_vec(),
                budget,
                base_state: &base,
                objective: &f,
            };
            let brute = feasible_actions(&problem)
                .unwrap()
                .iter()
                .map(&f)
                .fold(f64::NEG_INFINITY, f64::max);
            let (a, v) = solve_exact(&problem).unwrap();
            assert!((v - brute).abs() < 1e-9, "budget {budget}");
            assert!(action_cost(&a, &g, &p) <= budget + 1e-9);
            let (la, lv) = solve_local(&problem, 3, &LocalSearchParams::default()).unwrap();
            assert!(lv <= v + 1e-9);
            assert!(action_cost(&la, &g, &p) <= budget + 1e-9);
        }
    }

    #[test]
    fn too_large_is_rejected() {
        let g = graph();
        let p = params(15);
        let base = NetworkState::empty(&g, &p);
        let f = |_: &DesignAction| 0.0;
        let problem = DesignProblem {
            graph: &g,
            params: &p,
            edge_set: g.rail_edges().to_vec(),
            budget: 1e9,
            base_state: &base,
            objective: &f,
        };
        assert!(matches!(solve_exact(&problem), Err(Error::TooLarge(_))));
    }

    #[test]
    fn local_search_is_seed_deterministic() {
        let g = graph();
        let p = params(15);
        let base = NetworkState::empty(&g, &p);
        let f = separable(&g, &[900.0, 50.0, 3000.0, 10.0]);
        let problem = DesignProblem {
            graph: &g,
            params: &p,
            edge_set: g.rail_edges().to_vec(),
            budget: 4000.0,
            base_state: &base,
            objective: &f,
        };
        let lp = LocalSearchParams::default();
        assert_eq!(solve_local(&problem, 9, &lp).unwrap().0, solve_local(&problem, 9, &lp).unwrap().0);
    }

    #[test]
    fn local_search_finds_joint_builds() {
        let g = graph();
        let p = params(3);
        let base = NetworkState::empty(&g, &p);
        let (a, b, c) = (g.rail_edges()[0], g.rail_edges()[2], g.rail_edges()[3]);
        // a and b lose money alone and pay together; c pays only from two trains up
        let f = move |x: &DesignAction| {
            let (ea, eb, ec) = (x.get(a), x.get(b), x.get(c));
            let mut v = 0.0;
            if ea.build && eb.build {
                v += 5000.0;
            } else if ea.build || eb.build {
                v -= 500.0;
            }
            if ec.build {
                v += if ec.upgrade >= 1 { 3000.0 } else { -200.0 };
            }
            v
        };
        let problem = DesignProblem {
            graph: &g,
            params: &p,
            edge_set: g.rail_edges().to_vec(),
            budget: 1e5,
            base_state: &base,
            objective: &f,
        };
        let (_, exact) = solve_exact(&problem).unwrap();
        let (_, local) = solve_local(&problem, 3, &LocalSearchParams::default()).unwrap();
        assert!(exact > 7000.0);
        assert!((local - exact).abs() <= tie_tolerance(exact), "{local} vs {exact}");
    }

}
