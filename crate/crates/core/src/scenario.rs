//! Multi-year runs: the no-mechanism baseline, cooperative runs for a
//! co-investment schedule, schedule sweeps and the heterogeneous-region
//! suite.
//!
//! Runs are deterministic in the config. Every local search is seeded from
//! the scenario seed and its position within the year, so sweep points that
//! share a schedule prefix share those years' results and the sweep
//! evaluates each prefix once.

use rayon::prelude::*;

use crate::assign::{Assigner, RoutePlan};
use crate::bargain::{nbs_allocate, PayoffTriple, AGREEMENT_TOLERANCE};
use crate::config::{NetworkSource, ScenarioConfig};
use crate::demand::{generate, DemandModel};
use crate::error::{Error, Result};
use crate::game::{roc_cir, stage1_equilibrium, stage2_coinvest, YearContext, YearLedger};
use crate::metrics::{region_metrics, RegionMetrics};
use crate::net_model::{build_sioux_falls, DesignAction, EdgeId, MobilityGraph, NetworkState, Region};
use crate::optimizer::tie_tolerance;

/// One design year of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct YearRecord {
    pub year: u32,
    pub budgets: [f64; 2],
    pub betas: [f64; 2],
    /// `F^t_i` of the no-mechanism trajectory.
    pub no_mech: [f64; 2],
    /// `F^{1t}_i`.
    pub stage1: [f64; 2],
    /// Stage-two surplus before the agreement gate.
    pub offered: f64,
    /// Realized `F^{2t}`: the offered surplus if accepted, else 0.
    pub pool: f64,
    /// `q_i`.
    pub shares: [f64; 2],
    /// `v_i`.
    pub payoffs: [f64; 2],
    pub accepted: bool,
    pub converged: bool,
    pub rounds: usize,
    pub stage1_actions: [DesignAction; 2],
    /// Empty when cooperation was declined.
    pub stage2_action: DesignAction,
    pub stage1_state: NetworkState,
    /// Layout carried into the next year.
    pub state: NetworkState,
}

impl YearRecord {
    fn ledger(&self) -> YearLedger {
        YearLedger {
            budgets: self.budgets,
            betas: self.betas,
            stage1: self.stage1,
            pool: self.pool,
            no_mech: self.no_mech,
        }
    }

    /// Everything built this year.
    pub fn built(&self) -> DesignAction {
        self.stage1_actions[0].merged(&self.stage1_actions[1]).merged(&self.stage2_action)
    }
}

/// One build/upgrade step of a run's design schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub year: u32,
    pub stage: u8,
    /// Deciding authority; `None` for the joint stage.
    pub authority: Option<Region>,
    pub edge: EdgeId,
    pub build: bool,
    pub upgrade: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub name: String,
    pub seed: u64,
    pub years: Vec<YearRecord>,
    /// `ΔF^co`, CHF/day summed over the horizon.
    pub delta_f: f64,
    pub cir: f64,
    /// `None` when nothing was committed.
    pub roc: Option<f64>,
    /// Final-year network differences against the baseline.
    pub delta: RegionMetrics,
}

impl RunRecord {
    /// Years with a positive committed ratio.
    pub fn years_cooperated(&self) -> usize {
        self.years.iter().filter(|y| y.betas.iter().any(|b| *b > 0.0)).count()
    }

    pub fn accepted_years(&self) -> usize {
        self.years.iter().filter(|y| y.accepted).count()
    }

    pub fn converged(&self) -> bool {
        self.years.iter().all(|y| y.converged)
    }

    pub fn final_state(&self) -> &NetworkState {
        &self.years.last().expect("runs span at least one year").state
    }

    pub fn schedule(&self) -> Vec<ScheduleEntry> {
        let mut out = Vec::new();
        for y in &self.years {
            for r in Region::BOTH {
                for (edge, a) in y.stage1_actions[r.index()].iter() {
                    out.push(ScheduleEntry {
                        year: y.year,
                        stage: 1,
                        authority: Some(r),
                        edge,
                        build: a.build,
                        upgrade: a.upgrade,
                    });
                }
            }
            for (edge, a) in y.stage2_action.iter() {
                out.push(ScheduleEntry { year: y.year, stage: 2, authority: None, edge, build: a.build, upgrade: a.upgrade });
            }
        }
        out
    }
}

/// A config with its network, demand and compiled assignment per year.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub graph: MobilityGraph,
    pub demand: DemandModel,
    budgets: Vec<[f64; 2]>,
    assigners: Vec<Assigner>,
}

impl Scenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let graph = match &config.network {
            NetworkSource::SiouxFalls => build_sioux_falls(),
            NetworkSource::File(p) => MobilityGraph::from_spec(&crate::netfile::NetworkSpec::read(p)?)?,
        };
        Self::with_graph(config, graph)
    }

    pub fn with_graph(config: &ScenarioConfig, graph: MobilityGraph) -> Result<Self> {
        config.validate()?;
        let problems = graph.check_invariants();
        if !problems.is_empty() {
            return Err(Error::InvalidNetwork(problems));
        }
        let mut demand = match &config.demand_file {
            Some(p) => DemandModel::from_csv(p, &graph, config.growth_rate)?,
            None => generate(&graph, config.demand_bounds, config.growth_rate, config.seed)?,
        };
        if let Some(r) = config.intra_ratio {
            demand = demand.with_intra_ratio(r);
        }
        let plan = RoutePlan::new(&graph, &demand.requests)?;
        let assigners = (1..=config.horizon)
            .map(|t| Assigner::from_plan(&graph, &plan, &demand.demand_at_year(t), &config.params, config.logit_scale))
            .collect();
        Ok(Self { budgets: config.effective_budgets(), config: config.clone(), graph, demand, assigners })
    }

    pub fn horizon(&self) -> u32 {
        self.config.horizon
    }

    /// Budgets per year after the budget ratio.
    pub fn budgets(&self) -> &[[f64; 2]] {
        &self.budgets
    }

    /// Compiled assignment of design year `t` (1-based).
    pub fn assigner(&self, t: u32) -> &Assigner {
        &self.assigners[t as usize - 1]
    }

    pub fn context(&self, t: u32, betas: [f64; 2]) -> YearContext<'_> {
        YearContext {
            graph: &self.graph,
            params: &self.config.params,
            weights: self.config.weights,
            assigner: self.assigner(t),
            search: self.config.search,
            seed: self.config.seed,
            year: t,
            budgets: self.budgets[t as usize - 1],
            betas,
        }
    }

    /// Plays design year `t` from `base`. Without `no_mech` the year is its
    /// own disagreement point (the baseline).
    pub fn play_year(
        &self,
        t: u32,
        base: &NetworkState,
        betas: [f64; 2],
        no_mech: Option<[f64; 2]>,
    ) -> Result<YearRecord> {
        let ctx = self.context(t, betas);
        let s1 = stage1_equilibrium(&ctx, base)?;
        let s2 = stage2_coinvest(&ctx, &s1)?;
        let no_mech = no_mech.unwrap_or(s1.payoffs);
        let triple = PayoffTriple { no_mech, stage1: s1.payoffs, pool: s2.surplus };
        let deal = (s2.surplus > 0.0)
            .then(|| nbs_allocate(&triple).ok())
            .flatten()
            .filter(|a| (0..2).all(|i| a.payoffs[i] >= no_mech[i] + AGREEMENT_TOLERANCE));
        let rec = YearRecord {
            year: t,
            budgets: ctx.budgets,
            betas,
            no_mech,
            stage1: s1.payoffs,
            offered: s2.surplus,
            pool: 0.0,
            shares: [0.0; 2],
            payoffs: s1.payoffs,
            accepted: false,
            converged: s1.converged,
            rounds: s1.rounds,
            stage1_actions: s1.actions,
            stage2_action: DesignAction::new(),
            stage1_state: s1.state.clone(),
            state: s1.state,
        };
        Ok(match deal {
            Some(a) => YearRecord {
                pool: s2.surplus,
                shares: a.shares,
                payoffs: a.payoffs,
                accepted: true,
                stage2_action: s2.action,
                state: s2.state,
                ..rec
            },
            None => rec,
        })
    }

    /// The no-mechanism trajectory: zero co-investment in every year.
    pub fn baseline(&self) -> Result<Vec<YearRecord>> {
        let mut state = NetworkState::empty(&self.graph, &self.config.params);
        let mut years = Vec::new();
        for t in 1..=self.horizon() {
            let rec = self.play_year(t, &state, [0.0, 0.0], None)?;
            state = rec.state.clone();
            years.push(rec);
        }
        Ok(years)
    }

    /// A run following `betas` (one pair per year) against `baseline`.
    pub fn run(&self, betas: &[[f64; 2]], baseline: &[YearRecord]) -> Result<RunRecord> {
        if betas.len() != self.horizon() as usize {
            return Err(Error::Config(format!("{} ratios for a {}-year horizon", betas.len(), self.horizon())));
        }
        let mut state = NetworkState::empty(&self.graph, &self.config.params);
        let mut years = Vec::new();
        for (t, b) in (1..).zip(betas) {
            let rec = self.play_year(t, &state, *b, Some(baseline[t as usize - 1].stage1))?;
            state = rec.state.clone();
            years.push(rec);
        }
        Ok(self.finish(years, baseline))
    }

    fn network_metrics(&self, rec: &YearRecord) -> RegionMetrics {
        let flows = self.assigner(rec.year).assign(&rec.state);
        region_metrics(&flows, &self.graph, &self.config.params, None, &rec.built())
    }

    fn finish(&self, years: Vec<YearRecord>, baseline: &[YearRecord]) -> RunRecord {
        let ledger: Vec<YearLedger> = years.iter().map(YearRecord::ledger).collect();
        let (cir, roc) = roc_cir(&ledger);
        let delta_f = ledger
            .iter()
            .map(|y| (y.stage1[0] - y.no_mech[0]) + (y.stage1[1] - y.no_mech[1]) + y.pool)
            .sum();
        let last = years.last().expect("horizon is at least one year");
        let coop = self.network_metrics(last);
        let base = self.network_metrics(baseline.last().expect("baseline spans the horizon"));
        let delta = RegionMetrics {
            emissions: coop.emissions - base.emissions,
            travel_cost: coop.travel_cost - base.travel_cost,
            profit: coop.profit - base.profit,
        };
        RunRecord { name: self.config.name.clone(), seed: self.config.seed, years, delta_f, cir, roc: roc.ok(), delta }
    }

    /// Every schedule in `grid^T` with a shared ratio per year, in
    /// lexicographic grid order. Schedule prefixes are evaluated once.
    pub fn sweep(&self, grid: &[f64]) -> Result<Vec<RunRecord>> {
        if grid.is_empty() || !grid.iter().all(|b| (0.0..=1.0).contains(b)) {
            return Err(Error::Config("sweep grid must be a non-empty subset of [0, 1]".into()));
        }
        let baseline = self.baseline()?;
        let empty = NetworkState::empty(&self.graph, &self.config.params);
        self.grow(&empty, &[], grid, &baseline)
    }

    fn grow(
        &self,
        base: &NetworkState,
        prefix: &[YearRecord],
        grid: &[f64],
        baseline: &[YearRecord],
    ) -> Result<Vec<RunRecord>> {
        let t = prefix.len() as u32 + 1;
        let branches: Vec<Vec<RunRecord>> = grid
            .par_iter()
            .map(|&b| {
                let rec = self.play_year(t, base, [b, b], Some(baseline[t as usize - 1].stage1))?;
                let mut path = prefix.to_vec();
                path.push(rec);
                if t == self.horizon() {
                    Ok(vec![self.finish(path, baseline)])
                } else {
                    let next = path.last().expect("just pushed").state.clone();
                    self.grow(&next, &path, grid, baseline)
                }
            })
            .collect::<Result<_>>()?;
        Ok(branches.into_iter().flatten().collect())
    }
}

/// Baseline plus the cooperative run of the config's own schedule.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunRecord> {
    let s = Scenario::new(config)?;
    let baseline = s.baseline()?;
    s.run(&config.betas, &baseline)
}

/// Full schedule sweep over `grid`.
pub fn sweep(config: &ScenarioConfig, grid: &[f64]) -> Result<Vec<RunRecord>> {
    Scenario::new(config)?.sweep(grid)
}

/// Points with at least one accepted year and no flagged year.
pub fn accepted_points(records: &[RunRecord]) -> Vec<usize> {
    (0..records.len())
        .filter(|&i| records[i].accepted_years() > 0 && records[i].converged())
        .collect()
}

/// Indices of the highest-return and most investment-efficient accepted
/// points. Values within the optimizer's tie tolerance of the best count as
/// equal, and among those the earliest point in sweep order wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepHighlights {
    pub highest_return: Option<usize>,
    pub most_efficient: Option<usize>,
}

pub fn highlights(records: &[RunRecord]) -> SweepHighlights {
    let accepted = accepted_points(records);
    SweepHighlights {
        highest_return: best_point(records, &accepted, |r| Some(r.delta_f)),
        most_efficient: best_point(records, &accepted, |r| r.roc),
    }
}

/// Accepted points whose `delta_f` ties with the highest one.
pub fn highest_return_ties(records: &[RunRecord]) -> Vec<usize> {
    let accepted = accepted_points(records);
    let Some(best) = accepted.iter().map(|&i| records[i].delta_f).reduce(f64::max) else {
        return Vec::new();
    };
    accepted.into_iter().filter(|&i| best - records[i].delta_f <= tie_tolerance(best)).collect()
}

fn best_point(records: &[RunRecord], among: &[usize], key: impl Fn(&RunRecord) -> Option<f64>) -> Option<usize> {
    let best = among.iter().filter_map(|&i| key(&records[i])).reduce(f64::max)?;
    among
        .iter()
        .copied()
        .find(|&i| key(&records[i]).is_some_and(|v| best - v <= tie_tolerance(best)))
}

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Distribution {
    /// Linear-interpolation quartiles; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self { count: v.len(), min: v[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: v[v.len() - 1] })
    }
}

/// Row name, budget ratio and intra-regional demand ratio.
pub type HeteroSpec = (&'static str, (f64, f64), (f64, f64));

/// Heterogeneous-region rows: name, budget ratio `B1:B2`, intra-regional
/// demand ratio.
pub const HETEROGENEOUS_ROWS: [HeteroSpec; 6] = [
    ("Homogeneous", (1.0, 1.0), (1.0, 1.0)),
    ("Higher fund, Equal pop", (3.0, 2.0), (1.0, 1.0)),
    ("Equal fund, Less pop", (1.0, 1.0), (2.0, 3.0)),
    ("Higher fund, Higher pop", (3.0, 2.0), (3.0, 2.0)),
    ("Equal fund, Higher pop", (1.0, 1.0), (3.0, 2.0)),
    ("High fund, Less pop", (3.0, 2.0), (2.0, 3.0)),
];

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroRow {
    pub name: String,
    pub budget_ratio: (f64, f64),
    pub intra_ratio: (f64, f64),
    pub records: Vec<RunRecord>,
    /// ROC over converged points with a committed budget.
    pub roc: Option<Distribution>,
}

/// Config of one heterogeneous row derived from `base`.
pub fn heterogeneous_config(base: &ScenarioConfig, row: usize) -> ScenarioConfig {
    let (name, budget_ratio, intra) = HETEROGENEOUS_ROWS[row];
    ScenarioConfig { name: name.into(), budget_ratio, intra_ratio: Some(intra), ..base.clone() }
}

/// Runs the full sweep for every heterogeneous row.
pub fn heterogeneous_suite(base: &ScenarioConfig) -> Result<Vec<HeteroRow>> {
    (0..HETEROGENEOUS_ROWS.len())
        .map(|row| {
            let cfg = heterogeneous_config(base, row);
            let records = sweep(&cfg, &cfg.grid)?;
            let rocs: Vec<f64> = records.iter().filter(|r| r.converged()).filter_map(|r| r.roc).collect();
            Ok(HeteroRow {
                name: cfg.name.clone(),
                budget_ratio: cfg.budget_ratio,
                intra_ratio: cfg.intra_ratio.expect("rows set a demand ratio"),
                roc: Distribution::of(&rocs),
                records,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn small_config() -> ScenarioConfig {
        ScenarioConfig { grid: vec![0.0, 0.5], ..fixtures::toy_config(3).with_horizon(2) }
    }

    #[test]
    fn zero_schedule_is_the_baseline() {
        let cfg = small_config();
        let s = Scenario::with_graph(&cfg, fixtures::toy_graph(3)).unwrap();
        let baseline = s.baseline().unwrap();
        let run = s.run(&[[0.0, 0.0]; 2], &baseline).unwrap();
        assert_eq!(run.delta_f, 0.0);
        assert_eq!(run.cir, 0.0);
        assert!(run.roc.is_none());
        assert!(run.years.iter().all(|y| !y.accepted));
        assert_eq!(run.years, baseline);
    }

    #[test]
    fn sweep_order_and_prefix_sharing() {
        let cfg = small_config();
        let s = Scenario::with_graph(&cfg, fixtures::toy_graph(3)).unwrap();
        let records = s.sweep(&cfg.grid).unwrap();
        assert_eq!(records.len(), 4);
        let schedules: Vec<_> = records.iter().map(|r| r.years.iter().map(|y| y.betas[0]).collect::<Vec<_>>()).collect();
        assert_eq!(schedules, vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.5, 0.0], vec![0.5, 0.5]]);
        let baseline = s.baseline().unwrap();
        assert_eq!(records[0].years, baseline);
        // a direct run of any point matches the cached sweep
        let direct = s.run(&[[0.5, 0.5], [0.0, 0.0]], &baseline).unwrap();
        assert_eq!(direct, records[2]);
    }

    #[test]
    fn accepted_years_dominate() {
        let cfg = small_config();
        let s = Scenario::with_graph(&cfg, fixtures::toy_graph(3)).unwrap();
        for r in s.sweep(&cfg.grid).unwrap() {
            for y in &r.years {
                if y.accepted {
                    assert!(y.pool > 0.0);
                    assert!((0..2).all(|i| y.payoffs[i] > y.no_mech[i]));
                    assert!((y.shares[0] + y.shares[1] - y.pool).abs() <= 1e-9 * y.pool.abs().max(1.0));
                } else {
                    assert_eq!(y.state, y.stage1_state);
                    assert!(y.stage2_action.is_empty());
                }
                assert!(y.state.contains(&y.stage1_state));
            }
        }
    }

    #[test]
    fn cir_of_half_schedule() {
        let cfg = ScenarioConfig { betas: vec![[0.5, 0.5]; 2], ..small_config() };
        let s = Scenario::with_graph(&cfg, fixtures::toy_graph(3)).unwrap();
        let run = s.run(&cfg.betas, &s.baseline().unwrap()).unwrap();
        assert_eq!(run.cir, 0.5);
    }

    #[test]
    fn quartiles() {
        let d = Distribution::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((d.min, d.q1, d.median, d.q3, d.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert_eq!(Distribution::of(&[2.0, 4.0]).unwrap().median, 3.0);
        assert!(Distribution::of(&[]).is_none());
    }

    #[test]
    fn heterogeneous_rows_keep_budget_total() {
        let base = ScenarioConfig::default();
        let total: f64 = base.effective_budgets().iter().map(|b| b[0] + b[1]).sum();
        for row in 0..HETEROGENEOUS_ROWS.len() {
            let cfg = heterogeneous_config(&base, row);
            let t: f64 = cfg.effective_budgets().iter().map(|b| b[0] + b[1]).sum();
            assert!((t - total).abs() < 1e-9);
        }
        let high = heterogeneous_config(&base, 5);
        assert_eq!(high.budget_ratio, (3.0, 2.0));
        assert_eq!(high.intra_ratio, Some((2.0, 3.0)));
    }
}
