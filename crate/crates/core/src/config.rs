//! Scenario configuration: a flat `key = value` text format with dotted
//! keys. Lines starting with `#` are comments. Unknown keys are rejected.
//!
//! ```text
//! name = default
//! horizon = 3
//! seed = 42
//! budget.region1 = 100000          # one value, or one per year
//! budget.region2 = 100000
//! beta.region1 = 0.5, 0.5, 0.5
//! beta.region2 = 0.5, 0.5, 0.5
//! sweep.grid = 0, 0.1, 0.3, 0.5, 0.7, 0.9
//! weights = 0.1, 1, 1
//! logit.mu = 0.1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::demand::{DemandBounds, TripType};
use crate::error::{Error, Result};
use crate::optimizer::LocalSearchParams;
use crate::params::{ServiceParams, Weights, DEFAULT_LOGIT_SCALE};

/// Co-investment ratios of the default sweep.
pub const DEFAULT_GRID: [f64; 6] = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSource {
    SiouxFalls,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub network: NetworkSource,
    /// Design years `T`.
    pub horizon: u32,
    /// `B^t_i` per year, CHF/day, before the budget ratio is applied.
    pub budgets: Vec<[f64; 2]>,
    /// `β^t_i` per year.
    pub betas: Vec<[f64; 2]>,
    pub grid: Vec<f64>,
    pub weights: Weights,
    pub logit_scale: f64,
    pub demand_bounds: DemandBounds,
    pub growth_rate: f64,
    /// CSV of base-year requests replacing the random draw.
    pub demand_file: Option<PathBuf>,
    /// Region 1 : region 2 shares of the per-year budget total.
    pub budget_ratio: (f64, f64),
    /// Region 1 : region 2 intra-regional demand; `None` keeps the draw.
    pub intra_ratio: Option<(f64, f64)>,
    pub params: ServiceParams,
    pub seed: u64,
    pub search: LocalSearchParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let horizon = 3;
        Self {
            name: "default".into(),
            network: NetworkSource::SiouxFalls,
            horizon,
            budgets: vec![[1e5, 1e5]; horizon as usize],
            betas: vec![[0.0, 0.0]; horizon as usize],
            grid: DEFAULT_GRID.to_vec(),
            weights: Weights::default(),
            logit_scale: DEFAULT_LOGIT_SCALE,
            demand_bounds: DemandBounds::default(),
            growth_rate: 0.015,
            demand_file: None,
            budget_ratio: (1.0, 1.0),
            intra_ratio: None,
            params: ServiceParams::default(),
            seed: 42,
            search: LocalSearchParams::default(),
        }
    }
}

fn config_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn number<T: std::str::FromStr>(v: &str, line: usize, key: &str) -> Result<T> {
    v.parse().map_err(|_| config_err(line, format!("`{key}`: invalid number `{v}`")))
}

fn list(v: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| number(s.trim(), line, key)).collect()
}

fn ratio(v: &str, line: usize, key: &str) -> Result<(f64, f64)> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| config_err(line, format!("`{key}`: expected `a:b`, got `{v}`")))?;
    Ok((number(a.trim(), line, key)?, number(b.trim(), line, key)?))
}

fn bounds_pair(v: &str, line: usize, key: &str) -> Result<(u32, u32)> {
    let xs = list(v, line, key)?;
    match xs.as_slice() {
        [lo, hi] if *lo >= 0.0 && *hi >= 0.0 && lo.fract() == 0.0 && hi.fract() == 0.0 => {
            Ok((*lo as u32, *hi as u32))
        }
        _ => Err(config_err(line, format!("`{key}`: expected `lower, upper` integers"))),
    }
}

/// Per-year values from a single value or a list of `horizon` values.
fn per_year(values: &[f64], horizon: u32, key: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; horizon as usize]),
        n if n == horizon as usize => Ok(values.to_vec()),
        n => Err(Error::Config(format!("`{key}`: {n} values for a {horizon}-year horizon"))),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim().to_ascii_lowercase();
            if seen.insert(key.clone(), (value.trim().to_string(), line)).is_some() {
                return Err(config_err(line, format!("duplicate key `{key}`")));
            }
        }
        // the horizon decides how per-year lists expand, so read it first
        if let Some((v, line)) = seen.remove("horizon") {
            cfg.horizon = number(&v, line, "horizon")?;
        }
        let mut per_year_keys = Vec::new();
        for (key, (v, line)) in seen {
            let k = key.as_str();
            let p = &mut cfg.params;
            match k {
                "name" => cfg.name = v,
                "network" => {
                    cfg.network = if v.eq_ignore_ascii_case("sioux_falls") {
                        NetworkSource::SiouxFalls
                    } else {
                        NetworkSource::File(PathBuf::from(v))
                    }
                }
                "seed" => cfg.seed = number(&v, line, k)?,
                "sweep.grid" => cfg.grid = list(&v, line, k)?,
                "weights" => {
                    let w = list(&v, line, k)?;
                    cfg.weights = match w.as_slice() {
                        [a, b, c] => Weights::new(*a, *b, *c)
                            .ok_or_else(|| config_err(line, "weights must be positive"))?,
                        _ => return Err(config_err(line, "weights take three values")),
                    };
                }
                "logit.mu" => cfg.logit_scale = number(&v, line, k)?,
                "demand.bounds" => cfg.demand_bounds = DemandBounds::uniform_pair(bounds_pair(&v, line, k)?),
                "demand.growth" => cfg.growth_rate = number(&v, line, k)?,
                "demand.file" => cfg.demand_file = Some(PathBuf::from(v)),
                "demand.intra_ratio" => cfg.intra_ratio = Some(ratio(&v, line, k)?),
                "budget.ratio" => cfg.budget_ratio = ratio(&v, line, k)?,
                "budget.region1" | "budget.region2" | "beta.region1" | "beta.region2" => {
                    per_year_keys.push((key.clone(), list(&v, line, k)?))
                }
                "search.restarts" => cfg.search.restarts = number(&v, line, k)?,
                "search.patience" => cfg.search.patience = number(&v, line, k)?,
                "search.max_evals" => cfg.search.max_evals = number(&v, line, k)?,
                "service.value_of_time" => p.value_of_time = number(&v, line, k)?,
                "service.rail_speed" => p.rail_speed = number(&v, line, k)?,
                "service.alt_speed" => p.alt_speed = number(&v, line, k)?,
                "service.rail_fare" => p.rail_fare = number(&v, line, k)?,
                "service.alt_fare" => p.alt_fare = number(&v, line, k)?,
                "service.rail_emission" => p.rail_emission = number(&v, line, k)?,
                "service.alt_emission" => p.alt_emission = number(&v, line, k)?,
                "service.base_cost" => p.base_cost = number(&v, line, k)?,
                "service.capacity_cost" => p.capacity_cost = number(&v, line, k)?,
                "service.seat_capacity" => p.seat_capacity = number(&v, line, k)?,
                "service.max_frequency" => p.max_frequency = number(&v, line, k)?,
                "service.big_m" => p.big_m = number(&v, line, k)?,
                "service.bpr_coefficient" => p.bpr_coefficient = number(&v, line, k)?,
                "service.bpr_exponent" => p.bpr_exponent = number(&v, line, k)?,
                _ => {
                    if let Some(t) = k.strip_prefix("demand.bounds.") {
                        let ty = TripType::ALL
                            .into_iter()
                            .find(|ty| ty.name() == t)
                            .ok_or_else(|| config_err(line, format!("unknown trip type `{t}`")))?;
                        cfg.demand_bounds.by_type[ty.index()] = bounds_pair(&v, line, k)?;
                    } else {
                        return Err(config_err(line, format!("unknown key `{k}`")));
                    }
                }
            }
        }
        cfg.budgets = vec![[1e5, 1e5]; cfg.horizon as usize];
        cfg.betas = vec![[0.0, 0.0]; cfg.horizon as usize];
        for (key, values) in per_year_keys {
            let vals = per_year(&values, cfg.horizon, &key)?;
            let (target, i) = match key.as_str() {
                "budget.region1" => (&mut cfg.budgets, 0),
                "budget.region2" => (&mut cfg.budgets, 1),
                "beta.region1" => (&mut cfg.betas, 0),
                _ => (&mut cfg.betas, 1),
            };
            for (slot, v) in target.iter_mut().zip(vals) {
                slot[i] = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        let t = self.horizon as usize;
        if self.budgets.len() != t || self.betas.len() != t {
            return bad(format!("budgets and betas need {t} years"));
        }
        if self.budgets.iter().flatten().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("budgets must be non-negative".into());
        }
        let unit = |b: &f64| (0.0..=1.0).contains(b);
        if !self.betas.iter().flatten().all(unit) {
            return bad("co-investment ratios must lie in [0, 1]".into());
        }
        if self.grid.is_empty() || !self.grid.iter().all(unit) {
            return bad("sweep grid must be a non-empty subset of [0, 1]".into());
        }
        if !self.weights.is_valid() {
            return bad("weights must be positive".into());
        }
        if !(self.logit_scale.is_finite() && self.logit_scale > 0.0) {
            return bad("logit scale must be positive".into());
        }
        let ratios = [("budget ratio", Some(self.budget_ratio)), ("demand ratio", self.intra_ratio)];
        for (name, (a, b)) in ratios.into_iter().filter_map(|(n, r)| Some((n, r?))) {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return bad(format!("{name} terms must be positive"));
            }
        }
        if !(self.growth_rate.is_finite() && self.growth_rate > -1.0) {
            return bad("growth rate must exceed -1".into());
        }
        self.demand_bounds.check()?;
        if self.search.max_evals == 0 {
            return bad("search.max_evals must be positive".into());
        }
        Ok(())
    }

    /// Budgets actually available per year after applying the budget ratio
    /// to each year's total.
    pub fn effective_budgets(&self) -> Vec<[f64; 2]> {
        let (a, b) = self.budget_ratio;
        let share = a / (a + b);
        self.budgets
            .iter()
            .map(|[b1, b2]| {
                let total = b1 + b2;
                if a == b {
                    [*b1, *b2]
                } else {
                    [total * share, total * (1.0 - share)]
                }
            })
            .collect()
    }

    /// Same scenario over `horizon` years; per-year budgets and ratios are
    /// truncated or extended with their last value.
    pub fn with_horizon(&self, horizon: u32) -> Self {
        let resize = |v: &[[f64; 2]]| {
            let last = v.last().copied().unwrap_or([0.0, 0.0]);
            (0..horizon as usize).map(|i| v.get(i).copied().unwrap_or(last)).collect()
        };
        Self { horizon, budgets: resize(&self.budgets), betas: resize(&self.betas), ..self.clone() }
    }

    /// Same scenario with one shared ratio per year for both authorities.
    pub fn with_shared_betas(&self, betas: &[f64]) -> Self {
        Self { betas: betas.iter().map(|b| [*b, *b]).collect(), ..self.clone() }
    }

    /// Serializes back into the text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |xs: &mut dyn Iterator<Item = f64>| xs.map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "name = {}", self.name);
        match &self.network {
            NetworkSource::SiouxFalls => {
                let _ = writeln!(s, "network = sioux_falls");
            }
            NetworkSource::File(p) => {
                let _ = writeln!(s, "network = {}", p.display());
            }
        }
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "seed = {}", self.seed);
        for i in 0..2 {
            let _ = writeln!(s, "budget.region{} = {}", i + 1, join(&mut self.budgets.iter().map(|b| b[i])));
        }
        for i in 0..2 {
            let _ = writeln!(s, "beta.region{} = {}", i + 1, join(&mut self.betas.iter().map(|b| b[i])));
        }
        let _ = writeln!(s, "budget.ratio = {}:{}", self.budget_ratio.0, self.budget_ratio.1);
        let _ = writeln!(s, "sweep.grid = {}", join(&mut self.grid.iter().copied()));
        let w = &self.weights;
        let _ = writeln!(s, "weights = {}, {}, {}", w.emissions, w.travel_cost, w.profit);
        let _ = writeln!(s, "logit.mu = {}", self.logit_scale);
        for t in TripType::ALL {
            let (lo, hi) = self.demand_bounds.get(t);
            let _ = writeln!(s, "demand.bounds.{} = {lo}, {hi}", t.name());
        }
        let _ = writeln!(s, "demand.growth = {}", self.growth_rate);
        if let Some((a, b)) = self.intra_ratio {
            let _ = writeln!(s, "demand.intra_ratio = {a}:{b}");
        }
        if let Some(p) = &self.demand_file {
            let _ = writeln!(s, "demand.file = {}", p.display());
        }
        let _ = writeln!(s, "search.restarts = {}", self.search.restarts);
        let _ = writeln!(s, "search.patience = {}", self.search.patience);
        let _ = writeln!(s, "search.max_evals = {}", self.search.max_evals);
        let p = &self.params;
        for (k, v) in [
            ("value_of_time", p.value_of_time),
            ("rail_speed", p.rail_speed),
            ("alt_speed", p.alt_speed),
            ("rail_fare", p.rail_fare),
            ("alt_fare", p.alt_fare),
            ("rail_emission", p.rail_emission),
            ("alt_emission", p.alt_emission),
            ("base_cost", p.base_cost),
            ("capacity_cost", p.capacity_cost),
            ("seat_capacity", p.seat_capacity as f64),
            ("max_frequency", p.max_frequency as f64),
            ("big_m", p.big_m),
            ("bpr_coefficient", p.bpr_coefficient),
            ("bpr_exponent", p.bpr_exponent),
        ] {
            let _ = writeln!(s, "service.{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ScenarioConfig::parse("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        assert_eq!(c.grid, vec![0.0, 0.1, 0.3, 0.5, 0.7, 0.9]);
        assert_eq!(c.horizon, 3);
    }

    #[test]
    fn per_year_lists() {
        let c = ScenarioConfig::parse(
            "horizon = 2\nbudget.region1 = 10, 20\nbeta.region2 = 0.5 # shared\nweights = 1,2,3\n",
        )
        .unwrap();
        assert_eq!(c.budgets, vec![[10.0, 1e5], [20.0, 1e5]]);
        assert_eq!(c.betas, vec![[0.0, 0.5], [0.0, 0.5]]);
        assert_eq!(c.weights, Weights::new(1.0, 2.0, 3.0).unwrap());
    }

    #[test]
    fn rejections() {
        for bad in [
            "horizon = 0",
            "beta.region1 = 1.5",
            "budget.region1 = -1",
            "weights = 0, 1, 1",
            "nonsense = 1",
            "seed = x",
            "horizon = 3\nbudget.region1 = 1, 2",
            "budget.ratio = 3",
            "seed = 1\nseed = 2",
            "demand.bounds = 200, 20",
            "missing equals",
        ] {
            assert!(matches!(ScenarioConfig::parse(bad), Err(Error::Config(_) | Error::InvalidBounds { .. })), "{bad}");
        }
    }

    #[test]
    fn text_round_trip() {
        let mut c =
            ScenarioConfig { budget_ratio: (3.0, 2.0), intra_ratio: Some((2.0, 3.0)), ..ScenarioConfig::default() };
        c.betas[1] = [0.3, 0.7];
        c.demand_bounds.by_type[2] = (5, 50);
        c.params.rail_fare = 0.3;
        assert_eq!(ScenarioConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn budget_ratio_keeps_total() {
        let c = ScenarioConfig { budget_ratio: (3.0, 2.0), ..ScenarioConfig::default() };
        for [a, b] in c.effective_budgets() {
            assert!((a + b - 2e5).abs() < 1e-9);
            assert!((a / b - 1.5).abs() < 1e-12);
        }
    }
}
