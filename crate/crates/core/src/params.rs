//! Service, cost and behavioural constants shared by every module.

/// Mode and construction parameters. Defaults are the published values for
/// the Sioux Falls experiments; every field can be overridden from a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceParams {
    /// CHF per hour.
    pub value_of_time: f64,
    /// km/h.
    pub rail_speed: f64,
    /// km/h.
    pub alt_speed: f64,
    /// CHF per km per passenger.
    pub rail_fare: f64,
    /// CHF per km per passenger.
    pub alt_fare: f64,
    /// kg CO2 per km per passenger.
    pub rail_emission: f64,
    /// kg CO2 per km per passenger.
    pub alt_emission: f64,
    /// Line construction cost, CHF/day/km.
    pub base_cost: f64,
    /// Frequency upgrade cost, CHF/day/km per frequency unit.
    pub capacity_cost: f64,
    /// Seats per vehicle; rail capacity is `seat_capacity * frequency`.
    pub seat_capacity: u32,
    /// Upper bound on the cumulative frequency of one rail edge.
    pub max_frequency: u32,
    /// Coupling constant between connectivity and frequency.
    pub big_m: f64,
    /// BPR multiplier on the volume/capacity term.
    pub bpr_coefficient: f64,
    /// BPR exponent.
    pub bpr_exponent: f64,
}

impl Default for ServiceParams {
    fn default() -> Self {
        Self {
            value_of_time: 30.0,
            rail_speed: 150.0,
            alt_speed: 100.0,
            rail_fare: 0.25,
            alt_fare: 1.65,
            rail_emission: 0.019,
            alt_emission: 0.148,
            base_cost: 574.0,
            capacity_cost: 31.4,
            seat_capacity: 500,
            max_frequency: 15,
            big_m: 1e5,
            bpr_coefficient: 0.15,
            bpr_exponent: 4.0,
        }
    }
}

impl ServiceParams {
    /// Generalized cost of one passenger-km by rail (time plus fare).
    pub fn rail_cost_per_km(&self) -> f64 {
        self.value_of_time / self.rail_speed + self.rail_fare
    }

    /// Generalized cost of one passenger-km on the alternative layer.
    pub fn alt_cost_per_km(&self) -> f64 {
        self.value_of_time / self.alt_speed + self.alt_fare
    }
}

/// Stage objective weights: emissions (CHF/kg), travel cost and profit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub emissions: f64,
    pub travel_cost: f64,
    pub profit: f64,
}

impl Weights {
    pub fn new(emissions: f64, travel_cost: f64, profit: f64) -> Option<Self> {
        let w = Self { emissions, travel_cost, profit };
        w.is_valid().then_some(w)
    }

    pub fn is_valid(&self) -> bool {
        [self.emissions, self.travel_cost, self.profit]
            .iter()
            .all(|w| w.is_finite() && *w > 0.0)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            emissions: self.emissions * k,
            travel_cost: self.travel_cost * k,
            profit: self.profit * k,
        }
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self { emissions: 0.1, travel_cost: 1.0, profit: 1.0 }
    }
}

/// Default logit scale, per CHF.
pub const DEFAULT_LOGIT_SCALE: f64 = 0.1;
