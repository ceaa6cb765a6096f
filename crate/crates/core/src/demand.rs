//! Travel requests: classification, seeded generation and yearly growth.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::net_model::{MobilityGraph, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TripType {
    Intra1,
    Intra2,
    Inter1,
    Inter2,
}

impl TripType {
    pub const ALL: [TripType; 4] =
        [TripType::Intra1, TripType::Intra2, TripType::Inter1, TripType::Inter2];

    pub fn name(self) -> &'static str {
        match self {
            TripType::Intra1 => "intra1",
            TripType::Intra2 => "intra2",
            TripType::Inter1 => "inter1",
            TripType::Inter2 => "inter2",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_regions(origin: Region, destination: Region) -> Self {
        match (origin, destination) {
            (Region::One, Region::One) => TripType::Intra1,
            (Region::Two, Region::Two) => TripType::Intra2,
            (Region::One, Region::Two) => TripType::Inter1,
            (Region::Two, Region::One) => TripType::Inter2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TravelRequest {
    /// Alternative-layer site number.
    pub origin: u32,
    pub destination: u32,
    /// pax/day.
    pub trips: u32,
    pub trip_type: TripType,
}

pub fn classify(origin: u32, destination: u32, graph: &MobilityGraph) -> Result<TripType> {
    let o = graph.site_region(origin).ok_or(Error::UnknownNode(origin))?;
    let d = graph.site_region(destination).ok_or(Error::UnknownNode(destination))?;
    Ok(TripType::from_regions(o, d))
}

/// Inclusive per-type bounds of the uniform base-year draw, pax/day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DemandBounds {
    pub by_type: [(u32, u32); 4],
}

impl DemandBounds {
    pub fn uniform(lower: u32, upper: u32) -> Self {
        Self { by_type: [(lower, upper); 4] }
    }

    pub fn uniform_pair((lower, upper): (u32, u32)) -> Self {
        Self::uniform(lower, upper)
    }

    pub fn get(&self, t: TripType) -> (u32, u32) {
        self.by_type[t.index()]
    }

    pub fn check(&self) -> Result<()> {
        for t in TripType::ALL {
            let (lower, upper) = self.get(t);
            if lower > upper {
                return Err(Error::InvalidBounds { trip_type: t.name(), lower, upper });
            }
        }
        Ok(())
    }
}

impl Default for DemandBounds {
    fn default() -> Self {
        Self::uniform(20, 200)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandModel {
    /// Base-year (t = 1) requests.
    pub requests: Vec<TravelRequest>,
    /// Annual growth factor, e.g. 0.015.
    pub growth_rate: f64,
    pub bounds: DemandBounds,
}

fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor().max(0.0) as u32
}

/// One request per ordered pair of distinct sites, volumes drawn uniformly
/// from the bounds of the pair's trip type. Deterministic in `seed`.
pub fn generate(
    graph: &MobilityGraph,
    bounds: DemandBounds,
    growth_rate: f64,
    seed: u64,
) -> Result<DemandModel> {
    bounds.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<u32> = graph.sites().collect();
    let mut requests = Vec::with_capacity(sites.len() * sites.len().saturating_sub(1));
    for &o in &sites {
        for &d in &sites {
            if o == d {
                continue;
            }
            let trip_type = classify(o, d, graph)?;
            let (lo, hi) = bounds.get(trip_type);
            requests.push(TravelRequest {
                origin: o,
                destination: d,
                trips: rng.gen_range(lo..=hi),
                trip_type,
            });
        }
    }
    Ok(DemandModel { requests, growth_rate, bounds })
}

impl DemandModel {
    /// Requests for design year `t >= 1`; volumes grow by `(1 + τ)^(t-1)`
    /// from the base draw with round-half-up.
    pub fn demand_at_year(&self, t: u32) -> Vec<TravelRequest> {
        assert!(t >= 1, "design years start at 1");
        let factor = (1.0 + self.growth_rate).powi(t as i32 - 1);
        self.requests
            .iter()
            .map(|r| TravelRequest { trips: round_half_up(r.trips as f64 * factor), ..*r })
            .collect()
    }

    pub fn total_trips(&self) -> u64 {
        self.requests.iter().map(|r| r.trips as u64).sum()
    }

    pub fn total_of(&self, t: TripType) -> u64 {
        self.requests.iter().filter(|r| r.trip_type == t).map(|r| r.trips as u64).sum()
    }

    /// Rescales intra-regional volumes so region 1 : region 2 intra totals
    /// follow `ratio`, keeping their sum (and thus the total) unchanged up
    /// to per-request rounding.
    pub fn with_intra_ratio(&self, ratio: (f64, f64)) -> DemandModel {
        let (i1, i2) = (self.total_of(TripType::Intra1) as f64, self.total_of(TripType::Intra2) as f64);
        let total = i1 + i2;
        let share1 = ratio.0 / (ratio.0 + ratio.1);
        let f1 = if i1 > 0.0 { total * share1 / i1 } else { 1.0 };
        let f2 = if i2 > 0.0 { total * (1.0 - share1) / i2 } else { 1.0 };
        let requests = self
            .requests
            .iter()
            .map(|r| {
                let f = match r.trip_type {
                    TripType::Intra1 => f1,
                    TripType::Intra2 => f2,
                    _ => 1.0,
                };
                TravelRequest { trips: round_half_up(r.trips as f64 * f), ..*r }
            })
            .collect();
        DemandModel { requests, ..self.clone() }
    }

    /// Loads requests from a CSV with header `origin,destination,trips`.
    /// Trip types are derived from the graph.
    pub fn from_csv(path: impl AsRef<Path>, graph: &MobilityGraph, growth_rate: f64) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut requests = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let num = |k: usize, what: &str| -> Result<u32> {
                row.get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse { line, message: format!("invalid {what}") })
            };
            let (origin, destination, trips) =
                (num(0, "origin")?, num(1, "destination")?, num(2, "trips")?);
            if origin == destination {
                return Err(Error::Parse { line, message: "origin equals destination".into() });
            }
            let trip_type = classify(origin, destination, graph)?;
            requests.push(TravelRequest { origin, destination, trips, trip_type });
        }
        let max = requests.iter().map(|r| r.trips).max().unwrap_or(0);
        let min = requests.iter().map(|r| r.trips).min().unwrap_or(0);
        Ok(DemandModel { requests, growth_rate, bounds: DemandBounds::uniform(min, max) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::build_sioux_falls;

    #[test]
    fn classification_examples() {
        let g = build_sioux_falls();
        assert_eq!(classify(3, 10, &g).unwrap(), TripType::Intra1);
        assert_eq!(classify(3, 20, &g).unwrap(), TripType::Inter1);
        assert_eq!(classify(20, 3, &g).unwrap(), TripType::Inter2);
        assert_eq!(classify(20, 13, &g).unwrap(), TripType::Intra2);
        assert!(matches!(classify(3, 99, &g), Err(Error::UnknownNode(99))));
    }

    #[test]
    fn generation_is_seeded() {
        let g = build_sioux_falls();
        let a = generate(&g, DemandBounds::default(), 0.015, 7).unwrap();
        let b = generate(&g, DemandBounds::default(), 0.015, 7).unwrap();
        let c = generate(&g, DemandBounds::default(), 0.015, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.requests, c.requests);
        assert_eq!(a.requests.len(), 24 * 23);
        for r in &a.requests {
            assert_ne!(r.origin, r.destination);
            assert!((20..=200).contains(&r.trips));
            assert_eq!(classify(r.origin, r.destination, &g).unwrap(), r.trip_type);
        }
    }

    #[test]
    fn degenerate_bounds() {
        let g = build_sioux_falls();
        let m = generate(&g, DemandBounds::uniform(42, 42), 0.0, 1).unwrap();
        assert!(m.requests.iter().all(|r| r.trips == 42));
        assert!(matches!(
            generate(&g, DemandBounds::uniform(5, 4), 0.0, 1),
            Err(Error::InvalidBounds { .. })
        ));
    }

    #[test]
    fn growth() {
        let model = DemandModel {
            requests: vec![TravelRequest { origin: 1, destination: 2, trips: 100, trip_type: TripType::Intra1 }],
            growth_rate: 0.015,
            bounds: DemandBounds::default(),
        };
        assert_eq!(model.demand_at_year(1)[0].trips, 100);
        assert_eq!(model.demand_at_year(3)[0].trips, 103);
        let flat = DemandModel { growth_rate: 0.0, ..model };
        assert!((1..=5).all(|t| flat.demand_at_year(t)[0].trips == 100));
    }

    #[test]
    fn intra_ratio_keeps_total() {
        let g = build_sioux_falls();
        let m = generate(&g, DemandBounds::default(), 0.015, 3).unwrap();
        for ratio in [(2.0, 3.0), (3.0, 2.0), (1.0, 1.0)] {
            let s = m.with_intra_ratio(ratio);
            let diff = s.total_trips() as i64 - m.total_trips() as i64;
            assert!(diff.unsigned_abs() as usize <= m.requests.len(), "{diff}");
            let r = s.total_of(TripType::Intra1) as f64 / s.total_of(TripType::Intra2) as f64;
            assert!((r - ratio.0 / ratio.1).abs() < 0.01, "{r}");
            assert_eq!(s.total_of(TripType::Inter1), m.total_of(TripType::Inter1));
        }
    }
}
