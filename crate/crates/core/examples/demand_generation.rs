//! Seeded travel demand with growth over design years.

use netcoop::build_sioux_falls;
use netcoop::demand::{generate, DemandBounds, TripType};

fn main() -> netcoop::Result<()> {
    let g = build_sioux_falls();
    let model = generate(&g, DemandBounds::uniform(20, 200), 0.015, 42)?;
    println!("{} requests, {} trips/day", model.requests.len(), model.total_trips());
    for t in TripType::ALL {
        println!("  {:<14} {}", t.name(), model.total_of(t));
    }
    for year in 1..=3 {
        let trips: u64 = model.demand_at_year(year).iter().map(|r| r.trips as u64).sum();
        println!("year {year}: {trips}");
    }
    // Same seed, same draw.
    assert_eq!(generate(&g, DemandBounds::uniform(20, 200), 0.015, 42)?.requests, model.requests);

    // Rescaled so region 2 holds 1.5 times region 1's internal trips.
    let skewed = model.with_intra_ratio((2.0, 3.0));
    println!(
        "intra 2:3 -> {} vs {}",
        skewed.total_of(TripType::ALL[0]),
        skewed.total_of(TripType::ALL[1])
    );
    Ok(())
}
