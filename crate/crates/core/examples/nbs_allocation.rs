//! Splitting a co-investment pool by Nash bargaining.

use netcoop::bargain::{lemma1_feasible, nbs_allocate, nbs_allocate_within, PayoffTriple};

fn main() {
    // Disagreement payoffs, stage-one payoffs and the pooled surplus, CHF/day.
    let triple = PayoffTriple { no_mech: [10.0, 20.0], stage1: [12.0, 21.0], pool: 5.0 };
    let a = nbs_allocate(&triple).expect("positive surplus");
    println!("surplus {:.1}: shares {:?}, payoffs {:?}", triple.surplus(), a.shares, a.payoffs);
    assert_eq!(a.payoffs, [14.0, 24.0]);

    // Forcing authority 1 to take at most 1 CHF/day of the pool.
    let capped = nbs_allocate_within(&triple, (f64::NEG_INFINITY, 1.0)).unwrap();
    println!("capped shares {:?}", capped.shares);

    // Stage one already fell short of the disagreement total: no deal.
    let short = PayoffTriple { no_mech: [10.0, 20.0], stage1: [8.0, 20.0], pool: 1.0 };
    println!("feasible: {}, allocation: {:?}", lemma1_feasible(&short), nbs_allocate(&short).err());
}
