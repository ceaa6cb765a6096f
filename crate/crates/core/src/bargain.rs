//! Nash-bargained sharing of the co-investment surplus between the two
//! authorities, with the no-mechanism payoffs as disagreement point.
//!
//! With two players and a linear frontier the product
//! `(v1 - F1)(v2 - F2)` subject to `v1 + v2 = const` peaks where both
//! surpluses are equal, so the allocation has a closed form.

use crate::error::{Error, Result};

/// Strict-inequality slack for the feasibility gate, CHF/day.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

/// Payoffs entering one year's bargaining, CHF/day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffTriple {
    /// Disagreement point: equilibrium payoffs without any mechanism.
    pub no_mech: [f64; 2],
    /// Non-cooperative stage payoffs this year.
    pub stage1: [f64; 2],
    /// Co-investment surplus; 0 when cooperation was declined.
    pub pool: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    /// Transfers out of the pool; they sum to the pool.
    pub shares: [f64; 2],
    /// Final payoffs `stage1 + share`.
    pub payoffs: [f64; 2],
}

impl PayoffTriple {
    /// Joint gain over the disagreement point.
    pub fn surplus(&self) -> f64 {
        (self.stage1[0] - self.no_mech[0]) + (self.stage1[1] - self.no_mech[1]) + self.pool
    }

    /// Nash product for a given share of authority 1.
    pub fn nash_product(&self, q1: f64) -> f64 {
        let q2 = self.pool - q1;
        (self.stage1[0] + q1 - self.no_mech[0]) * (self.stage1[1] + q2 - self.no_mech[1])
    }

    /// Shares of authority 1 for which both authorities beat disagreement.
    pub fn feasible_shares(&self) -> (f64, f64) {
        let lo = self.no_mech[0] - self.stage1[0];
        let hi = self.pool - (self.no_mech[1] - self.stage1[1]);
        (lo, hi)
    }
}

/// True iff pooled payoffs strictly exceed the disagreement total.
pub fn lemma1_feasible(triple: &PayoffTriple) -> bool {
    triple.surplus() > AGREEMENT_TOLERANCE
}

fn allocation_from_q1(triple: &PayoffTriple, q1: f64) -> Allocation {
    let q2 = triple.pool - q1;
    Allocation {
        shares: [q1, q2],
        payoffs: [triple.stage1[0] + q1, triple.stage1[1] + q2],
    }
}

/// The unique maximizer of the Nash product: each side gets half the
/// surplus on top of its disagreement payoff.
pub fn nbs_allocate(triple: &PayoffTriple) -> Result<Allocation> {
    if !lemma1_feasible(triple) {
        return Err(Error::NoAgreement);
    }
    let half = triple.surplus() / 2.0;
    let q1 = triple.no_mech[0] + half - triple.stage1[0];
    Ok(allocation_from_q1(triple, q1))
}

/// Bargaining over a restricted interval of authority-1 shares. The Nash
/// product is concave in `q1`, so the optimum is the unrestricted one
/// clamped into the interval.
pub fn nbs_allocate_within(triple: &PayoffTriple, q1_range: (f64, f64)) -> Result<Allocation> {
    let free = nbs_allocate(triple)?;
    let (lo, hi) = triple.feasible_shares();
    let (lo, hi) = (lo.max(q1_range.0), hi.min(q1_range.1));
    if lo >= hi {
        return Err(Error::NoAgreement);
    }
    Ok(allocation_from_q1(triple, free.shares[0].clamp(lo, hi)))
}

/// Every authority does at least as well cooperating as at equilibrium.
pub fn feasible_agreement(coop: &[f64], equilibrium: &[f64]) -> bool {
    assert_eq!(coop.len(), equilibrium.len(), "authority sets differ");
    coop.iter().zip(equilibrium).all(|(c, e)| c >= e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreement_gate_examples() {
        let fails = PayoffTriple { no_mech: [13.0, 18.0], stage1: [10.0, 20.0], pool: 0.0 };
        assert!(!lemma1_feasible(&fails));
        let holds = PayoffTriple { no_mech: [10.0, 20.0], stage1: [12.0, 21.0], pool: 5.0 };
        assert!(lemma1_feasible(&holds));
        let equal = PayoffTriple { no_mech: [10.0, 20.0], stage1: [10.0, 20.0], pool: 0.0 };
        assert!(!lemma1_feasible(&equal));
        assert!(matches!(nbs_allocate(&fails), Err(Error::NoAgreement)));
        assert!(matches!(nbs_allocate(&equal), Err(Error::NoAgreement)));
    }

    #[test]
    fn closed_form_example() {
        let t = PayoffTriple { no_mech: [10.0, 20.0], stage1: [12.0, 21.0], pool: 5.0 };
        let a = nbs_allocate(&t).unwrap();
        assert_eq!(a.shares, [2.0, 3.0]);
        assert_eq!(a.payoffs, [14.0, 24.0]);
        // grid search over the feasible share interval
        let (lo, hi) = t.feasible_shares();
        let steps = 100_000;
        let best = (0..=steps)
            .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
            .max_by(|a, b| t.nash_product(*a).total_cmp(&t.nash_product(*b)))
            .unwrap();
        assert!((best - 2.0).abs() < 1e-3 * t.pool);
    }

    #[test]
    fn symmetric_split() {
        let t = PayoffTriple { no_mech: [7.0, 7.0], stage1: [9.0, 9.0], pool: 4.0 };
        let a = nbs_allocate(&t).unwrap();
        assert_eq!(a.shares[0], a.shares[1]);
    }

    #[test]
    fn affine_invariance() {
        let t = PayoffTriple { no_mech: [10.0, 20.0], stage1: [12.0, 21.0], pool: 5.0 };
        let phi = |v: f64| 2.0 * v + 3.0;
        // the pool is a payoff difference, so it scales without the offset
        let mapped = PayoffTriple {
            no_mech: t.no_mech.map(phi),
            stage1: t.stage1.map(phi),
            pool: 2.0 * t.pool,
        };
        let a = nbs_allocate(&t).unwrap();
        let b = nbs_allocate(&mapped).unwrap();
        for i in 0..2 {
            assert!((b.payoffs[i] - phi(a.payoffs[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_containing_optimum_changes_nothing() {
        let t = PayoffTriple { no_mech: [10.0, 20.0], stage1: [12.0, 21.0], pool: 5.0 };
        let free = nbs_allocate(&t).unwrap();
        assert_eq!(nbs_allocate_within(&t, (1.5, 2.5)).unwrap(), free);
        let clipped = nbs_allocate_within(&t, (2.5, 4.0)).unwrap();
        assert_eq!(clipped.shares[0], 2.5);
    }

    #[test]
    fn agreement_examples() {
        assert!(feasible_agreement(&[14.0, 24.0], &[12.0, 21.0]));
        assert!(!feasible_agreement(&[14.0, 20.0], &[12.0, 21.0]));
        assert!(feasible_agreement(&[12.0, 21.0], &[12.0, 21.0]));
    }
}
