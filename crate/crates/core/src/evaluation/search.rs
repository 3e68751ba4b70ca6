//! Exhaustive searches over reciprocal price ladders for the correlated
//! pair family.
//!
//! Candidate prices are reciprocals 1/a with a in [m]. The searches run in
//! integer arithmetic (exact, overflow-checked by width: every product
//! fits comfortably in i128) and the winner is re-evaluated in big
//! rationals before being returned.

use crate::rational::{int, ratio, Rational};
use crate::{Error, Result};

/// Winning price ladder of a search: the price denominators in offer
/// order, and the exact expected revenue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSearchResult {
    pub price_denoms: Vec<u32>,
    pub revenue: Rational,
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("pair family needs m >= 1".into()));
    }
    Ok(())
}

/// Exact expected revenue of the two-offer ladder (1/a1 to the first
/// buyer, then 1/a2 to the second) on the pair family with parameter m,
/// as an integer fraction.
fn two_stage_fraction(m: i128, a1: i128, a2: i128) -> (i128, i128) {
    (a2 + (a2 - a1).max(0), a2 * m)
}

/// Exact expected revenue of the three-price ladder (1/a1 and 1/a2p to
/// the first buyer depending on the second buyer's report tier, 1/a2 to
/// the second buyer) on the pair family with parameter m.
fn three_price_fraction(m: i128, a1: i128, a2: i128, a2p: i128) -> (i128, i128) {
    let t1 = (a1 - a2p).max(0) * a2 * a2p;
    let t2 = (a2 - a1).max(0) * a1 * a2p;
    let t3 = a1.min(a2p) * a2 * (a2p + a1);
    (t1 + t2 + t3, a1 * a2 * a2p * m)
}

fn better(num: i128, den: i128, best_num: i128, best_den: i128) -> bool {
    num * best_den > best_num * den
}

/// Best two-offer reciprocal ladder for the pair family with parameter m.
pub fn best_two_stage_pair(m: u32) -> Result<PairSearchResult> {
    check_m(m)?;
    let mi = m as i128;
    let (mut best, mut best_num, mut best_den) = ((1i128, 1i128), 0i128, 1i128);
    for a1 in 1..=mi {
        for a2 in 1..=mi {
            let (num, den) = two_stage_fraction(mi, a1, a2);
            if better(num, den, best_num, best_den) {
                best = (a1, a2);
                best_num = num;
                best_den = den;
            }
        }
    }
    let revenue = two_stage_revenue(m, best.0 as u32, best.1 as u32);
    assert_eq!(
        revenue,
        ratio(best_num as i64, best_den as i64),
        "integer search and rational evaluation disagree"
    );
    Ok(PairSearchResult { price_denoms: vec![best.0 as u32, best.1 as u32], revenue })
}

/// Best three-price reciprocal ladder for the pair family with parameter
/// m.
pub fn best_three_price_pair(m: u32) -> Result<PairSearchResult> {
    check_m(m)?;
    let mi = m as i128;
    let (mut best, mut best_num, mut best_den) = ((1i128, 1i128, 1i128), 0i128, 1i128);
    for a1 in 1..=mi {
        for a2 in 1..=mi {
            for a2p in 1..=mi {
                let (num, den) = three_price_fraction(mi, a1, a2, a2p);
                if better(num, den, best_num, best_den) {
                    best = (a1, a2, a2p);
                    best_num = num;
                    best_den = den;
                }
            }
        }
    }
    let revenue = three_price_revenue(m, best.0 as u32, best.1 as u32, best.2 as u32);
    assert_eq!(
        revenue,
        ratio(best_num as i64, best_den as i64),
        "integer search and rational evaluation disagree"
    );
    Ok(PairSearchResult {
        price_denoms: vec![best.0 as u32, best.1 as u32, best.2 as u32],
        revenue,
    })
}

/// Rational re-evaluation of the two-offer ladder.
pub fn two_stage_revenue(m: u32, a1: u32, a2: u32) -> Rational {
    let (a1, a2, m) = (int(a1 as i64), int(a2 as i64), int(m as i64));
    let gain = (int(1) - &a1 / &a2).max(int(0));
    (int(1) + gain) / m
}

/// Rational re-evaluation of the three-price ladder.
pub fn three_price_revenue(m: u32, a1: u32, a2: u32, a2p: u32) -> Rational {
    let (a1, a2, a2p, m) =
        (int(a1 as i64), int(a2 as i64), int(a2p as i64), int(m as i64));
    let t1 = (&a1 - &a2p).max(int(0)) / &a1;
    let t2 = (&a2 - &a1).max(int(0)) / &a2;
    let t3 = (a1.clone().recip() + a2p.clone().recip()) * a1.min(a2p);
    (t1 + t2 + t3) / m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_stage_closed_form_maximum() {
        for m in [1u32, 2, 4, 8] {
            let best = best_two_stage_pair(m).unwrap();
            let mi = m as i64;
            assert_eq!(best.revenue, ratio(2 * mi - 1, mi * mi));
            assert!(best.revenue <= ratio(2, mi));
            assert_eq!(best.price_denoms, vec![1, m]);
        }
    }

    #[test]
    fn three_price_closed_form_maximum() {
        for m in [2u32, 4, 8] {
            let best = best_three_price_pair(m).unwrap();
            let mi = m as i64;
            assert_eq!(best.revenue, ratio(3 * mi - 1, mi * mi));
            assert!(best.revenue <= ratio(4, mi));
            assert_eq!(best.price_denoms, vec![1, m, 1]);
        }
    }

    #[test]
    fn searches_match_exhaustive_rational_route() {
        let m = 3u32;
        let mut best = int(0);
        for a1 in 1..=m {
            for a2 in 1..=m {
                best = best.max(two_stage_revenue(m, a1, a2));
            }
        }
        assert_eq!(best_two_stage_pair(m).unwrap().revenue, best);
        let mut best = int(0);
        for a1 in 1..=m {
            for a2 in 1..=m {
                for a2p in 1..=m {
                    best = best.max(three_price_revenue(m, a1, a2, a2p));
                }
            }
        }
        assert_eq!(best_three_price_pair(m).unwrap().revenue, best);
    }

    #[test]
    fn zero_m_is_rejected() {
        assert!(best_two_stage_pair(0).is_err());
        assert!(best_three_price_pair(0).is_err());
    }
}
