//! Enhanced sequential policies.
//!
//! Each buyer is independently queried (report only, never served) with
//! probability q; the rest face the base policy's blind offers, but only
//! when their whole dependence set was queried, so the menu they see never
//! leaks through their own chance of being served.

use num_traits::One;

use super::blind::BlindOfferPolicy;
use crate::dependence::{verify_certificate, DependenceCertificate};
use crate::rational::{int, ratio, Rational};
use crate::valuation::JointDistribution;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedPolicy {
    pub base: BlindOfferPolicy,
    /// Per-buyer probability of being queried instead of offered.
    pub q: Rational,
    /// Dependence set per buyer; an offer is made only when every member
    /// was queried.
    pub sets: Vec<Vec<usize>>,
}

/// Wraps a blind policy with query probability q and the dependence sets
/// of a verified certificate.
pub fn build_enhanced(
    base: &BlindOfferPolicy,
    q: Rational,
    cert: &DependenceCertificate,
    pi: &JointDistribution,
) -> Result<EnhancedPolicy> {
    if q < int(0) || q > Rational::one() {
        return Err(Error::InvalidArgument(format!(
            "query probability must lie in [0, 1], got {q}"
        )));
    }
    if pi.n() != base.n {
        return Err(Error::InvalidArgument(format!(
            "policy has {} buyers, distribution has {}",
            base.n,
            pi.n()
        )));
    }
    verify_certificate(pi, cert)?;
    Ok(EnhancedPolicy { base: base.clone(), q, sets: cert.sets.clone() })
}

/// Query probability maximizing the chance (1-q) * q^d that a buyer is
/// offered while the whole dependence set is queried: 0 for d = 0, 1/2 for
/// d = 1 and 1 - 1/d for d >= 2.
pub fn default_q(d: usize) -> Rational {
    match d {
        0 => int(0),
        1 => ratio(1, 2),
        _ => int(1) - ratio(1, d as i64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{build_blind_unlimited, run_mechanism, Policy, TranscriptKind};
    use crate::valuation::Instance;

    fn independent_pair() -> (Instance, DependenceCertificate) {
        let quarter = ratio(1, 4);
        let dist = JointDistribution::from_outcomes(
            2,
            vec![
                (vec![int(1), int(1)], quarter.clone()),
                (vec![int(1), int(2)], quarter.clone()),
                (vec![int(3), int(1)], quarter.clone()),
                (vec![int(3), int(2)], quarter),
            ],
        )
        .unwrap();
        let cert = DependenceCertificate { d: 0, sets: vec![vec![], vec![]] };
        (Instance::new(dist, 2).unwrap(), cert)
    }

    #[test]
    fn default_q_matches_dimension() {
        assert_eq!(default_q(0), int(0));
        assert_eq!(default_q(1), ratio(1, 2));
        assert_eq!(default_q(2), ratio(1, 2));
        assert_eq!(default_q(4), ratio(3, 4));
    }

    #[test]
    fn query_probability_is_range_checked() {
        let (inst, cert) = independent_pair();
        let base = build_blind_unlimited(&inst).unwrap();
        assert!(build_enhanced(&base, ratio(3, 2), &cert, &inst.dist).is_err());
        assert!(build_enhanced(&base, ratio(-1, 2), &cert, &inst.dist).is_err());
        assert!(build_enhanced(&base, ratio(1, 2), &cert, &inst.dist).is_ok());
    }

    #[test]
    fn bad_certificate_is_rejected() {
        let (inst, _) = independent_pair();
        let base = build_blind_unlimited(&inst).unwrap();
        let wrong = DependenceCertificate { d: 0, sets: vec![vec![]] };
        assert!(build_enhanced(&base, ratio(1, 2), &wrong, &inst.dist).is_err());
    }

    #[test]
    fn always_query_serves_nobody() {
        let (inst, cert) = independent_pair();
        let base = build_blind_unlimited(&inst).unwrap();
        let policy =
            Policy::Enhanced(build_enhanced(&base, int(1), &cert, &inst.dist).unwrap());
        let out = run_mechanism(&policy, &[int(1), int(2)], 5).unwrap();
        assert_eq!(out.x, vec![false, false]);
        assert!(out.transcript.iter().all(|e| e.kind == TranscriptKind::Query));
        assert_eq!(out.transcript[0].reported, Some(int(1)));
    }

    #[test]
    fn never_query_with_empty_sets_matches_the_base() {
        let (inst, cert) = independent_pair();
        let base = build_blind_unlimited(&inst).unwrap();
        let enhanced =
            Policy::Enhanced(build_enhanced(&base, int(0), &cert, &inst.dist).unwrap());
        let blind = Policy::Blind(base);
        for v in inst.dist.support() {
            let a = run_mechanism(&enhanced, v, 9).unwrap();
            let b = run_mechanism(&blind, v, 9).unwrap();
            assert_eq!(a.x, b.x);
            assert_eq!(a.p, b.p);
        }
    }
}
