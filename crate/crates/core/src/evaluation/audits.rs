//! Incentive audits over direct revelation tables.
//!
//! Every audit enumerates its quantifier domain exhaustively and returns
//! the violations it finds; an empty vector is a pass. Missing table rows
//! are coverage errors, not findings, so a sparse table cannot pass by
//! accident.

use std::fmt;

use itertools::Itertools;
use num_traits::Zero;

use crate::mechanisms::DirectMechanismTable;
use crate::rational::Rational;
use crate::valuation::{fmt_vec, JointDistribution};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditKind {
    DsicViolation,
    IrViolation,
    MonotonicityViolation,
    PriceBoundViolation,
}

/// One violated inequality: lhs < rhs for incentive findings, lhs > rhs
/// for bound findings; the profiles pin down where.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFinding {
    pub kind: AuditKind,
    pub buyer: usize,
    pub truthful: Vec<Rational>,
    pub deviation: Option<Vec<Rational>>,
    pub lhs: Rational,
    pub rhs: Rational,
}

impl fmt::Display for AuditFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AuditKind::DsicViolation => write!(
                f,
                "dsic: buyer {} at {} gains by reporting {}: {} < {}",
                self.buyer,
                fmt_vec(&self.truthful),
                fmt_vec(self.deviation.as_deref().unwrap_or(&[])),
                self.lhs,
                self.rhs
            ),
            AuditKind::IrViolation => write!(
                f,
                "ir: buyer {} at {} has utility {} < 0",
                self.buyer,
                fmt_vec(&self.truthful),
                self.lhs
            ),
            AuditKind::MonotonicityViolation => write!(
                f,
                "monotonicity: buyer {} allocation drops from {} to {} between {} and {}",
                self.buyer,
                self.lhs,
                self.rhs,
                fmt_vec(&self.truthful),
                fmt_vec(self.deviation.as_deref().unwrap_or(&[]))
            ),
            AuditKind::PriceBoundViolation => write!(
                f,
                "price bound: buyer {} at {} pays {} > {}",
                self.buyer,
                fmt_vec(&self.truthful),
                self.lhs,
                self.rhs
            ),
        }
    }
}

fn lookup<'t>(
    table: &'t DirectMechanismTable,
    profile: &[Rational],
) -> Result<&'t crate::mechanisms::TableRow> {
    table.rows.get(profile).ok_or_else(|| {
        Error::Coverage(format!("no table row for profile {}", fmt_vec(profile)))
    })
}

/// Contexts for buyer i: the product of all other buyers' marginal
/// supports.
fn other_contexts(pi: &JointDistribution, i: usize) -> Vec<Vec<Rational>> {
    if pi.n() == 1 {
        return vec![Vec::new()];
    }
    (0..pi.n())
        .filter(|j| *j != i)
        .map(|j| pi.buyer_values(j))
        .multi_cartesian_product()
        .collect()
}

fn with_inserted(ctx: &[Rational], i: usize, value: &Rational) -> Vec<Rational> {
    let mut profile = ctx.to_vec();
    profile.insert(i, value.clone());
    profile
}

/// Dominant-strategy incentive compatibility: for every buyer, every
/// context of other reports in the product of marginal supports, every
/// true value and every deviating report, truth-telling must pay at least
/// as well.
pub fn audit_dsic(
    table: &DirectMechanismTable,
    pi: &JointDistribution,
) -> Result<Vec<AuditFinding>> {
    let mut findings = Vec::new();
    for i in 0..pi.n() {
        let values = pi.buyer_values(i);
        for ctx in other_contexts(pi, i) {
            let menu: Vec<(Vec<Rational>, Rational, Rational)> = values
                .iter()
                .map(|r| {
                    let profile = with_inserted(&ctx, i, r);
                    let row = lookup(table, &profile)?;
                    Ok((profile, row.x[i].clone(), row.p[i].clone()))
                })
                .collect::<Result<_>>()?;
            for (truth_profile, x_t, p_t) in &menu {
                let w = &truth_profile[i];
                let truthful = x_t * w - p_t;
                for (dev_profile, x_d, p_d) in &menu {
                    let deviating = x_d * w - p_d;
                    if truthful < deviating {
                        findings.push(AuditFinding {
                            kind: AuditKind::DsicViolation,
                            buyer: i,
                            truthful: truth_profile.clone(),
                            deviation: Some(dev_profile.clone()),
                            lhs: truthful.clone(),
                            rhs: deviating,
                        });
                    }
                }
            }
        }
    }
    Ok(findings)
}

/// Ex-post individual rationality on the support: truthful utility must be
/// non-negative at every support vector.
pub fn audit_expost_ir(
    table: &DirectMechanismTable,
    pi: &JointDistribution,
) -> Result<Vec<AuditFinding>> {
    let mut findings = Vec::new();
    for v in pi.support() {
        let row = lookup(table, v)?;
        for i in 0..pi.n() {
            let utility = &row.x[i] * &v[i] - &row.p[i];
            if utility < Rational::zero() {
                findings.push(AuditFinding {
                    kind: AuditKind::IrViolation,
                    buyer: i,
                    truthful: v.clone(),
                    deviation: None,
                    lhs: utility,
                    rhs: Rational::zero(),
                });
            }
        }
    }
    Ok(findings)
}

/// Allocation monotonicity within each conditional support: fixing the
/// others' values, a higher own value may not get less service.
pub fn audit_monotone_allocation(
    table: &DirectMechanismTable,
    pi: &JointDistribution,
) -> Result<Vec<AuditFinding>> {
    let mut findings = Vec::new();
    for i in 0..pi.n() {
        for (ctx, group) in pi.contexts_of(i) {
            for pair in group.windows(2) {
                let low = with_inserted(&ctx, i, &pair[0].value);
                let high = with_inserted(&ctx, i, &pair[1].value);
                let x_low = lookup(table, &low)?.x[i].clone();
                let x_high = lookup(table, &high)?.x[i].clone();
                if x_high < x_low {
                    findings.push(AuditFinding {
                        kind: AuditKind::MonotonicityViolation,
                        buyer: i,
                        truthful: low,
                        deviation: Some(high),
                        lhs: x_low,
                        rhs: x_high,
                    });
                }
            }
        }
    }
    Ok(findings)
}

/// Payment upper bound within each conditional support: walking the values
/// upward, the payment may not exceed the allocation-weighted telescoping
/// sum, the largest total a truthful mechanism can extract.
pub fn audit_price_bound(
    table: &DirectMechanismTable,
    pi: &JointDistribution,
) -> Result<Vec<AuditFinding>> {
    let mut findings = Vec::new();
    for i in 0..pi.n() {
        for (ctx, group) in pi.contexts_of(i) {
            let mut bound = Rational::zero();
            let mut prev_x = Rational::zero();
            for row_info in &group {
                let profile = with_inserted(&ctx, i, &row_info.value);
                let row = lookup(table, &profile)?;
                bound += &row_info.value * (&row.x[i] - &prev_x);
                prev_x = row.x[i].clone();
                if row.p[i] > bound {
                    findings.push(AuditFinding {
                        kind: AuditKind::PriceBoundViolation,
                        buyer: i,
                        truthful: profile,
                        deviation: None,
                        lhs: row.p[i].clone(),
                        rhs: bound.clone(),
                    });
                }
            }
        }
    }
    Ok(findings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use crate::mechanisms::{build_modular_full_surplus, TableRow};
    use crate::rational::{int, ratio};
    use crate::generators::gen_modular;

    fn single_buyer_table(rows: &[(i64, i64, i64)]) -> (DirectMechanismTable, JointDistribution) {
        // (value, x numerator over 4, price numerator over 4)
        let mass = ratio(1, rows.len() as i64);
        let pi = JointDistribution::from_outcomes(
            1,
            rows.iter().map(|(v, _, _)| (vec![int(*v)], mass.clone())),
        )
        .unwrap();
        let mut table_rows = BTreeMap::new();
        for (v, x, p) in rows {
            table_rows.insert(
                vec![int(*v)],
                TableRow { x: vec![ratio(*x, 4)], p: vec![ratio(*p, 4)] },
            );
        }
        (DirectMechanismTable { n: 1, k: 1, rows: table_rows }, pi)
    }

    #[test]
    fn modular_table_is_truthful_and_rational() {
        let eps = ratio(1, 100);
        let table = build_modular_full_surplus(2, 2, &eps).unwrap();
        let pi = gen_modular(2, 2, &eps).unwrap().dist;
        assert!(audit_dsic(&table, &pi).unwrap().is_empty());
        assert!(audit_expost_ir(&table, &pi).unwrap().is_empty());
        assert!(audit_monotone_allocation(&table, &pi).unwrap().is_empty());
        // conditional supports are singletons here (the reports of the
        // others pin down the remaining value), so the payment bound
        // degenerates to p = v and passes as well
        assert!(audit_price_bound(&table, &pi).unwrap().is_empty());
    }

    #[test]
    fn first_price_table_fails_dsic() {
        // pay-your-bid with full allocation: high types gain by shading
        let (table, pi) = single_buyer_table(&[(1, 4, 4), (2, 4, 8)]);
        let findings = audit_dsic(&table, &pi).unwrap();
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.kind, AuditKind::DsicViolation);
        assert_eq!(f.truthful, vec![int(2)]);
        assert_eq!(f.deviation, Some(vec![int(1)]));
        assert_eq!(f.lhs, int(0));
        assert_eq!(f.rhs, int(1));
        assert!(f.to_string().contains("buyer 0"));
    }

    #[test]
    fn overcharging_fails_ir() {
        let (table, pi) = single_buyer_table(&[(1, 4, 8)]);
        let findings = audit_expost_ir(&table, &pi).unwrap();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].kind, AuditKind::IrViolation);
        assert_eq!(findings[0].lhs, int(-1));
    }

    #[test]
    fn decreasing_allocation_fails_monotonicity() {
        let (table, pi) = single_buyer_table(&[(1, 4, 0), (2, 2, 0)]);
        let findings = audit_monotone_allocation(&table, &pi).unwrap();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].kind, AuditKind::MonotonicityViolation);
        assert_eq!(findings[0].lhs, int(1));
        assert_eq!(findings[0].rhs, ratio(1, 2));
    }

    #[test]
    fn telescoping_payment_bound() {
        // x = 1 at both values: the bound stays at the lowest value
        let fails = single_buyer_table(&[(1, 4, 4), (2, 4, 8)]);
        let findings = audit_price_bound(&fails.0, &fails.1).unwrap();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].lhs, int(2));
        assert_eq!(findings[0].rhs, int(1));
        let passes = single_buyer_table(&[(1, 4, 4), (2, 4, 4)]);
        assert!(audit_price_bound(&passes.0, &passes.1).unwrap().is_empty());
    }

    #[test]
    fn missing_rows_are_coverage_errors() {
        let (mut table, pi) = single_buyer_table(&[(1, 4, 4), (2, 4, 4)]);
        table.rows.remove(&vec![int(2)]);
        match audit_dsic(&table, &pi) {
            Err(Error::Coverage(msg)) => assert!(msg.contains('2')),
            other => panic!("expected a coverage error, got {other:?}"),
        }
        assert!(matches!(audit_expost_ir(&table, &pi), Err(Error::Coverage(_))));
        assert!(matches!(
            audit_monotone_allocation(&table, &pi),
            Err(Error::Coverage(_))
        ));
        assert!(matches!(audit_price_bound(&table, &pi), Err(Error::Coverage(_))));
    }
}
