//! Direct revelation tables.
//!
//! A table lists, for every report profile in the product of the buyers'
//! marginal supports, the service probability and expected payment of each
//! buyer. Sequential policies can be converted into this form exactly,
//! which is what the incentive audits consume.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::blind::reach_profile;
use super::Policy;
use crate::generators::gen_modular;
use crate::rational::{int, ratio, Rational};
use crate::valuation::{fmt_vec, JointDistribution};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    /// Service probability per buyer, in [0, 1].
    pub x: Vec<Rational>,
    /// Expected payment per buyer (unconditional, not per unit served).
    pub p: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectMechanismTable {
    pub n: usize,
    pub k: usize,
    pub rows: BTreeMap<Vec<Rational>, TableRow>,
}

impl DirectMechanismTable {
    pub fn validate(&self) -> Result<()> {
        let k = int(self.k as i64);
        for (key, row) in &self.rows {
            if key.len() != self.n || row.x.len() != self.n || row.p.len() != self.n {
                return Err(Error::InvalidArgument(format!(
                    "table row {} has the wrong width",
                    fmt_vec(key)
                )));
            }
            let mut served = Rational::zero();
            for (xi, pi) in row.x.iter().zip(&row.p) {
                if xi < &Rational::zero() || xi > &Rational::one() {
                    return Err(Error::InvalidArgument(format!(
                        "service probability {xi} outside [0, 1] at {}",
                        fmt_vec(key)
                    )));
                }
                if xi.is_zero() && !pi.is_zero() {
                    return Err(Error::InvalidArgument(format!(
                        "payment without service at {}",
                        fmt_vec(key)
                    )));
                }
                served += xi;
            }
            if served > k {
                return Err(Error::InvalidArgument(format!(
                    "expected supply {served} exceeds {} at {}",
                    self.k,
                    fmt_vec(key)
                )));
            }
        }
        Ok(())
    }
}

/// Product of the buyers' marginal supports, in lexicographic order.
pub(crate) fn product_domain(pi: &JointDistribution) -> Vec<Vec<Rational>> {
    (0..pi.n())
        .map(|i| pi.buyer_values(i))
        .multi_cartesian_product()
        .collect()
}

/// Probability that fewer than k of the independent coins all land heads,
/// i.e. that a unit is still available after playing them in order.
fn count_tail(coins: &[Rational], k: usize) -> Rational {
    let mut dp = vec![Rational::zero(); k + 1];
    dp[0] = Rational::one();
    for coin in coins {
        for c in (0..k).rev() {
            let moved = &dp[c] * coin;
            dp[c + 1] += &moved;
            dp[c] -= &moved;
        }
    }
    dp[..k].iter().sum()
}

/// Full-surplus direct mechanism for the modular family: everyone is
/// always served and charged a price reconstructed from the other reports
/// alone. On the support the reconstruction returns the buyer's own value
/// exactly; the price never depends on the buyer's own report.
pub fn build_modular_full_surplus(n: usize, m: u32, eps: &Rational) -> Result<DirectMechanismTable> {
    let inst = gen_modular(n, m, eps)?;
    let pi = &inst.dist;
    let threshold = ratio(1, m as i64);
    let modulus = BigInt::from(m);
    let mut rows = BTreeMap::new();
    for b in product_domain(pi) {
        let mut x = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        for i in 0..n {
            x.push(Rational::one());
            p.push(reconstructed_price(&b, i, eps, &threshold, &modulus, m));
        }
        rows.insert(b, TableRow { x, p });
    }
    let table = DirectMechanismTable { n, k: inst.k, rows };
    table.validate()?;
    Ok(table)
}

/// Price charged to buyer i given the full profile; reads only b_{-i}.
///
/// If everyone else looks like a counter report (below 1/m), buyer i is
/// treated as the one holding the modular value and charged it. Otherwise
/// the first other buyer holding a reciprocal 1/a <= 1 with a <= m is
/// treated as the modular buyer, and buyer i is charged the counter value
/// that would make the profile consistent. Profiles fitting neither
/// pattern are free.
fn reconstructed_price(
    b: &[Rational],
    i: usize,
    eps: &Rational,
    threshold: &Rational,
    modulus: &BigInt,
    m: u32,
) -> Rational {
    let others: Vec<&Rational> = b
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, v)| v)
        .collect();
    if others.iter().all(|v| *v < threshold) {
        let total: Rational = others.iter().copied().sum();
        let t = total / eps;
        if t.is_integer() {
            let r = t.to_integer().mod_floor(modulus);
            return Rational::new(BigInt::one(), r + BigInt::one());
        }
        return Rational::zero();
    }
    for (j, bj) in b.iter().enumerate() {
        if j == i || !bj.numer().is_one() || bj.denom() > modulus {
            continue;
        }
        let rest: Rational = b
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != i && *l != j)
            .map(|(_, v)| v.clone())
            .sum();
        let t = rest / eps;
        if !t.is_integer() {
            continue;
        }
        let c = (bj.denom() - BigInt::one() - t.to_integer()).mod_floor(modulus);
        let c = if c.is_zero() { BigInt::from(m) } else { c };
        return Rational::from_integer(c) * eps;
    }
    Rational::zero()
}

/// Expected service probability and payment per buyer of a
/// well-separated policy at one report profile.
pub(crate) fn well_separated_row(
    ws: &super::WellSeparatedPolicy,
    b: &[Rational],
) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let n = ws.n;
    let share = ratio(1, ws.base_prices.len() as i64);
    let mut x = vec![Rational::zero(); n];
    let mut p = vec![Rational::zero(); n];
    for base in &ws.base_prices {
        let mut coins = Vec::with_capacity(n);
        let mut pays = Vec::with_capacity(n);
        for i in 0..n {
            let grid = ws.refinement_prices(i, base)?;
            let w = ratio(1, grid.len() as i64);
            let hits: Vec<&Rational> = grid.iter().filter(|g| *g <= &b[i]).collect();
            coins.push(&w * int(hits.len() as i64));
            pays.push(hits.into_iter().sum::<Rational>() * &w);
        }
        for i in 0..n {
            let reach = count_tail(&coins[..i], ws.k);
            x[i] += &share * &reach * &coins[i];
            p[i] += &share * reach * &pays[i];
        }
    }
    Ok((x, p))
}

/// Expected service probability and payment per buyer of a blind policy
/// at one report profile, under the always-participate reading (no
/// termination on off-support profiles).
pub(crate) fn blind_row(
    bp: &super::BlindOfferPolicy,
    b: &[Rational],
) -> (Vec<Rational>, Vec<Rational>) {
    let n = bp.n;
    let info = reach_profile(bp, b);
    let mut x = vec![Rational::zero(); n];
    let mut p = vec![Rational::zero(); n];
    for pos in 0..n {
        let buyer = bp.order[pos];
        let key = (buyer, JointDistribution::context_of(b, buyer));
        if let Some(menu) = bp.menus.get(&key) {
            let w = &info.reach[pos] * &info.pass[pos];
            x[buyer] = &w * menu.tail(&b[buyer]);
            p[buyer] = w * menu.expected_pay(&b[buyer]);
        }
    }
    (x, p)
}

pub(crate) fn enhanced_capacity_check(n: usize) -> Result<()> {
    if n > 12 {
        return Err(Error::Capacity(format!(
            "exact evaluation enumerates 2^{n} query partitions; use monte_carlo_revenue"
        )));
    }
    Ok(())
}

/// Expected service probability and payment per buyer of an enhanced
/// policy at one report profile, by enumerating all query partitions.
pub(crate) fn enhanced_row(
    ep: &super::EnhancedPolicy,
    b: &[Rational],
) -> (Vec<Rational>, Vec<Rational>) {
    let n = ep.base.n;
    let qc = Rational::one() - &ep.q;
    let info = reach_profile(&ep.base, b);
    let mut pays = Vec::with_capacity(n);
    for pos in 0..n {
        let buyer = ep.base.order[pos];
        let key = (buyer, JointDistribution::context_of(b, buyer));
        pays.push(
            ep.base
                .menus
                .get(&key)
                .map(|menu| menu.expected_pay(&b[buyer]))
                .unwrap_or_else(Rational::zero),
        );
    }
    let mut x = vec![Rational::zero(); n];
    let mut p = vec![Rational::zero(); n];
    for mask in 0u32..(1u32 << n) {
        let mut prob = Rational::one();
        for bit in 0..n {
            prob *= if mask & (1 << bit) != 0 { &ep.q } else { &qc };
        }
        if prob.is_zero() {
            continue;
        }
        let mut dp = vec![Rational::zero(); ep.base.k + 1];
        dp[0] = Rational::one();
        for pos in 0..n {
            let buyer = ep.base.order[pos];
            let queried = mask & (1 << buyer) != 0;
            let eligible = !queried && ep.sets[buyer].iter().all(|&j| mask & (1 << j) != 0);
            if !eligible {
                continue;
            }
            let reach: Rational = dp[..ep.base.k].iter().sum();
            let w = &prob * &reach * &info.pass[pos];
            x[buyer] += &w * &info.accept[pos];
            p[buyer] += &w * &pays[pos];
            let coin = &info.pass[pos] * &info.accept[pos];
            if !coin.is_zero() {
                for c in (0..ep.base.k).rev() {
                    let moved = &dp[c] * &coin;
                    dp[c + 1] += &moved;
                    dp[c] -= &moved;
                }
            }
        }
    }
    (x, p)
}

/// Converts a policy into its exact direct revelation table over the
/// product of marginal supports. Enhanced policies enumerate all query
/// partitions and are capped at twelve buyers.
pub fn policy_to_table(policy: &Policy, pi: &JointDistribution) -> Result<DirectMechanismTable> {
    let n = policy.n();
    if pi.n() != n {
        return Err(Error::InvalidArgument(format!(
            "policy has {n} buyers, distribution has {}",
            pi.n()
        )));
    }
    if let Policy::Direct(t) = policy {
        t.validate()?;
        return Ok(t.clone());
    }
    if let Policy::Enhanced(_) = policy {
        enhanced_capacity_check(n)?;
    }
    let mut rows = BTreeMap::new();
    for b in product_domain(pi) {
        let (x, p) = policy_row(policy, &b)?;
        rows.insert(b, TableRow { x, p });
    }
    let table = DirectMechanismTable { n, k: policy.k(), rows };
    table.validate()?;
    Ok(table)
}

/// Expected service probability and payment per buyer of any policy at one
/// report profile.
pub(crate) fn policy_row(
    policy: &Policy,
    b: &[Rational],
) -> Result<(Vec<Rational>, Vec<Rational>)> {
    match policy {
        Policy::SinglePrice(sp) => {
            let n = sp.n;
            let share = ratio(1, sp.prices.len() as i64);
            let mut x = vec![Rational::zero(); n];
            let mut p = vec![Rational::zero(); n];
            for price in &sp.prices {
                let mut accepts = 0usize;
                for i in 0..n {
                    if accepts == sp.k {
                        break;
                    }
                    if price <= &b[i] {
                        x[i] += &share;
                        p[i] += price * &share;
                        accepts += 1;
                    }
                }
            }
            Ok((x, p))
        }
        Policy::PerBuyer(pb) => {
            let n = pb.price_sets.len();
            let mut x = vec![Rational::zero(); n];
            let mut p = vec![Rational::zero(); n];
            for (i, set) in pb.price_sets.iter().enumerate() {
                let share = ratio(1, set.len() as i64);
                for price in set.iter().filter(|g| *g <= &b[i]) {
                    x[i] += &share;
                    p[i] += price * &share;
                }
            }
            Ok((x, p))
        }
        Policy::WellSeparated(ws) => well_separated_row(ws, b),
        Policy::Blind(bp) => Ok(blind_row(bp, b)),
        Policy::Enhanced(ep) => {
            enhanced_capacity_check(ep.base.n)?;
            Ok(enhanced_row(ep, b))
        }
        Policy::Direct(t) => t
            .rows
            .get(b)
            .map(|row| (row.x.clone(), row.p.clone()))
            .ok_or_else(|| Error::Coverage(format!("no table row for profile {}", fmt_vec(b)))),
    }
}
