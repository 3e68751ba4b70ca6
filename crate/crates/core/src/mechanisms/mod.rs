//! Mechanism policies and a single-trajectory simulator.
//!
//! A policy is an immutable description of how prices (and, for the
//! enhanced variant, queries) are generated: bucketed posted prices, blind
//! offers keyed by the other buyers' reports, enhanced query/offer hybrids,
//! and direct revelation tables. `run_mechanism` plays one trajectory with
//! buyers following the dominant strategy of accepting any affordable
//! price.

pub mod blind;
pub mod bucketed;
pub mod direct;
pub mod enhanced;

pub use blind::{build_blind_k, build_blind_unlimited, make_dsic, BlindOfferPolicy, Menu};
pub use bucketed::{
    build_bucketed_spp_klimited, build_bucketed_spp_unit, build_bucketed_spp_unlimited,
    PerBuyerPolicy, SinglePricePolicy, WellSeparatedPolicy,
};
pub use direct::{build_modular_full_surplus, policy_to_table, DirectMechanismTable, TableRow};
pub use enhanced::{build_enhanced, default_q, EnhancedPolicy};

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::rational::Rational;
use crate::valuation::JointDistribution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptKind {
    Offer,
    Query,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub kind: TranscriptKind,
    pub buyer: usize,
    /// Offered price (offer entries only).
    pub price: Option<Rational>,
    /// Whether the buyer accepted (offer entries only).
    pub accepted: Option<bool>,
    /// Reported valuation (query entries only).
    pub reported: Option<Rational>,
}

impl TranscriptEntry {
    fn offer(buyer: usize, price: Rational, accepted: bool) -> Self {
        TranscriptEntry {
            kind: TranscriptKind::Offer,
            buyer,
            price: Some(price),
            accepted: Some(accepted),
            reported: None,
        }
    }

    fn query(buyer: usize, reported: Rational) -> Self {
        TranscriptEntry {
            kind: TranscriptKind::Query,
            buyer,
            price: None,
            accepted: None,
            reported: Some(reported),
        }
    }

    fn skip(buyer: usize) -> Self {
        TranscriptEntry { kind: TranscriptKind::Skip, buyer, price: None, accepted: None, reported: None }
    }
}

/// Result of one run: who got service, what they paid, and how it went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub x: Vec<bool>,
    pub p: Vec<Rational>,
    pub transcript: Vec<TranscriptEntry>,
}

impl Outcome {
    fn empty(n: usize) -> Self {
        Outcome { x: vec![false; n], p: vec![Rational::zero(); n], transcript: Vec::new() }
    }

    pub fn revenue(&self) -> Rational {
        self.p.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    SinglePrice(SinglePricePolicy),
    PerBuyer(PerBuyerPolicy),
    WellSeparated(WellSeparatedPolicy),
    Blind(BlindOfferPolicy),
    Enhanced(EnhancedPolicy),
    Direct(DirectMechanismTable),
}

impl Policy {
    pub fn n(&self) -> usize {
        match self {
            Policy::SinglePrice(p) => p.n,
            Policy::PerBuyer(p) => p.price_sets.len(),
            Policy::WellSeparated(p) => p.n,
            Policy::Blind(p) => p.n,
            Policy::Enhanced(p) => p.base.n,
            Policy::Direct(t) => t.n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Policy::SinglePrice(p) => p.k,
            Policy::PerBuyer(p) => p.price_sets.len(),
            Policy::WellSeparated(p) => p.k,
            Policy::Blind(p) => p.k,
            Policy::Enhanced(p) => p.base.k,
            Policy::Direct(t) => t.k,
        }
    }
}

/// Monopoly price of a single-buyer value distribution given as (value,
/// mass) pairs: the smallest price in the support maximizing
/// p * Pr[v >= p]. Returns the price and the attained expected revenue
/// under the normalized distribution.
pub fn monopoly_price(cond: &[(Rational, Rational)]) -> Result<(Rational, Rational)> {
    if cond.is_empty() {
        return Err(Error::InvalidDistribution("empty value distribution".into()));
    }
    let mut rows: Vec<(Rational, Rational)> = Vec::with_capacity(cond.len());
    for (value, mass) in cond {
        if mass < &Rational::zero() {
            return Err(Error::InvalidDistribution("negative mass".into()));
        }
        rows.push((value.clone(), mass.clone()));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows.dedup_by(|hi, lo| {
        if hi.0 == lo.0 {
            lo.1 += std::mem::take(&mut hi.1);
            true
        } else {
            false
        }
    });
    let total: Rational = rows.iter().map(|(_, m)| m.clone()).sum();
    if total.is_zero() {
        return Err(Error::InvalidDistribution("zero total mass".into()));
    }
    let mut tail = Rational::zero();
    let mut tails = vec![Rational::zero(); rows.len()];
    for (j, (_, m)) in rows.iter().enumerate().rev() {
        tail += m;
        tails[j] = tail.clone();
    }
    let mut best_j = 0usize;
    let mut best = &rows[0].0 * &tails[0];
    for j in 1..rows.len() {
        let rev = &rows[j].0 * &tails[j];
        if rev > best {
            best = rev;
            best_j = j;
        }
    }
    Ok((rows[best_j].0.clone(), best / total))
}

/// Exact Bernoulli draw with success probability p (a rational in [0,1]).
pub(crate) fn draw_bernoulli(rng: &mut ChaCha8Rng, p: &Rational) -> bool {
    if p.is_zero() {
        return false;
    }
    if p.is_one() {
        return true;
    }
    let u = rng.gen_bigint_range(&BigInt::zero(), p.denom());
    u < *p.numer()
}

/// Exact draw of an index with the given rational weights (need not be
/// normalized; total must be positive).
pub(crate) fn draw_weighted(rng: &mut ChaCha8Rng, weights: &[Rational]) -> Result<usize> {
    let mut lcm = BigInt::one();
    for w in weights {
        if w.is_negative() {
            return Err(Error::InvalidArgument("negative weight".into()));
        }
        lcm = lcm.lcm(w.denom());
    }
    let scaled: Vec<BigInt> = weights.iter().map(|w| w.numer() * (&lcm / w.denom())).collect();
    let total: BigInt = scaled.iter().sum();
    if total <= BigInt::zero() {
        return Err(Error::InvalidArgument("weights sum to zero".into()));
    }
    let mut u = rng.gen_bigint_range(&BigInt::zero(), &total);
    for (idx, w) in scaled.iter().enumerate() {
        if &u < w {
            return Ok(idx);
        }
        u -= w;
    }
    Ok(scaled.len() - 1)
}

pub(crate) fn draw_uniform(rng: &mut ChaCha8Rng, len: usize) -> usize {
    debug_assert!(len > 0);
    let u = rng.gen_bigint_range(&BigInt::zero(), &BigInt::from(len));
    let (_, digits) = u.to_u64_digits();
    digits.first().copied().unwrap_or(0) as usize
}

/// Plays one trajectory of the policy on valuation vector v; buyers accept
/// exactly the affordable offers. Deterministic in (policy, v, seed).
pub fn run_mechanism(policy: &Policy, v: &[Rational], seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_with_rng(policy, v, &mut rng)
}

pub(crate) fn run_with_rng(
    policy: &Policy,
    v: &[Rational],
    rng: &mut ChaCha8Rng,
) -> Result<Outcome> {
    let n = policy.n();
    if v.len() != n {
        return Err(Error::InvalidArgument(format!(
            "valuation vector has length {}, policy expects {n}",
            v.len()
        )));
    }
    let k = policy.k();
    let mut out = Outcome::empty(n);
    let mut accepts = 0usize;
    let offer = |out: &mut Outcome, accepts: &mut usize, buyer: usize, price: Rational| {
        let accepted = price <= v[buyer];
        if accepted {
            out.x[buyer] = true;
            out.p[buyer] = price.clone();
            *accepts += 1;
        }
        out.transcript.push(TranscriptEntry::offer(buyer, price, accepted));
    };
    match policy {
        Policy::SinglePrice(sp) => {
            let price = sp.prices[draw_uniform(rng, sp.prices.len())].clone();
            for buyer in 0..n {
                if accepts == k {
                    break;
                }
                offer(&mut out, &mut accepts, buyer, price.clone());
            }
        }
        Policy::PerBuyer(pb) => {
            for (buyer, set) in pb.price_sets.iter().enumerate() {
                let price = set[draw_uniform(rng, set.len())].clone();
                offer(&mut out, &mut accepts, buyer, price);
            }
        }
        Policy::WellSeparated(ws) => {
            let p = &ws.base_prices[draw_uniform(rng, ws.base_prices.len())];
            let mut prices = Vec::with_capacity(n);
            for buyer in 0..n {
                let grid = ws.refinement_prices(buyer, p)?;
                prices.push(grid[draw_uniform(rng, grid.len())].clone());
            }
            for (buyer, price) in prices.into_iter().enumerate() {
                if accepts == k {
                    break;
                }
                offer(&mut out, &mut accepts, buyer, price);
            }
        }
        Policy::Blind(bp) => {
            if bp.support.binary_search_by(|row| row.as_slice().cmp(v)).is_err() {
                return Ok(out);
            }
            let info = blind::reach_profile(bp, v);
            for pos in 0..n {
                let buyer = bp.order[pos];
                if accepts == k {
                    break;
                }
                if !draw_bernoulli(rng, &info.pass[pos]) {
                    out.transcript.push(TranscriptEntry::skip(buyer));
                    continue;
                }
                let key = (buyer, JointDistribution::context_of(v, buyer));
                match bp.menus.get(&key) {
                    None => out.transcript.push(TranscriptEntry::skip(buyer)),
                    Some(menu) => {
                        let mut weights: Vec<Rational> =
                            menu.offers.iter().map(|(_, m)| m.clone()).collect();
                        weights.push(menu.skip.clone());
                        let idx = draw_weighted(rng, &weights)?;
                        if idx == menu.offers.len() {
                            out.transcript.push(TranscriptEntry::skip(buyer));
                        } else {
                            offer(&mut out, &mut accepts, buyer, menu.offers[idx].0.clone());
                        }
                    }
                }
            }
        }
        Policy::Enhanced(ep) => {
            let mut in_a = vec![false; n];
            for flag in in_a.iter_mut() {
                *flag = draw_bernoulli(rng, &ep.q);
            }
            let info = blind::reach_profile(&ep.base, v);
            for pos in 0..n {
                let buyer = ep.base.order[pos];
                if in_a[buyer] {
                    out.transcript.push(TranscriptEntry::query(buyer, v[buyer].clone()));
                    continue;
                }
                let eligible = ep.sets[buyer].iter().all(|&j| in_a[j]);
                if accepts == k && eligible {
                    out.transcript.push(TranscriptEntry::skip(buyer));
                    continue;
                }
                if !eligible || !draw_bernoulli(rng, &info.pass[pos]) {
                    out.transcript.push(TranscriptEntry::skip(buyer));
                    continue;
                }
                let key = (buyer, JointDistribution::context_of(v, buyer));
                match ep.base.menus.get(&key) {
                    None => out.transcript.push(TranscriptEntry::skip(buyer)),
                    Some(menu) => {
                        let mut weights: Vec<Rational> =
                            menu.offers.iter().map(|(_, m)| m.clone()).collect();
                        weights.push(menu.skip.clone());
                        let idx = draw_weighted(rng, &weights)?;
                        if idx == menu.offers.len() {
                            out.transcript.push(TranscriptEntry::skip(buyer));
                        } else {
                            offer(&mut out, &mut accepts, buyer, menu.offers[idx].0.clone());
                        }
                    }
                }
            }
        }
        Policy::Direct(table) => {
            let row = table.rows.get(v).ok_or_else(|| {
                Error::Coverage(format!(
                    "no table row for profile {}",
                    crate::valuation::fmt_vec(v)
                ))
            })?;
            for buyer in 0..n {
                let xi = &row.x[buyer];
                if draw_bernoulli(rng, xi) {
                    out.x[buyer] = true;
                    let price = &row.p[buyer] / xi;
                    out.transcript.push(TranscriptEntry::offer(
                        buyer,
                        price.clone(),
                        true,
                    ));
                    out.p[buyer] = price;
                } else {
                    out.transcript.push(TranscriptEntry::skip(buyer));
                }
            }
        }
    }
    Ok(out)
}
