//! Blind offer policies.
//!
//! Each buyer faces a randomized price menu that depends only on the other
//! buyers' reports, never their own. With limited supply the serving order
//! makes late buyers' chances depend on earlier reports; `make_dsic` fixes
//! that by damping every buyer's reach down to a context-dependent target
//! that is constant in the buyer's own report.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::monopoly_price;
use crate::lp;
use crate::rational::Rational;
use crate::valuation::{Instance, JointDistribution};
use crate::{Error, Result};

/// Randomized price menu: offer price p with the paired probability, or
/// make no offer with the leftover probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Menu {
    /// (price, probability) pairs, strictly ascending by price, all
    /// probabilities positive.
    pub offers: Vec<(Rational, Rational)>,
    /// Probability of making no offer; the masses sum to one.
    pub skip: Rational,
}

impl Menu {
    pub fn new(mut offers: Vec<(Rational, Rational)>) -> Result<Menu> {
        offers.retain(|(_, m)| !m.is_zero());
        offers.sort_by(|a, b| a.0.cmp(&b.0));
        let mut total = Rational::zero();
        for w in offers.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate menu price {}",
                    w[0].0
                )));
            }
        }
        for (_, m) in &offers {
            if m < &Rational::zero() {
                return Err(Error::InvalidArgument("negative menu probability".into()));
            }
            total += m;
        }
        if total > Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "menu probabilities sum to {total} > 1"
            )));
        }
        let skip = Rational::one() - total;
        Ok(Menu { offers, skip })
    }

    /// Probability of producing an offer at price <= bid.
    pub fn tail(&self, bid: &Rational) -> Rational {
        self.offers
            .iter()
            .take_while(|(p, _)| p <= bid)
            .map(|(_, m)| m.clone())
            .sum()
    }

    /// Expected payment collected from a buyer who accepts any price <= bid.
    pub fn expected_pay(&self, bid: &Rational) -> Rational {
        self.offers
            .iter()
            .take_while(|(p, _)| p <= bid)
            .map(|(p, m)| p * m)
            .sum()
    }
}

/// Blind offer policy over a fixed serving order. Menus are keyed by
/// (buyer, other buyers' reports); a missing key means no offer. When
/// `reach_target` is set, an extra pass coin caps each buyer's chance of
/// being considered at the stored target divided by the current reach.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindOfferPolicy {
    pub n: usize,
    pub k: usize,
    pub order: Vec<usize>,
    pub menus: BTreeMap<(usize, Vec<Rational>), Menu>,
    pub reach_target: Option<BTreeMap<(usize, Vec<Rational>), Rational>>,
    /// Sorted support of the target distribution; reports outside it end
    /// the mechanism with nobody served.
    pub support: Vec<Vec<Rational>>,
}

/// Per-position quantities of a blind policy at one report profile, in
/// serving order: probability the supply survives to the position, the
/// pass-coin probability, and the probability of an affordable offer from
/// the menu. The product of the three is the buyer's service probability.
pub(crate) struct ReachInfo {
    pub reach: Vec<Rational>,
    pub pass: Vec<Rational>,
    pub accept: Vec<Rational>,
}

/// Left-to-right supply DP over the first `upto` positions. Entry c of the
/// state is the probability of exactly c acceptances so far (c = k
/// absorbing). Returns the per-position info and the final reach.
fn damped_reach(
    n: usize,
    k: usize,
    order: &[usize],
    menus: &BTreeMap<(usize, Vec<Rational>), Menu>,
    targets: Option<&BTreeMap<(usize, Vec<Rational>), Rational>>,
    v: &[Rational],
    upto: usize,
) -> (ReachInfo, Rational) {
    debug_assert!(upto <= n && v.len() == n);
    let mut dp = vec![Rational::zero(); k + 1];
    dp[0] = Rational::one();
    let mut info = ReachInfo {
        reach: Vec::with_capacity(upto),
        pass: Vec::with_capacity(upto),
        accept: Vec::with_capacity(upto),
    };
    for pos in 0..upto {
        let buyer = order[pos];
        let key = (buyer, JointDistribution::context_of(v, buyer));
        let accept = menus.get(&key).map(|m| m.tail(&v[buyer])).unwrap_or_else(Rational::zero);
        let reach: Rational = dp[..k].iter().sum();
        let pass = match targets {
            None => Rational::one(),
            Some(map) => {
                if reach.is_zero() {
                    Rational::zero()
                } else {
                    match map.get(&key) {
                        Some(t) => t / &reach,
                        None => Rational::zero(),
                    }
                }
            }
        };
        let coin = &pass * &accept;
        if !coin.is_zero() {
            for c in (0..k).rev() {
                let moved = &dp[c] * &coin;
                dp[c + 1] += &moved;
                dp[c] -= &moved;
            }
        }
        info.reach.push(reach);
        info.pass.push(pass);
        info.accept.push(accept);
    }
    let tail: Rational = dp[..k].iter().sum();
    (info, tail)
}

pub(crate) fn reach_profile(bp: &BlindOfferPolicy, v: &[Rational]) -> ReachInfo {
    let (info, _) = damped_reach(
        bp.n,
        bp.k,
        &bp.order,
        &bp.menus,
        bp.reach_target.as_ref(),
        v,
        bp.n,
    );
    info
}

/// Unlimited-supply blind policy: every buyer gets the monopoly price of
/// their conditional value distribution with probability one.
pub fn build_blind_unlimited(instance: &Instance) -> Result<BlindOfferPolicy> {
    let n = instance.n();
    if instance.k != n {
        return Err(Error::InvalidArgument(format!(
            "unlimited-supply policy needs k = n, got k = {} with n = {n}",
            instance.k
        )));
    }
    let pi = &instance.dist;
    let mut menus = BTreeMap::new();
    for i in 0..n {
        for (ctx, rows) in pi.contexts_of(i) {
            let cond: Vec<(Rational, Rational)> =
                rows.iter().map(|r| (r.value.clone(), r.mass.clone())).collect();
            let (price, _) = monopoly_price(&cond)?;
            menus.insert((i, ctx), Menu::new(vec![(price, Rational::one())])?);
        }
    }
    Ok(BlindOfferPolicy {
        n,
        k: n,
        order: (0..n).collect(),
        menus,
        reach_target: None,
        support: pi.support().to_vec(),
    })
}

/// Blind policy for limited supply from a feasible allocation rule y:
/// buyer i's menu at context w offers each supported price p with
/// probability y_i(p, w) / 2.
pub fn build_blind_k(instance: &Instance, y: &[Vec<Rational>]) -> Result<BlindOfferPolicy> {
    lp::check_feasible(instance, y)?;
    let pi = &instance.dist;
    let n = instance.n();
    let half = crate::rational::ratio(1, 2);
    let mut menus = BTreeMap::new();
    for (i, yi) in y.iter().enumerate() {
        for (ctx, rows) in pi.contexts_of(i) {
            let offers: Vec<(Rational, Rational)> = rows
                .iter()
                .filter(|r| !yi[r.index].is_zero())
                .map(|r| (r.value.clone(), &yi[r.index] * &half))
                .collect();
            if offers.is_empty() {
                continue;
            }
            menus.insert((i, ctx), Menu::new(offers)?);
        }
    }
    Ok(BlindOfferPolicy {
        n,
        k: instance.k,
        order: (0..n).collect(),
        menus,
        reach_target: None,
        support: pi.support().to_vec(),
    })
}

/// Damps a blind policy so that each buyer's chance of being considered is
/// constant in their own report: the pass coin divides out the supply DP's
/// dependence on the buyer's report, pinning the reach at the worst case
/// over the buyer's marginal values. With k = n the policy is returned
/// unchanged. The damped policy loses at most half the revenue of the
/// original.
pub fn make_dsic(policy: &BlindOfferPolicy, pi: &JointDistribution) -> Result<BlindOfferPolicy> {
    if pi.n() != policy.n {
        return Err(Error::InvalidArgument(format!(
            "policy has {} buyers, distribution has {}",
            policy.n,
            pi.n()
        )));
    }
    if policy.k == policy.n {
        return Ok(policy.clone());
    }
    let mut targets: BTreeMap<(usize, Vec<Rational>), Rational> = BTreeMap::new();
    for pos in 0..policy.n {
        let i = policy.order[pos];
        let contexts: Vec<Vec<Rational>> = policy
            .menus
            .keys()
            .filter(|(j, _)| *j == i)
            .map(|(_, ctx)| ctx.clone())
            .collect();
        let values = pi.buyer_values(i);
        for ctx in contexts {
            let mut worst: Option<Rational> = None;
            for b_i in &values {
                let mut b = ctx.clone();
                b.insert(i, b_i.clone());
                let (_, reach) = damped_reach(
                    policy.n,
                    policy.k,
                    &policy.order,
                    &policy.menus,
                    Some(&targets),
                    &b,
                    pos,
                );
                if worst.as_ref().map_or(true, |w| &reach < w) {
                    worst = Some(reach);
                }
            }
            targets.insert((i, ctx), worst.unwrap_or_else(Rational::zero));
        }
    }
    let mut damped = policy.clone();
    damped.reach_target = Some(targets);
    Ok(damped)
}
