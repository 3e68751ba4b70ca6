//! Bucketed posted price policies.
//!
//! Prices live on a geometric grid spanning the relevant value range, so a
//! uniformly random grid point undershoots the right threshold by at most
//! the grid ratio, losing only a logarithmic factor of the social welfare.

use num_traits::{One, Zero};

use super::Policy;
use crate::rational::{ceil_log2, floor_log, int, pow_int, Rational};
use crate::valuation::{fmt_vec, support_stats, JointDistribution};
use crate::{Error, Result};

/// One uniformly random price from `prices` offered to every buyer until k
/// units are sold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinglePricePolicy {
    pub n: usize,
    pub k: usize,
    pub prices: Vec<Rational>,
}

/// Independent uniformly random price per buyer, no supply limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerBuyerPolicy {
    pub price_sets: Vec<Vec<Rational>>,
}

/// Two-level grid for k units over well-separated values: a base price p
/// drawn from a coarse grid, then per-buyer refinements of p on the same
/// ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WellSeparatedPolicy {
    pub n: usize,
    pub k: usize,
    /// Grid ratio, strictly above one.
    pub eps: Rational,
    pub base_prices: Vec<Rational>,
    pub buyer_min: Vec<Rational>,
    pub buyer_max: Vec<Rational>,
}

/// Geometric grid v_min * base^j covering [v_min, v_min * r]; always
/// contains v_min itself.
fn grid_prices(v_min: &Rational, r: &Rational, base: &Rational) -> Result<Vec<Rational>> {
    let levels = if base == &int(2) {
        ceil_log2(r)? as i64
    } else {
        ceil_log(base, r)?
    };
    let levels = levels.max(1);
    Ok((0..levels).map(|j| v_min * pow_int(base, j)).collect())
}

/// Smallest j >= 0 with base^j >= x, for base > 1 and x >= 1.
fn ceil_log(base: &Rational, x: &Rational) -> Result<i64> {
    if x < &Rational::one() {
        return Err(Error::InvalidArgument("ceil_log needs x >= 1".into()));
    }
    let t = floor_log(base, x)?;
    if pow_int(base, t) == *x {
        Ok(t)
    } else {
        Ok(t + 1)
    }
}

/// Set of values taken by the highest coordinate across the support.
fn max_value_support(pi: &JointDistribution) -> Vec<Rational> {
    let mut vals: Vec<Rational> = pi
        .support()
        .iter()
        .filter_map(|v| v.iter().max().cloned())
        .collect();
    vals.sort();
    vals.dedup();
    vals
}

/// Single-unit bucketed policy: one random price from a doubling grid over
/// the range of the highest value. An optional window (lo, hi) restricts
/// the grid to [lo, hi]; both ends must be values the highest coordinate
/// actually takes. Without a window the lowest possible highest value must
/// be positive.
pub fn build_bucketed_spp_unit(
    pi: &JointDistribution,
    window: Option<(Rational, Rational)>,
) -> Result<SinglePricePolicy> {
    let (v_min, r) = match window {
        Some((lo, hi)) => {
            if lo <= Rational::zero() || lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "window needs 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
            let vals = max_value_support(pi);
            for end in [&lo, &hi] {
                if vals.binary_search(end).is_err() {
                    return Err(Error::InvalidArgument(format!(
                        "window end {end} is not a possible highest value"
                    )));
                }
            }
            let r = &hi / &lo;
            (lo, r)
        }
        None => {
            let stats = support_stats(pi, None)?;
            let g = stats.global;
            if g.v_min.is_zero() {
                return Err(Error::UnsupportedInstance(
                    "the highest value can be zero; pass a positive window".into(),
                ));
            }
            let r = g.r.ok_or_else(|| Error::Internal("missing value ratio".into()))?;
            (g.v_min, r)
        }
    };
    Ok(SinglePricePolicy {
        n: pi.n(),
        k: 1,
        prices: grid_prices(&v_min, &r, &int(2))?,
    })
}

/// Unlimited-supply bucketed policy: an independent doubling grid per
/// buyer over that buyer's own value range.
pub fn build_bucketed_spp_unlimited(pi: &JointDistribution) -> Result<PerBuyerPolicy> {
    let stats = support_stats(pi, None)?;
    let mut price_sets = Vec::with_capacity(pi.n());
    for (i, st) in stats.per_buyer.iter().enumerate() {
        if st.v_min.is_zero() {
            return Err(Error::UnsupportedInstance(format!(
                "buyer {i} can have value zero"
            )));
        }
        let r = st.r.clone().ok_or_else(|| Error::Internal("missing value ratio".into()))?;
        price_sets.push(grid_prices(&st.v_min, &r, &int(2))?);
    }
    Ok(PerBuyerPolicy { price_sets })
}

/// k-unit bucketed policy over the range of the kth-highest value. The
/// plain variant posts one doubling-grid price to everyone; the
/// well-separated variant refines the price per buyer on a grid whose
/// ratio is the smallest gap between distinct values, and requires the
/// kth-highest value of every vector to be achieved by a unique buyer.
pub fn build_bucketed_spp_klimited(
    pi: &JointDistribution,
    k: usize,
    well_separated: bool,
) -> Result<Policy> {
    let stats = support_stats(pi, Some(k))?;
    let kst = stats
        .kth_order
        .ok_or_else(|| Error::Internal("missing order statistics".into()))?;
    if kst.v_min.is_zero() {
        return Err(Error::UnsupportedInstance(
            "the kth-highest value can be zero".into(),
        ));
    }
    let r = kst.r.clone().ok_or_else(|| Error::Internal("missing value ratio".into()))?;
    if !well_separated {
        return Ok(Policy::SinglePrice(SinglePricePolicy {
            n: pi.n(),
            k,
            prices: grid_prices(&kst.v_min, &r, &int(2))?,
        }));
    }
    for v in pi.support() {
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| b.cmp(a));
        let kth = &sorted[k - 1];
        if v.iter().filter(|x| *x == kth).count() != 1 {
            return Err(Error::UnsupportedInstance(format!(
                "kth-highest value is tied in {}",
                fmt_vec(v)
            )));
        }
    }
    let mut buyer_min = Vec::with_capacity(pi.n());
    let mut buyer_max = Vec::with_capacity(pi.n());
    for (i, st) in stats.per_buyer.iter().enumerate() {
        if st.v_min.is_zero() {
            return Err(Error::UnsupportedInstance(format!(
                "buyer {i} can have value zero"
            )));
        }
        buyer_min.push(st.v_min.clone());
        buyer_max.push(st.v_max.clone());
    }
    let eps = separation_ratio(pi).unwrap_or_else(|| int(2));
    let base_prices = grid_prices(&kst.v_min, &r, &eps)?;
    Ok(Policy::WellSeparated(WellSeparatedPolicy {
        n: pi.n(),
        k,
        eps,
        base_prices,
        buyer_min,
        buyer_max,
    }))
}

/// Smallest ratio above one between distinct positive support values, or
/// None if there are fewer than two such values.
fn separation_ratio(pi: &JointDistribution) -> Option<Rational> {
    let mut vals: Vec<Rational> = pi
        .support()
        .iter()
        .flat_map(|v| v.iter())
        .filter(|x| !x.is_zero())
        .cloned()
        .collect();
    vals.sort();
    vals.dedup();
    vals.windows(2).map(|w| &w[1] / &w[0]).min()
}

impl WellSeparatedPolicy {
    /// Refinement grid for buyer i given base price p: powers of eps
    /// starting at the largest one at most p (relative to the buyer's
    /// minimum) and reaching up to the buyer's maximum.
    pub fn refinement_prices(&self, i: usize, p: &Rational) -> Result<Vec<Rational>> {
        let lo = floor_log(&self.eps, &(p / &self.buyer_min[i]))?;
        let span = &self.buyer_max[i] / &self.buyer_min[i];
        let t = floor_log(&self.eps, &span)?;
        let cap = if pow_int(&self.eps, t) == span { t - 1 } else { t };
        let hi = lo.max(cap);
        Ok((lo..=hi)
            .map(|l| &self.buyer_min[i] * pow_int(&self.eps, l))
            .collect())
    }
}
