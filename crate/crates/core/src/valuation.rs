//! Discrete joint valuation distributions with exact rational masses.
//!
//! A distribution is a finite support of n-coordinate value vectors plus a
//! parallel mass vector. Supports are kept in lexicographic order with
//! duplicates merged, so two distributions are equal iff their
//! representations are equal. All derived objects (marginals, conditionals)
//! are computed exactly.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::rational::{format_rational, Rational};
use crate::{Error, Result};

/// Joint distribution over valuation vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    n: usize,
    support: Vec<Vec<Rational>>,
    mass: Vec<Rational>,
}

/// A market instance: a joint valuation distribution plus a supply of k
/// identical units, 1 <= k <= n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub dist: JointDistribution,
    pub k: usize,
}

/// One buyer's value together with the joint mass of the underlying vector;
/// used when grouping a distribution by conditioning context.
#[derive(Debug, Clone)]
pub struct ContextRow {
    /// Index of the vector in the support.
    pub index: usize,
    /// The buyer's own coordinate.
    pub value: Rational,
    /// Joint mass of the full vector.
    pub mass: Rational,
}

impl JointDistribution {
    /// Builds a distribution from (vector, mass) outcomes, merging duplicate
    /// vectors and sorting the support lexicographically. Masses must be
    /// positive and sum to exactly 1.
    pub fn from_outcomes<I>(n: usize, outcomes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<Rational>, Rational)>,
    {
        let mut acc: BTreeMap<Vec<Rational>, Rational> = BTreeMap::new();
        for (v, m) in outcomes {
            if v.len() != n {
                return Err(Error::InvalidDistribution(format!(
                    "support vector of length {} in a {n}-buyer distribution",
                    v.len()
                )));
            }
            *acc.entry(v).or_insert_with(Rational::zero) += m;
        }
        let (support, mass): (Vec<_>, Vec<_>) = acc.into_iter().unzip();
        let dist = JointDistribution { n, support, mass };
        dist.validate()?;
        Ok(dist)
    }

    /// Builds from parallel support/mass vectors (merging and sorting).
    pub fn new(n: usize, support: Vec<Vec<Rational>>, mass: Vec<Rational>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} support vectors but {} masses",
                support.len(),
                mass.len()
            )));
        }
        Self::from_outcomes(n, support.into_iter().zip(mass))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[Vec<Rational>] {
        &self.support
    }

    pub fn mass(&self) -> &[Rational] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Mass of a specific vector, zero when off-support.
    pub fn mass_of(&self, v: &[Rational]) -> Rational {
        match self.index_of(v) {
            Some(i) => self.mass[i].clone(),
            None => Rational::zero(),
        }
    }

    /// Support index of a vector, if present.
    pub fn index_of(&self, v: &[Rational]) -> Option<usize> {
        self.support
            .binary_search_by(|row| row.as_slice().cmp(v))
            .ok()
    }

    /// Checks every structural invariant and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDistribution("zero buyers".into()));
        }
        if self.support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut total = Rational::zero();
        for (v, m) in self.support.iter().zip(&self.mass) {
            if v.len() != self.n {
                return Err(Error::InvalidDistribution(format!(
                    "vector of length {} in a {}-buyer distribution",
                    v.len(),
                    self.n
                )));
            }
            if v.iter().any(|x| x < &Rational::zero()) {
                return Err(Error::InvalidDistribution(format!(
                    "negative valuation in {}",
                    fmt_vec(v)
                )));
            }
            if m <= &Rational::zero() {
                return Err(Error::InvalidDistribution(format!(
                    "non-positive mass {} on {}",
                    format_rational(m),
                    fmt_vec(v)
                )));
            }
            total += m;
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {}, not 1",
                format_rational(&total)
            )));
        }
        for w in self.support.windows(2) {
            match w[0].cmp(&w[1]) {
                std::cmp::Ordering::Less => {}
                std::cmp::Ordering::Equal => {
                    return Err(Error::InvalidDistribution(format!(
                        "duplicate support vector {}",
                        fmt_vec(&w[0])
                    )))
                }
                std::cmp::Ordering::Greater => {
                    return Err(Error::InvalidDistribution(
                        "support not in lexicographic order".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// The vector with coordinate `i` removed: buyer i's conditioning
    /// context. Empty when n = 1.
    pub fn context_of(v: &[Rational], i: usize) -> Vec<Rational> {
        v.iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, x)| x.clone())
            .collect()
    }

    /// Groups the support by buyer i's context v_{-i}. Each group's rows are
    /// sorted by the buyer's own value; the group's total mass is the
    /// marginal mass of the context.
    pub fn contexts_of(&self, i: usize) -> BTreeMap<Vec<Rational>, Vec<ContextRow>> {
        let mut map: BTreeMap<Vec<Rational>, Vec<ContextRow>> = BTreeMap::new();
        for (idx, v) in self.support.iter().enumerate() {
            map.entry(Self::context_of(v, i))
                .or_default()
                .push(ContextRow {
                    index: idx,
                    value: v[i].clone(),
                    mass: self.mass[idx].clone(),
                });
        }
        for rows in map.values_mut() {
            rows.sort_by(|a, b| a.value.cmp(&b.value));
        }
        map
    }

    /// Distinct values of coordinate i across the support (the marginal
    /// support of buyer i), ascending.
    pub fn buyer_values(&self, i: usize) -> Vec<Rational> {
        let mut vals: Vec<Rational> = self.support.iter().map(|v| v[i].clone()).collect();
        vals.sort();
        vals.dedup();
        vals
    }

    /// Scales every valuation by c > 0 (masses unchanged).
    pub fn scale(&self, c: &Rational) -> Result<Self> {
        if c <= &Rational::zero() {
            return Err(Error::InvalidArgument("scale factor must be positive".into()));
        }
        JointDistribution::from_outcomes(
            self.n,
            self.support
                .iter()
                .zip(&self.mass)
                .map(|(v, m)| (v.iter().map(|x| x * c).collect(), m.clone())),
        )
    }
}

impl Instance {
    pub fn new(dist: JointDistribution, k: usize) -> Result<Self> {
        if k < 1 || k > dist.n() {
            return Err(Error::InvalidArgument(format!(
                "supply k = {k} outside 1..={}",
                dist.n()
            )));
        }
        Ok(Instance { dist, k })
    }

    /// Same distribution with a different supply.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Instance::new(self.dist.clone(), k)
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    /// Re-validates the distribution and the supply bound.
    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if self.k < 1 || self.k > self.dist.n() {
            return Err(Error::InvalidArgument(format!(
                "supply k = {} outside 1..={}",
                self.k,
                self.dist.n()
            )));
        }
        Ok(())
    }
}

pub(crate) fn fmt_vec(v: &[Rational]) -> String {
    let inner: Vec<String> = v.iter().map(format_rational).collect();
    format!("({})", inner.join(", "))
}

/// Marginal distribution of the coordinates in `coords` (nonempty, strictly
/// increasing, in range). The result's dimension is `coords.len()`.
pub fn marginal(pi: &JointDistribution, coords: &[usize]) -> Result<JointDistribution> {
    if coords.is_empty() {
        return Err(Error::InvalidArgument(
            "marginal needs a nonempty coordinate set".into(),
        ));
    }
    if coords.windows(2).any(|w| w[0] >= w[1]) || *coords.last().unwrap() >= pi.n() {
        return Err(Error::InvalidArgument(format!(
            "coordinate set {:?} not strictly increasing within 0..{}",
            coords,
            pi.n()
        )));
    }
    JointDistribution::from_outcomes(
        coords.len(),
        pi.support.iter().zip(&pi.mass).map(|(v, m)| {
            (
                coords.iter().map(|&c| v[c].clone()).collect::<Vec<_>>(),
                m.clone(),
            )
        }),
    )
}

/// Conditional distribution of buyer i's value given a partial assignment
/// on other coordinates. `fixed` may be empty (no conditioning). Errors if
/// the event has zero mass or fixes coordinate i itself.
pub fn conditional(
    pi: &JointDistribution,
    i: usize,
    fixed: &[(usize, Rational)],
) -> Result<JointDistribution> {
    if i >= pi.n() {
        return Err(Error::InvalidArgument(format!("buyer {i} out of range")));
    }
    for (c, _) in fixed {
        if *c == i {
            return Err(Error::InvalidArgument(format!(
                "conditioning set fixes buyer {i}'s own coordinate"
            )));
        }
        if *c >= pi.n() {
            return Err(Error::InvalidArgument(format!("coordinate {c} out of range")));
        }
    }
    let mut total = Rational::zero();
    let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for (v, m) in pi.support.iter().zip(&pi.mass) {
        if fixed.iter().all(|(c, x)| &v[*c] == x) {
            total += m;
            rows.push((vec![v[i].clone()], m.clone()));
        }
    }
    if total.is_zero() {
        let desc: Vec<String> = fixed
            .iter()
            .map(|(c, x)| format!("v{}={}", c + 1, format_rational(x)))
            .collect();
        return Err(Error::EmptyEvent(format!(
            "conditioning event {{{}}} has zero mass",
            desc.join(", ")
        )));
    }
    JointDistribution::from_outcomes(1, rows.into_iter().map(|(v, m)| (v, m / &total)))
}

/// Ratio statistics of a support: None encodes an infinite ratio (minimum
/// is zero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioStats {
    pub v_max: Rational,
    pub v_min: Rational,
    /// v_max / v_min, or None when v_min = 0.
    pub r: Option<Rational>,
}

fn ratio_stats(v_max: Rational, v_min: Rational) -> RatioStats {
    let r = if v_min.is_zero() {
        None
    } else {
        Some(&v_max / &v_min)
    };
    RatioStats { v_max, v_min, r }
}

/// Support statistics used by the bucketed price-set constructions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportStats {
    /// Global: v_max = largest coordinate anywhere; v_min = smallest
    /// coordinate-wise maximum over support vectors.
    pub global: RatioStats,
    /// Per buyer i: max and min of coordinate i over the support.
    pub per_buyer: Vec<RatioStats>,
    /// Range of the kth-largest coordinate over the support, when requested.
    pub kth_order: Option<RatioStats>,
}

/// Computes global, per-buyer and (optionally) kth-order-statistic ranges.
pub fn support_stats(pi: &JointDistribution, kth: Option<usize>) -> Result<SupportStats> {
    let zero = Rational::zero();
    let mut v_max = zero.clone();
    let mut v_min_of_max: Option<Rational> = None;
    for v in pi.support() {
        let row_max = v.iter().max().expect("nonempty vector").clone();
        if row_max > v_max {
            v_max = row_max.clone();
        }
        if v_min_of_max.as_ref().map_or(true, |m| &row_max < m) {
            v_min_of_max = Some(row_max);
        }
    }
    let global = ratio_stats(v_max, v_min_of_max.expect("nonempty support"));

    let per_buyer = (0..pi.n())
        .map(|i| {
            let vals = pi.buyer_values(i);
            ratio_stats(
                vals.last().unwrap().clone(),
                vals.first().unwrap().clone(),
            )
        })
        .collect();

    let kth_order = match kth {
        None => None,
        Some(k) => {
            if k < 1 || k > pi.n() {
                return Err(Error::InvalidArgument(format!(
                    "order statistic k = {k} outside 1..={}",
                    pi.n()
                )));
            }
            let mut hi: Option<Rational> = None;
            let mut lo: Option<Rational> = None;
            for v in pi.support() {
                let mut sorted = v.clone();
                sorted.sort();
                sorted.reverse();
                let stat = sorted[k - 1].clone();
                if hi.as_ref().map_or(true, |h| &stat > h) {
                    hi = Some(stat.clone());
                }
                if lo.as_ref().map_or(true, |l| &stat < l) {
                    lo = Some(stat);
                }
            }
            Some(ratio_stats(hi.unwrap(), lo.unwrap()))
        }
    };

    Ok(SupportStats {
        global,
        per_buyer,
        kth_order,
    })
}
