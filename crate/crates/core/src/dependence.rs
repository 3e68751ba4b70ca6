//! Dependence dimension: the smallest d such that every buyer's conditional
//! value distribution is determined by the values of some fixed set of d
//! other buyers. Certificates are re-verifiable data.

use std::collections::BTreeMap;

use crate::rational::Rational;
use crate::valuation::JointDistribution;
use crate::{Error, Result};

/// Witnessing sets, one per buyer, all of the same size `d`. Buyer i's set
/// never contains i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceCertificate {
    pub d: usize,
    pub sets: Vec<Vec<usize>>,
}

/// Normalized conditional distribution of buyer i given fixed coordinates,
/// represented as sorted (value, probability) pairs for cheap equality.
type Cond = Vec<(Rational, Rational)>;

fn normalize(rows: Vec<(Rational, Rational)>) -> Cond {
    let total: Rational = rows.iter().map(|(_, m)| m.clone()).sum();
    let mut merged: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (v, m) in rows {
        *merged.entry(v).or_insert_with(num_traits::Zero::zero) += m;
    }
    merged.into_iter().map(|(v, m)| (v, m / &total)).collect()
}

/// Conditional distributions of buyer i's value, grouped by the values at
/// `coords` (a sorted subset of the other buyers' indices).
fn conds_by_key(
    pi: &JointDistribution,
    i: usize,
    coords: &[usize],
) -> BTreeMap<Vec<Rational>, Cond> {
    let mut groups: BTreeMap<Vec<Rational>, Vec<(Rational, Rational)>> = BTreeMap::new();
    for (v, m) in pi.support().iter().zip(pi.mass()) {
        let key: Vec<Rational> = coords.iter().map(|&j| v[j].clone()).collect();
        groups.entry(key).or_default().push((v[i].clone(), m.clone()));
    }
    groups.into_iter().map(|(k, rows)| (k, normalize(rows))).collect()
}

/// Does the set `s` witness buyer i, i.e. does conditioning on the
/// coordinates in `s` determine i's conditional distribution for every
/// context in supp(pi_{-i})?
fn set_witnesses(pi: &JointDistribution, i: usize, s: &[usize]) -> bool {
    let by_context = conds_by_key(pi, i, &others(pi.n(), i));
    let by_subset = conds_by_key(pi, i, s);
    for (context, cond) in &by_context {
        // `context` lists the other buyers' values in ascending index
        // order; project out the positions of s within that order.
        let key: Vec<Rational> = s
            .iter()
            .map(|&j| {
                let pos = others(pi.n(), i).iter().position(|&o| o == j).unwrap();
                context[pos].clone()
            })
            .collect();
        if by_subset.get(&key) != Some(cond) {
            return false;
        }
    }
    true
}

fn others(n: usize, i: usize) -> Vec<usize> {
    (0..n).filter(|&j| j != i).collect()
}

/// All size-`d` subsets of `pool` in lexicographic order.
fn subsets(pool: &[usize], d: usize) -> Vec<Vec<usize>> {
    if d > pool.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        out.push(idx.iter().map(|&p| pool[p]).collect());
        if d == 0 {
            break;
        }
        // Advance the combination odometer.
        let mut p = d;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            if idx[p] != p + pool.len() - d {
                idx[p] += 1;
                for q in p + 1..d {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
    out
}

/// Finds the minimum d <= d_max (default n-1) such that every buyer has a
/// witnessing set of size exactly d, searching subsets in lexicographic
/// order. Returns None only when the minimal d exceeds d_max.
pub fn dependence_dimension(
    pi: &JointDistribution,
    d_max: Option<usize>,
) -> Result<Option<DependenceCertificate>> {
    pi.validate()?;
    let n = pi.n();
    let limit = d_max.unwrap_or(n.saturating_sub(1)).min(n.saturating_sub(1));
    for d in 0..=limit {
        let mut sets = Vec::with_capacity(n);
        let mut all = true;
        for i in 0..n {
            let pool = others(n, i);
            match subsets(&pool, d).into_iter().find(|s| set_witnesses(pi, i, s)) {
                Some(s) => sets.push(s),
                None => {
                    all = false;
                    break;
                }
            }
        }
        if all {
            return Ok(Some(DependenceCertificate { d, sets }));
        }
    }
    Ok(None)
}

/// Re-verifies a certificate from scratch: shapes, then the
/// conditional-equality condition on every context.
pub fn verify_certificate(pi: &JointDistribution, cert: &DependenceCertificate) -> Result<()> {
    let n = pi.n();
    if cert.sets.len() != n {
        return Err(Error::InvalidArgument(format!(
            "certificate has {} sets for {} buyers",
            cert.sets.len(),
            n
        )));
    }
    for (i, s) in cert.sets.iter().enumerate() {
        if s.len() != cert.d {
            return Err(Error::InvalidArgument(format!(
                "set for buyer {i} has size {}, expected {}",
                s.len(),
                cert.d
            )));
        }
        let mut sorted = s.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != s.len() || sorted.iter().any(|&j| j >= n || j == i) {
            return Err(Error::InvalidArgument(format!(
                "set for buyer {i} is not a subset of the other buyers"
            )));
        }
        if !set_witnesses(pi, i, &sorted) {
            return Err(Error::InvalidArgument(format!(
                "set {sorted:?} does not determine buyer {i}'s conditionals"
            )));
        }
    }
    Ok(())
}
