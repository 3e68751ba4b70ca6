//! Named instance families plus a seeded random generator.
//!
//! Every generator is a deterministic function of its arguments (the random
//! family is a deterministic function of its seed), so fixtures referenced
//! in tests and configs are reproducible byte for byte.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rational::{int, ratio, Rational};
use crate::valuation::{Instance, JointDistribution};
use crate::{Error, Result};

/// H_m = 1 + 1/2 + ... + 1/m.
pub fn harmonic_number(m: u32) -> Rational {
    let mut h = Rational::zero();
    for a in 1..=m {
        h += ratio(1, a as i64);
    }
    h
}

/// Single buyer whose value is uniform over {1/a : a in [m]}; unit supply.
/// Every posted price in the support earns exactly 1/m in expectation.
pub fn gen_harmonic(m: u32) -> Result<Instance> {
    if m == 0 {
        return Err(Error::InvalidArgument("harmonic family needs m >= 1".into()));
    }
    let mass = ratio(1, m as i64);
    let dist = JointDistribution::from_outcomes(
        1,
        (1..=m).map(|a| (vec![ratio(1, a as i64)], mass.clone())),
    )?;
    Instance::new(dist, 1)
}

/// Two perfectly correlated buyers: v1 = v2 = 1/a with a uniform in [m].
pub fn gen_correlated_pair(m: u32, k: usize) -> Result<Instance> {
    if m == 0 {
        return Err(Error::InvalidArgument("pair family needs m >= 1".into()));
    }
    let mass = ratio(1, m as i64);
    let dist = JointDistribution::from_outcomes(
        2,
        (1..=m).map(|a| {
            let v = ratio(1, a as i64);
            (vec![v.clone(), v], mass.clone())
        }),
    )?;
    Instance::new(dist, k)
}

/// Modular family: one uniformly chosen buyer i* gets value
/// 1/(((sum of the others' counters) mod m) + 1); every other buyer j gets
/// c_j * eps with c_j uniform in [m]. Requires 0 < eps < 1/(n m^2).
///
/// The noise coordinates stay strictly below 1/m, so the starred coordinate
/// is always the strict maximum and the n * m^(n-1) outcomes are distinct.
pub fn gen_modular(n: usize, m: u32, eps: &Rational) -> Result<Instance> {
    if n < 2 {
        return Err(Error::InvalidArgument("modular family needs n >= 2".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("modular family needs m >= 1".into()));
    }
    let bound = Rational::new(BigInt::one(), BigInt::from(n as u32) * BigInt::from(m) * BigInt::from(m));
    if eps <= &Rational::zero() || eps >= &bound {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in (0, 1/(n*m^2)) = (0, {})",
            crate::rational::format_rational(&bound)
        )));
    }
    let outcomes = (m as u64).pow((n - 1) as u32) * n as u64;
    let mass = Rational::new(BigInt::one(), BigInt::from(outcomes));
    let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::with_capacity(outcomes as usize);
    let mut counters = vec![1u32; n - 1];
    for star in 0..n {
        loop {
            let total: u64 = counters.iter().map(|&c| c as u64).sum();
            let price = ratio(1, ((total % m as u64) + 1) as i64);
            let mut v = Vec::with_capacity(n);
            let mut it = counters.iter();
            for j in 0..n {
                if j == star {
                    v.push(price.clone());
                } else {
                    v.push(int(*it.next().unwrap() as i64) * eps);
                }
            }
            rows.push((v, mass.clone()));
            // Odometer over the n-1 counters, each in [1, m].
            let mut pos = 0;
            loop {
                if pos == n - 1 {
                    break;
                }
                if counters[pos] < m {
                    counters[pos] += 1;
                    break;
                }
                counters[pos] = 1;
                pos += 1;
            }
            if pos == n - 1 {
                break;
            }
        }
    }
    let dist = JointDistribution::from_outcomes(n, rows)?;
    Instance::new(dist, n)
}

/// Expert family: buyer `expert` draws from `value_dist` (one coordinate);
/// every other buyer observes that value plus independent additive noise
/// from its entry in `noise` (absent entry = zero noise). Supply is n.
pub fn gen_expert_noise(
    n: usize,
    expert: usize,
    value_dist: &JointDistribution,
    noise: &[(usize, JointDistribution)],
) -> Result<Instance> {
    if n < 2 || expert >= n {
        return Err(Error::InvalidArgument(
            "expert family needs n >= 2 and expert < n".into(),
        ));
    }
    if value_dist.n() != 1 {
        return Err(Error::InvalidArgument(
            "value distribution must be one-dimensional".into(),
        ));
    }
    for (j, d) in noise {
        if *j == expert || *j >= n {
            return Err(Error::InvalidArgument(format!(
                "noise entry for invalid buyer {j}"
            )));
        }
        if d.n() != 1 {
            return Err(Error::InvalidArgument(
                "noise distributions must be one-dimensional".into(),
            ));
        }
    }
    let point_zero = JointDistribution::from_outcomes(1, [(vec![int(0)], int(1))])?;
    let per_buyer: Vec<JointDistribution> = (0..n)
        .map(|j| {
            noise
                .iter()
                .find(|(b, _)| *b == j)
                .map(|(_, d)| d.clone())
                .unwrap_or_else(|| point_zero.clone())
        })
        .collect();

    // Enumerate value x noise product outcomes.
    let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for (v_row, v_mass) in value_dist.support().iter().zip(value_dist.mass()) {
        let value = &v_row[0];
        let mut partial: Vec<(Vec<Rational>, Rational)> = vec![(Vec::new(), v_mass.clone())];
        for (j, nd) in per_buyer.iter().enumerate() {
            let mut next = Vec::with_capacity(partial.len() * nd.len());
            for (prefix, mass) in &partial {
                if j == expert {
                    let mut p = prefix.clone();
                    p.push(value.clone());
                    next.push((p, mass.clone()));
                } else {
                    for (n_row, n_mass) in nd.support().iter().zip(nd.mass()) {
                        let mut p = prefix.clone();
                        p.push(value + &n_row[0]);
                        next.push((p, mass * n_mass));
                    }
                }
            }
            partial = next;
        }
        rows.extend(partial);
    }
    let dist = JointDistribution::from_outcomes(n, rows)?;
    Instance::new(dist, n)
}

/// Parameters for the seeded random family.
#[derive(Debug, Clone)]
pub struct RandomParams {
    pub n: usize,
    pub support_size: usize,
    pub value_grid: Vec<Rational>,
    pub k: usize,
    pub seed: u64,
}

/// Random instance: `support_size` distinct vectors with coordinates drawn
/// uniformly from the value grid, masses proportional to integer weights in
/// [1, 16]. Deterministic in the seed.
pub fn gen_random(params: &RandomParams) -> Result<Instance> {
    let RandomParams {
        n,
        support_size,
        value_grid,
        k,
        seed,
    } = params;
    if *n == 0 || *support_size == 0 {
        return Err(Error::InvalidArgument(
            "random family needs n >= 1 and support_size >= 1".into(),
        ));
    }
    let mut grid = value_grid.clone();
    grid.sort();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty value grid".into()));
    }
    if grid.iter().any(|x| x < &Rational::zero()) {
        return Err(Error::InvalidArgument("negative value in grid".into()));
    }
    let capacity = (grid.len() as f64).powi(*n as i32);
    if (*support_size as f64) > capacity {
        return Err(Error::InvalidArgument(format!(
            "support_size {support_size} exceeds {} distinct vectors",
            capacity
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
    let mut chosen: std::collections::BTreeSet<Vec<Rational>> = std::collections::BTreeSet::new();
    while chosen.len() < *support_size {
        let v: Vec<Rational> = (0..*n)
            .map(|_| grid[rng.gen_range(0..grid.len())].clone())
            .collect();
        chosen.insert(v);
    }
    let weights: Vec<i64> = (0..*support_size).map(|_| rng.gen_range(1..=16)).collect();
    let total: i64 = weights.iter().sum();
    let dist = JointDistribution::from_outcomes(
        *n,
        chosen
            .into_iter()
            .zip(weights)
            .map(|(v, w)| (v, ratio(w, total))),
    )?;
    Instance::new(dist, *k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::{conditional, marginal};

    #[test]
    fn harmonic_support_and_masses() {
        let inst = gen_harmonic(4).unwrap();
        assert_eq!(inst.k, 1);
        assert_eq!(inst.dist.len(), 4);
        assert_eq!(inst.dist.support()[0], vec![ratio(1, 4)]);
        assert_eq!(inst.dist.support()[3], vec![int(1)]);
        assert!(inst.dist.mass().iter().all(|m| *m == ratio(1, 4)));
        assert!(gen_harmonic(0).is_err());
    }

    #[test]
    fn pair_is_perfectly_correlated() {
        let inst = gen_correlated_pair(4, 2).unwrap();
        assert_eq!(inst.k, 2);
        assert_eq!(inst.dist.len(), 4);
        for v in inst.dist.support() {
            assert_eq!(v[0], v[1]);
        }
        assert!(gen_correlated_pair(4, 3).is_err());
    }

    #[test]
    fn modular_smallest_case() {
        let eps = ratio(1, 3);
        let inst = gen_modular(2, 1, &eps).unwrap();
        assert_eq!(inst.k, 2);
        assert_eq!(
            inst.dist.support(),
            &[vec![ratio(1, 3), int(1)], vec![int(1), ratio(1, 3)]]
        );
        assert_eq!(inst.dist.mass(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn modular_eps_bound_enforced() {
        assert!(gen_modular(3, 8, &ratio(1, 10)).is_err());
        assert!(gen_modular(3, 8, &ratio(1, 192)).is_err());
        assert!(gen_modular(3, 8, &ratio(1, 193)).is_ok());
        assert!(gen_modular(3, 8, &int(0)).is_err());
    }

    /// Independent re-enumeration of the modular family, used as an oracle.
    fn modular_oracle(n: usize, m: u32, eps: &Rational) -> Vec<(Vec<Rational>, Rational)> {
        let mut rows = Vec::new();
        let count = n as u64 * (m as u64).pow((n - 1) as u32);
        let mass = Rational::new(BigInt::one(), BigInt::from(count));
        for star in 0..n {
            let width = (n - 1) as u32;
            for code in 0..(m as u64).pow(width) {
                let mut c = Vec::new();
                let mut rem = code;
                for _ in 0..width {
                    c.push((rem % m as u64) as i64 + 1);
                    rem /= m as u64;
                }
                let sum: i64 = c.iter().sum();
                let mut v = Vec::new();
                let mut it = c.iter();
                for j in 0..n {
                    if j == star {
                        v.push(ratio(1, (sum % m as i64) + 1));
                    } else {
                        v.push(int(*it.next().unwrap()) * eps);
                    }
                }
                rows.push((v, mass.clone()));
            }
        }
        rows
    }

    #[test]
    fn modular_matches_oracle_and_spot_values() {
        let eps = ratio(1, 100);
        let inst = gen_modular(3, 4, &eps).unwrap();
        assert_eq!(inst.dist.len(), 48);

        let oracle =
            JointDistribution::from_outcomes(3, modular_oracle(3, 4, &eps)).unwrap();
        assert_eq!(inst.dist, oracle);

        // With c = (2, 3) for buyers 2 and 3, buyer 1's value is
        // 1/((5 mod 4) + 1) = 1/2.
        let target = vec![ratio(1, 2), ratio(2, 100), ratio(3, 100)];
        assert!(inst.dist.index_of(&target).is_some());
    }

    #[test]
    fn modular_marginal_and_conditional_against_oracle() {
        let eps = ratio(1, 100);
        let inst = gen_modular(3, 4, &eps).unwrap();

        let proj = marginal(&inst.dist, &[1, 2]).unwrap();
        let oracle_rows = modular_oracle(3, 4, &eps)
            .into_iter()
            .map(|(v, m)| (vec![v[1].clone(), v[2].clone()], m));
        let oracle = JointDistribution::from_outcomes(2, oracle_rows).unwrap();
        assert_eq!(proj, oracle);

        // Noise bids (2eps, 3eps) identify i* = 1, so the conditional is a
        // point mass at 1/2.
        let c = conditional(
            &inst.dist,
            0,
            &[(1, ratio(2, 100)), (2, ratio(3, 100))],
        )
        .unwrap();
        assert_eq!(c.support(), &[vec![ratio(1, 2)]]);
        assert_eq!(c.mass(), &[int(1)]);
    }

    #[test]
    fn expert_noise_zero_noise_is_perfect_correlation() {
        let value = JointDistribution::from_outcomes(
            1,
            [
                (vec![int(1)], ratio(1, 2)),
                (vec![int(2)], ratio(1, 2)),
            ],
        )
        .unwrap();
        let inst = gen_expert_noise(3, 0, &value, &[]).unwrap();
        assert_eq!(
            inst.dist.support(),
            &[vec![int(1); 3], vec![int(2); 3]]
        );
    }

    #[test]
    fn expert_noise_enumerates_products() {
        let value = JointDistribution::from_outcomes(
            1,
            [
                (vec![int(1)], ratio(1, 2)),
                (vec![int(2)], ratio(1, 2)),
            ],
        )
        .unwrap();
        let noise = JointDistribution::from_outcomes(
            1,
            [
                (vec![int(0)], ratio(1, 2)),
                (vec![ratio(1, 10)], ratio(1, 2)),
            ],
        )
        .unwrap();
        let inst =
            gen_expert_noise(3, 0, &value, &[(1, noise.clone()), (2, noise)]).unwrap();
        assert_eq!(inst.dist.len(), 8);
        assert!(inst.dist.validate().is_ok());
        // Expert's coordinate always equals the underlying value.
        assert!(inst
            .dist
            .support()
            .iter()
            .all(|v| v[0] == int(1) || v[0] == int(2)));
    }

    #[test]
    fn random_is_deterministic_in_seed() {
        let params = RandomParams {
            n: 3,
            support_size: 20,
            value_grid: vec![int(1), int(2), int(3), ratio(1, 2)],
            k: 3,
            seed: 7,
        };
        let a = gen_random(&params).unwrap();
        let b = gen_random(&params).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dist.len(), 20);
        assert!(a.validate().is_ok());

        let c = gen_random(&RandomParams { seed: 8, ..params.clone() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_rejects_oversized_support() {
        let params = RandomParams {
            n: 1,
            support_size: 5,
            value_grid: vec![int(1), int(2)],
            k: 1,
            seed: 0,
        };
        assert!(gen_random(&params).is_err());
    }
}
