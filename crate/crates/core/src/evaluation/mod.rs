//! Revenue evaluation and benchmarks.
//!
//! Exact expected revenue sums the per-profile payment rows over the
//! support, entirely in rational arithmetic. Monte Carlo estimation exists
//! for policies whose exact evaluation is refused as too large, and for
//! sanity-checking the exact path. The welfare benchmark is the expected
//! optimal social welfare: the expected sum of the k highest values.

pub mod audits;
pub mod search;

pub use audits::{
    audit_dsic, audit_expost_ir, audit_monotone_allocation, audit_price_bound, AuditFinding,
    AuditKind,
};
pub use search::{best_three_price_pair, best_two_stage_pair, PairSearchResult};

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lp;
use crate::mechanisms::direct::policy_row;
use crate::mechanisms::{draw_weighted, run_with_rng, Policy};
use crate::rational::{to_f64, Rational};
use crate::valuation::{Instance, JointDistribution};
use crate::{Error, Result};

/// Probability that fewer than k of the independent coins land heads;
/// each entry of z is a head probability in [0, 1]. This is the chance
/// that a k-unit supply survives the coins played in any order.
pub fn poisson_binomial_tail(z: &[Rational], k: usize) -> Result<Rational> {
    for (i, coin) in z.iter().enumerate() {
        if coin < &Rational::zero() || coin > &Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "coin {i} has probability {coin} outside [0, 1]"
            )));
        }
    }
    if k == 0 {
        return Ok(Rational::zero());
    }
    if k > z.len() {
        return Ok(Rational::one());
    }
    // full count distribution, untruncated
    let mut dp = vec![Rational::zero(); z.len() + 1];
    dp[0] = Rational::one();
    for (step, coin) in z.iter().enumerate() {
        for c in (0..=step).rev() {
            let moved = &dp[c] * coin;
            dp[c + 1] += &moved;
            dp[c] -= &moved;
        }
    }
    Ok(dp[..k].iter().sum())
}

/// Expected optimal social welfare with k units: the expected sum of the k
/// highest coordinates.
pub fn expected_osw(pi: &JointDistribution, k: usize) -> Result<Rational> {
    if k == 0 || k > pi.n() {
        return Err(Error::InvalidArgument(format!(
            "supply {k} outside 1..={}",
            pi.n()
        )));
    }
    let mut total = Rational::zero();
    for (v, mass) in pi.support().iter().zip(pi.mass()) {
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| b.cmp(a));
        let top: Rational = sorted[..k].iter().sum();
        total += top * mass;
    }
    Ok(total)
}

/// Exact expected revenue of a policy under truthful play, summed over the
/// support of pi.
pub fn exact_expected_revenue(policy: &Policy, pi: &JointDistribution) -> Result<Rational> {
    if pi.n() != policy.n() {
        return Err(Error::InvalidArgument(format!(
            "policy has {} buyers, distribution has {}",
            policy.n(),
            pi.n()
        )));
    }
    let mut total = Rational::zero();
    for (v, mass) in pi.support().iter().zip(pi.mass()) {
        let (_, p) = policy_row(policy, v)?;
        total += p.iter().sum::<Rational>() * mass;
    }
    Ok(total)
}

/// Monte Carlo revenue estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Half-width of the normal-approximation 95% confidence interval.
    pub half_width_95: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Estimates expected revenue by simulation: each trial draws a valuation
/// vector exactly from pi and plays one trajectory. Trial t uses stream t
/// of a counter-based generator, so estimates are reproducible and
/// trial-order independent.
pub fn monte_carlo_revenue(
    policy: &Policy,
    pi: &JointDistribution,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if pi.n() != policy.n() {
        return Err(Error::InvalidArgument(format!(
            "policy has {} buyers, distribution has {}",
            policy.n(),
            pi.n()
        )));
    }
    pi.validate()?;
    let mut revenues: Vec<Rational> = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t);
        let idx = draw_weighted(&mut rng, pi.mass())?;
        let v = &pi.support()[idx];
        let out = run_with_rng(policy, v, &mut rng)?;
        revenues.push(out.revenue());
    }
    let total: Rational = revenues.iter().sum();
    let mean = &total / Rational::from_integer(trials.into());
    let half_width_95 = if trials == 1 {
        0.0
    } else {
        let sq_dev: Rational = revenues
            .iter()
            .map(|r| {
                let d = r - &mean;
                (&d) * (&d)
            })
            .sum();
        let var = sq_dev / Rational::from_integer((trials - 1).into());
        1.96 * (to_f64(&var) / trials as f64).sqrt()
    };
    Ok(McEstimate { mean: to_f64(&mean), half_width_95, trials, seed })
}

/// One evaluated mechanism in a comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct RevenueReport {
    pub mechanism: String,
    /// Exact expected revenue, when exact evaluation is tractable.
    pub exact: Option<Rational>,
    /// Monte Carlo estimate, used when exact evaluation is refused.
    pub mc: Option<McEstimate>,
    /// exact / expected optimal social welfare.
    pub ratio_osw: Option<Rational>,
    /// exact / optimal allocation-rule revenue bound.
    pub ratio_lp: Option<Rational>,
}

/// Revenue comparison of several policies on one instance, against the
/// welfare benchmark and the allocation-rule revenue bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub osw: Rational,
    pub lp_bound: Rational,
    pub rows: Vec<RevenueReport>,
}

/// Evaluates each named policy on the instance: exactly where possible,
/// falling back to Monte Carlo when exact evaluation reports a capacity
/// limit.
pub fn ratio_report(
    instance: &Instance,
    policies: &[(String, Policy)],
    mc_trials: u64,
    mc_seed: u64,
) -> Result<RatioReport> {
    let osw = expected_osw(&instance.dist, instance.k)?;
    let lp_bound = lp::revenue_upper_bound(instance)?;
    let mut rows = Vec::with_capacity(policies.len());
    for (name, policy) in policies {
        let row = match exact_expected_revenue(policy, &instance.dist) {
            Ok(exact) => RevenueReport {
                mechanism: name.clone(),
                ratio_osw: (!osw.is_zero()).then(|| &exact / &osw),
                ratio_lp: (!lp_bound.is_zero()).then(|| &exact / &lp_bound),
                exact: Some(exact),
                mc: None,
            },
            Err(Error::Capacity(_)) => RevenueReport {
                mechanism: name.clone(),
                exact: None,
                mc: Some(monte_carlo_revenue(policy, &instance.dist, mc_trials, mc_seed)?),
                ratio_osw: None,
                ratio_lp: None,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(RatioReport { osw, lp_bound, rows })
}
