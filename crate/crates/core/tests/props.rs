//! Structural invariants checked over randomized inputs.

use num_traits::{One, Zero};
use proptest::prelude::*;

use seqprice::evaluation::poisson_binomial_tail;
use seqprice::io::{instance_from_json, instance_to_json, policy_from_json, policy_to_json};
use seqprice::lp::revenue_upper_bound;
use seqprice::mechanisms::{build_bucketed_spp_unit, build_bucketed_spp_unlimited, Policy};
use seqprice::rational::{int, ratio, Rational};
use seqprice::valuation::{marginal, Instance, JointDistribution};

fn grid() -> Vec<Rational> {
    vec![ratio(1, 2), int(1), ratio(3, 2), int(2), int(4)]
}

/// Random distribution: up to six weighted rows over a fixed value grid,
/// weights normalized so the masses sum to exactly one.
fn dist_strategy(max_n: usize) -> impl Strategy<Value = JointDistribution> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(
            (prop::collection::vec(0..5usize, n), 1..=6u32),
            1..=6,
        )
        .prop_map(move |rows| {
            let grid = grid();
            let total: u32 = rows.iter().map(|(_, w)| w).sum();
            JointDistribution::from_outcomes(
                n,
                rows.iter().map(|(idx, w)| {
                    let v: Vec<Rational> = idx.iter().map(|&j| grid[j].clone()).collect();
                    (v, ratio(*w as i64, total as i64))
                }),
            )
            .unwrap()
        })
    })
}

fn instance_strategy(max_n: usize) -> impl Strategy<Value = Instance> {
    dist_strategy(max_n).prop_flat_map(|dist| {
        let n = dist.n();
        (Just(dist), 1..=n).prop_map(|(dist, k)| Instance::new(dist, k).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Conditioning on any buyer partitions the support: the groups' masses
    /// add back to one, each group's total equals the marginal mass of its
    /// context, and rows within a group come sorted by the buyer's value.
    #[test]
    fn contexts_partition_the_support(pi in dist_strategy(3)) {
        for i in 0..pi.n() {
            let mut total = Rational::zero();
            let ctx_coords: Vec<usize> = (0..pi.n()).filter(|&j| j != i).collect();
            for (ctx, rows) in pi.contexts_of(i) {
                let group: Rational = rows.iter().map(|r| r.mass.clone()).sum();
                if ctx_coords.is_empty() {
                    prop_assert_eq!(&group, &Rational::one());
                } else {
                    let ctx_marginal = marginal(&pi, &ctx_coords).unwrap();
                    prop_assert_eq!(&group, &ctx_marginal.mass_of(&ctx));
                }
                for pair in rows.windows(2) {
                    prop_assert!(pair[0].value <= pair[1].value);
                }
                for row in &rows {
                    prop_assert_eq!(
                        JointDistribution::context_of(&pi.support()[row.index], i),
                        ctx.clone()
                    );
                }
                total += group;
            }
            prop_assert_eq!(total, Rational::one());
        }
    }

    #[test]
    fn instance_serialization_round_trips(inst in instance_strategy(3)) {
        let back = instance_from_json(&instance_to_json(&inst).unwrap()).unwrap();
        prop_assert_eq!(back.k, inst.k);
        prop_assert_eq!(back.dist.support(), inst.dist.support());
        prop_assert_eq!(back.dist.mass(), inst.dist.mass());
    }

    #[test]
    fn bucketed_policies_round_trip_through_json(pi in dist_strategy(2)) {
        let policies = [
            Policy::SinglePrice(build_bucketed_spp_unit(&pi, None).unwrap()),
            Policy::PerBuyer(build_bucketed_spp_unlimited(&pi).unwrap()),
        ];
        for policy in policies {
            let back = policy_from_json(&policy_to_json(&policy).unwrap()).unwrap();
            prop_assert_eq!(back, policy);
        }
    }

    #[test]
    fn tail_probability_is_monotone_and_anchored(
        z in prop::collection::vec((0..=6i64, 1..=6i64), 1..10)
    ) {
        let z: Vec<Rational> = z
            .iter()
            .map(|&(a, b)| ratio(a.min(b), b))
            .collect();
        let n = z.len();
        prop_assert_eq!(poisson_binomial_tail(&z, 0).unwrap(), Rational::zero());
        prop_assert_eq!(poisson_binomial_tail(&z, n + 1).unwrap(), Rational::one());
        let mut prev = Rational::zero();
        for k in 0..=n + 1 {
            let t = poisson_binomial_tail(&z, k).unwrap();
            prop_assert!(t >= prev);
            prop_assert!(t >= Rational::zero() && t <= Rational::one());
            prev = t;
        }
    }
}

proptest! {
    // the LP cases solve a simplex per shrink step, so keep the count low
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Scaling every valuation by c scales the optimal truthful revenue
    /// bound by exactly c.
    #[test]
    fn revenue_bound_is_scale_covariant(
        inst in instance_strategy(2),
        c in prop::sample::select(vec![ratio(1, 3), int(2), ratio(7, 2)])
    ) {
        let base = revenue_upper_bound(&inst).unwrap();
        let scaled = Instance::new(inst.dist.scale(&c).unwrap(), inst.k).unwrap();
        prop_assert_eq!(revenue_upper_bound(&scaled).unwrap(), base * c);
    }
}
