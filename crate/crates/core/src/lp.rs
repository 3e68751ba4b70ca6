//! The revenue upper-bound linear program over a discrete correlated
//! instance, its exact simplex solution, and the closed-form optimum for
//! unlimited supply.
//!
//! Variables are y_i(v) for every buyer i and support vector v. The
//! objective coefficient of y_i(v) is the joint tail mass of buyer i's
//! conditional at v_i times v_i; one capacity row bounds each (i, v_{-i})
//! group by 1 and one supply row bounds each support vector by k.

use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::rational::{format_rational, Rational};
use crate::simplex::{maximize, SolveStatus};
use crate::valuation::{Instance, JointDistribution};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Number of buyers (column block count).
    pub n: usize,
    /// Support size (columns per block).
    pub support_len: usize,
    /// Maximization coefficients, one per column.
    pub objective: Vec<Rational>,
    /// Constraint rows (coefficients, rhs), all of the form a.y <= b.
    pub rows: Vec<(Vec<Rational>, Rational)>,
    /// Human-readable row labels, parallel to `rows`.
    pub labels: Vec<String>,
}

impl LinearProgram {
    /// Column of variable y_i(support[s]).
    pub fn col(&self, i: usize, s: usize) -> usize {
        i * self.support_len + s
    }

    pub fn num_vars(&self) -> usize {
        self.n * self.support_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// y[i][s] is the mass on buyer i at support vector s.
    pub y: Vec<Vec<Rational>>,
    pub value: Rational,
    pub status: LpStatus,
}

/// Builds the revenue LP of an instance.
pub fn build_revenue_lp(instance: &Instance) -> LinearProgram {
    let pi = &instance.dist;
    let n = pi.n();
    let s_len = pi.len();
    let num_vars = n * s_len;
    let mut objective = vec![Rational::zero(); num_vars];
    let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    let mut labels: Vec<String> = Vec::new();

    // Supply rows are accumulated across buyers, keyed by support index.
    let mut supply: Vec<Vec<Rational>> = vec![vec![Rational::zero(); num_vars]; s_len];

    for i in 0..n {
        for (context, group) in pi.contexts_of(i) {
            // Suffix mass sums give the joint tail Pr[v' >= v_i] * pi_{-i}.
            let mut tail = Rational::zero();
            let mut tails = vec![Rational::zero(); group.len()];
            for (j, row) in group.iter().enumerate().rev() {
                tail += &row.mass;
                tails[j] = tail.clone();
            }
            let mut cap = vec![Rational::zero(); num_vars];
            for (j, row) in group.iter().enumerate() {
                let col = i * s_len + row.index;
                objective[col] = &row.value * &tails[j];
                cap[col] = Rational::from_integer(1.into());
                // Every group member at value >= this row's value includes
                // this column in its supply row (prefix structure).
                for later in group.iter().skip(j) {
                    supply[later.index][col] = Rational::from_integer(1.into());
                }
            }
            rows.push((cap, Rational::from_integer(1.into())));
            labels.push(format!("cap i={} ctx={}", i, crate::valuation::fmt_vec(&context)));
        }
    }
    let k = Rational::from_integer((instance.k as i64).into());
    for (t, coeffs) in supply.into_iter().enumerate() {
        rows.push((coeffs, k.clone()));
        labels.push(format!(
            "supply v={}",
            crate::valuation::fmt_vec(&pi.support()[t])
        ));
    }

    LinearProgram { n, support_len: s_len, objective, rows, labels }
}

/// Exact optimum of the LP via two-phase simplex.
pub fn solve_simplex(lp: &LinearProgram) -> LpSolution {
    let sol = maximize(&lp.objective, &lp.rows);
    let status = match sol.status {
        SolveStatus::Optimal => LpStatus::Optimal,
        SolveStatus::Infeasible => LpStatus::Infeasible,
        SolveStatus::Unbounded => LpStatus::Unbounded,
    };
    if status != LpStatus::Optimal {
        return LpSolution { y: Vec::new(), value: Rational::zero(), status };
    }
    let mut y = vec![vec![Rational::zero(); lp.support_len]; lp.n];
    for i in 0..lp.n {
        for s in 0..lp.support_len {
            y[i][s] = sol.x[lp.col(i, s)].clone();
        }
    }
    // The solver's arithmetic is exact, so the vertex it reports must satisfy
    // every row; a violation is an internal bug, not an input condition.
    for ((coeffs, rhs), label) in lp.rows.iter().zip(&lp.labels) {
        let lhs: Rational = coeffs
            .iter()
            .zip(sol.x.iter())
            .map(|(a, x)| a * x)
            .sum();
        assert!(lhs <= *rhs, "simplex returned a point violating {label}");
    }
    LpSolution { y, value: sol.value, status }
}

/// Closed-form optimal solution for unlimited supply (k = n): per buyer and
/// context, put mass 1 on the smallest value maximizing v * Pr[v' >= v].
pub fn closed_form_unlimited(instance: &Instance) -> Result<LpSolution> {
    let pi = &instance.dist;
    let n = pi.n();
    if instance.k != n {
        return Err(Error::InvalidArgument(format!(
            "closed form requires k = n, got k = {} with n = {}",
            instance.k, n
        )));
    }
    let mut y = vec![vec![Rational::zero(); pi.len()]; n];
    let mut value = Rational::zero();
    for (i, row_y) in y.iter_mut().enumerate() {
        for (_, group) in pi.contexts_of(i) {
            let mut tail = Rational::zero();
            let mut tails = vec![Rational::zero(); group.len()];
            for (j, row) in group.iter().enumerate().rev() {
                tail += &row.mass;
                tails[j] = tail.clone();
            }
            // Ascending scan with strict improvement keeps the smallest
            // maximizer.
            let mut best_j = 0usize;
            let mut best = &group[0].value * &tails[0];
            for (j, row) in group.iter().enumerate().skip(1) {
                let rev = &row.value * &tails[j];
                if rev > best {
                    best = rev;
                    best_j = j;
                }
            }
            row_y[group[best_j].index] = Rational::from_integer(1.into());
            value += best;
        }
    }
    Ok(LpSolution { y, value, status: LpStatus::Optimal })
}

/// Checks y against constraints (capacity per context, supply per vector,
/// non-negativity), reporting the first violation.
pub fn check_feasible(instance: &Instance, y: &[Vec<Rational>]) -> Result<()> {
    let pi = &instance.dist;
    let n = pi.n();
    if y.len() != n || y.iter().any(|row| row.len() != pi.len()) {
        return Err(Error::InvalidArgument(format!(
            "solution shape mismatch: want {} x {}",
            n,
            pi.len()
        )));
    }
    for (i, row) in y.iter().enumerate() {
        for (s, val) in row.iter().enumerate() {
            if val < &Rational::zero() {
                return Err(Error::InvalidArgument(format!(
                    "y[{i}][{s}] = {} is negative",
                    format_rational(val)
                )));
            }
        }
    }
    let one = Rational::from_integer(1.into());
    let k = Rational::from_integer((instance.k as i64).into());
    for i in 0..n {
        for (context, group) in pi.contexts_of(i) {
            let total: Rational = group.iter().map(|r| y[i][r.index].clone()).sum();
            if total > one {
                return Err(Error::InvalidArgument(format!(
                    "capacity exceeded for buyer {i} at context {}: {}",
                    crate::valuation::fmt_vec(&context),
                    format_rational(&total)
                )));
            }
        }
    }
    for (t, v) in pi.support().iter().enumerate() {
        let mut total = Rational::zero();
        for i in 0..n {
            let context = JointDistribution::context_of(v, i);
            for (s, w) in pi.support().iter().enumerate() {
                if JointDistribution::context_of(w, i) == context && w[i] <= v[i] {
                    total += &y[i][s];
                }
            }
        }
        if total > k {
            return Err(Error::InvalidArgument(format!(
                "supply exceeded at support vector {} (index {t}): {}",
                crate::valuation::fmt_vec(v),
                format_rational(&total)
            )));
        }
    }
    Ok(())
}

/// Exact objective value of the instance's LP at y.
pub fn objective_value(instance: &Instance, y: &[Vec<Rational>]) -> Rational {
    let lp = build_revenue_lp(instance);
    let mut total = Rational::zero();
    for i in 0..lp.n {
        for s in 0..lp.support_len {
            let c = &lp.objective[lp.col(i, s)];
            if !c.is_zero() {
                total += c * &y[i][s];
            }
        }
    }
    total
}

/// Optimal LP value: closed form when k = n, simplex otherwise.
pub fn revenue_upper_bound(instance: &Instance) -> Result<Rational> {
    if instance.k == instance.n() {
        return Ok(closed_form_unlimited(instance)?.value);
    }
    let sol = solve_simplex(&build_revenue_lp(instance));
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        other => Err(Error::Internal(format!(
            "revenue LP reported {other:?} on a nonempty bounded polytope"
        ))),
    }
}

/// Plain-text dump of the LP, one constraint per line, for external
/// cross-checking.
pub fn lp_dump(lp: &LinearProgram, pi: &JointDistribution) -> String {
    let mut out = String::new();
    let term = |i: usize, s: usize| format!("y{i}_{s}");
    let mut obj_terms = Vec::new();
    for i in 0..lp.n {
        for s in 0..lp.support_len {
            let c = &lp.objective[lp.col(i, s)];
            if !c.is_zero() {
                obj_terms.push(format!("{} {}", format_rational(c), term(i, s)));
            }
        }
    }
    let _ = writeln!(out, "maximize: {}", obj_terms.join(" + "));
    let _ = writeln!(out, "subject to:");
    for ((coeffs, rhs), label) in lp.rows.iter().zip(&lp.labels) {
        let mut terms = Vec::new();
        for (col, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                let (i, s) = (col / lp.support_len, col % lp.support_len);
                if c.is_one() {
                    terms.push(term(i, s));
                } else {
                    terms.push(format!("{} {}", format_rational(c), term(i, s)));
                }
            }
        }
        let _ = writeln!(
            out,
            "  [{label}] {} <= {}",
            terms.join(" + "),
            format_rational(rhs)
        );
    }
    let _ = writeln!(out, "  y >= 0");
    let _ = writeln!(out, "columns: y<i>_<s> is buyer i at support vector s of:");
    for (s, v) in pi.support().iter().enumerate() {
        let _ = writeln!(out, "  s={s}: {}", crate::valuation::fmt_vec(v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_correlated_pair, gen_harmonic, harmonic_number};
    use crate::rational::{int, ratio};

    fn point_mass_instance() -> Instance {
        let dist =
            JointDistribution::from_outcomes(1, [(vec![int(5)], int(1))]).unwrap();
        Instance::new(dist, 1).unwrap()
    }

    #[test]
    fn point_mass_lp_shape_and_value() {
        let inst = point_mass_instance();
        let lp = build_revenue_lp(&inst);
        assert_eq!(lp.num_vars(), 1);
        assert_eq!(lp.objective, vec![int(5)]);
        assert_eq!(lp.rows.len(), 2);
        assert!(lp.rows.iter().all(|(_, b)| *b == int(1)));
        let sol = solve_simplex(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.value, int(5));
        assert_eq!(revenue_upper_bound(&inst).unwrap(), int(5));
    }

    #[test]
    fn harmonic_two_coefficients() {
        let inst = gen_harmonic(2).unwrap();
        let lp = build_revenue_lp(&inst);
        // Support is sorted ascending: index 0 is 1/2, index 1 is 1.
        assert_eq!(lp.objective, vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn harmonic_four_value_both_routes() {
        let inst = gen_harmonic(4).unwrap();
        let lp = build_revenue_lp(&inst);
        let via_simplex = solve_simplex(&lp);
        assert_eq!(via_simplex.status, LpStatus::Optimal);
        assert_eq!(via_simplex.value, ratio(1, 4));
        let closed = closed_form_unlimited(&inst).unwrap();
        assert_eq!(closed.value, ratio(1, 4));
        // Tie-break picks the smallest maximizer, 1/4 (support index 0).
        assert_eq!(closed.y[0][0], int(1));
        assert!(closed.y[0][1..].iter().all(|v| v.is_zero()));
        check_feasible(&inst, &closed.y).unwrap();
        assert_eq!(objective_value(&inst, &closed.y), ratio(1, 4));
    }

    #[test]
    fn correlated_pair_unlimited_agrees_both_routes() {
        let inst = gen_correlated_pair(4, 2).unwrap();
        let lp = build_revenue_lp(&inst);
        assert_eq!(lp.num_vars(), 8);
        // Point-mass conditionals: coefficient is pi_{-i}(v_{-i}) * v_i.
        for i in 0..2 {
            for (s, v) in inst.dist.support().iter().enumerate() {
                assert_eq!(lp.objective[lp.col(i, s)], ratio(1, 4) * &v[i]);
            }
        }
        let expect = ratio(2, 4) * harmonic_number(4);
        assert_eq!(expect, ratio(25, 24));
        assert_eq!(solve_simplex(&lp).value, expect);
        assert_eq!(closed_form_unlimited(&inst).unwrap().value, expect);
    }

    #[test]
    fn correlated_pair_unit_supply_value() {
        let inst = gen_correlated_pair(4, 1).unwrap();
        let sol = solve_simplex(&build_revenue_lp(&inst));
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.value, harmonic_number(4) / int(4));
        check_feasible(&inst, &sol.y).unwrap();
        assert!(closed_form_unlimited(&inst).is_err());
        assert_eq!(revenue_upper_bound(&inst).unwrap(), ratio(25, 48));
    }

    #[test]
    fn infeasible_solution_rejected() {
        let inst = gen_harmonic(2).unwrap();
        let y = vec![vec![int(1), int(1)]];
        assert!(check_feasible(&inst, &y).is_err());
        let ok = vec![vec![ratio(1, 2), ratio(1, 2)]];
        check_feasible(&inst, &ok).unwrap();
        let neg = vec![vec![ratio(-1, 2), ratio(1, 2)]];
        assert!(check_feasible(&inst, &neg).is_err());
    }

    #[test]
    fn scaling_covariance() {
        let inst = gen_harmonic(3).unwrap();
        let scaled = Instance::new(inst.dist.scale(&int(7)).unwrap(), 1).unwrap();
        assert_eq!(
            revenue_upper_bound(&scaled).unwrap(),
            revenue_upper_bound(&inst).unwrap() * int(7)
        );
    }

    #[test]
    fn dump_contains_rows_and_legend() {
        let inst = gen_harmonic(2).unwrap();
        let lp = build_revenue_lp(&inst);
        let text = lp_dump(&lp, &inst.dist);
        assert!(text.contains("maximize:"));
        assert_eq!(text.matches("<=").count(), lp.rows.len());
        assert!(text.contains("s=0"));
    }
}
