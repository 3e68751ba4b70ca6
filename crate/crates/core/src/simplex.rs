//! Exact primal simplex over rationals for problems of the form
//! maximize c.x subject to A.x <= b, x >= 0.
//!
//! Two phases (artificials only for rows with negative right-hand sides),
//! dense tableau, and a Dantzig pivot rule that permanently falls back to
//! Bland's rule after a fixed number of iterations so cycling cannot occur.

use num_traits::Zero;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct BasicSolution {
    /// Values of the structural variables (empty unless status is Optimal).
    pub x: Vec<Rational>,
    /// Objective value at the returned point (zero unless Optimal).
    pub value: Rational,
    pub status: SolveStatus,
}

struct Tableau {
    /// rows[r] has `width` coefficient entries followed by the rhs.
    rows: Vec<Vec<Rational>>,
    /// Reduced-cost row (same layout; rhs holds the objective value).
    cost: Vec<Rational>,
    /// Column index of the basic variable in each row.
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for entry in self.rows[row].iter_mut() {
            *entry *= &inv;
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let factor = other[col].clone();
            for (e, p) in other.iter_mut().zip(&pivot_row) {
                *e -= &factor * p;
            }
        }
        if !self.cost[col].is_zero() {
            let factor = self.cost[col].clone();
            for (e, p) in self.cost.iter_mut().zip(&pivot_row) {
                *e -= &factor * p;
            }
        }
        self.basis[row] = col;
    }

    /// Entering column: negative reduced cost. Dantzig picks the most
    /// negative (smallest index on ties); Bland picks the smallest index.
    fn entering(&self, active: &[bool], bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for j in 0..self.width {
            if !active[j] || self.cost[j] >= Rational::zero() {
                continue;
            }
            if bland {
                return Some(j);
            }
            match best {
                Some(b) if self.cost[j] >= self.cost[b] => {}
                _ => best = Some(j),
            }
        }
        best
    }

    /// Leaving row by minimum ratio; ties broken toward the basic variable
    /// with the smallest index (Bland-compatible).
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            if row[col] <= Rational::zero() {
                continue;
            }
            let ratio = &row[self.width] / &row[col];
            let better = match &best {
                None => true,
                Some((br, bratio)) => {
                    ratio < *bratio || (ratio == *bratio && self.basis[r] < self.basis[*br])
                }
            };
            if better {
                best = Some((r, ratio));
            }
        }
        best.map(|(r, _)| r)
    }

    /// Runs simplex iterations on the current tableau. Returns false if an
    /// unbounded direction is found.
    fn optimize(&mut self, active: &[bool]) -> bool {
        let bland_after = 20 * (self.rows.len() + self.width) + 200;
        let mut iterations = 0usize;
        loop {
            let bland = iterations >= bland_after;
            let Some(col) = self.entering(active, bland) else {
                return true;
            };
            let Some(row) = self.leaving(col) else {
                return false;
            };
            self.pivot(row, col);
            iterations += 1;
        }
    }

    /// Recomputes the reduced-cost row for objective `c` (length width;
    /// maximization) given the current basis.
    fn reset_cost(&mut self, c: &[Rational]) {
        self.cost = vec![Rational::zero(); self.width + 1];
        for j in 0..self.width {
            self.cost[j] = -c[j].clone();
        }
        for (r, &b) in self.basis.iter().enumerate() {
            if c[b].is_zero() {
                continue;
            }
            let factor = c[b].clone();
            let row = self.rows[r].clone();
            for (e, p) in self.cost.iter_mut().zip(&row) {
                *e += &factor * p;
            }
        }
    }
}

/// Maximizes c.x subject to rows (a, b) meaning a.x <= b, and x >= 0.
pub fn maximize(objective: &[Rational], rows: &[(Vec<Rational>, Rational)]) -> BasicSolution {
    let n = objective.len();
    let m = rows.len();
    for (a, _) in rows {
        assert_eq!(a.len(), n, "constraint arity mismatch");
    }
    let negative: Vec<bool> = rows.iter().map(|(_, b)| *b < Rational::zero()).collect();
    let artificials = negative.iter().filter(|&&x| x).count();
    let width = n + m + artificials;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        cost: vec![Rational::zero(); width + 1],
        basis: Vec::with_capacity(m),
        width,
    };
    let mut art_col = n + m;
    for (r, (a, b)) in rows.iter().enumerate() {
        let mut row = vec![Rational::zero(); width + 1];
        let flip = negative[r];
        for (j, coeff) in a.iter().enumerate() {
            row[j] = if flip { -coeff.clone() } else { coeff.clone() };
        }
        // Slack for this row; negated alongside the rest when flipped.
        row[n + r] = if flip { -Rational::from_integer(1.into()) } else { Rational::from_integer(1.into()) };
        row[width] = if flip { -b.clone() } else { b.clone() };
        if flip {
            row[art_col] = Rational::from_integer(1.into());
            tab.basis.push(art_col);
            art_col += 1;
        } else {
            tab.basis.push(n + r);
        }
        tab.rows.push(row);
    }

    let all_active = vec![true; width];
    if artificials > 0 {
        // Phase 1: maximize minus the sum of artificials.
        let mut phase1 = vec![Rational::zero(); width];
        for c in phase1.iter_mut().take(width).skip(n + m) {
            *c = -Rational::from_integer(1.into());
        }
        tab.reset_cost(&phase1);
        let bounded = tab.optimize(&all_active);
        debug_assert!(bounded, "phase 1 is bounded by construction");
        if !tab.cost[width].is_zero() {
            return BasicSolution {
                x: Vec::new(),
                value: Rational::zero(),
                status: SolveStatus::Infeasible,
            };
        }
        // Drive any basic artificial (necessarily at zero) out of the basis,
        // dropping rows that became redundant.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= n + m {
                let col = (0..n + m).find(|&j| !tab.rows[r][j].is_zero());
                match col {
                    Some(c) => tab.pivot(r, c),
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    // Phase 2 on the structural objective; artificial columns are frozen.
    let mut active = vec![true; width];
    for a in active.iter_mut().take(width).skip(n + m) {
        *a = false;
    }
    let mut full_obj = vec![Rational::zero(); width];
    full_obj[..n].clone_from_slice(objective);
    tab.reset_cost(&full_obj);
    if !tab.optimize(&active) {
        return BasicSolution {
            x: Vec::new(),
            value: Rational::zero(),
            status: SolveStatus::Unbounded,
        };
    }

    let mut x = vec![Rational::zero(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[r][width].clone();
        }
    }
    let value = tab.cost[width].clone();
    BasicSolution { x, value, status: SolveStatus::Optimal }
}
