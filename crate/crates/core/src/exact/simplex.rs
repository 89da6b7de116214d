//! Dense two-phase primal simplex over exact rationals with Bland's rule.
//!
//! Solves `min cᵀx  s.t.  Ax = b, x ≥ 0`. Pivoting is deterministic: the
//! entering column is the lowest-index column with negative reduced cost and
//! ratio-test ties go to the lowest-index basic variable.

use num_traits::{Signed, Zero};

use crate::linalg::{RatMatrix, Rational};

#[derive(Clone, Debug)]
pub(crate) struct StandardLp {
    pub a: RatMatrix,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub(crate) enum LpOutcome {
    Optimal(LpVertex),
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub(crate) struct LpVertex {
    pub x: Vec<Rational>,
    pub value: Rational,
    /// Basic column per constraint row; `None` for rows found redundant.
    pub basis: Vec<Option<usize>>,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Reduced-cost row, one entry per column (rhs column excluded).
    cost: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for v in self.rows[row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[row]);
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let f = r[col].clone();
            for (x, p) in r.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        if !self.cost[col].is_zero() {
            let f = self.cost[col].clone();
            for (x, p) in self.cost.iter_mut().zip(&pivot_row[..self.width]) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        self.rows[row] = pivot_row;
        self.basis[row] = col;
    }

    /// Runs Bland pivots over columns `0..allowed`. Returns false on unboundedness.
    fn optimize(&mut self, allowed: usize) -> bool {
        loop {
            let Some(col) = (0..allowed).find(|&j| self.cost[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }
}

pub(crate) fn solve_standard(lp: &StandardLp) -> LpOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let flip = lp.b[i].is_negative();
        let mut r: Vec<Rational> = Vec::with_capacity(width + 1);
        for j in 0..n {
            r.push(if flip { -&lp.a[i][j] } else { lp.a[i][j].clone() });
        }
        for k in 0..m {
            r.push(if k == i { Rational::from_integer(1.into()) } else { Rational::zero() });
        }
        r.push(if flip { -&lp.b[i] } else { lp.b[i].clone() });
        rows.push(r);
    }
    // Phase one: minimise the sum of artificials.
    let mut cost = vec![Rational::zero(); width];
    for r in &rows {
        for j in 0..n {
            if !r[j].is_zero() {
                cost[j] -= &r[j];
            }
        }
    }
    let mut t = Tableau {
        rows,
        cost,
        basis: (n..n + m).collect(),
        width,
    };
    t.optimize(width);
    let infeasibility: Rational = (0..m)
        .filter(|&i| t.basis[i] >= n)
        .map(|i| t.rhs(i).clone())
        .sum();
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible;
    }
    // Drive zero-level artificials out; rows with no structural entry are redundant.
    let mut redundant = vec![false; m];
    for i in 0..m {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => redundant[i] = true,
            }
        }
    }
    // Phase two on the structural columns only.
    t.cost = lp.c.iter().cloned().chain(std::iter::repeat(Rational::zero()).take(m)).collect();
    for i in 0..m {
        let bi = t.basis[i];
        if bi < n && !lp.c[bi].is_zero() {
            let f = lp.c[bi].clone();
            for j in 0..n {
                if !t.rows[i][j].is_zero() {
                    let d = &f * &t.rows[i][j];
                    t.cost[j] -= d;
                }
            }
        }
    }
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rhs(i).clone();
        }
    }
    let value = x
        .iter()
        .zip(&lp.c)
        .filter(|(xi, _)| !xi.is_zero())
        .fold(Rational::zero(), |acc, (xi, ci)| acc + xi * ci);
    let basis = (0..m)
        .map(|i| if redundant[i] { None } else { Some(t.basis[i]) })
        .collect();
    LpOutcome::Optimal(LpVertex { x, value, basis })
}
