//! Depth-first branch-and-bound over [`solve_standard`].
//!
//! Variables may be sign-free (split into a positive and a negative part in
//! the LP) and may carry an integrality requirement. Branching bounds are
//! added as explicit rows, which is fine at desk scale.

use num_traits::{One, Signed, Zero};

use super::simplex::{solve_standard, LpOutcome, StandardLp};
use crate::error::{MirError, Result};
use crate::linalg::{dot, integer_scaled, integer_solvable, null_space, RatMatrix, Rational};

#[derive(Clone, Debug)]
pub(crate) struct MixedProblem {
    pub a: RatMatrix,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
    pub integer: Vec<bool>,
    pub free: Vec<bool>,
    /// Upper bounds valid for the whole tree.
    pub upper: Vec<Option<Rational>>,
}

#[derive(Clone, Debug)]
pub(crate) struct MixedSolution {
    pub value: Rational,
    pub y: Vec<Rational>,
    pub nodes: usize,
}

#[derive(Clone, Debug)]
struct Node {
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
    bound: Rational,
    y: Vec<Rational>,
}

impl MixedProblem {
    fn relaxation(&self, lower: &[Option<Rational>], upper: &[Option<Rational>]) -> Result<Option<(Rational, Vec<Rational>)>> {
        let n = self.c.len();
        // Column layout: one column per variable, plus a negative part for free ones.
        let mut neg_col = vec![None; n];
        let mut cols = n;
        for j in 0..n {
            if self.free[j] {
                neg_col[j] = Some(cols);
                cols += 1;
            }
        }
        let mut bound_rows: Vec<(usize, Rational, bool)> = Vec::new();
        for j in 0..n {
            if let Some(l) = &lower[j] {
                if self.free[j] || l.is_positive() {
                    bound_rows.push((j, l.clone(), true));
                }
            }
            if let Some(u) = &upper[j] {
                bound_rows.push((j, u.clone(), false));
            }
        }
        let total = cols + bound_rows.len();
        let mut a: RatMatrix = Vec::with_capacity(self.a.len() + bound_rows.len());
        let mut b = Vec::with_capacity(a.capacity());
        for (row, rhs) in self.a.iter().zip(&self.b) {
            let mut r = vec![Rational::zero(); total];
            for j in 0..n {
                r[j] = row[j].clone();
                if let Some(nc) = neg_col[j] {
                    r[nc] = -&row[j];
                }
            }
            a.push(r);
            b.push(rhs.clone());
        }
        for (k, (j, val, is_lower)) in bound_rows.into_iter().enumerate() {
            let mut r = vec![Rational::zero(); total];
            r[j] = Rational::one();
            if let Some(nc) = neg_col[j] {
                r[nc] = -Rational::one();
            }
            r[cols + k] = if is_lower { -Rational::one() } else { Rational::one() };
            a.push(r);
            b.push(val);
        }
        let mut c = vec![Rational::zero(); total];
        for j in 0..n {
            c[j] = self.c[j].clone();
            if let Some(nc) = neg_col[j] {
                c[nc] = -&self.c[j];
            }
        }
        match solve_standard(&StandardLp { a, b, c }) {
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(MirError::Unbounded),
            LpOutcome::Optimal(v) => {
                let y = (0..n)
                    .map(|j| match neg_col[j] {
                        Some(nc) => &v.x[j] - &v.x[nc],
                        None => v.x[j].clone(),
                    })
                    .collect();
                Ok(Some((v.value, y)))
            }
        }
    }

    /// Most fractional integer variable, lowest index on ties.
    fn branching_variable(&self, y: &[Rational]) -> Option<usize> {
        let half = Rational::new(1.into(), 2.into());
        let mut best: Option<(usize, Rational)> = None;
        for (j, v) in y.iter().enumerate() {
            if !self.integer[j] || v.is_integer() {
                continue;
            }
            let frac = v - v.floor();
            let dist = (&frac - &half).abs();
            if best.as_ref().map_or(true, |(_, d)| dist < *d) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Whether `a y = b` has a solution with the integer variables integral,
    /// ignoring signs and bounds. Eliminates the continuous columns with a
    /// left null-space basis and tests the remaining lattice system.
    fn lattice_feasible(&self) -> bool {
        let cont: Vec<usize> = (0..self.c.len()).filter(|&j| !self.integer[j]).collect();
        let ints: Vec<usize> = (0..self.c.len()).filter(|&j| self.integer[j]).collect();
        let rows = self.a.len();
        let a_c_t: RatMatrix = cont
            .iter()
            .map(|&j| (0..rows).map(|i| self.a[i][j].clone()).collect())
            .collect();
        let left = if cont.is_empty() {
            (0..rows)
                .map(|i| (0..rows).map(|k| if i == k { Rational::one() } else { Rational::zero() }).collect())
                .collect()
        } else {
            null_space(&a_c_t, rows)
        };
        let mut sys: RatMatrix = Vec::new();
        let mut rhs = Vec::new();
        for u in &left {
            let mut row: Vec<Rational> = ints
                .iter()
                .map(|&j| (0..rows).map(|i| &u[i] * &self.a[i][j]).sum())
                .collect();
            row.push(dot(u, &self.b));
            let mut scaled = integer_scaled(&row);
            rhs.push(scaled.pop().expect("rhs entry"));
            sys.push(scaled);
        }
        integer_solvable(&sys, &rhs)
    }

    pub fn solve(&self, node_budget: usize) -> Result<MixedSolution> {
        let n = self.c.len();
        if !self.lattice_feasible() {
            return Err(MirError::Infeasible);
        }
        let mut nodes = 1usize;
        let root_lower = vec![None; n];
        let root_upper = self.upper.clone();
        let Some((bound, y)) = self.relaxation(&root_lower, &root_upper)? else {
            return Err(MirError::Infeasible);
        };
        let mut stack = vec![Node {
            lower: root_lower,
            upper: root_upper,
            bound,
            y,
        }];
        let mut incumbent: Option<(Rational, Vec<Rational>)> = None;
        while let Some(node) = stack.pop() {
            if let Some((best, _)) = &incumbent {
                if node.bound >= *best {
                    continue;
                }
            }
            let Some(j) = self.branching_variable(&node.y) else {
                incumbent = Some((node.bound, node.y));
                continue;
            };
            let v = &node.y[j];
            let mut children = Vec::with_capacity(2);
            for down in [true, false] {
                let mut lower = node.lower.clone();
                let mut upper = node.upper.clone();
                if down {
                    let f = v.floor();
                    upper[j] = Some(match &upper[j] {
                        Some(u) if *u < f => u.clone(),
                        _ => f,
                    });
                } else {
                    let cl = v.ceil();
                    lower[j] = Some(match &lower[j] {
                        Some(l) if *l > cl => l.clone(),
                        _ => cl,
                    });
                }
                nodes += 1;
                if nodes > node_budget {
                    return Err(MirError::BudgetExhausted { budget: node_budget });
                }
                if let Some((bound, y)) = self.relaxation(&lower, &upper)? {
                    if incumbent.as_ref().is_some_and(|(best, _)| bound >= *best) {
                        continue;
                    }
                    // Integral children become incumbents right away; otherwise
                    // the dive through a better fractional sibling may not end.
                    if self.branching_variable(&y).is_none() {
                        incumbent = Some((bound, y));
                    } else {
                        children.push(Node { lower, upper, bound, y });
                    }
                }
            }
            // Depth first; the child with the better bound is explored next.
            children.sort_by(|a, b| b.bound.cmp(&a.bound));
            stack.extend(children);
        }
        match incumbent {
            Some((value, y)) => Ok(MixedSolution { value, y, nodes }),
            None => Err(MirError::Infeasible),
        }
    }
}
