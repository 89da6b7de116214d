//! Floating-point value-function evaluator for Monte Carlo use.
//!
//! `v^q(s)` is computed as a minimum over the integer part `y_I` of
//! `q_Iᵀy_I + LP_C(s − W_I y_I)`. The integer part only needs to range over
//! the proximity box `‖y_I − x*_I‖∞ ≤ n·Δ(W)` around an optimal vertex `x*` of
//! the LP relaxation, and every LP here is solved by enumerating basic
//! solutions, which is cheap at desk scale. The rational branch-and-bound
//! remains the reference; tests compare the two.

use itertools::Itertools;

use crate::error::{MirError, Result};
use crate::instance::Instance;
use crate::linalg::{independent_rows, inverse, max_subdeterminant, to_f64, to_rat_matrix, RatMatrix};

/// Basic solutions of `A y = r` for a fixed matrix `A`.
#[derive(Clone, Debug)]
pub(crate) struct BasicSystem {
    pub a: Vec<Vec<f64>>,
    pub independent: Vec<usize>,
    pub dependent: Vec<usize>,
    /// Column subsets of size `rank(A)` with nonsingular `A[independent, S]`
    /// and the inverse of that block.
    pub subsets: Vec<(Vec<usize>, Vec<Vec<f64>>)>,
    pub cols: usize,
}

impl BasicSystem {
    pub fn new(a: &RatMatrix, cols: usize) -> Self {
        let independent = independent_rows(a);
        let dependent = (0..a.len()).filter(|i| !independent.contains(i)).collect();
        let rank = independent.len();
        let subsets = (0..cols)
            .combinations(rank)
            .filter_map(|s| {
                let block: RatMatrix = independent
                    .iter()
                    .map(|&i| s.iter().map(|&j| a[i][j].clone()).collect())
                    .collect();
                let inv = if rank == 0 { Some(Vec::new()) } else { inverse(&block) }?;
                Some((s, inv.iter().map(|r| r.iter().map(to_f64).collect()).collect()))
            })
            .collect();
        BasicSystem {
            a: a.iter().map(|r| r.iter().map(to_f64).collect()).collect(),
            independent,
            dependent,
            subsets,
            cols,
        }
    }

    /// Solves the basic part for `subset` given right-hand side `r`; `None`
    /// when a dependent row is violated.
    pub fn solve_subset(&self, k: usize, r: &[f64], eps: f64) -> Option<Vec<f64>> {
        let (subset, inv) = &self.subsets[k];
        let rj: Vec<f64> = self.independent.iter().map(|&i| r[i]).collect();
        let ys: Vec<f64> = inv
            .iter()
            .map(|row| row.iter().zip(&rj).map(|(a, b)| a * b).sum())
            .collect();
        let mut y = vec![0.0; self.cols];
        for (&j, v) in subset.iter().zip(&ys) {
            y[j] = *v;
        }
        let ok = self.dependent.iter().all(|&d| {
            let lhs: f64 = self.a[d].iter().zip(&y).map(|(a, b)| a * b).sum();
            (lhs - r[d]).abs() <= eps
        });
        ok.then_some(y)
    }

    /// `min{cᵀy : A y = r, y ≥ 0}` over basic solutions; `None` if infeasible.
    pub fn min_cost(&self, c: &[f64], r: &[f64], eps: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for k in 0..self.subsets.len() {
            let Some(y) = self.solve_subset(k, r, eps) else {
                continue;
            };
            if y.iter().any(|&v| v < -eps) {
                continue;
            }
            let cost: f64 = c.iter().zip(&y).map(|(a, b)| a * b).sum();
            if best.is_none_or(|b| cost < b) {
                best = Some(cost);
            }
        }
        best
    }
}

/// Fast evaluator of `v^q(s)` in `f64`.
#[derive(Clone, Debug)]
pub struct ValueEvaluator {
    integer_cols: Vec<usize>,
    continuous_cols: Vec<usize>,
    w: Vec<Vec<f64>>,
    full: BasicSystem,
    continuous: BasicSystem,
    radius: f64,
}

impl ValueEvaluator {
    pub fn new(inst: &Instance) -> Self {
        let w = to_rat_matrix(&inst.w);
        let n = inst.n_vars();
        let integer_cols: Vec<usize> = (0..n).filter(|&j| inst.integer_mask[j]).collect();
        let continuous_cols: Vec<usize> = (0..n).filter(|&j| !inst.integer_mask[j]).collect();
        let wc: RatMatrix = w
            .iter()
            .map(|r| continuous_cols.iter().map(|&j| r[j].clone()).collect())
            .collect();
        let delta = max_subdeterminant(&inst.w).max(1);
        ValueEvaluator {
            w: w.iter().map(|r| r.iter().map(to_f64).collect()).collect(),
            full: BasicSystem::new(&w, n),
            continuous: BasicSystem::new(&wc, continuous_cols.len()),
            radius: (n as u64 * delta) as f64,
            integer_cols,
            continuous_cols,
        }
    }

    /// `v^q(s)`. Errors when the problem is infeasible or the LP relaxation
    /// is unbounded.
    pub fn value(&self, q: &[f64], s: &[f64]) -> Result<f64> {
        let scale = 1.0 + s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let eps = 1e-9 * scale;
        // An optimal LP vertex: best feasible basic solution.
        let mut lp: Option<(f64, Vec<f64>)> = None;
        for k in 0..self.full.subsets.len() {
            let Some(y) = self.full.solve_subset(k, s, eps) else {
                continue;
            };
            if y.iter().any(|&v| v < -eps) {
                continue;
            }
            let cost: f64 = q.iter().zip(&y).map(|(a, b)| a * b).sum();
            if lp.as_ref().is_none_or(|(b, _)| cost < *b) {
                lp = Some((cost, y));
            }
        }
        let Some((_, x_lp)) = lp else {
            return Err(MirError::Infeasible);
        };
        if !self.lp_bounded(q) {
            return Err(MirError::Unbounded);
        }
        let qc: Vec<f64> = self.continuous_cols.iter().map(|&j| q[j]).collect();
        let ranges: Vec<Vec<i64>> = self
            .integer_cols
            .iter()
            .map(|&j| {
                let lo = (x_lp[j] - self.radius - 1e-9).ceil().max(0.0) as i64;
                let hi = (x_lp[j] + self.radius + 1e-9).floor() as i64;
                (lo..=hi).collect()
            })
            .collect();
        let mut best: Option<f64> = None;
        let mut r = vec![0.0; s.len()];
        for combo in cartesian(&ranges) {
            let mut int_cost = 0.0;
            r.copy_from_slice(s);
            for (&j, &v) in self.integer_cols.iter().zip(&combo) {
                let v = v as f64;
                int_cost += q[j] * v;
                for (ri, row) in r.iter_mut().zip(&self.w) {
                    *ri -= row[j] * v;
                }
            }
            let cont = if self.continuous_cols.is_empty() {
                r.iter().all(|v| v.abs() <= eps).then_some(0.0)
            } else {
                self.continuous.min_cost(&qc, &r, eps)
            };
            if let Some(c) = cont {
                let total = int_cost + c;
                if best.is_none_or(|b| total < b) {
                    best = Some(total);
                }
            }
        }
        best.ok_or(MirError::Infeasible)
    }

    /// Some basis of `W` is dual feasible for `q` (so the LP is bounded).
    fn lp_bounded(&self, q: &[f64]) -> bool {
        let n = q.len();
        self.full.subsets.iter().any(|(cols, inv)| {
            let m = inv.len();
            let lambda: Vec<f64> = (0..m)
                .map(|j| (0..m).map(|i| q[cols[i]] * inv[i][j]).sum())
                .collect();
            (0..n).all(|j| {
                let lw: f64 = self
                    .full
                    .independent
                    .iter()
                    .zip(&lambda)
                    .map(|(&row, l)| l * self.full.a[row][j])
                    .sum();
                lw <= q[j] + 1e-9 * (1.0 + q[j].abs())
            })
        })
    }
}

/// All integer vectors with entry `i` drawn from `ranges[i]`; a single empty
/// vector when there are no ranges.
pub(crate) fn cartesian(ranges: &[Vec<i64>]) -> Vec<Vec<i64>> {
    ranges.iter().fold(vec![Vec::new()], |acc, r| {
        acc.iter()
            .flat_map(|prefix| {
                r.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}
