//! Exact evaluation of the value function `v^q` and its LP relaxation.
//!
//! These are the ground-truth oracles: rational simplex for `v^q_LP` and
//! branch-and-bound for `v^q`. Every approximation is tested against them.

pub(crate) mod branch;
pub(crate) mod enumerate;
pub(crate) mod simplex;

use num_traits::{One, Zero};

use crate::error::{MirError, Result};
use crate::instance::Instance;
use crate::linalg::{dot, int, solve, to_rat_matrix, transpose, IntMatrix, RatMatrix, Rational};
use branch::MixedProblem;
use simplex::{solve_standard, LpOutcome, StandardLp};

pub use enumerate::ValueEvaluator;

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Optimal solution of `min{qᵀy | Wy = s, y ≥ 0}` with its dual certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: Rational,
    pub primal: Vec<Rational>,
    /// `λ` with `λᵀW ≤ qᵀ` and `λᵀs = value`.
    pub dual: Vec<Rational>,
    /// Basic columns (0-based), one per nonredundant row.
    pub basis_columns: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MipSolution {
    pub value: Rational,
    pub incumbent: Vec<Rational>,
    pub node_count: usize,
}

fn check_dims(q: &[Rational], s: &[Rational], inst: &Instance) -> Result<()> {
    if q.len() != inst.n_vars() {
        return Err(MirError::InvalidArgument(format!(
            "cost vector has length {}, expected {}",
            q.len(),
            inst.n_vars()
        )));
    }
    if s.len() != inst.m {
        return Err(MirError::InvalidArgument(format!(
            "right-hand side has length {}, expected {}",
            s.len(),
            inst.m
        )));
    }
    Ok(())
}

pub fn solve_lp(q: &[Rational], s: &[Rational], inst: &Instance) -> Result<LpSolution> {
    check_dims(q, s, inst)?;
    let a = to_rat_matrix(&inst.w);
    let lp = StandardLp {
        a: a.clone(),
        b: s.to_vec(),
        c: q.to_vec(),
    };
    let vertex = match solve_standard(&lp) {
        LpOutcome::Optimal(v) => v,
        LpOutcome::Infeasible => return Err(MirError::Infeasible),
        LpOutcome::Unbounded => return Err(MirError::Unbounded),
    };
    let kept: Vec<(usize, usize)> = vertex
        .basis
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.map(|col| (i, col)))
        .collect();
    // Bᵀλ = q_B on the nonredundant rows; redundant rows get λ_i = 0.
    let bt: RatMatrix = kept
        .iter()
        .map(|&(_, col)| kept.iter().map(|&(row, _)| a[row][col].clone()).collect())
        .collect();
    let qb: Vec<Rational> = kept.iter().map(|&(_, col)| q[col].clone()).collect();
    let sub = solve(&bt, &qb).expect("optimal basis is nonsingular");
    let mut dual = vec![Rational::zero(); inst.m];
    for (&(row, _), v) in kept.iter().zip(sub) {
        dual[row] = v;
    }
    Ok(LpSolution {
        value: vertex.value,
        primal: vertex.x,
        dual,
        basis_columns: kept.iter().map(|&(_, c)| c).collect(),
    })
}

pub fn solve_mip(q: &[Rational], s: &[Rational], inst: &Instance, node_budget: usize) -> Result<MipSolution> {
    check_dims(q, s, inst)?;
    if node_budget == 0 {
        return Err(MirError::InvalidArgument("node budget must be at least 1".into()));
    }
    let n = inst.n_vars();
    let problem = MixedProblem {
        a: to_rat_matrix(&inst.w),
        b: s.to_vec(),
        c: q.to_vec(),
        integer: inst.integer_mask.clone(),
        free: vec![false; n],
        upper: vec![None; n],
    };
    let sol = problem.solve(node_budget)?;
    Ok(MipSolution {
        value: sol.value,
        incumbent: sol.y,
        node_count: sol.nodes,
    })
}

/// A point of `{λ : λᵀW ≤ q}`, or `None` when that set is empty.
pub fn dual_feasible_point(w: &IntMatrix, q: &[Rational]) -> Option<Vec<Rational>> {
    let m = w.len();
    let n = q.len();
    let wt = transpose(&to_rat_matrix(w));
    // Wᵀλ⁺ − Wᵀλ⁻ + u = q with all parts nonnegative.
    let a: RatMatrix = (0..n)
        .map(|j| {
            let mut row: Vec<Rational> = wt[j].clone();
            row.extend(wt[j].iter().map(|v| -v));
            row.extend((0..n).map(|k| if k == j { Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    let lp = StandardLp {
        a,
        b: q.to_vec(),
        c: vec![Rational::zero(); 2 * m + n],
    };
    match solve_standard(&lp) {
        LpOutcome::Optimal(v) => Some((0..m).map(|i| &v.x[i] - &v.x[m + i]).collect()),
        _ => None,
    }
}

/// `Wy = s, y ≥ 0` feasibility.
pub fn in_column_cone(w: &IntMatrix, s: &[Rational]) -> bool {
    let n = w.first().map_or(0, Vec::len);
    let lp = StandardLp {
        a: to_rat_matrix(w),
        b: s.to_vec(),
        c: vec![Rational::zero(); n],
    };
    matches!(solve_standard(&lp), LpOutcome::Optimal(_))
}

/// A signed unit vector outside the cone generated by the columns of `w`;
/// `None` exactly when the columns positively span ℝ^m.
pub fn cone_gap_witness(w: &IntMatrix) -> Option<Vec<Rational>> {
    let m = w.len();
    for i in 0..m {
        for sign in [1, -1] {
            let e: Vec<Rational> = (0..m).map(|k| if k == i { int(sign) } else { int(0) }).collect();
            if !in_column_cone(w, &e) {
                return Some(e);
            }
        }
    }
    None
}

/// `(bounded, spans)`: whether `{λ : λᵀW ≤ q}` is nonempty and whether the
/// columns of `W` positively span ℝ^m.
pub fn check_recourse_assumptions(inst: &Instance, q_probe: &[Rational]) -> (bool, bool) {
    (
        dual_feasible_point(&inst.w, q_probe).is_some(),
        cone_gap_witness(&inst.w).is_none(),
    )
}

/// `λᵀW ≤ qᵀ` componentwise.
pub fn is_dual_feasible(w: &IntMatrix, lambda: &[Rational], q: &[Rational]) -> bool {
    let wr = to_rat_matrix(w);
    (0..q.len()).all(|j| {
        let col: Vec<Rational> = wr.iter().map(|r| r[j].clone()).collect();
        dot(lambda, &col) <= q[j]
    })
}
