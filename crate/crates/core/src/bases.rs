//! Dual bases of `W`: nonsingular `m×m` column submatrices, their dual
//! vertices `λ_k = q_Bᵀ B⁻¹`, cones `Λ^k = {s : B⁻¹s ≥ 0}` and margins.

use itertools::Itertools;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{MirError, Result};
use crate::instance::Instance;
use crate::linalg::{dot, int_det, inverse, to_f64, to_rat_matrix, IntMatrix, RatMatrix, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct DualBasis {
    /// Position in the enumeration order (0-based).
    pub index: usize,
    /// Basic columns of `W`, increasing.
    pub columns: Vec<usize>,
    pub b: IntMatrix,
    pub b_inv: RatMatrix,
    /// `|det B|`.
    pub p: u64,
    /// Nonbasic columns, increasing.
    pub n_columns: Vec<usize>,
    /// `B⁻¹W`, one column per column of `W`.
    pub tableau: RatMatrix,
    pub b_inv_f64: Vec<Vec<f64>>,
}

impl DualBasis {
    pub fn m(&self) -> usize {
        self.columns.len()
    }

    /// `B⁻¹s`.
    pub fn coordinates(&self, s: &[Rational]) -> Vec<Rational> {
        self.b_inv.iter().map(|row| dot(row, s)).collect()
    }

    pub fn coordinates_f64(&self, s: &[f64]) -> Vec<f64> {
        self.b_inv_f64
            .iter()
            .map(|row| row.iter().zip(s).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `B ℓ` for an integer vector `ℓ`.
    pub fn lattice_point(&self, l: &[i64]) -> Vec<i64> {
        self.b
            .iter()
            .map(|row| row.iter().zip(l).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Reduced cost `q_j − λᵀW_j` of every column of `W` (zero on basic columns).
    pub fn reduced_costs_all(&self, q: &[Rational]) -> Vec<Rational> {
        let qb: Vec<Rational> = self.columns.iter().map(|&c| q[c].clone()).collect();
        (0..q.len())
            .map(|j| {
                let col: Vec<Rational> = self.tableau.iter().map(|r| r[j].clone()).collect();
                &q[j] - dot(&qb, &col)
            })
            .collect()
    }

    pub fn is_dual_feasible(&self, q: &[Rational]) -> bool {
        self.reduced_costs_all(q).iter().all(|r| !r.is_negative())
    }
}

/// All nonsingular `m×m` column submatrices in lexicographic column order.
pub fn enumerate_bases(inst: &Instance) -> Vec<DualBasis> {
    let m = inst.m;
    let n = inst.n_vars();
    let w = to_rat_matrix(&inst.w);
    let mut out = Vec::new();
    for columns in (0..n).combinations(m) {
        let b: IntMatrix = inst.w.iter().map(|row| columns.iter().map(|&c| row[c]).collect()).collect();
        let det = int_det(&b);
        if det.is_zero() {
            continue;
        }
        let b_inv = inverse(&to_rat_matrix(&b)).expect("nonzero determinant");
        let tableau: RatMatrix = b_inv
            .iter()
            .map(|row| (0..n).map(|j| (0..m).map(|i| &row[i] * &w[i][j]).sum()).collect())
            .collect();
        let b_inv_f64 = b_inv.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        out.push(DualBasis {
            index: out.len(),
            n_columns: (0..n).filter(|c| !columns.contains(c)).collect(),
            columns,
            b,
            b_inv,
            p: det.abs().to_u64().expect("determinant fits in u64"),
            tableau,
            b_inv_f64,
        });
    }
    out
}

/// `K^q`: positions in `bases` whose vertex is dual feasible for `q`.
pub fn dual_feasible_indices(q: &[Rational], bases: &[DualBasis]) -> Vec<usize> {
    bases
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_dual_feasible(q))
        .map(|(i, _)| i)
        .collect()
}

/// `λᵀ = q_Bᵀ B⁻¹`.
pub fn dual_vertex(q: &[Rational], basis: &DualBasis) -> Vec<Rational> {
    let m = basis.m();
    (0..m)
        .map(|j| {
            basis
                .columns
                .iter()
                .enumerate()
                .map(|(i, &c)| &q[c] * &basis.b_inv[i][j])
                .sum()
        })
        .collect()
}

/// Whether the closed ball of radius `d` around `s` lies in `Λ^k`, via the
/// rowwise test `(B⁻¹s)_i ≥ d‖row_i(B⁻¹)‖₂`. Exact when `d = 0`.
pub fn cone_margin_contains(basis: &DualBasis, s: &[Rational], d: f64) -> bool {
    let coords = basis.coordinates(s);
    if d == 0.0 {
        return coords.iter().all(|c| !c.is_negative());
    }
    coords.iter().zip(&basis.b_inv_f64).all(|(c, row)| {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        to_f64(c) >= d * norm
    })
}

/// Same test for a floating-point right-hand side.
pub fn cone_margin_contains_f64(basis: &DualBasis, s: &[f64], d: f64) -> bool {
    basis
        .coordinates_f64(s)
        .iter()
        .zip(&basis.b_inv_f64)
        .all(|(c, row)| *c >= d * row.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `v_LP(s) = max_{k ∈ K^q} λ_kᵀs`.
pub fn lp_by_enumeration(q: &[Rational], s: &[Rational], bases: &[DualBasis]) -> Result<Rational> {
    dual_feasible_indices(q, bases)
        .into_iter()
        .map(|k| dot(&dual_vertex(q, &bases[k]), s))
        .max()
        .ok_or_else(|| MirError::EmptyDualSet("no dual feasible basis for this cost vector".into()))
}
