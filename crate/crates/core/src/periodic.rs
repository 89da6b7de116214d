//! Gomory relaxations and the periodic remainders `ψ_k`, their means `Γ_k`,
//! reduced costs and the constant `γ₂`.
//!
//! For a basis `B` with nonbasic columns `N`, the Gomory relaxation keeps all
//! integrality but frees the sign of the basic variables:
//!
//! ```text
//! v_B(s) = λᵀs + ψ(s),   ψ(s) = min { q̄_Nᵀ y_N : (B⁻¹s − B⁻¹N y_N)_R ∈ ℤ^R, y_N ≥ 0, y_N integral where required }
//! ```
//!
//! with `R` the rows whose basic variable is integer. Because `p·B⁻¹` is
//! integral and `q̄_N ≥ 0`, an optimal `y_N` exists in `[0, p]^N`, which makes
//! the candidate set finite and independent of `q`.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bases::{cone_margin_contains, dual_vertex, enumerate_bases, DualBasis};
use crate::distributions::mix_seed;
use crate::error::{MirError, Result};
use crate::exact::branch::MixedProblem;
use crate::exact::enumerate::{cartesian, BasicSystem};
use crate::exact::{solve_mip, DEFAULT_NODE_BUDGET};
use crate::instance::Instance;
use crate::linalg::{dot, int, to_f64, to_rat_matrix, RatMatrix, Rational};

/// Ladder of margins tried by [`d_emp`], in units of `p_k`.
pub const MARGIN_LADDER: [u64; 5] = [0, 1, 2, 4, 8];

const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedCosts {
    /// Nonbasic columns, in the order of `values`.
    pub columns: Vec<usize>,
    /// `q̄_N = q_N − (q_Bᵀ B⁻¹ N)ᵀ`.
    pub values: Vec<Rational>,
    /// `M` with `q̄_Nᵀ = qᵀM`; row `j` belongs to column `j` of `W`.
    pub m: RatMatrix,
}

pub fn reduced_costs(basis: &DualBasis, q: &[Rational], inst: &Instance) -> ReducedCosts {
    let n = inst.n_vars();
    let cols = &basis.n_columns;
    let mut m = vec![vec![Rational::zero(); cols.len()]; n];
    for (t, &c) in cols.iter().enumerate() {
        m[c][t] = int(1);
        for (i, &b) in basis.columns.iter().enumerate() {
            m[b][t] = -basis.tableau[i][c].clone();
        }
    }
    let values: Vec<Rational> = (0..cols.len())
        .map(|t| (0..n).map(|j| &q[j] * &m[j][t]).sum())
        .collect();
    debug_assert!({
        let all = basis.reduced_costs_all(q);
        cols.iter().zip(&values).all(|(&c, v)| all[c] == *v)
    });
    ReducedCosts {
        columns: cols.clone(),
        values,
        m,
    }
}

fn require_dual_feasible(basis: &DualBasis, q: &[Rational]) -> Result<()> {
    if basis.is_dual_feasible(q) {
        Ok(())
    } else {
        Err(MirError::Unbounded)
    }
}

/// `v_B(s)` by branch-and-bound on the relaxed problem (exact).
pub fn gomory_value(basis: &DualBasis, q: &[Rational], s: &[Rational], inst: &Instance) -> Result<Rational> {
    require_dual_feasible(basis, q)?;
    let n = inst.n_vars();
    let p = int(basis.p as i64);
    let problem = MixedProblem {
        a: to_rat_matrix(&inst.w),
        b: s.to_vec(),
        c: q.to_vec(),
        integer: inst.integer_mask.clone(),
        free: (0..n).map(|j| basis.columns.contains(&j)).collect(),
        upper: (0..n)
            .map(|j| (!basis.columns.contains(&j)).then(|| p.clone()))
            .collect(),
    };
    Ok(problem.solve(DEFAULT_NODE_BUDGET)?.value)
}

/// `ψ_k(s) = v_{B^k}(s) − λ_kᵀs` (exact).
pub fn psi_value(basis: &DualBasis, q: &[Rational], s: &[Rational], inst: &Instance) -> Result<Rational> {
    let g = gomory_value(basis, q, s, inst)?;
    Ok(g - dot(&dual_vertex(q, basis), s))
}

/// Floating-point evaluator of `ψ_k` for one basis, valid for every `q` for
/// which the basis is dual feasible.
#[derive(Clone, Debug)]
pub struct GroupEvaluator {
    basis: DualBasis,
    /// Rows of `B⁻¹` whose basic variable is integer.
    int_rows: Vec<usize>,
    /// Positions within `n_columns` of integer and continuous nonbasics.
    int_pos: Vec<usize>,
    cont_pos: Vec<usize>,
    h_int: Vec<Vec<f64>>,
    h_cont: BasicSystem,
    int_combos: Vec<Vec<i64>>,
    cont_lo: Vec<f64>,
    cont_hi: Vec<f64>,
    p: f64,
}

impl GroupEvaluator {
    pub fn new(basis: &DualBasis, inst: &Instance) -> Self {
        let int_rows: Vec<usize> = (0..basis.m())
            .filter(|&i| inst.integer_mask[basis.columns[i]])
            .collect();
        let int_pos: Vec<usize> = (0..basis.n_columns.len())
            .filter(|&t| inst.integer_mask[basis.n_columns[t]])
            .collect();
        let cont_pos: Vec<usize> = (0..basis.n_columns.len())
            .filter(|&t| !inst.integer_mask[basis.n_columns[t]])
            .collect();
        let h = |i: usize, t: usize| basis.tableau[i][basis.n_columns[t]].clone();
        let h_int = int_rows
            .iter()
            .map(|&i| int_pos.iter().map(|&t| to_f64(&h(i, t))).collect())
            .collect();
        let h_cont_rat: RatMatrix = int_rows
            .iter()
            .map(|&i| cont_pos.iter().map(|&t| h(i, t)).collect())
            .collect();
        let p = basis.p as f64;
        let cont_lo = h_cont_rat
            .iter()
            .map(|r| r.iter().map(|v| (to_f64(v) * p).min(0.0)).sum())
            .collect();
        let cont_hi = h_cont_rat
            .iter()
            .map(|r| r.iter().map(|v| (to_f64(v) * p).max(0.0)).sum())
            .collect();
        let ranges: Vec<Vec<i64>> = int_pos.iter().map(|_| (0..basis.p as i64).collect()).collect();
        GroupEvaluator {
            basis: basis.clone(),
            h_cont: BasicSystem::new(&h_cont_rat, cont_pos.len()),
            int_combos: cartesian(&ranges),
            int_rows,
            int_pos,
            cont_pos,
            h_int,
            cont_lo,
            cont_hi,
            p,
        }
    }

    pub fn basis(&self) -> &DualBasis {
        &self.basis
    }

    /// Fractional parts of the integer rows of `B⁻¹s`; `ψ` depends on `s`
    /// only through this residue.
    pub fn residue(&self, s: &[f64]) -> Vec<f64> {
        let g = self.basis.coordinates_f64(s);
        self.int_rows.iter().map(|&i| g[i] - g[i].floor()).collect()
    }

    /// Pareto-minimal nonbasic vectors `y_N` (indexed like `n_columns`)
    /// among the vertices of the relaxed feasible set in `[0, p]^N`.
    pub fn candidates(&self, s: &[f64]) -> Vec<Vec<f64>> {
        let nn = self.basis.n_columns.len();
        if self.int_rows.is_empty() {
            return vec![vec![0.0; nn]];
        }
        let g = self.residue(s);
        let nc = self.cont_pos.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        for yi in &self.int_combos {
            let t: Vec<f64> = g
                .iter()
                .zip(&self.h_int)
                .map(|(gi, row)| gi - row.iter().zip(yi).map(|(a, &b)| a * b as f64).sum::<f64>())
                .collect();
            let z_ranges: Vec<Vec<i64>> = t
                .iter()
                .zip(self.cont_lo.iter().zip(&self.cont_hi))
                .map(|(ti, (lo, hi))| {
                    let a = (ti - hi - EPS).ceil() as i64;
                    let b = (ti - lo + EPS).floor() as i64;
                    (a..=b).collect()
                })
                .collect();
            for z in cartesian(&z_ranges) {
                let rhs: Vec<f64> = t.iter().zip(&z).map(|(ti, &zi)| ti - zi as f64).collect();
                for (k, (subset, _)) in self.h_cont.subsets.iter().enumerate() {
                    let others: Vec<usize> = (0..nc).filter(|j| !subset.contains(j)).collect();
                    for mask in 0u32..(1 << others.len()) {
                        let mut r = rhs.clone();
                        let mut fixed = vec![0.0; nc];
                        for (bit, &j) in others.iter().enumerate() {
                            if mask & (1 << bit) != 0 {
                                fixed[j] = self.p;
                                for (ri, row) in r.iter_mut().zip(&self.h_cont.a) {
                                    *ri -= row[j] * self.p;
                                }
                            }
                        }
                        let Some(ys) = self.h_cont.solve_subset(k, &r, EPS) else {
                            continue;
                        };
                        if subset.iter().any(|&j| ys[j] < -EPS || ys[j] > self.p + EPS) {
                            continue;
                        }
                        let mut y = vec![0.0; nn];
                        for (&pos, &v) in self.int_pos.iter().zip(yi) {
                            y[pos] = v as f64;
                        }
                        for j in 0..nc {
                            let v = if subset.contains(&j) { ys[j].clamp(0.0, self.p) } else { fixed[j] };
                            y[self.cont_pos[j]] = v;
                        }
                        out.push(y);
                    }
                }
            }
        }
        pareto_minimal(out)
    }

    /// `ψ(s)` for the reduced costs `qbar` (indexed like `n_columns`);
    /// `None` when the relaxed problem is infeasible at `s`.
    pub fn psi(&self, qbar: &[f64], s: &[f64]) -> Option<f64> {
        self.candidates(s)
            .iter()
            .map(|y| y.iter().zip(qbar).map(|(a, b)| a * b).sum::<f64>())
            .min_by(f64::total_cmp)
    }
}

fn pareto_minimal(mut cands: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    cands.sort_by(|a, b| a.iter().sum::<f64>().total_cmp(&b.iter().sum::<f64>()));
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for c in cands {
        if !kept.iter().any(|k| k.iter().zip(&c).all(|(a, b)| *a <= b + EPS)) {
            kept.push(c);
        }
    }
    kept
}

/// Midpoints of a `resolution^m` grid on `[0, p)^m`, in row-major order.
fn grid_points(m: usize, p: f64, resolution: usize) -> impl Iterator<Item = Vec<f64>> {
    let total = resolution.pow(m as u32);
    (0..total).map(move |mut idx| {
        let mut s = vec![0.0; m];
        for v in s.iter_mut().rev() {
            *v = p * ((idx % resolution) as f64 + 0.5) / resolution as f64;
            idx /= resolution;
        }
        s
    })
}

fn grid_mean(ev: &GroupEvaluator, qbar: &[f64], resolution: usize) -> Result<f64> {
    let m = ev.basis.m();
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in grid_points(m, ev.p, resolution) {
        sum += ev.psi(qbar, &s).ok_or(MirError::Infeasible)?;
        count += 1;
    }
    Ok(sum / count as f64)
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(MirError::InvalidArgument("resolution must be at least 2".into()));
    }
    Ok(())
}

/// Default per-axis grid for `Γ` by dimension.
pub fn default_resolution(m: usize) -> usize {
    match m {
        1 => 4096,
        2 => 512,
        _ => 64,
    }
}

/// `(Γ_k, err)`: midpoint-grid mean of `ψ_k` over `[0, p_k)^m` and the change
/// from the half-resolution grid.
pub fn gamma_mean(basis: &DualBasis, q: &[Rational], inst: &Instance, resolution: usize) -> Result<(f64, f64)> {
    check_resolution(resolution)?;
    require_dual_feasible(basis, q)?;
    let ev = GroupEvaluator::new(basis, inst);
    let qbar: Vec<f64> = reduced_costs(basis, q, inst).values.iter().map(to_f64).collect();
    let fine = grid_mean(&ev, &qbar, resolution)?;
    let coarse = grid_mean(&ev, &qbar, resolution / 2)?;
    Ok((fine, (fine - coarse).abs()))
}

/// Precomputed candidate sets on a `Γ` grid, so that `Γ_k` for a new cost
/// vector costs one pass over the points with more than one candidate.
#[derive(Clone, Debug)]
pub struct GammaTable {
    resolution: usize,
    points: usize,
    /// Sum of the unique candidate over points that have only one.
    linear: Vec<f64>,
    /// Flattened candidate lists for the remaining points.
    multi: Vec<f64>,
    multi_offsets: Vec<usize>,
    width: usize,
}

impl GammaTable {
    pub fn build(ev: &GroupEvaluator, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        let width = ev.basis.n_columns.len();
        let mut linear = vec![0.0; width];
        let mut multi = Vec::new();
        let mut multi_offsets = vec![0];
        let mut points = 0;
        for s in grid_points(ev.basis.m(), ev.p, resolution) {
            let c = ev.candidates(&s);
            match c.len() {
                0 => return Err(MirError::Infeasible),
                1 => linear.iter_mut().zip(&c[0]).for_each(|(a, b)| *a += b),
                _ => {
                    c.iter().for_each(|y| multi.extend_from_slice(y));
                    multi_offsets.push(multi.len());
                }
            }
            points += 1;
        }
        Ok(GammaTable {
            resolution,
            points,
            linear,
            multi,
            multi_offsets,
            width,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn gamma(&self, qbar: &[f64]) -> f64 {
        let mut sum: f64 = self.linear.iter().zip(qbar).map(|(a, b)| a * b).sum();
        if self.width > 0 {
            for w in self.multi_offsets.windows(2) {
                sum += self.multi[w[0]..w[1]]
                    .chunks(self.width)
                    .map(|y| y.iter().zip(qbar).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
            }
        }
        sum / self.points as f64
    }
}

/// Fine and half-resolution tables for one basis, giving `(Γ, err)` for any
/// dual-feasible cost vector.
#[derive(Clone, Debug)]
pub struct GammaTables {
    pub fine: GammaTable,
    pub coarse: GammaTable,
}

impl GammaTables {
    pub fn build(ev: &GroupEvaluator, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(GammaTables {
            fine: GammaTable::build(ev, resolution)?,
            coarse: GammaTable::build(ev, resolution / 2)?,
        })
    }

    pub fn gamma(&self, qbar: &[f64]) -> (f64, f64) {
        let f = self.fine.gamma(qbar);
        (f, (f - self.coarse.gamma(qbar)).abs())
    }
}

/// `γ₂ = max_k p_k‖M^k ι‖∞` over all nonsingular bases.
pub fn gamma2_constant(inst: &Instance) -> Rational {
    enumerate_bases(inst)
        .iter()
        .map(|b| {
            if b.n_columns.is_empty() {
                return Rational::zero();
            }
            let basic_max = (0..b.m())
                .map(|i| b.n_columns.iter().map(|&c| b.tableau[i][c].clone()).sum::<Rational>().abs())
                .max()
                .unwrap_or_else(Rational::zero);
            let norm = basic_max.max(int(1));
            norm * int(b.p as i64)
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

/// `q̄^{kl}`: zero where column `B^k_i` is also basic in `l`, otherwise its
/// reduced cost with respect to basis `l`.
pub fn qbar_between(basis_k: &DualBasis, basis_l: &DualBasis, q: &[Rational]) -> Vec<Rational> {
    let reduced = basis_l.reduced_costs_all(q);
    basis_k
        .columns
        .iter()
        .map(|&c| {
            if basis_l.columns.contains(&c) {
                Rational::zero()
            } else {
                reduced[c].clone()
            }
        })
        .collect()
}

/// One affine-plus-periodic piece `λ_kᵀs + ψ_k(s)` of `v^q`.
#[derive(Clone, Debug)]
pub struct PeriodicComponent {
    pub basis_index: usize,
    pub lambda: Vec<Rational>,
    pub lambda_f64: Vec<f64>,
    /// Reduced costs over the nonbasic columns, for `ψ` evaluation.
    pub qbar: Vec<f64>,
    pub gamma: f64,
    pub gamma_err: f64,
    pub period: u64,
}

/// Random rational point of `Λ^k(d)` written as `s = B w` with
/// `w_i ≥ d‖row_i(B⁻¹)‖₂`; `w` has denominator 16.
pub fn probe_in_margin(basis: &DualBasis, d: f64, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let w: Vec<Rational> = basis
        .b_inv_f64
        .iter()
        .map(|row| {
            let floor = d * row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let base = (floor * 16.0).ceil() as i64;
            let jitter = rng.random_range(0..=64 * basis.p as i64);
            Rational::new((base + jitter).into(), 16.into())
        })
        .collect();
    let b = to_rat_matrix(&basis.b);
    b.iter().map(|row| dot(row, &w)).collect()
}

/// Smallest margin `d ∈ {0,1,2,4,8}·p_k` at which `v(s) = λ_kᵀs + ψ_k(s)`
/// holds exactly on `probes` random points of `Λ^k(d)`; `None` when no rung
/// of the ladder certifies the identity.
pub fn d_emp(basis: &DualBasis, q: &[Rational], inst: &Instance, probes: usize, seed: u64) -> Result<Option<f64>> {
    require_dual_feasible(basis, q)?;
    let lambda = dual_vertex(q, basis);
    for (rung, &c) in MARGIN_LADDER.iter().enumerate() {
        let d = (c * basis.p) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xd3 + rung as u64));
        let mut holds = true;
        for _ in 0..probes {
            let s = probe_in_margin(basis, d, &mut rng);
            debug_assert!(cone_margin_contains(basis, &s, d));
            let v = solve_mip(q, &s, inst, DEFAULT_NODE_BUDGET)?.value;
            let psi = psi_value(basis, q, &s, inst)?;
            if v != dot(&lambda, &s) + psi {
                holds = false;
                break;
            }
        }
        if holds {
            return Ok(Some(d));
        }
    }
    Ok(None)
}
