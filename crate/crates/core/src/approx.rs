//! The shifted LP-relaxation and α-approximations, and Monte Carlo estimates
//! of the recourse function `Q(x) = E[v^q(h − Tx)]` and its approximations.
//!
//! ```text
//! v̂^q(s)        = max_{k ∈ K^q} λ_kᵀs + Γ_k
//! ṽ^q_α(h, Tx)  = max_{k ∈ K^q} λ_kᵀ(h − Tx) + ψ_k(h − α)
//! ```
//!
//! Scenario `i` is drawn from a counter-based stream keyed by `(seed, i)` and
//! values are reduced in index order, so estimates do not depend on how work
//! is scheduled across threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bases::{dual_feasible_indices, dual_vertex, enumerate_bases, DualBasis};
use crate::distributions::{mean_and_se, mix_seed, CostDist, QtDraw, ScenarioSampler};
use crate::error::{MirError, Result};
use crate::exact::ValueEvaluator;
use crate::instance::Instance;
use crate::linalg::{to_f64, vec_to_f64, Rational};
use crate::periodic::{gamma_mean, reduced_costs, GammaTables, GroupEvaluator, PeriodicComponent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Which {
    Exact,
    Shifted,
    Alpha,
}

impl Which {
    pub fn as_str(self) -> &'static str {
        match self {
            Which::Exact => "exact",
            Which::Shifted => "shifted",
            Which::Alpha => "alpha",
        }
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Which {
    type Err = MirError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Which::Exact),
            "shifted" => Ok(Which::Shifted),
            "alpha" => Ok(Which::Alpha),
            other => Err(MirError::InvalidArgument(format!(
                "unknown evaluator {other:?} (expected exact, shifted or alpha)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Estimate {
    fn from_values(values: &[f64], seed: u64) -> Self {
        let (mean, std_error) = mean_and_se(values);
        Estimate {
            mean,
            std_error,
            n_samples: values.len(),
            seed,
        }
    }
}

/// `v̂(s) = max_k λ_kᵀs + Γ_k` over the given components.
pub fn v_hat(s: &[f64], components: &[PeriodicComponent]) -> Result<f64> {
    components
        .iter()
        .map(|c| dot_f64(&c.lambda_f64, s) + c.gamma)
        .max_by(f64::total_cmp)
        .ok_or_else(|| MirError::EmptyDualSet("no components".into()))
}

/// `ṽ_α(h, Tx) = max_{k ∈ K^q} λ_kᵀ(h − Tx) + ψ_k(h − α)`.
pub fn v_alpha(
    q: &[Rational],
    h: &[f64],
    tx: &[f64],
    alpha: &[f64],
    inst: &Instance,
    bases: &[DualBasis],
) -> Result<f64> {
    let ks = dual_feasible_indices(q, bases);
    if ks.is_empty() {
        return Err(MirError::EmptyDualSet("no dual feasible basis for this cost vector".into()));
    }
    let s: Vec<f64> = h.iter().zip(tx).map(|(a, b)| a - b).collect();
    let anchor: Vec<f64> = h.iter().zip(alpha).map(|(a, b)| a - b).collect();
    let mut best = f64::NEG_INFINITY;
    for k in ks {
        let lambda = vec_to_f64(&dual_vertex(q, &bases[k]));
        let qbar: Vec<f64> = reduced_costs(&bases[k], q, inst).values.iter().map(to_f64).collect();
        let psi = GroupEvaluator::new(&bases[k], inst)
            .psi(&qbar, &anchor)
            .ok_or(MirError::Infeasible)?;
        best = best.max(dot_f64(&lambda, &s) + psi);
    }
    Ok(best)
}

/// Components `(λ_k, Γ_k)` for every `k ∈ K^q`, with `Γ` on a
/// `resolution`-point grid per axis.
pub fn build_components(
    inst: &Instance,
    bases: &[DualBasis],
    q: &[Rational],
    resolution: usize,
) -> Result<Vec<PeriodicComponent>> {
    let ks = dual_feasible_indices(q, bases);
    if ks.is_empty() {
        return Err(MirError::EmptyDualSet("no dual feasible basis for this cost vector".into()));
    }
    ks.into_iter()
        .map(|k| {
            let basis = &bases[k];
            let lambda = dual_vertex(q, basis);
            let (gamma, gamma_err) = gamma_mean(basis, q, inst, resolution)?;
            Ok(PeriodicComponent {
                basis_index: k,
                lambda_f64: vec_to_f64(&lambda),
                lambda,
                qbar: reduced_costs(basis, q, inst).values.iter().map(to_f64).collect(),
                gamma,
                gamma_err,
                period: basis.p,
            })
        })
        .collect()
}

fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Affine piece of one scenario: `λ`, reduced costs and `Γ` of a basis.
#[derive(Clone, Debug)]
struct Piece {
    basis: usize,
    lambda: Vec<f64>,
    qbar: Vec<f64>,
    gamma: f64,
}

#[derive(Clone, Debug)]
enum CostPieces {
    /// One piece list per support point of a fixed or finite cost distribution.
    Discrete(Vec<Vec<Piece>>),
    /// Pieces rebuilt per draw; `Γ` tables per basis when needed.
    Continuous(Vec<Option<GammaTables>>),
}

/// Everything needed to evaluate `v`, `v̂` and `ṽ_α` on sampled scenarios.
#[derive(Clone, Debug)]
pub struct RecourseModel {
    inst: Instance,
    bases: Vec<DualBasis>,
    tableau_f64: Vec<Vec<Vec<f64>>>,
    groups: Vec<GroupEvaluator>,
    value: ValueEvaluator,
    sampler: ScenarioSampler,
    pieces: CostPieces,
    t_f64: Vec<Vec<Vec<f64>>>,
    alpha: Vec<f64>,
    gamma_res: usize,
    needs_gamma: bool,
}

impl RecourseModel {
    /// Prepares evaluation for the listed modes; `Γ` grids are only built
    /// when `Shifted` is among them.
    pub fn new(inst: &Instance, gamma_res: usize, modes: &[Which]) -> Result<Self> {
        if gamma_res < 2 {
            return Err(MirError::InvalidArgument("gamma resolution must be at least 2".into()));
        }
        let bases = enumerate_bases(inst);
        let groups: Vec<GroupEvaluator> = bases.iter().map(|b| GroupEvaluator::new(b, inst)).collect();
        let needs_gamma = modes.contains(&Which::Shifted);
        let pieces = match &inst.dist.q {
            CostDist::Fixed(v) => CostPieces::Discrete(vec![discrete_pieces(inst, &bases, v, gamma_res, needs_gamma)?]),
            CostDist::Finite { points, .. } => CostPieces::Discrete(
                points
                    .iter()
                    .map(|v| discrete_pieces(inst, &bases, v, gamma_res, needs_gamma))
                    .collect::<Result<_>>()?,
            ),
            CostDist::Uniform { .. } | CostDist::Normal { .. } => CostPieces::Continuous(if needs_gamma {
                groups
                    .iter()
                    .map(|g| GammaTables::build(g, gamma_res).ok())
                    .collect()
            } else {
                vec![None; bases.len()]
            }),
        };
        let sampler = ScenarioSampler::new(&inst.dist);
        let t_count = match &inst.dist.t {
            crate::distributions::TechDist::Fixed(_) => 1,
            crate::distributions::TechDist::Finite { points, .. } => points.len(),
        };
        let t_f64 = (0..t_count)
            .map(|k| sampler.technology(k).iter().map(|r| vec_to_f64(r)).collect())
            .collect();
        Ok(RecourseModel {
            tableau_f64: bases
                .iter()
                .map(|b| b.tableau.iter().map(|r| vec_to_f64(r)).collect())
                .collect(),
            value: ValueEvaluator::new(inst),
            alpha: vec_to_f64(&inst.alpha),
            inst: inst.clone(),
            bases,
            groups,
            sampler,
            pieces,
            t_f64,
            gamma_res,
            needs_gamma,
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn bases(&self) -> &[DualBasis] {
        &self.bases
    }

    pub fn gamma_res(&self) -> usize {
        self.gamma_res
    }

    fn continuous_pieces(&self, q: &[f64], tables: &[Option<GammaTables>]) -> Result<Vec<Piece>> {
        let scale = 1.0 + q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut out = Vec::new();
        for (k, basis) in self.bases.iter().enumerate() {
            let tab = &self.tableau_f64[k];
            let qb: Vec<f64> = basis.columns.iter().map(|&c| q[c]).collect();
            let reduced = |j: usize| q[j] - (0..qb.len()).map(|i| qb[i] * tab[i][j]).sum::<f64>();
            if (0..q.len()).any(|j| reduced(j) < -1e-12 * scale) {
                continue;
            }
            let m = basis.m();
            let lambda = (0..m)
                .map(|j| (0..m).map(|i| qb[i] * basis.b_inv_f64[i][j]).sum())
                .collect();
            let qbar: Vec<f64> = basis.n_columns.iter().map(|&j| reduced(j).max(0.0)).collect();
            let gamma = if self.needs_gamma {
                tables[k]
                    .as_ref()
                    .ok_or(MirError::Infeasible)?
                    .fine
                    .gamma(&qbar)
            } else {
                0.0
            };
            out.push(Piece {
                basis: k,
                lambda,
                qbar,
                gamma,
            });
        }
        if out.is_empty() {
            return Err(MirError::EmptyDualSet("no dual feasible basis for a drawn cost vector".into()));
        }
        Ok(out)
    }

    fn evaluate_with(&self, which: Which, draw: &QtDraw, pieces: &[Piece], h: &[f64], x: &[f64]) -> Result<f64> {
        let t = &self.t_f64[draw.t_index];
        let s: Vec<f64> = h.iter().zip(t).map(|(hi, row)| hi - dot_f64(row, x)).collect();
        match which {
            Which::Exact => self.value.value(&draw.q, &s),
            Which::Shifted => Ok(pieces
                .iter()
                .map(|p| dot_f64(&p.lambda, &s) + p.gamma)
                .fold(f64::NEG_INFINITY, f64::max)),
            Which::Alpha => {
                let anchor: Vec<f64> = h.iter().zip(&self.alpha).map(|(a, b)| a - b).collect();
                let mut best = f64::NEG_INFINITY;
                for p in pieces {
                    let psi = self.groups[p.basis].psi(&p.qbar, &anchor).ok_or(MirError::Infeasible)?;
                    best = best.max(dot_f64(&p.lambda, &s) + psi);
                }
                Ok(best)
            }
        }
    }

    /// Values of each requested evaluator on scenario `index`.
    fn scenario_values(&self, modes: &[Which], x: &[f64], seed: u64, index: u64) -> Result<Vec<f64>> {
        let draw = self.sampler.draw_qt_f64(seed, index);
        let h = self.sampler.draw_h(seed, index);
        let owned;
        let pieces: &[Piece] = match &self.pieces {
            CostPieces::Discrete(lists) => {
                let list = &lists[draw.q_index.expect("discrete draw has a support index")];
                if list.is_empty() && modes.iter().any(|&w| w != Which::Exact) {
                    return Err(MirError::EmptyDualSet("no dual feasible basis for a drawn cost vector".into()));
                }
                list
            }
            CostPieces::Continuous(tables) => {
                if modes.iter().all(|&w| w == Which::Exact) {
                    &[]
                } else {
                    owned = self.continuous_pieces(&draw.q, tables)?;
                    &owned
                }
            }
        };
        modes
            .iter()
            .map(|&w| self.evaluate_with(w, &draw, pieces, &h, x))
            .collect()
    }

    fn check_request(&self, x: &[f64], n: usize, modes: &[Which]) -> Result<()> {
        if n < 2 {
            return Err(MirError::InvalidArgument("need at least 2 samples".into()));
        }
        if x.len() != self.inst.n1() {
            return Err(MirError::InvalidArgument(format!(
                "x has length {}, expected {}",
                x.len(),
                self.inst.n1()
            )));
        }
        if modes.contains(&Which::Shifted) && !self.needs_gamma {
            return Err(MirError::InvalidArgument("model was built without Γ grids".into()));
        }
        Ok(())
    }

    /// Per-scenario values for all modes, in index order.
    fn sample(&self, x: &[f64], modes: &[Which], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.check_request(x, n, modes)?;
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.scenario_values(modes, x, seed, i))
            .collect()
    }

    pub fn estimate(&self, x: &[f64], which: Which, n: usize, seed: u64) -> Result<Estimate> {
        let rows = self.sample(x, &[which], n, seed)?;
        let values: Vec<f64> = rows.into_iter().map(|r| r[0]).collect();
        Ok(Estimate::from_values(&values, seed))
    }

    /// Estimates of `a`, `b` and of `a − b`, all on the same scenarios.
    pub fn estimate_pair(&self, x: &[f64], a: Which, b: Which, n: usize, seed: u64) -> Result<PairEstimate> {
        let rows = self.sample(x, &[a, b], n, seed)?;
        let va: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let vb: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let diff: Vec<f64> = rows.iter().map(|r| r[0] - r[1]).collect();
        Ok(PairEstimate {
            first: Estimate::from_values(&va, seed),
            second: Estimate::from_values(&vb, seed),
            difference: Estimate::from_values(&diff, seed),
        })
    }

    /// `max_x |Q_a(x) − Q_b(x)|` over `x_grid`, using common random numbers
    /// within each grid point and an independent stream per point.
    pub fn sup_error(&self, pair: (Which, Which), x_grid: &[Vec<f64>], n: usize, seed: u64) -> Result<SupError> {
        let (a, b) = pair;
        if a == b {
            return Err(MirError::InvalidArgument(format!("invalid pair: {a} against itself")));
        }
        if x_grid.is_empty() {
            return Err(MirError::InvalidArgument("x grid is empty".into()));
        }
        let lo = vec_to_f64(&self.inst.x_domain.lo);
        let hi = vec_to_f64(&self.inst.x_domain.hi);
        for x in x_grid {
            let inside = x.len() == lo.len() && x.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| *l <= *v && *v <= *h);
            if !inside {
                return Err(MirError::InvalidArgument(format!("grid point {x:?} lies outside x_domain")));
            }
        }
        let mut per_x = Vec::with_capacity(x_grid.len());
        for (j, x) in x_grid.iter().enumerate() {
            let est = self.estimate_pair(x, a, b, n, grid_seed(seed, j))?;
            per_x.push((x.clone(), est));
        }
        let (arg, best) = per_x
            .iter()
            .enumerate()
            .map(|(j, (_, e))| (j, e.difference.mean.abs()))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        Ok(SupError {
            sup: best,
            sup_se: per_x[arg].1.difference.std_error,
            argmax: per_x[arg].0.clone(),
            spacing: grid_spacing(x_grid),
            per_x,
        })
    }
}

fn discrete_pieces(inst: &Instance, bases: &[DualBasis], q: &[Rational], res: usize, with_gamma: bool) -> Result<Vec<Piece>> {
    let ks = dual_feasible_indices(q, bases);
    ks.into_iter()
        .map(|k| {
            let basis = &bases[k];
            let gamma = if with_gamma { gamma_mean(basis, q, inst, res)?.0 } else { 0.0 };
            Ok(Piece {
                basis: k,
                lambda: vec_to_f64(&dual_vertex(q, basis)),
                qbar: reduced_costs(basis, q, inst).values.iter().map(to_f64).collect(),
                gamma,
            })
        })
        .collect()
}

/// Seed of the stream used at grid point `j`.
pub fn grid_seed(seed: u64, j: usize) -> u64 {
    mix_seed(seed, 0x6772_6964 ^ j as u64)
}

/// Largest distance (∞-norm) from a grid point to its nearest neighbour.
fn grid_spacing(grid: &[Vec<f64>]) -> f64 {
    if grid.len() < 2 {
        return 0.0;
    }
    grid.iter()
        .enumerate()
        .map(|(i, a)| {
            grid.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairEstimate {
    pub first: Estimate,
    pub second: Estimate,
    pub difference: Estimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupError {
    pub sup: f64,
    /// Standard error of the paired difference at the argmax.
    pub sup_se: f64,
    pub argmax: Vec<f64>,
    /// Grid resolution; the true supremum over `x` is not claimed.
    pub spacing: f64,
    pub per_x: Vec<(Vec<f64>, PairEstimate)>,
}

pub fn estimate_recourse(x: &[f64], inst: &Instance, which: Which, n: usize, seed: u64, gamma_res: usize) -> Result<Estimate> {
    RecourseModel::new(inst, gamma_res, &[which])?.estimate(x, which, n, seed)
}

pub fn sup_error_on_grid(
    inst: &Instance,
    pair: (Which, Which),
    x_grid: &[Vec<f64>],
    n: usize,
    seed: u64,
    gamma_res: usize,
) -> Result<SupError> {
    if pair.0 == pair.1 {
        return Err(MirError::InvalidArgument(format!("invalid pair: {} against itself", pair.0)));
    }
    RecourseModel::new(inst, gamma_res, &[pair.0, pair.1])?.sup_error(pair, x_grid, n, seed)
}

/// `n` evenly spaced points across the first-stage box (its centre when
/// `n = 1`).
pub fn box_grid(inst: &Instance, n: usize) -> Vec<Vec<f64>> {
    let lo = vec_to_f64(&inst.x_domain.lo);
    let hi = vec_to_f64(&inst.x_domain.hi);
    (0..n)
        .map(|j| {
            let t = if n == 1 { 0.5 } else { j as f64 / (n - 1) as f64 };
            lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * t).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Marginal;
    use crate::fixtures::e1;
    use crate::linalg::int;

    fn e1_uniform_h() -> Instance {
        let mut inst = e1();
        inst.dist.h = vec![Marginal::Uniform { a: int(0), b: int(1) }];
        inst
    }

    fn q11() -> Vec<Rational> {
        vec![int(1), int(1)]
    }

    #[test]
    fn v_hat_examples() {
        let inst = e1();
        let bases = enumerate_bases(&inst);
        let comps = build_components(&inst, &bases, &q11(), 4096).unwrap();
        assert!((v_hat(&[0.5], &comps).unwrap() - 1.5).abs() < 1e-9);
        assert!((v_hat(&[-2.0], &comps).unwrap() - 2.0).abs() < 1e-9);
        assert!((v_hat(&[0.0], &comps).unwrap() - 1.0).abs() < 1e-9);
        assert!(v_hat(&[0.0], &[]).is_err());
    }

    #[test]
    fn v_alpha_examples() {
        let inst = e1();
        let bases = enumerate_bases(&inst);
        let va = |h: f64, tx: f64, a: f64| v_alpha(&q11(), &[h], &[tx], &[a], &inst, &bases).unwrap();
        assert!((va(0.5, 0.0, 0.0) - 1.5).abs() < 1e-12);
        assert!(va(0.3, 0.3, 0.3).abs() < 1e-12);
        assert!((va(0.5, -1.0, 0.0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn recourse_estimates_on_uniform_h() {
        let inst = e1_uniform_h();
        let exact = estimate_recourse(&[0.0], &inst, Which::Exact, 20_000, 7, 1024).unwrap();
        assert!((exact.mean - 1.5).abs() <= 3.0 * exact.std_error + 1e-9);
        let shifted = estimate_recourse(&[0.0], &inst, Which::Shifted, 20_000, 7, 1024).unwrap();
        assert!((shifted.mean - 1.5).abs() <= 3.0 * shifted.std_error + 1e-9);
        assert!(estimate_recourse(&[0.0], &inst, Which::Exact, 1, 7, 1024).is_err());
    }

    #[test]
    fn sup_error_guards_and_zero_gap() {
        let inst = e1_uniform_h();
        assert!(sup_error_on_grid(&inst, (Which::Exact, Which::Exact), &[vec![0.0]], 10, 1, 64).is_err());
        assert!(sup_error_on_grid(&inst, (Which::Exact, Which::Shifted), &[vec![5.0]], 10, 1, 64).is_err());
        let r = sup_error_on_grid(&inst, (Which::Exact, Which::Shifted), &[vec![0.0]], 20_000, 3, 1024).unwrap();
        assert!(r.sup <= 3.0 * r.sup_se + 1e-9);
    }

    #[test]
    fn estimates_are_reproducible() {
        let inst = e1();
        let a = estimate_recourse(&[0.25], &inst, Which::Alpha, 500, 11, 64).unwrap();
        let b = estimate_recourse(&[0.25], &inst, Which::Alpha, 500, 11, 64).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn which_parses() {
        assert_eq!("alpha".parse::<Which>().unwrap(), Which::Alpha);
        assert!("both".parse::<Which>().is_err());
    }
}
