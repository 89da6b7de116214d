//! Computable constants of the error bounds and the scaling analysis that
//! checks the parametric bound `C·E‖q‖₁·Σᵢ|Δ|fᵢ` empirically.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{RecourseModel, SupError, Which};
use crate::bases::{dual_feasible_indices, dual_vertex, enumerate_bases, DualBasis};
use crate::distributions::{expected_l1_norm, mix_seed, tv_conditional_sum, DistributionSpec, ScenarioSampler};
use crate::error::{MirError, Result};
use crate::exact::ValueEvaluator;
use crate::instance::Instance;
use crate::linalg::{int, max_subdeterminant, to_f64, vec_to_f64, Rational};
use crate::periodic::{gamma2_constant, gamma_mean, reduced_costs, GroupEvaluator, MARGIN_LADDER};

/// `Δ(W)`, the largest absolute subdeterminant of `W`.
pub fn max_subdet(inst: &Instance) -> u64 {
    max_subdeterminant(&inst.w)
}

/// `γ₁ = (n₂ + n̄₂)·Δ(W)`, a proximity factor with `|v − v_LP| ≤ γ₁‖q‖₁`.
pub fn cook_gamma1(inst: &Instance) -> Rational {
    int((inst.n_vars() as u64 * max_subdet(inst)) as i64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundConstants {
    pub gamma1: Rational,
    pub gamma2: Rational,
    pub gamma: Rational,
    pub max_subdet: u64,
    /// Empirical multiplier from [`scaling_ratio_table`]; never derived.
    pub calibrated_c: Option<f64>,
}

impl BoundConstants {
    pub fn compute(inst: &Instance) -> Self {
        let gamma1 = cook_gamma1(inst);
        let gamma2 = gamma2_constant(inst);
        BoundConstants {
            gamma: &gamma1 + &gamma2,
            gamma1,
            gamma2,
            max_subdet: max_subdet(inst),
            calibrated_c: None,
        }
    }
}

/// `t^{kl}`: coordinatewise maximum of `B_k⁻¹s` over an axis-aligned cube of
/// side `p_k·p_l` placed in `Λ^k(d)` at its tightest position, which gives
/// `t_i = d‖row_i(B_k⁻¹)‖₂ + p_k p_l‖row_i(B_k⁻¹)‖₁`.
pub fn pairwise_t(basis_k: &DualBasis, basis_l: &DualBasis, margin: f64) -> Vec<f64> {
    let side = (basis_k.p * basis_l.p) as f64;
    basis_k
        .b_inv_f64
        .iter()
        .map(|row| {
            let l2 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let l1 = row.iter().map(|v| v.abs()).sum::<f64>();
            margin * l2 + side * l1
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateStatus {
    Constructive,
    Empirical,
    Failed,
}

impl fmt::Display for CertificateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertificateStatus::Constructive => "constructive",
            CertificateStatus::Empirical => "empirical",
            CertificateStatus::Failed => "failed",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftCertificate {
    pub basis_index: usize,
    /// Ladder rung `c` with `σ̄ = B(c·p·ι)`; `None` if no rung certified.
    pub level: Option<u64>,
    pub sigma_bar: Option<Vec<f64>>,
    /// `(l, t^{kl})` for every other basis `l`.
    pub t_kl: Vec<(usize, Vec<f64>)>,
    pub status: CertificateStatus,
    pub tolerance: f64,
    /// Largest `|e(s) − e(s + Bℓ)|`, `e = v − v̂`, seen at the certified shift.
    pub periodicity_gap: f64,
}

/// Evaluators shared by the certificate checks for one instance.
struct Oracles {
    value: ValueEvaluator,
    groups: Vec<GroupEvaluator>,
}

/// `v(s) − v̂(s)` and `ψ_k(s) − Γ_k` at one point.
struct Gap {
    error: f64,
    periodic: f64,
}

struct CostData {
    q: Vec<f64>,
    /// `(basis, λ, q̄_N, Γ)` for each `k ∈ K^q`.
    pieces: Vec<(usize, Vec<f64>, Vec<f64>, f64)>,
}

impl CostData {
    fn new(inst: &Instance, bases: &[DualBasis], q: &[Rational], gamma_res: usize) -> Result<Self> {
        let ks = dual_feasible_indices(q, bases);
        if ks.is_empty() {
            return Err(MirError::EmptyDualSet("no dual feasible basis for a sampled cost vector".into()));
        }
        let pieces = ks
            .into_iter()
            .map(|k| {
                let (g, _) = gamma_mean(&bases[k], q, inst, gamma_res)?;
                Ok((
                    k,
                    vec_to_f64(&dual_vertex(q, &bases[k])),
                    reduced_costs(&bases[k], q, inst).values.iter().map(to_f64).collect(),
                    g,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(CostData {
            q: vec_to_f64(q),
            pieces,
        })
    }

    fn v_hat(&self, s: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|(_, l, _, g)| l.iter().zip(s).map(|(a, b)| a * b).sum::<f64>() + g)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn gap(&self, k: usize, s: &[f64], oracles: &Oracles) -> Result<Gap> {
        let v = oracles.value.value(&self.q, s)?;
        let (_, _, qbar, gamma) = self
            .pieces
            .iter()
            .find(|p| p.0 == k)
            .ok_or_else(|| MirError::InvalidArgument("basis is not dual feasible for a sampled q".into()))?;
        let psi = oracles.groups[k].psi(qbar, s).ok_or(MirError::Infeasible)?;
        Ok(Gap {
            error: v - self.v_hat(s),
            periodic: psi - gamma,
        })
    }
}

/// Probe `σ̄ + B w` with `w_i ∈ [0, 4p]` on a grid of step 1/16; returns
/// the point and `w`.
fn shifted_probe(basis: &DualBasis, sigma: &[f64], rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let w: Vec<f64> = (0..basis.m())
        .map(|_| rng.random_range(0..=64 * basis.p as i64) as f64 / 16.0)
        .collect();
    let s = basis
        .b
        .iter()
        .zip(sigma)
        .map(|(row, sg)| sg + row.iter().zip(&w).map(|(a, b)| *a as f64 * b).sum::<f64>())
        .collect();
    (s, w)
}

/// Smallest rung `σ̄ = B(c·p·ι)`, `c ∈ {0,1,2,4,8}`, at which
/// `v − v̂ = ψ_k − Γ_k` holds within `tol` on `probe_count` points of
/// `σ̄ + Λ^k` for every cost vector in `q_samples`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_shift(
    basis_index: usize,
    inst: &Instance,
    q_samples: &[Vec<Rational>],
    probe_count: usize,
    tol: f64,
    gamma_res: usize,
    seed: u64,
) -> Result<ShiftCertificate> {
    if probe_count < 10 {
        return Err(MirError::InvalidArgument("need at least 10 probes".into()));
    }
    let bases = enumerate_bases(inst);
    let basis = bases
        .get(basis_index)
        .ok_or_else(|| MirError::InvalidArgument(format!("no basis with index {basis_index}")))?;
    let oracles = Oracles {
        value: ValueEvaluator::new(inst),
        groups: bases.iter().map(|b| GroupEvaluator::new(b, inst)).collect(),
    };
    let costs: Vec<CostData> = q_samples
        .iter()
        .map(|q| CostData::new(inst, &bases, q, gamma_res))
        .collect::<Result<_>>()?;
    let t_kl = bases
        .iter()
        .filter(|l| l.index != basis_index)
        .map(|l| (l.index, pairwise_t(basis, l, 0.0)))
        .collect();
    let m = basis.m();
    for &c in MARGIN_LADDER.iter() {
        let sigma: Vec<f64> = basis
            .b
            .iter()
            .map(|row| row.iter().map(|&v| (v * (c * basis.p) as i64) as f64).sum())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5348 + c));
        let mut ok = true;
        let mut worst_period = 0.0f64;
        'probe: for _ in 0..probe_count {
            let (s, w) = shifted_probe(basis, &sigma, &mut rng);
            for cd in &costs {
                let g = cd.gap(basis_index, &s, &oracles)?;
                if (g.error - g.periodic).abs() > tol {
                    ok = false;
                    break 'probe;
                }
                for l in crate::exact::enumerate::cartesian(&vec![vec![-1, 0, 1]; m]) {
                    // Only shifts that stay in σ̄ + Λ^k.
                    if w.iter().zip(&l).any(|(wi, &li)| wi + (li as f64) < 0.0) {
                        continue;
                    }
                    let shift = basis.lattice_point(&l);
                    let s2: Vec<f64> = s.iter().zip(&shift).map(|(a, &b)| a + b as f64).collect();
                    let g2 = cd.gap(basis_index, &s2, &oracles)?;
                    worst_period = worst_period.max((g.error - g2.error).abs());
                }
            }
        }
        if ok {
            return Ok(ShiftCertificate {
                basis_index,
                level: Some(c),
                sigma_bar: Some(sigma),
                t_kl,
                status: CertificateStatus::Empirical,
                tolerance: tol,
                periodicity_gap: worst_period,
            });
        }
    }
    Ok(ShiftCertificate {
        basis_index,
        level: None,
        sigma_bar: None,
        t_kl,
        status: CertificateStatus::Failed,
        tolerance: tol,
        periodicity_gap: f64::NAN,
    })
}

/// `C·E‖q‖₁·Σᵢ E|Δ|fᵢ(·|h₋ᵢ)`.
pub fn parametric_bound(c: Option<f64>, spec: &DistributionSpec, n: usize, seed: u64) -> Result<f64> {
    let c = c.ok_or_else(|| MirError::InvalidArgument("missing constant C (pass a value or calibrate)".into()))?;
    Ok(c * expected_l1_norm(spec, n, seed).value * tv_conditional_sum(spec)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    HSigma,
    QScale,
    Alpha,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::HSigma => "h_sigma",
            SweepParam::QScale => "q_scale",
            SweepParam::Alpha => "alpha",
        }
    }

    /// Approximation compared against the exact recourse function.
    pub fn approximation(self) -> Which {
        match self {
            SweepParam::Alpha => Which::Alpha,
            _ => Which::Shifted,
        }
    }

    pub fn apply(self, inst: &Instance, value: &Rational) -> Result<Instance> {
        match self {
            SweepParam::HSigma => Ok(Instance {
                dist: inst.dist.with_h_sigma(value)?,
                ..inst.clone()
            }),
            SweepParam::QScale => inst.scale_costs(value),
            SweepParam::Alpha => Ok(Instance {
                alpha: vec![value.clone(); inst.m],
                ..inst.clone()
            }),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = MirError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h_sigma" => Ok(SweepParam::HSigma),
            "q_scale" => Ok(SweepParam::QScale),
            "alpha" => Ok(SweepParam::Alpha),
            other => Err(MirError::InvalidArgument(format!(
                "unknown sweep parameter {other:?} (expected h_sigma, q_scale or alpha)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub variant: usize,
    pub param_value: Rational,
    pub sup_err: f64,
    pub sup_err_se: f64,
    pub e_q_l1: f64,
    pub tv_sum: f64,
    /// `calibrated_C · E‖q‖₁ · tv_sum`.
    pub bound: f64,
    pub ratio: f64,
    pub gamma1: Rational,
    pub gamma2: Rational,
    pub seed: u64,
    pub detail: SupError,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    pub calibrated_c: f64,
}

impl SweepTable {
    /// `max ratio / min ratio` over the rows.
    pub fn ratio_spread(&self) -> f64 {
        let max = self.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        let min = self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// One sweep row with `bound` left at zero until [`calibrate`] runs.
#[allow(clippy::too_many_arguments)]
pub fn sweep_row(
    inst: &Instance,
    param: SweepParam,
    variant: usize,
    value: &Rational,
    x_grid: &[Vec<f64>],
    n: usize,
    seed: u64,
    gamma_res: usize,
) -> Result<SweepRow> {
    let pair = (Which::Exact, param.approximation());
    let v_inst = param.apply(inst, value)?;
    v_inst.check()?;
    let constants = BoundConstants::compute(&v_inst);
    let model = RecourseModel::new(&v_inst, gamma_res, &[pair.0, pair.1])?;
    let detail = model.sup_error(pair, x_grid, n, seed)?;
    let e_q_l1 = expected_l1_norm(&v_inst.dist, n, seed).value;
    let tv_sum = tv_conditional_sum(&v_inst.dist)?;
    Ok(SweepRow {
        variant,
        param_value: value.clone(),
        sup_err: detail.sup,
        sup_err_se: detail.sup_se,
        e_q_l1,
        tv_sum,
        bound: 0.0,
        ratio: detail.sup / (e_q_l1 * tv_sum),
        gamma1: constants.gamma1,
        gamma2: constants.gamma2,
        seed,
        detail,
    })
}

/// Sets `calibrated_C` to the largest ratio and fills in every `bound`.
pub fn calibrate(param: SweepParam, mut rows: Vec<SweepRow>) -> SweepTable {
    let calibrated_c = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    for r in &mut rows {
        r.bound = calibrated_c * r.e_q_l1 * r.tv_sum;
    }
    SweepTable {
        param,
        rows,
        calibrated_c,
    }
}

/// Sup-error of the approximation across parameter variants, each row with
/// `ratio = sup_err / (E‖q‖₁·tv_sum)`; `calibrated_C` is the largest ratio.
/// All variants share `seed`, so cost draws coincide across rows.
pub fn scaling_ratio_table(
    inst: &Instance,
    param: SweepParam,
    values: &[Rational],
    x_grid: &[Vec<f64>],
    n: usize,
    seed: u64,
    gamma_res: usize,
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(MirError::InvalidArgument("sweep needs at least one value".into()));
    }
    let rows = values
        .iter()
        .enumerate()
        .map(|(variant, value)| sweep_row(inst, param, variant, value, x_grid, n, seed, gamma_res))
        .collect::<Result<Vec<_>>>()?;
    Ok(calibrate(param, rows))
}

/// Cost vectors for certificate checks: the support of a discrete `q`, else
/// `count` seeded draws.
pub fn cost_samples(inst: &Instance, count: usize, seed: u64) -> Vec<Vec<Rational>> {
    if let Some(support) = inst.dist.q.support() {
        return support;
    }
    let sampler = ScenarioSampler::new(&inst.dist);
    (0..count as u64).map(|i| sampler.draw_qt(seed, i).0).collect()
}

/// [`empirical_shift`] for every basis that is dual feasible for at least
/// one sampled cost vector, each checked against those cost vectors only.
pub fn shift_certificates(
    inst: &Instance,
    q_samples: &[Vec<Rational>],
    probe_count: usize,
    tol: f64,
    gamma_res: usize,
    seed: u64,
) -> Result<Vec<ShiftCertificate>> {
    let bases = enumerate_bases(inst);
    bases
        .iter()
        .filter_map(|b| {
            let qs: Vec<Vec<Rational>> = q_samples.iter().filter(|q| b.is_dual_feasible(q)).cloned().collect();
            (!qs.is_empty()).then(|| empirical_shift(b.index, inst, &qs, probe_count, tol, gamma_res, seed))
        })
        .collect()
}
