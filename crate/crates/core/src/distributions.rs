//! Distributions of the random data `(q, T, h)`.
//!
//! The cost vector `q` and technology matrix `T` share one random stream and
//! the right-hand side `h` uses another, so `(q, T)` is independent of `h` and
//! perturbing one never reshuffles the other. Both streams are counter based:
//! scenario `i` of seed `s` is a pure function of `(s, i)`.
//!
//! `h` is a product of one-dimensional continuous marginals. Under that
//! independence the expected conditional total variation of each coordinate
//! reduces to the total variation of its marginal.

use std::f64::consts::PI;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

use crate::error::{MirError, Result};
use crate::json::{
    array, field, join, rat_json, rat_matrix_json, rat_vec_json, rational, rational_matrix,
    rational_vec, str_field,
};
use crate::linalg::{l1_norm, to_f64, vec_to_f64, from_f64, RatMatrix, Rational};

/// Distribution of the second-stage cost vector.
#[derive(Clone, Debug, PartialEq)]
pub enum CostDist {
    Fixed(Vec<Rational>),
    Finite {
        points: Vec<Vec<Rational>>,
        probs: Vec<Rational>,
    },
    /// Independent uniforms on `[a_i, b_i]`.
    Uniform { a: Vec<Rational>, b: Vec<Rational> },
    /// Independent normals.
    Normal {
        mu: Vec<Rational>,
        sigma: Vec<Rational>,
    },
}

/// Distribution of the technology matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum TechDist {
    Fixed(RatMatrix),
    Finite {
        points: Vec<RatMatrix>,
        probs: Vec<Rational>,
    },
}

/// One-dimensional continuous density for a coordinate of `h`.
#[derive(Clone, Debug, PartialEq)]
pub enum Marginal {
    Normal { mu: Rational, sigma: Rational },
    Uniform { a: Rational, b: Rational },
    /// Piecewise-linear density through the knots, zero outside them.
    Pwl { knots: Vec<(Rational, Rational)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionSpec {
    pub q: CostDist,
    pub t: TechDist,
    pub h: Vec<Marginal>,
}

/// One realisation of `ξ = (q, T, h)`.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub q: Vec<Rational>,
    pub t: RatMatrix,
    pub h: Vec<f64>,
}

impl CostDist {
    pub fn dim(&self) -> usize {
        match self {
            CostDist::Fixed(v) => v.len(),
            CostDist::Finite { points, .. } => points.first().map_or(0, Vec::len),
            CostDist::Uniform { a, .. } => a.len(),
            CostDist::Normal { mu, .. } => mu.len(),
        }
    }

    /// Pushforward under `q ↦ c·q`.
    pub fn scaled(&self, c: &Rational) -> CostDist {
        let sc = |v: &Vec<Rational>| v.iter().map(|x| x * c).collect::<Vec<_>>();
        match self {
            CostDist::Fixed(v) => CostDist::Fixed(sc(v)),
            CostDist::Finite { points, probs } => CostDist::Finite {
                points: points.iter().map(sc).collect(),
                probs: probs.clone(),
            },
            CostDist::Uniform { a, b } => CostDist::Uniform { a: sc(a), b: sc(b) },
            CostDist::Normal { mu, sigma } => CostDist::Normal {
                mu: sc(mu),
                sigma: sc(sigma),
            },
        }
    }

    /// True when the support is finite, so per-`q` work can be cached.
    pub fn is_discrete(&self) -> bool {
        matches!(self, CostDist::Fixed(_) | CostDist::Finite { .. })
    }

    /// Support points of a discrete distribution.
    pub fn support(&self) -> Option<Vec<Vec<Rational>>> {
        match self {
            CostDist::Fixed(v) => Some(vec![v.clone()]),
            CostDist::Finite { points, .. } => Some(points.clone()),
            _ => None,
        }
    }
}

impl TechDist {
    pub fn shape(&self) -> (usize, usize) {
        let m = match self {
            TechDist::Fixed(t) => t,
            TechDist::Finite { points, .. } => match points.first() {
                Some(t) => t,
                None => return (0, 0),
            },
        };
        (m.len(), m.first().map_or(0, Vec::len))
    }
}

impl Marginal {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Normal { mu, sigma } => {
                let (mu, sigma) = (to_f64(mu), to_f64(sigma));
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            Marginal::Uniform { a, b } => {
                let (a, b) = (to_f64(a), to_f64(b));
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Marginal::Pwl { knots } => {
                let k: Vec<(f64, f64)> = knots.iter().map(|(x, f)| (to_f64(x), to_f64(f))).collect();
                pwl_eval(&k, x)
            }
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Normal { mu, sigma } => {
                let z = (x - to_f64(mu)) / to_f64(sigma);
                0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
            }
            Marginal::Uniform { a, b } => {
                let (a, b) = (to_f64(a), to_f64(b));
                ((x - a) / (b - a)).clamp(0.0, 1.0)
            }
            Marginal::Pwl { knots } => {
                let k: Vec<(f64, f64)> = knots.iter().map(|(x, f)| (to_f64(x), to_f64(f))).collect();
                let mut acc = 0.0;
                for w in k.windows(2) {
                    let ((x0, f0), (x1, f1)) = (w[0], w[1]);
                    if x <= x0 {
                        break;
                    }
                    let t = x.min(x1) - x0;
                    let slope = (f1 - f0) / (x1 - x0);
                    acc += f0 * t + 0.5 * slope * t * t;
                }
                acc.clamp(0.0, 1.0)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Normal { mu, .. } => to_f64(mu),
            Marginal::Uniform { a, b } => 0.5 * (to_f64(a) + to_f64(b)),
            Marginal::Pwl { knots } => {
                // Exact for piecewise-linear densities: ∫ x f(x) dx per segment.
                knots
                    .windows(2)
                    .map(|w| {
                        let (x0, f0) = (to_f64(&w[0].0), to_f64(&w[0].1));
                        let (x1, f1) = (to_f64(&w[1].0), to_f64(&w[1].1));
                        let h = x1 - x0;
                        h / 6.0 * (f0 * (2.0 * x0 + x1) + f1 * (x0 + 2.0 * x1))
                    })
                    .sum()
            }
        }
    }

    /// Closed-form total variation of the density over ℝ.
    pub fn total_variation(&self) -> f64 {
        match self {
            Marginal::Normal { sigma, .. } => 2.0 / (to_f64(sigma) * (2.0 * PI).sqrt()),
            Marginal::Uniform { a, b } => 2.0 / (to_f64(b) - to_f64(a)),
            Marginal::Pwl { knots } => {
                let first = knots.first().map_or(Rational::zero(), |k| k.1.abs());
                let last = knots.last().map_or(Rational::zero(), |k| k.1.abs());
                let inner = knots
                    .windows(2)
                    .fold(Rational::zero(), |acc, w| acc + (&w[1].1 - &w[0].1).abs());
                to_f64(&(first + inner + last))
            }
        }
    }

    /// Interval outside of which the density is zero (or below 1e-15 for normals).
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            Marginal::Normal { mu, sigma } => {
                let (mu, sigma) = (to_f64(mu), to_f64(sigma));
                (mu - 8.0 * sigma, mu + 8.0 * sigma)
            }
            Marginal::Uniform { a, b } => (to_f64(a), to_f64(b)),
            Marginal::Pwl { knots } => (
                to_f64(&knots[0].0),
                to_f64(&knots[knots.len() - 1].0),
            ),
        }
    }

    /// Mirror image `h ↦ −h`.
    pub fn mirrored(&self) -> Marginal {
        match self {
            Marginal::Normal { mu, sigma } => Marginal::Normal {
                mu: -mu,
                sigma: sigma.clone(),
            },
            Marginal::Uniform { a, b } => Marginal::Uniform { a: -b, b: -a },
            Marginal::Pwl { knots } => Marginal::Pwl {
                knots: knots.iter().rev().map(|(x, f)| (-x, f.clone())).collect(),
            },
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        match self {
            Marginal::Normal { sigma, .. } => {
                if !sigma.is_positive() {
                    return Err(MirError::invariant(join(path, "sigma"), "must be positive"));
                }
            }
            Marginal::Uniform { a, b } => {
                if a >= b {
                    return Err(MirError::invariant(path, "uniform requires a < b"));
                }
            }
            Marginal::Pwl { knots } => {
                if knots.len() < 2 {
                    return Err(MirError::invariant(join(path, "knots"), "need at least two knots"));
                }
                if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(MirError::invariant(
                        join(path, "knots"),
                        "knot abscissae must be strictly increasing",
                    ));
                }
                if knots.iter().any(|k| k.1.is_negative()) {
                    return Err(MirError::invariant(join(path, "knots"), "density must be nonnegative"));
                }
                let two = crate::linalg::int(2);
                let mass = knots.windows(2).fold(Rational::zero(), |acc, w| {
                    acc + (&w[1].0 - &w[0].0) * (&w[0].1 + &w[1].1) / &two
                });
                if mass != crate::linalg::int(1) {
                    return Err(MirError::invariant(
                        join(path, "knots"),
                        format!("density integrates to {mass}, not 1"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn pwl_eval(knots: &[(f64, f64)], x: f64) -> f64 {
    if x < knots[0].0 || x > knots[knots.len() - 1].0 {
        return 0.0;
    }
    for w in knots.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if x <= x1 {
            return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
        }
    }
    knots[knots.len() - 1].1
}

fn check_probs(probs: &[Rational], path: &str) -> Result<()> {
    if probs.iter().any(|p| p.is_negative()) {
        return Err(MirError::invariant(path, "probabilities must be nonnegative"));
    }
    let total: Rational = probs.iter().sum();
    if total != crate::linalg::int(1) {
        return Err(MirError::invariant(path, format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

impl DistributionSpec {
    /// Structural checks; `n` is the number of second-stage variables, `m` the
    /// number of constraints and `n1` the first-stage dimension.
    pub fn validate(&self, n: usize, m: usize, n1: usize) -> Result<()> {
        match &self.q {
            CostDist::Fixed(v) => {
                if v.len() != n {
                    return Err(MirError::invariant("q_dist.value", format!("expected length {n}")));
                }
            }
            CostDist::Finite { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(MirError::invariant("q_dist", "points and probs must be nonempty and of equal length"));
                }
                for (i, p) in points.iter().enumerate() {
                    if p.len() != n {
                        return Err(MirError::invariant(format!("q_dist.points[{i}]"), format!("expected length {n}")));
                    }
                }
                check_probs(probs, "q_dist.probs")?;
            }
            CostDist::Uniform { a, b } => {
                if a.len() != n || b.len() != n {
                    return Err(MirError::invariant("q_dist", format!("bounds must have length {n}")));
                }
                if a.iter().zip(b).any(|(a, b)| a > b) {
                    return Err(MirError::invariant("q_dist", "uniform requires a <= b"));
                }
            }
            CostDist::Normal { mu, sigma } => {
                if mu.len() != n || sigma.len() != n {
                    return Err(MirError::invariant("q_dist", format!("parameters must have length {n}")));
                }
                if sigma.iter().any(|s| s.is_negative()) {
                    return Err(MirError::invariant("q_dist.sigma", "must be nonnegative"));
                }
            }
        }
        let shape_ok = |t: &RatMatrix| t.len() == m && t.iter().all(|r| r.len() == n1);
        match &self.t {
            TechDist::Fixed(t) => {
                if !shape_ok(t) {
                    return Err(MirError::invariant("T.matrix", format!("expected {m}x{n1}")));
                }
            }
            TechDist::Finite { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(MirError::invariant("T", "points and probs must be nonempty and of equal length"));
                }
                for (i, t) in points.iter().enumerate() {
                    if !shape_ok(t) {
                        return Err(MirError::invariant(format!("T.points[{i}]"), format!("expected {m}x{n1}")));
                    }
                }
                check_probs(probs, "T.probs")?;
            }
        }
        if self.h.len() != m {
            return Err(MirError::invariant("h_dist", format!("expected {m} marginals")));
        }
        for (i, h) in self.h.iter().enumerate() {
            h.validate(&format!("h_dist[{i}]"))?;
        }
        Ok(())
    }

    pub fn scale_costs(&self, c: &Rational) -> DistributionSpec {
        DistributionSpec {
            q: self.q.scaled(c),
            ..self.clone()
        }
    }

    /// Sets the standard deviation of every normal `h` marginal.
    pub fn with_h_sigma(&self, sigma: &Rational) -> Result<DistributionSpec> {
        let mut out = self.clone();
        for (i, h) in out.h.iter_mut().enumerate() {
            match h {
                Marginal::Normal { sigma: s, .. } => *s = sigma.clone(),
                _ => {
                    return Err(MirError::InvalidArgument(format!(
                        "h_dist[{i}] is not normal; h_sigma sweeps need normal marginals"
                    )))
                }
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Sampling

const QT_STREAM: u64 = 0x7154_2d63_6f73_7473;
const H_STREAM: u64 = 0x682d_7268_7321_0001;

/// SplitMix64 finaliser, used to derive independent keys from one seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, salt: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, salt));
    rng.set_stream(index);
    rng
}

/// Floating-point draw of `(q, T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QtDraw {
    pub q: Vec<f64>,
    /// Support point of a fixed or finite cost distribution.
    pub q_index: Option<usize>,
    /// Support point of the technology distribution (0 when fixed).
    pub t_index: usize,
}

/// Precomputed sampler for a [`DistributionSpec`].
#[derive(Clone, Debug)]
pub struct ScenarioSampler {
    spec: DistributionSpec,
    q_f64: Option<(Vec<f64>, Vec<f64>)>,
    h_params: Vec<HSampler>,
}

#[derive(Clone, Debug)]
enum HSampler {
    Normal(f64, f64),
    Uniform(f64, f64),
    Pwl {
        knots: Vec<(f64, f64)>,
        cum: Vec<f64>,
    },
}

fn pick(probs_cum: &[f64], u: f64) -> usize {
    probs_cum
        .iter()
        .position(|&c| u < c)
        .unwrap_or(probs_cum.len() - 1)
}

fn cumulative(probs: &[Rational]) -> Vec<f64> {
    let mut acc = Rational::zero();
    probs
        .iter()
        .map(|p| {
            acc += p;
            to_f64(&acc)
        })
        .collect()
}

impl ScenarioSampler {
    pub fn new(spec: &DistributionSpec) -> Self {
        let q_f64 = match &spec.q {
            CostDist::Uniform { a, b } => Some((vec_to_f64(a), vec_to_f64(b))),
            CostDist::Normal { mu, sigma } => Some((vec_to_f64(mu), vec_to_f64(sigma))),
            _ => None,
        };
        let h_params = spec
            .h
            .iter()
            .map(|h| match h {
                Marginal::Normal { mu, sigma } => HSampler::Normal(to_f64(mu), to_f64(sigma)),
                Marginal::Uniform { a, b } => HSampler::Uniform(to_f64(a), to_f64(b)),
                Marginal::Pwl { knots } => {
                    let k: Vec<(f64, f64)> =
                        knots.iter().map(|(x, f)| (to_f64(x), to_f64(f))).collect();
                    let mut acc = 0.0;
                    let cum = k
                        .windows(2)
                        .map(|w| {
                            acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
                            acc
                        })
                        .collect();
                    HSampler::Pwl { knots: k, cum }
                }
            })
            .collect();
        ScenarioSampler {
            spec: spec.clone(),
            q_f64,
            h_params,
        }
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// Draws `(q, T)` for scenario `index` in floating point, reporting
    /// which support point was taken for discrete distributions.
    pub fn draw_qt_f64(&self, seed: u64, index: u64) -> QtDraw {
        let mut rng = stream(seed, QT_STREAM, index);
        let (q, q_index) = match &self.spec.q {
            CostDist::Fixed(v) => (vec_to_f64(v), Some(0)),
            CostDist::Finite { points, probs } => {
                let u: f64 = rng.random();
                let k = pick(&cumulative(probs), u);
                (vec_to_f64(&points[k]), Some(k))
            }
            CostDist::Uniform { .. } => {
                let (a, b) = self.q_f64.as_ref().expect("uniform params");
                let q = a
                    .iter()
                    .zip(b)
                    .map(|(&a, &b)| {
                        let u: f64 = rng.random();
                        a + (b - a) * u
                    })
                    .collect();
                (q, None)
            }
            CostDist::Normal { .. } => {
                let (mu, sigma) = self.q_f64.as_ref().expect("normal params");
                let q = mu
                    .iter()
                    .zip(sigma)
                    .map(|(&m, &s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m + s * z
                    })
                    .collect();
                (q, None)
            }
        };
        let t_index = match &self.spec.t {
            TechDist::Fixed(_) => 0,
            TechDist::Finite { probs, .. } => {
                let u: f64 = rng.random();
                pick(&cumulative(probs), u)
            }
        };
        QtDraw { q, q_index, t_index }
    }

    /// Draws `(q, T)` for scenario `index`.
    pub fn draw_qt(&self, seed: u64, index: u64) -> (Vec<Rational>, RatMatrix) {
        let d = self.draw_qt_f64(seed, index);
        let q = match (&self.spec.q, d.q_index) {
            (CostDist::Fixed(v), _) => v.clone(),
            (CostDist::Finite { points, .. }, Some(k)) => points[k].clone(),
            _ => d.q.iter().map(|&v| from_f64(v)).collect(),
        };
        (q, self.technology(d.t_index).clone())
    }

    /// Technology matrix for a support index returned by [`Self::draw_qt_f64`].
    pub fn technology(&self, t_index: usize) -> &RatMatrix {
        match &self.spec.t {
            TechDist::Fixed(t) => t,
            TechDist::Finite { points, .. } => &points[t_index],
        }
    }

    /// Draws `h` for scenario `index`.
    pub fn draw_h(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = stream(seed, H_STREAM, index);
        self.h_params
            .iter()
            .map(|p| match p {
                HSampler::Normal(mu, sigma) => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + sigma * z
                }
                HSampler::Uniform(a, b) => {
                    let u: f64 = rng.random();
                    a + (b - a) * u
                }
                HSampler::Pwl { knots, cum } => {
                    let u: f64 = rng.random();
                    sample_pwl(knots, cum, u)
                }
            })
            .collect()
    }

    pub fn draw(&self, seed: u64, index: u64) -> Scenario {
        let (q, t) = self.draw_qt(seed, index);
        Scenario {
            q,
            t,
            h: self.draw_h(seed, index),
        }
    }
}

/// Inverse-CDF sampling on a piecewise-linear density.
fn sample_pwl(knots: &[(f64, f64)], cum: &[f64], u: f64) -> f64 {
    let target = u * cum[cum.len() - 1];
    let seg = cum.iter().position(|&c| target < c).unwrap_or(cum.len() - 1);
    let before = if seg == 0 { 0.0 } else { cum[seg - 1] };
    let r = (target - before).max(0.0);
    let ((x0, f0), (x1, f1)) = (knots[seg], knots[seg + 1]);
    let width = x1 - x0;
    let half_slope = (f1 - f0) / (2.0 * width);
    // Solve f0 t + half_slope t² = r for t ∈ [0, width].
    let t = if half_slope.abs() < 1e-300 {
        if f0 > 0.0 {
            r / f0
        } else {
            0.0
        }
    } else {
        let disc = (f0 * f0 + 4.0 * half_slope * r).max(0.0);
        let denom = f0 + disc.sqrt();
        if denom > 0.0 {
            2.0 * r / denom
        } else {
            (r / half_slope).sqrt()
        }
    };
    x0 + t.clamp(0.0, width)
}

/// Deterministic scenario draw: a pure function of `(seed, index)`.
pub fn draw_scenario(spec: &DistributionSpec, seed: u64, index: u64) -> Scenario {
    ScenarioSampler::new(spec).draw(seed, index)
}

// ---------------------------------------------------------------------------
// Total variation and moments

/// Variations `V_f(P_r)` of `pdf` over nested uniform partitions of `domain`
/// with 2, 4, 8, … intervals up to `refinement` (rounded down to a power of
/// two). Entry `r` is the best variation over the first `r` partitions, so the
/// sequence is nondecreasing even when floating-point sums on refined
/// partitions land an ulp lower; it is bounded by the total variation.
pub fn tv_numeric<F: Fn(f64) -> f64>(pdf: F, domain: (f64, f64), refinement: usize) -> Result<Vec<f64>> {
    if refinement < 2 {
        return Err(MirError::InvalidArgument("refinement must be at least 2".into()));
    }
    let (lo, hi) = domain;
    if !(lo < hi) {
        return Err(MirError::InvalidArgument("empty domain".into()));
    }
    let finest = 1usize << (usize::BITS - 1 - refinement.leading_zeros());
    let values: Vec<f64> = (0..=finest)
        .map(|k| {
            let x = if k == finest {
                hi
            } else {
                lo + (hi - lo) * k as f64 / finest as f64
            };
            pdf(x)
        })
        .collect();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(MirError::Distribution(format!(
            "non-finite density value at partition point {k}"
        )));
    }
    let mut out = Vec::new();
    let mut intervals = 2;
    while intervals <= finest {
        let stride = finest / intervals;
        let v: f64 = (0..intervals)
            .map(|i| (values[(i + 1) * stride] - values[i * stride]).abs())
            .sum();
        let best = out.last().map_or(v, |&prev: &f64| prev.max(v));
        out.push(best);
        intervals *= 2;
    }
    Ok(out)
}

/// `Σ_i E|Δ|f_i(·|h_{−i})`, which for independent marginals is the sum of the
/// marginal total variations.
pub fn tv_conditional_sum(spec: &DistributionSpec) -> Result<f64> {
    let mut total = 0.0;
    for (i, h) in spec.h.iter().enumerate() {
        h.validate(&format!("h_dist[{i}]"))?;
        let tv = h.total_variation();
        if !tv.is_finite() {
            return Err(MirError::Distribution(format!(
                "h_dist[{i}] has unbounded variation"
            )));
        }
        total += tv;
    }
    Ok(total)
}

/// `E‖q‖₁`, in closed form where one is available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedNorm {
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
}

pub fn expected_l1_norm(spec: &DistributionSpec, n: usize, seed: u64) -> ExpectedNorm {
    let exact = |v: Rational| ExpectedNorm {
        value: to_f64(&v),
        std_error: 0.0,
        exact: true,
    };
    match &spec.q {
        CostDist::Fixed(v) => exact(l1_norm(v)),
        CostDist::Finite { points, probs } => exact(
            points
                .iter()
                .zip(probs)
                .fold(Rational::zero(), |acc, (p, w)| acc + w * l1_norm(p)),
        ),
        CostDist::Uniform { a, b } => {
            let two = crate::linalg::int(2);
            exact(a.iter().zip(b).fold(Rational::zero(), |acc, (a, b)| {
                let e = if !a.is_negative() {
                    (a + b) / &two
                } else if !b.is_positive() {
                    -(a + b) / &two
                } else {
                    // E|U| for a < 0 < b.
                    (a * a + b * b) / (&two * (b - a))
                };
                acc + e
            }))
        }
        CostDist::Normal { .. } => {
            let sampler = ScenarioSampler::new(spec);
            let n = n.max(2);
            let draws: Vec<f64> = (0..n as u64)
                .map(|i| to_f64(&l1_norm(&sampler.draw_qt(seed, i).0)))
                .collect();
            let (mean, se) = mean_and_se(&draws);
            ExpectedNorm {
                value: mean,
                std_error: se,
                exact: false,
            }
        }
    }
}

/// Sample mean and standard error `s/√n`.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

// ---------------------------------------------------------------------------
// JSON

fn marginal_from_json(v: &Value, path: &str) -> Result<Marginal> {
    let kind = str_field(v, "type", path)?;
    let m = match kind {
        "normal" => Marginal::Normal {
            mu: rational(field(v, "mu", path)?, &join(path, "mu"))?,
            sigma: rational(field(v, "sigma", path)?, &join(path, "sigma"))?,
        },
        "uniform" => Marginal::Uniform {
            a: rational(field(v, "a", path)?, &join(path, "a"))?,
            b: rational(field(v, "b", path)?, &join(path, "b"))?,
        },
        "pwl" => {
            let kp = join(path, "knots");
            let knots = array(field(v, "knots", path)?, &kp)?
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    let kp = format!("{kp}[{i}]");
                    let pair = rational_vec(k, &kp)?;
                    match <[Rational; 2]>::try_from(pair) {
                        Ok([x, f]) => Ok((x, f)),
                        Err(_) => Err(MirError::invariant(kp, "knot must be [x, f]")),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Marginal::Pwl { knots }
        }
        "fixed" | "finite" => {
            return Err(MirError::invariant(
                path,
                "h must be continuously distributed (no point masses)",
            ))
        }
        other => return Err(MirError::invariant(join(path, "type"), format!("unknown family {other:?}"))),
    };
    m.validate(path)?;
    Ok(m)
}

pub(crate) fn h_from_json(v: &Value) -> Result<Vec<Marginal>> {
    match v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, m)| marginal_from_json(m, &format!("h_dist[{i}]")))
            .collect(),
        Value::Object(_) => Ok(vec![marginal_from_json(v, "h_dist")?]),
        _ => Err(MirError::invariant("h_dist", "expected an object or array")),
    }
}

pub(crate) fn q_from_json(v: &Value) -> Result<CostDist> {
    let path = "q_dist";
    let kind = str_field(v, "type", path)?;
    let get = |k: &str| -> Result<Vec<Rational>> { rational_vec(field(v, k, path)?, &join(path, k)) };
    Ok(match kind {
        "fixed" => CostDist::Fixed(get("value")?),
        "finite" => CostDist::Finite {
            points: rational_matrix(field(v, "points", path)?, "q_dist.points")?,
            probs: get("probs")?,
        },
        "uniform" => CostDist::Uniform {
            a: get("a")?,
            b: get("b")?,
        },
        "normal" => CostDist::Normal {
            mu: get("mu")?,
            sigma: get("sigma")?,
        },
        other => return Err(MirError::invariant("q_dist.type", format!("unknown family {other:?}"))),
    })
}

pub(crate) fn t_from_json(v: &Value) -> Result<TechDist> {
    let path = "T";
    let kind = str_field(v, "type", path)?;
    Ok(match kind {
        "fixed" => TechDist::Fixed(rational_matrix(field(v, "matrix", path)?, "T.matrix")?),
        "finite" => {
            let points = array(field(v, "points", path)?, "T.points")?
                .iter()
                .enumerate()
                .map(|(i, p)| rational_matrix(p, &format!("T.points[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            TechDist::Finite {
                points,
                probs: rational_vec(field(v, "probs", path)?, "T.probs")?,
            }
        }
        other => return Err(MirError::invariant("T.type", format!("unknown family {other:?}"))),
    })
}

pub(crate) fn marginal_to_json(m: &Marginal) -> Value {
    match m {
        Marginal::Normal { mu, sigma } => json!({"type": "normal", "mu": rat_json(mu), "sigma": rat_json(sigma)}),
        Marginal::Uniform { a, b } => json!({"type": "uniform", "a": rat_json(a), "b": rat_json(b)}),
        Marginal::Pwl { knots } => json!({
            "type": "pwl",
            "knots": knots.iter().map(|(x, f)| json!([rat_json(x), rat_json(f)])).collect::<Vec<_>>()
        }),
    }
}

pub(crate) fn q_to_json(q: &CostDist) -> Value {
    match q {
        CostDist::Fixed(v) => json!({"type": "fixed", "value": rat_vec_json(v)}),
        CostDist::Finite { points, probs } => {
            json!({"type": "finite", "points": rat_matrix_json(points), "probs": rat_vec_json(probs)})
        }
        CostDist::Uniform { a, b } => json!({"type": "uniform", "a": rat_vec_json(a), "b": rat_vec_json(b)}),
        CostDist::Normal { mu, sigma } => {
            json!({"type": "normal", "mu": rat_vec_json(mu), "sigma": rat_vec_json(sigma)})
        }
    }
}

pub(crate) fn t_to_json(t: &TechDist) -> Value {
    match t {
        TechDist::Fixed(m) => json!({"type": "fixed", "matrix": rat_matrix_json(m)}),
        TechDist::Finite { points, probs } => json!({
            "type": "finite",
            "points": points.iter().map(|p| rat_matrix_json(p)).collect::<Vec<_>>(),
            "probs": rat_vec_json(probs)
        }),
    }
}
