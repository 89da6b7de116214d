//! Simple integer recourse: `v(s) = q⁺⌈s⌉⁺ + q⁻⌈−s⌉⁺`, with a series oracle
//! for its expectation and an encoding as a general instance.

use num_traits::Signed;

use crate::distributions::{CostDist, DistributionSpec, Marginal, TechDist};
use crate::error::{MirError, Result};
use crate::instance::{BoxDomain, Instance};
use crate::linalg::{int, to_f64, Rational};

/// Longest series evaluated before giving up.
pub const MAX_TERMS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SirSpec {
    pub q_plus: Rational,
    pub q_minus: Rational,
    pub h: Marginal,
}

impl SirSpec {
    pub fn check(&self) -> Result<()> {
        if self.q_plus.is_negative() || self.q_minus.is_negative() {
            return Err(MirError::InvalidArgument("SIR costs must be nonnegative".into()));
        }
        self.h.validate("h")
    }
}

pub fn sir_value(spec: &SirSpec, s: f64) -> f64 {
    to_f64(&spec.q_plus) * s.ceil().max(0.0) + to_f64(&spec.q_minus) * (-s).ceil().max(0.0)
}

/// Sums `Σ_{k≥0} term(k)` for a nonincreasing nonnegative sequence, stopping
/// at the first term below `tol`.
fn tail_sum(term: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..MAX_TERMS {
        let t = term(k as f64);
        if t < tol {
            return Ok(total + t);
        }
        total += t;
    }
    Err(MirError::NotConverged(MAX_TERMS))
}

/// `q⁺E⌈h−x⌉⁺ + q⁻E⌈x−h⌉⁺` via `E⌈Z⌉⁺ = Σ_{k≥0} P(Z > k)`.
pub fn sir_expected_recourse(spec: &SirSpec, x: f64, tail_tol: f64) -> Result<f64> {
    if !(tail_tol > 0.0) {
        return Err(MirError::InvalidArgument("tail tolerance must be positive".into()));
    }
    let qp = to_f64(&spec.q_plus);
    let qm = to_f64(&spec.q_minus);
    let mut total = 0.0;
    if qp != 0.0 {
        total += qp * tail_sum(|k| 1.0 - spec.h.cdf(x + k), tail_tol)?;
    }
    if qm != 0.0 {
        total += qm * tail_sum(|k| spec.h.cdf(x - k), tail_tol)?;
    }
    Ok(total)
}

/// Two-row equality form: `y⁺ − u⁺ = h − x` and `y⁻ − u⁻ = x − h` with
/// integer `y±`, continuous zero-cost slacks `u±`. The second row's
/// right-hand side is modelled as the mirrored marginal; the expectation of
/// the separable value function only depends on the marginals. Pointwise,
/// `v(s, −s)` equals [`sir_value`].
pub fn sir_as_instance(spec: &SirSpec) -> Instance {
    Instance {
        name: "SIR".into(),
        m: 2,
        w: vec![vec![1, 0, -1, 0], vec![0, 1, 0, -1]],
        integer_mask: vec![true, true, false, false],
        c: vec![int(0)],
        x_domain: BoxDomain {
            lo: vec![int(-2)],
            hi: vec![int(2)],
        },
        dist: DistributionSpec {
            q: CostDist::Fixed(vec![spec.q_plus.clone(), spec.q_minus.clone(), int(0), int(0)]),
            t: TechDist::Fixed(vec![vec![int(1)], vec![int(-1)]]),
            h: vec![spec.h.clone(), spec.h.mirrored()],
        },
        alpha: vec![int(0), int(0)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{solve_mip, DEFAULT_NODE_BUDGET};
    use crate::linalg::{from_f64, ratio};

    fn spec(qp: i64, qm: i64, h: Marginal) -> SirSpec {
        SirSpec {
            q_plus: int(qp),
            q_minus: int(qm),
            h,
        }
    }

    fn unit() -> Marginal {
        Marginal::Uniform { a: int(0), b: int(1) }
    }

    #[test]
    fn values() {
        assert_eq!(sir_value(&spec(1, 1, unit()), 0.5), 1.0);
        assert_eq!(sir_value(&spec(1, 1, unit()), 0.0), 0.0);
        assert_eq!(sir_value(&spec(2, 3, unit()), -1.2), 6.0);
    }

    #[test]
    fn expectations() {
        let tol = 1e-12;
        assert!((sir_expected_recourse(&spec(1, 0, unit()), 0.0, tol).unwrap() - 1.0).abs() < 1e-12);
        assert!((sir_expected_recourse(&spec(1, 0, unit()), 0.5, tol).unwrap() - 0.5).abs() < 1e-12);
        let normal = Marginal::Normal { mu: int(0), sigma: int(1) };
        assert_eq!(sir_expected_recourse(&spec(0, 0, normal.clone()), 0.3, tol).unwrap(), 0.0);
        let one = sir_expected_recourse(&spec(1, 2, normal.clone()), 0.3, tol).unwrap();
        let three = sir_expected_recourse(&spec(3, 6, normal), 0.3, tol).unwrap();
        assert!((three - 3.0 * one).abs() < 1e-12);
        assert!(sir_expected_recourse(&spec(1, 1, unit()), 0.0, 0.0).is_err());
    }

    #[test]
    fn encoding_matches_closed_form() {
        let sp = spec(1, 1, unit());
        let inst = sir_as_instance(&sp);
        inst.check().unwrap();
        let q = vec![int(1), int(1), int(0), int(0)];
        for s in [ratio(1, 2), int(2), int(0), ratio(-6, 5), ratio(7, 3)] {
            let v = solve_mip(&q, &[s.clone(), -s.clone()], &inst, DEFAULT_NODE_BUDGET).unwrap().value;
            assert_eq!(to_f64(&v), sir_value(&sp, to_f64(&s)));
        }
        assert_eq!(from_f64(0.5), ratio(1, 2));
    }
}
