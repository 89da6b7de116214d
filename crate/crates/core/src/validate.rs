//! Checks of complete and sufficiently expensive recourse.
//!
//! Completeness of mixed-integer recourse cannot be settled by a cone test
//! alone. It is verified outright when the continuous columns positively span
//! ℝ^m, refuted by an explicit right-hand side, or otherwise verified on
//! probe right-hand sides, which is a desk-scale sufficient check.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::cost_samples;
use crate::distributions::mix_seed;
use crate::error::MirError;
use crate::exact::{cone_gap_witness, dual_feasible_point, solve_mip};
use crate::instance::Instance;
use crate::linalg::{format_rational, ratio, Rational};

/// Node budget for a single probe solve.
pub const PROBE_NODE_BUDGET: usize = 100_000;

/// Cost vectors checked for sufficient expensiveness when `q` is continuous.
pub const COST_SAMPLES: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub enum CompleteRecourse {
    Verified,
    /// `Wy = witness` has no solution in `Y`.
    Refuted { witness: Vec<Rational> },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub complete_recourse: CompleteRecourse,
    pub sufficiently_expensive: bool,
    /// `(q, λ)` with `λᵀW ≤ q` for the first checked cost vector.
    pub dual_witness: Option<(Vec<Rational>, Vec<Rational>)>,
    pub w_integer: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    /// Nothing was refuted; inconclusive completeness only warns.
    pub fn passed(&self) -> bool {
        self.sufficiently_expensive && self.w_integer && !matches!(self.complete_recourse, CompleteRecourse::Refuted { .. })
    }
}

fn fmt_vec(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(format_rational).collect();
    format!("({})", parts.join(", "))
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.complete_recourse {
            CompleteRecourse::Verified => writeln!(f, "complete recourse: verified")?,
            CompleteRecourse::Refuted { witness } => {
                writeln!(f, "complete recourse: refuted, witness s = {}", fmt_vec(witness))?
            }
            CompleteRecourse::Inconclusive => writeln!(f, "complete recourse: inconclusive")?,
        }
        write!(f, "sufficiently expensive: {}", if self.sufficiently_expensive { "yes" } else { "no" })?;
        if let Some((q, l)) = &self.dual_witness {
            write!(f, ", lambda = {} for q = {}", fmt_vec(l), fmt_vec(q))?;
        }
        writeln!(f)?;
        writeln!(f, "W integer: {}", if self.w_integer { "yes" } else { "no" })?;
        for m in &self.messages {
            writeln!(f, "note: {m}")?;
        }
        Ok(())
    }
}

/// Probe right-hand sides: `(1/2, …, 1/2)` first, then random rationals
/// with denominators up to 8 in `[-4, 4]^m`.
fn probes(m: usize, count: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x7661_6c69));
    let mut out = vec![vec![ratio(1, 2); m]];
    while out.len() < count {
        out.push(
            (0..m)
                .map(|_| {
                    let d = rng.random_range(1..=8);
                    ratio(rng.random_range(-4 * d..=4 * d), d)
                })
                .collect(),
        );
    }
    out
}

fn check_complete(inst: &Instance, probe_count: usize, seed: u64, messages: &mut Vec<String>) -> CompleteRecourse {
    let continuous: Vec<Vec<i64>> = inst
        .w
        .iter()
        .map(|row| row.iter().zip(&inst.integer_mask).filter(|(_, &i)| !i).map(|(v, _)| *v).collect())
        .collect();
    if !continuous[0].is_empty() && cone_gap_witness(&continuous).is_none() {
        messages.push("continuous columns positively span R^m".into());
        return CompleteRecourse::Verified;
    }
    if let Some(e) = cone_gap_witness(&inst.w) {
        messages.push("columns of W do not positively span R^m".into());
        return CompleteRecourse::Refuted { witness: e };
    }
    let zero = vec![Rational::from_integer(0.into()); inst.n_vars()];
    let mut exhausted = 0;
    for s in probes(inst.m, probe_count, seed) {
        match solve_mip(&zero, &s, inst, PROBE_NODE_BUDGET) {
            Ok(_) => {}
            Err(MirError::Infeasible) => return CompleteRecourse::Refuted { witness: s },
            Err(_) => exhausted += 1,
        }
    }
    if exhausted > 0 {
        messages.push(format!("{exhausted} probe solves hit the node budget"));
        return CompleteRecourse::Inconclusive;
    }
    messages.push(format!("completeness checked on {probe_count} probe right-hand sides only"));
    CompleteRecourse::Verified
}

pub fn validate_instance(inst: &Instance, probe_count: usize) -> ValidationReport {
    validate_instance_seeded(inst, probe_count, 0)
}

pub fn validate_instance_seeded(inst: &Instance, probe_count: usize, seed: u64) -> ValidationReport {
    let mut messages = Vec::new();
    let probe_count = probe_count.max(1);
    let complete_recourse = check_complete(inst, probe_count, seed, &mut messages);
    let mut dual_witness = None;
    let mut sufficiently_expensive = true;
    for q in cost_samples(inst, COST_SAMPLES, seed) {
        match dual_feasible_point(&inst.w, &q) {
            Some(l) => {
                if dual_witness.is_none() {
                    dual_witness = Some((q, l));
                }
            }
            None => {
                messages.push(format!("no lambda with lambda'W <= q for q = {}", fmt_vec(&q)));
                sufficiently_expensive = false;
                break;
            }
        }
    }
    ValidationReport {
        complete_recourse,
        sufficiently_expensive,
        dual_witness,
        // Guaranteed by the integer matrix type once loaded.
        w_integer: true,
        messages,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::CostDist;
    use crate::exact::is_dual_feasible;
    use crate::fixtures::{e1, e2_pure_integer, e3, with_w};
    use crate::linalg::int;

    #[test]
    fn e1_and_e3_pass() {
        let r = validate_instance(&e1(), 20);
        assert_eq!(r.complete_recourse, CompleteRecourse::Verified);
        assert!(r.sufficiently_expensive);
        let (q, l) = r.dual_witness.clone().unwrap();
        assert!(is_dual_feasible(&e1().w, &l, &q));
        assert!(r.passed());
        assert_eq!(validate_instance(&e3(), 20).complete_recourse, CompleteRecourse::Verified);
    }

    #[test]
    fn pure_integer_is_refuted_at_one_half() {
        let r = validate_instance(&e2_pure_integer(), 5);
        assert_eq!(r.complete_recourse, CompleteRecourse::Refuted { witness: vec![ratio(1, 2)] });
        assert!(!r.passed());
        assert!(r.to_string().contains("witness s = (1/2)"));
    }

    #[test]
    fn one_sided_cone_is_refuted() {
        let r = validate_instance(&with_w(vec![vec![1, 1]], vec![false, false]), 5);
        assert_eq!(r.complete_recourse, CompleteRecourse::Refuted { witness: vec![int(-1)] });
    }

    #[test]
    fn mixed_with_spanning_columns_uses_probes() {
        // y1 − y2 + 2u = s: u alone covers s ≥ 0, an integer y2 shifts the rest.
        let inst = with_w(vec![vec![1, -1, 2]], vec![true, true, false]);
        let r = validate_instance(&inst, 30);
        assert_eq!(r.complete_recourse, CompleteRecourse::Verified);
        assert!(r.messages.iter().any(|m| m.contains("probe")));
    }

    #[test]
    fn negative_costs_are_not_sufficiently_expensive() {
        let mut inst = e1();
        inst.dist.q = CostDist::Fixed(vec![int(-1), int(-1)]);
        let r = validate_instance(&inst, 3);
        assert!(!r.sufficiently_expensive);
        assert!(!r.passed());
    }

    #[test]
    fn never_verified_with_refuting_probe() {
        for count in [1, 5, 40] {
            let r = validate_instance(&e2_pure_integer(), count);
            assert!(matches!(r.complete_recourse, CompleteRecourse::Refuted { .. }));
        }
    }
}
