//! Cross-checks between the independent evaluators of `v`, `ψ` and `Γ`.

use mirlab_core::approx::{build_components, v_hat};
use mirlab_core::bases::{dual_feasible_indices, enumerate_bases, lp_by_enumeration};
use mirlab_core::bounds::{cook_gamma1, BoundConstants};
use mirlab_core::exact::{solve_lp, solve_mip, ValueEvaluator, DEFAULT_NODE_BUDGET};
use mirlab_core::fixtures::{e1, e3, with_w};
use mirlab_core::linalg::{int, l1_norm, ratio, to_f64, vec_to_f64, Rational};
use mirlab_core::periodic::{gamma_mean, psi_value, reduced_costs, GammaTables, GroupEvaluator};
use mirlab_core::sir::{sir_as_instance, SirSpec};
use mirlab_core::distributions::Marginal;
use mirlab_core::Instance;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `2y₁ − 3y₂ + u = s` with integer `y`: `Δ(W) = 3`.
fn wide() -> Instance {
    with_w(vec![vec![2, -3, 1]], vec![true, true, false])
}

/// Integer basis of determinant −2 plus continuous surplus columns.
fn skew() -> Instance {
    with_w(vec![vec![1, 1, -1, 0], vec![1, -1, 0, -1]], vec![true, true, false, false])
}

fn sir() -> Instance {
    sir_as_instance(&SirSpec {
        q_plus: int(1),
        q_minus: int(2),
        h: Marginal::Normal { mu: int(0), sigma: int(1) },
    })
}

fn rand_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    let d = rng.random_range(1..=8);
    ratio(rng.random_range(lo * d..=hi * d), d)
}

fn rand_q(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n)
        .map(|_| ratio(rng.random_range(1..=16), rng.random_range(1..=4)))
        .collect()
}

fn rand_s(rng: &mut ChaCha8Rng, m: usize) -> Vec<Rational> {
    (0..m).map(|_| rand_rational(rng, -4, 4)).collect()
}

#[test]
fn value_evaluator_matches_branch_and_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for inst in [e1(), e3(), sir(), wide(), skew()] {
        let ev = ValueEvaluator::new(&inst);
        for _ in 0..150 {
            let q = rand_q(&mut rng, inst.n_vars());
            let s = rand_s(&mut rng, inst.m);
            let exact = to_f64(&solve_mip(&q, &s, &inst, DEFAULT_NODE_BUDGET).unwrap().value);
            let fast = ev.value(&vec_to_f64(&q), &vec_to_f64(&s)).unwrap();
            assert!((exact - fast).abs() <= 1e-9 * (1.0 + exact.abs()), "{}: {exact} vs {fast}", inst.name);
        }
    }
}

#[test]
fn group_evaluator_matches_exact_psi() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for inst in [e1(), e3(), wide(), skew()] {
        let bases = enumerate_bases(&inst);
        for _ in 0..20 {
            let q = rand_q(&mut rng, inst.n_vars());
            for k in dual_feasible_indices(&q, &bases) {
                let ev = GroupEvaluator::new(&bases[k], &inst);
                let qbar: Vec<f64> = reduced_costs(&bases[k], &q, &inst).values.iter().map(to_f64).collect();
                for _ in 0..5 {
                    let s = rand_s(&mut rng, inst.m);
                    let exact = to_f64(&psi_value(&bases[k], &q, &s, &inst).unwrap());
                    let fast = ev.psi(&qbar, &vec_to_f64(&s)).unwrap();
                    assert!((exact - fast).abs() <= 1e-9, "{} basis {k}: {exact} vs {fast}", inst.name);
                }
            }
        }
    }
}

#[test]
fn gamma_closed_form_on_e1() {
    // On (0, 1) the first basis has ψ(s) = (q₁ + q₂)(1 − s), so Γ = (q₁ + q₂)/2;
    // the continuous basis has ψ ≡ 0.
    let inst = e1();
    let bases = enumerate_bases(&inst);
    let tables: Vec<GammaTables> = bases
        .iter()
        .map(|b| GammaTables::build(&GroupEvaluator::new(b, &inst), 1024).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let q = rand_q(&mut rng, 2);
        let want = to_f64(&((&q[0] + &q[1]) / int(2)));
        let (g0, e0) = gamma_mean(&bases[0], &q, &inst, 1024).unwrap();
        assert!((g0 - want).abs() < 1e-12 && e0 < 1e-12);
        assert_eq!(gamma_mean(&bases[1], &q, &inst, 1024).unwrap().0, 0.0);
        let qbar: Vec<f64> = reduced_costs(&bases[0], &q, &inst).values.iter().map(to_f64).collect();
        assert!((tables[0].gamma(&qbar).0 - want).abs() < 1e-12);
    }
}

#[test]
fn proximity_and_approximation_chain_on_wider_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for inst in [wide(), skew()] {
        let bases = enumerate_bases(&inst);
        let constants = BoundConstants::compute(&inst);
        let gamma = to_f64(&constants.gamma);
        for _ in 0..10 {
            let q = rand_q(&mut rng, inst.n_vars());
            let comps = build_components(&inst, &bases, &q, 256).unwrap();
            let err = comps.iter().map(|c| c.gamma_err).fold(0.0, f64::max);
            let norm = l1_norm(&q);
            for _ in 0..10 {
                let s = rand_s(&mut rng, inst.m);
                let v = solve_mip(&q, &s, &inst, DEFAULT_NODE_BUDGET).unwrap().value;
                let lp = solve_lp(&q, &s, &inst).unwrap().value;
                assert!(lp <= v && &v - &lp <= cook_gamma1(&inst) * &norm);
                let vh = v_hat(&vec_to_f64(&s), &comps).unwrap();
                assert!((to_f64(&v) - vh).abs() <= gamma * to_f64(&norm) + err + 1e-9);
            }
        }
    }
}

fn instances() -> Vec<Instance> {
    vec![e1(), e3(), sir(), wide(), skew()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_le_mip_and_enumeration_agrees(which in 0usize..5, seed in any::<u64>()) {
        let inst = &instances()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = rand_q(&mut rng, inst.n_vars());
        let s = rand_s(&mut rng, inst.m);
        let lp = solve_lp(&q, &s, inst).unwrap();
        let mip = solve_mip(&q, &s, inst, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert_eq!(&lp.value, &lp_by_enumeration(&q, &s, &enumerate_bases(inst)).unwrap());
        prop_assert!(lp.value <= mip.value);
    }

    #[test]
    fn values_are_homogeneous_in_q(which in 0usize..5, c in 1i64..6, seed in any::<u64>()) {
        let inst = &instances()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = rand_q(&mut rng, inst.n_vars());
        let s = rand_s(&mut rng, inst.m);
        let cq: Vec<Rational> = q.iter().map(|v| v * int(c)).collect();
        let v = solve_mip(&q, &s, inst, DEFAULT_NODE_BUDGET).unwrap().value;
        let cv = solve_mip(&cq, &s, inst, DEFAULT_NODE_BUDGET).unwrap().value;
        prop_assert_eq!(cv, v * int(c));
        let l = solve_lp(&q, &s, inst).unwrap().value;
        prop_assert_eq!(solve_lp(&cq, &s, inst).unwrap().value, l * int(c));
    }
}
