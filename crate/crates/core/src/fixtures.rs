//! The bundled E1/E2/E3 instance families and small builders for tests.

use crate::distributions::{CostDist, DistributionSpec, Marginal, TechDist};
use crate::instance::{BoxDomain, Instance};
use crate::linalg::{int, IntMatrix, Rational};

fn identity(m: usize) -> Vec<Vec<Rational>> {
    (0..m)
        .map(|i| (0..m).map(|j| int(i64::from(i == j))).collect())
        .collect()
}

/// Instance with the given recourse matrix, unit costs, `T = I`, standard
/// normal right-hand sides and first-stage box `[-1, 1]^m`.
pub fn with_w(w: IntMatrix, integer_mask: Vec<bool>) -> Instance {
    let m = w.len();
    let n = integer_mask.len();
    Instance {
        name: "custom".into(),
        m,
        w,
        integer_mask,
        c: vec![int(0); m],
        x_domain: BoxDomain {
            lo: vec![int(-1); m],
            hi: vec![int(1); m],
        },
        dist: DistributionSpec {
            q: CostDist::Fixed(vec![int(1); n]),
            t: TechDist::Fixed(identity(m)),
            h: vec![
                Marginal::Normal {
                    mu: int(0),
                    sigma: int(1)
                };
                m
            ],
        },
        alpha: vec![int(0); m],
    }
}

/// `W = [1 -1]` with an integer first column: rounded-up surplus plus a
/// continuous shortage.
pub fn e1() -> Instance {
    Instance {
        name: "E1".into(),
        ..with_w(vec![vec![1, -1]], vec![true, false])
    }
}

/// Pure-integer variant of E1; complete recourse fails at fractional `s`.
pub fn e2_pure_integer() -> Instance {
    Instance {
        name: "E2".into(),
        ..with_w(vec![vec![1, -1]], vec![true, true])
    }
}

/// Two separable copies of E1.
pub fn e3() -> Instance {
    Instance {
        name: "E3".into(),
        ..with_w(
            vec![vec![1, 0, -1, 0], vec![0, 1, 0, -1]],
            vec![true, true, false, false],
        )
    }
}

/// `W = [d]` with one continuous variable.
pub fn single_column(d: i64) -> Instance {
    Instance {
        name: format!("W=[[{d}]]"),
        ..with_w(vec![vec![d]], vec![false])
    }
}
