//! Two-stage mixed-integer recourse model data and its JSON file format.
//!
//! ```text
//! min_{x ∈ X} cᵀx + E[v^q(h − Tx)],   v^q(s) = min { qᵀy : Wy = s, y ∈ Y }
//! ```
//!
//! `Y` mixes integer and continuous nonnegative variables according to
//! `integer_mask`. `X` is modelled as an axis-aligned box; it only scopes the
//! first-stage grid used for sup-error estimates.

use std::path::Path;

use num_traits::Signed;
use serde_json::{json, Value};

use crate::distributions::{
    h_from_json, marginal_to_json, q_from_json, q_to_json, t_from_json, t_to_json, DistributionSpec,
};
use crate::error::{MirError, Result};
use crate::json::{array, field, rat_vec_json, rational_vec};
use crate::linalg::{IntMatrix, Rational};

pub use crate::validate::{validate_instance, validate_instance_seeded, CompleteRecourse, ValidationReport};

#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub name: String,
    pub m: usize,
    pub w: IntMatrix,
    pub integer_mask: Vec<bool>,
    pub c: Vec<Rational>,
    pub x_domain: BoxDomain,
    pub dist: DistributionSpec,
    pub alpha: Vec<Rational>,
}

impl Instance {
    /// Number of second-stage variables `n₂ + n̄₂`.
    pub fn n_vars(&self) -> usize {
        self.integer_mask.len()
    }

    /// First-stage dimension `n₁`.
    pub fn n1(&self) -> usize {
        self.c.len()
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        self.w.iter().map(|row| row[j]).collect()
    }

    /// Checks every structural invariant; run by the loader and by anything
    /// that builds instances in code.
    pub fn check(&self) -> Result<()> {
        if self.m == 0 {
            return Err(MirError::invariant("m", "must be at least 1"));
        }
        if self.w.len() != self.m {
            return Err(MirError::invariant("W", format!("expected {} rows", self.m)));
        }
        let n = self.integer_mask.len();
        for (i, row) in self.w.iter().enumerate() {
            if row.len() != n {
                return Err(MirError::invariant(
                    format!("W[{i}]"),
                    format!("expected {n} columns to match integer_mask"),
                ));
            }
        }
        if n < self.m {
            return Err(MirError::invariant("W", "need at least m columns"));
        }
        if self.alpha.len() != self.m {
            return Err(MirError::invariant("alpha", format!("expected length {}", self.m)));
        }
        let n1 = self.c.len();
        if self.x_domain.lo.len() != n1 || self.x_domain.hi.len() != n1 {
            return Err(MirError::invariant("x_domain", format!("bounds must have length {n1}")));
        }
        if let Some(i) = (0..n1).find(|&i| self.x_domain.lo[i] > self.x_domain.hi[i]) {
            return Err(MirError::invariant(format!("x_domain.lo[{i}]"), "exceeds hi"));
        }
        self.dist.validate(n, self.m, n1)
    }

    /// Copy with the cost distribution pushed forward under `q ↦ c·q`.
    pub fn scale_costs(&self, c_scale: &Rational) -> Result<Instance> {
        if !c_scale.is_positive() {
            return Err(MirError::InvalidArgument(format!(
                "cost scale must be positive, got {c_scale}"
            )));
        }
        Ok(Instance {
            dist: self.dist.scale_costs(c_scale),
            ..self.clone()
        })
    }

    pub fn from_json(v: &Value) -> Result<Instance> {
        let name = v
            .get("name")
            .and_then(Value::as_str)
            .unwrap_or("unnamed")
            .to_string();
        let m = field(v, "m", "")?
            .as_u64()
            .ok_or_else(|| MirError::invariant("m", "expected a nonnegative integer"))? as usize;
        let w = parse_w(field(v, "W", "")?)?;
        let integer_mask = array(field(v, "integer_mask", "")?, "integer_mask")?
            .iter()
            .enumerate()
            .map(|(i, b)| {
                b.as_bool()
                    .ok_or_else(|| MirError::invariant(format!("integer_mask[{i}]"), "expected a boolean"))
            })
            .collect::<Result<Vec<_>>>()?;
        let c = rational_vec(field(v, "c", "")?, "c")?;
        let xd = field(v, "x_domain", "")?;
        let x_domain = BoxDomain {
            lo: rational_vec(field(xd, "lo", "x_domain")?, "x_domain.lo")?,
            hi: rational_vec(field(xd, "hi", "x_domain")?, "x_domain.hi")?,
        };
        let dist = DistributionSpec {
            q: q_from_json(field(v, "q_dist", "")?)?,
            t: t_from_json(field(v, "T", "")?)?,
            h: h_from_json(field(v, "h_dist", "")?)?,
        };
        let alpha = rational_vec(field(v, "alpha", "")?, "alpha")?;
        let inst = Instance {
            name,
            m,
            w,
            integer_mask,
            c,
            x_domain,
            dist,
            alpha,
        };
        inst.check()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "m": self.m,
            "W": self.w,
            "integer_mask": self.integer_mask,
            "c": rat_vec_json(&self.c),
            "x_domain": {"lo": rat_vec_json(&self.x_domain.lo), "hi": rat_vec_json(&self.x_domain.hi)},
            "T": t_to_json(&self.dist.t),
            "q_dist": q_to_json(&self.dist.q),
            "h_dist": self.dist.h.iter().map(marginal_to_json).collect::<Vec<_>>(),
            "alpha": rat_vec_json(&self.alpha),
        })
    }

    pub fn parse(text: &str) -> Result<Instance> {
        let v: Value = serde_json::from_str(text).map_err(|e| MirError::Parse(e.to_string()))?;
        Instance::from_json(&v)
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serialisable")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string_pretty() + "\n")?;
        Ok(())
    }
}

/// W entries must be JSON integers (or integral rationals); anything else is
/// reported with its exact position.
fn parse_w(v: &Value) -> Result<IntMatrix> {
    array(v, "W")?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            array(row, &format!("W[{i}]"))?
                .iter()
                .enumerate()
                .map(|(j, x)| {
                    let path = format!("W[{i}][{j}]");
                    let r = crate::json::rational(x, &path)?;
                    if !r.is_integer() {
                        return Err(MirError::invariant(path, format!("entry {r} is not an integer")));
                    }
                    num_traits::ToPrimitive::to_i64(r.numer())
                        .ok_or_else(|| MirError::invariant(path, "entry out of range"))
                })
                .collect()
        })
        .collect()
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    Instance::parse(&text)
}
