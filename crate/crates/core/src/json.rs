//! Path-aware accessors over `serde_json::Value` used by the instance loader.

use serde_json::Value;

use crate::error::{MirError, Result};
use crate::linalg::{format_rational, from_f64, parse_rational, Rational};

pub(crate) fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| MirError::invariant(join(path, key), "missing field"))
}

pub(crate) fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

pub(crate) fn str_field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a str> {
    field(obj, key, path)?
        .as_str()
        .ok_or_else(|| MirError::invariant(join(path, key), "expected a string"))
}

/// Rationals are accepted as `"p/q"` strings, decimal strings, or JSON numbers.
pub(crate) fn rational(v: &Value, path: &str) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s).map_err(|e| MirError::invariant(path, e.to_string())),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(crate::linalg::int(i))
            } else if let Some(f) = n.as_f64().filter(|f| f.is_finite()) {
                Ok(from_f64(f))
            } else {
                Err(MirError::invariant(path, "number out of range"))
            }
        }
        _ => Err(MirError::invariant(path, "expected a rational (string or number)")),
    }
}

pub(crate) fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| MirError::invariant(path, "expected an array"))
}

pub(crate) fn rational_vec(v: &Value, path: &str) -> Result<Vec<Rational>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| rational(x, &format!("{path}[{i}]")))
        .collect()
}

pub(crate) fn rational_matrix(v: &Value, path: &str) -> Result<Vec<Vec<Rational>>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, row)| rational_vec(row, &format!("{path}[{i}]")))
        .collect()
}

pub(crate) fn rat_json(v: &Rational) -> Value {
    Value::String(format_rational(v))
}

pub(crate) fn rat_vec_json(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rat_json).collect())
}

pub(crate) fn rat_matrix_json(a: &[Vec<Rational>]) -> Value {
    Value::Array(a.iter().map(|r| rat_vec_json(r)).collect())
}
