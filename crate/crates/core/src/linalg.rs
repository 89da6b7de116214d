//! Exact rational helpers: parsing, conversion and small dense linear algebra.
//!
//! Everything here works on `Vec<Vec<_>>` row-major matrices. Sizes are tiny
//! (m ≤ 3, n ≤ 8), so clarity wins over cache behaviour.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{MirError, Result};

pub type Rational = BigRational;
pub type RatMatrix = Vec<Vec<Rational>>;
pub type IntMatrix = Vec<Vec<i64>>;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"-0.25"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || MirError::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Ok(n) = t.parse::<BigInt>() {
        return Ok(Rational::from_integer(n));
    }
    // Plain decimal notation, no exponent.
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').ok_or_else(bad)?;
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("0{whole}{frac}").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let v = Rational::new(digits, scale);
    Ok(if neg { -v } else { v })
}

/// Formats as `"p"` or `"p/q"`; inverse of [`parse_rational`].
pub fn format_rational(v: &Rational) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

pub fn to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn vec_to_f64(v: &[Rational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

pub fn vec_from_f64(v: &[f64]) -> Vec<Rational> {
    v.iter().map(|&x| from_f64(x)).collect()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn l1_norm(v: &[Rational]) -> Rational {
    v.iter().fold(Rational::zero(), |acc, x| acc + x.abs())
}

pub fn mat_vec(a: &RatMatrix, x: &[Rational]) -> Vec<Rational> {
    a.iter().map(|row| dot(row, x)).collect()
}

pub fn to_rat_matrix(a: &IntMatrix) -> RatMatrix {
    a.iter()
        .map(|row| row.iter().map(|&v| int(v)).collect())
        .collect()
}

/// Determinant of a square integer matrix by fraction-free (Bareiss) elimination.
pub fn int_det(a: &IntMatrix) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Inverse by Gauss-Jordan elimination; `None` when singular.
pub fn inverse(a: &RatMatrix) -> Option<RatMatrix> {
    let n = a.len();
    let mut aug: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, pivot);
        let inv = aug[col][col].recip();
        for v in aug[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                for c in 0..2 * n {
                    let delta = &f * &aug[col][c];
                    aug[r][c] -= delta;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Solves `a x = b` for square nonsingular `a`.
pub fn solve(a: &RatMatrix, b: &[Rational]) -> Option<Vec<Rational>> {
    inverse(a).map(|inv| mat_vec(&inv, b))
}

pub fn transpose<T: Clone>(a: &[Vec<T>]) -> Vec<Vec<T>> {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j].clone()).collect())
        .collect()
}

/// Indices of a maximal set of linearly independent rows, in increasing order.
pub fn independent_rows(a: &RatMatrix) -> Vec<usize> {
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut chosen = Vec::new();
    for (idx, row) in a.iter().enumerate() {
        let mut r = row.clone();
        for (b, &p) in basis.iter().zip(&pivots) {
            if !r[p].is_zero() {
                let f = &r[p] / &b[p];
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= &f * y;
                }
            }
        }
        if let Some(p) = r.iter().position(|x| !x.is_zero()) {
            basis.push(r);
            pivots.push(p);
            chosen.push(idx);
        }
    }
    chosen
}

pub fn rank(a: &RatMatrix) -> usize {
    independent_rows(a).len()
}

/// Basis of `{x : a x = 0}` from the reduced row echelon form; rows are scaled
/// to coprime integers.
pub fn null_space(a: &RatMatrix, cols: usize) -> RatMatrix {
    let mut r: RatMatrix = a.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..r.len()).find(|&i| !r[i][col].is_zero()) else {
            continue;
        };
        r.swap(row, p);
        let inv = r[row][col].recip();
        for v in r[row].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..r.len() {
            if i != row && !r[i][col].is_zero() {
                let f = r[i][col].clone();
                for c in 0..cols {
                    let d = &f * &r[row][c];
                    r[i][c] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut x = vec![Rational::zero(); cols];
            x[free] = Rational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                x[pc] = -&r[i][free];
            }
            integer_scaled(&x)
        })
        .collect()
}

/// Multiplies `v` by the least common denominator of its entries.
pub fn integer_scaled(v: &[Rational]) -> Vec<Rational> {
    let l = v
        .iter()
        .fold(BigInt::one(), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
    v.iter().map(|x| x * Rational::from_integer(l.clone())).collect()
}

/// Whether `a z = b` has an integer solution `z` (no sign restriction), for an
/// integer matrix `a`. Column-style Hermite reduction followed by forward
/// substitution.
pub fn integer_solvable(a: &RatMatrix, b: &[Rational]) -> bool {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut l: Vec<Vec<BigInt>> = a
        .iter()
        .map(|r| r.iter().map(|x| x.to_integer()).collect())
        .collect();
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; rows];
    let mut next = 0;
    for r in 0..rows {
        if next == cols {
            break;
        }
        // Euclid on the entries of row r in columns next.. using column operations.
        loop {
            let nz: Vec<usize> = (next..cols).filter(|&c| !l[r][c].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&c) = nz.first() {
                    for row in l.iter_mut() {
                        row.swap(next, c);
                    }
                    pivot_of_row[r] = Some(next);
                    next += 1;
                }
                break;
            }
            let &small = nz.iter().min_by_key(|&&c| l[r][c].abs()).expect("nonempty");
            for &c in &nz {
                if c == small {
                    continue;
                }
                let f = &l[r][c] / &l[r][small];
                for row in l.iter_mut() {
                    let d = &f * &row[small];
                    row[c] -= d;
                }
            }
        }
    }
    let mut w: Vec<Rational> = Vec::new();
    for r in 0..rows {
        let mut rest = b[r].clone();
        for (j, wj) in w.iter().enumerate() {
            rest -= Rational::from_integer(l[r][j].clone()) * wj;
        }
        match pivot_of_row[r] {
            Some(p) => {
                let v = rest / Rational::from_integer(l[r][p].clone());
                if !v.is_integer() {
                    return false;
                }
                w.push(v);
            }
            None => {
                if !rest.is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

/// `Δ(W)`: the largest absolute determinant over all square submatrices.
pub fn max_subdeterminant(w: &IntMatrix) -> u64 {
    use itertools::Itertools;
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    let mut best = BigInt::zero();
    for size in 1..=rows.min(cols) {
        for rs in (0..rows).combinations(size) {
            for cs in (0..cols).combinations(size) {
                let sub: IntMatrix = rs.iter().map(|&i| cs.iter().map(|&j| w[i][j]).collect()).collect();
                let d = int_det(&sub).abs();
                if d > best {
                    best = d;
                }
            }
        }
    }
    best.to_u64().expect("subdeterminant fits in u64")
}

/// Componentwise ceiling of a rational.
pub fn ceil(v: &Rational) -> Rational {
    v.ceil()
}
