use std::fmt;

use mirlab_core::linalg::{parse_rational, to_f64};

use crate::Failure;

/// Sweep columns, in output order.
pub const SWEEP_COLUMNS: [&str; 11] = [
    "variant",
    "param_value",
    "sup_err",
    "sup_err_se",
    "E_q_l1",
    "tv_sum",
    "bound",
    "ratio",
    "gamma1",
    "gamma2",
    "seed",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub rows: usize,
    pub error_rows: usize,
    pub manifest: Option<String>,
    /// Largest ratio; an empirical constant.
    pub calibrated_c: f64,
    /// `max ratio / min ratio`.
    pub ratio_spread: f64,
    pub bound_decreasing: bool,
    /// Each step up by at most three combined standard errors.
    pub sup_err_nonincreasing: bool,
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(m) = &self.manifest {
            writeln!(f, "manifest: {m}")?;
        }
        writeln!(f, "rows: {}", self.rows)?;
        if self.error_rows > 0 {
            writeln!(f, "error rows: {}", self.error_rows)?;
        }
        writeln!(f, "calibrated_C (empirical): {}", self.calibrated_c)?;
        writeln!(
            f,
            "bound decreasing: {}; ratio spread: {}",
            yes_no(self.bound_decreasing),
            self.ratio_spread
        )?;
        writeln!(f, "ratio spread <= 1+1e-12: {}", yes_no(self.ratio_spread <= 1.0 + 1e-12))?;
        writeln!(f, "sup_err non-increasing within 3 SE: {}", yes_no(self.sup_err_nonincreasing))
    }
}

fn number(cell: &str) -> Option<f64> {
    cell.parse::<f64>()
        .ok()
        .or_else(|| parse_rational(cell).ok().map(|r| to_f64(&r)))
        .filter(|v| v.is_finite())
}

struct Row {
    sup_err: f64,
    se: f64,
    bound: f64,
    ratio: f64,
}

/// Reads a sweep CSV produced by `mirlab sweep`.
pub fn summarize(text: &str) -> Result<Summary, Failure> {
    let manifest = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# manifest "))
        .map(|h| h.trim().to_string());
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let malformed = |m: String| Failure::Usage(format!("malformed CSV: {m}"));
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(Failure::Usage("no data rows".into()));
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| malformed(format!("missing column {name}")))
    };
    let (i_sup, i_se, i_bound, i_ratio) = (col("sup_err")?, col("sup_err_se")?, col("bound")?, col("ratio")?);
    let mut rows = Vec::new();
    let mut error_rows = 0;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        if rec.get(i_sup) == Some("error") {
            error_rows += 1;
            continue;
        }
        let get = |i: usize| {
            rec.get(i)
                .and_then(number)
                .ok_or_else(|| malformed(format!("row {}: column {} is not a finite number", line + 1, headers[i].to_string())))
        };
        rows.push(Row {
            sup_err: get(i_sup)?,
            se: get(i_se)?,
            bound: get(i_bound)?,
            ratio: get(i_ratio)?,
        });
    }
    if rows.is_empty() {
        return Err(Failure::Usage("no data rows".into()));
    }
    let max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(Summary {
        rows: rows.len(),
        error_rows,
        manifest,
        calibrated_c: max,
        ratio_spread: max / min,
        bound_decreasing: rows.windows(2).all(|w| w[1].bound < w[0].bound),
        sup_err_nonincreasing: rows
            .windows(2)
            .all(|w| w[1].sup_err <= w[0].sup_err + 3.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt()),
    })
}
