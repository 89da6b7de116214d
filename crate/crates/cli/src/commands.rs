use std::io::Write;
use std::path::Path;

use mirlab_core::approx::{box_grid, estimate_recourse, RecourseModel, Which};
use mirlab_core::bases::{dual_vertex, enumerate_bases};
use mirlab_core::bounds::{
    calibrate, cost_samples, parametric_bound, scaling_ratio_table, shift_certificates, sweep_row, BoundConstants,
    SweepParam, SweepRow,
};
use mirlab_core::distributions::{expected_l1_norm, tv_conditional_sum, Marginal};
use mirlab_core::instance::{validate_instance_seeded, CompleteRecourse};
use mirlab_core::linalg::{format_rational, parse_rational, to_f64, Rational};
use mirlab_core::periodic::{d_emp, gamma_mean, reduced_costs};
use mirlab_core::sir::{sir_as_instance, sir_expected_recourse, SirSpec};
use mirlab_core::{load_instance, Instance};

use crate::manifest::RunManifest;
use crate::report::{summarize, SWEEP_COLUMNS};
use crate::{Cli, Command, Failure};

/// Cost vectors used for certificates in `report --instance`.
const REPORT_COST_SAMPLES: usize = 20;

type Out<'a> = &'a mut dyn Write;

pub fn dispatch(cli: &Cli, stdout: Out) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { instance, probes } => validate(instance, *probes, g.seed, stdout),
        Command::Report { csv, instance, probes } => report(csv, instance.as_deref(), *probes, cli, stdout),
        _ => {
            let mut manifest = RunManifest::new(cli)?;
            let mut table = Table::default();
            let result = csv_command(cli, &mut table);
            manifest.finish();
            // Usage errors produce no output; computation errors keep the rows so far.
            if table.header.is_empty() && result.is_err() {
                return result;
            }
            emit(&manifest, &table, g.out.as_deref(), stdout)?;
            result
        }
    }
}

#[derive(Default)]
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn header(&mut self, cols: &[&str]) {
        self.header = cols.iter().map(|s| s.to_string()).collect();
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

fn emit(manifest: &RunManifest, table: &Table, out: Option<&Path>, stdout: Out) -> Result<(), Failure> {
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    if !table.header.is_empty() {
        writer.write_record(&table.header).map_err(csv_err)?;
    }
    for r in &table.rows {
        writer.write_record(r).map_err(csv_err)?;
    }
    let body = writer.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
    let mut bytes = format!("# manifest {}\n", manifest.hash()).into_bytes();
    bytes.extend(body);
    match out {
        Some(path) => {
            std::fs::write(path, &bytes)?;
            manifest.write_beside(path)?;
        }
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Usage(format!("csv error: {e}"))
}

fn load(path: &Path) -> Result<Instance, Failure> {
    load_instance(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn rationals(text: &str) -> Result<Vec<Rational>, Failure> {
    text.split(',')
        .map(|t| parse_rational(t).map_err(|e| Failure::Usage(e.to_string())))
        .collect()
}

fn floats(text: &str) -> Result<Vec<f64>, Failure> {
    Ok(rationals(text)?.iter().map(to_f64).collect())
}

fn join_rat(v: &[Rational]) -> String {
    v.iter().map(format_rational).collect::<Vec<_>>().join(" ")
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn join_usize(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// `--q` if given, else the first support point of a discrete cost law.
fn cost_vector(inst: &Instance, q: Option<&str>) -> Result<Vec<Rational>, Failure> {
    let q = match q {
        Some(text) => rationals(text)?,
        None => inst
            .dist
            .q
            .support()
            .and_then(|s| s.into_iter().next())
            .ok_or_else(|| Failure::Usage("the cost vector is random; pass --q".into()))?,
    };
    if q.len() != inst.n_vars() {
        return Err(Failure::Usage(format!("--q needs {} entries, got {}", inst.n_vars(), q.len())));
    }
    Ok(q)
}

fn parse_marginal(text: &str) -> Result<Marginal, Failure> {
    let bad = || Failure::Usage(format!("cannot parse distribution {text:?} (expected normal:mu,sigma or uniform:a,b)"));
    let (family, params) = text.split_once(':').ok_or_else(bad)?;
    let p = rationals(params)?;
    let m = match (family, p.as_slice()) {
        ("normal", [mu, sigma]) => Marginal::Normal {
            mu: mu.clone(),
            sigma: sigma.clone(),
        },
        ("uniform", [a, b]) => Marginal::Uniform { a: a.clone(), b: b.clone() },
        _ => return Err(bad()),
    };
    m.validate("h")?;
    Ok(m)
}

fn validate(path: &Path, probes: usize, seed: u64, stdout: Out) -> Result<(), Failure> {
    let inst = load(path)?;
    let report = validate_instance_seeded(&inst, probes, seed);
    writeln!(stdout, "instance: {}", inst.name)?;
    write!(stdout, "{report}")?;
    if report.complete_recourse == CompleteRecourse::Inconclusive {
        writeln!(stdout, "warning: complete recourse could not be decided")?;
    }
    if report.passed() {
        writeln!(stdout, "result: pass")?;
        Ok(())
    } else {
        writeln!(stdout, "result: fail")?;
        Err(Failure::Check("validation failed".into()))
    }
}

fn csv_command(cli: &Cli, table: &mut Table) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Bases { instance, q } => {
            let inst = load(instance)?;
            let q = match q {
                Some(_) => Some(cost_vector(&inst, q.as_deref())?),
                None => cost_vector(&inst, None).ok(),
            };
            table.header(&["index", "columns", "p", "b_inv", "dual_feasible", "lambda"]);
            for b in enumerate_bases(&inst) {
                let b_inv = b.b_inv.iter().map(|r| join_rat(r)).collect::<Vec<_>>().join("; ");
                let (feasible, lambda) = match &q {
                    Some(q) if b.is_dual_feasible(q) => ("yes".to_string(), join_rat(&dual_vertex(q, &b))),
                    Some(_) => ("no".to_string(), "-".to_string()),
                    None => ("-".to_string(), "-".to_string()),
                };
                table.row(vec![
                    b.index.to_string(),
                    join_usize(&b.columns),
                    b.p.to_string(),
                    b_inv,
                    feasible,
                    lambda,
                ]);
            }
            Ok(())
        }
        Command::Periodic { instance, q, probes } => {
            let inst = load(instance)?;
            let q = cost_vector(&inst, q.as_deref())?;
            table.header(&["basis", "columns", "p", "lambda", "qbar", "gamma", "gamma_err", "d_emp"]);
            for b in enumerate_bases(&inst).iter().filter(|b| b.is_dual_feasible(&q)) {
                let (gamma, err) = gamma_mean(b, &q, &inst, g.gamma_res)?;
                let d = d_emp(b, &q, &inst, *probes, g.seed)?;
                table.row(vec![
                    b.index.to_string(),
                    join_usize(&b.columns),
                    b.p.to_string(),
                    join_rat(&dual_vertex(&q, b)),
                    join_rat(&reduced_costs(b, &q, &inst).values),
                    gamma.to_string(),
                    err.to_string(),
                    d.map_or("none".into(), |d| d.to_string()),
                ]);
            }
            Ok(())
        }
        Command::Eval { instance, x, which } => {
            let inst = load(instance)?;
            let modes = which
                .split(',')
                .map(|w| w.trim().parse::<Which>())
                .collect::<mirlab_core::Result<Vec<_>>>()?;
            let points = if x.is_empty() {
                box_grid(&inst, 5)
            } else {
                x.iter().map(|t| floats(t)).collect::<Result<_, _>>()?
            };
            let model = RecourseModel::new(&inst, g.gamma_res, &modes)?;
            table.header(&["x", "which", "mean", "std_error", "n", "seed"]);
            for x in &points {
                for &w in &modes {
                    let e = model.estimate(x, w, g.n, g.seed)?;
                    table.row(vec![
                        join_f64(x),
                        w.to_string(),
                        e.mean.to_string(),
                        e.std_error.to_string(),
                        e.n_samples.to_string(),
                        e.seed.to_string(),
                    ]);
                }
            }
            Ok(())
        }
        Command::Sir {
            qplus,
            qminus,
            h,
            x,
            tail_tol,
        } => {
            let spec = SirSpec {
                q_plus: parse_rational(qplus)?,
                q_minus: parse_rational(qminus)?,
                h: parse_marginal(h)?,
            };
            spec.check()?;
            let inst = sir_as_instance(&spec);
            table.header(&[
                "x", "q_plus", "q_minus", "series", "estimate", "std_error", "n", "seed", "within_3se",
            ]);
            for xv in floats(x)? {
                let series = sir_expected_recourse(&spec, xv, *tail_tol)?;
                let e = estimate_recourse(&[xv], &inst, Which::Exact, g.n, g.seed, g.gamma_res)?;
                let within = (e.mean - series).abs() <= 3.0 * e.std_error;
                table.row(vec![
                    xv.to_string(),
                    format_rational(&spec.q_plus),
                    format_rational(&spec.q_minus),
                    series.to_string(),
                    e.mean.to_string(),
                    e.std_error.to_string(),
                    e.n_samples.to_string(),
                    g.seed.to_string(),
                    if within { "yes" } else { "no" }.to_string(),
                ]);
            }
            Ok(())
        }
        Command::Bound {
            instance,
            c,
            param,
            values,
            grid,
        } => {
            let inst = load(instance)?;
            let constants = BoundConstants::compute(&inst);
            let (c, source) = if c == "calibrate" {
                let param: SweepParam = param.parse()?;
                let t = scaling_ratio_table(&inst, param, &rationals(values)?, &box_grid(&inst, *grid), g.n, g.seed, g.gamma_res)?;
                (t.calibrated_c, "calibrated")
            } else {
                let v = c
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| Failure::Usage(format!("--C must be a nonnegative number or calibrate, got {c:?}")))?;
                (v, "given")
            };
            let bound = parametric_bound(Some(c), &inst.dist, g.n, g.seed)?;
            table.header(&[
                "C", "C_source", "gamma1", "gamma2", "gamma", "max_subdet", "E_q_l1", "tv_sum", "bound",
            ]);
            table.row(vec![
                c.to_string(),
                source.to_string(),
                format_rational(&constants.gamma1),
                format_rational(&constants.gamma2),
                format_rational(&constants.gamma),
                constants.max_subdet.to_string(),
                expected_l1_norm(&inst.dist, g.n, g.seed).value.to_string(),
                tv_conditional_sum(&inst.dist)?.to_string(),
                bound.to_string(),
            ]);
            Ok(())
        }
        Command::Sweep {
            instance,
            param,
            values,
            grid,
        } => {
            let inst = load(instance)?;
            let param: SweepParam = param.parse()?;
            let values = rationals(values)?;
            let x_grid = box_grid(&inst, *grid);
            table.header(&SWEEP_COLUMNS);
            let mut rows = Vec::new();
            let mut failure = None;
            for (variant, v) in values.iter().enumerate() {
                match sweep_row(&inst, param, variant, v, &x_grid, g.n, g.seed, g.gamma_res) {
                    Ok(r) => rows.push(r),
                    Err(e) => {
                        failure = Some((variant, v.clone(), e));
                        break;
                    }
                }
            }
            if !rows.is_empty() {
                for r in &calibrate(param, rows).rows {
                    table.row(sweep_cells(r));
                }
            }
            match failure {
                None => Ok(()),
                Some((variant, v, e)) => {
                    table.row(vec![variant.to_string(), format_rational(&v), "error".into(), e.to_string()]);
                    Err(Failure::Check(format!("variant {variant}: {e}")))
                }
            }
        }
        Command::Validate { .. } | Command::Report { .. } => unreachable!("handled by dispatch"),
    }
}

fn sweep_cells(r: &SweepRow) -> Vec<String> {
    vec![
        r.variant.to_string(),
        format_rational(&r.param_value),
        r.sup_err.to_string(),
        r.sup_err_se.to_string(),
        r.e_q_l1.to_string(),
        r.tv_sum.to_string(),
        r.bound.to_string(),
        r.ratio.to_string(),
        format_rational(&r.gamma1),
        format_rational(&r.gamma2),
        r.seed.to_string(),
    ]
}

fn report(csv: &Path, instance: Option<&Path>, probes: usize, cli: &Cli, stdout: Out) -> Result<(), Failure> {
    let text = std::fs::read_to_string(csv).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", csv.display())))?;
    let summary = summarize(&text)?;
    write!(stdout, "{summary}")?;
    if let Some(path) = instance {
        let inst = load(path)?;
        let g = &cli.global;
        let qs = cost_samples(&inst, REPORT_COST_SAMPLES, g.seed);
        let bases = enumerate_bases(&inst);
        writeln!(stdout, "shift certificates ({} cost vectors, {probes} probes):", qs.len())?;
        writeln!(stdout, "basis  columns  p  level  sigma_bar  status  periodicity_gap")?;
        for c in shift_certificates(&inst, &qs, probes, 1e-6, g.gamma_res, g.seed)? {
            let b = &bases[c.basis_index];
            writeln!(
                stdout,
                "{}  {}  {}  {}  {}  {}  {:.3e}",
                c.basis_index,
                join_usize(&b.columns),
                b.p,
                c.level.map_or("-".into(), |l| l.to_string()),
                c.sigma_bar.as_deref().map_or("-".into(), join_f64),
                c.status,
                c.periodicity_gap
            )?;
        }
    }
    Ok(())
}
