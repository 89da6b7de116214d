use std::path::PathBuf;
use std::process::{Command, Output};

fn instance(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "instances", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn mirlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Data rows of a CSV, comment and header lines dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn col(text: &str, name: &str) -> Vec<f64> {
    let header: Vec<&str> = text.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    rows(text).iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn validate_exit_codes() {
    let ok = mirlab(&["validate", &instance("e1.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("complete recourse: verified"));
    let refuted = mirlab(&["validate", &instance("e2_pure_integer.json")]);
    assert_eq!(refuted.status.code(), Some(1));
    assert!(stdout(&refuted).contains("witness s = (1/2)"));
    assert_eq!(mirlab(&["validate", "missing.json"]).status.code(), Some(2));
    assert_eq!(mirlab(&["validate", &instance("e3.json")]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let bogus = mirlab(&["sweep", &instance("e1.json"), "--param", "bogus", "--values", "1"]);
    assert_eq!(bogus.status.code(), Some(2));
    assert!(bogus.stdout.is_empty());
    assert_eq!(mirlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mirlab(&["eval", &instance("e1.json"), "--n", "many"]).status.code(), Some(2));
    assert_eq!(mirlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn q_scale_sweep_doubles() {
    let o = mirlab(&["sweep", &instance("e1.json"), "--param", "q_scale", "--values", "1,2,4", "--n", "3000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# manifest "));
    let sup = col(&text, "sup_err");
    assert_eq!(sup.len(), 3);
    assert_eq!(sup[1], 2.0 * sup[0]);
    assert_eq!(sup[2], 2.0 * sup[1]);
    let ratio = col(&text, "ratio");
    assert!(ratio.iter().all(|r| *r == ratio[0]));
}

#[test]
fn h_sigma_sweep_report_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = ["sweep", &instance("e1.json"), "--param", "h_sigma", "--values", "0.5,1,2,4", "--n", "3000", "--seed", "7"];
    let mut args_a = common.to_vec();
    let (pa, pb) = (a.to_string_lossy().into_owned(), b.to_string_lossy().into_owned());
    args_a.extend(["--threads", "1", "--out", &pa]);
    let mut args_b = common.to_vec();
    args_b.extend(["--threads", "3", "--out", &pb]);
    assert_eq!(mirlab(&args_a).status.code(), Some(0));
    assert_eq!(mirlab(&args_b).status.code(), Some(0));
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    assert!(dir.path().join("a.csv.manifest.json").exists());
    let tv = col(&ta, "tv_sum");
    assert_eq!(tv.len(), 4);
    for w in tv.windows(2) {
        assert!((w[1] - w[0] / 2.0).abs() < 1e-15);
    }
    let report = mirlab(&["report", &pa]);
    assert_eq!(report.status.code(), Some(0));
    assert!(stdout(&report).contains("bound decreasing: yes; ratio spread: "));
}

#[test]
fn report_on_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    std::fs::write(&p, "# manifest 0\n").unwrap();
    let o = mirlab(&["report", &p.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no data rows"));
}

#[test]
fn bases_periodic_eval_bound() {
    let b = stdout(&mirlab(&["bases", &instance("e1.json")]));
    assert_eq!(rows(&b), vec![vec!["0", "0", "1", "1", "yes", "1"], vec!["1", "1", "1", "-1", "yes", "-1"]]);
    let p = stdout(&mirlab(&["periodic", &instance("e1.json"), "--gamma-res", "256"]));
    assert_eq!(col(&p, "gamma"), vec![1.0, 0.0]);
    let e = mirlab(&["eval", &instance("e1.json"), "--x", "0.3", "--n", "2000"]);
    assert_eq!(e.status.code(), Some(0));
    assert_eq!(rows(&stdout(&e)).len(), 3);
    let bound = stdout(&mirlab(&["bound", &instance("e1.json"), "--C", "1"]));
    let v = col(&bound, "bound")[0];
    assert!((v - 2.0 * 0.7978845608028654).abs() < 1e-12);
    assert_eq!(mirlab(&["bound", &instance("e1.json"), "--C", "-1"]).status.code(), Some(2));
    let random_q = mirlab(&["periodic", &instance("e1_uq.json")]);
    assert_eq!(random_q.status.code(), Some(2));
}

#[test]
fn sir_row_matches_series() {
    let o = mirlab(&["sir", "--qplus", "1", "--qminus", "2", "--h", "uniform:0,2", "--x=-0.3,0.5", "--n", "20000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(rows(&text).len(), 2);
    assert!(rows(&text).iter().all(|r| r[8] == "yes"));
    assert_eq!(mirlab(&["sir", "--qplus", "1", "--qminus", "1", "--h", "cauchy:0", "--x", "0"]).status.code(), Some(2));
}
