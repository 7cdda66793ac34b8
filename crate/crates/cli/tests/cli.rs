use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "\
elements = 2
slots = 3
start = 10, -20
end = 10, 20

[user]
position = -40, 10
space = transmission
order = 1

[user]
position = 15, 5
space = reflection
order = 2
";

fn staruav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_staruav")).args(args).output().expect("binary runs")
}

fn scenario(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn out(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read(dir: &str, file: &str) -> String {
    fs::read_to_string(Path::new(dir).join(file)).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

const RUN_FILES: [&str; 6] = ["solution.csv", "rates.csv", "beams.csv", "power.csv", "trace.csv", "manifest.txt"];

#[test]
fn run_is_reproducible_from_its_manifest() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "s.scn", SMALL);
    let (a, b) = (out(&dir, "a"), out(&dir, "b"));
    for o in [&a, &b] {
        let r = staruav(&["run", "--scenario", &sc, "--out", o, "--method", "es"]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in RUN_FILES {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    let manifest = format!("{a}/manifest.txt");
    let c = out(&dir, "c");
    assert_eq!(staruav(&["run", "--scenario", &manifest, "--out", &c]).status.code(), Some(0));
    for f in RUN_FILES {
        assert_eq!(read(&a, f), read(&c, f), "{f}");
    }
}

#[test]
fn run_outputs_keep_their_invariants() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "s.scn", SMALL);
    for method in ["es", "ms", "conventional"] {
        let o = out(&dir, method);
        assert_eq!(staruav(&["run", "--scenario", &sc, "--out", &o, "--method", method]).status.code(), Some(0));
        let beams = read(&o, "beams.csv");
        assert!(beams.starts_with("slot,element,beta_r,theta_r,beta_t,theta_t\n"));
        for (r, t) in column(&beams, "beta_r").iter().zip(column(&beams, "beta_t")) {
            assert!((r + t - 1.0).abs() < 1e-8, "{method}: {r} + {t}");
        }
        if method == "es" {
            let trace = column(&read(&o, "trace.csv"), "sum_rate");
            assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{trace:?}");
        }
        assert_eq!(read(&o, "solution.csv").lines().count(), 1 + 4);
        assert_eq!(read(&o, "rates.csv").lines().count(), 1 + 3 * 2);
        assert!(read(&o, "manifest.txt").contains(&format!("method = {method}\n")));
    }
}

#[test]
fn seed_override_lands_in_the_manifest() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "s.scn", SMALL);
    let o = out(&dir, "o");
    assert_eq!(staruav(&["run", "--scenario", &sc, "--out", &o, "--seed-override", "7"]).status.code(), Some(0));
    assert!(read(&o, "manifest.txt").contains("seed = 7\n"));
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "s.scn", SMALL);
    let o = out(&dir, "sweep");
    let r = staruav(&["sweep-elements", "--scenario", &sc, "--out", &o, "--m-list", "2,4", "--method", "es,conventional"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = read(&o, "sweep.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("elements,method,sum_rate,outer_iterations,monotonicity_violations"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r[0], r[1])).collect();
    assert_eq!(keys, [("2", "es"), ("2", "conventional"), ("4", "es"), ("4", "conventional")]);
    assert!(read(&o, "manifest.txt").contains("# m_list = 2,4\n"));

    // a single point reproduces the plain run
    let single = out(&dir, "single");
    staruav(&["sweep-elements", "--scenario", &sc, "--out", &single, "--m-list", "2", "--method", "es"]);
    let run = out(&dir, "run");
    staruav(&["run", "--scenario", &sc, "--out", &run, "--method", "es"]);
    let trace = column(&read(&run, "trace.csv"), "sum_rate");
    let swept = column(&read(&single, "sweep.csv"), "sum_rate");
    assert_eq!(swept.len(), 1);
    assert!((swept[0] - trace.last().unwrap()).abs() <= 1e-7 * swept[0]);
}

#[test]
fn splitting_profile_columns_sum_to_one() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "s.scn", SMALL);
    let o = out(&dir, "p");
    assert_eq!(staruav(&["splitting-profile", "--scenario", &sc, "--out", &o]).status.code(), Some(0));
    let csv = read(&o, "profile.csv");
    let (r, t) = (column(&csv, "mean_beta_r"), column(&csv, "mean_beta_t"));
    assert_eq!(r.len(), 3);
    for (a, b) in r.iter().zip(&t) {
        assert!((a + b - 1.0).abs() < 1e-8);
    }
}

#[test]
fn bad_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let o = out(&dir, "o");
    let missing = out(&dir, "nope.scn");
    assert_eq!(staruav(&["run", "--scenario", &missing, "--out", &o]).status.code(), Some(1));
    for text in [
        format!("{SMALL}\nbogus_key = 3\n"),
        SMALL.replace("elements = 2", "elements = 3"),
        SMALL.replace("end = 10, 20", "end = 10, 2000"),
        SMALL.replace("order = 2", "order = 1"),
        format!("noise_power = 1e-11\n{SMALL}"),
    ] {
        let sc = scenario(&dir, "bad.scn", &text);
        let r = staruav(&["run", "--scenario", &sc, "--out", &o, "--method", "conventional"]);
        assert_eq!(r.status.code(), Some(1), "{text}");
        assert!(!r.stderr.is_empty());
    }
    let sc = scenario(&dir, "s.scn", SMALL);
    let r = staruav(&["run", "--scenario", &sc, "--out", &o, "--method", "nonsense"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn failed_first_solves_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let sc = scenario(&dir, "s.scn", &format!("solver_max_iter = 1\n{SMALL}"));
    let o = out(&dir, "o");
    let r = staruav(&["run", "--scenario", &sc, "--out", &o]);
    assert_eq!(r.status.code(), Some(2));
    assert!(Path::new(&o).join("trace.csv").exists());
}
