//! Experiment runs and their CSV outputs. Floats are written with nine
//! significant digits; every file is written to a temporary name and renamed
//! into place.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::baselines::{conventional_ris, energy_splitting, mode_selection_from};
use crate::channel::sample_fading;
use crate::driver::JointSolution;
use crate::error::Result;
use crate::scenario::{render_experiment, Scenario, Space};
use crate::settings::{Method, Settings};

fn num(x: f64) -> String {
    format!("{x:.8e}")
}

/// Writes `contents` to `path` through a sibling temporary file.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn solution_csv(sol: &JointSolution) -> String {
    let mut s = String::from("waypoint,x,y\n");
    for (i, q) in sol.trajectory.points.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", i + 1, num(q.x), num(q.y));
    }
    s
}

pub fn rates_csv(sc: &Scenario, sol: &JointSolution) -> String {
    let mut s = String::from("slot,user,space,gain,rate\n");
    for n in 0..sc.slots {
        for (k, u) in sc.users.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                n + 1,
                u.order,
                u.space.name(),
                num(sol.rates.gains[n][k]),
                num(sol.rates.rates[n][k])
            );
        }
    }
    s
}

pub fn beams_csv(sol: &JointSolution) -> String {
    let mut s = String::from("slot,element,beta_r,theta_r,beta_t,theta_t\n");
    for (n, b) in sol.beams.slots.iter().enumerate() {
        for m in 0..b.elements() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                n + 1,
                m + 1,
                num(b.beta[0][m]),
                num(b.theta[0][m]),
                num(b.beta[1][m]),
                num(b.theta[1][m])
            );
        }
    }
    s
}

pub fn power_csv(sc: &Scenario, sol: &JointSolution) -> String {
    let mut s = String::from("slot,user,power\n");
    for (n, row) in sol.power.p.iter().enumerate() {
        for (k, p) in row.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", n + 1, sc.users[k].order, num(*p));
        }
    }
    s
}

pub fn trace_csv(sol: &JointSolution) -> String {
    let mut s = String::from("iteration,sum_rate\n");
    for (i, r) in &sol.rate_trace {
        let _ = writeln!(s, "{i},{}", num(*r));
    }
    s
}

/// `(slot, mean reflection amplitude, mean transmission amplitude)`.
pub fn splitting_profile(sol: &JointSolution) -> Vec<(usize, f64, f64)> {
    (0..sol.beams.slots.len())
        .map(|n| (n + 1, sol.beams.mean_beta(n, Space::Reflection), sol.beams.mean_beta(n, Space::Transmission)))
        .collect()
}

pub fn profile_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut s = String::from("slot,mean_beta_r,mean_beta_t\n");
    for (n, r, t) in rows {
        let _ = writeln!(s, "{n},{},{}", num(*r), num(*t));
    }
    s
}

/// Runs one method on the scenario's own fading draws.
pub fn run_single(sc: &Scenario, method: Method, settings: &Settings) -> Result<JointSolution> {
    let fading = sample_fading(sc);
    match method {
        Method::EnergySplitting => energy_splitting(sc, &fading, settings),
        Method::ModeSelection => {
            let es = energy_splitting(sc, &fading, settings)?;
            mode_selection_from(sc, &fading, &es, settings)
        }
        Method::Conventional => conventional_ris(sc, &fading, settings),
    }
}

/// Writes solution, rates, beams, power, trace and manifest files.
pub fn write_run(dir: &Path, sc: &Scenario, settings: &Settings, method: Method, sol: &JointSolution) -> Result<()> {
    fs::create_dir_all(dir)?;
    atomic_write(&dir.join("solution.csv"), &solution_csv(sol))?;
    atomic_write(&dir.join("rates.csv"), &rates_csv(sc, sol))?;
    atomic_write(&dir.join("beams.csv"), &beams_csv(sol))?;
    atomic_write(&dir.join("power.csv"), &power_csv(sc, sol))?;
    atomic_write(&dir.join("trace.csv"), &trace_csv(sol))?;
    atomic_write(&dir.join("manifest.txt"), &render_experiment(sc, settings, Some(method)))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub elements: usize,
    pub method: Method,
    pub sum_rate: f64,
    pub outer_iterations: usize,
    pub monotonicity_violations: usize,
    /// Not written to the CSV.
    pub solver_failed: bool,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("elements,method,sum_rate,outer_iterations,monotonicity_violations\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.elements,
            r.method.name(),
            num(r.sum_rate),
            r.outer_iterations,
            r.monotonicity_violations
        );
    }
    s
}

/// One run per `(M, method)`. Fading draws do not depend on `M`, so every
/// row sees the same channels; mode selection reuses the energy-splitting
/// run of its `M`. `on_row` sees the rows collected so far after each point.
pub fn sweep_elements(
    sc: &Scenario,
    m_list: &[usize],
    methods: &[Method],
    settings: &Settings,
    mut on_row: impl FnMut(&[SweepRow]) -> Result<()>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &m in m_list {
        let point = Scenario { elements: m, ..sc.clone() }.validated()?;
        let fading = sample_fading(&point);
        let mut es = None;
        for &method in methods {
            let sol = match method {
                Method::EnergySplitting | Method::ModeSelection => {
                    if es.is_none() {
                        es = Some(energy_splitting(&point, &fading, settings)?);
                    }
                    let es = es.as_ref().expect("just computed");
                    if method == Method::ModeSelection {
                        mode_selection_from(&point, &fading, es, settings)?
                    } else {
                        es.clone()
                    }
                }
                Method::Conventional => conventional_ris(&point, &fading, settings)?,
            };
            rows.push(SweepRow {
                elements: m,
                method,
                sum_rate: sol.sum_rate(),
                outer_iterations: sol.rate_trace.len() - 1,
                monotonicity_violations: sol.monotonicity_violations,
                solver_failed: sol.solver_failed(),
            });
            on_row(&rows)?;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Point;

    fn tiny() -> Scenario {
        let mut sc = Scenario { elements: 2, slots: 2, ..Scenario::default() };
        sc.users.truncate(1);
        sc.start = Point::new(10.0, -20.0);
        sc.end = Point::new(10.0, 20.0);
        sc.validated().unwrap()
    }

    #[test]
    fn files_have_headers_and_rows() {
        let sc = tiny();
        let st = Settings::default();
        let sol = run_single(&sc, Method::EnergySplitting, &st).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_run(dir.path(), &sc, &st, Method::EnergySplitting, &sol).unwrap();
        let read = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(read("solution.csv").lines().count(), 1 + 3);
        assert_eq!(read("rates.csv").lines().count(), 1 + 2);
        assert_eq!(read("beams.csv").lines().count(), 1 + 4);
        assert!(read("trace.csv").starts_with("iteration,sum_rate\n0,"));
        let back = crate::scenario::parse_experiment(&read("manifest.txt")).unwrap();
        assert_eq!(back.scenario, sc);
        assert_eq!(back.settings, st);
        assert_eq!(back.method, Some(Method::EnergySplitting));
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn single_slot_profile_has_one_row() {
        let mut sc = tiny();
        sc.slots = 1;
        sc.end = Point::new(10.0, 10.0);
        let sc = sc.validated().unwrap();
        let sol = run_single(&sc, Method::EnergySplitting, &Settings::default()).unwrap();
        let rows = splitting_profile(&sol);
        assert_eq!(rows.len(), 1);
        assert!((rows[0].1 + rows[0].2 - 1.0).abs() < 1e-12);
        assert_eq!(profile_csv(&rows).lines().count(), 2);
    }

    #[test]
    fn numbers_have_nine_digits() {
        assert_eq!(num(1.0 / 3.0), "3.33333333e-1");
    }
}
