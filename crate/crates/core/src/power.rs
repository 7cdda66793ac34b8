//! NOMA power allocation for a fixed trajectory and beam schedule.
//!
//! The allocation is optimised through its cumulative form
//! `psi_k = sum_{i >= k} p_i`, in which each user's rate is a difference of
//! two logarithms; the subtracted one is linearised around the current point,
//! leaving a concave program per slot.

use conic::{solve, AffineExpr, ConicProblem, Sense, VarId};
use rayon::prelude::*;

use crate::channel::slot_rates;
use crate::error::{Error, Result};
use crate::report::SolveReport;
use crate::scenario::Scenario;
use crate::settings::Settings;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// `p[n][k]`, watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Vec<Vec<f64>>,
}

/// `psi[n][k] = sum_{i >= k} p[n][i]`; the trailing zero is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativePower {
    pub psi: Vec<Vec<f64>>,
}

impl PowerAllocation {
    /// `p_k` proportional to `K - k + 1`, using the whole budget.
    pub fn proportional(users: usize, slots: usize, max_power: f64) -> Self {
        let total = (users * (users + 1) / 2) as f64;
        let row: Vec<f64> = (0..users).map(|k| max_power * (users - k) as f64 / total).collect();
        PowerAllocation { p: vec![row; slots] }
    }

    /// Largest violation of the ordering chain, non-negativity and the budget,
    /// relative to `max_power`.
    pub fn violation(&self, max_power: f64) -> f64 {
        let scale = max_power.max(f64::MIN_POSITIVE);
        self.p
            .iter()
            .map(|row| slot_violation(row, max_power) / scale)
            .fold(0.0, f64::max)
    }
}

fn slot_violation(p: &[f64], max_power: f64) -> f64 {
    let mut worst = (p.iter().sum::<f64>() - max_power).max(0.0);
    for w in p.windows(2) {
        worst = worst.max(w[1] - w[0]);
    }
    p.iter().fold(worst, |acc, &x| acc.max(-x))
}

fn suffix_sums(p: &[f64]) -> Vec<f64> {
    let mut psi = vec![0.0; p.len()];
    let mut acc = 0.0;
    for k in (0..p.len()).rev() {
        acc += p[k];
        psi[k] = acc;
    }
    psi
}

fn differences(psi: &[f64]) -> Vec<f64> {
    (0..psi.len()).map(|k| psi[k] - psi.get(k + 1).copied().unwrap_or(0.0)).collect()
}

const ORDER_TOL: f64 = 1e-12;

pub fn to_cumulative(p: &PowerAllocation) -> Result<CumulativePower> {
    for (n, row) in p.p.iter().enumerate() {
        let scale = row.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        if row.iter().any(|x| *x < -ORDER_TOL * scale)
            || row.windows(2).any(|w| w[1] > w[0] + ORDER_TOL * scale)
        {
            return Err(Error::Invalid(format!("slot {n}: powers must be non-increasing and >= 0")));
        }
    }
    Ok(CumulativePower { psi: p.p.iter().map(|r| suffix_sums(r)).collect() })
}

pub fn from_cumulative(c: &CumulativePower) -> Result<PowerAllocation> {
    let p = PowerAllocation { p: c.psi.iter().map(|r| differences(r)).collect() };
    for (n, row) in p.p.iter().enumerate() {
        let scale = c.psi[n].first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
        if row.iter().any(|x| *x < -ORDER_TOL * scale)
            || row.windows(2).any(|w| w[1] > w[0] + ORDER_TOL * scale)
        {
            return Err(Error::Invalid(format!(
                "slot {n}: cumulative powers must have non-increasing, non-negative differences"
            )));
        }
    }
    Ok(p)
}

/// Snaps a solver output onto the feasible set: non-negative, non-increasing,
/// within budget.
fn clean(p: &mut [f64], max_power: f64) {
    let mut cap = f64::INFINITY;
    for x in p.iter_mut() {
        *x = x.max(0.0).min(cap);
        cap = *x;
    }
    let s: f64 = p.iter().sum();
    if s > max_power {
        let f = max_power / s;
        p.iter_mut().for_each(|x| *x *= f);
    }
}

/// Per-slot surrogate: `sum_k log2(g_k psi_k + s2) - [tangent of
/// log2(g_k psi_{k+1} + s2) at psi_point]`, with `psi_1 <= max_power` and
/// the power ordering written on differences of `psi`.
///
/// Variables are `psi / max_power`; the returned ids are in user order.
pub fn assemble_power_slot(
    gains: &[f64],
    psi_point: &[f64],
    max_power: f64,
    noise: f64,
) -> (ConicProblem, Vec<VarId>) {
    let k_users = gains.len();
    assert_eq!(psi_point.len(), k_users);
    let mut prob = ConicProblem::new(Sense::Maximize);
    let x = prob.add_vector("psi", k_users);
    let psi = |k: usize| -> AffineExpr {
        if k < k_users {
            AffineExpr::term(x[k], max_power)
        } else {
            AffineExpr::zero()
        }
    };

    let mut linear = AffineExpr::zero();
    for k in 0..k_users {
        let g = gains[k] / noise;
        if g > 0.0 {
            prob.add_log_term(LOG2_E, psi(k) * g + AffineExpr::constant(1.0));
        }
        let next0 = psi_point.get(k + 1).copied().unwrap_or(0.0);
        let base = g * next0 + 1.0;
        linear = linear - AffineExpr::constant(base.log2());
        if k + 1 < k_users {
            let slope = LOG2_E * g / base;
            linear = linear - (psi(k + 1) - AffineExpr::constant(next0)) * slope;
        }
    }
    prob.set_objective(linear);

    prob.add_ge(AffineExpr::constant(1.0), AffineExpr::var(x[0]));
    // p_k = x_k - x_{k+1} (scaled); require p_k >= p_{k+1} and p_K >= 0
    let p = |k: usize| AffineExpr::var(x[k]) - if k + 1 < k_users { AffineExpr::var(x[k + 1]) } else { AffineExpr::zero() };
    for k in 0..k_users.saturating_sub(1) {
        prob.add_ge(p(k), p(k + 1));
    }
    prob.add_ge0(p(k_users - 1));
    (prob, x)
}

/// Value of the surrogate above at `psi` (unscaled), for checks.
pub fn power_surrogate(gains: &[f64], psi_point: &[f64], psi: &[f64], noise: f64) -> f64 {
    let k_users = gains.len();
    (0..k_users)
        .map(|k| {
            let g = gains[k];
            let next0 = psi_point.get(k + 1).copied().unwrap_or(0.0);
            let next = psi.get(k + 1).copied().unwrap_or(0.0);
            let base = g * next0 + noise;
            (g * psi[k] + noise).log2() - base.log2() - LOG2_E * g / base * (next - next0)
        })
        .sum()
}

/// Successive convex approximation of one slot's allocation. Every accepted
/// step must raise the exact rate.
pub fn optimize_power_slot(
    gains: &[f64],
    init: &[f64],
    max_power: f64,
    noise: f64,
    settings: &Settings,
) -> (Vec<f64>, SolveReport, Vec<f64>) {
    let mut report = SolveReport::default();
    if max_power <= 0.0 {
        return (vec![0.0; gains.len()], report, vec![0.0]);
    }
    let mut p = init.to_vec();
    let mut rate: f64 = slot_rates(gains, &p, noise).iter().sum();
    let mut trace = vec![rate];
    let tol = settings.tolerances();
    let mut converged = false;
    for it in 0..settings.power_max_iter {
        let point = suffix_sums(&p);
        let (prob, x) = assemble_power_slot(gains, &point, max_power, noise);
        report.solves += 1;
        let sol = match solve(&prob, &tol) {
            Ok(s) if s.is_optimal() => s,
            _ => {
                report.solver_failures += 1;
                report.first_solve_failed |= it == 0;
                converged = true;
                break;
            }
        };
        let psi: Vec<f64> = x.iter().map(|v| sol.value(*v) * max_power).collect();
        let mut cand = differences(&psi);
        clean(&mut cand, max_power);
        let cand_rate: f64 = slot_rates(gains, &cand, noise).iter().sum();
        if cand_rate < rate {
            if rate - cand_rate > 1e-9 * rate.abs().max(1.0) {
                report.rejected += 1;
            }
            converged = true;
            break;
        }
        let gain = cand_rate - rate;
        p = cand;
        rate = cand_rate;
        trace.push(rate);
        if gain < settings.power_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        report.not_converged += 1;
    }
    (p, report, trace)
}

/// `gains[n][k]` are the true combined gains under the fixed beams and
/// trajectory.
pub fn optimize_power(
    sc: &Scenario,
    gains: &[Vec<f64>],
    init: &PowerAllocation,
    settings: &Settings,
) -> Result<(PowerAllocation, SolveReport)> {
    if gains.len() != sc.slots || init.p.len() != sc.slots {
        return Err(Error::Dimension("power and gain slot counts".into()));
    }
    let results: Vec<_> = (0..sc.slots)
        .into_par_iter()
        .map(|n| optimize_power_slot(&gains[n], &init.p[n], sc.max_power, sc.noise_power, settings))
        .collect();
    let mut p = Vec::with_capacity(sc.slots);
    let mut report = SolveReport::default();
    for (row, r, _) in results {
        p.push(row);
        report.absorb(r);
    }
    Ok((PowerAllocation { p }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cumulative_examples() {
        let p = PowerAllocation { p: vec![vec![0.5, 0.3, 0.2]] };
        let c = to_cumulative(&p).unwrap();
        for (a, b) in c.psi[0].iter().zip([1.0, 0.5, 0.2]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let c = CumulativePower { psi: vec![vec![2.0, 0.0, 0.0]] };
        assert_eq!(from_cumulative(&c).unwrap().p[0], vec![2.0, 0.0, 0.0]);
        assert!(to_cumulative(&PowerAllocation { p: vec![vec![0.1, 0.3]] }).is_err());
        assert!(from_cumulative(&CumulativePower { psi: vec![vec![1.0, 0.9]] }).is_err());
    }

    #[test]
    fn proportional_start() {
        let p = PowerAllocation::proportional(4, 2, 1.0);
        assert_relative_eq!(p.p[0].iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.p[1][0], 0.4, epsilon = 1e-15);
        assert_relative_eq!(p.p[1][3], 0.1, epsilon = 1e-15);
        assert_eq!(p.violation(1.0), 0.0);
    }

    #[test]
    fn single_user_takes_full_budget() {
        let (prob, x) = assemble_power_slot(&[1e-9], &[0.3], 1.0, 1e-11);
        let s = solve(&prob, &Default::default()).unwrap();
        assert!(s.is_optimal());
        assert_relative_eq!(s.value(x[0]), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn surrogate_is_tight_at_its_point() {
        let g = [1e-9, 3e-9, 4e-9];
        let psi0 = [1.0, 0.4, 0.1];
        let p0 = differences(&psi0);
        let exact: f64 = slot_rates(&g, &p0, 1e-11).iter().sum();
        assert_relative_eq!(power_surrogate(&g, &psi0, &psi0, 1e-11), exact, max_relative = 1e-12);
    }

    #[test]
    fn surrogate_optimum_matches_grid() {
        let (g, s2, pmax) = ([1e-9, 4e-9], 1e-11, 1.0);
        let point = [1.0, 0.3];
        let (prob, x) = assemble_power_slot(&g, &point, pmax, s2);
        let sol = solve(&prob, &Default::default()).unwrap();
        assert!(sol.is_optimal());
        let got = [sol.value(x[0]), sol.value(x[1])];
        // grid oracle over the feasible (psi1, psi2) set
        let steps = 1000;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=steps {
            let p1 = i as f64 / steps as f64;
            for j in 0..=i {
                let p2 = j as f64 / steps as f64;
                if p1 - p2 < p2 {
                    continue;
                }
                let v = power_surrogate(&g, &point, &[p1, p2], s2);
                if v > best.0 {
                    best = (v, p1, p2);
                }
            }
        }
        assert!((got[0] - best.1).abs() <= 1e-3 + 1e-6, "{got:?} vs {best:?}");
        assert!((got[1] - best.2).abs() <= 1e-3 + 1e-6, "{got:?} vs {best:?}");
    }

    #[test]
    fn zero_budget_gives_zero_power() {
        let (p, _, _) = optimize_power_slot(&[1e-9, 2e-9], &[0.0, 0.0], 0.0, 1e-11, &Settings::default());
        assert_eq!(p, vec![0.0, 0.0]);
        assert_eq!(slot_rates(&[1e-9, 2e-9], &p, 1e-11).iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn trace_is_monotone_and_budget_is_used() {
        let g = [2e-10, 7e-10, 9e-10, 3e-9];
        let init = PowerAllocation::proportional(4, 1, 1.0);
        let (p, rep, trace) = optimize_power_slot(&g, &init.p[0], 1.0, 1e-11, &Settings::default());
        assert!(!rep.first_solve_failed);
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-6);
        assert_eq!(slot_violation(&p, 1.0), 0.0);
    }

    proptest! {
        #[test]
        fn cumulative_roundtrip(mut raw in prop::collection::vec(0.0f64..1.0, 1..6)) {
            raw.sort_by(|a, b| b.total_cmp(a));
            let p = PowerAllocation { p: vec![raw.clone()] };
            let back = from_cumulative(&to_cumulative(&p).unwrap()).unwrap();
            for (a, b) in back.p[0].iter().zip(&raw) {
                prop_assert!((a - b).abs() <= 1e-15 * raw.len() as f64);
            }
        }

        #[test]
        fn surrogate_is_a_lower_bound(
            g in prop::collection::vec(1e-10f64..1e-8, 3),
            a in prop::collection::vec(0.0f64..1.0, 3),
            b in prop::collection::vec(0.0f64..1.0, 3),
        ) {
            let to_psi = |v: &[f64]| {
                let mut p = v.to_vec();
                p.sort_by(|x, y| y.total_cmp(x));
                let s: f64 = p.iter().sum::<f64>().max(1.0);
                suffix_sums(&p.iter().map(|x| x / s).collect::<Vec<_>>())
            };
            let (point, psi) = (to_psi(&a), to_psi(&b));
            let exact: f64 = slot_rates(&g, &differences(&psi), 1e-11).iter().sum();
            prop_assert!(power_surrogate(&g, &point, &psi, 1e-11) <= exact + 1e-9);
        }
    }
}
