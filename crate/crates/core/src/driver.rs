//! Alternating optimisation: beams, then trajectory, then powers, repeated
//! until the true sum rate stops improving.

use crate::beamforming::{optimize_beamforming, AmplitudeMode};
use crate::beams::{wrap_phase, BeamformingSchedule, SlotBeams};
use crate::channel::{cascade_coefficients, compute_channel_slot, sample_fading, sum_rate, FadingDraws, RateReport};
use crate::error::Result;
use crate::power::{optimize_power, PowerAllocation};
use crate::report::SolveReport;
use crate::scenario::{Scenario, Space};
use crate::settings::Settings;
use crate::trajectory::{optimize_trajectory, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct JointSolution {
    pub beams: BeamformingSchedule,
    pub trajectory: Trajectory,
    pub power: PowerAllocation,
    /// `(outer iteration, true sum rate)`; iteration 0 is the starting point.
    pub rate_trace: Vec<(usize, f64)>,
    pub rates: RateReport,
    pub beam_report: SolveReport,
    pub trajectory_report: SolveReport,
    pub power_report: SolveReport,
    /// Cycles whose rate fell by more than `monotone_tol`.
    pub monotonicity_violations: usize,
    /// Stopped on the rate-increase rule rather than the cycle cap.
    pub converged: bool,
    /// Largest gain-ordering violation over every accepted iterate,
    /// including the intermediate ones inside each cycle.
    pub worst_chain_violation: f64,
    /// Same for the power ordering and budget, relative to the budget.
    pub worst_power_violation: f64,
}

impl JointSolution {
    pub fn sum_rate(&self) -> f64 {
        self.rates.total
    }

    /// Some block could not solve even its first convex problem and handed
    /// its input back unchanged.
    pub fn solver_failed(&self) -> bool {
        [&self.beam_report, &self.trajectory_report, &self.power_report].iter().any(|r| r.first_solve_failed)
    }
}

/// Beams whose phases line the cascade up with the direct link of `k` in
/// each slot, keeping the given amplitudes.
fn aligned_phases(sc: &Scenario, fading: &FadingDraws, traj: &Trajectory, beta: [Vec<f64>; 2]) -> BeamformingSchedule {
    let mid = traj.points[sc.slots / 2];
    let target: Vec<Option<usize>> = Space::BOTH
        .iter()
        .map(|&s| {
            (0..sc.num_users())
                .filter(|&k| sc.users[k].space == s)
                .min_by(|&a, &b| {
                    let da = (sc.users[a].position - mid).norm();
                    let db = (sc.users[b].position - mid).norm();
                    da.total_cmp(&db)
                })
        })
        .collect();
    let slots = (0..sc.slots)
        .map(|n| {
            let ch = compute_channel_slot(sc, fading, &traj.points[n], n);
            let mut b = SlotBeams { beta: beta.clone(), theta: [vec![0.0; sc.elements], vec![0.0; sc.elements]] };
            for (p, k) in target.iter().enumerate() {
                if let Some(k) = *k {
                    let c = cascade_coefficients(&ch, k);
                    let h = ch.direct[k].arg();
                    for m in 0..sc.elements {
                        // c_m sqrt(beta) e^{-j theta} lands on the phase of h
                        b.theta[p][m] = wrap_phase(c[m].arg() - h);
                    }
                }
            }
            b
        })
        .collect();
    BeamformingSchedule { slots }
}

/// Straight-line trajectory, even energy split with direct-link-aligned
/// phases, and the proportional power split.
pub fn initialize(sc: &Scenario, fading: &FadingDraws) -> (BeamformingSchedule, Trajectory, PowerAllocation) {
    let traj = Trajectory::straight(sc.start, sc.end, sc.slots);
    let beams = aligned_phases(sc, fading, &traj, [vec![0.5; sc.elements], vec![0.5; sc.elements]]);
    let power = PowerAllocation::proportional(sc.num_users(), sc.slots, sc.max_power);
    (beams, traj, power)
}

/// Same starting point with a fixed per-element amplitude pattern.
pub fn initialize_with_amplitudes(
    sc: &Scenario,
    fading: &FadingDraws,
    beta: [Vec<f64>; 2],
) -> (BeamformingSchedule, Trajectory, PowerAllocation) {
    let traj = Trajectory::straight(sc.start, sc.end, sc.slots);
    let beams = aligned_phases(sc, fading, &traj, beta);
    let power = PowerAllocation::proportional(sc.num_users(), sc.slots, sc.max_power);
    (beams, traj, power)
}

/// Energy-splitting run on the scenario's own fading draws.
pub fn run(sc: &Scenario, settings: &Settings) -> Result<JointSolution> {
    let fading = sample_fading(sc);
    let init = initialize(sc, &fading);
    run_from(sc, &fading, init, AmplitudeMode::Split, settings)
}

/// Alternates the three subproblems from `init`; returns the best cycle.
pub fn run_from(
    sc: &Scenario,
    fading: &FadingDraws,
    init: (BeamformingSchedule, Trajectory, PowerAllocation),
    mode: AmplitudeMode,
    settings: &Settings,
) -> Result<JointSolution> {
    let (mut beams, mut traj, mut power) = init;
    let mut rates = sum_rate(sc, fading, &traj, &beams, &power)?;
    let mut trace = vec![(0, rates.total)];
    let mut best = (beams.clone(), traj.clone(), power.clone(), rates.clone());
    let mut beam_report = SolveReport::default();
    let mut traj_report = SolveReport::default();
    let mut power_report = SolveReport::default();
    let mut violations = 0;
    let mut converged = false;
    let mut last = rates.total;
    let mut worst_chain = rates.chain_violation();
    let mut worst_power = power.violation(sc.max_power);

    for it in 1..=settings.outer_max_iter {
        let (b, r) = optimize_beamforming(sc, fading, &traj, &power, &beams, mode, settings)?;
        beams = b;
        beam_report.absorb(r);
        worst_chain = worst_chain.max(sum_rate(sc, fading, &traj, &beams, &power)?.chain_violation());
        let (t, r) = optimize_trajectory(sc, fading, &beams, &power, &traj, settings)?;
        traj = t;
        traj_report.absorb(r);
        let mid = sum_rate(sc, fading, &traj, &beams, &power)?;
        worst_chain = worst_chain.max(mid.chain_violation());
        let (p, r) = optimize_power(sc, &mid.gains, &power, settings)?;
        power = p;
        power_report.absorb(r);
        worst_power = worst_power.max(power.violation(sc.max_power));

        rates = sum_rate(sc, fading, &traj, &beams, &power)?;
        worst_chain = worst_chain.max(rates.chain_violation());
        trace.push((it, rates.total));
        log::debug!("cycle {it}: sum rate {:.6}", rates.total);
        if rates.total < last - settings.monotone_tol {
            violations += 1;
            log::warn!("cycle {it}: sum rate fell from {last} to {}", rates.total);
        }
        if rates.total > best.3.total {
            best = (beams.clone(), traj.clone(), power.clone(), rates.clone());
        }
        let inc = rates.total - last;
        last = rates.total;
        if inc < settings.outer_tol {
            converged = true;
            break;
        }
    }

    let (beams, trajectory, power, rates) = best;
    Ok(JointSolution {
        beams,
        trajectory,
        power,
        rate_trace: trace,
        rates,
        beam_report,
        trajectory_report: traj_report,
        power_report,
        monotonicity_violations: violations,
        converged,
        worst_chain_violation: worst_chain,
        worst_power_violation: worst_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Point;
    use approx::assert_relative_eq;

    #[test]
    fn default_start_is_a_straight_line() {
        let sc = Scenario::default().validated().unwrap();
        let f = sample_fading(&sc);
        let (b, t, p) = initialize(&sc, &f);
        assert_eq!(t.points.len(), 31);
        for (i, q) in t.points.iter().enumerate() {
            assert_eq!(q.x, 10.0);
            assert_relative_eq!(q.y, -250.0 + 500.0 * i as f64 / 30.0, epsilon = 1e-12);
        }
        assert_eq!(b.energy_error(), 0.0);
        assert!(b.slots.iter().all(SlotBeams::is_valid));
        assert_eq!(p.violation(sc.max_power), 0.0);
        assert_eq!(initialize(&sc, &f), (b, t, p));
    }

    #[test]
    fn aligned_phases_add_coherently() {
        let mut sc = Scenario { elements: 6, slots: 2, ..Scenario::default() };
        sc.start = Point::new(10.0, -20.0);
        sc.end = Point::new(10.0, 20.0);
        let sc = sc.validated().unwrap();
        let f = sample_fading(&sc);
        let (b, t, _) = initialize(&sc, &f);
        let mid = t.points[1];
        let k = (0..4)
            .filter(|&k| sc.users[k].space == Space::Reflection)
            .min_by(|&a, &c| (sc.users[a].position - mid).norm().total_cmp(&(sc.users[c].position - mid).norm()))
            .unwrap();
        let ch = compute_channel_slot(&sc, &f, &t.points[0], 0);
        let c = cascade_coefficients(&ch, k);
        let u = b.slots[0].beam(Space::Reflection);
        let h = ch.direct[k].arg();
        for m in 0..6 {
            let d = (c[m] * u[m]).arg() - h;
            assert!(d.sin().abs() < 1e-9 && d.cos() > 0.0);
        }
    }

    #[test]
    fn single_user_without_surface_still_climbs() {
        let mut sc = Scenario { elements: 2, slots: 4, ..Scenario::default() };
        sc.users.truncate(1);
        sc.start = Point::new(10.0, -40.0);
        sc.end = Point::new(10.0, 40.0);
        let sc = sc.validated().unwrap();
        let f = sample_fading(&sc);
        let (_, t, p) = initialize(&sc, &f);
        let b = initialize_with_amplitudes(&sc, &f, [vec![0.0; 2], vec![0.0; 2]]).0;
        let s = run_from(&sc, &f, (b, t, p), AmplitudeMode::Fixed, &Settings::default()).unwrap();
        assert_eq!(s.monotonicity_violations, 0);
        for w in s.rate_trace.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9);
        }
        assert!(s.beams.slots.iter().all(|b| b.beta[0] == vec![0.0; 2]));
    }
}
