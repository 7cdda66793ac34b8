//! Comparison schemes: a split reflect-only / transmit-only surface and
//! binary mode selection on the STAR surface.

use crate::beamforming::{optimize_beamforming, AmplitudeMode};
use crate::beams::BeamformingSchedule;
use crate::channel::{chain_violation, compute_channel_slot, slot_gains, slot_rates, sum_rate, FadingDraws};
use crate::driver::{initialize, initialize_with_amplitudes, run_from, JointSolution};
use crate::error::{Error, Result};
use crate::power::PowerAllocation;
use crate::scenario::Scenario;
use crate::settings::{Method, Settings};
use crate::trajectory::Trajectory;

/// First half of the elements reflect only, the rest transmit only.
pub fn conventional_pattern(elements: usize) -> Result<[Vec<f64>; 2]> {
    if elements % 2 != 0 {
        return Err(Error::Invalid(format!("conventional surface needs an even element count, got {elements}")));
    }
    let r: Vec<f64> = (0..elements).map(|m| if m < elements / 2 { 1.0 } else { 0.0 }).collect();
    let t = r.iter().map(|b| 1.0 - b).collect();
    Ok([r, t])
}

pub fn conventional_ris(sc: &Scenario, fading: &FadingDraws, settings: &Settings) -> Result<JointSolution> {
    let init = initialize_with_amplitudes(sc, fading, conventional_pattern(sc.elements)?);
    run_from(sc, fading, init, AmplitudeMode::Fixed, settings)
}

/// Rounds every reflection amplitude to 0 or 1 (ties go to reflection).
pub fn round_modes(beams: &BeamformingSchedule) -> BeamformingSchedule {
    let mut out = beams.clone();
    for s in &mut out.slots {
        for m in 0..s.elements() {
            let r = if s.beta[0][m] >= 0.5 { 1.0 } else { 0.0 };
            s.beta[0][m] = r;
            s.beta[1][m] = 1.0 - r;
        }
    }
    out
}

/// Greedy single-element mode flips per slot. A flip is kept when it lowers
/// the ordering violation (floored at `feas_tol`), or keeps it and raises the
/// true slot rate. Returns the number of flips made.
pub fn repair_modes(
    sc: &Scenario,
    fading: &FadingDraws,
    traj: &Trajectory,
    power: &PowerAllocation,
    beams: &mut BeamformingSchedule,
    settings: &Settings,
) -> usize {
    let mut flips = 0;
    for n in 0..sc.slots {
        let ch = compute_channel_slot(sc, fading, &traj.points[n], n);
        let score = |b: &crate::beams::SlotBeams| {
            let g = slot_gains(sc, &ch, b);
            let rate: f64 = slot_rates(&g, &power.p[n], sc.noise_power).iter().sum();
            (chain_violation(&g).max(settings.feas_tol), rate)
        };
        let mut cur = score(&beams.slots[n]);
        let mut improved = true;
        while improved {
            improved = false;
            for m in 0..sc.elements {
                let mut cand = beams.slots[n].clone();
                cand.beta[0][m] = 1.0 - cand.beta[0][m];
                cand.beta[1][m] = 1.0 - cand.beta[0][m];
                let s = score(&cand);
                if s.0 < cur.0 || (s.0 <= cur.0 && s.1 > cur.1) {
                    beams.slots[n] = cand;
                    cur = s;
                    flips += 1;
                    improved = true;
                }
            }
        }
    }
    flips
}

/// Mode selection derived from an energy-splitting solution: round, repair,
/// then re-optimise phases once with the modes held. The trace records the
/// three stages.
pub fn mode_selection_from(
    sc: &Scenario,
    fading: &FadingDraws,
    es: &JointSolution,
    settings: &Settings,
) -> Result<JointSolution> {
    let (traj, power) = (&es.trajectory, &es.power);
    let mut beams = round_modes(&es.beams);
    let rounded = sum_rate(sc, fading, traj, &beams, power)?.total;
    repair_modes(sc, fading, traj, power, &mut beams, settings);
    let repaired = sum_rate(sc, fading, traj, &beams, power)?;
    let (beams, beam_report) = optimize_beamforming(sc, fading, traj, power, &beams, AmplitudeMode::Fixed, settings)?;
    let rates = sum_rate(sc, fading, traj, &beams, power)?;
    // the rounded schedule is only a starting point; repair is what gets accepted
    let worst_chain = repaired.chain_violation().max(rates.chain_violation());
    let repaired = repaired.total;
    let trace = vec![(0, rounded), (1, repaired), (2, rates.total)];
    let violations = trace.windows(2).filter(|w| w[1].1 < w[0].1 - settings.monotone_tol).count();
    Ok(JointSolution {
        beams,
        trajectory: traj.clone(),
        power: power.clone(),
        rate_trace: trace,
        rates,
        beam_report,
        trajectory_report: es.trajectory_report.clone(),
        power_report: es.power_report.clone(),
        monotonicity_violations: violations,
        converged: es.converged,
        worst_chain_violation: worst_chain,
        worst_power_violation: es.worst_power_violation,
    })
}

pub fn mode_selection(sc: &Scenario, fading: &FadingDraws, settings: &Settings) -> Result<JointSolution> {
    let es = energy_splitting(sc, fading, settings)?;
    mode_selection_from(sc, fading, &es, settings)
}

pub fn energy_splitting(sc: &Scenario, fading: &FadingDraws, settings: &Settings) -> Result<JointSolution> {
    run_from(sc, fading, initialize(sc, fading), AmplitudeMode::Split, settings)
}

pub fn run_method(sc: &Scenario, fading: &FadingDraws, method: Method, settings: &Settings) -> Result<JointSolution> {
    match method {
        Method::EnergySplitting => energy_splitting(sc, fading, settings),
        Method::ModeSelection => mode_selection(sc, fading, settings),
        Method::Conventional => conventional_ris(sc, fading, settings),
    }
}
