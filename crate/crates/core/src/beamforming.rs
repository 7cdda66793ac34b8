//! Surface coefficient optimisation for a fixed trajectory and power split.
//!
//! Each slot is solved on its own. The beam of a space is lifted to
//! `E = [u; 1][u; 1]^H`, every user's gain becomes linear in `E`, the rate is
//! lower-bounded through two auxiliary variables, and the rank-one condition
//! is approached by a sequence of eigenvalue cuts `e^H E e >= alpha Tr(E)`
//! with `alpha` pushed toward one. Complex blocks are handled through their
//! real symmetric embedding.

use conic::{hermitian_embed, max_eigpair, solve, unembed_hermitian, AffineExpr, ConicProblem, Sense, SymBlock, VarId};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::beams::{lift, split_energy, wrap_phase, BeamformingSchedule, SlotBeams};
use crate::channel::{cascade_coefficients, chain_violation, compute_channel_slot, slot_gains, ChannelSlot, FadingDraws, C64};
use crate::error::{Error, Result};
use crate::power::PowerAllocation;
use crate::report::SolveReport;
use crate::scenario::{Scenario, Space};
use crate::settings::Settings;
use crate::trajectory::Trajectory;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Which amplitudes are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeMode {
    /// Energy split per element is optimised; the two spaces share each
    /// element's unit budget.
    Split,
    /// Amplitudes are taken from the incoming schedule; only phases move.
    Fixed,
}

/// `V = v^H v` with `v = [conj(g_rg) .* g_ur, h]`, so `Tr(V lift(u))` is the
/// combined gain through `u`.
pub fn build_vkn(slot: &ChannelSlot, k: usize) -> DMatrix<C64> {
    let c = cascade_coefficients(slot, k);
    let m = c.len();
    let v = DVector::from_fn(m + 1, |i, _| if i < m { c[i] } else { slot.direct[k] });
    DMatrix::from_fn(m + 1, m + 1, |i, j| v[i].conj() * v[j])
}

/// `Re Tr(V E)`.
pub fn lifted_gain(v: &DMatrix<C64>, e: &DMatrix<C64>) -> f64 {
    v.iter().zip(e.transpose().iter()).map(|(a, b)| (a * b).re).sum()
}

/// `min(1, lambda_max(E) / Tr(E) + delta)`.
pub fn srocr_alpha_update(delta: f64, e: &DMatrix<C64>) -> Result<f64> {
    let tr: f64 = (0..e.nrows()).map(|i| e[(i, i)].re).sum();
    if !(tr > 0.0) {
        return Err(Error::Invalid("zero-trace lifted beam".into()));
    }
    let (lambda, _) = max_eigpair(e)?;
    Ok((lambda / tr + delta).clamp(0.0, 1.0))
}

fn eigen_ratio(e: &DMatrix<C64>) -> Result<f64> {
    srocr_alpha_update(0.0, e)
}

/// Linearisation point of the rate bound: `a0 = 1 / (p g)` and
/// `b0 = g * (sum of later powers) + 1`, with gains normalised by the noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionPoints {
    pub a0: Vec<f64>,
    pub b0: Vec<f64>,
}

impl ExpansionPoints {
    /// Users with zero power or zero gain carry `a0 = inf` and are left out
    /// of the objective.
    pub fn from_gains(gains: &[f64], powers: &[f64]) -> Self {
        let k_users = gains.len();
        let mut a0 = Vec::with_capacity(k_users);
        let mut b0 = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let later: f64 = powers[k + 1..].iter().sum();
            let pg = powers[k] * gains[k];
            a0.push(if pg > 0.0 { 1.0 / pg } else { f64::INFINITY });
            b0.push(later * gains[k] + 1.0);
        }
        ExpansionPoints { a0, b0 }
    }
}

/// Linear lower bound of `log2(1 + 1/(a b))` around `(a0, b0)`.
pub fn rate_lower_bound(a0: f64, b0: f64, a: f64, b: f64) -> f64 {
    let ab = a0 * b0;
    let slope = LOG2_E / (1.0 + ab);
    (1.0 + 1.0 / ab).log2() - slope * (a / a0 - 1.0) - slope * (b / b0 - 1.0)
}

/// One lifted block: the elements it covers, in order, plus the unit corner.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub space: Space,
    pub active: Vec<usize>,
}

impl BlockSpec {
    fn dim(&self) -> usize {
        self.active.len() + 1
    }

    fn restrict(&self, full: &DMatrix<C64>) -> DMatrix<C64> {
        let m = full.nrows() - 1;
        let idx: Vec<usize> = self.active.iter().copied().chain(std::iter::once(m)).collect();
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])])
    }
}

/// Everything the slot subproblem needs, with gains normalised by the noise.
#[derive(Debug, Clone)]
pub struct BeamSlotModel {
    pub mode: AmplitudeMode,
    pub elements: usize,
    pub blocks: Vec<BlockSpec>,
    /// Block serving each user.
    pub user_block: Vec<usize>,
    /// Per-user gain matrices restricted to their block.
    pub v: Vec<DMatrix<C64>>,
    pub powers: Vec<f64>,
    /// Amplitudes pinned in [`AmplitudeMode::Fixed`].
    pub fixed_beta: [Vec<f64>; 2],
}

impl BeamSlotModel {
    pub fn new(sc: &Scenario, slot: &ChannelSlot, powers: &[f64], incoming: &SlotBeams, mode: AmplitudeMode) -> Self {
        let m = sc.elements;
        let blocks: Vec<BlockSpec> = match mode {
            AmplitudeMode::Split => Space::BOTH.iter().map(|&space| BlockSpec { space, active: (0..m).collect() }).collect(),
            AmplitudeMode::Fixed => Space::BOTH
                .iter()
                .filter(|&&s| sc.count_in(s) > 0)
                .map(|&space| BlockSpec {
                    space,
                    active: (0..m).filter(|&i| incoming.beta[space.index()][i] > 0.0).collect(),
                })
                .collect(),
        };
        let user_block: Vec<usize> = sc
            .users
            .iter()
            .map(|u| blocks.iter().position(|b| b.space == u.space).expect("every served space has a block"))
            .collect();
        let v = (0..sc.num_users())
            .map(|k| {
                let full = build_vkn(slot, k) / C64::from(sc.noise_power);
                blocks[user_block[k]].restrict(&full)
            })
            .collect();
        BeamSlotModel {
            mode,
            elements: m,
            blocks,
            user_block,
            v,
            powers: powers.to_vec(),
            fixed_beta: incoming.beta.clone(),
        }
    }

    /// Lifted blocks of a beam schedule.
    pub fn lift_beams(&self, beams: &SlotBeams) -> Vec<DMatrix<C64>> {
        self.blocks.iter().map(|b| b.restrict(&lift(&beams.beam(b.space)))).collect()
    }

    /// Normalised gains under lifted blocks.
    pub fn gains(&self, e: &[DMatrix<C64>]) -> Vec<f64> {
        self.v.iter().zip(&self.user_block).map(|(v, &b)| lifted_gain(v, &e[b]).max(0.0)).collect()
    }

    /// Slot sum rate under lifted blocks.
    pub fn objective(&self, e: &[DMatrix<C64>]) -> f64 {
        let g = self.gains(e);
        crate::channel::slot_rates(&g, &self.powers, 1.0).iter().sum()
    }
}

/// Variable ids of an assembled slot problem.
#[derive(Debug, Clone)]
pub struct BeamLayout {
    pub blocks: Vec<SymBlock>,
    pub a: Vec<Option<VarId>>,
    pub b: Vec<Option<VarId>>,
    pub r: Vec<Option<VarId>>,
    pub slack: Option<VarId>,
}

/// Complex diagonal entry `i` of the block in terms of its embedding.
fn diag_entry(block: &SymBlock, i: usize) -> AffineExpr {
    let d = block.dim() / 2;
    AffineExpr::term(block.entry(i, i), 0.5) + AffineExpr::term(block.entry(i + d, i + d), 0.5)
}

/// `Tr(V E)` as a function of the embedded block.
fn gain_expr(block: &SymBlock, v: &DMatrix<C64>) -> AffineExpr {
    let emb = hermitian_embed(v).expect("gain matrices are Hermitian");
    block.trace_inner(&(emb * 0.5))
}

/// Slot subproblem at the current expansion points. `cuts[b]` is the
/// eigenvector of block `b` for the rank-one cut, applied only when
/// `alpha > 0`. `ref_gains` scales the ordering rows; the rows get a shared
/// penalised slack when `relax_chain` is set.
pub fn assemble_beamforming_slot(
    model: &BeamSlotModel,
    points: &ExpansionPoints,
    alpha: f64,
    cuts: &[DVector<C64>],
    ref_gains: &[f64],
    relax_chain: bool,
    settings: &Settings,
) -> Result<(ConicProblem, BeamLayout)> {
    let k_users = model.v.len();
    if points.a0.len() != k_users || points.b0.len() != k_users || ref_gains.len() != k_users {
        return Err(Error::Dimension(format!("expansion points for {k_users} users")));
    }
    if alpha > 0.0 && cuts.len() != model.blocks.len() {
        return Err(Error::Dimension("one cut direction per block".into()));
    }
    let mut prob = ConicProblem::new(Sense::Maximize);
    let blocks: Vec<SymBlock> = model
        .blocks
        .iter()
        .map(|b| prob.add_symmetric(format!("E_{}", b.space.name()), 2 * b.dim()))
        .collect();
    for (spec, x) in model.blocks.iter().zip(&blocks) {
        prob.add_psd(x.clone());
        prob.add_eq(diag_entry(x, spec.dim() - 1) - AffineExpr::constant(1.0));
        if model.mode == AmplitudeMode::Fixed {
            for (i, &m) in spec.active.iter().enumerate() {
                prob.add_eq(diag_entry(x, i) - AffineExpr::constant(model.fixed_beta[spec.space.index()][m]));
            }
        }
    }
    if model.mode == AmplitudeMode::Split {
        for i in 0..model.elements {
            prob.add_eq(diag_entry(&blocks[0], i) + diag_entry(&blocks[1], i) - AffineExpr::constant(1.0));
        }
    }
    if alpha > 0.0 {
        for (x, e) in blocks.iter().zip(cuts) {
            let dir = hermitian_embed(&(e * e.adjoint())).expect("outer product is Hermitian");
            let d = x.dim();
            prob.add_ge0(x.trace_inner(&(dir * 0.5)) - x.trace_inner(&DMatrix::identity(d, d)) * (0.5 * alpha));
        }
    }

    let gains: Vec<AffineExpr> = (0..k_users).map(|k| gain_expr(&blocks[model.user_block[k]], &model.v[k])).collect();
    let mut obj = AffineExpr::zero();
    let (mut av, mut bv, mut rv) = (vec![None; k_users], vec![None; k_users], vec![None; k_users]);
    for k in 0..k_users {
        let (a0, b0) = (points.a0[k], points.b0[k]);
        if !a0.is_finite() || !(a0 > 0.0) || !(b0 > 0.0) {
            continue;
        }
        let later: f64 = model.powers[k + 1..].iter().sum();
        let a = prob.add_scalar(format!("a{k}"));
        let b = prob.add_scalar(format!("b{k}"));
        let r = prob.add_scalar(format!("r{k}"));
        // a * (a0 p G) >= 1
        prob.add_rotated_soc(
            AffineExpr::var(a),
            gains[k].clone() * (0.5 * a0 * model.powers[k]),
            vec![AffineExpr::constant(1.0)],
        );
        prob.add_ge(AffineExpr::var(b), (gains[k].clone() * later + AffineExpr::constant(1.0)) * (1.0 / b0));
        let ab = a0 * b0;
        let slope = LOG2_E / (1.0 + ab);
        let bound = AffineExpr::constant((1.0 + 1.0 / ab).log2() + 2.0 * slope)
            - AffineExpr::term(a, slope)
            - AffineExpr::term(b, slope);
        prob.add_ge(bound, AffineExpr::var(r));
        obj.add_term(r, 1.0);
        av[k] = Some(a);
        bv[k] = Some(b);
        rv[k] = Some(r);
    }

    let slack = if relax_chain && k_users > 1 { Some(prob.add_scalar("chain_slack")) } else { None };
    for k in 0..k_users.saturating_sub(1) {
        let scale = ref_gains[k].max(ref_gains[k + 1]);
        if !(scale > 0.0) {
            continue;
        }
        let mut row = (gains[k + 1].clone() - gains[k].clone()) * (1.0 / scale);
        if let Some(s) = slack {
            row.add_term(s, 1.0);
        }
        prob.add_ge0(row);
    }
    if let Some(s) = slack {
        prob.add_ge0(AffineExpr::var(s));
        obj.add_term(s, -settings.chain_penalty);
    }
    prob.set_objective(obj);
    Ok((prob, BeamLayout { blocks, a: av, b: bv, r: rv, slack }))
}

/// Rank-one beams from terminal lifted blocks. In split mode the per-element
/// energies are renormalised to sum to one; in fixed mode only phases are
/// taken over. Blocks whose top eigenvector has no weight on the corner keep
/// the incoming coefficients.
pub fn extract_rank_one(model: &BeamSlotModel, e: &[DMatrix<C64>], incoming: &SlotBeams) -> Result<SlotBeams> {
    let mut out = incoming.clone();
    let mut raw = [vec![0.0; model.elements], vec![0.0; model.elements]];
    let mut got = [false, false];
    for (spec, blk) in model.blocks.iter().zip(e) {
        // sqrt(lambda) e rescaled to a unit corner is e / e_last
        let (_, vec) = max_eigpair(blk)?;
        let last = vec[vec.len() - 1];
        if !(last.norm() > 1e-12) {
            continue;
        }
        let w = vec / last;
        let p = spec.space.index();
        got[p] = true;
        for (i, &m) in spec.active.iter().enumerate() {
            let u = w[i];
            raw[p][m] = u.norm_sqr().min(1.0);
            if u.norm() > 0.0 {
                out.theta[p][m] = wrap_phase(-u.arg());
            }
        }
    }
    if model.mode == AmplitudeMode::Split && got[0] && got[1] {
        for m in 0..model.elements {
            let (r, t) = split_energy(raw[0][m], raw[1][m]);
            out.beta[0][m] = r;
            out.beta[1][m] = t;
        }
    }
    Ok(out)
}

/// Per-slot outcome with the diagnostics the tests look at.
#[derive(Debug, Clone)]
pub struct SlotOutcome {
    pub beams: SlotBeams,
    pub report: SolveReport,
    /// Lifted-form slot rate after each accepted solve.
    pub objectives: Vec<f64>,
    /// Smallest eigenvalue ratio over blocks after each accepted solve.
    pub ratios: Vec<f64>,
    /// `alpha` used in each accepted solve.
    pub alphas: Vec<f64>,
}

/// Rank-one-constrained loop for one slot, starting the cut parameter at
/// `initial_alpha` with cut directions taken from the incoming beams.
pub fn optimize_beam_slot(
    sc: &Scenario,
    slot: &ChannelSlot,
    powers: &[f64],
    incoming: &SlotBeams,
    mode: AmplitudeMode,
    settings: &Settings,
    initial_alpha: f64,
) -> Result<SlotOutcome> {
    let model = BeamSlotModel::new(sc, slot, powers, incoming, mode);
    let mut report = SolveReport::default();
    let tol = settings.tolerances();

    let true_gains = slot_gains(sc, slot, incoming);
    let base_rate: f64 = crate::channel::slot_rates(&true_gains, powers, sc.noise_power).iter().sum();
    let base_viol = chain_violation(&true_gains);

    let mut e = model.lift_beams(incoming);
    let mut g = model.gains(&e);
    let relax = chain_violation(&g) > settings.feas_tol;
    report.chain_relaxed = relax && sc.num_users() > 1;
    let mut alpha = initial_alpha.clamp(0.0, 1.0);
    let mut delta = settings.srocr_step;
    let mut prev_obj = model.objective(&e);
    let (mut objectives, mut ratios, mut alphas) = (vec![], vec![], vec![]);
    let mut accepted = 0usize;
    let mut converged = false;

    for it in 0..settings.srocr_max_iter {
        let cuts: Vec<DVector<C64>> =
            e.iter().map(|blk| max_eigpair(blk).map(|(_, v)| v)).collect::<std::result::Result<_, _>>()?;
        let points = ExpansionPoints::from_gains(&g, powers);
        let (prob, layout) = assemble_beamforming_slot(&model, &points, alpha, &cuts, &g, relax, settings)?;
        report.solves += 1;
        let sol = match solve(&prob, &tol) {
            Ok(s) if s.is_optimal() => s,
            _ => {
                report.solver_failures += 1;
                if it == 0 {
                    report.first_solve_failed = true;
                    return Ok(SlotOutcome { beams: incoming.clone(), report, objectives, ratios, alphas });
                }
                delta *= 0.5;
                let ratio = e.iter().map(eigen_ratio).collect::<Result<Vec<_>>>()?.into_iter().fold(1.0, f64::min);
                alpha = (ratio + delta).min(1.0);
                continue;
            }
        };
        accepted += 1;
        e = layout.blocks.iter().map(|b| unembed_hermitian(&sol.matrix(b))).collect();
        g = model.gains(&e);
        let obj = model.objective(&e);
        let ratio = e.iter().map(eigen_ratio).collect::<Result<Vec<_>>>()?.into_iter().fold(1.0, f64::min);
        if let Some(s) = layout.slack {
            report.chain_slack_left = sol.value(s) > settings.feas_tol;
        }
        objectives.push(obj);
        ratios.push(ratio);
        alphas.push(alpha);
        let used = alpha;
        alpha = (ratio + delta).min(1.0);
        let settled = (obj - prev_obj).abs() <= settings.srocr_objective_tol * prev_obj.abs().max(1e-12);
        prev_obj = obj;
        if (1.0 - used).abs() <= settings.srocr_tol && (settled || accepted == 1) {
            converged = true;
            break;
        }
    }
    if !converged {
        report.not_converged += 1;
        if accepted == 0 {
            return Ok(SlotOutcome { beams: incoming.clone(), report, objectives, ratios, alphas });
        }
    }

    let cand = extract_rank_one(&model, &e, incoming)?;
    let cand_gains = slot_gains(sc, slot, &cand);
    let cand_rate: f64 = crate::channel::slot_rates(&cand_gains, powers, sc.noise_power).iter().sum();
    if prev_obj - cand_rate > settings.extraction_slack * prev_obj.abs() {
        report.warnings.push(format!(
            "rank-one extraction lost {:.3e} of {:.3e} bits/s/Hz",
            prev_obj - cand_rate,
            prev_obj
        ));
    }
    let viol = chain_violation(&cand_gains);
    if cand_rate >= base_rate && viol <= base_viol.max(settings.feas_tol) {
        Ok(SlotOutcome { beams: cand, report, objectives, ratios, alphas })
    } else {
        report.rejected += 1;
        Ok(SlotOutcome { beams: incoming.clone(), report, objectives, ratios, alphas })
    }
}

/// Runs the slot loop for every slot in parallel.
pub fn optimize_beamforming(
    sc: &Scenario,
    fading: &FadingDraws,
    traj: &Trajectory,
    power: &PowerAllocation,
    init: &BeamformingSchedule,
    mode: AmplitudeMode,
    settings: &Settings,
) -> Result<(BeamformingSchedule, SolveReport)> {
    if init.slots.len() != sc.slots || power.p.len() != sc.slots || traj.points.len() != sc.slots + 1 {
        return Err(Error::Dimension("beamforming inputs disagree on the slot count".into()));
    }
    let results: Vec<Result<SlotOutcome>> = (0..sc.slots)
        .into_par_iter()
        .map(|n| {
            let slot = compute_channel_slot(sc, fading, &traj.points[n], n);
            optimize_beam_slot(sc, &slot, &power.p[n], &init.slots[n], mode, settings, 0.0)
        })
        .collect();
    let mut slots = Vec::with_capacity(sc.slots);
    let mut report = SolveReport::default();
    for r in results {
        let out = r?;
        slots.push(out.beams);
        report.absorb(out.report);
    }
    Ok((BeamformingSchedule { slots }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{combined_gain, sample_fading};
    use crate::scenario::Point;
    use approx::assert_relative_eq;

    fn small() -> (Scenario, FadingDraws) {
        let mut sc = Scenario { elements: 2, slots: 1, ..Scenario::default() };
        sc.users.truncate(2);
        sc.users[1].space = Space::Reflection;
        sc.start = Point::new(10.0, -10.0);
        sc.end = Point::new(10.0, 10.0);
        let sc = sc.validated().unwrap();
        let f = sample_fading(&sc);
        (sc, f)
    }

    #[test]
    fn direct_only_matrix() {
        let (sc, f) = small();
        let mut slot = compute_channel_slot(&sc, &f, &sc.start, 0);
        slot.uav_surface = DVector::zeros(2);
        let v = build_vkn(&slot, 0);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == 2 && j == 2 { slot.direct[0].norm_sqr() } else { 0.0 };
                assert_relative_eq!(v[(i, j)].re, want, epsilon = 1e-30);
                assert_eq!(v[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn lifted_gain_matches_combined_gain() {
        let (sc, f) = small();
        let slot = compute_channel_slot(&sc, &f, &Point::new(-3.0, 7.0), 0);
        let u = DVector::from_vec(vec![C64::from_polar(0.6, 1.1), C64::from_polar(0.9, -2.0)]);
        for k in 0..2 {
            let v = build_vkn(&slot, k);
            let want = combined_gain(&slot, &u, k).unwrap();
            assert_relative_eq!(lifted_gain(&v, &lift(&u)), want, max_relative = 1e-12);
            let (lambda, _) = max_eigpair(&v).unwrap();
            let norm2: f64 = (0..3).map(|i| v[(i, i)].re).sum();
            assert_relative_eq!(lambda, norm2, max_relative = 1e-10);
        }
    }

    #[test]
    fn alpha_update_examples() {
        let id = DMatrix::<C64>::identity(2, 2);
        assert_relative_eq!(srocr_alpha_update(0.1, &id).unwrap(), 0.6, epsilon = 1e-12);
        assert_eq!(srocr_alpha_update(1.0, &id).unwrap(), 1.0);
        let u = DVector::from_vec(vec![C64::new(0.3, 0.2)]);
        assert_relative_eq!(srocr_alpha_update(0.0, &lift(&u)).unwrap(), 1.0, epsilon = 1e-12);
        assert!(srocr_alpha_update(0.1, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn rate_bound_is_tight_at_its_point() {
        let (a0, b0) = (0.02, 3.0);
        assert_relative_eq!(rate_lower_bound(a0, b0, a0, b0), (1.0 + 1.0 / (a0 * b0)).log2(), epsilon = 1e-14);
    }

    #[test]
    fn extraction_roundtrip() {
        let (sc, f) = small();
        let slot = compute_channel_slot(&sc, &f, &sc.start, 0);
        let mut beams = SlotBeams::even(2);
        beams.beta = [vec![0.3, 0.8], vec![0.7, 0.2]];
        beams.theta = [vec![1.0, 5.0], vec![2.5, 0.1]];
        let p = [0.7, 0.3];
        let model = BeamSlotModel::new(&sc, &slot, &p, &beams, AmplitudeMode::Split);
        let e = model.lift_beams(&beams);
        let out = extract_rank_one(&model, &e, &SlotBeams::even(2)).unwrap();
        for s in 0..2 {
            for m in 0..2 {
                assert_relative_eq!(out.beta[s][m], beams.beta[s][m], epsilon = 1e-10);
                assert_relative_eq!(out.theta[s][m], beams.theta[s][m], epsilon = 1e-8);
            }
        }
        assert_eq!(out.energy_error(), 0.0);
    }

    #[test]
    fn relaxation_without_cut_is_feasible_at_the_lift() {
        let (sc, f) = small();
        let slot = compute_channel_slot(&sc, &f, &sc.start, 0);
        let beams = SlotBeams::even(2);
        let p = [0.7, 0.3];
        let model = BeamSlotModel::new(&sc, &slot, &p, &beams, AmplitudeMode::Split);
        let e = model.lift_beams(&beams);
        let g = model.gains(&e);
        let pts = ExpansionPoints::from_gains(&g, &p);
        let (prob, layout) =
            assemble_beamforming_slot(&model, &pts, 0.0, &[], &g, true, &Settings::default()).unwrap();
        assert_eq!(layout.blocks.len(), 2);
        let sol = solve(&prob, &Settings::default().tolerances()).unwrap();
        assert!(sol.is_optimal());
        // the relaxation contains the lifted incoming beams, so it cannot do worse
        assert!(sol.objective >= model.objective(&e) - 1e-6 - settings_penalty(&sol, &layout));
    }

    fn settings_penalty(sol: &conic::ConicSolution, layout: &BeamLayout) -> f64 {
        layout.slack.map(|s| Settings::default().chain_penalty * sol.value(s)).unwrap_or(0.0)
    }

    #[test]
    fn fixed_point_at_full_alpha() {
        let (sc, f) = small();
        let slot = compute_channel_slot(&sc, &f, &sc.start, 0);
        let p = [0.7, 0.3];
        let settings = Settings::default();
        let first = optimize_beam_slot(&sc, &slot, &p, &SlotBeams::even(2), AmplitudeMode::Split, &settings, 0.0).unwrap();
        let again = optimize_beam_slot(&sc, &slot, &p, &first.beams, AmplitudeMode::Split, &settings, 1.0).unwrap();
        assert!(again.report.solves <= 2);
        let r0: f64 = crate::channel::slot_rates(&slot_gains(&sc, &slot, &first.beams), &p, sc.noise_power).iter().sum();
        let r1: f64 = crate::channel::slot_rates(&slot_gains(&sc, &slot, &again.beams), &p, sc.noise_power).iter().sum();
        assert!(r1 >= r0);
        assert_relative_eq!(r1, r0, max_relative = 1e-3);
    }

    #[test]
    fn ratios_rise_and_energy_is_exact() {
        let (sc, f) = small();
        let slot = compute_channel_slot(&sc, &f, &Point::new(2.0, 3.0), 0);
        let p = [0.8, 0.2];
        let out =
            optimize_beam_slot(&sc, &slot, &p, &SlotBeams::even(2), AmplitudeMode::Split, &Settings::default(), 0.0)
                .unwrap();
        for w in out.ratios.windows(2) {
            assert!(w[1] >= w[0] - 1e-6, "{:?}", out.ratios);
        }
        assert_eq!(out.beams.energy_error(), 0.0);
        assert!(out.beams.is_valid());
    }
}
