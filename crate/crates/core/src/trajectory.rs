//! UAV waypoint optimisation for fixed beams and powers.
//!
//! Inside this module each gain is modelled with the surface phases assumed
//! aligned to the user, as `C / l^a + F / (l^{a/2} j^{b/2}) + G / j^b` with
//! `l` the UAV-surface distance, `j` the UAV-user distance and `a`, `b` the
//! corresponding path-loss exponents. `C` and `F` depend on the arrival
//! angle at the surface and are frozen at the incoming trajectory. Distances
//! become epigraph variables, the gains and rates are linearised in them, and
//! the resulting second-order cone program is solved repeatedly.

use conic::{solve, AffineExpr, ConicProblem, Sense, VarId};

use crate::beams::BeamformingSchedule;
use crate::channel::{
    dist_surface_user, dist_uav_surface, dist_uav_user, steering_vector, sum_rate, FadingDraws, C64,
};
use crate::error::{Error, Result};
use crate::power::PowerAllocation;
use crate::report::SolveReport;
use crate::scenario::{Point, Scenario};
use crate::settings::{Settings, TrajectoryObjective};

/// Waypoints `q_1 ..= q_{N+1}`; slot `n` is served from `points[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Point>,
}

impl Trajectory {
    /// `slots` equal steps from `start` to `end`.
    pub fn straight(start: Point, end: Point, slots: usize) -> Self {
        let points = (0..=slots)
            .map(|i| {
                if i == slots {
                    end
                } else {
                    start + (end - start) * (i as f64 / slots as f64)
                }
            })
            .collect();
        Trajectory { points }
    }

    pub fn longest_step(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
    }

    /// Endpoints exact, every step within `max_step` up to rounding.
    pub fn is_feasible(&self, sc: &Scenario) -> bool {
        self.points.len() == sc.slots + 1
            && self.points[0] == sc.start
            && self.points[sc.slots] == sc.end
            && self.longest_step() <= sc.max_step * (1.0 + 1e-9) + 1e-12
    }

    /// Smallest horizontal distance from a served waypoint to `p`.
    pub fn min_distance_to(&self, p: &Point) -> f64 {
        self.points[..self.points.len() - 1].iter().map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min)
    }

    /// `(1 - t) self + t other`, keeping the endpoints bit-exact.
    pub fn blend(&self, other: &Trajectory, t: f64) -> Trajectory {
        let last = self.points.len() - 1;
        let points = self
            .points
            .iter()
            .zip(&other.points)
            .enumerate()
            .map(|(i, (a, b))| if i == 0 || i == last { *a } else { a * (1.0 - t) + b * t })
            .collect();
        Trajectory { points }
    }
}

/// Coefficients of the aligned gain model, `[n][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainConstants {
    pub c: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

pub fn gain_constants(
    sc: &Scenario,
    fading: &FadingDraws,
    beams: &BeamformingSchedule,
    prev: &Trajectory,
) -> GainConstants {
    let xi = sc.ref_gain;
    let (mut c, mut f, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for n in 0..sc.slots {
        let q = prev.points[n];
        let cos = (sc.surface_position.x - q.x) / dist_uav_surface(sc, &q);
        let steer = steering_vector(sc.elements, sc.element_spacing, cos);
        let (mut cn, mut fn_, mut gn) = (Vec::new(), Vec::new(), Vec::new());
        for (k, u) in sc.users.iter().enumerate() {
            let amp = &beams.slots[n].beta[u.space.index()];
            // steering^H * sqrt(beta)
            let s: C64 = steer.iter().zip(amp).map(|(z, b)| z.conj() * b.max(0.0).sqrt()).sum();
            let d_rg = dist_surface_user(sc, &u.position);
            let h = fading.get(k, n);
            cn.push(xi * xi / d_rg.powf(sc.exp_surface_user) * s.norm_sqr());
            fn_.push(2.0 * xi.powf(1.5) / d_rg.powf(sc.exp_surface_user / 2.0) * (h.conj() * s).re);
            gn.push(xi * h.norm_sqr());
        }
        c.push(cn);
        f.push(fn_);
        g.push(gn);
    }
    GainConstants { c, f, g }
}

/// Aligned gain at UAV-surface distance `l` and UAV-user distance `j`.
pub fn aligned_gain(sc: &Scenario, c: f64, f: f64, g: f64, l: f64, j: f64) -> f64 {
    let (a, b) = (sc.exp_uav_surface, sc.exp_direct);
    c / l.powf(a) + f / (l.powf(a / 2.0) * j.powf(b / 2.0)) + g / j.powf(b)
}

/// `log2(1 + p_k / (sum_{i>k} p_i + noise / s))`.
pub fn rate_of_aligned_gain(s: f64, powers: &[f64], k: usize, noise: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let interference: f64 = powers[k + 1..].iter().sum();
    (1.0 + powers[k] / (interference + noise / s)).log2()
}

/// Expansion point: distances `l[n]` and `j[n][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaPoint {
    pub l: Vec<f64>,
    pub j: Vec<Vec<f64>>,
}

impl ScaPoint {
    /// Exact distances of `traj`, floored at `min_distance`.
    pub fn at(sc: &Scenario, traj: &Trajectory, min_distance: f64) -> Self {
        let l = (0..sc.slots).map(|n| dist_uav_surface(sc, &traj.points[n]).max(min_distance)).collect();
        let j = (0..sc.slots)
            .map(|n| {
                sc.users.iter().map(|u| dist_uav_user(sc, &traj.points[n], &u.position).max(min_distance)).collect()
            })
            .collect();
        ScaPoint { l, j }
    }
}

/// Aligned sum rate along `traj` with the constants held fixed.
pub fn aligned_sum_rate(
    sc: &Scenario,
    consts: &GainConstants,
    traj: &Trajectory,
    power: &PowerAllocation,
    min_distance: f64,
) -> f64 {
    let pt = ScaPoint::at(sc, traj, min_distance);
    let mut total = 0.0;
    for n in 0..sc.slots {
        for k in 0..sc.num_users() {
            let s = aligned_gain(sc, consts.c[n][k], consts.f[n][k], consts.g[n][k], pt.l[n], pt.j[n][k]);
            total += rate_of_aligned_gain(s, &power.p[n], k, sc.noise_power);
        }
    }
    total
}

/// First-order data at the expansion point, `[n][k]`: the aligned gain `s0`,
/// its negated slopes in the two distances (`l_slope`, `j_slope`) and the
/// rate's sensitivity to the gain (`w`).
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCoefficients {
    pub s0: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub l_slope: Vec<Vec<f64>>,
    pub j_slope: Vec<Vec<f64>>,
}

pub fn taylor_coefficients(
    sc: &Scenario,
    consts: &GainConstants,
    point: &ScaPoint,
    power: &PowerAllocation,
    min_distance: f64,
) -> Result<TaylorCoefficients> {
    let (a, b) = (sc.exp_uav_surface, sc.exp_direct);
    let noise = sc.noise_power;
    let mut out = TaylorCoefficients { s0: vec![], w: vec![], l_slope: vec![], j_slope: vec![] };
    for n in 0..sc.slots {
        let l = point.l[n];
        if !(l >= min_distance) {
            return Err(Error::Invalid(format!("slot {n}: surface distance {l} below {min_distance}")));
        }
        let (mut s_row, mut w_row, mut l_row, mut j_row) = (vec![], vec![], vec![], vec![]);
        for k in 0..sc.num_users() {
            let j = point.j[n][k];
            if !(j >= min_distance) {
                return Err(Error::Invalid(format!("slot {n}, user {k}: distance {j} below {min_distance}")));
            }
            let (c, f, g) = (consts.c[n][k], consts.f[n][k], consts.g[n][k]);
            let s = aligned_gain(sc, c, f, g, l, j);
            let p = &power.p[n];
            let interference: f64 = p[k + 1..].iter().sum();
            let w = if s > 0.0 {
                let e = noise / s;
                p[k] * noise / std::f64::consts::LN_2
                    / ((interference + e) * (interference + p[k] + e) * s * s)
            } else {
                0.0
            };
            let ls = a * c / l.powf(a + 1.0) + a * f / 2.0 / (l.powf(a / 2.0 + 1.0) * j.powf(b / 2.0));
            let js = b * g / j.powf(b + 1.0) + b * f / 2.0 / (l.powf(a / 2.0) * j.powf(b / 2.0 + 1.0));
            s_row.push(s);
            w_row.push(w);
            l_row.push(ls);
            j_row.push(js);
        }
        out.s0.push(s_row);
        out.w.push(w_row);
        out.l_slope.push(l_row);
        out.j_slope.push(j_row);
    }
    Ok(out)
}

/// Variable ids of an assembled trajectory problem. Lengths are scaled by
/// `unit`.
#[derive(Debug, Clone)]
pub struct TrajectoryLayout {
    pub q: Vec<Option<[VarId; 2]>>,
    pub l: Vec<VarId>,
    pub j: Vec<Vec<VarId>>,
    pub slack: Option<VarId>,
    pub unit: f64,
}

impl TrajectoryLayout {
    pub fn trajectory(&self, sc: &Scenario, x: &[f64]) -> Trajectory {
        let points = self
            .q
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                None if i == 0 => sc.start,
                None => sc.end,
                Some([a, b]) => Point::new(x[a.0] * self.unit, x[b.0] * self.unit),
            })
            .collect();
        Trajectory { points }
    }
}

// Mobility bound shrink so solver round-off never breaks the exact step limit.
const STEP_MARGIN: f64 = 1e-6;

fn reach(sc: &Scenario, n: usize, target: &Point) -> f64 {
    let from_start = (sc.start - target).norm() + n as f64 * sc.max_step;
    let from_end = (sc.end - target).norm() + (sc.slots - n) as f64 * sc.max_step;
    from_start.min(from_end)
}

fn chain_violated(s0: &[f64], tol: f64) -> bool {
    crate::channel::chain_violation(s0) > tol
}

/// Linearised trajectory problem around `point`. The ordering chain on the
/// linearised gains is hard unless it already fails at the expansion point,
/// in which case a uniform penalised slack is added.
pub fn assemble_trajectory_problem(
    sc: &Scenario,
    coeffs: &TaylorCoefficients,
    point: &ScaPoint,
    settings: &Settings,
) -> (ConicProblem, TrajectoryLayout) {
    let unit = sc.uav_altitude;
    let n_slots = sc.slots;
    let k_users = sc.num_users();
    let mut prob = ConicProblem::new(Sense::Maximize);

    let mut q = vec![None; n_slots + 1];
    for (n, slot) in q.iter_mut().enumerate().take(n_slots).skip(1) {
        let v = prob.add_vector(format!("q{n}"), 2);
        *slot = Some([v[0], v[1]]);
    }
    let l = prob.add_vector("l", n_slots);
    let j: Vec<Vec<VarId>> = (0..n_slots).map(|n| prob.add_vector(format!("j{n}"), k_users)).collect();
    let relax = (0..n_slots).any(|n| chain_violated(&coeffs.s0[n], settings.feas_tol));
    let slack = if relax && k_users > 1 { Some(prob.add_scalar("chain_slack")) } else { None };

    let coord = |n: usize, c: usize| -> AffineExpr {
        match q[n] {
            Some(v) => AffineExpr::var(v[c]),
            None => {
                let p = if n == 0 { sc.start } else { sc.end };
                AffineExpr::constant(p[c] / unit)
            }
        }
    };

    // mobility
    let step = sc.max_step * (1.0 - STEP_MARGIN) / unit;
    for n in 0..n_slots {
        prob.add_soc(
            AffineExpr::constant(step),
            vec![coord(n + 1, 0) - coord(n, 0), coord(n + 1, 1) - coord(n, 1)],
        );
    }

    // epigraphs from the tangent lower bound of the squared distance
    let epigraph = |prob: &mut ConicProblem, var: VarId, at: f64, height: f64, target: &Point, n: usize| {
        let at = at / unit;
        prob.add_rotated_soc(
            AffineExpr::constant(at),
            AffineExpr::var(var) - AffineExpr::constant(at / 2.0),
            vec![
                AffineExpr::constant(height / unit),
                coord(n, 0) - AffineExpr::constant(target.x / unit),
                coord(n, 1) - AffineExpr::constant(target.y / unit),
            ],
        );
        let cap = (height * height + reach(sc, n, target).powi(2)).sqrt() / unit;
        prob.add_ge(AffineExpr::constant(cap), AffineExpr::var(var));
    };
    for n in 0..n_slots {
        epigraph(&mut prob, l[n], point.l[n], sc.uav_altitude - sc.surface_height, &sc.surface_position, n);
        for (k, u) in sc.users.iter().enumerate() {
            epigraph(&mut prob, j[n][k], point.j[n][k], sc.uav_altitude, &u.position, n);
        }
    }

    // objective: negated distance slopes, optionally rate-weighted
    let mut obj = AffineExpr::zero();
    for n in 0..n_slots {
        for k in 0..k_users {
            let wt = match settings.trajectory_objective {
                TrajectoryObjective::GainSlopes => 1.0,
                TrajectoryObjective::RateSlopes => coeffs.w[n][k],
            };
            obj.add_term(l[n], -wt * coeffs.l_slope[n][k] * unit);
            obj.add_term(j[n][k], -wt * coeffs.j_slope[n][k] * unit);
        }
    }
    let norm = obj.coeff_norm();
    let mut obj = if norm > 0.0 { obj.scaled(1.0 / norm) } else { obj };

    // ordering chain on the linearised gains
    let lin_gain = |n: usize, k: usize| -> AffineExpr {
        let s0 = coeffs.s0[n][k];
        AffineExpr::constant(s0 + coeffs.l_slope[n][k] * point.l[n] + coeffs.j_slope[n][k] * point.j[n][k])
            - AffineExpr::term(l[n], coeffs.l_slope[n][k] * unit)
            - AffineExpr::term(j[n][k], coeffs.j_slope[n][k] * unit)
    };
    for n in 0..n_slots {
        for k in 0..k_users.saturating_sub(1) {
            let scale = coeffs.s0[n][k].abs().max(coeffs.s0[n][k + 1].abs());
            if !(scale > 0.0) {
                continue;
            }
            let mut row = (lin_gain(n, k + 1) - lin_gain(n, k)).scaled(1.0 / scale);
            if let Some(s) = slack {
                row.add_term(s, 1.0);
            }
            prob.add_ge0(row);
        }
    }
    if let Some(s) = slack {
        prob.add_ge0(AffineExpr::var(s));
        obj.add_term(s, -settings.chain_penalty);
    }
    prob.set_objective(obj);

    (prob, TrajectoryLayout { q, l, j, slack, unit })
}

/// Output of the linearisation loop on the aligned model.
#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub trajectory: Trajectory,
    /// Aligned sum rate after every accepted iterate, starting at the input.
    pub trace: Vec<f64>,
    pub report: SolveReport,
}

/// Runs the linearisation loop, freezing the gain constants at `init`.
/// Stops once the aligned sum rate grows by less than `trajectory_tol`.
pub fn sca_trajectory(
    sc: &Scenario,
    fading: &FadingDraws,
    beams: &BeamformingSchedule,
    power: &PowerAllocation,
    init: &Trajectory,
    settings: &Settings,
) -> Result<ScaOutcome> {
    let mut report = SolveReport::default();
    let consts = gain_constants(sc, fading, beams, init);
    let mut traj = init.clone();
    let mut obj = aligned_sum_rate(sc, &consts, &traj, power, settings.min_distance);
    let mut trace = vec![obj];
    let span = (sc.end - sc.start).norm();
    if sc.slots < 2 || span >= sc.slots as f64 * sc.max_step * (1.0 - 2.0 * STEP_MARGIN) {
        // no interior waypoint, or every waypoint is pinned by the step limit
        return Ok(ScaOutcome { trajectory: traj, trace, report });
    }
    let tol = settings.tolerances();
    let mut converged = false;
    for it in 0..settings.trajectory_max_iter {
        let point = ScaPoint::at(sc, &traj, settings.min_distance);
        let coeffs = taylor_coefficients(sc, &consts, &point, power, settings.min_distance)?;
        let (prob, layout) = assemble_trajectory_problem(sc, &coeffs, &point, settings);
        report.chain_relaxed |= layout.slack.is_some();
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
        let cand = layout.trajectory(sc, &sol.x);
        if !cand.is_feasible(sc) {
            report.rejected += 1;
            converged = true;
            break;
        }
        let cand_obj = aligned_sum_rate(sc, &consts, &cand, power, settings.min_distance);
        if cand_obj < obj {
            if obj - cand_obj > 1e-9 * obj.abs().max(1.0) {
                report.rejected += 1;
            }
            converged = true;
            break;
        }
        if let Some(s) = layout.slack {
            report.chain_slack_left = sol.value(s) > settings.feas_tol;
        }
        let inc = cand_obj - obj;
        traj = cand;
        obj = cand_obj;
        trace.push(obj);
        if inc < settings.trajectory_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        report.not_converged += 1;
    }
    Ok(ScaOutcome { trajectory: traj, trace, report })
}

/// Linearisation loop followed by a guard on the true (unaligned) sum rate:
/// the step from `init` toward the loop's output is halved until neither the
/// true sum rate nor the true gain-ordering violation gets worse.
pub fn optimize_trajectory(
    sc: &Scenario,
    fading: &FadingDraws,
    beams: &BeamformingSchedule,
    power: &PowerAllocation,
    init: &Trajectory,
    settings: &Settings,
) -> Result<(Trajectory, SolveReport)> {
    let out = sca_trajectory(sc, fading, beams, power, init, settings)?;
    let mut report = out.report;
    if out.trajectory == *init {
        return Ok((init.clone(), report));
    }
    let base = sum_rate(sc, fading, init, beams, power)?;
    let base_viol = base.chain_violation().max(settings.feas_tol);
    let mut t = 1.0;
    for _ in 0..12 {
        let cand = init.blend(&out.trajectory, t);
        let r = sum_rate(sc, fading, &cand, beams, power)?;
        if r.total >= base.total && r.chain_violation() <= base_viol && cand.is_feasible(sc) {
            return Ok((cand, report));
        }
        t *= 0.5;
    }
    report.rejected += 1;
    Ok((init.clone(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::SlotBeams;
    use approx::assert_relative_eq;

    fn setup() -> (Scenario, FadingDraws, BeamformingSchedule) {
        let mut sc = Scenario { elements: 4, slots: 4, ..Scenario::default() };
        sc.start = Point::new(10.0, -60.0);
        sc.end = Point::new(10.0, 60.0);
        let sc = sc.validated().unwrap();
        let f = crate::channel::sample_fading(&sc);
        let mut b = BeamformingSchedule { slots: vec![SlotBeams::even(4); 4] };
        b.slots[1].beta[0] = vec![0.2, 0.9, 0.4, 0.6];
        b.slots[1].beta[1] = b.slots[1].beta[0].iter().map(|x| 1.0 - x).collect();
        (sc, f, b)
    }

    #[test]
    fn straight_line() {
        let t = Trajectory::straight(Point::new(10.0, -250.0), Point::new(10.0, 250.0), 30);
        assert_eq!(t.points.len(), 31);
        for (i, p) in t.points.iter().enumerate() {
            assert_eq!(p.x, 10.0);
            assert_relative_eq!(p.y, -250.0 + i as f64 * 500.0 / 30.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn surface_off_leaves_direct_term() {
        let (sc, f, mut b) = setup();
        for s in &mut b.slots {
            s.beta = [vec![0.0; 4], vec![0.0; 4]];
        }
        let t = Trajectory::straight(sc.start, sc.end, sc.slots);
        let c = gain_constants(&sc, &f, &b, &t);
        for n in 0..sc.slots {
            for k in 0..sc.num_users() {
                assert_eq!(c.c[n][k], 0.0);
                assert_eq!(c.f[n][k], 0.0);
                let j = dist_uav_user(&sc, &t.points[n], &sc.users[k].position);
                let want = sc.ref_gain * f.get(k, n).norm_sqr() / j.powi(3);
                assert_relative_eq!(aligned_gain(&sc, 0.0, 0.0, c.g[n][k], 1.0, j), want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn no_direct_link_zeroes_f_and_g() {
        let (sc, _, b) = setup();
        let f = FadingDraws::from_fn(sc.num_users(), sc.slots, |_, _| C64::new(0.0, 0.0));
        let t = Trajectory::straight(sc.start, sc.end, sc.slots);
        let c = gain_constants(&sc, &f, &b, &t);
        assert!(c.f.iter().flatten().chain(c.g.iter().flatten()).all(|v| *v == 0.0));
    }

    #[test]
    fn aligned_gain_matches_squared_sum() {
        let (sc, f, b) = setup();
        let t = Trajectory::straight(sc.start, sc.end, sc.slots);
        let c = gain_constants(&sc, &f, &b, &t);
        for n in 0..sc.slots {
            let q = t.points[n];
            let d_ur = dist_uav_surface(&sc, &q);
            let cos = (sc.surface_position.x - q.x) / d_ur;
            let steer = steering_vector(sc.elements, sc.element_spacing, cos);
            for (k, u) in sc.users.iter().enumerate() {
                // direct field plus a cascade whose only residual phase is the arrival steering
                let d_ug = dist_uav_user(&sc, &q, &u.position);
                let d_rg = dist_surface_user(&sc, &u.position);
                let direct = f.get(k, n) * (sc.ref_gain / d_ug.powf(3.0)).sqrt();
                let mut cascade = C64::new(0.0, 0.0);
                for m in 0..sc.elements {
                    let amp = b.slots[n].beta[u.space.index()][m].sqrt();
                    cascade += steer[m].conj() * amp * sc.ref_gain / (d_ur * d_rg.powf(1.4));
                }
                let want = (direct + cascade).norm_sqr();
                let got = aligned_gain(&sc, c.c[n][k], c.f[n][k], c.g[n][k], d_ur, d_ug);
                assert_relative_eq!(got, want, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn vanishing_constants_give_zero_l_slope() {
        let (sc, _, _) = setup();
        let consts = GainConstants { c: vec![vec![0.0; 4]; 4], f: vec![vec![0.0; 4]; 4], g: vec![vec![1e-3; 4]; 4] };
        let t = Trajectory::straight(sc.start, sc.end, sc.slots);
        let pt = ScaPoint::at(&sc, &t, 1.0);
        let p = PowerAllocation::proportional(4, 4, 1.0);
        let tc = taylor_coefficients(&sc, &consts, &pt, &p, 1.0).unwrap();
        assert!(tc.l_slope.iter().flatten().all(|v| *v == 0.0));
        let mut bad = pt.clone();
        bad.l[2] = 0.5;
        assert!(taylor_coefficients(&sc, &consts, &bad, &p, 1.0).is_err());
    }

    #[test]
    fn epigraphs_are_tight_at_their_point() {
        let (sc, f, b) = setup();
        let t = Trajectory::straight(sc.start, sc.end, sc.slots);
        let pt = ScaPoint::at(&sc, &t, 1.0);
        let p = PowerAllocation::proportional(4, 4, 1.0);
        let consts = gain_constants(&sc, &f, &b, &t);
        let tc = taylor_coefficients(&sc, &consts, &pt, &p, 1.0).unwrap();
        let (prob, layout) = assemble_trajectory_problem(&sc, &tc, &pt, &Settings::default());
        let mut x = vec![0.0; prob.num_vars()];
        for (n, v) in layout.q.iter().enumerate() {
            if let Some([a, c]) = v {
                x[a.0] = t.points[n].x / layout.unit;
                x[c.0] = t.points[n].y / layout.unit;
            }
        }
        for n in 0..sc.slots {
            x[layout.l[n].0] = pt.l[n] / layout.unit;
            for k in 0..sc.num_users() {
                x[layout.j[n][k].0] = pt.j[n][k] / layout.unit;
            }
        }
        for con in prob.constraints() {
            if let conic::Constraint::RotatedSecondOrder { u, v, x: xs } = con {
                let lhs: f64 = xs.iter().map(|e| e.eval(&x).powi(2)).sum();
                let rhs = 2.0 * u.eval(&x) * v.eval(&x);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn pinned_trajectory_is_returned_unchanged() {
        let mut sc = Scenario { elements: 2, slots: 3, max_step: 0.0, ..Scenario::default() };
        sc.start = Point::new(5.0, 5.0);
        sc.end = sc.start;
        let sc = sc.validated().unwrap();
        let f = crate::channel::sample_fading(&sc);
        let b = BeamformingSchedule { slots: vec![SlotBeams::even(2); 3] };
        let p = PowerAllocation::proportional(4, 3, 1.0);
        let t = Trajectory::straight(sc.start, sc.end, 3);
        let (out, rep) = optimize_trajectory(&sc, &f, &b, &p, &t, &Settings::default()).unwrap();
        assert_eq!(out, t);
        assert_eq!(rep.solves, 0);
    }
}
