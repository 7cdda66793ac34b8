//! Channels, combined gains and NOMA rates.

use std::f64::consts::PI;

use nalgebra::{Complex, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::beams::{BeamformingSchedule, SlotBeams};
use crate::error::{Error, Result};
use crate::power::PowerAllocation;
use crate::scenario::{Point, Scenario};
use crate::trajectory::Trajectory;

pub type C64 = Complex<f64>;

/// Small-scale fading of the direct links, one unit-variance circular
/// Gaussian per (user, slot). Drawn once per experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDraws {
    users: usize,
    slots: usize,
    h: Vec<C64>,
}

impl FadingDraws {
    pub fn from_fn(users: usize, slots: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut h = Vec::with_capacity(users * slots);
        for k in 0..users {
            for n in 0..slots {
                h.push(f(k, n));
            }
        }
        FadingDraws { users, slots, h }
    }

    pub fn get(&self, k: usize, n: usize) -> C64 {
        assert!(k < self.users && n < self.slots);
        self.h[k * self.slots + n]
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn slots(&self) -> usize {
        self.slots
    }
}

/// Draws are consumed user-major, so the draws of a given (user, slot) do not
/// depend on the element count and runs that differ only in `elements` see
/// the same fading.
pub fn sample_fading(sc: &Scenario) -> FadingDraws {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    FadingDraws::from_fn(sc.num_users(), sc.slots, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// All channels seen in one slot from one UAV position.
#[derive(Debug, Clone)]
pub struct ChannelSlot {
    pub direct: Vec<C64>,
    pub uav_surface: DVector<C64>,
    pub surface_user: Vec<DVector<C64>>,
    pub dist_uav_user: Vec<f64>,
    pub dist_uav_surface: f64,
    pub dist_surface_user: Vec<f64>,
    /// Arrival direction cosine at the surface.
    pub arrival_cos: f64,
    /// Unit-modulus array response toward the UAV.
    pub steering: DVector<C64>,
}

/// `exp(-j 2 pi m spacing cos)` for `m = 0..elements`.
pub fn steering_vector(elements: usize, spacing: f64, cos: f64) -> DVector<C64> {
    DVector::from_fn(elements, |m, _| {
        C64::from_polar(1.0, -2.0 * PI * m as f64 * spacing * cos)
    })
}

pub fn dist_uav_user(sc: &Scenario, q: &Point, user: &Point) -> f64 {
    (sc.uav_altitude.powi(2) + (q - user).norm_squared()).sqrt()
}

pub fn dist_uav_surface(sc: &Scenario, q: &Point) -> f64 {
    ((sc.uav_altitude - sc.surface_height).powi(2) + (q - sc.surface_position).norm_squared())
        .sqrt()
}

pub fn dist_surface_user(sc: &Scenario, user: &Point) -> f64 {
    (sc.surface_height.powi(2) + (sc.surface_position - user).norm_squared()).sqrt()
}

/// Channels at slot `n` (0-based) with the UAV at `q`.
pub fn compute_channel_slot(sc: &Scenario, fading: &FadingDraws, q: &Point, n: usize) -> ChannelSlot {
    let m = sc.elements;
    let d_ur = dist_uav_surface(sc, q);
    let arrival_cos = (sc.surface_position.x - q.x) / d_ur;
    let steering = steering_vector(m, sc.element_spacing, arrival_cos);
    let uav_surface = &steering * C64::from((sc.ref_gain / d_ur.powf(sc.exp_uav_surface)).sqrt());

    let k = sc.num_users();
    let mut direct = Vec::with_capacity(k);
    let mut surface_user = Vec::with_capacity(k);
    let mut dist_ug = Vec::with_capacity(k);
    let mut dist_rg = Vec::with_capacity(k);
    for (i, u) in sc.users.iter().enumerate() {
        let d_ug = dist_uav_user(sc, q, &u.position);
        let d_rg = dist_surface_user(sc, &u.position);
        let dep_cos = (sc.surface_position.x - u.position.x) / d_rg;
        let amp_rg = (sc.ref_gain / d_rg.powf(sc.exp_surface_user)).sqrt();
        surface_user.push(steering_vector(m, sc.element_spacing, dep_cos) * C64::from(amp_rg));
        direct.push(fading.get(i, n) * (sc.ref_gain / d_ug.powf(sc.exp_direct)).sqrt());
        dist_ug.push(d_ug);
        dist_rg.push(d_rg);
    }
    ChannelSlot {
        direct,
        uav_surface,
        surface_user,
        dist_uav_user: dist_ug,
        dist_uav_surface: d_ur,
        dist_surface_user: dist_rg,
        arrival_cos,
        steering,
    }
}

/// Per-element cascade coefficients `conj(g_rg[m]) * g_ur[m]` of user `k`;
/// the cascaded channel is their dot product with the beam vector.
pub fn cascade_coefficients(slot: &ChannelSlot, k: usize) -> DVector<C64> {
    slot.surface_user[k].zip_map(&slot.uav_surface, |a, b| a.conj() * b)
}

/// `|h_k + g_rg^H diag(beam) g_ur|^2`.
pub fn combined_gain(slot: &ChannelSlot, beam: &DVector<C64>, k: usize) -> Result<f64> {
    let m = slot.uav_surface.len();
    if beam.len() != m {
        return Err(Error::Dimension(format!("beam has {} entries, surface has {m}", beam.len())));
    }
    if k >= slot.direct.len() {
        return Err(Error::Dimension(format!("user {k} of {}", slot.direct.len())));
    }
    let cascade: C64 = cascade_coefficients(slot, k).iter().zip(beam.iter()).map(|(c, u)| c * u).sum();
    Ok((slot.direct[k] + cascade).norm_sqr())
}

/// Gains of every user in a slot, each through the beamformer of its space.
pub fn slot_gains(sc: &Scenario, slot: &ChannelSlot, beams: &SlotBeams) -> Vec<f64> {
    let vecs = [beams.beam(crate::scenario::Space::Reflection), beams.beam(crate::scenario::Space::Transmission)];
    sc.users
        .iter()
        .enumerate()
        .map(|(k, u)| combined_gain(slot, &vecs[u.space.index()], k).expect("consistent dimensions"))
        .collect()
}

/// Rate of user `k` (0-based) after cancelling users decoded before it.
pub fn user_rate(gain: f64, powers: &[f64], k: usize, noise: f64) -> f64 {
    let interference: f64 = powers[k + 1..].iter().sum::<f64>() * gain;
    (1.0 + powers[k] * gain / (interference + noise)).log2()
}

pub fn slot_rates(gains: &[f64], powers: &[f64], noise: f64) -> Vec<f64> {
    (0..gains.len()).map(|k| user_rate(gains[k], powers, k, noise)).collect()
}

/// Largest relative violation of the decoding-order gain chain
/// `gain[k+1] >= gain[k]`; zero when the chain holds.
pub fn chain_violation(gains: &[f64]) -> f64 {
    let scale = gains.iter().cloned().fold(0.0, f64::max);
    if scale <= 0.0 {
        return 0.0;
    }
    gains.windows(2).map(|w| (w[0] - w[1]).max(0.0) / scale).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `rates[n][k]`, bits/s/Hz.
    pub rates: Vec<Vec<f64>>,
    pub gains: Vec<Vec<f64>>,
    pub total: f64,
}

impl RateReport {
    pub fn slot_total(&self, n: usize) -> f64 {
        self.rates[n].iter().sum()
    }

    pub fn chain_violation(&self) -> f64 {
        self.gains.iter().map(|g| chain_violation(g)).fold(0.0, f64::max)
    }
}

pub fn sum_rate(
    sc: &Scenario,
    fading: &FadingDraws,
    traj: &Trajectory,
    beams: &BeamformingSchedule,
    power: &PowerAllocation,
) -> Result<RateReport> {
    let n_slots = sc.slots;
    if traj.points.len() != n_slots + 1 || beams.slots.len() != n_slots || power.p.len() != n_slots {
        return Err(Error::Dimension(format!(
            "{} slots, trajectory has {} points, beams {} slots, power {} slots",
            n_slots,
            traj.points.len(),
            beams.slots.len(),
            power.p.len()
        )));
    }
    let mut rates = Vec::with_capacity(n_slots);
    let mut gains = Vec::with_capacity(n_slots);
    let mut total = 0.0;
    for n in 0..n_slots {
        if beams.slots[n].elements() != sc.elements || power.p[n].len() != sc.num_users() {
            return Err(Error::Dimension(format!("slot {n} beams or powers")));
        }
        let slot = compute_channel_slot(sc, fading, &traj.points[n], n);
        let g = slot_gains(sc, &slot, &beams.slots[n]);
        let r = slot_rates(&g, &power.p[n], sc.noise_power);
        total += r.iter().sum::<f64>();
        rates.push(r);
        gains.push(g);
    }
    Ok(RateReport { rates, gains, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scenario() -> Scenario {
        Scenario {
            uav_altitude: 30.0,
            surface_height: 20.0,
            surface_position: Point::new(0.0, 0.0),
            ..Scenario::default()
        }
    }

    #[test]
    fn fading_is_seeded() {
        let mut sc = scenario();
        let a = sample_fading(&sc);
        assert_eq!(a, sample_fading(&sc));
        sc.seed += 1;
        assert_ne!(a, sample_fading(&sc));
    }

    #[test]
    fn fading_has_unit_power() {
        let mut sc = scenario();
        sc.slots = 2500;
        let f = sample_fading(&sc);
        let n = (sc.num_users() * sc.slots) as f64;
        let mean_pow: f64 =
            (0..sc.num_users()).flat_map(|k| (0..sc.slots).map(move |t| (k, t))).map(|(k, t)| f.get(k, t).norm_sqr()).sum::<f64>() / n;
        assert!((mean_pow - 1.0).abs() < 0.05, "{mean_pow}");
    }

    #[test]
    fn fading_does_not_depend_on_elements() {
        let mut sc = scenario();
        let a = sample_fading(&sc);
        sc.elements = 3;
        assert_eq!(a, sample_fading(&sc));
    }

    #[test]
    fn overhead_surface_sees_zero_angle() {
        let sc = scenario();
        let f = sample_fading(&sc);
        let s = compute_channel_slot(&sc, &f, &Point::new(0.0, 0.0), 0);
        assert_relative_eq!(s.dist_uav_surface, 10.0);
        assert_eq!(s.arrival_cos, 0.0);
        assert!(s.steering.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn offset_uav_distance_and_angle() {
        let sc = scenario();
        let f = sample_fading(&sc);
        let s = compute_channel_slot(&sc, &f, &Point::new(-10.0, 0.0), 0);
        assert_relative_eq!(s.dist_uav_surface, 200f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s.arrival_cos, 10.0 / 200f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s.arrival_cos, 0.70711, epsilon = 1e-5);
    }

    #[test]
    fn surface_user_norm() {
        let mut sc = scenario();
        sc.users[0].position = Point::new(15.0, 0.0);
        let f = sample_fading(&sc);
        let s = compute_channel_slot(&sc, &f, &Point::new(10.0, 0.0), 0);
        assert_relative_eq!(s.dist_surface_user[0], 25.0, epsilon = 1e-12);
        let want = sc.elements as f64 * sc.ref_gain / 25f64.powf(2.8);
        assert_relative_eq!(s.surface_user[0].norm_squared(), want, max_relative = 1e-12);
    }

    #[test]
    fn zero_beam_leaves_direct_link() {
        let sc = scenario();
        let f = sample_fading(&sc);
        let s = compute_channel_slot(&sc, &f, &Point::new(3.0, -7.0), 0);
        let zero = DVector::from_element(sc.elements, C64::new(0.0, 0.0));
        for k in 0..sc.num_users() {
            assert_eq!(combined_gain(&s, &zero, k).unwrap(), s.direct[k].norm_sqr());
        }
        let short = DVector::from_element(2, C64::new(0.0, 0.0));
        assert!(matches!(combined_gain(&s, &short, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn single_element_aligned_cascade() {
        let mut sc = scenario();
        sc.elements = 1;
        let f = FadingDraws::from_fn(sc.num_users(), sc.slots, |_, _| C64::new(0.0, 0.0));
        let q = Point::new(12.0, 5.0);
        let s = compute_channel_slot(&sc, &f, &q, 0);
        let c = cascade_coefficients(&s, 0)[0];
        let beam = DVector::from_element(1, C64::from_polar(1.0, -c.arg()));
        let d_ur = s.dist_uav_surface;
        let d_rg = s.dist_surface_user[0];
        let want = sc.ref_gain.powi(2) / (d_ur.powf(2.0) * d_rg.powf(2.8));
        assert_relative_eq!(combined_gain(&s, &beam, 0).unwrap(), want, max_relative = 1e-12);
    }

    #[test]
    fn gain_matches_elementwise_sum() {
        let mut sc = scenario();
        sc.elements = 3;
        let f = sample_fading(&sc);
        let s = compute_channel_slot(&sc, &f, &Point::new(4.0, 9.0), 1);
        let beam = DVector::from_vec(vec![
            C64::from_polar(0.3, 1.1),
            C64::from_polar(0.9, -2.0),
            C64::from_polar(0.5, 0.4),
        ]);
        for k in 0..sc.num_users() {
            // independent expansion over elements, straight from the link definitions
            let mut g = s.direct[k];
            for m in 0..3 {
                g += s.surface_user[k][m].conj() * beam[m] * s.uav_surface[m];
            }
            assert_relative_eq!(combined_gain(&s, &beam, k).unwrap(), g.norm_sqr(), max_relative = 1e-12);
        }
    }

    #[test]
    fn rate_examples() {
        assert_eq!(user_rate(1.0, &[0.0, 1.0], 0, 1.0), 0.0);
        assert_relative_eq!(user_rate(2.0, &[1.0, 0.5], 1, 1.0), 1.0);
        assert_relative_eq!(user_rate(1.0, &[2.0, 1.0], 0, 1.0), 1.0);
    }

    #[test]
    fn chain_violation_measure() {
        assert_eq!(chain_violation(&[1.0, 2.0, 3.0]), 0.0);
        assert_relative_eq!(chain_violation(&[1.0, 3.0, 2.0]), 1.0 / 3.0);
    }
}
