//! Amplitude/phase schedules of the surface and their lifted form.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::channel::C64;
use crate::scenario::Space;

/// Coefficients of every element in one slot, indexed by [`Space::index`].
/// The beam vector entry is `sqrt(beta) * exp(-j theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotBeams {
    pub beta: [Vec<f64>; 2],
    pub theta: [Vec<f64>; 2],
}

impl SlotBeams {
    /// Even energy split with zero phases.
    pub fn even(elements: usize) -> Self {
        SlotBeams { beta: [vec![0.5; elements], vec![0.5; elements]], theta: [vec![0.0; elements], vec![0.0; elements]] }
    }

    pub fn elements(&self) -> usize {
        self.beta[0].len()
    }

    pub fn beam(&self, space: Space) -> DVector<C64> {
        let p = space.index();
        DVector::from_fn(self.elements(), |m, _| {
            C64::from_polar(self.beta[p][m].max(0.0).sqrt(), -self.theta[p][m])
        })
    }

    /// Sets one mode's coefficients from a beam vector, keeping amplitudes.
    pub fn set_phases_from(&mut self, space: Space, beam: &DVector<C64>) {
        let p = space.index();
        for (m, z) in beam.iter().enumerate() {
            if z.norm() > 0.0 {
                self.theta[p][m] = wrap_phase(-z.arg());
            }
        }
    }

    /// Largest `|beta_r + beta_t - 1|`.
    pub fn energy_error(&self) -> f64 {
        self.beta[0].iter().zip(&self.beta[1]).map(|(r, t)| (r + t - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn is_valid(&self) -> bool {
        let m = self.elements();
        self.beta.iter().chain(&self.theta).all(|v| v.len() == m)
            && self.beta.iter().flatten().all(|b| (0.0..=1.0).contains(b))
            && self.theta.iter().flatten().all(|t| (0.0..TAU).contains(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSchedule {
    pub slots: Vec<SlotBeams>,
}

impl BeamformingSchedule {
    pub fn mean_beta(&self, n: usize, space: Space) -> f64 {
        let b = &self.slots[n].beta[space.index()];
        b.iter().sum::<f64>() / b.len() as f64
    }

    pub fn energy_error(&self) -> f64 {
        self.slots.iter().map(SlotBeams::energy_error).fold(0.0, f64::max)
    }
}

/// Phase in `[0, 2 pi)`.
pub fn wrap_phase(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Splits raw per-mode energies so the pair sums to one; `beta_t` is formed
/// as `1 - beta_r`, which makes the sum exact in floating point.
pub fn split_energy(raw_r: f64, raw_t: f64) -> (f64, f64) {
    let s = raw_r + raw_t;
    let r = if s > 0.0 { (raw_r / s).clamp(0.0, 1.0) } else { 0.5 };
    (r, 1.0 - r)
}

/// `[u; 1][u; 1]^H`.
pub fn lift(u: &DVector<C64>) -> DMatrix<C64> {
    let m = u.len();
    let e = DVector::from_fn(m + 1, |i, _| if i < m { u[i] } else { C64::new(1.0, 0.0) });
    &e * e.adjoint()
}
