//! Ornstein-Uhlenbeck exploration noise.
//!
//! Mean-reverting toward zero, so consecutive action perturbations are
//! temporally correlated. Values are in normalized action units; callers
//! scale per action slot before clamping to the slot range.

use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct OuState {
    pub x: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
}

impl OuState {
    pub fn new(dim: usize, theta: f64, sigma: f64) -> Self {
        Self {
            x: vec![0.0; dim],
            theta,
            sigma,
            dt: 1.0,
        }
    }

    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Stationary standard deviation, `sigma * sqrt(dt / (2 theta - theta^2 dt))`
    /// for the discretized process.
    pub fn stationary_std(&self) -> f64 {
        let denom = 2.0 * self.theta - self.theta * self.theta * self.dt;
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        self.sigma * (self.dt / denom).sqrt()
    }
}

/// Advances the process one step and returns the new value:
/// `x += theta * (0 - x) * dt + sigma * sqrt(dt) * N(0,1)`.
pub fn ou_sample<R: Rng>(state: &mut OuState, rng: &mut R) -> Vec<f64> {
    let sqrt_dt = state.dt.sqrt();
    for v in &mut state.x {
        let w: f64 = rng.sample(StandardNormal);
        *v += state.theta * (0.0 - *v) * state.dt + state.sigma * sqrt_dt * w;
    }
    state.x.clone()
}
