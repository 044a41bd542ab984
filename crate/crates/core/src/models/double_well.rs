use crate::model::{Batch, GradientModel};
use crate::rng::NoiseSource;

/// `U(theta) = (theta+4)(theta+1)(theta-1)(theta-3)/14 + 0.5`.
pub fn double_well_potential(theta: f64) -> f64 {
    (theta + 4.0) * (theta + 1.0) * (theta - 1.0) * (theta - 3.0) / 14.0 + 0.5
}

/// `U'(theta) = (4 theta^3 + 3 theta^2 - 26 theta - 1) / 14`.
pub fn double_well_grad(theta: f64) -> f64 {
    (((4.0 * theta + 3.0) * theta - 26.0) * theta - 1.0) / 14.0
}

/// One-dimensional double-well target whose gradient noise is simulated.
///
/// The noisy gradient is defined through its increment,
/// `grad U~(theta) h = grad U(theta) h + N(0, 2 B h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleWellModel {
    /// Gradient-noise scale `B >= 0`.
    pub noise_scale: f64,
}

impl DoubleWellModel {
    pub fn new(noise_scale: f64) -> Self {
        assert!(noise_scale >= 0.0, "noise scale must be nonnegative");
        Self { noise_scale }
    }

    pub fn stochastic_grad_increment(&self, theta: f64, h: f64, noise: &mut dyn NoiseSource) -> f64 {
        let exact = double_well_grad(theta) * h;
        if self.noise_scale > 0.0 {
            exact + (2.0 * self.noise_scale * h).sqrt() * noise.standard_normal()
        } else {
            exact
        }
    }
}

impl Default for DoubleWellModel {
    fn default() -> Self {
        Self::new(1.0)
    }
}

impl GradientModel for DoubleWellModel {
    fn dim(&self) -> usize {
        1
    }

    fn neg_log_posterior(&self, theta: &[f64]) -> Option<f64> {
        Some(double_well_potential(theta[0]))
    }

    fn gradient(&self, theta: &[f64], _batch: Batch<'_>, out: &mut [f64]) {
        out[0] = double_well_grad(theta[0]);
    }

    fn gradient_increment(
        &self,
        theta: &[f64],
        _batch: Batch<'_>,
        h: f64,
        noise: &mut dyn NoiseSource,
        out: &mut [f64],
    ) {
        out[0] = self.stochastic_grad_increment(theta[0], h, noise);
    }
}
