use crate::model::{Batch, GradientModel};

/// Independent standard normal in `dim` dimensions, `U(theta) = |theta|^2 / 2`.
///
/// Its moments are known exactly (`E theta_i = 0`, `E theta_i^2 = 1`), which
/// makes it the reference target for bias measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaussianModel {
    pub dim: usize,
}

impl GaussianModel {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self { dim }
    }
}

impl GradientModel for GaussianModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn neg_log_posterior(&self, theta: &[f64]) -> Option<f64> {
        Some(0.5 * theta.iter().map(|t| t * t).sum::<f64>())
    }

    fn gradient(&self, theta: &[f64], _batch: Batch<'_>, out: &mut [f64]) {
        out.copy_from_slice(theta);
    }
}
