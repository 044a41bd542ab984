//! The target abstraction consumed by every step kernel.

use crate::error::{Error, Result};
use crate::rng::NoiseSource;

/// Which data points a gradient evaluation sees.
#[derive(Clone, Copy, Debug)]
pub enum Batch<'a> {
    /// All `data_size` points, or the exact gradient for data-free targets.
    Full,
    /// Minibatch indices; the likelihood part is rescaled by `N / |S|`.
    Indices(&'a [usize]),
}

impl Batch<'_> {
    pub fn len(&self, data_size: usize) -> usize {
        match self {
            Batch::Full => data_size,
            Batch::Indices(ix) => ix.len(),
        }
    }

    pub fn is_empty(&self, data_size: usize) -> bool {
        self.len(data_size) == 0
    }
}

/// Unnormalized negative log-posterior `U` with analytic (stochastic) gradients.
///
/// Implementations are immutable after construction and may be shared across
/// chains running on different threads.
pub trait GradientModel: Send + Sync {
    /// Number of parameters `n`.
    fn dim(&self) -> usize;

    /// Number of data points `N`; zero for targets without data.
    fn data_size(&self) -> usize {
        0
    }

    /// `U(theta)` when it is tractable to evaluate.
    fn neg_log_posterior(&self, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Minibatch estimate `-(N/|S|) sum_{i in S} grad log p(d_i|theta) - grad log p(theta)`,
    /// written into `out`. `Batch::Full` yields the exact gradient of `U`.
    fn gradient(&self, theta: &[f64], batch: Batch<'_>, out: &mut [f64]);

    /// Gradient estimate including any simulated gradient noise. Defaults to
    /// [`GradientModel::gradient`].
    fn stochastic_gradient(&self, theta: &[f64], batch: Batch<'_>, _noise: &mut dyn NoiseSource, out: &mut [f64]) {
        self.gradient(theta, batch, out)
    }

    /// The pre-scaled increment `grad U~(theta) * h` that kernels subtract from
    /// the momentum. Targets whose noise is specified per increment override this.
    fn gradient_increment(
        &self,
        theta: &[f64],
        batch: Batch<'_>,
        h: f64,
        noise: &mut dyn NoiseSource,
        out: &mut [f64],
    ) {
        self.stochastic_gradient(theta, batch, noise, out);
        out.iter_mut().for_each(|g| *g *= h);
    }

    fn full_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient(theta, Batch::Full, &mut out);
        out
    }
}

/// Checked stochastic gradient of the negative log-posterior on one minibatch.
pub fn stochastic_neg_log_posterior_grad(
    model: &dyn GradientModel,
    theta: &[f64],
    batch: Batch<'_>,
    noise: &mut dyn NoiseSource,
) -> Result<Vec<f64>> {
    if theta.len() != model.dim() {
        return Err(Error::invalid(format!("theta has length {} but model dimension is {}", theta.len(), model.dim())));
    }
    if let Batch::Indices(ix) = batch {
        let n = model.data_size();
        if let Some(&bad) = ix.iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!("minibatch index {bad} out of range for {n} data points")));
        }
        if ix.is_empty() {
            return Err(Error::invalid("empty minibatch"));
        }
    }
    let mut out = vec![0.0; model.dim()];
    model.stochastic_gradient(theta, batch, noise, &mut out);
    if out.iter().all(|g| g.is_finite()) {
        Ok(out)
    } else {
        Err(Error::Divergence { step: None, what: "gradient", theta: theta.to_vec() })
    }
}
