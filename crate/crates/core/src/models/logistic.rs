use crate::data::SparseDataset;
use crate::model::{Batch, GradientModel};

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln sigma(z)` without overflow.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Bayesian logistic regression with an isotropic Gaussian prior.
///
/// Parameters are `(w_1, ..., w_P, c)`: one weight per feature followed by the
/// bias, which shares the weights' prior.
#[derive(Clone, Debug)]
pub struct LogisticRegressionModel {
    data: SparseDataset,
    prior_variance: f64,
}

impl LogisticRegressionModel {
    pub fn new(data: SparseDataset, prior_variance: f64) -> Self {
        assert!(prior_variance > 0.0, "prior variance must be positive");
        Self { data, prior_variance }
    }

    pub fn data(&self) -> &SparseDataset {
        &self.data
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }

    /// Linear predictor `w . x + c` for row `i` of `data`.
    pub fn logit(theta: &[f64], data: &SparseDataset, i: usize) -> f64 {
        let (ix, vals) = data.row(i);
        let bias = theta[theta.len() - 1];
        ix.iter().zip(vals).fold(bias, |acc, (&j, &v)| acc + theta[j as usize] * v)
    }

    /// `P(y = 1 | x_i)` for every row of `data`.
    pub fn predict(theta: &[f64], data: &SparseDataset) -> Vec<f64> {
        (0..data.rows()).map(|i| sigmoid(Self::logit(theta, data, i))).collect()
    }

    /// Data log-likelihood `sum_i log p(y_i | x_i, theta)`.
    pub fn log_likelihood(theta: &[f64], data: &SparseDataset) -> f64 {
        (0..data.rows())
            .map(|i| {
                let z = Self::logit(theta, data, i);
                if data.label(i) == 1.0 {
                    log_sigmoid(z)
                } else {
                    log_sigmoid(-z)
                }
            })
            .sum()
    }

    fn accumulate_row(&self, theta: &[f64], i: usize, out: &mut [f64]) {
        let residual = sigmoid(Self::logit(theta, &self.data, i)) - self.data.label(i);
        let (ix, vals) = self.data.row(i);
        for (&j, &v) in ix.iter().zip(vals) {
            out[j as usize] += residual * v;
        }
        let last = out.len() - 1;
        out[last] += residual;
    }
}

impl GradientModel for LogisticRegressionModel {
    fn dim(&self) -> usize {
        self.data.cols() + 1
    }

    fn data_size(&self) -> usize {
        self.data.rows()
    }

    fn neg_log_posterior(&self, theta: &[f64]) -> Option<f64> {
        let prior = theta.iter().map(|t| t * t).sum::<f64>() / (2.0 * self.prior_variance);
        Some(prior - Self::log_likelihood(theta, &self.data))
    }

    fn gradient(&self, theta: &[f64], batch: Batch<'_>, out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        let n = self.data.rows();
        let scale = match batch {
            Batch::Full => {
                (0..n).for_each(|i| self.accumulate_row(theta, i, out));
                1.0
            }
            Batch::Indices(ix) => {
                ix.iter().for_each(|&i| self.accumulate_row(theta, i, out));
                n as f64 / ix.len() as f64
            }
        };
        for (g, t) in out.iter_mut().zip(theta) {
            *g = *g * scale + t / self.prior_variance;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_datum() -> LogisticRegressionModel {
        let mut d = SparseDataset::new(2);
        d.push_row(&[(0, 1.0)], 1.0).unwrap();
        LogisticRegressionModel::new(d, 10.0)
    }

    #[test]
    fn values_at_origin() {
        let m = one_datum();
        let u = m.neg_log_posterior(&[0.0; 3]).unwrap();
        assert!((u - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(m.full_gradient(&[0.0; 3]), vec![-0.5, 0.0, -0.5]);
    }

    #[test]
    fn extreme_logits_stay_finite() {
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert_eq!(log_sigmoid(800.0), 0.0);
        let m = one_datum();
        let u = m.neg_log_posterior(&[-1e3, 0.0, 0.0]).unwrap();
        assert!(u.is_finite() && u > 1e3 - 1.0);
    }
}
