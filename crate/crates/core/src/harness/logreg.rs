use serde_json::{json, Value};

use super::config::{ExperimentConfig, LogRegParams, ModelParams};
use super::csv::CsvTable;
use super::{cell_stream, cells, data_seed};
use crate::data::{load_libsvm, synth_classification, SparseDataset};
use crate::error::{Error, Result};
use crate::integrators::{advance, IntegratorConfig, IntegratorKind};
use crate::minibatch::MinibatchSchedule;
use crate::model::GradientModel;
use crate::models::LogisticRegressionModel;
use crate::par::map_ordered;
use crate::state::SamplerState;

/// One learning-curve point, taken at each recorded sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub iteration: u64,
    /// Error of the posterior-averaged prediction so far.
    pub test_error: f64,
    /// Training log-likelihood of the current sample.
    pub train_loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegCell {
    pub kind: IntegratorKind,
    pub h: f64,
    pub diffusion: f64,
    /// NaN when the chain diverged.
    pub test_accuracy: f64,
    pub diverged_at: Option<u64>,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone)]
pub struct LogRegReport {
    pub cells: Vec<LogRegCell>,
    /// Whether the synthetic task stood in for LIBSVM files.
    pub synthetic: bool,
    pub train_rows: usize,
    pub test_rows: usize,
    pub dim: usize,
}

impl LogRegReport {
    /// Highest test accuracy reached by `kind` across the (h, D) grid; ties
    /// go to the earlier cell.
    pub fn best(&self, kind: IntegratorKind) -> Option<&LogRegCell> {
        self.cells.iter().filter(|c| c.kind == kind && c.test_accuracy.is_finite()).fold(
            None,
            |best: Option<&LogRegCell>, c| match best {
                Some(b) if b.test_accuracy >= c.test_accuracy => Some(b),
                _ => Some(c),
            },
        )
    }

    pub fn tables(&self) -> Vec<CsvTable> {
        let mut acc = CsvTable::new("accuracy.csv", &["kind", "h", "D", "test_accuracy", "diverged_at"]);
        let mut curve =
            CsvTable::new("learning_curve.csv", &["kind", "h", "D", "iteration", "test_error", "train_loglik"]);
        for c in &self.cells {
            acc.push(&[&c.kind.as_str(), &c.h, &c.diffusion, &c.test_accuracy, &c.diverged_at]);
            for p in &c.curve {
                curve.push(&[&c.kind.as_str(), &c.h, &c.diffusion, &p.iteration, &p.test_error, &p.train_loglik]);
            }
        }
        vec![acc, curve]
    }

    pub fn summary(&self) -> Value {
        let mut kinds: Vec<IntegratorKind> = self.cells.iter().map(|c| c.kind).collect();
        kinds.dedup();
        let best: Vec<Value> = kinds
            .into_iter()
            .map(|k| match self.best(k) {
                Some(c) => json!({ "kind": k.as_str(), "h": c.h, "D": c.diffusion, "test_accuracy": c.test_accuracy }),
                None => json!({ "kind": k.as_str(), "test_accuracy": Value::Null }),
            })
            .collect();
        json!({
            "experiment": "logreg",
            "synthetic": self.synthetic,
            "train_rows": self.train_rows,
            "test_rows": self.test_rows,
            "dim": self.dim,
            "best": best,
        })
    }
}

fn load(config: &ExperimentConfig, p: &LogRegParams) -> Result<(SparseDataset, SparseDataset, bool)> {
    match (&p.train, &p.test) {
        (Some(train), Some(test)) => {
            let train = load_libsvm(train, p.expected_dim)?;
            let test = load_libsvm(test, p.expected_dim)?;
            let cols = train.cols().max(test.cols());
            Ok((train.with_cols(cols)?, test.with_cols(cols)?, false))
        }
        _ => {
            let train = synth_classification(p.n_train, p.synthetic, data_seed(config.seed, 0));
            let test = synth_classification(p.n_test, p.synthetic, data_seed(config.seed, 1));
            Ok((train.to_sparse()?, test.to_sparse()?, true))
        }
    }
}

/// Bayesian logistic regression over the (kind, h, D) grid.
///
/// Predictions average the predictive probability over the post-burn-in
/// thinned samples and threshold at 0.5. Chains start at the origin with
/// zero momentum and `xi = D`.
pub fn run_logreg_experiment(config: &ExperimentConfig) -> Result<LogRegReport> {
    config.validate()?;
    let ModelParams::LogReg(params) = &config.model else {
        return Err(Error::Config(format!("{} config passed to the logistic driver", config.experiment)));
    };
    let (train, test, synthetic) = load(config, params)?;
    if config.batch_size > train.rows() {
        return Err(Error::Config(format!("batch_size {} exceeds {} training rows", config.batch_size, train.rows())));
    }
    let model = LogisticRegressionModel::new(train, params.prior_variance);
    let dim = model.dim();
    let jobs = cells(config);
    let cells = map_ordered(&jobs, |&(kind, h_idx, d_idx)| {
        run_cell(config, &model, &test, kind, config.h[h_idx], config.diffusion[d_idx], (h_idx, d_idx))
    });
    Ok(LogRegReport {
        cells: cells.into_iter().collect::<Result<_>>()?,
        synthetic,
        train_rows: model.data().rows(),
        test_rows: test.rows(),
        dim,
    })
}

fn run_cell(
    config: &ExperimentConfig,
    model: &LogisticRegressionModel,
    test: &SparseDataset,
    kind: IntegratorKind,
    h: f64,
    diffusion: f64,
    (h_idx, d_idx): (usize, usize),
) -> Result<LogRegCell> {
    let length = config.chain_length()?;
    let integrator = IntegratorConfig::new(kind, h, diffusion)?;
    let stream = cell_stream(config.seed, kind, h_idx, d_idx);
    let mut schedule =
        MinibatchSchedule::new(model.data().rows(), config.batch_size, config.batch_mode, stream.substream(&[0]))?;
    let mut noise = stream.substream(&[1]);
    let dim = model.dim();
    let mut state = SamplerState::at(vec![0.0; dim], diffusion);

    let mut prob_sum = vec![0.0; test.rows()];
    let mut samples = 0u64;
    let mut curve = Vec::with_capacity(length.recorded() as usize);
    let run =
        advance(model, &mut state, &integrator, Some(&mut schedule), 1, length.total_steps, &mut noise, |step, s| {
            if !length.records(step) {
                return;
            }
            for (acc, p) in prob_sum.iter_mut().zip(LogisticRegressionModel::predict(&s.theta, test)) {
                *acc += p;
            }
            samples += 1;
            curve.push(CurvePoint {
                iteration: step,
                test_error: 1.0 - accuracy(&prob_sum, samples, test),
                train_loglik: LogisticRegressionModel::log_likelihood(&s.theta, model.data()),
            });
        });
    let (test_accuracy, diverged_at) = match run {
        Ok(()) => (accuracy(&prob_sum, samples, test), None),
        Err(Error::Divergence { step, .. }) => (f64::NAN, step),
        Err(e) => return Err(e),
    };
    Ok(LogRegCell { kind, h, diffusion, test_accuracy, diverged_at, curve })
}

fn accuracy(prob_sum: &[f64], samples: u64, test: &SparseDataset) -> f64 {
    let n = samples as f64;
    let correct = prob_sum.iter().zip(test.labels()).filter(|(s, &y)| (**s / n >= 0.5) == (y == 1.0)).count();
    correct as f64 / test.rows() as f64
}
