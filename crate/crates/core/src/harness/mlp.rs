use serde_json::{json, Value};

use super::config::{ExperimentConfig, MlpParams, ModelParams};
use super::csv::CsvTable;
use super::{cell_stream, cells, data_seed, finite_or_null};
use crate::data::{load_idx, synth_classification, DenseDataset};
use crate::error::{Error, Result};
use crate::integrators::{advance, IntegratorConfig, IntegratorKind};
use crate::minibatch::MinibatchSchedule;
use crate::models::MlpModel;
use crate::par::map_ordered;
use crate::state::SamplerState;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpEpoch {
    /// 1-based.
    pub epoch: u64,
    /// Stepsize used during this epoch.
    pub step_size: f64,
    /// Accuracy of the posterior-averaged prediction; before burn-in ends,
    /// of the current sample alone.
    pub test_accuracy: f64,
    /// Mean training negative log-likelihood of the current sample.
    pub train_nll: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpCell {
    pub kind: IntegratorKind,
    pub h: f64,
    pub diffusion: f64,
    pub epochs: Vec<MlpEpoch>,
    /// `(epoch, step)` of a divergence; later epochs were not run.
    pub diverged_at: Option<(u64, u64)>,
}

impl MlpCell {
    /// Accuracy after the last epoch; zero after a divergence.
    pub fn final_accuracy(&self) -> f64 {
        match (self.diverged_at, self.epochs.last()) {
            (None, Some(e)) => e.test_accuracy,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MlpReport {
    pub cells: Vec<MlpCell>,
    pub synthetic: bool,
}

impl MlpReport {
    pub fn cell(&self, kind: IntegratorKind, h: f64) -> Option<&MlpCell> {
        self.cells.iter().find(|c| c.kind == kind && c.h == h)
    }

    pub fn tables(&self) -> Vec<CsvTable> {
        let mut t = CsvTable::new(
            "learning_curve.csv",
            &["kind", "h", "D", "epoch", "step_size", "test_accuracy", "train_nll", "diverged"],
        );
        for c in &self.cells {
            for e in &c.epochs {
                t.push(&[
                    &c.kind.as_str(),
                    &c.h,
                    &c.diffusion,
                    &e.epoch,
                    &e.step_size,
                    &e.test_accuracy,
                    &e.train_nll,
                    &false,
                ]);
            }
            if let Some((epoch, _)) = c.diverged_at {
                let nan = f64::NAN;
                t.push(&[&c.kind.as_str(), &c.h, &c.diffusion, &epoch, &nan, &nan, &nan, &true]);
            }
        }
        vec![t]
    }

    pub fn summary(&self) -> Value {
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                json!({
                    "kind": c.kind.as_str(),
                    "h": c.h,
                    "D": c.diffusion,
                    "final_accuracy": finite_or_null(c.final_accuracy()),
                    "diverged_at_epoch": c.diverged_at.map(|d| d.0),
                })
            })
            .collect();
        json!({ "experiment": "mlp", "synthetic": self.synthetic, "cells": cells })
    }
}

/// Stepsize for a 1-based epoch under the halve-once schedule.
pub fn scheduled_step_size(h: f64, epoch: u64, halve_at: Option<u64>) -> f64 {
    match halve_at {
        Some(at) if epoch >= at => 0.5 * h,
        _ => h,
    }
}

fn load(config: &ExperimentConfig, p: &MlpParams) -> Result<(DenseDataset, DenseDataset, bool)> {
    match (&p.train_idx, &p.test_idx) {
        (Some(train), Some(test)) => {
            Ok((load_idx(&train.images, &train.labels)?, load_idx(&test.images, &test.labels)?, false))
        }
        _ => Ok((
            synth_classification(p.n_train, p.synthetic, data_seed(config.seed, 0)),
            synth_classification(p.n_test, p.synthetic, data_seed(config.seed, 1)),
            true,
        )),
    }
}

/// Trains a feed-forward net per (kind, h, D) cell, one row per epoch.
pub fn run_mlp_experiment(config: &ExperimentConfig) -> Result<MlpReport> {
    config.validate()?;
    let ModelParams::Mlp(params) = &config.model else {
        return Err(Error::Config(format!("{} config passed to the MLP driver", config.experiment)));
    };
    let (train, test, synthetic) = load(config, params)?;
    if config.batch_size > train.len() {
        return Err(Error::Config(format!("batch_size {} exceeds {} training rows", config.batch_size, train.len())));
    }
    let model = MlpModel::new(params.layer_sizes.clone(), params.activation, params.prior_variance, train)?;
    let sizes = model.layer_sizes();
    if test.dim != sizes[0] {
        return Err(Error::Config(format!("test inputs have {} features, net expects {}", test.dim, sizes[0])));
    }
    let outputs = sizes[sizes.len() - 1];
    if test.labels.iter().any(|&y| y >= outputs) {
        return Err(Error::Config(format!("test labels exceed the {outputs} network outputs")));
    }
    let steps_per_epoch = (model.data().len() as u64).div_ceil(config.batch_size as u64);
    if config.burn_in >= steps_per_epoch * params.epochs {
        return Err(Error::Config(format!(
            "burn_in {} leaves no samples in {} steps",
            config.burn_in,
            steps_per_epoch * params.epochs
        )));
    }
    let jobs = cells(config);
    let cells =
        map_ordered(&jobs, |&(kind, h_idx, d_idx)| run_cell(config, params, &model, &test, kind, (h_idx, d_idx)));
    Ok(MlpReport { cells: cells.into_iter().collect::<Result<_>>()?, synthetic })
}

fn run_cell(
    config: &ExperimentConfig,
    params: &MlpParams,
    model: &MlpModel,
    test: &DenseDataset,
    kind: IntegratorKind,
    (h_idx, d_idx): (usize, usize),
) -> Result<MlpCell> {
    let (h, diffusion) = (config.h[h_idx], config.diffusion[d_idx]);
    let stream = cell_stream(config.seed, kind, h_idx, d_idx);
    let train = model.data();
    let mut schedule =
        MinibatchSchedule::new(train.len(), config.batch_size, config.batch_mode, stream.substream(&[0]))?;
    let mut noise = stream.substream(&[1]);
    let mut state = SamplerState::at(model.init_params(&mut stream.substream(&[2])), diffusion);
    let steps_per_epoch = schedule.batches_per_epoch() as u64;
    let classes = model.layer_sizes()[model.layer_sizes().len() - 1];

    let mut prob_sum = vec![0.0; test.len() * classes];
    let mut samples = 0u64;
    let mut epochs = Vec::with_capacity(params.epochs as usize);
    let mut diverged_at = None;
    for epoch in 1..=params.epochs {
        let step_size = scheduled_step_size(h, epoch, params.halve_at_epoch);
        let integrator = IntegratorConfig::new(kind, step_size, diffusion)?;
        let first = (epoch - 1) * steps_per_epoch + 1;
        let run = advance(
            model,
            &mut state,
            &integrator,
            Some(&mut schedule),
            first,
            steps_per_epoch,
            &mut noise,
            |step, s| {
                if step > config.burn_in && (step - config.burn_in).is_multiple_of(config.thinning) {
                    for (acc, p) in prob_sum.iter_mut().zip(model.predict(&s.theta, test)) {
                        *acc += p;
                    }
                    samples += 1;
                }
            },
        );
        match run {
            Ok(()) => {}
            Err(Error::Divergence { step, .. }) => {
                diverged_at = Some((epoch, step.unwrap_or(first)));
                break;
            }
            Err(e) => return Err(e),
        }
        let test_accuracy = if samples > 0 {
            accuracy(&prob_sum, classes, test)
        } else {
            accuracy(&model.predict(&state.theta, test), classes, test)
        };
        let train_nll = model.neg_log_likelihood(&state.theta, train) / train.len() as f64;
        epochs.push(MlpEpoch { epoch, step_size, test_accuracy, train_nll });
    }
    Ok(MlpCell { kind, h, diffusion, epochs, diverged_at })
}

/// Fraction of rows whose largest score is the true class. Scores may be
/// unnormalized sums of probabilities.
fn accuracy(scores: &[f64], classes: usize, test: &DenseDataset) -> f64 {
    let correct = scores
        .chunks(classes)
        .zip(&test.labels)
        .filter(|(row, &y)| {
            let best = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i);
            best == Some(y)
        })
        .count();
    correct as f64 / test.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_halves_once() {
        let sizes: Vec<f64> = (1..=6).map(|e| scheduled_step_size(0.1, e, Some(4))).collect();
        assert_eq!(sizes, [0.1, 0.1, 0.1, 0.05, 0.05, 0.05]);
        assert!((1..=6).all(|e| scheduled_step_size(0.1, e, None) == 0.1));
    }
}
