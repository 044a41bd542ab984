use serde_json::{json, Value};

use super::config::{DoubleWellParams, ExperimentConfig, ModelParams};
use super::csv::CsvTable;
use super::{cell_stream, cells, finite_or_null};
use crate::diagnostics::{double_well_true_density, kl_divergence, DensityEstimate, Histogram};
use crate::error::{Error, Result};
use crate::integrators::{euler_update, langevin_update, split_update, Friction, IntegratorKind, Workspace};
use crate::model::Batch;
use crate::models::DoubleWellModel;
use crate::par::map_ordered;
use crate::rng::RngStream;
use crate::state::SamplerState;

/// Pooled result of the replicate runs for one (kind, h, D).
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWellCell {
    pub kind: IntegratorKind,
    pub h: f64,
    pub diffusion: f64,
    pub runs: usize,
    /// `KL(true || estimate)` over the runs that finished; NaN when none
    /// did, infinite when no sample landed on the grid.
    pub kl: f64,
    pub overflow_fraction: f64,
    pub diverged_runs: usize,
    /// Earliest divergence step among the runs.
    pub first_diverged_at: Option<u64>,
    /// Thermostat averaged over the second half of each finished run, then
    /// across runs.
    pub xi_tail_mean: f64,
    /// Per run, `(step, mean xi)` every `thermostat_every` steps. Empty for
    /// kinds without an adaptive thermostat.
    pub thermostat: Vec<Vec<(u64, f64)>>,
}

impl DoubleWellCell {
    pub fn diverged(&self) -> bool {
        self.diverged_runs > 0
    }
}

#[derive(Debug, Clone)]
pub struct DoubleWellReport {
    pub cells: Vec<DoubleWellCell>,
    pub true_density: DensityEstimate,
}

impl DoubleWellReport {
    pub fn cell(&self, kind: IntegratorKind, h: f64) -> Option<&DoubleWellCell> {
        self.cells.iter().find(|c| c.kind == kind && c.h == h)
    }

    pub fn tables(&self) -> Vec<CsvTable> {
        let mut kl = CsvTable::new(
            "kl_vs_h.csv",
            &["kind", "h", "D", "kl", "overflow_fraction", "runs", "diverged_runs", "diverged", "first_diverged_at"],
        );
        let mut xi = CsvTable::new("thermostat.csv", &["kind", "h", "D", "replicate", "step", "xi_mean"]);
        for c in &self.cells {
            kl.push(&[
                &c.kind.as_str(),
                &c.h,
                &c.diffusion,
                &c.kl,
                &c.overflow_fraction,
                &c.runs,
                &c.diverged_runs,
                &c.diverged(),
                &c.first_diverged_at,
            ]);
            for (rep, trace) in c.thermostat.iter().enumerate() {
                for (step, mean) in trace {
                    xi.push(&[&c.kind.as_str(), &c.h, &c.diffusion, &rep, step, mean]);
                }
            }
        }
        vec![kl, xi]
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
                    "kl": finite_or_null(c.kl),
                    "xi_tail_mean": finite_or_null(c.xi_tail_mean),
                    "diverged_runs": c.diverged_runs,
                })
            })
            .collect();
        json!({ "experiment": "doublewell", "cells": cells })
    }
}

struct Run {
    hist: Histogram,
    thermostat: Vec<(u64, f64)>,
    xi_tail_mean: f64,
    diverged_at: Option<u64>,
}

/// Runs every configured kind and stepsize on the double-well with simulated
/// gradient noise. Each cell pools the post-burn-in samples of its
/// replicate runs into one histogram and compares it with quadrature.
///
/// Diverged runs are counted and left out of the pool; the sweep moves on.
pub fn run_doublewell_experiment(config: &ExperimentConfig) -> Result<DoubleWellReport> {
    config.validate()?;
    let ModelParams::DoubleWell(params) = &config.model else {
        return Err(Error::Config(format!("{} config passed to the double-well driver", config.experiment)));
    };
    let true_density = double_well_true_density(params.grid_lo, params.grid_hi, params.bins)?;
    let model = DoubleWellModel::new(params.noise_scale);
    let grid = cells(config);
    let jobs: Vec<_> = grid.iter().flat_map(|&cell| (0..params.replicates).map(move |rep| (cell, rep))).collect();
    let runs = map_ordered(&jobs, |&((kind, h_idx, d_idx), rep)| {
        let noise = cell_stream(config.seed, kind, h_idx, d_idx).substream(&[rep as u64]);
        run_once(config, params, &model, kind, config.h[h_idx], config.diffusion[d_idx], noise)
    });
    let runs: Vec<Run> = runs.into_iter().collect::<Result<_>>()?;
    let cells = grid
        .iter()
        .zip(runs.chunks(params.replicates))
        .map(|(&(kind, h_idx, d_idx), runs)| {
            pool(params, &true_density, kind, config.h[h_idx], config.diffusion[d_idx], runs)
        })
        .collect::<Result<_>>()?;
    Ok(DoubleWellReport { cells, true_density })
}

fn pool(
    params: &DoubleWellParams,
    truth: &DensityEstimate,
    kind: IntegratorKind,
    h: f64,
    diffusion: f64,
    runs: &[Run],
) -> Result<DoubleWellCell> {
    let mut hist = Histogram::new(params.grid_lo, params.grid_hi, params.bins)?;
    let finished: Vec<&Run> = runs.iter().filter(|r| r.diverged_at.is_none()).collect();
    for r in &finished {
        hist.merge(&r.hist)?;
    }
    let recorded = hist.in_range() + hist.overflow();
    let kl = match hist.finish() {
        _ if finished.is_empty() => f64::NAN,
        Ok(est) => kl_divergence(truth, &est)?,
        Err(Error::EmptyEstimate { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let overflow_fraction = if recorded == 0 { f64::NAN } else { hist.overflow() as f64 / recorded as f64 };
    let xi_tail_mean = if finished.is_empty() {
        f64::NAN
    } else {
        finished.iter().map(|r| r.xi_tail_mean).sum::<f64>() / finished.len() as f64
    };
    Ok(DoubleWellCell {
        kind,
        h,
        diffusion,
        runs: runs.len(),
        kl,
        overflow_fraction,
        diverged_runs: runs.len() - finished.len(),
        first_diverged_at: runs.iter().filter_map(|r| r.diverged_at).min(),
        xi_tail_mean,
        thermostat: runs.iter().map(|r| r.thermostat.clone()).filter(|t| !t.is_empty()).collect(),
    })
}

fn run_once(
    config: &ExperimentConfig,
    params: &DoubleWellParams,
    model: &DoubleWellModel,
    kind: IntegratorKind,
    h: f64,
    diffusion: f64,
    mut noise: RngStream,
) -> Result<Run> {
    let length = config.chain_length()?;
    // SGHMC friction has to absorb both the injected and the simulated noise.
    let friction = match kind {
        IntegratorKind::MsgnhtEuler | IntegratorKind::MsgnhtSplit => Friction::Adaptive,
        _ => Friction::Constant(params.sghmc_friction.unwrap_or(diffusion + params.noise_scale)),
    };
    let tracks_xi = friction == Friction::Adaptive;
    let mut state = SamplerState::scalar(params.theta0, params.momentum0, params.xi0);
    let mut ws = Workspace::new(1);
    let mut hist = Histogram::new(params.grid_lo, params.grid_hi, params.bins)?;
    let mut thermostat = Vec::new();
    let tail_start = length.total_steps / 2;
    let (mut tail_sum, mut tail_n) = (0.0, 0u64);

    for step in 1..=length.total_steps {
        let r = match kind {
            IntegratorKind::MsgnhtEuler | IntegratorKind::SghmcEuler => {
                euler_update(&mut state, model, Batch::Full, h, diffusion, friction, &mut noise, &mut ws)
            }
            IntegratorKind::MsgnhtSplit | IntegratorKind::SghmcSplit => {
                split_update(&mut state, model, Batch::Full, h, diffusion, friction, &mut noise, &mut ws)
            }
            IntegratorKind::Sgld => langevin_update(&mut state, model, Batch::Full, h, &mut noise, &mut ws),
        };
        match r {
            Ok(()) => {}
            Err(e) if e.is_divergence() => {
                return Ok(Run { hist, thermostat, xi_tail_mean: f64::NAN, diverged_at: Some(step) });
            }
            Err(e) => return Err(e),
        }
        if length.records(step) {
            hist.push(state.theta[0]);
        }
        let xi = state.thermostat[0];
        if tracks_xi && step % params.thermostat_every == 0 {
            thermostat.push((step, xi));
        }
        if step > tail_start {
            tail_sum += xi;
            tail_n += 1;
        }
    }
    let xi_tail_mean = if tail_n == 0 { f64::NAN } else { tail_sum / tail_n as f64 };
    Ok(Run { hist, thermostat, xi_tail_mean, diverged_at: None })
}
