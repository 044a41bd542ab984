//! Experiment drivers behind the `sgmcmc` CLI.
//!
//! Each driver takes a resolved [`ExperimentConfig`] and returns a report
//! whose CSV tables are rendered in memory, so reruns can be compared byte
//! for byte before anything touches disk. Cells (kind x stepsize x
//! diffusion) run on the worker pool and are merged in config order.

mod config;
mod csv;
mod doublewell;
mod logreg;
mod mlp;
mod order;

use std::path::{Path, PathBuf};

use rand::RngCore;
use serde_json::{json, Value};

pub use self::config::{
    apply_override, DoubleWellParams, Experiment, ExperimentConfig, IdxPaths, LogRegParams, MlpParams, ModelParams,
    OrderParams,
};
pub use self::csv::{format_float, CsvTable, Field};
pub use self::doublewell::{run_doublewell_experiment, DoubleWellCell, DoubleWellReport};
pub use self::logreg::{run_logreg_experiment, CurvePoint, LogRegCell, LogRegReport};
pub use self::mlp::{run_mlp_experiment, scheduled_step_size, MlpCell, MlpEpoch, MlpReport};
pub use self::order::{run_order_check, OrderReport};
pub use crate::data::{load_idx, load_libsvm, synth_classification, SynthKind};

use crate::error::Result;
use crate::integrators::IntegratorKind;
use crate::rng::RngStream;

const CELL_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;

/// Noise stream for one (kind, stepsize, diffusion) cell.
fn cell_stream(seed: u64, kind: IntegratorKind, h_idx: usize, d_idx: usize) -> RngStream {
    RngStream::new(seed, CELL_STREAM).substream(&[kind.label(), h_idx as u64, d_idx as u64])
}

/// Seed for a synthetic data split (0 = train, 1 = test).
fn data_seed(seed: u64, split: u64) -> u64 {
    RngStream::new(seed, DATA_STREAM).substream(&[split]).next_u64()
}

/// Every (kind, h, D) combination in config order, with grid indices.
fn cells(config: &ExperimentConfig) -> Vec<(IntegratorKind, usize, usize)> {
    let mut out = Vec::new();
    for &kind in &config.kinds {
        for h_idx in 0..config.h.len() {
            for d_idx in 0..config.diffusion.len() {
                out.push((kind, h_idx, d_idx));
            }
        }
    }
    out
}

/// Output of any experiment.
#[derive(Debug, Clone)]
pub enum Report {
    DoubleWell(DoubleWellReport),
    Order(OrderReport),
    LogReg(LogRegReport),
    Mlp(MlpReport),
}

impl Report {
    pub fn tables(&self) -> Vec<CsvTable> {
        match self {
            Report::DoubleWell(r) => r.tables(),
            Report::Order(r) => r.tables(),
            Report::LogReg(r) => r.tables(),
            Report::Mlp(r) => r.tables(),
        }
    }

    /// Short JSON digest printed by the CLI.
    pub fn summary(&self) -> Value {
        match self {
            Report::DoubleWell(r) => r.summary(),
            Report::Order(r) => r.summary(),
            Report::LogReg(r) => r.summary(),
            Report::Mlp(r) => r.summary(),
        }
    }

    /// Writes every table into `dir`, returning the paths in table order.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        self.tables().iter().map(|t| t.write_to(dir)).collect()
    }
}

/// Runs whichever experiment `config` names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    Ok(match config.experiment {
        Experiment::Doublewell => Report::DoubleWell(run_doublewell_experiment(config)?),
        Experiment::OrderCheck => Report::Order(run_order_check(config)?),
        Experiment::Logreg => Report::LogReg(run_logreg_experiment(config)?),
        Experiment::Mlp => Report::Mlp(run_mlp_experiment(config)?),
    })
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}
