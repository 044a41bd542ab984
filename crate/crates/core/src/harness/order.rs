use serde_json::{json, Value};

use super::config::{ExperimentConfig, ModelParams};
use super::csv::CsvTable;
use super::finite_or_null;
use crate::diagnostics::{order_sweep, SweepCell, SweepResult};
use crate::error::{Error, Result};
use crate::models::GaussianModel;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct OrderReport {
    pub results: Vec<SweepResult>,
    pub cells: Vec<SweepCell>,
}

impl OrderReport {
    pub fn result(&self, kind: crate::integrators::IntegratorKind) -> Option<&SweepResult> {
        self.results.iter().find(|r| r.kind == kind)
    }

    pub fn tables(&self) -> Vec<CsvTable> {
        let mut order = CsvTable::new("order.csv", &["kind", "h", "bias", "mse", "stderr", "diverged", "fitted"]);
        let mut slopes = CsvTable::new(
            "order_summary.csv",
            &["kind", "bias_slope", "bias_slope_stderr", "mse_slope", "mse_slope_stderr", "fitted_points"],
        );
        for r in &self.results {
            for i in 0..r.h_values.len() {
                order.push(&[
                    &r.kind.as_str(),
                    &r.h_values[i],
                    &r.bias[i],
                    &r.mse[i],
                    &r.stderr[i],
                    &r.diverged[i],
                    &r.fitted[i],
                ]);
            }
            let fitted = r.fitted.iter().filter(|f| **f).count();
            slopes.push(&[
                &r.kind.as_str(),
                &r.fitted_slope,
                &r.slope_stderr,
                &r.mse_slope,
                &r.mse_slope_stderr,
                &fitted,
            ]);
        }
        vec![order, slopes]
    }

    pub fn summary(&self) -> Value {
        let kinds: Vec<Value> = self
            .results
            .iter()
            .map(|r| {
                json!({
                    "kind": r.kind.as_str(),
                    "bias_slope": finite_or_null(r.fitted_slope),
                    "bias_slope_stderr": finite_or_null(r.slope_stderr),
                    "mse_slope": finite_or_null(r.mse_slope),
                    "fitted_points": r.fitted.iter().filter(|f| **f).count(),
                })
            })
            .collect();
        json!({ "experiment": "order-check", "slopes": kinds })
    }
}

/// Bias of `mean(theta^2)` against its exact value 1 on a standard Gaussian,
/// swept over the configured stepsizes.
pub fn run_order_check(config: &ExperimentConfig) -> Result<OrderReport> {
    config.validate()?;
    let ModelParams::Order(params) = &config.model else {
        return Err(Error::Config(format!("{} config passed to the order check", config.experiment)));
    };
    let plan = config.sweep_plan()?;
    let model = GaussianModel::new(params.dim);
    let phi = |theta: &[f64]| theta.iter().map(|t| t * t).sum::<f64>() / theta.len() as f64;
    let (results, cells) = order_sweep(&model, &plan, &phi, 1.0, &RngStream::new(config.seed, 0))?;
    Ok(OrderReport { results, cells })
}
