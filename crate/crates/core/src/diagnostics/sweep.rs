//! Stepsize sweeps measuring how sampler bias and MSE scale with `h`.
//!
//! For a `K`th-order integrator run long enough that finite-time terms have
//! died out, `|E phi_hat - phi_bar|` behaves like `C h^K` and the MSE like
//! `C' h^{2K}`. The sweep measures both on a target whose posterior average is
//! known exactly and fits log-log slopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{advance, IntegratorConfig, IntegratorKind};
use crate::model::GradientModel;
use crate::par::map_ordered;
use crate::rng::RngStream;
use crate::state::SamplerState;

/// Chain length expressed either in steps or in simulated time `steps * h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainBudget {
    Steps(u64),
    Time(f64),
}

impl ChainBudget {
    pub fn steps(&self, h: f64) -> u64 {
        match *self {
            ChainBudget::Steps(n) => n,
            ChainBudget::Time(t) => (t / h).ceil() as u64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub kinds: Vec<IntegratorKind>,
    pub h_grid: Vec<f64>,
    pub diffusion: f64,
    /// Length of the averaging window after burn-in.
    pub budget: ChainBudget,
    pub burn_in: ChainBudget,
    pub replicates: usize,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::invalid("sweep needs at least one integrator kind"));
        }
        if self.h_grid.len() < 4 {
            return Err(Error::invalid("stepsize grid needs at least 4 values"));
        }
        if self.h_grid.windows(2).any(|w| !(w[0] < w[1])) || !(self.h_grid[0] > 0.0) {
            return Err(Error::invalid("stepsize grid must be positive and strictly increasing"));
        }
        if self.h_grid[self.h_grid.len() - 1] < 10.0 * self.h_grid[0] {
            return Err(Error::invalid("stepsize grid must span at least one decade"));
        }
        if self.replicates < 2 {
            return Err(Error::invalid("sweep needs at least 2 replicates for a standard error"));
        }
        if !(self.diffusion >= 0.0) {
            return Err(Error::invalid("diffusion constant must be nonnegative"));
        }
        Ok(())
    }
}

/// One replicate chain of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub kind: IntegratorKind,
    pub h: f64,
    pub replicate: usize,
    /// Time average of the test function; `None` when the chain diverged.
    pub estimate: Option<f64>,
    pub diverged_at: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; NaN with fewer than three points.
    pub stderr: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: IntegratorKind,
    pub h_values: Vec<f64>,
    /// `|mean_r phi_hat_r - phi_bar|`.
    pub bias: Vec<f64>,
    /// `mean_r (phi_hat_r - phi_bar)^2`.
    pub mse: Vec<f64>,
    /// Standard error of the replicate mean.
    pub stderr: Vec<f64>,
    pub diverged: Vec<bool>,
    /// Whether each `h` entered the slope fit.
    pub fitted: Vec<bool>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub mse_slope: f64,
    pub mse_slope_stderr: f64,
}

/// Least-squares fit of `ln y = a + s ln h`. Needs two or more positive points.
pub fn fit_log_slope(h: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(SlopeFit { slope, intercept, stderr, points: n })
}

fn run_cell(
    model: &dyn GradientModel,
    plan: &SweepPlan,
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
    rng: &RngStream,
    (k, hi, r): (usize, usize, usize),
) -> SweepCell {
    let kind = plan.kinds[k];
    let h = plan.h_grid[hi];
    let mut stream = rng.substream(&[kind.label(), hi as u64, r as u64]);
    let n = model.dim();
    let theta = (0..n).map(|_| stream.normal()).collect();
    let momentum = (0..n).map(|_| stream.normal()).collect();
    let mut state = SamplerState { theta, momentum, thermostat: vec![plan.diffusion; n] };
    let config = IntegratorConfig { h, diffusion: plan.diffusion, kind };
    let burn = plan.burn_in.steps(h);
    let window = plan.budget.steps(h).max(1);
    let mut acc = 0.0;
    let outcome = advance(model, &mut state, &config, None, 1, burn + window, &mut stream, |step, s| {
        if step > burn {
            acc += phi(&s.theta);
        }
    });
    match outcome {
        Ok(()) => SweepCell { kind, h, replicate: r, estimate: Some(acc / window as f64), diverged_at: None },
        Err(e) => {
            let diverged_at = match e {
                Error::Divergence { step, .. } => step,
                _ => None,
            };
            SweepCell { kind, h, replicate: r, estimate: None, diverged_at: diverged_at.or(Some(0)) }
        }
    }
}

/// Runs `replicates` chains per `(kind, h)` from standard-normal starting
/// points (thermostats at `D`) and summarizes bias/MSE against `truth`.
///
/// An `h` enters the fit only if no replicate diverged and the replicate
/// standard error is at most half the measured bias.
pub fn order_sweep(
    model: &dyn GradientModel,
    plan: &SweepPlan,
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
    truth: f64,
    rng: &RngStream,
) -> Result<(Vec<SweepResult>, Vec<SweepCell>)> {
    plan.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..plan.kinds.len())
        .flat_map(|k| (0..plan.h_grid.len()).flat_map(move |h| (0..plan.replicates).map(move |r| (k, h, r))))
        .collect();
    let cells = map_ordered(&jobs, |&job| run_cell(model, plan, phi, rng, job));

    let per_kind = plan.h_grid.len() * plan.replicates;
    let results = plan
        .kinds
        .iter()
        .zip(cells.chunks(per_kind))
        .map(|(&kind, kind_cells)| summarize(kind, &plan.h_grid, kind_cells, truth))
        .collect();
    Ok((results, cells))
}

fn summarize(kind: IntegratorKind, h_grid: &[f64], cells: &[SweepCell], truth: f64) -> SweepResult {
    let reps = cells.len() / h_grid.len();
    let (mut bias, mut mse, mut stderr, mut diverged, mut fitted) = (vec![], vec![], vec![], vec![], vec![]);
    for group in cells.chunks(reps) {
        let ests: Vec<f64> = group.iter().filter_map(|c| c.estimate).collect();
        let any_diverged = ests.len() < group.len();
        let m = ests.len() as f64;
        let (b, e, s) = if ests.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = ests.iter().sum::<f64>() / m;
            let mse = ests.iter().map(|x| (x - truth).powi(2)).sum::<f64>() / m;
            let se = if ests.len() > 1 {
                (ests.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
            } else {
                f64::NAN
            };
            ((mean - truth).abs(), mse, se)
        };
        fitted.push(!any_diverged && b > 0.0 && s <= 0.5 * b);
        bias.push(b);
        mse.push(e);
        stderr.push(s);
        diverged.push(any_diverged);
    }
    let pick = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        h_grid.iter().zip(v).zip(&fitted).filter(|(_, &f)| f).map(|((&h, &y), _)| (h, y)).unzip()
    };
    let (hb, yb) = pick(&bias);
    let (hm, ym) = pick(&mse);
    let bias_fit = fit_log_slope(&hb, &yb);
    let mse_fit = fit_log_slope(&hm, &ym);
    SweepResult {
        kind,
        h_values: h_grid.to_vec(),
        bias,
        mse,
        stderr,
        diverged,
        fitted,
        fitted_slope: bias_fit.map_or(f64::NAN, |f| f.slope),
        slope_stderr: bias_fit.map_or(f64::NAN, |f| f.stderr),
        mse_slope: mse_fit.map_or(f64::NAN, |f| f.slope),
        mse_slope_stderr: mse_fit.map_or(f64::NAN, |f| f.stderr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_laws() {
        let h = [0.01, 0.02, 0.05, 0.1, 0.3];
        for power in [1.0, 2.0, 3.5] {
            let y: Vec<f64> = h.iter().map(|x: &f64| 0.7 * x.powf(power)).collect();
            let fit = fit_log_slope(&h, &y).unwrap();
            assert!((fit.slope - power).abs() < 1e-6, "{fit:?}");
            assert!((fit.intercept - 0.7f64.ln()).abs() < 1e-6);
            assert!(fit.stderr < 1e-6);
        }
    }

    #[test]
    fn too_few_points() {
        assert!(fit_log_slope(&[0.1], &[1.0]).is_none());
        assert!(fit_log_slope(&[0.1, 0.2], &[1.0, 0.0]).is_none());
        assert!(fit_log_slope(&[0.1, 0.2], &[1.0, 2.0]).unwrap().stderr.is_nan());
    }

    #[test]
    fn plan_validation() {
        let mut plan = SweepPlan {
            kinds: vec![IntegratorKind::MsgnhtSplit],
            h_grid: vec![0.01, 0.02, 0.05, 0.1],
            diffusion: 1.0,
            budget: ChainBudget::Steps(10),
            burn_in: ChainBudget::Steps(0),
            replicates: 2,
        };
        assert!(plan.validate().is_ok());
        plan.h_grid = vec![0.01, 0.02, 0.05, 0.09];
        assert!(plan.validate().is_err());
        plan.h_grid = vec![0.01, 0.05, 0.02, 0.1];
        assert!(plan.validate().is_err());
        plan.h_grid = vec![0.01, 0.02, 0.1];
        assert!(plan.validate().is_err());
    }

    #[test]
    fn summary_excludes_noisy_and_diverged_points() {
        let cell = |h: f64, r: usize, e: Option<f64>| SweepCell {
            kind: IntegratorKind::MsgnhtEuler,
            h,
            replicate: r,
            estimate: e,
            diverged_at: if e.is_none() { Some(3) } else { None },
        };
        let h = [0.1, 0.2, 0.4];
        let cells = vec![
            // noisy: bias 0.01, stderr 0.1
            cell(0.1, 0, Some(1.11)),
            cell(0.1, 1, Some(0.91)),
            cell(0.2, 0, Some(1.2)),
            cell(0.2, 1, Some(1.2)),
            cell(0.4, 0, Some(1.4)),
            cell(0.4, 1, None),
        ];
        let res = summarize(IntegratorKind::MsgnhtEuler, &h, &cells, 1.0);
        assert_eq!(res.fitted, vec![false, true, false]);
        assert_eq!(res.diverged, vec![false, false, true]);
        assert!(res.fitted_slope.is_nan());
        assert!((res.bias[1] - 0.2).abs() < 1e-12);
    }
}
