//! Browser demo: thermostat samplers on the four-mode double-well.
//!
//! The computations are plain functions so they can be tested natively; the
//! `#[wasm_bindgen]` wrappers only convert types for JavaScript.

use sgmcmc::diagnostics::{double_well_true_density, kl_divergence, Histogram};
use sgmcmc::integrators::{euler_update, split_update, Workspace};
use sgmcmc::models::DoubleWellModel;
use sgmcmc::{Batch, Error, Friction, IntegratorKind, RngStream, SamplerState};
use wasm_bindgen::prelude::*;

pub const GRID_LO: f64 = -6.0;
pub const GRID_HI: f64 = 5.0;
pub const BINS: usize = 200;
/// Thermostat points kept per run, whatever its length.
const TRACE_POINTS: u64 = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub centers: Vec<f64>,
    pub truth: Vec<f64>,
    /// Histogram density of the post-burn-in samples; zeros if none landed.
    pub estimate: Vec<f64>,
    pub trace_steps: Vec<f64>,
    pub trace_xi: Vec<f64>,
    /// Infinite after a divergence or when no sample landed on the grid.
    pub kl: f64,
    pub diverged_at: Option<u64>,
}

fn thermostat_kind(name: &str) -> Result<IntegratorKind, String> {
    match name.parse::<IntegratorKind>().map_err(|e| e.to_string())? {
        k @ (IntegratorKind::MsgnhtEuler | IntegratorKind::MsgnhtSplit) => Ok(k),
        k => Err(format!("{k} has no adaptive thermostat")),
    }
}

/// One chain from `theta = 0, p = 0, xi = 1`; the first tenth of the steps is
/// burn-in.
pub fn simulate(kind: &str, h: f64, steps: u64, noise_scale: f64, seed: u64) -> Result<Simulation, String> {
    let kind = thermostat_kind(kind)?;
    if !(h > 0.0 && h.is_finite()) || steps < 10 || !(noise_scale >= 0.0) {
        return Err(format!("need h > 0, steps >= 10 and noise >= 0 (got {h}, {steps}, {noise_scale})"));
    }
    let truth = double_well_true_density(GRID_LO, GRID_HI, BINS).map_err(|e| e.to_string())?;
    let model = DoubleWellModel::new(noise_scale);
    let mut noise = RngStream::new(seed, kind.label());
    let mut state = SamplerState::scalar(0.0, 0.0, 1.0);
    let mut ws = Workspace::new(1);
    let mut hist = Histogram::new(GRID_LO, GRID_HI, BINS).map_err(|e| e.to_string())?;
    let burn_in = steps / 10;
    let every = (steps / TRACE_POINTS).max(1);
    let (mut trace_steps, mut trace_xi) = (Vec::new(), Vec::new());
    let mut diverged_at = None;

    for step in 1..=steps {
        let r = match kind {
            IntegratorKind::MsgnhtEuler => {
                euler_update(&mut state, &model, Batch::Full, h, 0.0, Friction::Adaptive, &mut noise, &mut ws)
            }
            _ => split_update(&mut state, &model, Batch::Full, h, 0.0, Friction::Adaptive, &mut noise, &mut ws),
        };
        match r {
            Ok(()) => {}
            Err(e) if e.is_divergence() => {
                diverged_at = Some(step);
                break;
            }
            Err(e) => return Err(e.to_string()),
        }
        if step > burn_in {
            hist.push(state.theta[0]);
        }
        if step % every == 0 {
            trace_steps.push(step as f64);
            trace_xi.push(state.thermostat[0]);
        }
    }

    let (estimate, kl) = match hist.finish() {
        Ok(est) => {
            let kl = if diverged_at.is_some() {
                f64::INFINITY
            } else {
                kl_divergence(&truth, &est).map_err(|e| e.to_string())?
            };
            (est.densities(), kl)
        }
        Err(Error::EmptyEstimate { .. }) => (vec![0.0; BINS], f64::INFINITY),
        Err(e) => return Err(e.to_string()),
    };
    Ok(Simulation {
        centers: truth.centers(),
        truth: truth.densities(),
        estimate,
        trace_steps,
        trace_xi,
        kl,
        diverged_at,
    })
}

/// KL for every `h`, Euler first then splitting, each with its own chain.
pub fn kl_sweep(h_values: &[f64], steps: u64, noise_scale: f64, seed: u64) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(2 * h_values.len());
    for kind in ["msgnht-euler", "msgnht-split"] {
        for &h in h_values {
            out.push(simulate(kind, h, steps, noise_scale, seed)?.kl);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub struct DoubleWellRun(Simulation);

#[wasm_bindgen]
impl DoubleWellRun {
    pub fn centers(&self) -> Vec<f64> {
        self.0.centers.clone()
    }

    pub fn truth(&self) -> Vec<f64> {
        self.0.truth.clone()
    }

    pub fn estimate(&self) -> Vec<f64> {
        self.0.estimate.clone()
    }

    pub fn trace_steps(&self) -> Vec<f64> {
        self.0.trace_steps.clone()
    }

    pub fn trace_xi(&self) -> Vec<f64> {
        self.0.trace_xi.clone()
    }

    pub fn kl(&self) -> f64 {
        self.0.kl
    }

    /// Step of the divergence, or NaN.
    pub fn diverged_at(&self) -> f64 {
        self.0.diverged_at.map_or(f64::NAN, |s| s as f64)
    }
}

#[wasm_bindgen]
pub fn run_double_well(kind: &str, h: f64, steps: u32, noise_scale: f64, seed: u32) -> Result<DoubleWellRun, JsError> {
    simulate(kind, h, steps.into(), noise_scale, seed.into()).map(DoubleWellRun).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_kl_sweep(h_values: Vec<f64>, steps: u32, noise_scale: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    kl_sweep(&h_values, steps.into(), noise_scale, seed.into()).map_err(|e| JsError::new(&e))
}
