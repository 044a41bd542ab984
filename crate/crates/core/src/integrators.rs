//! One-step transition kernels and the chain runner.
//!
//! All kernels share two building blocks: a first-order Euler update and the
//! palindromic A-B-O-B-A splitting update. They differ only in how the
//! momentum friction is obtained ([`Friction`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minibatch::MinibatchSchedule;
use crate::model::{Batch, GradientModel};
use crate::rng::NoiseSource;
use crate::state::SamplerState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorKind {
    MsgnhtEuler,
    MsgnhtSplit,
    SghmcEuler,
    SghmcSplit,
    Sgld,
}

impl IntegratorKind {
    pub const ALL: [IntegratorKind; 5] = [
        IntegratorKind::MsgnhtEuler,
        IntegratorKind::MsgnhtSplit,
        IntegratorKind::SghmcEuler,
        IntegratorKind::SghmcSplit,
        IntegratorKind::Sgld,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IntegratorKind::MsgnhtEuler => "msgnht-euler",
            IntegratorKind::MsgnhtSplit => "msgnht-split",
            IntegratorKind::SghmcEuler => "sghmc-euler",
            IntegratorKind::SghmcSplit => "sghmc-split",
            IntegratorKind::Sgld => "sgld",
        }
    }

    /// Stable numeric label, used to derive per-kind random streams.
    pub fn label(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntegratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IntegratorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown integrator kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Stepsize `h > 0`.
    pub h: f64,
    /// Diffusion constant `D >= 0` of the injected momentum noise.
    pub diffusion: f64,
    pub kind: IntegratorKind,
}

impl IntegratorConfig {
    pub fn new(kind: IntegratorKind, h: f64, diffusion: f64) -> Result<Self> {
        let config = Self { h, diffusion, kind };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid(format!("stepsize must be positive and finite, got {}", self.h)));
        }
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return Err(Error::invalid(format!(
                "diffusion constant must be nonnegative and finite, got {}",
                self.diffusion
            )));
        }
        Ok(())
    }

    pub fn with_h(self, h: f64) -> Self {
        Self { h, ..self }
    }
}

/// Source of the momentum friction coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Friction {
    /// Per-dimension thermostat `xi`, evolved by its kinetic-energy feedback.
    Adaptive,
    /// Use the state's current `xi` without updating it.
    Frozen,
    /// Fixed scalar friction; the thermostat is ignored.
    Constant(f64),
}

impl Friction {
    #[inline]
    fn coefficient(self, xi: f64) -> f64 {
        match self {
            Friction::Adaptive | Friction::Frozen => xi,
            Friction::Constant(c) => c,
        }
    }

    #[inline]
    fn adapts(self) -> bool {
        matches!(self, Friction::Adaptive)
    }
}

/// Reusable scratch buffers for a chain of one dimension.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    increment: Vec<f64>,
    decay: Vec<f64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Self { increment: vec![0.0; dim], decay: vec![0.0; dim] }
    }

    fn fit(&mut self, dim: usize) {
        self.increment.resize(dim, 0.0);
        self.decay.resize(dim, 0.0);
    }
}

fn check_dims(state: &SamplerState, model: &dyn GradientModel) -> Result<()> {
    if state.dim() != model.dim() {
        return Err(Error::invalid(format!(
            "state dimension {} does not match model dimension {}",
            state.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// First-order update; the gradient is taken at the advanced `theta`, the
/// friction uses the old `(xi, p)` and the thermostat feedback uses the new `p`.
#[allow(clippy::too_many_arguments)]
pub fn euler_update<N: NoiseSource>(
    state: &mut SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    h: f64,
    diffusion: f64,
    friction: Friction,
    noise: &mut N,
    ws: &mut Workspace,
) -> Result<()> {
    check_dims(state, model)?;
    ws.fit(state.dim());
    let SamplerState { theta, momentum, thermostat } = state;

    for (t, p) in theta.iter_mut().zip(momentum.iter()) {
        *t += p * h;
    }
    model.gradient_increment(theta, batch, h, noise, &mut ws.increment);

    // zeta ~ N(0, h), scaled by sqrt(2D)
    let scale = (2.0 * diffusion * h).sqrt();
    for i in 0..momentum.len() {
        let p = momentum[i];
        let mut next = p - ws.increment[i] - friction.coefficient(thermostat[i]) * p * h;
        if diffusion > 0.0 {
            next += scale * noise.standard_normal();
        }
        momentum[i] = next;
        if friction.adapts() {
            thermostat[i] += (next * next - 1.0) * h;
        }
    }
    state.check_finite()
}

/// Symmetric A-B-O-B-A splitting update; the single gradient is taken at the
/// half-advanced `theta`, and both B phases use the half-updated `xi`.
#[allow(clippy::too_many_arguments)]
pub fn split_update<N: NoiseSource>(
    state: &mut SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    h: f64,
    diffusion: f64,
    friction: Friction,
    noise: &mut N,
    ws: &mut Workspace,
) -> Result<()> {
    check_dims(state, model)?;
    ws.fit(state.dim());
    let half = 0.5 * h;
    let adapts = friction.adapts();
    let SamplerState { theta, momentum, thermostat } = state;

    // A
    for i in 0..theta.len() {
        let p = momentum[i];
        theta[i] += p * half;
        if adapts {
            thermostat[i] += (p * p - 1.0) * half;
        }
    }
    // B
    for i in 0..momentum.len() {
        let decay = (-friction.coefficient(thermostat[i]) * half).exp();
        ws.decay[i] = decay;
        momentum[i] *= decay;
    }
    // O
    model.gradient_increment(theta, batch, h, noise, &mut ws.increment);
    let scale = (2.0 * diffusion * h).sqrt();
    for i in 0..momentum.len() {
        momentum[i] -= ws.increment[i];
        if diffusion > 0.0 {
            momentum[i] += scale * noise.standard_normal();
        }
    }
    // B, A
    for i in 0..theta.len() {
        let p = momentum[i] * ws.decay[i];
        momentum[i] = p;
        theta[i] += p * half;
        if adapts {
            thermostat[i] += (p * p - 1.0) * half;
        }
    }
    state.check_finite()
}

/// Langevin update `theta' = theta - grad U~ h + sqrt(2h) eta`; momentum and thermostat untouched.
pub fn langevin_update<N: NoiseSource>(
    state: &mut SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    h: f64,
    noise: &mut N,
    ws: &mut Workspace,
) -> Result<()> {
    check_dims(state, model)?;
    ws.fit(state.dim());
    model.gradient_increment(&state.theta, batch, h, noise, &mut ws.increment);
    let scale = (2.0 * h).sqrt();
    for (t, g) in state.theta.iter_mut().zip(&ws.increment) {
        *t += -g + scale * noise.standard_normal();
    }
    state.check_finite()
}

/// Advances `state` by one step of the configured kernel.
pub fn step_in_place<N: NoiseSource>(
    state: &mut SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    config: &IntegratorConfig,
    noise: &mut N,
    ws: &mut Workspace,
) -> Result<()> {
    let IntegratorConfig { h, diffusion, kind } = *config;
    match kind {
        IntegratorKind::MsgnhtEuler => euler_update(state, model, batch, h, diffusion, Friction::Adaptive, noise, ws),
        IntegratorKind::MsgnhtSplit => split_update(state, model, batch, h, diffusion, Friction::Adaptive, noise, ws),
        IntegratorKind::SghmcEuler => {
            euler_update(state, model, batch, h, diffusion, Friction::Constant(diffusion), noise, ws)
        }
        IntegratorKind::SghmcSplit => {
            split_update(state, model, batch, h, diffusion, Friction::Constant(diffusion), noise, ws)
        }
        IntegratorKind::Sgld => langevin_update(state, model, batch, h, noise, ws),
    }
}

fn step_as<N: NoiseSource>(
    expected: IntegratorKind,
    state: &SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    config: &IntegratorConfig,
    noise: &mut N,
) -> Result<SamplerState> {
    if config.kind != expected {
        return Err(Error::invalid(format!("{expected} step called with a {} config", config.kind)));
    }
    config.validate()?;
    state.validate()?;
    let mut next = state.clone();
    step_in_place(&mut next, model, batch, config, noise, &mut Workspace::new(state.dim()))?;
    Ok(next)
}

pub fn msgnht_euler_step<N: NoiseSource>(
    state: &SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    config: &IntegratorConfig,
    noise: &mut N,
) -> Result<SamplerState> {
    step_as(IntegratorKind::MsgnhtEuler, state, model, batch, config, noise)
}

pub fn msgnht_split_step<N: NoiseSource>(
    state: &SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    config: &IntegratorConfig,
    noise: &mut N,
) -> Result<SamplerState> {
    step_as(IntegratorKind::MsgnhtSplit, state, model, batch, config, noise)
}

/// SGHMC with friction equal to `D`, first-order update.
pub fn sghmc_euler_step<N: NoiseSource>(
    state: &SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    config: &IntegratorConfig,
    noise: &mut N,
) -> Result<SamplerState> {
    step_as(IntegratorKind::SghmcEuler, state, model, batch, config, noise)
}

/// SGHMC with friction equal to `D`, splitting update.
pub fn sghmc_split_step<N: NoiseSource>(
    state: &SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    config: &IntegratorConfig,
    noise: &mut N,
) -> Result<SamplerState> {
    step_as(IntegratorKind::SghmcSplit, state, model, batch, config, noise)
}

pub fn sgld_step<N: NoiseSource>(
    state: &SamplerState,
    model: &dyn GradientModel,
    batch: Batch<'_>,
    config: &IntegratorConfig,
    noise: &mut N,
) -> Result<SamplerState> {
    step_as(IntegratorKind::Sgld, state, model, batch, config, noise)
}

/// Run length, burn-in and thinning of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLength {
    pub total_steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
}

impl ChainLength {
    pub fn new(total_steps: u64, burn_in: u64, thinning: u64) -> Result<Self> {
        let len = Self { total_steps, burn_in, thinning };
        len.validate()?;
        Ok(len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in > self.total_steps {
            return Err(Error::invalid(format!("burn-in {} exceeds total steps {}", self.burn_in, self.total_steps)));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning must be at least 1"));
        }
        Ok(())
    }

    /// `floor((total_steps - burn_in) / thinning)`.
    pub fn recorded(&self) -> u64 {
        (self.total_steps - self.burn_in) / self.thinning
    }

    /// Whether the state after 1-based step `step` is kept.
    pub fn records(&self, step: u64) -> bool {
        step > self.burn_in && (step - self.burn_in).is_multiple_of(self.thinning)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepScalars {
    pub step: u64,
    /// `U(theta)` when the model can evaluate it.
    pub neg_log_posterior: Option<f64>,
    pub thermostat_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub states: Vec<SamplerState>,
    pub scalars: Vec<StepScalars>,
    pub burn_in: u64,
    pub thinning: u64,
    pub total_steps: u64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Trace holding the given states, as if every step had been recorded.
    pub fn from_states(states: Vec<SamplerState>) -> Self {
        let n = states.len() as u64;
        let scalars = states
            .iter()
            .enumerate()
            .map(|(i, s)| StepScalars {
                step: i as u64 + 1,
                neg_log_posterior: None,
                thermostat_mean: s.thermostat_mean(),
            })
            .collect();
        Self { states, scalars, burn_in: 0, thinning: 1, total_steps: n }
    }
}

/// Drives `state` for `steps` steps, calling `visit(step, state)` after each one.
///
/// `first_step` is the 1-based index reported for the first step; divergence
/// errors carry the index of the step that produced the non-finite value.
#[allow(clippy::too_many_arguments)]
pub fn advance<N, F>(
    model: &dyn GradientModel,
    state: &mut SamplerState,
    config: &IntegratorConfig,
    mut schedule: Option<&mut MinibatchSchedule>,
    first_step: u64,
    steps: u64,
    noise: &mut N,
    mut visit: F,
) -> Result<()>
where
    N: NoiseSource,
    F: FnMut(u64, &SamplerState),
{
    config.validate()?;
    check_dims(state, model)?;
    let mut ws = Workspace::new(state.dim());
    for step in first_step..first_step + steps {
        let batch = match schedule.as_deref_mut() {
            Some(s) => Batch::Indices(s.next_batch()),
            None => Batch::Full,
        };
        step_in_place(state, model, batch, config, noise, &mut ws).map_err(|e| e.at_step(step))?;
        visit(step, state);
    }
    Ok(())
}

/// Runs a chain from `init` and records the thinned post-burn-in states.
pub fn run_chain<N: NoiseSource>(
    model: &dyn GradientModel,
    init: &SamplerState,
    config: &IntegratorConfig,
    schedule: Option<&mut MinibatchSchedule>,
    length: ChainLength,
    noise: &mut N,
) -> Result<Trace> {
    length.validate()?;
    init.validate()?;
    let capacity = length.recorded() as usize;
    let mut states = Vec::with_capacity(capacity);
    let mut scalars = Vec::with_capacity(capacity);
    let mut state = init.clone();
    advance(model, &mut state, config, schedule, 1, length.total_steps, noise, |step, s| {
        if length.records(step) {
            scalars.push(StepScalars {
                step,
                neg_log_posterior: model.neg_log_posterior(&s.theta),
                thermostat_mean: s.thermostat_mean(),
            });
            states.push(s.clone());
        }
    })?;
    Ok(Trace { states, scalars, burn_in: length.burn_in, thinning: length.thinning, total_steps: length.total_steps })
}
