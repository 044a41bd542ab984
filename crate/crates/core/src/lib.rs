//! Stochastic-gradient MCMC with multivariate Nosé-Hoover thermostats.
//!
//! The crate provides first-order (Euler) and second-order symmetric
//! splitting (A-B-O-B-A) integrators for the thermostat dynamics, SGHMC and
//! SGLD baselines, a small zoo of targets with analytic gradients, and the
//! diagnostics used to compare the integrators: density/KL estimates and
//! bias-versus-stepsize sweeps.
//!
//! With the `harness` feature (default) it also ships experiment drivers,
//! JSON configuration, CSV output and the `sgmcmc` command-line tool.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod integrators;
pub mod minibatch;
pub mod model;
pub mod models;
mod par;
pub mod rng;
pub mod state;

#[cfg(feature = "harness")]
pub mod harness;

pub use error::{Error, Result};
pub use integrators::{
    msgnht_euler_step, msgnht_split_step, run_chain, sghmc_euler_step, sghmc_split_step, sgld_step, ChainLength,
    Friction, IntegratorConfig, IntegratorKind, Trace,
};
pub use minibatch::{make_minibatch_schedule, BatchMode, MinibatchSchedule};
pub use model::{stochastic_neg_log_posterior_grad, Batch, GradientModel};
pub use rng::{NoiseSource, RngStream};
pub use state::SamplerState;
