//! Density estimates, KL divergence, posterior averages and stepsize sweeps.

mod density;
mod estimators;
mod fd;
mod sweep;

pub use density::{
    double_well_true_density, histogram_density, kl_divergence, quadrature_density, DensityEstimate, Histogram,
    KL_FLOOR,
};
pub use estimators::{posterior_average, tail_mean, thermostat_summary};
pub use fd::{finite_difference_gradient, relative_error};
pub use sweep::{fit_log_slope, order_sweep, ChainBudget, SlopeFit, SweepCell, SweepPlan, SweepResult};
