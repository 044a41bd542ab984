//! Target distributions with analytic gradients.

mod double_well;
mod gaussian;
mod logistic;
mod mlp;

pub use double_well::{double_well_grad, double_well_potential, DoubleWellModel};
pub use gaussian::GaussianModel;
pub use logistic::{log_sigmoid, sigmoid, LogisticRegressionModel};
pub use mlp::{Activation, MlpModel};
