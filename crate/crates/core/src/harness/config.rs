//! Experiment configuration: one JSON document per run.
//!
//! A config is resolved in three layers. The experiment's defaults come
//! first, then the JSON file is merged over them, then `key=value`
//! overrides are applied. Nested keys use dots (`model.noise_scale=0.5`).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::data::SynthKind;
use crate::diagnostics::{ChainBudget, SweepPlan};
use crate::error::{Error, Result};
use crate::integrators::{ChainLength, IntegratorKind};
use crate::minibatch::BatchMode;
use crate::models::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Doublewell,
    OrderCheck,
    Logreg,
    Mlp,
}

impl Experiment {
    pub const ALL: [Experiment; 4] =
        [Experiment::Doublewell, Experiment::OrderCheck, Experiment::Logreg, Experiment::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Doublewell => "doublewell",
            Experiment::OrderCheck => "order-check",
            Experiment::Logreg => "logreg",
            Experiment::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Double-well run: simulated gradient noise, histogram KL against quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleWellParams {
    /// Variance scale `B` of the simulated gradient noise.
    pub noise_scale: f64,
    /// Constant friction for the SGHMC kinds. `None` uses `D + noise_scale`,
    /// matching the total injected plus simulated noise.
    pub sghmc_friction: Option<f64>,
    pub theta0: f64,
    pub momentum0: f64,
    pub xi0: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub bins: usize,
    /// Independent runs per (kind, h, D) cell, pooled into one histogram.
    pub replicates: usize,
    /// Spacing, in steps, of the rows in thermostat.csv.
    pub thermostat_every: u64,
}

impl Default for DoubleWellParams {
    fn default() -> Self {
        DoubleWellParams {
            noise_scale: 1.0,
            sghmc_friction: None,
            theta0: 0.0,
            momentum0: 0.0,
            xi0: 1.0,
            grid_lo: -6.0,
            grid_hi: 5.0,
            bins: 200,
            replicates: 16,
            thermostat_every: 1000,
        }
    }
}

/// Bias-versus-stepsize sweep on a standard Gaussian with `phi = mean(theta^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderParams {
    pub dim: usize,
    /// Simulated time averaged over, per chain.
    pub horizon: f64,
    /// Simulated time discarded before averaging.
    pub burn_in_time: f64,
    pub replicates: usize,
}

impl Default for OrderParams {
    fn default() -> Self {
        OrderParams { dim: 10, horizon: 6.0e5, burn_in_time: 50.0, replicates: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegParams {
    /// LIBSVM training file. Without one a synthetic task is generated.
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub expected_dim: Option<usize>,
    pub prior_variance: f64,
    pub synthetic: SynthKind,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            train: None,
            test: None,
            expected_dim: None,
            prior_variance: 1.0,
            synthetic: SynthKind::TwoGaussians,
            n_train: 2000,
            n_test: 1000,
        }
    }
}

/// IDX image and label files for one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxPaths {
    pub images: PathBuf,
    pub labels: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub prior_variance: f64,
    pub epochs: u64,
    /// First epoch (1-based) run at half the configured stepsize.
    pub halve_at_epoch: Option<u64>,
    pub train_idx: Option<IdxPaths>,
    pub test_idx: Option<IdxPaths>,
    pub synthetic: SynthKind,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            layer_sizes: vec![2, 16, 2],
            activation: Activation::Relu,
            prior_variance: 1.0,
            epochs: 40,
            halve_at_epoch: Some(20),
            train_idx: None,
            test_idx: None,
            synthetic: SynthKind::XorQuadrants,
            n_train: 1000,
            n_test: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelParams {
    DoubleWell(DoubleWellParams),
    Order(OrderParams),
    LogReg(LogRegParams),
    Mlp(MlpParams),
}

/// A fully resolved experiment.
///
/// `total_steps`, `burn_in` and `thinning` drive the double-well and
/// logistic runs. The MLP run counts `epochs` instead but still uses
/// `burn_in` and `thinning` for posterior averaging. The order check takes
/// its budgets from the model block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub kinds: Vec<IntegratorKind>,
    pub h: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub total_steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub batch_size: usize,
    pub batch_mode: BatchMode,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub model: ModelParams,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    kinds: Vec<IntegratorKind>,
    h: Vec<f64>,
    diffusion: Vec<f64>,
    total_steps: u64,
    burn_in: u64,
    thinning: u64,
    batch_size: usize,
    batch_mode: BatchMode,
    seed: u64,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    model: Value,
}

fn config_err(e: impl fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        use IntegratorKind::*;
        let base = ExperimentConfig {
            experiment,
            kinds: vec![MsgnhtEuler, MsgnhtSplit],
            h: vec![],
            diffusion: vec![1.0],
            total_steps: 0,
            burn_in: 0,
            thinning: 1,
            batch_size: 1,
            batch_mode: BatchMode::ShuffledEpochs,
            seed: 0,
            out_dir: None,
            model: ModelParams::Order(OrderParams::default()),
        };
        match experiment {
            Experiment::Doublewell => ExperimentConfig {
                kinds: vec![MsgnhtEuler, MsgnhtSplit, SghmcEuler, SghmcSplit],
                h: vec![1e-3, 5e-3, 0.05, 0.1, 0.2, 0.3],
                diffusion: vec![0.0],
                total_steps: 1_000_000,
                model: ModelParams::DoubleWell(DoubleWellParams::default()),
                ..base
            },
            Experiment::OrderCheck => ExperimentConfig { h: vec![0.03, 0.06, 0.12, 0.18, 0.3], ..base },
            Experiment::Logreg => ExperimentConfig {
                kinds: vec![MsgnhtSplit, MsgnhtEuler, SghmcSplit, SghmcEuler],
                h: vec![1e-3, 1e-4, 1e-5],
                diffusion: vec![1.0, 5.0, 10.0],
                total_steps: 3000,
                burn_in: 300,
                thinning: 50,
                batch_size: 10,
                model: ModelParams::LogReg(LogRegParams::default()),
                ..base
            },
            Experiment::Mlp => ExperimentConfig {
                kinds: vec![MsgnhtSplit, MsgnhtEuler],
                h: vec![0.01],
                diffusion: vec![5.0],
                burn_in: 200,
                thinning: 10,
                batch_size: 20,
                model: ModelParams::Mlp(MlpParams::default()),
                ..base
            },
        }
    }

    /// Resolves a config from defaults, an optional JSON document and overrides.
    ///
    /// A document naming a different experiment is rejected.
    pub fn resolve(experiment: Experiment, document: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::defaults(experiment)).map_err(config_err)?;
        if let Some(text) = document {
            let doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))?;
            if !doc.is_object() {
                return Err(Error::Config("config JSON must be an object".into()));
            }
            if let Some(named) = doc.get("experiment") {
                if named != &Value::String(experiment.as_str().into()) {
                    return Err(Error::Config(format!("config is for experiment {named}, not {experiment}")));
                }
            }
            merge(&mut value, doc);
        }
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        let config = Self::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(experiment: Experiment, path: &Path, overrides: &[String]) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::resolve(experiment, Some(&text), overrides)
    }

    /// Parses a complete config. Every field must be present.
    pub fn from_value(value: Value) -> Result<Self> {
        let raw: RawConfig = serde_json::from_value(value).map_err(config_err)?;
        let model = match raw.experiment {
            Experiment::Doublewell => ModelParams::DoubleWell(parse_model(raw.model)?),
            Experiment::OrderCheck => ModelParams::Order(parse_model(raw.model)?),
            Experiment::Logreg => ModelParams::LogReg(parse_model(raw.model)?),
            Experiment::Mlp => ModelParams::Mlp(parse_model(raw.model)?),
        };
        Ok(ExperimentConfig {
            experiment: raw.experiment,
            kinds: raw.kinds,
            h: raw.h,
            diffusion: raw.diffusion,
            total_steps: raw.total_steps,
            burn_in: raw.burn_in,
            thinning: raw.thinning,
            batch_size: raw.batch_size,
            batch_mode: raw.batch_mode,
            seed: raw.seed,
            out_dir: raw.out_dir,
            model,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn chain_length(&self) -> Result<ChainLength> {
        ChainLength::new(self.total_steps, self.burn_in, self.thinning).map_err(|e| Error::Config(e.to_string()))
    }

    /// Rejects impossible settings before any data is loaded or sampled.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.kinds.is_empty() {
            return bad("kinds is empty".into());
        }
        for (i, k) in self.kinds.iter().enumerate() {
            if self.kinds[..i].contains(k) {
                return bad(format!("kind {k} listed twice"));
            }
        }
        if self.h.is_empty() {
            return bad("h list is empty".into());
        }
        if let Some(h) = self.h.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return bad(format!("stepsize {h} is not positive"));
        }
        if self.diffusion.is_empty() {
            return bad("diffusion list is empty".into());
        }
        if let Some(d) = self.diffusion.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return bad(format!("diffusion {d} is negative"));
        }
        if self.thinning < 1 {
            return bad("thinning must be at least 1".into());
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1".into());
        }
        let model_kind = match &self.model {
            ModelParams::DoubleWell(_) => Experiment::Doublewell,
            ModelParams::Order(_) => Experiment::OrderCheck,
            ModelParams::LogReg(_) => Experiment::Logreg,
            ModelParams::Mlp(_) => Experiment::Mlp,
        };
        if model_kind != self.experiment {
            return bad(format!("{model_kind} model block in a {} config", self.experiment));
        }
        match &self.model {
            ModelParams::DoubleWell(p) => {
                self.chain_length()?;
                if !(p.noise_scale >= 0.0 && p.noise_scale.is_finite()) {
                    return bad("noise_scale must be non-negative".into());
                }
                if p.sghmc_friction.is_some_and(|c| !(c >= 0.0 && c.is_finite())) {
                    return bad("sghmc_friction must be non-negative".into());
                }
                if !(p.grid_lo < p.grid_hi) || p.bins == 0 {
                    return bad("density grid needs grid_lo < grid_hi and bins > 0".into());
                }
                if p.replicates == 0 {
                    return bad("replicates must be at least 1".into());
                }
                if p.thermostat_every == 0 {
                    return bad("thermostat_every must be at least 1".into());
                }
                if self.burn_in == self.total_steps {
                    return bad("burn_in leaves no samples for the density estimate".into());
                }
            }
            ModelParams::Order(_) => {
                if self.diffusion.len() != 1 {
                    return bad("order-check takes exactly one diffusion value".into());
                }
                self.sweep_plan()?.validate().map_err(config_err)?;
            }
            ModelParams::LogReg(p) => {
                let length = self.chain_length()?;
                if length.recorded() == 0 {
                    return bad(format!(
                        "no post-burn-in samples to predict with (total_steps {}, burn_in {}, thinning {})",
                        self.total_steps, self.burn_in, self.thinning
                    ));
                }
                if p.train.is_some() != p.test.is_some() {
                    return bad("train and test files must be given together".into());
                }
                check_exists(p.train.iter().chain(&p.test))?;
                if !(p.prior_variance > 0.0 && p.prior_variance.is_finite()) {
                    return bad("prior_variance must be positive".into());
                }
                if p.train.is_none() && (p.n_train == 0 || p.n_test == 0) {
                    return bad("synthetic split sizes must be positive".into());
                }
            }
            ModelParams::Mlp(p) => {
                if p.layer_sizes.len() < 2 || p.layer_sizes.contains(&0) {
                    return bad("layer_sizes needs at least two positive widths".into());
                }
                if p.epochs == 0 {
                    return bad("epochs must be at least 1".into());
                }
                if p.halve_at_epoch.is_some_and(|e| e == 0 || e > p.epochs) {
                    return bad(format!("halve_at_epoch must lie in 1..={}", p.epochs));
                }
                if p.train_idx.is_some() != p.test_idx.is_some() {
                    return bad("train_idx and test_idx must be given together".into());
                }
                let idx = p.train_idx.iter().chain(&p.test_idx);
                check_exists(idx.flat_map(|i| [&i.images, &i.labels]))?;
                if !(p.prior_variance > 0.0 && p.prior_variance.is_finite()) {
                    return bad("prior_variance must be positive".into());
                }
                if p.train_idx.is_none() {
                    if p.n_train == 0 || p.n_test == 0 {
                        return bad("synthetic split sizes must be positive".into());
                    }
                    if self.batch_size > p.n_train {
                        return bad(format!("batch_size {} exceeds n_train {}", self.batch_size, p.n_train));
                    }
                }
            }
        }
        Ok(())
    }

    /// The order-check sweep this config describes.
    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let ModelParams::Order(p) = &self.model else {
            return Err(Error::Config(format!("{} config has no sweep plan", self.experiment)));
        };
        Ok(SweepPlan {
            kinds: self.kinds.clone(),
            h_grid: self.h.clone(),
            diffusion: self.diffusion[0],
            budget: ChainBudget::Time(p.horizon),
            burn_in: ChainBudget::Time(p.burn_in_time),
            replicates: p.replicates,
        })
    }
}

fn parse_model<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Config(format!("model: {e}")))
}

fn check_exists<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
    }
    Ok(())
}

/// Objects merge key by key; anything else replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies one `key=value` override. The value is read as JSON when it
/// parses, else as a bare string. For list-valued keys a comma-separated
/// form (`h=0.1,0.2`) is also accepted, and a lone scalar becomes a
/// one-element list.
pub fn apply_override(config: &mut Value, item: &str) -> Result<()> {
    let (key, raw) =
        item.split_once('=').ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let key = key.trim();
    if key == "experiment" {
        return Err(Error::Config("experiment is fixed by the subcommand".into()));
    }
    let slot = key
        .split('.')
        .try_fold(config, |v, part| v.as_object_mut().and_then(|m: &mut Map<String, Value>| m.get_mut(part)))
        .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
    let parsed = match serde_json::from_str::<Value>(raw) {
        Ok(v) if slot.is_array() && !v.is_array() => Value::Array(vec![v]),
        Ok(v) => v,
        Err(_) if slot.is_array() => Value::Array(raw.split(',').map(|s| scalar(s.trim())).collect()),
        Err(_) => Value::String(raw.to_string()),
    };
    *slot = parsed;
    Ok(())
}

fn scalar(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}
