use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Augmented sampler variables: parameters, momenta and per-dimension thermostats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    pub theta: Vec<f64>,
    pub momentum: Vec<f64>,
    pub thermostat: Vec<f64>,
}

impl SamplerState {
    /// State at `theta` with zero momentum and every thermostat set to `xi`.
    pub fn at(theta: Vec<f64>, xi: f64) -> Self {
        let n = theta.len();
        Self { theta, momentum: vec![0.0; n], thermostat: vec![xi; n] }
    }

    pub fn new(theta: Vec<f64>, momentum: Vec<f64>, thermostat: Vec<f64>) -> Result<Self> {
        let state = Self { theta, momentum, thermostat };
        state.validate()?;
        Ok(state)
    }

    /// Single-dimension state, handy for scalar targets.
    pub fn scalar(theta: f64, momentum: f64, xi: f64) -> Self {
        Self { theta: vec![theta], momentum: vec![momentum], thermostat: vec![xi] }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.theta.len();
        if n == 0 {
            return Err(Error::invalid("sampler state must have dimension >= 1"));
        }
        if self.momentum.len() != n || self.thermostat.len() != n {
            return Err(Error::invalid(format!(
                "state vectors disagree in length: theta {n}, momentum {}, thermostat {}",
                self.momentum.len(),
                self.thermostat.len()
            )));
        }
        self.check_finite()
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().chain(&self.momentum).chain(&self.thermostat).all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Divergence { step: None, what: "sampler state", theta: self.theta.clone() })
        }
    }

    pub fn thermostat_mean(&self) -> f64 {
        self.thermostat.iter().sum::<f64>() / self.thermostat.len() as f64
    }

    /// Kinetic energy `|p|^2 / 2`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.momentum.iter().map(|p| p * p).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_lengths() {
        let err = SamplerState::new(vec![0.0; 2], vec![0.0; 2], vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(SamplerState::new(vec![], vec![], vec![]).is_err());
        let err = SamplerState::new(vec![f64::NAN], vec![0.0], vec![0.0]).unwrap_err();
        assert!(err.is_divergence());
    }
}
