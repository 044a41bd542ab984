use crate::error::{Error, Result};
use crate::integrators::Trace;
use crate::state::SamplerState;

/// Sample average `(1/T) sum_t phi(x_t)` over the recorded states.
pub fn posterior_average(trace: &Trace, phi: impl Fn(&SamplerState) -> f64) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::invalid("posterior average of an empty trace"));
    }
    Ok(trace.states.iter().map(phi).sum::<f64>() / trace.len() as f64)
}

/// Mean of the trailing `ceil(tail_fraction * len)` values.
pub fn tail_mean(values: &[f64], tail_fraction: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("tail mean of an empty sequence"));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::invalid(format!("tail fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let take = ((values.len() as f64 * tail_fraction).ceil() as usize).clamp(1, values.len());
    let tail = &values[values.len() - take..];
    Ok(tail.iter().sum::<f64>() / take as f64)
}

/// Average thermostat value over the trailing `tail_fraction` of the trace.
pub fn thermostat_summary(trace: &Trace, tail_fraction: f64) -> Result<f64> {
    let xi: Vec<f64> = trace.states.iter().map(SamplerState::thermostat_mean).collect();
    tail_mean(&xi, tail_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_of(thetas: &[f64], xi: f64) -> Trace {
        Trace::from_states(thetas.iter().map(|&t| SamplerState::scalar(t, 0.0, xi)).collect())
    }

    #[test]
    fn averages() {
        let t = trace_of(&[1.0, 2.0, 3.0], 0.5);
        assert_eq!(posterior_average(&t, |_| 4.2).unwrap(), 4.2);
        assert_eq!(posterior_average(&t, |s| s.theta[0]).unwrap(), 2.0);
        assert!(posterior_average(&trace_of(&[], 0.0), |_| 1.0).is_err());
    }

    #[test]
    fn thermostat_tail() {
        let t = trace_of(&[0.0; 10], 1.7);
        assert_eq!(thermostat_summary(&t, 0.2).unwrap(), 1.7);
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(tail_mean(&xs, 1.0).unwrap(), 2.5);
        assert_eq!(tail_mean(&xs, 0.5).unwrap(), 3.5);
        assert!(tail_mean(&xs, 0.0).is_err());
    }
}
