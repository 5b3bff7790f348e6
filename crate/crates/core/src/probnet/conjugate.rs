//! Closed-form conjugate posterior updates.

use serde::{Deserialize, Serialize};

use super::ProbError;

/// `alpha*_k = alpha0_k + N_k`.
pub fn posterior_update_dirichlet(alpha0: &[f64], counts: &[i64]) -> Result<Vec<f64>, ProbError> {
    if alpha0.len() != counts.len() {
        return Err(ProbError::DimensionMismatch { expected: alpha0.len(), found: counts.len() });
    }
    alpha0
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(k, (&a, &n))| {
            if n < 0 {
                Err(ProbError::NegativeCount { index: k, value: n })
            } else {
                Ok(a + n as f64)
            }
        })
        .collect()
}

/// `(a0 + successes, b0 + failures)`.
pub fn posterior_update_beta(a0: f64, b0: f64, successes: i64, failures: i64) -> Result<(f64, f64), ProbError> {
    if successes < 0 {
        return Err(ProbError::NegativeCount { index: 0, value: successes });
    }
    if failures < 0 {
        return Err(ProbError::NegativeCount { index: 1, value: failures });
    }
    Ok((a0 + successes as f64, b0 + failures as f64))
}

/// Gamma hyperparameters in the shape/scale form used by node specs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl GammaParams {
    pub fn rate(&self) -> f64 {
        1.0 / self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    /// Posterior predictive mean of the exponential excess `x - location`
    /// when this Gamma is the distribution of the exponential rate.
    pub fn predictive_mean_excess(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.rate() / (self.shape - 1.0))
    }
}

/// Exponential likelihood with a Gamma prior, updated in rate form:
/// `shape* = shape0 + n`, `rate* = 1/scale0 + sum(x_i - location)`.
/// Input and output use the shape/scale parameterization.
pub fn posterior_update_gamma_exponential(
    prior: GammaParams,
    observations: &[f64],
    location: f64,
) -> Result<GammaParams, ProbError> {
    let mut excess = 0.0;
    for &x in observations {
        if x < location {
            return Err(ProbError::ObservationBelowLocation { value: x, location });
        }
        excess += x - location;
    }
    let rate = prior.rate() + excess;
    Ok(GammaParams { shape: prior.shape + observations.len() as f64, scale: 1.0 / rate })
}

/// Separate normal prior on the mean and inverse-gamma prior on the variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub prior_mean: f64,
    pub prior_var: f64,
    pub var_shape: f64,
    pub var_scale: f64,
}

impl NormalPrior {
    /// Point estimate of the observation variance under the inverse-gamma:
    /// its mean when defined, otherwise its mode.
    pub fn variance_estimate(&self) -> f64 {
        if self.var_shape > 1.0 {
            self.var_scale / (self.var_shape - 1.0)
        } else {
            self.var_scale / (self.var_shape + 1.0)
        }
    }
}

/// One fixed-point sweep of the semi-conjugate update: the mean's normal
/// posterior given the variance at its current estimate, then the variance's
/// inverse-gamma posterior given residuals about the updated mean.
pub fn posterior_update_normal(prior: NormalPrior, observations: &[f64]) -> NormalPrior {
    if observations.is_empty() {
        return prior;
    }
    let n = observations.len() as f64;
    let sum: f64 = observations.iter().sum();
    let noise_var = prior.variance_estimate();

    let precision = 1.0 / prior.prior_var + n / noise_var;
    let prior_var = 1.0 / precision;
    let prior_mean = (prior.prior_mean / prior.prior_var + sum / noise_var) * prior_var;

    let sq: f64 = observations.iter().map(|x| (x - prior_mean).powi(2)).sum();
    NormalPrior {
        prior_mean,
        prior_var,
        var_shape: prior.var_shape + n / 2.0,
        var_scale: prior.var_scale + sq / 2.0,
    }
}
