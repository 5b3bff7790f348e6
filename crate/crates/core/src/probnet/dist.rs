//! Distribution families and their two-stage samplers.
//!
//! Every family draws its parameters from a prior first (`draw_params`) and
//! then observed values from the realized conditional (`Realized::draw`).

use rand_distr::{Distribution, Exp1, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::rng::RngStream;

/// Attempts at rejection sampling a bounded continuous value before clamping.
pub const REJECTION_CAP: usize = 100;

/// Dirichlet concentration: an explicit vector or a symmetric scalar whose
/// dimension is supplied by the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Concentration {
    Explicit(Vec<f64>),
    Symmetric(f64),
}

impl Concentration {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Concentration::Explicit(v) => Some(v.len()),
            Concentration::Symmetric(_) => None,
        }
    }

    pub fn resolve(&self, dim: usize) -> Vec<f64> {
        match self {
            Concentration::Explicit(v) => v.clone(),
            Concentration::Symmetric(a) => vec![*a; dim],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    DirichletCategorical,
    BetaBernoulli,
    NormalInvGamma,
    ShiftedExponential,
    Poisson,
    TruncatedCauchy,
    UniformContinuous,
    UniformDiscrete,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::DirichletCategorical => "dirichlet_categorical",
            Family::BetaBernoulli => "beta_bernoulli",
            Family::NormalInvGamma => "normal_inv_gamma",
            Family::ShiftedExponential => "shifted_exponential",
            Family::Poisson => "poisson",
            Family::TruncatedCauchy => "truncated_cauchy",
            Family::UniformContinuous => "uniform_continuous",
            Family::UniformDiscrete => "uniform_discrete",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One node's prior family with its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// `p ~ Dir(alpha)`, `k ~ Mult(p)`.
    DirichletCategorical { alpha: Concentration },
    /// `p ~ Beta(a, b)`, `z ~ Ber(p)`.
    BetaBernoulli { a: f64, b: f64 },
    /// `mu ~ N(prior_mean, prior_var)`, `var ~ InvGamma(var_shape, var_scale)`,
    /// `x ~ N(mu, var)`.
    NormalInvGamma {
        prior_mean: f64,
        prior_var: f64,
        var_shape: f64,
        var_scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<f64>,
    },
    /// `lambda ~ Gamma(shape, scale)`, `x = location + Exp(mean lambda)`.
    ShiftedExponential {
        location: f64,
        shape: f64,
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<f64>,
    },
    Poisson {
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<i64>,
    },
    TruncatedCauchy { location: f64, scale: f64, min: f64, max: f64 },
    UniformContinuous { min: f64, max: f64 },
    UniformDiscrete { min: i64, max: i64 },
}

/// Hyperparameter that failed validation.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperparamFault {
    pub field: &'static str,
    pub reason: String,
}

fn positive(field: &'static str, v: f64) -> Result<(), HyperparamFault> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(HyperparamFault { field, reason: format!("must be finite and > 0, got {v}") })
    }
}

fn finite(field: &'static str, v: f64) -> Result<(), HyperparamFault> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(HyperparamFault { field, reason: format!("must be finite, got {v}") })
    }
}

fn ordered(lo: Option<f64>, hi: Option<f64>) -> Result<(), HyperparamFault> {
    if let Some(lo) = lo {
        finite("min", lo)?;
    }
    if let Some(hi) = hi {
        finite("max", hi)?;
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo > hi => Err(HyperparamFault {
            field: "min",
            reason: format!("min {lo} exceeds max {hi}"),
        }),
        _ => Ok(()),
    }
}

impl DistributionSpec {
    pub fn family(&self) -> Family {
        match self {
            DistributionSpec::DirichletCategorical { .. } => Family::DirichletCategorical,
            DistributionSpec::BetaBernoulli { .. } => Family::BetaBernoulli,
            DistributionSpec::NormalInvGamma { .. } => Family::NormalInvGamma,
            DistributionSpec::ShiftedExponential { .. } => Family::ShiftedExponential,
            DistributionSpec::Poisson { .. } => Family::Poisson,
            DistributionSpec::TruncatedCauchy { .. } => Family::TruncatedCauchy,
            DistributionSpec::UniformContinuous { .. } => Family::UniformContinuous,
            DistributionSpec::UniformDiscrete { .. } => Family::UniformDiscrete,
        }
    }

    pub fn validate(&self) -> Result<(), HyperparamFault> {
        match self {
            DistributionSpec::DirichletCategorical { alpha } => match alpha {
                Concentration::Explicit(v) => {
                    if v.len() < 2 {
                        return Err(HyperparamFault {
                            field: "alpha",
                            reason: format!("dimension must be >= 2, got {}", v.len()),
                        });
                    }
                    for &a in v {
                        positive("alpha", a)?;
                    }
                    Ok(())
                }
                Concentration::Symmetric(a) => positive("alpha", *a),
            },
            DistributionSpec::BetaBernoulli { a, b } => {
                positive("a", *a)?;
                positive("b", *b)
            }
            DistributionSpec::NormalInvGamma { prior_mean, prior_var, var_shape, var_scale, min, max } => {
                finite("prior_mean", *prior_mean)?;
                positive("prior_var", *prior_var)?;
                positive("var_shape", *var_shape)?;
                positive("var_scale", *var_scale)?;
                ordered(*min, *max)
            }
            DistributionSpec::ShiftedExponential { location, shape, scale, max } => {
                finite("location", *location)?;
                positive("shape", *shape)?;
                positive("scale", *scale)?;
                if let Some(m) = max {
                    finite("max", *m)?;
                    if *m <= *location {
                        return Err(HyperparamFault {
                            field: "max",
                            reason: format!("max {m} must exceed location {location}"),
                        });
                    }
                }
                Ok(())
            }
            DistributionSpec::Poisson { rate, min, max } => {
                positive("rate", *rate)?;
                ordered(min.map(|v| v as f64), max.map(|v| v as f64))
            }
            DistributionSpec::TruncatedCauchy { location, scale, min, max } => {
                finite("location", *location)?;
                positive("scale", *scale)?;
                finite("min", *min)?;
                finite("max", *max)?;
                if min >= max {
                    return Err(HyperparamFault {
                        field: "min",
                        reason: format!("truncation bounds need min < max, got [{min}, {max}]"),
                    });
                }
                Ok(())
            }
            DistributionSpec::UniformContinuous { min, max } => ordered(Some(*min), Some(*max)),
            DistributionSpec::UniformDiscrete { min, max } => {
                ordered(Some(*min as f64), Some(*max as f64))
            }
        }
    }

    /// Support bounds of the observed value, where the family declares any.
    pub fn support(&self) -> (Option<f64>, Option<f64>) {
        match self {
            DistributionSpec::DirichletCategorical { alpha } => {
                (Some(0.0), alpha.dim().map(|d| d as f64 - 1.0))
            }
            DistributionSpec::BetaBernoulli { .. } => (Some(0.0), Some(1.0)),
            DistributionSpec::NormalInvGamma { min, max, .. } => (*min, *max),
            DistributionSpec::ShiftedExponential { location, max, .. } => (Some(*location), *max),
            DistributionSpec::Poisson { min, max, .. } => {
                (Some(min.unwrap_or(0) as f64), max.map(|v| v as f64))
            }
            DistributionSpec::TruncatedCauchy { min, max, .. } => (Some(*min), Some(*max)),
            DistributionSpec::UniformContinuous { min, max } => (Some(*min), Some(*max)),
            DistributionSpec::UniformDiscrete { min, max } => (Some(*min as f64), Some(*max as f64)),
        }
    }

    /// First stage: draw the node's parameters from their priors.
    ///
    /// `dim` is only consulted for symmetric Dirichlet concentrations.
    pub fn draw_params(&self, rng: &mut RngStream, dim: Option<usize>) -> Realized {
        match self {
            DistributionSpec::DirichletCategorical { alpha } => {
                let alpha = alpha.resolve(dim.or(alpha.dim()).unwrap_or(2));
                Realized::Categorical { probs: dirichlet(rng, &alpha) }
            }
            DistributionSpec::BetaBernoulli { a, b } => Realized::Bernoulli { p: beta(rng, *a, *b) },
            DistributionSpec::NormalInvGamma { prior_mean, prior_var, var_shape, var_scale, min, max } => {
                let mean = prior_mean + prior_var.sqrt() * standard_normal(rng);
                let var = inverse_gamma(rng, *var_shape, *var_scale);
                Realized::Normal { mean, var, min: *min, max: *max }
            }
            DistributionSpec::ShiftedExponential { location, shape, scale, max } => {
                Realized::ShiftedExponential {
                    location: *location,
                    scale: gamma(rng, *shape, *scale),
                    max: *max,
                }
            }
            DistributionSpec::Poisson { rate, min, max } => {
                Realized::Poisson { rate: *rate, min: *min, max: *max }
            }
            DistributionSpec::TruncatedCauchy { location, scale, min, max } => Realized::Cauchy {
                location: *location,
                scale: *scale,
                min: *min,
                max: *max,
            },
            DistributionSpec::UniformContinuous { min, max } => {
                Realized::Uniform { min: *min, max: *max }
            }
            DistributionSpec::UniformDiscrete { min, max } => {
                Realized::UniformInt { min: *min, max: *max }
            }
        }
    }
}

/// Parameters realized by the first sampling stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Realized {
    Categorical { probs: Vec<f64> },
    Bernoulli { p: f64 },
    Normal { mean: f64, var: f64, min: Option<f64>, max: Option<f64> },
    ShiftedExponential { location: f64, scale: f64, max: Option<f64> },
    Poisson { rate: f64, min: Option<i64>, max: Option<i64> },
    Cauchy { location: f64, scale: f64, min: f64, max: f64 },
    Uniform { min: f64, max: f64 },
    UniformInt { min: i64, max: i64 },
}

/// An observed draw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Category(usize),
    Flag(bool),
    Real(f64),
    Count(i64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Category(k) => k as f64,
            Value::Flag(b) => f64::from(u8::from(b)),
            Value::Real(x) => x,
            Value::Count(n) => n as f64,
        }
    }

    pub fn as_index(self) -> usize {
        match self {
            Value::Category(k) => k,
            Value::Flag(b) => usize::from(b),
            Value::Real(x) => x.max(0.0).round() as usize,
            Value::Count(n) => n.max(0) as usize,
        }
    }

    pub fn as_flag(self) -> bool {
        match self {
            Value::Flag(b) => b,
            other => other.as_f64() != 0.0,
        }
    }
}

impl Realized {
    /// Second stage: draw one observed value from the realized conditional.
    pub fn draw(&self, rng: &mut RngStream) -> Value {
        match self {
            Realized::Categorical { probs } => Value::Category(categorical(rng, probs)),
            Realized::Bernoulli { p } => Value::Flag(rng.unit() < *p),
            Realized::Normal { mean, var, min, max } => {
                let sd = var.max(0.0).sqrt();
                Value::Real(bounded(rng, *min, *max, |r| mean + sd * standard_normal(r)))
            }
            Realized::ShiftedExponential { location, scale, max } => {
                let x = bounded(rng, None, *max, |r| {
                    let e: f64 = Exp1.sample(r);
                    location + scale * e
                });
                Value::Real(x.max(*location))
            }
            Realized::Poisson { rate, min, max } => {
                let n = Poisson::new(*rate).map(|d| d.sample(rng) as i64).unwrap_or(0);
                let n = min.map_or(n, |lo| n.max(lo));
                Value::Count(max.map_or(n, |hi| n.min(hi)))
            }
            Realized::Cauchy { location, scale, min, max } => {
                Value::Real(truncated_cauchy(rng, *location, *scale, *min, *max))
            }
            Realized::Uniform { min, max } => Value::Real(min + rng.unit() * (max - min)),
            Realized::UniformInt { min, max } => {
                let span = (max - min + 1) as f64;
                let k = ((rng.unit() * span) as i64).min(max - min);
                Value::Count(min + k)
            }
        }
    }

    pub fn probs(&self) -> Option<&[f64]> {
        match self {
            Realized::Categorical { probs } => Some(probs),
            _ => None,
        }
    }
}

/// Rejection-sample within `[min, max]`, clamping after [`REJECTION_CAP`] misses.
fn bounded(
    rng: &mut RngStream,
    min: Option<f64>,
    max: Option<f64>,
    mut draw: impl FnMut(&mut RngStream) -> f64,
) -> f64 {
    let lo = min.unwrap_or(f64::NEG_INFINITY);
    let hi = max.unwrap_or(f64::INFINITY);
    let mut x = draw(rng);
    for _ in 1..REJECTION_CAP {
        if x >= lo && x <= hi {
            return x;
        }
        x = draw(rng);
    }
    x.clamp(lo, hi)
}

pub(crate) fn standard_normal(rng: &mut RngStream) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

pub(crate) fn gamma(rng: &mut RngStream, shape: f64, scale: f64) -> f64 {
    match Gamma::new(shape, scale) {
        Ok(d) => d.sample(rng),
        Err(_) => 0.0,
    }
}

pub(crate) fn inverse_gamma(rng: &mut RngStream, shape: f64, scale: f64) -> f64 {
    let g = gamma(rng, shape, 1.0);
    if g > 0.0 {
        scale / g
    } else {
        f64::MAX
    }
}

pub(crate) fn beta(rng: &mut RngStream, a: f64, b: f64) -> f64 {
    let x = gamma(rng, a, 1.0);
    let y = gamma(rng, b, 1.0);
    if x + y > 0.0 {
        x / (x + y)
    } else {
        // both gammas underflowed: the limit is a point mass at 0 or 1
        f64::from(u8::from(rng.unit() < a / (a + b)))
    }
}

pub(crate) fn dirichlet(rng: &mut RngStream, alpha: &[f64]) -> Vec<f64> {
    if alpha.len() == 1 {
        return vec![1.0];
    }
    let draws: Vec<f64> = alpha.iter().map(|&a| gamma(rng, a, 1.0)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.into_iter().map(|g| g / total).collect()
    } else {
        // all concentrations tiny: the Dirichlet degenerates to a vertex
        let k = categorical(rng, alpha);
        (0..alpha.len()).map(|i| f64::from(u8::from(i == k))).collect()
    }
}

/// Index drawn proportionally to `weights` (need not be normalized).
pub(crate) fn categorical(rng: &mut RngStream, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.unit() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Exact inverse-CDF draw from a Cauchy truncated to `[min, max]`.
pub(crate) fn truncated_cauchy(rng: &mut RngStream, location: f64, scale: f64, min: f64, max: f64) -> f64 {
    let lo = ((min - location) / scale).atan();
    let hi = ((max - location) / scale).atan();
    let theta = lo + rng.unit() * (hi - lo);
    (location + scale * theta.tan()).clamp(min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_zero_concentration() {
        let spec = DistributionSpec::DirichletCategorical {
            alpha: Concentration::Explicit(vec![1.0, 0.0, 1.0]),
        };
        assert_eq!(spec.validate().unwrap_err().field, "alpha");
        let spec = DistributionSpec::DirichletCategorical { alpha: Concentration::Explicit(vec![1.0]) };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn validation_rejects_bad_bounds() {
        let c = DistributionSpec::TruncatedCauchy { location: 0.0, scale: 1.0, min: 3.0, max: 3.0 };
        assert!(c.validate().is_err());
        let e = DistributionSpec::ShiftedExponential { location: 2.0, shape: 1.0, scale: 1.0, max: Some(1.0) };
        assert_eq!(e.validate().unwrap_err().field, "max");
        let b = DistributionSpec::BetaBernoulli { a: 1.0, b: -1.0 };
        assert_eq!(b.validate().unwrap_err().field, "b");
        let n = DistributionSpec::NormalInvGamma {
            prior_mean: 0.0,
            prior_var: 0.0,
            var_shape: 1.0,
            var_scale: 1.0,
            min: None,
            max: None,
        };
        assert_eq!(n.validate().unwrap_err().field, "prior_var");
    }

    #[test]
    fn toml_round_trip_of_symmetric_alpha() {
        let src = "family = \"dirichlet_categorical\"\nalpha = 0.5\n";
        let spec: DistributionSpec = toml::from_str(src).unwrap();
        assert_eq!(spec, DistributionSpec::DirichletCategorical { alpha: Concentration::Symmetric(0.5) });
        let src = "family = \"dirichlet_categorical\"\nalpha = [1.0, 2.0]\n";
        let spec: DistributionSpec = toml::from_str(src).unwrap();
        assert_eq!(spec.support(), (Some(0.0), Some(1.0)));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let src = "family = \"beta_bernoulli\"\na = 1.0\nb = 1.0\nc = 2.0\n";
        assert!(toml::from_str::<DistributionSpec>(src).is_err());
    }

    #[test]
    fn degenerate_dirichlet_is_a_vertex() {
        let mut rng = RngStream::new(1);
        let p = dirichlet(&mut rng, &[1e-300, 1e-300, 1e-300]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p.iter().filter(|&&x| x == 1.0).count(), 1);
    }

    #[test]
    fn tiny_beta_is_near_zero() {
        let mut rng = RngStream::new(5);
        for _ in 0..1000 {
            assert!(beta(&mut rng, 1e-6, 1e6) < 1e-3);
        }
    }

    #[test]
    fn uniform_int_hits_both_ends() {
        let mut rng = RngStream::new(2);
        let r = Realized::UniformInt { min: 3, max: 5 };
        let mut seen = [false; 3];
        for _ in 0..1000 {
            let v = r.draw(&mut rng).as_f64() as usize;
            seen[v - 3] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn poisson_clamps_to_min() {
        let mut rng = RngStream::new(4);
        let r = Realized::Poisson { rate: 0.01, min: Some(1), max: None };
        for _ in 0..200 {
            assert!(r.draw(&mut rng).as_f64() >= 1.0);
        }
    }
}
