//! Posterior inference of node hyperparameters from observed draws.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::conjugate::{
    posterior_update_beta, posterior_update_dirichlet, posterior_update_gamma_exponential,
    posterior_update_normal, GammaParams, NormalPrior,
};
use super::dist::{Concentration, DistributionSpec};
use super::registry::Registry;
use super::ProbError;

/// Hyperparameters of one template, keyed by node id.
pub type NodeParams = BTreeMap<String, DistributionSpec>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    Category(usize),
    Value(f64),
}

/// All observed draws of one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub node_id: String,
    pub values: Vec<Observation>,
}

/// Parse line-delimited JSON records of the form `{"node_id": .., "value": ..}`
/// or `{"node_id": .., "category_index": ..}`, grouped by node id.
pub fn parse_observations(text: &str) -> Result<Vec<ObservationSet>, ProbError> {
    let mut grouped: BTreeMap<String, Vec<Observation>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| ProbError::Parse { line: line_no, message };
        let record: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| parse_err(e.to_string()))?;
        let obj = record.as_object().ok_or_else(|| parse_err("record is not an object".into()))?;
        let node_id = obj
            .get("node_id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| parse_err("missing string field `node_id`".into()))?;
        let obs = match (obj.get("category_index"), obj.get("value")) {
            (Some(k), None) => {
                let k = k
                    .as_i64()
                    .ok_or_else(|| parse_err("`category_index` must be an integer".into()))?;
                if k < 0 {
                    return Err(ProbError::NegativeCount { index: line_no, value: k });
                }
                Observation::Category(k as usize)
            }
            (None, Some(v)) => match v {
                serde_json::Value::Bool(b) => Observation::Value(f64::from(u8::from(*b))),
                serde_json::Value::Number(n) => Observation::Value(
                    n.as_f64().ok_or_else(|| parse_err("`value` is not representable".into()))?,
                ),
                _ => return Err(parse_err("`value` must be a number or boolean".into())),
            },
            (Some(_), Some(_)) => {
                return Err(parse_err("give either `value` or `category_index`, not both".into()))
            }
            (None, None) => return Err(parse_err("missing `value` or `category_index`".into())),
        };
        grouped.entry(node_id.to_string()).or_default().push(obs);
    }
    Ok(grouped.into_iter().map(|(node_id, values)| ObservationSet { node_id, values }).collect())
}

pub fn load_observations(path: &Path) -> Result<Vec<ObservationSet>, ProbError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProbError::Parse { line: 0, message: format!("{}: {e}", path.display()) })?;
    parse_observations(&text)
}

fn bad(node: &str, reason: impl Into<String>) -> ProbError {
    ProbError::InvalidObservation { node: node.to_string(), reason: reason.into() }
}

fn real_values(set: &ObservationSet) -> Result<Vec<f64>, ProbError> {
    set.values
        .iter()
        .map(|o| match o {
            Observation::Value(x) if x.is_finite() => Ok(*x),
            Observation::Value(x) => Err(bad(&set.node_id, format!("non-finite value {x}"))),
            Observation::Category(k) => Ok(*k as f64),
        })
        .collect()
}

/// Replace each observed node's hyperparameters with its conjugate posterior.
/// Nodes without observations are returned untouched.
pub fn posterior_infer(
    dataset: &[ObservationSet],
    registry: &Registry,
    params: &NodeParams,
) -> Result<NodeParams, ProbError> {
    let mut out = params.clone();
    for set in dataset {
        if registry.get(&set.node_id).is_none() {
            return Err(ProbError::UnknownNode(set.node_id.clone()));
        }
        let spec = params.get(&set.node_id).ok_or_else(|| ProbError::MissingTemplateParam {
            node: set.node_id.clone(),
            template: 0,
        })?;
        let updated = update_one(set, spec)?;
        out.insert(set.node_id.clone(), updated);
    }
    Ok(out)
}

fn update_one(set: &ObservationSet, spec: &DistributionSpec) -> Result<DistributionSpec, ProbError> {
    let node = set.node_id.as_str();
    match spec {
        DistributionSpec::DirichletCategorical { alpha } => {
            let alpha0 = match alpha {
                Concentration::Explicit(v) => v.clone(),
                Concentration::Symmetric(_) => {
                    return Err(bad(node, "symmetric concentration has no fixed dimension to update"))
                }
            };
            let mut counts = vec![0i64; alpha0.len()];
            for o in &set.values {
                let k = match o {
                    Observation::Category(k) => *k,
                    Observation::Value(x) if x.fract() == 0.0 && *x >= 0.0 => *x as usize,
                    Observation::Value(x) => return Err(bad(node, format!("{x} is not a category index"))),
                };
                let slot = counts
                    .get_mut(k)
                    .ok_or_else(|| bad(node, format!("category {k} outside 0..{}", alpha0.len())))?;
                *slot += 1;
            }
            Ok(DistributionSpec::DirichletCategorical {
                alpha: Concentration::Explicit(posterior_update_dirichlet(&alpha0, &counts)?),
            })
        }
        DistributionSpec::BetaBernoulli { a, b } => {
            let (mut successes, mut failures) = (0i64, 0i64);
            for x in real_values(set)? {
                if x == 1.0 {
                    successes += 1;
                } else if x == 0.0 {
                    failures += 1;
                } else {
                    return Err(bad(node, format!("Bernoulli observation must be 0 or 1, got {x}")));
                }
            }
            let (a, b) = posterior_update_beta(*a, *b, successes, failures)?;
            Ok(DistributionSpec::BetaBernoulli { a, b })
        }
        DistributionSpec::ShiftedExponential { location, shape, scale, max } => {
            let xs = real_values(set)?;
            if let Some(m) = max {
                if let Some(x) = xs.iter().find(|&&x| x > *m) {
                    return Err(bad(node, format!("value {x} above support max {m}")));
                }
            }
            let post = posterior_update_gamma_exponential(GammaParams { shape: *shape, scale: *scale }, &xs, *location)?;
            Ok(DistributionSpec::ShiftedExponential {
                location: *location,
                shape: post.shape,
                scale: post.scale,
                max: *max,
            })
        }
        DistributionSpec::NormalInvGamma { prior_mean, prior_var, var_shape, var_scale, min, max } => {
            let xs = real_values(set)?;
            for &x in &xs {
                if min.is_some_and(|lo| x < lo) || max.is_some_and(|hi| x > hi) {
                    return Err(bad(node, format!("value {x} outside support")));
                }
            }
            let post = posterior_update_normal(
                NormalPrior {
                    prior_mean: *prior_mean,
                    prior_var: *prior_var,
                    var_shape: *var_shape,
                    var_scale: *var_scale,
                },
                &xs,
            );
            Ok(DistributionSpec::NormalInvGamma {
                prior_mean: post.prior_mean,
                prior_var: post.prior_var,
                var_shape: post.var_shape,
                var_scale: post.var_scale,
                min: *min,
                max: *max,
            })
        }
        other => Err(ProbError::UnsupportedFamily { node: node.to_string(), family: other.family() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probnet::registry::NodeRef;

    fn setup() -> (Registry, NodeParams) {
        let columns = DistributionSpec::DirichletCategorical { alpha: Concentration::Explicit(vec![1.0, 1.0, 1.0]) };
        let header = DistributionSpec::BetaBernoulli { a: 1.0, b: 1.0 };
        let rows = DistributionSpec::TruncatedCauchy { location: 6.0, scale: 2.0, min: 1.0, max: 40.0 };
        let mut reg = Registry::new();
        let mut params = NodeParams::new();
        for (id, spec) in [("doc.columns", columns), ("doc.header", header), ("table.rows", rows)] {
            reg.register_node(NodeRef::new(id, spec.clone())).unwrap();
            params.insert(id.to_string(), spec);
        }
        (reg, params)
    }

    #[test]
    fn parse_records() {
        let text = "{\"node_id\":\"doc.columns\",\"category_index\":2}\n\n{\"node_id\":\"doc.header\",\"value\":true}\n{\"node_id\":\"doc.columns\",\"category_index\":0}\n";
        let sets = parse_observations(text).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].node_id, "doc.columns");
        assert_eq!(sets[0].values, vec![Observation::Category(2), Observation::Category(0)]);
        assert_eq!(sets[1].values, vec![Observation::Value(1.0)]);
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = parse_observations("{\"node_id\":\"a\",\"value\":1}\n{\"value\":1}\n").unwrap_err();
        assert!(matches!(err, ProbError::Parse { line: 2, .. }));
        let err = parse_observations("not json").unwrap_err();
        assert!(matches!(err, ProbError::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_dataset_is_identity() {
        let (reg, params) = setup();
        assert_eq!(posterior_infer(&[], &reg, &params).unwrap(), params);
    }

    #[test]
    fn only_observed_node_changes() {
        let (reg, params) = setup();
        let data = vec![ObservationSet {
            node_id: "doc.columns".into(),
            values: vec![Observation::Category(1), Observation::Category(1), Observation::Category(2)],
        }];
        let out = posterior_infer(&data, &reg, &params).unwrap();
        assert_eq!(
            out["doc.columns"],
            DistributionSpec::DirichletCategorical { alpha: Concentration::Explicit(vec![1.0, 3.0, 2.0]) }
        );
        assert_eq!(out["doc.header"], params["doc.header"]);
        assert_eq!(out["table.rows"], params["table.rows"]);
    }

    #[test]
    fn unknown_and_unsupported() {
        let (reg, params) = setup();
        let unknown = vec![ObservationSet { node_id: "nope".into(), values: vec![] }];
        assert!(matches!(posterior_infer(&unknown, &reg, &params), Err(ProbError::UnknownNode(_))));
        let cauchy = vec![ObservationSet { node_id: "table.rows".into(), values: vec![Observation::Value(5.0)] }];
        assert!(matches!(
            posterior_infer(&cauchy, &reg, &params),
            Err(ProbError::UnsupportedFamily { .. })
        ));
    }

    #[test]
    fn bernoulli_rejects_non_binary() {
        let (reg, params) = setup();
        let data = vec![ObservationSet { node_id: "doc.header".into(), values: vec![Observation::Value(0.5)] }];
        assert!(matches!(posterior_infer(&data, &reg, &params), Err(ProbError::InvalidObservation { .. })));
    }
}
