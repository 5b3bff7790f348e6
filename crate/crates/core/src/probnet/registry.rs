use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::dist::{DistributionSpec, Realized, Value};
use super::rng::RngStream;
use super::ProbError;

/// A node of the directed acyclic graph: identifier, parents, prior family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRef {
    pub id: String,
    #[serde(default)]
    pub parent_ids: Vec<String>,
    pub spec: DistributionSpec,
}

impl NodeRef {
    pub fn new(id: impl Into<String>, spec: DistributionSpec) -> Self {
        Self { id: id.into(), parent_ids: Vec::new(), spec }
    }

    pub fn with_parents<I, S>(mut self, parents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.parent_ids = parents.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeHandle(pub(crate) usize);

impl NodeHandle {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Immutable-after-build node registry.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    nodes: Vec<NodeRef>,
    index: HashMap<String, NodeHandle>,
}

fn check_spec(node: &NodeRef) -> Result<(), ProbError> {
    node.spec.validate().map_err(|f| ProbError::InvalidHyperparam {
        node: node.id.clone(),
        field: f.field.to_string(),
        reason: f.reason,
    })
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a node whose parents are already registered.
    pub fn register_node(&mut self, node: NodeRef) -> Result<NodeHandle, ProbError> {
        check_spec(&node)?;
        if self.index.contains_key(&node.id) {
            return Err(ProbError::DuplicateId(node.id));
        }
        for parent in &node.parent_ids {
            if parent == &node.id {
                return Err(ProbError::CycleDetected(vec![node.id.clone(), node.id.clone()]));
            }
            if !self.index.contains_key(parent) {
                return Err(ProbError::UnknownParent { node: node.id.clone(), parent: parent.clone() });
            }
        }
        let handle = NodeHandle(self.nodes.len());
        self.index.insert(node.id.clone(), handle);
        self.nodes.push(node);
        Ok(handle)
    }

    /// Build a registry from nodes given in any order, validating that the
    /// parent relation is acyclic. Nodes are stored in topological order.
    pub fn build(nodes: Vec<NodeRef>) -> Result<Self, ProbError> {
        let mut by_id: BTreeMap<&str, &NodeRef> = BTreeMap::new();
        for node in &nodes {
            check_spec(node)?;
            if by_id.insert(node.id.as_str(), node).is_some() {
                return Err(ProbError::DuplicateId(node.id.clone()));
            }
        }
        for node in &nodes {
            for parent in &node.parent_ids {
                if !by_id.contains_key(parent.as_str()) {
                    return Err(ProbError::UnknownParent {
                        node: node.id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }

        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Active,
            Done,
        }
        let position: HashMap<&str, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut marks = vec![Mark::Fresh; nodes.len()];
        let mut order = Vec::with_capacity(nodes.len());
        let mut stack: Vec<usize> = Vec::new();

        fn visit(
            i: usize,
            nodes: &[NodeRef],
            position: &HashMap<&str, usize>,
            marks: &mut [Mark],
            stack: &mut Vec<usize>,
            order: &mut Vec<usize>,
        ) -> Result<(), ProbError> {
            match marks[i] {
                Mark::Done => return Ok(()),
                Mark::Active => {
                    let start = stack.iter().position(|&s| s == i).unwrap_or(0);
                    let mut cycle: Vec<String> =
                        stack[start..].iter().map(|&s| nodes[s].id.clone()).collect();
                    cycle.push(nodes[i].id.clone());
                    return Err(ProbError::CycleDetected(cycle));
                }
                Mark::Fresh => {}
            }
            marks[i] = Mark::Active;
            stack.push(i);
            for parent in &nodes[i].parent_ids {
                visit(position[parent.as_str()], nodes, position, marks, stack, order)?;
            }
            stack.pop();
            marks[i] = Mark::Done;
            order.push(i);
            Ok(())
        }

        for i in 0..nodes.len() {
            visit(i, &nodes, &position, &mut marks, &mut stack, &mut order)?;
        }

        let mut slots: Vec<Option<NodeRef>> = nodes.into_iter().map(Some).collect();
        let mut registry = Registry::new();
        for i in order {
            let node = slots[i].take().expect("each node visited once");
            let handle = NodeHandle(registry.nodes.len());
            registry.index.insert(node.id.clone(), handle);
            registry.nodes.push(node);
        }
        Ok(registry)
    }

    pub fn handle(&self, id: &str) -> Option<NodeHandle> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&NodeRef> {
        self.handle(id).map(|h| &self.nodes[h.0])
    }

    pub fn node(&self, handle: NodeHandle) -> &NodeRef {
        &self.nodes[handle.0]
    }

    pub fn nodes(&self) -> &[NodeRef] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Hyperparameters for every node, dense over template indices.
#[derive(Clone, Debug)]
pub struct ParamTable {
    ids: Vec<String>,
    columns: Vec<Vec<Option<DistributionSpec>>>,
    templates: usize,
}

impl ParamTable {
    /// `per_template[t]` maps node id to that template's hyperparameters.
    pub fn from_templates(registry: &Registry, per_template: &[&BTreeMap<String, DistributionSpec>]) -> Self {
        let columns = registry
            .nodes()
            .iter()
            .map(|node| per_template.iter().map(|params| params.get(&node.id).cloned()).collect())
            .collect();
        Self {
            ids: registry.nodes().iter().map(|n| n.id.clone()).collect(),
            columns,
            templates: per_template.len(),
        }
    }

    pub fn templates(&self) -> usize {
        self.templates
    }

    pub fn spec(&self, handle: NodeHandle, template: usize) -> Result<&DistributionSpec, ProbError> {
        self.columns
            .get(handle.0)
            .and_then(|col| col.get(template))
            .and_then(Option::as_ref)
            .ok_or_else(|| ProbError::MissingTemplateParam {
                node: self.ids.get(handle.0).cloned().unwrap_or_default(),
                template,
            })
    }
}

/// A drawn value together with the intermediate parameters that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub value: Value,
    pub realized: Realized,
}

/// Draw a node's parameters from its template's priors, then one value from
/// the resulting conditional.
pub fn sample_hierarchical(
    table: &ParamTable,
    node: NodeHandle,
    template: usize,
    rng: &mut RngStream,
    dim: Option<usize>,
) -> Result<Sample, ProbError> {
    let spec = table.spec(node, template)?;
    let realized = spec.draw_params(rng, dim);
    let value = realized.draw(rng);
    Ok(Sample { value, realized })
}
