//! Linear-Gaussian structural causal models.
//!
//! Every node is `X_v = Σ_{u → v} b_uv X_u + σ_v ε_v` with independent
//! standard-normal `ε_v`.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;
use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Table;
use crate::error::{Result, RfiError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmNode {
    pub name: String,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmEdge {
    pub from: String,
    pub to: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGraph {
    nodes: Vec<ScmNode>,
    #[serde(default)]
    edges: Vec<ScmEdge>,
}

/// A validated acyclic linear-Gaussian SCM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct ScmGraph {
    nodes: Vec<ScmNode>,
    edges: Vec<ScmEdge>,
    /// Node indices in a topological order.
    order: Vec<usize>,
}

impl TryFrom<RawGraph> for ScmGraph {
    type Error = RfiError;

    fn try_from(raw: RawGraph) -> Result<Self> {
        ScmGraph::new(raw.nodes, raw.edges)
    }
}

impl From<ScmGraph> for RawGraph {
    fn from(g: ScmGraph) -> Self {
        RawGraph {
            nodes: g.nodes,
            edges: g.edges,
        }
    }
}

impl ScmGraph {
    pub fn new(nodes: Vec<ScmNode>, edges: Vec<ScmEdge>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.name.as_str(), i).is_some() {
                return Err(RfiError::Graph(format!("duplicate node `{}`", node.name)));
            }
            if !(node.sigma >= 0.0 && node.sigma.is_finite()) {
                return Err(RfiError::Graph(format!(
                    "node `{}` has invalid noise scale {}",
                    node.name, node.sigma
                )));
            }
        }
        let mut dag = DiGraph::<usize, f64>::new();
        let ids: Vec<_> = (0..nodes.len()).map(|i| dag.add_node(i)).collect();
        for e in &edges {
            let lookup = |n: &str| {
                index
                    .get(n)
                    .copied()
                    .ok_or_else(|| RfiError::Graph(format!("edge refers to unknown node `{n}`")))
            };
            let (a, b) = (lookup(&e.from)?, lookup(&e.to)?);
            if !e.coefficient.is_finite() {
                return Err(RfiError::Graph(format!(
                    "edge {} -> {} has non-finite coefficient",
                    e.from, e.to
                )));
            }
            dag.add_edge(ids[a], ids[b], e.coefficient);
        }
        let order = toposort(&dag, None)
            .map_err(|cycle| {
                RfiError::Graph(format!(
                    "cycle through node `{}`",
                    nodes[dag[cycle.node_id()]].name
                ))
            })?
            .into_iter()
            .map(|id| dag[id])
            .collect();
        Ok(Self { nodes, edges, order })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| RfiError::Parse(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("graph serializes")
    }

    pub fn nodes(&self) -> &[ScmNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[ScmEdge] {
        &self.edges
    }

    pub fn names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn topological_order(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.nodes[i].name.as_str()).collect()
    }

    fn index_of(&self, name: &str) -> usize {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .expect("edge endpoints validated at construction")
    }

    /// Coefficient matrix with `B[(child, parent)] = b`.
    fn coefficient_matrix(&self) -> DMatrix<f64> {
        let k = self.nodes.len();
        let mut b = DMatrix::zeros(k, k);
        for e in &self.edges {
            b[(self.index_of(&e.to), self.index_of(&e.from))] += e.coefficient;
        }
        b
    }
}

/// Ancestral sampling of `n` rows; columns follow the node declaration
/// order.
pub fn sample_scm(graph: &ScmGraph, n: usize, seed: u64) -> Result<Table> {
    if n == 0 {
        return Err(RfiError::InsufficientData("cannot sample zero rows".into()));
    }
    let k = graph.nodes.len();
    let b = graph.coefficient_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = vec![Vec::new(); k];
    for &v in &graph.order {
        let sigma = graph.nodes[v].sigma;
        let parents: Vec<(usize, f64)> = (0..k)
            .filter(|&u| b[(v, u)] != 0.0)
            .map(|u| (u, b[(v, u)]))
            .collect();
        let col: Vec<f64> = (0..n)
            .map(|r| {
                let z: f64 = StandardNormal.sample(&mut rng);
                parents.iter().map(|&(u, c)| c * columns[u][r]).sum::<f64>() + sigma * z
            })
            .collect();
        columns[v] = col;
    }
    Table::new(graph.names(), columns)
}

/// Exact covariance `(I − B)⁻¹ D (I − B)⁻ᵀ` of the induced Gaussian, indexed
/// by node declaration order.
pub fn analytic_covariance(graph: &ScmGraph) -> DMatrix<f64> {
    let k = graph.nodes.len();
    let i_minus_b = DMatrix::identity(k, k) - graph.coefficient_matrix();
    let inv = i_minus_b
        .try_inverse()
        .expect("I − B is invertible for an acyclic graph");
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        k,
        graph.nodes.iter().map(|n| n.sigma * n.sigma),
    ));
    let cov = &inv * d * inv.transpose();
    (&cov + cov.transpose()) * 0.5
}

pub fn builtin_experiment_a() -> ScmGraph {
    ScmGraph::from_toml_str(include_str!("../graphs/experiment_a.toml"))
        .expect("bundled graph is valid")
}

pub fn builtin_experiment_b() -> ScmGraph {
    ScmGraph::from_toml_str(include_str!("../graphs/experiment_b.toml"))
        .expect("bundled graph is valid")
}

/// Looks up a bundled graph by name.
pub fn builtin(name: &str) -> Option<ScmGraph> {
    match name {
        "experiment_a" => Some(builtin_experiment_a()),
        "experiment_b" => Some(builtin_experiment_b()),
        _ => None,
    }
}
