//! Node-level expansion of a project: one node per stem and per effect,
//! typed signal edges with linear gains.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::model::{FxType, Project};
use crate::registry::{PluginRegistry, RegistryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Audio,
    Fx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeType {
    SendSignal,
    SplitSignal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeLabel {
    Main,
    Control,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    pub label: String,
    /// Stem path, audio nodes only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fx_type: Option<FxType>,
    /// Resolved normalized parameter values, fx nodes only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<IndexMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    #[serde(rename = "type")]
    pub edge_type: EdgeType,
    pub label: EdgeLabel,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl NodeGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn edges_labeled(&self, label: EdgeLabel) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.label == label)
    }

    /// Kahn check over the node edges.
    pub fn is_acyclic(&self) -> bool {
        let index: IndexMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            match (index.get(e.src.as_str()), index.get(e.dst.as_str())) {
                (Some(&a), Some(&b)) => succ[a].push(b),
                _ => return false,
            }
        }
        crate::graph::ChainDag { succ }.is_acyclic()
    }
}

/// Identifier of effect `k` of chain `c`; empty chains use [`mix_node_id`].
pub fn fx_node_id(chain: usize, k: usize) -> String {
    format!("fx:{chain}:{k}")
}

pub fn mix_node_id(chain: usize) -> String {
    format!("fx:{chain}:mix")
}

pub fn audio_node_id(input: usize) -> String {
    format!("audio:{input}")
}

/// Expand `project` into its node graph.
///
/// Empty chains become a single pass-through node of type `mix`.
pub fn to_node_graph(
    project: &Project,
    registry: &PluginRegistry,
) -> Result<NodeGraph, RegistryError> {
    let mut g = NodeGraph::default();
    let first = |c: usize| {
        if project.fx_chains[c].fx_chain.is_empty() {
            mix_node_id(c)
        } else {
            fx_node_id(c, 0)
        }
    };
    let last = |c: usize| match project.fx_chains[c].fx_chain.len() {
        0 => mix_node_id(c),
        n => fx_node_id(c, n - 1),
    };

    for (i, a) in project.input_audios.iter().enumerate() {
        g.nodes.push(Node {
            id: audio_node_id(i),
            node_type: NodeType::Audio,
            label: a.audio_type.clone(),
            instance: Some(a.audio_path.clone()),
            fx_type: None,
            params: None,
        });
    }
    for (c, chain) in project.fx_chains.iter().enumerate() {
        if chain.fx_chain.is_empty() {
            g.nodes.push(Node {
                id: mix_node_id(c),
                node_type: NodeType::Fx,
                label: "mix".into(),
                instance: None,
                fx_type: Some(FxType::Mix),
                params: Some(IndexMap::new()),
            });
        }
        for (k, fx) in chain.fx_chain.iter().enumerate() {
            let d = registry.lookup(&fx.fx_name)?;
            let resolved = registry.resolve(fx)?;
            let params = d
                .params
                .iter()
                .zip(resolved.values)
                .map(|(p, v)| (p.name.clone(), v))
                .collect();
            g.nodes.push(Node {
                id: fx_node_id(c, k),
                node_type: NodeType::Fx,
                label: fx.fx_name.clone(),
                instance: None,
                fx_type: Some(fx.fx_type),
                params: Some(params),
            });
        }
    }

    let send = |src: String, dst: String, label: EdgeLabel, gain: f64| Edge {
        src,
        dst,
        edge_type: EdgeType::SendSignal,
        label,
        gain,
    };
    for (i, a) in project.input_audios.iter().enumerate() {
        g.edges.push(send(
            audio_node_id(i),
            first(a.input_fx_chain),
            EdgeLabel::Main,
            1.0,
        ));
    }
    for (c, chain) in project.fx_chains.iter().enumerate() {
        for k in 1..chain.fx_chain.len() {
            g.edges.push(send(
                fx_node_id(c, k - 1),
                fx_node_id(c, k),
                EdgeLabel::Main,
                1.0,
            ));
        }
        let edge_type = if chain.ends_with_splitter() {
            EdgeType::SplitSignal
        } else {
            EdgeType::SendSignal
        };
        for (&t, &gain) in &chain.next_chains {
            g.edges.push(Edge {
                src: last(c),
                dst: first(t),
                edge_type,
                label: EdgeLabel::Main,
                gain,
            });
        }
    }
    for (c, chain) in project.fx_chains.iter().enumerate() {
        for (k, fx) in chain.fx_chain.iter().enumerate() {
            if let Some(s) = fx.sidechain_input {
                g.edges
                    .push(send(last(s), fx_node_id(c, k), EdgeLabel::Control, 1.0));
            }
        }
    }
    Ok(g)
}
