//! Node-graph JSON. Node and edge order is the construction order, so the
//! export of a given project is stable.

use super::IoError;
use crate::nodegraph::NodeGraph;

pub fn export_node_graph(g: &NodeGraph) -> String {
    let mut s = serde_json::to_string_pretty(g).expect("node graphs always serialize");
    s.push('\n');
    s
}

pub fn import_node_graph(text: &str) -> Result<NodeGraph, IoError> {
    serde_json::from_str(text)
        .map_err(|e| IoError::schema(format!("line {}", e.line()), e.to_string()))
}
