//! Chain-level adjacency: the shared substrate for validation, scheduling
//! and normalization.

use std::collections::VecDeque;

use crate::model::Project;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("BAD_INDEX: chain {from} references chain {to}, but there are only {len} chains")]
    BadIndex { from: usize, to: usize, len: usize },
    #[error("CYCLE_DETECTED: chain graph is not acyclic")]
    Cycle,
}

/// Adjacency lists over chain indices, successors sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainDag {
    pub succ: Vec<Vec<usize>>,
}

impl ChainDag {
    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn preds(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.succ.len()];
        for (u, vs) in self.succ.iter().enumerate() {
            for &v in vs {
                preds[v].push(u);
            }
        }
        preds
    }

    /// Kahn layering: layer 0 holds in-degree-zero nodes, each later layer
    /// the nodes whose last predecessor was removed in the previous wave.
    pub fn kahn_layers(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.succ.len();
        let mut indeg = vec![0usize; n];
        for vs in &self.succ {
            for &v in vs {
                indeg[v] += 1;
            }
        }
        let mut layer = vec![0usize; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for &v in &self.succ[u] {
                layer[v] = layer[v].max(layer[u] + 1);
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        if seen == n {
            Ok(layer)
        } else {
            Err(GraphError::Cycle)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.kahn_layers().is_ok()
    }

    /// Nodes reachable from any of `starts`, following edges forward.
    pub fn reachable_from(&self, starts: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut seen = vec![false; self.succ.len()];
        let mut stack: Vec<usize> = starts.into_iter().filter(|&s| s < seen.len()).collect();
        while let Some(u) = stack.pop() {
            if std::mem::replace(&mut seen[u], true) {
                continue;
            }
            stack.extend(self.succ[u].iter().copied().filter(|&v| !seen[v]));
        }
        seen
    }
}

/// Build the chain adjacency of `project`.
///
/// Main edges (`next_chains`) are always present; a sidechain edge runs from
/// the source chain to the chain holding the consuming effect and is added
/// only when `include_sidechain` is set.
pub fn chain_dag(project: &Project, include_sidechain: bool) -> Result<ChainDag, GraphError> {
    let n = project.fx_chains.len();
    let mut succ = vec![Vec::new(); n];
    for (i, chain) in project.fx_chains.iter().enumerate() {
        for &t in chain.next_chains.keys() {
            if t >= n {
                return Err(GraphError::BadIndex {
                    from: i,
                    to: t,
                    len: n,
                });
            }
            succ[i].push(t);
        }
        if include_sidechain {
            for fx in &chain.fx_chain {
                if let Some(s) = fx.sidechain_input {
                    if s >= n {
                        return Err(GraphError::BadIndex {
                            from: i,
                            to: s,
                            len: n,
                        });
                    }
                    succ[s].push(i);
                }
            }
        }
    }
    for vs in &mut succ {
        vs.sort_unstable();
    }
    Ok(ChainDag { succ })
}
