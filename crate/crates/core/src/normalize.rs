//! Rewrites a general mixing graph into single-output projects that pass the
//! validator while rendering the same audio.
//!
//! Every rewrite is built from one primitive, [`Traced::cut`]: chain `c` is
//! split at effect position `k`, the head keeps the stems and incoming edges,
//! the tail (appended as a new chain) takes the remaining effects and the
//! outgoing edges, and the two are joined with gain 1. Cutting at 0 leaves
//! an empty head, which is how pass-through chains are inserted without
//! touching any splitter's target order.

use std::collections::BTreeMap;

use crate::graph::{chain_dag, GraphError};
use crate::model::{GeneralMixGraph, Project};
use crate::validate::SPLITTER_BANDS;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("CYCLE_DETECTED: main and sidechain edges form a cycle")]
    Cycle,
    #[error("NO_INPUT: the graph has no input audio")]
    NoInput,
    #[error("UNREPRESENTABLE: {0}")]
    Unrepresentable(String),
}

/// One normalized project plus the chain it renders and where its chains came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub project: Project,
    /// Output chain of the source graph this project reproduces.
    pub output: usize,
    /// For each chain, the source chain whose effects it carries; `None` for
    /// inserted pass-through chains.
    pub origin: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
struct Traced {
    g: Project,
    origin: Vec<Option<usize>>,
}

impl Traced {
    fn new(g: &GeneralMixGraph) -> Result<Self, NormalizeError> {
        let dag = chain_dag(g, true)?;
        if !dag.is_acyclic() {
            return Err(NormalizeError::Cycle);
        }
        if g.input_audios.is_empty() {
            return Err(NormalizeError::NoInput);
        }
        let main = chain_dag(g, false)?;
        let fed = main.reachable_from(g.input_audios.iter().map(|a| a.input_fx_chain));
        if let Some(c) = fed.iter().position(|f| !f) {
            return Err(NormalizeError::Unrepresentable(format!("chain {c} is not fed by any input")));
        }
        Ok(Traced { g: g.clone(), origin: (0..g.fx_chains.len()).map(Some).collect() })
    }

    /// Split chain `c` before effect `k`; returns the tail's index.
    ///
    /// Sidechain taps on `c` read the tail (the chain's full output) unless
    /// `taps_stay` is set, in which case they read the head.
    fn cut(&mut self, c: usize, k: usize, taps_stay: bool) -> usize {
        let t = self.g.fx_chains.len();
        let chain = &mut self.g.fx_chains[c];
        let mut tail = crate::model::ChainDefinition::new(chain.fx_chain.split_off(k));
        tail.next_chains = std::mem::take(&mut chain.next_chains);
        chain.next_chains.insert(t, 1.0);
        let head_empty = chain.fx_chain.is_empty();
        self.g.fx_chains.push(tail);
        self.origin.push(self.origin[c]);
        if head_empty {
            self.origin[c] = None;
        }
        if !taps_stay {
            for fx in self.g.fx_chains.iter_mut().flat_map(|ch| ch.fx_chain.iter_mut()) {
                if fx.sidechain_input == Some(c) {
                    fx.sidechain_input = Some(t);
                }
            }
        }
        t
    }

    fn is_tap_source(&self, c: usize) -> bool {
        self.g.fx_chains.iter().flat_map(|ch| &ch.fx_chain).any(|fx| fx.sidechain_input == Some(c))
    }

    fn preds(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.g.fx_chains.len()];
        for (u, chain) in self.g.fx_chains.iter().enumerate() {
            for &v in chain.next_chains.keys() {
                preds[v].push(u);
            }
        }
        preds
    }

    fn split_fed(&self, c: usize, preds: &[Vec<usize>]) -> bool {
        self.g.stems_into(c).next().is_none()
            && preds[c].len() == 1
            && self.g.fx_chains[preds[c][0]].ends_with_splitter()
    }

    fn split_sidechains(&mut self) {
        for c in 0..self.g.fx_chains.len() {
            let mut cur = c;
            loop {
                let positions: Vec<usize> = self.g.fx_chains[cur].sidechain_positions().collect();
                let [first, _, ..] = positions[..] else { break };
                cur = self.cut(cur, first + 1, false);
            }
        }
    }

    fn hoist_splitters(&mut self) {
        for c in 0..self.g.fx_chains.len() {
            let mut cur = c;
            while let Some(k) = self.g.fx_chains[cur]
                .fx_chain
                .iter()
                .position(|fx| fx.is_splitter())
                .filter(|&k| k + 1 < self.g.fx_chains[cur].fx_chain.len())
            {
                cur = self.cut(cur, k + 1, false);
            }
        }
        // a tapped chain ending in a splitter: the tap reads the pre-split signal
        for c in 0..self.g.fx_chains.len() {
            if self.g.fx_chains[c].ends_with_splitter() && self.is_tap_source(c) {
                let k = self.g.fx_chains[c].fx_chain.len() - 1;
                self.cut(c, k, true);
            }
        }
        // an output chain ending in a splitter gets a pass-through successor
        for c in 0..self.g.fx_chains.len() {
            let chain = &self.g.fx_chains[c];
            if chain.ends_with_splitter() && chain.next_chains.is_empty() {
                let k = chain.fx_chain.len();
                self.cut(c, k, false);
                let t = self.g.fx_chains.len() - 1;
                self.origin[t] = None;
            }
        }
    }

    /// Move the effects of split-fed sidechain sources behind an empty chain.
    fn isolate_split_sources(&mut self) {
        let preds = self.preds();
        for c in 0..preds.len() {
            if self.is_tap_source(c) && self.split_fed(c, &preds) {
                self.cut(c, 0, false);
            }
        }
    }

    /// Least layer assignment with consumers in their source's layer.
    fn solve_layers(&self) -> Result<Vec<i64>, NormalizeError> {
        let n = self.g.fx_chains.len();
        let mut constraints = Vec::new();
        for (u, chain) in self.g.fx_chains.iter().enumerate() {
            constraints.extend(chain.next_chains.keys().map(|&v| (u, v, 1)));
            for s in chain.fx_chain.iter().filter_map(|fx| fx.sidechain_input) {
                constraints.push((s, u, 0));
                constraints.push((u, s, 0));
            }
        }
        let mut lam = vec![0i64; n];
        for round in 0..=n {
            let mut changed = false;
            for &(a, b, w) in &constraints {
                if lam[a] + w > lam[b] {
                    lam[b] = lam[a] + w;
                    changed = true;
                }
            }
            if !changed {
                return Ok(lam);
            }
            if round == n {
                break;
            }
        }
        Err(NormalizeError::Unrepresentable(
            "a sidechain consumer is downstream of its own source".into(),
        ))
    }

    /// Delay chains that must sit deeper than their inputs put them.
    fn align_layers(&mut self) -> Result<(), NormalizeError> {
        let lam = self.solve_layers()?;
        let preds = self.preds();
        for v in 0..lam.len() {
            let natural = preds[v].iter().map(|&u| lam[u] + 1).max().unwrap_or(0);
            let mut cur = v;
            for _ in natural..lam[v] {
                cur = self.cut(cur, 0, false);
            }
        }
        Ok(())
    }

    fn check_fanout(&self) -> Result<(), NormalizeError> {
        for (c, chain) in self.g.fx_chains.iter().enumerate() {
            if chain.ends_with_splitter() && chain.next_chains.len() > SPLITTER_BANDS {
                return Err(NormalizeError::Unrepresentable(format!(
                    "splitter chain {c} feeds {} chains",
                    chain.next_chains.len()
                )));
            }
        }
        Ok(())
    }

    /// The main-edge cone of output `o` as its own project.
    fn extract(&self, o: usize) -> Result<Traced, NormalizeError> {
        let n = self.g.fx_chains.len();
        let preds = self.preds();
        let mut keep = vec![false; n];
        let mut stack = vec![o];
        keep[o] = true;
        while let Some(v) = stack.pop() {
            for &u in &preds[v] {
                if !keep[u] {
                    keep[u] = true;
                    stack.push(u);
                }
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut next = 0;
        for c in (0..n).filter(|&c| keep[c]) {
            map[c] = next;
            next += 1;
        }
        let mut chains = Vec::with_capacity(next);
        let mut origin = Vec::with_capacity(next);
        for c in (0..n).filter(|&c| keep[c]) {
            let mut chain = self.g.fx_chains[c].clone();
            let inside: BTreeMap<usize, f64> =
                chain.next_chains.iter().filter(|(t, _)| keep[**t]).map(|(&t, &g)| (map[t], g)).collect();
            if chain.ends_with_splitter() && inside.len() != chain.next_chains.len() {
                return Err(NormalizeError::Unrepresentable(format!(
                    "splitter chain {c} sends bands to more than one output"
                )));
            }
            if !chain.ends_with_splitter() && inside.len() > 1 {
                return Err(NormalizeError::Unrepresentable(format!(
                    "chain {c} fans out to {} chains that reach the same output",
                    inside.len()
                )));
            }
            chain.next_chains = inside;
            for fx in &mut chain.fx_chain {
                if let Some(s) = fx.sidechain_input {
                    if !keep[s] {
                        return Err(NormalizeError::Unrepresentable(format!(
                            "sidechain source {s} does not reach output {o}"
                        )));
                    }
                    fx.sidechain_input = Some(map[s]);
                }
            }
            chains.push(chain);
            origin.push(self.origin[c]);
        }
        let mut project = self.g.clone();
        project.fx_chains = chains;
        project.input_audios = self
            .g
            .input_audios
            .iter()
            .filter(|a| keep[a.input_fx_chain])
            .map(|a| crate::model::InputAudio { input_fx_chain: map[a.input_fx_chain], ..a.clone() })
            .collect();
        Ok(Traced { g: project, origin })
    }
}

/// Cut chains so each holds at most one sidechain-driven effect.
pub fn split_sidechain_chains(g: &GeneralMixGraph) -> Result<GeneralMixGraph, NormalizeError> {
    let mut t = Traced::new(g)?;
    t.split_sidechains();
    Ok(t.g)
}

/// Cut after every intermediate splitter, detach splitters from tapped
/// chains and give splitter-terminal outputs a pass-through successor.
pub fn hoist_splitters(g: &GeneralMixGraph) -> Result<GeneralMixGraph, NormalizeError> {
    let mut t = Traced::new(g)?;
    t.hoist_splitters();
    Ok(t.g)
}

/// Route split-fed sidechain sources through an empty chain and pad
/// chains so every sidechain consumer shares its source's layer.
pub fn insert_pseudo_layers(g: &GeneralMixGraph) -> Result<GeneralMixGraph, NormalizeError> {
    let mut t = Traced::new(g)?;
    t.isolate_split_sources();
    t.align_layers()?;
    Ok(t.g)
}

/// One project per output chain, each holding the output's upstream cone.
pub fn expand_multi_output(g: &GeneralMixGraph) -> Result<Vec<Project>, NormalizeError> {
    Ok(expand(Traced::new(g)?)?.into_iter().map(|n| n.project).collect())
}

fn expand(t: Traced) -> Result<Vec<Normalized>, NormalizeError> {
    t.check_fanout()?;
    let preds = t.preds();
    // source output of each current output: its own origin, or that of the
    // chain an inserted pass-through follows
    let mut outputs: Vec<(usize, usize)> = t
        .g
        .output_chains()
        .into_iter()
        .map(|o| {
            let mut c = o;
            while t.origin[c].is_none() && preds[c].len() == 1 {
                c = preds[c][0];
            }
            (t.origin[c].unwrap_or(o), o)
        })
        .collect();
    if outputs.is_empty() {
        return Err(NormalizeError::Unrepresentable("the graph has no output chain".into()));
    }
    outputs.sort_unstable();
    let many = outputs.len() > 1;
    outputs
        .iter()
        .enumerate()
        .map(|(k, &(source, o))| {
            let mut part = t.extract(o)?;
            part.align_layers()?;
            if many {
                part.g.output_audio = suffixed(&t.g.output_audio, k);
            }
            Ok(Normalized { project: part.g, output: source, origin: part.origin })
        })
        .collect()
}

fn suffixed(name: &str, k: usize) -> String {
    match name.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() && !ext.contains('/') => format!("{stem}_out{k}.{ext}"),
        _ => format!("{name}_out{k}"),
    }
}

/// Full normalization, keeping the chain origin map.
pub fn normalize_traced(g: &GeneralMixGraph) -> Result<Vec<Normalized>, NormalizeError> {
    let mut t = Traced::new(g)?;
    t.split_sidechains();
    t.hoist_splitters();
    t.isolate_split_sources();
    t.align_layers()?;
    expand(t)
}

/// Rewrite `g` into validator-clean projects, one per output chain.
pub fn normalize(g: &GeneralMixGraph) -> Result<Vec<Project>, NormalizeError> {
    Ok(normalize_traced(g)?.into_iter().map(|n| n.project).collect())
}
