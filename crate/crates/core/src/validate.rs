//! Structural validation of projects.
//!
//! Validation never fails: every well-formed [`Project`] yields a
//! [`ValidationReport`] listing each violated rule with a stable code and a
//! location.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::graph::ChainDag;
use crate::model::{splitter_band_assignment, Project};
use crate::registry::{PluginRegistry, RegistryError};

/// Largest admissible connection gain (linear amplitude).
pub const MAX_GAIN: f64 = 16.0;

/// Bands produced by the splitter plugins; bounds a splitter's fan-out.
pub const SPLITTER_BANDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleCode {
    Acyclicity,
    SingleOutput,
    NoInput,
    SplitterNotLast,
    MultiOutNoSplitter,
    OutputEndsSplitter,
    MultiSidechainInChain,
    SidechainFromSplitter,
    SidechainLayerMismatch,
    BadIndex,
    BadGain,
    ParamOffGrid,
    /// A splitter-terminal chain with more targets than bands.
    SplitterFanout,
    UnknownPlugin,
    /// `preset_index` and `params` both set.
    PresetConflict,
}

impl RuleCode {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleCode::Acyclicity => "ACYCLICITY",
            RuleCode::SingleOutput => "SINGLE_OUTPUT",
            RuleCode::NoInput => "NO_INPUT",
            RuleCode::SplitterNotLast => "SPLITTER_NOT_LAST",
            RuleCode::MultiOutNoSplitter => "MULTI_OUT_NO_SPLITTER",
            RuleCode::OutputEndsSplitter => "OUTPUT_ENDS_SPLITTER",
            RuleCode::MultiSidechainInChain => "MULTI_SIDECHAIN_IN_CHAIN",
            RuleCode::SidechainFromSplitter => "SIDECHAIN_FROM_SPLITTER",
            RuleCode::SidechainLayerMismatch => "SIDECHAIN_LAYER_MISMATCH",
            RuleCode::BadIndex => "BAD_INDEX",
            RuleCode::BadGain => "BAD_GAIN",
            RuleCode::ParamOffGrid => "PARAM_OFF_GRID",
            RuleCode::SplitterFanout => "SPLITTER_FANOUT",
            RuleCode::UnknownPlugin => "UNKNOWN_PLUGIN",
            RuleCode::PresetConflict => "PRESET_CONFLICT",
        }
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a violation was found. Absent fields mean "whole project" or
/// "whole chain".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<usize>,
}

impl Location {
    pub fn project() -> Self {
        Location::default()
    }
    pub fn chain(chain: usize) -> Self {
        Location {
            chain: Some(chain),
            ..Default::default()
        }
    }
    pub fn fx(chain: usize, fx: usize) -> Self {
        Location {
            chain: Some(chain),
            fx: Some(fx),
            input: None,
        }
    }
    pub fn input(input: usize) -> Self {
        Location {
            input: Some(input),
            ..Default::default()
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(c) = self.chain {
            parts.push(format!("chain {c}"));
        }
        if let Some(x) = self.fx {
            parts.push(format!("fx {x}"));
        }
        if let Some(i) = self.input {
            parts.push(format!("input {i}"));
        }
        if parts.is_empty() {
            f.write_str("project")
        } else {
            f.write_str(&parts.join(" / "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: RuleCode,
    pub location: Location,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<RuleCode> {
        let mut c: Vec<_> = self.violations.iter().map(|v| v.code).collect();
        c.sort();
        c
    }

    pub fn has(&self, code: RuleCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    /// Distinct codes, for "rejected with exactly this code" checks.
    pub fn distinct_codes(&self) -> Vec<RuleCode> {
        let mut c = self.codes();
        c.dedup();
        c
    }

    fn push(&mut self, code: RuleCode, location: Location, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            location,
            message: message.into(),
        });
    }
}

/// Check every structural rule on `project`.
///
/// With a registry, effect parameters are also checked against the plugin
/// grids (`PARAM_OFF_GRID`), preset indices against the preset lists, and
/// plugin names against the inventory.
pub fn validate_project(project: &Project, registry: Option<&PluginRegistry>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = project.fx_chains.len();

    // Index and gain checks first; the graph checks below skip bad references.
    for (ci, chain) in project.fx_chains.iter().enumerate() {
        for (&t, &g) in &chain.next_chains {
            if t >= n {
                report.push(
                    RuleCode::BadIndex,
                    Location::chain(ci),
                    format!("next_chains target {t} out of range"),
                );
            }
            if !(g.is_finite() && g > 0.0 && g <= MAX_GAIN) {
                report.push(
                    RuleCode::BadGain,
                    Location::chain(ci),
                    format!("gain {g} to chain {t} outside (0, {MAX_GAIN}]"),
                );
            }
        }
        for (xi, fx) in chain.fx_chain.iter().enumerate() {
            if let Some(s) = fx.sidechain_input {
                if s >= n {
                    report.push(
                        RuleCode::BadIndex,
                        Location::fx(ci, xi),
                        format!("sidechain_input {s} out of range"),
                    );
                }
            }
        }
    }
    for (ii, input) in project.input_audios.iter().enumerate() {
        if input.input_fx_chain >= n {
            report.push(
                RuleCode::BadIndex,
                Location::input(ii),
                format!("input_FxChain {} out of range", input.input_fx_chain),
            );
        }
    }

    let mut main = vec![Vec::new(); n];
    let mut full = vec![Vec::new(); n];
    for (ci, chain) in project.fx_chains.iter().enumerate() {
        for &t in chain.next_chains.keys().filter(|&&t| t < n) {
            main[ci].push(t);
            full[ci].push(t);
        }
        for s in chain
            .fx_chain
            .iter()
            .filter_map(|fx| fx.sidechain_input)
            .filter(|&s| s < n)
        {
            full[s].push(ci);
        }
    }
    let main = ChainDag { succ: main };
    let full = ChainDag { succ: full };
    let acyclic = full.is_acyclic();
    if !acyclic {
        report.push(
            RuleCode::Acyclicity,
            Location::project(),
            "chain graph (main + sidechain edges) has a cycle",
        );
    }

    // I/O
    let outputs = project.output_chains();
    if outputs.len() != 1 {
        report.push(
            RuleCode::SingleOutput,
            Location::project(),
            format!("expected exactly one output chain, found {}", outputs.len()),
        );
    }
    if project.input_audios.is_empty() {
        report.push(
            RuleCode::NoInput,
            Location::project(),
            "project has no input audio",
        );
    } else {
        let fed = main.reachable_from(project.input_audios.iter().map(|a| a.input_fx_chain));
        for (ci, reached) in fed.iter().enumerate() {
            if !reached {
                report.push(
                    RuleCode::NoInput,
                    Location::chain(ci),
                    "chain is not reachable from any input",
                );
            }
        }
    }

    // Splitter rules
    for (ci, chain) in project.fx_chains.iter().enumerate() {
        let last = chain.fx_chain.len().saturating_sub(1);
        for (xi, fx) in chain.fx_chain.iter().enumerate() {
            if fx.is_splitter() && xi != last {
                report.push(
                    RuleCode::SplitterNotLast,
                    Location::fx(ci, xi),
                    "splitter is not the last effect",
                );
            }
        }
        if chain.next_chains.len() > 1 && !chain.ends_with_splitter() {
            report.push(
                RuleCode::MultiOutNoSplitter,
                Location::chain(ci),
                format!(
                    "{} outgoing connections without a terminal splitter",
                    chain.next_chains.len()
                ),
            );
        }
        if chain.ends_with_splitter() && chain.next_chains.len() > SPLITTER_BANDS {
            report.push(
                RuleCode::SplitterFanout,
                Location::chain(ci),
                format!(
                    "splitter feeds {} chains, at most {SPLITTER_BANDS} bands",
                    chain.next_chains.len()
                ),
            );
        }
        if chain.next_chains.is_empty() && chain.ends_with_splitter() {
            report.push(
                RuleCode::OutputEndsSplitter,
                Location::chain(ci),
                "output chain ends with a splitter",
            );
        }
    }

    // Sidechain rules
    let preds = main.preds();
    let split_fed = |c: usize| {
        project.stems_into(c).next().is_none()
            && preds[c].len() == 1
            && project.fx_chains[preds[c][0]].ends_with_splitter()
    };
    let layers = if acyclic {
        main.kahn_layers().ok()
    } else {
        None
    };
    for (ci, chain) in project.fx_chains.iter().enumerate() {
        let positions: Vec<usize> = chain.sidechain_positions().collect();
        if positions.len() > 1 {
            report.push(
                RuleCode::MultiSidechainInChain,
                Location::chain(ci),
                format!("{} sidechain-driven effects in one chain", positions.len()),
            );
        }
        for xi in positions {
            let Some(src) = chain.fx_chain[xi].sidechain_input.filter(|&s| s < n) else {
                continue;
            };
            if split_fed(src) || project.fx_chains[src].ends_with_splitter() {
                report.push(
                    RuleCode::SidechainFromSplitter,
                    Location::fx(ci, xi),
                    format!("sidechain source chain {src} is a splitter output"),
                );
            }
            if let Some(layers) = &layers {
                if layers[src] != layers[ci] {
                    report.push(
                        RuleCode::SidechainLayerMismatch,
                        Location::fx(ci, xi),
                        format!(
                            "source chain {src} in layer {}, consumer in layer {}",
                            layers[src], layers[ci]
                        ),
                    );
                }
            }
        }
    }

    // Plugins and parameters
    for (ci, chain) in project.fx_chains.iter().enumerate() {
        for (xi, fx) in chain.fx_chain.iter().enumerate() {
            if fx.preset_index.is_some() && !fx.params.is_empty() {
                report.push(
                    RuleCode::PresetConflict,
                    Location::fx(ci, xi),
                    "both preset_index and params are set",
                );
            }
            let Some(reg) = registry else { continue };
            let Some(desc) = reg.get(&fx.fx_name) else {
                report.push(
                    RuleCode::UnknownPlugin,
                    Location::fx(ci, xi),
                    format!("`{}` is not registered", fx.fx_name),
                );
                continue;
            };
            let values: Vec<Option<f64>> = match fx.preset_index {
                Some(p) => match reg.presets(&fx.fx_name).get(p) {
                    Some(v) => v.clone(),
                    None => {
                        report.push(
                            RuleCode::BadIndex,
                            Location::fx(ci, xi),
                            format!(
                                "preset_index {p} but {} presets loaded",
                                reg.presets(&fx.fx_name).len()
                            ),
                        );
                        continue;
                    }
                },
                None => fx.params.clone(),
            };
            if values.len() > desc.params.len() {
                report.push(
                    RuleCode::ParamOffGrid,
                    Location::fx(ci, xi),
                    format!(
                        "{} values for {} parameters",
                        values.len(),
                        desc.params.len()
                    ),
                );
            }
            for (pi, v) in values.iter().enumerate().take(desc.params.len()) {
                if let Some(v) = v {
                    if !desc.on_grid(pi, *v) {
                        report.push(
                            RuleCode::ParamOffGrid,
                            Location::fx(ci, xi),
                            format!(
                                "{} = {v} is not on the parameter grid",
                                desc.params[pi].name
                            ),
                        );
                    }
                }
            }
        }
    }

    report
}

/// Convenience: validate and resolve nothing else.
pub fn is_valid(project: &Project, registry: Option<&PluginRegistry>) -> bool {
    validate_project(project, registry).is_ok()
}

/// A main edge seen from its target: `(source chain, gain, bands)`.
pub type IncomingEdge = (usize, f64, Option<Vec<usize>>);

/// Incoming main-edge sources of each chain.
///
/// `bands` is `None` for an ordinary connection and lists the splitter bands
/// routed over the edge when the source ends with a splitter. Sources are in
/// ascending chain order.
pub fn incoming_edges(project: &Project) -> Vec<Vec<IncomingEdge>> {
    let n = project.fx_chains.len();
    let mut incoming: Vec<Vec<IncomingEdge>> = vec![Vec::new(); n];
    for (ci, chain) in project.fx_chains.iter().enumerate() {
        let targets: Vec<(usize, f64)> = chain.next_chains.iter().map(|(&t, &g)| (t, g)).collect();
        if chain.ends_with_splitter() {
            let bands = splitter_band_assignment(targets.len(), SPLITTER_BANDS);
            for ((t, g), b) in targets.into_iter().zip(bands) {
                if t < n {
                    incoming[t].push((ci, g, Some(b)));
                }
            }
        } else {
            for (t, g) in targets {
                if t < n {
                    incoming[t].push((ci, g, None));
                }
            }
        }
    }
    incoming
}

/// Count of violations per code; handy for comparing reports.
pub fn code_histogram(report: &ValidationReport) -> BTreeMap<RuleCode, usize> {
    let mut h = BTreeMap::new();
    for v in &report.violations {
        *h.entry(v.code).or_default() += 1;
    }
    h
}

impl From<&RegistryError> for RuleCode {
    fn from(e: &RegistryError) -> Self {
        match e {
            RegistryError::UnknownPlugin(_) | RegistryError::TypeMismatch { .. } => {
                RuleCode::UnknownPlugin
            }
            RegistryError::PresetOutOfRange { .. } => RuleCode::BadIndex,
            RegistryError::PresetConflict(_) => RuleCode::PresetConflict,
            _ => RuleCode::ParamOffGrid,
        }
    }
}
