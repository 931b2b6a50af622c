//! Project, chain and effect data model.
//!
//! A [`Project`] is a list of effect chains joined by gain-weighted
//! connections, fed by one or more input stems and collapsing into a single
//! output chain. Chains are addressed by their position in
//! [`Project::fx_chains`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Effect family. Determines the DSP kernel an internal plugin binds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FxType {
    Eq,
    Splitter,
    Delay,
    Reverb,
    Compressor,
    Gain,
    Mix,
}

impl FxType {
    pub const ALL: [FxType; 7] = [
        FxType::Eq,
        FxType::Splitter,
        FxType::Delay,
        FxType::Reverb,
        FxType::Compressor,
        FxType::Gain,
        FxType::Mix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FxType::Eq => "eq",
            FxType::Splitter => "splitter",
            FxType::Delay => "delay",
            FxType::Reverb => "reverb",
            FxType::Compressor => "compressor",
            FxType::Gain => "gain",
            FxType::Mix => "mix",
        }
    }

    /// Channel counts assumed when a project file omits them.
    pub fn default_io(self) -> (u32, u32) {
        match self {
            FxType::Splitter => (2, 6),
            _ => (2, 2),
        }
    }
}

impl fmt::Display for FxType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown fx_type `{0}`")]
pub struct UnknownFxType(pub String);

impl FromStr for FxType {
    type Err = UnknownFxType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FxType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownFxType(s.to_string()))
    }
}

/// One effect instance inside a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct FxSetting {
    pub fx_name: String,
    pub fx_type: FxType,
    /// Index into the plugin's preset list. When set, `params` must be empty.
    pub preset_index: Option<usize>,
    /// Normalized values in `[0, 1]`; `None` keeps the plugin default.
    pub params: Vec<Option<f64>>,
    pub n_inputs: u32,
    pub n_outputs: u32,
    /// Chain whose processed output drives this effect's detector.
    pub sidechain_input: Option<usize>,
}

impl FxSetting {
    pub fn new(fx_name: impl Into<String>, fx_type: FxType) -> Self {
        let (n_inputs, n_outputs) = fx_type.default_io();
        FxSetting {
            fx_name: fx_name.into(),
            fx_type,
            preset_index: None,
            params: Vec::new(),
            n_inputs,
            n_outputs,
            sidechain_input: None,
        }
    }

    pub fn with_params(mut self, params: Vec<Option<f64>>) -> Self {
        self.params = params;
        self
    }

    pub fn with_preset(mut self, index: usize) -> Self {
        self.preset_index = Some(index);
        self
    }

    pub fn with_sidechain(mut self, chain: usize) -> Self {
        self.sidechain_input = Some(chain);
        self
    }

    pub fn is_splitter(&self) -> bool {
        self.fx_type == FxType::Splitter
    }
}

/// Ordered effect sequence plus its outgoing connections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainDefinition {
    pub fx_chain: Vec<FxSetting>,
    /// Target chain index → linear amplitude gain.
    pub next_chains: BTreeMap<usize, f64>,
}

impl ChainDefinition {
    pub fn new(fx_chain: Vec<FxSetting>) -> Self {
        ChainDefinition {
            fx_chain,
            next_chains: BTreeMap::new(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn to(mut self, target: usize, gain: f64) -> Self {
        self.next_chains.insert(target, gain);
        self
    }

    pub fn ends_with_splitter(&self) -> bool {
        self.fx_chain.last().is_some_and(FxSetting::is_splitter)
    }

    /// Positions of effects that read a sidechain.
    pub fn sidechain_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.fx_chain
            .iter()
            .enumerate()
            .filter(|(_, fx)| fx.sidechain_input.is_some())
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputAudio {
    pub audio_path: String,
    /// Free-form label, typically the instrument class.
    pub audio_type: String,
    pub input_fx_chain: usize,
}

impl InputAudio {
    pub fn new(path: impl Into<String>, kind: impl Into<String>, chain: usize) -> Self {
        InputAudio {
            audio_path: path.into(),
            audio_type: kind.into(),
            input_fx_chain: chain,
        }
    }
}

/// A complete mixing graph: the unit of validation and rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub fx_chains: Vec<ChainDefinition>,
    pub input_audios: Vec<InputAudio>,
    pub output_audio: String,
    /// Preserved verbatim; carries no behavior.
    pub customized: bool,
}

impl Project {
    pub fn new(fx_chains: Vec<ChainDefinition>, input_audios: Vec<InputAudio>) -> Self {
        Project {
            fx_chains,
            input_audios,
            output_audio: "mixed_output.wav".to_string(),
            customized: false,
        }
    }

    pub fn chain_count(&self) -> usize {
        self.fx_chains.len()
    }

    /// Chains with no outgoing connections.
    pub fn output_chains(&self) -> Vec<usize> {
        self.fx_chains
            .iter()
            .enumerate()
            .filter(|(_, c)| c.next_chains.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn effect_count(&self) -> usize {
        self.fx_chains.iter().map(|c| c.fx_chain.len()).sum()
    }

    /// Stems entering `chain`, in `input_audios` order.
    pub fn stems_into(&self, chain: usize) -> impl Iterator<Item = (usize, &InputAudio)> {
        self.input_audios
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.input_fx_chain == chain)
    }

    /// Relabel chains: chain `i` moves to position `perm[i]`, and every index
    /// reference is rewritten accordingly.
    pub fn reindexed(&self, perm: &[usize]) -> Project {
        assert_eq!(
            perm.len(),
            self.fx_chains.len(),
            "permutation length mismatch"
        );
        let map = |i: usize| perm.get(i).copied().unwrap_or(i);
        let mut chains = vec![ChainDefinition::default(); perm.len()];
        for (old, chain) in self.fx_chains.iter().enumerate() {
            let mut c = chain.clone();
            c.next_chains = chain
                .next_chains
                .iter()
                .map(|(&t, &g)| (map(t), g))
                .collect();
            for fx in &mut c.fx_chain {
                fx.sidechain_input = fx.sidechain_input.map(map);
            }
            chains[perm[old]] = c;
        }
        Project {
            fx_chains: chains,
            input_audios: self
                .input_audios
                .iter()
                .map(|a| InputAudio {
                    input_fx_chain: map(a.input_fx_chain),
                    ..a.clone()
                })
                .collect(),
            output_audio: self.output_audio.clone(),
            customized: self.customized,
        }
    }
}

/// A mixing graph with the single-path restrictions relaxed: chains may hold
/// intermediate splitters and several sidechain-driven effects, sidechain
/// sources may be split stems, and several chains may be outputs.
///
/// The representation is shared with [`Project`]; only the rules differ.
pub type GeneralMixGraph = Project;

/// Which chain receives which splitter bands, given a splitter's target list.
///
/// Targets are taken in ascending chain-index order and receive bands low,
/// mid, high in turn; bands left over when there are fewer targets than
/// bands are summed into the last target.
pub fn splitter_band_assignment(targets: usize, bands: usize) -> Vec<Vec<usize>> {
    if targets == 0 {
        return Vec::new();
    }
    (0..targets)
        .map(|j| {
            if j + 1 < targets {
                vec![j]
            } else {
                (j..bands).collect()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_assignment_conventions() {
        assert_eq!(splitter_band_assignment(1, 3), vec![vec![0, 1, 2]]);
        assert_eq!(splitter_band_assignment(2, 3), vec![vec![0], vec![1, 2]]);
        assert_eq!(
            splitter_band_assignment(3, 3),
            vec![vec![0], vec![1], vec![2]]
        );
        assert!(splitter_band_assignment(0, 3).is_empty());
    }

    #[test]
    fn fx_type_parses_case_insensitively() {
        assert_eq!("EQ".parse::<FxType>().unwrap(), FxType::Eq);
        assert_eq!("splitter".parse::<FxType>().unwrap(), FxType::Splitter);
        assert!("flanger".parse::<FxType>().is_err());
    }

    #[test]
    fn reindex_rewrites_every_reference() {
        let p = Project::new(
            vec![
                ChainDefinition::new(vec![
                    FxSetting::new("c", FxType::Compressor).with_sidechain(1)
                ])
                .to(2, 0.5),
                ChainDefinition::empty().to(2, 1.0),
                ChainDefinition::empty(),
            ],
            vec![
                InputAudio::new("a.wav", "bass", 0),
                InputAudio::new("b.wav", "kick", 1),
            ],
        );
        let q = p.reindexed(&[2, 0, 1]);
        assert_eq!(q.fx_chains[2].next_chains.get(&1), Some(&0.5));
        assert_eq!(q.fx_chains[2].fx_chain[0].sidechain_input, Some(0));
        assert_eq!(q.input_audios[1].input_fx_chain, 0);
        assert!(q.fx_chains[1].next_chains.is_empty());
    }
}
