//! Reference renderer for unrestricted mixing graphs.
//!
//! Evaluates chains in dependency order with no layering: each chain's input
//! is the premix of its stems and upstream outputs, effects run in sequence,
//! a sidechain reads the full output of its source chain, and intermediate
//! splitters are collapsed by summing their bands.

use super::{
    conform_stems, mix, process_effect, project_frames, AudioBuffer, DspError, EffectOutput,
    TAIL_SECONDS,
};
use crate::graph::{chain_dag, GraphError};
use crate::model::GeneralMixGraph;
use crate::registry::{PluginRegistry, RegistryError};
use crate::validate::incoming_edges;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("CYCLE_DETECTED: graph has a cycle")]
    Cycle,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{expected} input audios but {got} stem buffers")]
    StemCount { expected: usize, got: usize },
    #[error("input {input} enters chain {chain}, which does not exist")]
    BadInput { input: usize, chain: usize },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Render every output chain of `g` (ascending chain index).
///
/// `stems[i]` is the audio of `g.input_audios[i]`. Stems are upmixed to
/// stereo and the render is padded to the longest stem plus the fixed tail.
/// An output chain ending in a splitter yields the sum of its bands.
pub fn render_general(
    g: &GeneralMixGraph,
    stems: &[AudioBuffer],
    registry: &PluginRegistry,
) -> Result<Vec<AudioBuffer>, OracleError> {
    if stems.len() != g.input_audios.len() {
        return Err(OracleError::StemCount {
            expected: g.input_audios.len(),
            got: stems.len(),
        });
    }
    let n = g.fx_chains.len();
    for (i, a) in g.input_audios.iter().enumerate() {
        if a.input_fx_chain >= n {
            return Err(OracleError::BadInput {
                input: i,
                chain: a.input_fx_chain,
            });
        }
    }
    let full = chain_dag(g, true)?;
    let order = topological_order(&full.succ).ok_or(OracleError::Cycle)?;

    let sr = stems
        .first()
        .map_or(super::DEFAULT_SAMPLE_RATE, AudioBuffer::sample_rate);
    let frames = project_frames(stems, (TAIL_SECONDS * f64::from(sr)).round() as usize);
    let stems = conform_stems(stems, 2, frames);
    let incoming = incoming_edges(g);

    let mut ports: Vec<Option<Vec<AudioBuffer>>> = vec![None; n];
    for c in order {
        let mut sources: Vec<(&AudioBuffer, f64)> =
            g.stems_into(c).map(|(i, _)| (&stems[i], 1.0)).collect();
        for (src, gain, bands) in &incoming[c] {
            let out = ports[*src].as_ref().expect("upstream evaluated first");
            match bands {
                Some(bands) => sources.extend(bands.iter().map(|&b| (&out[b], *gain))),
                None => sources.extend(out.iter().map(|b| (b, *gain))),
            }
        }
        let mut signal = mix(&sources, 2, frames, sr);
        let chain = &g.fx_chains[c];
        let mut out = vec![signal.clone()];
        for (k, fx) in chain.fx_chain.iter().enumerate() {
            let resolved = registry.resolve(fx)?;
            let tap = fx
                .sidechain_input
                .map(|s| collapse(ports[s].as_ref().expect("sidechain source evaluated first")));
            let result = process_effect(&resolved, &signal, tap.as_ref())?;
            if k + 1 == chain.fx_chain.len() {
                out = result.into_ports();
            } else {
                signal = result.into_single();
            }
        }
        ports[c] = Some(out);
    }
    Ok(g.output_chains()
        .into_iter()
        .map(|c| collapse(ports[c].as_ref().expect("all chains evaluated")))
        .collect())
}

fn collapse(ports: &[AudioBuffer]) -> AudioBuffer {
    if ports.len() == 1 {
        ports[0].clone()
    } else {
        EffectOutput::Bands(ports.to_vec()).into_single()
    }
}

/// Depth-first topological order, ties resolved by ascending index.
fn topological_order(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(u: usize, succ: &[Vec<usize>], mark: &mut [Mark], post: &mut Vec<usize>) -> bool {
        match mark[u] {
            Mark::Done => return true,
            Mark::Active => return false,
            Mark::New => {}
        }
        mark[u] = Mark::Active;
        for &v in &succ[u] {
            if !visit(v, succ, mark, post) {
                return false;
            }
        }
        mark[u] = Mark::Done;
        post.push(u);
        true
    }
    let mut mark = vec![Mark::New; succ.len()];
    let mut post = Vec::with_capacity(succ.len());
    for u in 0..succ.len() {
        if !visit(u, succ, &mut mark, &mut post) {
            return None;
        }
    }
    post.reverse();
    Some(post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainDefinition, FxSetting, FxType, InputAudio, Project};

    fn stem(values: &[f32]) -> AudioBuffer {
        AudioBuffer::mono(values.to_vec(), 100)
    }

    #[test]
    fn empty_chain_is_identity() {
        let p = Project::new(
            vec![ChainDefinition::empty()],
            vec![InputAudio::new("a.wav", "bass", 0)],
        );
        let out = render_general(&p, &[stem(&[0.5, -0.25])], &PluginRegistry::builtin()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].frames(), 2 + 200);
        assert_eq!(out[0].channel(1)[..2], [0.5, -0.25]);
    }

    #[test]
    fn one_buffer_per_output() {
        let p = Project::new(
            vec![
                ChainDefinition::empty().to(1, 0.5).to(2, 2.0),
                ChainDefinition::empty(),
                ChainDefinition::empty(),
            ],
            vec![InputAudio::new("a.wav", "bass", 0)],
        );
        let out = render_general(&p, &[stem(&[1.0])], &PluginRegistry::builtin()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].channel(0)[0], out[1].channel(0)[0]), (0.5, 2.0));
    }

    #[test]
    fn cycles_are_rejected() {
        let p = Project::new(
            vec![
                ChainDefinition::empty().to(1, 1.0),
                ChainDefinition::empty().to(0, 1.0),
            ],
            vec![InputAudio::new("a.wav", "bass", 0)],
        );
        assert!(matches!(
            render_general(&p, &[stem(&[1.0])], &PluginRegistry::builtin()),
            Err(OracleError::Cycle)
        ));
    }

    #[test]
    fn intermediate_splitter_passes_signal_through() {
        let split = FxSetting::new("JS: 3-Band Splitter", FxType::Splitter);
        let p = Project::new(
            vec![ChainDefinition::new(vec![split.clone(), split])],
            vec![InputAudio::new("a", "b", 0)],
        );
        let x: Vec<f32> = (0..500)
            .map(|i| ((i * 37 % 11) as f32 - 5.0) / 10.0)
            .collect();
        let out = render_general(
            &p,
            &[AudioBuffer::mono(x.clone(), 44_100)],
            &PluginRegistry::builtin(),
        )
        .unwrap();
        let got = &out[0].channel(0)[..500];
        let err = got
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0f32, f32::max);
        assert!(err < 1e-6, "{err}");
    }
}
