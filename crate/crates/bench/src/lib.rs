//! Workload builders for the engine benchmarks.

use fxgraph_core::scheduler::RenderJob;
use fxgraph_core::synth::{synthesize_project, synthetic_stem, StemEntry, StemPool};
use fxgraph_core::{AudioBuffer, PluginRegistry, Project, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SAMPLE_RATE: u32 = 44_100;

const LABELS: [&str; 4] = ["bass", "guitar", "drums", "piano"];

fn pool() -> StemPool {
    StemPool::new(
        LABELS
            .iter()
            .flat_map(|l| (0..4).map(move |t| StemEntry { path: format!("t{t}/{l}.wav"), label: l.to_string() }))
            .collect(),
    )
}

/// `n` valid projects with up to `max_chains` chains.
pub fn projects(registry: &PluginRegistry, n: usize, max_chains: usize, seed: u64) -> Vec<Project> {
    let cfg = SynthConfig { max_chains, allowed_labels: vec![], ..SynthConfig::deep() };
    let pool = pool();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| synthesize_project(&cfg, &pool, registry, &mut rng).expect("deep config is feasible").project)
        .collect()
}

/// Render jobs with synthetic stems of `seconds` length.
pub fn jobs(projects: &[Project], seconds: f64) -> Vec<RenderJob> {
    let frames = (seconds * f64::from(SAMPLE_RATE)) as usize;
    projects
        .iter()
        .enumerate()
        .map(|(i, p)| RenderJob {
            project: p.clone(),
            stems: p
                .input_audios
                .iter()
                .enumerate()
                .map(|(j, a)| synthetic_stem(&a.audio_type, frames, SAMPLE_RATE, (i * 16 + j) as u64))
                .collect(),
        })
        .collect()
}

/// Stereo white noise.
pub fn noise(seconds: f64, seed: u64) -> AudioBuffer {
    let frames = (seconds * f64::from(SAMPLE_RATE)) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ch = || (0..frames).map(|_| rng.random_range(-0.5f32..0.5)).collect::<Vec<f32>>();
    let (l, r) = (ch(), ch());
    AudioBuffer::from_channels(vec![l, r], SAMPLE_RATE).expect("equal lengths")
}
