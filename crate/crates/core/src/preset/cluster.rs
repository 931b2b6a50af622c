//! Cluster-based preset selection: render a probe through every candidate,
//! pool MFCCs per render, cluster, and keep one representative per cluster.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::mfcc::mean_rows;
use super::{kmeans, mfcc_features, MfccConfig, PresetError};
use crate::dsp::AudioBuffer;
use crate::registry::{PluginDescriptor, ResolvedEffect};
use crate::scheduler::RenderBackend;

const MAX_ITERS: usize = 300;

/// Default excitation: 2 s log sweep from 20 Hz to 20 kHz, then 1 s of
/// seeded white noise. Stereo.
pub fn probe_signal(sample_rate: u32, seed: u64) -> AudioBuffer {
    let sr = f64::from(sample_rate);
    let sweep_len = (2.0 * sr) as usize;
    let (f0, f1) = (20.0f64, 20_000.0f64.min(sr / 2.0 * 0.99));
    let k = (f1 / f0).ln();
    let dur = 2.0;
    let mut samples: Vec<f32> = (0..sweep_len)
        .map(|n| {
            let t = n as f64 / sr;
            let phase = 2.0 * PI * f0 * dur / k * ((t * k / dur).exp() - 1.0);
            (0.5 * phase.sin()) as f32
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.extend((0..sample_rate).map(|_| rng.random_range(-0.25f32..0.25)));
    AudioBuffer::from_channels(vec![samples.clone(), samples], sample_rate).expect("equal channels")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSelection {
    /// Indices into the candidate list, ascending.
    pub indices: Vec<usize>,
    pub presets: Vec<Vec<Option<f64>>>,
    /// Mean MFCC vector of every candidate.
    pub features: Vec<Vec<f64>>,
}

/// Pick `k` representative presets out of `candidates`.
///
/// Each candidate is rendered over `probe`; the representative of a cluster
/// is its member nearest the centroid (ties to the lowest index). A cluster
/// left empty by k-means takes the nearest candidate not chosen yet, so the
/// selection always holds `k` distinct candidates.
pub fn validate_by_clustering(
    descriptor: &PluginDescriptor,
    candidates: &[Vec<Option<f64>>],
    probe: &AudioBuffer,
    k: usize,
    backend: &dyn RenderBackend,
    seed: u64,
) -> Result<ClusterSelection, PresetError> {
    if k == 0 {
        return Err(PresetError::ZeroK);
    }
    if k > candidates.len() {
        return Err(PresetError::KTooLarge {
            k,
            n: candidates.len(),
        });
    }
    let config = MfccConfig::default();
    let features: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|preset| {
            let fx = ResolvedEffect {
                fx_name: descriptor.fx_name.clone(),
                fx_type: descriptor.fx_type,
                values: descriptor
                    .params
                    .iter()
                    .enumerate()
                    .map(|(i, p)| preset.get(i).copied().flatten().unwrap_or(p.default))
                    .collect(),
                supports_sidechain: descriptor.supports_sidechain,
            };
            let ports = backend
                .render_path(
                    std::slice::from_ref(&fx),
                    probe,
                    &BTreeMap::new(),
                    probe.sample_rate(),
                )
                .map_err(|e| PresetError::Render(e.to_string()))?;
            // one pooled vector per output port, concatenated
            let mut v = Vec::new();
            for port in &ports {
                v.extend(mean_rows(&mfcc_features(port, &config)?));
            }
            Ok(v)
        })
        .collect::<Result<_, PresetError>>()?;

    let result = kmeans(&features, k, seed, MAX_ITERS)?;
    let dist = |i: usize, c: &[f64]| -> f64 {
        features[i]
            .iter()
            .zip(c)
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    };
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut empty = Vec::new();
    for (j, centroid) in result.centroids.iter().enumerate() {
        let best = (0..features.len())
            .filter(|&i| result.assignments[i] == j && !chosen.contains(&i))
            .min_by(|&a, &b| {
                dist(a, centroid)
                    .total_cmp(&dist(b, centroid))
                    .then(a.cmp(&b))
            });
        match best {
            Some(i) => chosen.push(i),
            None => empty.push(j),
        }
    }
    for j in empty {
        let centroid = &result.centroids[j];
        let i = (0..features.len())
            .filter(|i| !chosen.contains(i))
            .min_by(|&a, &b| {
                dist(a, centroid)
                    .total_cmp(&dist(b, centroid))
                    .then(a.cmp(&b))
            })
            .expect("k <= candidates");
        chosen.push(i);
    }
    chosen.sort_unstable();
    Ok(ClusterSelection {
        presets: chosen.iter().map(|&i| candidates[i].clone()).collect(),
        indices: chosen,
        features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::{build_grid, sample_presets, GridSpec};
    use crate::registry::PluginRegistry;
    use crate::scheduler::InternalBackend;

    fn eq() -> PluginDescriptor {
        PluginRegistry::builtin()
            .get("VST3: 3 Band EQ")
            .unwrap()
            .clone()
    }

    fn short_probe() -> AudioBuffer {
        let p = probe_signal(44_100, 1);
        let frames = 22_050;
        let chans = (0..2).map(|c| p.channel(c)[..frames].to_vec()).collect();
        AudioBuffer::from_channels(chans, 44_100).unwrap()
    }

    #[test]
    fn k_of_twenty_returns_three_on_grid() {
        let d = eq();
        let grid = build_grid(&d, &GridSpec::Step(0.01)).unwrap();
        let cands = sample_presets(&d, &grid, 20, 0.0, 4);
        let sel =
            validate_by_clustering(&d, &cands, &short_probe(), 3, &InternalBackend, 7).unwrap();
        assert_eq!(sel.indices.len(), 3);
        for p in &sel.presets {
            for (i, v) in p.iter().enumerate() {
                if let Some(v) = v {
                    assert!(d.on_grid(i, *v));
                }
            }
        }
        let again =
            validate_by_clustering(&d, &cands, &short_probe(), 3, &InternalBackend, 7).unwrap();
        assert_eq!(sel, again);
    }

    #[test]
    fn k_equal_n_keeps_everything() {
        let d = eq();
        let cands = vec![
            vec![None, None, None, Some(0.1), Some(0.5), Some(0.5)],
            vec![None, None, None, Some(0.9), Some(0.5), Some(0.5)],
            vec![None, None, None, Some(0.5), Some(0.5), Some(0.9)],
        ];
        let sel =
            validate_by_clustering(&d, &cands, &short_probe(), 3, &InternalBackend, 0).unwrap();
        assert_eq!(sel.indices, vec![0, 1, 2]);
    }

    #[test]
    fn duplicates_collapse_to_one_of_each() {
        let d = eq();
        let a = vec![None, None, None, Some(0.0), Some(0.5), Some(0.5)];
        let b = vec![None, None, None, Some(0.5), Some(0.5), Some(1.0)];
        let mut cands = vec![a.clone(); 10];
        cands.extend(vec![b.clone(); 10]);
        let sel =
            validate_by_clustering(&d, &cands, &short_probe(), 2, &InternalBackend, 3).unwrap();
        assert_eq!(sel.presets.len(), 2);
        assert!(sel.presets.contains(&a) && sel.presets.contains(&b));
    }
}
