mod common;

use std::sync::Arc;

use fxgraph_core::dsp::render_general;
use fxgraph_core::scheduler::{compute_layers, execute_plan, BufferStore, InternalBackend, RenderJob};
use fxgraph_core::{normalize, AudioBuffer, PluginRegistry, Project};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn render(projects: &[Project], stems: &[Vec<AudioBuffer>], workers: usize) -> Vec<Arc<AudioBuffer>> {
    let reg = PluginRegistry::builtin();
    let jobs: Vec<RenderJob> =
        projects.iter().zip(stems).map(|(p, s)| RenderJob { project: p.clone(), stems: s.clone() }).collect();
    let plan = compute_layers(projects).unwrap();
    let summary = execute_plan(&plan, &jobs, &reg, &InternalBackend, &BufferStore::new(), workers).unwrap();
    assert!(summary.failures.is_empty(), "{:?}", summary.failures);
    summary.outputs.into_iter().map(Option::unwrap).collect()
}

fn digest(bufs: &[Arc<AudioBuffer>]) -> Vec<u8> {
    let mut h = Sha256::new();
    for b in bufs {
        h.update(b.to_le_bytes());
    }
    h.finalize().to_vec()
}

#[test]
fn three_project_batch_has_four_layers_and_matches_oracle() {
    let batch = common::four_layer_batch();
    let plan = compute_layers(&batch).unwrap();
    assert_eq!(plan.layers.len(), 4);
    for (p, project) in batch.iter().enumerate() {
        assert_eq!(plan.layer_of[p], common::brute_layers(project));
    }
}

#[test]
fn layers_match_longest_path_oracle_on_random_batches() {
    let reg = PluginRegistry::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let batch: Vec<Project> = (0..n).map(|_| common::random_valid_project(&reg, 8, &mut rng)).collect();
        let plan = compute_layers(&batch).unwrap();
        let deepest = batch.iter().flat_map(common::brute_layers).max().unwrap();
        assert_eq!(plan.layers.len(), deepest + 1);
        for (p, project) in batch.iter().enumerate() {
            assert_eq!(plan.layer_of[p], common::brute_layers(project));
        }
    }
}

#[test]
fn scheduler_matches_general_renderer_for_any_worker_count() {
    let reg = PluginRegistry::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let projects: Vec<Project> = (0..20).map(|_| common::random_valid_project(&reg, 5, &mut rng)).collect();
    let stems: Vec<Vec<AudioBuffer>> = projects.iter().map(|p| common::stems_for(p, 1.0)).collect();
    let one = render(&projects, &stems, 1);
    let eight = render(&projects, &stems, 8);
    assert_eq!(digest(&one), digest(&eight));
    for ((p, s), out) in projects.iter().zip(&stems).zip(&one) {
        let reference = render_general(p, s, &reg).unwrap();
        assert_eq!(reference.len(), 1);
        assert!(out.max_abs_diff(&reference[0]) <= 1e-6);
        assert!(out.is_finite());
    }
}

#[test]
fn linear_graphs_superpose() {
    let reg = PluginRegistry::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let (g, _) = common::general_graph(&reg, true, &mut rng);
        let projects = normalize(&g).unwrap();
        for p in &projects {
            let a = common::stems_for(p, 0.4);
            let b: Vec<AudioBuffer> = a.iter().map(|s| s.map_channels(|_, x, y| {
                for (i, (o, v)) in y.iter_mut().zip(x).enumerate() {
                    *o = if i % 3 == 0 { -0.5 * v } else { 0.25 * v };
                }
            })).collect();
            let sum: Vec<AudioBuffer> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| x.map_channels(|c, xs, out| {
                    for ((o, u), v) in out.iter_mut().zip(xs).zip(y.channel(c)) {
                        *o = u + v;
                    }
                }))
                .collect();
            let outs = render(&[p.clone(), p.clone(), p.clone()], &[a, b, sum], 4);
            let added = outs[0].map_channels(|c, xs, out| {
                for ((o, u), v) in out.iter_mut().zip(xs).zip(outs[1].channel(c)) {
                    *o = u + v;
                }
            });
            assert!(added.max_abs_diff(&outs[2]) <= 1e-5, "{}", added.max_abs_diff(&outs[2]));
        }
    }
}
