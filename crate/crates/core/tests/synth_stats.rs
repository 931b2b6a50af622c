mod common;

use fxgraph_core::synth::{project_rng, synthesize_batch, synthesize_project, SynthConfig, Synthesized};
use fxgraph_core::{validate_project, PluginRegistry};

const N: usize = 600;

fn batch(cfg: &SynthConfig) -> Vec<Synthesized> {
    let pool = common::virtual_pool(&["bass", "guitar", "drums", "piano"], 4);
    let out = synthesize_batch(cfg, &pool, &PluginRegistry::builtin(), N).unwrap();
    assert!(out.skipped.is_empty(), "{:?}", out.skipped);
    out.projects.into_iter().map(|(_, s)| s).collect()
}

/// `hits / n` lies within five standard errors of `p`.
fn assert_rate(name: &str, hits: usize, n: usize, p: f64) {
    assert!(n > 50, "{name}: only {n} trials");
    let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-3);
    let rate = hits as f64 / n as f64;
    assert!((rate - p).abs() <= 5.0 * se, "{name}: {hits}/{n} = {rate:.3}, expected {p}");
}

#[test]
fn every_project_is_valid_and_within_bounds() {
    let reg = PluginRegistry::builtin();
    for cfg in [SynthConfig::shallow(), SynthConfig::deep()] {
        let cfg = SynthConfig { seed: 21, ..cfg };
        let [lo, hi] = cfg.gain_range_db.map(|db| 10f64.powf(db / 20.0));
        for s in batch(&cfg) {
            let p = &s.project;
            assert!(validate_project(p, Some(&reg)).is_ok());
            assert!((cfg.min_chains..=cfg.max_chains).contains(&p.chain_count()));
            assert!((cfg.min_stems..=cfg.max_stems).contains(&p.input_audios.len()));
            assert!(p.input_audios.iter().all(|a| cfg.allowed_labels.contains(&a.audio_type)));
            for g in p.fx_chains.iter().flat_map(|c| c.next_chains.values()) {
                assert!(*g >= lo - 1e-2 && *g <= hi + 1e-2, "gain {g}");
            }
        }
    }
}

#[test]
fn depth_histogram_follows_the_configured_distribution() {
    let cfg = SynthConfig { seed: 4, sidechain_prob: 0.0, splitter_prob: 0.0, ..SynthConfig::deep() };
    let depths: Vec<usize> = batch(&cfg).into_iter().flat_map(|s| s.stats.depths).collect();
    for (k, p) in cfg.chain_depth_dist.iter().enumerate() {
        let hits = depths.iter().filter(|d| **d == k + 1).count();
        assert_rate(&format!("depth {}", k + 1), hits, depths.len(), *p);
    }
}

#[test]
fn structure_rates_match_their_probabilities() {
    for (sc, sp) in [(0.2, 0.1), (0.5, 0.3)] {
        let cfg = SynthConfig { seed: 9, sidechain_prob: sc, splitter_prob: sp, ..SynthConfig::deep() };
        let all = batch(&cfg);
        let sum = |f: fn(&Synthesized) -> usize| all.iter().map(f).sum::<usize>();
        assert_rate("splitter", sum(|s| s.stats.splitters), sum(|s| s.stats.splitter_sites), sp);
        assert_rate("sidechain", sum(|s| s.stats.sidechains), sum(|s| s.stats.sidechain_sites), sc);
    }
}

#[test]
fn batch_entries_are_reproducible_one_by_one() {
    let reg = PluginRegistry::builtin();
    let pool = common::virtual_pool(&["bass", "guitar", "drums", "piano"], 4);
    let cfg = SynthConfig { seed: 1234, variable_density: true, ..SynthConfig::deep() };
    let out = synthesize_batch(&cfg, &pool, &reg, 40).unwrap();
    for (i, s) in &out.projects {
        let again = synthesize_project(&cfg, &pool, &reg, &mut project_rng(cfg.seed, *i)).unwrap();
        assert_eq!(again.project, s.project);
        assert_eq!(again.config, s.config);
    }
}
