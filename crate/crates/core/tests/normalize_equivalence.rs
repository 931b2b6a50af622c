mod common;

use fxgraph_core::{normalize, PluginRegistry, Project};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fuzz(linear: bool, cases: u64, tolerance: f64) {
    let reg = PluginRegistry::builtin();
    let mut seen = common::Features::default();
    for seed in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, f) = common::general_graph(&reg, linear, &mut rng);
        seen.outputs = seen.outputs.max(f.outputs);
        seen.intermediate_splitters += f.intermediate_splitters;
        seen.multi_sidechain_chains += f.multi_sidechain_chains;
        seen.split_sourced_sidechains += f.split_sourced_sidechains;
        let d = common::max_deviation(&g, &reg);
        assert!(d <= tolerance, "seed {seed}: deviation {d:e}\n{g:#?}");
    }
    assert_eq!(seen.outputs, 3);
    assert!(seen.intermediate_splitters > 0);
    if !linear {
        assert!(seen.multi_sidechain_chains > 0 && seen.split_sourced_sidechains > 0, "{seen:?}");
    }
}

#[test]
fn linear_graphs_render_like_the_general_form() {
    fuzz(true, 40, 1e-6);
}

#[test]
fn full_effect_graphs_render_like_the_general_form() {
    fuzz(false, 40, 1e-4);
}

#[test]
fn normalization_is_idempotent() {
    let reg = PluginRegistry::builtin();
    for seed in 0..100 {
        let (g, _) = common::general_graph(&reg, seed % 2 == 0, &mut ChaCha8Rng::seed_from_u64(1000 + seed));
        for p in normalize(&g).unwrap() {
            assert_eq!(normalize(&p).unwrap(), vec![p.clone()], "seed {seed}");
        }
    }
}

#[test]
fn valid_projects_are_fixed_points() {
    let reg = PluginRegistry::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let p = common::random_valid_project(&reg, 8, &mut rng);
        assert_eq!(normalize(&p).unwrap(), vec![p]);
    }
}

#[test]
fn chained_taps_that_force_a_layer_contradiction_are_rejected() {
    use fxgraph_core::model::{ChainDefinition, FxSetting, FxType, InputAudio};
    use fxgraph_core::NormalizeError;
    let comp = |s| FxSetting::new(common::COMP, FxType::Compressor).with_sidechain(s);
    // 0 is keyed by 2, so 0 and 2 share a layer; 1 keys off 0 and then 2,
    // which would put its second piece one layer after its first
    let g = Project::new(
        vec![
            ChainDefinition::new(vec![comp(2)]).to(3, 1.0),
            ChainDefinition::new(vec![comp(0), comp(2)]).to(3, 1.0),
            ChainDefinition::empty().to(3, 1.0),
            ChainDefinition::empty(),
        ],
        (0..3).map(|c| InputAudio::new(format!("s{c}.wav"), "bass", c)).collect(),
    );
    assert!(!common::taps_layerable(&g.fx_chains));
    assert!(matches!(normalize(&g), Err(NormalizeError::Unrepresentable(_))));
    let mut ok = g.clone();
    ok.fx_chains[1].fx_chain.pop();
    assert!(common::taps_layerable(&ok.fx_chains));
    assert!(normalize(&ok).is_ok());
}
