//! Generators and independent reference computations shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use fxgraph_core::dsp::render_general;
use fxgraph_core::io::emit_project_yaml;
use fxgraph_core::model::{ChainDefinition, FxSetting, FxType, InputAudio};
use fxgraph_core::normalize::normalize_traced;
use fxgraph_core::scheduler::{compute_layers, execute_plan, BufferStore, InternalBackend, RenderJob};
use fxgraph_core::synth::{synthesize_project, synthetic_stem, StemEntry, StemPool};
use fxgraph_core::{validate_project, AudioBuffer, PluginRegistry, Project, SynthConfig};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub const EQ: &str = "VST3: 3 Band EQ";
pub const SPLIT: &str = "JS: 3-Band Splitter";
pub const COMP: &str = "VST3: ZamCompX2";
pub const DELAY: &str = "VST3: Samurai Delay";
pub const REVERB: &str = "VST3: Schroeder";
pub const SR: u32 = 44_100;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// `fixtures()` as seen from another crate of the workspace.
pub fn core_fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// An effect with every gridded parameter drawn uniformly from its grid.
pub fn random_fx<R: Rng>(reg: &PluginRegistry, name: &str, rng: &mut R) -> FxSetting {
    let d = reg.get(name).expect("registered plugin");
    let params = d
        .params
        .iter()
        .map(|p| d.param_grid.get(&p.name).map(|axis| *axis.values.choose(rng).unwrap()))
        .collect();
    FxSetting::new(name, d.fx_type).with_params(params)
}

pub fn gain<R: Rng>(rng: &mut R) -> f64 {
    // two decimals keep YAML round trips exact enough to reason about
    (rng.random_range(0.25..2.0f64) * 100.0).round() / 100.0
}

/// Main-edge layer of every chain by exhaustive path enumeration.
pub fn brute_layers(p: &Project) -> Vec<usize> {
    fn depth(p: &Project, c: usize, memo: &mut HashMap<usize, usize>) -> usize {
        if let Some(&d) = memo.get(&c) {
            return d;
        }
        let d = (0..p.fx_chains.len())
            .filter(|&u| p.fx_chains[u].next_chains.contains_key(&c))
            .map(|u| depth(p, u, memo) + 1)
            .max()
            .unwrap_or(0);
        memo.insert(c, d);
        d
    }
    let mut memo = HashMap::new();
    (0..p.fx_chains.len()).map(|c| depth(p, c, &mut memo)).collect()
}

/// Pool with `tracks` virtual tracks per label; paths are never read.
pub fn virtual_pool(labels: &[&str], tracks: usize) -> StemPool {
    StemPool::new(
        labels
            .iter()
            .flat_map(|l| (0..tracks).map(move |t| StemEntry { path: format!("t{t}/{l}.wav"), label: l.to_string() }))
            .collect(),
    )
}

/// A valid project with at most `max_chains` chains and busy routing.
pub fn random_valid_project<R: Rng>(reg: &PluginRegistry, max_chains: usize, rng: &mut R) -> Project {
    let cfg = SynthConfig {
        max_chains,
        max_stems: 3,
        sidechain_prob: 0.5,
        splitter_prob: 0.4,
        chain_depth_dist: vec![0.2, 0.4, 0.4],
        allowed_labels: vec![],
        ..SynthConfig::shallow()
    };
    let pool = virtual_pool(&["bass", "guitar", "drums", "piano"], 3);
    synthesize_project(&cfg, &pool, reg, rng).expect("synthesizable").project
}

/// Synthetic audio for every input of `p`, keyed by path so equal paths
/// share audio.
pub fn stems_for(p: &Project, seconds: f64) -> Vec<AudioBuffer> {
    let frames = (seconds * f64::from(SR)) as usize;
    p.input_audios
        .iter()
        .map(|a| {
            let seed = a.audio_path.bytes().fold(17u64, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)));
            synthetic_stem(&a.audio_type, frames, SR, seed)
        })
        .collect()
}

/// Three projects that schedule into four layers: a four-chain line, a
/// splitter diamond and a sidechain pair.
pub fn four_layer_batch() -> Vec<Project> {
    let stem = |c| InputAudio::new("s.wav", "bass", c);
    let eq = || FxSetting::new(EQ, FxType::Eq);
    vec![
        Project::new(
            vec![
                ChainDefinition::new(vec![eq()]).to(1, 1.0),
                ChainDefinition::empty().to(2, 1.0),
                ChainDefinition::empty().to(3, 1.0),
                ChainDefinition::new(vec![eq()]),
            ],
            vec![stem(0)],
        ),
        Project::new(
            vec![
                ChainDefinition::new(vec![FxSetting::new(SPLIT, FxType::Splitter)]).to(1, 1.0).to(2, 1.0),
                ChainDefinition::empty().to(3, 1.0),
                ChainDefinition::empty().to(3, 1.0),
                ChainDefinition::empty(),
            ],
            vec![stem(0)],
        ),
        Project::new(
            vec![
                ChainDefinition::empty().to(2, 1.0),
                ChainDefinition::new(vec![FxSetting::new(COMP, FxType::Compressor).with_sidechain(0)]).to(2, 1.0),
                ChainDefinition::empty(),
            ],
            vec![stem(0), stem(1)],
        ),
    ]
}

/// What a fuzzed general graph contains, for coverage checks.
#[derive(Debug, Default, Clone, Copy)]
pub struct Features {
    pub outputs: usize,
    pub intermediate_splitters: usize,
    pub multi_sidechain_chains: usize,
    pub split_sourced_sidechains: usize,
}

fn reach(succ: &[BTreeSet<usize>], from: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        for &v in &succ[u] {
            if seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen
}

/// Can every tap sit in the same layer as its consumer once multi-tap chains
/// are cut into one piece per tap?
///
/// Pieces joined by taps are merged (union-find); the merged graph of
/// main edges, including piece-to-piece links inside a chain, must be
/// acyclic. Independent of the normalizer's constraint solver.
pub fn taps_layerable(chains: &[ChainDefinition]) -> bool {
    let pieces: Vec<usize> = chains.iter().map(|c| c.sidechain_positions().count().max(1)).collect();
    let offset: Vec<usize> = pieces.iter().scan(0, |acc, &n| { let o = *acc; *acc += n; Some(o) }).collect();
    let total: usize = pieces.iter().sum();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for (c, chain) in chains.iter().enumerate() {
        for (j, fx) in chain.fx_chain.iter().filter(|f| f.sidechain_input.is_some()).enumerate() {
            let s = fx.sidechain_input.unwrap();
            let (a, b) = (offset[s] + pieces[s] - 1, offset[c] + j);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); total];
    for (c, chain) in chains.iter().enumerate() {
        for j in 1..pieces[c] {
            let (a, b) = (find(&mut parent, offset[c] + j - 1), find(&mut parent, offset[c] + j));
            succ[a].insert(b);
        }
        let last = find(&mut parent, offset[c] + pieces[c] - 1);
        for &t in chain.next_chains.keys() {
            let first = find(&mut parent, offset[t]);
            succ[last].insert(first);
        }
    }
    (0..total).all(|v| find(&mut parent, v) != v || !reach(&succ, v).contains(&v))
}

/// A general mixing graph that the normalizer can represent.
///
/// Built as `k` disjoint sub-graphs, one per output, plus shared stem chains
/// that fan out to several sub-graphs. Inside a sub-graph a chain with more
/// than one successor ends in a splitter; sidechain sources lie in the
/// consumer's output cone and are neither its ancestors nor descendants.
/// With `linear`, no compressors are drawn. Chain indices are shuffled.
pub fn general_graph<R: Rng>(reg: &PluginRegistry, linear: bool, rng: &mut R) -> (Project, Features) {
    let mut linear_fx = vec![EQ, DELAY, REVERB];
    if !linear {
        linear_fx.push(COMP);
    }
    let k = rng.random_range(1..=3usize);
    let mut chains: Vec<ChainDefinition> = Vec::new();
    let mut group: Vec<Option<usize>> = Vec::new();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut inputs: Vec<(usize, &str)> = Vec::new();
    let labels = ["bass", "guitar", "drums", "piano"];
    let mut features = Features { outputs: k, ..Features::default() };

    let random_effects = |rng: &mut R, max: usize| -> (Vec<FxSetting>, usize) {
        let n = rng.random_range(0..=max);
        let mut fx: Vec<FxSetting> = (0..n).map(|_| random_fx(reg, linear_fx.choose(rng).unwrap(), rng)).collect();
        let mut inner = 0;
        if n >= 1 && rng.random_bool(0.25) {
            let at = rng.random_range(0..n);
            fx.insert(at, random_fx(reg, SPLIT, rng));
            inner = 1;
        }
        (fx, inner)
    };

    for (g, m) in members.iter_mut().enumerate() {
        let size = rng.random_range(1..=4usize);
        let base = chains.len();
        for i in 0..size {
            let (mut fx, inner) = random_effects(rng, 2);
            features.intermediate_splitters += inner;
            let later: Vec<usize> = (base + i + 1..base + size).collect();
            let mut chain = ChainDefinition::default();
            if !later.is_empty() {
                if later.len() >= 2 && rng.random_bool(0.35) {
                    let n = rng.random_range(2..=later.len().min(3));
                    let mut t: Vec<usize> = later.choose_multiple(rng, n).copied().collect();
                    t.sort_unstable();
                    fx.push(random_fx(reg, SPLIT, rng));
                    for t in t {
                        chain = chain.to(t, gain(rng));
                    }
                } else {
                    chain = chain.to(*later.choose(rng).unwrap(), gain(rng));
                }
            } else if rng.random_bool(0.15) {
                // output ending in a splitter: its bands sum back together
                fx.push(random_fx(reg, SPLIT, rng));
            }
            chain.fx_chain = fx;
            chains.push(chain);
            group.push(Some(g));
            m.push(base + i);
        }
    }
    // shared chains fan out to entry points of several outputs
    if k >= 2 {
        for _ in 0..rng.random_range(0..=2usize) {
            let n = rng.random_range(2..=k);
            let mut gs: Vec<usize> = (0..k).collect();
            gs.shuffle(rng);
            let (fx, _) = random_effects(rng, 2);
            let fx: Vec<FxSetting> = fx.into_iter().filter(|f| !f.is_splitter()).collect();
            let mut chain = ChainDefinition::new(fx);
            for &g in &gs[..n] {
                chain = chain.to(*members[g].choose(rng).unwrap(), gain(rng));
            }
            let id = chains.len();
            chains.push(chain);
            group.push(None);
            inputs.push((id, labels.choose(rng).unwrap()));
        }
    }
    // every chain without a feed gets a stem
    let n = chains.len();
    let mut fed = vec![false; n];
    for c in &chains {
        for &t in c.next_chains.keys() {
            fed[t] = true;
        }
    }
    for &(c, _) in &inputs {
        fed[c] = true;
    }
    for (c, fed) in fed.iter().enumerate() {
        if !fed || rng.random_bool(0.15) {
            inputs.push((c, labels.choose(rng).unwrap()));
        }
    }

    if !linear {
        // sidechains: every tap is a main-edge-free pair inside one output cone
        let mut succ: Vec<BTreeSet<usize>> =
            chains.iter().map(|c| c.next_chains.keys().copied().collect()).collect();
        let split_fed: BTreeSet<usize> = chains
            .iter()
            .filter(|c| c.fx_chain.last().is_some_and(FxSetting::is_splitter))
            .flat_map(|c| c.next_chains.keys().copied())
            .collect();
        for c in 0..n {
            let Some(g) = group[c] else { continue };
            if !rng.random_bool(0.4) {
                continue;
            }
            let taps = rng.random_range(1..=3usize);
            let mut added = 0;
            for _ in 0..taps {
                let down = reach(&succ, c);
                let candidates: Vec<usize> = (0..n)
                    .filter(|&s| s != c && !down.contains(&s) && !reach(&succ, s).contains(&c))
                    .filter(|&s| match group[s] {
                        Some(h) => h == g,
                        None => chains[s].next_chains.keys().any(|t| group[*t] == Some(g)),
                    })
                    .collect();
                let split_sourced: Vec<usize> = candidates
                    .iter()
                    .copied()
                    .filter(|&s| split_fed.contains(&s) || chains[s].fx_chain.last().is_some_and(FxSetting::is_splitter))
                    .collect();
                let src = if !split_sourced.is_empty() && rng.random_bool(0.6) {
                    *split_sourced.choose(rng).unwrap()
                } else if let Some(&s) = candidates.choose(rng) {
                    s
                } else {
                    break;
                };
                let routed = !chains[c].next_chains.is_empty();
                let fx = &mut chains[c].fx_chain;
                let terminal = fx.last().is_some_and(FxSetting::is_splitter) && routed;
                let limit = if terminal { fx.len() - 1 } else { fx.len() };
                let at = rng.random_range(0..=limit);
                fx.insert(at, random_fx(reg, COMP, rng).with_sidechain(src));
                if !taps_layerable(&chains) {
                    chains[c].fx_chain.remove(at);
                    continue;
                }
                succ[src].insert(c);
                added += 1;
                if split_sourced.contains(&src) {
                    features.split_sourced_sidechains += 1;
                }
            }
            if added >= 2 {
                features.multi_sidechain_chains += 1;
            }
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let p = Project::new(
        chains,
        inputs
            .iter()
            .enumerate()
            .map(|(i, &(c, label))| InputAudio::new(format!("s{i}/{label}.wav"), label, c))
            .collect(),
    );
    (p.reindexed(&perm), features)
}

/// Output chains of `g` in ascending order, with their position.
pub fn output_positions(g: &Project) -> BTreeMap<usize, usize> {
    g.output_chains().into_iter().enumerate().map(|(i, c)| (c, i)).collect()
}

/// Stress input for effect fuzzing; `kind` picks silence, an impulse, DC,
/// quiet noise, loud noise or clipped square waves.
pub fn stress_signal<R: Rng>(kind: usize, frames: usize, rng: &mut R) -> AudioBuffer {
    let mut ch = |c: usize| -> Vec<f32> {
        (0..frames)
            .map(|n| match kind % 6 {
                0 => 0.0,
                1 => f32::from(u8::from(n == c)),
                2 => 0.999,
                3 => rng.random_range(-1e-4f32..1e-4),
                4 => rng.random_range(-1.0f32..1.0),
                _ => if (n / 7) % 2 == 0 { 1.0 } else { -1.0 },
            })
            .collect()
    };
    let (l, r) = (ch(0), ch(1));
    AudioBuffer::from_channels(vec![l, r], SR).unwrap()
}

/// Run `draws` random effects with on-grid sampled parameters and uniform
/// free parameters over stress inputs; returns the first failure.
pub fn fuzz_effects(reg: &PluginRegistry, draws: usize, frames: usize, seed: u64) -> Result<(), String> {
    use fxgraph_core::dsp::process_effect;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = reg.descriptors().map(|d| d.fx_name.clone()).collect();
    for i in 0..draws {
        let name = &names[i % names.len()];
        let d = reg.get(name).unwrap();
        let mut fx = random_fx(reg, name, &mut rng);
        for (p, v) in d.params.iter().zip(fx.params.iter_mut()) {
            if v.is_none() && rng.random_bool(0.5) {
                *v = Some(if p.sampled { p.default } else { rng.random_range(0.0..=1.0) });
            }
        }
        let resolved = reg.resolve(&fx).map_err(|e| format!("{name}: {e}"))?;
        let x = stress_signal(rng.random_range(0..6), frames, &mut rng);
        let sc = stress_signal(rng.random_range(0..6), frames, &mut rng);
        let out = process_effect(&resolved, &x, Some(&sc)).map_err(|e| format!("draw {i} {fx:?}: {e}"))?;
        if !out.into_ports().iter().all(AudioBuffer::is_finite) {
            return Err(format!("draw {i} {fx:?}: non-finite"));
        }
    }
    Ok(())
}

const STEM_SECONDS: f64 = 0.5;

/// Normalize `g`, render the result with the scheduler and return the worst
/// deviation from the general-form render.
pub fn max_deviation(g: &Project, reg: &PluginRegistry) -> f64 {
    let stems = stems_for(g, STEM_SECONDS);
    let reference = render_general(g, &stems, reg).unwrap();
    let outputs = output_positions(g);
    let normalized = normalize_traced(g).unwrap_or_else(|e| panic!("{e}\n{}", emit_project_yaml(g)));
    assert_eq!(normalized.len(), outputs.len());

    let jobs: Vec<RenderJob> = normalized
        .iter()
        .map(|n| {
            let r = validate_project(&n.project, Some(reg));
            assert!(r.is_ok(), "{:?}\n{:#?}", r.violations, n.project);
            // inputs keep their paths, so stems are looked up by path
            let stems = n
                .project
                .input_audios
                .iter()
                .map(|a| {
                    let i = g.input_audios.iter().position(|b| b.audio_path == a.audio_path).unwrap();
                    stems[i].clone()
                })
                .collect();
            RenderJob { project: n.project.clone(), stems }
        })
        .collect();
    let plan = compute_layers(&jobs.iter().map(|j| j.project.clone()).collect::<Vec<_>>()).unwrap();
    let summary = execute_plan(&plan, &jobs, reg, &InternalBackend, &BufferStore::new(), 4).unwrap();
    assert!(summary.failures.is_empty(), "{:?}", summary.failures);
    normalized
        .iter()
        .zip(&summary.outputs)
        .map(|(n, out)| out.as_ref().unwrap().max_abs_diff(&reference[outputs[&n.output]]))
        .fold(0.0, f64::max)
}
