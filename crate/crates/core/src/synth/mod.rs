//! Random generation of valid projects.
//!
//! Chains are created in index order. Roots take the stems; each later
//! chain hangs off one open chain (a chain still waiting for its successor),
//! optionally merging a second one, and whatever is still open at the end
//! feeds the output chain, which is always last and empty. Splitter and
//! sidechain decisions are Bernoulli draws taken at eligible sites:
//!
//! * splitter site: a chain the moment it is linked to its first successor.
//!   The output chain is always available as a spare band target, so every
//!   site can realize a splitter.
//! * sidechain site: a non-output chain with a non-splitter effect to host
//!   the compressor and at least one admissible source in its layer (not
//!   splitter-terminal, not split-fed, no sidechain cycle).

mod pool;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::chain_dag;
use crate::io::IoError;
use crate::model::{ChainDefinition, FxSetting, FxType, InputAudio, Project};
use crate::registry::{PluginDescriptor, PluginRegistry};
use crate::validate::{validate_project, MAX_GAIN};

pub use pool::{synthetic_stem, write_synthetic_pool, StemEntry, StemPool, PARSERS};

/// Attempts per project before giving up with `INFEASIBLE_CONFIG`.
pub const MAX_ATTEMPTS: usize = 32;

/// Chance that a new chain also absorbs a second open chain (a submix).
pub const MERGE_PROB: f64 = 0.3;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("INFEASIBLE_CONFIG: {0}")]
    InfeasibleConfig(String),
    #[error("LABEL_UNAVAILABLE: no stem labeled `{0}` in the pool")]
    LabelUnavailable(String),
    #[error("stem pool is empty")]
    EmptyPool,
    #[error("unknown stem parser `{0}`")]
    UnknownParser(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub min_chains: usize,
    pub max_chains: usize,
    pub min_stems: usize,
    pub max_stems: usize,
    /// Probability of each chain depth 1..=len.
    pub chain_depth_dist: Vec<f64>,
    pub sidechain_prob: f64,
    pub splitter_prob: f64,
    pub variable_density: bool,
    /// Probability that a splitter uses all three bands when it can.
    pub complexity: f64,
    /// Edge gains are uniform in dB over this interval.
    pub gain_range_db: [f64; 2],
    /// Stem labels to draw from; empty means any.
    pub allowed_labels: Vec<String>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::shallow()
    }
}

impl SynthConfig {
    pub fn shallow() -> Self {
        SynthConfig {
            min_chains: 3,
            max_chains: 5,
            min_stems: 1,
            max_stems: 2,
            chain_depth_dist: vec![0.1, 0.7, 0.2],
            sidechain_prob: 0.2,
            splitter_prob: 0.1,
            variable_density: false,
            complexity: 0.5,
            gain_range_db: [-12.0, 6.0],
            allowed_labels: vec!["guitar".into(), "bass".into()],
            seed: 0,
        }
    }

    pub fn deep() -> Self {
        SynthConfig {
            min_chains: 3,
            max_chains: 10,
            min_stems: 1,
            max_stems: 4,
            chain_depth_dist: vec![0.1, 0.3, 0.4, 0.2],
            allowed_labels: ["piano", "guitar", "bass", "drums"].map(String::from).to_vec(),
            ..SynthConfig::shallow()
        }
    }

    pub fn check(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.min_chains < 1 || self.min_chains > self.max_chains {
            return bad(format!("chain range [{}, {}]", self.min_chains, self.max_chains));
        }
        if self.min_stems < 1 || self.min_stems > self.max_stems {
            return bad(format!("stem range [{}, {}]", self.min_stems, self.max_stems));
        }
        let sum: f64 = self.chain_depth_dist.iter().sum();
        if self.chain_depth_dist.is_empty()
            || self.chain_depth_dist.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (sum - 1.0).abs() > 1e-9
        {
            return bad(format!("chain_depth_dist {:?} is not a probability vector", self.chain_depth_dist));
        }
        for (name, p) in [
            ("sidechain_prob", self.sidechain_prob),
            ("splitter_prob", self.splitter_prob),
            ("complexity", self.complexity),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1]"));
            }
        }
        let [lo, hi] = self.gain_range_db;
        let max_db = 20.0 * MAX_GAIN.log10();
        if !(lo.is_finite() && hi.is_finite() && lo <= hi && hi <= max_db) {
            return bad(format!("gain_range_db [{lo}, {hi}] must be ordered and at most {max_db:.2} dB"));
        }
        Ok(())
    }

    /// Per-project draw used with `variable_density`.
    fn randomized<R: Rng>(&self, rng: &mut R) -> SynthConfig {
        let w: Vec<f64> = self.chain_depth_dist.iter().map(|_| rand_distr::Exp1.sample(rng)).collect();
        let total: f64 = w.iter().sum();
        SynthConfig {
            chain_depth_dist: w.iter().map(|x| x / total).collect(),
            sidechain_prob: rng.random_range(0.0..=(2.0 * self.sidechain_prob).min(1.0)),
            splitter_prob: rng.random_range(0.0..=(2.0 * self.splitter_prob).min(1.0)),
            complexity: rng.random::<f64>(),
            variable_density: false,
            ..self.clone()
        }
    }
}

/// Counts of eligible sites and realized structures in one project.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SiteStats {
    pub splitter_sites: usize,
    pub splitters: usize,
    pub three_band_splitters: usize,
    pub sidechain_sites: usize,
    pub sidechains: usize,
    /// Effect count of every non-output chain.
    pub depths: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub project: Project,
    pub stats: SiteStats,
    /// The configuration actually used (differs from the input with
    /// `variable_density`).
    pub config: SynthConfig,
}

struct Inventory<'a> {
    effects: Vec<&'a PluginDescriptor>,
    splitter: Option<&'a PluginDescriptor>,
    compressor: Option<&'a PluginDescriptor>,
}

impl<'a> Inventory<'a> {
    fn new(registry: &'a PluginRegistry) -> Self {
        let reduced: Vec<&PluginDescriptor> = registry.reduced_set().collect();
        Inventory {
            effects: reduced.iter().copied().filter(|d| d.fx_type != FxType::Splitter).collect(),
            splitter: reduced.iter().copied().find(|d| d.fx_type == FxType::Splitter),
            compressor: reduced.iter().copied().find(|d| d.supports_sidechain),
        }
    }
}

fn draw_setting<R: Rng>(d: &PluginDescriptor, registry: &PluginRegistry, rng: &mut R) -> FxSetting {
    let presets = registry.presets(&d.fx_name);
    let fx = FxSetting::new(d.fx_name.clone(), d.fx_type);
    if !presets.is_empty() {
        return fx.with_preset(rng.random_range(0..presets.len()));
    }
    let params = d
        .params
        .iter()
        .map(|p| d.param_grid.get(&p.name).map(|axis| crate::preset::draw_on_axis(axis, rng)))
        .collect();
    FxSetting { n_inputs: d.n_inputs, n_outputs: d.n_outputs, ..fx.with_params(params) }
}

/// Is there a path `from` ⇝ `to` over (source, consumer) pairs?
fn reaches(edges: &[(usize, usize)], from: usize, to: usize) -> bool {
    let mut stack = vec![from];
    let mut seen = vec![from];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for &(_, v) in edges.iter().filter(|(s, _)| *s == u) {
            if !seen.contains(&v) {
                seen.push(v);
                stack.push(v);
            }
        }
    }
    false
}

fn build<R: Rng>(
    cfg: &SynthConfig,
    inv: &Inventory,
    registry: &PluginRegistry,
    rng: &mut R,
) -> Result<(Project, SiteStats), SynthError> {
    let mut stats = SiteStats::default();
    let n = rng.random_range(cfg.min_chains..=cfg.max_chains);
    let stems = rng.random_range(cfg.min_stems..=cfg.max_stems);
    let out = n - 1;
    let depth_dist = WeightedIndex::new(&cfg.chain_depth_dist)
        .map_err(|e| SynthError::InvalidConfig(format!("chain_depth_dist: {e}")))?;

    let mut fx: Vec<Vec<FxSetting>> = Vec::with_capacity(n);
    for _ in 0..out {
        let d = depth_dist.sample(rng) + 1;
        stats.depths.push(d);
        let chain = (0..d).map(|_| draw_setting(inv.effects[rng.random_range(0..inv.effects.len())], registry, rng));
        fx.push(chain.collect());
    }
    fx.push(Vec::new());

    // main edges
    let roots = if n == 1 { 0 } else { rng.random_range(1..=stems.min(n - 1)) };
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut fed = vec![false; n];
    let mut is_splitter = vec![false; n];
    let mut open: Vec<usize> = (0..roots).collect();
    for c in roots..out {
        if !fed[c] {
            let p = open.remove(rng.random_range(0..open.len()));
            succ[p].push(c);
            fed[c] = true;
            stats.splitter_sites += 1;
            if rng.random::<f64>() < cfg.splitter_prob {
                let spare: Vec<usize> = (c + 1..out).filter(|&j| !fed[j]).chain([out]).collect();
                let extra = if spare.len() >= 2 && rng.random::<f64>() < cfg.complexity { 2 } else { 1 };
                for i in sample_indices(rng, spare.len(), extra).into_vec() {
                    let j = spare[i];
                    succ[p].push(j);
                    fed[j] = j != out;
                }
                stats.splitters += 1;
                stats.three_band_splitters += usize::from(extra == 2);
                is_splitter[p] = true;
                let splitter = inv.splitter.ok_or_else(|| {
                    SynthError::InfeasibleConfig("splitter_prob > 0 but the registry has no splitter".into())
                })?;
                *fx[p].last_mut().expect("non-output chains are non-empty") = draw_setting(splitter, registry, rng);
            }
            if open.len() >= 2 && rng.random::<f64>() < MERGE_PROB {
                let q = open.remove(rng.random_range(0..open.len()));
                succ[q].push(c);
            }
        }
        open.push(c);
    }
    for p in open {
        if p != out {
            succ[p].push(out);
        }
    }

    let mut inputs: Vec<InputAudio> = Vec::with_capacity(stems);
    for i in 0..stems {
        let chain = if roots == 0 {
            0
        } else if i < roots {
            i
        } else {
            rng.random_range(0..roots)
        };
        inputs.push(InputAudio::new(String::new(), String::new(), chain));
    }

    let mut chains: Vec<ChainDefinition> = fx.into_iter().map(ChainDefinition::new).collect();
    for (c, targets) in succ.iter().enumerate() {
        for &t in targets {
            chains[c].next_chains.insert(t, 0.0);
        }
    }
    let mut project = Project::new(chains, inputs);

    // sidechains, same layer only
    let layers = chain_dag(&project, false)
        .and_then(|d| d.kahn_layers())
        .map_err(|e| SynthError::InfeasibleConfig(e.to_string()))?;
    let mut preds = vec![0usize; n];
    let mut pred_of = vec![usize::MAX; n];
    for (u, targets) in succ.iter().enumerate() {
        for &v in targets {
            preds[v] += 1;
            pred_of[v] = u;
        }
    }
    let split_fed = |c: usize| {
        !project.input_audios.iter().any(|a| a.input_fx_chain == c) && preds[c] == 1 && is_splitter[pred_of[c]]
    };
    let split_fed: Vec<bool> = (0..n).map(split_fed).collect();
    let mut sc_edges: Vec<(usize, usize)> = Vec::new();
    for c in 0..out {
        let hosts: Vec<usize> =
            (0..project.fx_chains[c].fx_chain.len()).filter(|&k| !project.fx_chains[c].fx_chain[k].is_splitter()).collect();
        if hosts.is_empty() {
            continue;
        }
        let sources: Vec<usize> = (0..out)
            .filter(|&s| {
                s != c && layers[s] == layers[c] && !is_splitter[s] && !split_fed[s] && !reaches(&sc_edges, c, s)
            })
            .collect();
        if sources.is_empty() {
            continue;
        }
        stats.sidechain_sites += 1;
        if rng.random::<f64>() < cfg.sidechain_prob {
            let comp = inv.compressor.ok_or_else(|| {
                SynthError::InfeasibleConfig("sidechain_prob > 0 but the registry has no sidechain compressor".into())
            })?;
            let s = sources[rng.random_range(0..sources.len())];
            let k = hosts[rng.random_range(0..hosts.len())];
            project.fx_chains[c].fx_chain[k] = draw_setting(comp, registry, rng).with_sidechain(s);
            sc_edges.push((s, c));
            stats.sidechains += 1;
        }
    }

    let [lo, hi] = cfg.gain_range_db;
    for chain in &mut project.fx_chains {
        for g in chain.next_chains.values_mut() {
            let db = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            *g = 10f64.powf(db / 20.0);
        }
    }
    Ok((project, stats))
}

/// Bind every input of `project` to a pool stem whose label is allowed.
///
/// Stems are distinct within a project while the filtered pool allows it.
pub fn assign_stems<R: Rng>(
    project: &Project,
    pool: &StemPool,
    allowed: &[String],
    rng: &mut R,
) -> Result<Project, SynthError> {
    if pool.is_empty() {
        return Err(SynthError::EmptyPool);
    }
    for label in allowed {
        if !pool.entries.iter().any(|e| &e.label == label) {
            return Err(SynthError::LabelUnavailable(label.clone()));
        }
    }
    let candidates: Vec<&StemEntry> =
        pool.entries.iter().filter(|e| allowed.is_empty() || allowed.contains(&e.label)).collect();
    let k = project.input_audios.len();
    let distinct = sample_indices(rng, candidates.len(), k.min(candidates.len())).into_vec();
    let mut out = project.clone();
    for (i, a) in out.input_audios.iter_mut().enumerate() {
        let e = match distinct.get(i) {
            Some(&j) => candidates[j],
            None => candidates[rng.random_range(0..candidates.len())],
        };
        a.audio_path = e.path.clone();
        a.audio_type = e.label.clone();
    }
    Ok(out)
}

/// One valid project drawn from `config`.
pub fn synthesize_project<R: Rng>(
    config: &SynthConfig,
    pool: &StemPool,
    registry: &PluginRegistry,
    rng: &mut R,
) -> Result<Synthesized, SynthError> {
    config.check()?;
    let cfg = if config.variable_density { config.randomized(rng) } else { config.clone() };
    let inv = Inventory::new(registry);
    if inv.effects.is_empty() {
        return Err(SynthError::InfeasibleConfig("the registry has no effects to draw".into()));
    }
    let mut last = String::new();
    for _ in 0..MAX_ATTEMPTS {
        let (skeleton, stats) = build(&cfg, &inv, registry, rng)?;
        let project = assign_stems(&skeleton, pool, &cfg.allowed_labels, rng)?;
        let report = validate_project(&project, Some(registry));
        if report.is_ok() {
            return Ok(Synthesized { project, stats, config: cfg });
        }
        last = format!("{:?}", report.distinct_codes());
    }
    Err(SynthError::InfeasibleConfig(format!("no valid project in {MAX_ATTEMPTS} attempts (last: {last})")))
}

/// RNG stream of project `index` in a batch seeded with `seed`.
pub fn project_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64))
}

#[derive(Debug)]
pub struct BatchOutput {
    pub projects: Vec<(usize, Synthesized)>,
    pub skipped: Vec<(usize, SynthError)>,
}

/// `n` projects, generated in parallel; project `i` uses stream `seed + i`.
/// Projects that fail are skipped and logged.
pub fn synthesize_batch(
    config: &SynthConfig,
    pool: &StemPool,
    registry: &PluginRegistry,
    n: usize,
) -> Result<BatchOutput, SynthError> {
    config.check()?;
    if n == 0 {
        return Err(SynthError::InvalidConfig("batch size must be at least 1".into()));
    }
    let results: Vec<(usize, Result<Synthesized, SynthError>)> = (0..n)
        .into_par_iter()
        .map(|i| (i, synthesize_project(config, pool, registry, &mut project_rng(config.seed, i))))
        .collect();
    let mut out = BatchOutput { projects: Vec::with_capacity(n), skipped: Vec::new() };
    for (i, r) in results {
        match r {
            Ok(s) => out.projects.push((i, s)),
            Err(e) => {
                log::warn!("project {i} skipped: {e}");
                out.skipped.push((i, e));
            }
        }
    }
    Ok(out)
}
