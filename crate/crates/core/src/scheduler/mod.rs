//! Layered batch rendering across many projects.
//!
//! Chains are the scheduling unit. All chains of all projects are layered
//! together by Kahn's algorithm over main edges; each layer is a parallel
//! batch. Inside a layer, a chain whose compressor is keyed by another chain
//! of the same layer waits for that chain (sub-waves).

mod backend;
mod store;

use std::collections::BTreeMap;
use std::sync::Arc;

use parking_lot::Mutex;
use rayon::prelude::*;

pub use backend::{
    backend_by_name, BackendError, ExternalHostBackend, IdentityBackend, InternalBackend,
    RenderBackend,
};
pub use store::{AlreadyWritten, BufferStore, StoreKey};

use crate::dsp::{conform_stems, mix, project_frames, AudioBuffer, TAIL_SECONDS};
use crate::graph::{chain_dag, GraphError};
use crate::model::Project;
use crate::registry::{PluginRegistry, ResolvedEffect};
use crate::validate::incoming_edges;

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("CYCLE_DETECTED: project {project} has a cycle")]
    CycleDetected { project: usize },
    #[error("project {project}: {source}")]
    Graph { project: usize, source: GraphError },
    #[error("MISSING_UPSTREAM: buffer `{0}` is not in the store")]
    MissingUpstream(StoreKey),
    #[error("{projects} projects but {jobs} stem sets")]
    JobCount { projects: usize, jobs: usize },
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainRef {
    pub project: usize,
    pub chain: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Main,
    Sidechain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanEdge {
    pub from: ChainRef,
    pub to: ChainRef,
    pub kind: EdgeKind,
}

/// Cross-project schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPlan {
    /// Tasks per layer, sources of intra-layer sidechains before consumers.
    pub layers: Vec<Vec<ChainRef>>,
    /// Sub-wave of each task inside its layer.
    pub waves: BTreeMap<ChainRef, usize>,
    /// `layer_of[p][c]`.
    pub layer_of: Vec<Vec<usize>>,
    /// Main-edge in-degree of every chain before execution.
    pub indegree: BTreeMap<ChainRef, usize>,
    pub edges: Vec<PlanEdge>,
}

impl LayerPlan {
    pub fn task_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    fn main_successors(&self) -> BTreeMap<ChainRef, Vec<ChainRef>> {
        let mut succ: BTreeMap<ChainRef, Vec<ChainRef>> = BTreeMap::new();
        for e in self.edges.iter().filter(|e| e.kind == EdgeKind::Main) {
            succ.entry(e.from).or_default().push(e.to);
        }
        succ
    }
}

/// Layer every chain of every project.
pub fn compute_layers(projects: &[Project]) -> Result<LayerPlan, ScheduleError> {
    let mut edges = Vec::new();
    let mut indegree = BTreeMap::new();
    let mut succ: BTreeMap<ChainRef, Vec<ChainRef>> = BTreeMap::new();
    for (p, project) in projects.iter().enumerate() {
        let full = chain_dag(project, true)
            .map_err(|source| ScheduleError::Graph { project: p, source })?;
        if !full.is_acyclic() {
            return Err(ScheduleError::CycleDetected { project: p });
        }
        for c in 0..project.fx_chains.len() {
            indegree.insert(
                ChainRef {
                    project: p,
                    chain: c,
                },
                0usize,
            );
        }
        for (c, chain) in project.fx_chains.iter().enumerate() {
            let from = ChainRef {
                project: p,
                chain: c,
            };
            for &t in chain.next_chains.keys() {
                let to = ChainRef {
                    project: p,
                    chain: t,
                };
                edges.push(PlanEdge {
                    from,
                    to,
                    kind: EdgeKind::Main,
                });
                *indegree.get_mut(&to).expect("index checked by chain_dag") += 1;
                succ.entry(from).or_default().push(to);
            }
            for s in chain.fx_chain.iter().filter_map(|fx| fx.sidechain_input) {
                edges.push(PlanEdge {
                    from: ChainRef {
                        project: p,
                        chain: s,
                    },
                    to: from,
                    kind: EdgeKind::Sidechain,
                });
            }
        }
    }

    // Kahn waves over main edges, all projects at once
    let mut remaining = indegree.clone();
    let mut layer_of: Vec<Vec<usize>> = projects
        .iter()
        .map(|p| vec![0; p.fx_chains.len()])
        .collect();
    let mut layers = Vec::new();
    let mut current: Vec<ChainRef> = remaining
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&r, _)| r)
        .collect();
    let mut seen = 0;
    while !current.is_empty() {
        seen += current.len();
        let mut next = Vec::new();
        for r in &current {
            layer_of[r.project][r.chain] = layers.len();
            for t in succ.get(r).into_iter().flatten() {
                let d = remaining.get_mut(t).expect("known chain");
                *d -= 1;
                if *d == 0 {
                    next.push(*t);
                }
            }
        }
        next.sort_unstable();
        layers.push(current);
        current = next;
    }
    if seen != indegree.len() {
        // main edges alone cycle; the combined check above should have caught it
        let project = remaining
            .iter()
            .find(|(_, &d)| d > 0)
            .map_or(0, |(r, _)| r.project);
        return Err(ScheduleError::CycleDetected { project });
    }

    // Sub-waves: longest path over same-layer sidechain edges.
    let mut waves: BTreeMap<ChainRef, usize> = indegree.keys().map(|&r| (r, 0)).collect();
    let same_layer: Vec<&PlanEdge> = edges
        .iter()
        .filter(|e| {
            e.kind == EdgeKind::Sidechain
                && layer_of[e.from.project][e.from.chain] == layer_of[e.to.project][e.to.chain]
        })
        .collect();
    // at most |V| relaxation rounds; acyclicity guarantees convergence
    for _ in 0..=same_layer.len() {
        let mut changed = false;
        for e in &same_layer {
            let w = waves[&e.from] + 1;
            if waves[&e.to] < w {
                waves.insert(e.to, w);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for layer in &mut layers {
        layer.sort_by_key(|r| (waves[r], *r));
    }
    Ok(LayerPlan {
        layers,
        waves,
        layer_of,
        indegree,
        edges,
    })
}

/// Gain-weighted sum of a chain's stems and upstream outputs.
///
/// Sources are summed in a fixed order: stems in input order, then upstream
/// chains by ascending index, splitter bands low to high.
pub fn premix_inputs(
    project: &Project,
    project_id: usize,
    chain: usize,
    store: &BufferStore,
    frames: usize,
    sample_rate: u32,
) -> Result<AudioBuffer, ScheduleError> {
    let mut held: Vec<(Arc<AudioBuffer>, f64)> = Vec::new();
    for (i, _) in project.stems_into(chain) {
        let key = StoreKey::Stem {
            project: project_id,
            input: i,
        };
        held.push((
            store.get(&key).ok_or(ScheduleError::MissingUpstream(key))?,
            1.0,
        ));
    }
    for (src, gain, bands) in &incoming_edges(project)[chain] {
        let ports: Vec<usize> = bands.clone().unwrap_or_else(|| vec![0]);
        for port in ports {
            let key = StoreKey::Chain {
                project: project_id,
                chain: *src,
                port,
            };
            held.push((
                store.get(&key).ok_or(ScheduleError::MissingUpstream(key))?,
                *gain,
            ));
        }
    }
    let sources: Vec<(&AudioBuffer, f64)> = held.iter().map(|(b, g)| (b.as_ref(), *g)).collect();
    Ok(mix(&sources, 2, frames, sample_rate))
}

/// One single-path render, with its inputs already resolved.
#[derive(Debug, Clone)]
pub struct RenderTask {
    pub project_id: usize,
    pub chain_index: usize,
    pub premixed_input: AudioBuffer,
    pub sidechain_inputs: BTreeMap<usize, Arc<AudioBuffer>>,
    pub effects: Vec<ResolvedEffect>,
    pub output_key: StoreKey,
}

/// A project with its stem audio, indexed like `input_audios`.
#[derive(Debug, Clone)]
pub struct RenderJob {
    pub project: Project,
    pub stems: Vec<AudioBuffer>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectFailure {
    pub project: usize,
    pub chain: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct RenderSummary {
    pub layers_executed: usize,
    pub tasks_run: usize,
    pub tasks_skipped: usize,
    pub failures: Vec<ProjectFailure>,
    /// Final mix per project; `None` for failed projects.
    pub outputs: Vec<Option<Arc<AudioBuffer>>>,
}

impl RenderSummary {
    pub fn succeeded(&self) -> usize {
        self.outputs.iter().filter(|o| o.is_some()).count()
    }
}

struct ProjectState {
    frames: usize,
    sample_rate: u32,
    output_chain: Option<usize>,
}

/// Execute `plan` over `jobs` with at most `max_workers` threads.
///
/// A failing task marks its project failed; the project's remaining tasks
/// are skipped and every other project proceeds.
pub fn execute_plan(
    plan: &LayerPlan,
    jobs: &[RenderJob],
    registry: &PluginRegistry,
    backend: &dyn RenderBackend,
    store: &BufferStore,
    max_workers: usize,
) -> Result<RenderSummary, ScheduleError> {
    if plan.layer_of.len() != jobs.len() {
        return Err(ScheduleError::JobCount {
            projects: plan.layer_of.len(),
            jobs: jobs.len(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_workers.max(1))
        .build()
        .map_err(|e| ScheduleError::Pool(e.to_string()))?;

    let failed: Mutex<BTreeMap<usize, ProjectFailure>> = Mutex::new(BTreeMap::new());
    let mut states = Vec::with_capacity(jobs.len());
    for (p, job) in jobs.iter().enumerate() {
        let sample_rate = job
            .stems
            .first()
            .map_or(crate::dsp::DEFAULT_SAMPLE_RATE, AudioBuffer::sample_rate);
        let frames = project_frames(
            &job.stems,
            (TAIL_SECONDS * f64::from(sample_rate)).round() as usize,
        );
        let outputs = job.project.output_chains();
        states.push(ProjectState {
            frames,
            sample_rate,
            output_chain: (outputs.len() == 1).then(|| outputs[0]),
        });
        if job.stems.len() != job.project.input_audios.len() {
            failed.lock().insert(
                p,
                ProjectFailure {
                    project: p,
                    chain: None,
                    message: format!(
                        "{} inputs, {} stems",
                        job.project.input_audios.len(),
                        job.stems.len()
                    ),
                },
            );
            continue;
        }
        if job.stems.iter().any(|s| s.sample_rate() != sample_rate) {
            failed.lock().insert(
                p,
                ProjectFailure {
                    project: p,
                    chain: None,
                    message: "stems differ in sample rate".into(),
                },
            );
            continue;
        }
        for (i, stem) in conform_stems(&job.stems, 2, frames).into_iter().enumerate() {
            store
                .insert(
                    StoreKey::Stem {
                        project: p,
                        input: i,
                    },
                    stem,
                )
                .map_err(|e| ScheduleError::MissingUpstream(e.0))?;
        }
    }

    let succ = plan.main_successors();
    let mut remaining = plan.indegree.clone();
    let mut summary = RenderSummary::default();
    for (li, layer) in plan.layers.iter().enumerate() {
        for r in layer {
            assert_eq!(
                remaining[r], 0,
                "layer {li} task {r:?} still has unresolved inputs"
            );
        }
        let mut start = 0;
        while start < layer.len() {
            let wave = plan.waves[&layer[start]];
            let end = start
                + layer[start..]
                    .iter()
                    .take_while(|r| plan.waves[r] == wave)
                    .count();
            let batch = &layer[start..end];
            let results: Vec<bool> = pool.install(|| {
                batch
                    .par_iter()
                    .map(|r| {
                        if failed.lock().contains_key(&r.project) {
                            return false;
                        }
                        let state = &states[r.project];
                        let outcome = run_task(
                            &jobs[r.project].project,
                            *r,
                            state,
                            registry,
                            backend,
                            store,
                        );
                        if let Err(message) = outcome {
                            log::warn!("project {} chain {} failed: {message}", r.project, r.chain);
                            failed.lock().entry(r.project).or_insert(ProjectFailure {
                                project: r.project,
                                chain: Some(r.chain),
                                message,
                            });
                            return false;
                        }
                        true
                    })
                    .collect()
            });
            summary.tasks_run += results.iter().filter(|&&ok| ok).count();
            summary.tasks_skipped += results.iter().filter(|&&ok| !ok).count();
            start = end;
        }
        for r in layer {
            for t in succ.get(r).into_iter().flatten() {
                *remaining.get_mut(t).expect("known chain") -= 1;
            }
        }
        summary.layers_executed += 1;
    }

    let failed = failed.into_inner();
    summary.outputs = states
        .iter()
        .enumerate()
        .map(|(p, s)| {
            if failed.contains_key(&p) {
                return None;
            }
            s.output_chain.and_then(|c| {
                store.get(&StoreKey::Chain {
                    project: p,
                    chain: c,
                    port: 0,
                })
            })
        })
        .collect();
    summary.failures = failed.into_values().collect();
    Ok(summary)
}

fn run_task(
    project: &Project,
    r: ChainRef,
    state: &ProjectState,
    registry: &PluginRegistry,
    backend: &dyn RenderBackend,
    store: &BufferStore,
) -> Result<(), String> {
    let chain = &project.fx_chains[r.chain];
    let input = premix_inputs(
        project,
        r.project,
        r.chain,
        store,
        state.frames,
        state.sample_rate,
    )
    .map_err(|e| e.to_string())?;
    let effects = chain
        .fx_chain
        .iter()
        .map(|fx| registry.resolve(fx))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mut sidechain_inputs = BTreeMap::new();
    for (pos, fx) in chain.fx_chain.iter().enumerate() {
        if let Some(s) = fx.sidechain_input {
            let ports = store.chain_ports(r.project, s);
            let tap = match ports.len() {
                0 => {
                    return Err(ScheduleError::MissingUpstream(StoreKey::Chain {
                        project: r.project,
                        chain: s,
                        port: 0,
                    })
                    .to_string())
                }
                1 => Arc::clone(&ports[0]),
                _ => Arc::new(crate::dsp::sum_bands(
                    &ports.iter().map(|b| b.as_ref().clone()).collect::<Vec<_>>(),
                )),
            };
            sidechain_inputs.insert(pos, tap);
        }
    }
    let task = RenderTask {
        project_id: r.project,
        chain_index: r.chain,
        premixed_input: input,
        sidechain_inputs,
        effects,
        output_key: StoreKey::Chain {
            project: r.project,
            chain: r.chain,
            port: 0,
        },
    };
    let sidechains: BTreeMap<usize, &AudioBuffer> = task
        .sidechain_inputs
        .iter()
        .map(|(&k, v)| (k, v.as_ref()))
        .collect();
    let ports = backend
        .render_path(
            &task.effects,
            &task.premixed_input,
            &sidechains,
            state.sample_rate,
        )
        .map_err(|e| e.to_string())?;
    for (port, buf) in ports.into_iter().enumerate() {
        let key = StoreKey::Chain {
            project: task.project_id,
            chain: task.chain_index,
            port,
        };
        store.insert(key, buf).map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Longest main-edge path ending at each chain; an independent check on
/// [`compute_layers`].
pub fn longest_path_depths(project: &Project) -> Option<Vec<usize>> {
    let n = project.fx_chains.len();
    let mut preds = vec![Vec::new(); n];
    for (c, chain) in project.fx_chains.iter().enumerate() {
        for &t in chain.next_chains.keys() {
            preds.get_mut(t)?.push(c);
        }
    }
    fn depth(
        c: usize,
        preds: &[Vec<usize>],
        memo: &mut [Option<usize>],
        stack: &mut Vec<bool>,
    ) -> Option<usize> {
        if let Some(d) = memo[c] {
            return Some(d);
        }
        if stack[c] {
            return None;
        }
        stack[c] = true;
        let mut d = 0;
        for &p in &preds[c] {
            d = d.max(depth(p, preds, memo, stack)? + 1);
        }
        stack[c] = false;
        memo[c] = Some(d);
        Some(d)
    }
    let mut memo = vec![None; n];
    let mut stack = vec![false; n];
    (0..n)
        .map(|c| depth(c, &preds, &mut memo, &mut stack))
        .collect()
}
