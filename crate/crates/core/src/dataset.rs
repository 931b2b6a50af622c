//! Dataset layout under a root directory, and batch rendering into it.
//!
//! ```text
//! <root>/presets/<plugin>.json
//! <root>/projects/<id>.yaml
//! <root>/stems/<track>/<instrument>.wav
//! <root>/renders/<id>/{<output_audio>, project.yaml, graph.json}   human mode
//! <root>/renders/dataset.fxpack                                     packed mode
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::dsp::AudioBuffer;
use crate::io::{
    emit_project_yaml, export_node_graph, parse_preset_json, parse_project_yaml, read_wav, write_packed,
    write_wav, IoError, PackedRecord,
};
use crate::model::Project;
use crate::nodegraph::to_node_graph;
use crate::registry::{PluginRegistry, RegistryError};
use crate::scheduler::{compute_layers, execute_plan, BufferStore, RenderBackend, RenderJob, ScheduleError};
use crate::validate::validate_project;

pub const PACKED_FILE: &str = "dataset.fxpack";

/// Projects rendered per scheduler run.
pub const RENDER_BATCH: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{file}: {source}")]
    File { file: PathBuf, source: IoError },
    #[error("{file}: {source}")]
    Preset { file: PathBuf, source: RegistryError },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Human,
    Packed,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }
    pub fn presets(&self) -> PathBuf {
        self.root.join("presets")
    }
    pub fn projects(&self) -> PathBuf {
        self.root.join("projects")
    }
    pub fn stems(&self) -> PathBuf {
        self.root.join("stems")
    }
    pub fn renders(&self) -> PathBuf {
        self.root.join("renders")
    }
}

pub fn project_id(index: usize) -> String {
    format!("project_{index:05}")
}

/// File-name-safe form of a plugin name: `VST3: 3 Band EQ` → `vst3_3_band_eq`.
pub fn slug(name: &str) -> String {
    let mut s = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            s.push(ch.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, IoError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(ext))
        .collect();
    files.sort();
    Ok(files)
}

/// All `*.yaml` projects in `dir`, sorted by file name; ids are file stems.
pub fn load_projects(dir: &Path) -> Result<Vec<(String, Project)>, DatasetError> {
    files_with_ext(dir, "yaml")?
        .into_iter()
        .map(|f| {
            let text = std::fs::read_to_string(&f).map_err(IoError::from)?;
            let p = parse_project_yaml(&text).map_err(|source| DatasetError::File { file: f.clone(), source })?;
            let id = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            Ok((id, p))
        })
        .collect()
}

/// Attach every preset file in `dir` (if it exists) to `registry`.
pub fn load_presets(dir: &Path, registry: &mut PluginRegistry) -> Result<usize, DatasetError> {
    if !dir.is_dir() {
        return Ok(0);
    }
    let files = files_with_ext(dir, "json")?;
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(IoError::from)?;
        let preset = parse_preset_json(&text).map_err(|source| DatasetError::File { file: f.clone(), source })?;
        registry.attach_presets(&preset).map_err(|source| DatasetError::Preset { file: f.clone(), source })?;
    }
    Ok(files.len())
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct RenderReport {
    pub rendered: Vec<String>,
    pub failed: Vec<(String, String)>,
}

impl RenderReport {
    pub fn success_fraction(&self) -> f64 {
        let total = self.rendered.len() + self.failed.len();
        if total == 0 {
            1.0
        } else {
            self.rendered.len() as f64 / total as f64
        }
    }
}

fn output_name(p: &Project) -> String {
    let name = p.output_audio.rsplit(['/', '\\']).next().unwrap_or_default();
    if name.is_empty() || name == "project.yaml" || name == "graph.json" {
        "mix.wav".into()
    } else {
        name.to_string()
    }
}

/// Render `projects` with stems from `stems_root` and write them to `out`.
///
/// Invalid projects and projects with unreadable stems are reported as
/// failures; the rest of the batch still renders.
pub fn render_dataset(
    projects: &[(String, Project)],
    stems_root: &Path,
    registry: &PluginRegistry,
    backend: &dyn RenderBackend,
    workers: usize,
    mode: OutputMode,
    out: &Path,
) -> Result<RenderReport, DatasetError> {
    let mut report = RenderReport::default();
    let mut cache: HashMap<String, Result<AudioBuffer, String>> = HashMap::new();
    let mut accepted: Vec<(&String, &Project, Vec<AudioBuffer>)> = Vec::new();
    for (id, p) in projects {
        let r = validate_project(p, Some(registry));
        if !r.is_ok() {
            let codes: Vec<&str> = r.distinct_codes().iter().map(|c| c.as_str()).collect();
            report.failed.push((id.clone(), format!("invalid: {}", codes.join(","))));
            continue;
        }
        let stems: Result<Vec<AudioBuffer>, String> = p
            .input_audios
            .iter()
            .map(|a| {
                cache
                    .entry(a.audio_path.clone())
                    .or_insert_with(|| read_wav(&stems_root.join(&a.audio_path)).map_err(|e| format!("{}: {e}", a.audio_path)))
                    .clone()
            })
            .collect();
        match stems {
            Ok(s) => accepted.push((id, p, s)),
            Err(e) => report.failed.push((id.clone(), e)),
        }
    }

    std::fs::create_dir_all(out).map_err(IoError::from)?;
    let mut records = Vec::new();
    // Every chain output of a batch stays in the store until the batch ends.
    for batch in accepted.chunks(RENDER_BATCH) {
        let jobs: Vec<RenderJob> =
            batch.iter().map(|(_, p, s)| RenderJob { project: (*p).clone(), stems: s.clone() }).collect();
        let plan = compute_layers(&jobs.iter().map(|j| j.project.clone()).collect::<Vec<_>>())?;
        let store = BufferStore::new();
        let summary = execute_plan(&plan, &jobs, registry, backend, &store, workers)?;
        let failures: HashMap<usize, String> =
            summary.failures.iter().map(|f| (f.project, f.message.clone())).collect();

        for (k, (id, p, stems)) in batch.iter().enumerate() {
            let output: Option<&Arc<AudioBuffer>> = summary.outputs.get(k).and_then(Option::as_ref);
            let Some(mixdown) = output.filter(|_| !failures.contains_key(&k)) else {
                let why = failures.get(&k).cloned().unwrap_or_else(|| "no output".into());
                report.failed.push(((*id).clone(), why));
                continue;
            };
            let graph = match to_node_graph(p, registry) {
                Ok(g) => export_node_graph(&g),
                Err(e) => {
                    report.failed.push(((*id).clone(), e.to_string()));
                    continue;
                }
            };
            let yaml = emit_project_yaml(p);
            match mode {
                OutputMode::Human => {
                    let dir = out.join(id.as_str());
                    std::fs::create_dir_all(&dir).map_err(IoError::from)?;
                    write_wav(&dir.join(output_name(p)), mixdown)?;
                    std::fs::write(dir.join("project.yaml"), &yaml).map_err(IoError::from)?;
                    std::fs::write(dir.join("graph.json"), &graph).map_err(IoError::from)?;
                }
                OutputMode::Packed => {
                    let mut blobs: Vec<(String, AudioBuffer)> =
                        stems.iter().enumerate().map(|(i, s)| (format!("input_{i}"), s.clone())).collect();
                    blobs.push(("output".into(), (**mixdown).clone()));
                    records.push(PackedRecord { id: (*id).clone(), project_yaml: yaml, graph_json: graph, blobs });
                }
            }
            report.rendered.push((*id).clone());
        }
    }
    if mode == OutputMode::Packed {
        write_packed(&out.join(PACKED_FILE), &records)?;
    }
    report.failed.sort();
    Ok(report)
}
