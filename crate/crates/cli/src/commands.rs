use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fxgraph_core::dataset::{load_presets, load_projects, project_id, slug, DatasetError, Layout};
use fxgraph_core::io::{
    emit_preset_json, emit_project_yaml, export_node_graph, parse_preset_json, parse_project_yaml_with_warnings,
    PackedReader,
};
use fxgraph_core::preset::{probe_signal, sample_presets, validate_by_clustering, PresetFile};
use fxgraph_core::registry::{PluginDescriptor, REGISTRY_ENV};
use fxgraph_core::scheduler::{backend_by_name, longest_path_depths, InternalBackend};
use fxgraph_core::synth::{synthesize_batch, write_synthetic_pool, StemPool, SynthError};
use fxgraph_core::{
    render_dataset, to_node_graph, validate_project, FxType, OutputMode, PluginRegistry, SynthConfig,
};
use serde_json::json;

use crate::{Cli, CliError, Command, GenPresets, GenProjects, Inspect, Mode, Profile, Render, Validate};

const PROBE_RATE: u32 = 44_100;

/// One line on stdout; a closed pipe (`| head`) is not an error.
fn emit(line: impl std::fmt::Display) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Preset { .. } => CliError::UnknownPlugin(e.to_string()),
            DatasetError::Schedule(_) => CliError::Usage(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed.unwrap_or_else(rand::random);
    let layout = Layout::new(&cli.root);
    let registry = load_registry(cli.registry.as_deref())?;
    match cli.command {
        Command::GenPresets(a) => gen_presets(&layout, registry, seed, a),
        Command::GenProjects(a) => gen_projects(&layout, registry, seed, a),
        Command::Render(a) => render(&layout, registry, seed, a),
        Command::Validate(a) => validate(&layout, registry, a),
        Command::Inspect(a) => inspect(&layout, registry, a),
    }
}

fn load_registry(explicit: Option<&Path>) -> Result<PluginRegistry, CliError> {
    let path = explicit.map(Path::to_path_buf).or_else(|| std::env::var_os(REGISTRY_ENV).map(PathBuf::from));
    match path {
        Some(p) => PluginRegistry::load(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => Ok(PluginRegistry::builtin()),
    }
}

/// Record the effective seed and configuration of a run under `<root>/logs`.
fn write_run_log(layout: &Layout, command: &str, seed: u64, config: serde_json::Value) -> Result<(), CliError> {
    let dir = layout.root.join("logs");
    std::fs::create_dir_all(&dir).map_err(io_err)?;
    let record = json!({ "command": command, "seed": seed, "config": config });
    let text = serde_json::to_string_pretty(&record).map_err(io_err)? + "\n";
    std::fs::write(dir.join(format!("{command}.json")), text).map_err(io_err)?;
    log::info!("{command}: seed {seed}");
    Ok(())
}

/// Registry lookup by full name or by the part after the host prefix
/// (`3 Band EQ` finds `VST3: 3 Band EQ`).
fn find_plugin<'a>(
    registry: &'a PluginRegistry,
    name: &str,
    fx_type: Option<&str>,
) -> Result<&'a PluginDescriptor, CliError> {
    let name = name.trim();
    let short = |d: &PluginDescriptor| {
        d.fx_name.split_once(": ").map(|(_, s)| s.eq_ignore_ascii_case(name)).unwrap_or(false)
    };
    let d = registry
        .get(name)
        .or_else(|| registry.descriptors().find(|d| short(d)))
        .ok_or_else(|| CliError::UnknownPlugin(format!("UNKNOWN_PLUGIN: `{name}`")))?;
    if let Some(t) = fx_type {
        let t: FxType = t.parse().map_err(|e| CliError::UnknownPlugin(format!("UNKNOWN_PLUGIN: {e}")))?;
        if t != d.fx_type {
            return Err(CliError::UnknownPlugin(format!(
                "UNKNOWN_PLUGIN: `{}` is {}, not {t}",
                d.fx_name, d.fx_type
            )));
        }
    }
    Ok(d)
}

fn selected_plugins<'a>(registry: &'a PluginRegistry, a: &GenPresets) -> Result<Vec<&'a PluginDescriptor>, CliError> {
    let mut out: Vec<&PluginDescriptor> = Vec::new();
    for pair in a.plugin_name.chunks(2) {
        out.push(find_plugin(registry, &pair[0], pair.get(1).map(String::as_str))?);
    }
    if let Some(list) = &a.plugin_list {
        let text = std::fs::read_to_string(list).map_err(|e| CliError::Io(format!("{}: {e}", list.display())))?;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (name, ty) = match line.rsplit_once(',') {
                Some((n, t)) => (n, Some(t.trim())),
                None => (line, None),
            };
            out.push(find_plugin(registry, name, ty)?);
        }
    }
    if a.use_full_set {
        out.extend(registry.descriptors());
    } else if a.use_reduced_set || out.is_empty() {
        out.extend(registry.reduced_set());
    }
    let mut seen = Vec::new();
    out.retain(|d| {
        let fresh = !seen.contains(&d.fx_name);
        seen.push(d.fx_name.clone());
        fresh
    });
    Ok(out)
}

fn gen_presets(layout: &Layout, registry: PluginRegistry, seed: u64, a: GenPresets) -> Result<(), CliError> {
    if a.presets == 0 {
        return Err(CliError::Usage("--presets must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&a.default_prob) {
        return Err(CliError::Usage("--default-prob must lie in [0, 1]".into()));
    }
    let candidates = a.candidates.unwrap_or(4 * a.presets);
    if a.validate_generation && candidates < a.presets {
        return Err(CliError::Usage(format!("--candidates {candidates} is below --presets {}", a.presets)));
    }
    let plugins = selected_plugins(&registry, &a)?;
    let dir = layout.presets();
    std::fs::create_dir_all(&dir).map_err(io_err)?;
    let probe = probe_signal(PROBE_RATE, seed);
    let mut written = Vec::new();
    for (i, d) in plugins.iter().enumerate() {
        let plugin_seed = seed.wrapping_add(i as u64);
        let presets = if a.validate_generation {
            let pool = sample_presets(d, &d.param_grid, candidates, a.default_prob, plugin_seed);
            validate_by_clustering(d, &pool, &probe, a.presets, &InternalBackend, plugin_seed)
                .map_err(|e| CliError::Usage(format!("{}: {e}", d.fx_name)))?
                .presets
        } else {
            sample_presets(d, &d.param_grid, a.presets, a.default_prob, plugin_seed)
        };
        let file = PresetFile::from_parts(d, &d.param_grid, presets);
        let path = dir.join(format!("{}.json", slug(&d.fx_name)));
        std::fs::write(&path, emit_preset_json(&file)).map_err(io_err)?;
        emit(format_args!("{}\t{}", d.fx_name, path.display()));
        written.push(d.fx_name.clone());
    }
    write_run_log(
        layout,
        "gen-presets",
        seed,
        json!({
            "plugins": written,
            "presets": a.presets,
            "default_prob": a.default_prob,
            "validate_generation": a.validate_generation,
            "candidates": candidates,
        }),
    )
}

fn synth_config(a: &GenProjects, seed: u64) -> Result<SynthConfig, CliError> {
    let mut c = match a.profile {
        Profile::Shallow => SynthConfig::shallow(),
        Profile::Deep => SynthConfig::deep(),
    };
    c.seed = seed;
    c.min_chains = a.min_chains.unwrap_or(c.min_chains);
    c.max_chains = a.max_chains.unwrap_or(c.max_chains);
    c.min_stems = a.min_stems.unwrap_or(c.min_stems);
    c.max_stems = a.max_stems.unwrap_or(c.max_stems);
    if let Some(d) = &a.chain_depth {
        c.chain_depth_dist = d.clone();
    }
    c.sidechain_prob = a.sidechain_prob.unwrap_or(c.sidechain_prob);
    c.splitter_prob = a.splitter_prob.unwrap_or(c.splitter_prob);
    c.complexity = a.complexity.unwrap_or(c.complexity);
    c.variable_density |= a.variable_density;
    if let Some(g) = &a.gain_range_db {
        let [lo, hi] = g[..] else {
            return Err(CliError::Usage("--gain-range-db takes exactly LO,HI".into()));
        };
        c.gain_range_db = [lo, hi];
    }
    if let Some(l) = &a.labels {
        c.allowed_labels = l.iter().map(|s| s.trim().to_ascii_lowercase()).collect();
    }
    c.check().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(c)
}

fn has_wav(dir: &Path) -> bool {
    walk_wavs(dir).next().is_some()
}

fn walk_wavs(dir: &Path) -> impl Iterator<Item = PathBuf> {
    let tracks = std::fs::read_dir(dir).into_iter().flatten().flatten().map(|e| e.path());
    tracks
        .filter(|p| p.is_dir())
        .flat_map(|t| std::fs::read_dir(t).into_iter().flatten().flatten().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
}

fn histogram(values: impl Iterator<Item = usize>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v).or_default() += 1;
    }
    h
}

fn gen_projects(layout: &Layout, mut registry: PluginRegistry, seed: u64, a: GenProjects) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let config = synth_config(&a, seed)?;
    load_presets(&layout.presets(), &mut registry)?;
    let stems = layout.stems();
    if let Some(tracks) = a.synthetic_stems.filter(|_| !has_wav(&stems)) {
        let labels: Vec<&str> = if config.allowed_labels.is_empty() {
            vec!["bass", "guitar", "piano", "drums"]
        } else {
            config.allowed_labels.iter().map(String::as_str).collect()
        };
        write_synthetic_pool(&stems, tracks, &labels, a.stem_seconds, PROBE_RATE, seed).map_err(io_err)?;
    }
    let pool = StemPool::scan(&stems, &a.dataset_name).map_err(|e| match e {
        SynthError::UnknownParser(_) => CliError::Usage(e.to_string()),
        _ => CliError::Io(format!("{}: {e}", stems.display())),
    })?;
    if pool.is_empty() {
        return Err(CliError::Io(format!("no stems under {}", stems.display())));
    }

    let batch = synthesize_batch(&config, &pool, &registry, a.count).map_err(|e| match e {
        SynthError::InfeasibleConfig(_) | SynthError::LabelUnavailable(_) => CliError::Infeasible(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    let dir = layout.projects();
    std::fs::create_dir_all(&dir).map_err(io_err)?;
    // stale files from an earlier run would join this dataset
    for e in std::fs::read_dir(&dir).map_err(io_err)?.flatten() {
        let name = e.file_name();
        let name = name.to_string_lossy();
        if name.starts_with("project_") && name.ends_with(".yaml") {
            std::fs::remove_file(e.path()).map_err(io_err)?;
        }
    }
    for (i, s) in &batch.projects {
        std::fs::write(dir.join(format!("{}.yaml", project_id(*i))), emit_project_yaml(&s.project)).map_err(io_err)?;
    }

    let stats: Vec<_> = batch.projects.iter().map(|(_, s)| &s.stats).collect();
    let sum = |f: fn(&fxgraph_core::synth::SiteStats) -> usize| stats.iter().map(|s| f(s)).sum::<usize>();
    let summary = json!({
        "projects": batch.projects.len(),
        "skipped": batch.skipped.len(),
        "chains": histogram(batch.projects.iter().map(|(_, s)| s.project.chain_count())),
        "stems": histogram(batch.projects.iter().map(|(_, s)| s.project.input_audios.len())),
        "depths": histogram(stats.iter().flat_map(|s| s.depths.iter().copied())),
        "splitter_sites": sum(|s| s.splitter_sites),
        "splitters": sum(|s| s.splitters),
        "sidechain_sites": sum(|s| s.sidechain_sites),
        "sidechains": sum(|s| s.sidechains),
    });
    emit(&summary);
    write_run_log(
        layout,
        "gen-projects",
        seed,
        json!({
            "count": a.count,
            "dataset_name": a.dataset_name,
            "synthetic_stems": a.synthetic_stems,
            "stem_seconds": a.stem_seconds,
            "max_infeasible_rate": a.max_infeasible_rate,
            "synth": config,
        }),
    )?;
    let rate = batch.skipped.len() as f64 / a.count as f64;
    if rate > a.max_infeasible_rate {
        return Err(CliError::Infeasible(format!(
            "INFEASIBLE_CONFIG: {} of {} projects could not be generated",
            batch.skipped.len(),
            a.count
        )));
    }
    Ok(())
}

fn render(layout: &Layout, mut registry: PluginRegistry, seed: u64, a: Render) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.min_success) {
        return Err(CliError::Usage("--min-success must lie in [0, 1]".into()));
    }
    let backend = backend_by_name(&a.backend).map_err(|e| CliError::Backend(e.to_string()))?;
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    load_presets(&layout.presets(), &mut registry)?;
    let projects = load_projects(&layout.projects())?;
    let mode = match a.mode {
        Mode::Human => OutputMode::Human,
        Mode::Packed => OutputMode::Packed,
    };
    let report = render_dataset(&projects, &layout.stems(), &registry, backend.as_ref(), workers, mode, &layout.renders())?;
    for (id, why) in &report.failed {
        log::warn!("{id} failed: {why}");
    }
    emit(
        json!({ "rendered": report.rendered.len(), "failed": report.failed.len(), "success": report.success_fraction() })
    );
    write_run_log(
        layout,
        "render",
        seed,
        json!({ "mode": format!("{:?}", a.mode).to_lowercase(), "backend": a.backend, "workers": workers, "min_success": a.min_success }),
    )?;
    if report.success_fraction() < a.min_success {
        return Err(CliError::Invalid);
    }
    Ok(())
}

fn project_files(layout: &Layout, paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let roots = if paths.is_empty() { vec![layout.projects()] } else { paths.to_vec() };
    let mut out = Vec::new();
    for p in roots {
        let p = if p.is_absolute() || p.exists() { p } else { layout.root.join(p) };
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?
                .flatten()
                .map(|e| e.path())
                .filter(|f| f.extension().is_some_and(|e| e == "yaml" || e == "yml"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p);
        }
    }
    Ok(out)
}

fn validate(layout: &Layout, mut registry: PluginRegistry, a: Validate) -> Result<(), CliError> {
    load_presets(&layout.presets(), &mut registry)?;
    let mut all_ok = true;
    for f in project_files(layout, &a.paths)? {
        let text = std::fs::read_to_string(&f).map_err(|e| CliError::Io(format!("{}: {e}", f.display())))?;
        let record = match parse_project_yaml_with_warnings(&text) {
            Ok((p, warnings)) => {
                let r = validate_project(&p, Some(&registry));
                all_ok &= r.is_ok();
                json!({ "file": f, "ok": r.is_ok(), "violations": r.violations, "warnings": warnings })
            }
            Err(e) => {
                all_ok = false;
                json!({ "file": f, "ok": false, "error": e.to_string() })
            }
        };
        emit(&record);
    }
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Invalid)
    }
}

fn inspect(layout: &Layout, mut registry: PluginRegistry, a: Inspect) -> Result<(), CliError> {
    let path = if a.path.exists() { a.path.clone() } else { layout.root.join(&a.path) };
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
    let read = || std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())));
    match ext {
        "yaml" | "yml" => {
            load_presets(&layout.presets(), &mut registry)?;
            let (p, warnings) = parse_project_yaml_with_warnings(&read()?).map_err(|e| CliError::Usage(e.to_string()))?;
            let report = validate_project(&p, Some(&registry));
            let graph = to_node_graph(&p, &registry).ok();
            emit(
                json!({
                    "chains": p.chain_count(),
                    "inputs": p.input_audios.len(),
                    "outputs": p.output_chains(),
                    "effects": p.fx_chains.iter().map(|c| c.fx_chain.len()).collect::<Vec<_>>(),
                    "layers": longest_path_depths(&p),
                    "nodes": graph.as_ref().map(|g| g.nodes.len()),
                    "edges": graph.as_ref().map(|g| g.edges.len()),
                    "codes": report.distinct_codes(),
                    "warnings": warnings,
                })
            );
            if a.graph {
                let g = to_node_graph(&p, &registry).map_err(|e| CliError::Usage(e.to_string()))?;
                emit(export_node_graph(&g).trim_end());
            }
        }
        "json" => {
            let f = parse_preset_json(&read()?).map_err(|e| CliError::Usage(e.to_string()))?;
            emit(
                json!({
                    "fx_name": f.fx_name,
                    "fx_type": f.fx_type.as_str(),
                    "grids": f.valid_params.iter().map(|(k, v)| (k.clone(), v.len())).collect::<BTreeMap<_, _>>(),
                    "presets": f.presets.len(),
                })
            );
        }
        _ => {
            let mut reader = PackedReader::open(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let ids: Vec<String> = reader.ids().map(String::from).collect();
            for id in ids {
                let rec = reader.read(&id).map_err(io_err)?;
                let blobs: Vec<_> = rec
                    .blobs
                    .iter()
                    .map(|(n, b)| json!({ "name": n, "channels": b.channels(), "frames": b.frames() }))
                    .collect();
                emit(json!({ "id": id, "blobs": blobs }));
            }
        }
    }
    Ok(())
}
