use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fxgraph_bench::{jobs, noise, projects};
use fxgraph_core::dsp::process_effect;
use fxgraph_core::scheduler::{compute_layers, execute_plan, BufferStore, InternalBackend};
use fxgraph_core::{normalize, to_node_graph, validate_project, PluginRegistry};

fn effects(c: &mut Criterion) {
    let reg = PluginRegistry::builtin();
    let x = noise(1.0, 1);
    let mut group = c.benchmark_group("effect_1s_stereo");
    for d in reg.descriptors() {
        let fx = reg.resolve(&reg.neutral_setting(&d.fx_name).unwrap()).unwrap();
        group.bench_function(&d.fx_name, |b| b.iter(|| process_effect(&fx, black_box(&x), Some(&x)).unwrap()));
    }
    group.finish();
}

fn graph_passes(c: &mut Criterion) {
    let reg = PluginRegistry::builtin();
    let batch = projects(&reg, 256, 10, 2);
    c.bench_function("validate_256", |b| b.iter(|| batch.iter().all(|p| validate_project(p, Some(&reg)).is_ok())));
    c.bench_function("node_graph_256", |b| b.iter(|| batch.iter().map(|p| to_node_graph(p, &reg).unwrap().edges.len()).sum::<usize>()));
    c.bench_function("normalize_256", |b| b.iter(|| batch.iter().map(|p| normalize(p).unwrap().len()).sum::<usize>()));
    c.bench_function("compute_layers_256", |b| b.iter(|| compute_layers(black_box(&batch)).unwrap()));
}

fn scheduler(c: &mut Criterion) {
    let reg = PluginRegistry::builtin();
    let batch = projects(&reg, 16, 6, 3);
    let jobs = jobs(&batch, 2.0);
    let plan = compute_layers(&batch).unwrap();
    let mut group = c.benchmark_group("render_16_projects_2s");
    group.sample_size(10);
    for workers in [1, 4, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| execute_plan(&plan, &jobs, &reg, &InternalBackend, &BufferStore::new(), w).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, effects, graph_passes, scheduler);
criterion_main!(benches);
