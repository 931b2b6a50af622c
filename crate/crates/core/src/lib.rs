//! Audio-effect graph engine: data model, validation, normalization,
//! layered batch scheduling, internal DSP kernels, preset generation,
//! topology synthesis and dataset formats.

pub mod dataset;
pub mod dsp;
pub mod graph;
pub mod io;
pub mod model;
pub mod nodegraph;
pub mod normalize;
pub mod preset;
pub mod registry;
pub mod scheduler;
pub mod synth;
pub mod validate;

pub use dataset::{render_dataset, DatasetError, Layout, OutputMode, RenderReport};
pub use dsp::{AudioBuffer, DspError};
pub use graph::{chain_dag, ChainDag, GraphError};
pub use io::IoError;
pub use model::{ChainDefinition, FxSetting, FxType, GeneralMixGraph, InputAudio, Project};
pub use normalize::{normalize, NormalizeError};
pub use nodegraph::{to_node_graph, NodeGraph};
pub use registry::{PluginDescriptor, PluginRegistry, RegistryError, ResolvedEffect};
pub use synth::{SynthConfig, SynthError};
pub use validate::{validate_project, RuleCode, ValidationReport, Violation};
