//! Preset generation: parameter grids, seeded sampling, MFCC features,
//! k-means, and cluster-based selection of representative presets.

mod cluster;
mod grid;
mod kmeans;
mod mfcc;
mod sample;

use indexmap::IndexMap;

use crate::model::FxType;

pub use cluster::{probe_signal, validate_by_clustering, ClusterSelection};
pub use grid::{
    build_grid, Distribution, GridSpec, ParamAxis, ParameterGrid, DEFAULT_STEP, GRID_TOLERANCE,
};
pub use kmeans::{kmeans, KMeansResult};
pub use mfcc::{frame_count, mfcc_features, MfccConfig};
pub use sample::sample_presets;
pub(crate) use sample::draw as draw_on_axis;

#[derive(Debug, thiserror::Error)]
pub enum PresetError {
    #[error("EMPTY_GRID: parameter grid has no admissible values")]
    EmptyGrid,
    #[error("malformed grid: {0}")]
    MalformedGrid(String),
    #[error("TOO_SHORT: signal has {len} samples, frame needs {frame}")]
    TooShort { len: usize, frame: usize },
    #[error("K_TOO_LARGE: k = {k} with only {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("invalid MFCC configuration: {0}")]
    BadConfig(String),
    #[error("render failed: {0}")]
    Render(String),
}

/// Plugin preset file: valid parameter grids plus stored preset vectors.
///
/// A preset vector has one slot per plugin parameter; `None` keeps the
/// plugin's default.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetFile {
    pub fx_name: String,
    pub fx_type: FxType,
    pub n_inputs: u32,
    pub n_outputs: u32,
    pub valid_params: IndexMap<String, Vec<f64>>,
    pub presets: Vec<Vec<Option<f64>>>,
}

/// One rule violation found by [`PresetFile::check`].
#[derive(Debug, Clone, PartialEq)]
pub struct OffGrid {
    pub preset: usize,
    pub param: usize,
    pub value: f64,
}

impl PresetFile {
    /// Assemble a file from a descriptor, its grid and sampled presets.
    pub fn from_parts(
        descriptor: &crate::registry::PluginDescriptor,
        grid: &ParameterGrid,
        presets: Vec<Vec<Option<f64>>>,
    ) -> Self {
        PresetFile {
            fx_name: descriptor.fx_name.clone(),
            fx_type: descriptor.fx_type,
            n_inputs: descriptor.n_inputs,
            n_outputs: descriptor.n_outputs,
            valid_params: grid
                .axes
                .iter()
                .map(|(k, a)| (k.clone(), a.values.clone()))
                .collect(),
            presets,
        }
    }

    /// Preset values that do not sit on their parameter's grid.
    ///
    /// `param_names` gives the plugin's parameter order; values for parameters
    /// without a grid are off-grid by definition.
    pub fn check(&self, param_names: &[&str]) -> Vec<OffGrid> {
        let mut out = Vec::new();
        for (pi, preset) in self.presets.iter().enumerate() {
            for (i, v) in preset.iter().enumerate() {
                let Some(v) = *v else { continue };
                let on = param_names
                    .get(i)
                    .and_then(|n| self.valid_params.get(*n))
                    .is_some_and(|vals| vals.iter().any(|g| (g - v).abs() <= GRID_TOLERANCE));
                if !on {
                    out.push(OffGrid {
                        preset: pi,
                        param: i,
                        value: v,
                    });
                }
            }
        }
        out
    }
}
