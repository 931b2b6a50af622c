//! Plugin descriptors and the registry that binds plugin names to the
//! internal DSP kernels, parameter grids and preset lists.

use std::path::Path;

use indexmap::IndexMap;
use serde::Deserialize;

use crate::model::{FxSetting, FxType};
use crate::preset::{Distribution, ParamAxis, ParameterGrid, PresetFile, DEFAULT_STEP};

/// Environment variable the CLI consults for a registry file override.
pub const REGISTRY_ENV: &str = "FXGRAPH_REGISTRY";

const BUILTIN_REGISTRY: &str = include_str!("../registry/plugins.json");

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("UNKNOWN_PLUGIN: `{0}` is not in the registry")]
    UnknownPlugin(String),
    #[error("plugin `{name}` is registered as {registered}, not {requested}")]
    TypeMismatch {
        name: String,
        registered: FxType,
        requested: FxType,
    },
    #[error("plugin `{plugin}` has {available} presets, index {index} requested")]
    PresetOutOfRange {
        plugin: String,
        index: usize,
        available: usize,
    },
    #[error("plugin `{0}` sets both preset_index and params")]
    PresetConflict(String),
    #[error("plugin `{plugin}` takes {expected} params, got {got}")]
    ParamCount {
        plugin: String,
        expected: usize,
        got: usize,
    },
    #[error("preset file for `{plugin}`: {reason}")]
    BadPresetFile { plugin: String, reason: String },
    #[error("malformed registry: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub default: f64,
    /// Setting at which the effect is an identity (where one exists).
    pub neutral: f64,
    /// Whether the parameter is discretized and sampled during preset generation.
    pub sampled: bool,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PluginDescriptor {
    pub fx_name: String,
    pub fx_type: FxType,
    pub n_inputs: u32,
    pub n_outputs: u32,
    pub params: Vec<ParamSpec>,
    /// Grids for the sampled parameters only.
    pub param_grid: ParameterGrid,
    pub supports_sidechain: bool,
    /// Member of the reduced plugin inventory.
    pub reduced_set: bool,
}

impl PluginDescriptor {
    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn defaults(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.default).collect()
    }

    pub fn neutral(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.neutral).collect()
    }

    /// Is `value` admissible for parameter `index`?
    pub fn on_grid(&self, index: usize, value: f64) -> bool {
        self.params
            .get(index)
            .and_then(|p| self.param_grid.get(&p.name))
            .is_some_and(|axis| axis.contains(value))
    }
}

/// A plugin instance with every parameter value filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedEffect {
    pub fx_name: String,
    pub fx_type: FxType,
    pub values: Vec<f64>,
    pub supports_sidechain: bool,
}

#[derive(Debug, Clone)]
struct Entry {
    descriptor: PluginDescriptor,
    presets: Vec<Vec<Option<f64>>>,
}

/// Immutable-after-setup map from plugin name to descriptor and presets.
#[derive(Debug, Clone)]
pub struct PluginRegistry {
    entries: IndexMap<String, Entry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    plugins: Vec<PluginRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PluginRecord {
    fx_name: String,
    fx_type: FxType,
    n_inputs: u32,
    n_outputs: u32,
    #[serde(default)]
    supports_sidechain: bool,
    #[serde(default)]
    reduced_set: bool,
    params: Vec<ParamRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamRecord {
    name: String,
    default: f64,
    neutral: Option<f64>,
    #[serde(default)]
    sampled: bool,
    #[serde(default)]
    distribution: Distribution,
    step: Option<f64>,
}

impl PluginRegistry {
    /// The internal plugin inventory shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_REGISTRY).expect("built-in registry is well formed")
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile =
            serde_json::from_str(text).map_err(|e| RegistryError::Malformed(e.to_string()))?;
        let mut entries = IndexMap::new();
        for rec in file.plugins {
            if rec.n_inputs == 0 || rec.n_outputs == 0 {
                return Err(RegistryError::Malformed(format!(
                    "{}: channel counts must be >= 1",
                    rec.fx_name
                )));
            }
            if rec.fx_type == FxType::Splitter && rec.n_outputs % rec.n_inputs != 0 {
                return Err(RegistryError::Malformed(format!(
                    "{}: splitter outputs must be a multiple of its channel width",
                    rec.fx_name
                )));
            }
            let mut grid = ParameterGrid::default();
            let mut params = Vec::with_capacity(rec.params.len());
            for p in rec.params {
                if !(0.0..=1.0).contains(&p.default) {
                    return Err(RegistryError::Malformed(format!(
                        "{}.{}: default outside [0, 1]",
                        rec.fx_name, p.name
                    )));
                }
                if p.sampled {
                    let axis = ParamAxis::stepped(p.step.unwrap_or(DEFAULT_STEP), p.distribution)
                        .map_err(|e| {
                        RegistryError::Malformed(format!("{}.{}: {e}", rec.fx_name, p.name))
                    })?;
                    grid.axes.insert(p.name.clone(), axis);
                }
                params.push(ParamSpec {
                    neutral: p.neutral.unwrap_or(p.default),
                    name: p.name,
                    default: p.default,
                    sampled: p.sampled,
                    distribution: p.distribution,
                });
            }
            let descriptor = PluginDescriptor {
                fx_name: rec.fx_name.clone(),
                fx_type: rec.fx_type,
                n_inputs: rec.n_inputs,
                n_outputs: rec.n_outputs,
                params,
                param_grid: grid,
                supports_sidechain: rec.supports_sidechain,
                reduced_set: rec.reduced_set,
            };
            if entries
                .insert(
                    rec.fx_name.clone(),
                    Entry {
                        descriptor,
                        presets: Vec::new(),
                    },
                )
                .is_some()
            {
                return Err(RegistryError::Malformed(format!(
                    "duplicate plugin `{}`",
                    rec.fx_name
                )));
            }
        }
        Ok(PluginRegistry { entries })
    }

    pub fn get(&self, name: &str) -> Option<&PluginDescriptor> {
        self.entries.get(name).map(|e| &e.descriptor)
    }

    pub fn lookup(&self, name: &str) -> Result<&PluginDescriptor, RegistryError> {
        self.get(name)
            .ok_or_else(|| RegistryError::UnknownPlugin(name.to_string()))
    }

    pub fn presets(&self, name: &str) -> &[Vec<Option<f64>>] {
        self.entries
            .get(name)
            .map(|e| e.presets.as_slice())
            .unwrap_or(&[])
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &PluginDescriptor> {
        self.entries.values().map(|e| &e.descriptor)
    }

    pub fn reduced_set(&self) -> impl Iterator<Item = &PluginDescriptor> {
        self.descriptors().filter(|d| d.reduced_set)
    }

    pub fn first_of_type(&self, fx_type: FxType) -> Option<&PluginDescriptor> {
        self.descriptors().find(|d| d.fx_type == fx_type)
    }

    /// Install a preset file: its grid replaces the plugin's sampled grid and
    /// its presets become addressable by `preset_index`.
    pub fn attach_presets(&mut self, file: &PresetFile) -> Result<(), RegistryError> {
        let entry = self
            .entries
            .get_mut(&file.fx_name)
            .ok_or_else(|| RegistryError::UnknownPlugin(file.fx_name.clone()))?;
        let d = &mut entry.descriptor;
        if d.fx_type != file.fx_type {
            return Err(RegistryError::TypeMismatch {
                name: file.fx_name.clone(),
                registered: d.fx_type,
                requested: file.fx_type,
            });
        }
        let bad = |reason: String| RegistryError::BadPresetFile {
            plugin: file.fx_name.clone(),
            reason,
        };
        let mut grid = ParameterGrid::default();
        for (name, values) in &file.valid_params {
            let spec = d
                .params
                .iter()
                .find(|p| &p.name == name)
                .ok_or_else(|| bad(format!("unknown parameter `{name}`")))?;
            let axis = ParamAxis::new(values.clone(), spec.distribution)
                .map_err(|e| bad(e.to_string()))?;
            grid.axes.insert(name.clone(), axis);
        }
        d.param_grid = grid;
        for p in &mut d.params {
            p.sampled = d.param_grid.axes.contains_key(&p.name);
        }
        for (i, preset) in file.presets.iter().enumerate() {
            if preset.len() != d.params.len() {
                return Err(bad(format!(
                    "preset {i} has {} values, plugin has {} params",
                    preset.len(),
                    d.params.len()
                )));
            }
        }
        entry.presets = file.presets.clone();
        Ok(())
    }

    /// Fill in every parameter of `fx`, from its preset or explicit params,
    /// falling back to plugin defaults.
    pub fn resolve(&self, fx: &FxSetting) -> Result<ResolvedEffect, RegistryError> {
        let entry = self
            .entries
            .get(&fx.fx_name)
            .ok_or_else(|| RegistryError::UnknownPlugin(fx.fx_name.clone()))?;
        let d = &entry.descriptor;
        if d.fx_type != fx.fx_type {
            return Err(RegistryError::TypeMismatch {
                name: fx.fx_name.clone(),
                registered: d.fx_type,
                requested: fx.fx_type,
            });
        }
        let overrides: &[Option<f64>] = match fx.preset_index {
            Some(_) if !fx.params.is_empty() => {
                return Err(RegistryError::PresetConflict(fx.fx_name.clone()))
            }
            Some(i) => entry
                .presets
                .get(i)
                .ok_or(RegistryError::PresetOutOfRange {
                    plugin: fx.fx_name.clone(),
                    index: i,
                    available: entry.presets.len(),
                })?,
            None => &fx.params,
        };
        if overrides.len() > d.params.len() {
            return Err(RegistryError::ParamCount {
                plugin: fx.fx_name.clone(),
                expected: d.params.len(),
                got: overrides.len(),
            });
        }
        let values = d
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| overrides.get(i).copied().flatten().unwrap_or(p.default))
            .collect();
        Ok(ResolvedEffect {
            fx_name: d.fx_name.clone(),
            fx_type: d.fx_type,
            values,
            supports_sidechain: d.supports_sidechain,
        })
    }

    /// An effect setting for `name` with every parameter at its neutral point.
    pub fn neutral_setting(&self, name: &str) -> Result<FxSetting, RegistryError> {
        let d = self.lookup(name)?;
        let mut fx = FxSetting::new(&d.fx_name, d.fx_type)
            .with_params(d.neutral().into_iter().map(Some).collect());
        fx.n_inputs = d.n_inputs;
        fx.n_outputs = d.n_outputs;
        Ok(fx)
    }
}

impl Default for PluginRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_the_reduced_inventory() {
        let reg = PluginRegistry::builtin();
        let names: Vec<_> = reg.reduced_set().map(|d| d.fx_name.as_str()).collect();
        assert_eq!(
            names,
            [
                "VST3: 3 Band EQ",
                "JS: 3-Band Splitter",
                "VST3: Samurai Delay",
                "VST3: Schroeder",
                "VST3: ZamCompX2"
            ]
        );
        let split = reg.get("JS: 3-Band Splitter").unwrap();
        assert_eq!(split.n_outputs, 3 * split.n_inputs);
        assert!(reg.get("VST3: ZamCompX2").unwrap().supports_sidechain);
    }

    #[test]
    fn resolve_fills_defaults_and_presets() {
        let mut reg = PluginRegistry::builtin();
        let fx = FxSetting::new("VST3: 3 Band EQ", FxType::Eq).with_params(vec![
            None,
            None,
            None,
            Some(0.12),
        ]);
        let r = reg.resolve(&fx).unwrap();
        assert_eq!(r.values, vec![0.5, 0.5, 0.5, 0.12, 0.5, 0.5]);

        let file = PresetFile {
            fx_name: "VST3: 3 Band EQ".into(),
            fx_type: FxType::Eq,
            n_inputs: 2,
            n_outputs: 2,
            valid_params: ["Low", "Mid", "High"]
                .iter()
                .map(|n| {
                    (
                        n.to_string(),
                        ParamAxis::stepped(0.01, Distribution::Uniform)
                            .unwrap()
                            .values,
                    )
                })
                .collect(),
            presets: vec![vec![None, None, None, Some(0.05), Some(0.0), Some(0.28)]],
        };
        reg.attach_presets(&file).unwrap();
        let r = reg
            .resolve(&FxSetting::new("VST3: 3 Band EQ", FxType::Eq).with_preset(0))
            .unwrap();
        assert_eq!(r.values, vec![0.5, 0.5, 0.5, 0.05, 0.0, 0.28]);
        assert!(matches!(
            reg.resolve(&FxSetting::new("VST3: 3 Band EQ", FxType::Eq).with_preset(1)),
            Err(RegistryError::PresetOutOfRange { .. })
        ));
    }

    #[test]
    fn resolve_rejects_unknown_and_conflicting() {
        let reg = PluginRegistry::builtin();
        assert!(matches!(
            reg.resolve(&FxSetting::new("VST3: Nope", FxType::Eq)),
            Err(RegistryError::UnknownPlugin(_))
        ));
        let both = FxSetting::new("Internal: Gain", FxType::Gain)
            .with_preset(0)
            .with_params(vec![Some(0.5)]);
        assert!(matches!(
            reg.resolve(&both),
            Err(RegistryError::PresetConflict(_))
        ));
        let wrong_type = FxSetting::new("Internal: Gain", FxType::Eq);
        assert!(matches!(
            reg.resolve(&wrong_type),
            Err(RegistryError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn malformed_registry_is_an_error() {
        assert!(PluginRegistry::from_json("{\"plugins\": [{}]}").is_err());
        let dup = r#"{"plugins":[
            {"fx_name":"a","fx_type":"gain","n_inputs":2,"n_outputs":2,"params":[]},
            {"fx_name":"a","fx_type":"gain","n_inputs":2,"n_outputs":2,"params":[]}]}"#;
        assert!(matches!(
            PluginRegistry::from_json(dup),
            Err(RegistryError::Malformed(_))
        ));
    }
}
