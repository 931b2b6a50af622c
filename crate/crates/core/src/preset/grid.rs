use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::PresetError;
use crate::registry::PluginDescriptor;

/// Values closer than this to a grid point count as on the grid.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// How a parameter's grid is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Uniform,
    /// Log-uniform over the positive part of the grid, snapped to the grid.
    Log,
    /// Unordered discrete choices, drawn uniformly.
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamAxis {
    /// Ascending, unique, within `[0, 1]`.
    pub values: Vec<f64>,
    pub distribution: Distribution,
}

impl ParamAxis {
    pub fn new(values: Vec<f64>, distribution: Distribution) -> Result<Self, PresetError> {
        if values.is_empty() {
            return Err(PresetError::EmptyGrid);
        }
        let ok = values.iter().all(|v| (0.0..=1.0).contains(v))
            && values.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(PresetError::MalformedGrid(
                "grid values must be ascending, unique and within [0, 1]".into(),
            ));
        }
        Ok(ParamAxis {
            values,
            distribution,
        })
    }

    /// Evenly spaced grid `0, step, 2·step, …, 1`.
    pub fn stepped(step: f64, distribution: Distribution) -> Result<Self, PresetError> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(PresetError::EmptyGrid);
        }
        let n = (1.0 / step).round();
        if ((1.0 / step) - n).abs() > 1e-6 {
            return Err(PresetError::MalformedGrid(format!(
                "step {step} does not divide [0, 1] evenly"
            )));
        }
        let n = n as usize;
        // i / n rather than i * step keeps every point the correctly rounded decimal
        let values = (0..=n).map(|i| i as f64 / n as f64).collect();
        ParamAxis::new(values, distribution)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.nearest_index(v)
            .is_some_and(|i| (self.values[i] - v).abs() <= GRID_TOLERANCE)
    }

    /// Index of the closest grid value; ties go to the lower index.
    pub fn nearest_index(&self, v: f64) -> Option<usize> {
        if !v.is_finite() {
            return None;
        }
        let pos = self.values.partition_point(|&x| x < v);
        let below = pos.checked_sub(1);
        match (below, self.values.get(pos)) {
            (Some(b), Some(&above)) => {
                if (v - self.values[b]) <= (above - v) {
                    Some(b)
                } else {
                    Some(pos)
                }
            }
            (Some(b), None) => Some(b),
            (None, Some(_)) => Some(pos),
            (None, None) => None,
        }
    }
}

/// Per-parameter admissible values, keyed by parameter name in plugin order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterGrid {
    pub axes: IndexMap<String, ParamAxis>,
}

impl ParameterGrid {
    pub fn get(&self, name: &str) -> Option<&ParamAxis> {
        self.axes.get(name)
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn contains(&self, name: &str, v: f64) -> bool {
        self.axes.get(name).is_some_and(|a| a.contains(v))
    }
}

/// How [`build_grid`] discretizes each sampled parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Same step for every sampled parameter.
    Step(f64),
    /// Explicit value list per parameter name; parameters not listed fall back
    /// to the default step of 0.01.
    Explicit(IndexMap<String, Vec<f64>>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Step(DEFAULT_STEP)
    }
}

pub const DEFAULT_STEP: f64 = 0.01;

/// Discretize every sampled parameter of `descriptor`.
pub fn build_grid(
    descriptor: &PluginDescriptor,
    spec: &GridSpec,
) -> Result<ParameterGrid, PresetError> {
    let mut axes = IndexMap::new();
    for p in descriptor.params.iter().filter(|p| p.sampled) {
        let axis = match spec {
            GridSpec::Step(step) => ParamAxis::stepped(*step, p.distribution)?,
            GridSpec::Explicit(lists) => match lists.get(&p.name) {
                Some(values) => {
                    let mut values = values.clone();
                    values.sort_by(f64::total_cmp);
                    values.dedup();
                    ParamAxis::new(values, p.distribution)?
                }
                None => ParamAxis::stepped(DEFAULT_STEP, p.distribution)?,
            },
        };
        axes.insert(p.name.clone(), axis);
    }
    if axes.is_empty() {
        return Err(PresetError::EmptyGrid);
    }
    Ok(ParameterGrid { axes })
}
