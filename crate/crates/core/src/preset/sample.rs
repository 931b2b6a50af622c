use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Distribution, ParamAxis, ParameterGrid};
use crate::registry::PluginDescriptor;

/// Draw `n` preset vectors for `descriptor` from `grid`.
///
/// Each sampled parameter takes a grid value drawn per its distribution tag,
/// or the default marker (`None`) with probability `default_prob`.
/// Parameters without a grid always stay at the default marker.
pub fn sample_presets(
    descriptor: &PluginDescriptor,
    grid: &ParameterGrid,
    n: usize,
    default_prob: f64,
    seed: u64,
) -> Vec<Vec<Option<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let default_prob = default_prob.clamp(0.0, 1.0);
    (0..n)
        .map(|_| {
            descriptor
                .params
                .iter()
                .map(|p| {
                    let axis = grid.get(&p.name)?;
                    if rng.random::<f64>() < default_prob {
                        None
                    } else {
                        Some(draw(axis, &mut rng))
                    }
                })
                .collect()
        })
        .collect()
}

pub(crate) fn draw<R: Rng>(axis: &ParamAxis, rng: &mut R) -> f64 {
    let values = &axis.values;
    match axis.distribution {
        Distribution::Uniform | Distribution::Categorical => {
            values[rng.random_range(0..values.len())]
        }
        Distribution::Log => {
            let positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
            let (Some(&lo), Some(&hi)) = (positive.first(), positive.last()) else {
                return values[0];
            };
            if lo == hi {
                return lo;
            }
            let target = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
            values[axis.nearest_index(target).unwrap_or(0)]
        }
    }
}
