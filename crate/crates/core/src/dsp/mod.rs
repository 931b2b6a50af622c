//! Internal effect kernels and the path renderer shared by the scheduler
//! backend and the general-form oracle.
//!
//! Every kernel reads its parameters positionally from a
//! [`ResolvedEffect`], maps the normalized values to physical units with a
//! fixed law, and processes each channel in `f64`. Buffers between effects
//! are `f32`.

pub mod biquad;
mod buffer;
pub mod compressor;
pub mod delay;
pub mod eq;
mod oracle;
pub mod reverb;
pub mod splitter;

use std::collections::BTreeMap;

pub use buffer::{conform_stems, mix, project_frames, AudioBuffer, DEFAULT_SAMPLE_RATE};
pub use compressor::CompressorParams;
pub use delay::DelayParams;
pub use eq::EqParams;
pub use oracle::{render_general, OracleError};
pub use reverb::ReverbParams;
pub use splitter::{SplitterParams, BANDS};

use crate::model::FxType;
use crate::registry::ResolvedEffect;

/// Effect tail appended to every project render, in seconds.
pub const TAIL_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DspError {
    #[error("buffer shape: {0}")]
    Shape(String),
    #[error("SIDECHAIN_LENGTH_MISMATCH: sidechain has {sidechain} frames, input has {input}")]
    SidechainLengthMismatch { input: usize, sidechain: usize },
    #[error("`{plugin}` needs {expected} parameter values, got {got}")]
    ParamCount {
        plugin: String,
        expected: usize,
        got: usize,
    },
    #[error("non-finite output from `{0}`")]
    NonFinite(String),
}

/// Linear map of a normalized value onto `[lo, hi]`.
pub(crate) fn lin(v: f64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * v.clamp(0.0, 1.0)
}

/// Logarithmic map of a normalized value onto `[lo, hi]` (`lo > 0`).
pub(crate) fn log_map(v: f64, lo: f64, hi: f64) -> f64 {
    lo * (hi / lo).powf(v.clamp(0.0, 1.0))
}

pub(crate) fn db_to_amp(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

fn expect_params(fx: &ResolvedEffect, n: usize) -> Result<(), DspError> {
    if fx.values.len() < n {
        return Err(DspError::ParamCount {
            plugin: fx.fx_name.clone(),
            expected: n,
            got: fx.values.len(),
        });
    }
    Ok(())
}

/// Gain stage: one parameter, linear map to [-24, +24] dB.
pub fn gain_process(input: &AudioBuffer, gain_db: f64) -> AudioBuffer {
    let g = db_to_amp(gain_db);
    input.map_channels(|_, src, dst| {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = (f64::from(s) * g) as f32;
        }
    })
}

/// Output of one effect: a single signal, or the splitter's bands (low first).
#[derive(Debug, Clone, PartialEq)]
pub enum EffectOutput {
    Single(AudioBuffer),
    Bands(Vec<AudioBuffer>),
}

impl EffectOutput {
    /// Collapse to one signal; bands are summed with unity gain.
    pub fn into_single(self) -> AudioBuffer {
        match self {
            EffectOutput::Single(b) => b,
            EffectOutput::Bands(bands) => sum_bands(&bands),
        }
    }

    pub fn into_ports(self) -> Vec<AudioBuffer> {
        match self {
            EffectOutput::Single(b) => vec![b],
            EffectOutput::Bands(bands) => bands,
        }
    }
}

pub(crate) fn sum_bands(bands: &[AudioBuffer]) -> AudioBuffer {
    let first = &bands[0];
    let sources: Vec<(&AudioBuffer, f64)> = bands.iter().map(|b| (b, 1.0)).collect();
    mix(
        &sources,
        first.channels(),
        first.frames(),
        first.sample_rate(),
    )
}

/// Run one effect on `input`.
///
/// `sidechain` feeds the detector of effects that support one and is ignored
/// by all others.
pub fn process_effect(
    fx: &ResolvedEffect,
    input: &AudioBuffer,
    sidechain: Option<&AudioBuffer>,
) -> Result<EffectOutput, DspError> {
    let out = match fx.fx_type {
        FxType::Eq => {
            expect_params(fx, 6)?;
            EffectOutput::Single(EqParams::from_normalized(&fx.values).process(input))
        }
        FxType::Splitter => {
            expect_params(fx, 2)?;
            EffectOutput::Bands(
                SplitterParams::from_normalized(&fx.values)
                    .process(input)
                    .to_vec(),
            )
        }
        FxType::Delay => {
            expect_params(fx, 3)?;
            EffectOutput::Single(DelayParams::from_normalized(&fx.values).process(input))
        }
        FxType::Reverb => {
            expect_params(fx, 2)?;
            EffectOutput::Single(ReverbParams::from_normalized(&fx.values).process(input))
        }
        FxType::Compressor => {
            expect_params(fx, 5)?;
            let sc = if fx.supports_sidechain {
                sidechain
            } else {
                None
            };
            EffectOutput::Single(CompressorParams::from_normalized(&fx.values).process(input, sc)?)
        }
        FxType::Gain => {
            expect_params(fx, 1)?;
            EffectOutput::Single(gain_process(input, lin(fx.values[0], -24.0, 24.0)))
        }
        FxType::Mix => EffectOutput::Single(input.clone()),
    };
    let finite = match &out {
        EffectOutput::Single(b) => b.is_finite(),
        EffectOutput::Bands(bs) => bs.iter().all(AudioBuffer::is_finite),
    };
    if !finite {
        return Err(DspError::NonFinite(fx.fx_name.clone()));
    }
    Ok(out)
}

/// Render a single path of effects.
///
/// `sidechains` maps effect position to its control signal. A splitter in
/// the last position yields its bands as separate ports; a splitter anywhere
/// else is collapsed back to one signal by summing its bands.
pub fn render_path(
    effects: &[ResolvedEffect],
    input: &AudioBuffer,
    sidechains: &BTreeMap<usize, &AudioBuffer>,
) -> Result<Vec<AudioBuffer>, DspError> {
    let mut signal = input.clone();
    for (i, fx) in effects.iter().enumerate() {
        let out = process_effect(fx, &signal, sidechains.get(&i).copied())?;
        if i + 1 == effects.len() {
            return Ok(out.into_ports());
        }
        signal = out.into_single();
    }
    Ok(vec![signal])
}
