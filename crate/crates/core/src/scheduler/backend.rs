//! Render backends: anything that can run one single-path chain of effects.

use std::collections::BTreeMap;

use crate::dsp::{self, AudioBuffer, DspError, BANDS};
use crate::model::FxType;
use crate::registry::ResolvedEffect;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Renders one path of effects. Implementations must be pure per call.
///
/// The result holds one buffer, or one per splitter band when the path ends
/// with a splitter.
pub trait RenderBackend: Send + Sync {
    fn name(&self) -> &str;

    fn render_path(
        &self,
        effects: &[ResolvedEffect],
        input: &AudioBuffer,
        sidechains: &BTreeMap<usize, &AudioBuffer>,
        sample_rate: u32,
    ) -> Result<Vec<AudioBuffer>, BackendError>;
}

/// The in-process DSP kernels.
#[derive(Debug, Clone, Copy, Default)]
pub struct InternalBackend;

impl RenderBackend for InternalBackend {
    fn name(&self) -> &str {
        "internal"
    }

    fn render_path(
        &self,
        effects: &[ResolvedEffect],
        input: &AudioBuffer,
        sidechains: &BTreeMap<usize, &AudioBuffer>,
        sample_rate: u32,
    ) -> Result<Vec<AudioBuffer>, BackendError> {
        if input.sample_rate() != sample_rate {
            return Err(DspError::Shape(format!(
                "input at {} Hz, render at {sample_rate} Hz",
                input.sample_rate()
            ))
            .into());
        }
        Ok(dsp::render_path(effects, input, sidechains)?)
    }
}

/// Passes audio through untouched. A trailing splitter routes everything to
/// its first band. Useful for exercising the scheduler without DSP cost.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityBackend;

impl RenderBackend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn render_path(
        &self,
        effects: &[ResolvedEffect],
        input: &AudioBuffer,
        _sidechains: &BTreeMap<usize, &AudioBuffer>,
        _sample_rate: u32,
    ) -> Result<Vec<AudioBuffer>, BackendError> {
        if effects
            .last()
            .is_some_and(|fx| fx.fx_type == FxType::Splitter)
        {
            let silent =
                AudioBuffer::silence(input.channels(), input.frames(), input.sample_rate());
            let mut ports = vec![input.clone()];
            ports.extend(std::iter::repeat_n(silent, BANDS - 1));
            return Ok(ports);
        }
        Ok(vec![input.clone()])
    }
}

/// Placeholder for an out-of-process plugin host. The wire protocol is not
/// implemented, so connecting always fails.
#[derive(Debug, Clone)]
pub struct ExternalHostBackend {
    pub endpoint: String,
}

impl ExternalHostBackend {
    pub fn connect(endpoint: &str) -> Result<Self, BackendError> {
        Err(BackendError::Unavailable(format!(
            "no external host protocol for `{endpoint}`"
        )))
    }
}

impl RenderBackend for ExternalHostBackend {
    fn name(&self) -> &str {
        "external"
    }

    fn render_path(
        &self,
        _effects: &[ResolvedEffect],
        _input: &AudioBuffer,
        _sidechains: &BTreeMap<usize, &AudioBuffer>,
        _sample_rate: u32,
    ) -> Result<Vec<AudioBuffer>, BackendError> {
        Err(BackendError::Unavailable(self.endpoint.clone()))
    }
}

/// Look up a backend by name.
pub fn backend_by_name(name: &str) -> Result<Box<dyn RenderBackend>, BackendError> {
    match name {
        "internal" => Ok(Box::new(InternalBackend)),
        "identity" => Ok(Box::new(IdentityBackend)),
        other => match other.strip_prefix("external:") {
            Some(endpoint) => Ok(Box::new(ExternalHostBackend::connect(endpoint)?)),
            None => Err(BackendError::Unavailable(format!(
                "unknown backend `{other}`"
            ))),
        },
    }
}
