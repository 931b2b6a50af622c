use super::DspError;

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

/// Planar (channel-major) block of 32-bit samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    channels: usize,
    sample_rate: u32,
    frames: usize,
    data: Vec<f32>,
}

impl AudioBuffer {
    pub fn silence(channels: usize, frames: usize, sample_rate: u32) -> Self {
        assert!(channels >= 1, "a buffer needs at least one channel");
        AudioBuffer {
            channels,
            sample_rate,
            frames,
            data: vec![0.0; channels * frames],
        }
    }

    /// Build from planar data; every channel must have the same length.
    pub fn from_channels(channels: Vec<Vec<f32>>, sample_rate: u32) -> Result<Self, DspError> {
        let Some(frames) = channels.first().map(Vec::len) else {
            return Err(DspError::Shape("no channels".into()));
        };
        if channels.iter().any(|c| c.len() != frames) {
            return Err(DspError::Shape("channels differ in length".into()));
        }
        let n = channels.len();
        Ok(AudioBuffer {
            channels: n,
            sample_rate,
            frames,
            data: channels.concat(),
        })
    }

    pub fn from_planar(
        channels: usize,
        sample_rate: u32,
        data: Vec<f32>,
    ) -> Result<Self, DspError> {
        if channels == 0 || !data.len().is_multiple_of(channels) {
            return Err(DspError::Shape(format!(
                "{} samples do not split into {channels} channels",
                data.len()
            )));
        }
        Ok(AudioBuffer {
            channels,
            sample_rate,
            frames: data.len() / channels,
            data,
        })
    }

    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Self {
        AudioBuffer {
            channels: 1,
            sample_rate,
            frames: samples.len(),
            data: samples,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn is_empty(&self) -> bool {
        self.frames == 0
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.data[c * self.frames..(c + 1) * self.frames]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        &mut self.data[c * self.frames..(c + 1) * self.frames]
    }

    pub fn planar(&self) -> &[f32] {
        &self.data
    }

    pub fn into_planar(self) -> Vec<f32> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Duplicate a mono buffer to `channels`; other layouts are returned as is.
    pub fn upmixed(&self, channels: usize) -> AudioBuffer {
        if self.channels != 1 || channels == 1 {
            return self.clone();
        }
        let mut data = Vec::with_capacity(channels * self.frames);
        for _ in 0..channels {
            data.extend_from_slice(&self.data);
        }
        AudioBuffer {
            channels,
            sample_rate: self.sample_rate,
            frames: self.frames,
            data,
        }
    }

    /// Zero-pad (or truncate) every channel to `frames`.
    pub fn resized(&self, frames: usize) -> AudioBuffer {
        let mut out = AudioBuffer::silence(self.channels, frames, self.sample_rate);
        let n = frames.min(self.frames);
        for c in 0..self.channels {
            out.channel_mut(c)[..n].copy_from_slice(&self.channel(c)[..n]);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &AudioBuffer) -> f64 {
        if self.channels != other.channels || self.frames != other.frames {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (f64::from(*a) - f64::from(*b)).abs())
            .fold(0.0, f64::max)
    }

    pub fn rms(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        (self.data.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>() / self.data.len() as f64)
            .sqrt()
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|&x| f64::from(x).powi(2)).sum()
    }

    /// Apply `f` to each channel as an `f64` signal, producing a new buffer.
    pub fn map_channels(&self, mut f: impl FnMut(usize, &[f32], &mut [f32])) -> AudioBuffer {
        let mut out = AudioBuffer::silence(self.channels, self.frames, self.sample_rate);
        for c in 0..self.channels {
            let (src, dst) = (
                self.channel(c),
                &mut out.data[c * self.frames..(c + 1) * self.frames],
            );
            f(c, src, dst);
        }
        out
    }

    /// Little-endian planar bytes, for hashing and packing.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|x| x.to_le_bytes()).collect()
    }
}

/// Gain-weighted sum of `sources`, sample-aligned from frame 0.
///
/// The result has `frames` frames and `channels` channels; mono sources are
/// duplicated across channels and shorter sources are zero-padded. Sums are
/// accumulated in `f64` in source order and rounded once.
pub fn mix(
    sources: &[(&AudioBuffer, f64)],
    channels: usize,
    frames: usize,
    sample_rate: u32,
) -> AudioBuffer {
    let mut acc = vec![0.0f64; channels * frames];
    for (buf, gain) in sources {
        for c in 0..channels {
            let src = buf.channel(if buf.channels() == 1 {
                0
            } else {
                c.min(buf.channels() - 1)
            });
            let dst = &mut acc[c * frames..(c + 1) * frames];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += gain * f64::from(s);
            }
        }
    }
    AudioBuffer {
        channels,
        sample_rate,
        frames,
        data: acc.into_iter().map(|x| x as f32).collect(),
    }
}

/// Frame count of a project render: longest stem plus the effect tail.
pub fn project_frames(stems: &[AudioBuffer], tail_frames: usize) -> usize {
    stems.iter().map(AudioBuffer::frames).max().unwrap_or(0) + tail_frames
}

/// Bring stems to a common layout: upmixed to `channels` and zero-padded to
/// `frames`.
pub fn conform_stems(stems: &[AudioBuffer], channels: usize, frames: usize) -> Vec<AudioBuffer> {
    stems
        .iter()
        .map(|s| s.upmixed(channels).resized(frames))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_of_halves_is_exact() {
        let x =
            AudioBuffer::from_channels(vec![vec![0.3, -0.7, 0.1], vec![1.0, 0.25, -0.5]], 44_100)
                .unwrap();
        let y = mix(&[(&x, 0.5), (&x, 0.5)], 2, 3, 44_100);
        assert_eq!(y, x);
    }

    #[test]
    fn mix_pads_and_upmixes() {
        let a = AudioBuffer::mono(vec![1.0, 1.0], 44_100);
        let b = AudioBuffer::from_channels(vec![vec![0.0, 0.0, 2.0], vec![0.0, 0.0, 3.0]], 44_100)
            .unwrap();
        let y = mix(&[(&a, 1.0), (&b, 1.0)], 2, 3, 44_100);
        assert_eq!(y.channel(0), &[1.0, 1.0, 2.0]);
        assert_eq!(y.channel(1), &[1.0, 1.0, 3.0]);
    }

    #[test]
    fn resize_and_shape_checks() {
        let x = AudioBuffer::mono(vec![1.0, 2.0, 3.0], 8000);
        assert_eq!(x.resized(5).channel(0), &[1.0, 2.0, 3.0, 0.0, 0.0]);
        assert_eq!(x.resized(2).channel(0), &[1.0, 2.0]);
        assert!(AudioBuffer::from_channels(vec![vec![0.0], vec![]], 8000).is_err());
        assert!(AudioBuffer::from_planar(2, 8000, vec![0.0; 3]).is_err());
    }
}
