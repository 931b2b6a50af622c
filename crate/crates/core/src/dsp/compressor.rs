//! Feed-forward compressor with an optional external detector input.
//!
//! Parameters: Threshold (linear [-60, 0] dB), Ratio (linear [1, 20]),
//! Attack (log [0.1, 100] ms), Release (log [10, 1000] ms) and Makeup
//! (linear [0, 24] dB). The detector takes the per-frame maximum of the
//! squared channel samples and averages it over a fixed 10 ms window
//! (mean-square level). A hard-knee static curve turns that level into a
//! gain change in dB, which is then smoothed with attack/release ballistics.
//! All channels share one gain.

use super::{db_to_amp, lin, log_map, AudioBuffer, DspError};

const RMS_WINDOW_MS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressorParams {
    pub threshold_db: f64,
    pub ratio: f64,
    pub attack_ms: f64,
    pub release_ms: f64,
    pub makeup_db: f64,
}

/// Static curve: gain change in dB for a detector level in dB.
pub fn static_gain_db(level_db: f64, threshold_db: f64, ratio: f64) -> f64 {
    if level_db > threshold_db {
        (threshold_db - level_db) * (1.0 - 1.0 / ratio)
    } else {
        0.0
    }
}

fn coefficient(ms: f64, sample_rate: u32) -> f64 {
    (-1.0 / (ms * 1e-3 * f64::from(sample_rate))).exp()
}

impl CompressorParams {
    pub fn from_normalized(v: &[f64]) -> Self {
        CompressorParams {
            threshold_db: lin(v[0], -60.0, 0.0),
            ratio: lin(v[1], 1.0, 20.0),
            attack_ms: log_map(v[2], 0.1, 100.0),
            release_ms: log_map(v[3], 10.0, 1000.0),
            makeup_db: lin(v[4], 0.0, 24.0),
        }
    }

    /// Per-frame linear gain driven by `detector`.
    pub fn gain_curve(&self, detector: &AudioBuffer, frames: usize) -> Vec<f64> {
        let sr = detector.sample_rate();
        let avg = coefficient(RMS_WINDOW_MS, sr);
        let (att, rel) = (
            coefficient(self.attack_ms, sr),
            coefficient(self.release_ms, sr),
        );
        let mut ms = 0.0f64;
        let mut smoothed = 0.0f64;
        (0..frames)
            .map(|n| {
                let e = (0..detector.channels())
                    .map(|c| f64::from(detector.channel(c)[n]).powi(2))
                    .fold(0.0, f64::max);
                ms = avg * ms + (1.0 - avg) * e;
                let target =
                    static_gain_db(10.0 * (ms + 1e-30).log10(), self.threshold_db, self.ratio);
                // attack while reduction deepens, release while it recovers
                let k = if target < smoothed { att } else { rel };
                smoothed = k * smoothed + (1.0 - k) * target;
                db_to_amp(smoothed + self.makeup_db)
            })
            .collect()
    }

    pub fn process(
        &self,
        input: &AudioBuffer,
        sidechain: Option<&AudioBuffer>,
    ) -> Result<AudioBuffer, DspError> {
        let detector = match sidechain {
            Some(sc) if sc.frames() < input.frames() => {
                return Err(DspError::SidechainLengthMismatch {
                    input: input.frames(),
                    sidechain: sc.frames(),
                })
            }
            Some(sc) => sc,
            None => input,
        };
        let gain = self.gain_curve(detector, input.frames());
        Ok(input.map_channels(|_, src, dst| {
            for ((d, &s), g) in dst.iter_mut().zip(src).zip(&gain) {
                *d = (f64::from(s) * g) as f32;
            }
        }))
    }
}
