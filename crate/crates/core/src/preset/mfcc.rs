//! Mel-frequency cepstral coefficients.
//!
//! Pipeline: mono downmix, pre-emphasis, framing, Hamming window, power
//! spectrum, triangular mel filterbank, log, orthonormal DCT-II.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use super::PresetError;
use crate::dsp::AudioBuffer;

const PRE_EMPHASIS: f64 = 0.97;
const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MfccConfig {
    pub n_mfcc: usize,
    pub frame: usize,
    pub hop: usize,
    pub n_mels: usize,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            n_mfcc: 13,
            frame: 1024,
            hop: 512,
            n_mels: 26,
        }
    }
}

/// Number of full frames in a signal of `len` samples.
pub fn frame_count(len: usize, frame: usize, hop: usize) -> Option<usize> {
    (len >= frame && hop > 0).then(|| 1 + (len - frame) / hop)
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters over the `frame / 2 + 1` FFT bins, spanning 0 Hz to
/// Nyquist.
fn mel_filterbank(n_mels: usize, frame: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let bins = frame / 2 + 1;
    let top = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64) * frame as f64 / sample_rate)
        .collect();
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let k = k as f64;
                    if k <= lo || k >= hi {
                        0.0
                    } else if k <= mid {
                        (k - lo) / (mid - lo)
                    } else {
                        (hi - k) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// One row of `n_mfcc` coefficients per frame.
pub fn mfcc_features(buf: &AudioBuffer, config: &MfccConfig) -> Result<Vec<Vec<f64>>, PresetError> {
    let MfccConfig {
        n_mfcc,
        frame,
        hop,
        n_mels,
    } = *config;
    if frame < 2 || hop == 0 || n_mels == 0 || n_mfcc == 0 || n_mfcc > n_mels {
        return Err(PresetError::BadConfig(format!("{config:?}")));
    }
    let len = buf.frames();
    let frames = frame_count(len, frame, hop).ok_or(PresetError::TooShort { len, frame })?;

    let ch = buf.channels() as f64;
    let mono: Vec<f64> = (0..len)
        .map(|n| {
            (0..buf.channels())
                .map(|c| f64::from(buf.channel(c)[n]))
                .sum::<f64>()
                / ch
        })
        .collect();
    let mut emph = Vec::with_capacity(len);
    emph.push(mono[0]);
    emph.extend(mono.windows(2).map(|w| w[1] - PRE_EMPHASIS * w[0]));

    let window: Vec<f64> = (0..frame)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (frame - 1) as f64).cos())
        .collect();
    let bank = mel_filterbank(n_mels, frame, f64::from(buf.sample_rate()));
    let dct: Vec<Vec<f64>> = (0..n_mfcc)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n_mels as f64).sqrt()
            } else {
                (2.0 / n_mels as f64).sqrt()
            };
            (0..n_mels)
                .map(|m| scale * (PI * k as f64 * (m as f64 + 0.5) / n_mels as f64).cos())
                .collect()
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(frame);

    let mut spectrum = vec![Complex::new(0.0, 0.0); frame];
    let mut rows = Vec::with_capacity(frames);
    for f in 0..frames {
        let start = f * hop;
        for (i, s) in spectrum.iter_mut().enumerate() {
            *s = Complex::new(emph[start + i] * window[i], 0.0);
        }
        fft.process(&mut spectrum);
        let power: Vec<f64> = spectrum[..frame / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr() / frame as f64)
            .collect();
        let log_mel: Vec<f64> = bank
            .iter()
            .map(|filt| {
                filt.iter()
                    .zip(&power)
                    .map(|(w, p)| w * p)
                    .sum::<f64>()
                    .max(LOG_FLOOR)
                    .ln()
            })
            .collect();
        rows.push(
            dct.iter()
                .map(|basis| basis.iter().zip(&log_mel).map(|(b, v)| b * v).sum())
                .collect(),
        );
    }
    Ok(rows)
}

/// Column means of a feature matrix.
pub(crate) fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut mean = vec![0.0; rows.first().map_or(0, Vec::len)];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows.len().max(1) as f64);
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const SR: u32 = 44_100;

    #[test]
    fn one_second_gives_85_frames() {
        assert_eq!(frame_count(44_100, 1024, 512), Some(85));
        let rows =
            mfcc_features(&AudioBuffer::silence(2, 44_100, SR), &MfccConfig::default()).unwrap();
        assert_eq!(rows.len(), 85);
        assert_eq!(rows[0].len(), 13);
    }

    #[test]
    fn silence_gives_constant_rows() {
        let rows =
            mfcc_features(&AudioBuffer::silence(1, 5000, SR), &MfccConfig::default()).unwrap();
        assert!(rows.iter().all(|r| r == &rows[0]));
        assert!(rows[0].iter().all(|v| v.is_finite()));
    }

    #[test]
    fn noise_and_sine_differ() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let noise = AudioBuffer::mono(
            (0..SR).map(|_| rng.random_range(-0.5f32..0.5)).collect(),
            SR,
        );
        let sine = AudioBuffer::mono(
            (0..SR)
                .map(|n| (0.5 * (2.0 * PI * 440.0 * f64::from(n) / f64::from(SR)).sin()) as f32)
                .collect(),
            SR,
        );
        let cfg = MfccConfig::default();
        let a = mean_rows(&mfcc_features(&noise, &cfg).unwrap());
        let b = mean_rows(&mfcc_features(&sine, &cfg).unwrap());
        let d: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(d > 1.0, "{d}");
    }

    #[test]
    fn too_short_is_an_error() {
        let err = mfcc_features(
            &AudioBuffer::mono(vec![0.0; 1023], SR),
            &MfccConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            PresetError::TooShort {
                len: 1023,
                frame: 1024
            }
        ));
    }
}
