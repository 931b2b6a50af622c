//! Schroeder reverberator: four parallel feedback combs into two series
//! allpasses.
//!
//! Parameters: Decay (RT60, log [0.3, 5] s) and Mix (linear [0, 1]). Each
//! comb's feedback is set so its loop loses 60 dB in RT60 seconds.

use super::{lin, log_map, AudioBuffer};

pub const COMB_MS: [f64; 4] = [29.7, 37.1, 41.1, 43.7];
pub const ALLPASS_MS: [f64; 2] = [5.0, 1.7];
pub const ALLPASS_GAIN: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverbParams {
    pub rt60_s: f64,
    pub mix: f64,
}

fn samples(ms: f64, sample_rate: u32) -> usize {
    ((ms * f64::from(sample_rate) / 1000.0).round() as usize).max(1)
}

impl ReverbParams {
    pub fn from_normalized(v: &[f64]) -> Self {
        ReverbParams {
            rt60_s: log_map(v[0], 0.3, 5.0),
            mix: lin(v[1], 0.0, 1.0),
        }
    }

    pub fn comb_gain(&self, delay_s: f64) -> f64 {
        10f64.powf(-3.0 * delay_s / self.rt60_s)
    }

    fn wet(&self, x: &[f32], sample_rate: u32) -> Vec<f64> {
        let n = x.len();
        let mut acc = vec![0.0f64; n];
        for ms in COMB_MS {
            let d = samples(ms, sample_rate);
            let g = self.comb_gain(d as f64 / f64::from(sample_rate));
            let mut y = vec![0.0f64; n];
            for i in d..n {
                y[i] = f64::from(x[i - d]) + g * y[i - d];
            }
            for (a, v) in acc.iter_mut().zip(&y) {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= COMB_MS.len() as f64;
        }
        for ms in ALLPASS_MS {
            let d = samples(ms, sample_rate);
            let mut y = vec![0.0f64; n];
            for i in 0..n {
                let (xd, yd) = if i >= d {
                    (acc[i - d], y[i - d])
                } else {
                    (0.0, 0.0)
                };
                y[i] = -ALLPASS_GAIN * acc[i] + xd + ALLPASS_GAIN * yd;
            }
            acc = y;
        }
        acc
    }

    pub fn process(&self, input: &AudioBuffer) -> AudioBuffer {
        let mix = self.mix;
        if mix == 0.0 {
            return input.clone();
        }
        input.map_channels(|_, src, dst| {
            let wet = self.wet(src, input.sample_rate());
            for ((o, &x), w) in dst.iter_mut().zip(src).zip(&wet) {
                *o = ((1.0 - mix) * f64::from(x) + mix * w) as f32;
            }
        })
    }
}
