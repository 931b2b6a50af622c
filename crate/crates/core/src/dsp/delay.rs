//! Feedback delay line with a wet/dry mix.
//!
//! Parameters: Time (log [1, 2000] ms), Feedback (linear [0, 0.9]) and Mix
//! (linear [0, 1]). The wet path is `w[n] = x[n-D] + fb * w[n-D]`; the
//! output is `(1 - mix) * x + mix * w`.

use super::{lin, log_map, AudioBuffer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayParams {
    pub time_ms: f64,
    pub feedback: f64,
    pub mix: f64,
}

impl DelayParams {
    pub fn from_normalized(v: &[f64]) -> Self {
        DelayParams {
            time_ms: log_map(v[0], 1.0, 2000.0),
            feedback: lin(v[1], 0.0, 0.9),
            mix: lin(v[2], 0.0, 1.0),
        }
    }

    pub fn delay_samples(&self, sample_rate: u32) -> usize {
        ((self.time_ms * f64::from(sample_rate) / 1000.0).round() as usize).max(1)
    }

    pub fn process(&self, input: &AudioBuffer) -> AudioBuffer {
        let d = self.delay_samples(input.sample_rate());
        let (fb, mix) = (self.feedback.min(0.99), self.mix);
        input.map_channels(|_, src, dst| {
            let mut wet = vec![0.0f64; src.len()];
            for n in d..src.len() {
                wet[n] = f64::from(src[n - d]) + fb * wet[n - d];
            }
            for ((o, &x), w) in dst.iter_mut().zip(src).zip(&wet) {
                *o = ((1.0 - mix) * f64::from(x) + mix * w) as f32;
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_response_is_a_geometric_series() {
        let sr = 44_100;
        let mut imp = vec![0.0f32; sr as usize / 2];
        imp[0] = 1.0;
        let x = AudioBuffer::mono(imp, sr);
        let p = DelayParams {
            time_ms: 100.0,
            feedback: 0.5,
            mix: 1.0,
        };
        let y = p.process(&x);
        let d = 4410;
        for (k, amp) in [(1, 1.0f32), (2, 0.5), (3, 0.25), (4, 0.125)] {
            assert_eq!(y.channel(0)[k * d], amp);
        }
        let nonzero = y.channel(0).iter().filter(|s| **s != 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn dry_mix_is_identity_and_silence_stays_silent() {
        let x = AudioBuffer::mono(vec![0.3, -0.2, 0.9, 0.0, 0.4], 44_100);
        assert_eq!(
            DelayParams::from_normalized(&[0.7, 0.9, 0.0]).process(&x),
            x
        );
        let s = AudioBuffer::silence(2, 1000, 44_100);
        assert_eq!(
            DelayParams::from_normalized(&[0.1, 0.9, 1.0]).process(&s),
            s
        );
    }

    #[test]
    fn parameter_map_endpoints() {
        let lo = DelayParams::from_normalized(&[0.0, 0.0, 0.0]);
        let hi = DelayParams::from_normalized(&[1.0, 1.0, 1.0]);
        assert_eq!((lo.time_ms, lo.feedback), (1.0, 0.0));
        assert!((hi.time_ms - 2000.0).abs() < 1e-9 && (hi.feedback - 0.9).abs() < 1e-12);
    }
}
