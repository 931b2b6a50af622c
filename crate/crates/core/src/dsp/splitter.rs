//! Three-band crossover.
//!
//! Parameters: Low-Mid Crossover (log [40, 800] Hz) and Mid-High Crossover
//! (log [1, 16] kHz). The upper part of the spectrum is taken with a
//! fourth-order Linkwitz-Riley high-pass; each lower band is the difference
//! between its input and that high-pass, so the three bands add back up to
//! the input exactly (up to float rounding).

use super::biquad::LinkwitzRiley4;
use super::{log_map, AudioBuffer};

pub const BANDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterParams {
    pub low_mid_hz: f64,
    pub mid_high_hz: f64,
}

impl SplitterParams {
    pub fn from_normalized(v: &[f64]) -> Self {
        SplitterParams {
            low_mid_hz: log_map(v[0], 40.0, 800.0),
            mid_high_hz: log_map(v[1], 1000.0, 16_000.0),
        }
    }

    /// Split into `[low, mid, high]`.
    pub fn process(&self, input: &AudioBuffer) -> [AudioBuffer; BANDS] {
        let sr = f64::from(input.sample_rate());
        let (ch, frames) = (input.channels(), input.frames());
        let mut bands = [(); BANDS].map(|_| AudioBuffer::silence(ch, frames, input.sample_rate()));
        for c in 0..ch {
            let mut hp_lo = LinkwitzRiley4::highpass(self.low_mid_hz, sr);
            let mut hp_hi = LinkwitzRiley4::highpass(self.mid_high_hz, sr);
            for (n, &s) in input.channel(c).iter().enumerate() {
                let x = f64::from(s);
                let upper = hp_lo.tick(x);
                let high = hp_hi.tick(upper);
                bands[0].channel_mut(c)[n] = (x - upper) as f32;
                bands[1].channel_mut(c)[n] = (upper - high) as f32;
                bands[2].channel_mut(c)[n] = high as f32;
            }
        }
        bands
    }
}
