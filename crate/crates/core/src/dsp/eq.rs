//! Three-band EQ: low shelf, peaking mid, high shelf, plus a master gain.
//!
//! Parameter order: Master, Low-Mid Freq, Mid-High Freq, Low, Mid, High.
//! Gains map linearly onto [-24, +24] dB (0.5 is flat); the low-mid corner
//! maps log onto [50, 1000] Hz and the mid-high corner onto [1, 16] kHz.
//! The mid band is centered at the geometric mean of the two corners.

use super::biquad::{Biquad, Coefficients};
use super::{db_to_amp, lin, log_map, AudioBuffer};

const MID_Q: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqParams {
    pub master_db: f64,
    pub low_mid_hz: f64,
    pub mid_high_hz: f64,
    pub low_db: f64,
    pub mid_db: f64,
    pub high_db: f64,
}

impl EqParams {
    pub fn from_normalized(v: &[f64]) -> Self {
        EqParams {
            master_db: lin(v[0], -24.0, 24.0),
            low_mid_hz: log_map(v[1], 50.0, 1000.0),
            mid_high_hz: log_map(v[2], 1000.0, 16_000.0),
            low_db: lin(v[3], -24.0, 24.0),
            mid_db: lin(v[4], -24.0, 24.0),
            high_db: lin(v[5], -24.0, 24.0),
        }
    }

    fn sections(&self, sample_rate: f64) -> [Coefficients; 3] {
        let mid_hz = (self.low_mid_hz * self.mid_high_hz).sqrt();
        [
            Coefficients::low_shelf(self.low_mid_hz, self.low_db, sample_rate),
            Coefficients::peaking(mid_hz, MID_Q, self.mid_db, sample_rate),
            Coefficients::high_shelf(self.mid_high_hz, self.high_db, sample_rate),
        ]
    }

    /// Magnitude response of the whole EQ at `freq`.
    pub fn magnitude(&self, freq: f64, sample_rate: f64) -> f64 {
        let m: f64 = self
            .sections(sample_rate)
            .iter()
            .map(|c| c.magnitude(freq, sample_rate))
            .product();
        m * db_to_amp(self.master_db)
    }

    pub fn process(&self, input: &AudioBuffer) -> AudioBuffer {
        let sections = self.sections(f64::from(input.sample_rate()));
        let master = db_to_amp(self.master_db);
        input.map_channels(|_, src, dst| {
            let mut f = sections.map(Biquad::new);
            for (d, &s) in dst.iter_mut().zip(src) {
                let mut y = f64::from(s);
                for bq in &mut f {
                    y = bq.tick(y);
                }
                *d = (y * master) as f32;
            }
        })
    }
}
