//! Second-order IIR sections (RBJ cookbook designs), transposed direct form II.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Coefficients {
    pub const IDENTITY: Coefficients = Coefficients {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    fn normalized(b0: f64, b1: f64, b2: f64, a0: f64, a1: f64, a2: f64) -> Self {
        Coefficients {
            b0: b0 / a0,
            b1: b1 / a0,
            b2: b2 / a0,
            a1: a1 / a0,
            a2: a2 / a0,
        }
    }

    fn omega(freq: f64, sample_rate: f64) -> (f64, f64) {
        let w0 = 2.0 * PI * (freq / sample_rate).min(0.499);
        (w0.cos(), w0.sin())
    }

    pub fn lowpass(freq: f64, q: f64, sample_rate: f64) -> Self {
        let (cos, sin) = Self::omega(freq, sample_rate);
        let alpha = sin / (2.0 * q);
        Self::normalized(
            (1.0 - cos) / 2.0,
            1.0 - cos,
            (1.0 - cos) / 2.0,
            1.0 + alpha,
            -2.0 * cos,
            1.0 - alpha,
        )
    }

    pub fn highpass(freq: f64, q: f64, sample_rate: f64) -> Self {
        let (cos, sin) = Self::omega(freq, sample_rate);
        let alpha = sin / (2.0 * q);
        Self::normalized(
            (1.0 + cos) / 2.0,
            -(1.0 + cos),
            (1.0 + cos) / 2.0,
            1.0 + alpha,
            -2.0 * cos,
            1.0 - alpha,
        )
    }

    /// Shelving filter with shelf slope S = 1.
    pub fn low_shelf(freq: f64, gain_db: f64, sample_rate: f64) -> Self {
        if gain_db == 0.0 {
            return Self::IDENTITY;
        }
        let a = 10f64.powf(gain_db / 40.0);
        let (cos, sin) = Self::omega(freq, sample_rate);
        let alpha = sin / 2.0 * FRAC_1_SQRT_2 * 2.0;
        let sq = 2.0 * a.sqrt() * alpha;
        Self::normalized(
            a * ((a + 1.0) - (a - 1.0) * cos + sq),
            2.0 * a * ((a - 1.0) - (a + 1.0) * cos),
            a * ((a + 1.0) - (a - 1.0) * cos - sq),
            (a + 1.0) + (a - 1.0) * cos + sq,
            -2.0 * ((a - 1.0) + (a + 1.0) * cos),
            (a + 1.0) + (a - 1.0) * cos - sq,
        )
    }

    pub fn high_shelf(freq: f64, gain_db: f64, sample_rate: f64) -> Self {
        if gain_db == 0.0 {
            return Self::IDENTITY;
        }
        let a = 10f64.powf(gain_db / 40.0);
        let (cos, sin) = Self::omega(freq, sample_rate);
        let alpha = sin / 2.0 * FRAC_1_SQRT_2 * 2.0;
        let sq = 2.0 * a.sqrt() * alpha;
        Self::normalized(
            a * ((a + 1.0) + (a - 1.0) * cos + sq),
            -2.0 * a * ((a - 1.0) + (a + 1.0) * cos),
            a * ((a + 1.0) + (a - 1.0) * cos - sq),
            (a + 1.0) - (a - 1.0) * cos + sq,
            2.0 * ((a - 1.0) - (a + 1.0) * cos),
            (a + 1.0) - (a - 1.0) * cos - sq,
        )
    }

    pub fn peaking(freq: f64, q: f64, gain_db: f64, sample_rate: f64) -> Self {
        if gain_db == 0.0 {
            return Self::IDENTITY;
        }
        let a = 10f64.powf(gain_db / 40.0);
        let (cos, sin) = Self::omega(freq, sample_rate);
        let alpha = sin / (2.0 * q);
        Self::normalized(
            1.0 + alpha * a,
            -2.0 * cos,
            1.0 - alpha * a,
            1.0 + alpha / a,
            -2.0 * cos,
            1.0 - alpha / a,
        )
    }

    /// Magnitude response at `freq`.
    pub fn magnitude(&self, freq: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq / sample_rate;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        let num_re = self.b0 + self.b1 * c1 + self.b2 * c2;
        let num_im = -(self.b1 * s1 + self.b2 * s2);
        let den_re = 1.0 + self.a1 * c1 + self.a2 * c2;
        let den_im = -(self.a1 * s1 + self.a2 * s2);
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    c: Coefficients,
    s1: f64,
    s2: f64,
}

impl Biquad {
    pub fn new(c: Coefficients) -> Self {
        Biquad {
            c,
            s1: 0.0,
            s2: 0.0,
        }
    }

    #[inline]
    pub fn tick(&mut self, x: f64) -> f64 {
        let c = &self.c;
        let y = c.b0 * x + self.s1;
        self.s1 = c.b1 * x - c.a1 * y + self.s2;
        self.s2 = c.b2 * x - c.a2 * y;
        y
    }
}

/// Fourth-order Linkwitz-Riley section: two identical Butterworth biquads.
#[derive(Debug, Clone, Copy)]
pub struct LinkwitzRiley4 {
    a: Biquad,
    b: Biquad,
}

impl LinkwitzRiley4 {
    pub fn lowpass(freq: f64, sample_rate: f64) -> Self {
        let c = Coefficients::lowpass(freq, FRAC_1_SQRT_2, sample_rate);
        LinkwitzRiley4 {
            a: Biquad::new(c),
            b: Biquad::new(c),
        }
    }

    pub fn highpass(freq: f64, sample_rate: f64) -> Self {
        let c = Coefficients::highpass(freq, FRAC_1_SQRT_2, sample_rate);
        LinkwitzRiley4 {
            a: Biquad::new(c),
            b: Biquad::new(c),
        }
    }

    #[inline]
    pub fn tick(&mut self, x: f64) -> f64 {
        self.b.tick(self.a.tick(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SR: f64 = 44_100.0;

    #[test]
    fn zero_gain_designs_are_identity() {
        for c in [
            Coefficients::low_shelf(200.0, 0.0, SR),
            Coefficients::peaking(900.0, 0.7, 0.0, SR),
        ] {
            let mut f = Biquad::new(c);
            for x in [1.0, -0.5, 0.25, 0.0, 0.75] {
                assert_eq!(f.tick(x), x);
            }
        }
    }

    #[test]
    fn shelf_gains_reach_their_targets() {
        let low = Coefficients::low_shelf(200.0, 12.0, SR);
        assert!((20.0 * low.magnitude(5.0, SR).log10() - 12.0).abs() < 0.05);
        assert!((20.0 * low.magnitude(15_000.0, SR).log10()).abs() < 0.05);
        let high = Coefficients::high_shelf(4000.0, -12.0, SR);
        assert!((20.0 * high.magnitude(20_000.0, SR).log10() + 12.0).abs() < 0.2);
        let peak = Coefficients::peaking(1000.0, 0.7, 6.0, SR);
        assert!((20.0 * peak.magnitude(1000.0, SR).log10() - 6.0).abs() < 1e-6);
    }

    #[test]
    fn butterworth_is_3db_down_at_cutoff() {
        let lp = Coefficients::lowpass(1000.0, FRAC_1_SQRT_2, SR);
        assert!((lp.magnitude(1000.0, SR) - FRAC_1_SQRT_2).abs() < 1e-6);
    }
}
