//! Butterworth band-pass filters realised as cascaded biquads.
//!
//! The analog prototype is mapped low-pass -> band-pass and discretised with
//! the bilinear transform, both edges pre-warped so the digital -3 dB points
//! land exactly on the requested corner frequencies.

use std::f64::consts::{PI, SQRT_2};

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};

/// Octave-band centres used throughout the fingerprint.
pub const OCTAVE_CENTERS: [f64; 6] = [250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];

/// Prototype order; yields more than 40 dB rejection one octave past either
/// edge.
pub const DEFAULT_ORDER: usize = 4;

/// Lower and upper -3 dB edges of the octave band around `center`.
pub fn octave_edges(center: f64) -> (f64, f64) {
    (center / SQRT_2, center * SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn response(&self, z_inv: Complex<f64>) -> Complex<f64> {
        let z2 = z_inv * z_inv;
        (self.b0 + z_inv * self.b1 + z2 * self.b2) / (1.0 + z_inv * self.a1 + z2 * self.a2)
    }
}

/// A band-pass filter between two -3 dB edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPass {
    low: f64,
    high: f64,
    sample_rate: f64,
    sections: Vec<Biquad>,
}

impl BandPass {
    pub fn new(low: f64, high: f64, sample_rate: f64, order: usize) -> Result<Self> {
        if !(low > 0.0 && low < high) {
            return Err(Error::invalid(format!(
                "band edges {low}..{high} Hz are not ordered"
            )));
        }
        if high >= sample_rate / 2.0 {
            return Err(Error::invalid(format!(
                "upper edge {high:.1} Hz reaches Nyquist ({:.1} Hz)",
                sample_rate / 2.0
            )));
        }
        if order == 0 {
            return Err(Error::invalid("filter order must be at least 1"));
        }
        let fs2 = 2.0 * sample_rate;
        let w1 = fs2 * (PI * low / sample_rate).tan();
        let w2 = fs2 * (PI * high / sample_rate).tan();
        let w0_sq = w1 * w2;
        let bw = w2 - w1;

        let mut sections = Vec::with_capacity(order);
        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = Complex::from_polar(1.0, theta);
            let pb = p * bw;
            let disc = (pb * pb - 4.0 * w0_sq).sqrt();
            for s in [(pb + disc) * 0.5, (pb - disc) * 0.5] {
                let z = (fs2 + s) / (fs2 - s);
                if z.im > 0.0 {
                    sections.push(Biquad {
                        b0: 1.0,
                        b1: 0.0,
                        b2: -1.0,
                        a1: -2.0 * z.re,
                        a2: z.norm_sqr(),
                    });
                }
            }
        }
        debug_assert_eq!(sections.len(), order);

        // unity gain at the digital image of the analog centre
        let f0 = sample_rate / PI * (w0_sq.sqrt() / fs2).atan();
        let mut filter = BandPass {
            low,
            high,
            sample_rate,
            sections,
        };
        let g = filter.magnitude_at(f0);
        let scale = 1.0 / g;
        let first = &mut filter.sections[0];
        first.b0 *= scale;
        first.b2 *= scale;
        Ok(filter)
    }

    /// The octave band centred on `center`.
    pub fn octave(center: f64, sample_rate: f64) -> Result<Self> {
        if center * SQRT_2 >= sample_rate / 2.0 {
            return Err(Error::invalid(format!(
                "octave band at {center} Hz exceeds Nyquist for fs = {sample_rate} Hz"
            )));
        }
        let (lo, hi) = octave_edges(center);
        BandPass::new(lo, hi, sample_rate, DEFAULT_ORDER)
    }

    pub fn edges(&self) -> (f64, f64) {
        (self.low, self.high)
    }

    pub fn magnitude_at(&self, freq: f64) -> f64 {
        let z_inv = Complex::from_polar(1.0, -2.0 * PI * freq / self.sample_rate);
        self.sections
            .iter()
            .fold(Complex::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
            .norm()
    }

    /// Causal filtering, zero initial state.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = input.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for x in out.iter_mut() {
                let y = s.b0 * *x + z1;
                z1 = s.b1 * *x - s.a1 * y + z2;
                z2 = s.b2 * *x - s.a2 * y;
                *x = y;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 44_100.0;

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    fn sine(freq: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / FS).sin())
            .collect()
    }

    #[test]
    fn edges_are_minus_three_db() {
        for &c in &OCTAVE_CENTERS {
            let f = BandPass::octave(c, FS).unwrap();
            let (lo, hi) = f.edges();
            for edge in [lo, hi] {
                let db = 20.0 * f.magnitude_at(edge).log10();
                assert!(
                    (db + 3.0103).abs() < 0.01,
                    "{c} Hz band edge {edge}: {db} dB"
                );
            }
        }
    }

    #[test]
    fn rejection_one_octave_outside_edges() {
        for &c in &OCTAVE_CENTERS {
            let f = BandPass::octave(c, FS).unwrap();
            let (lo, hi) = f.edges();
            let below = 20.0 * f.magnitude_at(lo / 2.0).log10();
            assert!(below <= -40.0, "{c} Hz: {below} dB at {} Hz", lo / 2.0);
            if hi * 2.0 < FS / 2.0 {
                let above = 20.0 * f.magnitude_at(hi * 2.0).log10();
                assert!(above <= -40.0, "{c} Hz: {above} dB at {} Hz", hi * 2.0);
            }
        }
    }

    #[test]
    fn centre_sine_passes_at_unity() {
        let f = BandPass::octave(1000.0, FS).unwrap();
        let x = sine(1000.0, 44_100);
        let y = f.apply(&x);
        let settle = 4410;
        let db = 20.0 * (rms(&y[settle..]) / rms(&x[settle..])).log10();
        assert!(db.abs() < 1.0, "{db} dB");
    }

    #[test]
    fn far_sine_is_rejected() {
        let f = BandPass::octave(1000.0, FS).unwrap();
        let x = sine(4000.0, 44_100);
        let y = f.apply(&x);
        let settle = 4410;
        let db = 20.0 * (rms(&y[settle..]) / rms(&x[settle..])).log10();
        assert!(db <= -40.0, "{db} dB");
    }

    #[test]
    fn zero_in_zero_out() {
        let f = BandPass::octave(250.0, FS).unwrap();
        assert!(f.apply(&[0.0; 512]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn band_above_nyquist_rejected() {
        assert!(matches!(
            BandPass::octave(8000.0, 16_000.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(BandPass::octave(8000.0, 44_100.0).is_ok());
    }
}
