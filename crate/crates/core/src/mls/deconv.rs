use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{fwht_in_place, Mls, Recording};
use crate::error::{Error, Result};
use crate::rir::{Rir, RirSource};

/// Which algebraic route computes the cross-correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeconvPath {
    Fft,
    Fht,
}

/// Precomputed state for recovering impulse responses against one MLS.
///
/// With `s` the ±1 symbols and `y` one steady-state period, the circular
/// cross-correlation `r[k] = Σ_j y[j] s[j-k]` equals `(N+1) h[k] - Σ h`.
/// Since `Σ_k r[k] = Σ h`, the response is recovered exactly as
/// `h[k] = (r[k] + Σ r) / (N+1)`.
pub struct Deconvolver {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    symbol_spectrum_conj: Vec<Complex<f64>>,
    /// `y[j]` scatters to Hadamard row `input_perm[j]`.
    input_perm: Vec<usize>,
    /// Lag `k` gathers from Hadamard column `output_perm[k]`.
    output_perm: Vec<usize>,
}

impl Deconvolver {
    pub fn new(mls: &Mls) -> Self {
        let len = mls.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);
        let mut spec: Vec<Complex<f64>> = mls
            .symbols()
            .iter()
            .map(|&s| Complex::new(s as f64, 0.0))
            .collect();
        fft.process(&mut spec);
        spec.iter_mut().for_each(|c| *c = c.conj());

        let input_perm = mls.shift_coefficients();
        let output_perm = (0..len)
            .map(|k| mls.window_index((len - k) % len))
            .collect();
        Deconvolver {
            len,
            fft,
            ifft,
            symbol_spectrum_conj: spec,
            input_perm,
            output_perm,
        }
    }

    pub fn period(&self) -> usize {
        self.len
    }

    /// Raw circular cross-correlation `r[k]` by the chosen route.
    pub fn cross_correlate(&self, period: &[f64], path: DeconvPath) -> Result<Vec<f64>> {
        if period.len() != self.len {
            return Err(Error::invalid(format!(
                "period has {} samples, MLS has {}",
                period.len(),
                self.len
            )));
        }
        Ok(match path {
            DeconvPath::Fft => self.correlate_fft(period),
            DeconvPath::Fht => self.correlate_fht(period),
        })
    }

    fn correlate_fft(&self, period: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = period.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.symbol_spectrum_conj) {
            *b *= s;
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    fn correlate_fht(&self, period: &[f64]) -> Vec<f64> {
        let mut work = vec![0.0; self.len + 1];
        for (&row, &y) in self.input_perm.iter().zip(period) {
            work[row] = y;
        }
        fwht_in_place(&mut work);
        // s = -(-1)^bit, hence the sign flip
        self.output_perm.iter().map(|&col| -work[col]).collect()
    }

    /// Recovers the impulse response from one averaged period.
    pub fn deconvolve(&self, period: &Recording, path: DeconvPath) -> Result<Rir> {
        let r = self.cross_correlate(&period.samples, path)?;
        let dc: f64 = r.iter().sum();
        let scale = 1.0 / (self.len as f64 + 1.0);
        let h = r.iter().map(|x| (x + dc) * scale).collect();
        Ok(Rir::new(h, period.sample_rate, RirSource::Deconvolved))
    }
}

/// One-shot convenience over [`Deconvolver`].
pub fn deconvolve(period: &Recording, mls: &Mls, path: DeconvPath) -> Result<Rir> {
    if period.samples.len() != mls.len() {
        return Err(Error::invalid(format!(
            "period has {} samples, MLS has {}",
            period.samples.len(),
            mls.len()
        )));
    }
    Deconvolver::new(mls).deconvolve(period, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mls::generate_mls;

    fn circular_convolve(s: &[f64], h: &[f64]) -> Vec<f64> {
        let n = s.len();
        (0..n)
            .map(|j| {
                h.iter()
                    .enumerate()
                    .map(|(m, hm)| hm * s[(j + n - m % n) % n])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn unit_impulse_recovered_at_lag_zero() {
        let mls = generate_mls(8).unwrap();
        let y = Recording {
            samples: mls.symbols_f64(),
            sample_rate: 1000.0,
        };
        for path in [DeconvPath::Fft, DeconvPath::Fht] {
            let h = deconvolve(&y, &mls, path).unwrap();
            assert_eq!(h.onset_index, 0);
            assert!((h.samples[0] - 1.0).abs() < 1e-12);
            assert!(h.samples[1..].iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn arbitrary_response_recovered_exactly() {
        let mls = generate_mls(7).unwrap();
        let h: Vec<f64> = (0..40)
            .map(|i| ((i * 13 % 7) as f64 - 3.0) * 0.9f64.powi(i))
            .collect();
        let y = circular_convolve(&mls.symbols_f64(), &h);
        let rec = Recording {
            samples: y,
            sample_rate: 100.0,
        };
        for path in [DeconvPath::Fft, DeconvPath::Fht] {
            let out = deconvolve(&rec, &mls, path).unwrap();
            for (i, x) in out.samples.iter().enumerate() {
                let want = h.get(i).copied().unwrap_or(0.0);
                assert!((x - want).abs() < 1e-10, "{path:?} lag {i}: {x} vs {want}");
            }
        }
    }

    #[test]
    fn length_mismatch() {
        let mls = generate_mls(5).unwrap();
        let rec = Recording {
            samples: vec![0.0; 30],
            sample_rate: 1.0,
        };
        assert!(matches!(
            deconvolve(&rec, &mls, DeconvPath::Fft),
            Err(Error::InvalidArgument(_))
        ));
    }
}
