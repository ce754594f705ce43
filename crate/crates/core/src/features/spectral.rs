use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::stats::{population_kurtosis, population_std};
use crate::error::{Error, Result};
use crate::rir::Rir;

/// One-sided DFT magnitude of a response, bin `k` at `k * fs / len` Hz.
#[derive(Debug, Clone)]
pub struct MagnitudeSpectrum {
    pub magnitudes: Vec<f64>,
    pub bin_hz: f64,
    pub sample_rate: f64,
}

impl MagnitudeSpectrum {
    pub fn of(rir: &Rir) -> Result<Self> {
        let n = rir.len();
        if n == 0 {
            return Err(Error::Degenerate("empty impulse response".into()));
        }
        let mut buf: Vec<Complex<f64>> =
            rir.samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let magnitudes = buf[..n / 2 + 1].iter().map(|c| c.norm()).collect();
        Ok(MagnitudeSpectrum {
            magnitudes,
            bin_hz: rir.sample_rate / n as f64,
            sample_rate: rir.sample_rate,
        })
    }

    /// Magnitudes of the bins whose frequency lies in `[low, high]`.
    pub fn band(&self, low: f64, high: f64) -> Result<&[f64]> {
        let nyquist = self.sample_rate / 2.0;
        if !(low >= 0.0 && low < high && high <= nyquist) {
            return Err(Error::invalid(format!(
                "band {low}..{high} Hz outside 0..{nyquist} Hz"
            )));
        }
        let first = (low / self.bin_hz).ceil() as usize;
        let last = ((high / self.bin_hz).floor() as usize).min(self.magnitudes.len() - 1);
        if last < first + 1 {
            return Err(Error::invalid(format!(
                "band {low}..{high} Hz holds fewer than 2 bins at {} Hz resolution",
                self.bin_hz
            )));
        }
        Ok(&self.magnitudes[first..=last])
    }

    pub fn band_std(&self, low: f64, high: f64) -> Result<f64> {
        population_std(self.band(low, high)?)
    }

    pub fn band_kurtosis(&self, low: f64, high: f64) -> Result<f64> {
        population_kurtosis(self.band(low, high)?)
    }
}

/// Standard deviation of |H(f)| over the bins in `[low, high]`.
pub fn spectral_std(rir: &Rir, low: f64, high: f64) -> Result<f64> {
    MagnitudeSpectrum::of(rir)?.band_std(low, high)
}

/// Kurtosis of |H(f)| over the bins in `[low, high]`.
pub fn spectral_kurtosis(rir: &Rir, low: f64, high: f64) -> Result<f64> {
    MagnitudeSpectrum::of(rir)?.band_kurtosis(low, high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rir::RirSource;

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut s = vec![0.0; 1024];
        s[0] = 1.0;
        let rir = Rir::new(s, 8000.0, RirSource::Deconvolved);
        assert!(spectral_std(&rir, 500.0, 1500.0).unwrap() < 1e-12);
        assert!(matches!(
            spectral_kurtosis(&rir, 500.0, 1500.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn narrow_band_rejected() {
        let rir = Rir::new(vec![1.0, 0.5, 0.25, 0.1], 8.0, RirSource::Deconvolved);
        assert!(matches!(
            spectral_std(&rir, 1.0, 1.5),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            spectral_std(&rir, 1.0, 5.0),
            Err(Error::InvalidArgument(_))
        ));
    }
}
