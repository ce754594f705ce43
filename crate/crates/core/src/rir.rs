use serde::{Deserialize, Serialize};

use crate::synth::RoomSpec;

/// Where an impulse response came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RirSource {
    Synthetic(Box<RoomSpec>),
    Measured { file: String },
    Deconvolved,
}

/// A sampled room impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    /// Index of the direct-sound peak.
    pub onset_index: usize,
    pub source: RirSource,
}

impl Rir {
    /// Wraps samples, placing the onset at the absolute peak.
    pub fn new(samples: Vec<f64>, sample_rate: f64, source: RirSource) -> Self {
        let onset_index = peak_index(&samples);
        Rir {
            samples,
            sample_rate,
            onset_index,
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Rir {
        Rir {
            samples,
            sample_rate: self.sample_rate,
            onset_index: self.onset_index,
            source: self.source.clone(),
        }
    }

    /// Peak-to-noise ratio in dB: squared absolute peak over the variance
    /// of the last `tail_fraction` of the samples (the tail is taken to be
    /// pure noise floor; its mean is removed).
    pub fn pnr_db(&self, tail_fraction: f64) -> f64 {
        let n = self.samples.len();
        let m = ((n as f64 * tail_fraction).round() as usize).clamp(1, n.max(1));
        let tail = &self.samples[n - m..];
        let mean = tail.iter().sum::<f64>() / m as f64;
        let noise = tail.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m as f64;
        let peak = self.peak();
        10.0 * (peak * peak / noise).log10()
    }
}

/// Index of the first sample with maximal magnitude (0 for empty input).
pub fn peak_index(samples: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, x) in samples.iter().enumerate() {
        if x.abs() > best_val {
            best_val = x.abs();
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onset_is_first_absolute_peak() {
        let rir = Rir::new(vec![0.1, -0.9, 0.9, 0.2], 8.0, RirSource::Deconvolved);
        assert_eq!(rir.onset_index, 1);
        assert_eq!(rir.peak(), 0.9);
    }

    #[test]
    fn pnr_of_known_tail() {
        let mut s = vec![0.0; 100];
        s[0] = 1.0;
        for (i, x) in s.iter_mut().enumerate().skip(90) {
            *x = if i % 2 == 0 { 0.11 } else { 0.09 };
        }
        let rir = Rir::new(s, 100.0, RirSource::Deconvolved);
        assert!((rir.pnr_db(0.1) - 40.0).abs() < 1e-9);
    }
}
