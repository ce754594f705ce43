//! Noise-adaptive reverberation time.
//!
//! The noise power is estimated from the tail of the response. A pseudo
//! noise energy curve of constant power is anchored to the sound energy
//! curve at the bonding point; the reverberation time is the first instant
//! at which the excess of sound energy over that curve falls below a
//! threshold relative to the energy at the onset.

use serde::{Deserialize, Serialize};

use super::energy::backward_energy;
use crate::error::{Error, Result};
use crate::rir::Rir;

/// Where the pseudo noise curve is anchored to the sound energy curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondPoint {
    /// First sample of the noise-estimation tail.
    NoiseTailStart,
    Index(usize),
    /// Fraction of the response length.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaerParams {
    /// Trailing fraction of samples used for the noise estimate.
    pub per_noise: f64,
    pub bond_point: BondPoint,
    /// Threshold as a fraction of the energy at the onset.
    pub threshold: f64,
}

impl Default for NaerParams {
    fn default() -> Self {
        NaerParams {
            per_noise: 0.1,
            bond_point: BondPoint::NoiseTailStart,
            threshold: 0.1,
        }
    }
}

impl NaerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.per_noise > 0.0 && self.per_noise < 1.0) {
            return Err(Error::invalid(format!(
                "per_noise {} outside (0, 1)",
                self.per_noise
            )));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::invalid("NAER threshold must be positive"));
        }
        if let BondPoint::Fraction(f) = self.bond_point {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::invalid(format!(
                    "bond point fraction {f} outside [0, 1)"
                )));
            }
        }
        Ok(())
    }

    /// Length of the noise-estimation tail for a response of `len` samples.
    pub fn tail_len(&self, len: usize) -> usize {
        ((len as f64 * self.per_noise).round() as usize).clamp(1, len)
    }

    pub fn bond_index(&self, len: usize) -> Result<usize> {
        let idx = match self.bond_point {
            BondPoint::NoiseTailStart => len - self.tail_len(len),
            BondPoint::Index(i) => i,
            BondPoint::Fraction(f) => (f * len as f64).floor() as usize,
        };
        if idx >= len {
            return Err(Error::invalid(format!(
                "bond point {idx} outside response of {len}"
            )));
        }
        Ok(idx)
    }
}

/// Mean square of the last `tail_len` samples, summed front to back.
pub(crate) fn tail_power(samples: &[f64], tail_len: usize) -> f64 {
    let start = samples.len() - tail_len;
    let mut acc = 0.0;
    for x in &samples[start..] {
        acc += x * x;
    }
    acc / tail_len as f64
}

/// Noise-adaptive reverberation time in seconds after the onset.
///
/// Zero means the band is noise dominated from the onset on.
pub fn naer_rt(rir: &Rir, params: &NaerParams) -> Result<f64> {
    params.validate()?;
    let len = rir.len();
    if len < 2 {
        return Err(Error::Degenerate("response too short for NAER".into()));
    }
    let noise_power = tail_power(&rir.samples, params.tail_len(len));
    let sound = backward_energy(&rir.samples);
    let bond = params.bond_index(len)?;
    let offset = sound[bond] - noise_power * (len - bond) as f64;
    let limit = params.threshold * sound[rir.onset_index];
    if !(limit > 0.0) {
        return Err(Error::Degenerate("no energy from the onset on".into()));
    }
    for (t, &energy) in sound.iter().enumerate().skip(rir.onset_index) {
        let pseudo = noise_power * (len - t) as f64 + offset;
        if energy - pseudo < limit {
            return Ok((t - rir.onset_index) as f64 / rir.sample_rate);
        }
    }
    Err(Error::NoCrossing)
}
