use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an MLS measurement is played and recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasurementConfig {
    pub mls_order: u32,
    /// Number of periods averaged.
    pub n_reps: usize,
    pub sample_rate: f64,
    /// Drop one leading period before averaging so the room has settled
    /// into the periodic steady state.
    pub discard_first_period: bool,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            mls_order: 17,
            n_reps: 6,
            sample_rate: 44_100.0,
            discard_first_period: true,
        }
    }
}

impl MeasurementConfig {
    pub fn period(&self) -> usize {
        (1usize << self.mls_order) - 1
    }

    /// Periods the recording must contain.
    pub fn periods_required(&self) -> usize {
        self.n_reps + usize::from(self.discard_first_period)
    }

    pub fn validate(&self) -> Result<()> {
        if !(crate::mls::MIN_ORDER..=crate::mls::MAX_ORDER).contains(&self.mls_order) {
            return Err(Error::invalid(format!(
                "MLS order {} out of range",
                self.mls_order
            )));
        }
        if self.n_reps == 0 {
            return Err(Error::invalid("n_reps must be at least 1"));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(())
    }
}

/// Raw microphone samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

/// Seconds of excitation played: `n_reps * (2^order - 1) / fs`.
pub fn excitation_duration(cfg: &MeasurementConfig) -> f64 {
    cfg.n_reps as f64 * cfg.period() as f64 / cfg.sample_rate
}

/// Sample-wise mean over `cfg.n_reps` periods, after optionally skipping the
/// first one.
pub fn average_periods(rec: &Recording, cfg: &MeasurementConfig) -> Result<Recording> {
    cfg.validate()?;
    let period = cfg.period();
    let needed = cfg.periods_required() * period;
    if rec.samples.len() < needed {
        return Err(Error::InsufficientData(format!(
            "recording has {} samples, {} periods of {period} need {needed}",
            rec.samples.len(),
            cfg.periods_required()
        )));
    }
    let start = if cfg.discard_first_period { period } else { 0 };
    let mut acc = vec![0.0; period];
    for chunk in rec.samples[start..start + cfg.n_reps * period].chunks_exact(period) {
        for (a, x) in acc.iter_mut().zip(chunk) {
            *a += x;
        }
    }
    let scale = 1.0 / cfg.n_reps as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    Ok(Recording {
        samples: acc,
        sample_rate: rec.sample_rate,
    })
}
