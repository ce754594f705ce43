//! Schroeder decay curves and the energetic descriptors D50, C50 and TS.

use crate::error::{Error, Result};
use crate::rir::Rir;

/// Backward-integrated squared impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDecayCurve {
    /// `linear[t] = Σ_{τ ≥ t} h²(τ)`.
    pub linear: Vec<f64>,
    /// `10 log10(linear[t] / linear[onset])`.
    pub db: Vec<f64>,
    pub sample_rate: f64,
    pub onset_index: usize,
}

/// Backward cumulative energy, summed from the last sample towards the first.
pub(crate) fn backward_energy(samples: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; samples.len()];
    let mut acc = 0.0;
    for (o, x) in out.iter_mut().zip(samples).rev() {
        acc += x * x;
        *o = acc;
    }
    out
}

pub fn edc(rir: &Rir) -> Result<EnergyDecayCurve> {
    if rir.is_empty() {
        return Err(Error::Degenerate("empty impulse response".into()));
    }
    let linear = backward_energy(&rir.samples);
    let reference = linear[rir.onset_index];
    if reference <= 0.0 {
        return Err(Error::Degenerate("no energy from the onset on".into()));
    }
    let db = linear
        .iter()
        .map(|e| 10.0 * (e / reference).log10())
        .collect();
    Ok(EnergyDecayCurve {
        linear,
        db,
        sample_rate: rir.sample_rate,
        onset_index: rir.onset_index,
    })
}

/// Decay rate fitted over `[start_db, end_db]` and extrapolated to -60 dB.
pub fn rt_from_decay_span(curve: &EnergyDecayCurve, start_db: f64, end_db: f64) -> Result<f64> {
    let db = &curve.db[curve.onset_index..];
    let reached = db
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::min);
    let first = db.iter().position(|&v| v <= start_db);
    let last = first.and_then(|i| db[i..].iter().position(|&v| v <= end_db).map(|j| i + j));
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::InsufficientDecay {
            target_db: end_db,
            reached_db: reached,
        });
    };
    if last <= first {
        return Err(Error::InsufficientDecay {
            target_db: end_db,
            reached_db: reached,
        });
    }
    let n = (last - first + 1) as f64;
    let (mut sx, mut sy, mut sxy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for (i, &y) in db.iter().enumerate().take(last + 1).skip(first) {
        let x = i as f64 / curve.sample_rate;
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if !(slope < 0.0) {
        return Err(Error::Degenerate(format!(
            "non-decaying fit, slope {slope} dB/s"
        )));
    }
    Ok(-60.0 / slope)
}

/// Classical Schroeder reverberation time from the -5..-35 dB span.
pub fn rt_schroeder(curve: &EnergyDecayCurve) -> Result<f64> {
    rt_from_decay_span(curve, -5.0, -35.0)
}

fn energy_from_onset(rir: &Rir) -> Result<(&[f64], f64)> {
    if rir.is_empty() {
        return Err(Error::Degenerate("empty impulse response".into()));
    }
    let tail = &rir.samples[rir.onset_index..];
    let total: f64 = tail.iter().map(|x| x * x).sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all-zero impulse response".into()));
    }
    Ok((tail, total))
}

/// Fraction of energy arriving within 50 ms of the onset.
pub fn d50(rir: &Rir) -> Result<f64> {
    let (tail, total) = energy_from_onset(rir)?;
    let early_len = ((0.05 * rir.sample_rate).round() as usize).min(tail.len());
    let early: f64 = tail[..early_len].iter().map(|x| x * x).sum();
    Ok(early / total)
}

/// `10 log10(D50 / (1 - D50))`; an error when either side holds no energy.
pub fn c50_from_d50(d: f64) -> Result<f64> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Saturated(d));
    }
    Ok(10.0 * (d / (1.0 - d)).log10())
}

pub fn c50(rir: &Rir) -> Result<f64> {
    c50_from_d50(d50(rir)?)
}

/// Centre time: first moment of h² in seconds after the onset.
pub fn ts(rir: &Rir) -> Result<f64> {
    let (tail, total) = energy_from_onset(rir)?;
    let moment: f64 = tail
        .iter()
        .enumerate()
        .map(|(i, x)| i as f64 / rir.sample_rate * x * x)
        .sum();
    Ok(moment / total)
}
