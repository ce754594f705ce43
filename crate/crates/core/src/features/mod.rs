//! Temporal, spectral and energetic fingerprint features.

mod energy;
mod filter;
mod naer;
mod spectral;
mod stats;

pub use energy::{
    c50, c50_from_d50, d50, edc, rt_from_decay_span, rt_schroeder, ts, EnergyDecayCurve,
};
pub use filter::{octave_edges, BandPass, DEFAULT_ORDER, OCTAVE_CENTERS};
pub use naer::{naer_rt, BondPoint, NaerParams};
pub use spectral::{spectral_kurtosis, spectral_std, MagnitudeSpectrum};
pub use stats::{population_kurtosis, population_std};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::rir::Rir;

/// Analysis window of the fingerprint, in seconds.
pub const DEFAULT_WINDOW_S: f64 = 1.5;

/// A truncated response plus whether the window was shorter than the
/// longest reverberation time the caller expects.
#[derive(Debug, Clone)]
pub struct Windowed {
    pub rir: Rir,
    pub shorter_than_rt: bool,
}

/// Keeps the first `t_window` seconds.
pub fn window_rir(rir: &Rir, t_window: f64, max_rt: Option<f64>) -> Windowed {
    let n = ((t_window * rir.sample_rate).round() as usize).min(rir.len());
    let shorter_than_rt = max_rt.is_some_and(|rt| t_window < rt);
    if shorter_than_rt {
        log::warn!(
            "analysis window {t_window} s is shorter than the longest expected RT {} s",
            max_rt.unwrap_or_default()
        );
    }
    let out = if n == rir.len() {
        rir.clone()
    } else {
        Rir::new(
            rir.samples[..n].to_vec(),
            rir.sample_rate,
            rir.source.clone(),
        )
    };
    Windowed {
        rir: out,
        shorter_than_rt,
    }
}

pub fn temporal_kurtosis(rir: &Rir) -> Result<f64> {
    population_kurtosis(&rir.samples)
}

/// Band-pass copy of `rir` through the octave filter at `center`.
///
/// The onset index is carried over from the broadband response.
pub fn octave_filter(rir: &Rir, center: f64) -> Result<Rir> {
    let f = BandPass::octave(center, rir.sample_rate)?;
    Ok(rir.with_samples(f.apply(&rir.samples)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub t_window: f64,
    pub bands: Vec<f64>,
    pub naer: NaerParams,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            t_window: DEFAULT_WINDOW_S,
            bands: OCTAVE_CENTERS.to_vec(),
            naer: NaerParams::default(),
        }
    }
}

impl FeatureConfig {
    pub fn with_window(t_window: f64) -> Self {
        FeatureConfig {
            t_window,
            ..Default::default()
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        feature_names(&self.bands)
    }
}

/// Column names in fingerprint order.
pub fn feature_names(bands: &[f64]) -> Vec<String> {
    let mut names = vec!["time_kurtosis".to_string()];
    for prefix in ["std", "kur", "rt"] {
        names.extend(bands.iter().map(|b| format!("{prefix}_{b}")));
    }
    names.extend(["c50", "d50", "ts"].map(String::from));
    names
}

/// The acoustic fingerprint of one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub bands: Vec<f64>,
    pub time_kurtosis: f64,
    pub spectral_std: Vec<f64>,
    pub spectral_kurtosis: Vec<f64>,
    /// Noise-adaptive reverberation time per band, seconds.
    pub rt: Vec<f64>,
    pub c50: f64,
    pub d50: f64,
    pub ts: f64,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        4 + 3 * self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> Vec<String> {
        feature_names(&self.bands)
    }

    /// Flat values in the order of [`feature_names`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.time_kurtosis);
        v.extend_from_slice(&self.spectral_std);
        v.extend_from_slice(&self.spectral_kurtosis);
        v.extend_from_slice(&self.rt);
        v.extend([self.c50, self.d50, self.ts]);
        v
    }

    pub fn from_slice(bands: &[f64], values: &[f64]) -> Result<Self> {
        let nb = bands.len();
        if values.len() != 4 + 3 * nb {
            return Err(Error::invalid(format!(
                "{} values for a {}-feature layout",
                values.len(),
                4 + 3 * nb
            )));
        }
        Ok(FeatureVector {
            bands: bands.to_vec(),
            time_kurtosis: values[0],
            spectral_std: values[1..1 + nb].to_vec(),
            spectral_kurtosis: values[1 + nb..1 + 2 * nb].to_vec(),
            rt: values[1 + 2 * nb..1 + 3 * nb].to_vec(),
            c50: values[1 + 3 * nb],
            d50: values[2 + 3 * nb],
            ts: values[3 + 3 * nb],
        })
    }
}

fn tag<T>(feature: &'static str, band: Option<f64>, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Feature {
        feature,
        band,
        source: Box::new(e),
    })
}

/// Full fingerprint of `rir` under the default band layout.
pub fn extract_features(rir: &Rir, t_window: f64) -> Result<FeatureVector> {
    extract_features_with(rir, &FeatureConfig::with_window(t_window))
}

pub fn extract_features_with(rir: &Rir, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let w = window_rir(rir, cfg.t_window, None).rir;
    let time_kurtosis = tag("time_kurtosis", None, temporal_kurtosis(&w))?;
    let spectrum = tag("spectrum", None, MagnitudeSpectrum::of(&w))?;

    let nb = cfg.bands.len();
    let mut spectral_std = Vec::with_capacity(nb);
    let mut spectral_kurtosis = Vec::with_capacity(nb);
    let mut rt = Vec::with_capacity(nb);
    for &center in &cfg.bands {
        let (lo, hi) = octave_edges(center);
        spectral_std.push(tag(
            "spectral_std",
            Some(center),
            spectrum.band_std(lo, hi),
        )?);
        spectral_kurtosis.push(tag(
            "spectral_kurtosis",
            Some(center),
            spectrum.band_kurtosis(lo, hi),
        )?);
        let band = tag("octave_filter", Some(center), octave_filter(&w, center))?;
        rt.push(tag("rt", Some(center), naer_rt(&band, &cfg.naer))?);
    }
    let d = tag("d50", None, d50(&w))?;
    let c = tag("c50", None, c50_from_d50(d))?;
    let t = tag("ts", None, ts(&w))?;
    Ok(FeatureVector {
        bands: cfg.bands.clone(),
        time_kurtosis,
        spectral_std,
        spectral_kurtosis,
        rt,
        c50: c,
        d50: d,
        ts: t,
    })
}

/// Fingerprints of many responses, in input order.
pub fn extract_batch(rirs: &[Rir], cfg: &FeatureConfig, exec: Exec) -> Vec<Result<FeatureVector>> {
    par::map_slice(exec, rirs, |r| extract_features_with(r, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rir::RirSource;

    #[test]
    fn default_layout_has_22_named_columns() {
        let names = FeatureConfig::default().feature_names();
        assert_eq!(names.len(), 22);
        assert_eq!(names[0], "time_kurtosis");
        assert_eq!(names[1], "std_250");
        assert_eq!(names[7], "kur_250");
        assert_eq!(names[13], "rt_250");
        assert_eq!(&names[19..], &["c50", "d50", "ts"]);
    }

    #[test]
    fn window_lengths() {
        let rir = Rir::new(vec![0.1; 44_100 * 3], 44_100.0, RirSource::Deconvolved);
        let w = window_rir(&rir, 1.5, Some(1.0));
        assert_eq!(w.rir.len(), 66_150);
        assert!(!w.shorter_than_rt);
        let w = window_rir(&rir, 0.5, Some(1.0));
        assert!(w.shorter_than_rt);
        let w = window_rir(&rir, 10.0, None);
        assert_eq!(w.rir, rir);
    }

    #[test]
    fn vector_round_trips_through_slice() {
        let bands = OCTAVE_CENTERS.to_vec();
        let values: Vec<f64> = (0..22).map(|i| i as f64 * 0.5).collect();
        let fv = FeatureVector::from_slice(&bands, &values).unwrap();
        assert_eq!(fv.to_vec(), values);
        assert_eq!(fv.rt[0], 6.5);
        assert!(FeatureVector::from_slice(&bands, &values[..21]).is_err());
    }

    #[test]
    fn errors_name_the_band() {
        let rir = Rir::new(vec![0.0; 100], 1000.0, RirSource::Deconvolved);
        let err = extract_features(&rir, 1.5).unwrap_err();
        assert!(err.to_string().contains("time_kurtosis"), "{err}");
        let mut s = vec![0.0; 4410];
        s[10] = 1.0;
        let rir = Rir::new(s, 44_100.0, RirSource::Deconvolved);
        match extract_features(&rir, 1.5) {
            Err(Error::Feature { feature, band, .. }) => {
                assert_eq!(feature, "spectral_kurtosis");
                assert_eq!(band, Some(250.0));
            }
            other => panic!("expected a band error, got {other:?}"),
        }
    }
}
