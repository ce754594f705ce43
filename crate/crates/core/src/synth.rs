//! Parametric synthetic rooms with known decay, energy ratio and noise.
//!
//! A synthetic response is a direct-sound spike followed by band-limited
//! Gaussian noise per octave band, each band shaped by the amplitude
//! envelope `exp(-6.91 t / RT)` (60 dB of energy decay after `RT` seconds),
//! plus a stationary white noise floor.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::BandPass;
use crate::mls::{
    average_periods, generate_mls, DeconvPath, Deconvolver, MeasurementConfig, Mls, Recording,
};
use crate::rir::{Rir, RirSource};

/// `ln(10^3)`: amplitude decay constant giving -60 dB of energy at `t = RT`.
pub const DECAY_CONSTANT: f64 = 6.907_755_278_982_137;

/// Sabine reverberation time `0.161 V / (S α)`.
pub fn sabine_rt(volume: f64, surface_area: f64, absorption: f64) -> Result<f64> {
    if !(volume > 0.0 && surface_area > 0.0) {
        return Err(Error::invalid("volume and surface area must be positive"));
    }
    if !(absorption > 0.0 && absorption <= 1.0) {
        return Err(Error::invalid(format!(
            "absorption {absorption} outside (0, 1]"
        )));
    }
    Ok(0.161 * volume / (surface_area * absorption))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    #[default]
    Closed,
    Open,
}

/// A damped resonance added to the reverberant tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomMode {
    pub freq_hz: f64,
    pub rt_s: f64,
    /// Mode energy relative to the band-noise energy, dB.
    pub level_db: f64,
}

/// Parameters of one synthetic room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub label: String,
    #[serde(default)]
    pub space_kind: SpaceKind,
    /// RT60 in seconds keyed by octave-band centre in Hz.
    pub rt_per_band: BTreeMap<u32, f64>,
    /// Direct-spike energy over total reverberant energy; `"inf"` removes
    /// the tail.
    #[serde(with = "db_value")]
    pub direct_to_reverb_db: f64,
    /// Peak over noise-floor power; `"inf"` for a noiseless response.
    #[serde(with = "db_value", default = "infinite")]
    pub pnr_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_area: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_absorption: Option<f64>,
    /// Seeds the reverberant tail and modes.
    #[serde(default)]
    pub rng_seed: u64,
    /// Seeds the noise floor; defaults to `rng_seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
    /// Delay of the direct sound, seconds.
    #[serde(default = "default_onset")]
    pub onset_s: f64,
    /// Total energy of the reverberant tail.
    #[serde(default = "default_reverb_energy")]
    pub reverb_energy: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<RoomMode>,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn default_onset() -> f64 {
    0.001
}

fn default_reverb_energy() -> f64 {
    0.01
}

/// dB values that may be `±inf`, written as the strings `"inf"`/`"-inf"`.
mod db_value {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!("not a dB value: {other}"))),
            },
        }
    }
}

impl RoomSpec {
    /// A room with a single reverberation time in every listed band.
    pub fn uniform(
        label: &str,
        bands: &[u32],
        rt: f64,
        direct_to_reverb_db: f64,
        pnr_db: f64,
    ) -> Self {
        RoomSpec {
            label: label.to_string(),
            space_kind: SpaceKind::Closed,
            rt_per_band: bands.iter().map(|&b| (b, rt)).collect(),
            direct_to_reverb_db,
            pnr_db,
            volume: None,
            surface_area: None,
            avg_absorption: None,
            rng_seed: 0,
            noise_seed: None,
            onset_s: default_onset(),
            reverb_energy: default_reverb_energy(),
            modes: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed.unwrap_or(self.rng_seed)
    }

    pub fn max_rt(&self) -> f64 {
        self.rt_per_band
            .values()
            .copied()
            .chain(self.modes.iter().map(|m| m.rt_s))
            .fold(0.0, f64::max)
    }

    fn has_tail(&self) -> bool {
        self.direct_to_reverb_db < f64::INFINITY
            && self.reverb_energy > 0.0
            && !(self.rt_per_band.is_empty() && self.modes.is_empty())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((b, rt)) = self
            .rt_per_band
            .iter()
            .find(|(_, rt)| !(**rt > 0.0 && rt.is_finite()))
        {
            return Err(Error::invalid(format!(
                "{}: RT {rt} s in the {b} Hz band",
                self.label
            )));
        }
        if self
            .modes
            .iter()
            .any(|m| !(m.rt_s > 0.0 && m.freq_hz > 0.0))
        {
            return Err(Error::invalid(format!(
                "{}: room modes need positive RT and frequency",
                self.label
            )));
        }
        if self.pnr_db.is_nan() || self.pnr_db == f64::NEG_INFINITY {
            return Err(Error::invalid(format!(
                "{}: PNR {}",
                self.label, self.pnr_db
            )));
        }
        if self.direct_to_reverb_db.is_nan() || self.direct_to_reverb_db == f64::NEG_INFINITY {
            return Err(Error::invalid(format!(
                "{}: direct/reverb ratio {}",
                self.label, self.direct_to_reverb_db
            )));
        }
        if !(self.reverb_energy >= 0.0 && self.reverb_energy.is_finite()) || !(self.onset_s >= 0.0)
        {
            return Err(Error::invalid(format!(
                "{}: negative reverb energy or onset",
                self.label
            )));
        }
        Ok(())
    }

    /// Reads a room list (a JSON array) or a single room (a JSON object).
    pub fn load_all(path: &std::path::Path) -> Result<Vec<RoomSpec>> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let rooms: Vec<RoomSpec> = match value {
            serde_json::Value::Array(_) => serde_json::from_value(value)?,
            _ => vec![serde_json::from_value(value)?],
        };
        for r in &rooms {
            r.validate()?;
        }
        Ok(rooms)
    }
}

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// splitmix64 finaliser, used to derive independent child seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const NOISE_STREAM: u64 = 0;
const BAND_STREAM: u64 = 16;
const MODE_STREAM: u64 = 64;
const RECORDING_STREAM: u64 = 128;
const BURST_STREAM: u64 = 256;

/// Synthesizes `duration` seconds of the room's impulse response.
pub fn synth_rir(spec: &RoomSpec, duration: f64, sample_rate: f64) -> Result<Rir> {
    spec.validate()?;
    if !(sample_rate > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    if !(duration >= spec.max_rt()) || duration <= 0.0 {
        return Err(Error::invalid(format!(
            "{}: duration {duration} s shorter than the longest RT {} s",
            spec.label,
            spec.max_rt()
        )));
    }
    let len = (duration * sample_rate).round() as usize;
    let onset = (spec.onset_s * sample_rate).round() as usize;
    if onset >= len {
        return Err(Error::invalid(format!(
            "{}: onset beyond the response",
            spec.label
        )));
    }
    let tail_len = len - onset - 1;
    let mut h = vec![0.0; len];

    if spec.has_tail() {
        let mut tail = vec![0.0; tail_len];
        for (i, (&center, &rt)) in spec.rt_per_band.iter().enumerate() {
            let mut r = rng(spec.rng_seed, BAND_STREAM + i as u64);
            let filter = BandPass::octave(center as f64, sample_rate)?;
            let band = filter.apply(&gaussian(&mut r, tail_len));
            let rms = (band.iter().map(|x| x * x).sum::<f64>() / tail_len.max(1) as f64).sqrt();
            if rms > 0.0 {
                let k = DECAY_CONSTANT / (rt * sample_rate);
                for (j, (t, b)) in tail.iter_mut().zip(&band).enumerate() {
                    *t += b / rms * (-k * (j + 1) as f64).exp();
                }
            }
        }
        let band_energy: f64 = tail.iter().map(|x| x * x).sum();
        let reference = if band_energy > 0.0 { band_energy } else { 1.0 };
        for (i, mode) in spec.modes.iter().enumerate() {
            let mut r = rng(spec.rng_seed, MODE_STREAM + i as u64);
            let phase = r.random::<f64>() * std::f64::consts::TAU;
            let k = DECAY_CONSTANT / (mode.rt_s * sample_rate);
            let w = std::f64::consts::TAU * mode.freq_hz / sample_rate;
            let m: Vec<f64> = (0..tail_len)
                .map(|j| ((j + 1) as f64 * w + phase).sin() * (-k * (j + 1) as f64).exp())
                .collect();
            let e: f64 = m.iter().map(|x| x * x).sum();
            if e > 0.0 {
                let g = (reference * 10f64.powf(mode.level_db / 10.0) / e).sqrt();
                tail.iter_mut().zip(&m).for_each(|(t, x)| *t += g * x);
            }
        }
        let energy: f64 = tail.iter().map(|x| x * x).sum();
        if energy > 0.0 {
            let g = (spec.reverb_energy / energy).sqrt();
            for (dst, t) in h[onset + 1..].iter_mut().zip(&tail) {
                *dst = g * t;
            }
        }
        h[onset] = (spec.reverb_energy * 10f64.powf(spec.direct_to_reverb_db / 10.0)).sqrt();
    } else {
        h[onset] = 1.0;
    }

    if spec.pnr_db.is_finite() {
        let peak = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sigma = peak * 10f64.powf(-spec.pnr_db / 20.0);
        let mut r = rng(spec.noise_seed(), NOISE_STREAM);
        for x in h.iter_mut() {
            *x += sigma * r.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(Rir::new(
        h,
        sample_rate,
        RirSource::Synthetic(Box::new(spec.clone())),
    ))
}

fn next_fft_len(n: usize) -> usize {
    n.next_power_of_two()
}

/// Plays `n_reps + 1` MLS periods into the room, starting from silence.
///
/// The first period carries the onset transient; later periods equal the
/// circular convolution of one period with `rir`. White noise of standard
/// deviation `noise_std` is added to every recorded sample.
pub fn simulate_recording(
    rir: &Rir,
    mls: &Mls,
    cfg: &MeasurementConfig,
    noise_std: f64,
    seed: u64,
) -> Result<Recording> {
    cfg.validate()?;
    let n = mls.len();
    if cfg.period() != n {
        return Err(Error::invalid(format!(
            "configured MLS order {} does not match sequence of length {n}",
            cfg.mls_order
        )));
    }
    if rir.len() > n {
        return Err(Error::TimeAliasing {
            rir_len: rir.len(),
            period: n,
        });
    }
    let size = next_fft_len(2 * n);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex<f64>> = vec![Complex::default(); size];
    let mut b = a.clone();
    for (dst, &s) in a.iter_mut().zip(mls.symbols()) {
        dst.re = s as f64;
    }
    for (dst, &x) in b.iter_mut().zip(&rir.samples) {
        dst.re = x;
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    let linear: Vec<f64> = a[..2 * n - 1].iter().map(|c| c.re * scale).collect();

    let first = &linear[..n];
    let steady: Vec<f64> = (0..n)
        .map(|j| {
            linear[j]
                + if j + n < linear.len() {
                    linear[j + n]
                } else {
                    0.0
                }
        })
        .collect();
    let mut samples = Vec::with_capacity((cfg.n_reps + 1) * n);
    samples.extend_from_slice(first);
    for _ in 0..cfg.n_reps {
        samples.extend_from_slice(&steady);
    }
    if noise_std > 0.0 {
        let mut r = rng(seed, RECORDING_STREAM);
        for x in samples.iter_mut() {
            *x += noise_std * r.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(Recording {
        samples,
        sample_rate: rir.sample_rate,
    })
}

/// Recording-domain noise standard deviation that leaves a per-sample noise
/// floor of `floor_std` in the response recovered from `n_reps` averaged
/// periods of an MLS of length `period`.
pub fn recording_noise_std(floor_std: f64, period: usize, n_reps: usize) -> f64 {
    let n = period as f64;
    floor_std * (n + 1.0) / n.sqrt() * (n_reps as f64).sqrt()
}

/// Simulates a full measurement of the room.
///
/// The synthetic noise floor is replaced by measurement noise sized so the
/// recovered response has the room's PNR after averaging `cfg.n_reps`
/// periods.
pub fn simulate_measurement(
    spec: &RoomSpec,
    mls: &Mls,
    cfg: &MeasurementConfig,
    rir_duration: f64,
) -> Result<Recording> {
    let clean_spec = RoomSpec {
        pnr_db: f64::INFINITY,
        ..spec.clone()
    };
    let len = (rir_duration * cfg.sample_rate).round() as usize;
    if len > mls.len() {
        return Err(Error::TimeAliasing {
            rir_len: len,
            period: mls.len(),
        });
    }
    let clean = synth_rir(&clean_spec, rir_duration, cfg.sample_rate)?;
    let noise_std = if spec.pnr_db.is_finite() {
        let floor = clean.peak() * 10f64.powf(-spec.pnr_db / 20.0);
        recording_noise_std(floor, mls.len(), cfg.n_reps)
    } else {
        0.0
    };
    simulate_recording(&clean, mls, cfg, noise_std, spec.noise_seed())
}

/// Transient noise bursts (talking, footsteps) during a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransientNoise {
    pub bursts: usize,
    pub burst_s: f64,
    pub low_hz: f64,
    pub high_hz: f64,
    /// How far the bursts lower the response's PNR.
    pub pnr_drop_db: f64,
}

impl Default for TransientNoise {
    fn default() -> Self {
        TransientNoise {
            bursts: 8,
            burst_s: 0.4,
            low_hz: 80.0,
            high_hz: 260.0,
            pnr_drop_db: 10.0,
        }
    }
}

/// Corrupts responses with bursts that occurred during their measurement.
///
/// The bursts are generated in the recording domain and pushed through the
/// same averaging and cross-correlation as the excitation; by linearity the
/// result adds to the clean response.
pub struct TransientInjector {
    noise: TransientNoise,
    cfg: MeasurementConfig,
    deconvolver: Deconvolver,
    filter: BandPass,
}

impl TransientInjector {
    pub fn new(noise: TransientNoise, cfg: MeasurementConfig) -> Result<Self> {
        cfg.validate()?;
        let mls = generate_mls(cfg.mls_order)?;
        let filter = BandPass::new(noise.low_hz, noise.high_hz, cfg.sample_rate, 2)?;
        Ok(TransientInjector {
            noise,
            cfg,
            deconvolver: Deconvolver::new(&mls),
            filter,
        })
    }

    /// The spread-out burst noise as it appears in a recovered response.
    pub fn response_noise(&self, seed: u64) -> Result<Vec<f64>> {
        let n = self.cfg.period();
        let total = (self.cfg.n_reps + 1) * n;
        let burst_len =
            ((self.noise.burst_s * self.cfg.sample_rate).round() as usize).clamp(1, total);
        let mut rec = vec![0.0; total];
        let mut r = rng(seed, BURST_STREAM);
        for _ in 0..self.noise.bursts {
            let start = r.random_range(0..=total - burst_len);
            let burst = self.filter.apply(&gaussian(&mut r, burst_len));
            for (i, (dst, b)) in rec[start..start + burst_len]
                .iter_mut()
                .zip(&burst)
                .enumerate()
            {
                let hann = 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / burst_len as f64).cos();
                *dst += hann * b;
            }
        }
        let avg = average_periods(
            &Recording {
                samples: rec,
                sample_rate: self.cfg.sample_rate,
            },
            &self.cfg,
        )?;
        Ok(self.deconvolver.deconvolve(&avg, DeconvPath::Fft)?.samples)
    }

    pub fn apply(&self, rir: &Rir, seed: u64) -> Result<Rir> {
        if rir.len() > self.deconvolver.period() {
            return Err(Error::TimeAliasing {
                rir_len: rir.len(),
                period: self.deconvolver.period(),
            });
        }
        let e = self.response_noise(seed)?;
        let len = rir.len();
        let tail = ((len as f64 * 0.1).round() as usize).max(1);
        let power = |x: &[f64]| x[len - tail..len].iter().map(|v| v * v).sum::<f64>() / tail as f64;
        let existing = power(&rir.samples);
        let added = power(&e[..len]);
        if !(added > 0.0) {
            return Ok(rir.clone());
        }
        let target = existing * (10f64.powf(self.noise.pnr_drop_db / 10.0) - 1.0);
        let g = (target / added).sqrt();
        let samples = rir.samples.iter().zip(&e).map(|(x, n)| x + g * n).collect();
        Ok(Rir::new(samples, rir.sample_rate, rir.source.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{edc, rt_schroeder};

    #[test]
    fn sabine_values() {
        assert!((sabine_rt(100.0, 100.0, 0.161).unwrap() - 1.0).abs() < 1e-12);
        assert!((sabine_rt(100.0, 100.0, 0.322).unwrap() - 0.5).abs() < 1e-12);
        let office = sabine_rt(10.2 * 2.5, 70.0, 0.3).unwrap();
        assert!((office - 0.1955).abs() < 1e-12, "{office}");
        assert!(sabine_rt(0.0, 1.0, 0.5).is_err());
        assert!(sabine_rt(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn spec_json_accepts_infinite_db() {
        let json =
            r#"{"label":"x","rt_per_band":{"1000":0.5},"direct_to_reverb_db":"inf","pnr_db":34}"#;
        let spec: RoomSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.direct_to_reverb_db, f64::INFINITY);
        assert_eq!(spec.pnr_db, 34.0);
        assert_eq!(spec.rt_per_band[&1000], 0.5);
        let back: RoomSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn degenerate_room_is_a_single_spike() {
        let spec = RoomSpec::uniform("empty", &[1000], 0.5, f64::INFINITY, f64::INFINITY);
        let rir = synth_rir(&spec, 1.0, 8000.0).unwrap();
        let nonzero: Vec<usize> = (0..rir.len()).filter(|&i| rir.samples[i] != 0.0).collect();
        assert_eq!(nonzero, vec![8]);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = RoomSpec::uniform("r", &[500, 2000], 0.4, 0.0, 40.0).with_seed(9);
        let a = synth_rir(&spec, 1.0, 16_000.0).unwrap();
        let b = synth_rir(&spec, 1.0, 16_000.0).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = synth_rir(&spec.clone().with_seed(10), 1.0, 16_000.0).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn duration_must_cover_rt() {
        let spec = RoomSpec::uniform("r", &[1000], 1.2, 0.0, 40.0);
        assert!(matches!(
            synth_rir(&spec, 1.0, 8000.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_band_schroeder_rt() {
        let spec = RoomSpec::uniform("r", &[1000], 0.5, 0.0, f64::INFINITY).with_seed(3);
        let rir = synth_rir(&spec, 2.0, 44_100.0).unwrap();
        let rt = rt_schroeder(&edc(&rir).unwrap()).unwrap();
        assert!((rt - 0.5).abs() < 0.025, "{rt}");
    }

    #[test]
    fn pnr_matches_request() {
        let spec = RoomSpec::uniform("r", &[500, 1000, 2000], 0.5, 0.0, 34.0).with_seed(5);
        let rir = synth_rir(&spec, 2.8, 44_100.0).unwrap();
        let pnr = rir.pnr_db(0.1);
        assert!((pnr - 34.0).abs() < 1.0, "{pnr}");
    }

    #[test]
    fn energy_ratio_is_exact() {
        let spec =
            RoomSpec::uniform("r", &[250, 1000, 4000], 0.6, -6.0, f64::INFINITY).with_seed(1);
        let rir = synth_rir(&spec, 1.5, 44_100.0).unwrap();
        let onset = (spec.onset_s * 44_100.0).round() as usize;
        let direct = rir.samples[onset].powi(2);
        let reverb: f64 = rir.samples[onset + 1..].iter().map(|x| x * x).sum();
        assert!((10.0 * (direct / reverb).log10() + 6.0).abs() < 1e-9);
    }

    #[test]
    fn impulse_room_records_the_stimulus() {
        let mls = generate_mls(8).unwrap();
        let cfg = MeasurementConfig {
            mls_order: 8,
            n_reps: 2,
            sample_rate: 8000.0,
            discard_first_period: true,
        };
        let spec = RoomSpec {
            onset_s: 0.0,
            ..RoomSpec::uniform("impulse", &[], 0.1, f64::INFINITY, f64::INFINITY)
        };
        let rec = simulate_measurement(&spec, &mls, &cfg, 0.02).unwrap();
        let stim = mls.stimulus(3);
        assert_eq!(rec.samples.len(), stim.len());
        for (a, b) in rec.samples.iter().zip(&stim) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn long_rir_is_a_time_aliasing_risk() {
        let mls = generate_mls(8).unwrap();
        let cfg = MeasurementConfig {
            mls_order: 8,
            n_reps: 1,
            sample_rate: 8000.0,
            discard_first_period: true,
        };
        let spec = RoomSpec::uniform("r", &[1000], 0.05, 0.0, f64::INFINITY);
        assert!(matches!(
            simulate_measurement(&spec, &mls, &cfg, 0.1),
            Err(Error::TimeAliasing { .. })
        ));
    }
}
