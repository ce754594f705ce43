//! Reading and writing sampled signals as WAV or single-column CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFormat {
    /// 32-bit IEEE float WAV.
    #[default]
    Wav,
    /// 16-bit PCM WAV; samples are clipped to [-1, 1).
    Wav16,
    /// One `amplitude` column; the sample rate travels separately.
    Csv,
}

impl SignalFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SignalFormat::Wav | SignalFormat::Wav16 => "wav",
            SignalFormat::Csv => "csv",
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("wav") => Ok(SignalFormat::Wav),
            Some("csv") => Ok(SignalFormat::Csv),
            _ => Err(Error::invalid(format!(
                "{}: expected a .wav or .csv file",
                path.display()
            ))),
        }
    }
}

impl std::str::FromStr for SignalFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wav" => Ok(SignalFormat::Wav),
            "wav16" => Ok(SignalFormat::Wav16),
            "csv" => Ok(SignalFormat::Csv),
            other => Err(Error::invalid(format!("unknown signal format {other:?}"))),
        }
    }
}

pub fn write_signal(
    path: &Path,
    samples: &[f64],
    sample_rate: f64,
    format: SignalFormat,
) -> Result<()> {
    match format {
        SignalFormat::Wav | SignalFormat::Wav16 => {
            if sample_rate.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&sample_rate) {
                return Err(Error::invalid(format!(
                    "WAV needs an integral sample rate, got {sample_rate}"
                )));
            }
            let float = format == SignalFormat::Wav;
            let spec = hound::WavSpec {
                channels: 1,
                sample_rate: sample_rate as u32,
                bits_per_sample: if float { 32 } else { 16 },
                sample_format: if float {
                    hound::SampleFormat::Float
                } else {
                    hound::SampleFormat::Int
                },
            };
            let mut w = hound::WavWriter::create(path, spec)?;
            for &x in samples {
                if float {
                    w.write_sample(x as f32)?;
                } else {
                    w.write_sample(
                        (x * 32768.0)
                            .round()
                            .clamp(i16::MIN as f64, i16::MAX as f64) as i16,
                    )?;
                }
            }
            w.finalize()?;
        }
        SignalFormat::Csv => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
            w.write_record(["amplitude"])?;
            for x in samples {
                w.write_record([x.to_string()])?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

/// Reads a mono signal. WAV files carry their sample rate; CSV files need
/// `sample_rate`. Multi-channel WAV files are reduced to their first channel.
pub fn read_signal(path: &Path, sample_rate: Option<f64>) -> Result<(Vec<f64>, f64)> {
    match SignalFormat::from_path(path)? {
        SignalFormat::Csv => {
            let fs = sample_rate.ok_or_else(|| {
                Error::invalid(format!(
                    "{}: CSV signals need a sample rate",
                    path.display()
                ))
            })?;
            let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
            let mut out = Vec::new();
            for (i, rec) in rdr.records().enumerate() {
                let rec = rec?;
                let field = rec.get(0).unwrap_or("").trim();
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    row: i + 2,
                    message: format!("{field:?} is not a number"),
                })?;
                out.push(v);
            }
            Ok((out, fs))
        }
        _ => {
            let mut r = hound::WavReader::open(path)?;
            let spec = r.spec();
            let ch = spec.channels as usize;
            let samples: Vec<f64> = match spec.sample_format {
                hound::SampleFormat::Float => r
                    .samples::<f32>()
                    .step_by(ch)
                    .map(|s| s.map(f64::from))
                    .collect::<std::result::Result<_, _>>()?,
                hound::SampleFormat::Int => {
                    let scale = 1.0 / (1i64 << (spec.bits_per_sample - 1)) as f64;
                    r.samples::<i32>()
                        .step_by(ch)
                        .map(|s| s.map(|v| v as f64 * scale))
                        .collect::<std::result::Result<_, _>>()?
                }
            };
            Ok((samples, spec.sample_rate as f64))
        }
    }
}
