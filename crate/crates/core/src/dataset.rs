//! Labeled fingerprint datasets: rows of features with room, visit, noise
//! condition and microphone position.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::SpaceKind;

pub const META_COLUMNS: [&str; 4] = ["label", "visit_id", "noise_condition", "position_id"];

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCondition {
    #[default]
    Quiet,
    Noisy,
}

impl fmt::Display for NoiseCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseCondition::Quiet => "quiet",
            NoiseCondition::Noisy => "noisy",
        })
    }
}

impl FromStr for NoiseCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "quiet" => Ok(NoiseCondition::Quiet),
            "noisy" => Ok(NoiseCondition::Noisy),
            other => Err(Error::invalid(format!(
                "noise condition {other:?}, expected quiet or noisy"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomLabel {
    pub name: String,
    #[serde(default)]
    pub space_kind: SpaceKind,
    #[serde(default)]
    pub notes: String,
}

/// One fingerprint with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: String,
    pub visit_id: u32,
    pub noise: NoiseCondition,
    pub position_id: u32,
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Zero-variance features, passed through unscaled.
    pub constant: Vec<bool>,
}

impl Normalization {
    /// Fits on the given rows (each of equal length).
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid(format!(
                "z-score fit needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let d = rows[0].as_ref().len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            mean.iter_mut().zip(r.as_ref()).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        let mut scale = vec![0.0f64; d];
        for r in rows {
            for (j, x) in r.as_ref().iter().enumerate() {
                var[j] += (x - mean[j]) * (x - mean[j]);
                scale[j] = scale[j].max(x.abs());
            }
        }
        let mut constant = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        for j in 0..d {
            let s = (var[j] / n).sqrt();
            let flat = !(s > 1e-12 * scale[j]);
            if flat {
                mean[j] = 0.0;
            }
            constant.push(flat);
            std.push(if flat { 1.0 } else { s });
        }
        Ok(Normalization {
            mean,
            std,
            constant,
        })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Restriction to a subset of features.
    pub fn subset(&self, idx: &[usize]) -> Normalization {
        Normalization {
            mean: idx.iter().map(|&i| self.mean[i]).collect(),
            std: idx.iter().map(|&i| self.std[i]).collect(),
            constant: idx.iter().map(|&i| self.constant[i]).collect(),
        }
    }
}

/// Rows selected by visit, noise condition, position and label; unset
/// fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RowFilter {
    pub visit: Option<u32>,
    pub noise: Option<NoiseCondition>,
    pub position: Option<u32>,
    pub label: Option<String>,
}

impl RowFilter {
    pub fn all() -> Self {
        RowFilter::default()
    }

    pub fn matches(&self, s: &Sample) -> bool {
        self.visit.is_none_or(|v| v == s.visit_id)
            && self.noise.is_none_or(|n| n == s.noise)
            && self.position.is_none_or(|p| p == s.position_id)
            && self.label.as_ref().is_none_or(|l| *l == s.label)
    }
}

impl FromStr for RowFilter {
    type Err = Error;

    /// `all`, or comma-separated `key=value` with keys `visit`, `noise`,
    /// `position`, `label`.
    fn from_str(s: &str) -> Result<Self> {
        let mut f = RowFilter::default();
        let s = s.trim();
        if s.is_empty() || s == "all" {
            return Ok(f);
        }
        for part in s.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("filter term {part:?} is not key=value")))?;
            let v = v.trim();
            let num = || {
                v.parse::<u32>()
                    .map_err(|_| Error::invalid(format!("filter {k}: {v:?} is not an integer")))
            };
            match k.trim() {
                "visit" => f.visit = Some(num()?),
                "position" => f.position = Some(num()?),
                "noise" => f.noise = Some(v.parse()?),
                "label" => f.label = Some(v.to_string()),
                other => return Err(Error::invalid(format!("unknown filter key {other:?}"))),
            }
        }
        Ok(f)
    }
}

/// A feature matrix with labels; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Sample>,
    pub normalization: Option<Normalization>,
}

/// True for the column names produced by feature extraction.
pub fn is_feature_name(name: &str) -> bool {
    if matches!(name, "time_kurtosis" | "c50" | "d50" | "ts") {
        return true;
    }
    ["std_", "kur_", "rt_"].iter().any(|p| {
        name.strip_prefix(p)
            .and_then(|b| b.parse::<f64>().ok())
            .is_some_and(|b| b > 0.0)
    })
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>) -> Self {
        LabeledDataset {
            feature_names,
            rows: Vec::new(),
            normalization: None,
        }
    }

    pub fn push(&mut self, s: Sample) -> Result<()> {
        if s.features.len() != self.feature_names.len() {
            return Err(Error::invalid(format!(
                "row has {} features, dataset has {}",
                s.features.len(),
                self.feature_names.len()
            )));
        }
        self.rows.push(s);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Distinct labels in sorted order; class indices refer to this list.
    pub fn class_names(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| r.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Row labels as indices into [`class_names`](Self::class_names).
    pub fn class_indices(&self) -> (Vec<String>, Vec<usize>) {
        let names = self.class_names();
        let idx = self
            .rows
            .iter()
            .map(|r| {
                names
                    .binary_search(&r.label)
                    .expect("label from the same rows")
            })
            .collect();
        (names, idx)
    }

    pub fn features(&self) -> Vec<&[f64]> {
        self.rows.iter().map(|r| r.features.as_slice()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features[j]).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// New dataset of the rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            feature_names: self.feature_names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            normalization: self.normalization.clone(),
        }
    }

    pub fn indices(&self, filter: &RowFilter) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| filter.matches(&self.rows[i]))
            .collect()
    }

    pub fn mask(&self, filter: &RowFilter) -> Vec<bool> {
        self.rows.iter().map(|r| filter.matches(r)).collect()
    }

    pub fn filter(&self, filter: &RowFilter) -> LabeledDataset {
        self.select(&self.indices(filter))
    }

    /// `(matching, rest)`; together they hold every row exactly once.
    pub fn partition(&self, filter: &RowFilter) -> (LabeledDataset, LabeledDataset) {
        let (a, b): (Vec<usize>, Vec<usize>) =
            (0..self.len()).partition(|&i| filter.matches(&self.rows[i]));
        (self.select(&a), self.select(&b))
    }

    /// Concatenates datasets with identical feature columns.
    pub fn concat(parts: &[LabeledDataset]) -> Result<LabeledDataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        let mut out = LabeledDataset::new(first.feature_names.clone());
        for p in parts {
            if p.feature_names != out.feature_names {
                return Err(Error::invalid("datasets have different feature columns"));
            }
            out.rows.extend(p.rows.iter().cloned());
        }
        Ok(out)
    }
}

/// Fits z-score parameters on every row of `ds`.
pub fn zscore_fit(ds: &LabeledDataset) -> Result<Normalization> {
    if ds.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    Normalization::fit(&ds.features())
}

/// Applies `norm` to every row, recording it on the result.
pub fn zscore_apply(ds: &LabeledDataset, norm: &Normalization) -> Result<LabeledDataset> {
    if norm.len() != ds.n_features() {
        return Err(Error::invalid(format!(
            "normalization has {} features, dataset {}",
            norm.len(),
            ds.n_features()
        )));
    }
    Ok(LabeledDataset {
        feature_names: ds.feature_names.clone(),
        rows: ds
            .rows
            .iter()
            .map(|r| Sample {
                features: norm.apply_row(&r.features),
                ..r.clone()
            })
            .collect(),
        normalization: Some(norm.clone()),
    })
}

fn parse_err(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

/// Reads a dataset CSV: feature columns followed by the metadata columns.
/// Row numbers in errors count the header as row 1.
pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, path)
}

pub fn read_dataset<R: std::io::Read>(reader: R, path: &Path) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < META_COLUMNS.len() + 1 {
        return Err(parse_err(
            path,
            1,
            "header needs feature columns and label,visit_id,noise_condition,position_id",
        ));
    }
    let nf = cols.len() - META_COLUMNS.len();
    for (c, expected) in cols[nf..].iter().zip(META_COLUMNS) {
        if *c != expected {
            return Err(parse_err(
                path,
                1,
                format!("unknown column {c:?} where {expected:?} was expected"),
            ));
        }
    }
    let mut seen = BTreeSet::new();
    for c in &cols[..nf] {
        if !is_feature_name(c) {
            return Err(parse_err(path, 1, format!("unknown column {c:?}")));
        }
        if !seen.insert(*c) {
            return Err(parse_err(path, 1, format!("duplicate column {c:?}")));
        }
    }
    let mut ds = LabeledDataset::new(cols[..nf].iter().map(|s| s.to_string()).collect());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(path, row, e.to_string()))?;
        if rec.len() != cols.len() {
            return Err(parse_err(
                path,
                row,
                format!("{} fields, header has {}", rec.len(), cols.len()),
            ));
        }
        let mut features = Vec::with_capacity(nf);
        for (j, field) in rec.iter().take(nf).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                parse_err(path, row, format!("{}: {field:?} is not a number", cols[j]))
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    path,
                    row,
                    format!("{}: non-finite value {field}", cols[j]),
                ));
            }
            features.push(v);
        }
        let label = rec[nf].trim().to_string();
        if label.is_empty() {
            return Err(parse_err(path, row, "empty label"));
        }
        let int = |k: usize| {
            rec[k].trim().parse::<u32>().map_err(|_| {
                parse_err(
                    path,
                    row,
                    format!("{}: {:?} is not an integer", cols[k], &rec[k]),
                )
            })
        };
        let visit_id = int(nf + 1)?;
        let noise = rec[nf + 2]
            .parse()
            .map_err(|e: Error| parse_err(path, row, e.to_string()))?;
        let position_id = int(nf + 3)?;
        ds.rows.push(Sample {
            features,
            label,
            visit_id,
            noise,
            position_id,
        });
    }
    Ok(ds)
}

/// Writes the dataset with shortest round-trip float formatting.
pub fn save_dataset(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, std::io::BufWriter::new(file))
}

pub fn write_dataset<W: std::io::Write>(ds: &LabeledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.extend(META_COLUMNS);
    w.write_record(&header)?;
    for r in &ds.rows {
        if let Some(v) = r.features.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "row labelled {} has non-finite value {v}",
                r.label
            )));
        }
        let mut rec: Vec<String> = r.features.iter().map(|v| v.to_string()).collect();
        rec.push(r.label.clone());
        rec.push(r.visit_id.to_string());
        rec.push(r.noise.to_string());
        rec.push(r.position_id.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))?;
    Ok(())
}

/// Links dataset rows to the RIR files they were extracted from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset: PathBuf,
    pub feature_config: crate::features::FeatureConfig,
    pub rows: Vec<ManifestRow>,
    /// Inputs that yielded no fingerprint, with the reason.
    #[serde(default)]
    pub skipped: Vec<SkippedInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub row: usize,
    pub source: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedInput {
    pub source: PathBuf,
    pub reason: String,
}
