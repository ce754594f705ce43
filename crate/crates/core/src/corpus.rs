//! Synthetic corpora: every room measured at several positions, many
//! samples per position, with seeded jitter between positions and samples.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::NoiseCondition;
use crate::error::{Error, Result};
use crate::io::{write_signal, SignalFormat};
use crate::mls::{generate_mls, MeasurementConfig};
use crate::par::{map_slice, Exec};
use crate::rir::Rir;
use crate::synth::{
    mix_seed, rng, simulate_measurement, synth_rir, RoomMode, RoomSpec, SpaceKind,
    TransientInjector, TransientNoise,
};

/// Standard deviations of the perturbations applied to each room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Jitter {
    pub position_drr_db: f64,
    /// Relative RT change shared by all bands at one position.
    pub position_rt_rel: f64,
    pub sample_drr_db: f64,
    /// Relative per-band RT change per sample.
    pub sample_rt_rel: f64,
    pub sample_pnr_db: f64,
}

impl Default for Jitter {
    fn default() -> Self {
        Jitter {
            position_drr_db: 0.7,
            position_rt_rel: 0.02,
            sample_drr_db: 0.5,
            sample_rt_rel: 0.02,
            sample_pnr_db: 2.0,
        }
    }
}

impl Jitter {
    pub fn none() -> Self {
        Jitter {
            position_drr_db: 0.0,
            position_rt_rel: 0.0,
            sample_drr_db: 0.0,
            sample_rt_rel: 0.0,
            sample_pnr_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusPlan {
    pub rooms: Vec<RoomSpec>,
    pub positions: u32,
    pub samples_per_position: u32,
    pub duration_s: f64,
    pub sample_rate: f64,
    pub seed: u64,
    pub jitter: Jitter,
    pub visit_id: u32,
    pub noise_condition: NoiseCondition,
    /// Bursts injected into noisy-condition samples.
    pub transient: TransientNoise,
}

impl Default for CorpusPlan {
    fn default() -> Self {
        CorpusPlan {
            rooms: default_rooms(),
            positions: 2,
            samples_per_position: 50,
            duration_s: 2.8,
            sample_rate: 44_100.0,
            seed: 0,
            jitter: Jitter::default(),
            visit_id: 0,
            noise_condition: NoiseCondition::Quiet,
            transient: TransientNoise::default(),
        }
    }
}

/// One planned response with its perturbed room parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub index: usize,
    pub label: String,
    pub position_id: u32,
    pub sample_id: u32,
    pub visit_id: u32,
    pub noise_condition: NoiseCondition,
    pub spec: RoomSpec,
}

impl CorpusItem {
    pub fn file_stem(&self) -> String {
        format!(
            "{}_v{}_p{}_s{:03}",
            self.label, self.visit_id, self.position_id, self.sample_id
        )
    }
}

fn normal(r: &mut impl Rng) -> f64 {
    r.sample(StandardNormal)
}

impl CorpusPlan {
    pub fn validate(&self) -> Result<()> {
        if self.rooms.is_empty() || self.positions == 0 || self.samples_per_position == 0 {
            return Err(Error::invalid("corpus needs rooms, positions and samples"));
        }
        let mut names = BTreeSet::new();
        for r in &self.rooms {
            r.validate()?;
            if !names.insert(r.label.as_str()) {
                return Err(Error::invalid(format!("duplicate room label {}", r.label)));
            }
            if r.label.is_empty() || r.label.contains([',', '/', '\\', '"', '\n']) {
                return Err(Error::invalid(format!(
                    "room label {:?} is not file-safe",
                    r.label
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rooms.len() * (self.positions * self.samples_per_position) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every item, rooms outermost, then positions, then samples.
    pub fn items(&self) -> Vec<CorpusItem> {
        let j = &self.jitter;
        let mut out = Vec::with_capacity(self.len());
        for (ri, room) in self.rooms.iter().enumerate() {
            let room_seed = mix_seed(self.seed, ri as u64);
            for p in 0..self.positions {
                let pos_seed = mix_seed(room_seed, p as u64 + 1);
                let mut pr = rng(pos_seed, 0);
                let pos_drr = j.position_drr_db * normal(&mut pr);
                let pos_rt = (1.0 + j.position_rt_rel * normal(&mut pr)).max(0.5);
                for s in 0..self.samples_per_position {
                    let seed = mix_seed(mix_seed(pos_seed, s as u64 + 1), self.visit_id as u64);
                    let mut sr = rng(seed, 1);
                    let mut spec = room.clone();
                    spec.rng_seed = pos_seed;
                    spec.noise_seed = Some(seed);
                    for rt in spec.rt_per_band.values_mut() {
                        *rt *= pos_rt * (1.0 + j.sample_rt_rel * normal(&mut sr)).max(0.5);
                    }
                    if spec.direct_to_reverb_db.is_finite() {
                        spec.direct_to_reverb_db += pos_drr + j.sample_drr_db * normal(&mut sr);
                    }
                    if spec.pnr_db.is_finite() {
                        spec.pnr_db += j.sample_pnr_db * normal(&mut sr);
                    }
                    out.push(CorpusItem {
                        index: out.len(),
                        label: room.label.clone(),
                        position_id: p,
                        sample_id: s,
                        visit_id: self.visit_id,
                        noise_condition: self.noise_condition,
                        spec,
                    });
                }
            }
        }
        out
    }

    /// Builds the burst injector when noisy samples are planned.
    pub fn injector(&self) -> Result<Option<TransientInjector>> {
        if self.noise_condition == NoiseCondition::Quiet {
            return Ok(None);
        }
        let order = (1..=crate::mls::MAX_ORDER)
            .find(|&n| (1usize << n) > (self.duration_s * self.sample_rate).round() as usize)
            .ok_or_else(|| Error::invalid("response too long for any supported MLS order"))?;
        let cfg = crate::mls::MeasurementConfig {
            mls_order: order.max(crate::mls::MIN_ORDER),
            sample_rate: self.sample_rate,
            ..Default::default()
        };
        Ok(Some(TransientInjector::new(self.transient.clone(), cfg)?))
    }

    pub fn synthesize(
        &self,
        item: &CorpusItem,
        injector: Option<&TransientInjector>,
    ) -> Result<Rir> {
        let rir = synth_rir(&item.spec, self.duration_s, self.sample_rate)?;
        match injector {
            Some(inj) => inj.apply(&rir, item.spec.noise_seed()),
            None => Ok(rir),
        }
    }

    /// Synthesizes every item, in order.
    pub fn synthesize_all(&self, exec: Exec) -> Result<Vec<(CorpusItem, Rir)>> {
        self.validate()?;
        let injector = self.injector()?;
        let items = self.items();
        let rirs = map_slice(exec, &items, |it| self.synthesize(it, injector.as_ref()));
        items
            .into_iter()
            .zip(rirs)
            .map(|(it, r)| Ok((it, r?)))
            .collect()
    }
}

pub const MANIFEST_FILE: &str = "manifest.csv";

/// Bands appearing in any room, for the manifest's RT columns.
fn manifest_bands(items: &[CorpusItem]) -> Vec<u32> {
    items
        .iter()
        .flat_map(|i| i.spec.rt_per_band.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Writes one file per item plus `manifest.csv`; returns the file paths.
pub fn write_corpus(
    plan: &CorpusPlan,
    dir: &Path,
    format: SignalFormat,
    exec: Exec,
) -> Result<Vec<PathBuf>> {
    plan.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let injector = plan.injector()?;
    let items = plan.items();
    let written = map_slice(exec, &items, |it| -> Result<PathBuf> {
        let rir = plan.synthesize(it, injector.as_ref())?;
        let path = dir.join(format!("{}.{}", it.file_stem(), format.extension()));
        write_signal(&path, &rir.samples, rir.sample_rate, format)?;
        Ok(path)
    });
    let written = written.into_iter().collect::<Result<Vec<_>>>()?;
    write_manifest(plan, &items, &written, &dir.join(MANIFEST_FILE))?;
    Ok(written)
}

/// Writes the simulated MLS recording of every item plus `manifest.csv`.
///
/// Only quiet plans can be recorded: burst noise is modelled in the
/// response domain.
pub fn write_recordings(
    plan: &CorpusPlan,
    dir: &Path,
    cfg: &MeasurementConfig,
    format: SignalFormat,
    exec: Exec,
) -> Result<Vec<PathBuf>> {
    plan.validate()?;
    if plan.noise_condition == NoiseCondition::Noisy {
        return Err(Error::invalid(
            "recordings can only be simulated for quiet corpora",
        ));
    }
    if cfg.sample_rate != plan.sample_rate {
        return Err(Error::invalid("measurement and corpus sample rates differ"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mls = generate_mls(cfg.mls_order)?;
    let items = plan.items();
    let written = map_slice(exec, &items, |it| -> Result<PathBuf> {
        let rec = simulate_measurement(&it.spec, &mls, cfg, plan.duration_s)?;
        let path = dir.join(format!("{}.{}", it.file_stem(), format.extension()));
        write_signal(&path, &rec.samples, rec.sample_rate, format)?;
        Ok(path)
    });
    let written = written.into_iter().collect::<Result<Vec<_>>>()?;
    write_manifest(plan, &items, &written, &dir.join(MANIFEST_FILE))?;
    Ok(written)
}

fn write_manifest(
    plan: &CorpusPlan,
    items: &[CorpusItem],
    files: &[PathBuf],
    mpath: &Path,
) -> Result<()> {
    let bands = manifest_bands(items);
    let file = std::fs::File::create(mpath).map_err(|e| Error::io(mpath, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header: Vec<String> = [
        "file",
        "label",
        "space_kind",
        "visit_id",
        "noise_condition",
        "position_id",
        "sample_id",
        "seed",
        "noise_seed",
        "sample_rate",
        "direct_to_reverb_db",
        "pnr_db",
        "onset_s",
        "reverb_energy",
    ]
    .map(String::from)
    .to_vec();
    header.extend(bands.iter().map(|b| format!("rt_{b}")));
    w.write_record(&header)?;
    for (it, path) in items.iter().zip(files) {
        let db = |v: f64| {
            if v.is_finite() {
                v.to_string()
            } else {
                "inf".to_string()
            }
        };
        let mut rec = vec![
            path.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
            it.label.clone(),
            match it.spec.space_kind {
                SpaceKind::Closed => "closed".to_string(),
                SpaceKind::Open => "open".to_string(),
            },
            it.visit_id.to_string(),
            it.noise_condition.to_string(),
            it.position_id.to_string(),
            it.sample_id.to_string(),
            it.spec.rng_seed.to_string(),
            it.spec.noise_seed().to_string(),
            plan.sample_rate.to_string(),
            db(it.spec.direct_to_reverb_db),
            db(it.spec.pnr_db),
            it.spec.onset_s.to_string(),
            it.spec.reverb_energy.to_string(),
        ];
        rec.extend(bands.iter().map(|b| {
            it.spec
                .rt_per_band
                .get(b)
                .map(f64::to_string)
                .unwrap_or_default()
        }));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(mpath, e))?;
    Ok(())
}

/// Copies a manifest next to derived files: every `file` entry gets
/// `extension`, and the copy is written to `dst_dir`.
pub fn relink_manifest(src: &Path, dst_dir: &Path, extension: &str) -> Result<PathBuf> {
    let file = std::fs::File::open(src).map_err(|e| Error::io(src, e))?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = rdr.headers()?.clone();
    let cf = header
        .iter()
        .position(|h| h == "file")
        .ok_or_else(|| Error::Parse {
            path: src.to_path_buf(),
            row: 1,
            message: "missing column file".into(),
        })?;
    let dst = dst_dir.join(MANIFEST_FILE);
    let out = std::fs::File::create(&dst).map_err(|e| Error::io(&dst, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(out));
    w.write_record(&header)?;
    for rec in rdr.records() {
        let rec = rec?;
        let fields: Vec<String> = rec
            .iter()
            .enumerate()
            .map(|(i, f)| {
                if i == cf {
                    Path::new(f)
                        .with_extension(extension)
                        .to_string_lossy()
                        .into_owned()
                } else {
                    f.to_string()
                }
            })
            .collect();
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| Error::io(&dst, e))?;
    Ok(dst)
}

/// One row of a corpus manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub file: PathBuf,
    pub label: String,
    pub visit_id: u32,
    pub noise_condition: NoiseCondition,
    pub position_id: u32,
    pub sample_rate: f64,
    pub pnr_db: f64,
    /// Longest band RT of the room, when the manifest lists any.
    pub max_rt: Option<f64>,
}

/// Reads `manifest.csv`; file paths are resolved against its directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                row: 1,
                message: format!("missing column {name}"),
            })
    };
    let (cf, cl, cv, cn, cp, cs, cpnr) = (
        col("file")?,
        col("label")?,
        col("visit_id")?,
        col("noise_condition")?,
        col("position_id")?,
        col("sample_rate")?,
        col("pnr_db")?,
    );
    let rt_cols: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with("rt_"))
        .collect();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let bad = |m: String| Error::Parse {
            path: path.to_path_buf(),
            row,
            message: m,
        };
        let num = |k: usize| {
            rec[k]
                .parse::<f64>()
                .map_err(|_| bad(format!("{:?} is not a number", &rec[k])))
        };
        let int = |k: usize| {
            rec[k]
                .parse::<u32>()
                .map_err(|_| bad(format!("{:?} is not an integer", &rec[k])))
        };
        out.push(ManifestEntry {
            file: dir.join(&rec[cf]),
            label: rec[cl].to_string(),
            visit_id: int(cv)?,
            noise_condition: rec[cn].parse().map_err(|e: Error| bad(e.to_string()))?,
            position_id: int(cp)?,
            sample_rate: num(cs)?,
            pnr_db: if &rec[cpnr] == "inf" {
                f64::INFINITY
            } else {
                num(cpnr)?
            },
            max_rt: rt_cols
                .iter()
                .filter(|&&k| !rec[k].is_empty())
                .map(|&k| num(k))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .reduce(f64::max),
        });
    }
    Ok(out)
}

const BANDS: [u32; 6] = [250, 500, 1000, 2000, 4000, 8000];

fn room(
    label: &str,
    kind: SpaceKind,
    rt: [f64; 6],
    drr: f64,
    pnr: f64,
    modes: &[(f64, f64, f64)],
    area: Option<f64>,
) -> RoomSpec {
    RoomSpec {
        space_kind: kind,
        rt_per_band: BANDS.iter().copied().zip(rt).collect(),
        surface_area: area,
        modes: modes
            .iter()
            .map(|&(freq_hz, rt_s, level_db)| RoomMode {
                freq_hz,
                rt_s,
                level_db,
            })
            .collect(),
        ..RoomSpec::uniform(label, &[], 0.0, drr, pnr)
    }
}

/// Ten rooms loosely modelled on small offices, a conference room, a lab,
/// open kitchen, hallway and cubicle areas, and a large stairwell.
pub fn default_rooms() -> Vec<RoomSpec> {
    use SpaceKind::{Closed, Open};
    vec![
        room(
            "office_a",
            Closed,
            [0.45, 0.40, 0.38, 0.36, 0.33, 0.28],
            -14.0,
            36.0,
            &[(310.0, 0.5, -12.0)],
            Some(10.2),
        ),
        room(
            "office_b",
            Closed,
            [0.42, 0.38, 0.36, 0.35, 0.31, 0.27],
            -15.0,
            36.0,
            &[(420.0, 0.45, -12.0)],
            Some(8.8),
        ),
        room(
            "office_c",
            Closed,
            [0.35, 0.32, 0.30, 0.29, 0.27, 0.23],
            -12.0,
            36.0,
            &[(520.0, 0.4, -12.0)],
            Some(7.1),
        ),
        room(
            "office_d",
            Closed,
            [0.50, 0.46, 0.43, 0.40, 0.36, 0.30],
            -15.0,
            36.0,
            &[(260.0, 0.55, -12.0)],
            Some(11.7),
        ),
        room(
            "conference",
            Closed,
            [0.70, 0.62, 0.58, 0.55, 0.50, 0.42],
            -17.0,
            36.0,
            &[(180.0, 0.8, -14.0)],
            Some(26.1),
        ),
        room(
            "lab",
            Closed,
            [0.48, 0.44, 0.45, 0.42, 0.38, 0.33],
            -16.0,
            32.0,
            &[(120.0, 0.6, -8.0), (1500.0, 0.4, -14.0)],
            Some(11.7),
        ),
        room(
            "kitchen",
            Open,
            [0.60, 0.55, 0.50, 0.48, 0.44, 0.36],
            -13.0,
            32.0,
            &[],
            Some(6.5),
        ),
        room(
            "hallway",
            Open,
            [0.90, 0.85, 0.80, 0.75, 0.65, 0.50],
            -15.0,
            32.0,
            &[(140.0, 1.0, -10.0)],
            None,
        ),
        room(
            "stairs",
            Closed,
            [1.30, 1.20, 1.10, 1.00, 0.85, 0.65],
            -19.0,
            32.0,
            &[(90.0, 1.4, -10.0)],
            None,
        ),
        room(
            "cubicle",
            Open,
            [0.38, 0.34, 0.33, 0.32, 0.30, 0.26],
            -12.0,
            32.0,
            &[],
            Some(8.8),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let plan = CorpusPlan::default();
        plan.validate().unwrap();
        assert_eq!(plan.len(), 1000);
        let items = plan.items();
        assert_eq!(items.len(), 1000);
        assert_eq!(items[999].file_stem(), "cubicle_v0_p1_s049");
        let seeds: BTreeSet<u64> = items.iter().map(|i| i.spec.noise_seed()).collect();
        assert_eq!(seeds.len(), 1000);
        let tails: BTreeSet<u64> = items.iter().map(|i| i.spec.rng_seed).collect();
        assert_eq!(tails.len(), 20);
        assert!(plan.rooms.iter().all(|r| r.max_rt() < 1.5));
    }

    #[test]
    fn visits_change_seeds() {
        let a = CorpusPlan::default();
        let b = CorpusPlan {
            visit_id: 1,
            ..CorpusPlan::default()
        };
        assert_ne!(
            a.items()[0].spec.noise_seed(),
            b.items()[0].spec.noise_seed()
        );
        assert_eq!(a.items()[0].spec.rng_seed, b.items()[0].spec.rng_seed);
        assert_eq!(a.items(), CorpusPlan::default().items());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut plan = CorpusPlan::default();
        plan.rooms.push(plan.rooms[0].clone());
        assert!(plan.validate().is_err());
    }
}
