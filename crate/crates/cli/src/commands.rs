use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use roomprint::corpus::{
    default_rooms, read_manifest, relink_manifest, write_corpus, write_recordings, CorpusPlan,
    Jitter, ManifestEntry, MANIFEST_FILE,
};
use roomprint::dataset::{
    load_dataset, save_dataset, DatasetManifest, LabeledDataset, ManifestRow, NoiseCondition,
    Sample, SkippedInput,
};
use roomprint::features::{extract_features_with, FeatureConfig};
use roomprint::io::{read_signal, write_signal};
use roomprint::mls::{average_periods, generate_mls, Deconvolver, MeasurementConfig, Recording};
use roomprint::par::map_slice;
use roomprint::rir::{Rir, RirSource};
use roomprint::roomid::{
    cross_evaluate, evaluate_split, fit, joint_permutation_test, kfold_cv_rows, permutation_test,
    sffs_with, ClassifierModel, ConfusionMatrix, CvReport, PermutationConfig, PermutationResult,
    StepAction,
};
use roomprint::synth::RoomSpec;
use serde::{Deserialize, Serialize};

use crate::settings::Settings;
use crate::{
    usage, DeconvolveArgs, EvalArgs, ExtractArgs, FeatureSelection, PermtestArgs, SffsArgs,
    SynthArgs, TrainArgs,
};

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn synth(s: &Settings, a: &SynthArgs) -> Result<()> {
    let rooms = match &a.rooms {
        Some(p) => RoomSpec::load_all(p)?,
        None => {
            info!("no --rooms given, using the built-in ten rooms");
            default_rooms()
        }
    };
    let plan = CorpusPlan {
        rooms,
        positions: a.positions,
        samples_per_position: a.samples,
        duration_s: a.duration,
        sample_rate: s.sample_rate,
        seed: s.seed,
        jitter: if a.no_jitter {
            Jitter::none()
        } else {
            Jitter::default()
        },
        visit_id: a.visit,
        noise_condition: if a.noisy {
            NoiseCondition::Noisy
        } else {
            NoiseCondition::Quiet
        },
        ..Default::default()
    };
    if a.recordings && a.noisy {
        return Err(usage("--recordings cannot be combined with --noisy"));
    }
    let out = s.output(&a.out);
    let files = write_corpus(&plan, &out, s.format, s.exec)?;
    write_json(&out.join("plan.json"), &plan)?;
    info!(
        "wrote {} responses and {} to {}",
        files.len(),
        MANIFEST_FILE,
        out.display()
    );
    if a.recordings {
        let dir = out.join("recordings");
        let recs = write_recordings(&plan, &dir, &s.measurement, s.format, s.exec)?;
        info!(
            "wrote {} recordings of {} periods (order {}) to {}",
            recs.len(),
            s.measurement.periods_required(),
            s.measurement.mls_order,
            dir.display()
        );
    }
    Ok(())
}

fn is_signal(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("wav" | "csv")
    ) && p.file_name().is_some_and(|n| n != MANIFEST_FILE)
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            files.retain(|f| f.is_file() && is_signal(f));
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!(roomprint::Error::InsufficientData(
            "no input signals".into()
        ));
    }
    Ok(out)
}

#[derive(Serialize)]
struct PnrEntry {
    file: PathBuf,
    pnr_db: f64,
}

pub fn deconvolve(s: &Settings, a: &DeconvolveArgs) -> Result<()> {
    let cfg = MeasurementConfig {
        discard_first_period: !a.no_discard,
        ..s.measurement
    };
    let files = expand_inputs(&a.inputs)?;
    let mls = generate_mls(cfg.mls_order)?;
    let deconv = Deconvolver::new(&mls);
    let period = cfg.period();
    let expected = cfg.periods_required() * period;
    let out = s.output(&a.out);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let results = map_slice(s.exec, &files, |f| -> Result<PnrEntry> {
        let (samples, fs) = read_signal(f, Some(s.sample_rate))?;
        if samples.len() != expected {
            return Err(roomprint::Error::InvalidArgument(format!(
                "{}: {} samples, but {} periods of an order-{} MLS need {expected}",
                f.display(),
                samples.len(),
                cfg.periods_required(),
                cfg.mls_order
            ))
            .into());
        }
        let avg = average_periods(
            &Recording {
                samples,
                sample_rate: fs,
            },
            &MeasurementConfig {
                sample_rate: fs,
                ..cfg
            },
        )?;
        let mut rir = deconv.deconvolve(&avg, a.path)?;
        if let Some(d) = a.duration {
            let n = ((d * fs).round() as usize).clamp(1, rir.len());
            rir = Rir::new(rir.samples[..n].to_vec(), fs, RirSource::Deconvolved);
        }
        let name =
            Path::new(f.file_name().unwrap_or_default()).with_extension(s.format.extension());
        write_signal(&out.join(&name), &rir.samples, fs, s.format)?;
        let pnr = rir.pnr_db(0.1);
        info!("{}: PNR {pnr:.1} dB", name.display());
        Ok(PnrEntry {
            file: name,
            pnr_db: pnr,
        })
    });
    let report = results.into_iter().collect::<Result<Vec<_>>>()?;
    let dirs: Vec<&PathBuf> = a.inputs.iter().filter(|p| p.is_dir()).collect();
    if let [dir] = dirs.as_slice() {
        let m = dir.join(MANIFEST_FILE);
        if m.is_file() {
            relink_manifest(&m, &out, s.format.extension())?;
        }
    }
    if let Some(p) = &a.report {
        write_json(&s.output(p), &report)?;
    }
    info!(
        "recovered {} responses into {}",
        report.len(),
        out.display()
    );
    Ok(())
}

fn manifest_entries(inputs: &[PathBuf]) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for p in inputs {
        let m = if p.is_dir() {
            p.join(MANIFEST_FILE)
        } else {
            p.clone()
        };
        if !m.is_file() {
            bail!(roomprint::Error::InvalidArgument(format!(
                "{} has no {MANIFEST_FILE}",
                p.display()
            )));
        }
        out.extend(read_manifest(&m)?);
    }
    Ok(out)
}

fn sample_of(e: &ManifestEntry, features: Vec<f64>) -> Sample {
    Sample {
        features,
        label: e.label.clone(),
        visit_id: e.visit_id,
        noise: e.noise_condition,
        position_id: e.position_id,
    }
}

struct Extracted {
    dataset: LabeledDataset,
    rows: Vec<ManifestRow>,
    skipped: Vec<(ManifestEntry, SkippedInput)>,
}

fn extract_entries(
    entries: &[ManifestEntry],
    cfg: &FeatureConfig,
    s: &Settings,
) -> Result<Extracted> {
    let longest = entries.iter().filter_map(|e| e.max_rt).fold(0.0, f64::max);
    if cfg.t_window < longest {
        warn!(
            "analysis window {} s is shorter than the longest room RT {longest} s",
            cfg.t_window
        );
    }
    let results = map_slice(s.exec, entries, |e| -> roomprint::Result<Vec<f64>> {
        let (samples, fs) = read_signal(&e.file, Some(e.sample_rate))?;
        let rir = Rir::new(
            samples,
            fs,
            RirSource::Measured {
                file: e.file.to_string_lossy().into_owned(),
            },
        );
        Ok(extract_features_with(&rir, cfg)?.to_vec())
    });
    let mut ex = Extracted {
        dataset: LabeledDataset::new(cfg.feature_names()),
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for (e, r) in entries.iter().zip(results) {
        match r {
            Ok(f) => {
                ex.rows.push(ManifestRow {
                    row: ex.dataset.len(),
                    source: e.file.clone(),
                });
                ex.dataset.push(sample_of(e, f))?;
            }
            Err(err) if err.is_numerical() => {
                warn!("{}: {err}", e.file.display());
                let skip = SkippedInput {
                    source: e.file.clone(),
                    reason: err.to_string(),
                };
                ex.skipped.push((e.clone(), skip));
            }
            Err(err) => {
                return Err(err).with_context(|| format!("extracting {}", e.file.display()));
            }
        }
    }
    if ex.dataset.is_empty() {
        let reason = ex
            .skipped
            .first()
            .map(|(_, s)| s.reason.clone())
            .unwrap_or_default();
        bail!(roomprint::Error::Degenerate(format!(
            "no fingerprint could be extracted ({reason})"
        )));
    }
    Ok(ex)
}

pub fn extract(s: &Settings, a: &ExtractArgs) -> Result<()> {
    let entries = manifest_entries(&a.inputs)?;
    let ex = extract_entries(&entries, &s.features, s)?;
    let out = s.output(&a.out);
    create_parent(&out)?;
    save_dataset(&ex.dataset, &out)?;
    let manifest = DatasetManifest {
        dataset: out.clone(),
        feature_config: s.features.clone(),
        rows: ex.rows,
        skipped: ex.skipped.into_iter().map(|(_, s)| s).collect(),
    };
    let mpath = match &a.manifest_out {
        Some(p) => s.output(p),
        None => out.with_extension("manifest.json"),
    };
    write_json(&mpath, &manifest)?;
    info!(
        "{} of {} responses fingerprinted into {}",
        manifest.rows.len(),
        entries.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SffsReport {
    selected: Vec<String>,
    indices: Vec<usize>,
    criterion: f64,
    classifier: String,
    folds: usize,
    seed: u64,
    trace: Vec<TraceStep>,
}

#[derive(Serialize, Deserialize)]
struct TraceStep {
    action: StepAction,
    feature: String,
    subset: Vec<String>,
    criterion: f64,
}

fn feature_subset(ds: &LabeledDataset, sel: &FeatureSelection) -> Result<Vec<usize>> {
    let names = match (&sel.features, &sel.features_from) {
        (Some(n), _) => n.clone(),
        (None, Some(p)) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let report: SffsReport = serde_json::from_str(&text)
                .with_context(|| format!("{} is not an sffs report", p.display()))?;
            report.selected
        }
        (None, None) => return Ok((0..ds.n_features()).collect()),
    };
    let mut idx = names
        .iter()
        .map(|n| {
            ds.feature_index(n).ok_or_else(|| {
                usage(format!(
                    "unknown feature {n:?}; the dataset has {}",
                    ds.feature_names.join(",")
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    idx.sort_unstable();
    idx.dedup();
    if idx.is_empty() {
        return Err(usage("empty feature selection"));
    }
    Ok(idx)
}

fn nonempty(ds: LabeledDataset, what: &str) -> Result<LabeledDataset> {
    if ds.is_empty() {
        bail!(roomprint::Error::InsufficientData(format!(
            "{what} selects no rows"
        )));
    }
    Ok(ds)
}

pub fn train(s: &Settings, a: &TrainArgs) -> Result<()> {
    let ds = nonempty(load_dataset(&a.dataset)?.filter(&a.filter), "--filter")?;
    let subset = feature_subset(&ds, &a.selection)?;
    let model = fit(s.classifier, &ds, &subset)?;
    let out = s.output(&a.out);
    write_text(&out, &(model.to_json()? + "\n"))?;
    info!(
        "trained {} on {} rows, {} classes, {} features -> {}",
        s.classifier,
        ds.len(),
        model.classes.len(),
        subset.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    classifier: String,
    folds: usize,
    seed: u64,
    t_window: f64,
    features: Vec<String>,
    n_test: u64,
    accuracy: f64,
    per_class_accuracy: BTreeMap<String, f64>,
    confusion: Vec<Vec<u64>>,
}

#[derive(Serialize)]
struct SweepRow {
    t_window: f64,
    below_max_rt: bool,
    accuracy: f64,
    min_class_accuracy: f64,
    evaluated: u64,
    skipped: u64,
}

#[derive(Serialize)]
struct SweepReport {
    classifier: String,
    folds: usize,
    seed: u64,
    max_rt: Option<f64>,
    windows: Vec<SweepRow>,
}

fn evaluate(s: &Settings, a: &EvalArgs, ds: &LabeledDataset, subset: &[usize]) -> Result<CvReport> {
    let test_mask = ds.mask(&a.test_filter);
    if !test_mask.iter().any(|&m| m) {
        bail!(roomprint::Error::InsufficientData(
            "--test-filter selects no rows".into()
        ));
    }
    if let Some(p) = &a.model {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let model = ClassifierModel::from_json(&text)?;
        if model.feature_names != ds.feature_names {
            bail!(roomprint::Error::InvalidArgument(
                "model and dataset have different feature columns".into()
            ));
        }
        let mut cm = ConfusionMatrix::new(model.classes.clone());
        for (r, _) in ds.rows.iter().zip(&test_mask).filter(|(_, &m)| m) {
            let t = model.classes.binary_search(&r.label).map_err(|_| {
                roomprint::Error::InvalidArgument(format!(
                    "label {} is not a class of the model",
                    r.label
                ))
            })?;
            cm.record(t, model.predict_index(&r.features)?)?;
        }
        return Ok(CvReport::from_confusion(cm));
    }
    let train_mask = ds.mask(&a.train_filter);
    Ok(cross_evaluate(
        ds,
        &train_mask,
        &test_mask,
        s.folds,
        s.classifier,
        subset,
        s.seed,
        s.exec,
    )?)
}

pub fn eval(s: &Settings, a: &EvalArgs) -> Result<()> {
    if let Some(windows) = &a.sweep_window {
        return sweep(s, a, windows);
    }
    let ds = match (&a.dataset, &a.corpus) {
        (Some(p), _) => load_dataset(p)?,
        (None, Some(c)) => extract_entries(&manifest_entries(c)?, &s.features, s)?.dataset,
        (None, None) => return Err(usage("--dataset or --corpus is required")),
    };
    let subset = feature_subset(&ds, &a.selection)?;
    let report = evaluate(s, a, &ds, &subset)?;
    print!("{}", report.confusion.pretty());
    println!("accuracy: {:.4}", report.accuracy);
    if let Some(p) = &a.confusion_out {
        let p = s.output(p);
        create_parent(&p)?;
        let file = std::fs::File::create(&p).with_context(|| format!("writing {}", p.display()))?;
        report.confusion.write_csv(std::io::BufWriter::new(file))?;
    }
    if let Some(p) = &a.report_out {
        let cm = &report.confusion;
        write_json(
            &s.output(p),
            &EvalReport {
                classifier: s.classifier.to_string(),
                folds: s.folds,
                seed: s.seed,
                t_window: s.features.t_window,
                features: subset
                    .iter()
                    .map(|&i| ds.feature_names[i].clone())
                    .collect(),
                n_test: cm.total(),
                accuracy: report.accuracy,
                per_class_accuracy: cm
                    .labels
                    .iter()
                    .cloned()
                    .zip(report.per_class_accuracy.iter().copied())
                    .collect(),
                confusion: cm.counts.clone(),
            },
        )?;
    }
    Ok(())
}

fn sweep(s: &Settings, a: &EvalArgs, windows: &[f64]) -> Result<()> {
    let corpus = a.corpus.as_deref().unwrap_or_default();
    let entries = manifest_entries(corpus)?;
    let max_rt = entries.iter().filter_map(|e| e.max_rt).reduce(f64::max);
    let mut rows = Vec::new();
    println!("t_window  accuracy  min_class  skipped");
    for &w in windows {
        if !(w > 0.0) {
            return Err(usage(format!("window {w} must be positive")));
        }
        let cfg = FeatureConfig {
            t_window: w,
            ..s.features.clone()
        };
        let ex = match extract_entries(&entries, &cfg, s) {
            Ok(ex) => ex,
            Err(e) if crate::exit_code(&e) == 3 => {
                warn!("window {w} s: {}", crate::describe(&e));
                let n = entries
                    .iter()
                    .filter(|e| a.test_filter.matches(&sample_of(e, Vec::new())))
                    .count() as u64;
                rows.push(SweepRow {
                    t_window: w,
                    below_max_rt: max_rt.is_some_and(|m| w < m),
                    accuracy: 0.0,
                    min_class_accuracy: 0.0,
                    evaluated: 0,
                    skipped: n,
                });
                println!("{w:8.3}  {:8.4}  {:9.4}  {n:7}", 0.0, 0.0);
                continue;
            }
            Err(e) => return Err(e),
        };
        let subset = feature_subset(&ex.dataset, &a.selection)?;
        let report = evaluate(s, a, &ex.dataset, &subset)?;
        let cm = &report.confusion;
        // a test row that could not be fingerprinted counts as misclassified
        let mut missed: BTreeMap<&str, u64> = BTreeMap::new();
        for (e, _) in &ex.skipped {
            if a.test_filter.matches(&sample_of(e, Vec::new())) {
                *missed.entry(e.label.as_str()).or_default() += 1;
            }
        }
        let skipped: u64 = missed.values().sum();
        let totals = cm.row_totals();
        let min_class = cm
            .labels
            .iter()
            .enumerate()
            .filter(|(i, l)| totals[*i] + missed.get(l.as_str()).copied().unwrap_or(0) > 0)
            .map(|(i, l)| {
                cm.counts[i][i] as f64
                    / (totals[i] + missed.get(l.as_str()).copied().unwrap_or(0)) as f64
            })
            .fold(f64::INFINITY, f64::min);
        let accuracy = cm.trace() as f64 / (cm.total() + skipped) as f64;
        println!("{w:8.3}  {accuracy:8.4}  {min_class:9.4}  {skipped:7}");
        rows.push(SweepRow {
            t_window: w,
            below_max_rt: max_rt.is_some_and(|m| w < m),
            accuracy,
            min_class_accuracy: min_class,
            evaluated: cm.total(),
            skipped,
        });
    }
    if let Some(p) = &a.report_out {
        write_json(
            &s.output(p),
            &SweepReport {
                classifier: s.classifier.to_string(),
                folds: s.folds,
                seed: s.seed,
                max_rt,
                windows: rows,
            },
        )?;
    }
    Ok(())
}

pub fn sffs(s: &Settings, a: &SffsArgs) -> Result<()> {
    let all = load_dataset(&a.dataset)?;
    let train = nonempty(all.filter(&a.filter), "--filter")?;
    let val = match &a.validation_filter {
        Some(f) => Some(nonempty(all.filter(f), "--validation-filter")?),
        None => None,
    };
    let (classes, y) = train.class_indices();
    let x = train.features();
    let max = a.max_features.unwrap_or(train.n_features());
    let result = sffs_with(train.n_features(), max, s.exec, |subset| {
        let cv = kfold_cv_rows(
            &x,
            &y,
            &classes,
            &train.feature_names,
            s.folds,
            s.classifier,
            subset,
            s.seed,
            roomprint::Exec::Sequential,
        )?
        .error_rate();
        match &val {
            Some(v) => {
                Ok(0.5 * cv + 0.5 * evaluate_split(&train, v, s.classifier, subset)?.error_rate())
            }
            None => Ok(cv),
        }
    })?;
    let name = |i: usize| train.feature_names[i].clone();
    let report = SffsReport {
        selected: result.subset.iter().map(|&i| name(i)).collect(),
        indices: result.subset.clone(),
        criterion: result.criterion,
        classifier: s.classifier.to_string(),
        folds: s.folds,
        seed: s.seed,
        trace: result
            .trace
            .iter()
            .map(|t| TraceStep {
                action: t.action,
                feature: name(t.feature),
                subset: t.subset.iter().map(|&i| name(i)).collect(),
                criterion: t.criterion,
            })
            .collect(),
    };
    write_json(&s.output(&a.out), &report)?;
    println!("selected: {}", report.selected.join(","));
    println!("criterion: {:.4}", report.criterion);
    Ok(())
}

#[derive(Serialize)]
struct FeatureTest {
    feature: String,
    #[serde(flatten)]
    result: PermutationResult,
}

#[derive(Serialize)]
struct PermtestReport {
    n_perm: usize,
    bins: usize,
    seed: u64,
    rows: usize,
    features: Vec<FeatureTest>,
    skipped: BTreeMap<String, String>,
    joint: Option<FeatureTest>,
}

pub fn permtest(s: &Settings, a: &PermtestArgs) -> Result<()> {
    let ds = nonempty(load_dataset(&a.dataset)?.filter(&a.filter), "--filter")?;
    let subset = feature_subset(&ds, &a.selection)?;
    let (_, labels) = ds.class_indices();
    let cfg = PermutationConfig {
        n_perm: a.n_perm,
        bins: a.bins,
        seed: s.seed,
        ..Default::default()
    };
    let columns: Vec<Vec<f64>> = subset.iter().map(|&j| ds.column(j)).collect();
    let mut features = Vec::new();
    let mut skipped = BTreeMap::new();
    let mut usable = Vec::new();
    for (&j, col) in subset.iter().zip(&columns) {
        let name = ds.feature_names[j].clone();
        match permutation_test(col, &labels, &cfg, s.exec) {
            Ok(mut r) => {
                r.permuted_js.clear();
                println!("{name:>14}  JS {:.4}  p {:.4}", r.observed_js, r.p_value);
                features.push(FeatureTest {
                    feature: name,
                    result: r,
                });
                usable.push(col.as_slice());
            }
            Err(e @ roomprint::Error::Degenerate(_)) => {
                warn!("{name}: {e}");
                skipped.insert(name, e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
    }
    let joint = if usable.is_empty() {
        None
    } else {
        let mut r = joint_permutation_test(&usable, &labels, &cfg, s.exec)?;
        r.permuted_js.clear();
        println!(
            "{:>14}  JS {:.4}  p {:.4}",
            "joint", r.observed_js, r.p_value
        );
        Some(FeatureTest {
            feature: "joint".into(),
            result: r,
        })
    };
    write_json(
        &s.output(&a.out),
        &PermtestReport {
            n_perm: cfg.n_perm,
            bins: cfg.bins,
            seed: cfg.seed,
            rows: ds.len(),
            features,
            skipped,
            joint,
        },
    )?;
    Ok(())
}
