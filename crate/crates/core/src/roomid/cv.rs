use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::classifier::{fit_rows, ClassifierKind};
use super::confusion::ConfusionMatrix;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::par::{map_range, Exec};
use crate::synth::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
}

impl CvReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        CvReport {
            accuracy: confusion.accuracy(),
            per_class_accuracy: confusion.per_class_accuracy(),
            confusion,
        }
    }

    pub fn error_rate(&self) -> f64 {
        1.0 - self.accuracy
    }
}

/// Fold index per row; each class is shuffled under `seed` and dealt
/// round-robin so fold sizes differ by at most one.
pub fn stratified_folds(y: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut members = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        members[c].push(i);
    }
    if let Some((c, m)) = members.iter().enumerate().find(|(_, m)| m.len() < k) {
        return Err(Error::invalid(format!(
            "class {c} has {} rows, fewer than {k} folds",
            m.len()
        )));
    }
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for (c, m) in members.iter_mut().enumerate() {
        m.shuffle(&mut rng(seed, c as u64));
        for &i in m.iter() {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

/// Cross-validation over raw rows.
#[allow(clippy::too_many_arguments)]
pub fn kfold_cv_rows(
    x: &[&[f64]],
    y: &[usize],
    classes: &[String],
    feature_names: &[String],
    k: usize,
    kind: ClassifierKind,
    subset: &[usize],
    seed: u64,
    exec: Exec,
) -> Result<CvReport> {
    let folds = stratified_folds(y, classes.len(), k, seed)?;
    let per_fold = map_range(exec, k, |f| -> Result<Vec<(usize, usize)>> {
        let (mut tx, mut ty) = (Vec::new(), Vec::new());
        for i in (0..x.len()).filter(|&i| folds[i] != f) {
            tx.push(x[i]);
            ty.push(y[i]);
        }
        let model = fit_rows(kind, &tx, &ty, classes, feature_names, subset)?;
        (0..x.len())
            .filter(|&i| folds[i] == f)
            .map(|i| Ok((y[i], model.predict_index(x[i])?)))
            .collect()
    });
    let mut cm = ConfusionMatrix::new(classes.to_vec());
    for pairs in per_fold {
        for (t, p) in pairs? {
            cm.record(t, p)?;
        }
    }
    Ok(CvReport::from_confusion(cm))
}

/// Stratified, seeded k-fold cross-validation of `kind` on `ds`.
pub fn kfold_cv(
    ds: &LabeledDataset,
    k: usize,
    kind: ClassifierKind,
    subset: &[usize],
    seed: u64,
    exec: Exec,
) -> Result<CvReport> {
    let (classes, y) = ds.class_indices();
    kfold_cv_rows(
        &ds.features(),
        &y,
        &classes,
        &ds.feature_names,
        k,
        kind,
        subset,
        seed,
        exec,
    )
}

/// Trains on every row of `train`, predicts every row of `test`.
pub fn evaluate_split(
    train: &LabeledDataset,
    test: &LabeledDataset,
    kind: ClassifierKind,
    subset: &[usize],
) -> Result<CvReport> {
    if train.feature_names != test.feature_names {
        return Err(Error::invalid(
            "train and test have different feature columns",
        ));
    }
    let (classes, y) = train.class_indices();
    let model = fit_rows(
        kind,
        &train.features(),
        &y,
        &classes,
        &train.feature_names,
        subset,
    )?;
    let mut cm = ConfusionMatrix::new(classes.clone());
    for r in &test.rows {
        let t = classes.binary_search(&r.label).map_err(|_| {
            Error::invalid(format!("test label {} never seen in training", r.label))
        })?;
        cm.record(t, model.predict_index(&r.features)?)?;
    }
    Ok(CvReport::from_confusion(cm))
}

/// Train on rows where `train_mask`, test on rows where `test_mask`.
///
/// Disjoint masks fit once. Overlapping masks fall back to stratified
/// k-fold over the union: each test row is predicted by a model that never
/// saw its fold.
#[allow(clippy::too_many_arguments)]
pub fn cross_evaluate(
    ds: &LabeledDataset,
    train_mask: &[bool],
    test_mask: &[bool],
    k: usize,
    kind: ClassifierKind,
    subset: &[usize],
    seed: u64,
    exec: Exec,
) -> Result<CvReport> {
    if train_mask.len() != ds.len() || test_mask.len() != ds.len() {
        return Err(Error::invalid("row masks do not match the dataset"));
    }
    let pick = |m: &[bool]| (0..ds.len()).filter(|&i| m[i]).collect::<Vec<_>>();
    let (tr, te) = (pick(train_mask), pick(test_mask));
    if tr.is_empty() || te.is_empty() {
        return Err(Error::InsufficientData(
            "empty train or test selection".into(),
        ));
    }
    if !tr.iter().any(|&i| test_mask[i]) {
        return evaluate_split(&ds.select(&tr), &ds.select(&te), kind, subset);
    }
    let union: Vec<usize> = (0..ds.len())
        .filter(|&i| train_mask[i] || test_mask[i])
        .collect();
    let sub = ds.select(&union);
    let (classes, y) = sub.class_indices();
    let folds = stratified_folds(&y, classes.len(), k, seed)?;
    let x = sub.features();
    let per_fold = map_range(exec, k, |f| -> Result<Vec<(usize, usize)>> {
        let (mut tx, mut ty) = (Vec::new(), Vec::new());
        for (j, &i) in union.iter().enumerate() {
            if folds[j] != f && train_mask[i] {
                tx.push(x[j]);
                ty.push(y[j]);
            }
        }
        let model = fit_rows(kind, &tx, &ty, &classes, &sub.feature_names, subset)?;
        union
            .iter()
            .enumerate()
            .filter(|&(j, &i)| folds[j] == f && test_mask[i])
            .map(|(j, _)| Ok((y[j], model.predict_index(x[j])?)))
            .collect()
    });
    let mut cm = ConfusionMatrix::new(classes);
    for pairs in per_fold {
        for (t, p) in pairs? {
            cm.record(t, p)?;
        }
    }
    Ok(CvReport::from_confusion(cm))
}
