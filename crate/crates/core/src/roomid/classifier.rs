use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Normalization};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn {
        k: usize,
    },
    #[default]
    GaussianNb,
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    /// `gaussian_nb`, `knn` (k = 5) or `knn:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian_nb" | "gnb" => Ok(ClassifierKind::GaussianNb),
            "knn" => Ok(ClassifierKind::Knn { k: 5 }),
            other => match other.strip_prefix("knn:").map(str::parse::<usize>) {
                Some(Ok(k)) if k > 0 => Ok(ClassifierKind::Knn { k }),
                _ => Err(Error::invalid(format!("unknown classifier {other:?}"))),
            },
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassifierKind::GaussianNb => f.write_str("gaussian_nb"),
            ClassifierKind::Knn { k } => write!(f, "knn:{k}"),
        }
    }
}

/// Relative variance floor for naive Bayes, scaled by the largest feature
/// variance.
pub const VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted {
    Knn {
        k: usize,
        train: Vec<Vec<f64>>,
        labels: Vec<usize>,
    },
    GaussianNb {
        means: Vec<Vec<f64>>,
        vars: Vec<Vec<f64>>,
        log_priors: Vec<f64>,
    },
}

/// A fitted classifier. Inputs are full feature rows; the model picks its
/// subset and applies the z-scoring fitted on its training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    pub feature_subset: Vec<usize>,
    pub normalization: Normalization,
    pub fitted: Fitted,
}

fn check_subset(subset: &[usize], n_features: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::invalid("empty feature subset"));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= n_features) {
        return Err(Error::invalid(format!(
            "feature index {bad} out of {n_features}"
        )));
    }
    Ok(())
}

/// Fits on rows `x` with class indices `y` into `classes`.
pub fn fit_rows(
    kind: ClassifierKind,
    x: &[&[f64]],
    y: &[usize],
    classes: &[String],
    feature_names: &[String],
    subset: &[usize],
) -> Result<ClassifierModel> {
    check_subset(subset, feature_names.len())?;
    if x.len() != y.len() {
        return Err(Error::invalid("rows and labels differ in length"));
    }
    if let Some(r) = x.iter().find(|r| r.len() != feature_names.len()) {
        return Err(Error::invalid(format!(
            "row of {} features, expected {}",
            r.len(),
            feature_names.len()
        )));
    }
    let mut counts = vec![0usize; classes.len()];
    for &c in y {
        *counts.get_mut(c).ok_or_else(|| {
            Error::invalid(format!("class index {c} out of {}", classes.len()))
        })? += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::InsufficientData(format!(
            "no training rows for class {}",
            classes[c]
        )));
    }
    let picked: Vec<Vec<f64>> = x
        .iter()
        .map(|r| subset.iter().map(|&j| r[j]).collect())
        .collect();
    let normalization = Normalization::fit(&picked)?;
    let z: Vec<Vec<f64>> = picked.iter().map(|r| normalization.apply_row(r)).collect();
    let d = subset.len();
    let fitted = match kind {
        ClassifierKind::Knn { k } => {
            if k == 0 {
                return Err(Error::invalid("knn needs k >= 1"));
            }
            Fitted::Knn {
                k,
                train: z,
                labels: y.to_vec(),
            }
        }
        ClassifierKind::GaussianNb => {
            let nc = classes.len();
            let mut means = vec![vec![0.0; d]; nc];
            for (r, &c) in z.iter().zip(y) {
                means[c].iter_mut().zip(r).for_each(|(m, v)| *m += v);
            }
            for (m, &n) in means.iter_mut().zip(&counts) {
                m.iter_mut().for_each(|v| *v /= n as f64);
            }
            let mut vars = vec![vec![0.0; d]; nc];
            for (r, &c) in z.iter().zip(y) {
                for j in 0..d {
                    vars[c][j] += (r[j] - means[c][j]).powi(2);
                }
            }
            let total_var = (0..d)
                .map(|j| {
                    let mu = z.iter().map(|r| r[j]).sum::<f64>() / z.len() as f64;
                    z.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / z.len() as f64
                })
                .fold(0.0, f64::max);
            let eps = VAR_SMOOTHING * total_var.max(f64::MIN_POSITIVE);
            for (v, &n) in vars.iter_mut().zip(&counts) {
                v.iter_mut().for_each(|s| *s = *s / n as f64 + eps);
            }
            let total = y.len() as f64;
            Fitted::GaussianNb {
                means,
                vars,
                log_priors: counts.iter().map(|&n| (n as f64 / total).ln()).collect(),
            }
        }
    };
    Ok(ClassifierModel {
        classes: classes.to_vec(),
        feature_names: feature_names.to_vec(),
        feature_subset: subset.to_vec(),
        normalization,
        fitted,
    })
}

/// Fits on every row of `ds`.
pub fn fit(kind: ClassifierKind, ds: &LabeledDataset, subset: &[usize]) -> Result<ClassifierModel> {
    let (classes, y) = ds.class_indices();
    fit_rows(
        kind,
        &ds.features(),
        &y,
        &classes,
        &ds.feature_names,
        subset,
    )
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self.fitted {
            Fitted::Knn { k, .. } => ClassifierKind::Knn { k },
            Fitted::GaussianNb { .. } => ClassifierKind::GaussianNb,
        }
    }

    /// Class index for a full feature row.
    pub fn predict_index(&self, features: &[f64]) -> Result<usize> {
        if features.len() != self.feature_names.len() {
            return Err(Error::invalid(format!(
                "query has {} features, model expects {}",
                features.len(),
                self.feature_names.len()
            )));
        }
        let picked: Vec<f64> = self.feature_subset.iter().map(|&j| features[j]).collect();
        let q = self.normalization.apply_row(&picked);
        Ok(match &self.fitted {
            Fitted::Knn { k, train, labels } => knn_vote(&q, train, labels, *k, self.classes.len()),
            Fitted::GaussianNb {
                means,
                vars,
                log_priors,
            } => {
                let mut best = (0, f64::NEG_INFINITY);
                for c in 0..means.len() {
                    let ll = log_priors[c]
                        + q.iter()
                            .zip(means[c].iter().zip(&vars[c]))
                            .map(|(x, (m, v))| {
                                -0.5 * ((std::f64::consts::TAU * v).ln() + (x - m).powi(2) / v)
                            })
                            .sum::<f64>();
                    if ll > best.1 {
                        best = (c, ll);
                    }
                }
                best.0
            }
        })
    }

    pub fn predict(&self, features: &[f64]) -> Result<&str> {
        Ok(&self.classes[self.predict_index(features)?])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ClassifierModel = serde_json::from_str(s)?;
        check_subset(&m.feature_subset, m.feature_names.len())?;
        if m.normalization.len() != m.feature_subset.len() {
            return Err(Error::invalid(
                "normalization does not match the feature subset",
            ));
        }
        Ok(m)
    }
}

fn knn_vote(q: &[f64], train: &[Vec<f64>], labels: &[usize], k: usize, n_classes: usize) -> usize {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| {
            (
                r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
                i,
            )
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    let mut dist = vec![0.0; n_classes];
    for &(d2, i) in d.iter().take(k) {
        votes[labels[i]] += 1;
        dist[labels[i]] += d2.sqrt();
    }
    let mut best = 0;
    for c in 1..n_classes {
        let mean = |c: usize| dist[c] / votes[c] as f64;
        if votes[c] > votes[best]
            || (votes[c] == votes[best] && votes[c] > 0 && mean(c) < mean(best))
        {
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn nb_picks_the_closer_class() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..50 {
            let t = (i as f64 / 49.0 - 0.5) * 2.0;
            x.push(vec![t]);
            y.push(0);
            x.push(vec![10.0 + t]);
            y.push(1);
        }
        let rows: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
        let classes = vec!["low".to_string(), "high".to_string()];
        let m = fit_rows(
            ClassifierKind::GaussianNb,
            &rows,
            &y,
            &classes,
            &names(1),
            &[0],
        )
        .unwrap();
        assert_eq!(m.predict(&[9.0]).unwrap(), "high");
        assert_eq!(m.predict(&[1.0]).unwrap(), "low");
    }

    #[test]
    fn one_nn_returns_training_label() {
        let x = [
            vec![0.0, 1.0],
            vec![2.0, 0.5],
            vec![4.0, 3.0],
            vec![1.0, 7.0],
        ];
        let y = [0, 1, 0, 1];
        let rows: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
        let classes = vec!["a".to_string(), "b".to_string()];
        let m = fit_rows(
            ClassifierKind::Knn { k: 1 },
            &rows,
            &y,
            &classes,
            &names(2),
            &[0, 1],
        )
        .unwrap();
        for (r, &c) in x.iter().zip(&y) {
            assert_eq!(m.predict_index(r).unwrap(), c);
        }
    }

    #[test]
    fn knn_tie_goes_to_smaller_mean_distance() {
        let train = vec![vec![1.0], vec![-3.0]];
        assert_eq!(knn_vote(&[0.0], &train, &[1, 0], 2, 2), 1);
        assert_eq!(knn_vote(&[-1.5], &train, &[1, 0], 2, 2), 0);
        assert_eq!(knn_vote(&[-1.0], &train, &[1, 0], 2, 2), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = [vec![0.0], vec![1.0]];
        let rows: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
        let classes = vec!["a".to_string(), "b".to_string()];
        let kind = ClassifierKind::GaussianNb;
        assert!(fit_rows(kind, &rows, &[0, 0], &classes, &names(1), &[0]).is_err());
        assert!(fit_rows(kind, &rows, &[0, 1], &classes, &names(1), &[]).is_err());
        assert!(fit_rows(kind, &rows, &[0, 1], &classes, &names(1), &[1]).is_err());
        let m = fit_rows(kind, &rows, &[0, 1], &classes, &names(1), &[0]).unwrap();
        assert!(m.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = [
            vec![0.0, 5.0],
            vec![1.0, 4.0],
            vec![5.0, 0.0],
            vec![6.0, 1.0],
        ];
        let rows: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
        let classes = vec!["a".to_string(), "b".to_string()];
        for kind in [ClassifierKind::GaussianNb, ClassifierKind::Knn { k: 3 }] {
            let m = fit_rows(kind, &rows, &[0, 0, 1, 1], &classes, &names(2), &[1, 0]).unwrap();
            let back = ClassifierModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.kind(), kind);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "knn:3".parse::<ClassifierKind>().unwrap(),
            ClassifierKind::Knn { k: 3 }
        );
        assert_eq!(
            "knn".parse::<ClassifierKind>().unwrap(),
            ClassifierKind::Knn { k: 5 }
        );
        assert!("svm".parse::<ClassifierKind>().is_err());
        assert!("knn:0".parse::<ClassifierKind>().is_err());
    }
}
