use serde::{Deserialize, Serialize};

use super::classifier::ClassifierKind;
use super::cv::kfold_cv_rows;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::par::{map_slice, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SffsStep {
    pub action: StepAction,
    pub feature: usize,
    pub subset: Vec<usize>,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SffsResult {
    /// Selected features in ascending index order.
    pub subset: Vec<usize>,
    pub criterion: f64,
    pub trace: Vec<SffsStep>,
}

fn best_of(
    candidates: &[(usize, Vec<usize>)],
    scores: Vec<Result<f64>>,
) -> Result<Option<(usize, Vec<usize>, f64)>> {
    let mut best: Option<(usize, Vec<usize>, f64)> = None;
    for ((f, s), score) in candidates.iter().zip(scores) {
        let score = score?;
        if score.is_nan() {
            return Err(Error::Degenerate(format!(
                "criterion is NaN for subset {s:?}"
            )));
        }
        if best.as_ref().is_none_or(|b| score < b.2) {
            best = Some((*f, s.clone(), score));
        }
    }
    Ok(best)
}

/// Sequential floating forward selection minimizing `criterion`.
///
/// Every accepted step strictly lowers the criterion, so the search cannot
/// cycle. Ties go to the lower feature index.
pub fn sffs_with<F>(
    n_features: usize,
    max_features: usize,
    exec: Exec,
    criterion: F,
) -> Result<SffsResult>
where
    F: Fn(&[usize]) -> Result<f64> + Sync + Send,
{
    if n_features < 2 {
        return Err(Error::invalid(format!(
            "SFFS needs at least 2 features, got {n_features}"
        )));
    }
    if max_features == 0 {
        return Err(Error::invalid("max_features must be at least 1"));
    }
    let limit = max_features.min(n_features);
    let mut current: Vec<usize> = Vec::new();
    let mut value = f64::INFINITY;
    let mut trace = Vec::new();
    let eval = |cands: &[(usize, Vec<usize>)]| map_slice(exec, cands, |(_, s)| criterion(s));

    while current.len() < limit {
        let adds: Vec<(usize, Vec<usize>)> = (0..n_features)
            .filter(|f| !current.contains(f))
            .map(|f| {
                let mut s = current.clone();
                s.push(f);
                s.sort_unstable();
                (f, s)
            })
            .collect();
        let Some((f, s, v)) = best_of(&adds, eval(&adds))? else {
            break;
        };
        if !(v < value) {
            break;
        }
        current = s;
        value = v;
        trace.push(SffsStep {
            action: StepAction::Add,
            feature: f,
            subset: current.clone(),
            criterion: v,
        });
        log::debug!("sffs add {f}: {v:.4} {current:?}");

        while current.len() > 2 {
            let removes: Vec<(usize, Vec<usize>)> = current
                .iter()
                .map(|&f| (f, current.iter().copied().filter(|&g| g != f).collect()))
                .collect();
            let Some((f, s, v)) = best_of(&removes, eval(&removes))? else {
                break;
            };
            if !(v < value) {
                break;
            }
            current = s;
            value = v;
            trace.push(SffsStep {
                action: StepAction::Remove,
                feature: f,
                subset: current.clone(),
                criterion: v,
            });
            log::debug!("sffs remove {f}: {v:.4} {current:?}");
        }
    }
    Ok(SffsResult {
        subset: current,
        criterion: value,
        trace,
    })
}

/// SFFS with the cross-validated misclassification rate of `kind` as the
/// criterion; every subset is scored on the same folds.
pub fn sffs(
    ds: &LabeledDataset,
    kind: ClassifierKind,
    k_folds: usize,
    seed: u64,
    max_features: usize,
    exec: Exec,
) -> Result<SffsResult> {
    let (classes, y) = ds.class_indices();
    let x = ds.features();
    sffs_with(ds.n_features(), max_features, exec, |s| {
        Ok(kfold_cv_rows(
            &x,
            &y,
            &classes,
            &ds.feature_names,
            k_folds,
            kind,
            s,
            seed,
            Exec::Sequential,
        )?
        .error_rate())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floating_step_removes_a_redundant_feature() {
        // {2} alone is decent, {0,1} together is best, {0,1,2} is worse.
        let score = |s: &[usize]| -> Result<f64> {
            Ok(match s {
                [2] => 0.3,
                [0] | [1] => 0.4,
                [0, 2] | [1, 2] => 0.2,
                [0, 1] => 0.05,
                [0, 1, 2] => 0.1,
                _ => 0.9,
            })
        };
        let r = sffs_with(4, 4, Exec::Sequential, score).unwrap();
        assert_eq!(r.subset, vec![0, 1]);
        assert_eq!(r.criterion, 0.05);
        let actions: Vec<_> = r.trace.iter().map(|t| (t.action, t.feature)).collect();
        assert_eq!(
            actions,
            vec![
                (StepAction::Add, 2),
                (StepAction::Add, 0),
                (StepAction::Add, 1),
                (StepAction::Remove, 2)
            ]
        );
        for w in r.trace.windows(2) {
            assert!(w[1].criterion < w[0].criterion);
        }
    }

    #[test]
    fn max_one_feature_is_best_single() {
        let r = sffs_with(5, 1, Exec::Sequential, |s| Ok((s[0] as f64 - 3.0).abs())).unwrap();
        assert_eq!(r.subset, vec![3]);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn ties_prefer_low_index() {
        let r = sffs_with(4, 4, Exec::Sequential, |_| Ok(0.5)).unwrap();
        assert_eq!(r.subset, vec![0]);
    }

    #[test]
    fn needs_two_features() {
        assert!(sffs_with(1, 1, Exec::Sequential, |_| Ok(0.0)).is_err());
    }
}
