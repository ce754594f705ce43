use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::divergence::{bin_index, js_raw, shared_edges};
use crate::error::{Error, Result};
use crate::par::{map_range, Exec};
use crate::synth::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PermutationConfig {
    pub n_perm: usize,
    pub bins: usize,
    /// Pseudo-count added to every histogram bin.
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig {
            n_perm: 4999,
            bins: 32,
            smoothing: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl NullSummary {
    fn of(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        NullSummary {
            mean,
            std: (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt(),
            min: x.iter().copied().fold(f64::INFINITY, f64::min),
            max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed_js: f64,
    pub p_value: f64,
    pub n_perm: usize,
    pub null_summary: NullSummary,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub permuted_js: Vec<f64>,
}

impl PermutationResult {
    /// True when the observed statistic exceeds the null mean by more than
    /// `sigmas` null standard deviations.
    pub fn exceeds_null(&self, sigmas: f64) -> bool {
        self.observed_js > self.null_summary.mean + sigmas * self.null_summary.std
    }
}

/// Binned feature columns with class labels, ready for relabeling.
struct Binned {
    bins: usize,
    n_classes: usize,
    /// Per feature, the bin of every row.
    columns: Vec<Vec<usize>>,
    weights: Vec<f64>,
    smoothing: f64,
}

impl Binned {
    fn new(columns: &[&[f64]], labels: &[usize], cfg: &PermutationConfig) -> Result<Self> {
        if cfg.n_perm == 0 {
            return Err(Error::invalid("n_perm must be at least 1"));
        }
        if !(cfg.smoothing >= 0.0) {
            return Err(Error::invalid("smoothing must be non-negative"));
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0usize; n_classes];
        labels.iter().for_each(|&c| counts[c] += 1);
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::invalid(
                "permutation test needs at least two classes",
            ));
        }
        let mut binned = Vec::with_capacity(columns.len());
        for col in columns {
            if col.len() != labels.len() {
                return Err(Error::invalid("feature column and labels differ in length"));
            }
            let edges = shared_edges(col, cfg.bins)?;
            binned.push(col.iter().map(|&v| bin_index(&edges, v)).collect());
        }
        let n = labels.len() as f64;
        Ok(Binned {
            bins: cfg.bins,
            n_classes,
            columns: binned,
            weights: counts.iter().map(|&c| c as f64 / n).collect(),
            smoothing: cfg.smoothing,
        })
    }

    /// Mean over features of the JS divergence of the class histograms.
    fn statistic(&self, labels: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut hist = vec![vec![0.0; self.bins]; self.n_classes];
        for col in &self.columns {
            hist.iter_mut()
                .for_each(|h| h.iter_mut().for_each(|v| *v = 0.0));
            for (&b, &c) in col.iter().zip(labels) {
                hist[c][b] += 1.0;
            }
            let probs: Vec<Vec<f64>> = hist
                .iter()
                .map(|h| {
                    let t: f64 = h.iter().map(|v| v + self.smoothing).sum();
                    h.iter().map(|v| (v + self.smoothing) / t).collect()
                })
                .collect();
            total += js_raw(&probs, &self.weights);
        }
        total / self.columns.len() as f64
    }
}

fn run(
    columns: &[&[f64]],
    labels: &[usize],
    cfg: &PermutationConfig,
    exec: Exec,
) -> Result<PermutationResult> {
    let binned = Binned::new(columns, labels, cfg)?;
    let observed = binned.statistic(labels);
    let permuted = map_range(exec, cfg.n_perm, |r| {
        let mut shuffled = labels.to_vec();
        shuffled.shuffle(&mut rng(cfg.seed, r as u64 + 1));
        binned.statistic(&shuffled)
    });
    let extreme = permuted.iter().filter(|&&v| v >= observed).count();
    Ok(PermutationResult {
        observed_js: observed,
        p_value: (1 + extreme) as f64 / (1 + cfg.n_perm) as f64,
        n_perm: cfg.n_perm,
        null_summary: NullSummary::of(&permuted),
        permuted_js: permuted,
    })
}

/// Tests whether one feature's class-conditional distributions differ more
/// than under random relabeling.
pub fn permutation_test(
    feature: &[f64],
    labels: &[usize],
    cfg: &PermutationConfig,
    exec: Exec,
) -> Result<PermutationResult> {
    run(&[feature], labels, cfg, exec)
}

/// Joint test on the mean JS divergence over several features, with the
/// same relabeling applied to every feature.
pub fn joint_permutation_test(
    columns: &[&[f64]],
    labels: &[usize],
    cfg: &PermutationConfig,
    exec: Exec,
) -> Result<PermutationResult> {
    if columns.is_empty() {
        return Err(Error::invalid("no feature columns"));
    }
    run(columns, labels, cfg, exec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_bounds() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let cfg = PermutationConfig {
            n_perm: 99,
            ..Default::default()
        };
        let r = permutation_test(&x, &y, &cfg, Exec::Sequential).unwrap();
        assert!((r.p_value - 0.01).abs() < 1e-15);
        assert_eq!(r.permuted_js.len(), 99);
        let par = permutation_test(&x, &y, &cfg, Exec::Parallel).unwrap();
        assert_eq!(par, r);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let cfg = PermutationConfig::default();
        assert!(permutation_test(&[1.0, 2.0], &[0, 0], &cfg, Exec::Sequential).is_err());
        assert!(matches!(
            permutation_test(&[1.0, 1.0], &[0, 1], &cfg, Exec::Sequential),
            Err(Error::Degenerate(_))
        ));
    }
}
