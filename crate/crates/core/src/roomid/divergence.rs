use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities over shared bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub bin_edges: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(bin_edges: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if bin_edges.len() != probabilities.len() + 1 {
            return Err(Error::invalid(format!(
                "{} edges for {} bins",
                bin_edges.len(),
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("negative or NaN probability"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(DiscreteDistribution {
            bin_edges,
            probabilities,
        })
    }

    /// Normalizes histogram counts after adding `smoothing` to every bin.
    pub fn from_counts(bin_edges: Vec<f64>, counts: &[f64], smoothing: f64) -> Result<Self> {
        let total: f64 = counts.iter().map(|c| c + smoothing).sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("histogram with no mass".into()));
        }
        DiscreteDistribution::new(
            bin_edges,
            counts.iter().map(|c| (c + smoothing) / total).collect(),
        )
    }
}

/// `bins` equal-width bins spanning `[min, max]` of the values.
pub fn shared_edges(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Degenerate(format!(
            "feature range [{lo}, {hi}] has zero width"
        )));
    }
    let w = (hi - lo) / bins as f64;
    Ok((0..=bins)
        .map(|i| if i == bins { hi } else { lo + w * i as f64 })
        .collect())
}

/// Bin of `v`; values outside the edges go to the end bins.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    let lo = edges[0];
    let w = (edges[bins] - lo) / bins as f64;
    (((v - lo) / w).floor().max(0.0) as usize).min(bins - 1)
}

fn check_edges(a: &DiscreteDistribution, b: &DiscreteDistribution) -> Result<()> {
    if a.bin_edges != b.bin_edges {
        return Err(Error::invalid("distributions over different bins"));
    }
    Ok(())
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&p, &q)| {
            if p == 0.0 {
                0.0
            } else if q == 0.0 {
                f64::INFINITY
            } else {
                p * (p / q).ln()
            }
        })
        .sum()
}

/// `KL(P ‖ Q)` in nats; `+inf` when `P` has mass where `Q` has none.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_edges(p, q)?;
    Ok(kl_raw(&p.probabilities, &q.probabilities))
}

pub(crate) fn js_raw(dists: &[Vec<f64>], weights: &[f64]) -> f64 {
    let bins = dists[0].len();
    let mut mix = vec![0.0; bins];
    for (d, &w) in dists.iter().zip(weights) {
        mix.iter_mut().zip(d).for_each(|(m, p)| *m += w * p);
    }
    dists
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(d, &w)| w * kl_raw(d, &mix))
        .sum::<f64>()
        .max(0.0)
}

/// Weighted Jensen-Shannon divergence `Σ π_i KL(P_i ‖ Σ π_j P_j)`, in nats.
pub fn js_divergence(dists: &[DiscreteDistribution], weights: &[f64]) -> Result<f64> {
    if dists.is_empty() || dists.len() != weights.len() {
        return Err(Error::invalid("need one weight per distribution"));
    }
    for d in &dists[1..] {
        check_edges(&dists[0], d)?;
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("weights must be non-negative and sum to 1"));
    }
    let p: Vec<Vec<f64>> = dists.iter().map(|d| d.probabilities.clone()).collect();
    Ok(js_raw(&p, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> DiscreteDistribution {
        let edges = (0..=p.len()).map(|i| i as f64).collect();
        DiscreteDistribution::new(edges, p.to_vec()).unwrap()
    }

    #[test]
    fn kl_identity_and_infinity() {
        let p = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let q = dist(&[0.0, 0.5, 0.5]);
        assert_eq!(kl_divergence(&p, &q).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&q, &p).unwrap().is_finite());
    }

    #[test]
    fn disjoint_js_is_ln2() {
        let js = js_divergence(&[dist(&[1.0, 0.0]), dist(&[0.0, 1.0])], &[0.5, 0.5]).unwrap();
        assert!((js - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn identical_js_is_zero() {
        let p = dist(&[0.1, 0.6, 0.3]);
        let js = js_divergence(&[p.clone(), p.clone(), p], &[0.2, 0.5, 0.3]).unwrap();
        assert!(js.abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5]).is_err());
        let a = dist(&[0.5, 0.5]);
        let b = DiscreteDistribution::new(vec![0.0, 2.0, 4.0], vec![0.5, 0.5]).unwrap();
        assert!(kl_divergence(&a, &b).is_err());
        assert!(js_divergence(&[a.clone(), a], &[0.7, 0.7]).is_err());
        assert!(matches!(
            shared_edges(&[1.0, 1.0], 4),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn binning_covers_range() {
        let e = shared_edges(&[0.0, 10.0, 3.0], 5).unwrap();
        assert_eq!(e.len(), 6);
        assert_eq!(bin_index(&e, 0.0), 0);
        assert_eq!(bin_index(&e, 10.0), 4);
        assert_eq!(bin_index(&e, 3.9), 1);
    }
}
