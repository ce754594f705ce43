use crate::error::{Error, Result};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Fourth standardised moment with population (biased) moments.
pub fn population_kurtosis(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::Degenerate(format!("kurtosis of {} values", x.len())));
    }
    let mu = mean(x);
    let (m2, m4) = x.iter().fold((0.0, 0.0), |(m2, m4), v| {
        let d = v - mu;
        let d2 = d * d;
        (m2 + d2, m4 + d2 * d2)
    });
    let n = x.len() as f64;
    let (m2, m4) = (m2 / n, m4 / n);
    // variance at rounding level of the data counts as zero
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m2 <= (1e-12 * scale).powi(2) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok(m4 / (m2 * m2))
}

/// `sqrt(E[x^2] - E[x]^2)`, evaluated about the mean.
pub fn population_std(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Degenerate("standard deviation of no values".into()));
    }
    let mu = mean(x);
    Ok((x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.len() as f64).sqrt())
}
