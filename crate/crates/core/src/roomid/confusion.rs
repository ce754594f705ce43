use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_pairs(
        labels: Vec<String>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut m = ConfusionMatrix::new(labels);
        for (t, p) in pairs {
            m.record(t, p)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let n = self.labels.len();
        if truth >= n || predicted >= n {
            return Err(Error::invalid(format!("class index outside {n} labels")));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.labels != self.labels {
            return Err(Error::invalid("confusion matrices over different labels"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Diagonal over row total; NaN for classes with no test rows.
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.row_totals()
            .iter()
            .enumerate()
            .map(|(i, &t)| self.counts[i][i] as f64 / t as f64)
            .collect()
    }

    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|r| {
                let t: u64 = r.iter().sum();
                r.iter().map(|&c| 100.0 * c as f64 / t as f64).collect()
            })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<confusion>", e))?;
        Ok(())
    }

    /// Counts with row-normalized percentages and per-class accuracy.
    pub fn pretty(&self) -> String {
        let width = self
            .labels
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(6);
        let mut s = String::new();
        let _ = write!(s, "{:>width$} |", "");
        for l in &self.labels {
            let _ = write!(s, " {:>width$}", l);
        }
        let _ = writeln!(s, " | acc");
        let pct = self.row_percentages();
        for (i, l) in self.labels.iter().enumerate() {
            let _ = write!(s, "{:>width$} |", l);
            for j in 0..self.labels.len() {
                let cell = format!("{} ({:.0}%)", self.counts[i][j], pct[i][j]);
                let _ = write!(s, " {:>width$}", cell);
            }
            let _ = writeln!(s, " | {:.1}%", 100.0 * self.per_class_accuracy()[i]);
        }
        let _ = writeln!(
            s,
            "overall accuracy {:.2}% ({} / {})",
            100.0 * self.accuracy(),
            self.trace(),
            self.total()
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig10_diagonal_gives_978() {
        let diag = [98u64, 97, 100, 93, 100, 99, 94, 99, 98, 100];
        let labels: Vec<String> = (0..10).map(|i| format!("r{i}")).collect();
        let mut m = ConfusionMatrix::new(labels);
        for (i, &d) in diag.iter().enumerate() {
            m.counts[i][i] = d;
            m.counts[i][(i + 1) % 10] = 100 - d;
        }
        assert!((m.accuracy() - 0.978).abs() < 1e-12);
        assert_eq!(m.row_totals(), vec![100; 10]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
        assert!(m.pretty().contains("97.80%"));
    }
}
