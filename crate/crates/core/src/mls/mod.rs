//! Maximum-length-sequence excitation, period averaging and deconvolution.

mod deconv;
mod hadamard;
mod measure;

pub use deconv::{deconvolve, DeconvPath, Deconvolver};
pub use hadamard::fwht_in_place;
pub use measure::{average_periods, excitation_duration, MeasurementConfig, Recording};

use crate::error::{Error, Result};

pub const MIN_ORDER: u32 = 2;
pub const MAX_ORDER: u32 = 20;

/// Feedback taps (1-based delays, order included) of one primitive
/// polynomial per register length.
const TAPS: [&[u32]; 19] = [
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 6, 4, 1],
    &[13, 4, 3, 1],
    &[14, 5, 3, 1],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 6, 2, 1],
    &[20, 17],
];

/// One period of a binary maximum-length sequence.
///
/// Bits follow the recurrence `a[k+n] = XOR_t a[k+n-t]` over the tap set,
/// starting from an all-ones register. Bit 1 renders as +1, bit 0 as -1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mls {
    order: u32,
    bits: Vec<u8>,
    symbols: Vec<i8>,
    taps: &'static [u32],
}

impl Mls {
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Period length `2^order - 1`.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn symbols(&self) -> &[i8] {
        &self.symbols
    }

    pub fn taps(&self) -> &'static [u32] {
        self.taps
    }

    pub fn symbols_f64(&self) -> Vec<f64> {
        self.symbols.iter().map(|&s| s as f64).collect()
    }

    /// `periods` back-to-back copies of the ±1 rendering.
    pub fn stimulus(&self, periods: usize) -> Vec<f64> {
        let one = self.symbols_f64();
        let mut out = Vec::with_capacity(one.len() * periods);
        for _ in 0..periods {
            out.extend_from_slice(&one);
        }
        out
    }

    /// Circular autocorrelation of the symbols at `lag`, in exact integers.
    pub fn autocorrelation(&self, lag: usize) -> i64 {
        let n = self.symbols.len();
        let lag = lag % n;
        (0..n)
            .map(|i| self.symbols[i] as i64 * self.symbols[(i + lag) % n] as i64)
            .sum()
    }

    /// Integer value of the `order`-bit window starting at `k`, bit `i`
    /// holding `a[k+i]`.
    pub(crate) fn window_index(&self, k: usize) -> usize {
        let n = self.bits.len();
        (0..self.order as usize).fold(0usize, |acc, i| {
            acc | ((self.bits[(k + i) % n] as usize) << i)
        })
    }

    /// Coefficient vectors `c_j` with `a[k+j] = <c_j, window(k)>` over GF(2).
    pub(crate) fn shift_coefficients(&self) -> Vec<usize> {
        let n = self.order as usize;
        let mut c = Vec::with_capacity(self.bits.len());
        for j in 0..self.bits.len() {
            if j < n {
                c.push(1usize << j);
            } else {
                let v = self
                    .taps
                    .iter()
                    .fold(0usize, |acc, &t| acc ^ c[j - t as usize]);
                c.push(v);
            }
        }
        c
    }
}

/// Generates the deterministic MLS of the given register length.
pub fn generate_mls(order: u32) -> Result<Mls> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::invalid(format!(
            "MLS order {order} outside {MIN_ORDER}..={MAX_ORDER}"
        )));
    }
    let taps = TAPS[(order - MIN_ORDER) as usize];
    let n = order as usize;
    let len = (1usize << n) - 1;
    let mut bits = vec![1u8; n];
    bits.reserve(len.saturating_sub(n));
    for k in 0..len.saturating_sub(n) {
        let b = taps
            .iter()
            .fold(0u8, |acc, &t| acc ^ bits[k + n - t as usize]);
        bits.push(b);
    }
    bits.truncate(len);
    let symbols = bits.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect();
    Ok(Mls {
        order,
        bits,
        symbols,
        taps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert_eq!(generate_mls(3).unwrap().len(), 7);
        assert_eq!(generate_mls(17).unwrap().len(), 131_071);
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(generate_mls(1), Err(Error::InvalidArgument(_))));
        assert!(matches!(generate_mls(21), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn order_four_autocorrelation() {
        let mls = generate_mls(4).unwrap();
        assert_eq!(mls.autocorrelation(0), 15);
        for lag in 1..15 {
            assert_eq!(mls.autocorrelation(lag), -1, "lag {lag}");
        }
    }

    #[test]
    fn every_nonzero_window_once() {
        for order in MIN_ORDER..=MAX_ORDER {
            let mls = generate_mls(order).unwrap();
            let mut seen = vec![false; mls.len() + 1];
            for k in 0..mls.len() {
                let w = mls.window_index(k);
                assert!(w != 0 && !seen[w], "order {order}: window {w} repeated");
                seen[w] = true;
            }
        }
    }

    #[test]
    fn shift_coefficients_match_sequence() {
        let mls = generate_mls(6).unwrap();
        let c = mls.shift_coefficients();
        for k in 0..mls.len() {
            let w = mls.window_index(k);
            for (j, cj) in c.iter().enumerate() {
                let parity = (cj & w).count_ones() as u8 & 1;
                assert_eq!(parity, mls.bits()[(k + j) % mls.len()]);
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_mls(12).unwrap(), generate_mls(12).unwrap());
    }
}
