//! Extrapolation of sequences indexed by `k` to the limit `k -> infinity`,
//! in the variable `h = 1/k`.
//!
//! Two tableaux share one driver: the polynomial (Richardson/Neville) table,
//! exact for sequences that are polynomials in `1/k`, and the rational
//! (Bulirsch-Stoer) table, exact for low-degree rational functions of `1/k`
//! such as the ray eigenvalues of invariant symbols.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Polynomial,
    Rational,
}

/// Result of extrapolating a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolated {
    pub limit: f64,
    /// `|T(order) - T(order - 1)|` on the last row of the table.
    pub error_estimate: f64,
    /// Set when the error estimates along the last row do not decrease.
    pub low_confidence: bool,
}

/// Extrapolates `values[i]` observed at `ks[i]` using the last `order + 1`
/// points. `ks` must be strictly increasing and positive.
pub fn extrapolate(ks: &[u64], values: &[f64], order: usize, method: Method) -> Result<Extrapolated> {
    if ks.len() != values.len() {
        return Err(Error::InvalidInput("ks and values differ in length".into()));
    }
    if ks.len() < order + 1 {
        return Err(Error::TooFewSamples { needed: order + 1, got: ks.len() });
    }
    if ks.first() == Some(&0) || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("ks must be positive and strictly increasing".into()));
    }
    let start = ks.len() - order - 1;
    let h: Vec<f64> = ks[start..].iter().map(|&k| 1.0 / k as f64).collect();
    let y = &values[start..];

    let table = match method {
        Method::Polynomial => neville_table(&h, y),
        Method::Rational => rational_table(&h, y),
    };
    let last = &table[order];
    let limit = last[order];
    let diffs: Vec<f64> = (1..=order).map(|j| (last[j] - last[j - 1]).abs()).collect();
    let error_estimate = diffs.last().copied().unwrap_or(0.0);
    let low_confidence = diffs.windows(2).any(|w| w[1] > w[0] && w[1] > 1e-15);
    Ok(Extrapolated { limit, error_estimate, low_confidence })
}

/// `table[i][j]` is the order-`j` estimate using points `i-j ..= i`.
fn neville_table(h: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let m = h.len();
    let mut t = vec![vec![0.0; m]; m];
    for i in 0..m {
        t[i][0] = y[i];
        for j in 1..=i {
            let ratio = h[i - j] / h[i];
            t[i][j] = t[i][j - 1] + (t[i][j - 1] - t[i - 1][j - 1]) / (ratio - 1.0);
        }
    }
    t
}

fn rational_table(h: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let m = h.len();
    let mut t = vec![vec![0.0; m]; m];
    for i in 0..m {
        t[i][0] = y[i];
        for j in 1..=i {
            let lower = if j >= 2 { t[i - 1][j - 2] } else { 0.0 };
            let diff = t[i][j - 1] - t[i - 1][j - 1];
            let gap = t[i][j - 1] - lower;
            t[i][j] = if diff == 0.0 {
                t[i][j - 1]
            } else {
                let ratio = h[i - j] / h[i];
                let denom = ratio * (1.0 - diff / gap) - 1.0;
                t[i][j - 1] + diff / denom
            };
        }
    }
    t
}
