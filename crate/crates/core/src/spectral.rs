//! Spectral measures `mu(f) = trace f(Q)` of Toeplitz blocks, their
//! `(2 pi / k)^m` scaling, and fits of the expansion in powers of `1/k`.
//!
//! Two routes compute a measure: traces of matrix powers (polynomial `f`
//! only, no eigensolve) and a full Hermitian eigensolve. Each is the oracle
//! of the other.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrapolation::{self, Method};
use crate::hardy_sphere::ToeplitzBlock;

/// Default cap on the degree of polynomial test functions.
pub const DEFAULT_DEGREE_CAP: usize = 16;

/// Condition number above which a fit is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// A test function on the real line.
#[derive(Clone)]
pub enum TestFunction {
    /// `sum_j coeffs[j] x^j`.
    Polynomial(Vec<f64>),
    /// Continuous function, bounded on `support`.
    Sampled {
        id: String,
        support: (f64, f64),
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            TestFunction::Sampled { id, support, .. } => f
                .debug_struct("Sampled")
                .field("id", id)
                .field("support", support)
                .finish_non_exhaustive(),
        }
    }
}

impl TestFunction {
    pub fn one() -> Self {
        TestFunction::Polynomial(vec![1.0])
    }

    pub fn identity() -> Self {
        TestFunction::Polynomial(vec![0.0, 1.0])
    }

    pub fn power(p: usize) -> Self {
        let mut c = vec![0.0; p + 1];
        c[p] = 1.0;
        TestFunction::Polynomial(c)
    }

    /// `(x - c)^2`.
    pub fn centered_square(c: f64) -> Self {
        TestFunction::Polynomial(vec![c * c, -2.0 * c, 1.0])
    }

    pub fn sampled(id: impl Into<String>, support: (f64, f64), f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction::Sampled { id: id.into(), support, f: Arc::new(f) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
            TestFunction::Sampled { f, .. } => f(x),
        }
    }

    /// Polynomial degree, `None` for sampled functions.
    pub fn degree(&self) -> Option<usize> {
        match self {
            TestFunction::Polynomial(c) => Some(c.iter().rposition(|&a| a != 0.0).unwrap_or(0)),
            TestFunction::Sampled { .. } => None,
        }
    }

    /// Short label used in emitted tables.
    pub fn id(&self) -> String {
        match self {
            TestFunction::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|a| format!("{a}")).collect();
                format!("poly[{}]", parts.join(";"))
            }
            TestFunction::Sampled { id, .. } => id.clone(),
        }
    }
}

/// `sum_j a_j trace(Q^j)` by repeated multiplication, with the default cap.
pub fn measure_poly(block: &ToeplitzBlock, f: &TestFunction) -> Result<f64> {
    measure_poly_capped(block, f, DEFAULT_DEGREE_CAP)
}

pub fn measure_poly_capped(block: &ToeplitzBlock, f: &TestFunction, cap: usize) -> Result<f64> {
    let TestFunction::Polynomial(coeffs) = f else {
        return Err(Error::InvalidInput(
            "the trace-of-powers route needs a polynomial test function".into(),
        ));
    };
    let degree = f.degree().unwrap_or(0);
    if degree > cap {
        return Err(Error::DegreeCap { degree, cap });
    }
    let dim = block.dim();
    if block.is_diagonal() {
        let diag: Vec<f64> = block.matrix.diagonal().iter().map(|c| c.re).collect();
        let mut power = vec![1.0; dim];
        let mut total = coeffs[0] * dim as f64;
        for &a in &coeffs[1..=degree] {
            for (p, d) in power.iter_mut().zip(&diag) {
                *p *= d;
            }
            total += a * power.iter().sum::<f64>();
        }
        return Ok(total);
    }
    let q = &block.matrix;
    let mut power = DMatrix::<Complex64>::identity(dim, dim);
    let mut total = coeffs[0] * dim as f64;
    for (j, &a) in coeffs.iter().enumerate().take(degree + 1).skip(1) {
        power = if j == 1 { q.clone() } else { &power * q };
        if a != 0.0 {
            total += a * power.trace().re;
        }
    }
    Ok(total)
}

/// Eigenvalues of a Hermitian block in ascending order.
pub fn eigenvalues(block: &ToeplitzBlock) -> Result<Vec<f64>> {
    let mut eig: Vec<f64> = if block.is_diagonal() {
        block.matrix.diagonal().iter().map(|c| c.re).collect()
    } else {
        SymmetricEigen::try_new(block.matrix.clone(), f64::EPSILON, 1000 + 100 * block.dim())
            .ok_or(Error::EigenNonConvergence { k: u64::from(block.k) })?
            .eigenvalues
            .iter()
            .copied()
            .collect()
    };
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// `sum_i f(lambda_i)` over the eigenvalues of the block.
pub fn measure_eigen(block: &ToeplitzBlock, f: &TestFunction) -> Result<f64> {
    Ok(measure_from_eigenvalues(&eigenvalues(block)?, f))
}

pub fn measure_from_eigenvalues(eig: &[f64], f: &TestFunction) -> f64 {
    eig.iter().map(|&l| f.eval(l)).sum()
}

/// `(2 pi / k)^m * value`.
pub fn scaled_measure(value: f64, m: u32, k: u64) -> f64 {
    assert!(k >= 1, "k must be positive");
    (2.0 * PI / k as f64).powi(m as i32) * value
}

/// Least-squares fit of `sum_{i <= r} c_i k^{-i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticFit {
    pub coefficients: Vec<f64>,
    /// Largest absolute misfit over the fitted points.
    pub residual: f64,
    pub k_range: Vec<u64>,
    pub order: usize,
    /// Change in `c_0` when the smallest `k` is dropped from the fit.
    pub c0_spread: f64,
}

#[derive(Serialize, Deserialize)]
struct FitWire {
    c: Vec<f64>,
    residual: f64,
    k_range: Vec<u64>,
}

impl AsymptoticFit {
    pub fn c0(&self) -> f64 {
        self.coefficients[0]
    }

    /// `{"c": [...], "residual": ..., "k_range": [...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FitWire {
            c: self.coefficients.clone(),
            residual: self.residual,
            k_range: self.k_range.clone(),
        })
        .expect("plain data serialises")
    }
}

pub fn fit_expansion(samples: &[(u64, f64)], order: usize) -> Result<AsymptoticFit> {
    let mut samples = samples.to_vec();
    samples.sort_by_key(|s| s.0);
    if samples.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput("fit samples must have distinct k".into()));
    }
    if samples.len() < order + 2 {
        return Err(Error::TooFewSamples { needed: order + 2, got: samples.len() });
    }
    if samples[0].0 < (2 * order as u64).max(1) {
        return Err(Error::InvalidInput(format!(
            "smallest k = {} is below 2r = {}",
            samples[0].0,
            2 * order
        )));
    }
    let coefficients = least_squares(&samples, order)?;
    let residual = samples
        .iter()
        .map(|&(k, v)| (model(&coefficients, k) - v).abs())
        .fold(0.0, f64::max);
    let c0_spread = if samples.len() > order + 2 {
        let sub = least_squares(&samples[1..], order)?;
        (sub[0] - coefficients[0]).abs()
    } else {
        f64::NAN
    };
    Ok(AsymptoticFit {
        coefficients,
        residual,
        k_range: samples.iter().map(|s| s.0).collect(),
        order,
        c0_spread,
    })
}

fn model(c: &[f64], k: u64) -> f64 {
    let h = 1.0 / k as f64;
    c.iter().rev().fold(0.0, |acc, &a| acc * h + a)
}

fn least_squares(samples: &[(u64, f64)], order: usize) -> Result<Vec<f64>> {
    let rows = samples.len();
    let design = DMatrix::from_fn(rows, order + 1, |i, j| (1.0 / samples[i].0 as f64).powi(j as i32));
    let rhs = DVector::from_iterator(rows, samples.iter().map(|s| s.1));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned { condition, limit: CONDITION_LIMIT });
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::InvalidInput(format!("least squares failed: {e}")))?;
    Ok(sol.iter().copied().collect())
}

/// Richardson-table estimate of `c_0` from the last `order + 1` samples,
/// with `order <= 3`.
pub fn richardson_c0(samples: &[(u64, f64)], order: usize) -> Result<(f64, f64)> {
    if order > 3 {
        return Err(Error::InvalidInput("Richardson table order is capped at 3".into()));
    }
    let mut samples = samples.to_vec();
    samples.sort_by_key(|s| s.0);
    let ks: Vec<u64> = samples.iter().map(|s| s.0).collect();
    let vs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let e = extrapolation::extrapolate(&ks, &vs, order, Method::Polynomial)?;
    Ok((e.limit, e.error_estimate))
}

/// One row of an emitted measure table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub n: usize,
    pub k: u64,
    pub m: u32,
    pub f_id: String,
    pub mu: f64,
    pub scaled_mu: f64,
}

/// CSV with columns `n,k,m,f_id,mu,scaled_mu`.
pub fn write_measure_csv<W: Write>(rows: &[MeasureRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy_sphere::{assemble_block, SymbolPoly};
    use crate::multiindex::enumerate_degree;

    fn diag_block(values: &[f64]) -> ToeplitzBlock {
        let dim = values.len();
        ToeplitzBlock {
            n: 2,
            k: dim as u32 - 1,
            basis: enumerate_degree(2, dim as u32 - 1),
            matrix: DMatrix::from_diagonal(&DVector::from_iterator(
                dim,
                values.iter().map(|&v| Complex64::new(v, 0.0)),
            )),
        }
    }

    #[test]
    fn measure_examples() {
        let a1 = SymbolPoly::coordinate_density(2, 0);
        let b4 = assemble_block(&a1, 2, 4).unwrap();
        assert!((measure_poly(&b4, &TestFunction::identity()).unwrap() - 2.5).abs() < 1e-14);
        let b2 = assemble_block(&a1, 2, 2).unwrap();
        assert!((measure_poly(&b2, &TestFunction::power(2)).unwrap() - 0.875).abs() < 1e-14);
        assert!((measure_eigen(&b2, &TestFunction::identity()).unwrap() - 1.5).abs() < 1e-14);
        assert_eq!(measure_poly(&b4, &TestFunction::one()).unwrap(), 5.0);

        let hop = assemble_block(&SymbolPoly::hopping(2, 0, 1, 1.0), 2, 1).unwrap();
        assert!((measure_eigen(&hop, &TestFunction::power(2)).unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert!((measure_poly(&hop, &TestFunction::power(2)).unwrap() - 2.0 / 9.0).abs() < 1e-15);

        let id = assemble_block(&SymbolPoly::constant(3, 1.0), 3, 4).unwrap();
        let f = TestFunction::sampled("cos", (0.0, 2.0), f64::cos);
        assert!((measure_eigen(&id, &f).unwrap() - 15.0 * 1f64.cos()).abs() < 1e-13);
    }

    #[test]
    fn degree_cap_is_enforced() {
        let b = diag_block(&[0.1, 0.2]);
        assert!(matches!(
            measure_poly(&b, &TestFunction::power(17)),
            Err(Error::DegreeCap { degree: 17, cap: 16 })
        ));
        assert!(measure_poly_capped(&b, &TestFunction::power(17), 20).is_ok());
    }

    #[test]
    fn dense_and_diagonal_power_routes_agree() {
        let sym = SymbolPoly::hopping(2, 0, 1, 0.3).plus(SymbolPoly::coordinate_density(2, 1));
        let block = assemble_block(&sym, 2, 12).unwrap();
        let f = TestFunction::Polynomial(vec![0.5, -1.0, 2.0, 0.0, 1.5]);
        let a = measure_poly(&block, &f).unwrap();
        let b = measure_eigen(&block, &f).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn scaled_measure_examples() {
        assert_eq!(scaled_measure(0.0, 2, 7), 0.0);
        assert_eq!(scaled_measure(1.0, 0, 7), 1.0);
        let k = 1000;
        let v = scaled_measure((k + 1) as f64, 1, k);
        assert!((v - 2.0 * PI * 1.001).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_dimension_model() {
        let samples: Vec<(u64, f64)> = (10..=60)
            .map(|k| (k, scaled_measure((k + 1) as f64, 1, k)))
            .collect();
        let fit = fit_expansion(&samples, 2).unwrap();
        assert!((fit.c0() - 2.0 * PI).abs() < 1e-6);
        assert!((fit.coefficients[1] - 2.0 * PI).abs() < 1e-3);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn fit_of_constant_and_exact_polynomial() {
        let samples: Vec<(u64, f64)> = (8..20).map(|k| (k, 3.5)).collect();
        let fit = fit_expansion(&samples, 2).unwrap();
        assert!((fit.c0() - 3.5).abs() < 1e-12);
        assert!(fit.coefficients[1..].iter().all(|c| c.abs() < 1e-9));

        let samples: Vec<(u64, f64)> = (10..=40)
            .map(|k| {
                let h = 1.0 / k as f64;
                (k, 1.0 + h + h * h)
            })
            .collect();
        let fit = fit_expansion(&samples, 2).unwrap();
        for c in &fit.coefficients {
            assert!((c - 1.0).abs() < 1e-8, "{:?}", fit.coefficients);
        }
        let (c0, _) = richardson_c0(&samples, 2).unwrap();
        assert!((c0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fit_preconditions() {
        let few: Vec<(u64, f64)> = vec![(10, 1.0), (11, 1.0), (12, 1.0)];
        assert!(matches!(fit_expansion(&few, 2), Err(Error::TooFewSamples { .. })));
        let close: Vec<(u64, f64)> = (2..10).map(|k| (k, 1.0)).collect();
        assert!(fit_expansion(&close, 2).is_err());
        let dup = vec![(10, 1.0), (10, 1.0), (11, 1.0), (12, 1.0)];
        assert!(fit_expansion(&dup, 1).is_err());
        // tightly clustered large k make the Vandermonde design singular
        let clustered: Vec<(u64, f64)> = (1_000_000..1_000_008).map(|k| (k, 1.0)).collect();
        assert!(matches!(fit_expansion(&clustered, 3), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn fit_json_shape() {
        let samples: Vec<(u64, f64)> = (10..14).map(|k| (k, 2.0)).collect();
        let json = fit_expansion(&samples, 1).unwrap().to_json();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["c", "k_range", "residual"]);
        assert_eq!(json["k_range"], serde_json::json!([10, 11, 12, 13]));
    }

    #[test]
    fn measure_csv_header() {
        let rows = vec![MeasureRow { n: 2, k: 3, m: 1, f_id: "x".into(), mu: 2.0, scaled_mu: 4.18 }];
        let mut buf = Vec::new();
        write_measure_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "n,k,m,f_id,mu,scaled_mu");
        assert_eq!(text.lines().nth(1).unwrap(), "2,3,1,x,2.0,4.18");
    }
}
