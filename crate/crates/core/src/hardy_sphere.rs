//! Hardy space of the unit sphere `S^{2n-1}` in the monomial basis and the
//! Toeplitz blocks `Pi M_F Pi` restricted to degree-`k` weight spaces.
//!
//! Inner products use the round measure divided by the total volume, so the
//! constant function has norm one and
//!
//! ```text
//! h(mu) = <z^mu, z^mu> = (n-1)! mu! / (n-1+|mu|)!
//! ```
//!
//! Norms and the eigenvalues of torus-invariant symbols are exact rationals.
//! General blocks are assembled in `f64` from exact ratios.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{enumerate_degree, MultiIndex};

/// Normalised squared norm `h(mu)` of `z^mu` on `S^{2n-1}`.
pub fn monomial_norm(mu: &MultiIndex, n: usize) -> BigRational {
    assert_eq!(mu.dim(), n, "multi-index length must equal n");
    let mut num = BigInt::one();
    for &m in mu.entries() {
        num *= factorial(u64::from(m));
    }
    // (n-1)! / (n-1+|mu|)! = 1 / (n (n+1) ... (n-1+|mu|))
    let mut den = BigInt::one();
    for j in 0..mu.degree() {
        den *= BigInt::from(n as u64 + j);
    }
    BigRational::new(num, den)
}

/// `h(alpha + gamma) / h(alpha)`, computed as a short product.
pub fn norm_ratio(alpha: &MultiIndex, gamma: &MultiIndex, n: usize) -> BigRational {
    let mut num = BigInt::one();
    for (&a, &g) in alpha.entries().iter().zip(gamma.entries()) {
        for t in 1..=u64::from(g) {
            num *= BigInt::from(u64::from(a) + t);
        }
    }
    let base = n as u64 + alpha.degree();
    let mut den = BigInt::one();
    for t in 0..gamma.degree() {
        den *= BigInt::from(base + t);
    }
    BigRational::new(num, den)
}

fn factorial(m: u64) -> BigInt {
    (2..=m).fold(BigInt::one(), |acc, t| acc * BigInt::from(t))
}

/// Exact rational value of a float coefficient.
pub(crate) fn exact(c: f64) -> BigRational {
    BigRational::from_float(c).expect("symbol coefficients must be finite")
}

/// One term `coeff * z^gamma zbar^delta / |z|^{|gamma|+|delta|}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolTerm {
    pub gamma: MultiIndex,
    pub delta: MultiIndex,
    pub coeff: Complex64,
}

/// Degree-zero homogeneous polynomial symbol on `C^n - 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolPoly {
    n: usize,
    terms: Vec<SymbolTerm>,
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    gamma: Vec<u32>,
    delta: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SymbolWire {
    terms: Vec<TermWire>,
}

impl Serialize for SymbolPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymbolWire {
            terms: self
                .terms
                .iter()
                .map(|t| TermWire {
                    gamma: t.gamma.entries().to_vec(),
                    delta: t.delta.entries().to_vec(),
                    re: t.coeff.re,
                    im: t.coeff.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymbolPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = SymbolWire::deserialize(d)?;
        let terms = wire
            .terms
            .into_iter()
            .map(|t| SymbolTerm {
                gamma: t.gamma.into(),
                delta: t.delta.into(),
                coeff: Complex64::new(t.re, t.im),
            })
            .collect();
        SymbolPoly::new(terms).map_err(serde::de::Error::custom)
    }
}

impl SymbolPoly {
    /// Validates circle invariance, matching dimensions and Hermitian closure.
    pub fn new(terms: Vec<SymbolTerm>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidInput("symbol has no terms".into()));
        };
        let n = first.gamma.dim();
        if n == 0 {
            return Err(Error::InvalidInput("symbol terms need n >= 1".into()));
        }
        for t in &terms {
            if t.gamma.dim() != n || t.delta.dim() != n {
                return Err(Error::InvalidInput(
                    "symbol terms have inconsistent dimensions".into(),
                ));
            }
            if t.gamma.degree() != t.delta.degree() {
                return Err(Error::NotCircleInvariant {
                    gamma: t.gamma.degree(),
                    delta: t.delta.degree(),
                });
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::InvalidInput("non-finite symbol coefficient".into()));
            }
        }
        let sym = SymbolPoly { n, terms };
        sym.check_hermitian()?;
        Ok(sym)
    }

    fn check_hermitian(&self) -> Result<()> {
        let collected = self.collected();
        let scale = collected.values().map(|c| c.norm()).fold(0.0, f64::max);
        for ((g, d), c) in &collected {
            let partner = collected
                .get(&(d.clone(), g.clone()))
                .copied()
                .unwrap_or_default();
            if (partner - c.conj()).norm() > 1e-14 * scale.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "symbol is not Hermitian: coefficient of ({g:?},{d:?}) is {c}, of its transpose {partner}"
                )));
            }
        }
        Ok(())
    }

    fn collected(&self) -> BTreeMap<(MultiIndex, MultiIndex), Complex64> {
        let mut map = BTreeMap::new();
        for t in &self.terms {
            *map.entry((t.gamma.clone(), t.delta.clone()))
                .or_insert(Complex64::zero()) += t.coeff;
        }
        map
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    /// The constant symbol `c`.
    pub fn constant(n: usize, c: f64) -> Self {
        SymbolPoly {
            n,
            terms: vec![SymbolTerm {
                gamma: MultiIndex::zeros(n),
                delta: MultiIndex::zeros(n),
                coeff: Complex64::new(c, 0.0),
            }],
        }
    }

    /// `|z_j|^2 / |z|^2`.
    pub fn coordinate_density(n: usize, j: usize) -> Self {
        let e = MultiIndex::unit(n, j);
        SymbolPoly {
            n,
            terms: vec![SymbolTerm {
                gamma: e.clone(),
                delta: e,
                coeff: Complex64::new(1.0, 0.0),
            }],
        }
    }

    /// `c (z_i zbar_j + z_j zbar_i) / |z|^2`, the real part of a hopping term.
    pub fn hopping(n: usize, i: usize, j: usize, c: f64) -> Self {
        let (ei, ej) = (MultiIndex::unit(n, i), MultiIndex::unit(n, j));
        let c = Complex64::new(c, 0.0);
        SymbolPoly {
            n,
            terms: vec![
                SymbolTerm { gamma: ei.clone(), delta: ej.clone(), coeff: c },
                SymbolTerm { gamma: ej, delta: ei, coeff: c },
            ],
        }
    }

    pub fn plus(mut self, other: SymbolPoly) -> Self {
        assert_eq!(self.n, other.n, "symbols on different spaces");
        self.terms.extend(other.terms);
        self
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for t in &mut self.terms {
            t.coeff *= c;
        }
        self
    }

    /// Applies a coordinate permutation: `z_j` is replaced by `z_{perm[j]}`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        SymbolPoly {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| SymbolTerm {
                    gamma: t.gamma.permuted(perm),
                    delta: t.delta.permuted(perm),
                    coeff: t.coeff,
                })
                .collect(),
        }
    }

    /// True when every term has `gamma == delta`.
    pub fn is_torus_invariant(&self) -> bool {
        self.terms.iter().all(|t| t.gamma == t.delta)
    }

    /// Value at a point `z != 0`; real for Hermitian symbols.
    pub fn eval(&self, z: &[Complex64]) -> f64 {
        let r2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
        self.terms
            .iter()
            .map(|t| {
                let mut v = t.coeff;
                for (j, w) in z.iter().enumerate() {
                    v *= w.powu(t.gamma.get(j)) * w.conj().powu(t.delta.get(j));
                }
                v / r2.powi(t.gamma.degree() as i32)
            })
            .sum::<Complex64>()
            .re
    }
}

/// Real polynomial `sum c_gamma a^gamma` in the simplex coordinates
/// `a_j = |z_j|^2 / |z|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantTerm {
    pub gamma: MultiIndex,
    pub coeff: f64,
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Torus-invariant symbol, a function of the simplex point `a`.
#[derive(Clone)]
pub struct InvariantSymbol {
    n: usize,
    poly: Option<Vec<InvariantTerm>>,
    evaluator: Evaluator,
}

impl fmt::Debug for InvariantSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantSymbol")
            .field("n", &self.n)
            .field("poly", &self.poly)
            .finish_non_exhaustive()
    }
}

impl InvariantSymbol {
    pub fn polynomial(n: usize, terms: Vec<InvariantTerm>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("invariant symbol needs n >= 1".into()));
        }
        if terms.iter().any(|t| t.gamma.dim() != n) {
            return Err(Error::InvalidInput(
                "invariant symbol term has the wrong dimension".into(),
            ));
        }
        if terms.iter().any(|t| !t.coeff.is_finite()) {
            return Err(Error::InvalidInput("non-finite symbol coefficient".into()));
        }
        let eval_terms = terms.clone();
        Ok(InvariantSymbol {
            n,
            poly: Some(terms),
            evaluator: Arc::new(move |a: &[f64]| {
                eval_terms
                    .iter()
                    .map(|t| {
                        t.coeff
                            * t.gamma
                                .entries()
                                .iter()
                                .zip(a)
                                .map(|(&g, &x)| x.powi(g as i32))
                                .product::<f64>()
                    })
                    .sum()
            }),
        })
    }

    /// A symbol known only through its values; no closed-form spectrum.
    pub fn from_fn(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        InvariantSymbol { n, poly: None, evaluator: Arc::new(f) }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::polynomial(n, vec![InvariantTerm { gamma: MultiIndex::zeros(n), coeff: c }])
            .expect("valid constant")
    }

    /// The monomial `a^gamma`.
    pub fn monomial(gamma: MultiIndex) -> Self {
        let n = gamma.dim();
        Self::polynomial(n, vec![InvariantTerm { gamma, coeff: 1.0 }]).expect("valid monomial")
    }

    /// `a_j^p`.
    pub fn coordinate_power(n: usize, j: usize, p: u32) -> Self {
        let mut g = vec![0; n];
        g[j] = p;
        Self::monomial(g.into())
    }

    /// Sum of two polynomial symbols. Panics if either lacks a polynomial form.
    pub fn plus(&self, other: &InvariantSymbol) -> Self {
        assert_eq!(self.n, other.n, "symbols on different spaces");
        let mut terms = self.poly.clone().expect("polynomial form required");
        terms.extend(other.poly.clone().expect("polynomial form required"));
        Self::polynomial(self.n, terms).expect("sum of valid symbols")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polynomial_terms(&self) -> Option<&[InvariantTerm]> {
        self.poly.as_deref()
    }

    pub fn eval(&self, a: &[f64]) -> f64 {
        (self.evaluator)(a)
    }

    /// Value at `z != 0` through `a = (|z_1|^2, ..., |z_n|^2) / |z|^2`.
    pub fn eval_at(&self, z: &[Complex64]) -> f64 {
        let r2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
        let a: Vec<f64> = z.iter().map(|w| w.norm_sqr() / r2).collect();
        self.eval(&a)
    }

    /// Applies a coordinate permutation to the polynomial form.
    pub fn permuted(&self, perm: &[usize]) -> Option<Self> {
        let terms = self.poly.as_ref()?;
        let moved = terms
            .iter()
            .map(|t| InvariantTerm { gamma: t.gamma.permuted(perm), coeff: t.coeff })
            .collect();
        Self::polynomial(self.n, moved).ok()
    }

    /// The same function written as a [`SymbolPoly`] with `gamma == delta` terms.
    pub fn to_symbol_poly(&self) -> Option<SymbolPoly> {
        let terms = self.poly.as_ref()?;
        if terms.is_empty() {
            return Some(SymbolPoly::constant(self.n, 0.0));
        }
        Some(SymbolPoly {
            n: self.n,
            terms: terms
                .iter()
                .map(|t| SymbolTerm {
                    gamma: t.gamma.clone(),
                    delta: t.gamma.clone(),
                    coeff: Complex64::new(t.coeff, 0.0),
                })
                .collect(),
        })
    }
}

/// Eigenvalue of `Pi M_F Pi` on `z^alpha` for an invariant polynomial symbol:
/// `sum_gamma c_gamma h(alpha + gamma) / h(alpha)`.
pub fn invariant_eigenvalue(symbol: &InvariantSymbol, alpha: &MultiIndex) -> Result<BigRational> {
    let terms = symbol.polynomial_terms().ok_or_else(|| {
        Error::InvalidInput("invariant eigenvalue needs a polynomial form".into())
    })?;
    if alpha.dim() != symbol.n() {
        return Err(Error::InvalidInput(format!(
            "multi-index of length {} for a symbol on C^{}",
            alpha.dim(),
            symbol.n()
        )));
    }
    Ok(terms.iter().fold(BigRational::zero(), |acc, t| {
        acc + exact(t.coeff) * norm_ratio(alpha, &t.gamma, symbol.n())
    }))
}

/// Matrix of `Pi M_F Pi` on the orthonormalised degree-`k` monomial basis.
#[derive(Clone, Debug)]
pub struct ToeplitzBlock {
    pub n: usize,
    pub k: u32,
    pub basis: Vec<MultiIndex>,
    pub matrix: DMatrix<Complex64>,
}

impl ToeplitzBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Largest `|M - M^*|` entry relative to the largest `|M|` entry.
    pub fn hermitian_defect(&self) -> f64 {
        let m = &self.matrix;
        let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
            worst = worst.max(m[(i, i)].im.abs());
        }
        worst / scale
    }

    pub fn is_diagonal(&self) -> bool {
        let m = &self.matrix;
        (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| i == j || m[(i, j)] == Complex64::zero()))
    }

    /// Writes the nonzero entries as `row,col,re,im` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "re", "im"])?;
        for j in 0..self.matrix.ncols() {
            for i in 0..self.matrix.nrows() {
                let v = self.matrix[(i, j)];
                if v != Complex64::zero() {
                    w.write_record([i.to_string(), j.to_string(), v.re.to_string(), v.im.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Weight of entry `(beta, alpha)` contributed by a term `(gamma, delta)`:
/// `h(alpha+gamma) / sqrt(h(alpha) h(beta))`, or `None` when `alpha + gamma != beta + delta`.
///
/// On the diagonal the weight is the exact rational `h(alpha+gamma)/h(alpha)`;
/// off the diagonal it is the square root of an exact rational, which makes
/// transposed entries bitwise equal.
enum EntryWeight {
    Rational(BigRational),
    Sqrt(BigRational),
}

impl EntryWeight {
    fn to_f64(&self) -> f64 {
        match self {
            EntryWeight::Rational(r) => r.to_f64().expect("finite ratio"),
            EntryWeight::Sqrt(r) => r.to_f64().expect("finite ratio").sqrt(),
        }
    }
}

fn entry_weight(alpha: &MultiIndex, gamma: &MultiIndex, delta: &MultiIndex, n: usize) -> Option<(MultiIndex, EntryWeight)> {
    let beta = alpha.add(gamma).checked_sub(delta)?;
    let r_alpha = norm_ratio(alpha, gamma, n);
    if gamma == delta {
        return Some((beta, EntryWeight::Rational(r_alpha)));
    }
    let r_beta = norm_ratio(&beta, delta, n);
    Some((beta, EntryWeight::Sqrt(r_alpha * r_beta)))
}

/// Assembles the Toeplitz block of `symbol` on the degree-`k` weight space.
pub fn assemble_block(symbol: &SymbolPoly, n: usize, k: u32) -> Result<ToeplitzBlock> {
    if symbol.n() != n {
        return Err(Error::InvalidInput(format!(
            "symbol lives on C^{} but the block was requested on C^{n}",
            symbol.n()
        )));
    }
    for t in symbol.terms() {
        if t.gamma.degree() != t.delta.degree() {
            return Err(Error::NotCircleInvariant {
                gamma: t.gamma.degree(),
                delta: t.delta.degree(),
            });
        }
    }
    let basis = enumerate_degree(n, k);
    let index: HashMap<&MultiIndex, usize> = basis.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let dim = basis.len();

    let columns: Vec<Vec<(usize, Complex64)>> = basis
        .par_iter()
        .map(|alpha| {
            let mut col: BTreeMap<usize, Complex64> = BTreeMap::new();
            for t in symbol.terms() {
                if let Some((beta, w)) = entry_weight(alpha, &t.gamma, &t.delta, n) {
                    let row = index[&beta];
                    *col.entry(row).or_insert(Complex64::zero()) += t.coeff * w.to_f64();
                }
            }
            col.into_iter().collect()
        })
        .collect();

    let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col {
            matrix[(i, j)] = v;
        }
    }
    Ok(ToeplitzBlock { n, k, basis, matrix })
}

/// Exact diagonal of the block for a symbol whose coefficients are read as
/// exact binary rationals. Off-diagonal terms never reach the diagonal.
pub fn exact_diagonal(symbol: &SymbolPoly, k: u32) -> Result<Vec<(MultiIndex, BigRational)>> {
    let n = symbol.n();
    let mut out = Vec::new();
    for alpha in enumerate_degree(n, k) {
        let mut acc = BigRational::zero();
        for t in symbol.terms() {
            if t.gamma != t.delta {
                continue;
            }
            if t.coeff.im != 0.0 {
                return Err(Error::InvalidInput(
                    "diagonal term with imaginary coefficient".into(),
                ));
            }
            acc += exact(t.coeff.re) * norm_ratio(&alpha, &t.gamma, n);
        }
        out.push((alpha, acc));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::enumerate_degree;
    use nalgebra::SymmetricEigen;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    /// Oracle for n = 2: in Hopf coordinates the normalised measure on S^3 is
    /// 2 sin t cos t dt (angles average out), so
    /// h(mu) = 2 * int_0^{pi/2} cos^{2 mu1 + 1} t sin^{2 mu2 + 1} t dt.
    fn hopf_quadrature_norm(mu1: u32, mu2: u32) -> f64 {
        let steps = 20_000;
        let h = std::f64::consts::FRAC_PI_2 / steps as f64;
        let g = |t: f64| 2.0 * t.cos().powi(2 * mu1 as i32 + 1) * t.sin().powi(2 * mu2 as i32 + 1);
        let mut acc = g(0.0) + g(std::f64::consts::FRAC_PI_2);
        for i in 1..steps {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn monomial_norm_examples() {
        assert_eq!(monomial_norm(&MultiIndex::zeros(3), 3), q(1, 1));
        assert_eq!(monomial_norm(&[1, 0].into(), 2), q(1, 2));
        assert_eq!(monomial_norm(&[1, 1].into(), 2), q(1, 6));
        assert_eq!(monomial_norm(&[2, 1, 0].into(), 3), q(1, 30));
    }

    #[test]
    fn monomial_norm_matches_hopf_quadrature() {
        for mu1 in 0..6 {
            for mu2 in 0..6 {
                let exact = monomial_norm(&[mu1, mu2].into(), 2).to_f64().unwrap();
                let quad = hopf_quadrature_norm(mu1, mu2);
                assert!((exact - quad).abs() < 1e-12, "{mu1},{mu2}: {exact} vs {quad}");
            }
        }
    }

    #[test]
    fn monomial_norm_recursion() {
        for n in 1..=4usize {
            for k in 0..=30u32 {
                if n == 4 && k > 12 {
                    break;
                }
                for mu in enumerate_degree(n, k) {
                    for j in 0..n {
                        let up = mu.add(&MultiIndex::unit(n, j));
                        let lhs = monomial_norm(&up, n) / monomial_norm(&mu, n);
                        let rhs = q(i64::from(mu.get(j)) + 1, n as i64 + mu.degree() as i64);
                        assert_eq!(lhs, rhs);
                        assert_eq!(norm_ratio(&mu, &MultiIndex::unit(n, j), n), rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_symbol_gives_identity() {
        for (n, k) in [(1, 4), (2, 3), (3, 5)] {
            let block = assemble_block(&SymbolPoly::constant(n, 1.0), n, k).unwrap();
            assert_eq!(block.matrix, DMatrix::identity(block.dim(), block.dim()));
        }
    }

    #[test]
    fn coordinate_density_block_is_diagonal() {
        let block = assemble_block(&SymbolPoly::coordinate_density(2, 0), 2, 2).unwrap();
        assert_eq!(block.basis, enumerate_degree(2, 2));
        assert!(block.is_diagonal());
        let diag: Vec<f64> = (0..3).map(|i| block.matrix[(i, i)].re).collect();
        assert_eq!(diag, vec![0.75, 0.5, 0.25]);
    }

    #[test]
    fn hopping_block_at_degree_one() {
        let block = assemble_block(&SymbolPoly::hopping(2, 0, 1, 1.0), 2, 1).unwrap();
        // basis [(1,0), (0,1)]
        let third = 1.0 / 3.0;
        assert!(block.matrix[(0, 0)].norm() == 0.0 && block.matrix[(1, 1)].norm() == 0.0);
        assert!((block.matrix[(1, 0)].re - third).abs() < 1e-15);
        assert_eq!(block.matrix[(0, 1)], block.matrix[(1, 0)].conj());
    }

    #[test]
    fn non_invariant_terms_are_rejected() {
        let bad = SymbolTerm {
            gamma: [1, 0].into(),
            delta: [0, 0].into(),
            coeff: Complex64::new(1.0, 0.0),
        };
        assert!(matches!(
            SymbolPoly::new(vec![bad.clone()]),
            Err(Error::NotCircleInvariant { .. })
        ));
        let raw = SymbolPoly { n: 2, terms: vec![bad] };
        assert!(matches!(assemble_block(&raw, 2, 3), Err(Error::NotCircleInvariant { .. })));
    }

    #[test]
    fn non_hermitian_symbol_is_rejected() {
        let t = SymbolTerm {
            gamma: [1, 0].into(),
            delta: [0, 1].into(),
            coeff: Complex64::new(1.0, 0.0),
        };
        assert!(SymbolPoly::new(vec![t]).is_err());
    }

    #[test]
    fn symbol_json_round_trip() {
        let sym = SymbolPoly::hopping(2, 0, 1, 0.5).plus(SymbolPoly::coordinate_density(2, 1));
        let json = serde_json::to_string(&sym).unwrap();
        assert!(json.starts_with(r#"{"terms":[{"gamma":[1,0],"delta":[0,1],"re":0.5,"im":0.0}"#));
        let back: SymbolPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sym);
        let broken = r#"{"terms":[{"gamma":[1,0],"delta":[0,1],"re":1.0,"im":0.0}]}"#;
        assert!(serde_json::from_str::<SymbolPoly>(broken).is_err());
    }

    #[test]
    fn complex_hopping_is_exactly_hermitian() {
        let c = Complex64::new(0.3, -0.7);
        let sym = SymbolPoly::new(vec![
            SymbolTerm { gamma: [2, 0, 0].into(), delta: [0, 1, 1].into(), coeff: c },
            SymbolTerm { gamma: [0, 1, 1].into(), delta: [2, 0, 0].into(), coeff: c.conj() },
            SymbolTerm { gamma: [0, 0, 1].into(), delta: [0, 0, 1].into(), coeff: 0.25.into() },
        ])
        .unwrap();
        let block = assemble_block(&sym, 3, 6).unwrap();
        assert_eq!(block.matrix, block.matrix.adjoint());
        assert_eq!(block.hermitian_defect(), 0.0);
    }

    #[test]
    fn invariant_symbol_diagonal_equals_eigenvalues() {
        let sym = InvariantSymbol::coordinate_power(3, 0, 2)
            .plus(&InvariantSymbol::monomial([0, 1, 1].into()));
        let block = assemble_block(&sym.to_symbol_poly().unwrap(), 3, 7).unwrap();
        assert!(block.is_diagonal());
        for (i, alpha) in block.basis.iter().enumerate() {
            let lam = invariant_eigenvalue(&sym, alpha).unwrap().to_f64().unwrap();
            assert!((block.matrix[(i, i)].re - lam).abs() <= 1e-15 * lam.abs().max(1.0));
        }
    }

    #[test]
    fn invariant_eigenvalue_closed_forms() {
        let k = 9u32;
        let a1 = InvariantSymbol::coordinate_power(2, 0, 1);
        let a1sq = InvariantSymbol::coordinate_power(2, 0, 2);
        for alpha in enumerate_degree(2, k) {
            let x = i64::from(alpha.get(0));
            let kk = i64::from(k);
            assert_eq!(invariant_eigenvalue(&a1, &alpha).unwrap(), q(x + 1, kk + 2));
            assert_eq!(
                invariant_eigenvalue(&a1sq, &alpha).unwrap(),
                q((x + 2) * (x + 1), (kk + 3) * (kk + 2))
            );
            assert_eq!(
                invariant_eigenvalue(&InvariantSymbol::constant(2, 1.0), &alpha).unwrap(),
                q(1, 1)
            );
        }
    }

    #[test]
    fn exact_diagonal_of_coordinate_density() {
        let k = 11;
        for (alpha, value) in exact_diagonal(&SymbolPoly::coordinate_density(2, 0), k).unwrap() {
            assert_eq!(value, q(i64::from(alpha.get(0)) + 1, i64::from(k) + 2));
        }
    }

    #[test]
    fn weyl_group_equivariance() {
        let sym = SymbolPoly::hopping(3, 0, 2, 0.7)
            .plus(SymbolPoly::coordinate_density(3, 1).scaled(0.4));
        let perm = [2, 0, 1];
        let moved = sym.permuted(&perm);
        let a = assemble_block(&sym, 3, 4).unwrap();
        let b = assemble_block(&moved, 3, 4).unwrap();
        let pos = |basis: &[MultiIndex], m: &MultiIndex| basis.iter().position(|x| x == m).unwrap();
        for (i, bi) in a.basis.iter().enumerate() {
            for (j, bj) in a.basis.iter().enumerate() {
                let pi = pos(&b.basis, &bi.permuted(&perm));
                let pj = pos(&b.basis, &bj.permuted(&perm));
                assert!((a.matrix[(i, j)] - b.matrix[(pi, pj)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn contraction_between_zero_and_identity() {
        // 1/2 + (z1 zbar2 + z2 zbar1)/2 takes values in [0, 1] on the sphere.
        let sym = SymbolPoly::constant(2, 0.5).plus(SymbolPoly::hopping(2, 0, 1, 0.5));
        for k in [1, 5, 20] {
            let block = assemble_block(&sym, 2, k).unwrap();
            let eig = SymmetricEigen::new(block.matrix.clone()).eigenvalues;
            assert!(eig.iter().all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)), "k={k}: {eig}");
        }
    }

    #[test]
    fn symbol_evaluation_on_the_sphere() {
        let z = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let hop = SymbolPoly::hopping(2, 0, 1, 1.0);
        // 2 Re(z1 zbar2) = 2 Re(0.6 * (-0.8 i)) = 0
        assert!(hop.eval(&z).abs() < 1e-15);
        let a1 = SymbolPoly::coordinate_density(2, 0);
        assert!((a1.eval(&z) - 0.36).abs() < 1e-15);
        let inv = InvariantSymbol::coordinate_power(2, 1, 2);
        assert!((inv.eval_at(&z) - 0.64 * 0.64).abs() < 1e-15);
    }

    #[test]
    fn block_csv_dump() {
        let block = assemble_block(&SymbolPoly::hopping(2, 0, 1, 1.0), 2, 1).unwrap();
        let mut buf = Vec::new();
        block.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row,col,re,im");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,0,0.333"));
    }
}
