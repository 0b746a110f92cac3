//! Multi-indices, monomial bases of weight spaces and lattice points of
//! moment-polytope fibers.
//!
//! Every basis in the crate is listed in graded-lexicographic order: first by
//! total degree, then lexicographically *descending* within a degree, so that
//! degree 2 in two variables reads `(2,0), (1,1), (0,2)`. Downstream matrices
//! are indexed in this order.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial `z^alpha`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit vector `e_j` in `n` variables.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|alpha|`.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&a| u64::from(a)).sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    /// Componentwise sum. Panics if the dimensions differ.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dim(), other.dim(), "multi-index dimension mismatch");
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference, `None` if any entry would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        assert_eq!(self.dim(), other.dim(), "multi-index dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Reorders coordinates: entry `j` of the result is entry `perm[j]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> MultiIndex {
        MultiIndex(perm.iter().map(|&p| self.0[p]).collect())
    }

    /// Graded-lexicographic comparison used for every basis in the crate.
    pub fn graded_lex_cmp(&self, other: &MultiIndex) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.graded_lex_cmp(other)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

/// `C(n, k)` with overflow reported instead of wrapped.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc
            .checked_mul(u128::from(n - i))
            .ok_or(Error::Overflow("binomial"))?
            / u128::from(i + 1);
    }
    Ok(acc)
}

/// All exponents of degree `k` in `n` variables, graded-lex order.
pub fn enumerate_degree(n: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for_each_degree(n, k, |e| out.push(MultiIndex(e.to_vec())));
    out
}

/// Visits the degree-`k` exponents in graded-lex order without allocating
/// one vector per exponent.
pub fn for_each_degree(n: usize, k: u32, mut visit: impl FnMut(&[u32])) {
    assert!(n >= 1, "ambient dimension must be at least 1");
    let mut current = vec![0u32; n];
    fill_degree(&mut current, 0, k, &mut visit);
}

fn fill_degree(current: &mut [u32], pos: usize, remaining: u32, visit: &mut impl FnMut(&[u32])) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        visit(current);
        return;
    }
    for a in (0..=remaining).rev() {
        current[pos] = a;
        fill_degree(current, pos + 1, remaining - a, visit);
    }
}

/// Lattice data of a subtorus `G` of the standard torus acting on `C^n`,
/// together with the weight `alpha` at which one reduces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtorusData {
    pub n: usize,
    pub d: usize,
    /// `d x n` weight matrix; row `r` holds the weights of the `r`-th circle factor.
    #[serde(rename = "Bt")]
    pub bt: Vec<Vec<i64>>,
    pub alpha: Vec<i64>,
}

impl SubtorusData {
    pub fn new(bt: Vec<Vec<i64>>, alpha: Vec<i64>) -> Result<Self> {
        let d = bt.len();
        let n = bt.first().map_or(0, Vec::len);
        let sub = SubtorusData { n, d, bt, alpha };
        sub.validate()?;
        Ok(sub)
    }

    /// The diagonal circle in `T^n` at weight 1: its fibers are the full
    /// degree-`k` monomial bases.
    pub fn diagonal_circle(n: usize) -> Self {
        SubtorusData {
            n,
            d: 1,
            bt: vec![vec![1; n]],
            alpha: vec![1],
        }
    }

    /// The full torus `T^n` at the weight `alpha`.
    pub fn full_torus(alpha: Vec<i64>) -> Self {
        let n = alpha.len();
        let bt = (0..n)
            .map(|r| (0..n).map(|c| i64::from(r == c)).collect())
            .collect();
        SubtorusData { n, d: n, bt, alpha }
    }

    /// `CP^1 x CP^1` as the reduction of `C^4` by a 2-torus.
    pub fn cp1_cross_cp1() -> Self {
        SubtorusData {
            n: 4,
            d: 2,
            bt: vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1]],
            alpha: vec![1, 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidInput(
                "subtorus needs n >= 1 and d >= 1".into(),
            ));
        }
        if self.bt.len() != self.d {
            return Err(Error::InvalidInput(format!(
                "Bt has {} rows, expected d = {}",
                self.bt.len(),
                self.d
            )));
        }
        if let Some(row) = self.bt.iter().find(|row| row.len() != self.n) {
            return Err(Error::InvalidInput(format!(
                "Bt row of length {}, expected n = {}",
                row.len(),
                self.n
            )));
        }
        if self.alpha.len() != self.d {
            return Err(Error::InvalidInput(format!(
                "alpha has {} entries, expected d = {}",
                self.alpha.len(),
                self.d
            )));
        }
        if self.d > self.n {
            return Err(Error::InvalidInput(format!(
                "subtorus rank d = {} exceeds n = {}",
                self.d, self.n
            )));
        }
        let rank = rank(&to_big(&self.bt));
        if rank != self.d {
            return Err(Error::InvalidInput(format!(
                "Bt has rank {rank}, expected full row rank {}",
                self.d
            )));
        }
        Ok(())
    }

    /// Column `j` of `Bt`: the weight of coordinate `z_j`.
    pub fn column(&self, j: usize) -> Vec<i64> {
        self.bt.iter().map(|row| row[j]).collect()
    }

    /// `Bt beta` with checked arithmetic.
    pub fn weight_of(&self, beta: &MultiIndex) -> Result<Vec<i64>> {
        self.bt
            .iter()
            .map(|row| {
                row.iter().zip(beta.entries()).try_fold(0i64, |acc, (&b, &x)| {
                    b.checked_mul(i64::from(x))
                        .and_then(|t| acc.checked_add(t))
                        .ok_or(Error::Overflow("Bt beta"))
                })
            })
            .collect()
    }

    fn scaled_alpha(&self, k: u64) -> Result<Vec<BigInt>> {
        Ok(self
            .alpha
            .iter()
            .map(|&a| BigInt::from(a) * BigInt::from(k))
            .collect())
    }

    /// Fails with [`Error::UnboundedFiber`] when `{x >= 0 : Bt x = 0}` is not `{0}`.
    pub fn check_bounded(&self) -> Result<()> {
        match recession_direction(self) {
            Some(dir) => Err(Error::UnboundedFiber {
                direction: dir.iter().map(ToString::to_string).collect(),
            }),
            None => Ok(()),
        }
    }

    /// Vertices of the polytope `P = {x >= 0 : Bt x = alpha}`, deduplicated,
    /// in a deterministic order. Empty when `alpha` is outside the image cone.
    pub fn polytope_vertices(&self) -> Result<Vec<Vec<BigRational>>> {
        self.check_bounded()?;
        let rhs: Vec<BigInt> = self.alpha.iter().map(|&a| BigInt::from(a)).collect();
        Ok(basic_feasible_solutions(&to_big(&self.bt), &rhs))
    }
}

/// Enumerates `{beta in N^n : Bt beta = k alpha}` in graded-lex order.
pub fn enumerate_fiber(sub: &SubtorusData, k: u64) -> Result<Vec<MultiIndex>> {
    sub.validate()?;
    if k == 0 {
        return Err(Error::InvalidInput("fiber enumeration needs k >= 1".into()));
    }
    sub.check_bounded()?;
    let vertices = sub.polytope_vertices()?;
    if vertices.is_empty() {
        return Ok(Vec::new());
    }

    let n = sub.n;
    let big_bt = to_big(&sub.bt);
    let pivots = first_pivot_set(&big_bt).expect("full row rank was validated");
    let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();

    // Coordinate bounds: max_v (k v_j) over vertices of P, floored.
    let kb = BigInt::from(k);
    let bounds: Vec<u32> = (0..n)
        .map(|j| {
            let max = vertices
                .iter()
                .map(|v| v[j].clone() * BigRational::from_integer(kb.clone()))
                .max()
                .unwrap_or_else(BigRational::zero);
            max.floor()
                .to_integer()
                .to_u32()
                .ok_or(Error::Overflow("fiber coordinate bound"))
        })
        .collect::<Result<_>>()?;

    // x_S = adj(B_S) (k alpha - B_F x_F) / det(B_S), evaluated in i128.
    let square: Vec<Vec<BigInt>> = big_bt
        .iter()
        .map(|row| pivots.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let det = determinant(&square);
    let adj = adjugate(&square);
    let to_i128 = |x: &BigInt| x.to_i128().ok_or(Error::Overflow("pivot adjugate"));
    let det = to_i128(&det)?;
    let adj: Vec<Vec<i128>> = adj
        .iter()
        .map(|row| row.iter().map(to_i128).collect())
        .collect::<Result<_>>()?;
    let target: Vec<i128> = sub
        .scaled_alpha(k)?
        .iter()
        .map(to_i128)
        .collect::<Result<_>>()?;

    let d = sub.d;
    let mut out = Vec::new();
    let mut free_vals = vec![0u32; free.len()];
    loop {
        let mut rhs = target.clone();
        for (fi, &j) in free.iter().enumerate() {
            let x = i128::from(free_vals[fi]);
            for (r, slot) in rhs.iter_mut().enumerate() {
                *slot = i128::from(sub.bt[r][j])
                    .checked_mul(x)
                    .and_then(|t| slot.checked_sub(t))
                    .ok_or(Error::Overflow("fiber right-hand side"))?;
            }
        }
        let mut beta = vec![0u32; n];
        let mut ok = true;
        for (pi, &j) in pivots.iter().enumerate() {
            let mut num: i128 = 0;
            for (c, &r) in rhs.iter().enumerate().take(d) {
                num = adj[pi][c]
                    .checked_mul(r)
                    .and_then(|t| num.checked_add(t))
                    .ok_or(Error::Overflow("fiber pivot solve"))?;
            }
            if num % det != 0 {
                ok = false;
                break;
            }
            let val = num / det;
            if val < 0 || val > i128::from(bounds[j]) {
                ok = false;
                break;
            }
            beta[j] = val as u32;
        }
        if ok {
            for (fi, &j) in free.iter().enumerate() {
                beta[j] = free_vals[fi];
            }
            out.push(MultiIndex(beta));
        }
        // odometer over the free coordinates
        let mut pos = 0;
        loop {
            if pos == free.len() {
                out.sort();
                return Ok(out);
            }
            if free_vals[pos] < bounds[free[pos]] {
                free_vals[pos] += 1;
                break;
            }
            free_vals[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact lattice-point counts of the fibers for each `k`.
pub fn fiber_count_growth(sub: &SubtorusData, ks: &[u64]) -> Result<Vec<(u64, u64)>> {
    ks.iter()
        .map(|&k| Ok((k, enumerate_fiber(sub, k)?.len() as u64)))
        .collect()
}

// ---------------------------------------------------------------------------
// exact integer linear algebra

pub(crate) fn to_big(m: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    m.iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub(crate) fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

fn adjugate(m: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![BigInt::one()]];
    }
    let mut adj = vec![vec![BigInt::zero(); n]; n];
    for (i, adj_row) in adj.iter_mut().enumerate() {
        for (j, slot) in adj_row.iter_mut().enumerate() {
            // cofactor C_{ji}
            let minor: Vec<Vec<BigInt>> = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != j)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != i)
                        .map(|(_, x)| x.clone())
                        .collect()
                })
                .collect();
            let det = determinant(&minor);
            *slot = if (i + j) % 2 == 0 { det } else { -det };
        }
    }
    adj
}

pub(crate) fn rank(m: &[Vec<BigInt>]) -> usize {
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .map(|row| row.iter().map(|x| BigRational::from_integer(x.clone())).collect())
        .collect();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = &a[i][c] / &a[r][c];
                for j in c..cols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(0, n, size, &mut cur, &mut out);
    out
}

fn first_pivot_set(a: &[Vec<BigInt>]) -> Option<Vec<usize>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    subsets(cols, rows).into_iter().find(|s| {
        let sq: Vec<Vec<BigInt>> = a
            .iter()
            .map(|row| s.iter().map(|&c| row[c].clone()).collect())
            .collect();
        !determinant(&sq).is_zero()
    })
}

/// Solves `A_S x_S = b` by Cramer's rule; `None` when `A_S` is singular.
pub(crate) fn solve_square(a: &[Vec<BigInt>], cols: &[usize], b: &[BigInt]) -> Option<Vec<BigRational>> {
    let sq: Vec<Vec<BigInt>> = a
        .iter()
        .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let det = determinant(&sq);
    if det.is_zero() {
        return None;
    }
    let adj = adjugate(&sq);
    Some(
        adj.iter()
            .map(|row| {
                let num: BigInt = row.iter().zip(b).map(|(x, y)| x * y).sum();
                BigRational::new(num, det.clone())
            })
            .collect(),
    )
}

/// Basic feasible solutions (vertices) of `{x >= 0 : A x = b}` for a full
/// row rank integer matrix `A`.
pub(crate) fn basic_feasible_solutions(a: &[Vec<BigInt>], b: &[BigInt]) -> Vec<Vec<BigRational>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut out: Vec<Vec<BigRational>> = Vec::new();
    for s in subsets(cols, rows) {
        let Some(xs) = solve_square(a, &s, b) else {
            continue;
        };
        if xs.iter().any(Signed::is_negative) {
            continue;
        }
        let mut x = vec![BigRational::zero(); cols];
        for (&c, v) in s.iter().zip(xs) {
            x[c] = v;
        }
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// A nonzero `x >= 0` with `Bt x = 0`, normalised to `sum x = 1`, if one exists.
fn recession_direction(sub: &SubtorusData) -> Option<Vec<BigRational>> {
    let mut aug = to_big(&sub.bt);
    aug.push(vec![BigInt::one(); sub.n]);
    // If the all-ones row lies in the row space of Bt, every recession
    // direction has sum zero, hence is zero.
    if rank(&aug) <= sub.d {
        return None;
    }
    let mut rhs = vec![BigInt::zero(); sub.d];
    rhs.push(BigInt::one());
    basic_feasible_solutions(&aug, &rhs).into_iter().next()
}
