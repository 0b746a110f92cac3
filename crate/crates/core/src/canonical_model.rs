//! The standard model `X = R^k x T^l`: the Hardy basis `f_m`, the embedding
//! `R: e^{i m theta} -> f_m`, and quadrature checks of `R^t R = Id` and
//! `(R R^t)^2 = R R^t`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation `|m_i| <= 5`.
pub const DEFAULT_TRUNCATION: i64 = 5;

/// Default pass threshold of the isometry report.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Largest quadrature grid for which `R R^t` is formed entry by entry.
pub const MAX_QUADRATURE_POINTS: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModelIndex {
    /// Fourier index on `T^l`.
    pub m: Vec<i64>,
    /// Spatial dimension `k`.
    pub k_dim: usize,
}

impl ModelIndex {
    pub fn new(m: Vec<i64>, k_dim: usize) -> Result<Self> {
        if m.is_empty() || m.iter().all(|&x| x == 0) {
            return Err(Error::ZeroModelIndex);
        }
        Ok(Self { m, k_dim })
    }

    pub fn l(&self) -> usize {
        self.m.len()
    }

    /// Euclidean norm `|m|`.
    pub fn norm(&self) -> f64 {
        self.m.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()
    }

    /// `(|m| / pi)^{k/4} (2 pi)^{-l/2}`.
    pub fn normalization(&self) -> f64 {
        (self.norm() / PI).powf(self.k_dim as f64 / 4.0) * (2.0 * PI).powf(-(self.l() as f64) / 2.0)
    }
}

/// All nonzero `m` in the box `|m_i| <= bound`, lexicographic.
pub fn truncation_box(l: usize, k_dim: usize, bound: i64) -> Vec<ModelIndex> {
    let side: Vec<i64> = (-bound..=bound).collect();
    let mut out = Vec::new();
    let mut m = vec![0i64; l];
    let total = side.len().pow(l as u32);
    for mut code in 0..total {
        for slot in m.iter_mut().rev() {
            *slot = side[code % side.len()];
            code /= side.len();
        }
        if let Ok(idx) = ModelIndex::new(m.clone(), k_dim) {
            out.push(idx);
        }
    }
    out
}

/// Indices `m = 1, ..., count` for `l = 1`.
pub fn positive_indices(count: i64, k_dim: usize) -> Vec<ModelIndex> {
    (1..=count).map(|m| ModelIndex { m: vec![m], k_dim }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QuadratureSpec {
    /// Gauss-Hermite nodes per spatial axis.
    pub hermite_nodes: usize,
    /// Equispaced nodes per angle.
    pub fourier_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { hermite_nodes: 64, fourier_nodes: 24 }
    }
}

impl QuadratureSpec {
    /// Thresholds below which the quadrature is not exact on `indices`.
    pub fn warnings(&self, indices: &[ModelIndex]) -> Vec<String> {
        let mut out = Vec::new();
        if self.hermite_nodes < 20 {
            out.push(format!("hermite_nodes = {} is below 20", self.hermite_nodes));
        }
        let max_m = indices.iter().flat_map(|i| i.m.iter()).map(|x| x.unsigned_abs()).max().unwrap_or(0);
        if (self.fourier_nodes as u64) < 4 * max_m {
            out.push(format!("fourier_nodes = {} is below 4 max|m| = {}", self.fourier_nodes, 4 * max_m));
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.hermite_nodes == 0 || self.fourier_nodes == 0 {
            return Err(Error::InvalidInput("quadrature needs at least one node per axis".into()));
        }
        Ok(())
    }
}

/// Whether `f_m` carries its normalization constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Unit,
    /// Negative control: the bare `e^{-|y|^2 |m| / 2} e^{i m theta}`.
    Dropped,
}

impl Normalization {
    fn constant(self, idx: &ModelIndex) -> f64 {
        match self {
            Self::Unit => idx.normalization(),
            Self::Dropped => 1.0,
        }
    }
}

fn check_point(idx: &ModelIndex, y: &[f64], theta: &[f64]) -> Result<()> {
    if y.len() != idx.k_dim || theta.len() != idx.l() {
        return Err(Error::InvalidInput(format!(
            "point has dimensions ({}, {}), index expects ({}, {})",
            y.len(),
            theta.len(),
            idx.k_dim,
            idx.l()
        )));
    }
    Ok(())
}

fn fm_raw(idx: &ModelIndex, c: f64, y: &[f64], theta: &[f64]) -> Complex64 {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let phase: f64 = idx.m.iter().zip(theta).map(|(&m, &t)| m as f64 * t).sum();
    Complex64::from_polar(c * (-r2 * idx.norm() / 2.0).exp(), phase)
}

/// `f_m(y, theta)`.
pub fn fm_eval(idx: &ModelIndex, y: &[f64], theta: &[f64]) -> Result<Complex64> {
    ModelIndex::new(idx.m.clone(), idx.k_dim)?;
    check_point(idx, y, theta)?;
    Ok(fm_raw(idx, idx.normalization(), y, theta))
}

/// Nodes and weights of the `nodes`-point Gauss-Hermite rule for the weight
/// `e^{-x^2}`: Jacobi-matrix eigenvalues, polished by Newton steps on the
/// orthonormal Hermite polynomial, with Christoffel weights.
pub fn gauss_hermite(nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if nodes == 0 {
        return Err(Error::InvalidInput("Gauss-Hermite needs at least one node".into()));
    }
    let jacobi = DMatrix::from_fn(nodes, nodes, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::try_new(jacobi, f64::EPSILON, 1000 + 100 * nodes)
        .ok_or(Error::EigenNonConvergence { k: nodes as u64 })?;
    let mut x: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    x.sort_by(f64::total_cmp);
    for xi in &mut x {
        for _ in 0..3 {
            let (p, prev, _) = hermite_orthonormal(nodes, *xi);
            let dp = (2.0 * nodes as f64).sqrt() * prev;
            if dp != 0.0 {
                *xi -= p / dp;
            }
        }
    }
    // Symmetrize the rule about the origin.
    let x: Vec<f64> = (0..nodes).map(|i| (x[i] - x[nodes - 1 - i]) / 2.0).collect();
    let w = x.iter().map(|&xi| 1.0 / hermite_orthonormal(nodes, xi).2).collect();
    Ok((x, w))
}

/// `(p_n(x), p_{n-1}(x), sum_{j<n} p_j(x)^2)` for the Hermite polynomials
/// orthonormal under `e^{-x^2}`.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    let mut sum = 0.0;
    for j in 0..n {
        sum += cur * cur;
        let next = x * (2.0 / (j + 1) as f64).sqrt() * cur - (j as f64 / (j + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev, sum)
}

/// Tensor-product quadrature on `R^k x T^l`.
struct Grid {
    /// Spatial points with weights including the `e^{x^2}` correction.
    y: Vec<(Vec<f64>, f64)>,
    theta: Vec<(Vec<f64>, f64)>,
}

impl Grid {
    fn new(k_dim: usize, l: usize, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let (x, w) = gauss_hermite(quad.hermite_nodes)?;
        let axis: Vec<(f64, f64)> = x.iter().zip(&w).map(|(&x, &w)| (x, w * (x * x).exp())).collect();
        let y = tensor(&axis, k_dim);
        let step = 2.0 * PI / quad.fourier_nodes as f64;
        let angles: Vec<(f64, f64)> = (0..quad.fourier_nodes).map(|j| (j as f64 * step, step)).collect();
        let theta = tensor(&angles, l);
        Ok(Self { y, theta })
    }

    fn len(&self) -> usize {
        self.y.len() * self.theta.len()
    }
}

fn tensor(axis: &[(f64, f64)], dim: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::with_capacity(dim), 1.0)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|(p, w)| {
                axis.iter().map(move |&(x, wx)| {
                    let mut q = p.clone();
                    q.push(x);
                    (q, w * wx)
                })
            })
            .collect();
    }
    out
}

fn common_shape(indices: &[ModelIndex]) -> Result<Option<(usize, usize)>> {
    let Some(first) = indices.first() else { return Ok(None) };
    let shape = (first.k_dim, first.l());
    for (i, idx) in indices.iter().enumerate() {
        ModelIndex::new(idx.m.clone(), idx.k_dim)?;
        if (idx.k_dim, idx.l()) != shape {
            return Err(Error::InvalidInput("indices disagree on (k, l)".into()));
        }
        if indices[..i].contains(idx) {
            return Err(Error::InvalidInput(format!("index {:?} repeated", idx.m)));
        }
    }
    Ok(Some(shape))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub matrix: DMatrix<Complex64>,
    pub warnings: Vec<String>,
}

/// `<f_a, f_b>` by separate Gauss-Hermite and angular sums.
pub fn gram_matrix(indices: &[ModelIndex], quad: &QuadratureSpec) -> Result<GramMatrix> {
    gram_matrix_with(indices, quad, Normalization::Unit)
}

pub fn gram_matrix_with(indices: &[ModelIndex], quad: &QuadratureSpec, norm: Normalization) -> Result<GramMatrix> {
    let warnings = quad.warnings(indices);
    let Some((k_dim, l)) = common_shape(indices)? else {
        return Ok(GramMatrix { matrix: DMatrix::zeros(0, 0), warnings });
    };
    let grid = Grid::new(k_dim, l, quad)?;
    let size = indices.len();
    let entries: Vec<Complex64> = (0..size * size)
        .into_par_iter()
        .map(|p| {
            let (a, b) = (&indices[p % size], &indices[p / size]);
            let sigma = (a.norm() + b.norm()) / 2.0;
            let radial: f64 = grid
                .y
                .iter()
                .map(|(y, w)| w * (-sigma * y.iter().map(|v| v * v).sum::<f64>()).exp())
                .sum();
            let angular: Complex64 = grid
                .theta
                .iter()
                .map(|(t, w)| {
                    let phase: f64 = a.m.iter().zip(&b.m).zip(t).map(|((&x, &y), &t)| (x - y) as f64 * t).sum();
                    Complex64::from_polar(*w, phase)
                })
                .sum();
            angular * (radial * norm.constant(a) * norm.constant(b))
        })
        .collect();
    Ok(GramMatrix { matrix: DMatrix::from_vec(size, size, entries), warnings })
}

/// One matrix entry beyond tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exceedance {
    pub matrix: &'static str,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Largest number of exceedances itemized per matrix.
pub const MAX_ITEMIZED: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsometryReport {
    pub indices: Vec<Vec<i64>>,
    pub quad: QuadratureSpec,
    pub normalization: Normalization,
    pub tolerance: f64,
    /// `max |(R^t R)_{ab}|`, `a != b`.
    pub max_gram_offdiag: f64,
    /// `max |R^t R - I|`.
    pub max_isometry_defect: f64,
    /// `max |(R R^t)^2 - R R^t|`.
    pub max_idempotency_defect: f64,
    /// `max |R R^t - (R R^t)^*|`.
    pub max_selfadjoint_defect: f64,
    pub exceedances: Vec<Exceedance>,
    pub exceedance_count: usize,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl IsometryReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

pub fn check_isometry(indices: &[ModelIndex], quad: &QuadratureSpec) -> Result<IsometryReport> {
    check_isometry_with(indices, quad, Normalization::Unit, DEFAULT_TOLERANCE)
}

/// Idempotency and self-adjoint defects of one row, with itemized entries.
type RowDefects = (f64, f64, Vec<(usize, f64)>);

/// Discretizes `R` on the quadrature grid and checks the two identities.
pub fn check_isometry_with(
    indices: &[ModelIndex],
    quad: &QuadratureSpec,
    norm: Normalization,
    tolerance: f64,
) -> Result<IsometryReport> {
    let warnings = quad.warnings(indices);
    let mut report = IsometryReport {
        indices: indices.iter().map(|i| i.m.clone()).collect(),
        quad: *quad,
        normalization: norm,
        tolerance,
        max_gram_offdiag: 0.0,
        max_isometry_defect: 0.0,
        max_idempotency_defect: 0.0,
        max_selfadjoint_defect: 0.0,
        exceedances: Vec::new(),
        exceedance_count: 0,
        warnings,
        pass: true,
    };
    let Some((k_dim, l)) = common_shape(indices)? else { return Ok(report) };
    let grid = Grid::new(k_dim, l, quad)?;
    if grid.len() > MAX_QUADRATURE_POINTS {
        return Err(Error::InvalidInput(format!(
            "{} quadrature points exceed {MAX_QUADRATURE_POINTS}",
            grid.len()
        )));
    }
    // Row q of R is sqrt(w_q) f_m(x_q) over the indices m.
    let points: Vec<(&[f64], &[f64], f64)> = grid
        .y
        .iter()
        .flat_map(|(y, wy)| grid.theta.iter().map(move |(t, wt)| (y.as_slice(), t.as_slice(), wy * wt)))
        .collect();
    let consts: Vec<f64> = indices.iter().map(|i| norm.constant(i)).collect();
    let size = indices.len();
    let r = DMatrix::from_fn(points.len(), size, |q, a| {
        let (y, t, w) = points[q];
        fm_raw(&indices[a], consts[a], y, t) * w.sqrt()
    });
    let rtr = r.adjoint() * &r;
    let record = |report: &mut IsometryReport, matrix: &'static str, row: usize, col: usize, value: f64| {
        if value > tolerance {
            report.exceedance_count += 1;
            if report.exceedances.len() < MAX_ITEMIZED {
                report.exceedances.push(Exceedance { matrix, row, col, value });
            }
        }
    };
    for b in 0..size {
        for a in 0..size {
            let defect = (rtr[(a, b)] - if a == b { 1.0 } else { 0.0 }).norm();
            report.max_isometry_defect = report.max_isometry_defect.max(defect);
            if a != b {
                report.max_gram_offdiag = report.max_gram_offdiag.max(rtr[(a, b)].norm());
            }
            record(&mut report, "RtR-I", a, b, defect);
        }
    }

    // (R R^*)^2 = (R (R^* R)) R^*, compared entrywise against R R^*.
    let rg = &r * &rtr;
    let rows: Vec<RowDefects> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut idem = 0.0f64;
            let mut adj = 0.0f64;
            let mut bad = Vec::new();
            for j in 0..points.len() {
                let mut p = Complex64::new(0.0, 0.0);
                let mut pt = Complex64::new(0.0, 0.0);
                let mut p2 = Complex64::new(0.0, 0.0);
                for a in 0..size {
                    p += r[(i, a)] * r[(j, a)].conj();
                    pt += r[(j, a)] * r[(i, a)].conj();
                    p2 += rg[(i, a)] * r[(j, a)].conj();
                }
                let d = (p2 - p).norm();
                idem = idem.max(d);
                adj = adj.max((p - pt.conj()).norm());
                if d > tolerance {
                    bad.push((j, d));
                }
            }
            (idem, adj, bad)
        })
        .collect();
    for (i, (idem, adj, bad)) in rows.into_iter().enumerate() {
        report.max_idempotency_defect = report.max_idempotency_defect.max(idem);
        report.max_selfadjoint_defect = report.max_selfadjoint_defect.max(adj);
        for (j, d) in bad {
            record(&mut report, "(RRt)^2-RRt", i, j, d);
        }
        if adj > tolerance {
            record(&mut report, "RRt-(RRt)^*", i, i, adj);
        }
    }
    report.pass = report.exceedance_count == 0;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// `(f(y+h) - f(y-h)) / 2h`, error `O(h^2)`.
    Central,
    /// Five-point rule, error `O(h^4)`.
    FivePoint,
}

/// `max |(d/dy_j + y_j |m|) f_m|` over a grid of `y` in `[-radius, radius]^k`
/// and all axes `j`, derivatives by finite differences.
pub fn annihilation_residual(idx: &ModelIndex, step: f64, stencil: Stencil, radius: f64, samples: usize) -> Result<f64> {
    ModelIndex::new(idx.m.clone(), idx.k_dim)?;
    if !(step > 0.0) || samples < 2 {
        return Err(Error::InvalidInput("residual needs a positive step and two samples".into()));
    }
    let theta: Vec<f64> = (0..idx.l()).map(|i| 0.3 + 0.7 * i as f64).collect();
    let axis: Vec<(f64, f64)> = (0..samples)
        .map(|i| (-radius + 2.0 * radius * i as f64 / (samples - 1) as f64, 1.0))
        .collect();
    let c = idx.normalization();
    let f = |y: &[f64]| fm_raw(idx, c, y, &theta);
    let worst = tensor(&axis, idx.k_dim)
        .par_iter()
        .map(|(y, _)| {
            let mut worst = 0.0f64;
            for j in 0..idx.k_dim {
                let shifted = |s: f64| {
                    let mut p = y.clone();
                    p[j] += s * step;
                    f(&p)
                };
                let dy = match stencil {
                    Stencil::Central => (shifted(1.0) - shifted(-1.0)) / (2.0 * step),
                    Stencil::FivePoint => {
                        (shifted(-2.0) - shifted(-1.0) * 8.0 + shifted(1.0) * 8.0 - shifted(2.0)) / (12.0 * step)
                    }
                };
                worst = worst.max((dy + f(y) * (y[j] * idx.norm())).norm());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(m: i64) -> ModelIndex {
        ModelIndex::new(vec![m], 1).unwrap()
    }

    #[test]
    fn zero_index_is_rejected() {
        assert!(matches!(ModelIndex::new(vec![0, 0], 1), Err(Error::ZeroModelIndex)));
        assert!(ModelIndex::new(vec![], 1).is_err());
        let fake = ModelIndex { m: vec![0], k_dim: 1 };
        assert!(fm_eval(&fake, &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn value_at_origin() {
        // int e^{-3 y^2} dy = sqrt(pi / 3) fixes the constant.
        let v = fm_eval(&idx(3), &[0.0], &[0.0]).unwrap();
        let expect = (3.0 / PI).powf(0.25) / (2.0 * PI).sqrt();
        assert!((v.re - expect).abs() < 1e-15 && v.im == 0.0);
        let norm_sq = expect * expect * (PI / 3.0).sqrt() * 2.0 * PI;
        assert!((norm_sq - 1.0).abs() < 1e-14);
    }

    #[test]
    fn angular_average_vanishes() {
        for m in [1, -2, 5] {
            let n = 64;
            let avg: Complex64 = (0..n)
                .map(|j| fm_eval(&idx(m), &[0.4], &[2.0 * PI * j as f64 / n as f64]).unwrap())
                .sum::<Complex64>()
                / n as f64;
            assert!(avg.norm() < 1e-15);
        }
        let two = ModelIndex::new(vec![1, -1], 2).unwrap();
        let avg: Complex64 = (0..16)
            .flat_map(|a| (0..16).map(move |b| (a, b)))
            .map(|(a, b)| {
                let t = [2.0 * PI * a as f64 / 16.0, 2.0 * PI * b as f64 / 16.0];
                fm_eval(&two, &[0.1, -0.3], &t).unwrap()
            })
            .sum();
        assert!(avg.norm() < 1e-14);
    }

    #[test]
    fn hermite_rule_integrates_even_moments() {
        let (x, w) = gauss_hermite(20).unwrap();
        for p in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * p)).sum();
            // Gamma(p + 1/2) = (2p - 1)!! sqrt(pi) / 2^p
            let exact = (1..=p).fold(PI.sqrt(), |acc, j| acc * (2 * j - 1) as f64 / 2.0);
            assert!((q - exact).abs() <= 1e-12 * exact, "p={p}: {q} vs {exact}");
        }
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(x[0], -x[19]);
    }

    #[test]
    fn gram_examples() {
        let q = QuadratureSpec::default();
        let g = gram_matrix(&positive_indices(3, 1), &q).unwrap();
        assert!(g.warnings.is_empty());
        for a in 0..3 {
            for b in 0..3 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((g.matrix[(a, b)] - e).norm() < 1e-8, "{a},{b}: {}", g.matrix[(a, b)]);
            }
        }
        let single = gram_matrix(&[idx(2)], &q).unwrap();
        assert!((single.matrix[(0, 0)] - 1.0).norm() < 1e-10);
        let pm = gram_matrix(&[idx(1), idx(-1)], &q).unwrap();
        assert!(pm.matrix[(0, 1)].norm() < 1e-15);
        assert!((pm.matrix[(1, 1)] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn offdiagonal_is_exact_with_coarse_hermite() {
        let q = QuadratureSpec { hermite_nodes: 6, fourier_nodes: 11 };
        let g = gram_matrix(&positive_indices(5, 1), &q).unwrap();
        assert!(!g.warnings.is_empty());
        for a in 0..5 {
            for b in 0..5 {
                if a != b {
                    assert!(g.matrix[(a, b)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn diagonal_converges_fast_in_hermite_nodes() {
        let defect = |nodes| {
            let q = QuadratureSpec { hermite_nodes: nodes, fourier_nodes: 24 };
            (gram_matrix(&[idx(5)], &q).unwrap().matrix[(0, 0)] - 1.0).norm()
        };
        let d: Vec<f64> = [16, 32, 48].into_iter().map(defect).collect();
        // Each doubling-scale step gains more than any fixed power would.
        assert!(d[1] < d[0] * 1e-2 && d[2] < d[1] * 1e-2, "{d:?}");
    }

    #[test]
    fn isometry_passes_and_negative_control_fails() {
        let q = QuadratureSpec::default();
        let r = check_isometry(&positive_indices(5, 1), &q).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.max_isometry_defect < 1e-8 && r.max_idempotency_defect < 1e-8);
        let json = r.to_json();
        for key in ["max_gram_offdiag", "max_idempotency_defect", "quad"] {
            assert!(json.get(key).is_some());
        }

        let broken = check_isometry_with(&positive_indices(5, 1), &q, Normalization::Dropped, DEFAULT_TOLERANCE).unwrap();
        assert!(!broken.pass);
        assert!(broken.exceedances.iter().any(|e| e.matrix == "RtR-I" && e.row == e.col));
        // Without the constant, ||f_m||^2 = 2 pi sqrt(pi / m).
        let g = gram_matrix_with(&[idx(2)], &q, Normalization::Dropped).unwrap();
        assert!((g.matrix[(0, 0)].re - 2.0 * PI * (PI / 2.0).sqrt()).abs() < 1e-9);

        let empty = check_isometry(&[], &q).unwrap();
        assert!(empty.pass && empty.exceedances.is_empty());
    }

    #[test]
    fn two_dimensional_model() {
        let indices = truncation_box(2, 2, 1);
        assert_eq!(indices.len(), 8);
        let q = QuadratureSpec { hermite_nodes: 16, fourier_nodes: 4 };
        let r = check_isometry(&indices, &q).unwrap();
        assert!(r.max_gram_offdiag < 1e-12);
        assert!(r.pass, "{:?}", r.exceedances);
    }

    #[test]
    fn annihilation_residual_is_second_order() {
        let r = |h| annihilation_residual(&idx(2), h, Stencil::Central, 4.0, 801).unwrap();
        let (a, b) = (r(1e-2), r(5e-3));
        assert!((a / b - 4.0).abs() < 0.05, "{a} {b}");
        for m in 1..=5 {
            let five = annihilation_residual(&idx(m), 1e-3, Stencil::FivePoint, 4.0, 801).unwrap();
            assert!(five < 1e-10);
        }
        let two = ModelIndex::new(vec![1, 2], 2).unwrap();
        assert!(annihilation_residual(&two, 1e-3, Stencil::FivePoint, 3.0, 41).unwrap() < 1e-10);
    }
}
