//! Equivariant spectra on subtorus weight-space fibers.
//!
//! For a subtorus `G` with weight matrix `Bt` and a weight `alpha`, the space
//! of weight `k alpha` is spanned by the monomials `z^beta` with
//! `Bt beta = k alpha`. Each is an eigenvector of `Pi M_F Pi` for an invariant
//! symbol `F`, so the spectrum is labelled by lattice points.

use std::collections::HashSet;
use std::io::Write;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy_sphere::{invariant_eigenvalue, InvariantSymbol};
use crate::multiindex::{determinant, enumerate_fiber, to_big, MultiIndex, SubtorusData};
use crate::reduction::{batch_rng, calibrate_fiber_volume, pairwise, Moments, MC_BATCH};
use crate::spectral::{scaled_measure, TestFunction};

/// Outcome of the freeness test at one vertex of `P_alpha`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexCheck {
    /// Vertex coordinates as exact fractions.
    pub vertex: Vec<String>,
    /// Coordinates that are nonzero at the vertex.
    pub support: Vec<usize>,
    /// Determinant of the columns of `Bt` on the support, when square.
    pub minor: Option<i64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreenessReport {
    pub vertices: Vec<VertexCheck>,
    pub pass: bool,
}

impl FreenessReport {
    pub fn failures(&self) -> impl Iterator<Item = &VertexCheck> {
        self.vertices.iter().filter(|v| !v.pass)
    }
}

/// Vertex-level proxy for "alpha is regular and `G` acts freely": at every
/// vertex the support columns of `Bt` must form a `d x d` minor of absolute
/// value 1. A larger minor is a finite stabilizer; a smaller support means
/// `alpha` is not a regular value.
pub fn regular_free_check(sub: &SubtorusData) -> Result<FreenessReport> {
    sub.validate()?;
    let vertices = sub.polytope_vertices()?;
    let big = to_big(&sub.bt);
    let checks: Vec<VertexCheck> = vertices
        .iter()
        .map(|v| {
            let support: Vec<usize> = (0..sub.n).filter(|&j| v[j].is_positive()).collect();
            let minor = (support.len() == sub.d).then(|| {
                let sq: Vec<Vec<_>> = big
                    .iter()
                    .map(|row| support.iter().map(|&c| row[c].clone()).collect())
                    .collect();
                determinant(&sq).to_i64().unwrap_or(i64::MAX)
            });
            VertexCheck {
                vertex: v.iter().map(ToString::to_string).collect(),
                support,
                minor,
                pass: minor.is_some_and(|m| m.abs() == 1),
            }
        })
        .collect();
    let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
    Ok(FreenessReport { vertices: checks, pass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumEntry {
    pub beta: MultiIndex,
    pub exact: BigRational,
    pub lambda: f64,
}

/// Eigenvalues of `Pi M_F Pi` labelled by the lattice points of one fiber.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivariantSpectrum {
    pub sub: SubtorusData,
    pub k: u64,
    pub entries: Vec<SpectrumEntry>,
}

impl EquivariantSpectrum {
    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    /// Eigenvalue at the lattice point `beta`, if it lies in the fiber.
    pub fn lambda_at(&self, beta: &MultiIndex) -> Option<f64> {
        self.entries
            .binary_search_by(|e| e.beta.cmp(beta))
            .ok()
            .map(|i| self.entries[i].lambda)
    }

    /// Rows `k, beta_0, ..., beta_{n-1}, lambda` with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string()];
        header.extend((0..self.sub.n).map(|j| format!("beta_{j}")));
        header.push("lambda".into());
        w.write_record(&header)?;
        for e in &self.entries {
            let mut row = vec![self.k.to_string()];
            row.extend(e.beta.entries().iter().map(ToString::to_string));
            row.push(e.lambda.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn equivariant_spectrum(sub: &SubtorusData, k: u64, symbol: &InvariantSymbol) -> Result<EquivariantSpectrum> {
    if symbol.n() != sub.n {
        return Err(Error::InvalidInput(format!(
            "symbol lives on C^{} but the subtorus acts on C^{}",
            symbol.n(),
            sub.n
        )));
    }
    let fiber = enumerate_fiber(sub, k)?;
    let entries = fiber
        .into_par_iter()
        .map(|beta| {
            let exact = invariant_eigenvalue(symbol, &beta)?;
            let lambda = exact.to_f64().ok_or(Error::Overflow("eigenvalue to f64"))?;
            Ok(SpectrumEntry { beta, exact, lambda })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivariantSpectrum { sub: sub.clone(), k, entries })
}

/// `sum_beta f(lambda_beta)`.
pub fn fiber_measure(spec: &EquivariantSpectrum, f: &TestFunction) -> f64 {
    spec.entries.iter().map(|e| f.eval(e.lambda)).sum()
}

/// `(2 pi / k)^{n-d} sum_beta f(lambda_beta)`.
pub fn scaled_fiber_measure(spec: &EquivariantSpectrum, f: &TestFunction) -> f64 {
    scaled_measure(fiber_measure(spec, f), (spec.sub.n - spec.sub.d) as u32, spec.k)
}

/// Exact check that the fiber basis is multiplicity free: no repeated
/// lattice point, and any two distinct points differ by a nonzero element
/// of `ker Bt`, so their relative weights under the quotient torus differ.
pub fn check_multiplicity_free(spec: &EquivariantSpectrum) -> Result<()> {
    let mut seen = HashSet::new();
    for e in &spec.entries {
        if !seen.insert(&e.beta) {
            return Err(Error::InvalidInput(format!("lattice point {:?} repeated", e.beta)));
        }
    }
    let sub = &spec.sub;
    let betas: Vec<Vec<i64>> = spec
        .entries
        .iter()
        .map(|e| e.beta.entries().iter().map(|&x| i64::from(x)).collect())
        .collect();
    for (i, a) in betas.iter().enumerate() {
        for b in &betas[i + 1..] {
            let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            if diff.iter().all(|&x| x == 0) {
                return Err(Error::InvalidInput(format!("equal relative weight {a:?}")));
            }
            for row in &sub.bt {
                let w = row
                    .iter()
                    .zip(&diff)
                    .try_fold(0i64, |acc, (&r, &x)| r.checked_mul(x).and_then(|t| acc.checked_add(t)))
                    .ok_or(Error::Overflow("relative weight"))?;
                if w != 0 {
                    return Err(Error::InvalidInput(format!(
                        "points {a:?} and {b:?} carry different G-weights"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Reference value for the leading term of the scaled fiber measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeadingReference {
    /// `V_alpha` times the polytope average of `f(g(x / sum x))`.
    pub value: f64,
    pub stderr: f64,
    /// Calibrated reduced volume `V_alpha`.
    pub volume: f64,
    /// Polytope average alone; the ratio-form reference.
    pub average: f64,
    /// Fraction of accepted proposals in the rejection sampler.
    pub efficiency: f64,
}

/// Lowest acceptance rate tolerated by the polytope sampler.
pub const MIN_EFFICIENCY: f64 = 1e-4;

/// Options for [`theorem2_leading`].
#[derive(Clone, Debug, PartialEq)]
pub struct LeadingOptions {
    pub samples: usize,
    pub seed: u64,
    /// `k` values used to extrapolate `V_alpha` from lattice counts.
    pub volume_ks: Vec<u64>,
}

impl Default for LeadingOptions {
    fn default() -> Self {
        LeadingOptions {
            samples: 1 << 20,
            seed: 0,
            volume_ks: vec![8, 16, 24, 32, 48, 64, 96],
        }
    }
}

/// `int_{Sigma_alpha} f(p_alpha) dsigma`, as `V_alpha` times the uniform
/// average over `P_alpha = {x >= 0 : Bt x = alpha}` of `f(g(x / sum x))`.
pub fn theorem2_leading(sub: &SubtorusData, symbol: &InvariantSymbol, f: &TestFunction, opts: &LeadingOptions) -> Result<LeadingReference> {
    let report = regular_free_check(sub)?;
    if !report.pass {
        let bad: Vec<String> = report
            .failures()
            .map(|v| format!("{:?} (minor {:?})", v.vertex, v.minor))
            .collect();
        return Err(Error::InvalidInput(format!(
            "alpha is not a regular free value; failing vertices: {}",
            bad.join(", ")
        )));
    }
    if symbol.n() != sub.n {
        return Err(Error::InvalidInput("symbol and subtorus dimensions differ".into()));
    }
    let volume = calibrate_fiber_volume(sub, &opts.volume_ks)?;
    let vertices: Vec<Vec<f64>> = sub
        .polytope_vertices()?
        .iter()
        .map(|v| v.iter().map(|x| x.to_f64().expect("small rational")).collect())
        .collect();
    let g = |x: &[f64]| {
        let s: f64 = x.iter().sum();
        let a: Vec<f64> = x.iter().map(|v| v / s).collect();
        f.eval(symbol.eval(&a))
    };

    let dim = sub.n - sub.d;
    if dim == 0 {
        let v = g(&vertices[0]);
        return Ok(LeadingReference { value: volume * v, stderr: 0.0, volume, average: v, efficiency: 1.0 });
    }

    let sampler = PolytopeSampler::new(sub, &vertices);
    let (moments, efficiency) = sampler.average(opts.samples, opts.seed, g)?;
    Ok(LeadingReference {
        value: volume * moments.mean(),
        stderr: volume * moments.stderr(),
        volume,
        average: moments.mean(),
        efficiency,
    })
}

/// Uniform sampler on `P_alpha`: `x = x0 + N t` with `N` an orthonormal basis
/// of `ker Bt`, `t` drawn from the bounding box of the vertex images, and
/// proposals outside `x >= 0` rejected. The map is an isometry, so accepted
/// points are uniform for the induced Lebesgue measure.
struct PolytopeSampler {
    origin: Vec<f64>,
    kernel: DMatrix<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl PolytopeSampler {
    fn new(sub: &SubtorusData, vertices: &[Vec<f64>]) -> Self {
        let n = sub.n;
        let bt = DMatrix::from_fn(sub.d, n, |r, c| sub.bt[r][c] as f64);
        // Eigenvectors of Bt^T Bt for the n - d zero eigenvalues span ker Bt.
        let gram = bt.transpose() * &bt;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let dim = n - sub.d;
        let kernel = DMatrix::from_fn(n, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        let origin = vertices[0].clone();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for v in vertices {
            for c in 0..dim {
                let t: f64 = (0..n).map(|r| kernel[(r, c)] * (v[r] - origin[r])).sum();
                lo[c] = lo[c].min(t);
                hi[c] = hi[c].max(t);
            }
        }
        PolytopeSampler { origin, kernel, lo, hi }
    }

    fn average(&self, samples: usize, seed: u64, g: impl Fn(&[f64]) -> f64 + Sync) -> Result<(Moments, f64)> {
        let n = self.origin.len();
        let dim = self.lo.len();
        let batches = samples.div_ceil(MC_BATCH);
        let max_proposals = (MC_BATCH as f64 / MIN_EFFICIENCY) as u64;
        let parts: Vec<(Moments, u64)> = (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = batch_rng(seed, b as u64);
                let want = MC_BATCH.min(samples - b * MC_BATCH) as u64;
                let mut m = Moments::default();
                let mut proposals = 0u64;
                let mut t = vec![0.0; dim];
                let mut x = vec![0.0; n];
                while m.count < want && proposals < max_proposals {
                    proposals += 1;
                    for (c, slot) in t.iter_mut().enumerate() {
                        *slot = self.lo[c] + (self.hi[c] - self.lo[c]) * rng.random::<f64>();
                    }
                    for (r, slot) in x.iter_mut().enumerate() {
                        *slot = self.origin[r] + (0..dim).map(|c| self.kernel[(r, c)] * t[c]).sum::<f64>();
                    }
                    if x.iter().any(|&v| v < 0.0) {
                        continue;
                    }
                    let v = g(&x);
                    m.count += 1;
                    m.sum += v;
                    m.sum_sq += v * v;
                }
                (m, proposals)
            })
            .collect();
        let accepted: u64 = parts.iter().map(|p| p.0.count).sum();
        let proposals: u64 = parts.iter().map(|p| p.1).sum();
        let efficiency = accepted as f64 / proposals.max(1) as f64;
        if efficiency < MIN_EFFICIENCY || accepted == 0 {
            return Err(Error::RejectionEfficiency { efficiency, floor: MIN_EFFICIENCY });
        }
        let moments: Vec<Moments> = parts.into_iter().map(|p| p.0).collect();
        Ok((pairwise(&moments), efficiency))
    }
}

/// Shipped subtorus examples: the diagonal circles in `T^2` and `T^3`,
/// `CP^1 x CP^1`, a weighted circle with a `Z/2` orbifold point, and the full
/// torus `T^3` at a strictly positive weight.
pub fn shipped_examples() -> Vec<(&'static str, SubtorusData)> {
    vec![
        ("diagonal_circle_2", SubtorusData::diagonal_circle(2)),
        ("diagonal_circle_3", SubtorusData::diagonal_circle(3)),
        ("cp1_cross_cp1", SubtorusData::cp1_cross_cp1()),
        (
            "weighted_circle_1_2",
            SubtorusData::new(vec![vec![1, 2]], vec![2]).expect("valid data"),
        ),
        ("full_torus_3", SubtorusData::full_torus(vec![1, 2, 3])),
    ]
}

/// The lattice point `k alpha` of a full-torus fiber, if `alpha` is non-negative.
pub fn single_point_fiber(alpha: &[i64], k: u64) -> Option<MultiIndex> {
    alpha
        .iter()
        .map(|&a| u32::try_from(a).ok().and_then(|a| a.checked_mul(u32::try_from(k).ok()?)))
        .collect::<Option<Vec<u32>>>()
        .map(MultiIndex::new)
}
