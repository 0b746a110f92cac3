//! Classical-side reference values: the moment map of the torus action,
//! reduced-space integrals `c_0(f)` computed without any spectrum, and the
//! calibration of reduced volumes against dimension counts.
//!
//! The reduced volume of the full-sphere reduction `CP^{n-1}` is fixed by
//! matching the leading term of `(2 pi / k)^{n-1} dim H^2_k`, which gives
//! `(2 pi)^{n-1} / (n-1)!`. No symplectic volume is computed a priori.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy_sphere::{InvariantSymbol, SymbolPoly};
use crate::multiindex::{binomial, fiber_count_growth, SubtorusData};
use crate::spectral::{fit_expansion, TestFunction};

/// Samples drawn per independent random stream.
pub const MC_BATCH: usize = 1 << 16;

/// Minimum sample count accepted by [`c0_sphere_mc`].
pub const MC_MIN_SAMPLES: usize = 10_000;

/// `(|z_1|^2, ..., |z_n|^2)`.
pub fn moment_map(z: &[Complex64]) -> Vec<f64> {
    z.iter().map(|w| w.norm_sqr()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReducedKind {
    /// `Sigma_red = CP^{n-1}`, reduction by the diagonal circle.
    FullSphere,
    /// `Sigma_alpha` for a subtorus.
    ToricFiber(SubtorusData),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSpaceSpec {
    pub kind: ReducedKind,
    pub n: usize,
    pub sigma_volume: f64,
}

impl ReducedSpaceSpec {
    /// Full-sphere reduction with the closed-form calibrated volume.
    pub fn full_sphere(n: usize) -> Self {
        assert!(n >= 1, "n must be positive");
        ReducedSpaceSpec {
            kind: ReducedKind::FullSphere,
            n,
            sigma_volume: sphere_sigma_volume(n),
        }
    }

    /// Full-sphere reduction with the volume extrapolated from dimension counts.
    pub fn full_sphere_calibrated(n: usize, ks: &[u64]) -> Result<Self> {
        Ok(ReducedSpaceSpec {
            kind: ReducedKind::FullSphere,
            n,
            sigma_volume: calibrate_volume(n, ks)?,
        })
    }

    /// Toric fiber with the volume extrapolated from lattice counts.
    pub fn toric_fiber(sub: &SubtorusData, ks: &[u64]) -> Result<Self> {
        Ok(ReducedSpaceSpec {
            kind: ReducedKind::ToricFiber(sub.clone()),
            n: sub.n,
            sigma_volume: calibrate_fiber_volume(sub, ks)?,
        })
    }

    /// Half the real dimension of the reduced space.
    pub fn half_dim(&self) -> u32 {
        match &self.kind {
            ReducedKind::FullSphere => self.n as u32 - 1,
            ReducedKind::ToricFiber(sub) => (sub.n - sub.d) as u32,
        }
    }
}

/// `(2 pi)^{n-1} / (n-1)!`.
pub fn sphere_sigma_volume(n: usize) -> f64 {
    (1..n).fold(1.0, |acc, j| acc * 2.0 * PI / j as f64)
}

fn check_decade(ks: &[u64]) -> Result<()> {
    let min = ks.iter().copied().min().unwrap_or(0);
    let max = ks.iter().copied().max().unwrap_or(0);
    if min == 0 || max < 10 * min {
        return Err(Error::InvalidInput(format!(
            "k range [{min}, {max}] must span at least a decade"
        )));
    }
    Ok(())
}

/// Limit of `(2 pi / k)^{n-1} C(k+n-1, n-1)`, extrapolated from `ks`.
///
/// The scaled count is a polynomial of degree `n - 1` in `1/k`, so the fit is
/// run at that order.
pub fn calibrate_volume(n: usize, ks: &[u64]) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    check_decade(ks)?;
    let m = n as u32 - 1;
    let samples: Vec<(u64, f64)> = ks
        .iter()
        .map(|&k| {
            let count = binomial(k + n as u64 - 1, n as u64 - 1)? as f64;
            Ok((k, crate::spectral::scaled_measure(count, m, k)))
        })
        .collect::<Result<_>>()?;
    Ok(fit_expansion(&samples, m as usize)?.c0())
}

/// Limit of `(2 pi / k)^{n-d} #fiber(k)`, extrapolated from exact lattice counts.
pub fn calibrate_fiber_volume(sub: &SubtorusData, ks: &[u64]) -> Result<f64> {
    check_decade(ks)?;
    let m = (sub.n - sub.d) as u32;
    let samples: Vec<(u64, f64)> = fiber_count_growth(sub, ks)?
        .into_iter()
        .map(|(k, c)| (k, crate::spectral::scaled_measure(c as f64, m, k)))
        .collect();
    Ok(fit_expansion(&samples, m as usize)?.c0())
}

/// A symbol that can be evaluated on the sphere.
#[derive(Clone, Copy, Debug)]
pub enum SphereSymbol<'a> {
    Poly(&'a SymbolPoly),
    Invariant(&'a InvariantSymbol),
}

impl SphereSymbol<'_> {
    fn n(&self) -> usize {
        match self {
            SphereSymbol::Poly(p) => p.n(),
            SphereSymbol::Invariant(s) => s.n(),
        }
    }

    fn eval(&self, z: &[Complex64]) -> f64 {
        match self {
            SphereSymbol::Poly(p) => p.eval(z),
            SphereSymbol::Invariant(s) => s.eval_at(z),
        }
    }
}

/// Monte Carlo estimate of `c_0(f)`, emitted as `{"c0", "stderr", "samples", "seed"}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub c0: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Moments of a batch: count, sum and sum of squares.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    fn merge(self, other: Moments) -> Moments {
        Moments {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        let n = self.count as f64;
        let mean = self.mean();
        let var = ((self.sum_sq / n) - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Pairwise reduction in a fixed tree shape, independent of thread count.
pub(crate) fn pairwise(items: &[Moments]) -> Moments {
    match items.len() {
        0 => Moments::default(),
        1 => items[0],
        len => {
            let (l, r) = items.split_at(len / 2);
            pairwise(l).merge(pairwise(r))
        }
    }
}

/// Uniform point on `S^{2n-1}`: a normalised standard complex Gaussian vector.
pub fn sample_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize, out: &mut [Complex64]) {
    loop {
        let mut r2 = 0.0;
        for w in out.iter_mut().take(n) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *w = Complex64::new(re, im);
            r2 += re * re + im * im;
        }
        if r2 > 0.0 {
            let r = r2.sqrt();
            for w in out.iter_mut().take(n) {
                *w /= r;
            }
            return;
        }
    }
}

/// Random stream for batch `batch` under `seed`.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Averages `g(z)` over `samples` uniform points of `S^{2n-1}`. Batches use
/// independent streams and are reduced pairwise, so the result is
/// bit-identical for any thread count.
pub fn sphere_average(
    n: usize,
    samples: usize,
    seed: u64,
    g: impl Fn(&[Complex64]) -> f64 + Sync,
) -> Moments {
    let batches = samples.div_ceil(MC_BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, b as u64);
            let count = MC_BATCH.min(samples - b * MC_BATCH);
            let mut z = vec![Complex64::default(); n];
            let mut m = Moments::default();
            for _ in 0..count {
                sample_sphere(&mut rng, n, &mut z);
                let v = g(&z);
                m.count += 1;
                m.sum += v;
                m.sum_sq += v * v;
            }
            m
        })
        .collect();
    pairwise(&parts)
}

/// `sigma_volume(CP^{n-1})` times the sphere average of `f(F(z))`.
pub fn c0_sphere_mc(symbol: SphereSymbol<'_>, f: &TestFunction, n: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    if symbol.n() != n {
        return Err(Error::InvalidInput(format!(
            "symbol lives on C^{} but n = {n}",
            symbol.n()
        )));
    }
    if samples < MC_MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MC_MIN_SAMPLES, got: samples });
    }
    let moments = sphere_average(n, samples, seed, |z| f.eval(symbol.eval(z)));
    let vol = sphere_sigma_volume(n);
    Ok(McEstimate {
        c0: vol * moments.mean(),
        stderr: vol * moments.stderr(),
        samples: samples as u64,
        seed,
    })
}

/// `(2 pi)^{n-1} int_{Delta_{n-1}} f(g(a)) da` by the centroid rule on the
/// uniform `mesh`-fold refinement of the simplex.
pub fn c0_simplex_quad(symbol: &InvariantSymbol, f: &TestFunction, n: usize, mesh: usize) -> Result<f64> {
    if symbol.n() != n {
        return Err(Error::InvalidInput(format!(
            "symbol lives on C^{} but n = {n}",
            symbol.n()
        )));
    }
    if mesh < 8 {
        return Err(Error::InvalidInput(format!(
            "simplex mesh {mesh} is below the minimum of 8 subdivisions"
        )));
    }
    let avg = simplex_average(n, mesh, |a| f.eval(symbol.eval(a)));
    Ok(sphere_sigma_volume(n) * avg)
}

/// Average of `g` over the centroids of the `mesh^{n-1}` congruent cells of
/// the refined standard simplex `{a >= 0, sum a = 1}` in `R^n`.
///
/// Cells come from the Kuhn subdivision of the order simplex
/// `0 <= s_1 <= ... <= s_d <= 1`, mapped to the standard simplex by
/// `a_1 = s_1, a_j = s_j - s_{j-1}, a_n = 1 - s_d` (unimodular, so all cells
/// keep volume `1 / (d! mesh^d)`).
pub fn simplex_average(n: usize, mesh: usize, g: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let d = n - 1;
    if d == 0 {
        return g(&[1.0]);
    }
    let perms = permutations(d);
    let corners = nondecreasing_tuples(d, mesh);
    let parts: Vec<Moments> = corners
        .par_chunks(256)
        .map(|chunk| {
            let mut m = Moments::default();
            let mut u = vec![0.0; d];
            let mut a = vec![0.0; n];
            for corner in chunk {
                for perm in &perms {
                    // Kuhn simplex u_{perm[0]} >= ... >= u_{perm[d-1]} stays in the
                    // order region iff j+1 precedes j wherever corner[j] == corner[j+1].
                    let inside = (0..d - 1).all(|j| {
                        corner[j] != corner[j + 1] || position(perm, j + 1) < position(perm, j)
                    });
                    if !inside {
                        continue;
                    }
                    for (t, &axis) in perm.iter().enumerate() {
                        u[axis] = (d - t) as f64 / (d + 1) as f64;
                    }
                    let mut prev = 0.0;
                    for j in 0..d {
                        let s = (corner[j] as f64 + u[j]) / mesh as f64;
                        a[j] = s - prev;
                        prev = s;
                    }
                    a[d] = 1.0 - prev;
                    let v = g(&a);
                    m.count += 1;
                    m.sum += v;
                }
            }
            m
        })
        .collect();
    pairwise(&parts).mean()
}

fn position(perm: &[usize], value: usize) -> usize {
    perm.iter().position(|&p| p == value).expect("value in permutation")
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, d - 1);
            out.push(q);
        }
    }
    out
}

fn nondecreasing_tuples(d: usize, mesh: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, d: usize, mesh: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().copied().unwrap_or(0);
        for i in start..mesh {
            cur.push(i);
            rec(cur, d, mesh, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(d), d, mesh, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_map_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(moment_map(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]), vec![1.0, 0.0]);
        let v = moment_map(&[Complex64::new(s, 0.0), Complex64::new(0.0, s)]);
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
        assert_eq!(
            moment_map(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(0.0, 0.0)]),
            vec![1.0, 4.0, 0.0]
        );
    }

    #[test]
    fn kuhn_refinement_has_mesh_power_cells() {
        for d in 1..=4usize {
            for mesh in [1, 2, 3, 5] {
                let count = simplex_average_count(d + 1, mesh);
                assert_eq!(count, mesh.pow(d as u32) as u64, "d={d} mesh={mesh}");
            }
        }
    }

    fn simplex_average_count(n: usize, mesh: usize) -> u64 {
        let perms = permutations(n - 1);
        let d = n - 1;
        nondecreasing_tuples(d, mesh)
            .iter()
            .map(|c| {
                perms
                    .iter()
                    .filter(|p| (0..d - 1).all(|j| c[j] != c[j + 1] || position(p, j + 1) < position(p, j)))
                    .count() as u64
            })
            .sum()
    }

    #[test]
    fn simplex_quadrature_examples() {
        let a1 = InvariantSymbol::coordinate_power(2, 0, 1);
        let one = TestFunction::one();
        assert_eq!(c0_simplex_quad(&a1, &one, 2, 8).unwrap(), 2.0 * PI);
        let v = c0_simplex_quad(&a1, &TestFunction::identity(), 2, 64).unwrap();
        assert!((v - PI).abs() < 1e-12);
        let v = c0_simplex_quad(&a1, &TestFunction::power(2), 2, 256).unwrap();
        assert!((v - 2.0 * PI / 3.0).abs() < 1e-4);
        assert!(c0_simplex_quad(&a1, &one, 2, 7).is_err());
    }

    #[test]
    fn simplex_quadrature_is_exact_for_linear_and_converges_quadratically() {
        // int_Delta a_1 da / vol = 1/n for every n.
        for n in 2..=4 {
            let a1 = InvariantSymbol::coordinate_power(n, 0, 1);
            let v = c0_simplex_quad(&a1, &TestFunction::identity(), n, 12).unwrap();
            assert!((v - sphere_sigma_volume(n) / n as f64).abs() < 1e-12, "n={n}");
        }
        // Dirichlet moment: E[a_1^2] = 2 / (n (n + 1)) for the uniform simplex.
        let n = 3;
        let sq = InvariantSymbol::coordinate_power(n, 0, 2);
        let exact = sphere_sigma_volume(n) * 2.0 / 12.0;
        let e1 = (c0_simplex_quad(&sq, &TestFunction::identity(), n, 16).unwrap() - exact).abs();
        let e2 = (c0_simplex_quad(&sq, &TestFunction::identity(), n, 32).unwrap() - exact).abs();
        let rate = (e1 / e2).log2();
        assert!((rate - 2.0).abs() < 0.2, "observed order {rate}");
    }

    #[test]
    fn volumes_by_calibration() {
        let ks: Vec<u64> = (10..=200).step_by(10).collect();
        assert!((calibrate_volume(2, &ks).unwrap() - 2.0 * PI).abs() < 1e-9);
        assert!((calibrate_volume(3, &ks).unwrap() - 2.0 * PI * PI).abs() < 1e-8);
        assert!((calibrate_volume(1, &ks).unwrap() - 1.0).abs() < 1e-12);
        assert!(calibrate_volume(2, &[10, 20, 30]).is_err());
        let spec = ReducedSpaceSpec::full_sphere_calibrated(4, &ks).unwrap();
        assert!((spec.sigma_volume - ReducedSpaceSpec::full_sphere(4).sigma_volume).abs() < 1e-6);
        let v = calibrate_fiber_volume(&SubtorusData::cp1_cross_cp1(), &[4, 8, 16, 32, 64]).unwrap();
        assert!((v - 4.0 * PI * PI).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_examples() {
        let a1 = SymbolPoly::coordinate_density(2, 0);
        let e = c0_sphere_mc(SphereSymbol::Poly(&a1), &TestFunction::one(), 2, 20_000, 7).unwrap();
        assert_eq!(e.c0, 2.0 * PI);
        assert_eq!(e.stderr, 0.0);
        let e = c0_sphere_mc(SphereSymbol::Poly(&a1), &TestFunction::identity(), 2, 200_000, 7).unwrap();
        assert!((e.c0 - PI).abs() < 4.0 * e.stderr, "{e:?}");
        let inv = InvariantSymbol::coordinate_power(3, 0, 1);
        let e = c0_sphere_mc(SphereSymbol::Invariant(&inv), &TestFunction::identity(), 3, 200_000, 11).unwrap();
        let expect = 4.0 * PI * PI / 2.0 / 3.0;
        assert!((e.c0 - expect).abs() < 4.0 * e.stderr, "{e:?} vs {expect}");
        assert!(c0_sphere_mc(SphereSymbol::Poly(&a1), &TestFunction::one(), 2, 100, 7).is_err());
    }

    #[test]
    fn monte_carlo_is_reproducible_across_thread_counts() {
        let hop = SymbolPoly::hopping(3, 0, 2, 1.0);
        let f = TestFunction::power(2);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| c0_sphere_mc(SphereSymbol::Poly(&hop), &f, 3, 300_000, 42).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn permutation_invariance_with_matched_stream() {
        let sym = SymbolPoly::hopping(3, 0, 1, 0.5).plus(SymbolPoly::coordinate_density(3, 2));
        let perm = [1, 2, 0];
        let moved = sym.permuted(&perm);
        let f = TestFunction::power(2);
        let plain = sphere_average(3, 50_000, 3, |z| f.eval(sym.eval(z)));
        // moved(w) = sym(z) when w_j = z_{perm[j]}
        let matched = sphere_average(3, 50_000, 3, |z| {
            let mut w = [Complex64::default(); 3];
            for j in 0..3 {
                w[j] = z[perm[j]];
            }
            f.eval(moved.eval(&w))
        });
        assert!((plain.mean() - matched.mean()).abs() < 1e-14);
        let inv = InvariantSymbol::coordinate_power(3, 0, 2);
        let inv_moved = inv.permuted(&perm).unwrap();
        let a = c0_simplex_quad(&inv, &f, 3, 24).unwrap();
        let b = c0_simplex_quad(&inv_moved, &f, 3, 24).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn mc_json_shape() {
        let e = McEstimate { c0: 1.5, stderr: 0.01, samples: 10_000, seed: 9 };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"c0":1.5,"stderr":0.01,"samples":10000,"seed":9}"#
        );
    }
}
