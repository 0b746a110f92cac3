//! Reconstruction of an invariant symbol from its equivariant spectrum.
//!
//! A rational point `x = num / den` of the moment polytope is probed at the
//! weights `k` that are multiples of `den`, where `beta = (k / den) num` is a
//! lattice point of the fiber. The eigenvalue at `beta` tends to the symbol at
//! `x` as `k` grows, and the sequence is extrapolated in `1/k`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extrapolation::{extrapolate, Extrapolated, Method};
use crate::hardy_sphere::InvariantSymbol;
use crate::multiindex::{MultiIndex, SubtorusData};
use crate::toric::{equivariant_spectrum, EquivariantSpectrum};

/// Largest extrapolation order accepted by the pipeline.
pub const MAX_ORDER: usize = 3;

/// Tolerance below which two eigenvalues count as equal.
pub const DISTINGUISH_TOLERANCE: f64 = 1e-12;

/// A rational point `num / den` of a moment polytope.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GridPoint {
    pub num: Vec<u64>,
    pub den: u64,
}

impl GridPoint {
    /// The simplex point `num / |num|`.
    pub fn simplex(num: Vec<u64>) -> Result<Self> {
        let den: u64 = num.iter().sum();
        Self::new(num, den)
    }

    /// Reduces `num / den` to lowest terms.
    pub fn new(num: Vec<u64>, den: u64) -> Result<Self> {
        if den == 0 || num.is_empty() {
            return Err(Error::InvalidInput("grid point needs a positive denominator".into()));
        }
        let g = num.iter().fold(den, |g, &x| g.gcd(&x));
        Ok(Self { num: num.iter().map(|x| x / g).collect(), den: den / g })
    }

    pub fn coords(&self) -> Vec<f64> {
        self.num.iter().map(|&x| x as f64 / self.den as f64).collect()
    }

    /// Normalized point `num / |num|` on which invariant symbols are evaluated.
    pub fn simplex_coords(&self) -> Vec<f64> {
        let s: u64 = self.num.iter().sum();
        self.num.iter().map(|&x| x as f64 / s as f64).collect()
    }

    /// `(k / den) num`, defined only for multiples of `den`.
    pub fn lattice_point(&self, k: u64) -> Option<MultiIndex> {
        if k == 0 || !k.is_multiple_of(self.den) {
            return None;
        }
        let t = k / self.den;
        self.num
            .iter()
            .map(|&x| x.checked_mul(t).and_then(|v| u32::try_from(v).ok()))
            .collect::<Option<Vec<u32>>>()
            .map(MultiIndex::new)
    }

    /// The multiples of `den` not exceeding `k_max`, largest last.
    pub fn attainable(&self, k_max: u64) -> Vec<u64> {
        (1..=k_max / self.den).map(|t| t * self.den).collect()
    }

    /// Checks `Bt num = den alpha` and strict positivity.
    pub fn check_interior(&self, sub: &SubtorusData) -> Result<()> {
        if self.num.len() != sub.n {
            return Err(Error::InvalidInput(format!(
                "grid point has {} coordinates, expected {}",
                self.num.len(),
                sub.n
            )));
        }
        if self.num.contains(&0) {
            return Err(Error::InvalidInput(format!("grid point {self} is on the boundary")));
        }
        for (row, &a) in sub.bt.iter().zip(&sub.alpha) {
            let lhs = row
                .iter()
                .zip(&self.num)
                .try_fold(0i128, |acc, (&r, &x)| acc.checked_add(i128::from(r) * i128::from(x)))
                .ok_or(Error::Overflow("grid point weight"))?;
            if lhs != i128::from(a) * i128::from(self.den) {
                return Err(Error::InvalidInput(format!("grid point {self} is not in the polytope")));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.num.iter().map(ToString::to_string).collect();
        write!(f, "({})/{}", parts.join(","), self.den)
    }
}

/// Interior points of the standard simplex in `n` coordinates whose reduced
/// denominator is at most `q_max`, ordered by denominator.
pub fn interior_grid(n: usize, q_max: u64) -> Vec<GridPoint> {
    let mut out = BTreeSet::new();
    for q in 1..=q_max {
        let mut num = vec![0u64; n];
        interior_compositions(q, 0, &mut num, &mut |num| {
            if let Ok(p) = GridPoint::simplex(num.to_vec()) {
                out.insert((p.den, std::cmp::Reverse(p.num.clone()), p));
            }
        });
    }
    out.into_iter().map(|(_, _, p)| p).collect()
}

fn interior_compositions(rest: u64, j: usize, num: &mut [u64], visit: &mut impl FnMut(&[u64])) {
    let n = num.len();
    if j + 1 == n {
        if rest >= 1 {
            num[j] = rest;
            visit(num);
        }
        return;
    }
    let remaining = (n - j - 1) as u64;
    if rest < remaining + 1 {
        return;
    }
    for x in 1..=rest - remaining {
        num[j] = x;
        interior_compositions(rest - x, j + 1, num, visit);
    }
}

/// Eigenvalues tracked along one rational ray.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RaySpectrumSeries {
    pub point: GridPoint,
    pub ks: Vec<u64>,
    pub lambdas: Vec<f64>,
}

/// Extrapolates the series with the last `order + 1` entries; the error
/// estimate compares against the same extrapolation one entry earlier.
pub fn extrapolate_ray(series: &RaySpectrumSeries, order: usize, method: Method) -> Result<Extrapolated> {
    if order > MAX_ORDER {
        return Err(Error::InvalidInput(format!("extrapolation order {order} above {MAX_ORDER}")));
    }
    let len = series.ks.len();
    if len != series.lambdas.len() {
        return Err(Error::InvalidInput("ks and lambdas differ in length".into()));
    }
    if len < order + 2 {
        return Err(Error::TooFewSamples { needed: order + 2, got: len });
    }
    let limits = (order + 1..=len)
        .map(|end| extrapolate(&series.ks[..end], &series.lambdas[..end], order, method))
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = limits.windows(2).map(|w| (w[1].limit - w[0].limit).abs()).collect();
    let last = limits.last().expect("non-empty");
    let error_estimate = *diffs.last().expect("at least one difference");
    let rising = diffs.windows(2).any(|w| w[1] > w[0] && w[1] > 1e-15);
    Ok(Extrapolated { limit: last.limit, error_estimate, low_confidence: last.low_confidence || rising })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReconstructOptions {
    pub k_max: u64,
    /// 0 means the raw eigenvalue at the largest attainable `k`.
    pub order: usize,
    pub method: Method,
}

impl ReconstructOptions {
    pub fn raw(k_max: u64) -> Self {
        Self { k_max, order: 0, method: Method::Polynomial }
    }

    pub fn richardson(k_max: u64, order: usize) -> Self {
        Self { k_max, order, method: Method::Polynomial }
    }

    pub fn rational(k_max: u64, order: usize) -> Self {
        Self { k_max, order, method: Method::Rational }
    }

    /// The last `order + 2` multiples of `den` up to `k_max`, or `None`.
    pub fn probe_ks(&self, point: &GridPoint) -> Option<Vec<u64>> {
        let all = point.attainable(self.k_max);
        let need = self.order + 2;
        (all.len() >= need).then(|| all[all.len() - need..].to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructedPoint {
    pub point: GridPoint,
    /// Weights used; empty when the point is unreachable.
    pub ks: Vec<u64>,
    /// `None` marks a point no admissible `k` reaches.
    pub p_hat: Option<f64>,
    pub error_estimate: Option<f64>,
    pub low_confidence: bool,
    pub p_true: Option<f64>,
    pub abs_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reconstruction {
    pub options: ReconstructOptions,
    pub points: Vec<ReconstructedPoint>,
}

impl Reconstruction {
    pub fn grid(&self) -> Vec<&GridPoint> {
        self.points.iter().map(|p| &p.point).collect()
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.p_hat).collect()
    }

    pub fn errors(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.abs_err).collect()
    }

    pub fn missing(&self) -> usize {
        self.points.iter().filter(|p| p.p_hat.is_none()).count()
    }

    /// Largest recorded error over reached points, when ground truth exists.
    pub fn max_error(&self) -> Option<f64> {
        self.points.iter().filter_map(|p| p.abs_err).reduce(f64::max)
    }

    /// Rows `a_0, ..., a_{n-1}, p_hat, p_true, abs_err`; missing values are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.points.first().map_or(0, |p| p.point.num.len());
        let mut header: Vec<String> = (0..n).map(|j| format!("a_{j}")).collect();
        header.extend(["p_hat", "p_true", "abs_err"].map(String::from));
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for p in &self.points {
            let mut row: Vec<String> = p.point.coords().iter().map(ToString::to_string).collect();
            row.extend([opt(p.p_hat), opt(p.p_true), opt(p.abs_err)]);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reconstructs symbol values on `grid` from the spectra returned by `oracle`.
pub fn reconstruct<O>(
    sub: &SubtorusData,
    oracle: O,
    grid: &[GridPoint],
    options: ReconstructOptions,
    truth: Option<&InvariantSymbol>,
) -> Result<Reconstruction>
where
    O: Fn(u64) -> Result<EquivariantSpectrum> + Sync,
{
    sub.validate()?;
    if options.order > MAX_ORDER {
        return Err(Error::InvalidInput(format!("extrapolation order {} above {MAX_ORDER}", options.order)));
    }
    for p in grid {
        p.check_interior(sub)?;
    }
    let probes: Vec<Option<Vec<u64>>> = grid.iter().map(|p| options.probe_ks(p)).collect();
    let needed: BTreeSet<u64> = probes.iter().flatten().flatten().copied().collect();
    let spectra: BTreeMap<u64, EquivariantSpectrum> = needed
        .into_par_iter()
        .map(|k| {
            let s = oracle(k)?;
            if s.k != k {
                return Err(Error::InvalidInput(format!("oracle returned k = {} for k = {k}", s.k)));
            }
            Ok((k, s))
        })
        .collect::<Result<_>>()?;

    let points = grid
        .par_iter()
        .zip(probes)
        .map(|(point, ks)| {
            let p_true = truth.map(|t| t.eval(&point.simplex_coords()));
            let Some(ks) = ks else {
                return Ok(ReconstructedPoint {
                    point: point.clone(),
                    ks: Vec::new(),
                    p_hat: None,
                    error_estimate: None,
                    low_confidence: false,
                    p_true,
                    abs_err: None,
                });
            };
            let lambdas = ks
                .iter()
                .map(|&k| {
                    let beta = point.lattice_point(k).ok_or(Error::Overflow("lattice point"))?;
                    spectra[&k].lambda_at(&beta).ok_or_else(|| {
                        Error::InvalidInput(format!("oracle spectrum at k = {k} lacks {beta:?}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let series = RaySpectrumSeries { point: point.clone(), ks: ks.clone(), lambdas };
            let e = extrapolate_ray(&series, options.order, options.method)?;
            Ok(ReconstructedPoint {
                point: point.clone(),
                ks,
                p_hat: Some(e.limit),
                error_estimate: Some(e.error_estimate),
                low_confidence: e.low_confidence,
                p_true,
                abs_err: p_true.map(|t| (e.limit - t).abs()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Reconstruction { options, points })
}

/// Reconstruction of a known invariant symbol, with spectra from closed forms.
pub fn reconstruct_symbol(
    sub: &SubtorusData,
    symbol: &InvariantSymbol,
    grid: &[GridPoint],
    options: ReconstructOptions,
) -> Result<Reconstruction> {
    reconstruct(sub, |k| equivariant_spectrum(sub, k, symbol), grid, options, Some(symbol))
}

/// Log-log slopes of `errors` against `k_maxes`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeReport {
    pub k_max: Vec<u64>,
    pub max_error: Vec<f64>,
    /// Finite differences of `log error / log k_max` between neighbours.
    pub pairwise: Vec<f64>,
    /// Least-squares slope over all points.
    pub fit: f64,
}

pub fn log_log_slopes(k_maxes: &[u64], errors: &[f64]) -> Result<SlopeReport> {
    if k_maxes.len() != errors.len() || k_maxes.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: k_maxes.len().min(errors.len()) });
    }
    if errors.iter().any(|&e| !(e > 0.0 && e.is_finite())) || k_maxes.contains(&0) {
        return Err(Error::InvalidInput("log-log slopes need positive errors and k".into()));
    }
    let x: Vec<f64> = k_maxes.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let pairwise = x.windows(2).zip(y.windows(2)).map(|(xs, ys)| (ys[1] - ys[0]) / (xs[1] - xs[0])).collect();
    let len = x.len() as f64;
    let mx = x.iter().sum::<f64>() / len;
    let my = y.iter().sum::<f64>() / len;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(SlopeReport { k_max: k_maxes.to_vec(), max_error: errors.to_vec(), pairwise, fit: sxy / sxx })
}

/// Maximum reconstruction error as `k_max` varies, and its decay rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateStudy {
    pub order: usize,
    pub method: Method,
    pub grid_size: usize,
    pub slopes: SlopeReport,
}

pub fn reconstruction_rates(
    sub: &SubtorusData,
    symbol: &InvariantSymbol,
    grid: &[GridPoint],
    k_maxes: &[u64],
    order: usize,
    method: Method,
) -> Result<RateStudy> {
    let errors = k_maxes
        .iter()
        .map(|&k_max| {
            let r = reconstruct_symbol(sub, symbol, grid, ReconstructOptions { k_max, order, method })?;
            if r.missing() > 0 {
                return Err(Error::InvalidInput(format!(
                    "{} grid points unreachable at k_max = {k_max}",
                    r.missing()
                )));
            }
            Ok(r.max_error().unwrap_or(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateStudy { order, method, grid_size: grid.len(), slopes: log_log_slopes(k_maxes, &errors)? })
}

/// Outcome of comparing the equivariant spectra of two symbols.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistinguishReport {
    pub k_max: u64,
    pub tolerance: f64,
    /// First `k` where eigenvalues at some common lattice point differ.
    pub labeled_k: Option<u64>,
    /// First `k` where the sorted eigenvalue lists differ.
    pub multiset_k: Option<u64>,
    /// Largest labeled difference seen.
    pub max_labeled_gap: f64,
}

impl DistinguishReport {
    pub fn distinguished(&self) -> bool {
        self.labeled_k.is_some()
    }
}

pub fn spectral_distinguishability(
    a: &InvariantSymbol,
    b: &InvariantSymbol,
    sub: &SubtorusData,
    k_max: u64,
) -> Result<DistinguishReport> {
    if a.polynomial_terms().is_none() || b.polynomial_terms().is_none() {
        return Err(Error::InvalidInput("distinguishability needs polynomial symbols".into()));
    }
    let per_k = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let sa = equivariant_spectrum(sub, k, a)?;
            let sb = equivariant_spectrum(sub, k, b)?;
            let labeled = sa
                .entries
                .iter()
                .zip(&sb.entries)
                .map(|(x, y)| (x.lambda - y.lambda).abs())
                .fold(0.0, f64::max);
            let mut la = sa.lambdas();
            let mut lb = sb.lambdas();
            la.sort_by(f64::total_cmp);
            lb.sort_by(f64::total_cmp);
            let unlabeled = la.iter().zip(&lb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            Ok((k, labeled, unlabeled))
        })
        .collect::<Result<Vec<_>>>()?;
    let first = |pick: fn(&(u64, f64, f64)) -> f64| {
        per_k.iter().find(|r| pick(r) > DISTINGUISH_TOLERANCE).map(|r| r.0)
    };
    Ok(DistinguishReport {
        k_max,
        tolerance: DISTINGUISH_TOLERANCE,
        labeled_k: first(|r| r.1),
        multiset_k: first(|r| r.2),
        max_labeled_gap: per_k.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy_sphere::InvariantTerm;

    fn a1(n: usize) -> InvariantSymbol {
        InvariantSymbol::coordinate_power(n, 0, 1)
    }

    fn a1_sq() -> InvariantSymbol {
        InvariantSymbol::coordinate_power(2, 0, 2)
    }

    #[test]
    fn grid_points_reduce_and_probe_multiples() {
        let p = GridPoint::simplex(vec![2, 2]).unwrap();
        assert_eq!(p, GridPoint { num: vec![1, 1], den: 2 });
        assert_eq!(p.lattice_point(6), Some(MultiIndex::from([3, 3])));
        assert_eq!(p.lattice_point(5), None);
        assert_eq!(p.attainable(7), vec![2, 4, 6]);
        let g = interior_grid(2, 5);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], GridPoint { num: vec![1, 1], den: 2 });
        assert_eq!(g[1], GridPoint { num: vec![2, 1], den: 3 });
        assert_eq!(interior_grid(3, 4).len(), 1 + 3);
    }

    #[test]
    fn boundary_and_foreign_points_are_rejected() {
        let sub = SubtorusData::diagonal_circle(2);
        let edge = GridPoint::simplex(vec![0, 1]).unwrap();
        assert!(edge.check_interior(&sub).is_err());
        let off = GridPoint { num: vec![1, 1], den: 3 };
        assert!(off.check_interior(&sub).is_err());
    }

    #[test]
    fn ray_extrapolation_examples() {
        // (k/2 + 1)/(k + 2) is constant along the ray a = (1/2, 1/2).
        let p = GridPoint::simplex(vec![1, 1]).unwrap();
        let ks = vec![8, 10, 12];
        let lambdas: Vec<f64> = ks.iter().map(|&k| (k as f64 / 2.0 + 1.0) / (k as f64 + 2.0)).collect();
        let s = RaySpectrumSeries { point: p.clone(), ks, lambdas };
        let e = extrapolate_ray(&s, 1, Method::Polynomial).unwrap();
        assert_eq!(e.limit, 0.5);

        let s = RaySpectrumSeries { point: p.clone(), ks: vec![4, 8, 16], lambdas: vec![0.3; 3] };
        for order in 0..=1 {
            assert_eq!(extrapolate_ray(&s, order, Method::Polynomial).unwrap().limit, 0.3);
        }

        // a^2 + 3/k: one step removes the 1/k term.
        let ks = vec![16, 32, 64];
        let lambdas = ks.iter().map(|&k| 0.25 + 3.0 / k as f64).collect();
        let s = RaySpectrumSeries { point: p, ks, lambdas };
        let e = extrapolate_ray(&s, 1, Method::Polynomial).unwrap();
        assert!((e.limit - 0.25).abs() < 1e-14);
        assert!(extrapolate_ray(&s, 2, Method::Polynomial).is_err());
    }

    #[test]
    fn a1_is_recovered_to_1e_10() {
        let sub = SubtorusData::diagonal_circle(2);
        let grid: Vec<GridPoint> = [[1, 3], [1, 1], [3, 1]].map(|x| GridPoint::simplex(x.to_vec()).unwrap()).into();
        let r = reconstruct_symbol(&sub, &a1(2), &grid, ReconstructOptions::rational(64, 2)).unwrap();
        let vals: Vec<f64> = r.values().into_iter().map(Option::unwrap).collect();
        for (v, e) in vals.iter().zip([0.25, 0.5, 0.75]) {
            assert!((v - e).abs() <= 1e-10, "{v} vs {e}");
        }
    }

    #[test]
    fn constant_symbol_is_exact() {
        let sub = SubtorusData::diagonal_circle(3);
        let one = InvariantSymbol::constant(3, 1.0);
        let grid = interior_grid(3, 4);
        let r = reconstruct_symbol(&sub, &one, &grid, ReconstructOptions::richardson(24, 1)).unwrap();
        assert!(r.values().iter().all(|v| *v == Some(1.0)));
    }

    #[test]
    fn unreachable_points_are_missing() {
        let sub = SubtorusData::diagonal_circle(2);
        let grid = vec![GridPoint::simplex(vec![1, 6]).unwrap(), GridPoint::simplex(vec![1, 1]).unwrap()];
        let r = reconstruct_symbol(&sub, &a1(2), &grid, ReconstructOptions::richardson(10, 1)).unwrap();
        assert_eq!(r.missing(), 1);
        assert_eq!(r.points[0].p_hat, None);
        assert!(r.points[0].ks.is_empty());
        assert!(r.points[1].p_hat.is_some());
    }

    #[test]
    fn rates_for_a1_squared() {
        let sub = SubtorusData::diagonal_circle(2);
        let grid = interior_grid(2, 5);
        let raw = reconstruction_rates(&sub, &a1_sq(), &grid, &[16, 32, 64], 0, Method::Polynomial).unwrap();
        assert!((raw.slopes.fit + 1.0).abs() <= 0.3, "{:?}", raw.slopes);
        let one = reconstruction_rates(&sub, &a1_sq(), &grid, &[16, 32, 64], 1, Method::Polynomial).unwrap();
        assert!((one.slopes.fit + 2.0).abs() <= 0.3, "{:?}", one.slopes);
    }

    #[test]
    fn slopes_of_power_laws() {
        let ks = [10, 20, 40];
        let errs: Vec<f64> = ks.iter().map(|&k| 3.0 / (k as f64).powi(2)).collect();
        let s = log_log_slopes(&ks, &errs).unwrap();
        assert!((s.fit + 2.0).abs() < 1e-12);
        assert!(s.pairwise.iter().all(|p| (p + 2.0).abs() < 1e-12));
        assert!(log_log_slopes(&ks, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn labels_distinguish_what_multisets_cannot() {
        let sub = SubtorusData::diagonal_circle(2);
        let a = a1(2);
        let b = InvariantSymbol::coordinate_power(2, 1, 1);
        let r = spectral_distinguishability(&a, &b, &sub, 12).unwrap();
        assert_eq!(r.labeled_k, Some(1));
        assert_eq!(r.multiset_k, None);

        let same = spectral_distinguishability(&a, &a, &sub, 12).unwrap();
        assert!(!same.distinguished());

        let tiny = InvariantSymbol::polynomial(
            2,
            vec![
                InvariantTerm { gamma: [1, 0].into(), coeff: 1.0 },
                InvariantTerm { gamma: [0, 1].into(), coeff: 1e-13 },
            ],
        )
        .unwrap();
        assert!(!spectral_distinguishability(&a, &tiny, &sub, 12).unwrap().distinguished());
    }

    #[test]
    fn toric_fiber_reconstruction() {
        // On CP1 x CP1 the point (1,1,1,1)/2 of P_alpha carries a = (1/4, ..).
        let sub = SubtorusData::cp1_cross_cp1();
        let f = InvariantSymbol::coordinate_power(4, 0, 1).plus(&InvariantSymbol::coordinate_power(4, 2, 1));
        let grid = vec![GridPoint::new(vec![1, 1, 1, 1], 2).unwrap(), GridPoint::new(vec![1, 3, 2, 2], 4).unwrap()];
        let r = reconstruct_symbol(&sub, &f, &grid, ReconstructOptions::rational(32, 2)).unwrap();
        for p in &r.points {
            assert!(p.abs_err.unwrap() < 1e-9, "{p:?}");
        }
        assert!((r.points[0].p_true.unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_has_header_and_blank_missing_cells() {
        let sub = SubtorusData::diagonal_circle(2);
        let grid = vec![GridPoint::simplex(vec![1, 1]).unwrap(), GridPoint::simplex(vec![1, 6]).unwrap()];
        let r = reconstruct_symbol(&sub, &a1(2), &grid, ReconstructOptions::raw(8)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a_0,a_1,p_hat,p_true,abs_err");
        assert!(lines[2].ends_with(",,0.14285714285714285,"), "{}", lines[2]);
    }
}
