//! Named end-to-end experiments driven by a JSON manifest.
//!
//! A manifest is `{"experiment": name, "parameters": {...}, "output": prefix}`.
//! Parameters are validated field by field before any computation starts;
//! every run writes CSV tables with header rows, JSON summaries, and a
//! `<prefix>_manifest.json` sidecar holding the fully resolved manifest.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::canonical_model::{
    annihilation_residual, check_isometry_with, gram_matrix, truncation_box, ModelIndex, Normalization,
    QuadratureSpec, Stencil,
};
use crate::error::Error;
use crate::extrapolation::Method;
use crate::hardy_sphere::{assemble_block, InvariantSymbol, InvariantTerm, SymbolPoly};
use crate::inverse::{
    interior_grid, reconstruct_symbol, reconstruction_rates, spectral_distinguishability, GridPoint,
    ReconstructOptions, MAX_ORDER,
};
use crate::multiindex::SubtorusData;
use crate::reduction::{c0_simplex_quad, c0_sphere_mc, SphereSymbol, MC_MIN_SAMPLES};
use crate::spectral::{fit_expansion, measure_eigen, measure_poly, scaled_measure, TestFunction};
use crate::toric::{
    check_multiplicity_free, equivariant_spectrum, fiber_measure, regular_free_check, scaled_fiber_measure,
    shipped_examples, theorem2_leading, LeadingOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Theorem1,
    Theorem2,
    Inverse,
    Model,
    Distinguish,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Theorem1,
        ExperimentKind::Theorem2,
        ExperimentKind::Inverse,
        ExperimentKind::Model,
        ExperimentKind::Distinguish,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Theorem1 => "theorem1",
            ExperimentKind::Theorem2 => "theorem2",
            ExperimentKind::Inverse => "inverse",
            ExperimentKind::Model => "model",
            ExperimentKind::Distinguish => "distinguish",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}' (expected theorem1 | theorem2 | inverse | model | distinguish)"))
    }
}

/// Failure of a run, mapped to a process exit status.
#[derive(Debug)]
pub enum RunError {
    /// Manifest problems, one message per offending field.
    Validation(Vec<String>),
    /// A module operation failed during computation.
    Numerical { op: &'static str, source: Error },
    /// A check ran to completion and did not pass.
    CheckFailed { op: &'static str, detail: String },
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Numerical { .. } | RunError::CheckFailed { .. } => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Validation(errors) => {
                writeln!(f, "manifest validation failed:")?;
                for e in errors {
                    writeln!(f, "  {e}")?;
                }
                Ok(())
            }
            RunError::Numerical { op, source } => write!(f, "numerical failure in {op}: {source}"),
            RunError::CheckFailed { op, detail } => write!(f, "check failed in {op}: {detail}"),
            RunError::Io(e) => write!(f, "i/o failure: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

fn op<T>(name: &'static str, r: crate::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| match source {
        Error::Io(e) => RunError::Io(e.to_string()),
        source => RunError::Numerical { op: name, source },
    })
}

/// Manifest as read from disk, before validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub experiment: Option<String>,
    pub parameters: Map<String, Value>,
    pub output: Option<String>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| RunError::Validation(vec![format!("manifest: {e}")]))?;
        let Value::Object(obj) = value else {
            return Err(RunError::Validation(vec!["manifest: expected a JSON object".into()]));
        };
        let mut errors = Vec::new();
        let mut manifest = Manifest::default();
        for (key, v) in obj {
            match (key.as_str(), v) {
                ("experiment", Value::String(s)) => manifest.experiment = Some(s),
                ("output", Value::String(s)) => manifest.output = Some(s),
                ("parameters", Value::Object(p)) => manifest.parameters = p,
                ("experiment" | "output", _) => errors.push(format!("{key}: expected a string")),
                ("parameters", _) => errors.push("parameters: expected an object".into()),
                _ => errors.push(format!("{key}: unknown field")),
            }
        }
        if errors.is_empty() {
            Ok(manifest)
        } else {
            Err(RunError::Validation(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Validation(vec![format!("manifest {}: {e}", path.display())]))?;
        Self::parse(&text)
    }
}

/// Command-line overrides applied on top of a manifest.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Files and summary produced by a successful run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub experiment: ExperimentKind,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Reads parameters one field at a time, collecting every problem.
struct Fields<'a> {
    obj: &'a Map<String, Value>,
    used: BTreeSet<String>,
    errors: Vec<String>,
    resolved: Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn new(obj: &'a Map<String, Value>) -> Self {
        Self { obj, used: BTreeSet::new(), errors: Vec::new(), resolved: Map::new() }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        self.used.insert(key.to_string());
        self.obj.get(key)
    }

    fn get<T: DeserializeOwned + Serialize>(&mut self, key: &str, default: T) -> T {
        match self.raw(key) {
            None => {
                self.resolved.insert(key.into(), serde_json::to_value(&default).unwrap_or(Value::Null));
                default
            }
            Some(v) => match T::deserialize(v) {
                Ok(t) => {
                    self.resolved.insert(key.into(), v.clone());
                    t
                }
                Err(e) => {
                    self.errors.push(format!("parameters.{key}: {e}"));
                    default
                }
            },
        }
    }

    fn check(&mut self, ok: bool, key: &str, msg: impl fmt::Display) {
        if !ok {
            self.errors.push(format!("parameters.{key}: {msg}"));
        }
    }

    fn finish(mut self) -> Result<Map<String, Value>, RunError> {
        for key in self.obj.keys() {
            if !self.used.contains(key) {
                self.errors.push(format!("parameters.{key}: unknown field"));
            }
        }
        if self.errors.is_empty() {
            Ok(self.resolved)
        } else {
            Err(RunError::Validation(self.errors))
        }
    }
}

/// `{"invariant": [{"gamma", "coeff"}]}` or `{"terms": [{"gamma", "delta", "re", "im"}]}`.
#[derive(Clone, Debug)]
enum SymbolSpec {
    Invariant(InvariantSymbol),
    Poly(SymbolPoly),
}

impl SymbolSpec {
    fn n(&self) -> usize {
        match self {
            SymbolSpec::Invariant(s) => s.n(),
            SymbolSpec::Poly(p) => p.n(),
        }
    }
}

fn invariant_json(terms: &[(Vec<u32>, f64)]) -> Value {
    json!({ "invariant": terms.iter().map(|(g, c)| json!({"gamma": g, "coeff": c})).collect::<Vec<_>>() })
}

fn parse_symbol(v: &Value) -> Result<SymbolSpec, String> {
    let Value::Object(obj) = v else { return Err("expected an object".into()) };
    if obj.len() != 1 {
        return Err("expected exactly one of 'invariant' or 'terms'".into());
    }
    if let Some(terms) = obj.get("invariant") {
        let terms: Vec<InvariantTerm> = serde_json::from_value(terms.clone()).map_err(|e| e.to_string())?;
        let n = terms.first().map(|t| t.gamma.dim()).ok_or("invariant symbol has no terms")?;
        InvariantSymbol::polynomial(n, terms).map(SymbolSpec::Invariant).map_err(|e| e.to_string())
    } else if obj.contains_key("terms") {
        serde_json::from_value::<SymbolPoly>(v.clone()).map(SymbolSpec::Poly).map_err(|e| e.to_string())
    } else {
        Err("expected 'invariant' or 'terms'".into())
    }
}

fn symbol_field(fields: &mut Fields<'_>, key: &str, default: Value) -> Option<SymbolSpec> {
    let v = fields.raw(key).cloned().unwrap_or(default);
    match parse_symbol(&v) {
        Ok(s) => {
            fields.resolved.insert(key.into(), v);
            Some(s)
        }
        Err(e) => {
            fields.errors.push(format!("parameters.{key}: {e}"));
            None
        }
    }
}

fn invariant_field(fields: &mut Fields<'_>, key: &str, default: Value) -> Option<InvariantSymbol> {
    match symbol_field(fields, key, default)? {
        SymbolSpec::Invariant(s) => Some(s),
        SymbolSpec::Poly(_) => {
            fields.errors.push(format!("parameters.{key}: this experiment needs an 'invariant' symbol"));
            None
        }
    }
}

fn f_field(fields: &mut Fields<'_>, default: Vec<f64>) -> TestFunction {
    let coeffs: Vec<f64> = fields.get("f", default);
    fields.check(!coeffs.is_empty(), "f", "polynomial needs at least one coefficient");
    fields.check(coeffs.iter().all(|c| c.is_finite()), "f", "coefficients must be finite");
    TestFunction::Polynomial(coeffs)
}

fn subtorus_field(fields: &mut Fields<'_>, default: Value) -> Option<SubtorusData> {
    let v = fields.raw("subtorus").cloned().unwrap_or(default);
    let parsed = match &v {
        Value::String(name) => shipped_examples()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| {
                let names: Vec<&str> = shipped_examples().iter().map(|(n, _)| *n).collect();
                format!("unknown example '{name}' (known: {})", names.join(", "))
            }),
        other => serde_json::from_value::<SubtorusData>(other.clone()).map_err(|e| e.to_string()),
    }
    .and_then(|s| s.validate().and_then(|()| s.check_bounded()).map(|()| s).map_err(|e| e.to_string()));
    match parsed {
        Ok(s) => {
            fields.resolved.insert("subtorus".into(), v);
            Some(s)
        }
        Err(e) => {
            fields.errors.push(format!("parameters.subtorus: {e}"));
            None
        }
    }
}

fn k_list_checks(fields: &mut Fields<'_>, ks: &[u64], order: usize) {
    let distinct: BTreeSet<u64> = ks.iter().copied().collect();
    fields.check(distinct.len() == ks.len(), "k_list", "values must be distinct");
    fields.check(!ks.contains(&0), "k_list", "values must be positive");
    fields.check(
        ks.len() >= order + 2,
        "k_list",
        format!("a fit of order {order} needs at least {} values", order + 2),
    );
    fields.check(
        ks.iter().all(|&k| k >= 2 * order as u64),
        "k_list",
        format!("values must be at least 2 * order = {}", 2 * order),
    );
}

fn default_k_list(lo: u64, hi: u64, step: u64) -> Vec<u64> {
    (lo..=hi).step_by(step as usize).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Route {
    Eigen,
    Poly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Reference {
    Auto,
    Quadrature,
    Mc,
    None,
}

enum Plan {
    Theorem1 {
        n: usize,
        symbol: SymbolSpec,
        f: TestFunction,
        k_list: Vec<u64>,
        order: usize,
        route: Route,
        reference: Reference,
        mesh: usize,
        samples: usize,
        seed: u64,
    },
    Theorem2 {
        sub: SubtorusData,
        symbol: InvariantSymbol,
        f: TestFunction,
        k_list: Vec<u64>,
        order: usize,
        leading: LeadingOptions,
    },
    Inverse {
        sub: SubtorusData,
        symbol: InvariantSymbol,
        grid: Vec<GridPoint>,
        k_max: Vec<u64>,
        order: usize,
        method: Method,
    },
    Model {
        indices: Vec<ModelIndex>,
        quad: QuadratureSpec,
        tolerance: f64,
        step: f64,
        stencil: Stencil,
        annihilation_tolerance: f64,
    },
    Distinguish {
        sub: SubtorusData,
        a: InvariantSymbol,
        b: InvariantSymbol,
        k_max: u64,
    },
}

fn a1(n: usize) -> Value {
    let mut g = vec![0u32; n];
    g[0] = 1;
    invariant_json(&[(g, 1.0)])
}

fn validate(kind: ExperimentKind, params: &Map<String, Value>, seed: Option<u64>) -> Result<(Plan, Map<String, Value>), RunError> {
    let mut fields = Fields::new(params);
    let plan = match kind {
        ExperimentKind::Theorem1 => {
            let n: usize = fields.get("n", 2);
            fields.check((2..=8).contains(&n), "n", "must lie in 2..=8");
            let n = n.max(1);
            let symbol = symbol_field(&mut fields, "symbol", a1(n));
            let f = f_field(&mut fields, vec![0.0, 1.0]);
            let order: usize = fields.get("order", 2);
            fields.check(order <= 6, "order", "must be at most 6");
            let k_list: Vec<u64> = fields.get("k_list", default_k_list(10, 60, 1));
            k_list_checks(&mut fields, &k_list, order);
            fields.check(k_list.iter().all(|&k| k <= 400), "k_list", "values above 400 are not supported");
            let route: Route = fields.get("route", Route::Eigen);
            let reference: Reference = fields.get("reference", Reference::Auto);
            let mesh: usize = fields.get("mesh", 128);
            fields.check(mesh >= 8, "mesh", "must be at least 8");
            let samples: usize = fields.get("samples", 1 << 20);
            fields.check(samples >= MC_MIN_SAMPLES, "samples", format!("must be at least {MC_MIN_SAMPLES}"));
            let seed = seed.unwrap_or(fields.get("seed", 0u64));
            fields.resolved.insert("seed".into(), json!(seed));
            if let Some(s) = &symbol {
                fields.check(s.n() == n, "symbol", format!("lives on C^{} but n = {n}", s.n()));
                if reference == Reference::Quadrature {
                    fields.check(matches!(s, SymbolSpec::Invariant(_)), "reference", "quadrature needs an invariant symbol");
                }
            }
            symbol.map(|symbol| Plan::Theorem1 { n, symbol, f, k_list, order, route, reference, mesh, samples, seed })
        }
        ExperimentKind::Theorem2 => {
            let sub = subtorus_field(&mut fields, json!("cp1_cross_cp1"));
            let n = sub.as_ref().map_or(1, |s| s.n);
            let default_symbol = if n == 4 {
                invariant_json(&[(vec![1, 0, 0, 0], 1.0), (vec![0, 0, 1, 0], 1.0)])
            } else {
                a1(n)
            };
            let symbol = invariant_field(&mut fields, "symbol", default_symbol);
            let f = f_field(&mut fields, vec![0.0, 1.0]);
            let order: usize = fields.get("order", 2);
            fields.check(order <= 6, "order", "must be at most 6");
            let k_list: Vec<u64> = fields.get("k_list", default_k_list(8, 40, 4));
            k_list_checks(&mut fields, &k_list, order);
            let defaults = LeadingOptions::default();
            let samples: usize = fields.get("samples", defaults.samples);
            fields.check(samples >= MC_MIN_SAMPLES, "samples", format!("must be at least {MC_MIN_SAMPLES}"));
            let volume_ks: Vec<u64> = fields.get("volume_ks", defaults.volume_ks);
            fields.check(volume_ks.len() >= 2, "volume_ks", "needs at least two values");
            let seed = seed.unwrap_or(fields.get("seed", 0u64));
            fields.resolved.insert("seed".into(), json!(seed));
            if let (Some(s), Some(sym)) = (&sub, &symbol) {
                fields.check(sym.n() == s.n, "symbol", format!("lives on C^{} but the subtorus acts on C^{}", sym.n(), s.n));
            }
            match (sub, symbol) {
                (Some(sub), Some(symbol)) => Some(Plan::Theorem2 {
                    sub,
                    symbol,
                    f,
                    k_list,
                    order,
                    leading: LeadingOptions { samples, seed, volume_ks },
                }),
                _ => None,
            }
        }
        ExperimentKind::Inverse => {
            let n: usize = fields.get("n", 2);
            fields.check(n >= 2, "n", "must be at least 2");
            let n = n.max(2);
            let sub = subtorus_field(&mut fields, serde_json::to_value(SubtorusData::diagonal_circle(n)).unwrap_or(Value::Null));
            let n = sub.as_ref().map_or(n, |s| s.n);
            let mut sq = vec![0u32; n];
            sq[0] = 2;
            let symbol = invariant_field(&mut fields, "symbol", invariant_json(&[(sq, 1.0)]));
            let order: usize = fields.get("order", 1);
            fields.check(order <= MAX_ORDER, "order", format!("must be at most {MAX_ORDER}"));
            let method: Method = fields.get("method", Method::Polynomial);
            let k_max: Vec<u64> = fields.get("k_max", vec![16, 32, 64]);
            fields.check(!k_max.is_empty(), "k_max", "needs at least one value");
            fields.check(k_max.windows(2).all(|w| w[0] < w[1]), "k_max", "must be strictly increasing");
            let grid = match fields.raw("grid").cloned().unwrap_or(json!({"q_max": 5})) {
                Value::Object(o) if o.len() == 1 && o.contains_key("q_max") => {
                    let q = o["q_max"].as_u64();
                    fields.check(q.is_some_and(|q| (2..=64).contains(&q)), "grid.q_max", "must be an integer in 2..=64");
                    let diagonal = sub.as_ref().is_some_and(|s| *s == SubtorusData::diagonal_circle(s.n));
                    fields.check(diagonal, "grid", "q_max grids need the diagonal circle; list points explicitly");
                    fields.resolved.insert("grid".into(), Value::Object(o));
                    interior_grid(n, q.unwrap_or(2))
                }
                Value::Array(points) => {
                    let mut grid = Vec::new();
                    for (i, p) in points.iter().enumerate() {
                        let parsed = serde_json::from_value::<(Vec<u64>, u64)>(json!([p.get("num"), p.get("den")]))
                            .map_err(|e| e.to_string())
                            .and_then(|(num, den)| GridPoint::new(num, den).map_err(|e| e.to_string()))
                            .and_then(|g| match &sub {
                                Some(s) => g.check_interior(s).map(|()| g).map_err(|e| e.to_string()),
                                None => Ok(g),
                            });
                        match parsed {
                            Ok(g) => grid.push(g),
                            Err(e) => fields.errors.push(format!("parameters.grid[{i}]: {e}")),
                        }
                    }
                    fields.check(!grid.is_empty() || !points.is_empty(), "grid", "needs at least one point");
                    fields.resolved.insert("grid".into(), Value::Array(points));
                    grid
                }
                _ => {
                    fields.errors.push("parameters.grid: expected {\"q_max\": q} or [{\"num\", \"den\"}]".into());
                    Vec::new()
                }
            };
            if let (Some(s), Some(sym)) = (&sub, &symbol) {
                fields.check(sym.n() == s.n, "symbol", format!("lives on C^{} but the subtorus acts on C^{}", sym.n(), s.n));
            }
            match (sub, symbol) {
                (Some(sub), Some(symbol)) => Some(Plan::Inverse { sub, symbol, grid, k_max, order, method }),
                _ => None,
            }
        }
        ExperimentKind::Model => {
            let k_dim: usize = fields.get("k_dim", 1);
            fields.check((1..=3).contains(&k_dim), "k_dim", "must lie in 1..=3");
            let l: usize = fields.get("l", 1);
            fields.check((1..=3).contains(&l), "l", "must lie in 1..=3");
            let has_indices = fields.obj.contains_key("indices");
            fields.check(!(has_indices && fields.obj.contains_key("bound")), "bound", "give either 'indices' or 'bound'");
            let indices = if has_indices {
                let ms: Vec<Vec<i64>> = fields.get("indices", Vec::new());
                fields.used.insert("bound".into());
                let mut out = Vec::new();
                for (i, m) in ms.into_iter().enumerate() {
                    if m.len() != l {
                        fields.errors.push(format!("parameters.indices[{i}]: expected {l} entries"));
                        continue;
                    }
                    match ModelIndex::new(m, k_dim) {
                        Ok(idx) if !out.contains(&idx) => out.push(idx),
                        Ok(_) => fields.errors.push(format!("parameters.indices[{i}]: repeated")),
                        Err(e) => fields.errors.push(format!("parameters.indices[{i}]: {e}")),
                    }
                }
                out
            } else {
                let bound: i64 = fields.get("bound", crate::canonical_model::DEFAULT_TRUNCATION);
                fields.check((1..=16).contains(&bound), "bound", "must lie in 1..=16");
                truncation_box(l, k_dim, bound.clamp(1, 16))
            };
            let quad = QuadratureSpec {
                hermite_nodes: fields.get("hermite_nodes", QuadratureSpec::default().hermite_nodes),
                fourier_nodes: fields.get("fourier_nodes", QuadratureSpec::default().fourier_nodes),
            };
            fields.check(quad.hermite_nodes >= 1, "hermite_nodes", "must be positive");
            fields.check(quad.fourier_nodes >= 1, "fourier_nodes", "must be positive");
            let points = quad.hermite_nodes.saturating_pow(k_dim as u32).saturating_mul(quad.fourier_nodes.saturating_pow(l as u32));
            fields.check(
                points <= crate::canonical_model::MAX_QUADRATURE_POINTS,
                "hermite_nodes",
                format!("grid of {points} points exceeds {}", crate::canonical_model::MAX_QUADRATURE_POINTS),
            );
            let tolerance: f64 = fields.get("tolerance", crate::canonical_model::DEFAULT_TOLERANCE);
            fields.check(tolerance > 0.0, "tolerance", "must be positive");
            let step: f64 = fields.get("step", 1e-3);
            fields.check(step > 0.0 && step < 1.0, "step", "must lie in (0, 1)");
            let stencil: Stencil = fields.get("stencil", Stencil::FivePoint);
            let annihilation_tolerance: f64 = fields.get("annihilation_tolerance", 1e-6);
            fields.check(annihilation_tolerance > 0.0, "annihilation_tolerance", "must be positive");
            Some(Plan::Model { indices, quad, tolerance, step, stencil, annihilation_tolerance })
        }
        ExperimentKind::Distinguish => {
            let n: usize = fields.get("n", 2);
            fields.check(n >= 2, "n", "must be at least 2");
            let n = n.max(2);
            let sub = subtorus_field(&mut fields, serde_json::to_value(SubtorusData::diagonal_circle(n)).unwrap_or(Value::Null));
            let n = sub.as_ref().map_or(n, |s| s.n);
            let mut g2 = vec![0u32; n];
            g2[1] = 1;
            let a = invariant_field(&mut fields, "symbol_a", a1(n));
            let b = invariant_field(&mut fields, "symbol_b", invariant_json(&[(g2, 1.0)]));
            let k_max: u64 = fields.get("k_max", 12);
            fields.check((1..=200).contains(&k_max), "k_max", "must lie in 1..=200");
            for (key, s) in [("symbol_a", &a), ("symbol_b", &b)] {
                if let Some(s) = s {
                    fields.check(s.n() == n, key, format!("lives on C^{} but the subtorus acts on C^{n}", s.n()));
                }
            }
            match (sub, a, b) {
                (Some(sub), Some(a), Some(b)) => Some(Plan::Distinguish { sub, a, b, k_max }),
                _ => None,
            }
        }
    };
    let resolved = fields.finish()?;
    let plan = plan.ok_or_else(|| RunError::Validation(vec!["parameters: invalid".into()]))?;
    Ok((plan, resolved))
}

struct Emitter {
    prefix: PathBuf,
    files: Vec<PathBuf>,
}

impl Emitter {
    fn new(prefix: PathBuf) -> Result<Self, RunError> {
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        Ok(Self { prefix, files: Vec::new() })
    }

    fn path(&mut self, suffix: &str) -> PathBuf {
        let mut name = self.prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(format!("_{suffix}"));
        let p = self.prefix.with_file_name(name);
        self.files.push(p.clone());
        p
    }

    fn json(&mut self, suffix: &str, value: &Value) -> Result<(), RunError> {
        let path = self.path(suffix);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    fn csv(&mut self, suffix: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
        let path = self.path(suffix);
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        let write = |w: &mut csv::Writer<_>| -> csv::Result<()> {
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        };
        write(&mut w).map_err(|e| RunError::Io(e.to_string()))
    }

    fn with<F>(&mut self, suffix: &str, body: F) -> Result<(), RunError>
    where
        F: FnOnce(BufWriter<File>) -> crate::Result<()>,
    {
        let path = self.path(suffix);
        let file = BufWriter::new(File::create(path)?);
        body(file).map_err(|e| RunError::Io(e.to_string()))
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

/// Validates and runs a manifest, writing outputs under its prefix.
pub fn run(manifest: &Manifest, overrides: &Overrides) -> Result<RunOutcome, RunError> {
    let from_manifest = match &manifest.experiment {
        Some(name) => Some(ExperimentKind::from_str(name).map_err(|e| RunError::Validation(vec![format!("experiment: {e}")]))?),
        None => None,
    };
    let kind = match (from_manifest, overrides.experiment) {
        (Some(a), Some(b)) if a != b => {
            return Err(RunError::Validation(vec![format!(
                "experiment: manifest names '{a}' but --experiment is '{b}'"
            )]))
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(RunError::Validation(vec!["experiment: missing".into()])),
    };
    let (plan, resolved) = validate(kind, &manifest.parameters, overrides.seed)?;
    let prefix = overrides
        .out
        .clone()
        .or_else(|| manifest.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(kind.name()));
    let mut out = Emitter::new(prefix.clone())?;
    out.json(
        "manifest.json",
        &json!({
            "experiment": kind.name(),
            "parameters": Value::Object(resolved),
            "output": prefix.to_string_lossy(),
        }),
    )?;
    let summary = match plan {
        Plan::Theorem1 { n, symbol, f, k_list, order, route, reference, mesh, samples, seed } => {
            run_theorem1(&mut out, n, &symbol, &f, &k_list, order, route, reference, mesh, samples, seed)?
        }
        Plan::Theorem2 { sub, symbol, f, k_list, order, leading } => {
            run_theorem2(&mut out, &sub, &symbol, &f, &k_list, order, &leading)?
        }
        Plan::Inverse { sub, symbol, grid, k_max, order, method } => {
            run_inverse(&mut out, &sub, &symbol, &grid, &k_max, order, method)?
        }
        Plan::Model { indices, quad, tolerance, step, stencil, annihilation_tolerance } => {
            run_model(&mut out, &indices, &quad, tolerance, step, stencil, annihilation_tolerance)?
        }
        Plan::Distinguish { sub, a, b, k_max } => {
            let report = op("inverse::spectral_distinguishability", spectral_distinguishability(&a, &b, &sub, k_max))?;
            let value = serde_json::to_value(&report).map_err(|e| RunError::Io(e.to_string()))?;
            out.json("report.json", &value)?;
            value
        }
    };
    Ok(RunOutcome { experiment: kind, files: out.files, summary })
}

#[allow(clippy::too_many_arguments)]
fn run_theorem1(
    out: &mut Emitter,
    n: usize,
    symbol: &SymbolSpec,
    f: &TestFunction,
    k_list: &[u64],
    order: usize,
    route: Route,
    reference: Reference,
    mesh: usize,
    samples: usize,
    seed: u64,
) -> Result<Value, RunError> {
    let poly = match symbol {
        SymbolSpec::Poly(p) => p.clone(),
        SymbolSpec::Invariant(s) => s.to_symbol_poly().ok_or(RunError::Validation(vec![
            "parameters.symbol: invariant symbol has no polynomial form".into(),
        ]))?,
    };
    let m = (n - 1) as u32;
    let measures = k_list
        .par_iter()
        .map(|&k| {
            let kk = u32::try_from(k).map_err(|_| Error::Overflow("k"))?;
            let block = assemble_block(&poly, n, kk)?;
            let mu = match route {
                Route::Eigen => measure_eigen(&block, f)?,
                Route::Poly => measure_poly(&block, f)?,
            };
            Ok((k, mu))
        })
        .collect::<crate::Result<Vec<(u64, f64)>>>();
    let measures = op("spectral::measure", measures)?;
    let scaled: Vec<(u64, f64)> = measures.iter().map(|&(k, mu)| (k, scaled_measure(mu, m, k))).collect();
    let fit = op("spectral::fit_expansion", fit_expansion(&scaled, order))?;

    let reference = match (reference, symbol) {
        (Reference::None, _) => None,
        (Reference::Auto | Reference::Quadrature, SymbolSpec::Invariant(s)) => {
            let c0 = op("reduction::c0_simplex_quad", c0_simplex_quad(s, f, n, mesh))?;
            Some(json!({"kind": "quadrature", "c0": c0, "mesh": mesh}))
        }
        (_, _) => {
            let sym = match symbol {
                SymbolSpec::Poly(p) => SphereSymbol::Poly(p),
                SymbolSpec::Invariant(s) => SphereSymbol::Invariant(s),
            };
            let mc = op("reduction::c0_sphere_mc", c0_sphere_mc(sym, f, n, samples, seed))?;
            Some(json!({"kind": "mc", "c0": mc.c0, "stderr": mc.stderr, "samples": mc.samples, "seed": mc.seed}))
        }
    };
    let c0_ref = reference.as_ref().and_then(|r| r["c0"].as_f64()).unwrap_or(fit.c0());
    let rows: Vec<Vec<String>> = measures
        .iter()
        .zip(&scaled)
        .map(|(&(k, mu), &(_, s))| vec![k.to_string(), num(mu), num(s), num(s / c0_ref)])
        .collect();
    out.csv("measures.csv", &["k", "mu", "scaled_mu", "ratio_to_c0"], &rows)?;
    out.json("fit.json", &fit.to_json())?;
    let summary = json!({
        "n": n,
        "m": m,
        "f_id": f.id(),
        "route": route,
        "c0_fit": fit.c0(),
        "c0_spread": if fit.c0_spread.is_finite() { json!(fit.c0_spread) } else { Value::Null },
        "reference": reference,
        "relative_gap": (fit.c0() - c0_ref).abs() / c0_ref.abs().max(f64::MIN_POSITIVE),
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

fn run_theorem2(
    out: &mut Emitter,
    sub: &SubtorusData,
    symbol: &InvariantSymbol,
    f: &TestFunction,
    k_list: &[u64],
    order: usize,
    leading: &LeadingOptions,
) -> Result<Value, RunError> {
    let freeness = op("toric::regular_free_check", regular_free_check(sub))?;
    let rows = k_list
        .par_iter()
        .map(|&k| {
            let spec = equivariant_spectrum(sub, k, symbol)?;
            check_multiplicity_free(&spec)?;
            Ok((k, spec.entries.len(), fiber_measure(&spec, f), scaled_fiber_measure(&spec, f)))
        })
        .collect::<crate::Result<Vec<_>>>();
    let rows = op("toric::equivariant_spectrum", rows)?;
    let scaled: Vec<(u64, f64)> = rows.iter().map(|r| (r.0, r.3)).collect();
    let fit = op("spectral::fit_expansion", fit_expansion(&scaled, order))?;
    let reference = if freeness.pass {
        Some(op("toric::theorem2_leading", theorem2_leading(sub, symbol, f, leading))?)
    } else {
        None
    };
    let lead = reference.map_or(fit.c0(), |r| r.value);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|&(k, count, mu, s)| vec![k.to_string(), count.to_string(), num(mu), num(s), num(s / lead)])
        .collect();
    out.csv("measures.csv", &["k", "count", "mu", "scaled_mu", "ratio_to_leading"], &table)?;
    out.json("fit.json", &fit.to_json())?;
    let summary = json!({
        "m": sub.n - sub.d,
        "f_id": f.id(),
        "c0_fit": fit.c0(),
        "leading": reference,
        "freeness": freeness,
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

fn run_inverse(
    out: &mut Emitter,
    sub: &SubtorusData,
    symbol: &InvariantSymbol,
    grid: &[GridPoint],
    k_max: &[u64],
    order: usize,
    method: Method,
) -> Result<Value, RunError> {
    let top = *k_max.last().expect("validated non-empty");
    let options = ReconstructOptions { k_max: top, order, method };
    let rec = op("inverse::reconstruct", reconstruct_symbol(sub, symbol, grid, options))?;
    out.with("reconstruction.csv", |w| rec.write_csv(w))?;
    let rates = if k_max.len() >= 2 && rec.missing() == 0 {
        let raw = op("inverse::reconstruction_rates", reconstruction_rates(sub, symbol, grid, k_max, 0, Method::Polynomial))?;
        let ext = op("inverse::reconstruction_rates", reconstruction_rates(sub, symbol, grid, k_max, order, method))?;
        json!({ "raw": raw, "extrapolated": ext })
    } else {
        Value::Null
    };
    let summary = json!({
        "k_max": top,
        "order": order,
        "method": method,
        "grid_size": grid.len(),
        "missing": rec.missing(),
        "max_abs_err": rec.max_error(),
        "low_confidence": rec.points.iter().filter(|p| p.low_confidence).count(),
        "slopes": rates,
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

fn run_model(
    out: &mut Emitter,
    indices: &[ModelIndex],
    quad: &QuadratureSpec,
    tolerance: f64,
    step: f64,
    stencil: Stencil,
    annihilation_tolerance: f64,
) -> Result<Value, RunError> {
    let report = op(
        "canonical_model::check_isometry",
        check_isometry_with(indices, quad, Normalization::Unit, tolerance),
    )?;
    let gram = op("canonical_model::gram_matrix", gram_matrix(indices, quad))?;
    let mut rows = Vec::new();
    for c in 0..gram.matrix.ncols() {
        for r in 0..gram.matrix.nrows() {
            let v = gram.matrix[(r, c)];
            rows.push(vec![r.to_string(), c.to_string(), num(v.re), num(v.im)]);
        }
    }
    out.csv("gram.csv", &["row", "col", "re", "im"], &rows)?;
    let residual = indices
        .iter()
        .map(|idx| annihilation_residual(idx, step, stencil, 4.0, 401))
        .collect::<crate::Result<Vec<_>>>();
    let residual = op("canonical_model::annihilation_residual", residual)?.into_iter().fold(0.0, f64::max);
    let mut value = report.to_json();
    value["annihilation"] = json!({
        "step": step,
        "stencil": stencil,
        "max_residual": residual,
        "tolerance": annihilation_tolerance,
        "pass": residual < annihilation_tolerance,
    });
    let pass = report.pass && residual < annihilation_tolerance;
    value["pass"] = json!(pass);
    out.json("report.json", &value)?;
    if !pass {
        return Err(RunError::CheckFailed {
            op: "canonical_model::check_isometry",
            detail: format!(
                "{} entries beyond tolerance, annihilation residual {residual:e}",
                report.exceedance_count
            ),
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Manifest {
        Manifest::parse(text).unwrap()
    }

    fn validation(err: RunError) -> Vec<String> {
        match err {
            RunError::Validation(v) => v,
            other => panic!("expected validation failure, got {other}"),
        }
    }

    #[test]
    fn experiment_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("theorem3".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn unknown_top_level_fields_are_listed() {
        let e = validation(Manifest::parse(r#"{"experiment": "model", "extra": 1, "output": 3}"#).unwrap_err());
        assert_eq!(e.len(), 2);
    }

    #[test]
    fn every_bad_field_is_reported() {
        let m = parse(
            r#"{"experiment": "theorem1", "parameters": {"n": 1, "k_list": [4, 4], "mesh": 2, "bogus": true, "order": "two"}}"#,
        );
        let e = validation(run(&m, &Overrides::default()).unwrap_err());
        let joined = e.join("\n");
        for key in ["parameters.n", "parameters.k_list", "parameters.mesh", "parameters.bogus", "parameters.order"] {
            assert!(joined.contains(key), "{key} missing from {joined}");
        }
    }

    #[test]
    fn conflicting_experiment_is_rejected() {
        let m = parse(r#"{"experiment": "model"}"#);
        let o = Overrides { experiment: Some(ExperimentKind::Inverse), ..Overrides::default() };
        let err = run(&m, &o).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn symbol_specs_parse_and_check_dimension() {
        assert!(matches!(parse_symbol(&a1(3)).unwrap(), SymbolSpec::Invariant(s) if s.n() == 3));
        let hop = json!({"terms": [
            {"gamma": [1, 0], "delta": [0, 1], "re": 1.0, "im": 0.0},
            {"gamma": [0, 1], "delta": [1, 0], "re": 1.0, "im": 0.0}
        ]});
        assert!(matches!(parse_symbol(&hop).unwrap(), SymbolSpec::Poly(_)));
        assert!(parse_symbol(&json!({"terms": [], "invariant": []})).is_err());
        let m = parse(r#"{"experiment": "theorem1", "parameters": {"n": 3, "symbol": {"invariant": [{"gamma": [1, 0], "coeff": 1}]}}}"#);
        let e = validation(run(&m, &Overrides::default()).unwrap_err());
        assert!(e[0].contains("parameters.symbol"));
    }

    #[test]
    fn unbounded_subtorus_is_a_validation_error() {
        let m = parse(r#"{"experiment": "theorem2", "parameters": {"subtorus": {"n": 2, "d": 1, "Bt": [[1, -1]], "alpha": [0]}}}"#);
        let e = validation(run(&m, &Overrides::default()).unwrap_err());
        assert!(e.iter().any(|s| s.starts_with("parameters.subtorus")));
    }
}
