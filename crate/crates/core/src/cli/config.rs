//! Job and manifest files: parsing, defaults and validation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::natural_ideal;
use crate::domains::ModelDomain;
use crate::error::{Error, Result};
use crate::hilbert::MonomialFn;
use crate::ideals::{multiplier_ideal, plus_ideal, MonomialIdeal};
use crate::minimizer::{Solver, DEFAULT_DEGREE};
use crate::quadrature::Engine;
use crate::weights::ToricWeight;

pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Mass,
    Minimize,
    Gcurve,
    Lct,
    Ode,
}

impl JobKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            JobKind::Mass => "mass",
            JobKind::Minimize => "minimize",
            JobKind::Gcurve => "gcurve",
            JobKind::Lct => "lct",
            JobKind::Ode => "ode",
        }
    }

    /// Checks this kind knows about, in report order.
    pub fn checks(&self) -> &'static [&'static str] {
        match self {
            JobKind::Mass => &["monotone"],
            JobKind::Minimize => &["pythagoras", "oracle", "truncation"],
            JobKind::Gcurve => &["lower_bound", "concavity", "differential_inequality"],
            JobKind::Lct => &["effectiveness", "bergman_chain", "layer_cake", "dk_lower_bound"],
            JobKind::Ode => &[
                "ode_residuals",
                "positivity",
                "gz_factor",
                "mollifier_identity",
                "mollifier_bounds",
                "mollifier_convergence",
                "mollifier_density",
            ],
        }
    }

    /// Checks run when the job does not list its own. `oracle` costs a
    /// second solve and is opt-in.
    fn default_checks(&self) -> Vec<String> {
        self.checks()
            .iter()
            .filter(|c| **c != "oracle")
            .map(|c| c.to_string())
            .collect()
    }
}

/// Default tolerance of a check. For Monte Carlo minimization the
/// `pythagoras` and `oracle` tolerances count standard errors.
pub fn default_tolerance(check: &str, solver: Solver) -> Option<f64> {
    let mc = !solver.is_deterministic();
    Some(match check {
        "monotone" => 1e-12,
        "pythagoras" if mc => 5.0,
        "pythagoras" => 1e-9,
        "oracle" if mc => 5.0,
        "oracle" => 1e-6,
        "truncation" => 1e-8,
        "lower_bound" => 1e-9,
        "concavity" => 1e-8,
        "differential_inequality" => 1e-9,
        "effectiveness" => 0.0,
        "bergman_chain" => 1e-12,
        "layer_cake" => 1e-6,
        "dk_lower_bound" => 1e-9,
        "ode_residuals" => 1e-10,
        "positivity" => 0.0,
        "gz_factor" => 1e-10,
        "mollifier_identity" => 1e-10,
        "mollifier_bounds" => 0.0,
        "mollifier_convergence" => 1e-3,
        "mollifier_density" => 1e-10,
        "expect" => 1e-9,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for OdeGrid {
    fn default() -> Self {
        OdeGrid { t_min: 1e-3, t_max: 30.0, points: 1000 }
    }
}

impl OdeGrid {
    /// Log-spaced points from `t_min` to `t_max`.
    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        if self.points == 1 {
            return vec![self.t_min];
        }
        let last = self.points - 1;
        (0..self.points)
            .map(|k| match k {
                0 => self.t_min,
                k if k == last => self.t_max,
                k => (a + (b - a) * k as f64 / last as f64).exp(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffParams {
    pub t0: f64,
    pub width: f64,
    pub eps: f64,
}

impl Default for CutoffParams {
    fn default() -> Self {
        CutoffParams { t0: 1.0, width: 1.0, eps: 1e-4 }
    }
}

/// A validated job. Fields a kind does not use are ignored by it.
#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub name: String,
    pub kind: Option<JobKind>,
    pub domain: Option<ModelDomain>,
    pub weight_psi: Option<ToricWeight>,
    pub weight_phi: Option<ToricWeight>,
    /// Extra factor `e^{−gauge}` in the lower-bound integrals of `lct`.
    pub gauge: Option<ToricWeight>,
    pub function: Option<MonomialFn>,
    pub ideal: Option<MonomialIdeal>,
    pub alphas: Vec<Vec<u32>>,
    pub t_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub method: Solver,
    pub engine: Engine,
    pub samples: u64,
    pub seed: Option<u64>,
    pub degree: u32,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<String>,
    pub expect: BTreeMap<String, f64>,
    pub ode: OdeGrid,
    pub cutoff: CutoffParams,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub version: u32,
    pub output_dir: Option<PathBuf>,
    pub jobs: Vec<JobConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedConfig {
    Job(Box<JobConfig>),
    Manifest(RunManifest),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJob {
    name: Option<String>,
    kind: Option<JobKind>,
    domain: Option<Value>,
    weight_psi: Option<Value>,
    weight_phi: Option<Value>,
    gauge: Option<Value>,
    function: Option<Value>,
    ideal: Option<Value>,
    alphas: Option<Vec<Vec<u32>>>,
    t_grid: Option<Vec<f64>>,
    r_grid: Option<Vec<f64>>,
    method: Option<String>,
    engine: Option<String>,
    samples: Option<u64>,
    seed: Option<u64>,
    degree: Option<u32>,
    tolerances: Option<BTreeMap<String, f64>>,
    checks: Option<Vec<String>>,
    expect: Option<BTreeMap<String, f64>>,
    ode: Option<RawOde>,
    cutoff: Option<RawCutoff>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOde {
    t_min: Option<f64>,
    t_max: Option<f64>,
    points: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCutoff {
    t0: Option<f64>,
    #[serde(rename = "B")]
    width: Option<f64>,
    eps: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIdeal {
    generators: Option<Vec<Vec<u32>>>,
    dim: Option<usize>,
    derive_from: Option<String>,
    weight: Option<String>,
    c: Option<f64>,
}

fn field<T: DeserializeOwned>(path: &str, v: Option<Value>) -> Result<Option<T>> {
    v.map(|v| serde_json::from_value(v).map_err(|e| Error::config(path, e.to_string())))
        .transpose()
}

fn at(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn rewrap(prefix: &str, name: &str, e: Error) -> Error {
    match e {
        Error::Config { .. } | Error::NonNegativeWeight { .. } => e,
        other => Error::config(at(prefix, name), other.to_string()),
    }
}

fn check_grid(path: &str, grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::config(path, "values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(path, "grid must be strictly increasing"));
    }
    Ok(())
}

fn check_negative(path: &str, w: &ToricWeight, domain: &ModelDomain) -> Result<()> {
    let sup = w.sup_on(domain).map_err(|e| Error::config(path, e.to_string()))?;
    if sup > 0.0 {
        return Err(Error::NonNegativeWeight { field: path.to_string(), sup });
    }
    Ok(())
}

fn solver_from(path: &str, s: &str) -> Result<Solver> {
    match s {
        "orthogonal" => Ok(Solver::Orthogonal),
        "least_squares" => Ok(Solver::LeastSquares),
        "monte_carlo" => Ok(Solver::MonteCarlo),
        other => Err(Error::config(
            path,
            format!("unknown method `{other}` (orthogonal, least_squares, monte_carlo)"),
        )),
    }
}

fn resolve_ideal(
    path: &str,
    raw: RawIdeal,
    psi: Option<&ToricWeight>,
    phi: Option<&ToricWeight>,
) -> Result<MonomialIdeal> {
    if let Some(gens) = raw.generators {
        if raw.derive_from.is_some() || raw.weight.is_some() || raw.c.is_some() {
            return Err(Error::config(path, "give either generators or derive_from, not both"));
        }
        let dim = match (raw.dim, gens.first()) {
            (Some(d), _) => d,
            (None, Some(g)) => g.len(),
            (None, None) => return Err(Error::config(at(path, "dim"), "required for an empty generator list")),
        };
        return MonomialIdeal::new(dim, gens).map_err(|e| Error::config(at(path, "generators"), e.to_string()));
    }
    let how = raw
        .derive_from
        .ok_or_else(|| Error::config(path, "needs `generators` or `derive_from`"))?;
    let which = raw.weight.as_deref().unwrap_or("psi");
    let weight = match which {
        "psi" => psi,
        "phi" => phi,
        other => return Err(Error::config(at(path, "weight"), format!("unknown weight `{other}` (psi, phi)"))),
    }
    .ok_or_else(|| Error::config(at(path, "weight"), format!("weight_{which} is not configured")))?;
    match how.as_str() {
        "multiplier" => Ok(multiplier_ideal(weight)),
        "plus" => {
            let c = raw.c.ok_or_else(|| Error::config(at(path, "c"), "required for derive_from = plus"))?;
            plus_ideal(weight, c).map_err(|e| Error::config(at(path, "c"), e.to_string()))
        }
        other => Err(Error::config(
            at(path, "derive_from"),
            format!("unknown derivation `{other}` (multiplier, plus)"),
        )),
    }
}

impl JobConfig {
    fn from_value(prefix: &str, value: Value, fallback_name: &str, ov: Overrides) -> Result<Self> {
        let raw: RawJob = serde_json::from_value(value).map_err(|e| Error::config(prefix_or_root(prefix), e.to_string()))?;
        let name = raw.name.unwrap_or_else(|| fallback_name.to_string());
        if name.is_empty()
            || !name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            || name.starts_with('.')
        {
            return Err(Error::config(
                at(prefix, "name"),
                format!("`{name}` must be non-empty and use only letters, digits, `_`, `-`, `.`"),
            ));
        }
        let domain: Option<ModelDomain> = field(&at(prefix, "domain"), raw.domain)?;
        if let Some(d) = &domain {
            d.validate().map_err(|e| rewrap(prefix, "domain", e))?;
        }
        let weight_psi: Option<ToricWeight> = field(&at(prefix, "weight_psi"), raw.weight_psi)?;
        let weight_phi: Option<ToricWeight> = field(&at(prefix, "weight_phi"), raw.weight_phi)?;
        let gauge: Option<ToricWeight> = field(&at(prefix, "gauge"), raw.gauge)?;
        let function: Option<MonomialFn> = field(&at(prefix, "function"), raw.function)?;
        let dim = domain.as_ref().map(|d| d.dim());
        if let Some(n) = dim {
            for (label, w) in [("weight_psi", &weight_psi), ("weight_phi", &weight_phi), ("gauge", &gauge)] {
                if let Some(w) = w {
                    if w.dim() != n {
                        return Err(Error::config(
                            at(prefix, label),
                            format!("dimension {} does not match the domain's {n}", w.dim()),
                        ));
                    }
                    if label != "gauge" {
                        check_negative(&at(prefix, label), w, domain.as_ref().unwrap())?;
                    }
                }
            }
            if let Some(f) = &function {
                if f.dim() != n {
                    return Err(Error::config(
                        at(prefix, "function"),
                        format!("dimension {} does not match the domain's {n}", f.dim()),
                    ));
                }
            }
        }
        let ideal_path = at(prefix, "ideal");
        let ideal = match field::<RawIdeal>(&ideal_path, raw.ideal)? {
            Some(r) => Some(resolve_ideal(&ideal_path, r, weight_psi.as_ref(), weight_phi.as_ref())?),
            None => match &weight_psi {
                Some(psi) => Some(natural_ideal(psi, weight_phi.as_ref()).map_err(|e| rewrap(prefix, "ideal", e))?),
                None => None,
            },
        };
        if let (Some(i), Some(n)) = (&ideal, dim) {
            if i.dim() != n {
                return Err(Error::config(ideal_path, format!("dimension {} does not match the domain's {n}", i.dim())));
            }
        }
        let alphas = raw.alphas.unwrap_or_default();
        if let Some(n) = dim {
            if let Some(a) = alphas.iter().find(|a| a.len() != n) {
                return Err(Error::config(at(prefix, "alphas"), format!("exponent {a:?} has the wrong length")));
            }
        }
        let t_grid = raw.t_grid.unwrap_or_else(|| vec![0.0]);
        check_grid(&at(prefix, "t_grid"), &t_grid)?;
        if t_grid.iter().any(|t| *t < 0.0) {
            return Err(Error::config(at(prefix, "t_grid"), "thresholds must be >= 0"));
        }
        let r_grid = raw.r_grid.unwrap_or_default();
        check_grid(&at(prefix, "r_grid"), &r_grid)?;
        if r_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::config(at(prefix, "r_grid"), "values must lie in (0, 1)"));
        }
        let method = match raw.method.as_deref() {
            Some(m) => solver_from(&at(prefix, "method"), m)?,
            None => Solver::Orthogonal,
        };
        let engine = match raw.engine.as_deref() {
            None | Some("auto") => Engine::Auto,
            Some("adaptive") => Engine::Adaptive,
            Some(other) => {
                return Err(Error::config(at(prefix, "engine"), format!("unknown engine `{other}` (auto, adaptive)")))
            }
        };
        let samples = ov.samples.or(raw.samples).unwrap_or(DEFAULT_SAMPLES);
        if samples == 0 {
            return Err(Error::config(at(prefix, "samples"), "must be positive"));
        }
        let seed = ov.seed.or(raw.seed);
        if method == Solver::MonteCarlo && seed.is_none() {
            return Err(Error::config(at(prefix, "seed"), "required when method = monte_carlo"));
        }
        let kind = raw.kind;
        let known: BTreeSet<&str> = match kind {
            Some(k) => k.checks().iter().copied().collect(),
            None => [
                JobKind::Mass,
                JobKind::Minimize,
                JobKind::Gcurve,
                JobKind::Lct,
                JobKind::Ode,
            ]
            .iter()
            .flat_map(|k| k.checks().iter().copied())
            .collect(),
        };
        let checks = raw.checks.unwrap_or_default();
        if let Some(c) = checks.iter().find(|c| !known.contains(c.as_str())) {
            return Err(Error::config(at(prefix, "checks"), format!("unknown check `{c}`")));
        }
        let tolerances = raw.tolerances.unwrap_or_default();
        for (k, v) in &tolerances {
            let path = format!("{}.{k}", at(prefix, "tolerances"));
            let base = k.strip_prefix("expect:").map(|_| "expect").unwrap_or(k);
            if default_tolerance(base, method).is_none() {
                return Err(Error::config(path, "unknown check name"));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::config(path, "tolerance must be finite and >= 0"));
            }
        }
        let expect = raw.expect.unwrap_or_default();
        let ode = match raw.ode {
            None => OdeGrid::default(),
            Some(o) => {
                let d = OdeGrid::default();
                let g = OdeGrid {
                    t_min: o.t_min.unwrap_or(d.t_min),
                    t_max: o.t_max.unwrap_or(d.t_max),
                    points: o.points.unwrap_or(d.points),
                };
                if !(g.t_min > 0.0 && g.t_max >= g.t_min && g.t_max.is_finite() && g.points > 0) {
                    return Err(Error::config(at(prefix, "ode"), "need 0 < t_min <= t_max < inf and points > 0"));
                }
                g
            }
        };
        let cutoff = match raw.cutoff {
            None => CutoffParams::default(),
            Some(c) => {
                let d = CutoffParams::default();
                let p = CutoffParams {
                    t0: c.t0.unwrap_or(d.t0),
                    width: c.width.unwrap_or(d.width),
                    eps: c.eps.unwrap_or(d.eps),
                };
                crate::odes::mollified_v(p.eps, p.t0, p.width)
                    .map_err(|e| Error::config(at(prefix, "cutoff"), e.to_string()))?;
                p
            }
        };
        let job = JobConfig {
            name,
            kind,
            domain,
            weight_psi,
            weight_phi,
            gauge,
            function,
            ideal,
            alphas,
            t_grid,
            r_grid,
            method,
            engine,
            samples,
            seed,
            degree: raw.degree.unwrap_or(DEFAULT_DEGREE),
            tolerances,
            checks,
            expect,
            ode,
            cutoff,
        };
        if let Some(k) = kind {
            job.require(prefix, k)?;
        }
        Ok(job)
    }

    /// Fails with the missing field when this job cannot run as `kind`.
    pub fn require(&self, prefix: &str, kind: JobKind) -> Result<()> {
        let missing = |name: &str| Err(Error::config(at(prefix, name), format!("required for a {} job", kind.as_str())));
        let spatial = matches!(kind, JobKind::Mass | JobKind::Minimize | JobKind::Gcurve | JobKind::Lct);
        if spatial && self.domain.is_none() {
            return missing("domain");
        }
        match kind {
            JobKind::Mass => {
                if self.weight_psi.is_none() {
                    return missing("weight_psi");
                }
                if self.alphas.is_empty() && self.function.is_none() {
                    return missing("alphas");
                }
            }
            JobKind::Minimize | JobKind::Gcurve => {
                if self.weight_psi.is_none() {
                    return missing("weight_psi");
                }
                if self.function.is_none() {
                    return missing("function");
                }
                if kind == JobKind::Gcurve {
                    if self.t_grid.first() != Some(&0.0) {
                        return Err(Error::config(at(prefix, "t_grid"), "a G curve must start at t = 0"));
                    }
                    let wants_concavity = self.checks.is_empty() || self.checks.iter().any(|c| c == "concavity");
                    if wants_concavity && self.t_grid.len() < 3 {
                        return Err(Error::config(at(prefix, "t_grid"), "concavity needs at least 3 points"));
                    }
                }
            }
            JobKind::Lct => {
                if self.weight_phi.is_none() {
                    return missing("weight_phi");
                }
            }
            JobKind::Ode => {}
        }
        Ok(())
    }

    /// The job's kind, or `fallback` when the file leaves it open.
    pub fn with_kind(mut self, fallback: JobKind) -> Result<Self> {
        match self.kind {
            Some(k) if k != fallback => Err(Error::config(
                "kind",
                format!("file declares `{}` but `{}` was requested", k.as_str(), fallback.as_str()),
            )),
            _ => {
                self.require("", fallback)?;
                if let Some(c) = self.checks.iter().find(|c| !fallback.checks().contains(&c.as_str())) {
                    return Err(Error::config("checks", format!("unknown check `{c}` for a {} job", fallback.as_str())));
                }
                self.kind = Some(fallback);
                Ok(self)
            }
        }
    }

    pub fn active_checks(&self) -> Vec<String> {
        if !self.checks.is_empty() {
            return self.checks.clone();
        }
        self.kind.map(|k| k.default_checks()).unwrap_or_default()
    }

    pub fn tolerance(&self, check: &str) -> f64 {
        if let Some(t) = self.tolerances.get(check) {
            return *t;
        }
        if check.starts_with("expect:") {
            if let Some(t) = self.tolerances.get("expect") {
                return *t;
            }
            return default_tolerance("expect", self.method).unwrap_or(0.0);
        }
        default_tolerance(check, self.method).unwrap_or(0.0)
    }
}

fn prefix_or_root(prefix: &str) -> &str {
    if prefix.is_empty() {
        "<root>"
    } else {
        prefix
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    version: u32,
    output_dir: Option<PathBuf>,
    jobs: Vec<Value>,
}

impl RunManifest {
    pub fn from_value(value: Value, ov: Overrides) -> Result<Self> {
        let raw: RawManifest = serde_json::from_value(value).map_err(|e| Error::config("<root>", e.to_string()))?;
        if raw.version != MANIFEST_VERSION {
            return Err(Error::config(
                "version",
                format!("unsupported version {} (expected {MANIFEST_VERSION})", raw.version),
            ));
        }
        let mut seen = BTreeSet::new();
        let mut jobs = Vec::with_capacity(raw.jobs.len());
        for (i, v) in raw.jobs.into_iter().enumerate() {
            let prefix = format!("jobs[{i}]");
            let job = JobConfig::from_value(&prefix, v, &format!("job{i}"), ov)?;
            if job.kind.is_none() {
                return Err(Error::config(at(&prefix, "kind"), "required in a manifest"));
            }
            if !seen.insert(job.name.clone()) {
                return Err(Error::config(at(&prefix, "name"), format!("duplicate job name `{}`", job.name)));
            }
            jobs.push(job);
        }
        Ok(RunManifest {
            version: raw.version,
            output_dir: raw.output_dir,
            jobs,
        })
    }
}

/// Reads a job or a manifest (recognized by its `jobs` key).
pub fn load_config(path: &Path, ov: Overrides) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(value, path.file_stem().and_then(|s| s.to_str()).unwrap_or("job"), ov)
}

pub fn parse_config(value: Value, fallback_name: &str, ov: Overrides) -> Result<LoadedConfig> {
    if value.get("jobs").is_some() {
        return Ok(LoadedConfig::Manifest(RunManifest::from_value(value, ov)?));
    }
    let name: String = fallback_name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') { c } else { '_' })
        .collect();
    Ok(LoadedConfig::Job(Box::new(JobConfig::from_value("", value, &name, ov)?)))
}
