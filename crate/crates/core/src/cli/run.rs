//! Job execution and report emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{JobConfig, JobKind, RunManifest};
use super::fmt_num;
use crate::analysis::{
    bergman_chain, check_concavity, check_differential_inequality, check_lower_bound, concavity_defects,
    dk_lower_bound, effectiveness_threshold, g_curve, layer_cake, CheckReport,
};
use crate::error::{Error, Result};
use crate::hilbert::{bergman_at_origin, MonomialFn};
use crate::minimizer::{minimize, pythagoras_defect_mc, MinimizeOptions, Solver};
use crate::odes::{gz_factor, mollified_v, ode_pair};
use crate::quadrature::{draw_region_samples, monomial_mass_with};
use crate::weights::SublevelRegion;

pub const SUMMARY_FILE: &str = "summary.csv";
const SUMMARY_HEADER: &str = "job,check,passed,worst_violation,tolerance,location";

/// What one job produced. A job that fails to run carries its error and a
/// single failing `error` report.
#[derive(Debug, Clone, Serialize)]
pub struct JobOutcome {
    pub name: String,
    pub kind: JobKind,
    #[serde(skip)]
    pub csv: String,
    pub quantities: BTreeMap<String, f64>,
    pub reports: Vec<CheckReport>,
    pub error: Option<String>,
}

impl JobOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.reports.iter().all(|r| r.passed)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcomes: Vec<JobOutcome>,
    pub out_dir: PathBuf,
}

impl RunSummary {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(JobOutcome::passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn failed_checks(&self) -> Vec<(String, String)> {
        self.outcomes
            .iter()
            .flat_map(|o| o.reports.iter().filter(|r| !r.passed).map(|r| (o.name.clone(), r.name.clone())))
            .collect()
    }
}

// rows of a quantity table, kept in emission order
#[derive(Default)]
struct Table {
    csv: String,
    quantities: Vec<(String, f64)>,
}

impl Table {
    fn header(cols: &str) -> Self {
        Table {
            csv: format!("{cols}\n"),
            quantities: Vec::new(),
        }
    }

    fn row(&mut self, cells: &[String]) {
        self.csv.push_str(&cells.join(","));
        self.csv.push('\n');
    }

    fn quantity(&mut self, name: impl Into<String>, v: f64) {
        self.quantities.push((name.into(), v));
    }
}

fn relative_error(actual: f64, expected: f64) -> f64 {
    if actual == expected {
        return 0.0;
    }
    if !actual.is_finite() || !expected.is_finite() {
        return f64::INFINITY;
    }
    let diff = (actual - expected).abs();
    if expected == 0.0 {
        diff
    } else {
        diff / expected.abs()
    }
}

fn worst_of(points: impl IntoIterator<Item = (f64, f64)>) -> (f64, Option<f64>) {
    let mut best = (0.0, None);
    for (loc, v) in points {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if best.1.is_none() || v > best.0 {
            best = (v, Some(loc));
        }
    }
    best
}

pub fn run_job(job: &JobConfig) -> JobOutcome {
    let kind = job.kind.unwrap_or(JobKind::Mass);
    let checks = job.active_checks();
    let result = match kind {
        JobKind::Mass => run_mass(job, &checks),
        JobKind::Minimize => run_minimize(job, &checks),
        JobKind::Gcurve => run_gcurve(job, &checks),
        JobKind::Lct => run_lct(job, &checks),
        JobKind::Ode => run_ode(job, &checks),
    };
    match result {
        Ok((table, mut reports)) => {
            let quantities: BTreeMap<String, f64> = table.quantities.iter().cloned().collect();
            for (q, expected) in &job.expect {
                let name = format!("expect:{q}");
                let tol = job.tolerance(&name);
                let report = match quantities.get(q) {
                    Some(actual) => CheckReport::new(name, relative_error(*actual, *expected), None, tol),
                    None => {
                        log::error!("job `{}`: no quantity named `{q}`", job.name);
                        CheckReport::new(name, f64::INFINITY, None, tol)
                    }
                };
                reports.push(report);
            }
            for r in reports.iter().filter(|r| !r.passed) {
                log::warn!(
                    "job `{}`: check `{}` failed (violation {} > tolerance {})",
                    job.name,
                    r.name,
                    fmt_num(r.worst_violation),
                    fmt_num(r.tolerance)
                );
            }
            JobOutcome {
                name: job.name.clone(),
                kind,
                csv: table.csv,
                quantities,
                reports,
                error: None,
            }
        }
        Err(e) => {
            log::error!("job `{}` failed: {e}", job.name);
            JobOutcome {
                name: job.name.clone(),
                kind,
                csv: String::new(),
                quantities: BTreeMap::new(),
                reports: vec![CheckReport::new("error", f64::INFINITY, None, 0.0)],
                error: Some(e.to_string()),
            }
        }
    }
}

fn wants(checks: &[String], name: &str) -> bool {
    checks.iter().any(|c| c == name)
}

fn need<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::config(name, "missing"))
}

fn minimize_options(job: &JobConfig) -> MinimizeOptions {
    MinimizeOptions {
        solver: job.method,
        degree: job.degree,
        samples: job.samples,
        seed: job.seed.unwrap_or(0),
        check_truncation: true,
    }
}

fn run_mass(job: &JobConfig, checks: &[String]) -> Result<(Table, Vec<CheckReport>)> {
    let domain = need(&job.domain, "domain")?;
    let psi = need(&job.weight_psi, "weight_psi")?;
    let alphas: Vec<Vec<u32>> = if job.alphas.is_empty() {
        need(&job.function, "function")?.terms().map(|(a, _)| a.clone()).collect()
    } else {
        job.alphas.clone()
    };
    let cells: Vec<(usize, f64)> = (0..alphas.len())
        .flat_map(|a| job.t_grid.iter().map(move |t| (a, *t)))
        .collect();
    let estimates = cells
        .par_iter()
        .map(|(a, t)| {
            let region = SublevelRegion::new(domain.clone(), psi.clone(), *t)?;
            monomial_mass_with(&alphas[*a], &region, job.weight_phi.as_ref(), job.engine)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::header("alpha,t,value,abs_error,method,diverged");
    for (k, ((a, t), est)) in cells.iter().zip(&estimates).enumerate() {
        let alpha: Vec<String> = alphas[*a].iter().map(u32::to_string).collect();
        table.row(&[
            alpha.join(";"),
            fmt_num(*t),
            fmt_num(est.value()),
            fmt_num(est.abs_error().unwrap_or(0.0)),
            est.method().as_str().to_string(),
            est.diverged().to_string(),
        ]);
        table.quantity(format!("mass[{k}]"), est.value());
    }
    let mut reports = Vec::new();
    if wants(checks, "monotone") {
        // mass can only shrink as the sublevel set does
        let nt = job.t_grid.len();
        let (w, loc) = worst_of((0..alphas.len()).flat_map(|a| {
            let row = &estimates[a * nt..(a + 1) * nt];
            (1..nt).map(move |i| {
                let (prev, cur) = (row[i - 1].value(), row[i].value());
                let v = if prev == f64::INFINITY || cur <= prev {
                    0.0
                } else {
                    (cur - prev) / prev.abs().max(f64::MIN_POSITIVE)
                };
                (job.t_grid[i], v)
            })
        }));
        reports.push(CheckReport::new("monotone", w, loc, job.tolerance("monotone")));
    }
    Ok((table, reports))
}

fn run_minimize(job: &JobConfig, checks: &[String]) -> Result<(Table, Vec<CheckReport>)> {
    let domain = need(&job.domain, "domain")?;
    let psi = need(&job.weight_psi, "weight_psi")?;
    let f = need(&job.function, "function")?;
    let ideal = need(&job.ideal, "ideal")?;
    let phi = job.weight_phi.as_ref();
    let opts = minimize_options(job);
    let oracle = wants(checks, "oracle");
    let results = job
        .t_grid
        .par_iter()
        .map(|t| {
            let region = SublevelRegion::new(domain.clone(), psi.clone(), *t)?;
            let res = minimize(f, ideal, &region, phi, &opts)?;
            let exact = if oracle {
                let o = MinimizeOptions { solver: Solver::Orthogonal, check_truncation: false, ..opts };
                Some(minimize(f, ideal, &region, phi, &o)?.value)
            } else {
                None
            };
            // Pythagoras on an independent sample stream for sampled solves
            let mc_defect = match (&res.minimizer, job.method) {
                (Some(m), Solver::MonteCarlo) if wants(checks, "pythagoras") => {
                    let samples = draw_region_samples(&region, job.samples, opts.seed.wrapping_add(1))?;
                    Some(pythagoras_defect_mc(m, f, &samples, phi)?)
                }
                _ => None,
            };
            Ok((res, exact, mc_defect))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::header("t,value,std_error,residual_pythagoras,truncation_change,method");
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    for (k, (t, (res, _, _))) in job.t_grid.iter().zip(&results).enumerate() {
        table.row(&[
            fmt_num(*t),
            fmt_num(res.value),
            opt(res.std_error),
            opt(res.residual_pythagoras),
            opt(res.truncation_change),
            res.method.as_str().to_string(),
        ]);
        table.quantity(format!("value[{k}]"), res.value);
    }
    let grid = || job.t_grid.iter().copied().zip(&results);
    let mut reports = Vec::new();
    for check in checks {
        let tol = job.tolerance(check);
        let report = match check.as_str() {
            "pythagoras" if job.method == Solver::MonteCarlo => {
                let (w, loc) = worst_of(grid().filter_map(|(t, (_, _, d))| {
                    d.map(|(defect, se)| (t, if defect == 0.0 { 0.0 } else { defect.abs() / se }))
                }));
                CheckReport::new("pythagoras", w, loc, tol)
            }
            "pythagoras" => {
                let (w, loc) = worst_of(grid().filter_map(|(t, (r, _, _))| r.residual_pythagoras.map(|v| (t, v))));
                CheckReport::new("pythagoras", w, loc, tol)
            }
            "oracle" => {
                let (w, loc) = worst_of(grid().filter_map(|(t, (r, exact, _))| {
                    exact.map(|e| {
                        let v = match r.std_error {
                            Some(se) if r.value != e => (r.value - e).abs() / se,
                            _ => relative_error(r.value, e),
                        };
                        (t, v)
                    })
                }));
                CheckReport::new("oracle", w, loc, tol)
            }
            "truncation" if !job.method.is_deterministic() => {
                CheckReport::skipped("truncation", tol, "sampled solves are not re-solved")
            }
            "truncation" => {
                let (w, loc) = worst_of(grid().filter_map(|(t, (r, _, _))| r.truncation_change.map(|v| (t, v))));
                CheckReport::new("truncation", w, loc, tol)
            }
            _ => continue,
        };
        reports.push(report);
    }
    Ok((table, reports))
}

fn run_gcurve(job: &JobConfig, checks: &[String]) -> Result<(Table, Vec<CheckReport>)> {
    let domain = need(&job.domain, "domain")?;
    let psi = need(&job.weight_psi, "weight_psi")?;
    let f = need(&job.function, "function")?;
    let ideal = need(&job.ideal, "ideal")?;
    let curve = g_curve(f, ideal, domain, psi, job.weight_phi.as_ref(), &job.t_grid, &minimize_options(job))?;
    let defects = concavity_defects(&curve);
    let g0 = curve.g0();
    let mut table = Table::header("t,r,G,exp(-t)G0,concavity_defect");
    table.quantity("G0", g0);
    for (k, ((t, g), d)) in curve.grid.iter().zip(&curve.values).zip(&defects).enumerate() {
        let r = (-t).exp();
        table.row(&[fmt_num(*t), fmt_num(r), fmt_num(*g), fmt_num(r * g0), fmt_num(*d)]);
        table.quantity(format!("G[{k}]"), *g);
    }
    let mut reports = Vec::new();
    for check in checks {
        let tol = job.tolerance(check);
        reports.push(match check.as_str() {
            "lower_bound" => check_lower_bound(&curve, tol),
            "concavity" => check_concavity(&curve, tol)?,
            "differential_inequality" => check_differential_inequality(&curve, tol),
            _ => continue,
        });
    }
    Ok((table, reports))
}

fn run_lct(job: &JobConfig, checks: &[String]) -> Result<(Table, Vec<CheckReport>)> {
    let domain = need(&job.domain, "domain")?;
    let phi = need(&job.weight_phi, "weight_phi")?;
    let f = job
        .function
        .clone()
        .unwrap_or_else(|| MonomialFn::constant(domain.dim(), 1.0));
    let mut table = Table::header("quantity,value");
    let mut reports = Vec::new();
    let eff = effectiveness_threshold(&f, phi, domain)?;
    table.quantity("jumping_number", eff.jumping_number);
    table.quantity("constant", eff.constant);
    table.quantity("weighted_mass", eff.weighted_mass);
    table.quantity("ratio", eff.ratio);
    table.quantity("p_star", eff.p_star);
    table.quantity("bergman_kernel", bergman_at_origin(domain));
    for check in checks {
        let tol = job.tolerance(check);
        match check.as_str() {
            "effectiveness" => reports.push(CheckReport { tolerance: tol, passed: eff.report.worst_violation <= tol, ..eff.report.clone() }),
            "bergman_chain" => {
                let (ratio, bound, report) = bergman_chain(phi, domain, tol)?;
                table.quantity("bergman_ratio", ratio);
                table.quantity("bergman_bound", bound);
                reports.push(report);
            }
            "layer_cake" => {
                let lc = layer_cake(&f, phi, domain, tol)?;
                table.quantity("layer_cake_lhs", lc.lhs);
                table.quantity("layer_cake_rhs", lc.rhs);
                reports.push(lc.report);
            }
            "dk_lower_bound" if job.r_grid.is_empty() => {
                reports.push(CheckReport::skipped("dk_lower_bound", tol, "no r_grid configured"));
            }
            "dk_lower_bound" => {
                let dk = dk_lower_bound(&f, phi, domain, &job.r_grid, job.gauge.as_ref(), tol)?;
                table.quantity("dk_constant", dk.constant);
                for (k, (_, s)) in dk.scaled_masses.iter().enumerate() {
                    table.quantity(format!("dk_scaled_mass[{k}]"), *s);
                }
                reports.push(dk.report);
            }
            _ => {}
        }
    }
    for (q, v) in table.quantities.clone() {
        table.row(&[q, fmt_num(v)]);
    }
    Ok((table, reports))
}

fn run_ode(job: &JobConfig, checks: &[String]) -> Result<(Table, Vec<CheckReport>)> {
    let points = job
        .ode
        .points()
        .into_iter()
        .map(ode_pair)
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::header("t,u,s,residual1,residual2,positivity_margin");
    for p in &points {
        table.row(&[
            fmt_num(p.t),
            fmt_num(p.u),
            fmt_num(p.s),
            fmt_num(p.residual1),
            fmt_num(p.residual2),
            fmt_num(p.positivity_margin),
        ]);
    }
    let cp = job.cutoff;
    let moll = mollified_v(cp.eps, cp.t0, cp.width)?;
    let ramp = moll.cutoff();
    let gz = gz_factor(cp.t0, cp.width)?;
    table.quantity("gz_factor", gz);
    let mut reports = Vec::new();
    for check in checks {
        let tol = job.tolerance(check);
        let report = match check.as_str() {
            "ode_residuals" => {
                let (w, loc) = worst_of(points.iter().map(|p| (p.t, p.residual1.max(p.residual2))));
                CheckReport::new("ode_residuals", w, loc, tol)
            }
            "positivity" => {
                let bad: Vec<f64> = points.iter().filter(|p| !(p.positivity_margin > 0.0)).map(|p| p.t).collect();
                CheckReport::new("positivity", bad.len() as f64, bad.first().copied(), tol)
            }
            "gz_factor" => {
                let top = cp.t0 + cp.width;
                let sup = (1..=1000)
                    .map(|k| ode_pair(top * k as f64 / 1000.0).map(|p| (-p.u).exp()))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0f64, f64::max);
                table.quantity("gz_sampled_sup", sup);
                CheckReport::new("gz_factor", (gz - sup).abs(), None, tol)
            }
            "mollifier_identity" => {
                let start = -cp.t0 - cp.eps;
                let (w, loc) = worst_of((0..200).map(|k| {
                    let t = start + 5.0 * k as f64 / 199.0;
                    (t, (moll.value(t) - t).abs())
                }));
                CheckReport::new("mollifier_identity", w, loc, tol)
            }
            "mollifier_bounds" => {
                let (lo, hi) = moll.support();
                let (w, loc) = worst_of(sample_line(lo - 1.0, hi + 1.0, 2000, &[lo, hi]).map(|t| {
                    let v = moll.eval(t);
                    (t, (-v.first).max(v.first - 1.0).max(-v.second).max(0.0))
                }));
                CheckReport::new("mollifier_bounds", w, loc, tol)
            }
            "mollifier_convergence" => {
                // the smoothing zones reach 2ε + ε/4 past each kink
                let (k1, k2) = ramp.kinks();
                let keep_out = 4.0 * cp.eps;
                let (w, loc) = worst_of(
                    sample_line(k1 - 1.0, k2 + 1.0, 2000, &[])
                        .filter(|t| (t - k1).abs() > keep_out && (t - k2).abs() > keep_out)
                        .map(|t| (t, (moll.first(t) - ramp.b(t)).abs())),
                );
                CheckReport::new("mollifier_convergence", w, loc, tol)
            }
            "mollifier_density" => {
                let mass = moll.second_mass();
                table.quantity("mollifier_mass", mass);
                CheckReport::new("mollifier_density", (mass - 1.0).abs(), None, tol)
            }
            _ => continue,
        };
        reports.push(report);
    }
    Ok((table, reports))
}

// n evenly spaced points plus the given extra points
fn sample_line(a: f64, b: f64, n: usize, extra: &[f64]) -> impl Iterator<Item = f64> {
    let extra = extra.to_vec();
    (0..n)
        .map(move |k| a + (b - a) * k as f64 / (n - 1) as f64)
        .chain(extra)
}

pub fn summary_csv(outcomes: &[JobOutcome]) -> String {
    let mut sorted: Vec<&JobOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = format!("{SUMMARY_HEADER}\n");
    for o in sorted {
        for r in &o.reports {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                o.name,
                r.name,
                r.passed,
                fmt_num(r.worst_violation),
                fmt_num(r.tolerance),
                r.location.map(fmt_num).unwrap_or_default()
            );
        }
    }
    out
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let file = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{file}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn write_outcome(dir: &Path, o: &JobOutcome) -> Result<()> {
    if o.error.is_none() {
        write_atomic(&dir.join(format!("{}.csv", o.name)), &o.csv)?;
    }
    let json = serde_json::to_string_pretty(o)?;
    write_atomic(&dir.join(format!("{}.json", o.name)), &(json + "\n"))?;
    Ok(())
}

/// Runs every job (in parallel), writes `<job>.csv`, `<job>.json` and
/// `summary.csv` under `out_dir`. Job failures are recorded, I/O failures
/// abort.
pub fn run_manifest(manifest: &RunManifest, out_dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out_dir)?;
    if manifest.jobs.is_empty() {
        log::warn!("manifest has no jobs; writing an empty summary");
    }
    let outcomes: Vec<JobOutcome> = manifest
        .jobs
        .par_iter()
        .map(|job| {
            let o = run_job(job);
            write_outcome(out_dir, &o).map(|_| o)
        })
        .collect::<Result<_>>()?;
    write_atomic(&out_dir.join(SUMMARY_FILE), &summary_csv(&outcomes))?;
    Ok(RunSummary {
        outcomes,
        out_dir: out_dir.to_path_buf(),
    })
}
