//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails or overruns its time budget.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sublevel_l2::analysis::{
    bergman_chain, check_concavity, check_differential_inequality, check_lower_bound, concavity_defects,
    differential_points, dk_lower_bound, effectiveness_threshold, g_curve, layer_cake, natural_ideal, GCurve,
};
use sublevel_l2::domains::ModelDomain;
use sublevel_l2::error::Error;
use sublevel_l2::hilbert::{bergman_at_origin, MonomialFn};
use sublevel_l2::ideals::MonomialIdeal;
use sublevel_l2::minimizer::{minimize, pythagoras_defect_mc, pythagoras_residual, MinimizeOptions, Solver};
use sublevel_l2::odes::{gz_factor, mollified_v, ode_pair};
use sublevel_l2::quadrature::draw_region_samples;
use sublevel_l2::weights::{SublevelRegion, ToricWeight};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn weight(c: Vec<f64>) -> ToricWeight {
    ToricWeight::new(c).unwrap()
}

fn one(n: usize) -> MonomialFn {
    MonomialFn::constant(n, 1.0)
}

fn disc() -> ModelDomain {
    ModelDomain::unit_disc()
}

fn exact_opts() -> MinimizeOptions {
    MinimizeOptions {
        check_truncation: false,
        ..MinimizeOptions::default()
    }
}

fn grid(step: f64, end: f64) -> Vec<f64> {
    let n = (end / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

struct Instance {
    domain: ModelDomain,
    psi: ToricWeight,
    phi: Option<ToricWeight>,
    f: MonomialFn,
}

impl Instance {
    fn ideal(&self) -> MonomialIdeal {
        natural_ideal(&self.psi, self.phi.as_ref()).unwrap()
    }
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_degree: u32, terms: usize) -> MonomialFn {
    let mut out = Vec::new();
    for _ in 0..terms {
        let mut alpha = vec![0u32; n];
        let d = rng.gen_range(0..=max_degree);
        for _ in 0..d {
            alpha[rng.gen_range(0..n)] += 1;
        }
        out.push((alpha, Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))));
    }
    MonomialFn::from_terms(n, out).unwrap()
}

/// n ≤ 2, degree ≤ 4; the ball appears in dimension 2.
fn random_instance(rng: &mut ChaCha8Rng, allow_ball: bool, with_phi: bool) -> Instance {
    let n = rng.gen_range(1..=2);
    let domain = if allow_ball && n == 2 && rng.gen_bool(0.3) {
        ModelDomain::ball(1.0, 2).unwrap()
    } else {
        ModelDomain::polydisc((0..n).map(|_| rng.gen_range(0.5..=1.0)).collect()).unwrap()
    };
    let psi = weight((0..n).map(|_| rng.gen_range(0.3..6.0)).collect());
    let phi = (with_phi && rng.gen_bool(0.5)).then(|| weight((0..n).map(|_| rng.gen_range(0.1..1.5)).collect()));
    let terms = rng.gen_range(1..=3);
    let f = random_poly(rng, n, 4, terms);
    Instance { domain, psi, phi, f }
}

/// Random instances whose `G(0)` is finite, with their curves.
fn random_curves(count: usize, seed: u64, grid: &[f64]) -> Result<Vec<GCurve>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let inst = random_instance(&mut rng, true, true);
        if inst.f.is_zero() {
            continue;
        }
        match g_curve(&inst.f, &inst.ideal(), &inst.domain, &inst.psi, inst.phi.as_ref(), grid, &exact_opts()) {
            Ok(c) => out.push(c),
            Err(Error::G0Infinite) => continue,
            Err(e) => return Err(e2s(e)),
        }
    }
    Ok(out)
}

fn criterion_1() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for p0 in [1.5, 2.0, 3.0, 10.0] {
        let e = effectiveness_threshold(&one(1), &weight(vec![2.0 / p0]), &disc()).map_err(e2s)?;
        let target = p0 / (p0 - 1.0);
        worst_ratio = worst_ratio.max(rel(e.ratio, target));
        worst_p = worst_p.max((e.p_star - p0).abs());
        ensure(rel(e.ratio, target) <= 1e-9, || format!("p0={p0}: ratio {} vs {target}", e.ratio))?;
        ensure((e.p_star - p0).abs() <= 1e-9, || format!("p0={p0}: p* = {}", e.p_star))?;
        ensure(e.report.passed && e.report.worst_violation == 0.0, || {
            format!("p0={p0}: membership grid disagrees ({} points)", e.report.worst_violation)
        })?;
    }
    Ok(format!("ratio rel err {worst_ratio:.1e}, |p*-p0| {worst_p:.1e}"))
}

fn criterion_2() -> Outcome {
    let k = bergman_at_origin(&disc());
    ensure(k == 1.0 / PI, || format!("K(o) = {k}"))?;
    let mut worst: f64 = 0.0;
    for p0 in [1.5, 2.0, 3.0, 10.0] {
        let (ratio, bound, report) = bergman_chain(&weight(vec![2.0 / p0]), &disc(), 1e-9).map_err(e2s)?;
        let target = p0 / (p0 - 1.0);
        ensure(report.passed, || format!("p0={p0}: chain violated by {}", report.worst_violation))?;
        ensure(rel(bound, target) <= 1e-9 && rel(ratio, target) <= 1e-9, || {
            format!("p0={p0}: K·mass = {bound}, ratio = {ratio}, expected {target}")
        })?;
        worst = worst.max(rel(bound, target));
    }
    Ok(format!("K(o) = 1/pi exactly; K·mass = p/(p-1) to {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let g = grid(0.05, 5.0);
    let f = one(1);
    let psi = weight(vec![2.0]);
    let c = g_curve(&f, &natural_ideal(&psi, None).map_err(e2s)?, &disc(), &psi, None, &g, &exact_opts())
        .map_err(e2s)?;
    let eq = c
        .grid
        .iter()
        .zip(&c.values)
        .map(|(t, v)| rel(*v, (-t).exp() * PI))
        .fold(0.0, f64::max);
    ensure(eq <= 1e-9, || format!("equality case off by {eq:.2e}"))?;
    ensure(check_lower_bound(&c, 1e-9).passed, || "equality case below the bound".into())?;
    let curves = random_curves(20, 3, &grid(0.25, 3.0))?;
    let mut worst: f64 = 0.0;
    for (i, c) in curves.iter().enumerate() {
        let r = check_lower_bound(c, 1e-9);
        ensure(r.passed, || format!("random instance {i}: slack {} at t={:?}", r.worst_violation, r.location))?;
        worst = worst.max(r.worst_violation);
    }
    Ok(format!("equality to {eq:.1e}; 20 random curves, worst deficit {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let g = grid(0.05, 4.0);
    let psi2 = weight(vec![2.0]);
    let lin = g_curve(&one(1), &natural_ideal(&psi2, None).map_err(e2s)?, &disc(), &psi2, None, &g, &exact_opts())
        .map_err(e2s)?;
    let psi4 = weight(vec![4.0]);
    let f = MonomialFn::from_terms(1, vec![(vec![0], Complex64::new(1.0, 0.0)), (vec![1], Complex64::new(1.0, 0.0))])
        .unwrap();
    let sq = g_curve(&f, &natural_ideal(&psi4, None).map_err(e2s)?, &disc(), &psi4, None, &g, &exact_opts())
        .map_err(e2s)?;
    for (t, v) in sq.grid.iter().zip(&sq.values) {
        let r = (-t).exp();
        let target = PI * r.sqrt() + 0.5 * PI * r;
        ensure(rel(*v, target) <= 1e-9, || format!("sqrt curve at t={t}: {v} vs {target}"))?;
    }
    let lin_defect = concavity_defects(&lin).into_iter().fold(0.0, f64::max);
    ensure(lin_defect <= 1e-14, || format!("pi r is not linear: defect {lin_defect:.2e}"))?;
    for (name, c) in [("pi r", &lin), ("sqrt", &sq)] {
        let r = check_concavity(c, 1e-8).map_err(e2s)?;
        ensure(r.passed, || format!("{name}: defect {}", r.worst_violation))?;
    }
    let curves = random_curves(20, 4, &grid(0.25, 3.0))?;
    let mut worst: f64 = 0.0;
    for (i, c) in curves.iter().enumerate() {
        let r = check_concavity(c, 1e-8).map_err(e2s)?;
        ensure(r.passed, || format!("random instance {i}: defect {} at t={:?}", r.worst_violation, r.location))?;
        worst = worst.max(r.worst_violation);
    }
    Ok(format!("pi r defect {lin_defect:.1e}; 20 random curves, worst defect {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let psi = weight(vec![2.0]);
    let c = g_curve(&one(1), &natural_ideal(&psi, None).map_err(e2s)?, &disc(), &psi, None, &grid(0.01, 3.0), &exact_opts())
        .map_err(e2s)?;
    let r = check_differential_inequality(&c, 1e-9);
    ensure(r.passed, || format!("violated by {} at t={:?}", r.worst_violation, r.location))?;
    // equality: both sides agree up to the allowance, from either direction
    let pts = differential_points(&c);
    let worst = pts.iter().map(|p| p.raw.abs() - p.allowance).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst <= 1e-9, || format!("sides differ beyond the allowance by {worst:.2e}"))?;
    let max_allow = pts.iter().map(|p| p.allowance).fold(0.0, f64::max);
    Ok(format!("{} points, |lhs-rhs| within allowance (max allowance {max_allow:.1e})", pts.len()))
}

fn criterion_6() -> Outcome {
    let lc = layer_cake(&one(1), &weight(vec![1.0]), &disc(), 1e-6).map_err(e2s)?;
    ensure(rel(lc.lhs, 2.0 * PI) <= 1e-12 && rel(lc.rhs, 2.0 * PI) <= 1e-6, || {
        format!("p=2 disc: lhs {} rhs {}", lc.lhs, lc.rhs)
    })?;
    ensure(lc.report.passed, || format!("p=2 disc: {}", lc.report.worst_violation))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_1d: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let k = rng.gen_range(0..4u32);
        let c = rng.gen_range(0.1..(2.0 * (k as f64 + 1.0) - 0.1));
        let radius = rng.gen_range(0.3..=1.0);
        let f = random_poly(&mut rng, 1, 3, 2);
        let lc = layer_cake(&f, &weight(vec![c]), &ModelDomain::polydisc(vec![radius]).unwrap(), 1e-6).map_err(e2s)?;
        if lc.report.skipped.is_some() {
            continue;
        }
        ensure(lc.report.passed, || format!("1D instance {done}: {}", lc.report.worst_violation))?;
        worst_1d = worst_1d.max(lc.report.worst_violation);
        done += 1;
    }
    let mut worst_2d: f64 = 0.0;
    let ball = ModelDomain::ball(1.0, 2).unwrap();
    for i in 0..4 {
        let phi = weight(vec![rng.gen_range(0.2..1.5), rng.gen_range(0.2..1.5)]);
        let f = random_poly(&mut rng, 2, 2, 2);
        let lc = layer_cake(&f, &phi, &ball, 1e-3).map_err(e2s)?;
        ensure(lc.report.skipped.is_none(), || format!("2D instance {i} skipped"))?;
        ensure(lc.report.passed, || format!("2D instance {i}: {}", lc.report.worst_violation))?;
        worst_2d = worst_2d.max(lc.report.worst_violation);
    }
    Ok(format!("p=2 disc {:.1e}; 20 1D worst {worst_1d:.1e}; 4 ball worst {worst_2d:.1e}", lc.report.worst_violation))
}

fn criterion_7() -> Outcome {
    let r_grid = [0.9, 0.5, 0.1, 0.01];
    let dk = dk_lower_bound(&one(1), &weight(vec![1.0]), &disc(), &r_grid, None, 1e-9).map_err(e2s)?;
    ensure(rel(dk.constant, PI) <= 1e-9, || format!("C = {}", dk.constant))?;
    ensure(dk.jumping_number == 1.0, || format!("c = {}", dk.jumping_number))?;
    for (r, s) in &dk.scaled_masses {
        ensure(rel(*s, PI) <= 1e-9, || format!("r={r}: r^-2 mass = {s}"))?;
    }
    ensure(dk.report.passed, || format!("bound violated by {}", dk.report.worst_violation))?;
    let gauge = weight(vec![2.0]);
    let inf = dk_lower_bound(&one(1), &weight(vec![1.0]), &disc(), &r_grid, Some(&gauge), 0.0).map_err(e2s)?;
    ensure(inf.constant == f64::INFINITY, || format!("gauged C = {}", inf.constant))?;
    ensure(inf.scaled_masses.iter().all(|(_, s)| *s == f64::INFINITY), || {
        format!("gauged masses {:?}", inf.scaled_masses)
    })?;
    ensure(inf.report.passed, || "infinite branch reported a violation".into())?;
    Ok("r^-2·mass = C = pi at all r; infinite branch diverges at every r".into())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 50 {
        let inst = random_instance(&mut rng, true, true);
        let t = if matches!(inst.domain, ModelDomain::Ball { .. }) { 0.0 } else { rng.gen_range(0.0..2.0) };
        let region = SublevelRegion::new(inst.domain.clone(), inst.psi.clone(), t).map_err(e2s)?;
        let ideal = inst.ideal();
        let res = minimize(&inst.f, &ideal, &region, inst.phi.as_ref(), &exact_opts()).map_err(e2s)?;
        let Some(f_t) = res.minimizer.filter(|_| !res.value.is_infinite()) else { continue };
        let f_hat = add_ideal_element(&mut rng, &inst.f, &ideal);
        let r = pythagoras_residual(&f_t, &f_hat, &region, inst.phi.as_ref()).map_err(e2s)?;
        ensure(r < 1e-9, || format!("pair {done}: residual {r:.2e}"))?;
        worst = worst.max(r);
        done += 1;
    }
    let mut worst_se: f64 = 0.0;
    for i in 0..5u64 {
        let inst = random_instance(&mut rng, false, false);
        let t = rng.gen_range(0.0..1.0);
        let region = SublevelRegion::new(inst.domain.clone(), inst.psi.clone(), t).map_err(e2s)?;
        let ideal = inst.ideal();
        let f_hat = add_ideal_element(&mut rng, &inst.f, &ideal);
        let opts = MinimizeOptions {
            solver: Solver::MonteCarlo,
            degree: f_hat.degree(),
            samples: 100_000,
            seed: 800 + i,
            check_truncation: false,
        };
        let res = minimize(&inst.f, &ideal, &region, None, &opts).map_err(e2s)?;
        let f_t = res.minimizer.ok_or("no Monte Carlo minimizer")?;
        let fresh = draw_region_samples(&region, 100_000, 900 + i).map_err(e2s)?;
        let (d, se) = pythagoras_defect_mc(&f_t, &f_hat, &fresh, None).map_err(e2s)?;
        let z = if d == 0.0 { 0.0 } else { d.abs() / se };
        ensure(z < 5.0, || format!("MC pair {i}: defect {d:.3e} is {z:.2} SE"))?;
        worst_se = worst_se.max(z);
    }
    Ok(format!("50 exact pairs worst {worst:.1e}; 5 MC pairs worst {worst_se:.2} SE"))
}

/// `f` plus a random combination of ideal generators times monomials.
fn add_ideal_element(rng: &mut ChaCha8Rng, f: &MonomialFn, ideal: &MonomialIdeal) -> MonomialFn {
    let n = f.dim();
    let mut terms: Vec<(Vec<u32>, Complex64)> = f.terms().map(|(a, c)| (a.clone(), *c)).collect();
    for g in ideal.generators() {
        for _ in 0..2 {
            let alpha: Vec<u32> = g.iter().map(|e| e + rng.gen_range(0..2)).collect();
            terms.push((alpha, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
    }
    MonomialFn::from_terms(n, terms).unwrap()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let inst = random_instance(&mut rng, false, true);
        let t = rng.gen_range(0.0..2.0);
        let region = SublevelRegion::new(inst.domain.clone(), inst.psi.clone(), t).map_err(e2s)?;
        let ideal = inst.ideal();
        let exact = minimize(&inst.f, &ideal, &region, inst.phi.as_ref(), &exact_opts()).map_err(e2s)?;
        if exact.value.is_infinite() {
            continue;
        }
        let ls_opts = MinimizeOptions {
            solver: Solver::LeastSquares,
            ..exact_opts()
        };
        let ls = minimize(&inst.f, &ideal, &region, inst.phi.as_ref(), &ls_opts).map_err(e2s)?;
        let e = rel(ls.value, exact.value);
        ensure(e < 1e-6, || format!("instance {done}: {} vs {}", ls.value, exact.value))?;
        worst = worst.max(e);
        done += 1;
    }
    Ok(format!("20 instances, worst rel err {worst:.1e}"))
}

fn criterion_10() -> Outcome {
    let (a, b) = (1e-3f64.ln(), 30f64.ln());
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let t = (a + (b - a) * k as f64 / 999.0).exp();
        let p = ode_pair(t).map_err(e2s)?;
        let r = p.residual1.max(p.residual2);
        ensure(r < 1e-10, || format!("t={t}: residual {r:.2e}"))?;
        ensure(p.positivity_margin > 0.0, || format!("t={t}: u''s - s'' = {}", p.positivity_margin))?;
        worst = worst.max(r);
    }
    let mut gz_err: f64 = 0.0;
    for (t0, width) in [(0.0, 1.0), (1.0, 1.0), (2.5, 0.5)] {
        let top = t0 + width;
        let sup = (1..=1000)
            .map(|k| ode_pair(top * k as f64 / 1000.0).map(|p| (-p.u).exp()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(e2s)?
            .into_iter()
            .fold(0.0, f64::max);
        let gz = gz_factor(t0, width).map_err(e2s)?;
        ensure((gz - sup).abs() < 1e-10, || format!("gz({t0},{width}) = {gz} vs sampled {sup}"))?;
        gz_err = gz_err.max((gz - sup).abs());
    }
    Ok(format!("worst residual {worst:.1e}; gz vs sampled sup {gz_err:.1e}"))
}

fn criterion_11() -> Outcome {
    let mut worst_id: f64 = 0.0;
    let mut worst_conv: f64 = 0.0;
    for (t0, width) in [(1.0, 1.0), (0.0, 2.0), (3.0, 0.5)] {
        let eps = 1e-4;
        let m = mollified_v(eps, t0, width).map_err(e2s)?;
        let ramp = m.cutoff();
        for k in 0..500 {
            let t = -t0 - eps + 10.0 * k as f64 / 499.0;
            let d = (m.value(t) - t).abs();
            ensure(d <= 1e-10, || format!("v_eps({t}) - t = {d:.2e}"))?;
            worst_id = worst_id.max(d);
        }
        let (k1, k2) = ramp.kinks();
        let keep_out = 4.0 * eps;
        for k in 0..4000 {
            let t = k1 - 1.0 + (k2 - k1 + 2.0) * k as f64 / 3999.0;
            let v = m.eval(t);
            ensure((0.0..=1.0).contains(&v.first), || format!("v_eps'({t}) = {}", v.first))?;
            if (t - k1).abs() > keep_out && (t - k2).abs() > keep_out {
                let d = (v.first - ramp.b(t)).abs();
                ensure(d < 1e-3, || format!("|v_eps' - b| = {d:.2e} at {t}"))?;
                worst_conv = worst_conv.max(d);
            }
        }
    }
    Ok(format!("identity to {worst_id:.1e}; 0 <= v' <= 1; |v'-b| <= {worst_conv:.1e}"))
}

fn run_verify(bin: &str, manifest: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(bin)
        .args(["verify", "--config"])
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .args(["--seed", "12345"])
        .env("RUST_LOG", "error")
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.code() == Some(0), || format!("verify exited with {status}"))
}

fn csv_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = entry.map_err(|e| e.to_string())?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            out.push((name, std::fs::read(&p).map_err(|e| e.to_string())?));
        }
    }
    out.sort();
    Ok(out)
}

fn criterion_12() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_sublevel-l2");
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/verify_manifest.json");
    let tmp = std::env::temp_dir().join(format!("sublevel-l2-acceptance-{}", std::process::id()));
    let (a, b) = (tmp.join("a"), tmp.join("b"));
    let result = (|| {
        run_verify(bin, &manifest, &a)?;
        run_verify(bin, &manifest, &b)?;
        let (fa, fb) = (csv_files(&a)?, csv_files(&b)?);
        ensure(!fa.is_empty(), || "no CSV written".into())?;
        ensure(fa.len() == fb.len(), || "runs wrote different file sets".into())?;
        for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
            ensure(na == nb && ca == cb, || format!("{na} differs between runs"))?;
        }
        Ok(format!("{} CSV files byte-identical", fa.len()))
    })();
    let _ = std::fs::remove_dir_all(&tmp);
    result
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "sharp effectiveness, disc family", Duration::from_secs(1), criterion_1),
        (2, "Bergman kernel chain", Duration::from_secs(1), criterion_2),
        (3, "G(t) >= e^-t G(0)", Duration::from_secs(10), criterion_3),
        (4, "concavity of G(-log r)", Duration::from_secs(10), criterion_4),
        (5, "differential inequality", Duration::from_secs(5), criterion_5),
        (6, "layer-cake identity", Duration::from_secs(30), criterion_6),
        (7, "lower bound on sublevel masses", Duration::from_secs(5), criterion_7),
        (8, "Pythagoras identity", Duration::from_secs(60), criterion_8),
        (9, "least squares vs orthogonal", Duration::from_secs(30), criterion_9),
        (10, "ODE pair", Duration::from_secs(1), criterion_10),
        (11, "mollified cutoff family", Duration::from_secs(5), criterion_11),
        (12, "determinism of verify", Duration::from_secs(120), criterion_12),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > budget => Err(format!("{msg}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS  {id:>2}. {name} [{elapsed:.2?}] {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {id:>2}. {name} [{elapsed:.2?}] {msg}");
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
