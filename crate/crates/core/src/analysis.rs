//! Verifiers for the structural statements about minimal L² integrals:
//! jumping numbers, the curve `G(t)` and its lower bound, concavity and
//! differential inequality, the layer-cake identity, the effectiveness
//! threshold and the Demailly–Kollár type lower bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::domains::ModelDomain;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{bergman_at_origin, MonomialFn};
use crate::ideals::{germ_in_ideal, multiplier_ideal, plus_ideal, MonomialIdeal};
use crate::minimizer::{minimize, MinimizeOptions};
use crate::quadrature::gauss_kronrod::{integrate, GkOptions};
use crate::quadrature::IntegralEstimate;
use crate::weights::{SublevelRegion, ToricWeight};

/// Grid points tested below `p*` in [`effectiveness_threshold`].
pub const MEMBERSHIP_GRID: usize = 64;

/// Threshold beyond which sublevel masses are extrapolated in [`layer_cake`].
const TAIL_HORIZON: f64 = 690.0;
const TAIL_FIT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    /// Grid value (t, r or p) where the worst case occurred.
    pub location: Option<f64>,
    pub tolerance: f64,
    /// Violation before any discretization allowance.
    pub raw_violation: Option<f64>,
    pub skipped: Option<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, worst_violation: f64, location: Option<f64>, tolerance: f64) -> Self {
        CheckReport {
            name: name.into(),
            passed: worst_violation <= tolerance,
            worst_violation,
            location,
            tolerance,
            raw_violation: None,
            skipped: None,
        }
    }

    /// A check whose hypothesis fails; it counts as passed.
    pub fn skipped(name: impl Into<String>, tolerance: f64, reason: impl Into<String>) -> Self {
        CheckReport {
            skipped: Some(reason.into()),
            ..Self::new(name, 0.0, None, tolerance)
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

// Largest value and where it occurs; NaN counts as the worst possible.
fn worst(points: impl IntoIterator<Item = (f64, f64)>) -> (f64, Option<f64>) {
    let mut best = (0.0, None);
    for (loc, v) in points {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if best.1.is_none() || v > best.0 {
            best = (v, Some(loc));
        }
    }
    best
}

/// `c_o^F(φ) = sup{c : |F|² e^{−2cφ} ∈ L¹ near o}`.
///
/// For `z^k` this is `min_j (k_j + 1)/c_j` over `c_j > 0`. A polynomial with
/// several terms takes the minimum over its monomials.
pub fn jumping_number(f: &MonomialFn, weight: &ToricWeight) -> Result<f64> {
    check_dim(weight.dim(), f.dim())?;
    if f.is_zero() {
        return Err(Error::InvalidInput("jumping number of the zero germ".into()));
    }
    let c = weight.effective();
    Ok(f.terms()
        .map(|(alpha, _)| {
            alpha
                .iter()
                .zip(&c)
                .filter(|(_, c)| **c > 0.0)
                .map(|(k, c)| (f64::from(*k) + 1.0) / c)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min))
}

/// `∫_{region} |f|² e^{−φ}` by orthogonality of monomials.
pub fn weighted_mass(
    f: &MonomialFn,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
) -> Result<IntegralEstimate> {
    crate::hilbert::norm_squared(f, region, weight_phi)
}

/// The whole domain as a region, cut by `{φ < 0}`, which only removes a null
/// set when `φ ≤ 0` on `D`.
fn full_region(domain: &ModelDomain, weight: &ToricWeight) -> Result<SublevelRegion> {
    let sup = weight.sup_on(domain)?;
    if sup > 0.0 {
        return Err(Error::NonNegativeWeight { field: "weight_phi".into(), sup });
    }
    SublevelRegion::new(domain.clone(), weight.clone(), 0.0)
}

/// The ideal `I(ψ + φ)` that `G` is built on; `I(ψ)` without `φ`.
pub fn natural_ideal(weight_psi: &ToricWeight, weight_phi: Option<&ToricWeight>) -> Result<MonomialIdeal> {
    match weight_phi {
        None => Ok(multiplier_ideal(weight_psi)),
        Some(phi) => {
            check_dim(weight_psi.dim(), phi.dim())?;
            let sum = weight_psi
                .effective()
                .iter()
                .zip(phi.effective())
                .map(|(a, b)| a + b)
                .collect();
            Ok(multiplier_ideal(&ToricWeight::new(sum)?))
        }
    }
}

/// `G(t) = C_{F,I}({ψ < −t}, φ)` sampled on a grid. The structural checks
/// below hold for `I = I(ψ + φ)` (see [`natural_ideal`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub f: MonomialFn,
    pub ideal: MonomialIdeal,
    pub weight: ToricWeight,
}

impl GCurve {
    pub fn g0(&self) -> f64 {
        self.values[0]
    }

    fn scale(&self) -> f64 {
        if self.g0() > 0.0 {
            self.g0()
        } else {
            1.0
        }
    }
}

pub fn validate_t_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::InvalidInput("t grid must start at 0".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("t grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Raw `G(t)` values; no monotone repair.
pub fn g_curve(
    f: &MonomialFn,
    ideal: &MonomialIdeal,
    domain: &ModelDomain,
    weight_psi: &ToricWeight,
    weight_phi: Option<&ToricWeight>,
    grid: &[f64],
    opts: &MinimizeOptions,
) -> Result<GCurve> {
    validate_t_grid(grid)?;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|t| {
            let region = SublevelRegion::new(domain.clone(), weight_psi.clone(), *t)?;
            Ok(minimize(f, ideal, &region, weight_phi, opts)?.value)
        })
        .collect::<Result<_>>()?;
    if values[0] == f64::INFINITY {
        return Err(Error::G0Infinite);
    }
    Ok(GCurve {
        grid: grid.to_vec(),
        values,
        f: f.clone(),
        ideal: ideal.clone(),
        weight: weight_psi.clone(),
    })
}

/// `G(t) ≥ e^{−t} G(0)`: worst `(e^{−t}G(0) − G(t))/G(0)`, clamped at 0.
pub fn check_lower_bound(curve: &GCurve, tolerance: f64) -> CheckReport {
    let g0 = curve.g0();
    let (w, loc) = worst(
        curve
            .grid
            .iter()
            .zip(&curve.values)
            .map(|(t, g)| (*t, (((-t).exp() * g0 - g) / curve.scale()).max(0.0))),
    );
    CheckReport::new("lower_bound", w, loc, tolerance)
}

/// Concavity defect of `r ↦ G(−log r)` at each grid point (0 at the ends):
/// how far `G` falls below the chord through its neighbours, over `G(0)`.
pub fn concavity_defects(curve: &GCurve) -> Vec<f64> {
    let n = curve.grid.len();
    // increasing r = decreasing t
    let r: Vec<f64> = curve.grid.iter().rev().map(|t| (-t).exp()).collect();
    let g: Vec<f64> = curve.values.iter().rev().copied().collect();
    let mut out = vec![0.0; n];
    for i in 1..n.saturating_sub(1) {
        let chord = g[i - 1] + (g[i + 1] - g[i - 1]) * (r[i] - r[i - 1]) / (r[i + 1] - r[i - 1]);
        out[n - 1 - i] = ((chord - g[i]) / curve.scale()).max(0.0);
    }
    out
}

pub fn check_concavity(curve: &GCurve, tolerance: f64) -> Result<CheckReport> {
    if curve.grid.len() < 3 {
        return Err(Error::InvalidInput("concavity needs at least 3 grid points".into()));
    }
    let d = concavity_defects(curve);
    let (w, loc) = worst(curve.grid.iter().copied().zip(d));
    Ok(CheckReport::new("concavity", w, loc, tolerance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffPoint {
    pub t0: f64,
    /// `G(0) − G(t₀) − (e^{t₀} − 1)·(−slope)`, over `G(0)`.
    pub raw: f64,
    /// Discretization allowance, over `G(0)`.
    pub allowance: f64,
}

/// Forward-difference form of
/// `G(0) − G(t₀) ≤ (e^{t₀} − 1)·liminf_{B→0+} (G(t₀) − G(t₀+B))/B`.
///
/// A forward difference over `h` underestimates the derivative's magnitude
/// by about `h/2·|G''|`; after the `(e^{t₀} − 1)` factor this is covered by
/// `2h·|slope|·max(1, e^{t₀} − 1)` for the exponential-type curves here.
pub fn differential_points(curve: &GCurve) -> Vec<DiffPoint> {
    let g0 = curve.g0();
    let scale = curve.scale();
    (1..curve.grid.len().saturating_sub(1))
        .map(|i| {
            let t0 = curve.grid[i];
            let h = curve.grid[i + 1] - t0;
            let slope = (curve.values[i + 1] - curve.values[i]) / h;
            let factor = t0.exp_m1();
            DiffPoint {
                t0,
                raw: (g0 - curve.values[i] + factor * slope) / scale,
                allowance: 2.0 * h * slope.abs() * factor.max(1.0) / scale,
            }
        })
        .collect()
}

pub fn check_differential_inequality(curve: &GCurve, tolerance: f64) -> CheckReport {
    let pts = differential_points(curve);
    let (net, loc) = worst(pts.iter().map(|p| (p.t0, (p.raw - p.allowance).max(0.0))));
    let (raw, _) = worst(pts.iter().map(|p| (p.t0, p.raw.max(0.0))));
    CheckReport {
        raw_violation: Some(raw),
        ..CheckReport::new("differential_inequality", net, loc, tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCake {
    pub lhs: f64,
    pub rhs: f64,
    pub report: CheckReport,
}

/// `∫_D |F|² e^{−φ} = ∫_{−∞}^{∞} e^t ∫_{φ<−t} |F|² dt` for `φ ≤ 0` on `D`.
///
/// For `t ≤ t* = −sup_D φ` the sublevel set is all of `D`, so that part of
/// the right side is `e^{t*}·‖F‖²_D` in closed form; the rest is a 1D
/// integral over `[t*, ∞)`.
pub fn layer_cake(
    f: &MonomialFn,
    weight_phi: &ToricWeight,
    domain: &ModelDomain,
    tolerance: f64,
) -> Result<LayerCake> {
    let region0 = full_region(domain, weight_phi)?;
    check_dim(domain.dim(), f.dim())?;
    let lhs = weighted_mass(f, &region0, Some(weight_phi))?;
    if lhs.diverged() {
        return Ok(LayerCake {
            lhs: f64::INFINITY,
            rhs: f64::NAN,
            report: CheckReport::skipped("layer_cake", tolerance, "weighted mass of f diverges"),
        });
    }
    let t_star = -weight_phi.sup_on(domain)?;
    let plain = weighted_mass(f, &region0, None)?.value();
    let mut failure = None;
    let mut integrand = |t: f64| match region0
        .with_threshold(t)
        .and_then(|r| weighted_mass(f, &r, None))
    {
        // in log form so that e^t never overflows on its own
        Ok(m) if m.value() > 0.0 => (t + m.value().ln()).exp(),
        Ok(_) => 0.0,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    // past the horizon the sublevel masses underflow; the remainder is
    // closed off with the local exponential decay rate
    let horizon = TAIL_HORIZON.max(t_star + 50.0);
    let mut breaks = Vec::new();
    let mut w = 1.0;
    while t_star + w < horizon {
        breaks.push(t_star + w);
        w *= 2.0;
    }
    let body = integrate(
        &mut integrand,
        t_star,
        horizon,
        &breaks,
        GkOptions {
            rel_tol: 1e-11,
            max_intervals: 2000,
            ..GkOptions::default()
        },
    );
    let (h0, h1) = (integrand(horizon - TAIL_FIT), integrand(horizon));
    if let Some(e) = failure {
        return Err(e);
    }
    let rest = if h1 > 0.0 && h0 > h1 { h1 * TAIL_FIT / (h0 / h1).ln() } else { 0.0 };
    if !body.converged || (h1 > 0.0 && h0 <= h1) {
        log::warn!("layer-cake tail is unresolved (error estimate {:e})", body.abs_error);
    }
    let rhs = t_star.exp() * plain + body.value + rest;
    let discrepancy = (lhs.value() - rhs).abs() / lhs.value().max(f64::MIN_POSITIVE);
    Ok(LayerCake {
        lhs: lhs.value(),
        rhs,
        report: CheckReport::new("layer_cake", discrepancy, None, tolerance),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Effectiveness {
    pub jumping_number: f64,
    /// `C_{F, I₊(2cφ)}(D)`, or `∫_D |F|²` when `c = ∞`.
    pub constant: f64,
    pub weighted_mass: f64,
    pub ratio: f64,
    pub p_star: f64,
    pub report: CheckReport,
}

/// Effectiveness of strong openness: `F ∈ I(pφ)` whenever
/// `p/(p−1) > ∫_D|F|²e^{−φ} / C_{F,I₊(2cφ)}(D)`, i.e. for `p < p*`.
///
/// The report compares `F ∈ I(pφ)` on a grid of `p ∈ (1, p*)` against the
/// guarantee, and against the closed form `p < 2c`; any disagreement fails.
pub fn effectiveness_threshold(
    f: &MonomialFn,
    weight_phi: &ToricWeight,
    domain: &ModelDomain,
) -> Result<Effectiveness> {
    let c = jumping_number(f, weight_phi)?;
    effectiveness_with(f, weight_phi, domain, c)
}

pub(crate) fn effectiveness_with(
    f: &MonomialFn,
    weight_phi: &ToricWeight,
    domain: &ModelDomain,
    c: f64,
) -> Result<Effectiveness> {
    let region = full_region(domain, weight_phi)?;
    let mass = weighted_mass(f, &region, Some(weight_phi))?;
    if mass.diverged() {
        return Err(Error::InvalidInput(
            "∫|F|²e^{−φ} diverges on the domain".into(),
        ));
    }
    let constant = if c == f64::INFINITY {
        weighted_mass(f, &region, None)?.value()
    } else {
        let ideal = plus_ideal(weight_phi, c)?;
        let opts = MinimizeOptions {
            check_truncation: false,
            degree: 0,
            ..MinimizeOptions::default()
        };
        minimize(f, &ideal, &region, None, &opts)?.value
    };
    let ratio = mass.value() / constant;
    if !(ratio > 1.0) {
        return Err(Error::InternalConsistency(format!(
            "mass ratio {ratio} is not above 1"
        )));
    }
    let p_star = ratio / (ratio - 1.0);
    let mut bad = 0usize;
    let mut first_bad = None;
    for k in 1..=MEMBERSHIP_GRID {
        let p = 1.0 + (p_star - 1.0) * k as f64 / (MEMBERSHIP_GRID + 1) as f64;
        let member = germ_in_ideal(f, &multiplier_ideal(&weight_phi.rescaled(p)?));
        if !member || member != (p < 2.0 * c) {
            bad += 1;
            first_bad.get_or_insert(p);
        }
    }
    let report = CheckReport::new("effectiveness", bad as f64, first_bad, 0.0);
    Ok(Effectiveness {
        jumping_number: c,
        constant,
        weighted_mass: mass.value(),
        ratio,
        p_star,
        report,
    })
}

/// `ratio ≤ K_D(o)·∫_D e^{−φ}` for `F ≡ 1`, which follows from
/// `C_{1,I} ≥ 1/K_D(o)`. Returns `(ratio, K_D(o)·∫_D e^{−φ}, report)`.
pub fn bergman_chain(
    weight_phi: &ToricWeight,
    domain: &ModelDomain,
    tolerance: f64,
) -> Result<(f64, f64, CheckReport)> {
    let one = MonomialFn::constant(domain.dim(), 1.0);
    let eff = effectiveness_threshold(&one, weight_phi, domain)?;
    let bound = bergman_at_origin(domain) * eff.weighted_mass;
    let violation = ((eff.ratio - bound) / bound).max(0.0);
    Ok((
        eff.ratio,
        bound,
        CheckReport::new("bergman_chain", violation, None, tolerance),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DkBound {
    pub jumping_number: f64,
    pub constant: f64,
    /// `(r, r^{−2c}·∫_{φ<log r}|F|²)`; `inf` for a divergent mass.
    pub scaled_masses: Vec<(f64, f64)>,
    pub report: CheckReport,
}

/// `r^{−2c} ∫_{φ<log r} |F|² ≥ C_{F,I₊(2cφ)}(D)` for `r ∈ (0, 1)`.
///
/// With `gauge = Some(w)` every integral carries the extra factor `e^{−w}`;
/// this makes the case `C = ∞` reachable, where each mass must diverge too.
pub fn dk_lower_bound(
    f: &MonomialFn,
    weight_phi: &ToricWeight,
    domain: &ModelDomain,
    r_grid: &[f64],
    gauge: Option<&ToricWeight>,
    tolerance: f64,
) -> Result<DkBound> {
    if r_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::InvalidInput("r grid must lie in (0, 1)".into()));
    }
    let c = jumping_number(f, weight_phi)?;
    let region = full_region(domain, weight_phi)?;
    let ideal = plus_ideal(weight_phi, c)?;
    let opts = MinimizeOptions {
        check_truncation: false,
        degree: 0,
        ..MinimizeOptions::default()
    };
    let constant = minimize(f, &ideal, &region, gauge, &opts)?.value;
    let scaled: Vec<(f64, f64)> = r_grid
        .iter()
        .map(|r| {
            let sub = SublevelRegion::below_log(domain.clone(), weight_phi.clone(), *r)?;
            let m = weighted_mass(f, &sub, gauge)?;
            Ok((*r, r.powf(-2.0 * c) * m.value()))
        })
        .collect::<Result<_>>()?;
    let (w, loc) = worst(scaled.iter().map(|(r, s)| {
        let v = if constant == f64::INFINITY {
            if *s == f64::INFINITY {
                0.0
            } else {
                1.0
            }
        } else {
            ((constant - s) / constant).max(0.0)
        };
        (*r, v)
    }));
    Ok(DkBound {
        jumping_number: c,
        constant,
        scaled_masses: scaled,
        report: CheckReport::new("dk_lower_bound", w, loc, tolerance),
    })
}
