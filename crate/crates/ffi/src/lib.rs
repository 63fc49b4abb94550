//! C ABI over `sublevel_l2`.
//!
//! Domains, weights and functions are opaque heap handles created by the
//! `sl_*_new`/`sl_domain_*` constructors and released by the matching
//! `*_free`. Every call returns an [`SlStatus`]; results go through out
//! pointers. On failure `sl_last_error_message` describes the error of the
//! last failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use num_complex::Complex64;
use sublevel_l2::analysis::{effectiveness_threshold, jumping_number, natural_ideal};
use sublevel_l2::domains::ModelDomain;
use sublevel_l2::error::Error;
use sublevel_l2::hilbert::MonomialFn;
use sublevel_l2::minimizer::{minimize, MinimizeOptions};
use sublevel_l2::odes::{gz_factor, ode_pair};
use sublevel_l2::quadrature::monomial_mass;
use sublevel_l2::weights::{SublevelRegion, ToricWeight};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// The requested integral is infinite; the out value is set to +inf.
    Diverged = 3,
    Numerical = 4,
    Panic = 5,
}

pub struct SlDomain(ModelDomain);
pub struct SlWeight(ToricWeight);
pub struct SlFunction(MonomialFn);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::InvalidInput(_)
        | Error::DimensionMismatch { .. }
        | Error::NonNegativeWeight { .. }
        | Error::Config { .. } => SlStatus::InvalidInput,
        Error::DivergedNorm { .. } | Error::G0Infinite => SlStatus::Diverged,
        _ => SlStatus::Numerical,
    }
}

struct Fail(SlStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        Fail(status_of(&e))
    }
}

fn null(what: &str) -> Fail {
    set_error(format!("{what} is null"));
    Fail(SlStatus::NullPointer)
}

fn guard(body: impl FnOnce() -> Result<SlStatus, Fail>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(s)) => s,
        Ok(Err(Fail(s))) => s,
        Err(_) => {
            set_error("internal panic");
            SlStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn array<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

fn boxed<T>(v: T, dst: &mut *mut T) -> SlStatus {
    *dst = Box::into_raw(Box::new(v));
    SlStatus::Ok
}

/// Message of the last failing call on this thread; valid until the next
/// failing call. Never null.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Polydisc with the given radii.
///
/// # Safety
/// `radii` must point to `n` doubles; `out_domain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_domain_polydisc(radii: *const f64, n: usize, out_domain: *mut *mut SlDomain) -> SlStatus {
    guard(|| {
        let dst = out(out_domain, "out_domain")?;
        let r = array(radii, n, "radii")?;
        Ok(boxed(SlDomain(ModelDomain::polydisc(r.to_vec())?), dst))
    })
}

/// Euclidean ball of `radius` in `C^dim`.
///
/// # Safety
/// `out_domain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_domain_ball(radius: f64, dim: usize, out_domain: *mut *mut SlDomain) -> SlStatus {
    guard(|| {
        let dst = out(out_domain, "out_domain")?;
        Ok(boxed(SlDomain(ModelDomain::ball(radius, dim)?), dst))
    })
}

/// # Safety
/// `domain` must come from a constructor above and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_domain_free(domain: *mut SlDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// `Σ c_j log|z_j|` with nonnegative coefficients.
///
/// # Safety
/// `coeffs` must point to `n` doubles; `out_weight` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_weight_toric(coeffs: *const f64, n: usize, out_weight: *mut *mut SlWeight) -> SlStatus {
    guard(|| {
        let dst = out(out_weight, "out_weight")?;
        let c = array(coeffs, n, "coeffs")?;
        Ok(boxed(SlWeight(ToricWeight::new(c.to_vec())?), dst))
    })
}

/// # Safety
/// `weight` must come from [`sl_weight_toric`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_weight_free(weight: *mut SlWeight) {
    if !weight.is_null() {
        drop(Box::from_raw(weight));
    }
}

/// The zero polynomial in `dim` variables.
///
/// # Safety
/// `out_function` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_function_new(dim: usize, out_function: *mut *mut SlFunction) -> SlStatus {
    guard(|| {
        let dst = out(out_function, "out_function")?;
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()).into());
        }
        Ok(boxed(SlFunction(MonomialFn::zero(dim)), dst))
    })
}

/// Adds `(re + i·im)·z^exponent`; repeated exponents accumulate.
///
/// # Safety
/// `function` must be a live handle; `exponent` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn sl_function_add_term(
    function: *mut SlFunction,
    exponent: *const u32,
    n: usize,
    re: f64,
    im: f64,
) -> SlStatus {
    guard(|| {
        let f = out(function, "function")?;
        let alpha = array(exponent, n, "exponent")?;
        let terms = f
            .0
            .terms()
            .map(|(a, c)| (a.clone(), *c))
            .chain(std::iter::once((alpha.to_vec(), Complex64::new(re, im))));
        f.0 = MonomialFn::from_terms(f.0.dim(), terms.collect::<Vec<_>>())?;
        Ok(SlStatus::Ok)
    })
}

/// # Safety
/// `function` must come from [`sl_function_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_function_free(function: *mut SlFunction) {
    if !function.is_null() {
        drop(Box::from_raw(function));
    }
}

fn finite_or_diverged(v: f64, dst: &mut f64) -> SlStatus {
    *dst = v;
    if v == f64::INFINITY {
        set_error("the integral diverges");
        SlStatus::Diverged
    } else {
        SlStatus::Ok
    }
}

/// `∫_{D ∩ {ψ < −t}} |z^α|² e^{−φ}`; `phi` may be null for `φ ≡ 0`.
///
/// # Safety
/// Handles must be live; `alpha` must point to `n` values; `out_value`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_monomial_mass(
    alpha: *const u32,
    n: usize,
    domain: *const SlDomain,
    psi: *const SlWeight,
    t: f64,
    phi: *const SlWeight,
    out_value: *mut f64,
) -> SlStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let alpha = array(alpha, n, "alpha")?;
        let d = get(domain, "domain")?;
        let w = get(psi, "psi")?;
        let region = SublevelRegion::new(d.0.clone(), w.0.clone(), t)?;
        let m = monomial_mass(alpha, &region, phi.as_ref().map(|p| &p.0))?;
        Ok(finite_or_diverged(m.value(), dst))
    })
}

/// Minimal `∫ |F|² e^{−φ}` over `D ∩ {ψ < −t}` among `F` with
/// `F − f ∈ I(ψ + φ)`, by the exact orthogonal solver.
///
/// # Safety
/// Handles must be live (`phi` may be null); `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_minimal_l2(
    function: *const SlFunction,
    domain: *const SlDomain,
    psi: *const SlWeight,
    t: f64,
    phi: *const SlWeight,
    out_value: *mut f64,
) -> SlStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let f = get(function, "function")?;
        let d = get(domain, "domain")?;
        let w = get(psi, "psi")?;
        let phi = phi.as_ref().map(|p| &p.0);
        let ideal = natural_ideal(&w.0, phi)?;
        let region = SublevelRegion::new(d.0.clone(), w.0.clone(), t)?;
        let res = minimize(&f.0, &ideal, &region, phi, &MinimizeOptions::default())?;
        Ok(finite_or_diverged(res.value, dst))
    })
}

/// `sup{c : |f|² e^{−2cφ} integrable near 0}`; `+inf` when unbounded.
///
/// # Safety
/// Handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_jumping_number(
    function: *const SlFunction,
    phi: *const SlWeight,
    out_value: *mut f64,
) -> SlStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let f = get(function, "function")?;
        let w = get(phi, "phi")?;
        *dst = jumping_number(&f.0, &w.0)?;
        Ok(SlStatus::Ok)
    })
}

/// Mass ratio `∫_D |f|² e^{−φ} / C` and the membership threshold `p*`.
/// `out_passed` is 1 when the membership grid below `p*` agrees with the
/// closed-form multiplier ideals.
///
/// # Safety
/// Handles must be live; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_effectiveness(
    function: *const SlFunction,
    phi: *const SlWeight,
    domain: *const SlDomain,
    out_ratio: *mut f64,
    out_p_star: *mut f64,
    out_passed: *mut i32,
) -> SlStatus {
    guard(|| {
        let ratio = out(out_ratio, "out_ratio")?;
        let p_star = out(out_p_star, "out_p_star")?;
        let passed = out(out_passed, "out_passed")?;
        let f = get(function, "function")?;
        let w = get(phi, "phi")?;
        let d = get(domain, "domain")?;
        let eff = effectiveness_threshold(&f.0, &w.0, &d.0)?;
        *ratio = eff.ratio;
        *p_star = eff.p_star;
        *passed = i32::from(eff.report.passed);
        Ok(SlStatus::Ok)
    })
}

/// `u = −log(1−e^{−t})`, `s = t/(1−e^{−t}) − 1` and the two ODE residuals.
///
/// # Safety
/// Out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_ode_pair(
    t: f64,
    out_u: *mut f64,
    out_s: *mut f64,
    out_residual1: *mut f64,
    out_residual2: *mut f64,
) -> SlStatus {
    guard(|| {
        let u = out(out_u, "out_u")?;
        let s = out(out_s, "out_s")?;
        let r1 = out(out_residual1, "out_residual1")?;
        let r2 = out(out_residual2, "out_residual2")?;
        let p = ode_pair(t)?;
        (*u, *s, *r1, *r2) = (p.u, p.s, p.residual1, p.residual2);
        Ok(SlStatus::Ok)
    })
}

/// `1 − e^{−(t0+B)}`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_gz_factor(t0: f64, b: f64, out_value: *mut f64) -> SlStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        *dst = gz_factor(t0, b)?;
        Ok(SlStatus::Ok)
    })
}
