//! Cutoff ramps, their mollified family, and the closed-form pair (u, s).

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::gauss_kronrod::{integrate, GkOptions};

/// Below this the cancellation-prone combinations of `t` and `e^{-t}`
/// switch to their Taylor series.
const SERIES_CUTOFF: f64 = 0.5;
const SERIES_TERMS: usize = 30;

fn check_ramp(t0: f64, width: f64) -> Result<()> {
    if !(t0.is_finite() && t0 >= 0.0) {
        return Err(Error::InvalidInput(format!("t0 must be finite and >= 0, got {t0}")));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidInput(format!("B must be finite and > 0, got {width}")));
    }
    Ok(())
}

/// The ramp `b` rising linearly from 0 at `-t0-B` to 1 at `-t0`, and its
/// integral `v(t) = ∫_0^t b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPair {
    t0: f64,
    width: f64,
}

pub fn cutoff(t0: f64, width: f64) -> Result<CutoffPair> {
    CutoffPair::new(t0, width)
}

impl CutoffPair {
    pub fn new(t0: f64, width: f64) -> Result<Self> {
        check_ramp(t0, width)?;
        Ok(CutoffPair { t0, width })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// The two kink points `-t0-B` and `-t0`.
    pub fn kinks(&self) -> (f64, f64) {
        (-self.t0 - self.width, -self.t0)
    }

    pub fn b(&self, t: f64) -> f64 {
        ((t + self.t0 + self.width) / self.width).clamp(0.0, 1.0)
    }

    // antiderivative of b vanishing at -infinity
    fn antiderivative(&self, t: f64) -> f64 {
        let (lo, hi) = self.kinks();
        if t <= lo {
            0.0
        } else if t < hi {
            let x = t - lo;
            x * x / (2.0 * self.width)
        } else {
            0.5 * self.width + (t - hi)
        }
    }

    pub fn v(&self, t: f64) -> f64 {
        if t >= -self.t0 {
            return t;
        }
        self.antiderivative(t) - self.antiderivative(0.0)
    }
}

// Standard bump exp(-1/(1-y^2)) on (-1, 1), unnormalized.
fn bump(y: f64) -> f64 {
    let d = 1.0 - y * y;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

fn kernel_opts() -> GkOptions {
    GkOptions {
        abs_tol: 1e-16,
        rel_tol: 1e-13,
        max_intervals: 200,
    }
}

struct BumpMoments {
    norm: f64,
    second: f64,
}

fn bump_moments() -> &'static BumpMoments {
    static MOMENTS: OnceLock<BumpMoments> = OnceLock::new();
    MOMENTS.get_or_init(|| {
        let norm = integrate(bump, -1.0, 1.0, &[0.0], kernel_opts()).value;
        let second = integrate(|y| y * y * bump(y), -1.0, 1.0, &[0.0], kernel_opts()).value / norm;
        BumpMoments { norm, second }
    })
}

/// For the normalized standard bump with law X: returns
/// `(P(X < y), E[(y-X)_+], E[(y-X)_+^2]/2)`.
fn standard_kernel(y: f64) -> (f64, f64, f64) {
    let m = bump_moments();
    if y <= -1.0 {
        return (0.0, 0.0, 0.0);
    }
    if y >= 1.0 {
        return (1.0, y, 0.5 * (y * y + m.second));
    }
    let opts = kernel_opts();
    let k0 = integrate(bump, -1.0, y, &[], opts).value / m.norm;
    let k1 = integrate(|x| (y - x) * bump(x), -1.0, y, &[], opts).value / m.norm;
    let k2 = integrate(|x| 0.5 * (y - x) * (y - x) * bump(x), -1.0, y, &[], opts).value / m.norm;
    (k0, k1, k2)
}

/// `v_ε(t)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothValue {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// The smooth family `v_ε`: the normalized ramp indicator on
/// `(-t0-B+2ε, -t0-2ε)` convolved with a bump of half-width `ε/4`,
/// integrated twice and pinned to `v_ε(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedCutoff {
    eps: f64,
    t0: f64,
    width: f64,
    lo: f64,
    hi: f64,
    delta: f64,
}

pub fn mollified_v(eps: f64, t0: f64, width: f64) -> Result<MollifiedCutoff> {
    MollifiedCutoff::new(eps, t0, width)
}

impl MollifiedCutoff {
    pub fn new(eps: f64, t0: f64, width: f64) -> Result<Self> {
        check_ramp(t0, width)?;
        if !(eps > 0.0 && eps < width / 8.0) {
            return Err(Error::InvalidInput(format!(
                "eps must lie in (0, B/8) = (0, {}), got {eps}",
                width / 8.0
            )));
        }
        Ok(MollifiedCutoff {
            eps,
            t0,
            width,
            lo: -t0 - width + 2.0 * eps,
            hi: -t0 - 2.0 * eps,
            delta: 0.25 * eps,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn cutoff(&self) -> CutoffPair {
        CutoffPair { t0: self.t0, width: self.width }
    }

    /// Support of `v_ε''`.
    pub fn support(&self) -> (f64, f64) {
        (self.lo - self.delta, self.hi + self.delta)
    }

    fn plateau(&self) -> f64 {
        self.hi - self.lo
    }

    // (K, K1, K2) of the scaled bump at x
    fn kernel(&self, x: f64) -> (f64, f64, f64) {
        let d = self.delta;
        let (k0, k1, k2) = standard_kernel(x / d);
        (k0, d * k1, d * d * k2)
    }

    // Second antiderivative of v_ε'' vanishing at -infinity, with derivatives.
    // The plateau is wider than the bump, so at most one end is ever being
    // smoothed and each branch only integrates a nonnegative kernel.
    fn raw(&self, t: f64) -> SmoothValue {
        let d = self.delta;
        let p = self.plateau();
        let x_lo = t - self.lo;
        let x_hi = t - self.hi;
        if x_lo <= -d {
            SmoothValue { value: 0.0, first: 0.0, second: 0.0 }
        } else if x_lo < d {
            let (k0, k1, k2) = self.kernel(x_lo);
            SmoothValue { value: k2 / p, first: k1 / p, second: k0 / p }
        } else if x_hi <= -d {
            let sigma2 = d * d * bump_moments().second;
            SmoothValue {
                value: 0.5 * (x_lo * x_lo + sigma2) / p,
                first: x_lo / p,
                second: 1.0 / p,
            }
        } else if x_hi < d {
            // by symmetry of the bump: 1-K(x) = K(-x), K1(x) = x + K1(-x),
            // K2(x) = (x^2 + sigma^2)/2 - K2(-x)
            let (k0, k1, k2) = self.kernel(-x_hi);
            SmoothValue {
                value: t - 0.5 * (self.lo + self.hi) + k2 / p,
                first: 1.0 - k1 / p,
                second: k0 / p,
            }
        } else {
            // the bump variance cancels between the two ends
            SmoothValue { value: t - 0.5 * (self.lo + self.hi), first: 1.0, second: 0.0 }
        }
    }

    pub fn eval(&self, t: f64) -> SmoothValue {
        let raw = self.raw(t);
        let base = self.raw(0.0).value;
        SmoothValue { value: raw.value - base, ..raw }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).value
    }

    pub fn first(&self, t: f64) -> f64 {
        self.eval(t).first
    }

    pub fn second(&self, t: f64) -> f64 {
        self.eval(t).second
    }

    /// `∫ v_ε''` over its support.
    pub fn second_mass(&self) -> f64 {
        let (a, b) = self.support();
        let d = self.delta;
        let breaks = [self.lo + d, self.hi - d];
        let opts = GkOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 400 };
        integrate(|t| self.raw(t).second, a, b, &breaks, opts).value
    }
}

/// `u`, `s`, their first two derivatives and the two ODE residuals at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdePoint {
    pub t: f64,
    pub u: f64,
    pub s: f64,
    pub du: f64,
    pub ds: f64,
    pub d2u: f64,
    pub d2s: f64,
    pub residual1: f64,
    pub residual2: f64,
    /// `u''s - s''`
    pub positivity_margin: f64,
}

// Σ_{k>=2} sign^k t^k / k!
fn exp_tail(t: f64, alternating: bool) -> f64 {
    let x = if alternating { -t } else { t };
    let mut term = x * x / 2.0;
    let mut sum = term;
    for k in 3..SERIES_TERMS {
        term *= x / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

// t(1 + e^{-t}) - 2(1 - e^{-t}) = Σ_{m>=3} (-1)^m (2-m) t^m / m!
fn curvature_numerator(t: f64) -> f64 {
    let mut power = t * t / 2.0;
    let mut sum = 0.0;
    for m in 3..SERIES_TERMS {
        power *= -t / m as f64;
        let term = (2.0 - m as f64) * power;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// The pair `u = -log(1-e^{-t})`, `s = t/(1-e^{-t}) - 1` at `t > 0`.
pub fn ode_pair(t: f64) -> Result<OdePoint> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!("ode_pair needs finite t > 0, got {t}")));
    }
    let one_minus = -(-t).exp_m1(); // 1 - e^{-t}
    let q = 1.0 / one_minus;
    let q1 = 1.0 / t.exp_m1(); // q - 1 = e^{u - t}
    let u = if t > std::f64::consts::LN_2 {
        -(-(-t).exp()).ln_1p()
    } else {
        -one_minus.ln()
    };
    // a = 1 - t(q-1), s = tq - 1, c = t(2q-1) - 2
    let (a, s, c) = if t < SERIES_CUTOFF {
        (
            exp_tail(t, false) * q1,
            exp_tail(t, true) * q,
            curvature_numerator(t) * q,
        )
    } else {
        (1.0 - t * q1, t * q - 1.0, t * (2.0 * q - 1.0) - 2.0)
    };
    let du = -q1;
    let d2u = q * q1;
    let ds = q * a;
    let d2s = q * q1 * c;
    let positivity_margin = d2u * s - d2s;
    let residual1 = ((s + ds * ds / positivity_margin) * q1 - 1.0).abs();
    let residual2 = (ds - s * du - 1.0).abs();
    Ok(OdePoint {
        t,
        u,
        s,
        du,
        ds,
        d2u,
        d2s,
        residual1,
        residual2,
        positivity_margin,
    })
}

/// `1 - e^{-(t0+B)}`, the supremum of `e^{-u}` over `(0, t0+B]`.
pub fn gz_factor(t0: f64, width: f64) -> Result<f64> {
    if t0.is_nan() || t0 < 0.0 {
        return Err(Error::InvalidInput(format!("t0 must be >= 0, got {t0}")));
    }
    if !(width > 0.0) {
        return Err(Error::InvalidInput(format!("B must be > 0, got {width}")));
    }
    Ok(-(-(t0 + width)).exp_m1())
}
