//! Weighted monomial masses `∫_{ψ<−t} |z^α|² e^{−φ} dλ` over model domains.
//!
//! In log coordinates `x_j = log|z_j|` the integrand becomes
//! `(2π)^n exp(Σ β_j x_j)` with `β_j = 2α_j + 2 − d_j`, where `d` is the
//! effective coefficient vector of `φ`. The mass is finite iff every `β_j > 0`.
//!
//! * Polydiscs: exact for every `n`. Writing `u_j = e^{β_j x_j}` turns the
//!   region into `{Π u_j^{c_j/β_j} < e^{−t}}` inside a box, whose relative
//!   volume is a hypoexponential tail (see [`phase_type`]).
//! * Balls: the Dirichlet integral when the ψ-plane misses the ball, nested
//!   adaptive quadrature otherwise.

mod adaptive;
pub mod gauss_kronrod;
pub mod monte_carlo;
mod phase_type;

use std::f64::consts::PI;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::domains::ModelDomain;
use crate::error::{check_dim, Result};
use crate::weights::{SublevelRegion, ToricWeight};

pub use monte_carlo::{draw_region_samples, mc_integral, SampleSet};

/// Relative tolerance of the adaptive engine.
pub const ADAPTIVE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Adaptive,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Adaptive => "adaptive",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// Which engine `monomial_mass_with` should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Exact whenever a closed form applies, adaptive otherwise.
    #[default]
    Auto,
    /// Always run the nested adaptive rule (used for cross-checks).
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralEstimate {
    value: f64,
    abs_error: Option<f64>,
    method: Method,
    diverged: bool,
}

impl IntegralEstimate {
    pub(crate) fn new(value: f64, abs_error: Option<f64>, method: Method, diverged: bool) -> Self {
        IntegralEstimate {
            value: if diverged { f64::INFINITY } else { value },
            abs_error: if method == Method::ClosedForm { None } else { abs_error },
            method,
            diverged,
        }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, None, Method::ClosedForm, false)
    }

    pub fn divergent(method: Method) -> Self {
        Self::new(f64::INFINITY, None, method, true)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn abs_error(&self) -> Option<f64> {
        self.abs_error
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Multiply by a nonnegative constant. A diverged estimate stays diverged.
    pub fn scaled(self, factor: f64) -> Self {
        Self::new(
            self.value * factor,
            self.abs_error.map(|e| e * factor),
            self.method,
            self.diverged,
        )
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }
}

impl Add for IntegralEstimate {
    type Output = IntegralEstimate;

    fn add(self, rhs: Self) -> Self {
        let method = self.method.max(rhs.method);
        let abs_error = match (self.abs_error, rhs.abs_error) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(0.0) + b.unwrap_or(0.0)),
        };
        Self::new(
            self.value + rhs.value,
            abs_error,
            method,
            self.diverged || rhs.diverged,
        )
    }
}

impl std::iter::Sum for IntegralEstimate {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(IntegralEstimate::zero(), |a, b| a + b)
    }
}

/// Log-coordinate exponents `β_j = 2α_j + 2 − d_j`.
pub fn radial_exponents(alpha: &[u32], weight_phi: Option<&ToricWeight>) -> Vec<f64> {
    let d = weight_phi
        .map(|w| w.effective())
        .unwrap_or_else(|| vec![0.0; alpha.len()]);
    alpha
        .iter()
        .zip(d)
        .map(|(a, d)| 2.0 * f64::from(*a) + 2.0 - d)
        .collect()
}

/// `∫_{region} |z^α|² e^{−φ} dλ`; `weight_phi = None` means `φ ≡ 0`.
pub fn monomial_mass(
    alpha: &[u32],
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
) -> Result<IntegralEstimate> {
    monomial_mass_with(alpha, region, weight_phi, Engine::Auto)
}

pub fn monomial_mass_with(
    alpha: &[u32],
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
    engine: Engine,
) -> Result<IntegralEstimate> {
    let n = region.dim();
    check_dim(n, alpha.len())?;
    if let Some(w) = weight_phi {
        check_dim(n, w.dim())?;
    }
    let beta = radial_exponents(alpha, weight_phi);
    if beta.iter().any(|b| *b <= 0.0) {
        // Every coordinate axis meets the region (it is downward closed in
        // log coordinates), so a nonpositive exponent is a true divergence.
        let method = match engine {
            Engine::Auto => Method::ClosedForm,
            Engine::Adaptive => Method::Adaptive,
        };
        return Ok(IntegralEstimate::divergent(method));
    }
    let angular = (2.0 * PI).powi(n as i32);

    match (engine, region.domain()) {
        (Engine::Auto, ModelDomain::Polydisc { radii }) => {
            Ok(IntegralEstimate::exact(angular * polydisc_log_mass(radii, region, &beta)))
        }
        (Engine::Auto, ModelDomain::Ball { radius, .. }) if region.constraint_inactive() => {
            Ok(IntegralEstimate::exact(ball_dirichlet_mass(*radius, &beta)))
        }
        _ => {
            let integrator = adaptive::LogRegionIntegrator::new(region, &beta, ADAPTIVE_REL_TOL);
            let (value, err) = integrator.integrate();
            Ok(IntegralEstimate::new(
                angular * value,
                Some(angular * err),
                Method::Adaptive,
                false,
            ))
        }
    }
}

/// `∫ exp(β·x) dx` over `{x_j < log R_j, c·x < −t}`.
fn polydisc_log_mass(radii: &[f64], region: &SublevelRegion, beta: &[f64]) -> f64 {
    let c = region.weight().effective();
    let box_mass: f64 = radii
        .iter()
        .zip(beta)
        .map(|(r, b)| r.powf(*b) / b)
        .product();
    let mut rates = Vec::new();
    let mut excess = region.threshold();
    for ((cj, r), b) in c.iter().zip(radii).zip(beta) {
        if *cj > 0.0 {
            rates.push(b / cj);
            excess += cj * r.ln();
        }
    }
    box_mass * phase_type::hypoexponential_tail(&rates, excess)
}

/// `∫_{|z|<R} Π |z_j|^{β_j − 2} dλ = π^n R^{Σβ} Π Γ(β_j/2) / Γ(1 + Σβ_j/2)`.
fn ball_dirichlet_mass(radius: f64, beta: &[f64]) -> f64 {
    let n = beta.len() as f64;
    let total: f64 = beta.iter().sum();
    let log = n * PI.ln() + total * radius.ln() + beta.iter().map(|b| ln_gamma(b / 2.0)).sum::<f64>()
        - ln_gamma(1.0 + total / 2.0);
    log.exp()
}
