//! Diagonal toric plurisubharmonic weights `p · Σ c_j log|z_j|` and their
//! sublevel sets `{ψ < −t} ∩ D`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::ModelDomain;
use crate::error::{check_dim, Error, Result};

/// `scale · Σ_j coeffs_j · log|z_j|`.
///
/// Extension point: a max-type family `c · max_j log|z_j|` would slot in as a
/// second variant of the JSON `type` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightJson", into = "WeightJson")]
pub struct ToricWeight {
    coeffs: Vec<f64>,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum WeightJson {
    Toric {
        coeffs: Vec<f64>,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
}

fn unit_scale() -> f64 {
    1.0
}

impl TryFrom<WeightJson> for ToricWeight {
    type Error = Error;

    fn try_from(w: WeightJson) -> Result<Self> {
        let WeightJson::Toric { coeffs, scale } = w;
        ToricWeight::scaled(coeffs, scale)
    }
}

impl From<ToricWeight> for WeightJson {
    fn from(w: ToricWeight) -> Self {
        WeightJson::Toric {
            coeffs: w.coeffs,
            scale: w.scale,
        }
    }
}

impl ToricWeight {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        Self::scaled(coeffs, 1.0)
    }

    pub fn scaled(coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("weight needs at least one coefficient".into()));
        }
        if let Some(c) = coeffs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weight coefficient {c} must be finite and nonnegative"
            )));
        }
        if !coeffs.iter().any(|c| *c > 0.0) {
            return Err(Error::InvalidInput(
                "weight needs at least one positive coefficient".into(),
            ));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "weight scale {scale} must be finite and positive"
            )));
        }
        Ok(ToricWeight { coeffs, scale })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Coefficients with the scale folded in.
    pub fn effective(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c * self.scale).collect()
    }

    /// The same weight multiplied by `factor > 0`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::scaled(self.coeffs.clone(), self.scale * factor)
    }

    pub fn evaluate(&self, point: &[Complex64]) -> Result<f64> {
        check_dim(self.dim(), point.len())?;
        Ok(self.evaluate_unchecked(point))
    }

    pub(crate) fn evaluate_unchecked(&self, point: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for (c, z) in self.coeffs.iter().zip(point) {
            if *c > 0.0 {
                // 0.5·ln|z|² keeps ln(0) = −∞ without a square root.
                acc += c * 0.5 * z.norm_sqr().ln();
            }
        }
        self.scale * acc
    }

    /// Value in log coordinates `x_j = log|z_j|`.
    pub fn evaluate_log(&self, x: &[f64]) -> f64 {
        self.scale
            * self
                .coeffs
                .iter()
                .zip(x)
                .filter(|(c, _)| **c > 0.0)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }

    /// Supremum of the weight over the closed domain.
    pub fn sup_on(&self, domain: &ModelDomain) -> Result<f64> {
        check_dim(domain.dim(), self.dim())?;
        Ok(domain.log_shadow().sup_affine(&self.effective()))
    }

    /// True iff the weight is `≤ 0` on the closed domain.
    pub fn validate_negative(&self, domain: &ModelDomain) -> bool {
        matches!(self.sup_on(domain), Ok(s) if s <= 0.0)
    }
}

/// The open set `{z ∈ D : ψ(z) < −t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SublevelRegion {
    domain: ModelDomain,
    weight: ToricWeight,
    threshold: f64,
}

impl SublevelRegion {
    pub fn new(domain: ModelDomain, weight: ToricWeight, threshold: f64) -> Result<Self> {
        domain.validate()?;
        check_dim(domain.dim(), weight.dim())?;
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "threshold t = {threshold} must be finite and nonnegative"
            )));
        }
        Ok(SublevelRegion {
            domain,
            weight,
            threshold,
        })
    }

    /// `{ψ < log r}`, i.e. threshold `t = −log r`, for `r ∈ (0, 1]`.
    pub fn below_log(domain: ModelDomain, weight: ToricWeight, r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidInput(format!("r = {r} must lie in (0, 1]")));
        }
        Self::new(domain, weight, -r.ln())
    }

    pub fn domain(&self) -> &ModelDomain {
        &self.domain
    }

    pub fn weight(&self) -> &ToricWeight {
        &self.weight
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        Self::new(self.domain.clone(), self.weight.clone(), threshold)
    }

    pub fn in_sublevel(&self, point: &[Complex64]) -> Result<bool> {
        check_dim(self.dim(), point.len())?;
        Ok(self.contains_unchecked(point))
    }

    pub(crate) fn contains_unchecked(&self, point: &[Complex64]) -> bool {
        self.domain.contains_unchecked(point)
            && self.weight.evaluate_unchecked(point) < -self.threshold
    }

    /// Membership in log coordinates `x_j = log|z_j|`.
    pub fn contains_log(&self, x: &[f64]) -> bool {
        self.domain.log_shadow().contains(x) && self.weight.evaluate_log(x) < -self.threshold
    }

    /// True when the ψ-constraint cuts nothing off the domain.
    pub(crate) fn constraint_inactive(&self) -> bool {
        self.domain.log_shadow().sup_affine(&self.weight.effective()) <= -self.threshold
    }
}
