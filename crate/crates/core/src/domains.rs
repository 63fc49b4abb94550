//! Model pseudoconvex domains: polydiscs and balls centred at the origin.
//!
//! Both are Reinhardt domains, so membership depends only on the moduli
//! `|z_j|`. Integration routines work in log coordinates `x_j = log|z_j|`,
//! where the image of `D ∩ (C*)^n` is the [`LogShadow`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelDomain {
    Polydisc { radii: Vec<f64> },
    Ball { radius: f64, dim: usize },
}

/// Image of the domain under `z ↦ (log|z_1|, …, log|z_n|)`.
///
/// Always nonempty and downward closed.
#[derive(Debug, Clone, PartialEq)]
pub enum LogShadow {
    /// `x_j < upper_j` for every j.
    Box { upper: Vec<f64> },
    /// `Σ e^{2 x_j} < radius²`.
    Ball { radius: f64, dim: usize },
}

impl ModelDomain {
    pub fn polydisc(radii: Vec<f64>) -> Result<Self> {
        let d = ModelDomain::Polydisc { radii };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_polydisc(dim: usize) -> Self {
        ModelDomain::Polydisc {
            radii: vec![1.0; dim],
        }
    }

    pub fn unit_disc() -> Self {
        Self::unit_polydisc(1)
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        let d = ModelDomain::Ball { radius, dim };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: f64| r.is_finite() && r > 0.0;
        match self {
            ModelDomain::Polydisc { radii } => {
                if radii.is_empty() {
                    return Err(Error::InvalidInput("polydisc needs at least one radius".into()));
                }
                if let Some(r) = radii.iter().find(|r| !ok(**r)) {
                    return Err(Error::InvalidInput(format!(
                        "polydisc radius {r} is not strictly positive and finite"
                    )));
                }
            }
            ModelDomain::Ball { radius, dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidInput("ball dimension must be at least 1".into()));
                }
                if !ok(*radius) {
                    return Err(Error::InvalidInput(format!(
                        "ball radius {radius} is not strictly positive and finite"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelDomain::Polydisc { radii } => radii.len(),
            ModelDomain::Ball { dim, .. } => *dim,
        }
    }

    pub fn contains(&self, point: &[Complex64]) -> Result<bool> {
        check_dim(self.dim(), point.len())?;
        Ok(self.contains_unchecked(point))
    }

    pub(crate) fn contains_unchecked(&self, point: &[Complex64]) -> bool {
        match self {
            ModelDomain::Polydisc { radii } => {
                point.iter().zip(radii).all(|(z, r)| z.norm_sqr() < r * r)
            }
            ModelDomain::Ball { radius, .. } => {
                point.iter().map(|z| z.norm_sqr()).sum::<f64>() < radius * radius
            }
        }
    }

    /// 2n-dimensional Lebesgue volume.
    pub fn euclidean_volume(&self) -> f64 {
        match self {
            ModelDomain::Polydisc { radii } => radii.iter().map(|r| PI * r * r).product(),
            ModelDomain::Ball { radius, dim } => {
                // π^n R^{2n} / n!
                (1..=*dim).fold(1.0, |acc, k| acc * PI * radius * radius / k as f64)
            }
        }
    }

    /// Radii of the smallest polydisc containing the domain.
    pub fn bounding_radii(&self) -> Vec<f64> {
        match self {
            ModelDomain::Polydisc { radii } => radii.clone(),
            ModelDomain::Ball { radius, dim } => vec![*radius; *dim],
        }
    }

    pub fn log_shadow(&self) -> LogShadow {
        match self {
            ModelDomain::Polydisc { radii } => LogShadow::Box {
                upper: radii.iter().map(|r| r.ln()).collect(),
            },
            ModelDomain::Ball { radius, dim } => LogShadow::Ball {
                radius: *radius,
                dim: *dim,
            },
        }
    }
}

impl LogShadow {
    pub fn dim(&self) -> usize {
        match self {
            LogShadow::Box { upper } => upper.len(),
            LogShadow::Ball { dim, .. } => *dim,
        }
    }

    /// Membership of a log-coordinate point; `-∞` entries are allowed.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            LogShadow::Box { upper } => x.iter().zip(upper).all(|(x, u)| x < u),
            LogShadow::Ball { radius, .. } => {
                x.iter().map(|x| (2.0 * x).exp()).sum::<f64>() < radius * radius
            }
        }
    }

    /// Supremum of `Σ c_j x_j` over the closure, for `c ≥ 0`.
    ///
    /// Coordinates with `c_j = 0` are sent to `-∞` on the ball, which is where
    /// the maximum of the remaining terms is attained.
    pub fn sup_affine(&self, c: &[f64]) -> f64 {
        match self {
            LogShadow::Box { upper } => c
                .iter()
                .zip(upper)
                .filter(|(c, _)| **c > 0.0)
                .map(|(c, u)| c * u)
                .sum(),
            LogShadow::Ball { radius, .. } => {
                // Lagrange: e^{2x_j} = c_j R² / Σc.
                let total: f64 = c.iter().filter(|c| **c > 0.0).sum();
                if total == 0.0 {
                    return 0.0;
                }
                let r2 = radius * radius;
                c.iter()
                    .filter(|c| **c > 0.0)
                    .map(|c| 0.5 * c * (c * r2 / total).ln())
                    .sum()
            }
        }
    }

    /// Largest admissible `x_k` given a feasible prefix `x_0..x_{k-1}`,
    /// with all later coordinates free to go to `-∞`.
    pub(crate) fn upper_given_prefix(&self, prefix: &[f64]) -> f64 {
        match self {
            LogShadow::Box { upper } => upper[prefix.len()],
            LogShadow::Ball { radius, .. } => {
                let used: f64 = prefix.iter().map(|x| (2.0 * x).exp()).sum();
                let left = radius * radius - used;
                if left > 0.0 {
                    0.5 * left.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disc_membership_is_open() {
        let d = ModelDomain::unit_disc();
        assert!(d.contains(&[c(0.0, 0.0)]).unwrap());
        assert!(!d.contains(&[c(1.0, 0.0)]).unwrap());
        assert!(d.contains(&[c(0.0, 0.999)]).unwrap());
    }

    #[test]
    fn ball_membership() {
        let b = ModelDomain::ball(1.0, 2).unwrap();
        assert!(b.contains(&[c(0.6, 0.0), c(0.7, 0.0)]).unwrap());
        assert!(!b.contains(&[c(0.8, 0.0), c(0.7, 0.0)]).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = ModelDomain::ball(1.0, 2).unwrap();
        assert!(matches!(
            b.contains(&[c(0.0, 0.0)]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn invalid_radii_rejected() {
        assert!(ModelDomain::polydisc(vec![1.0, 0.0]).is_err());
        assert!(ModelDomain::polydisc(vec![f64::INFINITY]).is_err());
        assert!(ModelDomain::polydisc(vec![]).is_err());
        assert!(ModelDomain::ball(1.0, 0).is_err());
        assert!(ModelDomain::ball(-1.0, 2).is_err());
    }

    #[test]
    fn volumes() {
        assert_relative_eq!(ModelDomain::unit_disc().euclidean_volume(), PI);
        assert_relative_eq!(
            ModelDomain::polydisc(vec![1.0, 2.0]).unwrap().euclidean_volume(),
            4.0 * PI * PI,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            ModelDomain::ball(1.0, 2).unwrap().euclidean_volume(),
            PI * PI / 2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn ball_volume_matches_monte_carlo() {
        let b = ModelDomain::ball(1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut hits = 0u32;
        for _ in 0..n {
            let p: Vec<Complex64> = (0..2)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            if b.contains_unchecked(&p) {
                hits += 1;
            }
        }
        let frac = hits as f64 / n as f64;
        let est = 16.0 * frac;
        let se = 16.0 * (frac * (1.0 - frac) / n as f64).sqrt();
        assert!((est - b.euclidean_volume()).abs() < 3.0 * se, "{est} ± {se}");
    }

    #[test]
    fn sup_affine_on_ball_matches_brute_force() {
        let shadow = ModelDomain::ball(0.9, 2).unwrap().log_shadow();
        let coeffs = [1.0, 3.0];
        let best = (1..2000)
            .map(|i| {
                let theta = i as f64 / 2000.0 * std::f64::consts::FRAC_PI_2;
                let (x1, x2) = ((0.9 * theta.cos()).ln(), (0.9 * theta.sin()).ln());
                coeffs[0] * x1 + coeffs[1] * x2
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((shadow.sup_affine(&coeffs) - best).abs() < 1e-5);
    }

    #[test]
    fn domain_json_fragments() {
        let p: ModelDomain = serde_json::from_str(r#"{"kind":"polydisc","radii":[1.0,1.0]}"#).unwrap();
        assert_eq!(p, ModelDomain::unit_polydisc(2));
        let b: ModelDomain = serde_json::from_str(r#"{"kind":"ball","radius":1.0,"dim":2}"#).unwrap();
        assert_eq!(b, ModelDomain::Ball { radius: 1.0, dim: 2 });
    }
}
