//! Staircase monomial ideals at the origin: multiplier ideals of toric
//! weights, their plus-versions, and germ membership.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{Exponent, MonomialFn};
use crate::weights::ToricWeight;

/// Relative distance below which `d/2` counts as an integer.
pub const JUMP_SNAP: f64 = 1e-12;

/// Ideal generated by the monomials `z^g`, `g` in an antichain.
///
/// The full ring is generated by the zero exponent; no generators at all is
/// the zero ideal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IdealJson", into = "IdealJson")]
pub struct MonomialIdeal {
    dim: usize,
    generators: Vec<Exponent>,
}

#[derive(Serialize, Deserialize)]
struct IdealJson {
    generators: Vec<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

impl TryFrom<IdealJson> for MonomialIdeal {
    type Error = Error;

    fn try_from(j: IdealJson) -> Result<Self> {
        let dim = match (j.dim, j.generators.first()) {
            (Some(d), _) => d,
            (None, Some(g)) => g.len(),
            (None, None) => {
                return Err(Error::InvalidInput(
                    "the zero ideal needs an explicit \"dim\"".into(),
                ))
            }
        };
        MonomialIdeal::new(dim, j.generators)
    }
}

impl From<MonomialIdeal> for IdealJson {
    fn from(i: MonomialIdeal) -> Self {
        let dim = i.generators.is_empty().then_some(i.dim);
        IdealJson {
            generators: i.generators,
            dim,
        }
    }
}

fn dominates(a: &[u32], g: &[u32]) -> bool {
    a.iter().zip(g).all(|(a, g)| a >= g)
}

impl MonomialIdeal {
    /// Redundant generators are dropped, so the result is an antichain.
    pub fn new(dim: usize, generators: Vec<Exponent>) -> Result<Self> {
        for g in &generators {
            check_dim(dim, g.len())?;
        }
        let mut gens = generators;
        gens.sort();
        gens.dedup();
        let minimal: Vec<Exponent> = gens
            .iter()
            .filter(|g| !gens.iter().any(|h| h != *g && dominates(g, h)))
            .cloned()
            .collect();
        Ok(MonomialIdeal {
            dim,
            generators: minimal,
        })
    }

    pub fn full(dim: usize) -> Self {
        MonomialIdeal {
            dim,
            generators: vec![vec![0; dim]],
        }
    }

    pub fn principal(generator: Exponent) -> Self {
        MonomialIdeal {
            dim: generator.len(),
            generators: vec![generator],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Exponent] {
        &self.generators
    }

    pub fn is_full(&self) -> bool {
        self.generators.iter().any(|g| g.iter().all(|a| *a == 0))
    }

    pub fn contains(&self, alpha: &[u32]) -> bool {
        alpha.len() == self.dim && self.generators.iter().any(|g| dominates(alpha, g))
    }

    pub fn is_subset_of(&self, other: &MonomialIdeal) -> bool {
        self.dim == other.dim && self.generators.iter().all(|g| other.contains(g))
    }
}

/// True iff every monomial of `f` lies in the ideal; the zero germ always does.
pub fn germ_in_ideal(f: &MonomialFn, ideal: &MonomialIdeal) -> bool {
    f.terms().all(|(alpha, _)| ideal.contains(alpha))
}

fn snap(x: f64) -> f64 {
    let k = x.round();
    if (x - k).abs() <= JUMP_SNAP * x.abs().max(1.0) {
        k
    } else {
        x
    }
}

/// `I(φ)` for `φ = Σ d_j log|z_j|`: `z^α` is in it iff `α_j + 1 > d_j/2` for
/// every `j`, so the single generator is `g_j = ⌊d_j/2⌋`.
pub fn multiplier_ideal(weight: &ToricWeight) -> MonomialIdeal {
    let generator = weight
        .effective()
        .iter()
        .map(|d| snap(d / 2.0).floor().max(0.0) as u32)
        .collect();
    MonomialIdeal::principal(generator)
}

/// `I₊(2cφ) = ∪_{p>2c} I(pφ)`.
///
/// For toric weights `I(pφ)` only changes at the jump points
/// `p = 2(α_j+1)/c_j`, and it already equals its value just above the jump
/// at the jump itself (the membership inequality is strict). So the union is
/// `I(2cφ)` for every `c`.
pub fn plus_ideal(weight: &ToricWeight, c: f64) -> Result<MonomialIdeal> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "plus-ideal parameter c = {c} must be finite and positive"
        )));
    }
    Ok(multiplier_ideal(&weight.rescaled(2.0 * c)?))
}
