//! Truncated monomial bases, weighted norms and Gram matrices.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::ModelDomain;
use crate::error::{check_dim, Error, Result};
use crate::quadrature::{monomial_mass, IntegralEstimate, SampleSet};
use crate::weights::{SublevelRegion, ToricWeight};

pub type Exponent = Vec<u32>;

/// A polynomial `Σ f_α z^α`. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TermJson>", into = "Vec<TermJson>")]
pub struct MonomialFn {
    dim: usize,
    terms: BTreeMap<Exponent, Complex64>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    #[serde(alias = "exp")]
    exponent: Exponent,
    re: f64,
    #[serde(default)]
    im: f64,
}

impl TryFrom<Vec<TermJson>> for MonomialFn {
    type Error = Error;

    fn try_from(terms: Vec<TermJson>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|t| t.exponent.len())
            .ok_or_else(|| Error::InvalidInput("function needs at least one term".into()))?;
        MonomialFn::from_terms(
            dim,
            terms
                .into_iter()
                .map(|t| (t.exponent, Complex64::new(t.re, t.im))),
        )
    }
}

impl From<MonomialFn> for Vec<TermJson> {
    fn from(f: MonomialFn) -> Self {
        f.terms
            .into_iter()
            .map(|(exponent, c)| TermJson {
                exponent,
                re: c.re,
                im: c.im,
            })
            .collect()
    }
}

impl MonomialFn {
    pub fn zero(dim: usize) -> Self {
        MonomialFn {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut f = Self::zero(dim);
        f.set(vec![0; dim], Complex64::new(c, 0.0));
        f
    }

    /// `z^α` with coefficient 1.
    pub fn monomial(alpha: Exponent) -> Self {
        let mut f = Self::zero(alpha.len());
        f.set(alpha, Complex64::new(1.0, 0.0));
        f
    }

    /// Repeated exponents are summed.
    pub fn from_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (Exponent, Complex64)>,
    ) -> Result<Self> {
        let mut f = Self::zero(dim);
        for (alpha, c) in terms {
            check_dim(dim, alpha.len())?;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "coefficient of z^{alpha:?} is not finite"
                )));
            }
            let sum = f.coeff(&alpha) + c;
            f.set(alpha, sum);
        }
        Ok(f)
    }

    fn set(&mut self, alpha: Exponent, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            self.terms.remove(&alpha);
        } else {
            self.terms.insert(alpha, c);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, alpha: &[u32]) -> Complex64 {
        self.terms.get(alpha).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The single exponent of a one-term function.
    pub fn as_monomial(&self) -> Option<&Exponent> {
        match self.terms.len() {
            1 => self.terms.keys().next(),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|a| a.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn sub(&self, other: &MonomialFn) -> Result<MonomialFn> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        for (alpha, c) in &other.terms {
            let v = out.coeff(alpha) - c;
            out.set(alpha.clone(), v);
        }
        Ok(out)
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Result<Complex64> {
        check_dim(self.dim, z.len())?;
        Ok(self.evaluate_unchecked(z))
    }

    pub(crate) fn evaluate_unchecked(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(alpha, c)| c * monomial_value(alpha, z))
            .sum()
    }
}

pub(crate) fn monomial_value(alpha: &[u32], z: &[Complex64]) -> Complex64 {
    alpha
        .iter()
        .zip(z)
        .fold(Complex64::new(1.0, 0.0), |acc, (a, z)| acc * z.powu(*a))
}

/// All exponents of total degree `≤ max_degree`, in graded-lex order.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTruncation {
    dim: usize,
    max_degree: u32,
    exponents: Vec<Exponent>,
}

impl BasisTruncation {
    pub fn new(dim: usize, max_degree: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("basis dimension must be positive".into()));
        }
        let mut exponents = Vec::new();
        for deg in 0..=max_degree {
            let mut alpha = vec![0; dim];
            push_compositions(deg, 0, &mut alpha, &mut exponents);
        }
        Ok(BasisTruncation {
            dim,
            max_degree,
            exponents,
        })
    }

    /// Smallest full-degree basis containing every exponent of `f`, but at
    /// least of degree `min_degree`.
    pub fn covering(f: &MonomialFn, min_degree: u32) -> Result<Self> {
        Self::new(f.dim(), f.degree().max(min_degree))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn index_of(&self, alpha: &[u32]) -> Option<usize> {
        if alpha.len() != self.dim || alpha.iter().sum::<u32>() > self.max_degree {
            return None;
        }
        self.exponents.iter().position(|a| a.as_slice() == alpha)
    }

    pub fn contains_fn(&self, f: &MonomialFn) -> bool {
        f.dim() == self.dim && f.degree() <= self.max_degree
    }
}

// Larger leading exponents first within a degree.
fn push_compositions(left: u32, j: usize, alpha: &mut Vec<u32>, out: &mut Vec<Exponent>) {
    if j + 1 == alpha.len() {
        alpha[j] = left;
        out.push(alpha.clone());
        return;
    }
    for a in (0..=left).rev() {
        alpha[j] = a;
        push_compositions(left - a, j + 1, alpha, out);
    }
    alpha[j] = 0;
}

/// `‖z^α‖²` on the region for every basis element.
pub fn weighted_norms(
    basis: &BasisTruncation,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
) -> Result<Vec<IntegralEstimate>> {
    check_dim(region.dim(), basis.dim())?;
    basis
        .exponents()
        .par_iter()
        .map(|alpha| monomial_mass(alpha, region, weight_phi))
        .collect()
}

/// Exact Gram matrix; monomials are orthogonal on Reinhardt regions, so it is
/// diagonal.
pub fn gram_matrix(
    basis: &BasisTruncation,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
) -> Result<DMatrix<Complex64>> {
    let norms = weighted_norms(basis, region, weight_phi)?;
    if let Some(k) = norms.iter().position(|m| m.diverged()) {
        return Err(Error::DivergedNorm {
            alpha: basis.exponents()[k].clone(),
        });
    }
    let values: Vec<f64> = norms.iter().map(|m| m.value()).collect();
    Ok(gram_matrix_from_norms(&values))
}

pub(crate) fn gram_matrix_from_norms(norms: &[f64]) -> DMatrix<Complex64> {
    let diag: Vec<Complex64> = norms.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
}

/// Monte Carlo Gram matrix from a fixed sample set.
///
/// Built as `V/N · AᴴA` with `A_{ij} = e^{−φ(z_i)/2} conj(z_i^{α_j})`, so it is
/// Hermitian positive semidefinite exactly, not just up to noise.
pub fn sample_gram(
    basis: &BasisTruncation,
    samples: &SampleSet,
    weight_phi: Option<&ToricWeight>,
) -> Result<DMatrix<Complex64>> {
    check_dim(samples.dim(), basis.dim())?;
    if let Some(w) = weight_phi {
        check_dim(samples.dim(), w.dim())?;
    }
    let m = basis.len();
    let points: Vec<&[Complex64]> = samples.points().collect();
    // Fixed chunks summed in order keep the result independent of scheduling.
    let partials: Vec<DMatrix<Complex64>> = points
        .par_chunks(GRAM_CHUNK)
        .map(|chunk| {
            let a = DMatrix::from_fn(chunk.len(), m, |i, j| {
                let z = chunk[i];
                (monomial_value(&basis.exponents()[j], z) * sample_weight(weight_phi, z).sqrt()).conj()
            });
            a.adjoint() * a
        })
        .collect();
    let mut gram = DMatrix::zeros(m, m);
    for p in partials {
        gram += p;
    }
    gram *= Complex64::new(samples.volume() / samples.draws() as f64, 0.0);
    Ok(gram)
}

const GRAM_CHUNK: usize = 1024;

pub(crate) fn sample_weight(weight_phi: Option<&ToricWeight>, z: &[Complex64]) -> f64 {
    weight_phi.map_or(1.0, |w| (-w.evaluate_unchecked(z)).exp())
}

/// `‖f‖²` on a Reinhardt region: `Σ |f_α|² ‖z^α‖²`.
pub fn norm_squared(
    f: &MonomialFn,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
) -> Result<IntegralEstimate> {
    check_dim(region.dim(), f.dim())?;
    let parts: Vec<IntegralEstimate> = f
        .terms()
        .map(|(alpha, c)| Ok(monomial_mass(alpha, region, weight_phi)?.scaled(c.norm_sqr())))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().sum())
}

/// `K_D(o) = 1/vol(D)` on a Reinhardt domain: only the constant survives.
pub fn bergman_at_origin(domain: &ModelDomain) -> f64 {
    1.0 / domain.euclidean_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::draw_region_samples;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn region(domain: ModelDomain, coeffs: Vec<f64>, t: f64) -> SublevelRegion {
        SublevelRegion::new(domain, ToricWeight::new(coeffs).unwrap(), t).unwrap()
    }

    fn values(v: &[IntegralEstimate]) -> Vec<f64> {
        v.iter().map(|m| m.value()).collect()
    }

    #[test]
    fn basis_is_graded_lex() {
        let b = BasisTruncation::new(2, 2).unwrap();
        let expected: Vec<Exponent> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(b.exponents(), expected.as_slice());
        assert_eq!(BasisTruncation::new(3, 4).unwrap().len(), 35);
        assert_eq!(b.index_of(&[1, 1]), Some(4));
        assert_eq!(b.index_of(&[3, 0]), None);
    }

    #[test]
    fn disc_norms() {
        let b = BasisTruncation::new(1, 1).unwrap();
        let n = weighted_norms(&b, &region(ModelDomain::unit_disc(), vec![1.0], 0.0), None).unwrap();
        assert_relative_eq!(n[0].value(), PI, max_relative = 1e-14);
        assert_relative_eq!(n[1].value(), PI / 2.0, max_relative = 1e-14);

        let b0 = BasisTruncation::new(1, 0).unwrap();
        for t in [0.0, 0.7, 2.0] {
            let n = weighted_norms(&b0, &region(ModelDomain::unit_disc(), vec![2.0], t), None).unwrap();
            assert_relative_eq!(n[0].value(), PI * (-t).exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn bidisc_norms() {
        let b = BasisTruncation::new(2, 1).unwrap();
        let n = weighted_norms(&b, &region(ModelDomain::unit_polydisc(2), vec![1.0, 1.0], 0.0), None)
            .unwrap();
        let v = values(&n);
        assert_relative_eq!(v[0], PI * PI, max_relative = 1e-13);
        assert_relative_eq!(v[1], PI * PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(v[2], PI * PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn exact_gram_is_diagonal() {
        let b = BasisTruncation::new(1, 1).unwrap();
        let g = gram_matrix(&b, &region(ModelDomain::unit_disc(), vec![1.0], 0.0), None).unwrap();
        assert_relative_eq!(g[(0, 0)].re, PI, max_relative = 1e-14);
        assert_relative_eq!(g[(1, 1)].re, PI / 2.0, max_relative = 1e-14);
        assert_eq!(g[(0, 1)], Complex64::new(0.0, 0.0));
        assert_eq!(g[(1, 0)], Complex64::new(0.0, 0.0));

        let phi = ToricWeight::new(vec![1.0]).unwrap();
        let b0 = BasisTruncation::new(1, 0).unwrap();
        let g = gram_matrix(&b0, &region(ModelDomain::unit_disc(), vec![1.0], 0.0), Some(&phi)).unwrap();
        assert_relative_eq!(g[(0, 0)].re, 2.0 * PI, max_relative = 1e-13);
    }

    #[test]
    fn diverged_diagonal_names_the_exponent() {
        let phi = ToricWeight::new(vec![2.0]).unwrap();
        let b = BasisTruncation::new(1, 2).unwrap();
        match gram_matrix(&b, &region(ModelDomain::unit_disc(), vec![1.0], 0.0), Some(&phi)) {
            Err(Error::DivergedNorm { alpha }) => assert_eq!(alpha, vec![0]),
            other => panic!("expected diverged norm, got {other:?}"),
        }
    }

    #[test]
    fn sample_gram_is_hermitian_psd_and_close() {
        let r = region(ModelDomain::unit_polydisc(2), vec![1.0, 2.0], 0.5);
        let b = BasisTruncation::new(2, 2).unwrap();
        let samples = draw_region_samples(&r, 50_000, 7).unwrap();
        let g = sample_gram(&b, &samples, None).unwrap();
        let exact = gram_matrix(&b, &r, None).unwrap();
        assert_eq!(g, g.adjoint());
        let eig = nalgebra::linalg::SymmetricEigen::new(g.map(|c| c.re));
        assert!(eig.eigenvalues.iter().all(|l| *l > -1e-12));
        for k in 0..b.len() {
            assert_relative_eq!(g[(k, k)].re, exact[(k, k)].re, max_relative = 0.1);
        }
    }

    #[test]
    fn bergman_examples() {
        assert_relative_eq!(bergman_at_origin(&ModelDomain::unit_disc()), 1.0 / PI);
        assert_relative_eq!(bergman_at_origin(&ModelDomain::unit_polydisc(2)), 1.0 / (PI * PI));
        assert_relative_eq!(
            bergman_at_origin(&ModelDomain::ball(1.0, 2).unwrap()),
            2.0 / (PI * PI),
            max_relative = 1e-15
        );
    }

    #[test]
    fn function_algebra() {
        let f = MonomialFn::from_terms(
            1,
            vec![
                (vec![0], Complex64::new(1.0, 0.0)),
                (vec![1], Complex64::new(2.0, -1.0)),
                (vec![0], Complex64::new(-1.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.as_monomial(), Some(&vec![1]));
        let g = f.sub(&f).unwrap();
        assert!(g.is_zero());
        let v = f.evaluate(&[Complex64::new(0.0, 1.0)]).unwrap();
        assert_relative_eq!(v.re, 1.0);
        assert_relative_eq!(v.im, 2.0);
        assert!(MonomialFn::from_terms(2, vec![(vec![1], Complex64::new(1.0, 0.0))]).is_err());
    }

    #[test]
    fn function_json() {
        let f: MonomialFn = serde_json::from_str(
            r#"[{"exponent":[0,1],"re":1.5},{"exp":[2,0],"re":0,"im":-1},{"exponent":[1,1],"re":0}]"#,
        )
        .unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.coeff(&[2, 0]), Complex64::new(0.0, -1.0));
        let back: MonomialFn = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<MonomialFn>("[]").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn gram_diagonal_matches_norms(
            n in 1usize..=3,
            deg in 0u32..4,
            c in prop::collection::vec(0.1f64..3.0, 3),
            t in 0.0f64..3.0,
        ) {
            let r = region(ModelDomain::unit_polydisc(n), c[..n].to_vec(), t);
            let b = BasisTruncation::new(n, deg).unwrap();
            let norms = weighted_norms(&b, &r, None).unwrap();
            let g = gram_matrix(&b, &r, None).unwrap();
            for j in 0..b.len() {
                prop_assert_eq!(g[(j, j)].re, norms[j].value());
                for k in 0..b.len() {
                    if j != k {
                        prop_assert_eq!(g[(j, k)], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }

        #[test]
        fn disc_bergman_scales(radius in 0.05f64..20.0) {
            let d = ModelDomain::polydisc(vec![radius]).unwrap();
            let k = bergman_at_origin(&d);
            prop_assert!((k - 1.0 / (PI * radius * radius)).abs() <= 1e-14 * k);
        }
    }
}
