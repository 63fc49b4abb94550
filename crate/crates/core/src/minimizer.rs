//! Minimal weighted L² extensions
//! `C_{f,I} = inf{‖f̃‖² : (f̃ − f, o) ∈ I}` on sublevel regions.
//!
//! On Reinhardt regions monomials are orthogonal, so the infimum keeps the
//! terms of `f` outside `I` and drops everything else. The least-squares path
//! solves the same problem on a truncated basis from a Gram matrix (exact or
//! Monte Carlo) and serves as the general-purpose cross-check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{
    gram_matrix_from_norms, sample_gram, sample_weight, BasisTruncation, MonomialFn,
};
use crate::ideals::MonomialIdeal;
use crate::quadrature::{draw_region_samples, monomial_mass, radial_exponents, SampleSet};
use crate::weights::{SublevelRegion, ToricWeight};

pub const DEFAULT_DEGREE: u32 = 12;
pub const CONDITION_CAP: f64 = 1e12;
/// Relative change tolerated between degree `d` and `d + 4` solves.
pub const TRUNCATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Exact orthogonal projection.
    #[default]
    Orthogonal,
    /// Normal equations with the exact (diagonal) Gram matrix.
    LeastSquares,
    /// Normal equations with a sampled Gram matrix.
    MonteCarlo,
}

impl Solver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Solver::Orthogonal => "orthogonal",
            Solver::LeastSquares => "least_squares",
            Solver::MonteCarlo => "monte_carlo",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Solver::MonteCarlo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSource {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizationResult {
    /// `+∞` when a fixed coefficient meets a divergent norm.
    pub value: f64,
    pub minimizer: Option<MonomialFn>,
    pub method: Solver,
    /// `|‖F‖² + ‖f − F‖² − ‖f‖²| / ‖f‖²` for the minimizer `F`.
    pub residual_pythagoras: Option<f64>,
    /// Monte Carlo standard error of `value`.
    pub std_error: Option<f64>,
    /// Relative change against a solve at degree + 4.
    pub truncation_change: Option<f64>,
}

impl MinimizationResult {
    fn infinite(method: Solver) -> Self {
        MinimizationResult {
            value: f64::INFINITY,
            minimizer: None,
            method,
            residual_pythagoras: None,
            std_error: None,
            truncation_change: None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.value == f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub solver: Solver,
    pub degree: u32,
    pub samples: u64,
    pub seed: u64,
    /// Re-solve at degree + 4 on deterministic paths.
    pub check_truncation: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            solver: Solver::Orthogonal,
            degree: DEFAULT_DEGREE,
            samples: 100_000,
            seed: 0,
            check_truncation: true,
        }
    }
}

fn check_inputs(
    f: &MonomialFn,
    ideal: &MonomialIdeal,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
) -> Result<()> {
    check_dim(region.dim(), f.dim())?;
    check_dim(region.dim(), ideal.dim())?;
    if let Some(w) = weight_phi {
        check_dim(region.dim(), w.dim())?;
    }
    Ok(())
}

fn diverges(alpha: &[u32], weight_phi: Option<&ToricWeight>) -> bool {
    radial_exponents(alpha, weight_phi).iter().any(|b| *b <= 0.0)
}

/// Exact minimum by orthogonality.
pub fn minimal_l2(
    f: &MonomialFn,
    ideal: &MonomialIdeal,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
    basis: &BasisTruncation,
) -> Result<MinimizationResult> {
    check_inputs(f, ideal, region, weight_phi)?;
    if !basis.contains_fn(f) {
        return Err(Error::InvalidInput(format!(
            "basis of degree {} does not contain f (degree {})",
            basis.max_degree(),
            f.degree()
        )));
    }
    let fixed = MonomialFn::from_terms(
        f.dim(),
        f.terms()
            .filter(|(alpha, _)| !ideal.contains(alpha))
            .map(|(a, c)| (a.clone(), *c)),
    )?;
    let mut value = 0.0;
    for (alpha, c) in fixed.terms() {
        let m = monomial_mass(alpha, region, weight_phi)?;
        if m.diverged() {
            return Ok(MinimizationResult::infinite(Solver::Orthogonal));
        }
        value += c.norm_sqr() * m.value();
    }
    let residual = pythagoras_residual(&fixed, f, region, weight_phi).ok();
    Ok(MinimizationResult {
        value,
        minimizer: Some(fixed),
        method: Solver::Orthogonal,
        residual_pythagoras: residual,
        std_error: None,
        truncation_change: None,
    })
}

/// Minimum over the truncated basis from the normal equations
/// `G_ff c_f = −G_fx c_x` (free indices lie in `I`, fixed ones carry `f`).
pub fn minimal_l2_least_squares(
    f: &MonomialFn,
    ideal: &MonomialIdeal,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
    basis: &BasisTruncation,
    gram_source: GramSource,
) -> Result<MinimizationResult> {
    check_inputs(f, ideal, region, weight_phi)?;
    if !basis.contains_fn(f) {
        return Err(Error::InvalidInput(format!(
            "basis of degree {} does not contain f (degree {})",
            basis.max_degree(),
            f.degree()
        )));
    }
    let solver = match gram_source {
        GramSource::Exact => Solver::LeastSquares,
        GramSource::MonteCarlo { .. } => Solver::MonteCarlo,
    };
    // A divergent free monomial can only enter with coefficient 0; a
    // divergent fixed one with nonzero coefficient makes C infinite.
    let mut kept = Vec::new();
    for (k, alpha) in basis.exponents().iter().enumerate() {
        if diverges(alpha, weight_phi) {
            if !ideal.contains(alpha) && f.coeff(alpha) != Complex64::default() {
                return Ok(MinimizationResult::infinite(solver));
            }
        } else {
            kept.push(k);
        }
    }
    let exps: Vec<&Vec<u32>> = kept.iter().map(|k| &basis.exponents()[*k]).collect();
    let (gram, sample_set) = match gram_source {
        GramSource::MonteCarlo { samples, seed } => {
            let s = draw_region_samples(region, samples, seed)?;
            let full = sample_gram(basis, &s, weight_phi)?;
            (full.select_rows(&kept).select_columns(&kept), Some(s))
        }
        GramSource::Exact => {
            let norms: Vec<f64> = exps
                .iter()
                .map(|a| monomial_mass(a, region, weight_phi).map(|m| m.value()))
                .collect::<Result<_>>()?;
            (gram_matrix_from_norms(&norms), None)
        }
    };

    // ‖Σ c_j z^{α_j}‖² = cᴴ conj(G) c for G_{jk} = ⟨z^{α_j}, z^{α_k}⟩.
    let gram = gram.conjugate();
    let free: Vec<usize> = (0..kept.len()).filter(|&i| ideal.contains(exps[i])).collect();
    let fixed: Vec<usize> = (0..kept.len()).filter(|&i| !ideal.contains(exps[i])).collect();
    let mut coeffs = DVector::from_fn(kept.len(), |i, _| f.coeff(exps[i]));
    if !free.is_empty() {
        let g_ff = gram.select_rows(&free).select_columns(&free);
        let g_fx = gram.select_rows(&free).select_columns(&fixed);
        let c_x = DVector::from_iterator(fixed.len(), fixed.iter().map(|i| coeffs[*i]));
        let rhs = -(g_fx * c_x);
        let c_f = solve_hermitian_psd(&g_ff, &rhs)?;
        for (slot, i) in free.iter().enumerate() {
            coeffs[*i] = c_f[slot];
        }
    }
    let minimizer = MonomialFn::from_terms(
        f.dim(),
        exps.iter().zip(coeffs.iter()).map(|(a, c)| ((*a).clone(), *c)),
    )?;

    let (value, std_error, residual) = match &sample_set {
        Some(s) => {
            let (v, se) = s.estimate(&|z| minimizer.evaluate_unchecked(z).norm_sqr() * sample_weight(weight_phi, z));
            let full_f = DVector::from_fn(kept.len(), |i, _| f.coeff(exps[i]));
            let diff = &full_f - &coeffs;
            let q = |c: &DVector<Complex64>| (c.adjoint() * &gram * c)[(0, 0)].re;
            let denom = q(&full_f).max(f64::MIN_POSITIVE);
            (v, Some(se), Some((q(&coeffs) + q(&diff) - q(&full_f)).abs() / denom))
        }
        None => {
            let v = (coeffs.adjoint() * &gram * &coeffs)[(0, 0)].re;
            (v, None, pythagoras_residual(&minimizer, f, region, weight_phi).ok())
        }
    };
    Ok(MinimizationResult {
        value,
        minimizer: Some(minimizer),
        method: solver,
        residual_pythagoras: residual,
        std_error,
        truncation_change: None,
    })
}

/// Full pipeline: basis of the requested degree (grown to cover `f`), the
/// chosen solver and, on deterministic paths, a re-solve at degree + 4.
pub fn minimize(
    f: &MonomialFn,
    ideal: &MonomialIdeal,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult> {
    let solve = |degree| -> Result<MinimizationResult> {
        let basis = BasisTruncation::covering(f, degree)?;
        match opts.solver {
            Solver::Orthogonal => minimal_l2(f, ideal, region, weight_phi, &basis),
            Solver::LeastSquares => {
                minimal_l2_least_squares(f, ideal, region, weight_phi, &basis, GramSource::Exact)
            }
            Solver::MonteCarlo => minimal_l2_least_squares(
                f,
                ideal,
                region,
                weight_phi,
                &basis,
                GramSource::MonteCarlo {
                    samples: opts.samples,
                    seed: opts.seed,
                },
            ),
        }
    };
    let mut result = solve(opts.degree)?;
    if opts.check_truncation && opts.solver.is_deterministic() && !result.is_infinite() {
        let finer = solve(opts.degree + 4)?;
        let change = if finer.is_infinite() {
            f64::INFINITY
        } else {
            (finer.value - result.value).abs() / result.value.abs().max(f64::MIN_POSITIVE)
        };
        if change > TRUNCATION_TOL {
            log::warn!(
                "truncation at degree {} moved the minimum by {change:.3e} (tolerance {TRUNCATION_TOL:e})",
                opts.degree
            );
        }
        result.truncation_change = Some(change);
    }
    Ok(result)
}

/// `|‖F_t‖² + ‖F̂ − F_t‖² − ‖F̂‖²| / ‖F̂‖²` with exact norms.
pub fn pythagoras_residual(
    f_t: &MonomialFn,
    f_hat: &MonomialFn,
    region: &SublevelRegion,
    weight_phi: Option<&ToricWeight>,
) -> Result<f64> {
    let diff = f_hat.sub(f_t)?;
    let mut norms = [0.0; 3];
    for (slot, g) in [f_t, &diff, f_hat].into_iter().enumerate() {
        check_dim(region.dim(), g.dim())?;
        for (alpha, c) in g.terms() {
            let m = monomial_mass(alpha, region, weight_phi)?;
            if m.diverged() {
                return Err(Error::DivergedNorm { alpha: alpha.clone() });
            }
            norms[slot] += c.norm_sqr() * m.value();
        }
    }
    Ok((norms[0] + norms[1] - norms[2]).abs() / norms[2].max(f64::MIN_POSITIVE))
}

/// Sampled Pythagoras defect `‖F_t‖² + ‖F̂ − F_t‖² − ‖F̂‖²` (unnormalized)
/// and its standard error, all three norms read off one sample stream.
pub fn pythagoras_defect_mc(
    f_t: &MonomialFn,
    f_hat: &MonomialFn,
    samples: &SampleSet,
    weight_phi: Option<&ToricWeight>,
) -> Result<(f64, f64)> {
    check_dim(samples.dim(), f_t.dim())?;
    let diff = f_hat.sub(f_t)?;
    Ok(samples.estimate(&|z| {
        let a = f_t.evaluate_unchecked(z);
        let b = diff.evaluate_unchecked(z);
        let c = f_hat.evaluate_unchecked(z);
        (a.norm_sqr() + b.norm_sqr() - c.norm_sqr()) * sample_weight(weight_phi, z)
    }))
}

/// `‖g‖²` read off a Gram matrix with entries `∫ z^{α_j} conj(z^{α_k})`.
pub fn quadratic_form(gram: &DMatrix<Complex64>, basis: &BasisTruncation, g: &MonomialFn) -> f64 {
    let c = DVector::from_fn(basis.len(), |i, _| g.coeff(&basis.exponents()[i]));
    (c.transpose() * gram * c.conjugate())[(0, 0)].re
}

/// Solves `G x = b` for Hermitian PSD `G` by Jacobi scaling and pivoted
/// Cholesky. The squared ratio of extreme Cholesky pivots serves as the
/// condition estimate.
pub(crate) fn solve_hermitian_psd(g: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let m = g.nrows();
    let diag: Vec<f64> = (0..m).map(|i| g[(i, i)].re).collect();
    if diag.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::Conditioning {
            condition: f64::INFINITY,
            cap: CONDITION_CAP,
            free: m,
        });
    }
    let scale: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut a = DMatrix::from_fn(m, m, |i, j| g[(i, j)] * scale[i] * scale[j]);
    let mut perm: Vec<usize> = (0..m).collect();
    let mut l = DMatrix::<Complex64>::zeros(m, m);
    let mut pivots = Vec::with_capacity(m);

    for k in 0..m {
        let p = (k..m)
            .max_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re))
            .unwrap();
        if p != k {
            a.swap_rows(k, p);
            a.swap_columns(k, p);
            l.swap_rows(k, p);
            perm.swap(k, p);
        }
        let d = a[(k, k)].re;
        pivots.push(d);
        let condition = pivots[0] / d;
        if !(d > 0.0) || condition > CONDITION_CAP {
            return Err(Error::Conditioning {
                condition: if d > 0.0 { condition } else { f64::INFINITY },
                cap: CONDITION_CAP,
                free: m,
            });
        }
        let root = d.sqrt();
        l[(k, k)] = Complex64::new(root, 0.0);
        for i in k + 1..m {
            l[(i, k)] = a[(i, k)] / root;
        }
        for j in k + 1..m {
            let ljk = l[(j, k)].conj();
            for i in k + 1..m {
                let lik = l[(i, k)];
                a[(i, j)] -= lik * ljk;
            }
        }
    }

    // A_perm = L Lᴴ with A_perm[i][j] = H[perm_i][perm_j].
    let mut y = DVector::from_fn(m, |i, _| b[perm[i]] * scale[perm[i]]);
    for i in 0..m {
        let mut s = y[i];
        for j in 0..i {
            s -= l[(i, j)] * y[j];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..m).rev() {
        let mut s = y[i];
        for j in i + 1..m {
            s -= l[(j, i)].conj() * y[j];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = DVector::zeros(m);
    for i in 0..m {
        x[perm[i]] = y[i] * scale[perm[i]];
    }
    Ok(x)
}

#[cfg(test)]
mod tests;
