//! Seeded rejection sampling in the bounding polydisc of a region.
//!
//! Draws are split into fixed-size batches; batch `b` reads ChaCha8 stream `b`
//! of the user seed, and batch results are concatenated in batch order. The
//! accepted sample set, and therefore every estimate, is the same bit for bit
//! under any thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::weights::SublevelRegion;

use super::{IntegralEstimate, Method};

const BATCH: u64 = 4096;
pub const MIN_SAMPLES: u64 = 100;

/// Points accepted by rejection sampling, stored row-major (`dim` per point).
#[derive(Debug, Clone)]
pub struct SampleSet {
    dim: usize,
    points: Vec<Complex64>,
    draws: u64,
    volume: f64,
}

impl SampleSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn accepted(&self) -> usize {
        self.points.len() / self.dim.max(1)
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Volume of the bounding polydisc the draws came from.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn points(&self) -> impl Iterator<Item = &[Complex64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Sample mean and standard error of `volume · f · 1_region`.
    pub fn estimate(&self, f: &(dyn Fn(&[Complex64]) -> f64 + Sync)) -> (f64, f64) {
        let values: Vec<f64> = self.points.par_chunks_exact(self.dim).map(f).collect();
        self.reduce(&values)
    }

    /// Mean and standard error from per-accepted-point integrand values.
    pub(crate) fn reduce(&self, values: &[f64]) -> (f64, f64) {
        let n = self.draws as f64;
        let (sum, sum_sq) = values
            .iter()
            .fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
        let mean = sum / n;
        let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (self.volume * mean, self.volume * (var / n).sqrt())
    }
}

/// Uniform rejection sampling of `region` from its bounding polydisc.
pub fn draw_region_samples(region: &SublevelRegion, samples: u64, seed: u64) -> Result<SampleSet> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let radii = region.domain().bounding_radii();
    let dim = radii.len();
    let volume: f64 = radii.iter().map(|r| PI * r * r).product();

    let run = |first_batch: u64, draws: u64| -> Vec<Complex64> {
        let batches = draws.div_ceil(BATCH);
        let chunks: Vec<Vec<Complex64>> = (first_batch..first_batch + batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b);
                let in_batch = BATCH.min(draws - (b - first_batch) * BATCH);
                let mut kept = Vec::new();
                let mut point = vec![Complex64::new(0.0, 0.0); dim];
                for _ in 0..in_batch {
                    for (z, r) in point.iter_mut().zip(&radii) {
                        let rad = r * rng.gen::<f64>().sqrt();
                        let theta = 2.0 * PI * rng.gen::<f64>();
                        *z = Complex64::from_polar(rad, theta);
                    }
                    if region.contains_unchecked(&point) {
                        kept.extend_from_slice(&point);
                    }
                }
                kept
            })
            .collect();
        chunks.concat()
    };

    let mut points = run(0, samples);
    let mut draws = samples;
    let limit = 10 * samples;
    while points.is_empty() {
        if draws >= limit {
            return Err(Error::DegenerateRegion { rejections: draws });
        }
        let extra = samples.min(limit - draws);
        // batches continue the stream numbering so no draw is reused
        points = run(draws.div_ceil(BATCH), extra);
        draws += extra;
    }
    Ok(SampleSet {
        dim,
        points,
        draws,
        volume,
    })
}

/// Monte Carlo estimate of `∫_region integrand dλ`.
///
/// Divergence cannot be detected from samples, so `diverged` is always false.
pub fn mc_integral(
    integrand: &(dyn Fn(&[Complex64]) -> f64 + Sync),
    region: &SublevelRegion,
    samples: u64,
    seed: u64,
) -> Result<IntegralEstimate> {
    let set = draw_region_samples(region, samples, seed)?;
    let (value, se) = set.estimate(integrand);
    Ok(IntegralEstimate::new(value, Some(se), Method::MonteCarlo, false))
}
