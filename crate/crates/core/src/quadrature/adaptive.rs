//! Nested adaptive integration of `exp(β·x)` over the log-coordinate image
//! of a sublevel region.
//!
//! The innermost coordinate is integrated exactly. Every outer coordinate
//! ranges over `(−∞, U]` and is mapped to `w = e^{β_k (x − U)} ∈ (0, 1]`,
//! which absorbs the exponential factor and the infinite range. The kinks of
//! the innermost upper limit (where the ψ-plane and the domain boundary trade
//! places) are located exactly and handed to the outer rule as breakpoints.

use crate::domains::LogShadow;
use crate::weights::SublevelRegion;

use super::gauss_kronrod::{integrate, GkOptions};

pub(crate) struct LogRegionIntegrator {
    shadow: LogShadow,
    psi: Vec<f64>,
    beta: Vec<f64>,
    threshold: f64,
    rel_tol: f64,
}

impl LogRegionIntegrator {
    /// `beta` must be strictly positive (the caller handles divergence).
    pub(crate) fn new(region: &SublevelRegion, beta: &[f64], rel_tol: f64) -> Self {
        let psi_raw = region.weight().effective();
        // Coordinates carrying the ψ-constraint go last so the exact inner
        // step sees the plane; both domain kinds are symmetric under the
        // corresponding permutation.
        let mut order: Vec<usize> = (0..psi_raw.len()).collect();
        order.sort_by_key(|&j| psi_raw[j] > 0.0);
        let shadow = match region.domain().log_shadow() {
            LogShadow::Box { upper } => LogShadow::Box {
                upper: order.iter().map(|&j| upper[j]).collect(),
            },
            ball => ball,
        };
        LogRegionIntegrator {
            shadow,
            psi: order.iter().map(|&j| psi_raw[j]).collect(),
            beta: order.iter().map(|&j| beta[j]).collect(),
            threshold: region.threshold(),
            rel_tol,
        }
    }

    fn n(&self) -> usize {
        self.beta.len()
    }

    /// Returns `(∫ exp(β·x) dx, error estimate)` over the region.
    pub(crate) fn integrate(&self) -> (f64, f64) {
        let mut prefix = Vec::with_capacity(self.n());
        self.level(&mut prefix, self.rel_tol)
    }

    fn upper(&self, prefix: &[f64]) -> f64 {
        let k = prefix.len();
        let dom = self.shadow.upper_given_prefix(prefix);
        if dom == f64::NEG_INFINITY {
            return dom;
        }
        if self.psi[k + 1..].iter().any(|c| *c > 0.0) {
            return dom;
        }
        let used: f64 = self.psi[..k].iter().zip(prefix).map(|(c, x)| c * x).sum();
        let room = -self.threshold - used;
        if self.psi[k] > 0.0 {
            dom.min(room / self.psi[k])
        } else if room > 0.0 {
            dom
        } else {
            f64::NEG_INFINITY
        }
    }

    fn level(&self, prefix: &mut Vec<f64>, rel_tol: f64) -> (f64, f64) {
        let k = prefix.len();
        let upper = self.upper(prefix);
        if upper == f64::NEG_INFINITY {
            return (0.0, 0.0);
        }
        let beta = self.beta[k];
        if k + 1 == self.n() {
            return ((beta * upper).exp() / beta, 0.0);
        }

        let breaks: Vec<f64> = if k + 2 == self.n() {
            self.inner_kinks(prefix, upper)
                .into_iter()
                .map(|x| (beta * (x - upper)).exp())
                .collect()
        } else {
            Vec::new()
        };

        let inner_tol = (rel_tol * 0.1).max(1e-13);
        let mut inner_err = 0.0f64;
        let opts = GkOptions {
            abs_tol: 0.0,
            rel_tol,
            max_intervals: 300,
        };
        let result = integrate(
            |w| {
                let x = upper + w.ln() / beta;
                prefix.push(x);
                let (v, e) = self.level(prefix, inner_tol);
                prefix.pop();
                inner_err = inner_err.max(e);
                v
            },
            0.0,
            1.0,
            &breaks,
            opts,
        );
        let scale = (beta * upper).exp() / beta;
        (scale * result.value, scale * (result.abs_error + inner_err))
    }

    /// Values of `x_k` (k = n−2) where the innermost upper limit switches
    /// between the domain bound and the ψ-plane.
    fn inner_kinks(&self, prefix: &[f64], upper: f64) -> Vec<f64> {
        let k = prefix.len();
        let last = k + 1;
        let c_last = self.psi[last];
        if c_last <= 0.0 {
            return Vec::new();
        }
        let c_k = self.psi[k];
        let used: f64 = self.psi[..k].iter().zip(prefix).map(|(c, x)| c * x).sum();
        let plane = |x: f64| (-self.threshold - used - c_k * x) / c_last;
        match &self.shadow {
            LogShadow::Box { upper: ub } => {
                if c_k > 0.0 {
                    let x = (-self.threshold - used - c_last * ub[last]) / c_k;
                    vec![x].into_iter().filter(|x| *x < upper).collect()
                } else {
                    Vec::new()
                }
            }
            LogShadow::Ball { radius, .. } => {
                let room = radius * radius - prefix.iter().map(|x| (2.0 * x).exp()).sum::<f64>();
                if room <= 0.0 {
                    return Vec::new();
                }
                let x_end = 0.5 * room.ln();
                let dom = |x: f64| {
                    let left = room - (2.0 * x).exp();
                    if left > 0.0 {
                        0.5 * left.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                };
                // g = dom − plane is concave on (−∞, x_end).
                let g = |x: f64| dom(x) - plane(x);
                let kappa = c_k / c_last;
                let peak = if kappa > 0.0 {
                    0.5 * (kappa * room / (1.0 + kappa)).ln()
                } else {
                    x_end - 60.0
                };
                let mut roots = Vec::new();
                if g(peak) > 0.0 {
                    if kappa > 0.0 {
                        // g → −∞ as x → −∞ when the plane tilts
                        let mut lo = peak - 1.0;
                        let mut step = 1.0;
                        while g(lo) > 0.0 && step < 1e6 {
                            step *= 2.0;
                            lo = peak - step;
                        }
                        if g(lo) <= 0.0 {
                            roots.push(bisect(&g, lo, peak));
                        }
                    }
                    roots.push(bisect(&g, peak, x_end));
                }
                roots.into_iter().filter(|x| *x < upper).collect()
            }
        }
    }
}

// Root of g on [a, b] with sign change (or −∞ at one end).
fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (g(m) > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
