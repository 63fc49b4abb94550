//! Tail probabilities of hypoexponential sums `Σ_j E_j / λ_j`, `E_j ~ Exp(1)`.
//!
//! After the substitution `u_j = e^{β_j x_j}` a monomial mass over a polydisc
//! sublevel set is a product of one-dimensional factors times such a tail.
//! The tail equals the first row sum of `exp(sQ)` for the bidiagonal generator
//! `Q` (diagonal `−λ_j`, superdiagonal `λ_j`). `Q + μI` is entrywise
//! nonnegative for `μ = max λ`, so a Taylor series of the shifted generator
//! followed by repeated squaring only ever adds nonnegative numbers and keeps
//! full relative accuracy, including for coincident rates.

/// `P(Σ_j E_j / λ_j > s)` for positive rates.
pub(crate) fn hypoexponential_tail(rates: &[f64], s: f64) -> f64 {
    debug_assert!(rates.iter().all(|r| *r > 0.0 && r.is_finite()));
    if s <= 0.0 {
        return 1.0;
    }
    match rates {
        [] => 0.0,
        [rate] => (-rate * s).exp(),
        _ => first_row_sum_of_exp(rates, s),
    }
}

fn first_row_sum_of_exp(rates: &[f64], s: f64) -> f64 {
    let m = rates.len();
    let mu = rates.iter().cloned().fold(0.0, f64::max);

    // h·μ ≤ 1/2 keeps the Taylor series short.
    let mut squarings = 0u32;
    let mut h = s;
    while h * mu > 0.5 {
        h *= 0.5;
        squarings += 1;
    }

    // Shifted generator h·(Q + μI), upper bidiagonal and nonnegative.
    let mut shifted = vec![0.0; m * m];
    for j in 0..m {
        shifted[j * m + j] = h * (mu - rates[j]);
        if j + 1 < m {
            shifted[j * m + j + 1] = h * rates[j];
        }
    }

    let mut exp = identity(m);
    let mut term = identity(m);
    for k in 1..60 {
        term = matmul(&term, &shifted, m);
        let inv = 1.0 / k as f64;
        term.iter_mut().for_each(|v| *v *= inv);
        let mut largest = 0.0f64;
        for (e, t) in exp.iter_mut().zip(&term) {
            *e += t;
            largest = largest.max(*t);
        }
        if largest < 1e-18 {
            break;
        }
    }
    let damp = (-mu * h).exp();
    exp.iter_mut().for_each(|v| *v *= damp);

    for _ in 0..squarings {
        exp = matmul(&exp, &exp, m);
    }
    exp[..m].iter().sum::<f64>().min(1.0)
}

fn identity(m: usize) -> Vec<f64> {
    let mut id = vec![0.0; m * m];
    for j in 0..m {
        id[j * m + j] = 1.0;
    }
    id
}

// Upper-triangular product.
fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for k in i..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in k..m {
                out[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    out
}
