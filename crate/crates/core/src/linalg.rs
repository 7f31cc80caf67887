//! Preconditioned conjugate gradients with a Lanczos condition estimate.

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone)]
pub struct CgOutcome<T: Real> {
    pub solution: Vec<T>,
    pub iterations: usize,
    /// Final relative residual `‖b − A x‖ / ‖b‖`.
    pub residual: f64,
    /// Ratio of extreme Ritz values of the preconditioned operator.
    pub condition: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CgSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Condition estimates above this are reported as ill-conditioned.
    pub condition_limit: f64,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 2000,
            condition_limit: 1e12,
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.as_f64() * y.as_f64()).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` given through `apply`,
/// with the diagonal preconditioner `precond` (entries of `A`'s diagonal).
pub fn conjugate_gradient<T: Real>(
    apply: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    precond: &[T],
    settings: CgSettings,
) -> Result<CgOutcome<T>> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![T::zero(); n],
            iterations: 0,
            residual: 0.0,
            condition: 1.0,
        });
    }
    let inv: Vec<T> = precond
        .iter()
        .map(|d| if *d > T::zero() { T::one() / *d } else { T::one() })
        .collect();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv).map(|(a, b)| *a * *b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut residual = 1.0;
    for it in 0..settings.max_iterations {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::IllConditioned {
                condition: f64::INFINITY,
                detail: format!("operator is not positive definite (pᵀAp = {pap:e} at iteration {it})"),
            });
        }
        let alpha = rz / pap;
        let at = T::lit(alpha);
        for i in 0..n {
            x[i] = x[i] + at * p[i];
            r[i] = r[i] - at * ap[i];
        }
        alphas.push(alpha);
        residual = dot(&r, &r).sqrt() / bnorm;
        if residual < settings.tolerance {
            let condition = ritz_condition(&alphas, &betas);
            return Ok(CgOutcome {
                solution: x,
                iterations: it + 1,
                residual,
                condition,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        betas.push(beta);
        rz = rz_new;
        let bt = T::lit(beta);
        for i in 0..n {
            p[i] = z[i] + bt * p[i];
        }
    }
    let condition = ritz_condition(&alphas, &betas);
    Err(Error::IllConditioned {
        condition,
        detail: format!(
            "conjugate gradients stalled at relative residual {residual:e} after {} iterations",
            settings.max_iterations
        ),
    })
}

/// Condition estimate from the Lanczos tridiagonal implied by the CG coefficients.
fn ritz_condition(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    if k == 0 {
        return 1.0;
    }
    let mut diag = vec![0.0; k];
    let mut off = vec![0.0; k.saturating_sub(1)];
    for j in 0..k {
        diag[j] = 1.0 / alphas[j] + if j > 0 { betas[j - 1] / alphas[j - 1] } else { 0.0 };
        if j + 1 < k {
            off[j] = betas[j].sqrt() / alphas[j];
        }
    }
    let (lo, hi) = tridiagonal_extremes(&diag, &off);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Smallest and largest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_extremes(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    // number of eigenvalues strictly below x
    let count = |x: f64| -> usize {
        let mut c = 0;
        let mut d = 1.0;
        for i in 0..n {
            let o2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            d = diag[i] - x - if i > 0 { o2 / d } else { 0.0 };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                c += 1;
            }
        }
        c
    };
    let bisect = |target: usize| -> f64 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if count(m) > target {
                b = m;
            } else {
                a = m;
            }
            if b - a <= 1e-14 * (a.abs() + b.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    };
    (bisect(0), bisect(n - 1))
}

/// `y = A x` for a dense row-major square matrix.
pub fn dense_matvec<T: Real>(a: &[T], x: &[T]) -> Vec<T> {
    use rayon::prelude::*;
    let n = x.len();
    a.par_chunks(n)
        .map(|row| row.iter().zip(x).fold(T::zero(), |acc, (p, q)| acc + *p * *q))
        .collect()
}
