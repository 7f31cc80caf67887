//! BGK relaxation surrogate.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::velocity::{MacroState, VelocityGrid};

/// `(M[F] − F)/τ` with `M[F]` the Maxwellian of `F`'s own moments.
///
/// The Maxwellian is rescaled to the exact discrete moments of `F`, so the five
/// collision invariants of the result vanish to rounding.
pub fn bgk_relax<T: Real>(f: &[T], tau: T, grid: &VelocityGrid<T>) -> Result<Vec<T>> {
    if !(tau > T::zero()) {
        return Err(Error::domain(format!("relaxation time must be positive, got {tau}")));
    }
    let m = discrete_maxwellian(f, grid)?;
    Ok(m.iter().zip(f).map(|(a, b)| (*a - *b) / tau).collect())
}

/// Maxwellian of `F`'s moments, corrected so that its lattice moments match `F` exactly.
pub fn discrete_maxwellian<T: Real>(f: &[T], grid: &VelocityGrid<T>) -> Result<Vec<T>> {
    let state = grid.moments(f)?;
    matched_maxwellian(&state, grid.conserved(f), grid)
}

/// Maxwellian of `state` whose lattice moments equal `state`'s own conserved
/// quantities exactly.
pub fn lattice_maxwellian<T: Real>(state: &MacroState<T>, grid: &VelocityGrid<T>) -> Result<Vec<T>> {
    state.validate()?;
    matched_maxwellian(state, state.conserved(), grid)
}

fn matched_maxwellian<T: Real>(state: &MacroState<T>, target: [T; 5], grid: &VelocityGrid<T>) -> Result<Vec<T>> {
    let mut m = grid.maxwellian(state);
    // Newton on the exponent coefficients (a, b, c) of m·exp(a + b·v + c|v|²)
    for _ in 0..8 {
        let cur = grid.conserved(&m);
        let res: [f64; 5] = std::array::from_fn(|k| (target[k] - cur[k]).as_f64());
        let scale = target[0].as_f64().abs().max(1e-300);
        if res.iter().all(|r| r.abs() <= 1e-15 * scale) {
            break;
        }
        let mut jac = [[0.0f64; 5]; 5];
        for (v, mv) in grid.nodes().iter().zip(&m) {
            let phi = crate::velocity::collision_invariants(*v).map(|x| x.as_f64());
            let basis = [1.0, v[0].as_f64(), v[1].as_f64(), v[2].as_f64(), 2.0 * phi[4]];
            let w = mv.as_f64() * grid.weight().as_f64();
            for r in 0..5 {
                for c in 0..5 {
                    jac[r][c] += w * phi[r] * basis[c];
                }
            }
        }
        let step = solve5(jac, res)?;
        for (v, mv) in grid.nodes().iter().zip(m.iter_mut()) {
            let e = step[0]
                + step[1] * v[0].as_f64()
                + step[2] * v[1].as_f64()
                + step[3] * v[2].as_f64()
                + step[4] * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).as_f64();
            *mv = *mv * T::lit(e.exp());
        }
    }
    Ok(m)
}

fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Result<[f64; 5]> {
    for col in 0..5 {
        let piv = (col..5)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::degenerate("singular moment system in BGK correction"));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..5 {
            let f = a[r][col] / a[col][col];
            for k in col..5 {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 5];
    for r in (0..5).rev() {
        let s: f64 = (r + 1..5).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::MacroState;

    #[test]
    fn maxwellian_is_fixed_and_moments_are_conserved() {
        let grid = VelocityGrid::<f64>::new(6.0, 16).unwrap();
        let s = MacroState::new(1.0, [0.2, 0.0, 0.0], 1.2).unwrap();
        let m = grid.maxwellian(&s);
        let q = bgk_relax(&m, 0.5, &grid).unwrap();
        assert!(grid.l1(&q) < 1e-9);
        let f: Vec<f64> = grid
            .sample(|v| (-(v[0] - 1.0).powi(2)).exp() * (-(v[1] * v[1] + v[2] * v[2]) / 3.0).exp() * (1.0 + 0.3 * v[2]))
            .into_iter()
            .map(|x| x.max(0.0))
            .collect();
        let q = bgk_relax(&f, 0.1, &grid).unwrap();
        let scale = grid.l1(&q);
        for c in grid.conserved(&q) {
            assert!(c.abs() < 1e-12 * scale.max(1.0), "{c}");
        }
        assert!(bgk_relax(&f, 0.0, &grid).is_err());
    }
}
