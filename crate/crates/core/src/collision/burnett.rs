//! Burnett functions, transport coefficients and the microscopic correction `Ḡ`.

use super::linear::LinearizedOperator;
use crate::error::{Error, Result};
use crate::num::{gas_constant, Real};
use crate::velocity::{MacroState, VelocityGrid};

/// Storage order of the symmetric index pairs of `B̂_ij`.
pub const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    PAIRS.iter().position(|&p| p == (a, b)).expect("index pair in range")
}

/// `Â_j(w) = ((|w|²−5)/2) w_j`.
pub fn a_hat<T: Real>(w: [T; 3], j: usize) -> T {
    let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    (w2 - T::lit(5.0)) / T::lit(2.0) * w[j]
}

/// `B̂_ij(w) = w_i w_j − δ_ij |w|²/3`.
pub fn b_hat<T: Real>(w: [T; 3], i: usize, j: usize) -> T {
    let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let d = if i == j { w2 / T::lit(3.0) } else { T::zero() };
    w[i] * w[j] - d
}

#[derive(Debug, Clone)]
pub struct BurnettSet<T: Real> {
    state: MacroState<T>,
    a_hat: [Vec<T>; 3],
    b_hat: [Vec<T>; 6],
    a: [Vec<T>; 3],
    b: [Vec<T>; 6],
    weight: T,
}

impl<T: Real> BurnettSet<T> {
    /// Samples `Â_j`, `B̂_ij` at `(v−u)/sqrt(Rθ)` and solves
    /// `A_j = L_M^{-1}(Â_j M)`, `B_ij = L_M^{-1}(B̂_ij M)`.
    pub fn build(lin: &LinearizedOperator<'_, T>) -> Result<Self> {
        let grid = lin.grid();
        let state = *lin.state();
        let m = lin.basis().maxwellian();
        let ws: Vec<[T; 3]> = grid.nodes().iter().map(|&v| state.scaled_velocity(v)).collect();
        let a_hat: [Vec<T>; 3] = std::array::from_fn(|j| ws.iter().map(|w| a_hat(*w, j)).collect());
        let b_hat: [Vec<T>; 6] =
            std::array::from_fn(|k| ws.iter().map(|w| b_hat(*w, PAIRS[k].0, PAIRS[k].1)).collect());
        let times_m = |p: &Vec<T>| -> Vec<T> { p.iter().zip(m).map(|(x, y)| *x * *y).collect() };
        let mut a: [Vec<T>; 3] = Default::default();
        for j in 0..3 {
            a[j] = lin.pinv(&times_m(&a_hat[j]))?;
        }
        let mut b: [Vec<T>; 6] = Default::default();
        for k in 0..6 {
            b[k] = lin.pinv(&times_m(&b_hat[k]))?;
        }
        Ok(Self {
            state,
            a_hat,
            b_hat,
            a,
            b,
            weight: grid.weight(),
        })
    }

    pub fn state(&self) -> &MacroState<T> {
        &self.state
    }

    pub fn a(&self, j: usize) -> &[T] {
        &self.a[j]
    }

    pub fn b(&self, i: usize, j: usize) -> &[T] {
        &self.b[pair_index(i, j)]
    }

    pub fn a_hat_samples(&self, j: usize) -> &[T] {
        &self.a_hat[j]
    }

    pub fn b_hat_samples(&self, i: usize, j: usize) -> &[T] {
        &self.b_hat[pair_index(i, j)]
    }

    fn inner(&self, x: &[T], y: &[T]) -> T {
        x.iter().zip(y).fold(T::zero(), |acc, (p, q)| acc + *p * *q) * self.weight
    }

    /// `(Â_i, A_j)` in `L²_v`.
    pub fn aa(&self, i: usize, j: usize) -> T {
        self.inner(&self.a_hat[i], &self.a[j])
    }

    /// `(Â_i, B_jk)`.
    pub fn ab(&self, i: usize, j: usize, k: usize) -> T {
        self.inner(&self.a_hat[i], self.b(j, k))
    }

    /// `(B̂_ij, B_kl)`.
    pub fn bb(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.inner(self.b_hat_samples(i, j), self.b(k, l))
    }

    /// Full inner-product table as `(label, value)` rows.
    pub fn table(&self) -> Vec<(String, T)> {
        let mut rows = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                rows.push((format!("(Ahat{},A{})", i + 1, j + 1), self.aa(i, j)));
            }
        }
        for i in 0..3 {
            for &(j, k) in &PAIRS {
                rows.push((format!("(Ahat{},B{}{})", i + 1, j + 1, k + 1), self.ab(i, j, k)));
            }
        }
        for &(i, j) in &PAIRS {
            for &(k, l) in &PAIRS {
                rows.push((
                    format!("(Bhat{}{},B{}{})", i + 1, j + 1, k + 1, l + 1),
                    self.bb(i, j, k, l),
                ));
            }
        }
        rows
    }

    /// `μ(θ) = −Rθ (B_ij, B̂_ij)` for the off-diagonal pair `(i, j)`.
    pub fn viscosity_pair(&self, i: usize, j: usize) -> T {
        -gas_constant::<T>() * self.state.theta * self.bb(i, j, i, j)
    }

    /// `κ(θ) = −R²θ (A_j, Â_j)`.
    pub fn conductivity_index(&self, j: usize) -> T {
        let r = gas_constant::<T>();
        -r * r * self.state.theta * self.aa(j, j)
    }

    /// `Ḡ = sqrt(R/θ) θ̄_{x₁} A₁ + ū_{1x₁} B₁₁`.
    pub fn olg(&self, theta_bar_x: T, u1_bar_x: T) -> Vec<T> {
        let c = (gas_constant::<T>() / self.state.theta).sqrt() * theta_bar_x;
        self.a[0]
            .iter()
            .zip(&self.b[0])
            .map(|(a, b)| c * *a + u1_bar_x * *b)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportCoefficients<T: Real> {
    pub viscosity: T,
    pub conductivity: T,
}

/// Viscosity from the `(1,2)` pair and conductivity from `j = 1`; nonpositive
/// values are reported as a quadrature failure.
pub fn transport_coefficients<T: Real>(set: &BurnettSet<T>) -> Result<TransportCoefficients<T>> {
    let viscosity = set.viscosity_pair(0, 1);
    let conductivity = set.conductivity_index(0);
    if !(viscosity > T::zero()) || !(conductivity > T::zero()) {
        return Err(Error::degenerate(format!(
            "nonpositive transport coefficient (μ = {viscosity:e}, κ = {conductivity:e}); collision quadrature failed"
        )));
    }
    Ok(TransportCoefficients {
        viscosity,
        conductivity,
    })
}

/// Source `v₁ M { |v−u|² θ̄_{x₁} / (2Rθ²) + (v−u)·ū_{x₁} / (Rθ) }` of the direct construction.
pub fn olg_source<T: Real>(grid: &VelocityGrid<T>, state: &MacroState<T>, theta_bar_x: T, u1_bar_x: T) -> Vec<T> {
    let r = gas_constant::<T>();
    let th = state.theta;
    grid.sample(|v| {
        let c: [T; 3] = std::array::from_fn(|d| v[d] - state.u[d]);
        let c2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        let brace = c2 * theta_bar_x / (T::lit(2.0) * r * th * th) + c[0] * u1_bar_x / (r * th);
        v[0] * state.maxwellian_at(v) * brace
    })
}

/// `Ḡ = L_M^{-1} P₁ (v₁ M {…})` computed directly.
pub fn olg_direct<T: Real>(lin: &LinearizedOperator<'_, T>, theta_bar_x: T, u1_bar_x: T) -> Result<Vec<T>> {
    let src = olg_source(lin.grid(), lin.state(), theta_bar_x, u1_bar_x);
    lin.pinv(&src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{CollisionOperator, KernelConfig};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(a.abs())
    }

    /// Continuum identity behind the Burnett form of `Ḡ`, checked on a fine grid.
    #[test]
    fn p1_of_olg_source_is_the_burnett_combination() {
        let grid = VelocityGrid::<f64>::new(8.0, 32).unwrap();
        let state = MacroState::new(1.1, [0.4, -0.2, 0.0], 1.7).unwrap();
        let basis = crate::velocity::ChiBasis::new(state, &grid);
        let (tx, ux) = (0.3, -0.7);
        let src = olg_source(&grid, &state, tx, ux);
        let p1 = basis.project_p1(&src, &grid);
        let m = basis.maxwellian();
        let c = (gas_constant::<f64>() / state.theta).sqrt() * tx;
        let want: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(m)
            .map(|(&v, mv)| {
                let w = state.scaled_velocity(v);
                (c * a_hat(w, 0) + ux * b_hat(w, 0, 0)) * mv
            })
            .collect();
        let d: Vec<f64> = p1.iter().zip(&want).map(|(a, b)| a - b).collect();
        assert!(grid.l2(&d) < 1e-8 * grid.l2(&want));
    }

    /// For `γ = 0` the Burnett functions are eigenfunctions; viscosity and the
    /// Eucken ratio follow in closed form:
    /// `μ = Rθ / (3πΛ)`, `κ / μ = 15R/4`, `Λ = ∫ b sin³θ dθ`.
    #[test]
    fn maxwell_molecule_transport_matches_closed_form() {
        let grid = VelocityGrid::<f64>::new(6.0, 12).unwrap();
        let mut kernel = KernelConfig::boltzmann_default().with_resolution(6, 6);
        kernel.gamma = 0.0;
        let op = CollisionOperator::new(&grid, kernel).unwrap();
        let state = MacroState::global();
        let lin = LinearizedOperator::new(&op, state).unwrap();
        let set = BurnettSet::build(&lin).unwrap();
        let tc = transport_coefficients(&set).unwrap();
        let n = 4000;
        let (a, b) = (kernel.theta_min, std::f64::consts::FRAC_PI_2);
        let h = (b - a) / n as f64;
        let f = |t: f64| t.powf(-2.0) * t.sin().powi(3);
        let lambda = (1..n).fold(f(a) + f(b), |s, i| s + f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }) * h / 3.0;
        let r = gas_constant::<f64>();
        let mu = r * state.theta / (3.0 * std::f64::consts::PI * lambda);
        assert!(rel(tc.viscosity, mu) < 0.1, "{} vs {mu}", tc.viscosity);
        assert!(rel(tc.conductivity / tc.viscosity, 15.0 * r / 4.0) < 0.1);
    }

    /// Isotropy fixes the B-block up to one constant. Sphere averages of the
    /// traceless tensors give `(B̂ᵢᵢ,Bᵢᵢ) : (B̂ᵢⱼ,Bᵢⱼ) : (B̂ᵢᵢ,Bⱼⱼ) = 4 : 3 : −2`.
    #[test]
    fn b_block_ratios_follow_sphere_averages() {
        let (x, w) = crate::num::gauss_legendre(12);
        let nphi = 24;
        let (mut d2, mut o2, mut cross) = (0.0, 0.0, 0.0);
        for (c, wc) in x.iter().zip(&w) {
            let s = (1.0 - c * c).sqrt();
            for p in 0..nphi {
                let phi = 2.0 * std::f64::consts::PI * p as f64 / nphi as f64;
                let n = [s * phi.cos(), s * phi.sin(), *c];
                let wt = wc / (2.0 * nphi as f64);
                d2 += wt * (n[0] * n[0] - 1.0 / 3.0).powi(2);
                o2 += wt * (n[0] * n[1]).powi(2);
                cross += wt * (n[0] * n[0] - 1.0 / 3.0) * (n[1] * n[1] - 1.0 / 3.0);
            }
        }
        assert!((d2 - 4.0 / 45.0).abs() < 1e-14 && (o2 - 3.0 / 45.0).abs() < 1e-14);
        assert!((cross + 2.0 / 45.0).abs() < 1e-14);

        let grid = VelocityGrid::<f64>::new(6.0, 12).unwrap();
        let mut kernel = KernelConfig::boltzmann_default().with_resolution(6, 6);
        kernel.gamma = 0.0;
        let op = CollisionOperator::new(&grid, kernel).unwrap();
        let lin = LinearizedOperator::new(&op, MacroState::global()).unwrap();
        let set = BurnettSet::build(&lin).unwrap();
        let off = set.bb(0, 1, 0, 1);
        assert!(rel(set.bb(0, 0, 0, 0) / off, d2 / o2) < 0.05, "{}", set.bb(0, 0, 0, 0) / off);
        // the cross entry carries the most lattice anisotropy at N = 12
        assert!(rel(set.bb(0, 0, 1, 1) / off, cross / o2) < 0.08, "{}", set.bb(0, 0, 1, 1) / off);
    }

    #[test]
    fn olg_vanishes_without_gradients() {
        let grid = VelocityGrid::<f64>::new(5.0, 8).unwrap();
        let op = CollisionOperator::new(&grid, KernelConfig::boltzmann_default().with_resolution(2, 2)).unwrap();
        let lin = LinearizedOperator::new(&op, MacroState::global()).unwrap();
        let set = BurnettSet::build(&lin).unwrap();
        assert!(set.olg(0.0, 0.0).iter().all(|x| *x == 0.0));
        assert!(set.table().len() == 9 + 18 + 36);
    }
}
