//! Velocity-space quadrature, Maxwellians, fluid moments and the projections
//! of the macro-micro decomposition.
//!
//! Inner products against the local Maxwellian use the convention
//! `(f, g/M) = ∫ f g / M dv`. The basis functions `χ_i / M` are evaluated as
//! polynomials so that no division by small tail values ever happens.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::num::{gas_constant, psi, Real};

/// Uniform midpoint lattice on the cube `c + [-L, L]^3` (centered at the origin by default).
#[derive(Debug, Clone)]
pub struct VelocityGrid<T: Real> {
    half_width: T,
    n: usize,
    h: T,
    center: [T; 3],
    axes: [Vec<T>; 3],
    nodes: Vec<[T; 3]>,
}

impl<T: Real> VelocityGrid<T> {
    pub fn new(half_width: T, points_per_axis: usize) -> Result<Self> {
        Self::with_center(half_width, points_per_axis, [T::zero(); 3])
    }

    pub fn with_center(half_width: T, points_per_axis: usize, center: [T; 3]) -> Result<Self> {
        if points_per_axis < 8 {
            return Err(Error::config(format!(
                "velocity grid needs at least 8 points per axis, got {points_per_axis}"
            )));
        }
        if !(half_width > T::zero()) {
            return Err(Error::config("velocity grid half width must be positive"));
        }
        let n = points_per_axis;
        let h = T::lit(2.0) * half_width / T::from_usize_lossy(n);
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("velocity grid center must be finite"));
        }
        // offsets from the center are exact mirror images of each other
        let offset = |i: usize| -> T {
            if 2 * i + 1 >= n {
                (T::from_usize_lossy(i) + T::lit(0.5)) * h - half_width
            } else {
                half_width - (T::from_usize_lossy(n - 1 - i) + T::lit(0.5)) * h
            }
        };
        let axes: [Vec<T>; 3] = std::array::from_fn(|d| (0..n).map(|i| center[d] + offset(i)).collect());
        let mut nodes = Vec::with_capacity(n * n * n);
        for &a in &axes[0] {
            for &b in &axes[1] {
                for &c in &axes[2] {
                    nodes.push([a, b, c]);
                }
            }
        }
        Ok(Self {
            half_width,
            n,
            h,
            center,
            axes,
            nodes,
        })
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    pub fn center(&self) -> [T; 3] {
        self.center
    }

    /// Node coordinates along velocity component `d`.
    pub fn axis(&self, d: usize) -> &[T] {
        &self.axes[d]
    }

    pub fn nodes(&self) -> &[[T; 3]] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weight of every node, `h^3`.
    pub fn weight(&self) -> T {
        self.h * self.h * self.h
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        [idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n]
    }

    /// Index of the node obtained by flipping the sign of velocity component `axis`.
    pub fn mirror_index(&self, idx: usize, axis: usize) -> usize {
        let mut ijk = self.unindex(idx);
        ijk[axis] = self.n - 1 - ijk[axis];
        self.index(ijk[0], ijk[1], ijk[2])
    }

    /// Nodes are symmetric under `v_axis -> -v_axis`, i.e. the lattice is centered on that axis.
    pub fn is_symmetric(&self, axis: usize) -> bool {
        (0..self.len()).all(|i| {
            let j = self.mirror_index(i, axis);
            (self.nodes[i][axis] + self.nodes[j][axis]).abs() <= T::lit(1e-12) * self.half_width
        })
    }

    pub fn integrate(&self, f: &[T]) -> T {
        f.iter().copied().sum::<T>() * self.weight()
    }

    pub fn dot(&self, f: &[T], g: &[T]) -> T {
        f.iter().zip(g).map(|(a, b)| *a * *b).sum::<T>() * self.weight()
    }

    pub fn l1(&self, f: &[T]) -> T {
        f.iter().map(|a| a.abs()).sum::<T>() * self.weight()
    }

    pub fn l2(&self, f: &[T]) -> T {
        self.dot(f, f).sqrt()
    }

    pub fn sample(&self, func: impl Fn([T; 3]) -> T) -> Vec<T> {
        self.nodes.iter().map(|&v| func(v)).collect()
    }

    pub fn maxwellian(&self, state: &MacroState<T>) -> Vec<T> {
        self.sample(|v| state.maxwellian_at(v))
    }

    /// Fraction of the Maxwellian's mass lying outside the box, estimated per axis
    /// from the complementary error function.
    pub fn tail_mass(&self, state: &MacroState<T>) -> f64 {
        let sd = state.thermal_speed().as_f64();
        let l = self.half_width.as_f64();
        let mut inside = 1.0;
        for d in 0..3 {
            let c = state.u[d].as_f64() - self.center[d].as_f64();
            let hi = (l - c) / (sd * std::f64::consts::SQRT_2);
            let lo = (-l - c) / (sd * std::f64::consts::SQRT_2);
            inside *= 0.5 * (erf(hi) - erf(lo));
        }
        (1.0 - inside).max(0.0)
    }

    /// Whether the box spans six thermal widths around the bulk velocity.
    pub fn covers(&self, state: &MacroState<T>) -> bool {
        let six = T::lit(6.0) * state.thermal_speed();
        (0..3).all(|d| {
            let c = state.u[d] - self.center[d];
            c - six >= -self.half_width && c + six <= self.half_width
        })
    }

    /// Fluid moments `(ρ, u, θ)` of `f`.
    pub fn moments(&self, f: &[T]) -> Result<MacroState<T>> {
        let mut m = [T::zero(); 5];
        for (v, &fv) in self.nodes.iter().zip(f) {
            m[0] = m[0] + fv;
            m[1] = m[1] + v[0] * fv;
            m[2] = m[2] + v[1] * fv;
            m[3] = m[3] + v[2] * fv;
            m[4] = m[4] + T::lit(0.5) * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * fv;
        }
        let w = self.weight();
        let m = m.map(|x| x * w);
        MacroState::from_conserved(m)
    }

    /// Integrals of the five collision invariants `1, v, |v|²/2` against `f`.
    pub fn conserved(&self, f: &[T]) -> [T; 5] {
        let mut m = [T::zero(); 5];
        for (v, &fv) in self.nodes.iter().zip(f) {
            let xi = collision_invariants(*v);
            for k in 0..5 {
                m[k] = m[k] + xi[k] * fv;
            }
        }
        m.map(|x| x * self.weight())
    }

    /// Writes `v1,v2,v3,value` rows for a velocity function.
    pub fn write_csv<W: Write>(&self, f: &[T], mut out: W) -> io::Result<()> {
        writeln!(out, "v1,v2,v3,value")?;
        for (v, fv) in self.nodes.iter().zip(f) {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                v[0].as_f64(),
                v[1].as_f64(),
                v[2].as_f64(),
                fv.as_f64()
            )?;
        }
        Ok(())
    }
}

/// `ξ = (1, v1, v2, v3, |v|²/2)`.
pub fn collision_invariants<T: Real>(v: [T; 3]) -> [T; 5] {
    [
        T::one(),
        v[0],
        v[1],
        v[2],
        T::lit(0.5) * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]),
    ]
}

/// Density, bulk velocity and temperature; internal energy `e = (3/2)Rθ = θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState<T: Real> {
    pub rho: T,
    pub u: [T; 3],
    pub theta: T,
}

impl<T: Real> MacroState<T> {
    pub fn new(rho: T, u: [T; 3], theta: T) -> Result<Self> {
        let s = Self { rho, u, theta };
        s.validate()?;
        Ok(s)
    }

    /// The global Maxwellian state `(1, 0, 3/2)`, for which `Rθ = 1`.
    pub fn global() -> Self {
        Self {
            rho: T::one(),
            u: [T::zero(); 3],
            theta: T::lit(1.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero()) || !self.rho.is_finite() {
            return Err(Error::domain(format!("density must be positive, got {}", self.rho)));
        }
        if !(self.theta > T::zero()) || !self.theta.is_finite() {
            return Err(Error::domain(format!(
                "temperature must be positive, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// Recover `(ρ, u, θ)` from `(ρ, ρu, ρ(e + |u|²/2))`.
    pub fn from_conserved(m: [T; 5]) -> Result<Self> {
        let rho = m[0];
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(Error::degenerate(format!("non-positive mass {rho}")));
        }
        let u = [m[1] / rho, m[2] / rho, m[3] / rho];
        let ke = T::lit(0.5) * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        let e = m[4] / rho - ke;
        let theta = e / (T::lit(1.5) * gas_constant::<T>());
        if !(theta > T::zero()) || !theta.is_finite() {
            return Err(Error::degenerate(format!(
                "computed temperature {theta} is not positive (mass {rho})"
            )));
        }
        Ok(Self { rho, u, theta })
    }

    pub fn conserved(&self) -> [T; 5] {
        let ke = T::lit(0.5) * (self.u[0] * self.u[0] + self.u[1] * self.u[1] + self.u[2] * self.u[2]);
        [
            self.rho,
            self.rho * self.u[0],
            self.rho * self.u[1],
            self.rho * self.u[2],
            self.rho * (self.theta + ke),
        ]
    }

    /// `sqrt(Rθ)`.
    pub fn thermal_speed(&self) -> T {
        (gas_constant::<T>() * self.theta).sqrt()
    }

    pub fn pressure(&self) -> T {
        gas_constant::<T>() * self.rho * self.theta
    }

    pub fn ln_maxwellian_at(&self, v: [T; 3]) -> T {
        let rt = gas_constant::<T>() * self.theta;
        let c2 = (0..3).map(|d| (v[d] - self.u[d]).powi(2)).sum::<T>();
        self.rho.ln() - T::lit(1.5) * (T::lit(2.0) * T::PI() * rt).ln() - c2 / (T::lit(2.0) * rt)
    }

    pub fn maxwellian_at(&self, v: [T; 3]) -> T {
        self.ln_maxwellian_at(v).exp()
    }

    /// `(v − u)/sqrt(Rθ)`.
    pub fn scaled_velocity(&self, v: [T; 3]) -> [T; 3] {
        let s = self.thermal_speed();
        [(v[0] - self.u[0]) / s, (v[1] - self.u[1]) / s, (v[2] - self.u[2]) / s]
    }
}

/// Closed-form macroscopic entropy `S = −(2/3) ln ρ + ln(2πRθ) + 1`.
pub fn entropy_closed<T: Real>(state: &MacroState<T>) -> T {
    -T::lit(2.0) / T::lit(3.0) * state.rho.ln()
        + (T::lit(2.0) * T::PI() * gas_constant::<T>() * state.theta).ln()
        + T::one()
}

/// Entropy from `−(3/2) ρ S = ∫ M ln M dv` by quadrature on the grid.
pub fn entropy_quadrature<T: Real>(state: &MacroState<T>, grid: &VelocityGrid<T>) -> T {
    let integral: T = grid
        .nodes()
        .iter()
        .map(|&v| {
            let lm = state.ln_maxwellian_at(v);
            lm.exp() * lm
        })
        .sum::<T>()
        * grid.weight();
    -T::lit(2.0) / (T::lit(3.0) * state.rho) * integral
}

/// Relative entropy `η` of `state` around `bar`:
/// `(3/2){ ½ρ|u−ū|² + (2/3)ρθ̄Ψ(ρ̄/ρ) + ρθ̄Ψ(θ/θ̄) }`.
pub fn entropy_eta<T: Real>(state: &MacroState<T>, bar: &MacroState<T>) -> T {
    let du2 = (0..3).map(|d| (state.u[d] - bar.u[d]).powi(2)).sum::<T>();
    T::lit(1.5)
        * (T::lit(0.5) * state.rho * du2
            + T::lit(2.0) / T::lit(3.0) * state.rho * bar.theta * psi(bar.rho / state.rho)
            + state.rho * bar.theta * psi(state.theta / bar.theta))
}

/// Orthonormal basis `χ_0..χ_4` of the local Maxwellian's null space.
#[derive(Debug, Clone)]
pub struct ChiBasis<T: Real> {
    state: MacroState<T>,
    chi: [Vec<T>; 5],
    /// `χ_i / M` as quadrature-ready polynomial samples.
    dual: [Vec<T>; 5],
    maxwellian: Vec<T>,
    /// Inverse of the discrete Gram matrix, so that `P₀` is an exact projection on the lattice.
    gram_inv: [[f64; 5]; 5],
}

impl<T: Real> ChiBasis<T> {
    pub fn new(state: MacroState<T>, grid: &VelocityGrid<T>) -> Self {
        let m = grid.maxwellian(&state);
        let sr = state.rho.sqrt();
        let rt = gas_constant::<T>() * state.theta;
        let six = T::lit(6.0).sqrt();
        let mut dual: [Vec<T>; 5] = Default::default();
        for &v in grid.nodes() {
            let w = state.scaled_velocity(v);
            let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
            dual[0].push(T::one() / sr);
            for d in 0..3 {
                dual[d + 1].push((v[d] - state.u[d]) / (rt * state.rho).sqrt());
            }
            dual[4].push((w2 - T::lit(3.0)) / (six * sr));
        }
        let chi: [Vec<T>; 5] = std::array::from_fn(|i| dual[i].iter().zip(&m).map(|(p, mv)| *p * *mv).collect());
        let gram = std::array::from_fn(|i| std::array::from_fn(|j| grid.dot(&chi[i], &dual[j]).as_f64()));
        Self {
            state,
            chi,
            dual,
            maxwellian: m,
            gram_inv: invert5(gram),
        }
    }

    /// Basis built from the computed moments of `f`.
    pub fn from_distribution(f: &[T], grid: &VelocityGrid<T>) -> Result<Self> {
        Ok(Self::new(grid.moments(f)?, grid))
    }

    pub fn state(&self) -> &MacroState<T> {
        &self.state
    }

    pub fn maxwellian(&self) -> &[T] {
        &self.maxwellian
    }

    pub fn chi(&self, i: usize) -> &[T] {
        &self.chi[i]
    }

    /// `χ_i / M`.
    pub fn dual(&self, i: usize) -> &[T] {
        &self.dual[i]
    }

    /// Coefficients `(f, χ_i/M)`.
    pub fn coefficients(&self, f: &[T], grid: &VelocityGrid<T>) -> [T; 5] {
        std::array::from_fn(|i| grid.dot(f, &self.dual[i]))
    }

    /// Gram matrix `(χ_i, χ_j/M)`.
    pub fn gram(&self, grid: &VelocityGrid<T>) -> [[T; 5]; 5] {
        std::array::from_fn(|i| std::array::from_fn(|j| grid.dot(&self.chi[i], &self.dual[j])))
    }

    /// `P₀f = Σ cᵢ χᵢ` with `(P₀f, χⱼ/M) = (f, χⱼ/M)` on the lattice. The Gram
    /// correction is the identity up to quadrature error.
    pub fn project_p0(&self, f: &[T], grid: &VelocityGrid<T>) -> Vec<T> {
        let raw = self.coefficients(f, grid);
        let c: [T; 5] = std::array::from_fn(|i| {
            T::lit((0..5).map(|j| self.gram_inv[i][j] * raw[j].as_f64()).sum())
        });
        let mut out = vec![T::zero(); f.len()];
        for (i, ci) in c.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(&self.chi[i]) {
                *o = *o + *ci * *x;
            }
        }
        out
    }

    pub fn project_p1(&self, f: &[T], grid: &VelocityGrid<T>) -> Vec<T> {
        let p0 = self.project_p0(f, grid);
        f.iter().zip(p0).map(|(a, b)| *a - b).collect()
    }
}

/// Gauss–Jordan inverse of a well-conditioned 5×5 matrix.
fn invert5(mut a: [[f64; 5]; 5]) -> [[f64; 5]; 5] {
    let mut inv = [[0.0; 5]; 5];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..5 {
        let piv = (col..5)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for k in 0..5 {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..5 {
            if r != col {
                let f = a[r][col];
                for k in 0..5 {
                    a[r][k] -= f * a[col][k];
                    inv[r][k] -= f * inv[col][k];
                }
            }
        }
    }
    inv
}

/// Projections onto the span of `√μ` directions for the global Maxwellian `μ = M_[1,0,3/2]`.
#[derive(Debug, Clone)]
pub struct GlobalProjector<T: Real> {
    sqrt_mu: Vec<T>,
}

impl<T: Real> GlobalProjector<T> {
    pub fn new(grid: &VelocityGrid<T>) -> Self {
        let mu = MacroState::global();
        Self {
            sqrt_mu: grid.sample(|v| (T::lit(0.5) * mu.ln_maxwellian_at(v)).exp()),
        }
    }

    pub fn sqrt_mu(&self) -> &[T] {
        &self.sqrt_mu
    }

    /// Macroscopic component `a = ∫ √μ f dv`.
    pub fn mass_component(&self, f: &[T], grid: &VelocityGrid<T>) -> T {
        grid.dot(&self.sqrt_mu, f)
    }

    /// `P_{μ,2} f = (∫ √μ f) √μ`.
    pub fn project_mu2(&self, f: &[T], grid: &VelocityGrid<T>) -> Vec<T> {
        let a = self.mass_component(f, grid);
        self.sqrt_mu.iter().map(|s| a * *s).collect()
    }

    /// `P_μ f`: mass, momentum and energy components against `√μ`.
    pub fn project_mu(&self, f: &[T], grid: &VelocityGrid<T>) -> Vec<T> {
        let nodes = grid.nodes();
        let three = T::lit(3.0);
        let mut a = T::zero();
        let mut b = [T::zero(); 3];
        let mut c = T::zero();
        for ((v, &fv), &s) in nodes.iter().zip(f).zip(&self.sqrt_mu) {
            let sf = s * fv;
            a = a + sf;
            for d in 0..3 {
                b[d] = b[d] + v[d] * sf;
            }
            let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            c = c + (v2 - three) / T::lit(6.0) * sf;
        }
        let w = grid.weight();
        let (a, c) = (a * w, c * w);
        let b = b.map(|x| x * w);
        nodes
            .iter()
            .zip(&self.sqrt_mu)
            .map(|(v, &s)| {
                let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                (a + v[0] * b[0] + v[1] * b[1] + v[2] * b[2] + (v2 - three) * c) * s
            })
            .collect()
    }
}

/// Abramowitz–Stegun 7.1.26 is too coarse for tail estimates; use a series /
/// continued fraction pair accurate to ~1e-15.
fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 2.5 {
        // Maclaurin series
        let mut sum = x;
        let mut term = x;
        let x2 = x * x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x2 / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        // continued fraction for erfc, evaluated backward
        let mut f = 0.0;
        for k in (1..60).rev() {
            f = (k as f64 / 2.0) / (x + f);
        }
        1.0 - (-x * x).exp() / std::f64::consts::PI.sqrt() / (x + f)
    }
}
