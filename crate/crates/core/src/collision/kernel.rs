//! Collision kernel `B = |v − v*|^γ b(cos θ)` and its σ-sphere quadrature.

use crate::error::{Error, Result};
use crate::num::{gauss_legendre, Real};

/// Non-cutoff kernel parameters. The angular part is the prototype
/// `b(cos θ) = θ^{−1−2s}` on `(θ_min, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig<T: Real> {
    pub gamma: T,
    pub s: T,
    pub theta_min: T,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Upper bound on the number of σ-point evaluations a single operator
    /// application may perform.
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelUse {
    Boltzmann,
    VlasovPoissonBoltzmann,
}

impl<T: Real> KernelConfig<T> {
    /// Hard potential `γ = 1, s = 1/2` with `θ_min = π/64` and an 8×8 σ grid.
    pub fn boltzmann_default() -> Self {
        Self {
            gamma: T::one(),
            s: T::lit(0.5),
            theta_min: T::PI() / T::lit(64.0),
            n_theta: 8,
            n_phi: 8,
            budget: 5e10,
        }
    }

    pub fn vpb_default() -> Self {
        Self {
            gamma: T::zero(),
            ..Self::boltzmann_default()
        }
    }

    pub fn with_resolution(mut self, n_theta: usize, n_phi: usize) -> Self {
        self.n_theta = n_theta;
        self.n_phi = n_phi;
        self
    }

    pub fn with_theta_min(mut self, theta_min: T) -> Self {
        self.theta_min = theta_min;
        self
    }

    /// Soft/hard classification by the sign of `γ + 2s`.
    pub fn is_hard_potential(&self) -> bool {
        self.gamma + T::lit(2.0) * self.s >= T::zero()
    }

    pub fn validate(&self, usage: KernelUse) -> Result<()> {
        let s = self.s;
        if !(s > T::zero() && s < T::one()) {
            return Err(Error::config(format!("angular order s must lie in (0,1), got {s}")));
        }
        if !(self.theta_min > T::zero() && self.theta_min < T::FRAC_PI_2()) {
            return Err(Error::config("theta_min must lie in (0, π/2)"));
        }
        if self.n_theta == 0 || self.n_phi < 3 {
            return Err(Error::config("σ quadrature needs n_theta ≥ 1 and n_phi ≥ 3"));
        }
        match usage {
            KernelUse::Boltzmann => {
                let floor = (-T::lit(2.0) * s - T::lit(1.5)).max(-T::lit(3.0));
                if !(self.gamma > floor) {
                    return Err(Error::config(format!(
                        "Boltzmann case requires γ > max(-3, -2s-3/2) = {floor}, got {}",
                        self.gamma
                    )));
                }
            }
            KernelUse::VlasovPoissonBoltzmann => {
                if self.gamma < T::zero() || s < T::lit(0.5) {
                    return Err(Error::config(format!(
                        "VPB case requires γ ≥ 0 and 1/2 ≤ s < 1, got γ = {}, s = {s}",
                        self.gamma
                    )));
                }
            }
        }
        Ok(())
    }

    /// Angular prototype `θ^{−1−2s}`.
    pub fn angular(&self, theta: T) -> T {
        theta.powf(-T::one() - T::lit(2.0) * self.s)
    }

    pub fn kinetic(&self, relative_speed: T) -> T {
        if relative_speed == T::zero() {
            if self.gamma > T::zero() {
                T::zero()
            } else {
                T::infinity()
            }
        } else {
            relative_speed.powf(self.gamma)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SigmaNode<T: Real> {
    pub cos_theta: T,
    pub sin_theta: T,
    pub cos_phi: T,
    pub sin_phi: T,
    /// `b(cos θ) sin θ dθ dφ`.
    pub weight: T,
}

/// Product rule in `(θ, φ)`: Gauss–Legendre in `ln θ` on `[θ_min, π/2]`, which
/// clusters nodes toward the singular end, and the periodic trapezoid rule in `φ`.
#[derive(Debug, Clone)]
pub struct SigmaQuadrature<T: Real> {
    nodes: Vec<SigmaNode<T>>,
    total: T,
}

impl<T: Real> SigmaQuadrature<T> {
    pub fn new(kernel: &KernelConfig<T>) -> Self {
        let (x, w) = gauss_legendre(kernel.n_theta);
        let a = kernel.theta_min.as_f64().ln();
        let b = std::f64::consts::FRAC_PI_2.ln();
        let dphi = 2.0 * std::f64::consts::PI / kernel.n_phi as f64;
        let mut nodes = Vec::with_capacity(kernel.n_theta * kernel.n_phi);
        for (xi, wi) in x.iter().zip(&w) {
            let t = 0.5 * (b - a) * xi + 0.5 * (b + a);
            let theta = t.exp();
            // dθ = θ dt
            let wt = 0.5 * (b - a) * wi * theta;
            let ang = kernel.angular(T::lit(theta)).as_f64() * theta.sin() * wt;
            for p in 0..kernel.n_phi {
                let phi = (p as f64 + 0.5) * dphi;
                nodes.push(SigmaNode {
                    cos_theta: T::lit(theta.cos()),
                    sin_theta: T::lit(theta.sin()),
                    cos_phi: T::lit(phi.cos()),
                    sin_phi: T::lit(phi.sin()),
                    weight: T::lit(ang * dphi),
                });
            }
        }
        let total = nodes.iter().map(|n| n.weight).sum();
        Self { nodes, total }
    }

    pub fn nodes(&self) -> &[SigmaNode<T>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ b(cos θ) dσ` over the truncated cap.
    pub fn total_weight(&self) -> T {
        self.total
    }
}

/// Post-collision pair in the σ-representation.
pub fn post_collision<T: Real>(v: [T; 3], v_star: [T; 3], sigma: [T; 3]) -> Result<([T; 3], [T; 3])> {
    let norm = (sigma[0] * sigma[0] + sigma[1] * sigma[1] + sigma[2] * sigma[2]).sqrt();
    if (norm - T::one()).abs() > T::lit(1e3 * T::TINY) {
        return Err(Error::domain(format!("σ must be a unit vector, |σ| = {norm}")));
    }
    let r = (0..3).map(|d| (v[d] - v_star[d]).powi(2)).sum::<T>().sqrt();
    let half = T::lit(0.5);
    let vp = std::array::from_fn(|d| half * (v[d] + v_star[d]) + half * r * sigma[d]);
    let vsp = std::array::from_fn(|d| half * (v[d] + v_star[d]) - half * r * sigma[d]);
    Ok((vp, vsp))
}

/// Orthonormal frame `(e1, e2)` perpendicular to the unit vector `k`.
pub(crate) fn frame<T: Real>(k: [T; 3]) -> ([T; 3], [T; 3]) {
    let e = if k[0].abs() < T::lit(0.9) {
        [T::one(), T::zero(), T::zero()]
    } else {
        [T::zero(), T::one(), T::zero()]
    };
    let dot = e[0] * k[0] + e[1] * k[1] + e[2] * k[2];
    let mut e1 = [e[0] - dot * k[0], e[1] - dot * k[1], e[2] - dot * k[2]];
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = e1.map(|x| x / n);
    let e2 = [
        k[1] * e1[2] - k[2] * e1[1],
        k[2] * e1[0] - k[0] * e1[2],
        k[0] * e1[1] - k[1] * e1[0],
    ];
    (e1, e2)
}
