//! Conservative discrete collision operator.
//!
//! With the event table of [`super::table`], the bilinear operator is taken in
//! weak form
//!
//! ```text
//! Q(G,F)_i = ½ Σ_events W Δ [δ_a − (1−r) δ_λ − r δ_{λ+s}](i),
//! Δ = M_a M_b [ (1−r) ĝ_μ f̂_λ + r ĝ_{μ−s} f̂_{λ+s} − ĝ_b f̂_a ],
//! ```
//!
//! where `f̂ = F / M` and `ĝ = G / M` are taken relative to a reference
//! Maxwellian `M`. The post-collision product is interpolated in the ratio to
//! `M ⊗ M`, so `Q(M, M) = 0` holds exactly for the reference, and the deposit
//! conserves mass, momentum and energy of `Q(F, F)` exactly for any `F`.

use rayon::prelude::*;

use super::kernel::{KernelConfig, SigmaQuadrature};
use super::table::{Event, EventTable};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::velocity::{MacroState, VelocityGrid};

const CHUNK: usize = 8192;

/// Approximate number of pair-σ evaluations of one operator application.
pub fn work_estimate<T: Real>(grid: &VelocityGrid<T>, sigma: &SigmaQuadrature<T>) -> f64 {
    let n = grid.len() as f64;
    n * n * sigma.len() as f64
}

#[derive(Debug, Clone)]
pub struct CollisionOperator<T: Real> {
    grid: VelocityGrid<T>,
    kernel: KernelConfig<T>,
    sigma: SigmaQuadrature<T>,
    table: EventTable<T>,
}

impl<T: Real> CollisionOperator<T> {
    /// Builds the event table. Fails with [`Error::Cost`] when the work estimate
    /// exceeds the kernel budget.
    pub fn new(grid: &VelocityGrid<T>, kernel: KernelConfig<T>) -> Result<Self> {
        if kernel.n_theta == 0 || kernel.n_phi == 0 {
            return Err(Error::config("σ quadrature needs at least one node per angle"));
        }
        let sigma = SigmaQuadrature::new(&kernel);
        let estimate = work_estimate(grid, &sigma);
        if estimate > kernel.budget {
            return Err(Error::Cost {
                estimate,
                budget: kernel.budget,
            });
        }
        let table = EventTable::build(grid, &kernel, &sigma);
        Ok(Self {
            grid: grid.clone(),
            kernel,
            sigma,
            table,
        })
    }

    pub fn grid(&self) -> &VelocityGrid<T> {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelConfig<T> {
        &self.kernel
    }

    pub fn sigma(&self) -> &SigmaQuadrature<T> {
        &self.sigma
    }

    pub(crate) fn events(&self) -> &[Event<T>] {
        &self.table.events
    }

    pub fn events_len(&self) -> usize {
        self.table.events.len()
    }

    /// Events whose projection could not bracket the energy shell.
    pub fn dropped_events(&self) -> usize {
        self.table.dropped
    }

    fn accumulate(&self, body: impl Fn(&Event<T>, &mut [T]) + Sync) -> Vec<T> {
        let n = self.grid.len();
        self.table
            .events
            .par_chunks(CHUNK)
            .fold(
                || vec![T::zero(); n],
                |mut acc, chunk| {
                    for ev in chunk {
                        body(ev, &mut acc);
                    }
                    acc
                },
            )
            .reduce(
                || vec![T::zero(); n],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x = *x + y;
                    }
                    a
                },
            )
    }

    /// `Q(G, F)` with post-collision products interpolated relative to `reference`.
    pub fn apply(&self, g: &[T], f: &[T], reference: &MacroState<T>) -> Vec<T> {
        let m = self.grid.maxwellian(reference);
        let gh: Vec<T> = g.iter().zip(&m).map(|(x, y)| *x / *y).collect();
        let fh: Vec<T> = f.iter().zip(&m).map(|(x, y)| *x / *y).collect();
        let n = self.grid.points_per_axis();
        let half = T::lit(0.5);
        self.accumulate(|ev, out| {
            let r = ev.r;
            let r1 = T::one() - r;
            let c0 = half * ev.weight;
            sweep(ev, n, |a, [b, l, ls, mu, mus]| {
                let d = m[a] * m[b] * (r1 * gh[mu] * fh[l] + r * gh[mus] * fh[ls] - gh[b] * fh[a]);
                let c = c0 * d;
                out[a] = out[a] + c;
                out[l] = out[l] - r1 * c;
                out[ls] = out[ls] - r * c;
            });
        })
    }

    /// `Q(F, F)` through the symmetric pair form: each unordered collision is
    /// visited once and deposits on all six nodes.
    pub fn apply_symmetric(&self, f: &[T], reference: &MacroState<T>) -> Vec<T> {
        let m = self.grid.maxwellian(reference);
        let fh: Vec<T> = f.iter().zip(&m).map(|(x, y)| *x / *y).collect();
        let n = self.grid.points_per_axis();
        let half = T::lit(0.5);
        self.accumulate(|ev, out| {
            if !positive(ev.z) {
                return;
            }
            let r = ev.r;
            let r1 = T::one() - r;
            let c0 = half * ev.weight;
            sweep(ev, n, |a, [b, l, ls, mu, mus]| {
                let d = m[a] * m[b] * (r1 * fh[l] * fh[mu] + r * fh[ls] * fh[mus] - fh[a] * fh[b]);
                let c = c0 * d;
                out[a] = out[a] + c;
                out[b] = out[b] + c;
                out[l] = out[l] - r1 * c;
                out[mu] = out[mu] - r1 * c;
                out[ls] = out[ls] - r * c;
                out[mus] = out[mus] - r * c;
            });
        })
    }

    /// Loss part `F(v) ∫∫ B G(v*)` over the same collision set.
    pub fn loss(&self, g: &[T], f: &[T]) -> Vec<T> {
        let n = self.grid.points_per_axis();
        let mut out = self.accumulate(|ev, out| {
            sweep(ev, n, |a, [b, ..]| out[a] = out[a] + ev.weight * g[b]);
        });
        for (o, x) in out.iter_mut().zip(f) {
            *o = *o * *x;
        }
        out
    }

    /// `Q(F, F)` relative to the Maxwellian with the moments of `F`.
    pub fn collide(&self, f: &[T]) -> Result<Vec<T>> {
        let state = self.grid.moments(f)?;
        Ok(self.apply_symmetric(f, &state))
    }
}

fn positive(z: [i16; 3]) -> bool {
    z[0] > 0 || (z[0] == 0 && (z[1] > 0 || (z[1] == 0 && z[2] > 0)))
}

/// Visits every lattice instance of an event with all six nodes on the lattice.
#[inline(always)]
pub(crate) fn sweep<T: Real>(ev: &Event<T>, n: usize, mut body: impl FnMut(usize, [usize; 5])) {
    let (lo0, hi0) = ev.a_range(0, n);
    let (lo1, hi1) = ev.a_range(1, n);
    let (lo2, hi2) = ev.a_range(2, n);
    if lo0 > hi0 || lo1 > hi1 || lo2 > hi2 {
        return;
    }
    let off = ev.offsets(n);
    for a0 in lo0..=hi0 {
        for a1 in lo1..=hi1 {
            let base = (a0 as usize * n + a1 as usize) * n;
            for a2 in lo2..=hi2 {
                let a = base + a2 as usize;
                let ai = a as isize;
                body(a, off.map(|o| (ai + o) as usize));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize, gamma: f64) -> CollisionOperator<f64> {
        let grid = VelocityGrid::new(6.0, n).unwrap();
        let mut kernel = KernelConfig::boltzmann_default().with_resolution(4, 4);
        kernel.gamma = gamma;
        CollisionOperator::new(&grid, kernel).unwrap()
    }

    fn mixture(grid: &VelocityGrid<f64>) -> Vec<f64> {
        let a = MacroState::new(0.5, [1.0, 0.0, 0.0], 1.0).unwrap();
        let b = MacroState::new(0.5, [-1.0, 0.3, 0.0], 1.2).unwrap();
        let ma = grid.maxwellian(&a);
        let mb = grid.maxwellian(&b);
        ma.iter().zip(&mb).map(|(x, y)| x + y).collect()
    }

    #[test]
    fn conserves_collision_invariants_exactly() {
        let op = setup(10, 1.0);
        let grid = op.grid().clone();
        let f = mixture(&grid);
        let q = op.collide(&f).unwrap();
        let l1 = grid.l1(&q);
        assert!(l1 > 1e-3);
        let c = grid.conserved(&q);
        for x in c {
            assert!(x.abs() / l1 < 1e-12, "{c:?} vs {l1}");
        }
    }

    #[test]
    fn reference_maxwellian_is_an_exact_equilibrium() {
        let op = setup(10, 1.0);
        let grid = op.grid().clone();
        let state = MacroState::new(1.3, [0.2, -0.1, 0.0], 1.4).unwrap();
        let m = grid.maxwellian(&state);
        let q = op.apply(&m, &m, &state);
        let loss = op.loss(&m, &m);
        assert!(grid.l1(&q) / grid.l1(&loss) < 1e-13);
    }

    #[test]
    fn symmetric_and_bilinear_paths_agree() {
        let op = setup(10, 1.0);
        let grid = op.grid().clone();
        let f = mixture(&grid);
        let reference = MacroState::global();
        let a = op.apply(&f, &f, &reference);
        let b = op.apply_symmetric(&f, &reference);
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff / b.iter().map(|x| x.abs()).sum::<f64>() < 1e-12);
    }

    #[test]
    fn bilinear_sum_conserves_momentum_and_energy() {
        let op = setup(10, 1.0);
        let grid = op.grid().clone();
        let s1 = MacroState::new(1.0, [0.5, 0.0, 0.0], 1.0).unwrap();
        let s2 = MacroState::new(0.7, [-0.4, 0.2, 0.0], 1.3).unwrap();
        let g = grid.maxwellian(&s1);
        let f = grid.maxwellian(&s2);
        let reference = MacroState::global();
        let a = op.apply(&g, &f, &reference);
        let b = op.apply(&f, &g, &reference);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let l1 = grid.l1(&sum);
        for x in grid.conserved(&sum) {
            assert!(x.abs() / l1 < 1e-12);
        }
        // each half alone conserves mass only
        assert!(grid.integrate(&a).abs() / grid.l1(&a) < 1e-12);
    }

    /// For `γ = 0` the stress moment relaxes in closed form:
    /// `∫ v1 v2 Q(F,F) = −(3π/2) Λ ρ P12`, `Λ = ∫ b sin³θ dθ`.
    #[test]
    fn maxwell_molecule_stress_relaxation_matches_closed_form() {
        let kernel = KernelConfig::<f64>::boltzmann_default();
        let theta_min = kernel.theta_min;
        let lambda = simpson(|t| t.powf(-2.0) * t.sin().powi(3), theta_min, std::f64::consts::FRAC_PI_2, 4000);
        let mut errs = Vec::new();
        for n in [12, 16] {
            let grid = VelocityGrid::new(6.0, n).unwrap();
            let mut k = kernel.with_resolution(8, 8);
            k.gamma = 0.0;
            let op = CollisionOperator::new(&grid, k).unwrap();
            // sheared Maxwellian: covariance with off-diagonal entry
            let (a11, a12, a22, a33) = (1.3, 0.35, 0.9, 1.0);
            let det = a11 * a22 - a12 * a12;
            let f = grid.sample(|v| {
                let q = (a22 * v[0] * v[0] - 2.0 * a12 * v[0] * v[1] + a11 * v[1] * v[1]) / det
                    + v[2] * v[2] / a33;
                (-0.5 * q).exp() / ((2.0 * std::f64::consts::PI).powf(1.5) * (det * a33).sqrt())
            });
            let q = op.collide(&f).unwrap();
            let rho = grid.integrate(&f);
            let p12 = grid.dot(&f, &grid.sample(|v| v[0] * v[1]));
            let got = grid.dot(&q, &grid.sample(|v| v[0] * v[1]));
            let want = -1.5 * std::f64::consts::PI * lambda * rho * p12;
            errs.push(((got - want) / want).abs());
        }
        assert!(errs[1] < 0.05, "{errs:?}");
        assert!(errs[1] < errs[0], "{errs:?}");
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn budget_is_enforced() {
        let grid = VelocityGrid::<f64>::new(6.0, 16).unwrap();
        let mut kernel = KernelConfig::boltzmann_default();
        kernel.budget = 1e3;
        assert!(matches!(
            CollisionOperator::new(&grid, kernel),
            Err(Error::Cost { .. })
        ));
    }
}
