//! Discrete-velocity solver on a truncated `x₁` line or a specular duct slab.
//!
//! One step is Strang split: half transport, field solve and velocity-space
//! force (two species only), collision, half transport.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::collision::{discrete_maxwellian, lattice_maxwellian, CollisionOperator, KernelConfig, KernelUse};
use crate::diagnostics::{self, DiagnosticsRow};
use crate::error::{Error, Result};
use crate::euler_waves::{EndStates, WaveProfile};
use crate::field::{check_vlasov_cfl, poisson_solve, vlasov_force, FieldState, PoissonBoundary};
use crate::mesh::Mesh;
use crate::num::Real;
use crate::velocity::{ChiBasis, MacroState, VelocityGrid};

/// Values in `[−NEGATIVITY_FLOOR, 0)` are clipped and counted; anything lower aborts.
pub const NEGATIVITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionMode {
    Bgk,
    Quadrature,
    /// Free transport.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeciesMode {
    Single,
    TwoSpecies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reconstruction {
    Upwind,
    Minmod,
}

/// `μ(θ) = coefficient · θ^exponent`; the BGK relaxation time is `μ(θ)/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityLaw<T: Real> {
    pub coefficient: T,
    pub exponent: T,
}

impl<T: Real> Default for ViscosityLaw<T> {
    /// Fit of the viscosity computed from the default hard-potential kernel at `θ ∈ {1.5, 2, 2.5}`.
    fn default() -> Self {
        Self {
            coefficient: T::lit(0.0365),
            exponent: T::lit(0.5),
        }
    }
}

impl<T: Real> ViscosityLaw<T> {
    pub fn relaxation_time(&self, state: &MacroState<T>) -> T {
        self.coefficient * state.theta.powf(self.exponent) / state.pressure()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    None,
    /// `ε b(x) P₁(ζ M̄)` with a seeded polynomial-times-Gaussian `ζ`.
    Microscopic,
    /// Relative density, temperature and transverse-velocity modulation of `M̄`;
    /// on a duct the modulation is compatible with the walls.
    Macroscopic,
    /// Two species: `F± = M̄ (1 ± ε b(x))`.
    Charge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope<T: Real> {
    Gaussian { center: T, width: T },
    /// `cos(m π (x₁ − a)/(b − a))` on the mesh extent `[a, b]`; zero mean, zero end slope.
    Cosine { mode: usize },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation<T: Real> {
    pub kind: PerturbationKind,
    pub amplitude: T,
    pub envelope: Envelope<T>,
}

impl<T: Real> Perturbation<T> {
    pub fn none() -> Self {
        Self {
            kind: PerturbationKind::None,
            amplitude: T::zero(),
            envelope: Envelope::Uniform,
        }
    }

    fn envelope_at(&self, mesh: &Mesh<T>, x1: T) -> T {
        match self.envelope {
            Envelope::Gaussian { center, width } => (-((x1 - center) / width).powi(2)).exp(),
            Envelope::Cosine { mode } => {
                let (a, b) = mesh.extent();
                (T::from_usize_lossy(mode) * T::PI() * (x1 - a) / (b - a)).cos()
            }
            Envelope::Uniform => T::one(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario<T: Real> {
    pub mesh: Mesh<T>,
    pub grid: VelocityGrid<T>,
    pub collision: CollisionMode,
    pub kernel: KernelConfig<T>,
    pub viscosity: ViscosityLaw<T>,
    pub species: SpeciesMode,
    pub ends: EndStates<T>,
    pub perturbation: Perturbation<T>,
    pub t_end: T,
    pub cfl: T,
    /// Diagnostics cadence in time units.
    pub output_every: T,
    pub reconstruction: Reconstruction,
    pub poisson: PoissonBoundary,
    pub seed: u64,
    /// Velocity weight index `k` of the energy functional and convergence metric.
    pub weight_k: T,
    /// Derivative cap `m` of the energy functional.
    pub derivative_cap: usize,
}

impl<T: Real> Scenario<T> {
    /// Single-species BGK defaults around the given end states.
    pub fn new(mesh: Mesh<T>, grid: VelocityGrid<T>, ends: EndStates<T>) -> Self {
        Self {
            mesh,
            grid,
            collision: CollisionMode::Bgk,
            kernel: KernelConfig::boltzmann_default(),
            viscosity: ViscosityLaw::default(),
            species: SpeciesMode::Single,
            ends,
            perturbation: Perturbation::none(),
            t_end: T::one(),
            cfl: T::lit(0.8),
            output_every: T::one(),
            reconstruction: Reconstruction::Minmod,
            poisson: PoissonBoundary::Neumann,
            seed: 0,
            weight_k: T::one(),
            derivative_cap: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh.is_duct() && !self.grid.is_symmetric(1) {
            return Err(Error::config(
                "duct walls need a velocity grid symmetric under v₂ ↦ −v₂",
            ));
        }
        if !(self.cfl > T::zero()) || self.cfl > T::one() {
            return Err(Error::config(format!("CFL number must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= T::zero()) || !(self.output_every > T::zero()) {
            return Err(Error::config("time horizon must be nonnegative and output cadence positive"));
        }
        if !(self.viscosity.coefficient > T::zero()) {
            return Err(Error::config("viscosity coefficient must be positive"));
        }
        if self.derivative_cap > 2 {
            return Err(Error::config("derivative cap above 2 is not supported"));
        }
        if self.perturbation.kind == PerturbationKind::Charge && self.species != SpeciesMode::TwoSpecies {
            return Err(Error::config("charge perturbation needs two species"));
        }
        if self.collision == CollisionMode::Quadrature {
            let usage = match self.species {
                SpeciesMode::Single => KernelUse::Boltzmann,
                SpeciesMode::TwoSpecies => KernelUse::VlasovPoissonBoltzmann,
            };
            self.kernel.validate(usage)?;
        }
        if !self.ends.is_constant() {
            self.ends.check_rarefaction(1e-8)?;
        }
        for s in [self.ends.minus, self.ends.plus] {
            if !self.grid.covers(&s.to_macro()) {
                return Err(Error::config(format!(
                    "velocity box of half width {} does not cover six thermal widths of the end state {:?}",
                    self.grid.half_width(),
                    s
                )));
            }
        }
        Ok(())
    }

    pub fn species_count(&self) -> usize {
        match self.species {
            SpeciesMode::Single => 1,
            SpeciesMode::TwoSpecies => 2,
        }
    }
}

/// State of the run at one time level.
#[derive(Debug, Clone)]
pub struct SolutionSnapshot<T: Real> {
    pub time: T,
    pub step: usize,
    /// One array per species, cell-major (`cell * nv + v`).
    pub species: Vec<Vec<T>>,
    /// Moments of `F` (one species) or of `F₁ = (F₊ + F₋)/2`.
    pub macros: Vec<MacroState<T>>,
    pub field: Option<FieldState<T>>,
    /// Cumulative count of clipped negative values.
    pub clipped: usize,
}

impl<T: Real> SolutionSnapshot<T> {
    pub fn nv(&self) -> usize {
        self.species[0].len() / self.macros.len()
    }

    /// `F` or `F₁` in one cell.
    pub fn f1_cell(&self, c: usize) -> Vec<T> {
        let nv = self.nv();
        let r = c * nv..(c + 1) * nv;
        if self.species.len() == 1 {
            self.species[0][r].to_vec()
        } else {
            let half = T::lit(0.5);
            self.species[0][r.clone()]
                .iter()
                .zip(&self.species[1][r])
                .map(|(a, b)| half * (*a + *b))
                .collect()
        }
    }

    /// `F₂ = (F₊ − F₋)/2` in one cell (two species only).
    pub fn f2_cell(&self, c: usize) -> Option<Vec<T>> {
        if self.species.len() < 2 {
            return None;
        }
        let nv = self.nv();
        let r = c * nv..(c + 1) * nv;
        let half = T::lit(0.5);
        Some(
            self.species[0][r.clone()]
                .iter()
                .zip(&self.species[1][r])
                .map(|(a, b)| half * (*a - *b))
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary<T: Real> {
    pub steps: usize,
    pub final_snapshot: SolutionSnapshot<T>,
    pub rows: Vec<DiagnosticsRow>,
    /// Log-log slopes against `1+t` over the last decade of output times.
    pub conv_metric_slope: f64,
    pub ek_slope: f64,
    /// Largest `|u₂|` on duct walls seen at any step.
    pub wall_u2_max: f64,
}

pub struct Solver<T: Real> {
    scenario: Scenario<T>,
    profile: WaveProfile<T>,
    collision: Option<CollisionOperator<T>>,
    dt: T,
}

impl<T: Real> Solver<T> {
    pub fn new(scenario: Scenario<T>) -> Result<Self> {
        scenario.validate()?;
        let profile = WaveProfile::smoothed(scenario.ends)?;
        let collision = match scenario.collision {
            CollisionMode::Quadrature => Some(CollisionOperator::new(&scenario.grid, scenario.kernel)?),
            _ => None,
        };
        let dt = stable_dt(&scenario);
        Ok(Self {
            scenario,
            profile,
            collision,
            dt,
        })
    }

    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    pub fn profile(&self) -> &WaveProfile<T> {
        &self.profile
    }

    /// Time step from the transport CFL condition.
    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn initialize(&self) -> Result<SolutionSnapshot<T>> {
        let sc = &self.scenario;
        let mesh = &sc.mesh;
        let grid = &sc.grid;
        let nv = grid.len();
        let pert = sc.perturbation;
        let zeta = seeded_shape(sc.seed);
        let mut species = vec![vec![T::zero(); mesh.cells() * nv]; sc.species_count()];
        for c in 0..mesh.cells() {
            let (x1, x2) = mesh.center(c);
            let base = self.profile.evaluate(T::zero(), x1)?.to_macro();
            let b = pert.envelope_at(mesh, x1);
            let eps = pert.amplitude * b;
            let cells: Vec<Vec<T>> = match pert.kind {
                PerturbationKind::None => vec![lattice_maxwellian(&base, grid)?; sc.species_count()],
                PerturbationKind::Microscopic => {
                    let basis = ChiBasis::new(base, grid);
                    let raw: Vec<T> = grid
                        .nodes()
                        .iter()
                        .zip(basis.maxwellian())
                        .map(|(v, m)| zeta(base.scaled_velocity(*v)) * *m)
                        .collect();
                    let micro = basis.project_p1(&raw, grid);
                    let m = lattice_maxwellian(&base, grid)?;
                    let f: Vec<T> = m.iter().zip(&micro).map(|(m, g)| *m + eps * *g).collect();
                    vec![f; sc.species_count()]
                }
                PerturbationKind::Macroscopic => {
                    let mut s = base;
                    let (shape, u2) = match mesh.geometry() {
                        crate::mesh::Geometry::Line => (T::one(), T::zero()),
                        crate::mesh::Geometry::Duct { half_width } => {
                            let y = T::PI() * (x2 + half_width) / (T::lit(2.0) * half_width);
                            ((T::lit(2.0) * y).cos(), (T::lit(2.0) * y).sin())
                        }
                    };
                    s.rho = s.rho * (T::one() + eps * shape);
                    s.theta = s.theta * (T::one() + T::lit(0.5) * eps * shape);
                    s.u[1] = eps * u2;
                    s.validate()?;
                    vec![lattice_maxwellian(&s, grid)?; sc.species_count()]
                }
                PerturbationKind::Charge => {
                    let m = lattice_maxwellian(&base, grid)?;
                    vec![
                        m.iter().map(|x| *x * (T::one() + eps)).collect(),
                        m.iter().map(|x| *x * (T::one() - eps)).collect(),
                    ]
                }
            };
            for (s, f) in species.iter_mut().zip(cells) {
                if let Some((k, v)) = f.iter().enumerate().find(|(_, v)| **v < T::zero()) {
                    return Err(Error::config(format!(
                        "perturbation makes F negative ({v:e}) at x = ({x1}, {x2}), velocity node {k}"
                    )));
                }
                s[c * nv..(c + 1) * nv].copy_from_slice(&f);
            }
        }
        let macros = self.cell_moments(&species, T::zero())?;
        let field = self.field_for(&species)?;
        Ok(SolutionSnapshot {
            time: T::zero(),
            step: 0,
            species,
            macros,
            field,
            clipped: 0,
        })
    }

    fn cell_moments(&self, species: &[Vec<T>], time: T) -> Result<Vec<MacroState<T>>> {
        let nv = self.scenario.grid.len();
        let grid = &self.scenario.grid;
        (0..self.scenario.mesh.cells())
            .into_par_iter()
            .map(|c| {
                let r = c * nv..(c + 1) * nv;
                let f: Vec<T> = if species.len() == 1 {
                    species[0][r].to_vec()
                } else {
                    species[0][r.clone()]
                        .iter()
                        .zip(&species[1][r])
                        .map(|(a, b)| T::lit(0.5) * (*a + *b))
                        .collect()
                };
                grid.moments(&f).map_err(|e| Error::NumericalAbort {
                    time: time.as_f64(),
                    detail: format!("cell {c}: {e}"),
                })
            })
            .collect()
    }

    fn field_for(&self, species: &[Vec<T>]) -> Result<Option<FieldState<T>>> {
        if species.len() < 2 {
            return Ok(None);
        }
        let grid = &self.scenario.grid;
        let nv = grid.len();
        let source: Vec<T> = (0..self.scenario.mesh.cells())
            .map(|c| {
                let r = c * nv..(c + 1) * nv;
                grid.integrate(&species[0][r.clone()]) - grid.integrate(&species[1][r])
            })
            .collect();
        Ok(Some(poisson_solve(&source, &self.scenario.mesh, self.scenario.poisson)?))
    }

    pub fn step(&self, snap: &SolutionSnapshot<T>, dt: T) -> Result<SolutionSnapshot<T>> {
        let sc = &self.scenario;
        let half = T::lit(0.5) * dt;
        let mut species: Vec<Vec<T>> = snap.species.iter().map(|f| self.transport(f, half)).collect();
        if sc.species == SpeciesMode::TwoSpecies {
            let field = self.field_for(&species)?.expect("two species carry a field");
            check_vlasov_cfl(&field, &sc.grid, dt)?;
            for (f, charge) in species.iter_mut().zip([T::one(), -T::one()]) {
                self.apply_force(f, &field, charge, dt);
            }
        }
        self.collide(&mut species, dt, snap.time)?;
        let mut species: Vec<Vec<T>> = species.iter().map(|f| self.transport(f, half)).collect();
        let time = snap.time + dt;
        let mut clipped = snap.clipped;
        for f in species.iter_mut() {
            clipped += self.enforce_floor(f, time)?;
        }
        let macros = self.cell_moments(&species, time)?;
        let field = self.field_for(&species)?;
        Ok(SolutionSnapshot {
            time,
            step: snap.step + 1,
            species,
            macros,
            field,
            clipped,
        })
    }

    /// Upwind (or minmod-limited) flux-form transport `∂_t F + v·∇_x F = 0` over `dt`.
    fn transport(&self, f: &[T], dt: T) -> Vec<T> {
        let mesh = &self.scenario.mesh;
        let grid = &self.scenario.grid;
        let nv = grid.len();
        let (nx, ny) = (mesh.nx() as isize, mesh.ny() as isize);
        let (cx, cy) = (dt / mesh.hx(), dt / mesh.hy());
        let duct = mesh.is_duct();
        let limited = self.scenario.reconstruction == Reconstruction::Minmod;
        let mirror: Vec<usize> = (0..nv).map(|v| grid.mirror_index(v, 1)).collect();
        // ghost convention: copy at the x₁ ends, mirrored cell with reflected velocity at walls
        let at = |i: isize, j: isize, v: usize| -> T {
            let i = i.clamp(0, nx - 1);
            let (j, v) = if j < 0 {
                (-1 - j, mirror[v])
            } else if j >= ny {
                (2 * ny - 1 - j, mirror[v])
            } else {
                (j, v)
            };
            f[(i * ny + j) as usize * nv + v]
        };
        let face = |a: T, m2: T, m1: T, p1: T, p2: T| -> T {
            // flux a·F at the face between m1 and p1
            if a > T::zero() {
                let s = if limited { minmod(m1 - m2, p1 - m1) } else { T::zero() };
                a * (m1 + T::lit(0.5) * s)
            } else {
                let s = if limited { minmod(p1 - m1, p2 - p1) } else { T::zero() };
                a * (p1 - T::lit(0.5) * s)
            }
        };
        let mut out = vec![T::zero(); f.len()];
        out.par_chunks_mut(nv).enumerate().for_each(|(c, cell)| {
            let (i, j) = mesh.unindex(c);
            let (i, j) = (i as isize, j as isize);
            for (v, node) in grid.nodes().iter().enumerate() {
                let a = node[0];
                let fx = |k: isize| at(k, j, v);
                let east = face(a, fx(i - 1), fx(i), fx(i + 1), fx(i + 2));
                let west = face(a, fx(i - 2), fx(i - 1), fx(i), fx(i + 1));
                let mut val = fx(i) - cx * (east - west);
                if duct {
                    let b = node[1];
                    let fy = |k: isize| at(i, k, v);
                    let north = face(b, fy(j - 1), fy(j), fy(j + 1), fy(j + 2));
                    let south = face(b, fy(j - 2), fy(j - 1), fy(j), fy(j + 1));
                    val = val - cy * (north - south);
                }
                cell[v] = val;
            }
        });
        out
    }

    fn apply_force(&self, f: &mut [T], field: &FieldState<T>, charge: T, dt: T) {
        let grid = &self.scenario.grid;
        let nv = grid.len();
        f.par_chunks_mut(nv).enumerate().for_each(|(c, cell)| {
            let rate = vlasov_force(cell, field.e[c], grid, charge);
            for (x, r) in cell.iter_mut().zip(rate) {
                *x = *x + dt * r;
            }
        });
    }

    fn collide(&self, species: &mut [Vec<T>], dt: T, time: T) -> Result<()> {
        let sc = &self.scenario;
        if sc.collision == CollisionMode::Off {
            return Ok(());
        }
        let grid = &sc.grid;
        let nv = grid.len();
        let cells = sc.mesh.cells();
        let viscosity = sc.viscosity;
        let abort = |c: usize, e: Error| Error::NumericalAbort {
            time: time.as_f64(),
            detail: format!("collision in cell {c}: {e}"),
        };
        // gather per-cell species data so each cell can be updated independently
        let updated: Vec<Vec<Vec<T>>> = (0..cells)
            .into_par_iter()
            .map(|c| {
                let fs: Vec<Vec<T>> = species.iter().map(|s| s[c * nv..(c + 1) * nv].to_vec()).collect();
                let total: Vec<T> = if fs.len() == 1 {
                    fs[0].clone()
                } else {
                    fs[0].iter().zip(&fs[1]).map(|(a, b)| *a + *b).collect()
                };
                let state = grid.moments(&total).map_err(|e| abort(c, e))?;
                match (&self.collision, sc.collision) {
                    (Some(op), CollisionMode::Quadrature) => {
                        let tau = viscosity.relaxation_time(&state);
                        let substeps = (dt / (T::lit(0.25) * tau)).ceil().max(T::one());
                        let k = substeps.to_usize().unwrap_or(1).max(1);
                        let h = dt / substeps;
                        let mut fs = fs;
                        for _ in 0..k {
                            let total: Vec<T> = if fs.len() == 1 {
                                fs[0].clone()
                            } else {
                                fs[0].iter().zip(&fs[1]).map(|(a, b)| *a + *b).collect()
                            };
                            let reference = grid.moments(&total).map_err(|e| abort(c, e))?;
                            for f in fs.iter_mut() {
                                // single species: Q(F, F); two species: Q(F±, F₊ + F₋)
                                let q = if species.len() == 1 {
                                    op.apply_symmetric(f, &reference)
                                } else {
                                    op.apply(&total, f, &reference)
                                };
                                for (x, dq) in f.iter_mut().zip(q) {
                                    *x = *x + h * dq;
                                }
                            }
                        }
                        Ok(fs)
                    }
                    _ => {
                        let m = discrete_maxwellian(&total, grid).map_err(|e| abort(c, e))?;
                        let tau = viscosity.relaxation_time(&state);
                        let decay = (-dt / tau).exp();
                        let total_mass: T = total.iter().copied().sum();
                        Ok(fs
                            .iter()
                            .map(|f| {
                                let share = f.iter().copied().sum::<T>() / total_mass;
                                f.iter()
                                    .zip(&m)
                                    .map(|(x, mv)| share * *mv + (*x - share * *mv) * decay)
                                    .collect()
                            })
                            .collect())
                    }
                }
            })
            .collect::<Result<_>>()?;
        for (c, fs) in updated.into_iter().enumerate() {
            for (s, f) in species.iter_mut().zip(fs) {
                s[c * nv..(c + 1) * nv].copy_from_slice(&f);
            }
        }
        Ok(())
    }

    fn enforce_floor(&self, f: &mut [T], time: T) -> Result<usize> {
        let floor = T::lit(-NEGATIVITY_FLOOR);
        let nv = self.scenario.grid.len();
        let mut clipped = 0;
        for (k, x) in f.iter_mut().enumerate() {
            if x.is_nan() || *x < floor {
                let (c, v) = (k / nv, k % nv);
                let (x1, x2) = self.scenario.mesh.center(c);
                return Err(Error::NumericalAbort {
                    time: time.as_f64(),
                    detail: format!(
                        "F = {x:e} at x = ({x1}, {x2}), v = {:?}",
                        self.scenario.grid.nodes()[v]
                    ),
                });
            }
            if *x < T::zero() {
                *x = T::zero();
                clipped += 1;
            }
        }
        Ok(clipped)
    }

    /// Advances to `t_end`, computing diagnostics at the output cadence and at
    /// the final time; `observer` sees every diagnosed snapshot.
    pub fn run(
        &self,
        mut observer: impl FnMut(&SolutionSnapshot<T>, &DiagnosticsRow) -> Result<()>,
    ) -> Result<RunSummary<T>> {
        let sc = &self.scenario;
        let mut snap = self.initialize()?;
        let ctx = diagnostics::Context::new(sc, &self.profile);
        let mut rows = Vec::new();
        let row = diagnostics::row(&snap, &ctx);
        observer(&snap, &row)?;
        rows.push(row);
        let mut next_output = sc.output_every;
        let mut wall_u2 = self.wall_u2(&snap);
        let eps = T::lit(1e-9) * self.dt;
        while snap.time < sc.t_end - eps {
            let dt = self.dt.min(sc.t_end - snap.time).min(next_output - snap.time);
            snap = self.step(&snap, dt)?;
            wall_u2 = wall_u2.max(self.wall_u2(&snap));
            let at_end = snap.time >= sc.t_end - eps;
            if snap.time >= next_output - eps || at_end {
                let row = diagnostics::row(&snap, &ctx);
                observer(&snap, &row)?;
                rows.push(row);
                while next_output <= snap.time + eps {
                    next_output = next_output + sc.output_every;
                }
            }
        }
        let (conv_metric_slope, ek_slope) = diagnostics::fitted_slopes(&rows);
        Ok(RunSummary {
            steps: snap.step,
            final_snapshot: snap,
            rows,
            conv_metric_slope,
            ek_slope,
            wall_u2_max: wall_u2,
        })
    }

    /// Largest `|u₂|` of the specular wall traces (zero on a line).
    pub fn wall_u2(&self, snap: &SolutionSnapshot<T>) -> f64 {
        let mesh = &self.scenario.mesh;
        if !mesh.is_duct() {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..mesh.nx() {
            for j in [0, mesh.ny() - 1] {
                let f = snap.f1_cell(mesh.index(i, j));
                let (m0, m2) = wall_trace_moments(&f, &self.scenario.grid, j == 0);
                worst = worst.max((m2 / m0).abs().as_f64());
            }
        }
        worst
    }
}

/// Largest one-sided wall difference `|ρ(x₁, j=1) − ρ(x₁, j=0)| / h_y` over
/// both walls (zero on a line).
pub fn wall_density_gradient<T: Real>(snap: &SolutionSnapshot<T>, mesh: &Mesh<T>) -> f64 {
    if !mesh.is_duct() {
        return 0.0;
    }
    let ny = mesh.ny();
    let hy = mesh.hy().as_f64();
    let mut worst = 0.0f64;
    for i in 0..mesh.nx() {
        for (a, b) in [(0, 1), (ny - 1, ny - 2)] {
            let d = snap.macros[mesh.index(i, b)].rho - snap.macros[mesh.index(i, a)].rho;
            worst = worst.max(d.abs().as_f64() / hy);
        }
    }
    worst
}

/// Density and `v₂`-momentum of the wall trace: outgoing values from the
/// adjacent cell, incoming values by reflection.
pub fn wall_trace_moments<T: Real>(f: &[T], grid: &VelocityGrid<T>, lower: bool) -> (T, T) {
    let mut m0 = T::zero();
    let mut m2 = T::zero();
    for (v, node) in grid.nodes().iter().enumerate() {
        let outgoing = if lower { node[1] < T::zero() } else { node[1] > T::zero() };
        if !outgoing {
            continue;
        }
        let r = grid.mirror_index(v, 1);
        let w = grid.nodes()[r][1];
        // the pair (v, Rv) carries f(v) in both directions
        m0 = m0 + f[v] + f[v];
        m2 = m2 + (node[1] * f[v] + w * f[v]);
    }
    let wt = grid.weight();
    (m0 * wt, m2 * wt)
}

fn minmod<T: Real>(a: T, b: T) -> T {
    if a * b <= T::zero() {
        T::zero()
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

fn stable_dt<T: Real>(sc: &Scenario<T>) -> T {
    let vmax = |d: usize| -> T { sc.grid.axis(d).iter().fold(T::zero(), |m, x| m.max(x.abs())) };
    let mut rate = vmax(0) / sc.mesh.hx();
    if sc.mesh.is_duct() {
        rate = rate + vmax(1) / sc.mesh.hy();
    }
    sc.cfl / rate
}

/// Shape `ζ(w) = (c₀ B̂₁₁ + c₁ B̂₁₂ + c₂ Â₁) exp(−|w|²/4)` with seeded coefficients.
fn seeded_shape<T: Real>(seed: u64) -> impl Fn([T; 3]) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let norm = (c.iter().map(|x| x * x).sum::<f64>()).sqrt().max(1e-12);
    let c = c.map(|x| T::lit(x / norm));
    move |w: [T; 3]| {
        use crate::collision::{a_hat, b_hat};
        let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        (c[0] * b_hat(w, 0, 0) + c[1] * b_hat(w, 0, 1) + c[2] * a_hat(w, 0)) * (-w2 / T::lit(4.0)).exp()
    }
}
