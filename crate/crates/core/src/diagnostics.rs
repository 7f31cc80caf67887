//! Perturbation variables, energy and dissipation surrogates, and convergence
//! metrics evaluated on solver snapshots.
//!
//! Derivatives are centered differences in space (one-sided at the mesh
//! edges). Time derivatives are not taken, so every report carries a time
//! stencil width of zero.

use rayon::prelude::*;

use crate::collision::{discrete_maxwellian, lattice_maxwellian};
use crate::error::{Error, Result};
use crate::euler_waves::WaveProfile;
use crate::mesh::Mesh;
use crate::num::{linear_slope, Real};
use crate::solver::{Scenario, SolutionSnapshot, ViscosityLaw};
use crate::velocity::{entropy_eta, ChiBasis, MacroState, VelocityGrid};

/// `⟨v⟩ = sqrt(1 + |v|²)`.
pub fn japanese<T: Real>(v: [T; 3]) -> T {
    (T::one() + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Immutable data shared by all diagnostics of one run.
#[derive(Debug, Clone)]
pub struct Context<T: Real> {
    pub mesh: Mesh<T>,
    pub grid: VelocityGrid<T>,
    pub profile: WaveProfile<T>,
    pub viscosity: ViscosityLaw<T>,
    /// Weight index `k`.
    pub k: T,
    /// Derivative cap `m`.
    pub m: usize,
    /// Exponents `γ` and `s` of the dissipation weight `⟨v⟩^{(γ+2s)/2}`.
    pub gamma: T,
    pub s: T,
    inv_sqrt_mu: Vec<T>,
    jap: Vec<T>,
}

impl<T: Real> Context<T> {
    pub fn new(scenario: &Scenario<T>, profile: &WaveProfile<T>) -> Self {
        let grid = scenario.grid.clone();
        let mu = MacroState::global();
        let inv_sqrt_mu = grid.sample(|v| (-T::lit(0.5) * mu.ln_maxwellian_at(v)).exp());
        let jap = grid.sample(japanese);
        Self {
            mesh: scenario.mesh.clone(),
            grid,
            profile: profile.clone(),
            viscosity: scenario.viscosity,
            k: scenario.weight_k,
            m: scenario.derivative_cap,
            gamma: scenario.kernel.gamma,
            s: scenario.kernel.s,
            inv_sqrt_mu,
            jap,
        }
    }

    /// `μ^{-1/2}` at the lattice nodes.
    pub fn inv_sqrt_mu(&self) -> &[T] {
        &self.inv_sqrt_mu
    }

    /// Largest value of `μ^{-1/2}` on the velocity box.
    pub fn amplification(&self) -> f64 {
        self.inv_sqrt_mu.iter().fold(0.0f64, |m, x| m.max(x.as_f64()))
    }
}

/// Perturbation around the wave profile on every cell.
#[derive(Debug, Clone)]
pub struct PerturbationField<T: Real> {
    pub time: T,
    /// `(ρ̃, ũ₁, ũ₂, ũ₃, θ̃)` per cell.
    pub macro_tilde: Vec<[T; 5]>,
    /// Local Maxwellian moments and the profile state per cell.
    pub states: Vec<MacroState<T>>,
    pub bar: Vec<MacroState<T>>,
    /// `G = F₁ − M` with `M` the lattice Maxwellian of `F₁`'s moments, cell-major.
    pub g: Vec<T>,
    /// `g̃ = μ^{-1/2}(G − Ḡ)`.
    pub g_tilde: Vec<T>,
    /// `f̃ = μ^{-1/2}F₂` (two species).
    pub f_tilde: Option<Vec<T>>,
    /// `a = ∫√μ f̃ = ∫F₂` per cell (two species).
    pub a: Option<Vec<T>>,
    /// `E = −∇φ` per cell (two species).
    pub e: Option<Vec<[T; 2]>>,
}

/// `Ḡ` in relaxation form, `−τ P₁(v₁ M {…})`, with `M` the local Maxwellian
/// and the brace built from the profile gradients.
pub fn g_bar<T: Real>(
    basis: &ChiBasis<T>,
    grid: &VelocityGrid<T>,
    law: &ViscosityLaw<T>,
    theta_bar_x: T,
    u1_bar_x: T,
) -> Vec<T> {
    if theta_bar_x == T::zero() && u1_bar_x == T::zero() {
        return vec![T::zero(); grid.len()];
    }
    let state = basis.state();
    let src = crate::collision::olg_source(grid, state, theta_bar_x, u1_bar_x);
    let tau = law.relaxation_time(state);
    basis.project_p1(&src, grid).into_iter().map(|x| -tau * x).collect()
}

pub fn decompose<T: Real>(snap: &SolutionSnapshot<T>, ctx: &Context<T>) -> Result<PerturbationField<T>> {
    let grid = &ctx.grid;
    let nv = grid.len();
    let cells = ctx.mesh.cells();
    let t = snap.time;
    let per_cell: Vec<_> = (0..cells)
        .into_par_iter()
        .map(|c| -> Result<_> {
            let f1 = snap.f1_cell(c);
            let state = grid.moments(&f1)?;
            let m = discrete_maxwellian(&f1, grid)?;
            let g: Vec<T> = f1.iter().zip(&m).map(|(f, m)| *f - *m).collect();
            let basis = ChiBasis::new(state, grid);
            let x1 = ctx.mesh.center(c).0;
            let bar = ctx.profile.evaluate(t, x1)?.to_macro();
            let grad = ctx.profile.gradient(t, x1)?;
            let gb = g_bar(&basis, grid, &ctx.viscosity, grad[2], grad[1]);
            let gt: Vec<T> = g
                .iter()
                .zip(&gb)
                .zip(&ctx.inv_sqrt_mu)
                .map(|((a, b), w)| (*a - *b) * *w)
                .collect();
            let tilde = [
                state.rho - bar.rho,
                state.u[0] - bar.u[0],
                state.u[1] - bar.u[1],
                state.u[2] - bar.u[2],
                state.theta - bar.theta,
            ];
            let f2 = snap.f2_cell(c);
            let a = f2.as_ref().map(|f| grid.integrate(f));
            let ft = f2.map(|f| f.iter().zip(&ctx.inv_sqrt_mu).map(|(x, w)| *x * *w).collect::<Vec<T>>());
            Ok((tilde, state, bar, g, gt, ft, a))
        })
        .collect::<Result<_>>()?;
    let two = snap.species.len() > 1;
    let mut out = PerturbationField {
        time: t,
        macro_tilde: Vec::with_capacity(cells),
        states: Vec::with_capacity(cells),
        bar: Vec::with_capacity(cells),
        g: Vec::with_capacity(cells * nv),
        g_tilde: Vec::with_capacity(cells * nv),
        f_tilde: two.then(|| Vec::with_capacity(cells * nv)),
        a: two.then(|| Vec::with_capacity(cells)),
        e: snap.field.as_ref().map(|f| f.e.clone()),
    };
    for (tilde, state, bar, g, gt, ft, a) in per_cell {
        out.macro_tilde.push(tilde);
        out.states.push(state);
        out.bar.push(bar);
        out.g.extend(g);
        out.g_tilde.extend(gt);
        if let (Some(dst), Some(ft)) = (out.f_tilde.as_mut(), ft) {
            dst.extend(ft);
        }
        if let (Some(dst), Some(a)) = (out.a.as_mut(), a) {
            dst.push(a);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub k: f64,
    pub m: usize,
    pub ek: f64,
    pub macro_part: f64,
    pub g_part: f64,
    pub f_part: f64,
    pub field_part: f64,
    pub dk: f64,
    /// Largest `μ^{-1/2}` on the velocity box.
    pub amplification: f64,
    /// Width of the time-difference stencil used (zero: spatial derivatives only).
    pub t_stencil: usize,
}

/// Spatial multi-indices `(α₁, α₂)` with `|α| ≤ m`; `α₂ = 0` on a line.
pub fn multi_indices(m: usize, duct: bool) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for order in 0..=m {
        for a2 in 0..=order {
            if a2 > 0 && !duct {
                continue;
            }
            out.push([order - a2, a2]);
        }
    }
    out
}

/// Centered difference of a cell-major field with `width` values per cell along `axis`.
pub fn differentiate<T: Real>(u: &[T], width: usize, mesh: &Mesh<T>, axis: usize) -> Vec<T> {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let (n, h) = if axis == 0 { (nx, mesh.hx()) } else { (ny, mesh.hy()) };
    let mut out = vec![T::zero(); u.len()];
    if n < 2 {
        return out;
    }
    out.par_chunks_mut(width).enumerate().for_each(|(c, cell)| {
        let (i, j) = mesh.unindex(c);
        let pos = if axis == 0 { i } else { j };
        let at = |p: usize| if axis == 0 { mesh.index(p, j) } else { mesh.index(i, p) };
        let (lo, hi, span) = if pos == 0 {
            (at(0), at(1), h)
        } else if pos == n - 1 {
            (at(n - 2), at(n - 1), h)
        } else {
            (at(pos - 1), at(pos + 1), T::lit(2.0) * h)
        };
        for (v, o) in cell.iter_mut().enumerate() {
            *o = (u[hi * width + v] - u[lo * width + v]) / span;
        }
    });
    out
}

fn derivative<T: Real>(u: &[T], width: usize, mesh: &Mesh<T>, alpha: [usize; 2]) -> Vec<T> {
    let mut out = u.to_vec();
    for (axis, count) in alpha.iter().enumerate() {
        for _ in 0..*count {
            out = differentiate(&out, width, mesh, axis);
        }
    }
    out
}

/// `Σ_x Σ_v (weight(v) u)²` times the cell and velocity measures.
fn weighted_norm_sq<T: Real>(u: &[T], weight: &[T], grid: &VelocityGrid<T>, mesh: &Mesh<T>) -> f64 {
    let nv = grid.len();
    let s: f64 = u
        .par_chunks(nv)
        .map(|cell| {
            cell.iter()
                .zip(weight)
                .map(|(x, w)| (*x * *w).as_f64().powi(2))
                .sum::<f64>()
        })
        .sum();
    s * grid.weight().as_f64() * mesh.cell_measure().as_f64()
}

/// Energy functional `E_k` and the dissipation surrogate `D_k` with the
/// weighted-L² part of `L²_D` in place of the full seminorm.
pub fn energy_ek<T: Real>(pf: &PerturbationField<T>, ctx: &Context<T>) -> EnergyReport {
    let mesh = &ctx.mesh;
    let grid = &ctx.grid;
    let nv = grid.len();
    let flat: Vec<T> = pf.macro_tilde.iter().flat_map(|x| *x).collect();
    let e_flat: Option<Vec<T>> = pf.e.as_ref().map(|e| e.iter().flat_map(|x| *x).collect());
    let d_exp = (ctx.gamma + T::lit(2.0) * ctx.s) / T::lit(2.0);
    let (mut macro_part, mut g_part, mut f_part, mut field_part) = (0.0, 0.0, 0.0, 0.0);
    let mut dk = 0.0;
    for alpha in multi_indices(ctx.m, mesh.is_duct()) {
        let order = alpha[0] + alpha[1];
        let wexp = ctx.k - T::from_usize_lossy(order) + T::lit(2.0);
        let w: Vec<T> = ctx.jap.iter().map(|j| j.powf(wexp)).collect();
        let wd: Vec<T> = ctx.jap.iter().zip(&w).map(|(j, x)| *x * j.powf(d_exp)).collect();
        let mac = derivative(&flat, 5, mesh, alpha);
        let mac_sq: f64 = mac.iter().map(|x| x.as_f64().powi(2)).sum::<f64>() * mesh.cell_measure().as_f64();
        macro_part += mac_sq;
        if order >= 1 {
            dk += mac_sq;
        }
        let g = derivative(&pf.g_tilde, nv, mesh, alpha);
        g_part += weighted_norm_sq(&g, &w, grid, mesh);
        dk += weighted_norm_sq(&g, &wd, grid, mesh);
        if let Some(ft) = &pf.f_tilde {
            let f = derivative(ft, nv, mesh, alpha);
            f_part += weighted_norm_sq(&f, &w, grid, mesh);
            dk += weighted_norm_sq(&f, &wd, grid, mesh);
        }
        if let Some(e) = &e_flat {
            let d = derivative(e, 2, mesh, alpha);
            let sq = d.iter().map(|x| x.as_f64().powi(2)).sum::<f64>() * mesh.cell_measure().as_f64();
            field_part += sq;
            dk += sq;
        }
    }
    EnergyReport {
        k: ctx.k.as_f64(),
        m: ctx.m,
        ek: macro_part + g_part + f_part + field_part,
        macro_part,
        g_part,
        f_part,
        field_part,
        dk,
        amplification: ctx.amplification(),
        t_stencil: 0,
    }
}

/// Work estimate of the pair sum in [`l2d_seminorm`].
pub fn l2d_work<T: Real>(grid: &VelocityGrid<T>) -> f64 {
    (grid.len() as f64).powi(2)
}

/// `|f|²_{L²_D}`: weighted L² part plus the pair sum of
/// `⟨v⟩^{γ+2s+1} (f' − f)² / d(v,v')^{3+2s}` over `0 < d ≤ 1`, with
/// `d(v,v') = {|v−v'|² + ¼(|v|²−|v'|²)²}^{1/2}`.
pub fn l2d_seminorm<T: Real>(f: &[T], grid: &VelocityGrid<T>, gamma: T, s: T, budget: f64) -> Result<T> {
    let estimate = l2d_work(grid);
    if estimate > budget {
        return Err(Error::Cost { estimate, budget });
    }
    let nodes = grid.nodes();
    let wt = grid.weight();
    let half_exp = (gamma + T::lit(2.0) * s) / T::lit(2.0);
    let weighted = nodes
        .iter()
        .zip(f)
        .map(|(v, x)| japanese(*v).powf(T::lit(2.0) * half_exp) * *x * *x)
        .sum::<T>()
        * wt;
    let outer = gamma + T::lit(2.0) * s + T::one();
    let power = (T::lit(3.0) + T::lit(2.0) * s) / T::lit(2.0);
    let pair: T = (0..nodes.len())
        .into_par_iter()
        .map(|a| {
            let v = nodes[a];
            let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let mut acc = T::zero();
            for (b, w) in nodes.iter().enumerate() {
                if a == b {
                    continue;
                }
                let dv = [v[0] - w[0], v[1] - w[1], v[2] - w[2]];
                let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
                let d2 = dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2] + T::lit(0.25) * (v2 - w2).powi(2);
                if d2 > T::one() {
                    continue;
                }
                acc = acc + (f[b] - f[a]).powi(2) / d2.powf(power);
            }
            japanese(v).powf(outer) * acc
        })
        .reduce(T::zero, |a, b| a + b);
    Ok(weighted + pair * wt * wt)
}

/// `sup_x ‖⟨v⟩^k μ^{-1/2}(F₁ − M_r)‖_{L²_v}` with `M_r` the Maxwellian of the
/// ideal rarefaction at `x₁/(1+t)`; with two species the `F₂` part
/// `‖⟨v⟩^k μ^{-1/2} F₂‖` enters the same supremum.
pub fn convergence_metric<T: Real>(snap: &SolutionSnapshot<T>, ctx: &Context<T>) -> Result<f64> {
    let grid = &ctx.grid;
    let wt = grid.weight().as_f64();
    let weight: Vec<f64> = ctx
        .jap
        .iter()
        .zip(&ctx.inv_sqrt_mu)
        .map(|(j, m)| (j.powf(ctx.k) * *m).as_f64())
        .collect();
    let norm = |f: &[T]| -> f64 {
        (f.iter().zip(&weight).map(|(x, w)| (x.as_f64() * w).powi(2)).sum::<f64>() * wt).sqrt()
    };
    let per_cell: Vec<f64> = (0..ctx.mesh.cells())
        .into_par_iter()
        .map(|c| -> Result<f64> {
            let x1 = ctx.mesh.center(c).0;
            let target = lattice_maxwellian(&ctx.profile.fan_state(snap.time, x1)?.to_macro(), grid)?;
            let f1 = snap.f1_cell(c);
            let diff: Vec<T> = f1.iter().zip(&target).map(|(a, b)| *a - *b).collect();
            let mut worst = norm(&diff);
            if let Some(f2) = snap.f2_cell(c) {
                worst = worst.max(norm(&f2));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(per_cell.into_iter().fold(0.0, f64::max))
}

/// One line of the diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    /// `H = ∫∫ F ln F`, summed over species.
    pub h: f64,
    /// `∫ η(ρ,u,θ; ρ̄,ū,θ̄) dx` around the wave profile.
    pub eta_integral: f64,
    /// `‖(ρ̃, ũ, θ̃)‖²_{L²_x}`.
    pub macro_sq: f64,
    pub ek: f64,
    pub ek_macro: f64,
    pub ek_g: f64,
    pub ek_f: f64,
    pub ek_field: f64,
    pub dk: f64,
    pub conv_metric: f64,
    /// `‖∇φ‖_{L²_x}`.
    pub grad_phi: f64,
    /// `‖a‖_{L²_x}` with `a = ∫F₂`.
    pub charge_norm: f64,
    pub clipped: usize,
    pub t_stencil: usize,
}

impl DiagnosticsRow {
    pub const HEADER: [&'static str; 16] = [
        "t",
        "mass",
        "H",
        "eta_integral",
        "macro_sq",
        "Ek",
        "Ek_macro",
        "Ek_g",
        "Ek_f",
        "Ek_field",
        "Dk",
        "conv_metric",
        "grad_phi",
        "charge_norm",
        "clipped",
        "t_stencil",
    ];

    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.mass,
            self.h,
            self.eta_integral,
            self.macro_sq,
            self.ek,
            self.ek_macro,
            self.ek_g,
            self.ek_f,
            self.ek_field,
            self.dk,
            self.conv_metric,
            self.grad_phi,
            self.charge_norm,
            self.clipped as f64,
            self.t_stencil as f64,
        ]
    }
}

/// Total mass `Σ_species ∫∫ F`.
pub fn total_mass<T: Real>(snap: &SolutionSnapshot<T>, grid: &VelocityGrid<T>, mesh: &Mesh<T>) -> f64 {
    let s: f64 = snap.species.iter().map(|f| f.iter().map(|x| x.as_f64()).sum::<f64>()).sum();
    s * grid.weight().as_f64() * mesh.cell_measure().as_f64()
}

/// `H = Σ_species ∫∫ F ln F` with `0 ln 0 = 0`.
pub fn h_functional<T: Real>(snap: &SolutionSnapshot<T>, grid: &VelocityGrid<T>, mesh: &Mesh<T>) -> f64 {
    let s: f64 = snap
        .species
        .iter()
        .map(|f| {
            f.par_iter()
                .map(|x| {
                    let x = x.as_f64();
                    if x > 0.0 {
                        x * x.ln()
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .sum();
    s * grid.weight().as_f64() * mesh.cell_measure().as_f64()
}

/// `∫ η(state, bar) dx` over the mesh.
pub fn eta_integral<T: Real>(pf: &PerturbationField<T>, mesh: &Mesh<T>) -> f64 {
    pf.states
        .iter()
        .zip(&pf.bar)
        .map(|(s, b)| entropy_eta(s, b).as_f64())
        .sum::<f64>()
        * mesh.cell_measure().as_f64()
}

/// Full diagnostics of one snapshot. Failures of the decomposition are
/// reported as NaN entries so that a run can still be inspected.
pub fn row<T: Real>(snap: &SolutionSnapshot<T>, ctx: &Context<T>) -> DiagnosticsRow {
    let mesh = &ctx.mesh;
    let grid = &ctx.grid;
    let pf = decompose(snap, ctx);
    let (energy, eta, macro_sq, charge) = match &pf {
        Ok(pf) => {
            let macro_sq = pf
                .macro_tilde
                .iter()
                .map(|x| x.iter().map(|y| y.as_f64().powi(2)).sum::<f64>())
                .sum::<f64>()
                * mesh.cell_measure().as_f64();
            let charge = pf
                .a
                .as_ref()
                .map(|a| (a.iter().map(|x| x.as_f64().powi(2)).sum::<f64>() * mesh.cell_measure().as_f64()).sqrt())
                .unwrap_or(0.0);
            (Some(energy_ek(pf, ctx)), eta_integral(pf, mesh), macro_sq, charge)
        }
        Err(_) => (None, f64::NAN, f64::NAN, f64::NAN),
    };
    let nan = f64::NAN;
    DiagnosticsRow {
        t: snap.time.as_f64(),
        mass: total_mass(snap, grid, mesh),
        h: h_functional(snap, grid, mesh),
        eta_integral: eta,
        macro_sq,
        ek: energy.map_or(nan, |e| e.ek),
        ek_macro: energy.map_or(nan, |e| e.macro_part),
        ek_g: energy.map_or(nan, |e| e.g_part),
        ek_f: energy.map_or(nan, |e| e.f_part),
        ek_field: energy.map_or(nan, |e| e.field_part),
        dk: energy.map_or(nan, |e| e.dk),
        conv_metric: convergence_metric(snap, ctx).unwrap_or(nan),
        grad_phi: snap
            .field
            .as_ref()
            .map_or(0.0, |f| f.gradient_norm_sq(mesh).as_f64().sqrt()),
        charge_norm: charge,
        clipped: snap.clipped,
        t_stencil: energy.map_or(0, |e| e.t_stencil),
    }
}

/// Log-log slopes of `conv_metric` and `Ek` against `1 + t` over the last
/// decade of output times.
pub fn fitted_slopes(rows: &[DiagnosticsRow]) -> (f64, f64) {
    let Some(last) = rows.last() else {
        return (f64::NAN, f64::NAN);
    };
    let cutoff = (1.0 + last.t) / 10.0;
    let tail: Vec<&DiagnosticsRow> = rows.iter().filter(|r| r.t > 0.0 && 1.0 + r.t >= cutoff).collect();
    let fit = |f: &dyn Fn(&DiagnosticsRow) -> f64| -> f64 {
        let pts: Vec<(f64, f64)> = tail
            .iter()
            .filter(|r| f(r) > 0.0 && f(r).is_finite())
            .map(|r| ((1.0 + r.t).ln(), f(r).ln()))
            .collect();
        linear_slope(&pts)
    };
    (fit(&|r| r.conv_metric), fit(&|r| r.ek))
}
