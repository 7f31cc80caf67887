//! Linearized collision operators and the microscopic inverse of `L_M`.
//!
//! `L_M g = 2Q(M,g) + 2Q(g,M)` is taken relative to `M` itself, so with
//! `h = g / M` every collision contributes
//! `W M_a M_b u(h)` with `u(h) = (1−r)(h_λ+h_μ) + r(h_{λ+s}+h_{μ−s}) − h_a − h_b`.
//! The operator vanishes exactly on `M · span{1, v, |v|²}` and its symmetric
//! form `S = M^{-1/2} L_M M^{1/2}` is a symmetric negative semidefinite matrix.

use rayon::prelude::*;

use super::operator::CollisionOperator;
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, dense_matvec, CgOutcome, CgSettings};
use crate::num::Real;
use crate::velocity::{ChiBasis, MacroState, VelocityGrid};

/// Largest lattice for which the symmetric matrix is stored densely.
pub const DENSE_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assembly {
    Dense,
    MatrixFree,
}

#[derive(Debug, Clone)]
pub struct LinearizedOperator<'a, T: Real> {
    op: &'a CollisionOperator<T>,
    state: MacroState<T>,
    basis: ChiBasis<T>,
    sqrt_m: Vec<T>,
    dense: Option<Vec<T>>,
    /// Euclidean orthonormal basis of `ker S`.
    null: Vec<Vec<T>>,
    /// Diagonal of `−S`, or the collision frequency when matrix-free.
    diag: Vec<T>,
    pub settings: CgSettings,
}

impl<'a, T: Real> LinearizedOperator<'a, T> {
    /// Dense assembly up to [`DENSE_LIMIT`] points per axis, matrix-free above.
    pub fn new(op: &'a CollisionOperator<T>, state: MacroState<T>) -> Result<Self> {
        let mode = if op.grid().points_per_axis() <= DENSE_LIMIT {
            Assembly::Dense
        } else {
            Assembly::MatrixFree
        };
        Self::with_assembly(op, state, mode)
    }

    pub fn with_assembly(op: &'a CollisionOperator<T>, state: MacroState<T>, mode: Assembly) -> Result<Self> {
        state.validate()?;
        let grid = op.grid();
        if mode == Assembly::Dense && grid.points_per_axis() > DENSE_LIMIT {
            return Err(Error::config(format!(
                "dense linearized operator limited to {DENSE_LIMIT} points per axis"
            )));
        }
        let basis = ChiBasis::new(state, grid);
        let m = basis.maxwellian().to_vec();
        let sqrt_m: Vec<T> = m.iter().map(|x| x.sqrt()).collect();
        let null = null_basis(grid, &sqrt_m);
        let (dense, diag) = match mode {
            Assembly::Dense => {
                let s = assemble(op, &m, &sqrt_m);
                let len = grid.len();
                let diag = (0..len).map(|i| -s[i * len + i]).collect();
                (Some(s), diag)
            }
            Assembly::MatrixFree => {
                let ones = vec![T::one(); grid.len()];
                (None, op.loss(&m, &ones))
            }
        };
        Ok(Self {
            op,
            state,
            basis,
            sqrt_m,
            dense,
            null,
            diag,
            settings: CgSettings::default(),
        })
    }

    pub fn state(&self) -> &MacroState<T> {
        &self.state
    }

    pub fn grid(&self) -> &VelocityGrid<T> {
        self.op.grid()
    }

    pub fn basis(&self) -> &ChiBasis<T> {
        &self.basis
    }

    pub fn collision(&self) -> &CollisionOperator<T> {
        self.op
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// Row-major symmetric matrix `M^{-1/2} L_M M^{1/2}` if assembled.
    pub fn symmetric_matrix(&self) -> Option<&[T]> {
        self.dense.as_deref()
    }

    /// `S y = M^{-1/2} L_M (M^{1/2} y)`.
    pub fn apply_symmetric(&self, y: &[T]) -> Vec<T> {
        match &self.dense {
            Some(s) => dense_matvec(s, y),
            None => {
                let g: Vec<T> = y.iter().zip(&self.sqrt_m).map(|(a, b)| *a * *b).collect();
                self.apply_free(&g).iter().zip(&self.sqrt_m).map(|(a, b)| *a / *b).collect()
            }
        }
    }

    fn apply_free(&self, g: &[T]) -> Vec<T> {
        let m = self.basis.maxwellian();
        let two = T::lit(2.0);
        let a = self.op.apply(m, g, &self.state);
        let b = self.op.apply(g, m, &self.state);
        a.iter().zip(&b).map(|(x, y)| two * (*x + *y)).collect()
    }

    /// `L_M g`.
    pub fn apply(&self, g: &[T]) -> Vec<T> {
        match &self.dense {
            Some(_) => {
                let y: Vec<T> = g.iter().zip(&self.sqrt_m).map(|(a, b)| *a / *b).collect();
                self.apply_symmetric(&y).iter().zip(&self.sqrt_m).map(|(a, b)| *a * *b).collect()
            }
            None => self.apply_free(g),
        }
    }

    /// Largest eigenvalue magnitude of `S` by power iteration.
    pub fn norm_estimate(&self) -> T {
        let n = self.grid().len();
        let mut x: Vec<T> = (0..n).map(|i| T::lit(1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0)).collect();
        let mut lambda = 0.0;
        for _ in 0..40 {
            let y = self.apply_symmetric(&x);
            let norm = y.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
            let xn = x.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                return T::zero();
            }
            lambda = norm / xn;
            x = y.iter().map(|v| *v / T::lit(norm)).collect();
        }
        T::lit(lambda)
    }

    /// `g` with `P₀g = 0` and `L_M g = P₁h`, with solver diagnostics.
    pub fn pinv_with_report(&self, h: &[T]) -> Result<CgOutcome<T>> {
        let grid = self.grid();
        let p1 = self.basis.project_p1(h, grid);
        let mut b: Vec<T> = p1.iter().zip(&self.sqrt_m).map(|(a, s)| -*a / *s).collect();
        remove_components(&mut b, &self.null);
        let shift = T::lit(self.diag.iter().map(|d| d.as_f64()).sum::<f64>() / self.diag.len() as f64);
        let mut precond = self.diag.clone();
        for e in &self.null {
            for (p, x) in precond.iter_mut().zip(e) {
                *p = *p + shift * *x * *x;
            }
        }
        let apply = |y: &[T]| -> Vec<T> {
            let mut out: Vec<T> = self.apply_symmetric(y).into_iter().map(|v| -v).collect();
            for e in &self.null {
                let c = shift * e.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
                for (o, x) in out.iter_mut().zip(e) {
                    *o = *o + c * *x;
                }
            }
            out
        };
        let mut outcome = conjugate_gradient(apply, &b, &precond, self.settings)?;
        if outcome.condition > self.settings.condition_limit {
            return Err(Error::IllConditioned {
                condition: outcome.condition,
                detail: "microscopic inversion of the linearized operator".into(),
            });
        }
        let g: Vec<T> = outcome
            .solution
            .iter()
            .zip(&self.sqrt_m)
            .map(|(y, s)| *y * *s)
            .collect();
        outcome.solution = self.basis.project_p1(&g, grid);
        Ok(outcome)
    }

    /// `L_M^{-1} P₁ h` on the microscopic subspace.
    pub fn pinv(&self, h: &[T]) -> Result<Vec<T>> {
        Ok(self.pinv_with_report(h)?.solution)
    }
}

fn remove_components<T: Real>(x: &mut [T], basis: &[Vec<T>]) {
    for e in basis {
        let c = e.iter().zip(x.iter()).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
        for (o, v) in x.iter_mut().zip(e) {
            *o = *o - c * *v;
        }
    }
}

fn null_basis<T: Real>(grid: &VelocityGrid<T>, sqrt_m: &[T]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    for k in 0..5 {
        let mut e: Vec<T> = grid
            .nodes()
            .iter()
            .zip(sqrt_m)
            .map(|(v, s)| {
                let p = match k {
                    0 => T::one(),
                    1..=3 => v[k - 1],
                    _ => v[0] * v[0] + v[1] * v[1] + v[2] * v[2],
                };
                p * *s
            })
            .collect();
        for _ in 0..2 {
            remove_components(&mut e, &out);
        }
        let norm = e.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt();
        out.push(e.into_iter().map(|x| x / norm).collect());
    }
    out
}

/// Row-block assembly of `S_ij = −Σ W M_a M_b c_p c_q / (√M_i √M_j)` where `p`
/// runs over the slots `{a, λ, λ+s}` occupied by `i` and `q` over all six nodes.
fn assemble<T: Real>(op: &CollisionOperator<T>, m: &[T], sqrt_m: &[T]) -> Vec<T> {
    let n = op.grid().points_per_axis();
    let len = n * n * n;
    let isq: Vec<T> = sqrt_m.iter().map(|s| T::one() / *s).collect();
    let mut mat = vec![T::zero(); len * len];
    let events = op.events();
    mat.par_chunks_mut(n * len).enumerate().for_each(|(line, block)| {
        let i0 = (line / n) as i64;
        let i1 = (line % n) as i64;
        for ev in events {
            let r = ev.r;
            let r1 = T::one() - r;
            let coef = [-T::one(), -T::one(), r1, r, r1, r];
            let (lo0, hi0) = ev.a_range(0, n);
            let (lo1, hi1) = ev.a_range(1, n);
            let (lo2, hi2) = ev.a_range(2, n);
            if lo0 > hi0 || lo1 > hi1 || lo2 > hi2 {
                continue;
            }
            let off = ev.offsets(n);
            let os = [ev.o[0] + ev.s[0], ev.o[1] + ev.s[1], ev.o[2] + ev.s[2]];
            for (delta, cp) in [([0i16; 3], -T::one()), (ev.o, r1), (os, r)] {
                if cp == T::zero() {
                    continue;
                }
                let d = delta.map(|x| x as i64);
                if i0 < lo0 + d[0] || i0 > hi0 + d[0] || i1 < lo1 + d[1] || i1 > hi1 + d[1] {
                    continue;
                }
                let a01 = ((i0 - d[0]) as usize * n + (i1 - d[1]) as usize) * n;
                for k in (lo2 + d[2])..=(hi2 + d[2]) {
                    let i = (line * n) + k as usize;
                    let a = a01 + (k - d[2]) as usize;
                    let ai = a as isize;
                    let nodes = [
                        a,
                        (ai + off[0]) as usize,
                        (ai + off[1]) as usize,
                        (ai + off[2]) as usize,
                        (ai + off[3]) as usize,
                        (ai + off[4]) as usize,
                    ];
                    let kk = -ev.weight * m[a] * m[nodes[1]] * cp * isq[i];
                    let row = &mut block[k as usize * len..(k as usize + 1) * len];
                    // slot order: a, b, λ, λ+s, μ, μ−s
                    for q in 0..6 {
                        let j = nodes[q];
                        row[j] = row[j] + kk * coef[q] * isq[j];
                    }
                }
            }
        }
    });
    mat
}

/// Operators linearized around the global Maxwellian `μ`, in the `μ^{1/2}`-weighted form.
#[derive(Debug, Clone)]
pub struct GlobalOperators<'a, T: Real> {
    op: &'a CollisionOperator<T>,
    mu: MacroState<T>,
    m: Vec<T>,
    sqrt_m: Vec<T>,
}

impl<'a, T: Real> GlobalOperators<'a, T> {
    pub fn new(op: &'a CollisionOperator<T>) -> Self {
        let mu = MacroState::global();
        let m = op.grid().maxwellian(&mu);
        let sqrt_m = m.iter().map(|x| x.sqrt()).collect();
        Self { op, mu, m, sqrt_m }
    }

    pub fn sqrt_mu(&self) -> &[T] {
        &self.sqrt_m
    }

    fn lift(&self, f: &[T]) -> Vec<T> {
        f.iter().zip(&self.sqrt_m).map(|(a, b)| *a * *b).collect()
    }

    fn lower(&self, q: Vec<T>) -> Vec<T> {
        let two = T::lit(2.0);
        q.iter().zip(&self.sqrt_m).map(|(a, b)| two * *a / *b).collect()
    }

    /// `𝓛f = 2μ^{-1/2}[Q(μ, μ^{1/2}f) + Q(μ^{1/2}f, μ)]`.
    pub fn script_l(&self, f: &[T]) -> Vec<T> {
        let g = self.lift(f);
        let a = self.op.apply(&self.m, &g, &self.mu);
        let b = self.op.apply(&g, &self.m, &self.mu);
        self.lower(a.iter().zip(&b).map(|(x, y)| *x + *y).collect())
    }

    /// `𝓛₂f = 2μ^{-1/2} Q(μ, μ^{1/2}f)`.
    pub fn script_l2(&self, f: &[T]) -> Vec<T> {
        let g = self.lift(f);
        self.lower(self.op.apply(&self.m, &g, &self.mu))
    }

    /// `Γ(f, g) = 2μ^{-1/2} Q(μ^{1/2}f, μ^{1/2}g)`.
    pub fn gamma(&self, f: &[T], g: &[T]) -> Vec<T> {
        let a = self.lift(f);
        let b = self.lift(g);
        self.lower(self.op.apply(&a, &b, &self.mu))
    }

    /// `Γ(f, f)` through the symmetric pair sweep, independent of [`Self::gamma`].
    pub fn gamma_diagonal(&self, f: &[T]) -> Vec<T> {
        let a = self.lift(f);
        self.lower(self.op.apply_symmetric(&a, &self.mu))
    }
}
