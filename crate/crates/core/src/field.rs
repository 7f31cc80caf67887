//! Electrostatic potential and the velocity-space force term of the two-species system.

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, CgSettings};
use crate::mesh::Mesh;
use crate::num::Real;
use crate::velocity::VelocityGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonBoundary {
    /// Zero normal derivative at the `x₁` ends and at duct walls.
    Neumann,
    /// Periodic in `x₁` (duct walls stay Neumann).
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState<T: Real> {
    /// Potential at cell centers, zero mean.
    pub phi: Vec<T>,
    /// `E = −∇φ` at cell centers as `(E₁, E₂)`.
    pub e: Vec<[T; 2]>,
    /// Mean of the source before the neutral gauge was applied.
    pub neutrality_defect: T,
}

impl<T: Real> FieldState<T> {
    pub fn zero(cells: usize) -> Self {
        Self {
            phi: vec![T::zero(); cells],
            e: vec![[T::zero(); 2]; cells],
            neutrality_defect: T::zero(),
        }
    }

    /// `‖∇φ‖²_{L²_x}`.
    pub fn gradient_norm_sq(&self, mesh: &Mesh<T>) -> T {
        self.e.iter().map(|e| e[0] * e[0] + e[1] * e[1]).sum::<T>() * mesh.cell_measure()
    }

    pub fn max_field(&self) -> T {
        self.e.iter().fold(T::zero(), |m, e| m.max(e[0].abs()).max(e[1].abs()))
    }
}

/// Second-order solve of `−Δφ = source` after subtracting the mean source.
///
/// On a line the discrete problem is integrated exactly through face
/// gradients; the duct uses conjugate gradients on the five-point Laplacian.
pub fn poisson_solve<T: Real>(source: &[T], mesh: &Mesh<T>, boundary: PoissonBoundary) -> Result<FieldState<T>> {
    if source.len() != mesh.cells() {
        return Err(Error::config(format!(
            "source has {} cells, mesh has {}",
            source.len(),
            mesh.cells()
        )));
    }
    let n = T::from_usize_lossy(source.len());
    let mean = source.iter().copied().sum::<T>() / n;
    let s: Vec<T> = source.iter().map(|x| *x - mean).collect();
    let mut phi = if mesh.is_duct() {
        solve_duct(&s, mesh, boundary)?
    } else {
        solve_line(&s, mesh.hx(), boundary)
    };
    let pm = phi.iter().copied().sum::<T>() / n;
    for p in phi.iter_mut() {
        *p = *p - pm;
    }
    let e = gradient(&phi, mesh, boundary);
    Ok(FieldState {
        phi,
        e,
        neutrality_defect: mean,
    })
}

fn solve_line<T: Real>(s: &[T], h: T, boundary: PoissonBoundary) -> Vec<T> {
    // face gradients d_{i+1/2} = (φ_{i+1} − φ_i)/h satisfy d_{i+1/2} − d_{i−1/2} = −h s_i
    let n = s.len();
    let mut d = Vec::with_capacity(n);
    let mut acc = T::zero();
    for &si in s {
        acc = acc - h * si;
        d.push(acc);
    }
    match boundary {
        PoissonBoundary::Neumann => {
            d[n - 1] = T::zero();
        }
        PoissonBoundary::Periodic => {
            let m = d.iter().copied().sum::<T>() / T::from_usize_lossy(n);
            for x in d.iter_mut() {
                *x = *x - m;
            }
        }
    }
    let mut phi = Vec::with_capacity(n);
    let mut p = T::zero();
    phi.push(p);
    for k in 0..n - 1 {
        p = p + h * d[k];
        phi.push(p);
    }
    phi
}

fn neighbor<T: Real>(mesh: &Mesh<T>, i: isize, j: isize, boundary: PoissonBoundary) -> usize {
    let nx = mesh.nx() as isize;
    let ny = mesh.ny() as isize;
    let i = match boundary {
        PoissonBoundary::Periodic => i.rem_euclid(nx),
        PoissonBoundary::Neumann => i.clamp(0, nx - 1),
    };
    mesh.index(i as usize, j.clamp(0, ny - 1) as usize)
}

fn solve_duct<T: Real>(s: &[T], mesh: &Mesh<T>, boundary: PoissonBoundary) -> Result<Vec<T>> {
    let (hx2, hy2) = (mesh.hx() * mesh.hx(), mesh.hy() * mesh.hy());
    let cells = mesh.cells();
    let nf = T::from_usize_lossy(cells);
    // −Δ_h plus the projector onto constants, which is SPD and leaves zero-mean data invariant
    let apply = |x: &[T]| -> Vec<T> {
        let mean = x.iter().copied().sum::<T>() / nf;
        (0..cells)
            .map(|c| {
                let (i, j) = mesh.unindex(c);
                let (i, j) = (i as isize, j as isize);
                let xe = x[neighbor(mesh, i + 1, j, boundary)];
                let xw = x[neighbor(mesh, i - 1, j, boundary)];
                let xn = x[neighbor(mesh, i, j + 1, boundary)];
                let xs = x[neighbor(mesh, i, j - 1, boundary)];
                (T::lit(2.0) * x[c] - xe - xw) / hx2 + (T::lit(2.0) * x[c] - xn - xs) / hy2 + mean
            })
            .collect()
    };
    let diag = vec![T::lit(2.0) / hx2 + T::lit(2.0) / hy2; cells];
    let settings = CgSettings {
        tolerance: 1e-12,
        max_iterations: 20 * cells,
        condition_limit: f64::INFINITY,
    };
    Ok(conjugate_gradient(apply, s, &diag, settings)?.solution)
}

fn gradient<T: Real>(phi: &[T], mesh: &Mesh<T>, boundary: PoissonBoundary) -> Vec<[T; 2]> {
    let two = T::lit(2.0);
    (0..mesh.cells())
        .map(|c| {
            let (i, j) = mesh.unindex(c);
            let (i, j) = (i as isize, j as isize);
            let e1 = -(phi[neighbor(mesh, i + 1, j, boundary)] - phi[neighbor(mesh, i - 1, j, boundary)])
                / (two * mesh.hx());
            let e2 = if mesh.is_duct() {
                -(phi[neighbor(mesh, i, j + 1, boundary)] - phi[neighbor(mesh, i, j - 1, boundary)]) / (two * mesh.hy())
            } else {
                T::zero()
            };
            [e1, e2]
        })
        .collect()
}

/// `−q E·∇_v F` for one cell by conservative first-order upwinding in `v`;
/// the box faces carry no flux, so the result integrates to zero.
pub fn vlasov_force<T: Real>(f: &[T], e: [T; 2], grid: &VelocityGrid<T>, charge: T) -> Vec<T> {
    let mut out = vec![T::zero(); f.len()];
    let n = grid.points_per_axis();
    let h = grid.spacing();
    for (d, &ed) in e.iter().enumerate() {
        let a = charge * ed;
        if a == T::zero() {
            continue;
        }
        let stride = [n * n, n, 1][d];
        for idx in 0..f.len() {
            let k = grid.unindex(idx)[d];
            // flux through the upper face of node idx
            if k + 1 < n {
                let up = idx + stride;
                let flux = if a > T::zero() { a * f[idx] } else { a * f[up] };
                out[idx] = out[idx] - flux / h;
                out[up] = out[up] + flux / h;
            }
        }
    }
    out
}

/// Largest `|qE| dt / h_v` over the mesh; upwinding in `v` stays positive when this is at most 1.
pub fn vlasov_courant<T: Real>(field: &FieldState<T>, grid: &VelocityGrid<T>, charge: T, dt: T) -> T {
    (field.max_field() * charge.abs()) * dt / grid.spacing()
}

/// Rejects a time step whose velocity-space Courant number exceeds one.
pub fn check_vlasov_cfl<T: Real>(field: &FieldState<T>, grid: &VelocityGrid<T>, dt: T) -> Result<()> {
    let c = vlasov_courant(field, grid, T::one(), dt);
    if c > T::one() {
        return Err(Error::config(format!("velocity-space Courant number {c} exceeds 1")));
    }
    Ok(())
}

/// `L²` error of the periodic solve of `−φ'' = 2 sin(πx/l)` on `[0, 2l)` with `nx`
/// cells against `φ = (2l²/π²) sin(πx/l)`.
pub fn manufactured_poisson_error<T: Real>(nx: usize, l: T) -> Result<T> {
    let mesh = Mesh::line(T::zero(), T::lit(2.0) * l, nx)?;
    let k = T::PI() / l;
    let two = T::lit(2.0);
    let src: Vec<T> = (0..nx).map(|i| two * (k * mesh.x1(i)).sin()).collect();
    let sol = poisson_solve(&src, &mesh, PoissonBoundary::Periodic)?;
    let amp = two * l * l / (T::PI() * T::PI());
    let err: Vec<T> = (0..nx).map(|i| sol.phi[i] - amp * (k * mesh.x1(i)).sin()).collect();
    Ok(mesh.norm_sq(&err).sqrt())
}
