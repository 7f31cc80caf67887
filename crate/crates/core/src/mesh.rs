//! Cell-centered spatial meshes: a truncated `x₁` line and a 2-D `(x₁, x₂)` duct slab.

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry<T: Real> {
    /// Transverse directions collapsed; no `x₂` resolution.
    Line,
    /// Specular walls at `x₂ = ±half_width`.
    Duct { half_width: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T: Real> {
    x1_min: T,
    x1_max: T,
    nx: usize,
    ny: usize,
    geometry: Geometry<T>,
}

impl<T: Real> Mesh<T> {
    pub fn line(x1_min: T, x1_max: T, nx: usize) -> Result<Self> {
        Self::new(x1_min, x1_max, nx, 1, Geometry::Line)
    }

    pub fn duct(x1_min: T, x1_max: T, nx: usize, half_width: T, ny: usize) -> Result<Self> {
        if !(half_width > T::zero()) {
            return Err(Error::config("duct half width must be positive"));
        }
        if ny < 2 {
            return Err(Error::config("duct needs at least 2 cells across"));
        }
        Self::new(x1_min, x1_max, nx, ny, Geometry::Duct { half_width })
    }

    fn new(x1_min: T, x1_max: T, nx: usize, ny: usize, geometry: Geometry<T>) -> Result<Self> {
        if !(x1_max > x1_min) {
            return Err(Error::config(format!("empty x₁ extent [{x1_min}, {x1_max}]")));
        }
        if nx < 3 {
            return Err(Error::config("mesh needs at least 3 cells along x₁"));
        }
        Ok(Self {
            x1_min,
            x1_max,
            nx,
            ny,
            geometry,
        })
    }

    pub fn geometry(&self) -> Geometry<T> {
        self.geometry
    }

    pub fn is_duct(&self) -> bool {
        matches!(self.geometry, Geometry::Duct { .. })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn extent(&self) -> (T, T) {
        (self.x1_min, self.x1_max)
    }

    pub fn hx(&self) -> T {
        (self.x1_max - self.x1_min) / T::from_usize_lossy(self.nx)
    }

    /// Cell width across the duct; `1` on a line so that cell measures are per unit transverse area.
    pub fn hy(&self) -> T {
        match self.geometry {
            Geometry::Line => T::one(),
            Geometry::Duct { half_width } => T::lit(2.0) * half_width / T::from_usize_lossy(self.ny),
        }
    }

    pub fn cell_measure(&self) -> T {
        self.hx() * self.hy()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn unindex(&self, c: usize) -> (usize, usize) {
        (c / self.ny, c % self.ny)
    }

    pub fn x1(&self, i: usize) -> T {
        self.x1_min + (T::from_usize_lossy(i) + T::lit(0.5)) * self.hx()
    }

    pub fn x2(&self, j: usize) -> T {
        match self.geometry {
            Geometry::Line => T::zero(),
            Geometry::Duct { half_width } => -half_width + (T::from_usize_lossy(j) + T::lit(0.5)) * self.hy(),
        }
    }

    pub fn center(&self, c: usize) -> (T, T) {
        let (i, j) = self.unindex(c);
        (self.x1(i), self.x2(j))
    }

    /// `‖u‖²_{L²_x}` of a cell field.
    pub fn norm_sq(&self, u: &[T]) -> T {
        u.iter().map(|x| *x * *x).sum::<T>() * self.cell_measure()
    }
}
