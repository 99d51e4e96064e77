//! Uniform grid on the unit square and the field containers living on it.
//!
//! Two boundary modes: `periodic` (collocation points `i h`, trigonometric
//! spectral operators) and `dirichlet_neumann` (cell centers `(i + 1/2) h`,
//! second-order centered differences with ghost closures: velocity reflects
//! odd across walls, director and pressure reflect even). The domain is
//! `[0,1)^2` so integrals are plain grid means.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{CosSinTransforms, SpectralTransforms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMode {
    Periodic,
    DirichletNeumann,
}

/// Ghost-cell convention a vector field obeys in `dirichlet_neumann` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    /// Homogeneous Dirichlet at the walls (odd ghost reflection).
    Velocity,
    /// Homogeneous Neumann at the walls (even ghost reflection).
    Director,
}

#[derive(Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub bc_mode: BcMode,
    pub(crate) spectral: Option<Arc<SpectralTransforms>>,
    pub(crate) cossin: Option<Arc<CosSinTransforms>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("bc_mode", &self.bc_mode)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.bc_mode == other.bc_mode
    }
}

impl Grid {
    pub fn new(nx: usize, ny: usize, bc_mode: BcMode) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::Config(format!("grid.nx and grid.ny must be >= 8, got {nx}x{ny}")));
        }
        if bc_mode == BcMode::Periodic && (!nx.is_power_of_two() || !ny.is_power_of_two()) {
            return Err(Error::Config(format!(
                "grid.nx and grid.ny must be powers of two in periodic mode, got {nx}x{ny}"
            )));
        }
        let (spectral, cossin) = match bc_mode {
            BcMode::Periodic => (Some(Arc::new(SpectralTransforms::new(nx, ny))), None),
            BcMode::DirichletNeumann => (None, Some(Arc::new(CosSinTransforms::new(nx, ny)))),
        };
        Ok(Self { nx, ny, hx: 1.0 / nx as f64, hy: 1.0 / ny as f64, bc_mode, spectral, cossin })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Physical coordinates of sample `(ix, iy)`.
    pub fn coords(&self, ix: usize, iy: usize) -> (f64, f64) {
        match self.bc_mode {
            BcMode::Periodic => (ix as f64 * self.hx, iy as f64 * self.hy),
            BcMode::DirichletNeumann => {
                ((ix as f64 + 0.5) * self.hx, (iy as f64 + 0.5) * self.hy)
            }
        }
    }

    pub fn scalar_field(&self) -> ScalarField {
        ScalarField { grid: self.clone(), data: vec![0.0; self.len()] }
    }

    pub fn scalar_from_fn(&self, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut s = self.scalar_field();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let (x, y) = self.coords(ix, iy);
                s.data[self.idx(ix, iy)] = f(x, y);
            }
        }
        s
    }

    pub fn vector_field(&self, role: FieldRole) -> VectorField {
        VectorField {
            grid: self.clone(),
            x: vec![0.0; self.len()],
            y: vec![0.0; self.len()],
            role,
        }
    }

    pub fn vector_from_fn(&self, role: FieldRole, f: impl Fn(f64, f64) -> [f64; 2]) -> VectorField {
        let mut v = self.vector_field(role);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let (x, y) = self.coords(ix, iy);
                let val = f(x, y);
                let k = self.idx(ix, iy);
                v.x[k] = val[0];
                v.y[k] = val[1];
            }
        }
        v
    }

    pub fn tensor_field(&self) -> TensorField {
        TensorField {
            grid: self.clone(),
            xx: vec![0.0; self.len()],
            xy: vec![0.0; self.len()],
            yx: vec![0.0; self.len()],
            yy: vec![0.0; self.len()],
        }
    }

    /// Integration weight of one sample; `|Omega| = 1` so this is `1/N`.
    pub fn quad_weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub(crate) fn spectral(&self) -> &SpectralTransforms {
        self.spectral.as_deref().expect("spectral transforms require periodic mode")
    }

    pub(crate) fn cossin(&self) -> &CosSinTransforms {
        self.cossin.as_deref().expect("cosine/sine transforms require dirichlet_neumann mode")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.quad_weight()
    }

    /// Discrete `L^2` inner product `(1/N) sum a b`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid);
        dot(&self.data, &other.data) * self.grid.quad_weight()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub role: FieldRole,
}

impl VectorField {
    pub fn inner(&self, other: &VectorField) -> f64 {
        assert_eq!(self.grid, other.grid);
        (dot(&self.x, &other.x) + dot(&self.y, &other.y)) * self.grid.quad_weight()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Pointwise Euclidean magnitude maximum.
    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .fold(0.0f64, |m, (a, b)| m.max((a * a + b * b).sqrt()))
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }

    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.x[k], self.y[k]]
    }

    /// Componentwise a + s*b.
    pub fn add_scaled(&self, s: f64, b: &VectorField) -> VectorField {
        assert_eq!(self.grid, b.grid);
        let mut out = self.clone();
        for k in 0..out.x.len() {
            out.x[k] += s * b.x[k];
            out.y[k] += s * b.y[k];
        }
        out
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in self.x.iter_mut().chain(self.y.iter_mut()) {
            *v *= s;
        }
    }

    /// Spatial mean of each component.
    pub fn mean(&self) -> [f64; 2] {
        let w = self.grid.quad_weight();
        [self.x.iter().sum::<f64>() * w, self.y.iter().sum::<f64>() * w]
    }

    /// Variance around the mean, summed over components.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let w = self.grid.quad_weight();
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - m[0]) * (a - m[0]) + (b - m[1]) * (b - m[1]))
            .sum::<f64>()
            * w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: Grid,
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yx: Vec<f64>,
    pub yy: Vec<f64>,
}

impl TensorField {
    /// Frobenius inner product `(1/N) sum A : B`.
    pub fn inner(&self, other: &TensorField) -> f64 {
        assert_eq!(self.grid, other.grid);
        (dot(&self.xx, &other.xx)
            + dot(&self.xy, &other.xy)
            + dot(&self.yx, &other.yx)
            + dot(&self.yy, &other.yy))
            * self.grid.quad_weight()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn is_finite(&self) -> bool {
        self.xx
            .iter()
            .chain(&self.xy)
            .chain(&self.yx)
            .chain(&self.yy)
            .all(|v| v.is_finite())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(4, 16, BcMode::Periodic).is_err());
        assert!(Grid::new(24, 24, BcMode::Periodic).is_err(), "periodic wants powers of two");
        assert!(Grid::new(24, 24, BcMode::DirichletNeumann).is_ok());
        assert!(Grid::new(16, 32, BcMode::Periodic).is_ok());
    }

    #[test]
    fn quadrature_is_exact_mean_on_torus() {
        let g = Grid::new(16, 16, BcMode::Periodic).unwrap();
        let s = g.scalar_from_fn(|x, _| (2.0 * std::f64::consts::PI * x).sin());
        assert!(s.mean().abs() < 1e-15);
        let one = g.scalar_from_fn(|_, _| 1.0);
        assert!((one.mean() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cell_centers_tile_the_unit_square() {
        let g = Grid::new(8, 8, BcMode::DirichletNeumann).unwrap();
        let (x0, y0) = g.coords(0, 0);
        let (x7, y7) = g.coords(7, 7);
        assert!((x0 - 0.0625).abs() < 1e-15 && (y0 - 0.0625).abs() < 1e-15);
        assert!((x7 - 0.9375).abs() < 1e-15 && (y7 - 0.9375).abs() < 1e-15);
    }
}
