//! Flattening-map geometry: Poisson-type extensions, Jacobian, the matrices
//! `A` and `M`, the surface normal and mean curvature (two-dimensional slab).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::Grid;

/// `sinh(w y) / sinh(w b)` without overflow.
pub fn sinh_ratio(w: f64, y: f64, b: f64) -> f64 {
    if w == 0.0 {
        return y / b;
    }
    let e = (w * (y - b)).exp();
    e * (1.0 - (-2.0 * w * y).exp()) / (1.0 - (-2.0 * w * b).exp())
}

/// `cosh(w y) / sinh(w b)` without overflow, `w > 0`.
pub fn cosh_sinh_ratio(w: f64, y: f64, b: f64) -> f64 {
    let e = (w * (y - b)).exp();
    e * (1.0 + (-2.0 * w * y).exp()) / (1.0 - (-2.0 * w * b).exp())
}

/// Mode-by-node multipliers of a linear extension operator.
#[derive(Debug, Clone)]
pub struct Extension {
    pub factors: Vec<f64>,
}

impl Extension {
    /// `E eta = (y/b) P_L eta + E_0 P_H eta` with the split at `kappa`.
    pub fn new(grid: &Grid) -> Self {
        Self::build(grid, |xi, y| if xi < grid.kappa { y / grid.b } else { sinh_ratio(2.0 * PI * xi, y, grid.b) })
    }

    /// Harmonic extension vanishing at the bottom; the mean maps to zero.
    pub fn harmonic_zero(grid: &Grid) -> Self {
        Self::build(grid, |xi, y| if xi == 0.0 { 0.0 } else { sinh_ratio(2.0 * PI * xi, y, grid.b) })
    }

    fn build(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let nc = grid.nc();
        let mut factors = vec![0.0; grid.nz * nc];
        for j in 0..grid.nz {
            for c in 0..nc {
                factors[j * nc + c] = f(grid.xi_of(c), grid.y[j]);
            }
        }
        Extension { factors }
    }

    pub fn apply<T: Scalar>(&self, eta: &[T]) -> Vec<T> {
        let nc = eta.len();
        self.factors.iter().enumerate().map(|(i, &f)| eta[i % nc] * f).collect()
    }
}

pub fn poisson_extend_zero(grid: &Grid, phi: &[f64]) -> Vec<f64> {
    Extension::harmonic_zero(grid).apply(phi)
}

pub fn extend(grid: &Grid, eta: &[f64]) -> Vec<f64> {
    Extension::new(grid).apply(eta)
}

/// Mean curvature `d_1(eta_1 / sqrt(1 + eta_1^2))`, dealiased, as coefficients.
pub fn mean_curvature<T: Scalar>(grid: &Grid, eta: &[T]) -> Vec<T> {
    let ex = grid.pad(&grid.dx(eta));
    let flux: Vec<T> = ex.iter().map(|&s| s / (s * s + 1.0).sqrt()).collect();
    grid.dx(&grid.unpad(&flux))
}

/// Geometry sampled on the `N_x x N_z` nodes.
#[derive(Debug, Clone)]
pub struct GeometryPack {
    pub ext: Vec<f64>,
    /// Vertical component of the flattening map, `y + E eta`.
    pub flat_y: Vec<f64>,
    pub jac: Vec<f64>,
    /// `d_1 E eta`
    pub a: Vec<f64>,
    /// `A = (grad F)^{-T}` per node, row-major 2x2.
    pub amat: Vec<[f64; 4]>,
    /// `M = J A^T` per node, row-major 2x2.
    pub mmat: Vec<[f64; 4]>,
    /// `(-d_1 eta, 1)` on the surface.
    pub normal: Vec<[f64; 2]>,
    pub min_jac: f64,
    pub diffeo: bool,
}

/// Coefficient slabs of `E eta`, `d_1 E eta` and `d_y E eta`.
pub fn extension_fields<T: Scalar>(grid: &Grid, ext: &Extension, eta: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let e = ext.apply(eta);
    let a = grid.dx(&e);
    let ey = grid.dy(&e);
    (e, a, ey)
}

pub fn build_geometry(grid: &Grid, eta: &[f64]) -> Result<GeometryPack> {
    let (e, a, ey) = extension_fields(grid, &Extension::new(grid), eta);
    let ext = grid.to_values(&e);
    let a = grid.to_values(&a);
    let jac: Vec<f64> = grid.to_values(&ey).iter().map(|v| 1.0 + v).collect();
    let nx = grid.nx;
    let flat_y: Vec<f64> = ext.iter().enumerate().map(|(i, v)| grid.y[i / nx] + v).collect();
    let min_jac = jac.iter().cloned().fold(f64::INFINITY, f64::min);
    let amat = jac.iter().zip(&a).map(|(&j, &a)| [1.0, -a / j, 0.0, 1.0 / j]).collect();
    let mmat = jac.iter().zip(&a).map(|(&j, &a)| [j, 0.0, -a, 1.0]).collect();
    let ex = grid.to_values(&grid.dx(eta));
    let normal = ex.iter().map(|&d| [-d, 1.0]).collect();
    if min_jac <= 0.0 {
        return Err(Error::Geometry(min_jac));
    }
    Ok(GeometryPack { ext, flat_y, jac, a, amat, mmat, normal, min_jac, diffeo: true })
}

/// Largest relative residual of the row divergences of `J A`.
pub fn piola_residual(grid: &Grid, eta: &[f64]) -> f64 {
    let (_, a, ey) = extension_fields(grid, &Extension::new(grid), eta);
    // row 1 of J A is (J, -a); row 2 is (0, 1)
    let r1: Vec<f64> = grid.dx(&ey).iter().zip(grid.dy(&a)).map(|(x, y)| x - y).collect();
    let scale = grid.to_values(&grid.dx(&ey)).iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    grid.to_values(&r1).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
}
