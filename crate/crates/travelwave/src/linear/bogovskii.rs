//! Divergence right inverses built from the mode-wise Neumann problem
//! `-z'' + k^2 z = psi_hat`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spaces::{chebyshev_interp, Grid};

const GAUSS_POINTS: usize = 48;

/// Two coefficient slabs `(v1, v2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSlab {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl VectorSlab {
    pub fn divergence(&self, grid: &Grid) -> Vec<f64> {
        grid.dx(&self.v1).iter().zip(grid.dy(&self.v2)).map(|(a, b)| a + b).collect()
    }

    /// Largest absolute coefficient of either component on the row `j`.
    pub fn trace_max(&self, grid: &Grid, j: usize) -> f64 {
        grid.row(&self.v1, j).iter().chain(grid.row(&self.v2, j)).fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// `ch_or_sh(p) ch_or_sh(r) / sinh(s)` for `p + r <= s`, without overflow.
fn hyp_ratio(p: f64, p_cosh: bool, r: f64, r_cosh: bool, s: f64) -> f64 {
    let f = |a: f64, c: bool| if c { 1.0 + (-2.0 * a).exp() } else { 1.0 - (-2.0 * a).exp() };
    (p + r - s).exp() * f(p, p_cosh) * f(r, r_cosh) / (2.0 * (1.0 - (-2.0 * s).exp()))
}

/// Mode-wise Neumann solution `z` and its vertical derivative `z'` at the
/// nodes, as coefficient slabs. The zero mode returns `z = 0` and
/// `z' = -int_0^y psi_0`, which needs `int_0^b psi_0 = 0`.
pub fn bogovskii_zeta(grid: &Grid, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nz, nc, b) = (grid.nz, grid.nc(), grid.b);
    let (gx, gw) = gauss_legendre(GAUSS_POINTS);
    let scale = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean: f64 = grid.vertical_integral(psi)[0];
    if mean.abs() > 1e-10 * b * scale.max(1e-300) {
        return Err(Error::Constraint(format!("vertical integral of the mean mode is {mean:.3e}, expected 0")));
    }
    let columns: Vec<Vec<f64>> = (0..nc).map(|c| (0..nz).map(|j| psi[j * nc + c]).collect()).collect();
    let mut zeta = vec![0.0; nz * nc];
    let mut dzeta = vec![0.0; nz * nc];
    for j in 0..nz {
        let y = grid.y[j];
        // quadrature points below and above y
        let seg = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
            gx.iter().zip(&gw).map(|(&x, &w)| (lo + (hi - lo) * (x + 1.0) / 2.0, w * (hi - lo) / 2.0)).collect()
        };
        let below = seg(0.0, y);
        let above = seg(y, b);
        for c in 0..nc {
            let col = &columns[c];
            let k = 2.0 * PI * grid.xi_of(c);
            let (mut z, mut dz) = (0.0, 0.0);
            if k == 0.0 {
                for &(t, w) in &below {
                    dz -= w * chebyshev_interp(grid, col, t);
                }
            } else {
                let s = k * b;
                for &(t, w) in &below {
                    let p = w * chebyshev_interp(grid, col, t);
                    z += p * hyp_ratio(k * t, true, k * (b - y), true, s) / k;
                    dz -= p * hyp_ratio(k * t, true, k * (b - y), false, s);
                }
                for &(t, w) in &above {
                    let p = w * chebyshev_interp(grid, col, t);
                    z += p * hyp_ratio(k * y, true, k * (b - t), true, s) / k;
                    dz += p * hyp_ratio(k * y, false, k * (b - t), true, s);
                }
            }
            zeta[j * nc + c] = z;
            dzeta[j * nc + c] = dz;
        }
    }
    Ok((zeta, dzeta))
}

/// Right inverse of the divergence with zero trace on both walls.
pub fn bogovskii_b0(grid: &Grid, psi: &[f64]) -> Result<VectorSlab> {
    let (nz, nc, b) = (grid.nz, grid.nc(), grid.b);
    let (zeta, dzeta) = bogovskii_zeta(grid, psi)?;
    let mut v1: Vec<f64> = grid.dx(&zeta).iter().map(|v| -v).collect();
    let mut v2: Vec<f64> = dzeta.iter().map(|v| -v).collect();
    // divergence-free correction (w', -d_1 w) with a cubic w cancelling the wall traces of v1
    let bot = grid.row(&v1, 0).to_vec();
    let top = grid.row(&v1, nz - 1).to_vec();
    let mut omega = vec![0.0; nz * nc];
    for j in 0..nz {
        let y = grid.y[j];
        let (p, dp) = (y * (b - y) * (b - y) / (b * b), (b - y) * (b - 3.0 * y) / (b * b));
        let (q, dq) = (-y * y * (b - y) / (b * b), y * (3.0 * y - 2.0 * b) / (b * b));
        for c in 0..nc {
            let (alpha, beta) = (-bot[c], -top[c]);
            omega[j * nc + c] = alpha * p + beta * q;
            v1[j * nc + c] += alpha * dp + beta * dq;
        }
    }
    for (v, d) in v2.iter_mut().zip(grid.dx(&omega)) {
        *v -= d;
    }
    Ok(VectorSlab { v1, v2 })
}

/// Right inverse of the divergence with zero bottom trace, for any `psi`.
pub fn bogovskii_b(grid: &Grid, psi: &[f64]) -> Result<VectorSlab> {
    let (nz, nc, b) = (grid.nz, grid.nc(), grid.b);
    let avg = grid.vertical_integral(psi);
    let shifted: Vec<f64> = psi.iter().enumerate().map(|(i, v)| v - avg[i % nc] / b).collect();
    let mut out = bogovskii_b0(grid, &shifted)?;
    for j in 0..nz {
        for c in 0..nc {
            out.v2[j * nc + c] += grid.y[j] / b * avg[c];
        }
    }
    Ok(out)
}

/// Solenoidal extension of a mean-zero surface function `chi`: divergence
/// free, zero bottom trace, top trace `(0, chi)`.
pub fn bogovskii_b2(grid: &Grid, chi: &[f64]) -> Result<VectorSlab> {
    let (nz, nc, b) = (grid.nz, grid.nc(), grid.b);
    let scale = chi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if chi[0].abs() > 1e-12 * scale.max(1e-300) {
        return Err(Error::Constraint(format!("surface datum has mean {:.3e}", chi[0])));
    }
    // linear lift (0, chi y / b): polynomial in y, so the correction stays in the discrete space
    let mut lift = vec![0.0; nz * nc];
    for j in 0..nz {
        for c in 1..nc {
            lift[j * nc + c] = chi[c] * grid.y[j] / b;
        }
    }
    let corr = bogovskii_b0(grid, &grid.dy(&lift))?;
    Ok(VectorSlab { v1: corr.v1.iter().map(|v| -v).collect(), v2: lift.iter().zip(&corr.v2).map(|(l, c)| l - c).collect() })
}
