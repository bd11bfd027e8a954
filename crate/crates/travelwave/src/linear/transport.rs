//! Regularized steady transport `L0 f + N^{-1} L_m f + div(L1 X f) = psi`
//! with Neumann side rows `D^m f = ... = D^{2m-1} f = 0` on both walls.

use std::f64::consts::PI;

use faer::prelude::*;
use faer::MatRef;

use crate::error::{Error, Result};
use crate::spaces::Grid;

/// Coefficients sampled at the `N_x x N_z` nodes.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    pub lambda0: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub x: [Vec<f64>; 2],
    /// `(m, N)`; `None` drops the elliptic term and the Neumann rows.
    pub reg: Option<(usize, f64)>,
}

impl TransportProblem {
    fn check(&self, grid: &Grid) -> Result<()> {
        let n = grid.nx * grid.nz;
        if [&self.lambda0, &self.lambda1, &self.x[0], &self.x[1]].iter().any(|v| v.len() != n) {
            return Err(Error::Grid(format!("transport coefficients must have {n} nodal values")));
        }
        if self.lambda0.iter().chain(&self.lambda1).any(|v| !(*v > 0.0)) {
            return Err(Error::Constraint("transport coefficients must be positive".into()));
        }
        if let Some((m, _)) = self.reg {
            if m == 0 || 2 * m + 2 > grid.nz {
                return Err(Error::Grid(format!("regularization order {m} incompatible with N_z = {}", grid.nz)));
            }
        }
        Ok(())
    }

    /// Apply the operator (without side rows) to a coefficient slab.
    pub fn apply(&self, grid: &Grid, f: &[f64]) -> Vec<f64> {
        let fv = grid.to_values(f);
        let flux = |k: usize| -> Vec<f64> {
            let v: Vec<f64> = fv.iter().enumerate().map(|(i, f)| self.lambda1[i] * self.x[k][i] * f).collect();
            grid.from_values(&v)
        };
        let l0: Vec<f64> = fv.iter().zip(&self.lambda0).map(|(f, l)| f * l).collect();
        let mut out = grid.from_values(&l0);
        for (o, (a, b)) in out.iter_mut().zip(grid.dx(&flux(0)).into_iter().zip(grid.dy(&flux(1)))) {
            *o += a + b;
        }
        if let Some((m, n)) = self.reg {
            let horiz = grid.multiplier(f, |xi| (2.0 * PI * xi).powi(2 * m as i32));
            let vert = grid.apply_vertical(&grid.dy_power(2 * m), f);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for (o, (h, v)) in out.iter_mut().zip(horiz.iter().zip(&vert)) {
                *o += (h + sign * v) / n;
            }
        }
        out
    }

    /// Operator with the Neumann rows substituted.
    fn rows(&self, grid: &Grid, f: &[f64], dpows: &[Vec<f64>]) -> Vec<f64> {
        let mut out = self.apply(grid, f);
        if let Some((m, _)) = self.reg {
            let (nz, nc) = (grid.nz, grid.nc());
            for i in 0..m {
                let d = grid.apply_vertical(&dpows[i], f);
                out[i * nc..(i + 1) * nc].copy_from_slice(grid.row(&d, 0));
                out[(nz - 1 - i) * nc..(nz - i) * nc].copy_from_slice(grid.row(&d, nz - 1));
            }
        }
        out
    }
}

/// Solve for `f` (coefficient slab) given `psi` (coefficient slab).
pub fn steady_transport_solve(grid: &Grid, problem: &TransportProblem, psi: &[f64]) -> Result<Vec<f64>> {
    problem.check(grid)?;
    let (nz, nc) = (grid.nz, grid.nc());
    let n = nz * nc;
    let dpows: Vec<Vec<f64>> = match problem.reg {
        Some((m, _)) => (m..2 * m).map(|p| grid.dy_power(p)).collect(),
        None => Vec::new(),
    };
    let mut data = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        data[j * n..(j + 1) * n].copy_from_slice(&problem.rows(grid, &e, &dpows));
        e[j] = 0.0;
    }
    let mut rhs = psi.to_vec();
    if let Some((m, _)) = problem.reg {
        for i in 0..m {
            rhs[i * nc..(i + 1) * nc].fill(0.0);
            rhs[(nz - 1 - i) * nc..(nz - i) * nc].fill(0.0);
        }
    }
    let lu = MatRef::from_column_major_slice(&data, n, n).partial_piv_lu();
    let mut b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    lu.solve_in_place(b.as_mut());
    let f: Vec<f64> = (0..n).map(|i| b[(i, 0)]).collect();
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("steady transport system".into()));
    }
    Ok(f)
}
