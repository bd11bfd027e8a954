//! Fourier x Chebyshev grids, real coefficient transforms, norms, projectors
//! and dyadic smoothing operators.
//!
//! Horizontal data is stored as real Fourier coefficients
//! `[c0, a1, b1, a2, b2, ...]` with
//! `f(x) = c0 + sum_k a_k cos(2 pi k x / L) + b_k sin(2 pi k x / L)` for
//! `k < N_x/2`; the Nyquist mode is never represented. Slab data is row-major
//! with one row of coefficients per Chebyshev-Lobatto node, `y_0 = 0` first.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::operators::{Residual, State};
use crate::scalar::{lift, Scalar};

#[derive(Clone)]
pub struct Grid {
    /// Horizontal period.
    pub l: f64,
    pub nx: usize,
    pub nz: usize,
    pub b: f64,
    /// Low/high frequency split used by the extension operator.
    pub kappa: f64,
    /// Chebyshev-Lobatto nodes on `[0, b]`, increasing.
    pub y: Vec<f64>,
    /// Vertical differentiation matrix, `nz x nz` row-major.
    pub dmat: Vec<f64>,
    /// Clenshaw-Curtis weights on `[0, b]`.
    pub w: Vec<f64>,
    pub mx: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("l", &self.l).field("nx", &self.nx).field("nz", &self.nz).field("b", &self.b).finish()
    }
}

/// Chebyshev-Lobatto nodes `cos(pi j / (n-1))` and the differentiation matrix.
pub fn chebyshev(n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = n - 1;
    let x: Vec<f64> = (0..n).map(|j| (PI * j as f64 / m as f64).cos()).collect();
    let c = |i: usize| if i == 0 || i == m { 2.0 } else { 1.0 };
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let v = c(i) / c(j) * sign / (x[i] - x[j]);
                d[i * n + j] = v;
                row += v;
            }
        }
        d[i * n + i] = -row;
    }
    (x, d)
}

/// Clenshaw-Curtis weights for the `n` Chebyshev-Lobatto nodes on `[-1, 1]`.
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let m = n - 1;
    let mut w = vec![0.0; n];
    if m == 0 {
        w[0] = 2.0;
        return w;
    }
    let theta: Vec<f64> = (0..n).map(|j| PI * j as f64 / m as f64).collect();
    let mut v = vec![1.0; m.saturating_sub(1)];
    let ii = 1..m;
    if m % 2 == 0 {
        w[0] = 1.0 / (m * m - 1) as f64;
        w[m] = w[0];
        for k in 1..m / 2 {
            for (idx, i) in ii.clone().enumerate() {
                v[idx] -= 2.0 * (2.0 * k as f64 * theta[i]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (idx, i) in ii.clone().enumerate() {
            v[idx] -= (m as f64 * theta[i]).cos() / (m * m - 1) as f64;
        }
    } else {
        w[0] = 1.0 / (m * m) as f64;
        w[m] = w[0];
        for k in 1..=(m - 1) / 2 {
            for (idx, i) in ii.clone().enumerate() {
                v[idx] -= 2.0 * (2.0 * k as f64 * theta[i]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (idx, i) in ii.enumerate() {
        w[i] = 2.0 * v[idx] / m as f64;
    }
    w
}

impl Grid {
    pub fn new(l: f64, nx: usize, nz: usize, b: f64) -> Result<Self> {
        if nx < 4 || nx % 2 != 0 {
            return Err(Error::Grid(format!("N_x = {nx} must be even and at least 4")));
        }
        if nz < 8 {
            return Err(Error::Grid(format!("N_z = {nz} must be at least 8")));
        }
        if !(l > 0.0 && b > 0.0) {
            return Err(Error::Grid("period and depth must be positive".into()));
        }
        let (x, d) = chebyshev(nz);
        let y: Vec<f64> = x.iter().map(|xi| 0.5 * b * (1.0 - xi)).collect();
        let dmat: Vec<f64> = d.iter().map(|v| -2.0 / b * v).collect();
        let w: Vec<f64> = clenshaw_curtis(nz).iter().map(|v| 0.5 * b * v).collect();
        let mut mx = 3 * nx / 2;
        mx += mx % 2;
        let mut planner = FftPlanner::new();
        Ok(Grid {
            l,
            nx,
            nz,
            b,
            kappa: 1.0,
            y,
            dmat,
            w,
            mx,
            fwd: planner.plan_fft_forward(nx),
            inv: planner.plan_fft_inverse(nx),
            fwd_pad: planner.plan_fft_forward(mx),
            inv_pad: planner.plan_fft_inverse(mx),
        })
    }

    /// Real coefficients per row.
    pub fn nc(&self) -> usize {
        self.nx - 1
    }

    /// Highest represented wavenumber index.
    pub fn kmax(&self) -> usize {
        self.nx / 2 - 1
    }

    /// Frequency `xi = k / L` of coefficient slot `c`.
    pub fn xi_of(&self, c: usize) -> f64 {
        ((c + 1) / 2) as f64 / self.l
    }

    pub fn x(&self, m: usize) -> Vec<f64> {
        (0..m).map(|i| self.l * i as f64 / m as f64).collect()
    }

    fn plans(&self, m: usize) -> (&Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>) {
        if m == self.nx {
            (&self.fwd, &self.inv)
        } else if m == self.mx {
            (&self.fwd_pad, &self.inv_pad)
        } else {
            panic!("no FFT plan for length {m}")
        }
    }

    /// Sample coefficients on `m` equispaced points (`m` is `nx` or `mx`).
    pub fn synth_row(&self, c: &[f64], out: &mut [f64]) {
        let m = out.len();
        let mut z = vec![Complex64::new(0.0, 0.0); m];
        z[0] = Complex64::new(c[0], 0.0);
        for k in 1..=self.kmax() {
            let a = c[2 * k - 1];
            let b = c[2 * k];
            z[k] = Complex64::new(0.5 * a, -0.5 * b);
            z[m - k] = z[k].conj();
        }
        self.plans(m).1.process(&mut z);
        for (o, v) in out.iter_mut().zip(&z) {
            *o = v.re;
        }
    }

    /// Coefficients of `m` equispaced samples, truncated to `|k| < N_x/2`.
    pub fn analyze_row(&self, v: &[f64], out: &mut [f64]) {
        let m = v.len();
        let mut z: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.plans(m).0.process(&mut z);
        let s = 1.0 / m as f64;
        out[0] = z[0].re * s;
        for k in 1..=self.kmax() {
            out[2 * k - 1] = 2.0 * z[k].re * s;
            out[2 * k] = -2.0 * z[k].im * s;
        }
    }

    fn rowwise<T: Scalar>(&self, input: &[T], in_len: usize, out_len: usize, f: impl Fn(&Self, &[f64], &mut [f64])) -> Vec<T> {
        let rows = input.len() / in_len;
        let mut out = vec![T::zero(); rows * out_len];
        let (mut bi, mut bo) = (Vec::new(), Vec::new());
        for r in 0..rows {
            lift(&input[r * in_len..(r + 1) * in_len], &mut out[r * out_len..(r + 1) * out_len], &mut bi, &mut bo, |a, b| f(self, a, b));
        }
        out
    }

    /// Coefficient rows to samples on the 3/2-padded grid.
    pub fn pad<T: Scalar>(&self, c: &[T]) -> Vec<T> {
        self.rowwise(c, self.nc(), self.mx, |g, a, b| g.synth_row(a, b))
    }

    /// Padded samples back to truncated coefficient rows.
    pub fn unpad<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        self.rowwise(p, self.mx, self.nc(), |g, a, b| g.analyze_row(a, b))
    }

    pub fn to_values(&self, c: &[f64]) -> Vec<f64> {
        self.rowwise(c, self.nc(), self.nx, |g, a, b| g.synth_row(a, b))
    }

    pub fn from_values(&self, v: &[f64]) -> Vec<f64> {
        self.rowwise(v, self.nx, self.nc(), |g, a, b| g.analyze_row(a, b))
    }

    /// Horizontal derivative of coefficient rows.
    pub fn dx<T: Scalar>(&self, c: &[T]) -> Vec<T> {
        let nc = self.nc();
        let mut out = vec![T::zero(); c.len()];
        for (row_in, row_out) in c.chunks(nc).zip(out.chunks_mut(nc)) {
            for k in 1..=self.kmax() {
                let w = 2.0 * PI * k as f64 / self.l;
                row_out[2 * k - 1] = row_in[2 * k] * w;
                row_out[2 * k] = row_in[2 * k - 1] * (-w);
            }
        }
        out
    }

    /// Multiply each mode by `m(xi)`.
    pub fn multiplier<T: Scalar>(&self, c: &[T], m: impl Fn(f64) -> f64) -> Vec<T> {
        let nc = self.nc();
        let w: Vec<f64> = (0..nc).map(|s| m(self.xi_of(s))).collect();
        c.iter().enumerate().map(|(i, &v)| v * w[i % nc]).collect()
    }

    /// Vertical derivative of an `nz`-row slab.
    pub fn dy<T: Scalar>(&self, c: &[T]) -> Vec<T> {
        self.apply_vertical(&self.dmat, c)
    }

    pub fn apply_vertical<T: Scalar>(&self, mat: &[f64], c: &[T]) -> Vec<T> {
        let (nz, nc) = (self.nz, self.nc());
        let mut out = vec![T::zero(); nz * nc];
        for i in 0..nz {
            let o = &mut out[i * nc..(i + 1) * nc];
            for j in 0..nz {
                let d = mat[i * nz + j];
                if d == 0.0 {
                    continue;
                }
                for (ov, &cv) in o.iter_mut().zip(&c[j * nc..(j + 1) * nc]) {
                    *ov += cv * d;
                }
            }
        }
        out
    }

    /// `D^p` as a dense matrix.
    pub fn dy_power(&self, p: usize) -> Vec<f64> {
        let n = self.nz;
        let mut m: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
        for _ in 0..p {
            let mut next = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..n {
                    let a = self.dmat[i * n + k];
                    for j in 0..n {
                        next[i * n + j] += a * m[k * n + j];
                    }
                }
            }
            m = next;
        }
        m
    }

    /// `int_0^b` of a slab, coefficient-wise.
    pub fn vertical_integral(&self, c: &[f64]) -> Vec<f64> {
        let nc = self.nc();
        let mut out = vec![0.0; nc];
        for j in 0..self.nz {
            for (o, v) in out.iter_mut().zip(&c[j * nc..(j + 1) * nc]) {
                *o += self.w[j] * v;
            }
        }
        out
    }

    /// Broadcast a surface row to every vertical node.
    pub fn broadcast<T: Scalar>(&self, s: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.nz * s.len());
        for _ in 0..self.nz {
            out.extend_from_slice(s);
        }
        out
    }

    pub fn row<'a, T>(&self, c: &'a [T], j: usize) -> &'a [T] {
        let nc = self.nc();
        &c[j * nc..(j + 1) * nc]
    }

    /// `sum_k m(xi_k) |f_k|^2` over one coefficient row, scaled as an `L^2(0, L)` integral.
    pub fn weighted_sq(&self, c: &[f64], m: impl Fn(f64) -> f64) -> f64 {
        let mut acc = m(0.0) * c[0] * c[0];
        for k in 1..=self.kmax() {
            let xi = k as f64 / self.l;
            acc += 0.5 * m(xi) * (c[2 * k - 1].powi(2) + c[2 * k].powi(2));
        }
        self.l * acc
    }

    /// `int_0^L f g dx` for two surface rows.
    pub fn surface_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut acc = f[0] * g[0];
        for k in 1..=self.kmax() {
            acc += 0.5 * (f[2 * k - 1] * g[2 * k - 1] + f[2 * k] * g[2 * k]);
        }
        self.l * acc
    }
}

pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// Surface field as sampled values on the `N_x` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    pub values: Vec<f64>,
}

/// Slab field as sampled values, `nz` rows of `nx` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabField {
    pub nz: usize,
    pub nx: usize,
    pub values: Vec<f64>,
}

// ---------------------------------------------------------------- norms

/// `H^s` norm of a surface coefficient row.
pub fn sobolev_norm_surface(grid: &Grid, c: &[f64], s: f64) -> f64 {
    grid.weighted_sq(c, |xi| bracket(xi).powf(2.0 * s)).sqrt()
}

/// Mixed `H^s` norm of a slab: `sum_{v <= s} int <xi>^{2(s-v)} |d_y^v f|^2`.
pub fn sobolev_norm_slab(grid: &Grid, c: &[f64], s: f64) -> f64 {
    let mut total = 0.0;
    let mut deriv = c.to_vec();
    let top = s.floor().max(0.0) as usize;
    for v in 0..=top {
        if v > 0 {
            deriv = grid.dy(&deriv);
        }
        let e = 2.0 * (s - v as f64);
        for j in 0..grid.nz {
            total += grid.w[j] * grid.weighted_sq(grid.row(&deriv, j), |xi| bracket(xi).powf(e));
        }
    }
    total.sqrt()
}

fn mean_check(grid: &Grid, c: &[f64]) -> Result<()> {
    let scale = grid.weighted_sq(c, |_| 1.0).sqrt() / grid.l.sqrt();
    if c[0].abs() > 1e-10 * scale + 1e-13 {
        return Err(Error::Constraint(format!("nonzero mean {:.3e}", c[0])));
    }
    Ok(())
}

pub fn anisotropic_weight_1d(xi: f64, s: f64) -> f64 {
    if xi == 0.0 {
        0.0
    } else if xi.abs() < 1.0 {
        1.0 + xi * xi
    } else {
        bracket(xi).powf(2.0 * s)
    }
}

/// Anisotropic norm of a mean-zero surface row (`d = 1`).
pub fn anisotropic_norm(grid: &Grid, c: &[f64], s: f64) -> Result<f64> {
    mean_check(grid, c)?;
    Ok(anisotropic_norm_lenient(grid, c, s))
}

/// As [`anisotropic_norm`], ignoring the mean.
pub fn anisotropic_norm_lenient(grid: &Grid, c: &[f64], s: f64) -> f64 {
    grid.weighted_sq(c, |xi| anisotropic_weight_1d(xi, s)).sqrt()
}

pub fn anisotropic_weight_2d(xi1: f64, xi2: f64, s: f64) -> f64 {
    let r2 = xi1 * xi1 + xi2 * xi2;
    if r2 == 0.0 {
        0.0
    } else if r2 < 1.0 {
        (xi1 * xi1 + r2 * r2) / r2
    } else {
        (1.0 + r2).powf(s)
    }
}

/// Anisotropic norm on a doubly periodic `n1 x n2` surface grid with periods `(l1, l2)`.
/// Values are row-major with the first index along `x_1`.
pub fn anisotropic_norm_2d(values: &[f64], n1: usize, n2: usize, l1: f64, l2: f64, s: f64) -> Result<f64> {
    let spec = fft2(values, n1, n2);
    let scale = (l1 * l2) / ((n1 * n2) as f64).powi(2);
    if spec[0].norm() * ((n1 * n2) as f64).recip() > 1e-10 * values.iter().map(|v| v.abs()).fold(0.0, f64::max) + 1e-13 {
        return Err(Error::Constraint(format!("nonzero mean {:.3e}", spec[0].re / (n1 * n2) as f64)));
    }
    let f = |i: usize, n: usize, l: f64| if i < n / 2 { i as f64 / l } else if i == n / 2 { f64::NAN } else { (i as f64 - n as f64) / l };
    let mut acc = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let (a, b) = (f(i, n1, l1), f(j, n2, l2));
            if a.is_nan() || b.is_nan() {
                continue;
            }
            acc += anisotropic_weight_2d(a, b, s) * spec[i * n2 + j].norm_sqr();
        }
    }
    Ok((acc * scale).sqrt())
}

/// Plain `H^s` norm on the doubly periodic grid.
pub fn sobolev_norm_2d(values: &[f64], n1: usize, n2: usize, l1: f64, l2: f64, s: f64) -> f64 {
    let spec = fft2(values, n1, n2);
    let scale = (l1 * l2) / ((n1 * n2) as f64).powi(2);
    let f = |i: usize, n: usize, l: f64| if i <= n / 2 { i as f64 / l } else { (i as f64 - n as f64) / l };
    let mut acc = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let (a, b) = (f(i, n1, l1), f(j, n2, l2));
            acc += (1.0 + a * a + b * b).powf(s) * spec[i * n2 + j].norm_sqr();
        }
    }
    (acc * scale).sqrt()
}

/// Sharp projection `1_{|xi| < kappa}` on the doubly periodic grid.
pub fn project_low_2d(values: &[f64], n1: usize, n2: usize, l1: f64, l2: f64, kappa: f64) -> Vec<f64> {
    let mut spec = fft2(values, n1, n2);
    let f = |i: usize, n: usize, l: f64| if i <= n / 2 { i as f64 / l } else { (i as f64 - n as f64) / l };
    for i in 0..n1 {
        for j in 0..n2 {
            let (a, b) = (f(i, n1, l1), f(j, n2, l2));
            if (a * a + b * b).sqrt() >= kappa || i == n1 / 2 || j == n2 / 2 {
                spec[i * n2 + j] = Complex64::new(0.0, 0.0);
            }
        }
    }
    ifft2(spec, n1, n2)
}

pub fn fft2(values: &[f64], n1: usize, n2: usize) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let (p1, p2) = (planner.plan_fft_forward(n1), planner.plan_fft_forward(n2));
    let mut z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for row in z.chunks_mut(n2) {
        p2.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n1];
    for j in 0..n2 {
        for i in 0..n1 {
            col[i] = z[i * n2 + j];
        }
        p1.process(&mut col);
        for i in 0..n1 {
            z[i * n2 + j] = col[i];
        }
    }
    z
}

pub fn ifft2(mut z: Vec<Complex64>, n1: usize, n2: usize) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let (p1, p2) = (planner.plan_fft_inverse(n1), planner.plan_fft_inverse(n2));
    for row in z.chunks_mut(n2) {
        p2.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n1];
    for j in 0..n2 {
        for i in 0..n1 {
            col[i] = z[i * n2 + j];
        }
        p1.process(&mut col);
        for i in 0..n1 {
            z[i * n2 + j] = col[i];
        }
    }
    let s = 1.0 / (n1 * n2) as f64;
    z.iter().map(|c| c.re * s).collect()
}

/// `[f]_{H^{-1}}` of a mean-zero surface row.
pub fn hminus1_seminorm(grid: &Grid, c: &[f64]) -> Result<f64> {
    mean_check(grid, c)?;
    Ok(hminus1_lenient(grid, c))
}

pub fn hminus1_lenient(grid: &Grid, c: &[f64]) -> f64 {
    grid.weighted_sq(c, |xi| if xi == 0.0 { 0.0 } else { 1.0 / (xi * xi) }).sqrt()
}

/// `sqrt(||g||_{H^s}^2 + [int_0^b g dy]_{H^{-1}}^2)`.
pub fn hhat_norm(grid: &Grid, g: &[f64], s: f64) -> Result<f64> {
    let integral = grid.vertical_integral(g);
    let h = hminus1_seminorm(grid, &integral)?;
    Ok((sobolev_norm_slab(grid, g, s).powi(2) + h * h).sqrt())
}

/// Number of factors in the anisotropic product estimate on a `d`-dimensional surface.
pub fn r_d(d: usize) -> usize {
    if d > 1 {
        1 + (d + 1) / (d - 1)
    } else {
        1
    }
}

/// `||q||_{H^{1+s}}^2 + ||u||_{H^{2+s}}^2 + ||eta||_{aniso, 5/2+s}^2`, square-rooted.
pub fn xspace_norm(grid: &Grid, state: &State, s: f64) -> f64 {
    let q = sobolev_norm_slab(grid, &state.q, 1.0 + s);
    let u1 = sobolev_norm_slab(grid, &state.u1, 2.0 + s);
    let u2 = sobolev_norm_slab(grid, &state.u2, 2.0 + s);
    let eta = anisotropic_norm_lenient(grid, &state.eta, 2.5 + s);
    (q * q + u1 * u1 + u2 * u2 + eta * eta).sqrt()
}

/// `||g||_{H^{1+s}}^2 + [int g]_{H^{-1}}^2 + ||f||_{H^s}^2 + ||k||_{H^{1/2+s}}^2`, square-rooted.
pub fn yspace_norm(grid: &Grid, data: &Residual, s: f64) -> f64 {
    let g = sobolev_norm_slab(grid, &data.g, 1.0 + s);
    let hm = hminus1_lenient(grid, &grid.vertical_integral(&data.g));
    let f1 = sobolev_norm_slab(grid, &data.f1, s);
    let f2 = sobolev_norm_slab(grid, &data.f2, s);
    let k1 = sobolev_norm_surface(grid, &data.k1, 0.5 + s);
    let k2 = sobolev_norm_surface(grid, &data.k2, 0.5 + s);
    (g * g + hm * hm + f1 * f1 + f2 * f2 + k1 * k1 + k2 * k2).sqrt()
}

/// Violations of the boundary conditions built into the domain space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// `||u(., 0)||_{H^{1/2}}`
    pub bottom_trace: f64,
    /// `||u2(., b) + d_1 eta||_{H^{1/2}}`
    pub kinematic: f64,
    /// `|mean eta|`
    pub eta_mean: f64,
}

impl ConstraintReport {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.bottom_trace <= tol && self.kinematic <= tol
    }
}

pub fn xspace_constraints(grid: &Grid, state: &State) -> ConstraintReport {
    let n = |c: &[f64]| sobolev_norm_surface(grid, c, 0.5);
    let b1 = n(grid.row(&state.u1, 0));
    let b2 = n(grid.row(&state.u2, 0));
    let top: Vec<f64> = grid.row(&state.u2, grid.nz - 1).iter().zip(grid.dx(&state.eta)).map(|(a, b)| a + b).collect();
    ConstraintReport { bottom_trace: (b1 * b1 + b2 * b2).sqrt(), kinematic: n(&top), eta_mean: state.eta[0].abs() }
}

// ---------------------------------------------------------------- projectors

/// Zero every mode with `keep(xi)` false.
pub fn filter(grid: &Grid, c: &[f64], keep: impl Fn(f64) -> bool) -> Vec<f64> {
    let nc = grid.nc();
    c.iter().enumerate().map(|(i, &v)| if keep(grid.xi_of(i % nc)) { v } else { 0.0 }).collect()
}

pub fn project_low(grid: &Grid, c: &[f64], kappa: f64) -> Vec<f64> {
    filter(grid, c, |xi| xi < kappa)
}

pub fn project_high(grid: &Grid, c: &[f64], kappa: f64) -> Vec<f64> {
    filter(grid, c, |xi| xi >= kappa)
}

/// `S_j`: sharp cutoff at `|xi| < 2^j`, with `S_0 = 0`.
pub fn smooth(grid: &Grid, c: &[f64], j: usize) -> Vec<f64> {
    if j == 0 {
        return vec![0.0; c.len()];
    }
    let cut = 2f64.powi(j as i32);
    filter(grid, c, |xi| xi < cut)
}

/// `Delta_j = S_{j+1} - S_j`.
pub fn lp_block(grid: &Grid, c: &[f64], j: usize) -> Vec<f64> {
    let hi = 2f64.powi(j as i32 + 1);
    let lo = if j == 0 { f64::NEG_INFINITY } else { 2f64.powi(j as i32) };
    filter(grid, c, |xi| xi < hi && xi >= lo)
}

/// Smallest `j` with `S_j` the identity on the grid.
pub fn saturation_index(grid: &Grid) -> usize {
    let top = grid.kmax() as f64 / grid.l;
    let mut j = 1;
    while 2f64.powi(j as i32) <= top {
        j += 1;
    }
    j
}

/// Random coefficient row supported on `k <= kmax`, amplitudes decaying like
/// `(1 + k)^{-decay}`.
pub fn random_row<R: Rng>(grid: &Grid, rng: &mut R, kmax: usize, decay: f64, mean_zero: bool) -> Vec<f64> {
    let mut c = vec![0.0; grid.nc()];
    if !mean_zero {
        c[0] = rng.random_range(-1.0..1.0);
    }
    for k in 1..=kmax.min(grid.kmax()) {
        let a = (1.0 + k as f64).powf(-decay);
        c[2 * k - 1] = a * rng.random_range(-1.0..1.0);
        c[2 * k] = a * rng.random_range(-1.0..1.0);
    }
    c
}

/// Chebyshev interpolation of nodal column data at an arbitrary `y`.
pub fn chebyshev_interp(grid: &Grid, nodal: &[f64], y: f64) -> f64 {
    // barycentric weights for Lobatto nodes
    let n = grid.nz;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 } * if j % 2 == 0 { 1.0 } else { -1.0 };
        let d = y - grid.y[j];
        if d.abs() < 1e-15 {
            return nodal[j];
        }
        num += wj / d * nodal[j];
        den += wj / d;
    }
    num / den
}
