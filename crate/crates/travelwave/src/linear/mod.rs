//! Linearization of the collocation system: directional derivatives, the
//! principal part, dense and per-mode assembly with LU factorization,
//! divergence right inverses and regularized steady transport.

mod bogovskii;
mod transport;

pub use bogovskii::{bogovskii_b, bogovskii_b0, bogovskii_b2, bogovskii_zeta, VectorSlab};
pub use transport::{steady_transport_solve, TransportProblem};

use std::io::Write;

use faer::prelude::*;
use faer::MatRef;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::operators::{Fields, Forcing, Model, Regularization, Residual, State, Unknowns};
use crate::scalar::{Dual, Scalar};
use crate::spaces::Grid;

const LANES: usize = 8;
type D8 = Dual<LANES>;

/// Background state with cached derivative-loss vector field.
#[derive(Debug, Clone)]
pub struct Background {
    pub state: State,
    pub is_zero: bool,
    /// `v_{w0}` on the padded grid.
    vpad: [Vec<f64>; 2],
}

impl Background {
    pub fn new(model: &Model, state: &State) -> Result<Self> {
        let is_zero = state.to_vector().iter().all(|v| *v == 0.0);
        let vpad = v_field_on(model, state, |c| model.grid.pad(c))?;
        Ok(Background { state: state.clone(), is_zero, vpad })
    }

    pub fn zero(model: &Model) -> Result<Self> {
        Self::new(model, &State::zeros(&model.grid))
    }
}

fn v_field_on(model: &Model, state: &State, sample: impl Fn(&[f64]) -> Vec<f64>) -> Result<[Vec<f64>; 2]> {
    let grid = &model.grid;
    let gv = model.params.g;
    let e = model.ext.apply(&state.eta);
    let h: Vec<f64> = state.q.iter().zip(&e).zip(grid.broadcast(&state.eta)).map(|((q, e), eta)| q + gv * (eta - e)).collect();
    let (hs, a, ey, u1, u2) = (sample(&h), sample(&grid.dx(&e)), sample(&grid.dy(&e)), sample(&state.u1), sample(&state.u2));
    let m = hs.len() / grid.nz;
    let mut v1 = vec![0.0; hs.len()];
    let mut v2 = vec![0.0; hs.len()];
    for k in 0..hs.len() {
        let (_, ds) = model.profile.inverse_enthalpy_with_deriv(hs[k] - gv * grid.y[k / m])?;
        v1[k] = ds * (u1[k] - 1.0 - ey[k]);
        v2[k] = ds * (u2[k] + a[k]);
    }
    Ok([v1, v2])
}

/// `v_{w0} = (H^{-1})'(-g y + q + g (eta - E eta)) (u - M e_1)` at the nodes.
pub fn v_field(model: &Model, state: &State) -> Result<[Vec<f64>; 2]> {
    v_field_on(model, state, |c| model.grid.to_values(c))
}

/// Directional derivative of the operator at `background` along `direction`,
/// plus the (linear) contribution of a forcing perturbation.
pub fn derivative_apply(model: &Model, background: &State, direction: &State, forcing_direction: Option<&Forcing>) -> Result<Residual> {
    let seed = |b: &[f64], d: &[f64]| -> Vec<Dual<1>> { b.iter().zip(d).map(|(&v, &t)| Dual::new(v, [t])).collect() };
    let w = Unknowns {
        q: seed(&background.q, &direction.q),
        u1: seed(&background.u1, &direction.u1),
        u2: seed(&background.u2, &direction.u2),
        eta: seed(&background.eta, &direction.eta),
    };
    let fl = model.evaluate(&w, &model.forcing)?;
    let t = |v: &Vec<Dual<1>>| v.iter().map(|x| x.d[0]).collect::<Vec<f64>>();
    let mut out = Residual { g: t(&fl.g), f1: t(&fl.f1), f2: t(&fl.f2), k1: t(&fl.k1), k2: t(&fl.k2) };
    if let Some(fd) = forcing_direction {
        let bg = background.unknowns();
        let with = model.evaluate(&bg, &fd.with_gamma(model.gamma()))?.into_residual();
        let without = model.evaluate(&bg, &model.forcing.stripped())?.into_residual();
        let d = with.sub(&without);
        for (a, b) in [(&mut out.g, &d.g), (&mut out.f1, &d.f1), (&mut out.f2, &d.f2), (&mut out.k1, &d.k1), (&mut out.k2, &d.k2)] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    Ok(out)
}

/// Principal part at a background: equilibrium coefficients everywhere
/// except the derivative-loss transport term `div(v_{w0} (q + g eta))`.
pub fn principal_fields<T: Scalar>(model: &Model, bg: &Background, w: &Unknowns<T>) -> Fields<T> {
    let grid = &model.grid;
    let p = &model.params;
    let (nz, nc) = (grid.nz, grid.nc());
    let gamma = model.gamma();
    let rho = &model.profile.rho;
    let scale_rows = |c: &[T], f: &dyn Fn(usize) -> f64| -> Vec<T> { c.iter().enumerate().map(|(i, &v)| v * f(i / nc)).collect() };

    let qq: Vec<T> = w.q.iter().zip(grid.broadcast(&w.eta)).map(|(&q, e)| q + e * p.g).collect();
    let pq = grid.pad(&qq);
    let vq1 = grid.unpad(&pq.iter().zip(&bg.vpad[0]).map(|(&a, &v)| a * v).collect::<Vec<T>>());
    let vq2 = grid.unpad(&pq.iter().zip(&bg.vpad[1]).map(|(&a, &v)| a * v).collect::<Vec<T>>());
    let ru1 = scale_rows(&w.u1, &|j| rho[j]);
    let ru2 = scale_rows(&w.u2, &|j| rho[j]);
    let g = sum(&[&grid.dx(&ru1), &grid.dy(&ru2), &grid.dx(&vq1), &grid.dy(&vq2)]);

    let (u1x, u1y, u2x, u2y) = (grid.dx(&w.u1), grid.dy(&w.u1), grid.dx(&w.u2), grid.dy(&w.u2));
    let mu: Vec<f64> = rho.iter().map(|&r| p.mu.value(r)).collect();
    let la: Vec<f64> = rho.iter().map(|&r| p.lambda.value(r)).collect();
    let n = nz * nc;
    let (mut s11, mut s12, mut s22) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    for i in 0..n {
        let j = i / nc;
        let tr = u1x[i] + u2y[i];
        s11[i] = (u1x[i] + u1x[i] - tr) * mu[j] + tr * la[j];
        s22[i] = (u2y[i] + u2y[i] - tr) * mu[j] + tr * la[j];
        s12[i] = (u1y[i] + u2x[i]) * mu[j];
    }
    let div1 = sum(&[&grid.dx(&s11), &grid.dy(&s12)]);
    let div2 = sum(&[&grid.dx(&s12), &grid.dy(&s22)]);
    let qx = grid.dx(&qq);
    let qy = grid.dy(&qq);
    let mut f1 = vec![T::zero(); n];
    let mut f2 = vec![T::zero(); n];
    for i in 0..n {
        let r = rho[i / nc];
        f1[i] = u1x[i] * (-gamma * gamma * r) + qx[i] * r - div1[i] * gamma;
        f2[i] = u2x[i] * (-gamma * gamma * r) + qy[i] * r - div2[i] * gamma;
    }
    let top = (nz - 1) * nc;
    let exx = grid.dx(&grid.dx(&w.eta));
    let rb = rho[nz - 1];
    let k1 = (0..nc).map(|c| s12[top + c] * gamma).collect();
    let k2 = (0..nc).map(|c| w.q[top + c] * (-rb) + s22[top + c] * gamma - exx[c] * p.tension).collect();
    Fields { g, f1, f2, k1, k2 }
}

fn sum<T: Scalar>(parts: &[&Vec<T>]) -> Vec<T> {
    let mut out = parts[0].clone();
    for p in &parts[1..] {
        for (o, &v) in out.iter_mut().zip(p.iter()) {
            *o += v;
        }
    }
    out
}

/// Which linear operator to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Jacobian of the full collocation system (forcing included).
    Full,
    /// Principal part with equilibrium coefficients.
    Principal,
}

#[derive(Debug, Clone)]
pub struct AssembleOptions {
    pub variant: Variant,
    pub reg: Option<Regularization>,
    pub exec: Exec,
    /// Use the per-mode block path when the operator is translation invariant.
    pub allow_fast_path: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions { variant: Variant::Full, reg: None, exec: Exec::default(), allow_fast_path: true }
    }
}

impl AssembleOptions {
    pub fn variant(mut self, v: Variant) -> Self {
        self.variant = v;
        self
    }
    pub fn reg(mut self, r: Option<Regularization>) -> Self {
        self.reg = r;
        self
    }
    pub fn exec(mut self, e: Exec) -> Self {
        self.exec = e;
        self
    }
    pub fn fast_path(mut self, on: bool) -> Self {
        self.allow_fast_path = on;
        self
    }
}

/// Linear rows of the chosen operator applied to `w` (value lane = background).
fn operator_rows<T: Scalar>(model: &Model, bg: &Background, w: &Unknowns<T>, opts: &AssembleOptions) -> Result<Vec<T>> {
    match opts.variant {
        Variant::Full => model.rows(w, &model.forcing, opts.reg.as_ref()),
        Variant::Principal => {
            let fl = principal_fields(model, bg, w);
            Ok(model.assemble_rows(w, &fl, opts.reg.as_ref()))
        }
    }
}

/// Apply the chosen operator to a direction without assembling it.
pub fn operator_apply(model: &Model, bg: &Background, direction: &[f64], opts: &AssembleOptions) -> Result<Vec<f64>> {
    let base = match opts.variant {
        Variant::Full => bg.state.to_vector(),
        Variant::Principal => vec![0.0; direction.len()],
    };
    let lanes: Vec<Dual<1>> = base.iter().zip(direction).map(|(&v, &d)| Dual::new(v, [d])).collect();
    let w = Unknowns::from_slice(&model.grid, &lanes);
    Ok(operator_rows(model, bg, &w, opts)?.iter().map(|x| x.d[0]).collect())
}

#[derive(Debug, Clone)]
pub struct OperatorMeta {
    pub variant: Variant,
    pub gamma: f64,
    pub reg: Option<(usize, f64)>,
    pub background_zero: bool,
    pub fast_path: bool,
}

enum Factored {
    Dense { data: Vec<f64>, lu: faer::linalg::solvers::PartialPivLu<f64> },
    Modal { n0: usize, nc: usize, blocks: Vec<(Vec<f64>, faer::linalg::solvers::PartialPivLu<f64>)> },
}

/// Assembled and factorized square operator over the stacked unknowns.
pub struct AssembledOperator {
    pub n: usize,
    pub meta: OperatorMeta,
    /// `max |U_ii| / min |U_ii|` over the factor(s).
    pub pivot_ratio: f64,
    fac: Factored,
}

impl std::fmt::Debug for AssembledOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AssembledOperator").field("n", &self.n).field("meta", &self.meta).field("pivot_ratio", &self.pivot_ratio).finish()
    }
}

fn factor(data: &[f64], n: usize, exec: Exec) -> Result<(faer::linalg::solvers::PartialPivLu<f64>, f64)> {
    faer::set_global_parallelism(exec.faer_par());
    let m = MatRef::from_column_major_slice(data, n, n);
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let ratio = hi / lo;
    if !(ratio.is_finite() && ratio < 1e15) {
        return Err(Error::Singular(format!("pivot ratio {ratio:.3e} in a {n}x{n} factorization")));
    }
    Ok((lu, ratio))
}

fn lu_solve(lu: &faer::linalg::solvers::PartialPivLu<f64>, rhs: &[f64]) -> Vec<f64> {
    let mut b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    lu.solve_in_place(b.as_mut());
    (0..rhs.len()).map(|i| b[(i, 0)]).collect()
}

fn matvec(data: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for (yi, a) in y.iter_mut().zip(&data[j * n..(j + 1) * n]) {
                *yi += a * xj;
            }
        }
    }
    y
}

/// Assemble the chosen operator at the background and factorize it.
pub fn assemble(model: &Model, bg: &Background, opts: &AssembleOptions) -> Result<AssembledOperator> {
    crate::exec::init_threads();
    let grid = &model.grid;
    let n = State::dim(grid);
    let invariant = bg.is_zero && (opts.variant == Variant::Principal || model.forcing.is_zero());
    let fast = opts.allow_fast_path && invariant;
    let meta = OperatorMeta {
        variant: opts.variant,
        gamma: model.gamma(),
        reg: opts.reg.as_ref().map(|r| (r.m, r.n)),
        background_zero: bg.is_zero,
        fast_path: fast,
    };
    if fast {
        let (n0, nc, blocks, ratio) = assemble_modal(model, bg, opts)?;
        return Ok(AssembledOperator { n, meta, pivot_ratio: ratio, fac: Factored::Modal { n0, nc, blocks } });
    }
    let data = dense_columns(model, bg, opts)?;
    let (lu, ratio) = factor(&data, n, opts.exec)?;
    Ok(AssembledOperator { n, meta, pivot_ratio: ratio, fac: Factored::Dense { data, lu } })
}

/// Column-major dense matrix of the operator via batched dual evaluations.
pub fn dense_columns(model: &Model, bg: &Background, opts: &AssembleOptions) -> Result<Vec<f64>> {
    let grid = &model.grid;
    let n = State::dim(grid);
    let base = match opts.variant {
        Variant::Full => bg.state.to_vector(),
        Variant::Principal => vec![0.0; n],
    };
    let mut data = vec![0.0; n * n];
    opts.exec.for_each_chunk(&mut data, LANES * n, |b, chunk| -> Result<()> {
        let c0 = b * LANES;
        let mut lanes: Vec<D8> = base.iter().map(|&v| D8::cst(v)).collect();
        for l in 0..LANES.min(n - c0) {
            lanes[c0 + l].d[l] = 1.0;
        }
        let w = Unknowns::from_slice(grid, &lanes);
        let rows = operator_rows(model, bg, &w, opts)?;
        for (l, col) in chunk.chunks_mut(n).enumerate() {
            for (dst, r) in col.iter_mut().zip(&rows) {
                *dst = r.d[l];
            }
        }
        Ok(())
    })?;
    Ok(data)
}

type ModalParts = (usize, usize, Vec<(Vec<f64>, faer::linalg::solvers::PartialPivLu<f64>)>, f64);

fn assemble_modal(model: &Model, bg: &Background, opts: &AssembleOptions) -> Result<ModalParts> {
    let grid = &model.grid;
    let nc = grid.nc();
    let kmax = grid.kmax();
    let n0 = 3 * grid.nz + 1;
    let n = n0 * nc;
    // lane t = 3 s + kind, kind 0: mean, 1: all cosines, 2: all sines
    let nl = 3 * n0;
    let batches = nl.div_ceil(LANES);
    let outs: Vec<Vec<Vec<f64>>> = opts.exec.try_map(batches, |b| -> Result<Vec<Vec<f64>>> {
        let mut lanes = vec![D8::cst(0.0); n];
        let count = LANES.min(nl - b * LANES);
        for l in 0..count {
            let t = b * LANES + l;
            let (s, kind) = (t / 3, t % 3);
            match kind {
                0 => lanes[s * nc].d[l] = 1.0,
                _ => {
                    for k in 1..=kmax {
                        lanes[s * nc + 2 * k - 2 + kind].d[l] = 1.0;
                    }
                }
            }
        }
        let w = Unknowns::from_slice(grid, &lanes);
        let rows = operator_rows(model, bg, &w, opts)?;
        Ok((0..count).map(|l| rows.iter().map(|r| r.d[l]).collect()).collect())
    })?;
    let cols: Vec<Vec<f64>> = outs.into_iter().flatten().collect();
    let mut mats = Vec::with_capacity(kmax + 1);
    let mut m0 = vec![0.0; n0 * n0];
    for s in 0..n0 {
        for r in 0..n0 {
            m0[s * n0 + r] = cols[3 * s][r * nc];
        }
    }
    mats.push((m0, n0));
    for k in 1..=kmax {
        let m = 2 * n0;
        let mut mk = vec![0.0; m * m];
        for s in 0..n0 {
            for (kind, col) in [(0usize, &cols[3 * s + 1]), (1, &cols[3 * s + 2])] {
                let cidx = 2 * s + kind;
                for r in 0..n0 {
                    mk[cidx * m + 2 * r] = col[r * nc + 2 * k - 1];
                    mk[cidx * m + 2 * r + 1] = col[r * nc + 2 * k];
                }
            }
        }
        mats.push((mk, m));
    }
    let factored = Exec::Sequential.try_map(mats.len(), |i| -> Result<(Vec<f64>, faer::linalg::solvers::PartialPivLu<f64>, f64)> {
        let (data, m) = &mats[i];
        let (lu, r) = factor(data, *m, Exec::Sequential).map_err(|e| Error::Singular(format!("mode {i}: {e}")))?;
        Ok((data.clone(), lu, r))
    })?;
    let ratio = factored.iter().fold(0.0f64, |m, f| m.max(f.2));
    Ok((n0, nc, factored.into_iter().map(|(d, l, _)| (d, l)).collect(), ratio))
}

impl AssembledOperator {
    fn modal_map(&self, x: &[f64], f: impl Fn(usize, &[f64]) -> Vec<f64>) -> Vec<f64> {
        let Factored::Modal { n0, nc, blocks } = &self.fac else { unreachable!() };
        let (n0, nc) = (*n0, *nc);
        let mut out = vec![0.0; self.n];
        let x0: Vec<f64> = (0..n0).map(|s| x[s * nc]).collect();
        for (s, v) in f(0, &x0).into_iter().enumerate() {
            out[s * nc] = v;
        }
        for k in 1..blocks.len() {
            let xk: Vec<f64> = (0..2 * n0).map(|i| x[(i / 2) * nc + 2 * k - 1 + i % 2]).collect();
            for (i, v) in f(k, &xk).into_iter().enumerate() {
                out[(i / 2) * nc + 2 * k - 1 + i % 2] = v;
            }
        }
        out
    }

    /// `x = A^{-1} rhs` with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::Format(format!("right-hand side has length {}, expected {}", rhs.len(), self.n)));
        }
        let once = |b: &[f64]| -> Vec<f64> {
            match &self.fac {
                Factored::Dense { lu, .. } => lu_solve(lu, b),
                Factored::Modal { blocks, .. } => self.modal_map(b, |k, v| lu_solve(&blocks[k].1, v)),
            }
        };
        let mut x = once(rhs);
        let r: Vec<f64> = rhs.iter().zip(self.apply(&x)).map(|(b, ax)| b - ax).collect();
        for (xi, d) in x.iter_mut().zip(once(&r)) {
            *xi += d;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite solution".into()));
        }
        Ok(x)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.fac {
            Factored::Dense { data, .. } => matvec(data, self.n, x),
            Factored::Modal { blocks, .. } => self.modal_map(x, |k, v| matvec(&blocks[k].0, v.len(), v)),
        }
    }

    /// Solve with data given as a residual triple (bottom trace and kinematic data zero).
    pub fn solve_residual(&self, grid: &Grid, data: &Residual, reg: Option<&Regularization>) -> Result<State> {
        Ok(State::from_vector(grid, &self.solve(&rows_from_data(grid, data, reg))?))
    }

    /// Dense column-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.fac {
            Factored::Dense { data, .. } => data.clone(),
            Factored::Modal { .. } => {
                let mut out = vec![0.0; self.n * self.n];
                let mut e = vec![0.0; self.n];
                for j in 0..self.n {
                    e[j] = 1.0;
                    out[j * self.n..(j + 1) * self.n].copy_from_slice(&self.apply(&e));
                    e[j] = 0.0;
                }
                out
            }
        }
    }

    /// Largest entry coupling distinct horizontal modes, relative to the largest entry.
    pub fn off_block_ratio(&self, grid: &Grid) -> f64 {
        let nc = grid.nc();
        let mode = |i: usize| (i % nc).div_ceil(2);
        let d = self.to_dense();
        let (mut off, mut all) = (0.0f64, 0.0f64);
        for j in 0..self.n {
            for i in 0..self.n {
                let v = d[j * self.n + i].abs();
                all = all.max(v);
                if mode(i) != mode(j) {
                    off = off.max(v);
                }
            }
        }
        off / all
    }

    /// Coordinate-format dump: one `row col value` line per nonzero.
    pub fn dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.to_dense();
        writeln!(out, "# {} x {} {:?}", self.n, self.n, self.meta.variant)?;
        for j in 0..self.n {
            for i in 0..self.n {
                let v = d[j * self.n + i];
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v:e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Right-hand side rows for data `(g, f, k)`.
pub fn rows_from_data(grid: &Grid, data: &Residual, reg: Option<&Regularization>) -> Vec<f64> {
    let (nz, nc) = (grid.nz, grid.nc());
    let s = nz * nc;
    let mut out = vec![0.0; 3 * s + nc];
    out[..s].copy_from_slice(&data.g);
    for (blk, (f, k)) in [(&data.f1, &data.k1), (&data.f2, &data.k2)].into_iter().enumerate() {
        let o = &mut out[(blk + 1) * s..(blk + 2) * s];
        o[nc..s - nc].copy_from_slice(&f[nc..s - nc]);
        o[s - nc..].copy_from_slice(k);
    }
    if let Some(r) = reg {
        for i in 0..r.m {
            out[i * nc..(i + 1) * nc].fill(0.0);
            out[(nz - 1 - i) * nc..(nz - i) * nc].fill(0.0);
        }
    }
    let (ja, jb) = Regularization::pin_rows(reg, nz);
    out[ja * nc] = data.f2[0];
    out[jb * nc] = 0.0;
    out
}
