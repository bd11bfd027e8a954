//! The flattened traveling-wave operator, forcing data, and the collocation
//! system built from it.
//!
//! States and residuals are stored as coefficient slabs (see [`crate::spaces`]).
//! Every pointwise nonlinearity is evaluated on the 3/2-padded grid and its
//! output truncated back to the retained modes.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use crate::equilibrium::{build_profile, EquilibriumProfile, PhysicalParams};
use crate::error::{Error, Result};
use crate::geometry::{extension_fields, mean_curvature, sinh_ratio, Extension};
use crate::scalar::Scalar;
use rand::Rng;

use crate::spaces::{random_row, Grid};

/// Solution triple `(q, u, eta)` as coefficient slabs.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub eta: Vec<f64>,
}

impl State {
    pub fn zeros(grid: &Grid) -> Self {
        let s = grid.nz * grid.nc();
        State { q: vec![0.0; s], u1: vec![0.0; s], u2: vec![0.0; s], eta: vec![0.0; grid.nc()] }
    }

    pub fn dim(grid: &Grid) -> usize {
        (3 * grid.nz + 1) * grid.nc()
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.q.len() + self.eta.len());
        v.extend_from_slice(&self.q);
        v.extend_from_slice(&self.u1);
        v.extend_from_slice(&self.u2);
        v.extend_from_slice(&self.eta);
        v
    }

    pub fn from_vector(grid: &Grid, v: &[f64]) -> Self {
        let s = grid.nz * grid.nc();
        State { q: v[..s].to_vec(), u1: v[s..2 * s].to_vec(), u2: v[2 * s..3 * s].to_vec(), eta: v[3 * s..].to_vec() }
    }

    /// From nodal samples (`nz` rows of `nx` values; `eta` has `nx` values).
    pub fn from_values(grid: &Grid, q: &[f64], u1: &[f64], u2: &[f64], eta: &[f64]) -> Self {
        State { q: grid.from_values(q), u1: grid.from_values(u1), u2: grid.from_values(u2), eta: grid.from_values(eta) }
    }

    /// Nodal samples `(q, u1, u2, eta)`.
    pub fn values(&self, grid: &Grid) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (grid.to_values(&self.q), grid.to_values(&self.u1), grid.to_values(&self.u2), grid.to_values(&self.eta))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| a * x).collect();
        State { q: s(&self.q), u1: s(&self.u1), u2: s(&self.u2), eta: s(&self.eta) }
    }

    /// `self + a * o`
    pub fn axpy(&self, a: f64, o: &State) -> Self {
        let f = |x: &Vec<f64>, y: &Vec<f64>| x.iter().zip(y).map(|(x, y)| x + a * y).collect();
        State { q: f(&self.q, &o.q), u1: f(&self.u1, &o.u1), u2: f(&self.u2, &o.u2), eta: f(&self.eta, &o.eta) }
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vector().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Smooth random state band-limited to `k <= N_x/4`, scaled so the largest
    /// coefficient is `amplitude`; `eta` has zero mean.
    pub fn random<R: Rng>(grid: &Grid, rng: &mut R, amplitude: f64) -> Self {
        let kmax = grid.nx / 4;
        let nc = grid.nc();
        let slab = |rng: &mut R| -> Vec<f64> {
            let mut out = vec![0.0; grid.nz * nc];
            for p in 0..4 {
                let row = random_row(grid, rng, kmax, 2.0, false);
                for j in 0..grid.nz {
                    let prof = (p as f64 * PI * grid.y[j] / grid.b).cos() / (1.0 + p as f64);
                    for c in 0..nc {
                        out[j * nc + c] += prof * row[c];
                    }
                }
            }
            out
        };
        let (q, u1, u2) = (slab(rng), slab(rng), slab(rng));
        let eta = random_row(grid, rng, kmax, 2.0, true);
        let st = State { q, u1, u2, eta };
        let m = st.max_abs();
        st.scaled(amplitude / m)
    }

    pub fn unknowns(&self) -> Unknowns<f64> {
        Unknowns { q: self.q.clone(), u1: self.u1.clone(), u2: self.u2.clone(), eta: self.eta.clone() }
    }
}

/// Residual `(g, f, k)` as coefficient slabs (`k` on the surface).
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub g: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
}

impl Residual {
    pub fn zeros(grid: &Grid) -> Self {
        let s = grid.nz * grid.nc();
        let nc = grid.nc();
        Residual { g: vec![0.0; s], f1: vec![0.0; s], f2: vec![0.0; s], k1: vec![0.0; nc], k2: vec![0.0; nc] }
    }

    pub fn sub(&self, o: &Residual) -> Residual {
        let d = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Residual { g: d(&self.g, &o.g), f1: d(&self.f1, &o.f1), f2: d(&self.f2, &o.f2), k1: d(&self.k1, &o.k1), k2: d(&self.k2, &o.k2) }
    }

    /// `[g, f1, f2, k1, k2]` concatenated.
    pub fn to_vector(&self) -> Vec<f64> {
        [&self.g, &self.f1, &self.f2, &self.k1, &self.k2].iter().flat_map(|v| v.iter().copied()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        [&self.g, &self.f1, &self.f2, &self.k1, &self.k2].iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Unknowns over an arbitrary scalar type.
#[derive(Debug, Clone)]
pub struct Unknowns<T> {
    pub q: Vec<T>,
    pub u1: Vec<T>,
    pub u2: Vec<T>,
    pub eta: Vec<T>,
}

impl<T: Scalar> Unknowns<T> {
    pub fn from_slice(grid: &Grid, v: &[T]) -> Self {
        let s = grid.nz * grid.nc();
        Unknowns { q: v[..s].to_vec(), u1: v[s..2 * s].to_vec(), u2: v[2 * s..3 * s].to_vec(), eta: v[3 * s..].to_vec() }
    }
}

/// Residual fields over an arbitrary scalar type.
#[derive(Debug, Clone)]
pub struct Fields<T> {
    pub g: Vec<T>,
    pub f1: Vec<T>,
    pub f2: Vec<T>,
    pub k1: Vec<T>,
    pub k2: Vec<T>,
}

impl Fields<f64> {
    pub fn into_residual(self) -> Residual {
        Residual { g: self.g, f1: self.f1, f2: self.f2, k1: self.k1, k2: self.k2 }
    }
}

// ---------------------------------------------------------------- forcing

/// Scalar field on the plane with its vertical derivative.
pub trait ScalarField: Send + Sync + Debug {
    /// `(phi(x, y), d_y phi(x, y))`
    fn eval(&self, x: f64, y: f64) -> (f64, f64);
}

/// Vector field on the plane with its vertical derivative.
pub trait VectorField: Send + Sync + Debug {
    /// `(F(x, y), d_y F(x, y))`
    fn eval(&self, x: f64, y: f64) -> ([f64; 2], [f64; 2]);
}

/// `phi(x) = A exp(-(d/w)^2)` with `d` the periodic distance to the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPressure {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub period: f64,
}

impl GaussianPressure {
    pub fn value(&self, x: f64) -> f64 {
        let d = (x - self.center + 0.5 * self.period).rem_euclid(self.period) - 0.5 * self.period;
        self.amplitude * (-(d / self.width).powi(2)).exp()
    }
}

impl ScalarField for GaussianPressure {
    fn eval(&self, x: f64, _y: f64) -> (f64, f64) {
        (self.value(x), 0.0)
    }
}

/// Stress `T = -phi I` plus bulk forces `G` (per unit density) and `F`,
/// and the wave speed.
#[derive(Debug, Clone)]
pub struct Forcing {
    pub pressure: Option<Arc<dyn ScalarField>>,
    pub bulk_g: Option<Arc<dyn VectorField>>,
    pub bulk_f: Option<Arc<dyn VectorField>>,
    pub gamma: f64,
}

impl Forcing {
    pub fn zero(gamma: f64) -> Self {
        Forcing { pressure: None, bulk_g: None, bulk_f: None, gamma }
    }

    pub fn gaussian_pressure(p: GaussianPressure, gamma: f64) -> Self {
        Forcing { pressure: Some(Arc::new(p)), bulk_g: None, bulk_f: None, gamma }
    }

    pub fn is_zero(&self) -> bool {
        self.pressure.is_none() && self.bulk_g.is_none() && self.bulk_f.is_none()
    }

    /// Same fields with the wave speed replaced.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Forcing { gamma, ..self.clone() }
    }

    /// Same wave speed, no fields.
    pub fn stripped(&self) -> Self {
        Forcing::zero(self.gamma)
    }
}

fn compose<T: Scalar>(y: T, v: f64, dy: f64) -> T {
    y.chain(v, dy)
}

// ---------------------------------------------------------------- model

/// `(m, N)` regularization of the collocation system.
#[derive(Debug, Clone)]
pub struct Regularization {
    pub m: usize,
    pub n: f64,
    /// `D^p` for `p = 0..=2m`.
    pub dpow: Vec<Vec<f64>>,
}

impl Regularization {
    pub fn new(grid: &Grid, m: usize, n: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Constraint(format!("regularization order m = {m} must be at least 2")));
        }
        if 2 * m + 2 > grid.nz {
            return Err(Error::Grid(format!("N_z = {} too small for m = {m}", grid.nz)));
        }
        Ok(Regularization { m, n, dpow: (0..=2 * m).map(|p| grid.dy_power(p)).collect() })
    }

    /// Rows at which the zero-mode substitutions go.
    pub fn pin_rows(reg: Option<&Regularization>, nz: usize) -> (usize, usize) {
        let j = reg.map_or(0, |r| r.m);
        (j, nz - 1 - j)
    }
}

/// Everything needed to evaluate the operator.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub profile: EquilibriumProfile,
    pub forcing: Forcing,
    pub ext: Extension,
    xpad: Vec<f64>,
}

impl Model {
    pub fn new(grid: Grid, params: PhysicalParams, forcing: Forcing) -> Result<Self> {
        if params.n != 2 {
            return Err(Error::Constitutive(format!("the solver handles n = 2 only, got {}", params.n)));
        }
        if (params.b - grid.b).abs() > 1e-14 * params.b {
            return Err(Error::Grid(format!("grid depth {} differs from b = {}", grid.b, params.b)));
        }
        if grid.nz % 2 == 1 {
            // the zero-mode block is singular on an odd number of Chebyshev nodes
            return Err(Error::Grid(format!("N_z = {} must be even", grid.nz)));
        }
        if !(forcing.gamma > 0.0) {
            return Err(Error::Constraint(format!("wave speed {} must be positive", forcing.gamma)));
        }
        let profile = build_profile(&params, &grid.y)?;
        params.validate(&profile.rho)?;
        let ext = Extension::new(&grid);
        let xpad = grid.x(grid.mx);
        Ok(Model { grid, params, profile, forcing, ext, xpad })
    }

    pub fn with_forcing(&self, forcing: Forcing) -> Self {
        Model { forcing, ..self.clone() }
    }

    pub fn gamma(&self) -> f64 {
        self.forcing.gamma
    }

    fn guard(&self, h: f64, ix: usize, iy: usize) -> Result<()> {
        let (lo, hi) = self.profile.guard_interval();
        if !(h > lo && h < hi) {
            return Err(Error::Vacuum { ix, iy, h });
        }
        Ok(())
    }

    fn sigma_of<T: Scalar>(&self, h: T) -> Result<T> {
        let (s, ds) = self.profile.inverse_enthalpy_with_deriv(h.re())?;
        Ok(h.chain(s, ds))
    }

    /// `sigma = H^{-1}(-g y + q + g (eta - E eta))` at the nodes.
    pub fn sigma(&self, state: &State) -> Result<Vec<f64>> {
        let g = &self.grid;
        let e = self.ext.apply(&state.eta);
        let gv = self.params.g;
        let mut h: Vec<f64> = state.q.iter().zip(&e).zip(g.broadcast(&state.eta)).map(|((q, e), eta)| q + gv * (eta - e)).collect();
        h = g.to_values(&h);
        let nx = g.nx;
        let mut out = Vec::with_capacity(h.len());
        for (idx, hv) in h.iter().enumerate() {
            let v = hv - gv * g.y[idx / nx];
            self.guard(v, idx % nx, idx / nx)?;
            out.push(self.profile.inverse_enthalpy(v)?);
        }
        Ok(out)
    }

    pub fn residual(&self, state: &State) -> Result<Residual> {
        Ok(self.evaluate(&state.unknowns(), &self.forcing)?.into_residual())
    }

    /// `Psi(w) + Phi(w; forcing)` at arbitrary scalar type.
    pub fn evaluate<T: Scalar>(&self, w: &Unknowns<T>, forcing: &Forcing) -> Result<Fields<T>> {
        let grid = &self.grid;
        let (nz, mx) = (grid.nz, grid.mx);
        let p = &self.params;
        let gv = p.g;
        let gamma = forcing.gamma;

        let (e, a, ey) = extension_fields(grid, &self.ext, &w.eta);
        let pe = grid.pad(&e);
        let pa = grid.pad(&a);
        let pj = grid.pad(&ey);
        let pq = grid.pad(&w.q);
        let pu1 = grid.pad(&w.u1);
        let pu2 = grid.pad(&w.u2);
        let peta = grid.pad(&w.eta);

        let np = nz * mx;
        let mut jac = vec![T::zero(); np];
        let (mut w1, mut w2) = (vec![T::zero(); np], vec![T::zero(); np]);
        let (mut m1, mut m2) = (vec![T::zero(); np], vec![T::zero(); np]);
        let mut sig = vec![T::zero(); np];
        for jy in 0..nz {
            let y = grid.y[jy];
            for i in 0..mx {
                let k = jy * mx + i;
                let jk = pj[k] + 1.0;
                if jk.re() <= 0.0 {
                    return Err(Error::Geometry(jk.re()));
                }
                let h = pq[k] + (peta[i] - pe[k]) * gv - gv * y;
                self.guard(h.re(), i, jy)?;
                let s = self.sigma_of(h)?;
                let w1k = pu1[k] / jk;
                jac[k] = jk;
                w1[k] = w1k;
                w2[k] = pa[k] * w1k + pu2[k];
                m1[k] = s * (pu1[k] - jk);
                m2[k] = s * (pu2[k] + pa[k]);
                sig[k] = s;
            }
        }
        let (w1c, w2c) = (grid.unpad(&w1), grid.unpad(&w2));
        let (m1c, m2c) = (grid.unpad(&m1), grid.unpad(&m2));
        let sigc = grid.unpad(&sig);
        let g: Vec<T> = add(&grid.dx(&m1c), &grid.dy(&m2c));

        let etax = grid.dx(&w.eta);
        let qx: Vec<T> = grid.dx(&w.q).iter().zip(grid.broadcast(&etax)).map(|(&a, b)| a + b * gv).collect();
        let qy = grid.dy(&w.q);
        let curv = mean_curvature(grid, &w.eta);

        let ps = grid.pad(&sigc);
        let (pw1x, pw1y) = (grid.pad(&grid.dx(&w1c)), grid.pad(&grid.dy(&w1c)));
        let (pw2x, pw2y) = (grid.pad(&grid.dx(&w2c)), grid.pad(&grid.dy(&w2c)));
        let (pqx, pqy) = (grid.pad(&qx), grid.pad(&qy));
        let pcurv = grid.pad(&curv);

        let mut t11 = vec![T::zero(); np];
        let mut t12 = vec![T::zero(); np];
        let mut t21 = vec![T::zero(); np];
        let mut t22 = vec![T::zero(); np];
        let mut p1 = vec![T::zero(); np];
        let mut p2 = vec![T::zero(); np];
        let mut kp1 = vec![T::zero(); mx];
        let mut kp2 = vec![T::zero(); mx];
        for jy in 0..nz {
            let y = grid.y[jy];
            for i in 0..mx {
                let k = jy * mx + i;
                let (jk, ak, s) = (jac[k], pa[k], ps[k]);
                let ij = jk.recip();
                let g11 = pw1x[k] - pw1y[k] * ak * ij;
                let g12 = pw1y[k] * ij;
                let g21 = pw2x[k] - pw2y[k] * ak * ij;
                let g22 = pw2y[k] * ij;
                let tr = g11 + g22;
                let mu = s.chain(p.mu.value(s.re()), p.mu.deriv(s.re()));
                let la = s.chain(p.lambda.value(s.re()), p.lambda.deriv(s.re()));
                // n = 2: the trace-free part subtracts tr I
                let s11 = mu * (g11 + g11 - tr) + la * tr;
                let s22 = mu * (g22 + g22 - tr) + la * tr;
                let s12 = mu * (g12 + g21);
                let s21 = s12;
                t11[k] = jk * s11;
                t21[k] = jk * s21;
                t12[k] = s12 - ak * s11;
                t22[k] = s22 - ak * s21;

                let c1 = pu1[k] - jk;
                let c2 = pu2[k] + ak;
                let adv1 = c1 * pw1x[k] + c2 * pw1y[k];
                let adv2 = c1 * pw2x[k] + c2 * pw2y[k];
                let mut r1 = s * (adv1 + ak * adv2) * ij * (gamma * gamma) + s * pqx[k];
                let mut r2 = s * adv2 * (gamma * gamma) + s * pqy[k];
                if forcing.bulk_g.is_some() || forcing.bulk_f.is_some() {
                    let yf = pe[k] + y;
                    let x = self.xpad[i];
                    let mut v1 = T::zero();
                    let mut v2 = T::zero();
                    if let Some(gf) = &forcing.bulk_g {
                        let (val, d) = gf.eval(x, yf.re());
                        v1 += s * compose(yf, val[0], d[0]);
                        v2 += s * compose(yf, val[1], d[1]);
                    }
                    if let Some(ff) = &forcing.bulk_f {
                        let (val, d) = ff.eval(x, yf.re());
                        v1 += compose(yf, val[0], d[0]);
                        v2 += compose(yf, val[1], d[1]);
                    }
                    r1 -= v1 + ak * v2;
                    r2 -= jk * v2;
                }
                p1[k] = r1;
                p2[k] = r2;

                if jy == nz - 1 {
                    let pr = s.chain(p.pressure.value(s.re()) - p.p_ext, p.pressure.deriv(s.re()));
                    let mut coef = -pr - pcurv[i] * p.tension;
                    if let Some(phi) = &forcing.pressure {
                        let yf = pe[k] + y;
                        let (v, d) = phi.eval(self.xpad[i], yf.re());
                        coef += compose(yf, v, d);
                    }
                    kp1[i] = -(coef * ak) + t12[k] * gamma;
                    kp2[i] = coef + t22[k] * gamma;
                }
            }
        }
        let (t11c, t12c, t21c, t22c) = (grid.unpad(&t11), grid.unpad(&t12), grid.unpad(&t21), grid.unpad(&t22));
        let (p1c, p2c) = (grid.unpad(&p1), grid.unpad(&p2));
        let (k1, k2) = (grid.unpad(&kp1), grid.unpad(&kp2));

        let d1 = grid.pad(&add(&grid.dx(&t11c), &grid.dy(&t12c)));
        let d2 = grid.pad(&add(&grid.dx(&t21c), &grid.dy(&t22c)));
        let mut v1 = vec![T::zero(); np];
        for k in 0..np {
            v1[k] = (d1[k] + pa[k] * d2[k]) / jac[k];
        }
        let v1c = grid.unpad(&v1);
        let d2c = grid.unpad(&d2);
        let f1 = p1c.iter().zip(&v1c).map(|(&a, &b)| a - b * gamma).collect();
        let f2 = p2c.iter().zip(&d2c).map(|(&a, &b)| a - b * gamma).collect();
        Ok(Fields { g, f1, f2, k1, k2 })
    }

    /// Kinematic defect `u2(b) + d_1 eta` as coefficients.
    pub fn kinematic<T: Scalar>(&self, w: &Unknowns<T>) -> Vec<T> {
        let g = &self.grid;
        add(g.row(&w.u2, g.nz - 1), &g.dx(&w.eta))
    }

    /// Collocation rows: continuity at every node, momentum in the interior,
    /// bottom no-slip and dynamic rows on the walls, kinematic rows for `eta`,
    /// with the zero-mode substitutions and optional regularization.
    pub fn rows<T: Scalar>(&self, w: &Unknowns<T>, forcing: &Forcing, reg: Option<&Regularization>) -> Result<Vec<T>> {
        let fields = self.evaluate(w, forcing)?;
        Ok(self.assemble_rows(w, &fields, reg))
    }

    pub fn assemble_rows<T: Scalar>(&self, w: &Unknowns<T>, fl: &Fields<T>, reg: Option<&Regularization>) -> Vec<T> {
        let grid = &self.grid;
        let (nz, nc) = (grid.nz, grid.nc());
        let s = nz * nc;
        let mut out = vec![T::zero(); 3 * s + nc];
        out[..s].copy_from_slice(&fl.g);
        for (blk, (f, u, k)) in [(&fl.f1, &w.u1, &fl.k1), (&fl.f2, &w.u2, &fl.k2)].into_iter().enumerate() {
            let o = &mut out[(blk + 1) * s..(blk + 2) * s];
            o[nc..s - nc].copy_from_slice(&f[nc..s - nc]);
            o[..nc].copy_from_slice(&u[..nc]);
            o[s - nc..].copy_from_slice(k);
        }
        let mut kin = self.kinematic(w);
        if let Some(r) = reg {
            let m = r.m as i32;
            let inv = 1.0 / r.n;
            let frac = grid.multiplier(&w.eta, |xi| (2.0 * PI * xi).powf(2.0 * m as f64 - 0.5));
            for (k, f) in kin.iter_mut().zip(&frac) {
                *k -= *f * inv;
            }
            let qq: Vec<T> = w.q.iter().zip(grid.broadcast(&w.eta)).map(|(&q, e)| q + e * self.params.g).collect();
            let horiz = grid.multiplier(&qq, |xi| (2.0 * PI * xi).powi(2 * m));
            let vert = grid.apply_vertical(&r.dpow[2 * r.m], &w.q);
            let sign = if r.m % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..s {
                out[i] += (horiz[i] + vert[i] * sign) * inv;
            }
            for i in 0..r.m {
                let d = grid.apply_vertical(&r.dpow[r.m + i], &w.q);
                out[i * nc..(i + 1) * nc].copy_from_slice(grid.row(&d, 0));
                out[(nz - 1 - i) * nc..(nz - i) * nc].copy_from_slice(grid.row(&d, nz - 1));
            }
        }
        let (ja, jb) = Regularization::pin_rows(reg, nz);
        out[ja * nc] = fl.f2[0];
        out[jb * nc] = w.eta[0];
        out[3 * s..].copy_from_slice(&kin);
        out
    }

    /// The full collocation rows at a state, in `f64`.
    pub fn rows_at(&self, state: &State, reg: Option<&Regularization>) -> Result<Vec<f64>> {
        self.rows(&state.unknowns(), &self.forcing, reg)
    }

    /// Bottom trace `u(x, 0)` and kinematic defect, as coefficient rows.
    pub fn constraint_defects(&self, state: &State) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        (g.row(&state.u1, 0).to_vec(), g.row(&state.u2, 0).to_vec(), self.kinematic(&state.unknowns()))
    }

    /// Eulerian density and velocity at the image points `F_eta(x, y)`.
    pub fn to_eulerian(&self, state: &State) -> Result<Eulerian> {
        let g = &self.grid;
        let geo = crate::geometry::build_geometry(g, &state.eta)?;
        let sigma = self.sigma(state)?;
        let (_, u1, u2, _) = state.values(g);
        let nx = g.nx;
        let x = g.x(nx);
        let mut e = Eulerian { x: Vec::new(), y: geo.flat_y.clone(), sigma, v1: Vec::new(), v2: Vec::new() };
        for k in 0..u1.len() {
            let (j, a) = (geo.jac[k], geo.a[k]);
            let v1 = u1[k] / j;
            e.x.push(x[k % nx]);
            e.v1.push(v1);
            e.v2.push(a * v1 + u2[k]);
        }
        Ok(e)
    }

    /// Inverse change of unknowns: `u = M v`, `q` from `sigma`, given `eta`.
    pub fn from_eulerian(&self, eul: &Eulerian, eta: &[f64]) -> Result<State> {
        let g = &self.grid;
        let geo = crate::geometry::build_geometry(g, eta)?;
        let nx = g.nx;
        let mut q = Vec::with_capacity(eul.sigma.len());
        let (mut u1, mut u2) = (Vec::new(), Vec::new());
        let etav = g.to_values(eta);
        for k in 0..eul.sigma.len() {
            let (j, a) = (geo.jac[k], geo.a[k]);
            u1.push(j * eul.v1[k]);
            u2.push(-a * eul.v1[k] + eul.v2[k]);
            let y = g.y[k / nx];
            let h = self.profile.enthalpy(eul.sigma[k])?;
            q.push(h + self.params.g * y - self.params.g * (etav[k % nx] - geo.ext[k]));
        }
        Ok(State::from_values(g, &q, &u1, &u2, &etav))
    }

    /// Enforce zero bottom trace and the kinematic condition by subtracting
    /// a mode-wise harmonic correction; the mean of `eta` is removed.
    pub fn kinematic_project(&self, state: &State) -> State {
        kinematic_project(&self.grid, state)
    }
}

/// Sampled Eulerian fields on the deformed slab.
#[derive(Debug, Clone)]
pub struct Eulerian {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

pub fn kinematic_project(grid: &Grid, state: &State) -> State {
    let (nz, nc) = (grid.nz, grid.nc());
    let mut out = state.clone();
    out.eta[0] = 0.0;
    let top_u2: Vec<f64> = add(grid.row(&state.u2, nz - 1), &grid.dx(&out.eta));
    let bot1 = grid.row(&state.u1, 0).to_vec();
    let bot2 = grid.row(&state.u2, 0).to_vec();
    for c in 0..nc {
        let w = 2.0 * PI * grid.xi_of(c);
        for j in 0..nz {
            let y = grid.y[j];
            let up = sinh_ratio(w, y, grid.b);
            let down = sinh_ratio(w, grid.b - y, grid.b);
            out.u1[j * nc + c] -= bot1[c] * down;
            out.u2[j * nc + c] -= bot2[c] * down + top_u2[c] * up;
        }
    }
    out
}

fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}
