//! Identity-level checks on computed states: the dissipation-power balance,
//! the background-adapted norm, and a sanity suite (vacuum margins,
//! diffeomorphism, Korn ratio, surface decay, divergence compatibility).

use std::f64::consts::PI;
use std::fmt::Write;

use crate::error::Result;
use crate::geometry::{build_geometry, extension_fields};
use crate::linear::v_field;
use crate::operators::{Model, State};
use crate::spaces::{hminus1_lenient, sobolev_norm_slab, xspace_norm, Grid};

/// Nodal fields on the padded grid.
struct Flow {
    mx: usize,
    jac: Vec<f64>,
    a: Vec<f64>,
    flat_y: Vec<f64>,
    sig: Vec<f64>,
    u: [Vec<f64>; 2],
    w: [Vec<f64>; 2],
    /// Flat-frame velocity gradient `G_ik = (grad w A^t)_ik`.
    grad: [Vec<f64>; 4],
    q: Vec<f64>,
}

fn flow(model: &Model, state: &State) -> Result<Flow> {
    let grid = &model.grid;
    let (nz, mx) = (grid.nz, grid.mx);
    let gv = model.params.g;
    let (e, a, ey) = extension_fields(grid, &model.ext, &state.eta);
    let (pe, pa, pj) = (grid.pad(&e), grid.pad(&a), grid.pad(&ey));
    let (pq, pu1, pu2, peta) = (grid.pad(&state.q), grid.pad(&state.u1), grid.pad(&state.u2), grid.pad(&state.eta));
    let np = nz * mx;
    let mut f = Flow {
        mx,
        jac: vec![0.0; np],
        a: pa.clone(),
        flat_y: vec![0.0; np],
        sig: vec![0.0; np],
        u: [pu1.clone(), pu2.clone()],
        w: [vec![0.0; np], vec![0.0; np]],
        grad: [vec![0.0; np], vec![0.0; np], vec![0.0; np], vec![0.0; np]],
        q: pq.clone(),
    };
    for k in 0..np {
        let y = grid.y[k / mx];
        let j = 1.0 + pj[k];
        f.jac[k] = j;
        f.flat_y[k] = y + pe[k];
        f.sig[k] = model.profile.inverse_enthalpy(pq[k] + gv * (peta[k % mx] - pe[k]) - gv * y)?;
        f.w[0][k] = pu1[k] / j;
        f.w[1][k] = pa[k] * pu1[k] / j + pu2[k];
    }
    let wc = [grid.unpad(&f.w[0]), grid.unpad(&f.w[1])];
    for i in 0..2 {
        let (wx, wy) = (grid.pad(&grid.dx(&wc[i])), grid.pad(&grid.dy(&wc[i])));
        for k in 0..np {
            f.grad[2 * i][k] = wx[k] - wy[k] * f.a[k] / f.jac[k];
            f.grad[2 * i + 1][k] = wy[k] / f.jac[k];
        }
    }
    Ok(f)
}

/// Quadrature weight of padded node `k`.
fn weight(grid: &Grid, mx: usize, k: usize) -> f64 {
    grid.w[k / mx] * grid.l / mx as f64
}

/// Both sides of the dissipation-power identity.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub dissipation: f64,
    /// Work of the surface stress and of the bulk forces.
    pub surface_power: f64,
    pub bulk_power: f64,
    pub imbalance: f64,
}

impl BalanceReport {
    pub fn power(&self) -> f64 {
        self.surface_power + self.bulk_power
    }

    pub fn to_text(&self, prefix: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{prefix}dissipation = {:.12e}", self.dissipation);
        let _ = writeln!(s, "{prefix}surface_power = {:.12e}", self.surface_power);
        let _ = writeln!(s, "{prefix}bulk_power = {:.12e}", self.bulk_power);
        let _ = writeln!(s, "{prefix}imbalance = {:.6e}", self.imbalance);
        s
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn dissipation(model: &Model, f: &Flow) -> f64 {
    let grid = &model.grid;
    let p = &model.params;
    let gamma = model.gamma();
    let mut total = 0.0;
    for k in 0..f.jac.len() {
        let [g11, g12, g21, g22] = [f.grad[0][k], f.grad[1][k], f.grad[2][k], f.grad[3][k]];
        let tr = g11 + g22;
        let (d11, d22, d12) = (2.0 * g11 - tr, 2.0 * g22 - tr, g12 + g21);
        let dd = d11 * d11 + d22 * d22 + 2.0 * d12 * d12;
        let s = f.sig[k];
        total += weight(grid, f.mx, k) * gamma * f.jac[k] * (0.5 * p.mu.value(s) * dd + p.lambda.value(s) * tr * tr);
    }
    total
}

/// Dissipation against the work done by the forcing, for a solution of the
/// forced system: `D = int_top phi N.w ... + int J (sigma G + F).w`.
pub fn power_balance(model: &Model, state: &State) -> Result<BalanceReport> {
    let grid = &model.grid;
    let f = flow(model, state)?;
    let mx = f.mx;
    let xs = grid.x(mx);
    let d = dissipation(model, &f);
    let forcing = &model.forcing;
    let top = (grid.nz - 1) * mx;
    let mut surface = 0.0;
    if let Some(phi) = &forcing.pressure {
        for i in 0..mx {
            let k = top + i;
            let (v, _) = phi.eval(xs[i], f.flat_y[k]);
            // T = -phi I, so T M^t e_n . w = -phi (-a w1 + w2)
            surface += grid.l / mx as f64 * (-v) * (-f.a[k] * f.w[0][k] + f.w[1][k]);
        }
    }
    let mut bulk = 0.0;
    if forcing.bulk_g.is_some() || forcing.bulk_f.is_some() {
        for k in 0..f.jac.len() {
            let x = xs[k % mx];
            let mut v = [0.0; 2];
            if let Some(gf) = &forcing.bulk_g {
                let (val, _) = gf.eval(x, f.flat_y[k]);
                v[0] += f.sig[k] * val[0];
                v[1] += f.sig[k] * val[1];
            }
            if let Some(ff) = &forcing.bulk_f {
                let (val, _) = ff.eval(x, f.flat_y[k]);
                v[0] += val[0];
                v[1] += val[1];
            }
            bulk += weight(grid, mx, k) * f.jac[k] * (v[0] * f.w[0][k] + v[1] * f.w[1][k]);
        }
    }
    Ok(BalanceReport { dissipation: d, surface_power: surface, bulk_power: bulk, imbalance: relative_gap(d, surface + bulk) })
}

/// Dissipation against the power of the unforced operator's own output
/// `(g, f, k)`; holds for any state satisfying the boundary constraints.
pub fn residual_balance(model: &Model, state: &State) -> Result<BalanceReport> {
    let grid = &model.grid;
    let fl = flow(model, state)?;
    let mx = fl.mx;
    let gamma = model.gamma();
    let data = model.evaluate(&state.unknowns(), &model.forcing.stripped())?.into_residual();
    let (pg, pf1, pf2) = (grid.pad(&data.g), grid.pad(&data.f1), grid.pad(&data.f2));
    let (pk1, pk2) = (grid.pad(&data.k1), grid.pad(&data.k2));
    let d = dissipation(model, &fl);
    let mut bulk = 0.0;
    for k in 0..fl.jac.len() {
        let ww = fl.w[0][k] * fl.w[0][k] + fl.w[1][k] * fl.w[1][k];
        bulk += weight(grid, mx, k) * (pf1[k] * fl.u[0][k] + pf2[k] * fl.u[1][k] + pg[k] * (0.5 * gamma * gamma * ww + fl.q[k]));
    }
    // g int g eta through |xi|^{-1} and |xi| multipliers, zero mode excluded
    let ig = grid.vertical_integral(&data.g);
    let lhs = grid.multiplier(&ig, |xi| if xi == 0.0 { 0.0 } else { 1.0 / (2.0 * PI * xi) });
    let rhs = grid.multiplier(&state.eta, |xi| 2.0 * PI * xi);
    let pair: f64 = grid.surface_inner(&lhs, &rhs);
    bulk += model.params.g * pair;
    let top = (grid.nz - 1) * mx;
    let mut surface = 0.0;
    for i in 0..mx {
        surface += grid.l / mx as f64 * (pk1[i] * fl.w[0][top + i] + pk2[i] * fl.w[1][top + i]);
    }
    Ok(BalanceReport { dissipation: d, surface_power: surface, bulk_power: bulk, imbalance: relative_gap(d, surface + bulk) })
}

/// `sqrt(||w||_{X_s}^2 + ||div(v_{w0} q)||_{H^{1+s}}^2)`.
pub fn adapted_norm(model: &Model, state: &State, background: &State, s: f64) -> Result<f64> {
    let grid = &model.grid;
    let v = v_field(model, background)?;
    let q = grid.to_values(&state.q);
    let f1: Vec<f64> = q.iter().zip(&v[0]).map(|(a, b)| a * b).collect();
    let f2: Vec<f64> = q.iter().zip(&v[1]).map(|(a, b)| a * b).collect();
    let div: Vec<f64> = grid.dx(&grid.from_values(&f1)).iter().zip(grid.dy(&grid.from_values(&f2))).map(|(a, b)| a + b).collect();
    let x = xspace_norm(grid, state, s);
    let e = sobolev_norm_slab(grid, &div, 1.0 + s);
    Ok((x * x + e * e).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SanityReport {
    /// Smallest distance of the enthalpy argument to the lower/upper end of the
    /// admissible interval (infinite when that end is unbounded).
    pub vacuum_margin_low: f64,
    pub vacuum_margin_high: f64,
    pub min_jacobian: f64,
    pub diffeomorphism: bool,
    pub density_min: f64,
    pub density_max: f64,
    /// `||u||_{H^1} / ||D u||_{L^2}`, infinite for `u = 0`.
    pub korn_ratio: f64,
    pub eta_peak: f64,
    /// `|eta|` half a period from `center`, relative to the peak.
    pub eta_decay: Option<f64>,
    /// `[int_0^b g]_{H^{-1}}` of the unforced continuity output.
    pub divergence_seminorm: f64,
    /// That seminorm over `||sigma (u - M e_1)||_{L^2}`.
    pub divergence_constant: f64,
}

impl SanityReport {
    pub fn margins_positive(&self) -> bool {
        self.vacuum_margin_low > 0.0 && self.vacuum_margin_high > 0.0 && self.diffeomorphism
    }

    pub fn to_text(&self, prefix: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{prefix}vacuum_margin_low = {:.6e}", self.vacuum_margin_low);
        let _ = writeln!(s, "{prefix}vacuum_margin_high = {:.6e}", self.vacuum_margin_high);
        let _ = writeln!(s, "{prefix}min_jacobian = {:.12e}", self.min_jacobian);
        let _ = writeln!(s, "{prefix}diffeomorphism = {}", self.diffeomorphism);
        let _ = writeln!(s, "{prefix}density_min = {:.12e}", self.density_min);
        let _ = writeln!(s, "{prefix}density_max = {:.12e}", self.density_max);
        let _ = writeln!(s, "{prefix}korn_ratio = {:.6e}", self.korn_ratio);
        let _ = writeln!(s, "{prefix}eta_peak = {:.12e}", self.eta_peak);
        if let Some(d) = self.eta_decay {
            let _ = writeln!(s, "{prefix}eta_decay = {:.6e}", d);
        }
        let _ = writeln!(s, "{prefix}divergence_seminorm = {:.6e}", self.divergence_seminorm);
        let _ = writeln!(s, "{prefix}divergence_constant = {:.6e}", self.divergence_constant);
        s
    }
}

/// Evaluate a surface coefficient row at arbitrary `x`.
pub fn eval_surface(grid: &Grid, c: &[f64], x: f64) -> f64 {
    let mut v = c[0];
    for k in 1..=grid.kmax() {
        let t = 2.0 * PI * k as f64 * x / grid.l;
        v += c[2 * k - 1] * t.cos() + c[2 * k] * t.sin();
    }
    v
}

pub fn sanity_suite(model: &Model, state: &State, center: Option<f64>) -> Result<SanityReport> {
    let grid = &model.grid;
    let (nz, nx) = (grid.nz, grid.nx);
    let gv = model.params.g;
    let geo = build_geometry(grid, &state.eta);
    let (min_jacobian, diffeomorphism, ext) = match &geo {
        Ok(g) => (g.min_jac, true, g.ext.clone()),
        Err(_) => {
            let (_, _, ey) = extension_fields(grid, &model.ext, &state.eta);
            let m = grid.to_values(&ey).iter().fold(f64::INFINITY, |m, v| m.min(1.0 + v));
            (m, false, grid.to_values(&model.ext.apply(&state.eta)))
        }
    };
    let (q, u1, u2, eta) = state.values(grid);
    let prof = &model.profile;
    let (mut lo, mut hi) = (f64::INFINITY, f64::INFINITY);
    let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..nz * nx {
        let h = q[k] + gv * (eta[k % nx] - ext[k]) - gv * grid.y[k / nx];
        lo = lo.min(h - prof.h_min);
        hi = hi.min(prof.h_max - h);
        if let Ok(s) = prof.inverse_enthalpy(h) {
            dmin = dmin.min(s);
            dmax = dmax.max(s);
        }
    }

    // Korn ratio over the state's own velocity
    let grads = [grid.dx(&state.u1), grid.dy(&state.u1), grid.dx(&state.u2), grid.dy(&state.u2)];
    let l2 = |c: &[f64]| sobolev_norm_slab(grid, c, 0.0).powi(2);
    let h1 = sobolev_norm_slab(grid, &state.u1, 1.0).powi(2) + sobolev_norm_slab(grid, &state.u2, 1.0).powi(2) + l2(&grads[0]) + l2(&grads[3]);
    let sym12: Vec<f64> = grads[1].iter().zip(&grads[2]).map(|(a, b)| a + b).collect();
    let du = 4.0 * l2(&grads[0]) + 4.0 * l2(&grads[3]) + 2.0 * l2(&sym12);
    let korn_ratio = if du > 0.0 { (h1 / du).sqrt() } else { f64::INFINITY };

    let fine = 8 * nx;
    let eta_peak = (0..fine).map(|i| eval_surface(grid, &state.eta, grid.l * i as f64 / fine as f64).abs()).fold(0.0f64, f64::max);
    let eta_decay = center.map(|c| if eta_peak > 0.0 { eval_surface(grid, &state.eta, c + 0.5 * grid.l).abs() / eta_peak } else { 0.0 });

    let data = model.evaluate(&state.unknowns(), &model.forcing.stripped());
    let (divergence_seminorm, divergence_constant) = match (data, geo) {
        (Ok(d), Ok(g)) => {
            let sem = hminus1_lenient(grid, &grid.vertical_integral(&d.into_residual().g));
            let sigma = model.sigma(state)?;
            let m1: Vec<f64> = (0..nz * nx).map(|k| sigma[k] * (u1[k] - g.jac[k])).collect();
            let m2: Vec<f64> = (0..nz * nx).map(|k| sigma[k] * (u2[k] + g.a[k])).collect();
            let norm = (l2(&grid.from_values(&m1)) + l2(&grid.from_values(&m2))).sqrt();
            (sem, sem / norm)
        }
        _ => (f64::NAN, f64::NAN),
    };
    Ok(SanityReport {
        vacuum_margin_low: lo,
        vacuum_margin_high: hi,
        min_jacobian,
        diffeomorphism,
        density_min: dmin,
        density_max: dmax,
        korn_ratio,
        eta_peak,
        eta_decay,
        divergence_seminorm,
        divergence_constant,
    })
}
