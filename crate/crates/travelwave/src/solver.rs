//! Newton and Nash-Moser drivers for the collocation system.
//!
//! The unknown is the stacked state vector; the data space is the vector of
//! collocation rows. Both carry the horizontal scale
//! `||x||_s^2 = sum_j w_j sum_xi <xi>^{2s} |x_j(xi)|^2` and the sharp smoothing
//! `S_j` (cutoff `|xi| < 2^j`).

use std::sync::OnceLock;

use nashmoser::{Indices, IterationReport, NashMoser, Newton, NmError, Problem, Scale, Stopping};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linear::{assemble, AssembleOptions, AssembledOperator, Background, Variant};
use crate::operators::{Model, Regularization, State};
use crate::spaces::{bracket, smooth, yspace_norm, Grid};

/// Horizontal Sobolev scale on stacked slab/surface vectors.
#[derive(Debug, Clone)]
pub struct HorizontalScale {
    grid: Grid,
}

impl HorizontalScale {
    pub fn new(grid: &Grid) -> Self {
        HorizontalScale { grid: grid.clone() }
    }
}

impl Scale for HorizontalScale {
    fn norm(&self, x: &[f64], s: f64) -> f64 {
        let g = &self.grid;
        let (nz, nc) = (g.nz, g.nc());
        let mut total = 0.0;
        for (r, row) in x.chunks(nc).enumerate() {
            // slab rows carry quadrature weights, the trailing surface row has weight 1
            let w = if r < 3 * nz { g.w[r % nz] } else { 1.0 };
            total += w * g.weighted_sq(row, |xi| bracket(xi).powf(2.0 * s));
        }
        total.sqrt()
    }

    fn smooth(&self, x: &[f64], j: usize) -> Vec<f64> {
        smooth(&self.grid, x, j)
    }
}

/// How the inverse `L(v)` is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Jacobian {
    /// Assemble and factor the exact Jacobian at every call.
    Exact,
    /// Reuse the first factorization (chord iteration).
    Frozen,
}

/// `Psi(w) = R(base + w) - R(base)` with `R` the collocation rows.
pub struct TravelingWave<'a> {
    pub model: &'a Model,
    pub base: State,
    pub reg: Option<Regularization>,
    pub exec: Exec,
    pub jacobian: Jacobian,
    base_rows: Vec<f64>,
    frozen: OnceLock<AssembledOperator>,
}

impl<'a> TravelingWave<'a> {
    pub fn new(model: &'a Model, base: State, reg: Option<Regularization>, exec: Exec, jacobian: Jacobian) -> Result<Self> {
        let base_rows = model.rows_at(&base, reg.as_ref())?;
        Ok(TravelingWave { model, base, reg, exec, jacobian, base_rows, frozen: OnceLock::new() })
    }

    /// Data `g = -R(base)`, so that `Psi(w) = g` means `R(base + w) = 0`.
    pub fn data(&self) -> Vec<f64> {
        self.base_rows.iter().map(|v| -v).collect()
    }

    pub fn state_of(&self, w: &[f64]) -> State {
        self.base.axpy(1.0, &State::from_vector(&self.model.grid, w))
    }

    fn factor_at(&self, w: &[f64]) -> Result<AssembledOperator> {
        let bg = Background::new(self.model, &self.state_of(w))?;
        let opts = AssembleOptions::default().variant(Variant::Full).reg(self.reg.clone()).exec(self.exec);
        assemble(self.model, &bg, &opts)
    }
}

fn nm_err(e: Error) -> NmError {
    NmError::Map(e.to_string())
}

impl Problem for TravelingWave<'_> {
    fn map(&self, u: &[f64]) -> std::result::Result<Vec<f64>, NmError> {
        let rows = self.model.rows_at(&self.state_of(u), self.reg.as_ref()).map_err(nm_err)?;
        Ok(rows.iter().zip(&self.base_rows).map(|(a, b)| a - b).collect())
    }

    fn inverse(&self, v: &[f64], f: &[f64]) -> std::result::Result<Vec<f64>, NmError> {
        let inv = |e: Error| NmError::Inverse(e.to_string());
        match self.jacobian {
            Jacobian::Exact => self.factor_at(v).map_err(inv)?.solve(f).map_err(inv),
            Jacobian::Frozen => {
                if self.frozen.get().is_none() {
                    let op = self.factor_at(v).map_err(inv)?;
                    let _ = self.frozen.set(op);
                }
                self.frozen.get().expect("factorization cached").solve(f).map_err(inv)
            }
        }
    }

    fn derivative(&self, u: &[f64], h: &[f64]) -> std::result::Result<Vec<f64>, NmError> {
        let bg = Background::new(self.model, &self.state_of(u)).map_err(nm_err)?;
        let opts = AssembleOptions::default().reg(self.reg.clone());
        crate::linear::operator_apply(self.model, &bg, h, &opts).map_err(nm_err)
    }

    fn admissible(&self, v: &[f64]) -> bool {
        let st = self.state_of(v);
        crate::geometry::build_geometry(&self.model.grid, &st.eta).is_ok() && self.model.sigma(&st).is_ok()
    }

    fn domain_dim(&self) -> usize {
        State::dim(&self.model.grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Newton,
    NashMoser,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Method::Newton),
            "nash-moser" | "nash_moser" | "nm" => Ok(Method::NashMoser),
            other => Err(Error::Format(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub method: Method,
    pub stopping: Stopping,
    pub indices: Indices,
    /// `(m, N)` regularization of the collocation rows.
    pub reg: Option<(usize, f64)>,
    pub exec: Exec,
    pub jacobian: Jacobian,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Newton,
            stopping: Stopping { residual_tol: 1e-11, ..Stopping::default() },
            indices: Indices::traveling_wave(2),
            reg: None,
            exec: Exec::default(),
            jacobian: Jacobian::Exact,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub state: State,
    pub report: IterationReport,
    /// `||Psi(state)||` in the `Y^0` norm.
    pub residual_y0: f64,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.report.converged
    }
}

/// Solve `R(w) = 0` starting from `start` (zero if absent).
pub fn solve(model: &Model, opts: &SolveOptions, start: Option<&State>) -> Result<SolveOutcome> {
    let base = start.cloned().unwrap_or_else(|| State::zeros(&model.grid));
    let reg = match opts.reg {
        Some((m, n)) => Some(Regularization::new(&model.grid, m, n)?),
        None => None,
    };
    let problem = TravelingWave::new(model, base, reg, opts.exec, opts.jacobian)?;
    let scale = HorizontalScale::new(&model.grid);
    let g = problem.data();
    let out = match opts.method {
        Method::Newton => Newton::new(&problem, &scale, &scale, opts.stopping.clone()).run(&g),
        Method::NashMoser => NashMoser::new(&problem, &scale, &scale, opts.stopping.clone()).with_indices(opts.indices).run(&g),
    };
    let state = problem.state_of(&out.solution);
    let residual_y0 = yspace_norm(&model.grid, &model.residual(&state)?, 0.0);
    Ok(SolveOutcome { state, report: out.report, residual_y0 })
}

/// Solve at each wave speed in turn, warm-starting from the previous solution.
/// A failed speed is reported and the next one starts from the last success.
pub fn sweep(model: &Model, gammas: &[f64], opts: &SolveOptions) -> Vec<(f64, Result<SolveOutcome>)> {
    let mut out = Vec::with_capacity(gammas.len());
    let mut warm: Option<State> = None;
    for &gamma in gammas {
        let m = model.with_forcing(model.forcing.with_gamma(gamma));
        let res = solve(&m, opts, warm.as_ref());
        if let Ok(o) = &res {
            if o.converged() {
                warm = Some(o.state.clone());
            }
        }
        out.push((gamma, res));
    }
    out
}
