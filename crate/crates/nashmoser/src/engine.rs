use crate::report::{IterationReport, Outcome, StepRecord};
use crate::scale::{Indices, Problem, Scale, Stopping};
use crate::{axpy, finite, sub, NmError};

/// The sextuple `(u_j, v_j, h_j, y_j, f_j, e_j)` plus running sums.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub j: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub e: Vec<f64>,
    /// `sum_{n <= j} e_n`
    pub sum_e: Vec<f64>,
    /// `sum_{n <= j} y_n`
    pub sum_y: Vec<f64>,
    /// `Psi(u_j)`
    pub psi_u: Vec<f64>,
    /// `Psi(u_j + h_j)`
    pub psi_next: Vec<f64>,
}

pub struct NashMoser<'a, P: Problem, E: Scale, F: Scale> {
    pub problem: &'a P,
    pub domain: &'a E,
    pub data: &'a F,
    pub indices: Indices,
    pub stopping: Stopping,
}

impl<'a, P: Problem, E: Scale, F: Scale> NashMoser<'a, P, E, F> {
    pub fn new(problem: &'a P, domain: &'a E, data: &'a F, stopping: Stopping) -> Self {
        NashMoser { problem, domain, data, indices: Indices::new(1.0, 4.0, 20.0), stopping }
    }

    pub fn with_indices(mut self, indices: Indices) -> Self {
        self.indices = indices;
        self
    }

    fn map(&self, u: &[f64], j: usize) -> Result<Vec<f64>, NmError> {
        let out = self.problem.map(u)?;
        if !finite(&out) {
            return Err(NmError::NonFinite(j));
        }
        Ok(out)
    }

    fn inverse(&self, v: &[f64], f: &[f64], j: usize) -> Result<Vec<f64>, NmError> {
        if !self.problem.admissible(v) {
            return Err(NmError::Inadmissible(j));
        }
        let out = self.problem.inverse(v, f)?;
        if !finite(&out) {
            return Err(NmError::NonFinite(j));
        }
        Ok(out)
    }

    pub fn seed(&self, g: &[f64]) -> Result<IterationState, NmError> {
        let nd = self.problem.domain_dim();
        let u = vec![0.0; nd];
        let f = self.data.block(g, 0);
        let h = self.inverse(&u, &f, 0)?;
        let psi_u = self.map(&u, 0)?;
        let psi_next = self.map(&h, 0)?;
        let mut e = sub(&psi_next, &psi_u);
        axpy(-1.0, &f, &mut e);
        Ok(IterationState {
            j: 0,
            v: u.clone(),
            u,
            y: vec![0.0; g.len()],
            sum_y: vec![0.0; g.len()],
            sum_e: e.clone(),
            h,
            f,
            e,
            psi_u,
            psi_next,
        })
    }

    pub fn step(&self, prev: &IterationState, g: &[f64]) -> Result<IterationState, NmError> {
        let j = prev.j + 1;
        let mut u = prev.u.clone();
        axpy(1.0, &prev.h, &mut u);
        let psi_u = prev.psi_next.clone();
        let v = self.domain.smooth(&u, j);

        let mut y = self.data.smooth(&prev.sum_e, j);
        for (yi, si) in y.iter_mut().zip(&prev.sum_y) {
            *yi = -*yi - si;
        }
        let mut f = self.data.block(g, j);
        axpy(1.0, &y, &mut f);

        let h = self.inverse(&v, &f, j)?;
        let mut trial = u.clone();
        axpy(1.0, &h, &mut trial);
        let psi_next = self.map(&trial, j)?;
        let mut e = sub(&psi_next, &psi_u);
        axpy(-1.0, &f, &mut e);

        let mut sum_e = prev.sum_e.clone();
        axpy(1.0, &e, &mut sum_e);
        let mut sum_y = prev.sum_y.clone();
        axpy(1.0, &y, &mut sum_y);
        Ok(IterationState { j, u, v, h, y, f, e, sum_e, sum_y, psi_u, psi_next })
    }

    fn record(&self, st: &IterationState, g: &[f64], residual: f64) -> StepRecord {
        let s = self.stopping.monitor_s;
        let xi = self.data.norm(g, s) * 2f64.powi(-(st.j as i32)) + self.data.norm(&self.data.block(g, st.j), s);
        let h_norms = self.stopping.h_indices.iter().map(|&t| (t, self.domain.norm(&st.h, t))).collect();
        StepRecord { step: st.j, residual, xi, h_norms }
    }

    /// Iterate until `||Psi(u_j) - g||` drops below the tolerance.
    pub fn run(&self, g: &[f64]) -> Outcome {
        let mut report = IterationReport::new("nash-moser");
        let nd = self.problem.domain_dim();
        let s = self.stopping.monitor_s;
        let fail = |report: &mut IterationReport, e: NmError, sol: Vec<f64>| {
            report.failure = Some(e);
            Outcome { solution: sol, report: report.clone() }
        };

        let mut st = match self.seed(g) {
            Ok(st) => st,
            Err(e) => return fail(&mut report, e, vec![0.0; nd]),
        };
        let r0 = self.data.norm(&sub(&st.psi_u, g), s);
        report.steps.push(self.record(&st, g, r0));
        if r0 <= self.stopping.residual_tol {
            report.converged = true;
            return Outcome { solution: st.u, report };
        }

        let mut prev_res = r0;
        for _ in 0..self.stopping.max_steps {
            st = match self.step(&st, g) {
                Ok(next) => next,
                Err(e) => return fail(&mut report, e, st.u.clone()),
            };
            let res = self.data.norm(&sub(&st.psi_u, g), s);
            report.steps.push(self.record(&st, g, res));
            if !res.is_finite() {
                return fail(&mut report, NmError::NonFinite(st.j), st.u.clone());
            }
            if res <= self.stopping.residual_tol {
                report.converged = true;
                return Outcome { solution: st.u, report };
            }
            let un = self.domain.norm(&st.u, s);
            if un > self.stopping.norm_budget {
                let e = NmError::Budget { step: st.j, norm: un, budget: self.stopping.norm_budget };
                return fail(&mut report, e, st.u.clone());
            }
            if st.j > self.stopping.grace && res > prev_res {
                let e = NmError::NonMonotone { step: st.j, prev: prev_res, now: res };
                return fail(&mut report, e, st.u.clone());
            }
            prev_res = res;
        }
        let sol = st.u.clone();
        fail(&mut report, NmError::MaxSteps(self.stopping.max_steps), sol)
    }
}
