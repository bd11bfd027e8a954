use crate::report::{IterationReport, Outcome, StepRecord};
use crate::scale::{Problem, Scale, Stopping};
use crate::{axpy, finite, sub, NmError};

/// Plain Newton: `u_{k+1} = u_k + L(u_k)(g - Psi(u_k))`.
pub struct Newton<'a, P: Problem, E: Scale, F: Scale> {
    pub problem: &'a P,
    pub domain: &'a E,
    pub data: &'a F,
    pub stopping: Stopping,
}

impl<'a, P: Problem, E: Scale, F: Scale> Newton<'a, P, E, F> {
    pub fn new(problem: &'a P, domain: &'a E, data: &'a F, stopping: Stopping) -> Self {
        Newton { problem, domain, data, stopping }
    }

    pub fn run(&self, g: &[f64]) -> Outcome {
        self.run_from(g, vec![0.0; self.problem.domain_dim()])
    }

    pub fn run_from(&self, g: &[f64], start: Vec<f64>) -> Outcome {
        let mut report = IterationReport::new("newton");
        let s = self.stopping.monitor_s;
        let mut u = start;
        let mut prev_res = f64::INFINITY;
        let mut h = vec![0.0; u.len()];
        for k in 0..=self.stopping.max_steps {
            let psi = match self.problem.map(&u) {
                Ok(p) if finite(&p) => p,
                Ok(_) => return fail(report, NmError::NonFinite(k), u),
                Err(e) => return fail(report, e, u),
            };
            let rhs = sub(g, &psi);
            let res = self.data.norm(&rhs, s);
            let h_norms = self.stopping.h_indices.iter().map(|&t| (t, self.domain.norm(&h, t))).collect();
            report.steps.push(StepRecord { step: k, residual: res, xi: f64::NAN, h_norms });
            if res <= self.stopping.residual_tol {
                report.converged = true;
                return Outcome { solution: u, report };
            }
            if k > self.stopping.grace && res > prev_res {
                return fail(report, NmError::NonMonotone { step: k, prev: prev_res, now: res }, u);
            }
            let un = self.domain.norm(&u, s);
            if un > self.stopping.norm_budget {
                return fail(report, NmError::Budget { step: k, norm: un, budget: self.stopping.norm_budget }, u);
            }
            if k == self.stopping.max_steps {
                break;
            }
            if !self.problem.admissible(&u) {
                return fail(report, NmError::Inadmissible(k), u);
            }
            h = match self.problem.inverse(&u, &rhs) {
                Ok(h) if finite(&h) => h,
                Ok(_) => return fail(report, NmError::NonFinite(k), u),
                Err(e) => return fail(report, e, u),
            };
            axpy(1.0, &h, &mut u);
            prev_res = res;
        }
        let m = self.stopping.max_steps;
        fail(report, NmError::MaxSteps(m), u)
    }
}

fn fail(mut report: IterationReport, e: NmError, u: Vec<f64>) -> Outcome {
    report.failure = Some(e);
    Outcome { solution: u, report }
}
