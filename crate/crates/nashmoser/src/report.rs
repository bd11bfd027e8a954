use std::fmt::Write;

use crate::NmError;

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// `||Psi(u_j) - g||` in the monitored norm.
    pub residual: f64,
    pub xi: f64,
    /// `(s, ||h_j||_s)` pairs.
    pub h_norms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationReport {
    pub method: String,
    pub steps: Vec<StepRecord>,
    pub converged: bool,
    pub failure: Option<NmError>,
}

impl IterationReport {
    pub fn new(method: &str) -> Self {
        IterationReport { method: method.to_string(), ..Default::default() }
    }

    pub fn final_residual(&self) -> f64 {
        self.steps.last().map(|s| s.residual).unwrap_or(f64::NAN)
    }

    /// Least-squares slope of `log2 ||h_j||_s` against `j`, one per recorded `s`.
    pub fn h_slopes(&self) -> Vec<(f64, f64)> {
        let Some(first) = self.steps.first() else { return Vec::new() };
        first
            .h_norms
            .iter()
            .enumerate()
            .map(|(k, &(s, _))| {
                let pts: Vec<(f64, f64)> = self
                    .steps
                    .iter()
                    .filter_map(|r| {
                        let v = r.h_norms.get(k)?.1;
                        (v > 0.0 && v.is_finite()).then(|| (r.step as f64, v.log2()))
                    })
                    .collect();
                (s, fit_slope(&pts))
            })
            .collect()
    }

    /// One line per step followed by a summary line.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for r in &self.steps {
            let _ = write!(out, "method={} step={} residual={:.6e} xi={:.6e}", self.method, r.step, r.residual, r.xi);
            for (s, v) in &r.h_norms {
                let _ = write!(out, " h_s{}={:.6e}", s, v);
            }
            out.push('\n');
        }
        let _ = write!(out, "method={} converged={} steps={}", self.method, self.converged, self.steps.len());
        for (s, m) in self.h_slopes() {
            let _ = write!(out, " slope_s{}={:.4}", s, m);
        }
        if let Some(e) = &self.failure {
            let _ = write!(out, " failure=\"{}\"", e);
        }
        out.push('\n');
        out
    }
}

pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub solution: Vec<f64>,
    pub report: IterationReport,
}

impl Outcome {
    pub fn converged(&self) -> bool {
        self.report.converged
    }
}
