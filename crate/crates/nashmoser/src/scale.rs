use crate::NmError;

/// A smoothable Banach scale realized on finite coefficient vectors.
pub trait Scale {
    fn norm(&self, x: &[f64], s: f64) -> f64;

    /// The smoothing operator `S_j`. Implementations must return zero for `j = 0`.
    fn smooth(&self, x: &[f64], j: usize) -> Vec<f64>;

    /// Littlewood-Paley block `S_{j+1} - S_j`.
    fn block(&self, x: &[f64], j: usize) -> Vec<f64> {
        let hi = self.smooth(x, j + 1);
        let lo = self.smooth(x, j);
        crate::sub(&hi, &lo)
    }
}

/// The nonlinear problem `Psi(u) = g`.
pub trait Problem {
    fn map(&self, u: &[f64]) -> Result<Vec<f64>, NmError>;

    /// Apply `L(v)`, a right inverse of `DPsi(v)`, to `f`.
    fn inverse(&self, v: &[f64], f: &[f64]) -> Result<Vec<f64>, NmError>;

    fn derivative(&self, _u: &[f64], _h: &[f64]) -> Result<Vec<f64>, NmError> {
        Err(NmError::Map("derivative not provided".into()))
    }

    fn admissible(&self, _v: &[f64]) -> bool {
        true
    }

    fn domain_dim(&self) -> usize;
}

/// Loss and regularity indices `(mu, r, R)` with `beta = 2(r + mu) + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indices {
    pub mu: f64,
    pub r: f64,
    pub big_r: f64,
}

impl Indices {
    pub fn new(mu: f64, r: f64, big_r: f64) -> Self {
        Indices { mu, r, big_r }
    }

    /// Defaults used for the traveling-wave problem in dimension `n`.
    pub fn traveling_wave(n: usize) -> Self {
        let h = (n / 2) as f64;
        Indices { mu: 1.0, r: 3.0 + h, big_r: 17.0 + 3.0 * h }
    }

    pub fn beta(&self) -> f64 {
        2.0 * (self.r + self.mu) + 1.0
    }

    pub fn check(&self) -> Result<(), NmError> {
        let half = 0.5 * (self.r + self.big_r);
        if self.beta() < half {
            Ok(())
        } else {
            Err(NmError::Indices { beta: self.beta(), half })
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stopping {
    pub max_steps: usize,
    pub residual_tol: f64,
    pub norm_budget: f64,
    /// Index of the norm used for the residual test.
    pub monitor_s: f64,
    /// Indices at which `||h_j||` is recorded.
    pub h_indices: Vec<f64>,
    /// Number of initial steps exempt from the monotone residual policy.
    pub grace: usize,
}

impl Default for Stopping {
    fn default() -> Self {
        Stopping {
            max_steps: 20,
            residual_tol: 1e-10,
            norm_budget: f64::INFINITY,
            monitor_s: 0.0,
            h_indices: vec![0.0, 1.0, 2.0, 3.0],
            grace: 3,
        }
    }
}
