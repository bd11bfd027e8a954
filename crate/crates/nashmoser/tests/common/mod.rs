#![allow(dead_code)]
use nalgebra::{DMatrix, DVector};
use nashmoser::{NmError, Problem, Scale};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Periodic samples on [0, 1) with sharp dyadic frequency cutoffs.
pub struct Periodic {
    pub n: usize,
}

impl Periodic {
    pub fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(self.n).process(&mut buf);
        buf.iter().map(|c| c / self.n as f64).collect()
    }

    pub fn synth(&self, mut c: Vec<Complex64>) -> Vec<f64> {
        FftPlanner::new().plan_fft_inverse(self.n).process(&mut c);
        c.iter().map(|z| z.re).collect()
    }

    pub fn freq(&self, i: usize) -> f64 {
        if i <= self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        }
    }

    fn cut(&self, x: &[f64], kappa: f64) -> Vec<f64> {
        let mut c = self.spectrum(x);
        for (i, z) in c.iter_mut().enumerate() {
            let k = self.freq(i);
            if i == self.n / 2 || k.abs() >= kappa {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.synth(c)
    }

    pub fn dx_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut d = DMatrix::zeros(n, n);
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            let de = self.dx(&e);
            for row in 0..n {
                d[(row, col)] = de[row];
            }
        }
        d
    }

    pub fn dx(&self, x: &[f64]) -> Vec<f64> {
        let mut c = self.spectrum(x);
        for (i, z) in c.iter_mut().enumerate() {
            let k = if i == self.n / 2 { 0.0 } else { self.freq(i) };
            *z *= Complex64::new(0.0, 2.0 * std::f64::consts::PI * k);
        }
        self.synth(c)
    }

    pub fn bump(&self, amp: f64) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let x = i as f64 / self.n as f64;
                let t = (x - 0.5) / 0.08;
                amp * (-(t * t)).exp()
            })
            .collect()
    }
}

impl Scale for Periodic {
    fn norm(&self, x: &[f64], s: f64) -> f64 {
        let c = self.spectrum(x);
        c.iter()
            .enumerate()
            .map(|(i, z)| {
                let k = self.freq(i);
                (1.0 + k * k).powf(s) * z.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    fn smooth(&self, x: &[f64], j: usize) -> Vec<f64> {
        if j == 0 {
            return vec![0.0; x.len()];
        }
        self.cut(x, 2f64.powi(j as i32))
    }
}

/// `Psi(u) = u + c (u^2)_x / 2`, a one-derivative loss.
pub struct Burgers {
    pub grid: Periodic,
    pub c: f64,
    pub d: DMatrix<f64>,
    pub linear: bool,
}

impl Burgers {
    pub fn new(n: usize, c: f64, linear: bool) -> Self {
        let grid = Periodic { n };
        let d = grid.dx_matrix();
        Burgers { grid, c, d, linear }
    }

    pub fn jacobian(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.grid.n;
        if self.linear {
            return DMatrix::identity(n, n) + &self.d * self.c;
        }
        let dv = DMatrix::from_diagonal(&DVector::from_column_slice(v));
        DMatrix::identity(n, n) + &self.d * &dv * self.c
    }
}

impl Problem for Burgers {
    fn map(&self, u: &[f64]) -> Result<Vec<f64>, NmError> {
        if self.linear {
            let du = self.grid.dx(u);
            return Ok(u.iter().zip(&du).map(|(a, b)| a + self.c * b).collect());
        }
        let sq: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
        let d = self.grid.dx(&sq);
        Ok(u.iter().zip(&d).map(|(a, b)| a + self.c * b).collect())
    }

    fn inverse(&self, v: &[f64], f: &[f64]) -> Result<Vec<f64>, NmError> {
        let lu = self.jacobian(v).lu();
        lu.solve(&DVector::from_column_slice(f))
            .map(|x| x.as_slice().to_vec())
            .ok_or_else(|| NmError::Inverse("singular".into()))
    }

    fn domain_dim(&self) -> usize {
        self.grid.n
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
