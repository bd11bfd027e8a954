//! Constitutive laws, the enthalpy and the hydrostatic density profile.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A smooth scalar map on the positive reals together with its derivative.
pub trait ScalarLaw: Send + Sync + Debug {
    fn value(&self, t: f64) -> f64;
    fn deriv(&self, t: f64) -> f64;
}

#[derive(Debug, Clone)]
pub enum PressureLaw {
    /// `P(t) = K t^alpha`
    Polytropic { k: f64, alpha: f64 },
    /// `P(t) = arctan(t)`; bounded range, useful for compatibility tests.
    Arctan,
    Custom(Arc<dyn ScalarLaw>),
}

impl PressureLaw {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            PressureLaw::Polytropic { k, alpha } => k * t.powf(*alpha),
            PressureLaw::Arctan => t.atan(),
            PressureLaw::Custom(l) => l.value(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            PressureLaw::Polytropic { k, alpha } => k * alpha * t.powf(alpha - 1.0),
            PressureLaw::Arctan => 1.0 / (1.0 + t * t),
            PressureLaw::Custom(l) => l.deriv(t),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Viscosity {
    Constant(f64),
    Custom(Arc<dyn ScalarLaw>),
}

impl Viscosity {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Viscosity::Constant(c) => *c,
            Viscosity::Custom(l) => l.value(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            Viscosity::Constant(_) => 0.0,
            Viscosity::Custom(l) => l.deriv(t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhysicalParams {
    pub n: usize,
    /// Equilibrium depth.
    pub b: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Surface tension coefficient.
    pub tension: f64,
    pub p_ext: f64,
    pub pressure: PressureLaw,
    pub mu: Viscosity,
    pub lambda: Viscosity,
}

impl PhysicalParams {
    /// Polytropic fluid with constant viscosities.
    pub fn polytropic(k: f64, alpha: f64, p_ext: f64, g: f64, b: f64) -> Self {
        PhysicalParams {
            n: 2,
            b,
            g,
            tension: 1.0,
            p_ext,
            pressure: PressureLaw::Polytropic { k, alpha },
            mu: Viscosity::Constant(1.0),
            lambda: Viscosity::Constant(1.0),
        }
    }

    /// Admissibility of the viscosity and tension coefficients, sampled at `rho`.
    pub fn validate(&self, rho: &[f64]) -> Result<()> {
        if !(self.n == 2 || self.n == 3) {
            return Err(Error::Constitutive(format!("dimension {} not in {{2, 3}}", self.n)));
        }
        if !(self.b > 0.0 && self.g > 0.0) {
            return Err(Error::Constitutive("depth and gravity must be positive".into()));
        }
        if self.tension < 0.0 {
            return Err(Error::Constitutive("surface tension must be nonnegative".into()));
        }
        for &t in rho {
            let (mu, la) = (self.mu.value(t), self.lambda.value(t));
            if mu <= 0.0 {
                return Err(Error::Constitutive(format!("mu({t}) = {mu} must be positive")));
            }
            if self.n == 2 && la <= 0.0 {
                return Err(Error::Constitutive(format!("lambda({t}) = {la} must be positive for n = 2")));
            }
            if self.n >= 3 && la < 0.0 {
                return Err(Error::Constitutive(format!("lambda({t}) = {la} must be nonnegative")));
            }
        }
        if self.n >= 3 && self.tension <= 0.0 {
            return Err(Error::Constitutive("surface tension must be positive for n >= 3".into()));
        }
        Ok(())
    }
}

// Gauss-Kronrod 7/15 nodes and weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
        let (v, err) = gk15(f, a, b);
        if !v.is_finite() {
            return Err(Error::Profile(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= tol.max(1e-15 * v.abs()) {
            return Ok(v);
        }
        if depth == 0 {
            return Err(Error::Profile(format!("quadrature did not converge on [{a}, {b}], error {err:.3e}")));
        }
        let m = 0.5 * (a + b);
        Ok(rec(f, a, m, 0.5 * tol, depth - 1)? + rec(f, m, b, 0.5 * tol, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    rec(f, a, b, tol, 40)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compatibility {
    pub admissible: bool,
    pub p_ext_in_range: bool,
    /// `int_{P^{-1}(P_ext)}^inf P'(t)/t dt`, possibly infinite.
    pub integral: f64,
    /// `integral - g b`.
    pub margin: f64,
}

fn check_monotone(law: &PressureLaw) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=120 {
        let t = 10f64.powf(-6.0 + 0.1 * i as f64);
        let p = law.value(t);
        if !(p > prev) || law.deriv(t) <= 0.0 {
            return Err(Error::Constitutive(format!("pressure law not strictly increasing near t = {t:.3e}")));
        }
        prev = p;
    }
    Ok(())
}

/// Solve `P(s) = p` for `s > 0`.
fn pressure_inverse(law: &PressureLaw, p: f64) -> Result<f64> {
    if let PressureLaw::Polytropic { k, alpha } = law {
        return Ok((p / k).powf(1.0 / alpha));
    }
    let (mut lo, mut hi) = (1e-12, 1.0);
    while law.value(hi) < p {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Constitutive(format!("P_ext = {p} not attained")));
        }
    }
    if law.value(lo) > p {
        return Err(Error::Constitutive(format!("P_ext = {p} below the range of P")));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if law.value(m) < p {
            lo = m
        } else {
            hi = m
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sum of decade integrals of `P'(t)/t` moving away from `s0` towards `t_end`,
/// with a growth test deciding divergence.
fn decade_integral(law: &PressureLaw, s0: f64, t_end: f64) -> Result<f64> {
    let f = |t: f64| law.deriv(t) / t;
    let up = t_end > s0;
    let mut total = 0.0;
    let mut prev_inc;
    let mut last_inc = f64::NAN;
    let mut t = s0;
    loop {
        let next = if up { (t * 10.0).min(t_end) } else { (t / 10.0).max(t_end) };
        let inc = integrate(&f, next.min(t), next.max(t), 1e-13)?;
        total += inc;
        prev_inc = last_inc;
        last_inc = inc;
        t = next;
        if t == t_end {
            break;
        }
    }
    if prev_inc.is_finite() && last_inc >= 0.5 * prev_inc && last_inc > 1e-12 * total.abs() {
        return Ok(f64::INFINITY);
    }
    let r = if prev_inc > 0.0 { last_inc / prev_inc } else { 0.0 };
    Ok(total + if r > 0.0 && r < 1.0 { last_inc * r / (1.0 - r) } else { 0.0 })
}

pub fn check_compatibility(params: &PhysicalParams) -> Result<Compatibility> {
    check_monotone(&params.pressure)?;
    let (lo, hi) = match &params.pressure {
        PressureLaw::Polytropic { .. } => (0.0, f64::INFINITY),
        law => (law.value(1e-12), law.value(1e12)),
    };
    let in_range = params.p_ext > lo && params.p_ext < hi;
    if !in_range {
        return Ok(Compatibility { admissible: false, p_ext_in_range: false, integral: f64::NAN, margin: f64::NAN });
    }
    let sb = pressure_inverse(&params.pressure, params.p_ext)?;
    let integral = match &params.pressure {
        PressureLaw::Polytropic { .. } => f64::INFINITY,
        law => decade_integral(law, sb, 1e6_f64.max(sb * 10.0))?,
    };
    let margin = integral - params.g * params.b;
    Ok(Compatibility { admissible: margin > 0.0, p_ext_in_range: true, integral, margin })
}

/// Enthalpy, its inverse, and the hydrostatic density on a vertical grid.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile {
    pub pressure: PressureLaw,
    pub g: f64,
    pub b: f64,
    pub p_ext: f64,
    /// Surface density `P^{-1}(P_ext)`.
    pub s_b: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub y: Vec<f64>,
    pub rho: Vec<f64>,
    pub drho: Vec<f64>,
    /// Guard distance kept from each finite end of `(h_min, h_max)`.
    pub guard: f64,
}

pub fn build_profile(params: &PhysicalParams, y: &[f64]) -> Result<EquilibriumProfile> {
    let compat = check_compatibility(params)?;
    if !compat.admissible {
        return Err(Error::Profile(format!(
            "compatibility fails: P_ext in range = {}, margin = {}",
            compat.p_ext_in_range, compat.margin
        )));
    }
    let s_b = pressure_inverse(&params.pressure, params.p_ext)?;
    let gb = params.g * params.b;
    let (h_min, h_max) = match &params.pressure {
        PressureLaw::Polytropic { k, alpha } => {
            if *alpha == 1.0 {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (-gb - k * alpha / (alpha - 1.0) * s_b.powf(alpha - 1.0), f64::INFINITY)
            }
        }
        law => {
            let below = decade_integral(law, s_b, s_b * 1e-6)?;
            (-gb - below, -gb + compat.integral)
        }
    };
    let guard = if h_min.is_finite() && h_max.is_finite() {
        0.01 * (h_max - h_min)
    } else if h_min.is_finite() {
        0.01 * (0.0 - h_min)
    } else if h_max.is_finite() {
        0.01 * (h_max + gb)
    } else {
        0.0
    };
    let mut prof = EquilibriumProfile {
        pressure: params.pressure.clone(),
        g: params.g,
        b: params.b,
        p_ext: params.p_ext,
        s_b,
        h_min,
        h_max,
        y: y.to_vec(),
        rho: Vec::new(),
        drho: Vec::new(),
        guard,
    };
    let mut rho = Vec::with_capacity(y.len());
    let mut drho = Vec::with_capacity(y.len());
    for &yk in y {
        let r = prof.inverse_enthalpy(-params.g * yk)?;
        rho.push(r);
        drho.push(-params.g * r / params.pressure.deriv(r));
    }
    prof.rho = rho;
    prof.drho = drho;
    Ok(prof)
}

impl EquilibriumProfile {
    /// `H(s) = -g b + int_{s_b}^s P'(t)/t dt`.
    pub fn enthalpy(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Domain { h: s, lo: 0.0, hi: f64::INFINITY });
        }
        let gb = self.g * self.b;
        match &self.pressure {
            PressureLaw::Polytropic { k, alpha } => Ok(if *alpha == 1.0 {
                -gb + k * (s / self.s_b).ln()
            } else {
                -gb + k * alpha / (alpha - 1.0) * (s.powf(alpha - 1.0) - self.s_b.powf(alpha - 1.0))
            }),
            law => {
                let f = |t: f64| law.deriv(t) / t;
                let v = if s >= self.s_b {
                    integrate(&f, self.s_b, s, 1e-14)?
                } else {
                    -integrate(&f, s, self.s_b, 1e-14)?
                };
                Ok(-gb + v)
            }
        }
    }

    /// `H'(s) = P'(s)/s`.
    pub fn enthalpy_deriv(&self, s: f64) -> f64 {
        self.pressure.deriv(s) / s
    }

    pub fn inverse_enthalpy(&self, h: f64) -> Result<f64> {
        if !(h > self.h_min && h < self.h_max) {
            return Err(Error::Domain { h, lo: self.h_min, hi: self.h_max });
        }
        let gb = self.g * self.b;
        match &self.pressure {
            PressureLaw::Polytropic { k, alpha } => Ok(if *alpha == 1.0 {
                self.s_b * ((h + gb) / k).exp()
            } else {
                let a1 = alpha - 1.0;
                (self.s_b.powf(a1) + a1 * (h + gb) / (k * alpha)).powf(1.0 / a1)
            }),
            _ => self.inverse_generic(h),
        }
    }

    /// Bracketed Newton with bisection fallback.
    fn inverse_generic(&self, h: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.s_b, self.s_b);
        let mut guard = 0;
        while self.enthalpy(lo)? > h {
            lo *= 0.5;
            guard += 1;
            if guard > 200 {
                return Err(Error::Profile(format!("no lower bracket for h = {h}")));
            }
        }
        while self.enthalpy(hi)? < h {
            hi *= 2.0;
            guard += 1;
            if guard > 400 {
                return Err(Error::Profile(format!("no upper bracket for h = {h}")));
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = self.enthalpy(s)? - h;
            if r.abs() <= 1e-12 {
                return Ok(s);
            }
            if r > 0.0 {
                hi = s
            } else {
                lo = s
            }
            let newton = s - r / self.enthalpy_deriv(s);
            s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-16 * hi {
                return Ok(s);
            }
        }
        Err(Error::Profile(format!("root finder did not converge for h = {h}")))
    }

    /// `(H^{-1}(h), (H^{-1})'(h))` with `(H^{-1})' = s / P'(s)`.
    pub fn inverse_enthalpy_with_deriv(&self, h: f64) -> Result<(f64, f64)> {
        let s = self.inverse_enthalpy(h)?;
        Ok((s, s / self.pressure.deriv(s)))
    }

    /// The guarded admissible interval for enthalpy arguments.
    pub fn guard_interval(&self) -> (f64, f64) {
        (self.h_min + self.guard, self.h_max - self.guard)
    }

    pub fn rho_at(&self, y: f64) -> Result<f64> {
        self.inverse_enthalpy(-self.g * y)
    }

    /// Closed-form density for polytropic laws.
    pub fn polytropic_closed_form(k: f64, alpha: f64, p_ext: f64, g: f64, b: f64, y: f64) -> f64 {
        if alpha == 1.0 {
            p_ext / k * (g * (b - y) / k).exp()
        } else {
            let e = (alpha - 1.0) / alpha;
            ((p_ext / k).powf(e) + e * g * (b - y) / k).powf(1.0 / (alpha - 1.0))
        }
    }
}
