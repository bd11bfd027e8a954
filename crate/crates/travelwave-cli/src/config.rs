//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use travelwave::equilibrium::{PhysicalParams, PressureLaw, Viscosity};
use travelwave::exec::Exec;
use travelwave::io::{fmt_f64, Manifest};
use travelwave::operators::{Forcing, GaussianPressure, Model};
use travelwave::solver::{Jacobian, Method, SolveOptions};
use travelwave::spaces::Grid;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub physics: PhysicsBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub forcing: ForcingBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsBlock {
    pub n: usize,
    pub b: f64,
    pub g: f64,
    pub tension: f64,
    pub p_ext: f64,
    /// `polytropic` or `arctan`.
    pub law: String,
    pub k: f64,
    pub alpha: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl Default for PhysicsBlock {
    fn default() -> Self {
        PhysicsBlock { n: 2, b: 1.0, g: 1.0, tension: 1.0, p_ext: 1.0, law: "polytropic".into(), k: 1.0, alpha: 1.0, mu: 1.0, lambda: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub l: f64,
    pub nx: usize,
    pub nz: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingBlock {
    /// `gaussian` or `none`.
    pub kind: String,
    pub amplitude: f64,
    /// Defaults to `L / 2`.
    pub center: Option<f64>,
    pub width: f64,
    pub gamma: f64,
    /// Wave speeds for `sweep`.
    pub gammas: Vec<f64>,
}

impl Default for ForcingBlock {
    fn default() -> Self {
        ForcingBlock { kind: "gaussian".into(), amplitude: 1e-3, center: None, width: 1.0, gamma: 1.0, gammas: Vec::new() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub method: String,
    pub monitor_s: f64,
    pub residual_tol: f64,
    pub max_steps: usize,
    /// `exact` or `frozen`.
    pub jacobian: String,
    pub parallel: bool,
    /// Amplitude of a random initial state drawn from `--seed`.
    pub initial_noise: f64,
    pub regularization: Option<RegBlock>,
    /// Also solve each sweep speed from zero to record the warm-start gain.
    pub compare_cold: bool,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            method: "newton".into(),
            monitor_s: 0.0,
            residual_tol: 1e-11,
            max_steps: 20,
            jacobian: "exact".into(),
            parallel: true,
            initial_noise: 0.0,
            regularization: None,
            compare_cold: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegBlock {
    pub m: usize,
    pub n: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
    pub csv_samples: usize,
    /// Write the Jacobian at the solution as `row col value` text.
    pub dump_matrix: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: None, csv_samples: 512, dump_matrix: false }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.physics;
        if p.n != 2 {
            return Err(bad(format!("physics.n = {} unsupported, only 2", p.n)));
        }
        for (name, v) in [("b", p.b), ("g", p.g), ("k", p.k), ("alpha", p.alpha), ("mu", p.mu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("physics.{name} must be positive, got {v}")));
            }
        }
        if !(p.tension >= 0.0) || !p.p_ext.is_finite() || !p.lambda.is_finite() {
            return Err(bad("physics.tension, p_ext and lambda must be finite, tension non-negative"));
        }
        if !matches!(p.law.as_str(), "polytropic" | "arctan") {
            return Err(bad(format!("physics.law {:?} not in {{polytropic, arctan}}", p.law)));
        }
        let f = &self.forcing;
        if !matches!(f.kind.as_str(), "gaussian" | "none") {
            return Err(bad(format!("forcing.kind {:?} not in {{gaussian, none}}", f.kind)));
        }
        if !(f.width > 0.0) || !f.amplitude.is_finite() {
            return Err(bad("forcing.width must be positive and amplitude finite"));
        }
        if f.gammas.iter().chain([&f.gamma]).any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(bad("wave speeds must be positive"));
        }
        let s = &self.solver;
        s.method.parse::<Method>().map_err(|e| bad(e.to_string()))?;
        if !matches!(s.jacobian.as_str(), "exact" | "frozen") {
            return Err(bad(format!("solver.jacobian {:?} not in {{exact, frozen}}", s.jacobian)));
        }
        if !(s.residual_tol > 0.0) || s.max_steps == 0 || !(s.initial_noise >= 0.0) {
            return Err(bad("solver.residual_tol and max_steps must be positive, initial_noise non-negative"));
        }
        if let Some(r) = &s.regularization {
            if r.m < 2 || !(r.n > 0.0) {
                return Err(bad("solver.regularization needs m >= 2 and n > 0"));
            }
        }
        if self.output.csv_samples == 0 {
            return Err(bad("output.csv_samples must be positive"));
        }
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid.l, self.grid.nx, self.grid.nz, self.physics.b).map_err(|e| bad(e.to_string()))
    }

    pub fn params(&self) -> PhysicalParams {
        let p = &self.physics;
        PhysicalParams {
            n: p.n,
            b: p.b,
            g: p.g,
            tension: p.tension,
            p_ext: p.p_ext,
            pressure: match p.law.as_str() {
                "arctan" => PressureLaw::Arctan,
                _ => PressureLaw::Polytropic { k: p.k, alpha: p.alpha },
            },
            mu: Viscosity::Constant(p.mu),
            lambda: Viscosity::Constant(p.lambda),
        }
    }

    pub fn pressure(&self) -> Option<GaussianPressure> {
        let f = &self.forcing;
        (f.kind == "gaussian" && f.amplitude != 0.0).then(|| GaussianPressure {
            amplitude: f.amplitude,
            center: f.center.unwrap_or(0.5 * self.grid.l),
            width: f.width,
            period: self.grid.l,
        })
    }

    pub fn forcing_descriptor(&self) -> String {
        match self.pressure() {
            Some(p) => format!("gaussian amplitude={} center={} width={}", fmt_f64(p.amplitude), fmt_f64(p.center), fmt_f64(p.width)),
            None => "none".into(),
        }
    }

    pub fn model(&self, gamma: f64) -> Result<Model, CliError> {
        let forcing = match self.pressure() {
            Some(p) => Forcing::gaussian_pressure(p, gamma),
            None => Forcing::zero(gamma),
        };
        Model::new(self.grid()?, self.params(), forcing).map_err(|e| bad(e.to_string()))
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        let mut o = SolveOptions::default();
        o.method = s.method.parse().unwrap_or(Method::Newton);
        o.stopping.residual_tol = s.residual_tol;
        o.stopping.max_steps = s.max_steps;
        o.stopping.monitor_s = s.monitor_s;
        o.reg = s.regularization.as_ref().map(|r| (r.m, r.n));
        o.exec = if s.parallel { Exec::default() } else { Exec::Sequential };
        o.jacobian = if s.jacobian == "frozen" { Jacobian::Frozen } else { Jacobian::Exact };
        o
    }

    pub fn sweep_gammas(&self) -> Vec<f64> {
        if self.forcing.gammas.is_empty() {
            vec![self.forcing.gamma]
        } else {
            self.forcing.gammas.clone()
        }
    }

    /// The validated parameters in manifest form.
    pub fn describe(&self, m: &mut Manifest) {
        let p = &self.physics;
        m.set("physics.n", p.n);
        m.set("physics.b", fmt_f64(p.b));
        m.set("physics.g", fmt_f64(p.g));
        m.set("physics.tension", fmt_f64(p.tension));
        m.set("physics.p_ext", fmt_f64(p.p_ext));
        m.set("physics.law", &p.law);
        m.set("physics.k", fmt_f64(p.k));
        m.set("physics.alpha", fmt_f64(p.alpha));
        m.set("physics.mu", fmt_f64(p.mu));
        m.set("physics.lambda", fmt_f64(p.lambda));
        m.set("grid.l", fmt_f64(self.grid.l));
        m.set("grid.nx", self.grid.nx);
        m.set("grid.nz", self.grid.nz);
        m.set("forcing", self.forcing_descriptor());
        let s = &self.solver;
        m.set("solver.method", &s.method);
        m.set("solver.monitor_s", fmt_f64(s.monitor_s));
        m.set("solver.residual_tol", fmt_f64(s.residual_tol));
        m.set("solver.max_steps", s.max_steps);
        m.set("solver.jacobian", &s.jacobian);
        m.set("solver.initial_noise", fmt_f64(s.initial_noise));
        if let Some(r) = &s.regularization {
            m.set("solver.regularization.m", r.m);
            m.set("solver.regularization.n", fmt_f64(r.n));
        }
    }
}
