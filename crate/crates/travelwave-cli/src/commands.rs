use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use travelwave::diagnostics::{power_balance, sanity_suite};
use travelwave::io::{aligned_surfaces_csv, fmt_f64, profile_hash, read_field, save_field, state_fields, surface_csv, Checkpoint, Manifest, CHECKPOINT_MAGIC, FIELD_MAGIC};
use travelwave::linear::{assemble, bogovskii_b0, derivative_apply, AssembleOptions, Background};
use travelwave::operators::{Model, State};
use travelwave::solver::{solve as run_solver, SolveOptions, SolveOutcome};
use travelwave::spaces::{lp_block, random_row, saturation_index, sobolev_norm_surface, xspace_constraints, xspace_norm, yspace_norm};

use crate::config::RunConfig;
use crate::CliError;

pub struct Invocation {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub resume: Option<PathBuf>,
    pub seed: u64,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn prepare(inv: &Invocation) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(&inv.config)?;
    let out = inv.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("travelwave-out"));
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    Ok((cfg, out))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// A saved state, checked against the configured grid and profile.
fn load_resume(path: &Path, model: &Model) -> Result<State, CliError> {
    let c = Checkpoint::load(path)?;
    let g = &model.grid;
    if c.nx != g.nx || c.nz != g.nz || c.l != g.l || c.b != g.b {
        return Err(CliError::Config(format!("checkpoint grid {}x{} L={} b={} differs from the configuration", c.nx, c.nz, c.l, c.b)));
    }
    if c.profile_hash != profile_hash(&model.profile) {
        return Err(CliError::Config("checkpoint was written for a different equilibrium profile".into()));
    }
    Ok(c.state)
}

fn initial_state(cfg: &RunConfig, model: &Model, inv: &Invocation) -> Result<Option<State>, CliError> {
    if let Some(p) = &inv.resume {
        return load_resume(p, model).map(Some);
    }
    if cfg.solver.initial_noise > 0.0 {
        let mut rng = StdRng::seed_from_u64(inv.seed);
        let s = State::random(&model.grid, &mut rng, cfg.solver.initial_noise);
        return Ok(Some(model.kinematic_project(&s)));
    }
    Ok(None)
}

/// Write every artifact of one solve into `dir` and return its manifest.
fn record(cfg: &RunConfig, model: &Model, opts: &SolveOptions, out: &SolveOutcome, dir: &Path) -> Result<Manifest, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let grid = &model.grid;
    let mut m = Manifest::new();
    cfg.describe(&mut m);
    m.set("gamma", fmt_f64(model.gamma()));
    m.set("result.converged", out.converged());
    m.set("result.steps", out.report.steps.len());
    m.set("result.residual_y0", format!("{:.6e}", out.residual_y0));
    if let Some(f) = &out.report.failure {
        m.set("result.failure", f);
    }
    for s in &out.report.steps {
        m.push("history", format!("{} {:.6e}", s.step, s.residual));
    }
    for (s, slope) in out.report.h_slopes() {
        m.push("history.h_slope", format!("{} {:.4}", fmt_f64(s), slope));
    }
    let cons = xspace_constraints(grid, &out.state);
    m.set("constraints.bottom_trace", format!("{:.6e}", cons.bottom_trace));
    m.set("constraints.kinematic", format!("{:.6e}", cons.kinematic));
    m.set("constraints.eta_mean", format!("{:.6e}", cons.eta_mean));
    m.set("state.xnorm", format!("{:.6e}", xspace_norm(grid, &out.state, 0.0)));
    match power_balance(model, &out.state) {
        Ok(b) => m.absorb("balance.", &b.to_text(""))?,
        Err(e) => m.set("balance.error", e),
    }
    let center = cfg.pressure().map(|p| p.center);
    match sanity_suite(model, &out.state, center) {
        Ok(s) => m.absorb("sanity.", &s.to_text(""))?,
        Err(e) => m.set("sanity.error", e),
    }

    write(&dir.join("iterations.log"), &out.report.to_log())?;
    write(&dir.join("surface.csv"), &surface_csv(grid, &out.state.eta, cfg.output.csv_samples))?;
    for f in state_fields(grid, &out.state) {
        save_field(&dir.join(format!("{}.twf", f.name)), &f)?;
    }
    let ck = Checkpoint {
        l: grid.l,
        nx: grid.nx,
        nz: grid.nz,
        b: grid.b,
        gamma: model.gamma(),
        forcing: cfg.forcing_descriptor(),
        profile_hash: profile_hash(&model.profile),
        provenance: format!("{} steps={} converged={}", out.report.method, out.report.steps.len(), out.converged()),
        state: out.state.clone(),
    };
    ck.save(&dir.join("checkpoint.twck"))?;
    if cfg.output.dump_matrix {
        let reg = match opts.reg {
            Some((mm, n)) => Some(travelwave::operators::Regularization::new(grid, mm, n)?),
            None => None,
        };
        let op = assemble(model, &Background::new(model, &out.state)?, &AssembleOptions::default().reg(reg).exec(opts.exec))?;
        let path = dir.join("jacobian.coo");
        let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        op.dump(BufWriter::new(f)).map_err(|e| io_err(&path, e))?;
    }
    m.save(&dir.join("manifest.txt"))?;
    Ok(m)
}

pub fn solve(inv: &Invocation) -> Result<(), CliError> {
    let (cfg, out) = prepare(inv)?;
    let model = cfg.model(cfg.forcing.gamma)?;
    let start = initial_state(&cfg, &model, inv)?;
    let opts = cfg.solve_options();
    let t = Instant::now();
    let res = run_solver(&model, &opts, start.as_ref())?;
    eprintln!("solve: {} steps, residual {:.3e}, {:.2?}", res.report.steps.len(), res.residual_y0, t.elapsed());
    let mut m = record(&cfg, &model, &opts, &res, &out)?;
    m.set("seed", inv.seed);
    m.save(&out.join("manifest.txt"))?;
    print!("{}", m.to_text());
    if res.converged() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("solver did not converge: {}", res.report.failure.as_ref().map(|f| f.to_string()).unwrap_or_default())))
    }
}

fn relative_l2(grid: &travelwave::spaces::Grid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = sobolev_norm_surface(grid, a, 0.0).max(sobolev_norm_surface(grid, b, 0.0));
    if scale == 0.0 {
        0.0
    } else {
        sobolev_norm_surface(grid, &d, 0.0) / scale
    }
}

pub fn sweep(inv: &Invocation) -> Result<(), CliError> {
    let (cfg, out) = prepare(inv)?;
    let gammas = cfg.sweep_gammas();
    let opts = cfg.solve_options();
    let base = cfg.model(gammas[0])?;
    let mut warm = initial_state(&cfg, &base, inv)?;
    let mut summary = Manifest::new();
    cfg.describe(&mut summary);
    summary.set("seed", inv.seed);
    summary.set("sweep.gammas", gammas.iter().map(|g| fmt_f64(*g)).collect::<Vec<_>>().join(" "));
    let mut profiles: Vec<(String, Vec<f64>)> = Vec::new();
    let mut failures = 0;
    for (i, &g) in gammas.iter().enumerate() {
        let model = base.with_forcing(base.forcing.with_gamma(g));
        let key = format!("sweep.{i}");
        summary.set(&format!("{key}.gamma"), fmt_f64(g));
        let t = Instant::now();
        let res = run_solver(&model, &opts, warm.as_ref());
        match res {
            Ok(o) => {
                eprintln!("sweep gamma={g}: {} steps, residual {:.3e}, {:.2?}", o.report.steps.len(), o.residual_y0, t.elapsed());
                record(&cfg, &model, &opts, &o, &out.join(format!("gamma_{i}")))?;
                summary.set(&format!("{key}.converged"), o.converged());
                summary.set(&format!("{key}.steps"), o.report.steps.len());
                summary.set(&format!("{key}.residual_y0"), format!("{:.6e}", o.residual_y0));
                if cfg.solver.compare_cold {
                    match run_solver(&model, &opts, None) {
                        Ok(c) => summary.set(&format!("{key}.cold_steps"), c.report.steps.len()),
                        Err(e) => summary.set(&format!("{key}.cold_error"), e),
                    }
                }
                if o.converged() {
                    profiles.push((format!("eta_gamma_{}", fmt_f64(g)), o.state.eta.clone()));
                    warm = Some(o.state);
                } else {
                    failures += 1;
                }
            }
            Err(e) => {
                eprintln!("sweep gamma={g}: {e}");
                summary.set(&format!("{key}.converged"), false);
                summary.set(&format!("{key}.error"), e);
                failures += 1;
            }
        }
    }
    let grid = &base.grid;
    for a in 0..profiles.len() {
        for b in a + 1..profiles.len() {
            let d = relative_l2(grid, &profiles[a].1, &profiles[b].1);
            summary.push("sweep.distance", format!("{} {} {:.6e}", profiles[a].0, profiles[b].0, d));
        }
    }
    write(&out.join("sweep.csv"), &aligned_surfaces_csv(grid, &profiles, cfg.output.csv_samples))?;
    summary.save(&out.join("manifest.txt"))?;
    print!("{}", summary.to_text());
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{failures} of {} wave speeds failed", gammas.len())))
    }
}

struct Checks {
    m: Manifest,
    failed: usize,
}

impl Checks {
    fn check(&mut self, name: &str, value: f64, tol: f64) {
        let ok = value <= tol;
        if !ok {
            self.failed += 1;
        }
        let line = format!("{} value={:.3e} tol={:.0e}", if ok { "PASS" } else { "FAIL" }, value, tol);
        println!("{name}: {line}");
        self.m.set(&format!("check.{name}"), line);
    }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let n = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() / n
}

pub fn verify(inv: &Invocation) -> Result<(), CliError> {
    let (cfg, out) = prepare(inv)?;
    let mut rng = StdRng::seed_from_u64(inv.seed);
    let mut c = Checks { m: Manifest::new(), failed: 0 };
    cfg.describe(&mut c.m);
    c.m.set("seed", inv.seed);
    let model = cfg.model(cfg.forcing.gamma)?;
    let grid = model.grid.clone();

    for g in cfg.sweep_gammas() {
        let z = model.with_forcing(model.forcing.stripped().with_gamma(g));
        let r = yspace_norm(&grid, &z.residual(&State::zeros(&grid))?, 0.0);
        c.check(&format!("trivial_solution.gamma_{}", fmt_f64(g)), r, 1e-12);
    }

    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let bg = model.kinematic_project(&State::random(&grid, &mut rng, 1e-3));
        let dir = State::random(&grid, &mut rng, 1.0);
        let exact = derivative_apply(&model, &bg, &dir, None)?.to_vector();
        let central = |h: f64| -> Result<Vec<f64>, CliError> {
            let p = model.residual(&bg.axpy(h, &dir))?.to_vector();
            let m = model.residual(&bg.axpy(-h, &dir))?.to_vector();
            Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let (d1, d2) = (central(1e-4)?, central(5e-5)?);
        let rich: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        worst = worst.max(rel(&rich, &exact));
    }
    c.check("derivative_fd", worst, 1e-6);

    let mut worst: f64 = 0.0;
    for k in 0..2 {
        let bg = if k == 0 { State::zeros(&grid) } else { model.kinematic_project(&State::random(&grid, &mut rng, 1e-3)) };
        let op = assemble(&model, &Background::new(&model, &bg)?, &AssembleOptions::default())?;
        let n = State::dim(&grid);
        let y: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        worst = worst.max(rel(&op.apply(&op.solve(&y)?), &y));
        let x = State::random(&grid, &mut rng, 1.0).to_vector();
        worst = worst.max(rel(&op.solve(&op.apply(&x))?, &x));
    }
    c.check("inverse_consistency", worst, 1e-8);

    let mut psi = State::random(&grid, &mut rng, 1.0).q;
    let nc = grid.nc();
    let mean: f64 = (0..grid.nz).map(|j| grid.w[j] * psi[j * nc]).sum::<f64>() / grid.b;
    for j in 0..grid.nz {
        psi[j * nc] -= mean;
    }
    let v = bogovskii_b0(&grid, &psi)?;
    let div = v.divergence(&grid);
    let scale = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    c.check("bogovskii_divergence", div.iter().zip(&psi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale, 1e-8);
    c.check("bogovskii_trace", v.trace_max(&grid, 0).max(v.trace_max(&grid, grid.nz - 1)) / scale, 1e-10);

    let f = random_row(&grid, &mut rng, grid.kmax(), 1.0, false);
    let total = grid.weighted_sq(&f, |_| 1.0);
    let parts: f64 = (0..saturation_index(&grid)).map(|j| grid.weighted_sq(&lp_block(&grid, &f, j), |_| 1.0)).sum();
    c.check("littlewood_paley", (parts - total).abs() / total, 1e-12);

    if !model.forcing.is_zero() {
        let res = run_solver(&model, &cfg.solve_options(), None)?;
        c.check("solve_residual", res.residual_y0, 1e-9);
        c.check("solve_steps", res.report.steps.len() as f64, 20.0);
        let b = power_balance(&model, &res.state)?;
        c.check("dissipation_balance", b.imbalance, 1e-6);
        let s = sanity_suite(&model, &res.state, cfg.pressure().map(|p| p.center))?;
        c.check("no_vacuum", if s.margins_positive() { 0.0 } else { 1.0 }, 0.0);
        c.m.absorb("sanity.", &s.to_text(""))?;
    }
    c.m.set("result.failed", c.failed);
    c.m.save(&out.join("verify.txt"))?;
    if c.failed == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} checks failed", c.failed)))
    }
}

pub fn inspect(path: &Path, config: Option<&Path>) -> Result<(), CliError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut m = Manifest::new();
    if bytes.starts_with(CHECKPOINT_MAGIC) {
        let ck = Checkpoint::from_bytes(&bytes)?;
        let grid = ck.grid()?;
        m.set("kind", "checkpoint");
        m.set("grid.l", fmt_f64(ck.l));
        m.set("grid.nx", ck.nx);
        m.set("grid.nz", ck.nz);
        m.set("grid.b", fmt_f64(ck.b));
        m.set("gamma", fmt_f64(ck.gamma));
        m.set("forcing", &ck.forcing);
        m.set("profile_hash", format!("{:08x}", ck.profile_hash));
        m.set("provenance", &ck.provenance);
        m.set("state.xnorm", format!("{:.6e}", xspace_norm(&grid, &ck.state, 0.0)));
        m.set("state.max_abs", format!("{:.6e}", ck.state.max_abs()));
        let cons = xspace_constraints(&grid, &ck.state);
        m.set("constraints.bottom_trace", format!("{:.6e}", cons.bottom_trace));
        m.set("constraints.kinematic", format!("{:.6e}", cons.kinematic));
        if let Some(cp) = config {
            let cfg = RunConfig::load(cp)?;
            let model = cfg.model(ck.gamma)?;
            let st = load_resume(path, &model)?;
            m.set("residual_y0", format!("{:.6e}", yspace_norm(&grid, &model.residual(&st)?, 0.0)));
        }
    } else if bytes.starts_with(FIELD_MAGIC) {
        let f = read_field(&mut bytes.as_slice())?;
        m.set("kind", "field");
        m.set("name", &f.name);
        m.set("shape", f.shape.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x"));
        m.set("min", format!("{:.6e}", f.data.iter().cloned().fold(f64::INFINITY, f64::min)));
        m.set("max", format!("{:.6e}", f.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)));
        m.set("l2", format!("{:.6e}", f.data.iter().map(|v| v * v).sum::<f64>().sqrt()));
    } else {
        let text = String::from_utf8(bytes).map_err(|_| CliError::Runtime("unrecognized binary file".into()))?;
        let parsed = Manifest::parse(&text)?;
        m.set("kind", "manifest");
        m.set("entries", parsed.entries().len());
        for key in ["result.converged", "result.steps", "result.residual_y0", "balance.imbalance", "check.failed"] {
            if let Some(v) = parsed.get(key) {
                m.set(key, v);
            }
        }
    }
    print!("{}", m.to_text());
    Ok(())
}
