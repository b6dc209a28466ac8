//! Experiment runner behind the `niche` binary.
//!
//! Every run writes `manifest.txt` (resolved configuration, tool version,
//! status, wall-clock) next to the task's CSV and report files. Exit codes:
//! 0 on success, 2 on validation errors, 3 on numerical failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Task};
use crate::critical_speed::{self, save_sweep_csv, LambdaSample, ScanPolicy, SpeedError};
use crate::environment::GrowthError;
use crate::evolution::{self, EvolutionError, EvolutionOptions, EvolutionSetup, Thresholds};
use crate::kernel::KernelError;
use crate::operator::{DiscreteOperator, Grid, OperatorError};
use crate::spectral::{
    analytic_lambda_bounds, duality_residual, eigen_for_model, lambda_p_limit, principal_eigenvalue_with,
    reflection_identity_check, EigenOptions, RSchedule, SpectralError,
};
use crate::steady_state::{self, SolveOptions, SteadyStateError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Steady(#[from] SteadyStateError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Speed(#[from] SpeedError),
    #[error("cli::verify: {failed} of {total} property checks failed")]
    Verify { failed: usize, total: usize },
    #[error("cli::run: output directory {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("cli::run: thread pool: {0}")]
    ThreadPool(String),
}

fn spectral_is_numerical(e: &SpectralError) -> bool {
    match e {
        SpectralError::NonConvergence { .. }
        | SpectralError::NonPositiveIterate { .. }
        | SpectralError::ShiftFailure
        | SpectralError::DenseNoConvergence
        | SpectralError::NonMonotoneInR { .. } => true,
        SpectralError::Operator(_) | SpectralError::Kernel(_) => false,
        SpectralError::InvalidParameter { .. } | SpectralError::BadSchedule => false,
    }
}

impl RunError {
    /// 2 for bad input, 3 for a numerical failure.
    pub fn exit_code(&self) -> i32 {
        let numerical = match self {
            RunError::Spectral(e) => spectral_is_numerical(e),
            RunError::Steady(e) => match e {
                SteadyStateError::Spectral(s) => spectral_is_numerical(s),
                SteadyStateError::NonConvergence { .. }
                | SteadyStateError::BracketsCrossed { .. }
                | SteadyStateError::NoSubsolution { .. }
                | SteadyStateError::IncrementsNotDecreasing { .. }
                | SteadyStateError::OrderViolation { .. }
                | SteadyStateError::NotPersistent { .. }
                | SteadyStateError::Newton(_) => true,
                _ => false,
            },
            RunError::Evolution(e) => matches!(e, EvolutionError::NegativeValue { .. }),
            RunError::Speed(e) => match e {
                SpeedError::Spectral(s) => spectral_is_numerical(s),
                SpeedError::NotPersistentAtRest { .. } | SpeedError::BracketCheckFailed { .. } => true,
                _ => false,
            },
            RunError::Verify { .. } => true,
            _ => false,
        };
        if numerical {
            EXIT_NUMERICAL
        } else {
            EXIT_VALIDATION
        }
    }
}

/// Output location and parallelism of one run.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub out: PathBuf,
    pub workers: usize,
}

/// Files written by a successful run.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let p = self.path(name);
        std::fs::write(&p, body).map_err(|source| RunError::Output { path: p, source })
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::ThreadPool(e.to_string()))
}

/// Runs a resolved configuration, writing artifacts and the manifest.
pub fn run(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunSummary, RunError> {
    std::fs::create_dir_all(&ctx.out).map_err(|source| RunError::Output {
        path: ctx.out.clone(),
        source,
    })?;
    let start = Instant::now();
    let mut out = Out {
        dir: &ctx.out,
        files: Vec::new(),
    };
    let result = match cfg.task {
        Task::Eig => run_eig(cfg, ctx, &mut out),
        Task::Steady => run_steady(cfg, &mut out),
        Task::Evolve => run_evolve(cfg, &mut out),
        Task::Speeds => run_speeds(cfg, ctx, &mut out),
        Task::Bounds => run_bounds(cfg, &mut out),
        Task::Verify => run_verify(cfg, ctx, &mut out),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let manifest = manifest_text(cfg, ctx, &result, elapsed);
    out.text("manifest.txt", &manifest)?;
    result.map(|()| RunSummary { files: out.files })
}

fn manifest_text(cfg: &ExperimentConfig, ctx: &RunContext, result: &Result<(), RunError>, elapsed: f64) -> String {
    let mut s = String::new();
    s.push_str("[run]\n");
    let _ = writeln!(s, "tool = niche {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "task = {}", cfg.task.name());
    match result {
        Ok(()) => s.push_str("status = ok\n"),
        Err(e) => {
            let _ = writeln!(s, "status = failed");
            let _ = writeln!(s, "exit_code = {}", e.exit_code());
            let _ = writeln!(s, "error = {e}");
        }
    }
    let _ = writeln!(s, "workers = {}", ctx.workers);
    let _ = writeln!(s, "wall_clock_seconds = {elapsed}");
    s.push_str("\n[config]\n");
    for (k, v) in &cfg.resolved {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

fn eigen_options(cfg: &ExperimentConfig) -> EigenOptions {
    let mut o = EigenOptions::with_tol(cfg.numerics.eigen_tol);
    o.method = cfg.numerics.method;
    if o.method == crate::spectral::EigenMethod::Power {
        o.max_iter = EigenOptions::power().max_iter;
    }
    o
}

fn grid(cfg: &ExperimentConfig) -> Result<Grid, RunError> {
    Ok(Grid::with_spacing(cfg.numerics.r, cfg.numerics.h)?)
}

fn run_eig(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Out<'_>) -> Result<(), RunError> {
    let opts = eigen_options(cfg);
    let (k, g, eps) = (&cfg.kernel, &cfg.growth, cfg.numerics.epsilon);
    let one = |c: f64| -> Result<(LambdaSample, Vec<f64>, Vec<f64>), RunError> {
        match &cfg.numerics.r_schedule {
            Some(radii) => {
                let sched = RSchedule {
                    radii: radii.clone(),
                    h: cfg.numerics.h,
                };
                let lim = lambda_p_limit(k, g, c, eps, &sched, cfg.numerics.r_tol, &opts)?;
                let last = lim.levels.last().expect("nonempty schedule");
                let x = Grid::with_spacing(last.r, cfg.numerics.h)?.points();
                Ok((
                    LambdaSample {
                        c,
                        lambda_p: lim.result.lambda_p,
                        residual: lim.result.residual,
                        r: last.r,
                        n: last.n,
                        iterations: last.iterations,
                        converged_in_r: lim.converged_in_r,
                    },
                    x,
                    lim.result.eigenfunction,
                ))
            }
            None => {
                let grid = grid(cfg)?;
                let res = eigen_for_model(k, g, c, eps, grid, &opts)?;
                Ok((
                    LambdaSample {
                        c,
                        lambda_p: res.lambda_p,
                        residual: res.residual,
                        r: grid.half_width(),
                        n: grid.n(),
                        iterations: res.iterations,
                        converged_in_r: false,
                    },
                    grid.points(),
                    res.eigenfunction,
                ))
            }
        }
    };
    let results: Vec<Result<_, RunError>> =
        pool(ctx.workers)?.install(|| cfg.params.c.par_iter().map(|&c| one(c)).collect());
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let samples: Vec<LambdaSample> = results.iter().map(|r| r.0).collect();
    save_sweep_csv(&samples, &out.path("lambda_curve.csv"))?;
    let (_, x, phi) = &results[0];
    let mut csv = String::from("x,phi\n");
    for (xi, p) in x.iter().zip(phi) {
        let _ = writeln!(csv, "{xi},{p}");
    }
    out.text("eigenfunction.csv", &csv)?;
    let mut rep = String::from("[eig]\n");
    let _ = writeln!(rep, "method = {}", opts.method);
    for s in &samples {
        let _ = writeln!(rep, "lambda_p(c={}) = {}", s.c, s.lambda_p);
    }
    out.text("report.txt", &rep)
}

fn solve_options(cfg: &ExperimentConfig) -> SolveOptions {
    SolveOptions {
        tol: cfg.numerics.steady_tol,
        max_iter: cfg.numerics.max_iter,
        newton: cfg.numerics.newton,
        eigen: eigen_options(cfg),
        ..Default::default()
    }
}

fn run_steady(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), RunError> {
    let c = cfg.params.c[0];
    let opts = solve_options(cfg);
    let (k, g) = (&cfg.kernel, &cfg.growth);
    let (result, trace) = if let Some(eps) = &cfg.numerics.eps_schedule {
        let cont = steady_state::vanishing_viscosity(grid(cfg)?, k, g, c, eps, &opts)?;
        (cont.result.clone(), Some(cont))
    } else if let Some(radii) = &cfg.numerics.r_schedule {
        let cont = steady_state::domain_continuation(k, g, c, cfg.numerics.epsilon, radii, cfg.numerics.h, &opts)?;
        (cont.result.clone(), Some(cont))
    } else {
        (
            steady_state::solve_bounded(grid(cfg)?, k, g, c, cfg.numerics.epsilon, &opts)?,
            None,
        )
    };
    result.save_csv(&out.path("steady_state.csv"))?;
    if let Some(t) = &trace {
        t.save_trace_csv(&out.path("continuation.csv"))?;
    }
    let mut rep = String::from("[steady]\n");
    let _ = writeln!(rep, "classification = {:?}", result.classification);
    let _ = writeln!(rep, "c = {}", result.c);
    let _ = writeln!(rep, "epsilon = {}", result.epsilon);
    let _ = writeln!(rep, "R = {}", result.domain_r);
    let _ = writeln!(rep, "residual = {}", result.residual);
    let _ = writeln!(rep, "lambda_p = {}", result.lambda_p);
    let _ = writeln!(rep, "kappa = {}", result.kappa);
    let _ = writeln!(rep, "l1_mass = {}", result.l1_mass);
    let _ = writeln!(rep, "grad_sup = {}", result.grad_sup);
    let _ = writeln!(rep, "h1_norm = {}", result.h1_norm);
    let _ = writeln!(rep, "iterations = {}", result.iterations);
    let _ = writeln!(rep, "bracket.sub_sup = {}", result.bracket.sub_sup);
    let _ = writeln!(rep, "bracket.super_sup = {}", result.bracket.super_sup);
    out.text("report.txt", &rep)
}

fn run_evolve(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), RunError> {
    let p = &cfg.params;
    let grid = grid(cfg)?;
    let setup = EvolutionSetup {
        kernel: &cfg.kernel,
        growth: &cfg.growth,
        c: p.c[0],
        grid,
        frame: p.frame,
    };
    let u0 = evolution::bump(&grid, p.bump_height, p.bump_half_width);
    let opts = EvolutionOptions {
        dt: cfg.numerics.dt,
        record_every: p.record_every,
        snapshot_times: p.snapshot_times.clone(),
        ..Default::default()
    };
    let trace = setup.integrate(&u0, p.horizon, &opts)?;
    trace.save_csv(&out.path("trace.csv"))?;
    for i in 0..trace.snapshots.len() {
        trace.save_snapshot_csv(i, &out.path(&format!("snapshot_{i}.csv")))?;
    }
    let outcome = evolution::long_time_classify(&trace, None, &Thresholds::default())?;
    let mut rep = String::from("[evolve]\n");
    let _ = writeln!(rep, "outcome = {outcome}");
    let _ = writeln!(rep, "frame = {}", trace.frame);
    let _ = writeln!(rep, "c = {}", trace.c);
    let _ = writeln!(rep, "dt = {}", trace.dt);
    let _ = writeln!(rep, "steps = {}", trace.steps);
    let _ = writeln!(
        rep,
        "final_sup_norm = {}",
        trace.sup_norms.last().copied().unwrap_or(f64::NAN)
    );
    let _ = writeln!(
        rep,
        "final_niche_min = {}",
        trace.niche_minima.last().copied().unwrap_or(f64::NAN)
    );
    let _ = writeln!(
        rep,
        "final_l1_mass = {}",
        trace.l1_masses.last().copied().unwrap_or(f64::NAN)
    );
    out.text("report.txt", &rep)
}

/// Scan policy from a configuration.
pub fn scan_policy(cfg: &ExperimentConfig, workers: usize) -> ScanPolicy {
    let p = &cfg.params;
    ScanPolicy {
        r0: p.speed_r0,
        levels: p.speed_levels,
        h: cfg.numerics.h,
        r_tol: cfg.numerics.r_tol,
        eigen_tol: p.speed_eigen_tol,
        points_per_side: p.points_per_side,
        c_range: p.c_range,
        bracket_tol: p.bracket_tol,
        workers,
        ..ScanPolicy::default()
    }
}

fn run_speeds(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Out<'_>) -> Result<(), RunError> {
    let policy = scan_policy(cfg, ctx.workers);
    let report = critical_speed::find_speeds(&cfg.kernel, &cfg.growth, &policy)?;
    report.save_curve_csv(&out.path("lambda_curve.csv"))?;
    save_sweep_csv(&report.lambda_curve, &out.path("sweep.csv"))?;
    out.text("report.txt", &report.to_text())
}

fn run_bounds(cfg: &ExperimentConfig, out: &mut Out<'_>) -> Result<(), RunError> {
    let (k, g) = (&cfg.kernel, &cfg.growth);
    let mut b = critical_speed::speed_bounds(k, g)?;
    if let (Some(delta), true) = (cfg.params.delta, k.is_fat_tailed() && k.is_symmetric()) {
        b.fat_tail = Some(critical_speed::fat_tail_speed_bound(k, g, Some(delta))?);
    }
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
    let mut rep = String::from("[bounds]\n");
    let _ = writeln!(rep, "sup_a = {}", g.sup_a());
    let _ = writeln!(rep, "c_alpha_plus = {}", opt(b.c_alpha_plus.map(|v| v.value)));
    let _ = writeln!(rep, "c_alpha_plus.argmin = {}", opt(b.c_alpha_plus.map(|v| v.argmin)));
    let _ = writeln!(rep, "c_alpha_minus = {}", opt(b.c_alpha_minus.map(|v| v.value)));
    let _ = writeln!(rep, "c_alpha_minus.argmin = {}", opt(b.c_alpha_minus.map(|v| v.argmin)));
    let _ = writeln!(rep, "symmetric_remark_value = {}", opt(b.symmetric_values.map(|v| v.0)));
    let _ = writeln!(
        rep,
        "corrected_symmetric_value = {}",
        opt(b.symmetric_values.map(|v| v.1))
    );
    if let Some(f) = b.fat_tail {
        let _ = writeln!(rep, "c_hash = {}", f.c_hash);
        let _ = writeln!(rep, "tau0 = {}", f.tau0);
        let _ = writeln!(rep, "c0 = {}", f.c0);
        let _ = writeln!(rep, "c1 = {}", f.c1);
        let _ = writeln!(rep, "c2 = {}", f.c2);
        let _ = writeln!(rep, "R0 = {}", f.r0);
        let _ = writeln!(rep, "kappa = {}", f.kappa);
        let _ = writeln!(rep, "delta = {}", f.delta);
        let _ = writeln!(rep, "barrier_residual = {}", f.barrier_residual);
    }
    let mu: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05).collect();
    let mut csv = String::from("c,lambda_lower,argmax_mu\n");
    for &c in &cfg.params.c {
        let lb = analytic_lambda_bounds(k, g, c, &mu);
        let _ = writeln!(csv, "{c},{},{}", lb.lower, lb.argmax_mu);
    }
    out.text("lambda_bounds.csv", &csv)?;
    out.text("report.txt", &rep)
}

/// One property check of the `verify` task.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub trial: usize,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Seeded property checks on the configured instance: duality, reflection,
/// Lipschitz dependence on `a`, monotonicity in `a` and in the domain.
pub fn verify_rows(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<CheckRow>, RunError> {
    let opts = eigen_options(cfg);
    let grid = grid(cfg)?;
    let h = grid.h();
    let (k, g) = (&cfg.kernel, &cfg.growth);
    let dk = k.discretize(h)?;
    let a0: Vec<f64> = grid.points().iter().map(|&x| g.a(x)).collect();
    let c = cfg.params.c[0];
    let eps = cfg.numerics.epsilon;
    let base_op = DiscreteOperator::from_parts(grid, &dk, c, eps, a0.clone(), false)?;
    let base = principal_eigenvalue_with(&base_op, &opts)?.lambda_p;
    let mut rows = Vec::new();
    for (i, &cc) in [-0.7, 0.0, 0.7].iter().enumerate() {
        let op = DiscreteOperator::from_parts(grid, &dk, cc, eps, a0.clone(), false)?;
        rows.push(CheckRow {
            check: "duality",
            trial: i,
            value: duality_residual(&op, &opts)?,
            tolerance: 1e-10,
        });
    }
    rows.push(CheckRow {
        check: "reflection",
        trial: 0,
        value: reflection_identity_check(k, |x| g.a(x), c, eps, grid, &opts)?,
        tolerance: 1e-10,
    });
    let trials = cfg.params.trials;
    let seed = cfg.seed;
    let per_trial = |t: usize| -> Result<Vec<CheckRow>, RunError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let amp: f64 = rng.gen_range(0.0..0.1);
        let da: Vec<f64> = (0..grid.n()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
        let norm = da.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let perturbed: Vec<f64> = a0.iter().zip(&da).map(|(a, d)| a + d).collect();
        let lp = principal_eigenvalue_with(&base_op.with_potential(perturbed)?, &opts)?.lambda_p;
        let raised: Vec<f64> = a0.iter().zip(&da).map(|(a, d)| a + d.abs()).collect();
        let lr = principal_eigenvalue_with(&base_op.with_potential(raised)?, &opts)?.lambda_p;
        Ok(vec![
            CheckRow {
                check: "lipschitz_in_a",
                trial: t,
                value: (lp - base).abs() - norm,
                tolerance: 1e-8,
            },
            CheckRow {
                check: "monotone_in_a",
                trial: t,
                value: lr - base,
                tolerance: 1e-12,
            },
        ])
    };
    let trial_rows: Vec<Result<Vec<CheckRow>, RunError>> =
        pool(workers)?.install(|| (0..trials).into_par_iter().map(per_trial).collect());
    for r in trial_rows {
        rows.extend(r?);
    }
    let sched = RSchedule {
        radii: (0..4).map(|j| cfg.numerics.r * 2f64.powi(j)).collect(),
        h,
    };
    let mut prev = f64::INFINITY;
    for (j, &r) in sched.radii.iter().enumerate() {
        let gr = Grid::with_spacing(r, h)?;
        let l = eigen_for_model(k, g, c, eps, gr, &opts)?.lambda_p;
        if j > 0 {
            rows.push(CheckRow {
                check: "monotone_in_domain",
                trial: j,
                value: l - prev,
                tolerance: 1e-12,
            });
        }
        prev = l;
    }
    Ok(rows)
}

fn run_verify(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Out<'_>) -> Result<(), RunError> {
    let rows = verify_rows(cfg, ctx.workers)?;
    let mut csv = String::from("check,trial,value,tolerance,pass\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.check,
            r.trial,
            r.value,
            r.tolerance,
            r.passed()
        );
    }
    out.text("verify.csv", &csv)?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(RunError::Verify {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}
