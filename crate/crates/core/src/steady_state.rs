//! Positive steady states of `ε u'' + c u' + M_Ω u + f(x, u) = 0`.
//!
//! Bounded-domain solves use the sub/super-solution scheme: the damped map
//! `Φ(u) = u + θ G(u)`, with `θ (1 + L_f + |c|/h + 2ε/h²) ≤ 1`, is
//! order-preserving, so iterating it from the constant super-solution
//! `‖S‖∞` gives a nonincreasing sequence and iterating from the
//! subsolution `κ φ_p` a nondecreasing one. Both are tracked and the solve
//! stops when they meet.
//!
//! On top of that sit the continuation routes: vanishing viscosity in `ε`,
//! growing domains in `R`, and increasing truncations `J_N` for fat tails.

use std::fmt;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::banded::BandedLu;
use crate::environment::GrowthModel;
use crate::kernel::{Kernel, KernelError};
use crate::operator::{DiscreteOperator, Grid, OperatorError};
use crate::spectral::{principal_eigenvalue_with, EigenOptions, EigenResult, SpectralError};

/// `|λ_p|` below this is reported as borderline.
pub const BORDERLINE_BAND: f64 = 1e-4;
/// Slack for pointwise order checks along continuations.
pub const ORDER_SLACK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SteadyStateError {
    #[error("steady_state::{op}: parameter `{name}` invalid ({value})")]
    InvalidParameter {
        op: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("steady_state::solve_bounded: brackets crossed by {excess:e} at index {index}")]
    BracketsCrossed { index: usize, excess: f64 },
    #[error("steady_state::solve_bounded: no convergence after {iterations} iterations (gap {gap:e}, residual {residual:e})")]
    NonConvergence { iterations: usize, gap: f64, residual: f64 },
    #[error("steady_state::solve_bounded: no admissible subsolution scale κ ≥ {min_kappa:e}")]
    NoSubsolution { min_kappa: f64 },
    #[error("steady_state::vanishing_viscosity: increments stopped decreasing at level {level}; grid too coarse")]
    IncrementsNotDecreasing { level: usize },
    #[error("steady_state::vanishing_viscosity: ε schedule must decrease to a value ≥ 0")]
    BadEpsSchedule,
    #[error("steady_state::vanishing_viscosity: c = 0 cannot reach ε = 0")]
    NeedsDrift,
    #[error("steady_state::{op}: schedule must be strictly increasing")]
    BadSchedule { op: &'static str },
    #[error("steady_state::{op}: order violated by {excess:e} at x = {x} (level {level})")]
    OrderViolation {
        op: &'static str,
        level: usize,
        x: f64,
        excess: f64,
    },
    #[error("steady_state::fat_tail_solve: λ_p = {lambda_p} ≥ 0 at the first truncation; not persistent")]
    NotPersistent { lambda_p: f64 },
    #[error("steady_state::newton: {0}")]
    Newton(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("steady_state::save: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Nontrivial,
    Trivial,
    Borderline,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Nontrivial => "nontrivial",
            Classification::Trivial => "trivial",
            Classification::Borderline => "borderline",
        })
    }
}

/// Sup-norms of the final sub- and super-iterates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub sub_sup: f64,
    pub super_sup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyStateResult {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub residual: f64,
    pub classification: Classification,
    pub epsilon: f64,
    pub c: f64,
    pub domain_r: f64,
    pub bracket: Bracket,
    pub l1_mass: f64,
    pub grad_sup: f64,
    pub h1_norm: f64,
    /// `λ_p` of the linearization on the same grid.
    pub lambda_p: f64,
    /// Subsolution scale used for the upward sequence.
    pub kappa: f64,
    pub iterations: usize,
    /// Largest step against the expected direction of either sequence.
    pub monotonicity_defect: f64,
}

impl SteadyStateResult {
    pub fn save_csv(&self, path: &Path) -> Result<(), SteadyStateError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,u")?;
        for (x, u) in self.x.iter().zip(&self.u) {
            writeln!(out, "{x},{u}")?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Finish with Newton once the brackets are within `newton_switch`.
    pub newton: bool,
    pub newton_switch: f64,
    /// Fixed subsolution scale; `None` runs the halving search from 0.5.
    pub kappa: Option<f64>,
    pub eigen: EigenOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iter: 2_000_000,
            newton: false,
            newton_switch: 1e-6,
            kappa: None,
            eigen: EigenOptions::default(),
        }
    }
}

/// The nonlinear map `G(u) = T u + f(x, u)` on one grid.
pub struct Problem<'a> {
    transport: DiscreteOperator,
    growth: &'a GrowthModel,
    x: Vec<f64>,
    c: f64,
    epsilon: f64,
}

impl<'a> Problem<'a> {
    pub fn new(
        grid: Grid,
        kernel: &Kernel,
        growth: &'a GrowthModel,
        c: f64,
        epsilon: f64,
    ) -> Result<Self, SteadyStateError> {
        let transport = DiscreteOperator::assemble(grid, kernel, c, epsilon, |_| 0.0, false)?;
        Ok(Problem {
            transport,
            growth,
            x: grid.points(),
            c,
            epsilon,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.transport.grid()
    }

    /// `G(u)` written into `out`.
    pub fn residual_into(&self, u: &[f64], out: &mut [f64]) -> Result<(), SteadyStateError> {
        self.transport.apply_into(u, out)?;
        for i in 0..u.len() {
            out[i] += self.growth.f(self.x[i], u[i]);
        }
        Ok(())
    }

    pub fn residual_norm(&self, u: &[f64]) -> Result<f64, SteadyStateError> {
        let mut g = vec![0.0; u.len()];
        self.residual_into(u, &mut g)?;
        Ok(g.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    /// Linearized operator `T + a`.
    pub fn linearization(&self) -> Result<DiscreteOperator, SteadyStateError> {
        let a: Vec<f64> = self.x.iter().map(|&x| self.growth.a(x)).collect();
        Ok(self.transport.with_potential(a)?)
    }

    /// Damping `θ = 1/(1 + L_f + |c|/h + 2ε/h²)`.
    pub fn theta(&self) -> f64 {
        let h = self.grid().h();
        let lf = self.growth.lipschitz_bound(self.growth.saturation());
        1.0 / (1.0 + lf + self.c.abs() / h + 2.0 * self.epsilon / (h * h))
    }

    fn jacobian_band(&self, u: &[f64]) -> Result<BandedLu, SteadyStateError> {
        let fs: Vec<f64> = self.x.iter().zip(u).map(|(&x, &s)| self.growth.ds_f(x, s)).collect();
        Ok(self.transport.with_potential(fs)?.shifted_band(0.0))
    }

    /// Newton's method for `G(u) = 0` from `u0`, keeping iterates in
    /// `[0, S]`. The Jacobian `T + f_s` is Metzler, so `−J` factors without
    /// pivoting near a stable solution.
    pub fn newton(&self, u0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, SteadyStateError> {
        let n = u0.len();
        let cap = self.growth.saturation();
        let mut u = u0.to_vec();
        let mut g = vec![0.0; n];
        self.residual_into(&u, &mut g)?;
        let mut res = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..max_iter {
            if res <= tol {
                return Ok(u);
            }
            let mut band = self.jacobian_band(&u)?;
            band.factor()
                .map_err(|k| SteadyStateError::Newton(format!("Jacobian not an M-matrix at row {k}")))?;
            let mut step = g.clone();
            band.solve(&mut step);
            let mut next: Vec<f64> = u.iter().zip(&step).map(|(a, b)| (a + b).clamp(0.0, cap)).collect();
            self.residual_into(&next, &mut g)?;
            let mut next_res = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut t = 1.0;
            while next_res > res && t > 1e-4 {
                t *= 0.5;
                next = u.iter().zip(&step).map(|(a, b)| (a + t * b).clamp(0.0, cap)).collect();
                self.residual_into(&next, &mut g)?;
                next_res = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            }
            if next_res > res {
                return Err(SteadyStateError::Newton(format!("stalled at residual {res:e}")));
            }
            u = next;
            res = next_res;
        }
        if res <= tol {
            Ok(u)
        } else {
            Err(SteadyStateError::Newton(format!(
                "residual {res:e} after {max_iter} steps"
            )))
        }
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn diagnostics(u: &[f64], h: f64) -> (f64, f64, f64) {
    let l1 = h * u.iter().sum::<f64>();
    let mut grad = 0.0f64;
    let mut h1 = h * u.iter().map(|v| v * v).sum::<f64>();
    for w in u.windows(2) {
        let d = (w[1] - w[0]) / h;
        grad = grad.max(d.abs());
        h1 += h * d * d;
    }
    (l1, grad, h1.sqrt())
}

fn classify(lambda_p: f64) -> Classification {
    if lambda_p.abs() < BORDERLINE_BAND {
        Classification::Borderline
    } else if lambda_p < 0.0 {
        Classification::Nontrivial
    } else {
        Classification::Trivial
    }
}

/// Largest `κ = 0.5 · 2^{−k}` (capped at `S`) with `G(κφ) ≥ 0` up to
/// rounding in the eigenfunction.
pub fn subsolution_scale(problem: &Problem<'_>, eigen: &EigenResult) -> Result<f64, SteadyStateError> {
    let n = eigen.eigenfunction.len();
    let mut g = vec![0.0; n];
    let mut kappa = 0.5f64.min(problem.growth.saturation());
    let min_kappa = 1e-12;
    while kappa >= min_kappa {
        if is_subsolution(problem, eigen, kappa, &mut g)? {
            return Ok(kappa);
        }
        kappa *= 0.5;
    }
    Err(SteadyStateError::NoSubsolution { min_kappa })
}

fn is_subsolution(
    problem: &Problem<'_>,
    eigen: &EigenResult,
    kappa: f64,
    g: &mut [f64],
) -> Result<bool, SteadyStateError> {
    let seed: Vec<f64> = eigen.eigenfunction.iter().map(|p| kappa * p).collect();
    problem.residual_into(&seed, g)?;
    let slack = kappa * (1e-13 + eigen.residual);
    Ok(g.iter().all(|v| *v >= -slack))
}

/// Bounded-domain steady state by monotone iteration between `κφ_p` and `‖S‖∞`.
pub fn solve_bounded(
    grid: Grid,
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<SteadyStateResult, SteadyStateError> {
    let problem = Problem::new(grid, kernel, growth, c, epsilon)?;
    solve_problem(&problem, opts)
}

/// Alias of [`solve_bounded`] for `ε > 0`.
pub fn solve_bounded_viscous(
    grid: Grid,
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<SteadyStateResult, SteadyStateError> {
    if !(epsilon > 0.0) {
        return Err(SteadyStateError::InvalidParameter {
            op: "solve_bounded_viscous",
            name: "epsilon",
            value: epsilon,
        });
    }
    solve_bounded(grid, kernel, growth, c, epsilon, opts)
}

fn solve_problem(problem: &Problem<'_>, opts: &SolveOptions) -> Result<SteadyStateResult, SteadyStateError> {
    if !(opts.tol > 0.0) {
        return Err(SteadyStateError::InvalidParameter {
            op: "solve_bounded",
            name: "tol",
            value: opts.tol,
        });
    }
    let grid = *problem.grid();
    let n = grid.n();
    let lin = problem.linearization()?;
    let eigen = principal_eigenvalue_with(&lin, &opts.eigen)?;
    let classification = classify(eigen.lambda_p);
    let top = problem.growth.saturation();
    let base = |u: Vec<f64>, residual, bracket, kappa, iterations, defect| {
        let (l1_mass, grad_sup, h1_norm) = diagnostics(&u, grid.h());
        SteadyStateResult {
            x: grid.points(),
            u,
            residual,
            classification,
            epsilon: problem.epsilon,
            c: problem.c,
            domain_r: grid.half_width(),
            bracket,
            l1_mass,
            grad_sup,
            h1_norm,
            lambda_p: eigen.lambda_p,
            kappa,
            iterations,
            monotonicity_defect: defect,
        }
    };
    if classification == Classification::Trivial {
        // 0 is an exact fixed point and the only nonnegative one
        let zero = vec![0.0; n];
        let bracket = Bracket {
            sub_sup: 0.0,
            super_sup: top,
        };
        return Ok(base(zero, 0.0, bracket, 0.0, 0, 0.0));
    }
    let theta = problem.theta();
    let mut upper = vec![top; n];
    let (mut lower, kappa) = if classification == Classification::Nontrivial {
        let kappa = match opts.kappa {
            Some(k) => {
                let mut g = vec![0.0; n];
                if !(k > 0.0 && k <= top) || !is_subsolution(problem, &eigen, k, &mut g)? {
                    return Err(SteadyStateError::InvalidParameter {
                        op: "solve_bounded",
                        name: "kappa (not an admissible subsolution scale)",
                        value: k,
                    });
                }
                k
            }
            None => subsolution_scale(problem, &eigen)?,
        };
        (
            eigen.eigenfunction.iter().map(|p| kappa * p).collect::<Vec<f64>>(),
            kappa,
        )
    } else {
        (vec![0.0; n], 0.0)
    };
    let mut g_up = vec![0.0; n];
    let mut g_lo = vec![0.0; n];
    let mut defect = 0.0f64;
    let mut iterations = 0;
    loop {
        problem.residual_into(&upper, &mut g_up)?;
        problem.residual_into(&lower, &mut g_lo)?;
        let mut gap = 0.0f64;
        for i in 0..n {
            let du = theta * g_up[i];
            let dl = theta * g_lo[i];
            defect = defect.max(du).max(-dl);
            upper[i] += du;
            lower[i] += dl;
            let d = upper[i] - lower[i];
            if d < -1e-12 * top.max(1.0) {
                return Err(SteadyStateError::BracketsCrossed { index: i, excess: -d });
            }
            gap = gap.max(d);
        }
        iterations += 1;
        if opts.newton && classification == Classification::Nontrivial && gap <= opts.newton_switch {
            let mid: Vec<f64> = upper.iter().zip(&lower).map(|(a, b)| 0.5 * (a + b)).collect();
            if let Ok(u) = problem.newton(&mid, opts.tol, 50) {
                let inside = u
                    .iter()
                    .zip(upper.iter().zip(&lower))
                    .all(|(v, (hi, lo))| *v <= hi + opts.tol && *v >= lo - opts.tol);
                if inside {
                    let residual = problem.residual_norm(&u)?;
                    let bracket = Bracket {
                        sub_sup: sup_norm(&lower),
                        super_sup: sup_norm(&upper),
                    };
                    return Ok(base(u, residual, bracket, kappa, iterations, defect));
                }
            }
        }
        if gap <= opts.tol {
            let mid: Vec<f64> = upper.iter().zip(&lower).map(|(a, b)| 0.5 * (a + b)).collect();
            let residual = problem.residual_norm(&mid)?;
            if residual <= opts.tol || classification == Classification::Borderline {
                let bracket = Bracket {
                    sub_sup: sup_norm(&lower),
                    super_sup: sup_norm(&upper),
                };
                return Ok(base(mid, residual, bracket, kappa, iterations, defect));
            }
        }
        if iterations >= opts.max_iter {
            if classification == Classification::Borderline {
                let residual = problem.residual_norm(&upper)?;
                let bracket = Bracket {
                    sub_sup: sup_norm(&lower),
                    super_sup: sup_norm(&upper),
                };
                return Ok(base(upper, residual, bracket, kappa, iterations, defect));
            }
            let mid: Vec<f64> = upper.iter().zip(&lower).map(|(a, b)| 0.5 * (a + b)).collect();
            return Err(SteadyStateError::NonConvergence {
                iterations,
                gap,
                residual: problem.residual_norm(&mid)?,
            });
        }
    }
}

/// Damped iteration `u ← u + θ G(u)` from a single seed until
/// `‖G(u)‖∞ ≤ tol`. A sub- or supersolution seed gives a monotone sequence.
pub fn iterate_from(
    problem: &Problem<'_>,
    seed: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize), SteadyStateError> {
    let n = problem.grid().n();
    if seed.len() != n {
        return Err(SteadyStateError::InvalidParameter {
            op: "iterate_from",
            name: "seed length",
            value: seed.len() as f64,
        });
    }
    let theta = problem.theta();
    let mut u = seed.to_vec();
    let mut g = vec![0.0; n];
    for it in 0..max_iter {
        problem.residual_into(&u, &mut g)?;
        let res = sup_norm(&g);
        if res <= tol {
            return Ok((u, it));
        }
        for i in 0..n {
            u[i] += theta * g[i];
        }
    }
    problem.residual_into(&u, &mut g)?;
    Err(SteadyStateError::NonConvergence {
        iterations: max_iter,
        gap: f64::NAN,
        residual: sup_norm(&g),
    })
}

/// One step of a continuation trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceLevel {
    pub level: usize,
    pub param: f64,
    pub sup_increment: f64,
    pub residual: f64,
    pub l1_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationResult {
    pub result: SteadyStateResult,
    pub trace: Vec<TraceLevel>,
    pub levels: Vec<SteadyStateResult>,
}

impl ContinuationResult {
    /// Increments `‖u_{k+1} − u_k‖∞`, skipping the first level.
    pub fn increments(&self) -> Vec<f64> {
        self.trace.iter().skip(1).map(|t| t.sup_increment).collect()
    }

    pub fn save_trace_csv(&self, path: &Path) -> Result<(), SteadyStateError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "level,param,sup_increment,residual,l1_mass")?;
        for t in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{}",
                t.level, t.param, t.sup_increment, t.residual, t.l1_mass
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Warm-started continuation in `ε`. Each level starts Newton from the
/// previous solution and falls back to the bracketed solve if Newton fails.
pub fn vanishing_viscosity(
    grid: Grid,
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    eps_schedule: &[f64],
    opts: &SolveOptions,
) -> Result<ContinuationResult, SteadyStateError> {
    if eps_schedule.is_empty()
        || eps_schedule.windows(2).any(|w| !(w[1] < w[0]))
        || eps_schedule.iter().any(|e| !(*e >= 0.0))
    {
        return Err(SteadyStateError::BadEpsSchedule);
    }
    if c == 0.0 && *eps_schedule.last().expect("nonempty") == 0.0 {
        return Err(SteadyStateError::NeedsDrift);
    }
    let mut levels: Vec<SteadyStateResult> = Vec::new();
    let mut trace = Vec::new();
    for (k, &eps) in eps_schedule.iter().enumerate() {
        let problem = Problem::new(grid, kernel, growth, c, eps)?;
        let res = match levels.last() {
            Some(prev) if prev.classification == Classification::Nontrivial => {
                match problem.newton(&prev.u, opts.tol, 100) {
                    Ok(u) => warm_result(&problem, u, opts, prev)?,
                    Err(_) => solve_problem(&problem, opts)?,
                }
            }
            _ => solve_problem(&problem, opts)?,
        };
        let inc = levels.last().map_or(0.0, |p| {
            p.u.iter().zip(&res.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        });
        trace.push(TraceLevel {
            level: k,
            param: eps,
            sup_increment: inc,
            residual: res.residual,
            l1_mass: res.l1_mass,
        });
        levels.push(res);
        let incs: Vec<f64> = trace.iter().skip(1).map(|t| t.sup_increment).collect();
        if incs.len() >= 3 {
            let m = incs.len();
            if incs[m - 3] <= incs[m - 2] && incs[m - 2] <= incs[m - 1] {
                return Err(SteadyStateError::IncrementsNotDecreasing { level: k });
            }
        }
    }
    Ok(ContinuationResult {
        result: levels.last().expect("nonempty").clone(),
        trace,
        levels,
    })
}

fn warm_result(
    problem: &Problem<'_>,
    u: Vec<f64>,
    opts: &SolveOptions,
    prev: &SteadyStateResult,
) -> Result<SteadyStateResult, SteadyStateError> {
    let grid = *problem.grid();
    let lin = problem.linearization()?;
    let eigen = principal_eigenvalue_with(&lin, &opts.eigen)?;
    let classification = classify(eigen.lambda_p);
    if classification != Classification::Nontrivial {
        return solve_problem(problem, opts);
    }
    let residual = problem.residual_norm(&u)?;
    let (l1_mass, grad_sup, h1_norm) = diagnostics(&u, grid.h());
    let s = sup_norm(&u);
    Ok(SteadyStateResult {
        x: grid.points(),
        u,
        residual,
        classification,
        epsilon: problem.epsilon,
        c: problem.c,
        domain_r: grid.half_width(),
        bracket: Bracket {
            sub_sup: s,
            super_sup: s,
        },
        l1_mass,
        grad_sup,
        h1_norm,
        lambda_p: eigen.lambda_p,
        kappa: prev.kappa,
        iterations: 0,
        monotonicity_defect: 0.0,
    })
}

/// Solves on growing domains of common spacing `h`, checking that the
/// solution grows pointwise on the overlap.
pub fn domain_continuation(
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    epsilon: f64,
    radii: &[f64],
    h: f64,
    opts: &SolveOptions,
) -> Result<ContinuationResult, SteadyStateError> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SteadyStateError::BadSchedule {
            op: "domain_continuation",
        });
    }
    let mut levels: Vec<SteadyStateResult> = Vec::new();
    let mut trace = Vec::new();
    let mut prev_grid: Option<Grid> = None;
    for (k, &r) in radii.iter().enumerate() {
        let grid = Grid::with_spacing(r, h)?;
        let res = solve_bounded(grid, kernel, growth, c, epsilon, opts)?;
        let mut inc = 0.0f64;
        if let (Some(pg), Some(prev)) = (prev_grid, levels.last()) {
            let off = pg.offset_in(&grid).ok_or(SteadyStateError::BadSchedule {
                op: "domain_continuation (grids not nested)",
            })?;
            for (i, &old) in prev.u.iter().enumerate() {
                let new = res.u[off + i];
                if old - new > ORDER_SLACK {
                    return Err(SteadyStateError::OrderViolation {
                        op: "domain_continuation",
                        level: k,
                        x: prev.x[i],
                        excess: old - new,
                    });
                }
                inc = inc.max((new - old).abs());
            }
            // points outside the old domain compare against its zero extension
            for (j, v) in res.u.iter().enumerate() {
                if j < off || j >= off + prev.u.len() {
                    inc = inc.max(v.abs());
                }
            }
        }
        trace.push(TraceLevel {
            level: k,
            param: r,
            sup_increment: inc,
            residual: res.residual,
            l1_mass: res.l1_mass,
        });
        prev_grid = Some(grid);
        levels.push(res);
        if k > 0 && inc < opts.tol {
            break;
        }
    }
    Ok(ContinuationResult {
        result: levels.last().expect("nonempty").clone(),
        trace,
        levels,
    })
}

/// Steady states for the truncations `J_N` along an increasing schedule of
/// `N`, checking pointwise growth in `N`.
pub fn fat_tail_solve(
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    n_schedule: &[f64],
    grid: Grid,
    opts: &SolveOptions,
) -> Result<ContinuationResult, SteadyStateError> {
    if n_schedule.is_empty() || n_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SteadyStateError::BadSchedule { op: "fat_tail_solve" });
    }
    let mut levels: Vec<SteadyStateResult> = Vec::new();
    let mut trace = Vec::new();
    for (k, &n) in n_schedule.iter().enumerate() {
        let truncated = kernel.truncate(n)?;
        let res = solve_bounded(grid, &truncated, growth, c, 0.0, opts)?;
        if k == 0 && res.lambda_p >= 0.0 {
            return Err(SteadyStateError::NotPersistent { lambda_p: res.lambda_p });
        }
        let mut inc = 0.0f64;
        if let Some(prev) = levels.last() {
            for i in 0..res.u.len() {
                let d = res.u[i] - prev.u[i];
                if d < -ORDER_SLACK {
                    return Err(SteadyStateError::OrderViolation {
                        op: "fat_tail_solve",
                        level: k,
                        x: res.x[i],
                        excess: -d,
                    });
                }
                inc = inc.max(d.abs());
            }
        }
        trace.push(TraceLevel {
            level: k,
            param: n,
            sup_increment: inc,
            residual: res.residual,
            l1_mass: res.l1_mass,
        });
        levels.push(res);
    }
    Ok(ContinuationResult {
        result: levels.last().expect("nonempty").clone(),
        trace,
        levels,
    })
}
