//! Principal eigenvalue `λ_p` of `ε D_xx + c D_x + M_Ω + a`.
//!
//! Sign convention: `λ_p` solves `A φ + λ_p φ = 0` with `φ > 0`, so
//! `λ_p = −ρ(A)` where `ρ` is the Perron root of the Metzler matrix `A`.
//!
//! The default solver is inverse iteration with a shift `σ` kept strictly
//! above the Perron root. `σI − A` is then a nonsingular M-matrix: its LU
//! factors without pivoting have positive pivots (which certifies `σ > ρ`)
//! and sign-definite off-diagonals, so every iterate stays positive in
//! floating point. The shift follows the Collatz–Wielandt upper bound
//! `max_i (Aφ)_i / φ_i` down towards `ρ`. A plain shifted power iteration
//! and a dense eigensolve are kept for cross-checks.

use std::fmt;

use thiserror::Error;

use crate::environment::GrowthModel;
use crate::kernel::{Kernel, KernelError};
use crate::operator::{DiscreteOperator, Grid, OperatorError};

/// Default residual tolerance for bounded-domain solves.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default residual tolerance inside domain schedules.
pub const SCHEDULE_TOL: f64 = 1e-8;
/// Slack for monotonicity in the domain.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("spectral::principal_eigenvalue: no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<EigenResult>,
    },
    #[error(
        "spectral::principal_eigenvalue: iterate not positive at index {index} ({value}); Metzler structure broken"
    )]
    NonPositiveIterate { index: usize, value: f64 },
    #[error("spectral::principal_eigenvalue: could not place the shift above the Perron root")]
    ShiftFailure,
    #[error("spectral::dense_oracle: Schur iteration did not converge")]
    DenseNoConvergence,
    #[error("spectral::{op}: parameter `{name}` invalid ({value})")]
    InvalidParameter {
        op: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("spectral::lambda_p_limit: R schedule must be strictly increasing")]
    BadSchedule,
    #[error("spectral::lambda_p_limit: λ_p increased from {previous} to {current} when R grew to {r}")]
    NonMonotoneInR { r: f64, previous: f64, current: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigenMethod {
    /// Inverse iteration with a certified shift above the Perron root.
    #[default]
    ShiftInvert,
    /// Power iteration on `A + kI`.
    Power,
    /// Full nonsymmetric eigensolve (`n ≤ 2048`).
    Dense,
}

impl fmt::Display for EigenMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EigenMethod::ShiftInvert => "perron-shift-invert",
            EigenMethod::Power => "perron-power",
            EigenMethod::Dense => "dense-oracle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: EigenMethod,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: DEFAULT_TOL,
            max_iter: 500,
            method: EigenMethod::ShiftInvert,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        EigenOptions {
            tol,
            ..Default::default()
        }
    }

    pub fn power() -> Self {
        EigenOptions {
            max_iter: 2_000_000,
            method: EigenMethod::Power,
            ..Default::default()
        }
    }

    pub fn dense() -> Self {
        EigenOptions {
            method: EigenMethod::Dense,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub lambda_p: f64,
    /// Positive, normalized to `sup = 1`.
    pub eigenfunction: Vec<f64>,
    /// `sup |A φ + λ_p φ|`.
    pub residual: f64,
    pub domain_r: f64,
    pub iterations: usize,
    pub method: EigenMethod,
    /// Collatz–Wielandt enclosure of `λ_p` from the final iterate.
    pub enclosure: (f64, f64),
    pub residual_history: Vec<f64>,
}

impl EigenResult {
    /// Whether the residuals of the last `k` iterations never increased.
    pub fn residual_tail_nonincreasing(&self, k: usize) -> bool {
        let h = &self.residual_history;
        let start = h.len().saturating_sub(k);
        h[start..].windows(2).all(|w| w[1] <= w[0])
    }
}

fn normalize_sup(v: &mut [f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
    m
}

/// Rayleigh-type estimate of the Perron root and the Collatz–Wielandt bounds.
struct Estimate {
    rho: f64,
    lo: f64,
    hi: f64,
    residual: f64,
}

fn estimate(x: &[f64], ax: &[f64]) -> Estimate {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (xi, yi) in x.iter().zip(ax) {
        num += xi * yi;
        den += xi * xi;
        if *xi > 0.0 {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    let rho = (num / den).clamp(lo, hi);
    let residual = x
        .iter()
        .zip(ax)
        .map(|(xi, yi)| (yi - rho * xi).abs())
        .fold(0.0, f64::max);
    Estimate { rho, lo, hi, residual }
}

fn check_positive(x: &[f64]) -> Result<(), SpectralError> {
    for (index, &value) in x.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(SpectralError::NonPositiveIterate { index, value });
        }
    }
    Ok(())
}

fn finish(
    op: &DiscreteOperator,
    x: Vec<f64>,
    est: &Estimate,
    iterations: usize,
    method: EigenMethod,
    history: Vec<f64>,
) -> EigenResult {
    EigenResult {
        lambda_p: -est.rho,
        eigenfunction: x,
        residual: est.residual,
        domain_r: op.grid().half_width(),
        iterations,
        method,
        enclosure: (-est.hi, -est.lo),
        residual_history: history,
    }
}

/// `λ_p` of an assembled operator with the default shift-invert solver.
pub fn principal_eigenvalue(op: &DiscreteOperator, tol: f64, max_iter: usize) -> Result<EigenResult, SpectralError> {
    principal_eigenvalue_with(
        op,
        &EigenOptions {
            tol,
            max_iter,
            method: EigenMethod::ShiftInvert,
        },
    )
}

/// `λ_p` with an explicit choice of solver.
pub fn principal_eigenvalue_with(op: &DiscreteOperator, opts: &EigenOptions) -> Result<EigenResult, SpectralError> {
    if !(opts.tol > 0.0) {
        return Err(SpectralError::InvalidParameter {
            op: "principal_eigenvalue",
            name: "tol",
            value: opts.tol,
        });
    }
    match opts.method {
        EigenMethod::ShiftInvert => shift_invert(op, opts),
        EigenMethod::Power => power(op, opts),
        EigenMethod::Dense => dense_oracle(op),
    }
}

fn shift_invert(op: &DiscreteOperator, opts: &EigenOptions) -> Result<EigenResult, SpectralError> {
    let n = op.n();
    let mut x = vec![1.0; n];
    let mut ax = op.apply(&x)?;
    let mut est = estimate(&x, &ax);
    let scale = 1.0 + est.hi.abs().max(est.lo.abs());
    // the row sums bound ρ from above, so the first shift is always valid
    let mut gap = (est.hi - est.lo).max(1e-3 * scale);
    let mut sigma = est.hi + gap;
    let mut factored = None;
    let mut history = Vec::new();
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for iter in 1..=opts.max_iter {
        if factored.is_none() {
            let mut attempts = 0;
            loop {
                let mut band = op.shifted_band(sigma);
                match band.factor() {
                    Ok(()) => {
                        factored = Some(band);
                        break;
                    }
                    Err(_) => {
                        attempts += 1;
                        if attempts > 60 {
                            return Err(SpectralError::ShiftFailure);
                        }
                        gap *= 10.0;
                        sigma = est.hi.max(est.rho) + gap;
                    }
                }
            }
        }
        let lu = factored.as_ref().expect("factored above");
        lu.solve(&mut x);
        normalize_sup(&mut x);
        check_positive(&x)?;
        op.apply_into(&x, &mut ax)?;
        est = estimate(&x, &ax);
        history.push(est.residual);
        if best.as_ref().is_none_or(|b| est.residual < b.1) {
            best = Some((x.clone(), est.residual, est.rho));
        }
        if est.residual <= opts.tol * (1.0 + est.rho.abs()) {
            return Ok(finish(op, x, &est, iter, EigenMethod::ShiftInvert, history));
        }
        let target = (est.hi - est.rho).max(est.residual).max(1e-14 * (1.0 + est.rho.abs()));
        if sigma - est.rho > 8.0 * target {
            gap = target;
            sigma = est.hi + gap;
            factored = None;
        }
    }
    let (bx, _, _) = best.expect("at least one iteration");
    let bax = op.apply(&bx)?;
    let best_est = estimate(&bx, &bax);
    Err(SpectralError::NonConvergence {
        iterations: opts.max_iter,
        residual: best_est.residual,
        best: Box::new(finish(
            op,
            bx,
            &best_est,
            opts.max_iter,
            EigenMethod::ShiftInvert,
            history,
        )),
    })
}

fn power(op: &DiscreteOperator, opts: &EigenOptions) -> Result<EigenResult, SpectralError> {
    let n = op.n();
    let k = op.power_shift();
    let mut x = vec![1.0; n];
    let mut ax = op.apply(&x)?;
    let mut history = Vec::new();
    let mut est = estimate(&x, &ax);
    for iter in 1..=opts.max_iter {
        for i in 0..n {
            x[i] = ax[i] + k * x[i];
        }
        normalize_sup(&mut x);
        check_positive(&x)?;
        op.apply_into(&x, &mut ax)?;
        est = estimate(&x, &ax);
        if iter % 16 == 0 || est.residual <= opts.tol * (1.0 + est.rho.abs()) {
            history.push(est.residual);
        }
        if est.residual <= opts.tol * (1.0 + est.rho.abs()) {
            return Ok(finish(op, x, &est, iter, EigenMethod::Power, history));
        }
    }
    Err(SpectralError::NonConvergence {
        iterations: opts.max_iter,
        residual: est.residual,
        best: Box::new(finish(op, x, &est, opts.max_iter, EigenMethod::Power, history)),
    })
}

/// Dense eigensolve: the eigenvalue of largest real part, with its
/// eigenvector from the null direction of `A − ρI`.
pub fn dense_oracle(op: &DiscreteOperator) -> Result<EigenResult, SpectralError> {
    let m = op.dense_matrix()?;
    let n = op.n();
    let eig = m
        .clone()
        .try_schur(1e-14, 1000 * n)
        .ok_or(SpectralError::DenseNoConvergence)?
        .complex_eigenvalues();
    let rho = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let shifted = &m - nalgebra::DMatrix::<f64>::identity(n, n) * rho;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    let mut x: Vec<f64> = v_t.row(imin).iter().copied().collect();
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    normalize_sup(&mut x);
    let ax = op.apply(&x)?;
    let residual = x
        .iter()
        .zip(&ax)
        .map(|(xi, yi)| (yi - rho * xi).abs())
        .fold(0.0, f64::max);
    Ok(EigenResult {
        lambda_p: -rho,
        eigenfunction: x,
        residual,
        domain_r: op.grid().half_width(),
        iterations: 1,
        method: EigenMethod::Dense,
        enclosure: (-rho, -rho),
        residual_history: vec![residual],
    })
}

/// `−max_i (A 1)_i`: the constant test function's lower bound on `λ_p`.
pub fn constant_test_bound(op: &DiscreteOperator) -> f64 {
    -op.max_row_sum()
}

/// Assembles the linearized operator of a growth model and solves it.
pub fn eigen_for_model(
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    epsilon: f64,
    grid: Grid,
    opts: &EigenOptions,
) -> Result<EigenResult, SpectralError> {
    let op = DiscreteOperator::assemble(grid, kernel, c, epsilon, |x| growth.a(x), false)?;
    principal_eigenvalue_with(&op, opts)
}

/// One level of a domain schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitLevel {
    pub r: f64,
    pub n: usize,
    pub lambda_p: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitResult {
    pub result: EigenResult,
    pub levels: Vec<LimitLevel>,
    /// Whether successive levels met the tolerance before the schedule ran out.
    pub converged_in_r: bool,
}

/// Domain schedule at fixed spacing `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct RSchedule {
    pub radii: Vec<f64>,
    pub h: f64,
}

impl RSchedule {
    /// `R_k = R₀ 2^k`, `k < levels`.
    pub fn geometric(r0: f64, levels: usize, h: f64) -> Self {
        RSchedule {
            radii: (0..levels).map(|k| r0 * 2f64.powi(k as i32)).collect(),
            h,
        }
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.radii.is_empty() || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SpectralError::BadSchedule);
        }
        if !(self.h > 0.0) {
            return Err(SpectralError::InvalidParameter {
                op: "lambda_p_limit",
                name: "h",
                value: self.h,
            });
        }
        Ok(())
    }
}

/// `λ_p` along a growing sequence of domains, stopping once successive
/// values differ by less than `tol`. Errors when a level is certified (by the
/// Collatz–Wielandt enclosures) to sit above the previous one.
pub fn lambda_p_limit(
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    epsilon: f64,
    schedule: &RSchedule,
    tol: f64,
    opts: &EigenOptions,
) -> Result<LimitResult, SpectralError> {
    schedule.validate()?;
    let needed = growth.extent()
        + match kernel.support() {
            crate::kernel::Support::Bounded(r) => r,
            crate::kernel::Support::Unbounded { .. } => 0.0,
        };
    if schedule.radii[0] < needed {
        return Err(SpectralError::InvalidParameter {
            op: "lambda_p_limit",
            name: "R_0 (below niche radius + kernel support)",
            value: schedule.radii[0],
        });
    }
    let mut levels: Vec<LimitLevel> = Vec::new();
    let mut last: Option<EigenResult> = None;
    for &r in &schedule.radii {
        let grid = Grid::with_spacing(r, schedule.h)?;
        let res = eigen_for_model(kernel, growth, c, epsilon, grid, opts)?;
        if let Some(prev) = &last {
            // certified violation only: the new lower bound clears the old upper bound
            if res.enclosure.0 > prev.enclosure.1 + MONOTONE_SLACK {
                return Err(SpectralError::NonMonotoneInR {
                    r,
                    previous: prev.lambda_p,
                    current: res.lambda_p,
                });
            }
        }
        levels.push(LimitLevel {
            r,
            n: grid.n(),
            lambda_p: res.lambda_p,
            residual: res.residual,
            iterations: res.iterations,
        });
        let done = last.as_ref().is_some_and(|p| (p.lambda_p - res.lambda_p).abs() < tol);
        last = Some(res);
        if done {
            return Ok(LimitResult {
                result: last.expect("set above"),
                levels,
                converged_in_r: true,
            });
        }
    }
    Ok(LimitResult {
        result: last.expect("nonempty schedule"),
        levels,
        converged_in_r: false,
    })
}

/// Lower bounds on `λ_p` from exponential test functions `e^{−μx}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaBounds {
    /// `max_μ [cμ + 1 − ∫J(z)e^{μz}dz − sup a]`.
    pub lower: f64,
    pub argmax_mu: f64,
    pub certificates: Vec<(f64, f64)>,
    /// `μ` values whose transform diverges.
    pub skipped: Vec<f64>,
}

pub fn analytic_lambda_bounds(kernel: &Kernel, growth: &GrowthModel, c: f64, mu_grid: &[f64]) -> LambdaBounds {
    let sup_a = growth.sup_a();
    let mut certificates = Vec::new();
    let mut skipped = Vec::new();
    for &mu in mu_grid {
        match kernel.laplace(mu) {
            Ok(l) => certificates.push((mu, c * mu + 1.0 - l - sup_a)),
            Err(_) => skipped.push(mu),
        }
    }
    let (argmax_mu, lower) =
        certificates.iter().copied().fold(
            (f64::NAN, f64::NEG_INFINITY),
            |acc, (m, v)| if v > acc.1 { (m, v) } else { acc },
        );
    LambdaBounds {
        lower,
        argmax_mu,
        certificates,
        skipped,
    }
}

/// `|λ_p(A) − λ_p(Aᵀ)|` from two independent solves.
pub fn duality_residual(op: &DiscreteOperator, opts: &EigenOptions) -> Result<f64, SpectralError> {
    let a = principal_eigenvalue_with(op, opts)?;
    let t = principal_eigenvalue_with(&op.transpose(), opts)?;
    Ok((a.lambda_p - t.lambda_p).abs())
}

/// The dual built from the continuum formula: reflected kernel, `−c`.
pub fn continuum_dual(
    grid: Grid,
    kernel: &Kernel,
    c: f64,
    epsilon: f64,
    a: impl Fn(f64) -> f64,
) -> Result<DiscreteOperator, SpectralError> {
    Ok(DiscreteOperator::assemble(
        grid,
        &kernel.reflect(),
        -c,
        epsilon,
        a,
        false,
    )?)
}

/// `|λ_p(c, J, a(x)) − λ_p(−c, J*, a(−x))|` on a symmetric grid.
pub fn reflection_identity_check(
    kernel: &Kernel,
    a: impl Fn(f64) -> f64,
    c: f64,
    epsilon: f64,
    grid: Grid,
    opts: &EigenOptions,
) -> Result<f64, SpectralError> {
    let a_values: Vec<f64> = grid.points().into_iter().map(&a).collect();
    let reflected: Vec<f64> = a_values.iter().rev().copied().collect();
    let h = grid.h();
    let forward = DiscreteOperator::from_parts(grid, &kernel.discretize(h)?, c, epsilon, a_values, false)?;
    let mirror = DiscreteOperator::from_parts(grid, &kernel.reflect().discretize(h)?, -c, epsilon, reflected, false)?;
    let l1 = principal_eigenvalue_with(&forward, opts)?;
    let l2 = principal_eigenvalue_with(&mirror, opts)?;
    Ok((l1.lambda_p - l2.lambda_p).abs())
}

/// Two-grid extrapolation for a first-order scheme: `2 λ(h/2) − λ(h)`.
pub fn richardson(lambda_h: f64, lambda_half: f64) -> f64 {
    2.0 * lambda_half - lambda_h
}
