//! Critical shift speeds.
//!
//! `c*` and `c**` come from the sign of `c ↦ λ_p(c)`: on each side of 0,
//! `c*` is the first sign change met moving outward and `c**` the last.
//! Whether the two coincide is not assumed; the scan records every sign
//! change and reports whether there was exactly one per side.
//!
//! Closed-form bounds: `c_α^± = inf_α (∫J(±z)e^{αz}dz − 1 + sup a)/α`
//! (the same quantity as `c₀^±`), the symmetric estimates in terms of the
//! second moment, and the fat-tail bound `c#` built from the barrier
//! `w_τ(x) = 1 − τx` for `x ≤ 0`, `1/(1 + τx)` for `x ≥ 0`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::environment::{GrowthError, GrowthModel, TailBound};
use crate::kernel::{Kernel, KernelError, MomentRange, Orientation};
use crate::spectral::{lambda_p_limit, EigenOptions, RSchedule, SpectralError};

#[derive(Debug, Error)]
pub enum SpeedError {
    #[error("critical_speed::find_speeds: not-persistent-at-rest (λ_p(0) = {lambda_p})")]
    NotPersistentAtRest { lambda_p: f64 },
    #[error("critical_speed::{op}: parameter `{name}` invalid ({value})")]
    InvalidParameter {
        op: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("critical_speed::{op}: kernel must be symmetric")]
    NotSymmetric { op: &'static str },
    #[error("critical_speed::symmetric_remark_values: sup a = {0} ≤ 0")]
    NonPositiveSupA(f64),
    #[error("critical_speed::find_speeds: bracket endpoint c = {c} has the wrong sign (λ_p = {lambda_p})")]
    BracketCheckFailed { c: f64, lambda_p: f64 },
    #[error("critical_speed::find_speeds: thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("critical_speed::save: {0}")]
    Io(#[from] std::io::Error),
}

/// Minimum of `g(α)` over a range of `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedBound {
    pub value: f64,
    pub argmin: f64,
    /// False when the minimum sits on the edge of the search range.
    pub interior: bool,
}

/// `g(α) = (∫J(±z)e^{αz}dz − 1 + sup a)/α`.
pub fn speed_functional(kernel: &Kernel, sup_a: f64, orientation: Orientation, alpha: f64) -> Result<f64, KernelError> {
    Ok((kernel.exponential_moment(alpha, orientation)? - 1.0 + sup_a) / alpha)
}

/// `c_α^±`: coarse log-grid scan of `g`, then golden-section refinement.
pub fn spectral_speed_bound(
    kernel: &Kernel,
    growth: &GrowthModel,
    orientation: Orientation,
    alpha_range: (f64, f64),
) -> Result<SpeedBound, SpeedError> {
    let (lo, hi) = alpha_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(SpeedError::InvalidParameter {
            op: "spectral_speed_bound",
            name: "alpha_range",
            value: lo,
        });
    }
    let sup_a = growth.sup_a();
    let g =
        |a: f64| speed_functional(kernel, sup_a, orientation, a).map(|v| if v.is_nan() { f64::INFINITY } else { v });
    const COARSE: usize = 200;
    let ratio = (hi / lo).ln();
    let alphas: Vec<f64> = (0..=COARSE)
        .map(|i| lo * (ratio * i as f64 / COARSE as f64).exp())
        .collect();
    let mut values = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        values.push(g(a)?);
    }
    let (imin, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    if imin == 0 || imin == COARSE {
        return Ok(SpeedBound {
            value: values[imin],
            argmin: alphas[imin],
            interior: false,
        });
    }
    let (mut a, mut b) = (alphas[imin - 1], alphas[imin + 1]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = g(x1)?;
    let mut f2 = g(x2)?;
    while b - a > 1e-12 * (1.0 + b.abs()) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2)?;
        }
    }
    let argmin = 0.5 * (a + b);
    Ok(SpeedBound {
        value: g(argmin)?,
        argmin,
        interior: true,
    })
}

/// Default `α` search range.
pub const ALPHA_RANGE: (f64, f64) = (1e-3, 60.0);

/// `(2√(m₂ sup a), √(2 m₂ sup a))` for a symmetric kernel. The first is the
/// value quoted as a lower bound on `c₀`; only the second follows from
/// `∫J cosh(αz) ≥ 1 + α² m₂/2`, and only the second is a valid bound.
pub fn symmetric_remark_values(kernel: &Kernel, growth: &GrowthModel) -> Result<(f64, f64), SpeedError> {
    if !kernel.is_symmetric() {
        return Err(SpeedError::NotSymmetric {
            op: "symmetric_remark_values",
        });
    }
    let sup_a = growth.sup_a();
    if !(sup_a > 0.0) {
        return Err(SpeedError::NonPositiveSupA(sup_a));
    }
    let m2 = kernel.moment(2, MomentRange::Full)?;
    Ok((2.0 * (m2 * sup_a).sqrt(), (2.0 * m2 * sup_a).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FatTailBound {
    pub c_hash: f64,
    pub tau0: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub r0: f64,
    pub kappa: f64,
    pub delta: f64,
    pub m1: f64,
    pub m2: f64,
    /// `max (ℜ[w] + δw)₊` over the check points, at `c = c#`.
    pub barrier_residual: f64,
}

/// Barrier `w_τ`.
pub fn barrier(tau: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0 - tau * x
    } else {
        1.0 / (1.0 + tau * x)
    }
}

fn barrier_slope(tau: f64, x: f64) -> f64 {
    if x <= 0.0 {
        -tau
    } else {
        -tau / ((1.0 + tau * x) * (1.0 + tau * x))
    }
}

/// `c w' + (J ⋆ w − w) + (a + δ) w` at `x`, trapezoid rule in `z` with
/// spacing `dz` over the kernel support.
pub fn barrier_operator(kernel: &Kernel, growth: &GrowthModel, c: f64, tau: f64, delta: f64, x: f64, dz: f64) -> f64 {
    let (lo, hi) = kernel.support_interval();
    let m = ((hi - lo) / dz).ceil() as usize;
    let step = (hi - lo) / m as f64;
    let mut conv = 0.0;
    for j in 0..=m {
        let z = lo + step * j as f64;
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        conv += w * kernel.density(z) * barrier(tau, x - z);
    }
    conv *= step;
    let wx = barrier(tau, x);
    c * barrier_slope(tau, x) + conv - wx + (growth.a(x) + delta) * wx
}

/// Fat-tail speed bound `c# = max(c₀, c₁, c₂)` for a symmetric kernel with
/// finite second moment. `delta = None` takes half the tail margin.
pub fn fat_tail_speed_bound(
    kernel: &Kernel,
    growth: &GrowthModel,
    delta: Option<f64>,
) -> Result<FatTailBound, SpeedError> {
    if !kernel.is_symmetric() {
        return Err(SpeedError::NotSymmetric {
            op: "fat_tail_speed_bound",
        });
    }
    let delta = match delta {
        Some(d) => d,
        None => {
            let (l, r) = growth.a_tails();
            0.5 * (-l.max(r))
        }
    };
    let TailBound { r0, kappa, delta } = growth.tail_bounds(delta)?;
    let m1 = kernel.moment(1, MomentRange::Half)?;
    let m2 = kernel.moment(2, MomentRange::Half)?;
    let tau0 = (-m1 + (m1 * m1 + 4.0 * kappa * m2).sqrt()) / (2.0 * m2);
    assert!(tau0 > 0.0, "τ₀ must be positive for κ, M₂ > 0");
    let sup_a = growth.sup_a();
    let factor = (1.0 + tau0 * r0) / tau0;
    let c0 = m1;
    let c1 = c0 + (sup_a + delta) * factor;
    let c2 = (kappa + delta + sup_a) * factor;
    let c_hash = c0.max(c1).max(c2);
    // check points on [−4R₀ − 4, 4R₀ + 4], staying off the kink at 0
    let span = 4.0 * r0 + 4.0;
    let mut barrier_residual = 0.0f64;
    for i in 0..=400 {
        let x = -span + 2.0 * span * i as f64 / 400.0;
        if x.abs() < 1e-3 {
            continue;
        }
        let v = barrier_operator(kernel, growth, c_hash, tau0, delta, x, 0.01);
        barrier_residual = barrier_residual.max(v);
    }
    Ok(FatTailBound {
        c_hash,
        tau0,
        c0,
        c1,
        c2,
        r0,
        kappa,
        delta,
        m1,
        m2,
        barrier_residual,
    })
}

/// Interval `[lo, hi]` with `λ_p(lo) < 0 ≤ λ_p(hi)` (magnitudes of `c` for
/// the minus side). `hi = ∞` when no sign change was found.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedBracket {
    pub lo: f64,
    pub hi: f64,
}

impl SpeedBracket {
    pub fn is_closed(&self) -> bool {
        self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// One `λ_p(c)` evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaSample {
    pub c: f64,
    pub lambda_p: f64,
    pub residual: f64,
    pub r: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged_in_r: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPolicy {
    pub r0: f64,
    pub levels: usize,
    pub h: f64,
    pub r_tol: f64,
    pub eigen_tol: f64,
    pub points_per_side: usize,
    /// Scan `[−f c_α^−, f c_α^+]` when no explicit range is given.
    pub range_factor: f64,
    pub c_range: Option<(f64, f64)>,
    pub bracket_tol: f64,
    pub workers: usize,
}

impl Default for ScanPolicy {
    fn default() -> Self {
        ScanPolicy {
            r0: 8.0,
            levels: 5,
            h: 0.05,
            r_tol: 1e-4,
            eigen_tol: 1e-8,
            points_per_side: 21,
            range_factor: 1.25,
            c_range: None,
            bracket_tol: 1e-3,
            workers: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedBounds {
    pub c_alpha_plus: Option<SpeedBound>,
    pub c_alpha_minus: Option<SpeedBound>,
    /// `(2√(m₂ sup a), √(2 m₂ sup a))` when the kernel is symmetric.
    pub symmetric_values: Option<(f64, f64)>,
    pub fat_tail: Option<FatTailBound>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalSpeedReport {
    pub c_star_plus: SpeedBracket,
    pub c_star_minus: SpeedBracket,
    pub c_dstar_plus: SpeedBracket,
    pub c_dstar_minus: SpeedBracket,
    /// Every evaluated `λ_p(c)`, sorted by `c`.
    pub lambda_curve: Vec<LambdaSample>,
    pub bounds: SpeedBounds,
    pub monotone_sign_structure: bool,
    pub sign_changes_plus: usize,
    pub sign_changes_minus: usize,
    pub scan_range: (f64, f64),
    pub policy: ScanPolicy,
}

/// Closed-form speed bounds for any kernel: `c_α^±` for thin tails, the
/// symmetric remark values when `J` is even, `c#` for fat tails.
pub fn speed_bounds(kernel: &Kernel, growth: &GrowthModel) -> Result<SpeedBounds, SpeedError> {
    let fat = kernel.is_fat_tailed();
    let (plus, minus) = if fat {
        (None, None)
    } else {
        (
            Some(spectral_speed_bound(kernel, growth, Orientation::Plus, ALPHA_RANGE)?),
            Some(spectral_speed_bound(kernel, growth, Orientation::Minus, ALPHA_RANGE)?),
        )
    };
    let symmetric_values = if kernel.is_symmetric() && growth.sup_a() > 0.0 {
        Some(symmetric_remark_values(kernel, growth)?)
    } else {
        None
    };
    let fat_tail = if fat && kernel.is_symmetric() {
        Some(fat_tail_speed_bound(kernel, growth, None)?)
    } else {
        None
    };
    Ok(SpeedBounds {
        c_alpha_plus: plus,
        c_alpha_minus: minus,
        symmetric_values,
        fat_tail,
    })
}

/// `λ_p(c)` through the domain limit.
pub fn lambda_at(
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    policy: &ScanPolicy,
    eigen_tol: f64,
) -> Result<LambdaSample, SpeedError> {
    let schedule = RSchedule::geometric(policy.r0, policy.levels, policy.h);
    let lim = lambda_p_limit(
        kernel,
        growth,
        c,
        0.0,
        &schedule,
        policy.r_tol,
        &EigenOptions::with_tol(eigen_tol),
    )?;
    let last = lim.levels.last().expect("nonempty schedule");
    Ok(LambdaSample {
        c,
        lambda_p: lim.result.lambda_p,
        residual: lim.result.residual,
        r: last.r,
        n: last.n,
        iterations: last.iterations,
        converged_in_r: lim.converged_in_r,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, SpeedError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SpeedError::ThreadPool(e.to_string()))
}

/// Evaluates `λ_p` at each `c` on a local pool; the output order follows `cs`.
pub fn lambda_curve(
    kernel: &Kernel,
    growth: &GrowthModel,
    cs: &[f64],
    policy: &ScanPolicy,
) -> Result<Vec<LambdaSample>, SpeedError> {
    let pool = pool(policy.workers)?;
    pool.install(|| {
        cs.par_iter()
            .map(|&c| lambda_at(kernel, growth, c, policy, policy.eigen_tol))
            .collect()
    })
}

/// Final `(inside, outside)` pair and every sample taken on the way.
type Bisection = (f64, f64, Vec<LambdaSample>);

/// Bisects `[lo, hi]` (signed `c`, `λ(lo) < 0 ≤ λ(hi)` after orientation)
/// down to `tol`, recording every evaluation.
fn bisect(
    kernel: &Kernel,
    growth: &GrowthModel,
    mut inside: f64,
    mut outside: f64,
    policy: &ScanPolicy,
) -> Result<Bisection, SpeedError> {
    let mut samples = Vec::new();
    while (outside - inside).abs() > policy.bracket_tol {
        let mid = 0.5 * (inside + outside);
        let s = lambda_at(kernel, growth, mid, policy, policy.eigen_tol)?;
        if s.lambda_p < 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
        samples.push(s);
    }
    Ok((inside, outside, samples))
}

/// Sign changes along one side of the scan: pairs `(inside, outside)` of
/// adjacent samples ordered outward from 0.
fn sign_changes(side: &[LambdaSample]) -> Vec<(usize, usize)> {
    side.windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0].lambda_p < 0.0) != (w[1].lambda_p < 0.0))
        .map(|(i, _)| (i, i + 1))
        .collect()
}

/// Scans `λ_p(c)`, brackets `c*` and `c**` on both sides of 0.
pub fn find_speeds(
    kernel: &Kernel,
    growth: &GrowthModel,
    policy: &ScanPolicy,
) -> Result<CriticalSpeedReport, SpeedError> {
    if policy.points_per_side < 2 {
        return Err(SpeedError::InvalidParameter {
            op: "find_speeds",
            name: "points_per_side",
            value: policy.points_per_side as f64,
        });
    }
    if !(policy.bracket_tol > 0.0) {
        return Err(SpeedError::InvalidParameter {
            op: "find_speeds",
            name: "bracket_tol",
            value: policy.bracket_tol,
        });
    }
    let bounds = speed_bounds(kernel, growth)?;
    let (cmin, cmax) = match policy.c_range {
        Some((a, b)) => {
            if !(a < 0.0 && b > 0.0) {
                return Err(SpeedError::InvalidParameter {
                    op: "find_speeds",
                    name: "c_range (must straddle 0)",
                    value: a,
                });
            }
            (a, b)
        }
        None => {
            let f = policy.range_factor;
            match (bounds.c_alpha_plus, bounds.c_alpha_minus, bounds.fat_tail) {
                (Some(p), Some(m), _) => (-f * m.value, f * p.value),
                (_, _, Some(ft)) => (-f * ft.c_hash, f * ft.c_hash),
                _ => {
                    return Err(SpeedError::InvalidParameter {
                        op: "find_speeds",
                        name: "c_range (required for asymmetric fat tails)",
                        value: f64::NAN,
                    })
                }
            }
        }
    };
    let k = policy.points_per_side - 1;
    let plus_cs: Vec<f64> = (0..=k).map(|i| cmax * i as f64 / k as f64).collect();
    let minus_cs: Vec<f64> = (1..=k).map(|i| cmin * i as f64 / k as f64).collect();
    let mut all_cs = plus_cs.clone();
    all_cs.extend(&minus_cs);
    let samples = lambda_curve(kernel, growth, &all_cs, policy)?;
    let at_rest = samples[0];
    if at_rest.lambda_p >= 0.0 {
        return Err(SpeedError::NotPersistentAtRest {
            lambda_p: at_rest.lambda_p,
        });
    }
    let plus: Vec<LambdaSample> = samples[..=k].to_vec();
    let mut minus: Vec<LambdaSample> = vec![at_rest];
    minus.extend_from_slice(&samples[k + 1..]);

    let pool = pool(policy.workers)?;
    let side_result =
        |side: &[LambdaSample]| -> Result<(SpeedBracket, SpeedBracket, usize, Vec<LambdaSample>), SpeedError> {
            let changes = sign_changes(side);
            let last = side[side.len() - 1];
            if changes.is_empty() {
                let open = SpeedBracket {
                    lo: last.c.abs(),
                    hi: f64::INFINITY,
                };
                return Ok((open, open, 0, Vec::new()));
            }
            // first change: from negative to nonnegative moving outward
            let first = changes[0];
            let last_change = changes[changes.len() - 1];
            let mut pairs = vec![first];
            if last_change != first {
                pairs.push(last_change);
            }
            let refined: Vec<Result<Bisection, SpeedError>> = pool.install(|| {
                pairs
                    .par_iter()
                    .map(|&(i, j)| {
                        let (a, b) = (side[i], side[j]);
                        // orient so that `inside` has λ < 0
                        let (inside, outside) = if a.lambda_p < 0.0 { (a.c, b.c) } else { (b.c, a.c) };
                        bisect(kernel, growth, inside, outside, policy)
                    })
                    .collect()
            });
            let mut extra = Vec::new();
            let mut brackets = Vec::new();
            for r in refined {
                let (inside, outside, s) = r?;
                extra.extend(s);
                let (lo, hi) = if inside.abs() <= outside.abs() {
                    (inside.abs(), outside.abs())
                } else {
                    (outside.abs(), inside.abs())
                };
                brackets.push(SpeedBracket { lo, hi });
            }
            let star = brackets[0];
            let mut dstar = *brackets.last().expect("nonempty");
            // the last change may lead back into λ < 0 beyond the scan
            if side[side.len() - 1].lambda_p < 0.0 {
                dstar = SpeedBracket {
                    lo: last.c.abs(),
                    hi: f64::INFINITY,
                };
            }
            Ok((star, dstar, changes.len(), extra))
        };
    let (star_p, dstar_p, n_plus, extra_p) = side_result(&plus)?;
    let (star_m, dstar_m, n_minus, extra_m) = side_result(&minus)?;

    let mut curve: Vec<LambdaSample> = samples;
    curve.extend(extra_p);
    curve.extend(extra_m);
    curve.sort_by(|a, b| a.c.total_cmp(&b.c));
    curve.dedup_by(|a, b| a.c == b.c);

    // independent re-check of the endpoint signs at a tighter tolerance
    let mut checks = Vec::new();
    for (br, sign) in [(star_p, 1.0), (dstar_p, 1.0), (star_m, -1.0), (dstar_m, -1.0)] {
        if br.is_closed() {
            checks.push((sign * br.lo, true));
            checks.push((sign * br.hi, false));
        }
    }
    let verified: Vec<Result<LambdaSample, SpeedError>> = pool.install(|| {
        checks
            .par_iter()
            .map(|&(c, _)| lambda_at(kernel, growth, c, policy, policy.eigen_tol * 1e-2))
            .collect()
    });
    for ((c, negative), s) in checks.iter().zip(verified) {
        let s = s?;
        if (s.lambda_p < 0.0) != *negative {
            return Err(SpeedError::BracketCheckFailed {
                c: *c,
                lambda_p: s.lambda_p,
            });
        }
    }

    Ok(CriticalSpeedReport {
        c_star_plus: star_p,
        c_star_minus: star_m,
        c_dstar_plus: dstar_p,
        c_dstar_minus: dstar_m,
        lambda_curve: curve,
        bounds,
        monotone_sign_structure: n_plus <= 1 && n_minus <= 1,
        sign_changes_plus: n_plus,
        sign_changes_minus: n_minus,
        scan_range: (cmin, cmax),
        policy: *policy,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x}"))
}

impl CriticalSpeedReport {
    /// `key = value` lines grouped by `[section]`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let br = |s: &mut String, name: &str, b: &SpeedBracket| {
            let _ = writeln!(s, "{name}.lo = {}", b.lo);
            let _ = writeln!(
                s,
                "{name}.hi = {}",
                if b.is_closed() {
                    format!("{}", b.hi)
                } else {
                    "open".into()
                }
            );
        };
        s.push_str("[speeds]\n");
        br(&mut s, "c_star_plus", &self.c_star_plus);
        br(&mut s, "c_star_minus", &self.c_star_minus);
        br(&mut s, "c_dstar_plus", &self.c_dstar_plus);
        br(&mut s, "c_dstar_minus", &self.c_dstar_minus);
        let _ = writeln!(s, "monotone_sign_structure = {}", self.monotone_sign_structure);
        let _ = writeln!(s, "sign_changes_plus = {}", self.sign_changes_plus);
        let _ = writeln!(s, "sign_changes_minus = {}", self.sign_changes_minus);
        s.push_str("\n[bounds]\n");
        let b = &self.bounds;
        let _ = writeln!(s, "c_alpha_plus = {}", opt(b.c_alpha_plus.map(|v| v.value)));
        let _ = writeln!(s, "c_alpha_plus.argmin = {}", opt(b.c_alpha_plus.map(|v| v.argmin)));
        let _ = writeln!(s, "c_alpha_minus = {}", opt(b.c_alpha_minus.map(|v| v.value)));
        let _ = writeln!(s, "c_alpha_minus.argmin = {}", opt(b.c_alpha_minus.map(|v| v.argmin)));
        let _ = writeln!(s, "c0_plus = {}", opt(b.c_alpha_plus.map(|v| v.value)));
        let _ = writeln!(s, "c0_minus = {}", opt(b.c_alpha_minus.map(|v| v.value)));
        let _ = writeln!(s, "symmetric_remark_value = {}", opt(b.symmetric_values.map(|v| v.0)));
        let _ = writeln!(
            s,
            "corrected_symmetric_value = {}",
            opt(b.symmetric_values.map(|v| v.1))
        );
        let _ = writeln!(s, "c_hash = {}", opt(b.fat_tail.map(|f| f.c_hash)));
        if let Some(f) = b.fat_tail {
            let _ = writeln!(s, "tau0 = {}", f.tau0);
            let _ = writeln!(s, "c0 = {}", f.c0);
            let _ = writeln!(s, "c1 = {}", f.c1);
            let _ = writeln!(s, "c2 = {}", f.c2);
            let _ = writeln!(s, "R0 = {}", f.r0);
            let _ = writeln!(s, "kappa = {}", f.kappa);
            let _ = writeln!(s, "delta = {}", f.delta);
            let _ = writeln!(s, "barrier_residual = {}", f.barrier_residual);
        }
        s.push_str("\n[scan]\n");
        let p = &self.policy;
        let _ = writeln!(s, "c_min = {}", self.scan_range.0);
        let _ = writeln!(s, "c_max = {}", self.scan_range.1);
        let _ = writeln!(s, "points_per_side = {}", p.points_per_side);
        let _ = writeln!(s, "bracket_tol = {}", p.bracket_tol);
        let _ = writeln!(s, "R0 = {}", p.r0);
        let _ = writeln!(s, "levels = {}", p.levels);
        let _ = writeln!(s, "h = {}", p.h);
        let _ = writeln!(s, "r_tol = {}", p.r_tol);
        let _ = writeln!(s, "eigen_tol = {}", p.eigen_tol);
        let _ = writeln!(s, "evaluations = {}", self.lambda_curve.len());
        s
    }

    pub fn save_text(&self, path: &Path) -> Result<(), SpeedError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// `c,lambda_p` CSV.
    pub fn save_curve_csv(&self, path: &Path) -> Result<(), SpeedError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "c,lambda_p")?;
        for s in &self.lambda_curve {
            writeln!(out, "{},{}", s.c, s.lambda_p)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `c,lambda_p,residual,R,n,iterations` CSV for a sweep.
pub fn save_sweep_csv(samples: &[LambdaSample], path: &Path) -> Result<(), SpeedError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "c,lambda_p,residual,R,n,iterations")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.c, s.lambda_p, s.residual, s.r, s.n, s.iterations
        )?;
    }
    out.flush()?;
    Ok(())
}
