//! Time integration of the nonlocal KPP equation in the fixed or moving frame.
//!
//! Fixed frame: `∂_t U = M_Ω U + f(x − ct, U)`, with the niche re-evaluated
//! at shifted abscissae each step. Moving frame:
//! `∂_t u = c D_x u + M_Ω u + f(x, u)` with the same upwind stencil as the
//! discrete operator.
//!
//! Forward Euler under `dt (1 + L_f + |c|/h) ≤ 1` (the drift term only in the
//! moving frame) maps ordered data to ordered data, keeps solutions
//! nonnegative, and keeps them below `max(‖u₀‖∞, S)`. An RK4 path exists for
//! exploratory runs; it carries none of these guarantees.

use std::fmt;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::environment::GrowthModel;
use crate::kernel::Kernel;
use crate::operator::{DiscreteOperator, Grid, OperatorError};
use crate::steady_state::SteadyStateResult;

pub const EXTINCTION_THRESHOLD: f64 = 1e-3;
pub const PERSISTENCE_THRESHOLD: f64 = 5e-2;
pub const CONVERGENCE_THRESHOLD: f64 = 1e-2;
/// Safety factor applied to the monotonicity bound by the `auto` policy.
pub const AUTO_SAFETY: f64 = 0.9;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("evolution::integrate: dt = {dt} violates the monotonicity bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("evolution::integrate: negative value {value} at x = {x}, t = {t}")]
    NegativeValue { x: f64, t: f64, value: f64 },
    #[error("evolution::{op}: parameter `{name}` invalid ({value})")]
    InvalidParameter {
        op: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("evolution::{op}: vector length {got} does not match grid size {expected}")]
    LengthMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("evolution::comparison_probe: seeds not ordered at index {index}")]
    UnorderedSeeds { index: usize },
    #[error("evolution::long_time_classify: steady state on a different grid")]
    GridMismatch,
    #[error("evolution::long_time_classify: frames differ")]
    FrameMismatch,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("evolution::save: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Fixed,
    Moving,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Fixed => "fixed",
            Frame::Moving => "moving",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    /// `0.9 ×` the monotonicity bound, shrunk so that `T` is a whole number of steps.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    Euler,
    /// Classical RK4; not order-preserving.
    Rk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionOptions {
    pub dt: DtPolicy,
    /// Record norms every `record_every` time units (at least every step).
    pub record_every: f64,
    pub snapshot_times: Vec<f64>,
    /// Reference profile (in the moving frame) for the distance trace.
    pub reference: Option<Vec<f64>>,
    pub scheme: Scheme,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        EvolutionOptions {
            dt: DtPolicy::Auto,
            record_every: 0.5,
            snapshot_times: Vec::new(),
            reference: None,
            scheme: Scheme::Euler,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionTrace {
    pub frame: Frame,
    pub c: f64,
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub l1_masses: Vec<f64>,
    /// Minimum over the niche core (moving with the niche in the fixed frame).
    pub niche_minima: Vec<f64>,
    /// `∫₀ᵗ h Σ f` at each recorded time.
    pub reaction_integrals: Vec<f64>,
    /// `∫₀ᵗ h Σ (T u)`: mass lost through the boundary by dispersal and drift.
    pub flux_integrals: Vec<f64>,
    /// Sup distance to the reference profile, when one was given.
    pub distances: Vec<f64>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub dt: f64,
    pub steps: usize,
    pub final_state: Vec<f64>,
}

impl EvolutionTrace {
    pub fn save_csv(&self, path: &Path) -> Result<(), EvolutionError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,sup_norm,l1_mass,niche_min")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.times[i], self.sup_norms[i], self.l1_masses[i], self.niche_minima[i]
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_snapshot_csv(&self, index: usize, path: &Path) -> Result<(), EvolutionError> {
        let (_, u) = &self.snapshots[index];
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,u")?;
        for (x, v) in self.x.iter().zip(u) {
            writeln!(out, "{x},{v}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Index of the first record in the last quartile of the horizon.
    pub fn last_quartile_start(&self) -> usize {
        let horizon = *self.times.last().unwrap_or(&0.0);
        self.times.iter().position(|t| *t >= 0.75 * horizon).unwrap_or(0)
    }
}

/// Everything a trajectory needs besides its initial data.
#[derive(Clone, Debug)]
pub struct EvolutionSetup<'a> {
    pub kernel: &'a Kernel,
    pub growth: &'a GrowthModel,
    pub c: f64,
    pub grid: Grid,
    pub frame: Frame,
}

struct Stepper<'a> {
    setup: &'a EvolutionSetup<'a>,
    transport: DiscreteOperator,
    x: Vec<f64>,
    core: (f64, f64),
}

impl<'a> Stepper<'a> {
    fn new(setup: &'a EvolutionSetup<'a>) -> Result<Self, EvolutionError> {
        let drift = match setup.frame {
            Frame::Moving => setup.c,
            Frame::Fixed => 0.0,
        };
        let transport = DiscreteOperator::assemble(setup.grid, setup.kernel, drift, 0.0, |_| 0.0, false)?;
        Ok(Stepper {
            setup,
            transport,
            x: setup.grid.points(),
            core: niche_core(setup.growth),
        })
    }

    fn shift(&self, t: f64) -> f64 {
        match self.setup.frame {
            Frame::Moving => 0.0,
            Frame::Fixed => self.setup.c * t,
        }
    }

    /// Right-hand side split into transport and reaction parts.
    fn rhs(&self, u: &[f64], t: f64, tu: &mut [f64], fu: &mut [f64]) -> Result<(), EvolutionError> {
        self.transport.apply_into(u, tu)?;
        let s = self.shift(t);
        for i in 0..u.len() {
            fu[i] = self.setup.growth.f(self.x[i] - s, u[i]);
        }
        Ok(())
    }

    fn niche_min(&self, u: &[f64], t: f64) -> f64 {
        let s = self.shift(t);
        let (lo, hi) = (self.core.0 + s, self.core.1 + s);
        self.x
            .iter()
            .zip(u)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }

    fn distance(&self, u: &[f64], reference: &[f64], t: f64) -> f64 {
        let s = self.shift(t);
        if s == 0.0 {
            return u.iter().zip(reference).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        }
        let grid = self.setup.grid;
        let h = grid.h();
        let r = grid.half_width();
        u.iter()
            .zip(&self.x)
            .map(|(v, x)| {
                let xi = x - s;
                let pos = (xi + r) / h;
                let refv = if pos < 0.0 || pos > (grid.n() - 1) as f64 {
                    0.0
                } else {
                    let i = (pos.floor() as usize).min(grid.n() - 2);
                    let w = pos - i as f64;
                    (1.0 - w) * reference[i] + w * reference[i + 1]
                };
                (v - refv).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// The inner half of the niche interval, or the center point if `a ≤ 0`.
pub fn niche_core(growth: &GrowthModel) -> (f64, f64) {
    match growth.niche_interval() {
        Some((lo, hi)) => {
            let q = 0.25 * (hi - lo);
            (lo + q, hi - q)
        }
        None => (0.0, 0.0),
    }
}

impl<'a> EvolutionSetup<'a> {
    /// `1/(1 + L_f + [moving] |c|/h)` for data bounded by `smax`.
    pub fn dt_bound(&self, smax: f64) -> f64 {
        let lf = self.growth.lipschitz_bound(smax.max(self.growth.saturation()));
        let drift = match self.frame {
            Frame::Moving => self.c.abs() / self.grid.h(),
            Frame::Fixed => 0.0,
        };
        1.0 / (1.0 + lf + drift)
    }

    fn resolve_dt(
        &self,
        policy: DtPolicy,
        horizon: f64,
        smax: f64,
        checked: bool,
    ) -> Result<(f64, usize), EvolutionError> {
        let bound = self.dt_bound(smax);
        let dt = match policy {
            DtPolicy::Auto => AUTO_SAFETY * bound,
            DtPolicy::Fixed(dt) => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(EvolutionError::InvalidParameter {
                        op: "integrate",
                        name: "dt",
                        value: dt,
                    });
                }
                if checked && dt > bound * (1.0 + 1e-12) {
                    return Err(EvolutionError::StepTooLarge { dt, bound });
                }
                dt
            }
        };
        let steps = (horizon / dt).ceil().max(1.0) as usize;
        Ok((horizon / steps as f64, steps))
    }

    pub fn integrate(
        &self,
        initial: &[f64],
        horizon: f64,
        opts: &EvolutionOptions,
    ) -> Result<EvolutionTrace, EvolutionError> {
        self.run(initial, horizon, opts, true)
    }

    /// Skips the step-size check. Only meant for demonstrating what happens
    /// when the bound is ignored.
    pub fn integrate_unchecked(
        &self,
        initial: &[f64],
        horizon: f64,
        opts: &EvolutionOptions,
    ) -> Result<EvolutionTrace, EvolutionError> {
        self.run(initial, horizon, opts, false)
    }

    fn validate_initial(&self, initial: &[f64], op: &'static str) -> Result<f64, EvolutionError> {
        if initial.len() != self.grid.n() {
            return Err(EvolutionError::LengthMismatch {
                op,
                expected: self.grid.n(),
                got: initial.len(),
            });
        }
        let mut sup = 0.0f64;
        for &v in initial {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(EvolutionError::InvalidParameter {
                    op,
                    name: "initial",
                    value: v,
                });
            }
            sup = sup.max(v);
        }
        Ok(sup)
    }

    fn run(
        &self,
        initial: &[f64],
        horizon: f64,
        opts: &EvolutionOptions,
        checked: bool,
    ) -> Result<EvolutionTrace, EvolutionError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(EvolutionError::InvalidParameter {
                op: "integrate",
                name: "T",
                value: horizon,
            });
        }
        let smax = self.validate_initial(initial, "integrate")?;
        let (dt, steps) = self.resolve_dt(opts.dt, horizon, smax, checked && opts.scheme == Scheme::Euler)?;
        if let Some(r) = &opts.reference {
            if r.len() != self.grid.n() {
                return Err(EvolutionError::LengthMismatch {
                    op: "integrate",
                    expected: self.grid.n(),
                    got: r.len(),
                });
            }
        }
        let stepper = Stepper::new(self)?;
        let n = self.grid.n();
        let h = self.grid.h();
        let stride = ((opts.record_every / dt).round() as usize).max(1);
        let mut u = initial.to_vec();
        let mut tu = vec![0.0; n];
        let mut fu = vec![0.0; n];
        let mut trace = EvolutionTrace {
            frame: self.frame,
            c: self.c,
            x: stepper.x.clone(),
            times: Vec::new(),
            sup_norms: Vec::new(),
            l1_masses: Vec::new(),
            niche_minima: Vec::new(),
            reaction_integrals: Vec::new(),
            flux_integrals: Vec::new(),
            distances: Vec::new(),
            snapshots: Vec::new(),
            dt,
            steps,
            final_state: Vec::new(),
        };
        let mut snapshot_queue: Vec<f64> = opts.snapshot_times.clone();
        snapshot_queue.sort_by(f64::total_cmp);
        let mut snap_idx = 0;
        let mut reaction = 0.0;
        let mut flux = 0.0;
        let record = |trace: &mut EvolutionTrace, u: &[f64], t: f64, reaction: f64, flux: f64| {
            trace.times.push(t);
            trace.sup_norms.push(u.iter().fold(0.0, |m, v| m.max(v.abs())));
            trace.l1_masses.push(h * u.iter().sum::<f64>());
            trace.niche_minima.push(stepper.niche_min(u, t));
            trace.reaction_integrals.push(reaction);
            trace.flux_integrals.push(flux);
            if let Some(r) = &opts.reference {
                trace.distances.push(stepper.distance(u, r, t));
            }
        };
        record(&mut trace, &u, 0.0, 0.0, 0.0);
        while snap_idx < snapshot_queue.len() && snapshot_queue[snap_idx] <= 0.0 {
            trace.snapshots.push((0.0, u.clone()));
            snap_idx += 1;
        }
        for m in 0..steps {
            let t = m as f64 * dt;
            match opts.scheme {
                Scheme::Euler => {
                    stepper.rhs(&u, t, &mut tu, &mut fu)?;
                    reaction += dt * h * fu.iter().sum::<f64>();
                    flux += dt * h * tu.iter().sum::<f64>();
                    for i in 0..n {
                        u[i] += dt * (tu[i] + fu[i]);
                    }
                }
                Scheme::Rk4 => {
                    rk4_step(&stepper, &mut u, t, dt, &mut tu, &mut fu)?;
                }
            }
            let t_next = (m + 1) as f64 * dt;
            if checked && opts.scheme == Scheme::Euler {
                if let Some(i) = u.iter().position(|v| *v < 0.0) {
                    return Err(EvolutionError::NegativeValue {
                        x: stepper.x[i],
                        t: t_next,
                        value: u[i],
                    });
                }
            }
            if (m + 1) % stride == 0 || m + 1 == steps {
                record(&mut trace, &u, t_next, reaction, flux);
            }
            while snap_idx < snapshot_queue.len() && snapshot_queue[snap_idx] <= t_next + 0.5 * dt {
                trace.snapshots.push((t_next, u.clone()));
                snap_idx += 1;
            }
        }
        trace.final_state = u;
        Ok(trace)
    }

    /// Co-integrates two ordered seeds with one step size and returns
    /// `max_{t,x} (lower − upper)₊`.
    pub fn comparison_probe(
        &self,
        lower0: &[f64],
        upper0: &[f64],
        horizon: f64,
        dt: DtPolicy,
    ) -> Result<f64, EvolutionError> {
        self.probe(lower0, upper0, horizon, dt, true)
    }

    /// [`EvolutionSetup::comparison_probe`] without the step-size check.
    pub fn comparison_probe_unchecked(
        &self,
        lower0: &[f64],
        upper0: &[f64],
        horizon: f64,
        dt: DtPolicy,
    ) -> Result<f64, EvolutionError> {
        self.probe(lower0, upper0, horizon, dt, false)
    }

    fn probe(
        &self,
        lower0: &[f64],
        upper0: &[f64],
        horizon: f64,
        policy: DtPolicy,
        checked: bool,
    ) -> Result<f64, EvolutionError> {
        let s1 = self.validate_initial(lower0, "comparison_probe")?;
        let s2 = self.validate_initial(upper0, "comparison_probe")?;
        if let Some(index) = lower0.iter().zip(upper0).position(|(a, b)| a > b) {
            return Err(EvolutionError::UnorderedSeeds { index });
        }
        let (dt, steps) = self.resolve_dt(policy, horizon, s1.max(s2), checked)?;
        let stepper = Stepper::new(self)?;
        let n = self.grid.n();
        let mut lo = lower0.to_vec();
        let mut hi = upper0.to_vec();
        let (mut t1, mut f1) = (vec![0.0; n], vec![0.0; n]);
        let (mut t2, mut f2) = (vec![0.0; n], vec![0.0; n]);
        let mut violation = 0.0f64;
        for m in 0..steps {
            let t = m as f64 * dt;
            stepper.rhs(&lo, t, &mut t1, &mut f1)?;
            stepper.rhs(&hi, t, &mut t2, &mut f2)?;
            for i in 0..n {
                lo[i] += dt * (t1[i] + f1[i]);
                hi[i] += dt * (t2[i] + f2[i]);
                violation = violation.max(lo[i] - hi[i]);
            }
        }
        Ok(violation)
    }
}

fn rk4_step(
    stepper: &Stepper<'_>,
    u: &mut [f64],
    t: f64,
    dt: f64,
    tu: &mut [f64],
    fu: &mut [f64],
) -> Result<(), EvolutionError> {
    let n = u.len();
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stage = u.to_vec();
    let weights = [0.0, 0.5, 0.5, 1.0];
    for s in 0..4 {
        if s > 0 {
            for i in 0..n {
                stage[i] = u[i] + weights[s] * dt * k[s - 1][i];
            }
        }
        stepper.rhs(&stage, t + weights[s] * dt, tu, fu)?;
        for i in 0..n {
            k[s][i] = tu[i] + fu[i];
        }
    }
    for i in 0..n {
        u[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
    Ok(())
}

/// Free-function form of [`EvolutionSetup::integrate`].
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    initial: &[f64],
    frame: Frame,
    kernel: &Kernel,
    growth: &GrowthModel,
    c: f64,
    grid: Grid,
    horizon: f64,
    opts: &EvolutionOptions,
) -> Result<EvolutionTrace, EvolutionError> {
    EvolutionSetup {
        kernel,
        growth,
        c,
        grid,
        frame,
    }
    .integrate(initial, horizon, opts)
}

/// Smooth bump `height (1 − (x/w)²)²` on `|x| < w`.
pub fn bump(grid: &Grid, height: f64, half_width: f64) -> Vec<f64> {
    grid.points()
        .into_iter()
        .map(|x| {
            let t = x / half_width;
            if t.abs() < 1.0 {
                height * (1.0 - t * t).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Extinct,
    Persistent,
    Undecided,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Extinct => "extinct",
            Outcome::Persistent => "persistent",
            Outcome::Undecided => "undecided",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub extinction: f64,
    pub persistence: f64,
    pub convergence: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            extinction: EXTINCTION_THRESHOLD,
            persistence: PERSISTENCE_THRESHOLD,
            convergence: CONVERGENCE_THRESHOLD,
        }
    }
}

/// Long-time label of a trace.
///
/// Extinct: final sup-norm below the extinction threshold and nonincreasing
/// over the last quartile. Persistent: niche minimum above the persistence
/// threshold over the last quartile and, when a steady state is supplied,
/// final distance to it below the convergence threshold.
pub fn long_time_classify(
    trace: &EvolutionTrace,
    steady: Option<(&SteadyStateResult, Frame)>,
    thresholds: &Thresholds,
) -> Result<Outcome, EvolutionError> {
    let q = trace.last_quartile_start();
    let sup_final = *trace.sup_norms.last().unwrap_or(&f64::INFINITY);
    let tail = &trace.sup_norms[q..];
    if sup_final < thresholds.extinction && tail.windows(2).all(|w| w[1] <= w[0]) {
        return Ok(Outcome::Extinct);
    }
    if trace.niche_minima[q..].iter().all(|m| *m >= thresholds.persistence) {
        match steady {
            None => return Ok(Outcome::Persistent),
            Some((s, frame)) => {
                if frame != trace.frame {
                    return Err(EvolutionError::FrameMismatch);
                }
                if s.u.len() != trace.final_state.len()
                    || (s.x[0] - trace.x[0]).abs() > 1e-12
                    || (s.x[s.x.len() - 1] - trace.x[trace.x.len() - 1]).abs() > 1e-12
                {
                    return Err(EvolutionError::GridMismatch);
                }
                let d =
                    s.u.iter()
                        .zip(&trace.final_state)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if d < thresholds.convergence {
                    return Ok(Outcome::Persistent);
                }
            }
        }
    }
    Ok(Outcome::Undecided)
}
