//! Dispersal kernels.
//!
//! A [`Kernel`] is a probability density `J` on the line, either one of the
//! presets (all even) or a tabulated density read from two-column data. Every
//! kernel is normalized to unit mass at construction. Unbounded presets are
//! sampled on a declared `sampling_radius` and renormalized there.
//!
//! Truncation multiplies `J` by the fixed cutoff `ζ(z / N)` and is *not*
//! renormalized, so the truncated sequence increases pointwise towards `J`.
//!
//! All quadrature is the composite trapezoid rule on uniform (or tabulated)
//! abscissae; the same rule produces the grid weights in [`DiscreteKernel`].

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use statrs::function::erf::{erf, erfc};
use thiserror::Error;

/// Tail mass allowed beyond the sampling radius of a gaussian.
pub const GAUSSIAN_TAIL_LIMIT: f64 = 1e-10;
/// Tail mass allowed beyond the sampling radius of the quartic fat tail.
pub const FAT_TAIL_LIMIT: f64 = 1e-6;

/// Intervals per unit support half-width used by the quadrature path.
const QUADRATURE_INTERVALS: usize = 200_000;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel::{op}: parameter `{name}` must be positive and finite, got {value}")]
    InvalidParameter {
        op: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("kernel::make_kernel: negative density {value} at sample {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("kernel::make_kernel: density at z = 0 must be positive (got {0})")]
    NotPositiveAtOrigin(f64),
    #[error("kernel::make_kernel: zero mass")]
    ZeroMass,
    #[error("kernel::make_kernel: unbounded profile `{0}` requires a sampling_radius")]
    MissingSamplingRadius(&'static str),
    #[error("kernel::make_kernel: tail mass {tail:.3e} beyond the sampling radius exceeds {limit:.1e}")]
    TailTooHeavy { tail: f64, limit: f64 },
    #[error("kernel::make_kernel: tabulation invalid: {0}")]
    BadTable(String),
    #[error("kernel::moment: order {0} out of range 0..=2")]
    OrderOutOfRange(u32),
    #[error("kernel::exponential_moment: transform-divergent at alpha = {0}")]
    TransformDivergent(f64),
    #[error("kernel::discretize: spacing h = {h} too coarse, J vanishes at ±h (irreducibility needs J(±h) > 0)")]
    TooCoarse { h: f64 },
    #[error("kernel::{op}: {source}")]
    Io {
        op: &'static str,
        #[source]
        source: std::io::Error,
    },
}

/// Shape of a dispersal kernel before normalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    Uniform { radius: f64 },
    Tent { radius: f64 },
    TruncatedCosine { radius: f64 },
    Gaussian { sigma: f64, sampling_radius: Option<f64> },
    FatQuartic { scale: f64, sampling_radius: Option<f64> },
    Tabulated { abscissae: Vec<f64>, densities: Vec<f64> },
}

impl Profile {
    fn name(&self) -> &'static str {
        match self {
            Profile::Uniform { .. } => "uniform",
            Profile::Tent { .. } => "tent",
            Profile::TruncatedCosine { .. } => "truncated_cosine",
            Profile::Gaussian { .. } => "gaussian",
            Profile::FatQuartic { .. } => "fat_quartic",
            Profile::Tabulated { .. } => "tabulated",
        }
    }
}

/// Extent of the (sampled) kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    Bounded(f64),
    Unbounded { sampling_radius: f64 },
}

impl Support {
    pub fn radius(&self) -> f64 {
        match *self {
            Support::Bounded(r) => r,
            Support::Unbounded { sampling_radius } => sampling_radius,
        }
    }
}

/// Which part of the line a moment integrates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentRange {
    /// `∫_ℝ J(z) z^k dz`
    Full,
    /// `∫_0^∞ J(z) z^k dz`
    Half,
}

/// `+` evaluates `∫ J(z) e^{αz} dz`, `−` evaluates `∫ J(−z) e^{αz} dz`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Plus,
    Minus,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Plus => 1.0,
            Orientation::Minus => -1.0,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Plus => "+",
            Orientation::Minus => "-",
        })
    }
}

/// Smooth even cutoff: 1 on `[-1, 1]`, 0 outside `(-2, 2)`,
/// `exp(1 - 1/(1 - (|t|-1)^2))` on the transition band.
pub fn cutoff(t: f64) -> f64 {
    let s = t.abs() - 1.0;
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

// ∫_0^u 1/(1+t^4) dt
fn quartic_mass(u: f64) -> f64 {
    if u.is_infinite() {
        return PI / (2.0 * SQRT_2);
    }
    let a = u * u + SQRT_2 * u + 1.0;
    let b = u * u - SQRT_2 * u + 1.0;
    ((a / b).ln() + 2.0 * (SQRT_2 * u + 1.0).atan() + 2.0 * (SQRT_2 * u - 1.0).atan()) / (4.0 * SQRT_2)
}

// ∫_0^u t^2/(1+t^4) dt
fn quartic_second(u: f64) -> f64 {
    let a = u * u + SQRT_2 * u + 1.0;
    let b = u * u - SQRT_2 * u + 1.0;
    (-(a / b).ln() + 2.0 * (SQRT_2 * u + 1.0).atan() + 2.0 * (SQRT_2 * u - 1.0).atan()) / (4.0 * SQRT_2)
}

/// A unit-mass dispersal kernel (or a truncation of one).
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    profile: Profile,
    /// Mass of the raw profile over its (sampled) support.
    raw_mass: f64,
    /// Truncation scale `N` of `J·ζ(z/N)`, if truncated.
    cutoff: Option<f64>,
}

fn positive(op: &'static str, name: &'static str, value: f64) -> Result<f64, KernelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(KernelError::InvalidParameter { op, name, value })
    }
}

impl Kernel {
    /// Builds and normalizes a kernel.
    pub fn new(profile: Profile) -> Result<Self, KernelError> {
        const OP: &str = "make_kernel";
        let raw_mass = match &profile {
            Profile::Uniform { radius } => 2.0 * positive(OP, "radius", *radius)?,
            Profile::Tent { radius } | Profile::TruncatedCosine { radius } => positive(OP, "radius", *radius)?,
            Profile::Gaussian { sigma, sampling_radius } => {
                let sigma = positive(OP, "sigma", *sigma)?;
                let r = sampling_radius.ok_or(KernelError::MissingSamplingRadius("gaussian"))?;
                let r = positive(OP, "sampling_radius", r)?;
                let tail = erfc(r / (sigma * SQRT_2));
                if tail >= GAUSSIAN_TAIL_LIMIT {
                    return Err(KernelError::TailTooHeavy {
                        tail,
                        limit: GAUSSIAN_TAIL_LIMIT,
                    });
                }
                sigma * (2.0 * PI).sqrt() * erf(r / (sigma * SQRT_2))
            }
            Profile::FatQuartic { scale, sampling_radius } => {
                let s = positive(OP, "scale", *scale)?;
                let r = sampling_radius.ok_or(KernelError::MissingSamplingRadius("fat_quartic"))?;
                let r = positive(OP, "sampling_radius", r)?;
                let rho = r / s;
                // ∫_{|u|>ρ} du/(1+u^4) ≤ 2/(3ρ^3), relative to the full mass π/√2.
                let tail = 2.0 / (3.0 * rho.powi(3)) / (PI / SQRT_2);
                if tail >= FAT_TAIL_LIMIT {
                    return Err(KernelError::TailTooHeavy {
                        tail,
                        limit: FAT_TAIL_LIMIT,
                    });
                }
                2.0 * s * quartic_mass(rho)
            }
            Profile::Tabulated { abscissae, densities } => {
                validate_table(abscissae, densities)?;
                trapezoid_table(abscissae, densities)
            }
        };
        if !(raw_mass > 0.0) {
            return Err(KernelError::ZeroMass);
        }
        let kernel = Kernel {
            profile,
            raw_mass,
            cutoff: None,
        };
        let at_zero = kernel.density(0.0);
        if !(at_zero > 0.0) {
            return Err(KernelError::NotPositiveAtOrigin(at_zero));
        }
        Ok(kernel)
    }

    pub fn uniform(radius: f64) -> Result<Self, KernelError> {
        Kernel::new(Profile::Uniform { radius })
    }

    pub fn tent(radius: f64) -> Result<Self, KernelError> {
        Kernel::new(Profile::Tent { radius })
    }

    pub fn truncated_cosine(radius: f64) -> Result<Self, KernelError> {
        Kernel::new(Profile::TruncatedCosine { radius })
    }

    pub fn gaussian(sigma: f64, sampling_radius: f64) -> Result<Self, KernelError> {
        Kernel::new(Profile::Gaussian {
            sigma,
            sampling_radius: Some(sampling_radius),
        })
    }

    pub fn fat_quartic(scale: f64, sampling_radius: f64) -> Result<Self, KernelError> {
        Kernel::new(Profile::FatQuartic {
            scale,
            sampling_radius: Some(sampling_radius),
        })
    }

    pub fn tabulated(abscissae: Vec<f64>, densities: Vec<f64>) -> Result<Self, KernelError> {
        Kernel::new(Profile::Tabulated { abscissae, densities })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Truncation scale, if this kernel is a truncation.
    pub fn truncation(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn name(&self) -> &'static str {
        self.profile.name()
    }

    fn parent_support(&self) -> (f64, f64) {
        match &self.profile {
            Profile::Uniform { radius } | Profile::Tent { radius } | Profile::TruncatedCosine { radius } => {
                (-radius, *radius)
            }
            Profile::Gaussian { sampling_radius, .. } | Profile::FatQuartic { sampling_radius, .. } => {
                let r = sampling_radius.unwrap_or(0.0);
                (-r, r)
            }
            Profile::Tabulated { abscissae, .. } => (abscissae[0], abscissae[abscissae.len() - 1]),
        }
    }

    /// Closed interval outside which the density vanishes.
    pub fn support_interval(&self) -> (f64, f64) {
        let (lo, hi) = self.parent_support();
        match self.cutoff {
            Some(n) => (lo.max(-2.0 * n), hi.min(2.0 * n)),
            None => (lo, hi),
        }
    }

    pub fn support(&self) -> Support {
        let (lo, hi) = self.support_interval();
        let r = lo.abs().max(hi.abs());
        let (plo, phi) = self.parent_support();
        let clipped = self.cutoff.is_some_and(|n| 2.0 * n < plo.abs().max(phi.abs()));
        match self.profile {
            Profile::Gaussian { .. } | Profile::FatQuartic { .. } if !clipped => {
                Support::Unbounded { sampling_radius: r }
            }
            _ => Support::Bounded(r),
        }
    }

    /// Radius of the smallest centered interval containing the support.
    pub fn support_radius(&self) -> f64 {
        self.support().radius()
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.profile {
            Profile::Tabulated { abscissae, densities } => {
                let n = abscissae.len();
                (0..n).all(|i| abscissae[i] == -abscissae[n - 1 - i] && densities[i] == densities[n - 1 - i])
            }
            _ => true,
        }
    }

    pub fn is_fat_tailed(&self) -> bool {
        matches!(self.profile, Profile::FatQuartic { .. }) && self.cutoff.is_none()
    }

    fn raw(&self, z: f64) -> f64 {
        match &self.profile {
            Profile::Uniform { radius } => {
                if z.abs() <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Tent { radius } => (1.0 - z.abs() / radius).max(0.0),
            Profile::TruncatedCosine { radius } => {
                if z.abs() <= *radius {
                    0.5 * (1.0 + (PI * z / radius).cos())
                } else {
                    0.0
                }
            }
            Profile::Gaussian { sigma, sampling_radius } => {
                if z.abs() <= sampling_radius.unwrap_or(0.0) {
                    (-0.5 * (z / sigma).powi(2)).exp()
                } else {
                    0.0
                }
            }
            Profile::FatQuartic { scale, sampling_radius } => {
                if z.abs() <= sampling_radius.unwrap_or(0.0) {
                    1.0 / (1.0 + (z / scale).powi(4))
                } else {
                    0.0
                }
            }
            Profile::Tabulated { abscissae, densities } => interpolate(abscissae, densities, z),
        }
    }

    /// Density of the untruncated parent kernel.
    fn parent_density(&self, z: f64) -> f64 {
        self.raw(z) / self.raw_mass
    }

    /// `J(z)`.
    pub fn density(&self, z: f64) -> f64 {
        let base = self.parent_density(z);
        match self.cutoff {
            Some(n) => base * cutoff(z / n),
            None => base,
        }
    }

    /// Mass of the kernel: 1 for untruncated kernels, `∫ J_N` otherwise.
    pub fn mass(&self) -> f64 {
        match self.cutoff {
            None => 1.0,
            Some(_) => self.quadrature(|z| self.density(z)),
        }
    }

    /// `∫ J(z) z^k dz` over the full or half line, closed form when available.
    pub fn moment(&self, order: u32, range: MomentRange) -> Result<f64, KernelError> {
        if order > 2 {
            return Err(KernelError::OrderOutOfRange(order));
        }
        if let Some(value) = self.moment_closed_form(order, range) {
            return Ok(value);
        }
        Ok(self.moment_quadrature(order, range))
    }

    fn moment_closed_form(&self, order: u32, range: MomentRange) -> Option<f64> {
        if self.cutoff.is_some() {
            return None;
        }
        // Half-line moments of the even presets; full line doubles even orders.
        let half = match (&self.profile, order) {
            (Profile::Tabulated { .. }, _) => return None,
            (_, 0) => 0.5,
            (Profile::Uniform { radius: r }, 1) => r / 4.0,
            (Profile::Uniform { radius: r }, _) => r * r / 6.0,
            (Profile::Tent { radius: r }, 1) => r / 6.0,
            (Profile::Tent { radius: r }, _) => r * r / 12.0,
            (Profile::TruncatedCosine { radius: r }, 1) => r * (0.25 - 1.0 / (PI * PI)),
            (Profile::TruncatedCosine { radius: r }, _) => r * r * (1.0 / 6.0 - 1.0 / (PI * PI)),
            (Profile::Gaussian { sigma, sampling_radius }, k) => {
                let r = sampling_radius.unwrap_or(0.0);
                let z = erf(r / (sigma * SQRT_2));
                let g = (-0.5 * (r / sigma).powi(2)).exp() / (2.0 * PI).sqrt();
                if k == 1 {
                    sigma * (1.0 / (2.0 * PI).sqrt() - g) / z
                } else {
                    sigma * sigma * (0.5 * z - (r / sigma) * g) / z
                }
            }
            (
                Profile::FatQuartic {
                    scale: s,
                    sampling_radius,
                },
                k,
            ) => {
                let rho = sampling_radius.unwrap_or(0.0) / s;
                let f = quartic_mass(rho);
                if k == 1 {
                    s * (rho * rho).atan() / (4.0 * f)
                } else {
                    s * s * quartic_second(rho) / (2.0 * f)
                }
            }
        };
        Some(match (range, order) {
            (MomentRange::Half, _) => half,
            (MomentRange::Full, 1) => 0.0,
            (MomentRange::Full, _) => 2.0 * half,
        })
    }

    /// Trapezoid-rule moment, regardless of any closed form.
    pub fn moment_quadrature(&self, order: u32, range: MomentRange) -> f64 {
        let k = order as i32;
        match range {
            MomentRange::Full => self.quadrature(|z| self.density(z) * z.powi(k)),
            MomentRange::Half => {
                // the origin sits on the cut, so it carries half weight
                self.quadrature(|z| {
                    if z > 0.0 {
                        self.density(z) * z.powi(k)
                    } else if z == 0.0 {
                        0.5 * self.density(z) * z.powi(k)
                    } else {
                        0.0
                    }
                })
            }
        }
    }

    /// `∫ J(±z) e^{αz} dz`. Fat-tailed kernels only admit `α = 0`.
    pub fn exponential_moment(&self, alpha: f64, orientation: Orientation) -> Result<f64, KernelError> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(KernelError::InvalidParameter {
                op: "exponential_moment",
                name: "alpha",
                value: alpha,
            });
        }
        self.laplace(orientation.sign() * alpha)
    }

    /// `∫ J(z) e^{μz} dz` for any real `μ`.
    pub(crate) fn laplace(&self, mu: f64) -> Result<f64, KernelError> {
        if mu == 0.0 {
            return Ok(self.mass());
        }
        if self.is_fat_tailed() {
            return Err(KernelError::TransformDivergent(mu.abs()));
        }
        if let Some(v) = self.laplace_closed_form(mu) {
            return Ok(v);
        }
        Ok(self.laplace_quadrature(mu))
    }

    fn laplace_closed_form(&self, mu: f64) -> Option<f64> {
        if self.cutoff.is_some() {
            return None;
        }
        let sinhc = |x: f64| {
            if x.abs() < 1e-4 {
                1.0 + x * x / 6.0
            } else {
                x.sinh() / x
            }
        };
        match &self.profile {
            Profile::Uniform { radius } => Some(sinhc(mu * radius)),
            Profile::Tent { radius } => {
                let x = mu * radius;
                Some(if x.abs() < 1e-4 {
                    1.0 + x * x / 12.0
                } else {
                    2.0 * (x.cosh() - 1.0) / (x * x)
                })
            }
            Profile::TruncatedCosine { radius: r } => {
                let k = PI / r;
                let x = mu * r;
                Some(sinhc(x) - mu * x.sinh() / (r * (mu * mu + k * k)))
            }
            Profile::Gaussian { sigma, sampling_radius } => {
                let r = sampling_radius.unwrap_or(0.0);
                let z = erf(r / (sigma * SQRT_2));
                // even profile, so use |μ|; erf(r−s) + erf(r+s) written as a
                // difference of erfc values to avoid cancellation once s > r
                let shift = mu.abs() * sigma * sigma;
                let num = erfc((shift - r) / (sigma * SQRT_2)) - erfc((r + shift) / (sigma * SQRT_2));
                if !(num > 0.0) {
                    return None;
                }
                Some((0.5 * (mu * sigma).powi(2) + num.ln()).exp() / (2.0 * z))
            }
            _ => None,
        }
    }

    /// Trapezoid-rule exponential transform `∫ J(z) e^{μz} dz`.
    pub fn laplace_quadrature(&self, mu: f64) -> f64 {
        self.quadrature(|z| self.density(z) * (mu * z).exp())
    }

    /// Composite trapezoid over the support: on the table itself for
    /// tabulated kernels, on a fine uniform grid otherwise.
    fn quadrature(&self, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.support_interval();
        if let (Profile::Tabulated { abscissae, .. }, None) = (&self.profile, self.cutoff) {
            let values: Vec<f64> = abscissae.iter().map(|&z| g(z)).collect();
            return trapezoid_table(abscissae, &values);
        }
        let width = hi - lo;
        let intervals = ((QUADRATURE_INTERVALS as f64) * (width / 2.0).max(1.0)).min(4e6) as usize;
        let dz = width / intervals as f64;
        let mut terms: Vec<f64> = (0..=intervals)
            .map(|j| {
                let z = if j == intervals {
                    hi
                } else {
                    lo + width * (j as f64 / intervals as f64)
                };
                let w = if j == 0 || j == intervals { 0.5 } else { 1.0 };
                w * dz * g(z)
            })
            .collect();
        ordered_sum(&mut terms)
    }

    /// `J_N(z) = J(z) ζ(z/N)`, not renormalized.
    pub fn truncate(&self, n: f64) -> Result<Kernel, KernelError> {
        let n = positive("truncate", "N", n)?;
        let mut out = self.clone();
        out.cutoff = Some(match self.cutoff {
            Some(existing) => existing.min(n),
            None => n,
        });
        Ok(out)
    }

    /// `z ↦ J(−z)`.
    pub fn reflect(&self) -> Kernel {
        let mut out = self.clone();
        if let Profile::Tabulated { abscissae, densities } = &self.profile {
            out.profile = Profile::Tabulated {
                abscissae: abscissae.iter().rev().map(|z| -z).collect(),
                densities: densities.iter().rev().copied().collect(),
            };
        }
        out
    }

    /// Grid weights `w_k ≈ h J(kh)`, trapezoid rule, scaled so the untruncated
    /// parent's weights sum to one.
    pub fn discretize(&self, h: f64) -> Result<DiscreteKernel, KernelError> {
        let h = positive("discretize", "h", h)?;
        let (plo, phi) = self.parent_support();
        let reach = (plo.abs().max(phi.abs()) / h + 1e-9).floor() as usize;
        let edge = |z: f64| {
            let tol = 1e-9 * h;
            if (z - plo).abs() <= tol || (z - phi).abs() <= tol {
                0.5
            } else {
                1.0
            }
        };
        let parent: Vec<f64> = (-(reach as i64)..=reach as i64)
            .map(|k| {
                let z = k as f64 * h;
                h * self.parent_density(z) * edge(z)
            })
            .collect();
        let mut sorted = parent.clone();
        let total = ordered_sum(&mut sorted);
        if !(total > 0.0) {
            return Err(KernelError::ZeroMass);
        }
        let weights: Vec<f64> = parent
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let z = (i as i64 - reach as i64) as f64 * h;
                let cut = self.cutoff.map_or(1.0, |n| cutoff(z / n));
                w * cut / total
            })
            .collect();
        // drop the zero band a truncation leaves at the ends
        let live = (0..=reach)
            .rev()
            .find(|&k| weights[reach - k] != 0.0 || weights[reach + k] != 0.0)
            .unwrap_or(0);
        let weights = weights[reach - live..=reach + live].to_vec();
        let reach = live;
        let dk = DiscreteKernel { h, reach, weights };
        if reach == 0 || dk.weight(1) <= 0.0 || dk.weight(-1) <= 0.0 {
            return Err(KernelError::TooCoarse { h });
        }
        Ok(dk)
    }

    /// Loads a tabulated kernel from `z,j` CSV.
    pub fn load_csv(path: &Path) -> Result<Kernel, KernelError> {
        let io = |source| KernelError::Io { op: "load_csv", source };
        let file = std::fs::File::open(path).map_err(io)?;
        let mut abscissae = Vec::new();
        let mut densities = Vec::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('z')) {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || -> Result<f64, KernelError> {
                parts
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| KernelError::BadTable(format!("line {}: `{}`", lineno + 1, line)))
            };
            abscissae.push(next()?);
            densities.push(next()?);
        }
        Kernel::tabulated(abscissae, densities)
    }

    /// Writes the tabulation (or a sampling of a preset) as `z,j` CSV.
    pub fn save_csv(&self, path: &Path, samples: usize) -> Result<(), KernelError> {
        let io = |source| KernelError::Io { op: "save_csv", source };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "z,j").map_err(io)?;
        let rows: Vec<(f64, f64)> = match (&self.profile, self.cutoff) {
            (Profile::Tabulated { abscissae, .. }, None) => abscissae.iter().map(|&z| (z, self.density(z))).collect(),
            _ => {
                let (lo, hi) = self.support_interval();
                let m = samples.max(2) - 1;
                (0..=m)
                    .map(|j| {
                        let z = lo + (hi - lo) * j as f64 / m as f64;
                        (z, self.density(z))
                    })
                    .collect()
            }
        };
        for (z, j) in rows {
            writeln!(out, "{},{}", z, j).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

fn validate_table(abscissae: &[f64], densities: &[f64]) -> Result<(), KernelError> {
    if abscissae.len() != densities.len() {
        return Err(KernelError::BadTable(format!(
            "{} abscissae vs {} densities",
            abscissae.len(),
            densities.len()
        )));
    }
    if abscissae.len() < 3 {
        return Err(KernelError::BadTable("need at least three samples".into()));
    }
    if abscissae.windows(2).any(|w| !(w[1] > w[0])) || abscissae.iter().any(|z| !z.is_finite()) {
        return Err(KernelError::BadTable(
            "abscissae must be finite and strictly increasing".into(),
        ));
    }
    if let Some((index, &value)) = densities
        .iter()
        .enumerate()
        .find(|(_, d)| !(**d >= 0.0) || !d.is_finite())
    {
        return Err(KernelError::NegativeDensity { index, value });
    }
    if !(abscissae[0] < 0.0 && abscissae[abscissae.len() - 1] > 0.0) {
        return Err(KernelError::BadTable("abscissae must straddle z = 0".into()));
    }
    Ok(())
}

fn interpolate(xs: &[f64], ys: &[f64], z: f64) -> f64 {
    let n = xs.len();
    if z < xs[0] || z > xs[n - 1] {
        return 0.0;
    }
    let i = match xs.binary_search_by(|x| x.partial_cmp(&z).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i - 1,
    };
    let t = (z - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

fn trapezoid_table(xs: &[f64], ys: &[f64]) -> f64 {
    let mut terms: Vec<f64> = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .collect();
    ordered_sum(&mut terms)
}

/// Compensated (Neumaier) sum in order of increasing magnitude; the result
/// does not depend on the order the terms were produced in.
pub(crate) fn ordered_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &t in terms.iter() {
        let next = sum + t;
        carry += if sum.abs() >= t.abs() {
            (sum - next) + t
        } else {
            (t - next) + sum
        };
        sum = next;
    }
    sum + carry
}

/// Kernel weights on a grid of spacing `h`: `weights[k + reach] ≈ h J(k h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteKernel {
    pub h: f64,
    pub reach: usize,
    pub weights: Vec<f64>,
}

impl DiscreteKernel {
    /// Weight at displacement `k h` (zero beyond the reach).
    pub fn weight(&self, k: i64) -> f64 {
        if k.unsigned_abs() as usize > self.reach {
            0.0
        } else {
            self.weights[(k + self.reach as i64) as usize]
        }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weights of `J(−z)`.
    pub fn reflect(&self) -> DiscreteKernel {
        DiscreteKernel {
            h: self.h,
            reach: self.reach,
            weights: self.weights.iter().rev().copied().collect(),
        }
    }
}
