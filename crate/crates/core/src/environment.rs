//! KPP growth laws with a bounded ecological niche.
//!
//! A [`GrowthModel`] wraps `f(x, s)` together with the metadata the solvers
//! need: the linearization `a(x) = ∂_s f(x, 0)`, a constant saturation level
//! `S` with `f(x, S) ≤ 0`, `sup a`, and Lipschitz bounds on `∂_s f`.
//!
//! Niche profiles are built from cubic smoothsteps so that `a` is Lipschitz.
//! Properties of custom evaluators are only checked on samples.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

/// Number of `s` values in the KPP monotonicity ladder.
pub const LADDER: usize = 64;
/// Smallest `s` in the ladder.
pub const LADDER_START: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("growth::{op}: parameter `{name}` invalid ({value})")]
    InvalidParameter {
        op: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("growth::make_growth: b(x) = {value} ≤ 0 at x = {x}; no saturation level exists")]
    NoSaturation { x: f64, value: f64 },
    #[error("growth::make_growth: f(x, 0) = {value} ≠ 0 at x = {x}")]
    NonzeroAtZero { x: f64, value: f64 },
    #[error("growth::make_growth: f(x,s)/s increases at x = {x}, s = {s}")]
    NotKpp { x: f64, s: f64 },
    #[error("growth::make_growth: f(x, S) = {value} > 0 at x = {x}")]
    SaturationViolated { x: f64, value: f64 },
    #[error("growth::tail_bounds: no-tail-bound (limsup a + delta = {excess} ≥ 0)")]
    NoTailBound { excess: f64 },
    #[error("growth::load_profile: {0}")]
    BadProfile(String),
    #[error("growth::load_profile: {0}")]
    Io(#[from] std::io::Error),
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// A bounded, Lipschitz function of `x`, used for `a(x)` and `b(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile1d {
    Constant(f64),
    /// `inside` on `|x - center| ≤ half_width`, `outside` beyond
    /// `half_width + ramp`, cubic smoothstep in between.
    Niche {
        inside: f64,
        outside: f64,
        half_width: f64,
        ramp: f64,
        center: f64,
    },
    /// Cubic (Catmull–Rom) interpolation of samples, constant tails outside.
    Tabulated {
        xs: Vec<f64>,
        values: Vec<f64>,
        left_tail: f64,
        right_tail: f64,
    },
    /// `base(x) + offset`
    Offset {
        base: Box<Profile1d>,
        offset: f64,
    },
    /// `base(−x)`
    Reflected(Box<Profile1d>),
}

impl Profile1d {
    pub fn niche(inside: f64, outside: f64, half_width: f64, ramp: f64) -> Self {
        Profile1d::Niche {
            inside,
            outside,
            half_width,
            ramp,
            center: 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile1d::Constant(v) => *v,
            Profile1d::Niche {
                inside,
                outside,
                half_width,
                ramp,
                center,
            } => {
                let d = (x - center).abs();
                if d <= *half_width {
                    *inside
                } else if d >= half_width + ramp {
                    *outside
                } else {
                    inside + (outside - inside) * smoothstep((d - half_width) / ramp)
                }
            }
            Profile1d::Tabulated {
                xs,
                values,
                left_tail,
                right_tail,
            } => catmull_rom(xs, values, *left_tail, *right_tail, x),
            Profile1d::Offset { base, offset } => base.eval(x) + offset,
            Profile1d::Reflected(base) => base.eval(-x),
        }
    }

    /// `(lim_{x→−∞}, lim_{x→+∞})`.
    pub fn tails(&self) -> (f64, f64) {
        match self {
            Profile1d::Constant(v) => (*v, *v),
            Profile1d::Niche { outside, .. } => (*outside, *outside),
            Profile1d::Tabulated {
                left_tail, right_tail, ..
            } => (*left_tail, *right_tail),
            Profile1d::Offset { base, offset } => {
                let (l, r) = base.tails();
                (l + offset, r + offset)
            }
            Profile1d::Reflected(base) => {
                let (l, r) = base.tails();
                (r, l)
            }
        }
    }

    /// Radius beyond which the profile equals its tail values.
    pub fn tail_onset(&self) -> f64 {
        match self {
            Profile1d::Constant(_) => 0.0,
            Profile1d::Niche {
                half_width,
                ramp,
                center,
                ..
            } => center.abs() + half_width + ramp,
            Profile1d::Tabulated { xs, .. } => xs[0].abs().max(xs[xs.len() - 1].abs()),
            Profile1d::Offset { base, .. } | Profile1d::Reflected(base) => base.tail_onset(),
        }
    }

    /// Loads `x,a` samples from CSV.
    pub fn load_csv(path: &Path, left_tail: f64, right_tail: f64) -> Result<Self, GrowthError> {
        let file = std::fs::File::open(path)?;
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let parsed: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| GrowthError::BadProfile(format!("line {}: {e}", lineno + 1)))?;
            if parsed.len() != 2 {
                return Err(GrowthError::BadProfile(format!("line {}: expected x,a", lineno + 1)));
            }
            xs.push(parsed[0]);
            values.push(parsed[1]);
        }
        if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GrowthError::BadProfile("abscissae must be strictly increasing".into()));
        }
        Ok(Profile1d::Tabulated {
            xs,
            values,
            left_tail,
            right_tail,
        })
    }
}

fn catmull_rom(xs: &[f64], ys: &[f64], left: f64, right: f64, x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return if x == xs[0] { ys[0] } else { left };
    }
    if x >= xs[n - 1] {
        return if x == xs[n - 1] { ys[n - 1] } else { right };
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let slope = |k: usize| -> f64 {
        if k == 0 {
            (ys[1] - ys[0]) / (xs[1] - xs[0])
        } else if k == n - 1 {
            (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2])
        } else {
            (ys[k + 1] - ys[k - 1]) / (xs[k + 1] - xs[k - 1])
        }
    };
    let dx = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / dx;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * ys[i]
        + (t3 - 2.0 * t2 + t) * dx * slope(i)
        + (-2.0 * t3 + 3.0 * t2) * ys[i + 1]
        + (t3 - t2) * dx * slope(i + 1)
}

pub type GrowthFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied `f` and `∂_s f`.
#[derive(Clone)]
pub struct CustomGrowth {
    pub f: GrowthFn,
    pub ds_f: GrowthFn,
    /// Constant saturation level with `f(x, S) ≤ 0`.
    pub saturation: f64,
    /// Radius beyond which `f(x, ·)` no longer depends on `x`.
    pub extent: f64,
}

impl fmt::Debug for CustomGrowth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomGrowth")
            .field("saturation", &self.saturation)
            .field("extent", &self.extent)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum GrowthForm {
    /// `f(x, s) = s (a(x) − b(x) s)`
    Logistic {
        a: Profile1d,
        b: Profile1d,
    },
    /// Piecewise plateau law: `s(a − s)` on `|x| ≤ L`, `−q s` on
    /// `|x| ≥ L + L₀`, blended by a smooth ramp in between.
    Plateau {
        a: f64,
        q: f64,
        l: f64,
        l0: f64,
    },
    Custom(CustomGrowth),
}

/// Linearization tail constants: `a(x) + delta ≤ −kappa` for `|x| ≥ r0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    pub r0: f64,
    pub kappa: f64,
    pub delta: f64,
}

/// A validated KPP growth law.
#[derive(Clone, Debug)]
pub struct GrowthModel {
    form: GrowthForm,
    saturation: f64,
    sup_a: f64,
    sup_abs_a: f64,
}

impl GrowthModel {
    /// Validates the KPP structure on a sample and caches metadata.
    pub fn new(form: GrowthForm) -> Result<Self, GrowthError> {
        let mut model = GrowthModel {
            form,
            saturation: 0.0,
            sup_a: 0.0,
            sup_abs_a: 0.0,
        };
        model.validate_parameters()?;
        let xs = model.scan_points();
        let a_vals: Vec<f64> = xs.iter().map(|&x| model.a(x)).collect();
        let (lt, rt) = model.a_tails();
        model.sup_a = a_vals.iter().copied().fold(lt.max(rt), f64::max);
        model.sup_abs_a = a_vals.iter().map(|v| v.abs()).fold(lt.abs().max(rt.abs()), f64::max);
        model.saturation = match &model.form {
            GrowthForm::Logistic { b, .. } => xs
                .iter()
                .zip(&a_vals)
                .map(|(&x, &a)| a.max(0.0) / b.eval(x))
                .fold(0.0, f64::max),
            GrowthForm::Plateau { a, .. } => *a,
            GrowthForm::Custom(c) => c.saturation,
        };
        model.verify_kpp()?;
        Ok(model)
    }

    pub fn logistic(a: Profile1d, b: Profile1d) -> Result<Self, GrowthError> {
        GrowthModel::new(GrowthForm::Logistic { a, b })
    }

    pub fn plateau(a: f64, q: f64, l: f64, l0: f64) -> Result<Self, GrowthError> {
        GrowthModel::new(GrowthForm::Plateau { a, q, l, l0 })
    }

    pub fn custom(custom: CustomGrowth) -> Result<Self, GrowthError> {
        GrowthModel::new(GrowthForm::Custom(custom))
    }

    pub fn form(&self) -> &GrowthForm {
        &self.form
    }

    fn validate_parameters(&self) -> Result<(), GrowthError> {
        let bad = |name, value| GrowthError::InvalidParameter {
            op: "make_growth",
            name,
            value,
        };
        match &self.form {
            GrowthForm::Logistic { a, b } => {
                for p in [a, b] {
                    if let Profile1d::Niche { half_width, ramp, .. } = p {
                        if !(*half_width >= 0.0) {
                            return Err(bad("half_width", *half_width));
                        }
                        if !(*ramp > 0.0) {
                            return Err(bad("ramp", *ramp));
                        }
                    }
                }
                let (lt, rt) = b.tails();
                for t in [lt, rt] {
                    if !(t > 0.0) {
                        return Err(GrowthError::NoSaturation {
                            x: f64::INFINITY,
                            value: t,
                        });
                    }
                }
                for x in self.scan_points() {
                    let v = b.eval(x);
                    if !(v > 0.0) {
                        return Err(GrowthError::NoSaturation { x, value: v });
                    }
                }
            }
            GrowthForm::Plateau { a, q, l, l0 } => {
                for (name, v) in [("a", *a), ("q", *q), ("L", *l), ("L0", *l0)] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(bad(name, v));
                    }
                }
            }
            GrowthForm::Custom(c) => {
                if !(c.saturation >= 0.0) {
                    return Err(bad("saturation", c.saturation));
                }
                if !(c.extent >= 0.0) {
                    return Err(bad("extent", c.extent));
                }
            }
        }
        Ok(())
    }

    /// Radius beyond which `f(x, ·)` no longer depends on `x`.
    pub fn extent(&self) -> f64 {
        match &self.form {
            GrowthForm::Logistic { a, b } => a.tail_onset().max(b.tail_onset()),
            GrowthForm::Plateau { l, l0, .. } => l + l0,
            GrowthForm::Custom(c) => c.extent,
        }
    }

    /// Dense sample covering the heterogeneous region, resolution 1e-3 of
    /// its width, plus a margin on each side.
    fn scan_points(&self) -> Vec<f64> {
        let e = self.extent().max(0.5);
        let lo = -e - 1.0;
        let hi = e + 1.0;
        let step = 1e-3 * 2.0 * e;
        let n = ((hi - lo) / step).ceil() as usize;
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    fn plateau_blend(&self, x: f64) -> f64 {
        // φ = 1 on |x| ≤ L, 0 on |x| ≥ L + L0
        match &self.form {
            GrowthForm::Plateau { l, l0, .. } => 1.0 - smoothstep((x.abs() - l) / l0),
            _ => 1.0,
        }
    }

    /// `f(x, s)`.
    pub fn f(&self, x: f64, s: f64) -> f64 {
        match &self.form {
            GrowthForm::Logistic { a, b } => s * (a.eval(x) - b.eval(x) * s),
            GrowthForm::Plateau { a, q, .. } => {
                let phi = self.plateau_blend(x);
                if phi == 1.0 {
                    s * (a - s)
                } else if phi == 0.0 {
                    -q * s
                } else {
                    -q * s + s * (a - s + q) * phi
                }
            }
            GrowthForm::Custom(c) => (c.f)(x, s),
        }
    }

    /// `∂_s f(x, s)`.
    pub fn ds_f(&self, x: f64, s: f64) -> f64 {
        match &self.form {
            GrowthForm::Logistic { a, b } => a.eval(x) - 2.0 * b.eval(x) * s,
            GrowthForm::Plateau { a, q, .. } => {
                let phi = self.plateau_blend(x);
                if phi == 1.0 {
                    a - 2.0 * s
                } else if phi == 0.0 {
                    -q
                } else {
                    -q + (a + q - 2.0 * s) * phi
                }
            }
            GrowthForm::Custom(c) => (c.ds_f)(x, s),
        }
    }

    /// `a(x) = ∂_s f(x, 0)`.
    pub fn a(&self, x: f64) -> f64 {
        match &self.form {
            GrowthForm::Logistic { a, .. } => a.eval(x),
            _ => self.ds_f(x, 0.0),
        }
    }

    /// The linearization as a closure.
    pub fn linearization(&self) -> impl Fn(f64) -> f64 + '_ {
        move |x| self.a(x)
    }

    /// Tail values `(a(−∞), a(+∞))`.
    pub fn a_tails(&self) -> (f64, f64) {
        match &self.form {
            GrowthForm::Logistic { a, .. } => a.tails(),
            GrowthForm::Plateau { q, .. } => (-q, -q),
            GrowthForm::Custom(c) => {
                let e = c.extent + 1.0;
                ((c.ds_f)(-e, 0.0), (c.ds_f)(e, 0.0))
            }
        }
    }

    /// Constant saturation level `S` (so `‖S‖∞ = S`).
    pub fn saturation(&self) -> f64 {
        self.saturation
    }

    pub fn sup_a(&self) -> f64 {
        self.sup_a
    }

    pub fn sup_abs_a(&self) -> f64 {
        self.sup_abs_a
    }

    /// Interval where `a > 0`, from the dense scan.
    pub fn niche_interval(&self) -> Option<(f64, f64)> {
        let pts = self.scan_points();
        let positive: Vec<f64> = pts.into_iter().filter(|&x| self.a(x) > 0.0).collect();
        Some((*positive.first()?, *positive.last()?))
    }

    /// Ladder `s_k`, `k = 0..LADDER`, from `LADDER_START` to `smax`.
    fn ladder(smax: f64) -> impl Iterator<Item = f64> {
        let top = smax.max(2.0 * LADDER_START);
        (0..LADDER).map(move |k| LADDER_START + (top - LADDER_START) * k as f64 / (LADDER - 1) as f64)
    }

    fn verify_kpp(&self) -> Result<(), GrowthError> {
        let pts = self.scan_points();
        let stride = (pts.len() / 400).max(1);
        let s_top = self.saturation;
        let scale = self.sup_abs_a.max(1.0) * s_top.max(1.0);
        for &x in pts.iter().step_by(stride) {
            let f0 = self.f(x, 0.0);
            if f0 != 0.0 {
                return Err(GrowthError::NonzeroAtZero { x, value: f0 });
            }
            let mut prev = f64::INFINITY;
            for s in Self::ladder(s_top) {
                let ratio = self.f(x, s) / s;
                if ratio > prev + 4.0 * f64::EPSILON * scale {
                    return Err(GrowthError::NotKpp { x, s });
                }
                prev = ratio;
            }
            let fs = self.f(x, s_top);
            if fs > 4.0 * f64::EPSILON * scale {
                return Err(GrowthError::SaturationViolated { x, value: fs });
            }
        }
        Ok(())
    }

    /// `sup |∂_s f(x, s)|` over `x` and `s ∈ [0, smax]`.
    pub fn lipschitz_bound(&self, smax: f64) -> f64 {
        self.sup_over(smax, |x, s| self.ds_f(x, s).abs())
    }

    /// `sup |f(x, s)|` over `x` and `s ∈ [0, smax]`.
    pub fn sup_abs_f(&self, smax: f64) -> f64 {
        self.sup_over(smax, |x, s| self.f(x, s).abs())
    }

    fn sup_over(&self, smax: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
        let pts = self.scan_points();
        let stride = (pts.len() / 400).max(1);
        let e = self.extent() + 2.0;
        let mut xs: Vec<f64> = pts.iter().step_by(stride).copied().collect();
        xs.extend([-e, e]);
        let mut best = 0.0f64;
        for &x in &xs {
            best = best.max(g(x, 0.0)).max(g(x, smax));
            for s in Self::ladder(smax) {
                best = best.max(g(x, s));
            }
            if let GrowthForm::Logistic { a, b } = &self.form {
                let vertex = (a.eval(x) / (2.0 * b.eval(x))).clamp(0.0, smax);
                best = best.max(g(x, vertex));
            }
        }
        best
    }

    /// Tail constants for a given `delta`: `kappa = −limsup a − delta` and the
    /// smallest `r0` beyond which `a` sits at its tail value.
    pub fn tail_bounds(&self, delta: f64) -> Result<TailBound, GrowthError> {
        if !(delta > 0.0) {
            return Err(GrowthError::InvalidParameter {
                op: "tail_bounds",
                name: "delta",
                value: delta,
            });
        }
        let (lt, rt) = self.a_tails();
        let limsup = lt.max(rt);
        let kappa = -limsup - delta;
        if !(kappa > 0.0) {
            return Err(GrowthError::NoTailBound { excess: limsup + delta });
        }
        let onset = self.extent();
        let pts: Vec<f64> = self.scan_points().into_iter().filter(|x| *x >= 0.0).collect();
        // sup_{|x| ≥ r} a, scanning from outside in
        let mut r0 = onset;
        let mut running = limsup;
        for &r in pts.iter().rev() {
            if r >= onset {
                continue;
            }
            running = running.max(self.a(r)).max(self.a(-r));
            if running > limsup + 1e-12 {
                break;
            }
            r0 = r;
        }
        Ok(TailBound { r0, kappa, delta })
    }

    /// The model seen through `x ↦ −x`.
    pub fn reflect(&self) -> GrowthModel {
        let form = match &self.form {
            GrowthForm::Logistic { a, b } => GrowthForm::Logistic {
                a: Profile1d::Reflected(Box::new(a.clone())),
                b: Profile1d::Reflected(Box::new(b.clone())),
            },
            GrowthForm::Plateau { .. } => self.form.clone(),
            GrowthForm::Custom(c) => {
                let (f, ds) = (c.f.clone(), c.ds_f.clone());
                GrowthForm::Custom(CustomGrowth {
                    f: Arc::new(move |x, s| f(-x, s)),
                    ds_f: Arc::new(move |x, s| ds(-x, s)),
                    saturation: c.saturation,
                    extent: c.extent,
                })
            }
        };
        GrowthModel { form, ..self.clone() }
    }

    /// Logistic model with `a` shifted by a constant (used for ordering checks).
    pub fn with_a_offset(&self, offset: f64) -> Result<GrowthModel, GrowthError> {
        match &self.form {
            GrowthForm::Logistic { a, b } => GrowthModel::logistic(
                Profile1d::Offset {
                    base: Box::new(a.clone()),
                    offset,
                },
                b.clone(),
            ),
            _ => Err(GrowthError::InvalidParameter {
                op: "with_a_offset",
                name: "form (logistic only)",
                value: offset,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> GrowthModel {
        GrowthModel::logistic(Profile1d::niche(1.0, -1.0, 2.0, 1.0), Profile1d::Constant(1.0)).unwrap()
    }

    #[test]
    fn logistic_reference_model() {
        let g = reference();
        assert_eq!(g.saturation(), 1.0);
        assert_eq!(g.sup_a(), 1.0);
        assert_eq!(g.sup_abs_a(), 1.0);
        assert_eq!(g.a(0.0), 1.0);
        assert_eq!(g.a(3.5), -1.0);
        assert!(g.f(0.3, 1.0) <= 0.0);
        let (lo, hi) = g.niche_interval().unwrap();
        assert!(lo < -2.0 && hi > 2.0 && lo > -3.0 && hi < 3.0);
        for x in [-5.0, -2.5, 0.0, 1.7, 2.9, 10.0] {
            assert_eq!(g.f(x, 0.0), 0.0);
        }
    }

    #[test]
    fn zero_b_rejected() {
        let b = Profile1d::niche(0.0, 1.0, 1.0, 0.5);
        let err = GrowthModel::logistic(Profile1d::Constant(1.0), b).unwrap_err();
        assert!(matches!(err, GrowthError::NoSaturation { .. }));
    }

    #[test]
    fn plateau_preset() {
        let g = GrowthModel::plateau(1.0, 1.0, 2.0, 1.0).unwrap();
        for x in [3.0, 3.5, -7.0] {
            for s in [0.1, 0.5, 2.0] {
                assert_eq!(g.f(x, s), -s);
            }
            assert_eq!(g.a(x), -1.0);
        }
        for x in [-2.0, 0.0, 1.3, 2.0] {
            assert_eq!(g.f(x, 0.4), 0.4 * (1.0 - 0.4));
            assert_eq!(g.a(x), 1.0);
        }
        // continuous through the ramps
        assert!((g.a(2.0 + 1e-9) - 1.0).abs() < 1e-6);
        assert!((g.a(-3.0 + 1e-9) + 1.0).abs() < 1e-6);
        let t = g.tail_bounds(0.5).unwrap();
        assert_eq!(t.kappa, 0.5);
        assert_eq!(t.r0, 3.0);
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let custom = CustomGrowth {
            f: Arc::new(|x: f64, s: f64| s * ((-x * x).exp() * 2.0 - 1.0) - s * s * s),
            ds_f: Arc::new(|x: f64, s: f64| (-x * x).exp() * 2.0 - 1.0 - 3.0 * s * s),
            saturation: 1.0,
            extent: 6.0,
        };
        let h = 1e-6;
        for g in [
            reference(),
            GrowthModel::plateau(1.0, 1.0, 2.0, 1.0).unwrap(),
            GrowthModel::custom(custom).unwrap(),
        ] {
            let lin = g.linearization();
            for i in 0..=80 {
                let x = -4.0 + 0.1 * i as f64;
                let fd = g.f(x, h) / h;
                assert!((fd - lin(x)).abs() <= 2.0 * h, "x = {x}: {fd} vs {}", lin(x));
            }
        }
    }

    #[test]
    fn tail_bounds_reference() {
        let t = reference().tail_bounds(0.25).unwrap();
        assert!((t.kappa - 0.75).abs() < 1e-15);
        assert!((t.r0 - 3.0).abs() < 1e-2, "r0 = {}", t.r0);
        let flat = GrowthModel::logistic(Profile1d::Constant(1.0), Profile1d::Constant(1.0)).unwrap();
        assert!(matches!(flat.tail_bounds(0.1), Err(GrowthError::NoTailBound { .. })));
    }

    #[test]
    fn non_kpp_custom_rejected() {
        // f(x,s)/s = s - 1 is increasing in s
        let custom = CustomGrowth {
            f: Arc::new(|_x: f64, s: f64| s * (s - 1.0)),
            ds_f: Arc::new(|_x: f64, s: f64| 2.0 * s - 1.0),
            saturation: 0.5,
            extent: 1.0,
        };
        assert!(matches!(GrowthModel::custom(custom), Err(GrowthError::NotKpp { .. })));
    }

    #[test]
    fn lipschitz_and_sup_f() {
        let g = reference();
        assert!((g.lipschitz_bound(1.0) - 3.0).abs() < 1e-12);
        assert!((g.sup_abs_f(1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_and_offset() {
        let a = Profile1d::Niche {
            inside: 1.0,
            outside: -1.0,
            half_width: 1.0,
            ramp: 0.5,
            center: 0.7,
        };
        let g = GrowthModel::logistic(a, Profile1d::Constant(1.0)).unwrap();
        let r = g.reflect();
        for x in [-2.0, -0.5, 0.4, 1.9] {
            assert_eq!(r.a(x), g.a(-x));
        }
        let up = g.with_a_offset(0.1).unwrap();
        assert!((up.a(0.7) - 1.1).abs() < 1e-15);
        assert!((up.saturation() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn tabulated_profile_interpolates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "x,a\n-2,-1\n-1,0.5\n0,1\n1,0.5\n2,-1\n").unwrap();
        let p = Profile1d::load_csv(&path, -1.0, -1.0).unwrap();
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(-1.0), 0.5);
        assert_eq!(p.eval(5.0), -1.0);
        assert!(p.eval(0.5) > 0.5 && p.eval(0.5) < 1.0);
        assert_eq!(p.tail_onset(), 2.0);
    }
}
