//! Flat `key = value` experiment configuration.
//!
//! Keys are dotted (`kernel.preset = uniform`), `#` starts a comment, lists
//! are comma separated. Every value the runner uses, including defaults,
//! is recorded in [`ExperimentConfig::resolved`] for the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::environment::{GrowthError, GrowthModel, Profile1d};
use crate::evolution::{DtPolicy, Frame};
use crate::kernel::{Kernel, KernelError};
use crate::spectral::EigenMethod;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config::parse: line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("config::parse: line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("config::resolve: unknown key `{0}`")]
    UnknownKey(String),
    #[error("config::resolve: missing key `{0}`")]
    Missing(String),
    #[error("config::resolve: field `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("config::resolve: field `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("config::read: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Eig,
    Steady,
    Evolve,
    Speeds,
    Bounds,
    Verify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Eig => "eig",
            Task::Steady => "steady",
            Task::Evolve => "evolve",
            Task::Speeds => "speeds",
            Task::Bounds => "bounds",
            Task::Verify => "verify",
        }
    }
}

impl FromStr for Task {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "eig" => Task::Eig,
            "steady" => Task::Steady,
            "evolve" => Task::Evolve,
            "speeds" => Task::Speeds,
            "bounds" => Task::Bounds,
            "verify" => Task::Verify,
            _ => return Err(()),
        })
    }
}

/// Raw key/value pairs in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: k.to_string(),
                });
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

/// Reads typed values and records what was resolved.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Reader {
            raw,
            used: BTreeSet::new(),
            resolved: BTreeMap::new(),
        }
    }

    fn raw_value(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.raw.entries.get(key).cloned()
    }

    fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
        v.parse().map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            value: v.to_string(),
        })
    }

    fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        let v = match self.raw_value(key) {
            Some(s) => Self::parse(key, &s)?,
            None => default,
        };
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    fn opt<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw_value(key) {
            Some(s) => {
                let v: T = Self::parse(key, &s)?;
                self.resolved.insert(key.to_string(), v.to_string());
                Ok(Some(v))
            }
            None => {
                self.resolved.insert(key.to_string(), "none".to_string());
                Ok(None)
            }
        }
    }

    fn req<T: FromStr + Display>(&mut self, key: &str) -> Result<T, ConfigError> {
        let v = self
            .raw_value(key)
            .ok_or_else(|| ConfigError::Missing(key.to_string()))?;
        let v: T = Self::parse(key, &v)?;
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    fn text(&mut self, key: &str, default: &str) -> String {
        let v = self.raw_value(key).unwrap_or_else(|| default.to_string());
        self.resolved.insert(key.to_string(), v.clone());
        v
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        let v = match self.raw_value(key) {
            Some(s) => s
                .split(',')
                .map(|p| Self::parse::<f64>(key, p.trim()))
                .collect::<Result<Vec<_>, _>>()?,
            None => default.to_vec(),
        };
        self.resolved.insert(key.to_string(), join(&v));
        Ok(v)
    }

    fn opt_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        if self.raw.entries.contains_key(key) {
            Ok(Some(self.list(key, &[])?))
        } else {
            self.used.insert(key.to_string());
            self.resolved.insert(key.to_string(), "none".to_string());
            Ok(None)
        }
    }

    fn finish(self) -> Result<BTreeMap<String, String>, ConfigError> {
        if let Some(k) = self.raw.entries.keys().find(|k| !self.used.contains(*k)) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        Ok(self.resolved)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    pub r: f64,
    pub h: f64,
    pub r_schedule: Option<Vec<f64>>,
    pub epsilon: f64,
    pub eps_schedule: Option<Vec<f64>>,
    pub dt: DtPolicy,
    pub eigen_tol: f64,
    pub r_tol: f64,
    pub steady_tol: f64,
    pub max_iter: usize,
    pub method: EigenMethod,
    pub newton: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskParams {
    pub c: Vec<f64>,
    pub horizon: f64,
    pub record_every: f64,
    pub frame: Frame,
    pub bump_height: f64,
    pub bump_half_width: f64,
    pub snapshot_times: Vec<f64>,
    pub c_range: Option<(f64, f64)>,
    pub bracket_tol: f64,
    pub points_per_side: usize,
    pub speed_levels: usize,
    pub speed_r0: f64,
    pub speed_eigen_tol: f64,
    pub delta: Option<f64>,
    pub trials: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub task: Task,
    pub kernel: Kernel,
    pub growth: GrowthModel,
    pub numerics: Numerics,
    pub params: TaskParams,
    pub seed: u64,
    /// Every key the run uses, defaults included, in sorted order.
    pub resolved: BTreeMap<String, String>,
}

fn kernel_from(r: &mut Reader<'_>) -> Result<Kernel, ConfigError> {
    let preset = r.text("kernel.preset", "uniform");
    let k = match preset.as_str() {
        "uniform" => Kernel::uniform(r.get("kernel.radius", 1.0)?)?,
        "tent" => Kernel::tent(r.get("kernel.radius", 1.0)?)?,
        "cosine" => Kernel::truncated_cosine(r.get("kernel.radius", 1.0)?)?,
        "gaussian" => Kernel::gaussian(r.get("kernel.sigma", 1.0)?, r.get("kernel.sampling_radius", 8.0)?)?,
        "fat_quartic" => Kernel::fat_quartic(r.get("kernel.scale", 1.0)?, r.get("kernel.sampling_radius", 200.0)?)?,
        "tabulated" => {
            let path: String = r.req("kernel.file")?;
            Kernel::load_csv(Path::new(&path))?
        }
        other => return Err(invalid("kernel.preset", format!("unknown preset `{other}`"))),
    };
    match r.opt::<f64>("kernel.truncate")? {
        Some(n) => Ok(k.truncate(n)?),
        None => Ok(k),
    }
}

fn profile_from(r: &mut Reader<'_>, prefix: &str, default_value: f64) -> Result<Profile1d, ConfigError> {
    let key = |s: &str| format!("{prefix}.{s}");
    let preset = r.text(&key("preset"), "constant");
    Ok(match preset.as_str() {
        "constant" => Profile1d::Constant(r.get(&key("value"), default_value)?),
        "niche" => Profile1d::Niche {
            inside: r.get(&key("inside"), 1.0)?,
            outside: r.get(&key("outside"), -1.0)?,
            half_width: r.get(&key("half_width"), 2.0)?,
            ramp: r.get(&key("ramp"), 1.0)?,
            center: r.get(&key("center"), 0.0)?,
        },
        "tabulated" => {
            let path: String = r.req(&key("file"))?;
            let left = r.req(&key("left_tail"))?;
            let right = r.req(&key("right_tail"))?;
            Profile1d::load_csv(Path::new(&path), left, right)?
        }
        other => return Err(invalid(&key("preset"), format!("unknown preset `{other}`"))),
    })
}

fn growth_from(r: &mut Reader<'_>) -> Result<GrowthModel, ConfigError> {
    let form = r.text("growth.form", "logistic");
    Ok(match form.as_str() {
        "logistic" => {
            let a = profile_from(r, "growth.a", 0.5)?;
            let b = profile_from(r, "growth.b", 1.0)?;
            GrowthModel::logistic(a, b)?
        }
        "plateau" => GrowthModel::plateau(
            r.get("growth.amplitude", 1.0)?,
            r.get("growth.q", 1.0)?,
            r.get("growth.l", 2.0)?,
            r.get("growth.l0", 1.0)?,
        )?,
        other => return Err(invalid("growth.form", format!("unknown form `{other}`"))),
    })
}

fn strictly_increasing(key: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() || v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(key, "schedule must be nonempty and strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Resolves a raw config. `task` from the command line wins over the
    /// `task` key.
    pub fn resolve(raw: &RawConfig, task: Option<Task>) -> Result<Self, ConfigError> {
        let mut r = Reader::new(raw);
        let task = match task {
            Some(t) => {
                r.raw_value("task");
                t
            }
            None => {
                let s: String = r.req("task")?;
                s.parse().map_err(|_| invalid("task", format!("unknown task `{s}`")))?
            }
        };
        r.resolved.insert("task".into(), task.name().into());
        let kernel = kernel_from(&mut r)?;
        let growth = growth_from(&mut r)?;

        let radius: f64 = r.get("numerics.R", 16.0)?;
        let h: f64 = r.get("numerics.h", 0.05)?;
        if !(h > 0.0) {
            return Err(invalid("numerics.h", "must be positive"));
        }
        if !(radius > 0.0) {
            return Err(invalid("numerics.R", "must be positive"));
        }
        let r_schedule = r.opt_list("numerics.R_schedule")?;
        if let Some(s) = &r_schedule {
            strictly_increasing("numerics.R_schedule", s)?;
        }
        let epsilon: f64 = r.get("numerics.epsilon", 0.0)?;
        if !(epsilon >= 0.0) {
            return Err(invalid("numerics.epsilon", "must be nonnegative"));
        }
        let eps_schedule = r.opt_list("numerics.eps_schedule")?;
        if let Some(s) = &eps_schedule {
            if s.is_empty() || s.windows(2).any(|w| !(w[1] < w[0])) || s.iter().any(|e| !(*e >= 0.0)) {
                return Err(invalid(
                    "numerics.eps_schedule",
                    "schedule must be strictly decreasing and nonnegative",
                ));
            }
        }
        let dt_text = r.text("numerics.dt", "auto");
        let dt = if dt_text == "auto" {
            DtPolicy::Auto
        } else {
            let v: f64 = Reader::parse("numerics.dt", &dt_text)?;
            if !(v > 0.0) {
                return Err(invalid("numerics.dt", "must be positive or `auto`"));
            }
            DtPolicy::Fixed(v)
        };
        let method_text = r.text("numerics.method", "shift_invert");
        let method = match method_text.as_str() {
            "shift_invert" => EigenMethod::ShiftInvert,
            "power" => EigenMethod::Power,
            "dense" => EigenMethod::Dense,
            other => return Err(invalid("numerics.method", format!("unknown method `{other}`"))),
        };
        let numerics = Numerics {
            r: radius,
            h,
            r_schedule,
            epsilon,
            eps_schedule,
            dt,
            eigen_tol: r.get("numerics.eigen_tol", 1e-10)?,
            r_tol: r.get("numerics.r_tol", 1e-4)?,
            steady_tol: r.get("numerics.steady_tol", 1e-9)?,
            max_iter: r.get("numerics.max_iter", 2_000_000)?,
            method,
            newton: r.get("numerics.newton", false)?,
        };
        for (k, v) in [
            ("numerics.eigen_tol", numerics.eigen_tol),
            ("numerics.r_tol", numerics.r_tol),
            ("numerics.steady_tol", numerics.steady_tol),
        ] {
            if !(v > 0.0) {
                return Err(invalid(k, "must be positive"));
            }
        }

        let c = r.list("c", &[0.0])?;
        if c.is_empty() {
            return Err(invalid("c", "at least one value needed"));
        }
        let frame_text = r.text("evolve.frame", "moving");
        let frame = match frame_text.as_str() {
            "moving" => Frame::Moving,
            "fixed" => Frame::Fixed,
            other => return Err(invalid("evolve.frame", format!("unknown frame `{other}`"))),
        };
        let c_range = match r.opt_list("speeds.c_range")? {
            Some(v) => {
                if v.len() != 2 || !(v[0] < 0.0 && v[1] > 0.0) {
                    return Err(invalid("speeds.c_range", "expected `lo, hi` with lo < 0 < hi"));
                }
                Some((v[0], v[1]))
            }
            None => None,
        };
        let snapshot_times = r.list("evolve.snapshot_times", &[])?;
        let params = TaskParams {
            c,
            horizon: r.get("evolve.T", 200.0)?,
            record_every: r.get("evolve.record_every", 0.5)?,
            frame,
            bump_height: r.get("evolve.bump_height", 0.5)?,
            bump_half_width: r.get("evolve.bump_half_width", 2.0)?,
            snapshot_times,
            c_range,
            bracket_tol: r.get("speeds.bracket_tol", 1e-3)?,
            points_per_side: r.get("speeds.points_per_side", 21)?,
            speed_levels: r.get("speeds.levels", 5)?,
            speed_r0: r.get("speeds.R0", 8.0)?,
            speed_eigen_tol: r.get("speeds.eigen_tol", 1e-8)?,
            delta: r.opt("bounds.delta")?,
            trials: r.get("verify.trials", 20)?,
        };
        if !(params.horizon > 0.0) {
            return Err(invalid("evolve.T", "must be positive"));
        }
        if !(params.bracket_tol > 0.0) {
            return Err(invalid("speeds.bracket_tol", "must be positive"));
        }
        if params.points_per_side < 2 {
            return Err(invalid("speeds.points_per_side", "must be at least 2"));
        }
        let seed = r.get("seed", 0u64)?;
        let resolved = r.finish()?;
        Ok(ExperimentConfig {
            task,
            kernel,
            growth,
            numerics,
            params,
            seed,
            resolved,
        })
    }

    /// Replaces the seed, keeping the manifest in step.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolved.insert("seed".into(), seed.to_string());
        self
    }
}
