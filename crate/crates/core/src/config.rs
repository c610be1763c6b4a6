//! Experiment files and the small text formats used on the command line.
//!
//! A configuration is a JSON document:
//!
//! ```json
//! {
//!   "distribution": { "mu_over_sigma": 400 },
//!   "arm0":   { "n_h": 1.553, "n_v": 1.544, "t_start": 0, "t_stop": 50 },
//!   "arm1":   { "n_h": 1.553, "n_v": 1.544, "t_start": 0, "t_stop": 60 },
//!   "output": { "n_h": 1.553, "n_v": 1.544, "t_start": 60, "t_stop": 3060 },
//!   "polarization": { "ch_re": 0.7071067811865476, "cv_re": 0.7071067811865476 },
//!   "run": { "grid": "60:3060:0.5", "locations": ["path0_out"], "n_freq": 2001 }
//! }
//! ```
//!
//! Times are in units of `1/sigma`. Defaults: arm `t_start = 0`, output
//! `t_start` at the later arm closing time, output `t_stop = t_start + 3000`,
//! polarization `|+>` (missing amplitude components are zero, `theta = 0`),
//! `n_freq = 2001`.

use std::fmt;
use std::path::Path as FsPath;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Deserialize;

use crate::analysis::Location;
use crate::model::{
    FrequencyDistribution, InteractionWindow, InterferometerConfig, PolarizationState, NORM_TOL,
};
use crate::oracle::DEFAULT_POINTS;

const DEFAULT_OUTPUT_SPAN: f64 = 3000.0;
const MAX_GRID_POINTS: usize = 50_000_000;

/// One validation failure, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration:\n{}", list(.0))]
    Validation(Vec<FieldError>),
}

fn list(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// `START:STOP:STEP`, inclusive of `STOP` when it lies on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, String> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("grid bounds and step must be finite".into());
        }
        if step <= 0.0 {
            return Err(format!("step must be positive, got {step}"));
        }
        if stop < start {
            return Err(format!("stop {stop} is before start {start}"));
        }
        let spec = Self { start, stop, step };
        let n = spec.intervals();
        if n >= MAX_GRID_POINTS as f64 {
            return Err(format!(
                "grid would have more than {MAX_GRID_POINTS} points"
            ));
        }
        Ok(spec)
    }

    fn intervals(&self) -> f64 {
        ((self.stop - self.start) / self.step + 1e-9).floor()
    }

    pub fn len(&self) -> usize {
        self.intervals() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `start + k * step` for `k = 0..len`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.start + self.step * k as f64)
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("expected START:STOP:STEP, got `{s}`"));
        };
        let num = |name: &str, v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("{name} `{v}` is not a number"))
        };
        Self::new(num("start", start)?, num("stop", stop)?, num("step", step)?)
    }
}

/// Comma-separated location names, e.g. `path0,joint_out`.
pub fn parse_locations(s: &str) -> Result<Vec<Location>, String> {
    let mut out = Vec::new();
    for name in s.split(',') {
        let loc: Location = name.trim().parse()?;
        if out.contains(&loc) {
            return Err(format!("location `{loc}` listed twice"));
        }
        out.push(loc);
    }
    Ok(out)
}

/// Optional settings for the commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub grid: Option<GridSpec>,
    pub locations: Option<Vec<Location>>,
    pub n_freq: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            grid: None,
            locations: None,
            n_freq: DEFAULT_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: InterferometerConfig,
    pub run: RunParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    distribution: Option<RawDistribution>,
    arm0: Option<RawWindow>,
    arm1: Option<RawWindow>,
    output: Option<RawWindow>,
    polarization: Option<RawPolarization>,
    run: Option<RawRun>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    mu_over_sigma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    n_h: Option<f64>,
    n_v: Option<f64>,
    t_start: Option<f64>,
    t_stop: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolarization {
    ch_re: Option<f64>,
    ch_im: Option<f64>,
    cv_re: Option<f64>,
    cv_im: Option<f64>,
    theta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    grid: Option<String>,
    locations: Option<Vec<String>>,
    n_freq: Option<usize>,
}

struct Collector(Vec<FieldError>);

impl Collector {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.0.push(FieldError {
            path: path.into(),
            message: message.into(),
        });
    }

    fn required(&mut self, path: &str, v: Option<f64>) -> Option<f64> {
        match v {
            None => {
                self.push(path, "missing");
                None
            }
            Some(x) if !x.is_finite() => {
                self.push(path, "must be finite");
                None
            }
            Some(x) => Some(x),
        }
    }
}

fn window(
    errs: &mut Collector,
    name: &str,
    raw: Option<&RawWindow>,
    default_start: Option<f64>,
    default_span: Option<f64>,
) -> Option<InteractionWindow> {
    let Some(raw) = raw else {
        errs.push(name, "missing section");
        return None;
    };
    let field = |f: &str| format!("{name}.{f}");
    let index = |errs: &mut Collector, f: &str, v: Option<f64>| {
        let x = errs.required(&field(f), v)?;
        if x <= 0.0 {
            errs.push(
                &field(f),
                format!("refractive index must be positive, got {x}"),
            );
            return None;
        }
        Some(x)
    };
    let n_h = index(errs, "n_h", raw.n_h);
    let n_v = index(errs, "n_v", raw.n_v);
    let t_start = match (raw.t_start, default_start) {
        (None, Some(d)) => Some(d),
        (v, _) => errs.required(&field("t_start"), v),
    };
    let t_stop = match (raw.t_stop, default_span, t_start) {
        (None, Some(span), Some(s)) => Some(s + span),
        (v, _, _) => errs.required(&field("t_stop"), v),
    };
    if let Some(s) = t_start {
        if s < 0.0 {
            errs.push(&field("t_start"), format!("must be non-negative, got {s}"));
        }
    }
    if let (Some(s), Some(e)) = (t_start, t_stop) {
        if e < s {
            errs.push(&field("t_stop"), format!("{e} is before t_start {s}"));
        }
    }
    InteractionWindow::new(n_h?, n_v?, t_start?, t_stop?).ok()
}

/// Parses and validates a configuration document, reporting every problem
/// found rather than stopping at the first.
pub fn parse_config(text: &str) -> Result<LoadedConfig, ConfigError> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut errs = Collector(Vec::new());

    let dist = match &raw.distribution {
        None => {
            errs.push("distribution", "missing section");
            None
        }
        Some(d) => errs
            .required("distribution.mu_over_sigma", d.mu_over_sigma)
            .and_then(|m| FrequencyDistribution::scaled(m).ok()),
    };

    let arm0 = window(&mut errs, "arm0", raw.arm0.as_ref(), Some(0.0), None);
    let arm1 = window(&mut errs, "arm1", raw.arm1.as_ref(), Some(0.0), None);
    let exit = match (arm0, arm1) {
        (Some(a), Some(b)) => Some(a.t_stop().max(b.t_stop())),
        _ => None,
    };
    let output = window(
        &mut errs,
        "output",
        raw.output.as_ref(),
        exit,
        Some(DEFAULT_OUTPUT_SPAN),
    );
    if let (Some(out), Some(exit)) = (output, exit) {
        if out.t_start() < exit {
            errs.push(
                "output.t_start",
                format!(
                    "output coupling starts at {} before the arm windows close at {exit}",
                    out.t_start()
                ),
            );
        }
    }

    let pol = match &raw.polarization {
        None => Some(PolarizationState::plus()),
        Some(p) => {
            let parts = [
                ("polarization.ch_re", p.ch_re),
                ("polarization.ch_im", p.ch_im),
                ("polarization.cv_re", p.cv_re),
                ("polarization.cv_im", p.cv_im),
                ("polarization.theta", p.theta),
            ];
            let mut ok = true;
            for (path, v) in parts {
                if v.is_some_and(|x| !x.is_finite()) {
                    errs.push(path, "must be finite");
                    ok = false;
                }
            }
            let z = |v: Option<f64>| v.unwrap_or(0.0);
            let c_h = Complex64::new(z(p.ch_re), z(p.ch_im));
            let c_v = Complex64::new(z(p.cv_re), z(p.cv_im));
            let norm = c_h.norm_sqr() + c_v.norm_sqr();
            if ok && (norm - 1.0).abs() > NORM_TOL {
                errs.push(
                    "polarization",
                    format!("|c_h|^2 + |c_v|^2 = {norm}, expected 1"),
                );
                ok = false;
            }
            if ok {
                PolarizationState::new(c_h, c_v, z(p.theta)).ok()
            } else {
                None
            }
        }
    };

    let mut run = RunParams::default();
    if let Some(r) = &raw.run {
        if let Some(g) = &r.grid {
            match g.parse::<GridSpec>() {
                Ok(spec) => run.grid = Some(spec),
                Err(e) => errs.push("run.grid", e),
            }
        }
        if let Some(names) = &r.locations {
            let mut locs = Vec::new();
            for (i, name) in names.iter().enumerate() {
                match name.parse::<Location>() {
                    Ok(l) if locs.contains(&l) => errs.push(
                        &format!("run.locations[{i}]"),
                        format!("`{l}` listed twice"),
                    ),
                    Ok(l) => locs.push(l),
                    Err(e) => errs.push(&format!("run.locations[{i}]"), e),
                }
            }
            run.locations = Some(locs);
        }
        if let Some(n) = r.n_freq {
            if n < 3 {
                errs.push(
                    "run.n_freq",
                    format!("need at least 3 frequency points, got {n}"),
                );
            }
            run.n_freq = n;
        }
    }

    if !errs.0.is_empty() {
        return Err(ConfigError::Validation(errs.0));
    }
    let (Some(dist), Some(arm0), Some(arm1), Some(output), Some(pol)) =
        (dist, arm0, arm1, output, pol)
    else {
        return Err(ConfigError::Validation(vec![FieldError {
            path: "<root>".into(),
            message: "incomplete configuration".into(),
        }]));
    };
    let config = InterferometerConfig::new(dist, arm0, arm1, output, pol).map_err(|e| {
        ConfigError::Validation(vec![FieldError {
            path: "<root>".into(),
            message: e.to_string(),
        }])
    })?;
    Ok(LoadedConfig { config, run })
}

pub fn load_config(path: impl AsRef<FsPath>) -> Result<LoadedConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}
