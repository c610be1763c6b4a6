//! Trace-distance dynamics of the `|+>`, `|->` pair, information backflow,
//! the BLP quantity and the estimate of the in-interferometer interaction
//! time difference from the position of the recoherence peak.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::{
    averaged_from, conditional_from, joint_state_inside, path_state_inside, OutputFunctions,
};
use crate::maps::runs;
use crate::model::{trace_distance, InterferometerConfig, Path, PolarizationState};

/// Smallest step-to-step increase of the trace distance counted as backflow.
pub const RISE_TOL: f64 = 1e-9;
/// The estimator requires `|kappa_H|, |kappa_V|` below this.
pub const INTERFERENCE_TOL: f64 = 1e-6;
/// `|Lambda|` below this everywhere means there is no peak to locate.
pub const PEAK_FLOOR: f64 = 1e-12;

const COARSE_POINTS: usize = 4000;
const MAX_FINE_POINTS: usize = 4_000_000;

/// Where the polarization is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    /// Arm 0, inside the interferometer.
    Path0,
    /// Arm 1, inside the interferometer.
    Path1,
    /// Both arms, path ignored.
    #[serde(rename = "joint")]
    JointInside,
    /// Output port 0'.
    Path0Out,
    /// Output port 1'.
    Path1Out,
    /// Both outputs, path ignored.
    JointOut,
}

impl Location {
    pub const ALL: [Location; 6] = [
        Location::Path0,
        Location::Path1,
        Location::JointInside,
        Location::Path0Out,
        Location::Path1Out,
        Location::JointOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Location::Path0 => "path0",
            Location::Path1 => "path1",
            Location::JointInside => "joint",
            Location::Path0Out => "path0_out",
            Location::Path1Out => "path1_out",
            Location::JointOut => "joint_out",
        }
    }

    pub fn is_inside(self) -> bool {
        matches!(
            self,
            Location::Path0 | Location::Path1 | Location::JointInside
        )
    }

    /// Laboratory times at which the location is defined.
    pub fn valid_range(self, cfg: &InterferometerConfig) -> (f64, f64) {
        if self.is_inside() {
            (0.0, cfg.exit_time())
        } else {
            (0.0, f64::INFINITY)
        }
    }

    pub fn output_port(self) -> Option<Path> {
        match self {
            Location::Path0Out => Some(Path::Zero),
            Location::Path1Out => Some(Path::One),
            _ => None,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Location {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Location::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown location `{s}`"))
    }
}

/// Trace distance of the evolved `|+>`, `|->` pair on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDistanceSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub location: Location,
}

impl TraceDistanceSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, location: Location) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need matching times and values with at least two points, got {} and {}",
                times.len(),
                values.len()
            )));
        }
        Ok(Self {
            times,
            values,
            location,
        })
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates the trace distance at one location and time. `pair` holds the
/// output functions of the `|+>` and `|->` experiments.
fn distance_with(
    cfg: &InterferometerConfig,
    pair: &[OutputFunctions; 2],
    location: Location,
    t: f64,
) -> Result<f64> {
    let (lo, hi) = location.valid_range(cfg);
    if !(t >= lo && t <= hi) {
        return Err(Error::OutOfRange { t, lo, hi });
    }
    let plus = cfg.with_pol(PolarizationState::plus());
    let minus = cfg.with_pol(PolarizationState::minus());
    let (a, b) = match location {
        Location::Path0 => (
            path_state_inside(&plus, Path::Zero, t)?,
            path_state_inside(&minus, Path::Zero, t)?,
        ),
        Location::Path1 => (
            path_state_inside(&plus, Path::One, t)?,
            path_state_inside(&minus, Path::One, t)?,
        ),
        Location::JointInside => (
            joint_state_inside(&plus, t)?,
            joint_state_inside(&minus, t)?,
        ),
        Location::Path0Out | Location::Path1Out => {
            let port = location.output_port().unwrap_or(Path::Zero);
            (
                conditional_from(&pair[0], port, t, true)?,
                conditional_from(&pair[1], port, t, true)?,
            )
        }
        Location::JointOut => (averaged_from(&pair[0], t), averaged_from(&pair[1], t)),
    };
    trace_distance(&a, &b)
}

fn pair_functions(cfg: &InterferometerConfig) -> [OutputFunctions; 2] {
    [
        OutputFunctions::new(&cfg.with_pol(PolarizationState::plus())),
        OutputFunctions::new(&cfg.with_pol(PolarizationState::minus())),
    ]
}

/// Trace distance between the evolved `|+>` and `|->` states at one time.
/// The configured polarization is ignored.
pub fn trace_distance_at(cfg: &InterferometerConfig, location: Location, t: f64) -> Result<f64> {
    distance_with(cfg, &pair_functions(cfg), location, t)
}

pub fn trace_distance_series(
    cfg: &InterferometerConfig,
    location: Location,
    grid: &[f64],
) -> Result<TraceDistanceSeries> {
    let pair = pair_functions(cfg);
    let values = grid
        .iter()
        .map(|&t| distance_with(cfg, &pair, location, t))
        .collect::<Result<Vec<_>>>()?;
    TraceDistanceSeries::new(grid.to_vec(), values, location)
}

/// Maximal time intervals on which consecutive values rise by more than
/// [`RISE_TOL`].
pub fn backflow_intervals(series: &TraceDistanceSeries) -> Vec<(f64, f64)> {
    let rising: Vec<bool> = series
        .values
        .windows(2)
        .map(|w| w[1] - w[0] > RISE_TOL)
        .collect();
    runs(&series.times, &rising)
}

/// Total backflow: the sum of the increases above [`RISE_TOL`].
pub fn blp_measure(series: &TraceDistanceSeries) -> f64 {
    series
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > RISE_TOL)
        .fold(0.0, |acc, d| acc + d)
}

/// Location of the global maximum of `|Lambda|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPeak {
    /// Total interaction time `T'` on the output paths at the maximum.
    pub t_max: f64,
    /// Laboratory time of the maximum.
    pub lab_time: f64,
    pub value: f64,
    /// Set when a second envelope maximum of comparable height exists or
    /// both terms overlap at the maximum, so "the" peak is not unique.
    pub ambiguous: bool,
}

/// Finds the output interaction time `T'` in `scan_range` at which `|Lambda|`
/// is largest.
///
/// A coarse scan of the smooth envelope `|term_1| + |term_2|` picks the
/// bracket; `|Lambda|` itself is then sampled inside it at a step of
/// `pi / (8 mu n_max)`.
pub fn lambda_peak(cfg: &InterferometerConfig, scan_range: (f64, f64)) -> Result<LambdaPeak> {
    let of = OutputFunctions::new(cfg);
    let out = cfg.window_out();
    let lo = scan_range.0.max(0.0);
    let hi = scan_range.1.min(out.duration());
    if !(hi >= lo) {
        return Err(Error::InvalidGrid(format!(
            "scan range [{}, {}] does not overlap the output window",
            scan_range.0, scan_range.1
        )));
    }
    let lab = |tp: f64| out.t_start() + tp;
    let envelope = |tp: f64| {
        let (a, b) = of.lambda_terms(lab(tp));
        a.norm() + b.norm()
    };

    let n = COARSE_POINTS;
    let h = (hi - lo) / n as f64;
    let coarse: Vec<f64> = (0..=n).map(|k| envelope(lo + h * k as f64)).collect();
    let (best, &best_env) = coarse
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("coarse grid is never empty");
    if best_env < PEAK_FLOOR {
        return Err(Error::PeakNotFound { floor: PEAK_FLOOR });
    }

    let bracket_lo = lo + h * best.saturating_sub(1) as f64;
    let bracket_hi = (lo + h * (best + 1) as f64).min(hi);
    let windows = [cfg.window0(), cfg.window1(), out];
    let n_max = windows
        .iter()
        .flat_map(|w| [w.n_h().abs(), w.n_v().abs()])
        .fold(1.0, f64::max);
    let fine_step = std::f64::consts::PI / (8.0 * cfg.dist().mu().abs().max(1.0) * n_max);
    let m = (((bracket_hi - bracket_lo) / fine_step).ceil() as usize).clamp(1, MAX_FINE_POINTS);
    let (t_max, value) = (0..=m)
        .map(|k| {
            let tp = bracket_lo + (bracket_hi - bracket_lo) * k as f64 / m as f64;
            (tp, of.lambda_at(lab(tp)).norm())
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("fine grid is never empty");
    if value < PEAK_FLOOR {
        return Err(Error::PeakNotFound { floor: PEAK_FLOOR });
    }

    let rivals = (0..=n)
        .filter(|&k| {
            let left = k == 0 || coarse[k] > coarse[k - 1];
            let right = k == n || coarse[k] >= coarse[k + 1];
            left && right && coarse[k] >= 0.5 * best_env
        })
        .count();
    let (a, b) = of.lambda_terms(lab(t_max));
    let overlap = a.norm().min(b.norm()) > 0.1 * a.norm().max(b.norm());

    Ok(LambdaPeak {
        t_max,
        lab_time: lab(t_max),
        value,
        ambiguous: rivals > 1 || overlap,
    })
}

/// Result of the path-difference estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDifferenceEstimate {
    pub peak: LambdaPeak,
    /// `|delta_n'| t_max / max{n}`.
    pub estimate: f64,
}

/// Estimates `|t_0 - t_1|` as `|delta_n'| t_max / max{n_H, n_V}`, with
/// `t_max` the output interaction time of the `|Lambda|` peak and the maximum
/// taken over the arm indices. Only meaningful when the arms no longer
/// interfere at the second beam splitter.
pub fn estimate_interaction_time_difference(
    cfg: &InterferometerConfig,
) -> Result<TimeDifferenceEstimate> {
    let of = OutputFunctions::new(cfg);
    let (kappa_h, kappa_v) = (of.kappa_h(), of.kappa_v());
    if kappa_h.abs() >= INTERFERENCE_TOL || kappa_v.abs() >= INTERFERENCE_TOL {
        return Err(Error::EstimatorOutOfRegime { kappa_h, kappa_v });
    }
    let peak = lambda_peak(cfg, (0.0, cfg.window_out().duration()))?;
    let n_max = [cfg.window0(), cfg.window1()]
        .iter()
        .flat_map(|w| [w.n_h(), w.n_v()])
        .fold(f64::NEG_INFINITY, f64::max);
    let estimate = cfg.window_out().delta_n().abs() * peak.t_max / n_max;
    Ok(TimeDifferenceEstimate { peak, estimate })
}
