//! The command layer behind the `open-mzi` binary. Each command takes an
//! already validated configuration and writes its report to the given
//! streams, so it can be driven from tests without a process boundary.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::analysis::{
    backflow_intervals, estimate_interaction_time_difference, trace_distance_at,
    trace_distance_series, Location, TimeDifferenceEstimate,
};
use crate::config::{ConfigError, GridSpec};
use crate::interferometer::{
    conditional_state_outside, path_probabilities, OutputFunctions, DARK_PORT_TOL,
};
use crate::maps::divisibility_scan;
use crate::model::{InterferometerConfig, Path};
use crate::oracle::{oracle_compare, FrequencyGrid, OracleReport, DEFAULT_HALF_WIDTH};
use crate::Error;

/// Pass threshold of `oracle-check` for state and probability deviations.
pub const ORACLE_THRESHOLD: f64 = 1e-5;
const DEFAULT_STEP: f64 = 0.5;
/// Default number of oracle comparison times per region.
pub const ORACLE_TIMES: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Model(Error::EstimatorOutOfRegime { .. }) => 3,
            _ => 1,
        }
    }
}

/// Default sweep grid: the whole experiment at a step of 0.5.
pub fn default_sweep_grid(cfg: &InterferometerConfig) -> GridSpec {
    GridSpec {
        start: 0.0,
        stop: cfg.window_out().t_stop(),
        step: DEFAULT_STEP,
    }
}

/// Default divisibility grid: the output window at a step of 0.5.
pub fn default_output_grid(cfg: &InterferometerConfig) -> GridSpec {
    GridSpec {
        start: cfg.exit_time(),
        stop: cfg.window_out().t_stop(),
        step: DEFAULT_STEP,
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column names of a sweep over `locations`.
pub fn sweep_header(locations: &[Location]) -> Vec<String> {
    let mut cols = vec!["tau".to_string()];
    cols.extend(locations.iter().map(|l| format!("D_{}", l.name())));
    cols.extend(["P0_out", "P1_out", "popH_path0_out", "popH_path1_out"].map(String::from));
    cols
}

/// Writes the sweep CSV to `out` and one warning per column with empty
/// cells to `diag`.
pub fn sweep(
    cfg: &InterferometerConfig,
    grid: &[f64],
    locations: &[Location],
    out: impl Write,
    mut diag: impl Write,
) -> Result<(), CliError> {
    if locations.is_empty() {
        return Err(CliError::Usage("no locations requested".into()));
    }
    let header = sweep_header(locations);
    let (p0, p1) = path_probabilities(cfg);
    let ports = [Location::Path0Out, Location::Path1Out];
    let mut empty = vec![0usize; header.len()];
    let mut dark = vec![false; header.len()];

    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for &t in grid {
        row.clear();
        row.push(fmt_float(t));
        for &loc in locations {
            row.push(match trace_distance_at(cfg, loc, t) {
                Ok(d) => fmt_float(d),
                Err(e) => cell_error(e, &mut dark[row.len()], &mut empty[row.len()])?,
            });
        }
        row.push(fmt_float(p0));
        row.push(fmt_float(p1));
        for port in ports {
            let (lo, hi) = port.valid_range(cfg);
            let col = row.len();
            row.push(if !(t >= lo && t <= hi) {
                empty[col] += 1;
                String::new()
            } else {
                let port = port.output_port().unwrap_or(Path::Zero);
                match conditional_state_outside(cfg, port, t, true) {
                    Ok(rho) => fmt_float(rho.pop_h()),
                    Err(e) => cell_error(e, &mut dark[col], &mut empty[col])?,
                }
            });
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;

    for (k, name) in header.iter().enumerate() {
        if dark[k] {
            writeln!(
                diag,
                "warning: {name} is empty: the output port is dark for this configuration"
            )?;
        } else if empty[k] > 0 {
            writeln!(
                diag,
                "warning: {name} has {} empty cells outside its time range",
                empty[k]
            )?;
        }
    }
    Ok(())
}

fn cell_error(e: Error, dark: &mut bool, empty: &mut usize) -> Result<String, CliError> {
    match e {
        Error::ImpossibleOutcome { .. } => *dark = true,
        Error::OutOfRange { .. } => *empty += 1,
        other => return Err(other.into()),
    }
    Ok(String::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    /// Equal arm windows with unequal indices: the estimate measures an
    /// optical path difference, reported as an index difference.
    IndexDifference,
    TimeDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub mode: EstimateMode,
    pub result: TimeDifferenceEstimate,
    /// The estimated quantity in the units of `mode`.
    pub value: f64,
    pub truth: f64,
    pub relative_error: f64,
}

impl EstimateReport {
    pub fn render(&self) -> String {
        let p = &self.result.peak;
        let mut s = String::new();
        let quantity = match self.mode {
            EstimateMode::TimeDifference => "interaction time difference |t0 - t1|",
            EstimateMode::IndexDifference => "index difference |n0 - n1|",
        };
        let _ = writeln!(s, "quantity        {quantity}");
        let _ = writeln!(s, "t_max           {}", fmt_float(p.t_max));
        let _ = writeln!(s, "lab_time        {}", fmt_float(p.lab_time));
        let _ = writeln!(s, "peak            {}", fmt_float(p.value));
        let _ = writeln!(s, "ambiguous_peak  {}", p.ambiguous);
        let _ = writeln!(s, "raw_estimate    {}", fmt_float(self.result.estimate));
        let _ = writeln!(s, "estimate        {}", fmt_float(self.value));
        let _ = writeln!(s, "ground_truth    {}", fmt_float(self.truth));
        let _ = writeln!(s, "relative_error  {}", fmt_float(self.relative_error));
        s
    }
}

fn max_arm_index(cfg: &InterferometerConfig) -> f64 {
    [cfg.window0(), cfg.window1()]
        .iter()
        .flat_map(|w| [w.n_h(), w.n_v()])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Runs the path-difference estimator and compares it with the value implied
/// by the configuration.
///
/// When both arms are open for the same time `t` but have different indices,
/// the raw estimate equals `t |n0 - n1| / n_max`, so it is rescaled to an
/// index difference.
pub fn estimate(cfg: &InterferometerConfig) -> Result<EstimateReport, CliError> {
    let result = estimate_interaction_time_difference(cfg)?;
    let (w0, w1) = (cfg.window0(), cfg.window1());
    let same_duration = (w0.duration() - w1.duration()).abs() < 1e-12;
    let index_gap = ((w0.n_h() - w1.n_h()).abs() + (w0.n_v() - w1.n_v()).abs()) / 2.0;
    let (mode, value, truth) = if same_duration && index_gap > 0.0 {
        let scale = max_arm_index(cfg) / w0.duration();
        (
            EstimateMode::IndexDifference,
            result.estimate * scale,
            index_gap,
        )
    } else {
        (
            EstimateMode::TimeDifference,
            result.estimate,
            (w0.duration() - w1.duration()).abs(),
        )
    };
    let relative_error = if truth > 0.0 {
        (value - truth).abs() / truth
    } else {
        f64::INFINITY
    };
    Ok(EstimateReport {
        mode,
        result,
        value,
        truth,
        relative_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortDivisibility {
    pub port: Path,
    pub dark: bool,
    pub non_divisible: Vec<(f64, f64)>,
    pub backflow: Vec<(f64, f64)>,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisibilityReport {
    pub step: f64,
    pub ports: Vec<PortDivisibility>,
}

impl DivisibilityReport {
    pub fn agree(&self) -> bool {
        self.ports.iter().all(|p| p.agree)
    }

    pub fn render(&self) -> String {
        let list = |v: &[(f64, f64)]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter()
                    .map(|(a, b)| format!("[{a}, {b}]"))
                    .collect::<Vec<_>>()
                    .join(" ")
            }
        };
        let mut s = String::new();
        for p in &self.ports {
            let name = format!("path{}_out", p.port.index());
            if p.dark {
                let _ = writeln!(s, "{name}: dark port, no conditional dynamics");
                continue;
            }
            let _ = writeln!(s, "{name}: non-CP-divisible {}", list(&p.non_divisible));
            let _ = writeln!(s, "{name}: backflow         {}", list(&p.backflow));
            let _ = writeln!(
                s,
                "{name}: agreement        {}",
                if p.agree { "OK" } else { "MISMATCH" }
            );
        }
        s
    }
}

/// Whether two interval lists coincide with endpoints at most `step` apart.
pub fn intervals_match(a: &[(f64, f64)], b: &[(f64, f64)], step: f64) -> bool {
    let tol = step * (1.0 + 1e-9);
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol)
}

/// Compares non-CP-divisible intervals with backflow intervals on both
/// output paths. Grid points outside the output window are ignored.
pub fn divisibility(
    cfg: &InterferometerConfig,
    grid: &[f64],
) -> Result<DivisibilityReport, CliError> {
    let (lo, hi) = Location::Path0Out.valid_range(cfg);
    let grid: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&t| t >= lo && t <= hi)
        .collect();
    if grid.len() < 2 {
        return Err(CliError::Usage(format!(
            "the grid needs at least two points inside the output window [{lo}, {hi}]"
        )));
    }
    let step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let of = OutputFunctions::new(cfg);
    let mut ports = Vec::new();
    for (port, loc) in [
        (Path::Zero, Location::Path0Out),
        (Path::One, Location::Path1Out),
    ] {
        // The trace-distance pair and the propagator both need a lit port.
        let plus_dark = trace_distance_at(cfg, loc, lo).is_err();
        if of.probability(port) < DARK_PORT_TOL || plus_dark {
            ports.push(PortDivisibility {
                port,
                dark: true,
                non_divisible: Vec::new(),
                backflow: Vec::new(),
                agree: true,
            });
            continue;
        }
        let non_divisible = divisibility_scan(cfg, port, &grid)?;
        let backflow = backflow_intervals(&trace_distance_series(cfg, loc, &grid)?);
        let agree = intervals_match(&non_divisible, &backflow, step);
        ports.push(PortDivisibility {
            port,
            dark: false,
            non_divisible,
            backflow,
            agree,
        });
    }
    Ok(DivisibilityReport { step, ports })
}

/// Evenly spaced comparison times: `count` inside the arms and `count` on the
/// output paths.
pub fn default_oracle_times(cfg: &InterferometerConfig, count: usize) -> Vec<f64> {
    let exit = cfg.exit_time();
    let stop = cfg.window_out().t_stop();
    let span =
        |lo: f64, hi: f64| (1..=count).map(move |k| lo + (hi - lo) * k as f64 / count as f64);
    span(0.0, exit).chain(span(exit, stop)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub n_freq: usize,
    pub report: OracleReport,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.report.max_state_deviation <= ORACLE_THRESHOLD
            && self.report.max_probability_deviation <= ORACLE_THRESHOLD
            && self.report.dark_mismatches == 0
    }

    pub fn render(&self) -> String {
        let r = &self.report;
        let mut s = String::new();
        let _ = writeln!(s, "n_freq                     {}", self.n_freq);
        let _ = writeln!(s, "compared                   {}", r.compared);
        let _ = writeln!(s, "dark                       {}", r.dark);
        let _ = writeln!(s, "dark_mismatches            {}", r.dark_mismatches);
        let _ = writeln!(
            s,
            "max_deviation              {}",
            fmt_float(r.max_state_deviation)
        );
        let _ = writeln!(
            s,
            "max_probability_deviation  {}",
            fmt_float(r.max_probability_deviation)
        );
        let _ = writeln!(
            s,
            "threshold                  {}",
            fmt_float(ORACLE_THRESHOLD)
        );
        let _ = writeln!(
            s,
            "result                     {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        s
    }
}

pub fn oracle_check(
    cfg: &InterferometerConfig,
    n_freq: usize,
    times: &[f64],
    locations: &[Location],
) -> Result<OracleCheck, CliError> {
    let grid = FrequencyGrid::gaussian(cfg.dist(), n_freq, DEFAULT_HALF_WIDTH)?;
    let report = oracle_compare(cfg, &grid, times, locations)?;
    Ok(OracleCheck { n_freq, report })
}
