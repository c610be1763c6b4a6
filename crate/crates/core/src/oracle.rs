//! Brute-force reference simulation. The photon is represented as an explicit
//! polarization x frequency x path amplitude array on a discretized Gaussian
//! spectrum, pushed through the beam splitters and birefringent phases, and
//! reduced to the polarization by summation.
//!
//! [`oracle_state`] only shares the domain types with the closed-form modules.
//! [`oracle_compare`] puts the two side by side.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::analysis::Location;
use crate::error::{Error, Result};
use crate::interferometer::{
    averaged_state_outside, conditional_state_outside, joint_state_inside, path_probabilities,
    path_state_inside,
};
use crate::model::{
    trace_distance, DensityMatrix, FrequencyDistribution, InterferometerConfig, Path,
};

pub const DEFAULT_POINTS: usize = 2001;
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
const DARK_TOL: f64 = 1e-14;

/// Trapezoid discretization of `|g(w)|^2` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
    weights: Vec<f64>,
}

impl FrequencyGrid {
    /// `n` points over `mu +- half_width * sigma`; weights renormalized to
    /// sum to one.
    pub fn gaussian(dist: &FrequencyDistribution, n: usize, half_width: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidFrequencyGrid(format!(
                "need at least 3 points, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidFrequencyGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let lo = dist.mu() - half_width * dist.sigma();
        let h = 2.0 * half_width * dist.sigma() / (n - 1) as f64;
        let omegas: Vec<f64> = (0..n).map(|k| lo + h * k as f64).collect();
        let mut weights: Vec<f64> = omegas
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let end = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                end * h * dist.density(w)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { omegas, weights })
    }

    pub fn default_for(dist: &FrequencyDistribution) -> Self {
        Self::gaussian(dist, DEFAULT_POINTS, DEFAULT_HALF_WIDTH)
            .expect("default grid parameters are valid")
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Before or after the second beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Inside,
    Outside,
}

/// Which path, if any, the state is projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    None,
    Path(Path),
}

/// Amplitudes `psi[pol][k][path]`, flattened.
struct Amplitudes {
    n: usize,
    data: Vec<Complex64>,
}

impl Amplitudes {
    fn idx(&self, pol: usize, k: usize, path: usize) -> usize {
        (pol * self.n + k) * 2 + path
    }

    fn get(&self, pol: usize, k: usize, path: usize) -> Complex64 {
        self.data[self.idx(pol, k, path)]
    }

    fn set(&mut self, pol: usize, k: usize, path: usize, z: Complex64) {
        let i = self.idx(pol, k, path);
        self.data[i] = z;
    }

    /// Unnormalized polarization block for the selected paths.
    fn reduce(&self, paths: &[usize]) -> Matrix2<Complex64> {
        let mut m = Matrix2::zeros();
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.n {
                    for &p in paths {
                        acc += self.get(a, k, p) * self.get(b, k, p).conj();
                    }
                }
                m[(a, b)] = acc;
            }
        }
        m
    }
}

fn evolve(cfg: &InterferometerConfig, grid: &FrequencyGrid, t: f64, stage: Stage) -> Amplitudes {
    let n = grid.len();
    let mut psi = Amplitudes {
        n,
        data: vec![Complex64::new(0.0, 0.0); 4 * n],
    };
    let pol = cfg.pol();
    let initial = [
        pol.c_h() * Complex64::from_polar(1.0, pol.theta()),
        pol.c_v(),
    ];
    let r = std::f64::consts::FRAC_1_SQRT_2;

    // Arms keep running until the photon reaches the second beam splitter.
    let t_arm = match stage {
        Stage::Inside => t,
        Stage::Outside => t.max(cfg.exit_time()),
    };
    let arm_time = [
        cfg.window0().effective_time(t_arm),
        cfg.window1().effective_time(t_arm),
    ];
    let out_time = cfg.output_time(t);

    for (l, amp) in initial.iter().enumerate() {
        let horizontal = l == 0;
        for (k, (&w, &weight)) in grid.omegas.iter().zip(&grid.weights).enumerate() {
            let a = amp * weight.sqrt();
            // First beam splitter on |0~>, then the arm unitaries.
            let mut arms = [Complex64::new(0.0, 0.0); 2];
            for (j, arm) in [Path::Zero, Path::One].into_iter().enumerate() {
                let n_idx = cfg.window(arm).index(horizontal);
                arms[j] = a * r * Complex64::from_polar(1.0, n_idx * w * arm_time[j]);
            }
            match stage {
                Stage::Inside => {
                    psi.set(l, k, 0, arms[0]);
                    psi.set(l, k, 1, arms[1]);
                }
                Stage::Outside => {
                    let out = Complex64::from_polar(
                        1.0,
                        cfg.window_out().index(horizontal) * w * out_time,
                    );
                    psi.set(l, k, 0, (arms[0] + arms[1]) * r * out);
                    psi.set(l, k, 1, (arms[0] - arms[1]) * r * out);
                }
            }
        }
    }
    psi
}

/// Polarization state at laboratory time `t` from the explicit simulation,
/// together with the probability of the conditioning outcome (one when
/// unconditioned).
pub fn oracle_state_with_probability(
    cfg: &InterferometerConfig,
    grid: &FrequencyGrid,
    t: f64,
    stage: Stage,
    conditioning: Conditioning,
) -> Result<(DensityMatrix, f64)> {
    let hi = match stage {
        Stage::Inside => cfg.exit_time(),
        Stage::Outside => f64::INFINITY,
    };
    if !(t >= 0.0 && t <= hi) {
        return Err(Error::OutOfRange { t, lo: 0.0, hi });
    }
    let psi = evolve(cfg, grid, t, stage);
    let m = match conditioning {
        Conditioning::None => psi.reduce(&[0, 1]),
        Conditioning::Path(p) => psi.reduce(&[p.index()]),
    };
    let probability = m[(0, 0)].re + m[(1, 1)].re;
    if probability < DARK_TOL {
        let port = match conditioning {
            Conditioning::Path(p) => p,
            Conditioning::None => Path::Zero,
        };
        return Err(Error::ImpossibleOutcome { port, probability });
    }
    Ok((
        DensityMatrix::from_matrix_unchecked(m.unscale(probability)),
        probability,
    ))
}

pub fn oracle_state(
    cfg: &InterferometerConfig,
    grid: &FrequencyGrid,
    t: f64,
    stage: Stage,
    conditioning: Conditioning,
) -> Result<DensityMatrix> {
    oracle_state_with_probability(cfg, grid, t, stage, conditioning).map(|(rho, _)| rho)
}

fn stage_and_conditioning(location: Location) -> (Stage, Conditioning) {
    match location {
        Location::Path0 => (Stage::Inside, Conditioning::Path(Path::Zero)),
        Location::Path1 => (Stage::Inside, Conditioning::Path(Path::One)),
        Location::JointInside => (Stage::Inside, Conditioning::None),
        Location::Path0Out => (Stage::Outside, Conditioning::Path(Path::Zero)),
        Location::Path1Out => (Stage::Outside, Conditioning::Path(Path::One)),
        Location::JointOut => (Stage::Outside, Conditioning::None),
    }
}

/// Closed-form state at a location, for the configured polarization.
pub fn analytic_state(
    cfg: &InterferometerConfig,
    location: Location,
    t: f64,
) -> Result<DensityMatrix> {
    match location {
        Location::Path0 => path_state_inside(cfg, Path::Zero, t),
        Location::Path1 => path_state_inside(cfg, Path::One, t),
        Location::JointInside => joint_state_inside(cfg, t),
        Location::Path0Out => conditional_state_outside(cfg, Path::Zero, t, true),
        Location::Path1Out => conditional_state_outside(cfg, Path::One, t, true),
        Location::JointOut => averaged_state_outside(cfg, t),
    }
}

/// Outcome of an oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleReport {
    /// Largest trace distance between closed-form and simulated states.
    pub max_state_deviation: f64,
    /// Largest deviation of path or port probabilities.
    pub max_probability_deviation: f64,
    /// Number of `(time, location)` pairs compared.
    pub compared: usize,
    /// Pairs skipped because both sides agree the port is dark.
    pub dark: usize,
    /// Pairs where exactly one side reported a dark port.
    pub dark_mismatches: usize,
}

/// Compares closed-form and simulated states over every `(time, location)`
/// pair. Inside locations only use times up to the exit time. Port
/// probabilities are compared at the first time of each location.
pub fn oracle_compare(
    cfg: &InterferometerConfig,
    grid: &FrequencyGrid,
    times: &[f64],
    locations: &[Location],
) -> Result<OracleReport> {
    let mut report = OracleReport::default();
    let (p0, p1) = path_probabilities(cfg);
    for &location in locations {
        let (stage, conditioning) = stage_and_conditioning(location);
        let (lo, hi) = location.valid_range(cfg);
        let mut probability_checked = false;
        for &t in times.iter().filter(|&&t| t >= lo && t <= hi) {
            let analytic = analytic_state(cfg, location, t);
            let simulated = oracle_state_with_probability(cfg, grid, t, stage, conditioning);
            match (analytic, simulated) {
                (Ok(a), Ok((b, p))) => {
                    report.max_state_deviation =
                        report.max_state_deviation.max(trace_distance(&a, &b)?);
                    report.compared += 1;
                    if !probability_checked {
                        let expected = match (stage, conditioning) {
                            (_, Conditioning::None) => 1.0,
                            (Stage::Inside, Conditioning::Path(_)) => 0.5,
                            (Stage::Outside, Conditioning::Path(Path::Zero)) => p0,
                            (Stage::Outside, Conditioning::Path(Path::One)) => p1,
                        };
                        report.max_probability_deviation =
                            report.max_probability_deviation.max((p - expected).abs());
                        probability_checked = true;
                    }
                }
                (Err(Error::ImpossibleOutcome { .. }), Err(Error::ImpossibleOutcome { .. })) => {
                    report.dark += 1;
                }
                (Err(Error::ImpossibleOutcome { .. }), Ok(_))
                | (Ok(_), Err(Error::ImpossibleOutcome { .. })) => {
                    report.dark_mismatches += 1;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{pure_density, InteractionWindow, PolarizationState};
    use num_complex::Complex64;

    const NH: f64 = 1.553;
    const NV: f64 = 1.544;

    fn config(tau0: f64, tau1: f64) -> InterferometerConfig {
        InterferometerConfig::new(
            FrequencyDistribution::scaled(400.0).unwrap(),
            InteractionWindow::new(NH, NV, 0.0, tau0).unwrap(),
            InteractionWindow::new(NH, NV, 0.0, tau1).unwrap(),
            InteractionWindow::new(NH, NV, 60.0, 3060.0).unwrap(),
            PolarizationState::new(
                Complex64::new(0.6, 0.0),
                Complex64::from_polar(0.8, 0.7),
                0.25,
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn grid(cfg: &InterferometerConfig) -> FrequencyGrid {
        FrequencyGrid::default_for(cfg.dist())
    }

    #[test]
    fn weights_sum_to_one() {
        let g = grid(&config(50.0, 60.0));
        assert_eq!(g.len(), 2001);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((g.omegas()[0] - 392.0).abs() < 1e-12);
        assert!((g.omegas()[2000] - 408.0).abs() < 1e-12);
    }

    #[test]
    fn initial_state_is_recovered() {
        let cfg = config(50.0, 60.0);
        let rho = oracle_state(&cfg, &grid(&cfg), 0.0, Stage::Inside, Conditioning::None).unwrap();
        assert!(rho.max_abs_diff(&pure_density(cfg.pol())) < 1e-12);
    }

    #[test]
    fn port_probabilities_are_complete() {
        for cfg in [config(50.0, 60.0), config(59.5, 60.0), config(60.0, 60.0)] {
            let g = grid(&cfg);
            let total: f64 = Path::BOTH
                .iter()
                .filter_map(|&p| {
                    oracle_state_with_probability(
                        &cfg,
                        &g,
                        500.0,
                        Stage::Outside,
                        Conditioning::Path(p),
                    )
                    .ok()
                    .map(|(_, p)| p)
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_states_are_physical_and_populations_frozen() {
        let cfg = config(58.5, 60.0);
        let g = grid(&cfg);
        for port in Path::BOTH {
            let mut first = None;
            for k in 0..10 {
                let t = 60.0 + 200.0 * k as f64;
                let rho =
                    oracle_state(&cfg, &g, t, Stage::Outside, Conditioning::Path(port)).unwrap();
                assert!((rho.trace() - 1.0).abs() < 1e-10);
                assert!(rho.eigenvalues().0 > -1e-10);
                let herm = (rho.matrix() - rho.matrix().adjoint())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                assert!(herm < 1e-10);
                let pop = rho.pop_h();
                let reference = *first.get_or_insert(pop);
                assert!((pop - reference).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn baseline_port_zero_matches_closed_form() {
        let cfg = config(50.0, 60.0);
        let g = grid(&cfg);
        for k in 0..20 {
            let t = 60.0 + 3000.0 * (k as f64 + 0.37) / 20.0;
            let a = conditional_state_outside(&cfg, Path::Zero, t, true).unwrap();
            let b =
                oracle_state(&cfg, &g, t, Stage::Outside, Conditioning::Path(Path::Zero)).unwrap();
            assert!(trace_distance(&a, &b).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn symmetric_arms_all_locations() {
        let cfg = config(60.0, 60.0);
        let inside: Vec<f64> = (0..10).map(|k| 6.0 * k as f64).collect();
        let outside: Vec<f64> = (0..10).map(|k| 60.0 + 250.0 * k as f64).collect();
        let times: Vec<f64> = inside.into_iter().chain(outside).collect();
        let r = oracle_compare(&cfg, &grid(&cfg), &times, &Location::ALL).unwrap();
        assert!(r.max_state_deviation <= 1e-6, "{r:?}");
        assert!(r.dark > 0);
        assert_eq!(r.dark_mismatches, 0);
    }

    #[test]
    fn probability_matches_at_half_step() {
        let cfg = config(59.5, 60.0);
        let r = oracle_compare(&cfg, &grid(&cfg), &[60.0, 100.0], &[Location::Path0Out]).unwrap();
        assert!(r.max_probability_deviation <= 1e-8, "{r:?}");
    }

    #[test]
    fn refinement_does_not_degrade() {
        let cfg = config(50.0, 60.0);
        let times: Vec<f64> = (0..8).map(|k| 60.0 + 370.0 * k as f64).collect();
        let coarse = oracle_compare(&cfg, &grid(&cfg), &times, &Location::ALL).unwrap();
        let fine_grid = FrequencyGrid::gaussian(cfg.dist(), 4001, 8.0).unwrap();
        let fine = oracle_compare(&cfg, &fine_grid, &times, &Location::ALL).unwrap();
        assert!(fine.max_state_deviation <= 10.0 * coarse.max_state_deviation.max(1e-15));
    }

    fn truncation_change(half_width: f64) -> f64 {
        let cfg = config(58.5, 60.0);
        let wide = grid(&cfg);
        let narrow = FrequencyGrid::gaussian(cfg.dist(), 2001, half_width).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..10 {
            let t = 60.0 + 150.0 * k as f64;
            for port in Path::BOTH {
                let c = Conditioning::Path(port);
                let a = oracle_state(&cfg, &wide, t, Stage::Outside, c).unwrap();
                let b = oracle_state(&cfg, &narrow, t, Stage::Outside, c).unwrap();
                worst = worst.max(trace_distance(&a, &b).unwrap());
            }
        }
        worst
    }

    #[test]
    fn tail_truncation_is_bounded_by_discarded_mass() {
        // Gaussian mass outside +-4 sigma: erfc(4/sqrt 2) = 6.334e-5.
        assert!(truncation_change(4.0) < 2.0 * 6.334248366623996e-05);
        // Outside +-6 sigma: 1.97e-9.
        assert!(truncation_change(6.0) < 1e-5);
    }

    #[test]
    fn coarse_grid_degrades() {
        let cfg = config(50.0, 60.0);
        let times: Vec<f64> = (0..8).map(|k| 60.0 + 370.0 * k as f64).collect();
        let coarse = FrequencyGrid::gaussian(cfg.dist(), 51, 8.0).unwrap();
        let bad = oracle_compare(&cfg, &coarse, &times, &Location::ALL).unwrap();
        let good = oracle_compare(&cfg, &grid(&cfg), &times, &Location::ALL).unwrap();
        assert!(bad.max_state_deviation > good.max_state_deviation);
    }

    #[test]
    fn rejects_bad_grids_and_times() {
        let cfg = config(50.0, 60.0);
        assert!(FrequencyGrid::gaussian(cfg.dist(), 2, 8.0).is_err());
        assert!(FrequencyGrid::gaussian(cfg.dist(), 11, 0.0).is_err());
        let err = oracle_state(&cfg, &grid(&cfg), 61.0, Stage::Inside, Conditioning::None);
        assert!(matches!(err, Err(Error::OutOfRange { .. })));
    }
}
