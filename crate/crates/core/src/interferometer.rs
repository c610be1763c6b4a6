//! Mach-Zehnder composition of two dephasing arms: joint and path-wise
//! states inside the interferometer, and the averaged and port-conditioned
//! states after the second beam splitter.
//!
//! Both beam splitters are ideal 50/50 Hadamards with no relative phase
//! between the arms. After the second beam splitter both output paths see the
//! same birefringent coupling, so every delay is shifted by
//! `delta_n' * T'(t)`.

use num_complex::Complex64;

use crate::channels::single_path_state;
use crate::error::{Error, Result};
use crate::model::{kappa_of_delay, DensityMatrix, InterferometerConfig, Path};

/// Probability below which an output port counts as dark.
pub const DARK_PORT_TOL: f64 = 1e-14;

/// Closed-form ingredients of the output-side states, built once per
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFunctions {
    cfg: InterferometerConfig,
    kappa_h: f64,
    kappa_v: f64,
    /// `delta_n_j * t_j` for the two arms.
    arm_delay: [f64; 2],
    /// `n_0H t_0 - n_1V t_1` and `n_1H t_1 - n_0V t_0`.
    cross_delay: [f64; 2],
}

impl OutputFunctions {
    pub fn new(cfg: &InterferometerConfig) -> Self {
        let (w0, w1) = (cfg.window0(), cfg.window1());
        let (t0, t1) = (w0.duration(), w1.duration());
        let (kappa_h, kappa_v) = interference_kappas(cfg);
        Self {
            cfg: *cfg,
            kappa_h,
            kappa_v,
            arm_delay: [w0.delta_n() * t0, w1.delta_n() * t1],
            cross_delay: [w0.n_h() * t0 - w1.n_v() * t1, w1.n_h() * t1 - w0.n_v() * t0],
        }
    }

    /// Same functions with the interference factors replaced. Only the
    /// populations and detection probabilities depend on them.
    pub fn with_interference_kappas(&self, kappa_h: f64, kappa_v: f64) -> Self {
        Self {
            kappa_h,
            kappa_v,
            ..*self
        }
    }

    pub fn config(&self) -> &InterferometerConfig {
        &self.cfg
    }

    pub fn kappa_h(&self) -> f64 {
        self.kappa_h
    }

    pub fn kappa_v(&self) -> f64 {
        self.kappa_v
    }

    /// `h_j' = [2 + (-1)^j' kappa_H] / 4`
    pub fn h(&self, port: Path) -> f64 {
        (2.0 + port.sign() * self.kappa_h) / 4.0
    }

    /// `v_j' = [2 + (-1)^j' kappa_V] / 4`
    pub fn v(&self, port: Path) -> f64 {
        (2.0 + port.sign() * self.kappa_v) / 4.0
    }

    /// Extra delay `delta_n' * T'(t)` picked up after the second beam splitter.
    pub fn output_delay(&self, t: f64) -> f64 {
        self.cfg.window_out().delta_n() * self.cfg.output_time(t)
    }

    /// Decoherence function of arm `j` continued through the output coupling.
    pub fn shifted_kappa(&self, arm: Path, t: f64) -> Complex64 {
        let x = self.arm_delay[arm.index()] + self.output_delay(t);
        kappa_of_delay(self.cfg.dist(), self.cfg.pol().theta(), x)
    }

    /// The two cross terms of `Lambda(t)`, `H` from arm 0 against `V` from
    /// arm 1 and vice versa.
    pub fn lambda_terms(&self, t: f64) -> (Complex64, Complex64) {
        let s = self.output_delay(t);
        let (dist, theta) = (self.cfg.dist(), self.cfg.pol().theta());
        (
            kappa_of_delay(dist, theta, self.cross_delay[0] + s),
            kappa_of_delay(dist, theta, self.cross_delay[1] + s),
        )
    }

    pub fn lambda_at(&self, t: f64) -> Complex64 {
        let (a, b) = self.lambda_terms(t);
        a + b
    }

    /// Delays of the two `Lambda` terms before the output coupling.
    pub fn cross_delays(&self) -> [f64; 2] {
        self.cross_delay
    }

    /// `f_j'(t) = [kappa_0(t) + kappa_1(t) + (-1)^j' Lambda(t)] / 4`
    pub fn f(&self, port: Path, t: f64) -> Complex64 {
        (self.shifted_kappa(Path::Zero, t)
            + self.shifted_kappa(Path::One, t)
            + port.sign() * self.lambda_at(t))
            / 4.0
    }

    /// Detection probability of `port` for the configured polarization.
    pub fn probability(&self, port: Path) -> f64 {
        let pol = self.cfg.pol();
        let p =
            (2.0 + port.sign() * (pol.prob_h() * self.kappa_h + pol.prob_v() * self.kappa_v)) / 4.0;
        p.clamp(0.0, 1.0)
    }

    /// Unnormalized state on `port`, i.e. the port probability times the
    /// conditional state.
    pub fn weighted_state(&self, port: Path, t: f64) -> DensityMatrix {
        let pol = self.cfg.pol();
        DensityMatrix::from_parts(
            pol.prob_h() * self.h(port),
            pol.coherence_amplitude() * self.f(port, t),
            pol.prob_v() * self.v(port),
        )
    }
}

fn check_inside(cfg: &InterferometerConfig, t: f64) -> Result<()> {
    let hi = cfg.exit_time();
    if !(0.0..=hi).contains(&t) {
        return Err(Error::OutOfRange { t, lo: 0.0, hi });
    }
    Ok(())
}

fn check_nonnegative(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange {
            t,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

/// State inside the interferometer when the path is not measured: the
/// equal-weight mixture of the two arm channels.
pub fn joint_state_inside(cfg: &InterferometerConfig, t: f64) -> Result<DensityMatrix> {
    check_inside(cfg, t)?;
    let a = path_state_inside(cfg, Path::Zero, t)?;
    let b = path_state_inside(cfg, Path::One, t)?;
    let pol = cfg.pol();
    let coherence = 0.5 * (a.coherence() + b.coherence());
    Ok(DensityMatrix::from_parts(
        pol.prob_h(),
        coherence,
        pol.prob_v(),
    ))
}

/// State inside the interferometer conditioned on the photon taking `arm`.
/// Each arm is found with probability one half.
pub fn path_state_inside(cfg: &InterferometerConfig, arm: Path, t: f64) -> Result<DensityMatrix> {
    check_inside(cfg, t)?;
    Ok(single_path_state(cfg.pol(), cfg.window(arm), cfg.dist(), t))
}

/// Interference factors `(kappa_H, kappa_V)` at the second beam splitter,
/// `2 exp[-sigma^2 x^2 / 2] cos(mu x)` with `x = n_0 t_0 - n_1 t_1`.
pub fn interference_kappas(cfg: &InterferometerConfig) -> (f64, f64) {
    let (w0, w1) = (cfg.window0(), cfg.window1());
    let (t0, t1) = (w0.duration(), w1.duration());
    let dist = cfg.dist();
    let factor = |x: f64| {
        let sx = dist.sigma() * x;
        2.0 * (-0.5 * sx * sx).exp() * (dist.mu() * x).cos()
    };
    (
        factor(w0.n_h() * t0 - w1.n_h() * t1),
        factor(w0.n_v() * t0 - w1.n_v() * t1),
    )
}

/// `Lambda(t)` at laboratory time `t`.
pub fn lambda_function(cfg: &InterferometerConfig, t: f64) -> Complex64 {
    OutputFunctions::new(cfg).lambda_at(t)
}

/// Detection probabilities `(P_0', P_1')` of the two output ports.
pub fn path_probabilities(cfg: &InterferometerConfig) -> (f64, f64) {
    let of = OutputFunctions::new(cfg);
    (of.probability(Path::Zero), of.probability(Path::One))
}

/// State on output `port` at laboratory time `t`. With `normalized = false`
/// the result is weighted by the port probability and its trace is `P_j'`.
pub fn conditional_state_outside(
    cfg: &InterferometerConfig,
    port: Path,
    t: f64,
    normalized: bool,
) -> Result<DensityMatrix> {
    check_nonnegative(t)?;
    let of = OutputFunctions::new(cfg);
    conditional_from(&of, port, t, normalized)
}

pub(crate) fn conditional_from(
    of: &OutputFunctions,
    port: Path,
    t: f64,
    normalized: bool,
) -> Result<DensityMatrix> {
    let weighted = of.weighted_state(port, t);
    if !normalized {
        return Ok(weighted);
    }
    let p = of.probability(port);
    if p < DARK_PORT_TOL {
        return Err(Error::ImpossibleOutcome {
            port,
            probability: p,
        });
    }
    Ok(weighted.scaled(1.0 / p))
}

/// State after the second beam splitter when the output path is ignored.
pub fn averaged_state_outside(cfg: &InterferometerConfig, t: f64) -> Result<DensityMatrix> {
    check_nonnegative(t)?;
    let of = OutputFunctions::new(cfg);
    Ok(averaged_from(&of, t))
}

pub(crate) fn averaged_from(of: &OutputFunctions, t: f64) -> DensityMatrix {
    let pol = of.config().pol();
    let coherence = pol.coherence_amplitude()
        * (of.shifted_kappa(Path::Zero, t) + of.shifted_kappa(Path::One, t))
        / 2.0;
    DensityMatrix::from_parts(pol.prob_h(), coherence, pol.prob_v())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        pure_density, trace_distance, FrequencyDistribution, InteractionWindow, PolarizationState,
    };
    use proptest::prelude::*;

    const NH: f64 = 1.553;
    const NV: f64 = 1.544;

    fn config(tau0: f64, tau1: f64, pol: PolarizationState) -> InterferometerConfig {
        InterferometerConfig::new(
            FrequencyDistribution::scaled(400.0).unwrap(),
            InteractionWindow::new(NH, NV, 0.0, tau0).unwrap(),
            InteractionWindow::new(NH, NV, 0.0, tau1).unwrap(),
            InteractionWindow::new(NH, NV, 60.0, 4060.0).unwrap(),
            pol,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_arms_reduce_to_single_path() {
        let cfg = config(60.0, 60.0, PolarizationState::plus());
        for t in [0.0, 12.5, 40.0, 60.0] {
            let joint = joint_state_inside(&cfg, t).unwrap();
            let single = single_path_state(cfg.pol(), cfg.window0(), cfg.dist(), t);
            assert!(joint.max_abs_diff(&single) < 1e-15);
        }
        let start = joint_state_inside(&cfg, 0.0).unwrap();
        assert!(start.max_abs_diff(&pure_density(cfg.pol())) < 1e-15);
    }

    #[test]
    fn baseline_joint_coherence_at_exit() {
        let cfg = config(50.0, 60.0, PolarizationState::plus());
        let rho = joint_state_inside(&cfg, 60.0).unwrap();
        let dist = FrequencyDistribution::scaled(400.0).unwrap();
        let dn = NH - NV;
        let expected =
            (kappa_of_delay(&dist, 0.0, dn * 50.0) + kappa_of_delay(&dist, 0.0, dn * 60.0)).norm()
                / 2.0;
        assert!((2.0 * rho.coherence().norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn inside_states_reject_times_past_the_exit() {
        let cfg = config(50.0, 60.0, PolarizationState::plus());
        assert!(matches!(
            joint_state_inside(&cfg, 60.5),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            path_state_inside(&cfg, Path::One, -1.0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn path_state_examples() {
        let cfg = config(50.0, 60.0, PolarizationState::plus());
        let start = path_state_inside(&cfg, Path::Zero, 0.0).unwrap();
        assert!(start.max_abs_diff(&pure_density(cfg.pol())) < 1e-15);
        let late = path_state_inside(&cfg, Path::One, 60.0).unwrap();
        assert!((2.0 * late.coherence().norm() - 0.8643305520095861).abs() < 1e-12);
        for k in 0..100 {
            let t = 0.6 * k as f64;
            let a = path_state_inside(&cfg, Path::Zero, t).unwrap();
            let b = single_path_state(cfg.pol(), cfg.window0(), cfg.dist(), t);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn interference_kappa_examples() {
        let (kh, kv) = interference_kappas(&config(60.0, 60.0, PolarizationState::plus()));
        assert_eq!((kh, kv), (2.0, 2.0));

        let (kh, kv) = interference_kappas(&config(50.0, 60.0, PolarizationState::plus()));
        assert!(kh.abs() < 1e-50 && kv.abs() < 1e-50);

        // Independent numpy evaluation of 2 exp(-x^2/2) cos(400 x), x = -0.5 n.
        let (kh, kv) = interference_kappas(&config(59.5, 60.0, PolarizationState::plus()));
        assert!((kh - -1.3522706301012803).abs() < 1e-9, "{kh}");
        assert!((kv - 0.8947724319415228).abs() < 1e-9, "{kv}");
    }

    #[test]
    fn lambda_examples() {
        let dist = FrequencyDistribution::scaled(400.0).unwrap();
        let cfg = config(60.0, 60.0, PolarizationState::plus());
        let lam = lambda_function(&cfg, 60.0);
        let expected = 2.0 * kappa_of_delay(&dist, 0.0, (NH - NV) * 60.0);
        // n_H t - n_V t and (n_H - n_V) t round differently; mu amplifies it.
        assert!((lam - expected).norm() < 1e-10);

        let base = config(50.0, 60.0, PolarizationState::plus());
        assert!(lambda_function(&base, 60.0).norm() < 1e-40);
        let of = OutputFunctions::new(&base);
        let [a, b] = of.cross_delays();
        assert!((a - -14.99).abs() < 1e-9 && (b - 15.98).abs() < 1e-9);
        // Term one's delay vanishes at T' = 14.99 / 0.009.
        let t_peak = 60.0 + 14.99 / (NH - NV);
        assert!((lambda_function(&base, t_peak).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn probability_examples() {
        let (p0, p1) = path_probabilities(&config(60.0, 60.0, PolarizationState::plus()));
        assert!((p0 - 1.0).abs() < 1e-12 && p1.abs() < 1e-12);

        let (p0, p1) = path_probabilities(&config(50.0, 60.0, PolarizationState::plus()));
        assert!((p0 - 0.5).abs() < 1e-10 && (p1 - 0.5).abs() < 1e-10);

        for pol in [PolarizationState::plus(), PolarizationState::minus()] {
            let (p0, p1) = path_probabilities(&config(59.5, 60.0, pol));
            assert!((p0 - 0.4428127252300303).abs() < 1e-9, "{p0}");
            assert!((p0 + p1 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dark_port_is_impossible() {
        let cfg = config(60.0, 60.0, PolarizationState::plus());
        let err = conditional_state_outside(&cfg, Path::One, 100.0, true).unwrap_err();
        assert!(matches!(
            err,
            Error::ImpossibleOutcome {
                port: Path::One,
                ..
            }
        ));
        let weighted = conditional_state_outside(&cfg, Path::One, 100.0, false).unwrap();
        assert!(weighted.trace().abs() < 1e-15);
    }

    #[test]
    fn dissipative_like_population_at_exit() {
        let cfg = config(59.5, 60.0, PolarizationState::plus());
        let rho = conditional_state_outside(&cfg, Path::Zero, 60.0, true).unwrap();
        assert!((rho.pop_h() - 0.183).abs() < 0.005, "{}", rho.pop_h());
        assert!((rho.pop_h() - 0.18284517725925792).abs() < 1e-9);
    }

    #[test]
    fn averaged_state_is_continuous_at_the_exit() {
        let cfg = config(50.0, 60.0, PolarizationState::plus());
        let inside = joint_state_inside(&cfg, 60.0).unwrap();
        let outside = averaged_state_outside(&cfg, 60.0).unwrap();
        assert!(inside.max_abs_diff(&outside) < 1e-15);
    }

    #[test]
    fn averaged_coherence_decays_monotonically() {
        let cfg = config(50.0, 60.0, PolarizationState::plus());
        let mut last = f64::INFINITY;
        for k in 0..2000 {
            let t = 60.0 + 2.0 * k as f64;
            let m = averaged_state_outside(&cfg, t).unwrap().coherence().norm();
            assert!(m <= last + 1e-15);
            last = m;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn joint_inside_monotone_while_both_arms_active() {
        let cfg = config(50.0, 60.0, PolarizationState::plus());
        let mut last = f64::INFINITY;
        for k in 0..=500 {
            let t = 50.0 * k as f64 / 500.0;
            let m = joint_state_inside(&cfg, t).unwrap().coherence().norm();
            assert!(m <= last + 1e-15);
            last = m;
        }
    }

    #[test]
    fn identical_arms_concatenate_media() {
        let cfg = config(60.0, 60.0, PolarizationState::plus());
        // Arm medium [0, 60] followed by the output medium from 60 onward.
        let combined = InteractionWindow::new(NH, NV, 0.0, 4060.0).unwrap();
        for t in [60.0, 75.0, 200.0, 900.0] {
            let out = conditional_state_outside(&cfg, Path::Zero, t, true).unwrap();
            let single = single_path_state(cfg.pol(), &combined, cfg.dist(), t);
            assert!(out.max_abs_diff(&single) < 1e-12);
        }
    }

    fn random_config() -> impl Strategy<Value = InterferometerConfig> {
        (
            30.0f64..70.0,
            -3.0f64..3.0,
            1.4f64..1.7,
            -0.02f64..0.02,
            0.0f64..1.0,
            -3.0f64..3.0,
            0.0f64..0.02,
        )
            .prop_map(|(t0, dt, n, dn, p, theta, dn_out)| {
                let t1 = t0 + dt;
                let exit = t0.max(t1);
                InterferometerConfig::new(
                    FrequencyDistribution::scaled(400.0).unwrap(),
                    InteractionWindow::new(n, n - dn, 0.0, t0).unwrap(),
                    InteractionWindow::new(n, n - dn, 0.0, t1).unwrap(),
                    InteractionWindow::new(n, n - dn_out, exit, exit + 3000.0).unwrap(),
                    PolarizationState::new(
                        Complex64::new(p.sqrt(), 0.0),
                        Complex64::from_polar((1.0 - p).sqrt(), 0.3),
                        theta,
                    )
                    .unwrap(),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn quantum_erasure_decomposition(cfg in random_config(), s in 0.0f64..3000.0) {
            let t = cfg.exit_time() + s;
            let avg = averaged_state_outside(&cfg, t).unwrap();
            let mut sum = DensityMatrix::from_parts(0.0, Complex64::new(0.0, 0.0), 0.0);
            for port in Path::BOTH {
                let w = conditional_state_outside(&cfg, port, t, false).unwrap();
                sum = DensityMatrix::from_matrix_unchecked(sum.matrix() + w.matrix());
            }
            prop_assert!(avg.max_abs_diff(&sum) < 1e-12);
        }

        #[test]
        fn conditional_populations_are_time_independent(cfg in random_config()) {
            for port in Path::BOTH {
                let first = conditional_state_outside(&cfg, port, cfg.exit_time(), false).unwrap();
                for k in 1..50 {
                    let t = cfg.exit_time() + 60.0 * k as f64;
                    let rho = conditional_state_outside(&cfg, port, t, false).unwrap();
                    prop_assert_eq!(rho.pop_h(), first.pop_h());
                    prop_assert_eq!(rho.pop_v(), first.pop_v());
                }
            }
        }

        #[test]
        fn output_functions_bounds(cfg in random_config(), s in 0.0f64..3000.0) {
            let of = OutputFunctions::new(&cfg);
            let t = cfg.exit_time() + s;
            prop_assert!(of.kappa_h().abs() <= 2.0 && of.kappa_v().abs() <= 2.0);
            prop_assert!(of.lambda_at(t).norm() <= 2.0 + 1e-15);
            let (p0, p1) = path_probabilities(&cfg);
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-14);
            prop_assert!((-1e-15..=1.0 + 1e-15).contains(&p0));
            for port in Path::BOTH {
                let lhs = 4.0 * of.f(port, t);
                let rhs = of.shifted_kappa(Path::Zero, t) + of.shifted_kappa(Path::One, t)
                    + port.sign() * of.lambda_at(t);
                prop_assert!((lhs - rhs).norm() < 1e-14);
            }
        }

        #[test]
        fn normalized_conditional_states_are_valid(cfg in random_config(), s in 0.0f64..3000.0) {
            let t = cfg.exit_time() + s;
            for port in Path::BOTH {
                if let Ok(rho) = conditional_state_outside(&cfg, port, t, true) {
                    let checked = DensityMatrix::new(*rho.matrix());
                    // Rounding in 1/P can push the trace a hair above one.
                    prop_assert!(checked.is_ok() || (rho.trace() - 1.0).abs() < 1e-10);
                    prop_assert!(rho.eigenvalues().0 > -1e-10);
                    let other = conditional_state_outside(&cfg.with_pol(PolarizationState::minus()), port, t, true);
                    if let (Ok(a), Ok(b)) = (conditional_state_outside(&cfg.with_pol(PolarizationState::plus()), port, t, true), other) {
                        prop_assert!(trace_distance(&a, &b).unwrap() <= 1.0);
                    }
                }
            }
        }
    }
}
