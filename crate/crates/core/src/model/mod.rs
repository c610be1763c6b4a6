//! Domain types shared by every other module: the frequency spectrum of the
//! photon, its polarization state, the birefringent interaction windows and
//! the full interferometer description.
//!
//! Times are measured in units of `1/sigma` and frequencies in units of
//! `sigma`; the presets always use `sigma = 1`.

mod density;
mod kernel;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use density::{pure_density, trace_distance, DensityMatrix, PSD_TOL};
pub use kernel::{effective_time, kappa_of_delay, principal_phase};

/// Tolerance on `|c_h|^2 + |c_v|^2 = 1`.
pub const NORM_TOL: f64 = 1e-12;

/// One of the two arms inside the interferometer, or one of the two output
/// ports after the second beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Path {
    Zero,
    One,
}

impl Path {
    pub const BOTH: [Path; 2] = [Path::Zero, Path::One];

    pub fn index(self) -> usize {
        match self {
            Path::Zero => 0,
            Path::One => 1,
        }
    }

    /// `(-1)^j`
    pub fn sign(self) -> f64 {
        match self {
            Path::Zero => 1.0,
            Path::One => -1.0,
        }
    }

    pub fn from_index(j: usize) -> Option<Path> {
        match j {
            0 => Some(Path::Zero),
            1 => Some(Path::One),
            _ => None,
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Gaussian frequency spectrum `|g(w)|^2` of the photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyDistribution {
    mu: f64,
    sigma: f64,
}

impl FrequencyDistribution {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "sigma must be finite and positive, got {sigma}"
            )));
        }
        if !(mu / sigma).is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "mu/sigma must be finite, got mu = {mu}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// Spectrum in `sigma` units: mean `mu_over_sigma`, unit width.
    pub fn scaled(mu_over_sigma: f64) -> Result<Self> {
        Self::new(mu_over_sigma, 1.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Probability density `|g(w)|^2`.
    pub fn density(&self, omega: f64) -> f64 {
        let z = (omega - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (std::f64::consts::TAU.sqrt() * self.sigma)
    }
}

/// Polarization qubit `c_h |H> + c_v |V>` with relative phase
/// `theta = theta_H - theta_V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    c_h: Complex64,
    c_v: Complex64,
    theta: f64,
}

impl PolarizationState {
    pub fn new(c_h: Complex64, c_v: Complex64, theta: f64) -> Result<Self> {
        let norm = c_h.norm_sqr() + c_v.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidPolarization(format!(
                "|c_h|^2 + |c_v|^2 = {norm}, expected 1"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidPolarization("theta must be finite".into()));
        }
        Ok(Self { c_h, c_v, theta })
    }

    pub fn horizontal() -> Self {
        Self {
            c_h: Complex64::new(1.0, 0.0),
            c_v: Complex64::new(0.0, 0.0),
            theta: 0.0,
        }
    }

    pub fn vertical() -> Self {
        Self {
            c_h: Complex64::new(0.0, 0.0),
            c_v: Complex64::new(1.0, 0.0),
            theta: 0.0,
        }
    }

    /// `|+> = (|H> + |V>)/sqrt(2)`
    pub fn plus() -> Self {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            c_h: a,
            c_v: a,
            theta: 0.0,
        }
    }

    /// `|-> = (|H> - |V>)/sqrt(2)`
    pub fn minus() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            c_h: Complex64::new(a, 0.0),
            c_v: Complex64::new(-a, 0.0),
            theta: 0.0,
        }
    }

    pub fn c_h(&self) -> Complex64 {
        self.c_h
    }

    pub fn c_v(&self) -> Complex64 {
        self.c_v
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn prob_h(&self) -> f64 {
        self.c_h.norm_sqr()
    }

    pub fn prob_v(&self) -> f64 {
        self.c_v.norm_sqr()
    }

    /// `c_h conj(c_v)`, the coherence prefactor without the phase `theta`.
    pub fn coherence_amplitude(&self) -> Complex64 {
        self.c_h * self.c_v.conj()
    }
}

/// A birefringent medium active on one path from `t_start` to `t_stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionWindow {
    n_h: f64,
    n_v: f64,
    t_start: f64,
    t_stop: f64,
}

impl InteractionWindow {
    pub fn new(n_h: f64, n_v: f64, t_start: f64, t_stop: f64) -> Result<Self> {
        if !(n_h.is_finite() && n_v.is_finite()) {
            return Err(Error::InvalidWindow(
                "refractive indices must be finite".into(),
            ));
        }
        if !(t_start.is_finite() && t_stop.is_finite()) {
            return Err(Error::InvalidWindow("window times must be finite".into()));
        }
        if t_start < 0.0 {
            return Err(Error::InvalidWindow(format!(
                "t_start = {t_start} is negative"
            )));
        }
        if t_start > t_stop {
            return Err(Error::InvalidWindow(format!(
                "t_start = {t_start} exceeds t_stop = {t_stop}"
            )));
        }
        Ok(Self {
            n_h,
            n_v,
            t_start,
            t_stop,
        })
    }

    pub fn n_h(&self) -> f64 {
        self.n_h
    }

    pub fn n_v(&self) -> f64 {
        self.n_v
    }

    /// Refractive index seen by polarization `H` (`true`) or `V` (`false`).
    pub fn index(&self, horizontal: bool) -> f64 {
        if horizontal {
            self.n_h
        } else {
            self.n_v
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_stop(&self) -> f64 {
        self.t_stop
    }

    /// Birefringence `n_h - n_v`.
    pub fn delta_n(&self) -> f64 {
        self.n_h - self.n_v
    }

    pub fn duration(&self) -> f64 {
        self.t_stop - self.t_start
    }

    /// Total interaction time accumulated up to laboratory time `t`.
    pub fn effective_time(&self, t: f64) -> f64 {
        effective_time(self, t)
    }
}

/// Full description of the open-system interferometer: spectrum, the two
/// inner arms, the coupling shared by both output paths and the initial
/// polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerConfig {
    pub(crate) dist: FrequencyDistribution,
    pub(crate) window0: InteractionWindow,
    pub(crate) window1: InteractionWindow,
    pub(crate) window_out: InteractionWindow,
    pub(crate) pol: PolarizationState,
}

impl InterferometerConfig {
    pub fn new(
        dist: FrequencyDistribution,
        window0: InteractionWindow,
        window1: InteractionWindow,
        window_out: InteractionWindow,
        pol: PolarizationState,
    ) -> Result<Self> {
        let exit = window0.t_stop().max(window1.t_stop());
        if window_out.t_start() < exit {
            return Err(Error::InvalidConfig(format!(
                "output window starts at {} before the arm windows close at {exit}",
                window_out.t_start()
            )));
        }
        Ok(Self {
            dist,
            window0,
            window1,
            window_out,
            pol,
        })
    }

    pub fn dist(&self) -> &FrequencyDistribution {
        &self.dist
    }

    pub fn window(&self, arm: Path) -> &InteractionWindow {
        match arm {
            Path::Zero => &self.window0,
            Path::One => &self.window1,
        }
    }

    pub fn window0(&self) -> &InteractionWindow {
        &self.window0
    }

    pub fn window1(&self) -> &InteractionWindow {
        &self.window1
    }

    pub fn window_out(&self) -> &InteractionWindow {
        &self.window_out
    }

    pub fn pol(&self) -> &PolarizationState {
        &self.pol
    }

    /// Same experiment with a different input polarization.
    pub fn with_pol(&self, pol: PolarizationState) -> Self {
        Self { pol, ..*self }
    }

    /// Laboratory time at which the photon reaches the second beam splitter
    /// in the inside-only picture: the opening of the output window.
    pub fn exit_time(&self) -> f64 {
        self.window_out.t_start()
    }

    /// Total interaction time `T'(t)` on the output paths.
    pub fn output_time(&self, t: f64) -> f64 {
        self.window_out.effective_time(t)
    }
}
