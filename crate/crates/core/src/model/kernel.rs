use std::f64::consts::PI;

use num_complex::Complex64;

use super::{FrequencyDistribution, InteractionWindow};

/// Interaction time accumulated in `window` by laboratory time `t`:
/// `clamp(t, t_start, t_stop) - t_start`.
pub fn effective_time(window: &InteractionWindow, t: f64) -> f64 {
    t.clamp(window.t_start(), window.t_stop()) - window.t_start()
}

/// Decoherence factor for a birefringent delay `x`:
/// `exp[i(theta + mu x) - (sigma x)^2 / 2]`.
///
/// This is the characteristic function of the Gaussian spectrum evaluated at
/// `x`, rotated by the initial relative phase.
pub fn kappa_of_delay(dist: &FrequencyDistribution, theta: f64, x: f64) -> Complex64 {
    let sx = dist.sigma() * x;
    Complex64::from_polar((-0.5 * sx * sx).exp(), theta + dist.mu() * x)
}

/// Argument of `z` in `(-pi, pi]`.
pub fn principal_phase(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}
