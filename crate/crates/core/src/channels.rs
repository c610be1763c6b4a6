//! Dephasing of the polarization on a single path through one birefringent
//! medium.

use num_complex::Complex64;

use crate::model::{
    kappa_of_delay, DensityMatrix, FrequencyDistribution, InteractionWindow, PolarizationState,
};

/// Decoherence function `kappa(t)` of one path: the coherence multiplier after
/// the birefringent delay `delta_n * T(t)`.
pub fn single_path_kappa(
    window: &InteractionWindow,
    dist: &FrequencyDistribution,
    theta: f64,
    t: f64,
) -> Complex64 {
    kappa_of_delay(dist, theta, window.delta_n() * window.effective_time(t))
}

/// Polarization state at time `t` after dephasing in `window`. Populations
/// never change.
pub fn single_path_state(
    pol: &PolarizationState,
    window: &InteractionWindow,
    dist: &FrequencyDistribution,
    t: f64,
) -> DensityMatrix {
    let kappa = single_path_kappa(window, dist, pol.theta(), t);
    DensityMatrix::from_parts(
        pol.prob_h(),
        pol.coherence_amplitude() * kappa,
        pol.prob_v(),
    )
}
