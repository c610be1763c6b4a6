use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64;

use super::PolarizationState;
use crate::error::{Error, Result};

/// Eigenvalue floor for positive semidefiniteness.
pub const PSD_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
/// How far from one a trace may be and still count as normalized.
const UNIT_TRACE_TOL: f64 = 1e-10;

/// Polarization density matrix in the `{H, V}` basis.
///
/// Conditional states may be kept unnormalized, so the trace is only required
/// to lie in `[0, 1]`.
#[derive(Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

impl DensityMatrix {
    /// Validating constructor.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let herm_err = (m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if !herm_err.is_finite() || herm_err > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm_err:e})"
            )));
        }
        let rho = Self(m);
        let (lo, _) = rho.eigenvalues();
        if lo < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        let tr = rho.trace();
        if tr > 1.0 + PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} exceeds one"
            )));
        }
        Ok(rho)
    }

    /// Builds `[[hh, hv], [conj(hv), vv]]` without validation. Used by the
    /// closed-form evolutions, whose outputs are valid by construction.
    pub(crate) fn from_parts(hh: f64, hv: Complex64, vv: f64) -> Self {
        Self(Matrix2::new(
            Complex64::new(hh, 0.0),
            hv,
            hv.conj(),
            Complex64::new(vv, 0.0),
        ))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix2<Complex64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// `<H|rho|H>`
    pub fn pop_h(&self) -> f64 {
        self.0[(0, 0)].re
    }

    /// `<V|rho|V>`
    pub fn pop_v(&self) -> f64 {
        self.0[(1, 1)].re
    }

    /// `<H|rho|V>`
    pub fn coherence(&self) -> Complex64 {
        self.0[(0, 1)]
    }

    pub fn trace(&self) -> f64 {
        self.pop_h() + self.pop_v()
    }

    /// Eigenvalues `(low, high)` of the Hermitian part.
    pub fn eigenvalues(&self) -> (f64, f64) {
        hermitian_eigenvalues(&self.0)
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= UNIT_TRACE_TOL
    }

    /// Divides by the trace. Returns `None` for a zero matrix.
    pub fn normalized(&self) -> Option<Self> {
        let tr = self.trace();
        (tr > 0.0).then(|| Self(self.0.unscale(tr)))
    }

    pub(crate) fn scaled(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.0 - other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DensityMatrix[[{}, {}], [{}, {}]]",
            self.0[(0, 0)],
            self.0[(0, 1)],
            self.0[(1, 0)],
            self.0[(1, 1)]
        )
    }
}

fn hermitian_eigenvalues(m: &Matrix2<Complex64>) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_gap = (0.5 * (a - d)).hypot(b.norm());
    (mean - half_gap, mean + half_gap)
}

/// Rank-one projector onto the polarization state, with the relative phase
/// `theta` carried on the coherence.
pub fn pure_density(pol: &PolarizationState) -> DensityMatrix {
    let hv = pol.coherence_amplitude() * Complex64::from_polar(1.0, pol.theta());
    DensityMatrix::from_parts(pol.prob_h(), hv, pol.prob_v())
}

/// `D(a, b) = (|l1| + |l2|) / 2` for the eigenvalues `l` of `a - b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    for rho in [a, b] {
        if !rho.is_normalized() {
            return Err(Error::NotNormalized { trace: rho.trace() });
        }
    }
    let (lo, hi) = hermitian_eigenvalues(&(a.0 - b.0));
    Ok((0.5 * (lo.abs() + hi.abs())).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pure_density_examples() {
        let plus = pure_density(&PolarizationState::plus());
        for z in plus.matrix().iter() {
            assert!((z - c(0.5, 0.0)).norm() < 1e-15);
        }

        let h = pure_density(&PolarizationState::horizontal());
        assert_eq!(h.pop_h(), 1.0);
        assert_eq!(h.pop_v(), 0.0);
        assert_eq!(h.coherence(), c(0.0, 0.0));

        let rotated =
            PolarizationState::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0), PI).unwrap();
        let rho = pure_density(&rotated);
        assert!((rho.coherence() - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn non_normalized_polarization_is_rejected() {
        let err = PolarizationState::new(c(1.0, 0.0), c(0.1, 0.0), 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidPolarization(_)));
    }

    #[test]
    fn trace_distance_examples() {
        let plus = pure_density(&PolarizationState::plus());
        assert_eq!(trace_distance(&plus, &plus).unwrap(), 0.0);

        let h = pure_density(&PolarizationState::horizontal());
        let v = pure_density(&PolarizationState::vertical());
        assert!((trace_distance(&h, &v).unwrap() - 1.0).abs() < 1e-15);

        // Dephased |+> and |-> with coherence kappa differ by |kappa|.
        let kappa = Complex64::from_polar(0.37, 1.2);
        let a = DensityMatrix::from_parts(0.5, 0.5 * kappa, 0.5);
        let b = DensityMatrix::from_parts(0.5, -0.5 * kappa, 0.5);
        assert!((trace_distance(&a, &b).unwrap() - 0.37).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_rejects_unnormalized() {
        let half = DensityMatrix::from_parts(0.25, c(0.0, 0.0), 0.25);
        let h = pure_density(&PolarizationState::horizontal());
        assert!(matches!(
            trace_distance(&half, &h),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn validation_catches_bad_matrices() {
        let not_herm = Matrix2::new(c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0));
        assert!(DensityMatrix::new(not_herm).is_err());
        let negative = Matrix2::new(c(0.5, 0.0), c(0.6, 0.0), c(0.6, 0.0), c(0.5, 0.0));
        assert!(DensityMatrix::new(negative).is_err());
        let big = Matrix2::new(c(0.8, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.8, 0.0));
        assert!(DensityMatrix::new(big).is_err());
        let sub = Matrix2::new(c(0.3, 0.0), c(0.1, 0.1), c(0.1, -0.1), c(0.2, 0.0));
        assert!(DensityMatrix::new(sub).is_ok());
    }

    fn qubit() -> impl Strategy<Value = DensityMatrix> {
        (0.0f64..1.0, 0.0f64..1.0, -PI..PI).prop_map(|(p, r, phi)| {
            let off = r * (p * (1.0 - p)).sqrt();
            DensityMatrix::from_parts(p, Complex64::from_polar(off, phi), 1.0 - p)
        })
    }

    proptest! {
        #[test]
        fn trace_distance_is_a_metric(a in qubit(), b in qubit(), c in qubit()) {
            let ab = trace_distance(&a, &b).unwrap();
            let ba = trace_distance(&b, &a).unwrap();
            let bc = trace_distance(&b, &c).unwrap();
            let ac = trace_distance(&a, &c).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        }
    }
}
