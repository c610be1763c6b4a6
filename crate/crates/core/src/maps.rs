//! Kraus representations of the port-conditioned output dynamics, their
//! intermediate propagators, and complete-positivity checks through the Choi
//! matrix.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

use crate::analysis::RISE_TOL;
use crate::error::{Error, Result};
use crate::interferometer::{OutputFunctions, DARK_PORT_TOL};
use crate::model::{InterferometerConfig, Path};

/// `|f|` below which the Kraus phase `f/|f|` is considered undefined.
pub const ZERO_COHERENCE_TOL: f64 = 1e-14;
/// Choi eigenvalue floor used when deciding complete positivity.
pub const CHOI_TOL: f64 = 1e-10;

type M2 = Matrix2<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn diag(a: Complex64, b: Complex64) -> M2 {
    M2::new(a, c(0.0), c(0.0), b)
}

fn hermitian_min_max(m: &M2) -> (f64, f64) {
    let ev = m.symmetric_eigenvalues();
    (ev[0].min(ev[1]), ev[0].max(ev[1]))
}

/// Anything with a Choi matrix: a qubit-to-qubit linear map.
pub trait QubitMap {
    fn choi(&self) -> ChoiMatrix;
}

/// `sum_ij |i><j| (x) E(|i><j|)` in the basis `|k, i>` with row index
/// `2k + i`, i.e. `(E (x) 1)(|Omega><Omega|)` for unnormalized `|Omega>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiMatrix(Matrix4<Complex64>);

impl ChoiMatrix {
    pub fn new(m: Matrix4<Complex64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let ev = self.0.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// The transposition map, whose Choi matrix is the swap operator.
    pub fn transposition() -> Self {
        let mut m = Matrix4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m[(2 * i + j, 2 * j + i)] = c(1.0);
            }
        }
        Self(m)
    }
}

impl QubitMap for ChoiMatrix {
    fn choi(&self) -> ChoiMatrix {
        *self
    }
}

/// How `1 - sum K^dag K` behaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceCharacter {
    TracePreserving,
    TraceNonIncreasing,
    Invalid,
}

/// A qubit map `rho -> sum_i w_i A_i rho A_i^dag`.
///
/// With all weights non-negative this is a Kraus-presented operation with
/// Kraus operators `sqrt(w_i) A_i`. A negative weight appears when a
/// propagator is continued past the point where it stops being completely
/// positive; such an operation can still be applied and inspected through
/// its Choi matrix, but has no Kraus list.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperation {
    terms: Vec<(f64, M2)>,
}

impl QuantumOperation {
    pub fn from_kraus(kraus: Vec<M2>) -> Self {
        Self {
            terms: kraus.into_iter().map(|k| (1.0, k)).collect(),
        }
    }

    pub fn from_weighted(terms: Vec<(f64, M2)>) -> Self {
        Self { terms }
    }

    pub fn identity() -> Self {
        Self::from_kraus(vec![M2::identity()])
    }

    pub fn terms(&self) -> &[(f64, M2)] {
        &self.terms
    }

    /// Kraus operators, or `None` if some weight is negative.
    pub fn kraus(&self) -> Option<Vec<M2>> {
        self.terms
            .iter()
            .map(|(w, a)| (*w >= 0.0).then(|| a.scale(w.sqrt())))
            .collect()
    }

    /// `sum_i w_i A_i^dag A_i`
    pub fn effect(&self) -> M2 {
        self.terms
            .iter()
            .map(|(w, a)| (a.adjoint() * a).scale(*w))
            .sum()
    }

    /// `1 - sum_i K_i^dag K_i`
    pub fn completeness_deficiency(&self) -> M2 {
        M2::identity() - self.effect()
    }

    pub fn apply(&self, rho: &M2) -> M2 {
        self.terms
            .iter()
            .map(|(w, a)| (a * rho * a.adjoint()).scale(*w))
            .sum()
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &QuantumOperation) -> QuantumOperation {
        let mut terms = Vec::with_capacity(self.terms.len() * first.terms.len());
        for (w2, a2) in &self.terms {
            for (w1, a1) in &first.terms {
                terms.push((w2 * w1, a2 * a1));
            }
        }
        Self { terms }
    }

    pub fn scaled(&self, s: f64) -> QuantumOperation {
        Self {
            terms: self.terms.iter().map(|(w, a)| (w * s * s, *a)).collect(),
        }
    }
}

impl QubitMap for QuantumOperation {
    fn choi(&self) -> ChoiMatrix {
        let mut m = Matrix4::zeros();
        for (w, a) in &self.terms {
            let v = Vector4::new(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
            m += (v * v.adjoint()).scale(*w);
        }
        ChoiMatrix(m)
    }
}

/// Choi-matrix test: minimal eigenvalue at least `-tol`.
pub fn is_completely_positive(map: &impl QubitMap, tol: f64) -> bool {
    map.choi().min_eigenvalue() >= -tol
}

/// Classifies the completeness deficiency `1 - sum K^dag K` with a `1e-10`
/// tolerance.
pub fn trace_character(op: &QuantumOperation) -> TraceCharacter {
    let (lo, hi) = hermitian_min_max(&op.completeness_deficiency());
    if lo < -CHOI_TOL {
        TraceCharacter::Invalid
    } else if hi.abs() <= CHOI_TOL && lo.abs() <= CHOI_TOL {
        TraceCharacter::TracePreserving
    } else {
        TraceCharacter::TraceNonIncreasing
    }
}

/// Kraus operation mapping the initial polarization state to the
/// unnormalized state on output `port` at time `t`.
pub fn kraus_conditional(
    cfg: &InterferometerConfig,
    port: Path,
    t: f64,
) -> Result<QuantumOperation> {
    kraus_conditional_with(&OutputFunctions::new(cfg), port, t)
}

pub fn kraus_conditional_with(
    of: &OutputFunctions,
    port: Path,
    t: f64,
) -> Result<QuantumOperation> {
    // The initial coherence already carries e^{i theta}.
    let f = of.f(port, t) * Complex64::from_polar(1.0, -of.config().pol().theta());
    let modulus = f.norm();
    let h = of.h(port).max(0.0);
    let v = of.v(port).max(0.0);
    let s = (h * v).sqrt();
    // |f| <= sqrt(hv) exactly, so a dark port leaves only rounding in f.
    if modulus < ZERO_COHERENCE_TOL || s < ZERO_COHERENCE_TOL {
        return Err(Error::ZeroCoherenceFactor { t, modulus });
    }
    let phase = f / modulus;
    let plus = (s + modulus) / (2.0 * s);
    let minus = ((s - modulus) / (2.0 * s)).max(0.0);
    let a = |sign: f64| diag(phase * (sign * h.sqrt()), c(v.sqrt()));
    Ok(QuantumOperation::from_weighted(vec![
        (plus, a(1.0)),
        (minus, a(-1.0)),
    ]))
}

/// Intermediate propagator `V(t2, t1)` on output `port`. Its weights are
/// `(1 +- |f(t2)|/|f(t1)|)/2`, so the second one turns negative exactly when
/// the coherence factor grows.
pub fn propagator(
    cfg: &InterferometerConfig,
    port: Path,
    t1: f64,
    t2: f64,
) -> Result<QuantumOperation> {
    propagator_with(&OutputFunctions::new(cfg), port, t1, t2)
}

pub fn propagator_with(
    of: &OutputFunctions,
    port: Path,
    t1: f64,
    t2: f64,
) -> Result<QuantumOperation> {
    if t2 < t1 {
        return Err(Error::OutOfRange {
            t: t2,
            lo: t1,
            hi: f64::INFINITY,
        });
    }
    let f1 = of.f(port, t1);
    let f2 = of.f(port, t2);
    if f1.norm() < ZERO_COHERENCE_TOL {
        return Err(Error::ZeroCoherenceFactor {
            t: t1,
            modulus: f1.norm(),
        });
    }
    let ratio = f2.norm() / f1.norm();
    let phase = if f2.norm() < ZERO_COHERENCE_TOL {
        c(1.0)
    } else {
        (f2 / f1) / ratio
    };
    let a = |sign: f64| diag(phase * sign, c(1.0));
    Ok(QuantumOperation::from_weighted(vec![
        ((1.0 + ratio) / 2.0, a(1.0)),
        ((1.0 - ratio) / 2.0, a(-1.0)),
    ]))
}

/// Maximal runs of grid segments on which the propagator of `port` fails
/// the Choi test, returned as `(t_lo, t_hi)` in time order.
///
/// The Choi floor of each segment is `max(1e-10, RISE_TOL * P / |f(t1)|)`,
/// which is the trace-distance rise threshold expressed in units of the
/// propagator's Choi spectrum.
pub fn divisibility_scan(
    cfg: &InterferometerConfig,
    port: Path,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(
            "time grid must be strictly increasing".into(),
        ));
    }
    let of = OutputFunctions::new(cfg);
    let p = of.probability(port);
    if p < DARK_PORT_TOL {
        return Ok(Vec::new());
    }
    let broken: Vec<bool> = grid
        .windows(2)
        .map(|w| {
            let f1 = of.f(port, w[0]).norm();
            match propagator_with(&of, port, w[0], w[1]) {
                Ok(v) => {
                    let tol = CHOI_TOL.max(RISE_TOL * p / f1);
                    !is_completely_positive(&v, tol)
                }
                Err(_) => (of.f(port, w[1]).norm() - f1) / p > RISE_TOL,
            }
        })
        .collect();
    Ok(runs(grid, &broken))
}

/// Merges consecutive flagged segments of `grid` into `(t_lo, t_hi)` pairs.
pub(crate) fn runs(grid: &[f64], flagged: &[bool]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, &on) in flagged.iter().enumerate() {
        match (on, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((grid[s], grid[k]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((grid[s], grid[flagged.len()]));
    }
    out
}
