//! Realignment and PPT separability tests.
//!
//! Both are one-sided: a verdict of "entangled" is a certificate, an
//! undetected state may still be entangled.

use std::fmt;

use crate::linalg;
use crate::states::DensityMatrix;

/// Margin by which a diagnostic must cross its threshold to count as detection.
pub const DECISION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Realignment,
    PartialTranspose,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Realignment => f.write_str("realignment"),
            Criterion::PartialTranspose => f.write_str("ppt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub criterion: Criterion,
    /// Trace norm of the rearranged state.
    pub value: f64,
    pub threshold: f64,
    pub entangled: bool,
    /// Smallest eigenvalue of `ρ^{T_A}`; only reported by the PPT test.
    pub min_eigenvalue: Option<f64>,
}

impl CriterionResult {
    /// Signed excess `value − threshold`; positive means detected.
    pub fn excess(&self) -> f64 {
        self.value - self.threshold
    }
}

/// `‖R(ρ)‖ > 1` certifies entanglement.
pub fn realignment_check(rho: &DensityMatrix) -> CriterionResult {
    let value = linalg::trace_norm(&rho.realigned());
    CriterionResult {
        criterion: Criterion::Realignment,
        value,
        threshold: 1.0,
        entangled: value > 1.0 + DECISION_TOL,
        min_eigenvalue: None,
    }
}

/// A negative eigenvalue of `ρ^{T_A}` (equivalently `‖ρ^{T_A}‖ > 1`)
/// certifies entanglement.
pub fn ppt_check(rho: &DensityMatrix) -> CriterionResult {
    let pt = rho.partial_transpose();
    // ρ^{T_A} is Hermitian, so its trace norm is Σ|λ|
    let eig = linalg::eigenvalues_symmetrized(&pt);
    let value = eig.iter().map(|x| x.abs()).sum();
    let lam = eig[0];
    CriterionResult {
        criterion: Criterion::PartialTranspose,
        value,
        threshold: 1.0,
        entangled: lam < -DECISION_TOL,
        min_eigenvalue: Some(lam),
    }
}
