// SPDX-License-Identifier: Apache-2.0

//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building or analyzing a model.
#[derive(Debug, Clone, Error)]
pub enum SimError {
    /// A parameter or input failed validation before any numerics ran.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The dimer eigensystem is defective: |cosh(phi)| fell below the
    /// threshold, so the bi-orthonormal basis does not exist (exceptional
    /// point, e.g. Gamma = 2V at Delta = 0).
    #[error("degenerate eigensystem: |cosh(phi)| = {cosh_abs:.3e} < {threshold:.1e}")]
    Degenerate { cosh_abs: f64, threshold: f64 },

    /// The Liouvillian eigenvector matrix is numerically singular; spectral
    /// propagation is unreliable and callers should fall back to the ODE path.
    #[error("defective Liouvillian: eigenvector condition estimate {cond:.3e} exceeds {limit:.1e}")]
    DefectiveLiouvillian { cond: f64, limit: f64 },

    /// The survival probability never crossed the threshold on the scanned
    /// horizon (no trap, or a conserved mode keeps it from decaying).
    #[error("no crossing of threshold {threshold:.6e} up to t = {horizon:.3e}")]
    NoCrossing { threshold: f64, horizon: f64 },

    /// All Liouvillian eigenvalues are conserved modes within tolerance, so no
    /// decay rate exists.
    #[error("no decaying mode: all eigenvalue real parts within {threshold:.1e} of zero")]
    NoDecayingMode { threshold: f64 },

    /// Linear solve hit a singular system (typically: no trap drains the
    /// initial state, so the resolvent does not exist at zero).
    #[error("singular linear system: {0}")]
    SingularSystem(String),

    /// The adaptive integrator could not hold the tolerance with any
    /// representable step size.
    #[error("step size underflow at t = {t:.6e}")]
    StepSizeUnderflow { t: f64 },

    /// An unexpected failure in the dense linear algebra backend.
    #[error("linear algebra error: {0}")]
    Linalg(String),
}

impl SimError {
    /// Short machine-readable tag, stable across releases. The CLI prints it
    /// as `error=<kind>`.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::InvalidParameter(_) => "invalid_parameter",
            SimError::Degenerate { .. } => "degenerate",
            SimError::DefectiveLiouvillian { .. } => "defective",
            SimError::NoCrossing { .. } => "no_crossing",
            SimError::NoDecayingMode { .. } => "no_decay",
            SimError::SingularSystem(_) => "singular",
            SimError::StepSizeUnderflow { .. } => "step_underflow",
            SimError::Linalg(_) => "linalg",
        }
    }

    /// True for errors raised by input validation (CLI exit code 2); all
    /// other variants are numerical failures (exit code 3).
    pub fn is_validation(&self) -> bool {
        matches!(self, SimError::InvalidParameter(_))
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
