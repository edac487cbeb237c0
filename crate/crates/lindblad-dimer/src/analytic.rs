// SPDX-License-Identifier: Apache-2.0

//! Closed-form survival probabilities for the dimer without dephasing, and
//! their limits. These are independent oracles for the numerical propagators:
//! they are evaluated in complex arithmetic exactly as derived from the
//! non-Hermitian eigensystem, with no algebraic reshuffling.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::model::{DimerParams, DEGENERACY_THRESHOLD};

/// Auxiliary quantities entering the dephasing-free survival formula.
///
/// `y = 4V^2 - Gamma^2 + Delta^2`, `r = sqrt(y^2 + 4 Gamma^2 Delta^2)` and the
/// complex frequency `f = (sqrt((r-y)/2) + i sqrt((r+y)/2)) / 2`. Both square
/// root arguments are non-negative by construction. `phi_gamma =
/// arcsin(Gamma/2V)` exists only below the overdamping threshold Gamma = 2V.
#[derive(Debug, Clone)]
pub struct ClosedFormContext {
    pub params: DimerParams,
    pub r: f64,
    pub y: f64,
    pub f: Complex64,
    pub phi_delta: Complex64,
    pub phi_gamma: Option<f64>,
}

impl ClosedFormContext {
    /// Precomputes the formula ingredients; the dephasing rate in `params` is
    /// ignored (the closed form is the lambda = 0 solution).
    pub fn new(params: &DimerParams) -> Result<Self> {
        let (delta, gamma, v) = (params.delta, params.gamma, params.v);
        // phi_delta = arcsinh((Delta - i*Gamma)/2V) with Delta = |E1 - E2|
        let phi_delta = Complex64::new(delta / (2.0 * v), -gamma / (2.0 * v)).asinh();
        let cosh_abs = phi_delta.cosh().norm();
        if cosh_abs < DEGENERACY_THRESHOLD {
            return Err(SimError::Degenerate { cosh_abs, threshold: DEGENERACY_THRESHOLD });
        }
        let y = 4.0 * v * v - gamma * gamma + delta * delta;
        let r = (y * y + 4.0 * gamma * gamma * delta * delta).sqrt();
        let f = Complex64::new(((r - y) / 2.0).max(0.0).sqrt(), ((r + y) / 2.0).max(0.0).sqrt())
            / 2.0;
        let phi_gamma =
            (gamma <= 2.0 * v).then(|| (gamma / (2.0 * v)).asin());
        Ok(Self { params: *params, r, y, f, phi_delta, phi_gamma })
    }

    /// Survival probability at time t for lambda = 0:
    ///
    /// ```text
    /// Pi(t) = e^{-Gamma t}/|cosh phi|^2 * ( |cosh(t f + phi)|^2 + |sinh(t f)|^2 )
    /// ```
    pub fn survival(&self, t: f64) -> f64 {
        let tf = self.f * t;
        let bracket = (tf + self.phi_delta).cosh().norm_sqr() + tf.sinh().norm_sqr();
        (-self.params.gamma * t).exp() / self.phi_delta.cosh().norm_sqr() * bracket
    }
}

/// Dephasing-free survival probability of the dimer (closed form).
pub fn pi_lambda0(params: &DimerParams, t: f64) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(SimError::InvalidParameter(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(ClosedFormContext::new(params)?.survival(t))
}

/// The Delta -> 0 limit:
///
/// ```text
/// Pi(t) = e^{-Gamma t}/cos^2(phi) * ( cos^2(V t cos phi - phi) + sin^2(V t cos phi) )
/// ```
///
/// with `phi = arcsin(Gamma/2V)`; only defined below the overdamping
/// threshold Gamma = 2V.
pub fn pi_delta0(v: f64, gamma: f64, t: f64) -> Result<f64> {
    if !(v > 0.0) || gamma < 0.0 || !gamma.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "need v > 0 and gamma >= 0, got v = {v}, gamma = {gamma}"
        )));
    }
    if t < 0.0 || !t.is_finite() {
        return Err(SimError::InvalidParameter(format!("time must be finite and >= 0, got {t}")));
    }
    if gamma > 2.0 * v {
        return Err(SimError::InvalidParameter(format!(
            "overdamped: gamma = {gamma} exceeds 2V = {}; the oscillatory closed form does not apply",
            2.0 * v
        )));
    }
    let phi = (gamma / (2.0 * v)).asin();
    let cos_phi = phi.cos();
    if cos_phi < DEGENERACY_THRESHOLD {
        return Err(SimError::Degenerate { cosh_abs: cos_phi, threshold: DEGENERACY_THRESHOLD });
    }
    let w = v * t * cos_phi;
    let bracket = (w - phi).cos().powi(2) + w.sin().powi(2);
    Ok((-gamma * t).exp() / (cos_phi * cos_phi) * bracket)
}

/// Weak-coupling approximation `Pi(t) ~ e^{-Gamma t}`, valid for
/// Gamma << V and lambda << V at not too short times (t >= 2/V as the
/// working cutoff); not enforced here.
pub fn pi_weak_coupling(gamma: f64, t: f64) -> f64 {
    (-gamma * t).exp()
}
