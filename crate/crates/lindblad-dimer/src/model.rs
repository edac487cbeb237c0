// SPDX-License-Identifier: Apache-2.0

//! Model types: dimer parameters, trap networks, density matrices, and the
//! analytic eigensystem of the non-Hermitian dimer Hamiltonian.
//!
//! The dimer Hamiltonian (in units of the inter-node coupling V, hbar = 1) is
//!
//! ```text
//!         | E1    -V        |
//!   H_S = |                 |  =  H_0 - i * Gamma |2><2|
//!         | -V    E2 - i*G  |
//! ```
//!
//! with node 1 carrying the initial excitation and node 2 acting as the trap.
//! The anti-Hermitian part drains probability, so eigenvalues are complex and
//! the eigenbasis is bi-orthonormal rather than orthonormal.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Result, SimError};

/// Absolute tolerance for Hermiticity checks on density matrices.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Absolute tolerance for symmetry of the real coupling matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Below this value of |cosh(phi)| the dimer eigensystem is treated as
/// degenerate (exceptional point).
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Which node sits higher in energy when the offset Delta = |E1 - E2| > 0.
///
/// Observables of this model (survival probability, lifetimes) are invariant
/// under the flip; only labels such as eigenvalue imaginary parts change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaSign {
    /// E2 = E1 - Delta: the initial node is the higher-energy node.
    #[default]
    Node1High,
    /// E2 = E1 + Delta: the trap node is the higher-energy node.
    Node2High,
}

/// Scalar knobs of the dimer model. All energies are in units of V, times in
/// units of 1/V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerParams {
    /// On-site energy of node 1 (the initial node).
    pub e1: f64,
    /// Energy offset Delta = |E1 - E2| >= 0.
    pub delta: f64,
    /// Inter-node coupling V > 0. Set to 1 to fix units.
    pub v: f64,
    /// Trap rate Gamma >= 0 on node 2.
    pub gamma: f64,
    /// Dephasing rate lambda >= 0.
    pub lambda: f64,
}

impl DimerParams {
    pub fn new(e1: f64, delta: f64, v: f64, gamma: f64, lambda: f64) -> Result<Self> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "coupling v must be positive and finite, got {v}"
            )));
        }
        for (name, val) in [("e1", e1), ("delta", delta), ("gamma", gamma), ("lambda", lambda)] {
            if !val.is_finite() {
                return Err(SimError::InvalidParameter(format!("{name} must be finite, got {val}")));
            }
        }
        if delta < 0.0 {
            return Err(SimError::InvalidParameter(format!("delta must be >= 0, got {delta}")));
        }
        if gamma < 0.0 {
            return Err(SimError::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
        }
        if lambda < 0.0 {
            return Err(SimError::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { e1, delta, v, gamma, lambda })
    }

    /// Non-fatal flag: gamma > 2V means the (Delta = 0) dimer is overdamped,
    /// outside the regime the lifetime analysis targets.
    pub fn overdamped(&self) -> bool {
        self.gamma > 2.0 * self.v
    }

    /// On-site energy of node 2 under the given sign convention.
    pub fn e2(&self, sign: DeltaSign) -> f64 {
        match sign {
            DeltaSign::Node1High => self.e1 - self.delta,
            DeltaSign::Node2High => self.e1 + self.delta,
        }
    }

    /// Same parameters with a different dephasing rate (scan helper).
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.e1, self.delta, self.v, self.gamma, lambda)
    }
}

/// A trapping node: probability drains out of `node` at rate `rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trap {
    /// 0-based node index.
    pub node: usize,
    /// Trap rate Gamma_m > 0.
    pub rate: f64,
}

/// An N-node network with a real symmetric coupling matrix (on-site energies
/// on the diagonal, -V_jk off the diagonal) and a set of trap nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    n: usize,
    couplings: Array2<f64>,
    traps: Vec<Trap>,
}

impl NetworkSpec {
    /// Validates symmetry, trap indices, and that at least one non-trap node
    /// remains. Zero- or negative-rate traps are rejected; use an empty trap
    /// list for trap-free evolution.
    pub fn new(couplings: Array2<f64>, traps: Vec<Trap>) -> Result<Self> {
        let n = couplings.nrows();
        if n == 0 || couplings.ncols() != n {
            return Err(SimError::InvalidParameter(format!(
                "couplings must be a square non-empty matrix, got {}x{}",
                couplings.nrows(),
                couplings.ncols()
            )));
        }
        for j in 0..n {
            for k in 0..n {
                if !couplings[[j, k]].is_finite() {
                    return Err(SimError::InvalidParameter(format!(
                        "coupling [{j},{k}] is not finite"
                    )));
                }
                if (couplings[[j, k]] - couplings[[k, j]]).abs() > SYMMETRY_TOL {
                    return Err(SimError::InvalidParameter(format!(
                        "couplings not symmetric at [{j},{k}]: {} vs {}",
                        couplings[[j, k]],
                        couplings[[k, j]]
                    )));
                }
            }
        }
        let mut seen = vec![false; n];
        for trap in &traps {
            if trap.node >= n {
                return Err(SimError::InvalidParameter(format!(
                    "trap node {} out of range for n = {n}",
                    trap.node
                )));
            }
            if !(trap.rate > 0.0) || !trap.rate.is_finite() {
                return Err(SimError::InvalidParameter(format!(
                    "trap rate must be positive and finite, got {} at node {}",
                    trap.rate, trap.node
                )));
            }
            seen[trap.node] = true;
        }
        if seen.iter().filter(|&&s| s).count() == n {
            return Err(SimError::InvalidParameter(
                "every node is a trap; at least one non-trap initial node is required".into(),
            ));
        }
        Ok(Self { n, couplings, traps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &Array2<f64> {
        &self.couplings
    }

    pub fn traps(&self) -> &[Trap] {
        &self.traps
    }

    /// The trap-free network Hamiltonian H_0 as a complex matrix.
    pub fn hamiltonian(&self) -> Array2<Complex64> {
        self.couplings.mapv(|x| Complex64::new(x, 0.0))
    }

    /// Diagonal of the trap operator Gamma = sum_m Gamma_m |m><m|.
    pub fn trap_rates(&self) -> Array1<f64> {
        let mut rates = Array1::zeros(self.n);
        for trap in &self.traps {
            rates[trap.node] += trap.rate;
        }
        rates
    }

    /// Indices of nodes that carry no trap, in ascending order. These are the
    /// admissible localized initial conditions for the survival average.
    pub fn non_trap_nodes(&self) -> Vec<usize> {
        let rates = self.trap_rates();
        (0..self.n).filter(|&j| rates[j] == 0.0).collect()
    }
}

/// Builds the two-node spec with diagonal (E1, E2), off-diagonal -V, and trap
/// set {(node 2, Gamma)} under the default convention E2 = E1 - Delta.
pub fn make_dimer(params: &DimerParams) -> NetworkSpec {
    make_dimer_with_sign(params, DeltaSign::default())
}

/// As [`make_dimer`], with an explicit offset sign convention.
pub fn make_dimer_with_sign(params: &DimerParams, sign: DeltaSign) -> NetworkSpec {
    let mut couplings = Array2::zeros((2, 2));
    couplings[[0, 0]] = params.e1;
    couplings[[1, 1]] = params.e2(sign);
    couplings[[0, 1]] = -params.v;
    couplings[[1, 0]] = -params.v;
    let traps = if params.gamma > 0.0 {
        vec![Trap { node: 1, rate: params.gamma }]
    } else {
        vec![]
    };
    NetworkSpec::new(couplings, traps).expect("validated dimer parameters always form a valid spec")
}

/// N x N complex Hermitian matrix with trace in [0, 1]; the evolving state.
///
/// Positivity is monitored, not enforced: the non-Hermitian trap term can
/// produce diagonal excursions of order 1e-8 below zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Array2<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10 absolute) and the trace bounds.
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(SimError::InvalidParameter(format!(
                "density matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let mut herm_dev: f64 = 0.0;
        for j in 0..dim {
            for k in 0..dim {
                let d = (entries[[j, k]] - entries[[k, j]].conj()).norm();
                herm_dev = herm_dev.max(d);
            }
        }
        if herm_dev > HERMITICITY_TOL {
            return Err(SimError::InvalidParameter(format!(
                "density matrix not Hermitian: max |rho - rho^dag| = {herm_dev:.3e}"
            )));
        }
        let tr: Complex64 = (0..dim).map(|j| entries[[j, j]]).sum();
        if tr.im.abs() > HERMITICITY_TOL || tr.re < -HERMITICITY_TOL || tr.re > 1.0 + HERMITICITY_TOL {
            return Err(SimError::InvalidParameter(format!(
                "density matrix trace {tr} outside [0, 1]"
            )));
        }
        Ok(Self { dim, entries })
    }

    /// Localized state |k><k|.
    pub fn localized(dim: usize, node: usize) -> Result<Self> {
        if node >= dim {
            return Err(SimError::InvalidParameter(format!(
                "node {node} out of range for dim {dim}"
            )));
        }
        let mut entries = Array2::zeros((dim, dim));
        entries[[node, node]] = Complex64::new(1.0, 0.0);
        Ok(Self { dim, entries })
    }

    /// Pure state |psi><psi| from an arbitrary (normalized) state vector.
    pub fn pure(state: &Array1<Complex64>) -> Result<Self> {
        let dim = state.len();
        let norm2: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > HERMITICITY_TOL {
            return Err(SimError::InvalidParameter(format!(
                "state vector not normalized: |psi|^2 = {norm2}"
            )));
        }
        let mut entries = Array2::zeros((dim, dim));
        for j in 0..dim {
            for k in 0..dim {
                entries[[j, k]] = state[j] * state[k].conj();
            }
        }
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|j| self.entries[[j, j]]).sum()
    }

    /// Population <j|rho|j> (real part of the diagonal entry).
    pub fn population(&self, node: usize) -> f64 {
        self.entries[[node, node]].re
    }

    /// Smallest diagonal real part; slightly negative values (> -1e-8) are
    /// expected numerical noise under trapping.
    pub fn min_population(&self) -> f64 {
        (0..self.dim).map(|j| self.entries[[j, j]].re).fold(f64::INFINITY, f64::min)
    }
}

/// Analytic eigensystem of the 2x2 non-Hermitian dimer Hamiltonian.
///
/// `phi_delta = arcsinh((E2 - E1 - i*Gamma) / 2V)` on the principal branch, so
/// that `E_pm = E1 +/- V e^{+/-phi_delta}` and `E_+ + E_- = E1 + E2 - i*Gamma`
/// hold for either sign convention. Right and left (tilde) eigenvectors form a
/// bi-orthonormal pair: `<tilde_a|b> = delta_ab`.
#[derive(Debug, Clone)]
pub struct DimerEigensystem {
    pub phi_delta: Complex64,
    pub e_plus: Complex64,
    pub e_minus: Complex64,
    pub right_plus: [Complex64; 2],
    pub right_minus: [Complex64; 2],
    pub left_plus: [Complex64; 2],
    pub left_minus: [Complex64; 2],
}

/// Eigensystem under the default convention E2 = E1 - Delta. The dephasing
/// rate is ignored: this is the eigensystem of H_S alone.
pub fn dimer_eigensystem(params: &DimerParams) -> Result<DimerEigensystem> {
    dimer_eigensystem_with_sign(params, DeltaSign::default())
}

/// As [`dimer_eigensystem`], with an explicit offset sign convention.
///
/// Returns [`SimError::Degenerate`] at exceptional points where
/// |cosh(phi_delta)| < 1e-8 (for Delta = 0 this is Gamma = 2V) instead of
/// dividing by a vanishing normalization.
pub fn dimer_eigensystem_with_sign(
    params: &DimerParams,
    sign: DeltaSign,
) -> Result<DimerEigensystem> {
    let e1 = Complex64::new(params.e1, 0.0);
    let e2 = params.e2(sign);
    let v = params.v;
    // arg = (E2 - E1 - i*Gamma) / 2V; principal branch of asinh.
    let arg = Complex64::new((e2 - params.e1) / (2.0 * v), -params.gamma / (2.0 * v));
    let phi = arg.asinh();
    let cosh_phi = phi.cosh();
    if cosh_phi.norm() < DEGENERACY_THRESHOLD {
        return Err(SimError::Degenerate {
            cosh_abs: cosh_phi.norm(),
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let e_plus = e1 + v * phi.exp();
    let e_minus = e1 - v * (-phi).exp();

    // Right eigenvectors of [[E1, -V], [-V, E2 - i*Gamma]]:
    //   H (e^{-phi/2}, -e^{+phi/2}) = E_+ (.)   and   H (e^{+phi/2}, e^{-phi/2}) = E_- (.)
    // normalized by 1/sqrt(2 cosh phi); left partners use the conjugate phase.
    let norm_r = (2.0 * cosh_phi).sqrt().inv();
    let half = phi / 2.0;
    let right_plus = [norm_r * (-half).exp(), -norm_r * half.exp()];
    let right_minus = [norm_r * half.exp(), norm_r * (-half).exp()];

    let phi_c = phi.conj();
    let norm_l = (2.0 * phi_c.cosh()).sqrt().inv();
    let half_c = phi_c / 2.0;
    let left_plus = [norm_l * (-half_c).exp(), -norm_l * half_c.exp()];
    let left_minus = [norm_l * half_c.exp(), norm_l * (-half_c).exp()];

    Ok(DimerEigensystem {
        phi_delta: phi,
        e_plus,
        e_minus,
        right_plus,
        right_minus,
        left_plus,
        left_minus,
    })
}

/// Max over a, b of |<tilde_a|b> - delta_ab|; test support for the
/// bi-orthonormal construction.
pub fn verify_biorthonormality(eig: &DimerEigensystem) -> f64 {
    let inner = |l: &[Complex64; 2], r: &[Complex64; 2]| l[0].conj() * r[0] + l[1].conj() * r[1];
    let one = Complex64::new(1.0, 0.0);
    [
        inner(&eig.left_plus, &eig.right_plus) - one,
        inner(&eig.left_plus, &eig.right_minus),
        inner(&eig.left_minus, &eig.right_plus),
        inner(&eig.left_minus, &eig.right_minus) - one,
    ]
    .iter()
    .map(|z| z.norm())
    .fold(0.0, f64::max)
}
