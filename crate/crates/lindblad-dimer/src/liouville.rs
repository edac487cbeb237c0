// SPDX-License-Identifier: Apache-2.0

//! Liouvillian superoperator of the Lindblad quantum master equation with
//! trapping and pure dephasing, plus its spectral and ODE propagators.
//!
//! The equation of motion for the reduced density operator is
//!
//! ```text
//!   rho' = -i [H_0, rho] - {Gamma, rho} - 2*lambda * (rho - diag(rho))
//! ```
//!
//! with `Gamma = sum_m Gamma_m |m><m|` draining probability at the trap nodes
//! and site-diagonal dephasing damping every off-diagonal element at rate
//! 2*lambda while leaving populations untouched (Breuer & Petruccione, "The
//! Theory of Open Quantum Systems", Oxford 2002).
//!
//! Density matrices are vectorized row-major: component `j*N + k` holds
//! `<j|rho|k>`. The generator acts on that vector as an N^2 x N^2 complex
//! matrix; eigendecomposition gives `rho(t) = Q exp(Lambda t) Q^-1 rho(0)`
//! and the long-time rate is read off the spectrum.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals, Inverse, OperationNorm, Solve};
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::exec;
use crate::model::{DensityMatrix, NetworkSpec, Trap};
use crate::ode::{DenseSolution, StepControl};

/// Eigenvalue real parts above this are treated as conserved (zero) modes.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-9;
/// Condition-number estimate beyond which the eigenvector matrix is declared
/// numerically singular and spectral propagation refuses to proceed.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Largest tolerated Hermiticity deviation of a propagated state before
/// symmetrization.
pub const EVOLUTION_HERMITICITY_TOL: f64 = 1e-8;
/// Relative tolerance for the spectral reconstruction Q Lambda Q^-1 = L.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Vectorization order: `<j|rho|k>` lives at component `j*n + k`.
#[inline]
pub fn vec_index(n: usize, j: usize, k: usize) -> usize {
    j * n + k
}

fn vectorize(rho: &DensityMatrix) -> Array1<Complex64> {
    let n = rho.dim();
    let mut v = Array1::zeros(n * n);
    for j in 0..n {
        for k in 0..n {
            v[vec_index(n, j, k)] = rho.entries()[[j, k]];
        }
    }
    v
}

fn unvectorize(n: usize, v: &Array1<Complex64>) -> Array2<Complex64> {
    let mut m = Array2::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            m[[j, k]] = v[vec_index(n, j, k)];
        }
    }
    m
}

/// The linear generator of the vectorized master equation.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    n: usize,
    matrix: Array2<Complex64>,
    has_trap: bool,
}

impl Liouvillian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn has_trap(&self) -> bool {
        self.has_trap
    }

    /// Apply the generator to a vectorized state.
    pub fn apply(&self, v: &Array1<Complex64>) -> Array1<Complex64> {
        self.matrix.dot(v)
    }
}

/// Builds the superoperator for `spec` with dephasing rate `lambda`.
///
/// The coherent and trapping parts combine into the non-Hermitian effective
/// Hamiltonian `H_eff = H_0 - i*Gamma`, acting as
/// `rho' = -i (H_eff rho - rho H_eff^dag)`; dephasing subtracts `2*lambda`
/// from every off-diagonal component of the vectorized state.
pub fn build_liouvillian(spec: &NetworkSpec, lambda: f64) -> Result<Liouvillian> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "dephasing rate lambda must be >= 0 and finite, got {lambda}"
        )));
    }
    let n = spec.n();
    let rates = spec.trap_rates();
    let mut h_eff = spec.hamiltonian();
    for m in 0..n {
        h_eff[[m, m]] -= Complex64::new(0.0, rates[m]);
    }
    let i = Complex64::new(0.0, 1.0);
    let mut matrix = Array2::zeros((n * n, n * n));
    for j in 0..n {
        for k in 0..n {
            let row = vec_index(n, j, k);
            // -i * (H_eff rho)_{jk}: couples to rho_{pk}
            for p in 0..n {
                matrix[[row, vec_index(n, p, k)]] -= i * h_eff[[j, p]];
            }
            // +i * (rho H_eff^dag)_{jk}: couples to rho_{jq}
            for q in 0..n {
                matrix[[row, vec_index(n, j, q)]] += i * h_eff[[k, q]].conj();
            }
            if j != k {
                matrix[[row, row]] -= Complex64::new(2.0 * lambda, 0.0);
            }
        }
    }
    Ok(Liouvillian { n, matrix, has_trap: !spec.traps().is_empty() })
}

/// Eigenvalues of the generator without eigenvectors; cheap path for decay
/// rates when the eigenvector matrix is too ill-conditioned to invert.
pub fn liouvillian_eigenvalues(liou: &Liouvillian) -> Result<Array1<Complex64>> {
    liou.matrix.eigvals().map_err(|e| SimError::Linalg(e.to_string()))
}

/// Full eigendecomposition of a Liouvillian: `L = Q Lambda Q^-1`.
#[derive(Debug, Clone)]
pub struct LiouvillianSpectrum {
    n: usize,
    eigenvalues: Array1<Complex64>,
    right_vectors: Array2<Complex64>,
    inverse_vectors: Array2<Complex64>,
}

impl LiouvillianSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &Array1<Complex64> {
        &self.eigenvalues
    }

    pub fn right_vectors(&self) -> &Array2<Complex64> {
        &self.right_vectors
    }

    pub fn inverse_vectors(&self) -> &Array2<Complex64> {
        &self.inverse_vectors
    }
}

/// Diagonalizes the generator and validates the decomposition.
///
/// Fails with [`SimError::DefectiveLiouvillian`] when the eigenvector matrix
/// is numerically singular (condition estimate above 1e12, or reconstruction
/// residual beyond 1e-8 of the matrix scale), which happens at exceptional
/// points such as Gamma = 2V for the symmetric dimer. Callers then fall back
/// to ODE propagation.
pub fn spectral_decompose(liou: &Liouvillian) -> Result<LiouvillianSpectrum> {
    let (eigenvalues, right_vectors) =
        liou.matrix.eig().map_err(|e| SimError::Linalg(e.to_string()))?;
    let inverse_vectors = right_vectors.inv().map_err(|_| SimError::DefectiveLiouvillian {
        cond: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    let cond = right_vectors.opnorm_one().map_err(|e| SimError::Linalg(e.to_string()))?
        * inverse_vectors.opnorm_one().map_err(|e| SimError::Linalg(e.to_string()))?;
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(SimError::DefectiveLiouvillian { cond, limit: CONDITION_LIMIT });
    }

    let lambda_mat = Array2::from_diag(&eigenvalues);
    let recon = right_vectors.dot(&lambda_mat).dot(&inverse_vectors);
    let scale = max_abs(&liou.matrix).max(f64::MIN_POSITIVE);
    let resid = max_abs(&(&recon - &liou.matrix));
    if resid > RECONSTRUCTION_TOL * scale {
        return Err(SimError::DefectiveLiouvillian { cond, limit: CONDITION_LIMIT });
    }

    for mu in eigenvalues.iter() {
        if mu.re > ZERO_MODE_THRESHOLD {
            return Err(SimError::Linalg(format!(
                "growing mode: eigenvalue {mu} has positive real part"
            )));
        }
    }

    Ok(LiouvillianSpectrum { n: liou.n, eigenvalues, right_vectors, inverse_vectors })
}

fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A propagated trajectory: states and survival probability tr(rho) on a
/// strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub survival: Vec<f64>,
    /// Largest |rho - rho^dag| seen before symmetrization.
    pub max_hermiticity_deviation: f64,
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(SimError::InvalidParameter("empty time grid".into()));
    }
    if times[0] < 0.0 || !times[0].is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "times must start at a finite t >= 0, got {}",
            times[0]
        )));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "times must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Turn a vectorized propagated state into a validated density matrix,
/// tracking the Hermiticity deviation before symmetrization.
fn state_from_vector(
    n: usize,
    y: &Array1<Complex64>,
    max_dev: &mut f64,
) -> Result<DensityMatrix> {
    let raw = unvectorize(n, y);
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            dev = dev.max((raw[[j, k]] - raw[[k, j]].conj()).norm());
        }
    }
    if dev > EVOLUTION_HERMITICITY_TOL {
        return Err(SimError::Linalg(format!(
            "propagated state lost Hermiticity: |rho - rho^dag| = {dev:.3e}"
        )));
    }
    *max_dev = max_dev.max(dev);
    let mut sym = Array2::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            sym[[j, k]] = (raw[[j, k]] + raw[[k, j]].conj()) / 2.0;
        }
    }
    DensityMatrix::new(sym)
}

/// Propagate by the eigendecomposition: element-wise exponentials of the
/// eigenvalues between `Q^-1` and `Q`.
pub fn evolve_spectral(
    spectrum: &LiouvillianSpectrum,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Trajectory> {
    validate_times(times)?;
    let n = spectrum.n;
    if rho0.dim() != n {
        return Err(SimError::InvalidParameter(format!(
            "state dimension {} does not match Liouvillian node count {n}",
            rho0.dim()
        )));
    }
    let coeff = spectrum.inverse_vectors.dot(&vectorize(rho0));
    let mut states = Vec::with_capacity(times.len());
    let mut survival = Vec::with_capacity(times.len());
    let mut max_dev = 0.0;
    for &t in times {
        let weights =
            Array1::from_iter(coeff.iter().zip(spectrum.eigenvalues.iter()).map(|(c, mu)| {
                c * (mu * t).exp()
            }));
        let y = spectrum.right_vectors.dot(&weights);
        let state = state_from_vector(n, &y, &mut max_dev)?;
        survival.push(state.trace().re);
        states.push(state);
    }
    Ok(Trajectory { times: times.to_vec(), states, survival, max_hermiticity_deviation: max_dev })
}

/// Propagate with the adaptive embedded Runge-Kutta 5(4) integrator; the
/// independent oracle for [`evolve_spectral`] and the fallback near
/// exceptional points.
pub fn evolve_ode(
    liou: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
    ctrl: StepControl,
) -> Result<Trajectory> {
    validate_times(times)?;
    let n = liou.n;
    if rho0.dim() != n {
        return Err(SimError::InvalidParameter(format!(
            "state dimension {} does not match Liouvillian node count {n}",
            rho0.dim()
        )));
    }
    let t_end = *times.last().expect("validated non-empty");
    let sol = DenseSolution::integrate(&liou.matrix, &vectorize(rho0), 0.0, t_end, ctrl)?;
    let mut states = Vec::with_capacity(times.len());
    let mut survival = Vec::with_capacity(times.len());
    let mut max_dev = 0.0;
    for &t in times {
        let y = sol.eval(t)?;
        let state = state_from_vector(n, &y, &mut max_dev)?;
        survival.push(state.trace().re);
        states.push(state);
    }
    Ok(Trajectory { times: times.to_vec(), states, survival, max_hermiticity_deviation: max_dev })
}

/// Survival probability as a sum of exponential modes,
/// `Pi(t) = Re sum_i w_i exp(mu_i t)`; the cheap evaluator behind threshold
/// searches and scans.
#[derive(Debug, Clone)]
pub struct SurvivalCurve {
    modes: Vec<(Complex64, Complex64)>,
}

impl SurvivalCurve {
    /// Modes for a single initial state.
    pub fn from_spectrum(spectrum: &LiouvillianSpectrum, rho0: &DensityMatrix) -> Result<Self> {
        if rho0.dim() != spectrum.n {
            return Err(SimError::InvalidParameter(format!(
                "state dimension {} does not match Liouvillian node count {}",
                rho0.dim(),
                spectrum.n
            )));
        }
        let coeff = spectrum.inverse_vectors.dot(&vectorize(rho0));
        Ok(Self::from_coefficients(spectrum, &coeff))
    }

    /// Modes for the average over localized initial states `|k><k|`,
    /// k ranging over `initial_nodes`.
    pub fn averaged(spectrum: &LiouvillianSpectrum, initial_nodes: &[usize]) -> Result<Self> {
        if initial_nodes.is_empty() {
            return Err(SimError::InvalidParameter(
                "survival average needs at least one initial node".into(),
            ));
        }
        let n = spectrum.n;
        let dim = n * n;
        let mut coeff = Array1::<Complex64>::zeros(dim);
        for &k in initial_nodes {
            if k >= n {
                return Err(SimError::InvalidParameter(format!(
                    "initial node {k} out of range for n = {n}"
                )));
            }
            let col = spectrum.inverse_vectors.column(vec_index(n, k, k));
            coeff += &col;
        }
        coeff /= Complex64::from(initial_nodes.len() as f64);
        Ok(Self::from_coefficients(spectrum, &coeff))
    }

    fn from_coefficients(spectrum: &LiouvillianSpectrum, coeff: &Array1<Complex64>) -> Self {
        let n = spectrum.n;
        // u_i = sum_n Q[(n,n), i]: how much trace each mode carries.
        let mut modes = Vec::with_capacity(coeff.len());
        for i in 0..coeff.len() {
            let mut u = Complex64::new(0.0, 0.0);
            for node in 0..n {
                u += spectrum.right_vectors[[vec_index(n, node, node), i]];
            }
            modes.push((spectrum.eigenvalues[i], u * coeff[i]));
        }
        Self { modes }
    }

    /// tr(rho(t)) for this initial condition.
    pub fn eval(&self, t: f64) -> f64 {
        self.modes.iter().map(|(mu, w)| (w * (mu * t).exp()).re).sum()
    }
}

/// Mean survival probability `Pi(t)`: the trace of the evolved state averaged
/// over all localized non-trap initial conditions.
///
/// Uses spectral propagation and falls back to the ODE integrator when the
/// Liouvillian is defective.
pub fn survival_probability(spec: &NetworkSpec, lambda: f64, times: &[f64]) -> Result<Vec<f64>> {
    validate_times(times)?;
    let initial_nodes = spec.non_trap_nodes();
    if initial_nodes.is_empty() {
        return Err(SimError::InvalidParameter(
            "survival probability needs at least one non-trap node".into(),
        ));
    }
    let liou = build_liouvillian(spec, lambda)?;
    match spectral_decompose(&liou) {
        Ok(spectrum) => {
            let curve = SurvivalCurve::averaged(&spectrum, &initial_nodes)?;
            Ok(times.iter().map(|&t| curve.eval(t)).collect())
        }
        Err(SimError::DefectiveLiouvillian { .. }) => {
            let per_state: Vec<Result<Vec<f64>>> = exec::map_indexed(initial_nodes.len(), |i| {
                let rho0 = DensityMatrix::localized(spec.n(), initial_nodes[i])?;
                Ok(evolve_ode(&liou, &rho0, times, StepControl::default())?.survival)
            });
            let mut avg = vec![0.0; times.len()];
            for run in per_state {
                let survival = run?;
                for (a, s) in avg.iter_mut().zip(survival) {
                    *a += s;
                }
            }
            let m = initial_nodes.len() as f64;
            for a in avg.iter_mut() {
                *a /= m;
            }
            Ok(avg)
        }
        Err(e) => Err(e),
    }
}

/// Long-time lifetime: inverse of the smallest nonzero decay rate
/// `1 / min_i |Re mu_i|` over eigenvalues with `|Re mu_i|` above the
/// zero-mode threshold.
pub fn tau_infinity(spectrum: &LiouvillianSpectrum) -> Result<f64> {
    tau_infinity_from_eigenvalues(spectrum.eigenvalues.iter().copied())
}

/// As [`tau_infinity`] but from raw eigenvalues (fallback path when the
/// eigenvector matrix is defective; the eigenvalues remain computable).
pub fn tau_infinity_from_eigenvalues(
    eigenvalues: impl IntoIterator<Item = Complex64>,
) -> Result<f64> {
    let min_rate = eigenvalues
        .into_iter()
        .filter_map(|mu| {
            let rate = -mu.re;
            (rate > ZERO_MODE_THRESHOLD).then_some(rate)
        })
        .fold(f64::INFINITY, f64::min);
    if min_rate.is_finite() {
        Ok(1.0 / min_rate)
    } else {
        Err(SimError::NoDecayingMode { threshold: ZERO_MODE_THRESHOLD })
    }
}

/// Mean first-passage time `integral_0^inf tr(rho(t)) dt`, computed exactly
/// (up to solver tolerance) from the resolvent at zero: solve
/// `L x = -vec(rho0)` and sum the diagonal components of x.
pub fn mean_first_passage(liou: &Liouvillian, rho0: &DensityMatrix) -> Result<f64> {
    let n = liou.n;
    if rho0.dim() != n {
        return Err(SimError::InvalidParameter(format!(
            "state dimension {} does not match Liouvillian node count {n}",
            rho0.dim()
        )));
    }
    let b = vectorize(rho0).mapv(|z| -z);
    let x = liou
        .matrix
        .solve(&b)
        .map_err(|e| SimError::SingularSystem(format!("resolvent solve failed: {e}")))?;
    // a conserved mode (no trap reachable from rho0) shows up as a huge or
    // inconsistent solution rather than a clean LAPACK failure
    let x_scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let residual = max_abs_vec(&(&liou.matrix.dot(&x) - &b));
    let b_scale = max_abs_vec(&b).max(1.0);
    if !x_scale.is_finite() || x_scale > 1e14 || residual > 1e-8 * b_scale {
        return Err(SimError::SingularSystem(format!(
            "no trap drains the initial state (|x| = {x_scale:.3e}, residual = {residual:.3e})"
        )));
    }
    let mfpt: Complex64 = (0..n).map(|j| x[vec_index(n, j, j)]).sum();
    Ok(mfpt.re)
}

fn max_abs_vec(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A ring of `n_ring` nodes, each coupled to its neighbors with `-v_ring` and
/// to a central trap node with `-v_spoke`; the center traps at rate `gamma`.
///
/// With the initial excitation fully delocalized over the ring, the dynamics
/// at lambda = 0 reduces to an effective dimer with coupling
/// `sqrt(n_ring) * v_spoke` and on-site shift `-2 v_ring` on the ring state.
/// Node indices: ring nodes 0..n_ring, center = n_ring. A two-node ring gets
/// a doubled edge.
pub fn ring_with_central_trap(
    n_ring: usize,
    v_ring: f64,
    v_spoke: f64,
    gamma: f64,
) -> Result<NetworkSpec> {
    if n_ring < 2 {
        return Err(SimError::InvalidParameter(format!(
            "ring needs at least 2 nodes, got {n_ring}"
        )));
    }
    if !(v_spoke > 0.0) || !v_spoke.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "spoke coupling must be positive and finite, got {v_spoke}"
        )));
    }
    if !v_ring.is_finite() || !gamma.is_finite() || gamma < 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "ring coupling {v_ring} and trap rate {gamma} must be finite, gamma >= 0"
        )));
    }
    let n = n_ring + 1;
    let center = n_ring;
    let mut couplings = Array2::zeros((n, n));
    for j in 0..n_ring {
        let k = (j + 1) % n_ring;
        couplings[[j, k]] += -v_ring;
        couplings[[k, j]] += -v_ring;
        couplings[[j, center]] = -v_spoke;
        couplings[[center, j]] = -v_spoke;
    }
    let traps =
        if gamma > 0.0 { vec![Trap { node: center, rate: gamma }] } else { vec![] };
    NetworkSpec::new(couplings, traps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_dimer, DimerParams};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dimer_liouvillian(delta: f64, gamma: f64, lambda: f64) -> Liouvillian {
        let p = DimerParams::new(0.0, delta, 1.0, gamma, lambda).unwrap();
        build_liouvillian(&make_dimer(&p), lambda).unwrap()
    }

    #[test]
    fn dimer_rows_match_symbolic_expansion() {
        // (V = 1, Delta = 0, Gamma = 1, lambda = 0), rows in units of V:
        //   rho_11' = -i V (rho_12 - rho_21)
        //   rho_22' = +i V (rho_12 - rho_21) - 2 Gamma rho_22
        //   rho_12' = -i(E1 - E2) rho_12 - i V (rho_11 - rho_22) - Gamma rho_12
        let liou = dimer_liouvillian(0.0, 1.0, 0.0);
        let m = liou.matrix();
        let z = c(0.0, 0.0);
        // row (0,0) = index 0
        assert_eq!(m[[0, 0]], z);
        assert_eq!(m[[0, 1]], c(0.0, -1.0));
        assert_eq!(m[[0, 2]], c(0.0, 1.0));
        assert_eq!(m[[0, 3]], z);
        // row (1,1) = index 3
        assert_eq!(m[[3, 0]], z);
        assert_eq!(m[[3, 1]], c(0.0, 1.0));
        assert_eq!(m[[3, 2]], c(0.0, -1.0));
        assert_eq!(m[[3, 3]], c(-2.0, 0.0));
        // row (0,1) = index 1
        assert_eq!(m[[1, 0]], c(0.0, -1.0));
        assert_eq!(m[[1, 3]], c(0.0, 1.0));
        assert_eq!(m[[1, 1]], c(-1.0, 0.0)); // -Gamma, E1 = E2
        // offset + dephasing on the same row
        let liou = dimer_liouvillian(1.5, 1.0, 0.7);
        let m = liou.matrix();
        // E1 - E2 = +1.5 under the default convention: -i(E1-E2) - Gamma - 2*lambda
        assert_abs_diff_eq!((m[[1, 1]] - c(-1.0 - 1.4, -1.5)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lambda_difference_is_diagonal_on_off_diagonals() {
        let lam = 0.9;
        let a = dimer_liouvillian(0.7, 0.0, 0.0);
        let b = dimer_liouvillian(0.7, 0.0, lam);
        let diff = b.matrix() - a.matrix();
        for r in 0..4 {
            for s in 0..4 {
                let expected = if r == s && (r == 1 || r == 2) { c(-2.0 * lam, 0.0) } else { c(0.0, 0.0) };
                assert_abs_diff_eq!((diff[[r, s]] - expected).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn trace_derivative_identity_on_ring() {
        // d(tr rho)/dt = -2 sum_m Gamma_m <m|rho|m> for arbitrary Hermitian rho
        let spec = ring_with_central_trap(3, 0.4, 0.6, 1.3).unwrap();
        let liou = build_liouvillian(&spec, 0.8).unwrap();
        let n = spec.n();
        // deterministic pseudo-random Hermitian matrices
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..20 {
            let mut rho = Array2::zeros((n, n));
            for j in 0..n {
                rho[[j, j]] = c(next().abs() / n as f64, 0.0);
                for k in (j + 1)..n {
                    let z = c(next() / 4.0, next() / 4.0);
                    rho[[j, k]] = z;
                    rho[[k, j]] = z.conj();
                }
            }
            let mut v = Array1::zeros(n * n);
            for j in 0..n {
                for k in 0..n {
                    v[vec_index(n, j, k)] = rho[[j, k]];
                }
            }
            let dv = liou.apply(&v);
            let dtrace: Complex64 = (0..n).map(|j| dv[vec_index(n, j, j)]).sum();
            let expected: f64 =
                spec.traps().iter().map(|t| -2.0 * t.rate * rho[[t.node, t.node]].re).sum();
            assert_abs_diff_eq!(dtrace.re, expected, epsilon = 1e-10);
            assert_abs_diff_eq!(dtrace.im, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn closed_dimer_spectrum_is_bohr_frequencies() {
        // Gamma = 0, lambda = 0, Delta = 0, V = 1: eigenvalues {0, 0, 2i, -2i}
        let liou = dimer_liouvillian(0.0, 0.0, 0.0);
        let spectrum = spectral_decompose(&liou).unwrap();
        let mut eigs: Vec<Complex64> = spectrum.eigenvalues().to_vec();
        eigs.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        let expected = [c(0.0, -2.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 2.0)];
        for (got, want) in eigs.iter().zip(expected) {
            assert!((got - want).norm() < 1e-9, "got {got}, want {want}");
        }
    }

    #[test]
    fn symmetric_trapped_dimer_has_uniform_decay_rate() {
        // Gamma = 1, Delta = 0, lambda = 0: all four real parts equal -Gamma
        let liou = dimer_liouvillian(0.0, 1.0, 0.0);
        let spectrum = spectral_decompose(&liou).unwrap();
        for mu in spectrum.eigenvalues() {
            assert_abs_diff_eq!(mu.re, -1.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(tau_infinity(&spectrum).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn exceptional_point_triggers_defective_error() {
        // Gamma = 2V is the exceptional point of the underlying H_S
        let liou = dimer_liouvillian(0.0, 2.0, 0.0);
        match spectral_decompose(&liou) {
            Err(SimError::DefectiveLiouvillian { .. }) => {}
            other => panic!("expected defective Liouvillian, got {other:?}"),
        }
    }

    #[test]
    fn spectral_evolution_at_t0_returns_initial_state() {
        let liou = dimer_liouvillian(1.5, 1.0, 0.5);
        let spectrum = spectral_decompose(&liou).unwrap();
        let rho0 = DensityMatrix::localized(2, 0).unwrap();
        let traj = evolve_spectral(&spectrum, &rho0, &[0.0, 1.0]).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let d = (traj.states[0].entries()[[j, k]] - rho0.entries()[[j, k]]).norm();
                assert!(d < 1e-12, "entry ({j},{k}) deviates by {d:.2e}");
            }
        }
        assert_abs_diff_eq!(traj.survival[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn resonant_rabi_oscillations() {
        // Gamma = 0, lambda = 0, Delta = 0: <1|rho|1> = cos^2(V t)
        let liou = dimer_liouvillian(0.0, 0.0, 0.0);
        let spectrum = spectral_decompose(&liou).unwrap();
        let rho0 = DensityMatrix::localized(2, 0).unwrap();
        let times: Vec<f64> = (1..=60).map(|i| 0.25 * i as f64).collect();
        let traj = evolve_spectral(&spectrum, &rho0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let expected = t.cos().powi(2);
            assert_abs_diff_eq!(traj.states[i].population(0), expected, epsilon = 1e-9);
            assert_abs_diff_eq!(traj.survival[i], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn pure_dephasing_keeps_trace_and_damps_coherence() {
        // Gamma = 0, lambda = 5: trace conserved, off-diagonals decay
        let p = DimerParams::new(0.0, 0.0, 1.0, 0.0, 5.0).unwrap();
        let liou = build_liouvillian(&make_dimer(&p), 5.0).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let psi = Array1::from(vec![c(s, 0.0), c(s, 0.0)]);
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let times: Vec<f64> = (0..=40).map(|i| 0.05 * i as f64 + 0.01).collect();
        let traj = evolve_ode(&liou, &rho0, &times, StepControl::default()).unwrap();
        let mut prev = f64::INFINITY;
        for state in &traj.states {
            assert_abs_diff_eq!(state.trace().re, 1.0, epsilon = 1e-10);
            let coh = state.entries()[[0, 1]].norm();
            assert!(coh <= prev + 1e-12, "coherence grew: {coh} after {prev}");
            prev = coh;
        }
    }

    #[test]
    fn uniform_trapping_gives_exponential_trace() {
        // traps on both nodes at rate Gamma commute with everything:
        // tr rho(t) = exp(-2 Gamma t) for any lambda
        let gamma = 0.8;
        let mut couplings = Array2::zeros((2, 2));
        couplings[[0, 1]] = -1.0;
        couplings[[1, 0]] = -1.0;
        // both nodes trapped: relax the "some non-trap node" rule by adding a
        // third, disconnected node
        let mut couplings3 = Array2::zeros((3, 3));
        couplings3[[0, 1]] = -1.0;
        couplings3[[1, 0]] = -1.0;
        let spec = NetworkSpec::new(
            couplings3,
            vec![Trap { node: 0, rate: gamma }, Trap { node: 1, rate: gamma }],
        )
        .unwrap();
        for lambda in [0.0, 0.7, 5.0] {
            let liou = build_liouvillian(&spec, lambda).unwrap();
            let spectrum = spectral_decompose(&liou).unwrap();
            let rho0 = DensityMatrix::localized(3, 0).unwrap();
            let times = [0.5, 1.0, 2.0, 4.0];
            let traj = evolve_spectral(&spectrum, &rho0, &times).unwrap();
            for (i, &t) in times.iter().enumerate() {
                assert_abs_diff_eq!(traj.survival[i], (-2.0 * gamma * t).exp(), epsilon = 1e-8);
            }
            // MFPT for exponential decay is 1/(2 Gamma)
            let mfpt = mean_first_passage(&liou, &rho0).unwrap();
            assert_abs_diff_eq!(mfpt, 1.0 / (2.0 * gamma), epsilon = 1e-10);
        }
    }

    #[test]
    fn survival_average_over_non_trap_nodes() {
        let spec = ring_with_central_trap(4, 0.0, 0.5, 1.0).unwrap();
        let times = [0.0, 0.5, 1.0, 2.0];
        let pi = survival_probability(&spec, 0.3, &times).unwrap();
        assert_abs_diff_eq!(pi[0], 1.0, epsilon = 1e-12);
        for w in pi.windows(2) {
            assert!(w[1] < w[0], "survival must decay with a trap present");
        }
    }

    #[test]
    fn mfpt_requires_a_draining_trap() {
        let liou = dimer_liouvillian(0.0, 0.0, 0.0); // no trap
        let rho0 = DensityMatrix::localized(2, 0).unwrap();
        match mean_first_passage(&liou, &rho0) {
            Err(SimError::SingularSystem(_)) => {}
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    #[test]
    fn tau_infinity_requires_decay() {
        let liou = dimer_liouvillian(0.0, 0.0, 0.0);
        let spectrum = spectral_decompose(&liou).unwrap();
        match tau_infinity(&spectrum) {
            Err(SimError::NoDecayingMode { .. }) => {}
            other => panic!("expected no-decay error, got {other:?}"),
        }
    }

    #[test]
    fn dephasing_alone_never_moves_population() {
        // Gamma = 0, V -> 0 network: diagonals constant in time
        let couplings = Array2::zeros((2, 2));
        let spec = NetworkSpec::new(couplings, vec![]).unwrap();
        let liou = build_liouvillian(&spec, 2.0).unwrap();
        let mut entries = Array2::zeros((2, 2));
        entries[[0, 0]] = c(0.7, 0.0);
        entries[[1, 1]] = c(0.3, 0.0);
        entries[[0, 1]] = c(0.2, 0.1);
        entries[[1, 0]] = c(0.2, -0.1);
        let rho0 = DensityMatrix::new(entries).unwrap();
        let times = [1.0, 3.0, 10.0];
        let traj = evolve_ode(&liou, &rho0, &times, StepControl::default()).unwrap();
        for state in &traj.states {
            assert_abs_diff_eq!(state.population(0), 0.7, epsilon = 1e-10);
            assert_abs_diff_eq!(state.population(1), 0.3, epsilon = 1e-10);
        }
    }

    #[test]
    fn ring_maps_onto_effective_dimer() {
        // v_ring = 0, v_spoke = 1/2, 4 ring nodes: effective coupling
        // sqrt(4) * 0.5 = 1 and zero offset; traces agree to 1e-8
        let spec = ring_with_central_trap(4, 0.0, 0.5, 1.0).unwrap();
        let liou = build_liouvillian(&spec, 0.0).unwrap();
        let spectrum = spectral_decompose(&liou).unwrap();
        let s = Array1::from(vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let rho0 = DensityMatrix::pure(&s).unwrap();
        let times: Vec<f64> = (0..=200).map(|i| 0.1 * i as f64).collect();
        let ring_traj = evolve_spectral(&spectrum, &rho0, &times).unwrap();

        let p = DimerParams::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let dimer = build_liouvillian(&make_dimer(&p), 0.0).unwrap();
        let dimer_spectrum = spectral_decompose(&dimer).unwrap();
        let dimer_curve =
            SurvivalCurve::from_spectrum(&dimer_spectrum, &DensityMatrix::localized(2, 0).unwrap())
                .unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert_abs_diff_eq!(ring_traj.survival[i], dimer_curve.eval(t), epsilon = 1e-8);
        }
    }

    #[test]
    fn ring_coupling_shifts_effective_onsite_energy() {
        // v_ring = 0.2: the symmetric ring state picks up energy -2*v_ring
        let spec = ring_with_central_trap(4, 0.2, 0.5, 1.0).unwrap();
        let liou = build_liouvillian(&spec, 0.0).unwrap();
        let spectrum = spectral_decompose(&liou).unwrap();
        let s = Array1::from(vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let rho0 = DensityMatrix::pure(&s).unwrap();
        let times: Vec<f64> = (0..=100).map(|i| 0.2 * i as f64).collect();
        let ring_traj = evolve_spectral(&spectrum, &rho0, &times).unwrap();

        // effective dimer: E_ring = -0.4, E_center = 0, V = 1, trap rate 1
        let mut couplings = Array2::zeros((2, 2));
        couplings[[0, 0]] = -0.4;
        couplings[[0, 1]] = -1.0;
        couplings[[1, 0]] = -1.0;
        let dimer_spec = NetworkSpec::new(couplings, vec![Trap { node: 1, rate: 1.0 }]).unwrap();
        let dimer = build_liouvillian(&dimer_spec, 0.0).unwrap();
        let curve = SurvivalCurve::from_spectrum(
            &spectral_decompose(&dimer).unwrap(),
            &DensityMatrix::localized(2, 0).unwrap(),
        )
        .unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert_abs_diff_eq!(ring_traj.survival[i], curve.eval(t), epsilon = 1e-8);
        }
    }

    #[test]
    fn ring_reduction_breaks_under_dephasing() {
        // dephasing acts on localized nodes, not on the collective ring state,
        // so the dimer reduction must fail visibly for lambda > 0
        let lambda = 0.5;
        let spec = ring_with_central_trap(4, 0.0, 0.5, 1.0).unwrap();
        let liou = build_liouvillian(&spec, lambda).unwrap();
        let spectrum = spectral_decompose(&liou).unwrap();
        let s = Array1::from(vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let rho0 = DensityMatrix::pure(&s).unwrap();
        let times: Vec<f64> = (1..=100).map(|i| 0.2 * i as f64).collect();
        let ring_traj = evolve_spectral(&spectrum, &rho0, &times).unwrap();

        let p = DimerParams::new(0.0, 0.0, 1.0, 1.0, lambda).unwrap();
        let dimer = build_liouvillian(&make_dimer(&p), lambda).unwrap();
        let curve = SurvivalCurve::from_spectrum(
            &spectral_decompose(&dimer).unwrap(),
            &DensityMatrix::localized(2, 0).unwrap(),
        )
        .unwrap();
        let max_dev = times
            .iter()
            .enumerate()
            .map(|(i, &t)| (ring_traj.survival[i] - curve.eval(t)).abs())
            .fold(0.0, f64::max);
        assert!(max_dev > 1e-3, "expected visible deviation, got {max_dev:.3e}");
    }

    #[test]
    fn trajectory_survival_is_monotone_with_trap() {
        let liou = dimer_liouvillian(1.5, 1.0, 0.5);
        let spectrum = spectral_decompose(&liou).unwrap();
        let rho0 = DensityMatrix::localized(2, 0).unwrap();
        let times: Vec<f64> = (0..=500).map(|i| 0.04 * i as f64).collect();
        let traj = evolve_spectral(&spectrum, &rho0, &times).unwrap();
        for w in traj.survival.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "survival increased: {} -> {}", w[0], w[1]);
        }
        assert!(traj.max_hermiticity_deviation < 1e-8);
    }
}
