//! Gaussian-state engine: first and second moments of multimode bosonic
//! states under linear (Bogoliubov) mode transformations.
//!
//! Conventions. Quadratures are Q = a + a† and P = i(a† − a), so the vacuum
//! has Var(Q) = Var(P) = 1 and a coherent state of amplitude γ has mean
//! vector (2 Re γ, 2 Im γ). Mode k occupies slots 2k (Q) and 2k + 1 (P) of
//! the mean vector and covariance matrix. The commutator [Q, P] = 2i fixes
//! the symplectic form Ω = ⊕ [[0, 1], [−1, 0]] and the physicality
//! condition cov + iΩ ⪰ 0.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::linalg;
use crate::{Error, Result};

/// Symplectic form Ω for `modes` modes in the interleaved (Q, P) ordering.
pub fn symplectic_form(modes: usize) -> Array2<f64> {
    let mut omega = Array2::zeros((2 * modes, 2 * modes));
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// First and second moments of a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeMoments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
}

impl ModeMoments {
    /// Zero means, unit variances, no Q–P correlation.
    pub fn vacuum() -> Self {
        Self {
            mean_q: 0.0,
            mean_p: 0.0,
            var_q: 1.0,
            var_p: 1.0,
            cov_qp: 0.0,
        }
    }

    /// Uncertainty determinant Var(Q)·Var(P) − Cov(Q,P)². Physical
    /// single-mode states have it ≥ 1; marginals of entangled many-body
    /// states may legitimately sit below that bound.
    pub fn uncertainty_det(&self) -> f64 {
        self.var_q * self.var_p - self.cov_qp * self.cov_qp
    }
}

/// Flat, serialization-friendly view of a Gaussian state: mean vector and
/// row-major covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRepr {
    pub modes: usize,
    pub means: Vec<f64>,
    pub cov: Vec<f64>,
}

/// A multimode Gaussian state, tracked through its mean vector and
/// covariance matrix.
#[derive(Debug, Clone)]
pub struct GaussianState {
    means: Array1<f64>,
    cov: Array2<f64>,
}

impl GaussianState {
    /// Vacuum in every mode: zero means, identity covariance.
    pub fn vacuum(modes: usize) -> Self {
        Self {
            means: Array1::zeros(2 * modes),
            cov: Array2::eye(2 * modes),
        }
    }

    /// Build a state from an explicit mean vector and covariance matrix.
    pub fn from_parts(means: Array1<f64>, cov: Array2<f64>) -> Result<Self> {
        let n = means.len();
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "mean vector length must be even".into(),
            ));
        }
        if cov.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: cov.nrows(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(
                        "covariance matrix must be symmetric".into(),
                    ));
                }
            }
        }
        Ok(Self { means, cov })
    }

    /// Vacuum in every mode except `mode`, whose moments are set to `m`.
    /// Fails if `m` violates the single-mode uncertainty relation.
    pub fn with_mode_moments(modes: usize, mode: usize, m: ModeMoments) -> Result<Self> {
        if m.var_q <= 0.0 || m.var_p <= 0.0 || m.uncertainty_det() < 1.0 - 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "mode moments violate the uncertainty relation (det = {})",
                m.uncertainty_det()
            )));
        }
        let (state, _) = Self::with_mode_moments_raw(modes, mode, m)?;
        Ok(state)
    }

    /// Like [`with_mode_moments`](Self::with_mode_moments) but without the
    /// uncertainty check, for injecting collective-mode marginals that sit
    /// below the single-mode bound. The 2×2 block is still clamped to
    /// positive semidefinite; the returned flag is true when the clamp moved
    /// the correlation by more than 1e-12.
    pub(crate) fn with_mode_moments_raw(
        modes: usize,
        mode: usize,
        m: ModeMoments,
    ) -> Result<(Self, bool)> {
        let mut state = Self::vacuum(modes);
        let clamped = state.set_mode_moments_raw(mode, m)?;
        Ok((state, clamped))
    }

    /// Overwrite one mode's means and 2×2 covariance block in place,
    /// dropping any correlations between that mode and the rest. No
    /// uncertainty check; the block is clamped to positive semidefinite and
    /// the return value reports whether the clamp moved the correlation by
    /// more than 1e-12.
    pub(crate) fn set_mode_moments_raw(&mut self, mode: usize, m: ModeMoments) -> Result<bool> {
        self.check_mode(mode)?;
        if m.var_q < 0.0 || m.var_p < 0.0 {
            return Err(Error::InvalidArgument(
                "variances must be nonnegative".into(),
            ));
        }
        let mut cov_qp = m.cov_qp;
        let mut clamped = false;
        if m.var_q * m.var_p - cov_qp * cov_qp < 0.0 {
            let bound = (m.var_q * m.var_p).sqrt();
            let fixed = cov_qp.signum() * bound;
            clamped = (cov_qp - fixed).abs() > 1e-12;
            cov_qp = fixed;
        }
        let q = 2 * mode;
        for row in [q, q + 1] {
            for col in 0..self.cov.ncols() {
                if col != q && col != q + 1 {
                    self.cov[(row, col)] = 0.0;
                    self.cov[(col, row)] = 0.0;
                }
            }
        }
        self.means[q] = m.mean_q;
        self.means[q + 1] = m.mean_p;
        self.cov[(q, q)] = m.var_q;
        self.cov[(q + 1, q + 1)] = m.var_p;
        self.cov[(q, q + 1)] = cov_qp;
        self.cov[(q + 1, q)] = cov_qp;
        Ok(clamped)
    }

    pub fn modes(&self) -> usize {
        self.means.len() / 2
    }

    pub fn means(&self) -> &Array1<f64> {
        &self.means
    }

    pub fn covariance(&self) -> &Array2<f64> {
        &self.cov
    }

    /// Shift `mode` by the coherent amplitude γ: means move by
    /// (2 Re γ, 2 Im γ), the covariance is untouched.
    pub fn displace(&mut self, mode: usize, amplitude: C64) -> Result<()> {
        self.check_mode(mode)?;
        self.means[2 * mode] += 2.0 * amplitude.re;
        self.means[2 * mode + 1] += 2.0 * amplitude.im;
        Ok(())
    }

    /// Transform the state in place: means ← S·means, cov ← S·cov·Sᵀ, with
    /// S the symplectic matrix of `map`.
    pub fn apply(&mut self, map: &BogoliubovMap) -> Result<()> {
        if map.modes() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                got: map.modes(),
            });
        }
        let s = map.symplectic();
        self.means = s.dot(&self.means);
        let cov = s.dot(&self.cov).dot(&s.t());
        // Re-symmetrize to keep round-off from S·V·Sᵀ out of the invariants.
        self.cov = (&cov + &cov.t()).mapv_into(|x| 0.5 * x);
        Ok(())
    }

    /// First and second moments of one mode.
    pub fn mode_moments(&self, mode: usize) -> Result<ModeMoments> {
        self.check_mode(mode)?;
        let q = 2 * mode;
        Ok(ModeMoments {
            mean_q: self.means[q],
            mean_p: self.means[q + 1],
            var_q: self.cov[(q, q)],
            var_p: self.cov[(q + 1, q + 1)],
            cov_qp: self.cov[(q, q + 1)],
        })
    }

    /// Smallest eigenvalue of cov + iΩ. Physical states have it ≥ 0 up to
    /// round-off; illegal squeezing shows up here before any diagonal entry
    /// goes negative.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let omega = symplectic_form(self.modes());
        linalg::hermitian_pair_eigenvalues(&self.cov, &omega)[0]
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_uncertainty_eigenvalue() >= -tol
    }

    pub fn to_repr(&self) -> StateRepr {
        StateRepr {
            modes: self.modes(),
            means: self.means.to_vec(),
            cov: self.cov.iter().copied().collect(),
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.modes() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "mode {mode} out of range for {} modes",
                self.modes()
            )))
        }
    }
}

/// Linear mode transformation a_out = A·a + B·a†.
///
/// The canonical commutation relations survive exactly when A A† − B B† = I
/// and A Bᵀ is symmetric; [`new`](Self::new) enforces both to 1e-12, and the
/// named constructors satisfy them by construction.
#[derive(Debug, Clone)]
pub struct BogoliubovMap {
    a: Array2<C64>,
    b: Array2<C64>,
}

impl BogoliubovMap {
    pub fn identity(modes: usize) -> Self {
        Self {
            a: Array2::eye(modes),
            b: Array2::zeros((modes, modes)),
        }
    }

    /// Validated constructor from explicit coefficient matrices.
    pub fn new(a: Array2<C64>, b: Array2<C64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.nrows(),
            });
        }
        let map = Self { a, b };
        let defect = map.invariant_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "coefficients do not preserve the commutation relations (defect {defect:.3e})"
            )));
        }
        Ok(map)
    }

    /// Phase-insensitive amplifier of gain G ≥ 1 coupling `signal` to the
    /// conjugate of `ancilla`: a_s → √G a_s + √(G−1) a_anc†, and
    /// symmetrically for the ancilla.
    pub fn amplifier(modes: usize, signal: usize, ancilla: usize, gain: f64) -> Result<Self> {
        if signal >= modes || ancilla >= modes || signal == ancilla {
            return Err(Error::InvalidArgument(format!(
                "amplifier needs two distinct modes below {modes}, got {signal} and {ancilla}"
            )));
        }
        if !gain.is_finite() || gain < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "amplifier gain must be ≥ 1, got {gain}"
            )));
        }
        let g = gain.sqrt();
        let g1 = (gain - 1.0).sqrt();
        let mut a = Array2::eye(modes);
        let mut b = Array2::zeros((modes, modes));
        a[(signal, signal)] = C64::new(g, 0.0);
        a[(ancilla, ancilla)] = C64::new(g, 0.0);
        b[(signal, ancilla)] = C64::new(g1, 0.0);
        b[(ancilla, signal)] = C64::new(g1, 0.0);
        Ok(Self { a, b })
    }

    /// Passive two-mode rotation Φ_ψ = μψ − νφ, Φ_φ = νψ + μφ with
    /// μ² + ν² = 1 (either coefficient may be negative).
    pub fn mixer(modes: usize, psi: usize, phi: usize, mu: f64, nu: f64) -> Result<Self> {
        if psi >= modes || phi >= modes || psi == phi {
            return Err(Error::InvalidArgument(format!(
                "mixer needs two distinct modes below {modes}, got {psi} and {phi}"
            )));
        }
        let norm = mu * mu + nu * nu;
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixer coefficients must satisfy mu^2 + nu^2 = 1, got {norm}"
            )));
        }
        let mut a = Array2::eye(modes);
        let b = Array2::zeros((modes, modes));
        a[(psi, psi)] = C64::new(mu, 0.0);
        a[(psi, phi)] = C64::new(-nu, 0.0);
        a[(phi, psi)] = C64::new(nu, 0.0);
        a[(phi, phi)] = C64::new(mu, 0.0);
        Ok(Self { a, b })
    }

    pub fn modes(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Array2<C64> {
        &self.a
    }

    pub fn b(&self) -> &Array2<C64> {
        &self.b
    }

    /// Largest violation of the defining constraints,
    /// max(‖AA† − BB† − I‖, ‖ABᵀ − (ABᵀ)ᵀ‖), in max-entry norm.
    pub fn invariant_defect(&self) -> f64 {
        let n = self.modes();
        let adj = |m: &Array2<C64>| m.t().mapv(|z| z.conj());
        let comm = self.a.dot(&adj(&self.a)) - self.b.dot(&adj(&self.b));
        let d1 = linalg::max_abs_diff(&comm, &Array2::eye(n));
        let abt = self.a.dot(&self.b.t());
        let d2 = linalg::max_abs_diff(&abt, &abt.t().to_owned());
        d1.max(d2)
    }

    /// The map that applies `self` first and `next` second.
    pub fn then(&self, next: &Self) -> Result<Self> {
        if next.modes() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                got: next.modes(),
            });
        }
        let a1c = self.a.mapv(|z| z.conj());
        let b1c = self.b.mapv(|z| z.conj());
        let a = next.a.dot(&self.a) + next.b.dot(&b1c);
        let b = next.a.dot(&self.b) + next.b.dot(&a1c);
        Ok(Self { a, b })
    }

    /// Real 2M×2M action on the interleaved (Q, P) vector. For each mode
    /// pair (i, j) the 2×2 block is
    /// [[Re A + Re B, −Im A + Im B], [Im A + Im B, Re A − Re B]].
    pub fn symplectic(&self) -> Array2<f64> {
        let m = self.modes();
        let mut s = Array2::zeros((2 * m, 2 * m));
        for i in 0..m {
            for j in 0..m {
                let a = self.a[(i, j)];
                let b = self.b[(i, j)];
                s[(2 * i, 2 * j)] = a.re + b.re;
                s[(2 * i, 2 * j + 1)] = -a.im + b.im;
                s[(2 * i + 1, 2 * j)] = a.im + b.im;
                s[(2 * i + 1, 2 * j + 1)] = a.re - b.re;
            }
        }
        s
    }
}
