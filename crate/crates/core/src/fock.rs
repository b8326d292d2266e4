//! Truncated number-basis oracle for the covariance-matrix engine.
//!
//! Everything here works with explicit state vectors over a truncated
//! multimode Fock basis, so each quantity it produces is an independent
//! check on the symplectic algebra in [`crate::gaussian`] — no covariance
//! arithmetic is reused.  The price is exponential scaling, which is why
//! spaces carry a hard amplitude cap and dense operator construction an
//! additional dimension guard.
//!
//! Truncation is handled so that it never silently corrupts a comparison:
//!
//! * truncated quadratic generators stay anti-Hermitian, so evolved states
//!   keep unit norm to machine precision regardless of cutoff;
//! * truncation error therefore shows up only in expectation values, and
//!   every pipeline run reports the probability mass in the top two
//!   occupation levels of each mode so an undersized cutoff is visible in
//!   the result itself;
//! * algebraic identities (commutators, ladder coefficients) are checked on
//!   sub-bases that the truncation edge cannot reach, where they must hold
//!   to round-off.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::cloning::{SpinEnsemble, ANCILLA, MATTER, SIGNAL};
use crate::gaussian::ModeMoments;
use crate::linalg::{adjoint, matrix_exp};
use crate::{Error, Result};

/// Default cap on the number of amplitudes a state vector may hold.
pub const DEFAULT_AMPLITUDE_CAP: usize = 2_000_000;

/// Largest space dimension for which dense operator matrices may be built.
pub const DENSE_OPERATOR_DIM_CAP: usize = 4096;

/// Coherent amplitudes must fit the photon cutoff up to this much lost mass.
pub const COHERENT_TAIL_TOL: f64 = 1e-10;

/// Extra occupation levels used internally while evolving pipeline states.
///
/// Exponentiating a generator truncated at the register cutoff reflects
/// amplitude off the truncation edge back into the retained levels, which
/// pollutes low-order moments far more than the mass that genuinely leaves
/// the register.  Evolving with this much headroom and projecting back
/// afterwards leaves only the projection error of the register cutoff
/// itself; the reflection artifact is suppressed by roughly tanh²r per
/// level of headroom.
pub const EVOLUTION_HEADROOM: usize = 12;

/// A truncated multimode Fock space: per-mode occupation cutoffs plus the
/// row-major index layout (last mode fastest) shared by states and operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl FockSpace {
    /// A space with the default amplitude cap.
    pub fn new(cutoffs: &[usize]) -> Result<Self> {
        Self::with_cap(cutoffs, DEFAULT_AMPLITUDE_CAP)
    }

    /// A space that may hold at most `cap` amplitudes.
    ///
    /// Each cutoff must be at least 2: a mode that cannot hold a single
    /// excitation cannot witness any of the algebra this module checks.
    pub fn with_cap(cutoffs: &[usize], cap: usize) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidArgument("a Fock space needs at least one mode".into()));
        }
        if let Some(&bad) = cutoffs.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidArgument(format!(
                "every mode cutoff must be at least 2, got {bad}"
            )));
        }
        let mut dim: usize = 1;
        for &d in cutoffs {
            dim = dim.checked_mul(d).ok_or(Error::CapExceeded { required: usize::MAX, cap })?;
        }
        if dim > cap {
            return Err(Error::CapExceeded { required: dim, cap });
        }
        let mut strides = vec![1usize; cutoffs.len()];
        for m in (0..cutoffs.len().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * cutoffs[m + 1];
        }
        Ok(Self { cutoffs: cutoffs.to_vec(), strides, dim })
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.cutoffs[mode]
    }

    /// Total number of amplitudes.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self, mode: usize) -> usize {
        self.strides[mode]
    }

    /// Flat index of a joint occupation, last mode fastest.
    pub fn index(&self, occupations: &[usize]) -> usize {
        debug_assert_eq!(occupations.len(), self.cutoffs.len());
        occupations
            .iter()
            .enumerate()
            .map(|(m, &n)| {
                debug_assert!(n < self.cutoffs[m], "occupation {n} out of range for mode {m}");
                n * self.strides[m]
            })
            .sum()
    }

    /// Occupation of one mode inside a flat index.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.cutoffs[mode]
    }

    /// Sum of all mode occupations at a flat index.
    pub fn total_occupation(&self, index: usize) -> usize {
        (0..self.n_modes()).map(|m| self.occupation(index, m)).sum()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} out of range for a {}-mode space",
                self.n_modes()
            )));
        }
        Ok(())
    }

    fn check_mode_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check_mode(a)?;
        self.check_mode(b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!("mode pair must be distinct, got ({a}, {b})")));
        }
        Ok(())
    }

    fn check_dense_ok(&self) -> Result<()> {
        if self.dim > DENSE_OPERATOR_DIM_CAP {
            return Err(Error::CapExceeded {
                required: self.dim * self.dim,
                cap: DENSE_OPERATOR_DIM_CAP * DENSE_OPERATOR_DIM_CAP,
            });
        }
        Ok(())
    }
}

/// A normalized state vector over a [`FockSpace`].
#[derive(Debug, Clone)]
pub struct FockState {
    space: FockSpace,
    amps: Array1<C64>,
}

impl FockState {
    pub fn vacuum(space: &FockSpace) -> Self {
        let mut amps = Array1::zeros(space.dim());
        amps[0] = C64::new(1.0, 0.0);
        Self { space: space.clone(), amps }
    }

    /// The basis vector with the given joint occupation.
    pub fn basis_state(space: &FockSpace, occupations: &[usize]) -> Result<Self> {
        if occupations.len() != space.n_modes() {
            return Err(Error::DimensionMismatch { expected: space.n_modes(), got: occupations.len() });
        }
        for (m, &n) in occupations.iter().enumerate() {
            if n >= space.cutoff(m) {
                return Err(Error::InvalidArgument(format!(
                    "occupation {n} exceeds cutoff {} of mode {m}",
                    space.cutoff(m)
                )));
            }
        }
        let mut amps = Array1::zeros(space.dim());
        amps[space.index(occupations)] = C64::new(1.0, 0.0);
        Ok(Self { space: space.clone(), amps })
    }

    /// Wrap raw amplitudes, normalizing them exactly.
    pub fn from_amplitudes(space: &FockSpace, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: amplitudes.len() });
        }
        let mut amps = Array1::from(amplitudes);
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-12) || !norm.is_finite() {
            return Err(Error::InvalidArgument("state amplitudes have (near-)zero or non-finite norm".into()));
        }
        amps.mapv_inplace(|z| z / norm);
        Ok(Self { space: space.clone(), amps })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `op · |self⟩`, without renormalization.
    ///
    /// Evolution operators built in this module are exactly unitary, so the
    /// norm invariant survives on its own; callers applying non-unitary
    /// matrices own the bookkeeping.
    pub fn apply_matrix(&self, op: &Array2<C64>) -> Result<Self> {
        if op.nrows() != self.space.dim() || op.ncols() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: op.nrows() });
        }
        Ok(Self { space: self.space.clone(), amps: op.dot(&self.amps) })
    }

    /// ⟨self| op |self⟩.
    pub fn expectation(&self, op: &Array2<C64>) -> Result<C64> {
        if op.nrows() != self.space.dim() || op.ncols() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: op.nrows() });
        }
        let image = op.dot(&self.amps);
        Ok(self.amps.iter().zip(image.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// Probability mass in the top two occupation levels of one mode — the
    /// truncation diagnostic reported by pipeline runs.
    pub fn top_two_level_mass(&self, mode: usize) -> Result<f64> {
        self.occupation_mass_above(mode, self.space.cutoff(mode).saturating_sub(2))
    }

    /// Probability mass with occupation of `mode` at or above `level`.
    pub fn occupation_mass_above(&self, mode: usize, level: usize) -> Result<f64> {
        self.space.check_mode(mode)?;
        let mut mass = 0.0;
        for (idx, amp) in self.amps.iter().enumerate() {
            if self.space.occupation(idx, mode) >= level {
                mass += amp.norm_sqr();
            }
        }
        Ok(mass)
    }
}

/// Dense matrix of the annihilation operator on one mode: a|n⟩ = √n |n−1⟩.
pub fn annihilation_op(space: &FockSpace, mode: usize) -> Result<Array2<C64>> {
    space.check_mode(mode)?;
    space.check_dense_ok()?;
    let stride = space.stride(mode);
    let mut op = Array2::zeros((space.dim(), space.dim()));
    for idx in 0..space.dim() {
        let n = space.occupation(idx, mode);
        if n >= 1 {
            op[[idx - stride, idx]] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    Ok(op)
}

/// `a b − b a`.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Max entrywise |lhs − rhs| over columns whose total occupation is at most
/// `max_total_occupation` (rows unrestricted).
///
/// For number-conserving operator identities the truncation edge can only
/// corrupt columns near the cutoff, so restricting columns this way isolates
/// the sub-basis where the identity must hold exactly.
pub fn max_column_deviation(
    lhs: &Array2<C64>,
    rhs: &Array2<C64>,
    space: &FockSpace,
    max_total_occupation: usize,
) -> f64 {
    let mut worst = 0.0f64;
    for col in 0..space.dim() {
        if space.total_occupation(col) > max_total_occupation {
            continue;
        }
        for row in 0..space.dim() {
            worst = worst.max((lhs[[row, col]] - rhs[[row, col]]).norm());
        }
    }
    worst
}

/// Max entrywise |lhs − rhs| with both rows and columns restricted to total
/// occupation at most `max_total_occupation`.
///
/// Needed for identities involving pair creation, where a truncated unitary
/// is wrong near the edge in both index slots but converges entrywise in the
/// low-occupation corner as the cutoff grows.
pub fn max_corner_deviation(
    lhs: &Array2<C64>,
    rhs: &Array2<C64>,
    space: &FockSpace,
    max_total_occupation: usize,
) -> f64 {
    let mut worst = 0.0f64;
    for col in 0..space.dim() {
        if space.total_occupation(col) > max_total_occupation {
            continue;
        }
        for row in 0..space.dim() {
            if space.total_occupation(row) > max_total_occupation {
                continue;
            }
            worst = worst.max((lhs[[row, col]] - rhs[[row, col]]).norm());
        }
    }
    worst
}

/// The collective two-mode spin operators built from mode pair (a, b).
///
/// Conventions: S₊ = b†a raises s_z = (n_b − n_a)/2, S₋ = a†b lowers it,
/// S_x = (S₊ + S₋)/2, S_y = (S₊ − S₋)/2i, S_z = (n_b − n_a)/2,
/// S₀ = (n_a + n_b)/2.
pub struct SchwingerOps {
    pub s_x: Array2<C64>,
    pub s_y: Array2<C64>,
    pub s_z: Array2<C64>,
    pub s_0: Array2<C64>,
    pub s_plus: Array2<C64>,
    pub s_minus: Array2<C64>,
}

pub fn schwinger_ops(space: &FockSpace, mode_a: usize, mode_b: usize) -> Result<SchwingerOps> {
    space.check_mode_pair(mode_a, mode_b)?;
    let a = annihilation_op(space, mode_a)?;
    let b = annihilation_op(space, mode_b)?;
    let ad = adjoint(&a);
    let bd = adjoint(&b);
    let s_plus = bd.dot(&a);
    let s_minus = ad.dot(&b);
    let half = C64::new(0.5, 0.0);
    let s_x = (&s_plus + &s_minus) * half;
    let s_y = (&s_plus - &s_minus) * C64::new(0.0, -0.5);
    let s_z = (&bd.dot(&b) - &ad.dot(&a)) * half;
    let s_0 = (&ad.dot(&a) + &bd.dot(&b)) * half;
    Ok(SchwingerOps { s_x, s_y, s_z, s_0, s_plus, s_minus })
}

/// Apply S₊ and S₋ to the two-mode state |s, s_z⟩ and compare against the
/// closed-form ladder coefficients √((s ± s_z + 1)(s ∓ s_z)); returns the
/// worst amplitude deviation.
///
/// Spins are passed doubled so half-integers stay exact: `two_s = 2s`,
/// `two_sz = 2s_z`.
pub fn ladder_action_check(two_s: u32, two_sz: i32) -> Result<f64> {
    if two_sz.unsigned_abs() > two_s {
        return Err(Error::InvalidArgument(format!(
            "|s_z| must not exceed s, got 2s = {two_s}, 2s_z = {two_sz}"
        )));
    }
    if (two_s as i64 - two_sz as i64) % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "s and s_z must differ by an integer, got 2s = {two_s}, 2s_z = {two_sz}"
        )));
    }
    let n_a = ((two_s as i64 - two_sz as i64) / 2) as usize;
    let n_b = ((two_s as i64 + two_sz as i64) / 2) as usize;
    let cutoff = two_s as usize + 2;
    let space = FockSpace::new(&[cutoff, cutoff])?;
    let ops = schwinger_ops(&space, 0, 1)?;
    let state = FockState::basis_state(&space, &[n_a, n_b])?;

    // S₊ moves one quantum a → b, with coefficient √((n_b + 1) n_a) when
    // written in occupations.
    let mut worst = 0.0f64;
    for (op, source_has, coeff, target) in [
        (&ops.s_plus, n_a, (((n_b + 1) * n_a) as f64).sqrt(), [n_a.wrapping_sub(1), n_b + 1]),
        (&ops.s_minus, n_b, (((n_a + 1) * n_b) as f64).sqrt(), [n_a + 1, n_b.wrapping_sub(1)]),
    ] {
        let image = op.dot(state.amplitudes());
        let mut expected: Array1<C64> = Array1::zeros(space.dim());
        if source_has > 0 {
            expected[space.index(&target)] = C64::new(coeff, 0.0);
        }
        let dev = image
            .iter()
            .zip(expected.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// The large-N excitation pair (φ, φ†) with φ = a†b/√N.
pub fn hp_excitation_ops(
    space: &FockSpace,
    mode_a: usize,
    mode_b: usize,
    n_atoms: u64,
) -> Result<(Array2<C64>, Array2<C64>)> {
    if n_atoms == 0 {
        return Err(Error::InvalidArgument("excitation operators need at least one atom".into()));
    }
    let ops = schwinger_ops(space, mode_a, mode_b)?;
    let scale = C64::new(1.0 / (n_atoms as f64).sqrt(), 0.0);
    let phi = ops.s_minus * scale;
    let phi_dagger = adjoint(&phi);
    Ok((phi, phi_dagger))
}

/// Single-mode matrix of the exact spin-lowering operator in the excitation
/// picture |k⟩ = |s_z = k − s⟩: S₋|k⟩ = √(k (2s − k + 1)) |k−1⟩.
///
/// Dividing by √(2s) gives an operator that acts like plain bosonic
/// annihilation on the k ≤ 1 sector exactly and to O(1/N) above it.
pub fn exact_hp_lowering(dim: usize, two_s: u32) -> Result<Array2<C64>> {
    if dim < 2 {
        return Err(Error::InvalidArgument("lowering matrix needs dimension at least 2".into()));
    }
    let mut op = Array2::zeros((dim, dim));
    for k in 1..dim.min(two_s as usize + 1) {
        let coeff = ((k as f64) * ((two_s as usize - k + 1) as f64)).sqrt();
        op[[k - 1, k]] = C64::new(coeff, 0.0);
    }
    Ok(op)
}

fn coherent_amplitudes(dim: usize, gamma: C64) -> Result<Vec<C64>> {
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[0] = C64::new((-gamma.norm_sqr() / 2.0).exp(), 0.0);
    for m in 1..dim {
        amps[m] = amps[m - 1] * gamma / C64::new((m as f64).sqrt(), 0.0);
    }
    let tail = (1.0 - amps.iter().map(|z| z.norm_sqr()).sum::<f64>()).max(0.0);
    if tail > COHERENT_TAIL_TOL {
        return Err(Error::InvalidArgument(format!(
            "coherent amplitude |γ| = {:.3} loses mass {tail:.3e} above cutoff {dim}; raise the cutoff",
            gamma.norm()
        )));
    }
    Ok(amps)
}

/// Binomial amplitudes of (α a† + β b†)^N |vac⟩ / √(N!): entry k multiplies
/// |N−k, k⟩ by √C(N,k) α^{N−k} β^k.  Computed in log-magnitude form so that
/// vanishing populations and large N stay finite.
fn binomial_amplitudes(n_atoms: usize, alpha: C64, beta: C64) -> Vec<C64> {
    let mut ln_fact = vec![0.0f64; n_atoms + 1];
    for i in 1..=n_atoms {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let (ra, ta) = (alpha.norm(), alpha.arg());
    let (rb, tb) = (beta.norm(), beta.arg());
    (0..=n_atoms)
        .map(|k| {
            if (ra == 0.0 && k < n_atoms) || (rb == 0.0 && k > 0) {
                return C64::new(0.0, 0.0);
            }
            let mut ln_mag = 0.5 * (ln_fact[n_atoms] - ln_fact[k] - ln_fact[n_atoms - k]);
            if n_atoms - k > 0 {
                ln_mag += ((n_atoms - k) as f64) * ra.ln();
            }
            if k > 0 {
                ln_mag += (k as f64) * rb.ln();
            }
            let phase = ((n_atoms - k) as f64) * ta + (k as f64) * tb;
            C64::from_polar(ln_mag.exp(), phase)
        })
        .collect()
}

/// Coherent state on one mode, vacuum on the rest.
pub fn coherent_state(space: &FockSpace, mode: usize, gamma: C64) -> Result<FockState> {
    space.check_mode(mode)?;
    let single = coherent_amplitudes(space.cutoff(mode), gamma)?;
    let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
    for (m, &c) in single.iter().enumerate() {
        amps[m * space.stride(mode)] = c;
    }
    FockState::from_amplitudes(space, amps)
}

/// The coherent spin state ∝ e^{γψ†} (α a† + β b†)^N |vac⟩ on a space whose
/// first two modes hold the atomic populations; an optional third mode holds
/// the photon field.
///
/// Atomic cutoffs must be at least N + 1 so the full binomial fits; the
/// photon cutoff must hold the coherent amplitude up to a tail mass of
/// [`COHERENT_TAIL_TOL`].  The result is normalized exactly.
pub fn coherent_spin_state(
    space: &FockSpace,
    n_atoms: u64,
    alpha: C64,
    beta: C64,
    gamma: C64,
) -> Result<FockState> {
    if space.n_modes() != 2 && space.n_modes() != 3 {
        return Err(Error::InvalidArgument(format!(
            "coherent spin state lives on 2 atomic modes plus an optional photon mode, got {} modes",
            space.n_modes()
        )));
    }
    if space.n_modes() == 2 && gamma != C64::new(0.0, 0.0) {
        return Err(Error::InvalidArgument(
            "a photon amplitude needs a third mode to live in".into(),
        ));
    }
    let n = usize::try_from(n_atoms)
        .map_err(|_| Error::InvalidArgument(format!("atom number {n_atoms} too large")))?;
    for m in [0, 1] {
        if space.cutoff(m) < n + 1 {
            return Err(Error::InvalidArgument(format!(
                "atomic mode {m} cutoff {} cannot hold {n} atoms; need at least {}",
                space.cutoff(m),
                n + 1
            )));
        }
    }
    let spin = binomial_amplitudes(n, alpha, beta);
    let photon = if space.n_modes() == 3 {
        coherent_amplitudes(space.cutoff(2), gamma)?
    } else {
        vec![C64::new(1.0, 0.0)]
    };
    let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
    for (k, &ck) in spin.iter().enumerate() {
        let base = (n - k) * space.stride(0) + k * space.stride(1);
        for (m, &dm) in photon.iter().enumerate() {
            amps[base + m * space.stride(2.min(space.n_modes() - 1))] = ck * dm;
        }
    }
    FockState::from_amplitudes(space, amps)
}

/// The matter marginal of a coherent spin state, bosonized: the excitation
/// number k of mode b becomes the occupation of a single mode, carrying the
/// binomial amplitudes √C(N,k) α^{N−k} β^k.  Other modes stay in vacuum.
pub fn hp_matter_state(
    space: &FockSpace,
    mode: usize,
    n_atoms: u64,
    alpha: C64,
    beta: C64,
) -> Result<FockState> {
    space.check_mode(mode)?;
    let n = usize::try_from(n_atoms)
        .map_err(|_| Error::InvalidArgument(format!("atom number {n_atoms} too large")))?;
    if space.cutoff(mode) < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "mode {mode} cutoff {} cannot hold {n} excitations; need at least {}",
            space.cutoff(mode),
            n + 1
        )));
    }
    let spin = binomial_amplitudes(n, alpha, beta);
    let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
    for (k, &ck) in spin.iter().enumerate() {
        amps[k * space.stride(mode)] = ck;
    }
    FockState::from_amplitudes(space, amps)
}

fn squeezer_generator(space: &FockSpace, mode_1: usize, mode_2: usize, r: f64) -> Array2<C64> {
    let (s1, s2) = (space.stride(mode_1), space.stride(mode_2));
    let (d1, d2) = (space.cutoff(mode_1), space.cutoff(mode_2));
    let mut k = Array2::zeros((space.dim(), space.dim()));
    for idx in 0..space.dim() {
        let n1 = space.occupation(idx, mode_1);
        let n2 = space.occupation(idx, mode_2);
        if n1 + 1 < d1 && n2 + 1 < d2 {
            let coeff = r * (((n1 + 1) * (n2 + 1)) as f64).sqrt();
            k[[idx + s1 + s2, idx]] += C64::new(coeff, 0.0);
        }
        if n1 >= 1 && n2 >= 1 {
            let coeff = r * ((n1 * n2) as f64).sqrt();
            k[[idx - s1 - s2, idx]] -= C64::new(coeff, 0.0);
        }
    }
    k
}

fn beamsplitter_generator(space: &FockSpace, mode_1: usize, mode_2: usize, theta: f64) -> Array2<C64> {
    let (s1, s2) = (space.stride(mode_1), space.stride(mode_2));
    let (d1, d2) = (space.cutoff(mode_1), space.cutoff(mode_2));
    let mut k = Array2::zeros((space.dim(), space.dim()));
    for idx in 0..space.dim() {
        let n1 = space.occupation(idx, mode_1);
        let n2 = space.occupation(idx, mode_2);
        if n1 + 1 < d1 && n2 >= 1 {
            let coeff = theta * (((n1 + 1) * n2) as f64).sqrt();
            k[[idx + s1 - s2, idx]] += C64::new(coeff, 0.0);
        }
        if n2 + 1 < d2 && n1 >= 1 {
            let coeff = theta * (((n2 + 1) * n1) as f64).sqrt();
            k[[idx - s1 + s2, idx]] -= C64::new(coeff, 0.0);
        }
    }
    k
}

/// Unitary of the two-mode squeezer exp(r (a₁†a₂† − a₁a₂)) with
/// r = arccosh √G, so that mode 1 picks up √G a₁ + √(G−1) a₂† in the
/// Heisenberg picture — the dilation of a phase-insensitive amplifier of
/// gain G with mode 2 as the idler.
pub fn two_mode_squeezer(space: &FockSpace, mode_1: usize, mode_2: usize, gain: f64) -> Result<Array2<C64>> {
    space.check_mode_pair(mode_1, mode_2)?;
    space.check_dense_ok()?;
    if !gain.is_finite() || gain < 1.0 {
        return Err(Error::InvalidArgument(format!("amplifier gain must be ≥ 1, got {gain}")));
    }
    let root = gain.sqrt();
    let r = (root + (gain - 1.0).sqrt()).ln();
    let k = squeezer_generator(space, mode_1, mode_2, r);
    Ok(matrix_exp(&k))
}

/// Unitary of the beamsplitter exp(θ (a₁†a₂ − a₂†a₁)) with θ = arccos μ,
/// mixing the pair as a₁ → μ a₁ + ν a₂, a₂ → μ a₂ − ν a₁ (ν = sin θ ≥ 0).
pub fn beamsplitter_unitary(space: &FockSpace, mode_1: usize, mode_2: usize, mu: f64) -> Result<Array2<C64>> {
    space.check_mode_pair(mode_1, mode_2)?;
    space.check_dense_ok()?;
    if !mu.is_finite() || !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidArgument(format!("beamsplitter transmissivity must lie in [0, 1], got {mu}")));
    }
    let theta = mu.acos();
    let k = beamsplitter_generator(space, mode_1, mode_2, theta);
    Ok(matrix_exp(&k))
}

/// Apply a two-mode unitary (built on a pair space with `mode_i` slower)
/// to modes (i, j) of a larger register.
pub fn apply_pair(state: &FockState, mode_i: usize, mode_j: usize, u: &Array2<C64>) -> Result<FockState> {
    let space = state.space();
    space.check_mode_pair(mode_i, mode_j)?;
    let (di, dj) = (space.cutoff(mode_i), space.cutoff(mode_j));
    let pair_dim = di * dj;
    if u.nrows() != pair_dim || u.ncols() != pair_dim {
        return Err(Error::DimensionMismatch { expected: pair_dim, got: u.nrows() });
    }
    let (si, sj) = (space.stride(mode_i), space.stride(mode_j));
    let mut out: Array1<C64> = Array1::zeros(space.dim());
    let mut buf: Array1<C64> = Array1::zeros(pair_dim);
    for rest in 0..space.dim() {
        if space.occupation(rest, mode_i) != 0 || space.occupation(rest, mode_j) != 0 {
            continue;
        }
        for ni in 0..di {
            for nj in 0..dj {
                buf[ni * dj + nj] = state.amps[rest + ni * si + nj * sj];
            }
        }
        let mixed = u.dot(&buf);
        for ni in 0..di {
            for nj in 0..dj {
                out[rest + ni * si + nj * sj] = mixed[ni * dj + nj];
            }
        }
    }
    Ok(FockState { space: space.clone(), amps: out })
}

/// Symmetrized quadrature moments of one mode, accumulated matrix-free from
/// ⟨a⟩, ⟨a²⟩ and ⟨a†a⟩ in the Q = a + a†, P = i(a† − a) convention.
pub fn quadrature_moments(state: &FockState, mode: usize) -> Result<ModeMoments> {
    let space = state.space();
    space.check_mode(mode)?;
    let stride = space.stride(mode);
    let mut a1 = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    let mut nbar = 0.0f64;
    for (idx, &amp) in state.amps.iter().enumerate() {
        let n = space.occupation(idx, mode);
        if n >= 1 {
            a1 += state.amps[idx - stride].conj() * C64::new((n as f64).sqrt(), 0.0) * amp;
        }
        if n >= 2 {
            a2 += state.amps[idx - 2 * stride].conj() * C64::new(((n * (n - 1)) as f64).sqrt(), 0.0) * amp;
        }
        nbar += (n as f64) * amp.norm_sqr();
    }
    let mean_q = 2.0 * a1.re;
    let mean_p = 2.0 * a1.im;
    Ok(ModeMoments {
        mean_q,
        mean_p,
        var_q: 2.0 * a2.re + 2.0 * nbar + 1.0 - mean_q * mean_q,
        var_p: -2.0 * a2.re + 2.0 * nbar + 1.0 - mean_p * mean_p,
        cov_qp: 2.0 * a2.im - mean_q * mean_p,
    })
}

/// Quadrature moments of the collective excitation φ = a†b/√N on a mode
/// pair, without assuming [φ, φ†] = 1: the symmetrized variance uses
/// ⟨φφ† + φ†φ⟩ directly, so the result is exact for any state that fits the
/// cutoffs.
pub fn collective_quadrature_moments(
    state: &FockState,
    mode_a: usize,
    mode_b: usize,
    n_atoms: u64,
) -> Result<ModeMoments> {
    let space = state.space();
    space.check_mode_pair(mode_a, mode_b)?;
    if n_atoms == 0 {
        return Err(Error::InvalidArgument("collective moments need at least one atom".into()));
    }
    let nf = n_atoms as f64;
    let (sa, sb) = (space.stride(mode_a), space.stride(mode_b));
    let (da, db) = (space.cutoff(mode_a), space.cutoff(mode_b));
    let mut f1 = C64::new(0.0, 0.0);
    let mut f2 = C64::new(0.0, 0.0);
    let mut lowering_mass = 0.0f64; // ⟨φ†φ⟩
    let mut raising_mass = 0.0f64; // ⟨φφ†⟩
    for (idx, &amp) in state.amps.iter().enumerate() {
        let na = space.occupation(idx, mode_a);
        let nb = space.occupation(idx, mode_b);
        if nb >= 1 && na + 1 < da {
            let c = (((na + 1) * nb) as f64 / nf).sqrt();
            f1 += state.amps[idx + sa - sb].conj() * C64::new(c, 0.0) * amp;
            lowering_mass += c * c * amp.norm_sqr();
            if nb >= 2 && na + 2 < da {
                let c2 = c * (((na + 2) * (nb - 1)) as f64 / nf).sqrt();
                f2 += state.amps[idx + 2 * sa - 2 * sb].conj() * C64::new(c2, 0.0) * amp;
            }
        }
        if na >= 1 && nb + 1 < db {
            let c = ((na * (nb + 1)) as f64 / nf).sqrt();
            raising_mass += c * c * amp.norm_sqr();
        }
    }
    let mean_q = 2.0 * f1.re;
    let mean_p = 2.0 * f1.im;
    let symmetric = lowering_mass + raising_mass;
    Ok(ModeMoments {
        mean_q,
        mean_p,
        var_q: 2.0 * f2.re + symmetric - mean_q * mean_q,
        var_p: -2.0 * f2.re + symmetric - mean_p * mean_p,
        cov_qp: 2.0 * f2.im - mean_q * mean_p,
    })
}

/// Result of a full number-basis run of the cloning pipeline.
#[derive(Debug, Clone)]
pub struct OracleCloneRun {
    /// Moments of the optical mode carrying the bright clone.
    pub bright: ModeMoments,
    /// Moments of the matter mode carrying the dark clone.
    pub dark: ModeMoments,
    /// Probability mass at or above the register's top two occupation
    /// levels, per mode, after evolution.
    pub truncation_mass: [f64; 3],
    /// Per-mode cutoffs the run used.
    pub cutoffs: [usize; 3],
}

/// Run the cloning pipeline on explicit state vectors: coherent signal ⊗
/// vacuum ancilla ⊗ bosonized matter, amplified by the squeezer dilation and
/// mixed by the beamsplitter, with both clone moments read off the final
/// state.
///
/// `cutoff` declares the register: inputs must fit it (coherent tail within
/// [`COHERENT_TAIL_TOL`], matter excitations within `cutoff − 1`) and the
/// reported truncation diagnostic is the mass found at or above its top two
/// levels.  Evolution itself runs with [`EVOLUTION_HEADROOM`] extra levels
/// per mode so that edge reflection does not contaminate the moments; both
/// the register and the padded working space must respect `cap`.
///
/// The matter mode carries the binomial excitation amplitudes of the
/// ensemble in the collective frame, so at large N its moments converge to
/// the collective-quadrature values the engine uses; at finite N the
/// difference is genuine physics, shrinking like 1/N.
pub fn oracle_clone_run(
    gamma: C64,
    ensemble: &SpinEnsemble,
    gain: f64,
    mu: f64,
    cutoff: usize,
    cap: usize,
) -> Result<OracleCloneRun> {
    let n = usize::try_from(ensemble.n_atoms())
        .map_err(|_| Error::InvalidArgument("atom number too large".into()))?;
    if cutoff < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} cannot hold {n} matter excitations; need at least {}",
            n + 1
        )));
    }
    // Validate the register the caller asked for first, so its cap error
    // wins over any headroom-related one.
    FockSpace::with_cap(&[cutoff, cutoff, cutoff], cap)?;
    let padded = cutoff + EVOLUTION_HEADROOM;
    let work = FockSpace::with_cap(&[padded, padded, padded], cap)?;

    let photon = coherent_amplitudes(padded, gamma)?;
    // The register itself, not just the padded working basis, must hold the
    // input signal: that is the user-facing contract on the cutoff.
    let register_mass: f64 = photon[..cutoff].iter().map(|z| z.norm_sqr()).sum();
    if 1.0 - register_mass > COHERENT_TAIL_TOL {
        return Err(Error::InvalidArgument(format!(
            "coherent amplitude |γ| = {:.3} loses mass {:.3e} above cutoff {cutoff}; raise the cutoff",
            gamma.norm(),
            1.0 - register_mass
        )));
    }
    let (frame_alpha, frame_beta) = ensemble.collective_frame();
    let spin = binomial_amplitudes(n, frame_alpha, frame_beta);
    let mut amps = vec![C64::new(0.0, 0.0); work.dim()];
    let (s_sig, s_mat) = (work.stride(SIGNAL), work.stride(MATTER));
    for (m, &dm) in photon.iter().enumerate() {
        for (k, &ck) in spin.iter().enumerate() {
            amps[m * s_sig + k * s_mat] = dm * ck;
        }
    }
    let state = FockState::from_amplitudes(&work, amps)?;

    let pair = FockSpace::with_cap(&[padded, padded], cap)?;
    let amplifier = two_mode_squeezer(&pair, 0, 1, gain)?;
    let state = apply_pair(&state, SIGNAL, ANCILLA, &amplifier)?;
    // Pair order (matter, signal): the beamsplitter then realizes
    // ψ → μψ − νφ, φ → μφ + νψ, matching the engine's mixer.
    let mixer = beamsplitter_unitary(&pair, 0, 1, mu)?;
    let state = apply_pair(&state, MATTER, SIGNAL, &mixer)?;

    let bright = quadrature_moments(&state, SIGNAL)?;
    let dark = quadrature_moments(&state, MATTER)?;
    // The diagnostic asks of the declared cutoff: how much mass ended up in
    // (or beyond) its top two levels?  Thanks to the headroom this includes
    // the amplitude that genuinely left the register, so it upper-bounds
    // what a bare cutoff-sized run would have mangled.
    let edge = cutoff.saturating_sub(2);
    let truncation_mass = [
        state.occupation_mass_above(SIGNAL, edge)?,
        state.occupation_mass_above(ANCILLA, edge)?,
        state.occupation_mass_above(MATTER, edge)?,
    ];
    Ok(OracleCloneRun { bright, dark, truncation_mass, cutoffs: [cutoff; 3] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloning::{run_cloning, CloneParams};
    use crate::linalg::unitarity_defect;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    #[allow(clippy::identity_op)]
    fn index_layout_is_row_major_last_mode_fastest() {
        let space = FockSpace::new(&[2, 3, 4]).unwrap();
        assert_eq!(space.dim(), 24);
        assert_eq!(space.index(&[1, 2, 3]), (1 * 3 + 2) * 4 + 3);
        assert_eq!(space.occupation(23, 0), 1);
        assert_eq!(space.occupation(23, 1), 2);
        assert_eq!(space.occupation(23, 2), 3);
        assert_eq!(space.total_occupation(23), 6);
        assert_eq!(space.stride(2), 1);
    }

    #[test]
    fn space_validation_rejects_small_cutoffs_and_large_products() {
        assert!(matches!(FockSpace::new(&[2, 1]), Err(Error::InvalidArgument(_))));
        assert!(matches!(FockSpace::new(&[]), Err(Error::InvalidArgument(_))));
        match FockSpace::with_cap(&[100, 100, 100], 500_000) {
            Err(Error::CapExceeded { required, cap }) => {
                assert_eq!(required, 1_000_000);
                assert_eq!(cap, 500_000);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn annihilation_lowers_number_states() {
        let space = FockSpace::new(&[4]).unwrap();
        let a = annihilation_op(&space, 0).unwrap();
        let one = FockState::basis_state(&space, &[1]).unwrap();
        let image = one.apply_matrix(&a).unwrap();
        assert!((image.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-15);
        let vac = FockState::vacuum(&space);
        assert!(vac.apply_matrix(&a).unwrap().norm() < 1e-15);
        let number = adjoint(&a).dot(&a);
        for n in 0..4 {
            let state = FockState::basis_state(&space, &[n]).unwrap();
            let expect = state.expectation(&number).unwrap();
            assert!((expect - c(n as f64, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn canonical_commutator_holds_below_the_truncation_edge() {
        let space = FockSpace::new(&[8]).unwrap();
        let a = annihilation_op(&space, 0).unwrap();
        let comm = commutator(&a, &adjoint(&a));
        let eye = Array2::from_diag(&Array1::from_elem(8, c(1.0, 0.0)));
        assert!(max_column_deviation(&comm, &eye, &space, 6) < 1e-14);
        // The very top column is where truncation bites, by 1 − cutoff.
        assert!((comm[[7, 7]] - c(-7.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn schwinger_algebra_closes_on_safe_columns() {
        let space = FockSpace::new(&[6, 5]).unwrap();
        let ops = schwinger_ops(&space, 0, 1).unwrap();
        let i = c(0.0, 1.0);
        let pairs = [
            (commutator(&ops.s_x, &ops.s_y), &ops.s_z),
            (commutator(&ops.s_y, &ops.s_z), &ops.s_x),
            (commutator(&ops.s_z, &ops.s_x), &ops.s_y),
        ];
        for (lhs, rhs) in pairs {
            let scaled = rhs * i;
            assert!(max_column_deviation(&lhs, &scaled, &space, 3) < 1e-12);
        }
        let two_sz = &ops.s_z * c(2.0, 0.0);
        assert!(max_column_deviation(&commutator(&ops.s_plus, &ops.s_minus), &two_sz, &space, 3) < 1e-12);
    }

    #[test]
    fn schwinger_diagonals_count_population_difference() {
        let space = FockSpace::new(&[4, 4]).unwrap();
        let ops = schwinger_ops(&space, 0, 1).unwrap();
        for (na, nb) in [(1, 0), (0, 1), (2, 3), (3, 3)] {
            let state = FockState::basis_state(&space, &[na, nb]).unwrap();
            let sz = state.expectation(&ops.s_z).unwrap();
            let s0 = state.expectation(&ops.s_0).unwrap();
            assert!((sz - c((nb as f64 - na as f64) / 2.0, 0.0)).norm() < 1e-14);
            assert!((s0 - c((na as f64 + nb as f64) / 2.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn ladder_coefficients_match_the_closed_form() {
        // Single excitation flip: S₊|s=1/2, s_z=−1/2⟩ = |+1/2⟩ with unit weight.
        assert!(ladder_action_check(1, -1).unwrap() < 1e-14);
        // Whole multiplets up to s = 6.
        for two_s in 0..=12u32 {
            let mut two_sz = -(two_s as i32);
            while two_sz <= two_s as i32 {
                assert!(
                    ladder_action_check(two_s, two_sz).unwrap() < 1e-12,
                    "ladder mismatch at 2s = {two_s}, 2s_z = {two_sz}"
                );
                two_sz += 2;
            }
        }
        assert!(ladder_action_check(2, 1).is_err());
        assert!(ladder_action_check(2, -4).is_err());
    }

    #[test]
    fn exact_lowering_acts_like_a_boson_at_low_density() {
        let two_s = 40u32; // N = 40 atoms
        let n = two_s as f64;
        let op = exact_hp_lowering(6, two_s).unwrap();
        let scale = 1.0 / n.sqrt();
        // k = 1 coefficient is exactly 1 after scaling; k = 2 deviates by O(1/N).
        assert!((op[[0, 1]].re * scale - 1.0).abs() < 1e-14);
        let k2 = op[[1, 2]].re * scale;
        assert!((k2 - 2.0f64.sqrt()).abs() < 2.0f64.sqrt() * 2.0 / n);
    }

    #[test]
    fn excitation_commutator_deviation_tracks_density() {
        let n_atoms = 20u64;
        let space = FockSpace::new(&[22, 6]).unwrap();
        let (phi, phi_dagger) = hp_excitation_ops(&space, 0, 1, n_atoms).unwrap();
        let comm = commutator(&phi, &phi_dagger);
        // Fully polarized ensemble: ⟨[φ, φ†]⟩ = 1 exactly.
        let ground = FockState::basis_state(&space, &[20, 0]).unwrap();
        let dev0 = (ground.expectation(&comm).unwrap() - c(1.0, 0.0)).norm();
        assert!(dev0 < 1e-12);
        // Two excitations: deviation 2·n_b/N, inside the 2 n_b/N + 2/N budget.
        let excited = FockState::basis_state(&space, &[18, 2]).unwrap();
        let dev2 = (excited.expectation(&comm).unwrap() - c(1.0, 0.0)).norm();
        assert!((dev2 - 0.2).abs() < 1e-12);
        assert!(dev2 <= 2.0 * 2.0 / 20.0 + 2.0 / 20.0);
        // A low-density superposition obeys the same budget with ⟨n_b⟩.
        let mut amps = vec![c(0.0, 0.0); space.dim()];
        for (w, (na, nb)) in [(0.6, (20, 0)), (0.55, (19, 1)), (0.45, (18, 2)), (0.37, (17, 3))] {
            amps[space.index(&[na, nb])] = c(w, 0.3 * w);
        }
        let state = FockState::from_amplitudes(&space, amps).unwrap();
        let number_b = {
            let b = annihilation_op(&space, 1).unwrap();
            adjoint(&b).dot(&b)
        };
        let mean_nb = state.expectation(&number_b).unwrap().re;
        let dev = (state.expectation(&comm).unwrap() - c(1.0, 0.0)).norm();
        assert!(dev <= 2.0 * mean_nb / 20.0 + 2.0 / 20.0);
    }

    #[test]
    fn binomial_state_amplitudes_are_the_frozen_values() {
        let space = FockSpace::new(&[3, 3]).unwrap();
        let state = coherent_spin_state(&space, 2, c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0))
            .unwrap();
        let expected = [(2usize, 0usize, 0.5), (1, 1, FRAC_1_SQRT_2), (0, 2, 0.5)];
        for (na, nb, val) in expected {
            let amp = state.amplitudes()[space.index(&[na, nb])];
            assert!((amp - c(val, 0.0)).norm() < 1e-14, "amplitude at |{na},{nb}⟩");
        }
        let ops = schwinger_ops(&space, 0, 1).unwrap();
        let sz = state.expectation(&ops.s_z).unwrap();
        assert!(sz.norm() < 1e-14);
    }

    #[test]
    fn polarized_spin_state_is_a_product_basis_state() {
        let space = FockSpace::new(&[5, 5, 4]).unwrap();
        let state = coherent_spin_state(&space, 4, c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let idx = space.index(&[4, 0, 0]);
        assert!((state.amplitudes()[idx] - c(1.0, 0.0)).norm() < 1e-14);
        let mass: f64 = state.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn collective_mean_excitation_matches_the_closed_form() {
        // ⟨a†b⟩/√N = √N ᾱβ; at N = 10, α = β = 1/√2 this is √10/2.
        let space = FockSpace::new(&[11, 11]).unwrap();
        let state =
            coherent_spin_state(&space, 10, c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0)).unwrap();
        let (phi, _) = hp_excitation_ops(&space, 0, 1, 10).unwrap();
        let mean = state.expectation(&phi).unwrap();
        assert!((mean - c(10.0f64.sqrt() / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn spin_state_construction_rejects_undersized_cutoffs() {
        let space = FockSpace::new(&[4, 4]).unwrap();
        let err = coherent_spin_state(&space, 4, c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        let tight = FockSpace::new(&[3, 3, 4]).unwrap();
        let err = coherent_spin_state(&tight, 2, c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0));
        assert!(matches!(err, Err(Error::InvalidArgument(_))), "coherent tail must be caught");
    }

    #[test]
    fn squeezer_at_unit_gain_is_the_identity() {
        let space = FockSpace::new(&[5, 5]).unwrap();
        let u = two_mode_squeezer(&space, 0, 1, 1.0).unwrap();
        let eye = Array2::from_diag(&Array1::from_elem(space.dim(), c(1.0, 0.0)));
        assert!(crate::linalg::max_abs_diff(&u, &eye) < 1e-14);
    }

    #[test]
    fn squeezer_and_beamsplitter_are_unitary() {
        let space = FockSpace::new(&[12, 12]).unwrap();
        let u = two_mode_squeezer(&space, 0, 1, 2.0).unwrap();
        assert!(unitarity_defect(&u) < 1e-10);
        let b = beamsplitter_unitary(&space, 0, 1, FRAC_1_SQRT_2).unwrap();
        assert!(unitarity_defect(&b) < 1e-10);
        assert!(two_mode_squeezer(&space, 0, 1, 0.5).is_err());
        assert!(beamsplitter_unitary(&space, 0, 1, 1.2).is_err());
    }

    #[test]
    fn amplified_vacuum_reaches_the_analytic_photon_number() {
        // G = 2 on vacuum: ⟨n⟩ = G − 1 = 1 in both modes, up to truncation.
        let space = FockSpace::new(&[25, 25]).unwrap();
        let u = two_mode_squeezer(&space, 0, 1, 2.0).unwrap();
        let state = FockState::vacuum(&space).apply_matrix(&u).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
        for mode in [0, 1] {
            let m = quadrature_moments(&state, mode).unwrap();
            let nbar = (m.var_q + m.var_p - 2.0) / 4.0;
            assert!((nbar - 1.0).abs() < 1e-5, "mode {mode} photon number {nbar}");
        }
    }

    #[test]
    fn amplified_vacuum_variance_converges_with_cutoff() {
        // The marginal of each squeezer output mode is thermal with
        // Var(Q) = Var(P) = 2G − 1 = 3.  The geometric photon tail decays
        // by half per level, so a cutoff of 45 leaves ~1e-11 of error.
        let space = FockSpace::new(&[45, 45]).unwrap();
        let u = two_mode_squeezer(&space, 0, 1, 2.0).unwrap();
        let state = FockState::vacuum(&space).apply_matrix(&u).unwrap();
        let m = quadrature_moments(&state, 0).unwrap();
        assert!(m.mean_q.abs() < 1e-12);
        assert!(m.mean_p.abs() < 1e-12);
        assert!((m.var_q - 3.0).abs() < 1e-8);
        assert!((m.var_p - 3.0).abs() < 1e-8);
        assert!(m.cov_qp.abs() < 1e-12);
    }

    #[test]
    fn squeezer_heisenberg_action_in_the_low_occupation_corner() {
        // The corner deviation shrinks by tanh²r = 1/2 per extra level;
        // cutoff 32 puts it near 2e-7 for occupations up to two.  Columns of
        // U†a₁U are assembled by matrix-vector products so the check stays
        // cheap at this cutoff.
        let space = FockSpace::new(&[32, 32]).unwrap();
        let gain = 2.0;
        let u = two_mode_squeezer(&space, 0, 1, gain).unwrap();
        let u_dag = adjoint(&u);
        let a1 = annihilation_op(&space, 0).unwrap();
        let a2 = annihilation_op(&space, 1).unwrap();
        let rhs = &a1 * c(gain.sqrt(), 0.0) + &adjoint(&a2) * c((gain - 1.0).sqrt(), 0.0);
        let corner: Vec<usize> = (0..space.dim()).filter(|&i| space.total_occupation(i) <= 2).collect();
        let mut worst = 0.0f64;
        for &col in &corner {
            let mut unit: Array1<C64> = Array1::zeros(space.dim());
            unit[col] = c(1.0, 0.0);
            let lhs_col = u_dag.dot(&a1.dot(&u.dot(&unit)));
            for &row in &corner {
                worst = worst.max((lhs_col[row] - rhs[[row, col]]).norm());
            }
        }
        assert!(worst < 1e-6, "corner deviation {worst}");
    }

    #[test]
    fn beamsplitter_splits_a_single_photon_evenly() {
        let space = FockSpace::new(&[3, 3]).unwrap();
        let eye = beamsplitter_unitary(&space, 0, 1, 1.0).unwrap();
        let id = Array2::from_diag(&Array1::from_elem(space.dim(), c(1.0, 0.0)));
        assert!(crate::linalg::max_abs_diff(&eye, &id) < 1e-14);

        let u = beamsplitter_unitary(&space, 0, 1, FRAC_1_SQRT_2).unwrap();
        let photon = FockState::basis_state(&space, &[1, 0]).unwrap();
        let out = photon.apply_matrix(&u).unwrap();
        let kept = out.amplitudes()[space.index(&[1, 0])];
        let moved = out.amplitudes()[space.index(&[0, 1])];
        assert!((kept - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((moved - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((kept.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((moved.norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn beamsplitter_heisenberg_action_is_exact_on_safe_columns() {
        let space = FockSpace::new(&[10, 10]).unwrap();
        let mu = 0.6f64;
        let nu = (1.0 - mu * mu).sqrt();
        let u = beamsplitter_unitary(&space, 0, 1, mu).unwrap();
        let a1 = annihilation_op(&space, 0).unwrap();
        let a2 = annihilation_op(&space, 1).unwrap();
        let lhs1 = adjoint(&u).dot(&a1).dot(&u);
        let rhs1 = &a1 * c(mu, 0.0) + &a2 * c(nu, 0.0);
        assert!(max_column_deviation(&lhs1, &rhs1, &space, 8) < 1e-12);
        let lhs2 = adjoint(&u).dot(&a2).dot(&u);
        let rhs2 = &a2 * c(mu, 0.0) - &a1 * c(nu, 0.0);
        assert!(max_column_deviation(&lhs2, &rhs2, &space, 8) < 1e-12);
    }

    #[test]
    fn plain_moments_recover_vacuum_and_coherent_values() {
        let space = FockSpace::new(&[20]).unwrap();
        let vac = quadrature_moments(&FockState::vacuum(&space), 0).unwrap();
        for (got, want) in [
            (vac.mean_q, 0.0),
            (vac.mean_p, 0.0),
            (vac.var_q, 1.0),
            (vac.var_p, 1.0),
            (vac.cov_qp, 0.0),
        ] {
            assert!((got - want).abs() < 1e-14);
        }
        let state = coherent_state(&space, 0, c(0.3, 0.4)).unwrap();
        let m = quadrature_moments(&state, 0).unwrap();
        assert!((m.mean_q - 0.6).abs() < 1e-12);
        assert!((m.mean_p - 0.8).abs() < 1e-12);
        assert!((m.var_q - 1.0).abs() < 1e-12);
        assert!((m.var_p - 1.0).abs() < 1e-12);
        assert!(m.cov_qp.abs() < 1e-12);
    }

    #[test]
    fn collective_moments_match_the_ensemble_formulas() {
        let n = 12u64;
        let space = FockSpace::new(&[13, 13]).unwrap();
        for (alpha2, phi) in [(0.5, 0.0), (0.3, 1.047), (0.7, -1.2), (0.5, 0.785)] {
            let ens = SpinEnsemble::from_populations(n, alpha2, phi).unwrap();
            let expected = crate::cloning::spin_mode_moments(&ens);
            let (fa, fb) = ens.collective_frame();
            let state = coherent_spin_state(&space, n, fa, fb, c(0.0, 0.0)).unwrap();
            let got = collective_quadrature_moments(&state, 0, 1, n).unwrap();
            for (g, e, label) in [
                (got.mean_q, expected.mean_q, "meanQ"),
                (got.mean_p, expected.mean_p, "meanP"),
                (got.var_q, expected.var_q, "varQ"),
                (got.var_p, expected.var_p, "varP"),
                (got.cov_qp, expected.cov_qp, "covQP"),
            ] {
                assert!((g - e).abs() < 1e-12, "{label} at ({alpha2}, {phi}): {g} vs {e}");
            }
        }
    }

    #[test]
    fn oracle_identity_run_returns_vacuum_clones() {
        let run = oracle_clone_run(c(0.0, 0.0), &SpinEnsemble::ground(), 1.0, 1.0, 6, DEFAULT_AMPLITUDE_CAP)
            .unwrap();
        for m in [&run.bright, &run.dark] {
            assert!(m.mean_q.abs() < 1e-12);
            assert!(m.mean_p.abs() < 1e-12);
            assert!((m.var_q - 1.0).abs() < 1e-12);
            assert!((m.var_p - 1.0).abs() < 1e-12);
        }
        assert!(run.truncation_mass.iter().all(|&m| m < 1e-12));
    }

    #[test]
    fn oracle_agrees_with_the_engine_for_a_coherent_signal() {
        let gamma = c(1.0, 0.0);
        let run = oracle_clone_run(gamma, &SpinEnsemble::ground(), 2.0, FRAC_1_SQRT_2, 30, DEFAULT_AMPLITUDE_CAP)
            .unwrap();
        // Polarized matter and unit-variance signal: both clones should sit at
        // mean (2γ, 0) with variance V + 1 = 2.
        assert!((run.bright.mean_q - 2.0).abs() < 1e-6);
        assert!(run.bright.mean_p.abs() < 1e-6);
        assert!((run.bright.var_q - 2.0).abs() < 1e-6);
        assert!((run.bright.var_p - 2.0).abs() < 1e-6);

        let cfg = CloneParams { gamma, ..CloneParams::default() };
        let report = run_cloning(&cfg).unwrap();
        for (oracle, engine) in [(&run.bright, &report.bright), (&run.dark, &report.dark)] {
            for (o, e) in [
                (oracle.mean_q, engine.mean_q),
                (oracle.mean_p, engine.mean_p),
                (oracle.var_q, engine.var_q),
                (oracle.var_p, engine.var_p),
                (oracle.cov_qp, engine.cov_qp),
            ] {
                assert!((o - e).abs() < 1e-6, "oracle {o} vs engine {e}");
            }
        }
    }

    #[test]
    fn oracle_clone_variance_plateaus_at_finite_atom_number() {
        // With half the population excited the bosonized matter marginal is
        // not the collective mode: its variance converges to 17/8 as N grows,
        // not to the engine's 7/4.  The deviation from 17/8 must shrink
        // roughly like 1/N.
        let target = 17.0 / 8.0;
        let mut devs = Vec::new();
        for n in [12u64, 24] {
            let ens = SpinEnsemble::from_populations(n, 0.5, std::f64::consts::FRAC_PI_4).unwrap();
            let run = oracle_clone_run(c(0.0, 0.0), &ens, 2.0, FRAC_1_SQRT_2, 26, DEFAULT_AMPLITUDE_CAP)
                .unwrap();
            devs.push((run.bright.var_q - target).abs());
        }
        assert!(devs[0] < 0.02, "N = 12 deviation {}", devs[0]);
        assert!(devs[1] < 0.62 * devs[0], "deviation must shrink ~1/N: {devs:?}");
    }

    #[test]
    fn truncation_mass_is_reported_and_small_at_working_cutoff() {
        let run = oracle_clone_run(c(0.0, 0.0), &SpinEnsemble::ground(), 2.0, FRAC_1_SQRT_2, 30, DEFAULT_AMPLITUDE_CAP)
            .unwrap();
        for &mass in &run.truncation_mass {
            assert!(mass < 1e-8, "top-two-level mass {mass}");
        }
        // The amplified modes genuinely populate high levels; the diagnostic
        // must see that rather than report an identically zero placeholder.
        assert!(run.truncation_mass[0] > 0.0);
        assert!(run.truncation_mass[1] > 0.0);
    }

    #[test]
    fn undersized_matter_cutoff_is_rejected() {
        let ens = SpinEnsemble::from_populations(8, 0.5, 0.0).unwrap();
        let err = oracle_clone_run(c(0.0, 0.0), &ens, 2.0, FRAC_1_SQRT_2, 8, DEFAULT_AMPLITUDE_CAP);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn apply_pair_rejects_mismatched_operators() {
        let space = FockSpace::new(&[3, 3, 3]).unwrap();
        let state = FockState::vacuum(&space);
        let wrong = Array2::<C64>::zeros((4, 4));
        assert!(matches!(
            apply_pair(&state, 0, 1, &wrong),
            Err(Error::DimensionMismatch { expected: 9, got: 4 })
        ));
    }
}
