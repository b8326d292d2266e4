//! Closed-form physics of a planar cavity strongly coupled to a two-level
//! medium: photon dispersion, detuning, Hopfield coefficients, polariton
//! branch energies, and strong-coupling diagnostics.
//!
//! The cavity quantizes the transverse photon wave vector to k⊥ = πm/L, so
//! the photon energy disperses with the in-plane component k∥ as
//! E_ph = ħc·√(k⊥² + k∥²). Coupling of strength g to the atomic transition
//! E_at hybridizes photon ψ and matter φ into two polariton branches
//! separated by at least 2g, with mode fractions given by the Hopfield
//! coefficients (μ, ν) as functions of the detuning δ = E_at − E_ph(k∥).
//!
//! Everything here works in natural units by default (ħ = c = 1, energies
//! in units of g); all constants are explicit fields and can be overridden
//! for dimensional inputs.

use serde::Serialize;

use crate::gaussian::BogoliubovMap;
use crate::{Error, Result};

/// Default threshold for [`strong_coupling_check`]: the cooperative
/// frequency must beat the coherence decay rate by this factor.
pub const STRONG_COUPLING_FACTOR: f64 = 10.0;

/// Fraction of k⊥ beyond which the quadratic (paraxial) dispersion is
/// flagged as untrustworthy.
pub const PARAXIAL_LIMIT: f64 = 0.3;

/// Static parameters of the cavity + two-level medium.
///
/// Invariants (enforced by the constructors): `g > 0`, `l_cav > 0`,
/// `mode_index ≥ 1`, and the physical constants positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Atomic transition energy.
    pub e_at: f64,
    /// Photon–matter coupling energy.
    pub g: f64,
    /// ħc in the chosen unit system (1 in natural units).
    pub hbar_c: f64,
    /// Cavity length along the quantized axis.
    pub l_cav: f64,
    /// Transverse mode number m ≥ 1 selecting k⊥ = πm/L.
    pub mode_index: u32,
    /// Speed of light (kept separate for rate computations).
    pub c_light: f64,
    /// ħ (kept separate for rate computations).
    pub hbar: f64,
}

impl CavityParams {
    /// Natural-unit parameter set (ħ = c = 1).
    pub fn new(e_at: f64, g: f64, l_cav: f64, mode_index: u32) -> Result<Self> {
        let p = Self {
            e_at,
            g,
            hbar_c: 1.0,
            l_cav,
            mode_index,
            c_light: 1.0,
            hbar: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Cavity tuned so the k∥ = 0 photon sits exactly on the atomic line:
    /// L = πm·ħc/E_at, hence δ(0) = 0.
    pub fn resonant(e_at: f64, g: f64, mode_index: u32) -> Result<Self> {
        if e_at <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "resonant cavity needs a positive transition energy, got {e_at}"
            )));
        }
        let l_cav = std::f64::consts::PI * f64::from(mode_index) / e_at;
        Self::new(e_at, g, l_cav, mode_index)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coupling must be positive, got {}",
                self.g
            )));
        }
        if !(self.l_cav > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cavity length must be positive, got {}",
                self.l_cav
            )));
        }
        if self.mode_index < 1 {
            return Err(Error::InvalidArgument(
                "mode index must be at least 1".into(),
            ));
        }
        if !(self.hbar_c > 0.0 && self.c_light > 0.0 && self.hbar > 0.0) {
            return Err(Error::InvalidArgument(
                "physical constants must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Quantized transverse wave vector k⊥ = πm/L.
pub fn k_perp(params: &CavityParams) -> f64 {
    std::f64::consts::PI * f64::from(params.mode_index) / params.l_cav
}

/// Which form of the photon dispersion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonDispersion {
    /// ħc·√(k⊥² + k∥²).
    Exact,
    /// ħc·(k⊥ + k∥²/(2k⊥)), the small-angle expansion.
    Paraxial,
}

/// Photon energy together with a validity flag for the paraxial form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonEnergy {
    pub value: f64,
    /// Set in paraxial mode when k∥ > 0.3·k⊥, where the quadratic
    /// expansion is no longer reliable. Never set in exact mode.
    pub paraxial_warning: bool,
}

/// Cavity photon energy at in-plane wave vector `k_par ≥ 0`.
pub fn photon_energy(
    k_par: f64,
    params: &CavityParams,
    mode: PhotonDispersion,
) -> Result<PhotonEnergy> {
    if !(k_par >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "in-plane wave vector must be nonnegative, got {k_par}"
        )));
    }
    let kp = k_perp(params);
    match mode {
        PhotonDispersion::Exact => Ok(PhotonEnergy {
            value: params.hbar_c * kp.hypot(k_par),
            paraxial_warning: false,
        }),
        PhotonDispersion::Paraxial => Ok(PhotonEnergy {
            value: params.hbar_c * (kp + k_par * k_par / (2.0 * kp)),
            paraxial_warning: k_par > PARAXIAL_LIMIT * kp,
        }),
    }
}

/// Detuning δ = E_at − E_ph(k∥) with the exact photon dispersion.
pub fn detuning(k_par: f64, params: &CavityParams) -> Result<f64> {
    Ok(params.e_at - photon_energy(k_par, params, PhotonDispersion::Exact)?.value)
}

/// Hopfield coefficients of the upper polariton at detuning δ.
///
/// `mu` weighs the photon mode and `nu` the matter mode; both are stored
/// nonnegative (the convention the cloning protocol consumes), and
/// [`nu_literal`](Self::nu_literal) recovers the signed coefficient that
/// falls out of diagonalizing the coupling matrix in the
/// Φ_ψ = μψ − νφ parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfieldPair {
    pub mu: f64,
    pub nu: f64,
    /// The detuning this pair was computed at.
    pub delta: f64,
}

impl HopfieldPair {
    /// Matter coefficient in the sign convention of the diagonalizing
    /// rotation written as Φ_ψ = μψ − νφ; always ≤ 0.
    pub fn nu_literal(&self) -> f64 {
        -self.nu
    }

    /// Normalization defect |μ² + ν² − 1|.
    pub fn normalization_defect(&self) -> f64 {
        (self.mu * self.mu + self.nu * self.nu - 1.0).abs()
    }
}

/// Hopfield coefficients at detuning `delta` for coupling `g > 0`:
/// μ² = 2g²/(R·D) and ν² = D/(2R) with R = √(δ² + 4g²) and D = δ + R,
/// evaluated in a cancellation-free form for δ < 0.
pub fn hopfield(delta: f64, g: f64) -> Result<HopfieldPair> {
    if !(g > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coupling must be positive, got {g}"
        )));
    }
    if !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "detuning must be finite, got {delta}"
        )));
    }
    let r = delta.hypot(2.0 * g);
    // D = δ + R loses precision when δ → −∞; R² − δ² = 4g² rewrites it.
    let d = if delta >= 0.0 {
        delta + r
    } else {
        4.0 * g * g / (r - delta)
    };
    let mu2 = 2.0 * g * g / (r * d);
    let nu2 = d / (2.0 * r);
    Ok(HopfieldPair {
        mu: mu2.sqrt(),
        nu: nu2.sqrt(),
        delta,
    })
}

/// Upper and lower polariton energies at `k_par`:
/// E_± = ½[E_at + E_ph ± √((E_at − E_ph)² + 4g²)].
pub fn branch_energies(k_par: f64, params: &CavityParams) -> Result<(f64, f64)> {
    let e_ph = photon_energy(k_par, params, PhotonDispersion::Exact)?.value;
    let delta = params.e_at - e_ph;
    let split = delta.hypot(2.0 * params.g);
    let mid = 0.5 * (params.e_at + e_ph);
    Ok((mid + 0.5 * split, mid - 0.5 * split))
}

/// One sample of the polariton dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionPoint {
    pub k_par: f64,
    pub e_ph: f64,
    pub e_upper: f64,
    pub e_lower: f64,
    pub delta: f64,
    /// Photon fraction μ² of the upper branch at this detuning.
    pub mu2: f64,
}

/// Sample the two polariton branches on a uniform grid over [0, k_par_max].
pub fn dispersion_curve(
    k_par_max: f64,
    n_points: usize,
    params: &CavityParams,
) -> Result<Vec<DispersionPoint>> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "dispersion grid needs at least 2 points, got {n_points}"
        )));
    }
    params.validate()?;
    let mut out = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let k_par = k_par_max * (i as f64) / ((n_points - 1) as f64);
        let e_ph = photon_energy(k_par, params, PhotonDispersion::Exact)?.value;
        let delta = params.e_at - e_ph;
        let (e_upper, e_lower) = branch_energies(k_par, params)?;
        let hp = hopfield(delta, params.g)?;
        out.push(DispersionPoint {
            k_par,
            e_ph,
            e_upper,
            e_lower,
            delta,
            mu2: hp.mu * hp.mu,
        });
    }
    Ok(out)
}

/// Cooperative frequency ω_c = √(2π d² ω₀ n / ħ) of a medium with dipole
/// moment d, transition frequency ω₀ and number density n. Units are taken
/// as the caller provides them (the 2π form assumes a Gaussian unit
/// system); no conversion is attempted.
pub fn cooperative_frequency(d: f64, omega0: f64, n_density: f64, hbar: f64) -> Result<f64> {
    for (name, v) in [
        ("dipole moment", d),
        ("transition frequency", omega0),
        ("number density", n_density),
        ("hbar", hbar),
    ] {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok((2.0 * std::f64::consts::PI * d * d * omega0 * n_density / hbar).sqrt())
}

/// Outcome of the strong-coupling diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongCoupling {
    /// True iff ω_c·τ_coh ≥ factor (inclusive at the boundary).
    pub satisfied: bool,
    /// The dimensionless product ω_c·τ_coh.
    pub ratio: f64,
}

/// Check ω_c·τ_coh against `factor` (conventionally
/// [`STRONG_COUPLING_FACTOR`]): collective coupling must outrun coherence
/// decay for the polariton picture to apply.
pub fn strong_coupling_check(omega_c: f64, tau_coh: f64, factor: f64) -> Result<StrongCoupling> {
    if !(tau_coh > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coherence time must be positive, got {tau_coh}"
        )));
    }
    let ratio = omega_c * tau_coh;
    Ok(StrongCoupling {
        satisfied: ratio >= factor,
        ratio,
    })
}

/// The passive two-mode rotation with this pair's coefficients in the
/// literal diagonalizing sign convention, acting on modes (psi, phi) of a
/// register with `modes` modes.
pub fn diagonalizing_mixer(
    pair: &HopfieldPair,
    modes: usize,
    psi: usize,
    phi: usize,
) -> Result<BogoliubovMap> {
    BogoliubovMap::mixer(modes, psi, phi, pair.mu, pair.nu_literal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn natural_cavity() -> CavityParams {
        CavityParams::resonant(5.0, 1.0, 1).unwrap()
    }

    #[test]
    fn k_perp_is_pi_m_over_length() {
        let p = CavityParams::new(1.0, 1.0, PI, 1).unwrap();
        assert!((k_perp(&p) - 1.0).abs() < 1e-15);
        let p3 = CavityParams::new(1.0, 1.0, PI, 3).unwrap();
        assert!((k_perp(&p3) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn resonant_length_puts_photon_on_the_atomic_line() {
        let p = natural_cavity();
        assert!(detuning(0.0, &p).unwrap().abs() < 1e-12);
        let e0 = photon_energy(0.0, &p, PhotonDispersion::Exact).unwrap();
        assert!((e0.value - p.e_at).abs() < 1e-12);
    }

    #[test]
    fn dispersion_forms_agree_at_normal_incidence() {
        let p = natural_cavity();
        let exact = photon_energy(0.0, &p, PhotonDispersion::Exact).unwrap();
        let parax = photon_energy(0.0, &p, PhotonDispersion::Paraxial).unwrap();
        assert_eq!(exact.value, parax.value);
        assert!(!exact.paraxial_warning);
        assert!(!parax.paraxial_warning);
    }

    #[test]
    fn paraxial_error_is_fourth_order() {
        // Quartic leading error: halving k∥ shrinks the defect ~16×.
        let p = natural_cavity();
        let kp = k_perp(&p);
        let err = |x: f64| {
            let e = photon_energy(x * kp, &p, PhotonDispersion::Exact)
                .unwrap()
                .value;
            let q = photon_energy(x * kp, &p, PhotonDispersion::Paraxial)
                .unwrap()
                .value;
            (q - e).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(
            (15.5..=16.5).contains(&ratio),
            "error ratio {ratio} not ~16"
        );
    }

    #[test]
    fn paraxial_warning_threshold() {
        let p = natural_cavity();
        let kp = k_perp(&p);
        let inside = photon_energy(0.2 * kp, &p, PhotonDispersion::Paraxial).unwrap();
        assert!(!inside.paraxial_warning);
        let outside = photon_energy(0.5 * kp, &p, PhotonDispersion::Paraxial).unwrap();
        assert!(outside.paraxial_warning);
        let exact = photon_energy(0.5 * kp, &p, PhotonDispersion::Exact).unwrap();
        assert!(!exact.paraxial_warning);
        assert!(photon_energy(-0.1, &p, PhotonDispersion::Exact).is_err());
    }

    #[test]
    fn resonant_hopfield_is_half_and_half() {
        let hp = hopfield(0.0, 1.0).unwrap();
        assert!((hp.mu * hp.mu - 0.5).abs() < 1e-12);
        assert!((hp.nu * hp.nu - 0.5).abs() < 1e-12);
        assert!(hp.mu >= 0.0);
        assert!(hp.nu_literal() <= 0.0);
    }

    #[test]
    fn far_detuned_limits() {
        // Far below the photon line the upper branch is photon-like; far
        // above it is matter-like.
        let below = hopfield(-100.0, 1.0).unwrap();
        assert!(1.0 - below.mu * below.mu <= 1e-3);
        let above = hopfield(100.0, 1.0).unwrap();
        assert!(above.mu * above.mu <= 1e-3);
        assert!(above.nu * above.nu >= 1.0 - 1e-3);
    }

    #[test]
    fn hopfield_rejects_nonpositive_coupling() {
        assert!(hopfield(0.0, 0.0).is_err());
        assert!(hopfield(0.0, -1.0).is_err());
        assert!(hopfield(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn known_hopfield_point() {
        // δ = g = 1 diagonalizes [[0, 1], [1, 1]]: eigenvalues (1 ± √5)/2,
        // photon weight of the upper branch 0.52573…
        let hp = hopfield(1.0, 1.0).unwrap();
        assert!((hp.mu - 0.525_731_112_119_133_6).abs() < 1e-12);
        assert!((hp.nu - 0.850_650_808_352_039_9).abs() < 1e-12);
    }

    #[test]
    fn branch_energies_at_resonance() {
        let p = natural_cavity();
        let (upper, lower) = branch_energies(0.0, &p).unwrap();
        assert!((upper - (p.e_at + p.g)).abs() < 1e-12);
        assert!((lower - (p.e_at - p.g)).abs() < 1e-12);
        assert!((upper - lower - 2.0 * p.g).abs() < 1e-12);
    }

    #[test]
    fn lower_branch_minimum_sits_at_normal_incidence() {
        let p = natural_cavity();
        let curve = dispersion_curve(3.0 * k_perp(&p), 1001, &p).unwrap();
        let min = curve
            .iter()
            .min_by(|a, b| a.e_lower.partial_cmp(&b.e_lower).unwrap())
            .unwrap();
        assert_eq!(min.k_par, 0.0);
        let min_gap = curve
            .iter()
            .map(|pt| pt.e_upper - pt.e_lower)
            .fold(f64::INFINITY, f64::min);
        assert!((min_gap - 2.0 * p.g).abs() / (2.0 * p.g) < 1e-9);
    }

    #[test]
    fn dispersion_curve_shape_and_bounds() {
        let p = natural_cavity();
        assert!(dispersion_curve(1.0, 1, &p).is_err());
        let curve = dispersion_curve(2.0, 101, &p).unwrap();
        assert_eq!(curve.len(), 101);
        let (u0, l0) = branch_energies(0.0, &p).unwrap();
        assert_eq!(curve[0].e_upper, u0);
        assert_eq!(curve[0].e_lower, l0);
        for w in curve.windows(2) {
            assert!(w[1].e_upper > w[0].e_upper, "upper branch not monotonic");
        }
        for pt in &curve {
            assert!(pt.e_upper - pt.e_lower >= 2.0 * p.g - 1e-12);
            assert!((0.0..=1.0).contains(&pt.mu2));
        }
    }

    #[test]
    fn hopfield_mixer_diagonalizes_the_coupling_matrix() {
        // Conjugating [[E_ph, g], [g, E_at]] by the rotation built from the
        // literal-sign coefficients must land on diag(E_upper, E_lower).
        for (e_ph, e_at, g) in [(5.0, 5.0, 1.0), (4.0, 5.0, 1.0), (5.5, 4.0, 0.7)] {
            let delta = e_at - e_ph;
            let hp = hopfield(delta, g).unwrap();
            let mix = diagonalizing_mixer(&hp, 2, 0, 1).unwrap();
            let a = mix.a();
            let u = [
                [a[(0, 0)].re, a[(0, 1)].re],
                [a[(1, 0)].re, a[(1, 1)].re],
            ];
            let h = [[e_ph, g], [g, e_at]];
            let mut t = [[0.0_f64; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            t[i][j] += u[i][k] * h[k][l] * u[j][l];
                        }
                    }
                }
            }
            let split = delta.hypot(2.0 * g);
            let upper = 0.5 * (e_at + e_ph + split);
            let lower = 0.5 * (e_at + e_ph - split);
            assert!((t[0][0] - upper).abs() / upper.abs() < 1e-10);
            assert!((t[1][1] - lower).abs() / lower.abs() < 1e-10);
            assert!(t[0][1].abs() < 1e-10 && t[1][0].abs() < 1e-10);
        }
    }

    #[test]
    fn cooperative_frequency_examples() {
        let w = cooperative_frequency(1.0, 1.0, 1.0, 2.0 * PI).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        let base = cooperative_frequency(1.0, 2.0, 3.0, 1.0).unwrap();
        let denser = cooperative_frequency(1.0, 2.0, 12.0, 1.0).unwrap();
        assert!((denser - 2.0 * base).abs() < 1e-12);
        let stronger = cooperative_frequency(2.0, 2.0, 3.0, 1.0).unwrap();
        assert!((stronger - 2.0 * base).abs() < 1e-12);
        assert!(cooperative_frequency(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn strong_coupling_boundary_is_inclusive() {
        let yes = strong_coupling_check(10.0, 10.0, STRONG_COUPLING_FACTOR).unwrap();
        assert!(yes.satisfied);
        assert!((yes.ratio - 100.0).abs() < 1e-12);
        let exactly = strong_coupling_check(10.0, 1.0, STRONG_COUPLING_FACTOR).unwrap();
        assert!(exactly.satisfied);
        let no = strong_coupling_check(1.0, 1.0, STRONG_COUPLING_FACTOR).unwrap();
        assert!(!no.satisfied);
        assert!(strong_coupling_check(1.0, 0.0, STRONG_COUPLING_FACTOR).is_err());
    }

    proptest! {
        #[test]
        fn hopfield_is_normalized_everywhere(delta in -1e4..1e4, log_g in -3.0..3.0_f64) {
            let g = 10.0_f64.powf(log_g);
            let hp = hopfield(delta, g).unwrap();
            prop_assert!(hp.normalization_defect() <= 1e-12);
            prop_assert!(hp.mu >= 0.0);
        }

        #[test]
        fn branch_sum_and_product_identities(k_par in 0.0..10.0, e_at in 0.5..20.0, g in 0.05..5.0) {
            let p = CavityParams::new(e_at, g, 2.0, 1).unwrap();
            let e_ph = photon_energy(k_par, &p, PhotonDispersion::Exact).unwrap().value;
            let (upper, lower) = branch_energies(k_par, &p).unwrap();
            let sum_scale = (e_at + e_ph).abs().max(1.0);
            prop_assert!(((upper + lower) - (e_at + e_ph)).abs() / sum_scale < 1e-10);
            let prod = e_at * e_ph - g * g;
            let prod_scale = prod.abs().max(1.0);
            prop_assert!((upper * lower - prod).abs() / prod_scale < 1e-10);
        }

        #[test]
        fn transformed_mode_energies_match_branches(delta in -8.0..8.0, g in 0.1..4.0) {
            let e_ph = 10.0;
            let e_at = e_ph + delta;
            let hp = hopfield(delta, g).unwrap();
            let mix = diagonalizing_mixer(&hp, 2, 0, 1).unwrap();
            let a = mix.a();
            let (c_ph, c_at) = (a[(0, 0)].re, a[(0, 1)].re);
            let upper_energy = c_ph * c_ph * e_ph + c_at * c_at * e_at + 2.0 * c_ph * c_at * g;
            let split = delta.hypot(2.0 * g);
            let upper = 0.5 * (e_at + e_ph + split);
            prop_assert!((upper_energy - upper).abs() / upper.abs() < 1e-10);
        }
    }
}
