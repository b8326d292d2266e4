//! Cross-module validation suite: every check pits a closed-form value or a
//! covariance-engine result against the truncated number-basis oracle.
//!
//! The suite is deterministic for a given seed — randomized cutoffs, basis
//! states and ensemble draws all come from one seeded stream — so a rerun
//! with the same configuration reproduces every reported number bit for bit.
//!
//! Checks fall into two classes with different tolerance behavior:
//!
//! * **identity checks** (commutators, ladder coefficients, unitarity, norm
//!   preservation) carry fixed tolerances near round-off; they do not move
//!   with the configured comparison tolerance;
//! * **comparison checks** (engine vs oracle moments) use the configured
//!   `comparison_tol`, since their honest error floor is truncation, not
//!   arithmetic.  Tightening the tolerance below that floor makes them fail,
//!   which is exactly what a tolerance override is for.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cloning::{run_cloning, CloneParams, SpinEnsemble};
use crate::fock::{
    annihilation_op, beamsplitter_unitary, coherent_state, coherent_spin_state,
    collective_quadrature_moments, commutator, exact_hp_lowering, hp_excitation_ops,
    ladder_action_check, max_column_deviation, oracle_clone_run, quadrature_moments,
    schwinger_ops, two_mode_squeezer, FockSpace, FockState, DEFAULT_AMPLITUDE_CAP,
};
use crate::gaussian::ModeMoments;
use crate::linalg::{adjoint, unitarity_defect};
use crate::{Error, Result};

/// Finite-N agreement envelope: engine and oracle moments must agree to
/// max(comparison_tol, C/N) at atom number N in the low-density regime.
/// The constant is the measured N·deviation with headroom; the dominant
/// term is the variance deviation of the bosonized matter marginal.
pub const FINITE_N_ENVELOPE_C: f64 = 2.5;

/// How the suite is run; all checks derive from these four knobs.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    /// Seed for every randomized draw in the suite.
    pub seed: u64,
    /// Tolerance for engine-vs-oracle comparison checks.
    pub comparison_tol: f64,
    /// Per-mode occupation cutoff for pipeline-scale oracle runs.
    pub cutoff: usize,
    /// Amplitude cap passed through to every Fock space the suite builds.
    pub cap: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 7, comparison_tol: 1e-6, cutoff: 30, cap: DEFAULT_AMPLITUDE_CAP }
    }
}

/// One named verification with its expected value, measured value and
/// verdict.  `truncation_mass` and `cutoffs` are attached to checks that ran
/// a truncated pipeline, so a failing comparison can be told apart from an
/// undersized basis at a glance.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub engine_value: f64,
    pub oracle_value: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<usize>>,
}

fn check(name: &str, expected: f64, measured: f64, tol: f64) -> Check {
    let abs_error = (expected - measured).abs();
    Check {
        name: name.to_string(),
        engine_value: expected,
        oracle_value: measured,
        abs_error,
        tolerance: tol,
        pass: abs_error <= tol,
        truncation_mass: None,
        cutoffs: None,
    }
}

/// A check whose measured value must stay at or below a bound (rather than
/// near an expected value): deviations, defects, ratios.
fn bound_check(name: &str, bound: f64, measured: f64) -> Check {
    Check {
        name: name.to_string(),
        engine_value: 0.0,
        oracle_value: measured,
        abs_error: measured,
        tolerance: bound,
        pass: measured <= bound,
        truncation_mass: None,
        cutoffs: None,
    }
}

fn moments_list(m: &ModeMoments) -> [(f64, &'static str); 5] {
    [
        (m.mean_q, "meanQ"),
        (m.mean_p, "meanP"),
        (m.var_q, "varQ"),
        (m.var_p, "varP"),
        (m.cov_qp, "covQP"),
    ]
}

/// Worst per-quantity deviation between two moment sets, over the first
/// `take` quantities of (meanQ, meanP, varQ, varP, covQP).
fn worst_moment_deviation(engine: &ModeMoments, oracle: &ModeMoments, take: usize) -> (f64, f64, f64) {
    let e = moments_list(engine);
    let o = moments_list(oracle);
    let mut worst = (0.0, 0.0, -1.0);
    for i in 0..take {
        let dev = (e[i].0 - o[i].0).abs();
        if dev > worst.2 {
            worst = (e[i].0, o[i].0, dev);
        }
    }
    worst
}

fn identity_matrix(dim: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_elem(dim, C64::new(1.0, 0.0)))
}

fn random_pair_space(rng: &mut ChaCha8Rng) -> FockSpace {
    let da = rng.random_range(4..=12usize);
    let db = rng.random_range(4..=12usize);
    FockSpace::new(&[da, db]).expect("cutoffs in [4, 12] are valid")
}

/// Run the full oracle validation suite.
///
/// Fails fast with `InvalidArgument` if the configuration cannot support
/// the suite's fixed workload (the finite-N runs need the cutoff to hold a
/// 16-atom ensemble); individual physics disagreements never error — they
/// come back as failing [`Check`]s.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<Check>> {
    if !config.comparison_tol.is_finite() || config.comparison_tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "comparison tolerance must be positive and finite, got {}",
            config.comparison_tol
        )));
    }
    if config.cutoff < 17 {
        return Err(Error::InvalidArgument(format!(
            "suite cutoff {} cannot hold the 16-atom ensemble runs; need at least 17",
            config.cutoff
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks: Vec<Check> = Vec::with_capacity(28);

    // ---- operator algebra on truncation-safe sub-bases -------------------

    {
        let d = rng.random_range(4..=12usize);
        let space = FockSpace::new(&[d])?;
        let a = annihilation_op(&space, 0)?;
        let comm = commutator(&a, &adjoint(&a));
        let dev = max_column_deviation(&comm, &identity_matrix(d), &space, d - 2);
        checks.push(bound_check("canonical_commutator_safe_basis", 1e-12, dev));
    }

    for (name, build) in [
        (
            "schwinger_commutator_xy",
            (|o: &crate::fock::SchwingerOps| (commutator(&o.s_x, &o.s_y), &o.s_z * C64::new(0.0, 1.0)))
                as fn(&crate::fock::SchwingerOps) -> (Array2<C64>, Array2<C64>),
        ),
        ("schwinger_commutator_yz", |o| (commutator(&o.s_y, &o.s_z), &o.s_x * C64::new(0.0, 1.0))),
        ("schwinger_commutator_zx", |o| (commutator(&o.s_z, &o.s_x), &o.s_y * C64::new(0.0, 1.0))),
        ("ladder_commutator_plus_minus", |o| {
            (commutator(&o.s_plus, &o.s_minus), &o.s_z * C64::new(2.0, 0.0))
        }),
        ("ladder_commutator_z_plus", |o| (commutator(&o.s_z, &o.s_plus), o.s_plus.clone())),
        ("ladder_commutator_z_minus", |o| {
            (commutator(&o.s_z, &o.s_minus), &o.s_minus * C64::new(-1.0, 0.0))
        }),
    ] {
        let space = random_pair_space(&mut rng);
        let ops = schwinger_ops(&space, 0, 1)?;
        let (lhs, rhs) = build(&ops);
        let safe = space.cutoff(0).min(space.cutoff(1)) - 2;
        let dev = max_column_deviation(&lhs, &rhs, &space, safe);
        checks.push(bound_check(name, 1e-12, dev));
    }

    {
        let space = FockSpace::new(&[8, 8])?;
        let ops = schwinger_ops(&space, 0, 1)?;
        let mut dev_z = 0.0f64;
        let mut dev_0 = 0.0f64;
        for _ in 0..20 {
            let na = rng.random_range(0..8usize);
            let nb = rng.random_range(0..8usize);
            let state = FockState::basis_state(&space, &[na, nb])?;
            let sz = state.expectation(&ops.s_z)?;
            let s0 = state.expectation(&ops.s_0)?;
            dev_z = dev_z.max((sz - C64::new((nb as f64 - na as f64) / 2.0, 0.0)).norm());
            dev_0 = dev_0.max((s0 - C64::new((na as f64 + nb as f64) / 2.0, 0.0)).norm());
        }
        checks.push(bound_check("schwinger_diagonal_s_z", 1e-12, dev_z));
        checks.push(bound_check("schwinger_diagonal_s_0", 1e-12, dev_0));
    }

    {
        let mut worst = 0.0f64;
        for two_s in 0..=12u32 {
            let mut two_sz = -(two_s as i32);
            while two_sz <= two_s as i32 {
                worst = worst.max(ladder_action_check(two_s, two_sz)?);
                two_sz += 2;
            }
        }
        checks.push(bound_check("ladder_coefficients_through_s6", 1e-12, worst));
    }

    {
        // The exact lowering matrix in the excitation picture must reproduce
        // the two-mode S₋ elements between spin-sector basis states.
        let two_s = 9u32;
        let dim = two_s as usize + 2;
        let space = FockSpace::new(&[dim, dim])?;
        let ops = schwinger_ops(&space, 0, 1)?;
        let exact = exact_hp_lowering(dim, two_s)?;
        let mut worst = 0.0f64;
        for k in 1..=two_s as usize {
            let source = space.index(&[two_s as usize - k, k]);
            let target = space.index(&[two_s as usize - k + 1, k - 1]);
            worst = worst.max((ops.s_minus[[target, source]] - exact[[k - 1, k]]).norm());
        }
        checks.push(bound_check("exact_lowering_matches_two_mode_action", 1e-12, worst));
    }

    {
        // 100 random low-density states across three ensemble sizes: the
        // approximate excitation pair must satisfy ⟨[φ, φ†]⟩ = 1 within
        // 2⟨n_b⟩/N + 2/N.
        let sizes = [10u64, 20, 40];
        let built: Vec<_> = sizes
            .iter()
            .map(|&n| {
                let space = FockSpace::new(&[n as usize + 2, 6])?;
                let (phi, phi_dagger) = hp_excitation_ops(&space, 0, 1, n)?;
                let comm = commutator(&phi, &phi_dagger);
                let b = annihilation_op(&space, 1)?;
                let number_b = adjoint(&b).dot(&b);
                Ok((n, space, comm, number_b))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut worst_dev = 0.0f64;
        let mut bound_at_worst = f64::INFINITY;
        let mut all_within = true;
        for trial in 0..100 {
            let (n, space, comm, number_b) = &built[trial % built.len()];
            let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
            for k in 0..=3usize {
                amps[space.index(&[*n as usize - k, k])] =
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
            let state = FockState::from_amplitudes(space, amps)?;
            let nf = *n as f64;
            let mean_nb = state.expectation(number_b)?.re;
            let bound = 2.0 * mean_nb / nf + 2.0 / nf;
            let dev = (state.expectation(comm)? - C64::new(1.0, 0.0)).norm();
            all_within &= dev <= bound;
            if dev > worst_dev {
                worst_dev = dev;
                bound_at_worst = bound;
            }
        }
        checks.push(Check {
            name: "approximate_commutator_low_density_bound".into(),
            engine_value: bound_at_worst,
            oracle_value: worst_dev,
            abs_error: worst_dev,
            tolerance: bound_at_worst,
            pass: all_within,
            truncation_mass: None,
            cutoffs: None,
        });
    }

    // ---- unitarity and norm preservation ----------------------------------

    {
        let space = FockSpace::new(&[14, 14])?;
        let sq = two_mode_squeezer(&space, 0, 1, 2.0)?;
        checks.push(bound_check("squeezer_unitarity", 1e-10, unitarity_defect(&sq)));
        let bs = beamsplitter_unitary(&space, 0, 1, 0.6)?;
        checks.push(bound_check("beamsplitter_unitarity", 1e-10, unitarity_defect(&bs)));
    }

    {
        let space = FockSpace::new(&[12, 12])?;
        let amps: Vec<C64> = (0..space.dim())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let state = FockState::from_amplitudes(&space, amps)?;
        let sq = two_mode_squeezer(&space, 0, 1, 1.7)?;
        let bs = beamsplitter_unitary(&space, 0, 1, 0.3)?;
        let evolved = state.apply_matrix(&sq)?.apply_matrix(&bs)?;
        checks.push(bound_check("evolution_preserves_norm", 1e-10, (evolved.norm() - 1.0).abs()));
    }

    // ---- Heisenberg actions of the evolution operators --------------------

    {
        // Columns of U†a₁U via matrix-vector products; the truncated
        // squeezer converges entrywise in the low-occupation corner at
        // ~tanh²r per level, so cutoff 32 sits well under 1e-6.
        let space = FockSpace::new(&[32, 32])?;
        let gain = 2.0f64;
        let u = two_mode_squeezer(&space, 0, 1, gain)?;
        let u_dag = adjoint(&u);
        let a1 = annihilation_op(&space, 0)?;
        let a2 = annihilation_op(&space, 1)?;
        let rhs = &a1 * C64::new(gain.sqrt(), 0.0) + &adjoint(&a2) * C64::new((gain - 1.0).sqrt(), 0.0);
        let corner: Vec<usize> =
            (0..space.dim()).filter(|&i| space.total_occupation(i) <= 2).collect();
        let mut worst = 0.0f64;
        for &col in &corner {
            let mut unit: Array1<C64> = Array1::zeros(space.dim());
            unit[col] = C64::new(1.0, 0.0);
            let lhs_col = u_dag.dot(&a1.dot(&u.dot(&unit)));
            for &row in &corner {
                worst = worst.max((lhs_col[row] - rhs[[row, col]]).norm());
            }
        }
        checks.push(bound_check("squeezer_heisenberg_low_corner", 1e-6, worst));
    }

    {
        let space = FockSpace::new(&[10, 10])?;
        let mu = 0.8f64;
        let nu = (1.0 - mu * mu).sqrt();
        let u = beamsplitter_unitary(&space, 0, 1, mu)?;
        let a1 = annihilation_op(&space, 0)?;
        let a2 = annihilation_op(&space, 1)?;
        let dev1 = max_column_deviation(
            &adjoint(&u).dot(&a1).dot(&u),
            &(&a1 * C64::new(mu, 0.0) + &a2 * C64::new(nu, 0.0)),
            &space,
            8,
        );
        let dev2 = max_column_deviation(
            &adjoint(&u).dot(&a2).dot(&u),
            &(&a2 * C64::new(mu, 0.0) - &a1 * C64::new(nu, 0.0)),
            &space,
            8,
        );
        checks.push(bound_check("beamsplitter_heisenberg_safe_columns", 1e-12, dev1.max(dev2)));
    }

    // ---- state moments against closed forms --------------------------------

    {
        let n = 12u64;
        let space = FockSpace::new(&[n as usize + 1, n as usize + 1])?;
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let alpha2 = rng.random_range(0.05..0.95);
            let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let ens = SpinEnsemble::from_populations(n, alpha2, phi)?;
            let formula = crate::cloning::spin_mode_moments(&ens);
            let (fa, fb) = ens.collective_frame();
            let css = coherent_spin_state(&space, n, fa, fb, C64::new(0.0, 0.0))?;
            let matrix = collective_quadrature_moments(&css, 0, 1, n)?;
            worst = worst.max(worst_moment_deviation(&formula, &matrix, 5).2);
        }
        checks.push(bound_check("collective_moments_match_formula", 1e-11, worst));
    }

    // ---- engine vs oracle: pipeline comparisons ----------------------------

    let mu_balanced = std::f64::consts::FRAC_1_SQRT_2;
    for (label, gamma) in [
        ("coherent_signal", C64::new(1.0, 0.0)),
        ("rotated_signal", C64::from_polar(0.6, 0.9)),
    ] {
        let oracle = oracle_clone_run(gamma, &SpinEnsemble::ground(), 2.0, mu_balanced, config.cutoff, config.cap)?;
        let engine = run_cloning(&CloneParams { gamma, ..CloneParams::default() })?;
        let mass = oracle.truncation_mass.iter().fold(0.0f64, |a, &b| a.max(b));
        for (clone_label, engine_stats, oracle_m) in [
            ("bright", &engine.bright, &oracle.bright),
            ("dark", &engine.dark, &oracle.dark),
        ] {
            let (e, o, dev) = worst_moment_deviation(&engine_stats.moments(), oracle_m, 5);
            let mut c = check(&format!("{label}_{clone_label}_clone_agreement"), e, o, config.comparison_tol);
            c.abs_error = dev;
            c.pass = dev <= config.comparison_tol;
            c.truncation_mass = Some(mass);
            c.cutoffs = Some(oracle.cutoffs.to_vec());
            checks.push(c);
        }
    }

    {
        // Amplified vacuum marginal: Var(Q) = 2G − 1 with no engine help.
        let space = FockSpace::with_cap(&[config.cutoff, config.cutoff], config.cap)?;
        let u = two_mode_squeezer(&space, 0, 1, 2.0)?;
        let state = FockState::vacuum(&space).apply_matrix(&u)?;
        let m = quadrature_moments(&state, 0)?;
        let mut c = check("squeezed_vacuum_variance_agreement", 3.0, m.var_q, config.comparison_tol);
        c.truncation_mass = Some(state.top_two_level_mass(0)?.max(state.top_two_level_mass(1)?));
        c.cutoffs = Some(vec![config.cutoff, config.cutoff]);
        checks.push(c);
    }

    {
        let gamma = C64::new(0.0, 0.8);
        let space = FockSpace::with_cap(&[config.cutoff], config.cap)?;
        let state = coherent_state(&space, 0, gamma)?;
        let m = quadrature_moments(&state, 0)?;
        let expected = ModeMoments {
            mean_q: 2.0 * gamma.re,
            mean_p: 2.0 * gamma.im,
            var_q: 1.0,
            var_p: 1.0,
            cov_qp: 0.0,
        };
        let (e, o, dev) = worst_moment_deviation(&expected, &m, 5);
        let mut c = check("coherent_state_moment_agreement", e, o, config.comparison_tol);
        c.abs_error = dev;
        c.pass = dev <= config.comparison_tol;
        c.truncation_mass = Some(state.top_two_level_mass(0)?);
        c.cutoffs = Some(vec![config.cutoff]);
        checks.push(c);
    }

    // ---- finite-N convergence to the collective-mode laws ------------------

    {
        // Fixed single excitation (|β|² = 1/N) keeps the density low as N
        // grows: deviations from the engine's collective-mode moments must
        // fall inside the C/N envelope and halve from N = 8 to N = 16.
        let mut deviations: Vec<Vec<f64>> = Vec::new();
        for n in [8u64, 16] {
            let ens = SpinEnsemble::from_populations(n, 1.0 - 1.0 / n as f64, std::f64::consts::FRAC_PI_3)?;
            let oracle = oracle_clone_run(C64::new(0.0, 0.0), &ens, 2.0, mu_balanced, config.cutoff, config.cap)?;
            let engine = run_cloning(&CloneParams { ensemble: ens, ..CloneParams::default() })?;
            let mass = oracle.truncation_mass.iter().fold(0.0f64, |a, &b| a.max(b));
            let mut per_quantity = Vec::new();
            let mut worst = (0.0, 0.0, -1.0);
            for (engine_stats, oracle_m) in
                [(&engine.bright, &oracle.bright), (&engine.dark, &oracle.dark)]
            {
                let e = moments_list(&engine_stats.moments());
                let o = moments_list(oracle_m);
                // Means and variances only: those are the closed-form
                // targets; covQP converges more slowly and has none.
                for i in 0..4 {
                    let dev = (e[i].0 - o[i].0).abs();
                    per_quantity.push(dev);
                    if dev > worst.2 {
                        worst = (e[i].0, o[i].0, dev);
                    }
                }
            }
            let envelope = config.comparison_tol.max(FINITE_N_ENVELOPE_C / n as f64);
            let mut c = check(&format!("finite_n_agreement_n{n}"), worst.0, worst.1, envelope);
            c.abs_error = worst.2;
            c.pass = worst.2 <= envelope;
            c.truncation_mass = Some(mass);
            c.cutoffs = Some(oracle.cutoffs.to_vec());
            checks.push(c);
            deviations.push(per_quantity);
        }
        let mut worst_ratio = 0.0f64;
        for (d8, d16) in deviations[0].iter().zip(deviations[1].iter()) {
            if *d8 > 1e-9 {
                worst_ratio = worst_ratio.max(d16 / d8);
            }
        }
        checks.push(bound_check("finite_n_convergence_ratio", 0.6, worst_ratio));
    }

    {
        // Half-excited ensemble: the bosonized matter marginal is genuinely
        // different physics from the collective mode, and the clone variance
        // converges O(1/N) to 17/8 rather than the engine's 7/4.
        let n = 12u64;
        let ens = SpinEnsemble::from_populations(n, 0.5, std::f64::consts::FRAC_PI_4)?;
        let oracle = oracle_clone_run(C64::new(0.0, 0.0), &ens, 2.0, mu_balanced, config.cutoff, config.cap)?;
        let mut c = check(
            "symmetric_ensemble_plateau",
            17.0 / 8.0,
            oracle.bright.var_q,
            0.5 / n as f64,
        );
        c.truncation_mass = Some(oracle.truncation_mass.iter().fold(0.0f64, |a, &b| a.max(b)));
        c.cutoffs = Some(oracle.cutoffs.to_vec());
        checks.push(c);
    }

    Ok(checks)
}
