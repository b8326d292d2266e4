//! Randomized invariants exercised through the public API, complementing the
//! per-module property blocks: these cut across modules the way a caller does.

use num_complex::Complex64;
use polariton_cloning::cloning::{asymmetric_clone, run_cloning, CloneParams, SpinEnsemble};
use polariton_cloning::polariton::hopfield;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    /// Clone noise depends on the ensemble and the input variance, never on
    /// where the input sits in phase space.
    #[test]
    fn clone_variances_ignore_the_input_amplitude(
        re in -5.0..5.0,
        im in -5.0..5.0,
        alpha2 in 0.0..1.0,
        phi in 0.0..std::f64::consts::TAU,
    ) {
        let ensemble = SpinEnsemble::from_populations(40, alpha2, phi).unwrap();
        let displaced = run_cloning(&CloneParams {
            gamma: c(re, im),
            ensemble,
            ..CloneParams::default()
        }).unwrap();
        let centered = run_cloning(&CloneParams {
            ensemble,
            ..CloneParams::default()
        }).unwrap();
        for (a, b) in [
            (&displaced.bright, &centered.bright),
            (&displaced.dark, &centered.dark),
        ] {
            prop_assert!((a.var_q - b.var_q).abs() < 1e-12);
            prop_assert!((a.var_p - b.var_p).abs() < 1e-12);
            prop_assert!((a.cov_qp - b.cov_qp).abs() < 1e-12);
        }
    }

    /// Detuning redistributes the amplified signal between the clones but
    /// never changes the total: the squared gains always sum to G.
    #[test]
    fn split_signal_power_always_sums_to_the_amplifier_gain(
        delta in -20.0..20.0,
        log_g in -2.0..0.7_f64,
        gain in 1.0..10.0,
    ) {
        let g = 10.0_f64.powf(log_g);
        let report = asymmetric_clone(delta, g, c(0.4, -0.2), SpinEnsemble::ground(), gain)
            .unwrap();
        let total = report.bright.signal_gain.powi(2) + report.dark.signal_gain.powi(2);
        prop_assert!((total - gain).abs() < 1e-12 * gain.max(1.0));
    }

    /// The photon weight of the lower branch falls monotonically as the
    /// cavity is tuned from below resonance to above it; in particular the
    /// two evaluation branches of `hopfield` must agree across delta = 0.
    #[test]
    fn mixing_weight_is_monotone_in_detuning(
        delta in -50.0..50.0,
        step in 1e-6..10.0,
        log_g in -2.0..0.7_f64,
    ) {
        let g = 10.0_f64.powf(log_g);
        let lo = hopfield(delta, g).unwrap();
        let hi = hopfield(delta + step, g).unwrap();
        prop_assert!(hi.mu * hi.mu <= lo.mu * lo.mu + 1e-12);
    }

    /// Against a ground-state ensemble each clone carries exactly one extra
    /// unit of noise, whatever the input variance.
    #[test]
    fn ground_state_cloning_adds_one_noise_unit(
        v_in in 1.0..6.0,
        re in -2.0..2.0,
        im in -2.0..2.0,
    ) {
        let report = run_cloning(&CloneParams {
            gamma: c(re, im),
            v_in,
            ..CloneParams::default()
        }).unwrap();
        for clone in [&report.bright, &report.dark] {
            prop_assert!((clone.var_q - (v_in + 1.0)).abs() < 1e-12);
            prop_assert!((clone.var_p - (v_in + 1.0)).abs() < 1e-12);
        }
    }
}
