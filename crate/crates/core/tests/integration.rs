//! Cross-module checks against oracles that never touch the code under test:
//! explicit photon distribution sums, the Gaussian characteristic function
//! in closed form, and ground-truth covariances of sampled fixtures.

use std::f64::consts::PI;

use optomo_core::homodyne::{sample_state, NoiseModel, PhaseSchedule};
use optomo_core::moment_engine::{cross_validate, mean_validate, variances_covariances};
use optomo_core::photon::photon_moments;
use optomo_core::quantum_state::make_state;
use optomo_core::reconstruction::{tomogram_charfn_series, TRUNCATION_EPS};
use optomo_core::tomography::{optical_tomogram, Density2D};
use optomo_core::uncertainty::{full_report, Verdict};
use optomo_core::{
    AnalyticSource, EmpiricalSource, GaussianState, HomodyneDataset, Mode, StateDescriptor,
};

/// Thermal photon moments by direct distribution sum:
/// P(n) = nbar^n / (1 + nbar)^(n + 1).
#[test]
fn photon_moments_match_thermal_distribution_sum() {
    let nbar = 0.7f64;
    let (mut p, mut m1, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for n in 0..400 {
        let w = nbar.powi(n) / (1.0 + nbar).powi(n + 1);
        p += w;
        m1 += w * n as f64;
        m2 += w * (n as f64) * (n as f64);
    }
    assert!((p - 1.0).abs() < 1e-12, "distribution sum not converged");

    let src = AnalyticSource::new(GaussianState::thermal(nbar, 0.0).unwrap());
    let got = photon_moments(&src).unwrap();
    assert!((got.n1.value - m1).abs() < 1e-8, "<n>: {} vs {m1}", got.n1.value);
    assert!((got.n1_sq.value - m2).abs() < 1e-8, "<n^2>: {} vs {m2}", got.n1_sq.value);
}

/// Coherent-state photon moments by Poisson sum.
#[test]
fn photon_moments_match_poisson_sum() {
    let lambda = 1.3f64; // |alpha|^2
    let (mut m1, mut m2) = (0.0f64, 0.0f64);
    let mut w = (-lambda).exp();
    for n in 0..200 {
        m1 += w * n as f64;
        m2 += w * (n as f64) * (n as f64);
        w *= lambda / (n + 1) as f64;
    }
    let a = (lambda / 2.0).sqrt(); // alpha = a + ia
    let src = AnalyticSource::new(GaussianState::coherent((a, a), (0.0, 0.0)));
    let got = photon_moments(&src).unwrap();
    assert!((got.n1.value - m1).abs() < 1e-8);
    assert!((got.n1_sq.value - m2).abs() < 1e-8);
}

/// The moment-series characteristic function must agree with the closed-form
/// Gaussian one, exp(i k . mean - k^T cov k / 2), on its admitted window.
#[test]
fn charfn_series_matches_gaussian_closed_form() {
    let desc = StateDescriptor::Coherent { alpha1: (0.6, -0.2), alpha2: (0.1, 0.4) };
    let state = make_state::<f64>(&desc).unwrap();
    let src = AnalyticSource::new(state.clone());
    let (t1, t2) = (0.7, 1.9);
    let series = tomogram_charfn_series(&src, t1, t2, 8).unwrap();
    let kmax = series.admitted_window(TRUNCATION_EPS);
    assert!(kmax > 0.0);

    let tomo = optical_tomogram(&state, t1, t2).unwrap();
    let Density2D::Gaussian { mean, cov } = tomo.density else { unreachable!() };
    let steps = 9;
    for i in 0..steps {
        for j in 0..steps {
            let k1 = kmax * (2.0 * i as f64 / (steps - 1) as f64 - 1.0);
            let k2 = kmax * (2.0 * j as f64 / (steps - 1) as f64 - 1.0);
            let phase = k1 * mean[0] + k2 * mean[1];
            let quad = cov[0][0] * k1 * k1 + 2.0 * cov[0][1] * k1 * k2 + cov[1][1] * k2 * k2;
            let want = num_complex::Complex64::from_polar((-0.5 * quad).exp(), phase);
            let got = series.eval(k1, k2);
            assert!(
                (got - want).norm() < 2.0 * TRUNCATION_EPS,
                "charfn mismatch at ({k1:.2}, {k2:.2}): {got} vs {want}"
            );
        }
    }
}

/// Sampled squeezed fixture: recovered per-mode covariances sit within five
/// standard errors of the generator's ground truth, every inequality holds,
/// and the redundant mode checks agree.
#[test]
fn sampled_pipeline_recovers_ground_truth() {
    let desc = StateDescriptor::Squeezed { r1: 0.4, phi1: 0.6, r2: 0.2, phi2: 0.0 };
    let state = make_state::<f64>(&desc).unwrap();
    let schedule = PhaseSchedule::by_name("full", 60_000).unwrap();
    let ds = sample_state(&state, Some(desc), &schedule, 314, &NoiseModel::default()).unwrap();
    let src = EmpiricalSource::new(&ds);

    for (mode, iq, ip) in [(Mode::A, 0usize, 1usize), (Mode::B, 2, 3)] {
        let c = variances_covariances(&src, mode).unwrap();
        for (got, want) in [
            (c.sigma_qq, state.cov[iq][iq]),
            (c.sigma_pp, state.cov[ip][ip]),
            (c.sigma_qp, state.cov[iq][ip]),
        ] {
            let sigmas = (got.value - want).abs() / got.stderr.max(1e-300);
            assert!(sigmas < 5.0, "mode {}: {} vs {} ({sigmas:.1} sigma)", mode.label(), got.value, want);
        }
    }

    let reports = full_report(&src, 3.0, &[0.0, PI / 8.0], &[0.0]).unwrap();
    assert!(reports.iter().all(|r| r.verdict != Verdict::Violation));
    assert!(cross_validate(&src).unwrap().consistent);
    assert!(mean_validate(&src).unwrap().consistent);
}

/// Detector noise inflates every quadrature variance by sigma^2, so the
/// moment engine must see it and the uncertainty margins must widen.
#[test]
fn detector_noise_inflates_variances() {
    let state = GaussianState::<f64>::vacuum();
    let schedule = PhaseSchedule::by_name("uncertainty", 50_000).unwrap();
    let noise = NoiseModel { sigma: 0.3 };
    let ds = sample_state(&state, Some(StateDescriptor::Vacuum), &schedule, 7, &noise).unwrap();
    let src = EmpiricalSource::new(&ds);
    let c = variances_covariances(&src, Mode::A).unwrap();
    let want = 0.5 + 0.09;
    let sigmas = (c.sigma_qq.value - want).abs() / c.sigma_qq.stderr.max(1e-300);
    assert!(sigmas < 5.0, "noisy variance {} vs {want}", c.sigma_qq.value);
}

mod properties {
    use super::*;
    use optomo_core::MomentSource;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// X(theta + pi) = -X(theta) for every mode and any Gaussian state.
        #[test]
        fn odd_moments_flip_under_half_turn(
            theta in 0.0..PI,
            r in 0.0..0.8f64,
            q in -1.0..1.0f64,
        ) {
            let state = GaussianState::coherent((q, 0.3), (0.0, -q));
            let sq = GaussianState::squeezed(r, theta, 0.0, 0.0).unwrap();
            for st in [state, sq] {
                let src = AnalyticSource::new(st);
                for mode in Mode::ALL {
                    let a = src.moment(None, mode, theta, 1).unwrap();
                    let b = src.moment(None, mode, theta + PI, 1).unwrap();
                    prop_assert!((a + b).abs() < 1e-10);
                    let a2 = src.moment(None, mode, theta, 2).unwrap();
                    let b2 = src.moment(None, mode, theta + PI, 2).unwrap();
                    prop_assert!((a2 - b2).abs() < 1e-10);
                }
            }
        }

        /// Quantum Gaussian states never violate the uncertainty checks.
        #[test]
        fn squeezed_thermal_states_always_pass(
            r in 0.0..0.9f64,
            phi in 0.0..PI,
            nbar in 0.0..2.0f64,
        ) {
            let sq = GaussianState::squeezed(r, phi, 0.3, 0.0).unwrap();
            let th = GaussianState::thermal(nbar, 0.5 * nbar).unwrap();
            for st in [sq, th] {
                let src = AnalyticSource::new(st);
                let reports = full_report(&src, 3.0, &[phi], &[phi]).unwrap();
                for rep in reports {
                    prop_assert!(
                        rep.verdict == Verdict::Pass,
                        "{} margin {}", rep.name, rep.margin
                    );
                }
            }
        }

        /// Analytic tomograms normalize regardless of phases.
        #[test]
        fn tomograms_integrate_to_one(t1 in 0.0..PI, t2 in 0.0..PI, r in 0.0..0.8f64) {
            let st = GaussianState::two_mode_squeezed(r).unwrap();
            let tomo = optical_tomogram(&st, t1, t2).unwrap();
            prop_assert!((tomo.integral() - 1.0).abs() < 1e-9);
        }
    }
}

/// Moment estimates survive the JSONL round trip bit for bit.
#[test]
fn file_round_trip_preserves_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let state = GaussianState::<f64>::two_mode_squeezed(0.3).unwrap();
    let schedule = PhaseSchedule::by_name("redundant", 5_000).unwrap();
    let ds = sample_state(
        &state,
        Some(StateDescriptor::TwoModeSqueezed { r: 0.3 }),
        &schedule,
        99,
        &NoiseModel::default(),
    )
    .unwrap();
    let stem = dir.path().join("ds");
    ds.save(&stem).unwrap();
    let back = HomodyneDataset::load(&stem).unwrap();

    let a = cross_validate(&EmpiricalSource::new(&ds)).unwrap();
    let b = cross_validate(&EmpiricalSource::new(&back)).unwrap();
    for i in 0..4 {
        assert_eq!(a.difference[i].value, b.difference[i].value);
        assert_eq!(a.difference[i].stderr, b.difference[i].stderr);
    }
}
