mod common;

use std::f64::consts::{PI, TAU};

use nodal_core::geodesic::GeodesicState;
use nodal_core::growth::{growth_profile, Strip};
use nodal_core::surface::{restrict_periodic, sample_random_wave};
use nodal_core::zeros::{
    argument_principle_count, empirical_measure_pairing, laurent_roots, lelong_density, TestFunction, ZeroBox,
    ZeroMethod, ZeroSet,
};
use nodal_core::{Error, PeriodicSpectrum, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_wave_spectrum(lambda: f64, seed: u64) -> PeriodicSpectrum {
    let mode = sample_random_wave(lambda, 1.0, seed).unwrap();
    restrict_periodic(&mode, &GeodesicState::periodic([0.0, 0.0], [1, 0]).unwrap()).unwrap()
}

/// Laurent polynomial with Gaussian coefficients on `[-n, n]`.
fn random_laurent(n: i64, seed: u64) -> PeriodicSpectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(i64, C64)> = (-n..=n)
        .map(|k| (k, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    PeriodicSpectrum::from_pairs(n as f64, TAU, &pairs).unwrap()
}

fn strip_max(spectrum: &PeriodicSpectrum, tau_max: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..=20 {
        let tau = -tau_max + 2.0 * tau_max * i as f64 / 20.0;
        for k in 0..2000 {
            let t = spectrum.period() * k as f64 / 2000.0;
            best = best.max(spectrum.eval_direct(C64::new(t, tau)).norm());
        }
    }
    best
}

#[test]
fn sine_zeros_are_real_and_equally_spaced() {
    let n = 50;
    let set = laurent_roots(&PeriodicSpectrum::sine(n), 0.5).unwrap();
    assert_eq!(set.count(), 100);
    assert_eq!(set.method, ZeroMethod::Companion);
    let mut ts: Vec<f64> = set.zeros.iter().map(|z| z.t).collect();
    ts.sort_by(f64::total_cmp);
    for (k, t) in ts.iter().enumerate() {
        assert!((t - k as f64 * PI / n as f64).abs() < 1e-10, "{k}: {t}");
    }
    assert!(set.zeros.iter().all(|z| z.tau.abs() <= 1e-10 && z.multiplicity == 1));
}

#[test]
fn linear_laurent_polynomial_has_one_zero() {
    let s = PeriodicSpectrum::from_pairs(1.0, TAU, &[(0, C64::new(1.0, 0.0)), (1, C64::new(-1.0, 0.0))]).unwrap();
    let set = laurent_roots(&s, 0.3).unwrap();
    assert_eq!(set.count(), 1);
    let z = set.zeros[0];
    let d = z.t.min(TAU - z.t);
    assert!(d < 1e-14 && z.tau.abs() < 1e-14);
}

#[test]
fn zero_polynomial_is_degenerate() {
    let s = PeriodicSpectrum::from_pairs(3.0, TAU, &[]).unwrap();
    assert!(matches!(laurent_roots(&s, 0.3), Err(Error::DegenerateSpectrum)));
    assert!(matches!(argument_principle_count(&s, &ZeroBox::new(0.0, 1.0, -0.1, 0.1)), Err(Error::DegenerateSpectrum)));
}

#[test]
fn repeated_root_gets_multiplicity() {
    // (1 - w)^2 = 1 - 2w + w^2
    let s = PeriodicSpectrum::from_pairs(
        2.0,
        TAU,
        &[(0, C64::new(1.0, 0.0)), (1, C64::new(-2.0, 0.0)), (2, C64::new(1.0, 0.0))],
    )
    .unwrap();
    let set = laurent_roots(&s, 0.3).unwrap();
    assert_eq!(set.count(), 2);
}

#[test]
fn random_wave_full_annulus_count_is_degree() {
    let s = random_wave_spectrum(100.0, 3);
    let (lo, hi) = s.support().unwrap();
    let set = laurent_roots(&s, 3.0).unwrap();
    assert_eq!(set.count() as i64, hi - lo);
    let ap = argument_principle_count(&s, &ZeroBox::new(0.0, TAU, -3.0, 3.0)).unwrap();
    assert_eq!(ap.count, hi - lo);
    assert!(set.warning.is_none());
}

#[test]
fn sine_contour_count() {
    let ap = argument_principle_count(&PeriodicSpectrum::sine(50), &ZeroBox::new(0.0, TAU, -0.5, 0.5)).unwrap();
    assert_eq!(ap.count, 100);
    // the full-period box starts on a zero, so the contour had to move
    assert!(ap.attempts > 1);
}

#[test]
fn zero_free_box_counts_nothing() {
    let ap = argument_principle_count(&PeriodicSpectrum::sine(5), &ZeroBox::new(0.1, 0.5, 0.1, 0.4)).unwrap();
    assert_eq!(ap.count, 0);
}

#[test]
fn sine_pairing_is_exactly_two() {
    for n in [1, 7, 50] {
        let set = laurent_roots(&PeriodicSpectrum::sine(n), 0.5).unwrap();
        let f = TestFunction::BoxIndicator { t0: 0.0, t1: TAU, tau0: -0.2, tau1: 0.2, smoothing: 0.0 };
        let rep = empirical_measure_pairing(&set, &f).unwrap();
        assert_eq!(rep.pairing, 2.0);
        assert_eq!(rep.reference, 2.0);
    }
}

#[test]
fn empty_zero_set_pairs_to_zero() {
    let set = ZeroSet::empty(TAU, 10.0, 0.3);
    let f = TestFunction::GaussianBump { t: 1.0, tau: 0.0, width: 0.5 };
    assert_eq!(empirical_measure_pairing(&set, &f).unwrap().pairing, 0.0);
}

#[test]
fn test_function_references_match_quadrature() {
    let fs = [
        TestFunction::BoxIndicator { t0: 0.5, t1: 2.5, tau0: -0.2, tau1: 0.2, smoothing: 0.1 },
        TestFunction::GaussianBump { t: 3.0, tau: 0.05, width: 0.4 },
        TestFunction::CosineWindow { t0: 1.0, t1: 4.0 },
    ];
    let n = 200_000;
    let h = 10.0 / n as f64;
    for f in fs {
        let vals: Vec<f64> = (0..=n).map(|k| f.eval(-2.0 + h * k as f64, 0.0)).collect();
        let integral = common::trapezoid(&vals, h) / PI;
        assert!((integral - f.reference()).abs() < 1e-6, "{f:?}");
    }
}

#[test]
fn random_wave_pairing_tracks_reference() {
    let f = TestFunction::BoxIndicator { t0: 0.0, t1: TAU, tau0: -0.2, tau1: 0.2, smoothing: 0.0 };
    let seeds = 4;
    let mut mean = 0.0;
    for seed in 0..seeds {
        let set = laurent_roots(&random_wave_spectrum(300.0, seed), 0.2).unwrap();
        mean += empirical_measure_pairing(&set, &f).unwrap().pairing / seeds as f64;
    }
    assert!((mean - f.reference()).abs() <= 0.1 * f.reference(), "{mean}");
}

#[test]
fn lelong_single_zero() {
    let s = PeriodicSpectrum::from_pairs(1.0, TAU, &[(0, C64::new(1.0, 0.0)), (1, C64::new(-1.0, 0.0))]).unwrap();
    // grid offset so that the zero is not a node
    let strip = Strip::new(-0.1003, 0.0997, 0.1003, 201, 201).unwrap();
    let density = lelong_density(&growth_profile(&s, &strip).unwrap());
    let total = density.total_in_box(&ZeroBox::new(-0.05, 0.05, -0.05, 0.05));
    assert!((total - 1.0).abs() <= 0.05, "{total}");
    let free = Strip::new(1.0, 2.0, 0.2, 201, 81).unwrap();
    let quiet = lelong_density(&growth_profile(&s, &free).unwrap());
    assert!(quiet.total().abs() <= 1e-3, "{}", quiet.total());
}

#[test]
fn lelong_sine_count() {
    let n = 50;
    let s = PeriodicSpectrum::sine(n);
    let t0 = PI / (2.0 * n as f64);
    // even tau node count keeps the real axis off the grid
    let strip = Strip::new(t0, t0 + TAU, 0.3, 1201, 100).unwrap();
    let density = lelong_density(&growth_profile(&s, &strip).unwrap());
    let total = density.total();
    assert!((total - 2.0 * n as f64).abs() <= 0.02 * 2.0 * n as f64, "{total}");
}

#[test]
fn zero_set_csv_and_json() {
    let set = laurent_roots(&PeriodicSpectrum::sine(3), 0.5).unwrap();
    let mut out = Vec::new();
    set.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("t,tau,multiplicity"));
    assert_eq!(text.lines().count(), 7);
    let back: ZeroSet = serde_json::from_str(&serde_json::to_string(&set).unwrap()).unwrap();
    assert_eq!(back, set);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn methods_agree_on_random_spectra(n in 1i64..=30, seed in 0u64..1_000_000, a in 0.0f64..6.0, w in 0.3f64..3.0, tau0 in -0.6f64..0.0, tau1 in 0.0f64..0.6) {
        let s = random_laurent(n, seed);
        let set = laurent_roots(&s, 1.0).unwrap();
        for b in [ZeroBox::new(0.0, TAU, -1.0, 1.0), ZeroBox::new(a, a + w, tau0, tau1)] {
            let ap = argument_principle_count(&s, &b);
            let ap = match ap {
                Ok(ap) => ap,
                Err(Error::BoundaryZero { .. }) => continue,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            // the contour may have moved by a hair; compare on the contour actually used
            prop_assert_eq!(ap.count as usize, set.count_in_box(&ap.contour), "{:?}", b);
        }
    }

    #[test]
    fn full_annulus_count_is_degree(n in 1i64..=30, seed in 0u64..1_000_000) {
        let s = random_laurent(n, seed);
        let set = laurent_roots(&s, 40.0).unwrap();
        prop_assert_eq!(set.count() as i64, 2 * n);
    }

    #[test]
    fn real_restrictions_pair_conjugates(seed in 0u64..1000, lambda in 5.0f64..40.0) {
        let set = laurent_roots(&random_wave_spectrum(lambda, seed), 0.5).unwrap();
        // a zero within the closed strip has its conjugate there too
        prop_assert!(set.conjugate_pairing_defect() <= 1e-8);
    }

    #[test]
    fn residuals_are_tiny(seed in 0u64..1000, lambda in 5.0f64..30.0) {
        let s = random_wave_spectrum(lambda, seed);
        let set = laurent_roots(&s, 0.4).unwrap();
        let scale = strip_max(&s, 0.4);
        for z in &set.zeros {
            prop_assert!(s.eval_direct(C64::new(z.t, z.tau)).norm() <= 1e-10 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lelong_matches_zero_counts(seed in 0u64..1000, t0 in 0.0f64..TAU, tau in 0.1f64..0.4) {
        let s = random_wave_spectrum(15.0, seed);
        let set = laurent_roots(&s, 0.5).unwrap();
        let h = 1e-3 * TAU;
        // the grid box must not cut through a zero's cell
        prop_assume!(set.zeros.iter().all(|z| (z.tau.abs() - tau).abs() > 4.0 * h));
        let ntau = (2.0 * tau / h).round() as usize + 1;
        let strip = Strip::new(t0, t0 + TAU, tau, 1001, ntau.max(3)).unwrap();
        let density = lelong_density(&growth_profile(&s, &strip).unwrap());
        let expected = set.count_in_box(&ZeroBox::new(0.0, TAU, -tau, tau)) as f64;
        let total = density.total();
        prop_assert!((total - expected).abs() <= 0.05 * expected.max(1.0), "{} vs {}", total, expected);
    }
}
