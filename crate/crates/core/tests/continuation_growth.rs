mod common;

use std::f64::consts::{PI, TAU};

use common::{dd_complex_sum, slope};
use nodal_core::fourier::{windowed_transform, RestrictionSamples, SigmaGrid, SIGMA_PAD};
use nodal_core::geodesic::{flat_complex_geodesic, ComplexPoint, GeodesicState};
use nodal_core::growth::{
    continue_periodic, continue_windowed, growth_profile, hartogs_dichotomy_check, l2_growth_exponent,
    select_window, sup_growth_exponent, sup_growth_exponent_mode, tempered_weyl_sum, GrowthProfile, LineSamples,
    Strip, LOG_FLOOR,
};
use nodal_core::surface::{make_torus_mode, restrict_periodic, sample_random_wave, sphere_equator_spectrum, SurfaceModel};
use nodal_core::{Continuation, ConvergenceFactor, Error, ExponentialSum, PeriodicSpectrum, Result, C64};
use proptest::prelude::*;

fn horizontal() -> GeodesicState {
    GeodesicState::periodic([0.0, 0.0], [1, 0]).unwrap()
}

fn random_spectrum(lambda: f64, seed: u64) -> PeriodicSpectrum {
    restrict_periodic(&sample_random_wave(lambda, 1.0, seed).unwrap(), &horizontal()).unwrap()
}

#[test]
fn single_exponential_decays_upward() {
    let s = PeriodicSpectrum::from_pairs(1.0, TAU, &[(1, C64::new(1.0, 0.0))]).unwrap();
    for tau in [0.1, 0.3, -0.2] {
        let v = continue_periodic(&s, ComplexPoint::new(0.0, tau), 0.5).unwrap();
        assert!((v - C64::new((-tau).exp(), 0.0)).norm() < 1e-15);
    }
    assert!(matches!(continue_periodic(&s, ComplexPoint::new(0.0, 0.6), 0.5), Err(Error::StripExceeded { .. })));
}

#[test]
fn sine_spectrum_recovers_real_restriction() {
    let s = PeriodicSpectrum::sine(50);
    for k in 0..200 {
        let t = 0.031 * k as f64;
        let v = continue_periodic(&s, ComplexPoint::new(t, 0.0), 0.5).unwrap();
        assert!((v.re - (50.0 * t).sin()).abs() < 1e-14 && v.im.abs() < 1e-14);
    }
}

#[test]
fn random_wave_continuation_matches_extended_sum() {
    let s = random_spectrum(40.0, 4);
    let z = C64::new(0.7, 0.2);
    let w = s.base_frequency();
    let terms: Vec<C64> = s.iter().map(|(n, c)| c * (C64::i() * (w * n as f64) * z).exp()).collect();
    let scale: f64 = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let oracle = dd_complex_sum(terms);
    let got = continue_periodic(&s, ComplexPoint::from(z), 0.5).unwrap();
    assert!((got - oracle).norm() < 1e-14 * scale);
    // the Horner path used for profiles agrees as well
    assert!((s.eval(z) - oracle).norm() < 1e-12 * scale);
}

fn plane_wave(mu: f64, half: f64, count: usize) -> RestrictionSamples {
    let sum = ExponentialSum::new(mu.abs(), vec![(mu, C64::new(1.0, 0.0))]);
    RestrictionSamples::from_exponential_sum(
        GeodesicState::from_angle([0.0, 0.0], 0.4),
        &sum,
        -half,
        2.0 * half / count as f64,
        count,
        "plane",
    )
    .unwrap()
}

#[test]
fn windowed_continuation_of_plane_wave() {
    let mu = 6.0;
    let samples = plane_wave(mu, 10.0, 1024);
    let spec =
        windowed_transform(&samples, ConvergenceFactor::Gaussian, SigmaGrid::covering(mu, SIGMA_PAD, 10.0, 1), 0.3)
            .unwrap();
    for (t, tau) in [(0.0, 0.2), (1.5, -0.25), (-3.0, 0.1)] {
        let z = C64::new(t, tau);
        let g = (-z * z / 2.0).exp();
        let want = g * (C64::i() * mu * z).exp();
        let got = continue_windowed(&spec, ComplexPoint::new(t, tau), false).unwrap();
        assert!((got - want).norm() <= 1e-6 * want.norm(), "{t} {tau}");
        let divided = continue_windowed(&spec, ComplexPoint::new(t, tau), true).unwrap();
        assert!((divided - (C64::i() * mu * z).exp()).norm() < 1e-6);
    }
}

#[test]
fn windowed_continuation_on_real_axis_inverts_transform() {
    let mode = sample_random_wave(20.0, 1.0, 1).unwrap();
    let state = GeodesicState::from_angle([0.2, 0.5], 0.9);
    let samples = RestrictionSamples::window(&mode, &state, 10.0, 1024).unwrap();
    let spec = windowed_transform(&samples, ConvergenceFactor::Gaussian, SigmaGrid::covering(21.0, SIGMA_PAD, 10.0, 1), 0.3)
        .unwrap();
    for k in (256..768).step_by(37) {
        let t = samples.t(k);
        let g = (-t * t / 2.0f64).exp();
        let got = continue_windowed(&spec, ComplexPoint::new(t, 0.0), false).unwrap();
        assert!((got - samples.values[k] * g).norm() < 1e-8, "t={t}");
    }
}

#[test]
fn truncated_sigma_grid_is_too_coarse() {
    let mu = 6.0;
    let samples = plane_wave(mu, 10.0, 1024);
    let short = SigmaGrid::covering(0.0, 3.0, 10.0, 1);
    let spec = windowed_transform(&samples, ConvergenceFactor::Gaussian, short, 0.3).unwrap();
    let err = continue_windowed(&spec, ComplexPoint::new(0.0, 0.1), false).unwrap_err();
    assert!(matches!(err, Error::GridTooCoarse(_)));
}

#[test]
fn single_frequency_profile_is_linear_in_tau() {
    let lambda = 12.0;
    let s = PeriodicSpectrum::from_pairs(lambda, TAU, &[(12, C64::new(1.0, 0.0))]).unwrap();
    let strip = Strip::new(0.0, TAU, 0.4, 33, 9).unwrap();
    let p = growth_profile(&s, &strip).unwrap();
    for (i, tau) in strip.taus().iter().enumerate() {
        for v in p.row(i) {
            assert!((v + 2.0 * tau).abs() < 1e-14);
        }
    }
}

#[test]
fn sine_profile_approaches_two_tau() {
    let s = PeriodicSpectrum::sine(100);
    let strip = Strip::new(0.0, TAU, 0.3, 257, 7).unwrap();
    let p = growth_profile(&s, &strip).unwrap();
    for (i, tau) in strip.taus().iter().enumerate() {
        if tau.abs() < 0.29 {
            continue;
        }
        for v in p.row(i) {
            assert!((v - 0.6).abs() <= 0.05, "{v}");
        }
    }
}

#[test]
fn zero_spectrum_profile_is_floor() {
    let s = PeriodicSpectrum::from_pairs(5.0, TAU, &[]).unwrap();
    let p = growth_profile(&s, &Strip::new(0.0, 1.0, 0.2, 4, 3).unwrap()).unwrap();
    assert!(p.values.iter().all(|v| *v == LOG_FLOOR));
    let zero_lambda = PeriodicSpectrum::from_pairs(0.0, TAU, &[(0, C64::new(1.0, 0.0))]).unwrap();
    assert!(matches!(
        growth_profile(&zero_lambda, &Strip::new(0.0, 1.0, 0.2, 4, 3).unwrap()),
        Err(Error::ZeroEigenvalue)
    ));
}

#[test]
fn profile_csv_has_header_and_all_nodes() {
    let s = PeriodicSpectrum::sine(3);
    let p = growth_profile(&s, &Strip::new(0.0, 1.0, 0.2, 4, 3).unwrap()).unwrap();
    let mut out = Vec::new();
    p.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("t,tau,v"));
    assert_eq!(text.lines().count(), 1 + 12);
}

#[test]
fn l2_exponent_examples() {
    let single = PeriodicSpectrum::from_pairs(9.0, TAU, &[(-9, C64::new(0.6, -0.1))]).unwrap();
    for tau in [0.1, 0.3, 0.7] {
        assert!((l2_growth_exponent(&single, tau).unwrap() - 2.0 * tau).abs() < 1e-14);
    }
    let zonal = sphere_equator_spectrum(30, 0).unwrap();
    for tau in [0.1, 0.3, -0.3] {
        assert_eq!(l2_growth_exponent(&zonal, tau).unwrap(), 0.0);
    }
    let empty = PeriodicSpectrum::from_pairs(3.0, TAU, &[]).unwrap();
    assert!(matches!(l2_growth_exponent(&empty, 0.2), Err(Error::EmptySpectrum)));
}

#[test]
fn random_wave_l2_exponent_is_near_two_tau() {
    let seeds = 6;
    let mean: f64 =
        (0..seeds).map(|s| l2_growth_exponent(&random_spectrum(300.0, s), 0.3).unwrap()).sum::<f64>() / seeds as f64;
    assert!((0.55..=0.61).contains(&mean), "{mean}");
}

/// Bump `e^{-(z - c)^2 / (2 w^2)} e^{i lambda z}`, holomorphic in `z`.
struct Bump {
    lambda: f64,
    centre: f64,
    width: f64,
}

impl Continuation for Bump {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn value_at(&self, z: ComplexPoint) -> Result<C64> {
        let z = z.to_c64();
        let d = (z - self.centre) / self.width;
        Ok((-d * d / 2.0).exp() * (C64::i() * self.lambda * z).exp())
    }
}

#[test]
fn window_selection_finds_a_bump() {
    let (t0, t1, count) = (-20.0, 20.0, 4001);
    let dt = (t1 - t0) / (count - 1) as f64;
    for centre in [-7.3, 0.0, 4.21, 11.0] {
        let bump = Bump { lambda: 50.0, centre, width: 0.7 };
        let line = LineSamples::sample(&bump, -0.2, t0, t1, count).unwrap();
        let w = select_window(&line, 1.0).unwrap();
        assert!((w.start - (centre - 0.5)).abs() <= dt, "{centre}: {}", w.start);
    }
}

#[test]
fn window_selection_is_translation_equivariant() {
    let (t0, t1, count) = (-10.0, 10.0, 2001);
    let dt = (t1 - t0) / (count - 1) as f64;
    let base = select_window(
        &LineSamples::sample(&Bump { lambda: 20.0, centre: 1.234, width: 0.5 }, 0.1, t0, t1, count).unwrap(),
        1.0,
    )
    .unwrap();
    for k in [-200i32, -13, 7, 311] {
        let shifted = Bump { lambda: 20.0, centre: 1.234 + k as f64 * dt, width: 0.5 };
        let w = select_window(&LineSamples::sample(&shifted, 0.1, t0, t1, count).unwrap(), 1.0).unwrap();
        assert!((w.start - base.start - k as f64 * dt).abs() < 1e-9, "{k}");
    }
}

#[test]
fn constant_magnitude_picks_left_end() {
    let s = PeriodicSpectrum::from_pairs(4.0, TAU, &[(4, C64::new(1.0, 0.0))]).unwrap();
    let line = LineSamples::sample(&s, 0.2, -3.0, 3.0, 601).unwrap();
    assert_eq!(select_window(&line, 1.0).unwrap().start, -3.0);
}

fn on_shell(tau: f64) -> nodal_core::geodesic::ComplexSurfacePoint {
    let state = GeodesicState::from_angle([0.4, 1.0], 0.3);
    flat_complex_geodesic(&SurfaceModel::FlatTorus, &state, ComplexPoint::new(0.8, tau)).unwrap()
}

#[test]
fn weyl_sum_grows_like_three_halves_power() {
    let tau = 0.3;
    let zeta = on_shell(tau);
    let lambdas = [100.0f64, 200.0, 400.0];
    let logs: Vec<f64> =
        lambdas.iter().map(|&l| tempered_weyl_sum(&SurfaceModel::FlatTorus, &zeta, l, tau).unwrap().ln()).collect();
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let k = slope(&xs, &logs);
    assert!((k - 1.5).abs() <= 0.15, "{k}");
}

#[test]
fn weyl_sum_is_positive_for_large_tau() {
    let v = tempered_weyl_sum(&SurfaceModel::FlatTorus, &on_shell(2.0), 50.0, 2.0).unwrap();
    assert!(v > 0.0 && v.is_finite());
}

#[test]
fn weyl_sum_needs_on_shell_point() {
    let err = tempered_weyl_sum(&SurfaceModel::FlatTorus, &on_shell(0.0), 100.0, 0.3).unwrap_err();
    assert!(matches!(err, Error::OffShell { .. }));
    let err = tempered_weyl_sum(&SurfaceModel::FlatTorus, &on_shell(0.3), 100.0, 0.0).unwrap_err();
    assert!(matches!(err, Error::OffShell { .. }));
}

#[test]
fn sup_exponent_examples() {
    let grid: Vec<f64> = (0..400).map(|k| TAU * k as f64 / 400.0).collect();
    let mode = make_torus_mode([-5, 0], C64::new(0.2, 0.0));
    let e = sup_growth_exponent_mode(&mode, &horizontal(), 0.3, &grid).unwrap();
    assert!((e - 0.3).abs() < 1e-14);

    let zonal = sphere_equator_spectrum(40, 0).unwrap();
    assert_eq!(sup_growth_exponent(&zonal, 0.3, &grid).unwrap(), 0.0);

    let fine: Vec<f64> = (0..8192).map(|k| TAU * k as f64 / 8192.0).collect();
    let wave = sample_random_wave(300.0, 1.0, 0).unwrap();
    let e = sup_growth_exponent_mode(&wave, &horizontal(), 0.3, &fine).unwrap();
    assert!((e - 0.3).abs() <= 0.03, "{e}");
}

fn family(lambdas: &[f64], strip: &Strip, spectrum: impl Fn(f64) -> PeriodicSpectrum) -> Vec<GrowthProfile> {
    lambdas.iter().map(|&l| growth_profile(&spectrum(l), strip).unwrap()).collect()
}

#[test]
fn random_waves_are_nowhere_deficient() {
    let strip = Strip::new(0.0, TAU, 0.3, 721, 5).unwrap();
    let profiles = family(&[50.0, 100.0, 200.0], &strip, |l| random_spectrum(l, 2));
    let rep = hartogs_dichotomy_check(&profiles, 0.1, (0.0, TAU / 9.0)).unwrap();
    assert!(!rep.probe_deficient, "{rep:?}");
    assert_eq!(rep.translates_deficient, 0);
    assert!(rep.dichotomy_holds);
    assert!(rep.global_bound_holds, "{rep:?}");
}

#[test]
fn transverse_beam_is_deficient_everywhere() {
    // a beam seen across its equator carries only the zero frequency
    let strip = Strip::new(0.0, TAU, 0.3, 361, 5).unwrap();
    let profiles = family(&[50.0, 100.0, 200.0], &strip, |l| sphere_equator_spectrum(l as i64, 0).unwrap());
    let rep = hartogs_dichotomy_check(&profiles, 0.1, (0.0, TAU / 9.0)).unwrap();
    assert!(rep.probe_deficient);
    assert_eq!(rep.translates_deficient, 8);
    assert!(rep.dichotomy_holds);
}

#[test]
fn dichotomy_needs_three_profiles() {
    let strip = Strip::new(0.0, TAU, 0.3, 91, 5).unwrap();
    let profiles = family(&[50.0], &strip, |l| random_spectrum(l, 2));
    assert!(hartogs_dichotomy_check(&profiles, 0.1, (0.0, 0.5)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sine_modulus_closed_form(n in 1i64..80, t in 0.0f64..TAU, tau in -0.5f64..0.5) {
        let s = PeriodicSpectrum::sine(n);
        let l = n as f64;
        let exact = (l * t).sin().powi(2) + (l * tau).sinh().powi(2);
        let got = s.eval(C64::new(t, tau)).norm_sqr();
        prop_assert!((got - exact).abs() <= 1e-12 * exact.max(1e-300) + 1e-300, "{got} {exact}");
    }

    #[test]
    fn one_sided_l2_exponent_is_monotone(coeffs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..20), t1 in 0.0f64..0.5, dt in 0.0f64..0.5) {
        let pairs: Vec<(i64, C64)> = coeffs.iter().enumerate().map(|(k, &(a, b))| (-(k as i64), C64::new(a, b))).collect();
        prop_assume!(pairs.iter().any(|(_, c)| c.norm() > 0.0));
        let s = PeriodicSpectrum::from_pairs(pairs.len() as f64, TAU, &pairs).unwrap();
        prop_assert!(l2_growth_exponent(&s, t1 + dt).unwrap() >= l2_growth_exponent(&s, t1).unwrap());
    }

    #[test]
    fn profiles_are_translation_equivariant(seed in 0u64..500, k in 0usize..40) {
        let s = random_spectrum(20.0, seed);
        let strip = Strip::new(0.0, PI, 0.2, 81, 5).unwrap();
        let shift = k as f64 * strip.ht();
        let shifted = growth_profile(&s.translated(shift), &strip).unwrap();
        let wide = growth_profile(&s, &Strip::new(0.0, PI + shift, 0.2, 81 + k, 5).unwrap()).unwrap();
        let scale = wide.values.iter().map(|v| (s.lambda() * v).exp()).fold(0.0, f64::max);
        for i in 0..strip.ntau {
            for j in 0..strip.nt {
                let a = shifted.get(i, j);
                let b = wide.get(i, j + k);
                // near zeros of the continuation compare |f|^2 instead of its logarithm
                let (fa, fb) = ((s.lambda() * a).exp(), (s.lambda() * b).exp());
                prop_assert!((a - b).abs() <= 1e-12 || (fa - fb).abs() <= 1e-12 * scale, "{a} {b}");
            }
        }
    }

    #[test]
    fn l2_exponent_matches_line_quadrature(seed in 0u64..500, tau in -0.4f64..0.4) {
        let s = random_spectrum(15.0, seed);
        let n = 512;
        let h = TAU / n as f64;
        let line = |tau: f64| -> f64 {
            let lam = s.lambda();
            let strip = Strip::new(0.0, TAU - h, if tau == 0.0 { 1.0 } else { tau.abs() }, n, 3).unwrap();
            let row = if tau == 0.0 { 1 } else if tau < 0.0 { 0 } else { 2 };
            let p = growth_profile(&s, &strip).unwrap();
            // periodic trapezoid of e^{lambda v} = |f|^2
            p.row(row).iter().map(|v| (lam * v).exp()).sum::<f64>() * h
        };
        let direct = (line(tau).ln() - line(0.0).ln()) / s.lambda();
        prop_assert!((direct - l2_growth_exponent(&s, tau).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn global_upper_bound(seed in 0u64..1000, lambda in 20.0f64..120.0, qy in 0i64..3) {
        let mode = sample_random_wave(lambda, 1.0, seed).unwrap();
        let state = GeodesicState::periodic([0.3, 0.9], [1, qy]).unwrap();
        let s = restrict_periodic(&mode, &state).unwrap();
        let strip = Strip::new(0.0, s.period(), 0.3, 257, 7).unwrap();
        let p = growth_profile(&s, &strip).unwrap();
        let slack = 6.0 * mode.lambda.ln() / mode.lambda;
        prop_assert!(p.max_excess() <= slack, "{} {}", p.max_excess(), slack);
    }
}
