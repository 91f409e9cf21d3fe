//! Experiment drivers. Every experiment evaluates independent `(lambda, seed)`
//! cells in parallel, collects them in input order and then applies its
//! tolerance checks to the ensemble statistics.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use nodal_core::fourier::{
    band_mass, orbital_coefficients, plancherel_check, total_mass, RestrictionSamples, SigmaGrid, SIGMA_PAD,
};
use nodal_core::geodesic::{
    asymmetry_diagnostic, first_return, flat_complex_geodesic, flat_sqrt_rho, integrate_complex_geodesic,
    ComplexPath, ComplexPoint, ComplexSurfacePoint, GeodesicState, Section,
};
use nodal_core::growth::{
    growth_profile, l2_growth_exponent, select_window, sup_growth_exponent, LineSamples, Strip,
};
use nodal_core::surface::{
    restrict_exponential_sum, restrict_periodic, sample_random_wave, sphere_equator_spectrum, Eigenmode,
};
use nodal_core::wigner::{
    default_points, moving_pullback_windowed, normalized_pullback, qer_matrix_element, translation_stat_on,
    SymbolDescriptor, WavePacket,
};
use nodal_core::zeros::{empirical_measure_pairing, laurent_roots, TestFunction};
use nodal_core::{Continuation, OrbitalSpectrum, PeriodicSpectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{wigner_window, ExperimentConfig, ExperimentKind, GeodesicSpec, HarmonicOrder, SurfaceSpec};
use crate::output::{aggregate, inputs_hash, CellResult, Check, ResultRecord};
use crate::LabError;

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroRow {
    pub lambda: f64,
    pub seed: u64,
    pub t: f64,
    pub tau: f64,
    pub multiplicity: usize,
}

/// Seed-averaged row mean of `v` at one height.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRow {
    pub lambda: f64,
    pub tau: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRow {
    pub lambda: f64,
    pub t: f64,
    pub density: f64,
}

/// Tables behind the plots.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawData {
    pub zeros: Vec<ZeroRow>,
    pub growth: Vec<GrowthRow>,
    pub wigner: Vec<DensityRow>,
}

/// A finished run: the deterministic record plus what goes in the manifest.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Run {
    pub record: ResultRecord,
    pub raw: RawData,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

#[derive(Default)]
struct CellOutput {
    metrics: BTreeMap<String, f64>,
    zeros: Vec<(f64, f64, usize)>,
    growth: Vec<(f64, f64)>,
    density: Vec<(f64, f64)>,
}

impl CellOutput {
    fn set(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }
}

type CellResultOf = Result<CellOutput, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Runs the configured experiment on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Run, LabError> {
    config.validate()?;
    let start = Instant::now();
    let lambdas: Vec<f64> = if config.experiment == ExperimentKind::Geometry { vec![0.0] } else { config.lambdas.clone() };
    let cells: Vec<(usize, f64, u64)> = lambdas
        .iter()
        .enumerate()
        .flat_map(|(i, l)| config.seeds.iter().map(move |s| (i, *l, *s)))
        .collect();
    let outputs: Vec<CellResultOf> =
        cells.par_iter().map(|&(i, lambda, seed)| run_cell(config, i, lambda, seed)).collect();

    let mut raw = RawData::default();
    let mut results = Vec::with_capacity(cells.len());
    let mut growth_acc: BTreeMap<(usize, usize), (f64, f64, f64, usize)> = BTreeMap::new();
    for (&(i, lambda, seed), out) in cells.iter().zip(outputs) {
        let out = out.and_then(|o| match o.metrics.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, v)) => Err(format!("metric {name} is not finite ({v})")),
            None => Ok(o),
        });
        match out {
            Ok(o) => {
                raw.zeros.extend(o.zeros.iter().map(|&(t, tau, multiplicity)| ZeroRow { lambda, seed, t, tau, multiplicity }));
                for (row, &(tau, v)) in o.growth.iter().enumerate() {
                    let e = growth_acc.entry((i, row)).or_insert((lambda, tau, 0.0, 0));
                    e.2 += v;
                    e.3 += 1;
                }
                if seed == config.seeds[0] {
                    raw.wigner.extend(o.density.iter().map(|&(t, density)| DensityRow { lambda, t, density }));
                }
                results.push(CellResult { lambda, seed, metrics: o.metrics, error: None });
            }
            Err(e) => results.push(CellResult { lambda, seed, metrics: BTreeMap::new(), error: Some(e) }),
        }
    }
    raw.growth = growth_acc.into_values().map(|(lambda, tau, sum, n)| GrowthRow { lambda, tau, v: sum / n as f64 }).collect();

    let aggregates = aggregate(&results);
    let mut record = ResultRecord {
        experiment: config.experiment.name().into(),
        inputs_hash: inputs_hash(config),
        cells: results,
        aggregates,
        checks: Vec::new(),
        pass: false,
    };
    record.checks = checks(config, &record, &lambdas);
    let failed = record.failed_cells();
    record.checks.push(Check::at_most("failed_cells", failed as f64, 0.0));
    record.pass = record.checks.iter().all(|c| c.pass);
    Ok(Run {
        record,
        raw,
        lambdas: config.lambdas.clone(),
        seeds: config.seeds.clone(),
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_cell(cfg: &ExperimentConfig, index: usize, lambda: f64, seed: u64) -> CellResultOf {
    match cfg.experiment {
        ExperimentKind::Equidistribution => equidistribution_cell(cfg, lambda, seed),
        ExperimentKind::Growth => growth_cell(cfg, lambda, seed),
        ExperimentKind::BandMass => band_mass_cell(cfg, lambda, seed),
        ExperimentKind::Wigner => wigner_cell(cfg, lambda, seed),
        ExperimentKind::Qer => qer_cell(cfg, lambda, seed),
        ExperimentKind::Geometry => geometry_cell(cfg, seed),
        ExperimentKind::NonperiodicWindow => match cfg.surface {
            SurfaceSpec::TravellingBump { width, half_range } => bump_cell(cfg, index, lambda, seed, width, half_range),
            _ => window_cell(cfg, lambda, seed),
        },
    }
}

/// Restriction of the configured eigenfunction to the configured closed
/// curve, with the torus mode when there is one.
fn periodic_input(cfg: &ExperimentConfig, lambda: f64, seed: u64) -> Result<(PeriodicSpectrum, Option<(Eigenmode, GeodesicState)>), String> {
    match (&cfg.surface, &cfg.geodesic) {
        (SurfaceSpec::RandomWaveTorus { delta }, GeodesicSpec::Periodic { x, q }) => {
            let mode = sample_random_wave(lambda, *delta, seed).map_err(err)?;
            let state = GeodesicState::periodic(*x, *q).map_err(err)?;
            let spectrum = restrict_periodic(&mode, &state).map_err(err)?;
            Ok((spectrum, Some((mode, state))))
        }
        (SurfaceSpec::SineStub, _) => Ok((PeriodicSpectrum::sine(lambda as i64), None)),
        (SurfaceSpec::SphereEquator { order }, _) => {
            let l = lambda as i64;
            let m = match order {
                HarmonicOrder::Beam => l,
                HarmonicOrder::Zonal => 0,
            };
            Ok((sphere_equator_spectrum(l, m).map_err(err)?, None))
        }
        _ => Err("configuration does not describe a closed restriction".into()),
    }
}

fn equidistribution_cell(cfg: &ExperimentConfig, lambda: f64, seed: u64) -> CellResultOf {
    let (spectrum, _) = periodic_input(cfg, lambda, seed)?;
    let tau_max = cfg.strip.tau_max;
    let zeros = laurent_roots(&spectrum, tau_max).map_err(err)?;
    let period = spectrum.period();
    let bx = TestFunction::BoxIndicator { t0: 0.0, t1: period, tau0: -tau_max, tau1: tau_max, smoothing: 0.0 };
    let pairing = empirical_measure_pairing(&zeros, &bx).map_err(err)?;
    let near = cfg.tolerance("concentration_tau");
    let count = zeros.count();
    let close: usize = zeros.zeros.iter().filter(|z| z.tau.abs() <= near).map(|z| z.multiplicity).sum();
    let mut out = CellOutput::default();
    out.set("zero_count", count as f64);
    out.set("count_over_lambda", pairing.pairing);
    out.set("reference", pairing.reference);
    out.set("pairing_gap", pairing.gap);
    out.set("near_real_fraction", if count == 0 { 0.0 } else { close as f64 / count as f64 });
    out.set("max_abs_tau", zeros.zeros.iter().map(|z| z.tau.abs()).fold(0.0, f64::max));
    out.set("max_residual", zeros.max_residual);
    out.zeros = zeros.zeros.iter().map(|z| (z.t, z.tau, z.multiplicity)).collect();
    Ok(out)
}

fn strip_over_period(cfg: &ExperimentConfig, period: f64, lambda: f64) -> Result<Strip, String> {
    let nt = (period * cfg.strip.points_per_wavelength * lambda.max(1.0) / TAU).ceil() as usize + 1;
    Strip::new(0.0, period, cfg.strip.tau_max, nt, cfg.strip.ntau).map_err(err)
}

fn growth_cell(cfg: &ExperimentConfig, lambda: f64, seed: u64) -> CellResultOf {
    let (spectrum, _) = periodic_input(cfg, lambda, seed)?;
    let tau = cfg.strip.height();
    let mut out = CellOutput::default();
    let e = l2_growth_exponent(&spectrum, tau).map_err(err)?;
    out.set("l2_exponent", e);
    out.set("l2_gap", (e - 2.0 * tau).abs());
    let strip = strip_over_period(cfg, spectrum.period(), spectrum.lambda())?;
    out.set("sup_exponent", sup_growth_exponent(&spectrum, tau, &strip.ts()).map_err(err)?);
    let profile = growth_profile(&spectrum, &strip).map_err(err)?;
    let lam = spectrum.lambda();
    let slack = cfg.tolerance("bound_coefficient") * lam.ln() / lam;
    let mut violations = 0usize;
    for (i, t) in strip.taus().iter().enumerate() {
        let row = profile.row(i);
        violations += row.iter().filter(|v| **v > 2.0 * t.abs() + slack).count();
        out.growth.push((*t, row.iter().sum::<f64>() / row.len() as f64));
    }
    out.set("bound_violations", violations as f64);
    out.set("bound_margin", profile.max_excess() - slack);
    out.set("grid_points", profile.values.len() as f64);
    Ok(out)
}

/// Orbital spectrum estimated from samples when a torus mode is available.
fn orbital_spectrum(spectrum: PeriodicSpectrum, mode: Option<(Eigenmode, GeodesicState)>) -> Result<(OrbitalSpectrum, Option<f64>), String> {
    let Some((mode, state)) = mode else {
        return Ok((OrbitalSpectrum::Periodic(spectrum), None));
    };
    let n_max = spectrum.min_index().unsigned_abs().max(spectrum.max_index().unsigned_abs()) as usize;
    let count = (4 * (n_max + 1)).next_power_of_two();
    let samples = RestrictionSamples::periodic(&mode, &state, count).map_err(err)?;
    let fit = orbital_coefficients(&samples, n_max).map_err(err)?;
    Ok((OrbitalSpectrum::Periodic(fit.spectrum), Some(fit.parseval_defect)))
}

fn band_mass_cell(cfg: &ExperimentConfig, lambda: f64, seed: u64) -> CellResultOf {
    let (spectrum, mode) = periodic_input(cfg, lambda, seed)?;
    let (orbital, defect) = orbital_spectrum(spectrum, mode)?;
    let total = total_mass(&orbital);
    if !(total > 0.0) {
        return Err("restriction carries no mass".into());
    }
    let [lo, hi] = cfg.params.band;
    let eps = cfg.params.saturation_eps;
    let mut out = CellOutput::default();
    out.set("total_mass", total);
    out.set("band_ratio", band_mass(&orbital, lo, hi).map_err(err)? / total);
    out.set("saturation_ratio", band_mass(&orbital, 1.0 - eps, 1.0).map_err(err)? / total);
    if let Some(d) = defect {
        out.set("parseval_defect", d);
    }
    Ok(out)
}

/// `2 (arcsin b - arcsin a) / pi`, the limit share of the band `[a, b)`.
pub fn band_reference(lo: f64, hi: f64) -> f64 {
    2.0 * (hi.asin() - lo.asin()) / PI
}

fn wigner_cell(cfg: &ExperimentConfig, lambda: f64, seed: u64) -> CellResultOf {
    let (spectrum, _) = periodic_input(cfg, lambda, seed)?;
    let [a, b] = cfg.params.interval;
    let density = normalized_pullback(&spectrum, cfg.strip.height(), (a, b), None).map_err(err)?;
    let stat = translation_stat_on(&density, &wigner_window(&cfg.params), cfg.params.shift).map_err(err)?;
    let mut out = CellOutput::default();
    out.set("gap", stat.gap);
    out.set("derivative_pairing", stat.derivative_pairing);
    out.set("density_points", density.samples.len() as f64);
    out.density = density.samples.iter().enumerate().map(|(k, d)| (density.t(k), *d)).collect();
    Ok(out)
}

fn qer_cell(cfg: &ExperimentConfig, lambda: f64, seed: u64) -> CellResultOf {
    let (spectrum, mode) = periodic_input(cfg, lambda, seed)?;
    let (mode, state) = mode.ok_or("QER elements need a torus mode")?;
    let n_max = spectrum.min_index().unsigned_abs().max(spectrum.max_index().unsigned_abs()) as usize;
    let samples = RestrictionSamples::periodic(&mode, &state, (4 * (n_max + 1)).next_power_of_two()).map_err(err)?;
    let q = qer_matrix_element(&samples, &cfg.params.symbol).map_err(err)?;
    if !(q.total > 0.0) {
        return Err("restriction carries no mass".into());
    }
    let mut out = CellOutput::default();
    out.set("value", q.value);
    out.set("reference", q.reference);
    out.set("total", q.total);
    out.set("ratio", q.value / q.total);
    out.set("expected_ratio", qer_expected_ratio(&cfg.params.symbol, spectrum.period()));
    Ok(out)
}

/// Limit of `value / total` under equidistribution in `ds dsigma / sqrt(1 - sigma^2)`.
pub fn qer_expected_ratio(symbol: &SymbolDescriptor, period: f64) -> f64 {
    let space = |a: &nodal_core::wigner::Window| a.integral() / period;
    let freq = |c: &nodal_core::wigner::Cutoff| c.weighted_integral() / PI;
    match symbol {
        SymbolDescriptor::Multiplication { alpha } => space(alpha),
        SymbolDescriptor::FrequencyCutoff { chi } => freq(chi),
        SymbolDescriptor::Separable { alpha, chi } => space(alpha) * freq(chi),
    }
}

fn torus_gap(a: &ComplexSurfacePoint, b: &ComplexSurfacePoint) -> f64 {
    (0..2)
        .map(|i| {
            let re = (a.zeta[i].re - b.zeta[i].re).rem_euclid(TAU);
            re.min(TAU - re).hypot(a.zeta[i].im - b.zeta[i].im)
        })
        .fold(0.0, f64::max)
}

const PATH_CHECKS: usize = 4;
const PATH_STEP: f64 = 0.01;

fn geometry_cell(cfg: &ExperimentConfig, seed: u64) -> CellResultOf {
    let surface = cfg.surface.model().ok_or("geometry needs a torus")?;
    let GeodesicSpec::Section { section } = cfg.geodesic else {
        return Err("geometry needs a section".into());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CellOutput::default();
    let tau_max = cfg.strip.tau_max;
    let random_state = |rng: &mut ChaCha8Rng| {
        GeodesicState::from_angle([rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)], rng.random_range(0.0..TAU))
    };

    if surface.is_flat_torus() {
        let mut worst = 0.0f64;
        for _ in 0..cfg.params.samples {
            let state = random_state(&mut rng);
            let z = ComplexPoint::new(rng.random_range(-10.0..10.0), rng.random_range(-2.0..2.0));
            let p = flat_complex_geodesic(&surface, &state, z).map_err(err)?;
            worst = worst.max((flat_sqrt_rho(&p) - z.tau.abs()).abs());
        }
        out.set("isometry_defect", worst);

        let mut worst = 0.0f64;
        for _ in 0..PATH_CHECKS {
            let theta: f64 = rng.random_range(0.3..PI - 0.3);
            let s: f64 = rng.random_range(0.0..TAU);
            let (x, along) = match section {
                Section::Horizontal { c } => ([s, c], [theta.cos(), theta.sin()]),
                Section::Vertical { c } => ([c, s], [theta.sin(), theta.cos()]),
            };
            let start = GeodesicState { x, xi: along, period: None, q: None };
            let r = first_return(&surface, &section, &start, cfg.params.horizon).map_err(err)?;
            let exact = TAU / theta.sin();
            let got = r.time.finite().ok_or("flat return missing inside the horizon")?;
            worst = worst.max((got - exact).abs());
        }
        out.set("return_defect", worst);
    }

    let mut worst = 0.0f64;
    for _ in 0..PATH_CHECKS {
        let state = random_state(&mut rng);
        let z = ComplexPoint::new(rng.random_range(0.0..2.0), rng.random_range(-0.75..0.75) * tau_max);
        let a = integrate_complex_geodesic(&surface, &state, &ComplexPath::real_first(z, tau_max), PATH_STEP).map_err(err)?;
        let b = integrate_complex_geodesic(&surface, &state, &ComplexPath::imaginary_first(z, tau_max), PATH_STEP)
            .map_err(err)?;
        worst = worst.max(torus_gap(&a, &b));
    }
    out.set("path_independence", worst);

    let report = asymmetry_diagnostic(&surface, &section, cfg.params.asymmetry_samples, cfg.params.horizon, 3, seed)
        .map_err(err)?;
    out.set("asymmetry_estimate", report.estimate);
    out.set("asymmetry_excluded", report.excluded as f64);
    Ok(out)
}

/// Placement range for packet centres so the selected window and the
/// shifted density stay inside the packet's range.
pub(crate) fn bump_margin(window: f64, width: f64) -> f64 {
    2.0 * window + 6.0 * width + 1.0
}

fn bump_cell(cfg: &ExperimentConfig, index: usize, lambda: f64, seed: u64, width: f64, half_range: f64) -> CellResultOf {
    let w = cfg.params.window_width;
    let tau = cfg.strip.height();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let reach = half_range - bump_margin(w, width);
    let centre: f64 = rng.random_range(-reach..reach);
    let packet = WavePacket { lambda, centre, width, frequency: lambda, amplitude: 1.0, half_range };

    let density_cell = 2.0 * w / (default_points(lambda, 2.0 * w) - 1) as f64;
    let count = (2.0 * half_range / (density_cell / 2.5)).ceil() as usize + 1;
    let line = LineSamples::sample(&packet, tau, -half_range, half_range, count).map_err(err)?;
    let n = select_window(&line, w).map_err(err)?.start;
    let location_error = (n + 0.5 * w - centre).abs();
    let dens = moving_pullback_windowed(&[&packet as &dyn Continuation], tau, (-w, w), &[n + 0.5 * w]).map_err(err)?;
    let peak = dens[0].peak();

    let mut out = CellOutput::default();
    out.set("centre", centre);
    out.set("window_start", n);
    out.set("location_error", location_error);
    out.set("located", if location_error <= line.dt { 1.0 } else { 0.0 });
    out.set("peak_offset", peak.abs());
    out.set("recentred", if peak.abs() <= dens[0].dt() { 1.0 } else { 0.0 });
    out.density = dens[0].samples.iter().enumerate().map(|(k, d)| (dens[0].t(k), *d)).collect();
    Ok(out)
}

fn window_cell(cfg: &ExperimentConfig, lambda: f64, seed: u64) -> CellResultOf {
    let (SurfaceSpec::RandomWaveTorus { delta }, GeodesicSpec::Angle { x, theta }) = (&cfg.surface, &cfg.geodesic) else {
        return Err("windowed restrictions need a random wave on an angle geodesic".into());
    };
    let p = &cfg.params;
    let tau = cfg.strip.height();
    let mode = sample_random_wave(lambda, *delta, seed).map_err(err)?;
    let state = GeodesicState::from_angle(*x, *theta);
    let samples = RestrictionSamples::window(&mode, &state, p.half_window, p.window_samples).map_err(err)?;
    let grid = SigmaGrid::covering(lambda + delta, SIGMA_PAD, p.half_window, 1);
    let check = plancherel_check(&samples, p.factor, tau, grid, 1).map_err(err)?;

    let sum = restrict_exponential_sum(&mode, &state).map_err(err)?;
    let count = (2.0 * p.half_window * cfg.strip.points_per_wavelength * lambda / TAU).ceil() as usize + 1;
    let line = LineSamples::sample(&sum, tau, -p.half_window, p.half_window, count).map_err(err)?;
    let choice = select_window(&line, p.window_width).map_err(err)?;

    let mut out = CellOutput::default();
    out.set("plancherel_gap", check.relative_gap);
    out.set("plancherel_lhs", check.lhs);
    out.set("window_start", choice.start);
    out.set("window_exponent", choice.exponent);
    Ok(out)
}

fn means(record: &ResultRecord, lambdas: &[f64], metric: &str) -> Vec<f64> {
    lambdas.iter().map(|l| record.aggregate(*l, metric).map_or(f64::NAN, |a| a.mean)).collect()
}

fn worst_gap(values: &[f64], target: impl Fn(usize) -> f64) -> f64 {
    values.iter().enumerate().map(|(i, v)| (v - target(i)).abs()).fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
}

fn cell_extreme(record: &ResultRecord, metric: &str, max: bool) -> f64 {
    let vals = record.cells.iter().filter_map(|c| c.metrics.get(metric).copied());
    if max {
        vals.fold(f64::NEG_INFINITY, f64::max)
    } else {
        vals.fold(f64::INFINITY, f64::min)
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn checks(cfg: &ExperimentConfig, record: &ResultRecord, lambdas: &[f64]) -> Vec<Check> {
    let tol = |name: &str| cfg.tolerance(name);
    let last = |xs: Vec<f64>| xs.last().copied().unwrap_or(f64::NAN);
    let mut out = Vec::new();
    match cfg.experiment {
        ExperimentKind::Equidistribution => {
            let ratios = means(record, lambdas, "count_over_lambda");
            let refs = means(record, lambdas, "reference");
            let rel = ratios.iter().zip(&refs).map(|(r, e)| (r - e).abs() / e).fold(0.0, f64::max);
            out.push(Check::at_most("count_ratio", rel, tol("count_ratio")));
            let frac = means(record, lambdas, "near_real_fraction").into_iter().fold(f64::INFINITY, f64::min);
            out.push(Check::at_least("concentration", frac, tol("concentration")));
        }
        ExperimentKind::Growth => {
            let gaps = means(record, lambdas, "l2_gap");
            out.push(Check::at_most("l2_gap", last(gaps.clone()), tol("l2_gap")));
            if gaps.len() > 1 {
                out.push(Check::holds("l2_gap_monotone", strictly_decreasing(&gaps)));
            }
            let violations: f64 = record.cells.iter().filter_map(|c| c.metrics.get("bound_violations")).sum();
            out.push(Check::at_most("global_bound_violations", violations, 0.0));
        }
        ExperimentKind::BandMass => {
            let [lo, hi] = cfg.params.band;
            let reference = band_reference(lo, hi);
            let ratios = means(record, lambdas, "band_ratio");
            out.push(Check::at_most("band_ratio", worst_gap(&ratios, |_| reference), tol("band_ratio")));
            out.push(Check::at_least("saturation_min", cell_extreme(record, "saturation_ratio", false), tol("saturation_min")));
        }
        ExperimentKind::Wigner => {
            let gaps = means(record, lambdas, "gap");
            out.push(Check::at_most("gap", last(gaps.clone()), tol("gap")));
            if gaps.len() > 1 {
                out.push(Check::holds("gap_monotone", strictly_decreasing(&gaps)));
            }
        }
        ExperimentKind::Qer => {
            let ratios = means(record, lambdas, "ratio");
            let expected = means(record, lambdas, "expected_ratio");
            out.push(Check::at_most("ratio", worst_gap(&ratios, |i| expected[i]), tol("ratio")));
        }
        ExperimentKind::Geometry => {
            if matches!(cfg.surface, SurfaceSpec::FlatTorus) {
                out.push(Check::at_most("isometry", cell_extreme(record, "isometry_defect", true), tol("isometry")));
                out.push(Check::at_most("return_time", cell_extreme(record, "return_defect", true), tol("return_time")));
            }
            out.push(Check::at_most(
                "path_independence",
                cell_extreme(record, "path_independence", true),
                tol("path_independence"),
            ));
        }
        ExperimentKind::NonperiodicWindow => {
            if matches!(cfg.surface, SurfaceSpec::TravellingBump { .. }) {
                out.push(Check::at_least("located", cell_extreme(record, "located", false), 1.0));
                out.push(Check::at_least("recentred", cell_extreme(record, "recentred", false), 1.0));
            } else {
                let gaps = means(record, lambdas, "plancherel_gap");
                out.push(Check::at_most("plancherel", gaps.into_iter().fold(0.0, f64::max), tol("plancherel")));
            }
        }
    }
    out
}
