//! Strip continuation of restrictions and the growth functionals built on
//! `v(t, tau) = (1/lambda) log |phi^C(t + i tau)|^2`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geodesic::{flat_sqrt_rho, ComplexPoint, ComplexSurfacePoint, GeodesicState};
use crate::numeric::{linspace, trapezoid, ComplexKahanSum, KahanSum, C64};
use crate::spectrum::{Continuation, ConvergenceFactor, PeriodicSpectrum, WindowedSpectrum};
use crate::surface::{restrict_exponential_sum, Eigenmode, SurfaceModel, TORUS_AREA};

/// Clamp applied to `v` where the continuation vanishes.
pub const LOG_FLOOR: f64 = -50.0;
/// Transform coverage required beyond `lambda` for windowed continuation.
pub const SIGMA_MARGIN: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub t0: f64,
    pub t1: f64,
    pub tau_max: f64,
    pub nt: usize,
    pub ntau: usize,
}

impl Strip {
    pub fn new(t0: f64, t1: f64, tau_max: f64, nt: usize, ntau: usize) -> Result<Self> {
        if !(t0 < t1) || !(tau_max > 0.0) || nt < 2 || ntau < 2 {
            return Err(invalid("strip needs t0 < t1, tau_max > 0 and at least two nodes per axis"));
        }
        Ok(Strip { t0, t1, tau_max, nt, ntau })
    }

    pub fn ts(&self) -> Vec<f64> {
        linspace(self.t0, self.t1, self.nt)
    }

    pub fn taus(&self) -> Vec<f64> {
        linspace(-self.tau_max, self.tau_max, self.ntau)
    }

    pub fn ht(&self) -> f64 {
        (self.t1 - self.t0) / (self.nt - 1) as f64
    }

    pub fn htau(&self) -> f64 {
        2.0 * self.tau_max / (self.ntau - 1) as f64
    }
}

/// `v` on the strip grid, rows indexed by `tau`, columns by `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub strip: Strip,
    pub lambda: f64,
    pub floor: f64,
    pub values: Vec<f64>,
}

impl GrowthProfile {
    pub fn get(&self, i_tau: usize, i_t: usize) -> f64 {
        self.values[i_tau * self.strip.nt + i_t]
    }

    pub fn row(&self, i_tau: usize) -> &[f64] {
        &self.values[i_tau * self.strip.nt..(i_tau + 1) * self.strip.nt]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `v - 2|tau|` over the grid.
    pub fn max_excess(&self) -> f64 {
        let taus = self.strip.taus();
        let mut worst = f64::NEG_INFINITY;
        for (i, tau) in taus.iter().enumerate() {
            for v in self.row(i) {
                worst = worst.max(v - 2.0 * tau.abs());
            }
        }
        worst
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "tau", "v"])?;
        let ts = self.strip.ts();
        for (i, tau) in self.strip.taus().iter().enumerate() {
            for (j, t) in ts.iter().enumerate() {
                w.write_record([t.to_string(), tau.to_string(), self.get(i, j).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Direct compensated sum `sum nu(n) e^{2 pi i n (t + i tau) / L}`.
pub fn continue_periodic(spectrum: &PeriodicSpectrum, z: ComplexPoint, tau_max: f64) -> Result<C64> {
    if z.tau.abs() > tau_max {
        return Err(Error::StripExceeded { tau: z.tau, tau_max });
    }
    Ok(spectrum.eval_direct(z.to_c64()))
}

/// Quadrature of `(1/2pi) int e^{i z sigma} nu^G(sigma) dsigma`, the continuation
/// of `G phi`; with `divide_factor` the Gaussian factor's own continuation is
/// divided out.
pub fn continue_windowed(spectrum: &WindowedSpectrum, z: ComplexPoint, divide_factor: bool) -> Result<C64> {
    if z.tau.abs() > spectrum.tau_max {
        return Err(Error::StripExceeded { tau: z.tau, tau_max: spectrum.tau_max });
    }
    let need = spectrum.lambda + SIGMA_MARGIN;
    if spectrum.sigma0 > -need || spectrum.sigma_max() < need {
        return Err(Error::GridTooCoarse(format!(
            "sigma grid [{}, {}] does not cover [-{need}, {need}]",
            spectrum.sigma0,
            spectrum.sigma_max()
        )));
    }
    // the sum is 2 pi / dsigma periodic in s; beyond this the window's copies overlap
    let reach = TAU / spectrum.dsigma - spectrum.half_window;
    if z.t.abs() > reach {
        return Err(Error::GridTooCoarse(format!(
            "|s| = {} exceeds the alias-free range {reach}",
            z.t.abs()
        )));
    }
    let zc = z.to_c64();
    let n = spectrum.values.len();
    let mut acc = ComplexKahanSum::new();
    let mut bound = KahanSum::new();
    for (k, (sig, v)) in spectrum.iter().enumerate() {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let term = v * (C64::i() * zc * sig).exp() * w;
        bound.add(term.norm());
        acc.add(term);
    }
    let scale = spectrum.dsigma / TAU;
    let value = acc.value() * scale;
    let magnitude = bound.value() * scale;
    let edge = |k: usize| spectrum.values[k].norm() * (-z.tau * spectrum.sigma(k)).exp() * scale;
    let estimate = edge(0) + edge(n - 1);
    if estimate > 1e-6 * magnitude.max(f64::MIN_POSITIVE) {
        return Err(Error::GridTooCoarse(format!(
            "edge contribution {estimate:e} against magnitude {magnitude:e}"
        )));
    }
    if !divide_factor {
        return Ok(value);
    }
    match spectrum.factor {
        ConvergenceFactor::Gaussian => {
            let g = spectrum.factor.eval(zc);
            if g.norm() < 1e-250 {
                return Err(invalid("continued convergence factor underflows at this point"));
            }
            Ok(value / g)
        }
        ConvergenceFactor::CauchyPole { .. } => {
            Err(invalid("factor division is only supported for the Gaussian factor"))
        }
    }
}

/// `v(t, tau)` on the strip grid, clamped at [`LOG_FLOOR`].
pub fn growth_profile(cont: &dyn Continuation, strip: &Strip) -> Result<GrowthProfile> {
    let lambda = cont.lambda();
    if lambda == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    let ts = strip.ts();
    let rows: Vec<Result<Vec<f64>>> = strip
        .taus()
        .into_par_iter()
        .map(|tau| {
            ts.iter()
                .map(|&t| {
                    let l = cont.log_abs_sq(ComplexPoint::new(t, tau))?;
                    let v = l / lambda;
                    Ok(if v.is_nan() || v < LOG_FLOOR { LOG_FLOOR } else { v })
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(strip.nt * strip.ntau);
    for r in rows {
        values.extend(r?);
    }
    Ok(GrowthProfile { strip: *strip, lambda, floor: LOG_FLOOR, values })
}

fn log_line_mass(spectrum: &PeriodicSpectrum, tau: f64) -> f64 {
    // log sum |nu|^2 e^{-4 pi n tau / L}, shifted by the largest exponent
    let w = spectrum.base_frequency();
    let terms: Vec<(f64, f64)> = spectrum
        .iter()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(n, c)| (c.norm_sqr().ln(), -2.0 * w * n as f64 * tau))
        .collect();
    let top = terms.iter().map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max);
    let s = terms.iter().map(|(a, b)| (a + b - top).exp()).collect::<KahanSum>().value();
    top + s.ln()
}

/// `(1/lambda) [log sum |nu|^2 e^{-4 pi n tau/L} - log sum |nu|^2]`: the growth
/// of the squared L^2 norm on the line at height `tau` relative to the real line.
pub fn l2_growth_exponent(spectrum: &PeriodicSpectrum, tau: f64) -> Result<f64> {
    let lambda = spectrum.lambda();
    if lambda == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    if spectrum.is_zero() {
        return Err(Error::EmptySpectrum);
    }
    Ok((log_line_mass(spectrum, tau) - log_line_mass(spectrum, 0.0)) / lambda)
}

/// Samples of a continuation along the line `t + i tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSamples {
    pub lambda: f64,
    pub tau: f64,
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<C64>,
}

impl LineSamples {
    pub fn sample(cont: &dyn Continuation, tau: f64, t0: f64, t1: f64, count: usize) -> Result<Self> {
        if count < 2 || !(t1 > t0) {
            return Err(invalid("line sampling needs t1 > t0 and two samples"));
        }
        let dt = (t1 - t0) / (count - 1) as f64;
        let values = (0..count)
            .map(|k| cont.value_at(ComplexPoint::new(t0 + dt * k as f64, tau)))
            .collect::<Result<Vec<_>>>()?;
        Ok(LineSamples { lambda: cont.lambda(), tau, t0, dt, values })
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowChoice {
    /// Left end `N` of the chosen window `[N, N + width]`.
    pub start: f64,
    /// `(1/lambda) log int_N^{N+width} |phi^C|^2 dt`.
    pub exponent: f64,
}

/// Scans windows of the given width starting at every sample and returns the
/// one with the largest mass; ties go to the smallest start.
pub fn select_window(line: &LineSamples, width: f64) -> Result<WindowChoice> {
    if line.lambda == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    let cells = (width / line.dt).round() as usize;
    if cells == 0 || cells >= line.values.len() {
        return Err(invalid("window width must span at least one and fewer than all cells"));
    }
    let sq: Vec<f64> = line.values.iter().map(|v| v.norm_sqr()).collect();
    let mut best = (0usize, trapezoid(&sq[..=cells], line.dt));
    for i in 1..(sq.len() - cells) {
        let mass = trapezoid(&sq[i..=i + cells], line.dt);
        // rounding-level differences count as ties
        if mass > best.1 + 1e-12 * best.1.abs() {
            best = (i, mass);
        }
    }
    Ok(WindowChoice { start: line.t(best.0), exponent: best.1.ln() / line.lambda })
}

/// `sum_{|n| <= lambda} e^{-2 tau |n|} |phi_n^C(zeta)|^2` over unit-normalized
/// torus exponentials, for `zeta` on the tube boundary `sqrt(rho) = tau`.
pub fn tempered_weyl_sum(surface: &SurfaceModel, zeta: &ComplexSurfacePoint, lambda: f64, tau: f64) -> Result<f64> {
    if !surface.is_flat_torus() {
        return Err(Error::SurfaceMismatch("tempered Weyl sums are computed on the flat torus".into()));
    }
    let sqrt_rho = flat_sqrt_rho(zeta);
    if !(tau > 0.0) || (sqrt_rho - tau).abs() > 1e-9 {
        return Err(Error::OffShell { sqrt_rho, tau });
    }
    if lambda < 10.0 / tau {
        return Err(invalid(format!("lambda = {lambda} is below 10 / tau = {}", 10.0 / tau)));
    }
    let im = [zeta.zeta[0].im, zeta.zeta[1].im];
    let r = lambda.floor() as i64;
    let mut acc = KahanSum::new();
    for a in -r..=r {
        for b in -r..=r {
            let norm = ((a * a + b * b) as f64).sqrt();
            if norm > lambda {
                continue;
            }
            let e = -2.0 * tau * norm - 2.0 * (a as f64 * im[0] + b as f64 * im[1]);
            acc.add(e.exp());
        }
    }
    Ok(acc.value() / TORUS_AREA)
}

fn sup_log_abs(cont: &dyn Continuation, tau: f64, tgrid: &[f64]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for &t in tgrid {
        best = best.max(0.5 * cont.log_abs_sq(ComplexPoint::new(t, tau))?);
    }
    Ok(best)
}

/// `(1/lambda) [log sup |phi^C(t +- i tau)| - log sup |phi(t)|]` over `tgrid`.
pub fn sup_growth_exponent(cont: &dyn Continuation, tau: f64, tgrid: &[f64]) -> Result<f64> {
    let lambda = cont.lambda();
    if lambda == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    if tgrid.is_empty() {
        return Err(invalid("empty t grid"));
    }
    let upper = sup_log_abs(cont, tau, tgrid)?.max(sup_log_abs(cont, -tau, tgrid)?);
    let real = sup_log_abs(cont, 0.0, tgrid)?;
    Ok((upper - real) / lambda)
}

/// [`sup_growth_exponent`] for a torus mode along a straight geodesic.
pub fn sup_growth_exponent_mode(mode: &Eigenmode, state: &GeodesicState, tau: f64, tgrid: &[f64]) -> Result<f64> {
    let sum = restrict_exponential_sum(mode, state)?;
    sup_growth_exponent(&sum, tau, tgrid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HartogsReport {
    /// Local statistic on the probe interval: the largest edge-row mean of `v - 2|tau|`.
    pub probe_stat: f64,
    pub translate_stats: Vec<f64>,
    pub probe_deficient: bool,
    pub translates_deficient: usize,
    /// "deficient on the probe implies deficient on every translate" holds.
    pub dichotomy_holds: bool,
    /// `max v - 2|tau| - slack` over all profiles; non-positive when the bound holds.
    pub worst_excess: f64,
    pub global_bound_holds: bool,
}

fn interval_stat(profiles: &[GrowthProfile], lo: f64, hi: f64) -> f64 {
    // limsup proxy: the better of the two largest-lambda profiles
    profiles[profiles.len() - 2..]
        .iter()
        .map(|p| {
            let ts = p.strip.ts();
            let edge_rows = [0, p.strip.ntau - 1];
            edge_rows
                .iter()
                .map(|&i| {
                    let vals: Vec<f64> = ts
                        .iter()
                        .enumerate()
                        .filter(|(_, t)| **t >= lo && **t < hi)
                        .map(|(j, _)| p.get(i, j))
                        .collect();
                    let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
                    mean - 2.0 * p.strip.tau_max
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Empirical check of the sub-harmonic dichotomy on a family of profiles
/// sharing one strip: deficiency `< -eps` on the probe must propagate (within
/// `eps / 2`) to 8 disjoint translates, and `v <= 2|tau| + 5 log lambda / lambda`.
pub fn hartogs_dichotomy_check(profiles: &[GrowthProfile], eps: f64, probe: (f64, f64)) -> Result<HartogsReport> {
    if profiles.len() < 3 {
        return Err(invalid("the dichotomy check needs at least three profiles"));
    }
    if profiles.windows(2).any(|w| !(w[1].lambda > w[0].lambda)) {
        return Err(invalid("profiles must have strictly increasing lambda"));
    }
    let strip = profiles[0].strip;
    if profiles.iter().any(|p| p.strip != strip) {
        return Err(invalid("profiles must share one strip"));
    }
    let (a, b) = probe;
    let len = b - a;
    if !(len > 0.0) || a < strip.t0 || b + 8.0 * len > strip.t1 + 1e-12 {
        return Err(invalid("probe interval and its 8 right translates must fit in the strip"));
    }
    let probe_stat = interval_stat(profiles, a, b);
    let translate_stats: Vec<f64> = (1..=8)
        .map(|k| interval_stat(profiles, a + k as f64 * len, b + k as f64 * len))
        .collect();
    let probe_deficient = probe_stat < -eps;
    let translates_deficient = translate_stats.iter().filter(|s| **s <= -eps / 2.0).count();
    let dichotomy_holds = !probe_deficient || translates_deficient == translate_stats.len();
    let worst_excess = profiles
        .iter()
        .map(|p| p.max_excess() - 5.0 * p.lambda.ln() / p.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HartogsReport {
        probe_stat,
        translate_stats,
        probe_deficient,
        translates_deficient,
        dichotomy_holds,
        worst_excess,
        global_bound_holds: worst_excess <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_exponential_continuation() {
        let s = PeriodicSpectrum::from_pairs(1.0, TAU, &[(1, C64::new(1.0, 0.0))]).unwrap();
        let v = continue_periodic(&s, ComplexPoint::new(0.0, 0.4), 1.0).unwrap();
        assert!((v.re - (-0.4f64).exp()).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert!(matches!(
            continue_periodic(&s, ComplexPoint::new(0.0, 2.0), 1.0),
            Err(Error::StripExceeded { .. })
        ));
    }

    #[test]
    fn single_mode_l2_exponent_is_two_tau() {
        let s = PeriodicSpectrum::from_pairs(7.0, TAU, &[(-7, C64::new(0.3, 0.2))]).unwrap();
        for tau in [0.1, 0.25, 0.5] {
            assert!((l2_growth_exponent(&s, tau).unwrap() - 2.0 * tau).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_spectrum_profile_sits_on_the_floor() {
        let s = PeriodicSpectrum::from_pairs(3.0, TAU, &[(3, C64::new(0.0, 0.0))]).unwrap();
        let strip = Strip::new(0.0, 1.0, 0.2, 5, 3).unwrap();
        let p = growth_profile(&s, &strip).unwrap();
        assert!(p.values.iter().all(|v| *v == LOG_FLOOR));
    }

    #[test]
    fn constant_data_picks_the_left_window() {
        let line = LineSamples { lambda: 5.0, tau: 0.0, t0: -2.0, dt: 0.1, values: vec![C64::new(1.0, 0.0); 41] };
        assert_eq!(select_window(&line, 1.0).unwrap().start, -2.0);
    }
}
