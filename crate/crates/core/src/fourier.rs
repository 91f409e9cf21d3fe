//! Sampled restrictions, orbital Fourier coefficients, windowed transforms
//! with analytic convergence factors and the mass/decay laws built on them.

use std::f64::consts::{PI, TAU};

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geodesic::{ComplexPoint, GeodesicState};
use crate::numeric::{trapezoid, ComplexKahanSum, KahanSum, C64, ZERO};
use crate::spectrum::{
    Continuation, ConvergenceFactor, ExponentialSum, OrbitalSpectrum, PeriodicSpectrum,
    WindowedSpectrum,
};
use crate::surface::{restrict_exponential_sum, Eigenmode};

/// Samples of `phi(gamma(t))` on the uniform grid `t0 + k dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionSamples {
    pub state: GeodesicState,
    pub lambda: f64,
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<C64>,
    /// Exact exponential-sum restriction the samples were taken from, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ExponentialSum>,
    pub source_id: String,
}

impl RestrictionSamples {
    pub fn new(
        state: GeodesicState,
        lambda: f64,
        t0: f64,
        dt: f64,
        values: Vec<C64>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(invalid(format!("sample count {} is not a power of two", values.len())));
        }
        if !(dt > 0.0) {
            return Err(invalid("sample spacing must be positive"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("restriction samples must be finite"));
        }
        Ok(RestrictionSamples { state, lambda, t0, dt, values, source: None, source_id: source_id.into() })
    }

    /// Samples an exponential sum at `t0 + k dt`, keeping it as the source.
    pub fn from_exponential_sum(
        state: GeodesicState,
        sum: &ExponentialSum,
        t0: f64,
        dt: f64,
        count: usize,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        let values = (0..count).map(|k| sum.eval(C64::new(t0 + dt * k as f64, 0.0))).collect();
        let mut s = Self::new(state, sum.lambda, t0, dt, values, source_id)?;
        s.source = Some(sum.clone());
        Ok(s)
    }

    /// One full period of a closed geodesic with `count` samples.
    pub fn periodic(mode: &Eigenmode, state: &GeodesicState, count: usize) -> Result<Self> {
        let period = state.period.ok_or_else(|| invalid("state is not periodic"))?;
        let sum = restrict_exponential_sum(mode, state)?;
        Self::from_exponential_sum(*state, &sum, 0.0, period / count as f64, count, mode_id(mode))
    }

    /// The window `[-T, T)` with `count` samples.
    pub fn window(mode: &Eigenmode, state: &GeodesicState, half_window: f64, count: usize) -> Result<Self> {
        let sum = restrict_exponential_sum(mode, state)?;
        Self::from_exponential_sum(
            *state,
            &sum,
            -half_window,
            2.0 * half_window / count as f64,
            count,
            mode_id(mode),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }

    pub fn span(&self) -> f64 {
        self.dt * self.values.len() as f64
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re", "im"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([self.t(k).to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mode_id(mode: &Eigenmode) -> String {
    match mode.seed {
        Some(seed) => format!("random-wave:lambda={}:delta={}:seed={seed}", mode.lambda, mode.delta),
        None => format!("mode:lambda={}:terms={}", mode.lambda, mode.terms.len()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalFit {
    pub spectrum: PeriodicSpectrum,
    /// `|sum |nu|^2 - (1/L) int |phi|^2|` on the sample grid.
    pub parseval_defect: f64,
}

/// DFT estimate of `nu(n) = (1/L) int_0^L phi(gamma(t)) e^{-2 pi i n t / L} dt`
/// for `|n| <= n_max`.
pub fn orbital_coefficients(samples: &RestrictionSamples, n_max: usize) -> Result<OrbitalFit> {
    let period = samples
        .state
        .period
        .ok_or_else(|| invalid("orbital coefficients need a periodic geodesic"))?;
    let n = samples.len();
    let required = 4 * n_max.max(1);
    if n < required {
        return Err(Error::Undersampled { samples: n, n_max, required });
    }
    if ((samples.span() - period) / period).abs() > 1e-12 {
        return Err(invalid("samples must cover exactly one period"));
    }
    let mut buf = samples.values.clone();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let w = TAU / period;
    let mut coeffs = Vec::with_capacity(2 * n_max + 1);
    for k in -(n_max as i64)..=(n_max as i64) {
        let idx = k.rem_euclid(n as i64) as usize;
        // grid starts at t0, not zero
        let shift = C64::from_polar(1.0, -w * k as f64 * samples.t0);
        coeffs.push(buf[idx] / n as f64 * shift);
    }
    let spectrum = PeriodicSpectrum::new(samples.lambda, period, -(n_max as i64), coeffs)?;
    let mean_sq = samples.values.iter().map(|v| v.norm_sqr()).collect::<KahanSum>().value() / n as f64;
    let parseval_defect = (spectrum.total_mass() - mean_sq).abs();
    Ok(OrbitalFit { spectrum, parseval_defect })
}

/// Uniform transform grid `sigma0 + k dsigma`, `k < count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaGrid {
    pub sigma0: f64,
    pub dsigma: f64,
    pub count: usize,
}

impl SigmaGrid {
    /// Grid over `[-(lambda + pad), lambda + pad]` with spacing `pi / T / refine`.
    pub fn covering(lambda: f64, pad: f64, half_window: f64, refine: usize) -> Self {
        let dsigma = PI / half_window / refine.max(1) as f64;
        let reach = lambda + pad;
        let half = (reach / dsigma).ceil() as usize;
        SigmaGrid { sigma0: -(half as f64) * dsigma, dsigma, count: 2 * half + 1 }
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma0 + self.dsigma * k as f64
    }
}

/// Default padding of the transform grid beyond `lambda`.
pub const SIGMA_PAD: f64 = 12.0;
/// `|G(+-T)|` allowed for the Gaussian factor.
pub const GAUSSIAN_EDGE: f64 = 1e-12;

fn transform_at(samples: &RestrictionSamples, weights: &[C64], sigma: f64, stride: usize) -> C64 {
    let mut acc = ComplexKahanSum::new();
    let step = C64::from_polar(1.0, -sigma * samples.dt * stride as f64);
    let mut phase = C64::from_polar(1.0, -sigma * samples.t0);
    for (k, w) in weights.iter().enumerate().step_by(stride) {
        if k % 64 == 0 {
            // refresh the rotating phase to keep rounding from drifting
            phase = C64::from_polar(1.0, -sigma * samples.t(k));
        }
        acc.add(w * phase);
        phase *= step;
    }
    acc.value() * samples.dt * stride as f64
}

/// `nu^G(sigma) = int G(t) phi(gamma(t)) e^{-i t sigma} dt` by the trapezoidal
/// rule over the sampled window.
pub fn windowed_transform(
    samples: &RestrictionSamples,
    factor: ConvergenceFactor,
    grid: SigmaGrid,
    tau_max: f64,
) -> Result<WindowedSpectrum> {
    factor.check_strip(tau_max)?;
    let half_window = 0.5 * samples.span();
    let centre = samples.t0 + half_window;
    if centre.abs() > 1e-9 * half_window.max(1.0) {
        return Err(invalid("windowed samples must be centred at t = 0"));
    }
    let max_abs = samples.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let truncation_error = match factor {
        ConvergenceFactor::Gaussian => {
            let edge = (-half_window * half_window / 2.0).exp();
            if edge > GAUSSIAN_EDGE {
                return Err(Error::WindowTooShort { half_length: half_window, edge });
            }
            edge * max_abs
        }
        ConvergenceFactor::CauchyPole { p } => {
            if half_window <= p.abs() {
                return Err(Error::WindowTooShort { half_length: half_window, edge: 1.0 / half_window });
            }
            // L^2 tail of max|phi| / |t| beyond T
            max_abs * (2.0 / half_window).sqrt()
        }
    };
    let weights: Vec<C64> = samples
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * factor.eval(C64::new(samples.t(k), 0.0)))
        .collect();
    let values: Vec<C64> = {
        use rayon::prelude::*;
        (0..grid.count)
            .into_par_iter()
            .map(|k| transform_at(samples, &weights, grid.sigma(k), 1))
            .collect()
    };
    let quadrature_error = (0..grid.count)
        .step_by((grid.count / 16).max(1))
        .map(|k| {
            let full = values[k];
            let half = transform_at(samples, &weights, grid.sigma(k), 2);
            (full - half).norm()
        })
        .fold(0.0, f64::max);
    Ok(WindowedSpectrum {
        lambda: samples.lambda,
        sigma0: grid.sigma0,
        dsigma: grid.dsigma,
        values,
        factor,
        half_window,
        tau_max,
        truncation_error,
        quadrature_error,
    })
}

fn band_contains(freq: f64, lo: f64, hi: f64, upper_closed: bool) -> bool {
    let f = freq.abs();
    f >= lo && (f < hi || (upper_closed && f <= hi))
}

/// Mass in the frequency band `a lambda <= |omega| < b lambda`, the upper end
/// closed when `b = 1`; frequencies are `2 pi n / L` (periodic) or `sigma`.
pub fn band_mass(spectrum: &OrbitalSpectrum, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(b > a && b <= 1.0) {
        return Err(invalid(format!("band [{a}, {b}] must satisfy 0 <= a < b <= 1")));
    }
    let lambda = spectrum.lambda();
    if lambda == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    let (lo, hi) = (a * lambda, b * lambda);
    let closed = b == 1.0;
    Ok(match spectrum {
        OrbitalSpectrum::Periodic(s) => s
            .iter()
            .filter(|(n, _)| band_contains(s.frequency(*n), lo, hi, closed))
            .map(|(_, c)| c.norm_sqr())
            .collect::<KahanSum>()
            .value(),
        OrbitalSpectrum::Aperiodic(s) => {
            s.iter()
                .filter(|(sig, _)| band_contains(*sig, lo, hi, closed))
                .map(|(_, v)| v.norm_sqr())
                .collect::<KahanSum>()
                .value()
                * s.dsigma
                / TAU
        }
    })
}

/// Total orbital mass (`sum |nu|^2`, or `(1/2pi) int |nu^G|^2`).
pub fn total_mass(spectrum: &OrbitalSpectrum) -> f64 {
    match spectrum {
        OrbitalSpectrum::Periodic(s) => s.total_mass(),
        OrbitalSpectrum::Aperiodic(s) => {
            s.values.iter().map(|v| v.norm_sqr()).collect::<KahanSum>().value() * s.dsigma / TAU
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaleyWienerReport {
    pub pass: bool,
    /// Indices `n` with `|omega_n| >= lambda` violating the bound.
    pub violations: Vec<i64>,
    /// `min log(bound / |nu|^2)` over tested indices; infinite when vacuous.
    pub worst_margin: f64,
    pub tested: usize,
}

/// `|nu(n)|^2 <= lambda^{(m-1)/2} e^{2|tau|(lambda - |omega_n|)}` for `|omega_n| >= lambda`.
pub fn paley_wiener_check(spectrum: &PeriodicSpectrum, tau: f64, dimension: u32) -> Result<PaleyWienerReport> {
    let lambda = spectrum.lambda();
    if lambda == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    let log_pref = 0.5 * (dimension as f64 - 1.0) * lambda.ln();
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    let mut tested = 0;
    for (n, c) in spectrum.iter() {
        let w = spectrum.frequency(n).abs();
        if w < lambda || c == ZERO {
            continue;
        }
        tested += 1;
        let margin = log_pref + 2.0 * tau.abs() * (lambda - w) - c.norm_sqr().ln();
        worst = worst.min(margin);
        if margin < 0.0 {
            violations.push(n);
        }
    }
    Ok(PaleyWienerReport { pass: violations.is_empty(), violations, worst_margin: worst, tested })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlancherelCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_gap: f64,
}

/// Both sides of `int |G phi^C(s + i tau)|^2 ds = (1/2pi) int e^{-2 tau sigma} |nu^G(sigma)|^2 dsigma`.
///
/// The left side integrates the continued product over the sampled window on
/// an `s` grid `s_refine` times finer than the samples; the right side uses
/// the transform on `grid`.
pub fn plancherel_check(
    samples: &RestrictionSamples,
    factor: ConvergenceFactor,
    tau: f64,
    grid: SigmaGrid,
    s_refine: usize,
) -> Result<PlancherelCheck> {
    if tau < 0.0 {
        return Err(invalid("the Plancherel check is pinned to tau >= 0"));
    }
    let spectrum = windowed_transform(samples, factor, grid, tau)?;
    let weighted: Vec<f64> = spectrum
        .iter()
        .map(|(sig, v)| (-2.0 * tau * sig).exp() * v.norm_sqr())
        .collect();
    let rhs = trapezoid(&weighted, spectrum.dsigma) / TAU;

    let refine = s_refine.max(1);
    let count = samples.len() * refine;
    let ds = samples.dt / refine as f64;
    let lhs_values: Vec<f64> = (0..=count)
        .map(|k| {
            let z = C64::new(samples.t0 + ds * k as f64, tau);
            let inner = match &samples.source {
                Some(src) => Ok(src.eval(z)),
                None => crate::growth::continue_windowed(&spectrum, ComplexPoint::from(z), false)
                    .map(|v| v / factor.eval(z)),
            };
            inner.map(|v| (factor.eval(z) * v).norm_sqr())
        })
        .collect::<Result<_>>()?;
    let lhs = trapezoid(&lhs_values, ds);
    let scale = lhs.abs().max(rhs.abs());
    let relative_gap = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(PlancherelCheck { lhs, rhs, relative_gap })
}

/// Continuation trait object for sampled restrictions with a known source.
pub fn source_continuation(samples: &RestrictionSamples) -> Option<&dyn Continuation> {
    samples.source.as_ref().map(|s| s as &dyn Continuation)
}
