//! Normalized pullbacks along strip lines, translation statistics, moving
//! origins, restricted QER matrix elements and the Chebyshev density filter.

use std::f64::consts::{PI, TAU};

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::RestrictionSamples;
use crate::geodesic::ComplexPoint;
use crate::numeric::{trapezoid, wrap, KahanSum, C64};
use crate::spectrum::{Continuation, PeriodicSpectrum};

/// Minimum samples per wavelength `2 pi / lambda`.
pub const POINTS_PER_WAVELENGTH: f64 = 16.0;
/// Norm below which a restriction counts as vanishing.
pub const VANISHING_NORM: f64 = 1e-30;

/// `|U|^2` on a uniform grid over `[a, b]` at height `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerDensity {
    pub interval: (f64, f64),
    pub tau: f64,
    pub lambda: f64,
    pub samples: Vec<f64>,
    /// `int_I |phi^C|^2 dt` before normalization.
    pub certificate: f64,
}

impl WignerDensity {
    pub fn dt(&self) -> f64 {
        (self.interval.1 - self.interval.0) / (self.samples.len() - 1) as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        self.interval.0 + self.dt() * k as f64
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.samples, self.dt())
    }

    /// Grid location of the largest sample.
    pub fn peak(&self) -> f64 {
        let mut best = 0;
        for (k, v) in self.samples.iter().enumerate() {
            if *v > self.samples[best] {
                best = k;
            }
        }
        self.t(best)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "density"])?;
        for (k, v) in self.samples.iter().enumerate() {
            w.write_record([self.t(k).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Grid size resolving `|U|^2` on an interval of the given length.
pub fn default_points(lambda: f64, length: f64) -> usize {
    let per = POINTS_PER_WAVELENGTH * lambda.max(1.0) / TAU;
    ((length * per).ceil() as usize + 1).max(33)
}

/// `|U|^2 = |phi^C(t + i tau)|^2 / int_I |phi^C|^2` on `points` nodes of `I`.
pub fn normalized_pullback(
    cont: &dyn Continuation,
    tau: f64,
    interval: (f64, f64),
    points: Option<usize>,
) -> Result<WignerDensity> {
    let (a, b) = interval;
    if !(b > a) {
        return Err(invalid("interval must have positive length"));
    }
    let lambda = cont.lambda();
    let n = points.unwrap_or_else(|| default_points(lambda, b - a)).max(default_points(lambda, b - a));
    let h = (b - a) / (n - 1) as f64;
    let raw = (0..n)
        .map(|k| Ok(cont.value_at(ComplexPoint::new(a + h * k as f64, tau))?.norm_sqr()))
        .collect::<Result<Vec<f64>>>()?;
    let certificate = trapezoid(&raw, h);
    if !(certificate.sqrt() > VANISHING_NORM) {
        return Err(Error::VanishingRestriction { norm: certificate.sqrt() });
    }
    let samples = raw.iter().map(|v| v / certificate).collect();
    Ok(WignerDensity { interval, tau, lambda, samples, certificate })
}

/// Compactly supported weight along the geodesic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// `exp(-(t - centre)^2 / (2 width^2))`, cut off beyond `cutoff` widths.
    GaussianBump {
        centre: f64,
        width: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
    /// One on `[a + ramp, b - ramp]`, zero outside `[a, b]`, smooth ramps between.
    /// With `ramp == 0` this is the indicator of the closed interval `[a, b]`.
    SmoothBox { a: f64, b: f64, ramp: f64 },
}

fn default_cutoff() -> f64 {
    6.0
}

fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let f = |y: f64| (-1.0 / y).exp();
    f(x) / (f(x) + f(1.0 - x))
}

fn smooth_step_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (p, q) = ((-1.0 / x).exp(), (-1.0 / (1.0 - x)).exp());
    let (dp, dq) = (p / (x * x), -q / ((1.0 - x) * (1.0 - x)));
    (dp * (p + q) - p * (dp + dq)) / ((p + q) * (p + q))
}

impl Window {
    pub fn gaussian(centre: f64, width: f64) -> Self {
        Window::GaussianBump { centre, width, cutoff: default_cutoff() }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Window::GaussianBump { centre, width, cutoff } => (centre - cutoff * width, centre + cutoff * width),
            Window::SmoothBox { a, b, .. } => (a, b),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Window::GaussianBump { centre, width, cutoff } => {
                let x = (t - centre) / width;
                if x.abs() > cutoff {
                    0.0
                } else {
                    (-0.5 * x * x).exp()
                }
            }
            Window::SmoothBox { a, b, ramp } => {
                if ramp == 0.0 {
                    if (a..=b).contains(&t) { 1.0 } else { 0.0 }
                } else if t <= a || t >= b {
                    0.0
                } else {
                    smooth_step((t - a) / ramp) * smooth_step((b - t) / ramp)
                }
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Window::GaussianBump { centre, width, cutoff } => {
                let x = (t - centre) / width;
                if x.abs() > cutoff {
                    0.0
                } else {
                    -x / width * (-0.5 * x * x).exp()
                }
            }
            Window::SmoothBox { a, b, ramp } => {
                if ramp == 0.0 || t <= a || t >= b {
                    0.0
                } else {
                    let (u, v) = ((t - a) / ramp, (b - t) / ramp);
                    (smooth_step_derivative(u) * smooth_step(v) - smooth_step(u) * smooth_step_derivative(v)) / ramp
                }
            }
        }
    }

    /// `int alpha(t) dt` (the Gaussian cutoff tail is below `1e-8` relative at six widths).
    pub fn integral(&self) -> f64 {
        match *self {
            Window::GaussianBump { width, cutoff, .. } => {
                let n = 4096;
                let h = 2.0 * cutoff / n as f64;
                let v: Vec<f64> = (0..=n).map(|k| (-0.5 * (-cutoff + h * k as f64).powi(2)).exp()).collect();
                width * trapezoid(&v, h)
            }
            Window::SmoothBox { a, b, ramp } => {
                // each ramp integrates to ramp / 2 by symmetry of the step
                if b - a >= 2.0 * ramp {
                    b - a - ramp
                } else {
                    let n = 4096;
                    let h = (b - a) / n as f64;
                    let v: Vec<f64> = (0..=n).map(|k| self.eval(a + h * k as f64)).collect();
                    trapezoid(&v, h)
                }
            }
        }
    }

    pub fn shifted(&self, s: f64) -> Self {
        match *self {
            Window::GaussianBump { centre, width, cutoff } => Window::GaussianBump { centre: centre + s, width, cutoff },
            Window::SmoothBox { a, b, ramp } => Window::SmoothBox { a: a + s, b: b + s, ramp },
        }
    }
}

/// Frequency cutoff `chi(sigma)` acting through `chi(D / lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cutoff {
    /// Indicator of `lo <= |sigma| <= hi`.
    Band { lo: f64, hi: f64 },
    Unit,
}

impl Cutoff {
    pub fn eval(&self, sigma: f64) -> f64 {
        match *self {
            Cutoff::Band { lo, hi } => {
                let s = sigma.abs();
                if s >= lo && s <= hi {
                    1.0
                } else {
                    0.0
                }
            }
            Cutoff::Unit => 1.0,
        }
    }

    /// `int_{-1}^{1} chi(sigma) (1 - sigma^2)^{-1/2} dsigma`.
    pub fn weighted_integral(&self) -> f64 {
        match *self {
            Cutoff::Band { lo, hi } => {
                let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
                if hi <= lo {
                    0.0
                } else {
                    2.0 * (hi.asin() - lo.asin())
                }
            }
            Cutoff::Unit => PI,
        }
    }
}

/// Separable symbols `alpha(s) chi(sigma)` and their two degenerate kinds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolDescriptor {
    Multiplication { alpha: Window },
    FrequencyCutoff { chi: Cutoff },
    Separable { alpha: Window, chi: Cutoff },
}

impl SymbolDescriptor {
    fn parts(&self) -> (Option<Window>, Cutoff) {
        match *self {
            SymbolDescriptor::Multiplication { alpha } => (Some(alpha), Cutoff::Unit),
            SymbolDescriptor::FrequencyCutoff { chi } => (None, chi),
            SymbolDescriptor::Separable { alpha, chi } => (Some(alpha), chi),
        }
    }
}

fn check_support(w: &Window, interval: (f64, f64)) -> Result<()> {
    let (lo, hi) = w.support();
    let tol = 1e-12 * (interval.1 - interval.0);
    if lo < interval.0 - tol || hi > interval.1 + tol {
        return Err(Error::SupportLeak { lo, hi, start: interval.0, end: interval.1 });
    }
    Ok(())
}

fn pair_with(density: &WignerDensity, f: impl Fn(f64) -> f64) -> f64 {
    let v: Vec<f64> = density.samples.iter().enumerate().map(|(k, u)| f(density.t(k)) * u).collect();
    trapezoid(&v, density.dt())
}

/// `int a |U|^2 dt` for a multiplication symbol supported in the interval.
pub fn wigner_pairing(density: &WignerDensity, symbol: &SymbolDescriptor) -> Result<f64> {
    let SymbolDescriptor::Multiplication { alpha } = symbol else {
        return Err(Error::UnsupportedSymbol("Wigner pairings take multiplication symbols".into()));
    };
    check_support(alpha, density.interval)?;
    Ok(pair_with(density, |t| alpha.eval(t)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationStat {
    /// `|int (a(t - s) - a(t)) |U|^2 dt|`
    pub gap: f64,
    /// `|int a'(t) |U|^2 dt|`
    pub derivative_pairing: f64,
}

pub fn translation_invariance_stat(
    cont: &dyn Continuation,
    tau: f64,
    interval: (f64, f64),
    alpha: &Window,
    shift: f64,
) -> Result<TranslationStat> {
    let moved = alpha.shifted(shift);
    check_support(alpha, interval)?;
    check_support(&moved, interval)?;
    let density = normalized_pullback(cont, tau, interval, None)?;
    translation_stat_on(&density, alpha, shift)
}

/// [`translation_invariance_stat`] on an already computed density.
pub fn translation_stat_on(density: &WignerDensity, alpha: &Window, shift: f64) -> Result<TranslationStat> {
    let moved = alpha.shifted(shift);
    check_support(alpha, density.interval)?;
    check_support(&moved, density.interval)?;
    let gap = pair_with(density, |t| moved.eval(t) - alpha.eval(t)).abs();
    let derivative_pairing = pair_with(density, |t| alpha.derivative(t)).abs();
    Ok(TranslationStat { gap, derivative_pairing })
}

/// Normalized densities on `I` of each spectrum translated by `N_j`; shifts
/// are reduced modulo the period so that whole periods act exactly.
pub fn moving_pullback(
    spectra: &[PeriodicSpectrum],
    tau: f64,
    interval: (f64, f64),
    shifts: &[f64],
) -> Result<Vec<WignerDensity>> {
    if spectra.len() != shifts.len() {
        return Err(invalid("one shift per spectrum is required"));
    }
    spectra
        .iter()
        .zip(shifts)
        .map(|(s, n)| {
            let moved = s.translated(wrap(*n, s.period()));
            normalized_pullback(&moved, tau, interval, None)
        })
        .collect()
}

struct Shifted<'a> {
    inner: &'a dyn Continuation,
    shift: f64,
}

impl Continuation for Shifted<'_> {
    fn lambda(&self) -> f64 {
        self.inner.lambda()
    }

    fn value_at(&self, z: ComplexPoint) -> Result<C64> {
        self.inner.value_at(ComplexPoint::new(z.t + self.shift, z.tau))
    }
}

/// [`moving_pullback`] for continuations known only on a finite `t` range.
pub fn moving_pullback_windowed(
    conts: &[&dyn Continuation],
    tau: f64,
    interval: (f64, f64),
    shifts: &[f64],
) -> Result<Vec<WignerDensity>> {
    if conts.len() != shifts.len() {
        return Err(invalid("one shift per continuation is required"));
    }
    conts
        .iter()
        .zip(shifts)
        .map(|(c, n)| {
            if let Some((start, end)) = c.t_range() {
                let (lo, hi) = (interval.0 + n, interval.1 + n);
                if lo < start || hi > end {
                    return Err(Error::RangeExceeded { lo, hi, start, end });
                }
            }
            normalized_pullback(&Shifted { inner: *c, shift: *n }, tau, interval, None)
        })
        .collect()
}

/// Synthetic travelling bump `A exp(-(z - c)^2 / (2 w^2)) e^{i mu z}` known on
/// `[-T, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub lambda: f64,
    pub centre: f64,
    pub width: f64,
    pub frequency: f64,
    pub amplitude: f64,
    pub half_range: f64,
}

impl Continuation for WavePacket {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn value_at(&self, z: ComplexPoint) -> Result<C64> {
        let z = z.to_c64();
        let d = z - self.centre;
        Ok(self.amplitude * (-d * d / (2.0 * self.width * self.width) + C64::i() * self.frequency * z).exp())
    }

    fn t_range(&self) -> Option<(f64, f64)> {
        Some((-self.half_range, self.half_range))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QerElement {
    /// `Re int alpha (chi(D/lambda) phi) conj(phi) dt` over one period.
    pub value: f64,
    /// `(4 / vol(S*M)) int alpha ds int chi (1 - sigma^2)^{-1/2} dsigma`.
    pub reference: f64,
    /// `int_0^L |phi|^2 dt`.
    pub total: f64,
}

/// Unit cosphere bundle volume of the torus `R^2 / 2 pi Z^2`.
pub const COSPHERE_VOLUME: f64 = 8.0 * PI * PI * PI;

/// Restricted matrix element of the separable operator `alpha chi(D / lambda)`.
pub fn qer_matrix_element(restriction: &RestrictionSamples, symbol: &SymbolDescriptor) -> Result<QerElement> {
    if restriction.lambda == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    let period = restriction
        .state
        .period
        .ok_or_else(|| invalid("QER elements are taken over a closed geodesic"))?;
    if ((restriction.span() - period) / period).abs() > 1e-12 {
        return Err(invalid("restriction samples must cover exactly one period"));
    }
    let (alpha, chi) = symbol.parts();
    if let Some(a) = alpha {
        let (lo, hi) = a.support();
        if lo < restriction.t0 || hi > restriction.t0 + period {
            return Err(Error::SupportLeak { lo, hi, start: restriction.t0, end: restriction.t0 + period });
        }
    }
    let n = restriction.len();
    let mut buf = restriction.values.clone();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let base = TAU / period;
    for (k, v) in buf.iter_mut().enumerate() {
        let idx = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
        *v *= chi.eval(base * idx as f64 / restriction.lambda) / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut value = KahanSum::new();
    let mut total = KahanSum::new();
    for (k, (filtered, phi)) in buf.iter().zip(&restriction.values).enumerate() {
        let a = alpha.map_or(1.0, |w| w.eval(restriction.t(k)));
        value.add(a * (filtered * phi.conj()).re);
        total.add(phi.norm_sqr());
    }
    let alpha_integral = alpha.map_or(period, |w| w.integral());
    Ok(QerElement {
        value: value.value() * restriction.dt,
        reference: 4.0 / COSPHERE_VOLUME * alpha_integral * chi.weighted_integral(),
        total: total.value() * restriction.dt,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevFilter {
    pub kept: Vec<usize>,
    pub mean: f64,
    pub threshold: f64,
    /// `R / (M + R)`: guaranteed lower bound on the kept fraction.
    pub density_bound: f64,
    pub kept_fraction: f64,
}

/// Keeps indices with `X(j) <= M + R`, `M` the mean of the statistics.
pub fn chebyshev_density_filter(stats: &[f64], r: f64) -> Result<ChebyshevFilter> {
    if !(r > 0.0) {
        return Err(invalid("R must be positive"));
    }
    if stats.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(invalid("statistics must be finite and non-negative"));
    }
    let mean = if stats.is_empty() {
        0.0
    } else {
        stats.iter().copied().collect::<KahanSum>().value() / stats.len() as f64
    };
    let threshold = mean + r;
    let kept: Vec<usize> = (0..stats.len()).filter(|&j| stats[j] <= threshold).collect();
    let kept_fraction = if stats.is_empty() { 1.0 } else { kept.len() as f64 / stats.len() as f64 };
    Ok(ChebyshevFilter { kept, mean, threshold, density_bound: r / (mean + r), kept_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_box_integrates_exactly() {
        let w = Window::SmoothBox { a: 0.0, b: 3.0, ramp: 0.5 };
        let n = 30000;
        let h = 3.0 / n as f64;
        let v: Vec<f64> = (0..=n).map(|k| w.eval(h * k as f64)).collect();
        assert!((trapezoid(&v, h) - w.integral()).abs() < 1e-9);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for w in [Window::gaussian(0.3, 0.7), Window::SmoothBox { a: -1.0, b: 2.0, ramp: 0.8 }] {
            for t in [-0.6, 0.1, 0.9, 1.5] {
                let h = 1e-6;
                let fd = (w.eval(t + h) - w.eval(t - h)) / (2.0 * h);
                assert!((fd - w.derivative(t)).abs() < 1e-7, "{w:?} {t}");
            }
        }
    }

    #[test]
    fn band_weight_is_two_arcsine_difference() {
        let c = Cutoff::Band { lo: 0.5, hi: 1.0 };
        assert!((c.weighted_integral() / PI - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_sequence_is_fully_kept() {
        let f = chebyshev_density_filter(&[2.0; 10], 1.0).unwrap();
        assert_eq!(f.kept.len(), 10);
        assert!((f.density_bound - 1.0 / 3.0).abs() < 1e-15);
    }
}
