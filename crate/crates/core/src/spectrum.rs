//! Orbital spectra of restricted eigenfunctions and the continuation trait
//! shared by every strip evaluator.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geodesic::ComplexPoint;
use crate::numeric::{ComplexKahanSum, KahanSum, C64, ZERO};

/// Radius at which the Paley–Wiener constant of a periodic spectrum is
/// recorded on construction.
pub const DEFAULT_DECAY_RADIUS: f64 = 1.0;

/// Anything that can be evaluated holomorphically at `t + i tau`.
pub trait Continuation: Sync {
    fn lambda(&self) -> f64;

    fn value_at(&self, z: ComplexPoint) -> Result<C64>;

    /// Natural logarithm of `|f(z)|^2`; `-inf` at zeros.
    fn log_abs_sq(&self, z: ComplexPoint) -> Result<f64> {
        let v = self.value_at(z)?;
        Ok(2.0 * v.norm().ln())
    }

    /// Range of `t` on which the continuation is trustworthy.
    fn t_range(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Fourier coefficients `nu(n)` of a restriction to a closed geodesic of
/// period `L`, stored contiguously from `min_index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSpectrum {
    lambda: f64,
    period: f64,
    min_index: i64,
    coeffs: Vec<C64>,
    decay_constant: f64,
}

impl PeriodicSpectrum {
    pub fn new(lambda: f64, period: f64, min_index: i64, coeffs: Vec<C64>) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid(format!("period must be positive, got {period}")));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("spectrum entries must be finite"));
        }
        let mut s = PeriodicSpectrum { lambda, period, min_index, coeffs, decay_constant: 0.0 };
        s.decay_constant = s.paley_wiener_constant(DEFAULT_DECAY_RADIUS);
        Ok(s)
    }

    /// Builds a spectrum from `(n, nu(n))` pairs; repeated indices add.
    pub fn from_pairs(lambda: f64, period: f64, pairs: &[(i64, C64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Self::new(lambda, period, 0, Vec::new());
        }
        let lo = pairs.iter().map(|p| p.0).min().unwrap();
        let hi = pairs.iter().map(|p| p.0).max().unwrap();
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for &(n, c) in pairs {
            coeffs[(n - lo) as usize] += c;
        }
        Self::new(lambda, period, lo, coeffs)
    }

    /// `sin(N t)` on a geodesic of period `2 pi`.
    pub fn sine(n: i64) -> Self {
        let half = C64::new(0.0, 0.5);
        Self::from_pairs(n.unsigned_abs() as f64, TAU, &[(n, -half), (-n, half)])
            .expect("valid sine spectrum")
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn min_index(&self) -> i64 {
        self.min_index
    }

    pub fn max_index(&self) -> i64 {
        self.min_index + self.coeffs.len() as i64 - 1
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    /// Paley–Wiener constant `C` with `|nu(n)| <= C e^{-|n| r}` recorded for
    /// `r = DEFAULT_DECAY_RADIUS`.
    pub fn decay_constant(&self) -> f64 {
        self.decay_constant
    }

    pub fn paley_wiener_constant(&self, radius: f64) -> f64 {
        self.iter()
            .map(|(n, c)| c.norm() * ((n.abs() as f64) * radius).exp())
            .fold(0.0, f64::max)
    }

    /// Angular frequency `2 pi / L` of index one.
    pub fn base_frequency(&self) -> f64 {
        TAU / self.period
    }

    pub fn frequency(&self, n: i64) -> f64 {
        n as f64 * self.base_frequency()
    }

    pub fn get(&self, n: i64) -> C64 {
        let k = n - self.min_index;
        if k < 0 || k as usize >= self.coeffs.len() {
            ZERO
        } else {
            self.coeffs[k as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(k, c)| (self.min_index + k as i64, *c))
    }

    /// Indices of the first and last nonzero coefficient.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.coeffs.iter().position(|c| *c != ZERO)?;
        let last = self.coeffs.iter().rposition(|c| *c != ZERO)?;
        Some((self.min_index + first as i64, self.min_index + last as i64))
    }

    /// Largest `|n|` carrying a nonzero coefficient.
    pub fn n_max(&self) -> usize {
        match self.support() {
            Some((lo, hi)) => lo.unsigned_abs().max(hi.unsigned_abs()) as usize,
            None => 0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect::<KahanSum>().value()
    }

    pub fn is_zero(&self) -> bool {
        self.support().is_none()
    }

    /// `max_n |nu(-n) - conj(nu(n))|`.
    pub fn conjugate_defect(&self) -> f64 {
        self.iter().map(|(n, c)| (self.get(-n) - c.conj()).norm()).fold(0.0, f64::max)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * factor).collect();
        Self::new(self.lambda, self.period, self.min_index, coeffs).expect("finite scaling")
    }

    /// Restriction re-based at `t = shift`: `f(t) -> f(t + shift)`.
    pub fn translated(&self, shift: f64) -> Self {
        let w = self.base_frequency();
        let coeffs = self
            .iter()
            .map(|(n, c)| c * C64::from_polar(1.0, w * n as f64 * shift))
            .collect();
        Self::new(self.lambda, self.period, self.min_index, coeffs).expect("finite translation")
    }

    /// Exact compensated sum `sum_n nu(n) e^{2 pi i n z / L}`.
    pub fn eval_direct(&self, z: C64) -> C64 {
        let w = self.base_frequency();
        let mut acc = ComplexKahanSum::new();
        for (n, c) in self.iter() {
            if c == ZERO {
                continue;
            }
            acc.add(c * (C64::i() * (w * n as f64) * z).exp());
        }
        acc.value()
    }

    /// Horner evaluation returning `(p, e)` with `f(z) = p exp(e)`; the split
    /// keeps large strips away from overflow.
    pub fn eval_parts(&self, z: C64) -> (C64, C64) {
        if self.coeffs.is_empty() {
            return (ZERO, ZERO);
        }
        let w = self.base_frequency();
        let iw = C64::i() * w;
        // |e^{i w z}| = e^{-w tau}
        if z.im >= 0.0 {
            let q = (iw * z).exp();
            let mut p = ZERO;
            for c in self.coeffs.iter().rev() {
                p = p * q + c;
            }
            (p, iw * z * self.min_index as f64)
        } else {
            let q = (-iw * z).exp();
            let mut p = ZERO;
            for c in self.coeffs.iter() {
                p = p * q + c;
            }
            (p, iw * z * self.max_index() as f64)
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let (p, e) = self.eval_parts(z);
        if p == ZERO {
            return ZERO;
        }
        p * e.exp()
    }

    /// Derivative in `z` of the continuation.
    pub fn eval_derivative(&self, z: C64) -> C64 {
        let w = self.base_frequency();
        let mut acc = ComplexKahanSum::new();
        for (n, c) in self.iter() {
            if c == ZERO {
                continue;
            }
            let k = C64::i() * (w * n as f64);
            acc.add(c * k * (k * z).exp());
        }
        acc.value()
    }

    pub fn log_abs_sq_at(&self, z: C64) -> f64 {
        let (p, e) = self.eval_parts(z);
        2.0 * (p.norm().ln() + e.re)
    }
}

impl Continuation for PeriodicSpectrum {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn value_at(&self, z: ComplexPoint) -> Result<C64> {
        Ok(self.eval(z.to_c64()))
    }

    fn log_abs_sq(&self, z: ComplexPoint) -> Result<f64> {
        Ok(self.log_abs_sq_at(z.to_c64()))
    }
}

/// Finite exponential sum `sum_k c_k e^{i omega_k t}`: the restriction of a
/// torus mode to an arbitrary straight geodesic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialSum {
    pub lambda: f64,
    pub terms: Vec<(f64, C64)>,
}

impl ExponentialSum {
    pub fn new(lambda: f64, terms: Vec<(f64, C64)>) -> Self {
        ExponentialSum { lambda, terms }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = ComplexKahanSum::new();
        for &(w, c) in &self.terms {
            acc.add(c * (C64::i() * w * z).exp());
        }
        acc.value()
    }

    /// Exact Gaussian-windowed transform `sqrt(2 pi) sum_k c_k e^{-(sigma-omega_k)^2/2}`.
    pub fn gaussian_transform(&self, sigma: f64) -> C64 {
        let mut acc = ComplexKahanSum::new();
        for &(w, c) in &self.terms {
            acc.add(c * (-(sigma - w).powi(2) / 2.0).exp());
        }
        acc.value() * (2.0 * PI).sqrt()
    }
}

impl Continuation for ExponentialSum {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn value_at(&self, z: ComplexPoint) -> Result<C64> {
        Ok(self.eval(z.to_c64()))
    }
}

/// Analytic convergence factor `G` making aperiodic restrictions integrable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvergenceFactor {
    /// `e^{-t^2/2}`
    Gaussian,
    /// `1 / (t + i p)`
    CauchyPole { p: f64 },
}

impl ConvergenceFactor {
    pub fn eval(&self, z: C64) -> C64 {
        match *self {
            ConvergenceFactor::Gaussian => (-z * z / 2.0).exp(),
            ConvergenceFactor::CauchyPole { p } => 1.0 / (z + C64::new(0.0, p)),
        }
    }

    /// Checks the factor is holomorphic and bounded on `|tau| <= tau_max`.
    pub fn check_strip(&self, tau_max: f64) -> Result<()> {
        match *self {
            ConvergenceFactor::Gaussian => Ok(()),
            ConvergenceFactor::CauchyPole { p } => {
                if p.abs() <= tau_max {
                    Err(Error::PoleTooClose { p: p.abs(), tau_max })
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Sampled transform `nu^G(sigma_k)` on the uniform grid
/// `sigma_k = sigma0 + k dsigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedSpectrum {
    pub lambda: f64,
    pub sigma0: f64,
    pub dsigma: f64,
    pub values: Vec<C64>,
    pub factor: ConvergenceFactor,
    /// Half-length `T` of the sampled window `[-T, T]`.
    pub half_window: f64,
    pub tau_max: f64,
    pub truncation_error: f64,
    pub quadrature_error: f64,
}

impl WindowedSpectrum {
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma0 + self.dsigma * k as f64
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma(self.values.len().saturating_sub(1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, C64)> + '_ {
        self.values.iter().enumerate().map(move |(k, v)| (self.sigma(k), *v))
    }

    /// `(1/2pi) int |nu^G|^2 dsigma`, equal to `int |G phi|^2 dt`.
    pub fn total_mass(&self) -> f64 {
        let w = crate::numeric::trapezoid(
            &self.values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(),
            self.dsigma,
        );
        w / TAU
    }
}

impl Continuation for WindowedSpectrum {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn value_at(&self, z: ComplexPoint) -> Result<C64> {
        crate::growth::continue_windowed(self, z, false)
    }

    fn t_range(&self) -> Option<(f64, f64)> {
        Some((-self.half_window, self.half_window))
    }
}

/// Either flavour of orbital spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitalSpectrum {
    Periodic(PeriodicSpectrum),
    Aperiodic(WindowedSpectrum),
}

impl OrbitalSpectrum {
    pub fn lambda(&self) -> f64 {
        match self {
            OrbitalSpectrum::Periodic(s) => s.lambda(),
            OrbitalSpectrum::Aperiodic(s) => s.lambda,
        }
    }

    pub fn as_periodic(&self) -> Option<&PeriodicSpectrum> {
        match self {
            OrbitalSpectrum::Periodic(s) => Some(s),
            OrbitalSpectrum::Aperiodic(_) => None,
        }
    }

    /// CSV with columns `n,re,im` (periodic) or `sigma,re,im` (aperiodic).
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match self {
            OrbitalSpectrum::Periodic(s) => {
                w.write_record(["n", "re", "im"])?;
                for (n, c) in s.iter() {
                    w.write_record([n.to_string(), c.re.to_string(), c.im.to_string()])?;
                }
            }
            OrbitalSpectrum::Aperiodic(s) => {
                w.write_record(["sigma", "re", "im"])?;
                for (sig, c) in s.iter() {
                    w.write_record([sig.to_string(), c.re.to_string(), c.im.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl From<PeriodicSpectrum> for OrbitalSpectrum {
    fn from(s: PeriodicSpectrum) -> Self {
        OrbitalSpectrum::Periodic(s)
    }
}

impl From<WindowedSpectrum> for OrbitalSpectrum {
    fn from(s: WindowedSpectrum) -> Self {
        OrbitalSpectrum::Aperiodic(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_direct_sum_on_both_half_planes() {
        let s = PeriodicSpectrum::from_pairs(
            7.0,
            TAU,
            &[(-7, C64::new(0.3, 0.1)), (-2, C64::new(-1.0, 0.4)), (5, C64::new(0.2, -0.9))],
        )
        .unwrap();
        for z in [C64::new(0.4, 0.3), C64::new(-2.0, -0.45), C64::new(5.0, 0.0)] {
            let a = s.eval(z);
            let b = s.eval_direct(z);
            assert!((a - b).norm() <= 1e-13 * b.norm().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn translation_shifts_the_argument() {
        let s = PeriodicSpectrum::from_pairs(3.0, TAU, &[(3, C64::new(1.0, 0.0)), (-1, C64::new(0.5, 0.5))])
            .unwrap();
        let moved = s.translated(0.7);
        let z = C64::new(0.2, 0.1);
        assert!((moved.eval(z) - s.eval(z + 0.7)).norm() < 1e-13);
    }

    #[test]
    fn sine_spectrum_is_real_and_supported_on_pm_n() {
        let s = PeriodicSpectrum::sine(4);
        assert_eq!(s.support(), Some((-4, 4)));
        assert!(s.conjugate_defect() < 1e-15);
        assert!((s.eval(C64::new(0.3, 0.0)).re - (1.2f64).sin()).abs() < 1e-15);
    }

    #[test]
    fn cauchy_pole_must_clear_the_strip() {
        let g = ConvergenceFactor::CauchyPole { p: 0.1 };
        assert!(matches!(g.check_strip(0.2), Err(Error::PoleTooClose { .. })));
        assert!(ConvergenceFactor::CauchyPole { p: 0.5 }.check_strip(0.2).is_ok());
    }
}
