//! Model surfaces and their eigenmodes: flat-torus exponentials, random-wave
//! ensembles and equatorial restrictions of spherical harmonics.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geodesic::{ComplexSurfacePoint, GeodesicState};
use crate::numeric::{ComplexKahanSum, KahanSum, C64};
use crate::spectrum::{ExponentialSum, PeriodicSpectrum};

/// Area of the torus `R^2 / 2 pi Z^2`.
pub const TORUS_AREA: f64 = 4.0 * PI * PI;

/// One Fourier term `A cos(k . x + phase)` of a conformal factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTerm {
    pub k: [i64; 2],
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SurfaceModel {
    FlatTorus,
    RandomWaveTorus,
    SphereEquator { l: i64, m: i64 },
    /// Metric `(1 + a(x)) (dx1^2 + dx2^2)`.
    PerturbedTorus { terms: Vec<PerturbationTerm> },
}

impl SurfaceModel {
    pub fn perturbed(terms: Vec<PerturbationTerm>) -> Result<Self> {
        let s = SurfaceModel::PerturbedTorus { terms };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SurfaceModel::SphereEquator { l, m } => {
                if *l < 0 || m.abs() > *l {
                    return Err(Error::OrderOutOfRange { l: *l, m: *m });
                }
            }
            SurfaceModel::PerturbedTorus { terms } => {
                let total: f64 = terms.iter().map(|t| t.amplitude.abs()).sum();
                if !(total < 1.0) {
                    return Err(invalid(format!(
                        "perturbation amplitudes sum to {total}, metric must stay positive"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// True for tori carrying the flat metric.
    pub fn is_flat_torus(&self) -> bool {
        matches!(self, SurfaceModel::FlatTorus | SurfaceModel::RandomWaveTorus)
    }

    pub fn is_torus(&self) -> bool {
        !matches!(self, SurfaceModel::SphereEquator { .. })
    }

    /// Conformal factor perturbation `a(x)` and its gradient, evaluated at a
    /// possibly complex point.
    pub fn conformal(&self, x: [C64; 2]) -> (C64, [C64; 2]) {
        let mut a = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        if let SurfaceModel::PerturbedTorus { terms } = self {
            for t in terms {
                let arg = x[0] * t.k[0] as f64 + x[1] * t.k[1] as f64 + t.phase;
                a += arg.cos() * t.amplitude;
                let s = -arg.sin() * t.amplitude;
                g[0] += s * t.k[0] as f64;
                g[1] += s * t.k[1] as f64;
            }
        }
        (a, g)
    }
}

/// Finite linear combination of torus exponentials `c_n e^{i n.x}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenmode {
    pub surface: SurfaceModel,
    pub lambda: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(with = "term_rows")]
    pub terms: Vec<([i64; 2], C64)>,
    /// Squared L^2 norm over the torus.
    pub normalization: f64,
}

mod term_rows {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(terms: &[([i64; 2], C64)], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<(i64, i64, f64, f64)> =
            terms.iter().map(|(n, c)| (n[0], n[1], c.re, c.im)).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<([i64; 2], C64)>, D::Error> {
        let rows: Vec<(i64, i64, f64, f64)> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(|(a, b, re, im)| ([a, b], C64::new(re, im))).collect())
    }
}

impl Eigenmode {
    fn from_terms(
        surface: SurfaceModel,
        lambda: f64,
        delta: f64,
        seed: Option<u64>,
        terms: Vec<([i64; 2], C64)>,
    ) -> Self {
        let normalization =
            terms.iter().map(|(_, c)| c.norm_sqr()).collect::<KahanSum>().value() * TORUS_AREA;
        Eigenmode { surface, lambda, delta, seed, terms, normalization }
    }

    pub fn coefficient(&self, n: [i64; 2]) -> C64 {
        self.terms.iter().filter(|(m, _)| *m == n).map(|(_, c)| *c).sum()
    }

    /// `c_{-n} = conj(c_n)` for every term.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(n, c)| self.coefficient([-n[0], -n[1]]) == c.conj())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.normalization
    }

    /// Every frequency lies in the recorded annulus `| |n| - lambda | <= delta`.
    pub fn window_ok(&self) -> bool {
        let lo = (self.lambda - self.delta).max(0.0);
        let hi = self.lambda + self.delta;
        self.terms.iter().all(|(n, _)| {
            let r2 = (n[0] * n[0] + n[1] * n[1]) as f64;
            r2 >= lo * lo && r2 <= hi * hi
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Single exponential `c e^{i n.x}` on the flat torus.
pub fn make_torus_mode(n: [i64; 2], c: C64) -> Eigenmode {
    let lambda = ((n[0] * n[0] + n[1] * n[1]) as f64).sqrt();
    Eigenmode::from_terms(SurfaceModel::FlatTorus, lambda, 0.0, None, vec![(n, c)])
}

/// Lattice points with `lo <= |n| <= hi`, in lexicographic order.
pub fn annulus_points(lo: f64, hi: f64) -> Vec<[i64; 2]> {
    let lo = lo.max(0.0);
    let (lo2, hi2) = (lo * lo, hi * hi);
    let r = hi.floor() as i64;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            let r2 = (a * a + b * b) as f64;
            if r2 >= lo2 && r2 <= hi2 {
                out.push([a, b]);
            }
        }
    }
    out
}

/// Real Gaussian random wave on the annulus `lambda - delta <= |n| <= lambda + delta`,
/// normalized to unit L^2 norm on the torus.
pub fn sample_random_wave(lambda: f64, delta: f64, seed: u64) -> Result<Eigenmode> {
    if !(lambda > 0.0 && delta > 0.0 && lambda.is_finite() && delta.is_finite()) {
        return Err(invalid("random wave needs positive finite lambda and delta"));
    }
    let lo = lambda - delta;
    let hi = lambda + delta;
    let points = annulus_points(lo, hi);
    if points.is_empty() {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::with_capacity(points.len());
    for n in points.iter().copied() {
        let positive = n[0] > 0 || (n[0] == 0 && n[1] > 0);
        if n == [0, 0] {
            let g: f64 = StandardNormal.sample(&mut rng);
            terms.push((n, C64::new(g, 0.0)));
        } else if positive {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let c = C64::new(re, im) / 2f64.sqrt();
            terms.push((n, c));
            terms.push(([-n[0], -n[1]], c.conj()));
        }
    }
    terms.sort_by_key(|(n, _)| *n);
    let mass = terms.iter().map(|(_, c)| c.norm_sqr()).collect::<KahanSum>().value() * TORUS_AREA;
    let scale = mass.sqrt().recip();
    for (_, c) in terms.iter_mut() {
        *c *= scale;
    }
    Ok(Eigenmode::from_terms(SurfaceModel::RandomWaveTorus, lambda, delta, Some(seed), terms))
}

/// `phi(x) = sum c_n e^{i n.x}` at a real point.
pub fn evaluate_mode(mode: &Eigenmode, x: [f64; 2]) -> Result<C64> {
    evaluate_mode_complex(mode, &ComplexSurfacePoint::real(x))
}

/// Holomorphic extension of a torus mode at a complex point.
pub fn evaluate_mode_complex(mode: &Eigenmode, zeta: &ComplexSurfacePoint) -> Result<C64> {
    if !mode.surface.is_torus() {
        return Err(Error::SurfaceMismatch("mode evaluation needs a torus surface".into()));
    }
    let mut acc = ComplexKahanSum::new();
    for (n, c) in &mode.terms {
        let arg = zeta.zeta[0] * n[0] as f64 + zeta.zeta[1] * n[1] as f64;
        acc.add(c * (C64::i() * arg).exp());
    }
    Ok(acc.value())
}

/// Orbital spectrum of a torus mode along the closed geodesic through
/// `state.x` with primitive direction `q`: `nu(k) = sum_{n.q = k} c_n e^{i n.x}`.
pub fn restrict_periodic(mode: &Eigenmode, state: &GeodesicState) -> Result<PeriodicSpectrum> {
    if !mode.surface.is_torus() {
        return Err(Error::SurfaceMismatch("restriction needs a torus surface".into()));
    }
    let q = state
        .q
        .ok_or_else(|| invalid("periodic restriction needs a closed geodesic direction"))?;
    let period = state.period.expect("periodic states record their period");
    let pairs: Vec<(i64, C64)> = mode
        .terms
        .iter()
        .map(|(n, c)| {
            let k = n[0] * q[0] + n[1] * q[1];
            let phase = n[0] as f64 * state.x[0] + n[1] as f64 * state.x[1];
            (k, c * C64::from_polar(1.0, phase))
        })
        .collect();
    PeriodicSpectrum::from_pairs(mode.lambda, period, &pairs)
}

/// Restriction to any straight geodesic as an exponential sum with
/// frequencies `n . xi`.
pub fn restrict_exponential_sum(mode: &Eigenmode, state: &GeodesicState) -> Result<ExponentialSum> {
    if !mode.surface.is_torus() {
        return Err(Error::SurfaceMismatch("restriction needs a torus surface".into()));
    }
    let terms = mode
        .terms
        .iter()
        .map(|(n, c)| {
            let w = n[0] as f64 * state.xi[0] + n[1] as f64 * state.xi[1];
            let phase = n[0] as f64 * state.x[0] + n[1] as f64 * state.x[1];
            (w, c * C64::from_polar(1.0, phase))
        })
        .collect();
    Ok(ExponentialSum::new(mode.lambda, terms))
}

/// Orthonormal associated Legendre values `P_l^m(x)` for `0 <= m <= l`,
/// Condon–Shortley phase included.
pub fn normalized_legendre(l: usize, m: usize, x: f64) -> f64 {
    assert!(m <= l);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=m {
        pmm *= -s * ((2 * k + 1) as f64 / (2 * k) as f64).sqrt();
    }
    if l == m {
        return pmm;
    }
    let mut p_prev = pmm;
    let mut p = x * ((2 * m + 3) as f64).sqrt() * pmm;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let prev_l = lf - 1.0;
        let b = ((prev_l * prev_l - mf * mf) / (4.0 * prev_l * prev_l - 1.0)).sqrt();
        let next = a * (x * p - b * p_prev);
        p_prev = p;
        p = next;
    }
    p
}

fn legendre_sup(l: usize, m: usize) -> f64 {
    // dense scan in the polar angle, then golden-section refinement around the best node
    let n = 40 * l + 400;
    let f = |theta: f64| normalized_legendre(l, m, theta.cos()).abs();
    let h = PI / n as f64;
    let (mut best, mut arg) = (0.0f64, 0.0f64);
    for i in 0..=n {
        let v = f(i as f64 * h);
        if v > best {
            best = v;
            arg = i as f64 * h;
        }
    }
    let (mut a, mut b) = ((arg - h).max(0.0), (arg + h).min(PI));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// Equatorial restriction of the sup-normalized harmonic `Y_l^m`: a single
/// frequency `m` with coefficient `P_l^m(0) / max |P_l^m|`.
pub fn sphere_equator_spectrum(l: i64, m: i64) -> Result<PeriodicSpectrum> {
    if l < 0 || m.abs() > l {
        return Err(Error::OrderOutOfRange { l, m });
    }
    let (lu, mu) = (l as usize, m.unsigned_abs() as usize);
    let mut c = normalized_legendre(lu, mu, 0.0) / legendre_sup(lu, mu);
    if (l - mu as i64) % 2 != 0 {
        c = 0.0;
    }
    if m < 0 && mu % 2 == 1 {
        c = -c;
    }
    PeriodicSpectrum::from_pairs(l as f64, TAU, &[(m, C64::new(c, 0.0))])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_mode_frequency_is_lattice_norm() {
        assert_eq!(make_torus_mode([3, 4], C64::new(1.0, 0.0)).lambda, 5.0);
        let m = make_torus_mode([0, 0], C64::new(2.0, 0.0));
        assert_eq!(m.lambda, 0.0);
        assert_eq!(evaluate_mode(&m, [1.0, 2.0]).unwrap(), C64::new(2.0, 0.0));
        let m = make_torus_mode([1, 0], C64::new(1.0, 0.0));
        let v = evaluate_mode(&m, [PI / 2.0, 0.0]).unwrap();
        assert!((v - C64::i()).norm() < 1e-15);
    }

    #[test]
    fn legendre_equator_values() {
        let p40 = normalized_legendre(4, 0, 0.0) / normalized_legendre(4, 0, 1.0);
        assert!((p40 - 3.0 / 8.0).abs() < 1e-14);
        assert!(normalized_legendre(10, 3, 0.0).abs() < 1e-15);
    }

    #[test]
    fn empty_window_is_reported() {
        assert!(matches!(sample_random_wave(5.2, 0.01, 1), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn sphere_order_is_checked() {
        assert!(matches!(sphere_equator_spectrum(3, 4), Err(Error::OrderOutOfRange { .. })));
    }
}
