//! Zeros of continued restrictions in a strip: companion-matrix roots of the
//! Laurent polynomial, argument-principle counts and empirical zero measures.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::{GrowthProfile, Strip};
use crate::numeric::{circle_distance, hessenberg_eigenvalues, wrap, C64, ZERO};
use crate::spectrum::PeriodicSpectrum;

/// Companion residual above which a conditioning warning is attached.
pub const CONDITIONING_LIMIT: f64 = 1e-8;
/// Cluster radius for multiplicities, relative to the period.
pub const CLUSTER_RADIUS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMethod {
    Companion,
    ArgumentPrinciple,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub t: f64,
    pub tau: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    pub period: f64,
    pub lambda: f64,
    pub tau_max: f64,
    pub source_id: String,
    pub method: ZeroMethod,
    /// Largest `|f(z)| / sum |nu_n e^{i omega_n z}|` over reported zeros.
    pub max_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl ZeroSet {
    pub fn empty(period: f64, lambda: f64, tau_max: f64) -> Self {
        ZeroSet {
            zeros: Vec::new(),
            period,
            lambda,
            tau_max,
            source_id: String::new(),
            method: ZeroMethod::Companion,
            max_residual: 0.0,
            warning: None,
        }
    }

    /// Zeros counted with multiplicity.
    pub fn count(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }

    /// Count in `[t0, t1] x [tau0, tau1]`, including periodic images in `t`.
    pub fn count_in_box(&self, b: &ZeroBox) -> usize {
        self.zeros
            .iter()
            .filter(|z| z.tau >= b.tau0 && z.tau <= b.tau1 && t_in_range(z.t, b.t0, b.t1, self.period))
            .map(|z| z.multiplicity)
            .sum()
    }

    /// Largest distance from a zero to the conjugate of its nearest partner.
    pub fn conjugate_pairing_defect(&self) -> f64 {
        self.zeros
            .iter()
            .map(|z| {
                self.zeros
                    .iter()
                    .map(|w| circle_distance(z.t, w.t, self.period).hypot(z.tau + w.tau))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "tau", "multiplicity"])?;
        for z in &self.zeros {
            w.write_record([z.t.to_string(), z.tau.to_string(), z.multiplicity.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn t_in_range(t: f64, t0: f64, t1: f64, period: f64) -> bool {
    if t1 - t0 >= period {
        return true;
    }
    let k = ((t0 - t) / period).ceil();
    let shifted = t + k * period;
    shifted >= t0 && shifted <= t1
}

/// Closed rectangle `[t0, t1] x [tau0, tau1]` in the strip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroBox {
    pub t0: f64,
    pub t1: f64,
    pub tau0: f64,
    pub tau1: f64,
}

impl ZeroBox {
    pub fn new(t0: f64, t1: f64, tau0: f64, tau1: f64) -> Self {
        ZeroBox { t0, t1, tau0, tau1 }
    }

    fn dilated(&self, eps: f64) -> Self {
        ZeroBox::new(self.t0 - eps, self.t1 + eps, self.tau0 - eps, self.tau1 + eps)
    }

    fn shifted(&self, dt: f64) -> Self {
        ZeroBox::new(self.t0 + dt, self.t1 + dt, self.tau0, self.tau1)
    }
}

fn local_scale(spectrum: &PeriodicSpectrum, z: C64) -> f64 {
    let w = spectrum.base_frequency();
    spectrum
        .iter()
        .filter(|(_, c)| *c != ZERO)
        .map(|(n, c)| c.norm() * (-w * n as f64 * z.im).exp())
        .sum()
}

fn newton_polish(spectrum: &PeriodicSpectrum, mut z: C64) -> C64 {
    let mut best = (z, spectrum.eval_direct(z).norm());
    for _ in 0..8 {
        let f = spectrum.eval_direct(z);
        let d = spectrum.eval_derivative(z);
        if d == ZERO {
            break;
        }
        z -= f / d;
        let r = spectrum.eval_direct(z).norm();
        if r < best.1 {
            best = (z, r);
        } else {
            break;
        }
    }
    best.0
}

/// All zeros with `|tau| <= tau_max` (closed) of the continued restriction,
/// from the eigenvalues of the companion matrix of
/// `sum nu(n) w^{n - n_min}` with `w = e^{2 pi i z / L}`.
pub fn laurent_roots(spectrum: &PeriodicSpectrum, tau_max: f64) -> Result<ZeroSet> {
    let (lo, hi) = spectrum.support().ok_or(Error::DegenerateSpectrum)?;
    let period = spectrum.period();
    let degree = (hi - lo) as usize;
    let mut set = ZeroSet::empty(period, spectrum.lambda(), tau_max);
    set.source_id = format!("periodic:lambda={}:support=[{lo},{hi}]", spectrum.lambda());
    if degree == 0 {
        return Ok(set);
    }
    let lead = spectrum.get(hi);
    let mut h = vec![ZERO; degree * degree];
    for i in 1..degree {
        h[i * degree + i - 1] = C64::new(1.0, 0.0);
    }
    for j in 0..degree {
        h[j * degree + degree - 1] = -spectrum.get(lo + j as i64) / lead;
    }
    let roots = hessenberg_eigenvalues(&mut h, degree)
        .ok_or_else(|| crate::error::invalid("companion eigenvalue iteration did not converge"))?;
    let scale = period / TAU;
    let mut raw: Vec<C64> = Vec::new();
    for w in roots {
        let tau = -scale * w.norm().ln();
        if tau.abs() > tau_max + 1e-6 {
            continue;
        }
        let z = C64::new(wrap(scale * w.arg(), period), tau);
        let z = newton_polish(spectrum, z);
        let z = C64::new(wrap(z.re, period), z.im);
        if z.im.abs() <= tau_max + 1e-9 {
            raw.push(z);
        }
    }
    let mut max_residual: f64 = 0.0;
    for z in &raw {
        let r = spectrum.eval_direct(*z).norm() / local_scale(spectrum, *z).max(f64::MIN_POSITIVE);
        max_residual = max_residual.max(r);
    }
    if max_residual > CONDITIONING_LIMIT {
        set.warning = Some(format!("companion roots have relative residual {max_residual:e}"));
    }
    set.max_residual = max_residual;
    set.zeros = cluster(raw, period);
    Ok(set)
}

fn cluster(mut raw: Vec<C64>, period: f64) -> Vec<Zero> {
    raw.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let radius = CLUSTER_RADIUS * period;
    let mut used = vec![false; raw.len()];
    let mut out = Vec::new();
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![raw[i]];
        for j in (i + 1)..raw.len() {
            if !used[j] && circle_distance(raw[i].re, raw[j].re, period).hypot(raw[i].im - raw[j].im) <= radius {
                used[j] = true;
                members.push(raw[j]);
            }
        }
        let m = members.len();
        let tau = members.iter().map(|z| z.im).sum::<f64>() / m as f64;
        // average t through offsets from the first member so wrap-around clusters stay together
        let base = members[0].re;
        let dt = members
            .iter()
            .map(|z| {
                let d = z.re - base;
                d - (d / period).round() * period
            })
            .sum::<f64>()
            / m as f64;
        out.push(Zero { t: wrap(base + dt, period), tau, multiplicity: m });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgumentCount {
    pub count: i64,
    /// Contour actually used after any dilation or shift.
    pub contour: ZeroBox,
    pub attempts: usize,
}

/// Signals a zero within reach of the contour.
struct NearZero;

/// Near-zero threshold on `|f| / |f'|`.
const NEAR_ZERO: f64 = 1e-6;
const MAX_ATTEMPTS: usize = 3;

struct PhaseTracker<'a> {
    spectrum: &'a PeriodicSpectrum,
    max_step: f64,
}

impl PhaseTracker<'_> {
    fn sample(&self, z: C64) -> std::result::Result<C64, NearZero> {
        let (p, e) = self.spectrum.eval_parts(z);
        let d = self.spectrum.eval_derivative(z);
        let f = self.spectrum.eval(z);
        if p == ZERO || (f != ZERO && d != ZERO && f.norm() / d.norm() < NEAR_ZERO) {
            return Err(NearZero);
        }
        // only the phase matters: p e^{i Im e}
        Ok(p * C64::from_polar(1.0, e.im) / p.norm())
    }

    fn segment(&self, a: C64, fa: C64, b: C64, fb: C64, depth: u32) -> std::result::Result<f64, NearZero> {
        let whole = (fb / fa).arg();
        if depth > 48 {
            return Err(NearZero);
        }
        let long = (b - a).norm() > self.max_step;
        if !long && whole.abs() < 0.3 {
            let m = 0.5 * (a + b);
            let fm = self.sample(m)?;
            let split = (fm / fa).arg() + (fb / fm).arg();
            if (split - whole).abs() < 1e-3 {
                return Ok(whole);
            }
            return Ok(self.segment(a, fa, m, fm, depth + 1)? + self.segment(m, fm, b, fb, depth + 1)?);
        }
        let m = 0.5 * (a + b);
        let fm = self.sample(m)?;
        Ok(self.segment(a, fa, m, fm, depth + 1)? + self.segment(m, fm, b, fb, depth + 1)?)
    }

    fn winding(&self, b: &ZeroBox) -> std::result::Result<i64, NearZero> {
        let corners = [
            C64::new(b.t0, b.tau0),
            C64::new(b.t1, b.tau0),
            C64::new(b.t1, b.tau1),
            C64::new(b.t0, b.tau1),
        ];
        let values = corners.iter().map(|z| self.sample(*z)).collect::<std::result::Result<Vec<_>, _>>()?;
        let mut total = 0.0;
        for k in 0..4 {
            let j = (k + 1) % 4;
            total += self.segment(corners[k], values[k], corners[j], values[j], 0)?;
        }
        Ok((total / TAU).round() as i64)
    }
}

/// Winding number of the continuation around the box boundary, by adaptive
/// phase tracking; contours touching a zero are shifted (full-period boxes) or
/// dilated by `1e-5`, at most three times.
pub fn argument_principle_count(spectrum: &PeriodicSpectrum, zbox: &ZeroBox) -> Result<ArgumentCount> {
    if spectrum.is_zero() {
        return Err(Error::DegenerateSpectrum);
    }
    let period = spectrum.period();
    let n_max = spectrum.n_max().max(1) as f64;
    let tracker = PhaseTracker { spectrum, max_step: period / (8.0 * n_max) };
    let full_period = (zbox.t1 - zbox.t0 - period).abs() <= 1e-12 * period;
    let mut contour = *zbox;
    for attempt in 1..=MAX_ATTEMPTS {
        match tracker.winding(&contour) {
            Ok(count) => return Ok(ArgumentCount { count, contour, attempts: attempt }),
            Err(NearZero) => {
                contour = if full_period {
                    contour.shifted(1e-5 * period)
                } else {
                    contour.dilated(1e-5)
                };
            }
        }
    }
    Err(Error::BoundaryZero { attempts: MAX_ATTEMPTS })
}

/// Test function paired against the zero measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// Indicator of `[t0, t1] x [tau0, tau1]`, ramped linearly over `smoothing`
    /// inside each edge (sharp when zero).
    BoxIndicator { t0: f64, t1: f64, tau0: f64, tau1: f64, smoothing: f64 },
    GaussianBump { t: f64, tau: f64, width: f64 },
    /// `(1 - cos(2 pi (t - t0)/(t1 - t0))) / 2` on `[t0, t1]`, constant in `tau`.
    CosineWindow { t0: f64, t1: f64 },
}

fn ramp(x: f64, a: f64, b: f64, w: f64) -> f64 {
    if x < a || x > b {
        return 0.0;
    }
    if w <= 0.0 {
        return 1.0;
    }
    ((x - a) / w).min((b - x) / w).min(1.0)
}

impl TestFunction {
    pub fn eval(&self, t: f64, tau: f64) -> f64 {
        match *self {
            TestFunction::BoxIndicator { t0, t1, tau0, tau1, smoothing } => {
                ramp(t, t0, t1, smoothing) * ramp(tau, tau0, tau1, smoothing)
            }
            TestFunction::GaussianBump { t: c, tau: d, width } => {
                (-((t - c).powi(2) + (tau - d).powi(2)) / (2.0 * width * width)).exp()
            }
            TestFunction::CosineWindow { t0, t1 } => {
                if t < t0 || t > t1 {
                    0.0
                } else {
                    0.5 * (1.0 - (TAU * (t - t0) / (t1 - t0)).cos())
                }
            }
        }
    }

    /// `(1/pi) int f(t, 0) dt`.
    pub fn reference(&self) -> f64 {
        let integral = match *self {
            TestFunction::BoxIndicator { t0, t1, tau0, tau1, smoothing } => {
                (t1 - t0 - smoothing.max(0.0)) * ramp(0.0, tau0, tau1, smoothing)
            }
            TestFunction::GaussianBump { tau, width, .. } => {
                width * TAU.sqrt() * (-tau * tau / (2.0 * width * width)).exp()
            }
            TestFunction::CosineWindow { t0, t1 } => 0.5 * (t1 - t0),
        };
        integral / PI
    }

    /// Value at the periodic image of `t` nearest to the function's support.
    fn eval_periodic(&self, t: f64, tau: f64, period: f64) -> f64 {
        let centre = match *self {
            TestFunction::BoxIndicator { t0, t1, .. } | TestFunction::CosineWindow { t0, t1 } => {
                if t >= t0 && t <= t1 {
                    return self.eval(t, tau);
                }
                0.5 * (t0 + t1)
            }
            TestFunction::GaussianBump { t: c, .. } => c,
        };
        let shifted = t - ((t - centre) / period).round() * period;
        self.eval(shifted, tau)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub pairing: f64,
    pub reference: f64,
    pub gap: f64,
}

/// `(1/lambda) sum_zeros f(t + i tau)` against `(1/pi) int f(t) dt`.
pub fn empirical_measure_pairing(zeros: &ZeroSet, f: &TestFunction) -> Result<PairingReport> {
    if zeros.lambda == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    let sum: f64 = zeros
        .zeros
        .iter()
        .map(|z| z.multiplicity as f64 * f.eval_periodic(z.t, z.tau, zeros.period))
        .sum();
    let pairing = sum / zeros.lambda;
    let reference = f.reference();
    Ok(PairingReport { pairing, reference, gap: (pairing - reference).abs() })
}

/// Node weights on a strip grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    pub strip: Strip,
    pub weights: Vec<f64>,
}

impl GridMeasure {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Sum of node weights inside the closed box.
    pub fn total_in_box(&self, b: &ZeroBox) -> f64 {
        let ts = self.strip.ts();
        let taus = self.strip.taus();
        let mut s = 0.0;
        for (i, tau) in taus.iter().enumerate() {
            if *tau < b.tau0 || *tau > b.tau1 {
                continue;
            }
            for (j, t) in ts.iter().enumerate() {
                if *t >= b.t0 && *t <= b.t1 {
                    s += self.weights[i * self.strip.nt + j];
                }
            }
        }
        s
    }
}

/// `(1/4pi) Delta_h (lambda v)` times the cell area at interior nodes; the
/// total over a region estimates its zero count.
pub fn lelong_density(profile: &GrowthProfile) -> GridMeasure {
    let s = profile.strip;
    let (nt, ntau) = (s.nt, s.ntau);
    let (ht, hs) = (s.ht(), s.htau());
    let u = |i: usize, j: usize| profile.lambda * profile.get(i, j);
    let mut weights = vec![0.0; nt * ntau];
    for i in 1..ntau - 1 {
        for j in 1..nt - 1 {
            let lap = (u(i, j + 1) - 2.0 * u(i, j) + u(i, j - 1)) / (ht * ht)
                + (u(i + 1, j) - 2.0 * u(i, j) + u(i - 1, j)) / (hs * hs);
            weights[i * nt + j] = lap * ht * hs / (4.0 * PI);
        }
    }
    GridMeasure { strip: s, weights }
}
