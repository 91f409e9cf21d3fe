//! Complexified geodesics on flat and conformally perturbed tori, return maps
//! to straight sections and the reflection-asymmetry diagnostic.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{circle_distance, gcd, wrap, C64};
use crate::surface::SurfaceModel;

/// Local error allowance per unit path length for complex-time integration.
pub const STEP_TOLERANCE: f64 = 1e-8;
/// Step used for the real flow in return-map computations.
pub const REAL_FLOW_STEP: f64 = 0.02;
/// Matching tolerance in time and section coordinate for reflected returns.
pub const MATCH_TOLERANCE: f64 = 1e-6;

/// `t + i tau` in a strip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub t: f64,
    pub tau: f64,
}

impl ComplexPoint {
    pub fn new(t: f64, tau: f64) -> Self {
        ComplexPoint { t, tau }
    }

    pub fn to_c64(self) -> C64 {
        C64::new(self.t, self.tau)
    }
}

impl From<C64> for ComplexPoint {
    fn from(z: C64) -> Self {
        ComplexPoint { t: z.re, tau: z.im }
    }
}

/// Point `zeta` of the complexified torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexSurfacePoint {
    pub zeta: [C64; 2],
}

impl ComplexSurfacePoint {
    pub fn real(x: [f64; 2]) -> Self {
        ComplexSurfacePoint { zeta: [C64::new(x[0], 0.0), C64::new(x[1], 0.0)] }
    }

    /// Real parts reduced into `[0, 2 pi)`.
    pub fn reduced(self) -> Self {
        let r = |z: C64| C64::new(wrap(z.re, TAU), z.im);
        ComplexSurfacePoint { zeta: [r(self.zeta[0]), r(self.zeta[1])] }
    }
}

/// Unit-speed geodesic data `(x, xi)`; closed torus geodesics also carry
/// their primitive direction `q` and period `2 pi |q|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub period: Option<f64>,
    pub q: Option<[i64; 2]>,
}

impl GeodesicState {
    /// Closed geodesic through `x` in the primitive lattice direction `q`.
    pub fn periodic(x: [f64; 2], q: [i64; 2]) -> Result<Self> {
        if q == [0, 0] || gcd(q[0], q[1]) != 1 {
            return Err(invalid(format!("direction {q:?} is not a primitive lattice vector")));
        }
        let len = ((q[0] * q[0] + q[1] * q[1]) as f64).sqrt();
        Ok(GeodesicState {
            x,
            xi: [q[0] as f64 / len, q[1] as f64 / len],
            period: Some(TAU * len),
            q: Some(q),
        })
    }

    /// Aperiodic unless the angle happens to be given through [`Self::periodic`].
    pub fn from_angle(x: [f64; 2], theta: f64) -> Self {
        GeodesicState { x, xi: [theta.cos(), theta.sin()], period: None, q: None }
    }

    pub fn direction_defect(&self) -> f64 {
        ((self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1]).sqrt() - 1.0).abs()
    }

    /// Flat geodesic flow by time `s`.
    pub fn advance(&self, s: f64) -> Self {
        GeodesicState {
            x: [wrap(self.x[0] + s * self.xi[0], TAU), wrap(self.x[1] + s * self.xi[1], TAU)],
            ..*self
        }
    }
}

/// `x + (t + i tau) xi` on the flat torus.
pub fn flat_complex_geodesic(
    surface: &SurfaceModel,
    state: &GeodesicState,
    z: ComplexPoint,
) -> Result<ComplexSurfacePoint> {
    if !surface.is_flat_torus() {
        return Err(Error::SurfaceMismatch("closed-form geodesics need a flat torus".into()));
    }
    let z = z.to_c64();
    let p = ComplexSurfacePoint {
        zeta: [state.x[0] + z * state.xi[0], state.x[1] + z * state.xi[1]],
    };
    Ok(p.reduced())
}

/// Grauert tube function `sqrt(rho) = |Im zeta|` of the flat torus.
pub fn flat_sqrt_rho(p: &ComplexSurfacePoint) -> f64 {
    p.zeta[0].im.hypot(p.zeta[1].im)
}

/// Polyline in the complex time plane starting at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPath {
    pub vertices: Vec<ComplexPoint>,
    pub tau_max: f64,
}

impl ComplexPath {
    pub fn new(vertices: Vec<ComplexPoint>, tau_max: f64) -> Self {
        ComplexPath { vertices, tau_max }
    }

    /// Horizontal then vertical staircase from 0 to `z`.
    pub fn real_first(z: ComplexPoint, tau_max: f64) -> Self {
        Self::new(vec![ComplexPoint::new(0.0, 0.0), ComplexPoint::new(z.t, 0.0), z], tau_max)
    }

    /// Vertical then horizontal staircase from 0 to `z`.
    pub fn imaginary_first(z: ComplexPoint, tau_max: f64) -> Self {
        Self::new(vec![ComplexPoint::new(0.0, 0.0), ComplexPoint::new(0.0, z.tau), z], tau_max)
    }
}

type Phase = [C64; 4];

fn geodesic_rhs(surface: &SurfaceModel, y: &Phase) -> Phase {
    let x = [y[0], y[1]];
    let v = [y[2], y[3]];
    let (a, g) = surface.conformal(x);
    // metric e^{2f} with f = log(1 + a) / 2
    let denom = (C64::new(1.0, 0.0) + a) * 2.0;
    let df = [g[0] / denom, g[1] / denom];
    let dot = df[0] * v[0] + df[1] * v[1];
    let vv = v[0] * v[0] + v[1] * v[1];
    [v[0], v[1], vv * df[0] - dot * v[0] * 2.0, vv * df[1] - dot * v[1] * 2.0]
}

fn axpy(y: &Phase, h: C64, k: &Phase) -> Phase {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]]
}

fn rk4(surface: &SurfaceModel, y: &Phase, h: C64) -> Phase {
    let k1 = geodesic_rhs(surface, y);
    let k2 = geodesic_rhs(surface, &axpy(y, h * 0.5, &k1));
    let k3 = geodesic_rhs(surface, &axpy(y, h * 0.5, &k2));
    let k4 = geodesic_rhs(surface, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]);
    }
    out
}

fn initial_phase(surface: &SurfaceModel, state: &GeodesicState) -> Phase {
    let x = [C64::new(state.x[0], 0.0), C64::new(state.x[1], 0.0)];
    let (a, _) = surface.conformal(x);
    // unit speed in the metric (1 + a) |dx|^2
    let speed = (C64::new(1.0, 0.0) + a).sqrt().inv();
    [x[0], x[1], speed * state.xi[0], speed * state.xi[1]]
}

fn phase_distance(a: &Phase, b: &Phase) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Integrates the complexified geodesic equation along `path` with RK4 and
/// step doubling; the Richardson-corrected endpoint is returned.
pub fn integrate_complex_geodesic(
    surface: &SurfaceModel,
    state: &GeodesicState,
    path: &ComplexPath,
    step: f64,
) -> Result<ComplexSurfacePoint> {
    if !surface.is_torus() {
        return Err(Error::SurfaceMismatch("complex geodesic flow needs a torus".into()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("integration step must be positive"));
    }
    let Some(first) = path.vertices.first() else {
        return Err(invalid("path needs at least one vertex"));
    };
    if first.t != 0.0 || first.tau != 0.0 {
        return Err(invalid("path must start at the origin"));
    }
    for v in &path.vertices {
        if v.tau.abs() > path.tau_max {
            return Err(Error::StripExit { tau: v.tau, tau_max: path.tau_max });
        }
    }
    let mut y = initial_phase(surface, state);
    for w in path.vertices.windows(2) {
        let (za, zb) = (w[0].to_c64(), w[1].to_c64());
        let len = (zb - za).norm();
        if len == 0.0 {
            continue;
        }
        let n = (len / step).ceil().max(1.0) as usize;
        let h = (zb - za) / n as f64;
        for _ in 0..n {
            let coarse = rk4(surface, &y, h);
            let mid = rk4(surface, &y, h * 0.5);
            let fine = rk4(surface, &mid, h * 0.5);
            let err = phase_distance(&fine, &coarse) / 15.0;
            let per_length = err / h.norm();
            if per_length > STEP_TOLERANCE {
                return Err(Error::StepTooLarge { estimate: per_length, limit: STEP_TOLERANCE });
            }
            for i in 0..4 {
                y[i] = fine[i] + (fine[i] - coarse[i]) / 15.0;
            }
        }
    }
    Ok(ComplexSurfacePoint { zeta: [y[0], y[1]] }.reduced())
}

/// Straight closed section of the torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Section {
    /// `{x2 = c}`, parameterized by `x1`.
    Horizontal { c: f64 },
    /// `{x1 = c}`, parameterized by `x2`.
    Vertical { c: f64 },
}

impl Section {
    fn normal_index(&self) -> usize {
        match self {
            Section::Horizontal { .. } => 1,
            Section::Vertical { .. } => 0,
        }
    }

    fn level(&self) -> f64 {
        match *self {
            Section::Horizontal { c } | Section::Vertical { c } => c,
        }
    }

    pub fn distance(&self, x: [f64; 2]) -> f64 {
        circle_distance(x[self.normal_index()], self.level(), TAU)
    }

    /// Arclength coordinate along the section.
    pub fn coordinate(&self, x: [f64; 2]) -> f64 {
        wrap(x[1 - self.normal_index()], TAU)
    }

    /// State with its normal velocity component negated.
    pub fn reflect(&self, state: &GeodesicState) -> GeodesicState {
        let mut r = *state;
        r.xi[self.normal_index()] = -r.xi[self.normal_index()];
        r.period = None;
        r.q = None;
        r
    }

    fn event(&self, x: [f64; 2]) -> f64 {
        ((x[self.normal_index()] - self.level()) / 2.0).sin()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ReturnTime {
    Finite(f64),
    Infinite,
}

impl ReturnTime {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ReturnTime::Finite(t) => Some(t),
            ReturnTime::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnRecord {
    pub time: ReturnTime,
    pub state: GeodesicState,
    pub s: f64,
}

/// Real flow in phase space `(x, v)` with unit metric speed.
struct RealFlow<'a> {
    surface: &'a SurfaceModel,
}

impl RealFlow<'_> {
    fn step(&self, y: &[f64; 4], h: f64) -> [f64; 4] {
        let yc = [
            C64::new(y[0], 0.0),
            C64::new(y[1], 0.0),
            C64::new(y[2], 0.0),
            C64::new(y[3], 0.0),
        ];
        let out = rk4(self.surface, &yc, C64::new(h, 0.0));
        [out[0].re, out[1].re, out[2].re, out[3].re]
    }
}

fn to_state(y: &[f64; 4]) -> GeodesicState {
    let norm = y[2].hypot(y[3]);
    GeodesicState {
        x: [wrap(y[0], TAU), wrap(y[1], TAU)],
        xi: [y[2] / norm, y[3] / norm],
        period: None,
        q: None,
    }
}

/// First transversal return of the real geodesic flow to `section` within `horizon`.
pub fn first_return(
    surface: &SurfaceModel,
    section: &Section,
    start: &GeodesicState,
    horizon: f64,
) -> Result<ReturnRecord> {
    if !surface.is_torus() {
        return Err(Error::SurfaceMismatch("return maps are defined on tori".into()));
    }
    if !(horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    let distance = section.distance(start.x);
    if distance > 1e-8 {
        return Err(Error::StartOffSection { distance });
    }
    let infinite = ReturnRecord { time: ReturnTime::Infinite, state: *start, s: section.coordinate(start.x) };
    if start.xi[section.normal_index()].abs() < 1e-12 {
        return Ok(infinite);
    }
    let flow = RealFlow { surface };
    let phase = initial_phase(surface, start);
    let mut y = [phase[0].re, phase[1].re, phase[2].re, phase[3].re];
    // start exactly on the section so the event function begins at zero
    let ni = section.normal_index();
    let offset = y[ni] - section.level();
    y[ni] -= offset - (offset / TAU).round() * TAU;

    let n_steps = (horizon / REAL_FLOW_STEP).ceil() as usize;
    let h = horizon / n_steps as f64;
    let mut t = 0.0;
    let mut e_prev = section.event([y[0], y[1]]);
    for i in 0..n_steps {
        let next = flow.step(&y, h);
        let e_next = section.event([next[0], next[1]]);
        // a return needs a normal displacement of 2 pi, so the first step cannot cross
        let crossed = i > 0 && (e_prev * e_next < 0.0 || e_next == 0.0);
        if crossed {
            let (mut lo, mut hi) = (0.0, h);
            while hi - lo > 1e-12 {
                let m = 0.5 * (lo + hi);
                let p = flow.step(&y, m);
                let e_m = section.event([p[0], p[1]]);
                if e_m == 0.0 {
                    lo = m;
                    hi = m;
                    break;
                }
                if (e_m > 0.0) == (e_prev > 0.0) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let dt = 0.5 * (lo + hi);
            let end = flow.step(&y, dt);
            let mut state = to_state(&end);
            state.x[ni] = wrap(section.level(), TAU);
            return Ok(ReturnRecord {
                time: ReturnTime::Finite(t + dt),
                state,
                s: section.coordinate(state.x),
            });
        }
        y = next;
        e_prev = e_next;
        t += h;
    }
    Ok(infinite)
}

/// Successive returns with cumulative times, stopping at the first infinite one.
pub fn returns(
    surface: &SurfaceModel,
    section: &Section,
    start: &GeodesicState,
    horizon: f64,
    count: usize,
) -> Result<Vec<ReturnRecord>> {
    let mut out = Vec::with_capacity(count);
    let mut state = *start;
    let mut elapsed = 0.0;
    while out.len() < count && elapsed < horizon {
        let rec = first_return(surface, section, &state, horizon - elapsed)?;
        match rec.time {
            ReturnTime::Finite(t) => {
                elapsed += t;
                state = rec.state;
                out.push(ReturnRecord { time: ReturnTime::Finite(elapsed), ..rec });
            }
            ReturnTime::Infinite => break,
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryReport {
    /// Fraction of tested states whose reflection matches one of the returns.
    pub estimate: f64,
    pub symmetric: usize,
    pub tested: usize,
    /// States without a return inside the horizon, excluded from `estimate`.
    pub excluded: usize,
    pub tolerance: f64,
}

/// Monte-Carlo measure of section states whose reflected state returns to
/// the same point at the same time within the first `max_returns` returns.
pub fn asymmetry_diagnostic(
    surface: &SurfaceModel,
    section: &Section,
    samples: usize,
    horizon: f64,
    max_returns: usize,
    seed: u64,
) -> Result<AsymmetryReport> {
    if samples == 0 {
        return Err(invalid("asymmetry diagnostic needs at least one sample"));
    }
    if max_returns == 0 {
        return Err(invalid("at least one return must be considered"));
    }
    let ni = section.normal_index();
    let outcomes: Vec<Result<Option<bool>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let s: f64 = rng.random_range(0.0..TAU);
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let mut x = [0.0; 2];
            x[ni] = wrap(section.level(), TAU);
            x[1 - ni] = s;
            // angle measured from the section tangent
            let mut xi = [0.0; 2];
            xi[1 - ni] = theta.cos();
            xi[ni] = theta.sin();
            let start = GeodesicState { x, xi, period: None, q: None };
            let a = returns(surface, section, &start, horizon, max_returns)?;
            let b = returns(surface, section, &section.reflect(&start), horizon, max_returns)?;
            if a.is_empty() || b.is_empty() {
                return Ok(None);
            }
            let hit = a.iter().any(|ra| {
                b.iter().any(|rb| {
                    let (ta, tb) = (ra.time.finite().unwrap(), rb.time.finite().unwrap());
                    (ta - tb).abs() <= MATCH_TOLERANCE
                        && circle_distance(ra.s, rb.s, TAU) <= MATCH_TOLERANCE
                })
            });
            Ok(Some(hit))
        })
        .collect();
    let mut symmetric = 0;
    let mut tested = 0;
    let mut excluded = 0;
    for o in outcomes {
        match o? {
            Some(hit) => {
                tested += 1;
                if hit {
                    symmetric += 1;
                }
            }
            None => excluded += 1,
        }
    }
    let estimate = if tested == 0 { 0.0 } else { symmetric as f64 / tested as f64 };
    Ok(AsymmetryReport { estimate, symmetric, tested, excluded, tolerance: MATCH_TOLERANCE })
}
