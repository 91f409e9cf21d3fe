//! Experiment configuration: a single JSON document, validated field by field
//! before anything runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nodal_core::geodesic::Section;
use nodal_core::surface::{PerturbationTerm, SurfaceModel};
use nodal_core::wigner::{Cutoff, SymbolDescriptor, Window};
use nodal_core::ConvergenceFactor;
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Equidistribution,
    Growth,
    BandMass,
    Wigner,
    Qer,
    Geometry,
    NonperiodicWindow,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Equidistribution => "equidistribution",
            ExperimentKind::Growth => "growth",
            ExperimentKind::BandMass => "band-mass",
            ExperimentKind::Wigner => "wigner",
            ExperimentKind::Qer => "qer",
            ExperimentKind::Geometry => "geometry",
            ExperimentKind::NonperiodicWindow => "nonperiodic-window",
        }
    }

    /// Tolerance names understood by the experiment, with their defaults.
    pub fn default_tolerances(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            ExperimentKind::Equidistribution => {
                &[("count_ratio", 0.1), ("concentration", 0.8), ("concentration_tau", 0.05)]
            }
            ExperimentKind::Growth => &[("l2_gap", 0.05), ("bound_coefficient", 6.0)],
            ExperimentKind::BandMass => &[("band_ratio", 0.05), ("saturation_min", 0.1)],
            ExperimentKind::Wigner => &[("gap", 0.1)],
            ExperimentKind::Qer => &[("ratio", 0.05)],
            ExperimentKind::Geometry => &[("isometry", 1e-12), ("path_independence", 1e-8), ("return_time", 1e-9)],
            ExperimentKind::NonperiodicWindow => &[("plancherel", 1e-4)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicOrder {
    /// `m = l`, concentrated on the equator.
    Beam,
    /// `m = 0`.
    Zonal,
}

/// Where the eigenfunctions come from. Sphere and sine entries read each
/// lambda as an integer degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    FlatTorus,
    RandomWaveTorus {
        #[serde(default = "one")]
        delta: f64,
    },
    PerturbedTorus {
        terms: Vec<PerturbationTerm>,
    },
    SphereEquator {
        order: HarmonicOrder,
    },
    /// `sin(N t)` on the circle with `N = lambda`.
    SineStub,
    /// Gaussian packets of frequency `lambda` placed at random on the line.
    TravellingBump {
        #[serde(default = "bump_width")]
        width: f64,
        #[serde(default = "bump_range")]
        half_range: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn bump_width() -> f64 {
    0.3
}

fn bump_range() -> f64 {
    20.0
}

impl SurfaceSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SurfaceSpec::FlatTorus => "flat_torus",
            SurfaceSpec::RandomWaveTorus { .. } => "random_wave_torus",
            SurfaceSpec::PerturbedTorus { .. } => "perturbed_torus",
            SurfaceSpec::SphereEquator { .. } => "sphere_equator",
            SurfaceSpec::SineStub => "sine_stub",
            SurfaceSpec::TravellingBump { .. } => "travelling_bump",
        }
    }

    pub fn model(&self) -> Option<SurfaceModel> {
        match self {
            SurfaceSpec::FlatTorus => Some(SurfaceModel::FlatTorus),
            SurfaceSpec::RandomWaveTorus { .. } => Some(SurfaceModel::RandomWaveTorus),
            SurfaceSpec::PerturbedTorus { terms } => Some(SurfaceModel::PerturbedTorus { terms: terms.clone() }),
            _ => None,
        }
    }

    fn integer_degrees(&self) -> bool {
        matches!(self, SurfaceSpec::SphereEquator { .. } | SurfaceSpec::SineStub)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeodesicSpec {
    /// Closed torus geodesic through `x` in the primitive direction `q`.
    Periodic {
        #[serde(default)]
        x: [f64; 2],
        q: [i64; 2],
    },
    /// Torus geodesic through `x` at angle `theta`, treated as aperiodic.
    Angle {
        #[serde(default)]
        x: [f64; 2],
        theta: f64,
    },
    /// The sphere equator, also the circle carrying the sine stub.
    Equator,
    /// The real line carrying synthetic packets.
    Line,
    /// A straight section for return-map experiments.
    Section { section: Section },
}

impl GeodesicSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GeodesicSpec::Periodic { .. } => "periodic",
            GeodesicSpec::Angle { .. } => "angle",
            GeodesicSpec::Equator => "equator",
            GeodesicSpec::Line => "line",
            GeodesicSpec::Section { .. } => "section",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripSpec {
    pub tau_max: f64,
    /// Evaluation height for single-line statistics; `tau_max` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_ntau")]
    pub ntau: usize,
    #[serde(default = "default_ppw")]
    pub points_per_wavelength: f64,
}

fn default_ntau() -> usize {
    7
}

fn default_ppw() -> f64 {
    8.0
}

impl StripSpec {
    pub fn height(&self) -> f64 {
        self.tau.unwrap_or(self.tau_max)
    }
}

/// Experiment-specific knobs; each experiment reads only its own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default = "default_band")]
    pub band: [f64; 2],
    #[serde(default = "default_saturation_eps")]
    pub saturation_eps: f64,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    #[serde(default = "one")]
    pub window_width: f64,
    /// Gaussian truncation in widths for the Wigner symbol.
    #[serde(default = "default_cutoff")]
    pub window_cutoff: f64,
    #[serde(default = "default_shift")]
    pub shift: f64,
    #[serde(default = "default_symbol")]
    pub symbol: SymbolDescriptor,
    #[serde(default = "default_factor")]
    pub factor: ConvergenceFactor,
    #[serde(default = "default_half_window")]
    pub half_window: f64,
    #[serde(default = "default_window_samples")]
    pub window_samples: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_asymmetry_samples")]
    pub asymmetry_samples: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_band() -> [f64; 2] {
    [0.5, 1.0]
}

fn default_saturation_eps() -> f64 {
    0.2
}

fn default_interval() -> [f64; 2] {
    [-10.0, 10.0]
}

fn default_cutoff() -> f64 {
    8.0
}

fn default_shift() -> f64 {
    0.5
}

fn default_symbol() -> SymbolDescriptor {
    SymbolDescriptor::FrequencyCutoff { chi: Cutoff::Band { lo: 0.5, hi: 1.0 } }
}

fn default_factor() -> ConvergenceFactor {
    ConvergenceFactor::Gaussian
}

fn default_half_window() -> f64 {
    10.4
}

fn default_window_samples() -> usize {
    2048
}

fn default_samples() -> usize {
    1000
}

fn default_asymmetry_samples() -> usize {
    100
}

fn default_horizon() -> f64 {
    60.0
}

impl Default for Params {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all params have defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub surface: SurfaceSpec,
    pub geodesic: GeodesicSpec,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub strip: StripSpec,
    #[serde(default)]
    pub params: Params,
    /// Overrides of the experiment's default tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_output")]
    pub output_dir: String,
}

fn default_output() -> String {
    "lab-output".into()
}

/// One rejected field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Diagnostics(Vec<FieldError>);

impl Diagnostics {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError { path: path.into(), message: message.into() });
    }

    fn finite_positive(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.push(path, format!("must be finite and positive, got {v}"));
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            LabError::ConfigInvalid(vec![FieldError { path: "<document>".into(), message: e.to_string() }])
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Configured tolerances over the experiment defaults.
    pub fn tolerances(&self) -> BTreeMap<String, f64> {
        let mut t = self.experiment.default_tolerances();
        t.extend(self.tolerances.iter().map(|(k, v)| (k.clone(), *v)));
        t
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances()[name]
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let mut d = Diagnostics(Vec::new());
        self.check_lists(&mut d);
        self.check_strip(&mut d);
        self.check_surface(&mut d);
        self.check_pairing(&mut d);
        self.check_params(&mut d);
        let known = self.experiment.default_tolerances();
        for (name, v) in &self.tolerances {
            let path = format!("tolerances.{name}");
            if !known.contains_key(name) {
                d.push(path, format!("unknown tolerance for {}", self.experiment));
            } else if !(v.is_finite() && *v >= 0.0) {
                d.push(path, format!("must be finite and non-negative, got {v}"));
            }
        }
        if self.output_dir.trim().is_empty() {
            d.push("output_dir", "must not be empty");
        }
        if d.0.is_empty() {
            Ok(())
        } else {
            Err(LabError::ConfigInvalid(d.0))
        }
    }

    fn check_lists(&self, d: &mut Diagnostics) {
        if self.seeds.is_empty() {
            d.push("seeds", "at least one seed is required");
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                d.push(format!("seeds[{i}]"), format!("duplicate seed {s}"));
            }
        }
        if self.experiment == ExperimentKind::Geometry {
            if !self.lambdas.is_empty() {
                d.push("lambdas", "geometry experiments take no eigenvalues");
            }
        } else if self.lambdas.is_empty() {
            d.push("lambdas", "at least one eigenvalue is required");
        }
        for (i, l) in self.lambdas.iter().enumerate() {
            let path = format!("lambdas[{i}]");
            if !(l.is_finite() && *l > 0.0) {
                d.push(path, format!("must be finite and positive, got {l}"));
            } else if i > 0 && !(*l > self.lambdas[i - 1]) {
                d.push(path, "lambda list must be strictly increasing");
            } else if self.surface.integer_degrees() && l.fract() != 0.0 {
                d.push(path, format!("{} reads lambda as an integer degree, got {l}", self.surface.kind()));
            }
        }
    }

    fn check_strip(&self, d: &mut Diagnostics) {
        let s = &self.strip;
        d.finite_positive("strip.tau_max", s.tau_max);
        if let Some(tau) = s.tau {
            if !tau.is_finite() || tau.abs() > s.tau_max {
                d.push("strip.tau", format!("|tau| = {} exceeds tau_max = {}", tau.abs(), s.tau_max));
            }
            if self.experiment == ExperimentKind::Growth && !(tau > 0.0) {
                d.push("strip.tau", "growth exponents are measured at a positive height");
            }
        }
        if s.ntau < 2 {
            d.push("strip.ntau", "at least two rows are required");
        }
        if !(s.points_per_wavelength.is_finite() && s.points_per_wavelength >= 2.0) {
            d.push("strip.points_per_wavelength", "must be at least 2");
        }
    }

    fn check_surface(&self, d: &mut Diagnostics) {
        match &self.surface {
            SurfaceSpec::RandomWaveTorus { delta } => d.finite_positive("surface.delta", *delta),
            SurfaceSpec::PerturbedTorus { terms } => {
                if let Err(e) = SurfaceModel::perturbed(terms.clone()) {
                    d.push("surface.terms", e.to_string());
                }
                for (i, t) in terms.iter().enumerate() {
                    if !t.amplitude.is_finite() || !t.phase.is_finite() {
                        d.push(format!("surface.terms[{i}]"), "amplitude and phase must be finite");
                    }
                }
            }
            SurfaceSpec::TravellingBump { width, half_range } => {
                d.finite_positive("surface.width", *width);
                d.finite_positive("surface.half_range", *half_range);
                let margin = crate::experiment::bump_margin(self.params.window_width, *width);
                if half_range.is_finite() && *half_range <= margin {
                    d.push("surface.half_range", format!("must exceed {margin} to leave room for packet placement"));
                }
            }
            _ => {}
        }
        match &self.geodesic {
            GeodesicSpec::Periodic { x, q } => {
                if *q == [0, 0] || nodal_core::numeric::gcd(q[0], q[1]) != 1 {
                    d.push("geodesic.q", format!("{q:?} is not a primitive lattice vector"));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    d.push("geodesic.x", "must be finite");
                }
            }
            GeodesicSpec::Angle { x, theta } => {
                if x.iter().any(|v| !v.is_finite()) {
                    d.push("geodesic.x", "must be finite");
                }
                if !theta.is_finite() {
                    d.push("geodesic.theta", "must be finite");
                }
            }
            GeodesicSpec::Section { section } => {
                let (Section::Horizontal { c } | Section::Vertical { c }) = *section;
                if !c.is_finite() {
                    d.push("geodesic.section.c", "must be finite");
                }
            }
            _ => {}
        }
    }

    /// Surface and geodesic kinds each experiment accepts.
    fn check_pairing(&self, d: &mut Diagnostics) {
        use ExperimentKind as E;
        let surface = self.surface.kind();
        let geodesic = self.geodesic.kind();
        let surfaces: &[&str] = match self.experiment {
            E::Equidistribution | E::Growth | E::BandMass | E::Wigner => {
                &["random_wave_torus", "sphere_equator", "sine_stub"]
            }
            E::Qer => &["random_wave_torus"],
            E::Geometry => &["flat_torus", "perturbed_torus"],
            E::NonperiodicWindow => &["random_wave_torus", "travelling_bump"],
        };
        if !surfaces.contains(&surface) {
            d.push("surface.kind", format!("{} runs on {}, got {surface}", self.experiment, surfaces.join(" | ")));
            return;
        }
        let wanted = match (self.experiment, surface) {
            (E::Geometry, _) => "section",
            (E::NonperiodicWindow, "random_wave_torus") => "angle",
            (_, "random_wave_torus") => "periodic",
            (_, "travelling_bump") => "line",
            _ => "equator",
        };
        if geodesic != wanted {
            d.push("geodesic.kind", format!("{} on {surface} needs a {wanted} geodesic, got {geodesic}", self.experiment));
        }
    }

    fn check_params(&self, d: &mut Diagnostics) {
        use ExperimentKind as E;
        let p = &self.params;
        match self.experiment {
            E::BandMass => {
                let [lo, hi] = p.band;
                if !(0.0..1.0).contains(&lo) || !(hi > lo && hi <= 1.0) {
                    d.push("params.band", format!("need 0 <= lo < hi <= 1, got [{lo}, {hi}]"));
                }
                if !(p.saturation_eps > 0.0 && p.saturation_eps <= 1.0) {
                    d.push("params.saturation_eps", "must lie in (0, 1]");
                }
            }
            E::Wigner => {
                let [a, b] = p.interval;
                if !(a.is_finite() && b.is_finite() && a < b) {
                    d.push("params.interval", "need a finite interval with a < b");
                    return;
                }
                d.finite_positive("params.window_width", p.window_width);
                d.finite_positive("params.window_cutoff", p.window_cutoff);
                if !p.shift.is_finite() {
                    d.push("params.shift", "must be finite");
                }
                let (lo, hi) = wigner_window(p).support();
                let (lo, hi) = (lo.min(lo + p.shift), hi.max(hi + p.shift));
                if lo < a || hi > b {
                    d.push(
                        "params.window_width",
                        format!("window support [{lo}, {hi}] with its shift leaks outside [{a}, {b}]"),
                    );
                }
            }
            E::Qer => self.check_symbol(d),
            E::Geometry => {
                if p.samples == 0 {
                    d.push("params.samples", "must be positive");
                }
                if p.asymmetry_samples == 0 {
                    d.push("params.asymmetry_samples", "must be positive");
                }
                d.finite_positive("params.horizon", p.horizon);
            }
            E::NonperiodicWindow => {
                d.finite_positive("params.window_width", p.window_width);
                if matches!(self.surface, SurfaceSpec::RandomWaveTorus { .. }) {
                    d.finite_positive("params.half_window", p.half_window);
                    if !p.window_samples.is_power_of_two() {
                        d.push("params.window_samples", format!("{} is not a power of two", p.window_samples));
                    }
                    if let Err(e) = p.factor.check_strip(self.strip.tau_max) {
                        let path = match p.factor {
                            ConvergenceFactor::CauchyPole { .. } => "params.factor.p",
                            ConvergenceFactor::Gaussian => "params.factor",
                        };
                        d.push(path, format!("PoleTooClose: {e}"));
                    }
                    if self.strip.height() < 0.0 {
                        d.push("strip.tau", "the Plancherel check runs at tau >= 0");
                    }
                }
            }
            E::Equidistribution | E::Growth => {}
        }
    }

    fn check_symbol(&self, d: &mut Diagnostics) {
        let period = match self.geodesic {
            GeodesicSpec::Periodic { q, .. } => std::f64::consts::TAU * ((q[0] * q[0] + q[1] * q[1]) as f64).sqrt(),
            _ => return,
        };
        let (alpha, chi) = match &self.params.symbol {
            SymbolDescriptor::Multiplication { alpha } => (Some(alpha), None),
            SymbolDescriptor::FrequencyCutoff { chi } => (None, Some(chi)),
            SymbolDescriptor::Separable { alpha, chi } => (Some(alpha), Some(chi)),
        };
        if let Some(a) = alpha {
            let (lo, hi) = a.support();
            if !(lo >= 0.0 && hi <= period) {
                d.push("params.symbol.alpha", format!("support [{lo}, {hi}] leaves one period [0, {period}]"));
            }
        }
        if let Some(Cutoff::Band { lo, hi }) = chi {
            if !(*lo >= 0.0 && hi > lo && *hi <= 1.0) {
                d.push("params.symbol.chi", format!("need 0 <= lo < hi <= 1, got [{lo}, {hi}]"));
            }
        }
    }
}

/// Gaussian of the configured width centred in the Wigner interval.
pub fn wigner_window(p: &Params) -> Window {
    let centre = 0.5 * (p.interval[0] + p.interval[1]);
    Window::GaussianBump { centre, width: p.window_width, cutoff: p.window_cutoff }
}
