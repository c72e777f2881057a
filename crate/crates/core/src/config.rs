//! Plain-text `key = value` run configuration.
//!
//! Keys are grouped by dotted prefixes (`params.d`, `control.theta`, ...).
//! `#` starts a comment, lists are comma-separated, angles are in degrees.
//! Everything except a few scenario-specific keys has a default; see
//! [`RunConfig::to_config_text`] for the full key set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, RouterError};
use crate::hardware::{CoilOptions, Subspace};
use crate::optimizer::{nominal_control, Objective, OptProblem, ParamBounds, SimplexSettings};
use crate::params::{signal_bandwidth, GridSpec, PhysicalUnits, SimParams, DEFAULT_C_TILDE, DEFAULT_LENGTH};
use crate::phasematch::{PhaseRamp, Vec2};
use crate::pulses::{ControlSpec, SignalSpec};
use crate::solver::SolverOptions;
use crate::zeeman::{ZeemanConfig, MU_DIFF_OVER_HBAR};
use crate::constants::{RB87_D1_WAVELENGTH, RB87_GROUND_SPLITTING_HZ};

/// Bandwidth `c̃/w̃_∥` above which a warning is issued.
pub const BANDWIDTH_WARNING: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Absorb,
    Full,
    SweepAbs,
    SweepPhi,
    MismatchAbs,
    MismatchEm,
    Optimize,
    Feasibility,
    Coil,
    Adiabatic,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Self::Absorb,
        Self::Full,
        Self::SweepAbs,
        Self::SweepPhi,
        Self::MismatchAbs,
        Self::MismatchEm,
        Self::Optimize,
        Self::Feasibility,
        Self::Coil,
        Self::Adiabatic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Absorb => "absorb",
            Self::Full => "full",
            Self::SweepAbs => "sweep-abs",
            Self::SweepPhi => "sweep-phi",
            Self::MismatchAbs => "mismatch-abs",
            Self::MismatchEm => "mismatch-em",
            Self::Optimize => "optimize",
            Self::Feasibility => "feasibility",
            Self::Coil => "coil",
            Self::Adiabatic => "adiabatic",
        }
    }

    /// Whether the scenario runs the field solver.
    pub fn simulates(self) -> bool {
        !matches!(self, Self::Feasibility | Self::Coil | Self::Adiabatic)
    }

    /// Keys that have no default for this scenario.
    pub fn required_keys(self) -> &'static [&'static str] {
        match self {
            Self::Absorb | Self::Optimize | Self::MismatchAbs | Self::MismatchEm => &["params.d"],
            Self::Full => &["params.d", "emission.phi"],
            Self::SweepAbs => &["sweep.d"],
            Self::SweepPhi => &["params.d", "sweep.phi"],
            Self::Feasibility => &["zeeman.gradient"],
            Self::Coil => &["coil.radius", "coil.gradient", "coil.rise_time"],
            Self::Adiabatic => &["adiabatic.b1", "adiabatic.tau"],
        }
    }
}

impl FromStr for Scenario {
    type Err = RouterError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| RouterError::Config(format!("unknown scenario '{s}'")))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Offending key, when there is one.
    pub key: Option<String>,
    pub message: String,
}

impl Diagnostic {
    fn error(key: Option<&str>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, key: key.map(str::to_owned), message: message.into() }
    }

    fn warning(key: Option<&str>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, key: key.map(str::to_owned), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match &self.key {
            Some(k) => write!(f, "{tag}: {k}: {}", self.message),
            None => write!(f, "{tag}: {}", self.message),
        }
    }
}

/// Raw key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> std::result::Result<Self, Vec<Diagnostic>> {
        let mut entries = BTreeMap::new();
        let mut diags = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                diags.push(Diagnostic::error(None, format!("line {}: expected 'key = value'", n + 1)));
                continue;
            };
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_owned());
            if k.is_empty() {
                diags.push(Diagnostic::error(None, format!("line {}: empty key", n + 1)));
            } else if entries.insert(k.clone(), v).is_some() {
                diags.push(Diagnostic::error(Some(&k), format!("line {}: duplicate key", n + 1)));
            }
        }
        if diags.is_empty() {
            Ok(Self { entries })
        } else {
            Err(diags)
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_owned(), value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Typed lookups that remember which keys were consumed.
struct Reader<'a> {
    map: &'a ConfigMap,
    used: BTreeSet<String>,
    diags: Vec<Diagnostic>,
}

trait Value: Sized {
    fn parse_value(s: &str) -> Option<Self>;
}

impl Value for f64 {
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok().filter(|v: &f64| v.is_finite())
    }
}

impl Value for usize {
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Value for u32 {
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Value for u64 {
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Value for bool {
    fn parse_value(s: &str) -> Option<Self> {
        match s {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        }
    }
}

impl Value for String {
    fn parse_value(s: &str) -> Option<Self> {
        Some(s.to_owned())
    }
}

impl Value for Vec<f64> {
    fn parse_value(s: &str) -> Option<Self> {
        if s.is_empty() {
            return Some(Vec::new());
        }
        s.split(',').map(|p| f64::parse_value(p.trim())).collect()
    }
}

impl<'a> Reader<'a> {
    fn new(map: &'a ConfigMap) -> Self {
        Self { map, used: BTreeSet::new(), diags: Vec::new() }
    }

    fn opt<T: Value>(&mut self, key: &str) -> Option<T> {
        self.used.insert(key.to_owned());
        let raw = self.map.get(key)?;
        let v = T::parse_value(raw);
        if v.is_none() {
            self.diags.push(Diagnostic::error(Some(key), format!("cannot parse '{raw}'")));
        }
        v
    }

    fn or<T: Value>(&mut self, key: &str, default: T) -> T {
        self.opt(key).unwrap_or(default)
    }

    fn unknown_keys(&mut self) {
        for k in self.map.keys() {
            if !self.used.contains(k) {
                self.diags.push(Diagnostic::warning(Some(k), "unknown key ignored"));
            }
        }
    }
}

/// Physical system and grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub c_tilde: f64,
    /// Optical depth; takes precedence over `g_tilde`.
    pub d: Option<f64>,
    pub g_tilde: Option<f64>,
    pub delta_tilde: f64,
    pub grid: GridSpec,
    /// Cloud scale `L`, m.
    pub length: f64,
    /// Signal wavelength, m.
    pub wavelength: f64,
    /// Ground-state splitting, Hz.
    pub ground_splitting: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            c_tilde: DEFAULT_C_TILDE,
            d: None,
            g_tilde: None,
            delta_tilde: 0.0,
            grid: GridSpec::default(),
            length: DEFAULT_LENGTH,
            wavelength: RB87_D1_WAVELENGTH,
            ground_splitting: RB87_GROUND_SPLITTING_HZ,
        }
    }
}

impl SystemConfig {
    pub fn units(&self) -> Result<PhysicalUnits> {
        PhysicalUnits::from_c_tilde(
            self.length,
            self.c_tilde,
            2.0 * std::f64::consts::PI / self.wavelength,
            2.0 * std::f64::consts::PI * self.ground_splitting,
        )
    }

    pub fn params(&self) -> Result<SimParams> {
        self.params_at(self.d.unwrap_or(0.0))
    }

    /// Parameters at optical depth `d`, or at `g_tilde` when no depth is set.
    pub fn params_at(&self, d: f64) -> Result<SimParams> {
        let units = self.units()?;
        let grid = GridSpec::new(self.grid.nx, self.grid.ny, self.grid.x_extent, self.grid.y_extent)?;
        match (self.d, self.g_tilde) {
            (None, Some(g)) => crate::params::make_params(units, g, self.delta_tilde, grid),
            _ => SimParams::with_optical_depth(units, d, self.delta_tilde, grid),
        }
    }
}

/// Control parameters as written in the file (angle in degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    pub amplitude: f64,
    pub w_par: f64,
    pub w_perp: f64,
    pub t0: f64,
    pub x0: f64,
    pub y0: f64,
    pub theta_deg: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        let n = nominal_control(0.0);
        Self { amplitude: n.amplitude, w_par: n.w_par, w_perp: n.w_perp, t0: n.t0, x0: n.x0, y0: n.y0, theta_deg: 0.0 }
    }
}

impl ControlConfig {
    pub fn spec(&self) -> ControlSpec {
        ControlSpec {
            amplitude: self.amplitude,
            w_par: self.w_par,
            w_perp: self.w_perp,
            t0: self.t0,
            x0: self.x0,
            y0: self.y0,
            theta: self.theta_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub budget: usize,
    /// `absorption` or `full`.
    pub objective: String,
    /// Emission angle of the full-cycle objective, degrees.
    pub phi_deg: f64,
    /// Optimize the control before running a simulation scenario.
    pub before_run: bool,
    /// Samples per parameter of the robustness scan (0 disables it).
    pub robustness_samples: usize,
    /// Relative span of the robustness scan.
    pub robustness_span: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            budget: 120,
            objective: "absorption".into(),
            phi_deg: 0.0,
            before_run: false,
            robustness_samples: 0,
            robustness_span: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchConfig {
    /// Largest `|k_mis|`: units of `γ/c` for absorption, `1/L` for emission.
    pub k_max: f64,
    pub points: usize,
    /// Re-optimize the control at every point (absorption only).
    pub compensate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoilConfig {
    /// Radius, m.
    pub radius: f64,
    /// G/cm.
    pub gradient: f64,
    /// s.
    pub rise_time: f64,
    pub turns: u32,
    pub resistance: Option<f64>,
    pub max_ampere_turns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticConfig {
    pub subspace: String,
    /// Bias field, G.
    pub b0: f64,
    /// Field change over the ramp, G.
    pub b1: f64,
    /// Ramp duration of the traced sweep, s.
    pub tau: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityConfig {
    pub zeeman: ZeemanConfig,
    /// K.
    pub temperatures: Vec<f64>,
    /// 1/m.
    pub kappas: Vec<f64>,
    /// Redirection angles for the timing table, degrees.
    pub phis_deg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub system: SystemConfig,
    pub signal: SignalSpec,
    pub control: ControlConfig,
    /// Emission control; `None` reuses the absorption control.
    pub emission_control: Option<ControlConfig>,
    pub phi_deg: f64,
    /// Explicit manipulation `δ` (1/m); `None` uses the ideal one for `phi`.
    pub manipulation: Option<Vec2>,
    pub solver: SolverOptions,
    pub optimize: OptimizeConfig,
    pub sweep_d: Vec<f64>,
    pub sweep_theta_deg: Vec<f64>,
    pub sweep_phi_deg: Vec<f64>,
    pub mismatch: MismatchConfig,
    pub feasibility: FeasibilityConfig,
    pub coil: CoilConfig,
    pub adiabatic: AdiabaticConfig,
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses `text`; `scenario` overrides the file's `scenario` key and
    /// `seed` its `seed` key. Warnings are returned alongside the config.
    pub fn parse(
        text: &str,
        scenario: Option<Scenario>,
        seed: Option<u64>,
    ) -> std::result::Result<(Self, Vec<Diagnostic>), Vec<Diagnostic>> {
        let map = ConfigMap::parse(text)?;
        Self::from_map(&map, scenario, seed)
    }

    pub fn from_map(
        map: &ConfigMap,
        scenario: Option<Scenario>,
        seed: Option<u64>,
    ) -> std::result::Result<(Self, Vec<Diagnostic>), Vec<Diagnostic>> {
        let mut r = Reader::new(map);
        let file_scenario: Option<String> = r.opt("scenario");
        let scenario = match (scenario, file_scenario) {
            (Some(s), _) => s,
            (None, Some(s)) => match s.parse::<Scenario>() {
                Ok(s) => s,
                Err(e) => return Err(vec![Diagnostic::error(Some("scenario"), e.to_string())]),
            },
            (None, None) => return Err(vec![Diagnostic::error(Some("scenario"), "no scenario given")]),
        };
        for key in scenario.required_keys() {
            let present = map.contains(key) || (*key == "params.d" && map.contains("params.g_tilde"));
            if !present {
                r.diags.push(Diagnostic::error(Some(key), format!("required by scenario {scenario}")));
            }
        }
        let seed = seed.unwrap_or_else(|| r.or("seed", 0u64));

        let gd = GridSpec::default();
        let sd = SystemConfig::default();
        let system = SystemConfig {
            c_tilde: r.or("params.c_tilde", sd.c_tilde),
            d: r.opt("params.d"),
            g_tilde: r.opt("params.g_tilde"),
            delta_tilde: r.or("params.delta_tilde", sd.delta_tilde),
            grid: GridSpec {
                nx: r.or("grid.nx", gd.nx),
                ny: r.or("grid.ny", gd.ny),
                x_extent: r.or("grid.x_extent", gd.x_extent),
                y_extent: r.or("grid.y_extent", gd.y_extent),
            },
            length: r.or("units.length", sd.length),
            wavelength: r.or("units.wavelength", sd.wavelength),
            ground_splitting: r.or("units.ground_splitting", sd.ground_splitting),
        };
        let sig = SignalSpec::default();
        let signal = SignalSpec {
            w_par: r.or("signal.w_par", sig.w_par),
            w_perp: r.or("signal.w_perp", sig.w_perp),
            arrival_t: r.or("signal.arrival_t", sig.arrival_t),
            k_mis: r.or("signal.k_mis", sig.k_mis),
        };
        let control = read_control(&mut r, "control", ControlConfig::default());
        let emission_keys = ["amplitude", "w_par", "w_perp", "t0", "x0", "y0", "theta"];
        let emission_control = emission_keys
            .iter()
            .any(|k| map.contains(&format!("emission.{k}")))
            .then(|| read_control(&mut r, "emission", control));
        let phi_deg = r.or("emission.phi", 0.0);
        let manipulation = match (r.opt::<f64>("manipulation.delta_x"), r.opt::<f64>("manipulation.delta_y")) {
            (None, None) => None,
            (x, y) => Some(Vec2::new(x.unwrap_or(0.0), y.unwrap_or(0.0))),
        };
        let so = SolverOptions::default();
        let solver = SolverOptions {
            decay: r.or("solver.decay", so.decay),
            record_every: r.or("solver.record_every", so.record_every),
        };
        let od = OptimizeConfig::default();
        let optimize = OptimizeConfig {
            budget: r.or("optimize.budget", od.budget),
            objective: r.or("optimize.objective", od.objective),
            phi_deg: r.or("optimize.phi", od.phi_deg),
            before_run: r.or("optimize.before_run", od.before_run),
            robustness_samples: r.or("optimize.robustness_samples", od.robustness_samples),
            robustness_span: r.or("optimize.robustness_span", od.robustness_span),
        };
        let sweep_d = r.or("sweep.d", Vec::new());
        let sweep_theta_deg = r.or("sweep.theta", vec![0.0]);
        let sweep_phi_deg = r.or("sweep.phi", Vec::new());
        let default_k = if scenario == Scenario::MismatchEm { 6.0 } else { 24.0 };
        let mismatch = MismatchConfig {
            k_max: r.or("mismatch.k_max", default_k),
            points: r.or("mismatch.points", 9),
            compensate: r.or("mismatch.compensate", false),
        };
        let zd = ZeemanConfig::default();
        let feasibility = FeasibilityConfig {
            zeeman: ZeemanConfig {
                gradient: r.or("zeeman.gradient", zd.gradient),
                mu_diff_over_hbar: r.or("zeeman.mu_diff", MU_DIFF_OVER_HBAR),
                t_rise: r.or("zeeman.t_rise", zd.t_rise),
            },
            temperatures: r.or("zeeman.temperatures", vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2]),
            kappas: r.or("zeeman.kappas", vec![1.4e2, 1e4, 1e6, 1.6e7]),
            phis_deg: r.or("zeeman.phi", vec![0.0, 10.0, 45.0, 90.0, 180.0]),
        };
        let coil = CoilConfig {
            radius: r.or("coil.radius", 0.01),
            gradient: r.or("coil.gradient", 50.0),
            rise_time: r.or("coil.rise_time", 5e-6),
            turns: r.or("coil.turns", 63),
            resistance: r.opt("coil.resistance"),
            max_ampere_turns: r.opt("coil.max_ampere_turns"),
        };
        let adiabatic = AdiabaticConfig {
            subspace: r.or("adiabatic.subspace", "H1".to_owned()),
            b0: r.or("adiabatic.b0", 0.0),
            b1: r.or("adiabatic.b1", 500.0),
            tau: r.or("adiabatic.tau", 1e-6),
            tau_min: r.or("adiabatic.tau_min", 1e-9),
            tau_max: r.or("adiabatic.tau_max", 1e-6),
            points: r.or("adiabatic.points", 13),
        };
        r.unknown_keys();
        let cfg = Self {
            scenario,
            seed,
            system,
            signal,
            control,
            emission_control,
            phi_deg,
            manipulation,
            solver,
            optimize,
            sweep_d,
            sweep_theta_deg,
            sweep_phi_deg,
            mismatch,
            feasibility,
            coil,
            adiabatic,
        };
        let mut diags = r.diags;
        if !diags.iter().any(Diagnostic::is_error) {
            diags.extend(cfg.validate());
        }
        if diags.iter().any(Diagnostic::is_error) {
            Err(diags)
        } else {
            Ok((cfg, diags))
        }
    }

    /// Static consistency checks. Never runs a simulation.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let s = &self.system;
        if let Err(e) = s.units() {
            out.push(Diagnostic::error(Some("units"), e.to_string()));
        }
        if s.d.is_some_and(|d| d < 0.0) {
            out.push(Diagnostic::error(Some("params.d"), "optical depth must be >= 0"));
        }
        if s.g_tilde.is_some_and(|g| g < 0.0) {
            out.push(Diagnostic::error(Some("params.g_tilde"), "coupling must be >= 0"));
        }
        if self.scenario == Scenario::SweepAbs && self.sweep_d.is_empty() {
            out.push(Diagnostic::error(Some("sweep.d"), "empty list"));
        }
        if self.scenario == Scenario::SweepPhi && self.sweep_phi_deg.is_empty() {
            out.push(Diagnostic::error(Some("sweep.phi"), "empty list"));
        }
        if self.sweep_d.iter().any(|&d| d < 0.0) {
            out.push(Diagnostic::error(Some("sweep.d"), "optical depths must be >= 0"));
        }
        let g = s.grid;
        match GridSpec::new(g.nx, g.ny, g.x_extent, g.y_extent) {
            Err(e) => out.push(Diagnostic::error(Some("grid"), e.to_string())),
            Ok(grid) => {
                let diameter = crate::params::DensityProfile::unit_sphere().diameter();
                if grid.x_extent < diameter || grid.y_extent < diameter {
                    out.push(Diagnostic::error(
                        Some("grid"),
                        format!("domain {}x{} does not contain the cloud (diameter {diameter:.4})", grid.x_extent, grid.y_extent),
                    ));
                }
                if 3.0 * self.signal.w_perp > 0.5 * grid.y_extent {
                    out.push(Diagnostic::warning(
                        Some("signal.w_perp"),
                        "signal profile is truncated by the transverse domain edge",
                    ));
                }
                if self.signal.w_perp < 2.0 * grid.dy() {
                    out.push(Diagnostic::warning(
                        Some("signal.w_perp"),
                        format!("signal width is resolved by fewer than 2 cells (dy = {:.4})", grid.dy()),
                    ));
                }
            }
        }
        if let Err(e) = self.signal.validate() {
            out.push(Diagnostic::error(Some("signal"), e.to_string()));
        }
        if let Err(e) = self.control.spec().validate() {
            out.push(Diagnostic::error(Some("control"), e.to_string()));
        }
        if let Some(c) = &self.emission_control {
            if let Err(e) = c.spec().validate() {
                out.push(Diagnostic::error(Some("emission"), e.to_string()));
            }
        }
        match signal_bandwidth(s.c_tilde, self.signal.w_par) {
            Ok(bw) if bw > BANDWIDTH_WARNING => out.push(Diagnostic::warning(
                Some("signal.w_par"),
                format!("signal bandwidth c_tilde/w_par = {bw:.3} exceeds {BANDWIDTH_WARNING}; storage efficiency will suffer"),
            )),
            Ok(_) => {}
            Err(e) => out.push(Diagnostic::error(Some("signal.w_par"), e.to_string())),
        }
        if self.solver.record_every == 0 {
            out.push(Diagnostic::error(Some("solver.record_every"), "must be at least 1"));
        }
        if !matches!(self.optimize.objective.as_str(), "absorption" | "full") {
            out.push(Diagnostic::error(Some("optimize.objective"), "expected 'absorption' or 'full'"));
        }
        if self.optimize.budget == 0 {
            out.push(Diagnostic::error(Some("optimize.budget"), "must be at least 1"));
        }
        if self.mismatch.points < 3 || !(self.mismatch.k_max > 0.0) {
            out.push(Diagnostic::error(Some("mismatch"), "need k_max > 0 and at least 3 points"));
        }
        if let Err(e) = self.feasibility.zeeman.validate() {
            out.push(Diagnostic::error(Some("zeeman"), e.to_string()));
        }
        if self.feasibility.temperatures.iter().chain(&self.feasibility.kappas).any(|&v| v < 0.0) {
            out.push(Diagnostic::error(Some("zeeman"), "temperatures and wavenumbers must be >= 0"));
        }
        let c = &self.coil;
        if !(c.radius > 0.0) || !(c.rise_time > 0.0) || c.turns == 0 || !(c.gradient >= 0.0) {
            out.push(Diagnostic::error(Some("coil"), "need radius > 0, rise_time > 0, turns > 0, gradient >= 0"));
        }
        let a = &self.adiabatic;
        if let Err(e) = Subspace::parse(&a.subspace) {
            out.push(Diagnostic::error(Some("adiabatic.subspace"), e.to_string()));
        }
        if !(a.tau > 0.0) || !(a.tau_min > 0.0) || !(a.tau_max >= a.tau_min) || a.points == 0 {
            out.push(Diagnostic::error(Some("adiabatic"), "need 0 < tau_min <= tau_max, tau > 0, points > 0"));
        }
        out
    }

    pub fn params(&self) -> Result<SimParams> {
        self.system.params()
    }

    pub fn control_spec(&self) -> ControlSpec {
        self.control.spec()
    }

    pub fn emission_control_spec(&self) -> ControlSpec {
        self.emission_control.unwrap_or(self.control).spec()
    }

    pub fn phi(&self) -> f64 {
        self.phi_deg.to_radians()
    }

    pub fn manipulation_ramp(&self, params: &SimParams) -> PhaseRamp {
        let u = params.units;
        match self.manipulation {
            Some(d) => PhaseRamp::from_si(d, u.length),
            None => PhaseRamp::from_si(crate::phasematch::delta_for_angle(self.phi(), u.k_s_mag), u.length),
        }
    }

    /// Optimization problem for `params` seeded from the configured control.
    pub fn opt_problem(&self, params: SimParams) -> OptProblem {
        let control = self.control_spec();
        let objective = match self.optimize.objective.as_str() {
            "full" => Objective::FullCycle { phi: self.optimize.phi_deg.to_radians() },
            _ => Objective::Absorption,
        };
        OptProblem {
            params,
            signal: self.signal,
            theta: control.theta,
            objective,
            bounds: ParamBounds::for_signal(&self.signal, params.c_tilde),
            budget: self.optimize.budget,
            seed: self.seed,
            start: control,
            settings: SimplexSettings::default(),
        }
    }

    pub fn coil_options(&self) -> CoilOptions {
        CoilOptions { resistance: self.coil.resistance, max_ampere_turns: self.coil.max_ampere_turns }
    }

    /// Every key with its resolved value; parsing the result reproduces `self`.
    pub fn to_config_text(&self) -> String {
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| lines.push((k.to_owned(), v));
        let s = &self.system;
        put("scenario", self.scenario.name().into());
        put("seed", self.seed.to_string());
        put("params.c_tilde", s.c_tilde.to_string());
        if let Some(d) = s.d {
            put("params.d", d.to_string());
        }
        if let Some(g) = s.g_tilde {
            put("params.g_tilde", g.to_string());
        }
        put("params.delta_tilde", s.delta_tilde.to_string());
        put("grid.nx", s.grid.nx.to_string());
        put("grid.ny", s.grid.ny.to_string());
        put("grid.x_extent", s.grid.x_extent.to_string());
        put("grid.y_extent", s.grid.y_extent.to_string());
        put("units.length", s.length.to_string());
        put("units.wavelength", s.wavelength.to_string());
        put("units.ground_splitting", s.ground_splitting.to_string());
        put("signal.w_par", self.signal.w_par.to_string());
        put("signal.w_perp", self.signal.w_perp.to_string());
        put("signal.arrival_t", self.signal.arrival_t.to_string());
        put("signal.k_mis", self.signal.k_mis.to_string());
        write_control(&mut put, "control", &self.control);
        if let Some(c) = &self.emission_control {
            write_control(&mut put, "emission", c);
        }
        put("emission.phi", self.phi_deg.to_string());
        if let Some(d) = self.manipulation {
            put("manipulation.delta_x", d.x.to_string());
            put("manipulation.delta_y", d.y.to_string());
        }
        put("solver.decay", self.solver.decay.to_string());
        put("solver.record_every", self.solver.record_every.to_string());
        let o = &self.optimize;
        put("optimize.budget", o.budget.to_string());
        put("optimize.objective", o.objective.clone());
        put("optimize.phi", o.phi_deg.to_string());
        put("optimize.before_run", o.before_run.to_string());
        put("optimize.robustness_samples", o.robustness_samples.to_string());
        put("optimize.robustness_span", o.robustness_span.to_string());
        if !self.sweep_d.is_empty() {
            put("sweep.d", fmt_list(&self.sweep_d));
        }
        put("sweep.theta", fmt_list(&self.sweep_theta_deg));
        if !self.sweep_phi_deg.is_empty() {
            put("sweep.phi", fmt_list(&self.sweep_phi_deg));
        }
        put("mismatch.k_max", self.mismatch.k_max.to_string());
        put("mismatch.points", self.mismatch.points.to_string());
        put("mismatch.compensate", self.mismatch.compensate.to_string());
        let f = &self.feasibility;
        put("zeeman.gradient", f.zeeman.gradient.to_string());
        put("zeeman.mu_diff", f.zeeman.mu_diff_over_hbar.to_string());
        put("zeeman.t_rise", f.zeeman.t_rise.to_string());
        put("zeeman.temperatures", fmt_list(&f.temperatures));
        put("zeeman.kappas", fmt_list(&f.kappas));
        put("zeeman.phi", fmt_list(&f.phis_deg));
        let c = &self.coil;
        put("coil.radius", c.radius.to_string());
        put("coil.gradient", c.gradient.to_string());
        put("coil.rise_time", c.rise_time.to_string());
        put("coil.turns", c.turns.to_string());
        if let Some(r) = c.resistance {
            put("coil.resistance", r.to_string());
        }
        if let Some(m) = c.max_ampere_turns {
            put("coil.max_ampere_turns", m.to_string());
        }
        let a = &self.adiabatic;
        put("adiabatic.subspace", a.subspace.clone());
        put("adiabatic.b0", a.b0.to_string());
        put("adiabatic.b1", a.b1.to_string());
        put("adiabatic.tau", a.tau.to_string());
        put("adiabatic.tau_min", a.tau_min.to_string());
        put("adiabatic.tau_max", a.tau_max.to_string());
        put("adiabatic.points", a.points.to_string());
        lines.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn read_control(r: &mut Reader<'_>, prefix: &str, base: ControlConfig) -> ControlConfig {
    let key = |name: &str| format!("{prefix}.{name}");
    ControlConfig {
        amplitude: r.or(&key("amplitude"), base.amplitude),
        w_par: r.or(&key("w_par"), base.w_par),
        w_perp: r.or(&key("w_perp"), base.w_perp),
        t0: r.or(&key("t0"), base.t0),
        x0: r.or(&key("x0"), base.x0),
        y0: r.or(&key("y0"), base.y0),
        theta_deg: r.or(&key("theta"), base.theta_deg),
    }
}

fn write_control(put: &mut impl FnMut(&str, String), prefix: &str, c: &ControlConfig) {
    put(&format!("{prefix}.amplitude"), c.amplitude.to_string());
    put(&format!("{prefix}.w_par"), c.w_par.to_string());
    put(&format!("{prefix}.w_perp"), c.w_perp.to_string());
    put(&format!("{prefix}.t0"), c.t0.to_string());
    put(&format!("{prefix}.x0"), c.x0.to_string());
    put(&format!("{prefix}.y0"), c.y0.to_string());
    put(&format!("{prefix}.theta"), c.theta_deg.to_string());
}
