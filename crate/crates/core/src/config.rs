//! Flat key/value experiment configuration.
//!
//! A config document is a TOML file with top-level keys only:
//!
//! ```toml
//! preset = "conservation-s2"   # optional, supplies defaults
//! target = "s2"
//! model = "dispersive"
//! a = 1.0
//! b = 0.5
//! epsilon = 0.0
//! n = 256
//! L = 6.283185307179586
//! t_end = 1.0
//! initial = "perturbed-circle"
//! k = 1
//! amp = 0.05
//! mode = 3
//! ```
//!
//! Unknown keys are rejected with their line number. Keys set in the
//! document override the preset; command-line overrides win over both.

use serde::Deserialize;
use std::f64::consts::TAU;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::geometry::{TargetKind, TargetManifold};
use crate::initial::InitialData;
use crate::pde::{FlowCoefficients, Model};
use crate::solver::{SolverConfig, TimeStep, DEFAULT_BLOWUP_FACTOR, DEFAULT_CFL};

/// Named experiment regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Energy conservation on the round sphere with `b = aK/2`.
    ConservationS2,
    /// Gauge identities and the `∇J` pairing on the non-Kähler 6-sphere.
    GaugeS6,
    /// Terminal-state gaps along a decreasing ε schedule.
    EpsilonContinuation,
    /// The integrable vortex-filament model, `b = a/2` on the sphere.
    FukumotoMiyazaki,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::ConservationS2, Preset::GaugeS6, Preset::EpsilonContinuation, Preset::FukumotoMiyazaki];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::ConservationS2 => "conservation-s2",
            Preset::GaugeS6 => "gauge-s6",
            Preset::EpsilonContinuation => "epsilon-continuation",
            Preset::FukumotoMiyazaki => "fukumoto-miyazaki",
        }
    }

    /// The preset's defaults as a flat document.
    pub fn document(&self) -> &'static str {
        match self {
            Preset::ConservationS2 => {
                r#"
target = "s2"
model = "dispersive"
a = 1.0
b = 0.5
epsilon = 0.0
n = 256
t_end = 1.0
diag_order = 2
track_energy = true
initial = "perturbed-circle"
k = 1
amp = 0.05
mode = 3
checks = ["constraint", "conservation", "gauge-bounds"]
"#
            }
            Preset::GaugeS6 => {
                r#"
target = "s6"
model = "dispersive"
a = 1.0
b = 0.5
epsilon = 0.0
n = 256
t_end = 0.01
diag_order = 4
initial = "random-analytic"
seed = 2024
max_frequency = 2
checks = ["constraint", "appendix", "pairing", "gauge-bounds"]
"#
            }
            Preset::EpsilonContinuation => {
                r#"
target = "s2"
model = "dispersive"
a = 1.0
b = 0.5
epsilon = 1e-2
epsilon_schedule = [1e-2, 1e-3, 1e-4]
n = 128
t_end = 0.2
initial = "perturbed-circle"
k = 1
amp = 0.05
mode = 3
checks = ["constraint", "continuation"]
"#
            }
            Preset::FukumotoMiyazaki => {
                r#"
target = "s2"
model = "fukumoto-miyazaki"
a = 1.0
epsilon = 0.0
n = 128
t_end = 0.1
diag_order = 2
track_energy = true
initial = "perturbed-circle"
k = 1
amp = 0.05
mode = 3
checks = ["constraint", "fm-equivalence", "conservation"]
"#
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            Error::Validation(format!(
                "unknown preset `{s}` (expected conservation-s2, gauge-s6, epsilon-continuation, fukumoto-miyazaki)"
            ))
        })
    }
}

/// Invariant checks that can be attached to a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// Max distance from the target over all snapshots ≤ 1e−8.
    Constraint,
    /// Intrinsic vs extrinsic right-hand side on the initial curve ≤ 1e−9.
    Equivalence,
    /// Relative drift of ‖uₓ‖² (and E when tracked) ≤ 1e−5.
    Conservation,
    /// Energy-identity residual ≤ 5 % and ‖uₓ‖² nonincreasing.
    Dissipation,
    /// `max|e^{±K}|` bound and the N_m/H^m sandwich on every snapshot.
    GaugeBounds,
    /// Gauge commutation identities ≤ 1e−8 on the first and last snapshot.
    Appendix,
    /// L² anti-symmetry of `∇ₓJ` ≤ 1e−8 on the first and last snapshot.
    Pairing,
    /// Strictly decreasing terminal gaps along the ε schedule.
    Continuation,
    /// Vortex-filament form vs the general flow at `b = a/2` ≤ 1e−10.
    FmEquivalence,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::Constraint,
        Check::Equivalence,
        Check::Conservation,
        Check::Dissipation,
        Check::GaugeBounds,
        Check::Appendix,
        Check::Pairing,
        Check::Continuation,
        Check::FmEquivalence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::Constraint => "constraint",
            Check::Equivalence => "equivalence",
            Check::Conservation => "conservation",
            Check::Dissipation => "dissipation",
            Check::GaugeBounds => "gauge-bounds",
            Check::Appendix => "appendix",
            Check::Pairing => "pairing",
            Check::Continuation => "continuation",
            Check::FmEquivalence => "fm-equivalence",
        }
    }

}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown check `{s}`")))
    }
}

/// A fully resolved, validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub target: TargetManifold,
    pub grid: Grid,
    pub solver: SolverConfig,
    pub initial: InitialData,
    pub output_dir: PathBuf,
    pub checks: Vec<Check>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct RawConfig {
    preset: Option<String>,
    target: Option<String>,
    model: Option<String>,
    a: Option<f64>,
    b: Option<f64>,
    epsilon: Option<f64>,
    n: Option<usize>,
    #[serde(rename = "L")]
    length: Option<f64>,
    t_end: Option<f64>,
    dt: Option<toml::Value>,
    cfl: Option<f64>,
    projection: Option<String>,
    snapshot_stride: Option<usize>,
    epsilon_schedule: Option<Vec<f64>>,
    blowup_ceiling: Option<f64>,
    diag_order: Option<usize>,
    track_energy: Option<bool>,
    dealias: Option<bool>,
    initial: Option<String>,
    point: Option<Vec<f64>>,
    k: Option<u32>,
    amp: Option<f64>,
    mode: Option<u32>,
    center: Option<f64>,
    width: Option<f64>,
    height: Option<f64>,
    k1: Option<i32>,
    k2: Option<i32>,
    plane: Option<[usize; 2]>,
    seed: Option<u64>,
    max_frequency: Option<u32>,
    output_dir: Option<String>,
    checks: Option<Vec<String>>,
}

const FAMILY_KEYS: [&str; 13] =
    ["point", "k", "amp", "mode", "center", "width", "height", "k1", "k2", "plane", "seed", "max_frequency", "initial"];

fn family_keys(family: &str) -> Option<&'static [&'static str]> {
    Some(match family {
        "constant" => &["point"],
        "great-circle" => &["k"],
        "perturbed-circle" => &["k", "amp", "mode"],
        "bump" => &["center", "width", "height"],
        "torus-winding" => &["k1", "k2"],
        "s6-circle" => &["plane"],
        "random-analytic" => &["seed", "max_frequency"],
        _ => return None,
    })
}

/// 1-based line of byte offset `at` in `text`.
fn line_at(text: &str, at: usize) -> usize {
    text[..at.min(text.len())].bytes().filter(|&c| c == b'\n').count() + 1
}

/// Key assigned on the given line, if any.
fn key_on_line(text: &str, line: usize) -> Option<String> {
    let l = text.lines().nth(line - 1)?;
    let (k, _) = l.split_once('=')?;
    let k = k.trim().trim_matches('"');
    (!k.is_empty()).then(|| k.to_string())
}

/// Line where `key` is assigned.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| l.split_once('=').is_some_and(|(k, _)| k.trim().trim_matches('"') == key)).map(|i| i + 1)
}

fn parse_error(text: &str, e: toml::de::Error) -> Error {
    let line = e.span().map(|s| line_at(text, s.start));
    let key = line.and_then(|l| key_on_line(text, l));
    Error::Parse { line, key, message: e.message().trim().to_string() }
}

fn key_error(text: &str, key: &str, message: impl Into<String>) -> Error {
    Error::Parse { line: line_of_key(text, key), key: Some(key.to_string()), message: message.into() }
}

fn parse_table(text: &str) -> Result<toml::Table> {
    // Typed pass first: it reports unknown keys and type errors with spans.
    toml::from_str::<RawConfig>(text).map_err(|e| parse_error(text, e))?;
    text.parse::<toml::Table>().map_err(|e| parse_error(text, e))
}

/// Parses a config document with default resolution and validation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, &[])
}

/// Parses `text` and applies `overrides` (key, value) on top.
pub fn parse_config_with(text: &str, overrides: &[(String, toml::Value)]) -> Result<ExperimentConfig> {
    let user = parse_table(text)?;
    let mut overridden = user.clone();
    for (k, v) in overrides {
        overridden.insert(k.clone(), v.clone());
    }
    let over_text = toml::to_string(&overridden).map_err(|e| Error::Validation(e.to_string()))?;
    toml::from_str::<RawConfig>(&over_text).map_err(|e| {
        let err = parse_error(&over_text, e);
        match err {
            Error::Parse { key, message, .. } => Error::Parse { line: None, key, message },
            other => other,
        }
    })?;

    let preset = match overridden.get("preset") {
        Some(toml::Value::String(s)) => Some(s.parse::<Preset>().map_err(|e| key_error(text, "preset", e.to_string()))?),
        _ => None,
    };
    let mut merged = match preset {
        Some(p) => p.document().parse::<toml::Table>().expect("preset documents are valid"),
        None => toml::Table::new(),
    };
    // The initial-data family parameters travel together: a document that
    // names its own family drops the preset's parameters.
    if overridden.contains_key("initial") {
        merged.retain(|k, _| !FAMILY_KEYS.contains(&k));
    }
    for (k, v) in &overridden {
        merged.insert(k.clone(), v.clone());
    }
    let raw: RawConfig =
        toml::from_str(&toml::to_string(&merged).map_err(|e| Error::Validation(e.to_string()))?).map_err(|e| {
            Error::Parse { line: None, key: None, message: e.message().to_string() }
        })?;
    resolve(raw, preset, &overridden, text)
}

fn resolve(raw: RawConfig, preset: Option<Preset>, user: &toml::Table, text: &str) -> Result<ExperimentConfig> {
    let mut target = TargetManifold::from_name(raw.target.as_deref().unwrap_or("s2"))
        .map_err(|e| key_error(text, "target", e.to_string()))?;
    let model: Model = raw.model.as_deref().unwrap_or("dispersive").parse().map_err(|e: Error| key_error(text, "model", e.to_string()))?;
    let a = raw.a.unwrap_or(1.0);
    let mut b = raw.b.unwrap_or(0.5);
    let epsilon = raw.epsilon.unwrap_or(0.0);

    if preset == Some(Preset::FukumotoMiyazaki) {
        if target.kind() != TargetKind::Sphere2 {
            return Err(Error::Validation("preset fukumoto-miyazaki requires target s2".into()));
        }
        if user.contains_key("b") && b != a / 2.0 {
            return Err(Error::Validation(format!(
                "preset fukumoto-miyazaki requires b = a/2 = {} (integrability condition), got b = {b}",
                a / 2.0
            )));
        }
        b = a / 2.0;
        target = TargetManifold::sphere2();
    }

    let coefficients = FlowCoefficients::new(a, b, epsilon);
    let grid = Grid::new(raw.n.unwrap_or(256), raw.length.unwrap_or(TAU))?;
    let mut solver = SolverConfig::new(model, coefficients, raw.t_end.unwrap_or(1.0));
    solver.dt = match &raw.dt {
        None => TimeStep::Auto,
        Some(toml::Value::String(s)) if s == "auto" => TimeStep::Auto,
        Some(toml::Value::Float(x)) => TimeStep::Fixed(*x),
        Some(toml::Value::Integer(i)) => TimeStep::Fixed(*i as f64),
        Some(_) => return Err(key_error(text, "dt", "expected a number or \"auto\"")),
    };
    solver.cfl = raw.cfl.unwrap_or(DEFAULT_CFL);
    if let Some(p) = &raw.projection {
        solver.projection = p.parse().map_err(|e: Error| key_error(text, "projection", e.to_string()))?;
    }
    solver.snapshot_stride = raw.snapshot_stride;
    solver.epsilon_schedule = raw.epsilon_schedule.clone();
    solver.blowup_factor = raw.blowup_ceiling.unwrap_or(DEFAULT_BLOWUP_FACTOR);
    solver.track_energy = raw.track_energy.unwrap_or(false);
    solver.dealias = raw.dealias.unwrap_or(true);
    let kahler = target.is_kahler();
    solver.diag_order = raw.diag_order.unwrap_or(4);

    if !kahler {
        if solver.track_energy {
            return Err(Error::Validation(format!(
                "track_energy: E(u) is conserved only on constant-curvature Kähler surfaces; target `{}` is not Kähler",
                target.name()
            )));
        }
        if solver.diag_order < 4 {
            return Err(Error::Validation(format!(
                "diag_order = {}: on the non-Kähler target `{}` the gauged energy needs m ≥ 4",
                solver.diag_order,
                target.name()
            )));
        }
    }
    solver.validate(target.kind())?;

    let initial = resolve_initial(&raw, user, text)?;

    let mut checks = Vec::new();
    match &raw.checks {
        Some(names) => {
            for name in names {
                let c: Check = name.parse().map_err(|e: Error| key_error(text, "checks", e.to_string()))?;
                if !checks.contains(&c) {
                    checks.push(c);
                }
            }
        }
        None => {
            checks.push(Check::Constraint);
            if gauge_defined(&solver) {
                checks.push(Check::GaugeBounds);
            }
            if solver.track_energy {
                checks.push(Check::Conservation);
            }
            if solver.epsilon_schedule.is_some() {
                checks.push(Check::Continuation);
            }
        }
    }
    for c in &checks {
        check_applicable(*c, target, &solver)?;
    }

    Ok(ExperimentConfig {
        preset,
        target,
        grid,
        solver,
        initial,
        output_dir: PathBuf::from(raw.output_dir.as_deref().unwrap_or("out")),
        checks,
    })
}

fn gauge_defined(solver: &SolverConfig) -> bool {
    solver.model != Model::Darios && solver.coefficients.a != 0.0
}

fn check_applicable(c: Check, target: TargetManifold, solver: &SolverConfig) -> Result<()> {
    let fail = |why: &str| Err(Error::Validation(format!("check `{c}` {why}")));
    match c {
        Check::GaugeBounds | Check::Appendix | Check::Pairing if !gauge_defined(solver) => {
            fail("needs the gauge K = −(1/3a)∫g(uₓ,uₓ), undefined for a = 0 and the darios model")
        }
        Check::Continuation if solver.epsilon_schedule.is_none() => fail("needs epsilon_schedule"),
        Check::FmEquivalence if target.kind() != TargetKind::Sphere2 => fail("is defined on s2 only"),
        Check::Dissipation if solver.coefficients.epsilon == 0.0 && solver.epsilon_schedule.is_none() => {
            fail("needs epsilon > 0")
        }
        _ => Ok(()),
    }
}

fn resolve_initial(raw: &RawConfig, user: &toml::Table, text: &str) -> Result<InitialData> {
    let family = raw.initial.as_deref().unwrap_or("perturbed-circle");
    let allowed = family_keys(family).ok_or_else(|| {
        key_error(
            text,
            "initial",
            format!(
                "unknown family `{family}` (expected constant, great-circle, perturbed-circle, bump, torus-winding, s6-circle, random-analytic)"
            ),
        )
    })?;
    for key in FAMILY_KEYS.iter().filter(|k| **k != "initial") {
        if user.contains_key(*key) && !allowed.contains(key) {
            return Err(key_error(text, key, format!("`{key}` is not a parameter of family `{family}`")));
        }
    }
    Ok(match family {
        "constant" => InitialData::Constant { point: raw.point.clone() },
        "great-circle" => InitialData::GreatCircle { k: raw.k.unwrap_or(1) },
        "perturbed-circle" => InitialData::PerturbedCircle {
            k: raw.k.unwrap_or(1),
            amp: raw.amp.unwrap_or(0.05),
            mode: raw.mode.unwrap_or(3),
        },
        "bump" => InitialData::Bump {
            center: raw.center.unwrap_or(0.0),
            width: raw.width.unwrap_or(0.5),
            height: raw.height.unwrap_or(0.5),
        },
        "torus-winding" => InitialData::TorusWinding { k1: raw.k1.unwrap_or(1), k2: raw.k2.unwrap_or(1) },
        "s6-circle" => InitialData::S6Circle { plane: raw.plane.unwrap_or([0, 1]) },
        _ => InitialData::RandomAnalytic { seed: raw.seed.unwrap_or(0), max_frequency: raw.max_frequency.unwrap_or(1) },
    })
}

fn float(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn float_list(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|x| float(*x)).collect::<Vec<_>>().join(", "))
}

impl ExperimentConfig {
    /// The resolved config as a flat document that parses back to `self`.
    pub fn to_document(&self) -> String {
        let s = &self.solver;
        let c = &s.coefficients;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(p) = self.preset {
            put("preset", format!("\"{p}\""));
        }
        put("target", format!("\"{}\"", self.target.name()));
        put("model", format!("\"{}\"", s.model));
        put("a", float(c.a));
        put("b", float(c.b));
        put("epsilon", float(c.epsilon));
        put("n", self.grid.n().to_string());
        put("L", float(self.grid.length()));
        put("t_end", float(s.t_end));
        put(
            "dt",
            match s.dt {
                TimeStep::Auto => "\"auto\"".into(),
                TimeStep::Fixed(dt) => float(dt),
            },
        );
        put("cfl", float(s.cfl));
        put("projection", format!("\"{}\"", s.projection));
        if let Some(k) = s.snapshot_stride {
            put("snapshot_stride", k.to_string());
        }
        if let Some(e) = &s.epsilon_schedule {
            put("epsilon_schedule", float_list(e));
        }
        put("blowup_ceiling", float(s.blowup_factor));
        put("diag_order", s.diag_order.to_string());
        put("track_energy", s.track_energy.to_string());
        put("dealias", s.dealias.to_string());
        put("initial", format!("\"{}\"", self.initial.name()));
        match &self.initial {
            InitialData::Constant { point } => {
                if let Some(p) = point {
                    put("point", float_list(p));
                }
            }
            InitialData::GreatCircle { k } => put("k", k.to_string()),
            InitialData::PerturbedCircle { k, amp, mode } => {
                put("k", k.to_string());
                put("amp", float(*amp));
                put("mode", mode.to_string());
            }
            InitialData::Bump { center, width, height } => {
                put("center", float(*center));
                put("width", float(*width));
                put("height", float(*height));
            }
            InitialData::TorusWinding { k1, k2 } => {
                put("k1", k1.to_string());
                put("k2", k2.to_string());
            }
            InitialData::S6Circle { plane } => put("plane", format!("[{}, {}]", plane[0], plane[1])),
            InitialData::RandomAnalytic { seed, max_frequency } => {
                put("seed", seed.to_string());
                put("max_frequency", max_frequency.to_string());
            }
        }
        put("output_dir", format!("{:?}", self.output_dir.display().to_string()));
        let checks: Vec<String> = self.checks.iter().map(|c| format!("\"{c}\"")).collect();
        put("checks", format!("[{}]", checks.join(", ")));
        out
    }
}

/// Parses a comma-separated list of floats such as `"1e-2,1e-3,1e-4"`.
pub fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Validation(format!("`{t}` is not a number"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Projection;

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config("target = \"s2\"\nmodel = \"darios\"\nn = 256\nL = 1.0\nt_end = 0.1\n").unwrap();
        assert_eq!(cfg.grid.n(), 256);
        assert_eq!(cfg.grid.length(), 1.0);
        assert_eq!(cfg.solver.model, Model::Darios);
        assert_eq!(cfg.solver.dt, TimeStep::Auto);
        assert_eq!(cfg.solver.projection, Projection::EveryStep);
        assert_eq!(cfg.initial, InitialData::PerturbedCircle { k: 1, amp: 0.05, mode: 3 });
        assert_eq!(cfg.checks, vec![Check::Constraint]);
        let cfg = parse_config("n = 64\n").unwrap();
        assert_eq!(cfg.checks, vec![Check::Constraint, Check::GaugeBounds]);
        assert!(parse_config("model = \"darios\"\nchecks = [\"appendix\"]\n").is_err());
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = parse_config("target = \"s2\"\nepsilonn = 0.1\n").unwrap_err();
        match err {
            Error::Parse { line, key, .. } => {
                assert_eq!(line, Some(2));
                assert_eq!(key.as_deref(), Some("epsilonn"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn type_error_reports_line() {
        let err = parse_config("n = 64\nt_end = \"soon\"\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: Some(2), .. }), "{err:?}");
    }

    #[test]
    fn a_and_epsilon_both_zero_is_rejected() {
        let err = parse_config("a = 0\nepsilon = 0\n").unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("a ≠ 0")), "{err}");
    }

    #[test]
    fn kahler_only_settings_rejected_on_s6() {
        let err = parse_config("target = \"s6\"\ntrack_energy = true\n").unwrap_err();
        assert!(err.to_string().contains("Kähler"), "{err}");
        let err = parse_config("target = \"s6\"\ndiag_order = 2\n").unwrap_err();
        assert!(err.to_string().contains("m ≥ 4"), "{err}");
    }

    #[test]
    fn fukumoto_miyazaki_preset_forces_b_and_target() {
        let cfg = parse_config("preset = \"fukumoto-miyazaki\"\na = 2.0\n").unwrap();
        assert_eq!(cfg.solver.coefficients.b, 1.0);
        assert_eq!(cfg.target, TargetManifold::sphere2());
        assert!(parse_config("preset = \"fukumoto-miyazaki\"\nb = 0.3\n").is_err());
        assert!(parse_config("preset = \"fukumoto-miyazaki\"\ntarget = \"s6\"\n").is_err());
    }

    #[test]
    fn family_parameters_are_checked() {
        let err = parse_config("initial = \"great-circle\"\namp = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: Some(2), key: Some(ref k), .. } if k == "amp"), "{err:?}");
        let cfg = parse_config("preset = \"gauge-s6\"\ninitial = \"s6-circle\"\nplane = [2, 5]\n").unwrap();
        assert_eq!(cfg.initial, InitialData::S6Circle { plane: [2, 5] });
    }

    #[test]
    fn document_round_trips() {
        for p in Preset::ALL {
            let cfg = parse_config(&format!("preset = \"{p}\"\n")).unwrap();
            let again = parse_config(&cfg.to_document()).unwrap();
            assert_eq!(cfg, again, "{p}");
        }
        let cfg = parse_config("dt = 1e-4\nprojection = \"every_k_steps(3)\"\nsnapshot_stride = 7\ninitial = \"bump\"\n")
            .unwrap();
        assert_eq!(parse_config(&cfg.to_document()).unwrap(), cfg);
    }

    #[test]
    fn overrides_win() {
        let over = vec![("t_end".to_string(), toml::Value::Float(0.5)), ("n".to_string(), toml::Value::Integer(64))];
        let cfg = parse_config_with("preset = \"conservation-s2\"\nt_end = 2.0\n", &over).unwrap();
        assert_eq!(cfg.solver.t_end, 0.5);
        assert_eq!(cfg.grid.n(), 64);
    }

    #[test]
    fn float_lists() {
        assert_eq!(parse_float_list("1e-2, 1e-3,1e-4").unwrap(), vec![1e-2, 1e-3, 1e-4]);
        assert!(parse_float_list("1e-2,x").is_err());
    }
}
