//! Scenario files and built-in presets.
//!
//! A scenario is a UTF-8 text file of `key = value` lines grouped in
//! sections:
//!
//! ```text
//! # comment
//! name = conventional
//!
//! [feeder]                      # required: g, b, length
//! g = 1
//! b = 1
//! length = 1
//!
//! [segments]                    # repeated: start, end, p, q
//! segment = 0.1, 0.2, -0.5, -0.2
//!
//! [bumps]                       # repeated: center, half_width, p, q
//! bump = 0.6, 0.1, 3, 0.5
//!
//! [solver]                      # all optional
//! grid = 512
//! newton_tol = 1e-10
//! max_newton_iters = 50
//! fd_step = 1e-7
//! damping = 1
//! stepping = split              # or: uniform
//!
//! [manufactured]                # replaces segments and bumps
//! v_quad = -0.05
//! v_wave = 0.02
//! v_k = 3
//! theta_quad = -0.05
//! theta_wave = 0.03
//! theta_k = 2
//! ```
//!
//! Unknown sections and keys are rejected. Only solver options have
//! defaults; `name` defaults to `unnamed`.

use std::fmt::Write as _;
use std::path::Path;

use crate::bvp::{SolverOptions, Stepping};
use crate::error::{Error, Result};
use crate::model::{
    manufactured_profile, Bump, FeederParams, ManufacturedProfile, PowerProfile, Profile, Segment,
    ShapeFunction,
};

pub const PRESET_DIR_ENV: &str = "FEEDERFLOW_PRESET_DIR";

const BUILTIN_PRESETS: [(&str, &str); 4] = [
    ("no_load", include_str!("../presets/no_load.cfg")),
    ("conventional", include_str!("../presets/conventional.cfg")),
    ("pv_ev", include_str!("../presets/pv_ev.cfg")),
    ("manufactured", include_str!("../presets/manufactured.cfg")),
];

/// Coefficients of a manufactured `(v, θ)` pair built from
/// [`ShapeFunction`]s with offsets 1 and 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSpec {
    pub v_quad: f64,
    pub v_wave: f64,
    pub v_k: u32,
    pub theta_quad: f64,
    pub theta_wave: f64,
    pub theta_k: u32,
}

impl ManufacturedSpec {
    pub fn voltage(&self, length: f64) -> ShapeFunction {
        ShapeFunction { offset: 1.0, quad: self.v_quad, wave: self.v_wave, k: self.v_k, length }
    }

    pub fn phase(&self, length: f64) -> ShapeFunction {
        ShapeFunction { offset: 0.0, quad: self.theta_quad, wave: self.theta_wave, k: self.theta_k, length }
    }
}

/// Unvalidated scenario contents, as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub g: f64,
    pub b: f64,
    pub length: f64,
    pub segments: Vec<Segment>,
    pub bumps: Vec<Bump>,
    pub solver: SolverOptions,
    pub manufactured: Option<ManufacturedSpec>,
}

#[derive(Debug, Clone)]
pub enum ScenarioProfile {
    Loads(PowerProfile),
    Manufactured(ManufacturedProfile<ShapeFunction, ShapeFunction>),
}

impl ScenarioProfile {
    pub fn as_profile(&self) -> &dyn Profile {
        match self {
            ScenarioProfile::Loads(p) => p,
            ScenarioProfile::Manufactured(m) => m,
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    spec: ScenarioSpec,
    params: FeederParams,
    profile: ScenarioProfile,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Scenario {
    pub fn from_spec(spec: ScenarioSpec) -> Result<Self> {
        let params = FeederParams::new(spec.g, spec.b, spec.length)?;
        spec.solver.validate()?;
        let profile = match spec.manufactured {
            Some(m) => {
                if !spec.segments.is_empty() || !spec.bumps.is_empty() {
                    return Err(Error::Validation(
                        "a manufactured scenario cannot also list segments or bumps".into(),
                    ));
                }
                ScenarioProfile::Manufactured(manufactured_profile(
                    m.voltage(spec.length),
                    m.phase(spec.length),
                    &params,
                )?)
            }
            None => ScenarioProfile::Loads(PowerProfile::new(
                spec.segments.clone(),
                spec.bumps.clone(),
                spec.length,
            )?),
        };
        Ok(Self { spec, params, profile })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn params(&self) -> &FeederParams {
        &self.params
    }

    pub fn profile(&self) -> &dyn Profile {
        self.profile.as_profile()
    }

    pub fn scenario_profile(&self) -> &ScenarioProfile {
        &self.profile
    }

    pub fn solver(&self) -> &SolverOptions {
        &self.spec.solver
    }

    /// Copy with a numeric field replaced and everything re-validated.
    ///
    /// Paths: `feeder.{g,b,length}`,
    /// `solver.{grid,newton_tol,max_newton_iters,fd_step,damping}`,
    /// `segment.K.{start,end,p,q}`, `bump.K.{center,half_width,p,q}` with
    /// `K` counted from 1, and `manufactured.<key>`.
    pub fn with_param(&self, path: &str, value: f64) -> Result<Scenario> {
        let mut spec = self.spec.clone();
        set_param(&mut spec, path, value)?;
        Scenario::from_spec(spec)
    }

    pub fn serialize(&self) -> String {
        serialize(&self.spec)
    }
}

fn as_count(path: &str, value: f64) -> Result<usize> {
    if value.fract() == 0.0 && value >= 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::Validation(format!("{path} needs a non-negative integer, got {value}")))
    }
}

fn set_param(spec: &mut ScenarioSpec, path: &str, value: f64) -> Result<()> {
    let bad = || Error::Validation(format!("unknown parameter path `{path}`"));
    let parts: Vec<&str> = path.split('.').collect();
    match parts.as_slice() {
        ["feeder", "g"] => spec.g = value,
        ["feeder", "b"] => spec.b = value,
        ["feeder", "length"] => spec.length = value,
        ["solver", "grid"] => spec.solver.grid_intervals = as_count(path, value)?,
        ["solver", "newton_tol"] => spec.solver.newton_tol = value,
        ["solver", "max_newton_iters"] => spec.solver.max_newton_iters = as_count(path, value)?,
        ["solver", "fd_step"] => spec.solver.fd_step = value,
        ["solver", "damping"] => spec.solver.damping = value,
        ["segment", k, field] => {
            let i = k.parse::<usize>().ok().filter(|&i| i >= 1).ok_or_else(bad)?;
            let s = spec.segments.get_mut(i - 1).ok_or_else(|| {
                Error::Validation(format!("{path}: the scenario has no segment {i}"))
            })?;
            match *field {
                "start" => s.start = value,
                "end" => s.end = value,
                "p" => s.p = value,
                "q" => s.q = value,
                _ => return Err(bad()),
            }
        }
        ["bump", k, field] => {
            let i = k.parse::<usize>().ok().filter(|&i| i >= 1).ok_or_else(bad)?;
            let b = spec.bumps.get_mut(i - 1).ok_or_else(|| {
                Error::Validation(format!("{path}: the scenario has no bump {i}"))
            })?;
            match *field {
                "center" => b.center = value,
                "half_width" => b.half_width = value,
                "p" => b.p = value,
                "q" => b.q = value,
                _ => return Err(bad()),
            }
        }
        ["manufactured", key] => {
            let m = spec
                .manufactured
                .as_mut()
                .ok_or_else(|| Error::Validation(format!("{path}: the scenario is not manufactured")))?;
            match *key {
                "v_quad" => m.v_quad = value,
                "v_wave" => m.v_wave = value,
                "v_k" => m.v_k = as_count(path, value)? as u32,
                "theta_quad" => m.theta_quad = value,
                "theta_wave" => m.theta_wave = value,
                "theta_k" => m.theta_k = as_count(path, value)? as u32,
                _ => return Err(bad()),
            }
        }
        _ => return Err(bad()),
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Feeder,
    Segments,
    Bumps,
    Solver,
    Manufactured,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "feeder" => Section::Feeder,
            "segments" => Section::Segments,
            "bumps" => Section::Bumps,
            "solver" => Section::Solver,
            "manufactured" => Section::Manufactured,
            _ => return None,
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn number(line: usize, key: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("`{key}` expects a number, got `{}`", text.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{key}` must be finite, got `{}`", text.trim())));
    }
    Ok(v)
}

fn integer(line: usize, key: &str, text: &str) -> Result<u64> {
    text.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("`{key}` expects a non-negative integer, got `{}`", text.trim())))
}

fn tuple4(line: usize, key: &str, text: &str) -> Result<[f64; 4]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(parse_err(line, format!("`{key}` expects 4 comma-separated numbers, got {}", parts.len())));
    }
    let mut out = [0.0; 4];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = number(line, key, part)?;
    }
    Ok(out)
}

#[derive(Default)]
struct ManufacturedFields {
    v_quad: Option<f64>,
    v_wave: Option<f64>,
    v_k: Option<u32>,
    theta_quad: Option<f64>,
    theta_wave: Option<f64>,
    theta_k: Option<u32>,
}

/// Parses the key-value format without checking model invariants.
pub fn parse_spec(text: &str) -> Result<ScenarioSpec> {
    let mut section = Section::Top;
    let mut seen_sections: Vec<Section> = Vec::new();
    let mut seen_keys: Vec<(Section, String)> = Vec::new();
    let mut name = None;
    let (mut g, mut b, mut length) = (None, None, None);
    let mut segments = Vec::new();
    let mut bumps = Vec::new();
    let mut solver = SolverOptions::default();
    let mut manufactured: Option<ManufacturedFields> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, format!("unterminated section header `{content}`")))?
                .trim();
            section = Section::parse(inner).ok_or_else(|| parse_err(line, format!("unknown section `[{inner}]`")))?;
            if seen_sections.contains(&section) {
                return Err(parse_err(line, format!("section `[{inner}]` appears twice")));
            }
            seen_sections.push(section);
            if section == Section::Manufactured {
                manufactured = Some(ManufacturedFields::default());
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(parse_err(line, format!("`{key}` has no value")));
        }
        let repeatable = matches!((section, key), (Section::Segments, "segment") | (Section::Bumps, "bump"));
        if !repeatable {
            if seen_keys.iter().any(|(s, k)| *s == section && k == key) {
                return Err(parse_err(line, format!("`{key}` is set twice")));
            }
            seen_keys.push((section, key.to_string()));
        }
        let unknown = || parse_err(line, format!("unknown key `{key}`"));
        match section {
            Section::Top => match key {
                "name" => name = Some(value.to_string()),
                _ => return Err(unknown()),
            },
            Section::Feeder => match key {
                "g" => g = Some(number(line, key, value)?),
                "b" => b = Some(number(line, key, value)?),
                "length" => length = Some(number(line, key, value)?),
                _ => return Err(unknown()),
            },
            Section::Segments => match key {
                "segment" => {
                    let [start, end, p, q] = tuple4(line, key, value)?;
                    segments.push(Segment { start, end, p, q });
                }
                _ => return Err(unknown()),
            },
            Section::Bumps => match key {
                "bump" => {
                    let [center, half_width, p, q] = tuple4(line, key, value)?;
                    bumps.push(Bump { center, half_width, p, q });
                }
                _ => return Err(unknown()),
            },
            Section::Solver => match key {
                "grid" => solver.grid_intervals = integer(line, key, value)? as usize,
                "newton_tol" => solver.newton_tol = number(line, key, value)?,
                "max_newton_iters" => solver.max_newton_iters = integer(line, key, value)? as usize,
                "fd_step" => solver.fd_step = number(line, key, value)?,
                "damping" => solver.damping = number(line, key, value)?,
                "stepping" => {
                    solver.stepping = match value {
                        "split" => Stepping::SplitAtBreakpoints,
                        "uniform" => Stepping::Uniform,
                        _ => return Err(parse_err(line, format!("`stepping` is `split` or `uniform`, got `{value}`"))),
                    }
                }
                _ => return Err(unknown()),
            },
            Section::Manufactured => {
                let m = manufactured.as_mut().expect("section opened");
                let small = |v: u64| {
                    u32::try_from(v).map_err(|_| parse_err(line, format!("`{key}` is too large")))
                };
                match key {
                    "v_quad" => m.v_quad = Some(number(line, key, value)?),
                    "v_wave" => m.v_wave = Some(number(line, key, value)?),
                    "v_k" => m.v_k = Some(small(integer(line, key, value)?)?),
                    "theta_quad" => m.theta_quad = Some(number(line, key, value)?),
                    "theta_wave" => m.theta_wave = Some(number(line, key, value)?),
                    "theta_k" => m.theta_k = Some(small(integer(line, key, value)?)?),
                    _ => return Err(unknown()),
                }
            }
        }
    }

    let last = text.lines().count().max(1);
    let missing = |what: &str| parse_err(last, format!("missing `{what}` in [feeder]"));
    let manufactured = match manufactured {
        None => None,
        Some(m) => {
            let need = |what: &str| parse_err(last, format!("missing `{what}` in [manufactured]"));
            Some(ManufacturedSpec {
                v_quad: m.v_quad.ok_or_else(|| need("v_quad"))?,
                v_wave: m.v_wave.ok_or_else(|| need("v_wave"))?,
                v_k: m.v_k.ok_or_else(|| need("v_k"))?,
                theta_quad: m.theta_quad.ok_or_else(|| need("theta_quad"))?,
                theta_wave: m.theta_wave.ok_or_else(|| need("theta_wave"))?,
                theta_k: m.theta_k.ok_or_else(|| need("theta_k"))?,
            })
        }
    };
    Ok(ScenarioSpec {
        name: name.unwrap_or_else(|| "unnamed".to_string()),
        g: g.ok_or_else(|| missing("g"))?,
        b: b.ok_or_else(|| missing("b"))?,
        length: length.ok_or_else(|| missing("length"))?,
        segments,
        bumps,
        solver,
        manufactured,
    })
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    Scenario::from_spec(parse_spec(text)?)
}

/// Writes `spec` in the scenario format. Floats use the shortest
/// representation that parses back to the same value.
pub fn serialize(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", spec.name);
    let _ = writeln!(out, "\n[feeder]\ng = {:?}\nb = {:?}\nlength = {:?}", spec.g, spec.b, spec.length);
    if !spec.segments.is_empty() {
        out.push_str("\n[segments]\n");
        for s in &spec.segments {
            let _ = writeln!(out, "segment = {:?}, {:?}, {:?}, {:?}", s.start, s.end, s.p, s.q);
        }
    }
    if !spec.bumps.is_empty() {
        out.push_str("\n[bumps]\n");
        for b in &spec.bumps {
            let _ = writeln!(out, "bump = {:?}, {:?}, {:?}, {:?}", b.center, b.half_width, b.p, b.q);
        }
    }
    let s = &spec.solver;
    let stepping = match s.stepping {
        Stepping::SplitAtBreakpoints => "split",
        Stepping::Uniform => "uniform",
    };
    let _ = writeln!(
        out,
        "\n[solver]\ngrid = {}\nnewton_tol = {:?}\nmax_newton_iters = {}\nfd_step = {:?}\ndamping = {:?}\nstepping = {stepping}",
        s.grid_intervals, s.newton_tol, s.max_newton_iters, s.fd_step, s.damping
    );
    if let Some(m) = &spec.manufactured {
        let _ = writeln!(
            out,
            "\n[manufactured]\nv_quad = {:?}\nv_wave = {:?}\nv_k = {}\ntheta_quad = {:?}\ntheta_wave = {:?}\ntheta_k = {}",
            m.v_quad, m.v_wave, m.v_k, m.theta_quad, m.theta_wave, m.theta_k
        );
    }
    out
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    BUILTIN_PRESETS.iter().map(|(n, _)| *n)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))
}

/// Looks up a preset. `$FEEDERFLOW_PRESET_DIR/<name>.cfg` wins when it
/// exists; otherwise the built-in copy is used.
pub fn preset(name: &str) -> Result<Scenario> {
    if let Some(dir) = std::env::var_os(PRESET_DIR_ENV) {
        let valid_name = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        let path = Path::new(&dir).join(format!("{name}.cfg"));
        if valid_name && path.is_file() {
            return parse_scenario(&read_file(&path)?);
        }
    }
    BUILTIN_PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario(text))
        .unwrap_or_else(|| Err(Error::UnknownPreset(name.to_string())))
}

/// Reads `arg` as a scenario file when such a file exists, otherwise as a
/// preset name.
pub fn load(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.is_file() {
        parse_scenario(&read_file(path)?)
    } else {
        preset(arg)
    }
}
