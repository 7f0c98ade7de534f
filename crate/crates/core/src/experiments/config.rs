//! INI-style experiment configuration.
//!
//! Sections `[grid] [model] [motility] [consumption] [initial] [time]
//! [output]` are all required (they may be empty, in which case defaults
//! apply). `[physical]` may replace `[model]` and `[consumption]`: the
//! dimensionless parameters are then derived from physical constants with a
//! Hill consumption law.
//!
//! Every problem found is reported, each with its line number when one
//! applies. [`ExperimentConfig::serialize`] writes every key explicitly, so
//! parsing its output gives back the same configuration.

use crate::grid::{Grid, GridError};
use crate::kinetics::{
    rescale_from_physical, ConsumptionFamily, ConsumptionSpec, KineticsError, ModelParams, MotilityFamily,
    MotilitySpec, PhysicalParams, TabulatedMotility,
};
use crate::solver::{InitialSpec, Profile, StepControls};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn general(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// All problems found in one configuration text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const SECTIONS: [&str; 8] = ["grid", "model", "physical", "motility", "consumption", "initial", "time", "output"];

/// Section/key/value text with line numbers, before interpretation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: Vec<(String, usize, Vec<(String, String, usize)>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    errors.push(ConfigError::at(lineno, "malformed section header"));
                    continue;
                };
                let name = name.trim().to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    errors.push(ConfigError::at(lineno, format!("unknown section [{name}]")));
                } else if raw.sections.iter().any(|s| s.0 == name) {
                    errors.push(ConfigError::at(lineno, format!("duplicate section [{name}]")));
                }
                raw.sections.push((name, lineno, Vec::new()));
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(ConfigError::at(lineno, "expected `key = value`"));
                continue;
            };
            let (key, value) = (key.trim().to_string(), unquote(value.trim()).to_string());
            let Some(section) = raw.sections.last_mut() else {
                errors.push(ConfigError::at(lineno, format!("key `{key}` appears before any section")));
                continue;
            };
            if section.2.iter().any(|e| e.0 == key) {
                errors.push(ConfigError::at(lineno, format!("duplicate key `{key}` in [{}]", section.0)));
                continue;
            }
            section.2.push((key, value, lineno));
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(ConfigErrors(errors))
        }
    }

    /// Sets `section.key`, creating the section or key when missing.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        let idx = match self.sections.iter().position(|s| s.0 == section) {
            Some(i) => i,
            None => {
                self.sections.push((section.to_string(), 0, Vec::new()));
                self.sections.len() - 1
            }
        };
        let entries = &mut self.sections[idx].2;
        match entries.iter_mut().find(|e| e.0 == key) {
            Some(e) => e.1 = value.to_string(),
            None => entries.push((key.to_string(), value.to_string(), 0)),
        }
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|s| s.0 == section)
            .and_then(|s| s.2.iter().find(|e| e.0 == key))
            .map(|e| e.1.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (name, _, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("[{name}]\n"));
            for (k, v, _) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

/// Typed access to one section; remembers which keys were consumed.
struct Section<'a> {
    name: &'a str,
    header_line: usize,
    entries: Vec<(&'a str, &'a str, usize, bool)>,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, header_line: usize, entries: &'a [(String, String, usize)]) -> Self {
        Self {
            name,
            header_line,
            entries: entries.iter().map(|(k, v, l)| (k.as_str(), v.as_str(), *l, false)).collect(),
        }
    }

    fn take(&mut self, key: &str) -> Option<(&'a str, usize)> {
        self.entries.iter_mut().find(|e| e.0 == key).map(|e| {
            e.3 = true;
            (e.1, e.2)
        })
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.2).unwrap_or(self.header_line)
    }

    fn f64(&mut self, key: &str, default: f64, errors: &mut Vec<ConfigError>) -> f64 {
        match self.take(key) {
            None => default,
            Some((v, line)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => x,
                _ => {
                    errors.push(ConfigError::at(line, format!("{key} must be a finite number, got `{v}`")));
                    default
                }
            },
        }
    }

    fn opt_f64(&mut self, key: &str, errors: &mut Vec<ConfigError>) -> Option<f64> {
        self.take(key).and_then(|(v, line)| match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                errors.push(ConfigError::at(line, format!("{key} must be a finite number, got `{v}`")));
                None
            }
        })
    }

    fn usize(&mut self, key: &str, default: usize, errors: &mut Vec<ConfigError>) -> usize {
        match self.take(key) {
            None => default,
            Some((v, line)) => v.parse::<usize>().unwrap_or_else(|_| {
                errors.push(ConfigError::at(line, format!("{key} must be a non-negative integer, got `{v}`")));
                default
            }),
        }
    }

    fn u64(&mut self, key: &str, default: u64, errors: &mut Vec<ConfigError>) -> u64 {
        match self.take(key) {
            None => default,
            Some((v, line)) => v.parse::<u64>().unwrap_or_else(|_| {
                errors.push(ConfigError::at(line, format!("{key} must be a non-negative integer, got `{v}`")));
                default
            }),
        }
    }

    fn bool(&mut self, key: &str, default: bool, errors: &mut Vec<ConfigError>) -> bool {
        match self.take(key) {
            None => default,
            Some(("true", _)) => true,
            Some(("false", _)) => false,
            Some((v, line)) => {
                errors.push(ConfigError::at(line, format!("{key} must be true or false, got `{v}`")));
                default
            }
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.take(key).map(|(v, _)| v.to_string()).unwrap_or_else(|| default.to_string())
    }

    fn pair(&mut self, key: &str, errors: &mut Vec<ConfigError>) -> Option<[f64; 2]> {
        let (v, line) = self.take(key)?;
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        let parsed: Vec<Option<f64>> = parts.iter().map(|p| p.parse::<f64>().ok().filter(|x| x.is_finite())).collect();
        match parsed.as_slice() {
            [Some(a), Some(b)] => Some([*a, *b]),
            [Some(a)] => Some([*a, 0.0]),
            _ => {
                errors.push(ConfigError::at(line, format!("{key} must be `x` or `x, y`, got `{v}`")));
                None
            }
        }
    }

    fn finish(self, errors: &mut Vec<ConfigError>) {
        for (k, _, line, used) in self.entries {
            if !used {
                errors.push(ConfigError::at(line, format!("unknown key `{k}` in [{}]", self.name)));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub cells: [usize; 2],
    pub lengths: [f64; 2],
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, GridError> {
        Grid::new(self.dim, &self.cells[..self.dim], &self.lengths[..self.dim])
    }
}

/// Where the dimensionless parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Dimensionless(ModelParams),
    /// Physical constants and the dimensional motility function.
    Physical { constants: PhysicalParams, motility: MotilitySpec },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cadence {
    /// Record whenever `t` crosses a multiple of this interval.
    Time(f64),
    /// Record every this many accepted steps.
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub cadence: Cadence,
    pub snapshots: bool,
    pub dir: PathBuf,
    pub scenario: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub model: ModelSource,
    pub initial: InitialSpec,
    pub controls: StepControls,
    pub t_end: f64,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// The dimensionless parameters actually simulated.
    pub fn params(&self) -> ModelParams {
        match &self.model {
            ModelSource::Dimensionless(p) => p.clone(),
            ModelSource::Physical { constants, motility } => {
                rescale_from_physical(constants, motility).expect("validated when the config was built")
            }
        }
    }

    /// The motility function as written in the configuration.
    pub fn motility_input(&self) -> &MotilitySpec {
        match &self.model {
            ModelSource::Dimensionless(p) => &p.motility,
            ModelSource::Physical { motility, .. } => motility,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        let raw = RawConfig::parse(text)?;
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigErrors> {
        let mut errors = Vec::new();
        let find = |name: &str| raw.sections.iter().find(|s| s.0 == name);
        let physical_present = find("physical").is_some();
        for name in SECTIONS {
            let optional = name == "physical" || (physical_present && (name == "model" || name == "consumption"));
            if find(name).is_none() && !optional {
                errors.push(ConfigError::general(format!("missing section [{name}]")));
            }
        }
        if physical_present {
            for name in ["model", "consumption"] {
                if let Some(s) = find(name) {
                    errors.push(ConfigError::at(s.1, format!("[{name}] cannot be combined with [physical]")));
                }
            }
        }
        let empty: Vec<(String, String, usize)> = Vec::new();
        let section = |name: &'static str| match find(name) {
            Some(s) => Section::new(name, s.1, &s.2),
            None => Section::new(name, 0, &empty),
        };

        let grid = parse_grid(section("grid"), &mut errors);
        let motility = parse_motility(section("motility"), &mut errors);
        let model = if physical_present {
            let constants = parse_physical(section("physical"), &mut errors);
            match (constants, motility) {
                (Some(c), Some(m)) => {
                    if let Err(e) = rescale_from_physical(&c, &m) {
                        errors.push(ConfigError::at(find("physical").map(|s| s.1).unwrap_or(0), e.to_string()));
                    }
                    Some(ModelSource::Physical { constants: c, motility: m })
                }
                _ => None,
            }
        } else {
            let mut sec = section("model");
            let tau = sec.f64("tau", 1.0, &mut errors);
            let beta = sec.f64("beta", 1.0, &mut errors);
            let tau_line = sec.line_of("tau");
            let beta_line = sec.line_of("beta");
            sec.finish(&mut errors);
            let consumption = parse_consumption(section("consumption"), &mut errors);
            if !(tau > 0.0) {
                errors.push(ConfigError::at(tau_line, "tau must be > 0"));
            }
            if !(beta > 0.0) {
                errors.push(ConfigError::at(beta_line, "beta must be > 0"));
            }
            match (motility, consumption) {
                (Some(m), Some(c)) if tau > 0.0 && beta > 0.0 => {
                    Some(ModelSource::Dimensionless(ModelParams { tau, beta, motility: m, consumption: c }))
                }
                _ => None,
            }
        };
        let initial = parse_initial(section("initial"), grid.as_ref(), &mut errors);
        let (controls, t_end) = parse_time(section("time"), &mut errors);
        let output = parse_output(section("output"), t_end, &mut errors);

        match (grid, model, initial, controls, output) {
            (Some(grid), Some(model), Some(initial), Some(controls), Some(output)) if errors.is_empty() => {
                Ok(Self { grid, model, initial, controls, t_end, output })
            }
            _ => {
                if errors.is_empty() {
                    errors.push(ConfigError::general("invalid configuration"));
                }
                Err(ConfigErrors(errors))
            }
        }
    }

    /// Canonical text with every key written out.
    pub fn serialize(&self) -> String {
        self.to_raw().to_text()
    }

    fn to_raw(&self) -> RawConfig {
        let mut raw = RawConfig::default();
        let g = &self.grid;
        raw.set("grid", "dim", &g.dim.to_string());
        raw.set("grid", "nx", &g.cells[0].to_string());
        raw.set("grid", "lx", &g.lengths[0].to_string());
        if g.dim == 2 {
            raw.set("grid", "ny", &g.cells[1].to_string());
            raw.set("grid", "ly", &g.lengths[1].to_string());
        }
        match &self.model {
            ModelSource::Dimensionless(p) => {
                raw.set("model", "tau", &p.tau.to_string());
                raw.set("model", "beta", &p.beta.to_string());
                write_motility(&mut raw, &p.motility);
                write_consumption(&mut raw, &p.consumption);
            }
            ModelSource::Physical { constants: c, motility } => {
                for (k, v) in [
                    ("d_v", c.d_v),
                    ("d_n", c.d_n),
                    ("alpha", c.alpha),
                    ("beta", c.beta),
                    ("k_s", c.k_s),
                    ("k_n", c.k_n),
                    ("theta", c.theta),
                ] {
                    raw.set("physical", k, &v.to_string());
                }
                write_motility(&mut raw, motility);
            }
        }
        for (name, profile) in [("u", &self.initial.u), ("v", &self.initial.v), ("n", &self.initial.n)] {
            write_profile(&mut raw, name, profile);
        }
        raw.set("initial", "seed", &self.initial.seed.to_string());
        let c = &self.controls;
        raw.set("time", "t_end", &self.t_end.to_string());
        raw.set("time", "dt", &c.dt.to_string());
        raw.set("time", "dt_min", &c.dt_min.to_string());
        raw.set("time", "dt_max", &c.dt_max.to_string());
        raw.set("time", "adapt", &c.adapt.to_string());
        raw.set("time", "max_rel_change", &c.max_rel_change.to_string());
        let o = &self.output;
        match o.cadence {
            Cadence::Time(e) => raw.set("output", "interval", &e.to_string()),
            Cadence::Steps(k) => raw.set("output", "every_steps", &k.to_string()),
        }
        raw.set("output", "snapshots", &o.snapshots.to_string());
        raw.set("output", "dir", &o.dir.to_string_lossy());
        raw.set("output", "scenario", &o.scenario);
        raw
    }

    /// Returns a copy with `section.key` replaced by `value`, revalidated.
    pub fn with_override(&self, path: &str, value: &str) -> Result<Self, ConfigErrors> {
        let Some((section, key)) = path.split_once('.') else {
            return Err(ConfigErrors(vec![ConfigError::general(format!(
                "override path must look like `section.key`, got `{path}`"
            ))]));
        };
        let mut raw = self.to_raw();
        raw.set(section, key, value);
        Self::from_raw(&RawConfig::parse(&raw.to_text())?)
    }
}

fn parse_grid(mut sec: Section<'_>, errors: &mut Vec<ConfigError>) -> Option<GridSpec> {
    let dim = sec.usize("dim", 2, errors);
    let nx = sec.usize("nx", 32, errors);
    let lx = sec.f64("lx", 1.0, errors);
    let (ny, ly) = if dim == 2 {
        (sec.usize("ny", nx, errors), sec.f64("ly", lx, errors))
    } else {
        (1, 1.0)
    };
    let line = sec.header_line;
    sec.finish(errors);
    let spec = GridSpec { dim, cells: [nx, ny], lengths: [lx, ly] };
    match spec.build() {
        Ok(_) => Some(spec),
        Err(e) => {
            errors.push(ConfigError::at(line, e.to_string()));
            None
        }
    }
}

fn kinetics_error(sec: &Section<'_>, e: KineticsError) -> ConfigError {
    let line = match &e {
        KineticsError::InvalidParameter { name, .. } => sec.line_of(name),
        KineticsError::InvalidTable(_) => sec.line_of("table"),
        _ => sec.header_line,
    };
    ConfigError::at(line, e.to_string())
}

fn parse_table(text: &str) -> Result<Vec<(f64, f64)>, String> {
    text.split(',')
        .map(|pair| {
            let (s, g) = pair
                .split_once(':')
                .ok_or_else(|| format!("table entries must look like `s:gamma`, got `{}`", pair.trim()))?;
            let s = s.trim().parse::<f64>().map_err(|_| format!("bad abscissa `{}`", s.trim()))?;
            let g = g.trim().parse::<f64>().map_err(|_| format!("bad value `{}`", g.trim()))?;
            Ok((s, g))
        })
        .collect()
}

fn parse_motility(mut sec: Section<'_>, errors: &mut Vec<ConfigError>) -> Option<MotilitySpec> {
    let family = sec.string("family", "power");
    let family_line = sec.line_of("family");
    let before = errors.len();
    let mut f = |k: &str, d: f64| sec.f64(k, d, errors);
    let fam = match family.as_str() {
        "power" => Some(MotilityFamily::Power { k: f("k", 1.0) }),
        "shifted_power" => Some(MotilityFamily::ShiftedPower { a: f("a", 1.0), k: f("k", 1.0) }),
        "exponential" => Some(MotilityFamily::Exponential { chi: f("chi", 1.0) }),
        "stretched_exponential" => {
            Some(MotilityFamily::StretchedExponential { beta_s: f("beta_s", 1.0), theta: f("theta", 0.5) })
        }
        "log_corrected" => Some(MotilityFamily::LogCorrected {
            a1: f("a1", 1.0),
            k1: f("k1", 1.0),
            a2: f("a2", 2.0),
            k2: f("k2", 1.0),
        }),
        "sum_of_powers" => Some(MotilityFamily::SumOfPowers {
            a1: f("a1", 1.0),
            k1: f("k1", 1.0),
            a2: f("a2", 1.0),
            k2: f("k2", 2.0),
        }),
        "custom" => match sec.take("table") {
            None => {
                errors.push(ConfigError::at(family_line, "custom motility needs a `table` key"));
                None
            }
            Some((text, line)) => match parse_table(text) {
                Ok(points) => match TabulatedMotility::new(&points) {
                    Ok(t) => Some(MotilityFamily::Custom(t)),
                    Err(e) => {
                        errors.push(ConfigError::at(line, e.to_string()));
                        None
                    }
                },
                Err(msg) => {
                    errors.push(ConfigError::at(line, msg));
                    None
                }
            },
        },
        other => {
            errors.push(ConfigError::at(family_line, format!("unknown motility family `{other}`")));
            None
        }
    };
    let scale = sec.f64("scale", 1.0, errors);
    let arg_scale = sec.f64("arg_scale", 1.0, errors);
    let spec = fam.map(|family| MotilitySpec { family, scale, arg_scale });
    let result = match spec {
        Some(s) if errors.len() == before => match s.validate() {
            Ok(()) => Some(s),
            Err(e) => {
                errors.push(kinetics_error(&sec, e));
                None
            }
        },
        _ => None,
    };
    sec.finish(errors);
    result
}

fn write_motility(raw: &mut RawConfig, m: &MotilitySpec) {
    let mut put = |k: &str, v: f64| raw.set("motility", k, &v.to_string());
    let name = match &m.family {
        MotilityFamily::Power { k } => {
            put("k", *k);
            "power"
        }
        MotilityFamily::ShiftedPower { a, k } => {
            put("a", *a);
            put("k", *k);
            "shifted_power"
        }
        MotilityFamily::Exponential { chi } => {
            put("chi", *chi);
            "exponential"
        }
        MotilityFamily::StretchedExponential { beta_s, theta } => {
            put("beta_s", *beta_s);
            put("theta", *theta);
            "stretched_exponential"
        }
        MotilityFamily::LogCorrected { a1, k1, a2, k2 } => {
            put("a1", *a1);
            put("k1", *k1);
            put("a2", *a2);
            put("k2", *k2);
            "log_corrected"
        }
        MotilityFamily::SumOfPowers { a1, k1, a2, k2 } => {
            put("a1", *a1);
            put("k1", *k1);
            put("a2", *a2);
            put("k2", *k2);
            "sum_of_powers"
        }
        MotilityFamily::Custom(t) => {
            let table: Vec<String> = t.points().map(|(s, g)| format!("{s}:{g}")).collect();
            raw.set("motility", "table", &table.join(", "));
            "custom"
        }
    };
    raw.set("motility", "family", name);
    raw.set("motility", "scale", &m.scale.to_string());
    raw.set("motility", "arg_scale", &m.arg_scale.to_string());
}

fn parse_consumption(mut sec: Section<'_>, errors: &mut Vec<ConfigError>) -> Option<ConsumptionSpec> {
    let family = sec.string("family", "monod");
    let line = sec.line_of("family");
    let fam = match family.as_str() {
        "zero" => Some(ConsumptionFamily::Zero),
        "hill2" => Some(ConsumptionFamily::Hill2 { k_n: sec.f64("k_n", 1.0, errors) }),
        "monod" => Some(ConsumptionFamily::Monod { k: sec.f64("k", 1.0, errors) }),
        "linear" => Some(ConsumptionFamily::Linear { c: sec.f64("c", 1.0, errors) }),
        other => {
            errors.push(ConfigError::at(line, format!("unknown consumption family `{other}`")));
            None
        }
    };
    let scale = sec.f64("scale", 1.0, errors);
    let arg_scale = sec.f64("arg_scale", 1.0, errors);
    let result = fam.and_then(|family| {
        let spec = ConsumptionSpec { family, scale, arg_scale };
        match spec.validate() {
            Ok(()) => Some(spec),
            Err(e) => {
                errors.push(kinetics_error(&sec, e));
                None
            }
        }
    });
    sec.finish(errors);
    result
}

fn write_consumption(raw: &mut RawConfig, c: &ConsumptionSpec) {
    let name = match c.family {
        ConsumptionFamily::Zero => "zero",
        ConsumptionFamily::Hill2 { k_n } => {
            raw.set("consumption", "k_n", &k_n.to_string());
            "hill2"
        }
        ConsumptionFamily::Monod { k } => {
            raw.set("consumption", "k", &k.to_string());
            "monod"
        }
        ConsumptionFamily::Linear { c } => {
            raw.set("consumption", "c", &c.to_string());
            "linear"
        }
    };
    raw.set("consumption", "family", name);
    raw.set("consumption", "scale", &c.scale.to_string());
    raw.set("consumption", "arg_scale", &c.arg_scale.to_string());
}

fn parse_physical(mut sec: Section<'_>, errors: &mut Vec<ConfigError>) -> Option<PhysicalParams> {
    let p = PhysicalParams {
        d_v: sec.f64("d_v", 1.0, errors),
        d_n: sec.f64("d_n", 1.0, errors),
        alpha: sec.f64("alpha", 1.0, errors),
        beta: sec.f64("beta", 1.0, errors),
        k_s: sec.f64("k_s", 1.0, errors),
        k_n: sec.f64("k_n", 1.0, errors),
        theta: sec.f64("theta", 1.0, errors),
    };
    sec.finish(errors);
    Some(p)
}

fn parse_initial(mut sec: Section<'_>, grid: Option<&GridSpec>, errors: &mut Vec<ConfigError>) -> Option<InitialSpec> {
    let center_default = grid.map(|g| [0.5 * g.lengths[0], if g.dim == 2 { 0.5 * g.lengths[1] } else { 0.0 }]);
    let mut profile = |name: &str, default: f64, sec: &mut Section<'_>| -> Option<Profile> {
        let kind_key = format!("{name}_profile");
        let kind = sec.string(&kind_key, "constant");
        let value = sec.f64(name, default, errors);
        match kind.as_str() {
            "constant" => Some(Profile::Constant(value)),
            "noise" => {
                let amplitude = sec.f64(&format!("{name}_amplitude"), 0.01, errors);
                Some(Profile::Noise { base: value, amplitude })
            }
            "bump" => {
                let line = sec.line_of(&kind_key);
                let Some(total_mass) = sec.opt_f64(&format!("{name}_mass"), errors) else {
                    errors.push(ConfigError::at(line, format!("bump profile needs `{name}_mass`")));
                    return None;
                };
                let width = sec.f64(&format!("{name}_width"), 0.1, errors);
                let center = sec.pair(&format!("{name}_center"), errors).or(center_default)?;
                Some(Profile::Bump { background: value, total_mass, width, center })
            }
            other => {
                errors.push(ConfigError::at(
                    sec.line_of(&kind_key),
                    format!("unknown profile `{other}` (expected constant, noise or bump)"),
                ));
                None
            }
        }
    };
    let u = profile("u", 1.0, &mut sec);
    let v = profile("v", 1.0, &mut sec);
    let n = profile("n", 0.0, &mut sec);
    let seed = sec.u64("seed", 0, errors);
    let line = sec.header_line;
    sec.finish(errors);
    let spec = InitialSpec { u: u?, v: v?, n: n?, seed };
    // Surface data problems (negative values, zero signal) at parse time.
    if let Some(g) = grid {
        if let Ok(grid) = g.build() {
            if let Err(e) = crate::solver::init_state(&grid, &spec) {
                errors.push(ConfigError::at(line, e.to_string()));
                return None;
            }
        }
    }
    Some(spec)
}

fn write_profile(raw: &mut RawConfig, name: &str, p: &Profile) {
    let key = |suffix: &str| format!("{name}_{suffix}");
    match *p {
        Profile::Constant(c) => {
            raw.set("initial", &key("profile"), "constant");
            raw.set("initial", name, &c.to_string());
        }
        Profile::Noise { base, amplitude } => {
            raw.set("initial", &key("profile"), "noise");
            raw.set("initial", name, &base.to_string());
            raw.set("initial", &key("amplitude"), &amplitude.to_string());
        }
        Profile::Bump { background, total_mass, width, center } => {
            raw.set("initial", &key("profile"), "bump");
            raw.set("initial", name, &background.to_string());
            raw.set("initial", &key("mass"), &total_mass.to_string());
            raw.set("initial", &key("width"), &width.to_string());
            raw.set("initial", &key("center"), &format!("{}, {}", center[0], center[1]));
        }
    }
}

fn parse_time(mut sec: Section<'_>, errors: &mut Vec<ConfigError>) -> (Option<StepControls>, f64) {
    let d = StepControls::default();
    let t_end = sec.f64("t_end", 1.0, errors);
    let t_line = sec.line_of("t_end");
    let c = StepControls {
        dt: sec.f64("dt", d.dt, errors),
        dt_min: sec.f64("dt_min", d.dt_min, errors),
        dt_max: sec.f64("dt_max", d.dt_max, errors),
        adapt: sec.bool("adapt", d.adapt, errors),
        max_rel_change: sec.f64("max_rel_change", d.max_rel_change, errors),
    };
    let line = sec.header_line;
    sec.finish(errors);
    if !(t_end > 0.0) {
        errors.push(ConfigError::at(t_line, "t_end must be > 0"));
    }
    match c.validate() {
        Ok(()) => (Some(c), t_end),
        Err(e) => {
            errors.push(ConfigError::at(line, e.to_string()));
            (None, t_end)
        }
    }
}

fn parse_output(mut sec: Section<'_>, t_end: f64, errors: &mut Vec<ConfigError>) -> Option<OutputSpec> {
    let interval = sec.opt_f64("interval", errors);
    let interval_line = sec.line_of("interval");
    let steps = sec.take("every_steps").map(|(v, line)| (v.parse::<usize>(), line, v));
    let cadence = match (interval, steps) {
        (Some(_), Some((_, line, _))) => {
            errors.push(ConfigError::at(line, "give either `interval` or `every_steps`, not both"));
            None
        }
        (Some(e), None) if e > 0.0 => Some(Cadence::Time(e)),
        (Some(e), None) => {
            errors.push(ConfigError::at(interval_line, format!("interval must be > 0, got {e}")));
            None
        }
        (None, Some((Ok(k), _, _))) if k > 0 => Some(Cadence::Steps(k)),
        (None, Some((_, line, v))) => {
            errors.push(ConfigError::at(line, format!("every_steps must be a positive integer, got `{v}`")));
            None
        }
        (None, None) => Some(Cadence::Time(if t_end > 0.0 { t_end / 100.0 } else { 1.0 })),
    };
    let snapshots = sec.bool("snapshots", true, errors);
    let dir = PathBuf::from(sec.string("dir", "out"));
    let scenario = sec.string("scenario", "custom");
    sec.finish(errors);
    cadence.map(|cadence| OutputSpec { cadence, snapshots, dir, scenario })
}

/// Default values used for keys that are absent, as `section -> [(key, value)]`.
pub fn documented_defaults() -> BTreeMap<&'static str, Vec<(&'static str, &'static str)>> {
    BTreeMap::from([
        ("grid", vec![("dim", "2"), ("nx", "32"), ("ny", "nx"), ("lx", "1"), ("ly", "lx")]),
        ("model", vec![("tau", "1"), ("beta", "1")]),
        ("motility", vec![("family", "power"), ("k", "1"), ("scale", "1"), ("arg_scale", "1")]),
        ("consumption", vec![("family", "monod"), ("k", "1"), ("scale", "1"), ("arg_scale", "1")]),
        (
            "initial",
            vec![("u", "1"), ("v", "1"), ("n", "0"), ("<field>_profile", "constant"), ("seed", "0")],
        ),
        (
            "time",
            vec![
                ("t_end", "1"),
                ("dt", "0.01"),
                ("dt_min", "1e-8"),
                ("dt_max", "1"),
                ("adapt", "true"),
                ("max_rel_change", "0.1"),
            ],
        ),
        ("output", vec![("interval", "t_end/100"), ("snapshots", "true"), ("dir", "out"), ("scenario", "custom")]),
    ])
}
