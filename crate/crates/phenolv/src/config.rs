//! Run configuration: a TOML document with flat sections.
//!
//! Parsing walks the table by hand so that every error carries the key path
//! and the expected domain. [`RunConfig::to_toml`] writes the fully resolved
//! configuration back out; it re-parses to an equal value.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use phenolv_core::phase_plane::{LvParams, SeparatrixOptions};
use phenolv_core::rk::Tolerances;
use phenolv_core::{ModelParams, ResourceFunction, TraitGrid};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "`{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    PhasePlane,
    Separatrix,
    OdeSim,
    PdeSim,
    SteadyState,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::PhasePlane,
        Command::Separatrix,
        Command::OdeSim,
        Command::PdeSim,
        Command::SteadyState,
        Command::Sweep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::PhasePlane => "phase-plane",
            Command::Separatrix => "separatrix",
            Command::OdeSim => "ode-sim",
            Command::PdeSim => "pde-sim",
            Command::SteadyState => "steady-state",
            Command::Sweep => "sweep",
        }
    }

    fn is_lv(&self) -> bool {
        matches!(self, Command::PhasePlane | Command::Separatrix)
    }

    fn is_diffusive(&self) -> bool {
        matches!(self, Command::PdeSim | Command::SteadyState)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ConfigError::new("command", format!("unknown command {s:?}; expected one of {}", command_list())))
    }
}

fn command_list() -> String {
    Command::ALL.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
}

/// Model parameters for the Lotka–Volterra commands or the trait-structured ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamsSpec {
    Lv(LvParams),
    /// `m_bar` is only read by the integro-differential model.
    Model {
        b: f64,
        c: f64,
        m_bar: Option<f64>,
        d: ResourceFunction,
        m: Option<ResourceFunction>,
    },
}

/// Initial density profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileSpec {
    Shape {
        shape: ResourceFunction,
        /// Rescale to this trapezoid mass.
        mass: Option<f64>,
        /// Zero outside `[lo, hi]`.
        support: Option<(f64, f64)>,
        /// Bump centers shift by a uniform draw from `[-jitter, jitter]`.
        jitter: f64,
    },
    /// A multiple of the steady profile (diffusive commands only).
    Steady { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> phenolv_core::Result<TraitGrid> {
        TraitGrid::new(self.x_lo, self.x_hi, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Concentration window half-width (integro-differential runs).
    pub eps_conc: f64,
    pub tol: Tolerances,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartsSpec {
    pub points: Vec<[f64; 2]>,
    pub random: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub command: Command,
    /// `section.key` of a numeric parameter.
    pub axis: String,
    pub values: Vec<f64>,
    /// Resolved child table; each value patches `axis` and re-parses it.
    pub base: Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub params: ParamsSpec,
    pub grid: Option<GridSpec>,
    pub initial_u: Option<ProfileSpec>,
    pub initial_v: Option<ProfileSpec>,
    pub sim: SimSpec,
    pub starts: Option<StartsSpec>,
    pub separatrix: SeparatrixOptions,
    pub sweep: Option<SweepSpec>,
    pub output_dir: Option<String>,
}

const DEFAULT_DT: f64 = 1e-3;
const DEFAULT_RECORD_EVERY: usize = 100;
const DEFAULT_RANDOM_STARTS: usize = 5;

/// Typed access to one section; remembers which keys were read.
struct Section<'a> {
    name: &'a str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'a str) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(ConfigError::new(name, "expected a section")),
        };
        Ok(Self {
            name,
            table,
            used: BTreeSet::new(),
        })
    }

    fn present(&self) -> bool {
        self.table.is_some()
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&mut self, key: &'static str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => as_f64(v).map(Some).ok_or_else(|| ConfigError::new(self.path(key), "expected a number")),
        }
    }

    fn req_f64(&mut self, key: &'static str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| ConfigError::new(self.path(key), "missing required number"))
    }

    fn usize(&mut self, key: &'static str) -> Result<Option<usize>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(ConfigError::new(self.path(key), "expected a non-negative integer")),
        }
    }

    fn string(&mut self, key: &'static str) -> Result<Option<&'a str>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(ConfigError::new(self.path(key), "expected a string")),
        }
    }

    fn f64_list(&mut self, key: &'static str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| as_f64(v).ok_or_else(|| ConfigError::new(self.path(key), "expected an array of numbers")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(ConfigError::new(self.path(key), "expected an array of numbers")),
        }
    }

    /// Rejects keys that were never read.
    fn finish(self) -> Result<()> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.used.contains(k.as_str())) {
                let mut known: Vec<_> = self.used.iter().copied().collect();
                known.sort_unstable();
                return Err(ConfigError::new(
                    self.path(k),
                    format!("unknown key; expected one of {}", known.join(", ")),
                ));
            }
        }
        Ok(())
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn positive(path: String, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be finite and > 0 (got {v})")))
    }
}

fn finite(path: String, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be finite (got {v})")))
    }
}

const FAMILIES: &str = "constant, gaussian, cosine, two-peaks";

/// Reads a function family from `s`. `default_base` fills in a missing
/// `base` (profiles default to zero, landscapes require it).
fn parse_family(s: &mut Section, family: &str, default_base: Option<f64>) -> Result<ResourceFunction> {
    let base = |s: &mut Section| -> Result<f64> {
        match (s.f64("base")?, default_base) {
            (Some(b), _) => finite(s.path("base"), b),
            (None, Some(b)) => Ok(b),
            (None, None) => Err(ConfigError::new(s.path("base"), "missing required number")),
        }
    };
    let f = match family {
        "constant" => ResourceFunction::Constant {
            level: finite(s.path("level"), s.req_f64("level")?)?,
        },
        "gaussian" => ResourceFunction::GaussianBump {
            base: base(s)?,
            amplitude: finite(s.path("amplitude"), s.req_f64("amplitude")?)?,
            center: finite(s.path("center"), s.req_f64("center")?)?,
            width: positive(s.path("width"), s.req_f64("width")?)?,
        },
        "cosine" => ResourceFunction::CosineBump {
            base: base(s)?,
            amplitude: finite(s.path("amplitude"), s.req_f64("amplitude")?)?,
            center: finite(s.path("center"), s.req_f64("center")?)?,
            halfwidth: positive(s.path("halfwidth"), s.req_f64("halfwidth")?)?,
        },
        "two-peaks" => ResourceFunction::TwoPeaks {
            base: base(s)?,
            amp1: finite(s.path("amp1"), s.req_f64("amp1")?)?,
            center1: finite(s.path("center1"), s.req_f64("center1")?)?,
            width1: positive(s.path("width1"), s.req_f64("width1")?)?,
            amp2: finite(s.path("amp2"), s.req_f64("amp2")?)?,
            center2: finite(s.path("center2"), s.req_f64("center2")?)?,
            width2: positive(s.path("width2"), s.req_f64("width2")?)?,
        },
        other => {
            return Err(ConfigError::new(
                s.path("family"),
                format!("unknown family {other:?}; expected one of {FAMILIES}"),
            ))
        }
    };
    Ok(f)
}

fn parse_resource(root: &Table, name: &str, default: ResourceFunction) -> Result<ResourceFunction> {
    let mut s = Section::new(root, name)?;
    if !s.present() {
        return Ok(default);
    }
    let family = s
        .string("family")?
        .ok_or_else(|| ConfigError::new(s.path("family"), format!("missing; expected one of {FAMILIES}")))?;
    let f = parse_family(&mut s, family, None)?;
    s.finish()?;
    Ok(f)
}

fn parse_profile(root: &Table, name: &str, default: ProfileSpec, allow_steady: bool) -> Result<ProfileSpec> {
    let mut s = Section::new(root, name)?;
    if !s.present() {
        return Ok(default);
    }
    let family = s.string("family")?.ok_or_else(|| {
        ConfigError::new(s.path("family"), format!("missing; expected one of {FAMILIES}, steady"))
    })?;
    let spec = if family == "steady" {
        if !allow_steady {
            return Err(ConfigError::new(
                s.path("family"),
                "the steady family is only available to pde-sim",
            ));
        }
        let scale = s.req_f64("scale")?;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(ConfigError::new(s.path("scale"), format!("must be finite and >= 0 (got {scale})")));
        }
        ProfileSpec::Steady { scale }
    } else {
        let shape = parse_family(&mut s, family, Some(0.0))?;
        let mass = s.f64("mass")?.map(|m| positive(s.path("mass"), m)).transpose()?;
        let support = match (s.f64("support_lo")?, s.f64("support_hi")?) {
            (None, None) => None,
            (Some(lo), Some(hi)) if lo.is_finite() && hi.is_finite() && lo < hi => Some((lo, hi)),
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(s.path("support_lo"), "must be finite and < support_hi"))
            }
            _ => {
                return Err(ConfigError::new(
                    s.path("support_lo"),
                    "support_lo and support_hi must be given together",
                ))
            }
        };
        let jitter = s.f64("jitter")?.unwrap_or(0.0);
        if !(jitter.is_finite() && jitter >= 0.0) {
            return Err(ConfigError::new(s.path("jitter"), format!("must be finite and >= 0 (got {jitter})")));
        }
        ProfileSpec::Shape {
            shape,
            mass,
            support,
            jitter,
        }
    };
    s.finish()?;
    Ok(spec)
}

fn default_d() -> ResourceFunction {
    ResourceFunction::gaussian(2.0, 1.0, 0.0, 1.0)
}

fn default_profile(center: f64, width: f64, mass: f64) -> ProfileSpec {
    ProfileSpec::Shape {
        shape: ResourceFunction::gaussian(0.0, 1.0, center, width),
        mass: Some(mass),
        support: None,
        jitter: 0.0,
    }
}

fn parse_params(root: &Table, command: Command) -> Result<ParamsSpec> {
    let mut s = Section::new(root, "params")?;
    if !s.present() {
        return Err(ConfigError::new("params", "missing required section"));
    }
    let b = positive(s.path("b"), s.req_f64("b")?)?;
    let c = positive(s.path("c"), s.req_f64("c")?)?;
    let spec = if command.is_lv() {
        let d_bar = positive(s.path("d_bar"), s.req_f64("d_bar")?)?;
        let m_bar = positive(s.path("m_bar"), s.req_f64("m_bar")?)?;
        ParamsSpec::Lv(LvParams { d_bar, m_bar, b, c })
    } else {
        let m_bar = if command == Command::OdeSim {
            Some(positive(s.path("m_bar"), s.req_f64("m_bar")?)?)
        } else {
            None
        };
        if command.is_diffusive() && ((b * c - 1.0).abs() <= phenolv_core::model::SINGULAR_TOLERANCE) {
            return Err(ConfigError::new(
                s.path("c"),
                format!("b c = 1 makes the steady-state mass system singular (b = {b}, c = {c})"),
            ));
        }
        let d = parse_resource(root, "resource_d", default_d())?;
        let m = if command.is_diffusive() {
            Some(parse_resource(root, "resource_m", ResourceFunction::gaussian(2.0, 1.0, 1.0, 1.0))?)
        } else {
            None
        };
        ParamsSpec::Model { b, c, m_bar, d, m }
    };
    s.finish()?;
    Ok(spec)
}

fn parse_grid(root: &Table, command: Command) -> Result<GridSpec> {
    let (lo, hi, n) = if command == Command::OdeSim {
        (-10.0, 10.0, 201)
    } else {
        (-20.0, 20.0, 401)
    };
    let mut s = Section::new(root, "grid")?;
    let x_lo = finite(s.path("x_lo"), s.f64("x_lo")?.unwrap_or(lo))?;
    let x_hi = finite(s.path("x_hi"), s.f64("x_hi")?.unwrap_or(hi))?;
    let n = s.usize("n")?.unwrap_or(n);
    if x_hi <= x_lo {
        return Err(ConfigError::new(s.path("x_hi"), format!("must exceed x_lo (got {x_lo}, {x_hi})")));
    }
    if n < 5 {
        return Err(ConfigError::new(s.path("n"), format!("must be >= 5 (got {n})")));
    }
    s.finish()?;
    Ok(GridSpec { x_lo, x_hi, n })
}

fn parse_tolerances(s: &mut Section, default: Tolerances) -> Result<Tolerances> {
    let rtol = positive(s.path("rtol"), s.f64("rtol")?.unwrap_or(default.rtol))?;
    let atol = positive(s.path("atol"), s.f64("atol")?.unwrap_or(default.atol))?;
    Ok(Tolerances { rtol, atol })
}

fn parse_sim(root: &Table, command: Command, grid: Option<&GridSpec>) -> Result<SimSpec> {
    let mut s = Section::new(root, "sim")?;
    let needs_time = matches!(command, Command::PhasePlane | Command::OdeSim | Command::PdeSim);
    let t_end = match s.f64("t_end")? {
        Some(t) => positive(s.path("t_end"), t)?,
        None if needs_time => return Err(ConfigError::new(s.path("t_end"), "missing required number")),
        None => 0.0,
    };
    let stepped = matches!(command, Command::OdeSim | Command::PdeSim);
    let mut dt = DEFAULT_DT;
    let mut record_every = DEFAULT_RECORD_EVERY;
    let mut eps_conc = 0.0;
    if stepped {
        dt = positive(s.path("dt"), s.f64("dt")?.unwrap_or(DEFAULT_DT))?;
        if dt > t_end {
            return Err(ConfigError::new(s.path("dt"), format!("must not exceed t_end (got {dt} > {t_end})")));
        }
        record_every = s.usize("record_every")?.unwrap_or(DEFAULT_RECORD_EVERY);
        if record_every == 0 {
            return Err(ConfigError::new(s.path("record_every"), "must be >= 1"));
        }
    }
    if command == Command::OdeSim {
        let spacing = grid.map_or(0.1, |g| (g.x_hi - g.x_lo) / (g.n - 1) as f64);
        eps_conc = positive(s.path("eps_conc"), s.f64("eps_conc")?.unwrap_or(3.0 * spacing))?;
    }
    let tol = parse_tolerances(&mut s, Tolerances::default())?;
    s.finish()?;
    Ok(SimSpec {
        dt,
        t_end,
        record_every,
        eps_conc,
        tol,
    })
}

fn parse_starts(root: &Table) -> Result<StartsSpec> {
    let mut s = Section::new(root, "starts")?;
    let mut points = Vec::new();
    if let Some(v) = s.raw("points") {
        let err = || ConfigError::new("starts.points", "expected an array of [Y, X] pairs with Y, X >= 0");
        let arr = v.as_array().ok_or_else(err)?;
        for p in arr {
            let pair = p.as_array().ok_or_else(err)?;
            let xy: Vec<f64> = pair.iter().filter_map(as_f64).collect();
            if pair.len() != 2 || xy.len() != 2 || xy.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(err());
            }
            points.push([xy[0], xy[1]]);
        }
    }
    let random = s.usize("random")?.unwrap_or(DEFAULT_RANDOM_STARTS);
    s.finish()?;
    Ok(StartsSpec { points, random })
}

fn parse_separatrix(root: &Table) -> Result<SeparatrixOptions> {
    let d = SeparatrixOptions::default();
    let mut s = Section::new(root, "separatrix")?;
    let eps = s.f64("eps")?.map(|e| positive(s.path("eps"), e)).transpose()?;
    let t_max = positive(s.path("t_max"), s.f64("t_max")?.unwrap_or(d.t_max))?;
    let max_spacing = positive(s.path("max_spacing"), s.f64("max_spacing")?.unwrap_or(d.max_spacing))?;
    let min_spacing = positive(s.path("min_spacing"), s.f64("min_spacing")?.unwrap_or(d.min_spacing))?;
    if min_spacing > max_spacing {
        return Err(ConfigError::new(s.path("min_spacing"), "must not exceed max_spacing"));
    }
    let tol = parse_tolerances(&mut s, d.tol)?;
    s.finish()?;
    Ok(SeparatrixOptions {
        eps,
        t_max,
        tol,
        max_spacing,
        min_spacing,
    })
}

fn parse_output(root: &Table) -> Result<Option<String>> {
    let mut s = Section::new(root, "output")?;
    let dir = s.string("dir")?.map(str::to_owned);
    s.finish()?;
    Ok(dir)
}

fn parse_sweep(root: &Table) -> Result<SweepSpec> {
    let mut s = Section::new(root, "sweep")?;
    if !s.present() {
        return Err(ConfigError::new("sweep", "missing required section"));
    }
    let command: Command = s
        .string("command")?
        .ok_or_else(|| ConfigError::new("sweep.command", format!("missing; expected one of {}", command_list())))?
        .parse()
        .map_err(|e: ConfigError| ConfigError::new("sweep.command", e.message))?;
    if command == Command::Sweep {
        return Err(ConfigError::new("sweep.command", "sweeps cannot be nested"));
    }
    let axis = s
        .string("axis")?
        .ok_or_else(|| ConfigError::new("sweep.axis", "missing; expected `section.key`"))?
        .to_owned();
    let values = s
        .f64_list("values")?
        .ok_or_else(|| ConfigError::new("sweep.values", "missing array of numbers"))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ConfigError::new("sweep.values", "values must be finite"));
    }
    s.finish()?;

    let mut base = root.clone();
    base.remove("sweep");
    base.remove("output");
    base.insert("command".into(), Value::String(command.name().into()));
    // children patch the resolved table, so the axis must name a numeric key
    // the child command reads
    let resolved = RunConfig::from_table(&base)?.to_table();
    let (section, key) = axis
        .split_once('.')
        .ok_or_else(|| ConfigError::new("sweep.axis", format!("expected `section.key` (got {axis:?})")))?;
    let found = resolved
        .get(section)
        .and_then(Value::as_table)
        .and_then(|t| t.get(key))
        .is_some_and(|v| as_f64(v).is_some());
    if !found {
        return Err(ConfigError::new(
            "sweep.axis",
            format!("{axis:?} is not a numeric parameter of {command}"),
        ));
    }
    Ok(SweepSpec {
        command,
        axis,
        values,
        base: resolved,
    })
}

impl SweepSpec {
    /// Child table with `axis` set to `value`.
    pub fn patched(&self, value: f64, index: usize) -> Table {
        let mut t = self.base.clone();
        let (section, key) = self.axis.split_once('.').expect("axis checked at parse time");
        let sec = t
            .entry(section.to_owned())
            .or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(sec) = sec {
            let as_int = matches!(sec.get(key), Some(Value::Integer(_))) && value.fract() == 0.0;
            let v = if as_int {
                Value::Integer(value as i64)
            } else {
                Value::Float(value)
            };
            sec.insert(key.to_owned(), v);
        }
        let seed = t.get("seed").and_then(Value::as_integer).unwrap_or(0);
        t.insert("seed".into(), Value::Integer(seed.wrapping_add(index as i64)));
        t
    }
}

const TOP_LEVEL: [&str; 13] = [
    "command",
    "seed",
    "params",
    "resource_d",
    "resource_m",
    "grid",
    "initial_u",
    "initial_v",
    "sim",
    "starts",
    "separatrix",
    "sweep",
    "output",
];

fn sections_for(command: Command) -> &'static [&'static str] {
    match command {
        Command::PhasePlane => &["params", "sim", "starts", "separatrix"],
        Command::Separatrix => &["params", "separatrix"],
        Command::OdeSim => &["params", "resource_d", "grid", "initial_u", "initial_v", "sim", "separatrix"],
        Command::PdeSim => &[
            "params",
            "resource_d",
            "resource_m",
            "grid",
            "initial_u",
            "initial_v",
            "sim",
            "separatrix",
        ],
        Command::SteadyState => &["params", "resource_d", "resource_m", "grid"],
        Command::Sweep => &[],
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("", format!("malformed TOML: {}", e.message())))?;
        Self::from_table(&table)
    }

    /// Parses with `command` taken from the command line when the document
    /// does not name one; a conflicting name is an error.
    pub fn parse_for(text: &str, command: Command) -> Result<Self> {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("", format!("malformed TOML: {}", e.message())))?;
        match table.get("command") {
            None => {
                table.insert("command".into(), Value::String(command.name().into()));
            }
            Some(Value::String(s)) if s == command.name() => {}
            Some(other) => {
                return Err(ConfigError::new(
                    "command",
                    format!("config names {other} but the command line asks for {command}"),
                ))
            }
        }
        Self::from_table(&table)
    }

    pub fn from_table(root: &Table) -> Result<Self> {
        let command: Command = match root.get("command") {
            Some(Value::String(s)) => s.parse()?,
            Some(_) => return Err(ConfigError::new("command", "expected a string")),
            None => return Err(ConfigError::new("command", format!("missing; expected one of {}", command_list()))),
        };
        let seed = match root.get("seed") {
            None => 0,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(_) => return Err(ConfigError::new("seed", "expected a non-negative integer")),
        };
        if let Some(k) = root.keys().find(|k| !TOP_LEVEL.contains(&k.as_str())) {
            return Err(ConfigError::new(k.as_str(), "unknown key or section"));
        }
        let output_dir = parse_output(root)?;

        if command == Command::Sweep {
            let sweep = parse_sweep(root)?;
            let child = Self::from_table(&sweep.base)?;
            return Ok(Self {
                command,
                seed,
                sweep: Some(sweep),
                output_dir,
                ..child
            });
        }
        let allowed = sections_for(command);
        for name in TOP_LEVEL.iter().skip(2).filter(|n| **n != "output") {
            if root.contains_key(*name) && !allowed.contains(name) {
                return Err(ConfigError::new(*name, format!("section is not used by {command}")));
            }
        }

        let params = parse_params(root, command)?;
        let grid = if command.is_lv() {
            None
        } else {
            Some(parse_grid(root, command)?)
        };
        let (initial_u, initial_v) = match command {
            Command::OdeSim => (
                Some(parse_profile(root, "initial_u", default_profile(0.0, 2.0, 1.0), false)?),
                Some(parse_profile(root, "initial_v", default_profile(1.0, 3.0, 0.5), false)?),
            ),
            Command::PdeSim => (
                Some(parse_profile(root, "initial_u", default_profile(-1.0, 2.0, 1.0), true)?),
                Some(parse_profile(root, "initial_v", default_profile(2.0, 2.0, 0.5), true)?),
            ),
            _ => (None, None),
        };
        let sim = parse_sim(root, command, grid.as_ref())?;
        let starts = if command == Command::PhasePlane {
            Some(parse_starts(root)?)
        } else {
            None
        };
        let separatrix = parse_separatrix(root)?;
        let cfg = Self {
            command,
            seed,
            params,
            grid,
            initial_u,
            initial_v,
            sim,
            starts,
            separatrix,
            sweep: None,
            output_dir,
        };
        cfg.check_landscapes()?;
        Ok(cfg)
    }

    /// Landscapes must be positive on the grid.
    fn check_landscapes(&self) -> Result<()> {
        let (ParamsSpec::Model { d, m, .. }, Some(g)) = (&self.params, &self.grid) else {
            return Ok(());
        };
        let grid = g.build().map_err(|e| ConfigError::new("grid", e.to_string()))?;
        for (name, f) in [("resource_d", Some(d)), ("resource_m", m.as_ref())] {
            let Some(f) = f else { continue };
            let min = f.sample(&grid).into_iter().fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(ConfigError::new(name, format!("must be positive on the grid (min {min})")));
            }
        }
        for (name, p) in [("initial_u", &self.initial_u), ("initial_v", &self.initial_v)] {
            if let Some(ProfileSpec::Shape { shape, .. }) = p {
                let min = shape.sample(&grid).into_iter().fold(f64::INFINITY, f64::min);
                if min < 0.0 {
                    return Err(ConfigError::new(name, format!("profile must be nonnegative on the grid (min {min})")));
                }
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> Option<ModelParams> {
        match self.params {
            ParamsSpec::Model { b, c, m_bar, d, m } => Some(ModelParams {
                b,
                c,
                // unused by the diffusive model
                m_bar: m_bar.unwrap_or(f64::NAN),
                d,
                m: m.unwrap_or(ResourceFunction::Constant {
                    level: m_bar.unwrap_or(f64::NAN),
                }),
            }),
            ParamsSpec::Lv(_) => None,
        }
    }

    pub fn lv_params(&self) -> Option<LvParams> {
        match self.params {
            ParamsSpec::Lv(p) => Some(p),
            ParamsSpec::Model { .. } => None,
        }
    }

    /// Fully resolved document; every default is explicit.
    pub fn to_table(&self) -> Table {
        let mut root = Table::new();
        root.insert("command".into(), Value::String(self.command.name().into()));
        root.insert("seed".into(), Value::Integer(self.seed as i64));
        if let Some(dir) = &self.output_dir {
            root.insert("output".into(), section([("dir", Value::String(dir.clone()))]));
        }
        if let Some(sw) = &self.sweep {
            root.insert(
                "sweep".into(),
                section([
                    ("command", Value::String(sw.command.name().into())),
                    ("axis", Value::String(sw.axis.clone())),
                    ("values", Value::Array(sw.values.iter().map(|v| Value::Float(*v)).collect())),
                ]),
            );
            let child = Self {
                command: sw.command,
                sweep: None,
                output_dir: None,
                ..self.clone()
            };
            for (k, v) in child.to_table() {
                if k != "command" && k != "seed" {
                    root.insert(k, v);
                }
            }
            return root;
        }

        match self.params {
            ParamsSpec::Lv(p) => {
                root.insert(
                    "params".into(),
                    section([
                        ("d_bar", Value::Float(p.d_bar)),
                        ("m_bar", Value::Float(p.m_bar)),
                        ("b", Value::Float(p.b)),
                        ("c", Value::Float(p.c)),
                    ]),
                );
            }
            ParamsSpec::Model { b, c, m_bar, d, m } => {
                let mut p = section([("b", Value::Float(b)), ("c", Value::Float(c))]);
                if let (Some(mb), Value::Table(t)) = (m_bar, &mut p) {
                    t.insert("m_bar".into(), Value::Float(mb));
                }
                root.insert("params".into(), p);
                root.insert("resource_d".into(), Value::Table(family_table(&d)));
                if let Some(m) = m {
                    root.insert("resource_m".into(), Value::Table(family_table(&m)));
                }
            }
        }
        if let Some(g) = &self.grid {
            root.insert(
                "grid".into(),
                section([
                    ("x_lo", Value::Float(g.x_lo)),
                    ("x_hi", Value::Float(g.x_hi)),
                    ("n", Value::Integer(g.n as i64)),
                ]),
            );
        }
        for (name, p) in [("initial_u", &self.initial_u), ("initial_v", &self.initial_v)] {
            if let Some(p) = p {
                root.insert(name.into(), Value::Table(profile_table(p)));
            }
        }
        let mut sim = Table::new();
        let s = &self.sim;
        match self.command {
            Command::PhasePlane => {
                sim.insert("t_end".into(), Value::Float(s.t_end));
            }
            Command::OdeSim | Command::PdeSim => {
                sim.insert("dt".into(), Value::Float(s.dt));
                sim.insert("t_end".into(), Value::Float(s.t_end));
                sim.insert("record_every".into(), Value::Integer(s.record_every as i64));
                if self.command == Command::OdeSim {
                    sim.insert("eps_conc".into(), Value::Float(s.eps_conc));
                }
            }
            _ => {}
        }
        if matches!(self.command, Command::PhasePlane | Command::OdeSim | Command::PdeSim) {
            sim.insert("rtol".into(), Value::Float(s.tol.rtol));
            sim.insert("atol".into(), Value::Float(s.tol.atol));
            root.insert("sim".into(), Value::Table(sim));
        }
        if let Some(st) = &self.starts {
            let pts = st
                .points
                .iter()
                .map(|p| Value::Array(vec![Value::Float(p[0]), Value::Float(p[1])]))
                .collect();
            root.insert(
                "starts".into(),
                section([("points", Value::Array(pts)), ("random", Value::Integer(st.random as i64))]),
            );
        }
        if self.command != Command::SteadyState {
            let o = &self.separatrix;
            let mut t = Table::new();
            if let Some(e) = o.eps {
                t.insert("eps".into(), Value::Float(e));
            }
            t.insert("t_max".into(), Value::Float(o.t_max));
            t.insert("max_spacing".into(), Value::Float(o.max_spacing));
            t.insert("min_spacing".into(), Value::Float(o.min_spacing));
            t.insert("rtol".into(), Value::Float(o.tol.rtol));
            t.insert("atol".into(), Value::Float(o.tol.atol));
            root.insert("separatrix".into(), Value::Table(t));
        }
        root
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("config tables serialize")
    }
}

fn section<const N: usize>(entries: [(&str, Value); N]) -> Value {
    Value::Table(entries.into_iter().map(|(k, v)| (k.to_owned(), v)).collect())
}

fn family_table(f: &ResourceFunction) -> Table {
    let entries: Vec<(&str, Value)> = match *f {
        ResourceFunction::Constant { level } => vec![("family", "constant".into()), ("level", level.into())],
        ResourceFunction::GaussianBump {
            base,
            amplitude,
            center,
            width,
        } => vec![
            ("family", "gaussian".into()),
            ("base", base.into()),
            ("amplitude", amplitude.into()),
            ("center", center.into()),
            ("width", width.into()),
        ],
        ResourceFunction::CosineBump {
            base,
            amplitude,
            center,
            halfwidth,
        } => vec![
            ("family", "cosine".into()),
            ("base", base.into()),
            ("amplitude", amplitude.into()),
            ("center", center.into()),
            ("halfwidth", halfwidth.into()),
        ],
        ResourceFunction::TwoPeaks {
            base,
            amp1,
            center1,
            width1,
            amp2,
            center2,
            width2,
        } => vec![
            ("family", "two-peaks".into()),
            ("base", base.into()),
            ("amp1", amp1.into()),
            ("center1", center1.into()),
            ("width1", width1.into()),
            ("amp2", amp2.into()),
            ("center2", center2.into()),
            ("width2", width2.into()),
        ],
    };
    entries.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

fn profile_table(p: &ProfileSpec) -> Table {
    match *p {
        ProfileSpec::Steady { scale } => [("family".to_owned(), Value::from("steady")), ("scale".to_owned(), scale.into())]
            .into_iter()
            .collect(),
        ProfileSpec::Shape {
            shape,
            mass,
            support,
            jitter,
        } => {
            let mut t = family_table(&shape);
            if let Some(m) = mass {
                t.insert("mass".into(), m.into());
            }
            if let Some((lo, hi)) = support {
                t.insert("support_lo".into(), lo.into());
                t.insert("support_hi".into(), hi.into());
            }
            t.insert("jitter".into(), jitter.into());
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_ODE: &str = r#"
command = "ode-sim"
[params]
b = 0.5
c = 0.25
m_bar = 1.0
[sim]
t_end = 10.0
"#;

    #[test]
    fn minimal_ode_config_expands_defaults() {
        let cfg = RunConfig::parse(MINIMAL_ODE).unwrap();
        assert_eq!(cfg.sim.dt, 1e-3);
        assert_eq!(cfg.sim.record_every, 100);
        let echo = cfg.to_toml();
        assert!(echo.contains("dt = 0.001"), "{echo}");
        assert!(echo.contains("record_every = 100"), "{echo}");
        assert_eq!(RunConfig::parse(&echo).unwrap(), cfg);
    }

    #[test]
    fn negative_b_names_the_key() {
        let err = RunConfig::parse(&MINIMAL_ODE.replace("b = 0.5", "b = -1")).unwrap_err();
        assert_eq!(err.path, "params.b");
        assert!(err.message.contains("> 0"), "{err}");
    }

    #[test]
    fn singular_steady_state_rejected() {
        let text = "command = \"steady-state\"\n[params]\nb = 2.0\nc = 0.5\n";
        let err = RunConfig::parse(text).unwrap_err();
        assert_eq!(err.path, "params.c");
        assert!(err.message.contains("singular"), "{err}");
    }

    #[test]
    fn unknown_and_missing_keys() {
        let err = RunConfig::parse(&MINIMAL_ODE.replace("m_bar = 1.0", "m_bar = 1.0\nmbar = 2")).unwrap_err();
        assert_eq!(err.path, "params.mbar");
        let err = RunConfig::parse(&MINIMAL_ODE.replace("t_end = 10.0", "")).unwrap_err();
        assert_eq!(err.path, "sim.t_end");
        let err = RunConfig::parse(&format!("{MINIMAL_ODE}[starts]\nrandom = 3\n")).unwrap_err();
        assert_eq!(err.path, "starts");
        let err = RunConfig::parse("command = \"fly\"").unwrap_err();
        assert_eq!(err.path, "command");
    }

    #[test]
    fn nonpositive_landscape_rejected() {
        let text = format!("{MINIMAL_ODE}[resource_d]\nfamily = \"gaussian\"\nbase = -1.0\namplitude = 0.5\ncenter = 0.0\nwidth = 1.0\n");
        assert_eq!(RunConfig::parse(&text).unwrap_err().path, "resource_d");
    }

    #[test]
    fn command_line_and_document_must_agree() {
        assert!(RunConfig::parse_for(MINIMAL_ODE, Command::OdeSim).is_ok());
        assert_eq!(
            RunConfig::parse_for(MINIMAL_ODE, Command::PdeSim).unwrap_err().path,
            "command"
        );
        let bare = MINIMAL_ODE.replace("command = \"ode-sim\"", "");
        assert_eq!(RunConfig::parse_for(&bare, Command::OdeSim).unwrap().command, Command::OdeSim);
    }

    #[test]
    fn sweep_axis_must_exist() {
        let text = format!("{}\n[sweep]\ncommand = \"ode-sim\"\naxis = \"params.q\"\nvalues = [0.1]\n", MINIMAL_ODE.replace("ode-sim", "sweep"));
        assert_eq!(RunConfig::parse(&text).unwrap_err().path, "sweep.axis");
        let ok = text.replace("params.q", "params.c");
        let cfg = RunConfig::parse(&ok).unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        let child = cfg.sweep.as_ref().unwrap().patched(0.4, 2);
        let child = RunConfig::from_table(&child).unwrap();
        assert_eq!(child.command, Command::OdeSim);
        assert_eq!(child.seed, 2);
        assert!(matches!(child.params, ParamsSpec::Model { c, .. } if c == 0.4));
    }

    #[test]
    fn integer_axis_stays_integer() {
        let text = format!("{}\n[sweep]\ncommand = \"ode-sim\"\naxis = \"grid.n\"\nvalues = [101]\n[grid]\nn = 201\n", MINIMAL_ODE.replace("ode-sim", "sweep"));
        let cfg = RunConfig::parse(&text).unwrap();
        let child = RunConfig::from_table(&cfg.sweep.unwrap().patched(101.0, 0)).unwrap();
        assert_eq!(child.grid.unwrap().n, 101);
    }
}
