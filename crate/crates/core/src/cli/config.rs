//! Line-oriented run configuration.
//!
//! ```text
//! # comments start with '#'
//! scenario = fig2            # optional preset; explicit keys override it
//! mode = conserving          # or literal
//!
//! [system]
//! gamma3 = 5.75 MHz_x2pi
//! omega_pr = 0.05 gamma3
//! ...
//! ```
//!
//! Sections: `[system]`, `[cell]`, `[buffer]`, `[spectrum]`, `[evolve]`,
//! `[output]`. Physical values always carry a unit from [`super::units`].
//! A rate comes either from a direct key (`w12`, `r34`, `r43`) or from the
//! `[cell]` / `[buffer]` description, never from both.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use super::presets::{preset_text, PRESET_NAMES};
use super::units::{format_si, parse_quantity, Dimension};
use crate::error::Error;
use crate::liouville::{EvolveControls, GeneratorMode};
use crate::params::{
    linear_grid, DopplerNormalization, QuadratureRule, SpectrumParams, SystemParams, DEFAULT_MAX_NODES,
    DEFAULT_QUADRATURE_NODES, LAMBDA_D1, LAMBDA_D2,
};
use crate::rates::{
    collisional_transfer_rates, ideal_gas_density, most_probable_speed, wall_relaxation_with, BufferGasSpec, CellSpec,
    MASS_RB85,
};

/// A config problem, with the offending line when there is one.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellConfig {
    pub spec: CellSpec,
    /// Keep the 2π in W12 = 2π·v̄S/(4V).
    pub wall_two_pi: bool,
}

impl CellConfig {
    pub fn w12(&self) -> f64 {
        wall_relaxation_with(&self.spec, self.wall_two_pi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BufferConfig {
    pub gas: BufferGasSpec,
    /// Gas temperature, K. Also used for the pressure to density conversion.
    pub temperature: f64,
    /// Mass of the absorbing atom, kg.
    pub atom_mass: f64,
}

impl BufferConfig {
    pub fn rates(&self) -> (f64, f64) {
        collisional_transfer_rates(&self.gas, self.temperature, self.atom_mass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumConfig {
    pub number_density: f64,
    pub path_length: f64,
    pub detuning_start: f64,
    pub detuning_end: f64,
    pub points: usize,
    pub quadrature_nodes: usize,
    pub max_nodes: usize,
    pub rule: QuadratureRule,
    pub normalization: DopplerNormalization,
}

impl SpectrumConfig {
    pub fn params(&self) -> SpectrumParams {
        SpectrumParams {
            quadrature_nodes: self.quadrature_nodes,
            max_nodes: self.max_nodes,
            rule: self.rule,
            normalization: self.normalization,
            ..SpectrumParams::new(
                self.number_density,
                self.path_length,
                linear_grid(self.detuning_start, self.detuning_end, self.points),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveConfig {
    /// s
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    /// Number of output intervals; rows are written at most every t_end/samples.
    pub samples: usize,
}

impl EvolveConfig {
    pub fn controls(&self) -> EvolveControls {
        EvolveControls {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            sample_interval: Some(self.t_end / self.samples as f64),
            ..EvolveControls::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
    pub plot: bool,
}

/// Fully resolved configuration. All rates are final rad/s values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub mode: GeneratorMode,
    pub system: SystemParams,
    /// Present when the cell geometry supplies W12.
    pub cell: Option<CellConfig>,
    /// Present when the buffer gas supplies r34 and r43.
    pub buffer: Option<BufferConfig>,
    pub spectrum: Option<SpectrumConfig>,
    pub evolve: Option<EvolveConfig>,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Advisory notes that do not stop a run.
    pub fn warnings(&self) -> Vec<String> {
        self.buffer.map(|b| b.gas.sanity_warnings()).unwrap_or_default()
    }
}

const SECTIONS: [(&str, &[&str]); 7] = [
    ("", &["scenario", "mode"]),
    (
        "system",
        &[
            "gamma3",
            "gamma4",
            "omega_pr",
            "omega_pu",
            "delta_pr",
            "delta_pu",
            "delta_hfs",
            "w12",
            "r34",
            "r43",
            "lambda_pr",
            "lambda_pu",
            "u",
            "gamma_laser",
        ],
    ),
    ("cell", &["length", "width", "thickness", "temperature", "atom_mass", "wall_two_pi"]),
    (
        "buffer",
        &["table", "number_density", "pressure", "sigma1", "sigma2", "molecule_mass", "temperature", "atom_mass"],
    ),
    (
        "spectrum",
        &[
            "number_density",
            "path_length",
            "detuning_start",
            "detuning_end",
            "points",
            "quadrature_nodes",
            "max_nodes",
            "rule",
            "normalization",
        ],
    ),
    ("evolve", &["t_end", "rel_tol", "abs_tol", "max_step", "samples"]),
    ("output", &["path", "format", "plot"]),
];

/// Keys that describe the same quantity in different ways. Setting one in the
/// user document replaces the preset's value of the others.
const ALTERNATIVES: [(&str, &[&str]); 1] = [("buffer", &["number_density", "pressure"])];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

type Key = (&'static str, &'static str);

#[derive(Debug, Default)]
struct Document {
    entries: BTreeMap<Key, Entry>,
}

impl Document {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        let mut section: &'static str = "";
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(Some(line), format!("malformed section header `{content}`")))?
                    .trim();
                section = SECTIONS
                    .iter()
                    .skip(1)
                    .map(|(s, _)| *s)
                    .find(|s| *s == name)
                    .ok_or_else(|| {
                        let known: Vec<_> = SECTIONS.iter().skip(1).map(|(s, _)| format!("[{s}]")).collect();
                        err(Some(line), format!("unknown section `[{name}]`; expected one of {}", known.join(", ")))
                    })?;
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(Some(line), format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let known = SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
            let key = *known.iter().find(|k| **k == key).ok_or_else(|| {
                let place = if section.is_empty() { "at top level".to_string() } else { format!("in [{section}]") };
                err(Some(line), format!("unknown key `{key}` {place}; expected one of {}", known.join(", ")))
            })?;
            if value.is_empty() {
                return Err(err(Some(line), format!("`{key}` has no value")));
            }
            if let Some(previous) = doc.entries.get(&(section, key)) {
                return Err(err(Some(line), format!("`{key}` already set on line {}", previous.line)));
            }
            doc.entries.insert((section, key), Entry { value: value.to_string(), line });
        }
        Ok(doc)
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.keys().any(|(s, _)| *s == section)
    }

    fn line_of(&self, key: Key) -> Option<usize> {
        self.entries.get(&key).map(|e| e.line)
    }

    fn remove_section(&mut self, section: &str) {
        self.entries.retain(|(s, _), _| *s != section);
    }
}

/// Merged view of preset and user entries. Errors point at user lines only;
/// preset values are reported by preset name.
struct Resolver<'a> {
    user: &'a Document,
    merged: BTreeMap<Key, Entry>,
    preset: Option<&'a str>,
    missing: Vec<String>,
}

impl Resolver<'_> {
    fn entry(&self, key: Key) -> Option<&Entry> {
        self.merged.get(&key)
    }

    fn locate(&self, key: Key) -> Option<usize> {
        self.user.line_of(key)
    }

    fn fail(&self, key: Key, message: impl fmt::Display) -> ConfigError {
        let (section, name) = key;
        let label = if section.is_empty() { name.to_string() } else { format!("{section}.{name}") };
        match (self.locate(key), self.preset) {
            (Some(line), _) => err(Some(line), format!("{label}: {message}")),
            (None, Some(p)) => err(None, format!("{label} (from preset {p}): {message}")),
            (None, None) => err(None, format!("{label}: {message}")),
        }
    }

    fn quantity(&self, key: Key, dim: Dimension, gamma3: Option<f64>) -> Result<Option<f64>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => parse_quantity(&e.value, dim, gamma3).map(Some).map_err(|m| self.fail(key, m)),
        }
    }

    fn required(&mut self, key: Key, dim: Dimension, gamma3: Option<f64>) -> Result<f64, ConfigError> {
        self.required_or(key, dim, gamma3, "")
    }

    fn required_or(&mut self, key: Key, dim: Dimension, gamma3: Option<f64>, hint: &str) -> Result<f64, ConfigError> {
        match self.quantity(key, dim, gamma3)? {
            Some(v) => Ok(v),
            None => {
                self.missing.push(format!("{}.{}{hint}", key.0, key.1));
                Ok(f64::NAN)
            }
        }
    }

    fn plain<T: std::str::FromStr>(&self, key: Key, what: &str) -> Result<Option<T>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| self.fail(key, format!("expected {what}, got `{}`", e.value))),
        }
    }

    fn choice<T: Copy>(&self, key: Key, options: &[(&str, T)]) -> Result<Option<T>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => options.iter().find(|(name, _)| *name == e.value).map(|(_, v)| Some(*v)).ok_or_else(|| {
                let names: Vec<_> = options.iter().map(|(n, _)| *n).collect();
                self.fail(key, format!("`{}` is not one of {}", e.value, names.join(", ")))
            }),
        }
    }
}

const BOOLS: [(&str, bool); 2] = [("true", true), ("false", false)];

/// Parses and fully resolves a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let user = Document::parse(text)?;

    let scenario = user.entries.get(&("", "scenario")).map(|e| (e.value.clone(), e.line));
    let (scenario, mut base) = match scenario {
        None => ("custom".to_string(), Document::default()),
        Some((name, _)) if name == "custom" => (name, Document::default()),
        Some((name, line)) => {
            let text = preset_text(&name).ok_or_else(|| {
                err(Some(line), format!("unknown scenario `{name}`; expected custom or one of {}", PRESET_NAMES.join(", ")))
            })?;
            let base = Document::parse(&text).map_err(|e| err(None, format!("preset {name} is malformed: {e}")))?;
            (name, base)
        }
    };

    // A rate source written by the user must not be contradicted by another
    // source in the same document; against a preset it simply takes over.
    let direct_w12 = user.line_of(("system", "w12"));
    if let (Some(line), true) = (direct_w12, user.has_section("cell")) {
        return Err(err(Some(line), "w12 is given directly and also derived from the [cell] section; remove one"));
    }
    let direct_transfer = user.line_of(("system", "r34")).or(user.line_of(("system", "r43")));
    if let (Some(line), true) = (direct_transfer, user.has_section("buffer")) {
        return Err(err(Some(line), "r34/r43 are given directly and also derived from the [buffer] section; remove one"));
    }
    // The preset cell still provides defaults (u, buffer temperature) after
    // losing its role as the W12 source.
    let defaults_doc = {
        let mut d = Document::default();
        for (k, e) in base.entries.iter().chain(user.entries.iter()) {
            if k.0 == "cell" {
                d.entries.insert(*k, e.clone());
            }
        }
        d
    };
    if direct_w12.is_some() {
        base.remove_section("cell");
    }
    if user.has_section("cell") {
        base.entries.remove(&("system", "w12"));
    }
    if direct_transfer.is_some() {
        base.remove_section("buffer");
    }
    if user.has_section("buffer") {
        base.entries.remove(&("system", "r34"));
        base.entries.remove(&("system", "r43"));
    }
    for (section, group) in ALTERNATIVES {
        if group.iter().any(|k| user.entries.contains_key(&(section, *k))) {
            for k in group {
                base.entries.remove(&(section, *k));
            }
        }
    }

    let mut merged = base.entries;
    merged.extend(user.entries.iter().map(|(k, e)| (*k, e.clone())));
    let preset_label = if scenario == "custom" { None } else { Some(scenario.as_str()) };
    let mut r = Resolver { user: &user, merged, preset: preset_label, missing: Vec::new() };

    let mode = r
        .choice(("", "mode"), &[("conserving", GeneratorMode::TraceConserving), ("literal", GeneratorMode::PaperLiteral)])?
        .unwrap_or_default();

    // Cell, used both as a rate source and for defaults.
    let resolve_cell = |r: &mut Resolver, present: bool| -> Result<Option<CellConfig>, ConfigError> {
        if !present {
            return Ok(None);
        }
        let spec = CellSpec {
            length: r.required(("cell", "length"), Dimension::Length, None)?,
            width: r.required(("cell", "width"), Dimension::Length, None)?,
            thickness: r.required(("cell", "thickness"), Dimension::Length, None)?,
            temperature: r.required(("cell", "temperature"), Dimension::Temperature, None)?,
            atom_mass: r.quantity(("cell", "atom_mass"), Dimension::Mass, None)?.unwrap_or(MASS_RB85),
        };
        let wall_two_pi = r.choice(("cell", "wall_two_pi"), &BOOLS)?.unwrap_or(true);
        if r.missing.is_empty() {
            spec.validate().map_err(|e| r.fail(("cell", field_of(&e)), e))?;
        }
        Ok(Some(CellConfig { spec, wall_two_pi }))
    };
    let cell_active = r.merged.keys().any(|(s, _)| *s == "cell");
    let cell = resolve_cell(&mut r, cell_active)?;
    let defaults_cell = match cell {
        Some(c) => Some(c),
        None if defaults_doc.has_section("cell") => {
            let mut d = Resolver { user: &user, merged: defaults_doc.entries.clone(), preset: r.preset, missing: Vec::new() };
            resolve_cell(&mut d, true)?.filter(|_| d.missing.is_empty())
        }
        None => None,
    };

    let buffer = if r.merged.keys().any(|(s, _)| *s == "buffer") {
        let table = r.choice(
            ("buffer", "table"),
            &[
                ("h2_330k", BufferGasSpec::h2(1.0)),
                ("h2_340k", BufferGasSpec::h2_340k(1.0)),
                ("h2_1720k", BufferGasSpec::h2_1720k(1.0)),
            ],
        )?;
        let sigma1 = r.quantity(("buffer", "sigma1"), Dimension::Area, None)?.or(table.map(|t| t.sigma1));
        let sigma2 = r.quantity(("buffer", "sigma2"), Dimension::Area, None)?.or(table.map(|t| t.sigma2));
        let molecule_mass =
            r.quantity(("buffer", "molecule_mass"), Dimension::Mass, None)?.or(table.map(|t| t.molecule_mass));
        let temperature = r
            .quantity(("buffer", "temperature"), Dimension::Temperature, None)?
            .or(defaults_cell.map(|c| c.spec.temperature));
        let atom_mass = r
            .quantity(("buffer", "atom_mass"), Dimension::Mass, None)?
            .or(defaults_cell.map(|c| c.spec.atom_mass))
            .unwrap_or(MASS_RB85);
        let density = r.quantity(("buffer", "number_density"), Dimension::NumberDensity, None)?;
        let pressure = r.quantity(("buffer", "pressure"), Dimension::Pressure, None)?;
        if density.is_some() && pressure.is_some() {
            return Err(r.fail(("buffer", "pressure"), "give either number_density or pressure, not both"));
        }
        let mut need = |value: Option<f64>, name: &str| {
            value.unwrap_or_else(|| {
                r.missing.push(format!("buffer.{name}"));
                f64::NAN
            })
        };
        let sigma1 = need(sigma1, "sigma1 (or buffer.table)");
        let sigma2 = need(sigma2, "sigma2 (or buffer.table)");
        let molecule_mass = need(molecule_mass, "molecule_mass (or buffer.table)");
        let temperature = need(temperature, "temperature (or a [cell] section)");
        let number_density = match (density, pressure) {
            (Some(n), _) => n,
            (None, Some(p)) => ideal_gas_density(p, temperature),
            (None, None) => need(None, "number_density (or buffer.pressure)"),
        };
        let gas = BufferGasSpec { number_density, sigma1, sigma2, molecule_mass };
        if r.missing.is_empty() {
            gas.validate().map_err(|e| r.fail(("buffer", field_of(&e)), e))?;
            if !(temperature > 0.0) {
                return Err(r.fail(("buffer", "temperature"), "must be > 0 K"));
            }
        }
        Some(BufferConfig { gas, temperature, atom_mass })
    } else {
        None
    };

    let gamma3 = r.required(("system", "gamma3"), Dimension::AngularRate, None)?;
    let g3 = gamma3.is_finite().then_some(gamma3);
    let rate = |r: &Resolver, key: &'static str, default: f64| -> Result<f64, ConfigError> {
        Ok(r.quantity(("system", key), Dimension::AngularRate, g3)?.unwrap_or(default))
    };
    let omega_pr = r.required(("system", "omega_pr"), Dimension::AngularRate, g3)?;
    let omega_pu = r.required(("system", "omega_pu"), Dimension::AngularRate, g3)?;
    let w12 = match cell {
        Some(c) => c.w12(),
        None => r.required_or(("system", "w12"), Dimension::AngularRate, g3, " (or a [cell] section)")?,
    };
    let (r34, r43) = match buffer {
        Some(b) if r.missing.is_empty() => b.rates(),
        Some(_) => (f64::NAN, f64::NAN),
        None => (
            r.required_or(("system", "r34"), Dimension::AngularRate, g3, " (or a [buffer] section)")?,
            r.required_or(("system", "r43"), Dimension::AngularRate, g3, " (or a [buffer] section)")?,
        ),
    };
    let u = match r.quantity(("system", "u"), Dimension::Speed, None)? {
        Some(u) => u,
        None => defaults_cell.map(|c| most_probable_speed(c.spec.temperature, c.spec.atom_mass)).unwrap_or(0.0),
    };
    let system = SystemParams {
        omega_pr,
        omega_pu,
        delta_pr: rate(&r, "delta_pr", 0.0)?,
        delta_pu: rate(&r, "delta_pu", 0.0)?,
        delta_hfs: rate(&r, "delta_hfs", 0.0)?,
        gamma3,
        gamma4: rate(&r, "gamma4", gamma3)?,
        w12,
        r34,
        r43,
        lambda_pr: r.quantity(("system", "lambda_pr"), Dimension::Length, None)?.unwrap_or(LAMBDA_D1),
        lambda_pu: r.quantity(("system", "lambda_pu"), Dimension::Length, None)?.unwrap_or(LAMBDA_D2),
        u,
        gamma_laser: rate(&r, "gamma_laser", 0.0)?,
    };

    let spectrum = if r.merged.keys().any(|(s, _)| *s == "spectrum") {
        let s = SpectrumConfig {
            number_density: r.required(("spectrum", "number_density"), Dimension::NumberDensity, None)?,
            path_length: r.required(("spectrum", "path_length"), Dimension::Length, None)?,
            detuning_start: r.required(("spectrum", "detuning_start"), Dimension::AngularRate, g3)?,
            detuning_end: r.required(("spectrum", "detuning_end"), Dimension::AngularRate, g3)?,
            points: r.plain(("spectrum", "points"), "an integer")?.unwrap_or_else(|| {
                r.missing.push("spectrum.points".into());
                0
            }),
            quadrature_nodes: r.plain(("spectrum", "quadrature_nodes"), "an integer")?.unwrap_or(DEFAULT_QUADRATURE_NODES),
            max_nodes: r.plain(("spectrum", "max_nodes"), "an integer")?.unwrap_or(DEFAULT_MAX_NODES),
            rule: r
                .choice(
                    ("spectrum", "rule"),
                    &[("trapezoid", QuadratureRule::Trapezoid), ("gauss_hermite", QuadratureRule::GaussHermite)],
                )?
                .unwrap_or(QuadratureRule::Trapezoid),
            normalization: r
                .choice(
                    ("spectrum", "normalization"),
                    &[
                        ("normalized", DopplerNormalization::Normalized),
                        ("literal_integral", DopplerNormalization::LiteralIntegral),
                    ],
                )?
                .unwrap_or(DopplerNormalization::Normalized),
        };
        Some(s)
    } else {
        None
    };

    let evolve = if r.merged.keys().any(|(s, _)| *s == "evolve") {
        let defaults = EvolveControls::default();
        let e = EvolveConfig {
            t_end: r.required(("evolve", "t_end"), Dimension::Time, None)?,
            rel_tol: r.plain(("evolve", "rel_tol"), "a number")?.unwrap_or(defaults.rel_tol),
            abs_tol: r.plain(("evolve", "abs_tol"), "a number")?.unwrap_or(defaults.abs_tol),
            max_step: r.quantity(("evolve", "max_step"), Dimension::Time, None)?,
            samples: r.plain(("evolve", "samples"), "an integer")?.unwrap_or(1000),
        };
        Some(e)
    } else {
        None
    };

    let output = OutputConfig {
        path: r.entry(("output", "path")).map(|e| PathBuf::from(&e.value)),
        format: r
            .choice(("output", "format"), &[("csv", OutputFormat::Csv), ("json", OutputFormat::Json)])?
            .unwrap_or_default(),
        plot: r.choice(("output", "plot"), &BOOLS)?.unwrap_or(false),
    };

    if !r.missing.is_empty() {
        let mut message = format!("missing required keys: {}", r.missing.join(", "));
        if scenario == "custom" {
            message.push_str(&format!("; or set `scenario` to one of {}", PRESET_NAMES.join(", ")));
        }
        return Err(err(None, message));
    }

    system.validate().map_err(|e| r.fail(("system", field_of(&e)), e))?;
    if let Some(s) = &spectrum {
        if s.points < 2 {
            return Err(r.fail(("spectrum", "points"), "need at least 2 grid points"));
        }
        s.params().validate().map_err(|e| r.fail(("spectrum", field_of(&e)), e))?;
    }
    if let Some(e) = &evolve {
        if !(e.t_end.is_finite() && e.t_end > 0.0) {
            return Err(r.fail(("evolve", "t_end"), "must be > 0"));
        }
        if e.samples == 0 {
            return Err(r.fail(("evolve", "samples"), "must be at least 1"));
        }
        for (key, v) in [("rel_tol", e.rel_tol), ("abs_tol", e.abs_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(r.fail(("evolve", key), "must be > 0"));
            }
        }
        if let Some(h) = e.max_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(r.fail(("evolve", "max_step"), "must be > 0"));
            }
        }
    }

    Ok(RunConfig { scenario, mode, system, cell, buffer, spectrum, evolve, output })
}

/// The field named by a library validation error.
fn field_of(e: &Error) -> &'static str {
    match e {
        Error::InvalidParam { field, .. } => field,
        _ => "?",
    }
}

/// Writes a config that [`parse_config`] maps back to exactly `config`.
pub fn serialize(config: &RunConfig) -> String {
    use Dimension::*;
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    let q = |v: f64, d: Dimension| format_si(v, d);

    line(format!("scenario = {}", config.scenario));
    line(format!(
        "mode = {}",
        match config.mode {
            GeneratorMode::TraceConserving => "conserving",
            GeneratorMode::PaperLiteral => "literal",
        }
    ));

    let s = &config.system;
    line(String::new());
    line("[system]".into());
    line(format!("gamma3 = {}", q(s.gamma3, AngularRate)));
    line(format!("gamma4 = {}", q(s.gamma4, AngularRate)));
    line(format!("omega_pr = {}", q(s.omega_pr, AngularRate)));
    line(format!("omega_pu = {}", q(s.omega_pu, AngularRate)));
    line(format!("delta_pr = {}", q(s.delta_pr, AngularRate)));
    line(format!("delta_pu = {}", q(s.delta_pu, AngularRate)));
    line(format!("delta_hfs = {}", q(s.delta_hfs, AngularRate)));
    if config.cell.is_none() {
        line(format!("w12 = {}", q(s.w12, AngularRate)));
    }
    if config.buffer.is_none() {
        line(format!("r34 = {}", q(s.r34, AngularRate)));
        line(format!("r43 = {}", q(s.r43, AngularRate)));
    }
    line(format!("lambda_pr = {}", q(s.lambda_pr, Length)));
    line(format!("lambda_pu = {}", q(s.lambda_pu, Length)));
    line(format!("u = {}", q(s.u, Speed)));
    line(format!("gamma_laser = {}", q(s.gamma_laser, AngularRate)));

    if let Some(c) = &config.cell {
        line(String::new());
        line("[cell]".into());
        line(format!("length = {}", q(c.spec.length, Length)));
        line(format!("width = {}", q(c.spec.width, Length)));
        line(format!("thickness = {}", q(c.spec.thickness, Length)));
        line(format!("temperature = {}", q(c.spec.temperature, Temperature)));
        line(format!("atom_mass = {}", q(c.spec.atom_mass, Mass)));
        line(format!("wall_two_pi = {}", c.wall_two_pi));
    }
    if let Some(b) = &config.buffer {
        line(String::new());
        line("[buffer]".into());
        line(format!("number_density = {}", q(b.gas.number_density, NumberDensity)));
        line(format!("sigma1 = {}", q(b.gas.sigma1, Area)));
        line(format!("sigma2 = {}", q(b.gas.sigma2, Area)));
        line(format!("molecule_mass = {}", q(b.gas.molecule_mass, Mass)));
        line(format!("temperature = {}", q(b.temperature, Temperature)));
        line(format!("atom_mass = {}", q(b.atom_mass, Mass)));
    }
    if let Some(sp) = &config.spectrum {
        line(String::new());
        line("[spectrum]".into());
        line(format!("number_density = {}", q(sp.number_density, NumberDensity)));
        line(format!("path_length = {}", q(sp.path_length, Length)));
        line(format!("detuning_start = {}", q(sp.detuning_start, AngularRate)));
        line(format!("detuning_end = {}", q(sp.detuning_end, AngularRate)));
        line(format!("points = {}", sp.points));
        line(format!("quadrature_nodes = {}", sp.quadrature_nodes));
        line(format!("max_nodes = {}", sp.max_nodes));
        line(format!(
            "rule = {}",
            match sp.rule {
                QuadratureRule::Trapezoid => "trapezoid",
                QuadratureRule::GaussHermite => "gauss_hermite",
            }
        ));
        line(format!(
            "normalization = {}",
            match sp.normalization {
                DopplerNormalization::Normalized => "normalized",
                DopplerNormalization::LiteralIntegral => "literal_integral",
            }
        ));
    }
    if let Some(e) = &config.evolve {
        line(String::new());
        line("[evolve]".into());
        line(format!("t_end = {}", q(e.t_end, Time)));
        line(format!("rel_tol = {:e}", e.rel_tol));
        line(format!("abs_tol = {:e}", e.abs_tol));
        if let Some(h) = e.max_step {
            line(format!("max_step = {}", q(h, Time)));
        }
        line(format!("samples = {}", e.samples));
    }
    line(String::new());
    line("[output]".into());
    if let Some(p) = &config.output.path {
        line(format!("path = {}", p.display()));
    }
    line(format!("format = {}", config.output.format.name()));
    line(format!("plot = {}", config.output.plot));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{wall_relaxation, TORR};
    use std::f64::consts::PI;

    const G3: f64 = 2.0 * PI * 5.75e6;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn fig2_preset_expands_to_caption_values() {
        let c = parse_config("scenario = fig2").unwrap();
        let s = c.system;
        assert!(close(s.gamma3, G3));
        assert!(close(s.gamma4, G3));
        assert!(close(s.omega_pr, 0.05 * G3));
        assert!(close(s.omega_pu, 60.0 * G3));
        assert!(close(s.w12, 0.5 * G3));
        assert!(close(s.r34, 2.0 * G3) && close(s.r43, 2.0 * G3));
        assert_eq!((s.delta_pr, s.delta_pu, s.delta_hfs, s.gamma_laser), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(c.mode, GeneratorMode::TraceConserving);
        assert!(c.cell.is_none() && c.buffer.is_none());
    }

    #[test]
    fn fig3_is_fig2_without_walls() {
        let a = parse_config("scenario = fig2").unwrap().system;
        let b = parse_config("scenario = fig3").unwrap().system;
        assert_eq!(b.w12, 0.0);
        assert_eq!(SystemParams { w12: a.w12, ..b }, a);
    }

    #[test]
    fn empty_document_lists_required_keys() {
        let e = parse_config("").unwrap_err();
        for key in ["system.gamma3", "system.omega_pr", "system.omega_pu", "system.w12", "system.r34", "system.r43"] {
            assert!(e.message.contains(key), "{e}");
        }
        assert!(e.message.contains("scenario"));
    }

    #[test]
    fn unknown_keys_and_sections_are_errors_with_lines() {
        let e = parse_config("scenario = fig2\n\n[system]\nomega = 3 rad/s\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("unknown key `omega`"));
        let e = parse_config("[sytem]\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = parse_config("scenario = fig9").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = parse_config("scenario = fig2\n[system]\nu = 3 m/s\nu = 4 m/s").unwrap_err();
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn unit_mismatch_names_the_dimension() {
        let e = parse_config("scenario = fig2\n[system]\nomega_pr = 3 um\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("angular rate"), "{e}");
        let e = parse_config("scenario = fig2\n[system]\nomega_pr = 3\n").unwrap_err();
        assert!(e.message.contains("missing unit"), "{e}");
    }

    #[test]
    fn direct_and_geometry_rates_conflict() {
        let text = "scenario = fig2\n[system]\nw12 = 1 gamma3\n[cell]\nlength = 2 mm\nwidth = 2 mm\nthickness = 30 um\ntemperature = 473 K\n";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.line, Some(3));
        let text = "scenario = fig2\n[system]\nr34 = 1 gamma3\n[buffer]\ntable = h2_330k\npressure = 8 Torr\ntemperature = 330 K\n";
        assert_eq!(parse_config(text).unwrap_err().line, Some(3));
    }

    #[test]
    fn geometry_overrides_a_preset_rate() {
        let text = "scenario = fig2\n[cell]\nlength = 2 mm\nwidth = 2 mm\nthickness = 30 um\ntemperature = 473 K\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.system.w12, wall_relaxation(&c.cell.unwrap().spec));
    }

    #[test]
    fn rb85_cell_derives_its_rates() {
        let c = parse_config("scenario = rb85_cell").unwrap();
        let cell = c.cell.unwrap();
        assert_eq!(cell.spec.temperature, 523.15);
        assert_eq!(c.system.w12, wall_relaxation(&cell.spec));
        let buffer = c.buffer.unwrap();
        assert_eq!(buffer.gas.number_density, 8.0 * TORR / (crate::rates::K_B * 523.15));
        assert_eq!((c.system.r34, c.system.r43), buffer.rates());
        assert_eq!(c.system.u, most_probable_speed(523.15, MASS_RB85));
        assert_eq!(c.spectrum.as_ref().unwrap().number_density, 3.05e20);
        assert!(c.warnings().is_empty());
    }

    #[test]
    fn direct_rate_replaces_preset_cell() {
        let c = parse_config("scenario = rb85_cell\n[system]\nw12 = 0.25 gamma3\n").unwrap();
        assert!(c.cell.is_none());
        assert!(close(c.system.w12, 0.25 * G3));
        // The dropped cell still sets the Doppler width and gas temperature.
        assert_eq!(c.system.u, most_probable_speed(523.15, MASS_RB85));
        assert_eq!(c.buffer.unwrap().temperature, 523.15);
    }

    #[test]
    fn serialization_round_trips() {
        let mut configs: Vec<RunConfig> =
            PRESET_NAMES.iter().map(|n| parse_config(&format!("scenario = {n}")).unwrap()).collect();
        configs.push(parse_config("scenario = rb85_cell\nmode = literal\n[system]\nw12 = 0.3 gamma3\n").unwrap());
        configs.push(
            parse_config("scenario = fig4_walls\n[spectrum]\nrule = gauss_hermite\n[output]\npath = out.csv\nformat = json\nplot = true\n")
                .unwrap(),
        );
        configs.push(
            parse_config(
                "[system]\ngamma3 = 1e7 rad/s\nomega_pr = 1 kHz_x2pi\nomega_pu = 2 GHz_x2pi\nw12 = 0 rad/s\nr34 = 1 gamma3\nr43 = 3 gamma3\ndelta_hfs = 3.035 GHz_x2pi\n[evolve]\nt_end = 3 us\nmax_step = 1 ns\n",
            )
            .unwrap(),
        );
        for c in configs {
            let text = serialize(&c);
            assert_eq!(parse_config(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn spectrum_settings() {
        let c = parse_config("scenario = fig4_walls").unwrap();
        let sp = c.spectrum.unwrap().params();
        assert_eq!(sp.detuning_grid.len(), 201);
        assert!(close(sp.detuning_grid[0], -2.0 * PI * 2e9));
        assert!(close(sp.detuning_grid[200], 2.0 * PI * 2e9));
        assert_eq!(sp.quadrature_nodes, 64);
        let e = parse_config("scenario = fig4_walls\n[spectrum]\npoints = 1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = parse_config("scenario = fig4_walls\n[spectrum]\nrule = simpson\n").unwrap_err();
        assert!(e.message.contains("trapezoid"));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let a = parse_config("# header\nscenario = fig2   # trailing\n\n   \n[system] # sect\nu = 0 m/s\n").unwrap();
        assert_eq!(a.system.u, 0.0);
    }

    #[test]
    fn cross_section_slip_is_flagged() {
        let c = parse_config(
            "scenario = fig2\n[buffer]\nsigma1 = 10 m2\nsigma2 = 13.9e-20 m2\nmolecule_mass = 2 amu\nnumber_density = 1e23 m^-3\ntemperature = 330 K\n",
        )
        .unwrap();
        assert_eq!(c.warnings().len(), 1);
    }
}
