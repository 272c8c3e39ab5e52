//! Unit-suffixed quantities in config files.
//!
//! Every physical value is written as `<number> <unit>`. The table below is the
//! complete list of accepted suffixes; anything else is rejected with the
//! dimension that was expected.
//!
//! | dimension      | suffixes                                              |
//! |----------------|-------------------------------------------------------|
//! | angular rate   | `rad/s`, `Hz_x2pi`, `kHz_x2pi`, `MHz_x2pi`, `GHz_x2pi`, `gamma3` |
//! | length         | `m`, `cm`, `mm`, `um`, `nm`                            |
//! | speed          | `m/s`                                                 |
//! | temperature    | `K`, `C`                                              |
//! | mass           | `kg`, `amu`                                           |
//! | area           | `m2`, `cm2`                                           |
//! | number density | `m^-3`, `cm^-3`                                       |
//! | pressure       | `Pa`, `Torr`                                          |
//! | time           | `s`, `ms`, `us`, `ns`                                 |
//!
//! `X MHz_x2pi` means 2π·X·10⁶ rad/s, which is how linewidths and Rabi
//! frequencies are usually quoted. `X gamma3` means X times the resolved γ3.

use std::f64::consts::PI;
use std::fmt;

use crate::rates::{AMU, TORR};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    AngularRate,
    Length,
    Speed,
    Temperature,
    Mass,
    Area,
    NumberDensity,
    Pressure,
    Time,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::AngularRate => "angular rate",
            Dimension::Length => "length",
            Dimension::Speed => "speed",
            Dimension::Temperature => "temperature",
            Dimension::Mass => "mass",
            Dimension::Area => "area",
            Dimension::NumberDensity => "number density",
            Dimension::Pressure => "pressure",
            Dimension::Time => "time",
        }
    }

    /// Accepted suffixes; the first one is the SI form used when writing configs.
    pub fn suffixes(self) -> &'static [&'static str] {
        match self {
            Dimension::AngularRate => &["rad/s", "Hz_x2pi", "kHz_x2pi", "MHz_x2pi", "GHz_x2pi", "gamma3"],
            Dimension::Length => &["m", "cm", "mm", "um", "nm"],
            Dimension::Speed => &["m/s"],
            Dimension::Temperature => &["K", "C"],
            Dimension::Mass => &["kg", "amu"],
            Dimension::Area => &["m2", "cm2"],
            Dimension::NumberDensity => &["m^-3", "cm^-3"],
            Dimension::Pressure => &["Pa", "Torr"],
            Dimension::Time => &["s", "ms", "us", "ns"],
        }
    }

    pub fn si_suffix(self) -> &'static str {
        self.suffixes()[0]
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn dimension_of(suffix: &str) -> Option<Dimension> {
    use Dimension::*;
    [AngularRate, Length, Speed, Temperature, Mass, Area, NumberDensity, Pressure, Time]
        .into_iter()
        .find(|d| d.suffixes().contains(&suffix))
}

/// Converts `value suffix` to SI. `gamma3` is needed only for the `gamma3` suffix.
pub fn to_si(value: f64, suffix: &str, dim: Dimension, gamma3: Option<f64>) -> Result<f64, String> {
    let factor = match (dim, suffix) {
        (Dimension::AngularRate, "rad/s") => 1.0,
        (Dimension::AngularRate, "Hz_x2pi") => 2.0 * PI,
        (Dimension::AngularRate, "kHz_x2pi") => 2.0 * PI * 1e3,
        (Dimension::AngularRate, "MHz_x2pi") => 2.0 * PI * 1e6,
        (Dimension::AngularRate, "GHz_x2pi") => 2.0 * PI * 1e9,
        (Dimension::AngularRate, "gamma3") => {
            gamma3.ok_or_else(|| "the `gamma3` unit cannot be used before gamma3 itself is known".to_string())?
        }
        (Dimension::Length, "m") => 1.0,
        (Dimension::Length, "cm") => 1e-2,
        (Dimension::Length, "mm") => 1e-3,
        (Dimension::Length, "um") => 1e-6,
        (Dimension::Length, "nm") => 1e-9,
        (Dimension::Speed, "m/s") => 1.0,
        (Dimension::Temperature, "K") => 1.0,
        (Dimension::Temperature, "C") => return Ok(value + 273.15),
        (Dimension::Mass, "kg") => 1.0,
        (Dimension::Mass, "amu") => AMU,
        (Dimension::Area, "m2") => 1.0,
        (Dimension::Area, "cm2") => 1e-4,
        (Dimension::NumberDensity, "m^-3") => 1.0,
        (Dimension::NumberDensity, "cm^-3") => 1e6,
        (Dimension::Pressure, "Pa") => 1.0,
        (Dimension::Pressure, "Torr") => TORR,
        (Dimension::Time, "s") => 1.0,
        (Dimension::Time, "ms") => 1e-3,
        (Dimension::Time, "us") => 1e-6,
        (Dimension::Time, "ns") => 1e-9,
        _ => {
            let expected = dim.suffixes().join(", ");
            return Err(match dimension_of(suffix) {
                Some(other) => format!("unit `{suffix}` measures {other}, expected {dim} ({expected})"),
                None => format!("unknown unit `{suffix}`, expected {dim} ({expected})"),
            });
        }
    };
    Ok(value * factor)
}

/// Parses `"<number> <unit>"` into SI.
pub fn parse_quantity(text: &str, dim: Dimension, gamma3: Option<f64>) -> Result<f64, String> {
    let mut parts = text.split_whitespace();
    let (Some(number), unit, None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("expected `<number> <unit>` for {dim}, got `{text}`"));
    };
    let Some(unit) = unit else {
        return Err(format!("missing unit for {dim}; use one of {}", dim.suffixes().join(", ")));
    };
    let value: f64 = number.parse().map_err(|_| format!("`{number}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{number}` is not finite"));
    }
    to_si(value, unit, dim, gamma3)
}

/// Writes an SI value so that [`parse_quantity`] returns exactly the same f64.
pub fn format_si(value: f64, dim: Dimension) -> String {
    format!("{value:e} {}", dim.si_suffix())
}
