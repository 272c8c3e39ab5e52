//! Rate coefficients from cell geometry, temperature and buffer gas.
//!
//! Collisional fine-structure transfer: r = n·σ·v_av with the mean relative
//! speed v_av = √(8kT/πμ) of the Rb–buffer pair. Wall relaxation uses the
//! ballistic time of flight between wall hits, 1/T1 = v̄·S/(4V).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Boltzmann constant, J/K (exact SI).
pub const K_B: f64 = 1.380649e-23;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
pub const MASS_RB85: f64 = 84.911_789_738 * AMU;
pub const MASS_RB87: f64 = 86.909_180_527 * AMU;
pub const MASS_H2: f64 = 2.015_88 * AMU;
/// 1 Torr in Pa.
pub const TORR: f64 = 101_325.0 / 760.0;

/// Plausible range for collisional cross-sections, m². Values outside usually
/// mean a cm²/m² slip.
pub const SIGMA_SANITY_BAND: (f64, f64) = (1e-22, 1e-17);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BufferGasSpec {
    /// Buffer molecules per m³.
    pub number_density: f64,
    /// |3⟩→|4⟩ transfer cross-section, m².
    pub sigma1: f64,
    /// |4⟩→|3⟩ transfer cross-section, m².
    pub sigma2: f64,
    pub molecule_mass: f64,
}

/// Measured Rb 5P fine-structure mixing cross-sections with H₂, in units of
/// 1e-16 cm², as (σ1, σ2, T in K).
pub const H2_CROSS_SECTIONS: [(f64, f64, f64); 3] = [(10.0, 13.9, 330.0), (11.0, 15.0, 340.0), (50.0, 30.0, 1720.0)];

/// 1e-16 cm² in m².
const CM2_1E16: f64 = 1e-20;

impl BufferGasSpec {
    /// H₂ with the 330 K cross-sections (the default row).
    pub fn h2(number_density: f64) -> Self {
        Self::h2_row(number_density, 0)
    }

    /// H₂ with the 340 K cross-sections.
    pub fn h2_340k(number_density: f64) -> Self {
        Self::h2_row(number_density, 1)
    }

    /// H₂ with the 1720 K values. These are lower bounds, not measurements.
    pub fn h2_1720k(number_density: f64) -> Self {
        Self::h2_row(number_density, 2)
    }

    fn h2_row(number_density: f64, row: usize) -> Self {
        let (s1, s2, _) = H2_CROSS_SECTIONS[row];
        Self { number_density, sigma1: s1 * CM2_1E16, sigma2: s2 * CM2_1E16, molecule_mass: MASS_H2 }
    }

    pub fn validate(self) -> Result<Self> {
        for (field, value) in [
            ("number_density", self.number_density),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("molecule_mass", self.molecule_mass),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(field, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(self)
    }

    /// Warnings for cross-sections outside [`SIGMA_SANITY_BAND`].
    pub fn sanity_warnings(&self) -> Vec<String> {
        let (lo, hi) = SIGMA_SANITY_BAND;
        [("sigma1", self.sigma1), ("sigma2", self.sigma2)]
            .into_iter()
            .filter(|(_, s)| !(lo..=hi).contains(s))
            .map(|(name, s)| format!("{name} = {s:e} m^2 is outside [{lo:e}, {hi:e}] m^2; check cm^2 vs m^2"))
            .collect()
    }
}

/// Rectangular vapor cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub length: f64,
    pub width: f64,
    /// Extent along the beams.
    pub thickness: f64,
    /// K.
    pub temperature: f64,
    pub atom_mass: f64,
}

impl CellSpec {
    pub fn validate(self) -> Result<Self> {
        for (field, value) in [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("temperature", self.temperature),
            ("atom_mass", self.atom_mass),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(field, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(self)
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.thickness
    }

    pub fn surface(&self) -> f64 {
        2.0 * (self.length * self.width + self.length * self.thickness + self.width * self.thickness)
    }
}

/// μ = m_a·m_b/(m_a + m_b).
pub fn reduced_mass(m_a: f64, m_b: f64) -> f64 {
    m_a * m_b / (m_a + m_b)
}

/// Mean speed of a Maxwell–Boltzmann gas of particles of `mass`, √(8kT/πm).
pub fn mean_thermal_speed(temperature: f64, mass: f64) -> f64 {
    (8.0 * K_B * temperature / (PI * mass)).sqrt()
}

/// Mean relative speed of a colliding pair with reduced mass `mu`.
pub fn mean_relative_speed(temperature: f64, mu: f64) -> f64 {
    mean_thermal_speed(temperature, mu)
}

/// Most probable speed √(2kT/m).
pub fn most_probable_speed(temperature: f64, mass: f64) -> f64 {
    (2.0 * K_B * temperature / mass).sqrt()
}

/// Ideal-gas number density P/(kT).
pub fn ideal_gas_density(pressure: f64, temperature: f64) -> f64 {
    pressure / (K_B * temperature)
}

/// (r34, r43) = n·v_av·(σ1, σ2).
pub fn collisional_transfer_rates(gas: &BufferGasSpec, temperature: f64, atom_mass: f64) -> (f64, f64) {
    let mu = reduced_mass(atom_mass, gas.molecule_mass);
    let v_av = mean_relative_speed(temperature, mu);
    (gas.number_density * gas.sigma1 * v_av, gas.number_density * gas.sigma2 * v_av)
}

/// W12 = 2π · v̄ · S/(4V).
pub fn wall_relaxation(cell: &CellSpec) -> f64 {
    wall_relaxation_with(cell, true)
}

/// As [`wall_relaxation`], optionally without the 2π factor.
pub fn wall_relaxation_with(cell: &CellSpec, two_pi: bool) -> f64 {
    let v_bar = mean_thermal_speed(cell.temperature, cell.atom_mass);
    let rate = v_bar * cell.surface() / (4.0 * cell.volume());
    if two_pi {
        2.0 * PI * rate
    } else {
        rate
    }
}
