//! Physical parameters and the density-matrix value type shared by every solver.
//!
//! All rates, Rabi frequencies and detunings are angular (rad/s). Values quoted
//! as `2π × f` in the literature are converted once, at the configuration
//! boundary.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// D1 probe wavelength of rubidium (795 nm).
pub const LAMBDA_D1: f64 = 795e-9;
/// D2 pump wavelength of rubidium (780 nm).
pub const LAMBDA_D2: f64 = 780e-9;

/// One physical configuration of the four-level system.
///
/// States are labelled |1⟩, |2⟩ (ground), |3⟩ (probe-coupled excited) and
/// |4⟩ (pump-coupled excited). Only detunings from the optical transitions
/// enter under the rotating-wave approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Probe Rabi frequency on |1⟩↔|3⟩.
    pub omega_pr: f64,
    /// Pump Rabi frequency on |1⟩↔|4⟩.
    pub omega_pu: f64,
    pub delta_pr: f64,
    pub delta_pu: f64,
    /// Ground-state hyperfine splitting, 0 for degenerate ground states.
    pub delta_hfs: f64,
    /// Spontaneous decay rate of |3⟩.
    pub gamma3: f64,
    /// Spontaneous decay rate of |4⟩.
    pub gamma4: f64,
    /// Ground-state exchange rate from wall collisions.
    pub w12: f64,
    /// Collisional transfer |3⟩→|4⟩ (population loss rate of |3⟩).
    pub r34: f64,
    /// Collisional transfer |4⟩→|3⟩ (population loss rate of |4⟩).
    pub r43: f64,
    /// Probe wavelength, m.
    pub lambda_pr: f64,
    /// Pump wavelength, m.
    pub lambda_pu: f64,
    /// Most probable atomic speed, m/s. Zero disables Doppler shifts.
    pub u: f64,
    /// Extra dephasing of the optical coherences ρ13, ρ14 (and conjugates).
    /// Models laser-linewidth broadening; zero by default.
    pub gamma_laser: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega_pr: 0.0,
            omega_pu: 0.0,
            delta_pr: 0.0,
            delta_pu: 0.0,
            delta_hfs: 0.0,
            gamma3: 0.0,
            gamma4: 0.0,
            w12: 0.0,
            r34: 0.0,
            r43: 0.0,
            lambda_pr: LAMBDA_D1,
            lambda_pu: LAMBDA_D2,
            u: 0.0,
            gamma_laser: 0.0,
        }
    }
}

impl SystemParams {
    /// Parameters with both excited states decaying at `gamma3` and every
    /// other rate zero.
    pub fn with_gamma(gamma3: f64) -> Self {
        Self { gamma3, gamma4: gamma3, ..Self::default() }
    }

    /// Mean collisional transfer rate, the single `R` of the symmetric model.
    pub fn mean_transfer(&self) -> f64 {
        0.5 * (self.r34 + self.r43)
    }

    pub fn k_pr(&self) -> f64 {
        2.0 * PI / self.lambda_pr
    }

    pub fn k_pu(&self) -> f64 {
        2.0 * PI / self.lambda_pu
    }

    /// Copy with both detunings shifted for an atom moving at `v` along the
    /// (co-propagating) beams.
    pub fn doppler_shifted(&self, v: f64) -> Self {
        Self {
            delta_pr: self.delta_pr - self.k_pr() * v,
            delta_pu: self.delta_pu - self.k_pu() * v,
            ..*self
        }
    }

    /// Checks every field invariant and returns the parameters unchanged.
    pub fn validate(self) -> Result<Self> {
        let nonneg = [
            ("omega_pr", self.omega_pr),
            ("omega_pu", self.omega_pu),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("w12", self.w12),
            ("r34", self.r34),
            ("r43", self.r43),
            ("gamma_laser", self.gamma_laser),
        ];
        for (field, value) in nonneg {
            if !value.is_finite() {
                return Err(invalid(field, format!("must be finite, got {value}")));
            }
            if value < 0.0 {
                return Err(invalid(field, format!("must be >= 0, got {value}")));
            }
        }
        for (field, value) in [
            ("delta_pr", self.delta_pr),
            ("delta_pu", self.delta_pu),
            ("delta_hfs", self.delta_hfs),
        ] {
            if !value.is_finite() {
                return Err(invalid(field, format!("must be finite, got {value}")));
            }
        }
        for (field, value) in [("lambda_pr", self.lambda_pr), ("lambda_pu", self.lambda_pu)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(field, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.u.is_finite() && self.u >= 0.0) {
            return Err(invalid("u", format!("must be finite and >= 0, got {}", self.u)));
        }
        Ok(self)
    }
}

/// Velocity-integration rule used by the Doppler average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Uniform (sinc) rule in x = v/u on |x| ≤ 6 with nested doubling.
    Trapezoid,
    /// Gauss–Hermite nodes in x = v/u.
    GaussHermite,
}

/// Whether the Doppler integral carries the 1/(u√π) normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DopplerNormalization {
    /// G is the Maxwell–Boltzmann weighted mean of χ (dimensionless).
    Normalized,
    /// G = ∫χ exp(−v²/u²) dv, in units of m/s.
    LiteralIntegral,
}

/// Inputs for susceptibility and spectrum evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    /// Atomic number density N, m⁻³.
    pub number_density: f64,
    /// Optical path length L, m.
    pub path_length: f64,
    /// Probe detunings, rad/s, strictly increasing.
    pub detuning_grid: Vec<f64>,
    /// Starting node count for the velocity integral.
    pub quadrature_nodes: usize,
    pub rule: QuadratureRule,
    pub normalization: DopplerNormalization,
    /// Upper bound for automatic node doubling.
    pub max_nodes: usize,
}

pub const DEFAULT_QUADRATURE_NODES: usize = 64;
pub const DEFAULT_MAX_NODES: usize = 8192;

impl SpectrumParams {
    pub fn new(number_density: f64, path_length: f64, detuning_grid: Vec<f64>) -> Self {
        Self {
            number_density,
            path_length,
            detuning_grid,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            rule: QuadratureRule::Trapezoid,
            normalization: DopplerNormalization::Normalized,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }

    pub fn validate(self) -> Result<Self> {
        if !(self.number_density.is_finite() && self.number_density > 0.0) {
            return Err(invalid("number_density", format!("must be > 0, got {}", self.number_density)));
        }
        if !(self.path_length.is_finite() && self.path_length > 0.0) {
            return Err(invalid("path_length", format!("must be > 0, got {}", self.path_length)));
        }
        if self.detuning_grid.iter().any(|d| !d.is_finite()) {
            return Err(invalid("detuning_grid", "contains a non-finite value"));
        }
        if self.detuning_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("detuning_grid", "must be strictly increasing"));
        }
        if self.quadrature_nodes < 8 {
            return Err(invalid("quadrature_nodes", format!("must be >= 8, got {}", self.quadrature_nodes)));
        }
        if self.max_nodes < self.quadrature_nodes {
            return Err(invalid("max_nodes", "must be >= quadrature_nodes"));
        }
        Ok(self)
    }
}

/// Evenly spaced inclusive grid from `start` to `end`.
pub fn linear_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (end - start) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { end } else { start + step * i as f64 }).collect()
        }
    }
}

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
const DIAGONAL_SLACK: f64 = 1e-9;

/// 4×4 density matrix over |1⟩..|4⟩. Indexing is zero-based: `rho[(0, 2)]`
/// is ρ13.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    elems: [[Complex64; 4]; 4],
}

impl Default for DensityMatrix {
    fn default() -> Self {
        Self::zero()
    }
}

impl DensityMatrix {
    pub fn zero() -> Self {
        Self { elems: [[Complex64::new(0.0, 0.0); 4]; 4] }
    }

    pub fn from_rows(elems: [[Complex64; 4]; 4]) -> Self {
        Self { elems }
    }

    pub fn diagonal(populations: [f64; 4]) -> Self {
        let mut rho = Self::zero();
        for (k, p) in populations.into_iter().enumerate() {
            rho.elems[k][k] = Complex64::new(p, 0.0);
        }
        rho
    }

    /// diag(1/2, 1/2, 0, 0): equal ground-state populations.
    pub fn thermal_ground() -> Self {
        Self::diagonal([0.5, 0.5, 0.0, 0.0])
    }

    /// Builds from the column-stacked vector (element (i, j) at `i + 4j`).
    pub fn from_column_stacked(v: &[Complex64; 16]) -> Self {
        let mut rho = Self::zero();
        for j in 0..4 {
            for i in 0..4 {
                rho.elems[i][j] = v[i + 4 * j];
            }
        }
        rho
    }

    pub fn to_column_stacked(&self) -> [Complex64; 16] {
        let mut v = [Complex64::new(0.0, 0.0); 16];
        for j in 0..4 {
            for i in 0..4 {
                v[i + 4 * j] = self.elems[i][j];
            }
        }
        v
    }

    pub fn rows(&self) -> &[[Complex64; 4]; 4] {
        &self.elems
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|k| self.elems[k][k]).sum()
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.elems[k][k].re)
    }

    pub fn rho13(&self) -> Complex64 {
        self.elems[0][2]
    }

    pub fn rho43(&self) -> Complex64 {
        self.elems[3][2]
    }

    /// ρ33 − ρ11, the probe-transition population difference.
    pub fn probe_inversion(&self) -> f64 {
        self.elems[2][2].re - self.elems[0][0].re
    }

    /// max |ρij − conj(ρji)|, including the imaginary parts of the diagonal.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in i..4 {
                worst = worst.max((self.elems[i][j] - self.elems[j][i].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.elems.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.elems
            .iter()
            .flatten()
            .zip(other.elems.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Nearest Hermitian matrix, (ρ + ρ†)/2.
    pub fn hermitized(&self) -> Self {
        let mut out = *self;
        for i in 0..4 {
            for j in 0..4 {
                out.elems[i][j] = 0.5 * (self.elems[i][j] + self.elems[j][i].conj());
            }
        }
        out
    }

    /// Verifies Hermiticity, unit trace and diagonal bounds without mutating.
    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if !(herm <= HERMITICITY_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        let tr = self.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {} differs from 1", tr.re)));
        }
        for (k, p) in self.populations().into_iter().enumerate() {
            if !(-DIAGONAL_SLACK..=1.0 + DIAGONAL_SLACK).contains(&p) {
                return Err(Error::InvalidState(format!("population rho{0}{0} = {p} outside [0, 1]", k + 1)));
            }
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DensityMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.elems[i][j]
    }
}

impl IndexMut<(usize, usize)> for DensityMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.elems[i][j]
    }
}

impl fmt::Display for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.elems {
            let cells: Vec<String> = row.iter().map(|z| format!("{:+.6e}{:+.6e}i", z.re, z.im)).collect();
            writeln!(f, "{}", cells.join("  "))?;
        }
        Ok(())
    }
}
