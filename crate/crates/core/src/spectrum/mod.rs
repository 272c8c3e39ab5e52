//! Probe susceptibility, its Doppler average and the resulting transmission.
//!
//! Sign convention: χ < 0 is absorption, χ > 0 is gain, and T = exp(G).

pub mod quadrature;

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::liouville::{steady_state, GeneratorMode, Liouvillian};
use crate::params::{DensityMatrix, DopplerNormalization, QuadratureRule, SpectrumParams, SystemParams};
use quadrature::{GaussHermite, NestedTrapezoid, TRAPEZOID_HALF_WIDTH};

/// Relative tolerance on the node-doubling change of G.
pub const DOUBLING_REL_TOL: f64 = 1e-6;
/// Absolute floor of the doubling test, in units of [`chi_scale`].
pub const DOUBLING_ABS_FLOOR: f64 = 1e-12;

/// How the Lorentzian closed form treats the complex numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SusceptibilityReading {
    /// Im of the full complex expression, 2i(Ωpu ρ43 + Ωpr(ρ33 − ρ11))/(D + 2iΔ).
    #[default]
    Complex,
    /// The Lorentzian form taken at face value, with Re(ρ43).
    StrictLiteral,
}

/// 3λ_pr²·N·L·γ3/(4π), rad/s.
pub fn prefactor(params: &SystemParams, sp: &SpectrumParams) -> f64 {
    3.0 * params.lambda_pr.powi(2) * sp.number_density * sp.path_length * params.gamma3 / (4.0 * PI)
}

/// Magnitude of the pump-free, fully absorbing line-centre χ:
/// prefactor · 2/(R + W12 + γ3).
pub fn chi_scale(params: &SystemParams, sp: &SpectrumParams) -> f64 {
    let width = params.mean_transfer() + params.w12 + params.gamma3;
    if width > 0.0 {
        prefactor(params, sp) * 2.0 / width
    } else {
        0.0
    }
}

fn require_probe(params: &SystemParams) -> Result<()> {
    if params.omega_pr > 0.0 {
        Ok(())
    } else {
        Err(invalid("omega_pr", "susceptibility needs a nonzero probe Rabi frequency"))
    }
}

fn shifted(params: &SystemParams, delta_pr: f64, v: f64) -> SystemParams {
    SystemParams { delta_pr, ..*params }.doppler_shifted(v)
}

fn steady_at(params: &SystemParams) -> Result<DensityMatrix> {
    steady_state(&Liouvillian::build(params, GeneratorMode::TraceConserving))
}

/// χ(Δ_pr, v) from the full steady state at the velocity-shifted detunings.
pub fn susceptibility_at(params: &SystemParams, sp: &SpectrumParams, delta_pr: f64, v: f64) -> Result<f64> {
    require_probe(params)?;
    let local = shifted(params, delta_pr, v);
    let rho = steady_at(&local)?;
    Ok(prefactor(params, sp) * rho.rho13().im / params.omega_pr)
}

/// χ from the Lorentzian-weighted closed form, using steady-state ρ43, ρ33, ρ11.
pub fn closed_form_susceptibility(
    params: &SystemParams,
    sp: &SpectrumParams,
    delta_pr: f64,
    v: f64,
    reading: SusceptibilityReading,
) -> Result<f64> {
    require_probe(params)?;
    let local = shifted(params, delta_pr, v);
    let rho = steady_at(&local)?;
    let width = local.mean_transfer() + local.w12 + local.gamma3;
    let detuning = local.delta_pr;
    let inversion = rho.probe_inversion();
    let im_rho13 = match reading {
        SusceptibilityReading::Complex => {
            let x = local.omega_pu * rho.rho43() + local.omega_pr * inversion;
            (2.0 * Complex64::i() * x / Complex64::new(width, 2.0 * detuning)).im
        }
        SusceptibilityReading::StrictLiteral => {
            let lorentz = 2.0 * width / (width * width + 4.0 * detuning * detuning);
            lorentz * (local.omega_pu * rho.rho43().re + local.omega_pr * inversion)
        }
    };
    Ok(prefactor(params, sp) * im_rho13 / params.omega_pr)
}

/// Doppler-averaged gain at one probe detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerPoint {
    pub gain: f64,
    /// Nodes (trapezoid intervals or Gauss–Hermite order) of the accepted estimate.
    pub nodes: usize,
    pub converged: bool,
    /// |G_n − G_{n/2}| at acceptance.
    pub last_change: f64,
}

/// Evaluates Doppler averages, caching Gauss–Hermite tables between calls.
pub struct DopplerAverager<'a> {
    params: &'a SystemParams,
    sp: &'a SpectrumParams,
    /// One slot per order of the doubling sequence, built on first use.
    gh_tables: Vec<(usize, OnceLock<GaussHermite>)>,
}

impl<'a> DopplerAverager<'a> {
    pub fn new(params: &'a SystemParams, sp: &'a SpectrumParams) -> Self {
        let mut gh_tables = Vec::new();
        if sp.rule == QuadratureRule::GaussHermite {
            let mut n = sp.quadrature_nodes;
            while n <= sp.max_nodes {
                gh_tables.push((n, OnceLock::new()));
                n *= 2;
            }
        }
        Self { params, sp, gh_tables }
    }

    fn normalization(&self) -> f64 {
        match self.sp.normalization {
            DopplerNormalization::Normalized => 1.0 / PI.sqrt(),
            DopplerNormalization::LiteralIntegral => self.params.u,
        }
    }

    fn tolerance(&self, value: f64) -> f64 {
        let floor = DOUBLING_ABS_FLOOR * chi_scale(self.params, self.sp) * self.normalization() * PI.sqrt();
        DOUBLING_REL_TOL * value.abs() + floor
    }

    /// G(Δ_pr), doubling the node count until two successive doublings each
    /// change the estimate by less than the tolerance. A single agreement can
    /// be a coincidence while narrow features are still unresolved.
    pub fn average(&self, delta_pr: f64) -> Result<DopplerPoint> {
        require_probe(self.params)?;
        let params = self.params;
        let sp = self.sp;
        let u = params.u;
        if u == 0.0 {
            let gain = match sp.normalization {
                DopplerNormalization::Normalized => susceptibility_at(params, sp, delta_pr, 0.0)?,
                DopplerNormalization::LiteralIntegral => 0.0,
            };
            return Ok(DopplerPoint { gain, nodes: 0, converged: true, last_change: 0.0 });
        }
        let chi = |x: f64| susceptibility_at(params, sp, delta_pr, u * x);
        let weighted_chi = |x: f64| -> Result<f64> {
            let weight = (-x * x).exp();
            if weight == 0.0 {
                return Ok(0.0);
            }
            Ok(chi(x)? * weight)
        };
        let norm = self.normalization();

        match sp.rule {
            QuadratureRule::Trapezoid => {
                let mut rule = NestedTrapezoid::new(TRAPEZOID_HALF_WIDTH, sp.quadrature_nodes, weighted_chi)?;
                let mut previous = norm * rule.estimate();
                let mut agreed = false;
                loop {
                    if rule.intervals() * 2 > sp.max_nodes {
                        return Ok(DopplerPoint { gain: previous, nodes: rule.intervals(), converged: false, last_change: f64::NAN });
                    }
                    rule.refine(weighted_chi)?;
                    let current = norm * rule.estimate();
                    let change = (current - previous).abs();
                    let within = change <= self.tolerance(current);
                    if within && agreed {
                        return Ok(DopplerPoint { gain: current, nodes: rule.intervals(), converged: true, last_change: change });
                    }
                    if rule.intervals() * 2 > sp.max_nodes {
                        return Ok(DopplerPoint { gain: current, nodes: rule.intervals(), converged: false, last_change: change });
                    }
                    agreed = within;
                    previous = current;
                }
            }
            QuadratureRule::GaussHermite => {
                let mut n = sp.quadrature_nodes;
                let mut previous = norm * self.gh_integral(n, &chi)?;
                let mut agreed = false;
                loop {
                    if n * 2 > sp.max_nodes {
                        return Ok(DopplerPoint { gain: previous, nodes: n, converged: false, last_change: f64::NAN });
                    }
                    n *= 2;
                    let current = norm * self.gh_integral(n, &chi)?;
                    let change = (current - previous).abs();
                    let within = change <= self.tolerance(current);
                    if within && agreed {
                        return Ok(DopplerPoint { gain: current, nodes: n, converged: true, last_change: change });
                    }
                    if n * 2 > sp.max_nodes {
                        return Ok(DopplerPoint { gain: current, nodes: n, converged: false, last_change: change });
                    }
                    agreed = within;
                    previous = current;
                }
            }
        }
    }

    fn gh_integral<F: Fn(f64) -> Result<f64>>(&self, n: usize, chi: &F) -> Result<f64> {
        let built;
        let table = match self.gh_tables.iter().find(|(m, _)| *m == n) {
            Some((_, slot)) => slot.get_or_init(|| GaussHermite::new(n)),
            None => {
                built = GaussHermite::new(n);
                &built
            }
        };
        let mut total = 0.0;
        for (&x, &w) in table.nodes.iter().zip(&table.weights) {
            if w == 0.0 {
                continue;
            }
            total += w * chi(x)?;
        }
        Ok(total)
    }
}

/// G(Δ_pr) = (1/(u√π)) ∫ χ(Δ_pr, v) e^{−v²/u²} dv.
pub fn doppler_average(params: &SystemParams, sp: &SpectrumParams, delta_pr: f64) -> Result<DopplerPoint> {
    DopplerAverager::new(params, sp).average(delta_pr)
}

/// Trapezoid rule over |v| ≤ 5u with a fixed point count, no refinement.
/// Used as an independent reference for [`doppler_average`].
pub fn doppler_average_reference(params: &SystemParams, sp: &SpectrumParams, delta_pr: f64, points: usize) -> Result<f64> {
    let half_width = 5.0;
    let h = 2.0 * half_width / (points - 1) as f64;
    let mut sum = 0.0;
    for j in 0..points {
        let x = -half_width + h * j as f64;
        let weight = if j == 0 || j == points - 1 { 0.5 } else { 1.0 };
        sum += weight * susceptibility_at(params, sp, delta_pr, params.u * x)? * (-x * x).exp();
    }
    Ok(h * sum / PI.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// rad/s
    pub detunings: Vec<f64>,
    pub gain: Vec<f64>,
    pub transmission: Vec<f64>,
    pub nodes: Vec<usize>,
    pub converged: Vec<bool>,
    pub warnings: Vec<String>,
    pub params: SystemParams,
    pub spectrum_params: SpectrumParams,
}

impl SpectrumResult {
    pub fn max_gain(&self) -> f64 {
        self.gain.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Spectrum over `sp.detuning_grid` on rayon's global pool.
pub fn spectrum(params: &SystemParams, sp: &SpectrumParams) -> Result<SpectrumResult> {
    spectrum_with_jobs(params, sp, None)
}

/// Spectrum with an explicit worker count. `Some(1)` runs on the calling
/// thread. Each grid point is independent, so the output is identical for
/// every worker count.
pub fn spectrum_with_jobs(params: &SystemParams, sp: &SpectrumParams, jobs: Option<usize>) -> Result<SpectrumResult> {
    let params = params.validate()?;
    let sp = sp.clone().validate()?;
    require_probe(&params)?;
    let averager = DopplerAverager::new(&params, &sp);

    let evaluate = |d: &f64| averager.average(*d);
    let points: Vec<Result<DopplerPoint>> = match jobs {
        Some(1) => sp.detuning_grid.iter().map(evaluate).collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| invalid("jobs", e.to_string()))?;
            pool.install(|| sp.detuning_grid.par_iter().map(evaluate).collect())
        }
        None => sp.detuning_grid.par_iter().map(evaluate).collect(),
    };

    let mut failures = Vec::new();
    let mut accepted = Vec::with_capacity(points.len());
    for (i, point) in points.into_iter().enumerate() {
        match point {
            Ok(p) => accepted.push(p),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Spectrum(failures));
    }

    let warnings = accepted
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.converged)
        .map(|(i, p)| {
            format!(
                "grid point {i} (detuning {:e} rad/s): quadrature not converged at {} nodes (last change {:e})",
                sp.detuning_grid[i], p.nodes, p.last_change
            )
        })
        .collect();
    let gain: Vec<f64> = accepted.iter().map(|p| p.gain).collect();
    Ok(SpectrumResult {
        detunings: sp.detuning_grid.clone(),
        transmission: gain.iter().map(|g| g.exp()).collect(),
        nodes: accepted.iter().map(|p| p.nodes).collect(),
        converged: accepted.iter().map(|p| p.converged).collect(),
        gain,
        warnings,
        params,
        spectrum_params: sp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::linear_grid;

    const G3: f64 = 2.0 * PI * 5.75e6;

    fn fig2() -> SystemParams {
        SystemParams {
            omega_pr: 0.05 * G3,
            omega_pu: 60.0 * G3,
            w12: 0.5 * G3,
            r34: 2.0 * G3,
            r43: 2.0 * G3,
            u: 304.35,
            ..SystemParams::with_gamma(G3)
        }
    }

    fn pump_free() -> SystemParams {
        SystemParams { omega_pu: 0.0, ..fig2() }
    }

    fn sp() -> SpectrumParams {
        SpectrumParams::new(3.5e19, 30e-6, vec![0.0])
    }

    #[test]
    fn pump_free_line_centre_absorbs() {
        let chi = susceptibility_at(&pump_free(), &sp(), 0.0, 0.0).unwrap();
        assert!(chi < 0.0);
        // Weak probe on a balanced ground state: Im ρ13 ≈ −2Ωpr·ρ11/(R + W + γ3),
        // up to the percent-level optical pumping the probe itself causes.
        let p = pump_free();
        let width = p.mean_transfer() + p.w12 + p.gamma3;
        let expected = -prefactor(&p, &sp()) * 2.0 * 0.5 / width;
        assert!((chi - expected).abs() < 2e-2 * expected.abs(), "{chi} vs {expected}");
    }

    #[test]
    fn pump_free_shift_covariance() {
        let p = pump_free();
        for (delta, v, dv) in [(0.0, 0.0, 37.0), (3e8, -120.0, 55.5), (-1e9, 400.0, -250.0)] {
            let a = susceptibility_at(&p, &sp(), delta, v).unwrap();
            let b = susceptibility_at(&p, &sp(), delta + p.k_pr() * dv, v + dv).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn closed_form_matches_full_solve_without_pump() {
        let p = pump_free();
        for delta in [0.0, 2e7, -5e8] {
            let full = susceptibility_at(&p, &sp(), delta, 10.0).unwrap();
            for reading in [SusceptibilityReading::Complex, SusceptibilityReading::StrictLiteral] {
                let closed = closed_form_susceptibility(&p, &sp(), delta, 10.0, reading).unwrap();
                assert!((closed - full).abs() <= 1e-8 * full.abs(), "{closed} vs {full}");
            }
        }
    }

    #[test]
    fn closed_form_agrees_in_sign_with_pump() {
        let full = susceptibility_at(&fig2(), &sp(), 0.0, 0.0).unwrap();
        let closed = closed_form_susceptibility(&fig2(), &sp(), 0.0, 0.0, SusceptibilityReading::Complex).unwrap();
        assert_eq!(full.signum(), closed.signum());
        assert!((closed - full).abs() <= 1e-6 * full.abs());
    }

    #[test]
    fn far_detuned_tail_falls_as_inverse_square() {
        let p = pump_free();
        let a = closed_form_susceptibility(&p, &sp(), 1e11, 0.0, SusceptibilityReading::Complex).unwrap();
        let b = closed_form_susceptibility(&p, &sp(), 2e11, 0.0, SusceptibilityReading::Complex).unwrap();
        assert!(a < 0.0 && b < 0.0);
        assert!((a / b - 4.0).abs() < 1e-4, "{}", a / b);
    }

    #[test]
    fn probe_must_be_on() {
        let p = SystemParams { omega_pr: 0.0, ..fig2() };
        assert!(susceptibility_at(&p, &sp(), 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_width_distribution_returns_the_local_value() {
        let p = SystemParams { u: 0.0, ..fig2() };
        let g = doppler_average(&p, &sp(), 1e7).unwrap();
        assert_eq!(g.gain, susceptibility_at(&p, &sp(), 1e7, 0.0).unwrap());
    }

    #[test]
    fn velocity_independent_chi_is_returned_unchanged() {
        // Infinite wavelengths remove every Doppler shift.
        let p = SystemParams { lambda_pr: 1e9, lambda_pu: 1e9, ..pump_free() };
        let s = SpectrumParams::new(3.5e19, 30e-6, vec![0.0]);
        let expected = susceptibility_at(&p, &s, 3e7, 0.0).unwrap();
        for rule in [QuadratureRule::Trapezoid, QuadratureRule::GaussHermite] {
            let s = SpectrumParams { rule, ..s.clone() };
            let g = doppler_average(&p, &s, 3e7).unwrap();
            assert!((g.gain - expected).abs() <= 1e-12 * expected.abs(), "{rule:?}");
            assert!(g.converged);
        }
    }

    #[test]
    fn doppler_average_matches_fixed_trapezoid_reference() {
        let p = pump_free();
        for delta in [0.0, 5e9] {
            let g = doppler_average(&p, &sp(), delta).unwrap();
            let reference = doppler_average_reference(&p, &sp(), delta, 2001).unwrap();
            assert!(g.converged);
            assert!((g.gain - reference).abs() <= 1e-6 * reference.abs(), "{} vs {reference}", g.gain);
        }
    }

    #[test]
    fn equal_wavelengths_give_a_symmetric_spectrum() {
        let p = SystemParams { lambda_pu: crate::params::LAMBDA_D1, ..fig2() };
        let s = SpectrumParams::new(3.5e19, 30e-6, vec![-3e9, 3e9]);
        let r = spectrum_with_jobs(&p, &s, Some(1)).unwrap();
        let scale = chi_scale(&p, &s);
        assert!((r.gain[0] - r.gain[1]).abs() <= 1e-6 * r.gain[0].abs() + 1e-12 * scale);
    }

    #[test]
    fn gain_is_linear_in_column_density() {
        let p = fig2();
        let grid = vec![-2e9, 0.0, 1e9];
        let a = spectrum_with_jobs(&p, &SpectrumParams::new(3.5e19, 30e-6, grid.clone()), Some(1)).unwrap();
        let b = spectrum_with_jobs(&p, &SpectrumParams::new(7.0e19, 30e-6, grid.clone()), Some(1)).unwrap();
        for (x, y) in a.gain.iter().zip(&b.gain) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs(), "{x} {y}");
        }
        // Vanishing column density: no attenuation and unit transmission.
        let thin = spectrum_with_jobs(&p, &SpectrumParams::new(3.5e19, 1e-18, grid), Some(1)).unwrap();
        assert!(thin.gain.iter().all(|&g| g.abs() < 1e-12));
        assert!(thin.transmission.iter().all(|&t| (t - 1.0).abs() < 1e-12));
    }

    #[test]
    fn transmission_is_exp_gain() {
        let s = SpectrumParams::new(3.5e21, 30e-6, linear_grid(-1e9, 1e9, 3));
        let r = spectrum_with_jobs(&pump_free(), &s, Some(1)).unwrap();
        for (g, t) in r.gain.iter().zip(&r.transmission) {
            assert!(g.is_finite());
            assert!((t - g.exp()).abs() <= 1e-12 * t);
        }
    }

    #[test]
    fn worker_count_does_not_change_the_result() {
        let s = SpectrumParams::new(3.5e19, 30e-6, linear_grid(-2e9, 2e9, 6));
        let one = spectrum_with_jobs(&fig2(), &s, Some(1)).unwrap();
        let three = spectrum_with_jobs(&fig2(), &s, Some(3)).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn failures_carry_grid_indices() {
        // With neither fields nor relaxation coupling the ground states the
        // steady state is not unique.
        let p = SystemParams { omega_pr: 1e-300, ..SystemParams::with_gamma(G3) };
        let s = SpectrumParams::new(1.0, 1.0, vec![0.0, 1.0]);
        match spectrum_with_jobs(&p, &s, Some(1)) {
            Err(Error::Spectrum(failures)) => {
                assert_eq!(failures.iter().map(|f| f.0).collect::<Vec<_>>(), vec![0, 1]);
            }
            other => panic!("{other:?}"),
        }
    }
}
