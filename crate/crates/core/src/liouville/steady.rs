use num_complex::Complex64;

use super::{vec_index, Generator, GeneratorMode, Liouvillian, StateVector};
use crate::error::{Error, Result};
use crate::params::{DensityMatrix, SystemParams};

/// Condition estimates above this are reported as degenerate parameters.
pub const CONDITION_LIMIT: f64 = 1e14;
const RESIDUAL_TOL: f64 = 1e-10;

fn one_norm(a: &Generator) -> f64 {
    (0..16).map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Stationary density matrix of a trace-conserving generator.
///
/// The ρ11 row of L·x = 0 is replaced by the normalization Σρii = 1 (scaled to
/// the generator's magnitude), and the resulting system is solved by LU.
pub fn steady_state(liouvillian: &Liouvillian) -> Result<DensityMatrix> {
    if liouvillian.mode != GeneratorMode::TraceConserving {
        return Err(Error::LiteralSteadyState);
    }
    let scale = liouvillian.norm_inf().max(1.0);
    let mut a = liouvillian.matrix;
    let trace_row = vec_index(0, 0);
    for c in 0..16 {
        a[(trace_row, c)] = Complex64::new(0.0, 0.0);
    }
    for k in 0..4 {
        a[(trace_row, vec_index(k, k))] = Complex64::new(scale, 0.0);
    }
    let mut b = StateVector::zeros();
    b[trace_row] = Complex64::new(scale, 0.0);

    let lu = a.lu();
    let inverse = lu.try_inverse().ok_or(Error::Degenerate { condition: f64::INFINITY })?;
    let condition = one_norm(&a) * one_norm(&inverse);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::Degenerate { condition });
    }
    let x = lu.solve(&b).ok_or(Error::Degenerate { condition })?;

    let mut v = [Complex64::new(0.0, 0.0); 16];
    v.copy_from_slice(x.as_slice());
    let rho = DensityMatrix::from_column_stacked(&v).hermitized();

    let residual = liouvillian.rhs(&rho).max_abs();
    if !(residual <= RESIDUAL_TOL * liouvillian.norm_inf()) {
        return Err(Error::Degenerate { condition });
    }
    rho.check()?;
    Ok(rho)
}

/// ρ13 from the stationary ∂ρ13 equation solved for ρ13:
/// [2iΩpr(ρ33 − ρ11) + 2iΩpu ρ43] / (R + W12 + γ3 + 2iΔpr), R = (r34 + r43)/2.
pub fn coherence_eq4(rho_ss: &DensityMatrix, params: &SystemParams) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let numerator = 2.0 * i * params.omega_pr * rho_ss.probe_inversion() + 2.0 * i * params.omega_pu * rho_ss.rho43();
    let denominator = Complex64::new(params.mean_transfer() + params.w12 + params.gamma3, 2.0 * params.delta_pr);
    numerator / denominator
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const G3: f64 = 2.0 * PI * 5.75e6;

    fn fig2() -> SystemParams {
        SystemParams {
            omega_pr: 0.05 * G3,
            omega_pu: 60.0 * G3,
            w12: 0.5 * G3,
            r34: 2.0 * G3,
            r43: 2.0 * G3,
            ..SystemParams::with_gamma(G3)
        }
    }

    #[test]
    fn field_free_equilibrium_is_balanced_ground() {
        let p = SystemParams { w12: 0.2 * G3, ..SystemParams::with_gamma(G3) };
        let rho = steady_state(&Liouvillian::build(&p, GeneratorMode::TraceConserving)).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::thermal_ground()) < 1e-14);
    }

    #[test]
    fn literal_mode_is_refused() {
        let l = Liouvillian::build(&fig2(), GeneratorMode::PaperLiteral);
        assert_eq!(steady_state(&l), Err(Error::LiteralSteadyState));
    }

    #[test]
    fn field_free_without_wall_exchange_is_degenerate() {
        let l = Liouvillian::build(&SystemParams::with_gamma(G3), GeneratorMode::TraceConserving);
        assert!(matches!(steady_state(&l), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn closed_form_direct_substitution() {
        let p = SystemParams { omega_pr: 1e5, w12: 2e6, r34: 1e7, r43: 3e7, ..SystemParams::with_gamma(G3) };
        let rho = DensityMatrix::diagonal([1.0, 0.0, 0.0, 0.0]);
        let expected = Complex64::new(0.0, -2.0 * p.omega_pr / (2e7 + p.w12 + G3));
        assert!((coherence_eq4(&rho, &p) - expected).norm() <= 1e-15 * expected.norm());
    }

    #[test]
    fn closed_form_pure_coherence_transfer() {
        let p = SystemParams { omega_pu: 3e8, delta_pr: 4e7, w12: 1e6, r34: 1e7, r43: 1e7, ..SystemParams::with_gamma(G3) };
        let mut rho = DensityMatrix::diagonal([0.5, 0.5, 0.0, 0.0]);
        rho[(3, 2)] = Complex64::new(1e-3, 2e-4);
        rho[(2, 3)] = rho[(3, 2)].conj();
        let i = Complex64::new(0.0, 1.0);
        let expected = 2.0 * i * p.omega_pu * rho[(3, 2)] / Complex64::new(1e7 + 1e6 + G3, 2.0 * 4e7);
        assert!((coherence_eq4(&rho, &p) - expected).norm() <= 1e-14 * expected.norm());
    }

    #[test]
    fn closed_form_reproduces_full_solution() {
        let p = fig2();
        let rho = steady_state(&Liouvillian::build(&p, GeneratorMode::TraceConserving)).unwrap();
        let closed = coherence_eq4(&rho, &p);
        assert!((closed - rho.rho13()).norm() <= 1e-8 * rho.rho13().norm());
    }
}
