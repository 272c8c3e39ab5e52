//! Adaptive Dormand–Prince 5(4) integration of dρ/dt = Lρ.
//!
//! Explicit Runge–Kutta steps with real coefficients preserve every linear
//! invariant of the generator, so trace and Hermiticity are kept to round-off.

use num_complex::Complex64;

use super::{Liouvillian, StateVector};
use crate::error::{Error, Result};
use crate::params::DensityMatrix;

/// Step-size and stopping controls for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step, s. `None` leaves it to the error controller.
    pub max_step: Option<f64>,
    /// Minimum spacing between stored states, s. `None` stores every step.
    pub sample_interval: Option<f64>,
    /// Stop as soon as the convergence criterion holds.
    pub stop_when_converged: bool,
    /// Converged when ‖dρ/dt‖∞ < factor · max(γ3, 1).
    pub convergence_factor: f64,
    pub max_steps: usize,
}

impl Default for EvolveControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            sample_interval: None,
            stop_when_converged: false,
            convergence_factor: 1e-6,
            max_steps: 20_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub converged: bool,
    /// ‖dρ/dt‖∞ at the final state, rad/s.
    pub final_residual: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds the initial time")
    }
}

// Dormand–Prince tableau. The system is autonomous, so the c nodes are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const REJECTS_BEFORE_FALLBACK: usize = 10;

fn inf_norm(v: &StateVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// y + h·Σ c_k·k_k
fn axpy(y: &StateVector, h: f64, terms: &[(f64, &StateVector)]) -> StateVector {
    let mut out = *y;
    for (c, k) in terms {
        let scale = h * c;
        for (o, z) in out.iter_mut().zip(k.iter()) {
            *o += z * scale;
        }
    }
    out
}

fn to_density(v: &StateVector) -> DensityMatrix {
    let mut a = [Complex64::new(0.0, 0.0); 16];
    a.copy_from_slice(v.as_slice());
    DensityMatrix::from_column_stacked(&a)
}

/// Integrates ρ from t = 0 to `t_end` (or to convergence, if requested).
///
/// `gamma3` sets the convergence scale, ‖dρ/dt‖∞ < factor · max(γ3, 1).
pub fn evolve(
    rho0: &DensityMatrix,
    liouvillian: &Liouvillian,
    gamma3: f64,
    t_end: f64,
    controls: &EvolveControls,
) -> Result<Trajectory> {
    rho0.check()?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(crate::error::invalid("t_end", format!("must be finite and >= 0, got {t_end}")));
    }
    let l = &liouvillian.matrix;
    let threshold = controls.convergence_factor * gamma3.max(1.0);
    let norm = liouvillian.norm_inf();
    // Fallback step cap after repeated rejections: 1/(50·fastest rate).
    let fallback_step = if norm > 0.0 { 1.0 / (50.0 * norm) } else { f64::INFINITY };
    let mut max_step = controls.max_step.unwrap_or(f64::INFINITY).min(t_end.max(f64::MIN_POSITIVE));

    let mut y = StateVector::from_column_slice(&rho0.to_column_stacked());
    let mut k1 = l * y;
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![*rho0];
    let mut last_stored = 0.0;
    let mut steps = 0usize;

    let mut h = if norm > 0.0 { (0.1 / norm).min(max_step) } else { max_step };
    let mut rejects = 0usize;
    let mut converged = inf_norm(&k1) < threshold;

    while t < t_end && !(controls.stop_when_converged && converged) {
        if steps >= controls.max_steps {
            return Err(Error::StepLimit { time: t, steps });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs() || h < f64::MIN_POSITIVE {
            return Err(Error::StepUnderflow { time: t, step: h });
        }

        let k2 = l * axpy(&y, h, &[(A21, &k1)]);
        let k3 = l * axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k4 = l * axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k5 = l * axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k6 = l * axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = l * y_new;
        let err_vec = axpy(&StateVector::zeros(), h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);

        let err = (err_vec
            .iter()
            .zip(y.iter().zip(y_new.iter()))
            .map(|(e, (a, b))| {
                let scale = controls.abs_tol + controls.rel_tol * a.norm().max(b.norm());
                (e.norm() / scale).powi(2)
            })
            .sum::<f64>()
            / 16.0)
            .sqrt();

        if !err.is_finite() || err > 1.0 {
            rejects += 1;
            if rejects >= REJECTS_BEFORE_FALLBACK {
                max_step = max_step.min(fallback_step);
            }
            let factor = if err.is_finite() { (SAFETY * err.powf(-0.2)).max(MIN_FACTOR) } else { MIN_FACTOR };
            h = (h * factor).min(max_step);
            continue;
        }

        rejects = 0;
        steps += 1;
        t = if last { t_end } else { t + h };
        y = y_new;
        k1 = k7;
        converged = inf_norm(&k1) < threshold;

        let due = controls.sample_interval.is_none_or(|dt| t - last_stored >= dt);
        if due || last || (controls.stop_when_converged && converged) {
            times.push(t);
            states.push(to_density(&y));
            last_stored = t;
        }

        let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
        h = (h * factor).min(max_step);
    }

    Ok(Trajectory { times, states, converged, final_residual: inf_norm(&k1), steps })
}
