//! Master-equation generator for the four-level system, its time integration
//! and its stationary state.
//!
//! The density matrix is vectorized column-stacked: element (i, j) sits at
//! index `i + 4j`. The coherent part follows the sign convention of the
//! printed component equations, ∂ρ = i[H, ρ] with
//! H = Δ_HFS|2⟩⟨2| + Δ_pr|3⟩⟨3| + Δ_pu|4⟩⟨4| + Ω_pr(|1⟩⟨3| + h.c.) + Ω_pu(|1⟩⟨4| + h.c.).

mod integrate;
mod steady;

pub use integrate::{evolve, EvolveControls, Trajectory};
pub use steady::{coherence_eq4, steady_state, CONDITION_LIMIT};

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{DensityMatrix, SystemParams};

pub type Generator = SMatrix<Complex64, 16, 16>;
pub type StateVector = SVector<Complex64, 16>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which ∂ρ22 equation the generator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorMode {
    /// The printed equations verbatim. ∂ρ22 lacks the wall-exchange term, so
    /// the trace drifts at W12(ρ22 − ρ11).
    PaperLiteral,
    /// Adds W12(ρ11 − ρ22) to ∂ρ22 so populations only redistribute.
    #[default]
    TraceConserving,
}

/// Column-stacked index of element (i, j), zero-based.
#[inline]
pub const fn vec_index(i: usize, j: usize) -> usize {
    i + 4 * j
}

/// 16×16 generator acting on the column-stacked density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    pub matrix: Generator,
    pub mode: GeneratorMode,
}

impl Liouvillian {
    /// Builds the generator for `params`.
    ///
    /// Directional transfer: |3⟩ loses population at r34 and |4⟩ at r43.
    /// Coherence damping uses R = (r34 + r43)/2 wherever the symmetric model
    /// has R. `gamma_laser` damps ρ13, ρ14 and their conjugates only.
    pub fn build(params: &SystemParams, mode: GeneratorMode) -> Self {
        let p = params;
        let mut m = Generator::zeros();

        let mut h = [[0.0_f64; 4]; 4];
        h[1][1] = p.delta_hfs;
        h[2][2] = p.delta_pr;
        h[3][3] = p.delta_pu;
        h[0][2] = p.omega_pr;
        h[2][0] = p.omega_pr;
        h[0][3] = p.omega_pu;
        h[3][0] = p.omega_pu;

        // i[H, ρ]_ij = i Σ_k H_ik ρ_kj − i Σ_k ρ_ik H_kj
        for i in 0..4 {
            for j in 0..4 {
                let row = vec_index(i, j);
                for k in 0..4 {
                    if h[i][k] != 0.0 {
                        m[(row, vec_index(k, j))] += I * h[i][k];
                    }
                    if h[k][j] != 0.0 {
                        m[(row, vec_index(i, k))] -= I * h[k][j];
                    }
                }
            }
        }

        let r = p.mean_transfer();
        let w = p.w12;
        let (g3, g4, gl) = (p.gamma3, p.gamma4, p.gamma_laser);
        let damping = [
            ((0, 1), w),
            ((0, 2), 0.5 * (r + w + g3) + gl),
            ((0, 3), 0.5 * (r + w + g4) + gl),
            ((1, 2), 0.5 * (r + w + g3)),
            ((1, 3), 0.5 * (r + w + g4)),
            ((2, 3), 0.5 * (2.0 * r + g3 + g4)),
        ];
        for ((i, j), rate) in damping {
            m[(vec_index(i, j), vec_index(i, j))] -= Complex64::from(rate);
            m[(vec_index(j, i), vec_index(j, i))] -= Complex64::from(rate);
        }

        let pop = |k: usize| vec_index(k, k);
        let mut add = |to: usize, from: usize, rate: f64| {
            m[(pop(to), pop(from))] += Complex64::from(rate);
        };
        add(0, 0, -w);
        add(0, 1, w);
        add(0, 2, 0.5 * g3);
        add(0, 3, 0.5 * g4);
        add(1, 2, 0.5 * g3);
        add(1, 3, 0.5 * g4);
        if mode == GeneratorMode::TraceConserving {
            add(1, 0, w);
            add(1, 1, -w);
        }
        add(2, 2, -(p.r34 + g3));
        add(2, 3, p.r43);
        add(3, 2, p.r34);
        add(3, 3, -(p.r43 + g4));

        Self { matrix: m, mode }
    }

    /// dρ/dt for the given state.
    pub fn rhs(&self, rho: &DensityMatrix) -> DensityMatrix {
        let x = StateVector::from_column_slice(&rho.to_column_stacked());
        let dx = self.matrix * x;
        let mut out = [Complex64::new(0.0, 0.0); 16];
        out.copy_from_slice(dx.as_slice());
        DensityMatrix::from_column_stacked(&out)
    }

    /// Max absolute row sum (induced ∞-norm), the generator's rate scale.
    pub fn norm_inf(&self) -> f64 {
        (0..16)
            .map(|r| self.matrix.row(r).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Alias of [`Liouvillian::build`].
pub fn build_liouvillian(params: &SystemParams, mode: GeneratorMode) -> Liouvillian {
    Liouvillian::build(params, mode)
}

/// Alias of [`Liouvillian::rhs`].
pub fn rhs(rho: &DensityMatrix, liouvillian: &Liouvillian) -> DensityMatrix {
    liouvillian.rhs(rho)
}

/// Evaluates the sixteen component equations one by one, written out exactly
/// as the four-level model is usually printed (symmetric R generalized to
/// r34/r43, plus the pump detuning and optional laser dephasing). This is an
/// independent path to [`Liouvillian::rhs`] and exists to cross-check it.
pub fn component_rhs(rho: &DensityMatrix, params: &SystemParams, mode: GeneratorMode) -> DensityMatrix {
    let p = |i: usize, j: usize| rho[(i - 1, j - 1)];
    let c = |x: f64| Complex64::new(x, 0.0);

    let w = params.w12;
    let r = params.mean_transfer();
    let (r34, r43) = (params.r34, params.r43);
    let (g3, g4, gl) = (params.gamma3, params.gamma4, params.gamma_laser);
    let (opr, opu) = (params.omega_pr, params.omega_pu);
    let (dpr, dpu, hfs) = (params.delta_pr, params.delta_pu, params.delta_hfs);

    let mut d = DensityMatrix::zero();
    let mut set = |i: usize, j: usize, v: Complex64| d[(i - 1, j - 1)] = v;

    set(
        1,
        1,
        0.5 * (2.0 * w * (-p(1, 1) + p(2, 2)) + g3 * p(3, 3) + g4 * p(4, 4)
            - 2.0 * I * ((p(1, 3) - p(3, 1)) * opr + (p(1, 4) - p(4, 1)) * opu)),
    );
    set(1, 2, -(c(w) + I * hfs) * p(1, 2) + I * (p(3, 2) * opr + p(4, 2) * opu));
    set(
        1,
        3,
        -0.5 * (c(r + w + g3) + 2.0 * I * dpr) * p(1, 3) - c(gl) * p(1, 3) - I * (p(1, 1) - p(3, 3)) * opr
            + I * p(4, 3) * opu,
    );
    set(
        1,
        4,
        -0.5 * (c(r + w + g4) + 2.0 * I * dpu) * p(1, 4) - c(gl) * p(1, 4)
            + I * (p(3, 4) * opr + (-p(1, 1) + p(4, 4)) * opu),
    );
    set(2, 1, -(c(w) - I * hfs) * p(2, 1) - I * (p(2, 3) * opr + p(2, 4) * opu));
    let mut d22 = 0.5 * (g3 * p(3, 3) + g4 * p(4, 4));
    if mode == GeneratorMode::TraceConserving {
        d22 += w * (p(1, 1) - p(2, 2));
    }
    set(2, 2, d22);
    set(
        2,
        3,
        -0.5 * (c(r + w + g3) - 2.0 * I * hfs + 2.0 * I * dpr) * p(2, 3) - I * p(2, 1) * opr,
    );
    set(
        2,
        4,
        -0.5 * (c(r + w + g4) - 2.0 * I * hfs + 2.0 * I * dpu) * p(2, 4) - I * p(2, 1) * opu,
    );
    set(
        3,
        1,
        -0.5 * (c(r + w + g3) - 2.0 * I * dpr) * p(3, 1) - c(gl) * p(3, 1)
            + I * ((p(1, 1) - p(3, 3)) * opr - p(3, 4) * opu),
    );
    set(
        3,
        2,
        -0.5 * (c(r + w + g3) + 2.0 * I * hfs - 2.0 * I * dpr) * p(3, 2) + I * p(1, 2) * opr,
    );
    set(3, 3, -(r34 + g3) * p(3, 3) + r43 * p(4, 4) + I * (p(1, 3) - p(3, 1)) * opr);
    set(
        3,
        4,
        -0.5 * (c(2.0 * r + g3 + g4) - 2.0 * I * dpr + 2.0 * I * dpu) * p(3, 4)
            + I * (p(1, 4) * opr - p(3, 1) * opu),
    );
    set(
        4,
        1,
        -0.5 * (c(r + w + g4) - 2.0 * I * dpu) * p(4, 1) - c(gl) * p(4, 1)
            - I * (p(4, 3) * opr + (-p(1, 1) + p(4, 4)) * opu),
    );
    set(
        4,
        2,
        -0.5 * (c(r + w + g4) + 2.0 * I * hfs - 2.0 * I * dpu) * p(4, 2) + I * p(1, 2) * opu,
    );
    set(
        4,
        3,
        -0.5 * (c(2.0 * r + g3 + g4) + 2.0 * I * dpr - 2.0 * I * dpu) * p(4, 3)
            + I * (-p(4, 1) * opr + p(1, 3) * opu),
    );
    set(4, 4, r34 * p(3, 3) - (r43 + g4) * p(4, 4) + I * (p(1, 4) - p(4, 1)) * opu);
    d
}
