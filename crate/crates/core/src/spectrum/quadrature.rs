//! Rules for ∫ f(x) e^{−x²} dx over the real line.

use std::f64::consts::PI;

/// Half-width of the trapezoid window in x = v/u. e^{−36} ≈ 2e−16.
pub const TRAPEZOID_HALF_WIDTH: f64 = 6.0;

/// Gauss–Hermite nodes and weights for weight e^{−x²}.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Roots of H_n by safeguarded Newton iteration on the orthonormal
    /// recurrence.
    ///
    /// The recurrence is rescaled on the fly so that large orders (roots near
    /// √(2n)) neither overflow nor lose their weights to underflow before the
    /// final exponentiation. The sign changes along the recurrence count the
    /// roots above a trial point, which keeps every Newton iterate bracketed
    /// on the intended root.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let half = n.div_ceil(2);
        let mut z = 0.0_f64;
        let mut upper = (2.0 * nf + 1.0).sqrt() + 1.0;
        let coefficients = RecurrenceCoefficients::new(n);
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let (mut lo, mut hi) = (-1e-3, upper);
            if !(z > lo && z < hi) {
                z = 0.5 * (lo + hi);
            }
            let mut log_pp = 0.0;
            for _ in 0..300 {
                let eval = coefficients.evaluate(z);
                if eval.roots_above > i {
                    lo = z;
                } else {
                    hi = z;
                }
                let pp = (2.0 * nf).sqrt() * eval.p_nm1;
                log_pp = pp.abs().ln() + eval.log_scale;
                let dz = eval.p_n / pp;
                let resolution = 4.0 * f64::EPSILON * z.abs().max(1.0);
                // Once the correction is at round-off level the sign of p_n is
                // noise, so the bracket can no longer be trusted to shrink.
                if dz.abs() <= resolution {
                    z -= dz;
                    break;
                }
                let mut next = z - dz;
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                z = next;
                if hi - lo <= resolution {
                    break;
                }
            }
            if n % 2 == 1 && i == half - 1 {
                z = 0.0;
                let eval = coefficients.evaluate(0.0);
                log_pp = ((2.0 * nf).sqrt() * eval.p_nm1).abs().ln() + eval.log_scale;
            }
            upper = z;
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = (2.0_f64.ln() - 2.0 * log_pp).exp();
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        // Ascending order.
        nodes.reverse();
        weights.reverse();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

struct HermiteEval {
    p_n: f64,
    p_nm1: f64,
    /// True values are the stored ones times e^{log_scale}.
    log_scale: f64,
    /// Sign changes along p_0..p_n, i.e. the number of roots above z.
    roots_above: usize,
}

/// √(2/j) and √((j−1)/j) for j = 1..=n.
struct RecurrenceCoefficients {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl RecurrenceCoefficients {
    fn new(n: usize) -> Self {
        let a = (1..=n).map(|j| (2.0 / j as f64).sqrt()).collect();
        let b = (1..=n).map(|j| ((j as f64 - 1.0) / j as f64).sqrt()).collect();
        Self { a, b }
    }

    fn evaluate(&self, z: f64) -> HermiteEval {
        const BIG: f64 = 1e150;
        let mut p1 = PI.powf(-0.25);
        let mut p2 = 0.0;
        let mut log_scale = 0.0;
        let mut roots_above = 0;
        let mut last_negative = false;
        for (a, b) in self.a.iter().zip(&self.b) {
            let p3 = p2;
            p2 = p1;
            p1 = z * a * p2 - b * p3;
            if p1 != 0.0 {
                let negative = p1 < 0.0;
                roots_above += (negative != last_negative) as usize;
                last_negative = negative;
            }
            if p1.abs() > BIG {
                p1 /= BIG;
                p2 /= BIG;
                log_scale += BIG.ln();
            }
        }
        HermiteEval { p_n: p1, p_nm1: p2, log_scale, roots_above }
    }
}

/// Nested uniform rule on [−X, X]. Doubling the interval count reuses every
/// previous sample, so successive refinements only evaluate the new midpoints.
pub struct NestedTrapezoid {
    half_width: f64,
    intervals: usize,
    /// Σ' f(x_j): endpoint samples count one half.
    weighted_sum: f64,
}

impl NestedTrapezoid {
    /// Starts with `intervals` intervals, sampling `f` at all intervals + 1 points.
    pub fn new<F: FnMut(f64) -> Result<f64, E>, E>(half_width: f64, intervals: usize, mut f: F) -> Result<Self, E> {
        let h = 2.0 * half_width / intervals as f64;
        let mut sum = 0.0;
        for j in 0..=intervals {
            let x = -half_width + h * j as f64;
            let weight = if j == 0 || j == intervals { 0.5 } else { 1.0 };
            sum += weight * f(x)?;
        }
        Ok(Self { half_width, intervals, weighted_sum: sum })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }

    pub fn estimate(&self) -> f64 {
        self.step() * self.weighted_sum
    }

    /// Halves the step, evaluating `f` at the new midpoints only.
    pub fn refine<F: FnMut(f64) -> Result<f64, E>, E>(&mut self, mut f: F) -> Result<(), E> {
        let h = self.step();
        for j in 0..self.intervals {
            let x = -self.half_width + h * (j as f64 + 0.5);
            self.weighted_sum += f(x)?;
        }
        self.intervals *= 2;
        Ok(())
    }
}
