//! Analytic solution of the quartic one-matrix model `V = x²/2 + β x⁴`.
//!
//! The Cauchy transform `G(z) = ∫ (z−x)^{-1} dτ(x)` satisfies the quadratic
//! equation `G² = 4β z³ G + z G + P(z)` with `P` a polynomial of degree two.
//! On the one-cut ansatz (connected support `[-a, a]`) `G` takes the form
//! `G = (V'(z) − M(z) √(z²−a²))/2` with `M(z) = 4β z² + c₀`; matching the
//! `1/z` expansion fixes `c₀ = 1 + 2β a²` and the endpoint equation
//!
//! `3 β a⁴ + a² − 4 = 0`,
//!
//! which reduces to `a = 2` at `β = 0` (the semicircle). The endpoint is
//! continued in `β` from the semicircle by damped Newton steps. The spectral
//! density is `ρ(x) = M(x) √(a²−x²) / 2π`; it stays nonnegative for
//! `β ≥ -1/48`, and the solver refuses couplings beyond the point where the
//! one-cut ansatz breaks.
//!
//! Moments come from the `1/z` expansion of `G` algebraically and are
//! cross-checked against quadrature of `x^k ρ(x)` on every call.

use std::f64::consts::PI;

use thiserror::Error;

use crate::numeric::quadrature::gauss_legendre_on;
use crate::C64;

#[derive(Debug, Error)]
pub enum OneMatrixError {
    #[error("Newton continuation diverged at β = {beta}")]
    NewtonDiverged { beta: f64 },
    #[error("one-cut ansatz invalid at β = {beta}: min density {min_density:.3e} < 0 (support is no longer connected)")]
    DensityNegative { beta: f64, min_density: f64 },
    #[error("algebraic and quadrature moments disagree at degree {degree}: {algebraic} vs {quadrature}")]
    MomentMismatch { degree: usize, algebraic: f64, quadrature: f64 },
}

/// One-cut solution: support `[-a, a]`, density `(4βx² + c₀)√(a²−x²)/2π`.
#[derive(Clone, Debug)]
pub struct OneCutSolution {
    beta: f64,
    a: f64,
    c0: f64,
    /// `β >= 0`; negative couplings are admitted while the density stays
    /// nonnegative but lie outside the convex regime.
    in_convex_regime: bool,
}

/// Newton iteration for the endpoint equation `3βu² + u − 4 = 0`, `u = a²`.
fn newton_endpoint(beta: f64, start: f64) -> Option<f64> {
    let mut u = start;
    for _ in 0..200 {
        let f = 3.0 * beta * u * u + u - 4.0;
        let df = 6.0 * beta * u + 1.0;
        if df.abs() < 1e-14 {
            return None;
        }
        let step = f / df;
        u -= step;
        if !u.is_finite() || u <= 0.0 {
            return None;
        }
        if step.abs() < 1e-14 * u.abs().max(1.0) {
            return Some(u);
        }
    }
    None
}

/// Solve the one-cut model at coupling `β`, continuing from the `β = 0`
/// semicircle in steps of at most 0.005 with step halving on divergence.
pub fn solve_one_cut(beta: f64) -> Result<OneCutSolution, OneMatrixError> {
    let mut current = 0.0f64;
    let mut u = 4.0f64;
    let mut step = 0.005f64.min(beta.abs().max(1e-12));
    let direction = if beta >= 0.0 { 1.0 } else { -1.0 };
    while (beta - current).abs() > 1e-15 {
        let next = if (beta - current).abs() <= step {
            beta
        } else {
            current + direction * step
        };
        match newton_endpoint(next, u) {
            Some(found) => {
                current = next;
                u = found;
            }
            None => {
                step *= 0.5;
                if step < 1e-10 {
                    return Err(OneMatrixError::NewtonDiverged { beta: next });
                }
            }
        }
    }
    let a = u.sqrt();
    let c0 = 1.0 + 2.0 * beta * u;
    // density minimum on the support sits at the edges for β < 0
    let min_density_coeff = (4.0 * beta * u + c0).min(c0);
    if min_density_coeff < -1e-12 {
        return Err(OneMatrixError::DensityNegative {
            beta,
            min_density: min_density_coeff,
        });
    }
    Ok(OneCutSolution { beta, a, c0, in_convex_regime: beta >= 0.0 })
}

/// Coefficients of `√(1−u) = Σ b_j u^j`.
fn sqrt_series(terms: usize) -> Vec<f64> {
    let mut b = vec![0.0; terms];
    b[0] = 1.0;
    for j in 1..terms {
        b[j] = b[j - 1] * (j as f64 - 1.5) / j as f64;
    }
    b
}

impl OneCutSolution {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Support endpoint `a`.
    pub fn support_edge(&self) -> f64 {
        self.a
    }

    pub fn in_convex_regime(&self) -> bool {
        self.in_convex_regime
    }

    /// Spectral density; zero outside the support.
    pub fn density_at(&self, x: f64) -> f64 {
        if x.abs() > self.a {
            return 0.0;
        }
        (4.0 * self.beta * x * x + self.c0) * (self.a * self.a - x * x).sqrt() / (2.0 * PI)
    }

    /// Cauchy transform off the support, with the branch `G ~ 1/z` at infinity.
    pub fn cauchy_transform(&self, z: C64) -> C64 {
        let vp = z * 4.0 * self.beta * z * z + z;
        let mz = z * z * 4.0 * self.beta + self.c0;
        let s = (z - self.a).sqrt() * (z + self.a).sqrt();
        (vp - mz * s) * 0.5
    }

    /// Residual of the defining equation `G² − 4βz³G − zG − P(z)` at `z`,
    /// with `P(z) = −1 − 4β(z² + m₂)` fixed by the `1/z` decay of `G`.
    pub fn algebraic_residual(&self, z: C64) -> f64 {
        let g = self.cauchy_transform(z);
        let m2 = self.moment_algebraic(2);
        let p = -C64::new(4.0 * self.beta, 0.0) * (z * z + m2) - 1.0;
        (g * g - z * z * z * g * 4.0 * self.beta - z * g - p).norm()
    }

    fn moment_algebraic(&self, degree: usize) -> f64 {
        if degree % 2 == 1 {
            return 0.0;
        }
        let k = degree / 2;
        let b = sqrt_series(k + 3);
        let u = self.a * self.a;
        -0.5 * u.powi(k as i32 + 1) * (4.0 * self.beta * u * b[k + 2] + self.c0 * b[k + 1])
    }

    fn moment_quadrature(&self, degree: usize) -> f64 {
        // x = a sinθ softens the square-root edge; the integrand becomes a
        // trigonometric polynomial
        let nodes = 96 + 2 * degree;
        let (ts, ws) = gauss_legendre_on(nodes, -PI / 2.0, PI / 2.0);
        let mut acc = 0.0;
        for (t, w) in ts.iter().zip(&ws) {
            let x = self.a * t.sin();
            let jac = self.a * t.cos();
            acc += w * x.powi(degree as i32) * self.density_at(x) * jac;
        }
        acc
    }

    /// Moments `τ(x^0), ..., τ(x^up_to)`, from the `1/z` expansion of `G`,
    /// verified against quadrature of `x^k ρ(x)` to 1e-9.
    pub fn moments(&self, up_to: usize) -> Result<Vec<f64>, OneMatrixError> {
        let mut out = Vec::with_capacity(up_to + 1);
        for k in 0..=up_to {
            let alg = self.moment_algebraic(k);
            let quad = self.moment_quadrature(k);
            if (alg - quad).abs() > 1e-9 * alg.abs().max(1.0) {
                return Err(OneMatrixError::MomentMismatch {
                    degree: k,
                    algebraic: alg,
                    quadrature: quad,
                });
            }
            out.push(alg);
        }
        Ok(out)
    }

    /// Cumulative distribution of the spectral measure.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= -self.a {
            return 0.0;
        }
        if x >= self.a {
            return 1.0;
        }
        // integrate the density in the θ variable up to asin(x/a)
        let upper = (x / self.a).asin();
        let (ts, ws) = gauss_legendre_on(128, -PI / 2.0, upper);
        ts.iter()
            .zip(&ws)
            .map(|(t, w)| {
                let y = self.a * t.sin();
                w * self.density_at(y) * self.a * t.cos()
            })
            .sum()
    }

    /// Chebyshev coefficients `c_n = ∫ T_n(x/a) ρ(x) dx`.
    fn chebyshev_coeffs(&self, n_max: usize) -> Vec<f64> {
        let (ts, ws) = gauss_legendre_on(256, -PI / 2.0, PI / 2.0);
        let mut coeffs = vec![0.0; n_max + 1];
        for (t, w) in ts.iter().zip(&ws) {
            let u = t.sin();
            let weight = w * self.density_at(self.a * u) * self.a * t.cos();
            // T_n(u) by recurrence
            let mut t0 = 1.0;
            let mut t1 = u;
            coeffs[0] += weight * t0;
            if n_max >= 1 {
                coeffs[1] += weight * t1;
            }
            for c in coeffs.iter_mut().take(n_max + 1).skip(2) {
                let t2 = 2.0 * u * t1 - t0;
                *c += weight * t2;
                t0 = t1;
                t1 = t2;
            }
        }
        coeffs
    }

    /// Logarithmic energy `∫∫ log|x−y| dτ(x) dτ(y)` via the Chebyshev
    /// expansion `log|u−v| = −log 2 − Σ (2/n) T_n(u) T_n(v)`.
    pub fn log_energy(&self) -> f64 {
        let coeffs = self.chebyshev_coeffs(64);
        let mut acc = (self.a / 2.0).ln();
        for (n, c) in coeffs.iter().enumerate().skip(1) {
            acc -= 2.0 / n as f64 * c * c;
        }
        acc
    }

    /// The microstates free entropy of this spectral measure,
    /// `χ = ∫∫ log|x−y| dτ dτ + 3/4 + ½ log 2π`: the independent oracle for
    /// the interpolation formula.
    pub fn free_entropy_log_energy(&self) -> f64 {
        self.log_energy() + 0.75 + 0.5 * (2.0 * PI).ln()
    }

    /// Taylor coefficients of `β ↦ τ(x^{2k})` at `β = 0` through the given
    /// order, by power-series composition of the closed-form solution
    /// (independent of the moment recursion).
    pub fn taylor_moments(order: usize, k: usize) -> Vec<f64> {
        let len = order + 1;
        let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; len];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    if i + j < len {
                        out[i + j] += x * y;
                    }
                }
            }
            out
        };
        // u = 4 − 3 β u²
        let mut u = vec![0.0; len];
        u[0] = 4.0;
        for _ in 0..len {
            let u2 = mul(&u, &u);
            let mut next = vec![0.0; len];
            next[0] = 4.0;
            for j in 1..len {
                next[j] = -3.0 * u2[j - 1];
            }
            u = next;
        }
        let b = sqrt_series(k + 3);
        // m = −½ u^{k+1} (4 β u b_{k+2} + (1 + 2 β u) b_{k+1})
        let mut upow = vec![0.0; len];
        upow[0] = 1.0;
        for _ in 0..=k {
            upow = mul(&upow, &u);
        }
        let mut inner = vec![0.0; len];
        inner[0] = b[k + 1];
        for j in 1..len {
            inner[j] = 4.0 * b[k + 2] * u[j - 1] + 2.0 * b[k + 1] * u[j - 1];
        }
        let prod = mul(&upow, &inner);
        prod.iter().map(|x| -0.5 * x).collect()
    }
}
