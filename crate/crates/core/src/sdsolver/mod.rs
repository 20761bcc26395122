//! Schwinger-Dyson moment solving.
//!
//! The tracial state `τ_V` of the potential `V = (α/2) Σ X_i² + Σ β_j q_j`
//! is characterized by the relation `τ⊗τ(∂_i P) = τ(D_i V · P)` for all
//! monomials `P` and letters `i`. Writing the relation for `P' = X_i P`
//! expresses the moment of any word through strictly smaller data:
//!
//! `τ(X_i P) = (1/α) [ τ⊗τ(∂_i P) − Σ_j β_j τ(D_i q_j · P) ]`
//!
//! The coupling term raises the word degree by `deg q_j − 2` but carries an
//! explicit factor `β_j`, so induction runs on (total β-order, then word
//! degree). [`series::solve_series`] exploits the resulting triangularity to
//! compute the exact coefficient functionals order by order; the coefficients
//! are signed planar-map counts. [`fixed_point::solve_fixed_point`] instead
//! iterates the damped relation at fixed real couplings.
//!
//! Moments are stored on necklace representatives (words up to cyclic
//! rotation, and up to reversal in the self-adjoint real mode), so traciality
//! is structural rather than asserted.

use std::collections::HashMap;

use thiserror::Error;

use crate::ncpoly::{Potential, Word};
use crate::{C64, CMat};

pub mod fixed_point;
pub mod series;

pub use fixed_point::{solve_fixed_point, FixedPointOptions, FixedPointSolution};
pub use series::{solve_series, BetaSeries, SeriesEvaluation};

#[derive(Debug, Error)]
pub enum SdError {
    #[error("moment of degree {needed} required but functional is truncated at {cap}")]
    DegreeOverflow { needed: usize, cap: usize },
    #[error("moment bound exceeded: |τ({word})| = {value:.3e} > R^deg = {bound:.3e}; couplings are outside the contraction regime")]
    Divergence { word: String, value: f64, bound: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e} > tol {tol:.3e})")]
    MaxIterExceeded { iterations: usize, residual: f64, tol: f64 },
    #[error("the numeric fixed point requires a self-adjoint potential")]
    SelfAdjointRequired,
    #[error("the numeric fixed point requires real couplings, got {0}")]
    ComplexCoupling(C64),
    #[error("degree cap {degree} is insufficient; the recursion needs internal degree {required}")]
    InsufficientDegree { degree: usize, required: usize },
    #[error("quadratic weight must be positive, got {0}")]
    NonPositiveWeight(f64),
}

/// How words are identified when storing moments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// Up to cyclic rotation (traciality).
    Cyclic,
    /// Up to rotation and reversal; valid for real moments of self-adjoint
    /// letters, where `τ(w reversed) = τ(w)`.
    CyclicReversal,
}

/// Canonical necklace representative of a word under the given symmetry.
pub fn canonical_word(w: &Word, symmetry: Symmetry) -> Word {
    if w.degree() <= 1 {
        return w.clone();
    }
    let mut best = w.clone();
    let mut consider = |cand: Word| {
        if cand < best {
            best = cand;
        }
    };
    for r in 1..w.degree() {
        consider(w.rotated(r));
    }
    if symmetry == Symmetry::CyclicReversal {
        let rev = w.reversed();
        for r in 0..w.degree() {
            consider(rev.rotated(r));
        }
    }
    best
}

/// All canonical representatives of the given exact degree over `m` unstarred
/// letters, in canonical order.
pub fn necklaces(m: usize, degree: usize, symmetry: Symmetry) -> Vec<Word> {
    if degree == 0 {
        return vec![Word::unit()];
    }
    let mut out = Vec::new();
    // enumerate words as base-m counters and keep the self-canonical ones
    let mut digits = vec![0usize; degree];
    loop {
        let w = Word::from_letters(digits.iter().map(|d| crate::Letter::new(d + 1)).collect());
        if canonical_word(&w, symmetry) == w {
            out.push(w);
        }
        let mut i = 0;
        loop {
            if i == degree {
                return out;
            }
            digits[i] += 1;
            if digits[i] < m {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// All words of an exact degree over `m` unstarred letters, lexicographic.
pub fn all_words(m: usize, degree: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let total = (m as u64).pow(degree as u32);
    for code in 0..total {
        let mut c = code;
        let mut letters = Vec::with_capacity(degree);
        for _ in 0..degree {
            letters.push(crate::Letter::new((c % m as u64) as usize + 1));
            c /= m as u64;
        }
        letters.reverse();
        out.push(Word::from_letters(letters));
    }
    out
}

/// A truncated tracial moment functional: word -> complex moment, stored on
/// necklace representatives with `τ(1) = 1`.
#[derive(Clone, Debug)]
pub struct MomentFunctional {
    m: usize,
    max_degree: usize,
    symmetry: Symmetry,
    moments: HashMap<Word, C64>,
}

impl MomentFunctional {
    pub fn new(m: usize, max_degree: usize, symmetry: Symmetry) -> Self {
        MomentFunctional { m, max_degree, symmetry, moments: HashMap::new() }
    }

    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// `τ(w)`, or `None` beyond the degree truncation.
    pub fn moment(&self, w: &Word) -> Option<C64> {
        if w.degree() > self.max_degree {
            return None;
        }
        if w.is_unit() {
            return Some(C64::ONE);
        }
        Some(
            self.moments
                .get(&canonical_word(w, self.symmetry))
                .copied()
                .unwrap_or(C64::ZERO),
        )
    }

    /// `τ(w)` with words beyond the truncation read as zero.
    pub fn moment_or_zero(&self, w: &Word) -> C64 {
        self.moment(w).unwrap_or(C64::ZERO)
    }

    pub fn set(&mut self, w: Word, value: C64) {
        debug_assert!(w.degree() <= self.max_degree);
        if w.is_unit() {
            debug_assert!((value - C64::ONE).norm() < 1e-14, "τ(1) is fixed to 1");
            return;
        }
        self.moments.insert(canonical_word(&w, self.symmetry), value);
    }

    /// Linear extension to polynomials.
    pub fn poly_moment(&self, p: &crate::NCPoly) -> Option<C64> {
        let mut acc = C64::ZERO;
        for (w, c) in p.terms() {
            acc += c * self.moment(w)?;
        }
        Some(acc)
    }

    /// Stored necklace representatives in canonical order.
    pub fn words(&self) -> Vec<Word> {
        let mut v: Vec<Word> = self.moments.keys().cloned().collect();
        v.sort();
        v
    }

    /// Largest `|τ(w)|^(1/deg w)` over stored words: the observed moment
    /// growth rate.
    pub fn growth_rate(&self) -> f64 {
        self.moments
            .iter()
            .map(|(w, v)| v.norm().powf(1.0 / w.degree() as f64))
            .fold(0.0, f64::max)
    }

    /// The Hermitian moment matrix `[τ(u* v)]` over unstarred words `u, v` of
    /// degree at most `half_degree` (the adjoint of a word in self-adjoint
    /// letters is its reversal).
    pub fn moment_matrix(&self, half_degree: usize) -> Result<CMat, SdError> {
        if 2 * half_degree > self.max_degree {
            return Err(SdError::DegreeOverflow { needed: 2 * half_degree, cap: self.max_degree });
        }
        let mut basis = Vec::new();
        for d in 0..=half_degree {
            basis.extend(all_words(self.m, d));
        }
        let n = basis.len();
        let mut mat = faer::Mat::zeros(n, n);
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                let w = u.reversed().concat(v);
                mat[(i, j)] = self.moment(&w).unwrap();
            }
        }
        Ok(mat)
    }

    /// Smallest eigenvalue of the moment matrix; nonnegative (within
    /// tolerance) for genuine laws of self-adjoint tuples.
    pub fn moment_matrix_min_eigenvalue(&self, half_degree: usize) -> Result<f64, SdError> {
        let mat = self.moment_matrix(half_degree)?;
        let eigs = mat
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .expect("eigensolve failed");
        Ok(eigs.first().copied().unwrap_or(0.0))
    }

    /// Check `|τ(w)| <= R^deg(w)` for all stored words.
    pub fn check_bound(&self, r: f64) -> Result<(), SdError> {
        for (w, v) in &self.moments {
            let bound = r.powi(w.degree() as i32);
            if v.norm() > bound {
                return Err(SdError::Divergence {
                    word: w.to_string(),
                    value: v.norm(),
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// The residual `τ⊗τ(∂_i P) − τ(D_i V · P)`; zero for an exact solution.
pub fn sd_residual(
    tau: &MomentFunctional,
    v: &Potential,
    p: &Word,
    i: usize,
) -> Result<C64, SdError> {
    let overflow = |needed: usize| SdError::DegreeOverflow { needed, cap: tau.max_degree() };

    // τ⊗τ(∂_i P): splittings at unstarred occurrences of X_i
    let mut lhs = C64::ZERO;
    for (pos, l) in p.letters().iter().enumerate() {
        if l.index() == i && !l.is_starred() {
            let p1 = Word::from_letters(p.letters()[..pos].to_vec());
            let p2 = Word::from_letters(p.letters()[pos + 1..].to_vec());
            let a = tau.moment(&p1).ok_or_else(|| overflow(p1.degree()))?;
            let b = tau.moment(&p2).ok_or_else(|| overflow(p2.degree()))?;
            lhs += a * b;
        }
    }

    // τ(D_i V · P) = α τ(X_i P) + Σ_j β_j τ(D_i q_j · P)
    let alpha = v.quadratic_weight();
    let xip = Word::letter(i).concat(p);
    let mut rhs =
        C64::new(alpha, 0.0) * tau.moment(&xip).ok_or_else(|| overflow(xip.degree()))?;
    for (beta, q) in v.couplings() {
        let dq = crate::NCPoly::monomial(v.ambient(), q.clone(), C64::ONE)
            .expect("coupling validated at construction")
            .cyclic_gradient(i)
            .expect("letter index validated at construction");
        for (u, mult) in dq.terms() {
            let w = u.concat(p);
            let m = tau.moment(&w).ok_or_else(|| overflow(w.degree()))?;
            rhs += beta * mult * m;
        }
    }

    Ok(lhs - rhs)
}

/// Maximum residual magnitude over all monomials `P` with `deg P < degree`
/// and all letters `i`.
pub fn max_residual(tau: &MomentFunctional, v: &Potential, degree: usize) -> Result<f64, SdError> {
    let mut worst = 0.0f64;
    for d in 0..degree {
        for p in all_words(tau.ambient(), d) {
            for i in 1..=tau.ambient() {
                let r = sd_residual(tau, v, &p, i)?;
                worst = worst.max(r.norm());
            }
        }
    }
    Ok(worst)
}
