//! Damped fixed-point solution of the Schwinger-Dyson relation at fixed real
//! couplings.
//!
//! Every necklace representative `w = X_i P` (decomposed at its first letter)
//! is updated by the damped relation
//!
//! `τ(w) ← (1−θ) τ(w) + θ (1/α) [ τ⊗τ(∂_i P) − Σ_j β_j τ(D_i q_j · P) ]`
//!
//! in Jacobi sweeps (all right-hand sides read the previous iterate, which
//! keeps the iteration deterministic under parallel evaluation). The coupling
//! term references words `deg q_j − 2` degrees above the target, so the system
//! is closed by iterating on an enlarged internal degree and reading moments
//! beyond it as zero; the extra margin makes the truncation bias negligible at
//! the certified degrees. The returned functional carries a residual
//! certificate: the maximum of `|τ⊗τ(∂_i P) − τ(D_i V P)|` over all monomials
//! `P` with `deg P < degree` and all letters.
//!
//! Divergence of the iterates past the moment bound `R^deg` signals couplings
//! outside the uniqueness regime and aborts with a diagnostic.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::ncpoly::{Potential, Word};
use crate::C64;

use super::{max_residual, necklaces, MomentFunctional, SdError, Symmetry};

#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions {
    /// Moment bound `R`; defaults to `2 + Σ|β_j| · max_j deg q_j`, inflated
    /// by `1/√α` when the quadratic weight is below 1.
    pub bound: Option<f64>,
    /// Damping θ in (0, 1].
    pub damping: f64,
    /// Residual certificate tolerance: the returned functional satisfies
    /// `|sd_residual| < tol` for every monomial below the degree cap. The
    /// sweep itself iterates to its floating-point plateau.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra internal degrees beyond the certified cap; `None` picks a
    /// heuristic (generous for m = 1, where words are cheap).
    pub margin: Option<usize>,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { bound: None, damping: 0.5, tol: 1e-12, max_iter: 100_000, margin: None }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    pub tau: MomentFunctional,
    pub iterations: usize,
    /// Max SD residual over all monomials of degree < the requested cap.
    pub certified_residual: f64,
    pub internal_degree: usize,
    pub bound: f64,
}

enum Slot {
    Unit,
    Idx(usize),
    /// beyond the internal degree: reads zero
    Truncated,
}

struct Relation {
    degree: usize,
    /// pairs (τ(P1), τ(P2)) from the ∂-term
    pairs: Vec<(Slot, Slot)>,
    /// (β_j · multiplicity, word slot) from the coupling gradients
    couplings: Vec<(f64, Slot)>,
}

/// Solve for the moments of `V` with residuals certified below `tol` for all
/// monomials of degree < `degree`.
pub fn solve_fixed_point(
    v: &Potential,
    degree: usize,
    opts: FixedPointOptions,
) -> Result<FixedPointSolution, SdError> {
    if !v.is_self_adjoint_mode() {
        return Err(SdError::SelfAdjointRequired);
    }
    for (beta, _) in v.couplings() {
        if beta.im != 0.0 {
            return Err(SdError::ComplexCoupling(*beta));
        }
    }
    assert!(opts.damping > 0.0 && opts.damping <= 1.0, "damping must lie in (0, 1]");

    let m = v.ambient();
    let alpha = v.quadratic_weight();
    let max_q = v.couplings().iter().map(|(_, q)| q.degree()).max().unwrap_or(0);
    let delta = max_q.saturating_sub(2);
    let margin = opts
        .margin
        .unwrap_or(if delta == 0 {
            0
        } else if m == 1 {
            15 * delta
        } else {
            2 * delta
        })
        .max(delta);
    let internal_degree = degree + margin;

    let bound = opts.bound.unwrap_or_else(|| {
        let s: f64 = v.couplings().iter().map(|(b, _)| b.norm()).sum();
        let base = 2.0 + s * max_q as f64;
        base * (1.0 / alpha.sqrt()).max(1.0)
    });

    // canonical representatives and index tables
    let mut reps: Vec<Word> = Vec::new();
    for d in 1..=internal_degree {
        reps.extend(necklaces(m, d, Symmetry::CyclicReversal));
    }
    let index: HashMap<Word, usize> =
        reps.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let slot_of = |w: &Word| -> Slot {
        if w.is_unit() {
            Slot::Unit
        } else if w.degree() > internal_degree {
            Slot::Truncated
        } else {
            Slot::Idx(index[&super::canonical_word(w, Symmetry::CyclicReversal)])
        }
    };

    // gradient words of each coupling monomial per letter
    let grads: Vec<Vec<Vec<(Word, f64)>>> = (1..=m)
        .map(|i| {
            v.couplings()
                .iter()
                .map(|(_, q)| {
                    crate::NCPoly::monomial(m, q.clone(), C64::ONE)
                        .expect("validated coupling")
                        .cyclic_gradient(i)
                        .expect("validated letter")
                        .terms()
                        .map(|(w, c)| (w.clone(), c.re))
                        .collect()
                })
                .collect()
        })
        .collect();
    let betas: Vec<f64> = v.couplings().iter().map(|(b, _)| b.re).collect();

    let relations: Vec<Relation> = reps
        .par_iter()
        .map(|w| {
            let i = w.letters()[0].index();
            let p = Word::from_letters(w.letters()[1..].to_vec());
            let mut pairs = Vec::new();
            for (pos, l) in p.letters().iter().enumerate() {
                if l.index() == i && !l.is_starred() {
                    let p1 = Word::from_letters(p.letters()[..pos].to_vec());
                    let p2 = Word::from_letters(p.letters()[pos + 1..].to_vec());
                    pairs.push((slot_of(&p1), slot_of(&p2)));
                }
            }
            let mut couplings = Vec::new();
            for (j, beta) in betas.iter().enumerate() {
                if *beta == 0.0 {
                    continue;
                }
                for (u, mult) in &grads[i - 1][j] {
                    couplings.push((beta * mult, slot_of(&u.concat(&p))));
                }
            }
            Relation { degree: w.degree(), pairs, couplings }
        })
        .collect();

    let read = |vals: &[f64], slot: &Slot| -> f64 {
        match slot {
            Slot::Unit => 1.0,
            Slot::Idx(i) => vals[*i],
            Slot::Truncated => 0.0,
        }
    };

    let bounds_by_degree: Vec<f64> =
        (0..=internal_degree).map(|d| bound.powi(d as i32)).collect();

    // moments are real here: self-adjoint letters and real couplings
    let mut vals = vec![0.0f64; reps.len()];
    let theta = opts.damping;
    let mut iterations = 0;
    // residuals of high-degree relations live on the scale of the moments
    // they combine, so convergence is judged relative to that scale; once the
    // scaled residual stalls at the floating-point plateau we stop and let
    // the low-degree certificate decide
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    loop {
        iterations += 1;
        let sweep: Vec<(f64, f64)> = relations
            .par_iter()
            .zip(&vals)
            .map(|(rel, old)| {
                let pair_sum: f64 =
                    rel.pairs.iter().map(|(a, b)| read(&vals, a) * read(&vals, b)).sum();
                let coup_sum: f64 =
                    rel.couplings.iter().map(|(c, s)| c * read(&vals, s)).sum();
                let rhs = (pair_sum - coup_sum) / alpha;
                let scale = pair_sum.abs() + coup_sum.abs() + (alpha * old).abs();
                let residual = (pair_sum - coup_sum - alpha * old).abs() / scale.max(1.0);
                (old + theta * (rhs - old), residual)
            })
            .collect();
        let mut worst = 0.0f64;
        for (i, (new, residual)) in sweep.into_iter().enumerate() {
            vals[i] = new;
            worst = worst.max(residual);
            if new.abs() > bounds_by_degree[relations[i].degree] {
                return Err(SdError::Divergence {
                    word: reps[i].to_string(),
                    value: new.abs(),
                    bound: bounds_by_degree[relations[i].degree],
                });
            }
        }
        if worst < best * 0.999 {
            best = worst;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if worst < f64::EPSILON || since_best > 400 {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(SdError::MaxIterExceeded {
                iterations,
                residual: worst,
                tol: opts.tol,
            });
        }
    }

    let mut tau = MomentFunctional::new(m, internal_degree, Symmetry::CyclicReversal);
    for (w, val) in reps.iter().zip(&vals) {
        tau.set(w.clone(), C64::new(*val, 0.0));
    }

    let certified_residual = max_residual(&tau, v, degree)?;
    if certified_residual > opts.tol {
        // truncation bias dominates: the margin was too small for this cap
        return Err(SdError::InsufficientDegree {
            degree: internal_degree,
            required: internal_degree + 2 * delta.max(1),
        });
    }

    Ok(FixedPointSolution { tau, iterations, certified_residual, internal_degree, bound })
}
