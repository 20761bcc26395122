//! Order-by-order solution of the Schwinger-Dyson relation as a power series
//! in the couplings.
//!
//! For the template `V = (α/2) Σ X_i² + Σ_j β_j q_j` the moments expand as
//! `τ(P) = Σ_k c_k(P) Π_j β_j^{k_j}`. Plugging the expansion into the moment
//! relation makes the system triangular in (total order, word degree), with
//! the order-0 functional the free Gaussian of weight `α`. Computing order
//! `K` at word degree `D` needs internal degrees up to
//! `D + K max_j(deg q_j − 2)`, handled automatically.
//!
//! The coefficients are signed map counts: `(−1)^{Σk} Π k_j! · c_k(P)` is the
//! number `M₀((q_j, k_j), (P, 1))` of planar maps, which
//! [`crate::mapcount::StarSystem::count_maps`] reproduces exactly wherever
//! enumeration is feasible.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;

use crate::ncpoly::Word;
use crate::C64;

use super::{canonical_word, necklaces, MomentFunctional, SdError, Symmetry};

/// Truncated series of moment functionals keyed by coupling multi-index.
#[derive(Clone, Debug)]
pub struct BetaSeries {
    m: usize,
    quadratic_weight: f64,
    template: Vec<Word>,
    order_cap: usize,
    degree_cap: usize,
    coeffs: BTreeMap<Vec<u32>, MomentFunctional>,
}

/// Result of evaluating a series at a coupling point.
#[derive(Clone, Copy, Debug)]
pub struct SeriesEvaluation {
    pub value: C64,
    /// Fitted geometric growth rate of the order magnitudes.
    pub fitted_rate: f64,
    /// Geometric bound on the discarded tail; infinite outside the fitted
    /// radius.
    pub tail_estimate: f64,
}

/// All multi-indices over `n` slots with the given total.
fn compositions(n: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 1 {
            let mut v = prefix.clone();
            v.push(total);
            out.push(v);
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(n - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(n, total, &mut Vec::new(), &mut out);
    out
}

/// All componentwise splits `k = k1 + k2`.
fn splits(k: &[u32]) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut out = vec![(Vec::new(), Vec::new())];
    for &kj in k {
        let mut next = Vec::with_capacity(out.len() * (kj as usize + 1));
        for (a, b) in &out {
            for x in 0..=kj {
                let mut a2 = a.clone();
                let mut b2 = b.clone();
                a2.push(x);
                b2.push(kj - x);
                next.push((a2, b2));
            }
        }
        out = next;
    }
    out
}

/// Solve the series to total order `order_cap` with every coefficient
/// functional valid up to word degree `degree_cap`.
pub fn solve_series(
    template: &[Word],
    quadratic_weight: f64,
    m: usize,
    order_cap: usize,
    degree_cap: usize,
) -> Result<BetaSeries, SdError> {
    if !(quadratic_weight > 0.0) {
        return Err(SdError::NonPositiveWeight(quadratic_weight));
    }
    for q in template {
        assert!(q.is_unstarred(), "series template words must be unstarred");
        assert!(q.max_letter_index() <= m, "template letter out of ambient range");
    }
    let n = template.len();
    let alpha = quadratic_weight;
    let delta = template.iter().map(|q| q.degree().saturating_sub(2)).max().unwrap_or(0);

    // cyclic-gradient words of each template monomial, with multiplicities
    let grads: Vec<Vec<Vec<(Word, f64)>>> = (1..=m)
        .map(|i| {
            template
                .iter()
                .map(|q| {
                    let g = crate::NCPoly::monomial(m, q.clone(), C64::ONE)
                        .expect("validated template")
                        .cyclic_gradient(i)
                        .expect("validated letter");
                    g.terms().map(|(w, c)| (w.clone(), c.re)).collect()
                })
                .collect()
        })
        .collect();

    let mut coeffs: BTreeMap<Vec<u32>, MomentFunctional> = BTreeMap::new();

    for kappa in 0..=order_cap as u32 {
        let internal_degree = degree_cap + (order_cap - kappa as usize) * delta;
        for k in compositions(n, kappa) {
            // N.B. the unit word expands as 1 at order zero and 0 beyond;
            // `coeff_moment` special-cases it since `MomentFunctional` pins
            // τ(1) = 1.
            let mut f = MomentFunctional::new(m, internal_degree, Symmetry::Cyclic);
            let ksplits = splits(&k);
            for d in 1..=internal_degree {
                let reps = necklaces(m, d, Symmetry::Cyclic);
                let values: Vec<(Word, C64)> = reps
                    .par_iter()
                    .map(|w| {
                        let i = w.letters()[0].index();
                        let p = Word::from_letters(w.letters()[1..].to_vec());
                        let mut acc = C64::ZERO;
                        // τ⊗τ(∂_i P) at this multi-index
                        for (pos, l) in p.letters().iter().enumerate() {
                            if l.index() != i || l.is_starred() {
                                continue;
                            }
                            let p1 = Word::from_letters(p.letters()[..pos].to_vec());
                            let p2 = Word::from_letters(p.letters()[pos + 1..].to_vec());
                            for (k1, k2) in &ksplits {
                                let a = coeff_moment(&coeffs, Some(&f), &k, k1, &p1);
                                if a == C64::ZERO {
                                    continue;
                                }
                                let b = coeff_moment(&coeffs, Some(&f), &k, k2, &p2);
                                acc += a * b;
                            }
                        }
                        // − Σ_j c_{k - e_j}(D_i q_j · P)
                        for (j, kj) in k.iter().enumerate() {
                            if *kj == 0 {
                                continue;
                            }
                            let mut sub = k.clone();
                            sub[j] -= 1;
                            let fsub = coeffs.get(&sub).expect("lower order present");
                            for (u, mult) in &grads[i - 1][j] {
                                let w2 = u.concat(&p);
                                acc -= mult * fsub.moment_or_zero(&w2);
                            }
                        }
                        (w.clone(), acc / alpha)
                    })
                    .collect();
                for (w, v) in values {
                    f.set(w, v);
                }
            }
            coeffs.insert(k, f);
        }
    }

    Ok(BetaSeries {
        m,
        quadratic_weight,
        template: template.to_vec(),
        order_cap,
        degree_cap,
        coeffs,
    })
}

/// Moment of `w` in the coefficient functional at `sub`, honoring the rule
/// that the unit word contributes 1 at order zero and 0 at higher orders.
/// `current` is the functional being built (for `sub == k`).
fn coeff_moment(
    coeffs: &BTreeMap<Vec<u32>, MomentFunctional>,
    current: Option<&MomentFunctional>,
    k: &[u32],
    sub: &[u32],
    w: &Word,
) -> C64 {
    if w.is_unit() {
        return if sub.iter().all(|x| *x == 0) { C64::ONE } else { C64::ZERO };
    }
    let f = if sub == k {
        current.expect("current functional required for same-index lookup")
    } else {
        coeffs.get(sub).expect("lower order present")
    };
    // moment() returns 1 for the unit word, handled above
    f.moment_or_zero(w)
}

impl BetaSeries {
    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn quadratic_weight(&self) -> f64 {
        self.quadratic_weight
    }

    pub fn template(&self) -> &[Word] {
        &self.template
    }

    pub fn order_cap(&self) -> usize {
        self.order_cap
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    /// The coefficient `c_k(P)` of `Π β_j^{k_j}` in `τ(P)`.
    pub fn coefficient(&self, k: &[u32], p: &Word) -> Option<C64> {
        if p.is_unit() {
            return Some(if k.iter().all(|x| *x == 0) { C64::ONE } else { C64::ZERO });
        }
        self.coeffs.get(k).and_then(|f| f.moment(&canonical_word(p, Symmetry::Cyclic)))
    }

    pub fn functional(&self, k: &[u32]) -> Option<&MomentFunctional> {
        self.coeffs.get(k)
    }

    pub fn multi_indices(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.coeffs.keys()
    }

    /// `(−1)^{Σk} Π k_j! · c_k(P)` rounded to the nearest integer, with the
    /// rounding error. For genuine solutions this is the planar map count
    /// `M₀((q_j, k_j), (P, 1))`, a nonnegative integer.
    pub fn integer_certificate(&self, k: &[u32], p: &Word) -> Option<(i128, f64)> {
        let c = self.coefficient(k, p)?;
        let total: u32 = k.iter().sum();
        let sign = if total % 2 == 0 { 1.0 } else { -1.0 };
        let factorials: f64 = k.iter().map(|kj| factorial(*kj)).product();
        let value = c * sign * factorials;
        let nearest = value.re.round();
        let err = (value.re - nearest).abs() + value.im.abs();
        Some((nearest as i128, err))
    }

    /// Largest coefficient magnitude at each total order, `κ = 0..=K`.
    pub fn order_magnitudes(&self, p: &Word) -> Vec<f64> {
        let mut out = vec![0.0f64; self.order_cap + 1];
        for (k, _) in self.coeffs.iter() {
            let total: u32 = k.iter().sum();
            if let Some(c) = self.coefficient(k, p) {
                let slot = &mut out[total as usize];
                *slot = slot.max(c.norm());
            }
        }
        out
    }

    /// `sup_k |c_k(P)|^{1/Σk}` over computed orders `Σk >= 1`.
    pub fn growth_rate(&self, p: &Word) -> f64 {
        self.coeffs
            .keys()
            .filter(|k| k.iter().sum::<u32>() >= 1)
            .filter_map(|k| {
                let total: u32 = k.iter().sum();
                self.coefficient(k, p)
                    .map(|c| c.norm().powf(1.0 / total as f64))
            })
            .fold(0.0, f64::max)
    }

    /// Evaluate the truncated series at a coupling point, with a geometric
    /// tail bound as the error estimate.
    pub fn evaluate(&self, beta: &[C64], p: &Word) -> Result<SeriesEvaluation, SdError> {
        assert_eq!(beta.len(), self.template.len(), "coupling count mismatch");
        if p.degree() > self.degree_cap {
            return Err(SdError::DegreeOverflow { needed: p.degree(), cap: self.degree_cap });
        }
        let mut value = C64::ZERO;
        // aggregated magnitude per total order, for the tail fit
        let mut order_sums = vec![0.0f64; self.order_cap + 1];
        for (k, _) in self.coeffs.iter() {
            let Some(c) = self.coefficient(k, p) else { continue };
            let total: u32 = k.iter().sum();
            let mut weight = C64::ONE;
            for (kj, b) in k.iter().zip(beta) {
                weight *= b.powu(*kj);
            }
            value += c * weight;
            order_sums[total as usize] += c.norm();
        }
        let rate = order_sums
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, s)| **s > 0.0)
            .map(|(kappa, s)| s.powf(1.0 / kappa as f64))
            .fold(0.0, f64::max);
        let bmax = beta.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let q = rate * bmax;
        let tail = if q < 1.0 {
            q.powi(self.order_cap as i32 + 1) / (1.0 - q)
        } else {
            f64::INFINITY
        };
        Ok(SeriesEvaluation { value, fitted_rate: rate, tail_estimate: tail })
    }

    /// JSON export keyed by multi-index.
    pub fn to_json(&self) -> serde_json::Value {
        let mut coeff_map = serde_json::Map::new();
        for (k, f) in &self.coeffs {
            let key = k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            let mut words = serde_json::Map::new();
            for w in f.words() {
                let v = f.moment(&w).unwrap();
                words.insert(w.to_string(), json!([v.re, v.im]));
            }
            coeff_map.insert(key, serde_json::Value::Object(words));
        }
        json!({
            "ambient": self.m,
            "quadratic_weight": self.quadratic_weight,
            "template": self.template.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
            "order_cap": self.order_cap,
            "degree_cap": self.degree_cap,
            "coefficients": coeff_map,
        })
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k as u64).map(|x| x as f64).product()
}
