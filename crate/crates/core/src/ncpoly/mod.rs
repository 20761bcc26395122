//! Symbolic algebra of non-commutative *-polynomials in `m` letters.
//!
//! A [`Word`] is a product of letters `X_i` / `X_i*`; an [`NCPoly`] is a finite
//! linear combination of words with complex coefficients. The module provides
//! products, the involution, the cyclic gradient `D_i`, the non-commutative
//! derivative `∂_i` (valued in [`TensorPoly`]), their starred counterparts, and
//! evaluation on tuples of matrices.
//!
//! All values are immutable after construction and all operations are pure, so
//! everything here is safe to share across threads.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::C64;

mod matrix;
pub mod text;

pub use matrix::{evaluate, hermitian_part, tensor_sharp};

/// Errors from constructing or combining symbolic objects.
#[derive(Debug, Error)]
pub enum PolyError {
    #[error("letter index {index} out of range 1..={m}")]
    LetterOutOfRange { index: usize, m: usize },
    #[error("mismatched ambient letter counts {0} and {1}")]
    AmbientMismatch(usize, usize),
    #[error("starred letters are forbidden in self-adjoint mode")]
    StarredInSelfAdjointMode,
    #[error("potential is not self-adjoint: V differs from V*")]
    NotSelfAdjoint,
    #[error("quadratic weight must be positive, got {0}")]
    NonPositiveQuadraticWeight(f64),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("matrix dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// One letter `X_i` or `X_i*`, `i` in `1..=m`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter {
    index: u8,
    starred: bool,
}

impl Letter {
    /// Unstarred letter `X_i` (1-based index).
    pub fn new(index: usize) -> Self {
        assert!(index >= 1 && index <= u8::MAX as usize, "letter index out of range");
        Letter { index: index as u8, starred: false }
    }

    /// Starred letter `X_i*`.
    pub fn starred(index: usize) -> Self {
        let mut l = Letter::new(index);
        l.starred = true;
        l
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn is_starred(&self) -> bool {
        self.starred
    }

    /// `X_i <-> X_i*`.
    pub fn adjoint(self) -> Self {
        Letter { index: self.index, starred: !self.starred }
    }
}

/// A word over the letters; the empty word is the multiplicative unit.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    pub fn letter(index: usize) -> Self {
        Word(vec![Letter::new(index)])
    }

    pub fn starred_letter(index: usize) -> Self {
        Word(vec![Letter::starred(index)])
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    /// `X_i^k`.
    pub fn power(index: usize, k: usize) -> Self {
        Word(vec![Letter::new(index); k])
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Involution: reverse the word and star every letter.
    pub fn adjoint(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.adjoint()).collect())
    }

    /// Reversal without starring: the adjoint of a word in self-adjoint
    /// letters.
    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Smallest cyclic rotation: the canonical necklace representative.
    pub fn canonical_rotation(&self) -> Word {
        let mut best = self.clone();
        for r in 1..self.0.len() {
            let cand = self.rotated(r);
            if cand < best {
                best = cand;
            }
        }
        best
    }

    /// Cyclic rotation moving the first `r` letters to the end.
    pub fn rotated(&self, r: usize) -> Word {
        if self.0.is_empty() {
            return self.clone();
        }
        let r = r % self.0.len();
        let mut v = Vec::with_capacity(self.0.len());
        v.extend_from_slice(&self.0[r..]);
        v.extend_from_slice(&self.0[..r]);
        Word(v)
    }

    pub fn is_unstarred(&self) -> bool {
        self.0.iter().all(|l| !l.is_starred())
    }

    /// Largest letter index present (0 for the unit word).
    pub fn max_letter_index(&self) -> usize {
        self.0.iter().map(|l| l.index()).max().unwrap_or(0)
    }

    fn check_ambient(&self, m: usize) -> Result<(), PolyError> {
        for l in &self.0 {
            if l.index() > m {
                return Err(PolyError::LetterOutOfRange { index: l.index(), m });
            }
        }
        Ok(())
    }
}

/// Degree first, then lexicographic: the canonical term order.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut i = 0;
        while i < self.0.len() {
            let l = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == l {
                run += 1;
            }
            write!(f, "X{}", l.index())?;
            if l.is_starred() {
                write!(f, "*")?;
            }
            if run > 1 {
                write!(f, "^{run}")?;
            }
            i += run;
        }
        Ok(())
    }
}

fn add_term(terms: &mut BTreeMap<Word, C64>, w: Word, c: C64) {
    if c == C64::ZERO {
        return;
    }
    use std::collections::btree_map::Entry;
    match terms.entry(w) {
        Entry::Vacant(e) => {
            e.insert(c);
        }
        Entry::Occupied(mut e) => {
            let v = *e.get() + c;
            if v == C64::ZERO {
                e.remove();
            } else {
                *e.get_mut() = v;
            }
        }
    }
}

/// Polynomial in `m` non-commutative letters: a finite map word -> coefficient.
///
/// Zero coefficients are never stored; pruning is exact (no epsilon), so the
/// algebra stays exact-by-structure and all floating error lives in the
/// coefficients themselves.
#[derive(Clone, PartialEq, Debug)]
pub struct NCPoly {
    m: usize,
    terms: BTreeMap<Word, C64>,
}

impl NCPoly {
    pub fn zero(m: usize) -> Self {
        NCPoly { m, terms: BTreeMap::new() }
    }

    pub fn unit(m: usize) -> Self {
        Self::monomial(m, Word::unit(), C64::ONE).unwrap()
    }

    /// The letter polynomial `X_i`.
    pub fn letter(m: usize, index: usize) -> Result<Self, PolyError> {
        Self::monomial(m, Word::letter(index), C64::ONE)
    }

    pub fn monomial(m: usize, word: Word, coeff: C64) -> Result<Self, PolyError> {
        word.check_ambient(m)?;
        let mut terms = BTreeMap::new();
        add_term(&mut terms, word, coeff);
        Ok(NCPoly { m, terms })
    }

    pub fn from_terms<I>(m: usize, iter: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Word, C64)>,
    {
        let mut terms = BTreeMap::new();
        for (w, c) in iter {
            w.check_ambient(m)?;
            add_term(&mut terms, w, c);
        }
        Ok(NCPoly { m, terms })
    }

    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in canonical (degree, then lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, w: &Word) -> C64 {
        self.terms.get(w).copied().unwrap_or(C64::ZERO)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|w| w.degree()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: C64) -> NCPoly {
        let mut terms = BTreeMap::new();
        for (w, v) in &self.terms {
            add_term(&mut terms, w.clone(), v * c);
        }
        NCPoly { m: self.m, terms }
    }

    pub fn add(&self, other: &NCPoly) -> Result<NCPoly, PolyError> {
        self.check_same_ambient(other)?;
        let mut terms = self.terms.clone();
        for (w, c) in &other.terms {
            add_term(&mut terms, w.clone(), *c);
        }
        Ok(NCPoly { m: self.m, terms })
    }

    pub fn sub(&self, other: &NCPoly) -> Result<NCPoly, PolyError> {
        self.add(&other.scale(-C64::ONE))
    }

    /// Product: the coefficient of `w` is the sum of `p[u] q[v]` over all
    /// splittings `w = uv`.
    pub fn mul(&self, other: &NCPoly) -> Result<NCPoly, PolyError> {
        self.check_same_ambient(other)?;
        let mut terms = BTreeMap::new();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                add_term(&mut terms, u.concat(v), a * b);
            }
        }
        Ok(NCPoly { m: self.m, terms })
    }

    /// Involution: each word reversed with stars flipped, coefficients conjugated.
    pub fn involution(&self) -> NCPoly {
        let mut terms = BTreeMap::new();
        for (w, c) in &self.terms {
            add_term(&mut terms, w.adjoint(), c.conj());
        }
        NCPoly { m: self.m, terms }
    }

    pub fn is_self_adjoint(&self) -> bool {
        *self == self.involution()
    }

    /// Involution under the convention that every letter is self-adjoint:
    /// words are reversed without starring and coefficients conjugated.
    pub fn involution_self_adjoint(&self) -> NCPoly {
        let mut terms = BTreeMap::new();
        for (w, c) in &self.terms {
            add_term(&mut terms, w.reversed(), c.conj());
        }
        NCPoly { m: self.m, terms }
    }

    /// Cyclic gradient `D_i`: each splitting `w = P1 X_i P2` at an unstarred
    /// occurrence of `X_i` contributes `P2 P1`.
    pub fn cyclic_gradient(&self, i: usize) -> Result<NCPoly, PolyError> {
        self.gradient_impl(i, false, false)
    }

    /// Cyclic gradient with respect to `X_i*`.
    pub fn starred_cyclic_gradient(&self, i: usize) -> Result<NCPoly, PolyError> {
        self.gradient_impl(i, true, false)
    }

    fn gradient_impl(&self, i: usize, starred: bool, _: bool) -> Result<NCPoly, PolyError> {
        self.check_letter(i)?;
        let target = if starred { Letter::starred(i) } else { Letter::new(i) };
        let mut terms = BTreeMap::new();
        for (w, c) in &self.terms {
            for (pos, l) in w.letters().iter().enumerate() {
                if *l == target {
                    // P2 P1 for w = P1 X_i P2
                    let mut v = Vec::with_capacity(w.degree() - 1);
                    v.extend_from_slice(&w.letters()[pos + 1..]);
                    v.extend_from_slice(&w.letters()[..pos]);
                    add_term(&mut terms, Word::from_letters(v), *c);
                }
            }
        }
        Ok(NCPoly { m: self.m, terms })
    }

    /// Non-commutative derivative `∂_i`: each splitting `w = P1 X_i P2` at an
    /// unstarred occurrence contributes `P1 ⊗ P2`; starred occurrences
    /// contribute nothing.
    pub fn nc_derivative(&self, i: usize) -> Result<TensorPoly, PolyError> {
        self.nc_derivative_impl(i, false)
    }

    /// Derivative with respect to `X_i*`: acts on starred occurrences only.
    pub fn starred_nc_derivative(&self, i: usize) -> Result<TensorPoly, PolyError> {
        self.nc_derivative_impl(i, true)
    }

    fn nc_derivative_impl(&self, i: usize, starred: bool) -> Result<TensorPoly, PolyError> {
        self.check_letter(i)?;
        let target = if starred { Letter::starred(i) } else { Letter::new(i) };
        let mut out = TensorPoly::zero(self.m);
        for (w, c) in &self.terms {
            for (pos, l) in w.letters().iter().enumerate() {
                if *l == target {
                    let p1 = Word::from_letters(w.letters()[..pos].to_vec());
                    let p2 = Word::from_letters(w.letters()[pos + 1..].to_vec());
                    out.push(p1, p2, *c);
                }
            }
        }
        Ok(out)
    }

    fn check_letter(&self, i: usize) -> Result<(), PolyError> {
        if i < 1 || i > self.m {
            return Err(PolyError::LetterOutOfRange { index: i, m: self.m });
        }
        Ok(())
    }

    fn check_same_ambient(&self, other: &NCPoly) -> Result<(), PolyError> {
        if self.m != other.m {
            return Err(PolyError::AmbientMismatch(self.m, other.m));
        }
        Ok(())
    }
}

impl fmt::Display for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::format_poly(self, f)
    }
}

/// Sum of elementary tensors `P ⊗ Q`: the codomain of `∂_i`.
#[derive(Clone, PartialEq, Debug)]
pub struct TensorPoly {
    m: usize,
    terms: BTreeMap<(Word, Word), C64>,
}

impl TensorPoly {
    pub fn zero(m: usize) -> Self {
        TensorPoly { m, terms: BTreeMap::new() }
    }

    /// `1 ⊗ 1`.
    pub fn unit(m: usize) -> Self {
        let mut t = Self::zero(m);
        t.push(Word::unit(), Word::unit(), C64::ONE);
        t
    }

    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, left: Word, right: Word, coeff: C64) {
        if coeff == C64::ZERO {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((left, right)) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                let v = *e.get() + coeff;
                if v == C64::ZERO {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Word, Word), &C64)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &TensorPoly) -> Result<TensorPoly, PolyError> {
        if self.m != other.m {
            return Err(PolyError::AmbientMismatch(self.m, other.m));
        }
        let mut out = self.clone();
        for ((l, r), c) in &other.terms {
            out.push(l.clone(), r.clone(), *c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> TensorPoly {
        let mut out = TensorPoly::zero(self.m);
        for ((l, r), v) in &self.terms {
            out.push(l.clone(), r.clone(), v * c);
        }
        out
    }

    /// Bimodule action `(a ⊗ b) · T · (c ⊗ d)` restricted to the two pieces
    /// needed for the Leibniz rule: multiply every left leg by `p` on the left.
    pub fn left_mul(&self, p: &NCPoly) -> Result<TensorPoly, PolyError> {
        if self.m != p.m {
            return Err(PolyError::AmbientMismatch(self.m, p.m));
        }
        let mut out = TensorPoly::zero(self.m);
        for ((l, r), c) in &self.terms {
            for (u, a) in &p.terms {
                out.push(u.concat(l), r.clone(), a * c);
            }
        }
        Ok(out)
    }

    /// Multiply every right leg by `q` on the right.
    pub fn right_mul(&self, q: &NCPoly) -> Result<TensorPoly, PolyError> {
        if self.m != q.m {
            return Err(PolyError::AmbientMismatch(self.m, q.m));
        }
        let mut out = TensorPoly::zero(self.m);
        for ((l, r), c) in &self.terms {
            for (v, b) in &q.terms {
                out.push(l.clone(), r.concat(v), c * b);
            }
        }
        Ok(out)
    }

    /// Total degree of the highest term `deg P + deg Q`.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|(l, r)| l.degree() + r.degree()).max().unwrap_or(0)
    }
}

/// Potential `V = (w/2) Σ X_i² + Σ_j β_j q_j`.
///
/// `quadratic_weight` is the convexity scale `c`; the coupling monomials `q_j`
/// form the template whose coefficients the series solver treats as formal
/// variables. In self-adjoint mode starred letters are rejected and `V = V*`
/// is enforced at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    m: usize,
    quadratic_weight: f64,
    couplings: Vec<(C64, Word)>,
    self_adjoint: bool,
}

impl Potential {
    pub fn new(
        m: usize,
        quadratic_weight: f64,
        couplings: Vec<(C64, Word)>,
        self_adjoint: bool,
    ) -> Result<Self, PolyError> {
        if !(quadratic_weight > 0.0) {
            return Err(PolyError::NonPositiveQuadraticWeight(quadratic_weight));
        }
        for (_, q) in &couplings {
            q.check_ambient(m)?;
            if self_adjoint && !q.is_unstarred() {
                return Err(PolyError::StarredInSelfAdjointMode);
            }
        }
        let p = Potential { m, quadratic_weight, couplings, self_adjoint };
        if self_adjoint {
            // letters are self-adjoint in this mode, so the involution
            // reverses words without starring; the potential only enters
            // through Tr V and the cyclic gradients, both blind to cyclic
            // rotation, so self-adjointness is required at necklace level
            let by_necklace = |q: &NCPoly| -> BTreeMap<Word, C64> {
                let mut map = BTreeMap::new();
                for (w, c) in &q.terms {
                    add_term(&mut map, w.canonical_rotation(), *c);
                }
                map
            };
            let v = p.as_ncpoly();
            if by_necklace(&v) != by_necklace(&v.involution_self_adjoint()) {
                return Err(PolyError::NotSelfAdjoint);
            }
        }
        Ok(p)
    }

    /// Purely quadratic potential `(w/2) Σ X_i²`.
    pub fn quadratic(m: usize, weight: f64) -> Result<Self, PolyError> {
        Potential::new(m, weight, Vec::new(), true)
    }

    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn quadratic_weight(&self) -> f64 {
        self.quadratic_weight
    }

    pub fn couplings(&self) -> &[(C64, Word)] {
        &self.couplings
    }

    pub fn is_self_adjoint_mode(&self) -> bool {
        self.self_adjoint
    }

    /// Template of coupling monomials, in declaration order.
    pub fn template(&self) -> Vec<Word> {
        self.couplings.iter().map(|(_, q)| q.clone()).collect()
    }

    pub fn coupling_values(&self) -> Vec<C64> {
        self.couplings.iter().map(|(b, _)| *b).collect()
    }

    /// The potential as a plain polynomial.
    pub fn as_ncpoly(&self) -> NCPoly {
        let mut terms = BTreeMap::new();
        let half = C64::new(self.quadratic_weight / 2.0, 0.0);
        for i in 1..=self.m {
            add_term(&mut terms, Word::power(i, 2), half);
        }
        for (b, q) in &self.couplings {
            add_term(&mut terms, q.clone(), *b);
        }
        NCPoly { m: self.m, terms }
    }

    /// `D_i V = w X_i + Σ_j β_j D_i q_j`.
    pub fn gradient(&self, i: usize) -> Result<NCPoly, PolyError> {
        self.as_ncpoly().cyclic_gradient(i)
    }

    /// All gradients `(D_1 V, ..., D_m V)`.
    pub fn gradients(&self) -> Result<Vec<NCPoly>, PolyError> {
        (1..=self.m).map(|i| self.gradient(i)).collect()
    }

    /// Scale every coupling by `t`, keeping the quadratic part. Used by the
    /// entropy interpolation `t W + (c/2) X.X`.
    pub fn scale_couplings(&self, t: f64) -> Potential {
        let couplings = self
            .couplings
            .iter()
            .map(|(b, q)| (b * C64::new(t, 0.0), q.clone()))
            .collect();
        Potential { m: self.m, quadratic_weight: self.quadratic_weight, couplings, self_adjoint: self.self_adjoint }
    }

    /// Decompose a plain polynomial into a `Potential`.
    ///
    /// The quadratic weight is `2 c_min` where `c_min` is the smallest real
    /// `X_i²` coefficient, provided all of them are real and positive;
    /// otherwise the weight defaults to 1 and the deviation `(c_i - 1/2) X_i²`
    /// joins the couplings. Everything else becomes a coupling term verbatim.
    pub fn from_ncpoly(p: &NCPoly, self_adjoint: bool) -> Result<Self, PolyError> {
        let m = p.m;
        let mut quad = vec![C64::ZERO; m];
        let mut couplings = Vec::new();
        for (w, c) in &p.terms {
            let ls = w.letters();
            if ls.len() == 2 && ls[0] == ls[1] && !ls[0].is_starred() {
                quad[ls[0].index() - 1] = *c;
            } else if !w.is_unit() {
                couplings.push((*c, w.clone()));
            }
            // constant terms are dropped: they do not affect gradients or laws
        }
        let all_real_positive = quad.iter().all(|c| c.im == 0.0 && c.re > 0.0);
        let weight = if all_real_positive {
            2.0 * quad.iter().map(|c| c.re).fold(f64::INFINITY, f64::min)
        } else {
            1.0
        };
        let half = weight / 2.0;
        for (i, c) in quad.iter().enumerate() {
            let extra = c - C64::new(half, 0.0);
            if extra != C64::ZERO {
                couplings.push((extra, Word::power(i + 1, 2)));
            }
        }
        Potential::new(m, weight, couplings, self_adjoint)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.as_ncpoly().fmt(f)
    }
}

#[cfg(test)]
mod tests;
