//! Evaluation of polynomials on matrix tuples.

use faer::Mat;

use crate::{C64, CMat};

use super::{NCPoly, PolyError, TensorPoly, Word};

fn check_tuple(m: usize, mats: &[CMat]) -> Result<usize, PolyError> {
    if mats.len() != m {
        return Err(PolyError::DimensionMismatch(format!(
            "expected {m} matrices, got {}",
            mats.len()
        )));
    }
    let n = mats.first().map(|a| a.nrows()).unwrap_or(0);
    for (i, a) in mats.iter().enumerate() {
        if a.nrows() != a.ncols() || a.nrows() != n {
            return Err(PolyError::DimensionMismatch(format!(
                "matrix {} is {}x{}, expected {}x{}",
                i + 1,
                a.nrows(),
                a.ncols(),
                n,
                n
            )));
        }
    }
    Ok(n)
}

fn word_product(w: &Word, mats: &[CMat], n: usize) -> CMat {
    let mut acc: Option<CMat> = None;
    for l in w.letters() {
        let a = &mats[l.index() - 1];
        let factor: CMat = if l.is_starred() { a.adjoint().to_owned() } else { a.clone() };
        acc = Some(match acc {
            None => factor,
            Some(p) => &p * &factor,
        });
    }
    acc.unwrap_or_else(|| Mat::identity(n, n))
}

fn axpy(out: &mut CMat, c: C64, a: &CMat) {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out[(i, j)] += c * a[(i, j)];
        }
    }
}

/// Homomorphic evaluation of `p` on an `m`-tuple of square matrices; starred
/// letters evaluate to conjugate transposes, the unit word to the identity.
pub fn evaluate(p: &NCPoly, mats: &[CMat]) -> Result<CMat, PolyError> {
    let n = check_tuple(p.ambient(), mats)?;
    let mut out = Mat::zeros(n, n);
    for (w, c) in p.terms() {
        let prod = word_product(w, mats, n);
        axpy(&mut out, *c, &prod);
    }
    Ok(out)
}

/// The `#` action: `(Σ c P ⊗ Q) # B = Σ c P(A) B Q(A)`.
pub fn tensor_sharp(t: &TensorPoly, mats: &[CMat], b: &CMat) -> Result<CMat, PolyError> {
    let n = check_tuple(t.ambient(), mats)?;
    if b.nrows() != n || b.ncols() != n {
        return Err(PolyError::DimensionMismatch(format!(
            "B is {}x{}, expected {n}x{n}",
            b.nrows(),
            b.ncols()
        )));
    }
    let mut out = Mat::zeros(n, n);
    for ((l, r), c) in t.terms() {
        let lp = word_product(l, mats, n);
        let rp = word_product(r, mats, n);
        let prod = &(&lp * b) * &rp;
        axpy(&mut out, *c, &prod);
    }
    Ok(out)
}

/// Exact Hermitian symmetrization `(A + A*)/2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut out = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
        }
    }
    out
}
