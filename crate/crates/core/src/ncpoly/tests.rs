use super::text::{format_tensor, parse_poly, parse_poly_auto, parse_word_auto};
use super::*;
use crate::{C64, CMat};

use faer::Mat;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn x(m: usize, i: usize) -> NCPoly {
    NCPoly::letter(m, i).unwrap()
}

pub(crate) fn random_word(rng: &mut impl Rng, m: usize, max_deg: usize, stars: bool) -> Word {
    let d = rng.random_range(0..=max_deg);
    let letters = (0..d)
        .map(|_| {
            let idx = rng.random_range(1..=m);
            if stars && rng.random_bool(0.3) {
                Letter::starred(idx)
            } else {
                Letter::new(idx)
            }
        })
        .collect();
    Word::from_letters(letters)
}

pub(crate) fn random_poly(rng: &mut impl Rng, m: usize, max_deg: usize, terms: usize, stars: bool) -> NCPoly {
    NCPoly::from_terms(
        m,
        (0..terms).map(|_| {
            let w = random_word(rng, m, max_deg, stars);
            let co = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            (w, co)
        }),
    )
    .unwrap()
}

pub(crate) fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> CMat {
    let mut a = Mat::<C64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = c(rng.random_range(-scale..scale), 0.0);
        for j in i + 1..n {
            let v = c(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    a
}

fn mat_dist(a: &CMat, b: &CMat) -> f64 {
    let mut d = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            d = d.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    d
}

#[test]
fn mul_concatenates_words() {
    let p = x(2, 1).mul(&x(2, 2)).unwrap();
    assert_eq!(p.coeff(&Word::from_letters(vec![Letter::new(1), Letter::new(2)])), C64::ONE);
    assert_eq!(p.num_terms(), 1);
}

#[test]
fn mul_unit_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let p = random_poly(&mut rng, 3, 5, 6, true);
        assert_eq!(p.mul(&NCPoly::unit(3)).unwrap(), p);
        assert_eq!(NCPoly::unit(3).mul(&p).unwrap(), p);
    }
}

#[test]
fn mul_distributes() {
    let sum = x(2, 1).add(&x(2, 2)).unwrap();
    let diff = x(2, 1).sub(&x(2, 2)).unwrap();
    let prod = sum.mul(&diff).unwrap();
    let expect = parse_poly("X1X1 - X1X2 + X2X1 - X2X2", 2).unwrap();
    assert_eq!(prod, expect);
}

#[test]
fn mul_rejects_ambient_mismatch() {
    assert!(matches!(x(2, 1).mul(&x(3, 1)), Err(PolyError::AmbientMismatch(2, 3))));
}

#[test]
fn involution_reverses_and_stars() {
    let p = x(2, 1).mul(&x(2, 2)).unwrap().involution();
    let expect = NCPoly::monomial(
        2,
        Word::from_letters(vec![Letter::starred(2), Letter::starred(1)]),
        C64::ONE,
    )
    .unwrap();
    assert_eq!(p, expect);
}

#[test]
fn involution_is_conjugate_linear_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let p = random_poly(&mut rng, 3, 5, 6, true);
        assert_eq!(p.involution().involution(), p);
    }
    let p = x(1, 1).scale(c(0.0, 1.0)).involution();
    assert_eq!(p.coeff(&Word::starred_letter(1)), c(0.0, -1.0));
}

#[test]
fn involution_antihomomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = random_poly(&mut rng, 3, 4, 5, true);
        let q = random_poly(&mut rng, 3, 4, 5, true);
        let lhs = p.mul(&q).unwrap().involution();
        let rhs = q.involution().mul(&p.involution()).unwrap();
        assert!(mat_poly_close(&lhs, &rhs));
    }
}

// coefficients may differ by float roundoff when products collide on a word
fn mat_poly_close(a: &NCPoly, b: &NCPoly) -> bool {
    let d = a.sub(b).unwrap();
    let ok = d.terms().all(|(_, c)| c.norm() < 1e-12);
    ok
}

#[test]
fn cyclic_gradient_examples() {
    let p = parse_poly("X1^2", 2).unwrap().cyclic_gradient(1).unwrap();
    assert_eq!(p, parse_poly("2 X1", 2).unwrap());

    let p = parse_poly("X1X2X1", 2).unwrap().cyclic_gradient(1).unwrap();
    assert_eq!(p, parse_poly("X2X1 + X1X2", 2).unwrap());

    let p = parse_poly("X2", 2).unwrap().cyclic_gradient(1).unwrap();
    assert!(p.is_zero());

    assert!(matches!(
        parse_poly("X1", 1).unwrap().cyclic_gradient(2),
        Err(PolyError::LetterOutOfRange { index: 2, m: 1 })
    ));
}

#[test]
fn cyclic_gradient_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let w = random_word(&mut rng, 3, 6, false);
        if w.is_unit() {
            continue;
        }
        let p = NCPoly::monomial(3, w.clone(), C64::ONE).unwrap();
        let r = rng.random_range(0..w.degree());
        let q = NCPoly::monomial(3, w.rotated(r), C64::ONE).unwrap();
        for i in 1..=3 {
            assert_eq!(p.cyclic_gradient(i).unwrap(), q.cyclic_gradient(i).unwrap());
        }
    }
}

#[test]
fn nc_derivative_examples() {
    let t = parse_poly("X1X2", 2).unwrap().nc_derivative(1).unwrap();
    let mut expect = TensorPoly::zero(2);
    expect.push(Word::unit(), Word::letter(2), C64::ONE);
    assert_eq!(t, expect);

    let t = parse_poly("X1^2", 1).unwrap().nc_derivative(1).unwrap();
    let mut expect = TensorPoly::zero(1);
    expect.push(Word::unit(), Word::letter(1), C64::ONE);
    expect.push(Word::letter(1), Word::unit(), C64::ONE);
    assert_eq!(t, expect);

    let t = parse_poly("X1*", 1).unwrap().nc_derivative(1).unwrap();
    assert!(t.is_zero());
}

#[test]
fn starred_derivative_examples() {
    let t = parse_poly("X1*", 1).unwrap().starred_nc_derivative(1).unwrap();
    assert_eq!(t, TensorPoly::unit(1));

    let p = parse_poly("X1X1*", 1).unwrap().starred_cyclic_gradient(1).unwrap();
    assert_eq!(p, parse_poly("X1", 1).unwrap());

    let t = parse_poly("X1", 1).unwrap().starred_nc_derivative(1).unwrap();
    assert!(t.is_zero());
}

#[test]
fn leibniz_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let p = random_poly(&mut rng, 3, 3, 4, true);
        let q = random_poly(&mut rng, 3, 3, 4, true);
        let pq = p.mul(&q).unwrap();
        for i in 1..=3 {
            let lhs = pq.nc_derivative(i).unwrap();
            let rhs = p
                .nc_derivative(i)
                .unwrap()
                .right_mul(&q)
                .unwrap()
                .add(&q.nc_derivative(i).unwrap().left_mul(&p).unwrap())
                .unwrap();
            let diff = lhs.add(&rhs.scale(-C64::ONE)).unwrap();
            assert!(diff.terms().all(|(_, c)| c.norm() < 1e-12), "leibniz failed");
        }
    }
}

#[test]
fn degree_bookkeeping() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let w = random_word(&mut rng, 2, 6, false);
        let p = NCPoly::monomial(2, w.clone(), C64::ONE).unwrap();
        for i in 1..=2 {
            let has = w.letters().iter().any(|l| l.index() == i && !l.is_starred());
            if !has {
                continue;
            }
            assert_eq!(p.cyclic_gradient(i).unwrap().degree(), w.degree() - 1);
            assert_eq!(p.nc_derivative(i).unwrap().degree(), w.degree() - 1);
        }
    }
}

#[test]
fn evaluate_diagonal_case() {
    let mut a = Mat::<C64>::zeros(2, 2);
    a[(0, 0)] = c(1.0, 0.0);
    a[(1, 1)] = c(2.0, 0.0);
    let p = parse_poly("X1^2", 1).unwrap();
    let e = evaluate(&p, &[a]).unwrap();
    assert_eq!(e[(0, 0)], c(1.0, 0.0));
    assert_eq!(e[(1, 1)], c(4.0, 0.0));
    assert_eq!(e[(0, 1)], C64::ZERO);
}

#[test]
fn evaluate_unit_is_identity() {
    let a = Mat::<C64>::zeros(3, 3);
    let e = evaluate(&NCPoly::unit(1), &[a]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(e[(i, j)], if i == j { C64::ONE } else { C64::ZERO });
        }
    }
}

#[test]
fn evaluate_mm_star_is_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut a = Mat::<C64>::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            a[(i, j)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let p = parse_poly("X1X1*", 1).unwrap();
    let e = evaluate(&p, &[a]).unwrap();
    let eigs = e.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    assert!(eigs.iter().all(|l| *l > -1e-12));
}

#[test]
fn evaluate_is_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let p = random_poly(&mut rng, 2, 3, 4, true);
        let q = random_poly(&mut rng, 2, 3, 4, true);
        let mats: Vec<CMat> = (0..2).map(|_| random_hermitian(&mut rng, 5, 0.8)).collect();
        let lhs = evaluate(&p.mul(&q).unwrap(), &mats).unwrap();
        let rhs = &evaluate(&p, &mats).unwrap() * &evaluate(&q, &mats).unwrap();
        assert!(mat_dist(&lhs, &rhs) < 1e-10);
    }
}

#[test]
fn evaluate_rejects_dimension_mismatch() {
    let a = Mat::<C64>::zeros(2, 2);
    let b = Mat::<C64>::zeros(3, 3);
    assert!(matches!(
        evaluate(&x(2, 1), &[a, b]),
        Err(PolyError::DimensionMismatch(_))
    ));
}

#[test]
fn sharp_unit_and_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_hermitian(&mut rng, 4, 1.0);
    let b = random_hermitian(&mut rng, 4, 1.0);

    let e = tensor_sharp(&TensorPoly::unit(1), &[a.clone()], &b).unwrap();
    assert!(mat_dist(&e, &b) < 1e-14);

    let mut t = TensorPoly::zero(1);
    t.push(Word::letter(1), Word::letter(1), C64::ONE);
    let id = Mat::<C64>::identity(4, 4);
    let e = tensor_sharp(&t, &[a.clone()], &id).unwrap();
    assert!(mat_dist(&e, &(&a * &a)) < 1e-12);
}

#[test]
fn sharp_linear_in_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mats: Vec<CMat> = (0..2).map(|_| random_hermitian(&mut rng, 4, 1.0)).collect();
    let p = random_poly(&mut rng, 2, 2, 3, false);
    let t = p.nc_derivative(1).unwrap();
    let b1 = random_hermitian(&mut rng, 4, 1.0);
    let b2 = random_hermitian(&mut rng, 4, 1.0);
    let sum = &b1 + &b2;
    let lhs = tensor_sharp(&t, &mats, &sum).unwrap();
    let rhs = &tensor_sharp(&t, &mats, &b1).unwrap() + &tensor_sharp(&t, &mats, &b2).unwrap();
    assert!(mat_dist(&lhs, &rhs) < 1e-12);
}

#[test]
fn trace_gradient_duality_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 6;
    let m = 2;
    for _ in 0..25 {
        let q = random_poly(&mut rng, m, 5, 4, false);
        // self-adjoint as a function of Hermitian tuples
        let p = q.add(&q.involution_self_adjoint()).unwrap();
        let mats: Vec<CMat> = (0..m).map(|_| random_hermitian(&mut rng, n, 0.6)).collect();
        let dir = random_hermitian(&mut rng, n, 0.6);
        for i in 1..=m {
            let grad = p.cyclic_gradient(i).unwrap();
            let gb = &evaluate(&grad, &mats).unwrap() * &dir;
            let expect: C64 = (0..n).map(|k| gb[(k, k)]).sum::<C64>() / n as f64;

            let eps = 1e-5;
            let tr = |shift: f64| -> f64 {
                let mut shifted = mats.clone();
                let mut s = shifted[i - 1].clone();
                for a in 0..n {
                    for b in 0..n {
                        s[(a, b)] += C64::new(shift, 0.0) * dir[(a, b)];
                    }
                }
                shifted[i - 1] = s;
                let e = evaluate(&p, &shifted).unwrap();
                (0..n).map(|k| e[(k, k)].re).sum::<f64>() / n as f64
            };
            let fd = (tr(eps) - tr(-eps)) / (2.0 * eps);
            let scale = expect.norm().max(1e-3);
            assert!(
                (fd - expect.re).abs() / scale < 1e-6,
                "duality: fd={fd} expect={}",
                expect.re
            );
        }
    }
}

#[test]
fn potential_validation() {
    // self-adjoint quartic
    let q = parse_word_auto("x4").unwrap();
    let v = Potential::new(1, 1.0, vec![(c(0.01, 0.0), q.clone())], true).unwrap();
    assert_eq!(v.quadratic_weight(), 1.0);

    // complex coupling on a non-symmetric word is not self-adjoint
    let w = parse_word_auto("X1X2").unwrap();
    assert!(matches!(
        Potential::new(2, 1.0, vec![(c(0.1, 0.0), w.clone())], true),
        Err(PolyError::NotSelfAdjoint)
    ));
    // ... but fine in non-self-adjoint mode
    assert!(Potential::new(2, 1.0, vec![(c(0.1, 0.0), w)], false).is_ok());

    assert!(matches!(
        Potential::new(1, 0.0, vec![], true),
        Err(PolyError::NonPositiveQuadraticWeight(_))
    ));

    assert!(matches!(
        Potential::new(1, 1.0, vec![(C64::ONE, Word::starred_letter(1))], true),
        Err(PolyError::StarredInSelfAdjointMode)
    ));
}

#[test]
fn potential_decomposition() {
    let p = parse_poly_auto("0.5 x2 + 0.01 x4").unwrap();
    let v = Potential::from_ncpoly(&p, true).unwrap();
    assert_eq!(v.quadratic_weight(), 1.0);
    assert_eq!(v.couplings().len(), 1);
    assert_eq!(v.as_ncpoly(), p);

    // double-well: negative quadratic coefficient folds into the couplings
    let p = parse_poly_auto("0.5 x4 - 4 x2").unwrap();
    let v = Potential::from_ncpoly(&p, true).unwrap();
    assert_eq!(v.quadratic_weight(), 1.0);
    assert_eq!(v.as_ncpoly(), p);
    let g = v.gradient(1).unwrap();
    assert_eq!(g, parse_poly_auto("2 x3 - 8 x").unwrap());
}

#[test]
fn gradient_of_quartic() {
    let v = Potential::new(
        1,
        1.0,
        vec![(c(0.25, 0.0), parse_word_auto("x4").unwrap())],
        true,
    )
    .unwrap();
    let g = v.gradient(1).unwrap();
    assert_eq!(g, parse_poly_auto("x + x3").unwrap());
}

#[test]
fn parse_examples() {
    let p = parse_poly_auto("0.5*x2 + 0.01*x4").unwrap();
    assert_eq!(p.coeff(&Word::power(1, 2)), c(0.5, 0.0));
    assert_eq!(p.coeff(&Word::power(1, 4)), c(0.01, 0.0));

    let p = parse_poly_auto("X1X2X1X2").unwrap();
    assert_eq!(p.degree(), 4);
    assert_eq!(p.ambient(), 2);

    // attached star is the adjoint, spaced star multiplies
    let attached = parse_poly("X1*X2", 2).unwrap();
    let expect = NCPoly::monomial(
        2,
        Word::from_letters(vec![Letter::starred(1), Letter::new(2)]),
        C64::ONE,
    )
    .unwrap();
    assert_eq!(attached, expect);
    let spaced = parse_poly("X1 * X2", 2).unwrap();
    assert_eq!(spaced, parse_poly("X1X2", 2).unwrap());

    let p = parse_poly_auto("(1+2i) X1 - 3i").unwrap();
    assert_eq!(p.coeff(&Word::letter(1)), c(1.0, 2.0));
    assert_eq!(p.coeff(&Word::unit()), c(0.0, -3.0));

    assert!(parse_poly("X3", 2).is_err());
    assert!(parse_poly_auto("X1 +").is_err());
}

#[test]
fn print_parse_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let p = random_poly(&mut rng, 3, 5, 6, true);
        let text = p.to_string();
        let q = parse_poly(&text, 3).unwrap();
        assert_eq!(p, q, "round trip failed on `{text}`");
    }
}

#[test]
fn tensor_format() {
    let t = parse_poly("X1^2", 1).unwrap().nc_derivative(1).unwrap();
    assert_eq!(format_tensor(&t), "1 (x) X1 + X1 (x) 1");
}

mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_word(m: usize, max_deg: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec((1..=m, proptest::bool::ANY), 0..=max_deg).prop_map(|ls| {
            Word::from_letters(
                ls.into_iter()
                    .map(|(i, s)| if s { Letter::starred(i) } else { Letter::new(i) })
                    .collect(),
            )
        })
    }

    fn arb_poly(m: usize) -> impl Strategy<Value = NCPoly> {
        proptest::collection::vec(
            (arb_word(m, 4), -1.0e3..1.0e3f64, -1.0e3..1.0e3f64),
            1..6,
        )
        .prop_map(move |ts| {
            NCPoly::from_terms(m, ts.into_iter().map(|(w, re, im)| (w, C64::new(re, im))))
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn round_trip(p in arb_poly(3)) {
            let text = p.to_string();
            let q = parse_poly(&text, 3).unwrap();
            prop_assert_eq!(p, q);
        }

        #[test]
        fn mul_associative(a in arb_poly(2), b in arb_poly(2), c in arb_poly(2)) {
            let lhs = a.mul(&b).unwrap().mul(&c).unwrap();
            let rhs = a.mul(&b.mul(&c).unwrap()).unwrap();
            let d = lhs.sub(&rhs).unwrap();
            prop_assert!(d.terms().all(|(_, v)| v.norm() < 1e-6 * 1e9));
        }
    }
}
