use std::collections::BTreeMap;
use std::sync::Arc;

use dagger_core::arith::{rat, CoeffSpec, Rational, Scalar};
use dagger_core::dagalg::{Certificate, DagError, FringeElement, Key, Presentation, Terms, UniPoly};
use proptest::prelude::*;

fn q() -> CoeffSpec {
    CoeffSpec::Rational
}

fn elt(p: &Arc<Presentation>, raw: &[(&[i64], i64)]) -> FringeElement {
    let raw: Vec<(Key, Scalar)> = raw.iter().map(|(k, c)| (k.to_vec(), p.spec().int(*c))).collect();
    FringeElement::normal_form(&raw, p).unwrap()
}

fn hyper() -> Arc<Presentation> {
    Presentation::hyperelliptic(UniPoly::from_ints(q(), &[0, -1, 0, 1])).unwrap()
}

#[test]
fn y_cubed_rewrites_to_f_times_y() {
    let h = hyper();
    let y3 = elt(&h, &[(&[0, 0, 3], 1)]);
    let expect = elt(&h, &[(&[3, 0, 1], 1), (&[1, 0, 1], -1)]);
    assert_eq!(y3, expect);
}

#[test]
fn slope_half_certificate() {
    let spec = CoeffSpec::padic(5, 20);
    let a = Presentation::affine_space(1, spec).unwrap();
    let raw: Vec<(Key, Scalar)> = (0..=8).map(|k| (vec![2 * k], spec.with_valuation(&rat(1, 1), k).unwrap())).collect();
    let e = FringeElement::normal_form(&raw, &a).unwrap();
    assert_eq!(e.certificate(), Certificate::new(2, 0));
}

#[test]
fn laurent_cancellation() {
    let t = Presentation::torus(1, q()).unwrap();
    let inv = elt(&t, &[(&[-1], 1)]);
    let f = elt(&t, &[(&[2], 1), (&[1], 1)]);
    assert_eq!(inv.mul(&f), elt(&t, &[(&[1], 1), (&[0], 1)]));
}

#[test]
fn additive_identity_and_inverse_pair() {
    let t = Presentation::torus(1, q()).unwrap();
    let a = elt(&t, &[(&[3], 2), (&[-2], 5)]);
    assert_eq!(a.add(&FringeElement::zero(&t)), a);
    let x = elt(&t, &[(&[1], 1)]);
    assert!(x.mul(&elt(&t, &[(&[-1], 1)])).is_one());
    assert!(x.mul(&x.inverse().unwrap()).is_one());
}

/// Schoolbook product of univariate polynomials over the rationals.
fn schoolbook(a: &BTreeMap<i64, Rational>, b: &BTreeMap<i64, Rational>) -> BTreeMap<i64, Rational> {
    let mut out: BTreeMap<i64, Rational> = BTreeMap::new();
    for (i, x) in a {
        for (j, y) in b {
            *out.entry(i + j).or_insert_with(|| rat(0, 1)) += x * y;
        }
    }
    out.retain(|_, v| *v != rat(0, 1));
    out
}

#[test]
fn product_matches_schoolbook_and_offsets_add() {
    let spec = CoeffSpec::padic(5, 20);
    let a1 = Presentation::affine_space(1, spec).unwrap();
    let a = elt(&a1, &[(&[0], 1), (&[1], 5)]);
    let b = elt(&a1, &[(&[0], 1), (&[1], -5)]);
    let prod = a.mul(&b);
    let oracle = schoolbook(
        &BTreeMap::from([(0, rat(1, 1)), (1, rat(5, 1))]),
        &BTreeMap::from([(0, rat(1, 1)), (1, rat(-5, 1))]),
    );
    let got: BTreeMap<i64, Rational> = prod.terms().iter().map(|(k, c)| (k[0], c.to_rational())).collect();
    assert_eq!(got, oracle);
    assert_eq!(got, BTreeMap::from([(0, rat(1, 1)), (2, rat(-25, 1))]));
    let claim = a.certificate().offset + b.certificate().offset;
    assert!(prod.certificate().offset <= claim);
    assert!(prod.certificate().holds(&a1, prod.terms()));
}

#[test]
fn derivative_examples() {
    let a1 = Presentation::affine_space(1, q()).unwrap();
    assert_eq!(elt(&a1, &[(&[3], 1)]).partial_derivative(0), elt(&a1, &[(&[2], 3)]));
    let t = Presentation::torus(1, q()).unwrap();
    assert_eq!(elt(&t, &[(&[-1], 1)]).partial_derivative(0), elt(&t, &[(&[-2], -1)]));
}

#[test]
fn derivative_of_y_on_hyperelliptic() {
    let h = hyper();
    let y = FringeElement::cover_variable(&h).unwrap();
    let dy = y.partial_derivative(0);
    // f'/(2f) * y with f = x^3 - x: (3/2 x^2 - 1/2) / f, times y
    let mut expect = Terms::new();
    expect.insert(vec![2, 1, 1], Scalar::Q(rat(3, 2)));
    expect.insert(vec![0, 1, 1], Scalar::Q(rat(-1, 2)));
    assert_eq!(dy.terms(), &expect);
    // chain rule witness: 2 y dy = f'
    let lhs = y.mul(&dy).scale(&q().int(2));
    assert_eq!(lhs, elt(&h, &[(&[2, 0, 0], 3), (&[0, 0, 0], -1)]));
}

#[test]
fn non_etale_cover_is_rejected() {
    let t = Presentation::affine_space(1, q()).unwrap();
    // y^2 - x over A^1: 2y is not a unit because x is not
    let m = vec![Terms::from([(vec![1], q().int(-1))]), Terms::new()];
    assert!(matches!(Presentation::monic_cover(t, m), Err(DagError::NonEtale(_))));
}

#[test]
fn slow_decay_violates_certificate() {
    let spec = CoeffSpec::padic(5, 10);
    let a1 = Presentation::affine_space(1, spec).unwrap();
    let raw: Vec<(Key, Scalar)> = (0..=100).map(|k| (vec![k], spec.one())).collect();
    assert!(matches!(FringeElement::normal_form(&raw, &a1), Err(DagError::CertificateViolation { .. })));
}

#[test]
fn localized_line_inverse_and_basis() {
    let f = UniPoly::from_ints(q(), &[0, -1, 1]); // x^2 - x
    let l = Presentation::localized_line(f).unwrap();
    let x = FringeElement::coordinate(&l, 0);
    let xi = x.inverse().unwrap();
    assert!(x.mul(&xi).is_one());
    let xm1 = x.sub(&FringeElement::one(&l));
    assert!(xm1.mul(&xm1.inverse().unwrap()).is_one());
    assert!(x.add(&FringeElement::one(&l)).inverse().is_err());
    let keys = l.basis_keys(4);
    assert!(keys.iter().all(|k| l.is_normal_key(k) && l.key_size(k) <= 4));
    assert_eq!(keys.len(), 5 + 2 + 1);
}

#[test]
fn quadratic_cover_of_torus() {
    let t = Presentation::torus(1, q()).unwrap();
    let m = vec![Terms::from([(vec![1], q().int(-1))]), Terms::new()];
    let b = Presentation::monic_cover(t, m).unwrap();
    let y = FringeElement::cover_variable(&b).unwrap();
    let x = FringeElement::coordinate(&b, 0);
    assert_eq!(y.mul(&y), x);
    assert!(y.mul(&y.inverse().unwrap()).is_one());
    // d/dx y = y / (2x)
    let expect = y.mul(&x.inverse().unwrap()).scale(&Scalar::Q(rat(1, 2)));
    assert_eq!(y.partial_derivative(0), expect);
}

#[test]
fn padic_series_inverse() {
    let spec = CoeffSpec::padic(5, 12);
    let a1 = Presentation::affine_space(1, spec).unwrap();
    let u = elt(&a1, &[(&[0], 1), (&[1], 5)]);
    let inv = u.inverse().unwrap();
    assert!(u.mul(&inv).is_one());
}

#[test]
fn truncation_sets_tail_flag() {
    let a1 = Presentation::affine_space(1, q()).unwrap();
    let a = elt(&a1, &[(&[3], 1), (&[0], 1)]).with_degree_bound(4);
    let sq = a.mul(&a);
    assert!(sq.tail_dropped());
    assert_eq!(sq, elt(&a1, &[(&[3], 2), (&[0], 1)]));
}

// ---- properties ----

fn presentations() -> Vec<Arc<Presentation>> {
    let p5 = CoeffSpec::padic(5, 12);
    let t = Presentation::torus(1, q()).unwrap();
    vec![
        Presentation::affine_space(2, q()).unwrap(),
        Presentation::torus(2, p5).unwrap(),
        Presentation::localized_line(UniPoly::from_ints(q(), &[0, -1, 1])).unwrap(),
        Presentation::hyperelliptic(UniPoly::from_ints(p5, &[0, -1, 0, 1])).unwrap(),
        Presentation::monic_cover(t, vec![Terms::from([(vec![1], q().int(-1))]), Terms::new()]).unwrap(),
    ]
}

fn random_element(p: &Arc<Presentation>, seeds: &[(u8, i8, i8)]) -> FringeElement {
    let keys = p.basis_keys(4);
    let mut t = Terms::new();
    for &(k, c, v) in seeds {
        let key = keys[k as usize % keys.len()].clone();
        let val = (v as i64).rem_euclid(3);
        let coeff = match p.spec() {
            CoeffSpec::Rational => Scalar::Q(rat(c as i64, 1 + val)),
            spec => spec.with_valuation(&rat(c as i64 | 1, 1), val).unwrap(),
        };
        t.insert(key, coeff);
    }
    FringeElement::from_terms(p, t).unwrap()
}

fn seeds() -> impl Strategy<Value = Vec<(u8, i8, i8)>> {
    proptest::collection::vec(any::<(u8, i8, i8)>(), 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normal_form_is_idempotent(which in 0usize..5, s in seeds()) {
        let p = &presentations()[which];
        let a = random_element(p, &s);
        let once = a.renormalize().unwrap_or(a.clone());
        prop_assert_eq!(&once, &a);
        prop_assert_eq!(once.renormalize().unwrap_or(once.clone()), once);
    }

    #[test]
    fn ring_laws(which in 0usize..5, s1 in seeds(), s2 in seeds(), s3 in seeds()) {
        let p = &presentations()[which];
        let (a, b, c) = (random_element(p, &s1), random_element(p, &s2), random_element(p, &s3));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
    }

    #[test]
    fn leibniz(which in 0usize..5, s1 in seeds(), s2 in seeds()) {
        let p = &presentations()[which];
        let (a, b) = (random_element(p, &s1), random_element(p, &s2));
        for i in 0..p.dim() {
            let lhs = a.mul(&b).partial_derivative(i);
            let rhs = a.mul(&b.partial_derivative(i)).add(&b.mul(&a.partial_derivative(i)));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn certificates_stay_sound(which in 0usize..5, s1 in seeds(), s2 in seeds(), ops in proptest::collection::vec(0u8..4, 1..5)) {
        let p = &presentations()[which];
        let mut a = random_element(p, &s1);
        let b = random_element(p, &s2);
        for op in ops {
            a = match op {
                0 => a.add(&b),
                1 => a.mul(&b),
                2 => a.partial_derivative(0),
                _ => a.scale(&p.spec().int(5)),
            };
            prop_assert!(a.certificate().holds(p, a.terms()));
        }
    }
}
