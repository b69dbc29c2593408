//! Acceptance suite: one test per criterion, each printing a single status line.
//!
//! Run with `cargo test -p dagger-core --test acceptance -- --nocapture --include-ignored`
//! to see every line, including the known-red hyperelliptic criterion.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{dense_rank, random_curve_connection, random_element, rng, truncated_ranks};
use dagger_core::arith::{CoeffSpec, Rational};
use dagger_core::cechalex::compare_with_derham;
use dagger_core::dagalg::{FringeElement, Presentation, TruncationLevel, UniPoly};
use dagger_core::derham::{cohomology, cohomology_at_levels, cohomology_with_support, poincare_homotopy_check};
use dagger_core::descent::{
    amitsur_complex, check_cocycle, descend, mittag_leffler_check, roos_complex, DescentDatum, FiniteAlgebra, Tower,
};
use dagger_core::diffcalc::{
    cocycle_check, connection_from_stratification, taylor_stratification, Connection, ElemMatrix,
};
use dagger_core::functor::{pushforward_finite, trace_splitting, GroupAction, RingMap};
use num_traits::{One, Zero};
use rand::Rng;

fn q() -> CoeffSpec {
    CoeffSpec::Rational
}

fn p5() -> CoeffSpec {
    CoeffSpec::padic(5, 20)
}

fn at(d: usize) -> TruncationLevel {
    TruncationLevel::default().with_degree(d)
}

/// Print the criterion line and enforce its time budget.
fn finish(n: u32, what: &str, start: Instant, budget_secs: u64) {
    let took = start.elapsed();
    let ok = took <= Duration::from_secs(budget_secs);
    println!(
        "criterion {n}: {} {what} ({:.2}s of {budget_secs}s)",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    assert!(ok, "criterion {n} exceeded {budget_secs}s: {took:?}");
}

#[test]
fn criterion_01_affine_line() {
    let start = Instant::now();
    for spec in [q(), p5()] {
        let a = Presentation::affine_space(1, spec).unwrap();
        let r = cohomology(&Connection::trivial(&a, 1), &at(16)).unwrap();
        assert_eq!(r.dims, vec![1, 0]);
        assert_eq!(r.stabilization.first().map(|s| s.0), Some(16));
        assert!(r.stabilization.iter().all(|(_, d)| d == &vec![1, 0]));
    }
    finish(1, "affine line trivial: (1, 0) over Q and Q_5", start, 1);
}

#[test]
fn criterion_02_torus() {
    let start = Instant::now();
    let t = Presentation::torus(1, q()).unwrap();
    let triv = cohomology(&Connection::trivial(&t, 1), &at(16)).unwrap();
    assert_eq!(triv.dims, vec![1, 1]);
    let reps: Vec<String> = triv.basis[1].iter().map(|w| w.render()).collect();
    assert_eq!(reps, vec!["dx/x".to_string()]);

    let t5 = Presentation::torus(1, p5()).unwrap();
    let half = cohomology(&Connection::kummer(&t5, p5().ratio(1, 2)).unwrap(), &at(16)).unwrap();
    assert_eq!(half.dims, vec![0, 0]);

    let one = cohomology(&Connection::kummer(&t, q().int(1)).unwrap(), &at(16)).unwrap();
    assert_eq!(one.dims, vec![1, 1]);
    // independent rank oracle on a larger window
    assert_eq!(truncated_ranks(&Connection::trivial(&t, 1), 24, None), (1, 1));
    assert_eq!(truncated_ranks(&Connection::kummer(&t, q().ratio(1, 2)).unwrap(), 24, None), (0, 0));
    assert_eq!(truncated_ranks(&Connection::kummer(&t, q().int(1)).unwrap(), 24, None), (1, 1));
    finish(2, "torus: trivial (1, 1) dx/x, Kummer(1/2) (0, 0), Kummer(1) (1, 1)", start, 6);
}

#[test]
fn criterion_03_comparison() {
    let start = Instant::now();
    let a = Presentation::affine_space(1, q()).unwrap();
    let t = Presentation::torus(1, q()).unwrap();
    let cases = vec![
        ("A1 trivial", Connection::trivial(&a, 1)),
        ("torus trivial", Connection::trivial(&t, 1)),
        ("Kummer(1/2)", Connection::kummer(&t, q().ratio(1, 2)).unwrap()),
        ("Kummer(1)", Connection::kummer(&t, q().int(1)).unwrap()),
        ("random rank 2", random_curve_connection(&a, 2, 2, &mut rng(2024))),
    ];
    for (name, c) in &cases {
        let r = compare_with_derham(c, &[3, 4], &at(16)).unwrap();
        assert!(r.agrees(), "{name}: {r:?}");
        assert_eq!(r.jet.len(), 2);
        assert_eq!(r.jet[0].1, r.jet[1].1, "{name}: jet dims differ between orders");
        assert_eq!(r.jet[0].1[..2], r.derham[..2], "{name}");
    }
    finish(3, "jet Cech-Alexander agrees with de Rham at orders 3 and 4 on 5 inputs", start, 30);
}

fn nonintegrable() -> Connection {
    let a2 = Presentation::affine_space(2, q()).unwrap();
    let s = |x: i64| q().int(x);
    let n1 = ElemMatrix::from_scalars(&a2, &[vec![s(0), s(1)], vec![s(0), s(0)]]);
    let n2 = ElemMatrix::from_scalars(&a2, &[vec![s(0), s(0)], vec![s(1), s(0)]]);
    Connection::new(&a2, vec![n1, n2]).unwrap()
}

#[test]
fn criterion_04_taylor_cocycle() {
    let start = Instant::now();
    let mut g = rng(404);
    for i in 0..25 {
        let p = if i % 2 == 0 { Presentation::affine_space(1, q()) } else { Presentation::torus(1, q()) }.unwrap();
        let rank = g.gen_range(1..=3);
        let deg = g.gen_range(0..=3);
        let c = random_curve_connection(&p, rank, deg, &mut g);
        let e = taylor_stratification(&c, 4).unwrap();
        let check = cocycle_check(&e);
        assert!(check.passed(), "connection {i}: {check:?}");
        assert_eq!(connection_from_stratification(&e).unwrap(), c, "connection {i}");
    }
    let bad = cocycle_check(&taylor_stratification(&nonintegrable(), 2).unwrap());
    assert_eq!(bad.first_failure, Some(2));
    finish(4, "25 random cocycles pass through order 4, non-integrable fails at degree 2", start, 30);
}

#[test]
fn criterion_05_poincare_homotopy() {
    let start = Instant::now();
    let mut g = rng(505);
    for spec in [q(), p5()] {
        let a = Presentation::affine_space(1, spec).unwrap();
        for i in 0..100 {
            let top = g.gen_range(0..=8);
            let m: Vec<FringeElement> = (0..=top).map(|_| random_element(&a, 2, 0.5, &mut g)).collect();
            let rep = poincare_homotopy_check(&m, 3).unwrap();
            assert!(rep.all_pass(), "{spec:?} sample {i}: {rep:?}");
        }
    }
    finish(5, "three homotopy identities on 100 samples over Q and over Q_5", start, 10);
}

#[test]
fn criterion_06_pushforward() {
    let start = Instant::now();
    let t = Presentation::torus(1, p5()).unwrap();
    let phi = RingMap::quadratic_cover(&t, &FringeElement::coordinate(&t, 0)).unwrap();
    let a = phi.source().clone();
    let up = Connection::trivial(phi.target(), 1);
    let push = pushforward_finite(&up, &phi).unwrap();
    let k0 = Connection::kummer(&a, p5().zero()).unwrap();
    let k_half = Connection::kummer(&a, p5().ratio(1, 2)).unwrap();
    assert_eq!(push, k0.direct_sum(&k_half));

    let down = cohomology(&push, &at(16)).unwrap().dims;
    assert_eq!(down, cohomology(&up, &at(16)).unwrap().dims);
    assert_eq!(down, vec![1, 1]);
    assert_eq!(cohomology(&k0, &at(16)).unwrap().dims, vec![1, 1]);
    assert_eq!(cohomology(&k_half, &at(16)).unwrap().dims, vec![0, 0]);

    let g = GroupAction::roots_of_unity(&phi).unwrap();
    let s = trace_splitting(&Connection::trivial(&a, 1), &phi, &g).unwrap();
    assert_eq!(s.idempotent.mul(&s.idempotent), s.idempotent);
    assert!(s.idempotent_ok && s.commutes && s.recovers);
    finish(6, "quadratic pushforward = Kummer(0) + Kummer(1/2), dims match, e^2 = e", start, 10);
}

#[test]
fn criterion_07_descent() {
    let start = Instant::now();
    let t = Presentation::torus(1, q()).unwrap();
    let phi = RingMap::quadratic_cover(&t, &FringeElement::coordinate(&t, 0)).unwrap();
    let alg = Arc::new(FiniteAlgebra::new(&phi).unwrap());
    for rank in 1..=3 {
        let rep = amitsur_complex(rank, alg.as_ref(), 2).unwrap();
        assert!(rep.h0_is_module && rep.exact_in(1) && rep.exact_in(2), "rank {rank}: {rep:?}");
    }
    let mut g = rng(707);
    for _ in 0..10 {
        let s = g.gen_range(1..=3);
        let m0 = random_curve_connection(alg.base(), s, 2, &mut g);
        let datum = DescentDatum::canonical(&alg, &m0).unwrap();
        assert!(check_cocycle(&datum).passed);
        let out = descend(&datum).unwrap();
        assert_eq!(out.connection.unwrap(), m0);
        assert!(out.base_change_ok);
    }
    let swap = DescentDatum::branch_swap(&alg, Some(Connection::trivial(alg.cover(), 1))).unwrap();
    let out = descend(&swap).unwrap();
    assert_eq!(out.connection.unwrap(), Connection::kummer(alg.base(), q().ratio(1, 2)).unwrap());
    finish(7, "Amitsur exact in degrees 1, 2; 10 roundtrips; branch swap gives Kummer(1/2)", start, 20);
}

#[test]
fn criterion_08_support() {
    let start = Instant::now();
    let a = Presentation::affine_space(1, q()).unwrap();
    let triv = Connection::trivial(&a, 1);
    let z0 = cohomology_with_support(&triv, &UniPoly::from_ints(q(), &[0, 1]), 16).unwrap();
    assert_eq!(z0.dims, [0, 0, 1]);
    let z01 = cohomology_with_support(&triv, &UniPoly::from_ints(q(), &[0, -1, 1]), 16).unwrap();
    assert_eq!(z01.dims, [0, 0, 2]);
    finish(8, "supports {0} and {0, 1} give (0, 0, 1) and (0, 0, 2)", start, 5);
}

/// The target value is 3. With `y` a unit the presentation is the elliptic curve minus
/// the point at infinity and the three points `y = 0`, so H¹ is `2g + 4 - 1 = 5`: the two
/// odd classes `dx/y, x dx/y` and three even ones from `x^3 - x` having three roots. The
/// engine and the dense rank oracle below agree on 5; this test keeps the target value
/// and stays red.
#[test]
#[ignore = "red: target H^1 = 3, engine and independent rank oracle both give 5 (see README)"]
fn criterion_09_hyperelliptic() {
    let start = Instant::now();
    let f = [0, -1, 0, 1];
    let hq = Presentation::hyperelliptic(UniPoly::from_ints(q(), &f)).unwrap();
    let y = FringeElement::cover_variable(&hq).unwrap();
    let oracle = truncated_ranks(&Connection::trivial(&hq, 1), 28, Some(&y));
    let h5 = Presentation::hyperelliptic(UniPoly::from_ints(p5(), &f)).unwrap();
    let r = cohomology_at_levels(&Connection::trivial(&h5, 1), &[20, 24]).unwrap();
    let reps: Vec<String> = r.basis[1].iter().map(|w| w.render()).collect();
    println!("criterion 9: engine dims {:?} reps {reps:?}; oracle (h0, h1) at degree 28 = {oracle:?}", r.dims);
    let ok = r.dims[1] == 3 && oracle.1 == 3;
    println!("criterion 9: {} hyperelliptic H^1 = 3 at windows (20, 24)", if ok { "PASS" } else { "FAIL" });
    assert!(reps.contains(&"dx/y".to_string()) && reps.contains(&"x dx/y".to_string()));
    assert_eq!(oracle.1, 3, "independent oracle H^1");
    assert_eq!(r.dims[1], 3, "engine H^1");
    finish(9, "hyperelliptic H^1 = 3", start, 60);
}

/// `rank im(M_from -> M_to)` for `K[t]/t^{i+1}` with multiplication-by-`t` maps, built densely.
fn mult_t_image_rank(from: usize, to: usize) -> usize {
    let shift = from - to;
    let rows: Vec<Vec<Rational>> = (0..=to)
        .map(|i| (0..=from).map(|j| if i == j + shift { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    dense_rank(rows)
}

#[test]
fn criterion_10_roos() {
    let start = Instant::now();
    for depth in 2..=8 {
        for t in [Tower::constant(q(), 2, depth), Tower::projections(q(), depth)] {
            let r = roos_complex(&t).unwrap();
            assert!(r.mittag_leffler && mittag_leffler_check(&t).unwrap());
            assert_eq!(r.lim1, 0);
        }
    }
    for depth in 4..=8 {
        let r = roos_complex(&Tower::multiplication_by_t(q(), depth)).unwrap();
        let lim = mult_t_image_rank(depth - 1, r.middle);
        assert_eq!(r.lim, lim);
        assert_eq!(r.lim1, mult_t_image_rank(depth - 2, r.middle) - lim, "depth {depth}");
    }
    finish(10, "surjective towers have lim1 = 0; mult-by-t lim1 matches brute force at depths 4-8", start, 5);
}
