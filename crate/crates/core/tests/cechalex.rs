mod common;

use std::sync::Arc;

use common::{dense_rank, random_curve_connection, rng};
use dagger_core::arith::{rat, CoeffSpec, Rational};
use dagger_core::cechalex::{build_jet_cech, compare_with_derham, h0_strat, CechError};
use dagger_core::dagalg::{FringeElement, Presentation, TruncationLevel};
use dagger_core::derham;
use dagger_core::diffcalc::{taylor_stratification, Connection, ElemMatrix, Stratification};
use proptest::prelude::*;

fn q() -> CoeffSpec {
    CoeffSpec::Rational
}

fn torus() -> Arc<Presentation> {
    Presentation::torus(1, q()).unwrap()
}

fn at(d: usize) -> TruncationLevel {
    TruncationLevel::default().with_degree(d)
}

#[test]
fn trivial_line_kernel_is_constants() {
    let a = Presentation::affine_space(1, q()).unwrap();
    let cx = build_jet_cech(&Stratification::identity(&a, 1, 1), 1, 1).unwrap();
    let (dim, basis) = cx.cohomology_at(0, 12).unwrap();
    assert_eq!(dim, 1);
    let s = &basis[0].terms[&Vec::<u32>::new()][0];
    assert!(s.as_constant().is_some());
}

/// `Σ_k c_k x^k ↦ ξ^j`-coefficients of `(1 + ξ/x)^a s(x + ξ) - s(x)`, `1 <= j <= n`, written
/// out from the binomial series; the kernel dimension by dense rank.
fn kummer_kernel_oracle(a: &Rational, n: u32, size: i64) -> usize {
    let binom =
        |r: &Rational, j: u32| (0..j).fold(rat(1, 1), |acc, i| acc * (r - rat(i as i64, 1)) / rat(i as i64 + 1, 1));
    let ks: Vec<i64> = (-size..=size).collect();
    let width_rows: Vec<(u32, i64)> = (1..=n).flat_map(|j| (-size - n as i64..=size).map(move |e| (j, e))).collect();
    let mut rows = Vec::new();
    for &k in &ks {
        // ε(x^k) = Σ_j ξ^j Σ_{a+l=j} C(a_,a) x^{-a} C(k,l) x^{k-l}
        let mut row = vec![rat(0, 1); width_rows.len()];
        for j in 1..=n {
            let mut c = rat(0, 1);
            for l in 0..=j {
                c += binom(a, j - l) * binom(&rat(k, 1), l);
            }
            let e = k - j as i64;
            let pos = width_rows.iter().position(|&(jj, ee)| jj == j && ee == e).unwrap();
            row[pos] = c;
        }
        rows.push(row);
    }
    ks.len() - dense_rank(rows)
}

#[test]
fn kummer_half_has_no_horizontal_sections() {
    let t = torus();
    let c = Connection::kummer(&t, q().ratio(1, 2)).unwrap();
    let cx = build_jet_cech(&taylor_stratification(&c, 3).unwrap(), 1, 3).unwrap();
    assert_eq!(cx.cohomology_at(0, 12).unwrap().0, 0);
    assert_eq!(kummer_kernel_oracle(&rat(1, 2), 3, 12), 0);
    assert_eq!(kummer_kernel_oracle(&rat(1, 1), 3, 12), 1);
}

#[test]
fn h0_examples() {
    let t = torus();
    let triv = taylor_stratification(&Connection::trivial(&t, 1), 3).unwrap();
    assert_eq!(h0_strat(&triv, 3, 12).unwrap().dim, 1);
    let half = taylor_stratification(&Connection::kummer(&t, q().ratio(1, 2)).unwrap(), 3).unwrap();
    assert_eq!(h0_strat(&half, 3, 12).unwrap().dim, 0);
    let k1 = Connection::kummer(&t, q().int(1)).unwrap();
    let r = h0_strat(&taylor_stratification(&k1, 3).unwrap(), 3, 12).unwrap();
    assert_eq!(r.dim, 1);
    assert_eq!(r.stabilized_at, 1);
    // the kernel is spanned by x^{-1}, and ∇(x^{-1}) = 0
    let s = &r.basis[0];
    assert_eq!(s[0].terms().keys().collect::<Vec<_>>(), vec![&vec![-1]]);
    assert!(k1.apply(0, s)[0].is_zero());
}

#[test]
fn jet_order_beyond_stratification_is_rejected() {
    let t = torus();
    let e = taylor_stratification(&Connection::trivial(&t, 1), 2).unwrap();
    assert!(matches!(build_jet_cech(&e, 1, 3), Err(CechError::OrderTooHigh { .. })));
}

#[test]
fn non_integrable_data_breaks_the_complex() {
    let a2 = Presentation::affine_space(2, q()).unwrap();
    let y = FringeElement::coordinate(&a2, 1);
    let m1 = ElemMatrix::from_rows(&a2, vec![vec![y]]);
    let m2 = ElemMatrix::zeros(&a2, 1, 1);
    let c = Connection::new(&a2, vec![m1, m2]).unwrap();
    let e = taylor_stratification(&c, 2).unwrap();
    assert!(matches!(build_jet_cech(&e, 2, 2), Err(CechError::CocycleViolation { degree: 0 })));
}

#[test]
fn comparison_examples() {
    let a = Presentation::affine_space(1, q()).unwrap();
    let r = compare_with_derham(&Connection::trivial(&a, 1), &[3], &at(16)).unwrap();
    assert_eq!(r.derham, vec![1, 0]);
    assert_eq!(r.jet, vec![(3, vec![1, 0])]);
    let t = torus();
    let r = compare_with_derham(&Connection::trivial(&t, 1), &[3], &at(16)).unwrap();
    assert!(r.agrees());
    assert_eq!(r.derham, vec![1, 1]);
    let r = compare_with_derham(&Connection::kummer(&t, q().ratio(1, 2)).unwrap(), &[3], &at(16)).unwrap();
    assert!(r.agrees());
    assert_eq!(r.derham, vec![0, 0]);
}

#[test]
fn two_variable_complex_squares_to_zero() {
    let a2 = Presentation::affine_space(2, q()).unwrap();
    let mut g = rng(3);
    let c = common::random_flat_connection(&a2, 2, 1, &mut g);
    let e = taylor_stratification(&c, 2).unwrap();
    let cx = build_jet_cech(&e, 2, 2).unwrap();
    cx.check_square_zero(2).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), rank in 1usize..=2, on_torus in any::<bool>()) {
        let p = if on_torus { torus() } else { Presentation::affine_space(1, q()).unwrap() };
        let c = random_curve_connection(&p, rank, 2, &mut rng(seed));
        let cx = build_jet_cech(&taylor_stratification(&c, 3).unwrap(), 3, 3).unwrap();
        prop_assert!(cx.check_square_zero(2).is_ok());
    }

    #[test]
    fn h0_matches_derham(a_num in -3i64..=3, a_den in 1i64..=2, n in 2u32..=3) {
        let t = torus();
        let c = Connection::kummer(&t, q().ratio(a_num, a_den)).unwrap();
        let h0 = h0_strat(&taylor_stratification(&c, n).unwrap(), n, 16).unwrap();
        let dr = derham::cohomology(&c, &at(16)).unwrap();
        prop_assert_eq!(h0.dim, dr.dims[0]);
    }
}
