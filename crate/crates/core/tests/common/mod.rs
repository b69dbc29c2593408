#![allow(dead_code)]

use std::sync::Arc;

use dagger_core::arith::{rat, Scalar};
use dagger_core::dagalg::{FringeElement, Presentation, Terms};
use dagger_core::diffcalc::{Connection, ElemMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Small random coefficient; p-adic specs get an occasional positive valuation.
pub fn random_scalar(pres: &Presentation, rng: &mut ChaCha8Rng) -> Scalar {
    let n: i64 = rng.gen_range(-4..=4);
    let d: i64 = rng.gen_range(1..=3);
    pres.spec().rational(&rat(n, d))
}

/// Random element supported on keys of size at most `deg`.
pub fn random_element(pres: &Arc<Presentation>, deg: i64, density: f64, rng: &mut ChaCha8Rng) -> FringeElement {
    let mut t = Terms::new();
    for k in pres.basis_keys(deg) {
        if rng.gen_bool(density) {
            let c = random_scalar(pres, rng);
            if !c.is_zero() {
                t.insert(k, c);
            }
        }
    }
    FringeElement::from_terms(pres, t).unwrap()
}

pub fn random_matrix(
    pres: &Arc<Presentation>,
    rank: usize,
    deg: i64,
    density: f64,
    rng: &mut ChaCha8Rng,
) -> ElemMatrix {
    let rows = (0..rank).map(|_| (0..rank).map(|_| random_element(pres, deg, density, rng)).collect()).collect();
    ElemMatrix::from_rows(pres, rows)
}

/// On a curve every connection is integrable.
pub fn random_curve_connection(pres: &Arc<Presentation>, rank: usize, deg: i64, rng: &mut ChaCha8Rng) -> Connection {
    Connection::new(pres, vec![random_matrix(pres, rank, deg, 0.4, rng)]).unwrap()
}

/// Flat connection on a higher-dimensional space: the gauge transform of the
/// trivial one by a random unipotent upper-triangular matrix.
pub fn random_flat_connection(pres: &Arc<Presentation>, rank: usize, deg: i64, rng: &mut ChaCha8Rng) -> Connection {
    let mut g = ElemMatrix::identity(pres, rank);
    for i in 0..rank {
        for j in i + 1..rank {
            g.set(i, j, random_element(pres, deg, 0.5, rng));
        }
    }
    // unipotent inverse by back substitution: (I + U)^{-1} = Σ (-U)^k
    let u = g.sub(&ElemMatrix::identity(pres, rank));
    let mut inv = ElemMatrix::identity(pres, rank);
    let mut pw = ElemMatrix::identity(pres, rank);
    for _ in 1..rank {
        pw = pw.mul(&u).scale(&pres.spec().int(-1));
        inv = inv.add(&pw);
    }
    Connection::trivial(pres, rank).gauge(&g, &inv)
}

/// Rank of a dense rational matrix by plain Gaussian elimination.
pub fn dense_rank(mut rows: Vec<Vec<dagger_core::arith::Rational>>) -> usize {
    use num_traits::Zero;
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let piv = rows[rank][c].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let f = &rows[r][c] / &piv;
                for j in c..cols {
                    let t = &f * &rows[rank][j];
                    rows[r][j] -= t;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Truncated `(h0, h1)` of a curve connection by raw dense ranks: `h0` is the kernel of
/// `∇` on sections of size `<= d`, `h1` the dimension of the targets of size `<= d/2`
/// modulo the image (`rank(T + Im) - rank(Im)`). Coefficients are read back as rationals.
pub fn truncated_ranks(conn: &Connection, d: i64, form_multiplier: Option<&FringeElement>) -> (usize, usize) {
    use std::collections::BTreeMap;
    let pres = conn.presentation();
    let r = conn.rank();
    let mut cols: BTreeMap<(usize, Vec<i64>), usize> = BTreeMap::new();
    let mut images = Vec::new();
    for k in pres.basis_keys(d) {
        for c in 0..r {
            let mut s = vec![FringeElement::zero(pres); r];
            s[c] = FringeElement::monomial(pres, k.clone(), pres.spec().one()).unwrap();
            let mut img = conn.apply(0, &s);
            if let Some(m) = form_multiplier {
                img = img.iter().map(|e| e.mul(m)).collect();
            }
            let mut v = Vec::new();
            for (i, e) in img.iter().enumerate() {
                for (key, val) in e.terms() {
                    let n = cols.len();
                    let id = *cols.entry((i, key.clone())).or_insert(n);
                    v.push((id, val.to_rational()));
                }
            }
            images.push(v);
        }
    }
    let mut targets = Vec::new();
    for k in pres.basis_keys(d / 2) {
        for c in 0..r {
            let n = cols.len();
            let id = *cols.entry((c, k.clone())).or_insert(n);
            targets.push(vec![(id, rat(1, 1))]);
        }
    }
    let width = cols.len();
    let dense = |v: &Vec<(usize, dagger_core::arith::Rational)>| {
        let mut row = vec![rat(0, 1); width];
        for (i, x) in v {
            row[*i] = x.clone();
        }
        row
    };
    let im: Vec<_> = images.iter().map(dense).collect();
    let rank_im = dense_rank(im.clone());
    let mut both = im;
    both.extend(targets.iter().map(dense));
    let h0 = images.len() - rank_im;
    (h0, dense_rank(both) - rank_im)
}
