use num_bigint::BigInt;
use num_traits::One;

use crate::arith::Rational;

pub type MultiIndex = Vec<u32>;

pub fn total(k: &[u32]) -> u32 {
    k.iter().sum()
}

/// All multi-indices in `m` variables with total degree at most `n`, graded.
pub fn up_to(m: usize, n: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 0..=n {
        out.extend(exactly(m, d));
    }
    out
}

pub fn exactly(m: usize, d: u32) -> Vec<MultiIndex> {
    if m == 0 {
        return if d == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in exactly(m - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn unit(m: usize, i: usize) -> MultiIndex {
    let mut k = vec![0; m];
    k[i] = 1;
    k
}

pub fn add(a: &[u32], b: &[u32]) -> MultiIndex {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a - b` if componentwise non-negative.
pub fn sub(a: &[u32], b: &[u32]) -> Option<MultiIndex> {
    a.iter().zip(b).map(|(x, y)| x.checked_sub(*y)).collect()
}

/// All `(a, b)` with `a + b = k`.
pub fn splits(k: &[u32]) -> Vec<(MultiIndex, MultiIndex)> {
    let mut out = vec![(Vec::new(), Vec::new())];
    for &ki in k {
        let mut next = Vec::with_capacity(out.len() * (ki as usize + 1));
        for (a, b) in &out {
            for x in 0..=ki {
                let mut a2 = a.clone();
                a2.push(x);
                let mut b2 = b.clone();
                b2.push(ki - x);
                next.push((a2, b2));
            }
        }
        out = next;
    }
    out
}

pub fn factorial(k: &[u32]) -> BigInt {
    k.iter().fold(BigInt::one(), |acc, &x| acc * (1..=x).fold(BigInt::one(), |f, i| f * BigInt::from(i)))
}

/// `(a+b)! / (a! b!)` componentwise.
pub fn binomial(a: &[u32], b: &[u32]) -> BigInt {
    factorial(&add(a, b)) / (factorial(a) * factorial(b))
}

pub fn inv_factorial(k: &[u32]) -> Rational {
    Rational::new(BigInt::one(), factorial(k))
}
