use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{ArithError, Rational};

/// A p-adic number known modulo `p^prec`, stored as `p^val * unit`.
///
/// The unit is reduced modulo `p^(prec - val)` and is coprime to `p`. A zero
/// unit is the "indistinguishable from zero" marker `O(p^prec)`, whose
/// valuation is reported as infinite. Absolute precision never exceeds the
/// ring cap, so multiplying by a positive power of `p` does not invent digits.
#[derive(Clone)]
pub struct PAdic {
    p: u32,
    cap: i64,
    prec: i64,
    val: i64,
    unit: BigInt,
}

pub(crate) fn pow_p(p: u32, k: i64) -> BigInt {
    debug_assert!(k >= 0);
    num_traits::pow(BigInt::from(p), k as usize)
}

fn strip_p(mut x: BigInt, p: u32) -> (BigInt, i64) {
    let pb = BigInt::from(p);
    let mut v = 0;
    if x.is_zero() {
        return (x, 0);
    }
    loop {
        let (q, r) = x.div_rem(&pb);
        if !r.is_zero() {
            return (x, v);
        }
        x = q;
        v += 1;
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.extended_gcd(m);
    debug_assert!(e.gcd.is_one(), "inverting a non-unit modulo p^k");
    e.x.mod_floor(m)
}

impl PAdic {
    pub fn zero(p: u32, cap: i64) -> Self {
        Self::zero_at(p, cap, cap)
    }

    fn zero_at(p: u32, cap: i64, prec: i64) -> Self {
        PAdic { p, cap, prec: prec.min(cap), val: 0, unit: BigInt::zero() }
    }

    pub fn one(p: u32, cap: i64) -> Self {
        Self::from_parts(p, cap, cap, 0, BigInt::one())
    }

    pub fn from_int(n: i64, p: u32, cap: i64) -> Self {
        Self::from_parts(p, cap, cap, 0, BigInt::from(n))
    }

    /// `p^val * raw` known to absolute precision `prec`; `raw` need not be a unit.
    pub(crate) fn from_parts(p: u32, cap: i64, prec: i64, val: i64, raw: BigInt) -> Self {
        let prec = prec.min(cap);
        if raw.is_zero() || val >= prec {
            return Self::zero_at(p, cap, prec);
        }
        let (raw, extra) = strip_p(raw, p);
        let val = val + extra;
        if val >= prec {
            return Self::zero_at(p, cap, prec);
        }
        let unit = raw.mod_floor(&pow_p(p, prec - val));
        PAdic { p, cap, prec, val, unit }
    }

    pub fn from_rational(r: &Rational, p: u32, cap: i64) -> Self {
        if r.is_zero() {
            return Self::zero(p, cap);
        }
        let (num, vn) = strip_p(r.numer().clone(), p);
        let (den, vd) = strip_p(r.denom().clone(), p);
        let val = vn - vd;
        if val >= cap {
            return Self::zero(p, cap);
        }
        let m = pow_p(p, cap - val);
        let unit = (num * mod_inverse(&den, &m)).mod_floor(&m);
        PAdic { p, cap, prec: cap, val, unit }
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    /// Absolute precision: the element is known modulo `p^precision()`.
    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// `None` is the infinity marker.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    pub fn unit_part(&self) -> &BigInt {
        &self.unit
    }

    /// Unit part as the representative of least absolute value.
    pub fn balanced_unit(&self) -> BigInt {
        if self.is_zero() {
            return BigInt::zero();
        }
        let m = pow_p(self.p, self.prec - self.val);
        if &self.unit * 2 > m {
            &self.unit - m
        } else {
            self.unit.clone()
        }
    }

    fn check_ring(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixing p-adic numbers over different primes");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_ring(other);
        let prec = self.prec.min(other.prec);
        let cap = self.cap.min(other.cap);
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero_at(self.p, cap, prec),
            (true, false) => Self::from_parts(self.p, cap, prec, other.val, other.unit.clone()),
            (false, true) => Self::from_parts(self.p, cap, prec, self.val, self.unit.clone()),
            (false, false) => {
                let v = self.val.min(other.val);
                let raw = &self.unit * pow_p(self.p, self.val - v) + &other.unit * pow_p(self.p, other.val - v);
                Self::from_parts(self.p, cap, prec, v, raw)
            }
        }
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let m = pow_p(self.p, self.prec - self.val);
        PAdic { unit: (m - &self.unit).mod_floor(&pow_p(self.p, self.prec - self.val)), ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_ring(other);
        let cap = self.cap.min(other.cap);
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero_at(self.p, cap, self.prec.max(0) + other.prec.max(0)),
            (true, false) => Self::zero_at(self.p, cap, self.prec + other.val),
            (false, true) => Self::zero_at(self.p, cap, other.prec + self.val),
            (false, false) => {
                let prec = (self.prec + other.val).min(other.prec + self.val);
                Self::from_parts(self.p, cap, prec, self.val + other.val, &self.unit * &other.unit)
            }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self, ArithError> {
        self.check_ring(other);
        if other.is_zero() {
            return Err(ArithError::PrecisionExhausted {
                context: format!("division by O({}^{})", self.p, other.prec),
            });
        }
        let cap = self.cap.min(other.cap);
        if self.is_zero() {
            return Ok(Self::zero_at(self.p, cap, self.prec - other.val));
        }
        let rel = (self.prec - self.val).min(other.prec - other.val);
        let m = pow_p(self.p, rel);
        let unit = (&self.unit * mod_inverse(&other.unit, &m)).mod_floor(&m);
        let val = self.val - other.val;
        Ok(Self::from_parts(self.p, cap, val + rel, val, unit))
    }

    /// Digits lost relative to the ring cap.
    pub fn precision_loss(&self) -> i64 {
        (self.cap - self.prec).max(0)
    }

    /// Re-anchor at a different cap (used when a ring is reinterpreted).
    pub fn with_cap(&self, cap: i64) -> Self {
        if self.is_zero() {
            return Self::zero_at(self.p, cap, self.prec.min(cap));
        }
        Self::from_parts(self.p, cap, self.prec, self.val, self.unit.clone())
    }
}

impl PartialEq for PAdic {
    /// Equality at the common precision.
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.sub(other).is_zero()
    }
}

impl fmt::Debug for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "O({}^{})", self.p, self.prec);
        }
        let u = match self.small_fraction() {
            Some((n, d)) if !d.is_one() => format!("{n}/{d}"),
            _ => self.balanced_unit().to_string(),
        };
        if self.val == 0 {
            write!(f, "{}", u)
        } else {
            write!(f, "{}@v{}", u, self.val)
        }
    }
}

impl PAdic {
    /// Exact rational value of the stored digits (the unit is taken balanced).
    pub fn to_rational(&self) -> Rational {
        if self.is_zero() {
            return Rational::zero();
        }
        let u = Rational::from_integer(self.balanced_unit());
        let pp = Rational::from_integer(BigInt::from(self.p));
        if self.val >= 0 {
            u * num_traits::pow(pp, self.val as usize)
        } else {
            u / num_traits::pow(pp, (-self.val) as usize)
        }
    }

    /// `n/d` with `|n|, |d| <= sqrt(m/2)` and `n ≡ d·unit mod m`, `m = p^(prec - val)`, when one exists.
    pub fn small_fraction(&self) -> Option<(BigInt, BigInt)> {
        if self.is_zero() {
            return None;
        }
        let m = pow_p(self.p, self.prec - self.val);
        let bound = (&m / BigInt::from(2)).sqrt();
        let (mut r0, mut r1) = (m.clone(), self.unit.clone());
        let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
        while r1 > bound {
            let q = &r0 / &r1;
            let r2 = &r0 - &q * &r1;
            let t2 = &t0 - &q * &t1;
            (r0, r1, t0, t1) = (r1, r2, t1, t2);
        }
        if t1.is_zero() || t1.abs() > bound || !r1.gcd(&t1).is_one() {
            return None;
        }
        let (n, d) = if t1.is_negative() { (-r1, -t1) } else { (r1, t1) };
        Some((n, d))
    }

    /// Sign of the displayed form.
    pub fn is_negative_balanced(&self) -> bool {
        match self.small_fraction() {
            Some((n, _)) => n.is_negative(),
            None => self.balanced_unit().is_negative(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(PAdic::from_int(50, 5, 10).valuation(), Some(2));
        assert_eq!(PAdic::from_int(0, 5, 10).valuation(), None);
        assert_eq!(PAdic::from_int(3, 5, 10).valuation(), Some(0));
    }

    #[test]
    fn beyond_precision_is_zero() {
        let x = PAdic::from_int(5i64.pow(10), 5, 10);
        assert!(x.is_zero());
        assert_eq!(x.precision(), 10);
    }

    #[test]
    fn rational_embedding_roundtrip() {
        let x = PAdic::from_rational(&q(-7, 3), 5, 12);
        let three = PAdic::from_int(3, 5, 12);
        assert_eq!(x.mul(&three), PAdic::from_int(-7, 5, 12));
        assert_eq!(x.to_rational(), PAdic::from_rational(&q(-7, 3), 5, 12).to_rational());
        let fifth = PAdic::from_rational(&q(2, 25), 5, 10);
        assert_eq!(fifth.valuation(), Some(-2));
        assert_eq!(fifth.to_rational(), q(2, 25));
    }

    #[test]
    fn division_by_p_loses_precision() {
        let x = PAdic::from_int(10, 5, 10);
        let y = PAdic::from_int(5, 5, 10);
        let z = x.div(&y).unwrap();
        assert_eq!(z, PAdic::from_int(2, 5, 10));
        assert_eq!(z.precision(), 9);
        assert_eq!(z.precision_loss(), 1);
        let w = PAdic::from_int(1, 5, 10).div(&y).unwrap();
        assert_eq!(w.valuation(), Some(-1));
        assert_eq!(w.precision(), 8);
    }

    #[test]
    fn division_by_zero_marker_is_precision_error() {
        let z = PAdic::zero(5, 10);
        assert!(matches!(PAdic::one(5, 10).div(&z), Err(ArithError::PrecisionExhausted { .. })));
    }

    #[test]
    fn cancellation_keeps_absolute_precision() {
        let a = PAdic::from_int(1 + 5i64.pow(3), 5, 10);
        let b = PAdic::one(5, 10);
        let d = a.sub(&b);
        assert_eq!(d.valuation(), Some(3));
        assert_eq!(d.precision(), 10);
    }

    #[test]
    fn display_forms() {
        assert_eq!(PAdic::from_int(-1, 5, 4).to_string(), "-1");
        assert_eq!(PAdic::from_int(50, 5, 4).to_string(), "2@v2");
        assert_eq!(PAdic::zero(5, 4).to_string(), "O(5^4)");
        assert_eq!(PAdic::from_rational(&q(1, 2), 5, 20).to_string(), "1/2");
        assert_eq!(PAdic::from_rational(&q(-3, 7), 5, 20).to_string(), "-3/7");
        assert_eq!(PAdic::from_rational(&q(2, 75), 5, 20).to_string(), "2/3@v-2");
    }
}
