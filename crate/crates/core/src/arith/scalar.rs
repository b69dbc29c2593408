use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{ArithError, PAdic, Rational};

/// Which coefficient field a computation runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoeffSpec {
    Rational,
    PAdic { p: u32, precision: i64 },
}

impl CoeffSpec {
    pub fn padic(p: u32, precision: i64) -> Self {
        CoeffSpec::PAdic { p, precision }
    }

    pub fn zero(&self) -> Scalar {
        match *self {
            CoeffSpec::Rational => Scalar::Q(Rational::zero()),
            CoeffSpec::PAdic { p, precision } => Scalar::P(PAdic::zero(p, precision)),
        }
    }

    pub fn one(&self) -> Scalar {
        self.int(1)
    }

    pub fn int(&self, n: i64) -> Scalar {
        match *self {
            CoeffSpec::Rational => Scalar::Q(Rational::from_integer(BigInt::from(n))),
            CoeffSpec::PAdic { p, precision } => Scalar::P(PAdic::from_int(n, p, precision)),
        }
    }

    pub fn ratio(&self, n: i64, d: i64) -> Scalar {
        self.rational(&Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn rational(&self, r: &Rational) -> Scalar {
        match *self {
            CoeffSpec::Rational => Scalar::Q(r.clone()),
            CoeffSpec::PAdic { p, precision } => Scalar::P(PAdic::from_rational(r, p, precision)),
        }
    }

    /// `unit * p^val`; over the rationals the prime must be supplied by the caller's context,
    /// so this is only meaningful for p-adic specs.
    pub fn with_valuation(&self, unit: &Rational, val: i64) -> Result<Scalar, ArithError> {
        match *self {
            CoeffSpec::Rational => Err(ArithError::KindMismatch),
            CoeffSpec::PAdic { p, precision } => {
                let pp = Rational::from_integer(BigInt::from(p));
                let factor = if val >= 0 {
                    num_traits::pow(pp, val as usize)
                } else {
                    Rational::one() / num_traits::pow(pp, (-val) as usize)
                };
                Ok(Scalar::P(PAdic::from_rational(&(unit * factor), p, precision)))
            }
        }
    }

    pub fn prime(&self) -> Option<u32> {
        match *self {
            CoeffSpec::Rational => None,
            CoeffSpec::PAdic { p, .. } => Some(p),
        }
    }

    pub fn precision(&self) -> Option<i64> {
        match *self {
            CoeffSpec::Rational => None,
            CoeffSpec::PAdic { precision, .. } => Some(precision),
        }
    }

    /// Whether a scalar belongs to this field.
    pub fn admits(&self, s: &Scalar) -> bool {
        match (self, s) {
            (CoeffSpec::Rational, Scalar::Q(_)) => true,
            (CoeffSpec::PAdic { p, .. }, Scalar::P(x)) => x.prime() == *p,
            _ => false,
        }
    }
}

impl fmt::Display for CoeffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffSpec::Rational => write!(f, "rational"),
            CoeffSpec::PAdic { p, precision } => write!(f, "padic {} {}", p, precision),
        }
    }
}

/// A coefficient: exact rational or capped p-adic. All scalars meeting in one
/// operation must come from the same [`CoeffSpec`].
#[derive(Clone, PartialEq)]
pub enum Scalar {
    Q(Rational),
    P(PAdic),
}

impl Scalar {
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Q(r) => r.is_zero(),
            Scalar::P(x) => x.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Q(r) => r.is_one(),
            Scalar::P(x) => x.valuation() == Some(0) && x.balanced_unit().is_one(),
        }
    }

    pub fn zero_like(&self) -> Scalar {
        match self {
            Scalar::Q(_) => Scalar::Q(Rational::zero()),
            Scalar::P(x) => Scalar::P(PAdic::zero(x.prime(), x.cap())),
        }
    }

    pub fn one_like(&self) -> Scalar {
        self.int_like(1)
    }

    pub fn int_like(&self, n: i64) -> Scalar {
        match self {
            Scalar::Q(_) => Scalar::Q(Rational::from_integer(BigInt::from(n))),
            Scalar::P(x) => Scalar::P(PAdic::from_int(n, x.prime(), x.cap())),
        }
    }

    pub fn rational_like(&self, r: &Rational) -> Scalar {
        match self {
            Scalar::Q(_) => Scalar::Q(r.clone()),
            Scalar::P(x) => Scalar::P(PAdic::from_rational(r, x.prime(), x.cap())),
        }
    }

    pub fn spec(&self) -> CoeffSpec {
        match self {
            Scalar::Q(_) => CoeffSpec::Rational,
            Scalar::P(x) => CoeffSpec::PAdic { p: x.prime(), precision: x.cap() },
        }
    }

    /// p-adic valuation; the trivial valuation (0 on nonzero elements) over the rationals.
    pub fn valuation(&self) -> Option<i64> {
        match self {
            Scalar::Q(r) => (!r.is_zero()).then_some(0),
            Scalar::P(x) => x.valuation(),
        }
    }

    pub fn precision_loss(&self) -> i64 {
        match self {
            Scalar::Q(_) => 0,
            Scalar::P(x) => x.precision_loss(),
        }
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Scalar, ArithError> {
        match (self, other) {
            (Scalar::Q(a), Scalar::Q(b)) => {
                if b.is_zero() {
                    Err(ArithError::DivisionByZero)
                } else {
                    Ok(Scalar::Q(a / b))
                }
            }
            (Scalar::P(a), Scalar::P(b)) => a.div(b).map(Scalar::P),
            _ => Err(ArithError::KindMismatch),
        }
    }

    pub fn try_inv(&self) -> Result<Scalar, ArithError> {
        self.one_like().try_div(self)
    }

    pub fn scale_int(&self, n: i64) -> Scalar {
        self * &self.int_like(n)
    }

    /// Best-effort rational value (exact for `Q`, digits as stored for `P`).
    pub fn to_rational(&self) -> Rational {
        match self {
            Scalar::Q(r) => r.clone(),
            Scalar::P(x) => x.to_rational(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Q(r) => r.is_negative(),
            Scalar::P(x) => x.is_negative_balanced(),
        }
    }
}

fn mismatch() -> ! {
    panic!("scalar kinds mixed in one operation")
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a + b),
            (Scalar::P(a), Scalar::P(b)) => Scalar::P(a.add(b)),
            _ => mismatch(),
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a - b),
            (Scalar::P(a), Scalar::P(b)) => Scalar::P(a.sub(b)),
            _ => mismatch(),
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a * b),
            (Scalar::P(a), Scalar::P(b)) => Scalar::P(a.mul(b)),
            _ => mismatch(),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Q(a) => Scalar::Q(-a),
            Scalar::P(a) => Scalar::P(a.neg()),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Q(r) => write!(f, "{}", r),
            Scalar::P(x) => write!(f, "{}", x),
        }
    }
}
