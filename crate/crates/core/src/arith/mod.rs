//! Exact coefficient arithmetic: rationals, capped p-adics and linear algebra over both.

mod linalg;
mod padic;
mod scalar;
mod sparse;

pub use linalg::{solve_linear, LinearSolution, Matrix};
pub use padic::PAdic;
pub use scalar::{CoeffSpec, Scalar};
pub use sparse::{Echelon, Inserted, SparseVec};

use std::fmt;

use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("precision exhausted: {context}")]
    PrecisionExhausted { context: String },
    #[error("coefficient kinds do not match")]
    KindMismatch,
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// The field operations the linear-algebra kernels need.
///
/// `zero_like`/`one_like` exist because a p-adic zero has to know its prime and cap.
pub trait Field: Clone + PartialEq + fmt::Debug {
    fn is_zero(&self) -> bool;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add_ref(&self, o: &Self) -> Self;
    fn sub_ref(&self, o: &Self) -> Self;
    fn mul_ref(&self, o: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn div_ref(&self, o: &Self) -> Result<Self, ArithError>;
    /// `None` on zero. Rationals use the trivial valuation.
    fn valuation(&self) -> Option<i64>;
    /// Absolute precision, `None` when exact.
    fn abs_precision(&self) -> Option<i64> {
        None
    }
    fn precision_loss(&self) -> i64 {
        0
    }
}

impl Field for Rational {
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        num_traits::Zero::zero()
    }
    fn one_like(&self) -> Self {
        num_traits::One::one()
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn div_ref(&self, o: &Self) -> Result<Self, ArithError> {
        if Field::is_zero(o) {
            Err(ArithError::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }
    fn valuation(&self) -> Option<i64> {
        (!Field::is_zero(self)).then_some(0)
    }
}

impl Field for PAdic {
    fn is_zero(&self) -> bool {
        PAdic::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        PAdic::zero(self.prime(), self.cap())
    }
    fn one_like(&self) -> Self {
        PAdic::one(self.prime(), self.cap())
    }
    fn add_ref(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn neg_ref(&self) -> Self {
        self.neg()
    }
    fn div_ref(&self, o: &Self) -> Result<Self, ArithError> {
        self.div(o)
    }
    fn valuation(&self) -> Option<i64> {
        PAdic::valuation(self)
    }
    fn abs_precision(&self) -> Option<i64> {
        Some(self.precision())
    }
    fn precision_loss(&self) -> i64 {
        PAdic::precision_loss(self)
    }
}

impl Field for Scalar {
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        Scalar::zero_like(self)
    }
    fn one_like(&self) -> Self {
        Scalar::one_like(self)
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn div_ref(&self, o: &Self) -> Result<Self, ArithError> {
        self.try_div(o)
    }
    fn valuation(&self) -> Option<i64> {
        Scalar::valuation(self)
    }
    fn abs_precision(&self) -> Option<i64> {
        match self {
            Scalar::Q(_) => None,
            Scalar::P(x) => Some(x.precision()),
        }
    }
    fn precision_loss(&self) -> i64 {
        Scalar::precision_loss(self)
    }
}

/// Shorthand used throughout the tests and constructors.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `valuation(x)` with the infinity marker spelled out.
pub fn valuation(x: &PAdic) -> Option<i64> {
    x.valuation()
}
