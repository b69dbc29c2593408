use std::fmt;

use crate::arith::{ArithError, CoeffSpec, Matrix, Scalar};

/// Dense univariate polynomial, coefficients from low to high degree, no
/// trailing zeros.
#[derive(Clone, PartialEq)]
pub struct UniPoly {
    spec: CoeffSpec,
    coeffs: Vec<Scalar>,
}

impl UniPoly {
    pub fn new(spec: CoeffSpec, mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        UniPoly { spec, coeffs }
    }

    pub fn from_ints(spec: CoeffSpec, coeffs: &[i64]) -> Self {
        Self::new(spec, coeffs.iter().map(|&c| spec.int(c)).collect())
    }

    pub fn zero(spec: CoeffSpec) -> Self {
        UniPoly { spec, coeffs: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        let spec = c.spec();
        Self::new(spec, vec![c])
    }

    pub fn monomial(c: Scalar, deg: usize) -> Self {
        let spec = c.spec();
        let mut coeffs = vec![spec.zero(); deg];
        coeffs.push(c);
        Self::new(spec, coeffs)
    }

    pub fn spec(&self) -> CoeffSpec {
        self.spec
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.spec.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    pub fn add(&self, o: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new(self.spec, (0..n).map(|i| &self.coeff(i) + &o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new(self.spec, (0..n).map(|i| &self.coeff(i) - &o.coeff(i)).collect())
    }

    pub fn scale(&self, c: &Scalar) -> UniPoly {
        Self::new(self.spec, self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &UniPoly) -> UniPoly {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.spec);
        }
        let mut out = vec![self.spec.zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Self::new(self.spec, out)
    }

    pub fn pow(&self, k: usize) -> UniPoly {
        let mut acc = UniPoly::constant(self.spec.one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        Self::new(self.spec, self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c.scale_int(i as i64)).collect())
    }

    /// Quotient and remainder; the divisor's leading coefficient must be invertible.
    pub fn divrem(&self, d: &UniPoly) -> Result<(UniPoly, UniPoly), ArithError> {
        let dd = d.degree().ok_or(ArithError::DivisionByZero)?;
        let lead_inv = d.leading().unwrap().try_inv()?;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![self.spec.zero(); rem.len().saturating_sub(dd)];
        while rem.len() > dd {
            let top = rem.len() - 1;
            let c = &rem[top] * &lead_inv;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    let idx = top - dd + j;
                    rem[idx] = &rem[idx] - &(&c * dc);
                }
            }
            quot[top - dd] = c;
            rem.pop();
        }
        Ok((Self::new(self.spec, quot), Self::new(self.spec, rem)))
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = self.spec.zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// `Res(f, f')` via the Sylvester matrix.
    pub fn discriminant_resultant(&self) -> Result<Scalar, ArithError> {
        let d = self.derivative();
        let (m, n) = match (self.degree(), d.degree()) {
            (Some(m), Some(n)) => (m, n),
            _ => return Ok(self.spec.zero()),
        };
        let size = m + n;
        let mut s = Matrix::zeros(size, size, &self.spec.zero());
        for r in 0..n {
            for (j, c) in self.coeffs.iter().rev().enumerate() {
                s.set(r, r + j, c.clone());
            }
        }
        for r in 0..m {
            for (j, c) in d.coeffs.iter().rev().enumerate() {
                s.set(n + r, r + j, c.clone());
            }
        }
        s.determinant()
    }
}

impl fmt::Debug for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})*x")?,
                _ => write!(f, "({c})*x^{i}")?,
            }
        }
        Ok(())
    }
}
