use std::fmt;
use std::sync::Arc;

use crate::arith::Scalar;

use super::certificate::Certificate;
use super::presentation::{render_terms, terms_add, terms_neg, terms_scale, Key, Presentation, Terms};
use super::DagError;

/// Degree bound meaning "keep everything".
pub const UNBOUNDED: usize = usize::MAX;

/// The finite surrogate for a dagger element: normal-form coefficients up to a
/// degree bound, plus an overconvergence certificate.
#[derive(Clone)]
pub struct FringeElement {
    pres: Arc<Presentation>,
    terms: Terms,
    cert: Certificate,
    bound: usize,
    tail_dropped: bool,
}

/// Every truncation knob a computation may need.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationLevel {
    pub degree: usize,
    pub precision: i64,
    pub fringe: u32,
    pub jet_order: usize,
    pub depth: usize,
}

impl TruncationLevel {
    pub fn new(degree: usize, precision: i64, fringe: u32, jet_order: usize, depth: usize) -> Result<Self, DagError> {
        if degree == 0 || precision <= 0 || fringe == 0 || jet_order == 0 || depth == 0 {
            return Err(DagError::InvalidExpression("truncation parameters must all be positive".into()));
        }
        Ok(TruncationLevel { degree, precision, fringe, jet_order, depth })
    }

    pub fn with_degree(self, degree: usize) -> Self {
        TruncationLevel { degree, ..self }
    }
}

impl Default for TruncationLevel {
    fn default() -> Self {
        TruncationLevel { degree: 16, precision: 20, fringe: 8, jet_order: 3, depth: 1 }
    }
}

fn same(a: &Arc<Presentation>, b: &Arc<Presentation>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn ceil_log(p: u32, d: i64) -> i64 {
    let mut k = 0;
    let mut acc: i64 = 1;
    while acc < d {
        acc = acc.saturating_mul(p as i64);
        k += 1;
    }
    k
}

impl FringeElement {
    fn assemble(
        pres: &Arc<Presentation>,
        terms: Terms,
        claim: Option<Certificate>,
        bound: usize,
        dropped: bool,
    ) -> Self {
        let (terms, cut) = truncate(pres, terms, bound);
        let cert = match claim {
            Some(c) => Certificate::verified(c, pres, &terms),
            None => Certificate::tightest(pres, &terms),
        };
        FringeElement { pres: pres.clone(), terms, cert, bound, tail_dropped: dropped || cut }
    }

    pub fn zero(pres: &Arc<Presentation>) -> Self {
        Self::assemble(pres, Terms::new(), None, UNBOUNDED, false)
    }

    pub fn one(pres: &Arc<Presentation>) -> Self {
        Self::constant(pres, pres.spec().one())
    }

    pub fn constant(pres: &Arc<Presentation>, c: Scalar) -> Self {
        let mut t = Terms::new();
        if !c.is_zero() {
            t.insert(pres.one_key(), c);
        }
        Self::assemble(pres, t, None, UNBOUNDED, false)
    }

    /// `c` times the normal-form monomial `key`.
    pub fn monomial(pres: &Arc<Presentation>, key: Key, c: Scalar) -> Result<Self, DagError> {
        let mut t = Terms::new();
        if !c.is_zero() {
            t.insert(key, c);
        }
        Self::from_terms(pres, t)
    }

    /// Wrap a table already in normal form.
    pub fn from_terms(pres: &Arc<Presentation>, terms: Terms) -> Result<Self, DagError> {
        pres.check_terms(&terms)?;
        let terms = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(Self::assemble(pres, terms, None, UNBOUNDED, false))
    }

    pub(crate) fn from_terms_unchecked(pres: &Arc<Presentation>, terms: Terms) -> Self {
        Self::assemble(pres, terms, None, UNBOUNDED, false)
    }

    /// Rewrite a raw expression into normal form and certify it.
    pub fn normal_form(raw: &[(Key, Scalar)], pres: &Arc<Presentation>) -> Result<Self, DagError> {
        let terms = pres.normalize_raw(raw)?;
        let e = Self::assemble(pres, terms, None, UNBOUNDED, false);
        if let Some(cap) = pres.offset_cap() {
            if e.cert.offset > cap {
                return Err(DagError::CertificateViolation { offset: e.cert.offset, cap, levels: pres.fringe_cap() });
            }
        }
        Ok(e)
    }

    /// Re-normalize this element's own table (a no-op on valid elements).
    pub fn renormalize(&self) -> Result<Self, DagError> {
        let raw: Vec<(Key, Scalar)> = self.terms.iter().map(|(k, c)| (k.clone(), c.clone())).collect();
        Ok(Self::normal_form(&raw, &self.pres)?.with_degree_bound(self.bound))
    }

    pub fn coordinate(pres: &Arc<Presentation>, i: usize) -> Self {
        Self::from_terms_unchecked(pres, pres.coordinate_terms(i))
    }

    pub fn cover_variable(pres: &Arc<Presentation>) -> Option<Self> {
        pres.cover_variable().map(|t| Self::from_terms_unchecked(pres, t))
    }

    pub fn with_degree_bound(&self, bound: usize) -> Self {
        let bound = bound.min(self.bound);
        Self::assemble(&self.pres, self.terms.clone(), Some(self.cert), bound, self.tail_dropped)
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.pres
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    pub fn into_terms(self) -> Terms {
        self.terms
    }

    pub fn coeff(&self, key: &[i64]) -> Scalar {
        self.terms.get(key).cloned().unwrap_or_else(|| self.pres.spec().zero())
    }

    pub fn certificate(&self) -> Certificate {
        self.cert
    }

    pub fn degree_bound(&self) -> usize {
        self.bound
    }

    pub fn tail_dropped(&self) -> bool {
        self.tail_dropped
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&self.pres.one_key()).is_some_and(Scalar::is_one)
    }

    /// Largest key size present, `None` for zero.
    pub fn max_size(&self) -> Option<i64> {
        self.terms.keys().map(|k| self.pres.key_size(k)).max()
    }

    /// The constant coefficient, if the element is constant.
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(self.pres.spec().zero()),
            1 => self.terms.get(&self.pres.one_key()).cloned(),
            _ => None,
        }
    }

    pub fn precision_loss(&self) -> i64 {
        self.terms.values().map(Scalar::precision_loss).max().unwrap_or(0)
    }

    fn check(&self, o: &Self) {
        assert!(same(&self.pres, &o.pres), "{}", DagError::PresentationMismatch);
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        let claim = Certificate::new(self.cert.level.max(o.cert.level), self.cert.offset.max(o.cert.offset));
        Self::assemble(
            &self.pres,
            terms_add(&self.terms, &o.terms),
            Some(claim),
            self.bound.min(o.bound),
            self.tail_dropped || o.tail_dropped,
        )
    }

    pub fn neg(&self) -> Self {
        FringeElement { terms: terms_neg(&self.terms), ..self.clone() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let claim = Certificate::new(self.cert.level, self.cert.offset - c.valuation().unwrap_or(0));
        Self::assemble(&self.pres, terms_scale(&self.terms, c), Some(claim), self.bound, self.tail_dropped)
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        let claim = Certificate::new(self.cert.level.max(o.cert.level), self.cert.offset + o.cert.offset);
        Self::assemble(
            &self.pres,
            self.pres.mul_terms(&self.terms, &o.terms),
            Some(claim),
            self.bound.min(o.bound),
            self.tail_dropped || o.tail_dropped,
        )
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(&self.pres).with_degree_bound(self.bound);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn inverse(&self) -> Result<Self, DagError> {
        let t = self.pres.inverse_terms(&self.terms)?;
        Ok(Self::assemble(&self.pres, t, None, self.bound, self.tail_dropped))
    }

    pub fn partial_derivative(&self, i: usize) -> Self {
        let d = self.max_size().unwrap_or(1).max(1);
        let slack = self.pres.spec().prime().map_or(0, |p| ceil_log(p, d));
        let claim = Certificate::new(self.cert.level, self.cert.offset + slack);
        Self::assemble(&self.pres, self.pres.deriv_terms(&self.terms, i), Some(claim), self.bound, self.tail_dropped)
    }

    pub fn render(&self) -> String {
        render_terms(&self.pres, &self.terms)
    }
}

fn truncate(pres: &Presentation, terms: Terms, bound: usize) -> (Terms, bool) {
    if bound == UNBOUNDED {
        return (terms, false);
    }
    let before = terms.len();
    let kept: Terms = terms.into_iter().filter(|(k, _)| pres.key_size(k) <= bound as i64).collect();
    let cut = kept.len() != before;
    (kept, cut)
}

impl PartialEq for FringeElement {
    fn eq(&self, o: &Self) -> bool {
        same(&self.pres, &o.pres) && self.terms == o.terms
    }
}

impl fmt::Debug for FringeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.render(), self.cert)?;
        if self.tail_dropped {
            write!(f, " +tail")?;
        }
        Ok(())
    }
}

impl fmt::Display for FringeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}
