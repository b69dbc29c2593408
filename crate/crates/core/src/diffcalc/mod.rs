//! Integrable connections, Taylor stratifications and divided-power operators.
//!
//! Conventions: sections are column vectors, `∇_i s = ∂_i s + N_i s`, and the
//! Taylor matrix is `ε(x, ξ) = Σ_k (1/k!) ∇^k(Id) ξ^k`, so that
//! `ε(s) = ε(x, ξ) · s(x + ξ)`.

mod matrix;
pub mod multiindex;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::arith::{ArithError, Rational, Scalar};
use crate::dagalg::{DagError, FringeElement, Presentation};

pub use matrix::ElemMatrix;
pub use multiindex::MultiIndex;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DiffError {
    #[error("differential operator of order {order} exceeds jet order {jet}")]
    OrderExceedsJet { order: u32, jet: u32 },
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A finite free module `A^r` with `∇ = d + Σ N_i dx_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pres: Arc<Presentation>,
    rank: usize,
    mats: Vec<ElemMatrix>,
}

impl Connection {
    pub fn new(pres: &Arc<Presentation>, mats: Vec<ElemMatrix>) -> Result<Self, DiffError> {
        if mats.len() != pres.dim() {
            return Err(DiffError::Shape(format!("{} matrices for {} coordinates", mats.len(), pres.dim())));
        }
        let rank = mats.first().map_or(0, ElemMatrix::rows);
        for m in &mats {
            if m.rows() != rank || m.cols() != rank {
                return Err(DiffError::Shape(format!("expected {rank}x{rank}, got {}x{}", m.rows(), m.cols())));
            }
            if **m.presentation() != **pres {
                return Err(DagError::PresentationMismatch.into());
            }
        }
        Ok(Connection { pres: pres.clone(), rank, mats })
    }

    pub fn trivial(pres: &Arc<Presentation>, rank: usize) -> Self {
        Connection { pres: pres.clone(), rank, mats: vec![ElemMatrix::zeros(pres, rank, rank); pres.dim()] }
    }

    /// `d + a dx/x` on a one-dimensional presentation where `x` is a unit.
    pub fn kummer(pres: &Arc<Presentation>, a: Scalar) -> Result<Self, DiffError> {
        if pres.dim() != 1 {
            return Err(DiffError::Shape("Kummer connections live on curves".into()));
        }
        let xinv = FringeElement::coordinate(pres, 0).inverse()?;
        Self::new(pres, vec![ElemMatrix::from_rows(pres, vec![vec![xinv.scale(&a)]])])
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.pres
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self, i: usize) -> &ElemMatrix {
        &self.mats[i]
    }

    pub fn matrices(&self) -> &[ElemMatrix] {
        &self.mats
    }

    pub fn is_trivial(&self) -> bool {
        self.mats.iter().all(ElemMatrix::is_zero)
    }

    /// `∇_i` applied to a section.
    pub fn apply(&self, i: usize, s: &[FringeElement]) -> Vec<FringeElement> {
        let ns = self.mats[i].mul_vec(s);
        s.iter().zip(ns).map(|(a, b)| a.partial_derivative(i).add(&b)).collect()
    }

    /// `∇_i` applied column by column.
    pub fn apply_matrix(&self, i: usize, m: &ElemMatrix) -> ElemMatrix {
        m.derivative(i).add(&self.mats[i].mul(m))
    }

    /// `K_ij = ∂_i N_j - ∂_j N_i + N_i N_j - N_j N_i` for `i < j`.
    pub fn curvature(&self) -> Vec<((usize, usize), ElemMatrix)> {
        let n = self.mats.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (ni, nj) = (&self.mats[i], &self.mats[j]);
                let k = nj.derivative(i).sub(&ni.derivative(j)).add(&ni.mul(nj)).sub(&nj.mul(ni));
                out.push(((i, j), k));
            }
        }
        out
    }

    pub fn is_integrable(&self) -> bool {
        self.curvature().iter().all(|(_, k)| k.is_zero())
    }

    pub fn direct_sum(&self, o: &Connection) -> Connection {
        let mats = self.mats.iter().zip(&o.mats).map(|(a, b)| a.direct_sum(b)).collect();
        Connection { pres: self.pres.clone(), rank: self.rank + o.rank, mats }
    }

    /// Gauge transform by an invertible matrix `g`: the connection on the same
    /// module in the basis given by the columns of `g`, `g^{-1} ∂g + g^{-1} N g`.
    pub fn gauge(&self, g: &ElemMatrix, g_inv: &ElemMatrix) -> Connection {
        let mats = (0..self.mats.len()).map(|i| g_inv.mul(&self.apply_matrix(i, g))).collect();
        Connection { pres: self.pres.clone(), rank: self.rank, mats }
    }
}

/// Jet-order-`n` Taylor data: `E_k` for every multi-index `|k| <= n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratification {
    pres: Arc<Presentation>,
    rank: usize,
    order: u32,
    coeffs: BTreeMap<MultiIndex, ElemMatrix>,
}

impl Stratification {
    /// Missing multi-indices are zero. The constant term must be the identity.
    pub fn new(
        pres: &Arc<Presentation>,
        rank: usize,
        order: u32,
        coeffs: BTreeMap<MultiIndex, ElemMatrix>,
    ) -> Result<Self, DiffError> {
        let m = pres.dim();
        let zero = vec![0; m];
        match coeffs.get(&zero) {
            Some(e0) if e0.is_identity() && e0.rows() == rank => {}
            _ => return Err(DiffError::Shape("constant Taylor term must be the identity".into())),
        }
        for (k, e) in &coeffs {
            if k.len() != m || multiindex::total(k) > order || e.rows() != rank || e.cols() != rank {
                return Err(DiffError::Shape(format!("bad Taylor coefficient at {k:?}")));
            }
        }
        let coeffs = coeffs.into_iter().filter(|(_, e)| !e.is_zero()).collect();
        Ok(Stratification { pres: pres.clone(), rank, order, coeffs })
    }

    pub fn identity(pres: &Arc<Presentation>, rank: usize, order: u32) -> Self {
        let coeffs = BTreeMap::from([(vec![0; pres.dim()], ElemMatrix::identity(pres, rank))]);
        Stratification { pres: pres.clone(), rank, order, coeffs }
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.pres
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.pres.dim()
    }

    /// `E_k`, the `ξ^k` coefficient.
    pub fn coeff(&self, k: &[u32]) -> ElemMatrix {
        self.coeffs.get(k).cloned().unwrap_or_else(|| ElemMatrix::zeros(&self.pres, self.rank, self.rank))
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, ElemMatrix> {
        &self.coeffs
    }

    pub fn truncate(&self, order: u32) -> Stratification {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| multiindex::total(k) <= order)
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Stratification { order: order.min(self.order), coeffs, ..self.clone() }
    }
}

fn scalar_of(pres: &Presentation, r: &Rational) -> Scalar {
    pres.spec().rational(r)
}

/// `∂^{[k]} f = ∂^k f / k!`.
pub fn divided_derivative(f: &FringeElement, k: &[u32]) -> FringeElement {
    let mut g = f.clone();
    for (i, &ki) in k.iter().enumerate() {
        for _ in 0..ki {
            if g.is_zero() {
                return g;
            }
            g = g.partial_derivative(i);
        }
    }
    g.scale(&scalar_of(f.presentation(), &multiindex::inv_factorial(k)))
}

pub fn divided_derivative_matrix(m: &ElemMatrix, k: &[u32]) -> ElemMatrix {
    m.map(|a| divided_derivative(a, k))
}

fn check_factorial_precision(pres: &Presentation, n: u32) -> Result<(), DiffError> {
    if let (Some(p), Some(prec)) = (pres.spec().prime(), pres.spec().precision()) {
        let mut v = 0i64;
        let mut q = p as i64;
        while q <= n as i64 {
            v += n as i64 / q;
            q *= p as i64;
        }
        if v >= prec {
            return Err(ArithError::PrecisionExhausted {
                context: format!("dividing by {n}! loses {v} digits of {prec}"),
            }
            .into());
        }
    }
    Ok(())
}

pub fn curvature(c: &Connection) -> Vec<((usize, usize), ElemMatrix)> {
    c.curvature()
}

/// `E_k = (1/k!) ∇_1^{k_1} ∘ ... ∘ ∇_m^{k_m} (Id)` for `|k| <= n`.
pub fn taylor_stratification(c: &Connection, n: u32) -> Result<Stratification, DiffError> {
    check_factorial_precision(&c.pres, n)?;
    let m = c.pres.dim();
    let mut raw: BTreeMap<MultiIndex, ElemMatrix> = BTreeMap::new();
    for k in multiindex::up_to(m, n) {
        let g = match k.iter().position(|&x| x > 0) {
            None => ElemMatrix::identity(&c.pres, c.rank),
            Some(i) => {
                let mut prev = k.clone();
                prev[i] -= 1;
                c.apply_matrix(i, &raw[&prev])
            }
        };
        raw.insert(k, g);
    }
    let coeffs = raw
        .into_iter()
        .map(|(k, g)| {
            let s = scalar_of(&c.pres, &multiindex::inv_factorial(&k));
            (k, g.scale(&s))
        })
        .collect();
    Stratification::new(&c.pres, c.rank, n, coeffs)
}

/// `N_i = E_{e_i}`, the linear Taylor terms.
pub fn connection_from_stratification(e: &Stratification) -> Result<Connection, DiffError> {
    if e.order < 1 {
        return Err(DiffError::Shape("jet order must be at least 1".into()));
    }
    let m = e.dim();
    let mats = (0..m).map(|i| e.coeff(&multiindex::unit(m, i))).collect();
    Connection::new(&e.pres, mats)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CocycleReport {
    pub checked_through: u32,
    /// Lowest total degree in `(ξ', ξ'')` at which the identity fails.
    pub first_failure: Option<u32>,
}

impl CocycleReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Checks `ε(ξ' + ξ'') = ε(ξ') · τ_{ξ'}(ε)(ξ'')` in `A[ξ', ξ'']/(ξ', ξ'')^{n+1}`,
/// where `τ_{ξ'}` Taylor-translates matrix entries by `ξ'`.
pub fn cocycle_check(e: &Stratification) -> CocycleReport {
    let m = e.dim();
    let n = e.order;
    let mut translated: BTreeMap<(MultiIndex, MultiIndex), ElemMatrix> = BTreeMap::new();
    for total in 0..=n {
        for a in multiindex::up_to(m, total) {
            let b_total = total - multiindex::total(&a);
            for b in multiindex::exactly(m, b_total) {
                let lhs = e
                    .coeff(&multiindex::add(&a, &b))
                    .scale(&scalar_of(&e.pres, &Rational::from_integer(multiindex::binomial(&a, &b))));
                let mut rhs = ElemMatrix::zeros(&e.pres, e.rank, e.rank);
                for (c, l) in multiindex::splits(&a) {
                    let ec = e.coeff(&c);
                    if ec.is_zero() {
                        continue;
                    }
                    let tb = translated
                        .entry((l.clone(), b.clone()))
                        .or_insert_with(|| divided_derivative_matrix(&e.coeff(&b), &l))
                        .clone();
                    rhs = rhs.add(&ec.mul(&tb));
                }
                if lhs != rhs {
                    return CocycleReport { checked_through: n, first_failure: Some(total) };
                }
            }
        }
    }
    CocycleReport { checked_through: n, first_failure: None }
}

/// `Σ a_k ∂^{[k]}` with coefficients in the algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct DividedPowerOperator {
    pres: Arc<Presentation>,
    terms: BTreeMap<MultiIndex, FringeElement>,
}

impl DividedPowerOperator {
    pub fn new(pres: &Arc<Presentation>, terms: BTreeMap<MultiIndex, FringeElement>) -> Result<Self, DiffError> {
        for k in terms.keys() {
            if k.len() != pres.dim() {
                return Err(DiffError::Shape(format!("multi-index {k:?} for {} coordinates", pres.dim())));
            }
        }
        let terms = terms.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        Ok(DividedPowerOperator { pres: pres.clone(), terms })
    }

    pub fn identity(pres: &Arc<Presentation>) -> Self {
        Self::basis(pres, vec![0; pres.dim()])
    }

    /// `∂^{[k]}`.
    pub fn basis(pres: &Arc<Presentation>, k: MultiIndex) -> Self {
        DividedPowerOperator { pres: pres.clone(), terms: BTreeMap::from([(k, FringeElement::one(pres))]) }
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, FringeElement> {
        &self.terms
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|k| multiindex::total(k)).max().unwrap_or(0)
    }

    /// Left multiplication by an algebra element.
    pub fn left_mul(&self, a: &FringeElement) -> Self {
        let terms = self.terms.iter().map(|(k, c)| (k.clone(), a.mul(c))).filter(|(_, c)| !c.is_zero()).collect();
        DividedPowerOperator { pres: self.pres.clone(), terms }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (k, c) in &o.terms {
            let v = match terms.get(k) {
                Some(cur) => cur.add(c),
                None => c.clone(),
            };
            terms.insert(k.clone(), v);
        }
        terms.retain(|_, c| !c.is_zero());
        DividedPowerOperator { pres: self.pres.clone(), terms }
    }

    pub fn apply(&self, f: &FringeElement) -> FringeElement {
        self.terms
            .iter()
            .fold(FringeElement::zero(&self.pres), |acc, (k, a)| acc.add(&a.mul(&divided_derivative(f, k))))
    }
}

/// `D ∘ E` (apply `E` first).
pub fn compose_operators(d: &DividedPowerOperator, e: &DividedPowerOperator) -> DividedPowerOperator {
    let pres = &d.pres;
    let mut out: BTreeMap<MultiIndex, FringeElement> = BTreeMap::new();
    for (k, a) in &d.terms {
        for (l, b) in &e.terms {
            // ∂^{[k]} (b ∂^{[l]}) = Σ_{i+j=k} ∂^{[i]}(b) C(j+l, j) ∂^{[j+l]}
            for (i, j) in multiindex::splits(k) {
                let db = divided_derivative(b, &i);
                if db.is_zero() {
                    continue;
                }
                let c = pres.spec().rational(&Rational::from_integer(multiindex::binomial(&j, l)));
                let term = a.mul(&db).scale(&c);
                let key = multiindex::add(&j, l);
                let v = match out.get(&key) {
                    Some(cur) => cur.add(&term),
                    None => term,
                };
                out.insert(key, v);
            }
        }
    }
    out.retain(|_, c| !c.is_zero());
    DividedPowerOperator { pres: pres.clone(), terms: out }
}

/// `∇^{[k]}(s) = Σ_{a+l=k} E_a ∂^{[l]} s`.
pub fn divided_connection(e: &Stratification, k: &[u32], s: &[FringeElement]) -> Vec<FringeElement> {
    let mut out = vec![FringeElement::zero(&e.pres); s.len()];
    for (a, l) in multiindex::splits(k) {
        let ea = e.coeff(&a);
        if ea.is_zero() {
            continue;
        }
        let ds: Vec<FringeElement> = s.iter().map(|x| divided_derivative(x, &l)).collect();
        for (o, v) in out.iter_mut().zip(ea.mul_vec(&ds)) {
            *o = o.add(&v);
        }
    }
    out
}

/// The action of `Σ a_k ∂^{[k]}` on a section through the Taylor matrix.
pub fn operator_action(
    d: &DividedPowerOperator,
    s: &[FringeElement],
    e: &Stratification,
) -> Result<Vec<FringeElement>, DiffError> {
    if d.order() > e.order {
        return Err(DiffError::OrderExceedsJet { order: d.order(), jet: e.order });
    }
    if s.len() != e.rank {
        return Err(DiffError::Shape(format!("section of length {} for rank {}", s.len(), e.rank)));
    }
    let mut out = vec![FringeElement::zero(&e.pres); s.len()];
    for (k, a) in &d.terms {
        for (o, v) in out.iter_mut().zip(divided_connection(e, k, s)) {
            *o = o.add(&a.mul(&v));
        }
    }
    Ok(out)
}
