//! Pullback along ring maps, finite pushforward along monic étale covers, and trace splitting.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::arith::{ArithError, CoeffSpec, Scalar};
use crate::dagalg::{DagError, FringeElement, Key, Presentation, PresentationKind, Terms};
use crate::diffcalc::{Connection, DiffError, ElemMatrix};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FunctorError {
    #[error("ring map does not respect relations: {0}")]
    RelationViolated(String),
    #[error("ring map has no finiteness witness")]
    NotFinite,
    #[error("cover is not étale: {0}")]
    NonEtale(String),
    #[error("group order {order} is not invertible in the coefficients")]
    GroupOrderNotInvertible { order: usize },
    #[error("not a group action: {0}")]
    NotAGroup(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Expresses elements of a finite free `B` in a fixed basis over `A`.
pub trait CoverCoords: fmt::Debug + Send + Sync {
    fn degree(&self) -> usize;
    /// The basis `β_0 = 1, β_1, …` as elements of `B`.
    fn basis(&self) -> Vec<FringeElement>;
    /// `b = Σ_k coords[k] β_k` with `coords[k]` in `A`.
    fn coords(&self, b: &FringeElement) -> Result<Vec<FringeElement>, FunctorError>;
}

/// `B = A[y]/m(y)` with basis `1, y, …, y^{k-1}`.
#[derive(Debug)]
pub struct MonicCoords {
    source: Arc<Presentation>,
    target: Arc<Presentation>,
}

impl CoverCoords for MonicCoords {
    fn degree(&self) -> usize {
        self.target.cover_degree()
    }

    fn basis(&self) -> Vec<FringeElement> {
        let y = FringeElement::cover_variable(&self.target).expect("cover");
        (0..self.degree()).map(|e| y.pow(e as u32)).collect()
    }

    fn coords(&self, b: &FringeElement) -> Result<Vec<FringeElement>, FunctorError> {
        self.target
            .cover_parts(b.terms())
            .into_iter()
            .map(|t| FringeElement::from_terms(&self.source, t).map_err(Into::into))
            .collect()
    }
}

/// `G_m -> G_m`, `x ↦ t^m`, with basis `1, t, …, t^{m-1}`.
#[derive(Debug)]
pub struct KummerCoords {
    m: i64,
    source: Arc<Presentation>,
    target: Arc<Presentation>,
}

impl CoverCoords for KummerCoords {
    fn degree(&self) -> usize {
        self.m as usize
    }

    fn basis(&self) -> Vec<FringeElement> {
        let one = self.target.spec().one();
        (0..self.m).map(|k| FringeElement::monomial(&self.target, vec![k], one.clone()).unwrap()).collect()
    }

    fn coords(&self, b: &FringeElement) -> Result<Vec<FringeElement>, FunctorError> {
        let mut parts = vec![Terms::new(); self.m as usize];
        for (k, c) in b.terms() {
            parts[k[0].rem_euclid(self.m) as usize].insert(vec![k[0].div_euclid(self.m)], c.clone());
        }
        parts.into_iter().map(|t| FringeElement::from_terms(&self.source, t).map_err(Into::into)).collect()
    }
}

/// A ring map `A -> B` given by the images of `A`'s generators.
#[derive(Clone, Debug)]
pub struct RingMap {
    source: Arc<Presentation>,
    target: Arc<Presentation>,
    images: Vec<FringeElement>,
    witness: Option<Arc<dyn CoverCoords>>,
}

fn spec_unit(spec: CoeffSpec, n: i64) -> bool {
    let c = spec.int(n);
    match spec {
        CoeffSpec::Rational => !c.is_zero(),
        CoeffSpec::PAdic { .. } => c.valuation() == Some(0),
    }
}

impl RingMap {
    /// Checks that the images satisfy the source's relations.
    pub fn new(
        source: &Arc<Presentation>,
        target: &Arc<Presentation>,
        images: Vec<FringeElement>,
    ) -> Result<Self, FunctorError> {
        let gens = source.generators();
        if images.len() != gens.len() {
            return Err(FunctorError::RelationViolated(format!(
                "{} images for {} generators",
                images.len(),
                gens.len()
            )));
        }
        if images.iter().any(|e| **e.presentation() != **target) {
            return Err(FunctorError::RelationViolated("image outside the target".into()));
        }
        let map = RingMap { source: source.clone(), target: target.clone(), images, witness: None };
        map.check_relations()?;
        Ok(map)
    }

    fn check_relations(&self) -> Result<(), FunctorError> {
        match self.source.kind() {
            PresentationKind::AffineSpace(_) => Ok(()),
            PresentationKind::Torus(_) => {
                for (i, e) in self.images.iter().enumerate() {
                    e.inverse()
                        .map_err(|_| FunctorError::RelationViolated(format!("image of x{} is not a unit", i + 1)))?;
                }
                Ok(())
            }
            PresentationKind::LocalizedLine(f) => {
                let fx = self.eval_poly(f.coeffs(), &self.images[0]);
                fx.inverse().map_err(|_| FunctorError::RelationViolated("f(image of x) is not a unit".into()))?;
                Ok(())
            }
            _ => {
                let base = self.source.cover_base().unwrap().clone();
                let n = self.images.len();
                let base_map = RingMap {
                    source: base.clone(),
                    target: self.target.clone(),
                    images: self.images[..n - 1].to_vec(),
                    witness: None,
                };
                base_map.check_relations()?;
                let y = &self.images[n - 1];
                let coeffs = self.source.cover_polynomial().unwrap();
                let mut val = y.pow(coeffs.len() as u32);
                for (j, c) in coeffs.iter().enumerate() {
                    let cj = base_map.apply(&FringeElement::from_terms(&base, c.clone())?)?;
                    val = val.add(&cj.mul(&y.pow(j as u32)));
                }
                if !val.is_zero() {
                    return Err(FunctorError::RelationViolated(format!("m(image of y) = {} ≠ 0", val.render())));
                }
                Ok(())
            }
        }
    }

    fn eval_poly(&self, coeffs: &[Scalar], x: &FringeElement) -> FringeElement {
        let mut acc = FringeElement::zero(&self.target);
        for c in coeffs.iter().rev() {
            acc = acc.mul(x).add(&FringeElement::constant(&self.target, c.clone()));
        }
        acc
    }

    /// `A ⊂ A[y]/m(y)`.
    pub fn cover_inclusion(cover: &Arc<Presentation>) -> Result<Self, FunctorError> {
        let base =
            cover.cover_base().ok_or_else(|| FunctorError::Unsupported(format!("{cover} is not a cover")))?.clone();
        let images = base
            .generators()
            .into_iter()
            .map(|(_, t)| FringeElement::from_terms(cover, cover.cover_join(&[t])))
            .collect::<Result<Vec<_>, _>>()?;
        let mut map = RingMap::new(&base, cover, images)?;
        map.witness = Some(Arc::new(MonicCoords { source: base, target: cover.clone() }));
        Ok(map)
    }

    /// `base -> base[y]/(y^2 - a)`.
    pub fn quadratic_cover(base: &Arc<Presentation>, a: &FringeElement) -> Result<Self, FunctorError> {
        let cover =
            Presentation::monic_cover(base.clone(), vec![a.neg().into_terms(), Terms::new()]).map_err(|e| match e {
                DagError::NonEtale(why) => FunctorError::NonEtale(why),
                other => other.into(),
            })?;
        Self::cover_inclusion(&cover)
    }

    /// `x ↦ t^m` on `Torus(1)`.
    pub fn kummer_cover(spec: CoeffSpec, m: u32) -> Result<Self, FunctorError> {
        if m == 0 {
            return Err(FunctorError::NonEtale("m = 0".into()));
        }
        if !spec_unit(spec, m as i64) {
            return Err(FunctorError::NonEtale(format!("{m} is not a unit in {spec}")));
        }
        let a = Presentation::torus(1, spec)?;
        let b = Presentation::torus(1, spec)?;
        let img = FringeElement::monomial(&b, vec![m as i64], spec.one())?;
        let mut map = RingMap::new(&a, &b, vec![img])?;
        map.witness = Some(Arc::new(KummerCoords { m: m as i64, source: a, target: b }));
        Ok(map)
    }

    pub fn source(&self) -> &Arc<Presentation> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Presentation> {
        &self.target
    }

    pub fn images(&self) -> &[FringeElement] {
        &self.images
    }

    pub fn witness(&self) -> Option<&Arc<dyn CoverCoords>> {
        self.witness.as_ref()
    }

    pub fn with_witness(mut self, w: Arc<dyn CoverCoords>) -> Self {
        self.witness = Some(w);
        self
    }

    fn eval_key(
        &self,
        pres: &Presentation,
        key: &Key,
        images: &[FringeElement],
    ) -> Result<FringeElement, FunctorError> {
        let one = FringeElement::one(&self.target);
        match pres.kind() {
            PresentationKind::AffineSpace(_) | PresentationKind::Torus(_) => {
                let mut acc = one;
                for (img, &e) in images.iter().zip(key) {
                    let base = if e < 0 { img.inverse()? } else { img.clone() };
                    acc = acc.mul(&base.pow(e.unsigned_abs() as u32));
                }
                Ok(acc)
            }
            PresentationKind::LocalizedLine(f) => {
                let mut acc = images[0].pow(key[0] as u32);
                if key[1] != 0 {
                    let fx = self.eval_poly(f.coeffs(), &images[0]);
                    let g = if key[1] > 0 { fx.inverse()? } else { fx };
                    acc = acc.mul(&g.pow(key[1].unsigned_abs() as u32));
                }
                Ok(acc)
            }
            _ => {
                let base = pres.cover_base().unwrap();
                let n = images.len();
                let b = self.eval_key(base, &key[..key.len() - 1].to_vec(), &images[..n - 1])?;
                Ok(b.mul(&images[n - 1].pow(key[key.len() - 1] as u32)))
            }
        }
    }

    pub fn apply(&self, a: &FringeElement) -> Result<FringeElement, FunctorError> {
        let mut acc = FringeElement::zero(&self.target);
        for (k, c) in a.terms() {
            acc = acc.add(&self.eval_key(&self.source, k, &self.images)?.scale(c));
        }
        Ok(acc)
    }

    pub fn apply_matrix(&self, m: &ElemMatrix) -> Result<ElemMatrix, FunctorError> {
        let rows = (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| self.apply(m.get(i, j))).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ElemMatrix::from_rows(&self.target, rows))
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &RingMap) -> Result<RingMap, FunctorError> {
        let images = other.images.iter().map(|e| self.apply(e)).collect::<Result<Vec<_>, _>>()?;
        RingMap::new(&other.source, &self.target, images)
    }

    /// `J_{ij} = ∂_j φ(x_i)` over the target.
    fn jacobian(&self) -> ElemMatrix {
        let (m, n) = (self.source.dim(), self.target.dim());
        let rows = (0..m).map(|i| (0..n).map(|j| self.images[i].partial_derivative(j)).collect()).collect();
        ElemMatrix::from_rows(&self.target, rows)
    }

    /// Lifts of the source derivations `∂/∂x_i` to the target, as `Σ_j L_{ij} ∂_j`.
    pub(crate) fn derivation_lift(&self) -> Result<ElemMatrix, FunctorError> {
        let j = self.jacobian();
        if j.is_identity() {
            return Ok(j);
        }
        if j.rows() == 1 && j.cols() == 1 {
            let inv = j.get(0, 0).inverse().map_err(|e| FunctorError::NonEtale(e.to_string()))?;
            return Ok(ElemMatrix::from_rows(&self.target, vec![vec![inv]]));
        }
        Err(FunctorError::Unsupported("derivation lift beyond curves and coordinate-preserving covers".into()))
    }
}

impl fmt::Display for RingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens = self.source.generators();
        let parts: Vec<String> =
            gens.iter().zip(&self.images).map(|((n, _), e)| format!("{n} ↦ {}", e.render())).collect();
        write!(f, "{} -> {}: {}", self.source, self.target, parts.join(", "))
    }
}

/// Chain rule: `N^B_j = Σ_i φ(N^A_i) ∂_j φ(x_i)`.
pub fn pullback_module(conn: &Connection, phi: &RingMap) -> Result<Connection, FunctorError> {
    if **conn.presentation() != **phi.source() {
        return Err(FunctorError::Unsupported("connection is not over the map's source".into()));
    }
    let b = phi.target();
    let r = conn.rank();
    let jac = phi.jacobian();
    let pulled: Vec<ElemMatrix> = conn.matrices().iter().map(|m| phi.apply_matrix(m)).collect::<Result<_, _>>()?;
    let mats = (0..b.dim())
        .map(|j| {
            pulled
                .iter()
                .enumerate()
                .fold(ElemMatrix::zeros(b, r, r), |acc, (i, m)| acc.add(&m.scale_elem(jac.get(i, j))))
        })
        .collect();
    let out = Connection::new(b, mats)?;
    if conn.is_integrable() && !out.is_integrable() {
        return Err(FunctorError::Unsupported("pullback lost integrability".into()));
    }
    Ok(out)
}

/// The `B`-module `B^r` as an `A`-module of rank `r [B:A]`, basis `β_k e_c` at index `c·d + k`.
pub fn pushforward_finite(conn: &Connection, phi: &RingMap) -> Result<Connection, FunctorError> {
    let w = phi.witness().ok_or(FunctorError::NotFinite)?;
    if **conn.presentation() != **phi.target() {
        return Err(FunctorError::Unsupported("connection is not over the map's target".into()));
    }
    let a = phi.source();
    let b = phi.target();
    let d = w.degree();
    let r = conn.rank();
    let lift = phi.derivation_lift()?;
    let basis = w.basis();
    let mut mats = Vec::new();
    for i in 0..a.dim() {
        let nb =
            (0..b.dim()).fold(ElemMatrix::zeros(b, r, r), |acc, j| acc.add(&conn.matrix(j).scale_elem(lift.get(i, j))));
        let mut m = ElemMatrix::zeros(a, r * d, r * d);
        for c in 0..r {
            for (k, beta) in basis.iter().enumerate() {
                let mut s = vec![FringeElement::zero(b); r];
                s[c] = beta.clone();
                let ds: Vec<FringeElement> = (0..b.dim()).fold(vec![FringeElement::zero(b); r], |acc, j| {
                    acc.iter().zip(&s).map(|(x, y)| x.add(&y.partial_derivative(j).mul(lift.get(i, j)))).collect()
                });
                let img: Vec<FringeElement> = ds.iter().zip(nb.mul_vec(&s)).map(|(x, y)| x.add(&y)).collect();
                for (row_c, e) in img.iter().enumerate() {
                    for (kk, coord) in w.coords(e)?.into_iter().enumerate() {
                        m.set(row_c * d + kk, c * d + k, coord);
                    }
                }
            }
        }
        mats.push(m);
    }
    Ok(Connection::new(a, mats)?)
}

/// Automorphisms of `B` over `A` for a finite cover `A -> B`.
#[derive(Clone, Debug)]
pub struct GroupAction {
    cover: RingMap,
    elements: Vec<RingMap>,
}

impl GroupAction {
    pub fn new(cover: &RingMap, elements: Vec<RingMap>) -> Result<Self, FunctorError> {
        let b = cover.target();
        let gens: Vec<FringeElement> =
            b.generators().into_iter().map(|(_, t)| FringeElement::from_terms(b, t)).collect::<Result<_, _>>()?;
        for g in &elements {
            if **g.source() != **b || **g.target() != **b {
                return Err(FunctorError::NotAGroup("element is not an endomorphism of the cover".into()));
            }
            for x in cover.images() {
                if g.apply(x)? != *x {
                    return Err(FunctorError::NotAGroup(format!("{g} moves the base")));
                }
            }
        }
        if !elements.iter().any(|g| g.images() == gens.as_slice()) {
            return Err(FunctorError::NotAGroup("identity missing".into()));
        }
        for g in &elements {
            for h in &elements {
                let gh = g.compose(h)?;
                if !elements.iter().any(|k| k.images() == gh.images()) {
                    return Err(FunctorError::NotAGroup("not closed under composition".into()));
                }
            }
        }
        Ok(GroupAction { cover: cover.clone(), elements })
    }

    /// `y ↦ ζ y` for all `ζ ∈ μ_k` on `A[y]/(y^k - a)`, or `t ↦ ζ t` on a Kummer cover.
    pub fn roots_of_unity(cover: &RingMap) -> Result<Self, FunctorError> {
        let b = cover.target().clone();
        let spec = b.spec();
        let (k, scaled) = match b.kind() {
            PresentationKind::Torus(1) => {
                let m = cover.witness().ok_or(FunctorError::NotFinite)?.degree();
                (m, 0)
            }
            _ => {
                let coeffs = b.cover_polynomial().ok_or(FunctorError::NotFinite)?;
                if coeffs.iter().skip(1).any(|c| !c.is_empty()) {
                    return Err(FunctorError::Unsupported("cover is not of the form y^k = a".into()));
                }
                (coeffs.len(), b.generators().len() - 1)
            }
        };
        let roots = roots_of_unity(spec, k)
            .ok_or_else(|| FunctorError::Unsupported(format!("the {k}-th roots of unity are not all in {spec}")))?;
        let gens: Vec<FringeElement> =
            b.generators().into_iter().map(|(_, t)| FringeElement::from_terms(&b, t)).collect::<Result<_, _>>()?;
        let elements = roots
            .into_iter()
            .map(|z| {
                let mut im = gens.clone();
                im[scaled] = im[scaled].scale(&z);
                RingMap::new(&b, &b, im)
            })
            .collect::<Result<Vec<_>, _>>()?;
        GroupAction::new(cover, elements)
    }

    pub fn cover(&self) -> &RingMap {
        &self.cover
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[RingMap] {
        &self.elements
    }
}

fn scalar_pow(x: &Scalar, mut e: u64) -> Scalar {
    let mut base = x.clone();
    let mut acc = x.one_like();
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// All `k`-th roots of unity when the field contains `k` of them.
pub fn roots_of_unity(spec: CoeffSpec, k: usize) -> Option<Vec<Scalar>> {
    match spec {
        CoeffSpec::Rational => match k {
            1 => Some(vec![spec.one()]),
            2 => Some(vec![spec.one(), spec.int(-1)]),
            _ => None,
        },
        CoeffSpec::PAdic { p, precision } => {
            let p = p as u64;
            if k == 0 || (p - 1) % k as u64 != 0 {
                return None;
            }
            // generator of (Z/p)^*, then its Teichmüller lift
            let g = (2..p.max(3)).find(|&g| {
                (1..p - 1).all(|e| {
                    let mut acc = 1u64;
                    for _ in 0..e {
                        acc = acc * g % p;
                    }
                    acc != 1
                })
            });
            let g = if p == 2 { 1 } else { g? };
            let mut z = scalar_pow(&spec.int(g as i64), (p - 1) / k as u64);
            for _ in 0..precision {
                z = scalar_pow(&z, p);
            }
            Some((0..k).map(|j| scalar_pow(&z, j as u64)).collect())
        }
    }
}

#[derive(Clone, Debug)]
pub struct TraceSplitting {
    pub pushforward: Connection,
    pub idempotent: ElemMatrix,
    pub trace: Scalar,
    pub idempotent_ok: bool,
    /// `∂e + N e - e N = 0` for every derivation.
    pub commutes: bool,
    /// `e ι = ι` and `N^push ι = ι N` for `ι : m ↦ 1 ⊗ m`.
    pub recovers: bool,
}

/// `e = (1/|G|) Σ_g g` on `f_* f^* M`.
pub fn trace_splitting(conn: &Connection, phi: &RingMap, group: &GroupAction) -> Result<TraceSplitting, FunctorError> {
    let w = phi.witness().ok_or(FunctorError::NotFinite)?;
    let a = phi.source();
    let spec = a.spec();
    let order = group.order();
    if !spec_unit(spec, order as i64) {
        return Err(FunctorError::GroupOrderNotInvertible { order });
    }
    let push = pushforward_finite(&pullback_module(conn, phi)?, phi)?;
    let d = w.degree();
    let r = conn.rank();
    let basis = w.basis();
    let mut e = ElemMatrix::zeros(a, r * d, r * d);
    for g in group.elements() {
        for (k, beta) in basis.iter().enumerate() {
            let coords = w.coords(&g.apply(beta)?)?;
            for c in 0..r {
                for (kk, x) in coords.iter().enumerate() {
                    let cur = e.get(c * d + kk, c * d + k).add(x);
                    e.set(c * d + kk, c * d + k, cur);
                }
            }
        }
    }
    let inv = spec.int(order as i64).try_inv()?;
    let e = e.scale(&inv);
    let idempotent_ok = e.mul(&e) == e;
    let commutes = (0..a.dim()).all(|i| {
        let n = push.matrix(i);
        e.derivative(i).add(&n.mul(&e)).sub(&e.mul(n)).is_zero()
    });
    let mut iota = ElemMatrix::zeros(a, r * d, r);
    for c in 0..r {
        iota.set(c * d, c, FringeElement::one(a));
    }
    let recovers = e.mul(&iota) == iota && (0..a.dim()).all(|i| push.matrix(i).mul(&iota) == iota.mul(conn.matrix(i)));
    let trace =
        e.trace().as_constant().ok_or_else(|| FunctorError::Unsupported("non-constant idempotent trace".into()))?;
    Ok(TraceSplitting { pushforward: push, idempotent: e, trace, idempotent_ok, commutes, recovers })
}
