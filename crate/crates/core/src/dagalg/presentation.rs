use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::arith::{CoeffSpec, Scalar};

use super::unipoly::UniPoly;
use super::DagError;

/// Exponent key of a normal-form monomial. Layout depends on the presentation:
/// `[e_1..e_n]` for affine space and tori, `[i, j]` for `x^i / f^j` on a
/// localized line, and the base key followed by the `y`-exponent for covers.
pub type Key = Vec<i64>;
/// Normal-form coefficient table. Zero coefficients are never stored.
pub type Terms = BTreeMap<Key, Scalar>;

pub const DEFAULT_FRINGE_CAP: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum PresentationKind {
    AffineSpace(usize),
    Torus(usize),
    /// `A^1` with `f` inverted.
    LocalizedLine(UniPoly),
    /// `y^2 = f(x)` over the line with `f` inverted.
    HyperellipticAffine(UniPoly),
    /// `base[y] / m(y)`, `m` monic; `m` lists the non-leading coefficients `m_0..m_{k-1}`.
    MonicCover {
        base: Arc<Presentation>,
        m: Vec<Terms>,
    },
}

#[derive(Clone, Debug)]
struct CoverData {
    base: Arc<Presentation>,
    m: Vec<Terms>,
    /// `dy/dx_i` in normal form, one per coordinate derivation.
    dy: Vec<Terms>,
}

/// A smooth affine presentation with its coefficient field.
#[derive(Clone, Debug)]
pub struct Presentation {
    kind: PresentationKind,
    spec: CoeffSpec,
    fringe_cap: u32,
    offset_cap: Option<i64>,
    cover: Option<CoverData>,
}

impl PartialEq for Presentation {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind && self.spec == o.spec && self.fringe_cap == o.fringe_cap
    }
}

fn default_offset_cap(spec: CoeffSpec) -> Option<i64> {
    spec.precision()
}

fn is_unit_scalar(c: &Scalar) -> bool {
    match c {
        Scalar::Q(_) => !c.is_zero(),
        Scalar::P(_) => c.valuation() == Some(0),
    }
}

fn add_into(t: &mut Terms, k: Key, c: Scalar) {
    if c.is_zero() {
        return;
    }
    match t.get_mut(&k) {
        Some(cur) => {
            let s = &*cur + &c;
            if s.is_zero() {
                t.remove(&k);
            } else {
                *cur = s;
            }
        }
        None => {
            t.insert(k, c);
        }
    }
}

pub(crate) fn terms_add(a: &Terms, b: &Terms) -> Terms {
    let mut out = a.clone();
    for (k, c) in b {
        add_into(&mut out, k.clone(), c.clone());
    }
    out
}

pub(crate) fn terms_scale(a: &Terms, c: &Scalar) -> Terms {
    a.iter().map(|(k, v)| (k.clone(), v * c)).filter(|(_, v)| !v.is_zero()).collect()
}

pub(crate) fn terms_neg(a: &Terms) -> Terms {
    a.iter().map(|(k, v)| (k.clone(), -v)).collect()
}

impl Presentation {
    fn build(kind: PresentationKind, spec: CoeffSpec) -> Self {
        Presentation { kind, spec, fringe_cap: DEFAULT_FRINGE_CAP, offset_cap: default_offset_cap(spec), cover: None }
    }

    pub fn affine_space(n: usize, spec: CoeffSpec) -> Result<Arc<Self>, DagError> {
        if n == 0 {
            return Err(DagError::InvalidPresentation("affine space needs at least one variable".into()));
        }
        Ok(Arc::new(Self::build(PresentationKind::AffineSpace(n), spec)))
    }

    pub fn torus(n: usize, spec: CoeffSpec) -> Result<Arc<Self>, DagError> {
        if n == 0 {
            return Err(DagError::InvalidPresentation("torus needs at least one variable".into()));
        }
        Ok(Arc::new(Self::build(PresentationKind::Torus(n), spec)))
    }

    pub fn localized_line(f: UniPoly) -> Result<Arc<Self>, DagError> {
        let spec = f.spec();
        let lead = f.leading().ok_or_else(|| DagError::InvalidPresentation("localizing at f = 0".into()))?;
        if !is_unit_scalar(lead) {
            return Err(DagError::InvalidPresentation(format!("leading coefficient {lead} of f is not a unit")));
        }
        Ok(Arc::new(Self::build(PresentationKind::LocalizedLine(f), spec)))
    }

    pub fn hyperelliptic(f: UniPoly) -> Result<Arc<Self>, DagError> {
        let spec = f.spec();
        let deg = f.degree().unwrap_or(0);
        if deg < 3 {
            return Err(DagError::InvalidPresentation(format!("hyperelliptic f must have degree >= 3, got {deg}")));
        }
        if spec.prime() == Some(2) {
            return Err(DagError::InvalidPresentation("hyperelliptic presentations need p != 2".into()));
        }
        let disc = f.discriminant_resultant()?;
        if !is_unit_scalar(&disc) {
            return Err(DagError::InvalidPresentation(format!(
                "f = {f} is not squarefree with unit discriminant (resultant {disc})"
            )));
        }
        let base = Self::localized_line(f.clone())?;
        let minus_f: Terms =
            f.coeffs().iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (vec![i as i64, 0], -c)).collect();
        let m = vec![minus_f, Terms::new()];
        let mut pres = Self::build(PresentationKind::HyperellipticAffine(f), spec);
        pres.attach_cover(base, m)?;
        Ok(Arc::new(pres))
    }

    /// `base[y]/(y^k + m_{k-1} y^{k-1} + ... + m_0)`; rejected unless étale.
    pub fn monic_cover(base: Arc<Presentation>, m: Vec<Terms>) -> Result<Arc<Self>, DagError> {
        if m.is_empty() {
            return Err(DagError::InvalidPresentation("cover polynomial must have degree >= 1".into()));
        }
        for c in &m {
            base.check_terms(c)?;
        }
        let spec = base.spec;
        let mut pres = Self::build(PresentationKind::MonicCover { base: base.clone(), m: m.clone() }, spec);
        pres.attach_cover(base, m)?;
        Ok(Arc::new(pres))
    }

    fn attach_cover(&mut self, base: Arc<Presentation>, m: Vec<Terms>) -> Result<(), DagError> {
        self.cover = Some(CoverData { base: base.clone(), m: m.clone(), dy: Vec::new() });
        let k = m.len();
        // m'(y) = sum_{j>=1} j m_j y^{j-1}, with m_k = 1
        let mut mprime = Terms::new();
        for (j, c) in m.iter().enumerate().skip(1) {
            mprime = terms_add(&mprime, &self.lift(&terms_scale(c, &self.spec.int(j as i64)), j - 1));
        }
        mprime = terms_add(
            &mprime,
            &self.lift(&base.one_terms(), k - 1).into_iter().map(|(key, c)| (key, c.scale_int(k as i64))).collect(),
        );
        let inv = self.inverse_terms(&mprime).map_err(|e| match e {
            DagError::NotAUnit(why) => DagError::NonEtale(format!("m'(y) is not a unit: {why}")),
            other => other,
        })?;
        let mut dy = Vec::new();
        for i in 0..base.dim() {
            let mut dm = Terms::new();
            for (j, c) in m.iter().enumerate() {
                dm = terms_add(&dm, &self.lift(&base.deriv_terms(c, i), j));
            }
            dy.push(terms_neg(&self.mul_terms(&dm, &inv)));
        }
        self.cover.as_mut().unwrap().dy = dy;
        Ok(())
    }

    /// Same presentation with different certificate limits.
    pub fn with_limits(&self, fringe_cap: u32, offset_cap: Option<i64>) -> Arc<Self> {
        let mut p = self.clone();
        p.fringe_cap = fringe_cap.max(1);
        p.offset_cap = offset_cap;
        Arc::new(p)
    }

    pub fn kind(&self) -> &PresentationKind {
        &self.kind
    }

    pub fn spec(&self) -> CoeffSpec {
        self.spec
    }

    pub fn fringe_cap(&self) -> u32 {
        self.fringe_cap
    }

    pub fn offset_cap(&self) -> Option<i64> {
        self.offset_cap
    }

    /// The ring this one is a finite cover of, if any.
    pub fn cover_base(&self) -> Option<&Arc<Presentation>> {
        self.cover.as_ref().map(|c| &c.base)
    }

    /// Degree of the cover polynomial, or 1 for non-covers.
    pub fn cover_degree(&self) -> usize {
        self.cover.as_ref().map_or(1, |c| c.m.len())
    }

    /// Non-leading coefficients of the cover polynomial.
    pub fn cover_polynomial(&self) -> Option<&[Terms]> {
        self.cover.as_ref().map(|c| c.m.as_slice())
    }

    /// Number of coordinate derivations.
    pub fn dim(&self) -> usize {
        match &self.kind {
            PresentationKind::AffineSpace(n) | PresentationKind::Torus(n) => *n,
            PresentationKind::LocalizedLine(_) => 1,
            PresentationKind::HyperellipticAffine(_) | PresentationKind::MonicCover { .. } => {
                self.cover.as_ref().unwrap().base.dim()
            }
        }
    }

    pub fn is_curve(&self) -> bool {
        self.dim() == 1
    }

    pub fn key_len(&self) -> usize {
        match &self.kind {
            PresentationKind::AffineSpace(n) | PresentationKind::Torus(n) => *n,
            PresentationKind::LocalizedLine(_) => 2,
            _ => self.cover.as_ref().unwrap().base.key_len() + 1,
        }
    }

    fn f(&self) -> &UniPoly {
        match &self.kind {
            PresentationKind::LocalizedLine(f) => f,
            _ => unreachable!("not a localized line"),
        }
    }

    fn fdeg(&self) -> i64 {
        self.f().degree().unwrap_or(0) as i64
    }

    /// Total exponent size `|k|` used by certificates and degree bounds.
    pub fn key_size(&self, k: &[i64]) -> i64 {
        match &self.kind {
            PresentationKind::AffineSpace(_) | PresentationKind::Torus(_) => k.iter().map(|e| e.abs()).sum(),
            PresentationKind::LocalizedLine(_) => k[0] + k[1] * self.fdeg(),
            _ => {
                let c = self.cover.as_ref().unwrap();
                c.base.key_size(&k[..k.len() - 1]) + k[k.len() - 1]
            }
        }
    }

    pub fn is_normal_key(&self, k: &[i64]) -> bool {
        if k.len() != self.key_len() {
            return false;
        }
        match &self.kind {
            PresentationKind::AffineSpace(_) => k.iter().all(|&e| e >= 0),
            PresentationKind::Torus(_) => true,
            PresentationKind::LocalizedLine(_) => k[0] >= 0 && k[1] >= 0 && (k[1] == 0 || k[0] < self.fdeg()),
            _ => {
                let c = self.cover.as_ref().unwrap();
                let e = k[k.len() - 1];
                e >= 0 && (e as usize) < c.m.len() && c.base.is_normal_key(&k[..k.len() - 1])
            }
        }
    }

    pub(crate) fn check_terms(&self, t: &Terms) -> Result<(), DagError> {
        for (k, c) in t {
            if !self.is_normal_key(k) {
                return Err(DagError::InvalidExpression(format!("key {k:?} is not in normal form")));
            }
            if !self.spec.admits(c) {
                return Err(DagError::InvalidExpression(format!("coefficient {c} is not over {}", self.spec)));
            }
        }
        Ok(())
    }

    pub fn one_key(&self) -> Key {
        vec![0; self.key_len()]
    }

    pub fn one_terms(&self) -> Terms {
        Terms::from([(self.one_key(), self.spec.one())])
    }

    /// The coordinate `x_i` (the variable differentiated by derivation `i`).
    pub fn coordinate_terms(&self, i: usize) -> Terms {
        assert!(i < self.dim(), "coordinate {i} out of range");
        match &self.kind {
            PresentationKind::AffineSpace(_) | PresentationKind::Torus(_) => {
                let mut k = self.one_key();
                k[i] = 1;
                Terms::from([(k, self.spec.one())])
            }
            PresentationKind::LocalizedLine(_) => self.from_fraction(&UniPoly::monomial(self.spec.one(), 1), 0),
            _ => {
                let c = self.cover.as_ref().unwrap();
                self.lift(&c.base.coordinate_terms(i), 0)
            }
        }
    }

    /// The cover variable `y`.
    pub fn cover_variable(&self) -> Option<Terms> {
        let c = self.cover.as_ref()?;
        if c.m.len() == 1 {
            // y = -m_0 when the cover is trivial
            return Some(self.lift(&terms_neg(&c.m[0]), 0));
        }
        Some(self.lift(&c.base.one_terms(), 1))
    }

    /// Named ring generators, in the order ring maps list their images.
    pub fn generators(&self) -> Vec<(String, Terms)> {
        match &self.kind {
            PresentationKind::AffineSpace(n) | PresentationKind::Torus(n) => {
                (0..*n).map(|i| (self.var_name(i), self.coordinate_terms(i))).collect()
            }
            PresentationKind::LocalizedLine(_) => vec![("x".into(), self.coordinate_terms(0))],
            _ => {
                let c = self.cover.as_ref().unwrap();
                let mut g: Vec<(String, Terms)> =
                    c.base.generators().into_iter().map(|(n, t)| (n, self.lift(&t, 0))).collect();
                g.push(("y".into(), self.cover_variable().unwrap()));
                g
            }
        }
    }

    fn var_name(&self, i: usize) -> String {
        match &self.kind {
            PresentationKind::AffineSpace(1) | PresentationKind::Torus(1) => "x".into(),
            _ => format!("x{}", i + 1),
        }
    }

    // ---- localized line helpers ----

    fn to_fraction(&self, a: &Terms) -> (UniPoly, usize) {
        let f = self.f();
        let jmax = a.keys().map(|k| k[1]).max().unwrap_or(0) as usize;
        let mut by_j: BTreeMap<usize, Vec<Scalar>> = BTreeMap::new();
        for (k, c) in a {
            let v = by_j.entry(k[1] as usize).or_default();
            let i = k[0] as usize;
            if v.len() <= i {
                v.resize(i + 1, self.spec.zero());
            }
            v[i] = c.clone();
        }
        let mut num = UniPoly::zero(self.spec);
        for (j, coeffs) in by_j {
            num = num.add(&UniPoly::new(self.spec, coeffs).mul(&f.pow(jmax - j)));
        }
        (num, jmax)
    }

    fn from_fraction(&self, num: &UniPoly, j: usize) -> Terms {
        let f = self.f();
        let mut out = Terms::new();
        let mut q = num.clone();
        for pole in (1..=j).rev() {
            if q.is_zero() {
                break;
            }
            let (nq, r) = q.divrem(f).expect("localized f has a unit leading coefficient");
            for (i, c) in r.coeffs().iter().enumerate() {
                add_into(&mut out, vec![i as i64, pole as i64], c.clone());
            }
            q = nq;
        }
        for (i, c) in q.coeffs().iter().enumerate() {
            add_into(&mut out, vec![i as i64, 0], c.clone());
        }
        out
    }

    // ---- cover helpers ----

    /// Embed base terms multiplied by `y^e` (no reduction; `e` must be in range).
    fn lift(&self, base_terms: &Terms, e: usize) -> Terms {
        base_terms
            .iter()
            .map(|(k, c)| {
                let mut k = k.clone();
                k.push(e as i64);
                (k, c.clone())
            })
            .collect()
    }

    /// Split cover terms into base coefficients of `1, y, ..., y^{k-1}`.
    pub fn cover_parts(&self, a: &Terms) -> Vec<Terms> {
        let c = self.cover.as_ref().expect("not a cover");
        let mut parts = vec![Terms::new(); c.m.len()];
        for (k, v) in a {
            let e = k[k.len() - 1] as usize;
            parts[e].insert(k[..k.len() - 1].to_vec(), v.clone());
        }
        parts
    }

    pub fn cover_join(&self, parts: &[Terms]) -> Terms {
        let mut out = Terms::new();
        for (e, p) in parts.iter().enumerate() {
            out.extend(self.lift(p, e));
        }
        out
    }

    fn cover_reduce(&self, mut prod: Vec<Terms>) -> Terms {
        let c = self.cover.as_ref().unwrap();
        let k = c.m.len();
        while prod.len() > k {
            let top = prod.pop().unwrap();
            if top.is_empty() {
                continue;
            }
            let t = prod.len() - k;
            for (i, mi) in c.m.iter().enumerate() {
                let sub = c.base.mul_terms(&top, mi);
                prod[t + i] = terms_add(&prod[t + i], &terms_neg(&sub));
            }
        }
        prod.resize(k, Terms::new());
        self.cover_join(&prod)
    }

    /// Coordinates of `a * y^j` for each basis power: the multiplication matrix over the base.
    pub fn cover_mult_matrix(&self, a: &Terms) -> Vec<Vec<Terms>> {
        let c = self.cover.as_ref().unwrap();
        let k = c.m.len();
        let y = self.cover_variable().unwrap();
        let mut col = a.clone();
        let mut m = vec![vec![Terms::new(); k]; k];
        for j in 0..k {
            for (i, part) in self.cover_parts(&col).into_iter().enumerate() {
                m[i][j] = part;
            }
            if j + 1 < k {
                col = self.mul_terms(&col, &y);
            }
        }
        m
    }

    fn base_det(&self, m: &[Vec<Terms>]) -> Terms {
        let base = &self.cover.as_ref().unwrap().base;
        let n = m.len();
        if n == 0 {
            return base.one_terms();
        }
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc = Terms::new();
        for j in 0..n {
            if m[0][j].is_empty() {
                continue;
            }
            let minor: Vec<Vec<Terms>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, t)| t.clone()).collect())
                .collect();
            let term = base.mul_terms(&m[0][j], &self.base_det(&minor));
            acc = if j % 2 == 0 { terms_add(&acc, &term) } else { terms_add(&acc, &terms_neg(&term)) };
        }
        acc
    }

    /// Norm of a cover element down to the base.
    pub fn cover_norm(&self, a: &Terms) -> Terms {
        self.base_det(&self.cover_mult_matrix(a))
    }

    // ---- ring operations on normal forms ----

    pub fn mul_terms(&self, a: &Terms, b: &Terms) -> Terms {
        if a.is_empty() || b.is_empty() {
            return Terms::new();
        }
        match &self.kind {
            PresentationKind::AffineSpace(_) | PresentationKind::Torus(_) => {
                let mut out = Terms::new();
                for (ka, ca) in a {
                    for (kb, cb) in b {
                        let k: Key = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
                        add_into(&mut out, k, ca * cb);
                    }
                }
                out
            }
            PresentationKind::LocalizedLine(_) => {
                let (na, ja) = self.to_fraction(a);
                let (nb, jb) = self.to_fraction(b);
                self.from_fraction(&na.mul(&nb), ja + jb)
            }
            _ => {
                let c = self.cover.as_ref().unwrap();
                let pa = self.cover_parts(a);
                let pb = self.cover_parts(b);
                let k = c.m.len();
                let mut prod = vec![Terms::new(); 2 * k - 1];
                for (i, x) in pa.iter().enumerate() {
                    if x.is_empty() {
                        continue;
                    }
                    for (j, y) in pb.iter().enumerate() {
                        if y.is_empty() {
                            continue;
                        }
                        prod[i + j] = terms_add(&prod[i + j], &c.base.mul_terms(x, y));
                    }
                }
                self.cover_reduce(prod)
            }
        }
    }

    pub fn pow_terms(&self, a: &Terms, k: u32) -> Terms {
        let mut acc = self.one_terms();
        let mut base = a.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul_terms(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = self.mul_terms(&base, &base);
            }
        }
        acc
    }

    /// `d/dx_i` of a normal form.
    pub fn deriv_terms(&self, a: &Terms, i: usize) -> Terms {
        assert!(i < self.dim(), "derivation {i} out of range");
        match &self.kind {
            PresentationKind::AffineSpace(_) | PresentationKind::Torus(_) => {
                let mut out = Terms::new();
                for (k, c) in a {
                    if k[i] == 0 {
                        continue;
                    }
                    let mut nk = k.clone();
                    nk[i] -= 1;
                    add_into(&mut out, nk, c.scale_int(k[i]));
                }
                out
            }
            PresentationKind::LocalizedLine(_) => {
                let f = self.f();
                let fp = f.derivative();
                let mut out = Terms::new();
                let mut by_j: BTreeMap<i64, Terms> = BTreeMap::new();
                for (k, c) in a {
                    by_j.entry(k[1]).or_default().insert(k.clone(), c.clone());
                }
                for (j, part) in by_j {
                    // every key in `part` has pole order j, so part = num / f^j
                    let (num, _) = self.to_fraction(&part);
                    let d = num.derivative().mul(f).sub(&num.mul(&fp).scale(&self.spec.int(j)));
                    out = terms_add(&out, &self.from_fraction(&d, (j + 1) as usize));
                }
                out
            }
            _ => {
                let c = self.cover.as_ref().unwrap();
                let parts = self.cover_parts(a);
                let direct: Vec<Terms> = parts.iter().map(|p| c.base.deriv_terms(p, i)).collect();
                let mut out = self.cover_join(&direct);
                // sum e a_e y^{e-1} * dy
                let mut shifted = vec![Terms::new(); c.m.len()];
                for (e, p) in parts.iter().enumerate().skip(1) {
                    shifted[e - 1] = terms_scale(p, &self.spec.int(e as i64));
                }
                let s = self.cover_join(&shifted);
                if !s.is_empty() {
                    out = terms_add(&out, &self.mul_terms(&s, &c.dy[i]));
                }
                out
            }
        }
    }

    /// Inverse of a unit, exact or (p-adically) as a geometric series to full precision.
    pub fn inverse_terms(&self, a: &Terms) -> Result<Terms, DagError> {
        if a.is_empty() {
            return Err(DagError::NotAUnit("zero".into()));
        }
        match &self.kind {
            PresentationKind::AffineSpace(_) | PresentationKind::Torus(_) => {
                let torus = matches!(self.kind, PresentationKind::Torus(_));
                // leading term: the unique term of least valuation
                let minv = a.values().filter_map(Scalar::valuation).min().unwrap();
                let leads: Vec<(&Key, &Scalar)> = a.iter().filter(|(_, c)| c.valuation() == Some(minv)).collect();
                if leads.len() != 1 {
                    return Err(DagError::NotAUnit("no dominant monomial".into()));
                }
                let (lk, lc) = leads[0];
                if !torus && lk.iter().any(|&e| e != 0) {
                    return Err(DagError::NotAUnit("polynomial with non-constant dominant term".into()));
                }
                let lead_inv_c = lc.try_inv()?;
                let lead_inv: Terms = Terms::from([(lk.iter().map(|e| -e).collect(), lead_inv_c)]);
                // a = lead * (1 + h)
                let u = self.mul_terms(a, &lead_inv);
                let mut h = u.clone();
                add_into(&mut h, self.one_key(), -&self.spec.one());
                if h.is_empty() {
                    return Ok(lead_inv);
                }
                if self.spec.prime().is_none() {
                    return Err(DagError::NotAUnit("non-monomial element over the rationals".into()));
                }
                let neg_h = terms_neg(&h);
                let mut sum = self.one_terms();
                let mut power = self.one_terms();
                loop {
                    power = self.mul_terms(&power, &neg_h);
                    if power.is_empty() {
                        break;
                    }
                    sum = terms_add(&sum, &power);
                }
                Ok(self.mul_terms(&sum, &lead_inv))
            }
            PresentationKind::LocalizedLine(_) => {
                let f = self.f();
                let (num, j) = self.to_fraction(a);
                let dn = num.degree().unwrap();
                if !is_unit_scalar(num.leading().unwrap()) {
                    return Err(DagError::NotAUnit(format!("numerator {num} has non-unit leading coefficient")));
                }
                // a is a unit iff num divides a power of f
                let target = f.pow(dn);
                let (q, r) = target.divrem(&num)?;
                if !r.is_zero() {
                    return Err(DagError::NotAUnit(format!("{num} does not divide a power of f")));
                }
                // a^{-1} = f^j / num = q * f^{j - dn}
                if j >= dn {
                    Ok(self.from_fraction(&q.mul(&f.pow(j - dn)), 0))
                } else {
                    Ok(self.from_fraction(&q, dn - j))
                }
            }
            _ => {
                let c = self.cover.as_ref().unwrap();
                let m = self.cover_mult_matrix(a);
                let k = m.len();
                let det = self.base_det(&m);
                let det_inv = c.base.inverse_terms(&det)?;
                let mut coords = Vec::with_capacity(k);
                for i in 0..k {
                    // cofactor C_{0,i}
                    let minor: Vec<Vec<Terms>> = m
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| *r != 0)
                        .map(|(_, row)| {
                            row.iter().enumerate().filter(|(cc, _)| *cc != i).map(|(_, t)| t.clone()).collect()
                        })
                        .collect();
                    let mut cof = self.base_det(&minor);
                    if i % 2 == 1 {
                        cof = terms_neg(&cof);
                    }
                    coords.push(c.base.mul_terms(&cof, &det_inv));
                }
                Ok(self.cover_join(&coords))
            }
        }
    }

    /// Normal form of a raw expression (see [`Presentation::raw_key_len`] for raw key layout).
    pub fn normalize_raw(&self, raw: &[(Key, Scalar)]) -> Result<Terms, DagError> {
        let mut out = Terms::new();
        for (k, c) in raw {
            if !self.spec.admits(c) {
                return Err(DagError::InvalidExpression(format!("coefficient {c} is not over {}", self.spec)));
            }
            let mono = self.raw_monomial(k)?;
            out = terms_add(&out, &terms_scale(&mono, c));
        }
        Ok(out)
    }

    /// Raw keys: exponents of `x_1..x_n`; `[i, j]` for `x^i f^{-j}` with any
    /// integer `j`; for covers the base raw key followed by any `e >= 0` for `y^e`.
    pub fn raw_key_len(&self) -> usize {
        self.key_len()
    }

    fn raw_monomial(&self, k: &[i64]) -> Result<Terms, DagError> {
        if k.len() != self.raw_key_len() {
            return Err(DagError::InvalidExpression(format!("expected {} exponents, got {k:?}", self.raw_key_len())));
        }
        match &self.kind {
            PresentationKind::AffineSpace(_) => {
                if k.iter().any(|&e| e < 0) {
                    return Err(DagError::InvalidExpression(format!("negative exponent in {k:?} on affine space")));
                }
                Ok(Terms::from([(k.to_vec(), self.spec.one())]))
            }
            PresentationKind::Torus(_) => Ok(Terms::from([(k.to_vec(), self.spec.one())])),
            PresentationKind::LocalizedLine(_) => {
                if k[0] < 0 {
                    return Err(DagError::InvalidExpression(format!("negative x exponent in {k:?}")));
                }
                let f = self.f();
                let xi = UniPoly::monomial(self.spec.one(), k[0] as usize);
                if k[1] >= 0 {
                    Ok(self.from_fraction(&xi, k[1] as usize))
                } else {
                    Ok(self.from_fraction(&xi.mul(&f.pow((-k[1]) as usize)), 0))
                }
            }
            _ => {
                let c = self.cover.as_ref().unwrap();
                let e = k[k.len() - 1];
                if e < 0 {
                    return Err(DagError::InvalidExpression(format!("negative y exponent in {k:?}")));
                }
                let b = self.lift(&c.base.raw_monomial(&k[..k.len() - 1])?, 0);
                let y = self.cover_variable().unwrap();
                Ok(self.mul_terms(&b, &self.pow_terms(&y, e as u32)))
            }
        }
    }

    /// All normal-form keys of size at most `max_size`, ordered by (size, key).
    pub fn basis_keys(&self, max_size: i64) -> Vec<Key> {
        let mut keys = Vec::new();
        if max_size < 0 {
            return keys;
        }
        match &self.kind {
            PresentationKind::AffineSpace(n) | PresentationKind::Torus(n) => {
                let signed = matches!(self.kind, PresentationKind::Torus(_));
                let mut cur = vec![0i64; *n];
                fn rec(i: usize, left: i64, signed: bool, cur: &mut Vec<i64>, out: &mut Vec<Key>) {
                    if i == cur.len() {
                        out.push(cur.clone());
                        return;
                    }
                    let lo = if signed { -left } else { 0 };
                    for e in lo..=left {
                        cur[i] = e;
                        rec(i + 1, left - e.abs(), signed, cur, out);
                    }
                    cur[i] = 0;
                }
                rec(0, max_size, signed, &mut cur, &mut keys);
            }
            PresentationKind::LocalizedLine(_) => {
                let m = self.fdeg();
                for i in 0..=max_size {
                    keys.push(vec![i, 0]);
                }
                if m > 0 {
                    for j in 1..=(max_size / m) {
                        for i in 0..m.min(max_size - j * m + 1) {
                            keys.push(vec![i, j]);
                        }
                    }
                }
            }
            _ => {
                let c = self.cover.as_ref().unwrap();
                for e in 0..c.m.len() as i64 {
                    for mut k in c.base.basis_keys(max_size - e) {
                        k.push(e);
                        keys.push(k);
                    }
                }
            }
        }
        keys.sort_by_key(|k| (self.key_size(k), k.clone()));
        keys
    }

    /// Human-readable monomial for a normal-form key.
    pub fn render_key(&self, k: &[i64]) -> String {
        fn power(name: &str, e: i64) -> Option<String> {
            match e {
                0 => None,
                1 => Some(name.to_string()),
                _ => Some(format!("{name}^{e}")),
            }
        }
        let parts: Vec<String> = match &self.kind {
            PresentationKind::AffineSpace(_) | PresentationKind::Torus(_) => {
                k.iter().enumerate().filter_map(|(i, &e)| power(&self.var_name(i), e)).collect()
            }
            PresentationKind::LocalizedLine(_) => {
                let mut v: Vec<String> = power("x", k[0]).into_iter().collect();
                if k[1] > 0 {
                    let num = if v.is_empty() { "1".to_string() } else { v.remove(0) };
                    return if k[1] == 1 { format!("{num}/f") } else { format!("{num}/f^{}", k[1]) };
                }
                v
            }
            _ => {
                let c = self.cover.as_ref().unwrap();
                let b = c.base.render_key(&k[..k.len() - 1]);
                let mut v = Vec::new();
                if b != "1" {
                    v.push(b);
                }
                v.extend(power("y", k[k.len() - 1]));
                v
            }
        };
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PresentationKind::AffineSpace(n) => write!(f, "AffineSpace({n})"),
            PresentationKind::Torus(n) => write!(f, "Torus({n})"),
            PresentationKind::LocalizedLine(p) => write!(f, "LocalizedLine({p})"),
            PresentationKind::HyperellipticAffine(p) => write!(f, "HyperellipticAffine(y^2 = {p})"),
            PresentationKind::MonicCover { base, m } => {
                write!(f, "MonicCover({base}, y^{}", m.len())?;
                for (i, c) in m.iter().enumerate().rev() {
                    if !c.is_empty() {
                        write!(f, " + ({})", render_terms(base, c))?;
                        if i > 0 {
                            write!(f, "*y^{i}")?;
                        }
                    }
                }
                write!(f, ")")
            }
        }?;
        write!(f, " over {}", self.spec)
    }
}

/// Render a coefficient table as a sum of monomials.
pub fn render_terms(p: &Presentation, t: &Terms) -> String {
    if t.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (k, c)) in t.iter().rev().enumerate() {
        let mono = p.render_key(k);
        let neg = c.is_negative();
        let mag = if neg { -c } else { c.clone() };
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if mono == "1" {
            out.push_str(&mag.to_string());
        } else if mag.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&format!("{mag}*{mono}"));
        }
    }
    out
}
