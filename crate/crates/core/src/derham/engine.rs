//! Truncated linear algebra of `∇ : A^r -> A^r ω` on a curve.

use std::collections::HashMap;
use std::sync::Arc;

use crate::arith::{Echelon, Inserted, Scalar, SparseVec};
use crate::dagalg::{FringeElement, Key, Presentation, PresentationKind};
use crate::diffcalc::Connection;

use super::{DeRhamForm, DerhamError, FormBasis};

/// Section or form basis element: component and normal-form key.
pub(crate) type Slot = (usize, Key);

pub(crate) struct CurveComplex {
    pub conn: Connection,
    pub pres: Arc<Presentation>,
    pub label: FormBasis,
    /// Multiplier turning `dx`-coefficients into `label`-coefficients.
    multiplier: Option<FringeElement>,
    index: HashMap<Slot, usize>,
    slots: Vec<Slot>,
}

/// Everything computed at one degree bound.
#[derive(Clone)]
pub(crate) struct Level {
    pub degree: usize,
    pub sections: Vec<Slot>,
    /// Span of `∇(sections)`.
    pub image: Echelon<Scalar>,
    /// `image` plus the independent window columns.
    pub full: Echelon<Scalar>,
    pub window: Vec<Slot>,
    pub window_size: i64,
    /// Window columns independent modulo the image: the H^1 representatives.
    pub reps: Vec<Slot>,
    pub horizontal: Vec<Vec<FringeElement>>,
    pub loss: i64,
}

/// Window ordering: covers prefer low `y`-degree, everything else is graded.
pub(crate) fn window_keys(pres: &Presentation, w: i64) -> Vec<Key> {
    let mut keys = pres.basis_keys(w);
    if pres.cover_base().is_some() {
        keys.sort_by_key(|k| (k[k.len() - 1], pres.key_size(k), k.clone()));
    }
    keys
}

pub(crate) fn initial_window(pres: &Presentation) -> i64 {
    match pres.kind() {
        PresentationKind::AffineSpace(_) | PresentationKind::Torus(_) => 1,
        PresentationKind::LocalizedLine(f) => (2 * f.degree().unwrap_or(0) as i64).max(1),
        _ => initial_window(pres.cover_base().unwrap()) + pres.cover_degree() as i64,
    }
}

impl CurveComplex {
    pub fn new(conn: &Connection) -> Result<Self, DerhamError> {
        let pres = conn.presentation().clone();
        if !pres.is_curve() {
            return Err(DerhamError::Unsupported(format!("{pres} is not a curve")));
        }
        let (label, multiplier) = match pres.kind() {
            PresentationKind::HyperellipticAffine(_) => (FormBasis::DxOverY, FringeElement::cover_variable(&pres)),
            _ => (FormBasis::Dx, None),
        };
        Ok(CurveComplex { conn: conn.clone(), pres, label, multiplier, index: HashMap::new(), slots: Vec::new() })
    }

    fn slot_id(&mut self, s: &Slot) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.slots.len();
        self.slots.push(s.clone());
        self.index.insert(s.clone(), i);
        i
    }

    pub fn form_vector(&mut self, coeffs: &[FringeElement]) -> SparseVec<Scalar> {
        let mut pairs = Vec::new();
        for (c, e) in coeffs.iter().enumerate() {
            for (k, v) in e.terms() {
                pairs.push((self.slot_id(&(c, k.clone())), v.clone()));
            }
        }
        SparseVec::from_pairs(pairs)
    }

    pub fn unit_vector(&mut self, s: &Slot) -> SparseVec<Scalar> {
        SparseVec::unit(self.slot_id(s), self.pres.spec().one())
    }

    pub fn slot_element(&self, s: &Slot, c: Scalar) -> Vec<FringeElement> {
        let mut v = vec![FringeElement::zero(&self.pres); self.conn.rank()];
        v[s.0] = FringeElement::monomial(&self.pres, s.1.clone(), c).expect("basis key");
        v
    }

    /// Coefficients of `∇ s` against the form generator.
    pub fn differential(&self, s: &[FringeElement]) -> Vec<FringeElement> {
        let ds = self.conn.apply(0, s);
        match &self.multiplier {
            Some(y) => ds.iter().map(|a| a.mul(y)).collect(),
            None => ds,
        }
    }

    pub fn combination(&self, basis: &[Slot], comb: &SparseVec<Scalar>, offset: usize) -> Vec<FringeElement> {
        let mut out = vec![FringeElement::zero(&self.pres); self.conn.rank()];
        for (id, c) in comb.iter() {
            if *id < offset || *id - offset >= basis.len() {
                continue;
            }
            let s = &basis[*id - offset];
            let e = FringeElement::monomial(&self.pres, s.1.clone(), c.clone()).expect("basis key");
            out[s.0] = out[s.0].add(&e);
        }
        out
    }

    pub fn level(&mut self, degree: usize, window_cap: Option<i64>) -> Result<Level, DerhamError> {
        let r = self.conn.rank();
        let keys = self.pres.basis_keys(degree as i64);
        let sections: Vec<Slot> = (0..r).flat_map(|c| keys.iter().map(move |k| (c, k.clone()))).collect();
        let mut image = Echelon::with_unit(self.pres.spec().one(), true);
        let mut horizontal = Vec::new();
        for s in &sections {
            let img = self.differential(&self.slot_element(s, self.pres.spec().one()));
            let v = self.form_vector(&img);
            if let Inserted::Dependent(Some(rel)) = image.insert(v)? {
                horizontal.push(self.combination(&sections, &rel, 0));
            }
        }
        let half = degree as i64 / 2;
        let cap = window_cap.unwrap_or(half).min(half).max(0);
        let targets: Vec<Slot> =
            (0..r).flat_map(|c| self.pres.basis_keys(half).into_iter().map(move |k| (c, k))).collect();
        let mut w = initial_window(&self.pres).min(cap.max(1));
        loop {
            let window: Vec<Slot> =
                window_keys(&self.pres, w).into_iter().flat_map(|k| (0..r).map(move |c| (c, k.clone()))).collect();
            let mut full = image.clone();
            let mut reps = Vec::new();
            for s in &window {
                let v = self.unit_vector(s);
                if let Inserted::Independent = full.insert(v)? {
                    reps.push(s.clone());
                }
            }
            let mut spans = true;
            for t in &targets {
                let v = self.unit_vector(t);
                if !full.contains(&v) {
                    spans = false;
                    break;
                }
            }
            if spans {
                let loss = full.precision_loss();
                if let Some(n) = self.pres.spec().precision() {
                    if loss >= n {
                        return Err(crate::arith::ArithError::PrecisionExhausted {
                            context: format!("cohomology at degree {degree} lost {loss} of {n} digits"),
                        }
                        .into());
                    }
                }
                return Ok(Level { degree, sections, image, full, window, window_size: w, reps, horizontal, loss });
            }
            if w >= cap {
                return Err(DerhamError::Resonance { window: w, degree });
            }
            w += 1;
        }
    }

    pub fn rep_form(&self, s: &Slot) -> DeRhamForm {
        DeRhamForm::one_form(self.slot_element(s, self.pres.spec().one()), self.label)
    }
}
