//! The jet Čech–Alexander complex of a stratified module and its comparison with de Rham cohomology.
//!
//! Degree `k` holds `r`-vectors over `A[ξ^(1), …, ξ^(k)] / (ξ)^{n+1}`, each `ξ^(j)` a block of
//! `dim A` variables. Cofaces: `δ^0` translates by the first new block and twists by `ε`,
//! inner `δ^i` substitute `ξ^(i) ↦ η^(i) + η^(i+1)`, the last one is the inclusion.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::arith::{ArithError, Echelon, Inserted, Scalar, SparseVec};
use crate::dagalg::{FringeElement, Key, Presentation, TruncationLevel};
use crate::derham::{self, DerhamError, STABILIZATION_STEP};
use crate::diffcalc::multiindex::{self, MultiIndex};
use crate::diffcalc::{
    cocycle_check, divided_derivative, taylor_stratification, Connection, DiffError, Stratification,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CechError {
    #[error("cocycle violation: d∘d ≠ 0 leaving degree {degree}")]
    CocycleViolation { degree: usize },
    #[error("jet order {requested} exceeds the stratification's order {available}")]
    OrderTooHigh { requested: u32, available: u32 },
    #[error("not stabilized: {table:?}")]
    NotStabilized { table: Vec<(usize, usize)> },
    #[error(transparent)]
    Derham(#[from] DerhamError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A degree-`k` cochain: jet monomial (k blocks, concatenated) to an `r`-vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub terms: BTreeMap<MultiIndex, Vec<FringeElement>>,
}

impl Cochain {
    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|v| v.iter().all(FringeElement::is_zero))
    }
}

#[derive(Clone, Debug)]
pub struct JetCechComplex {
    strat: Stratification,
    order: u32,
    depth: usize,
}

type Slot = (usize, MultiIndex, Key);

#[derive(Default)]
struct Indexer {
    ids: HashMap<Slot, usize>,
}

impl Indexer {
    fn id(&mut self, s: Slot) -> usize {
        let n = self.ids.len();
        *self.ids.entry(s).or_insert(n)
    }

    fn vector(&mut self, c: &Cochain) -> SparseVec<Scalar> {
        let mut pairs = Vec::new();
        for (mono, v) in &c.terms {
            for (comp, e) in v.iter().enumerate() {
                for (k, x) in e.terms() {
                    pairs.push((self.id((comp, mono.clone(), k.clone())), x.clone()));
                }
            }
        }
        SparseVec::from_pairs(pairs)
    }
}

fn add_into(acc: &mut BTreeMap<MultiIndex, Vec<FringeElement>>, mono: MultiIndex, v: &[FringeElement], sign: &Scalar) {
    let entry = acc.entry(mono).or_insert_with(|| v.iter().map(|e| FringeElement::zero(e.presentation())).collect());
    for (a, b) in entry.iter_mut().zip(v) {
        *a = a.add(&b.scale(sign));
    }
}

impl JetCechComplex {
    fn pres(&self) -> &Arc<Presentation> {
        self.strat.presentation()
    }

    fn m(&self) -> usize {
        self.strat.dim()
    }

    pub fn rank(&self) -> usize {
        self.strat.rank()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn stratification(&self) -> &Stratification {
        &self.strat
    }

    /// Jet monomials of degree-`k` cochains.
    pub fn monomials(&self, k: usize) -> Vec<MultiIndex> {
        multiindex::up_to(k * self.m(), self.order)
    }

    pub fn zero(&self, k: usize) -> Cochain {
        Cochain { degree: k, terms: BTreeMap::new() }
    }

    /// `e_comp · key · ξ^mono` in degree `k`.
    pub fn basis_cochain(&self, k: usize, comp: usize, mono: MultiIndex, key: Key) -> Cochain {
        let pres = self.pres();
        let mut v = vec![FringeElement::zero(pres); self.rank()];
        v[comp] = FringeElement::monomial(pres, key, pres.spec().one()).expect("basis key");
        Cochain { degree: k, terms: BTreeMap::from([(mono, v)]) }
    }

    pub fn section(&self, s: Vec<FringeElement>) -> Cochain {
        Cochain { degree: 0, terms: BTreeMap::from([(Vec::new(), s)]) }
    }

    /// The `i`-th coface `C^k -> C^{k+1}`.
    pub fn coface(&self, i: usize, c: &Cochain) -> Cochain {
        let k = c.degree;
        let m = self.m();
        let n = self.order;
        let one = self.pres().spec().one();
        let mut out = BTreeMap::new();
        for (mono, v) in &c.terms {
            let deg = multiindex::total(mono);
            if i == 0 {
                for l in multiindex::up_to(m, n - deg) {
                    let w: Vec<FringeElement> = v.iter().map(|e| divided_derivative(e, &l)).collect();
                    if w.iter().all(FringeElement::is_zero) {
                        continue;
                    }
                    for a in multiindex::up_to(m, n - deg - multiindex::total(&l)) {
                        let ea = self.strat.coeff(&a);
                        if ea.is_zero() {
                            continue;
                        }
                        let mut new = multiindex::add(&a, &l);
                        new.extend_from_slice(mono);
                        add_into(&mut out, new, &ea.mul_vec(&w), &one);
                    }
                }
            } else if i <= k {
                let block = &mono[(i - 1) * m..i * m];
                for (alpha, beta) in multiindex::splits(block) {
                    let coeff = self
                        .pres()
                        .spec()
                        .rational(&crate::arith::Rational::from_integer(multiindex::binomial(&alpha, &beta)));
                    let mut new = mono[..(i - 1) * m].to_vec();
                    new.extend(alpha);
                    new.extend(beta);
                    new.extend_from_slice(&mono[i * m..]);
                    add_into(&mut out, new, v, &coeff);
                }
            } else {
                let mut new = mono.clone();
                new.extend(std::iter::repeat(0).take(m));
                add_into(&mut out, new, v, &one);
            }
        }
        out.retain(|_, v| !v.iter().all(FringeElement::is_zero));
        Cochain { degree: k + 1, terms: out }
    }

    /// `d^k = Σ (-1)^i δ^i`.
    pub fn differential(&self, c: &Cochain) -> Cochain {
        let spec = self.pres().spec();
        let mut out = BTreeMap::new();
        for i in 0..=c.degree + 1 {
            let sign = spec.int(if i % 2 == 0 { 1 } else { -1 });
            for (mono, v) in self.coface(i, c).terms {
                add_into(&mut out, mono, &v, &sign);
            }
        }
        out.retain(|_, v| !v.iter().all(FringeElement::is_zero));
        Cochain { degree: c.degree + 1, terms: out }
    }

    fn basis(&self, k: usize, size: i64) -> Vec<(usize, MultiIndex, Key)> {
        let keys = self.pres().basis_keys(size);
        let mut out = Vec::new();
        for mono in self.monomials(k) {
            for key in &keys {
                for c in 0..self.rank() {
                    out.push((c, mono.clone(), key.clone()));
                }
            }
        }
        out
    }

    /// `d^{k+1} ∘ d^k` on basis cochains of coefficient size at most `size`.
    pub fn check_square_zero(&self, size: i64) -> Result<(), CechError> {
        for k in 0..self.depth {
            for (c, mono, key) in self.basis(k, size) {
                let b = self.basis_cochain(k, c, mono, key);
                if !self.differential(&self.differential(&b)).is_zero() {
                    return Err(CechError::CocycleViolation { degree: k });
                }
            }
        }
        Ok(())
    }

    /// `H^k` at coefficient bound `degree`: cocycles of size `<= degree/2` modulo
    /// the coboundaries of cochains of size `<= degree`. Also returns cocycle representatives.
    pub fn cohomology_at(&self, k: usize, degree: usize) -> Result<(usize, Vec<Cochain>), CechError> {
        let mut idx = Indexer::default();
        let one = self.pres().spec().one();
        let mut image = Echelon::with_unit(one.clone(), false);
        let mut h0_basis = Vec::new();
        if k == 0 {
            let sections = self.basis(0, degree as i64);
            let mut e = Echelon::with_unit(one, true);
            for (c, mono, key) in &sections {
                let d = self.differential(&self.basis_cochain(0, *c, mono.clone(), key.clone()));
                if let Inserted::Dependent(Some(rel)) = e.insert(idx.vector(&d))? {
                    h0_basis.push(self.combine(0, &sections, &rel));
                }
            }
            return Ok((h0_basis.len(), h0_basis));
        }
        for (c, mono, key) in self.basis(k - 1, degree as i64) {
            let d = self.differential(&self.basis_cochain(k - 1, c, mono, key));
            image.insert(idx.vector(&d))?;
        }
        let targets = self.basis(k, degree as i64 / 2);
        let mut next = Indexer::default();
        let mut kernel = Echelon::with_unit(one, true);
        let mut cocycles = Vec::new();
        for (c, mono, key) in &targets {
            let d = self.differential(&self.basis_cochain(k, *c, mono.clone(), key.clone()));
            if let Inserted::Dependent(Some(rel)) = kernel.insert(next.vector(&d))? {
                cocycles.push(self.combine(k, &targets, &rel));
            }
        }
        let mut reps = Vec::new();
        for z in cocycles {
            if let Inserted::Independent = image.insert(idx.vector(&z))? {
                reps.push(z);
            }
        }
        Ok((reps.len(), reps))
    }

    fn combine(&self, k: usize, basis: &[(usize, MultiIndex, Key)], rel: &SparseVec<Scalar>) -> Cochain {
        let mut out = BTreeMap::new();
        for (id, x) in rel.iter() {
            let (c, mono, key) = &basis[*id];
            let b = self.basis_cochain(k, *c, mono.clone(), key.clone());
            for (mono, v) in b.terms {
                add_into(&mut out, mono, &v, x);
            }
        }
        out.retain(|_, v: &mut Vec<FringeElement>| !v.iter().all(FringeElement::is_zero));
        Cochain { degree: k, terms: out }
    }

    /// `H^k` at `degree` and `degree + STABILIZATION_STEP`.
    pub fn stable_cohomology(&self, k: usize, degree: usize) -> Result<usize, CechError> {
        let a = self.cohomology_at(k, degree)?.0;
        let b = self.cohomology_at(k, degree + STABILIZATION_STEP)?.0;
        if a != b {
            return Err(CechError::NotStabilized { table: vec![(degree, a), (degree + STABILIZATION_STEP, b)] });
        }
        Ok(b)
    }
}

/// Builds the depth-`k_max` jet complex of order `n` and verifies `d∘d = 0` on small cochains.
pub fn build_jet_cech(strat: &Stratification, k_max: usize, n: u32) -> Result<JetCechComplex, CechError> {
    if n > strat.order() {
        return Err(CechError::OrderTooHigh { requested: n, available: strat.order() });
    }
    let strat = strat.truncate(n);
    if !cocycle_check(&strat).passed() {
        return Err(CechError::CocycleViolation { degree: 0 });
    }
    let cx = JetCechComplex { strat, order: n, depth: k_max };
    cx.check_square_zero(1)?;
    Ok(cx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct H0Report {
    pub dim: usize,
    pub basis: Vec<Vec<FringeElement>>,
    /// Smallest jet order from which the dimension is constant up to `n`.
    pub stabilized_at: u32,
    pub table: Vec<(u32, usize)>,
}

/// Kernel of `ε_n ∘ p_2^† - p_1^†` on sections of size at most `degree`, for jet orders `1..=n`.
pub fn h0_strat(strat: &Stratification, n: u32, degree: usize) -> Result<H0Report, CechError> {
    let mut table = Vec::new();
    let mut basis = Vec::new();
    for j in 1..=n {
        let cx = build_jet_cech(strat, 1, j)?;
        let (dim, b) = cx.cohomology_at(0, degree)?;
        table.push((j, dim));
        basis = b.into_iter().map(|c| c.terms.into_values().next().unwrap_or_default()).collect();
    }
    let last = table.last().map(|t| t.1).unwrap_or(0);
    if table.len() >= 2 && table[table.len() - 2].1 != last {
        return Err(CechError::NotStabilized { table: table.iter().map(|&(j, d)| (j as usize, d)).collect() });
    }
    let stabilized_at = table.iter().rev().take_while(|t| t.1 == last).last().map_or(n, |t| t.0);
    Ok(H0Report { dim: last, basis, stabilized_at, table })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonReport {
    pub derham: Vec<usize>,
    /// Jet order and `(H^0, H^1)` of the jet complex.
    pub jet: Vec<(u32, Vec<usize>)>,
    pub first_mismatch: Option<(u32, usize)>,
}

impl ComparisonReport {
    pub fn agrees(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Degree-0 and degree-1 comparison of the jet complex (one extra simplicial degree) with de Rham.
pub fn compare_with_derham(
    conn: &Connection,
    orders: &[u32],
    t: &TruncationLevel,
) -> Result<ComparisonReport, CechError> {
    let dr = derham::cohomology(conn, t)?;
    let top = orders.iter().copied().max().unwrap_or(1);
    let strat = taylor_stratification(conn, top)?;
    let mut jet = Vec::new();
    let mut first_mismatch = None;
    for &n in orders {
        let cx = build_jet_cech(&strat, 2, n)?;
        let dims = vec![cx.stable_cohomology(0, t.degree)?, cx.stable_cohomology(1, t.degree)?];
        if first_mismatch.is_none() {
            first_mismatch = (0..2).find(|&d| dims[d] != dr.dims[d]).map(|d| (n, d));
        }
        jet.push((n, dims));
    }
    Ok(ComparisonReport { derham: dr.dims, jet, first_mismatch })
}
