//! Descent of finite free modules along finite free ring maps, and derived limits of towers.

mod roos;

use std::sync::Arc;

use thiserror::Error;

use crate::arith::{ArithError, CoeffSpec, Matrix, Scalar};
use crate::dagalg::{DagError, FringeElement, Presentation};
use crate::diffcalc::{Connection, DiffError, ElemMatrix};
use crate::functor::{pullback_module, FunctorError, RingMap};

pub use roos::{mittag_leffler_check, roos_complex, RoosReport, Tower};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DescentError {
    #[error("not faithfully flat: {0}")]
    NotFaithfullyFlat(String),
    #[error("cocycle condition fails at {0}")]
    CocycleFailed(String),
    #[error("descended rank {found} differs from the expected {expected}")]
    RankDeficient { expected: usize, found: String },
    #[error("vector is not in the descended module")]
    NotDescended,
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Functor(#[from] FunctorError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// What the Amitsur complex needs: a free basis of `B` over `A` and the coordinates of `1`.
pub trait FiniteFree {
    fn spec(&self) -> CoeffSpec;
    fn degree(&self) -> usize;
    fn unit_coords(&self) -> Vec<Scalar>;
}

/// `K^d` over the coefficient field `K`, basis the primitive idempotents.
#[derive(Clone, Copy, Debug)]
pub struct SplitAlgebra {
    pub spec: CoeffSpec,
    pub degree: usize,
}

impl FiniteFree for SplitAlgebra {
    fn spec(&self) -> CoeffSpec {
        self.spec
    }
    fn degree(&self) -> usize {
        self.degree
    }
    fn unit_coords(&self) -> Vec<Scalar> {
        vec![self.spec.one(); self.degree]
    }
}

/// Elements of `B^{⊗n}` over `A`, coordinates in the product basis (first factor most significant).
pub type Tensor = Vec<FringeElement>;

/// `B` finite free over `A` through a ring map with a coordinate witness.
#[derive(Clone, Debug)]
pub struct FiniteAlgebra {
    map: RingMap,
    basis: Vec<FringeElement>,
    /// `β_i β_j = Σ_k table[i][j][k] β_k`.
    table: Vec<Vec<Vec<FringeElement>>>,
    unit: Vec<Scalar>,
    /// An `A`-linear retraction `σ: B -> A`, `σ(1) = 1`.
    sigma: Vec<Scalar>,
}

impl FiniteFree for FiniteAlgebra {
    fn spec(&self) -> CoeffSpec {
        self.base().spec()
    }
    fn degree(&self) -> usize {
        self.basis.len()
    }
    fn unit_coords(&self) -> Vec<Scalar> {
        self.unit.clone()
    }
}

fn tuple(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut t = vec![0; n];
    for i in (0..n).rev() {
        t[i] = idx % d;
        idx /= d;
    }
    t
}

fn index(t: &[usize], d: usize) -> usize {
    t.iter().fold(0, |acc, &i| acc * d + i)
}

impl FiniteAlgebra {
    pub fn new(map: &RingMap) -> Result<Self, DescentError> {
        let w = map.witness().ok_or(FunctorError::NotFinite)?.clone();
        let d = w.degree();
        if d == 0 {
            return Err(DescentError::NotFaithfullyFlat("rank 0 fibre".into()));
        }
        let basis = w.basis();
        let mut table = vec![vec![Vec::new(); d]; d];
        for i in 0..d {
            for j in 0..d {
                table[i][j] = w.coords(&basis[i].mul(&basis[j]))?;
            }
        }
        let unit = w
            .coords(&FringeElement::one(map.target()))?
            .iter()
            .map(|c| c.as_constant().ok_or_else(|| DescentError::Shape("1 has non-constant coordinates".into())))
            .collect::<Result<Vec<_>, _>>()?;
        let k0 = unit
            .iter()
            .position(|u| !u.is_zero())
            .ok_or_else(|| DescentError::NotFaithfullyFlat("1 has zero coordinates".into()))?;
        let mut sigma = vec![map.source().spec().zero(); d];
        sigma[k0] = unit[k0].try_inv()?;
        Ok(FiniteAlgebra { map: map.clone(), basis, table, unit, sigma })
    }

    pub fn map(&self) -> &RingMap {
        &self.map
    }

    pub fn base(&self) -> &Arc<Presentation> {
        self.map.source()
    }

    pub fn cover(&self) -> &Arc<Presentation> {
        self.map.target()
    }

    pub fn basis(&self) -> &[FringeElement] {
        &self.basis
    }

    fn zero_tensor(&self, n: usize) -> Tensor {
        vec![FringeElement::zero(self.base()); self.degree().pow(n as u32)]
    }

    pub fn coords(&self, b: &FringeElement) -> Result<Vec<FringeElement>, DescentError> {
        Ok(self.map.witness().ok_or(FunctorError::NotFinite)?.coords(b)?)
    }

    pub fn element(&self, coords: &[FringeElement]) -> Result<FringeElement, DescentError> {
        let mut acc = FringeElement::zero(self.cover());
        for (c, beta) in coords.iter().zip(&self.basis) {
            acc = acc.add(&self.map.apply(c)?.mul(beta));
        }
        Ok(acc)
    }

    /// Product in `B^{⊗n}`.
    pub fn tensor_mul(&self, n: usize, x: &Tensor, y: &Tensor) -> Tensor {
        let d = self.degree();
        let mut out = self.zero_tensor(n);
        for (ix, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ti = tuple(ix, n, d);
            for (iy, b) in y.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let tj = tuple(iy, n, d);
                let ab = a.mul(b);
                let mut prod = vec![(Vec::new(), ab)];
                for t in 0..n {
                    let row = &self.table[ti[t]][tj[t]];
                    let mut next = Vec::new();
                    for (k, c) in &prod {
                        for (kk, e) in row.iter().enumerate() {
                            if !e.is_zero() {
                                let mut k2 = k.clone();
                                k2.push(kk);
                                next.push((k2, c.mul(e)));
                            }
                        }
                    }
                    prod = next;
                }
                for (k, c) in prod {
                    let i = index(&k, d);
                    out[i] = out[i].add(&c);
                }
            }
        }
        out
    }

    /// Sends factor `t` of `B^{⊗m}` to slot `slots[t]` of `B^{⊗n}`, with `1` in the other slots.
    pub fn pull(&self, n: usize, slots: &[usize], x: &Tensor) -> Tensor {
        let d = self.degree();
        let m = slots.len();
        let mut out = self.zero_tensor(n);
        let free: Vec<usize> = (0..n).filter(|s| !slots.contains(s)).collect();
        for (ix, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ti = tuple(ix, m, d);
            let mut fills: Vec<(Vec<usize>, Scalar)> = vec![(vec![0; n], self.spec().one())];
            for (t, &s) in slots.iter().enumerate() {
                for f in fills.iter_mut() {
                    f.0[s] = ti[t];
                }
            }
            for &s in &free {
                let mut next = Vec::new();
                for (tup, c) in &fills {
                    for (k, u) in self.unit.iter().enumerate() {
                        if !u.is_zero() {
                            let mut t2 = tup.clone();
                            t2[s] = k;
                            next.push((t2, c * u));
                        }
                    }
                }
                fills = next;
            }
            for (tup, c) in fills {
                let i = index(&tup, d);
                out[i] = out[i].add(&a.scale(&c));
            }
        }
        out
    }

    /// `μ: B ⊗ B -> B`, in coordinates.
    fn multiply_out(&self, x: &Tensor) -> Vec<FringeElement> {
        let d = self.degree();
        let mut out = self.zero_tensor(1);
        for (ix, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (k, e) in self.table[ix / d][ix % d].iter().enumerate() {
                out[k] = out[k].add(&a.mul(e));
            }
        }
        out
    }

    /// `id ⊗ σ: B ⊗ B -> B`.
    fn contract_second(&self, x: &Tensor) -> Vec<FringeElement> {
        let d = self.degree();
        let mut out = self.zero_tensor(1);
        for (ix, a) in x.iter().enumerate() {
            let s = &self.sigma[ix % d];
            if !a.is_zero() && !s.is_zero() {
                out[ix / d] = out[ix / d].add(&a.scale(s));
            }
        }
        out
    }

    fn one_tensor(&self, n: usize) -> Tensor {
        self.pull(n, &[], &vec![FringeElement::one(self.base())])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmitsurReport {
    /// Ranks over `A` of `M ⊗ B^{⊗(k+1)}`, `k = 0..length`.
    pub term_ranks: Vec<usize>,
    /// `H^k` for `k = 0..length`.
    pub cohomology: Vec<usize>,
    /// `M -> ker d^0` is an isomorphism.
    pub h0_is_module: bool,
}

impl AmitsurReport {
    pub fn exact_in(&self, k: usize) -> bool {
        self.cohomology.get(k) == Some(&0)
    }
}

fn coface_matrix(alg: &dyn FiniteFree, rank: usize, n: usize, j: usize) -> Matrix<Scalar> {
    let d = alg.degree();
    let zero = alg.spec().zero();
    let unit = alg.unit_coords();
    let (src, dst) = (d.pow(n as u32), d.pow(n as u32 + 1));
    let mut m = Matrix::zeros(rank * dst, rank * src, &zero);
    for i in 0..src {
        let t = tuple(i, n, d);
        for (k, u) in unit.iter().enumerate() {
            if u.is_zero() {
                continue;
            }
            let mut t2 = t.clone();
            t2.insert(j, k);
            let o = index(&t2, d);
            for c in 0..rank {
                m.set(c * dst + o, c * src + i, u.clone());
            }
        }
    }
    m
}

fn amitsur_differential(alg: &dyn FiniteFree, rank: usize, n: usize) -> Result<Matrix<Scalar>, DescentError> {
    let first = coface_matrix(alg, rank, n, 0);
    let zero = Matrix::zeros(first.rows(), first.cols(), &alg.spec().zero());
    let mut acc = first;
    for j in 1..=n {
        let c = coface_matrix(alg, rank, n, j);
        acc = if j % 2 == 1 { acc.sub(&c) } else { acc.sub(&zero.sub(&c)) };
    }
    Ok(acc)
}

/// `0 -> M -> M⊗B -> M⊗B⊗B -> …` for `M = A^rank`, through `M ⊗ B^{⊗(length+1)}`.
pub fn amitsur_complex(rank: usize, alg: &dyn FiniteFree, length: usize) -> Result<AmitsurReport, DescentError> {
    let d = alg.degree();
    if d == 0 || alg.unit_coords().iter().all(Scalar::is_zero) {
        return Err(DescentError::NotFaithfullyFlat("rank 0 fibre".into()));
    }
    // d^{-1} = the unit map, then d^k on B^{⊗(k+1)}
    let mut diffs = vec![coface_matrix(alg, rank, 0, 0)];
    for k in 0..=length {
        diffs.push(amitsur_differential(alg, rank, k + 1)?);
    }
    for w in diffs.windows(2) {
        if !w[1].mul(&w[0])?.is_zero() {
            return Err(DescentError::Shape("Amitsur differential does not square to zero".into()));
        }
    }
    let ranks = diffs.iter().map(|m| m.rank()).collect::<Result<Vec<_>, _>>()?;
    let term_ranks: Vec<usize> = (0..=length).map(|k| rank * d.pow(k as u32 + 1)).collect();
    let cohomology = (0..=length).map(|k| term_ranks[k] - ranks[k + 1] - ranks[k]).collect::<Vec<_>>();
    let h0_is_module = ranks[0] == rank && cohomology[0] == 0;
    // report H^0 as ker d^0 itself, which is the image of M when h0_is_module
    let mut cohomology = cohomology;
    cohomology[0] = term_ranks[0] - ranks[1];
    Ok(AmitsurReport { term_ranks, cohomology, h0_is_module })
}

/// A finite free `B`-module `B^s` with gluing `φ: B ⊗_A M -> M ⊗_A B`, a matrix over `B ⊗_A B`
/// in which the module's own factor is the first one.
#[derive(Clone, Debug)]
pub struct DescentDatum {
    alg: Arc<FiniteAlgebra>,
    rank: usize,
    phi: Vec<Vec<Tensor>>,
    connection: Option<Connection>,
}

impl DescentDatum {
    pub fn new(
        alg: &Arc<FiniteAlgebra>,
        phi: Vec<Vec<Tensor>>,
        connection: Option<Connection>,
    ) -> Result<Self, DescentError> {
        let s = phi.len();
        let d2 = alg.degree().pow(2);
        if phi.iter().any(|row| row.len() != s || row.iter().any(|t| t.len() != d2)) {
            return Err(DescentError::Shape(format!("gluing must be {s}x{s} over B⊗B")));
        }
        if let Some(c) = &connection {
            if c.rank() != s || **c.presentation() != **alg.cover() {
                return Err(DescentError::Shape("connection does not match the module".into()));
            }
        }
        Ok(DescentDatum { alg: alg.clone(), rank: s, phi, connection })
    }

    /// The identity gluing on `M_0 ⊗_A B`, with the pulled-back connection.
    pub fn canonical(alg: &Arc<FiniteAlgebra>, m0: &Connection) -> Result<Self, DescentError> {
        let s = m0.rank();
        let one = alg.one_tensor(2);
        let zero = alg.zero_tensor(2);
        let phi = (0..s).map(|i| (0..s).map(|j| if i == j { one.clone() } else { zero.clone() }).collect()).collect();
        let conn = pullback_module(m0, alg.map())?;
        Self::new(alg, phi, Some(conn))
    }

    /// On `A[y]/(y^2 - a)`: `φ = (y ⊗ y) / a`, swapping the branches `±y` with a sign.
    pub fn branch_swap(alg: &Arc<FiniteAlgebra>, connection: Option<Connection>) -> Result<Self, DescentError> {
        let m = alg.cover().cover_polynomial().ok_or_else(|| DescentError::Shape("not a monic cover".into()))?;
        if m.len() != 2 || !m[1].is_empty() {
            return Err(DescentError::Shape("branch swap needs y^2 = a".into()));
        }
        let a = FringeElement::from_terms(alg.base(), m[0].clone())?.neg();
        let mut t = alg.zero_tensor(2);
        t[3] = a.inverse()?;
        Self::new(alg, vec![vec![t]], connection)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn algebra(&self) -> &Arc<FiniteAlgebra> {
        &self.alg
    }

    fn pulled(&self, slots: &[usize]) -> Vec<Vec<Tensor>> {
        self.phi.iter().map(|row| row.iter().map(|t| self.alg.pull(3, slots, t)).collect()).collect()
    }

    /// `φ(1 ⊗ v)` as coordinates over `B ⊗ B` per component.
    fn glue(&self, v: &[Vec<FringeElement>]) -> Vec<Tensor> {
        let s = self.rank;
        (0..s)
            .map(|r| {
                (0..s).fold(self.alg.zero_tensor(2), |acc, c| {
                    let t = self.alg.tensor_mul(2, &self.phi[r][c], &self.alg.pull(2, &[1], &v[c]));
                    acc.iter().zip(&t).map(|(x, y)| x.add(y)).collect()
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CocycleCheck {
    pub passed: bool,
    /// `(row, column, basis index)` of the first mismatch, or `None`.
    pub offending: Option<String>,
}

/// `Δ^*φ = 1` and `p_13^*φ = p_12^*φ · p_23^*φ` over `B^{⊗3}`.
pub fn check_cocycle(datum: &DescentDatum) -> CocycleCheck {
    let alg = &datum.alg;
    let s = datum.rank;
    let one = alg.unit_coords();
    for r in 0..s {
        for c in 0..s {
            let diag = alg.multiply_out(&datum.phi[r][c]);
            for (k, x) in diag.iter().enumerate() {
                let want = if r == c { one[k].clone() } else { alg.spec().zero() };
                if x.as_constant().map_or(true, |v| v != want) {
                    return CocycleCheck {
                        passed: false,
                        offending: Some(format!("diagonal restriction ({r}, {c}), coordinate {k}")),
                    };
                }
            }
        }
    }
    let p12 = datum.pulled(&[0, 1]);
    let p23 = datum.pulled(&[1, 2]);
    let p13 = datum.pulled(&[0, 2]);
    for r in 0..s {
        for c in 0..s {
            let prod = (0..s).fold(alg.zero_tensor(3), |acc, k| {
                let t = alg.tensor_mul(3, &p12[r][k], &p23[k][c]);
                acc.iter().zip(&t).map(|(x, y)| x.add(y)).collect()
            });
            if let Some(i) = prod.iter().zip(&p13[r][c]).position(|(x, y)| x != y) {
                let d = alg.degree();
                return CocycleCheck {
                    passed: false,
                    offending: Some(format!("triple product ({r}, {c}), basis {:?}", tuple(i, 3, d))),
                };
            }
        }
    }
    CocycleCheck { passed: true, offending: None }
}

#[derive(Clone, Debug)]
pub struct Descended {
    pub rank: usize,
    /// Basis of the equalizer, as vectors in `B^s`.
    pub basis: Vec<Vec<FringeElement>>,
    /// `P(m) = (id ⊗ σ)(φ(1 ⊗ m))` on `M` as an `A`-module, index `c·d + k`.
    pub projector: ElemMatrix,
    /// The basis as columns over `B`: the map `N ⊗_A B -> M`.
    pub base_change: ElemMatrix,
    pub base_change_ok: bool,
    pub connection: Option<Connection>,
    rows: Vec<usize>,
    minor_inv: ElemMatrix,
    alg: Arc<FiniteAlgebra>,
}

impl Descended {
    /// Coordinates of `m ∈ B^s` in the descended basis (over `A`).
    pub fn coordinates(&self, m: &[FringeElement]) -> Result<Vec<FringeElement>, DescentError> {
        let flat = flatten(&self.alg, m)?;
        let picked: Vec<FringeElement> = self.rows.iter().map(|&i| flat[i].clone()).collect();
        let a = self.minor_inv.mul_vec(&picked);
        let mut back = vec![FringeElement::zero(self.alg.cover()); m.len()];
        for (aj, v) in a.iter().zip(&self.basis) {
            let lifted = self.alg.map().apply(aj)?;
            for (b, x) in back.iter_mut().zip(v) {
                *b = b.add(&lifted.mul(x));
            }
        }
        if back != m {
            return Err(DescentError::NotDescended);
        }
        Ok(a)
    }
}

fn flatten(alg: &FiniteAlgebra, m: &[FringeElement]) -> Result<Vec<FringeElement>, DescentError> {
    let mut out = Vec::new();
    for b in m {
        out.extend(alg.coords(b)?);
    }
    Ok(out)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// The equalizer of `m ↦ m ⊗ 1` and `m ↦ φ(1 ⊗ m)`, as the image of the projector `P`.
pub fn descend(datum: &DescentDatum) -> Result<Descended, DescentError> {
    let check = check_cocycle(datum);
    if !check.passed {
        return Err(DescentError::CocycleFailed(check.offending.unwrap_or_default()));
    }
    let alg = &datum.alg;
    let a = alg.base();
    let (s, d) = (datum.rank, alg.degree());
    let n = s * d;
    let mut p = ElemMatrix::zeros(a, n, n);
    for c in 0..s {
        for k in 0..d {
            let mut v = vec![alg.zero_tensor(1); s];
            v[c][k] = FringeElement::one(a);
            for (r, t) in datum.glue(&v).iter().enumerate() {
                for (kk, x) in alg.contract_second(t).into_iter().enumerate() {
                    p.set(r * d + kk, c * d + k, x);
                }
            }
        }
    }
    let trace = p.trace().as_constant().map(|t| t.to_rational());
    if trace != Some(crate::arith::Rational::from_integer((s as i64).into())) {
        return Err(DescentError::RankDeficient {
            expected: s,
            found: format!("projector trace {}", p.trace().render()),
        });
    }
    // columns and rows with a unit minor give a basis of the image
    let mut found = None;
    'search: for cols in subsets(n, s) {
        for rows in subsets(n, s) {
            let minor = ElemMatrix::from_rows(
                a,
                rows.iter().map(|&i| cols.iter().map(|&j| p.get(i, j).clone()).collect()).collect(),
            );
            if let Ok(inv) = minor.inverse() {
                found = Some((cols, rows, inv));
                break 'search;
            }
        }
    }
    let (cols, rows, minor_inv) =
        found.ok_or_else(|| DescentError::RankDeficient { expected: s, found: "no unit minor".into() })?;
    let mut basis = Vec::new();
    for &j in &cols {
        let col = p.col_vec(j);
        let v = (0..s).map(|c| alg.element(&col[c * d..(c + 1) * d])).collect::<Result<Vec<_>, _>>()?;
        let flat: Vec<Vec<FringeElement>> = (0..s).map(|c| col[c * d..(c + 1) * d].to_vec()).collect();
        let lhs = datum.glue(&flat);
        for (c, t) in lhs.iter().enumerate() {
            if *t != alg.pull(2, &[0], &flat[c]) {
                return Err(DescentError::CocycleFailed(format!("projector column {j} is not glued")));
            }
        }
        basis.push(v);
    }
    let b = alg.cover();
    let base_change = ElemMatrix::from_rows(b, (0..s).map(|c| basis.iter().map(|v| v[c].clone()).collect()).collect());
    let base_change_ok = match base_change.inverse() {
        Ok(inv) => base_change.mul(&inv).is_identity(),
        Err(_) => false,
    };
    let mut out = Descended {
        rank: s,
        basis,
        projector: p,
        base_change,
        base_change_ok,
        connection: None,
        rows,
        minor_inv,
        alg: alg.clone(),
    };
    if let Some(conn) = &datum.connection {
        let lift = alg.map().derivation_lift()?;
        let mut mats = Vec::new();
        for i in 0..a.dim() {
            let mut m = ElemMatrix::zeros(a, s, s);
            for (j, v) in out.basis.iter().enumerate() {
                let mut w = vec![FringeElement::zero(b); s];
                for l in 0..b.dim() {
                    let nv = conn.apply(l, v);
                    for (x, y) in w.iter_mut().zip(&nv) {
                        *x = x.add(&y.mul(lift.get(i, l)));
                    }
                }
                for (r, x) in out.coordinates(&w)?.into_iter().enumerate() {
                    m.set(r, j, x);
                }
            }
            mats.push(m);
        }
        out.connection = Some(Connection::new(a, mats)?);
    }
    Ok(out)
}
