use std::collections::{BTreeMap, HashMap};

use super::{ArithError, Field};

/// Sparse vector: strictly increasing indices, no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVec<T> {
    entries: Vec<(usize, T)>,
}

impl<T: Field> SparseVec<T> {
    pub fn new() -> Self {
        SparseVec { entries: Vec::new() }
    }

    pub fn unit(index: usize, one: T) -> Self {
        SparseVec { entries: vec![(index, one)] }
    }

    pub fn from_map(map: BTreeMap<usize, T>) -> Self {
        SparseVec { entries: map.into_iter().filter(|(_, v)| !v.is_zero()).collect() }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, T)>) -> Self {
        let mut map: BTreeMap<usize, T> = BTreeMap::new();
        for (i, v) in pairs {
            match map.get_mut(&i) {
                Some(cur) => *cur = cur.add_ref(&v),
                None => {
                    map.insert(i, v);
                }
            }
        }
        Self::from_map(map)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, T)> {
        self.entries.iter()
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.entries.binary_search_by_key(&index, |(i, _)| *i).ok().map(|k| &self.entries[k].1)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: &T, other: &SparseVec<T>) -> SparseVec<T> {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some(_), None) => out.push(a.next().unwrap().clone()),
                (None, Some(_)) => {
                    let (j, y) = b.next().unwrap();
                    let v = factor.mul_ref(y);
                    if !v.is_zero() {
                        out.push((*j, v));
                    }
                }
                (Some((i, _)), Some((j, _))) => {
                    if i < j {
                        out.push(a.next().unwrap().clone());
                    } else if j < i {
                        let (j, y) = b.next().unwrap();
                        let v = factor.mul_ref(y);
                        if !v.is_zero() {
                            out.push((*j, v));
                        }
                    } else {
                        let (i, x) = a.next().unwrap();
                        let (_, y) = b.next().unwrap();
                        let v = x.add_ref(&factor.mul_ref(y));
                        if !v.is_zero() {
                            out.push((*i, v));
                        }
                    }
                }
            }
        }
        SparseVec { entries: out }
    }

    pub fn scale(&self, factor: &T) -> SparseVec<T> {
        SparseVec {
            entries: self.entries.iter().map(|(i, v)| (*i, v.mul_ref(factor))).filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn into_pairs(self) -> Vec<(usize, T)> {
        self.entries
    }

    pub fn precision_loss(&self) -> i64 {
        self.entries.iter().map(|(_, v)| v.precision_loss()).max().unwrap_or(0)
    }
}

impl<T: Field> Default for SparseVec<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug)]
struct Row<T> {
    pivot: usize,
    vector: SparseVec<T>,
    history: Option<SparseVec<T>>,
}

/// Outcome of inserting a vector into an [`Echelon`].
#[derive(Clone, Debug)]
pub enum Inserted<T> {
    Independent,
    /// The vector was dependent; with history tracking on, the relation among
    /// inserted vectors (indexed by insertion order) that witnesses it.
    Dependent(Option<SparseVec<T>>),
}

/// Incrementally built echelon basis of a subspace, for large sparse problems.
///
/// Each stored row is reduced against all earlier pivots, so one ordered pass
/// reduces any vector. Pivots are chosen by least valuation.
#[derive(Clone, Debug)]
pub struct Echelon<T> {
    rows: Vec<Row<T>>,
    pivot_rows: HashMap<usize, usize>,
    track: bool,
    inserted: usize,
    loss: i64,
    unit: Option<T>,
}

impl<T: Field> Echelon<T> {
    pub fn new(track_history: bool) -> Self {
        Echelon { rows: Vec::new(), pivot_rows: HashMap::new(), track: track_history, inserted: 0, loss: 0, unit: None }
    }

    /// Like [`Echelon::new`], with the field's one known up front so that
    /// inserting a zero vector can still report its trivial relation.
    pub fn with_unit(one: T, track_history: bool) -> Self {
        Echelon { unit: Some(one), ..Self::new(track_history) }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    pub fn precision_loss(&self) -> i64 {
        self.loss
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r.pivot)
    }

    fn reduce_inner(
        &self,
        mut v: SparseVec<T>,
        mut hist: Option<SparseVec<T>>,
    ) -> (SparseVec<T>, Option<SparseVec<T>>) {
        for row in &self.rows {
            let Some(c) = v.get(row.pivot).cloned() else {
                continue;
            };
            let f = c.neg_ref();
            v = v.axpy(&f, &row.vector);
            if let (Some(h), Some(rh)) = (hist.as_mut(), row.history.as_ref()) {
                *h = h.axpy(&f, rh);
            }
        }
        (v, hist)
    }

    /// Residual of `v` modulo the span, and (with tracking) the combination
    /// `c` with `v = residual + sum_k c_k * inserted_k`.
    pub fn reduce(&self, v: &SparseVec<T>) -> (SparseVec<T>, Option<SparseVec<T>>) {
        let hist = self.track.then(SparseVec::new);
        let (res, hist) = self.reduce_inner(v.clone(), hist);
        let comb = hist.map(|h| {
            let m1 = h.iter().next().map(|(_, x)| x.one_like().neg_ref());
            match m1 {
                Some(m1) => h.scale(&m1),
                None => h,
            }
        });
        (res, comb)
    }

    pub fn contains(&self, v: &SparseVec<T>) -> bool {
        self.reduce_inner(v.clone(), None).0.is_zero()
    }

    pub fn insert(&mut self, v: SparseVec<T>) -> Result<Inserted<T>, ArithError> {
        let id = self.inserted;
        self.inserted += 1;
        if self.unit.is_none() {
            self.unit = v.iter().next().map(|(_, x)| x.one_like());
        }
        let hist = if self.track {
            let one = self
                .unit
                .clone()
                .expect("zero vector inserted before the field's one is known; use Echelon::with_unit");
            Some(SparseVec::unit(id, one))
        } else {
            None
        };
        if v.is_zero() {
            return Ok(Inserted::Dependent(hist));
        }
        let (res, hist) = self.reduce_inner(v, hist);
        if res.is_zero() {
            return Ok(Inserted::Dependent(hist));
        }
        let (pivot, pv) = res
            .iter()
            .min_by_key(|(i, x)| (x.valuation().unwrap_or(i64::MAX), *i))
            .map(|(i, x)| (*i, x.clone()))
            .expect("nonzero residual");
        let inv = pv.one_like().div_ref(&pv)?;
        let vector = res.scale(&inv);
        let history = hist.map(|h| h.scale(&inv));
        self.loss = self.loss.max(vector.precision_loss());
        self.pivot_rows.insert(pivot, self.rows.len());
        self.rows.push(Row { pivot, vector, history });
        Ok(Inserted::Independent)
    }
}
