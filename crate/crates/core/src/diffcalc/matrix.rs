use std::fmt;
use std::sync::Arc;

use crate::arith::Scalar;
use crate::dagalg::{DagError, FringeElement, Presentation};

/// Dense matrix over a presented dagger algebra.
#[derive(Clone, PartialEq)]
pub struct ElemMatrix {
    pres: Arc<Presentation>,
    rows: usize,
    cols: usize,
    data: Vec<FringeElement>,
}

impl ElemMatrix {
    pub fn zeros(pres: &Arc<Presentation>, rows: usize, cols: usize) -> Self {
        ElemMatrix { pres: pres.clone(), rows, cols, data: vec![FringeElement::zero(pres); rows * cols] }
    }

    pub fn identity(pres: &Arc<Presentation>, n: usize) -> Self {
        let mut m = Self::zeros(pres, n, n);
        for i in 0..n {
            m.set(i, i, FringeElement::one(pres));
        }
        m
    }

    pub fn from_rows(pres: &Arc<Presentation>, rows: Vec<Vec<FringeElement>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        ElemMatrix { pres: pres.clone(), rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// A matrix of constants.
    pub fn from_scalars(pres: &Arc<Presentation>, rows: &[Vec<Scalar>]) -> Self {
        let rows = rows.iter().map(|r| r.iter().map(|c| FringeElement::constant(pres, c.clone())).collect()).collect();
        Self::from_rows(pres, rows)
    }

    pub fn column(pres: &Arc<Presentation>, v: Vec<FringeElement>) -> Self {
        let n = v.len();
        ElemMatrix { pres: pres.clone(), rows: n, cols: 1, data: v }
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.pres
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &FringeElement {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FringeElement) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col_vec(&self, j: usize) -> Vec<FringeElement> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[FringeElement] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&FringeElement) -> FringeElement) -> Self {
        ElemMatrix {
            pres: self.pres.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect();
        ElemMatrix { data, ..self.clone() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect();
        ElemMatrix { data, ..self.clone() }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.map(|a| a.scale(c))
    }

    pub fn scale_elem(&self, c: &FringeElement) -> Self {
        self.map(|a| a.mul(c))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch");
        let mut out = Self::zeros(&self.pres, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j).add(&a.mul(b));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[FringeElement]) -> Vec<FringeElement> {
        self.mul(&Self::column(&self.pres, v.to_vec())).data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(&self.pres, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Self {
        self.map(|a| a.partial_derivative(i))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(FringeElement::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| if i == j { self.get(i, j).is_one() } else { self.get(i, j).is_zero() })
            })
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, o: &Self) -> Self {
        let mut out = Self::zeros(&self.pres, self.rows + o.rows, self.cols + o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
        }
        for i in 0..o.rows {
            for j in 0..o.cols {
                out.set(self.rows + i, self.cols + j, o.get(i, j).clone());
            }
        }
        out
    }

    pub fn trace(&self) -> FringeElement {
        (0..self.rows.min(self.cols)).fold(FringeElement::zero(&self.pres), |acc, i| acc.add(self.get(i, i)))
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Self {
        let rows = (0..self.rows)
            .filter(|&i| i != skip_row)
            .map(|i| (0..self.cols).filter(|&j| j != skip_col).map(|j| self.get(i, j).clone()).collect())
            .collect();
        Self::from_rows(&self.pres, rows)
    }

    /// Cofactor expansion; meant for the small matrices of descent and covers.
    pub fn determinant(&self) -> FringeElement {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        match self.rows {
            0 => FringeElement::one(&self.pres),
            1 => self.get(0, 0).clone(),
            n => (0..n).fold(FringeElement::zero(&self.pres), |acc, j| {
                let a = self.get(0, j);
                if a.is_zero() {
                    return acc;
                }
                let t = a.mul(&self.minor(0, j).determinant());
                if j % 2 == 0 {
                    acc.add(&t)
                } else {
                    acc.sub(&t)
                }
            }),
        }
    }

    /// Adjugate over the determinant; fails unless the determinant is a unit.
    pub fn inverse(&self) -> Result<Self, DagError> {
        let det_inv = self.determinant().inverse()?;
        let n = self.rows;
        let mut out = Self::zeros(&self.pres, n, n);
        for i in 0..n {
            for j in 0..n {
                let c = self.minor(j, i).determinant().mul(&det_inv);
                out.set(i, j, if (i + j) % 2 == 0 { c } else { c.neg() });
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for ElemMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}
