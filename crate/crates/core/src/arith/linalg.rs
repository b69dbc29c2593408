use std::fmt;

use super::{ArithError, Field};

/// Dense row-major matrix over one coefficient field.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize, zero: &T) -> Self {
        Matrix { rows, cols, data: vec![zero.zero_like(); rows * cols] }
    }

    pub fn identity(n: usize, one: &T) -> Self {
        let mut m = Self::zeros(n, n, one);
        for i in 0..n {
            m.data[i * n + i] = one.one_like();
        }
        m
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn column(values: Vec<T>) -> Self {
        let n = values.len();
        Matrix { rows: n, cols: 1, data: values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_vec(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let data = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        Matrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn mul(&self, other: &Matrix<T>) -> Result<Matrix<T>, ArithError> {
        if self.cols != other.rows {
            return Err(ArithError::Shape(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let zero = self.data.first().or(other.data.first());
        let Some(zero) = zero.map(Field::zero_like) else {
            return Ok(Matrix { rows: self.rows, cols: other.cols, data: Vec::new() });
        };
        let mut out = Self::zeros(self.rows, other.cols, &zero);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j).add_ref(&a.mul_ref(b));
                    out.set(i, j, cur);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>, ArithError> {
        Ok(self.mul(&Matrix::column(v.to_vec()))?.data)
    }

    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.sub_ref(b)).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Field::is_zero)
    }

    /// Determinant by elimination with least-valuation pivots.
    pub fn determinant(&self) -> Result<T, ArithError> {
        if self.rows != self.cols {
            return Err(ArithError::Shape(format!("determinant of {}x{}", self.rows, self.cols)));
        }
        let Some(first) = self.data.first() else {
            return Err(ArithError::Shape("determinant of an empty matrix needs a field witness".into()));
        };
        let n = self.rows;
        let mut m: Vec<Vec<T>> = (0..n).map(|i| self.row(i).to_vec()).collect();
        let mut det = first.one_like();
        for c in 0..n {
            let best = (c..n).filter_map(|i| m[i][c].valuation().map(|v| (v, i))).min();
            let Some((_, pi)) = best else {
                return Ok(first.zero_like());
            };
            if pi != c {
                m.swap(pi, c);
                det = det.neg_ref();
            }
            let pivot = m[c][c].clone();
            det = det.mul_ref(&pivot);
            for i in c + 1..n {
                if m[i][c].is_zero() {
                    continue;
                }
                let factor = m[i][c].div_ref(&pivot)?;
                for j in c..n {
                    let t = m[i][j].sub_ref(&factor.mul_ref(&m[c][j]));
                    m[i][j] = t;
                }
            }
        }
        Ok(det)
    }

    pub fn rank(&self) -> Result<usize, ArithError> {
        let zero = match self.data.first() {
            Some(z) => z.zero_like(),
            None => return Ok(0),
        };
        Ok(solve_linear(self, &Matrix::zeros(self.rows, 0, &zero))?.rank)
    }
}

impl<T: fmt::Display> fmt::Debug for Matrix<T> {
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
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug)]
pub struct LinearSolution<T> {
    /// One solution column per right-hand side, or `None` if the system is inconsistent.
    pub particular: Option<Vec<Vec<T>>>,
    pub kernel: Vec<Vec<T>>,
    pub rank: usize,
    /// Worst-case digits lost across all reported values (0 over the rationals).
    pub precision_loss: i64,
}

/// Solve `A x = b` for each column of `b`, and return a kernel basis of `A`.
///
/// Columns are eliminated in order; inside a column the row of least valuation
/// is chosen, so p-adic elimination multipliers stay integral.
pub fn solve_linear<T: Field>(a: &Matrix<T>, b: &Matrix<T>) -> Result<LinearSolution<T>, ArithError> {
    if a.rows != b.rows {
        return Err(ArithError::Shape(format!("A has {} rows, b has {}", a.rows, b.rows)));
    }
    let n = a.cols;
    let k = b.cols;
    let width = n + k;
    let mut m: Vec<Vec<T>> = (0..a.rows).map(|i| a.row(i).iter().chain(b.row(i).iter()).cloned().collect()).collect();

    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m.len() {
            break;
        }
        let mut best: Option<(usize, i64)> = None;
        let mut weakest_zero: Option<i64> = None;
        for (i, row) in m.iter().enumerate().skip(r) {
            match row[c].valuation() {
                Some(v) => {
                    if best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((i, v));
                    }
                }
                None => {
                    if let Some(p) = row[c].abs_precision() {
                        weakest_zero = Some(weakest_zero.map_or(p, |w: i64| w.min(p)));
                    }
                }
            }
        }
        let Some((pi, pv)) = best else { continue };
        if let Some(w) = weakest_zero {
            if w <= pv {
                return Err(ArithError::PrecisionExhausted {
                    context: format!("column {c}: pivot valuation {pv} not below unresolved precision {w}"),
                });
            }
        }
        m.swap(r, pi);
        let pivot = m[r][c].clone();
        let support: Vec<usize> = (c..width).filter(|&j| !m[r][j].is_zero()).collect();
        for i in r + 1..m.len() {
            if m[i][c].is_zero() {
                continue;
            }
            let factor = m[i][c].div_ref(&pivot)?;
            for &j in &support {
                let t = m[i][j].sub_ref(&factor.mul_ref(&m[r][j]));
                m[i][j] = t;
            }
        }
        pivots.push(c);
        r += 1;
    }
    let rank = pivots.len();

    // Back substitution to reduced echelon form.
    for (ri, &c) in pivots.iter().enumerate().rev() {
        let pivot = m[ri][c].clone();
        for j in c..width {
            if !m[ri][j].is_zero() {
                m[ri][j] = m[ri][j].div_ref(&pivot)?;
            }
        }
        let support: Vec<usize> = (c..width).filter(|&j| !m[ri][j].is_zero()).collect();
        for i in 0..ri {
            if m[i][c].is_zero() {
                continue;
            }
            let factor = m[i][c].clone();
            for &j in &support {
                let t = m[i][j].sub_ref(&factor.mul_ref(&m[ri][j]));
                m[i][j] = t;
            }
        }
    }

    let zero = a.data.first().or(b.data.first()).map(Field::zero_like);
    let mut loss = 0;
    let consistent = m.iter().skip(rank).all(|row| row[n..].iter().all(Field::is_zero));
    let particular = match (&zero, consistent) {
        (Some(zero), true) => {
            let mut sols = Vec::with_capacity(k);
            for col in 0..k {
                let mut x = vec![zero.clone(); n];
                for (ri, &c) in pivots.iter().enumerate() {
                    x[c] = m[ri][n + col].clone();
                    loss = loss.max(x[c].precision_loss());
                }
                sols.push(x);
            }
            Some(sols)
        }
        (None, true) => Some(vec![Vec::new(); k]),
        (_, false) => None,
    };

    let mut kernel = Vec::new();
    if let Some(zero) = &zero {
        let one = zero.one_like();
        for f in (0..n).filter(|c| !pivots.contains(c)) {
            let mut v = vec![zero.clone(); n];
            v[f] = one.clone();
            for (ri, &c) in pivots.iter().enumerate() {
                v[c] = m[ri][f].neg_ref();
                loss = loss.max(v[c].precision_loss());
            }
            kernel.push(v);
        }
    }
    Ok(LinearSolution { particular, kernel, rank, precision_loss: loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, PAdic, Rational};

    fn qm(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect())
    }

    #[test]
    fn identity_system() {
        let a = qm(&[&[1, 0], &[0, 1]]);
        let b = qm(&[&[1], &[2]]);
        let s = solve_linear(&a, &b).unwrap();
        assert_eq!(s.particular.unwrap()[0], vec![rat(1, 1), rat(2, 1)]);
        assert!(s.kernel.is_empty());
        assert_eq!(s.rank, 2);
    }

    #[test]
    fn single_row_kernel() {
        let a = qm(&[&[1, 1]]);
        let b = qm(&[&[0]]);
        let s = solve_linear(&a, &b).unwrap();
        assert_eq!(s.kernel, vec![vec![rat(-1, 1), rat(1, 1)]]);
    }

    #[test]
    fn inconsistent_system() {
        let a = qm(&[&[1, 1], &[2, 2]]);
        let b = qm(&[&[1], &[3]]);
        let s = solve_linear(&a, &b).unwrap();
        assert!(s.particular.is_none());
        assert_eq!(s.rank, 1);
    }

    #[test]
    fn padic_pivot_loss_is_reported() {
        let p = |n: i64| PAdic::from_int(n, 5, 10);
        let a = Matrix::from_rows(vec![vec![p(5), p(0)], vec![p(0), p(1)]]);
        let b = Matrix::column(vec![p(10), p(3)]);
        let s = solve_linear(&a, &b).unwrap();
        let x = &s.particular.unwrap()[0];
        assert_eq!(x[0], p(2));
        assert_eq!(s.precision_loss, 1);
    }

    #[test]
    fn padic_ambiguous_pivot_is_exhausted() {
        let z = PAdic::from_int(5i64.pow(3), 5, 3);
        let a = Matrix::from_rows(vec![vec![PAdic::from_int(5i64.pow(3), 5, 10)], vec![z]]);
        let b = Matrix::zeros(2, 0, &PAdic::zero(5, 10));
        assert!(matches!(solve_linear(&a, &b), Err(ArithError::PrecisionExhausted { .. })));
    }
}
