use crate::arith::{CoeffSpec, Matrix, Scalar};

use super::DescentError;

/// A finite tower `M_0 <- M_1 <- … <- M_{L-1}` of vector spaces; `maps[i]: M_{i+1} -> M_i`.
#[derive(Clone, Debug)]
pub struct Tower {
    spec: CoeffSpec,
    dims: Vec<usize>,
    maps: Vec<Matrix<Scalar>>,
}

impl Tower {
    pub fn new(spec: CoeffSpec, dims: Vec<usize>, maps: Vec<Matrix<Scalar>>) -> Result<Self, DescentError> {
        if dims.is_empty() || maps.len() + 1 != dims.len() {
            return Err(DescentError::Shape("a tower of L levels needs L - 1 maps".into()));
        }
        for (i, m) in maps.iter().enumerate() {
            if m.rows() != dims[i] || m.cols() != dims[i + 1] {
                return Err(DescentError::Shape(format!(
                    "map {i} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    dims[i],
                    dims[i + 1]
                )));
            }
        }
        Ok(Tower { spec, dims, maps })
    }

    pub fn constant(spec: CoeffSpec, dim: usize, depth: usize) -> Self {
        let id = Matrix::identity(dim, &spec.one());
        Tower { spec, dims: vec![dim; depth], maps: vec![id; depth.saturating_sub(1)] }
    }

    pub fn zero_maps(spec: CoeffSpec, dim: usize, depth: usize) -> Self {
        let z = Matrix::zeros(dim, dim, &spec.zero());
        Tower { spec, dims: vec![dim; depth], maps: vec![z; depth.saturating_sub(1)] }
    }

    /// `M_n = K^{n+1}`, maps forgetting the last coordinate.
    pub fn projections(spec: CoeffSpec, depth: usize) -> Self {
        let maps = (0..depth.saturating_sub(1))
            .map(|i| {
                let mut m = Matrix::zeros(i + 1, i + 2, &spec.zero());
                for k in 0..=i {
                    m.set(k, k, spec.one());
                }
                m
            })
            .collect();
        Tower { spec, dims: (1..=depth).collect(), maps }
    }

    /// `M_n = K[t]/t^{n+1}` in the basis `1, t, …`, maps multiplication by `t` followed by truncation.
    pub fn multiplication_by_t(spec: CoeffSpec, depth: usize) -> Self {
        let maps = (0..depth.saturating_sub(1))
            .map(|i| {
                let mut m = Matrix::zeros(i + 1, i + 2, &spec.zero());
                for k in 0..i {
                    m.set(k + 1, k, spec.one());
                }
                m
            })
            .collect();
        Tower { spec, dims: (1..=depth).collect(), maps }
    }

    pub fn depth(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn maps(&self) -> &[Matrix<Scalar>] {
        &self.maps
    }

    /// `M_from -> M_to` for `from >= to`.
    pub fn composite(&self, from: usize, to: usize) -> Result<Matrix<Scalar>, DescentError> {
        let mut m = Matrix::identity(self.dims[to], &self.spec.one());
        for i in to..from {
            m = m.mul(&self.maps[i])?;
        }
        Ok(m)
    }

    pub fn image_rank(&self, from: usize, to: usize) -> Result<usize, DescentError> {
        Ok(self.composite(from, to)?.rank()?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoosReport {
    pub depth: usize,
    /// Level at which the finite model reads off the limits.
    pub middle: usize,
    pub lim: usize,
    /// Failure of the image chain at the middle level to stabilize over the last step.
    pub lim1: usize,
    /// Kernel and cokernel of `Π M_n -> Π M_n`, `(x_n) ↦ (x_n - f(x_{n+1}))`, truncated.
    pub kernel: usize,
    pub cokernel: usize,
    pub mittag_leffler: bool,
}

fn shift_differential(t: &Tower) -> Result<Matrix<Scalar>, DescentError> {
    let l = t.depth();
    let offs: Vec<usize> = t
        .dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = t.dims.iter().sum();
    let rows: usize = t.dims[..l - 1].iter().sum();
    let mut m = Matrix::zeros(rows, total, &t.spec.zero());
    for n in 0..l - 1 {
        for i in 0..t.dims[n] {
            m.set(offs[n] + i, offs[n] + i, t.spec.one());
            for j in 0..t.dims[n + 1] {
                let f = t.maps[n].get(i, j);
                if !f.is_zero() {
                    m.set(offs[n] + i, offs[n + 1] + j, -f);
                }
            }
        }
    }
    Ok(m)
}

/// The finite model of `0 -> lim -> Π M_n -> Π M_n -> lim^1 -> 0`.
///
/// A finite tower has no `lim^1`; the model reads `lim` as the image of the top level at the
/// middle level and `lim^1` as the drop of that image chain over its last step.
pub fn roos_complex(t: &Tower) -> Result<RoosReport, DescentError> {
    let l = t.depth();
    if l < 2 {
        return Err(DescentError::Shape("a tower needs at least two levels".into()));
    }
    let h = l / 2 - 1;
    let lim = t.image_rank(l - 1, h)?;
    let lim1 = t.image_rank(l - 2, h)? - lim;
    let d = shift_differential(t)?;
    let r = d.rank()?;
    let total: usize = t.dims.iter().sum();
    Ok(RoosReport {
        depth: l,
        middle: h,
        lim,
        lim1,
        kernel: total - r,
        cokernel: d.rows() - r,
        mittag_leffler: mittag_leffler_check(t)?,
    })
}

/// Whether every image chain `im(M_m -> M_n)`, `n` up to the middle level, stabilizes before the top.
pub fn mittag_leffler_check(t: &Tower) -> Result<bool, DescentError> {
    let l = t.depth();
    if l < 2 {
        return Err(DescentError::Shape("a tower needs at least two levels".into()));
    }
    for n in 0..l / 2 {
        if t.image_rank(l - 2, n)? != t.image_rank(l - 1, n)? {
            return Ok(false);
        }
    }
    Ok(true)
}
