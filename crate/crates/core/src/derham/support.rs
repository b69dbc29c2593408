//! Cohomology with support in the zero locus of `f`, via the open/closed long exact sequence.

use crate::arith::{Echelon, Inserted};
use crate::dagalg::{FringeElement, Presentation, PresentationKind, UniPoly};
use crate::diffcalc::{Connection, ElemMatrix};

use super::{curve_run, DerhamError, STABILIZATION_STEP};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportResult {
    /// `H^0_Z, H^1_Z, H^2_Z`.
    pub dims: [usize; 3],
    pub ambient: Vec<usize>,
    pub open: Vec<usize>,
    /// Ranks of restriction `H^0(A^1) -> H^0(U)` and `H^1(A^1) -> H^1(U)`.
    pub restriction_ranks: [usize; 2],
    /// Rank of the connecting map `H^0(U) -> H^1_Z`.
    pub connecting_rank: usize,
}

impl SupportResult {
    pub fn euler_characteristic(&self) -> i64 {
        self.dims[0] as i64 - self.dims[1] as i64 + self.dims[2] as i64
    }
}

fn restrict(e: &FringeElement, u: &std::sync::Arc<Presentation>) -> Result<FringeElement, DerhamError> {
    let raw: Vec<_> = e.terms().iter().map(|(k, c)| (vec![k[0], 0], c.clone())).collect();
    Ok(FringeElement::normal_form(&raw, u)?)
}

/// `H^•_Z(A^1, E)` for `Z = V(f)` and a connection with polynomial matrices on `A^1`.
pub fn cohomology_with_support(conn: &Connection, f: &UniPoly, degree: usize) -> Result<SupportResult, DerhamError> {
    let pres = conn.presentation();
    if !matches!(pres.kind(), PresentationKind::AffineSpace(1)) {
        return Err(DerhamError::Unsupported(format!("support is computed on the affine line, not {pres}")));
    }
    let levels = [degree, degree + STABILIZATION_STEP];
    let ambient = curve_run(conn, &levels)?;
    let dims_a = ambient.result.dims.clone();
    if f.degree().unwrap_or(0) == 0 {
        if f.is_zero() {
            return Err(DerhamError::Unsupported("Z = V(0) is the whole line".into()));
        }
        return Ok(SupportResult {
            dims: [0, 0, 0],
            open: dims_a.clone(),
            restriction_ranks: [dims_a[0], dims_a[1]],
            ambient: dims_a,
            connecting_rank: 0,
        });
    }
    let u = Presentation::localized_line(f.clone())?;
    let mats = conn
        .matrices()
        .iter()
        .map(|m| {
            let rows = (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| restrict(m.get(i, j), &u)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ElemMatrix::from_rows(&u, rows))
        })
        .collect::<Result<Vec<_>, DerhamError>>()?;
    let open_conn = Connection::new(&u, mats)?;
    let mut open = curve_run(&open_conn, &levels)?;

    let mut h0 = Echelon::with_unit(pres.spec().one(), false);
    let mut r0 = 0;
    for s in &ambient.result.basis[0] {
        let img = s.coeffs.iter().map(|c| restrict(c, &u)).collect::<Result<Vec<_>, _>>()?;
        let v = open.complex.form_vector(&img);
        if let Inserted::Independent = h0.insert(v)? {
            r0 += 1;
        }
    }
    let mut h1 = open.level.image.clone();
    let mut r1 = 0;
    for w in &ambient.result.basis[1] {
        let img = w.coeffs.iter().map(|c| restrict(c, &u)).collect::<Result<Vec<_>, _>>()?;
        let v = open.complex.form_vector(&img);
        if let Inserted::Independent = h1.insert(v)? {
            r1 += 1;
        }
    }
    let dims_u = open.result.dims.clone();
    let dims = [dims_a[0] - r0, (dims_u[0] - r0) + (dims_a[1] - r1), dims_u[1] - r1];
    Ok(SupportResult {
        dims,
        ambient: dims_a,
        open: dims_u,
        restriction_ranks: [r0, r1],
        connecting_rank: open.result.dims[0] - r0,
    })
}
