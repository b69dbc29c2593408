//! De Rham cohomology of modules with connection on the supported presentations.

mod engine;
mod homotopy;
mod support;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::arith::{ArithError, Scalar};
use crate::dagalg::{DagError, FringeElement, Presentation, PresentationKind, Terms, TruncationLevel};
use crate::diffcalc::{Connection, DiffError, ElemMatrix};

use engine::{CurveComplex, Level};

pub use homotopy::{integrate, poincare_homotopy_check, HomotopyReport};
pub use support::{cohomology_with_support, SupportResult};

/// Truncation step between the two levels compared for stabilization.
pub const STABILIZATION_STEP: usize = 4;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DerhamError {
    #[error("not stabilized: {}", render_table(.table))]
    NotStabilized { table: Vec<(usize, Vec<usize>)> },
    #[error("resonance: window {window} still fails to span at degree {degree}")]
    Resonance { window: i64, degree: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("connection is not integrable")]
    NotIntegrable,
    #[error("form not reduced at degree {degree}")]
    NotReduced { degree: usize },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

fn render_table(t: &[(usize, Vec<usize>)]) -> String {
    t.iter().map(|(d, dims)| format!("d={d}: {dims:?}")).collect::<Vec<_>>().join(", ")
}

/// The one-form generator that coefficients are written against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormBasis {
    Dx,
    DxOverY,
}

impl FormBasis {
    pub fn for_presentation(p: &Presentation) -> Self {
        match p.kind() {
            PresentationKind::HyperellipticAffine(_) => FormBasis::DxOverY,
            _ => FormBasis::Dx,
        }
    }
}

impl fmt::Display for FormBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormBasis::Dx => "dx",
            FormBasis::DxOverY => "dx/y",
        })
    }
}

/// A 0-form (section) or a 1-form `Σ c_i e_i ω` on a curve.
#[derive(Clone, Debug, PartialEq)]
pub struct DeRhamForm {
    pub degree: u8,
    pub coeffs: Vec<FringeElement>,
    pub basis: FormBasis,
}

impl DeRhamForm {
    pub fn section(coeffs: Vec<FringeElement>) -> Self {
        let basis = coeffs.first().map_or(FormBasis::Dx, |c| FormBasis::for_presentation(c.presentation()));
        DeRhamForm { degree: 0, coeffs, basis }
    }

    pub fn one_form(coeffs: Vec<FringeElement>, basis: FormBasis) -> Self {
        DeRhamForm { degree: 1, coeffs, basis }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(FringeElement::is_zero)
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let body = if self.degree == 0 { c.render() } else { render_one_form(c, self.basis) };
                if self.coeffs.len() > 1 {
                    format!("{body} e{}", i + 1)
                } else {
                    body
                }
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

fn render_one_form(c: &FringeElement, basis: FormBasis) -> String {
    let pres = c.presentation();
    if c.terms().len() == 1 {
        let (k, v) = c.terms().iter().next().unwrap();
        let coeff = if v.is_one() { String::new() } else { format!("{v}*") };
        let torus_line = matches!(pres.kind(), PresentationKind::Torus(1));
        if torus_line && k[0] < 0 && basis == FormBasis::Dx {
            let den = if k[0] == -1 { "x".to_string() } else { format!("x^{}", -k[0]) };
            return format!("{coeff}dx/{den}");
        }
        let mono = pres.render_key(k);
        if mono == "1" {
            return format!("{coeff}{basis}");
        }
        return format!("{coeff}{mono} {basis}");
    }
    format!("({}) {basis}", c.render())
}

impl fmt::Display for DeRhamForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohomologyResult {
    pub dims: Vec<usize>,
    /// Representatives per degree (empty for degrees obtained by Künneth products).
    pub basis: Vec<Vec<DeRhamForm>>,
    /// `(degree bound, dims)` for each level examined.
    pub stabilization: Vec<(usize, Vec<usize>)>,
    pub precision_loss: i64,
    /// Final reduction window size.
    pub window: i64,
}

/// `∇ s` as a 1-form.
pub fn dr_differential(form: &DeRhamForm, conn: &Connection) -> Result<DeRhamForm, DerhamError> {
    if form.degree != 0 {
        return Err(DerhamError::Unsupported("the differential is only defined on 0-forms here".into()));
    }
    let cx = CurveComplex::new(conn)?;
    Ok(DeRhamForm::one_form(cx.differential(&form.coeffs), cx.label))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub reduced: DeRhamForm,
    pub exact: Vec<FringeElement>,
    pub degree: usize,
}

/// Writes `ω = reduced + ∇(exact)` with `reduced` in the window basis.
pub fn reduce_form(form: &DeRhamForm, conn: &Connection, t: &TruncationLevel) -> Result<Reduction, DerhamError> {
    if form.degree != 1 {
        return Err(DerhamError::Unsupported("reduce_form takes a 1-form".into()));
    }
    let mut cx = CurveComplex::new(conn)?;
    let size = form.coeffs.iter().filter_map(FringeElement::max_size).max().unwrap_or(0).max(0) as usize;
    let mut degree = t.degree.max(2 * size + 2 * STABILIZATION_STEP);
    let cap = degree * 4;
    loop {
        let level = cx.level(degree, None)?;
        let v = cx.form_vector(&form.coeffs);
        let (res, comb) = level.full.reduce(&v);
        if res.is_zero() {
            return Ok(assemble_reduction(&cx, &level, &comb.expect("history tracked")));
        }
        if degree >= cap {
            return Err(DerhamError::NotReduced { degree });
        }
        degree += STABILIZATION_STEP;
    }
}

fn assemble_reduction(cx: &CurveComplex, level: &Level, comb: &crate::arith::SparseVec<Scalar>) -> Reduction {
    let n = level.sections.len();
    let exact = cx.combination(&level.sections, comb, 0);
    let reduced = cx.combination(&level.window, comb, n);
    Reduction { reduced: DeRhamForm::one_form(reduced, cx.label), exact, degree: level.degree }
}

/// Cohomology at `t.degree` and `t.degree + STABILIZATION_STEP`, reported once both agree.
pub fn cohomology(conn: &Connection, t: &TruncationLevel) -> Result<CohomologyResult, DerhamError> {
    cohomology_at_levels(conn, &[t.degree, t.degree + STABILIZATION_STEP])
}

/// Cohomology over an explicit sweep of degree bounds; stable when the last two agree.
pub fn cohomology_at_levels(conn: &Connection, levels: &[usize]) -> Result<CohomologyResult, DerhamError> {
    if levels.is_empty() {
        return Err(DerhamError::Unsupported("empty truncation sweep".into()));
    }
    if !conn.is_integrable() {
        return Err(DerhamError::NotIntegrable);
    }
    let pres = conn.presentation();
    if pres.is_curve() {
        curve_cohomology(conn, levels)
    } else {
        kunneth_cohomology(conn, levels)
    }
}

pub(crate) struct CurveRun {
    pub complex: CurveComplex,
    pub level: Level,
    pub result: CohomologyResult,
}

pub(crate) fn curve_run(conn: &Connection, levels: &[usize]) -> Result<CurveRun, DerhamError> {
    let mut cx = CurveComplex::new(conn)?;
    let mut table = Vec::new();
    let mut last = None;
    let mut loss = 0;
    for &d in levels {
        let level = cx.level(d, None)?;
        table.push((d, vec![level.horizontal.len(), level.reps.len()]));
        loss = loss.max(level.loss);
        last = Some(level);
    }
    let level = last.unwrap();
    let n = table.len();
    if n >= 2 && table[n - 1].1 != table[n - 2].1 {
        return Err(DerhamError::NotStabilized { table });
    }
    let basis = vec![
        level.horizontal.iter().map(|s| DeRhamForm::section(s.clone())).collect(),
        level.reps.iter().map(|s| cx.rep_form(s)).collect(),
    ];
    let result = CohomologyResult {
        dims: table[n - 1].1.clone(),
        basis,
        stabilization: table,
        precision_loss: loss,
        window: level.window_size,
    };
    Ok(CurveRun { complex: cx, level, result })
}

fn curve_cohomology(conn: &Connection, levels: &[usize]) -> Result<CohomologyResult, DerhamError> {
    Ok(curve_run(conn, levels)?.result)
}

/// Restrict a coordinate-`i`-only element of an n-dimensional space to the line.
fn restrict_to_line(e: &FringeElement, i: usize, line: &Arc<Presentation>) -> Option<FringeElement> {
    let mut t = Terms::new();
    for (k, c) in e.terms() {
        if k.iter().enumerate().any(|(j, &x)| j != i && x != 0) {
            return None;
        }
        t.insert(vec![k[i]], c.clone());
    }
    FringeElement::from_terms(line, t).ok()
}

/// Split connections on `A^n` / `G_m^n`: direct sums of rank-one pieces whose
/// `i`-th matrix depends only on `x_i`. Cohomology is the Künneth product.
fn kunneth_cohomology(conn: &Connection, levels: &[usize]) -> Result<CohomologyResult, DerhamError> {
    let pres = conn.presentation();
    let line = match pres.kind() {
        PresentationKind::AffineSpace(_) => Presentation::affine_space(1, pres.spec())?,
        PresentationKind::Torus(_) => Presentation::torus(1, pres.spec())?,
        _ => return Err(DerhamError::Unsupported(format!("multivariable cohomology on {pres}"))),
    };
    let n = pres.dim();
    let r = conn.rank();
    let split_err = || {
        DerhamError::Unsupported(
            "only split (diagonal, one-variable) connections are supported in dimension > 1".into(),
        )
    };
    let mut per_level: Vec<Vec<usize>> = vec![vec![0; n + 1]; levels.len()];
    let mut loss = 0;
    for c in 0..r {
        let mut poly: Vec<Vec<usize>> = vec![vec![1]; levels.len()];
        for i in 0..n {
            let m = conn.matrix(i);
            for j in 0..r {
                if j != c && (!m.get(c, j).is_zero() || !m.get(j, c).is_zero()) {
                    return Err(split_err());
                }
            }
            let entry = restrict_to_line(m.get(c, c), i, &line).ok_or_else(split_err)?;
            let one = Connection::new(&line, vec![ElemMatrix::from_rows(&line, vec![vec![entry]])])?;
            let mut cx = CurveComplex::new(&one)?;
            for (li, &d) in levels.iter().enumerate() {
                let lv = cx.level(d, None)?;
                loss = loss.max(lv.loss);
                let f = [lv.horizontal.len(), lv.reps.len()];
                let mut next = vec![0; poly[li].len() + 1];
                for (a, x) in poly[li].iter().enumerate() {
                    for (b, y) in f.iter().enumerate() {
                        next[a + b] += x * y;
                    }
                }
                poly[li] = next;
            }
        }
        for (li, p) in poly.iter().enumerate() {
            for (k, v) in p.iter().enumerate() {
                per_level[li][k] += v;
            }
        }
    }
    let table: Vec<(usize, Vec<usize>)> = levels.iter().cloned().zip(per_level).collect();
    let m = table.len();
    if m >= 2 && table[m - 1].1 != table[m - 2].1 {
        return Err(DerhamError::NotStabilized { table });
    }
    Ok(CohomologyResult {
        dims: table[m - 1].1.clone(),
        basis: vec![Vec::new(); n + 1],
        stabilization: table,
        precision_loss: loss,
        window: 0,
    })
}
