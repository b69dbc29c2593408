//! The integration operator on towers of truncated disk sections and its homotopy identities.

use std::fmt;

use crate::arith::ArithError;
use crate::dagalg::FringeElement;

use super::DerhamError;

/// A polynomial in the disk coordinate `t`, coefficients low to high.
pub type DiskPoly = Vec<FringeElement>;

/// `t^r ↦ t^{r+1}/(r+1)`.
pub fn integrate(m: &[FringeElement]) -> Result<DiskPoly, DerhamError> {
    let Some(first) = m.first() else {
        return Ok(Vec::new());
    };
    let pres = first.presentation();
    let mut out = vec![FringeElement::zero(pres)];
    for (r, c) in m.iter().enumerate() {
        let k = pres.spec().int(r as i64 + 1);
        let inv = k.try_inv().map_err(|_| ArithError::PrecisionExhausted {
            context: format!("integrating t^{r} needs 1/{} at this precision", r + 1),
        })?;
        out.push(c.scale(&inv));
    }
    Ok(trim(out))
}

fn derivative(m: &[FringeElement]) -> DiskPoly {
    let out = m.iter().enumerate().skip(1).map(|(r, c)| c.scale(&c.presentation().spec().int(r as i64))).collect();
    trim(out)
}

fn trim(mut v: DiskPoly) -> DiskPoly {
    while v.last().is_some_and(FringeElement::is_zero) {
        v.pop();
    }
    v
}

fn add(a: &[FringeElement], b: &[FringeElement]) -> DiskPoly {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => x.add(y),
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => unreachable!(),
        })
        .collect();
    trim(out)
}

fn neg(a: &[FringeElement]) -> DiskPoly {
    a.iter().map(FringeElement::neg).collect()
}

fn equal(a: &[FringeElement], b: &[FringeElement]) -> bool {
    add(a, &neg(b)).is_empty()
}

/// Finite window `s_1, …, s_L` of an element of `∏ M_k`; restrictions are inclusions.
type Tower = Vec<DiskPoly>;

fn tower_integrate(s: &Tower) -> Result<Tower, DerhamError> {
    s.iter().skip(1).map(|x| integrate(x)).collect()
}

fn tower_derivative(s: &Tower) -> Tower {
    s.iter().map(|x| derivative(x)).collect()
}

fn tower_d(s: &Tower) -> Tower {
    s.windows(2).map(|w| add(&w[1], &neg(&w[0]))).collect()
}

fn tower_ip(s: &Tower) -> Tower {
    s.iter().skip(1).map(|x| trim(x.iter().take(1).cloned().collect())).collect()
}

fn tower_sub(a: &Tower, b: &Tower) -> Tower {
    a.iter().zip(b).map(|(x, y)| add(x, &neg(y))).collect()
}

fn tower_eq(a: &Tower, b: &Tower) -> bool {
    a.iter().zip(b).all(|(x, y)| equal(x, y))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomotopyReport {
    pub identities: Vec<(&'static str, bool)>,
    pub precision_loss: i64,
}

impl HomotopyReport {
    pub fn passed(&self) -> usize {
        self.identities.iter().filter(|(_, ok)| *ok).count()
    }

    pub fn all_pass(&self) -> bool {
        self.passed() == self.identities.len()
    }
}

impl fmt::Display for HomotopyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} identities pass", self.passed(), self.identities.len())
    }
}

/// Checks the three homotopy identities on the tower `s_j = t^{j-1} m`, `j = 1..level+2`.
///
/// `d` is taken as `s_{j+1} - s_j`; with `∫` lowering the index this is the sign for which
/// `∂∫ = Id + d` holds.
pub fn poincare_homotopy_check(m: &[FringeElement], level: usize) -> Result<HomotopyReport, DerhamError> {
    let m = trim(m.to_vec());
    let tower: Tower = (0..level + 2)
        .map(|j| {
            let mut shifted = Vec::new();
            if let Some(first) = m.first() {
                shifted = vec![FringeElement::zero(first.presentation()); j];
            }
            shifted.extend(m.iter().cloned());
            trim(shifted)
        })
        .collect();
    let int = tower_integrate(&tower)?;
    let d_int = tower_d(&int);
    let int_d = tower_integrate(&tower_d(&tower))?;
    let first = tower_eq(&d_int, &int_d);

    let del_int = tower_derivative(&int);
    let int_del = tower_integrate(&tower_derivative(&tower))?;
    let second = tower_eq(&tower_sub(&del_int, &int_del), &tower_ip(&tower));

    let id_d: Tower = tower.iter().zip(tower_d(&tower)).map(|(x, y)| add(x, &y)).collect();
    let third = tower_eq(&del_int, &id_d);

    let loss =
        int.iter().flatten().chain(del_int.iter().flatten()).map(FringeElement::precision_loss).max().unwrap_or(0);
    Ok(HomotopyReport {
        identities: vec![("d∫ - ∫d = 0", first), ("∂∫ - ∫∂ = i∘p", second), ("∂∫ = Id + d", third)],
        precision_loss: loss,
    })
}
