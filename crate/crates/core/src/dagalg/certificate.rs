use std::fmt;

use super::presentation::{Presentation, Terms};

/// Slope bound `val(a_k) >= ceil(|k| / level) - offset` on every stored coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Certificate {
    pub level: u32,
    pub offset: i64,
}

fn ceil_div(a: i64, n: i64) -> i64 {
    (a + n - 1).div_euclid(n)
}

impl Certificate {
    pub fn new(level: u32, offset: i64) -> Self {
        Certificate { level: level.max(1), offset }
    }

    /// Smallest offset this level needs for `terms`.
    fn required_offset(pres: &Presentation, terms: &Terms, level: u32) -> i64 {
        terms
            .iter()
            .filter_map(|(k, c)| c.valuation().map(|v| ceil_div(pres.key_size(k).max(0), level as i64) - v))
            .max()
            .unwrap_or(0)
    }

    pub fn holds(&self, pres: &Presentation, terms: &Terms) -> bool {
        Self::required_offset(pres, terms, self.level) <= self.offset
    }

    /// Least offset over levels up to the presentation's fringe cap, ties to the smaller level.
    pub fn tightest(pres: &Presentation, terms: &Terms) -> Self {
        let mut best = Certificate::new(1, Self::required_offset(pres, terms, 1));
        for n in 2..=pres.fringe_cap() {
            let c = Self::required_offset(pres, terms, n);
            if c < best.offset {
                best = Certificate::new(n, c);
            }
        }
        best
    }

    /// Keep `claim` if a full scan confirms it, otherwise fall back to the tightest one.
    pub fn verified(claim: Certificate, pres: &Presentation, terms: &Terms) -> Self {
        if claim.level <= pres.fringe_cap() && claim.holds(pres, terms) {
            claim
        } else {
            Self::tightest(pres, terms)
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, c={})", self.level, self.offset)
    }
}
